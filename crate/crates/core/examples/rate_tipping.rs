//! Same luminosity rise at two rates: the slow one tracks the coexistence
//! state, the fast one tips to bare ground. Then the critical rate.

use daisyworld::tipping::{critical_rate, run_experiment};
use daisyworld::{ExperimentOptions, ForcingSpec, Params, Result};

fn main() -> Result<()> {
    let p = Params::default();
    let (l_min, delta_l) = (0.8, 0.4);
    let opts = ExperimentOptions { check_manifold: true, ..Default::default() };
    for r in [0.5, 1.0] {
        let o = run_experiment(&ForcingSpec::new(l_min, delta_l, r), &opts, &p)?;
        println!(
            "r = {r}: {} (ends on {:?}, crossed W^s(e1) = {:?})",
            o.classification.as_str(),
            o.final_attractor,
            o.crossed_manifold
        );
    }
    let c = critical_rate(l_min, delta_l, (0.1, 10.0), 1e-4, &ExperimentOptions::default(), &p)?;
    println!("critical rate r_c = {:.5} for delta_L = {delta_l}", c.r_c);
    Ok(())
}
