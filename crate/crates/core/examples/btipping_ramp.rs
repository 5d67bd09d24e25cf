//! Slow ramps past each fold: the daisy state collapses to bare ground.

use daisyworld::continuation::quasistatic_ramp;
use daisyworld::equilibria::find_equilibrium;
use daisyworld::{IntegratorOptions, Label, Params, Result};

fn main() -> Result<()> {
    let p = Params::default();
    let opts = IntegratorOptions::default();
    for (label, from, to) in [(Label::E2, 1.4, 1.6), (Label::E4, 0.7, 0.6), (Label::E2, 1.4, 1.5)] {
        let start = find_equilibrium(label, from, &p)?;
        let out = quasistatic_ramp(&start, to, 1e-3, &opts, &p)?;
        let end = out.settled.state();
        println!(
            "{label}: L {from} -> {to}: collapsed = {}, settled on {:?} at ({:.4}, {:.4})",
            out.collapsed,
            out.settled.label(),
            end.alpha_w,
            end.alpha_b
        );
    }
    Ok(())
}
