//! Albedo, local temperatures and growth rates for a few cover states.

use daisyworld::model::{self, State};
use daisyworld::{Params, Result};

fn main() -> Result<()> {
    let p = Params::default();
    let l = 1.0;
    println!("L = {l}, q = {:.4e}", p.q);
    println!("{:>8} {:>8} {:>7} {:>8} {:>8} {:>8} {:>8} {:>8}", "alpha_w", "alpha_b", "A", "T_e", "T_w", "T_b", "beta_w", "beta_b");
    for (w, b) in [(0.0, 0.0), (0.5, 0.0), (0.0, 0.5), (0.3, 0.1), (0.6, 0.2)] {
        let s = State::new(w, b);
        let c = model::climate(s, l, &p)?;
        println!(
            "{w:>8.3} {b:>8.3} {:>7.4} {:>8.3} {:>8.3} {:>8.3} {:>8.4} {:>8.4}",
            c.albedo,
            c.t_e,
            c.t_w,
            c.t_b,
            model::growth_rate(c.t_w, &p),
            model::growth_rate(c.t_b, &p)
        );
    }
    let f = model::rhs(State::new(0.3, 0.3), l, &p)?;
    println!("d/dt (alpha_w, alpha_b) at (0.3, 0.3): ({:.5}, {:.5})", f[0], f[1]);
    Ok(())
}
