//! Every equilibrium and its stability over a sweep in luminosity.

use daisyworld::equilibria::enumerate_equilibria;
use daisyworld::{Params, Result};

fn main() -> Result<()> {
    let p = Params::default();
    for i in 0..=10 {
        let l = 0.6 + 0.1 * i as f64;
        let eqs = enumerate_equilibria(l, &p)?;
        let row: Vec<String> = eqs
            .iter()
            .map(|e| format!("{}({:.3},{:.3}) {}", e.label, e.state.alpha_w, e.state.alpha_b, e.stability))
            .collect();
        println!("L = {l:.1}: {}", row.join("; "));
    }
    Ok(())
}
