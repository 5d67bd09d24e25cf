//! Follow the white-daisy branch through its fold and the black-daisy
//! branch through its own.

use daisyworld::continuation::continue_branch;
use daisyworld::equilibria::find_equilibrium;
use daisyworld::{ContinuationOptions, Direction, Label, Params, Result};

fn main() -> Result<()> {
    let p = Params::default();
    for (label, l0, direction) in [(Label::E2, 1.4, Direction::Increasing), (Label::E4, 0.8, Direction::Decreasing)] {
        let start = find_equilibrium(label, l0, &p)?;
        let opts = ContinuationOptions { direction, ..Default::default() };
        let b = continue_branch(&start, (0.5, 1.7), &opts, &p)?;
        let (lo, hi) = b.l_span();
        println!(
            "{label}@{l0}: {} points, L in [{lo:.4}, {hi:.4}], arclength {:.3}, ends {:?}",
            b.points.len(),
            b.arclength.last().copied().unwrap_or(0.0),
            b.termination
        );
        for f in &b.folds {
            let s = f.equilibrium.state;
            println!("  fold at L = {:.6} ({:.4}, {:.4})", f.l_fold, s.alpha_w, s.alpha_b);
        }
    }
    Ok(())
}
