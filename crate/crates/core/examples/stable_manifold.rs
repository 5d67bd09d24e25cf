//! Stable manifold of the white-axis saddle, and on which side of it a few
//! points fall relative to the coexistence state.

use daisyworld::equilibria::find_equilibrium;
use daisyworld::geometry::stable_manifold;
use daisyworld::{Label, ManifoldOptions, Params, Result};

fn main() -> Result<()> {
    let p = Params::default();
    let l = 1.3;
    let saddle = find_equilibrium(Label::E1, l, &p)?;
    let e5 = find_equilibrium(Label::E5, l, &p)?.state.to_array();
    let curve = stable_manifold(&saddle, &ManifoldOptions::default(), &p)?;
    println!(
        "W^s(e1) at L = {l}: {} points, arclength {:.3}, ends {:?} / {:?}",
        curve.points.len(),
        curve.arclength(),
        curve.halves[0].end,
        curve.halves[1].end
    );
    for x in [[0.05, 0.01], [0.15, 0.02], [0.25, 0.05], [0.5, 0.1]] {
        println!(
            "  ({:.2}, {:.2}): distance {:.4}, cut off from e5 = {}",
            x[0],
            x[1],
            curve.distance_to(x),
            curve.separates(x, e5)
        );
    }
    Ok(())
}
