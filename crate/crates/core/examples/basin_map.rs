//! Coarse basin-of-attraction map drawn as text.

use daisyworld::geometry::basin_grid;
use daisyworld::{BasinClass, IntegratorOptions, Label, Params, Result};

fn main() -> Result<()> {
    let p = Params::default();
    let l = 1.2;
    let n = 40;
    let grid = basin_grid(l, n, &IntegratorOptions::default(), None, &p)?;
    println!("L = {l}, {n}x{n} cells, alpha_b upwards, alpha_w to the right");
    for j in (0..n).rev() {
        let row: String = (0..n)
            .map(|i| match grid.class_at(i, j) {
                BasinClass::Attractor(Label::E0) => '.',
                BasinClass::Attractor(Label::E5) => '#',
                BasinClass::Attractor(_) => 'o',
                BasinClass::Invalid => ' ',
                BasinClass::Unresolved => '?',
            })
            .collect();
        println!("{row}");
    }
    for label in [Label::E0, Label::E5] {
        println!("{label}: {:.1}% of the simplex", 100.0 * grid.area_fraction(label));
    }
    Ok(())
}
