//! Small (r, delta_L) diagram with the refined critical amplitude per rate.

use daisyworld::tipping::{lin_space, log_space, tipping_diagram};
use daisyworld::{ExperimentOptions, Params, Result};

fn main() -> Result<()> {
    let p = Params::default();
    let r = log_space(0.05, 20.0, 9);
    let dl = lin_space(0.3, 0.7, 9);
    let d = tipping_diagram(0.8, &r, &dl, 1e-4, &ExperimentOptions::default(), None, &p)?;
    print!("{:>8}", "r \\ dL");
    for x in &dl {
        print!("{x:>6.2}");
    }
    println!("  dL_crit");
    for (i, ri) in r.iter().enumerate() {
        print!("{ri:>8.3}");
        for j in 0..dl.len() {
            let c = match d.cell(i, j).as_str() {
                "tip" => "T",
                "track" => "-",
                "no-coexistence" => "x",
                _ => "?",
            };
            print!("{c:>6}");
        }
        println!("  {}", d.critical[i].map(|c| format!("{c:.4}")).unwrap_or_default());
    }
    Ok(())
}
