//! CSV and JSON exports. Floats are written with 17 significant digits,
//! comma separated, LF line endings and a header row.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde_json::json;

use crate::continuation::Branch;
use crate::equilibria::{Equilibrium, Label};
use crate::error::Result;
use crate::geometry::{BasinClass, BasinGrid, ManifoldCurve};
use crate::model;
use crate::params::Params;
use crate::solver::Trajectory;
use crate::tipping::TippingDiagram;

pub const EQUILIBRIA_HEADER: &str =
    "L,alpha_w,alpha_b,label,stability,re_lambda1,im_lambda1,re_lambda2,im_lambda2,T_e";

/// `x` with 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn equilibrium_fields(e: &Equilibrium) -> String {
    let [l1, l2] = e.eigenvalues;
    [
        num(e.luminosity),
        num(e.state.alpha_w),
        num(e.state.alpha_b),
        e.label.to_string(),
        e.stability.to_string(),
        num(l1.re),
        num(l1.im),
        num(l2.re),
        num(l2.im),
        num(e.t_e),
    ]
    .join(",")
}

pub fn write_equilibria<W: Write>(mut w: W, eqs: &[Equilibrium]) -> Result<()> {
    writeln!(w, "{EQUILIBRIA_HEADER}")?;
    for e in eqs {
        writeln!(w, "{}", equilibrium_fields(e))?;
    }
    Ok(())
}

/// Branch points in order, with each refined fold inserted after the
/// point preceding it and marked `fold = 1`.
pub fn write_branches<W: Write>(mut w: W, branches: &[(String, Branch)]) -> Result<()> {
    writeln!(w, "branch,{EQUILIBRIA_HEADER},fold")?;
    for (name, b) in branches {
        for (i, e) in b.points.iter().enumerate() {
            writeln!(w, "{name},{},0", equilibrium_fields(e))?;
            for f in b.folds.iter().filter(|f| f.segment == i) {
                writeln!(w, "{name},{},1", equilibrium_fields(&f.equilibrium))?;
            }
        }
    }
    Ok(())
}

pub fn write_folds<W: Write>(mut w: W, branches: &[(String, Branch)]) -> Result<()> {
    writeln!(w, "branch,L_fold,alpha_w,alpha_b")?;
    for (name, b) in branches {
        for f in &b.folds {
            let s = f.equilibrium.state;
            writeln!(w, "{name},{},{},{}", num(f.l_fold), num(s.alpha_w), num(s.alpha_b))?;
        }
    }
    Ok(())
}

/// `L` is taken from the trajectory's forcing, or `constant_l` for
/// autonomous runs; the column is omitted when neither is available.
pub fn write_trajectory<W: Write>(
    mut w: W,
    traj: &Trajectory,
    constant_l: Option<f64>,
    p: &Params,
) -> Result<()> {
    let with_l = traj.forcing.is_some() || constant_l.is_some();
    if with_l {
        writeln!(w, "t,alpha_w,alpha_b,L,T_e")?;
    } else {
        writeln!(w, "t,alpha_w,alpha_b")?;
    }
    for (i, (t, s)) in traj.times.iter().zip(&traj.states).enumerate() {
        if with_l {
            let l = traj.luminosity_at(i, constant_l.unwrap_or(f64::NAN));
            let t_e = model::climate(*s, l, p)?.t_e;
            writeln!(w, "{},{},{},{},{}", num(*t), num(s.alpha_w), num(s.alpha_b), num(l), num(t_e))?;
        } else {
            writeln!(w, "{},{},{}", num(*t), num(s.alpha_w), num(s.alpha_b))?;
        }
    }
    Ok(())
}

/// One row per `alpha_b` index (bottom row first), one column per
/// `alpha_w` index, entries as [`BasinClass::code`].
pub fn write_basin_matrix<W: Write>(mut w: W, grid: &BasinGrid) -> Result<()> {
    let n = grid.resolution;
    let header: Vec<String> = (0..n).map(|i| format!("i{i}")).collect();
    writeln!(w, "{}", header.join(","))?;
    for j in 0..n {
        let row: Vec<String> = (0..n).map(|i| grid.class_at(i, j).code().to_string()).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn basin_header(grid: &BasinGrid) -> serde_json::Value {
    let mut legend = serde_json::Map::new();
    for l in Label::ALL {
        legend.insert((l as i32).to_string(), json!(l.as_str()));
    }
    legend.insert(BasinClass::Invalid.code().to_string(), json!("invalid"));
    legend.insert(BasinClass::Unresolved.code().to_string(), json!("unresolved"));
    let attractors: Vec<_> = grid
        .attractors
        .iter()
        .map(|e| json!({"label": e.label.as_str(), "alpha_w": e.state.alpha_w, "alpha_b": e.state.alpha_b}))
        .collect();
    json!({
        "L": grid.luminosity,
        "resolution": grid.resolution,
        "cell_centers": "alpha = (index + 0.5) / resolution; rows are alpha_b, columns alpha_w",
        "legend": legend,
        "attractors": attractors,
        "unresolved": grid.unresolved,
    })
}

pub fn write_manifold<W: Write>(mut w: W, curve: &ManifoldCurve) -> Result<()> {
    writeln!(w, "s,alpha_w,alpha_b")?;
    let mut s = 0.0;
    let mut prev = curve.points.first().copied().unwrap_or([0.0; 2]);
    for x in &curve.points {
        s += (x[0] - prev[0]).hypot(x[1] - prev[1]);
        prev = *x;
        writeln!(w, "{},{},{}", num(s), num(x[0]), num(x[1]))?;
    }
    Ok(())
}

pub fn write_diagram<W: Write>(mut w: W, d: &TippingDiagram) -> Result<()> {
    writeln!(w, "r,delta_L,classification")?;
    for (i, r) in d.r_grid.iter().enumerate() {
        for (j, dl) in d.delta_l_grid.iter().enumerate() {
            writeln!(w, "{},{},{}", num(*r), num(*dl), d.cell(i, j).as_str())?;
        }
    }
    Ok(())
}

/// Rates without a bracketed threshold get an empty `delta_L_crit`.
pub fn write_critical_curve<W: Write>(mut w: W, d: &TippingDiagram) -> Result<()> {
    writeln!(w, "r,delta_L_crit")?;
    for (r, c) in d.r_grid.iter().zip(&d.critical) {
        writeln!(w, "{},{}", num(*r), c.map(num).unwrap_or_default())?;
    }
    Ok(())
}

/// Create `path` (and its parent directories) and hand a buffered writer to `f`.
pub fn write_file<F>(path: &Path, f: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<fs::File>) -> Result<()>,
{
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut w = BufWriter::new(fs::File::create(path)?);
    f(&mut w)?;
    w.flush()?;
    Ok(())
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    write_file(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        writeln!(w)?;
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibria::enumerate_equilibria;

    #[test]
    fn numbers_keep_seventeen_digits() {
        assert_eq!(num(0.1), "1.0000000000000001e-1");
        assert_eq!(num(0.1).parse::<f64>().unwrap(), 0.1);
        assert_eq!(num(-2.5), "-2.5000000000000000e0");
    }

    #[test]
    fn equilibria_csv_shape() {
        let p = Params::default();
        let eqs = enumerate_equilibria(1.0, &p).unwrap();
        let mut out = Vec::new();
        write_equilibria(&mut out, &eqs).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(!text.contains('\r'));
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], EQUILIBRIA_HEADER);
        assert_eq!(lines.len(), eqs.len() + 1);
        assert!(lines.iter().skip(1).all(|l| l.split(',').count() == 10));
        assert!(lines.iter().any(|l| l.contains(",e5,")));
    }
}
