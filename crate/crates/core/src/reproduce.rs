//! The figure-data bundle: one dataset per figure panel, written under a
//! single output directory.

use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::json;

use crate::config::{BranchStart, RunConfig};
use crate::continuation::{self, Branch};
use crate::equilibria::{self, coexistence_analytic, enumerate_equilibria, Label, Stability};
use crate::error::{Error, Result};
use crate::geometry::{self, ManifoldOptions};
use crate::io::{self, num};
use crate::params::Params;
use crate::tipping::{self, ExperimentOptions, ForcingSpec};

/// Files written so far, relative to the output directory.
#[derive(Debug, Default)]
pub struct Outputs {
    root: PathBuf,
    pub files: Vec<String>,
}

impl Outputs {
    pub fn new(root: &Path) -> Self {
        Outputs { root: root.to_path_buf(), files: Vec::new() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.root.join(name)
    }
}

/// Short luminosity tag for file names.
pub fn l_tag(l: f64) -> String {
    format!("L{l:.4}")
}

/// Continue every configured branch, in parallel, keeping config order.
pub fn continue_all(cfg: &RunConfig, workers: Option<usize>) -> Result<Vec<(String, Branch)>> {
    let c = &cfg.continuation;
    let run = |s: &BranchStart| -> Result<(String, Branch)> {
        let start = equilibria::find_equilibrium(s.label, s.luminosity, &cfg.params)?;
        let opts = continuation::ContinuationOptions { direction: s.direction, ..c.options };
        let b = continuation::continue_branch(&start, (c.l_range[0], c.l_range[1]), &opts, &cfg.params)?;
        Ok((s.name(), b))
    };
    geometry::with_workers(workers, || c.starts.par_iter().map(run).collect::<Result<Vec<_>>>())?
}

/// Saddles at `l` whose stable manifolds are drawn in phase portraits.
pub fn saddles(l: f64, p: &Params) -> Result<Vec<equilibria::Equilibrium>> {
    Ok(enumerate_equilibria(l, p)?.into_iter().filter(|e| e.stability == Stability::Saddle).collect())
}

/// Basin-instability threshold of `e5(l_min)`, searched up to `l_max` and,
/// failing that, up to just below the white fold.
pub fn l_bi_for(l_min: f64, l_max: f64, cfg: &RunConfig) -> Result<f64> {
    let p = &cfg.params;
    let e5 = coexistence_analytic(l_min, p)?
        .ok_or_else(|| Error::Configuration(format!("no coexistence state at L = {l_min}")))?;
    geometry::find_l_bi(&e5, (l_min, l_max), 1e-5, &cfg.integrator, p)
        .or_else(|_| geometry::find_l_bi(&e5, (l_min, 1.55), 1e-5, &cfg.integrator, p))
}

type Task<'a> = (&'static str, Box<dyn Fn(&mut Outputs) -> Result<()> + Sync + 'a>);

/// Write every dataset; a failing dataset is reported and the rest still run.
pub fn reproduce_figures_data(cfg: &RunConfig, out: &mut Outputs) -> Vec<(String, Error)> {
    let p = cfg.params;
    let workers = cfg.workers;
    let rc = &cfg.reproduce;
    let tip = cfg.tip;

    let tasks: Vec<Task> = vec![
        (
            "branches",
            Box::new(|out| {
                let branches = continue_all(cfg, workers)?;
                io::write_file(&out.path("fig1a_branches.csv"), |w| io::write_branches(w, &branches))?;
                io::write_file(&out.path("fig1a_folds.csv"), |w| io::write_folds(w, &branches))?;
                io::write_file(&out.path("fig2_emission_temperature.csv"), |w| {
                    writeln!(w, "branch,L,label,stability,T_e")?;
                    for (name, b) in &branches {
                        for e in &b.points {
                            writeln!(w, "{name},{},{},{},{}", num(e.luminosity), e.label, e.stability, num(e.t_e))?;
                        }
                    }
                    Ok(())
                })
            }),
        ),
        (
            "phase-portraits",
            Box::new(|out| {
                for &l in &rc.portrait_luminosities {
                    let eqs = enumerate_equilibria(l, &p)?;
                    io::write_file(&out.path(&format!("fig1b_{}_equilibria.csv", l_tag(l))), |w| {
                        io::write_equilibria(w, &eqs)
                    })?;
                    for s in saddles(l, &p)? {
                        let curve = geometry::stable_manifold(&s, &ManifoldOptions::default(), &p)?;
                        let name = format!("fig1b_{}_manifold_{}.csv", l_tag(l), s.label);
                        io::write_file(&out.path(&name), |w| io::write_manifold(w, &curve))?;
                    }
                }
                Ok(())
            }),
        ),
        (
            "b-tipping-ramps",
            Box::new(|out| {
                let ramps = [("white", Label::E2, 1.4, 1.6), ("black", Label::E4, 0.7, 0.6)];
                let mut summary = Vec::new();
                for (name, label, from, to) in ramps {
                    let start = equilibria::find_equilibrium(label, from, &p)?;
                    let r = continuation::quasistatic_ramp(&start, to, rc.ramp_rate, &cfg.integrator, &p)?;
                    io::write_file(&out.path(&format!("fig3_ramp_{name}.csv")), |w| {
                        io::write_trajectory(w, &r.trajectory, None, &p)
                    })?;
                    summary.push(json!({
                        "ramp": name, "start": label.as_str(), "L_start": from, "L_end": to,
                        "rate": rc.ramp_rate, "collapsed": r.collapsed,
                        "settled_on": r.settled.label().map(|l| l.as_str()),
                    }));
                }
                io::write_json(&out.path("fig3_ramps.json"), &json!(summary))
            }),
        ),
        (
            "r-tipping",
            Box::new(|out| {
                let opts = ExperimentOptions { integrator: cfg.integrator, check_manifold: true, ..Default::default() };
                let mut summary = Vec::new();
                for &r in &rc.showcase_rates {
                    let f = ForcingSpec::new(tip.l_min, tip.delta_l, r);
                    let o = tipping::run_experiment(&f, &opts, &p)?;
                    io::write_file(&out.path(&format!("fig4_trajectory_r{r}.csv")), |w| {
                        io::write_trajectory(w, &o.trajectory, None, &p)
                    })?;
                    summary.push(json!({
                        "L_min": f.l_min, "delta_L": f.delta_l, "r": r,
                        "classification": o.classification.as_str(),
                        "final_attractor": o.final_attractor.map(|l| l.as_str()),
                        "crossed_manifold": o.crossed_manifold,
                        "window_end": o.window_end,
                    }));
                }
                io::write_json(&out.path("fig4_outcomes.json"), &json!(summary))?;
                io::write_file(&out.path("fig4_manifold_surface.csv"), |w| {
                    writeln!(w, "L,s,alpha_w,alpha_b")?;
                    for &l in &rc.surface_luminosities {
                        let Ok(e1) = equilibria::find_equilibrium(Label::E1, l, &p) else {
                            continue;
                        };
                        let curve = geometry::stable_manifold(&e1, &ManifoldOptions::default(), &p)?;
                        let mut s = 0.0;
                        let mut prev = curve.points[0];
                        for x in &curve.points {
                            s += (x[0] - prev[0]).hypot(x[1] - prev[1]);
                            prev = *x;
                            writeln!(w, "{},{},{},{}", num(l), num(s), num(x[0]), num(x[1]))?;
                        }
                    }
                    Ok(())
                })
            }),
        ),
        (
            "basin-instability",
            Box::new(|out| {
                let l_bi = l_bi_for(tip.l_min, tip.l_max(), cfg)?;
                let mut meta = Vec::new();
                for (tag, l) in [("L_BI", l_bi), ("L_max", tip.l_max())] {
                    let grid = geometry::basin_grid(l, cfg.basins.resolution, &cfg.integrator, workers, &p)?;
                    io::write_file(&out.path(&format!("figbi_basins_{tag}.csv")), |w| {
                        io::write_basin_matrix(w, &grid)
                    })?;
                    io::write_json(&out.path(&format!("figbi_basins_{tag}.json")), &io::basin_header(&grid))?;
                    meta.push(json!({"tag": tag, "L": l}));
                    if let Ok(e1) = equilibria::find_equilibrium(Label::E1, l, &p) {
                        if e1.stability == Stability::Saddle {
                            let curve = geometry::stable_manifold(&e1, &ManifoldOptions::default(), &p)?;
                            io::write_file(&out.path(&format!("figbi_manifold_{tag}.csv")), |w| {
                                io::write_manifold(w, &curve)
                            })?;
                        }
                    }
                }
                let e5 = coexistence_analytic(tip.l_min, &p)?.expect("checked by l_bi_for");
                io::write_json(
                    &out.path("figbi_summary.json"),
                    &json!({
                        "L_min": tip.l_min,
                        "e5_L_min": [e5.state.alpha_w, e5.state.alpha_b],
                        "L_BI": l_bi,
                        "grids": meta,
                    }),
                )
            }),
        ),
        (
            "tipping-diagram",
            Box::new(|out| {
                if !rc.diagram {
                    return Ok(());
                }
                let files = write_diagram(cfg, out)?;
                log::info!("diagram written: {files:?}");
                Ok(())
            }),
        ),
    ];

    let mut failures = Vec::new();
    for (name, task) in &tasks {
        log::info!("dataset {name}");
        if let Err(e) = task(out) {
            log::error!("dataset {name} failed: {e}");
            failures.push((name.to_string(), e));
        }
    }
    failures
}

/// Diagram, critical curve and the L_BI comparison.
pub fn write_diagram(cfg: &RunConfig, out: &mut Outputs) -> Result<Vec<String>> {
    let d = &cfg.diagram;
    let opts = ExperimentOptions { integrator: cfg.integrator, ..Default::default() };
    let diagram = tipping::tipping_diagram(
        d.l_min,
        &d.r_grid(),
        &d.delta_l_grid(),
        d.refine_tolerance,
        &opts,
        cfg.workers,
        &cfg.params,
    )?;
    let before = out.files.len();
    io::write_file(&out.path("fig5_diagram.csv"), |w| io::write_diagram(w, &diagram))?;
    io::write_file(&out.path("fig5_critical.csv"), |w| io::write_critical_curve(w, &diagram))?;
    let l_bi = l_bi_for(d.l_min, d.l_min + d.delta_l_max, cfg);
    let largest_r = diagram.r_grid.last().copied();
    let large_r_critical = diagram.critical.last().copied().flatten();
    let summary = json!({
        "L_min": d.l_min,
        "L_BI": l_bi.as_ref().ok(),
        "L_BI_minus_L_min": l_bi.as_ref().ok().map(|l| l - d.l_min),
        "L_BI_error": l_bi.as_ref().err().map(|e| e.to_string()),
        "largest_r": largest_r,
        "critical_delta_L_at_largest_r": large_r_critical,
        "unresolved_cells": diagram.unresolved(),
    });
    io::write_json(&out.path("fig5_summary.json"), &summary)?;
    Ok(out.files[before..].to_vec())
}
