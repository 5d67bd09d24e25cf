//! Rate-induced tipping under the tanh luminosity ramp.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equilibria::{self, coexistence_analytic, enumerate_equilibria, Label};
use crate::error::{Error, Result};
use crate::geometry::{self, ManifoldOptions};
use crate::model::State;
use crate::params::Params;
use crate::solver::{self, Convergence, Forcing, IntegratorOptions, Trajectory};

/// The forced run covers `t` in `[-WINDOW / r, WINDOW / r]`.
pub const WINDOW: f64 = 8.0;
/// Stand-in for `r = infinity` when probing a failed bracket.
pub const FAST_PROBE_RATE: f64 = 1e3;
/// Stand-in for `r = 0`.
pub const SLOW_PROBE_RATE: f64 = 1e-3;

/// `L(t) = l_min + delta_l (tanh(r t) + 1) / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForcingSpec {
    pub l_min: f64,
    pub delta_l: f64,
    pub r: f64,
}

impl ForcingSpec {
    pub fn new(l_min: f64, delta_l: f64, r: f64) -> Self {
        ForcingSpec { l_min, delta_l, r }
    }

    pub fn l_max(&self) -> f64 {
        self.l_min + self.delta_l
    }

    pub fn window(&self) -> (f64, f64) {
        (-WINDOW / self.r, WINDOW / self.r)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = self.l_min.is_finite() && self.delta_l.is_finite() && self.r.is_finite();
        if !finite || self.l_min <= 0.0 || self.delta_l < 0.0 || self.r <= 0.0 {
            return Err(Error::Configuration(format!(
                "forcing needs L_min > 0, delta_L >= 0 and r > 0 (got {self:?})"
            )));
        }
        Ok(())
    }
}

impl Forcing for ForcingSpec {
    fn luminosity(&self, t: f64) -> f64 {
        self.l_min + 0.5 * self.delta_l * ((self.r * t).tanh() + 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Classification {
    Tip,
    Track,
    Unresolved,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Classification::Tip => "tip",
            Classification::Track => "track",
            Classification::Unresolved => "unresolved",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentOptions {
    pub integrator: IntegratorOptions,
    /// Demand that the coexistence state exists and is stable on all of
    /// `[L_min, L_max]`. Slow-ramp studies past its range switch this off.
    pub require_coexistence_range: bool,
    /// Keep the frozen settling phase in the returned trajectory.
    pub record_settling: bool,
    /// Test the trajectory against the saddle's stable manifold.
    pub check_manifold: bool,
    pub manifold_samples: usize,
    pub manifold: ManifoldOptions,
}

impl Default for ExperimentOptions {
    fn default() -> Self {
        ExperimentOptions {
            integrator: IntegratorOptions::default(),
            require_coexistence_range: true,
            record_settling: true,
            check_manifold: false,
            manifold_samples: 40,
            manifold: ManifoldOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TippingOutcome {
    pub forcing: ForcingSpec,
    pub classification: Classification,
    pub final_attractor: Option<Label>,
    /// Forced window followed, when recorded, by the frozen settling run.
    pub trajectory: Trajectory,
    /// Time at which the forced window ends.
    pub window_end: f64,
    /// `None` unless the manifold check was requested.
    pub crossed_manifold: Option<bool>,
}

/// Samples used to check the coexistence state along `[l_min, l_max]`.
const RANGE_SAMPLES: usize = 32;

/// Error naming the first L in `[l_min, l_max]` where the coexistence state
/// is missing or not stable.
pub fn check_coexistence_range(l_min: f64, l_max: f64, p: &Params) -> Result<()> {
    for i in 0..=RANGE_SAMPLES {
        let l = l_min + (l_max - l_min) * i as f64 / RANGE_SAMPLES as f64;
        match coexistence_analytic(l, p)? {
            Some(e) if e.is_stable() => {}
            Some(e) => {
                return Err(Error::Configuration(format!(
                    "coexistence state is {} at L = {l}",
                    e.stability
                )))
            }
            None => return Err(Error::Configuration(format!("no coexistence state at L = {l}"))),
        }
        if l_max == l_min {
            break;
        }
    }
    Ok(())
}

fn classify(c: &Convergence) -> Classification {
    match c.label() {
        Some(Label::E0) => Classification::Tip,
        Some(_) => Classification::Track,
        None => Classification::Unresolved,
    }
}

/// Start on the coexistence state at `l_min`, ramp, then let the frozen
/// system at `l_max` settle.
pub fn run_experiment(f: &ForcingSpec, opts: &ExperimentOptions, p: &Params) -> Result<TippingOutcome> {
    f.validate()?;
    p.validate()?;
    if opts.require_coexistence_range {
        check_coexistence_range(f.l_min, f.l_max(), p)?;
    }
    let start = coexistence_analytic(f.l_min, p)?
        .ok_or_else(|| Error::Configuration(format!("no coexistence state at L = {}", f.l_min)))?;
    let (t0, t1) = f.window();
    let mut trajectory = solver::integrate_forced(start.state, f, (t0, t1), &opts.integrator, p)?;
    let end = trajectory.last_state().unwrap_or(start.state);
    let l_max = f.l_max();
    let known = enumerate_equilibria(l_max, p)?;

    let settled = if opts.record_settling {
        let mut times = Vec::new();
        let mut states = Vec::new();
        let settled = solver::converge_with_observer(end, l_max, &known, &opts.integrator, p, |t, y| {
            times.push(t1 + t);
            states.push(State::from_array(*y));
        })?;
        let lums = trajectory.forcing.get_or_insert_with(Vec::new);
        lums.extend(std::iter::repeat_n(l_max, times.len()));
        trajectory.times.extend(times);
        trajectory.states.extend(states);
        settled
    } else {
        solver::converge_to_attractor(end, l_max, &known, &opts.integrator, p)?
    };

    let classification = classify(&settled);
    let crossed_manifold = if opts.check_manifold {
        Some(crosses_manifold(f, &trajectory, t1, opts, p)?)
    } else {
        None
    };
    Ok(TippingOutcome {
        forcing: *f,
        classification,
        final_attractor: settled.label(),
        trajectory,
        window_end: t1,
        crossed_manifold,
    })
}

/// Whether the trajectory is ever found on the far side of the white-axis
/// saddle's stable manifold from the coexistence state.
fn crosses_manifold(
    f: &ForcingSpec,
    trajectory: &Trajectory,
    window_end: f64,
    opts: &ExperimentOptions,
    p: &Params,
) -> Result<bool> {
    let n = opts.manifold_samples.max(2);
    let (t0, _) = f.window();
    let mut idx = 0;
    for k in 0..=n {
        let t = t0 + (window_end - t0) * k as f64 / n as f64;
        while idx + 1 < trajectory.len() && trajectory.times[idx + 1] <= t {
            idx += 1;
        }
        let l = trajectory.luminosity_at(idx, f.l_max());
        let Ok(e1) = equilibria::find_equilibrium(Label::E1, l, p) else {
            continue;
        };
        let Some(e5) = coexistence_analytic(l, p)? else {
            continue;
        };
        if e1.stability != equilibria::Stability::Saddle {
            continue;
        }
        let curve = geometry::stable_manifold(&e1, &opts.manifold, p)?;
        if curve.separates(trajectory.states[idx].to_array(), e5.state.to_array()) {
            return Ok(true);
        }
    }
    Ok(false)
}

fn tips(f: &ForcingSpec, opts: &ExperimentOptions, p: &Params) -> Result<bool> {
    let quiet = ExperimentOptions { record_settling: false, check_manifold: false, ..*opts };
    let out = run_experiment(f, &quiet, p)?;
    match out.classification {
        Classification::Tip => Ok(true),
        Classification::Track => Ok(false),
        Classification::Unresolved => Err(Error::Unresolved {
            time: out.trajectory.last_time().unwrap_or(f64::NAN),
        }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalRate {
    pub l_min: f64,
    pub delta_l: f64,
    /// Geometric midpoint of the final bracket.
    pub r_c: f64,
    /// Largest rate seen to track.
    pub tracks_at: f64,
    /// Smallest rate seen to tip.
    pub tips_at: f64,
}

/// Bisection in `log r` for the rate separating tracking from tipping.
pub fn critical_rate(
    l_min: f64,
    delta_l: f64,
    r_bracket: (f64, f64),
    rel_tol: f64,
    opts: &ExperimentOptions,
    p: &Params,
) -> Result<CriticalRate> {
    let (mut lo, mut hi) = r_bracket;
    if !(lo > 0.0 && lo < hi && rel_tol > 0.0) {
        return Err(Error::InvalidBracket(format!("rates [{lo}, {hi}] with tolerance {rel_tol}")));
    }
    let at = |r: f64| ForcingSpec::new(l_min, delta_l, r);
    let lo_tips = tips(&at(lo), opts, p)?;
    let hi_tips = tips(&at(hi), opts, p)?;
    if lo_tips || !hi_tips {
        if !tips(&at(FAST_PROBE_RATE), opts, p)? {
            return Err(Error::AlwaysTracks { delta_l, probe_rate: FAST_PROBE_RATE });
        }
        if tips(&at(SLOW_PROBE_RATE), opts, p)? {
            return Err(Error::AlwaysTips { delta_l, probe_rate: SLOW_PROBE_RATE });
        }
        return Err(Error::InvalidBracket(format!(
            "rate bracket [{lo}, {hi}] does not straddle the critical rate for delta_L = {delta_l}"
        )));
    }
    while hi / lo - 1.0 > rel_tol {
        let mid = (lo * hi).sqrt();
        if tips(&at(mid), opts, p)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(CriticalRate { l_min, delta_l, r_c: (lo * hi).sqrt(), tracks_at: lo, tips_at: hi })
}

/// Smallest `delta_L` in `bracket` that tips at rate `r`, to `tol`.
pub fn critical_delta_l(
    l_min: f64,
    r: f64,
    bracket: (f64, f64),
    tol: f64,
    opts: &ExperimentOptions,
    p: &Params,
) -> Result<f64> {
    let (mut lo, mut hi) = bracket;
    if !(lo < hi && tol > 0.0) {
        return Err(Error::InvalidBracket(format!("delta_L [{lo}, {hi}] with tolerance {tol}")));
    }
    let at = |dl: f64| ForcingSpec::new(l_min, dl, r);
    if tips(&at(lo), opts, p)? {
        return Err(Error::InvalidBracket(format!("already tips at delta_L = {lo}, r = {r}")));
    }
    if !tips(&at(hi), opts, p)? {
        return Err(Error::InvalidBracket(format!("still tracks at delta_L = {hi}, r = {r}")));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if tips(&at(mid), opts, p)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiagramCell {
    Tip,
    Track,
    Unresolved,
    /// The coexistence state is missing somewhere in `[L_min, L_max]`.
    NoCoexistence,
}

impl DiagramCell {
    pub fn as_str(self) -> &'static str {
        match self {
            DiagramCell::Tip => "tip",
            DiagramCell::Track => "track",
            DiagramCell::Unresolved => "unresolved",
            DiagramCell::NoCoexistence => "no-coexistence",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagramOptions {
    pub l_min: f64,
    pub r_min: f64,
    pub r_max: f64,
    pub r_points: usize,
    pub delta_l_min: f64,
    pub delta_l_max: f64,
    pub delta_l_points: usize,
    /// Width to which each critical delta_L is refined.
    pub refine_tolerance: f64,
}

impl Default for DiagramOptions {
    fn default() -> Self {
        DiagramOptions {
            l_min: 0.8,
            r_min: 1e-2,
            r_max: 1e2,
            r_points: 25,
            delta_l_min: 0.1,
            delta_l_max: 0.8,
            delta_l_points: 29,
            refine_tolerance: 1e-5,
        }
    }
}

impl DiagramOptions {
    pub fn r_grid(&self) -> Vec<f64> {
        log_space(self.r_min, self.r_max, self.r_points)
    }

    pub fn delta_l_grid(&self) -> Vec<f64> {
        lin_space(self.delta_l_min, self.delta_l_max, self.delta_l_points)
    }
}

pub fn lin_space(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![a],
        _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
    }
}

pub fn log_space(a: f64, b: f64, n: usize) -> Vec<f64> {
    lin_space(a.ln(), b.ln(), n).into_iter().map(f64::exp).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TippingDiagram {
    pub l_min: f64,
    pub r_grid: Vec<f64>,
    pub delta_l_grid: Vec<f64>,
    /// `cells[i * delta_l_grid.len() + j]` holds `(r_grid[i], delta_l_grid[j])`.
    pub cells: Vec<DiagramCell>,
    /// Refined critical delta_L per rate; `None` when no grid row brackets it.
    pub critical: Vec<Option<f64>>,
}

impl TippingDiagram {
    pub fn cell(&self, i_r: usize, j_dl: usize) -> DiagramCell {
        self.cells[i_r * self.delta_l_grid.len() + j_dl]
    }

    pub fn unresolved(&self) -> usize {
        self.cells.iter().filter(|c| **c == DiagramCell::Unresolved).count()
    }
}

fn sorted_positive(v: &[f64]) -> bool {
    !v.is_empty() && v.iter().all(|x| *x > 0.0 && x.is_finite()) && v.windows(2).all(|w| w[0] < w[1])
}

/// Classify every `(r, delta_L)` pair, then refine the critical delta_L per
/// rate between the first bracketing pair of rows.
pub fn tipping_diagram(
    l_min: f64,
    r_grid: &[f64],
    delta_l_grid: &[f64],
    refine_tolerance: f64,
    opts: &ExperimentOptions,
    workers: Option<usize>,
    p: &Params,
) -> Result<TippingDiagram> {
    if !sorted_positive(r_grid) || !sorted_positive(delta_l_grid) {
        return Err(Error::Configuration("diagram grids must be positive and increasing".into()));
    }
    let valid: Vec<bool> = delta_l_grid
        .iter()
        .map(|&dl| check_coexistence_range(l_min, l_min + dl, p).is_ok())
        .collect();
    let n_dl = delta_l_grid.len();
    let quiet = ExperimentOptions { record_settling: false, check_manifold: false, ..*opts };

    let cell = |idx: usize| -> Result<DiagramCell> {
        let (i, j) = (idx / n_dl, idx % n_dl);
        if !valid[j] {
            return Ok(DiagramCell::NoCoexistence);
        }
        let out = run_experiment(&ForcingSpec::new(l_min, delta_l_grid[j], r_grid[i]), &quiet, p)?;
        Ok(match out.classification {
            Classification::Tip => DiagramCell::Tip,
            Classification::Track => DiagramCell::Track,
            Classification::Unresolved => DiagramCell::Unresolved,
        })
    };

    let (cells, critical) = geometry::with_workers(workers, || -> Result<_> {
        let cells = (0..r_grid.len() * n_dl).into_par_iter().map(cell).collect::<Result<Vec<_>>>()?;
        let critical = (0..r_grid.len())
            .into_par_iter()
            .map(|i| {
                let row = &cells[i * n_dl..(i + 1) * n_dl];
                let Some(j) = (1..n_dl).find(|&j| row[j - 1] == DiagramCell::Track && row[j] == DiagramCell::Tip)
                else {
                    return Ok(None);
                };
                critical_delta_l(
                    l_min,
                    r_grid[i],
                    (delta_l_grid[j - 1], delta_l_grid[j]),
                    refine_tolerance,
                    &quiet,
                    p,
                )
                .map(Some)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((cells, critical))
    })??;

    let unresolved = cells.iter().filter(|c| **c == DiagramCell::Unresolved).count();
    if unresolved > 0 {
        log::warn!("{unresolved} diagram cells unresolved");
    }
    Ok(TippingDiagram {
        l_min,
        r_grid: r_grid.to_vec(),
        delta_l_grid: delta_l_grid.to_vec(),
        cells,
        critical,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn p() -> Params {
        Params::default()
    }

    #[test]
    fn forcing_limits() {
        let f = ForcingSpec::new(0.8, 0.4, 2.0);
        assert_relative_eq!(f.luminosity(0.0), 1.0);
        assert_relative_eq!(f.luminosity(-100.0), 0.8);
        assert_relative_eq!(f.luminosity(100.0), 1.2);
        let (t0, t1) = f.window();
        assert!((f.luminosity(t0) - 0.8).abs() < 4e-7 * 0.4);
        assert!((f.luminosity(t1) - 1.2).abs() < 4e-7 * 0.4);
        assert!(ForcingSpec::new(0.8, -0.1, 1.0).validate().is_err());
        assert!(ForcingSpec::new(0.8, 0.1, 0.0).validate().is_err());
    }

    #[test]
    fn no_change_tracks() {
        let p = p();
        for r in [0.1, 1.0, 10.0] {
            let out = run_experiment(&ForcingSpec::new(0.8, 0.0, r), &ExperimentOptions::default(), &p).unwrap();
            assert_eq!(out.classification, Classification::Track);
            assert_eq!(out.final_attractor, Some(Label::E5));
        }
    }

    #[test]
    fn precondition_names_the_offending_luminosity() {
        let p = p();
        let err = run_experiment(&ForcingSpec::new(0.8, 0.7, 1.0), &ExperimentOptions::default(), &p).unwrap_err();
        assert!(err.is_configuration());
        assert!(err.to_string().contains("L = "), "{err}");
    }

    #[test]
    fn slow_tracks_fast_tips() {
        let p = p();
        let opts = ExperimentOptions::default();
        let slow = run_experiment(&ForcingSpec::new(0.8, 0.42, 0.3), &opts, &p).unwrap();
        let fast = run_experiment(&ForcingSpec::new(0.8, 0.42, 0.5), &opts, &p).unwrap();
        assert_eq!(slow.classification, Classification::Track);
        assert_eq!(fast.classification, Classification::Tip);
        let n = fast.trajectory.len();
        assert_eq!(fast.trajectory.forcing.as_ref().unwrap().len(), n);
        assert!(fast.trajectory.times.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn small_change_always_tracks() {
        let p = p();
        let err = critical_rate(0.8, 0.3, (0.1, 10.0), 1e-2, &ExperimentOptions::default(), &p).unwrap_err();
        assert!(matches!(err, Error::AlwaysTracks { .. }), "{err}");
    }

    #[test]
    fn critical_rate_is_bracketed() {
        let p = p();
        let opts = ExperimentOptions::default();
        let c = critical_rate(0.8, 0.42, (0.1, 1.0), 1e-3, &opts, &p).unwrap();
        assert!(c.tracks_at < c.r_c && c.r_c < c.tips_at);
        assert!(c.tips_at / c.tracks_at - 1.0 <= 1e-3);
        assert!(c.r_c > 0.3 && c.r_c < 0.5);
    }

    #[test]
    fn manifold_crossing_matches_outcome() {
        let p = p();
        let opts = ExperimentOptions { check_manifold: true, manifold_samples: 12, ..Default::default() };
        for r in [0.3, 0.5] {
            let out = run_experiment(&ForcingSpec::new(0.8, 0.42, r), &opts, &p).unwrap();
            assert_eq!(out.crossed_manifold, Some(out.classification == Classification::Tip));
        }
    }

    #[test]
    fn grids() {
        let g = log_space(1e-2, 1e2, 25);
        assert_eq!(g.len(), 25);
        assert_relative_eq!(g[0], 1e-2, max_relative = 1e-12);
        assert_relative_eq!(g[12], 1.0, max_relative = 1e-12);
        assert_relative_eq!(g[24], 1e2, max_relative = 1e-12);
        let d = DiagramOptions::default().delta_l_grid();
        assert_relative_eq!(d[1] - d[0], 0.025, epsilon = 1e-12);
    }

    #[test]
    fn small_diagram() {
        let p = p();
        let d = tipping_diagram(
            0.8,
            &[0.3, 3.0],
            &[0.3, 0.45, 0.7],
            1e-3,
            &ExperimentOptions::default(),
            Some(2),
            &p,
        )
        .unwrap();
        assert_eq!(d.cell(0, 2), DiagramCell::NoCoexistence);
        assert_eq!(d.cell(0, 0), DiagramCell::Track);
        assert_eq!(d.cell(1, 1), DiagramCell::Tip);
        let c = d.critical[1].unwrap();
        assert!(c > 0.3 && c < 0.45);
        assert!(tipping_diagram(0.8, &[1.0, 0.5], &[0.3], 1e-3, &ExperimentOptions::default(), None, &p).is_err());
    }
}
