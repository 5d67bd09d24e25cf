//! Frozen-L phase-space geometry: saddle stable manifolds, basin grids and
//! basin instability.

use std::ops::ControlFlow;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equilibria::{self, enumerate_equilibria, Equilibrium, Label, Stability};
use crate::error::{Error, Result};
use crate::model::{self, State};
use crate::params::Params;
use crate::solver::{self, Convergence, IntegratorOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ManifoldOptions {
    /// Offset of the seeds from the saddle along the stable eigenvector.
    pub epsilon: f64,
    /// Lower corner of the square clip box (both coordinates).
    pub clip_min: f64,
    /// Upper corner of the clip box; also bounds `alpha_w + alpha_b`.
    pub clip_max: f64,
    pub arclength_budget: f64,
    pub max_time: f64,
    /// Largest time step, which bounds the spacing of recorded points.
    pub max_step: f64,
    /// Points closer than this to the previous one are not recorded.
    pub min_spacing: f64,
}

impl Default for ManifoldOptions {
    fn default() -> Self {
        ManifoldOptions {
            epsilon: 1e-6,
            clip_min: -0.05,
            clip_max: 1.05,
            arclength_budget: 10.0,
            max_time: 1e4,
            max_step: 0.1,
            min_spacing: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ManifoldEnd {
    LeftClipBox,
    ArclengthBudget,
    /// Reached a rest point of the reversed field (a source of the frozen system).
    Stalled,
    TimeLimit,
    /// The extended field could not be evaluated any further.
    LeftDomain,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HalfManifold {
    /// Ordered outward from the seed.
    pub points: Vec<[f64; 2]>,
    pub end: ManifoldEnd,
}

/// The 1-D stable manifold of a saddle as a single polyline through it.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldCurve {
    pub luminosity: f64,
    pub saddle: Equilibrium,
    /// Unit stable eigenvector.
    pub direction: [f64; 2],
    pub halves: [HalfManifold; 2],
    /// First half reversed, the saddle, then the second half.
    pub points: Vec<[f64; 2]>,
}

fn segment_distance(x: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let s = if len2 > 0.0 {
        (((x[0] - a[0]) * dx + (x[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    ((x[0] - a[0] - s * dx).powi(2) + (x[1] - a[1] - s * dy).powi(2)).sqrt()
}

fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn segments_cross(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    // Half-open in the polyline segment so a crossing at a shared vertex counts once.
    (d1 > 0.0) != (d2 > 0.0) && ((d3 > 0.0) != (d4 > 0.0)) && d3 != 0.0
}

impl ManifoldCurve {
    pub fn arclength(&self) -> f64 {
        self.points.windows(2).map(|w| (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1])).sum()
    }

    /// Euclidean distance from `x` to the polyline.
    pub fn distance_to(&self, x: [f64; 2]) -> f64 {
        self.points
            .windows(2)
            .map(|w| segment_distance(x, w[0], w[1]))
            .fold(f64::INFINITY, f64::min)
    }

    /// Number of times the segment `a -> b` crosses the polyline.
    pub fn crossings(&self, a: [f64; 2], b: [f64; 2]) -> usize {
        let (lo_x, hi_x) = (a[0].min(b[0]), a[0].max(b[0]));
        let (lo_y, hi_y) = (a[1].min(b[1]), a[1].max(b[1]));
        self.points
            .windows(2)
            .filter(|w| {
                let (c, d) = (w[0], w[1]);
                c[0].max(d[0]) >= lo_x
                    && c[0].min(d[0]) <= hi_x
                    && c[1].max(d[1]) >= lo_y
                    && c[1].min(d[1]) <= hi_y
                    && segments_cross(a, b, c, d)
            })
            .count()
    }

    /// True when `a` and `b` lie on opposite sides of the curve.
    pub fn separates(&self, a: [f64; 2], b: [f64; 2]) -> bool {
        self.crossings(a, b) % 2 == 1
    }
}

/// Unit eigenvector of a real eigenvalue `lambda` of `j`.
fn real_eigenvector(j: &equilibria::Matrix2, lambda: f64) -> Option<[f64; 2]> {
    let from_row0 = [j[0][1], lambda - j[0][0]];
    let from_row1 = [lambda - j[1][1], j[1][0]];
    let n0 = from_row0[0].hypot(from_row0[1]);
    let n1 = from_row1[0].hypot(from_row1[1]);
    let (v, n) = if n0 >= n1 { (from_row0, n0) } else { (from_row1, n1) };
    (n > 0.0).then(|| [v[0] / n, v[1] / n])
}

fn trace_half(
    seed: [f64; 2],
    luminosity: f64,
    opts: &ManifoldOptions,
    p: &Params,
) -> Result<HalfManifold> {
    let int_opts = IntegratorOptions { max_step: opts.max_step, ..IntegratorOptions::default() };
    let inside = |x: &[f64; 2]| {
        x[0] >= opts.clip_min
            && x[1] >= opts.clip_min
            && x[0] <= opts.clip_max
            && x[1] <= opts.clip_max
            && x[0] + x[1] <= opts.clip_max
    };
    let mut points = vec![seed];
    let mut travelled = 0.0;
    let mut end = ManifoldEnd::TimeLimit;
    let mut last_point = seed;
    let mut previous = seed;
    let result = solver::integrate_field(
        |_, y| model::extended_rhs(y, luminosity, p).map(|f| [-f[0], -f[1]]),
        0.0,
        seed,
        opts.max_time,
        &int_opts,
        |_, y| {
            let y = *y;
            travelled += (y[0] - previous[0]).hypot(y[1] - previous[1]);
            previous = y;
            if !inside(&y) {
                points.push(y);
                end = ManifoldEnd::LeftClipBox;
                return ControlFlow::Break(());
            }
            if (y[0] - last_point[0]).hypot(y[1] - last_point[1]) >= opts.min_spacing {
                points.push(y);
                last_point = y;
            }
            if travelled >= opts.arclength_budget {
                end = ManifoldEnd::ArclengthBudget;
                return ControlFlow::Break(());
            }
            let speed = model::extended_rhs(y, luminosity, p).map(model::sup_norm).unwrap_or(0.0);
            if travelled > 10.0 * opts.epsilon && speed < 1e-13 {
                end = ManifoldEnd::Stalled;
                return ControlFlow::Break(());
            }
            ControlFlow::Continue(())
        },
    );
    match result {
        Ok(_) => {}
        Err(Error::StepSizeUnderflow { .. }) => end = ManifoldEnd::LeftDomain,
        Err(e) => return Err(e),
    }
    if points.last() != Some(&previous) && end != ManifoldEnd::LeftClipBox {
        points.push(previous);
    }
    Ok(HalfManifold { points, end })
}

/// Trace the stable manifold of `saddle` by integrating the reversed field
/// from two seeds straddling it along the stable eigenvector.
pub fn stable_manifold(saddle: &Equilibrium, opts: &ManifoldOptions, p: &Params) -> Result<ManifoldCurve> {
    if saddle.stability != Stability::Saddle {
        return Err(Error::NotASaddle { label: saddle.label, luminosity: saddle.luminosity });
    }
    if !(opts.epsilon > 0.0 && opts.clip_min < opts.clip_max && opts.arclength_budget > 0.0) {
        return Err(Error::Configuration(format!("invalid manifold options: {opts:?}")));
    }
    let l = saddle.luminosity;
    let j = equilibria::jacobian(saddle.state, l, p)?;
    let stable = saddle
        .eigenvalues
        .iter()
        .map(|z| z.re)
        .fold(f64::INFINITY, f64::min);
    let direction = real_eigenvector(&j, stable)
        .ok_or(Error::NotASaddle { label: saddle.label, luminosity: l })?;
    let x = saddle.state.to_array();
    let seed = |s: f64| [x[0] + s * opts.epsilon * direction[0], x[1] + s * opts.epsilon * direction[1]];
    let first = trace_half(seed(1.0), l, opts, p)?;
    let second = trace_half(seed(-1.0), l, opts, p)?;
    let mut points: Vec<[f64; 2]> = first.points.iter().rev().copied().collect();
    points.push(x);
    points.extend(second.points.iter().copied());
    Ok(ManifoldCurve { luminosity: l, saddle: *saddle, direction, halves: [first, second], points })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasinClass {
    Attractor(Label),
    /// Cell centre outside the simplex.
    Invalid,
    Unresolved,
}

impl BasinClass {
    /// Integer code used in exported matrices: label index, -1 invalid, -2 unresolved.
    pub fn code(self) -> i32 {
        match self {
            BasinClass::Attractor(l) => l as i32,
            BasinClass::Invalid => -1,
            BasinClass::Unresolved => -2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasinGrid {
    pub luminosity: f64,
    pub resolution: usize,
    /// Row-major with `alpha_b` index as the row: `classes[j * resolution + i]`.
    pub classes: Vec<BasinClass>,
    pub attractors: Vec<Equilibrium>,
    pub unresolved: usize,
}

impl BasinGrid {
    pub fn cell_center(&self, i: usize, j: usize) -> [f64; 2] {
        cell_center(self.resolution, i, j)
    }

    pub fn class_at(&self, i: usize, j: usize) -> BasinClass {
        self.classes[j * self.resolution + i]
    }

    /// Indices of the cell containing `x` (clamped to the grid).
    pub fn cell_of(&self, x: State) -> (usize, usize) {
        let n = self.resolution;
        let idx = |v: f64| ((v * n as f64).floor().max(0.0) as usize).min(n - 1);
        (idx(x.alpha_w), idx(x.alpha_b))
    }

    pub fn valid_cells(&self) -> usize {
        self.classes.iter().filter(|c| **c != BasinClass::Invalid).count()
    }

    /// Fraction of valid cells assigned to `label`.
    pub fn area_fraction(&self, label: Label) -> f64 {
        let hits = self.classes.iter().filter(|c| **c == BasinClass::Attractor(label)).count();
        hits as f64 / self.valid_cells().max(1) as f64
    }
}

fn cell_center(resolution: usize, i: usize, j: usize) -> [f64; 2] {
    let n = resolution as f64;
    [(i as f64 + 0.5) / n, (j as f64 + 0.5) / n]
}

/// Run `f` on a rayon pool with `workers` threads, or the global pool.
pub fn with_workers<R: Send>(workers: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    match workers {
        None => Ok(f()),
        Some(0) => Err(Error::Configuration("worker count must be positive".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Configuration(format!("cannot build worker pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Largest tolerated share of unresolved cells.
pub const MAX_UNRESOLVED_FRACTION: f64 = 0.01;

/// Classify every simplex cell at `luminosity` by the attractor its centre
/// converges to.
pub fn basin_grid(
    luminosity: f64,
    resolution: usize,
    opts: &IntegratorOptions,
    workers: Option<usize>,
    p: &Params,
) -> Result<BasinGrid> {
    if resolution == 0 {
        return Err(Error::Configuration("basin resolution must be positive".into()));
    }
    let known = enumerate_equilibria(luminosity, p)?;
    let attractors: Vec<Equilibrium> = known.iter().filter(|e| e.is_stable()).copied().collect();
    if attractors.is_empty() {
        return Err(Error::Configuration(format!("no stable equilibrium at L = {luminosity}")));
    }
    let classify = |idx: usize| -> Result<BasinClass> {
        let [a, b] = cell_center(resolution, idx % resolution, idx / resolution);
        if a + b > 1.0 {
            return Ok(BasinClass::Invalid);
        }
        Ok(match solver::converge_to_attractor(State::new(a, b), luminosity, &known, opts, p)? {
            Convergence::Attractor { label, .. } => BasinClass::Attractor(label),
            Convergence::Unresolved { .. } => BasinClass::Unresolved,
        })
    };
    let classes = with_workers(workers, || {
        (0..resolution * resolution).into_par_iter().map(classify).collect::<Result<Vec<_>>>()
    })??;
    let unresolved = classes.iter().filter(|c| **c == BasinClass::Unresolved).count();
    let total = classes.iter().filter(|c| **c != BasinClass::Invalid).count();
    if unresolved as f64 > MAX_UNRESOLVED_FRACTION * total as f64 {
        return Err(Error::TooManyUnresolved { unresolved, total });
    }
    Ok(BasinGrid { luminosity, resolution, classes, attractors, unresolved })
}

/// Whether the frozen-in state of `eq` lies in the dead-planet basin of the
/// frozen system at `l_test`.
pub fn is_basin_unstable(eq: &Equilibrium, l_test: f64, opts: &IntegratorOptions, p: &Params) -> Result<bool> {
    let known = enumerate_equilibria(l_test, p)?;
    let dead_attracts = known.iter().any(|e| e.label == Label::E0 && e.is_stable());
    if !dead_attracts {
        return Ok(false);
    }
    match solver::converge_to_attractor(eq.state, l_test, &known, opts, p)? {
        Convergence::Attractor { label, .. } => Ok(label == Label::E0),
        Convergence::Unresolved { time, .. } => Err(Error::Unresolved { time }),
    }
}

/// Bisect on the test luminosity for the onset of basin instability of `eq`.
pub fn find_l_bi(
    eq: &Equilibrium,
    bracket: (f64, f64),
    tolerance: f64,
    opts: &IntegratorOptions,
    p: &Params,
) -> Result<f64> {
    let (mut lo, mut hi) = bracket;
    if !(lo < hi) || !(tolerance > 0.0) {
        return Err(Error::InvalidBracket(format!("[{lo}, {hi}] with tolerance {tolerance}")));
    }
    if is_basin_unstable(eq, lo, opts, p)? {
        return Err(Error::InvalidBracket(format!("already basin unstable at L = {lo}")));
    }
    if !is_basin_unstable(eq, hi, opts, p)? {
        return Err(Error::InvalidBracket(format!("not basin unstable at L = {hi}")));
    }
    while hi - lo > tolerance {
        let mid = 0.5 * (lo + hi);
        if is_basin_unstable(eq, mid, opts, p)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Agreement between a basin grid and a separating manifold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualityReport {
    /// Adjacent valid cells with different attractors.
    pub boundary_pairs: usize,
    /// Largest distance from such a pair's midpoint to the curve.
    pub max_boundary_distance: f64,
    /// Adjacent valid cells whose connecting segment crosses the curve.
    pub straddling_pairs: usize,
    pub straddling_same_class: usize,
    /// One cell diagonal.
    pub tolerance: f64,
}

impl DualityReport {
    pub fn holds(&self) -> bool {
        self.boundary_pairs > 0
            && self.max_boundary_distance <= self.tolerance
            && self.straddling_same_class == 0
    }
}

pub fn basin_manifold_duality(grid: &BasinGrid, curve: &ManifoldCurve) -> DualityReport {
    let n = grid.resolution;
    let mut pairs = Vec::new();
    for j in 0..n {
        for i in 0..n {
            if i + 1 < n {
                pairs.push(((i, j), (i + 1, j)));
            }
            if j + 1 < n {
                pairs.push(((i, j), (i, j + 1)));
            }
        }
    }
    let per_pair: Vec<(Option<f64>, Option<bool>)> = pairs
        .par_iter()
        .map(|&((i0, j0), (i1, j1))| {
            let (c0, c1) = (grid.class_at(i0, j0), grid.class_at(i1, j1));
            let (BasinClass::Attractor(_), BasinClass::Attractor(_)) = (c0, c1) else {
                return (None, None);
            };
            let (a, b) = (grid.cell_center(i0, j0), grid.cell_center(i1, j1));
            let boundary = (c0 != c1).then(|| curve.distance_to([0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]));
            let straddle = curve.separates(a, b).then_some(c0 == c1);
            (boundary, straddle)
        })
        .collect();
    let mut report = DualityReport {
        boundary_pairs: 0,
        max_boundary_distance: 0.0,
        straddling_pairs: 0,
        straddling_same_class: 0,
        tolerance: std::f64::consts::SQRT_2 / n as f64,
    };
    for (boundary, straddle) in per_pair {
        if let Some(d) = boundary {
            report.boundary_pairs += 1;
            report.max_boundary_distance = report.max_boundary_distance.max(d);
        }
        if let Some(same) = straddle {
            report.straddling_pairs += 1;
            report.straddling_same_class += same as usize;
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibria::{coexistence_analytic, find_equilibrium};

    fn p() -> Params {
        Params::default()
    }

    #[test]
    fn segment_geometry() {
        assert_eq!(segment_distance([0.0, 1.0], [-1.0, 0.0], [1.0, 0.0]), 1.0);
        assert_eq!(segment_distance([3.0, 0.0], [-1.0, 0.0], [1.0, 0.0]), 2.0);
        assert!(segments_cross([0.0, -1.0], [0.0, 1.0], [-1.0, 0.0], [1.0, 0.0]));
        assert!(!segments_cross([0.0, 0.5], [0.0, 1.0], [-1.0, 0.0], [1.0, 0.0]));
    }

    #[test]
    fn rejects_non_saddles() {
        let p = p();
        let e5 = coexistence_analytic(1.0, &p).unwrap().unwrap();
        assert!(matches!(
            stable_manifold(&e5, &ManifoldOptions::default(), &p),
            Err(Error::NotASaddle { .. })
        ));
    }

    #[test]
    fn manifold_points_flow_into_the_saddle() {
        let p = p();
        let e1 = find_equilibrium(Label::E1, 1.4, &p).unwrap();
        assert_eq!(e1.stability, Stability::Saddle);
        let curve = stable_manifold(&e1, &ManifoldOptions::default(), &p).unwrap();
        assert!(curve.halves.iter().all(|h| h.points.len() > 10));
        // A point well inside the simplex on the interior half.
        let start = curve
            .points
            .iter()
            .copied()
            .find(|x| x[1] > 0.1 && x[0] + x[1] < 0.95)
            .expect("manifold enters the interior");
        let traj = solver::integrate_autonomous(
            State::from_array(start),
            1.4,
            (0.0, 60.0),
            &IntegratorOptions::default(),
            &p,
        )
        .unwrap();
        assert!(traj.min_distance_to(e1.state) < 1e-4, "{}", traj.min_distance_to(e1.state));
    }

    #[test]
    fn black_saddle_has_a_manifold_too() {
        let p = p();
        let e3 = find_equilibrium(Label::E3, 0.68, &p).unwrap();
        assert_eq!(e3.stability, Stability::Saddle);
        let curve = stable_manifold(&e3, &ManifoldOptions::default(), &p).unwrap();
        assert!(curve.points.len() > 20);
        assert!(curve.halves.iter().any(|h| h.end == ManifoldEnd::LeftClipBox));
    }

    #[test]
    fn beyond_the_white_fold_everything_dies() {
        let p = p();
        let grid = basin_grid(1.58, 21, &IntegratorOptions::default(), None, &p).unwrap();
        assert_eq!(grid.area_fraction(Label::E0), 1.0);
        assert_eq!(grid.unresolved, 0);
    }

    #[test]
    fn attractor_cell_maps_to_itself() {
        let p = p();
        let grid = basin_grid(1.0, 41, &IntegratorOptions::default(), Some(2), &p).unwrap();
        for e in grid.attractors.iter().filter(|e| e.label != Label::E0) {
            let (i, j) = grid.cell_of(e.state);
            assert_eq!(grid.class_at(i, j), BasinClass::Attractor(e.label));
        }
        assert!(grid.classes.contains(&BasinClass::Invalid));
    }

    #[test]
    fn basin_instability_examples() {
        let p = p();
        let opts = IntegratorOptions::default();
        let e5 = coexistence_analytic(0.8, &p).unwrap().unwrap();
        assert!(!is_basin_unstable(&e5, 0.8, &opts, &p).unwrap());
        assert!(!is_basin_unstable(&e5, 0.85, &opts, &p).unwrap());
        assert!(is_basin_unstable(&e5, 1.55, &opts, &p).unwrap());
    }

    #[test]
    fn l_bi_brackets_the_switch() {
        let p = p();
        let opts = IntegratorOptions::default();
        let e5 = coexistence_analytic(0.8, &p).unwrap().unwrap();
        let l_bi = find_l_bi(&e5, (1.0, 1.5), 1e-4, &opts, &p).unwrap();
        assert!(!is_basin_unstable(&e5, l_bi - 1e-3, &opts, &p).unwrap());
        assert!(is_basin_unstable(&e5, l_bi + 1e-3, &opts, &p).unwrap());
        assert!(find_l_bi(&e5, (1.5, 1.55), 1e-4, &opts, &p).is_err());
    }

    #[test]
    fn zero_workers_is_a_configuration_error() {
        assert!(with_workers(Some(0), || 1).unwrap_err().is_configuration());
        assert_eq!(with_workers(Some(1), || 7).unwrap(), 7);
    }
}
