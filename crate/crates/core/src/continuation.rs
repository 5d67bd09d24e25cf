//! Pseudo-arclength continuation of equilibrium branches in
//! `(alpha_w, alpha_b, L)`, fold location, and slow-ramp scenarios.

use serde::{Deserialize, Serialize};

use crate::equilibria::{
    self, determinant, equilibrium_at, Equilibrium, Label, NEWTON_TOLERANCE, SUPPORT_TOLERANCE,
};
use crate::error::{Error, Result};
use crate::model::{self, State, SIMPLEX_TOLERANCE};
use crate::params::Params;
use crate::solver::{self, Convergence, Forcing, IntegratorOptions, Trajectory};

type Point = [f64; 3];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Increasing,
    Decreasing,
}

impl Direction {
    fn sign(self) -> f64 {
        match self {
            Direction::Increasing => 1.0,
            Direction::Decreasing => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContinuationOptions {
    pub ds_initial: f64,
    pub ds_min: f64,
    pub ds_max: f64,
    pub max_points: usize,
    pub max_corrector_iterations: usize,
    /// A cover fraction that started positive and falls below this ends the branch.
    pub face_tolerance: f64,
    /// Initial direction of travel in L.
    pub direction: Direction,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        ContinuationOptions {
            ds_initial: 1e-2,
            ds_min: 1e-5,
            ds_max: 1e-2,
            max_points: 20_000,
            max_corrector_iterations: 15,
            face_tolerance: 1e-6,
            direction: Direction::Increasing,
        }
    }
}

/// Which family a branch belongs to, judged from its starting support.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BranchKind {
    Dead,
    White,
    Black,
    Coexistence,
}

impl BranchKind {
    pub fn of(state: State) -> Self {
        match (state.alpha_w > SUPPORT_TOLERANCE, state.alpha_b > SUPPORT_TOLERANCE) {
            (false, false) => BranchKind::Dead,
            (true, false) => BranchKind::White,
            (false, true) => BranchKind::Black,
            (true, true) => BranchKind::Coexistence,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BranchKind::Dead => "dead",
            BranchKind::White => "white",
            BranchKind::Black => "black",
            BranchKind::Coexistence => "coexistence",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    RangeBoundary,
    SimplexBoundary,
    ClosedLoop,
    MaxPoints,
    /// The corrector kept failing down to the minimum step.
    Truncated,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FoldPoint {
    /// Index of the branch point just before the fold.
    pub segment: usize,
    pub equilibrium: Equilibrium,
    pub l_fold: f64,
    /// Whether the Jacobian determinant changes sign across the fold.
    pub eigenvalue_crossing: bool,
    pub determinant: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub kind: BranchKind,
    pub points: Vec<Equilibrium>,
    /// Unit tangents in `(alpha_w, alpha_b, L)`, oriented along travel.
    pub tangents: Vec<Point>,
    /// Cumulative chord length along the branch.
    pub arclength: Vec<f64>,
    pub folds: Vec<FoldPoint>,
    pub termination: Termination,
}

impl Branch {
    pub fn is_truncated(&self) -> bool {
        self.termination == Termination::Truncated
    }

    pub fn l_span(&self) -> (f64, f64) {
        self.points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), e| {
            (lo.min(e.luminosity), hi.max(e.luminosity))
        })
    }

    fn point(&self, i: usize) -> Point {
        let e = &self.points[i];
        [e.state.alpha_w, e.state.alpha_b, e.luminosity]
    }
}

fn dot(a: &Point, b: &Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn sub(a: &Point, b: &Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn norm(a: &Point) -> f64 {
    dot(a, a).sqrt()
}

fn unit(a: Point) -> Option<Point> {
    let n = norm(&a);
    (n > 0.0 && n.is_finite()).then(|| [a[0] / n, a[1] / n, a[2] / n])
}

fn det3(m: &[Point; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Cramer's rule keeps exact zeros exact, so axis branches stay on their axis.
fn solve3(m: &[Point; 3], b: Point) -> Option<Point> {
    let d = det3(m);
    if d == 0.0 || !d.is_finite() {
        return None;
    }
    let mut out = [0.0; 3];
    for (col, slot) in out.iter_mut().enumerate() {
        let mut mc = *m;
        for row in 0..3 {
            mc[row][col] = b[row];
        }
        *slot = det3(&mc) / d;
    }
    Some(out)
}

/// Rows `[J | dF/dL]` of the extended Jacobian.
fn extended_rows(x: &Point, p: &Params) -> Result<[Point; 2]> {
    let state = State::new(x[0], x[1]);
    let h = [1e-7 * x[0].abs().max(1.0), 1e-7 * x[1].abs().max(1.0)];
    let j = equilibria::jacobian_with_steps(state, x[2], p, h)?;
    let fl = equilibria::luminosity_derivative([x[0], x[1]], x[2], p)?;
    Ok([[j[0][0], j[0][1], fl[0]], [j[1][0], j[1][1], fl[1]]])
}

/// Null vector of the extended Jacobian, oriented to agree with `reference`.
fn tangent_at(x: &Point, reference: &Point, p: &Params) -> Result<Option<Point>> {
    let [r0, r1] = extended_rows(x, p)?;
    let cross = [
        r0[1] * r1[2] - r0[2] * r1[1],
        r0[2] * r1[0] - r0[0] * r1[2],
        r0[0] * r1[1] - r0[1] * r1[0],
    ];
    Ok(unit(cross).map(|t| if dot(&t, reference) < 0.0 { [-t[0], -t[1], -t[2]] } else { t }))
}

/// Newton on `{F(x) = 0, n . (x - anchor) = offset}`. Returns the corrected
/// point and the iteration count.
fn correct(
    guess: Point,
    normal: &Point,
    anchor: &Point,
    offset: f64,
    max_iter: usize,
    p: &Params,
) -> Option<(Point, usize)> {
    let mut x = guess;
    for iter in 0..=max_iter {
        let f = model::extended_rhs([x[0], x[1]], x[2], p).ok()?;
        let c = dot(normal, &sub(&x, anchor)) - offset;
        if model::sup_norm(f) < NEWTON_TOLERANCE && c.abs() < 1e-12 {
            return Some((x, iter));
        }
        if iter == max_iter {
            break;
        }
        let [r0, r1] = extended_rows(&x, p).ok()?;
        let dx = solve3(&[r0, r1, *normal], [-f[0], -f[1], -c])?;
        for k in 0..3 {
            x[k] += dx[k];
        }
        if !x.iter().all(|v| v.is_finite()) {
            return None;
        }
    }
    None
}

fn to_equilibrium(x: &Point, p: &Params) -> Result<Equilibrium> {
    equilibrium_at(State::new(x[0], x[1]), x[2], p)
}

enum StepOutcome {
    Accept(Point, usize),
    Reject,
    Finish(Option<Point>, Termination),
}

/// Continue the branch through `start` across `l_range`, in the direction
/// given by `opts.direction`. Folds are traversed and reported.
pub fn continue_branch(
    start: &Equilibrium,
    l_range: (f64, f64),
    opts: &ContinuationOptions,
    p: &Params,
) -> Result<Branch> {
    p.validate()?;
    let (l_lo, l_hi) = l_range;
    if !(l_lo < l_hi) || !(l_lo > 0.0) {
        return Err(Error::Configuration(format!("invalid L range [{l_lo}, {l_hi}]")));
    }
    if !(opts.ds_min > 0.0 && opts.ds_min <= opts.ds_initial && opts.ds_initial <= opts.ds_max) {
        return Err(Error::Configuration(format!("invalid step bounds: {opts:?}")));
    }
    let x0 = [start.state.alpha_w, start.state.alpha_b, start.luminosity];
    if x0[2] < l_lo - 1e-12 || x0[2] > l_hi + 1e-12 {
        return Err(Error::Configuration(format!(
            "start L = {} outside range [{l_lo}, {l_hi}]",
            x0[2]
        )));
    }
    let residual = model::sup_norm(model::rhs(start.state, start.luminosity, p)?);
    if residual >= equilibria::RESIDUAL_TOLERANCE {
        return Err(Error::Continuation(format!("start is not an equilibrium (residual {residual:e})")));
    }

    let kind = BranchKind::of(start.state);
    let positive = [x0[0] > SUPPORT_TOLERANCE, x0[1] > SUPPORT_TOLERANCE];
    let towards = [0.0, 0.0, opts.direction.sign()];
    let t0 = tangent_at(&x0, &towards, p)?
        .ok_or_else(|| Error::Continuation("degenerate tangent at start".into()))?;

    let mut branch = Branch {
        kind,
        points: vec![*start],
        tangents: vec![t0],
        arclength: vec![0.0],
        folds: Vec::new(),
        termination: Termination::MaxPoints,
    };
    let mut xs = vec![x0];
    let mut ds = opts.ds_initial;

    let step = |prev: &Point, dir: &Point, ds: f64| -> StepOutcome {
        let guess = [prev[0] + ds * dir[0], prev[1] + ds * dir[1], prev[2] + ds * dir[2]];
        let Some((x, iters)) = correct(guess, dir, prev, ds, opts.max_corrector_iterations, p) else {
            return StepOutcome::Reject;
        };
        if norm(&sub(&x, prev)) > opts.ds_max * (1.0 + 1e-9) {
            return StepOutcome::Reject;
        }
        // Crossing a face: land on the face threshold instead.
        for i in 0..2 {
            if positive[i] && x[i] < opts.face_tolerance {
                let mut normal = [0.0; 3];
                normal[i] = 1.0;
                let target = 0.5 * opts.face_tolerance;
                let frac = (prev[i] - target) / (prev[i] - x[i]);
                let guess = [
                    prev[0] + frac * (x[0] - prev[0]),
                    prev[1] + frac * (x[1] - prev[1]),
                    prev[2] + frac * (x[2] - prev[2]),
                ];
                let landed = correct(guess, &normal, &[0.0; 3], target, opts.max_corrector_iterations, p)
                    .map(|(y, _)| y)
                    .filter(|y| norm(&sub(y, prev)) <= 2.0 * norm(&sub(&x, prev)));
                return StepOutcome::Finish(landed, Termination::SimplexBoundary);
            }
        }
        if x[0] < -SIMPLEX_TOLERANCE || x[1] < -SIMPLEX_TOLERANCE || x[0] + x[1] > 1.0 + SIMPLEX_TOLERANCE {
            return StepOutcome::Finish(None, Termination::SimplexBoundary);
        }
        for bound in [l_lo, l_hi] {
            let crossed = (prev[2] - bound) * (x[2] - bound) < 0.0 || x[2] == bound;
            if crossed {
                let frac = (bound - prev[2]) / (x[2] - prev[2]);
                let guess = [
                    prev[0] + frac * (x[0] - prev[0]),
                    prev[1] + frac * (x[1] - prev[1]),
                    bound,
                ];
                let landed = correct(guess, &[0.0, 0.0, 1.0], &[0.0; 3], bound, opts.max_corrector_iterations, p)
                    .map(|(y, _)| y);
                return StepOutcome::Finish(landed, Termination::RangeBoundary);
            }
        }
        StepOutcome::Accept(x, iters)
    };

    loop {
        if xs.len() >= opts.max_points {
            branch.termination = Termination::MaxPoints;
            break;
        }
        let prev = *xs.last().expect("branch has a start point");
        let dir = if xs.len() >= 2 {
            unit(sub(&prev, &xs[xs.len() - 2])).unwrap_or(*branch.tangents.last().unwrap())
        } else {
            t0
        };
        let (x, iters, finish) = match step(&prev, &dir, ds) {
            StepOutcome::Accept(x, iters) => (x, iters, None),
            StepOutcome::Reject => {
                ds *= 0.5;
                if ds < opts.ds_min {
                    branch.termination = Termination::Truncated;
                    break;
                }
                continue;
            }
            StepOutcome::Finish(Some(x), why) => (x, 0, Some(why)),
            StepOutcome::Finish(None, why) => {
                branch.termination = why;
                break;
            }
        };

        let eq = to_equilibrium(&x, p)?;
        let t = tangent_at(&x, &dir, p)?.unwrap_or(dir);
        let s = branch.arclength.last().unwrap() + norm(&sub(&x, &prev));
        branch.points.push(eq);
        branch.tangents.push(t);
        branch.arclength.push(s);
        xs.push(x);

        if let Some(why) = finish {
            branch.termination = why;
            break;
        }
        if xs.len() > 3 && norm(&sub(&x, &x0)) < ds {
            branch.termination = Termination::ClosedLoop;
            break;
        }
        if iters <= 3 {
            ds = (2.0 * ds).min(opts.ds_max);
        } else if iters > 8 {
            ds = (0.5 * ds).max(opts.ds_min);
        }
    }

    if branch.points.len() >= 3 {
        branch.folds = detect_folds(&branch, p)?;
    }
    Ok(branch)
}

/// Locate sign changes of `dL/ds` along `branch` and refine each by
/// bisection in arclength.
pub fn detect_folds(branch: &Branch, p: &Params) -> Result<Vec<FoldPoint>> {
    if branch.points.len() < 3 {
        return Err(Error::Continuation(format!(
            "fold detection needs at least 3 points, got {}",
            branch.points.len()
        )));
    }
    let mut folds = Vec::new();
    for i in 0..branch.points.len() - 1 {
        let (ta, tb) = (branch.tangents[i], branch.tangents[i + 1]);
        if ta[2] == 0.0 || (ta[2] < 0.0) == (tb[2] < 0.0) {
            continue;
        }
        let a = branch.point(i);
        let b = branch.point(i + 1);
        let chord = sub(&b, &a);
        let Some(n) = unit(chord) else { continue };
        let length = dot(&n, &chord);
        let sign_a = ta[2] < 0.0;

        let (mut lo, mut hi) = (0.0, length);
        let mut best = a;
        for _ in 0..80 {
            if hi - lo < 1e-13 {
                break;
            }
            let mid = 0.5 * (lo + hi);
            let guess = [a[0] + mid * n[0], a[1] + mid * n[1], a[2] + mid * n[2]];
            let Some((x, _)) = correct(guess, &n, &a, mid, 30, p) else {
                break;
            };
            best = x;
            let Some(t) = tangent_at(&x, &ta, p)? else { break };
            if (t[2] < 0.0) == sign_a {
                lo = mid;
            } else {
                hi = mid;
            }
        }

        let det_a = determinant(&equilibria::jacobian_with_steps(
            State::new(a[0], a[1]),
            a[2],
            p,
            [1e-7, 1e-7],
        )?);
        let det_b = determinant(&equilibria::jacobian_with_steps(
            State::new(b[0], b[1]),
            b[2],
            p,
            [1e-7, 1e-7],
        )?);
        let det_fold = determinant(&equilibria::jacobian_with_steps(
            State::new(best[0], best[1]),
            best[2],
            p,
            [1e-7, 1e-7],
        )?);
        let eigenvalue_crossing = det_a * det_b < 0.0;
        if !eigenvalue_crossing {
            log::warn!("fold near L = {} without a determinant sign change", best[2]);
        }
        folds.push(FoldPoint {
            segment: i,
            equilibrium: to_equilibrium(&best, p)?,
            l_fold: best[2],
            eigenvalue_crossing,
            determinant: det_fold,
        });
    }
    Ok(folds)
}

/// Linear luminosity ramp from `l_start` to `l_end` at `rate` per unit
/// time, held at `l_end` afterwards.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearRamp {
    pub l_start: f64,
    pub l_end: f64,
    pub rate: f64,
}

impl LinearRamp {
    pub fn duration(&self) -> f64 {
        (self.l_end - self.l_start).abs() / self.rate
    }
}

impl Forcing for LinearRamp {
    fn luminosity(&self, t: f64) -> f64 {
        if t <= 0.0 {
            self.l_start
        } else if t >= self.duration() {
            self.l_end
        } else {
            self.l_start + (self.l_end - self.l_start).signum() * self.rate * t
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RampOutcome {
    pub ramp: LinearRamp,
    pub trajectory: Trajectory,
    /// What the frozen system at `l_end` settles on after the ramp.
    pub settled: Convergence,
    /// True when the state ends on the dead planet.
    pub collapsed: bool,
}

/// Slowly ramp luminosity from the start equilibrium to `l_end`, then let
/// the frozen system settle.
pub fn quasistatic_ramp(
    start: &Equilibrium,
    l_end: f64,
    rate: f64,
    opts: &IntegratorOptions,
    p: &Params,
) -> Result<RampOutcome> {
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(Error::Configuration(format!("ramp rate must be positive, got {rate}")));
    }
    p.validate_luminosity(l_end)?;
    let ramp = LinearRamp { l_start: start.luminosity, l_end, rate };
    let duration = ramp.duration();
    let trajectory = if duration > 0.0 {
        solver::integrate_forced(start.state, &ramp, (0.0, duration), opts, p)?
    } else {
        Trajectory {
            times: vec![0.0],
            states: vec![start.state],
            forcing: Some(vec![l_end]),
        }
    };
    let end = trajectory.last_state().unwrap_or(start.state);
    let known = equilibria::enumerate_equilibria(l_end, p)?;
    let settled = solver::converge_to_attractor(end, l_end, &known, opts, p)?;
    let collapsed = settled.label() == Some(Label::E0);
    Ok(RampOutcome { ramp, trajectory, settled, collapsed })
}
