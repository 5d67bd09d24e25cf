//! Adaptive explicit integration of the cover dynamics.
//!
//! The stepper is the Dormand–Prince 5(4) pair with FSAL, local
//! extrapolation and a standard I-controller. Every accepted step is
//! recorded; there is no dense output.

use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};

use crate::equilibria::{Equilibrium, Label};
use crate::error::{Error, Result};
use crate::model::{self, State};
use crate::params::Params;

/// Equilibrium match radius used when deciding where a trajectory ended up.
pub const MATCH_TOLERANCE: f64 = 1e-6;
/// Derivative sup-norm below which a state counts as settled.
pub const SETTLED_RHS: f64 = 1e-8;
/// Length of each integration chunk between convergence checks.
pub const CONVERGENCE_CHUNK: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub initial_step: f64,
    /// Cap on total integrated time for open-ended runs.
    pub max_time: f64,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        IntegratorOptions {
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            max_step: 5.0,
            initial_step: 1e-3,
            max_time: 1e5,
        }
    }
}

impl IntegratorOptions {
    pub fn validate(&self) -> Result<()> {
        let ok = self.rel_tol > 0.0
            && self.abs_tol > 0.0
            && self.max_step > 0.0
            && self.initial_step > 0.0
            && self.max_time > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Configuration(format!("integrator options must be positive: {self:?}")))
        }
    }
}

/// Luminosity as a function of model time.
pub trait Forcing {
    fn luminosity(&self, t: f64) -> f64;
}

/// A bare number is constant forcing.
impl Forcing for f64 {
    fn luminosity(&self, _t: f64) -> f64 {
        *self
    }
}

impl<F: Fn(f64) -> f64> Forcing for F {
    fn luminosity(&self, t: f64) -> f64 {
        self(t)
    }
}

/// Time series of accepted integrator steps.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<State>,
    /// Luminosity at each stored time; `None` for autonomous runs.
    pub forcing: Option<Vec<f64>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last_state(&self) -> Option<State> {
        self.states.last().copied()
    }

    pub fn last_time(&self) -> Option<f64> {
        self.times.last().copied()
    }

    /// Smallest Euclidean distance from any stored state to `target`.
    pub fn min_distance_to(&self, target: State) -> f64 {
        self.states.iter().map(|s| s.distance(&target)).fold(f64::INFINITY, f64::min)
    }

    /// Luminosity at sample `i`, falling back to `constant` for autonomous runs.
    pub fn luminosity_at(&self, i: usize, constant: f64) -> f64 {
        self.forcing.as_ref().map_or(constant, |f| f[i])
    }
}

/// Where an integration stopped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepperEnd {
    pub t: f64,
    pub y: [f64; 2],
    /// True when the observer asked to stop before `t_end`.
    pub interrupted: bool,
    pub steps: usize,
}

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Difference between the 5th and embedded 4th order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;

#[inline]
fn axpy(y: &[f64; 2], terms: &[(f64, &[f64; 2])], h: f64) -> [f64; 2] {
    let mut out = *y;
    for (c, k) in terms {
        out[0] += h * c * k[0];
        out[1] += h * c * k[1];
    }
    out
}

/// Errors a field may raise that mean "this trial step went somewhere
/// invalid" rather than "the model is broken". They shrink the step.
fn is_recoverable(e: &Error) -> bool {
    matches!(e, Error::OutsideSimplex { .. } | Error::NonphysicalHeatTransfer { .. })
}

/// Integrate `y' = field(t, y)` from `t0` to `t_end` (which may be less than
/// `t0`), calling `observer` after every accepted step. The observer is
/// also called once with the initial point.
pub fn integrate_field<F, O>(
    mut field: F,
    t0: f64,
    y0: [f64; 2],
    t_end: f64,
    opts: &IntegratorOptions,
    mut observer: O,
) -> Result<StepperEnd>
where
    F: FnMut(f64, [f64; 2]) -> Result<[f64; 2]>,
    O: FnMut(f64, &[f64; 2]) -> ControlFlow<()>,
{
    opts.validate()?;
    if !(t0.is_finite() && t_end.is_finite()) {
        return Err(Error::InvalidSpan { start: t0, end: t_end });
    }
    let mut t = t0;
    let mut y = y0;
    if observer(t, &y).is_break() {
        return Ok(StepperEnd { t, y, interrupted: true, steps: 0 });
    }
    let span = t_end - t0;
    if span == 0.0 {
        return Ok(StepperEnd { t, y, interrupted: false, steps: 0 });
    }
    let dir = span.signum();
    let mut h = opts.initial_step.min(opts.max_step).min(span.abs());
    let mut k1 = field(t, y)?;
    let mut steps = 0usize;
    let mut just_rejected = false;

    loop {
        let remaining = (t_end - t) * dir;
        if remaining <= 0.0 {
            break;
        }
        let last = h >= remaining;
        if last {
            h = remaining;
        }
        let min_step = 16.0 * f64::EPSILON * t.abs().max(1.0);
        if h < min_step {
            return Err(Error::StepSizeUnderflow { t, step: h });
        }
        let hs = h * dir;

        match try_step(&mut field, t, &y, &k1, hs) {
            Ok((y_new, k7, err)) => {
                let scale = |i: usize| opts.abs_tol + opts.rel_tol * y[i].abs().max(y_new[i].abs());
                let e0 = err[0] / scale(0);
                let e1 = err[1] / scale(1);
                let norm = ((e0 * e0 + e1 * e1) / 2.0).sqrt();
                if norm <= 1.0 {
                    t = if last { t_end } else { t + hs };
                    y = y_new;
                    k1 = k7;
                    steps += 1;
                    if observer(t, &y).is_break() {
                        return Ok(StepperEnd { t, y, interrupted: true, steps });
                    }
                    let mut factor = if norm == 0.0 {
                        MAX_FACTOR
                    } else {
                        (SAFETY * norm.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
                    };
                    if just_rejected {
                        factor = factor.min(1.0);
                    }
                    just_rejected = false;
                    if !last {
                        h = (h * factor).min(opts.max_step);
                    }
                } else {
                    h *= (SAFETY * norm.powf(-0.2)).clamp(MIN_FACTOR, 1.0);
                    just_rejected = true;
                }
            }
            Err(e) if is_recoverable(&e) => {
                h *= 0.25;
                just_rejected = true;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(StepperEnd { t, y, interrupted: false, steps })
}

type StepResult = ([f64; 2], [f64; 2], [f64; 2]);

fn try_step<F>(field: &mut F, t: f64, y: &[f64; 2], k1: &[f64; 2], h: f64) -> Result<StepResult>
where
    F: FnMut(f64, [f64; 2]) -> Result<[f64; 2]>,
{
    let k2 = field(t + C2 * h, axpy(y, &[(A21, k1)], h))?;
    let k3 = field(t + C3 * h, axpy(y, &[(A31, k1), (A32, &k2)], h))?;
    let k4 = field(t + C4 * h, axpy(y, &[(A41, k1), (A42, &k2), (A43, &k3)], h))?;
    let k5 = field(t + C5 * h, axpy(y, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)], h))?;
    let k6 = field(
        t + h,
        axpy(y, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)], h),
    )?;
    let y_new = axpy(y, &[(B1, k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)], h);
    let k7 = field(t + h, y_new)?;
    let err = [
        h * (E1 * k1[0] + E3 * k3[0] + E4 * k4[0] + E5 * k5[0] + E6 * k6[0] + E7 * k7[0]),
        h * (E1 * k1[1] + E3 * k3[1] + E4 * k4[1] + E5 * k5[1] + E6 * k6[1] + E7 * k7[1]),
    ];
    Ok((y_new, k7, err))
}

fn check_span(t_span: (f64, f64)) -> Result<()> {
    if t_span.0.is_finite() && t_span.1.is_finite() && t_span.1 > t_span.0 {
        Ok(())
    } else {
        Err(Error::InvalidSpan { start: t_span.0, end: t_span.1 })
    }
}

/// Integrate at fixed luminosity, recording every accepted step.
pub fn integrate_autonomous(
    x0: State,
    luminosity: f64,
    t_span: (f64, f64),
    opts: &IntegratorOptions,
    p: &Params,
) -> Result<Trajectory> {
    check_span(t_span)?;
    x0.check_simplex()?;
    let mut traj = Trajectory::default();
    integrate_field(
        |_, y| model::rhs(State::from_array(y), luminosity, p),
        t_span.0,
        x0.to_array(),
        t_span.1,
        opts,
        |t, y| {
            traj.times.push(t);
            traj.states.push(State::from_array(*y));
            ControlFlow::Continue(())
        },
    )?;
    Ok(traj)
}

/// Integrate with luminosity given by `forcing` at each stage time.
pub fn integrate_forced<F: Forcing + ?Sized>(
    x0: State,
    forcing: &F,
    t_span: (f64, f64),
    opts: &IntegratorOptions,
    p: &Params,
) -> Result<Trajectory> {
    check_span(t_span)?;
    x0.check_simplex()?;
    let mut traj = Trajectory { forcing: Some(Vec::new()), ..Trajectory::default() };
    let mut lums = Vec::new();
    integrate_field(
        |t, y| model::rhs(State::from_array(y), forcing.luminosity(t), p),
        t_span.0,
        x0.to_array(),
        t_span.1,
        opts,
        |t, y| {
            traj.times.push(t);
            traj.states.push(State::from_array(*y));
            lums.push(forcing.luminosity(t));
            ControlFlow::Continue(())
        },
    )?;
    traj.forcing = Some(lums);
    Ok(traj)
}

/// Result of running the frozen system until it settles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Convergence {
    /// Settled within [`MATCH_TOLERANCE`] of a known stable equilibrium.
    Attractor { label: Label, state: State, time: f64 },
    /// `max_time` elapsed without settling on a known equilibrium.
    Unresolved { state: State, time: f64 },
}

impl Convergence {
    pub fn label(&self) -> Option<Label> {
        match self {
            Convergence::Attractor { label, .. } => Some(*label),
            Convergence::Unresolved { .. } => None,
        }
    }

    pub fn state(&self) -> State {
        match self {
            Convergence::Attractor { state, .. } | Convergence::Unresolved { state, .. } => *state,
        }
    }
}

fn settled_on(state: State, luminosity: f64, known: &[Equilibrium], p: &Params) -> Result<Option<Label>> {
    if model::sup_norm(model::rhs(state, luminosity, p)?) >= SETTLED_RHS {
        return Ok(None);
    }
    Ok(known
        .iter()
        .filter(|e| e.is_stable())
        .map(|e| (e.state.distance(&state), e.label))
        .filter(|(d, _)| *d < MATCH_TOLERANCE)
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, l)| l))
}

/// Integrate the frozen system in chunks until the state settles on one of
/// `known`, or report it unresolved once `opts.max_time` has elapsed.
pub fn converge_to_attractor(
    x0: State,
    luminosity: f64,
    known: &[Equilibrium],
    opts: &IntegratorOptions,
    p: &Params,
) -> Result<Convergence> {
    converge_with_observer(x0, luminosity, known, opts, p, |_, _| {})
}

/// [`converge_to_attractor`] that also reports every accepted step, with
/// time measured from the start of the settling run.
pub fn converge_with_observer<O: FnMut(f64, &[f64; 2])>(
    x0: State,
    luminosity: f64,
    known: &[Equilibrium],
    opts: &IntegratorOptions,
    p: &Params,
    mut observer: O,
) -> Result<Convergence> {
    x0.check_simplex()?;
    let mut t = 0.0;
    let mut y = x0.to_array();
    loop {
        let state = State::from_array(y);
        if let Some(label) = settled_on(state, luminosity, known, p)? {
            return Ok(Convergence::Attractor { label, state, time: t });
        }
        if t >= opts.max_time {
            return Ok(Convergence::Unresolved { state, time: t });
        }
        let t_next = (t + CONVERGENCE_CHUNK).min(opts.max_time);
        let t_chunk = t;
        let end = integrate_field(
            |_, y| model::rhs(State::from_array(y), luminosity, p),
            t,
            y,
            t_next,
            opts,
            |s, y| {
                if s > t_chunk {
                    observer(s, y);
                }
                ControlFlow::Continue(())
            },
        )?;
        t = end.t;
        y = end.y;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibria::{coexistence_analytic, enumerate_equilibria};
    use approx::assert_relative_eq;

    fn p() -> Params {
        Params::default()
    }

    #[test]
    fn exponential_decay_matches_closed_form() {
        let opts = IntegratorOptions { rel_tol: 1e-10, abs_tol: 1e-14, ..Default::default() };
        let end = integrate_field(
            |_, y| Ok([-y[0], -2.0 * y[1]]),
            0.0,
            [1.0, 1.0],
            3.0,
            &opts,
            |_, _| ControlFlow::Continue(()),
        )
        .unwrap();
        assert_eq!(end.t, 3.0);
        assert_relative_eq!(end.y[0], (-3.0f64).exp(), max_relative = 1e-8);
        assert_relative_eq!(end.y[1], (-6.0f64).exp(), max_relative = 1e-8);
    }

    #[test]
    fn integrates_backwards_in_time() {
        let end = integrate_field(
            |_, y| Ok([y[0], 0.0]),
            1.0,
            [1.0, 0.0],
            0.0,
            &IntegratorOptions::default(),
            |_, _| ControlFlow::Continue(()),
        )
        .unwrap();
        assert_eq!(end.t, 0.0);
        assert_relative_eq!(end.y[0], (-1.0f64).exp(), max_relative = 1e-8);
    }

    #[test]
    fn fifth_order_convergence() {
        // Fixed steps: the global error should fall by about 2^5 per halving.
        let run = |h: f64| {
            let opts = IntegratorOptions {
                rel_tol: 1.0,
                abs_tol: 1.0,
                max_step: h,
                initial_step: h,
                max_time: 10.0,
            };
            let end = integrate_field(
                |t, y| Ok([y[1], -y[0] + 0.1 * t.sin()]),
                0.0,
                [1.0, 0.0],
                4.0,
                &opts,
                |_, _| ControlFlow::Continue(()),
            )
            .unwrap();
            end.y
        };
        let reference = run(1e-3);
        let e1 = (run(0.2)[0] - reference[0]).abs();
        let e2 = (run(0.1)[0] - reference[0]).abs();
        let order = (e1 / e2).log2();
        assert!(order > 4.0, "observed order {order}");
    }

    #[test]
    fn dead_planet_stays_dead() {
        let traj =
            integrate_autonomous(State::ORIGIN, 1.1, (0.0, 50.0), &IntegratorOptions::default(), &p())
                .unwrap();
        assert!(traj.states.iter().all(|s| *s == State::ORIGIN));
        assert!(traj.forcing.is_none());
        assert!(traj.times.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn coexistence_equilibrium_is_stationary() {
        let p = p();
        let e5 = coexistence_analytic(1.0, &p).unwrap().unwrap();
        let traj =
            integrate_autonomous(e5.state, 1.0, (0.0, 100.0), &IntegratorOptions::default(), &p)
                .unwrap();
        assert!(traj.states.iter().all(|s| s.distance(&e5.state) < 1e-6));
    }

    #[test]
    fn small_seeding_grows_to_coexistence() {
        let p = p();
        let e5 = coexistence_analytic(1.0, &p).unwrap().unwrap();
        let traj = integrate_autonomous(
            State::new(0.01, 0.01),
            1.0,
            (0.0, 200.0),
            &IntegratorOptions::default(),
            &p,
        )
        .unwrap();
        let last = traj.last_state().unwrap();
        assert!(last.distance(&e5.state) < 1e-4, "{last:?} vs {:?}", e5.state);
    }

    #[test]
    fn constant_forcing_matches_autonomous_bitwise() {
        let p = p();
        let opts = IntegratorOptions::default();
        let x0 = State::new(0.2, 0.3);
        let a = integrate_autonomous(x0, 0.9, (0.0, 40.0), &opts, &p).unwrap();
        let f = integrate_forced(x0, &0.9, (0.0, 40.0), &opts, &p).unwrap();
        assert_eq!(a.times, f.times);
        assert_eq!(a.states, f.states);
        assert!(f.forcing.unwrap().iter().all(|&l| l == 0.9));
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = p();
        let opts = IntegratorOptions::default();
        assert!(integrate_autonomous(State::new(0.8, 0.8), 1.0, (0.0, 1.0), &opts, &p).is_err());
        assert!(matches!(
            integrate_autonomous(State::ORIGIN, 1.0, (1.0, 1.0), &opts, &p),
            Err(Error::InvalidSpan { .. })
        ));
        let bad = IntegratorOptions { rel_tol: 0.0, ..opts };
        assert!(integrate_autonomous(State::ORIGIN, 1.0, (0.0, 1.0), &bad, &p).is_err());
    }

    #[test]
    fn convergence_labels() {
        let p = p();
        let opts = IntegratorOptions::default();
        let hot = enumerate_equilibria(1.6, &p).unwrap();
        let c = converge_to_attractor(State::ORIGIN, 1.6, &hot, &opts, &p).unwrap();
        assert_eq!(c.label(), Some(Label::E0));
        // an unstable equilibrium is never reported as the end state
        let known = enumerate_equilibria(1.0, &p).unwrap();
        let short = IntegratorOptions { max_time: 50.0, ..opts };
        let c = converge_to_attractor(State::ORIGIN, 1.0, &known, &short, &p).unwrap();
        assert_eq!(c.label(), None);
        let e5 = known.iter().find(|e| e.label == Label::E5).unwrap();
        let start = State::new(e5.state.alpha_w + 1e-4, e5.state.alpha_b + 1e-4);
        let c = converge_to_attractor(start, 1.0, &known, &opts, &p).unwrap();
        assert_eq!(c.label(), Some(Label::E5));
    }

    #[test]
    fn unresolved_when_time_runs_out() {
        let p = p();
        let opts = IntegratorOptions { max_time: 10.0, ..Default::default() };
        let known = enumerate_equilibria(1.0, &p).unwrap();
        let c = converge_to_attractor(State::new(0.01, 0.01), 1.0, &known, &opts, &p).unwrap();
        assert!(matches!(c, Convergence::Unresolved { time, .. } if time == 10.0));
    }
}
