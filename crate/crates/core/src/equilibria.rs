//! Fixed points of the frozen system at one luminosity.
//!
//! The origin is always fixed. Single-species states live on the two
//! invariant axes and reduce to a scalar condition; the coexistence state
//! reduces to an L-independent temperature pair, after which cover
//! fractions follow from a linear solve.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{self, State};
use crate::params::Params;
use crate::solver::MATCH_TOLERANCE;

/// Residual bound every reported equilibrium satisfies.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;
/// Newton stops once the sup-norm residual is below this.
pub const NEWTON_TOLERANCE: f64 = 1e-12;
pub const NEWTON_MAX_ITER: usize = 50;
/// Eigenvalues with smaller real part make an equilibrium marginal.
pub const MARGINAL_TOLERANCE: f64 = 1e-8;
/// Cover fractions at or below this count as absent when labelling.
pub const SUPPORT_TOLERANCE: f64 = 1e-12;
/// Sample count for the sign-change scan along an axis.
pub const AXIS_SAMPLES: usize = 512;
/// Temperatures closer than this (K) to a growth cutoff trigger a warning
/// when the field is differentiated.
pub const CUTOFF_WARNING_MARGIN: f64 = 0.5;

pub type Matrix2 = [[f64; 2]; 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    E0,
    E1,
    E2,
    E3,
    E4,
    E5,
}

impl Label {
    pub const ALL: [Label; 6] = [Label::E0, Label::E1, Label::E2, Label::E3, Label::E4, Label::E5];

    pub fn as_str(self) -> &'static str {
        match self {
            Label::E0 => "e0",
            Label::E1 => "e1",
            Label::E2 => "e2",
            Label::E3 => "e3",
            Label::E4 => "e4",
            Label::E5 => "e5",
        }
    }

    pub fn is_living(self) -> bool {
        self != Label::E0
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Label::ALL
            .into_iter()
            .find(|l| l.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Configuration(format!("unknown equilibrium label {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Species {
    White,
    Black,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stability {
    StableNode,
    StableFocus,
    Saddle,
    UnstableNode,
    UnstableFocus,
    /// Some eigenvalue has `|Re| < MARGINAL_TOLERANCE` (fold neighbourhoods).
    Marginal,
}

impl Stability {
    pub fn is_stable(self) -> bool {
        matches!(self, Stability::StableNode | Stability::StableFocus)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Stability::StableNode => "stable-node",
            Stability::StableFocus => "stable-focus",
            Stability::Saddle => "saddle",
            Stability::UnstableNode => "unstable-node",
            Stability::UnstableFocus => "unstable-focus",
            Stability::Marginal => "marginal",
        }
    }
}

impl fmt::Display for Stability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Equilibrium {
    pub state: State,
    pub luminosity: f64,
    pub eigenvalues: [Complex64; 2],
    pub stability: Stability,
    pub label: Label,
    /// Emission temperature (K).
    pub t_e: f64,
}

impl Equilibrium {
    pub fn is_stable(&self) -> bool {
        self.stability.is_stable()
    }
}

fn fd_step(x: f64) -> f64 {
    1e-7 * x.abs().max(1.0)
}

fn warn_near_cutoff(state: State, luminosity: f64, p: &Params, strict: bool) -> Result<()> {
    let Ok(c) = model::climate(state, luminosity, p) else {
        return Ok(());
    };
    if model::cutoff_margin(&c, p) < CUTOFF_WARNING_MARGIN {
        let w = p.growth_half_width();
        let temperature = [c.t_w, c.t_b, c.t_g]
            .into_iter()
            .min_by(|a, b| {
                ((a - p.t_opt).abs() - w).abs().total_cmp(&((b - p.t_opt).abs() - w).abs())
            })
            .unwrap_or(c.t_e);
        if strict {
            return Err(Error::CutoffProximity { temperature });
        }
        log::warn!(
            "differentiating near a growth cutoff: T = {temperature:.3} K at state ({}, {}), L = {luminosity}",
            state.alpha_w,
            state.alpha_b
        );
    }
    Ok(())
}

/// Central-difference Jacobian of the vector field with one step `h` per
/// column. Differences are taken on the analytically extended field, so
/// states on the simplex faces are fine.
pub fn jacobian_with_steps(state: State, luminosity: f64, p: &Params, h: [f64; 2]) -> Result<Matrix2> {
    let x = state.to_array();
    let mut j = [[0.0; 2]; 2];
    for col in 0..2 {
        let mut plus = x;
        let mut minus = x;
        plus[col] += h[col];
        minus[col] -= h[col];
        let fp = model::extended_rhs(plus, luminosity, p)?;
        let fm = model::extended_rhs(minus, luminosity, p)?;
        let width = plus[col] - minus[col];
        for row in 0..2 {
            j[row][col] = (fp[row] - fm[row]) / width;
        }
    }
    Ok(j)
}

/// Jacobian of the vector field at `state`. Logs a warning when a local
/// temperature sits within half a kelvin of a growth cutoff, where the
/// field is not differentiable.
pub fn jacobian(state: State, luminosity: f64, p: &Params) -> Result<Matrix2> {
    jacobian_checked(state, luminosity, p, false)
}

/// As [`jacobian`], with `strict` turning the cutoff warning into an error.
pub fn jacobian_checked(state: State, luminosity: f64, p: &Params, strict: bool) -> Result<Matrix2> {
    state.check_simplex()?;
    warn_near_cutoff(state, luminosity, p, strict)?;
    jacobian_with_steps(state, luminosity, p, [fd_step(state.alpha_w), fd_step(state.alpha_b)])
}

/// Derivative of the vector field with respect to luminosity.
pub fn luminosity_derivative(x: [f64; 2], luminosity: f64, p: &Params) -> Result<[f64; 2]> {
    let h = fd_step(luminosity);
    let fp = model::extended_rhs(x, luminosity + h, p)?;
    let fm = model::extended_rhs(x, luminosity - h, p)?;
    let width = (luminosity + h) - (luminosity - h);
    Ok([(fp[0] - fm[0]) / width, (fp[1] - fm[1]) / width])
}

pub fn determinant(j: &Matrix2) -> f64 {
    j[0][0] * j[1][1] - j[0][1] * j[1][0]
}

pub fn eigenvalues(j: &Matrix2) -> [Complex64; 2] {
    let tr = j[0][0] + j[1][1];
    let det = determinant(j);
    let disc = tr * tr - 4.0 * det;
    if disc >= 0.0 {
        let s = disc.sqrt();
        // Avoid cancellation in the smaller-magnitude root.
        let big = 0.5 * (tr + tr.signum() * s);
        let (l1, l2) = if big == 0.0 { (0.0, 0.0) } else { (big, det / big) };
        let (lo, hi) = if l1 <= l2 { (l1, l2) } else { (l2, l1) };
        [Complex64::new(lo, 0.0), Complex64::new(hi, 0.0)]
    } else {
        let im = 0.5 * (-disc).sqrt();
        [Complex64::new(0.5 * tr, -im), Complex64::new(0.5 * tr, im)]
    }
}

pub fn classify(eigs: &[Complex64; 2]) -> Stability {
    if eigs.iter().any(|l| l.re.abs() < MARGINAL_TOLERANCE) {
        return Stability::Marginal;
    }
    let complex = eigs[0].im != 0.0;
    let neg = eigs.iter().filter(|l| l.re < 0.0).count();
    match (complex, neg) {
        (true, 2) => Stability::StableFocus,
        (true, _) => Stability::UnstableFocus,
        (false, 2) => Stability::StableNode,
        (false, 0) => Stability::UnstableNode,
        (false, _) => Stability::Saddle,
    }
}

/// Solve the 2x2 system `j x = b` by Cramer's rule.
pub(crate) fn solve2(j: &Matrix2, b: [f64; 2]) -> Option<[f64; 2]> {
    let det = determinant(j);
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    Some([
        (b[0] * j[1][1] - j[0][1] * b[1]) / det,
        (j[0][0] * b[1] - j[1][0] * b[0]) / det,
    ])
}

/// Newton iteration on the full two-dimensional field.
pub fn newton_refine(start: State, luminosity: f64, p: &Params) -> Result<State> {
    let mut x = start.to_array();
    let mut residual = f64::INFINITY;
    for _ in 0..=NEWTON_MAX_ITER {
        let f = model::extended_rhs(x, luminosity, p)?;
        residual = model::sup_norm(f);
        if residual < NEWTON_TOLERANCE {
            return Ok(State::from_array(x));
        }
        let j = jacobian_with_steps(State::from_array(x), luminosity, p, [fd_step(x[0]), fd_step(x[1])])?;
        let Some(dx) = solve2(&j, [-f[0], -f[1]]) else {
            break;
        };
        x[0] += dx[0];
        x[1] += dx[1];
        if !(x[0].is_finite() && x[1].is_finite()) {
            break;
        }
    }
    Err(Error::NewtonDiverged { residual })
}

fn label_by_support(state: State, j: &Matrix2) -> Label {
    let w = state.alpha_w > SUPPORT_TOLERANCE;
    let b = state.alpha_b > SUPPORT_TOLERANCE;
    match (w, b) {
        (false, false) => Label::E0,
        (true, true) => Label::E5,
        // On an axis the lower label goes to the root that repels along
        // the axis (the saddle side of the fold), the higher to the root
        // that attracts along it.
        (true, false) => {
            if j[0][0] >= 0.0 {
                Label::E1
            } else {
                Label::E2
            }
        }
        (false, true) => {
            if j[1][1] >= 0.0 {
                Label::E3
            } else {
                Label::E4
            }
        }
    }
}

/// Build the full record (eigen-data, class, label, emission temperature)
/// for a converged fixed point.
pub fn equilibrium_at(state: State, luminosity: f64, p: &Params) -> Result<Equilibrium> {
    let j = jacobian(state, luminosity, p)?;
    let eigenvalues = eigenvalues(&j);
    Ok(Equilibrium {
        state,
        luminosity,
        eigenvalues,
        stability: classify(&eigenvalues),
        label: label_by_support(state, &j),
        t_e: model::climate(state, luminosity, p)?.t_e,
    })
}

fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    let mut f_lo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return mid;
        }
        if (f_mid < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Local temperatures `(T_w, T_b)` shared by every coexistence state.
///
/// Both growth brackets vanish, so `beta(T_w) = beta(T_b)`; the parabola
/// then forces `T_w + T_b = 2 T_opt`, and the local heat balance fixes
/// `T_b^4 - T_w^4 = q (A_w - A_b)`. None of this involves L.
pub fn coexistence_temperatures(p: &Params) -> Result<(f64, f64)> {
    p.validate()?;
    let target = p.q * (p.albedo_white - p.albedo_black);
    let g = |t_b: f64| t_b.powi(4) - (2.0 * p.t_opt - t_b).powi(4) - target;
    let lo = p.t_opt;
    let hi = p.t_opt + p.growth_half_width();
    let (g_lo, g_hi) = (g(lo), g(hi));
    if !(g_lo < 0.0 && g_hi > 0.0) {
        return Err(Error::NoCoexistenceRoot(format!(
            "temperature condition does not change sign on [{lo}, {hi}] (values {g_lo:e}, {g_hi:e})"
        )));
    }
    let t_b = bisect(g, lo, hi);
    Ok((2.0 * p.t_opt - t_b, t_b))
}

/// The coexistence equilibrium at `luminosity`, or `None` when it falls
/// outside the open simplex.
pub fn coexistence_analytic(luminosity: f64, p: &Params) -> Result<Option<Equilibrium>> {
    p.validate_luminosity(luminosity)?;
    let (_, t_b) = coexistence_temperatures(p)?;
    let beta = model::growth_rate(t_b, p);
    if beta <= 0.0 {
        return Ok(None);
    }
    let alpha_g = p.gamma / beta;
    if alpha_g >= 1.0 {
        return Ok(None);
    }
    let absorbed = p.flux_scale() * luminosity;
    let albedo = (t_b.powi(4) + p.q * p.albedo_black - absorbed) / (p.q - absorbed);
    let covered = 1.0 - alpha_g;
    let alpha_w =
        (albedo - alpha_g * p.albedo_ground - covered * p.albedo_black) / (p.albedo_white - p.albedo_black);
    let alpha_b = covered - alpha_w;
    if !(alpha_w > 0.0 && alpha_b > 0.0) {
        return Ok(None);
    }
    let mut state = State::new(alpha_w, alpha_b);
    if model::sup_norm(model::rhs(state, luminosity, p)?) > NEWTON_TOLERANCE {
        state = newton_refine(state, luminosity, p)?;
    }
    let mut eq = equilibrium_at(state, luminosity, p)?;
    eq.label = Label::E5;
    Ok(Some(eq))
}

fn axis_state(species: Species, alpha: f64) -> State {
    match species {
        Species::White => State::new(alpha, 0.0),
        Species::Black => State::new(0.0, alpha),
    }
}

/// Growth bracket along an invariant axis: `(1 - a) beta(T(a)) - gamma`.
fn axis_bracket(alpha: f64, species: Species, luminosity: f64, p: &Params) -> Result<f64> {
    let c = model::climate(axis_state(species, alpha), luminosity, p)?;
    let t = match species {
        Species::White => c.t_w,
        Species::Black => c.t_b,
    };
    Ok((1.0 - alpha) * model::growth_rate(t, p) - p.gamma)
}

/// Equilibria with only one species present.
pub fn single_species_equilibria(luminosity: f64, species: Species, p: &Params) -> Result<Vec<Equilibrium>> {
    p.validate()?;
    p.validate_luminosity(luminosity)?;
    let n = AXIS_SAMPLES;
    let grid: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
    let values = grid
        .iter()
        .map(|&a| axis_bracket(a, species, luminosity, p))
        .collect::<Result<Vec<_>>>()?;

    let mut roots = Vec::new();
    for i in 0..n {
        let (a, b) = (values[i], values[i + 1]);
        let exact_interior = i > 0 && a == 0.0;
        if exact_interior {
            roots.push(grid[i]);
        } else if a != 0.0 && b != 0.0 && (a < 0.0) != (b < 0.0) {
            let f = |x: f64| axis_bracket(x, species, luminosity, p).unwrap_or(f64::NAN);
            roots.push(bisect(f, grid[i], grid[i + 1]));
        }
    }

    let mut out = Vec::with_capacity(roots.len());
    for alpha in roots {
        let state = newton_refine(axis_state(species, alpha), luminosity, p)?;
        if model::sup_norm(model::rhs(state, luminosity, p)?) >= RESIDUAL_TOLERANCE {
            return Err(Error::NewtonDiverged {
                residual: model::sup_norm(model::rhs(state, luminosity, p)?),
            });
        }
        out.push(equilibrium_at(state, luminosity, p)?);
    }
    if out.len() == 2 {
        let (lower, upper) = match species {
            Species::White => (Label::E1, Label::E2),
            Species::Black => (Label::E3, Label::E4),
        };
        out[0].label = lower;
        out[1].label = upper;
    }
    Ok(out)
}

/// Every physically relevant equilibrium at `luminosity`, sorted by label.
pub fn enumerate_equilibria(luminosity: f64, p: &Params) -> Result<Vec<Equilibrium>> {
    p.validate()?;
    p.validate_luminosity(luminosity)?;
    let mut all = vec![equilibrium_at(State::ORIGIN, luminosity, p)?];
    all.extend(single_species_equilibria(luminosity, Species::White, p)?);
    all.extend(single_species_equilibria(luminosity, Species::Black, p)?);
    all.extend(coexistence_analytic(luminosity, p)?);
    for (i, a) in all.iter().enumerate() {
        for b in &all[i + 1..] {
            let distance = a.state.distance(&b.state);
            if distance < MATCH_TOLERANCE {
                return Err(Error::DuplicateEquilibria { luminosity, distance });
            }
        }
    }
    all.sort_by(|a, b| a.label.cmp(&b.label).then(a.state.alpha_w.total_cmp(&b.state.alpha_w)));
    Ok(all)
}

/// The equilibrium with `label` at `luminosity`.
pub fn find_equilibrium(label: Label, luminosity: f64, p: &Params) -> Result<Equilibrium> {
    enumerate_equilibria(luminosity, p)?
        .into_iter()
        .find(|e| e.label == label)
        .ok_or(Error::MissingEquilibrium { label, luminosity })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn p() -> Params {
        Params::default()
    }

    #[test]
    fn label_parsing() {
        assert_eq!("e3".parse::<Label>().unwrap(), Label::E3);
        assert_eq!("E5".parse::<Label>().unwrap(), Label::E5);
        assert!("e7".parse::<Label>().is_err());
    }

    #[test]
    fn eigen_classification() {
        let c = |a, b, c, d| classify(&eigenvalues(&[[a, b], [c, d]]));
        assert_eq!(c(-1.0, 0.0, 0.0, -2.0), Stability::StableNode);
        assert_eq!(c(1.0, 0.0, 0.0, 2.0), Stability::UnstableNode);
        assert_eq!(c(-1.0, 0.0, 0.0, 2.0), Stability::Saddle);
        assert_eq!(c(-0.1, -1.0, 1.0, -0.1), Stability::StableFocus);
        assert_eq!(c(0.1, -1.0, 1.0, 0.1), Stability::UnstableFocus);
        assert_eq!(c(-1e-10, 0.0, 0.0, -1.0), Stability::Marginal);
        // Repeated eigenvalue counts as a node.
        assert_eq!(c(-1.0, 1.0, 0.0, -1.0), Stability::StableNode);
        let e = eigenvalues(&[[3.0, 1.0], [2.0, 2.0]]);
        assert_relative_eq!(e[0].re, 1.0, epsilon = 1e-14);
        assert_relative_eq!(e[1].re, 4.0, epsilon = 1e-14);
    }

    #[test]
    fn jacobian_at_origin_is_diagonal() {
        let p = p();
        for l in [1.0, 1.2, 0.7] {
            let c = model::climate(State::ORIGIN, l, &p).unwrap();
            let expected = [
                model::growth_rate(c.t_w, &p) - p.gamma,
                model::growth_rate(c.t_b, &p) - p.gamma,
            ];
            let j = jacobian(State::ORIGIN, l, &p).unwrap();
            assert_relative_eq!(j[0][0], expected[0], epsilon = 1e-8);
            assert_relative_eq!(j[1][1], expected[1], epsilon = 1e-8);
            assert!(j[0][1].abs() < 1e-12 && j[1][0].abs() < 1e-12);
        }
    }

    #[test]
    fn jacobian_at_cold_origin_is_pure_decay() {
        let p = p();
        let c = model::climate(State::ORIGIN, 0.2, &p).unwrap();
        assert!(c.t_b < p.t_opt - p.growth_half_width());
        let j = jacobian(State::ORIGIN, 0.2, &p).unwrap();
        assert_relative_eq!(j[0][0], -0.3, epsilon = 1e-9);
        assert_relative_eq!(j[1][1], -0.3, epsilon = 1e-9);
    }

    #[test]
    fn jacobian_is_second_order() {
        // Successive differences shrink by ~4 per halving of the step.
        let p = p();
        let s = State::new(0.3, 0.25);
        let at = |h: f64| jacobian_with_steps(s, 1.0, &p, [h, h]).unwrap();
        let (a, b, c) = (at(4e-3), at(2e-3), at(1e-3));
        for r in 0..2 {
            for col in 0..2 {
                let ratio = (a[r][col] - b[r][col]) / (b[r][col] - c[r][col]);
                assert!((ratio - 4.0).abs() < 0.05, "entry ({r},{col}) ratio {ratio}");
            }
        }
    }

    #[test]
    fn jacobian_matches_directional_derivative() {
        let p = p();
        let s = State::new(0.2, 0.4);
        let j = jacobian(s, 0.9, &p).unwrap();
        let v = [0.6, -0.8];
        let h = 1e-6;
        let fp = model::rhs(State::new(s.alpha_w + h * v[0], s.alpha_b + h * v[1]), 0.9, &p).unwrap();
        let fm = model::rhs(State::new(s.alpha_w - h * v[0], s.alpha_b - h * v[1]), 0.9, &p).unwrap();
        for r in 0..2 {
            let dd = (fp[r] - fm[r]) / (2.0 * h);
            assert_relative_eq!(dd, j[r][0] * v[0] + j[r][1] * v[1], epsilon = 1e-7);
        }
    }

    #[test]
    fn strict_jacobian_rejects_cutoff() {
        let p = p();
        // Find L where the bare-ground white temperature sits on the cold cutoff.
        let target = p.t_opt - p.growth_half_width();
        let l = bisect(
            |l| model::climate(State::ORIGIN, l, &p).unwrap().t_w - target,
            0.5,
            1.5,
        );
        assert!(matches!(
            jacobian_checked(State::ORIGIN, l, &p, true),
            Err(Error::CutoffProximity { .. })
        ));
        assert!(jacobian_checked(State::ORIGIN, l, &p, false).is_ok());
    }

    #[test]
    fn coexistence_temperatures_are_l_independent() {
        let p = p();
        let (t_w, t_b) = coexistence_temperatures(&p).unwrap();
        assert_relative_eq!(t_b, 299.42, epsilon = 0.01);
        assert_relative_eq!(t_w, 291.58, epsilon = 0.01);
        assert_relative_eq!(p.gamma / model::growth_rate(t_b, &p), 0.3158, epsilon = 1e-4);
    }

    #[test]
    fn coexistence_at_unit_luminosity() {
        let p = p();
        let e5 = coexistence_analytic(1.0, &p).unwrap().unwrap();
        assert_relative_eq!(e5.state.alpha_w, 0.404, epsilon = 1e-3);
        assert_relative_eq!(e5.state.alpha_b, 0.280, epsilon = 1e-3);
        assert!(model::sup_norm(model::rhs(e5.state, 1.0, &p).unwrap()) < RESIDUAL_TOLERANCE);
        assert!(e5.is_stable());
        assert_eq!(e5.label, Label::E5);
        let refined = newton_refine(State::new(0.41, 0.27), 1.0, &p).unwrap();
        assert!(refined.distance(&e5.state) < 1e-9);
    }

    #[test]
    fn coexistence_absent_outside_range() {
        let p = p();
        assert!(coexistence_analytic(1.6, &p).unwrap().is_none());
        assert!(coexistence_analytic(0.6, &p).unwrap().is_none());
    }

    #[test]
    fn coexistence_bracket_failure_is_distinct() {
        // Huge heat transfer pushes the temperature split beyond the growth window.
        let p = Params { q: 0.9 * 917.0 / 5.670374419e-8 * 10.0, ..Params::default() };
        assert!(matches!(coexistence_temperatures(&p), Err(Error::NoCoexistenceRoot(_))));
    }

    #[test]
    fn white_axis_at_high_luminosity() {
        let p = p();
        let roots = single_species_equilibria(1.4, Species::White, &p).unwrap();
        assert_eq!(roots.len(), 2);
        assert_eq!(roots[0].label, Label::E1);
        assert_eq!(roots[0].stability, Stability::Saddle);
        assert_eq!(roots[1].label, Label::E2);
        assert!(roots[1].is_stable());
        assert!(roots[1].state.alpha_w > roots[0].state.alpha_w);
        assert!(roots.iter().all(|e| e.state.alpha_b == 0.0));
    }

    #[test]
    fn black_axis_at_low_luminosity() {
        let p = p();
        let roots = single_species_equilibria(0.68, Species::Black, &p).unwrap();
        assert_eq!(roots.len(), 2);
        assert_eq!(roots[0].label, Label::E3);
        assert_eq!(roots[1].label, Label::E4);
        assert!(roots[1].is_stable());
        assert!(roots[1].state.alpha_b > roots[0].state.alpha_b);
    }

    #[test]
    fn too_cold_for_daisies() {
        let p = p();
        let c = model::climate(State::ORIGIN, 0.2, &p).unwrap();
        assert!(c.t_g < p.t_opt - p.growth_half_width());
        assert!(single_species_equilibria(0.2, Species::White, &p).unwrap().is_empty());
        assert!(single_species_equilibria(0.2, Species::Black, &p).unwrap().is_empty());
    }

    #[test]
    fn enumeration_examples() {
        let p = p();
        let at_one = enumerate_equilibria(1.0, &p).unwrap();
        assert_eq!(at_one[0].label, Label::E0);
        assert!(at_one.iter().any(|e| e.label == Label::E5 && e.is_stable()));
        let hot = enumerate_equilibria(1.58, &p).unwrap();
        assert_eq!(hot.len(), 1);
        assert_eq!(hot[0].label, Label::E0);
        for l in [0.5, 0.8, 1.1, 1.3, 1.5, 1.7] {
            let all = enumerate_equilibria(l, &p).unwrap();
            assert!(all.iter().any(|e| e.label == Label::E0 && e.state == State::ORIGIN));
            for e in &all {
                assert!(model::sup_norm(model::rhs(e.state, l, &p).unwrap()) < RESIDUAL_TOLERANCE);
                assert_eq!(classify(&e.eigenvalues), e.stability);
            }
        }
    }

    #[test]
    fn labels_follow_support() {
        let p = p();
        for i in 0..40 {
            let l = 0.5 + i as f64 * 0.03;
            for e in enumerate_equilibria(l, &p).unwrap() {
                let (w, b) = (e.state.alpha_w > 0.0, e.state.alpha_b > 0.0);
                let ok = match e.label {
                    Label::E0 => !w && !b,
                    Label::E1 | Label::E2 => w && !b,
                    Label::E3 | Label::E4 => !w && b,
                    Label::E5 => w && b,
                };
                assert!(ok, "{e:?}");
            }
        }
    }
}
