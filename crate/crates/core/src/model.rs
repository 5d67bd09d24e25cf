//! Pointwise evaluation of the two-species vector field: planetary albedo,
//! emission and local temperatures, growth rates and cover-fraction
//! derivatives. Nothing here integrates or solves.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Surface};
use crate::params::Params;

/// How far outside the cover simplex a state may sit before it is rejected.
pub const SIMPLEX_TOLERANCE: f64 = 1e-9;

/// Cover fractions of white and black daisies. Bare ground is derived.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct State {
    pub alpha_w: f64,
    pub alpha_b: f64,
}

impl State {
    pub const ORIGIN: State = State { alpha_w: 0.0, alpha_b: 0.0 };

    pub fn new(alpha_w: f64, alpha_b: f64) -> Self {
        State { alpha_w, alpha_b }
    }

    /// Bare-ground fraction `1 - alpha_w - alpha_b`, clipped at zero.
    pub fn bare_ground(&self) -> f64 {
        (1.0 - self.alpha_w - self.alpha_b).max(0.0)
    }

    pub fn in_simplex(&self, tolerance: f64) -> bool {
        self.alpha_w.is_finite()
            && self.alpha_b.is_finite()
            && self.alpha_w >= -tolerance
            && self.alpha_b >= -tolerance
            && self.alpha_w + self.alpha_b <= 1.0 + tolerance
    }

    pub fn check_simplex(&self) -> Result<()> {
        if self.in_simplex(SIMPLEX_TOLERANCE) {
            Ok(())
        } else {
            Err(Error::OutsideSimplex { alpha_w: self.alpha_w, alpha_b: self.alpha_b })
        }
    }

    pub fn distance(&self, other: &State) -> f64 {
        (self.alpha_w - other.alpha_w).hypot(self.alpha_b - other.alpha_b)
    }

    pub fn to_array(self) -> [f64; 2] {
        [self.alpha_w, self.alpha_b]
    }

    pub fn from_array(x: [f64; 2]) -> Self {
        State { alpha_w: x[0], alpha_b: x[1] }
    }
}

impl From<[f64; 2]> for State {
    fn from(x: [f64; 2]) -> Self {
        State::from_array(x)
    }
}

/// Albedo and temperatures implied by a cover state at one luminosity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalClimate {
    pub albedo: f64,
    /// Emission temperature (K).
    pub t_e: f64,
    pub t_w: f64,
    pub t_b: f64,
    pub t_g: f64,
}

/// Planetary albedo as the cover-weighted mix of the three surface albedos.
pub fn planetary_albedo(state: State, p: &Params) -> Result<f64> {
    state.check_simplex()?;
    Ok(mix_albedo(state.alpha_w, state.alpha_b, state.bare_ground(), p))
}

fn mix_albedo(alpha_w: f64, alpha_b: f64, alpha_g: f64, p: &Params) -> f64 {
    alpha_w * p.albedo_white + alpha_b * p.albedo_black + alpha_g * p.albedo_ground
}

pub fn climate(state: State, luminosity: f64, p: &Params) -> Result<LocalClimate> {
    state.check_simplex()?;
    climate_from_albedo(planetary_albedo(state, p)?, luminosity, p)
}

/// Temperatures for a given planetary albedo. Separate from [`climate`] so
/// callers working outside the simplex (manifold tracing, finite
/// differences) can reuse the radiative balance.
pub(crate) fn climate_from_albedo(albedo: f64, luminosity: f64, p: &Params) -> Result<LocalClimate> {
    if !(luminosity.is_finite() && luminosity > 0.0) {
        return Err(Error::InvalidLuminosity(luminosity));
    }
    let t_e4 = p.flux_scale() * luminosity * (1.0 - albedo);
    let local = |surface_albedo: f64, surface: Surface| {
        let t4 = p.q * (albedo - surface_albedo) + t_e4;
        if t4 < 0.0 {
            Err(Error::NonphysicalHeatTransfer { surface, luminosity })
        } else {
            Ok(t4.powf(0.25))
        }
    };
    if t_e4 < 0.0 {
        return Err(Error::NonphysicalHeatTransfer { surface: Surface::Ground, luminosity });
    }
    Ok(LocalClimate {
        albedo,
        t_e: t_e4.powf(0.25),
        t_w: local(p.albedo_white, Surface::White)?,
        t_b: local(p.albedo_black, Surface::Black)?,
        t_g: local(p.albedo_ground, Surface::Ground)?,
    })
}

/// Quadratic growth rate, zero outside `t_opt +/- 1/sqrt(k)`.
pub fn growth_rate(temperature: f64, p: &Params) -> f64 {
    let d = temperature - p.t_opt;
    if d.abs() < p.growth_half_width() {
        // Clamp guards the last ulp at the cutoff.
        (1.0 - p.k * d * d).max(0.0)
    } else {
        0.0
    }
}

/// Time derivative of `(alpha_w, alpha_b)` at fixed luminosity.
///
/// Accepts states up to [`SIMPLEX_TOLERANCE`] outside the simplex; bare
/// ground is clipped at zero.
pub fn rhs(state: State, luminosity: f64, p: &Params) -> Result<[f64; 2]> {
    state.check_simplex()?;
    let alpha_g = state.bare_ground();
    let albedo = mix_albedo(state.alpha_w, state.alpha_b, alpha_g, p);
    let c = climate_from_albedo(albedo, luminosity, p)?;
    Ok(derivative(state.alpha_w, state.alpha_b, alpha_g, &c, p))
}

/// The same vector field continued analytically to all of the plane (no
/// simplex check, no clipping). Used for finite differences at the
/// boundary and for backward-time manifold tracing, which leaves the
/// simplex by design.
pub fn extended_rhs(x: [f64; 2], luminosity: f64, p: &Params) -> Result<[f64; 2]> {
    let [alpha_w, alpha_b] = x;
    let alpha_g = 1.0 - alpha_w - alpha_b;
    let c = climate_from_albedo(mix_albedo(alpha_w, alpha_b, alpha_g, p), luminosity, p)?;
    Ok(derivative(alpha_w, alpha_b, alpha_g, &c, p))
}

fn derivative(alpha_w: f64, alpha_b: f64, alpha_g: f64, c: &LocalClimate, p: &Params) -> [f64; 2] {
    [
        alpha_w * (alpha_g * growth_rate(c.t_w, p) - p.gamma),
        alpha_b * (alpha_g * growth_rate(c.t_b, p) - p.gamma),
    ]
}

/// Sup norm of a derivative pair.
pub fn sup_norm(v: [f64; 2]) -> f64 {
    v[0].abs().max(v[1].abs())
}

/// Smallest distance (K) from any local temperature to a growth cutoff.
pub fn cutoff_margin(c: &LocalClimate, p: &Params) -> f64 {
    let w = p.growth_half_width();
    [c.t_w, c.t_b, c.t_g]
        .iter()
        .map(|t| ((t - p.t_opt).abs() - w).abs())
        .fold(f64::INFINITY, f64::min)
}
