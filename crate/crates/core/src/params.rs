//! Physical constants and model parameters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Stefan–Boltzmann constant (W m^-2 K^-4), CODATA 2018.
pub const STEFAN_BOLTZMANN: f64 = 5.670374419e-8;

/// All constants of the two-species model.
///
/// `q` is stored directly rather than derived from `solar_flux / sigma`, so
/// overriding `solar_flux` in a config does not silently move it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    /// Death rate, per unit model time.
    pub gamma: f64,
    /// Curvature of the growth parabola (K^-2).
    pub k: f64,
    /// Optimum growth temperature (K).
    pub t_opt: f64,
    /// Solar flux constant `S` (W m^-2).
    pub solar_flux: f64,
    /// Stefan–Boltzmann constant (W m^-2 K^-4).
    pub sigma: f64,
    pub albedo_white: f64,
    pub albedo_black: f64,
    pub albedo_ground: f64,
    /// Horizontal heat-transfer coefficient (K^4).
    pub q: f64,
}

impl Default for Params {
    fn default() -> Self {
        let solar_flux = 917.0;
        let sigma = STEFAN_BOLTZMANN;
        Params {
            gamma: 0.3,
            k: 0.003265,
            t_opt: 295.5,
            solar_flux,
            sigma,
            albedo_white: 0.75,
            albedo_black: 0.25,
            albedo_ground: 0.5,
            q: 0.1 * solar_flux / sigma,
        }
    }
}

impl Params {
    /// `S / sigma` in K^4, the scale of absorbed flux per unit luminosity.
    pub fn flux_scale(&self) -> f64 {
        self.solar_flux / self.sigma
    }

    /// Half-width of the temperature window with nonzero growth, `1/sqrt(k)`.
    pub fn growth_half_width(&self) -> f64 {
        1.0 / self.k.sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.gamma,
            self.k,
            self.t_opt,
            self.solar_flux,
            self.sigma,
            self.albedo_white,
            self.albedo_black,
            self.albedo_ground,
            self.q,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("all parameters must be finite".into()));
        }
        if !(0.0 <= self.albedo_black
            && self.albedo_black < self.albedo_ground
            && self.albedo_ground < self.albedo_white
            && self.albedo_white <= 1.0)
        {
            return Err(Error::InvalidParams(format!(
                "albedos must satisfy 0 <= A_b < A_g < A_w <= 1 (got A_b = {}, A_g = {}, A_w = {})",
                self.albedo_black, self.albedo_ground, self.albedo_white
            )));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::InvalidParams(format!(
                "gamma must lie in (0, 1), got {}",
                self.gamma
            )));
        }
        if self.k <= 0.0 {
            return Err(Error::InvalidParams(format!("k must be positive, got {}", self.k)));
        }
        if self.solar_flux <= 0.0 || self.sigma <= 0.0 {
            return Err(Error::InvalidParams(
                "solar_flux and sigma must be positive".into(),
            ));
        }
        if self.q < 0.0 {
            return Err(Error::InvalidParams(format!("q must be non-negative, got {}", self.q)));
        }
        Ok(())
    }

    /// Checks that `luminosity` is usable with these parameters, including
    /// the bound `q < S L / sigma` on horizontal heat transfer.
    pub fn validate_luminosity(&self, luminosity: f64) -> Result<()> {
        if !(luminosity.is_finite() && luminosity > 0.0) {
            return Err(Error::InvalidLuminosity(luminosity));
        }
        if self.q >= self.flux_scale() * luminosity {
            return Err(Error::InvalidParams(format!(
                "q = {} is not below S L / sigma = {} at L = {}",
                self.q,
                self.flux_scale() * luminosity,
                luminosity
            )));
        }
        Ok(())
    }
}
