use thiserror::Error;

use crate::equilibria::Label;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Which surface type a local-temperature computation failed for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Surface {
    White,
    Black,
    Ground,
}

impl std::fmt::Display for Surface {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Surface::White => "white",
            Surface::Black => "black",
            Surface::Ground => "ground",
        })
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("state (alpha_w = {alpha_w}, alpha_b = {alpha_b}) lies outside the cover simplex")]
    OutsideSimplex { alpha_w: f64, alpha_b: f64 },

    #[error("nonphysical heat transfer: negative fourth power for {surface} surface at L = {luminosity}")]
    NonphysicalHeatTransfer { surface: Surface, luminosity: f64 },

    #[error("luminosity must be positive and finite, got {0}")]
    InvalidLuminosity(f64),

    #[error("local temperature {temperature} K is within 0.5 K of a growth cutoff")]
    CutoffProximity { temperature: f64 },

    #[error("step size underflow at t = {t} (h = {step})")]
    StepSizeUnderflow { t: f64, step: f64 },

    #[error("invalid integration span [{start}, {end}]")]
    InvalidSpan { start: f64, end: f64 },

    #[error("no coexistence root: {0}")]
    NoCoexistenceRoot(String),

    #[error("Newton refinement did not converge (residual {residual:e})")]
    NewtonDiverged { residual: f64 },

    #[error("two equilibria at L = {luminosity} lie within {distance:e} of each other")]
    DuplicateEquilibria { luminosity: f64, distance: f64 },

    #[error("equilibrium {label} at L = {luminosity} is not a saddle")]
    NotASaddle { label: Label, luminosity: f64 },

    #[error("no equilibrium labelled {label} at L = {luminosity}")]
    MissingEquilibrium { label: Label, luminosity: f64 },

    #[error("convergence unresolved after t = {time}")]
    Unresolved { time: f64 },

    #[error("{unresolved} of {total} basin cells unresolved")]
    TooManyUnresolved { unresolved: usize, total: usize },

    #[error("invalid bracket: {0}")]
    InvalidBracket(String),

    #[error("always tracks: delta_L = {delta_l} does not tip even at r = {probe_rate}")]
    AlwaysTracks { delta_l: f64, probe_rate: f64 },

    #[error("always tips: delta_L = {delta_l} tips even at r = {probe_rate}")]
    AlwaysTips { delta_l: f64, probe_rate: f64 },

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("continuation failed: {0}")]
    Continuation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by the caller's inputs rather than numerical failure.
    pub fn is_configuration(&self) -> bool {
        matches!(
            self,
            Error::InvalidParams(_)
                | Error::InvalidLuminosity(_)
                | Error::InvalidSpan { .. }
                | Error::NotASaddle { .. }
                | Error::MissingEquilibrium { .. }
                | Error::InvalidBracket(_)
                | Error::AlwaysTracks { .. }
                | Error::AlwaysTips { .. }
                | Error::Configuration(_)
        )
    }

    /// Short machine-readable tag used by the CLI error line.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParams(_) => "invalid_params",
            Error::OutsideSimplex { .. } => "outside_simplex",
            Error::NonphysicalHeatTransfer { .. } => "nonphysical_heat_transfer",
            Error::InvalidLuminosity(_) => "invalid_luminosity",
            Error::CutoffProximity { .. } => "cutoff_proximity",
            Error::StepSizeUnderflow { .. } => "step_size_underflow",
            Error::InvalidSpan { .. } => "invalid_span",
            Error::NoCoexistenceRoot(_) => "no_coexistence_root",
            Error::NewtonDiverged { .. } => "newton_diverged",
            Error::DuplicateEquilibria { .. } => "duplicate_equilibria",
            Error::NotASaddle { .. } => "not_a_saddle",
            Error::MissingEquilibrium { .. } => "missing_equilibrium",
            Error::Unresolved { .. } => "unresolved",
            Error::TooManyUnresolved { .. } => "too_many_unresolved",
            Error::InvalidBracket(_) => "invalid_bracket",
            Error::AlwaysTracks { .. } => "always_tracks",
            Error::AlwaysTips { .. } => "always_tips",
            Error::Configuration(_) => "configuration",
            Error::Continuation(_) => "continuation",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
