//! Run configuration: one TOML file with a section per subcommand.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::continuation::{ContinuationOptions, Direction};
use crate::equilibria::Label;
use crate::error::{Error, Result};
use crate::geometry::ManifoldOptions;
use crate::params::Params;
use crate::solver::IntegratorOptions;
use crate::tipping::{DiagramOptions, ForcingSpec};

/// Every luminosity a config refers to must lie in this range.
pub const L_RANGE: (f64, f64) = (0.5, 1.7);

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    pub params: Params,
    pub integrator: IntegratorOptions,
    pub equilibria: EquilibriaConfig,
    #[serde(rename = "continue")]
    pub continuation: ContinueConfig,
    pub basins: BasinsConfig,
    pub manifold: ManifoldConfig,
    pub tip: TipConfig,
    pub diagram: DiagramOptions,
    pub reproduce: ReproduceConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EquilibriaConfig {
    pub luminosities: Vec<f64>,
}

impl Default for EquilibriaConfig {
    fn default() -> Self {
        EquilibriaConfig { luminosities: vec![0.6, 0.7, 0.8, 0.9, 1.0, 1.1, 1.2, 1.3, 1.4, 1.5, 1.6] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchStart {
    pub label: Label,
    pub luminosity: f64,
    pub direction: Direction,
}

impl BranchStart {
    pub fn name(&self) -> String {
        let dir = match self.direction {
            Direction::Increasing => "up",
            Direction::Decreasing => "down",
        };
        format!("{}@{}-{dir}", self.label, self.luminosity)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContinueConfig {
    pub l_range: [f64; 2],
    pub starts: Vec<BranchStart>,
    pub options: ContinuationOptions,
}

impl Default for ContinueConfig {
    fn default() -> Self {
        use Direction::{Decreasing as Down, Increasing as Up};
        let start = |label, luminosity, direction| BranchStart { label, luminosity, direction };
        ContinueConfig {
            l_range: [0.5, 1.7],
            starts: vec![
                start(Label::E0, 1.0, Up),
                start(Label::E0, 1.0, Down),
                start(Label::E5, 1.0, Up),
                start(Label::E5, 1.0, Down),
                start(Label::E2, 1.4, Up),
                start(Label::E2, 1.4, Down),
                start(Label::E4, 0.8, Up),
                start(Label::E4, 0.8, Down),
            ],
            options: ContinuationOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BasinsConfig {
    pub luminosity: f64,
    pub resolution: usize,
}

impl Default for BasinsConfig {
    fn default() -> Self {
        BasinsConfig { luminosity: TipConfig::default().l_max(), resolution: 201 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ManifoldConfig {
    pub label: Label,
    pub luminosity: f64,
    pub options: ManifoldOptions,
}

impl Default for ManifoldConfig {
    fn default() -> Self {
        ManifoldConfig {
            label: Label::E1,
            luminosity: TipConfig::default().l_max(),
            options: ManifoldOptions::default(),
        }
    }
}

/// The single rate-tipping experiment. The defaults put `L_max` just past
/// the point where the dead-planet basin first reaches `e5(L_min)`, so the
/// critical rate lands between 0.5 and 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TipConfig {
    pub l_min: f64,
    pub delta_l: f64,
    pub r: f64,
    pub check_manifold: bool,
}

impl Default for TipConfig {
    fn default() -> Self {
        TipConfig { l_min: 0.8, delta_l: 0.40, r: 1.0, check_manifold: true }
    }
}

impl TipConfig {
    pub fn forcing(&self) -> ForcingSpec {
        ForcingSpec::new(self.l_min, self.delta_l, self.r)
    }

    pub fn l_max(&self) -> f64 {
        self.l_min + self.delta_l
    }
}

/// Extra settings used only when building the figure-data bundle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReproduceConfig {
    /// Luminosities of the phase portraits.
    pub portrait_luminosities: Vec<f64>,
    /// Slow ramps through each fold.
    pub ramp_rate: f64,
    /// Rates of the two showcase trajectories.
    pub showcase_rates: Vec<f64>,
    /// Luminosities at which the saddle's stable manifold is sampled.
    pub surface_luminosities: Vec<f64>,
    /// Run the full tipping diagram (the slowest dataset).
    pub diagram: bool,
}

impl Default for ReproduceConfig {
    fn default() -> Self {
        ReproduceConfig {
            portrait_luminosities: vec![0.65, 0.8, 1.0, 1.2, 1.4, 1.5],
            ramp_rate: 1e-3,
            showcase_rates: vec![0.5, 1.0],
            surface_luminosities: (0..=17).map(|i| 1.20 + 0.02 * i as f64).collect(),
            diagram: true,
        }
    }
}

fn check_l(what: &str, l: f64) -> Result<()> {
    if l.is_finite() && l >= L_RANGE.0 && l <= L_RANGE.1 {
        Ok(())
    } else {
        Err(Error::Configuration(format!(
            "{what} = {l} outside [{}, {}]",
            L_RANGE.0, L_RANGE.1
        )))
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Configuration(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Configuration(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Configuration(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.integrator.validate()?;
        for &l in &self.equilibria.luminosities {
            check_l("equilibria.luminosities", l)?;
        }
        let [lo, hi] = self.continuation.l_range;
        check_l("continue.l_range", lo)?;
        check_l("continue.l_range", hi)?;
        if lo >= hi {
            return Err(Error::Configuration(format!("continue.l_range [{lo}, {hi}] is empty")));
        }
        for s in &self.continuation.starts {
            check_l("continue.starts.luminosity", s.luminosity)?;
        }
        check_l("basins.luminosity", self.basins.luminosity)?;
        if self.basins.resolution == 0 {
            return Err(Error::Configuration("basins.resolution must be positive".into()));
        }
        check_l("manifold.luminosity", self.manifold.luminosity)?;
        self.tip.forcing().validate()?;
        check_l("tip.l_min", self.tip.l_min)?;
        check_l("tip L_max", self.tip.l_max())?;
        let d = &self.diagram;
        check_l("diagram.l_min", d.l_min)?;
        check_l("diagram L_max", d.l_min + d.delta_l_max)?;
        if !(d.r_min > 0.0 && d.r_min <= d.r_max && d.delta_l_min > 0.0 && d.delta_l_min <= d.delta_l_max) {
            return Err(Error::Configuration(format!("diagram grid bounds are invalid: {d:?}")));
        }
        if d.r_points == 0 || d.delta_l_points == 0 {
            return Err(Error::Configuration("diagram grids need at least one point".into()));
        }
        for &l in self.reproduce.portrait_luminosities.iter().chain(&self.reproduce.surface_luminosities) {
            check_l("reproduce luminosity", l)?;
        }
        if self.workers == Some(0) {
            return Err(Error::Configuration("workers must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips() {
        let cfg = RunConfig { workers: Some(3), output_dir: Some("out".into()), ..RunConfig::default() };
        cfg.validate().unwrap();
        let text = cfg.to_toml().unwrap();
        let back = RunConfig::from_toml(&text).unwrap();
        assert_eq!(cfg, back);
        assert_eq!(back.to_toml().unwrap(), text);
    }

    #[test]
    fn partial_file_fills_defaults() {
        let cfg = RunConfig::from_toml("[tip]\nr = 0.5\n\n[params]\ngamma = 0.25\n").unwrap();
        assert_eq!(cfg.tip.r, 0.5);
        assert_eq!(cfg.tip.l_min, 0.8);
        assert_eq!(cfg.params.gamma, 0.25);
        assert_eq!(cfg.params.k, Params::default().k);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_luminosities() {
        assert!(RunConfig::from_toml("colour = 1").unwrap_err().is_configuration());
        assert!(RunConfig::from_toml("[tip]\nrate = 1.0").unwrap_err().is_configuration());
        let err = RunConfig::from_toml("[equilibria]\nluminosities = [1.0, 1.8]").unwrap_err();
        assert!(err.to_string().contains("1.8"), "{err}");
        assert!(RunConfig::from_toml("[tip]\ndelta_l = 1.0").is_err());
    }

    #[test]
    fn default_l_max_is_shared() {
        let cfg = RunConfig::default();
        assert_eq!(cfg.basins.luminosity, cfg.tip.l_max());
        assert_eq!(cfg.manifold.luminosity, cfg.tip.l_max());
    }

    #[test]
    fn start_names() {
        let s = BranchStart { label: Label::E2, luminosity: 1.4, direction: Direction::Increasing };
        assert_eq!(s.name(), "e2@1.4-up");
    }
}
