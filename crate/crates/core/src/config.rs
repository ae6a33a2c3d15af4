//! Run configuration, read from TOML.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::decomposition::DEFAULT_EXTENSION_FREQUENCY;
use crate::fem::{Excitation, MaterialParams, ParameterSet};
use crate::linalg::SvdMethod;
use crate::mesh::GeometrySpec;
use crate::training::TrainingConfig;
use crate::{Error, Result};

/// Experiments the driver can run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    /// Inf-sup and continuity constants over the sweep.
    Stability,
    /// Greedy compression of full solutions.
    Nwidth,
    /// Localized bases from projected full solutions, ROM error against basis size.
    LocalizedReference,
    /// Reduced inf-sup constants for growing bases.
    InfsupTrack,
    /// Trained against reference bases across tolerances.
    TrainingBenchmark,
    /// Train and store all local bases, evaluate the ROM.
    Training,
    /// Plan a geometry change, retrain the affected spaces, compare with a full retrain.
    Geochange,
    /// Field magnitudes of full solutions on the mesh.
    SolutionsExport,
}

impl Experiment {
    pub const ALL: [Experiment; 8] = [
        Experiment::Stability,
        Experiment::Nwidth,
        Experiment::LocalizedReference,
        Experiment::InfsupTrack,
        Experiment::TrainingBenchmark,
        Experiment::Training,
        Experiment::Geochange,
        Experiment::SolutionsExport,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Stability => "stability",
            Experiment::Nwidth => "nwidth",
            Experiment::LocalizedReference => "localized-reference",
            Experiment::InfsupTrack => "infsup-track",
            Experiment::TrainingBenchmark => "training-benchmark",
            Experiment::Training => "training",
            Experiment::Geochange => "geochange",
            Experiment::SolutionsExport => "solutions-export",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Experiment::ALL.iter().map(Experiment::name).collect();
                Error::Config(format!("unknown experiment '{s}', expected one of {}", names.join(", ")))
            })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub f_min: f64,
    pub f_max: f64,
    pub count: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { f_min: 1e7, f_max: 1e9, count: 10 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SvdChoice {
    #[default]
    Auto,
    Dense,
    Iterative,
}

impl From<SvdChoice> for SvdMethod {
    fn from(c: SvdChoice) -> Self {
        match c {
            SvdChoice::Auto => SvdMethod::Auto,
            SvdChoice::Dense => SvdMethod::Dense,
            SvdChoice::Iterative => SvdMethod::Iterative,
        }
    }
}

/// Settings of the diagnostic experiments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub nwidth_tol: f64,
    pub nwidth_max: usize,
    /// Tolerance of the localized reference bases.
    pub reference_tol: f64,
    pub reference_max: usize,
    /// Tolerances swept by the benchmark and reference experiments.
    pub tolerances: Vec<f64>,
    /// Frequencies (Hz) of the reduced inf-sup track.
    pub infsup_frequencies: Vec<f64>,
    /// Basis sizes visited by the reduced inf-sup track; empty means ten even steps.
    pub infsup_sizes: Vec<usize>,
    /// Frequencies (Hz) of the field export.
    pub export_frequencies: Vec<f64>,
    pub svd: SvdChoice,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            nwidth_tol: 1e-4,
            nwidth_max: 400,
            reference_tol: 1e-5,
            reference_max: 400,
            tolerances: vec![1e-1, 1e-2, 1e-3, 1e-4],
            infsup_frequencies: vec![1e8, 4e8, 7e8, 1e9],
            infsup_sizes: Vec::new(),
            export_frequencies: vec![1e8, 5e8, 1e9],
            svd: SvdChoice::Auto,
        }
    }
}

/// Complete description of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Geometry file (relative to the config file) or `preset:geometry1` / `preset:geometry2`
    /// / `preset:unit-square`.
    pub geometry: String,
    /// Geometry after the change, for the geometry-change experiment.
    pub new_geometry: Option<String>,
    pub mesh: [usize; 2],
    pub subdomains: [usize; 2],
    pub sweep: SweepConfig,
    /// Extension frequency `omega' / 2 pi` in Hz.
    pub extension_frequency: f64,
    pub training: TrainingConfig,
    pub material: MaterialParams,
    pub excitation: Excitation,
    pub analysis: AnalysisConfig,
    pub experiment: Option<Experiment>,
    pub full_scale: bool,
    pub output_dir: Option<PathBuf>,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            geometry: "preset:geometry1".into(),
            new_geometry: Some("preset:geometry2".into()),
            mesh: [20, 20],
            subdomains: [4, 4],
            sweep: SweepConfig::default(),
            extension_frequency: DEFAULT_EXTENSION_FREQUENCY,
            training: TrainingConfig::default(),
            material: MaterialParams::default(),
            excitation: Excitation::default(),
            analysis: AnalysisConfig::default(),
            experiment: None,
            full_scale: false,
            output_dir: None,
            base_dir: PathBuf::from("."),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml_str(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Switches to the published resolution: 100x100 mesh, 10x10 subdomains, 100 frequencies
    /// from 10 MHz to 1 GHz.
    pub fn apply_full_scale(&mut self) {
        self.full_scale = true;
        self.mesh = [100, 100];
        self.subdomains = [10, 10];
        self.sweep = SweepConfig { f_min: 1e7, f_max: 1e9, count: 100 };
    }

    pub fn validate(&self) -> Result<()> {
        let [nx, ny] = self.mesh;
        let [mx, my] = self.subdomains;
        if nx == 0 || ny == 0 || mx == 0 || my == 0 {
            return Err(Error::Config("mesh and subdomain counts must be positive".into()));
        }
        if nx % mx != 0 || ny % my != 0 {
            return Err(Error::Config(format!("subdomains {mx}x{my} do not divide mesh {nx}x{ny}")));
        }
        if !(self.extension_frequency > 0.0) {
            return Err(Error::Config("extension_frequency must be positive".into()));
        }
        if self.analysis.tolerances.iter().any(|&t| !(t > 0.0)) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        self.parameter_set()?;
        self.training.validate()?;
        self.material.validate()
    }

    pub fn parameter_set(&self) -> Result<ParameterSet> {
        ParameterSet::linspace(self.sweep.f_min, self.sweep.f_max, self.sweep.count)
    }

    pub fn omega_ext(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.extension_frequency
    }

    pub fn resolve_geometry(&self, spec: &str) -> Result<GeometrySpec> {
        match spec {
            "preset:geometry1" => Ok(GeometrySpec::preset_geometry1()),
            "preset:geometry2" => Ok(GeometrySpec::preset_geometry2()),
            "preset:unit-square" => Ok(GeometrySpec::unit_square()),
            s if s.starts_with("preset:") => Err(Error::Config(format!("unknown geometry preset '{s}'"))),
            path => GeometrySpec::load(self.base_dir.join(path)),
        }
    }

    pub fn old_geometry(&self) -> Result<GeometrySpec> {
        self.resolve_geometry(&self.geometry)
    }

    pub fn new_geometry(&self) -> Result<GeometrySpec> {
        let spec = self
            .new_geometry
            .as_deref()
            .ok_or_else(|| Error::Config("new_geometry is required for a geometry change".into()))?;
        self.resolve_geometry(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_partial_config_and_round_trips() {
        let cfg = RunConfig::from_toml_str(
            r#"
            geometry = "preset:unit-square"
            mesh = [8, 8]
            subdomains = [2, 2]
            [sweep]
            f_min = 1e8
            f_max = 1e9
            count = 4
            [training]
            n_random = 2
            "#,
        )
        .unwrap();
        assert_eq!(cfg.training.n_random, 2);
        assert_eq!(cfg.training.tol_local, 1e-4);
        assert_eq!(cfg.parameter_set().unwrap().len(), 4);
        let again = RunConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(RunConfig::from_toml_str("mesh = [10, 10]\nsubdomains = [3, 3]").is_err());
        assert!(RunConfig::from_toml_str("bogus = 1").is_err());
        assert!("stabilty".parse::<Experiment>().is_err());
        for e in Experiment::ALL {
            assert_eq!(e.name().parse::<Experiment>().unwrap(), e);
        }
    }
}
