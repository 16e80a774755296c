//! Run configuration: one document (TOML, or JSON by file extension)
//! drives every subcommand. Missing sections and fields fall back to
//! documented defaults; unknown keys are rejected so typos surface as
//! errors.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use mpemba_core::basis::{SpinConfiguration, MAX_SITES};

use crate::CliError;

#[derive(Clone, Debug, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub model: ModelSection,
    pub geometry: GeometrySection,
    pub init: InitSection,
    pub time: TimeSection,
    pub ensemble: EnsembleSection,
    pub analysis: AnalysisSection,
    pub output: OutputSection,
}

/// Chain length and couplings.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    #[serde(alias = "L")]
    pub l: usize,
    #[serde(alias = "J")]
    pub j: f64,
    pub h: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self { l: 15, j: 1.0, h: 0.2 }
    }
}

/// Observed-subsystem placement, as an inclusive 1-indexed site range.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometrySection {
    pub qos_sites: [usize; 2],
}

impl Default for GeometrySection {
    fn default() -> Self {
        Self { qos_sites: [7, 9] }
    }
}

/// Initial tilt angles. `relax` sweeps the full θ_s × θ_b grid; `qme`
/// and `theory` pair the lists positionally.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitSection {
    pub theta_s: Vec<f64>,
    pub theta_b: Vec<f64>,
}

impl Default for InitSection {
    fn default() -> Self {
        Self {
            theta_s: vec![PI / 2.0, PI / 4.0],
            theta_b: vec![PI / 2.0, PI / 4.0],
        }
    }
}

/// Uniform time grid `0..=t_max` with `n_points` samples.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeSection {
    pub t_max: f64,
    pub n_points: usize,
}

impl Default for TimeSection {
    fn default() -> Self {
        Self { t_max: 3.0, n_points: 121 }
    }
}

/// Bath-duration ensemble: `n_samples` draws of Δt ~ U[dt_min, dt_max].
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnsembleSection {
    pub n_samples: usize,
    pub dt_min: f64,
    pub dt_max: f64,
    pub seed: u64,
}

impl Default for EnsembleSection {
    fn default() -> Self {
        Self { n_samples: 100, dt_min: 0.0, dt_max: 10.0, seed: 1 }
    }
}

/// Post-processing knobs: Gaussian-fit floor, gap-histogram bin count,
/// and the observed matrix element (window-length strings over
/// `d`/`u`, first character = lowest-numbered site).
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisSection {
    pub fit_floor: f64,
    pub delta_omega_bins: usize,
    pub element: ElementSection,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        Self {
            fit_floor: 0.1,
            delta_omega_bins: 200,
            element: ElementSection::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ElementSection {
    pub bra: String,
    pub ket: String,
}

impl Default for ElementSection {
    fn default() -> Self {
        Self { bra: "ddu".into(), ket: "duu".into() }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub directory: PathBuf,
    pub emit_svg: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { directory: PathBuf::from("out"), emit_svg: false }
    }
}

impl RunConfig {
    /// Reads a configuration document: JSON when the file extension is
    /// `.json` (case-insensitive), TOML otherwise. Both drive the same
    /// schema, defaults, and validation.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let raw = std::fs::read_to_string(path).map_err(|e| {
            CliError::Config(format!("cannot read {}: {e}", path.display()))
        })?;
        let is_json = path
            .extension()
            .is_some_and(|ext| ext.eq_ignore_ascii_case("json"));
        let config: RunConfig = if is_json {
            serde_json::from_str(&raw)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        } else {
            toml::from_str(&raw)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        };
        config.validate()?;
        Ok(config)
    }

    /// SHA-256 of the resolved configuration (defaults filled in), so
    /// every output file records exactly what produced it.
    pub fn sha256(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn qos_len(&self) -> usize {
        self.geometry.qos_sites[1] - self.geometry.qos_sites[0] + 1
    }

    /// Observed matrix element parsed against the window length.
    pub fn element(&self) -> Result<(SpinConfiguration, SpinConfiguration), CliError> {
        let len = self.qos_len();
        Ok((
            parse_pattern(&self.analysis.element.bra, len)?,
            parse_pattern(&self.analysis.element.ket, len)?,
        ))
    }

    fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        let m = &self.model;
        if m.l < 2 || m.l > MAX_SITES {
            return bad(format!("model.l = {} outside 2..={MAX_SITES}", m.l));
        }
        if !m.j.is_finite() || !m.h.is_finite() {
            return bad("model.j and model.h must be finite".into());
        }
        let [first, last] = self.geometry.qos_sites;
        if first == 0 || first > last || last > m.l {
            return bad(format!(
                "geometry.qos_sites = [{first}, {last}] is not an inclusive 1-based range within {} sites",
                m.l
            ));
        }
        if self.qos_len() >= m.l {
            return bad("the observed window must leave at least one bath site".into());
        }
        for (name, list) in [("theta_s", &self.init.theta_s), ("theta_b", &self.init.theta_b)] {
            if list.is_empty() {
                return bad(format!("init.{name} must not be empty"));
            }
            if list.iter().any(|t| !t.is_finite()) {
                return bad(format!("init.{name} contains a non-finite angle"));
            }
        }
        if !(self.time.t_max > 0.0) || !self.time.t_max.is_finite() {
            return bad(format!("time.t_max = {} must be positive", self.time.t_max));
        }
        if self.time.n_points < 2 {
            return bad(format!(
                "time.n_points = {} needs at least two grid points",
                self.time.n_points
            ));
        }
        let e = &self.ensemble;
        if e.n_samples == 0 {
            return bad("ensemble.n_samples must be positive".into());
        }
        if !e.dt_min.is_finite() || !e.dt_max.is_finite() || e.dt_min < 0.0 || e.dt_max < e.dt_min {
            return bad(format!(
                "ensemble Δt range [{}, {}] must satisfy 0 ≤ dt_min ≤ dt_max",
                e.dt_min, e.dt_max
            ));
        }
        let a = &self.analysis;
        if !(a.fit_floor > 0.0 && a.fit_floor < 1.0) {
            return bad(format!("analysis.fit_floor = {} outside (0, 1)", a.fit_floor));
        }
        if a.delta_omega_bins == 0 {
            return bad("analysis.delta_omega_bins must be positive".into());
        }
        self.element()?;
        Ok(())
    }
}

fn parse_pattern(pattern: &str, window_len: usize) -> Result<SpinConfiguration, CliError> {
    if pattern.len() != window_len {
        return Err(CliError::Config(format!(
            "element pattern {pattern:?} has {} characters, window has {window_len} sites",
            pattern.len()
        )));
    }
    let mut bits = 0u32;
    for (i, c) in pattern.chars().enumerate() {
        match c {
            'u' => bits |= 1 << i,
            'd' => {}
            other => {
                return Err(CliError::Config(format!(
                    "element pattern {pattern:?}: {other:?} is neither 'd' nor 'u'"
                )))
            }
        }
    }
    Ok(SpinConfiguration(bits))
}
