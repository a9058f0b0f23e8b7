//! The JSON experiment record. Every section is optional and falls back to
//! the defaults below; unknown keys are rejected.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::path::PathBuf;

use crms_core::field::{HamiltonianSpec, TorusGrid, BUILTIN_NAMES};
use crms_core::flow::Integrator;
use crms_core::linalg::SplitSpace;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// When present, must name the verb being run.
    #[serde(default)]
    pub experiment: Option<String>,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub hamiltonian: HamiltonianConfig,
    #[serde(default)]
    pub flow: FlowSection,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub form: FormConfig,
    #[serde(default)]
    pub symbol: SymbolConfig,
    #[serde(default)]
    pub initial: InitialConfig,
    #[serde(default)]
    pub gradcheck: GradcheckConfig,
}

fn default_n() -> usize {
    1
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("empty config deserializes")
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_points")]
    pub n1: usize,
    #[serde(default = "default_points")]
    pub n2: usize,
    #[serde(default = "default_period")]
    pub l1: f64,
    #[serde(default = "default_period")]
    pub l2: f64,
}

fn default_points() -> usize {
    32
}

fn default_period() -> f64 {
    TAU
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            n1: default_points(),
            n2: default_points(),
            l1: default_period(),
            l2: default_period(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianConfig {
    #[serde(default = "default_hamiltonian")]
    pub name: String,
    #[serde(default)]
    pub parameters: BTreeMap<String, f64>,
    /// Multiplies the analytic gradient; a negative control for `gradcheck`.
    #[serde(default)]
    pub corrupt_gradient: Option<f64>,
}

fn default_hamiltonian() -> String {
    "quadratic".into()
}

impl Default for HamiltonianConfig {
    fn default() -> Self {
        Self {
            name: default_hamiltonian(),
            parameters: BTreeMap::new(),
            corrupt_gradient: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSection {
    /// Defaults to half the integrator's stability bound.
    #[serde(default)]
    pub ds: Option<f64>,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_integrator")]
    pub integrator: Integrator,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
}

impl Default for FlowSection {
    fn default() -> Self {
        Self {
            ds: None,
            max_steps: default_max_steps(),
            tolerance: default_tolerance(),
            integrator: default_integrator(),
            record_every: default_record_every(),
        }
    }
}

fn default_max_steps() -> usize {
    50_000
}

fn default_tolerance() -> f64 {
    crms_core::flow::DEFAULT_GRAD_TOLERANCE
}

fn default_integrator() -> Integrator {
    Integrator::ExplicitEuler
}

fn default_record_every() -> usize {
    1
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormSource {
    #[default]
    Standard,
    StandardPlusNu,
    SeededRandomConjugate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Injection {
    VerticalTriple,
    Zero,
    RankDeficient,
    IncompatibleStructure,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormConfig {
    #[serde(default)]
    pub source: FormSource,
    /// Fiber coefficients for `standard_plus_nu`; seeded when absent.
    #[serde(default)]
    pub nu: Option<Vec<f64>>,
    #[serde(default)]
    pub inject: Option<Injection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymbolConfig {
    #[serde(default = "default_angles")]
    pub angles: usize,
    /// Explicit covectors replace the unit-circle sweep.
    #[serde(default)]
    pub covectors: Option<Vec<[f64; 2]>>,
}

fn default_angles() -> usize {
    64
}

impl Default for SymbolConfig {
    fn default() -> Self {
        Self {
            angles: default_angles(),
            covectors: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialMode {
    #[default]
    RandomSmooth,
    Constant,
    File,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    #[serde(default)]
    pub mode: InitialMode,
    #[serde(default = "default_initial_amplitude")]
    pub amplitude: f64,
    #[serde(default = "default_max_mode")]
    pub max_mode: i32,
    /// Fiber vector for `constant`; zero when absent.
    #[serde(default)]
    pub value: Option<Vec<f64>>,
    #[serde(default)]
    pub path: Option<PathBuf>,
}

fn default_initial_amplitude() -> f64 {
    0.1
}

fn default_max_mode() -> i32 {
    2
}

impl Default for InitialConfig {
    fn default() -> Self {
        Self {
            mode: InitialMode::default(),
            amplitude: default_initial_amplitude(),
            max_mode: default_max_mode(),
            value: None,
            path: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GradcheckConfig {
    #[serde(default = "default_directions")]
    pub directions: usize,
    /// Sup bound of the uniform random base state.
    #[serde(default = "default_gradcheck_amplitude")]
    pub amplitude: f64,
}

fn default_directions() -> usize {
    20
}

fn default_gradcheck_amplitude() -> f64 {
    0.5
}

impl Default for GradcheckConfig {
    fn default() -> Self {
        Self {
            directions: default_directions(),
            amplitude: default_gradcheck_amplitude(),
        }
    }
}

impl ExperimentConfig {
    /// Parse and validate a JSON document.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let config: Self =
            serde_json::from_str(text).map_err(|e| CliError::Usage(format!("config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.space()?;
        self.torus()?;
        if !BUILTIN_NAMES.contains(&self.hamiltonian.name.as_str()) {
            return Err(CliError::Usage(format!(
                "unknown hamiltonian {:?}; built-ins are {BUILTIN_NAMES:?}",
                self.hamiltonian.name
            )));
        }
        self.hamiltonian()?;
        if let Some(nu) = &self.form.nu {
            if nu.len() != 4 * self.n {
                return Err(CliError::Usage(format!(
                    "form.nu has {} entries, expected {}",
                    nu.len(),
                    4 * self.n
                )));
            }
        }
        if let Some(value) = &self.initial.value {
            if value.len() != 4 * self.n {
                return Err(CliError::Usage(format!(
                    "initial.value has {} entries, expected {}",
                    value.len(),
                    4 * self.n
                )));
            }
        }
        if self.initial.mode == InitialMode::File && self.initial.path.is_none() {
            return Err(CliError::Usage(
                "initial.mode = file needs initial.path".into(),
            ));
        }
        if !(self.initial.amplitude.is_finite() && self.initial.max_mode >= 0) {
            return Err(CliError::Usage(
                "initial amplitude and max_mode must be valid".into(),
            ));
        }
        if self.symbol.angles == 0 {
            return Err(CliError::Usage("symbol.angles must be at least 1".into()));
        }
        if self.gradcheck.directions == 0 || !self.gradcheck.amplitude.is_finite() {
            return Err(CliError::Usage(
                "gradcheck needs at least one direction and a finite amplitude".into(),
            ));
        }
        Ok(())
    }

    pub fn space(&self) -> Result<SplitSpace, CliError> {
        SplitSpace::new(self.n).map_err(|e| CliError::Usage(e.to_string()))
    }

    pub fn torus(&self) -> Result<TorusGrid, CliError> {
        let g = self.grid;
        TorusGrid::new(g.n1, g.n2, g.l1, g.l2).map_err(|e| CliError::Usage(e.to_string()))
    }

    pub fn hamiltonian(&self) -> Result<HamiltonianSpec, CliError> {
        let h = &self.hamiltonian;
        let spec = HamiltonianSpec::builtin(&h.name, self.n, &h.parameters)
            .map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(match h.corrupt_gradient {
            Some(factor) => spec.with_scaled_gradient(factor),
            None => spec,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let c = ExperimentConfig::parse("{}").unwrap();
        assert_eq!((c.n, c.grid.n1, c.grid.n2, c.seed), (1, 32, 32, 0));
        assert_eq!(c.symbol.angles, 64);
        assert_eq!(c.gradcheck.directions, 20);
        assert_eq!(c.flow.integrator, Integrator::ExplicitEuler);
        assert!(c.flow.ds.is_none());
        assert_eq!((c.flow.max_steps, c.flow.record_every), (50_000, 1));
    }

    #[test]
    fn unknown_hamiltonian_is_rejected_at_parse_time() {
        let err = ExperimentConfig::parse(r#"{"hamiltonian": {"name": "sextic"}}"#).unwrap_err();
        assert!(matches!(err, CliError::Usage(m) if m.contains("sextic")));
    }

    #[test]
    fn unknown_keys_and_bad_shapes_are_rejected() {
        for text in [
            r#"{"flux": 1}"#,
            r#"{"grid": {"n1": 2}}"#,
            r#"{"n": 0}"#,
            r#"{"n": 2, "form": {"nu": [1, 2, 3]}}"#,
            r#"{"hamiltonian": {"name": "quadratic", "parameters": {"mu": 1}}}"#,
            r#"{"initial": {"mode": "file"}}"#,
            r#"{"form": {"source": "nonstandard"}}"#,
        ] {
            assert!(
                matches!(ExperimentConfig::parse(text), Err(CliError::Usage(_))),
                "{text}"
            );
        }
    }

    #[test]
    fn corrupted_gradient_is_renamed() {
        let c = ExperimentConfig::parse(
            r#"{"hamiltonian": {"name": "cosine", "corrupt_gradient": 1.5}}"#,
        )
        .unwrap();
        assert_eq!(c.hamiltonian().unwrap().name(), "cosine_corrupted");
    }
}
