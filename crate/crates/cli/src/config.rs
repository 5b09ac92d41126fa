//! Run configuration: a JSON file with optional global keys and one parameter
//! block per subcommand. Every block rejects unknown keys.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sharpfield::electrostatics::{ChargeConfiguration, Nucleus};
use sharpfield::hydrogen::{BoundSuperposition, QuantumNumbers};
use sharpfield::perturbation::{GaussianPulse, SourcedSpec};
use sharpfield::photon::PlaneWave;
use sharpfield::units::UnitSystem;
use sharpfield::Complex64;
use std::path::PathBuf;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub units: Option<UnitSystem>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub spectrum: Option<Value>,
    pub hartree: Option<Value>,
    pub fields: Option<Value>,
    pub trajectory: Option<Value>,
    pub radiate: Option<Value>,
    pub perturb: Option<Value>,
    pub photon: Option<Value>,
    pub audit: Option<Value>,
    pub selftest: Option<Value>,
}

impl RunConfig {
    pub fn block(&self, name: &str) -> Option<&Value> {
        match name {
            "spectrum" => self.spectrum.as_ref(),
            "hartree" => self.hartree.as_ref(),
            "fields" => self.fields.as_ref(),
            "trajectory" => self.trajectory.as_ref(),
            "radiate" => self.radiate.as_ref(),
            "perturb" => self.perturb.as_ref(),
            "photon" => self.photon.as_ref(),
            "audit" => self.audit.as_ref(),
            "selftest" => self.selftest.as_ref(),
            _ => None,
        }
    }
}

/// Deserializes a block after applying command-line overrides.
pub fn resolve<T: DeserializeOwned>(block: Option<&Value>, overrides: &[(&str, Value)]) -> Result<T, String> {
    let mut map = match block {
        None => Map::new(),
        Some(Value::Object(m)) => m.clone(),
        Some(other) => return Err(format!("parameter block must be an object, got {other}")),
    };
    for (k, v) in overrides {
        map.insert(k.to_string(), v.clone());
    }
    serde_json::from_value(Value::Object(map)).map_err(|e| e.to_string())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub label: QuantumNumbers,
    /// Complex coefficient as [re, im]; normalized with the other terms.
    #[serde(default = "unit_coefficient")]
    pub coefficient: [f64; 2],
}

fn unit_coefficient() -> [f64; 2] {
    [1.0, 0.0]
}

pub fn superposition(terms: &[Term]) -> sharpfield::Result<BoundSuperposition> {
    let norm = terms.iter().map(|t| t.coefficient[0].powi(2) + t.coefficient[1].powi(2)).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return Err(sharpfield::Error::Domain("state needs finite coefficients, not all zero".into()));
    }
    BoundSuperposition::new(terms.iter().map(|t| (t.label, Complex64::new(t.coefficient[0], t.coefficient[1]) / norm)).collect())
}

fn ground_state() -> Vec<Term> {
    vec![Term { label: QuantumNumbers::nlm(1, 0, 0, sharpfield::hydrogen::Parity::Plus), coefficient: [1.0, 0.0] }]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    #[serde(default = "four")]
    pub n_max: u32,
}

fn four() -> u32 {
    4
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldsConfig {
    #[serde(default = "default_atom")]
    pub configuration: ChargeConfiguration,
    #[serde(default)]
    pub probes: Vec<[f64; 3]>,
    /// Resolution of the optional whole-space quadrature of the field energy.
    #[serde(default)]
    pub quadrature_resolution: Option<usize>,
}

fn default_atom() -> ChargeConfiguration {
    ChargeConfiguration::atom(1.0, [1.0, 0.0, 0.0], 0.1)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerance {
    pub atol: f64,
    pub rtol: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { atol: 1e-9, rtol: 1e-9 }
    }
}

impl Tolerance {
    pub fn validate(&self) -> Result<(), String> {
        if self.atol > 0.0 && self.rtol > 0.0 {
            Ok(())
        } else {
            Err(format!("tolerances must be positive: {self:?}"))
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PushforwardConfig {
    pub t: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_samples() -> usize {
    10_000
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryConfig {
    #[serde(default = "ground_state")]
    pub state: Vec<Term>,
    pub starts: Vec<[f64; 3]>,
    #[serde(default)]
    pub t0: f64,
    pub t1: f64,
    #[serde(default)]
    pub tolerance: Tolerance,
    #[serde(default = "default_node_floor")]
    pub node_floor: f64,
    #[serde(default)]
    pub pushforward: Option<PushforwardConfig>,
}

fn default_node_floor() -> f64 {
    sharpfield::bohm::DEFAULT_NODE_FLOOR
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum PulseSpec {
    LymanDesk { amplitude: f64 },
    Paper,
    Custom { amplitude: f64, sigma_z: f64, z0: f64, omega: f64 },
}

impl PulseSpec {
    pub fn build(&self) -> sharpfield::Result<GaussianPulse> {
        let p = match *self {
            PulseSpec::LymanDesk { amplitude } => GaussianPulse::lyman_desk(amplitude),
            PulseSpec::Paper => GaussianPulse::paper_preset(),
            PulseSpec::Custom { amplitude, sigma_z, z0, omega } => GaussianPulse::new(amplitude, sigma_z, z0, omega)?,
        };
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceSpec {
    Uniform { start: [f64; 3], velocity: [f64; 3] },
    Born { q: [f64; 3], t_anchor: f64, pulse: PulseSpec, epsilon: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelTable {
    pub ct: f64,
    pub r: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadiateConfig {
    pub source: SourceSpec,
    #[serde(default = "half")]
    pub radius: f64,
    pub times: Vec<f64>,
    #[serde(default)]
    pub probes: Vec<[f64; 3]>,
    /// Wave vectors for Fourier-space samples.
    #[serde(default)]
    pub wave_vectors: Vec<[f64; 3]>,
    #[serde(default)]
    pub kernel: Option<KernelTable>,
}

fn half() -> f64 {
    0.5
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbConfig {
    pub initial: QuantumNumbers,
    pub pulse: PulseSpec,
    /// Target labels; defaults to every bound state with n ≤ 4.
    #[serde(default)]
    pub basis: Option<Vec<QuantumNumbers>>,
    /// Output times; defaults to `steps` equal intervals until the pulse has passed.
    #[serde(default)]
    pub times: Option<Vec<f64>>,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default)]
    pub sourced: Option<SourcedSpec>,
}

fn default_steps() -> usize {
    200
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PhotonFieldSpec {
    PlaneWave { wave: PlaneWave },
    Coulomb { nuclei: Vec<Nucleus>, radius: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhotonConfig {
    pub field: PhotonFieldSpec,
    pub starts: Vec<[f64; 3]>,
    pub t_span: [f64; 2],
    #[serde(default)]
    pub tolerance: Tolerance,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommutatorConfig {
    pub pulse: PulseSpec,
    pub times: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditConfig {
    #[serde(default = "ground_state")]
    pub state: Vec<Term>,
    /// Nuclear charge of the Coulomb ♯-field.
    #[serde(default = "one")]
    pub z: f64,
    /// Ball radius a of the regularized charges.
    #[serde(default = "half")]
    pub radius: f64,
    #[serde(default)]
    pub t: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default)]
    pub commutator: Option<CommutatorConfig>,
}

fn one() -> f64 {
    1.0
}

fn default_dt() -> f64 {
    1e-3
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelftestConfig {
    /// Criterion ids to run; all when empty.
    #[serde(default)]
    pub only: Vec<u32>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn unknown_keys_rejected() {
        assert!(resolve::<SpectrumConfig>(Some(&json!({"n_max": 3, "extra": 1})), &[]).is_err());
        assert!(serde_json::from_value::<RunConfig>(json!({"spectrum": {}, "bogus": 2})).is_err());
    }

    #[test]
    fn overrides_and_defaults() {
        let c: SpectrumConfig = resolve(Some(&json!({"n_max": 3})), &[("n_max", json!(6))]).unwrap();
        assert_eq!(c.n_max, 6);
        let c: SpectrumConfig = resolve(None, &[]).unwrap();
        assert_eq!(c.n_max, 4);
    }

    #[test]
    fn pulse_presets_parse() {
        let p: PulseSpec = serde_json::from_value(json!({"preset": "lyman_desk", "amplitude": 2.0})).unwrap();
        assert_eq!(p.build().unwrap().amplitude, 2.0);
        let bad: PulseSpec = serde_json::from_value(json!({"preset": "custom", "amplitude": 1.0, "sigma_z": -10.0, "z0": -500.0, "omega": 0.375})).unwrap();
        assert!(bad.build().is_err());
    }

    #[test]
    fn state_is_normalized() {
        let terms: Vec<Term> = serde_json::from_value(json!([
            {"label": {"n": 1, "l": 0, "m": 0}, "coefficient": [3.0, 0.0]},
            {"label": {"n": 2, "l": 1, "m": 0}, "coefficient": [0.0, 4.0]}
        ]))
        .unwrap();
        assert!(superposition(&terms).unwrap().is_normalized());
    }
}
