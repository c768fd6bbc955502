//! Per-command JSON configuration. Unknown fields are rejected everywhere.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::Deserialize;
use zktorus::diophantine::IrrationalSpec;
use zktorus::gap_sparse::GapNorm;
use zktorus::observability::ObservationRegion;
use zktorus::{ModeIndex, NormWeight, SpectralState, Truncation};

use crate::error::{CliError, CliResult, Context};

/// Parses `text` as `T`, naming the offending field on failure.
pub fn parse<T: DeserializeOwned>(text: &str) -> CliResult<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        CliError::Config(format!("at `{path}`: {}", e.into_inner()))
    })
}

fn two_pi() -> f64 {
    2.0 * PI
}

fn default_s() -> f64 {
    1.0
}

fn default_weight() -> NormWeight {
    NormWeight::L2
}

/// A real number that may be written as `"inf"`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Extended {
    Number(f64),
    Text(String),
}

impl Extended {
    pub fn value(&self) -> CliResult<f64> {
        match self {
            Extended::Number(x) => Ok(*x),
            Extended::Text(s) if s == "inf" || s == "+inf" => Ok(f64::INFINITY),
            Extended::Text(s) => Err(CliError::Config(format!(
                "expected a number or \"inf\", got {s:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeValue {
    pub m: i64,
    pub n: i64,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

/// Where a state comes from.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase", deny_unknown_fields)]
pub enum StateSource {
    Zero,
    /// Coefficients uniform in the unit square, drawn from the run seed.
    Random,
    Modes {
        values: Vec<ModeValue>,
    },
    Inline {
        state: SpectralState,
    },
    /// A state JSON file, relative to the config file.
    File {
        path: PathBuf,
    },
}

impl StateSource {
    pub fn build(
        &self,
        truncation: Truncation,
        rng: &mut ChaCha8Rng,
        base: &Path,
    ) -> CliResult<SpectralState> {
        let state = match self {
            StateSource::Zero => SpectralState::zeros(truncation),
            StateSource::Random => SpectralState::random(truncation, rng),
            StateSource::Modes { values } => {
                let mut c = vec![Complex64::new(0.0, 0.0); truncation.mode_count()];
                for v in values {
                    let mode = ModeIndex::new(v.m, v.n);
                    let i = truncation.index_of(mode).ok_or_else(|| {
                        CliError::Config(format!("mode {mode} is outside {truncation}"))
                    })?;
                    c[i] += Complex64::new(v.re, v.im);
                }
                SpectralState::new(truncation, c).context("building state")?
            }
            StateSource::Inline { state } => state.clone(),
            StateSource::File { path } => {
                let full = base.join(path);
                let text = std::fs::read_to_string(&full).map_err(|source| CliError::Io {
                    path: full.clone(),
                    source,
                })?;
                parse(&text)?
            }
        };
        if state.truncation() != truncation {
            return Err(CliError::Config(format!(
                "state is on {} but the config truncation is {truncation}",
                state.truncation()
            )));
        }
        Ok(state)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SimulateConfig {
    pub truncation: Truncation,
    pub state: StateSource,
    /// Output times.
    pub times: Vec<f64>,
    /// Point where the field is sampled.
    #[serde(default)]
    pub probe: [f64; 2],
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ObserveConfig {
    pub region: ObservationRegion,
    pub truncation: Truncation,
    #[serde(default = "default_weight")]
    pub weight: NormWeight,
}

/// Square or fixed-`maxM` families of truncations.
#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct TruncationRange {
    pub from: u32,
    pub to: u32,
    /// Keep `maxM` at this value and vary `maxN` only.
    #[serde(default)]
    pub max_m: Option<u32>,
    #[serde(default)]
    pub exclude_m_zero: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SweepConfig {
    pub region: ObservationRegion,
    #[serde(default)]
    pub truncations: Vec<Truncation>,
    #[serde(default)]
    pub range: Option<TruncationRange>,
    #[serde(default = "default_weight")]
    pub weight: NormWeight,
}

impl SweepConfig {
    pub fn truncation_list(&self) -> CliResult<Vec<Truncation>> {
        let mut list = self.truncations.clone();
        if let Some(r) = &self.range {
            if r.from > r.to {
                return Err(CliError::Config(format!(
                    "range.from {} exceeds range.to {}",
                    r.from, r.to
                )));
            }
            list.extend(
                (r.from..=r.to).map(|k| Truncation::new(r.max_m.unwrap_or(k), k, r.exclude_m_zero)),
            );
        }
        if list.is_empty() {
            return Err(CliError::Config(
                "sweep needs `truncations` or `range`".into(),
            ));
        }
        Ok(list)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase", deny_unknown_fields)]
pub enum FamilyConfig {
    /// Lifted ZK frequencies on the square window `|m|, |n| <= max`.
    Zk { max: u32 },
    /// `{k^3 : |k| <= maxK}`.
    #[serde(rename_all = "camelCase")]
    Cube { max_k: u32 },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SparseCoverConfig {
    pub family: FamilyConfig,
    pub epsilon: Extended,
    #[serde(default)]
    pub safety: Option<f64>,
    #[serde(default)]
    pub norm: Option<GapNormConfig>,
    /// First `|k|` of the cube tails (cube family only).
    #[serde(default)]
    pub tail_start: Option<u64>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum GapNormConfig {
    Euclidean,
    Sup,
}

impl From<GapNormConfig> for GapNorm {
    fn from(n: GapNormConfig) -> Self {
        match n {
            GapNormConfig::Euclidean => GapNorm::Euclidean,
            GapNormConfig::Sup => GapNorm::Sup,
        }
    }
}

fn default_bset_window() -> u32 {
    100
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct BSetConfig {
    pub k: i64,
    pub l: i64,
    pub r: f64,
    #[serde(default = "default_bset_window")]
    pub window: u32,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct DiophantineConfig {
    pub theta: IrrationalSpec,
    #[serde(default = "default_s")]
    pub s: f64,
    pub max_n: u64,
}

/// Sample grid for control signals: points per spatial axis and in time.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SampleGrid {
    pub space: usize,
    pub time: usize,
}

impl Default for SampleGrid {
    fn default() -> Self {
        Self {
            space: 16,
            time: 16,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ControlConfig {
    pub region: ObservationRegion,
    #[serde(default = "two_pi")]
    pub horizon: f64,
    pub truncation: Truncation,
    pub z0: StateSource,
    #[serde(rename = "zT")]
    pub z_t: StateSource,
    #[serde(default)]
    pub samples: SampleGrid,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct StabilizeConfig {
    pub region: ObservationRegion,
    pub decay: f64,
    #[serde(default = "two_pi")]
    pub horizon: f64,
    pub truncation: Truncation,
    pub z0: StateSource,
    pub t_end: f64,
    /// Defaults to half the largest admissible step.
    #[serde(default)]
    pub dt: Option<f64>,
}

fn default_samples() -> usize {
    20
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct VerifyConfig {
    /// Random states per randomized check.
    #[serde(default = "default_samples")]
    pub samples: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            samples: default_samples(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_fields_are_named() {
        let err = parse::<BSetConfig>(r#"{"k": 2, "l": 4, "r": 7, "radius": 3}"#).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("radius"), "{msg}");
    }

    #[test]
    fn nested_field_path() {
        let text = r#"{"region": {"kind": "verticalSegment", "x0": 0, "interval": {"start": 0, "end": "x"}},
                       "truncation": {"maxM": 2, "maxN": 2}}"#;
        let msg = parse::<ObserveConfig>(text).unwrap_err().to_string();
        assert!(msg.contains("region"), "{msg}");
    }

    #[test]
    fn infinite_epsilon() {
        let c: SparseCoverConfig =
            parse(r#"{"family": {"kind": "zk", "max": 3}, "epsilon": "inf"}"#).unwrap();
        assert!(c.epsilon.value().unwrap().is_infinite());
    }

    #[test]
    fn ranges_expand() {
        let c: SweepConfig = parse(
            r#"{"region": {"kind": "verticalSegment", "x0": 0, "interval": {"start": 0, "end": 6.283185307179586}},
                "range": {"from": 2, "to": 4}}"#,
        )
        .unwrap();
        let list = c.truncation_list().unwrap();
        assert_eq!(
            list,
            vec![
                Truncation::square(2),
                Truncation::square(3),
                Truncation::square(4)
            ]
        );
    }
}
