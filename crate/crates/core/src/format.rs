//! File formats: state descriptions, tensor and experiment exports.
//!
//! State files are JSON, either explicit
//!
//! ```json
//! {"kind": "pure", "local_dims": [2, 2], "amplitudes": [[0.7071, 0], [0, 0], [0, 0], [0.7071, 0]]}
//! {"kind": "density", "local_dims": [2], "matrix": [[[0.5, 0], [0, 0]], [[0, 0], [0.5, 0]]]}
//! ```
//!
//! or a named shorthand such as `{"named": "ghz", "n": 3, "epsilon": 0.8}`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize};

use crate::correlations::{BlochVector, CorrelationTensor};
use crate::error::{Error, Result};
use crate::shotsim::ExperimentResult;
use crate::states::{self, DensityMatrix, PureState, State};
use crate::SCHEMA_VERSION;

/// A state file: explicit amplitudes/matrix or a named family.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum StateSpec {
    Named(NamedState),
    Explicit(ExplicitState),
}

impl<'de> Deserialize<'de> for StateSpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let value = serde_json::Value::deserialize(deserializer)?;
        if value.get("named").is_some() {
            NamedState::deserialize(value).map(StateSpec::Named).map_err(D::Error::custom)
        } else {
            ExplicitState::deserialize(value).map(StateSpec::Explicit).map_err(D::Error::custom)
        }
    }
}

/// Named state families: `ghz`, `bell`, `product`, `haar`, `ghz-noise`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedState {
    pub named: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dirs: Option<Vec<Direction>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// Product-state direction: an axis letter or an explicit Bloch vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Direction {
    Axis(String),
    Vector([f64; 3]),
}

impl Direction {
    fn components(&self) -> Result<[f64; 3]> {
        match self {
            Direction::Vector(v) => Ok(*v),
            Direction::Axis(s) => {
                let mut chars = s.chars();
                let sign = match chars.clone().next() {
                    Some('-') => {
                        chars.next();
                        -1.0
                    }
                    Some('+') => {
                        chars.next();
                        1.0
                    }
                    _ => 1.0,
                };
                let rest: String = chars.collect();
                let mut letters = rest.chars();
                match (letters.next().and_then(BlochVector::axis), letters.next()) {
                    (Some(v), None) => Ok(v.components().map(|c| sign * c)),
                    _ => Err(Error::Format(format!("field `dirs`: unknown direction `{s}` (use x, y, z, -x, ...)"))),
                }
            }
        }
    }
}

/// Parses a comma-separated direction list such as `z,z,-x`.
pub fn parse_directions(list: &str) -> Result<Vec<Direction>> {
    let dirs: Vec<Direction> =
        list.split(',').map(str::trim).filter(|s| !s.is_empty()).map(|s| Direction::Axis(s.to_string())).collect();
    for d in &dirs {
        d.components()?;
    }
    if dirs.is_empty() {
        return Err(Error::Format("field `dirs`: empty direction list".into()));
    }
    Ok(dirs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateKind {
    Pure,
    Density,
}

/// Explicit state with amplitudes or a density matrix as `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitState {
    pub kind: StateKind,
    pub local_dims: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitudes: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<[f64; 2]>>>,
}

fn c(pair: [f64; 2]) -> Complex64 {
    Complex64::new(pair[0], pair[1])
}

fn require<T: Clone>(value: &Option<T>, field: &str, family: &str) -> Result<T> {
    value.clone().ok_or_else(|| Error::Format(format!("field `{field}` is required for named state `{family}`")))
}

impl NamedState {
    pub fn ghz(n: usize) -> Self {
        Self { named: "ghz".into(), n: Some(n), ..Default::default() }
    }

    pub fn build(&self) -> Result<State> {
        let family = self.named.as_str();
        let base: State = match family {
            "ghz" | "ghz-noise" => states::make_ghz(require(&self.n, "n", family)?)?.into(),
            "bell" => {
                if let Some(n) = self.n.filter(|&n| n != 2) {
                    return Err(Error::Format(format!("field `n`: bell state has 2 parties, got {n}")));
                }
                states::make_bell().into()
            }
            "product" => {
                let dirs = require(&self.dirs, "dirs", family)?;
                let comps = dirs.iter().map(Direction::components).collect::<Result<Vec<_>>>()?;
                if let Some(n) = self.n.filter(|&n| n != comps.len()) {
                    return Err(Error::Format(format!("field `n` = {n} disagrees with {} directions", comps.len())));
                }
                states::make_product_state(&comps)?.into()
            }
            "haar" => states::haar_random_pure(require(&self.n, "n", family)?, self.seed.unwrap_or(0))?.into(),
            other => {
                return Err(Error::Format(format!(
                    "field `named`: unknown state `{other}` (ghz, bell, product, haar, ghz-noise)"
                )))
            }
        };
        let epsilon =
            if family == "ghz-noise" { Some(require(&self.epsilon, "epsilon", family)?) } else { self.epsilon };
        match epsilon {
            Some(eps) => Ok(states::mix_with_white_noise(&base, eps)?.into()),
            None => Ok(base),
        }
    }
}

impl ExplicitState {
    pub fn build(&self) -> Result<State> {
        match self.kind {
            StateKind::Pure => {
                let amps = self
                    .amplitudes
                    .as_ref()
                    .ok_or_else(|| Error::Format("field `amplitudes` is required for kind `pure`".into()))?;
                Ok(PureState::new(self.local_dims.clone(), amps.iter().copied().map(c).collect())?.into())
            }
            StateKind::Density => {
                let rows = self
                    .matrix
                    .as_ref()
                    .ok_or_else(|| Error::Format("field `matrix` is required for kind `density`".into()))?;
                let dim = rows.len();
                if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != dim) {
                    return Err(Error::Format(format!(
                        "field `matrix`: row {i} has {} entries, expected {dim}",
                        r.len()
                    )));
                }
                let m = DMatrix::from_fn(dim, dim, |i, j| c(rows[i][j]));
                Ok(DensityMatrix::new(self.local_dims.clone(), m)?.into())
            }
        }
    }
}

impl StateSpec {
    pub fn build(&self) -> Result<State> {
        match self {
            StateSpec::Named(n) => n.build(),
            StateSpec::Explicit(e) => e.build(),
        }
    }

    /// Explicit description of a constructed state.
    pub fn from_state(state: &State) -> Self {
        let pair = |z: &Complex64| [z.re, z.im];
        StateSpec::Explicit(match state {
            State::Pure(p) => ExplicitState {
                kind: StateKind::Pure,
                local_dims: p.local_dims().to_vec(),
                amplitudes: Some(p.amplitudes().iter().map(pair).collect()),
                matrix: None,
            },
            State::Mixed(m) => {
                let mat = m.matrix();
                ExplicitState {
                    kind: StateKind::Density,
                    local_dims: m.local_dims().to_vec(),
                    amplitudes: None,
                    matrix: Some(
                        (0..mat.nrows()).map(|i| (0..mat.ncols()).map(|j| pair(&mat[(i, j)])).collect()).collect(),
                    ),
                }
            }
        })
    }
}

/// Parses a state file.
pub fn parse_state_json(text: &str) -> Result<StateSpec> {
    serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))
}

/// Rounds to 12 decimals and clears negative zero, for CSV output.
fn tidy(v: f64) -> f64 {
    let r = (v * 1e12).round() / 1e12;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

/// `index,value` rows with letter labels, values rounded to 12 decimals.
pub fn tensor_to_csv(tensor: &CorrelationTensor) -> String {
    let mut out = String::from("index,value\n");
    for (label, v) in tensor.labeled_entries() {
        out.push_str(&format!("{label},{:?}\n", tidy(v)));
    }
    out
}

#[derive(Serialize)]
struct TensorEntry {
    index: String,
    value: f64,
}

#[derive(Serialize)]
struct TensorExport {
    schema: u32,
    num_parties: usize,
    correlation_length: f64,
    random_correlations: f64,
    entries: Vec<TensorEntry>,
}

pub fn tensor_to_json(tensor: &CorrelationTensor) -> serde_json::Value {
    let export = TensorExport {
        schema: SCHEMA_VERSION,
        num_parties: tensor.num_parties(),
        correlation_length: tensor.length(),
        random_correlations: tensor.random_correlations(),
        entries: tensor.labeled_entries().map(|(index, value)| TensorEntry { index, value }).collect(),
    };
    serde_json::to_value(export).expect("tensor export is serializable")
}

/// One row per setting: index, direction components, exact and estimated E.
pub fn experiment_to_csv(result: &ExperimentResult) -> String {
    let n = result.num_parties;
    let mut out = String::from("setting_index");
    for party in 1..=n {
        out.push_str(&format!(",u{party}x,u{party}y,u{party}z"));
    }
    out.push_str(",exact_e,estimated_e_k\n");
    for rec in &result.records {
        out.push_str(&rec.setting_index.to_string());
        for u in rec.settings.components() {
            out.push_str(&format!(",{:?},{:?},{:?}", u[0], u[1], u[2]));
        }
        out.push_str(&format!(",{:?},{:?}\n", rec.exact_e, rec.estimated_e_k));
    }
    out
}
