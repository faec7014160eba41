//! JSON wire formats for the `f64` types.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Grid, GridMeasure, MomentTensorSeq, Representation};
use crate::moments::{MomentSequence, SemiAlgebraicSpec};
use crate::oracle::{AtomicEnsemble, Atoms};
use crate::poly::{MultiIndex, Polynomial};
use crate::quasi::{NamedRule, PositiveSequence};
use crate::sobolev::SampledFunction;

/// Parses JSON, keeping serde's line/column position in the message.
pub fn parse<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("malformed JSON: {e}")))
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("wire types serialize")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MomentEntry {
    pub alpha: MultiIndex,
    pub m: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MomentSequenceJson {
    pub d: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub values: Vec<MomentEntry>,
}

impl From<&MomentSequence<f64>> for MomentSequenceJson {
    fn from(m: &MomentSequence<f64>) -> Self {
        let values = m.iter().map(|(a, &v)| MomentEntry { alpha: a.clone(), m: v }).collect();
        Self { d: m.dim(), n: m.max_degree(), values }
    }
}

impl TryFrom<MomentSequenceJson> for MomentSequence<f64> {
    type Error = Error;
    fn try_from(j: MomentSequenceJson) -> Result<Self> {
        MomentSequence::new(j.d, j.n, j.values.into_iter().map(|e| (e.alpha, e.m)))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoeffEntry {
    pub alpha: MultiIndex,
    pub c: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolynomialJson {
    pub d: usize,
    pub coeffs: Vec<CoeffEntry>,
}

impl From<&Polynomial<f64>> for PolynomialJson {
    fn from(p: &Polynomial<f64>) -> Self {
        Self { d: p.dim(), coeffs: p.terms().map(|(a, &c)| CoeffEntry { alpha: a.clone(), c }).collect() }
    }
}

impl TryFrom<PolynomialJson> for Polynomial<f64> {
    type Error = Error;
    fn try_from(j: PolynomialJson) -> Result<Self> {
        Polynomial::from_terms(j.d, j.coeffs.into_iter().map(|e| (e.alpha, e.c)))
    }
}

/// Either explicit constraints or a box `[[lo, hi], ...]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SemiAlgebraicJson {
    Constraints { d: usize, constraints: Vec<PolynomialJson> },
    Box {
        #[serde(rename = "box")]
        bounds: Vec<[f64; 2]>,
    },
}

impl TryFrom<SemiAlgebraicJson> for SemiAlgebraicSpec<f64> {
    type Error = Error;
    fn try_from(j: SemiAlgebraicJson) -> Result<Self> {
        match j {
            SemiAlgebraicJson::Constraints { d, constraints } => {
                let ps = constraints.into_iter().map(Polynomial::try_from).collect::<Result<Vec<_>>>()?;
                SemiAlgebraicSpec::new(d, ps)
            }
            SemiAlgebraicJson::Box { bounds } => {
                let lo: Vec<f64> = bounds.iter().map(|b| b[0]).collect();
                let hi: Vec<f64> = bounds.iter().map(|b| b[1]).collect();
                SemiAlgebraicSpec::box_set(&lo, &hi)
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SequenceJson {
    #[serde(default)]
    pub terms: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule: Option<NamedRule>,
}

impl TryFrom<SequenceJson> for PositiveSequence<f64> {
    type Error = Error;
    fn try_from(j: SequenceJson) -> Result<Self> {
        match (j.terms.is_empty(), j.rule) {
            (true, None) => Err(Error::InvalidInput("sequence needs terms or a rule".into())),
            (true, Some(rule)) => PositiveSequence::from_rule(rule),
            (false, rule) => {
                let s = PositiveSequence::from_terms(&j.terms)?;
                match rule {
                    Some(r) => s.with_rule(r),
                    None => Ok(s),
                }
            }
        }
    }
}

impl TryFrom<&PositiveSequence<f64>> for SequenceJson {
    type Error = Error;
    fn try_from(s: &PositiveSequence<f64>) -> Result<Self> {
        let terms = (0..s.explicit_len()).map(|n| s.term(n)).collect::<Result<_>>()?;
        Ok(Self { terms, rule: s.named_rule().cloned() })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldAtomJson {
    pub w: f64,
    pub eta: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TensorJson {
    pub n: usize,
    pub entries: Vec<f64>,
}

/// Atomic or dense moment tensors; `seed` and `recipe` are set when the
/// file came from the oracle.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TensorSeqJson {
    Atomic {
        grid: Grid,
        atoms: Vec<FieldAtomJson>,
        #[serde(rename = "N")]
        n: usize,
        #[serde(default)]
        density: bool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        recipe: Option<String>,
    },
    Dense {
        grid: Grid,
        tensors: Vec<TensorJson>,
        #[serde(default)]
        density: bool,
    },
}

impl From<&MomentTensorSeq<f64>> for TensorSeqJson {
    fn from(m: &MomentTensorSeq<f64>) -> Self {
        match m.representation() {
            Representation::Atomic { weights, atoms } => TensorSeqJson::Atomic {
                grid: m.grid().clone(),
                atoms: weights.iter().zip(atoms).map(|(&w, eta)| FieldAtomJson { w, eta: eta.clone() }).collect(),
                n: m.max_order(),
                density: m.has_density(),
                seed: None,
                recipe: None,
            },
            Representation::Dense(t) => TensorSeqJson::Dense {
                grid: m.grid().clone(),
                tensors: t.iter().enumerate().map(|(n, e)| TensorJson { n, entries: e.clone() }).collect(),
                density: m.has_density(),
            },
        }
    }
}

impl TryFrom<TensorSeqJson> for MomentTensorSeq<f64> {
    type Error = Error;
    fn try_from(j: TensorSeqJson) -> Result<Self> {
        match j {
            TensorSeqJson::Atomic { grid, atoms, n, density, .. } => {
                grid.validate()?;
                let atoms = atoms
                    .into_iter()
                    .map(|a| Ok((a.w, GridMeasure::new(grid.clone(), a.eta)?)))
                    .collect::<Result<Vec<_>>>()?;
                Ok(MomentTensorSeq::atomic(grid, atoms, n)?.with_density(density))
            }
            TensorSeqJson::Dense { grid, mut tensors, density } => {
                grid.validate()?;
                tensors.sort_by_key(|t| t.n);
                if let Some((i, t)) = tensors.iter().enumerate().find(|(i, t)| t.n != *i) {
                    return Err(Error::InvalidInput(format!("dense tensors must cover orders 0..N; slot {i} holds order {}", t.n)));
                }
                Ok(MomentTensorSeq::dense(grid, tensors.into_iter().map(|t| t.entries).collect())?.with_density(density))
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointAtomJson {
    pub w: f64,
    pub x: Vec<f64>,
}

/// Ensemble file: the atomic tensor form for fields, `{"d", "atoms": [{"w",
/// "x"}]}` for points, plus `seed` and `recipe`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EnsembleJson {
    Field {
        grid: Grid,
        atoms: Vec<FieldAtomJson>,
        #[serde(rename = "N")]
        n: usize,
        density: bool,
        seed: Option<u64>,
        recipe: String,
    },
    Points {
        d: usize,
        atoms: Vec<PointAtomJson>,
        #[serde(rename = "N")]
        n: usize,
        seed: Option<u64>,
        recipe: String,
    },
}

impl EnsembleJson {
    pub fn new(e: &AtomicEnsemble<f64>, n: usize) -> Self {
        match &e.atoms {
            Atoms::Points { dim, atoms } => EnsembleJson::Points {
                d: *dim,
                atoms: atoms.iter().map(|(w, x)| PointAtomJson { w: *w, x: x.clone() }).collect(),
                n,
                seed: e.seed,
                recipe: e.recipe.clone(),
            },
            Atoms::Field { grid, atoms } => EnsembleJson::Field {
                grid: grid.clone(),
                atoms: atoms.iter().map(|(w, eta)| FieldAtomJson { w: *w, eta: eta.weights().to_vec() }).collect(),
                n,
                density: e.density,
                seed: e.seed,
                recipe: e.recipe.clone(),
            },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampledFunctionJson {
    #[serde(rename = "box")]
    pub bounds: Vec<[f64; 2]>,
    pub h: f64,
    pub values: Vec<f64>,
}

impl From<&SampledFunction<f64>> for SampledFunctionJson {
    fn from(f: &SampledFunction<f64>) -> Self {
        Self { bounds: f.bounds().into_iter().map(|(a, b)| [a, b]).collect(), h: f.h(), values: f.values().to_vec() }
    }
}

impl TryFrom<SampledFunctionJson> for SampledFunction<f64> {
    type Error = Error;
    fn try_from(j: SampledFunctionJson) -> Result<Self> {
        let bounds: Vec<(f64, f64)> = j.bounds.iter().map(|b| (b[0], b[1])).collect();
        SampledFunction::new(&bounds, j.h, j.values)
    }
}
