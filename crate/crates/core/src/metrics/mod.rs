//! Set-level quality metrics for generated molecules.

mod fingerprint;
mod scaffold;

pub use fingerprint::{
    hash_words, mix64, morgan_fingerprint, morgan_fingerprint_with, tanimoto, Fingerprint, FINGERPRINT_BITS,
    FINGERPRINT_RADIUS,
};
pub use scaffold::{cosine, murcko_scaffold, scaf_similarity, scaffold_counts, Scaffold, ACYCLIC};

use std::collections::HashSet;

use num_traits::Float;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::genmodel::SampleStatus;
use crate::molgraph::{canonical_key, MolGraph};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("metric is undefined on an empty set")]
    EmptySet,
    #[error("fingerprint lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
}

fn ratio<F: Float>(num: usize, den: usize) -> Result<F, MetricsError> {
    if den == 0 {
        return Err(MetricsError::EmptySet);
    }
    Ok(F::from(num).expect("count") / F::from(den).expect("count"))
}

/// Share of attempts that decoded to a valence-correct molecule.
pub fn validity<F: Float>(statuses: &[SampleStatus]) -> Result<F, MetricsError> {
    ratio(statuses.iter().filter(|&&s| s == SampleStatus::Ok).count(), statuses.len())
}

/// Distinct canonical keys over the number of molecules.
pub fn uniqueness<F: Float>(mols: &[MolGraph]) -> Result<F, MetricsError> {
    let keys: HashSet<String> = mols.iter().map(canonical_key).collect();
    ratio(keys.len(), mols.len())
}

/// Share of molecules whose key is absent from `train_keys`.
pub fn novelty<F: Float>(mols: &[MolGraph], train_keys: &HashSet<String>) -> Result<F, MetricsError> {
    ratio(mols.iter().filter(|g| !train_keys.contains(&canonical_key(g))).count(), mols.len())
}

/// Mean over `gen` of the best Tanimoto similarity to any reference.
pub fn mean_nearest_tanimoto<F: Float>(gen: &[Fingerprint], reference: &[Fingerprint]) -> Result<F, MetricsError> {
    if gen.is_empty() || reference.is_empty() {
        return Err(MetricsError::EmptySet);
    }
    let mut total = F::zero();
    for g in gen {
        let mut best = F::zero();
        for r in reference {
            best = best.max(tanimoto(g, r)?);
        }
        total = total + best;
    }
    Ok(total / F::from(gen.len()).expect("count"))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatusCounts {
    pub ok: usize,
    pub parse_fail: usize,
    pub decode_fail: usize,
    pub valence_fail: usize,
    pub truncated: usize,
}

impl StatusCounts {
    pub fn add(&mut self, s: SampleStatus) {
        *match s {
            SampleStatus::Ok => &mut self.ok,
            SampleStatus::ParseFail => &mut self.parse_fail,
            SampleStatus::DecodeFail => &mut self.decode_fail,
            SampleStatus::ValenceFail => &mut self.valence_fail,
            SampleStatus::Truncated => &mut self.truncated,
        } += 1;
    }
}

/// Report values are kept at four decimal places and written that way.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsReport {
    pub samples: usize,
    pub valid: usize,
    #[serde(with = "four_places")]
    pub validity: Option<f64>,
    #[serde(with = "four_places")]
    pub uniqueness: Option<f64>,
    #[serde(with = "four_places")]
    pub novelty: Option<f64>,
    #[serde(with = "four_places")]
    pub scaf_similarity: Option<f64>,
    #[serde(with = "four_places")]
    pub mean_nearest_tanimoto: Option<f64>,
    /// Reserved for externally computed FCD; always null here.
    #[serde(with = "four_places")]
    pub fcd: Option<f64>,
    /// Reserved for externally computed NSPDK MMD; always null here.
    #[serde(with = "four_places")]
    pub nspdk: Option<f64>,
    pub status_counts: StatusCounts,
    /// Metrics left null because their denominator set was empty.
    pub undefined: Vec<String>,
}

pub fn round4(x: f64) -> f64 {
    (x * 1e4).round() / 1e4
}

impl MetricsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

mod four_places {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use serde_json::value::RawValue;

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(x) => RawValue::from_string(format!("{x:.4}")).map_err(serde::ser::Error::custom)?.serialize(s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        Option::<f64>::deserialize(d).map(|v| v.map(super::round4))
    }
}

/// Composes every metric. Uniqueness, novelty, scaffold similarity and
/// nearest-neighbour Tanimoto are computed over the valid molecules only.
pub fn evaluate_report<'a>(
    attempts: impl IntoIterator<Item = (SampleStatus, Option<&'a MolGraph>)>,
    train_keys: &HashSet<String>,
    reference: &[MolGraph],
) -> Result<MetricsReport, MetricsError> {
    let mut counts = StatusCounts::default();
    let mut statuses = Vec::new();
    let mut valid: Vec<MolGraph> = Vec::new();
    for (status, graph) in attempts {
        counts.add(status);
        statuses.push(status);
        if status == SampleStatus::Ok {
            valid.push(graph.expect("ok attempts carry a graph").clone());
        }
    }
    let validity = validity::<f64>(&statuses)?;

    let mut undefined = Vec::new();
    let mut defined = |name: &str, r: Result<f64, MetricsError>| match r {
        Ok(x) => Some(round4(x)),
        Err(_) => {
            undefined.push(name.to_string());
            None
        }
    };
    let uniqueness = defined("uniqueness", uniqueness(&valid));
    let novelty = defined("novelty", novelty(&valid, train_keys));
    let scaf = defined("scaf_similarity", scaf_similarity(&valid, reference));
    let gen_fps: Vec<Fingerprint> = valid.iter().map(morgan_fingerprint).collect();
    let ref_fps: Vec<Fingerprint> = reference.iter().map(morgan_fingerprint).collect();
    let mnt = defined("mean_nearest_tanimoto", mean_nearest_tanimoto(&gen_fps, &ref_fps));

    Ok(MetricsReport {
        samples: statuses.len(),
        valid: valid.len(),
        validity: Some(round4(validity)),
        uniqueness,
        novelty,
        scaf_similarity: scaf,
        mean_nearest_tanimoto: mnt,
        fcd: None,
        nspdk: None,
        status_counts: counts,
        undefined,
    })
}
