//! JSON serialization for channels, ensembles, and experiment data.
//!
//! Complex numbers are stored as `[re, im]` pairs and matrices as row-major
//! entry lists tagged with their dimension, so the files stay readable and
//! language-agnostic. Reconstruction goes through the same validating
//! constructors as the rest of the crate, so a hand-edited file that breaks
//! an invariant (POVM normalization, count totals, weight sums) is rejected
//! rather than silently accepted.

use crate::channels::{ChoiMatrix, Superoperator};
use crate::ensembles::{CovariantEnsemble, Rotations};
use crate::linalg::{CMat3, CMat9, C64};
use crate::qpt::{ExperimentData, MeasurementSet};
use crate::spinspace::Su2Element;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

fn ser_err(e: serde_json::Error) -> Error {
    Error::Serialization(e.to_string())
}

// ===================== matrices =====================

/// Row-major complex matrix with entries as [re, im] pairs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComplexMatrixData {
    pub dim: usize,
    pub entries: Vec<[f64; 2]>,
}

impl ComplexMatrixData {
    fn check(&self) -> Result<()> {
        if self.entries.len() != self.dim * self.dim {
            return Err(Error::MalformedData(format!(
                "{}x{} matrix with {} entries",
                self.dim,
                self.dim,
                self.entries.len()
            )));
        }
        Ok(())
    }
}

impl From<&CMat3> for ComplexMatrixData {
    fn from(m: &CMat3) -> Self {
        let entries = (0..3)
            .flat_map(|i| (0..3).map(move |j| [m[(i, j)].re, m[(i, j)].im]))
            .collect();
        Self { dim: 3, entries }
    }
}

impl From<&CMat9> for ComplexMatrixData {
    fn from(m: &CMat9) -> Self {
        let entries = (0..9)
            .flat_map(|i| (0..9).map(move |j| [m[(i, j)].re, m[(i, j)].im]))
            .collect();
        Self { dim: 9, entries }
    }
}

impl TryFrom<&ComplexMatrixData> for CMat3 {
    type Error = Error;
    fn try_from(d: &ComplexMatrixData) -> Result<CMat3> {
        d.check()?;
        if d.dim != 3 {
            return Err(Error::MalformedData(format!("expected dim 3, got {}", d.dim)));
        }
        Ok(CMat3::from_fn(|i, j| {
            let [re, im] = d.entries[3 * i + j];
            C64::new(re, im)
        }))
    }
}

impl TryFrom<&ComplexMatrixData> for CMat9 {
    type Error = Error;
    fn try_from(d: &ComplexMatrixData) -> Result<CMat9> {
        d.check()?;
        if d.dim != 9 {
            return Err(Error::MalformedData(format!("expected dim 9, got {}", d.dim)));
        }
        Ok(CMat9::from_fn(|i, j| {
            let [re, im] = d.entries[9 * i + j];
            C64::new(re, im)
        }))
    }
}

// ===================== channels =====================

/// Serialized channel: either representation can be reconstructed from the
/// other, but storing the one the producer worked with keeps diffs honest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelData {
    pub representation: String,
    pub matrix: ComplexMatrixData,
}

pub fn superoperator_to_json(e: &Superoperator) -> Result<String> {
    let data = ChannelData {
        representation: "superoperator".into(),
        matrix: ComplexMatrixData::from(e.matrix()),
    };
    serde_json::to_string_pretty(&data).map_err(ser_err)
}

pub fn superoperator_from_json(s: &str) -> Result<Superoperator> {
    let data: ChannelData = serde_json::from_str(s).map_err(ser_err)?;
    if data.representation != "superoperator" {
        return Err(Error::MalformedData(format!(
            "expected a superoperator record, found {:?}",
            data.representation
        )));
    }
    Ok(Superoperator::from_matrix(CMat9::try_from(&data.matrix)?))
}

pub fn choi_to_json(c: &ChoiMatrix) -> Result<String> {
    let data = ChannelData {
        representation: "choi".into(),
        matrix: ComplexMatrixData::from(c.matrix()),
    };
    serde_json::to_string_pretty(&data).map_err(ser_err)
}

pub fn choi_from_json(s: &str) -> Result<ChoiMatrix> {
    let data: ChannelData = serde_json::from_str(s).map_err(ser_err)?;
    if data.representation != "choi" {
        return Err(Error::MalformedData(format!(
            "expected a choi record, found {:?}",
            data.representation
        )));
    }
    Ok(ChoiMatrix::from_matrix(CMat9::try_from(&data.matrix)?))
}

// ===================== ensembles =====================

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RotationData {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleData {
    pub x: f64,
    pub rotations: Vec<RotationData>,
    pub weights: Vec<f64>,
}

impl From<&CovariantEnsemble> for EnsembleData {
    fn from(ens: &CovariantEnsemble) -> Self {
        let rotations = match ens.rotations() {
            Rotations::Discrete(rots) => rots
                .iter()
                .map(|u| {
                    let (alpha, beta, gamma) = u.euler();
                    RotationData { alpha, beta, gamma }
                })
                .collect(),
            Rotations::ContinuousHaar => Vec::new(),
        };
        Self { x: ens.x(), rotations, weights: ens.weights().to_vec() }
    }
}

impl TryFrom<&EnsembleData> for CovariantEnsemble {
    type Error = Error;
    fn try_from(d: &EnsembleData) -> Result<CovariantEnsemble> {
        if d.rotations.is_empty() {
            return CovariantEnsemble::continuous(d.x);
        }
        let rots: Vec<Su2Element> = d
            .rotations
            .iter()
            .map(|r| Su2Element::from_euler(r.alpha, r.beta, r.gamma))
            .collect();
        CovariantEnsemble::weighted(d.x, rots, d.weights.clone())
    }
}

// ===================== experiments =====================

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentFile {
    pub format: String,
    pub probes: EnsembleData,
    pub effects: Vec<ComplexMatrixData>,
    pub counts: Vec<Vec<u64>>,
    pub shots: u64,
    pub seed: u64,
}

pub const EXPERIMENT_FORMAT: &str = "biphoton-experiment-v1";

pub fn experiment_to_json(data: &ExperimentData) -> Result<String> {
    if matches!(data.probes.rotations(), Rotations::ContinuousHaar) {
        return Err(Error::MalformedData(
            "continuous ensembles carry no realizable probe list".into(),
        ));
    }
    let file = ExperimentFile {
        format: EXPERIMENT_FORMAT.into(),
        probes: EnsembleData::from(&data.probes),
        effects: data.measurements.effects().iter().map(ComplexMatrixData::from).collect(),
        counts: data.counts.clone(),
        shots: data.shots,
        seed: data.seed,
    };
    serde_json::to_string_pretty(&file).map_err(ser_err)
}

pub fn experiment_from_json(s: &str) -> Result<ExperimentData> {
    let file: ExperimentFile = serde_json::from_str(s).map_err(ser_err)?;
    if file.format != EXPERIMENT_FORMAT {
        return Err(Error::MalformedData(format!(
            "unsupported experiment format {:?}",
            file.format
        )));
    }
    let probes = CovariantEnsemble::try_from(&file.probes)?;
    let effects: Vec<CMat3> =
        file.effects.iter().map(CMat3::try_from).collect::<Result<_>>()?;
    let measurements = MeasurementSet::new(effects)?;
    ExperimentData::new(probes, measurements, file.counts, file.shots, file.seed)
}
