//! Simulated quantum process tomography.
//!
//! The pipeline: pick a probe ensemble, push each probe through the channel
//! under study, measure with an informationally complete POVM, and
//! reconstruct the channel from the counts, either by linear inversion of
//! the probe/effect design matrix or by maximum-likelihood iteration over
//! CPTP maps. Reconstructions are scored by the average process infidelity
//! (API): one minus the output-state fidelity between truth and estimate,
//! averaged over Haar-random pure inputs.

use crate::channels::{ChoiMatrix, Superoperator};
use crate::ensembles::CovariantEnsemble;
use crate::linalg::{
    cr, derive_seed, eigh3, eye3, hermitian_basis, hermitian_coords, kron33, lstsq,
    psd_project_unit_trace, vec3, CMat3, CMat9, C64,
};
use crate::spinspace::{fidelity, haar_state_with, DensityMatrix};
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::Binomial;
use rayon::prelude::*;

// ===================== measurements =====================

/// A POVM: PSD effects summing to the identity, treated as one measurement
/// context (every shot produces exactly one effect outcome).
#[derive(Debug, Clone)]
pub struct MeasurementSet {
    effects: Vec<CMat3>,
    complete: bool,
}

impl MeasurementSet {
    pub fn new(effects: Vec<CMat3>) -> Result<Self> {
        if effects.is_empty() {
            return Err(Error::IncompleteMeasurements("no effects given".into()));
        }
        let mut sum = CMat3::zeros();
        for (j, e) in effects.iter().enumerate() {
            if (e - e.adjoint()).camax() > 1e-10 {
                return Err(Error::MatrixValidation(format!("effect {j} is not Hermitian")));
            }
            let (eigs, _) = eigh3(e);
            if eigs.min() < -1e-10 {
                return Err(Error::MatrixValidation(format!(
                    "effect {j} has negative eigenvalue {}",
                    eigs.min()
                )));
            }
            sum += e;
        }
        if (sum - eye3()).camax() > 1e-10 {
            return Err(Error::MatrixValidation("effects do not sum to the identity".into()));
        }
        let complete = effect_span_dimension(&effects) == 9;
        Ok(Self { effects, complete })
    }

    pub fn effects(&self) -> &[CMat3] {
        &self.effects
    }

    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }

    /// Whether the effects span the full 9-dimensional operator space.
    pub fn is_informationally_complete(&self) -> bool {
        self.complete
    }

    /// Born probabilities of a state under this POVM.
    pub fn probabilities(&self, rho: &DensityMatrix) -> Vec<f64> {
        self.effects.iter().map(|e| rho.expectation(e)).collect()
    }
}

fn effect_span_dimension(effects: &[CMat3]) -> usize {
    let basis = hermitian_basis();
    let mut m = DMatrix::zeros(9, effects.len());
    for (j, e) in effects.iter().enumerate() {
        for (a, c) in hermitian_coords(e, &basis).into_iter().enumerate() {
            m[(a, j)] = c;
        }
    }
    crate::linalg::rank(&m, 1e-9)
}

/// The default tomography POVM: projectors onto the 10-state Fibonacci orbit
/// of the 2-design fiducial, symmetrized into an exact POVM. The plain
/// (3/10)-scaled projectors sum only approximately to the identity, so the
/// projectors are reweighted and sandwiched, E_j = S^{-1/2} w_j P_j S^{-1/2}
/// with S = sum of w_j P_j, and the weights balanced by fixed-point
/// iteration until every effect has trace exactly 3/10. The effects stay
/// PSD, sum to the identity at machine precision, and give the maximally
/// mixed state a flat outcome distribution.
pub fn default_measurement_set() -> MeasurementSet {
    let ens = CovariantEnsemble::fibonacci(crate::spinspace::TWO_DESIGN_X, 10)
        .expect("fixed fiducial parameter is valid");
    let projectors: Vec<CMat3> =
        ens.states().unwrap().iter().map(|s| *s.density().matrix()).collect();
    let n = projectors.len();
    let target = 3.0 / n as f64;
    let mut weights = vec![target; n];
    let mut effects: Vec<CMat3> = Vec::new();
    for _ in 0..200 {
        let s: CMat3 = projectors
            .iter()
            .zip(&weights)
            .map(|(p, &w)| p * cr(w))
            .sum();
        let (eigs, vecs) = eigh3(&s);
        let mut inv_sqrt = CMat3::zeros();
        for k in 0..3 {
            let col = vecs.column(k);
            inv_sqrt += col * col.adjoint() * cr(1.0 / eigs[k].sqrt());
        }
        effects = projectors
            .iter()
            .zip(&weights)
            .map(|(p, &w)| inv_sqrt * p * cr(w) * inv_sqrt)
            .collect();
        let mut worst: f64 = 0.0;
        for (j, e) in effects.iter().enumerate() {
            let t = e.trace().re;
            worst = worst.max((t - target).abs());
            weights[j] *= target / t;
        }
        if worst < 1e-14 {
            break;
        }
    }
    MeasurementSet::new(effects).expect("balanced projector POVM is valid")
}

// ===================== experiment data =====================

/// Counts from a simulated (or ingested) tomography experiment.
#[derive(Debug, Clone)]
pub struct ExperimentData {
    pub probes: CovariantEnsemble,
    pub measurements: MeasurementSet,
    pub counts: Vec<Vec<u64>>,
    pub shots: u64,
    pub seed: u64,
}

impl ExperimentData {
    pub fn new(
        probes: CovariantEnsemble,
        measurements: MeasurementSet,
        counts: Vec<Vec<u64>>,
        shots: u64,
        seed: u64,
    ) -> Result<Self> {
        let n_probes = probes.states()?.len();
        if counts.len() != n_probes {
            return Err(Error::MalformedData(format!(
                "{} count rows for {n_probes} probes",
                counts.len()
            )));
        }
        for (i, row) in counts.iter().enumerate() {
            if row.len() != measurements.len() {
                return Err(Error::MalformedData(format!(
                    "count row {i} has {} entries for {} effects",
                    row.len(),
                    measurements.len()
                )));
            }
            let total: u64 = row.iter().sum();
            if total != shots {
                return Err(Error::MalformedData(format!(
                    "count row {i} sums to {total}, expected {shots}"
                )));
            }
        }
        Ok(Self { probes, measurements, counts, shots, seed })
    }

    /// The nominal probe states as density matrices.
    pub fn probe_densities(&self) -> Result<Vec<DensityMatrix>> {
        Ok(self.probes.states()?.iter().map(|s| s.density()).collect())
    }

    /// Observed frequencies counts/shots.
    pub fn frequencies(&self) -> Vec<Vec<f64>> {
        self.counts
            .iter()
            .map(|row| row.iter().map(|&n| n as f64 / self.shots as f64).collect())
            .collect()
    }
}

fn validated_probabilities(raw: Vec<f64>) -> Result<Vec<f64>> {
    for &p in &raw {
        if !(-1e-9..=1.0 + 1e-9).contains(&p) {
            return Err(Error::Solver(format!(
                "Born probability {p} outside [0, 1] beyond tolerance"
            )));
        }
    }
    let sum: f64 = raw.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::Solver(format!("Born probabilities sum to {sum}, not 1")));
    }
    Ok(raw.into_iter().map(|p| (p / sum).clamp(0.0, 1.0)).collect())
}

fn sample_multinomial(rng: &mut ChaCha12Rng, shots: u64, probs: &[f64]) -> Vec<u64> {
    let mut counts = vec![0u64; probs.len()];
    let mut remaining = shots;
    let mut rest = 1.0;
    for j in 0..probs.len() {
        if remaining == 0 {
            break;
        }
        if j + 1 == probs.len() {
            counts[j] = remaining;
            break;
        }
        let q = if rest > 0.0 { (probs[j] / rest).clamp(0.0, 1.0) } else { 1.0 };
        let n = rng.sample(Binomial::new(remaining, q).expect("q in [0,1]"));
        counts[j] = n;
        remaining -= n;
        rest -= probs[j];
    }
    counts
}

/// Simulate a tomography experiment: multinomial counts per probe from the
/// Born probabilities of the channel's outputs. Each probe draws from its
/// own seed-derived RNG stream, so the result does not depend on execution
/// order and is identical for identical seeds.
pub fn simulate_process_data(
    e: &Superoperator,
    probes: &CovariantEnsemble,
    ms: &MeasurementSet,
    shots: u64,
    seed: u64,
) -> Result<ExperimentData> {
    if shots < 1 {
        return Err(Error::ParameterRange { name: "shots", value: 0.0, range: ">= 1" });
    }
    let states = probes.states()?;
    let counts: Vec<Vec<u64>> = states
        .par_iter()
        .enumerate()
        .map(|(i, psi)| -> Result<Vec<u64>> {
            let out = e.apply(&psi.density());
            let probs = validated_probabilities(ms.probabilities(&out))?;
            let mut rng = ChaCha12Rng::seed_from_u64(derive_seed(seed, &[i as u64]));
            Ok(sample_multinomial(&mut rng, shots, &probs))
        })
        .collect::<Result<_>>()?;
    ExperimentData::new(probes.clone(), ms.clone(), counts, shots, seed)
}

// ===================== estimates =====================

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimateMethod {
    LinearInversion,
    MaximumLikelihood,
}

/// A reconstructed process. Linear estimates may leave the CPTP set; the
/// `cp_violation` field records |min Choi eigenvalue| when negative.
/// Maximum-likelihood estimates are CPTP and carry the identifiability
/// deficit of the probe set (9 minus the probe Gram rank).
#[derive(Debug, Clone)]
pub struct ProcessEstimate {
    pub choi: ChoiMatrix,
    pub method: EstimateMethod,
    /// Multinomial log-likelihood of the counts, up to the count-permutation
    /// constant; NaN for estimates built from exact probabilities.
    pub loglikelihood: f64,
    pub iterations: usize,
    pub cp_violation: f64,
    pub identifiability_deficit: usize,
    pub likelihood_trace: Vec<f64>,
}

impl ProcessEstimate {
    pub fn superoperator(&self) -> Superoperator {
        self.choi.to_superoperator()
    }
}

fn probe_coord_matrix(probes: &[DensityMatrix]) -> DMatrix<f64> {
    let basis = hermitian_basis();
    let mut m = DMatrix::zeros(9, probes.len());
    for (i, rho) in probes.iter().enumerate() {
        for (a, c) in hermitian_coords(rho.matrix(), &basis).into_iter().enumerate() {
            m[(a, i)] = c;
        }
    }
    m
}

fn probe_null_dimension(probes: &[DensityMatrix]) -> usize {
    9 - crate::linalg::rank(&probe_coord_matrix(probes), 1e-9)
}

/// Reconstruct the superoperator whose transfer matrix in the Hermitian
/// operator basis is R.
fn superoperator_from_transfer(r: &DMatrix<f64>) -> Superoperator {
    let basis = hermitian_basis();
    let vecs: Vec<_> = basis.iter().map(vec3).collect();
    let mut s = CMat9::zeros();
    for a in 0..9 {
        for b in 0..9 {
            s += vecs[a] * vecs[b].adjoint() * cr(r[(a, b)]);
        }
    }
    Superoperator::from_matrix(s)
}

/// Linear inversion from exact or observed outcome probabilities. The
/// channel's transfer matrix is linear in the data, so least squares on the
/// probe/effect design matrix recovers it; with exact probabilities, a
/// full-rank probe set, and informationally complete effects the recovery is
/// exact to machine precision.
pub fn linear_inversion_probabilities(
    probs: &[Vec<f64>],
    probes_exact: &[DensityMatrix],
    ms: &MeasurementSet,
) -> Result<ProcessEstimate> {
    if probs.len() != probes_exact.len() {
        return Err(Error::MalformedData(format!(
            "{} probability rows for {} probes",
            probs.len(),
            probes_exact.len()
        )));
    }
    if !ms.is_informationally_complete() {
        return Err(Error::IncompleteMeasurements(
            "effects span fewer than 9 operator dimensions".into(),
        ));
    }
    let null_dim = probe_null_dimension(probes_exact);
    if null_dim > 0 {
        return Err(Error::IncompleteProbes { null_dim });
    }

    let basis = hermitian_basis();
    let probe_coords: Vec<[f64; 9]> =
        probes_exact.iter().map(|r| hermitian_coords(r.matrix(), &basis)).collect();
    let effect_coords: Vec<[f64; 9]> =
        ms.effects().iter().map(|e| hermitian_coords(e, &basis)).collect();

    let rows = probs.len() * ms.len();
    let mut design = DMatrix::zeros(rows, 81);
    let mut y = DVector::zeros(rows);
    for (i, row) in probs.iter().enumerate() {
        if row.len() != ms.len() {
            return Err(Error::MalformedData(format!(
                "probability row {i} has {} entries for {} effects",
                row.len(),
                ms.len()
            )));
        }
        for (j, &p) in row.iter().enumerate() {
            let r = i * ms.len() + j;
            y[r] = p;
            for a in 0..9 {
                for b in 0..9 {
                    design[(r, 9 * a + b)] = effect_coords[j][a] * probe_coords[i][b];
                }
            }
        }
    }
    let sol = lstsq(&design, &y);
    let transfer = DMatrix::from_fn(9, 9, |a, b| sol[9 * a + b]);
    let choi = superoperator_from_transfer(&transfer).to_choi();
    let cp_violation = (-choi.min_eigenvalue()).max(0.0);
    Ok(ProcessEstimate {
        choi,
        method: EstimateMethod::LinearInversion,
        loglikelihood: f64::NAN,
        iterations: 0,
        cp_violation,
        identifiability_deficit: 0,
        likelihood_trace: Vec::new(),
    })
}

/// Linear inversion from experiment counts.
pub fn linear_inversion_qpt(
    data: &ExperimentData,
    probes_exact: &[DensityMatrix],
) -> Result<ProcessEstimate> {
    let freqs = data.frequencies();
    let mut est = linear_inversion_probabilities(&freqs, probes_exact, &data.measurements)?;
    est.loglikelihood = counts_loglikelihood(
        &data.counts,
        &born_matrix(&est.superoperator(), probes_exact, &data.measurements),
    );
    Ok(est)
}

fn born_matrix(
    e: &Superoperator,
    probes: &[DensityMatrix],
    ms: &MeasurementSet,
) -> Vec<Vec<f64>> {
    probes.iter().map(|rho| ms.probabilities(&e.apply(rho))).collect()
}

fn counts_loglikelihood(counts: &[Vec<u64>], probs: &[Vec<f64>]) -> f64 {
    let mut ll = 0.0;
    for (row_n, row_p) in counts.iter().zip(probs) {
        for (&n, &p) in row_n.iter().zip(row_p) {
            if n > 0 {
                ll += n as f64 * p.max(1e-12).ln();
            }
        }
    }
    ll
}

// ===================== state tomography =====================

/// Estimate a state from outcome frequencies: linear inversion in the
/// Hermitian basis, then Frobenius projection onto unit-trace PSD matrices.
pub fn state_tomography_frequencies(
    freqs: &[f64],
    ms: &MeasurementSet,
) -> Result<DensityMatrix> {
    if !ms.is_informationally_complete() {
        return Err(Error::IncompleteMeasurements(
            "effects span fewer than 9 operator dimensions".into(),
        ));
    }
    if freqs.len() != ms.len() {
        return Err(Error::MalformedData(format!(
            "{} frequencies for {} effects",
            freqs.len(),
            ms.len()
        )));
    }
    let basis = hermitian_basis();
    let mut design = DMatrix::zeros(ms.len(), 9);
    let mut y = DVector::zeros(ms.len());
    for (j, e) in ms.effects().iter().enumerate() {
        y[j] = freqs[j];
        for (a, c) in hermitian_coords(e, &basis).into_iter().enumerate() {
            design[(j, a)] = c;
        }
    }
    let coords = lstsq(&design, &y);
    let mut h = CMat3::zeros();
    for a in 0..9 {
        h += basis[a] * cr(coords[a]);
    }
    DensityMatrix::new(psd_project_unit_trace(&h))
}

/// Estimate a state from measured counts.
pub fn state_tomography(counts: &[u64], ms: &MeasurementSet) -> Result<DensityMatrix> {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::MalformedData("state tomography with zero total counts".into()));
    }
    let freqs: Vec<f64> = counts.iter().map(|&n| n as f64 / total as f64).collect();
    state_tomography_frequencies(&freqs, ms)
}

// ===================== maximum likelihood =====================

#[derive(Debug, Clone, Copy)]
pub struct MleOptions {
    pub max_iterations: usize,
    /// Stop once the log-likelihood gain of an accepted step falls below
    /// this.
    pub tolerance: f64,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self { max_iterations: 5000, tolerance: 1e-10 }
    }
}

fn tr_prod(a: &CMat9, b: &CMat9) -> C64 {
    let mut s = C64::new(0.0, 0.0);
    for k in 0..9 {
        for l in 0..9 {
            s += a[(k, l)] * b[(l, k)];
        }
    }
    s
}

fn choi_probabilities(c: &CMat9, mats: &[Vec<CMat9>]) -> Vec<Vec<f64>> {
    mats.iter()
        .map(|row| row.iter().map(|m| tr_prod(c, m).re).collect())
        .collect()
}

/// Trace out the output factor of a Choi-ordered 9x9 matrix.
fn partial_trace_output(c: &CMat9) -> CMat3 {
    let mut out = CMat3::zeros();
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                out[(i, j)] += c[(3 * i + k, 3 * j + k)];
            }
        }
    }
    out
}

/// Rescale a PSD Choi candidate so the reconstruction is trace preserving:
/// sandwich with (Tr_out M)^{-1/2} on the input factor.
fn normalize_tp(m: &CMat9) -> CMat9 {
    let lambda = partial_trace_output(m);
    let (eigs, vecs) = eigh3(&lambda);
    let mut inv_sqrt = CMat3::zeros();
    for k in 0..3 {
        let e = eigs[k].max(1e-14);
        let col = vecs.column(k);
        inv_sqrt += col * col.adjoint() * cr(1.0 / e.sqrt());
    }
    let sandwich = kron33(&inv_sqrt, &eye3());
    sandwich * m * sandwich
}

/// Maximum-likelihood process tomography by iterated R C R updates with
/// trace-preservation renormalization. Steps that would lower the
/// log-likelihood are replaced by diluted steps (I + eps R)/(1 + eps) with
/// eps halved until the likelihood improves, so the recorded likelihood
/// trace is strictly nondecreasing; iteration stops when the gain drops
/// below the tolerance, no dilution helps, or the iteration cap is reached.
/// Works for rank-deficient probe sets too: unidentified directions stay
/// where the maximally mixing initialization put them, and the estimate
/// records the probe null-space dimension as its identifiability deficit.
pub fn mle_qpt(
    data: &ExperimentData,
    probes_exact: &[DensityMatrix],
    options: MleOptions,
) -> Result<ProcessEstimate> {
    if data.counts.is_empty() {
        return Err(Error::MalformedData("no counts to fit".into()));
    }
    if probes_exact.len() != data.counts.len() {
        return Err(Error::MalformedData(format!(
            "{} probes for {} count rows",
            probes_exact.len(),
            data.counts.len()
        )));
    }
    let ms = &data.measurements;
    let mats: Vec<Vec<CMat9>> = probes_exact
        .iter()
        .map(|rho| {
            let rho_t = rho.matrix().transpose();
            ms.effects().iter().map(|e| kron33(&rho_t, e)).collect()
        })
        .collect();
    let total: f64 = data.counts.iter().flatten().map(|&n| n as f64).sum();

    let mut c: CMat9 = CMat9::identity() / cr(3.0);
    let mut ll = counts_loglikelihood(&data.counts, &choi_probabilities(&c, &mats));
    let mut trace = vec![ll];
    let mut iterations = 0;

    for _ in 0..options.max_iterations {
        let probs = choi_probabilities(&c, &mats);
        let mut r = CMat9::zeros();
        for (i, row) in data.counts.iter().enumerate() {
            for (j, &n) in row.iter().enumerate() {
                if n > 0 {
                    r += mats[i][j] * cr(n as f64 / probs[i][j].max(1e-12));
                }
            }
        }
        r /= cr(total);

        let mut accepted = None;
        let full = normalize_tp(&(r * c * r));
        let ll_full = counts_loglikelihood(&data.counts, &choi_probabilities(&full, &mats));
        if ll_full > ll {
            accepted = Some((full, ll_full));
        } else {
            let mut eps = 1.0;
            while eps > 1e-6 {
                let diluted = (CMat9::identity() + r * cr(eps)) / cr(1.0 + eps);
                let cand = normalize_tp(&(diluted * c * diluted));
                let ll_cand =
                    counts_loglikelihood(&data.counts, &choi_probabilities(&cand, &mats));
                if ll_cand > ll {
                    accepted = Some((cand, ll_cand));
                    break;
                }
                eps /= 2.0;
            }
        }

        let Some((next, ll_next)) = accepted else {
            break;
        };
        let gain = ll_next - ll;
        c = next;
        ll = ll_next;
        trace.push(ll);
        iterations += 1;
        if gain < options.tolerance {
            break;
        }
    }

    Ok(ProcessEstimate {
        choi: ChoiMatrix::from_matrix(c),
        method: EstimateMethod::MaximumLikelihood,
        loglikelihood: ll,
        iterations,
        cp_violation: 0.0,
        identifiability_deficit: probe_null_dimension(probes_exact),
        likelihood_trace: trace,
    })
}

// ===================== API scoring =====================

/// How the average process infidelity is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ApiMode {
    /// Exact input states and exact channel outputs.
    Oracle,
    /// Full simulated pipeline: inputs and outputs are estimated by state
    /// tomography from `shots` measurement shots each.
    Empirical { shots: u64 },
}

/// Average process infidelity over Haar-random pure inputs.
#[derive(Debug, Clone)]
pub struct ApiReport {
    pub mean: f64,
    pub per_state: Vec<f64>,
    pub std_error: f64,
}

impl ApiReport {
    fn from_samples(per_state: Vec<f64>) -> Self {
        let n = per_state.len() as f64;
        let mean = per_state.iter().sum::<f64>() / n;
        let std_error = if per_state.len() > 1 {
            let var = per_state.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        } else {
            0.0
        };
        Self { mean, per_state, std_error }
    }
}

/// Average process infidelity between two channels: mean over n_states
/// Haar-random pure inputs of 1 - F(E[psi], F[psi]).
pub fn api_between(
    e: &Superoperator,
    f: &Superoperator,
    n_states: usize,
    seed: u64,
    mode: ApiMode,
) -> Result<ApiReport> {
    if n_states < 1 {
        return Err(Error::ParameterRange { name: "n_states", value: 0.0, range: ">= 1" });
    }
    let per_state: Vec<f64> = match mode {
        ApiMode::Oracle => (0..n_states)
            .into_par_iter()
            .map(|k| {
                let mut rng = ChaCha12Rng::seed_from_u64(derive_seed(seed, &[k as u64]));
                let psi = haar_state_with(&mut rng).density();
                let out_e = e.apply(&psi);
                let out_f = f.apply(&psi);
                (1.0 - fidelity(&out_e, &out_f)).clamp(0.0, 1.0)
            })
            .collect(),
        ApiMode::Empirical { shots } => {
            if shots < 1 {
                return Err(Error::ParameterRange { name: "shots", value: 0.0, range: ">= 1" });
            }
            let ms = default_measurement_set();
            (0..n_states)
                .into_par_iter()
                .map(|k| -> Result<f64> {
                    let mut rng =
                        ChaCha12Rng::seed_from_u64(derive_seed(seed, &[k as u64, 1]));
                    let psi = haar_state_with(&mut rng).density();

                    let probs_in = validated_probabilities(ms.probabilities(&psi))?;
                    let mut rng_in =
                        ChaCha12Rng::seed_from_u64(derive_seed(seed, &[k as u64, 2]));
                    let counts_in = sample_multinomial(&mut rng_in, shots, &probs_in);
                    let rho_in = state_tomography(&counts_in, &ms)?;

                    let out_true = e.apply(&psi);
                    let probs_out = validated_probabilities(ms.probabilities(&out_true))?;
                    let mut rng_out =
                        ChaCha12Rng::seed_from_u64(derive_seed(seed, &[k as u64, 3]));
                    let counts_out = sample_multinomial(&mut rng_out, shots, &probs_out);
                    let sigma_out = state_tomography(&counts_out, &ms)?;

                    let predicted = f.apply(&rho_in);
                    Ok((1.0 - fidelity(&sigma_out, &predicted)).clamp(0.0, 1.0))
                })
                .collect::<Result<_>>()?
        }
    };
    Ok(ApiReport::from_samples(per_state))
}

// ===================== sweeps =====================

/// One aggregated row of an API sweep.
#[derive(Debug, Clone, Copy)]
pub struct ApiSweepRow {
    pub x: f64,
    pub gamma: f64,
    pub api_mean: f64,
    pub api_se: f64,
    pub n_seeds: usize,
}

/// For every (x, gamma, seed): build a 10-rotation probe orbit of psi_x,
/// simulate tomography data through the jitter channel, reconstruct by
/// maximum likelihood, and score against the true channel in oracle mode.
/// Within one (gamma, seed) cell the rotation set and the evaluation states
/// are shared across all x, so the fiducial parameter is compared under
/// common random numbers; the rotations themselves are Haar draws, matching
/// randomly chosen probe rotations rather than a fixed orbit.
pub fn api_sweep(
    xs: &[f64],
    gammas: &[f64],
    shots: u64,
    n_states: usize,
    seeds: &[u64],
) -> Result<Vec<ApiSweepRow>> {
    if seeds.is_empty() {
        return Err(Error::MalformedData("api sweep needs at least one seed".into()));
    }
    let ms = default_measurement_set();
    let tasks: Vec<(usize, usize, usize)> = (0..xs.len())
        .flat_map(|xi| {
            (0..gammas.len()).flat_map(move |gi| (0..seeds.len()).map(move |si| (xi, gi, si)))
        })
        .collect();
    let scores: Vec<((usize, usize), f64)> = tasks
        .par_iter()
        .map(|&(xi, gi, si)| -> Result<((usize, usize), f64)> {
            let truth = crate::channels::jitter_exact(gammas[gi])?;
            let rot_seed = derive_seed(seeds[si], &[gi as u64, 0x5072]);
            let rotations =
                crate::ensembles::probe_rotations(10, crate::ensembles::RotationScheme::Haar, rot_seed)?;
            let probes = CovariantEnsemble::discrete(xs[xi], rotations)?;
            let data_seed = derive_seed(seeds[si], &[xi as u64, gi as u64, 0xda7a]);
            let data = simulate_process_data(&truth, &probes, &ms, shots, data_seed)?;
            let exact = data.probe_densities()?;
            let est = mle_qpt(&data, &exact, MleOptions::default())?;
            let eval_seed = derive_seed(seeds[si], &[gi as u64, 0xe7a1]);
            let report =
                api_between(&truth, &est.superoperator(), n_states, eval_seed, ApiMode::Oracle)?;
            Ok(((xi, gi), report.mean))
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::with_capacity(xs.len() * gammas.len());
    for xi in 0..xs.len() {
        for gi in 0..gammas.len() {
            let vals: Vec<f64> = scores
                .iter()
                .filter(|(key, _)| *key == (xi, gi))
                .map(|(_, v)| *v)
                .collect();
            let r = ApiReport::from_samples(vals);
            rows.push(ApiSweepRow {
                x: xs[xi],
                gamma: gammas[gi],
                api_mean: r.mean,
                api_se: r.std_error,
                n_seeds: seeds.len(),
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{is_cptp, jitter_exact, random_cptp};
    use crate::ensembles::{gram_continuous, probe_rotations, RotationScheme};
    use crate::linalg::{nuclear_norm, spearman};
    use crate::spinspace::{fiducial_state, TWO_DESIGN_X};
    use approx::assert_relative_eq;

    fn fib_probes(x: f64) -> (CovariantEnsemble, Vec<DensityMatrix>) {
        let ens = CovariantEnsemble::fibonacci(x, 10).unwrap();
        let dens = ens.states().unwrap().iter().map(|s| s.density()).collect();
        (ens, dens)
    }

    #[test]
    fn default_povm_is_a_complete_povm() {
        let ms = default_measurement_set();
        assert_eq!(ms.len(), 10);
        let sum: CMat3 = ms.effects().iter().sum();
        assert!((sum - eye3()).camax() < 1e-12);
        for e in ms.effects() {
            let (eigs, _) = eigh3(e);
            assert!(eigs.min() > -1e-12);
        }
        assert!(ms.is_informationally_complete());

        // close to the nominal (3/10) projectors
        let ens = CovariantEnsemble::fibonacci(TWO_DESIGN_X, 10).unwrap();
        for (e, s) in ms.effects().iter().zip(ens.states().unwrap()) {
            let nominal = s.density().matrix() * cr(0.3);
            assert!((e - nominal).camax() < 0.1);
            assert_relative_eq!(e.trace().re, 0.3, epsilon = 1e-12);
        }

        // trace balancing makes the maximally mixed response exactly flat
        let probs = ms.probabilities(&DensityMatrix::maximally_mixed());
        assert_relative_eq!(probs.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        for p in probs {
            assert_relative_eq!(p, 0.1, epsilon = 1e-12);
        }
    }

    #[test]
    fn measurement_set_validation() {
        // wrong normalization
        let bad = vec![eye3() * cr(0.5), eye3() * cr(0.4)];
        assert!(MeasurementSet::new(bad).is_err());
        // projective computational basis: valid but incomplete
        let mut effs = Vec::new();
        for k in 0..3 {
            let mut m = CMat3::zeros();
            m[(k, k)] = cr(1.0);
            effs.push(m);
        }
        let ms = MeasurementSet::new(effs).unwrap();
        assert!(!ms.is_informationally_complete());
    }

    #[test]
    fn simulated_data_is_deterministic_and_concentrates() {
        let ms = default_measurement_set();
        let (ens, _) = fib_probes(0.3);
        let e = jitter_exact(0.4).unwrap();
        let d1 = simulate_process_data(&e, &ens, &ms, 1_000_000, 9).unwrap();
        let d2 = simulate_process_data(&e, &ens, &ms, 1_000_000, 9).unwrap();
        assert_eq!(d1.counts, d2.counts);

        for (i, psi) in ens.states().unwrap().iter().enumerate() {
            let probs = ms.probabilities(&e.apply(&psi.density()));
            for (j, &p) in probs.iter().enumerate() {
                let f = d1.counts[i][j] as f64 / 1e6;
                let sigma = (p * (1.0 - p) / 1e6).sqrt().max(1e-6);
                assert!(
                    (f - p).abs() < 5.0 * sigma,
                    "probe {i} effect {j}: {f} vs {p}"
                );
            }
        }

        // row sums
        for row in &d1.counts {
            assert_eq!(row.iter().sum::<u64>(), 1_000_000);
        }
        assert!(simulate_process_data(&e, &ens, &ms, 0, 1).is_err());
    }

    #[test]
    fn experiment_data_validation() {
        let ms = default_measurement_set();
        let (ens, _) = fib_probes(0.3);
        let bad_counts = vec![vec![1u64; 10]; 10];
        assert!(ExperimentData::new(ens.clone(), ms.clone(), bad_counts, 11, 0).is_err());
        let short_rows = vec![vec![1u64; 9]; 10];
        assert!(ExperimentData::new(ens, ms, short_rows, 9, 0).is_err());
    }

    #[test]
    fn linear_inversion_recovers_channels_exactly() {
        let ms = default_measurement_set();
        for (name, truth, x) in [
            ("identity", Superoperator::identity(), 0.0),
            ("jitter", jitter_exact(0.5).unwrap(), TWO_DESIGN_X),
        ] {
            let (_, dens) = fib_probes(x);
            let probs = born_matrix(&truth, &dens, &ms);
            let est = linear_inversion_probabilities(&probs, &dens, &ms).unwrap();
            let dev = (est.superoperator().matrix() - truth.matrix()).camax();
            assert!(dev < 1e-8, "{name}: deviation {dev:.2e}");
            assert!(est.cp_violation < 1e-9);
        }

        // 20 random CPTP channels
        for seed in 0..20 {
            let truth = random_cptp(seed);
            let (_, dens) = fib_probes(0.25);
            let probs = born_matrix(&truth, &dens, &ms);
            let est = linear_inversion_probabilities(&probs, &dens, &ms).unwrap();
            let dev = (est.superoperator().matrix() - truth.matrix()).camax();
            assert!(dev < 1e-8, "seed {seed}: deviation {dev:.2e}");
        }
    }

    #[test]
    fn noon_probes_are_rejected_with_their_null_dimension() {
        let ms = default_measurement_set();
        let (ens, dens) = fib_probes(0.5);
        let truth = jitter_exact(0.3).unwrap();
        let data = simulate_process_data(&truth, &ens, &ms, 1000, 3).unwrap();
        match linear_inversion_qpt(&data, &dens) {
            Err(Error::IncompleteProbes { null_dim }) => assert_eq!(null_dim, 3),
            other => panic!("expected incomplete-probe error, got {other:?}"),
        }
    }

    #[test]
    fn noisy_linear_inversion_leaves_the_cp_cone() {
        let ms = default_measurement_set();
        let (ens, dens) = fib_probes(TWO_DESIGN_X);
        let truth = jitter_exact(0.8).unwrap();
        let data = simulate_process_data(&truth, &ens, &ms, 200, 17).unwrap();
        let est = linear_inversion_qpt(&data, &dens).unwrap();
        assert!(est.cp_violation > 1e-6, "cp violation {}", est.cp_violation);
        assert!(est.loglikelihood.is_finite());
    }

    #[test]
    fn state_tomography_recovers_states() {
        let ms = default_measurement_set();
        // exact probabilities of a pure state
        let psi = fiducial_state(0.3).unwrap().density();
        let probs = ms.probabilities(&psi);
        let est = state_tomography_frequencies(&probs, &ms).unwrap();
        assert!((est.matrix() - psi.matrix()).camax() < 1e-8);

        // sampled maximally mixed state
        let mixed = DensityMatrix::maximally_mixed();
        let mut rng = ChaCha12Rng::seed_from_u64(21);
        let counts = sample_multinomial(
            &mut rng,
            1_000_000,
            &validated_probabilities(ms.probabilities(&mixed)).unwrap(),
        );
        let est = state_tomography(&counts, &ms).unwrap();
        let dist = nuclear_norm(&(est.matrix() - mixed.matrix())) / 2.0;
        assert!(dist < 0.01, "trace distance {dist}");

        // frequencies that linearly invert to a negative matrix still yield
        // a valid state
        let mut freqs = vec![0.0; 10];
        freqs[0] = 1.0;
        let est = state_tomography_frequencies(&freqs, &ms).unwrap();
        let eigs = est.eigenvalues();
        assert!(eigs[2] > -1e-12);
        assert_relative_eq!(eigs.iter().sum::<f64>(), 1.0, epsilon = 1e-10);

        // incomplete measurement set
        let mut effs = Vec::new();
        for k in 0..3 {
            let mut m = CMat3::zeros();
            m[(k, k)] = cr(1.0);
            effs.push(m);
        }
        let proj = MeasurementSet::new(effs).unwrap();
        assert!(state_tomography(&[5, 3, 2], &proj).is_err());
    }

    #[test]
    fn mle_is_monotone_and_cptp() {
        let ms = default_measurement_set();
        let (ens, dens) = fib_probes(TWO_DESIGN_X);
        let truth = jitter_exact(0.6).unwrap();
        let data = simulate_process_data(&truth, &ens, &ms, 5000, 5).unwrap();
        let est = mle_qpt(&data, &dens, MleOptions::default()).unwrap();

        for pair in est.likelihood_trace.windows(2) {
            assert!(pair[1] >= pair[0], "likelihood decreased: {pair:?}");
        }
        assert!(est.iterations >= 1);
        let report = is_cptp(&est.superoperator(), 1e-6);
        assert!(report.cp && report.tp, "estimate not CPTP: {report:?}");
        assert_eq!(est.identifiability_deficit, 0);
        assert_eq!(est.method, EstimateMethod::MaximumLikelihood);
    }

    #[test]
    fn mle_converges_to_the_identity_channel() {
        let ms = default_measurement_set();
        let (ens, dens) = fib_probes(0.0);
        let truth = Superoperator::identity();
        let data = simulate_process_data(&truth, &ens, &ms, 100_000, 77).unwrap();
        let est = mle_qpt(&data, &dens, MleOptions::default()).unwrap();
        let api = api_between(&truth, &est.superoperator(), 40, 8, ApiMode::Oracle).unwrap();
        assert!(api.mean < 1e-3, "API {} against the identity", api.mean);
    }

    #[test]
    fn mle_handles_zero_counts_and_deficient_probes() {
        let ms = default_measurement_set();
        // 10 shots cannot populate all 10 effects: zero counts guaranteed
        let (ens, dens) = fib_probes(0.0);
        let data =
            simulate_process_data(&Superoperator::identity(), &ens, &ms, 10, 2).unwrap();
        assert!(data.counts.iter().flatten().any(|&n| n == 0));
        let est = mle_qpt(&data, &dens, MleOptions::default()).unwrap();
        assert!(est.loglikelihood.is_finite());

        // N00N-orbit probes: still returns a CPTP estimate, with the deficit
        let (ens, dens) = fib_probes(0.5);
        let truth = jitter_exact(0.3).unwrap();
        let data = simulate_process_data(&truth, &ens, &ms, 2000, 4).unwrap();
        let est = mle_qpt(&data, &dens, MleOptions::default()).unwrap();
        assert_eq!(est.identifiability_deficit, 3);
        let report = is_cptp(&est.superoperator(), 1e-6);
        assert!(report.cp && report.tp);
    }

    #[test]
    fn two_design_probes_beat_coherent_probes_at_strong_jitter() {
        // same random 10-rotation orbit and evaluation states for both
        // fiducial parameters within a seed; the 2-design parameter should
        // win the majority of seeds
        let ms = default_measurement_set();
        let truth = jitter_exact(1.5).unwrap();
        let results: Vec<bool> = (0..10u64)
            .into_par_iter()
            .map(|seed| {
                let rots = probe_rotations(10, RotationScheme::Haar, derive_seed(seed, &[1]))
                    .unwrap();
                let mut apis = [0.0; 2];
                for (slot, x) in [(0usize, TWO_DESIGN_X), (1, 0.0)] {
                    let ens = CovariantEnsemble::discrete(x, rots.clone()).unwrap();
                    let dens: Vec<DensityMatrix> =
                        ens.states().unwrap().iter().map(|s| s.density()).collect();
                    let data = simulate_process_data(
                        &truth,
                        &ens,
                        &ms,
                        10_000,
                        derive_seed(seed, &[2, slot as u64]),
                    )
                    .unwrap();
                    let est = mle_qpt(&data, &dens, MleOptions::default()).unwrap();
                    apis[slot] = api_between(
                        &truth,
                        &est.superoperator(),
                        40,
                        derive_seed(seed, &[3]),
                        ApiMode::Oracle,
                    )
                    .unwrap()
                    .mean;
                }
                apis[0] < apis[1]
            })
            .collect();
        let wins = results.iter().filter(|w| **w).count();
        assert!(wins > 5, "2-design probes won only {wins}/10 runs");
    }

    #[test]
    fn api_oracle_anchors() {
        let id = Superoperator::identity();
        // identical channels
        let r = api_between(&id, &id, 20, 3, ApiMode::Oracle).unwrap();
        assert!(r.mean < 1e-12);
        assert_eq!(r.per_state.len(), 20);
        assert_relative_eq!(
            r.mean,
            r.per_state.iter().sum::<f64>() / 20.0,
            epsilon = 1e-15
        );

        // complete depolarization: every pure state lands at infidelity 2/3
        let depol = {
            let mut s = CMat9::zeros();
            let target = vec3(&(eye3() / cr(3.0)));
            let ident = vec3(&eye3());
            s += target * ident.adjoint();
            Superoperator::from_matrix(s)
        };
        let r = api_between(&id, &depol, 40, 3, ApiMode::Oracle).unwrap();
        assert!(
            (r.mean - 2.0 / 3.0).abs() <= (2.0 * r.std_error).max(1e-9),
            "depolarization API {} +- {}",
            r.mean,
            r.std_error
        );

        for v in &r.per_state {
            assert!((0.0..=1.0).contains(v));
        }
    }

    #[test]
    fn api_matches_a_brute_force_haar_average() {
        let id = Superoperator::identity();
        let jit = jitter_exact(0.5).unwrap();
        let r = api_between(&id, &jit, 40, 11, ApiMode::Oracle).unwrap();

        // with a pure first argument the fidelity is the overlap, so the
        // brute-force average needs no eigendecompositions
        let mut acc = 0.0;
        let n = 100_000;
        for k in 0..n {
            let psi = crate::spinspace::haar_random_state(k as u64).density();
            let out = jit.apply(&psi);
            acc += 1.0 - out.expectation(psi.matrix());
        }
        let brute = acc / n as f64;
        assert!(
            (r.mean - brute).abs() <= 3.0 * r.std_error,
            "API {} +- {} vs brute force {brute}",
            r.mean,
            r.std_error
        );
    }

    #[test]
    fn api_is_invariant_under_joint_unitary_conjugation() {
        let e = jitter_exact(0.7).unwrap();
        let f = random_cptp(5);
        let base = api_between(&e, &f, 40, 13, ApiMode::Oracle).unwrap();
        for seed in 0..10 {
            let u = Superoperator::from_unitary(&crate::spinspace::Su2Element::haar_random(seed));
            let ui = Superoperator::from_unitary(
                &crate::spinspace::Su2Element::haar_random(seed).inverse(),
            );
            let e2 = u.compose(&e).compose(&ui);
            let f2 = u.compose(&f).compose(&ui);
            let rot = api_between(&e2, &f2, 40, 13, ApiMode::Oracle).unwrap();
            let tol = 2.0 * (base.std_error + rot.std_error);
            assert!(
                (base.mean - rot.mean).abs() <= tol,
                "seed {seed}: {} vs {}",
                base.mean,
                rot.mean
            );
        }
    }

    #[test]
    fn empirical_api_converges_to_the_oracle() {
        let e = jitter_exact(0.5).unwrap();
        let f = jitter_exact(0.8).unwrap();
        let oracle = api_between(&e, &f, 40, 19, ApiMode::Oracle).unwrap().mean;
        let mut gaps = Vec::new();
        for shots in [1_000, 10_000, 100_000] {
            let emp = api_between(&e, &f, 40, 19, ApiMode::Empirical { shots }).unwrap();
            gaps.push((emp.mean - oracle).abs());
        }
        assert!(
            gaps[0] > gaps[1] && gaps[1] > gaps[2],
            "gaps not shrinking: {gaps:?}"
        );
    }

    #[test]
    fn api_sweep_reproduces_the_reconstruction_ordering() {
        let xs = [0.0, TWO_DESIGN_X, 0.5];
        let seeds: Vec<u64> = (0..10).collect();
        let rows = api_sweep(&xs, &[1.5], 2000, 24, &seeds).unwrap();
        assert_eq!(rows.len(), 3);
        let api = |x: f64| rows.iter().find(|r| r.x == x).unwrap().api_mean;
        assert!(
            api(TWO_DESIGN_X) < api(0.0) && api(0.0) < api(0.5),
            "mean ordering violated: {rows:?}"
        );
        for r in &rows {
            assert_eq!(r.n_seeds, 10);
            assert!(r.api_se > 0.0);
        }
    }

    #[test]
    fn api_tracks_the_probe_gram_conditioning() {
        let xs = [0.0, 0.1464, 0.3, 0.4, 0.5];
        let rows = api_sweep(&xs, &[0.5], 2000, 24, &[5, 6, 7]).unwrap();
        let apis: Vec<f64> = rows.iter().map(|r| r.api_mean).collect();
        let inv_min_eig: Vec<f64> = xs
            .iter()
            .map(|&x| {
                let m = gram_continuous(x, 8).unwrap().min_eigenvalue();
                if m > 1e-12 { 1.0 / m } else { f64::INFINITY }
            })
            .collect();
        let rho = spearman(&apis, &inv_min_eig);
        assert!(rho > 0.8, "Spearman {rho} (apis {apis:?})");
    }

    #[test]
    fn exact_probabilities_make_linear_inversion_consistent() {
        // shots -> infinity proxy: inversion at exact probabilities
        let ms = default_measurement_set();
        for &x in &[0.0, 0.25, TWO_DESIGN_X] {
            let truth = jitter_exact(0.5).unwrap();
            let (_, dens) = fib_probes(x);
            let probs = born_matrix(&truth, &dens, &ms);
            let est = linear_inversion_probabilities(&probs, &dens, &ms).unwrap();
            let api =
                api_between(&truth, &est.superoperator(), 20, 23, ApiMode::Oracle).unwrap();
            assert!(api.mean < 1e-10, "x={x}: API {}", api.mean);
        }
    }

    #[test]
    fn choi_probability_route_matches_the_superoperator_route() {
        let truth = jitter_exact(0.9).unwrap();
        let ms = default_measurement_set();
        let (_, dens) = fib_probes(0.2);
        let mats: Vec<Vec<CMat9>> = dens
            .iter()
            .map(|rho| {
                let rho_t = rho.matrix().transpose();
                ms.effects().iter().map(|e| kron33(&rho_t, e)).collect()
            })
            .collect();
        let via_choi = choi_probabilities(truth.to_choi().matrix(), &mats);
        let direct = born_matrix(&truth, &dens, &ms);
        for (a, b) in via_choi.iter().flatten().zip(direct.iter().flatten()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn haar_probe_states_also_support_inversion() {
        // probes need not be a covariant orbit for the linear algebra
        let ms = default_measurement_set();
        let rots = probe_rotations(12, RotationScheme::Haar, 31).unwrap();
        let psi = fiducial_state(0.3).unwrap();
        let dens: Vec<DensityMatrix> =
            rots.iter().map(|u| u.apply(&psi).density()).collect();
        let truth = random_cptp(9);
        let probs = born_matrix(&truth, &dens, &ms);
        let est = linear_inversion_probabilities(&probs, &dens, &ms).unwrap();
        assert!((est.superoperator().matrix() - truth.matrix()).camax() < 1e-8);
    }

}
