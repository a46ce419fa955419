//! Decoherence detection with fiducial probes behind a polarizing beam
//! splitter, and the sensitivity analysis built on it.
//!
//! The protocol prepares |psi_x>, lets the jitter channel act, and projects
//! back onto |psi_x>. The nondetection ("anti-coincidence") probability has
//! the closed form
//!
//!   P(x, gamma) = A_x e^{-2 gamma^2} + B_x e^{-gamma^2/2} + C_x,
//!
//! whose coefficients are quadratics in x. The module also implements the
//! indirect measurement of the projection through PBS statistics (populations
//! a, b, c and the real coherence d read off via a half-wave plate at 22.5
//! degrees), jitter-strength estimation by curve inversion, and the shot-noise
//! sensitivity Delta-gamma.

use crate::channels::jitter_exact;
use crate::linalg::lstsq;
use crate::spinspace::{fiducial_state, waveplate_su2, DensityMatrix, WaveplateSpec};
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

// ===================== closed-form response =====================

/// Coefficients of the nondetection response for a pure fiducial probe.
/// They are nonnegative on x in [0, 1] and sum to exactly 1 (P(0) = 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientTriple {
    pub a_x: f64,
    pub b_x: f64,
    pub c_x: f64,
}

impl CoefficientTriple {
    /// Evaluate P(gamma) = A e^{-2g^2} + B e^{-g^2/2} + C.
    pub fn eval(&self, gamma: f64) -> f64 {
        let g2 = gamma * gamma;
        self.a_x * (-2.0 * g2).exp() + self.b_x * (-g2 / 2.0).exp() + self.c_x
    }

    /// Analytic derivative dP/dgamma = -gamma (4A e^{-2g^2} + B e^{-g^2/2}).
    pub fn derivative(&self, gamma: f64) -> f64 {
        let g2 = gamma * gamma;
        -gamma * (4.0 * self.a_x * (-2.0 * g2).exp() + self.b_x * (-g2 / 2.0).exp())
    }

    /// 1 - P(gamma), evaluated as A (1 - e^{-2g^2}) + B (1 - e^{-g^2/2}) so the
    /// complement stays accurate where P rounds to 1.
    pub fn complement(&self, gamma: f64) -> f64 {
        let g2 = gamma * gamma;
        -self.a_x * (-2.0 * g2).exp_m1() - self.b_x * (-g2 / 2.0).exp_m1()
    }

    /// Small-gamma curvature factor k_x = 2A + B/2, so that
    /// P ~ 1 - k_x gamma^2 near zero.
    pub fn k_factor(&self) -> f64 {
        2.0 * self.a_x + self.b_x / 2.0
    }
}

/// Response coefficients for the fiducial probe |psi_x>:
/// A = 4/5 (-x^2 + x + 1/12), B = 8/15 (x^2 - x + 3/4), C = 4/15 (x^2 - x + 2).
pub fn coefficients(x: f64) -> Result<CoefficientTriple> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::ParameterRange { name: "x", value: x, range: "[0, 1]" });
    }
    let q = x * x - x;
    Ok(CoefficientTriple {
        a_x: 4.0 / 5.0 * (-q + 1.0 / 12.0),
        b_x: 8.0 / 15.0 * (q + 0.75),
        c_x: 4.0 / 15.0 * (q + 2.0),
    })
}

/// Closed-form nondetection probability for a pure fiducial probe.
pub fn nondetection_probability(x: f64, gamma: f64) -> Result<f64> {
    if gamma < 0.0 {
        return Err(Error::ParameterRange { name: "gamma", value: gamma, range: "[0, inf)" });
    }
    Ok(coefficients(x)?.eval(gamma))
}

/// Channel-based nondetection probability Tr(|psi_x><psi_x| D_gamma(rho_in)).
/// Agrees with [`nondetection_probability`] when `rho_in` is the pure
/// fiducial state; supports impure inputs, for which P(0) < 1.
pub fn nondetection_probability_channel(
    rho_in: &DensityMatrix,
    x: f64,
    gamma: f64,
) -> Result<f64> {
    let psi = fiducial_state(x)?;
    let out = jitter_exact(gamma)?.apply(rho_in);
    Ok(out.expectation(psi.density().matrix()))
}

// ===================== simulated experiments =====================

/// Counts from a repeated prepare-jitter-project experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionOutcome {
    pub trials: u64,
    pub nondetections: u64,
    pub p_hat: f64,
}

/// Draw the nondetection count for N trials at (x, gamma) from the binomial
/// law around the closed-form probability. Deterministic per seed.
pub fn simulate_detection(x: f64, gamma: f64, trials: u64, seed: u64) -> Result<DetectionOutcome> {
    if trials < 1 {
        return Err(Error::ParameterRange { name: "trials", value: 0.0, range: ">= 1" });
    }
    let p = nondetection_probability(x, gamma)?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let n = rng.sample(rand_distr::Binomial::new(trials, p).expect("p in [0,1]"));
    Ok(DetectionOutcome { trials, nondetections: n, p_hat: n as f64 / trials as f64 })
}

// ===================== PBS statistics =====================

/// Populations and real coherence readable behind a polarizing beam splitter:
/// a, b, c are the diagonal populations (both transmitted / one each /
/// both reflected), d = Re rho_02, and P_HV is the probability of one photon
/// per port after the half-wave plate at 22.5 degrees.
#[derive(Debug, Clone, Copy)]
pub struct PbsStatistics {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub p_hv: f64,
}

impl PbsStatistics {
    /// Validate closure (a + b + c = 1 within 1e-6) and the coherence bound
    /// |d| <= sqrt(a c) + 1e-10.
    pub fn new(a: f64, b: f64, c: f64, d: f64, p_hv: f64) -> Result<Self> {
        let sum = a + b + c;
        if (sum - 1.0).abs() > 1e-6 {
            return Err(Error::MatrixValidation(format!(
                "PBS populations sum to {sum}, not 1"
            )));
        }
        if d.abs() > (a * c).max(0.0).sqrt() + 1e-10 {
            return Err(Error::MatrixValidation(format!(
                "coherence d = {d} exceeds sqrt(a c) bound"
            )));
        }
        Ok(Self { a, b, c, d, p_hv })
    }
}

/// Read the PBS statistics of a state. The populations come from the
/// diagonal; P_HV is obtained by rotating with the half-wave plate at 22.5
/// degrees and reading the |1,1> population, which under the fixed phase
/// convention satisfies P_HV = 1/2 - d - b/2 identically.
pub fn pbs_statistics(rho: &DensityMatrix) -> PbsStatistics {
    let hwp = waveplate_su2(&WaveplateSpec::half_wave(std::f64::consts::FRAC_PI_8));
    let rotated = crate::spinspace::rotate(rho, &hwp);
    PbsStatistics {
        a: rho.a(),
        b: rho.b(),
        c: rho.c(),
        d: rho.d().re,
        p_hv: rotated.b(),
    }
}

/// Outcome of [`projection_from_stats`]: the projection estimate and whether
/// floating-point noise pushed it outside [0, 1] before clamping.
#[derive(Debug, Clone, Copy)]
pub struct ProjectionEstimate {
    pub value: f64,
    pub clamped: bool,
}

/// Reconstruct the projection <psi_x| rho |psi_x> from PBS statistics:
/// a x + c (1-x) + 2 d sqrt(x(1-x)), with d recovered from the waveplate
/// reading as d = 1/2 - P_HV - b/2.
pub fn projection_from_stats(s: &PbsStatistics, x: f64) -> Result<ProjectionEstimate> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::ParameterRange { name: "x", value: x, range: "[0, 1]" });
    }
    let closure = (s.a + s.b + s.c - 1.0).abs();
    if closure > 1e-6 {
        return Err(Error::MatrixValidation(format!(
            "PBS populations sum off by {closure:.2e}"
        )));
    }
    let d = 0.5 - s.p_hv - s.b / 2.0;
    let raw = s.a * x + s.c * (1.0 - x) + 2.0 * d * (x * (1.0 - x)).sqrt();
    if !(-1e-6..=1.0 + 1e-6).contains(&raw) {
        return Err(Error::MatrixValidation(format!(
            "projection estimate {raw} outside [0, 1] beyond tolerance"
        )));
    }
    let value = raw.clamp(0.0, 1.0);
    Ok(ProjectionEstimate { value, clamped: value != raw })
}

// ===================== sensitivity =====================

/// Shot-noise-limited jitter sensitivity
/// Delta-gamma = sqrt(P (1-P) / N) / |dP/dgamma|.
///
/// At gamma = 0 the raw expression is 0/0; the analytic limit
/// 1 / (2 sqrt(k_x N)) with k_x = 2A + B/2 is returned instead.
pub fn sensitivity(x: f64, gamma: f64, trials: u64) -> Result<f64> {
    if trials < 1 {
        return Err(Error::ParameterRange { name: "trials", value: 0.0, range: ">= 1" });
    }
    if gamma < 0.0 {
        return Err(Error::ParameterRange { name: "gamma", value: gamma, range: "[0, inf)" });
    }
    let co = coefficients(x)?;
    let n = trials as f64;
    if gamma == 0.0 {
        return Ok(1.0 / (2.0 * (co.k_factor() * n).sqrt()));
    }
    let p = co.eval(gamma);
    let q = co.complement(gamma);
    let dp = co.derivative(gamma).abs();
    if dp == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok((p * q / n).sqrt() / dp)
}

/// Locate the gamma where the sensitivity curves of two probes cross, by
/// bisection on their difference to 1e-6. The crossing point does not depend
/// on N (both curves scale as 1/sqrt(N)).
pub fn sensitivity_crossing(x1: f64, x2: f64, bracket: (f64, f64)) -> Result<f64> {
    let f = |g: f64| -> Result<f64> { Ok(sensitivity(x1, g, 1)? - sensitivity(x2, g, 1)?) };
    let (mut lo, mut hi) = bracket;
    if !(lo < hi) || lo < 0.0 {
        return Err(Error::ParameterRange { name: "bracket", value: lo, range: "0 <= lo < hi" });
    }
    let (mut flo, fhi) = (f(lo)?, f(hi)?);
    if flo == 0.0 && fhi == 0.0 {
        return Err(Error::Solver(format!(
            "sensitivity curves of x={x1} and x={x2} coincide on the bracket"
        )));
    }
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo * fhi > 0.0 {
        return Err(Error::Solver(format!(
            "sensitivity curves of x={x1} and x={x2} do not cross in [{lo}, {hi}]"
        )));
    }
    while hi - lo > 1e-6 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid)?;
        if fm == 0.0 {
            return Ok(mid);
        }
        if flo * fm < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            flo = fm;
        }
    }
    Ok(0.5 * (lo + hi))
}

// ===================== gamma estimation =====================

/// Result of inverting the response curve at an observed frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GammaEstimate {
    /// Unique root of P(gamma) = p_hat.
    Value(f64),
    /// p_hat at or below the large-gamma asymptote C_x: the curve carries no
    /// information there, which finite samples can legitimately reach.
    Saturated,
}

impl GammaEstimate {
    pub fn value(&self) -> Option<f64> {
        match self {
            GammaEstimate::Value(g) => Some(*g),
            GammaEstimate::Saturated => None,
        }
    }

    /// The estimate as a float, with saturation mapped to +infinity.
    pub fn or_infinity(&self) -> f64 {
        self.value().unwrap_or(f64::INFINITY)
    }
}

/// Invert the closed-form response: find gamma with P(x, gamma) = p_hat.
/// P is strictly decreasing in gamma, so bisection (to 1e-9) applies;
/// p_hat >= 1 maps to 0 and p_hat <= C_x saturates.
pub fn estimate_gamma(p_hat: f64, x: f64) -> Result<GammaEstimate> {
    if !(0.0..=1.0).contains(&p_hat) {
        return Err(Error::ParameterRange { name: "p_hat", value: p_hat, range: "[0, 1]" });
    }
    let co = coefficients(x)?;
    if p_hat >= 1.0 {
        return Ok(GammaEstimate::Value(0.0));
    }
    if p_hat <= co.c_x {
        return Ok(GammaEstimate::Saturated);
    }
    // expand the upper end until the curve falls below p_hat
    let mut hi = 1.0;
    let mut guard = 0;
    while co.eval(hi) > p_hat {
        hi *= 2.0;
        guard += 1;
        if guard > 60 {
            return Err(Error::Solver("response curve failed to bracket p_hat".into()));
        }
    }
    let mut lo = 0.0;
    while hi - lo > 1e-9 {
        let mid = 0.5 * (lo + hi);
        if co.eval(mid) > p_hat {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(GammaEstimate::Value(0.5 * (lo + hi)))
}

// ===================== curve fitting =====================

/// Coefficients fitted from sampled (gamma, p_hat) points. Unlike
/// [`CoefficientTriple`] the sum may fall below 1, which captures impure
/// inputs with P(0) < 1.
#[derive(Debug, Clone, Copy)]
pub struct FittedCoefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl FittedCoefficients {
    pub fn eval(&self, gamma: f64) -> f64 {
        let g2 = gamma * gamma;
        self.a * (-2.0 * g2).exp() + self.b * (-g2 / 2.0).exp() + self.c
    }
}

/// Least-squares fit of the response family A e^{-2g^2} + B e^{-g^2/2} + C
/// to observed points, constrained to A + B + C <= 1. The model is linear in
/// (A, B, C); if the unconstrained optimum violates the constraint, the
/// equality-constrained solution (sum = 1) is returned.
pub fn fit_nondetection_curve(points: &[(f64, f64)]) -> Result<FittedCoefficients> {
    if points.len() < 3 {
        return Err(Error::MalformedData(format!(
            "need at least 3 points to fit 3 coefficients, got {}",
            points.len()
        )));
    }
    let rows = points.len();
    let mut design = DMatrix::zeros(rows, 3);
    let mut y = DVector::zeros(rows);
    for (r, &(g, p)) in points.iter().enumerate() {
        let g2 = g * g;
        design[(r, 0)] = (-2.0 * g2).exp();
        design[(r, 1)] = (-g2 / 2.0).exp();
        design[(r, 2)] = 1.0;
        y[r] = p;
    }
    let beta = lstsq(&design, &y);
    if beta.sum() <= 1.0 + 1e-12 {
        return Ok(FittedCoefficients { a: beta[0], b: beta[1], c: beta[2] });
    }
    // KKT system for min |D b - y|^2 subject to 1^T b = 1
    let dtd = design.transpose() * &design;
    let dty = design.transpose() * y;
    let mut kkt = DMatrix::zeros(4, 4);
    kkt.view_mut((0, 0), (3, 3)).copy_from(&(&dtd * 2.0));
    for i in 0..3 {
        kkt[(i, 3)] = 1.0;
        kkt[(3, i)] = 1.0;
    }
    let mut rhs = DVector::zeros(4);
    rhs.rows_mut(0, 3).copy_from(&(dty * 2.0));
    rhs[3] = 1.0;
    let sol = kkt
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Solver("singular constrained fit system".into()))?;
    Ok(FittedCoefficients { a: sol[0], b: sol[1], c: sol[2] })
}

// ===================== sweeps =====================

/// One row of a detection sweep: the response, its slope, and the
/// N-independent sensitivity Delta-gamma * sqrt(N).
#[derive(Debug, Clone, Copy)]
pub struct SweepRow {
    pub x: f64,
    pub gamma: f64,
    pub p: f64,
    pub dp_dgamma: f64,
    pub sensitivity_scaled: f64,
}

/// Evaluate the response and sensitivity over a parameter grid.
pub fn detection_sweep(xs: &[f64], gammas: &[f64]) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::with_capacity(xs.len() * gammas.len());
    for &x in xs {
        let co = coefficients(x)?;
        for &g in gammas {
            if g < 0.0 {
                return Err(Error::ParameterRange { name: "gamma", value: g, range: "[0, inf)" });
            }
            rows.push(SweepRow {
                x,
                gamma: g,
                p: co.eval(g),
                dp_dgamma: co.derivative(g),
                sensitivity_scaled: sensitivity(x, g, 1)?,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spinspace::{depolarize_fiducial, haar_random_state, PureState};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn coefficient_values_at_anchors() {
        let c0 = coefficients(0.0).unwrap();
        assert_relative_eq!(c0.a_x, 1.0 / 15.0, epsilon = 1e-14);
        assert_relative_eq!(c0.b_x, 2.0 / 5.0, epsilon = 1e-14);
        assert_relative_eq!(c0.c_x, 8.0 / 15.0, epsilon = 1e-14);
        let ch = coefficients(0.5).unwrap();
        assert_relative_eq!(ch.a_x, 4.0 / 15.0, epsilon = 1e-14);
        assert_relative_eq!(ch.b_x, 4.0 / 15.0, epsilon = 1e-14);
        assert_relative_eq!(ch.c_x, 7.0 / 15.0, epsilon = 1e-14);
        assert!(coefficients(-0.1).is_err());
        assert!(coefficients(1.1).is_err());
    }

    #[test]
    fn response_values_and_limits() {
        for &x in &[0.0, 0.2, 0.5, 0.9] {
            assert_relative_eq!(nondetection_probability(x, 0.0).unwrap(), 1.0, epsilon = 1e-13);
        }
        assert_relative_eq!(
            nondetection_probability(0.5, 0.5).unwrap(),
            0.8637406833,
            epsilon = 1e-10
        );
        assert_relative_eq!(
            nondetection_probability(0.0, 10.0).unwrap(),
            8.0 / 15.0,
            epsilon = 1e-12
        );
        assert!(nondetection_probability(0.5, -1.0).is_err());
    }

    #[test]
    fn closed_form_matches_channel_on_grid() {
        for i in 0..20 {
            let x = i as f64 / 19.0;
            let rho = fiducial_state(x).unwrap().density();
            for j in 0..20 {
                let g = j as f64 * 3.0 / 19.0;
                let closed = nondetection_probability(x, g).unwrap();
                let channel = nondetection_probability_channel(&rho, x, g).unwrap();
                assert!(
                    (closed - channel).abs() < 1e-9,
                    "x={x}, gamma={g}: {closed} vs {channel}"
                );
            }
        }
    }

    #[test]
    fn impure_input_lowers_the_intercept() {
        let rho = depolarize_fiducial(0.3, 0.1).unwrap();
        let p0 = nondetection_probability_channel(&rho, 0.3, 0.0).unwrap();
        assert_relative_eq!(p0, 1.0 - 0.1 * (2.0 / 3.0), epsilon = 1e-12);
    }

    #[test]
    fn simulated_detection_statistics() {
        // gamma = 0 with a pure probe never flags a change
        let out = simulate_detection(0.3, 0.0, 10_000, 5).unwrap();
        assert_eq!(out.nondetections, out.trials);
        assert_relative_eq!(out.p_hat, 1.0, epsilon = 0.0);

        // determinism
        let o1 = simulate_detection(0.5, 0.5, 100_000, 42).unwrap();
        let o2 = simulate_detection(0.5, 0.5, 100_000, 42).unwrap();
        assert_eq!(o1, o2);

        // concentration around the closed form
        let p = nondetection_probability(0.5, 0.5).unwrap();
        let sigma = (p * (1.0 - p) / 1e5).sqrt();
        assert!(
            (o1.p_hat - p).abs() < 5.0 * sigma,
            "p_hat {} vs {} (sigma {sigma:.1e})",
            o1.p_hat,
            p
        );
        assert!(simulate_detection(0.5, 0.5, 0, 1).is_err());
    }

    #[test]
    fn pbs_statistics_anchor_states() {
        let north = PureState::new(
            crate::linalg::cr(1.0),
            crate::linalg::cr(0.0),
            crate::linalg::cr(0.0),
        )
        .unwrap()
        .density();
        let s = pbs_statistics(&north);
        assert_relative_eq!(s.a, 1.0, epsilon = 1e-13);
        assert_relative_eq!(s.b, 0.0, epsilon = 1e-13);
        assert_relative_eq!(s.d, 0.0, epsilon = 1e-13);
        assert_relative_eq!(s.p_hv, 0.5, epsilon = 1e-12);

        let mixed = pbs_statistics(&DensityMatrix::maximally_mixed());
        assert_relative_eq!(mixed.a, 1.0 / 3.0, epsilon = 1e-13);
        assert_relative_eq!(mixed.d, 0.0, epsilon = 1e-13);
        assert_relative_eq!(mixed.p_hv, 1.0 / 3.0, epsilon = 1e-12);

        let noon = fiducial_state(0.5).unwrap().density();
        let sn = pbs_statistics(&noon);
        assert_relative_eq!(sn.d, 0.5, epsilon = 1e-13);
        assert_relative_eq!(sn.b, 0.0, epsilon = 1e-13);
        assert_relative_eq!(sn.p_hv, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn waveplate_reading_obeys_the_coherence_identity() {
        // P_HV = 1/2 - d - b/2 for every state under the fixed convention
        for seed in 0..100u64 {
            let psi = haar_random_state(seed);
            let rho = crate::spinspace::ImpurityModel::new((seed % 7) as f64 / 10.0)
                .unwrap()
                .apply(&psi);
            let s = pbs_statistics(&rho);
            assert!(
                (s.p_hv - (0.5 - s.d - s.b / 2.0)).abs() < 1e-10,
                "identity violated at seed {seed}"
            );
        }
    }

    #[test]
    fn pbs_statistics_validation() {
        assert!(PbsStatistics::new(0.5, 0.3, 0.2, 0.1, 0.2).is_ok());
        assert!(PbsStatistics::new(0.6, 0.3, 0.2, 0.1, 0.2).is_err());
        // d beyond the sqrt(ac) bound
        assert!(PbsStatistics::new(0.5, 0.3, 0.2, 0.5, 0.2).is_err());
    }

    #[test]
    fn projection_reconstruction_matches_direct_trace() {
        // projector onto itself
        for &x in &[0.0, 0.1464, 0.5, 0.8] {
            let rho = fiducial_state(x).unwrap().density();
            let est = projection_from_stats(&pbs_statistics(&rho), x).unwrap();
            assert_relative_eq!(est.value, 1.0, epsilon = 1e-12);
        }
        // maximally mixed
        let est = projection_from_stats(&pbs_statistics(&DensityMatrix::maximally_mixed()), 0.5)
            .unwrap();
        assert_relative_eq!(est.value, 1.0 / 3.0, epsilon = 1e-12);
        // random states against the direct trace
        for seed in 0..100u64 {
            let x = 0.5 * (seed as f64 / 99.0);
            let rho = crate::spinspace::ImpurityModel::new(0.2)
                .unwrap()
                .apply(&haar_random_state(seed + 1000));
            let direct = rho.expectation(fiducial_state(x).unwrap().density().matrix());
            let est = projection_from_stats(&pbs_statistics(&rho), x).unwrap();
            assert!(
                (est.value - direct).abs() < 1e-10,
                "seed {seed}: {} vs {direct}",
                est.value
            );
        }
        // inconsistent populations are rejected
        let bad = PbsStatistics { a: 0.6, b: 0.3, c: 0.2, d: 0.0, p_hv: 0.3 };
        assert!(projection_from_stats(&bad, 0.5).is_err());
    }

    #[test]
    fn sensitivity_limits_and_ratio() {
        // gamma -> 0 limits, scaled by sqrt(N)
        let coherent = sensitivity(0.0, 0.0, 1).unwrap();
        assert_relative_eq!(coherent, 3.0_f64.sqrt() / 2.0, epsilon = 1e-12);
        let noon = sensitivity(0.5, 0.0, 1).unwrap();
        assert_relative_eq!(noon, 6.0_f64.sqrt() / 4.0, epsilon = 1e-12);
        assert_relative_eq!(coherent / noon, 2.0_f64.sqrt(), epsilon = 1e-12);

        // the limit agrees with the curve just off zero
        for &x in &[0.0, 0.25, 0.5] {
            let at_zero = sensitivity(x, 0.0, 1_000).unwrap();
            let near_zero = sensitivity(x, 1e-4, 1_000).unwrap();
            assert_relative_eq!(at_zero, near_zero, max_relative = 1e-6);
        }

        // scaling in N
        let s1 = sensitivity(0.3, 0.4, 100).unwrap();
        let s2 = sensitivity(0.3, 0.4, 10_000).unwrap();
        assert_relative_eq!(s1 / s2, 10.0, epsilon = 1e-10);
        assert!(sensitivity(0.3, 0.4, 0).is_err());
    }

    #[test]
    fn derivative_matches_finite_differences() {
        for &x in &[0.0, 0.1464, 0.3, 0.5, 0.8, 1.0] {
            let co = coefficients(x).unwrap();
            for &g in &[0.05, 0.2, 0.5, 1.0, 1.7, 2.5] {
                let h = 1e-5;
                let numeric = (co.eval(g + h) - co.eval(g - h)) / (2.0 * h);
                assert!(
                    (co.derivative(g) - numeric).abs() < 1e-6,
                    "x={x}, gamma={g}"
                );
            }
        }
    }

    #[test]
    fn noon_probe_is_optimal_at_small_gamma() {
        let xs = [0.0, 0.1, 0.2, 0.3, 0.4, 0.45];
        for i in 0..=18 {
            let g = i as f64 * 0.05;
            let noon = sensitivity(0.5, g, 1).unwrap();
            for &x in &xs {
                let other = sensitivity(x, g, 1).unwrap();
                assert!(
                    noon < other,
                    "gamma={g}: N00N {noon} not better than x={x} ({other})"
                );
            }
        }
    }

    #[test]
    fn response_is_strictly_decreasing() {
        for &x in &[0.05, 0.3, 0.5, 0.75, 1.0] {
            let co = coefficients(x).unwrap();
            let mut prev = co.eval(0.0);
            for i in 1..=120 {
                let p = co.eval(i as f64 * 0.025);
                assert!(p < prev, "x={x} not strictly decreasing at step {i}");
                prev = p;
            }
        }
    }

    #[test]
    fn sensitivity_curves_cross_near_one() {
        let g = sensitivity_crossing(0.5, 0.0, (0.7, 1.3)).unwrap();
        assert!((0.7..1.3).contains(&g));
        // stable under bracket widening
        let g2 = sensitivity_crossing(0.5, 0.0, (0.5, 2.0)).unwrap();
        assert!((g - g2).abs() < 2e-6, "crossing moved: {g} vs {g2}");
        // the curves genuinely swap order across the root
        let before = sensitivity(0.5, g - 0.05, 1).unwrap() - sensitivity(0.0, g - 0.05, 1).unwrap();
        let after = sensitivity(0.5, g + 0.05, 1).unwrap() - sensitivity(0.0, g + 0.05, 1).unwrap();
        assert!(before < 0.0 && after > 0.0);
        // identical probes never cross
        assert!(sensitivity_crossing(0.3, 0.3, (0.5, 1.5)).is_err());
    }

    #[test]
    fn gamma_estimation_round_trips() {
        for &x in &[0.1, 0.3, 0.5] {
            let mut g = 0.05;
            while g <= 2.0 + 1e-12 {
                let p = nondetection_probability(x, g).unwrap();
                let est = estimate_gamma(p, x).unwrap();
                let got = est.value().expect("in-range p_hat");
                assert!((got - g).abs() < 1e-6, "x={x}, gamma={g} -> {got}");
                g += 0.05;
            }
        }
    }

    #[test]
    fn gamma_estimation_edges() {
        assert_eq!(estimate_gamma(1.0, 0.5).unwrap(), GammaEstimate::Value(0.0));
        // at or below the asymptote: saturated
        let c_half = coefficients(0.5).unwrap().c_x;
        assert_eq!(estimate_gamma(c_half - 0.01, 0.5).unwrap(), GammaEstimate::Saturated);
        assert_eq!(estimate_gamma(c_half, 0.5).unwrap(), GammaEstimate::Saturated);
        assert!(estimate_gamma(c_half - 0.01, 0.5).unwrap().value().is_none());
        assert_eq!(estimate_gamma(0.2, 0.5).unwrap().or_infinity(), f64::INFINITY);
        // domain errors
        assert!(estimate_gamma(-0.1, 0.5).is_err());
        assert!(estimate_gamma(1.1, 0.5).is_err());
        // a rounded observation still lands close (the curve slope is ~0.44)
        let est = estimate_gamma(0.8637, 0.5).unwrap().value().unwrap();
        assert!((est - 0.5).abs() < 1e-3, "rounded inversion gave {est}");
    }

    #[test]
    fn curve_fit_recovers_exact_families() {
        let gammas: Vec<f64> = (0..25).map(|i| i as f64 * 0.1).collect();
        // pure probe: recover the closed-form triple
        let co = coefficients(0.35).unwrap();
        let pts: Vec<(f64, f64)> = gammas.iter().map(|&g| (g, co.eval(g))).collect();
        let fit = fit_nondetection_curve(&pts).unwrap();
        assert_relative_eq!(fit.a, co.a_x, epsilon = 1e-9);
        assert_relative_eq!(fit.b, co.b_x, epsilon = 1e-9);
        assert_relative_eq!(fit.c, co.c_x, epsilon = 1e-9);

        // depolarized probe: the family scales by (1 - eps) plus eps/3 offset
        let eps = 0.12;
        let rho = depolarize_fiducial(0.35, eps).unwrap();
        let pts: Vec<(f64, f64)> = gammas
            .iter()
            .map(|&g| (g, nondetection_probability_channel(&rho, 0.35, g).unwrap()))
            .collect();
        let fit = fit_nondetection_curve(&pts).unwrap();
        assert_relative_eq!(fit.a, (1.0 - eps) * co.a_x, epsilon = 1e-8);
        assert_relative_eq!(fit.b, (1.0 - eps) * co.b_x, epsilon = 1e-8);
        assert_relative_eq!(fit.c, (1.0 - eps) * co.c_x + eps / 3.0, epsilon = 1e-8);
        assert!(fit.a + fit.b + fit.c < 1.0);

        // noisy data pushing past the bound activates the sum constraint
        let pts: Vec<(f64, f64)> = gammas
            .iter()
            .map(|&g| (g, (coefficients(0.2).unwrap().eval(g) + 0.02).min(1.0)))
            .collect();
        let fit = fit_nondetection_curve(&pts).unwrap();
        assert!(fit.a + fit.b + fit.c <= 1.0 + 1e-9);

        assert!(fit_nondetection_curve(&pts[..2]).is_err());
    }

    #[test]
    fn sweep_rows_are_consistent() {
        let rows = detection_sweep(&[0.0, 0.5], &[0.0, 0.5, 1.0]).unwrap();
        assert_eq!(rows.len(), 6);
        for r in &rows {
            assert_relative_eq!(r.p, nondetection_probability(r.x, r.gamma).unwrap(), epsilon = 1e-14);
            assert_relative_eq!(
                r.sensitivity_scaled,
                sensitivity(r.x, r.gamma, 1).unwrap(),
                epsilon = 1e-14
            );
        }
        assert!(detection_sweep(&[0.5], &[-0.1]).is_err());
    }

    proptest! {
        #[test]
        fn coefficients_are_normalized_and_nonnegative(x in 0.0_f64..=1.0) {
            let co = coefficients(x).unwrap();
            prop_assert!((co.a_x + co.b_x + co.c_x - 1.0).abs() < 1e-12);
            prop_assert!(co.a_x >= 0.0 && co.b_x >= 0.0 && co.c_x >= 0.0);
        }

        #[test]
        fn response_stays_between_asymptote_and_one(x in 0.0_f64..=1.0, g in 0.0_f64..=5.0) {
            let co = coefficients(x).unwrap();
            let p = co.eval(g);
            prop_assert!(p <= 1.0 + 1e-12);
            prop_assert!(p >= co.c_x - 1e-12);
        }
    }
}
