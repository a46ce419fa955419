//! Python bindings: a thin, flat wrapper over the core library. Matrices
//! cross the boundary as nested lists of complex numbers so the module has
//! no NumPy build dependency; callers can wrap results in arrays as needed.

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use biphoton::channels::{jitter_exact, Superoperator};
use biphoton::ensembles::{gram_continuous, is_2design as gram_is_2design, DEFAULT_QUADRATURE_ORDER};
use biphoton::linalg::CMat3;
use biphoton::spinspace::{fiducial_state, wigner_sphere, TWO_DESIGN_X};

fn err(e: biphoton::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn rows3(m: &CMat3) -> Vec<Vec<Complex64>> {
    (0..3).map(|i| (0..3).map(|j| m[(i, j)]).collect()).collect()
}

fn rows9(e: &Superoperator) -> Vec<Vec<Complex64>> {
    let m = e.matrix();
    (0..9).map(|i| (0..9).map(|j| m[(i, j)]).collect()).collect()
}

/// Amplitudes of the fiducial probe in the (|2,0>, |1,1>, |0,2>) basis.
#[pyfunction]
fn fiducial(x: f64) -> PyResult<Vec<Complex64>> {
    let psi = fiducial_state(x).map_err(err)?;
    Ok(psi.amplitudes().iter().copied().collect())
}

/// 9x9 transfer matrix of the isotropic jitter channel (column-stacking
/// convention).
#[pyfunction]
fn jitter_superoperator(gamma: f64) -> PyResult<Vec<Vec<Complex64>>> {
    Ok(rows9(&jitter_exact(gamma).map_err(err)?))
}

/// Density matrix of the fiducial probe after the jitter channel.
#[pyfunction]
fn apply_jitter(x: f64, gamma: f64) -> PyResult<Vec<Vec<Complex64>>> {
    let rho = fiducial_state(x).map_err(err)?.density();
    let out = jitter_exact(gamma).map_err(err)?.apply(&rho);
    Ok(rows3(out.matrix()))
}

/// Purity of the jittered probe for each decoherence strength.
#[pyfunction]
#[pyo3(signature = (x, gammas, input_impurity=None))]
fn purity_curve(x: f64, gammas: Vec<f64>, input_impurity: Option<f64>) -> PyResult<Vec<f64>> {
    biphoton::channels::purity_curve(x, &gammas, input_impurity).map_err(err)
}

/// Probability that the rotated-back probe is retransmitted into its input
/// port (no detector click).
#[pyfunction]
fn nondetection_probability(x: f64, gamma: f64) -> PyResult<f64> {
    biphoton::detection::nondetection_probability(x, gamma).map_err(err)
}

/// Shot-noise-limited jitter sensitivity for a probe at a working point.
#[pyfunction]
#[pyo3(signature = (x, gamma, trials=1))]
fn sensitivity(x: f64, gamma: f64, trials: u64) -> PyResult<f64> {
    biphoton::detection::sensitivity(x, gamma, trials).map_err(err)
}

/// Simulate a detection experiment; returns (trials, nondetections, p_hat).
#[pyfunction]
fn simulate_detection(x: f64, gamma: f64, trials: u64, seed: u64) -> PyResult<(u64, u64, f64)> {
    let out = biphoton::detection::simulate_detection(x, gamma, trials, seed).map_err(err)?;
    Ok((out.trials, out.nondetections, out.p_hat))
}

/// Invert a measured nondetection probability to a jitter estimate. Returns
/// None when the measurement is past the invertible range (saturated).
#[pyfunction]
fn estimate_gamma(p_hat: f64, x: f64) -> PyResult<Option<f64>> {
    Ok(biphoton::detection::estimate_gamma(p_hat, x).map_err(err)?.value())
}

/// Eigenvalues (descending) of the rotation-averaged Gram matrix of the
/// continuous probe ensemble at mixing parameter x.
#[pyfunction]
fn gram_eigenvalues(x: f64) -> PyResult<Vec<f64>> {
    let gram = gram_continuous(x, DEFAULT_QUADRATURE_ORDER).map_err(err)?;
    Ok(gram.eigenvalues().to_vec())
}

/// Whether the continuous ensemble at x is a projective 2-design within tol.
#[pyfunction]
#[pyo3(signature = (x, tol=1e-9))]
fn is_2design(x: f64, tol: f64) -> PyResult<bool> {
    let gram = gram_continuous(x, DEFAULT_QUADRATURE_ORDER).map_err(err)?;
    Ok(gram_is_2design(&gram, tol).is_2design)
}

/// Spherical Wigner function of the jittered probe on a midpoint grid.
/// Returns (thetas, phis, values, integral) with values in theta-major order.
#[pyfunction]
#[pyo3(signature = (x, gamma, n_theta=64, n_phi=128))]
fn wigner(
    x: f64,
    gamma: f64,
    n_theta: usize,
    n_phi: usize,
) -> PyResult<(Vec<f64>, Vec<f64>, Vec<f64>, f64)> {
    let rho = fiducial_state(x).map_err(err)?.density();
    let out = jitter_exact(gamma).map_err(err)?.apply(&rho);
    let w = wigner_sphere(&out, n_theta, n_phi).map_err(err)?;
    let integral = w.integrate();
    Ok((w.thetas, w.phis, w.values, integral))
}

/// Full tomography sweep: simulate data through the jitter channel, fit by
/// maximum likelihood, score by average process infidelity. Returns rows of
/// (x, gamma, api_mean, api_se).
#[pyfunction]
fn api_sweep(
    xs: Vec<f64>,
    gammas: Vec<f64>,
    shots: u64,
    n_states: usize,
    seeds: Vec<u64>,
) -> PyResult<Vec<(f64, f64, f64, f64)>> {
    let rows = biphoton::qpt::api_sweep(&xs, &gammas, shots, n_states, &seeds).map_err(err)?;
    Ok(rows.into_iter().map(|r| (r.x, r.gamma, r.api_mean, r.api_se)).collect())
}

#[pymodule]
fn biphoton_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("TWO_DESIGN_X", TWO_DESIGN_X)?;
    m.add_function(wrap_pyfunction!(fiducial, m)?)?;
    m.add_function(wrap_pyfunction!(jitter_superoperator, m)?)?;
    m.add_function(wrap_pyfunction!(apply_jitter, m)?)?;
    m.add_function(wrap_pyfunction!(purity_curve, m)?)?;
    m.add_function(wrap_pyfunction!(nondetection_probability, m)?)?;
    m.add_function(wrap_pyfunction!(sensitivity, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_detection, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_gamma, m)?)?;
    m.add_function(wrap_pyfunction!(gram_eigenvalues, m)?)?;
    m.add_function(wrap_pyfunction!(is_2design, m)?)?;
    m.add_function(wrap_pyfunction!(wigner, m)?)?;
    m.add_function(wrap_pyfunction!(api_sweep, m)?)?;
    Ok(())
}
