//! Spin-1 state space: pure and mixed states, angular-momentum operators,
//! SU(2) rotations and their waveplate realizations, fidelity and purity,
//! Haar sampling, spherical-tensor decompositions, and Wigner maps.
//!
//! The two-photon polarization states live in the symmetric (triplet)
//! subspace; the basis is ordered (|2,0>, |1,1>, |0,2>) in H/V photon
//! numbers, identified with (|1,+1>, |1,0>, |1,-1>) in angular momentum.
//! All angles are radians and hbar = 1.

use crate::linalg::{c, cr, eigh3, hs_inner, sqrtm_psd, CMat3, CVec3, C64};
use crate::{Error, Result};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Interpolation parameter of the fiducial family at which the rotation
/// orbit of the state forms a spherical 2-design: x* = 1/2 - 1/(2 sqrt(2)).
pub const TWO_DESIGN_X: f64 = 0.5 - 0.5 * std::f64::consts::FRAC_1_SQRT_2;

// ===================== pure and mixed states =====================

/// Normalized pure state of the spin-1 (two-photon triplet) space.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amps: CVec3,
}

impl PureState {
    /// Build from amplitudes (C0, C1, C2); the norm must already be 1 within
    /// 1e-12. The stored vector is renormalized to machine precision.
    pub fn new(c0: C64, c1: C64, c2: C64) -> Result<Self> {
        let v = CVec3::new(c0, c1, c2);
        let n = v.norm();
        if (n - 1.0).abs() > 1e-12 {
            return Err(Error::MatrixValidation(format!(
                "pure-state norm {n} deviates from 1 beyond 1e-12"
            )));
        }
        Ok(Self { amps: v / cr(n) })
    }

    /// Build from an arbitrary nonzero vector by normalizing it.
    pub fn from_unnormalized(v: CVec3) -> Result<Self> {
        let n = v.norm();
        if n < 1e-12 {
            return Err(Error::MatrixValidation("cannot normalize the zero vector".into()));
        }
        Ok(Self { amps: v / cr(n) })
    }

    /// Amplitudes in the (|2,0>, |1,1>, |0,2>) basis.
    pub fn amplitudes(&self) -> &CVec3 {
        &self.amps
    }

    /// Inner product <self|other>.
    pub fn inner(&self, other: &PureState) -> C64 {
        self.amps.dotc(&other.amps)
    }

    /// Squared overlap |<self|other>|^2.
    pub fn overlap(&self, other: &PureState) -> f64 {
        self.inner(other).norm_sqr()
    }

    /// Projector |psi><psi| as a density matrix.
    pub fn density(&self) -> DensityMatrix {
        DensityMatrix::from_pure(self)
    }
}

/// Density matrix on the spin-1 space: Hermitian, unit trace, positive
/// semidefinite (up to a small negative-eigenvalue tolerance).
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    m: CMat3,
}

impl DensityMatrix {
    /// Validate and store. Hermiticity and unit trace are required within
    /// 1e-12, eigenvalues must be >= -1e-10. The stored matrix is the
    /// Hermitian part of the input.
    pub fn new(m: CMat3) -> Result<Self> {
        let herm_dev = (m - m.adjoint()).norm();
        if herm_dev > 1e-12 {
            return Err(Error::MatrixValidation(format!(
                "density matrix not Hermitian: |M - M^dag| = {herm_dev:.3e}"
            )));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > 1e-12 || tr.im.abs() > 1e-12 {
            return Err(Error::MatrixValidation(format!(
                "density matrix trace {} + {}i deviates from 1",
                tr.re, tr.im
            )));
        }
        let h = (m + m.adjoint()) * cr(0.5);
        let (vals, _) = eigh3(&h);
        let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        if min < -1e-10 {
            return Err(Error::MatrixValidation(format!(
                "density matrix has negative eigenvalue {min:.3e}"
            )));
        }
        Ok(Self { m: h })
    }

    /// Internal constructor for matrices known valid by construction.
    pub(crate) fn from_matrix_unchecked(m: CMat3) -> Self {
        Self { m }
    }

    /// Projector onto a pure state.
    pub fn from_pure(psi: &PureState) -> Self {
        let v = psi.amplitudes();
        Self { m: v * v.adjoint() }
    }

    /// Maximally mixed state I/3.
    pub fn maximally_mixed() -> Self {
        Self { m: CMat3::identity() * cr(1.0 / 3.0) }
    }

    /// The underlying 3x3 matrix.
    pub fn matrix(&self) -> &CMat3 {
        &self.m
    }

    // Named entries of the matrix in the fixed basis:
    //   [ a  f  d ]
    //   [ f* b  g ]
    //   [ d* g* c ]

    /// rho_00, population of |2,0>.
    pub fn a(&self) -> f64 {
        self.m[(0, 0)].re
    }
    /// rho_11, population of |1,1>.
    pub fn b(&self) -> f64 {
        self.m[(1, 1)].re
    }
    /// rho_22, population of |0,2>.
    pub fn c(&self) -> f64 {
        self.m[(2, 2)].re
    }
    /// rho_02, coherence between |2,0> and |0,2>.
    pub fn d(&self) -> C64 {
        self.m[(0, 2)]
    }
    /// rho_01, coherence between |2,0> and |1,1>.
    pub fn f(&self) -> C64 {
        self.m[(0, 1)]
    }
    /// rho_12, coherence between |1,1> and |0,2>.
    pub fn g(&self) -> C64 {
        self.m[(1, 2)]
    }

    /// Tr rho^2, in [1/3, 1].
    pub fn purity(&self) -> f64 {
        (self.m * self.m).trace().re
    }

    /// Eigenvalues sorted in decreasing order.
    pub fn eigenvalues(&self) -> [f64; 3] {
        let (vals, _) = eigh3(&self.m);
        let mut out = [vals[0], vals[1], vals[2]];
        out.sort_by(|p, q| q.partial_cmp(p).unwrap());
        out
    }

    /// Expectation value Tr(rho A) of a Hermitian observable.
    pub fn expectation(&self, op: &CMat3) -> f64 {
        (self.m * op).trace().re
    }
}

/// Fiducial probe family: |psi_x> = sqrt(x) |2,0> + sqrt(1-x) |0,2>.
///
/// x = 0 is a spin-coherent state, x = 1/2 the two-photon N00N state, and
/// x = [`TWO_DESIGN_X`] the state whose rotation orbit is a 2-design.
pub fn fiducial_state(x: f64) -> Result<PureState> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::ParameterRange { name: "x", value: x, range: "[0, 1]" });
    }
    PureState::new(cr(x.sqrt()), cr(0.0), cr((1.0 - x).sqrt()))
}

// ===================== angular-momentum operators =====================

/// The spin-1 angular-momentum operators in the fixed basis (hbar = 1).
#[derive(Debug, Clone)]
pub struct SpinOperators {
    pub jx: CMat3,
    pub jy: CMat3,
    pub jz: CMat3,
    pub jplus: CMat3,
    pub jminus: CMat3,
}

impl SpinOperators {
    pub fn new() -> Self {
        let s = std::f64::consts::SQRT_2;
        let mut jplus = CMat3::zeros();
        jplus[(0, 1)] = cr(s);
        jplus[(1, 2)] = cr(s);
        let jminus = jplus.adjoint();
        let jx = (jplus + jminus) * cr(0.5);
        let jy = (jplus - jminus) * c(0.0, -0.5);
        let jz = CMat3::from_diagonal(&CVec3::new(cr(1.0), cr(0.0), cr(-1.0)));
        Self { jx, jy, jz, jplus, jminus }
    }

    /// Component of J along a unit direction n.
    pub fn along(&self, n: [f64; 3]) -> CMat3 {
        self.jx * cr(n[0]) + self.jy * cr(n[1]) + self.jz * cr(n[2])
    }

    /// Casimir Jx^2 + Jy^2 + Jz^2 = j(j+1) I = 2 I.
    pub fn casimir(&self) -> CMat3 {
        self.jx * self.jx + self.jy * self.jy + self.jz * self.jz
    }
}

impl Default for SpinOperators {
    fn default() -> Self {
        Self::new()
    }
}

// ===================== SU(2) rotations =====================

/// An SU(2) group element in its spin-1 (3x3) representation, carrying its
/// ZYZ Euler angles (alpha, beta, gamma_e) and the cached unitary
/// U = exp(-i alpha Jz) exp(-i beta Jy) exp(-i gamma_e Jz).
#[derive(Debug, Clone)]
pub struct Su2Element {
    euler: (f64, f64, f64),
    u: CMat3,
}

/// Reduced Wigner matrix d^1(beta) for spin 1, rows/columns ordered m = +1, 0, -1.
fn wigner_d1(beta: f64) -> CMat3 {
    let (sb, cb) = beta.sin_cos();
    let s = sb / std::f64::consts::SQRT_2;
    CMat3::new(
        cr((1.0 + cb) / 2.0), cr(-s), cr((1.0 - cb) / 2.0),
        cr(s), cr(cb), cr(-s),
        cr((1.0 - cb) / 2.0), cr(s), cr((1.0 + cb) / 2.0),
    )
}

/// Recover ZYZ Euler angles from a spin-1 rotation matrix.
fn euler_from_unitary(u: &CMat3) -> (f64, f64, f64) {
    let two_pi = 2.0 * std::f64::consts::PI;
    let wrap = |a: f64| a.rem_euclid(two_pi);
    let cb = u[(1, 1)].re.clamp(-1.0, 1.0);
    let beta = cb.acos();
    let sb = beta.sin();
    if sb > 1e-9 {
        // U[0,1] = -e^{-i alpha} sin(beta)/sqrt2, U[1,0] = e^{-i gamma} sin(beta)/sqrt2
        let alpha = wrap(-(-u[(0, 1)]).arg());
        let gamma = wrap(-u[(1, 0)].arg());
        (alpha, beta, gamma)
    } else if cb > 0.0 {
        // pure z rotation: U[0,0] = e^{-i(alpha + gamma)}
        (wrap(-u[(0, 0)].arg()), 0.0, 0.0)
    } else {
        // beta = pi: U[0,2] = e^{-i(alpha - gamma)}
        (wrap(-u[(0, 2)].arg()), std::f64::consts::PI, 0.0)
    }
}

impl Su2Element {
    /// Identity rotation.
    pub fn identity() -> Self {
        Self { euler: (0.0, 0.0, 0.0), u: CMat3::identity() }
    }

    /// ZYZ Euler construction U = e^{-i a Jz} e^{-i b Jy} e^{-i g Jz}.
    pub fn from_euler(alpha: f64, beta: f64, gamma_e: f64) -> Self {
        let d = wigner_d1(beta);
        let m = [1.0, 0.0, -1.0];
        let mut u = CMat3::zeros();
        for i in 0..3 {
            let pa = c(0.0, -m[i] * alpha).exp();
            for j in 0..3 {
                let pg = c(0.0, -m[j] * gamma_e).exp();
                u[(i, j)] = pa * d[(i, j)] * pg;
            }
        }
        Self { euler: (alpha, beta, gamma_e), u }
    }

    /// Axis-angle construction exp(-i theta n.J). The axis need not be
    /// normalized but must be nonzero.
    pub fn from_axis_angle(axis: [f64; 3], theta: f64) -> Result<Self> {
        let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        if n < 1e-14 {
            return Err(Error::ParameterRange {
                name: "axis",
                value: 0.0,
                range: "nonzero vector",
            });
        }
        let u = axis_angle_matrix([axis[0] / n, axis[1] / n, axis[2] / n], theta);
        Ok(Self { euler: euler_from_unitary(&u), u })
    }

    /// Build from an explicit spin-1 rotation matrix (must be the image of an
    /// SU(2) element; unitarity is the caller's responsibility).
    pub(crate) fn from_matrix(u: CMat3) -> Self {
        Self { euler: euler_from_unitary(&u), u }
    }

    /// Haar-random rotation, deterministic per seed.
    pub fn haar_random(seed: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        Self::haar_with(&mut rng)
    }

    /// Haar-random rotation drawn from a caller-supplied RNG.
    pub fn haar_with(rng: &mut impl Rng) -> Self {
        let two_pi = 2.0 * std::f64::consts::PI;
        let alpha = rng.random::<f64>() * two_pi;
        let gamma_e = rng.random::<f64>() * two_pi;
        let beta = (1.0 - 2.0 * rng.random::<f64>()).clamp(-1.0, 1.0).acos();
        Self::from_euler(alpha, beta, gamma_e)
    }

    /// The ZYZ Euler angles (alpha, beta, gamma_e).
    pub fn euler(&self) -> (f64, f64, f64) {
        self.euler
    }

    /// The cached 3x3 unitary.
    pub fn matrix(&self) -> &CMat3 {
        &self.u
    }

    /// Group composition: `self.compose(&rhs)` applies `rhs` first, then `self`.
    pub fn compose(&self, rhs: &Su2Element) -> Su2Element {
        Su2Element::from_matrix(self.u * rhs.u)
    }

    /// Group inverse.
    pub fn inverse(&self) -> Su2Element {
        Su2Element::from_matrix(self.u.adjoint())
    }

    /// Apply to a pure state.
    pub fn apply(&self, psi: &PureState) -> PureState {
        PureState { amps: self.u * psi.amps }
    }
}

/// Conjugate a density matrix: U rho U^dag.
pub fn rotate(rho: &DensityMatrix, u: &Su2Element) -> DensityMatrix {
    DensityMatrix::from_matrix_unchecked(u.u * rho.m * u.u.adjoint())
}

/// Spin-1 rotation matrix exp(-i theta n.J) for a unit axis n, without the
/// Euler bookkeeping of [`Su2Element`]. K = n.J has eigenvalues {-1, 0, 1},
/// so K^3 = K and exp(-i t K) = I - i sin(t) K + (cos(t) - 1) K^2.
pub(crate) fn axis_angle_matrix(unit: [f64; 3], theta: f64) -> CMat3 {
    let k = SpinOperators::new().along(unit);
    CMat3::identity() + k * c(0.0, -theta.sin()) + (k * k) * cr(theta.cos() - 1.0)
}

// ===================== waveplates =====================

/// A single waveplate acting identically on both photons: retardance delta
/// (pi for a half-wave plate, pi/2 for a quarter-wave plate) and fast-axis
/// angle, both in radians.
#[derive(Debug, Clone, Copy)]
pub struct WaveplateSpec {
    pub retardance: f64,
    pub fast_axis: f64,
}

impl WaveplateSpec {
    pub fn new(retardance: f64, fast_axis: f64) -> Result<Self> {
        if !(0.0..2.0 * std::f64::consts::PI).contains(&retardance) {
            return Err(Error::ParameterRange {
                name: "retardance",
                value: retardance,
                range: "[0, 2pi)",
            });
        }
        Ok(Self { retardance, fast_axis })
    }

    /// Half-wave plate at the given fast-axis angle.
    pub fn half_wave(fast_axis: f64) -> Self {
        Self { retardance: std::f64::consts::PI, fast_axis }
    }

    /// Quarter-wave plate at the given fast-axis angle.
    pub fn quarter_wave(fast_axis: f64) -> Self {
        Self { retardance: std::f64::consts::FRAC_PI_2, fast_axis }
    }
}

/// Lift a waveplate to the two-photon triplet space.
///
/// Phase convention: the single-photon Jones matrix is
/// `R(h) diag(e^{-i delta/2}, e^{+i delta/2}) R(-h)` (fast axis gets the
/// retarded phase `e^{-i delta/2}`), which is unimodular, and the spin-1
/// action is its symmetric tensor square. Under this convention a half-wave
/// plate at 22.5 degrees sends |1,1> to -(|2,0> - |0,2>)/sqrt2 and leaves the
/// plus-N00N state an eigenvector with eigenvalue -1.
pub fn waveplate_su2(spec: &WaveplateSpec) -> Su2Element {
    let h = spec.fast_axis;
    let (sh, ch) = h.sin_cos();
    let em = c(0.0, -spec.retardance / 2.0).exp();
    let ep = c(0.0, spec.retardance / 2.0).exp();
    // R(h) diag(em, ep) R(-h)
    let a = em * cr(ch * ch) + ep * cr(sh * sh);
    let b = (em - ep) * cr(ch * sh);
    let d = em * cr(sh * sh) + ep * cr(ch * ch);
    sym_square(a, b, b, d)
}

/// Symmetric tensor square of a 2x2 unimodular Jones matrix [[a, b], [c, d]],
/// in the basis (|2,0>, |1,1>, |0,2>).
fn sym_square(a: C64, b: C64, cc: C64, d: C64) -> Su2Element {
    let s2 = cr(std::f64::consts::SQRT_2);
    let u = CMat3::new(
        a * a, s2 * a * b, b * b,
        s2 * a * cc, a * d + b * cc, s2 * b * d,
        cc * cc, s2 * cc * d, d * d,
    );
    Su2Element::from_matrix(u)
}

// ===================== purity, fidelity, impurity =====================

/// Squared Uhlmann fidelity F(rho, sigma) = (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2.
/// Symmetric in its arguments; equals |<psi|phi>|^2 for pure inputs.
///
/// Evaluated as the squared trace norm of sqrt(rho) sqrt(sigma), which keeps
/// full accuracy when either state is rank deficient.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> f64 {
    let t = crate::linalg::nuclear_norm(&(sqrtm_psd(&rho.m) * sqrtm_psd(&sigma.m)));
    (t * t).clamp(0.0, 1.0)
}

/// Isotropic depolarization mixing a state with I/3.
#[derive(Debug, Clone, Copy)]
pub struct ImpurityModel {
    pub epsilon: f64,
}

impl ImpurityModel {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::ParameterRange { name: "epsilon", value: epsilon, range: "[0, 1]" });
        }
        Ok(Self { epsilon })
    }

    /// Purity of (1-eps)|psi><psi| + eps I/3 for any pure |psi>:
    /// 1 - 4 eps/3 + 2 eps^2/3.
    pub fn purity(&self) -> f64 {
        1.0 - 4.0 * self.epsilon / 3.0 + 2.0 * self.epsilon * self.epsilon / 3.0
    }

    /// Invert the purity relation on [1/3, 1]; picks the root in [0, 1].
    pub fn from_purity(p: f64) -> Result<Self> {
        if !(1.0 / 3.0..=1.0).contains(&p) {
            return Err(Error::ParameterRange { name: "purity", value: p, range: "[1/3, 1]" });
        }
        Self::new(1.0 - ((3.0 * p - 1.0) / 2.0).sqrt())
    }

    /// Apply the depolarization to a pure state.
    pub fn apply(&self, psi: &PureState) -> DensityMatrix {
        let pure = psi.density();
        let m = pure.m * cr(1.0 - self.epsilon)
            + CMat3::identity() * cr(self.epsilon / 3.0);
        DensityMatrix::from_matrix_unchecked(m)
    }
}

/// Depolarized fiducial state (1-eps)|psi_x><psi_x| + eps I/3.
pub fn depolarize_fiducial(x: f64, epsilon: f64) -> Result<DensityMatrix> {
    let psi = fiducial_state(x)?;
    Ok(ImpurityModel::new(epsilon)?.apply(&psi))
}

// ===================== Haar-random states =====================

/// Haar-random pure state, deterministic per seed.
pub fn haar_random_state(seed: u64) -> PureState {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    haar_state_with(&mut rng)
}

/// Haar-random pure state drawn from a caller-supplied RNG: a normalized
/// vector of iid complex Gaussians.
pub fn haar_state_with(rng: &mut impl Rng) -> PureState {
    let dist = rand_distr::StandardNormal;
    let mut v = CVec3::zeros();
    for i in 0..3 {
        let re: f64 = rng.sample(dist);
        let im: f64 = rng.sample(dist);
        v[i] = c(re, im);
    }
    PureState::from_unnormalized(v).expect("Gaussian vector is nonzero almost surely")
}

// ===================== spherical tensor operators =====================

/// Orthonormal irreducible tensor operators T_kq for spin 1, ranks k = 0..2,
/// satisfying Tr(T_kq^dag T_k'q') = delta_kk' delta_qq' and
/// T_kq^dag = (-1)^q T_{k,-q}.
#[derive(Debug, Clone)]
pub struct TensorOperators {
    ops: [Vec<CMat3>; 3],
}

impl TensorOperators {
    pub fn new() -> Self {
        let j = SpinOperators::new();
        let s2 = std::f64::consts::SQRT_2;
        let s3 = 3.0_f64.sqrt();
        let s6 = 6.0_f64.sqrt();
        let t00 = CMat3::identity() * cr(1.0 / s3);
        let t10 = j.jz * cr(1.0 / s2);
        let t1p1 = j.jplus * cr(-0.5);
        let t1m1 = j.jminus * cr(0.5);
        let t20 = (j.jz * j.jz * cr(3.0) - CMat3::identity() * cr(2.0)) * cr(1.0 / s6);
        let t2p1 = (j.jz * j.jplus + j.jplus * j.jz) * cr(-0.5);
        let t2m1 = (j.jz * j.jminus + j.jminus * j.jz) * cr(0.5);
        let t2p2 = j.jplus * j.jplus * cr(0.5);
        let t2m2 = j.jminus * j.jminus * cr(0.5);
        Self {
            ops: [
                vec![t00],
                vec![t1m1, t10, t1p1],
                vec![t2m2, t2m1, t20, t2p1, t2p2],
            ],
        }
    }

    /// T_kq for k in 0..=2 and q in -k..=k.
    pub fn get(&self, k: usize, q: i32) -> &CMat3 {
        &self.ops[k][(q + k as i32) as usize]
    }

    /// Multipole moments m_kq = Tr(T_kq^dag rho) of a state.
    pub fn multipoles(&self, rho: &DensityMatrix) -> [Vec<C64>; 3] {
        let mut out: [Vec<C64>; 3] = [Vec::new(), Vec::new(), Vec::new()];
        for k in 0..3 {
            for t in &self.ops[k] {
                out[k].push(hs_inner(t, rho.matrix()));
            }
        }
        out
    }

    /// Rank weights w_k = sum_q |m_kq|^2. They sum to the purity, and the
    /// rank-0 weight is 1/3 for every state.
    pub fn rank_weights(&self, rho: &DensityMatrix) -> [f64; 3] {
        let m = self.multipoles(rho);
        let mut w = [0.0; 3];
        for k in 0..3 {
            w[k] = m[k].iter().map(|z| z.norm_sqr()).sum();
        }
        w
    }
}

impl Default for TensorOperators {
    fn default() -> Self {
        Self::new()
    }
}

/// Spherical harmonic Y_kq (Condon-Shortley phases) for k <= 2.
pub fn sph_harm(k: usize, q: i32, theta: f64, phi: f64) -> C64 {
    use std::f64::consts::PI;
    let (st, ct) = theta.sin_cos();
    let phase = |m: i32| c(0.0, m as f64 * phi).exp();
    match (k, q) {
        (0, 0) => cr(0.5 / PI.sqrt()),
        (1, 0) => cr((3.0 / (4.0 * PI)).sqrt() * ct),
        (1, 1) => cr(-(3.0 / (8.0 * PI)).sqrt() * st) * phase(1),
        (1, -1) => cr((3.0 / (8.0 * PI)).sqrt() * st) * phase(-1),
        (2, 0) => cr((5.0 / (16.0 * PI)).sqrt() * (3.0 * ct * ct - 1.0)),
        (2, 1) => cr(-(15.0 / (8.0 * PI)).sqrt() * st * ct) * phase(1),
        (2, -1) => cr((15.0 / (8.0 * PI)).sqrt() * st * ct) * phase(-1),
        (2, 2) => cr((15.0 / (32.0 * PI)).sqrt() * st * st) * phase(2),
        (2, -2) => cr((15.0 / (32.0 * PI)).sqrt() * st * st) * phase(-2),
        _ => panic!("spherical harmonic ({k},{q}) out of range for spin 1"),
    }
}

// ===================== Wigner map on the sphere =====================

/// Wigner quasi-probability function sampled on a midpoint (theta, phi) grid.
/// Values are stored row-major: index `i_theta * n_phi + i_phi`.
#[derive(Debug, Clone)]
pub struct WignerSphere {
    pub n_theta: usize,
    pub n_phi: usize,
    pub thetas: Vec<f64>,
    pub phis: Vec<f64>,
    pub values: Vec<f64>,
}

impl WignerSphere {
    pub fn value(&self, i_theta: usize, i_phi: usize) -> f64 {
        self.values[i_theta * self.n_phi + i_phi]
    }

    /// Midpoint-rule integral over the sphere, integrand W sin(theta).
    pub fn integrate(&self) -> f64 {
        let dt = std::f64::consts::PI / self.n_theta as f64;
        let dp = 2.0 * std::f64::consts::PI / self.n_phi as f64;
        let mut total = 0.0;
        for (i, &t) in self.thetas.iter().enumerate() {
            let st = t.sin();
            for j in 0..self.n_phi {
                total += self.value(i, j) * st;
            }
        }
        total * dt * dp
    }

    /// Grid point with the largest value: (theta, phi, W).
    pub fn max_point(&self) -> (f64, f64, f64) {
        let mut best = (self.thetas[0], self.phis[0], f64::NEG_INFINITY);
        for (i, &t) in self.thetas.iter().enumerate() {
            for (j, &p) in self.phis.iter().enumerate() {
                let w = self.value(i, j);
                if w > best.2 {
                    best = (t, p, w);
                }
            }
        }
        best
    }
}

/// Evaluate the spin-1 Wigner function of a state on an
/// `n_theta x n_phi` midpoint grid.
///
/// Kernel: W(theta, phi) = sqrt(3/(4 pi)) sum_{k<=2, q} Tr(T_kq^dag rho)
/// Y_kq(theta, phi). The scale makes W integrate to 1 over the sphere and
/// sends I/3 to the constant 1/(4 pi).
pub fn wigner_sphere(rho: &DensityMatrix, n_theta: usize, n_phi: usize) -> Result<WignerSphere> {
    if n_theta < 2 || n_phi < 2 {
        return Err(Error::ParameterRange {
            name: "grid",
            value: n_theta.min(n_phi) as f64,
            range: "n_theta, n_phi >= 2",
        });
    }
    use std::f64::consts::PI;
    let tensors = TensorOperators::new();
    let moments = tensors.multipoles(rho);
    let scale = (3.0 / (4.0 * PI)).sqrt();
    let thetas: Vec<f64> = (0..n_theta).map(|i| (i as f64 + 0.5) * PI / n_theta as f64).collect();
    let phis: Vec<f64> = (0..n_phi).map(|j| (j as f64 + 0.5) * 2.0 * PI / n_phi as f64).collect();
    let mut values = vec![0.0; n_theta * n_phi];
    for (i, &t) in thetas.iter().enumerate() {
        for (j, &p) in phis.iter().enumerate() {
            let mut w = c(0.0, 0.0);
            for k in 0..3usize {
                for (idx, m) in moments[k].iter().enumerate() {
                    let q = idx as i32 - k as i32;
                    w += m * sph_harm(k, q, t, p);
                }
            }
            // Hermiticity of rho makes the sum real; the residual is roundoff.
            debug_assert!(w.im.abs() < 1e-10);
            values[i * n_phi + j] = scale * w.re;
        }
    }
    Ok(WignerSphere { n_theta, n_phi, thetas, phis, values })
}
