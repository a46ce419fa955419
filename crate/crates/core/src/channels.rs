//! Quantum processes on the spin-1 space.
//!
//! The central object is the isotropic jitter channel: an average over random
//! SU(2) kicks exp(-i theta n.J) with the axis n uniform on the sphere and the
//! angle theta Gaussian with width gamma over the whole real line,
//!
//!   D_gamma(rho) = E_n E_theta [ U(n, theta) rho U(n, theta)^dag ].
//!
//! Channels are represented as 9x9 superoperators acting on column-stacked
//! 3x3 operators, with Choi-matrix conversions (Tr C = 3, input factor first)
//! and CPTP diagnostics.

use crate::linalg::{
    c, cr, derive_seed, eigh3, eigh9, kron33, pairwise_sum, unvec3, vec3, CMat3, CMat9,
};
use crate::spinspace::{axis_angle_matrix, DensityMatrix, Su2Element, TensorOperators};
use crate::{Error, Result};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

/// Samples per parallel shard in [`jitter_mc`]. Shard RNGs are derived from
/// the master seed by shard index, so the result is bitwise independent of
/// the worker count.
const MC_SHARD: usize = 4096;

// ===================== superoperator =====================

/// A linear map on 3x3 operators, stored as a 9x9 matrix acting on
/// column-stacked inputs: vec(E(X)) = mat . vec(X).
#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator {
    mat: CMat9,
}

impl Superoperator {
    /// Identity channel.
    pub fn identity() -> Self {
        Self { mat: CMat9::identity() }
    }

    /// Wrap a raw 9x9 matrix.
    pub fn from_matrix(mat: CMat9) -> Self {
        Self { mat }
    }

    /// Unitary conjugation rho -> U rho U^dag, i.e. conj(U) (x) U.
    pub fn from_unitary(u: &Su2Element) -> Self {
        let m = u.matrix();
        Self { mat: kron33(&m.conjugate(), m) }
    }

    /// The raw 9x9 matrix.
    pub fn matrix(&self) -> &CMat9 {
        &self.mat
    }

    /// Apply to a state. For trace-preserving maps the output trace stays 1
    /// to machine precision; the Hermitian part is stored.
    pub fn apply(&self, rho: &DensityMatrix) -> DensityMatrix {
        let out = unvec3(&(self.mat * vec3(rho.matrix())));
        DensityMatrix::from_matrix_unchecked((out + out.adjoint()) * cr(0.5))
    }

    /// Composition: `self.compose(&f)` applies `f` first, then `self`.
    pub fn compose(&self, f: &Superoperator) -> Superoperator {
        Superoperator { mat: self.mat * f.mat }
    }

    /// Reshuffle into the Choi matrix C = sum_ij |i><j| (x) E(|i><j|).
    pub fn to_choi(&self) -> ChoiMatrix {
        let mut m = CMat9::zeros();
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        m[(3 * i + k, 3 * j + l)] = self.mat[(3 * l + k, 3 * j + i)];
                    }
                }
            }
        }
        ChoiMatrix { mat: m }
    }
}

/// Composition of two channels (apply `f` first, then `e`).
pub fn compose(e: &Superoperator, f: &Superoperator) -> Superoperator {
    e.compose(f)
}

/// Apply a channel to a state.
pub fn apply(e: &Superoperator, rho: &DensityMatrix) -> DensityMatrix {
    e.apply(rho)
}

// ===================== Choi matrix =====================

/// Choi matrix of a channel with the input factor first and normalization
/// Tr C = 3; a map is CP iff C is PSD and TP iff the partial trace over the
/// output factor is the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiMatrix {
    mat: CMat9,
}

impl ChoiMatrix {
    pub fn from_matrix(mat: CMat9) -> Self {
        Self { mat }
    }

    pub fn matrix(&self) -> &CMat9 {
        &self.mat
    }

    /// Inverse reshuffle back to the superoperator.
    pub fn to_superoperator(&self) -> Superoperator {
        let mut m = CMat9::zeros();
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        m[(3 * l + k, 3 * j + i)] = self.mat[(3 * i + k, 3 * j + l)];
                    }
                }
            }
        }
        Superoperator { mat: m }
    }

    /// Partial trace over the output (second) factor; equals I for TP maps.
    pub fn trace_out_output(&self) -> CMat3 {
        let mut t = CMat3::zeros();
        for i in 0..3 {
            for j in 0..3 {
                let mut s = c(0.0, 0.0);
                for k in 0..3 {
                    s += self.mat[(3 * i + k, 3 * j + k)];
                }
                t[(i, j)] = s;
            }
        }
        t
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let h = (self.mat + self.mat.adjoint()) * cr(0.5);
        let (vals, _) = eigh9(&h);
        vals.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

/// Convert a Choi matrix back to a superoperator.
pub fn from_choi(choi: &ChoiMatrix) -> Superoperator {
    choi.to_superoperator()
}

/// Convert a superoperator to its Choi matrix.
pub fn to_choi(e: &Superoperator) -> ChoiMatrix {
    e.to_choi()
}

// ===================== CPTP diagnostics =====================

/// Result of [`is_cptp`]: complete positivity and trace preservation checks
/// with their witnessed magnitudes.
#[derive(Debug, Clone, Copy)]
pub struct CptpReport {
    pub cp: bool,
    pub tp: bool,
    /// Smallest Choi eigenvalue (negative values witness CP violation).
    pub min_choi_eig: f64,
    /// Max-entry deviation of the output-traced Choi from the identity.
    pub tp_residual: f64,
}

/// Check complete positivity (Choi PSD, including Hermiticity of the Choi
/// matrix) and trace preservation, both within `tol`.
pub fn is_cptp(e: &Superoperator, tol: f64) -> CptpReport {
    let choi = e.to_choi();
    let herm_dev: f64 = (choi.mat - choi.mat.adjoint())
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    let min_eig = choi.min_eigenvalue();
    let tp_residual: f64 = (choi.trace_out_output() - CMat3::identity())
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    CptpReport {
        cp: min_eig >= -tol && herm_dev <= tol,
        tp: tp_residual <= tol,
        min_choi_eig: min_eig,
        tp_residual,
    }
}

// ===================== the jitter channel =====================

/// Finite-rotation jitter channel parameters: Gaussian width `gamma`, number
/// of discrete rotations `k` (the experimental setting uses about 50), and
/// the sampling seed.
#[derive(Debug, Clone, Copy)]
pub struct JitterSpec {
    pub gamma: f64,
    pub k: usize,
    pub seed: u64,
}

impl JitterSpec {
    pub fn new(gamma: f64, k: usize, seed: u64) -> Result<Self> {
        if gamma < 0.0 {
            return Err(Error::ParameterRange { name: "gamma", value: gamma, range: "[0, inf)" });
        }
        if k < 1 {
            return Err(Error::ParameterRange { name: "K", value: k as f64, range: ">= 1" });
        }
        Ok(Self { gamma, k, seed })
    }

    /// Default rotation count matching the experimental arrangement.
    pub fn with_default_k(gamma: f64, seed: u64) -> Result<Self> {
        Self::new(gamma, 50, seed)
    }
}

/// Channel eigenvalue on tensor rank k: the average of the normalized SU(2)
/// character chi_k(theta)/(2k+1) over the jitter distribution.
///
/// Averaging the conjugation over a uniformly random axis first projects each
/// rank-k multipole uniformly, leaving the scalar factor
/// chi_k(theta)/(2k+1) = (sum_{m=-k..k} cos(m theta))/(2k+1); the Gaussian
/// angle average then closes over E[cos(m theta)] = exp(-m^2 gamma^2 / 2).
fn rank_eigenvalue(k: usize, gamma: f64) -> f64 {
    let g1 = (-gamma * gamma / 2.0).exp();
    let g2 = (-2.0 * gamma * gamma).exp();
    match k {
        0 => 1.0,
        1 => (1.0 + 2.0 * g1) / 3.0,
        2 => (1.0 + 2.0 * g1 + 2.0 * g2) / 5.0,
        _ => unreachable!("spin-1 operator space has ranks 0..=2"),
    }
}

/// Exact isotropic jitter channel.
///
/// Isotropy makes the channel diagonal in the spherical-tensor basis with one
/// eigenvalue per rank; see [`rank_eigenvalue`]. The construction is
/// validated in tests against the Monte Carlo sampler and against the
/// closed-form detection response.
pub fn jitter_exact(gamma: f64) -> Result<Superoperator> {
    if gamma < 0.0 {
        return Err(Error::ParameterRange { name: "gamma", value: gamma, range: "[0, inf)" });
    }
    let tensors = TensorOperators::new();
    let mut mat = CMat9::zeros();
    for k in 0..3usize {
        let lambda = cr(rank_eigenvalue(k, gamma));
        for q in -(k as i32)..=(k as i32) {
            let t = vec3(tensors.get(k, q));
            // rank-k projector |vec T_kq><vec T_kq| weighted by the eigenvalue
            mat += (t * t.adjoint()) * lambda;
        }
    }
    Ok(Superoperator { mat })
}

/// Draw one jitter rotation: axis uniform on the sphere, angle ~ N(0, gamma^2).
fn sample_kick(rng: &mut impl Rng, gamma: f64) -> CMat3 {
    let z: f64 = 1.0 - 2.0 * rng.random::<f64>();
    let phi: f64 = 2.0 * std::f64::consts::PI * rng.random::<f64>();
    let s = (1.0 - z * z).max(0.0).sqrt();
    let axis = [s * phi.cos(), s * phi.sin(), z];
    let theta: f64 = rng.sample(rand_distr::Normal::new(0.0, gamma).expect("gamma >= 0"));
    axis_angle_matrix(axis, theta)
}

/// Monte Carlo jitter channel: the empirical average of `n_samples` random
/// unitary conjugations. Trace preserving by construction and deterministic
/// per seed (sharded RNG streams make it independent of the worker count).
pub fn jitter_mc(gamma: f64, n_samples: usize, seed: u64) -> Result<Superoperator> {
    if gamma < 0.0 {
        return Err(Error::ParameterRange { name: "gamma", value: gamma, range: "[0, inf)" });
    }
    if n_samples < 1 {
        return Err(Error::ParameterRange { name: "n_samples", value: 0.0, range: ">= 1" });
    }
    if gamma == 0.0 {
        return Ok(Superoperator::identity());
    }
    let n_shards = n_samples.div_ceil(MC_SHARD);
    let shard_sums: Vec<CMat9> = (0..n_shards)
        .into_par_iter()
        .map(|shard| {
            let lo = shard * MC_SHARD;
            let hi = (lo + MC_SHARD).min(n_samples);
            let mut rng = ChaCha12Rng::seed_from_u64(derive_seed(seed, &[shard as u64]));
            let mut acc = CMat9::zeros();
            for _ in lo..hi {
                let u = sample_kick(&mut rng, gamma);
                acc += kron33(&u.conjugate(), &u);
            }
            acc
        })
        .collect();
    let total = pairwise_sum(&shard_sums).expect("at least one shard");
    Ok(Superoperator { mat: total * cr(1.0 / n_samples as f64) })
}

/// Finite-K jitter channel (1/K) sum_k U_k . U_k^dag with the same rotation
/// distribution as [`jitter_mc`]; the 1/K normalization makes it a channel.
pub fn jitter_discrete(spec: &JitterSpec) -> Result<Superoperator> {
    jitter_mc(spec.gamma, spec.k, spec.seed)
}

// ===================== purity decay =====================

/// Purity of the jitter output on a (possibly depolarized) fiducial input,
/// one value per gamma.
pub fn purity_curve(x: f64, gammas: &[f64], input_impurity: Option<f64>) -> Result<Vec<f64>> {
    let rho = crate::spinspace::depolarize_fiducial(x, input_impurity.unwrap_or(0.0))?;
    gammas
        .iter()
        .map(|&g| Ok(jitter_exact(g)?.apply(&rho).purity()))
        .collect()
}

// ===================== random channels =====================

/// Haar-flavored random CPTP map: a Ginibre Choi matrix, symmetrized to TP by
/// the inverse square root of its output-traced marginal. Useful as fuzz
/// input for conversion and tomography tests.
pub fn random_cptp(seed: u64) -> Superoperator {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let dist = rand_distr::StandardNormal;
    let g = CMat9::from_fn(|_, _| {
        let re: f64 = rng.sample(dist);
        let im: f64 = rng.sample(dist);
        c(re, im)
    });
    let c0 = g * g.adjoint();
    let choi = ChoiMatrix { mat: c0 };
    let lambda = choi.trace_out_output();
    // lambda^{-1/2} on the input factor enforces Tr_out C = I
    let (vals, vecs) = eigh3(&lambda);
    let mut inv_sqrt = CMat3::zeros();
    for k in 0..3 {
        let v = vecs.column(k);
        inv_sqrt += (v * v.adjoint()) * cr(1.0 / vals[k].sqrt());
    }
    let s = kron33(&inv_sqrt, &CMat3::identity());
    ChoiMatrix { mat: s * c0 * s.adjoint() }.to_superoperator()
}
