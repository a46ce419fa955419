//! Small dense linear-algebra helpers shared by the physics modules.
//!
//! Everything here is specialized to the 3-dimensional single-system space and
//! the 9-dimensional operator space built on top of it. Conventions:
//!
//! * `vec3` stacks columns: `vec(X)[3*j + i] = X[i, j]`, so that
//!   `vec(A X B) = (B^T (x) A) vec(X)`.
//! * The Hermitian operator basis returned by [`hermitian_basis`] is
//!   orthonormal under the Hilbert-Schmidt inner product `Tr(A^dag B)` and has
//!   `G_0 = I/sqrt(3)`.

use nalgebra::{DMatrix, DVector, Matrix3, SMatrix, SVector, Vector3};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMat3 = Matrix3<C64>;
pub type CVec3 = Vector3<C64>;
pub type CMat9 = SMatrix<C64, 9, 9>;
pub type CVec9 = SVector<C64, 9>;

/// Complex number from real and imaginary parts.
#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Real number embedded in the complex field.
#[inline]
pub fn cr(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// 3x3 identity.
pub fn eye3() -> CMat3 {
    CMat3::identity()
}

// ===================== vectorization and tensor products =====================

/// Column-stacking vectorization of a 3x3 matrix.
pub fn vec3(m: &CMat3) -> CVec9 {
    let mut v = CVec9::zeros();
    for j in 0..3 {
        for i in 0..3 {
            v[3 * j + i] = m[(i, j)];
        }
    }
    v
}

/// Inverse of [`vec3`].
pub fn unvec3(v: &CVec9) -> CMat3 {
    let mut m = CMat3::zeros();
    for j in 0..3 {
        for i in 0..3 {
            m[(i, j)] = v[3 * j + i];
        }
    }
    m
}

/// Kronecker product of two 3x3 matrices, `(A (x) B)[3i+k, 3j+l] = A[i,j] B[k,l]`.
pub fn kron33(a: &CMat3, b: &CMat3) -> CMat9 {
    let mut out = CMat9::zeros();
    for ia in 0..3 {
        for ja in 0..3 {
            let aij = a[(ia, ja)];
            for ib in 0..3 {
                for jb in 0..3 {
                    out[(3 * ia + ib, 3 * ja + jb)] = aij * b[(ib, jb)];
                }
            }
        }
    }
    out
}

/// Hilbert-Schmidt inner product `Tr(A^dag B)`.
pub fn hs_inner(a: &CMat3, b: &CMat3) -> C64 {
    (a.adjoint() * b).trace()
}

// ===================== Hermitian operator basis =====================

/// Orthonormal Hermitian basis of the 3x3 operator space.
///
/// `G_0 = I/sqrt(3)`; the rest are the Gell-Mann matrices normalized to unit
/// Hilbert-Schmidt norm. Any Hermitian `H` expands as
/// `H = sum_a Tr(G_a H) G_a` with real coefficients.
pub fn hermitian_basis() -> [CMat3; 9] {
    let s2 = std::f64::consts::SQRT_2;
    let s3 = 3.0_f64.sqrt();
    let s6 = 6.0_f64.sqrt();
    let mut g = [CMat3::zeros(); 9];
    g[0] = CMat3::identity() * cr(1.0 / s3);
    // off-diagonal real pairs
    for (k, (i, j)) in [(1, (0, 1)), (3, (0, 2)), (5, (1, 2))] {
        g[k][(i, j)] = cr(1.0 / s2);
        g[k][(j, i)] = cr(1.0 / s2);
    }
    // off-diagonal imaginary pairs
    for (k, (i, j)) in [(2, (0, 1)), (4, (0, 2)), (6, (1, 2))] {
        g[k][(i, j)] = c(0.0, -1.0 / s2);
        g[k][(j, i)] = c(0.0, 1.0 / s2);
    }
    g[7] = CMat3::from_diagonal(&CVec3::new(cr(1.0 / s2), cr(-1.0 / s2), cr(0.0)));
    g[8] = CMat3::from_diagonal(&CVec3::new(cr(1.0 / s6), cr(1.0 / s6), cr(-2.0 / s6)));
    g
}

/// Real expansion coefficients of a Hermitian matrix in [`hermitian_basis`].
pub fn hermitian_coords(h: &CMat3, basis: &[CMat3; 9]) -> [f64; 9] {
    let mut out = [0.0; 9];
    for (a, g) in basis.iter().enumerate() {
        out[a] = hs_inner(g, h).re;
    }
    out
}

// ===================== Hermitian eigenproblems =====================

/// Eigendecomposition of a Hermitian 3x3 matrix. Returns (eigenvalues,
/// eigenvectors as columns); ordering follows the solver.
pub fn eigh3(m: &CMat3) -> (Vector3<f64>, CMat3) {
    let se = nalgebra::SymmetricEigen::new(*m);
    (se.eigenvalues, se.eigenvectors)
}

/// Eigendecomposition of a Hermitian 9x9 matrix.
pub fn eigh9(m: &CMat9) -> (SVector<f64, 9>, CMat9) {
    let se = nalgebra::SymmetricEigen::new(*m);
    (se.eigenvalues, se.eigenvectors)
}

/// Principal square root of a positive semidefinite Hermitian matrix.
/// Eigenvalues below 1e-14 of the largest (roundoff noise, possibly negative)
/// are treated as exact zeros so their square roots do not inject O(1e-8)
/// artifacts into nearly-singular inputs.
pub fn sqrtm_psd(m: &CMat3) -> CMat3 {
    let (vals, vecs) = eigh3(m);
    let lmax = vals.iter().cloned().fold(0.0_f64, f64::max);
    let floor = lmax * 1e-14;
    let mut out = CMat3::zeros();
    for k in 0..3 {
        if vals[k] > floor {
            let v = vecs.column(k);
            out += (v * v.adjoint()) * cr(vals[k].sqrt());
        }
    }
    out
}

/// Sum of singular values (trace norm).
pub fn nuclear_norm(m: &CMat3) -> f64 {
    m.svd(false, false).singular_values.iter().sum()
}

/// Euclidean projection of a real vector onto the probability simplex
/// (entries nonnegative, summing to one).
pub fn simplex_project(vals: &[f64]) -> Vec<f64> {
    let mut sorted: Vec<f64> = vals.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cum = 0.0;
    let mut tau = 0.0;
    for (k, &v) in sorted.iter().enumerate() {
        cum += v;
        let t = (cum - 1.0) / (k + 1) as f64;
        if v - t > 0.0 {
            tau = t;
        }
    }
    vals.iter().map(|&v| (v - tau).max(0.0)).collect()
}

/// Nearest (Frobenius) positive semidefinite unit-trace matrix to a Hermitian
/// input: eigenvalues are projected onto the probability simplex and the
/// eigenvectors kept.
pub fn psd_project_unit_trace(h: &CMat3) -> CMat3 {
    let (vals, vecs) = eigh3(h);
    let proj = simplex_project(vals.as_slice());
    let mut out = CMat3::zeros();
    for k in 0..3 {
        if proj[k] != 0.0 {
            let v = vecs.column(k);
            out += (v * v.adjoint()) * cr(proj[k]);
        }
    }
    out
}

// ===================== quadrature and summation =====================

/// Gauss-Legendre nodes and weights on [-1, 1], exact for polynomials of
/// degree <= 2n - 1. Nodes come out in increasing order.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Chebyshev-based initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_deriv(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_with_deriv(n, x);
        nodes[n - 1 - i] = x;
        weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

fn legendre_with_deriv(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Pairwise (tree) summation. Associativity order depends only on the slice
/// length, so results are reproducible across thread counts.
pub fn pairwise_sum<T>(xs: &[T]) -> Option<T>
where
    T: Clone + std::ops::Add<Output = T>,
{
    match xs.len() {
        0 => None,
        1 => Some(xs[0].clone()),
        n => {
            let mid = n / 2;
            let a = pairwise_sum(&xs[..mid]).unwrap();
            let b = pairwise_sum(&xs[mid..]).unwrap();
            Some(a + b)
        }
    }
}

// ===================== least squares and rank =====================

/// Minimum-norm least-squares solution of `A x = b` via SVD.
pub fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let svd = a.clone().svd(true, true);
    svd.solve(b, 1e-12).expect("SVD solve")
}

/// Numerical rank from singular values, relative threshold `rel_tol * s_max`.
pub fn rank(a: &DMatrix<f64>, rel_tol: f64) -> usize {
    let sv = a.clone().svd(false, false).singular_values;
    let smax = sv.iter().cloned().fold(0.0_f64, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * smax).count()
}

// ===================== seed derivation =====================

/// One round of the splitmix64 mixer.
fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive an independent stream seed from a master seed and a tag path.
/// Used to give every Monte Carlo shard / probe / repetition its own RNG so
/// results do not depend on scheduling or worker count.
pub fn derive_seed(master: u64, tags: &[u64]) -> u64 {
    let mut s = splitmix64(master);
    for &t in tags {
        s = splitmix64(s ^ splitmix64(t));
    }
    s
}

fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let mean_rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = mean_rank;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation (ties get average ranks). Infinities are fine,
/// only the ordering matters.
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len(), "spearman needs equal-length samples");
    let (rx, ry) = (average_ranks(xs), average_ranks(ys));
    let n = xs.len() as f64;
    let mean = (n + 1.0) / 2.0;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        cov += (a - mean) * (b - mean);
        vx += (a - mean).powi(2);
        vy += (b - mean).powi(2);
    }
    cov / (vx * vy).sqrt()
}
