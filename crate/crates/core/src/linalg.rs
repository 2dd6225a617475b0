//! Dense complex linear algebra used throughout the crate.
//!
//! Matrices are `nalgebra` dynamic matrices over `Complex64`. The
//! vectorization convention is column-major everywhere, so that
//! `vec(X Y Z) = (Zᵀ ⊗ X) vec(Y)` holds with [`kron`] as defined here.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Relative diagonal loading applied to statistics-matrix inverses.
pub const DEFAULT_LOADING: f64 = 1e-10;

/// Relative asymmetry above which a matrix is not accepted as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-10;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Column-major stacking of a square matrix.
pub fn vec(m: &CMatrix) -> Result<CVector> {
    if !m.is_square() {
        return Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() });
    }
    Ok(CVector::from_column_slice(m.as_slice()))
}

/// Inverse of [`vec`] for an `n × n` matrix.
pub fn unvec(v: &CVector, n: usize) -> Result<CMatrix> {
    if v.len() != n * n {
        return Err(Error::Dimension(format!(
            "cannot unvec length {} into {n}x{n}",
            v.len()
        )));
    }
    Ok(CMatrix::from_column_slice(n, n, v.as_slice()))
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let mut out = CMatrix::zeros(a.nrows() * b.nrows(), a.ncols() * b.ncols());
    kron_add_into(&mut out, 0, 0, a, b, C64::new(1.0, 0.0));
    out
}

/// Adds `scale · (a ⊗ b)` into `dst` with the block's top-left corner at
/// `(row0, col0)`.
pub fn kron_add_into(
    dst: &mut CMatrix,
    row0: usize,
    col0: usize,
    a: &CMatrix,
    b: &CMatrix,
    scale: C64,
) {
    let (br, bc) = b.shape();
    for ja in 0..a.ncols() {
        for ia in 0..a.nrows() {
            let s = scale * a[(ia, ja)];
            if s == ZERO {
                continue;
            }
            for jb in 0..bc {
                let col = col0 + ja * bc + jb;
                for ib in 0..br {
                    dst[(row0 + ia * br + ib, col)] += s * b[(ib, jb)];
                }
            }
        }
    }
}

/// Adds `scale · x yᴴ` into `dst` with the block's top-left corner at
/// `(row0, col0)`.
pub fn outer_add_into(
    dst: &mut CMatrix,
    row0: usize,
    col0: usize,
    x: &[C64],
    y: &[C64],
    scale: f64,
) {
    for (j, yj) in y.iter().enumerate() {
        let s = yj.conj() * scale;
        if s == ZERO {
            continue;
        }
        for (i, xi) in x.iter().enumerate() {
            dst[(row0 + i, col0 + j)] += xi * s;
        }
    }
}

/// `tr(a b)` without forming the product.
pub fn trace_of_product(a: &CMatrix, b: &CMatrix) -> C64 {
    debug_assert_eq!(a.ncols(), b.nrows());
    debug_assert_eq!(a.nrows(), b.ncols());
    let mut acc = ZERO;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

/// Largest `|m_ij - conj(m_ji)|` relative to the largest entry magnitude.
pub fn hermitian_asymmetry(m: &CMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return 0.0;
    }
    let mut worst: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst / scale
}

pub fn is_hermitian(m: &CMatrix, tol: f64) -> bool {
    hermitian_asymmetry(m) <= tol
}

/// `(m + mᴴ) / 2`.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

fn ensure_hermitian(m: &CMatrix) -> Result<()> {
    if !m.is_square() {
        return Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() });
    }
    let asymmetry = hermitian_asymmetry(m);
    if asymmetry > HERMITIAN_TOL {
        return Err(Error::NotHermitian { asymmetry });
    }
    Ok(())
}

fn mean_real_diagonal(m: &CMatrix) -> f64 {
    let n = m.nrows().max(1);
    m.diagonal().iter().map(|z| z.re).sum::<f64>() / n as f64
}

/// Cholesky factor of a diagonally loaded Hermitian positive-definite
/// matrix `A + loading · (tr(A)/n) · I`.
#[derive(Debug, Clone)]
pub struct HpdFactor {
    chol: Cholesky<C64, Dyn>,
    condition: f64,
}

impl HpdFactor {
    pub fn new(a: &CMatrix, loading: f64) -> Result<Self> {
        ensure_hermitian(a)?;
        if !(loading >= 0.0) {
            return Err(Error::Config(format!("diagonal loading must be >= 0, got {loading}")));
        }
        let n = a.nrows();
        let mut loaded = hermitian_part(a);
        let shift = loading * mean_real_diagonal(a).abs();
        for i in 0..n {
            loaded[(i, i)] += shift;
        }
        let chol = Cholesky::new(loaded).ok_or_else(|| Error::Singular {
            condition: diagonal_condition(a),
        })?;
        let diag = chol.l_dirty().diagonal();
        let (lo, hi) = diag
            .iter()
            .map(|z| z.re)
            .fold((f64::INFINITY, 0.0_f64), |(lo, hi), d| (lo.min(d), hi.max(d)));
        if !(lo > 0.0) || !lo.is_finite() {
            return Err(Error::Singular { condition: f64::INFINITY });
        }
        Ok(Self { chol, condition: (hi / lo).powi(2) })
    }

    /// Cheap condition-number estimate from the Cholesky diagonal.
    pub fn condition_estimate(&self) -> f64 {
        self.condition
    }

    pub fn solve(&self, b: &CVector) -> CVector {
        self.chol.solve(b)
    }

    pub fn solve_matrix(&self, b: &CMatrix) -> CMatrix {
        self.chol.solve(b)
    }
}

fn diagonal_condition(a: &CMatrix) -> f64 {
    let (lo, hi) = a
        .diagonal()
        .iter()
        .map(|z| z.re.abs())
        .fold((f64::INFINITY, 0.0_f64), |(lo, hi), d| (lo.min(d), hi.max(d)));
    if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Solves `(A + loading · (tr(A)/n) · I) x = b` for Hermitian `A`.
pub fn hpd_solve(a: &CMatrix, b: &CVector, loading: f64) -> Result<CVector> {
    if b.len() != a.nrows() {
        return Err(Error::Dimension(format!(
            "rhs length {} does not match {}x{} system",
            b.len(),
            a.nrows(),
            a.ncols()
        )));
    }
    let factor = HpdFactor::new(a, loading)?;
    let x = factor.solve(b);
    let bnorm = b.norm();
    if bnorm > 0.0 {
        let shift = loading * mean_real_diagonal(a).abs();
        let residual = (a * &x + x.scale(shift) - b).norm() / bnorm;
        if !(residual <= 1e-8) {
            log::warn!(
                "hpd_solve degraded: relative residual {residual:.3e}, condition estimate {:.3e}",
                factor.condition_estimate()
            );
        }
    }
    Ok(x)
}

/// Maximizer of the generalized Rayleigh quotient `|xᴴb|² / (xᴴAx)`.
#[derive(Debug, Clone)]
pub struct RayleighMax {
    /// `A⁻¹ b` (any nonzero multiple is also optimal).
    pub x: CVector,
    /// `bᴴ A⁻¹ b`, the maximum quotient value.
    pub value: f64,
}

pub fn rayleigh_quotient_max(a: &CMatrix, b: &CVector, loading: f64) -> Result<RayleighMax> {
    let x = hpd_solve(a, b, loading)?;
    let value = b.dotc(&x).re.max(0.0);
    Ok(RayleighMax { x, value })
}

/// Same maximizer as [`rayleigh_quotient_max`], computed on the Jacobi-scaled
/// system `D^{-1/2} A D^{-1/2}` with `D = diag(A)`, so that the loading acts
/// relative to each diagonal entry rather than to their mean. Suited to
/// systems whose blocks differ by orders of magnitude in scale.
pub fn rayleigh_quotient_max_scaled(a: &CMatrix, b: &CVector, loading: f64) -> Result<RayleighMax> {
    let n = a.nrows();
    if b.len() != n {
        return Err(Error::Dimension(format!("rhs length {} does not match {n}x{n} system", b.len())));
    }
    let top = a.diagonal().iter().map(|z| z.re.abs()).fold(0.0_f64, f64::max);
    if top == 0.0 {
        return Err(Error::Singular { condition: f64::INFINITY });
    }
    let s: Vec<f64> = a.diagonal().iter().map(|z| 1.0 / z.re.abs().max(top * f64::EPSILON).sqrt()).collect();
    let scaled = CMatrix::from_fn(n, n, |i, j| a[(i, j)] * (s[i] * s[j]));
    let rhs = CVector::from_fn(n, |i, _| b[i] * s[i]);
    let u = hpd_solve(&scaled, &rhs, loading)?;
    let value = rhs.dotc(&u).re.max(0.0);
    let x = CVector::from_fn(n, |i, _| u[i] * s[i]);
    Ok(RayleighMax { x, value })
}

/// `|xᴴb|² / (xᴴAx)` for a given direction.
pub fn rayleigh_quotient(a: &CMatrix, b: &CVector, x: &CVector) -> f64 {
    let num = x.dotc(b).norm_sqr();
    let den = x.dotc(&(a * x)).re;
    if den <= 0.0 {
        0.0
    } else {
        num / den
    }
}

/// PSD square-root factor `L` with `L Lᴴ = cov`, computed from an
/// eigendecomposition with slightly negative eigenvalues clipped to zero.
pub fn psd_factor(cov: &CMatrix) -> Result<CMatrix> {
    ensure_hermitian(cov)?;
    let n = cov.nrows();
    let trace = cov.trace().re;
    if cov.iter().all(|z| *z == ZERO) {
        return Ok(CMatrix::zeros(n, n));
    }
    let eig = SymmetricEigen::new(hermitian_part(cov));
    let min_eigenvalue = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if min_eigenvalue < -1e-10 * trace.abs() {
        return Err(Error::Indefinite { min_eigenvalue, trace });
    }
    let floor = 1e-13 * trace.abs();
    let mut factor = eig.eigenvectors.clone();
    for (j, &lambda) in eig.eigenvalues.iter().enumerate() {
        let s = if lambda > floor { lambda.sqrt() } else { 0.0 };
        factor.column_mut(j).scale_mut(s);
    }
    Ok(factor)
}

/// Projects a Hermitian matrix onto the PSD cone (negative eigenvalues
/// set to zero).
pub fn psd_projection(m: &CMatrix) -> CMatrix {
    let eig = SymmetricEigen::new(hermitian_part(m));
    let mut v = eig.eigenvectors.clone();
    for (j, &lambda) in eig.eigenvalues.iter().enumerate() {
        v.column_mut(j).scale_mut(lambda.max(0.0).sqrt());
    }
    &v * v.adjoint()
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    SymmetricEigen::new(hermitian_part(m))
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

/// Seeded random stream; identical `(seed, stream)` pairs reproduce
/// identical draws.
#[derive(Debug, Clone)]
pub struct RngStream {
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng }
    }

    /// Uniform draw on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// Circularly-symmetric complex normal with unit variance.
    pub fn standard_complex(&mut self) -> C64 {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        C64::new(self.standard_normal() * s, self.standard_normal() * s)
    }

    pub fn complex_vector(&mut self, n: usize) -> CVector {
        CVector::from_fn(n, |_, _| self.standard_complex())
    }

    pub fn complex_matrix(&mut self, rows: usize, cols: usize) -> CMatrix {
        // column-major fill so the draw order is independent of nalgebra internals
        let data: Vec<C64> = (0..rows * cols).map(|_| self.standard_complex()).collect();
        CMatrix::from_column_slice(rows, cols, &data)
    }
}

/// Reusable sampler for `CN(mean, cov)`.
#[derive(Debug, Clone)]
pub struct CscgSampler {
    mean: CVector,
    factor: CMatrix,
    zero_cov: bool,
}

impl CscgSampler {
    pub fn new(mean: CVector, cov: &CMatrix) -> Result<Self> {
        if cov.nrows() != mean.len() {
            return Err(Error::Dimension(format!(
                "mean length {} vs covariance {}x{}",
                mean.len(),
                cov.nrows(),
                cov.ncols()
            )));
        }
        let factor = psd_factor(cov)?;
        let zero_cov = factor.iter().all(|z| *z == ZERO);
        Ok(Self { mean, factor, zero_cov })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &CVector {
        &self.mean
    }

    /// Draws one sample into `out`.
    pub fn sample_into(&self, rng: &mut RngStream, out: &mut CVector) {
        let n = self.mean.len();
        out.copy_from(&self.mean);
        if self.zero_cov {
            return;
        }
        for j in 0..n {
            let z = rng.standard_complex();
            for i in 0..n {
                out[i] += self.factor[(i, j)] * z;
            }
        }
    }

    pub fn sample(&self, rng: &mut RngStream) -> CVector {
        let mut out = CVector::zeros(self.mean.len());
        self.sample_into(rng, &mut out);
        out
    }
}

/// One draw from `CN(mean, cov)`.
pub fn sample_cscg(mean: &CVector, cov: &CMatrix, rng: &mut RngStream) -> Result<CVector> {
    Ok(CscgSampler::new(mean.clone(), cov)?.sample(rng))
}
