//! Dense complex Hermitian and unitary matrices, a deterministic Hermitian
//! eigendecomposition, and the exact randomness primitives (Haar unitaries,
//! uniform points on complex spheres) used by the rest of the pipeline.
//!
//! Matrices are backed by `nalgebra::DMatrix<Complex<f64>>`. Both wrapper
//! types check their structural invariant once at construction and are
//! immutable afterwards.

use nalgebra::DMatrix;
use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{domain, Error, Result};

pub type C64 = Complex<f64>;

/// Per-entry Hermitian symmetry tolerance, scaled by `1 + max|entry|`.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Max-abs deviation of `U U*` from the identity accepted for a unitary.
pub const UNITARY_TOL: f64 = 1e-10;

/// A dense complex Hermitian matrix.
///
/// Construction symmetrizes the input, so the stored entries are exactly
/// Hermitian and the diagonal is exactly real.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    data: DMatrix<C64>,
}

impl HermitianMatrix {
    /// Validates `m` against the Hermitian invariant and normalizes it to
    /// `(m + m*)/2`.
    pub fn new(m: DMatrix<C64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Structural(format!(
                "matrix is {}x{}, not square",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.nrows() == 0 {
            return domain("Hermitian matrix must have dimension >= 1");
        }
        let n = m.nrows();
        let scale = 1.0 + max_abs(&m);
        for i in 0..n {
            for j in i..n {
                let dev = (m[(i, j)] - m[(j, i)].conj()).norm();
                if !(dev <= HERMITIAN_TOL * scale) {
                    return Err(Error::Structural(format!(
                        "entry ({i},{j}) deviates from Hermitian symmetry by {dev:e}"
                    )));
                }
            }
        }
        Ok(Self::symmetrized(m))
    }

    /// Hermitian part of an arbitrary square matrix, without validation.
    pub(crate) fn symmetrized(m: DMatrix<C64>) -> Self {
        let n = m.nrows();
        let mut out = m;
        for i in 0..n {
            out[(i, i)] = C64::new(out[(i, i)].re, 0.0);
            for j in (i + 1)..n {
                let avg = (out[(i, j)] + out[(j, i)].conj()) * 0.5;
                out[(i, j)] = avg;
                out[(j, i)] = avg.conj();
            }
        }
        Self { data: out }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Result<Self> {
        if diag.is_empty() {
            return domain("Hermitian matrix must have dimension >= 1");
        }
        let n = diag.len();
        let m = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                C64::new(diag[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        Ok(Self { data: m })
    }

    /// Embeds a real symmetric matrix.
    pub fn from_real_symmetric(m: &DMatrix<f64>) -> Result<Self> {
        Self::new(m.map(|x| C64::new(x, 0.0)))
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn entry(&self, i: usize, j: usize) -> C64 {
        self.data[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<C64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.data
    }

    /// Real diagonal.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.data[(i, i)].re).collect()
    }

    pub fn trace(&self) -> f64 {
        self.diagonal().iter().sum()
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.data)
    }

    /// The leading `k x k` principal submatrix.
    pub fn leading(&self, k: usize) -> HermitianMatrix {
        assert!(k >= 1 && k <= self.dim(), "leading block size out of range");
        Self {
            data: self.data.view((0, 0), (k, k)).into_owned(),
        }
    }

    /// Frobenius inner product `Re tr(self* other)`.
    pub fn inner(&self, other: &HermitianMatrix) -> f64 {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| (a.conj() * b).re)
            .sum()
    }

    /// `U H U*`.
    pub fn conjugate_by(&self, u: &UnitaryMatrix) -> HermitianMatrix {
        assert_eq!(self.dim(), u.dim(), "dimension mismatch");
        let m = &u.data * &self.data * u.data.adjoint();
        Self::symmetrized(m)
    }

    /// `U* H U`.
    pub fn conjugate_by_adjoint(&self, u: &UnitaryMatrix) -> HermitianMatrix {
        assert_eq!(self.dim(), u.dim(), "dimension mismatch");
        let m = u.data.adjoint() * &self.data * &u.data;
        Self::symmetrized(m)
    }

    /// Eigenvalues sorted non-increasing (no eigenvectors).
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut vals: Vec<f64> = self.data.symmetric_eigenvalues().iter().copied().collect();
        vals.sort_by(|a, b| b.total_cmp(a));
        vals
    }

    /// True when every off-diagonal entry is zero within `tol`.
    pub fn is_diagonal(&self, tol: f64) -> bool {
        let n = self.dim();
        (0..n).all(|i| (0..n).all(|j| i == j || self.data[(i, j)].norm() <= tol))
    }
}

/// A dense complex unitary matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryMatrix {
    data: DMatrix<C64>,
}

impl UnitaryMatrix {
    pub fn new(m: DMatrix<C64>) -> Result<Self> {
        if !m.is_square() || m.nrows() == 0 {
            return Err(Error::Structural(
                "unitary matrix must be square and non-empty".into(),
            ));
        }
        let dev = unitarity_defect(&m);
        if !(dev <= UNITARY_TOL) {
            return Err(Error::Structural(format!(
                "U U* deviates from the identity by {dev:e}"
            )));
        }
        Ok(Self { data: m })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            data: DMatrix::identity(n, n),
        }
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn entry(&self, i: usize, j: usize) -> C64 {
        self.data[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<C64> {
        &self.data
    }

    pub fn adjoint(&self) -> UnitaryMatrix {
        Self {
            data: self.data.adjoint(),
        }
    }

    /// Max-abs deviation of `U U*` from the identity.
    pub fn defect(&self) -> f64 {
        unitarity_defect(&self.data)
    }
}

fn unitarity_defect(m: &DMatrix<C64>) -> f64 {
    let n = m.nrows();
    let prod = m * m.adjoint();
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((prod[(i, j)] - C64::new(target, 0.0)).norm());
        }
    }
    dev
}

fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Eigenvalues sorted non-increasing together with the matching
/// orthonormal eigenvectors (as columns).
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: UnitaryMatrix,
}

impl SpectralDecomposition {
    /// `U diag(vals) U*`.
    pub fn reconstruct(&self) -> HermitianMatrix {
        let d = HermitianMatrix::from_real_diagonal(&self.eigenvalues)
            .expect("decomposition has at least one eigenvalue");
        d.conjugate_by(&self.eigenvectors)
    }
}

/// Eigendecomposition of a Hermitian matrix.
///
/// Eigenvalues come out sorted non-increasing. Each eigenvector is scaled
/// so that its first component of modulus above `1e-8` is real positive,
/// which makes the output a deterministic function of the input.
pub fn hermitian_eigendecompose(h: &HermitianMatrix) -> Result<SpectralDecomposition> {
    let n = h.dim();
    let eig = nalgebra::SymmetricEigen::try_new(h.data.clone(), f64::EPSILON, 0)
        .ok_or_else(|| Error::Structural("eigensolver failed to converge".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = DMatrix::<C64>::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        let v = eig.eigenvectors.column(k);
        let pivot = v
            .iter()
            .find(|z| z.norm() > 1e-8)
            .copied()
            .unwrap_or(C64::new(1.0, 0.0));
        let phase = pivot.conj() / pivot.norm();
        for row in 0..n {
            vectors[(row, col)] = v[row] * phase;
        }
    }
    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors: UnitaryMatrix { data: vectors },
    })
}

/// A standard complex Gaussian `(X + iY)/sqrt(2)`, `E|z|^2 = 1`.
pub fn standard_complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Haar-distributed element of `U(n)`.
///
/// Orthonormalizes the columns of a complex Ginibre matrix by Gram–Schmidt
/// with one reorthogonalization pass. Gram–Schmidt yields the QR factor with
/// positive real diagonal in `R`, which is exactly the Haar-invariant choice.
pub fn sample_haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<UnitaryMatrix> {
    if n == 0 {
        return domain("Haar unitary requires n >= 1");
    }
    let mut m = DMatrix::<C64>::from_fn(n, n, |_, _| standard_complex_normal(rng));
    for j in 0..n {
        for _pass in 0..2 {
            for k in 0..j {
                let mut proj = C64::new(0.0, 0.0);
                for r in 0..n {
                    proj += m[(r, k)].conj() * m[(r, j)];
                }
                for r in 0..n {
                    let q = m[(r, k)];
                    m[(r, j)] -= q * proj;
                }
            }
        }
        let norm = (0..n).map(|r| m[(r, j)].norm_sqr()).sum::<f64>().sqrt();
        for r in 0..n {
            m[(r, j)] /= norm;
        }
    }
    Ok(UnitaryMatrix { data: m })
}

/// Uniform point on the sphere of the given radius in `C^dim`.
pub fn sample_complex_sphere<R: Rng + ?Sized>(
    dim: usize,
    radius: f64,
    rng: &mut R,
) -> Result<Vec<C64>> {
    if dim == 0 {
        return domain("complex sphere requires dim >= 1");
    }
    if !(radius >= 0.0) || !radius.is_finite() {
        return domain(format!(
            "sphere radius must be finite and >= 0, got {radius}"
        ));
    }
    if radius == 0.0 {
        return Ok(vec![C64::new(0.0, 0.0); dim]);
    }
    loop {
        let v: Vec<C64> = (0..dim).map(|_| standard_complex_normal(rng)).collect();
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-300 {
            return Ok(v.into_iter().map(|z| z * (radius / norm)).collect());
        }
    }
}
