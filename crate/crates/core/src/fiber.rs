//! Uniform sampling from the fiber of the Rayleigh map over a triangle.
//!
//! Given `P`, the matrix is grown one leading block at a time. With
//! `S[k-1]` already built and diagonalized as `U diag(P_{.,k-1}) U*`, the
//! Hermitian matrices
//!
//! ```text
//! S[k] = [ S[k-1]   U v ]
//!        [ (U v)*   c   ]
//! ```
//!
//! with spectrum `P_{.,k}` are exactly those with `c` equal to the row-sum
//! difference and with the blocks of `v` (grouped by equal eigenvalues of
//! `S[k-1]`) lying on complex spheres of computable radii. Drawing each block
//! uniformly on its sphere gives the uniform law on the fiber.

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::gt::{cluster_runs, RayleighTriangle, MEMBERSHIP_TOL};
use crate::linalg::{hermitian_eigendecompose, sample_complex_sphere, HermitianMatrix, C64};

/// Tolerance for matching a leading block's spectrum to its triangle row.
pub const SPECTRUM_MATCH_TOL: f64 = 1e-8;

/// Distinct values of row `k-1` with multiplicities, and row `k` with the
/// forced repeated copies removed.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedSpectrum {
    /// `delta_1 > ... > delta_m`.
    pub deltas: Vec<f64>,
    pub mults: Vec<usize>,
    /// `mu_1 >= ... >= mu_{m+1}`.
    pub mu: Vec<f64>,
}

/// One extension step `S[k-1] -> S[k]`.
#[derive(Debug, Clone)]
pub struct FiberStep {
    pub c: f64,
    pub radii: Vec<f64>,
    /// Coordinates of the new column in the eigenbasis of `S[k-1]`.
    pub v: Vec<C64>,
    pub reduced: ReducedSpectrum,
}

impl FiberStep {
    /// Squared norm of the block of `v` belonging to `delta_i`.
    pub fn block_norm_sqr(&self, i: usize) -> f64 {
        let start: usize = self.reduced.mults[..i].iter().sum();
        self.v[start..start + self.reduced.mults[i]]
            .iter()
            .map(|z| z.norm_sqr())
            .sum()
    }

    /// Both sides of the reduced characteristic-polynomial identity at `t`:
    /// `prod_j (t - mu_j)` and
    /// `(t - c) prod_j (t - delta_j) - sum_i |v_i|^2 prod_{j != i} (t - delta_j)`.
    pub fn charpoly_sides(&self, t: f64) -> (f64, f64) {
        let rs = &self.reduced;
        let lhs: f64 = rs.mu.iter().map(|m| t - m).product();
        let full: f64 = rs.deltas.iter().map(|d| t - d).product();
        let mut rhs = (t - self.c) * full;
        for i in 0..rs.deltas.len() {
            let others: f64 = rs
                .deltas
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, d)| t - d)
                .product();
            rhs -= self.block_norm_sqr(i) * others;
        }
        (lhs, rhs)
    }

    /// Sum of the absolute values of the terms in [`FiberStep::charpoly_sides`],
    /// the natural scale for comparing the two sides.
    pub fn charpoly_magnitude(&self, t: f64) -> f64 {
        let rs = &self.reduced;
        let lhs: f64 = rs.mu.iter().map(|m| (t - m).abs()).product();
        let full: f64 = rs.deltas.iter().map(|d| (t - d).abs()).product();
        let mut total = lhs + (t - self.c).abs() * full;
        for i in 0..rs.deltas.len() {
            let others: f64 = rs
                .deltas
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, d)| (t - d).abs())
                .product();
            total += self.block_norm_sqr(i) * others;
        }
        total
    }
}

fn spread(row: &[f64]) -> f64 {
    match (row.first(), row.last()) {
        (Some(a), Some(b)) => (a - b).abs(),
        _ => 0.0,
    }
}

/// Default clustering tolerance for a triangle whose top row is `top`.
pub fn default_cluster_tol(top: &[f64]) -> f64 {
    1e-8 * (1.0 + spread(top))
}

/// Groups `row_km1` into distinct values and strips `n_i - 1` copies of
/// each `delta_i` from `row_k`.
pub fn reduced_spectrum(row_k: &[f64], row_km1: &[f64], tol: f64) -> Result<ReducedSpectrum> {
    if row_k.len() != row_km1.len() + 1 || row_km1.is_empty() {
        return Err(Error::Domain(format!(
            "rows of length {} and {} are not consecutive",
            row_k.len(),
            row_km1.len()
        )));
    }
    let runs = cluster_runs(row_km1, tol);
    let mut deltas = Vec::with_capacity(runs.len());
    let mut mults = Vec::with_capacity(runs.len());
    for &(p, q) in &runs {
        deltas.push(row_km1[p..=q].iter().sum::<f64>() / (q - p + 1) as f64);
        mults.push(q - p + 1);
    }

    let mut remaining: Vec<Option<f64>> = row_k.iter().copied().map(Some).collect();
    for (&delta, &mult) in deltas.iter().zip(&mults) {
        for _ in 1..mult {
            let nearest = remaining
                .iter()
                .enumerate()
                .filter_map(|(idx, x)| x.map(|x| (idx, (x - delta).abs())))
                .min_by(|a, b| a.1.total_cmp(&b.1));
            match nearest {
                Some((idx, dist)) if dist <= tol => remaining[idx] = None,
                _ => {
                    return Err(Error::Inconsistency(format!(
                        "value {delta} repeated {mult} times in row {} but missing from row {}",
                        row_km1.len(),
                        row_k.len()
                    )))
                }
            }
        }
    }
    let mu: Vec<f64> = remaining.into_iter().flatten().collect();

    let slack = tol.max(MEMBERSHIP_TOL);
    for (i, &d) in deltas.iter().enumerate() {
        if mu[i] < d - slack || d < mu[i + 1] - slack {
            return Err(Error::Inconsistency(format!(
                "rows {} and {} do not interlace",
                row_km1.len(),
                row_k.len()
            )));
        }
    }
    Ok(ReducedSpectrum { deltas, mults, mu })
}

/// Radii `r_i = sqrt(-prod_j (delta_i - mu_j) / prod_{j != i} (delta_i - delta_j))`.
///
/// Slightly negative radicands from rounding are clamped to zero.
pub fn sphere_radii(rs: &ReducedSpectrum) -> Result<Vec<f64>> {
    let scale = rs
        .mu
        .iter()
        .chain(&rs.deltas)
        .fold(1.0f64, |acc, x| acc.max(x.abs()));
    let clamp = 1e-12 * scale * scale;
    rs.deltas
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            let num: f64 = rs.mu.iter().map(|m| d - m).product();
            let den: f64 = rs
                .deltas
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, e)| d - e)
                .product();
            let radicand = -num / den;
            if radicand >= 0.0 {
                Ok(radicand.sqrt())
            } else if radicand >= -clamp {
                Ok(0.0)
            } else {
                Err(Error::Inconsistency(format!(
                    "negative squared radius {radicand:e} for eigenvalue {d}"
                )))
            }
        })
        .collect()
}

/// Draws `S[k]` uniformly among Hermitian matrices with leading block
/// `s_prev` and spectrum `row_k`.
pub fn extend_submatrix<R: Rng + ?Sized>(
    s_prev: &HermitianMatrix,
    row_k: &[f64],
    row_km1: &[f64],
    rng: &mut R,
) -> Result<HermitianMatrix> {
    extend_submatrix_traced(s_prev, row_k, row_km1, default_cluster_tol(row_k), rng).map(|(s, _)| s)
}

/// [`extend_submatrix`] with an explicit clustering tolerance, also
/// returning the step data.
pub fn extend_submatrix_traced<R: Rng + ?Sized>(
    s_prev: &HermitianMatrix,
    row_k: &[f64],
    row_km1: &[f64],
    tol: f64,
    rng: &mut R,
) -> Result<(HermitianMatrix, FiberStep)> {
    let k = row_k.len();
    if s_prev.dim() + 1 != k || row_km1.len() + 1 != k {
        return Err(Error::Domain("extension sizes do not match".into()));
    }
    let decomp = hermitian_eigendecompose(s_prev)?;
    let match_tol = SPECTRUM_MATCH_TOL * (1.0 + spread(row_k).max(s_prev.max_abs()));
    for (got, want) in decomp.eigenvalues.iter().zip(row_km1) {
        if (got - want).abs() > match_tol {
            return Err(Error::Precondition(format!(
                "leading block has eigenvalue {got}, triangle row says {want}"
            )));
        }
    }

    let c = row_k.iter().sum::<f64>() - row_km1.iter().sum::<f64>();
    let reduced = reduced_spectrum(row_k, row_km1, tol)?;
    let radii = sphere_radii(&reduced)?;
    let mut v = Vec::with_capacity(k - 1);
    for (&mult, &r) in reduced.mults.iter().zip(&radii) {
        v.extend(sample_complex_sphere(mult, r, rng)?);
    }

    let u = decomp.eigenvectors.as_matrix();
    let mut m = DMatrix::<C64>::zeros(k, k);
    m.view_mut((0, 0), (k - 1, k - 1))
        .copy_from(s_prev.as_matrix());
    for row in 0..k - 1 {
        let w: C64 = (0..k - 1).map(|col| u[(row, col)] * v[col]).sum();
        m[(row, k - 1)] = w;
        m[(k - 1, row)] = w.conj();
    }
    m[(k - 1, k - 1)] = C64::new(c, 0.0);
    let step = FiberStep {
        c,
        radii,
        v,
        reduced,
    };
    Ok((HermitianMatrix::symmetrized(m), step))
}

/// Uniform random matrix `S` with `rayleigh_map(S) = P`.
pub fn sample_fiber<R: Rng + ?Sized>(p: &RayleighTriangle, rng: &mut R) -> Result<HermitianMatrix> {
    sample_fiber_traced(p, rng, |_, _| {})
}

/// [`sample_fiber`], calling `observe(k, step)` after each extension.
pub fn sample_fiber_traced<R, F>(
    p: &RayleighTriangle,
    rng: &mut R,
    mut observe: F,
) -> Result<HermitianMatrix>
where
    R: Rng + ?Sized,
    F: FnMut(usize, &FiberStep),
{
    let tol = default_cluster_tol(p.top_row());
    if !p.is_interlacing(tol.max(MEMBERSHIP_TOL)) {
        return Err(Error::Inconsistency("triangle does not interlace".into()));
    }
    let mut s = HermitianMatrix::from_real_diagonal(&[p.entry(1, 1)])?;
    for k in 2..=p.n() {
        let (next, step) = extend_submatrix_traced(&s, p.row(k), p.row(k - 1), tol, rng)?;
        observe(k, &step);
        s = next;
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gt::rayleigh_map;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn reduced_spectrum_examples() {
        let rs = reduced_spectrum(&[1.0, 0.0], &[0.5], 1e-8).unwrap();
        assert_eq!(
            rs,
            ReducedSpectrum {
                deltas: vec![0.5],
                mults: vec![1],
                mu: vec![1.0, 0.0]
            }
        );

        let rs = reduced_spectrum(&[1.0, 0.5, 0.0], &[0.5, 0.5], 1e-8).unwrap();
        assert_eq!(
            rs,
            ReducedSpectrum {
                deltas: vec![0.5],
                mults: vec![2],
                mu: vec![1.0, 0.0]
            }
        );

        let rs = reduced_spectrum(&[1.0, 1.0, 0.0], &[1.0, 0.5], 1e-8).unwrap();
        assert_eq!(rs.deltas, vec![1.0, 0.5]);
        assert_eq!(rs.mults, vec![1, 1]);
        assert_eq!(rs.mu, vec![1.0, 1.0, 0.0]);
    }

    #[test]
    fn reduced_spectrum_detects_missing_copy() {
        // 0.5 has multiplicity 2 below, so row k must contain 0.5 at least once.
        let err = reduced_spectrum(&[1.0, 0.4, 0.0], &[0.5, 0.5], 1e-8).unwrap_err();
        assert!(matches!(err, Error::Inconsistency(_)));
        assert!(reduced_spectrum(&[1.0, 0.0], &[1.5], 1e-8).is_err());
    }

    #[test]
    fn radii_examples() {
        let rs = reduced_spectrum(&[1.0, 0.0], &[0.5], 1e-8).unwrap();
        assert!((sphere_radii(&rs).unwrap()[0] - 0.5).abs() < 1e-15);

        let rs = reduced_spectrum(&[1.0, 1.0, 0.0], &[1.0, 0.5], 1e-8).unwrap();
        let r = sphere_radii(&rs).unwrap();
        assert_eq!(r[0], 0.0);
        assert!((r[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn radii_reject_corrupt_input() {
        let rs = ReducedSpectrum {
            deltas: vec![0.5],
            mults: vec![1],
            mu: vec![0.4, 0.0],
        };
        assert!(matches!(sphere_radii(&rs), Err(Error::Inconsistency(_))));
    }

    /// Characteristic polynomial of a 2x2 Hermitian matrix from its entries.
    fn charpoly2(m: &HermitianMatrix, t: f64) -> f64 {
        let a = m.entry(0, 0).re;
        let d = m.entry(1, 1).re;
        (t - a) * (t - d) - m.entry(0, 1).norm_sqr()
    }

    #[test]
    fn extend_rank_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s1 = HermitianMatrix::from_real_diagonal(&[0.5]).unwrap();
        let s = extend_submatrix(&s1, &[1.0, 0.0], &[0.5], &mut rng).unwrap();
        assert!((s.entry(1, 1).re - 0.5).abs() < 1e-15);
        assert!((s.entry(0, 1).norm() - 0.5).abs() < 1e-15);
        // Roots of the characteristic polynomial are 1 and 0.
        assert!(charpoly2(&s, 1.0).abs() < 1e-15 && charpoly2(&s, 0.0).abs() < 1e-15);
    }

    #[test]
    fn extend_trace_differencing() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s2 = HermitianMatrix::from_real_diagonal(&[1.0, 0.0]).unwrap();
        let (s, step) =
            extend_submatrix_traced(&s2, &[1.0, 0.5, 0.0], &[1.0, 0.0], 1e-8, &mut rng).unwrap();
        assert!((step.c - 0.5).abs() < 1e-15);
        let mut eig = s.eigenvalues();
        eig.iter_mut()
            .zip([1.0, 0.5, 0.0])
            .for_each(|(a, b)| *a -= b);
        assert!(eig.iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn extend_repeated_delta_samples_one_sphere() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s2 = HermitianMatrix::from_real_diagonal(&[0.5, 0.5]).unwrap();
        for _ in 0..100 {
            let (s, step) =
                extend_submatrix_traced(&s2, &[1.0, 0.5, 0.0], &[0.5, 0.5], 1e-8, &mut rng)
                    .unwrap();
            assert_eq!(step.reduced.mults, vec![2]);
            assert!((step.radii[0] - 0.5).abs() < 1e-15);
            assert!((step.block_norm_sqr(0) - 0.25).abs() < 1e-14);
            // Evaluate the reduced identity at t = delta and elsewhere.
            for t in [0.5, -1.0, 0.3, 2.0] {
                let (l, r) = step.charpoly_sides(t);
                assert!((l - r).abs() < 1e-13);
            }
            let eig = s.eigenvalues();
            assert!(
                (eig[0] - 1.0).abs() < 1e-12
                    && (eig[1] - 0.5).abs() < 1e-12
                    && eig[2].abs() < 1e-12
            );
        }
    }

    #[test]
    fn extend_rejects_wrong_leading_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s1 = HermitianMatrix::from_real_diagonal(&[0.3]).unwrap();
        let err = extend_submatrix(&s1, &[1.0, 0.0], &[0.5], &mut rng).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }

    #[test]
    fn fiber_of_size_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = RayleighTriangle::from_rows(&[vec![2.5]]).unwrap();
        let s = sample_fiber(&p, &mut rng).unwrap();
        assert_eq!(s.dim(), 1);
        assert_eq!(s.entry(0, 0).re, 2.5);
    }

    #[test]
    fn fiber_rank_one_phase_is_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let p = RayleighTriangle::from_rows(&[vec![0.5], vec![1.0, 0.0]]).unwrap();
        let mut phases: Vec<f64> = (0..10_000)
            .map(|_| {
                let s = sample_fiber(&p, &mut rng).unwrap();
                assert!((s.entry(0, 0).re - 0.5).abs() < 1e-15);
                assert!((s.entry(1, 1).re - 0.5).abs() < 1e-15);
                assert!((s.entry(0, 1).norm() - 0.5).abs() < 1e-15);
                let arg = s.entry(0, 1).arg();
                (arg + std::f64::consts::PI) / (2.0 * std::f64::consts::PI)
            })
            .collect();
        let ks = crate::stats::ks_one_sample(&mut phases, |x| x.clamp(0.0, 1.0));
        assert!(ks.p_value > 0.01, "{ks:?}");
    }

    #[test]
    fn fiber_rejects_non_interlacing_triangle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let p = RayleighTriangle::from_rows(&[vec![1.5], vec![1.0, 0.0]]).unwrap();
        assert!(matches!(
            sample_fiber(&p, &mut rng),
            Err(Error::Inconsistency(_))
        ));
    }

    #[test]
    fn fiber_round_trip_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let p =
            RayleighTriangle::from_rows(&[vec![1.0], vec![1.5, 0.5], vec![2.0, 1.0, 0.0]]).unwrap();
        for _ in 0..200 {
            let s = sample_fiber(&p, &mut rng).unwrap();
            assert!(rayleigh_map(&s).max_abs_diff(&p) < 1e-12);
        }
    }
}
