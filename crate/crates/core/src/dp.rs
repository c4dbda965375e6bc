//! Differentially private rank-k projections by the exponential mechanism.
//!
//! Given a PSD matrix `A` with eigenvalues `gamma`, the mechanism outputs a
//! rank-k orthogonal projection `P` with density proportional to
//! `exp((epsilon / (4 sigma)) <A, P>)`, sampled as an orbit problem with
//! `lambda = (1^k, 0^{d-k})` in infinity-divergence mode with
//! `xi = epsilon / 2`.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::linalg::{hermitian_eigendecompose, HermitianMatrix, UnitaryMatrix, C64};
use crate::orbit::{sample_orbit, sample_orbit_batch, OrbitProblem};
use crate::sampler::{Mode, SamplerConfig};
use crate::stats::truncated_exponential_mean;

/// Tolerance for the projection checks on mechanism output.
pub const PROJECTION_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DpConfig {
    pub epsilon: f64,
    pub k: usize,
    pub sensitivity_sigma: f64,
    /// Failure probability for the utility bound, in `(0, 1)`.
    pub utility_delta: f64,
    pub utility_constant: f64,
}

impl DpConfig {
    pub fn new(epsilon: f64, k: usize) -> Self {
        Self {
            epsilon,
            k,
            sensitivity_sigma: 1.0,
            utility_delta: 0.1,
            utility_constant: 16.0,
        }
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return domain(format!(
                "epsilon must be positive and finite, got {}",
                self.epsilon
            ));
        }
        if self.k < 1 || self.k > d {
            return domain(format!("rank k = {} outside 1..={d}", self.k));
        }
        if !(self.sensitivity_sigma > 0.0) {
            return domain("sensitivity must be positive");
        }
        if !(self.utility_delta > 0.0 && self.utility_delta < 1.0) {
            return domain("utility delta must lie in (0, 1)");
        }
        Ok(())
    }

    /// Scale applied to the eigenvalues of `A`.
    pub fn coupling_scale(&self) -> f64 {
        self.epsilon / (4.0 * self.sensitivity_sigma)
    }

    /// Infinity-divergence target handed to the sampler.
    pub fn xi(&self) -> f64 {
        self.epsilon / 2.0
    }
}

/// A rank-k orthogonal projection.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionSample {
    pub p: HermitianMatrix,
    pub rank: usize,
}

impl ProjectionSample {
    /// Largest of `max|P^2 - P|` and `|tr P - k|`.
    pub fn defect(&self) -> f64 {
        let m = self.p.as_matrix();
        let idem = (m * m - m).iter().fold(0.0f64, |acc, z| acc.max(z.norm()));
        idem.max((self.p.trace() - self.rank as f64).abs())
    }

    pub fn is_valid(&self) -> bool {
        self.defect() <= PROJECTION_TOL
    }
}

/// Eigenvalues of a PSD input (descending) and its eigenbasis.
fn psd_decomposition(a: &HermitianMatrix) -> Result<(Vec<f64>, UnitaryMatrix)> {
    let d = hermitian_eigendecompose(a)?;
    let tol = 1e-10 * (1.0 + a.max_abs());
    if let Some(&min) = d.eigenvalues.last() {
        if min < -tol {
            return domain(format!("input is not PSD: smallest eigenvalue {min:e}"));
        }
    }
    Ok((d.eigenvalues, d.eigenvectors))
}

fn projector_spectrum(d: usize, k: usize) -> Vec<f64> {
    (0..d).map(|i| if i < k { 1.0 } else { 0.0 }).collect()
}

/// The sampler settings actually used: `template` with the mode forced to
/// `inf` and `xi = epsilon / 2`.
pub fn mechanism_sampler(cfg: &DpConfig, template: &SamplerConfig) -> SamplerConfig {
    let mut s = template.clone();
    s.mode = Mode::Inf;
    s.xi = cfg.xi();
    s
}

fn identity_sample(d: usize) -> ProjectionSample {
    ProjectionSample {
        p: HermitianMatrix::from_real_diagonal(&vec![1.0; d]).expect("d >= 1"),
        rank: d,
    }
}

/// One draw of the mechanism on PSD `a`.
pub fn dp_rank_k_projection<R: Rng + ?Sized>(
    a: &HermitianMatrix,
    cfg: &DpConfig,
    template: &SamplerConfig,
    rng: &mut R,
) -> Result<ProjectionSample> {
    let d = a.dim();
    cfg.validate(d)?;
    let (gamma, u) = psd_decomposition(a)?;
    if cfg.k == d {
        return Ok(identity_sample(d));
    }
    let y = gamma.iter().map(|g| g * cfg.coupling_scale()).collect();
    let prob = OrbitProblem::diagonal(projector_spectrum(d, cfg.k), y)?;
    let x = sample_orbit(&prob, &mechanism_sampler(cfg, template), rng)?;
    Ok(ProjectionSample {
        p: x.conjugate_by(&u),
        rank: cfg.k,
    })
}

/// [`dp_rank_k_projection`] for a real symmetric input.
pub fn dp_rank_k_projection_real<R: Rng + ?Sized>(
    a: &DMatrix<f64>,
    cfg: &DpConfig,
    template: &SamplerConfig,
    rng: &mut R,
) -> Result<ProjectionSample> {
    dp_rank_k_projection(
        &HermitianMatrix::from_real_symmetric(a)?,
        cfg,
        template,
        rng,
    )
}

/// `total` draws over parallel chains seeded from `template.seed`.
pub fn dp_rank_k_projection_batch(
    a: &HermitianMatrix,
    cfg: &DpConfig,
    template: &SamplerConfig,
    total: usize,
) -> Result<Vec<ProjectionSample>> {
    let d = a.dim();
    cfg.validate(d)?;
    let (gamma, u) = psd_decomposition(a)?;
    if cfg.k == d {
        return Ok(vec![identity_sample(d); total]);
    }
    let y = gamma.iter().map(|g| g * cfg.coupling_scale()).collect();
    let prob = OrbitProblem::diagonal(projector_spectrum(d, cfg.k), y)?;
    let batch = sample_orbit_batch(&prob, &mechanism_sampler(cfg, template), total)?;
    Ok(batch
        .flattened()
        .map(|x| ProjectionSample {
            p: x.conjugate_by(&u),
            rank: cfg.k,
        })
        .collect())
}

/// `A - v1 v1* + v2 v2*`, an input adjacent to `a` when `|v1|, |v2| <= 1`.
pub fn adjacent_input(a: &HermitianMatrix, v1: &[C64], v2: &[C64]) -> Result<HermitianMatrix> {
    let d = a.dim();
    if v1.len() != d || v2.len() != d {
        return domain("vectors must match the matrix size");
    }
    for v in [v1, v2] {
        if v.iter().map(|z| z.norm_sqr()).sum::<f64>() > 1.0 + 1e-12 {
            return domain("adjacency vectors must have norm at most 1");
        }
    }
    let m = DMatrix::from_fn(d, d, |i, j| {
        a.entry(i, j) - v1[i] * v1[j].conj() + v2[i] * v2[j].conj()
    });
    HermitianMatrix::new(m)
}

/// `|<A, P> - <A', P>|`, at most 1 for adjacent inputs.
pub fn sensitivity_check(
    a: &HermitianMatrix,
    a_prime: &HermitianMatrix,
    p: &ProjectionSample,
) -> f64 {
    (a.inner(&p.p) - a_prime.inner(&p.p)).abs()
}

/// `log` of the covering number bound `(1 + 8/zeta)^{2dk}` for rank-k
/// projections at scale `zeta`.
pub fn covering_bound(d: usize, k: usize, zeta: f64) -> Result<f64> {
    if !(zeta > 0.0) {
        return domain("zeta must be positive");
    }
    Ok(2.0 * (d * k) as f64 * (8.0 / zeta).ln_1p())
}

/// `C d k log(1/delta) / (epsilon delta)`: the top-k eigenvalue mass above
/// which the utility guarantee applies.
pub fn utility_threshold(d: usize, k: usize, cfg: &DpConfig) -> Result<f64> {
    if !(cfg.utility_delta > 0.0 && cfg.utility_delta < 1.0) {
        return domain("utility delta must lie in (0, 1)");
    }
    if !(cfg.epsilon > 0.0) {
        return domain("epsilon must be positive");
    }
    let delta = cfg.utility_delta;
    Ok(cfg.utility_constant * (d * k) as f64 * (1.0 / delta).ln() / (cfg.epsilon * delta))
}

/// Exact `E <A, P>` for `d = 2`, `k = 1` and eigenvalues `g1 >= g2`:
/// the top-eigenvector overlap has density proportional to
/// `exp(scale (g1 - g2) x)` on `[0, 1]`.
pub fn rank_one_expected_score(g1: f64, g2: f64, cfg: &DpConfig) -> f64 {
    let beta = cfg.coupling_scale() * (g1 - g2);
    g2 + (g1 - g2) * truncated_exponential_mean(beta)
}
