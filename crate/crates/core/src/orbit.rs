//! Sampling `X` on the unitary orbit of `diag(lambda)` with density
//! proportional to `exp(<Y, X>)`, and the HCIZ partition function.
//!
//! The diagonal case walks on `GT(lambda)` with the reduced exponent, then
//! lifts the triangle to a matrix by exact fiber sampling. A non-diagonal
//! coupling `Y = U diag(y) U*` is handled by sampling for `diag(y)` and
//! conjugating the result by `U`.

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{domain, Result};
use crate::fiber::sample_fiber;
use crate::gt::{
    build_polytope, cluster_runs, default_equality_tol, reduce_exponent, ExponentSpec, GtPolytope,
    RayleighTriangle,
};
use crate::linalg::{hermitian_eigendecompose, HermitianMatrix, UnitaryMatrix, C64};
use crate::sampler::{run_chains, SamplerConfig, Walker};

/// The coupling matrix `Y`.
#[derive(Debug, Clone, PartialEq)]
pub enum Coupling {
    /// `Y = diag(y)`, in any order.
    Diagonal(Vec<f64>),
    Matrix(HermitianMatrix),
}

/// Target orbit and coupling. The sampler mode and error target live in
/// [`SamplerConfig`].
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitProblem {
    pub lambda: Vec<f64>,
    pub coupling: Coupling,
}

impl OrbitProblem {
    pub fn diagonal(lambda: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let prob = Self {
            lambda,
            coupling: Coupling::Diagonal(y),
        };
        prob.validate()?;
        Ok(prob)
    }

    pub fn with_matrix(lambda: Vec<f64>, y: HermitianMatrix) -> Result<Self> {
        let prob = Self {
            lambda,
            coupling: Coupling::Matrix(y),
        };
        prob.validate()?;
        Ok(prob)
    }

    pub fn n(&self) -> usize {
        self.lambda.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.lambda.len();
        if n == 0 {
            return domain("lambda must be non-empty");
        }
        if self.lambda.iter().any(|x| !x.is_finite()) {
            return domain("lambda must be finite");
        }
        if self.lambda.windows(2).any(|w| w[0] < w[1]) {
            return domain("lambda must be sorted non-increasing");
        }
        let m = match &self.coupling {
            Coupling::Diagonal(y) => {
                if y.iter().any(|x| !x.is_finite()) {
                    return domain("y must be finite");
                }
                y.len()
            }
            Coupling::Matrix(y) => y.dim(),
        };
        if m != n {
            return domain(format!("Y has size {m}, lambda has length {n}"));
        }
        Ok(())
    }

    /// The coupling as a matrix.
    pub fn coupling_matrix(&self) -> HermitianMatrix {
        match &self.coupling {
            Coupling::Diagonal(y) => HermitianMatrix::from_real_diagonal(y).expect("validated"),
            Coupling::Matrix(y) => y.clone(),
        }
    }
}

/// A problem reduced to sorted diagonal form.
#[derive(Debug, Clone)]
pub struct OrbitPlan {
    pub poly: GtPolytope,
    pub spec: ExponentSpec,
    /// `U` with `Y = U diag(y) U*`; `None` when `Y` is already sorted diagonal.
    pub basis: Option<UnitaryMatrix>,
}

impl OrbitPlan {
    pub fn new(prob: &OrbitProblem) -> Result<Self> {
        prob.validate()?;
        let (y, basis) = match &prob.coupling {
            Coupling::Diagonal(y) if y.windows(2).all(|w| w[0] >= w[1]) => (y.clone(), None),
            Coupling::Diagonal(y) => {
                let n = y.len();
                let mut order: Vec<usize> = (0..n).collect();
                order.sort_by(|&a, &b| y[b].total_cmp(&y[a]));
                let mut perm = DMatrix::<C64>::zeros(n, n);
                for (col, &row) in order.iter().enumerate() {
                    perm[(row, col)] = C64::new(1.0, 0.0);
                }
                let sorted = order.iter().map(|&k| y[k]).collect();
                (sorted, Some(UnitaryMatrix::new(perm)?))
            }
            Coupling::Matrix(m) if m.is_diagonal(0.0) => {
                let diag = m.diagonal();
                let sub = OrbitProblem {
                    lambda: prob.lambda.clone(),
                    coupling: Coupling::Diagonal(diag),
                };
                return Self::new(&sub);
            }
            Coupling::Matrix(m) => {
                let d = hermitian_eigendecompose(m)?;
                (d.eigenvalues, Some(d.eigenvectors))
            }
        };
        let poly = build_polytope(&prob.lambda, default_equality_tol(&prob.lambda))?;
        let spec = reduce_exponent(&y, &poly)?;
        Ok(Self { poly, spec, basis })
    }

    /// Lifts a triangle to a matrix in the original basis.
    pub fn lift<R: Rng + ?Sized>(
        &self,
        p: &RayleighTriangle,
        rng: &mut R,
    ) -> Result<HermitianMatrix> {
        let x = sample_fiber(p, rng)?;
        Ok(match &self.basis {
            Some(u) => x.conjugate_by(u),
            None => x,
        })
    }
}

/// One sample `X` from the orbit.
pub fn sample_orbit<R: Rng + ?Sized>(
    prob: &OrbitProblem,
    cfg: &SamplerConfig,
    rng: &mut R,
) -> Result<HermitianMatrix> {
    let plan = OrbitPlan::new(prob)?;
    let mut walker = Walker::new(&plan.poly, &plan.spec, cfg, rng)?;
    walker.advance(cfg.burn_in_for(plan.poly.free_dim()), rng);
    let p = walker.emit(rng);
    plan.lift(&p, rng)
}

/// Samples from a multi-chain run, in chain order.
#[derive(Debug, Clone)]
pub struct OrbitBatch {
    /// `samples[chain][k]`.
    pub samples: Vec<Vec<HermitianMatrix>>,
    /// The triangles the samples were lifted from.
    pub triangles: Vec<Vec<RayleighTriangle>>,
    pub acceptance_rate: f64,
}

impl OrbitBatch {
    pub fn flattened(&self) -> impl Iterator<Item = &HermitianMatrix> {
        self.samples.iter().flatten()
    }

    pub fn len(&self) -> usize {
        self.samples.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// `total` samples over `cfg.chains` parallel chains, each with burn-in and
/// thinning, lifted with the chain's own random source.
pub fn sample_orbit_batch(
    prob: &OrbitProblem,
    cfg: &SamplerConfig,
    total: usize,
) -> Result<OrbitBatch> {
    let (chains, acceptance_rate) =
        sample_orbit_batch_with(prob, cfg, total, |p, x| (p.clone(), x))?;
    let mut batch = OrbitBatch {
        samples: Vec::new(),
        triangles: Vec::new(),
        acceptance_rate,
    };
    for chain in chains {
        let (ps, xs) = chain.into_iter().unzip();
        batch.triangles.push(ps);
        batch.samples.push(xs);
    }
    Ok(batch)
}

/// Like [`sample_orbit_batch`], but passes each triangle and its lifted
/// matrix to `f` and keeps only the results, per chain. Also returns the
/// overall acceptance rate.
pub fn sample_orbit_batch_with<T, F>(
    prob: &OrbitProblem,
    cfg: &SamplerConfig,
    total: usize,
    f: F,
) -> Result<(Vec<Vec<T>>, f64)>
where
    T: Send,
    F: Fn(&RayleighTriangle, HermitianMatrix) -> T + Sync,
{
    cfg.validate()?;
    let plan = OrbitPlan::new(prob)?;
    let dim = plan.poly.free_dim();
    let (burn_in, thinning) = (cfg.burn_in_for(dim), cfg.thinning_for(dim));
    let chains = run_chains(cfg, total, |_, count, rng| {
        let mut walker = Walker::new(&plan.poly, &plan.spec, cfg, rng)?;
        walker.advance(burn_in, rng);
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            walker.advance(thinning, rng);
            let p = walker.emit(rng);
            let x = plan.lift(&p, rng)?;
            out.push(f(&p, x));
        }
        Ok(vec![(
            out,
            walker.acceptance_rate() * walker.steps() as f64,
            walker.steps(),
        )])
    })?;
    let mut results = Vec::with_capacity(chains.len());
    let (mut moves, mut steps) = (0.0, 0u64);
    for mut chain in chains {
        let (out, m, s) = chain.pop().expect("one entry per chain");
        results.push(out);
        moves += m;
        steps += s;
    }
    let rate = if steps > 0 { moves / steps as f64 } else { 1.0 };
    Ok((results, rate))
}

/// Distinct values (descending) with multiplicities.
fn clusters(values: &[f64]) -> Vec<(f64, usize)> {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let tol = default_equality_tol(&sorted);
    cluster_runs(&sorted, tol)
        .into_iter()
        .map(|(p, q)| {
            (
                sorted[p..=q].iter().sum::<f64>() / (q - p + 1) as f64,
                q - p + 1,
            )
        })
        .collect()
}

fn ln_factorial(k: usize) -> f64 {
    (2..=k).map(|i| (i as f64).ln()).sum()
}

/// `log` of the product over pairs of distinct clusters of `|a - b|^{m_a m_b}`.
fn ln_confluent_vandermonde(cl: &[(f64, usize)]) -> f64 {
    let mut s = 0.0;
    for (i, &(a, ma)) in cl.iter().enumerate() {
        for &(b, mb) in &cl[i + 1..] {
            s += (ma * mb) as f64 * (a - b).abs().ln();
        }
    }
    s
}

/// `log Z(y, lambda)` for `Z = int exp(<diag(y), U diag(lambda) U*>) dU`
/// over Haar measure, from the determinantal formula
/// `prod_{p<n} p! det[exp(y_i lambda_j)] / (Delta(y) Delta(lambda))`.
///
/// Coincident values use the confluent limit: the `e`-th copy of a repeated
/// `y` (resp. `lambda`) gets the `e`-th derivative divided by `e!`, and only
/// pairs of distinct values enter the Vandermonde products.
pub fn log_partition(y: &[f64], lambda: &[f64]) -> Result<f64> {
    let n = y.len();
    if n != lambda.len() {
        return domain(format!(
            "y has length {n}, lambda has length {}",
            lambda.len()
        ));
    }
    if n == 0 {
        return domain("empty input");
    }
    if y.iter().chain(lambda).any(|x| !x.is_finite()) {
        return domain("inputs must be finite");
    }

    // Shifting both vectors to be non-negative multiplies Z by
    // exp(c sum(lambda) + d sum(y) + n c d).
    let c = y.iter().copied().fold(f64::INFINITY, f64::min);
    let d = lambda.iter().copied().fold(f64::INFINITY, f64::min);
    let ys: Vec<f64> = y.iter().map(|v| v - c).collect();
    let ls: Vec<f64> = lambda.iter().map(|v| v - d).collect();
    let shift = c * lambda.iter().sum::<f64>() + d * ys.iter().sum::<f64>();

    let ycl = clusters(&ys);
    let lcl = clusters(&ls);
    let rows: Vec<(f64, usize)> = ycl
        .iter()
        .flat_map(|&(a, m)| (0..m).map(move |e| (a, e)))
        .collect();
    let cols: Vec<(f64, usize)> = lcl
        .iter()
        .flat_map(|&(b, m)| (0..m).map(move |e| (b, e)))
        .collect();
    let lmax = lcl[0].0;

    // Entry d^e/dy^e d^f/dl^f exp(y l) / (e! f!) at (a, b), with row i
    // divided by exp(a lmax).
    let mut mat = DMatrix::<f64>::zeros(n, n);
    let mut ln_scale = 0.0;
    for (i, &(a, e)) in rows.iter().enumerate() {
        ln_scale += a * lmax;
        for (j, &(b, f)) in cols.iter().enumerate() {
            let mut poly = 0.0;
            for s in 0..=e.min(f) {
                let ln_coef = -(ln_factorial(s) + ln_factorial(f - s) + ln_factorial(e - s));
                poly += ln_coef.exp() * b.powi((e - s) as i32) * a.powi((f - s) as i32);
            }
            mat[(i, j)] = poly * (a * (b - lmax)).exp();
        }
        let row_max = mat.row(i).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if row_max > 0.0 {
            mat.row_mut(i).iter_mut().for_each(|v| *v /= row_max);
            ln_scale += row_max.ln();
        }
    }
    let det = mat.lu().determinant().abs();
    let ln_const: f64 = (1..n).map(ln_factorial).sum();
    Ok(ln_const + det.ln() + ln_scale + shift
        - ln_confluent_vandermonde(&ycl)
        - ln_confluent_vandermonde(&lcl))
}

/// `E <Y, X>` under the orbit law, as the central difference
/// `(log Z((1+h) y) - log Z((1-h) y)) / (2h)`.
pub fn expected_inner_product(y: &[f64], lambda: &[f64], h: f64) -> Result<f64> {
    if !(h > 0.0) {
        return domain("difference step must be positive");
    }
    let scaled = |t: f64| y.iter().map(|v| v * t).collect::<Vec<_>>();
    let up = log_partition(&scaled(1.0 + h), lambda)?;
    let down = log_partition(&scaled(1.0 - h), lambda)?;
    Ok((up - down) / (2.0 * h))
}

/// [`expected_inner_product`] with one Richardson extrapolation step.
pub fn expected_inner_product_richardson(y: &[f64], lambda: &[f64], h: f64) -> Result<f64> {
    let coarse = expected_inner_product(y, lambda, h)?;
    let fine = expected_inner_product(y, lambda, h / 2.0)?;
    Ok((4.0 * fine - coarse) / 3.0)
}
