//! Sampling the log-linear density `exp(<y_delta, P>)` on `GT(lambda)`.
//!
//! Two walks are provided, both driven only by the polytope's membership
//! oracle and the linear exponent:
//!
//! * [`Mode::Tv`]: hit-and-run. Each step picks a uniform direction in the
//!   free-coordinate span, locates the chord through the current point by
//!   bisection against the membership oracle, and draws the next point
//!   exactly from the one-dimensional exponential density on the chord.
//! * [`Mode::Inf`]: a grid walk. The free coordinates are discretized on an
//!   axis-aligned lattice anchored at the inner-ball center, restricted to
//!   lattice points whose cube cell lies inside the polytope.
//!   Each step resamples one lattice coordinate from
//!   its exact conditional along the axis, and emitted points are drawn
//!   exactly from the target restricted to the current cell. The emitted
//!   law therefore differs from the target only through the uncovered
//!   boundary layer and chain mixing.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::gt::{live_dot, uniform_gt_sample, ExponentSpec, GtPolytope, RayleighTriangle};

/// Random source owned by each chain.
pub type ChainRng = ChaCha8Rng;

/// Bisection stops once the bracket on the line parameter is this narrow.
pub const CHORD_TOL: f64 = 1e-12;
const MAX_DIRECTION_RETRIES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Total-variation target (hit-and-run).
    Tv,
    /// Infinity-divergence target (grid walk).
    Inf,
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tv" => Ok(Mode::Tv),
            "inf" => Ok(Mode::Inf),
            other => domain(format!("unknown mode `{other}` (expected tv or inf)")),
        }
    }
}

/// How a chain picks its first point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartPoint {
    /// A uniform sample of the polytope (falls back to the inner-ball center
    /// if the sample is numerically outside).
    Uniform,
    InnerBallCenter,
}

/// Chord location strategy for hit-and-run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChordMethod {
    /// Bisection against the membership oracle.
    Bisection,
    /// Closed form from the interlacing inequalities.
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub mode: Mode,
    /// Target error: TV distance (`tv`) or infinity divergence (`inf`).
    pub xi: f64,
    /// Steps before the first retained sample; default `1000 d^2`.
    pub burn_in: Option<usize>,
    /// Steps between retained samples; default `100 d`.
    pub thinning: Option<usize>,
    pub chains: usize,
    pub seed: u64,
    /// Lattice pitch for `inf` mode; default `xi r / (4 (1 + |y_delta|))`.
    pub grid_resolution: Option<f64>,
    pub start: StartPoint,
    pub chord: ChordMethod,
}

impl SamplerConfig {
    pub fn new(mode: Mode, xi: f64) -> Self {
        Self {
            mode,
            xi,
            burn_in: None,
            thinning: None,
            chains: 4,
            seed: 0,
            grid_resolution: None,
            start: StartPoint::Uniform,
            chord: ChordMethod::Bisection,
        }
    }

    pub fn tv(xi: f64) -> Self {
        Self::new(Mode::Tv, xi)
    }

    pub fn inf(xi: f64) -> Self {
        Self::new(Mode::Inf, xi)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_chains(mut self, chains: usize) -> Self {
        self.chains = chains;
        self
    }

    pub fn with_burn_in(mut self, steps: usize) -> Self {
        self.burn_in = Some(steps);
        self
    }

    pub fn with_thinning(mut self, steps: usize) -> Self {
        self.thinning = Some(steps);
        self
    }

    pub fn with_grid_resolution(mut self, pitch: f64) -> Self {
        self.grid_resolution = Some(pitch);
        self
    }

    pub fn with_chord(mut self, chord: ChordMethod) -> Self {
        self.chord = chord;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.xi > 0.0) || !self.xi.is_finite() {
            return domain(format!("xi must be positive, got {}", self.xi));
        }
        if self.burn_in == Some(0) || self.thinning == Some(0) || self.chains == 0 {
            return domain("burn_in, thinning and chains must be >= 1");
        }
        if let Some(h) = self.grid_resolution {
            if !(h > 0.0) || !h.is_finite() {
                return domain(format!("grid_resolution must be positive, got {h}"));
            }
        }
        Ok(())
    }

    pub fn burn_in_for(&self, dim: usize) -> usize {
        self.burn_in.unwrap_or(1000 * dim * dim).max(1)
    }

    pub fn thinning_for(&self, dim: usize) -> usize {
        self.thinning.unwrap_or(100 * dim).max(1)
    }
}

/// Summary statistics of a set of chains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainDiagnostics {
    pub acceptance_rate: f64,
    /// Worst potential scale reduction factor over free coordinates.
    pub psrf: f64,
    /// Smallest effective sample size over free coordinates.
    pub effective_sample_size: f64,
}

/// Sample `x` in `[a, b]` with density proportional to `exp(beta x)`, by
/// inverse CDF on the uniform variate `u` in `[0, 1)`.
pub fn sample_truncated_exponential(a: f64, b: f64, beta: f64, u: f64) -> f64 {
    let len = b - a;
    if len <= 0.0 {
        return a;
    }
    let t = beta * len;
    let x = if t.abs() < 1e-12 {
        a + u * len
    } else if t > 0.0 {
        // Measured from the upper end so that large t cannot overflow.
        let v = 1.0 - u;
        b + (v * (-t).exp_m1()).ln_1p() / beta
    } else {
        a + (u * t.exp_m1()).ln_1p() / beta
    };
    x.clamp(a, b)
}

/// A single Markov chain on `GT(lambda)`.
pub struct Walker<'a> {
    poly: &'a GtPolytope,
    spec: &'a ExponentSpec,
    /// Current point as a full flat triangle.
    point: Vec<f64>,
    scratch: Vec<f64>,
    kind: WalkKind,
    steps: u64,
    moves: u64,
    retries: u64,
}

enum WalkKind {
    HitAndRun { chord: ChordMethod, span: f64 },
    Grid { pitch: f64, span: i64 },
}

impl<'a> Walker<'a> {
    pub fn new<R: Rng + ?Sized>(
        poly: &'a GtPolytope,
        spec: &'a ExponentSpec,
        cfg: &SamplerConfig,
        rng: &mut R,
    ) -> Result<Self> {
        cfg.validate()?;
        if spec.live.len() != poly.free_dim() {
            return domain("exponent does not match the polytope");
        }
        let diameter = poly.outer_radius().max(0.0) * (poly.free_dim() as f64).sqrt().max(1.0);
        let (point, kind) = match cfg.mode {
            Mode::Tv => {
                let point = start_point(poly, cfg.start, rng);
                (
                    point,
                    WalkKind::HitAndRun {
                        chord: cfg.chord,
                        span: diameter + 1.0,
                    },
                )
            }
            Mode::Inf => {
                let ball = poly.inner_ball();
                let center = ball.center.as_flat().to_vec();
                if poly.is_point() {
                    (
                        center,
                        WalkKind::Grid {
                            pitch: 0.0,
                            span: 0,
                        },
                    )
                } else {
                    let pitch = match cfg.grid_resolution {
                        Some(h) => h,
                        None => {
                            let h = default_pitch(cfg.xi, ball.radius, spec.live_norm());
                            match poly.axis_face_slack(&center) {
                                Some(s) => flush_pitch(h, s),
                                None => h,
                            }
                        }
                    };
                    if !poly.contains_cell(&center, 0.5 * pitch) {
                        return domain(format!(
                            "grid pitch {pitch:e} exceeds the slack of the inner-ball center"
                        ));
                    }
                    let span = (diameter / pitch).ceil() as i64 + 2;
                    (center, WalkKind::Grid { pitch, span })
                }
            }
        };
        let scratch = point.clone();
        Ok(Self {
            poly,
            spec,
            point,
            scratch,
            kind,
            steps: 0,
            moves: 0,
            retries: 0,
        })
    }

    /// Lattice pitch in grid mode.
    pub fn pitch(&self) -> Option<f64> {
        match self.kind {
            WalkKind::Grid { pitch, .. } => Some(pitch),
            WalkKind::HitAndRun { .. } => None,
        }
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Fraction of steps that moved the state.
    pub fn acceptance_rate(&self) -> f64 {
        if self.steps == 0 {
            1.0
        } else {
            self.moves as f64 / self.steps as f64
        }
    }

    /// Directions discarded because no chord could be located.
    pub fn retries(&self) -> u64 {
        self.retries
    }

    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        self.steps += 1;
        if self.poly.is_point() {
            return;
        }
        let moved = match self.kind {
            WalkKind::HitAndRun { chord, span } => self.hit_and_run_step(chord, span, rng),
            WalkKind::Grid { pitch, span } => self.grid_step(pitch, span, rng),
        };
        if moved {
            self.moves += 1;
        }
    }

    pub fn advance<R: Rng + ?Sized>(&mut self, steps: usize, rng: &mut R) {
        for _ in 0..steps {
            self.step(rng);
        }
    }

    /// Current state as a triangle. In grid mode this draws a point from the
    /// target restricted to the current lattice cell.
    pub fn emit<R: Rng + ?Sized>(&self, rng: &mut R) -> RayleighTriangle {
        let mut data = self.point.clone();
        if let WalkKind::Grid { pitch, .. } = self.kind {
            let half = 0.5 * pitch;
            for (c, &k) in self.poly.free_indices().iter().enumerate() {
                let offset =
                    sample_truncated_exponential(-half, half, self.spec.live[c], rng.random());
                data[k] += offset;
            }
        }
        RayleighTriangle::from_flat(self.poly.n(), data)
    }

    fn hit_and_run_step<R: Rng + ?Sized>(
        &mut self,
        chord: ChordMethod,
        span: f64,
        rng: &mut R,
    ) -> bool {
        let d = self.poly.free_dim();
        let free = self.poly.free_indices();
        for _ in 0..MAX_DIRECTION_RETRIES {
            let mut dir: Vec<f64> = (0..d)
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect();
            let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
            if !(norm > 1e-300) {
                self.retries += 1;
                continue;
            }
            dir.iter_mut().for_each(|x| *x /= norm);
            let (lo, hi) = match chord {
                ChordMethod::Bisection => (
                    -self.chord_extent(&dir.iter().map(|x| -x).collect::<Vec<_>>(), span),
                    self.chord_extent(&dir, span),
                ),
                ChordMethod::Exact => self.exact_chord(&dir),
            };
            if !(hi - lo > CHORD_TOL) {
                self.retries += 1;
                continue;
            }
            let slope: f64 = dir.iter().zip(&self.spec.live).map(|(u, w)| u * w).sum();
            let t = sample_truncated_exponential(lo, hi, slope, rng.random());
            for (c, &k) in free.iter().enumerate() {
                self.point[k] += t * dir[c];
            }
            return t != 0.0;
        }
        false
    }

    /// Largest `t >= 0` (to [`CHORD_TOL`]) with `point + t dir` in the polytope.
    fn chord_extent(&mut self, dir: &[f64], span: f64) -> f64 {
        let (mut lo, mut hi) = (0.0, span);
        if self.is_member_along(dir, hi) {
            return hi;
        }
        while hi - lo > CHORD_TOL {
            let mid = 0.5 * (lo + hi);
            if self.is_member_along(dir, mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    fn is_member_along(&mut self, dir: &[f64], t: f64) -> bool {
        for (c, &k) in self.poly.free_indices().iter().enumerate() {
            self.scratch[k] = self.point[k] + t * dir[c];
        }
        self.poly.has_slack(&self.scratch, 0.0)
    }

    fn exact_chord(&self, dir: &[f64]) -> (f64, f64) {
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        let delta = |k: usize| self.poly.coord_of(k).map_or(0.0, |c| dir[c]);
        for &(a, b) in self.poly.live_constraints() {
            let slack = (self.point[a] - self.point[b]).max(0.0);
            let rate = delta(a) - delta(b);
            if rate > 0.0 {
                lo = lo.max(-slack / rate);
            } else if rate < 0.0 {
                hi = hi.min(slack / -rate);
            }
        }
        (lo.min(0.0), hi.max(0.0))
    }

    fn grid_step<R: Rng + ?Sized>(&mut self, pitch: f64, span: i64, rng: &mut R) -> bool {
        let d = self.poly.free_dim();
        let c = rng.random_range(0..d);
        let k = self.poly.free_indices()[c];
        let up = self.lattice_extent(k, pitch, 1, span);
        let down = self.lattice_extent(k, pitch, -1, span);
        let beta = self.spec.live[c] * pitch;
        // floor of a continuous draw on [-down, up + 1) is exactly the
        // discrete law proportional to exp(beta m) on -down..=up.
        let t = sample_truncated_exponential(-(down as f64), up as f64 + 1.0, beta, rng.random());
        let m = (t.floor() as i64).clamp(-down, up);
        if m != 0 {
            self.point[k] += m as f64 * pitch;
        }
        m != 0
    }

    /// Number of lattice moves along `sign * e_k` whose cells stay inside the polytope.
    fn lattice_extent(&mut self, k: usize, pitch: f64, sign: i64, span: i64) -> i64 {
        self.scratch.copy_from_slice(&self.point);
        let base = self.point[k];
        let feasible = |m: i64, s: &mut Vec<f64>| {
            s[k] = base + (sign * m) as f64 * pitch;
            self.poly.contains_cell(s, 0.5 * pitch)
        };
        let mut scratch = std::mem::take(&mut self.scratch);
        // Gallop, then bisect on the integer offset.
        let mut good = 0i64;
        let mut step = 1i64;
        let bad = loop {
            let probe = (good + step).min(span);
            if !feasible(probe, &mut scratch) {
                break probe;
            }
            good = probe;
            if good >= span {
                self.scratch = scratch;
                return good;
            }
            step *= 2;
        };
        let mut bad = bad;
        while bad - good > 1 {
            let mid = good + (bad - good) / 2;
            if feasible(mid, &mut scratch) {
                good = mid;
            } else {
                bad = mid;
            }
        }
        self.scratch = scratch;
        good
    }

    /// Current value of the unnormalized log-density.
    pub fn log_density(&self) -> f64 {
        live_dot(self.spec, self.poly, &self.point)
    }
}

/// `xi r / (4 (1 + |y_delta|))`, capped at the inner radius.
pub fn default_pitch(xi: f64, inner_radius: f64, exponent_norm: f64) -> f64 {
    (xi * inner_radius / (4.0 * (1.0 + exponent_norm))).min(inner_radius)
}

/// Largest pitch `<= h` for which cells centered on the lattice end exactly
/// at distance `slack` from the anchor.
fn flush_pitch(h: f64, slack: f64) -> f64 {
    if !(slack > 0.0) {
        return h;
    }
    let cells = (slack / h - 0.5).ceil().max(0.0);
    slack / (cells + 0.5)
}

fn start_point<R: Rng + ?Sized>(poly: &GtPolytope, start: StartPoint, rng: &mut R) -> Vec<f64> {
    if start == StartPoint::Uniform {
        let mut p = uniform_gt_sample(poly, rng).as_flat().to_vec();
        poly.snap_fixed(&mut p);
        if poly.has_slack(&p, 0.0) {
            return p;
        }
    }
    poly.inner_ball().center.as_flat().to_vec()
}

fn require_mode(cfg: &SamplerConfig, mode: Mode) -> Result<()> {
    if cfg.mode != mode {
        return domain(format!(
            "sampler configured for {:?}, expected {:?}",
            cfg.mode, mode
        ));
    }
    Ok(())
}

/// One approximate sample from `exp(<y_delta, P>)` on the polytope by
/// hit-and-run, after `burn_in` steps from the configured start point.
pub fn hit_and_run_sample<R: Rng + ?Sized>(
    poly: &GtPolytope,
    spec: &ExponentSpec,
    cfg: &SamplerConfig,
    rng: &mut R,
) -> Result<RayleighTriangle> {
    require_mode(cfg, Mode::Tv)?;
    let mut walker = Walker::new(poly, spec, cfg, rng)?;
    walker.advance(cfg.burn_in_for(poly.free_dim()), rng);
    Ok(walker.emit(rng))
}

/// One approximate sample in the infinity-divergence sense by the grid walk.
pub fn grid_walk_sample<R: Rng + ?Sized>(
    poly: &GtPolytope,
    spec: &ExponentSpec,
    cfg: &SamplerConfig,
    rng: &mut R,
) -> Result<RayleighTriangle> {
    require_mode(cfg, Mode::Inf)?;
    let mut walker = Walker::new(poly, spec, cfg, rng)?;
    walker.advance(cfg.burn_in_for(poly.free_dim()), rng);
    Ok(walker.emit(rng))
}

/// Deterministic per-chain seeds derived from a root seed.
pub fn chain_seeds(root: u64, chains: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(root);
    (0..chains).map(|_| rng.next_u64()).collect()
}

/// Splits `total` samples across `chains` as evenly as possible.
pub fn split_counts(total: usize, chains: usize) -> Vec<usize> {
    (0..chains)
        .map(|c| total / chains + usize::from(c < total % chains))
        .collect()
}

/// Runs `job(chain_index, count, rng)` for every chain in parallel, each
/// with its own seeded random source, and returns results in chain order.
pub fn run_chains<T, F>(cfg: &SamplerConfig, total: usize, job: F) -> Result<Vec<Vec<T>>>
where
    T: Send,
    F: Fn(usize, usize, &mut ChainRng) -> Result<Vec<T>> + Sync,
{
    let seeds = chain_seeds(cfg.seed, cfg.chains);
    let counts = split_counts(total, cfg.chains);
    seeds
        .into_par_iter()
        .zip(counts)
        .enumerate()
        .map(|(c, (seed, count))| {
            let mut rng = ChainRng::seed_from_u64(seed);
            job(c, count, &mut rng)
        })
        .collect()
}

/// Retained triangles from a multi-chain run.
#[derive(Debug, Clone)]
pub struct ChainRun {
    /// `samples[chain][k]`.
    pub samples: Vec<Vec<RayleighTriangle>>,
    pub acceptance_rate: f64,
    pub retries: u64,
}

impl ChainRun {
    pub fn flattened(&self) -> impl Iterator<Item = &RayleighTriangle> {
        self.samples.iter().flatten()
    }

    /// Per-chain traces of the free coordinates, for [`run_diagnostics`].
    pub fn traces(&self, poly: &GtPolytope) -> Vec<Vec<Vec<f64>>> {
        self.samples
            .iter()
            .map(|chain| chain.iter().map(|p| poly.free_coords(p)).collect())
            .collect()
    }
}

/// Runs `cfg.chains` chains and retains `total` samples overall (burn-in,
/// then one sample every `thinning` steps).
pub fn sample_chains(
    poly: &GtPolytope,
    spec: &ExponentSpec,
    cfg: &SamplerConfig,
    total: usize,
) -> Result<ChainRun> {
    cfg.validate()?;
    let dim = poly.free_dim();
    let burn_in = cfg.burn_in_for(dim);
    let thinning = cfg.thinning_for(dim);
    let per_chain = run_chains(cfg, total, |_, count, rng| {
        let mut walker = Walker::new(poly, spec, cfg, rng)?;
        walker.advance(burn_in, rng);
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            walker.advance(thinning, rng);
            out.push(walker.emit(rng));
        }
        Ok(vec![(out, walker.moves, walker.steps, walker.retries)])
    })?;
    let mut samples = Vec::with_capacity(per_chain.len());
    let (mut moves, mut steps, mut retries) = (0u64, 0u64, 0u64);
    for mut chain in per_chain {
        let (s, m, st, r) = chain.pop().expect("one entry per chain");
        samples.push(s);
        moves += m;
        steps += st;
        retries += r;
    }
    Ok(ChainRun {
        samples,
        acceptance_rate: if steps == 0 {
            1.0
        } else {
            moves as f64 / steps as f64
        },
        retries,
    })
}

/// Gelman–Rubin PSRF and effective sample size over per-chain traces
/// (`traces[chain][sample][coordinate]`), worst case over coordinates.
pub fn run_diagnostics(traces: &[Vec<Vec<f64>>]) -> Result<ChainDiagnostics> {
    if traces.len() < 2 {
        return domain("diagnostics need at least 2 chains");
    }
    let len = traces.iter().map(Vec::len).min().unwrap_or(0);
    if len < 100 {
        return domain("diagnostics need at least 100 retained samples per chain");
    }
    let dim = traces[0][0].len();
    if traces.iter().any(|c| c.iter().any(|s| s.len() != dim)) {
        return domain("chain traces have inconsistent dimension");
    }

    let mut changed = 0usize;
    let mut pairs = 0usize;
    for chain in traces {
        for w in chain[..len].windows(2) {
            pairs += 1;
            if w[0] != w[1] {
                changed += 1;
            }
        }
    }
    let acceptance_rate = if pairs == 0 {
        1.0
    } else {
        changed as f64 / pairs as f64
    };

    let mut psrf: f64 = 1.0;
    let mut ess = f64::INFINITY;
    let m = traces.len() as f64;
    let n = len as f64;
    for c in 0..dim {
        let series: Vec<Vec<f64>> = traces
            .iter()
            .map(|ch| ch[..len].iter().map(|s| s[c]).collect())
            .collect();
        let means: Vec<f64> = series.iter().map(|s| crate::stats::mean(s)).collect();
        let vars: Vec<f64> = series.iter().map(|s| crate::stats::variance(s)).collect();
        let grand = means.iter().sum::<f64>() / m;
        let between = n / (m - 1.0) * means.iter().map(|x| (x - grand).powi(2)).sum::<f64>();
        let within = vars.iter().sum::<f64>() / m;
        let r = if within > 0.0 {
            let pooled = (n - 1.0) / n * within + between / n;
            (pooled / within).sqrt()
        } else if between > 0.0 {
            f64::INFINITY
        } else {
            1.0
        };
        psrf = psrf.max(r);
        let coord_ess: f64 = series.iter().map(|s| chain_ess(s)).sum();
        ess = ess.min(coord_ess);
    }
    Ok(ChainDiagnostics {
        acceptance_rate,
        psrf,
        effective_sample_size: ess,
    })
}

/// ESS of one chain via Geyer's initial positive sequence.
fn chain_ess(xs: &[f64]) -> f64 {
    let n = xs.len();
    let mean = crate::stats::mean(xs);
    let var0 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
    if var0 == 0.0 {
        return n as f64;
    }
    let acf = |lag: usize| -> f64 {
        (0..n - lag)
            .map(|i| (xs[i] - mean) * (xs[i + lag] - mean))
            .sum::<f64>()
            / (n as f64 * var0)
    };
    let mut tau = -1.0;
    let mut lag = 0;
    while lag + 1 < n {
        let pair = acf(lag) + acf(lag + 1);
        if pair <= 0.0 {
            break;
        }
        tau += 2.0 * pair;
        lag += 2;
    }
    (n as f64 / tau.max(1e-12)).min(n as f64 * (n as f64).log10().max(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gt::{build_polytope, default_equality_tol, reduce_exponent};
    use crate::stats::{ks_one_sample, truncated_exponential_cdf, truncated_exponential_mean};

    fn setup(lambda: &[f64], y: &[f64]) -> (GtPolytope, ExponentSpec) {
        let p = build_polytope(lambda, default_equality_tol(lambda)).unwrap();
        let e = reduce_exponent(y, &p).unwrap();
        (p, e)
    }

    #[test]
    fn truncated_exponential_inverse_cdf() {
        // Inverting the closed-form CDF recovers u.
        for beta in [-40.0, -2.0, 0.0, 1e-14, 1.0, 20.0, 800.0] {
            for u in [0.0, 0.1, 0.5, 0.9, 0.999_999] {
                let x = sample_truncated_exponential(0.0, 1.0, beta, u);
                assert!((0.0..=1.0).contains(&x));
                let back = truncated_exponential_cdf(beta, x);
                assert!((back - u).abs() < 1e-9, "beta {beta} u {u} -> {back}");
            }
        }
        assert_eq!(sample_truncated_exponential(2.0, 2.0, 1.0, 0.3), 2.0);
    }

    #[test]
    fn config_validation() {
        assert!(SamplerConfig::tv(0.0).validate().is_err());
        assert!(SamplerConfig::tv(0.1).with_chains(0).validate().is_err());
        assert!(SamplerConfig::tv(0.1).with_burn_in(0).validate().is_err());
        assert!(SamplerConfig::inf(0.1)
            .with_grid_resolution(-1.0)
            .validate()
            .is_err());
        assert!(SamplerConfig::inf(0.1).validate().is_ok());
        let c = SamplerConfig::tv(0.1);
        assert_eq!(c.burn_in_for(3), 9000);
        assert_eq!(c.thinning_for(3), 300);
    }

    #[test]
    fn wrong_mode_is_rejected() {
        let (p, e) = setup(&[1.0, 0.0], &[0.0, 0.0]);
        let mut rng = ChainRng::seed_from_u64(0);
        assert!(hit_and_run_sample(&p, &e, &SamplerConfig::inf(0.1), &mut rng).is_err());
        assert!(grid_walk_sample(&p, &e, &SamplerConfig::tv(0.1), &mut rng).is_err());
    }

    #[test]
    fn point_polytope_returns_the_point() {
        let (p, e) = setup(&[1.5, 1.5, 1.5], &[2.0, 1.0, 0.0]);
        let mut rng = ChainRng::seed_from_u64(0);
        for cfg in [SamplerConfig::tv(0.1), SamplerConfig::inf(0.1)] {
            let t = match cfg.mode {
                Mode::Tv => hit_and_run_sample(&p, &e, &cfg, &mut rng).unwrap(),
                Mode::Inf => grid_walk_sample(&p, &e, &cfg, &mut rng).unwrap(),
            };
            assert!(t.as_flat().iter().all(|&x| x == 1.5));
        }
    }

    #[test]
    fn hit_and_run_uniform_mean() {
        let (p, e) = setup(&[1.0, 0.0], &[0.0, 0.0]);
        let cfg = SamplerConfig::tv(0.01)
            .with_seed(3)
            .with_burn_in(10)
            .with_thinning(1);
        let run = sample_chains(&p, &e, &cfg, 100_000).unwrap();
        let xs: Vec<f64> = run.flattened().map(|t| t.entry(1, 1)).collect();
        let mean = crate::stats::mean(&xs);
        let sigma = (1.0 / 12.0 / xs.len() as f64).sqrt();
        assert!((mean - 0.5).abs() < 3.0 * sigma, "mean {mean}");
    }

    #[test]
    fn hit_and_run_exponential_mean_and_ks() {
        let (p, e) = setup(&[1.0, 0.0], &[1.0, 0.0]);
        let cfg = SamplerConfig::tv(0.01)
            .with_seed(4)
            .with_burn_in(10)
            .with_thinning(1);
        let run = sample_chains(&p, &e, &cfg, 100_000).unwrap();
        let mut xs: Vec<f64> = run.flattened().map(|t| t.entry(1, 1)).collect();
        let target = 1.0 / (std::f64::consts::E - 1.0);
        assert!((truncated_exponential_mean(1.0) - target).abs() < 1e-15);
        let mean = crate::stats::mean(&xs);
        let sigma = (crate::stats::variance(&xs) / xs.len() as f64).sqrt();
        assert!(
            (mean - target).abs() < 3.0 * sigma,
            "mean {mean} vs {target}"
        );
        let ks = ks_one_sample(&mut xs, |x| truncated_exponential_cdf(1.0, x));
        assert!(ks.p_value > 0.01, "{ks:?}");
    }

    #[test]
    fn exact_and_bisection_chords_agree() {
        let (p, e) = setup(&[2.0, 1.0, 0.5, 0.0], &[1.0, 0.4, 0.2, 0.0]);
        let cfg = SamplerConfig::tv(0.1);
        let mut rng = ChainRng::seed_from_u64(9);
        let mut w = Walker::new(&p, &e, &cfg, &mut rng).unwrap();
        for _ in 0..200 {
            w.step(&mut rng);
            let d = p.free_dim();
            let mut dir: Vec<f64> = (0..d)
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect();
            let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
            dir.iter_mut().for_each(|x| *x /= norm);
            let (lo, hi) = w.exact_chord(&dir);
            let neg: Vec<f64> = dir.iter().map(|x| -x).collect();
            let hi_b = w.chord_extent(&dir, 10.0);
            let lo_b = -w.chord_extent(&neg, 10.0);
            assert!((hi - hi_b).abs() < 1e-10 && (lo - lo_b).abs() < 1e-10);
        }
    }

    #[test]
    fn emitted_points_are_members_and_fixed_entries_stay() {
        let (p, e) = setup(&[3.0, 1.0, 1.0, 0.0], &[2.0, 1.0, 0.5, 0.0]);
        for cfg in [SamplerConfig::tv(0.1), SamplerConfig::inf(0.5)] {
            let cfg = cfg
                .with_seed(2)
                .with_burn_in(500)
                .with_thinning(5)
                .with_chains(2);
            let run = sample_chains(&p, &e, &cfg, 2000).unwrap();
            for t in run.flattened() {
                assert!(p.membership(t).unwrap());
                assert_eq!(t.entry(2, 3), 1.0);
                assert_eq!(t.top_row(), p.lambda());
            }
        }
    }

    #[test]
    fn grid_walk_rejects_coarse_pitch() {
        let (p, e) = setup(&[1.0, 0.0], &[0.0, 0.0]);
        let cfg = SamplerConfig::inf(0.1).with_grid_resolution(1.2);
        let mut rng = ChainRng::seed_from_u64(0);
        assert!(matches!(
            grid_walk_sample(&p, &e, &cfg, &mut rng),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn flush_pitch_tiles_to_the_face() {
        let h = flush_pitch(0.03, 0.5);
        assert!(h <= 0.03);
        let cells = 0.5 / h - 0.5;
        assert!((cells - cells.round()).abs() < 1e-9);
        assert_eq!(flush_pitch(0.03, 0.0), 0.03);
    }

    #[test]
    fn grid_walk_is_exact_on_a_segment() {
        // Cells tile [0, 1], so the emitted law is the target up to mixing.
        let (p, e) = setup(&[1.0, 0.0], &[5.0, 0.0]);
        let cfg = SamplerConfig::inf(0.5)
            .with_burn_in(50)
            .with_thinning(5)
            .with_seed(4);
        let run = sample_chains(&p, &e, &cfg, 40_000).unwrap();
        let mut xs: Vec<f64> = run.flattened().map(|t| t.entry(1, 1)).collect();
        let ks = crate::stats::ks_one_sample(&mut xs, |x| {
            crate::stats::truncated_exponential_cdf(5.0, x)
        });
        assert!(ks.p_value > 0.01, "{ks:?}");
    }

    #[test]
    fn default_pitch_formula() {
        // lambda = (1,0): r = 1/32; |y_delta| = 2, xi = 0.1.
        let h = default_pitch(0.1, 1.0 / 32.0, 2.0);
        assert!((h - 0.1 / 32.0 / 12.0).abs() < 1e-18);
        assert_eq!(default_pitch(1e6, 0.25, 0.0), 0.25);
    }

    #[test]
    fn diagnostics_examples() {
        let constant = vec![vec![vec![0.5]; 200]; 3];
        let d = run_diagnostics(&constant).unwrap();
        assert_eq!(d.psrf, 1.0);

        let disjoint = vec![vec![vec![0.0]; 200], vec![vec![1.0]; 200]];
        assert!(run_diagnostics(&disjoint).unwrap().psrf > 1.1);

        // Independent exact draws from e^x on [0,1].
        let mut rng = ChainRng::seed_from_u64(8);
        let chains: Vec<Vec<Vec<f64>>> = (0..4)
            .map(|_| {
                (0..2000)
                    .map(|_| vec![sample_truncated_exponential(0.0, 1.0, 1.0, rng.random())])
                    .collect()
            })
            .collect();
        let d = run_diagnostics(&chains).unwrap();
        assert!(d.psrf >= 0.99 && d.psrf <= 1.05, "{d:?}");
        assert!(d.effective_sample_size > 4000.0, "{d:?}");
        assert!(d.acceptance_rate > 0.99);

        assert!(run_diagnostics(&constant[..1]).is_err());
        assert!(run_diagnostics(&[vec![vec![0.0]; 50], vec![vec![0.0]; 50]]).is_err());
    }
}
