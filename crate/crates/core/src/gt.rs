//! Rayleigh triangles and the Gelfand–Tsetlin polytope `GT(lambda)`.
//!
//! A Rayleigh triangle of size `n` stores rows `1..=n`, row `j` holding `j`
//! reals; row `n` is the top row. Entries are addressed as `(i, j)` with
//! `1 <= i <= j <= n`, matching the usual triangle notation. Internally the
//! rows are packed into one flat vector, row `j` starting at `j(j-1)/2`.
//!
//! The polytope carries everything the walks need: the fixed-entry mask
//! forced by repeated eigenvalues, the free coordinates spanning its affine
//! hull, the interlacing constraints, and the denominator of `lambda` when
//! it is rational.

use rand::Rng;

use crate::error::{domain, Error, Result};
use crate::linalg::{sample_haar_unitary, HermitianMatrix};

/// Absolute slack accepted on every membership (in)equality.
pub const MEMBERSHIP_TOL: f64 = 1e-10;
/// Largest denominator tried when reconstructing a rational `lambda`.
pub const MAX_DENOMINATOR: u64 = 1_000_000;

/// Flat index of entry `(i, j)` (1-based).
#[inline]
pub fn flat_index(i: usize, j: usize) -> usize {
    debug_assert!(1 <= i && i <= j);
    j * (j - 1) / 2 + (i - 1)
}

/// Number of entries in a size-`n` triangle.
#[inline]
pub fn triangle_len(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Default tolerance for treating eigenvalues as equal.
pub fn default_equality_tol(lambda: &[f64]) -> f64 {
    let spread = match (lambda.first(), lambda.last()) {
        (Some(a), Some(b)) => (a - b).abs(),
        _ => 0.0,
    };
    1e-9 * (1.0 + spread)
}

/// Triangular array of reals `(R_{i,j})_{1 <= i <= j <= n}`.
///
/// Construction only checks the shape; interlacing is checked by
/// [`RayleighTriangle::is_interlacing`] or polytope membership.
#[derive(Debug, Clone, PartialEq)]
pub struct RayleighTriangle {
    n: usize,
    data: Vec<f64>,
}

impl RayleighTriangle {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return domain("triangle must have at least one row");
        }
        let mut data = Vec::with_capacity(triangle_len(n));
        for (k, row) in rows.iter().enumerate() {
            if row.len() != k + 1 {
                return domain(format!(
                    "row {} has {} entries, expected {}",
                    k + 1,
                    row.len(),
                    k + 1
                ));
            }
            if row.iter().any(|x| !x.is_finite()) {
                return domain(format!("row {} has a non-finite entry", k + 1));
            }
            data.extend_from_slice(row);
        }
        Ok(Self { n, data })
    }

    pub(crate) fn from_flat(n: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), triangle_len(n));
        Self { n, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Row `j` (1-based), of length `j`.
    pub fn row(&self, j: usize) -> &[f64] {
        assert!(1 <= j && j <= self.n, "row index {j} out of range");
        &self.data[flat_index(1, j)..flat_index(1, j) + j]
    }

    pub fn top_row(&self) -> &[f64] {
        self.row(self.n)
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.data[flat_index(i, j)]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (1..=self.n).map(|j| self.row(j).to_vec()).collect()
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    /// `R_{i,j} >= R_{i,j-1} >= R_{i+1,j}` for all `1 <= i < j <= n`, up to `tol`.
    pub fn is_interlacing(&self, tol: f64) -> bool {
        interlacing_pairs(self.n).all(|(hi, lo)| self.data[hi] - self.data[lo] >= -tol)
    }

    /// Largest entrywise difference to another triangle of the same size.
    pub fn max_abs_diff(&self, other: &RayleighTriangle) -> f64 {
        assert_eq!(self.n, other.n);
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |acc, (a, b)| acc.max((a - b).abs()))
    }
}

/// All interlacing inequalities as `(hi, lo)` flat index pairs meaning
/// `data[hi] >= data[lo]`.
fn interlacing_pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (2..=n).flat_map(move |j| {
        (1..j).flat_map(move |i| {
            [
                (flat_index(i, j), flat_index(i, j - 1)),
                (flat_index(i, j - 1), flat_index(i + 1, j)),
            ]
        })
    })
}

/// Triangle of leading-submatrix eigenvalues of `x`.
pub fn rayleigh_map(x: &HermitianMatrix) -> RayleighTriangle {
    let n = x.dim();
    let mut data = Vec::with_capacity(triangle_len(n));
    for k in 1..=n {
        data.extend(x.leading(k).eigenvalues());
    }
    RayleighTriangle { n, data }
}

/// Successive row-sum differences; equals the diagonal of `X` when the
/// triangle is `rayleigh_map(X)`.
pub fn type_vector(p: &RayleighTriangle) -> Vec<f64> {
    let mut prev = 0.0;
    (1..=p.n)
        .map(|k| {
            let s: f64 = p.row(k).iter().sum();
            let out = s - prev;
            prev = s;
            out
        })
        .collect()
}

/// `GT(lambda)` together with the data needed to walk inside it.
#[derive(Debug, Clone)]
pub struct GtPolytope {
    lambda: Vec<f64>,
    n: usize,
    equality_tol: f64,
    /// Per flat entry: forced by `lambda` (includes the whole top row).
    fixed_mask: Vec<bool>,
    /// Forced values for masked entries, zero elsewhere.
    fixed_values: Vec<f64>,
    /// Flat indices of the free coordinates, row-major from row 1 upward.
    free: Vec<usize>,
    /// Inverse of `free`: coordinate number per flat entry.
    coord_of: Vec<Option<usize>>,
    /// Interlacing constraints touching at least one free entry.
    live: Vec<(usize, usize)>,
    q: Option<u64>,
}

/// Builds `GT(lambda)`, detecting repeated eigenvalues within `equality_tol`.
///
/// Runs of `lambda` that agree within the tolerance are snapped to their
/// mean so that the forced entries are exactly consistent.
pub fn build_polytope(lambda: &[f64], equality_tol: f64) -> Result<GtPolytope> {
    let n = lambda.len();
    if n == 0 {
        return domain("lambda must be non-empty");
    }
    if lambda.iter().any(|x| !x.is_finite()) {
        return domain("lambda must be finite");
    }
    if lambda.windows(2).any(|w| w[0] < w[1]) {
        return domain("lambda must be sorted non-increasing");
    }
    if !(equality_tol >= 0.0) {
        return domain("equality tolerance must be >= 0");
    }

    let runs = cluster_runs(lambda, equality_tol);
    let mut snapped = lambda.to_vec();
    for &(p, q) in &runs {
        let m = lambda[p..=q].iter().sum::<f64>() / (q - p + 1) as f64;
        snapped[p..=q].iter_mut().for_each(|x| *x = m);
    }

    let len = triangle_len(n);
    let mut fixed_mask = vec![false; len];
    let mut fixed_values = vec![0.0; len];
    // Run lambda_p = ... = lambda_q (1-based p..=q) forces R_{i,j} = lambda_p
    // for p <= i <= q + j - n.
    for &(p0, q0) in &runs {
        let (p, q) = (p0 + 1, q0 + 1);
        for j in 1..=n {
            if q + j < n + p {
                continue;
            }
            let upper = (q + j - n).min(j);
            for i in p..=upper {
                fixed_mask[flat_index(i, j)] = true;
                fixed_values[flat_index(i, j)] = snapped[p0];
            }
        }
    }

    let free: Vec<usize> = (0..len).filter(|&k| !fixed_mask[k]).collect();
    let mut coord_of = vec![None; len];
    for (c, &k) in free.iter().enumerate() {
        coord_of[k] = Some(c);
    }
    let live = interlacing_pairs(n)
        .filter(|&(a, b)| !fixed_mask[a] || !fixed_mask[b])
        .collect();
    let q = common_denominator(&snapped, MAX_DENOMINATOR);

    Ok(GtPolytope {
        lambda: snapped,
        n,
        equality_tol,
        fixed_mask,
        fixed_values,
        free,
        coord_of,
        live,
        q,
    })
}

/// Maximal runs `[p, q]` (0-based, inclusive) of consecutive entries whose
/// successive gaps are all within `tol`.
pub(crate) fn cluster_runs(sorted: &[f64], tol: f64) -> Vec<(usize, usize)> {
    let mut runs = Vec::new();
    let mut start = 0;
    for k in 1..=sorted.len() {
        if k == sorted.len() || (sorted[k - 1] - sorted[k]).abs() > tol {
            runs.push((start, k - 1));
            start = k;
        }
    }
    runs
}

/// Best rational approximation `p/q` with `q <= max_den`, by continued fractions.
fn rational_approx(x: f64, max_den: u64) -> Option<(i128, u64)> {
    let tol = 8.0 * f64::EPSILON * x.abs().max(1.0);
    let (mut h0, mut h1): (i128, i128) = (0, 1);
    let (mut k0, mut k1): (i128, i128) = (1, 0);
    let mut r = x;
    for _ in 0..64 {
        let a = r.floor();
        if a.abs() > 1e15 {
            return None;
        }
        let ai = a as i128;
        let h2 = ai * h1 + h0;
        let k2 = ai * k1 + k0;
        if k2 > max_den as i128 {
            return None;
        }
        if ((h2 as f64) / (k2 as f64) - x).abs() <= tol {
            return Some((h2, k2 as u64));
        }
        let frac = r - a;
        if frac == 0.0 {
            return None;
        }
        r = 1.0 / frac;
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
    }
    None
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Smallest `q` with every `lambda_i = p_i / q`, if one exists below `max_den`.
pub(crate) fn common_denominator(lambda: &[f64], max_den: u64) -> Option<u64> {
    let mut q: u64 = 1;
    for &x in lambda {
        let (_, d) = rational_approx(x, max_den)?;
        q = q / gcd(q, d) * d;
        if q > max_den {
            return None;
        }
    }
    Some(q)
}

/// How an inner-ball center was constructed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InnerBallKind {
    /// Rational lattice construction with radius `1/(8 n^2 q)`.
    Lattice,
    /// Row-by-row midpoints; radius from the realized slack.
    Midpoint,
    /// The polytope is a single point.
    Point,
}

/// A ball (in the sup norm on free coordinates) contained in `GT(lambda)`.
#[derive(Debug, Clone)]
pub struct InnerBall {
    pub center: RayleighTriangle,
    pub radius: f64,
    pub kind: InnerBallKind,
}

impl GtPolytope {
    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn equality_tol(&self) -> f64 {
        self.equality_tol
    }

    /// Dimension of the affine span.
    pub fn free_dim(&self) -> usize {
        self.free.len()
    }

    pub fn is_point(&self) -> bool {
        self.free.is_empty()
    }

    pub fn denominator(&self) -> Option<u64> {
        self.q
    }

    /// Forced-entry mask over the flat triangle (top row included).
    pub fn fixed_mask(&self) -> &[bool] {
        &self.fixed_mask
    }

    pub fn is_fixed(&self, i: usize, j: usize) -> bool {
        self.fixed_mask[flat_index(i, j)]
    }

    /// Forced value of a masked entry.
    pub fn fixed_value(&self, i: usize, j: usize) -> Option<f64> {
        let k = flat_index(i, j);
        self.fixed_mask[k].then(|| self.fixed_values[k])
    }

    /// Flat indices of the free coordinates.
    pub fn free_indices(&self) -> &[usize] {
        &self.free
    }

    /// `(i, j)` position of free coordinate `c`.
    pub fn free_position(&self, c: usize) -> (usize, usize) {
        let k = self.free[c];
        let mut j = 1;
        while flat_index(1, j + 1) <= k {
            j += 1;
        }
        (k - flat_index(1, j) + 1, j)
    }

    pub(crate) fn live_constraints(&self) -> &[(usize, usize)] {
        &self.live
    }

    pub(crate) fn coord_of(&self, flat: usize) -> Option<usize> {
        self.coord_of[flat]
    }

    /// Triangle with the given free coordinates and all forced entries.
    pub fn embed(&self, free: &[f64]) -> RayleighTriangle {
        assert_eq!(
            free.len(),
            self.free.len(),
            "free coordinate count mismatch"
        );
        let mut data = self.fixed_values.clone();
        for (c, &k) in self.free.iter().enumerate() {
            data[k] = free[c];
        }
        RayleighTriangle { n: self.n, data }
    }

    /// Free coordinates of a triangle.
    pub fn free_coords(&self, p: &RayleighTriangle) -> Vec<f64> {
        self.free.iter().map(|&k| p.data[k]).collect()
    }

    /// Overwrites forced entries of `p` with their exact values.
    pub(crate) fn snap_fixed(&self, p: &mut [f64]) {
        for (k, &fixed) in self.fixed_mask.iter().enumerate() {
            if fixed {
                p[k] = self.fixed_values[k];
            }
        }
    }

    /// Smallest slack over constraints touching a free entry (infinite for a point).
    pub(crate) fn min_slack(&self, p: &[f64]) -> f64 {
        self.live
            .iter()
            .map(|&(a, b)| p[a] - p[b])
            .fold(f64::INFINITY, f64::min)
    }

    /// All live constraints hold with slack at least `s`.
    #[inline]
    pub(crate) fn has_slack(&self, p: &[f64], s: f64) -> bool {
        self.live.iter().all(|&(a, b)| p[a] - p[b] >= s)
    }

    /// Smallest slack at `p` over live constraints with exactly one free entry.
    pub(crate) fn axis_face_slack(&self, p: &[f64]) -> Option<f64> {
        self.live
            .iter()
            .filter(|&&(a, b)| self.fixed_mask[a] != self.fixed_mask[b])
            .map(|&(a, b)| p[a] - p[b])
            .min_by(f64::total_cmp)
    }

    /// The axis-aligned cube of half-width `half` around `p` (in the free
    /// coordinates) lies inside the polytope.
    #[inline]
    pub(crate) fn contains_cell(&self, p: &[f64], half: f64) -> bool {
        self.live.iter().all(|&(a, b)| {
            let moving = usize::from(!self.fixed_mask[a]) + usize::from(!self.fixed_mask[b]);
            p[a] - p[b]
                >= half * moving as f64 - 1e-12 * (1.0 + self.lambda[0] - self.lambda[self.n - 1])
        })
    }

    /// Membership oracle: top row equals `lambda` and every interlacing
    /// inequality holds, each within [`MEMBERSHIP_TOL`].
    pub fn membership(&self, p: &RayleighTriangle) -> Result<bool> {
        if p.n != self.n {
            return domain(format!(
                "triangle has size {}, polytope has size {}",
                p.n, self.n
            ));
        }
        let top_ok = p
            .top_row()
            .iter()
            .zip(&self.lambda)
            .all(|(a, b)| (a - b).abs() <= MEMBERSHIP_TOL);
        Ok(top_ok && p.is_interlacing(MEMBERSHIP_TOL))
    }

    /// Radius `sqrt(n) (lambda_1 - lambda_n)` of a ball containing the polytope.
    pub fn outer_radius(&self) -> f64 {
        (self.n as f64).sqrt() * (self.lambda[0] - self.lambda[self.n - 1])
    }

    /// Center and radius of a sup-norm ball inside the polytope, relative
    /// to its affine span.
    ///
    /// With a rational `lambda` of denominator `q`, row `n - j` is filled
    /// with multiples of `1/((j+1) q)` strictly inside its interlacing
    /// bounds and the radius is `1/(8 n^2 q)`. Otherwise each entry is the
    /// midpoint of its bounds and the radius is half the smallest slack.
    pub fn inner_ball(&self) -> InnerBall {
        if self.is_point() {
            return InnerBall {
                center: RayleighTriangle::from_flat(self.n, self.fixed_values.clone()),
                radius: 0.0,
                kind: InnerBallKind::Point,
            };
        }
        if let Some(q) = self.q {
            if let Some(center) = self.lattice_center(q) {
                let radius = 1.0 / (8.0 * (self.n * self.n) as f64 * q as f64);
                return InnerBall {
                    center,
                    radius,
                    kind: InnerBallKind::Lattice,
                };
            }
        }
        let center = self.midpoint_center();
        let radius = 0.5 * self.min_slack(&center.data);
        InnerBall {
            center,
            radius,
            kind: InnerBallKind::Midpoint,
        }
    }

    fn lattice_center(&self, q: u64) -> Option<RayleighTriangle> {
        let n = self.n;
        let q = q as i128;
        // Numerators of the current row over the denominator `den`.
        let mut upper: Vec<i128> = self
            .lambda
            .iter()
            .map(|&x| (x * q as f64).round() as i128)
            .collect();
        let mut data = self.fixed_values.clone();
        for (i, &num) in upper.iter().enumerate() {
            data[flat_index(i + 1, n)] = num as f64 / q as f64;
        }
        for j in 1..n {
            let m = n - j;
            let new_den = (j as i128 + 1) * q;
            // Row m+1 holds numerators over j*q; rescale bounds to j*(j+1)*q.
            let scale_old = j as i128 + 1;
            let mut row = Vec::with_capacity(m);
            for i in 1..=m {
                let hi = upper[i - 1] * scale_old;
                let lo = upper[i] * scale_old;
                let jj = j as i128;
                let k = if self.fixed_mask[flat_index(i, m)] || hi == lo {
                    if hi % jj != 0 {
                        return None;
                    }
                    hi / jj
                } else {
                    // Need lo < k * j < hi.
                    let mut k = (hi + lo).div_euclid(2 * jj);
                    if k * jj <= lo {
                        k += 1;
                    }
                    if k * jj >= hi {
                        return None;
                    }
                    k
                };
                row.push(k);
                data[flat_index(i, m)] = k as f64 / new_den as f64;
            }
            upper = row;
        }
        Some(RayleighTriangle { n, data })
    }

    fn midpoint_center(&self) -> RayleighTriangle {
        let n = self.n;
        let mut data = self.fixed_values.clone();
        for m in (1..n).rev() {
            for i in 1..=m {
                let k = flat_index(i, m);
                if !self.fixed_mask[k] {
                    data[k] = 0.5 * (data[flat_index(i, m + 1)] + data[flat_index(i + 1, m + 1)]);
                }
            }
        }
        RayleighTriangle { n, data }
    }
}

/// Reduced log-linear exponent on `GT(lambda)`.
///
/// `<y, type(P)> = const_term + <y_delta, P>` where `y_delta_{i,j} = y_j - y_{j+1}`
/// on rows `1..n-1`. The constant collects `y_n * sum(lambda)` and the
/// contribution of forced entries, so only free coordinates carry weight.
#[derive(Debug, Clone)]
pub struct ExponentSpec {
    pub y: Vec<f64>,
    /// Flat over rows `1..=n-1`, same packing as a triangle of size `n-1`.
    pub y_delta: Vec<f64>,
    pub const_term: f64,
    /// Weights on the polytope's free coordinates.
    pub live: Vec<f64>,
}

impl ExponentSpec {
    pub fn y_delta_entry(&self, i: usize, j: usize) -> f64 {
        self.y_delta[flat_index(i, j)]
    }

    pub fn live_norm(&self) -> f64 {
        self.live.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn is_uniform(&self) -> bool {
        self.live.iter().all(|&x| x == 0.0)
    }
}

pub fn reduce_exponent(y: &[f64], poly: &GtPolytope) -> Result<ExponentSpec> {
    let n = poly.n;
    if y.len() != n {
        return domain(format!("y has length {}, lambda has length {n}", y.len()));
    }
    if y.iter().any(|x| !x.is_finite()) {
        return domain("y must be finite");
    }
    if y.windows(2).any(|w| w[0] < w[1]) {
        return domain("y must be sorted non-increasing");
    }
    let mut y_delta = vec![0.0; triangle_len(n - 1)];
    for j in 1..n {
        let d = y[j - 1] - y[j];
        for i in 1..=j {
            y_delta[flat_index(i, j)] = d;
        }
    }
    let mut const_term = y[n - 1] * poly.lambda.iter().sum::<f64>();
    for ((d, &fixed), v) in y_delta.iter().zip(&poly.fixed_mask).zip(&poly.fixed_values) {
        if fixed {
            const_term += d * v;
        }
    }
    let live = poly.free.iter().map(|&k| y_delta[k]).collect();
    Ok(ExponentSpec {
        y: y.to_vec(),
        y_delta,
        const_term,
        live,
    })
}

/// Unnormalized log-density `<y_delta, P>` over the free coordinates.
pub fn log_density(spec: &ExponentSpec, poly: &GtPolytope, p: &RayleighTriangle) -> Result<f64> {
    if !poly.membership(p)? {
        return Err(Error::Domain("triangle is not in the polytope".into()));
    }
    Ok(live_dot(spec, poly, &p.data))
}

pub(crate) fn live_dot(spec: &ExponentSpec, poly: &GtPolytope, data: &[f64]) -> f64 {
    poly.free
        .iter()
        .zip(&spec.live)
        .map(|(&k, w)| w * data[k])
        .sum()
}

/// Uniform sample from `GT(lambda)`: the Rayleigh triangle of a
/// Haar-conjugated `diag(lambda)`.
pub fn uniform_gt_sample<R: Rng + ?Sized>(poly: &GtPolytope, rng: &mut R) -> RayleighTriangle {
    if poly.is_point() {
        return RayleighTriangle::from_flat(poly.n, poly.fixed_values.clone());
    }
    let u = sample_haar_unitary(poly.n, rng).expect("n >= 1");
    let x = HermitianMatrix::from_real_diagonal(&poly.lambda)
        .expect("n >= 1")
        .conjugate_by(&u);
    rayleigh_map(&x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn poly(lambda: &[f64]) -> GtPolytope {
        build_polytope(lambda, default_equality_tol(lambda)).unwrap()
    }

    fn tri(rows: &[&[f64]]) -> RayleighTriangle {
        RayleighTriangle::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn distinct_lambda_has_no_forced_interior() {
        let p = poly(&[1.0, 0.0]);
        assert_eq!(p.free_dim(), 1);
        assert_eq!(p.free_position(0), (1, 1));
        assert!(!p.is_fixed(1, 1));
    }

    #[test]
    fn repeated_lambda_forces_entries() {
        let p = poly(&[1.0, 1.0, 0.0]);
        assert!(p.is_fixed(1, 2));
        assert_eq!(p.fixed_value(1, 2), Some(1.0));
        assert!(!p.is_fixed(2, 2) && !p.is_fixed(1, 1));
        assert_eq!(p.free_dim(), 2);
        // Row-major from row 1 upward.
        assert_eq!(p.free_position(0), (1, 1));
        assert_eq!(p.free_position(1), (2, 2));
    }

    #[test]
    fn constant_lambda_is_a_point() {
        let p = poly(&[2.5, 2.5, 2.5]);
        assert!(p.is_point());
        let center = p.inner_ball();
        assert_eq!(center.radius, 0.0);
        assert!(center.center.as_flat().iter().all(|&x| x == 2.5));
    }

    #[test]
    fn fixed_mask_matches_run_rule() {
        // lambda = (3,1,1,1,0): run p=2..4, n=5 -> R_{i,j} fixed for 2 <= i <= j-1.
        let p = poly(&[3.0, 1.0, 1.0, 1.0, 0.0]);
        for j in 1..5 {
            for i in 1..=j {
                let expect = i >= 2 && i < j;
                assert_eq!(p.is_fixed(i, j), expect, "({i},{j})");
            }
        }
    }

    #[test]
    fn unsorted_lambda_rejected() {
        assert!(matches!(
            build_polytope(&[0.0, 1.0], 1e-9),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn membership_examples() {
        let p = poly(&[1.0, 0.0]);
        assert!(p.membership(&tri(&[&[0.5], &[1.0, 0.0]])).unwrap());
        assert!(!p.membership(&tri(&[&[1.2], &[1.0, 0.0]])).unwrap());
        assert!(!p.membership(&tri(&[&[0.5], &[1.0, 0.1]])).unwrap());
        let p3 = poly(&[1.0, 1.0, 0.0]);
        assert!(!p3
            .membership(&tri(&[&[0.5], &[0.9, 0.2], &[1.0, 1.0, 0.0]]))
            .unwrap());
        assert!(p3
            .membership(&tri(&[&[0.5], &[1.0, 0.2], &[1.0, 1.0, 0.0]]))
            .unwrap());
        assert!(matches!(
            p3.membership(&tri(&[&[0.5], &[1.0, 0.0]])),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn rayleigh_map_examples() {
        let x = HermitianMatrix::from_real_diagonal(&[1.0, 0.0]).unwrap();
        assert_eq!(rayleigh_map(&x).rows(), vec![vec![1.0], vec![1.0, 0.0]]);
        // [[.5,.5],[.5,.5]] has eigenvalues 1 and 0.
        let m = nalgebra::DMatrix::from_element(2, 2, 0.5);
        let r = rayleigh_map(&HermitianMatrix::from_real_symmetric(&m).unwrap());
        assert!((r.entry(1, 1) - 0.5).abs() < 1e-15);
        assert!((r.entry(1, 2) - 1.0).abs() < 1e-14 && r.entry(2, 2).abs() < 1e-14);
    }

    #[test]
    fn type_vector_examples() {
        assert_eq!(type_vector(&tri(&[&[2.0], &[3.0, 1.0]])), vec![2.0, 2.0]);
        assert_eq!(
            type_vector(&tri(&[&[0.0], &[0.0, 0.0], &[0.0, 0.0, 0.0]])),
            vec![0.0; 3]
        );
    }

    #[test]
    fn reduce_exponent_examples() {
        let p = poly(&[2.0, 1.0, 0.0]);
        let e = reduce_exponent(&[2.0, 1.0, 0.0], &p).unwrap();
        assert_eq!(e.y_delta, vec![1.0, 1.0, 1.0]);
        let e = reduce_exponent(&[0.3, 0.3, 0.3], &p).unwrap();
        assert!(e.y_delta.iter().all(|&d| d == 0.0) && e.is_uniform());
        let p2 = poly(&[1.0, 0.0]);
        let e = reduce_exponent(&[1.0, 0.0], &p2).unwrap();
        assert_eq!(e.const_term, 0.0);
        assert_eq!(e.y_delta_entry(1, 1), 1.0);
        assert!(reduce_exponent(&[1.0], &p2).is_err());
        assert!(reduce_exponent(&[0.0, 1.0], &p2).is_err());
    }

    #[test]
    fn log_density_examples() {
        let p = poly(&[1.0, 0.0]);
        let t = tri(&[&[0.5], &[1.0, 0.0]]);
        let e = reduce_exponent(&[1.0, 0.0], &p).unwrap();
        assert_eq!(log_density(&e, &p, &t).unwrap(), 0.5);
        let u = reduce_exponent(&[4.0, 4.0], &p).unwrap();
        assert_eq!(log_density(&u, &p, &t).unwrap(), 0.0);
        let outside = tri(&[&[1.5], &[1.0, 0.0]]);
        assert!(matches!(
            log_density(&e, &p, &outside),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn outer_radius_examples() {
        assert!((poly(&[1.0, 0.0]).outer_radius() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(poly(&[4.0, 4.0]).outer_radius(), 0.0);
        assert!((poly(&[3.0, 1.0, 0.0]).outer_radius() - 3.0 * 3f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn inner_ball_two_by_two() {
        let ball = poly(&[1.0, 0.0]).inner_ball();
        assert_eq!(ball.kind, InnerBallKind::Lattice);
        assert_eq!(ball.center.entry(1, 1), 0.5);
        assert_eq!(ball.radius, 1.0 / 32.0);
    }

    #[test]
    fn inner_ball_three_by_three() {
        // Row 2 free entries are multiples of 1/2 strictly inside (0,1) and
        // (1,2); row 1 is a multiple of 1/3 strictly inside row 2's bounds.
        let p = poly(&[2.0, 1.0, 0.0]);
        let ball = p.inner_ball();
        assert_eq!(ball.radius, 1.0 / 72.0);
        assert_eq!(ball.center.row(2), &[1.5, 0.5]);
        assert_eq!(ball.center.row(1), &[1.0]);
        // Every constraint has slack at least twice the radius.
        assert!(p.min_slack(ball.center.as_flat()) >= 2.0 * ball.radius);
    }

    #[test]
    fn inner_ball_irrational_falls_back_to_midpoints() {
        let l = [std::f64::consts::PI, 1.0, -std::f64::consts::E];
        let p = poly(&l);
        assert_eq!(p.denominator(), None);
        let ball = p.inner_ball();
        assert_eq!(ball.kind, InnerBallKind::Midpoint);
        assert!(ball.radius > 0.0);
        assert!(p.membership(&ball.center).unwrap());
    }

    #[test]
    fn rational_reconstruction() {
        assert_eq!(
            common_denominator(&[0.5, 0.25, -1.0], MAX_DENOMINATOR),
            Some(4)
        );
        assert_eq!(
            common_denominator(&[1.0 / 3.0, 0.0], MAX_DENOMINATOR),
            Some(3)
        );
        assert_eq!(
            common_denominator(&[std::f64::consts::PI], MAX_DENOMINATOR),
            None
        );
    }

    #[test]
    fn uniform_sample_of_point_polytope() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = poly(&[0.7, 0.7]);
        let t = uniform_gt_sample(&p, &mut rng);
        assert_eq!(t.rows(), vec![vec![0.7], vec![0.7, 0.7]]);
    }

    #[test]
    fn uniform_sample_rank_one_is_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = poly(&[1.0, 0.0]);
        let mut xs: Vec<f64> = (0..100_000)
            .map(|_| uniform_gt_sample(&p, &mut rng).entry(1, 1))
            .collect();
        let ks = crate::stats::ks_one_sample(&mut xs, |x| x.clamp(0.0, 1.0));
        assert!(ks.p_value > 0.01, "{ks:?}");
    }

    #[test]
    fn uniform_sample_simplex_marginals() {
        // lambda = (1,0,0): the type vector is uniform on the 2-simplex, so each
        // coordinate has the Beta(1,2) marginal with CDF 1 - (1-x)^2.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = poly(&[1.0, 0.0, 0.0]);
        assert_eq!(p.free_dim(), 2);
        let samples: Vec<Vec<f64>> = (0..20_000)
            .map(|_| type_vector(&uniform_gt_sample(&p, &mut rng)))
            .collect();
        for k in 0..3 {
            let mut xs: Vec<f64> = samples.iter().map(|t| t[k]).collect();
            let ks = crate::stats::ks_one_sample(&mut xs, |x| {
                let x = x.clamp(0.0, 1.0);
                1.0 - (1.0 - x) * (1.0 - x)
            });
            assert!(ks.p_value > 0.01, "coordinate {k}: {ks:?}");
        }
    }
}
