//! Small statistical toolkit for the validation suites: Kolmogorov–Smirnov
//! tests, Monte Carlo error bars, histograms.

/// Outcome of a Kolmogorov–Smirnov test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Survival function of the Kolmogorov distribution, `P(K > x)`.
pub fn kolmogorov_survival(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < 0.2 {
        // Series below converges slowly here; the value is 1 to double precision.
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * x * x).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// p-value for a KS statistic `d` at effective sample size `n_eff`
/// (Stephens' small-sample correction).
fn ks_p_value(d: f64, n_eff: f64) -> f64 {
    let sq = n_eff.sqrt();
    kolmogorov_survival((sq + 0.12 + 0.11 / sq) * d)
}

/// One-sample KS test of `xs` against the continuous CDF `cdf`.
/// Sorts `xs` in place.
pub fn ks_one_sample<F: Fn(f64) -> f64>(xs: &mut [f64], cdf: F) -> KsResult {
    assert!(!xs.is_empty(), "KS test needs at least one sample");
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    KsResult {
        statistic: d,
        p_value: ks_p_value(d, n),
    }
}

/// Two-sample KS test. Sorts both inputs in place.
pub fn ks_two_sample(a: &mut [f64], b: &mut [f64]) -> KsResult {
    assert!(
        !a.is_empty() && !b.is_empty(),
        "KS test needs non-empty samples"
    );
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    KsResult {
        statistic: d,
        p_value: ks_p_value(d, na * nb / (na + nb)),
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Standard error of the mean of a possibly autocorrelated series, by
/// non-overlapping batch means over `batches` batches.
pub fn batch_means_stderr(xs: &[f64], batches: usize) -> f64 {
    let batches = batches.clamp(2, xs.len().max(2));
    let size = xs.len() / batches;
    if size == 0 {
        return f64::NAN;
    }
    let means: Vec<f64> = (0..batches)
        .map(|b| mean(&xs[b * size..(b + 1) * size]))
        .collect();
    (variance(&means) / batches as f64).sqrt()
}

/// Counts of `xs` in `bins` equal-width bins over `[lo, hi]`; values
/// outside the range are clamped into the end bins.
pub fn histogram(xs: &[f64], lo: f64, hi: f64, bins: usize) -> Vec<u64> {
    let mut counts = vec![0u64; bins];
    let width = (hi - lo) / bins as f64;
    for &x in xs {
        let b = ((x - lo) / width).floor();
        let b = if b < 0.0 {
            0
        } else {
            (b as usize).min(bins - 1)
        };
        counts[b] += 1;
    }
    counts
}

/// CDF of the density proportional to `exp(beta x)` on `[0, 1]`.
pub fn truncated_exponential_cdf(beta: f64, x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    if beta.abs() < 1e-12 {
        return x;
    }
    if beta > 0.0 {
        // (e^{bx} - 1)/(e^b - 1) = e^{b(x-1)} (1 - e^{-bx}) / (1 - e^{-b})
        (beta * (x - 1.0)).exp() * (-(-beta * x).exp_m1()) / (-(-beta).exp_m1())
    } else {
        (beta * x).exp_m1() / beta.exp_m1()
    }
}

/// Mean of the density proportional to `exp(beta x)` on `[0, 1]`:
/// `1/(1 - e^{-beta}) - 1/beta`.
pub fn truncated_exponential_mean(beta: f64) -> f64 {
    if beta.abs() < 1e-6 {
        return 0.5 + beta / 12.0;
    }
    1.0 / (-(-beta).exp_m1()) - 1.0 / beta
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn kolmogorov_reference_values() {
        // Known quantiles of the Kolmogorov distribution.
        assert!((kolmogorov_survival(1.358) - 0.05).abs() < 1e-3);
        assert!((kolmogorov_survival(1.628) - 0.01).abs() < 1e-3);
        assert_eq!(kolmogorov_survival(0.0), 1.0);
    }

    #[test]
    fn ks_accepts_uniform_and_rejects_shifted() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut xs: Vec<f64> = (0..10_000).map(|_| rng.random::<f64>()).collect();
        assert!(ks_one_sample(&mut xs, |x| x.clamp(0.0, 1.0)).p_value > 0.01);
        let mut ys: Vec<f64> = (0..10_000).map(|_| rng.random::<f64>().powf(1.2)).collect();
        assert!(ks_one_sample(&mut ys, |x| x.clamp(0.0, 1.0)).p_value < 1e-6);
    }

    #[test]
    fn ks_two_sample_detects_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut a: Vec<f64> = (0..5000).map(|_| rng.random::<f64>()).collect();
        let mut b: Vec<f64> = (0..5000).map(|_| rng.random::<f64>()).collect();
        assert!(ks_two_sample(&mut a, &mut b).p_value > 0.01);
        let mut c: Vec<f64> = (0..5000).map(|_| rng.random::<f64>() + 0.1).collect();
        assert!(ks_two_sample(&mut a, &mut c).p_value < 1e-6);
    }

    #[test]
    fn truncated_exponential_closed_forms() {
        // beta = 1: mean 1/(e-1).
        let e = std::f64::consts::E;
        assert!((truncated_exponential_mean(1.0) - 1.0 / (e - 1.0)).abs() < 1e-15);
        assert!((truncated_exponential_mean(0.0) - 0.5).abs() < 1e-15);
        for beta in [-30.0, -1.0, 1e-13, 0.5, 5.0, 20.0, 700.0] {
            assert!(truncated_exponential_cdf(beta, 0.0).abs() < 1e-15);
            assert!((truncated_exponential_cdf(beta, 1.0) - 1.0).abs() < 1e-14);
            // Midpoint rule check of the mean against the closed form.
            let m = 200_000;
            let (mut num, mut den) = (0.0, 0.0);
            let shift = beta.max(0.0);
            for i in 0..m {
                let x = (i as f64 + 0.5) / m as f64;
                let w = (beta * x - shift).exp();
                num += x * w;
                den += w;
            }
            let quad = num / den;
            assert!(
                (quad - truncated_exponential_mean(beta)).abs() < 1e-6,
                "beta {beta}"
            );
        }
    }

    #[test]
    fn histogram_clamps() {
        let h = histogram(&[-1.0, 0.05, 0.5, 0.99, 2.0], 0.0, 1.0, 10);
        assert_eq!(h.iter().sum::<u64>(), 5);
        assert_eq!(h[0], 2);
        assert_eq!(h[9], 2);
        assert_eq!(h[5], 1);
    }
}
