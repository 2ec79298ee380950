//! Small numerical helpers shared by the estimators: compensated summation,
//! sample statistics, Poisson weights and least-squares lines.

use statrs::function::gamma::ln_gamma;

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl std::iter::FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// Running mean and variance (Welford), merged with the pairwise update.
#[derive(Debug, Clone, Copy, Default)]
pub struct MeanAccumulator {
    n: u64,
    mean: f64,
    m2: f64,
}

impl MeanAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    /// Appends another accumulator; callers merge partial results in index order.
    pub fn merge(&mut self, other: &MeanAccumulator) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        let w = other.n as f64 / n as f64;
        self.mean += delta * w;
        self.m2 += other.m2 + delta * delta * self.n as f64 * w;
        self.n = n;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        if self.n == 0 {
            return f64::NAN;
        }
        self.mean
    }

    /// Standard error of the mean from the unbiased sample variance.
    pub fn stderr(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let n = self.n as f64;
        ((self.m2 / (n - 1.0)).max(0.0) / n).sqrt()
    }
}

/// `P(N = k)` for `N ~ Poisson(rate)`.
pub fn poisson_pmf(rate: f64, k: u64) -> f64 {
    if rate == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    let kf = k as f64;
    (kf * rate.ln() - rate - ln_gamma(kf + 1.0)).exp()
}

/// Poisson weights `P(N = 0..=k_max)`.
pub fn poisson_weights(rate: f64, k_max: usize) -> Vec<f64> {
    (0..=k_max as u64).map(|k| poisson_pmf(rate, k)).collect()
}

/// Upper bound on `P(N > k)` for `N ~ Poisson(rate)`.
///
/// Sums the pmf past `k` until terms are negligible; for `k + 1 > rate` the
/// remainder after the last term is bounded by a geometric series.
pub fn poisson_upper_tail(rate: f64, k: u64) -> f64 {
    if rate == 0.0 {
        return 0.0;
    }
    let mut j = k + 1;
    let mut term = poisson_pmf(rate, j);
    let mut total = CompensatedSum::new();
    loop {
        total.add(term);
        // ratio of consecutive terms, decreasing in j
        let ratio = rate / (j as f64 + 1.0);
        if ratio < 1.0 {
            let remainder = term * ratio / (1.0 - ratio);
            if remainder <= 1e-17 * total.value() || remainder < 1e-300 {
                total.add(remainder);
                break;
            }
        }
        term *= ratio;
        j += 1;
    }
    total.value().min(1.0)
}

/// Smallest `k` with `P(N > k) <= eps`.
pub fn poisson_quantile_tail(rate: f64, eps: f64) -> u64 {
    let mut k = rate.ceil() as u64;
    while poisson_upper_tail(rate, k) > eps {
        k += 1 + (k / 64);
    }
    // step back to the smallest admissible value
    while k > 0 && poisson_upper_tail(rate, k - 1) <= eps {
        k -= 1;
    }
    k
}

/// Ordinary least-squares line `y = intercept + slope * x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn least_squares(xs: &[f64], ys: &[f64]) -> LineFit {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        ((sxy * sxy) / (sxx * syy)).clamp(0.0, 1.0)
    };
    LineFit {
        slope,
        intercept,
        r_squared,
    }
}

/// Shortest decimal that parses back to `x`, using exponent notation only
/// for very small or very large magnitudes. Always uses `.` as separator.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let a = x.abs();
    if a != 0.0 && !(1e-5..1e16).contains(&a) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}
