use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use super::BranchingError;
use crate::numeric::poisson_pmf;

/// Tolerance on the total mass of a parsed table.
pub const PARSE_MASS_TOL: f64 = 1e-9;

/// Tolerance on the total mass of a table built programmatically.
pub const MASS_TOL: f64 = 1e-12;

/// Below this rate Poisson draws use sequential inversion.
const INVERSION_MAX_RATE: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub enum OffspringKind {
    Poisson { rate: f64 },
    /// `probs[n]` is the probability of `n` children.
    Table { probs: Vec<f64> },
}

/// An offspring distribution with its mean and extinction probability.
#[derive(Debug, Clone, PartialEq)]
pub struct OffspringModel {
    kind: OffspringKind,
    mean: f64,
    extinction: f64,
    /// Cumulative sums of `probs` for table laws.
    cdf: Vec<f64>,
}

impl OffspringModel {
    pub fn poisson(rate: f64) -> Result<Self, BranchingError> {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(BranchingError::InvalidDistribution(format!(
                "poisson rate must be positive and finite, got {rate}"
            )));
        }
        Ok(Self::finish(OffspringKind::Poisson { rate }))
    }

    /// Builds a table law from `(n, probability)` pairs. Repeated keys add up.
    pub fn table(entries: &[(usize, f64)]) -> Result<Self, BranchingError> {
        Self::table_with_tol(entries, MASS_TOL)
    }

    fn table_with_tol(entries: &[(usize, f64)], tol: f64) -> Result<Self, BranchingError> {
        if entries.is_empty() {
            return Err(BranchingError::InvalidDistribution("empty table".into()));
        }
        let len = entries.iter().map(|&(n, _)| n).max().unwrap_or(0) + 1;
        let mut probs = vec![0.0; len];
        for &(n, p) in entries {
            if !(p.is_finite() && p >= 0.0) {
                return Err(BranchingError::InvalidDistribution(format!(
                    "probability of {n} children is {p}"
                )));
            }
            probs[n] += p;
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > tol {
            return Err(BranchingError::InvalidDistribution(format!(
                "table sums to {total}"
            )));
        }
        for p in &mut probs {
            *p /= total;
        }
        while probs.len() > 1 && probs[probs.len() - 1] == 0.0 {
            probs.pop();
        }
        if probs.len() == 2 && probs[1] == 1.0 {
            return Err(BranchingError::DegenerateModel);
        }
        Ok(Self::finish(OffspringKind::Table { probs }))
    }

    fn finish(kind: OffspringKind) -> Self {
        let (mean, cdf) = match &kind {
            OffspringKind::Poisson { rate } => (*rate, Vec::new()),
            OffspringKind::Table { probs } => {
                let mean = probs.iter().enumerate().map(|(n, p)| n as f64 * p).sum();
                let mut acc = 0.0;
                let cdf = probs
                    .iter()
                    .map(|p| {
                        acc += p;
                        acc
                    })
                    .collect();
                (mean, cdf)
            }
        };
        let mut model = Self {
            kind,
            mean,
            extinction: 1.0,
            cdf,
        };
        model.extinction = solve_extinction_unchecked(&model, 1e-15);
        model
    }

    pub fn kind(&self) -> &OffspringKind {
        &self.kind
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Extinction probability, the smallest fixed point of the generating function.
    pub fn extinction(&self) -> f64 {
        self.extinction
    }

    pub fn is_supercritical(&self) -> bool {
        self.mean > 1.0
    }

    pub fn pmf(&self, n: usize) -> f64 {
        match &self.kind {
            OffspringKind::Poisson { rate } => poisson_pmf(*rate, n as u64),
            OffspringKind::Table { probs } => probs.get(n).copied().unwrap_or(0.0),
        }
    }

    /// Generating function `s -> E[s^N]`.
    pub fn pgf(&self, s: f64) -> f64 {
        match &self.kind {
            OffspringKind::Poisson { rate } => (rate * (s - 1.0)).exp(),
            OffspringKind::Table { probs } => probs.iter().rev().fold(0.0, |acc, p| acc * s + p),
        }
    }

    /// Derivative of the generating function.
    pub fn pgf_derivative(&self, s: f64) -> f64 {
        match &self.kind {
            OffspringKind::Poisson { rate } => rate * (rate * (s - 1.0)).exp(),
            OffspringKind::Table { probs } => probs
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (n, p)| acc * s + n as f64 * p),
        }
    }

    /// Offspring law of a vertex whose subtree is finite: `n -> mu(n) L^(n-1)`.
    pub fn extinct_dual(&self) -> Result<OffspringModel, BranchingError> {
        let l = self.extinction;
        if !self.is_supercritical() {
            return Err(BranchingError::SubcriticalModel { mean: self.mean });
        }
        if l == 0.0 {
            return Err(BranchingError::NoExtinction);
        }
        match &self.kind {
            OffspringKind::Poisson { rate } => Self::poisson(rate * l),
            OffspringKind::Table { probs } => {
                let entries: Vec<(usize, f64)> = probs
                    .iter()
                    .enumerate()
                    .map(|(n, p)| (n, p * l.powi(n as i32 - 1)))
                    .collect();
                Self::table_with_tol(&entries, 1e-9)
            }
        }
    }

    /// Child-count law of a survivor vertex: `n -> mu(n)(1 - L^n)/(1 - L)`.
    pub fn survivor_marginal_pmf(&self, n: usize) -> f64 {
        let l = self.extinction;
        self.pmf(n) * (1.0 - l.powi(n as i32)) / (1.0 - l)
    }

    /// Draws a child count.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        match &self.kind {
            OffspringKind::Poisson { rate } => sample_poisson(*rate, rng),
            OffspringKind::Table { .. } => {
                let u: f64 = rng.random();
                let idx = self.cdf.partition_point(|&c| c <= u);
                // guards against the last cumulative sum rounding below 1
                idx.min(self.cdf.len() - 1)
            }
        }
    }
}

fn sample_poisson<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> usize {
    if rate < INVERSION_MAX_RATE {
        let u: f64 = rng.random();
        let mut p = (-rate).exp();
        let mut cdf = p;
        let mut k = 0usize;
        while u > cdf && k < 1000 {
            k += 1;
            p *= rate / k as f64;
            cdf += p;
        }
        k
    } else {
        let d = Poisson::new(rate).expect("rate is positive and finite");
        d.sample(rng) as usize
    }
}

/// Smallest fixed point of the generating function, without validation.
fn solve_extinction_unchecked(model: &OffspringModel, tol: f64) -> f64 {
    if model.mean <= 1.0 {
        return 1.0;
    }
    if model.pmf(0) == 0.0 {
        return 0.0;
    }
    let g = |s: f64| model.pgf(s) - s;
    // fixed-point iteration from 0 increases monotonically to the smallest root
    let mut s = 0.0f64;
    for _ in 0..50 {
        let next = model.pgf(s);
        let step = next - s;
        s = next;
        if step < tol / 10.0 {
            break;
        }
    }
    // g is convex and decreasing left of the root, so Newton from the left
    // stays to the left and converges monotonically
    for _ in 0..100 {
        let gs = g(s);
        let dg = model.pgf_derivative(s) - 1.0;
        if gs <= 0.0 || dg >= 0.0 {
            break;
        }
        let next = s - gs / dg;
        if !(next > s) {
            break;
        }
        let step = next - s;
        s = next;
        if step < tol / 10.0 {
            break;
        }
    }
    if g(s).abs() <= tol.max(1e-15) {
        return s;
    }
    bisect_root(&g, s, tol)
}

/// Bisection on `[lo, hi]` with `g(lo) > 0 > g(hi)`.
fn bisect_root(g: &impl Fn(f64) -> f64, lo: f64, tol: f64) -> f64 {
    let mut lo = lo;
    let mut gap = (1.0 - lo) / 2.0;
    let mut hi = 1.0 - gap;
    // walk towards 1 until the sign changes; points passed on the way have g > 0
    while g(hi) >= 0.0 && gap > f64::EPSILON {
        lo = hi;
        gap /= 2.0;
        hi = 1.0 - gap;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo < tol / 10.0 || mid == lo || mid == hi {
            break;
        }
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Smallest fixed point of `s -> sum mu(n) s^n`, accurate to `tol`; 1 when the mean is at most 1.
pub fn solve_extinction(model: &OffspringModel, tol: f64) -> Result<f64, BranchingError> {
    if !(tol > 0.0) {
        return Err(BranchingError::InvalidDistribution(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    if let OffspringKind::Table { probs } = &model.kind {
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(BranchingError::InvalidDistribution(format!(
                "table sums to {total}"
            )));
        }
    }
    Ok(solve_extinction_unchecked(model, tol))
}

impl FromStr for OffspringModel {
    type Err = BranchingError;

    /// Parses `poisson:2.0` or `table:0=0.25,2=0.75`, and the bracketed
    /// forms `poisson(2.0)` and `table{0:0.25,2:0.75}`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        if let Some(rate) = t.strip_prefix("poisson(").and_then(|r| r.strip_suffix(')')) {
            return format!("poisson:{rate}").parse();
        }
        if let Some(body) = t.strip_prefix("table{").and_then(|r| r.strip_suffix('}')) {
            return format!("table:{}", body.replace(':', "=")).parse();
        }
        let bad = |msg: &str| BranchingError::Parse(format!("{msg} in {s:?}"));
        let (kind, body) = s.split_once(':').ok_or_else(|| bad("missing ':'"))?;
        match kind.trim() {
            "poisson" => {
                let rate: f64 = body.trim().parse().map_err(|_| bad("bad rate"))?;
                Self::poisson(rate)
            }
            "table" => {
                let mut entries = Vec::new();
                for item in body.split(',') {
                    let (k, v) = item.split_once('=').ok_or_else(|| bad("missing '='"))?;
                    let k: usize = k.trim().parse().map_err(|_| bad("bad child count"))?;
                    let v: f64 = v.trim().parse().map_err(|_| bad("bad probability"))?;
                    entries.push((k, v));
                }
                Self::table_with_tol(&entries, PARSE_MASS_TOL)
            }
            _ => Err(bad("unknown offspring kind")),
        }
    }
}

impl fmt::Display for OffspringModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            OffspringKind::Poisson { rate } => write!(f, "poisson:{rate}"),
            OffspringKind::Table { probs } => {
                write!(f, "table:")?;
                let mut first = true;
                for (n, p) in probs.iter().enumerate().filter(|(_, p)| **p > 0.0) {
                    if !first {
                        write!(f, ",")?;
                    }
                    first = false;
                    write!(f, "{n}={p}")?;
                }
                Ok(())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::SmallRng;
    use rand::SeedableRng;

    #[test]
    fn binary_table_extinction_is_one_third() {
        let m: OffspringModel = "table:0=0.25,2=0.75".parse().unwrap();
        assert!((m.extinction() - 1.0 / 3.0).abs() < 1e-12);
        assert!((solve_extinction(&m, 1e-12).unwrap() - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn poisson_two_fixed_point() {
        let m = OffspringModel::poisson(2.0).unwrap();
        let l = m.extinction();
        assert!((l - 0.2032).abs() < 1e-4);
        assert!(((2.0 * (l - 1.0)).exp() - l).abs() <= 1e-12);
    }

    #[test]
    fn no_leaves_means_no_extinction() {
        let m = OffspringModel::table(&[(1, 0.5), (2, 0.5)]).unwrap();
        assert_eq!(m.extinction(), 0.0);
    }

    #[test]
    fn critical_and_subcritical_die_out() {
        assert_eq!(OffspringModel::poisson(1.0).unwrap().extinction(), 1.0);
        assert_eq!(OffspringModel::poisson(0.3).unwrap().extinction(), 1.0);
        assert_eq!(OffspringModel::table(&[(0, 1.0)]).unwrap().extinction(), 1.0);
    }

    #[test]
    fn rejects_bad_tables() {
        assert!(matches!(
            "table:0=0.25,2=0.7".parse::<OffspringModel>(),
            Err(BranchingError::InvalidDistribution(_))
        ));
        assert!(matches!(
            OffspringModel::table(&[(1, 1.0)]),
            Err(BranchingError::DegenerateModel)
        ));
        assert!("poisson:-1".parse::<OffspringModel>().is_err());
        assert!("geometric:0.5".parse::<OffspringModel>().is_err());
        assert!("table:a=1".parse::<OffspringModel>().is_err());
        assert!("table{0:0.5,1:0.6}".parse::<OffspringModel>().is_err());
        assert!("poisson(2".parse::<OffspringModel>().is_err());
    }

    #[test]
    fn bracketed_forms() {
        let a: OffspringModel = "table{0:0.25, 2:0.75}".parse().unwrap();
        assert_eq!(a, "table:0=0.25,2=0.75".parse().unwrap());
        let b: OffspringModel = "poisson(2)".parse().unwrap();
        assert_eq!(b, OffspringModel::poisson(2.0).unwrap());
    }

    #[test]
    fn parse_accepts_small_rounding() {
        let m: OffspringModel = "table:0=0.3333333333,1=0.6666666667".parse().unwrap();
        let total: f64 = (0..2).map(|n| m.pmf(n)).sum();
        assert!((total - 1.0).abs() < 1e-15);
    }

    #[test]
    fn dual_of_binary_table() {
        let m: OffspringModel = "table:0=0.25,2=0.75".parse().unwrap();
        let d = m.extinct_dual().unwrap();
        assert!((d.pmf(0) - 0.75).abs() < 1e-12);
        assert!((d.pmf(2) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn dual_of_poisson_is_poisson() {
        let m = OffspringModel::poisson(2.0).unwrap();
        match m.extinct_dual().unwrap().kind() {
            OffspringKind::Poisson { rate } => assert!((rate - 0.4064).abs() < 2e-4),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn dual_needs_supercritical_with_extinction() {
        assert!(matches!(
            OffspringModel::poisson(0.5).unwrap().extinct_dual(),
            Err(BranchingError::SubcriticalModel { .. })
        ));
        assert!(matches!(
            OffspringModel::table(&[(2, 1.0)]).unwrap().extinct_dual(),
            Err(BranchingError::NoExtinction)
        ));
    }

    #[test]
    fn display_round_trips() {
        for s in ["poisson:2", "table:0=0.25,2=0.75"] {
            let m: OffspringModel = s.parse().unwrap();
            assert_eq!(m.to_string(), s);
        }
    }

    #[test]
    fn normalizations_hold() {
        for m in [
            OffspringModel::poisson(2.0).unwrap(),
            OffspringModel::poisson(1.5).unwrap(),
            "table:0=0.25,2=0.75".parse().unwrap(),
            "table:0=0.1,1=0.2,3=0.7".parse().unwrap(),
        ] {
            let d = m.extinct_dual().unwrap();
            let dual_mass: f64 = (0..200).map(|n| d.pmf(n)).sum();
            let surv_mass: f64 = (0..200).map(|n| m.survivor_marginal_pmf(n)).sum();
            assert!((dual_mass - 1.0).abs() <= 1e-12, "{m}: {dual_mass}");
            assert!((surv_mass - 1.0).abs() <= 1e-12, "{m}: {surv_mass}");
        }
    }

    #[test]
    fn poisson_sampler_mean() {
        let mut rng = SmallRng::seed_from_u64(1);
        for rate in [0.4, 3.0, 25.0] {
            let n = 100_000;
            let sum: usize = (0..n).map(|_| sample_poisson(rate, &mut rng)).sum();
            let mean = sum as f64 / n as f64;
            assert!((mean - rate).abs() < 5.0 * (rate / n as f64).sqrt(), "{rate} {mean}");
        }
    }
}
