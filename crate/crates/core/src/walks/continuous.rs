use serde::{Deserialize, Serialize};

use super::{BallWalk, ReturnCurve, TimeAxis, WalkError};
use crate::branching::SampledTree;
use crate::numeric::{poisson_pmf, poisson_quantile_tail, poisson_upper_tail, CompensatedSum};

/// Default bound on the certified error of the semigroup computation.
pub const SEMIGROUP_TOL: f64 = 1e-10;

/// A value together with a certified bound on its absolute error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Certified {
    pub value: f64,
    pub error_bound: f64,
}

/// Generator of the continuous-time walk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// `Delta = D - A`: jumps at rate `deg(x)`.
    Laplacian,
    /// `D^-1 Delta`: jumps at rate 1.
    Normalized,
}

/// `P(Y_s = o)` for the rate-1 walk from its discrete return curve, by
/// Poisson time change: `sum_k curve(k) P(N_s = k)`.
///
/// The curve must list every even time up to its horizon `T`; the neglected
/// mass `P(N_s > T)` is the reported error bound.
pub fn ct_return_mixture(curve: &ReturnCurve, s: f64) -> Result<Certified, WalkError> {
    if curve.axis != TimeAxis::Discrete {
        return Err(WalkError::InvalidTimes("mixture needs a discrete curve".into()));
    }
    if !(s >= 0.0 && s.is_finite()) {
        return Err(WalkError::InvalidTimes(format!("time {s} is not a nonnegative number")));
    }
    if s == 0.0 {
        return Ok(Certified { value: 1.0, error_bound: 0.0 });
    }
    // horizon: largest even T with all even times 0..=T present
    let mut horizon: Option<u64> = None;
    let mut expect = 0u64;
    let mut values = Vec::new();
    for (&t, &p) in curve.times.iter().zip(&curve.estimates) {
        let t = t as u64;
        if t % 2 == 1 {
            continue;
        }
        if t < expect {
            continue;
        }
        if t != expect {
            break;
        }
        values.push(p);
        horizon = Some(t);
        expect += 2;
    }
    let horizon = horizon.ok_or(WalkError::HorizonTooShort { horizon: 0.0, needed: 2.0 * s + 6.0 * s.sqrt() })?;
    let needed = 2.0 * s + 6.0 * s.sqrt();
    if (horizon as f64) < needed {
        return Err(WalkError::HorizonTooShort { horizon: horizon as f64, needed });
    }
    let mut total = CompensatedSum::new();
    for (j, p) in values.iter().enumerate() {
        total.add(p * poisson_pmf(s, 2 * j as u64));
    }
    Ok(Certified {
        value: total.value(),
        error_bound: poisson_upper_tail(s, horizon),
    })
}

/// Which walk the semigroup is evaluated for.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Region {
    /// The walk on the full tree. Exits from the expanded ball are bounded
    /// and added to the error; the call fails if the total exceeds `tol`.
    Full { tol: f64 },
    /// The walk killed on leaving depth `radius`.
    Killed { radius: u32 },
}

/// `<delta_o, exp(-s L) delta_o>` with `L = Delta` or `L = D^-1 Delta`, with
/// the default tolerance `1e-10` on the full tree.
pub fn ct_return_semigroup(tree: &SampledTree, s: f64, variant: Variant) -> Result<f64, WalkError> {
    ct_return_semigroup_in(tree, s, variant, Region::Full { tol: SEMIGROUP_TOL }).map(|c| c.value)
}

/// Uniformization on the ball.
///
/// The normalized generator is similar to the symmetric `I - D^-1/2 A D^-1/2`,
/// which is uniformized at rate 2 (the lazy symmetric chain). The Laplacian is
/// uniformized at the maximal ball degree. An exit from the ball needs more
/// than `radius` jumps, which bounds its probability by a Poisson tail.
pub fn ct_return_semigroup_in(
    tree: &SampledTree,
    s: f64,
    variant: Variant,
    region: Region,
) -> Result<Certified, WalkError> {
    if !(s >= 0.0 && s.is_finite()) {
        return Err(WalkError::InvalidTimes(format!("time {s} is not a nonnegative number")));
    }
    if s == 0.0 {
        return Ok(Certified { value: 1.0, error_bound: 0.0 });
    }
    let radius = match region {
        Region::Killed { radius } => radius,
        Region::Full { .. } => tree.complete_depth().saturating_sub(1).min(tree.max_generated_depth()),
    };
    let ball = BallWalk::new(tree, radius)?;
    let finite = tree.is_finite_complete() && ball.radius() >= tree.max_generated_depth();
    let n = ball.len();
    let deg: Vec<f64> = (0..n).map(|v| ball.degree(v) as f64).collect();
    let max_deg = ball.max_degree().max(1) as f64;
    let (rate, jump_rate) = match variant {
        Variant::Normalized => (2.0 * s, s),
        Variant::Laplacian => (max_deg * s, max_deg * s),
    };
    let k_max = poisson_quantile_tail(rate, SEMIGROUP_TOL * 1e-2);
    let uniform_tail = poisson_upper_tail(rate, k_max);
    let exit_bound = match region {
        Region::Killed { .. } => 0.0,
        Region::Full { .. } if finite => 0.0,
        Region::Full { .. } => poisson_upper_tail(jump_rate, u64::from(ball.radius())),
    };
    let error_bound = uniform_tail + exit_bound;
    if let Region::Full { tol } = region {
        if error_bound > tol {
            return Err(WalkError::InsufficientRadius {
                needed: radius + 1,
                available: radius,
            });
        }
    }
    // v_{k+1} = M v_k with M symmetric (normalized) or M = I - Delta/rate (laplacian)
    let mut v = vec![0.0; n];
    let mut next = vec![0.0; n];
    v[0] = 1.0;
    let inv_sqrt: Vec<f64> = deg.iter().map(|&d| if d > 0.0 { d.sqrt().recip() } else { 0.0 }).collect();
    let mut total = CompensatedSum::new();
    total.add(poisson_pmf(rate, 0));
    let mut depth = 0u32;
    for k in 1..=k_max {
        let m_out = ball.prefix(depth + 1);
        for u in 0..m_out {
            let mut nb = 0.0;
            match variant {
                Variant::Normalized => {
                    if let Some(p) = ball.parent(u) {
                        nb += v[p] * inv_sqrt[p];
                    }
                    for c in ball.children(u) {
                        nb += v[c] * inv_sqrt[c];
                    }
                    next[u] = if deg[u] == 0.0 {
                        v[u]
                    } else {
                        0.5 * v[u] + 0.5 * inv_sqrt[u] * nb
                    };
                }
                Variant::Laplacian => {
                    if let Some(p) = ball.parent(u) {
                        nb += v[p];
                    }
                    for c in ball.children(u) {
                        nb += v[c];
                    }
                    next[u] = v[u] * (1.0 - deg[u] / max_deg) + nb / max_deg;
                }
            }
        }
        std::mem::swap(&mut v, &mut next);
        depth = (depth + 1).min(ball.radius());
        let w = poisson_pmf(rate, k);
        if w > 0.0 {
            total.add(w * v[0]);
        }
    }
    Ok(Certified {
        value: total.value(),
        error_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path_value(s: f64) -> f64 {
        (1.0 + (-2.0 * s).exp()) / 2.0
    }

    #[test]
    fn two_vertex_semigroup_both_variants() {
        let t = SampledTree::path(2);
        for s in [0.5, 1.0, 2.0, 4.0] {
            for v in [Variant::Laplacian, Variant::Normalized] {
                let got = ct_return_semigroup(&t, s, v).unwrap();
                assert!((got - path_value(s)).abs() < 1e-10, "{s} {v:?} {got}");
            }
        }
        assert!((path_value(1.0) - 0.567667).abs() < 1e-6);
    }

    #[test]
    fn zero_time_is_one() {
        let t = SampledTree::regular(2, 3);
        assert_eq!(ct_return_semigroup(&t, 0.0, Variant::Laplacian).unwrap(), 1.0);
        let curve = ReturnCurve::discrete_single(&[0], &[1.0], "x");
        assert_eq!(ct_return_mixture(&curve, 0.0).unwrap().value, 1.0);
    }

    #[test]
    fn mixture_on_path() {
        let times: Vec<u64> = (0..=40).collect();
        let est: Vec<f64> = times.iter().map(|t| if t % 2 == 0 { 1.0 } else { 0.0 }).collect();
        let curve = ReturnCurve::discrete_single(&times, &est, "path");
        let m = ct_return_mixture(&curve, 1.0).unwrap();
        assert!((m.value - path_value(1.0)).abs() < 1e-12);
        assert!(m.error_bound < 1e-30);
    }

    #[test]
    fn mixture_needs_horizon() {
        let times: Vec<u64> = (0..=10).step_by(2).collect();
        let est = vec![0.5; times.len()];
        let curve = ReturnCurve::discrete_single(&times, &est, "x");
        assert!(matches!(
            ct_return_mixture(&curve, 4.0),
            Err(WalkError::HorizonTooShort { .. })
        ));
    }

    #[test]
    fn flat_zero_curve_is_within_error() {
        let times: Vec<u64> = (2..=60).step_by(2).collect();
        let mut all = vec![0];
        all.extend(&times);
        let mut est = vec![1.0];
        est.extend(vec![0.0; times.len()]);
        let curve = ReturnCurve::discrete_single(&all, &est, "x");
        let m = ct_return_mixture(&curve, 5.0).unwrap();
        assert!((m.value - (-5.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn star_laplacian_closed_form() {
        // star with k leaves: root return = (1 + k e^{-(k+1)s}) / (k+1)
        let k: f64 = 3.0;
        let t = SampledTree::star(3);
        let s: f64 = 0.7;
        let want = (1.0 + k * (-(k + 1.0) * s).exp()) / (k + 1.0);
        let got = ct_return_semigroup(&t, s, Variant::Laplacian).unwrap();
        assert!((got - want).abs() < 1e-10);
    }

    #[test]
    fn infinite_tree_needs_radius() {
        let t = SampledTree::regular(2, 3);
        assert!(matches!(
            ct_return_semigroup(&t, 4.0, Variant::Normalized),
            Err(WalkError::InsufficientRadius { .. })
        ));
    }
}
