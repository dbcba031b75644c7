//! The fully centralized benchmark: a designer picks both the coalition and
//! every member's privacy level to minimize social cost.
//!
//! At a fixed size k the optimal coalition is the k cheapest players with
//! per-player levels ε_i = (4/(k^(1+α)·c_i))^(1/3); the optimal size k* is
//! found by an exact scan of the resulting closed-form social cost.

use crate::error::{Error, Result};
use crate::model::{Coalition, PrivacyProfile, ProblemInstance, Tolerance};

/// Socially optimal coalition, its privacy profile, and its cost/variance.
/// `k_star = 0` (empty coalition, undefined variance) when no coalition of
/// size >= 2 beats the no-sharing cost nσ².
#[derive(Debug, Clone)]
pub struct CentralizedSolution {
    pub k_star: usize,
    pub coalition: Coalition,
    pub profile: PrivacyProfile,
    pub social_cost: f64,
    pub variance: Option<f64>,
}

/// Asymptotic regime of the centralized optimum as a function of α.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// α < 1/2: the grand coalition is optimal for large n.
    GrandCoalition,
    /// α = 1/2: k* can take any value; costs are order-n regardless.
    BoundaryHalf,
    /// α > 1/2: k* is zero or bounded.
    ConstantOrEmpty,
}

/// Regime plus the predicted large-n exponents of variance and social cost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeLabel {
    pub regime: Regime,
    pub predicted_var_exponent: f64,
    pub predicted_sc_exponent: f64,
}

/// Designer's optimal privacy level (4/(k^(1+α)·c_i))^(1/3) for a member of
/// a size-k coalition. Independent of k exactly at α = -1.
pub fn central_epsilon(c_i: f64, k: usize, alpha: f64) -> f64 {
    debug_assert!(c_i > 0.0 && k >= 2);
    (4.0 / ((k as f64).powf(1.0 + alpha) * c_i)).cbrt()
}

/// Central profile for the k cheapest players.
pub fn central_profile(instance: &ProblemInstance, k: usize) -> Result<PrivacyProfile> {
    check_size(instance, k)?;
    let coalition = Coalition::downward_closed(k)?;
    let levels = coalition
        .iter()
        .map(|i| (i, central_epsilon(instance.cost(i), k, instance.alpha())))
        .collect();
    PrivacyProfile::new(levels, &coalition)
}

fn check_size(instance: &ProblemInstance, k: usize) -> Result<()> {
    if k < 2 {
        return Err(Error::SizeTooSmall(k));
    }
    if k > instance.n() {
        return Err(Error::SizeExceedsPlayers { k, n: instance.n() });
    }
    Ok(())
}

/// Mean of c_i^(2/3) over the k cheapest players.
fn mean_cost_pow(instance: &ProblemInstance, k: usize) -> f64 {
    (1..=k).map(|i| instance.cost(i).powf(2.0 / 3.0)).sum::<f64>() / k as f64
}

/// Estimator variance at the optimal size-k coalition:
/// (1/k)·[σ² + k^(2(α+1)/3)/2^(1/3) · (Σ c_i^(2/3) / k)].
pub fn central_variance_at_size(instance: &ProblemInstance, k: usize) -> Result<f64> {
    check_size(instance, k)?;
    let kf = k as f64;
    let m = mean_cost_pow(instance, k);
    Ok((instance.sigma_sq() + kf.powf(2.0 * (instance.alpha() + 1.0) / 3.0) / 2f64.cbrt() * m) / kf)
}

/// Social cost at the optimal size-k coalition:
/// (n+1)σ² − [kσ² − (3/2^(1/3))·k^(2(α+1)/3)·(Σ c_i^(2/3)/k)], evaluated in
/// the cancellation-free arrangement (n−k)σ² + σ² + privacy-and-noise term.
pub fn central_social_cost_at_size(instance: &ProblemInstance, k: usize) -> Result<f64> {
    check_size(instance, k)?;
    let kf = k as f64;
    let m = mean_cost_pow(instance, k);
    let term = 3.0 / 2f64.cbrt() * kf.powf(2.0 * (instance.alpha() + 1.0) / 3.0) * m;
    Ok((instance.n() - k) as f64 * instance.sigma_sq() + instance.sigma_sq() + term)
}

/// Exact scan for the socially optimal coalition size.
///
/// k* is the argmin of the closed-form social cost over k in {2..n} when
/// that minimum (weakly) beats nσ², and 0 otherwise. Ties break toward the
/// smallest k. The scan is linear: the objective is not guaranteed unimodal
/// for heterogeneous costs.
pub fn solve_centralized(instance: &ProblemInstance) -> CentralizedSolution {
    let n = instance.n();
    let sigma_sq = instance.sigma_sq();
    let no_sharing = n as f64 * sigma_sq;
    let tol = Tolerance::default();

    let mut best: Option<(usize, f64)> = None;
    let mut sum_pow = 0.0;
    for k in 1..=n {
        sum_pow += instance.cost(k).powf(2.0 / 3.0);
        if k < 2 {
            continue;
        }
        let kf = k as f64;
        let term = 3.0 / 2f64.cbrt() * kf.powf(2.0 * (instance.alpha() + 1.0) / 3.0) * (sum_pow / kf);
        let sc = (n - k) as f64 * sigma_sq + sigma_sq + term;
        if best.map_or(true, |(_, b)| sc < b) {
            best = Some((k, sc));
        }
    }

    match best {
        Some((k, sc)) if tol.le(sc, no_sharing) => {
            let coalition = Coalition::downward_closed(k).expect("k >= 2");
            let profile = central_profile(instance, k).expect("k validated");
            let variance = central_variance_at_size(instance, k).expect("k validated");
            CentralizedSolution {
                k_star: k,
                coalition,
                profile,
                social_cost: sc,
                variance: Some(variance),
            }
        }
        _ => CentralizedSolution {
            k_star: 0,
            coalition: Coalition::empty(),
            profile: PrivacyProfile::empty(),
            social_cost: no_sharing,
            variance: None,
        },
    }
}

/// Regime of the centralized optimum as a pure function of α, with the
/// predicted large-n exponents (variance, social cost). Makes no judgment
/// about how large n must be.
pub fn classify_regime_centralized(alpha: f64) -> RegimeLabel {
    if alpha < 0.5 {
        RegimeLabel {
            regime: Regime::GrandCoalition,
            predicted_var_exponent: (2.0 * alpha - 1.0) / 3.0,
            predicted_sc_exponent: 2.0 * (alpha + 1.0) / 3.0,
        }
    } else if alpha == 0.5 {
        RegimeLabel {
            regime: Regime::BoundaryHalf,
            predicted_var_exponent: 0.0,
            predicted_sc_exponent: 1.0,
        }
    } else {
        RegimeLabel {
            regime: Regime::ConstantOrEmpty,
            predicted_var_exponent: 0.0,
            predicted_sc_exponent: 1.0,
        }
    }
}
