//! Game primitives shared by every other module: the problem instance,
//! coalitions, privacy profiles, estimator variance, player burdens and
//! social cost.
//!
//! Conventions: players are indexed 1..=n in ascending order of privacy
//! cost, the estimator variance for a coalition `S` with privacy profile
//! `ε` is `σ²/|S| + (2/|S|²)·Σ 1/ε_i²`, and players outside the coalition
//! carry a flat burden of `σ²` (their own data point is their estimate).

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};

/// Comparison tolerance for the stability inequalities.
///
/// The equilibrium conditions mix strict and non-strict inequalities at
/// real-valued boundaries, so every comparison goes through these bands:
/// `a >= b` is accepted when `a - b >= -(abs_tol + rel_tol*|b|)` and the
/// strict `a < b` requires `b - a > abs_tol + rel_tol*|a|`. A comparison
/// whose margin falls inside the band of either operand is flagged as a
/// boundary case.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs_tol: f64,
    pub rel_tol: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            abs_tol: 1e-12,
            rel_tol: 1e-9,
        }
    }
}

impl Tolerance {
    pub fn new(abs_tol: f64, rel_tol: f64) -> Self {
        assert!(
            abs_tol.is_finite() && abs_tol >= 0.0 && rel_tol.is_finite() && rel_tol >= 0.0,
            "tolerances must be finite and nonnegative"
        );
        Tolerance { abs_tol, rel_tol }
    }

    fn band(&self, x: f64) -> f64 {
        self.abs_tol + self.rel_tol * x.abs()
    }

    /// Non-strict `a >= b`.
    pub fn ge(&self, a: f64, b: f64) -> bool {
        a - b >= -self.band(b)
    }

    /// Non-strict `a <= b`.
    pub fn le(&self, a: f64, b: f64) -> bool {
        b - a >= -self.band(a)
    }

    /// Strict `a < b`.
    pub fn lt(&self, a: f64, b: f64) -> bool {
        b - a > self.band(a)
    }

    /// Strict `a > b`.
    pub fn gt(&self, a: f64, b: f64) -> bool {
        a - b > self.band(b)
    }

    /// True when the comparison of `a` and `b` is decided within tolerance.
    pub fn near(&self, a: f64, b: f64) -> bool {
        (a - b).abs() <= self.abs_tol + self.rel_tol * a.abs().max(b.abs())
    }
}

/// Full parameterization of the data-sharing game: player count, ascending
/// privacy costs, data variance `σ²` and the scaling exponent `α` of
/// `f(|S|) = |S|^α`.
///
/// Costs are canonicalized at construction: the input vector is sorted
/// ascending and the original positions are retained as labels, so
/// "player i" always means the i-th smallest cost.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    costs: Vec<f64>,
    /// (c_i²/2)^(1/3), cached; this term drives every stability condition.
    zeta: Vec<f64>,
    sigma_sq: f64,
    alpha: f64,
    /// labels[i] = 1-based position of costs[i] in the original input.
    labels: Vec<usize>,
}

impl ProblemInstance {
    pub fn new(costs: Vec<f64>, sigma_sq: f64, alpha: f64) -> Result<Self> {
        if costs.is_empty() {
            return Err(Error::NoPlayers);
        }
        for (i, &c) in costs.iter().enumerate() {
            if !(c > 0.0) || !c.is_finite() {
                return Err(Error::NonPositiveCost { index: i + 1, value: c });
            }
        }
        if !(sigma_sq > 0.0) || !sigma_sq.is_finite() {
            return Err(Error::NonPositiveSigma(sigma_sq));
        }
        if !(-1.0..=1.0).contains(&alpha) {
            return Err(Error::AlphaOutOfRange(alpha));
        }
        let mut order: Vec<usize> = (0..costs.len()).collect();
        order.sort_by(|&a, &b| costs[a].total_cmp(&costs[b]));
        let sorted: Vec<f64> = order.iter().map(|&i| costs[i]).collect();
        let labels: Vec<usize> = order.iter().map(|&i| i + 1).collect();
        let zeta = sorted.iter().map(|&c| (c * c / 2.0).cbrt()).collect();
        Ok(ProblemInstance {
            costs: sorted,
            zeta,
            sigma_sq,
            alpha,
            labels,
        })
    }

    /// Instance where every player has the same cost parameter.
    pub fn identical(n: usize, c: f64, sigma_sq: f64, alpha: f64) -> Result<Self> {
        ProblemInstance::new(vec![c; n], sigma_sq, alpha)
    }

    pub fn n(&self) -> usize {
        self.costs.len()
    }

    /// Cost of player `i` (1-based, ascending order).
    pub fn cost(&self, i: usize) -> f64 {
        self.costs[i - 1]
    }

    pub fn costs(&self) -> &[f64] {
        &self.costs
    }

    /// (c_i²/2)^(1/3) for player `i` (1-based).
    pub fn zeta(&self, i: usize) -> f64 {
        self.zeta[i - 1]
    }

    pub fn sigma_sq(&self) -> f64 {
        self.sigma_sq
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Original 1-based input position of each canonicalized player.
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn is_identical_cost(&self) -> bool {
        self.costs.iter().all(|&c| c == self.costs[0])
    }

    /// Well-separated costs: c_i >= 2 c_(i-1) for all i >= 2.
    pub fn is_well_separated(&self) -> bool {
        self.costs.windows(2).all(|w| w[1] >= 2.0 * w[0])
    }

    pub fn grand_coalition(&self) -> Coalition {
        Coalition::downward_closed(self.n()).expect("n >= 1 implies grand coalition is valid")
    }

    /// Checks that `i` names a player of this instance.
    pub fn check_player(&self, i: usize) -> Result<()> {
        if i == 0 || i > self.n() {
            return Err(Error::PlayerOutOfRange { player: i, n: self.n() });
        }
        Ok(())
    }
}

/// A set of player indices; either empty (no data sharing) or of size >= 2.
/// Size-1 coalitions are rejected at construction.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Coalition {
    members: Vec<usize>,
}

impl Coalition {
    pub fn new<I: IntoIterator<Item = usize>>(members: I) -> Result<Self> {
        let mut m: Vec<usize> = members.into_iter().collect();
        m.sort_unstable();
        m.dedup();
        if m.len() == 1 {
            return Err(Error::SingletonCoalition);
        }
        if m.first() == Some(&0) {
            return Err(Error::PlayerOutOfRange { player: 0, n: 0 });
        }
        Ok(Coalition { members: m })
    }

    pub fn empty() -> Self {
        Coalition { members: Vec::new() }
    }

    /// The k cheapest players {1..k}; k = 0 gives the empty coalition.
    pub fn downward_closed(k: usize) -> Result<Self> {
        if k == 0 {
            return Ok(Coalition::empty());
        }
        Coalition::new(1..=k)
    }

    pub fn size(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn contains(&self, i: usize) -> bool {
        self.members.binary_search(&i).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.members.iter().copied()
    }

    /// Players of the instance that are not members.
    pub fn outsiders(&self, n: usize) -> Vec<usize> {
        (1..=n).filter(|&i| !self.contains(i)).collect()
    }

    /// Validates that all members name players of `instance`.
    pub fn check_against(&self, instance: &ProblemInstance) -> Result<()> {
        if let Some(&max) = self.members.last() {
            if max > instance.n() {
                return Err(Error::PlayerOutOfRange {
                    player: max,
                    n: instance.n(),
                });
            }
        }
        Ok(())
    }
}

impl PartialOrd for Coalition {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Coalition {
    /// Size first, then lexicographic on members; this is the deterministic
    /// output order of every enumeration.
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.size()
            .cmp(&other.size())
            .then_with(|| self.members.cmp(&other.members))
    }
}

impl fmt::Display for Coalition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, m) in self.members.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{m}")?;
        }
        write!(f, "}}")
    }
}

/// Per-member privacy levels ε_i > 0 for a coalition.
#[derive(Debug, Clone, PartialEq)]
pub struct PrivacyProfile {
    levels: BTreeMap<usize, f64>,
}

impl PrivacyProfile {
    /// The domain of `levels` must equal the coalition's member set.
    pub fn new(levels: BTreeMap<usize, f64>, coalition: &Coalition) -> Result<Self> {
        for (&i, &eps) in &levels {
            if !coalition.contains(i) {
                return Err(Error::ProfileMismatch(i));
            }
            if !(eps > 0.0) || !eps.is_finite() {
                return Err(Error::NonPositiveEpsilon { player: i, value: eps });
            }
        }
        if let Some(missing) = coalition.iter().find(|&i| !levels.contains_key(&i)) {
            return Err(Error::ProfileMismatch(missing));
        }
        Ok(PrivacyProfile { levels })
    }

    pub fn empty() -> Self {
        PrivacyProfile {
            levels: BTreeMap::new(),
        }
    }

    /// Uniform profile assigning the same ε to every member.
    pub fn uniform(coalition: &Coalition, eps: f64) -> Result<Self> {
        PrivacyProfile::new(coalition.iter().map(|i| (i, eps)).collect(), coalition)
    }

    pub fn epsilon(&self, i: usize) -> Option<f64> {
        self.levels.get(&i).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.levels.iter().map(|(&i, &e)| (i, e))
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }
}

/// Burdens of all n players for one coalition/profile, plus the members'
/// estimator variance and the resulting social cost.
#[derive(Debug, Clone)]
pub struct BurdenReport {
    /// Burden per player (1-based player i at index i-1); σ² for non-members.
    pub per_player_burden: Vec<f64>,
    /// Estimator variance for coalition members.
    pub variance: f64,
    /// Sum of all n burdens.
    pub social_cost: f64,
}

/// f(k) = k^α, the scaling of privacy cost with coalition size.
pub fn privacy_scaling(instance: &ProblemInstance, k: usize) -> f64 {
    assert!(k >= 1, "privacy scaling requires k >= 1");
    (k as f64).powf(instance.alpha())
}

fn check_profile_covers(coalition: &Coalition, profile: &PrivacyProfile) -> Result<()> {
    for i in coalition.iter() {
        if profile.epsilon(i).is_none() {
            return Err(Error::ProfileMismatch(i));
        }
    }
    Ok(())
}

/// Estimator variance σ²/|S| + (2/|S|²)·Σ 1/ε_i² of the pooled mean.
///
/// Non-members use their own data point, with variance σ² reported
/// separately; the empty coalition has no estimator.
pub fn estimator_variance(
    coalition: &Coalition,
    profile: &PrivacyProfile,
    instance: &ProblemInstance,
) -> Result<f64> {
    if coalition.is_empty() {
        return Err(Error::EmptyCoalition);
    }
    coalition.check_against(instance)?;
    check_profile_covers(coalition, profile)?;
    let k = coalition.size() as f64;
    let noise: f64 = coalition
        .iter()
        .map(|i| {
            let e = profile.epsilon(i).expect("profile covers coalition");
            1.0 / (e * e)
        })
        .sum();
    Ok(instance.sigma_sq() / k + 2.0 / (k * k) * noise)
}

/// Burden of player `i`: variance plus the privacy cost c_i·f(|S|)·ε_i for
/// members, σ² for everyone else.
pub fn player_burden(
    i: usize,
    coalition: &Coalition,
    profile: &PrivacyProfile,
    instance: &ProblemInstance,
) -> Result<f64> {
    instance.check_player(i)?;
    if !coalition.contains(i) {
        return Ok(instance.sigma_sq());
    }
    let var = estimator_variance(coalition, profile, instance)?;
    let eps = profile.epsilon(i).expect("profile covers coalition");
    Ok(var + instance.cost(i) * privacy_scaling(instance, coalition.size()) * eps)
}

/// Social cost: the sum of all n burdens; nσ² for the empty coalition.
pub fn social_cost(
    coalition: &Coalition,
    profile: &PrivacyProfile,
    instance: &ProblemInstance,
) -> Result<f64> {
    if coalition.is_empty() {
        return Ok(instance.n() as f64 * instance.sigma_sq());
    }
    let mut total = 0.0;
    for i in 1..=instance.n() {
        total += player_burden(i, coalition, profile, instance)?;
    }
    Ok(total)
}

/// Full burden report for one coalition/profile.
pub fn burden_report(
    coalition: &Coalition,
    profile: &PrivacyProfile,
    instance: &ProblemInstance,
) -> Result<BurdenReport> {
    let variance = if coalition.is_empty() {
        instance.sigma_sq()
    } else {
        estimator_variance(coalition, profile, instance)?
    };
    let per_player_burden: Vec<f64> = (1..=instance.n())
        .map(|i| player_burden(i, coalition, profile, instance))
        .collect::<Result<_>>()?;
    let social_cost = per_player_burden.iter().sum();
    Ok(BurdenReport {
        per_player_burden,
        variance,
        social_cost,
    })
}

/// Inverse-CDF transform of a centered uniform draw into a Laplace sample:
/// `-scale·sign(u)·ln(1 - 2|u|)` for `u` in (-0.5, 0.5). Zero-mean with
/// variance 2·scale² in expectation over the draw.
pub fn laplace_sample(scale: f64, uniform_draw: f64) -> Result<f64> {
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::NonPositiveScale(scale));
    }
    if uniform_draw.abs() >= 0.5 || !uniform_draw.is_finite() {
        return Err(Error::UniformDrawOutOfRange(uniform_draw));
    }
    if uniform_draw == 0.0 {
        return Ok(0.0);
    }
    Ok(-scale * uniform_draw.signum() * (1.0 - 2.0 * uniform_draw.abs()).ln())
}
