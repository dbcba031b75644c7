//! Selfish privacy choice and coalition stability.
//!
//! Members of a fixed coalition each pick the privacy level that minimizes
//! their own burden, ε_i = (4/(k^(2+α)·c_i))^(1/3). Two stability notions
//! are implemented, each twice over:
//!
//! * closed-form predicates derived from the equilibrium conditions, which
//!   reduce the entry check to the cheapest outsider, and
//! * definition-level oracles that price every deviation directly (the
//!   independent cross-check for the closed forms).
//!
//! On top of the predicates sit the exhaustive equilibrium enumeration, the
//! O(n) downward-closed scan for well-separated (Nash) and maximum-size
//! (robust) equilibria, the grand-coalition condition, the escalation
//! sequence of robust coalitions along the σ axis, and the identical-cost
//! analytics.

use rayon::prelude::*;

use crate::centralized::central_epsilon;
use crate::error::{Error, Result};
use crate::model::{
    BurdenReport, Coalition, PrivacyProfile, ProblemInstance, Tolerance,
};

/// Default cap on exhaustive subset enumeration (2^20 subsets).
pub const DEFAULT_MAX_BRUTE_FORCE_N: usize = 20;

/// Which stability notion a verdict refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StabilityKind {
    /// Unilateral deviations against the frozen member profile.
    Nash,
    /// Entry must be valid: members re-optimize and may veto the joiner.
    Robust,
}

impl std::fmt::Display for StabilityKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StabilityKind::Nash => write!(f, "nash"),
            StabilityKind::Robust => write!(f, "robust"),
        }
    }
}

/// An outsider able to break stability, with the burden-unit slack of the
/// violated condition (positive slack = strict violation).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntryWitness {
    pub player: usize,
    pub slack: f64,
}

/// Outcome of one stability check.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityVerdict {
    pub kind: StabilityKind,
    pub stable: bool,
    /// min over members of (σ² − burden); non-negative when nobody leaves.
    pub exit_slack: f64,
    /// Present when some outsider violates the entry condition.
    pub entry_witness: Option<EntryWitness>,
    /// True when any condition was decided within tolerance.
    pub boundary_flag: bool,
}

/// One step of the robust escalation sequence: `coalition` is robust-stable
/// for σ² in [threshold_sigma_sq, next step's threshold).
#[derive(Debug, Clone, PartialEq)]
pub struct EscalationStep {
    pub coalition: Coalition,
    pub threshold_sigma_sq: f64,
}

/// Stability structure of an identical-cost instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdenticalCostReport {
    /// Always false: with equal costs no intermediate size is Nash-stable.
    pub nash_intermediate_exists: bool,
    /// The unique intermediate robust-equilibrium size, when one exists.
    pub robust_intermediate_size: Option<usize>,
    /// Whether the grand coalition is stable (both notions coincide there).
    pub grand_stable: bool,
}

/// Burden-minimizing privacy level (4/(k^(2+α)·c_i))^(1/3) of a member of a
/// size-k coalition, written as the centralized level shrunk by k^(1/3) so
/// the algebraic identity between the two holds exactly.
pub fn best_response_epsilon(c_i: f64, k: usize, alpha: f64) -> f64 {
    central_epsilon(c_i, k, alpha) / (k as f64).cbrt()
}

/// Best-response profile of a coalition: each member's selfish optimum.
pub fn best_response_profile(
    coalition: &Coalition,
    instance: &ProblemInstance,
) -> Result<PrivacyProfile> {
    check_coalition(coalition, instance)?;
    let k = coalition.size();
    let levels = coalition
        .iter()
        .map(|i| (i, best_response_epsilon(instance.cost(i), k, instance.alpha())))
        .collect();
    PrivacyProfile::new(levels, coalition)
}

fn check_coalition(coalition: &Coalition, instance: &ProblemInstance) -> Result<()> {
    if coalition.size() < 2 {
        return Err(Error::SizeTooSmall(coalition.size()));
    }
    coalition.check_against(instance)
}

fn mean_cost_pow(instance: &ProblemInstance, members: &[usize]) -> f64 {
    members
        .iter()
        .map(|&i| instance.cost(i).powf(2.0 / 3.0))
        .sum::<f64>()
        / members.len() as f64
}

/// Estimator variance under selfish privacy levels:
/// (1/k)·[σ² + k^(2(α+2)/3)/2^(1/3) · (Σ c_i^(2/3)/k)].
pub fn decentralized_variance(coalition: &Coalition, instance: &ProblemInstance) -> Result<f64> {
    check_coalition(coalition, instance)?;
    let k = coalition.size() as f64;
    let m = mean_cost_pow(instance, coalition.members());
    Ok((instance.sigma_sq() + k.powf(2.0 * (instance.alpha() + 2.0) / 3.0) / 2f64.cbrt() * m) / k)
}

/// Social cost under selfish privacy levels:
/// (n+1)σ² − [kσ² − (k+2)·k^((2α+1)/3)/2^(1/3) · (Σ c_i^(2/3)/k)], evaluated
/// cancellation-free as (n−k)σ² + σ² + burden term.
pub fn decentralized_social_cost(coalition: &Coalition, instance: &ProblemInstance) -> Result<f64> {
    check_coalition(coalition, instance)?;
    let k = coalition.size() as f64;
    let m = mean_cost_pow(instance, coalition.members());
    let term = (k + 2.0) * k.powf((2.0 * instance.alpha() + 1.0) / 3.0) / 2f64.cbrt() * m;
    Ok((instance.n() - coalition.size()) as f64 * instance.sigma_sq() + instance.sigma_sq() + term)
}

/// Burden report at the best-response profile. The variance and social cost
/// fields come from the closed forms above; the per-player burdens from the
/// core definitions.
pub fn decentralized_report(
    coalition: &Coalition,
    instance: &ProblemInstance,
) -> Result<BurdenReport> {
    check_coalition(coalition, instance)?;
    let profile = best_response_profile(coalition, instance)?;
    let per_player_burden: Vec<f64> = (1..=instance.n())
        .map(|i| crate::model::player_burden(i, coalition, &profile, instance))
        .collect::<Result<_>>()?;
    Ok(BurdenReport {
        per_player_burden,
        variance: decentralized_variance(coalition, instance)?,
        social_cost: decentralized_social_cost(coalition, instance)?,
    })
}

/// Burden an outsider would carry after joining unilaterally, with members
/// frozen at the size-k best response and the joiner best-responding to the
/// enlarged coalition.
pub fn nash_entry_burden(
    joiner: usize,
    coalition: &Coalition,
    instance: &ProblemInstance,
) -> Result<f64> {
    check_coalition(coalition, instance)?;
    instance.check_player(joiner)?;
    if coalition.contains(joiner) {
        return Err(Error::ProfileMismatch(joiner));
    }
    let k = coalition.size();
    let k1 = (k + 1) as f64;
    let frozen_noise: f64 = coalition
        .iter()
        .map(|i| {
            let e = best_response_epsilon(instance.cost(i), k, instance.alpha());
            1.0 / (e * e)
        })
        .sum();
    let eps_j = best_response_epsilon(instance.cost(joiner), k + 1, instance.alpha());
    Ok(instance.sigma_sq() / k1
        + 2.0 / (k1 * k1) * (1.0 / (eps_j * eps_j) + frozen_noise)
        + instance.cost(joiner) * k1.powf(instance.alpha()) * eps_j)
}

// ---------------------------------------------------------------------------
// Closed-form predicates.
// ---------------------------------------------------------------------------

struct ConditionCheck {
    ok: bool,
    boundary: bool,
}

/// Exit condition shared by both notions:
/// (k−1)/k^((2α+1)/3) >= (Σ z_j + 2·max z_j)/σ², z_j = (c_j²/2)^(1/3).
/// Returns the verdict and the burden-unit slack σ² − max member burden.
fn exit_condition(
    members: &[usize],
    instance: &ProblemInstance,
    tol: Tolerance,
) -> (ConditionCheck, f64) {
    let k = members.len() as f64;
    let pow = k.powf((2.0 * instance.alpha() + 1.0) / 3.0);
    let (sum_z, max_z) = members.iter().fold((0.0f64, 0.0f64), |(s, m), &i| {
        let z = instance.zeta(i);
        (s + z, m.max(z))
    });
    let lhs = (k - 1.0) / pow;
    let rhs = (sum_z + 2.0 * max_z) / instance.sigma_sq();
    let check = ConditionCheck {
        ok: tol.ge(lhs, rhs),
        boundary: tol.near(lhs, rhs),
    };
    let slack = (instance.sigma_sq() * (k - 1.0) - pow * (sum_z + 2.0 * max_z)) / k;
    (check, slack)
}

/// Smallest-index (hence cheapest) player not in the sorted member list.
fn cheapest_outsider(members: &[usize], n: usize) -> Option<usize> {
    let mut expect = 1usize;
    for &m in members {
        if m > expect {
            return Some(expect);
        }
        expect = m + 1;
    }
    (expect <= n).then_some(expect)
}

fn nash_core(members: &[usize], instance: &ProblemInstance, tol: Tolerance) -> StabilityVerdict {
    let (exit, exit_slack) = exit_condition(members, instance, tol);
    let mut boundary = exit.boundary;
    let mut entry_witness = None;
    let mut entry_ok = true;

    if let Some(m) = cheapest_outsider(members, instance.n()) {
        let k = members.len() as f64;
        let sum_z: f64 = members.iter().map(|&i| instance.zeta(i)).sum();
        let s2 = instance.sigma_sq();
        let e = (2.0 * instance.alpha() + 4.0) / 3.0;
        let lhs = k * (k + 1.0);
        let rhs = 3.0 * instance.zeta(m) / s2 * (k + 1.0).powf(e) + sum_z / s2 * k.powf(e);
        entry_ok = tol.lt(lhs, rhs);
        boundary |= tol.near(lhs, rhs);
        if !entry_ok {
            // Burden-unit slack of the violating joiner.
            let coalition = Coalition::new(members.iter().copied()).expect("members valid");
            let b = nash_entry_burden(m, &coalition, instance).expect("outsider valid");
            entry_witness = Some(EntryWitness {
                player: m,
                slack: s2 - b,
            });
        }
    }

    StabilityVerdict {
        kind: StabilityKind::Nash,
        stable: exit.ok && entry_ok,
        exit_slack,
        entry_witness,
        boundary_flag: boundary,
    }
}

fn robust_core(members: &[usize], instance: &ProblemInstance, tol: Tolerance) -> StabilityVerdict {
    let (exit, exit_slack) = exit_condition(members, instance, tol);
    let mut boundary = exit.boundary;
    let mut entry_witness = None;
    let mut entry_ok = true;

    if let Some(m) = cheapest_outsider(members, instance.n()) {
        let k = members.len() as f64;
        let s2 = instance.sigma_sq();
        let pow1 = (k + 1.0).powf((2.0 * instance.alpha() + 1.0) / 3.0);
        let (sum_z, max_z) = members.iter().fold((0.0f64, 0.0f64), |(s, mx), &i| {
            let z = instance.zeta(i);
            (s + z, mx.max(z))
        });
        let f_joined = sum_z + instance.zeta(m) + 2.0 * max_z.max(instance.zeta(m));
        let lhs = k / pow1;
        let rhs = f_joined / s2;
        entry_ok = tol.lt(lhs, rhs);
        boundary |= tol.near(lhs, rhs);
        if !entry_ok {
            // The joiner can enter validly; slack is the worst member's
            // remaining headroom after everyone re-optimizes.
            let slack = (s2 * k - pow1 * f_joined) / (k + 1.0);
            entry_witness = Some(EntryWitness { player: m, slack });
        }
    }

    StabilityVerdict {
        kind: StabilityKind::Robust,
        stable: exit.ok && entry_ok,
        exit_slack,
        entry_witness,
        boundary_flag: boundary,
    }
}

/// Closed-form Nash stability test. Entry is checked against the cheapest
/// outsider only; the condition is monotone in the outsider's cost.
pub fn nash_stable_closed_form(
    coalition: &Coalition,
    instance: &ProblemInstance,
    tol: Tolerance,
) -> Result<StabilityVerdict> {
    check_coalition(coalition, instance)?;
    Ok(nash_core(coalition.members(), instance, tol))
}

/// Closed-form robust stability test (valid-entry semantics).
pub fn robust_stable_closed_form(
    coalition: &Coalition,
    instance: &ProblemInstance,
    tol: Tolerance,
) -> Result<StabilityVerdict> {
    check_coalition(coalition, instance)?;
    Ok(robust_core(coalition.members(), instance, tol))
}

/// Definition-level stability oracle.
///
/// Exit compares every member's burden against σ². Nash entry prices each
/// outsider's best response against the frozen member profile; robust entry
/// recomputes the full best-response profile of S ∪ {j} and looks for an
/// unhappy member. Checks every outsider, providing the redundancy the
/// closed forms elide.
pub fn stability_by_definition(
    coalition: &Coalition,
    instance: &ProblemInstance,
    kind: StabilityKind,
    tol: Tolerance,
) -> Result<StabilityVerdict> {
    check_coalition(coalition, instance)?;
    let s2 = instance.sigma_sq();
    let k = coalition.size();
    let kf = k as f64;
    let alpha = instance.alpha();

    let eps: Vec<(usize, f64)> = coalition
        .iter()
        .map(|i| (i, best_response_epsilon(instance.cost(i), k, alpha)))
        .collect();
    let noise: f64 = eps.iter().map(|&(_, e)| 1.0 / (e * e)).sum();
    let var = s2 / kf + 2.0 / (kf * kf) * noise;

    let mut boundary = false;
    let mut exit_ok = true;
    let mut exit_slack = f64::INFINITY;
    for &(i, e) in &eps {
        let burden = var + instance.cost(i) * kf.powf(alpha) * e;
        exit_ok &= tol.le(burden, s2);
        boundary |= tol.near(burden, s2);
        exit_slack = exit_slack.min(s2 - burden);
    }

    let mut entry_witness = None;
    for j in coalition.outsiders(instance.n()) {
        match kind {
            StabilityKind::Nash => {
                let b = nash_entry_burden(j, coalition, instance)?;
                boundary |= tol.near(b, s2);
                if !tol.gt(b, s2) && entry_witness.is_none() {
                    entry_witness = Some(EntryWitness {
                        player: j,
                        slack: s2 - b,
                    });
                }
            }
            StabilityKind::Robust => {
                let k1 = (k + 1) as f64;
                let joined_noise: f64 = coalition
                    .iter()
                    .chain(std::iter::once(j))
                    .map(|i| {
                        let e = best_response_epsilon(instance.cost(i), k + 1, alpha);
                        1.0 / (e * e)
                    })
                    .sum();
                let joined_var = s2 / k1 + 2.0 / (k1 * k1) * joined_noise;
                let mut valid = true;
                let mut min_slack = f64::INFINITY;
                for i in coalition.iter().chain(std::iter::once(j)) {
                    let e = best_response_epsilon(instance.cost(i), k + 1, alpha);
                    let burden = joined_var + instance.cost(i) * k1.powf(alpha) * e;
                    boundary |= tol.near(burden, s2);
                    valid &= tol.le(burden, s2);
                    min_slack = min_slack.min(s2 - burden);
                }
                if valid && entry_witness.is_none() {
                    entry_witness = Some(EntryWitness {
                        player: j,
                        slack: min_slack,
                    });
                }
            }
        }
    }

    Ok(StabilityVerdict {
        kind,
        stable: exit_ok && entry_witness.is_none(),
        exit_slack,
        entry_witness,
        boundary_flag: boundary,
    })
}

/// All stable coalitions of size >= 2, by exhaustive subset search over the
/// closed-form predicates. Results are sorted by (size, members) so the
/// parallel search is reproducible.
pub fn enumerate_equilibria(
    instance: &ProblemInstance,
    kind: StabilityKind,
    max_n: usize,
    tol: Tolerance,
) -> Result<Vec<Coalition>> {
    let n = instance.n();
    if n > max_n {
        return Err(Error::EnumerationTooLarge { n, max_n });
    }
    let mut found: Vec<Coalition> = (1u64..(1u64 << n))
        .into_par_iter()
        .filter_map(|mask| {
            if mask.count_ones() < 2 {
                return None;
            }
            let members: Vec<usize> = (0..n).filter(|b| mask >> b & 1 == 1).map(|b| b + 1).collect();
            let stable = match kind {
                StabilityKind::Nash => nash_core(&members, instance, tol).stable,
                StabilityKind::Robust => robust_core(&members, instance, tol).stable,
            };
            stable.then(|| Coalition::new(members).expect("members are a valid coalition"))
        })
        .collect();
    found.sort();
    Ok(found)
}

/// O(n) scan of the downward-closed coalitions S_2..S_n.
///
/// For Nash stability this is the complete equilibrium set when costs are
/// well-separated (c_i >= 2 c_(i-1)); the scan refuses other instances.
/// For robust stability the scan runs on any instance and its largest hit
/// has the maximum robust-equilibrium size, though smaller robust coalitions
/// may be missed.
pub fn downward_closed_scan(
    instance: &ProblemInstance,
    kind: StabilityKind,
    tol: Tolerance,
) -> Result<Vec<Coalition>> {
    if kind == StabilityKind::Nash && !instance.is_well_separated() {
        return Err(Error::WellSeparationRequired);
    }
    let mut found = Vec::new();
    let mut members: Vec<usize> = vec![1];
    for k in 2..=instance.n() {
        members.push(k);
        let stable = match kind {
            StabilityKind::Nash => nash_core(&members, instance, tol).stable,
            StabilityKind::Robust => robust_core(&members, instance, tol).stable,
        };
        if stable {
            found.push(Coalition::new(members.iter().copied())?);
        }
    }
    Ok(found)
}

/// Exact grand-coalition stability condition (identical for both notions,
/// since the grand coalition has no outsiders):
/// σ²(n−1)/n^((2α+1)/3) >= Σ z_j + 2 z_n.
pub fn grand_coalition_sufficient(instance: &ProblemInstance, tol: Tolerance) -> Result<bool> {
    if instance.n() < 2 {
        return Err(Error::TooFewPlayers(instance.n()));
    }
    let members: Vec<usize> = (1..=instance.n()).collect();
    let (check, _) = exit_condition(&members, instance, tol);
    Ok(check.ok)
}

/// Sufficient n-bounds for grand-coalition stability, exposed as a
/// diagnostic: `Some(true)` means the bound certifies stability, `None`
/// means the bound does not apply (α = −1/2). The exact condition in
/// [`grand_coalition_sufficient`] is authoritative.
pub fn grand_coalition_bound_diagnostic(instance: &ProblemInstance) -> Result<Option<bool>> {
    if instance.n() < 2 {
        return Err(Error::TooFewPlayers(instance.n()));
    }
    let n = instance.n() as f64;
    let alpha = instance.alpha();
    let z_max = instance.zeta(instance.n());
    let s2 = instance.sigma_sq();
    if alpha > -0.5 {
        let cap = (s2 / (4.0 * z_max)).powf(3.0 / (2.0 * alpha + 1.0));
        Ok(Some(n <= cap))
    } else if alpha < -0.5 {
        let floor = (4.0 * z_max / s2).powf(-3.0 / (2.0 * alpha + 1.0));
        Ok(Some(n >= floor.max(2.0)))
    } else {
        Ok(None)
    }
}

/// The escalation chain of robust coalitions: starting from `start`, each
/// step adds the outsider minimizing Σ z + 2·max z over the enlarged set
/// (always the cheapest outsider) and records the σ² threshold
/// T = (Σ z + 2 max z)·k^((2α+1)/3)/(k−1) from which the step's coalition
/// satisfies the exit condition. Step i is robust-stable exactly for σ² in
/// [T_i, T_(i+1)); the final step (the grand coalition) is unbounded above,
/// and consecutive intervals tile the whole σ axis from √T_0 on.
pub fn robust_escalation_sequence(
    start: &Coalition,
    instance: &ProblemInstance,
) -> Result<Vec<EscalationStep>> {
    check_coalition(start, instance)?;
    let threshold = |members: &[usize]| -> f64 {
        let k = members.len() as f64;
        let (sum_z, max_z) = members.iter().fold((0.0f64, 0.0f64), |(s, m), &i| {
            let z = instance.zeta(i);
            (s + z, m.max(z))
        });
        (sum_z + 2.0 * max_z) * k.powf((2.0 * instance.alpha() + 1.0) / 3.0) / (k - 1.0)
    };

    let mut members: Vec<usize> = start.members().to_vec();
    let mut steps = vec![EscalationStep {
        coalition: start.clone(),
        threshold_sigma_sq: threshold(&members),
    }];
    while members.len() < instance.n() {
        let next = cheapest_outsider(&members, instance.n()).expect("outsiders remain");
        let pos = members.partition_point(|&m| m < next);
        members.insert(pos, next);
        steps.push(EscalationStep {
            coalition: Coalition::new(members.iter().copied())?,
            threshold_sigma_sq: threshold(&members),
        });
    }

    // The start is robust somewhere iff its interval [T_0, T_1) is nonempty;
    // the grand coalition's interval is [T_0, inf).
    if steps.len() >= 2 && steps[1].threshold_sigma_sq <= steps[0].threshold_sigma_sq {
        return Err(Error::NotRobustAtAnySigma);
    }
    Ok(steps)
}

/// Lower edge of the identical-cost robust window for size k:
/// ((k+2)/(k−1))·k^((2α+1)/3). The upper edge of window k is the lower edge
/// of window k+1, so feasible windows tile the ratio axis.
fn identical_window_edge(k: usize, alpha: f64) -> f64 {
    let kf = k as f64;
    (kf + 2.0) / (kf - 1.0) * kf.powf((2.0 * alpha + 1.0) / 3.0)
}

/// Stability analytics for identical costs: no intermediate Nash size ever
/// exists; an intermediate robust size k (2 <= k < n) exists iff
/// ((k+2)/(k−1))·k^((2α+1)/3) <= 2^(1/3)σ²/c^(2/3) < ((k+3)/k)·(k+1)^((2α+1)/3)
/// and is unique; the grand coalition is checked by its exact condition.
pub fn identical_cost_analysis(
    c: f64,
    sigma_sq: f64,
    alpha: f64,
    n: usize,
) -> Result<IdenticalCostReport> {
    if n < 2 {
        return Err(Error::TooFewPlayers(n));
    }
    let instance = ProblemInstance::identical(n, c, sigma_sq, alpha)?;
    let ratio = 2f64.cbrt() * sigma_sq / c.powf(2.0 / 3.0);
    let mut robust_intermediate_size = None;
    for k in 2..n {
        let lo = identical_window_edge(k, alpha);
        let hi = (k as f64 + 3.0) / k as f64 * ((k + 1) as f64).powf((2.0 * alpha + 1.0) / 3.0);
        if ratio >= lo && ratio < hi {
            robust_intermediate_size = Some(k);
            break;
        }
    }
    Ok(IdenticalCostReport {
        nash_intermediate_exists: false,
        robust_intermediate_size,
        grand_stable: grand_coalition_sufficient(&instance, Tolerance::default())?,
    })
}

/// Social-cost-optimal stable coalition of an identical-cost instance, via
/// the complete analytic characterization (no enumeration). Returns `None`
/// when no stable coalition exists.
pub fn identical_cost_optimal_stable(
    instance: &ProblemInstance,
    kind: StabilityKind,
    tol: Tolerance,
) -> Result<Option<(Coalition, f64, f64)>> {
    debug_assert!(instance.is_identical_cost());
    if instance.n() < 2 {
        return Ok(None);
    }
    let report = identical_cost_analysis(
        instance.cost(1),
        instance.sigma_sq(),
        instance.alpha(),
        instance.n(),
    )?;
    let grand_stable = grand_coalition_sufficient(instance, tol)?;

    let mut candidates: Vec<usize> = Vec::new();
    if grand_stable {
        candidates.push(instance.n());
    }
    if kind == StabilityKind::Robust {
        if let Some(k) = report.robust_intermediate_size {
            candidates.push(k);
        }
    }
    let mut best: Option<(Coalition, f64, f64)> = None;
    for k in candidates {
        let coalition = Coalition::downward_closed(k)?;
        let sc = decentralized_social_cost(&coalition, instance)?;
        let var = decentralized_variance(&coalition, instance)?;
        if best.as_ref().map_or(true, |(_, b, _)| sc < *b) {
            best = Some((coalition, sc, var));
        }
    }
    Ok(best)
}
