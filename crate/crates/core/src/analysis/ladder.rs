use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::maps::MapDefinition;
use crate::orbit::{default_horizon, generate_orbit, run_pipeline, ChainResult, ChainSummary};
use crate::point::{l2_distance, Point};

/// Longest window over which sups are evaluated.
pub const MAX_WINDOW: u64 = 100_000_000;

/// Verdict attached to every convergence-condition report.
pub const CONDITION_VERDICT: &str = "condition not decidable from finitely many terms";

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Least common multiple of two periods.
pub fn lcm_periods(l: u64, lp: u64) -> Result<u64> {
    if l == 0 || lp == 0 {
        return Err(Error::InvalidInput("periods must be at least 1".into()));
    }
    (l / gcd(l, lp))
        .checked_mul(lp)
        .ok_or(Error::Overflow("lcm of periods"))
}

/// Re-selected pre-periods: `T'_j ≥ T_j`, nondecreasing, with
/// `L_j | T'_{j+1} - T'_j`.
///
/// Each `T'_{j+1}` is the smallest admissible value given `T'_j`, so the
/// result is the lexicographically smallest admissible sequence. There is
/// no componentwise smallest one in general: for `T = [5, 13]`, `L = [3]`
/// both `[5, 14]` and `[7, 13]` are admissible.
///
/// `periods` must have at least `pre_periods.len() - 1` entries; extra
/// entries (the last level's period) are ignored.
pub fn reselect_t(pre_periods: &[u64], periods: &[u64]) -> Result<Vec<u64>> {
    let Some((&first, rest)) = pre_periods.split_first() else {
        return Ok(Vec::new());
    };
    if periods.len() < rest.len() {
        return Err(Error::InvalidInput(format!(
            "{} pre-periods need at least {} periods, got {}",
            pre_periods.len(),
            rest.len(),
            periods.len()
        )));
    }
    if periods.contains(&0) {
        return Err(Error::InvalidInput("periods must be at least 1".into()));
    }
    let mut out = Vec::with_capacity(pre_periods.len());
    out.push(first);
    for (&t_next, &l) in rest.iter().zip(periods) {
        let prev = *out.last().expect("nonempty");
        let gap = t_next.saturating_sub(prev);
        let steps = gap.div_ceil(l);
        let next = steps
            .checked_mul(l)
            .and_then(|s| s.checked_add(prev))
            .ok_or(Error::Overflow("re-selected pre-period"))?;
        out.push(next);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LadderLevel {
    #[serde(rename = "K")]
    pub k: u32,
    #[serde(rename = "T")]
    pub pre_period: u64,
    #[serde(rename = "L")]
    pub period: u64,
    /// Re-selected pre-period `T'`.
    #[serde(rename = "T_prime")]
    pub reselected: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LadderPlan {
    pub levels: Vec<LadderLevel>,
    /// `lcm(L_{j+1}, L_j)` for consecutive levels.
    pub lcms: Vec<u64>,
}

impl LadderPlan {
    /// Builds a plan from `(K, T, L)` triples with strictly increasing `K`.
    pub fn from_levels(levels: &[(u32, u64, u64)]) -> Result<Self> {
        if levels.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::InvalidInput(
                "ladder resolutions must be strictly increasing".into(),
            ));
        }
        if levels.iter().any(|&(k, _, l)| k == 0 || l == 0) {
            return Err(Error::InvalidInput(
                "ladder levels need K ≥ 1 and L ≥ 1".into(),
            ));
        }
        let ts: Vec<u64> = levels.iter().map(|l| l.1).collect();
        let ls: Vec<u64> = levels.iter().map(|l| l.2).collect();
        let reselected = reselect_t(&ts, &ls)?;
        let lcms = ls
            .windows(2)
            .map(|w| lcm_periods(w[1], w[0]))
            .collect::<Result<Vec<_>>>()?;
        let levels = levels
            .iter()
            .zip(reselected)
            .map(|(&(k, pre_period, period), reselected)| LadderLevel {
                k,
                pre_period,
                period,
                reselected,
            })
            .collect();
        Ok(Self { levels, lcms })
    }

    pub fn from_chains(chains: &[ChainResult]) -> Result<Self> {
        let triples: Vec<(u32, u64, u64)> = chains
            .iter()
            .map(|c| (c.grid.resolution(), c.pre_period as u64, c.period as u64))
            .collect();
        Self::from_levels(&triples)
    }
}

/// `(2T' + 2ℒ + 1) γ^{T' + ℒ} / K_j`.
pub fn condition_term(t_next: u64, lcm: u64, k_j: u32, gamma: f64) -> f64 {
    let n = t_next as f64 + lcm as f64;
    (2.0 * n + 1.0) * gamma.powf(n) / f64::from(k_j)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TermTrend {
    /// Every consecutive ratio is below one.
    Decreasing,
    /// Some term is at least as large as its predecessor.
    NotDecreasing,
    /// Fewer than two terms.
    Insufficient,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub gamma: f64,
    pub budget: f64,
    pub terms: Vec<f64>,
    pub partial_sums: Vec<f64>,
    pub ratios: Vec<f64>,
    pub trend: TermTrend,
    /// Whether every partial sum is below the budget.
    pub within_budget: bool,
    pub verdict: &'static str,
}

/// Finite evidence for the summability condition on a ladder.
pub fn check_convergence_condition(plan: &LadderPlan, gamma: f64, budget: f64) -> ConditionReport {
    let terms: Vec<f64> = plan
        .lcms
        .iter()
        .enumerate()
        .map(|(j, &lcm)| {
            condition_term(plan.levels[j + 1].reselected, lcm, plan.levels[j].k, gamma)
        })
        .collect();
    let partial_sums: Vec<f64> = terms
        .iter()
        .scan(0.0, |acc, t| {
            *acc += t;
            Some(*acc)
        })
        .collect();
    let ratios: Vec<f64> = terms.windows(2).map(|w| w[1] / w[0]).collect();
    let trend = if ratios.is_empty() {
        TermTrend::Insufficient
    } else if ratios.iter().all(|&r| r < 1.0) {
        TermTrend::Decreasing
    } else {
        TermTrend::NotDecreasing
    };
    ConditionReport {
        gamma,
        budget,
        within_budget: partial_sums.iter().all(|&s| s < budget),
        terms,
        partial_sums,
        ratios,
        trend,
        verdict: CONDITION_VERDICT,
    }
}

fn check_certified(chain: &ChainResult) -> Result<()> {
    if chain.period == 0 || chain.path().len() != chain.pre_period + chain.period {
        return Err(Error::NotPeriodic(
            "chain carries no cycle certificate".into(),
        ));
    }
    Ok(())
}

/// `sup_{0 ≤ t ≤ window} |b(t + offset) - a(t + offset)|` over decoded chains.
pub fn chain_gap_sup(a: &ChainResult, b: &ChainResult, offset: u64, window: u64) -> Result<f64> {
    check_certified(a)?;
    check_certified(b)?;
    if a.grid.dim() != b.grid.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.grid.dim(),
            found: b.grid.dim(),
        });
    }
    let end = offset
        .checked_add(window)
        .filter(|_| window <= MAX_WINDOW)
        .ok_or_else(|| Error::InvalidInput(format!("window {window} exceeds {MAX_WINDOW}")))?;
    Ok((offset..=end)
        .map(|t| l2_distance(&a.decoded_at(t as usize), &b.decoded_at(t as usize)))
        .fold(0.0, f64::max))
}

/// Sup of the level difference over one lcm window starting at `T'_{j+1}`.
///
/// Because `L_j` divides `T'_{j+1} - T'_j` and both chains repeat with
/// period `lcm(L_j, L_{j+1})` past their pre-periods, this equals the sup
/// over all `t ≥ 0` of `|y*_{j+1}(t + T'_{j+1}) - y*_j(t + T'_j)|`.
pub fn sup_difference(
    chain_j: &ChainResult,
    chain_jp1: &ChainResult,
    t_prime_j: u64,
    t_prime_jp1: u64,
) -> Result<f64> {
    check_certified(chain_j)?;
    check_certified(chain_jp1)?;
    let (l_j, l_jp1) = (chain_j.period as u64, chain_jp1.period as u64);
    if t_prime_j < chain_j.pre_period as u64 || t_prime_jp1 < chain_jp1.pre_period as u64 {
        return Err(Error::InvalidInput(
            "re-selected pre-periods must dominate the chains' pre-periods".into(),
        ));
    }
    if t_prime_jp1 < t_prime_j || !(t_prime_jp1 - t_prime_j).is_multiple_of(l_j) {
        return Err(Error::InvalidInput(format!(
            "T' = ({t_prime_j}, {t_prime_jp1}) violates divisibility by L = {l_j}"
        )));
    }
    let lcm = lcm_periods(l_j, l_jp1)?;
    chain_gap_sup(chain_j, chain_jp1, t_prime_jp1, lcm)
}

#[derive(Debug, Clone, Serialize)]
pub struct TailReport {
    pub levels: Vec<ChainSummary>,
    pub plan: LadderPlan,
    /// `sup_difference` between consecutive levels.
    pub level_sups: Vec<f64>,
    /// `sup_{T'_j ≤ t ≤ T'_j + ℒ_{j+1,j}} |y(t) - y*_j(t)|` per level.
    pub shadow_sups: Vec<f64>,
    pub tolerance: f64,
    pub consistent: bool,
    pub verdict: String,
}

fn nonincreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] <= w[0])
}

/// Runs the pipeline at every resolution of the ladder and collects the
/// Cauchy-style diagnostics.
pub fn tail_convergence(
    map: &MapDefinition,
    y0: &Point,
    ks: &[u32],
    horizon: usize,
    tolerance: f64,
) -> Result<TailReport> {
    let runs = ks
        .par_iter()
        .map(|&k| {
            let grid = GridSpec::new(k, map.dim())?;
            run_pipeline(map, y0, &grid, horizon, horizon.max(default_horizon(&grid)))
        })
        .collect::<Result<Vec<_>>>()?;
    let chains: Vec<ChainResult> = runs.iter().map(|r| r.chain.clone()).collect();
    let plan = LadderPlan::from_chains(&chains)?;

    let level_sups = (0..plan.lcms.len())
        .map(|j| {
            sup_difference(
                &chains[j],
                &chains[j + 1],
                plan.levels[j].reselected,
                plan.levels[j + 1].reselected,
            )
        })
        .collect::<Result<Vec<_>>>()?;

    let mut shadow_sups = Vec::with_capacity(plan.lcms.len());
    if !plan.lcms.is_empty() {
        let mut need = 0u64;
        for (j, &lcm) in plan.lcms.iter().enumerate() {
            if lcm > MAX_WINDOW {
                return Err(Error::InvalidInput(format!(
                    "window {lcm} exceeds {MAX_WINDOW}"
                )));
            }
            need = need.max(plan.levels[j].reselected + lcm);
        }
        let need = usize::try_from(need).map_err(|_| Error::Overflow("orbit length"))?;
        let orbit = generate_orbit(map, y0, need)?;
        for (j, &lcm) in plan.lcms.iter().enumerate() {
            let start = plan.levels[j].reselected as usize;
            let sup = (start..=start + lcm as usize)
                .map(|t| l2_distance(orbit.samples()[t].coords(), &chains[j].decoded_at(t)))
                .fold(0.0, f64::max);
            shadow_sups.push(sup);
        }
    }

    let consistent = !level_sups.is_empty()
        && nonincreasing(&level_sups)
        && nonincreasing(&shadow_sups)
        && level_sups.last().is_some_and(|&s| s <= tolerance)
        && shadow_sups.last().is_some_and(|&s| s <= tolerance);
    let verdict = if level_sups.is_empty() {
        "insufficient levels: at least two resolutions are needed".to_string()
    } else if consistent {
        "consistent with (conv)".to_string()
    } else {
        "not consistent with (conv) at this tolerance".to_string()
    };
    Ok(TailReport {
        levels: runs.iter().map(|r| r.summary()).collect(),
        plan,
        level_sups,
        shadow_sups,
        tolerance,
        consistent,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridState;
    use crate::orbit::{build_chain, TransitionTable};

    fn chain_from_cycle(values: &[&[u32]], k: u32) -> ChainResult {
        let g = GridSpec::new(k, values[0].len()).unwrap();
        let mut shadow: Vec<GridState> =
            values.iter().map(|v| GridState::new(v.to_vec())).collect();
        shadow.push(shadow[0].clone());
        let t = TransitionTable::from_shadow(&shadow);
        build_chain(&t, &shadow[0], shadow.len(), &g).unwrap()
    }

    #[test]
    fn lcm_examples() {
        assert_eq!(lcm_periods(4, 6).unwrap(), 12);
        assert_eq!(lcm_periods(1, 9).unwrap(), 9);
        assert_eq!(lcm_periods(12, 18).unwrap(), 36);
        assert_eq!(
            lcm_periods(u64::MAX, u64::MAX - 1),
            Err(Error::Overflow("lcm of periods"))
        );
    }

    #[test]
    fn reselect_examples() {
        assert_eq!(reselect_t(&[3, 5], &[4, 1]).unwrap(), vec![3, 7]);
        assert_eq!(reselect_t(&[0, 0, 0], &[1, 1, 1]).unwrap(), vec![0, 0, 0]);
        assert_eq!(reselect_t(&[2, 2], &[5, 3]).unwrap(), vec![2, 2]);
        assert_eq!(reselect_t(&[5, 1], &[3]).unwrap(), vec![5, 5]);
        assert!(reselect_t(&[], &[]).unwrap().is_empty());
        assert!(reselect_t(&[1, 2], &[]).is_err());
    }

    #[test]
    fn condition_examples() {
        assert_eq!(condition_term(2, 2, 4, 2.0), 36.0);
        let plan = LadderPlan::from_levels(&[(4, 0, 2), (8, 2, 2)]).unwrap();
        let r = check_convergence_condition(&plan, 2.0, 100.0);
        assert_eq!(r.terms, vec![36.0]);
        assert!(r.within_budget);
        assert_eq!(r.verdict, CONDITION_VERDICT);

        let levels: Vec<(u32, u64, u64)> = (1..=30).map(|j| (1u32 << j, 0, 1)).collect();
        let r = check_convergence_condition(&LadderPlan::from_levels(&levels).unwrap(), 1.0, 4.0);
        assert!((r.terms[0] - 1.5).abs() < 1e-15);
        assert!((r.partial_sums.last().unwrap() - 3.0).abs() < 1e-6);
        assert!(r.within_budget);
        assert_eq!(r.trend, TermTrend::Decreasing);

        let r = check_convergence_condition(&LadderPlan::from_levels(&[]).unwrap(), 2.0, 1.0);
        assert!(r.terms.is_empty() && r.within_budget);
        assert_eq!(r.trend, TermTrend::Insufficient);
    }

    #[test]
    fn plan_rejects_non_increasing_ladder() {
        assert!(LadderPlan::from_levels(&[(8, 0, 1), (4, 0, 1)]).is_err());
    }

    #[test]
    fn sup_difference_examples() {
        // K = 2: nodes -1, 0, 1 at indices 0, 1, 2. The first coordinates
        // cycle through [1, -1] and [1, 0, -1, 0].
        let a = chain_from_cycle(&[&[2, 1], &[0, 1]], 2);
        let b = chain_from_cycle(&[&[2, 1], &[1, 2], &[0, 1], &[1, 0]], 2);
        assert_eq!(sup_difference(&a, &a, 0, 0).unwrap(), 0.0);
        assert_eq!(sup_difference(&a, &a, 0, 2).unwrap(), 0.0);
        assert_eq!(sup_difference(&a, &b, 0, 0).unwrap(), 2.0);
        assert!(sup_difference(&a, &b, 0, 1).is_err());
    }

    #[test]
    fn window_reduction_identity() {
        let a = chain_from_cycle(&[&[4], &[0], &[2]], 4);
        let b = chain_from_cycle(&[&[0], &[3], &[8], &[5]], 8);
        let one = chain_gap_sup(&a, &b, 0, 12).unwrap();
        for m in 2..5 {
            assert_eq!(chain_gap_sup(&a, &b, 0, 12 * m).unwrap(), one);
        }
    }

    #[test]
    fn tail_rotation_is_exact() {
        let m = MapDefinition::ar(vec![0.0, -1.0]).unwrap();
        let r = tail_convergence(
            &m,
            &Point::new(vec![1.0, 0.0]).unwrap(),
            &[2, 4, 8],
            40,
            1e-12,
        )
        .unwrap();
        assert_eq!(r.level_sups, vec![0.0, 0.0]);
        assert_eq!(r.shadow_sups, vec![0.0, 0.0]);
        assert!(r.consistent);
    }

    #[test]
    fn tail_contracting_ar() {
        let m = MapDefinition::ar(vec![0.5]).unwrap();
        let r =
            tail_convergence(&m, &Point::new(vec![1.0]).unwrap(), &[4, 8, 16], 40, 0.2).unwrap();
        assert_eq!(r.level_sups, vec![0.25, 0.125]);
        assert_eq!(r.shadow_sups, vec![0.25, 0.125]);
        for (j, s) in r.level_sups.iter().enumerate() {
            let k = [4.0, 8.0, 16.0];
            assert!(*s <= 1.0 / k[j] + 1.0 / k[j + 1]);
        }
        assert!(r.consistent);
    }
}
