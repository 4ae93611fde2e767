//! Option sets: every amount an agent can end up with for a fixed report as
//! the other agents' reports vary.
//!
//! The uniform rule has a closed form. Any other rule is handled by
//! enumerating opponent profiles drawn from a finite [`ProfileGrid`].
//!
//! Worst points over intervals only need the endpoints: on `[lo, hi]` a
//! single-peaked disutility falls up to the peak and rises after it, and the
//! left jump only raises points strictly below the peak, all of which are
//! dominated by `lo`. So the maximum sits at `lo` or `hi`.

use crate::economy::{AgentId, Economy};
use crate::error::{Error, Result};
use crate::prefs::{Preference, Shape};
use crate::rules::Rule;
use crate::scalar::{self, Scalar};
use rayon::prelude::*;
use std::cmp::Ordering;

/// Default cap on the number of opponent profiles one enumeration may visit.
pub const DEFAULT_BUDGET: u64 = 1_000_000;

/// Finite surrogate for the opponents' preference domain.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileGrid<T> {
    pub peaks: Vec<T>,
    pub shapes: Vec<Shape<T>>,
    pub n_opponents: usize,
    pub budget: u64,
}

impl<T: Scalar> ProfileGrid<T> {
    pub fn new(peaks: Vec<T>, shapes: Vec<Shape<T>>, n_opponents: usize) -> Result<Self> {
        let grid = ProfileGrid { peaks, shapes, n_opponents, budget: DEFAULT_BUDGET };
        grid.validate()?;
        Ok(grid)
    }

    /// Symmetric opponents at `points` evenly spaced peaks over `[0, omega]`.
    pub fn even(omega: &T, points: usize, n_opponents: usize) -> Result<Self> {
        ProfileGrid::new(even_points(omega, points), vec![Shape::default()], n_opponents)
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.peaks.is_empty() || self.shapes.is_empty() {
            return Err(Error::Precondition("profile grid needs peaks and shapes".into()));
        }
        if let Some(p) = self.peaks.iter().find(|p| scalar::is_negative(*p)) {
            return Err(Error::Precondition(format!("negative grid peak {p}")));
        }
        for shape in &self.shapes {
            shape.with_peak(T::zero())?;
        }
        Ok(())
    }

    /// Every opponent preference the grid can produce.
    pub fn candidates(&self) -> Result<Vec<Preference<T>>> {
        let mut out = Vec::with_capacity(self.peaks.len() * self.shapes.len());
        for p in &self.peaks {
            for s in &self.shapes {
                out.push(s.with_peak(p.clone())?);
            }
        }
        Ok(out)
    }

    /// Number of opponent profiles in the cartesian product.
    pub fn profile_count(&self) -> u128 {
        let base = (self.peaks.len() * self.shapes.len()) as u128;
        (0..self.n_opponents).fold(1u128, |acc, _| acc.saturating_mul(base))
    }

    pub fn check_budget(&self) -> Result<u64> {
        let needed = self.profile_count();
        if needed > self.budget as u128 {
            return Err(Error::BudgetExceeded { needed, budget: self.budget });
        }
        Ok(needed as u64)
    }
}

/// `points` evenly spaced amounts over `[0, omega]`, endpoints included.
pub fn even_points<T: Scalar>(omega: &T, points: usize) -> Vec<T> {
    match points {
        0 => Vec::new(),
        1 => vec![omega.clone()],
        _ => {
            let steps = T::of_usize(points - 1);
            (0..points).map(|k| omega.clone() * T::of_usize(k) / steps.clone()).collect()
        }
    }
}

/// The first `count` positive ids other than `agent`.
pub fn opponent_ids(agent: AgentId, count: usize) -> Vec<AgentId> {
    (1u32..).map(AgentId).filter(|id| *id != agent).take(count).collect()
}

/// Decodes a profile index into one candidate index per opponent.
fn profile_digits(mut index: u64, base: u64, len: usize) -> Vec<usize> {
    let mut digits = vec![0usize; len];
    for d in digits.iter_mut().rev() {
        *d = (index % base) as usize;
        index /= base;
    }
    digits
}

/// Builds the economy for profile `index` of the grid.
pub(crate) fn profile_economy<T: Scalar>(
    agent: AgentId,
    report: &Preference<T>,
    omega: &T,
    opponents: &[AgentId],
    candidates: &[Preference<T>],
    index: u64,
) -> Result<Economy<T>> {
    let digits = profile_digits(index, candidates.len() as u64, opponents.len());
    let agents = std::iter::once((agent, report.clone()))
        .chain(opponents.iter().zip(digits).map(|(id, d)| (*id, candidates[d].clone())));
    Economy::new(agents, omega.clone())
}

/// The agent's outcome under `report` for every profile of the grid, in
/// profile order.
pub fn enumerate_outcomes<T: Scalar, R: Rule<T> + ?Sized>(
    rule: &R,
    agent: AgentId,
    report: &Preference<T>,
    omega: &T,
    grid: &ProfileGrid<T>,
) -> Result<Vec<T>> {
    grid.validate()?;
    let count = grid.check_budget()?;
    let candidates = grid.candidates()?;
    let opponents = opponent_ids(agent, grid.n_opponents);
    (0..count)
        .into_par_iter()
        .map(|index| {
            let econ = profile_economy(agent, report, omega, &opponents, &candidates, index)?;
            let alloc = rule.allocate(&econ)?;
            Ok(alloc.get(agent).expect("rule allocates every agent").clone())
        })
        .collect()
}

/// Opponent preferences for profile `index` (for witnesses).
pub fn profile_at<T: Scalar>(grid: &ProfileGrid<T>, agent: AgentId, index: u64) -> Result<Vec<(AgentId, Preference<T>)>> {
    let candidates = grid.candidates()?;
    let opponents = opponent_ids(agent, grid.n_opponents);
    let digits = profile_digits(index, candidates.len() as u64, opponents.len());
    Ok(opponents.into_iter().zip(digits).map(|(id, d)| (id, candidates[d].clone())).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub enum OptionSetKind<T> {
    Interval { lo: T, hi: T },
    /// Sorted, deduplicated.
    Samples(Vec<T>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Provenance<T> {
    Analytic,
    Enumerated(ProfileGrid<T>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptionSet<T> {
    pub kind: OptionSetKind<T>,
    pub provenance: Provenance<T>,
}

impl<T: Scalar> OptionSet<T> {
    pub fn interval(lo: T, hi: T) -> Result<Self> {
        if scalar::lt(&hi, &lo) {
            return Err(Error::Precondition(format!("interval [{lo}, {hi}] is reversed")));
        }
        Ok(OptionSet { kind: OptionSetKind::Interval { lo, hi }, provenance: Provenance::Analytic })
    }

    pub fn samples(mut values: Vec<T>, provenance: Provenance<T>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyOptionSet);
        }
        values.sort_by(|a, b| a.approx_cmp(b));
        values.dedup_by(|a, b| a.approx_eq(b));
        Ok(OptionSet { kind: OptionSetKind::Samples(values), provenance })
    }

    pub fn min(&self) -> &T {
        match &self.kind {
            OptionSetKind::Interval { lo, .. } => lo,
            OptionSetKind::Samples(v) => &v[0],
        }
    }

    pub fn max(&self) -> &T {
        match &self.kind {
            OptionSetKind::Interval { hi, .. } => hi,
            OptionSetKind::Samples(v) => v.last().expect("nonempty"),
        }
    }

    pub fn contains(&self, x: &T) -> bool {
        match &self.kind {
            OptionSetKind::Interval { lo, hi } => scalar::le(lo, x) && scalar::le(x, hi),
            OptionSetKind::Samples(v) => v.binary_search_by(|y| y.approx_cmp(x)).is_ok(),
        }
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        match &self.kind {
            OptionSetKind::Samples(v) => v.iter().all(|x| other.contains(x)),
            OptionSetKind::Interval { lo, hi } => match &other.kind {
                OptionSetKind::Interval { .. } => other.contains(lo) && other.contains(hi),
                OptionSetKind::Samples(_) => lo.approx_eq(hi) && other.contains(lo),
            },
        }
    }

    /// Points that can be the worst or the best element under `pref`:
    /// endpoints plus the projected peak for intervals, everything otherwise.
    pub fn decisive_points(&self, pref: &Preference<T>) -> Vec<T> {
        match &self.kind {
            OptionSetKind::Interval { lo, hi } => {
                let projected = scalar::min(&scalar::max(pref.peak(), lo), hi);
                vec![lo.clone(), hi.clone(), projected]
            }
            OptionSetKind::Samples(v) => v.clone(),
        }
    }
}

/// Analytic option set of the uniform rule: `[Ω/n, min(p, Ω)]` when the peak
/// is above the equal share, `[p, Ω/n]` otherwise, and `{Ω}` for a lone agent.
pub fn uniform_option_set<T: Scalar>(pref: &Preference<T>, omega: &T, n: usize) -> Result<OptionSet<T>> {
    if n == 0 {
        return Err(Error::Precondition("option sets need at least one agent".into()));
    }
    if !scalar::lt(&T::zero(), omega) {
        return Err(Error::Precondition(format!("endowment {omega} must be positive")));
    }
    if n == 1 {
        return OptionSet::interval(omega.clone(), omega.clone());
    }
    let share = omega.clone() / T::of_usize(n);
    let p = pref.peak();
    if scalar::lt(&share, p) {
        OptionSet::interval(share, scalar::min(p, omega))
    } else {
        OptionSet::interval(p.clone(), share)
    }
}

/// Option set of `agent` under `rule`, enumerated over the grid.
pub fn sampled_option_set<T: Scalar, R: Rule<T> + ?Sized>(
    rule: &R,
    agent: AgentId,
    pref: &Preference<T>,
    omega: &T,
    grid: &ProfileGrid<T>,
) -> Result<OptionSet<T>> {
    let outcomes = enumerate_outcomes(rule, agent, pref, omega, grid)?;
    OptionSet::samples(outcomes, Provenance::Enumerated(grid.clone()))
}

/// An element of the set with maximal disutility under `pref`.
pub fn worst_point<T: Scalar>(oset: &OptionSet<T>, pref: &Preference<T>) -> Result<T> {
    let points = match &oset.kind {
        OptionSetKind::Interval { lo, hi } => vec![lo.clone(), hi.clone()],
        OptionSetKind::Samples(v) => v.clone(),
    };
    argmax_disutility(&points, pref)
}

pub(crate) fn argmax_disutility<T: Scalar>(points: &[T], pref: &Preference<T>) -> Result<T> {
    let mut best: Option<(T, T)> = None;
    for x in points {
        let d = pref.disutility(x)?;
        match &best {
            Some((_, bd)) if d.approx_cmp(bd) != Ordering::Greater => {}
            _ => best = Some((x.clone(), d)),
        }
    }
    best.map(|(x, _)| x).ok_or(Error::EmptyOptionSet)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::RuleDescriptor;
    use crate::scalar::{int, ratio, Rational};
    use proptest::prelude::*;

    fn sym(p: Rational) -> Preference<Rational> {
        Preference::symmetric(p).unwrap()
    }

    fn interval(o: &OptionSet<Rational>) -> (Rational, Rational) {
        match &o.kind {
            OptionSetKind::Interval { lo, hi } => (lo.clone(), hi.clone()),
            _ => panic!("expected interval"),
        }
    }

    fn grid_halves() -> ProfileGrid<Rational> {
        let peaks = (0..=18).map(|k| ratio(k, 2)).collect();
        ProfileGrid::new(peaks, vec![Shape::default()], 2).unwrap()
    }

    #[test]
    fn uniform_analytic_examples() {
        let o = uniform_option_set(&sym(int(6)), &int(9), 3).unwrap();
        assert_eq!(interval(&o), (int(3), int(6)));
        let o = uniform_option_set(&sym(int(2)), &int(9), 3).unwrap();
        assert_eq!(interval(&o), (int(2), int(3)));
        let o = uniform_option_set(&sym(int(3)), &int(9), 3).unwrap();
        assert_eq!(interval(&o), (int(3), int(3)));
        let o = uniform_option_set(&sym(int(2)), &int(9), 1).unwrap();
        assert_eq!(interval(&o), (int(9), int(9)));
        // peaks beyond the endowment are capped
        let o = uniform_option_set(&sym(int(12)), &int(9), 3).unwrap();
        assert_eq!(interval(&o), (int(3), int(9)));
        assert_eq!(o.provenance, Provenance::Analytic);
    }

    #[test]
    fn uniform_enumeration_matches_formula() {
        let grid = grid_halves();
        let o = sampled_option_set(&RuleDescriptor::Uniform, AgentId(1), &sym(int(6)), &int(9), &grid).unwrap();
        assert_eq!(o.min(), &int(3));
        assert_eq!(o.max(), &int(6));
        let analytic = uniform_option_set(&sym(int(6)), &int(9), 3).unwrap();
        assert!(o.is_subset_of(&analytic));
        assert!(matches!(o.provenance, Provenance::Enumerated(_)));
    }

    #[test]
    fn phi_bar_enumeration_equals_uniform() {
        let grid = grid_halves();
        for agent in [AgentId(1), AgentId(2), AgentId(3)] {
            let u = sampled_option_set(&RuleDescriptor::Uniform, agent, &sym(int(6)), &int(9), &grid).unwrap();
            let b = sampled_option_set(&RuleDescriptor::PhiBar, agent, &sym(int(6)), &int(9), &grid).unwrap();
            assert_eq!(u.kind, b.kind);
        }
    }

    #[test]
    fn phi_bar_departs_at_peak_equal_to_endowment() {
        // Two agents both peaking at Ω: the special branch hands agent 1 Ω/3,
        // below the uniform interval [Ω/2, Ω].
        let grid = ProfileGrid::even(&int::<Rational>(9), 9, 1).unwrap();
        let b = sampled_option_set(&RuleDescriptor::PhiBar, AgentId(1), &sym(int(9)), &int(9), &grid).unwrap();
        assert!(b.contains(&int(3)));
        assert!(!uniform_option_set(&sym(int(9)), &int(9), 2).unwrap().contains(&int(3)));
    }

    #[test]
    fn constant_rule_has_singleton_set() {
        let grid = grid_halves();
        let o = sampled_option_set(&RuleDescriptor::EqualDivision, AgentId(2), &sym(int(7)), &int(9), &grid).unwrap();
        assert_eq!(o.kind, OptionSetKind::Samples(vec![int(3)]));
    }

    #[test]
    fn relabeling_opponents_does_not_matter_for_uniform() {
        let grid = grid_halves();
        let a = sampled_option_set(&RuleDescriptor::Uniform, AgentId(1), &sym(int(5)), &int(9), &grid).unwrap();
        let b = sampled_option_set(&RuleDescriptor::Uniform, AgentId(40), &sym(int(5)), &int(9), &grid).unwrap();
        assert_eq!(a.kind, b.kind);
    }

    #[test]
    fn budget_is_enforced() {
        let grid = ProfileGrid::even(&int::<Rational>(9), 10, 7).unwrap().with_budget(1000);
        let r = sampled_option_set(&RuleDescriptor::Uniform, AgentId(1), &sym(int(5)), &int(9), &grid);
        assert!(matches!(r, Err(Error::BudgetExceeded { .. })));
        assert!(ProfileGrid::<Rational>::new(vec![], vec![Shape::default()], 1).is_err());
        assert!(ProfileGrid::<Rational>::new(vec![int(-1)], vec![Shape::default()], 1).is_err());
    }

    #[test]
    fn worst_point_examples() {
        let o = OptionSet::interval(int::<Rational>(3), int(6)).unwrap();
        assert_eq!(worst_point(&o, &sym(int(6))).unwrap(), int(3));
        let o = OptionSet::interval(int::<Rational>(2), int(3)).unwrap();
        assert_eq!(worst_point(&o, &sym(int(2))).unwrap(), int(3));
        let o = OptionSet::samples(vec![int(0), int(3), ratio(7, 2)], Provenance::Analytic).unwrap();
        assert_eq!(worst_point(&o, &sym(int(6))).unwrap(), int(0));
        assert!(OptionSet::<Rational>::samples(vec![], Provenance::Analytic).is_err());
        assert!(OptionSet::interval(int::<Rational>(3), int(2)).is_err());
    }

    #[test]
    fn even_points_cover_endpoints() {
        let pts = even_points(&int::<Rational>(9), 9);
        assert_eq!(pts.len(), 9);
        assert_eq!(pts[0], int(0));
        assert_eq!(pts[8], int(9));
        assert_eq!(pts[4], ratio(9, 2));
        assert_eq!(opponent_ids(AgentId(2), 3), vec![AgentId(1), AgentId(3), AgentId(4)]);
    }

    proptest! {
        #[test]
        fn worst_point_dominates_members(
            peak in 0i64..40, sl in 1i64..5, sr in 1i64..5, jl in 0i64..6,
            pts in proptest::collection::vec(0i64..80, 1..50),
            lo in 0i64..40, width in 0i64..40,
        ) {
            let pref = Preference::new(ratio::<Rational>(peak, 4), int(sl), int(sr), ratio(jl, 2), int(0)).unwrap();
            let values: Vec<Rational> = pts.iter().map(|&k| ratio(k, 8)).collect();
            let o = OptionSet::samples(values.clone(), Provenance::Analytic).unwrap();
            let w = worst_point(&o, &pref).unwrap();
            prop_assert!(o.contains(&w));
            let dw = pref.disutility(&w).unwrap();
            for x in &values {
                prop_assert!(pref.disutility(x).unwrap() <= dw);
            }
            // intervals: endpoints dominate a dense scan
            let (a, b) = (ratio::<Rational>(lo, 4), ratio::<Rational>(lo + width, 4));
            let iv = OptionSet::interval(a.clone(), b.clone()).unwrap();
            let dw = pref.disutility(&worst_point(&iv, &pref).unwrap()).unwrap();
            for k in 0..=50 {
                let x = a.clone() + (b.clone() - a.clone()) * ratio::<Rational>(k, 50);
                prop_assert!(pref.disutility(&x).unwrap() <= dw);
            }
        }
    }
}
