//! Executable checks for efficiency, the equal division guarantee,
//! consistency, strategy-proofness, and non-obvious manipulability.
//!
//! Economy-level checks are exact on the economies they are given. Incentive
//! audits quantify over finite grids of reports and opponent profiles, so a
//! failure is an exact counterexample while a pass only speaks for the grid
//! ([`Status::PassOnGrid`]).

use crate::economy::{AgentId, Allocation, Economy};
use crate::error::{Error, Result};
use crate::option_sets::{
    self, enumerate_outcomes, even_points, profile_at, sampled_option_set, worst_point, OptionSet,
    ProfileGrid,
};
use crate::prefs::{Preference, Shape};
use crate::rules::Rule;
use crate::scalar::{self, Scalar};
use rayon::prelude::*;
use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Axiom {
    Efficiency,
    EqualDivisionGuarantee,
    Consistency,
    NonObviousManipulability,
    StrategyProofness,
}

impl Axiom {
    /// The four axioms of the characterization, in matrix column order.
    pub const CHARACTERIZATION: [Axiom; 4] = [
        Axiom::Efficiency,
        Axiom::EqualDivisionGuarantee,
        Axiom::Consistency,
        Axiom::NonObviousManipulability,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Axiom::Efficiency => "efficiency",
            Axiom::EqualDivisionGuarantee => "edg",
            Axiom::Consistency => "consistency",
            Axiom::NonObviousManipulability => "nom",
            Axiom::StrategyProofness => "sp",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Ok(match name {
            "efficiency" => Axiom::Efficiency,
            "edg" => Axiom::EqualDivisionGuarantee,
            "consistency" => Axiom::Consistency,
            "nom" => Axiom::NonObviousManipulability,
            "sp" => Axiom::StrategyProofness,
            other => return Err(Error::UnknownAxiom(other.to_string())),
        })
    }
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    PassOnGrid,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::PassOnGrid => "pass-on-grid",
        }
    }

    pub fn is_fail(self) -> bool {
        self == Status::Fail
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counts {
    pub checked: u64,
    pub vacuous: u64,
}

impl std::ops::AddAssign for Counts {
    fn add_assign(&mut self, rhs: Self) {
        self.checked += rhs.checked;
        self.vacuous += rhs.vacuous;
    }
}

/// A misreport that beats truth-telling against one opponent profile.
#[derive(Debug, Clone, PartialEq)]
pub struct ManipulationWitness<T> {
    pub agent: AgentId,
    pub truth: Preference<T>,
    pub misreport: Preference<T>,
    pub omega: T,
    pub opponents: Vec<(AgentId, Preference<T>)>,
    pub truthful_outcome: T,
    pub manipulated_outcome: T,
}

impl<T: Scalar> ManipulationWitness<T> {
    pub fn economy_with(&self, report: &Preference<T>) -> Result<Economy<T>> {
        let agents = std::iter::once((self.agent, report.clone())).chain(self.opponents.iter().cloned());
        Economy::new(agents, self.omega.clone())
    }

    /// Re-evaluates condition (i) from scratch.
    pub fn reproduces<R: Rule<T> + ?Sized>(&self, rule: &R) -> Result<bool> {
        let truthful = rule.allocate(&self.economy_with(&self.truth)?)?;
        let lying = rule.allocate(&self.economy_with(&self.misreport)?)?;
        let x = truthful.get(self.agent).expect("agent present");
        let y = lying.get(self.agent).expect("agent present");
        Ok(x.approx_eq(&self.truthful_outcome)
            && y.approx_eq(&self.manipulated_outcome)
            && self.truth.prefers(y, x)?)
    }
}

/// Why a manipulation is (or is not) obvious: the worst truthful outcome
/// against the worst outcome under the misreport.
#[derive(Debug, Clone, PartialEq)]
pub struct ObviousCertificate<T> {
    pub obvious: bool,
    pub worst_truthful: T,
    /// The least preferred outcome under the misreport.
    pub binding: T,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Witness<T> {
    Efficiency {
        economy: Economy<T>,
        allocation: Allocation<T>,
        agent: AgentId,
    },
    EqualDivision {
        economy: Economy<T>,
        allocation: Allocation<T>,
        agent: AgentId,
    },
    Consistency {
        economy: Economy<T>,
        allocation: Allocation<T>,
        subset: BTreeSet<AgentId>,
        reduced: Economy<T>,
        reduced_allocation: Allocation<T>,
        agent: AgentId,
    },
    Manipulation(ManipulationWitness<T>),
    ObviousManipulation {
        manipulation: ManipulationWitness<T>,
        grid: ProfileGrid<T>,
        truthful_set: OptionSet<T>,
        misreport_set: OptionSet<T>,
        certificate: ObviousCertificate<T>,
    },
}

impl<T: Scalar> Witness<T> {
    /// Recomputes the failure through the public rule and option-set
    /// operations.
    pub fn reproduces<R: Rule<T> + ?Sized>(&self, rule: &R) -> Result<bool> {
        match self {
            Witness::Efficiency { economy, agent, .. } => {
                let v = check_efficiency(rule, economy)?;
                Ok(matches!(v.witness, Some(Witness::Efficiency { agent: a, .. }) if a == *agent))
            }
            Witness::EqualDivision { economy, agent, .. } => {
                let v = check_edg(rule, economy)?;
                Ok(matches!(v.witness, Some(Witness::EqualDivision { agent: a, .. }) if a == *agent))
            }
            Witness::Consistency { economy, subset, .. } => {
                let v = check_consistency(rule, economy, Some(std::slice::from_ref(subset)))?;
                Ok(v.status.is_fail())
            }
            Witness::Manipulation(m) => m.reproduces(rule),
            Witness::ObviousManipulation { manipulation: m, grid, .. } => {
                if !m.reproduces(rule)? {
                    return Ok(false);
                }
                let truthful = sampled_option_set(rule, m.agent, &m.truth, &m.omega, grid)?;
                let lying = sampled_option_set(rule, m.agent, &m.misreport, &m.omega, grid)?;
                Ok(is_obvious_manipulation(&m.truth, &truthful, &lying)?.obvious)
            }
        }
    }

    /// Economy the witness lives in, when it has one.
    pub fn economy(&self) -> Option<&Economy<T>> {
        match self {
            Witness::Efficiency { economy, .. }
            | Witness::EqualDivision { economy, .. }
            | Witness::Consistency { economy, .. } => Some(economy),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict<T> {
    pub axiom: Axiom,
    pub rule: String,
    pub status: Status,
    pub witness: Option<Witness<T>>,
    pub counts: Counts,
    /// Grid the verdict is relative to (incentive audits only).
    pub grid: Option<IncentiveGrid<T>>,
}

impl<T: Scalar> Verdict<T> {
    fn pass(axiom: Axiom, rule: String, counts: Counts) -> Self {
        Verdict { axiom, rule, status: Status::Pass, witness: None, counts, grid: None }
    }

    fn fail(axiom: Axiom, rule: String, witness: Witness<T>, counts: Counts) -> Self {
        Verdict { axiom, rule, status: Status::Fail, witness: Some(witness), counts, grid: None }
    }

    /// Re-checks the witness of a failing verdict. Passing verdicts trivially
    /// reproduce.
    pub fn reproduces<R: Rule<T> + ?Sized>(&self, rule: &R) -> Result<bool> {
        match (&self.status, &self.witness) {
            (Status::Fail, Some(w)) => w.reproduces(rule),
            (Status::Fail, None) => Ok(false),
            _ => Ok(true),
        }
    }
}

pub fn check_efficiency<T: Scalar, R: Rule<T> + ?Sized>(rule: &R, econ: &Economy<T>) -> Result<Verdict<T>> {
    let alloc = rule.allocate(econ)?;
    let z = econ.excess();
    let demand = !scalar::is_negative(&z);
    let supply = scalar::le(&z, &T::zero());
    let counts = Counts { checked: 1, vacuous: 0 };
    for (id, pref) in econ.agents() {
        let x = alloc.get(id).expect("rule allocates every agent");
        let over = demand && scalar::lt(pref.peak(), x);
        let under = supply && scalar::lt(x, pref.peak());
        if over || under {
            let w = Witness::Efficiency { economy: econ.clone(), allocation: alloc, agent: id };
            return Ok(Verdict::fail(Axiom::Efficiency, rule.name(), w, counts));
        }
    }
    Ok(Verdict::pass(Axiom::Efficiency, rule.name(), counts))
}

pub fn check_edg<T: Scalar, R: Rule<T> + ?Sized>(rule: &R, econ: &Economy<T>) -> Result<Verdict<T>> {
    let alloc = rule.allocate(econ)?;
    let share = econ.equal_share();
    let mut counts = Counts::default();
    for (id, pref) in econ.agents() {
        if !pref.peak().approx_eq(&share) {
            continue;
        }
        counts.checked += 1;
        if !alloc.get(id).expect("rule allocates every agent").approx_eq(&share) {
            let w = Witness::EqualDivision { economy: econ.clone(), allocation: alloc, agent: id };
            return Ok(Verdict::fail(Axiom::EqualDivisionGuarantee, rule.name(), w, counts));
        }
    }
    if counts.checked == 0 {
        counts.vacuous = 1;
    }
    Ok(Verdict::pass(Axiom::EqualDivisionGuarantee, rule.name(), counts))
}

/// Subset size up to which consistency tries every proper subset.
pub const EXHAUSTIVE_SUBSET_LIMIT: usize = 8;

/// Proper nonempty subsets checked by default: all of them for small
/// economies (by size, then lexicographically), otherwise singletons, pairs,
/// and their complements.
pub fn default_subsets(ids: &[AgentId]) -> Vec<BTreeSet<AgentId>> {
    let n = ids.len();
    if n <= EXHAUSTIVE_SUBSET_LIMIT {
        let mut subsets: Vec<BTreeSet<AgentId>> = (1u32..(1u32 << n) - 1)
            .map(|mask| (0..n).filter(|k| mask & (1 << k) != 0).map(|k| ids[k]).collect())
            .collect();
        subsets.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.iter().cmp(b.iter())));
        return subsets;
    }
    let all: BTreeSet<AgentId> = ids.iter().copied().collect();
    let mut small: Vec<BTreeSet<AgentId>> = ids.iter().map(|id| [*id].into()).collect();
    for (a, x) in ids.iter().enumerate() {
        for y in &ids[a + 1..] {
            small.push([*x, *y].into());
        }
    }
    let complements: Vec<BTreeSet<AgentId>> = small.iter().map(|s| &all - s).collect();
    small.extend(complements);
    small
}

pub fn check_consistency<T: Scalar, R: Rule<T> + ?Sized>(
    rule: &R,
    econ: &Economy<T>,
    subsets: Option<&[BTreeSet<AgentId>]>,
) -> Result<Verdict<T>> {
    let alloc = rule.allocate(econ)?;
    let ids: Vec<AgentId> = econ.ids().collect();
    let owned;
    let subsets = match subsets {
        Some(s) => s,
        None => {
            owned = default_subsets(&ids);
            &owned[..]
        }
    };
    let mut counts = Counts::default();
    for subset in subsets {
        let reduced = match econ.reduce(subset, &alloc) {
            Ok(r) => r,
            Err(Error::DegenerateReduction) => {
                counts.vacuous += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        counts.checked += 1;
        let reduced_allocation = rule.allocate(&reduced)?;
        let mismatch = subset.iter().find(|id| {
            !reduced_allocation.get(**id).expect("kept agent").approx_eq(alloc.get(**id).expect("agent"))
        });
        if let Some(agent) = mismatch {
            let w = Witness::Consistency {
                economy: econ.clone(),
                allocation: alloc.clone(),
                subset: subset.clone(),
                reduced,
                reduced_allocation,
                agent: *agent,
            };
            return Ok(Verdict::fail(Axiom::Consistency, rule.name(), w, counts));
        }
    }
    Ok(Verdict::pass(Axiom::Consistency, rule.name(), counts))
}

/// Runs an economy-level check over a whole suite. The first failing economy
/// is shrunk before it is reported.
pub fn check_economies<T: Scalar, R: Rule<T> + ?Sized>(
    axiom: Axiom,
    rule: &R,
    economies: &[Economy<T>],
) -> Result<Verdict<T>> {
    let check = |e: &Economy<T>| -> Result<Verdict<T>> {
        match axiom {
            Axiom::Efficiency => check_efficiency(rule, e),
            Axiom::EqualDivisionGuarantee => check_edg(rule, e),
            Axiom::Consistency => check_consistency(rule, e, None),
            other => Err(Error::Precondition(format!("{other} is not an economy-level axiom"))),
        }
    };
    let mut counts = Counts::default();
    for econ in economies {
        let v = check(econ)?;
        counts += v.counts;
        if v.status.is_fail() {
            let small = shrink_economy(econ, |e| check(e).map(|v| v.status.is_fail()).unwrap_or(false));
            let mut v = if small != *econ { check(&small)? } else { v };
            v.counts = counts;
            return Ok(v);
        }
    }
    Ok(Verdict::pass(axiom, rule.name(), counts))
}

/// How far a value is from being a small dyadic fraction; lower is rounder.
fn roughness<T: Scalar>(x: &T) -> u32 {
    let mut scaled = x.clone();
    for level in 0..5 {
        if scaled.approx_eq(&scaled.floor()) {
            return level;
        }
        scaled = scaled * T::two();
    }
    5
}

fn rounder_candidates<T: Scalar>(x: &T) -> Vec<T> {
    let f = x.floor();
    let h = (x.clone() * T::two()).floor() / T::two();
    vec![f.clone(), f + T::one(), h.clone(), h + T::one() / T::two()]
}

/// Greedy witness minimization: drop agents, then round peaks and the
/// endowment, keeping each change only while `fails` still holds.
pub fn shrink_economy<T: Scalar, F: Fn(&Economy<T>) -> bool>(econ: &Economy<T>, fails: F) -> Economy<T> {
    let mut current = econ.clone();
    loop {
        let mut changed = false;
        let ids: Vec<AgentId> = current.ids().collect();
        for id in ids {
            if let Ok(smaller) = current.without(id) {
                if fails(&smaller) {
                    current = smaller;
                    changed = true;
                    break;
                }
            }
        }
        if changed {
            continue;
        }
        let agents: Vec<(AgentId, Preference<T>)> = current.agents().map(|(id, p)| (id, p.clone())).collect();
        'agents: for (id, pref) in &agents {
            let r = roughness(pref.peak());
            for c in rounder_candidates(pref.peak()) {
                if roughness(&c) >= r || scalar::is_negative(&c) {
                    continue;
                }
                if let Ok(p) = pref.with_peak(c) {
                    let candidate = current.with_pref(*id, p);
                    if fails(&candidate) {
                        current = candidate;
                        changed = true;
                        break 'agents;
                    }
                }
            }
        }
        if !changed {
            let r = roughness(current.omega());
            for c in rounder_candidates(current.omega()) {
                if roughness(&c) >= r {
                    continue;
                }
                if let Ok(candidate) = current.with_omega(c) {
                    if fails(&candidate) {
                        current = candidate;
                        changed = true;
                        break;
                    }
                }
            }
        }
        if !changed {
            return current;
        }
    }
}

/// Condition (i): the first (misreport, opponent profile) pair, misreports
/// outermost, where lying beats truth-telling under `truth`.
pub fn find_manipulation<T: Scalar, R: Rule<T> + ?Sized>(
    rule: &R,
    agent: AgentId,
    truth: &Preference<T>,
    omega: &T,
    grid: &ProfileGrid<T>,
    misreports: &[Preference<T>],
) -> Result<Option<ManipulationWitness<T>>> {
    let truthful = enumerate_outcomes(rule, agent, truth, omega, grid)?;
    for misreport in misreports {
        let lying = enumerate_outcomes(rule, agent, misreport, omega, grid)?;
        for (index, (x, y)) in truthful.iter().zip(&lying).enumerate() {
            if truth.prefers(y, x)? {
                return Ok(Some(ManipulationWitness {
                    agent,
                    truth: truth.clone(),
                    misreport: misreport.clone(),
                    omega: omega.clone(),
                    opponents: profile_at(grid, agent, index as u64)?,
                    truthful_outcome: x.clone(),
                    manipulated_outcome: y.clone(),
                }));
            }
        }
    }
    Ok(None)
}

/// Condition (ii): every outcome under the misreport is strictly better than
/// some truthful outcome, i.e. than the worst truthful one.
///
/// Only decisive points of the misreport set are inspected (its endpoints and
/// projected peak for intervals), which is exact by the endpoint lemma in
/// [`option_sets`].
pub fn is_obvious_manipulation<T: Scalar>(
    truth: &Preference<T>,
    truthful_set: &OptionSet<T>,
    misreport_set: &OptionSet<T>,
) -> Result<ObviousCertificate<T>> {
    let worst_truthful = worst_point(truthful_set, truth)?;
    let binding = option_sets::argmax_disutility(&misreport_set.decisive_points(truth), truth)?;
    let obvious = truth.prefers(&binding, &worst_truthful)?;
    Ok(ObviousCertificate { obvious, worst_truthful, binding })
}

/// Grid over which the incentive audits quantify.
///
/// For each `n` and `omega`, reports range over `peak_points` evenly spaced
/// peaks on `[0, Ω]` (plus Ω/n and `extra_peaks` when requested) combined
/// with every shape in `shapes`; opponents use the same peaks with
/// `opponent_shapes`. Every agent position `1..=n` is audited.
#[derive(Debug, Clone, PartialEq)]
pub struct IncentiveGrid<T> {
    pub ns: Vec<usize>,
    pub omegas: Vec<T>,
    pub peak_points: usize,
    pub include_equal_share: bool,
    pub extra_peaks: Vec<T>,
    pub shapes: Vec<Shape<T>>,
    pub opponent_shapes: Vec<Shape<T>>,
    pub budget: u64,
}

impl<T: Scalar> Default for IncentiveGrid<T> {
    fn default() -> Self {
        IncentiveGrid {
            ns: vec![2, 3, 4],
            omegas: vec![T::one(), scalar::int(3), scalar::int(9)],
            peak_points: 9,
            include_equal_share: true,
            extra_peaks: Vec::new(),
            shapes: default_shapes(),
            opponent_shapes: vec![Shape::default()],
            budget: option_sets::DEFAULT_BUDGET,
        }
    }
}

/// Symmetric, steep on the left, and with a left jump.
pub fn default_shapes<T: Scalar>() -> Vec<Shape<T>> {
    vec![
        Shape::default(),
        Shape { slope_left: scalar::int(3), ..Shape::default() },
        Shape { jump_left: T::one(), ..Shape::default() },
    ]
}

impl<T: Scalar> IncentiveGrid<T> {
    pub fn validate(&self) -> Result<()> {
        if self.ns.is_empty() || self.omegas.is_empty() || self.shapes.is_empty() || self.opponent_shapes.is_empty() {
            return Err(Error::Precondition("incentive grid has an empty dimension".into()));
        }
        if self.peak_points == 0 && self.extra_peaks.is_empty() && !self.include_equal_share {
            return Err(Error::Precondition("incentive grid has no peaks".into()));
        }
        if self.ns.contains(&0) {
            return Err(Error::Precondition("agent counts must be positive".into()));
        }
        if let Some(o) = self.omegas.iter().find(|o| !scalar::lt(&T::zero(), *o)) {
            return Err(Error::Precondition(format!("endowment {o} must be positive")));
        }
        for s in self.shapes.iter().chain(&self.opponent_shapes) {
            s.with_peak(T::zero())?;
        }
        Ok(())
    }

    pub fn peaks_for(&self, n: usize, omega: &T) -> Vec<T> {
        let mut peaks = even_points(omega, self.peak_points);
        if self.include_equal_share {
            peaks.push(omega.clone() / T::of_usize(n));
        }
        peaks.extend(self.extra_peaks.iter().filter(|p| !scalar::is_negative(*p)).cloned());
        peaks.sort_by(|a, b| a.approx_cmp(b));
        peaks.dedup_by(|a, b| a.approx_eq(b));
        peaks
    }

    pub fn reports_for(&self, n: usize, omega: &T) -> Result<Vec<Preference<T>>> {
        let mut out = Vec::new();
        for p in self.peaks_for(n, omega) {
            for s in &self.shapes {
                out.push(s.with_peak(p.clone())?);
            }
        }
        Ok(out)
    }

    pub fn opponent_grid(&self, n: usize, omega: &T) -> Result<ProfileGrid<T>> {
        Ok(ProfileGrid::new(self.peaks_for(n, omega), self.opponent_shapes.clone(), n - 1)?.with_budget(self.budget))
    }
}

/// One audited position: agent count, endowment, agent id.
struct Cell<T> {
    omega: T,
    agent: AgentId,
    reports: Vec<Preference<T>>,
    grid: ProfileGrid<T>,
}

/// Outcomes of one agent for every (report, opponent profile) pair, with the
/// outcome amounts interned.
struct OutcomeTable<T> {
    values: Vec<T>,
    /// `[report][profile]` → index into `values`.
    cells: Vec<Vec<u32>>,
}

impl<T: Scalar> OutcomeTable<T> {
    fn build<R: Rule<T> + ?Sized>(rule: &R, cell: &Cell<T>) -> Result<Self> {
        let rows: Vec<Vec<T>> = cell
            .reports
            .iter()
            .map(|r| enumerate_outcomes(rule, cell.agent, r, &cell.omega, &cell.grid))
            .collect::<Result<_>>()?;
        let mut values: Vec<T> = rows.iter().flatten().cloned().collect();
        values.sort_by(|a, b| a.approx_cmp(b));
        values.dedup_by(|a, b| a.approx_eq(b));
        let index = |x: &T| values.binary_search_by(|v| v.approx_cmp(x)).expect("interned") as u32;
        let cells = rows.iter().map(|row| row.iter().map(index).collect()).collect();
        Ok(OutcomeTable { values, cells })
    }

    /// Rank of every interned value under `pref`: lower is better, equal
    /// disutility shares a rank.
    fn ranks(&self, pref: &Preference<T>) -> Vec<u32> {
        let dis: Vec<T> = self.values.iter().map(|x| pref.disutility_unchecked(x)).collect();
        let mut order: Vec<usize> = (0..dis.len()).collect();
        order.sort_by(|a, b| dis[*a].approx_cmp(&dis[*b]));
        let mut ranks = vec![0u32; dis.len()];
        let mut rank = 0u32;
        for (pos, &k) in order.iter().enumerate() {
            if pos > 0 && dis[order[pos - 1]].approx_cmp(&dis[k]) != Ordering::Equal {
                rank += 1;
            }
            ranks[k] = rank;
        }
        ranks
    }
}

/// What one audited cell found.
struct CellFinding {
    pairs: u64,
    /// (truth, misreport, profile) of the first manipulation.
    manipulation: Option<(usize, usize, u64)>,
    /// (truth, misreport, profile) of the first obvious manipulation.
    obvious: Option<(usize, usize, u64)>,
}

fn audit_cell<T: Scalar, R: Rule<T> + ?Sized>(rule: &R, cell: &Cell<T>) -> Result<CellFinding> {
    let table = OutcomeTable::build(rule, cell)?;
    let reports = cell.reports.len();
    let mut finding = CellFinding { pairs: 0, manipulation: None, obvious: None };
    for t in 0..reports {
        let ranks = table.ranks(&cell.reports[t]);
        let truthful = &table.cells[t];
        let worst_truthful = truthful.iter().map(|&v| ranks[v as usize]).max().expect("nonempty grid");
        for m in 0..reports {
            if m == t {
                continue;
            }
            finding.pairs += 1;
            let lying = &table.cells[m];
            let beats = truthful
                .iter()
                .zip(lying)
                .position(|(&x, &y)| ranks[y as usize] < ranks[x as usize]);
            let Some(q) = beats else { continue };
            finding.manipulation.get_or_insert((t, m, q as u64));
            let worst_lying = lying.iter().map(|&v| ranks[v as usize]).max().expect("nonempty grid");
            if worst_lying < worst_truthful && finding.obvious.is_none() {
                finding.obvious = Some((t, m, q as u64));
            }
        }
    }
    Ok(finding)
}

fn cells<T: Scalar>(grid: &IncentiveGrid<T>) -> Result<Vec<Cell<T>>> {
    grid.validate()?;
    let mut out = Vec::new();
    for &n in &grid.ns {
        for omega in &grid.omegas {
            let opponents = grid.opponent_grid(n, omega)?;
            opponents.check_budget()?;
            let reports = grid.reports_for(n, omega)?;
            for agent in 1..=n as u32 {
                out.push(Cell {
                    omega: omega.clone(),
                    agent: AgentId(agent),
                    reports: reports.clone(),
                    grid: opponents.clone(),
                });
            }
        }
    }
    Ok(out)
}

fn manipulation_witness<T: Scalar>(cell: &Cell<T>, t: usize, m: usize, q: u64) -> Result<ManipulationWitness<T>> {
    Ok(ManipulationWitness {
        agent: cell.agent,
        truth: cell.reports[t].clone(),
        misreport: cell.reports[m].clone(),
        omega: cell.omega.clone(),
        opponents: profile_at(&cell.grid, cell.agent, q)?,
        truthful_outcome: T::zero(),
        manipulated_outcome: T::zero(),
    })
}

fn fill_outcomes<T: Scalar, R: Rule<T> + ?Sized>(rule: &R, mut w: ManipulationWitness<T>) -> Result<ManipulationWitness<T>> {
    w.truthful_outcome = rule.allocate(&w.economy_with(&w.truth)?)?.get(w.agent).expect("agent").clone();
    w.manipulated_outcome = rule.allocate(&w.economy_with(&w.misreport)?)?.get(w.agent).expect("agent").clone();
    Ok(w)
}

/// Strategy-proofness and non-obvious manipulability verdicts from one pass
/// over the grid.
pub fn audit_incentives<T: Scalar, R: Rule<T> + ?Sized>(
    rule: &R,
    grid: &IncentiveGrid<T>,
) -> Result<(Verdict<T>, Verdict<T>)> {
    let cells = cells(grid)?;
    let findings: Vec<CellFinding> = cells.par_iter().map(|c| audit_cell(rule, c)).collect::<Result<_>>()?;
    let pairs: u64 = findings.iter().map(|f| f.pairs).sum();
    let counts = Counts { checked: pairs, vacuous: 0 };

    let mut sp = Verdict::pass(Axiom::StrategyProofness, rule.name(), counts);
    sp.status = Status::PassOnGrid;
    sp.grid = Some(grid.clone());
    if let Some((cell, (t, m, q))) = cells.iter().zip(&findings).find_map(|(c, f)| f.manipulation.map(|x| (c, x))) {
        let w = fill_outcomes(rule, manipulation_witness(cell, t, m, q)?)?;
        sp.status = Status::Fail;
        sp.witness = Some(Witness::Manipulation(w));
    }

    let mut nom = Verdict::pass(Axiom::NonObviousManipulability, rule.name(), counts);
    nom.status = Status::PassOnGrid;
    nom.grid = Some(grid.clone());
    if let Some((cell, (t, m, q))) = cells.iter().zip(&findings).find_map(|(c, f)| f.obvious.map(|x| (c, x))) {
        let w = fill_outcomes(rule, manipulation_witness(cell, t, m, q)?)?;
        let truthful_set = sampled_option_set(rule, w.agent, &w.truth, &w.omega, &cell.grid)?;
        let misreport_set = sampled_option_set(rule, w.agent, &w.misreport, &w.omega, &cell.grid)?;
        let certificate = is_obvious_manipulation(&w.truth, &truthful_set, &misreport_set)?;
        if !certificate.obvious {
            return Err(Error::Internal("obvious-manipulation table and certificate disagree".into()));
        }
        nom.status = Status::Fail;
        nom.witness = Some(Witness::ObviousManipulation {
            manipulation: w,
            grid: cell.grid.clone(),
            truthful_set,
            misreport_set,
            certificate,
        });
    }
    Ok((sp, nom))
}

pub fn audit_nom<T: Scalar, R: Rule<T> + ?Sized>(rule: &R, grid: &IncentiveGrid<T>) -> Result<Verdict<T>> {
    audit_incentives(rule, grid).map(|(_, nom)| nom)
}

pub fn check_sp<T: Scalar, R: Rule<T> + ?Sized>(rule: &R, grid: &IncentiveGrid<T>) -> Result<Verdict<T>> {
    audit_incentives(rule, grid).map(|(sp, _)| sp)
}
