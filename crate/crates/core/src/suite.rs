//! Economy suites, audit configuration, and the independence matrix.

use crate::axioms::{self, Axiom, IncentiveGrid, Status, Verdict};
use crate::economy::{AgentId, Economy};
use crate::error::Result;
use crate::prefs::Preference;
use crate::rules::RuleDescriptor;
use crate::scalar::{self, Scalar};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const DEFAULT_SEED: u64 = 20_250_101;

/// Small hand-picked economies, checked before any random ones. Each of the
/// separating rules trips on one of these first.
pub fn canonical_economies<T: Scalar>() -> Vec<Economy<T>> {
    let e = |peaks: &[(i64, i64)], omega: i64| {
        let peaks: Vec<T> = peaks.iter().map(|&(n, d)| T::from_ratio(n, d)).collect();
        Economy::from_peaks(&peaks, scalar::int(omega)).expect("canonical economy")
    };
    vec![
        e(&[(0, 1), (4, 1)], 2),
        e(&[(2, 1), (1, 1)], 2),
        e(&[(2, 1), (2, 1), (1, 1)], 3),
        e(&[(2, 1), (4, 1), (6, 1)], 9),
        e(&[(1, 1), (2, 1), (3, 1)], 6),
        e(&[(1, 1), (2, 1), (3, 1)], 9),
        e(&[(4, 1), (5, 1), (6, 1)], 9),
        e(&[(3, 1), (3, 1), (0, 1)], 3),
        e(&[(0, 1), (0, 1), (7, 2)], 9),
        e(&[(5, 2), (4, 1), (6, 1)], 9),
    ]
}

fn random_amount<T: Scalar, R: Rng>(rng: &mut R, max: i64) -> T {
    let den = rng.gen_range(1..=6);
    T::from_ratio(rng.gen_range(0..=max * den), den)
}

/// Random preference: rational peak in `[0, 10]`, slopes in `{1,2,3}` and
/// jumps in `{0, 1/2, …, 3/2}` (symmetric half the time).
pub fn random_preference<T: Scalar, R: Rng>(rng: &mut R) -> Preference<T> {
    let peak = random_amount(rng, 10);
    if rng.gen_bool(0.5) {
        return Preference::symmetric(peak).expect("valid peak");
    }
    let slope = |rng: &mut R| scalar::int::<T>(rng.gen_range(1..=3));
    let jump = |rng: &mut R| T::from_ratio(rng.gen_range(0..=3), 2);
    let (sl, sr) = (slope(rng), slope(rng));
    let (jl, jr) = (jump(rng), jump(rng));
    Preference::new(peak, sl, sr, jl, jr).expect("valid random preference")
}

/// Random economy with `1..=max_agents` agents. The endowment is a random
/// fraction in `(0, 2]` of the peak sum, so both excess regimes show up.
pub fn random_economy<T: Scalar, R: Rng>(rng: &mut R, max_agents: usize) -> Economy<T> {
    let n = rng.gen_range(1..=max_agents.max(1));
    let prefs: Vec<Preference<T>> = (0..n).map(|_| random_preference(rng)).collect();
    let total: T = prefs.iter().map(|p| p.peak().clone()).sum();
    let omega = if scalar::lt(&T::zero(), &total) {
        total * T::from_ratio(rng.gen_range(1..=40), 20)
    } else {
        T::from_ratio(rng.gen_range(1..=40), 4)
    };
    Economy::new(prefs.into_iter().enumerate().map(|(k, p)| (AgentId(k as u32 + 1), p)), omega)
        .expect("valid random economy")
}

/// As [`random_economy`], with one agent's peak moved to the equal share.
pub fn random_economy_with_equal_share_agent<T: Scalar, R: Rng>(rng: &mut R, max_agents: usize) -> Economy<T> {
    let e: Economy<T> = random_economy(rng, max_agents);
    let ids: Vec<AgentId> = e.ids().collect();
    let id = ids[rng.gen_range(0..ids.len())];
    let pref = e.pref(id).expect("member").with_peak(e.equal_share()).expect("nonnegative share");
    e.with_pref(id, pref)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomSuite {
    pub count: usize,
    pub max_agents: usize,
    /// Extra economies in which some agent peaks at the equal share.
    pub equal_share_count: usize,
    pub seed: u64,
}

impl Default for RandomSuite {
    fn default() -> Self {
        RandomSuite { count: 150, max_agents: 6, equal_share_count: 50, seed: DEFAULT_SEED }
    }
}

impl RandomSuite {
    pub fn generate<T: Scalar>(&self) -> Vec<Economy<T>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut out: Vec<Economy<T>> = (0..self.count).map(|_| random_economy(&mut rng, self.max_agents)).collect();
        out.extend((0..self.equal_share_count).map(|_| random_economy_with_equal_share_agent(&mut rng, self.max_agents)));
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EconomySuite<T> {
    pub canonical: bool,
    pub fixed: Vec<Economy<T>>,
    pub random: Option<RandomSuite>,
}

impl<T: Scalar> Default for EconomySuite<T> {
    fn default() -> Self {
        EconomySuite { canonical: true, fixed: Vec::new(), random: Some(RandomSuite::default()) }
    }
}

impl<T: Scalar> EconomySuite<T> {
    pub fn economies(&self) -> Vec<Economy<T>> {
        let mut out = if self.canonical { canonical_economies() } else { Vec::new() };
        out.extend(self.fixed.iter().cloned());
        if let Some(r) = &self.random {
            out.extend(r.generate());
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditConfig<T> {
    pub economies: EconomySuite<T>,
    pub incentives: IncentiveGrid<T>,
    /// Order for `serial_dictator_fixed`; ascending ids when absent.
    pub serial_order: Option<Vec<AgentId>>,
}

impl<T: Scalar> Default for AuditConfig<T> {
    fn default() -> Self {
        AuditConfig { economies: EconomySuite::default(), incentives: IncentiveGrid::default(), serial_order: None }
    }
}

impl<T: Scalar> AuditConfig<T> {
    pub fn validate(&self) -> Result<()> {
        self.incentives.validate()
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        if let Some(r) = &mut self.economies.random {
            r.seed = seed;
        }
        self
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.incentives.budget = budget;
        self
    }

    /// Resolves a rule name, attaching the configured serial order.
    pub fn rule(&self, name: &str) -> Result<RuleDescriptor> {
        Ok(match RuleDescriptor::from_name(name)? {
            RuleDescriptor::SerialDictator { .. } => RuleDescriptor::SerialDictator { order: self.serial_order.clone() },
            other => other,
        })
    }

    pub fn rules(&self) -> Vec<RuleDescriptor> {
        RuleDescriptor::NAMES.iter().map(|n| self.rule(n).expect("known name")).collect()
    }
}

/// Runs the requested axioms for one rule. Economy checks share one suite;
/// the incentive audits share one pass over the grid.
pub fn run_audit<T: Scalar>(rule: &RuleDescriptor, axioms: &[Axiom], config: &AuditConfig<T>) -> Result<Vec<Verdict<T>>> {
    config.validate()?;
    let economies = config.economies.economies();
    let incentives = if axioms.iter().any(|a| matches!(a, Axiom::NonObviousManipulability | Axiom::StrategyProofness)) {
        Some(axioms::audit_incentives(rule, &config.incentives)?)
    } else {
        None
    };
    axioms
        .iter()
        .map(|axiom| match axiom {
            Axiom::NonObviousManipulability => Ok(incentives.as_ref().expect("computed").1.clone()),
            Axiom::StrategyProofness => Ok(incentives.as_ref().expect("computed").0.clone()),
            economy_level => axioms::check_economies(*economy_level, rule, &economies),
        })
        .collect()
}

/// The axiom each separating rule is expected to fail.
pub fn designated_failure(rule: &RuleDescriptor) -> Option<Axiom> {
    match rule {
        RuleDescriptor::Uniform => None,
        RuleDescriptor::EqualDivision => Some(Axiom::Efficiency),
        RuleDescriptor::SerialDictator { .. } => Some(Axiom::EqualDivisionGuarantee),
        RuleDescriptor::PhiBar => Some(Axiom::Consistency),
        RuleDescriptor::PhiStar => Some(Axiom::NonObviousManipulability),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixRow<T> {
    pub rule: RuleDescriptor,
    /// One verdict per axiom, in [`Axiom::CHARACTERIZATION`] order.
    pub verdicts: Vec<Verdict<T>>,
}

/// A cell whose outcome differs from the expected pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct Mismatch {
    pub rule: String,
    pub axiom: Axiom,
    pub expected_fail: bool,
    pub status: Status,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndependenceMatrix<T> {
    pub rows: Vec<MatrixRow<T>>,
    pub mismatches: Vec<Mismatch>,
}

impl<T> IndependenceMatrix<T> {
    pub fn matches_pattern(&self) -> bool {
        self.mismatches.is_empty()
    }
}

pub fn independence_matrix<T: Scalar>(config: &AuditConfig<T>) -> Result<IndependenceMatrix<T>> {
    let mut rows = Vec::new();
    let mut mismatches = Vec::new();
    for rule in config.rules() {
        let verdicts = run_audit(&rule, &Axiom::CHARACTERIZATION, config)?;
        let designated = designated_failure(&rule);
        for v in &verdicts {
            let expected_fail = designated == Some(v.axiom);
            if v.status.is_fail() != expected_fail {
                mismatches.push(Mismatch { rule: rule.to_string(), axiom: v.axiom, expected_fail, status: v.status });
            }
        }
        rows.push(MatrixRow { rule, verdicts });
    }
    Ok(IndependenceMatrix { rows, mismatches })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    #[test]
    fn random_suites_are_reproducible() {
        let suite = RandomSuite { count: 20, max_agents: 5, equal_share_count: 5, seed: 3 };
        let a: Vec<Economy<Rational>> = suite.generate();
        let b: Vec<Economy<Rational>> = suite.generate();
        assert_eq!(a, b);
        assert_eq!(a.len(), 25);
        assert!(a.iter().all(|e| e.len() <= 5));
        for e in &a[20..] {
            let share = e.equal_share();
            assert!(e.agents().any(|(_, p)| p.peak() == &share));
        }
        let other: Vec<Economy<Rational>> = RandomSuite { seed: 4, ..suite }.generate();
        assert_ne!(a, other);
    }

    #[test]
    fn random_economies_cover_both_regimes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let es: Vec<Economy<Rational>> = (0..200).map(|_| random_economy(&mut rng, 6)).collect();
        assert!(es.iter().any(|e| e.excess() > Rational::from_ratio(0, 1)));
        assert!(es.iter().any(|e| e.excess() < Rational::from_ratio(0, 1)));
    }

    #[test]
    fn config_attaches_serial_order() {
        let config = AuditConfig::<Rational> { serial_order: Some(vec![AgentId(2), AgentId(1)]), ..AuditConfig::default() };
        assert_eq!(
            config.rule("serial_dictator").unwrap(),
            RuleDescriptor::SerialDictator { order: Some(vec![AgentId(2), AgentId(1)]) }
        );
        assert!(config.rule("nope").is_err());
    }

    #[test]
    fn economy_level_audit_of_the_separating_rules() {
        let config = AuditConfig::<Rational>::default();
        let economies = [Axiom::Efficiency, Axiom::EqualDivisionGuarantee, Axiom::Consistency];
        for rule in config.rules() {
            let verdicts = run_audit(&rule, &economies, &config).unwrap();
            for v in verdicts {
                assert_eq!(v.status.is_fail(), designated_failure(&rule) == Some(v.axiom), "{rule} {}", v.axiom);
                assert!(v.reproduces(&rule).unwrap());
            }
        }
    }
}
