//! The uniform rule and the four rules that separate its axioms.

use crate::economy::{AgentId, Allocation, Economy};
use crate::error::{Error, Result};
use crate::scalar::{self, Scalar};
use crate::solver;
use std::collections::BTreeSet;
use std::fmt;

/// Deterministic map from economies to allocations.
pub trait Rule<T: Scalar>: Sync {
    fn name(&self) -> String;
    fn allocate(&self, econ: &Economy<T>) -> Result<Allocation<T>>;
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RuleDescriptor {
    Uniform,
    EqualDivision,
    /// Fixed-order sequential dictator; `None` means ascending ids.
    SerialDictator { order: Option<Vec<AgentId>> },
    PhiBar,
    PhiStar,
}

impl RuleDescriptor {
    pub const NAMES: [&'static str; 5] =
        ["uniform", "equal_division", "serial_dictator_fixed", "phi_bar", "phi_star"];

    pub fn from_name(name: &str) -> Result<Self> {
        Ok(match name {
            "uniform" => RuleDescriptor::Uniform,
            "equal_division" => RuleDescriptor::EqualDivision,
            "serial_dictator_fixed" | "serial_dictator" => RuleDescriptor::SerialDictator { order: None },
            "phi_bar" => RuleDescriptor::PhiBar,
            "phi_star" => RuleDescriptor::PhiStar,
            other => return Err(Error::UnknownRule(other.to_string())),
        })
    }

    /// The five rules in canonical order.
    pub fn all() -> Vec<RuleDescriptor> {
        Self::NAMES.iter().map(|n| Self::from_name(n).expect("known name")).collect()
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            RuleDescriptor::Uniform => "uniform",
            RuleDescriptor::EqualDivision => "equal_division",
            RuleDescriptor::SerialDictator { .. } => "serial_dictator_fixed",
            RuleDescriptor::PhiBar => "phi_bar",
            RuleDescriptor::PhiStar => "phi_star",
        }
    }

    pub fn apply<T: Scalar>(&self, econ: &Economy<T>) -> Result<Allocation<T>> {
        match self {
            RuleDescriptor::Uniform => uniform(econ),
            RuleDescriptor::EqualDivision => equal_division(econ),
            RuleDescriptor::SerialDictator { order: Some(order) } => serial_dictator(econ, order),
            RuleDescriptor::SerialDictator { order: None } => {
                let order: Vec<_> = econ.ids().collect();
                serial_dictator(econ, &order)
            }
            RuleDescriptor::PhiBar => phi_bar(econ),
            RuleDescriptor::PhiStar => phi_star(econ),
        }
    }
}

impl fmt::Display for RuleDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl<T: Scalar> Rule<T> for RuleDescriptor {
    fn name(&self) -> String {
        self.as_str().to_string()
    }

    fn allocate(&self, econ: &Economy<T>) -> Result<Allocation<T>> {
        self.apply(econ)
    }
}

/// Applies a rule by name.
pub fn apply<T: Scalar>(name: &str, econ: &Economy<T>) -> Result<Allocation<T>> {
    RuleDescriptor::from_name(name)?.apply(econ)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// Σp ≥ Ω: everyone gets min(p, λ).
    Demand,
    /// Σp < Ω: everyone gets max(p, λ).
    Supply,
}

impl Branch {
    pub fn as_str(self) -> &'static str {
        match self {
            Branch::Demand => "demand",
            Branch::Supply => "supply",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UniformSolution<T> {
    pub allocation: Allocation<T>,
    pub branch: Branch,
    pub lambda: T,
}

pub fn uniform_solution<T: Scalar>(econ: &Economy<T>) -> Result<UniformSolution<T>> {
    let peaks = econ.peaks();
    let z = econ.excess();
    let (branch, lambda) = if scalar::is_negative(&z) {
        (Branch::Supply, solver::solve_lambda_supply(&peaks, econ.omega())?)
    } else {
        (Branch::Demand, solver::solve_lambda_demand(&peaks, econ.omega())?)
    };
    let amounts = econ.agents().map(|(id, pref)| {
        let x = match branch {
            Branch::Demand => scalar::min(pref.peak(), &lambda),
            Branch::Supply => scalar::max(pref.peak(), &lambda),
        };
        (id, x)
    });
    let allocation = Allocation::new(econ, amounts.collect::<Vec<_>>())?;
    Ok(UniformSolution { allocation, branch, lambda })
}

pub fn uniform<T: Scalar>(econ: &Economy<T>) -> Result<Allocation<T>> {
    uniform_solution(econ).map(|s| s.allocation)
}

pub fn equal_division<T: Scalar>(econ: &Economy<T>) -> Result<Allocation<T>> {
    let share = econ.equal_share();
    Allocation::new(econ, econ.ids().map(|id| (id, share.clone())).collect::<Vec<_>>())
}

/// Agents pick in `order` (restricted to the economy's agents). Everyone but
/// the last takes their peak clamped to what is left; the last takes the rest.
pub fn serial_dictator<T: Scalar>(econ: &Economy<T>, order: &[AgentId]) -> Result<Allocation<T>> {
    let mut seen = BTreeSet::new();
    if let Some(dup) = order.iter().find(|id| !seen.insert(**id)) {
        return Err(Error::OrderMismatch(format!("agent {dup} listed twice")));
    }
    let order: Vec<AgentId> = order.iter().copied().filter(|id| econ.contains(*id)).collect();
    if order.len() != econ.len() {
        let missing: Vec<String> =
            econ.ids().filter(|id| !seen.contains(id)).map(|id| id.to_string()).collect();
        return Err(Error::OrderMismatch(format!("order omits agents {}", missing.join(", "))));
    }
    let mut remaining = econ.omega().clone();
    let mut amounts = Vec::with_capacity(order.len());
    let last = order.len() - 1;
    for (pos, id) in order.iter().enumerate() {
        let take = if pos == last {
            remaining.clone()
        } else {
            let peak = econ.peak(*id).expect("filtered to members");
            scalar::min(peak, &remaining)
        };
        remaining = remaining - take.clone();
        amounts.push((*id, take));
    }
    Allocation::new(econ, amounts)
}

/// Uniform, except when the two smallest-id agents both peak at Ω and every
/// other agent peaks at 0: then (Ω/3, 2Ω/3, 0, …, 0).
pub fn phi_bar<T: Scalar>(econ: &Economy<T>) -> Result<Allocation<T>> {
    if !phi_bar_special_case(econ) {
        return uniform(econ);
    }
    let omega = econ.omega().clone();
    let three = T::of_usize(3);
    let amounts = econ.ids().enumerate().map(|(k, id)| {
        let x = match k {
            0 => omega.clone() / three.clone(),
            1 => T::two() * omega.clone() / three.clone(),
            _ => T::zero(),
        };
        (id, x)
    });
    Allocation::new(econ, amounts.collect::<Vec<_>>())
}

/// Whether [`phi_bar`] departs from the uniform rule on `econ`.
pub fn phi_bar_special_case<T: Scalar>(econ: &Economy<T>) -> bool {
    if econ.len() < 2 {
        return false;
    }
    let omega = econ.omega();
    econ.agents().enumerate().all(|(k, (_, pref))| {
        if k < 2 {
            pref.peak().approx_eq(omega)
        } else {
            pref.peak().approx_eq(&T::zero())
        }
    })
}

/// Ascending peaks, ties by ascending id.
pub fn peak_order<T: Scalar>(econ: &Economy<T>) -> Vec<AgentId> {
    let mut ids: Vec<(AgentId, &T)> = econ.agents().map(|(id, p)| (id, p.peak())).collect();
    ids.sort_by(|a, b| a.1.approx_cmp(b.1).then(a.0.cmp(&b.0)));
    ids.into_iter().map(|(id, _)| id).collect()
}

/// Peak-ordered sequential dictator under excess demand, uniform otherwise.
pub fn phi_star<T: Scalar>(econ: &Economy<T>) -> Result<Allocation<T>> {
    if scalar::lt(&T::zero(), &econ.excess()) {
        serial_dictator(econ, &peak_order(econ))
    } else {
        uniform(econ)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prefs::Preference;
    use crate::scalar::{int, ratio, Rational};
    use proptest::prelude::*;

    fn econ(peaks: &[Rational], omega: Rational) -> Economy<Rational> {
        Economy::from_peaks(peaks, omega).unwrap()
    }

    fn ints(xs: &[i64]) -> Vec<Rational> {
        xs.iter().map(|&x| int(x)).collect()
    }

    fn q(n: i64, d: i64) -> Rational {
        ratio(n, d)
    }

    #[test]
    fn uniform_examples() {
        let s = uniform_solution(&econ(&ints(&[2, 4, 6]), int(9))).unwrap();
        assert_eq!(s.allocation.values(), vec![int(2), q(7, 2), q(7, 2)]);
        assert_eq!(s.branch, Branch::Demand);
        assert_eq!(s.lambda, q(7, 2));
        assert_eq!(uniform(&econ(&ints(&[1, 2, 3]), int(6))).unwrap().values(), ints(&[1, 2, 3]));
        let s = uniform_solution(&econ(&ints(&[1, 2, 3]), int(9))).unwrap();
        assert_eq!(s.allocation.values(), ints(&[3, 3, 3]));
        assert_eq!(s.branch, Branch::Supply);
    }

    #[test]
    fn equal_division_examples() {
        assert_eq!(equal_division(&econ(&ints(&[0, 4, 7]), int(9))).unwrap().values(), ints(&[3, 3, 3]));
        assert_eq!(equal_division(&econ(&ints(&[0, 4]), int(2))).unwrap().values(), ints(&[1, 1]));
        assert_eq!(equal_division(&econ(&ints(&[2]), int(5))).unwrap().values(), ints(&[5]));
    }

    #[test]
    fn serial_dictator_examples() {
        let ids = [AgentId(1), AgentId(2), AgentId(3)];
        let e = econ(&ints(&[2, 1]), int(2));
        assert_eq!(serial_dictator(&e, &ids[..2]).unwrap().values(), ints(&[2, 0]));
        let e = econ(&ints(&[1, 2, 3]), int(9));
        assert_eq!(serial_dictator(&e, &ids).unwrap().values(), ints(&[1, 2, 6]));
        let e = econ(&ints(&[2]), int(5));
        assert_eq!(serial_dictator(&e, &ids[..1]).unwrap().values(), ints(&[5]));
    }

    #[test]
    fn serial_dictator_order_errors() {
        let e = econ(&ints(&[2, 1]), int(2));
        assert!(matches!(serial_dictator(&e, &[AgentId(1)]), Err(Error::OrderMismatch(_))));
        assert!(matches!(
            serial_dictator(&e, &[AgentId(1), AgentId(1), AgentId(2)]),
            Err(Error::OrderMismatch(_))
        ));
        // extra ids outside the economy are ignored
        let a = serial_dictator(&e, &[AgentId(9), AgentId(2), AgentId(1)]).unwrap();
        assert_eq!(a.values(), ints(&[1, 1]));
    }

    #[test]
    fn phi_bar_examples() {
        assert_eq!(phi_bar(&econ(&ints(&[3, 3, 0]), int(3))).unwrap().values(), ints(&[1, 2, 0]));
        assert_eq!(phi_bar(&econ(&ints(&[2, 2, 1]), int(3))).unwrap().values(), ints(&[1, 1, 1]));
        assert_eq!(phi_bar(&econ(&ints(&[2, 2]), int(2))).unwrap().values(), vec![q(2, 3), q(4, 3)]);
        // single agent never takes the special branch
        assert_eq!(phi_bar(&econ(&ints(&[3]), int(3))).unwrap().values(), ints(&[3]));
    }

    #[test]
    fn phi_bar_uses_two_smallest_ids() {
        let p = |x: i64| Preference::symmetric(int::<Rational>(x)).unwrap();
        let e = Economy::new([(AgentId(4), p(0)), (AgentId(7), p(6)), (AgentId(5), p(6))], int(6)).unwrap();
        // smallest ids are 4 and 5; agent 4 peaks at 0, so uniform applies
        assert!(!phi_bar_special_case(&e));
        let e = Economy::new([(AgentId(9), p(0)), (AgentId(7), p(6)), (AgentId(5), p(6))], int(6)).unwrap();
        let a = phi_bar(&e).unwrap();
        assert_eq!(a.get(AgentId(5)), Some(&int(2)));
        assert_eq!(a.get(AgentId(7)), Some(&int(4)));
        assert_eq!(a.get(AgentId(9)), Some(&int(0)));
    }

    #[test]
    fn phi_star_examples() {
        assert_eq!(phi_star(&econ(&ints(&[2, 4, 6]), int(9))).unwrap().values(), ints(&[2, 4, 3]));
        assert_eq!(phi_star(&econ(&ints(&[1, 2, 3]), int(9))).unwrap().values(), ints(&[3, 3, 3]));
        assert_eq!(phi_star(&econ(&ints(&[6, 6, 6]), int(9))).unwrap().values(), ints(&[6, 3, 0]));
    }

    #[test]
    fn dispatch() {
        let e = econ(&ints(&[2, 4, 6]), int(9));
        assert_eq!(apply("uniform", &e).unwrap().values(), vec![int(2), q(7, 2), q(7, 2)]);
        assert_eq!(apply("equal_division", &e).unwrap().values(), ints(&[3, 3, 3]));
        assert_eq!(apply::<Rational>("proportional", &e), Err(Error::UnknownRule("proportional".into())));
        for name in RuleDescriptor::NAMES {
            assert_eq!(RuleDescriptor::from_name(name).unwrap().as_str(), name);
        }
    }

    #[test]
    fn float_rules_agree_with_exact() {
        let e = Economy::<f64>::from_peaks(&[2.0, 4.0, 6.0], 9.0).unwrap();
        let a = uniform(&e).unwrap().values();
        assert!((a[1] - 3.5).abs() < 1e-12);
        assert_eq!(phi_star(&e).unwrap().values(), vec![2.0, 4.0, 3.0]);
    }

    fn arb_econ() -> impl Strategy<Value = Economy<Rational>> {
        (proptest::collection::vec((0i64..40, 1i64..5), 1..8), 1i64..80, 1i64..4).prop_map(
            |(ps, on, od)| {
                let peaks: Vec<Rational> = ps.into_iter().map(|(n, d)| q(n, d)).collect();
                econ(&peaks, q(on, od))
            },
        )
    }

    proptest! {
        #[test]
        fn every_rule_is_feasible(e in arb_econ()) {
            for rule in RuleDescriptor::all() {
                let a = rule.apply(&e).unwrap();
                prop_assert!(a.validate_for(&e).is_ok());
            }
        }

        #[test]
        fn coincidences(e in arb_econ()) {
            let u = uniform(&e).unwrap();
            if e.excess() <= int(0) {
                prop_assert_eq!(&phi_star(&e).unwrap(), &u);
            }
            if !phi_bar_special_case(&e) {
                prop_assert_eq!(&phi_bar(&e).unwrap(), &u);
            }
        }

        #[test]
        fn uniform_is_symmetric(e in arb_econ(), shift in 1u32..5) {
            // reverse the id labels
            let n = e.len() as u32;
            let relabel = |id: AgentId| AgentId((n + 1 - id.0) * shift);
            let permuted = Economy::new(e.agents().map(|(id, p)| (relabel(id), p.clone())), e.omega().clone()).unwrap();
            let a = uniform(&e).unwrap();
            let b = uniform(&permuted).unwrap();
            for (id, x) in a.iter() {
                prop_assert_eq!(b.get(relabel(id)).unwrap(), x);
            }
        }

        #[test]
        fn serial_dictator_exhausts_under_demand(e in arb_econ()) {
            prop_assume!(e.excess() > int(0));
            let order: Vec<_> = e.ids().collect();
            let a = serial_dictator(&e, &order).unwrap();
            let greedy: Rational = order[..order.len() - 1].iter().fold(int(0), |acc: Rational, id| {
                let left = e.omega().clone() - acc.clone();
                acc + scalar::min(e.peak(*id).unwrap(), &left)
            });
            prop_assert!(greedy <= *e.omega());
            prop_assert_eq!(a.total(), e.omega().clone());
            for (id, x) in a.iter() {
                prop_assert!(x <= e.peak(id).unwrap());
            }
        }
    }
}
