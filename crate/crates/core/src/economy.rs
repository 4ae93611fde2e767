//! Economies, allocations, and the departure reduction behind consistency.

use crate::error::{Error, Result};
use crate::prefs::Preference;
use crate::scalar::{self, Scalar};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// Global agent identifier (a positive integer).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AgentId(pub u32);

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A preference profile over a finite set of agents and a positive endowment.
///
/// Agents are kept in ascending id order.
#[derive(Debug, Clone, PartialEq)]
pub struct Economy<T> {
    agents: BTreeMap<AgentId, Preference<T>>,
    omega: T,
}

impl<T: Scalar> Economy<T> {
    pub fn new(agents: impl IntoIterator<Item = (AgentId, Preference<T>)>, omega: T) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (id, pref) in agents {
            if id.0 == 0 {
                return Err(Error::InvalidEconomy("agent ids must be positive".into()));
            }
            if map.insert(id, pref).is_some() {
                return Err(Error::InvalidEconomy(format!("duplicate agent id {id}")));
            }
        }
        if map.is_empty() {
            return Err(Error::InvalidEconomy("an economy needs at least one agent".into()));
        }
        if !scalar::lt(&T::zero(), &omega) {
            return Err(Error::InvalidEconomy(format!("endowment {omega} must be positive")));
        }
        Ok(Economy { agents: map, omega })
    }

    /// Agents `1..=n` with symmetric preferences at the given peaks.
    pub fn from_peaks(peaks: &[T], omega: T) -> Result<Self> {
        let agents = peaks
            .iter()
            .enumerate()
            .map(|(k, p)| Ok((AgentId(k as u32 + 1), Preference::symmetric(p.clone())?)))
            .collect::<Result<Vec<_>>>()?;
        Economy::new(agents, omega)
    }

    pub fn omega(&self) -> &T {
        &self.omega
    }

    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = AgentId> + '_ {
        self.agents.keys().copied()
    }

    pub fn agents(&self) -> impl Iterator<Item = (AgentId, &Preference<T>)> + '_ {
        self.agents.iter().map(|(id, p)| (*id, p))
    }

    pub fn pref(&self, id: AgentId) -> Option<&Preference<T>> {
        self.agents.get(&id)
    }

    pub fn contains(&self, id: AgentId) -> bool {
        self.agents.contains_key(&id)
    }

    pub fn peak(&self, id: AgentId) -> Option<&T> {
        self.agents.get(&id).map(|p| p.peak())
    }

    pub fn peaks(&self) -> Vec<T> {
        self.agents.values().map(|p| p.peak().clone()).collect()
    }

    /// Ω / n.
    pub fn equal_share(&self) -> T {
        self.omega.clone() / T::of_usize(self.len())
    }

    /// Sum of peaks minus the endowment.
    pub fn excess(&self) -> T {
        self.agents.values().map(|p| p.peak().clone()).sum::<T>() - self.omega.clone()
    }

    /// Same agents with a different endowment.
    pub fn with_omega(&self, omega: T) -> Result<Self> {
        Economy::new(self.agents.iter().map(|(id, p)| (*id, p.clone())), omega)
    }

    /// Replaces (or inserts) one agent's preference.
    pub fn with_pref(&self, id: AgentId, pref: Preference<T>) -> Self {
        let mut out = self.clone();
        out.agents.insert(id, pref);
        out
    }

    /// Drops one agent, keeping the endowment.
    pub fn without(&self, id: AgentId) -> Result<Self> {
        let mut out = self.clone();
        out.agents.remove(&id);
        if out.agents.is_empty() {
            return Err(Error::InvalidEconomy("an economy needs at least one agent".into()));
        }
        Ok(out)
    }

    /// The economy left when everyone outside `keep` departs with their
    /// allotment: same preferences, endowment equal to what `keep` holds.
    pub fn reduce(&self, keep: &BTreeSet<AgentId>, alloc: &Allocation<T>) -> Result<Self> {
        if keep.is_empty() {
            return Err(Error::InvalidEconomy("reduction needs a nonempty agent subset".into()));
        }
        alloc.validate_for(self)?;
        let mut agents = BTreeMap::new();
        let mut omega = T::zero();
        for id in keep {
            let pref = self
                .agents
                .get(id)
                .ok_or_else(|| Error::InvalidEconomy(format!("agent {id} not in economy")))?;
            agents.insert(*id, pref.clone());
            omega = omega + alloc.get(*id).expect("validated allocation").clone();
        }
        if !scalar::lt(&T::zero(), &omega) {
            return Err(Error::DegenerateReduction);
        }
        Ok(Economy { agents, omega })
    }
}

/// One amount per agent of the owning economy, summing to its endowment.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation<T> {
    amounts: BTreeMap<AgentId, T>,
}

impl<T: Scalar> Allocation<T> {
    /// Builds and validates an allocation for `econ`.
    pub fn new(econ: &Economy<T>, amounts: impl IntoIterator<Item = (AgentId, T)>) -> Result<Self> {
        let alloc = Allocation { amounts: amounts.into_iter().collect() };
        alloc.validate_for(econ)?;
        Ok(alloc)
    }

    /// Unvalidated constructor for parsing; call [`Allocation::validate_for`].
    pub fn from_amounts(amounts: BTreeMap<AgentId, T>) -> Self {
        Allocation { amounts }
    }

    pub fn validate_for(&self, econ: &Economy<T>) -> Result<()> {
        if self.amounts.len() != econ.len() || !econ.ids().all(|id| self.amounts.contains_key(&id)) {
            return Err(Error::InvalidAllocation("agent sets differ".into()));
        }
        if let Some((id, x)) = self.amounts.iter().find(|(_, x)| scalar::is_negative(*x)) {
            return Err(Error::InvalidAllocation(format!("agent {id} receives negative {x}")));
        }
        let total = self.total();
        if !total.approx_eq(econ.omega()) {
            return Err(Error::InvalidAllocation(format!(
                "amounts sum to {total}, endowment is {}",
                econ.omega()
            )));
        }
        Ok(())
    }

    pub fn get(&self, id: AgentId) -> Option<&T> {
        self.amounts.get(&id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (AgentId, &T)> + '_ {
        self.amounts.iter().map(|(id, x)| (*id, x))
    }

    pub fn amounts(&self) -> &BTreeMap<AgentId, T> {
        &self.amounts
    }

    /// Amounts in ascending id order.
    pub fn values(&self) -> Vec<T> {
        self.amounts.values().cloned().collect()
    }

    pub fn total(&self) -> T {
        self.amounts.values().cloned().sum()
    }

    /// Agentwise equality under the exactness policy.
    pub fn approx_eq(&self, other: &Self) -> bool {
        self.amounts.len() == other.amounts.len()
            && self
                .amounts
                .iter()
                .all(|(id, x)| other.amounts.get(id).is_some_and(|y| x.approx_eq(y)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, ratio, Rational};
    use num_traits::ToPrimitive;
    use proptest::prelude::*;

    fn econ(peaks: &[i64], omega: i64) -> Economy<Rational> {
        let peaks: Vec<Rational> = peaks.iter().map(|&p| int(p)).collect();
        Economy::from_peaks(&peaks, int(omega)).unwrap()
    }

    fn alloc(e: &Economy<Rational>, xs: &[Rational]) -> Allocation<Rational> {
        Allocation::new(e, e.ids().zip(xs.iter().cloned())).unwrap()
    }

    #[test]
    fn excess_examples() {
        assert_eq!(econ(&[2, 4, 6], 9).excess(), int(3));
        assert_eq!(econ(&[1, 2, 3], 6).excess(), int(0));
        assert_eq!(econ(&[1, 2, 3], 9).excess(), int(-3));
    }

    #[test]
    fn invariants_enforced() {
        assert!(Economy::<Rational>::from_peaks(&[], int(1)).is_err());
        assert!(Economy::<Rational>::from_peaks(&[int(1)], int(0)).is_err());
        let p = Preference::symmetric(int::<Rational>(1)).unwrap();
        assert!(Economy::new([(AgentId(1), p.clone()), (AgentId(1), p.clone())], int(1)).is_err());
        assert!(Economy::new([(AgentId(0), p)], int(1)).is_err());
    }

    #[test]
    fn reduce_examples() {
        let e = econ(&[2, 2, 1], 3);
        let a = alloc(&e, &[int(1), int(1), int(1)]);
        let keep: BTreeSet<_> = [AgentId(1), AgentId(2)].into();
        let r = e.reduce(&keep, &a).unwrap();
        assert_eq!(r.peaks(), vec![int(2), int(2)]);
        assert_eq!(r.omega(), &int(2));

        let all: BTreeSet<_> = e.ids().collect();
        assert_eq!(e.reduce(&all, &a).unwrap(), e);

        let e = econ(&[2, 4, 6], 9);
        let a = alloc(&e, &[int(2), ratio(7, 2), ratio(7, 2)]);
        let r = e.reduce(&[AgentId(3)].into(), &a).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r.omega(), &ratio(7, 2));
        assert_eq!(r.pref(AgentId(3)), e.pref(AgentId(3)));
    }

    #[test]
    fn reduce_errors() {
        let e = econ(&[0, 4], 2);
        let a = alloc(&e, &[int(0), int(2)]);
        assert!(matches!(e.reduce(&BTreeSet::new(), &a), Err(Error::InvalidEconomy(_))));
        assert_eq!(e.reduce(&[AgentId(1)].into(), &a), Err(Error::DegenerateReduction));
        assert!(e.reduce(&[AgentId(7)].into(), &a).is_err());
    }

    #[test]
    fn allocation_validation() {
        let e = econ(&[1, 1], 2);
        assert!(Allocation::new(&e, [(AgentId(1), int(1)), (AgentId(2), int(1))]).is_ok());
        assert!(Allocation::new(&e, [(AgentId(1), int(3)), (AgentId(2), int(-1))]).is_err());
        assert!(Allocation::new(&e, [(AgentId(1), int(1))]).is_err());
        assert!(Allocation::new(&e, [(AgentId(1), int(1)), (AgentId(3), int(1))]).is_err());
    }

    proptest! {
        #[test]
        fn perturbed_allocations_rejected(
            xs in proptest::collection::vec(0i64..100, 1..8),
            eps in 1i64..1000,
            which in 0usize..8,
            sign in prop::bool::ANY,
        ) {
            let amounts: Vec<Rational> = xs.iter().map(|&x| ratio(x, 7)).collect();
            let omega: Rational = amounts.iter().cloned().sum::<Rational>() + int::<Rational>(1);
            let mut amounts = amounts;
            amounts[0] += int::<Rational>(1);
            let e = Economy::from_peaks(&vec![int(1); amounts.len()], omega.clone()).unwrap();
            prop_assert!(Allocation::new(&e, e.ids().zip(amounts.iter().cloned())).is_ok());

            // perturbation of at least 1e-9
            let delta: Rational = ratio::<Rational>(eps, 1) * ratio::<Rational>(1, 1_000_000_000);
            let k = which % amounts.len();
            if sign { amounts[k] += delta; } else { amounts[k] += delta.clone() * int::<Rational>(2); }
            prop_assert!(Allocation::new(&e, e.ids().zip(amounts.iter().cloned())).is_err());

            let fe = Economy::<f64>::from_peaks(&vec![1.0; amounts.len()], omega.to_f64().unwrap()).unwrap();
            let mut famounts: Vec<f64> = xs.iter().map(|&x| x as f64 / 7.0).collect();
            famounts[0] += 1.0;
            famounts[k] += eps as f64 * 1e-9;
            prop_assert!(Allocation::new(&fe, fe.ids().zip(famounts.iter().cloned())).is_err());
        }

        #[test]
        fn full_reduction_is_identity(xs in proptest::collection::vec(1i64..50, 1..7)) {
            let amounts: Vec<Rational> = xs.iter().map(|&x| ratio(x, 3)).collect();
            let omega: Rational = amounts.iter().cloned().sum();
            let peaks: Vec<Rational> = xs.iter().map(|&x| ratio(x * 2, 5)).collect();
            let e = Economy::from_peaks(&peaks, omega).unwrap();
            let a = Allocation::new(&e, e.ids().zip(amounts)).unwrap();
            let all: BTreeSet<_> = e.ids().collect();
            prop_assert_eq!(e.reduce(&all, &a).unwrap(), e);
        }
    }
}
