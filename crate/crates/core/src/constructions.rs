//! The three steps of the uniqueness argument as checkable computations.
//!
//! Step 1 tests that a rule gives equal division when every peak is at or
//! above the equal share. Step 2 augments an economy with fresh agents whose
//! preferences force a contradiction for a rule that under-serves agent `i`.
//! Step 3 lets agents leave one at a time and compares each stage with the
//! uniform allotment.

use crate::axioms::Status;
use crate::economy::{AgentId, Allocation, Economy};
use crate::error::{Error, Result};
use crate::prefs::{make_step2_preference, Preference};
use crate::rules::{self, Rule};
use crate::scalar::{self, Scalar};
use std::collections::BTreeSet;

#[derive(Debug, Clone, PartialEq)]
pub struct Step1Report<T> {
    pub status: Status,
    pub allocation: Allocation<T>,
    pub equal_share: T,
}

/// Requires every peak at or above Ω/n (hence excess ≥ 0).
pub fn step1_check<T: Scalar, R: Rule<T> + ?Sized>(rule: &R, econ: &Economy<T>) -> Result<Step1Report<T>> {
    let share = econ.equal_share();
    if let Some((id, _)) = econ.agents().find(|(_, p)| scalar::lt(p.peak(), &share)) {
        return Err(Error::Precondition(format!("agent {id} peaks below the equal share {share}")));
    }
    let allocation = rule.allocate(econ)?;
    let equal = allocation.iter().all(|(_, x)| x.approx_eq(&share));
    Ok(Step1Report {
        status: if equal { Status::Pass } else { Status::Fail },
        allocation,
        equal_share: share,
    })
}

/// Smallest positive `k` with `k (p - γ) > Ω - n p`.
pub fn step2_choose_k<T: Scalar>(p: &T, gamma: &T, n: usize, omega: &T) -> Result<u64> {
    let nt = T::of_usize(n);
    if n == 0 || !scalar::lt(&T::zero(), gamma) || !scalar::lt(gamma, p) {
        return Err(Error::Precondition(format!("need 0 < gamma ({gamma}) < peak ({p}) and n > 0")));
    }
    if scalar::lt(&(omega.clone() / nt.clone()), p) {
        return Err(Error::Precondition(format!("peak {p} exceeds the equal share of {omega}")));
    }
    let gap = p.clone() - gamma.clone();
    let slack = omega.clone() - nt * p.clone();
    let holds = |k: u64| scalar::lt(&slack, &(T::of_usize(k as usize) * gap.clone()));
    let mut k = (slack.clone() / gap.clone())
        .floor()
        .to_u64()
        .ok_or_else(|| Error::Precondition("k is out of range".into()))?
        + 1;
    while !holds(k) {
        k += 1;
    }
    while k > 1 && holds(k - 1) {
        k -= 1;
    }
    Ok(k)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Step2Certificate<T> {
    pub k: u64,
    pub gamma: T,
    pub omega_star: T,
    /// Ω* / (n + k), the per-capita share of the augmented economy.
    pub target: T,
    /// `k (p_i - γ) > Ω - n p_i`
    pub eq1: bool,
    /// `n γ < Ω`
    pub eq2: bool,
    /// `γ < Ω* / (n + k) < p_i`
    pub eq3: bool,
    pub excess_positive: bool,
    /// Grid points of `(0, γ)` checked against the target.
    pub eq4_points: usize,
    /// Every fresh agent strictly prefers the target to each grid point.
    pub eq4: bool,
}

impl<T> Step2Certificate<T> {
    pub fn holds(&self) -> bool {
        self.eq1 && self.eq2 && self.eq3 && self.excess_positive && self.eq4
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Step2Economy<T> {
    pub economy: Economy<T>,
    pub fresh: Vec<AgentId>,
    pub certificate: Step2Certificate<T>,
}

const EQ4_POINTS: usize = 200;

/// Augments `econ` for agent `agent`, given the amount `allotment` a rule
/// assigns it. `gamma` must lie strictly between that allotment and the
/// agent's peak; it defaults to the midpoint.
pub fn build_step2_economy<T: Scalar>(
    econ: &Economy<T>,
    agent: AgentId,
    allotment: &T,
    gamma: Option<T>,
) -> Result<Step2Economy<T>> {
    let p = econ
        .peak(agent)
        .ok_or_else(|| Error::Precondition(format!("agent {agent} is not in the economy")))?
        .clone();
    if !scalar::lt(&T::zero(), &econ.excess()) {
        return Err(Error::Precondition("the economy must be in excess demand".into()));
    }
    if scalar::lt(&econ.equal_share(), &p) {
        return Err(Error::Precondition(format!("agent {agent} peaks above the equal share")));
    }
    if scalar::is_negative(allotment) {
        return Err(Error::Precondition(format!("allotment {allotment} is negative")));
    }
    let gamma = gamma.unwrap_or_else(|| (allotment.clone() + p.clone()) / T::two());
    if !(scalar::lt(allotment, &gamma) && scalar::lt(&gamma, &p)) {
        return Err(Error::Precondition(format!(
            "gamma {gamma} must lie strictly between the allotment {allotment} and the peak {p}"
        )));
    }
    let n = econ.len();
    let omega = econ.omega().clone();
    let k = step2_choose_k(&p, &gamma, n, &omega)?;
    let kt = T::of_usize(k as usize);
    let omega_star = omega.clone() + kt.clone() * gamma.clone();
    let target = omega_star.clone() / T::of_usize(n + k as usize);

    let eq1 = scalar::lt(&(omega.clone() - T::of_usize(n) * p.clone()), &(kt * (p.clone() - gamma.clone())));
    let eq2 = scalar::lt(&(T::of_usize(n) * gamma.clone()), &omega);
    let eq3 = scalar::lt(&gamma, &target) && scalar::lt(&target, &p);
    if !eq3 {
        return Err(Error::Internal(format!("augmented share {target} is not between {gamma} and {p}")));
    }

    let pref = make_step2_preference(&gamma, &target)?;
    let start = econ.ids().map(|id| id.0).max().expect("nonempty economy") + 1;
    let fresh: Vec<AgentId> = (0..k as u32).map(|j| AgentId(start + j)).collect();
    let agents = econ
        .agents()
        .map(|(id, p)| (id, p.clone()))
        .chain(fresh.iter().map(|id| (*id, pref.clone())));
    let economy = Economy::new(agents, omega_star.clone())?;
    let excess_positive = scalar::lt(&T::zero(), &economy.excess());
    let eq4 = eq4_holds(&pref, &gamma, &target)?;

    Ok(Step2Economy {
        economy,
        fresh,
        certificate: Step2Certificate {
            k,
            gamma,
            omega_star,
            target,
            eq1,
            eq2,
            eq3,
            excess_positive,
            eq4_points: EQ4_POINTS,
            eq4,
        },
    })
}

fn eq4_holds<T: Scalar>(pref: &Preference<T>, gamma: &T, target: &T) -> Result<bool> {
    let denom = T::of_usize(EQ4_POINTS + 1);
    for j in 1..=EQ4_POINTS {
        let x = gamma.clone() * T::of_usize(j) / denom.clone();
        if !pref.prefers(target, &x)? {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Step3Stage<T> {
    /// Economy at the start of the stage.
    pub economy: Economy<T>,
    pub removed: AgentId,
    pub allotment: T,
    /// `min(p, Ω_s / n_s)` under excess demand, `max(p, Ω_s / n_s)` otherwise.
    pub expected: T,
    pub stage_lambda: T,
    /// The rule re-awards the stayers their allotments in this economy.
    pub eq1: bool,
    /// The departing agent's allotment equals `expected` and the stage level.
    pub eq2: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Step3Report<T> {
    pub status: Status,
    pub trace: Vec<Step3Stage<T>>,
    /// Set when the agents still present hold nothing; the chain stops there.
    pub vacuous_at: Option<usize>,
    pub matches_uniform: bool,
}

/// Removes agents one by one (smallest peak first under excess demand,
/// largest first under excess supply) with their allotments.
pub fn step3_departure_chain<T: Scalar, R: Rule<T> + ?Sized>(rule: &R, econ: &Economy<T>) -> Result<Step3Report<T>> {
    let alloc = rule.allocate(econ)?;
    let demand = !scalar::is_negative(&econ.excess());
    let mut order = rules::peak_order(econ);
    if !demand {
        order.sort_by(|a, b| {
            econ.peak(*b).expect("member").approx_cmp(econ.peak(*a).expect("member")).then(a.cmp(b))
        });
    }
    let mut trace = Vec::new();
    let mut vacuous_at = None;
    let mut current = econ.clone();
    for (stage, id) in order.iter().enumerate() {
        let p = current.peak(*id).expect("member").clone();
        let mean = current.equal_share();
        let solution = rules::uniform_solution(&current)?;
        let expected = if demand { scalar::min(&p, &mean) } else { scalar::max(&p, &mean) };
        let level = if demand { scalar::min(&p, &solution.lambda) } else { scalar::max(&p, &solution.lambda) };
        let x = alloc.get(*id).expect("member").clone();
        let eq2 = x.approx_eq(&expected) && x.approx_eq(&level);

        let held = Allocation::from_amounts(current.ids().map(|j| (j, alloc.get(j).expect("member").clone())).collect());
        let eq1 = rule.allocate(&current)?.iter().all(|(j, y)| y.approx_eq(held.get(j).expect("member")));
        trace.push(Step3Stage {
            economy: current.clone(),
            removed: *id,
            allotment: x,
            expected,
            stage_lambda: solution.lambda,
            eq1,
            eq2,
        });
        if stage + 1 == order.len() {
            break;
        }
        let keep: BTreeSet<AgentId> = current.ids().filter(|j| j != id).collect();
        match current.reduce(&keep, &held) {
            Ok(next) => current = next,
            Err(Error::DegenerateReduction) => {
                vacuous_at = Some(stage + 1);
                break;
            }
            Err(e) => return Err(e),
        }
    }
    let leftover_zero = match vacuous_at {
        Some(s) => order[s..].iter().all(|id| alloc.get(*id).expect("member").approx_eq(&T::zero())),
        None => true,
    };
    let matches_uniform = alloc.approx_eq(&rules::uniform(econ)?);
    let pass = matches_uniform && leftover_zero && trace.iter().all(|s| s.eq1 && s.eq2);
    Ok(Step3Report {
        status: if pass { Status::Pass } else { Status::Fail },
        trace,
        vacuous_at,
        matches_uniform,
    })
}
