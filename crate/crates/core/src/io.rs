//! JSON encodings for preferences, economies, grids, configs, and reports.
//!
//! Numbers are read exactly: JSON number literals (including scientific
//! notation), decimal or fraction strings, and `{"num": .., "den": ..}`
//! objects are all accepted. Exact scalars are written as `{"num", "den"}`.

use crate::axioms::{Counts, IncentiveGrid, ManipulationWitness, ObviousCertificate, Verdict, Witness};
use crate::constructions::{Step1Report, Step2Economy, Step3Report};
use crate::economy::{AgentId, Allocation, Economy};
use crate::error::{Error, Result};
use crate::option_sets::{OptionSet, OptionSetKind, ProfileGrid, Provenance, DEFAULT_BUDGET};
use crate::prefs::{Preference, Shape};
use crate::rules::UniformSolution;
use crate::scalar::Scalar;
use crate::suite::{AuditConfig, EconomySuite, IndependenceMatrix, RandomSuite};
use serde_json::{json, Map, Value};
use std::collections::BTreeMap;
use std::path::Path;

fn parse_err(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

pub fn read_json_file(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| parse_err(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| parse_err(format!("{}: {e}", path.display())))
}

pub fn parse_json_str(text: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| parse_err(e.to_string()))
}

pub fn parse_scalar<T: Scalar>(v: &Value) -> Result<T> {
    let parsed = match v {
        Value::Number(n) => T::parse_decimal(&n.to_string()),
        Value::String(s) => T::parse_decimal(s),
        Value::Object(m) => {
            check_keys(m, &["num", "den"], "rational")?;
            let part = |k: &str| -> Result<T> {
                match m.get(k) {
                    Some(Value::Number(n)) if !n.to_string().contains(['.', 'e', 'E']) => {
                        T::parse_decimal(&n.to_string()).ok_or_else(|| parse_err(format!("bad `{k}`")))
                    }
                    Some(Value::String(s)) => T::parse_decimal(s).ok_or_else(|| parse_err(format!("bad `{k}`"))),
                    _ => Err(parse_err(format!("rational needs an integer `{k}`"))),
                }
            };
            let (num, den) = (part("num")?, part("den")?);
            if den.is_zero() {
                return Err(parse_err("rational with zero denominator"));
            }
            Some(num / den)
        }
        _ => None,
    };
    parsed.ok_or_else(|| parse_err(format!("expected a number, got {v}")))
}

fn check_keys(m: &Map<String, Value>, allowed: &[&str], what: &str) -> Result<()> {
    match m.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(parse_err(format!("unknown key `{k}` in {what}"))),
        None => Ok(()),
    }
}

fn object<'a>(v: &'a Value, what: &str) -> Result<&'a Map<String, Value>> {
    v.as_object().ok_or_else(|| parse_err(format!("{what} must be an object")))
}

fn array<'a>(v: &'a Value, what: &str) -> Result<&'a Vec<Value>> {
    v.as_array().ok_or_else(|| parse_err(format!("{what} must be an array")))
}

fn field<'a>(m: &'a Map<String, Value>, key: &str, what: &str) -> Result<&'a Value> {
    m.get(key).ok_or_else(|| parse_err(format!("{what} is missing `{key}`")))
}

fn scalar_or<T: Scalar>(m: &Map<String, Value>, key: &str, default: T) -> Result<T> {
    m.get(key).map(parse_scalar).unwrap_or(Ok(default))
}

fn uint(v: &Value, what: &str) -> Result<u64> {
    v.as_u64().ok_or_else(|| parse_err(format!("{what} must be a nonnegative integer")))
}

fn agent_id(v: &Value) -> Result<AgentId> {
    let id = uint(v, "agent id")?;
    u32::try_from(id).map(AgentId).map_err(|_| parse_err(format!("agent id {id} is too large")))
}

fn scalars<T: Scalar>(v: &Value, what: &str) -> Result<Vec<T>> {
    array(v, what)?.iter().map(parse_scalar).collect()
}

fn scalars_json<T: Scalar>(xs: &[T]) -> Value {
    Value::Array(xs.iter().map(T::to_json).collect())
}

/// Accepts a full object or a bare number (symmetric preference at that peak).
pub fn pref_from_json<T: Scalar>(v: &Value) -> Result<Preference<T>> {
    if !v.is_object() || v.get("num").is_some() {
        return Preference::symmetric(parse_scalar(v)?);
    }
    let m = object(v, "preference")?;
    check_keys(m, &["peak", "slope_left", "slope_right", "jump_left", "jump_right"], "preference")?;
    let shape = shape_fields(m)?;
    shape.with_peak(parse_scalar(field(m, "peak", "preference")?)?)
}

fn shape_fields<T: Scalar>(m: &Map<String, Value>) -> Result<Shape<T>> {
    Ok(Shape {
        slope_left: scalar_or(m, "slope_left", T::one())?,
        slope_right: scalar_or(m, "slope_right", T::one())?,
        jump_left: scalar_or(m, "jump_left", T::zero())?,
        jump_right: scalar_or(m, "jump_right", T::zero())?,
    })
}

pub fn pref_to_json<T: Scalar>(p: &Preference<T>) -> Value {
    json!({
        "peak": p.peak().to_json(),
        "slope_left": p.slope_left().to_json(),
        "slope_right": p.slope_right().to_json(),
        "jump_left": p.jump_left().to_json(),
        "jump_right": p.jump_right().to_json(),
    })
}

pub fn shape_from_json<T: Scalar>(v: &Value) -> Result<Shape<T>> {
    let m = object(v, "shape")?;
    check_keys(m, &["slope_left", "slope_right", "jump_left", "jump_right"], "shape")?;
    let shape = shape_fields(m)?;
    shape.with_peak(T::zero())?;
    Ok(shape)
}

pub fn shape_to_json<T: Scalar>(s: &Shape<T>) -> Value {
    json!({
        "slope_left": s.slope_left.to_json(),
        "slope_right": s.slope_right.to_json(),
        "jump_left": s.jump_left.to_json(),
        "jump_right": s.jump_right.to_json(),
    })
}

/// `{"omega": num, "agents": [{"id": int, "pref": {...}}, ...]}`. A
/// `"peaks": [...]` list may stand in for `agents` (symmetric, ids `1..`).
pub fn economy_from_json<T: Scalar>(v: &Value) -> Result<Economy<T>> {
    let m = object(v, "economy")?;
    check_keys(m, &["omega", "agents", "peaks"], "economy")?;
    let omega = parse_scalar(field(m, "omega", "economy")?)?;
    match (m.get("agents"), m.get("peaks")) {
        (Some(agents), None) => {
            let agents = array(agents, "agents")?
                .iter()
                .map(|a| {
                    let am = object(a, "agent")?;
                    check_keys(am, &["id", "pref"], "agent")?;
                    Ok((agent_id(field(am, "id", "agent")?)?, pref_from_json(field(am, "pref", "agent")?)?))
                })
                .collect::<Result<Vec<_>>>()?;
            Economy::new(agents, omega)
        }
        (None, Some(peaks)) => Economy::from_peaks(&scalars::<T>(peaks, "peaks")?, omega),
        _ => Err(parse_err("economy needs exactly one of `agents` or `peaks`")),
    }
}

pub fn economy_to_json<T: Scalar>(e: &Economy<T>) -> Value {
    let agents: Vec<Value> = e.agents().map(|(id, p)| json!({"id": id.0, "pref": pref_to_json(p)})).collect();
    json!({"omega": e.omega().to_json(), "agents": agents})
}

pub fn allocation_to_json<T: Scalar>(a: &Allocation<T>) -> Value {
    let amounts: Map<String, Value> = a.iter().map(|(id, x)| (id.0.to_string(), x.to_json())).collect();
    json!({"amounts": amounts})
}

pub fn allocation_from_json<T: Scalar>(v: &Value) -> Result<Allocation<T>> {
    let m = object(v, "allocation")?;
    check_keys(m, &["amounts"], "allocation")?;
    let amounts = object(field(m, "amounts", "allocation")?, "amounts")?;
    let mut out = BTreeMap::new();
    for (k, x) in amounts {
        let id: u32 = k.parse().map_err(|_| parse_err(format!("bad agent id `{k}`")))?;
        out.insert(AgentId(id), parse_scalar(x)?);
    }
    Ok(Allocation::from_amounts(out))
}

/// `{"peaks": [...], "shapes": [...], "n_opponents": k, "budget": int}`.
pub fn grid_from_json<T: Scalar>(v: &Value) -> Result<ProfileGrid<T>> {
    let m = object(v, "grid")?;
    check_keys(m, &["peaks", "shapes", "n_opponents", "budget"], "grid")?;
    let peaks = scalars(field(m, "peaks", "grid")?, "peaks")?;
    let shapes = match m.get("shapes") {
        Some(s) => array(s, "shapes")?.iter().map(shape_from_json).collect::<Result<_>>()?,
        None => vec![Shape::default()],
    };
    let n_opponents = uint(field(m, "n_opponents", "grid")?, "n_opponents")? as usize;
    let budget = m.get("budget").map(|b| uint(b, "budget")).unwrap_or(Ok(DEFAULT_BUDGET))?;
    ProfileGrid::new(peaks, shapes, n_opponents)
        .map(|g| g.with_budget(budget))
        .map_err(|e| parse_err(e.to_string()))
}

pub fn grid_to_json<T: Scalar>(g: &ProfileGrid<T>) -> Value {
    json!({
        "peaks": scalars_json(&g.peaks),
        "shapes": g.shapes.iter().map(shape_to_json).collect::<Vec<_>>(),
        "n_opponents": g.n_opponents,
        "budget": g.budget,
    })
}

pub fn incentive_grid_from_json<T: Scalar>(v: &Value) -> Result<IncentiveGrid<T>> {
    let m = object(v, "incentives")?;
    check_keys(
        m,
        &["ns", "omegas", "peak_points", "include_equal_share", "extra_peaks", "shapes", "opponent_shapes", "budget"],
        "incentives",
    )?;
    let mut g = IncentiveGrid::default();
    if let Some(ns) = m.get("ns") {
        g.ns = array(ns, "ns")?.iter().map(|n| uint(n, "n").map(|n| n as usize)).collect::<Result<_>>()?;
    }
    if let Some(o) = m.get("omegas") {
        g.omegas = scalars(o, "omegas")?;
    }
    if let Some(p) = m.get("peak_points") {
        g.peak_points = uint(p, "peak_points")? as usize;
    }
    if let Some(b) = m.get("include_equal_share") {
        g.include_equal_share = b.as_bool().ok_or_else(|| parse_err("include_equal_share must be a boolean"))?;
    }
    if let Some(x) = m.get("extra_peaks") {
        g.extra_peaks = scalars(x, "extra_peaks")?;
    }
    if let Some(s) = m.get("shapes") {
        g.shapes = array(s, "shapes")?.iter().map(shape_from_json).collect::<Result<_>>()?;
    }
    if let Some(s) = m.get("opponent_shapes") {
        g.opponent_shapes = array(s, "opponent_shapes")?.iter().map(shape_from_json).collect::<Result<_>>()?;
    }
    if let Some(b) = m.get("budget") {
        g.budget = uint(b, "budget")?;
    }
    g.validate().map_err(|e| parse_err(e.to_string()))?;
    Ok(g)
}

pub fn incentive_grid_to_json<T: Scalar>(g: &IncentiveGrid<T>) -> Value {
    json!({
        "ns": g.ns,
        "omegas": scalars_json(&g.omegas),
        "peak_points": g.peak_points,
        "include_equal_share": g.include_equal_share,
        "extra_peaks": scalars_json(&g.extra_peaks),
        "shapes": g.shapes.iter().map(shape_to_json).collect::<Vec<_>>(),
        "opponent_shapes": g.opponent_shapes.iter().map(shape_to_json).collect::<Vec<_>>(),
        "budget": g.budget,
    })
}

fn random_suite_from_json(v: &Value) -> Result<Option<RandomSuite>> {
    if v.is_null() {
        return Ok(None);
    }
    let m = object(v, "random")?;
    check_keys(m, &["count", "max_agents", "equal_share_count", "seed"], "random")?;
    let mut r = RandomSuite::default();
    if let Some(x) = m.get("count") {
        r.count = uint(x, "count")? as usize;
    }
    if let Some(x) = m.get("max_agents") {
        r.max_agents = uint(x, "max_agents")? as usize;
    }
    if let Some(x) = m.get("equal_share_count") {
        r.equal_share_count = uint(x, "equal_share_count")? as usize;
    }
    if let Some(x) = m.get("seed") {
        r.seed = uint(x, "seed")?;
    }
    if r.max_agents == 0 {
        return Err(parse_err("max_agents must be positive"));
    }
    Ok(Some(r))
}

/// Audit config; every section is optional and falls back to the defaults.
pub fn config_from_json<T: Scalar>(v: &Value) -> Result<AuditConfig<T>> {
    let m = object(v, "config")?;
    check_keys(m, &["economies", "incentives", "serial_order"], "config")?;
    let mut config = AuditConfig::default();
    if let Some(e) = m.get("economies") {
        let em = object(e, "economies")?;
        check_keys(em, &["canonical", "fixed", "random"], "economies")?;
        let mut suite = EconomySuite::default();
        if let Some(c) = em.get("canonical") {
            suite.canonical = c.as_bool().ok_or_else(|| parse_err("canonical must be a boolean"))?;
        }
        if let Some(f) = em.get("fixed") {
            suite.fixed = array(f, "fixed")?.iter().map(economy_from_json).collect::<Result<_>>()?;
        }
        if let Some(r) = em.get("random") {
            suite.random = random_suite_from_json(r)?;
        }
        if !suite.canonical && suite.fixed.is_empty() && suite.random.as_ref().is_none_or(|r| r.count + r.equal_share_count == 0) {
            return Err(parse_err("economy suite is empty"));
        }
        config.economies = suite;
    }
    if let Some(g) = m.get("incentives") {
        config.incentives = incentive_grid_from_json(g)?;
    }
    if let Some(o) = m.get("serial_order") {
        config.serial_order = Some(array(o, "serial_order")?.iter().map(agent_id).collect::<Result<_>>()?);
    }
    Ok(config)
}

pub fn config_to_json<T: Scalar>(c: &AuditConfig<T>) -> Value {
    let random = match &c.economies.random {
        Some(r) => json!({
            "count": r.count,
            "max_agents": r.max_agents,
            "equal_share_count": r.equal_share_count,
            "seed": r.seed,
        }),
        None => Value::Null,
    };
    let mut out = json!({
        "economies": {
            "canonical": c.economies.canonical,
            "fixed": c.economies.fixed.iter().map(economy_to_json).collect::<Vec<_>>(),
            "random": random,
        },
        "incentives": incentive_grid_to_json(&c.incentives),
    });
    if let Some(order) = &c.serial_order {
        out["serial_order"] = json!(order.iter().map(|id| id.0).collect::<Vec<_>>());
    }
    out
}

pub fn option_set_to_json<T: Scalar>(o: &OptionSet<T>) -> Value {
    let mut out = match &o.kind {
        OptionSetKind::Interval { lo, hi } => json!({"kind": "interval", "lo": lo.to_json(), "hi": hi.to_json()}),
        OptionSetKind::Samples(v) => json!({"kind": "samples", "samples": scalars_json(v)}),
    };
    out["provenance"] = match &o.provenance {
        Provenance::Analytic => json!("analytic"),
        Provenance::Enumerated(g) => json!({"enumerated": grid_to_json(g)}),
    };
    out
}

fn manipulation_to_json<T: Scalar>(m: &ManipulationWitness<T>) -> Value {
    json!({
        "agent": m.agent.0,
        "truth": pref_to_json(&m.truth),
        "misreport": pref_to_json(&m.misreport),
        "omega": m.omega.to_json(),
        "opponents": m.opponents.iter().map(|(id, p)| json!({"id": id.0, "pref": pref_to_json(p)})).collect::<Vec<_>>(),
        "truthful_outcome": m.truthful_outcome.to_json(),
        "manipulated_outcome": m.manipulated_outcome.to_json(),
    })
}

fn certificate_to_json<T: Scalar>(c: &ObviousCertificate<T>) -> Value {
    json!({"obvious": c.obvious, "worst_truthful": c.worst_truthful.to_json(), "binding": c.binding.to_json()})
}

pub fn witness_to_json<T: Scalar>(w: &Witness<T>) -> Value {
    match w {
        Witness::Efficiency { economy, allocation, agent } => json!({
            "kind": "efficiency",
            "economy": economy_to_json(economy),
            "allocation": allocation_to_json(allocation),
            "agent": agent.0,
        }),
        Witness::EqualDivision { economy, allocation, agent } => json!({
            "kind": "edg",
            "economy": economy_to_json(economy),
            "allocation": allocation_to_json(allocation),
            "agent": agent.0,
        }),
        Witness::Consistency { economy, allocation, subset, reduced, reduced_allocation, agent } => json!({
            "kind": "consistency",
            "economy": economy_to_json(economy),
            "allocation": allocation_to_json(allocation),
            "subset": subset.iter().map(|id| id.0).collect::<Vec<_>>(),
            "reduced": economy_to_json(reduced),
            "reduced_allocation": allocation_to_json(reduced_allocation),
            "agent": agent.0,
        }),
        Witness::Manipulation(m) => {
            let mut out = manipulation_to_json(m);
            out["kind"] = json!("manipulation");
            out
        }
        Witness::ObviousManipulation { manipulation, grid, truthful_set, misreport_set, certificate } => {
            let mut out = manipulation_to_json(manipulation);
            out["kind"] = json!("obvious_manipulation");
            out["grid"] = grid_to_json(grid);
            out["truthful_set"] = option_set_to_json(truthful_set);
            out["misreport_set"] = option_set_to_json(misreport_set);
            out["certificate"] = certificate_to_json(certificate);
            out
        }
    }
}

fn counts_to_json(c: &Counts) -> Value {
    json!({"checked": c.checked, "vacuous": c.vacuous})
}

pub fn verdict_to_json<T: Scalar>(v: &Verdict<T>) -> Value {
    json!({
        "axiom": v.axiom.as_str(),
        "rule": v.rule,
        "status": v.status.as_str(),
        "counts": counts_to_json(&v.counts),
        "witness": v.witness.as_ref().map(witness_to_json),
        "grid": v.grid.as_ref().map(incentive_grid_to_json),
    })
}

pub fn matrix_to_json<T: Scalar>(m: &IndependenceMatrix<T>) -> Value {
    json!({
        "matches_pattern": m.matches_pattern(),
        "rows": m.rows.iter().map(|r| json!({
            "rule": r.rule.as_str(),
            "verdicts": r.verdicts.iter().map(verdict_to_json).collect::<Vec<_>>(),
        })).collect::<Vec<_>>(),
        "mismatches": m.mismatches.iter().map(|x| json!({
            "rule": x.rule,
            "axiom": x.axiom.as_str(),
            "expected": if x.expected_fail { "fail" } else { "pass" },
            "status": x.status.as_str(),
        })).collect::<Vec<_>>(),
    })
}

pub fn solution_to_json<T: Scalar>(rule: &str, econ: &Economy<T>, alloc: &Allocation<T>, uniform: Option<&UniformSolution<T>>) -> Value {
    let mut out = json!({
        "rule": rule,
        "allocation": allocation_to_json(alloc),
        "excess": econ.excess().to_json(),
    });
    if let Some(s) = uniform {
        out["branch"] = json!(s.branch.as_str());
        out["lambda"] = s.lambda.to_json();
    }
    out
}

pub fn step1_to_json<T: Scalar>(r: &Step1Report<T>) -> Value {
    json!({
        "status": r.status.as_str(),
        "allocation": allocation_to_json(&r.allocation),
        "equal_share": r.equal_share.to_json(),
    })
}

pub fn step2_to_json<T: Scalar>(s: &Step2Economy<T>) -> Value {
    let c = &s.certificate;
    json!({
        "economy": economy_to_json(&s.economy),
        "fresh": s.fresh.iter().map(|id| id.0).collect::<Vec<_>>(),
        "certificate": {
            "k": c.k,
            "gamma": c.gamma.to_json(),
            "omega_star": c.omega_star.to_json(),
            "target": c.target.to_json(),
            "eq1": c.eq1,
            "eq2": c.eq2,
            "eq3": c.eq3,
            "excess_positive": c.excess_positive,
            "eq4_points": c.eq4_points,
            "eq4": c.eq4,
            "holds": c.holds(),
        },
    })
}

pub fn step3_to_json<T: Scalar>(r: &Step3Report<T>) -> Value {
    json!({
        "status": r.status.as_str(),
        "matches_uniform": r.matches_uniform,
        "vacuous_at": r.vacuous_at,
        "trace": r.trace.iter().map(|s| json!({
            "economy": economy_to_json(&s.economy),
            "removed": s.removed.0,
            "allotment": s.allotment.to_json(),
            "expected": s.expected.to_json(),
            "stage_lambda": s.stage_lambda.to_json(),
            "eq1": s.eq1,
            "eq2": s.eq2,
        })).collect::<Vec<_>>(),
    })
}
