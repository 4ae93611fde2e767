//! Command-line front end.
//!
//! Exit codes: 0 all verdicts pass, 2 some verdict fails (or the
//! independence pattern is off), 3 profile budget exceeded, 4 bad input,
//! 5 unknown rule or axiom, 1 internal error.

use crate::axioms::{Axiom, Status, Verdict, Witness};
use crate::constructions::{self, Step3Report};
use crate::economy::{AgentId, Allocation, Economy};
use crate::error::{Error, Result};
use crate::io;
use crate::option_sets::{self, OptionSet, OptionSetKind, ProfileGrid, Provenance};
use crate::prefs::{Preference, Shape};
use crate::rules::{self, Rule, RuleDescriptor};
use crate::scalar::{format_sig, Rational, Scalar};
use crate::suite::{self, AuditConfig, IndependenceMatrix};
use clap::{Parser, Subcommand};
use serde_json::{json, Value};
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_FAIL: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;
pub const EXIT_INPUT: i32 = 4;
pub const EXIT_UNKNOWN: i32 = 5;

#[derive(Debug, Parser)]
#[command(name = "uniform-rule", version, about = "Allocation rules for single-peaked economies and axiom audits")]
pub struct Cli {
    /// Emit JSON instead of tables.
    #[arg(long, global = true)]
    pub json: bool,
    /// Cap on opponent profiles per enumeration.
    #[arg(long, global = true)]
    pub budget: Option<u64>,
    /// Seed for randomized economy suites.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Apply a rule to an economy file.
    Solve {
        rule: String,
        economy: PathBuf,
        /// Picking order for serial_dictator_fixed, e.g. `2,1,3`.
        #[arg(long, value_delimiter = ',')]
        order: Option<Vec<u32>>,
    },
    /// Option set of one agent.
    OptionSet {
        rule: String,
        #[arg(long, default_value_t = 1)]
        agent: u32,
        /// Peak, or a preference JSON object.
        #[arg(long)]
        pref: String,
        #[arg(long)]
        omega: String,
        #[arg(long)]
        n: usize,
        /// Grid descriptor JSON; defaults to 9 even peaks on [0, Ω] plus Ω/n.
        #[arg(long)]
        grid: Option<PathBuf>,
        /// Enumerate even when a closed form exists.
        #[arg(long)]
        enumerate: bool,
    },
    /// Run one axiom (or `all`) against a rule.
    Audit {
        rule: String,
        axiom: String,
        config: Option<PathBuf>,
    },
    /// All four axioms against all five rules.
    Independence { config: Option<PathBuf> },
    /// Step 1, Step 2 and Step 3 traces for one economy.
    Theorem {
        #[arg(long, default_value = "uniform")]
        rule: String,
        /// Economy file; defaults to peaks (2.5, 4, 6) with Ω = 9.
        #[arg(long)]
        economy: Option<PathBuf>,
        /// Agent for the Step 2 construction (defaults to the smallest peak).
        #[arg(long)]
        agent: Option<u32>,
        /// Allotment the rule is supposed to give that agent.
        #[arg(long)]
        allotment: Option<String>,
        #[arg(long)]
        gamma: Option<String>,
    },
}

/// Exit code for a finished run.
pub fn exit_code(statuses: &[Status]) -> i32 {
    if statuses.iter().any(|s| s.is_fail()) {
        EXIT_FAIL
    } else {
        EXIT_PASS
    }
}

pub fn error_exit_code(e: &Error) -> i32 {
    match e {
        Error::BudgetExceeded { .. } => EXIT_BUDGET,
        Error::UnknownRule(_) | Error::UnknownAxiom(_) => EXIT_UNKNOWN,
        Error::Parse(_)
        | Error::Domain(_)
        | Error::InvalidPreference(_)
        | Error::InvalidEconomy(_)
        | Error::InvalidAllocation(_)
        | Error::OrderMismatch(_)
        | Error::Precondition(_)
        | Error::EmptyOptionSet
        | Error::Infeasible(_) => EXIT_INPUT,
        _ => EXIT_INTERNAL,
    }
}

/// Parses `args` (program name first), runs the command, and returns the
/// process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_PASS };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    if let Some(jobs) = cli.jobs {
        // a pool may already exist when called repeatedly in one process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build_global();
    }
    match execute(&cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            error_exit_code(&e)
        }
    }
}

fn execute(cli: &Cli, out: &mut dyn Write) -> Result<i32> {
    match &cli.command {
        Command::Solve { rule, economy, order } => solve(cli, out, rule, economy, order.as_deref()),
        Command::OptionSet { rule, agent, pref, omega, n, grid, enumerate } => {
            option_set(cli, out, rule, AgentId(*agent), pref, omega, *n, grid.as_deref(), *enumerate)
        }
        Command::Audit { rule, axiom, config } => audit(cli, out, rule, axiom, config.as_deref()),
        Command::Independence { config } => independence(cli, out, config.as_deref()),
        Command::Theorem { rule, economy, agent, allotment, gamma } => {
            theorem(cli, out, rule, economy.as_deref(), *agent, allotment.as_deref(), gamma.as_deref())
        }
    }
}

fn emit(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes()).map_err(|e| Error::Internal(format!("write failed: {e}")))
}

fn emit_json(out: &mut dyn Write, v: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(v).map_err(|e| Error::Internal(e.to_string()))?;
    emit(out, &format!("{text}\n"))
}

fn parse_amount(s: &str) -> Result<Rational> {
    Rational::parse_decimal(s).ok_or_else(|| Error::Parse(format!("`{s}` is not a number")))
}

fn load_config(cli: &Cli, path: Option<&Path>) -> Result<AuditConfig<Rational>> {
    let mut config = match path {
        Some(p) => io::config_from_json(&io::read_json_file(p)?)?,
        None => AuditConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config = config.with_seed(seed);
    }
    if let Some(budget) = cli.budget {
        config = config.with_budget(budget);
    }
    Ok(config)
}

fn allocation_line<T: Scalar>(a: &Allocation<T>) -> String {
    let parts: Vec<String> = a.values().iter().map(format_sig).collect();
    format!("({})", parts.join(", "))
}

fn solve(cli: &Cli, out: &mut dyn Write, rule: &str, path: &Path, order: Option<&[u32]>) -> Result<i32> {
    let mut rule = RuleDescriptor::from_name(rule)?;
    let econ: Economy<Rational> = io::economy_from_json(&io::read_json_file(path)?)?;
    if let (RuleDescriptor::SerialDictator { .. }, Some(order)) = (&rule, order) {
        rule = RuleDescriptor::SerialDictator { order: Some(order.iter().map(|&i| AgentId(i)).collect()) };
    }
    let alloc = rule.allocate(&econ)?;
    let uniform = match rule {
        RuleDescriptor::Uniform => Some(rules::uniform_solution(&econ)?),
        RuleDescriptor::PhiBar if !rules::phi_bar_special_case(&econ) => Some(rules::uniform_solution(&econ)?),
        _ => None,
    };
    if cli.json {
        emit_json(out, &io::solution_to_json(rule.as_str(), &econ, &alloc, uniform.as_ref()))?;
    } else {
        let mut text = format!("rule        {}\n", rule.as_str());
        text += &format!("allocation  {}\n", allocation_line(&alloc));
        text += &format!("excess      {}\n", format_sig(&econ.excess()));
        if let Some(s) = &uniform {
            text += &format!("branch      {}\nlambda      {}\n", s.branch.as_str(), format_sig(&s.lambda));
        }
        emit(out, &text)?;
    }
    Ok(EXIT_PASS)
}

fn default_option_grid(omega: &Rational, n: usize) -> Result<ProfileGrid<Rational>> {
    let mut peaks = option_sets::even_points(omega, 9);
    peaks.push(omega.clone() / Rational::of_usize(n));
    peaks.sort();
    peaks.dedup();
    ProfileGrid::new(peaks, vec![Shape::default()], n.saturating_sub(1))
}

#[allow(clippy::too_many_arguments)]
fn option_set(
    cli: &Cli,
    out: &mut dyn Write,
    rule: &str,
    agent: AgentId,
    pref: &str,
    omega: &str,
    n: usize,
    grid: Option<&Path>,
    enumerate: bool,
) -> Result<i32> {
    let rule = RuleDescriptor::from_name(rule)?;
    let pref: Preference<Rational> = io::pref_from_json(&io::parse_json_str(pref)?)?;
    let omega = parse_amount(omega)?;
    if n == 0 {
        return Err(Error::Precondition("n must be positive".into()));
    }
    let oset = if rule == RuleDescriptor::Uniform && !enumerate {
        option_sets::uniform_option_set(&pref, &omega, n)?
    } else {
        let mut g = match grid {
            Some(p) => io::grid_from_json(&io::read_json_file(p)?)?,
            None => default_option_grid(&omega, n)?,
        };
        if g.n_opponents + 1 != n {
            return Err(Error::Precondition(format!("grid has {} opponents but n = {n}", g.n_opponents)));
        }
        if let Some(b) = cli.budget {
            g = g.with_budget(b);
        }
        option_sets::sampled_option_set(&rule, agent, &pref, &omega, &g)?
    };
    if cli.json {
        emit_json(out, &io::option_set_to_json(&oset))?;
    } else {
        emit(out, &option_set_text(&oset))?;
    }
    Ok(EXIT_PASS)
}

fn option_set_text<T: Scalar>(o: &OptionSet<T>) -> String {
    let body = match &o.kind {
        OptionSetKind::Interval { lo, hi } => format!("interval    [{}, {}]\n", format_sig(lo), format_sig(hi)),
        OptionSetKind::Samples(v) => {
            let parts: Vec<String> = v.iter().map(format_sig).collect();
            format!("samples     {} points\n            {{{}}}\n", v.len(), parts.join(", "))
        }
    };
    let provenance = match &o.provenance {
        Provenance::Analytic => "analytic".to_string(),
        Provenance::Enumerated(g) => format!(
            "enumerated over {} profiles ({} peaks x {} shapes, {} opponents)",
            g.profile_count(),
            g.peaks.len(),
            g.shapes.len(),
            g.n_opponents
        ),
    };
    format!("{body}provenance  {provenance}\n")
}

fn parse_axioms(name: &str) -> Result<Vec<Axiom>> {
    if name == "all" {
        Ok(Axiom::CHARACTERIZATION.to_vec())
    } else {
        Ok(vec![Axiom::from_name(name)?])
    }
}

fn audit(cli: &Cli, out: &mut dyn Write, rule: &str, axiom: &str, config: Option<&Path>) -> Result<i32> {
    let axioms = parse_axioms(axiom)?;
    let config = load_config(cli, config)?;
    let rule = config.rule(rule)?;
    let verdicts = suite::run_audit(&rule, &axioms, &config)?;
    for v in &verdicts {
        if v.status.is_fail() && !v.reproduces(&rule)? {
            return Err(Error::Internal(format!("{} witness for {} does not reproduce", v.axiom, v.rule)));
        }
    }
    if cli.json {
        let vs: Vec<Value> = verdicts.iter().map(io::verdict_to_json).collect();
        emit_json(out, &json!({"rule": rule.as_str(), "verdicts": vs}))?;
    } else {
        let mut text = String::new();
        for v in &verdicts {
            text += &verdict_text(v);
        }
        emit(out, &text)?;
    }
    Ok(exit_code(&verdicts.iter().map(|v| v.status).collect::<Vec<_>>()))
}

fn economy_text<T: Scalar>(e: &Economy<T>) -> String {
    let peaks: Vec<String> = e.peaks().iter().map(format_sig).collect();
    format!("peaks ({}), omega {}", peaks.join(", "), format_sig(e.omega()))
}

pub fn witness_text<T: Scalar>(w: &Witness<T>) -> String {
    match w {
        Witness::Efficiency { economy, allocation, agent } | Witness::EqualDivision { economy, allocation, agent } => {
            format!("{}; allocation {}; agent {}", economy_text(economy), allocation_line(allocation), agent)
        }
        Witness::Consistency { economy, allocation, subset, reduced_allocation, .. } => {
            let ids: Vec<String> = subset.iter().map(|id| id.to_string()).collect();
            format!(
                "{}; allocation {}; subset {{{}}} re-allocated {}",
                economy_text(economy),
                allocation_line(allocation),
                ids.join(","),
                allocation_line(reduced_allocation)
            )
        }
        Witness::Manipulation(m) | Witness::ObviousManipulation { manipulation: m, .. } => {
            let opp: Vec<String> = m.opponents.iter().map(|(_, p)| format_sig(p.peak())).collect();
            let mut s = format!(
                "agent {} true peak {}, misreport peak {}, opponents ({}), omega {}: {} vs truthful {}",
                m.agent,
                format_sig(m.truth.peak()),
                format_sig(m.misreport.peak()),
                opp.join(", "),
                format_sig(&m.omega),
                format_sig(&m.manipulated_outcome),
                format_sig(&m.truthful_outcome),
            );
            if let Witness::ObviousManipulation { certificate, .. } = w {
                s += &format!(
                    "; worst truthful {} < worst misreport {}",
                    format_sig(&certificate.worst_truthful),
                    format_sig(&certificate.binding)
                );
            }
            s
        }
    }
}

fn verdict_text<T: Scalar>(v: &Verdict<T>) -> String {
    let mut s = format!(
        "{:<12} {:<22} {:<13} checked {} vacuous {}\n",
        v.axiom.as_str(),
        v.rule,
        v.status.as_str(),
        v.counts.checked,
        v.counts.vacuous
    );
    if let Some(w) = &v.witness {
        s += &format!("  witness: {}\n", witness_text(w));
    }
    s
}

fn matrix_text<T: Scalar>(m: &IndependenceMatrix<T>) -> String {
    let mut s = format!("{:<22}", "rule");
    for a in Axiom::CHARACTERIZATION {
        s += &format!(" {:<13}", a.as_str());
    }
    s += "\n";
    for row in &m.rows {
        s += &format!("{:<22}", row.rule.as_str());
        for v in &row.verdicts {
            s += &format!(" {:<13}", v.status.as_str());
        }
        s += "\n";
    }
    for row in &m.rows {
        for v in row.verdicts.iter().filter(|v| v.status.is_fail()) {
            if let Some(w) = &v.witness {
                s += &format!("{} / {}: {}\n", row.rule.as_str(), v.axiom, witness_text(w));
            }
        }
    }
    if m.matches_pattern() {
        s += "pattern: matches\n";
    } else {
        for x in &m.mismatches {
            s += &format!(
                "unexpected: {} {} expected {} got {}\n",
                x.rule,
                x.axiom,
                if x.expected_fail { "fail" } else { "pass" },
                x.status.as_str()
            );
        }
    }
    s
}

fn independence(cli: &Cli, out: &mut dyn Write, config: Option<&Path>) -> Result<i32> {
    let config = load_config(cli, config)?;
    let matrix = suite::independence_matrix(&config)?;
    for row in &matrix.rows {
        for v in &row.verdicts {
            if !v.reproduces(&row.rule)? {
                return Err(Error::Internal(format!("{} witness for {} does not reproduce", v.axiom, v.rule)));
            }
        }
    }
    if cli.json {
        emit_json(out, &io::matrix_to_json(&matrix))?;
    } else {
        emit(out, &matrix_text(&matrix))?;
    }
    Ok(if matrix.matches_pattern() { EXIT_PASS } else { EXIT_FAIL })
}

fn default_theorem_economy() -> Economy<Rational> {
    let peaks = [Rational::new(5.into(), 2.into()), Rational::from_integer(4.into()), Rational::from_integer(6.into())];
    Economy::from_peaks(&peaks, Rational::from_integer(9.into())).expect("valid economy")
}

fn step3_text<T: Scalar>(r: &Step3Report<T>) -> String {
    let mut s = format!("step 3      {} (matches uniform: {})\n", r.status.as_str(), r.matches_uniform);
    for st in &r.trace {
        s += &format!(
            "  {}: agent {} leaves with {} (expected {}, level {}) eq1 {} eq2 {}\n",
            economy_text(&st.economy),
            st.removed,
            format_sig(&st.allotment),
            format_sig(&st.expected),
            format_sig(&st.stage_lambda),
            st.eq1,
            st.eq2
        );
    }
    if let Some(k) = r.vacuous_at {
        s += &format!("  vacuous reduction at stage {k}\n");
    }
    s
}

fn theorem(
    cli: &Cli,
    out: &mut dyn Write,
    rule: &str,
    economy: Option<&Path>,
    agent: Option<u32>,
    allotment: Option<&str>,
    gamma: Option<&str>,
) -> Result<i32> {
    let rule = RuleDescriptor::from_name(rule)?;
    let econ = match economy {
        Some(p) => io::economy_from_json(&io::read_json_file(p)?)?,
        None => default_theorem_economy(),
    };
    let mut statuses = Vec::new();
    let mut report = serde_json::Map::new();
    let mut text = format!("economy     {}\n", economy_text(&econ));

    match constructions::step1_check(&rule, &econ) {
        Ok(r) => {
            statuses.push(r.status);
            text += &format!("step 1      {} allocation {}\n", r.status.as_str(), allocation_line(&r.allocation));
            report.insert("step1".into(), io::step1_to_json(&r));
        }
        Err(Error::Precondition(why)) => {
            text += &format!("step 1      not applicable: {why}\n");
            report.insert("step1".into(), json!({"skipped": why}));
        }
        Err(e) => return Err(e),
    }

    let share = econ.equal_share();
    let agent = match agent {
        Some(a) => Some(AgentId(a)),
        None => rules::peak_order(&econ).into_iter().next().filter(|id| econ.peak(*id).is_some_and(|p| *p <= share)),
    };
    match agent {
        Some(agent) => {
            let allotment = match allotment {
                Some(a) => parse_amount(a)?,
                None => {
                    let given = rule.allocate(&econ)?.get(agent).cloned().unwrap_or_default();
                    if econ.peak(agent).is_some_and(|p| given < *p) { given } else { Rational::default() }
                }
            };
            let gamma = gamma.map(parse_amount).transpose()?;
            match constructions::build_step2_economy(&econ, agent, &allotment, gamma) {
                Ok(built) => {
                    let c = &built.certificate;
                    text += &format!(
                        "step 2      agent {agent}: k {} gamma {} omega* {} share {} eq1 {} eq2 {} eq3 {} excess {} eq4 {}\n",
                        c.k,
                        format_sig(&c.gamma),
                        format_sig(&c.omega_star),
                        format_sig(&c.target),
                        c.eq1,
                        c.eq2,
                        c.eq3,
                        c.excess_positive,
                        c.eq4
                    );
                    statuses.push(if c.holds() { Status::Pass } else { Status::Fail });
                    report.insert("step2".into(), io::step2_to_json(&built));
                }
                Err(Error::Precondition(why)) => {
                    text += &format!("step 2      not applicable: {why}\n");
                    report.insert("step2".into(), json!({"skipped": why}));
                }
                Err(e) => return Err(e),
            }
        }
        None => {
            text += "step 2      not applicable: no agent peaks at or below the equal share\n";
            report.insert("step2".into(), json!({"skipped": "no agent peaks at or below the equal share"}));
        }
    }

    let chain = constructions::step3_departure_chain(&rule, &econ)?;
    statuses.push(chain.status);
    text += &step3_text(&chain);
    report.insert("step3".into(), io::step3_to_json(&chain));

    if cli.json {
        report.insert("rule".into(), json!(rule.as_str()));
        report.insert("economy".into(), io::economy_to_json(&econ));
        emit_json(out, &Value::Object(report))?;
    } else {
        emit(out, &text)?;
    }
    Ok(exit_code(&statuses))
}
