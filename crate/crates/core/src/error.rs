use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid preference: {0}")]
    InvalidPreference(String),
    #[error("invalid economy: {0}")]
    InvalidEconomy(String),
    #[error("invalid allocation: {0}")]
    InvalidAllocation(String),
    #[error("degenerate reduction: kept agents hold a zero endowment")]
    DegenerateReduction,
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("bracket violation: F(lo) = {lo}, F(hi) = {hi}, target = {target}")]
    Bracket { lo: String, hi: String, target: String },
    #[error("bisection did not reach tolerance after {0} iterations")]
    NoConvergence(usize),
    #[error("order mismatch: {0}")]
    OrderMismatch(String),
    #[error("unknown rule `{0}`")]
    UnknownRule(String),
    #[error("unknown axiom `{0}`")]
    UnknownAxiom(String),
    #[error("profile budget exceeded: {needed} profiles > budget {budget}")]
    BudgetExceeded { needed: u128, budget: u64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("empty option set")]
    EmptyOptionSet,
    #[error("parse error: {0}")]
    Parse(String),
    #[error("internal consistency error: {0}")]
    Internal(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
