//! Sharp Bellman functions for the dyadic Carleson embedding theorem and the
//! John–Nirenberg inequality.
//!
//! The crate evaluates two families of extremal functions:
//!
//! * `B_max` / `B_min` — the Bellman functions of the capacity-windowed
//!   Carleson embedding problem in the variables `(x1, x2, x3)` (mean of the
//!   test function, mean of its p-th power, capacity density), for `p = 2`
//!   ([`cet_bellman`]) and general `p > 1` ([`lp_bellman`]);
//! * the two-variable John–Nirenberg family `B(x1, x2; δ)` ([`jni_bellman`]).
//!
//! Both satisfy a degenerate Monge–Ampère equation `det d²B = 0`, so the graph
//! of each function is ruled by straight extremal lines.  [`foliation`]
//! materializes that line geometry and [`extremal_seq`] constructs the
//! self-similar near-extremizers on the dyadic tree that certify sharpness.
//!
//! Every evaluator is a pure function over immutable inputs and is safe to
//! call concurrently.

pub mod cet_bellman;
pub mod domain;
pub mod extremal_seq;
pub mod foliation;
pub mod jni_bellman;
pub mod lp_bellman;
pub mod solver;
pub mod suites;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// `x2 = 0` forces `x1 = 0`; ratios of the form `|x1|^p / x2` are undefined.
    #[error("degenerate point: x2 = 0")]
    DegeneratePoint,
    /// A point fell outside the Bellman domain (beyond the 1e-12 slack).
    #[error("point outside the Bellman domain: {0}")]
    OutOfDomain(String),
    /// A rational expression was evaluated at a vanishing denominator.
    #[error("evaluation hit a pole of the rational expression")]
    Pole,
    /// The negative branch was requested where no negative root exists.
    #[error("no negative root: s <= ((M - x3)/(M - m))^(p-1)")]
    NoNegativeRoot,
    /// The bracketed root finder exhausted its iteration budget. This signals
    /// an implementation bug or a degenerate equation, not bad data.
    #[error("root finder failed to converge (residual {0:e})")]
    Nonconvergence(f64),
    /// A derivative was requested on or too close to a boundary where the
    /// gradient has a pole or is one-sided.
    #[error("gradient requested on or too close to the boundary")]
    BoundaryGradient,
    /// A flag or argument violated a precondition.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    /// The truncation depth cannot hold even one full generation.
    #[error("truncation depth {depth} too small for scale n = {n} (need depth >= 2n)")]
    DepthTooSmall { depth: u32, n: u32 },
    /// Explicit leaf materialization is capped to keep memory bounded.
    #[error("explicit materialization depth {0} exceeds the supported cap {1}")]
    DepthTooLarge(u32, u32),
    /// A tree function violated the superharmonicity precondition.
    #[error("tree function is not superharmonic at depth {depth}, index {index}")]
    NotSuperharmonic { depth: u32, index: u64 },
}

pub type Result<T> = std::result::Result<T, Error>;
