//! Total and limit-computable string functions, and the exotic-string
//! counterexample built from a prefix of Ω.
//!
//! Functions return [`BitString`]; the empty string doubles as ⊥ ("no
//! output"), exactly as partial functions are treated elsewhere.

use std::fmt;
use std::sync::Arc;

use crate::bits::{numeric_less, BitString};
use crate::error::{Error, Result};

/// Anything that maps strings to strings (⊥ = empty).
pub trait Evaluable: Send + Sync {
    fn eval(&self, x: &BitString) -> BitString;
    fn label(&self) -> &str;
    /// Small hand-assigned stand-in for the function's description length.
    fn description_cost(&self) -> u32;
}

type TotalFn = dyn Fn(&BitString) -> BitString + Send + Sync;
type StagedFn = dyn Fn(&BitString, usize) -> BitString + Send + Sync;

#[derive(Clone)]
pub struct TotalFunction {
    label: String,
    description_cost: u32,
    f: Arc<TotalFn>,
}

impl TotalFunction {
    pub fn new<F>(label: impl Into<String>, description_cost: u32, f: F) -> Self
    where
        F: Fn(&BitString) -> BitString + Send + Sync + 'static,
    {
        TotalFunction { label: label.into(), description_cost, f: Arc::new(f) }
    }

    pub fn identity() -> Self {
        Self::new("identity", 1, |x| x.clone())
    }

    /// Constant ⊥.
    pub fn bottom() -> Self {
        Self::new("bottom", 1, |_| BitString::new())
    }

    /// `x ↦ x⁻`, with ⊥ ↦ ⊥.
    pub fn drop_last() -> Self {
        Self::new("drop-last", 2, |x| x.parent().unwrap_or_default())
    }

    pub fn complement() -> Self {
        Self::new("complement", 2, |x| BitString::from_bits(x.iter().map(|b| !b)))
    }

    pub fn reverse() -> Self {
        Self::new("reverse", 3, |x| BitString::from_bits(x.iter().rev()))
    }

    /// Keep the first half (rounded down); many-to-one on every length.
    pub fn first_half() -> Self {
        Self::new("first-half", 3, |x| x.prefix(x.len() / 2))
    }
}

impl Evaluable for TotalFunction {
    fn eval(&self, x: &BitString) -> BitString {
        (self.f)(x)
    }
    fn label(&self) -> &str {
        &self.label
    }
    fn description_cost(&self) -> u32 {
        self.description_cost
    }
}

impl fmt::Debug for TotalFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TotalFunction({})", self.label)
    }
}

/// A limit-computable function given by its stage-`s` approximations.
#[derive(Clone)]
pub struct StagedFunction {
    label: String,
    description_cost: u32,
    f: Arc<StagedFn>,
}

impl StagedFunction {
    pub fn new<F>(label: impl Into<String>, description_cost: u32, f: F) -> Self
    where
        F: Fn(&BitString, usize) -> BitString + Send + Sync + 'static,
    {
        StagedFunction { label: label.into(), description_cost, f: Arc::new(f) }
    }

    pub fn eval_at(&self, x: &BitString, stage: usize) -> BitString {
        (self.f)(x, stage)
    }

    /// Freeze at one stage.
    pub fn at_stage(&self, stage: usize) -> TotalFunction {
        let f = Arc::clone(&self.f);
        TotalFunction::new(
            format!("{}@{stage}", self.label),
            self.description_cost,
            move |x| f(x, stage),
        )
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn description_cost(&self) -> u32 {
        self.description_cost
    }
}

impl fmt::Debug for StagedFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "StagedFunction({})", self.label)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StagedValue {
    pub value: BitString,
    /// Constant over the last `window` stages.
    pub stable: bool,
}

/// Value at `max_stage`, flagged stable when stages
/// `max_stage + 1 - window ..= max_stage` all agree.
pub fn eval_staged(
    f: &StagedFunction,
    x: &BitString,
    max_stage: usize,
    window: usize,
) -> Result<StagedValue> {
    if window == 0 || window > max_stage {
        return Err(Error::Undefined(format!(
            "stability window {window} must lie in 1..={max_stage}"
        )));
    }
    let value = f.eval_at(x, max_stage);
    let stable = (max_stage + 1 - window..max_stage).all(|s| f.eval_at(x, s) == value);
    Ok(StagedValue { value, stable })
}

/// The case split for a fixed Ω guess: on strings of length `b + c`,
/// `x ↦ x` when the tail is numerically below `omega`, `x ↦ x_{≤b}` when the
/// tail equals it, and ⊥ otherwise (also ⊥ off that length).
pub fn omega_split(b: usize, omega: &BitString, x: &BitString) -> BitString {
    if x.len() != b + omega.len() {
        return BitString::new();
    }
    let tail = x.suffix_after(b);
    if tail == *omega {
        x.prefix(b)
    } else if numeric_less(&tail, omega).expect("equal lengths") {
        x.clone()
    } else {
        BitString::new()
    }
}

/// The limit-computable counterexample map: stage `s` uses
/// `omega_by_stage[s]` (the last entry beyond the end) as its Ω_c guess.
pub fn thm2_b(b: usize, c: usize, omega_by_stage: Vec<BitString>) -> Result<StagedFunction> {
    if b == 0 || c == 0 {
        return Err(Error::Undefined(format!("need b, c >= 1 (got b={b}, c={c})")));
    }
    if let Some(bad) = omega_by_stage.iter().find(|o| o.len() != c) {
        return Err(Error::BadLength { expected: c, got: bad.len() });
    }
    if omega_by_stage.is_empty() {
        return Err(Error::Undefined("no omega stages".into()));
    }
    // Ω-bit strings cost about c plus a description of b and c.
    let cost = (c + 2 * (usize::BITS - (b * c).leading_zeros()) as usize) as u32;
    Ok(StagedFunction::new(format!("thm2-b{b}-c{c}"), cost, move |x, s| {
        let omega = &omega_by_stage[s.min(omega_by_stage.len() - 1)];
        omega_split(b, omega, x)
    }))
}

/// Registered total functions, in a stable order.
pub fn function_catalog() -> Vec<TotalFunction> {
    vec![
        TotalFunction::identity(),
        TotalFunction::bottom(),
        TotalFunction::drop_last(),
        TotalFunction::complement(),
        TotalFunction::reverse(),
        TotalFunction::first_half(),
    ]
}

pub fn function_by_label(label: &str) -> Result<TotalFunction> {
    function_catalog()
        .into_iter()
        .find(|f| f.label() == label)
        .ok_or_else(|| Error::Parse(format!("unknown function {label:?}")))
}
