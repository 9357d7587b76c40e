//! Semi-measures on Cantor space truncated to a finite tree depth.
//!
//! A tree of depth `D` stores one exact value per string of length `≤ D`,
//! at index `2^‖x‖ − 1 + x` (breadth-first, shortlex). Sequences are only
//! seen through their length-`D` prefixes; a test or map evaluated on a
//! longer string uses its deepest stored prefix.

use std::fmt::Write as _;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::exact::{ceil_log2, floor_log2, int, pow2, ratio, show, Rational};
use crate::harness::{Report, DEFAULT_SLACK};
use crate::machine::{doubling_program, identity_program, run_monotone, MachineSpec};

pub const DEFAULT_DEPTH: usize = 12;
pub const MAX_DEPTH: usize = 16;

/// Step budget for machine-backed maps per input prefix.
pub const MACHINE_MAP_STEPS: u64 = 100_000;

pub fn tree_size(depth: usize) -> usize {
    (1usize << (depth + 1)) - 1
}

pub fn node_index(x: &BitString) -> usize {
    (1usize << x.len()) - 1 + x.to_u64() as usize
}

pub fn node_at(i: usize) -> BitString {
    let len = (usize::BITS - 1 - (i + 1).leading_zeros()) as usize;
    BitString::from_u64((i + 1 - (1 << len)) as u64, len)
}

fn check_depth(depth: usize) -> Result<()> {
    if depth > MAX_DEPTH {
        return Err(Error::ResourceLimit { what: format!("tree depth {depth}"), limit: MAX_DEPTH as u64 });
    }
    Ok(())
}

fn children(i: usize) -> [usize; 2] {
    [2 * i + 1, 2 * i + 2]
}

fn node_len(i: usize) -> usize {
    (usize::BITS - 1 - (i + 1).leading_zeros()) as usize
}

/// Minimal nodes (an antichain, in shortlex order) satisfying `hit`;
/// subtrees where `skip` holds are not explored.
fn minimal_nodes(depth: usize, hit: impl Fn(usize) -> bool, skip: impl Fn(usize) -> bool) -> Vec<usize> {
    let mut out = Vec::new();
    let mut stack = vec![0usize];
    while let Some(i) = stack.pop() {
        if skip(i) {
            continue;
        }
        if hit(i) {
            out.push(i);
        } else if node_len(i) < depth {
            stack.extend(children(i).into_iter().rev());
        }
    }
    out.sort_unstable();
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeSemiMeasure {
    pub label: String,
    depth: usize,
    values: Vec<Rational>,
}

impl TreeSemiMeasure {
    /// Checks nonnegativity, `P(⊥) ≤ 1` and `P(x) ≥ P(x0) + P(x1)`.
    pub fn new(label: impl Into<String>, depth: usize, values: Vec<Rational>) -> Result<Self> {
        let m = Self::unchecked(label.into(), depth, values)?;
        if let Some(bad) = m.violations().first() {
            return Err(Error::NotSemiMeasure(format!("{}: {bad}", m.label)));
        }
        Ok(m)
    }

    fn unchecked(label: String, depth: usize, values: Vec<Rational>) -> Result<Self> {
        check_depth(depth)?;
        if values.len() != tree_size(depth) {
            return Err(Error::BadLength { expected: tree_size(depth), got: values.len() });
        }
        Ok(TreeSemiMeasure { label, depth, values })
    }

    pub fn from_fn(label: impl Into<String>, depth: usize, f: impl Fn(&BitString) -> Rational) -> Result<Self> {
        check_depth(depth)?;
        Self::new(label, depth, (0..tree_size(depth)).map(|i| f(&node_at(i))).collect())
    }

    /// Every node where an invariant fails, described.
    pub fn violations(&self) -> Vec<String> {
        let mut bad = Vec::new();
        if self.values[0] > Rational::one() {
            bad.push(format!("root mass {}", show(&self.values[0])));
        }
        for (i, v) in self.values.iter().enumerate() {
            if v.is_negative() {
                bad.push(format!("negative at {}", node_at(i)));
            }
            if node_len(i) < self.depth {
                let [a, b] = children(i);
                if &self.values[a] + &self.values[b] > *v {
                    bad.push(format!("superadditivity fails at {}", node_at(i)));
                }
            }
        }
        bad
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Value at `x`; panics when `x` is deeper than the tree.
    pub fn value(&self, x: &BitString) -> &Rational {
        assert!(x.len() <= self.depth, "{x} is deeper than the tree ({})", self.depth);
        &self.values[node_index(x)]
    }

    pub fn at(&self, i: usize) -> &Rational {
        &self.values[i]
    }

    /// Additive at every internal node with total mass 1.
    pub fn is_measure(&self) -> bool {
        self.values[0].is_one()
            && (0..tree_size(self.depth.saturating_sub(1)))
                .all(|i| self.depth > 0 && &self.values[2 * i + 1] + &self.values[2 * i + 2] == self.values[i])
    }

    /// `tree <label> <depth>` then `x num den` per node, breadth-first.
    pub fn to_text(&self) -> String {
        let mut s = format!("tree {} {}\n", self.label, self.depth);
        for (i, v) in self.values.iter().enumerate() {
            let _ = writeln!(s, "{} {} {}", node_at(i), v.numer(), v.denom());
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().unwrap_or_default();
        let mut h = header.split_whitespace();
        let (Some("tree"), Some(label), Some(depth)) = (h.next(), h.next(), h.next()) else {
            return Err(Error::Parse(format!("bad tree header {header:?}")));
        };
        let depth: usize = depth.parse().map_err(|_| Error::Parse(format!("bad depth {depth:?}")))?;
        check_depth(depth)?;
        let mut values = vec![Rational::zero(); tree_size(depth)];
        let mut seen = 0;
        for line in lines {
            let parts: Vec<_> = line.split_whitespace().collect();
            let [x, n, d] = parts[..] else {
                return Err(Error::Parse(format!("bad node line {line:?}")));
            };
            let x: BitString = x.parse()?;
            let num: BigInt = n.parse().map_err(|_| Error::Parse(format!("bad numerator {n:?}")))?;
            let den: BigInt = d.parse().map_err(|_| Error::Parse(format!("bad denominator {d:?}")))?;
            if den.is_zero() || x.len() > depth || node_index(&x) != seen {
                return Err(Error::Parse(format!("bad node line {line:?}")));
            }
            values[seen] = Rational::new(num, den);
            seen += 1;
        }
        if seen != values.len() {
            return Err(Error::Parse(format!("expected {} nodes, found {seen}", values.len())));
        }
        Self::new(label, depth, values)
    }
}

/// Filled top-down: `P(⊥) = 1`, `P(xb) = P(x) · w(x, b)`.
fn product_tree(label: &str, depth: usize, w: impl Fn(usize, bool) -> Rational) -> Result<TreeSemiMeasure> {
    check_depth(depth)?;
    let mut values = vec![Rational::zero(); tree_size(depth)];
    values[0] = Rational::one();
    for i in 0..tree_size(depth.saturating_sub(1)) {
        if depth == 0 {
            break;
        }
        let pos = node_len(i);
        let [a, b] = children(i);
        values[a] = &values[i] * w(pos, false);
        values[b] = &values[i] * w(pos, true);
    }
    TreeSemiMeasure::new(label, depth, values)
}

pub fn uniform(depth: usize) -> Result<TreeSemiMeasure> {
    product_tree("uniform", depth, |_, _| ratio(1, 2))
}

/// Independent bits, each 1 with probability `p_one`.
pub fn bernoulli(label: &str, depth: usize, p_one: Rational) -> Result<TreeSemiMeasure> {
    let p_zero = Rational::one() - &p_one;
    product_tree(label, depth, move |_, b| if b { p_one.clone() } else { p_zero.clone() })
}

/// All mass on the single sequence whose `i`th bit is `bit(i)`.
pub fn point_mass(label: &str, depth: usize, bit: impl Fn(usize) -> bool) -> Result<TreeSemiMeasure> {
    product_tree(label, depth, |pos, b| if bit(pos) == b { Rational::one() } else { Rational::zero() })
}

/// Labels accepted by [`tree_measure_by_label`].
pub const TREE_MEASURES: [&str; 6] = ["uniform", "biased-1", "biased-0", "periodic-01", "ones", "mixture"];

pub fn tree_measure_by_label(label: &str, depth: usize) -> Result<TreeSemiMeasure> {
    match label {
        "uniform" => uniform(depth),
        "biased-1" => bernoulli(label, depth, ratio(2, 3)),
        "biased-0" => bernoulli(label, depth, ratio(1, 4)),
        "periodic-01" => point_mass(label, depth, |i| i % 2 == 1),
        "ones" => point_mass(label, depth, |_| true),
        "mixture" => mixture_m(&default_catalog(depth)?),
        _ => Err(Error::Parse(format!("unknown tree measure {label:?}"))),
    }
}

/// Uniform, 2/3 toward 1, 3/4 toward 0, and the point mass on `(01)^∞`.
pub fn default_catalog(depth: usize) -> Result<Vec<TreeSemiMeasure>> {
    TREE_MEASURES[..4].iter().map(|l| tree_measure_by_label(l, depth)).collect()
}

/// `M(x) = Σ_i 2^{-i} P_i(x)`, `i` the 1-based catalog position.
pub fn mixture_m(catalog: &[TreeSemiMeasure]) -> Result<TreeSemiMeasure> {
    let first = catalog.first().ok_or_else(|| Error::Undefined("empty measure catalog".into()))?;
    let depth = first.depth;
    if let Some(other) = catalog.iter().find(|p| p.depth != depth) {
        return Err(Error::DepthMismatch(depth, other.depth));
    }
    let mut values = vec![Rational::zero(); tree_size(depth)];
    for (i, p) in catalog.iter().enumerate() {
        let w = pow2(-(i as i64 + 1));
        for (acc, v) in values.iter_mut().zip(&p.values) {
            *acc += v * &w;
        }
    }
    TreeSemiMeasure::new("M", depth, values)
}

/// Nodes where `M(x) < 2^{-i} P_i(x)` for some catalog member.
pub fn domination_failures(m: &TreeSemiMeasure, catalog: &[TreeSemiMeasure]) -> Vec<(usize, BitString)> {
    let mut bad = Vec::new();
    for (i, p) in catalog.iter().enumerate() {
        let w = pow2(-(i as i64 + 1));
        for (j, v) in p.values.iter().enumerate() {
            if m.values[j] < v * &w {
                bad.push((i + 1, node_at(j)));
            }
        }
    }
    bad
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Deficiency {
    /// `max_{y⊑x} M(y)/P(y)`.
    pub ratio: Rational,
    /// `⌊log2 ratio⌋`, absent when the ratio is 0.
    pub log2_floor: Option<i64>,
}

impl Deficiency {
    fn of(ratio: Rational) -> Self {
        let log2_floor = ratio.is_positive().then(|| floor_log2(&ratio));
        Deficiency { ratio, log2_floor }
    }
}

/// `D_P(x)` as the exact ratio `max_{y⊑x} M(y)/P(y)`.
pub fn deficiency_d(p: &TreeSemiMeasure, m: &TreeSemiMeasure, x: &BitString) -> Result<Deficiency> {
    if p.depth != m.depth {
        return Err(Error::DepthMismatch(p.depth, m.depth));
    }
    let mut best = Rational::zero();
    for n in 0..=x.len() {
        let y = x.prefix(n);
        let py = p.value(&y);
        if py.is_zero() {
            return Err(Error::ZeroMass(y));
        }
        best = best.max(m.value(&y) / py);
    }
    Ok(Deficiency::of(best))
}

/// `D_P` at every node; `None` below any node where `P` vanishes.
pub fn deficiency_tree(p: &TreeSemiMeasure, m: &TreeSemiMeasure) -> Result<Vec<Option<Rational>>> {
    if p.depth != m.depth {
        return Err(Error::DepthMismatch(p.depth, m.depth));
    }
    let mut out: Vec<Option<Rational>> = Vec::with_capacity(p.values.len());
    for i in 0..p.values.len() {
        let here = (!p.values[i].is_zero()).then(|| &m.values[i] / &p.values[i]);
        let v = if i == 0 { here } else { out[(i - 1) / 2].clone().zip(here).map(|(a, b)| a.max(b)) };
        out.push(v);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatioCheck {
    pub m: u32,
    /// Minimal nodes where `M/P > 2^m`.
    pub exceed: Vec<BitString>,
    pub mass: Rational,
    pub bound: Rational,
    pub pass: bool,
}

/// `P({α : max_n M(α_{≤n})/P(α_{≤n}) > 2^m}) < 2^{-m}` on the tree.
/// Nodes with `P = 0` carry no mass and are skipped.
pub fn ratio_test_check(p: &TreeSemiMeasure, m: &TreeSemiMeasure, level: u32) -> Result<RatioCheck> {
    if p.depth != m.depth {
        return Err(Error::DepthMismatch(p.depth, m.depth));
    }
    let threshold = pow2(i64::from(level));
    let nodes = minimal_nodes(p.depth, |i| m.values[i] > &p.values[i] * &threshold, |i| p.values[i].is_zero());
    let mass = nodes.iter().fold(Rational::zero(), |a, &i| a + &p.values[i]);
    let bound = pow2(-i64::from(level));
    let pass = mass < bound;
    Ok(RatioCheck { m: level, exceed: nodes.into_iter().map(node_at).collect(), mass, bound, pass })
}

/// Nonnegative, nondecreasing along ⊑.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ElementaryTest {
    pub label: String,
    depth: usize,
    values: Vec<Rational>,
}

impl ElementaryTest {
    pub fn new(label: impl Into<String>, depth: usize, values: Vec<Rational>) -> Result<Self> {
        check_depth(depth)?;
        let label = label.into();
        if values.len() != tree_size(depth) {
            return Err(Error::BadLength { expected: tree_size(depth), got: values.len() });
        }
        for (i, v) in values.iter().enumerate() {
            if v.is_negative() || (i > 0 && *v < values[(i - 1) / 2]) {
                return Err(Error::Undefined(format!("{label} is not a monotone test at {}", node_at(i))));
            }
        }
        Ok(ElementaryTest { label, depth, values })
    }

    pub fn constant(label: impl Into<String>, depth: usize, value: Rational) -> Result<Self> {
        Self::new(label, depth, vec![value; tree_size(depth)])
    }

    /// `t(x) = 1` once `‖x‖ ≥ k`, else 0.
    pub fn depth_indicator(depth: usize, k: usize) -> Result<Self> {
        let values = (0..tree_size(depth)).map(|i| int(i64::from(node_len(i) >= k))).collect();
        Self::new(format!("depth>={k}"), depth, values)
    }

    /// `t(x) = max_{y⊑x} Q(y)/M(y)`, 0 where both vanish.
    pub fn ratio(label: impl Into<String>, q: &TreeSemiMeasure, m: &TreeSemiMeasure) -> Result<Self> {
        if q.depth != m.depth {
            return Err(Error::DepthMismatch(q.depth, m.depth));
        }
        let mut values: Vec<Rational> = Vec::with_capacity(q.values.len());
        for i in 0..q.values.len() {
            let here = if q.values[i].is_zero() {
                Rational::zero()
            } else if m.values[i].is_zero() {
                return Err(Error::ZeroMass(node_at(i)));
            } else {
                &q.values[i] / &m.values[i]
            };
            let v = if i == 0 { here } else { values[(i - 1) / 2].clone().max(here) };
            values.push(v);
        }
        Self::new(label, q.depth, values)
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Value at the deepest stored prefix of `x`.
    pub fn value(&self, x: &BitString) -> &Rational {
        &self.values[node_index(&x.prefix(x.len().min(self.depth)))]
    }

    pub fn at(&self, i: usize) -> &Rational {
        &self.values[i]
    }

    pub fn is_constant(&self, v: &Rational) -> bool {
        self.values.iter().all(|x| x == v)
    }

    pub fn scaled(&self, by: &Rational, label: impl Into<String>) -> Result<Self> {
        Self::new(label, self.depth, self.values.iter().map(|v| v * by).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelMass {
    pub m: u32,
    pub exceed: usize,
    pub mass: Rational,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MTestCheck {
    pub levels: Vec<LevelMass>,
    pub pass: bool,
}

/// `M({α : t(α) > 2^m}) < 2^{-m}` for every `m ≥ 0` where the set can be
/// nonempty; negative levels hold trivially since `M(⊥) ≤ 1`.
pub fn validate_m_test(t: &ElementaryTest, m: &TreeSemiMeasure) -> Result<MTestCheck> {
    if t.depth != m.depth {
        return Err(Error::DepthMismatch(t.depth, m.depth));
    }
    let max = t.values.iter().max().cloned().unwrap_or_else(Rational::zero);
    let top = if max > Rational::one() { floor_log2(&max).max(0) as u32 } else { 0 };
    let levels: Vec<LevelMass> = (0..=top)
        .map(|level| {
            let threshold = pow2(i64::from(level));
            let nodes = minimal_nodes(t.depth, |i| t.values[i] > threshold, |_| false);
            let mass = nodes.iter().fold(Rational::zero(), |a, &i| a + &m.values[i]);
            let pass = mass < pow2(-i64::from(level));
            LevelMass { m: level, exceed: nodes.len(), mass, pass }
        })
        .collect();
    let pass = levels.iter().all(|l| l.pass);
    Ok(MTestCheck { levels, pass })
}

type MapFn = dyn Fn(&BitString) -> BitString + Send + Sync;

/// `ν` with `ν(p) ⊑ ν(pq)`.
#[derive(Clone)]
pub struct MonotoneMap {
    label: String,
    f: Arc<MapFn>,
}

impl std::fmt::Debug for MonotoneMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "MonotoneMap({})", self.label)
    }
}

impl MonotoneMap {
    pub fn new(label: impl Into<String>, f: impl Fn(&BitString) -> BitString + Send + Sync + 'static) -> Self {
        MonotoneMap { label: label.into(), f: Arc::new(f) }
    }

    pub fn eval(&self, y: &BitString) -> BitString {
        (self.f)(y)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Exhaustive check of `ν(p) ⊑ ν(pb)` for `‖p‖ < depth`; returns the
    /// first offending `(p, pb)`.
    pub fn check_monotone(&self, depth: usize) -> std::result::Result<(), (BitString, BitString)> {
        for p in BitString::all_up_to(depth.saturating_sub(1)) {
            let v = self.eval(&p);
            for b in [false, true] {
                let pb = p.child(b);
                if depth > 0 && !v.is_prefix_of(&self.eval(&pb)) {
                    return Err((p, pb));
                }
            }
        }
        Ok(())
    }

    pub fn identity() -> Self {
        Self::new("identity", |y| y.clone())
    }

    /// Each input bit emitted twice.
    pub fn doubling() -> Self {
        Self::new("doubling", |y| BitString::from_bits(y.iter().flat_map(|b| [b, b])))
    }

    /// Each input bit followed by the parity of the input so far.
    pub fn parity_interleave() -> Self {
        Self::new("interleave", |y| {
            let mut parity = false;
            BitString::from_bits(y.iter().flat_map(|b| {
                parity ^= b;
                [b, parity]
            }))
        })
    }

    /// `y ↦ y⁻`, with ⊥ ↦ ⊥.
    pub fn lag() -> Self {
        Self::new("lag", |y| y.parent().unwrap_or_default())
    }

    /// Drop the first bit.
    pub fn shift() -> Self {
        Self::new("shift", |y| y.suffix_after(1.min(y.len())))
    }

    /// Output of a monotone-mode program run on the input prefix `y`.
    pub fn machine(label: impl Into<String>, program: BitString) -> Self {
        Self::new(label, move |y| run_monotone(&program, y, MACHINE_MAP_STEPS).output_prefix)
    }
}

pub fn map_catalog() -> Vec<MonotoneMap> {
    vec![
        MonotoneMap::identity(),
        MonotoneMap::doubling(),
        MonotoneMap::parity_interleave(),
        MonotoneMap::lag(),
        MonotoneMap::shift(),
        MonotoneMap::machine("machine-identity", identity_program()),
        MonotoneMap::machine("machine-doubling", doubling_program()),
    ]
}

pub fn map_by_label(label: &str) -> Result<MonotoneMap> {
    map_catalog()
        .into_iter()
        .find(|m| m.label() == label)
        .ok_or_else(|| Error::Parse(format!("unknown monotone map {label:?}")))
}

/// `{y : ν(y⁻) ⊏ x ⊑ ν(y), ‖y‖ ≤ depth}` in shortlex order. The empty
/// input has no `y⁻`; it belongs to the set when `x ⊑ ν(⊥)`.
pub fn inverse_set(nu: &MonotoneMap, x: &BitString, depth: usize) -> Vec<BitString> {
    let mut out = Vec::new();
    let mut stack = vec![BitString::new()];
    while let Some(y) = stack.pop() {
        let v = nu.eval(&y);
        if x.is_prefix_of(&v) {
            out.push(y);
        } else if v.is_strict_prefix_of(x) && y.len() < depth {
            stack.push(y.child(true));
            stack.push(y.child(false));
        }
    }
    out.sort();
    out
}

/// `μ(x) = P(inverse_set(ν, x))` for `x ≠ ⊥`, and `μ(⊥) = P(⊥)`, by one
/// forward pass: each `y` adds `P(y)` to the prefixes of `ν(y)` longer
/// than `ν(y⁻)`. Fails if the result is not superadditive.
pub fn image_tree_measure(nu: &MonotoneMap, p: &TreeSemiMeasure) -> Result<TreeSemiMeasure> {
    let mu = image_tree_values(nu, p);
    TreeSemiMeasure::new(format!("{}({})", nu.label(), p.label), p.depth, mu.values)
}

fn image_tree_values(nu: &MonotoneMap, p: &TreeSemiMeasure) -> TreeSemiMeasure {
    let depth = p.depth;
    let images: Vec<BitString> = (0..tree_size(depth)).map(|i| nu.eval(&node_at(i))).collect();
    let mut values = vec![Rational::zero(); tree_size(depth)];
    for (i, v) in images.iter().enumerate() {
        let py = &p.values[i];
        if py.is_zero() {
            continue;
        }
        let lo = if i == 0 { 1 } else { images[(i - 1) / 2].len() + 1 };
        for len in lo..=v.len().min(depth) {
            values[node_index(&v.prefix(len))] += py;
        }
    }
    values[0] = p.values[0].clone();
    TreeSemiMeasure { label: format!("{}({})", nu.label(), p.label), depth, values }
}

/// `(Bt)(y) = t(ν(y))`, read at the deepest stored prefix.
pub fn pullback_test(nu: &MonotoneMap, t: &ElementaryTest) -> Result<ElementaryTest> {
    let values = (0..tree_size(t.depth)).map(|i| t.value(&nu.eval(&node_at(i))).clone()).collect();
    ElementaryTest::new(format!("{}*{}", nu.label(), t.label), t.depth, values)
}

/// `t ≡ 1`, and the ratio tests `uniform/M` and `ones/M`; weight of the
/// `i`th (1-based) is `2^{-i}`.
pub fn test_catalog(m: &TreeSemiMeasure) -> Result<Vec<ElementaryTest>> {
    let depth = m.depth;
    Ok(vec![
        ElementaryTest::constant("one", depth, Rational::one())?,
        ElementaryTest::ratio("ratio-uniform", &uniform(depth)?, m)?,
        ElementaryTest::ratio("ratio-ones", &tree_measure_by_label("ones", depth)?, m)?,
    ])
}

/// `Σ_i 2^{-i} t_i(x)`; its log is the finite stand-in for `I∞`.
pub fn i_inf_sum(tests: &[ElementaryTest], x: &BitString) -> Rational {
    tests
        .iter()
        .enumerate()
        .fold(Rational::zero(), |a, (i, t)| a + pow2(-(i as i64 + 1)) * t.value(x))
}

fn floor_log2_opt(q: &Rational) -> Option<i64> {
    q.is_positive().then(|| floor_log2(q))
}

fn cell(v: Option<i64>) -> String {
    v.map_or_else(|| "-".into(), |v| v.to_string())
}

fn start(experiment: &str, depth: usize) -> Report {
    let mut r = Report::new(experiment, &MachineSpec::reference().version_id);
    r.config("depth", depth);
    r
}

/// Ratio-test masses for levels `1..=max_level`.
pub fn ratio_report(p: &TreeSemiMeasure, m: &TreeSemiMeasure, max_level: u32) -> Result<(Vec<RatioCheck>, Report)> {
    let checks = (1..=max_level).map(|l| ratio_test_check(p, m, l)).collect::<Result<Vec<_>>>()?;
    let mut report = start("continuous-ratio", p.depth);
    report.config("measure", &p.label);
    report.config("mixture", &m.label);
    report.config("levels", format!("1..={max_level}"));
    for c in &checks {
        report.hard_assert(&format!("ratio-level-{}", c.m), c.pass, format!("mass={} bound={}", show(&c.mass), show(&c.bound)));
    }
    report.columns = ["m", "exceed_nodes", "mass", "bound"].map(String::from).to_vec();
    report.rows = checks
        .iter()
        .map(|c| vec![c.m.to_string(), c.exceed.len().to_string(), show(&c.mass), show(&c.bound)])
        .collect();
    Ok((checks, report))
}

#[derive(Debug, Clone)]
pub struct Thm5Row {
    pub x: BitString,
    pub image: BitString,
    pub i_inf_x: Option<i64>,
    pub i_inf_image: Option<i64>,
    pub diff: Option<i64>,
}

#[derive(Debug, Clone)]
pub struct Thm5Check {
    pub image: TreeSemiMeasure,
    /// Power of two `≥ max(1, max μ/M)`.
    pub c: Rational,
    pub rows: Vec<Thm5Row>,
    pub report: Report,
}

/// Pull every catalog test back through `ν`, rescale by `c`, and
/// re-validate against `M`; report `I∞` differences on `prefixes`.
pub fn check_thm5(
    nu: &MonotoneMap,
    tests: &[ElementaryTest],
    m: &TreeSemiMeasure,
    prefixes: &[BitString],
) -> Result<Thm5Check> {
    let depth = m.depth;
    let mut report = start("thm5", depth);
    report.config("map", nu.label());
    report.config("mixture", &m.label);
    report.config("tests", tests.iter().map(|t| t.label.as_str()).collect::<Vec<_>>().join(","));
    report.config("prefixes", prefixes.len());

    for t in tests {
        let v = validate_m_test(t, m)?;
        report.hard_assert(&format!("catalog-test-{}", t.label), v.pass, format!("levels={}", v.levels.len()));
    }
    let image = image_tree_values(nu, m);
    let bad = image.violations();
    report.hard_assert("image-superadditive", bad.is_empty(), format!("violations={}", bad.len()));

    let mut max_ratio = Rational::one();
    for i in 0..tree_size(depth) {
        let (mu, mm) = (&image.values[i], &m.values[i]);
        if mu.is_positive() {
            if mm.is_zero() {
                return Err(Error::ZeroMass(node_at(i)));
            }
            max_ratio = max_ratio.max(mu / mm);
        }
    }
    let c = pow2(ceil_log2(&max_ratio));
    report.note(format!("calibration c={} max_ratio={}", show(&c), show(&max_ratio)));
    let inv_c = c.recip();
    for t in tests {
        let pulled = pullback_test(nu, t)?.scaled(&inv_c, format!("{}*{}/c", nu.label(), t.label))?;
        let v = validate_m_test(&pulled, m)?;
        report.hard_assert(&format!("pullback-{}", t.label), v.pass, format!("levels={}", v.levels.len()));
    }

    let rows: Vec<Thm5Row> = prefixes
        .iter()
        .map(|x| {
            let img = nu.eval(x);
            let i_inf_x = floor_log2_opt(&i_inf_sum(tests, x));
            let i_inf_image = floor_log2_opt(&i_inf_sum(tests, &img));
            let diff = i_inf_image.zip(i_inf_x).map(|(a, b)| a - b);
            Thm5Row { x: x.clone(), image: img.prefix(img.len().min(depth)), i_inf_x, i_inf_image, diff }
        })
        .collect();
    let over = rows.iter().filter(|r| r.diff.is_some_and(|d| d > DEFAULT_SLACK)).count();
    let max = rows.iter().filter_map(|r| r.diff).max();
    report.consistency(
        "i-inf-difference-within-slack",
        over == 0,
        format!("max_diff={} slack={DEFAULT_SLACK} rows_over={over}", cell(max)),
    );
    report.columns = ["x", "nu(x)", "I_inf_x", "I_inf_nu_x", "diff"].map(String::from).to_vec();
    report.rows = rows
        .iter()
        .map(|r| vec![r.x.to_string(), r.image.to_string(), cell(r.i_inf_x), cell(r.i_inf_image), cell(r.diff)])
        .collect();
    Ok(Thm5Check { image, c, rows, report })
}

#[derive(Debug, Clone)]
pub struct Thm6Row {
    pub x: BitString,
    pub image: BitString,
    pub d_p: Option<i64>,
    pub d_bp: Option<i64>,
    pub i_inf: Option<i64>,
    /// `D_{BP}(ν(x)) − D_P(x)`.
    pub diff: Option<i64>,
}

#[derive(Debug, Clone)]
pub struct Thm6Check {
    pub test: ElementaryTest,
    pub validation: MTestCheck,
    pub rows: Vec<Thm6Row>,
    pub report: Report,
}

/// Build `t(y) = max_{y'⊑y} P(y') M(ν(y')) / (M(y') BP(ν(y')))`, with
/// `ν(y')` cut to the tree depth, and validate it as an `M`-test. Rows are
/// the leaves.
pub fn check_thm6(
    nu: &MonotoneMap,
    p: &TreeSemiMeasure,
    m: &TreeSemiMeasure,
    tests: &[ElementaryTest],
) -> Result<Thm6Check> {
    if p.depth != m.depth {
        return Err(Error::DepthMismatch(p.depth, m.depth));
    }
    let depth = p.depth;
    let mut report = start("thm6", depth);
    report.config("map", nu.label());
    report.config("measure", &p.label);
    report.config("mixture", &m.label);

    let bp = image_tree_values(nu, p);
    let bad = bp.violations();
    report.hard_assert("image-superadditive", bad.is_empty(), format!("violations={}", bad.len()));

    let images: Vec<BitString> = (0..tree_size(depth))
        .map(|i| {
            let v = nu.eval(&node_at(i));
            v.prefix(v.len().min(depth))
        })
        .collect();
    let mut values: Vec<Rational> = Vec::with_capacity(images.len());
    for (i, z) in images.iter().enumerate() {
        let here = if p.values[i].is_zero() {
            Rational::zero()
        } else {
            let (mz, bpz, my) = (m.value(z), bp.value(z), &m.values[i]);
            if my.is_zero() {
                return Err(Error::ZeroMass(node_at(i)));
            }
            if bpz.is_zero() {
                return Err(Error::ZeroMass(z.clone()));
            }
            &p.values[i] * mz / (my * bpz)
        };
        values.push(if i == 0 { here } else { values[(i - 1) / 2].clone().max(here) });
    }
    let test = ElementaryTest::new(format!("thm6[{}]", nu.label()), depth, values)?;
    let validation = validate_m_test(&test, m)?;
    report.hard_assert("thm6-test-is-m-test", validation.pass, format!("levels={}", validation.levels.len()));

    let d_p = deficiency_tree(p, m)?;
    let d_bp = deficiency_tree(&bp, m)?;
    let lg = |v: &Option<Rational>| v.as_ref().and_then(floor_log2_opt);
    let first_leaf = if depth == 0 { 0 } else { tree_size(depth - 1) };
    let rows: Vec<Thm6Row> = (first_leaf..tree_size(depth))
        .map(|i| {
            let x = node_at(i);
            let z = &images[i];
            let (dp, dbp) = (lg(&d_p[i]), lg(&d_bp[node_index(z)]));
            let i_inf = floor_log2_opt(&i_inf_sum(tests, &x));
            Thm6Row { x, image: z.clone(), d_p: dp, d_bp: dbp, i_inf, diff: dbp.zip(dp).map(|(a, b)| a - b) }
        })
        .collect();
    let gaps: Vec<i64> = rows.iter().filter_map(|r| Some(r.diff? - r.i_inf?)).collect();
    let over = gaps.iter().filter(|&&g| g > DEFAULT_SLACK).count();
    report.consistency(
        "deficiency-gap-within-slack",
        over == 0,
        format!("max_gap={} slack={DEFAULT_SLACK} rows_over={over}", cell(gaps.iter().max().copied())),
    );
    report.columns = ["x", "nu(x)", "D_P", "D_BP", "diff", "I_inf"].map(String::from).to_vec();
    report.rows = rows
        .iter()
        .map(|r| vec![r.x.to_string(), r.image.to_string(), cell(r.d_p), cell(r.d_bp), cell(r.diff), cell(r.i_inf)])
        .collect();
    Ok(Thm6Check { test, validation, rows, report })
}
