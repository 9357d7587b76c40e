//! Exhaustive enumeration of the halting domain within a budget, and the
//! resource-bounded quantities read off the resulting table.
//!
//! The search walks the binary tree of program prefixes. A node is a machine
//! suspended on a bit request; its two children are clones fed 0 and 1.
//! Halted nodes are leaves (no proper extension is in the domain), and so are
//! budget-exhausted ones. Requests past `max_len` are pruned.
//!
//! Subtrees below a fixed split depth are explored in parallel; the merged
//! records are sorted in shortlex program order, so a table is a pure
//! function of `(machine, budget)` whatever the schedule.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

use num_traits::Zero;
use rayon::prelude::*;

use crate::bits::{pair_encode, BitString};
use crate::error::{Error, Result};
use crate::exact::{dyadic, Rational};
use crate::machine::{Event, Machine, MachineSpec};

/// Longest program length the enumerator accepts.
pub const MAX_PROGRAM_LEN: usize = 40;
/// Default cap on the number of halting records.
pub const DEFAULT_RECORD_CAP: u64 = 1 << 24;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Budget {
    pub max_len: usize,
    pub max_steps: u64,
    pub aux: BitString,
}

impl Budget {
    pub fn new(max_len: usize, max_steps: u64) -> Self {
        Budget { max_len, max_steps, aux: BitString::new() }
    }

    pub fn with_aux(mut self, aux: BitString) -> Self {
        self.aux = aux;
        self
    }

    /// Same length and aux, `max_steps` halved (rounded down).
    pub fn half_steps(&self) -> Budget {
        Budget { max_steps: self.max_steps / 2, ..self.clone() }
    }

    /// Componentwise order: every program counted here is counted there.
    pub fn dominated_by(&self, other: &Budget) -> bool {
        self.max_len <= other.max_len && self.max_steps <= other.max_steps && self.aux == other.aux
    }
}

impl fmt::Display for Budget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "max_len={} max_steps={} aux={}", self.max_len, self.max_steps, self.aux)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EnumConfig {
    pub record_cap: u64,
    /// Prefix depth at which work is handed to the thread pool.
    pub split_depth: usize,
}

impl Default for EnumConfig {
    fn default() -> Self {
        EnumConfig { record_cap: DEFAULT_RECORD_CAP, split_depth: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Record {
    pub program: BitString,
    pub output: BitString,
    pub steps: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct OutputStats {
    min_len: u32,
    // Σ 2^(max_len - ‖p‖) over programs printing this output.
    weight: u128,
}

/// Every halting `(program, output, steps)` within a budget, in shortlex
/// program order.
#[derive(Debug, Clone)]
pub struct EnumerationTable {
    version_id: String,
    budget: Budget,
    records: Vec<Record>,
    by_output: HashMap<BitString, OutputStats>,
}

impl EnumerationTable {
    /// Build from records (any order). Used by enumeration and cache replay.
    pub fn from_records(version_id: String, budget: Budget, mut records: Vec<Record>) -> Self {
        records.sort_by(|a, b| a.program.cmp(&b.program));
        let mut by_output: HashMap<BitString, OutputStats> = HashMap::new();
        for r in &records {
            let len = r.program.len() as u32;
            let w = 1u128 << (budget.max_len as u32 - len);
            by_output
                .entry(r.output.clone())
                .and_modify(|s| {
                    s.min_len = s.min_len.min(len);
                    s.weight += w;
                })
                .or_insert(OutputStats { min_len: len, weight: w });
        }
        EnumerationTable { version_id, budget, records, by_output }
    }

    pub fn version_id(&self) -> &str {
        &self.version_id
    }

    pub fn budget(&self) -> &Budget {
        &self.budget
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Distinct outputs, in shortlex order.
    pub fn outputs(&self) -> Vec<BitString> {
        let mut v: Vec<_> = self.by_output.keys().cloned().collect();
        v.sort();
        v
    }

    /// `Σ 2^{-‖p‖}` over all records.
    pub fn kraft_sum(&self) -> Rational {
        let w: u128 = self.by_output.values().map(|s| s.weight).sum();
        dyadic(w, self.budget.max_len as u32)
    }

    /// `K_t(x)`: shortest program printing `x`, `None` when there is none.
    pub fn k_approx(&self, x: &BitString) -> Option<u32> {
        self.by_output.get(x).map(|s| s.min_len)
    }

    /// `m_t(x) = Σ_{U(p)=x} 2^{-‖p‖}`.
    pub fn m_approx(&self, x: &BitString) -> Rational {
        match self.by_output.get(x) {
            Some(s) => dyadic(s.weight, self.budget.max_len as u32),
            None => Rational::zero(),
        }
    }

    /// `Ω_t = Σ_{x≠⊥} m_t(x)`.
    pub fn omega_approx(&self) -> Rational {
        dyadic(self.omega_weight(), self.budget.max_len as u32)
    }

    fn omega_weight(&self) -> u128 {
        self.by_output.iter().filter(|(x, _)| !x.is_empty()).map(|(_, s)| s.weight).sum()
    }

    /// First `c` bits of the binary expansion of [`Self::omega_approx`].
    pub fn omega_prefix(&self, c: usize) -> BitString {
        let l = self.budget.max_len;
        let w = self.omega_weight();
        // ⌊Ω·2^c⌋ = ⌊w·2^c / 2^l⌋, written out as c bits.
        let mut out = BitString::with_capacity(c);
        for i in 1..=c {
            let bit = if i <= l { (w >> (l - i)) & 1 == 1 } else { false };
            out.push(bit);
        }
        out
    }

    /// `H_t` prefix: bit `i` is 1 iff the `i`-th string in shortlex order is
    /// a halting program of this table.
    pub fn halting_oracle(&self, prefix_len: usize) -> BitString {
        let halting: HashSet<u64> = self
            .records
            .iter()
            .filter(|r| r.program.len() < 64)
            .map(|r| r.program.canonical_index())
            .collect();
        BitString::from_bits((0..prefix_len as u64).map(|i| halting.contains(&i)))
    }

    /// `K_t(⟨x⟩⟨y⟩)`.
    pub fn joint_k(&self, x: &BitString, y: &BitString) -> Option<u32> {
        self.k_approx(&pair_encode(x, y))
    }

    /// Every record here appears, identically, in `other`.
    pub fn is_subset_of(&self, other: &EnumerationTable) -> bool {
        let theirs: HashMap<&BitString, &Record> =
            other.records.iter().map(|r| (&r.program, r)).collect();
        self.records.iter().all(|r| theirs.get(&r.program).is_some_and(|o| *o == r))
    }

    /// No record's program is a proper prefix of another's.
    pub fn is_prefix_free(&self) -> bool {
        let programs: HashSet<&BitString> = self.records.iter().map(|r| &r.program).collect();
        self.records.iter().all(|r| {
            (0..r.program.len()).all(|n| !programs.contains(&r.program.prefix(n)))
        })
    }
}

fn k_or_undefined(table: &EnumerationTable, x: &BitString) -> Result<i64> {
    table.k_approx(x).map(i64::from).ok_or_else(|| Error::Undefined(format!("K({x}) is infinite")))
}

/// `I(x:y) = K(x) + K(y) − K(x,y)`, exact integer at this stage.
pub fn mutual_info(x: &BitString, y: &BitString, table: &EnumerationTable) -> Result<i64> {
    let kxy = k_or_undefined(table, &pair_encode(x, y))?;
    Ok(k_or_undefined(table, x)? + k_or_undefined(table, y)? - kxy)
}

/// `I(x;H) = K(x) − K(x|H)`; the second table must be enumerated with an
/// `H_t` prefix on the aux tape. May be negative at finite stages.
pub fn info_with_oracle(
    x: &BitString,
    table_plain: &EnumerationTable,
    table_with_h: &EnumerationTable,
) -> Result<i64> {
    Ok(k_or_undefined(table_plain, x)? - k_or_undefined(table_with_h, x)?)
}

/// Ω prefix with a stability flag against the half-step-budget table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OmegaPrefix {
    pub bits: BitString,
    pub converged: bool,
}

impl OmegaPrefix {
    pub fn from_tables(c: usize, table: &EnumerationTable, half: &EnumerationTable) -> Self {
        let bits = table.omega_prefix(c);
        let converged = half.omega_prefix(c) == bits;
        OmegaPrefix { bits, converged }
    }

    /// Enumerate at `budget` and at half its step budget.
    pub fn compute(c: usize, budget: &Budget) -> Result<(Self, EnumerationTable)> {
        let table = enumerate(budget)?;
        let half = enumerate(&budget.half_steps())?;
        Ok((Self::from_tables(c, &table, &half), table))
    }
}

pub fn enumerate(budget: &Budget) -> Result<EnumerationTable> {
    enumerate_with(budget, &EnumConfig::default())
}

struct Search<'a> {
    budget: &'a Budget,
    cap: u64,
    found: &'a AtomicU64,
}

impl Search<'_> {
    fn emit(&self, out: &mut Vec<Record>, program: &BitString, m: &Machine) -> Result<()> {
        if self.found.fetch_add(1, Ordering::Relaxed) + 1 > self.cap {
            return Err(Error::ResourceLimit {
                what: format!("halting records at {}", self.budget),
                limit: self.cap,
            });
        }
        out.push(Record { program: program.clone(), output: m.output().clone(), steps: m.steps() });
        Ok(())
    }

    /// Depth-first search below `prefix`. Nodes whose prefix reaches
    /// `stop_at` without a verdict are pushed to `frontier` instead.
    fn explore<'m>(
        &self,
        mut m: Machine<'m>,
        prefix: &mut BitString,
        stop_at: usize,
        out: &mut Vec<Record>,
        frontier: &mut Vec<(Machine<'m>, BitString)>,
    ) -> Result<()> {
        match m.resume() {
            Event::Halted => self.emit(out, prefix, &m),
            Event::Exhausted | Event::Diverged => Ok(()),
            Event::NeedBit(_) if prefix.len() >= self.budget.max_len => Ok(()),
            Event::NeedBit(_) if prefix.len() >= stop_at => {
                frontier.push((m, prefix.clone()));
                Ok(())
            }
            Event::NeedBit(_) => {
                let mut zero = m.clone();
                zero.feed(false);
                prefix.push(false);
                self.explore(zero, prefix, stop_at, out, frontier)?;
                prefix.pop();
                m.feed(true);
                prefix.push(true);
                self.explore(m, prefix, stop_at, out, frontier)?;
                prefix.pop();
                Ok(())
            }
        }
    }
}

/// Enumerate every program of length `≤ max_len` that halts within
/// `max_steps` on the budget's aux tape.
pub fn enumerate_with(budget: &Budget, config: &EnumConfig) -> Result<EnumerationTable> {
    if budget.max_len > MAX_PROGRAM_LEN {
        return Err(Error::ResourceLimit {
            what: format!("program length {}", budget.max_len),
            limit: MAX_PROGRAM_LEN as u64,
        });
    }
    let found = AtomicU64::new(0);
    let search = Search { budget, cap: config.record_cap, found: &found };
    let mut records = Vec::new();
    let mut frontier = Vec::new();
    let root = Machine::new(&budget.aux, budget.max_steps);
    search.explore(root, &mut BitString::new(), config.split_depth, &mut records, &mut frontier)?;

    let rest: Vec<Vec<Record>> = frontier
        .into_par_iter()
        .map(|(m, mut prefix)| {
            let mut out = Vec::new();
            let mut none = Vec::new();
            search.explore(m, &mut prefix, usize::MAX, &mut out, &mut none)?;
            Ok(out)
        })
        .collect::<Result<_>>()?;
    records.extend(rest.into_iter().flatten());
    Ok(EnumerationTable::from_records(
        MachineSpec::reference().version_id.clone(),
        budget.clone(),
        records,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::bits;
    use crate::exact::ratio;
    use crate::machine::{run, Outcome};
    use num_traits::One;

    // Independent oracle: run every bit string of length <= L from scratch.
    fn brute_force(budget: &Budget) -> Vec<Record> {
        BitString::all_up_to(budget.max_len)
            .filter_map(|p| {
                let r = run(&p, &budget.aux, budget.max_steps);
                (r.outcome == Outcome::Halted && r.bits_consumed == p.len())
                    .then(|| Record { program: p, output: r.output, steps: r.steps })
            })
            .collect()
    }

    #[test]
    fn matches_brute_force() {
        for (l, t) in [(0, 10), (3, 0), (6, 5), (9, 50), (12, 1000)] {
            let b = Budget::new(l, t);
            let table = enumerate(&b).unwrap();
            assert_eq!(table.records(), brute_force(&b).as_slice(), "L={l} T={t}");
        }
        let b = Budget::new(11, 200).with_aux(bits("10110"));
        assert_eq!(enumerate(&b).unwrap().records(), brute_force(&b).as_slice());
    }

    #[test]
    fn empty_length_budget() {
        let t = enumerate(&Budget::new(0, 100)).unwrap();
        assert!(t.len() <= 1);
        assert_eq!(t.k_approx(&BitString::new()), None);
        assert_eq!(t.m_approx(&BitString::new()), Rational::zero());
        assert_eq!(t.omega_approx(), Rational::zero());
        assert_eq!(t.omega_prefix(4), BitString::zeros(4));
    }

    #[test]
    fn bottom_has_the_halt_program() {
        let t = enumerate(&Budget::new(12, 1000)).unwrap();
        assert_eq!(t.k_approx(&BitString::new()), Some(3));
        assert_eq!(t.k_approx(&bits("0")), Some(6));
        assert!(t.m_approx(&BitString::new()) >= ratio(1, 8));
    }

    #[test]
    fn superset_under_larger_budget() {
        let small = enumerate(&Budget::new(10, 100)).unwrap();
        let big = enumerate(&Budget::new(11, 200)).unwrap();
        assert!(small.is_subset_of(&big));
        assert!(!big.is_subset_of(&small));
    }

    #[test]
    fn kraft_and_omega_bounds() {
        let t = enumerate(&Budget::new(14, 1000)).unwrap();
        assert!(t.is_prefix_free());
        assert!(t.omega_approx() <= t.kraft_sum());
        assert!(t.kraft_sum() <= Rational::one());
    }

    #[test]
    fn record_cap_is_enforced() {
        let cfg = EnumConfig { record_cap: 5, ..EnumConfig::default() };
        let err = enumerate_with(&Budget::new(12, 100), &cfg).unwrap_err();
        assert!(matches!(err, Error::ResourceLimit { limit: 5, .. }));
        assert!(matches!(
            enumerate(&Budget::new(MAX_PROGRAM_LEN + 1, 1)),
            Err(Error::ResourceLimit { .. })
        ));
    }

    #[test]
    fn halting_oracle_layout() {
        let t = enumerate(&Budget::new(9, 100)).unwrap();
        assert_eq!(t.halting_oracle(0), BitString::new());
        let h = t.halting_oracle(20);
        // Only "000" (index 7) halts among strings of length <= 4.
        let ones: Vec<_> = (0..20).filter(|&i| h.get(i) == Some(true)).collect();
        assert_eq!(ones, vec![7]);
    }

    #[test]
    fn information_quantities_need_finite_complexities() {
        let empty = EnumerationTable::from_records("x".into(), Budget::new(4, 4), vec![]);
        assert!(matches!(mutual_info(&bits("0"), &bits("1"), &empty), Err(Error::Undefined(_))));
        assert!(matches!(
            info_with_oracle(&bits("0"), &empty, &empty),
            Err(Error::Undefined(_))
        ));
        assert_eq!(empty.joint_k(&bits("0"), &bits("1")), None);
    }

    #[test]
    fn omega_prefix_reads_binary_expansion() {
        let recs = vec![
            Record { program: bits("00"), output: bits("1"), steps: 0 },
            Record { program: bits("010"), output: bits("0"), steps: 0 },
            Record { program: bits("1"), output: BitString::new(), steps: 0 },
        ];
        let t = EnumerationTable::from_records("x".into(), Budget::new(3, 1), recs);
        // Ω = 1/4 + 1/8 = 0.011b
        assert_eq!(t.omega_approx(), ratio(3, 8));
        assert_eq!(t.omega_prefix(5), bits("01100"));
        assert_eq!(t.kraft_sum(), ratio(7, 8));
    }
}
