//! Discrete semi-measures, image measures, randomness deficiency and tests.
//!
//! Mass at ⊥ is never counted toward a semi-measure's total; partial maps
//! that send mass there record it as `lost_mass` so the bookkeeping can be
//! audited (`mass(image) + lost = mass(source)` holds exactly).

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::bits::{pair_encode, BitString};
use crate::enumeration::EnumerationTable;
use crate::error::{Error, Result};
use crate::exact::{code_length, pow2, show, Rational};
use crate::staged::Evaluable;

/// Largest `n` accepted by [`uniform_n`].
pub const MAX_UNIFORM_LEN: usize = 24;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiscreteSemiMeasure {
    pub label: String,
    pub description_cost: u32,
    support: BTreeMap<BitString, Rational>,
    lost_mass: Rational,
}

impl DiscreteSemiMeasure {
    /// Zero entries are dropped; an entry at ⊥ becomes lost mass.
    pub fn new(
        label: impl Into<String>,
        description_cost: u32,
        entries: impl IntoIterator<Item = (BitString, Rational)>,
    ) -> Result<Self> {
        let label = label.into();
        let mut support = BTreeMap::new();
        let mut lost_mass = Rational::zero();
        for (x, v) in entries {
            if v.is_negative() {
                return Err(Error::NotSemiMeasure(format!("{label}: negative value at {x}")));
            }
            if v.is_zero() {
                continue;
            }
            if x.is_empty() {
                lost_mass += v;
            } else {
                *support.entry(x).or_insert_with(Rational::zero) += v;
            }
        }
        let m = Self { label, description_cost, support, lost_mass };
        if m.mass() > Rational::one() {
            return Err(Error::NotSemiMeasure(format!("{}: total mass {}", m.label, m.mass())));
        }
        Ok(m)
    }

    /// `p(x)`; at ⊥ this is the lost mass.
    pub fn value(&self, x: &BitString) -> Rational {
        if x.is_empty() {
            return self.lost_mass.clone();
        }
        self.support.get(x).cloned().unwrap_or_else(Rational::zero)
    }

    /// `Σ_{x≠⊥} p(x)`.
    pub fn mass(&self) -> Rational {
        self.support.values().fold(Rational::zero(), |a, v| a + v)
    }

    pub fn lost_mass(&self) -> &Rational {
        &self.lost_mass
    }

    pub fn support(&self) -> impl Iterator<Item = (&BitString, &Rational)> {
        self.support.iter()
    }

    pub fn support_len(&self) -> usize {
        self.support.len()
    }

    /// `label cost` header, then `x num den` lines in shortlex order; the
    /// lost mass, when nonzero, is the `eps` line.
    pub fn to_text(&self) -> String {
        let mut s = format!("measure {} {}\n", self.label, self.description_cost);
        if !self.lost_mass.is_zero() {
            let _ = writeln!(s, "eps {} {}", self.lost_mass.numer(), self.lost_mass.denom());
        }
        for (x, v) in &self.support {
            let _ = writeln!(s, "{x} {} {}", v.numer(), v.denom());
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("empty measure".into()))?;
        let mut h = header.split_whitespace();
        let (Some("measure"), Some(label), Some(cost)) = (h.next(), h.next(), h.next()) else {
            return Err(Error::Parse(format!("bad measure header {header:?}")));
        };
        let cost = cost.parse().map_err(|_| Error::Parse(format!("bad cost {cost:?}")))?;
        let entries = lines.map(parse_entry).collect::<Result<Vec<_>>>()?;
        Self::new(label, cost, entries)
    }
}

fn parse_entry(line: &str) -> Result<(BitString, Rational)> {
    let parts: Vec<_> = line.split_whitespace().collect();
    let [x, n, d] = parts[..] else {
        return Err(Error::Parse(format!("bad entry {line:?}")));
    };
    let num: BigInt = n.parse().map_err(|_| Error::Parse(format!("bad numerator {n:?}")))?;
    let den: BigInt = d.parse().map_err(|_| Error::Parse(format!("bad denominator {d:?}")))?;
    if den.is_zero() {
        return Err(Error::Parse(format!("zero denominator in {line:?}")));
    }
    Ok((x.parse()?, Rational::new(num, den)))
}

/// `p(x) = [‖x‖ = n] 2^{-n}`.
pub fn uniform_n(n: usize) -> Result<DiscreteSemiMeasure> {
    if n > MAX_UNIFORM_LEN {
        return Err(Error::ResourceLimit {
            what: format!("uniform measure over {n}-bit strings"),
            limit: MAX_UNIFORM_LEN as u64,
        });
    }
    if n == 0 {
        return Err(Error::Undefined("uniform measure needs n >= 1".into()));
    }
    let w = pow2(-(n as i64));
    DiscreteSemiMeasure::new(
        format!("uniform:{n}"),
        1 + usize::BITS - n.leading_zeros(),
        BitString::all_of_length(n).map(|x| (x, w.clone())),
    )
}

/// Look up a measure by catalog label (`uniform:<n>`).
pub fn measure_by_label(label: &str) -> Result<DiscreteSemiMeasure> {
    let n = label
        .strip_prefix("uniform:")
        .and_then(|n| n.parse().ok())
        .ok_or_else(|| Error::Parse(format!("unknown measure {label:?}")))?;
    uniform_n(n)
}

/// `(fp)(y) = Σ_{f(x)=y} p(x)`; mass mapped to ⊥ accumulates as lost mass.
pub fn image_measure(f: &dyn Evaluable, p: &DiscreteSemiMeasure) -> DiscreteSemiMeasure {
    let mut support: BTreeMap<BitString, Rational> = BTreeMap::new();
    let mut lost_mass = p.lost_mass.clone();
    for (x, v) in &p.support {
        let y = f.eval(x);
        if y.is_empty() {
            lost_mass += v;
        } else {
            *support.entry(y).or_insert_with(Rational::zero) += v;
        }
    }
    DiscreteSemiMeasure {
        label: format!("{}({})", f.label(), p.label),
        description_cost: p.description_cost + f.description_cost(),
        support,
        lost_mass,
    }
}

/// `d_p(x) = ⌈−log p(x)⌉ − K(x)`, and `d_p(⊥) = 0`.
pub fn deficiency(p: &DiscreteSemiMeasure, x: &BitString, table: &EnumerationTable) -> Result<i64> {
    if x.is_empty() {
        return Ok(0);
    }
    let px = p.value(x);
    if px.is_zero() {
        return Err(Error::ZeroMass(x.clone()));
    }
    let k = table.k_approx(x).ok_or_else(|| Error::NoProgram(x.clone()))?;
    Ok(code_length(&px) - i64::from(k))
}

/// Nonnegative function on strings; absent entries are 0.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DiscreteTest {
    pub label: String,
    values: BTreeMap<BitString, Rational>,
}

impl DiscreteTest {
    pub fn new(label: impl Into<String>, values: impl IntoIterator<Item = (BitString, Rational)>) -> Self {
        DiscreteTest { label: label.into(), values: values.into_iter().collect() }
    }

    pub fn constant(label: impl Into<String>, value: Rational, domain: &[BitString]) -> Self {
        Self::new(label, domain.iter().map(|x| (x.clone(), value.clone())))
    }

    pub fn value(&self, x: &BitString) -> Rational {
        self.values.get(x).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&BitString, &Rational)> {
        self.values.iter()
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("test {}\n", self.label);
        for (x, v) in &self.values {
            let _ = writeln!(s, "{x} {} {}", v.numer(), v.denom());
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().unwrap_or_default();
        let label = header
            .strip_prefix("test ")
            .ok_or_else(|| Error::Parse(format!("bad test header {header:?}")))?;
        let entries = lines.map(parse_entry).collect::<Result<Vec<_>>>()?;
        Ok(Self::new(label, entries))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestVerdict {
    /// `Σ_{x≠⊥} p(x) t(x)` over the domain.
    pub sum: Rational,
    pub pass: bool,
}

/// Exact `p`-test check over a finite domain covering `support(p)`.
pub fn verify_test(p: &DiscreteSemiMeasure, t: &DiscreteTest, domain: &[BitString]) -> TestVerdict {
    let sum = domain
        .iter()
        .filter(|x| !x.is_empty())
        .fold(Rational::zero(), |acc, x| acc + p.value(x) * t.value(x));
    let pass = sum <= Rational::one();
    TestVerdict { sum, pass }
}

/// Same check against the table's `m_t` as the measure.
pub fn verify_m_test(table: &EnumerationTable, t: &DiscreteTest) -> TestVerdict {
    let sum = t
        .entries()
        .filter(|(x, _)| !x.is_empty())
        .fold(Rational::zero(), |acc, (x, v)| acc + table.m_approx(x) * v);
    let pass = sum <= Rational::one();
    TestVerdict { sum, pass }
}

/// A test together with the entries where its formula had a zero
/// denominator (those entries are absent from the test).
#[derive(Debug, Clone)]
pub struct BuiltTest {
    pub test: DiscreteTest,
    pub zero_denominators: Vec<BitString>,
}

/// `t(x) = m(B(x)) p(x) / (m(x) Bp(B(x)))` on `support(p)`; 0 where
/// `B(x) = ⊥`.
pub fn thm1_test(p: &DiscreteSemiMeasure, f: &dyn Evaluable, table: &EnumerationTable) -> BuiltTest {
    let image = image_measure(f, p);
    let mut values = BTreeMap::new();
    let mut zero_denominators = Vec::new();
    for (x, px) in p.support() {
        let y = f.eval(x);
        if y.is_empty() {
            values.insert(x.clone(), Rational::zero());
            continue;
        }
        let mx = table.m_approx(x);
        let bpy = image.value(&y);
        if mx.is_zero() || bpy.is_zero() {
            zero_denominators.push(x.clone());
            continue;
        }
        values.insert(x.clone(), table.m_approx(&y) * px / (mx * bpy));
    }
    BuiltTest { test: DiscreteTest::new(format!("thm1[{}]", image.label), values), zero_denominators }
}

/// Test over pairs scaled by a measured constant `c`.
#[derive(Debug, Clone)]
pub struct CalibratedPairTest {
    pub label: String,
    pub uncalibrated: BTreeMap<(BitString, BitString), Rational>,
    pub c: Rational,
    /// `Σ m(x,y) t(x,y)` of the calibrated test over the domain.
    pub sum: Rational,
    pub zero_denominators: Vec<(BitString, BitString)>,
}

impl CalibratedPairTest {
    pub fn value(&self, x: &BitString, y: &BitString) -> Option<Rational> {
        self.uncalibrated.get(&(x.clone(), y.clone())).map(|v| v * &self.c)
    }
}

/// `t(x,y) = c·m(B(x),y) m(x) / (m(x,y) m(B(x)))` with `c` chosen so that
/// `Σ m(x,y) t(x,y) = 1` exactly over `pairs`. Joint `m` is taken at
/// `⟨x⟩⟨y⟩`.
pub fn thm3_test(
    f: &dyn Evaluable,
    table: &EnumerationTable,
    pairs: &[(BitString, BitString)],
) -> Result<CalibratedPairTest> {
    let m = |z: &BitString| table.m_approx(z);
    let mut uncalibrated = BTreeMap::new();
    let mut zero_denominators = Vec::new();
    let mut raw_sum = Rational::zero();
    for (x, y) in pairs {
        let bx = f.eval(x);
        let mxy = m(&pair_encode(x, y));
        let mbx = m(&bx);
        if mxy.is_zero() || mbx.is_zero() {
            zero_denominators.push((x.clone(), y.clone()));
            continue;
        }
        let t = m(&pair_encode(&bx, y)) * m(x) / (&mxy * mbx);
        raw_sum += &mxy * &t;
        uncalibrated.insert((x.clone(), y.clone()), t);
    }
    if raw_sum.is_zero() {
        return Err(Error::Undefined(format!("thm3 test for {} has zero total weight", f.label())));
    }
    let c = raw_sum.recip();
    let sum = uncalibrated
        .iter()
        .fold(Rational::zero(), |acc, ((x, y), t)| acc + m(&pair_encode(x, y)) * t * &c);
    Ok(CalibratedPairTest {
        label: format!("thm3[{}]", f.label()),
        uncalibrated,
        c,
        sum,
        zero_denominators,
    })
}

#[derive(Debug, Clone)]
pub struct CalibratedSemiMeasure {
    pub measure: DiscreteSemiMeasure,
    pub uncalibrated_sum: Rational,
    pub c: Rational,
    pub zero_denominators: Vec<BitString>,
}

/// `s(x) = c·m(f(x)|H) m(x) / m(f(x))` (0 where `f(x) = ⊥`), with `c`
/// normalising the sum over `domain` to exactly 1.
pub fn thm4_semimeasure(
    f: &dyn Evaluable,
    table_plain: &EnumerationTable,
    table_with_h: &EnumerationTable,
    domain: &[BitString],
) -> Result<CalibratedSemiMeasure> {
    let mut raw = Vec::new();
    let mut zero_denominators = Vec::new();
    for x in domain.iter().filter(|x| !x.is_empty()) {
        let fx = f.eval(x);
        if fx.is_empty() {
            continue;
        }
        let mfx = table_plain.m_approx(&fx);
        if mfx.is_zero() {
            zero_denominators.push(x.clone());
            continue;
        }
        raw.push((x.clone(), table_with_h.m_approx(&fx) * table_plain.m_approx(x) / mfx));
    }
    let uncalibrated_sum = raw.iter().fold(Rational::zero(), |a, (_, v)| a + v);
    if uncalibrated_sum.is_zero() {
        return Err(Error::Undefined(format!("thm4 measure for {} has zero mass", f.label())));
    }
    let c = uncalibrated_sum.recip();
    let measure = DiscreteSemiMeasure::new(
        format!("thm4[{}]", f.label()),
        f.description_cost(),
        raw.into_iter().map(|(x, v)| (x, v * &c)),
    )?;
    Ok(CalibratedSemiMeasure { measure, uncalibrated_sum, c, zero_denominators })
}

/// `⌈−log q⌉` rendered for reports, `-` for zero.
pub fn code_length_or_dash(q: &Rational) -> String {
    if q.is_positive() {
        code_length(q).to_string()
    } else {
        "-".into()
    }
}

/// Render a rational for reports.
pub fn show_rational(q: &Rational) -> String {
    show(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::bits;
    use crate::enumeration::{enumerate, Budget, Record};
    use crate::exact::ratio;
    use crate::staged::{thm2_b, TotalFunction};
    use std::collections::HashMap;
    use std::sync::OnceLock;

    fn desk_table() -> &'static EnumerationTable {
        static T: OnceLock<EnumerationTable> = OnceLock::new();
        T.get_or_init(|| enumerate(&Budget::new(18, 100_000)).unwrap())
    }

    // Oracle: m and K straight from the record list, no index.
    fn scan_m(table: &EnumerationTable) -> HashMap<BitString, (Rational, u32)> {
        let mut out: HashMap<BitString, (Rational, u32)> = HashMap::new();
        for Record { program, output, .. } in table.records() {
            let w = pow2(-(program.len() as i64));
            let e = out.entry(output.clone()).or_insert((Rational::zero(), u32::MAX));
            e.0 += w;
            e.1 = e.1.min(program.len() as u32);
        }
        out
    }

    #[test]
    fn uniform_examples() {
        let u1 = uniform_n(1).unwrap();
        assert_eq!(u1.value(&bits("0")), ratio(1, 2));
        assert_eq!(u1.value(&bits("1")), ratio(1, 2));
        let u2 = uniform_n(2).unwrap();
        assert_eq!(u2.support_len(), 4);
        assert!(u2.support().all(|(_, v)| *v == ratio(1, 4)));
        assert_eq!(uniform_n(10).unwrap().mass(), Rational::one());
        assert!(matches!(uniform_n(25), Err(Error::ResourceLimit { .. })));
        assert_eq!(measure_by_label("uniform:3").unwrap(), uniform_n(3).unwrap());
    }

    #[test]
    fn rejects_overfull_measures() {
        let e = DiscreteSemiMeasure::new("x", 0, [(bits("0"), ratio(3, 4)), (bits("1"), ratio(1, 2))]);
        assert!(matches!(e, Err(Error::NotSemiMeasure(_))));
        let e = DiscreteSemiMeasure::new("x", 0, [(bits("0"), ratio(-1, 4))]);
        assert!(matches!(e, Err(Error::NotSemiMeasure(_))));
        // Mass at ⊥ does not count.
        let ok = DiscreteSemiMeasure::new("x", 0, [(bits(""), ratio(1, 2)), (bits("1"), ratio(1, 1))]);
        assert_eq!(ok.unwrap().lost_mass(), &ratio(1, 2));
    }

    #[test]
    fn image_examples() {
        let p = uniform_n(3).unwrap();
        assert_eq!(image_measure(&TotalFunction::identity(), &p).support, p.support);
        let gone = image_measure(&TotalFunction::bottom(), &p);
        assert_eq!(gone.support_len(), 0);
        assert_eq!(gone.lost_mass(), &p.mass());

        let b = thm2_b(1, 1, vec![bits("1")]).unwrap().at_stage(0);
        let img = image_measure(&b, &uniform_n(2).unwrap());
        let expect: BTreeMap<_, _> = [("00", 1), ("0", 1), ("10", 1), ("1", 1)]
            .into_iter()
            .map(|(s, n)| (bits(s), ratio(n, 4)))
            .collect();
        assert_eq!(img.support, expect);
        assert!(img.lost_mass().is_zero());
    }

    #[test]
    fn mass_conservation_for_catalog_functions() {
        for f in crate::staged::function_catalog() {
            for n in 1..=12 {
                let p = uniform_n(n).unwrap();
                let img = image_measure(&f, &p);
                assert_eq!(img.mass() + img.lost_mass(), p.mass(), "{} n={n}", f.label());
            }
        }
    }

    #[test]
    fn deficiency_conventions() {
        let t = desk_table();
        let p = uniform_n(8).unwrap();
        assert_eq!(deficiency(&p, &BitString::new(), t).unwrap(), 0);
        assert!(matches!(deficiency(&p, &bits("0"), t), Err(Error::ZeroMass(_))));
        assert!(matches!(deficiency(&p, &bits("10110100"), t), Err(Error::NoProgram(_))));
        for n in 1..=5 {
            let p = uniform_n(n).unwrap();
            for x in BitString::all_of_length(n) {
                let k = t.k_approx(&x).unwrap() as i64;
                assert_eq!(deficiency(&p, &x, t).unwrap(), n as i64 - k);
            }
        }
    }

    #[test]
    fn regular_string_deficiency() {
        let t = desk_table();
        // 0^8 costs 13 bits here (OUT0, LOOP 3, HALT), so its deficiency
        // under uniform:8 is negative; 0^16 costs 14 and comes out positive.
        assert_eq!(deficiency(&uniform_n(8).unwrap(), &BitString::zeros(8), t).unwrap(), -5);
        assert_eq!(deficiency(&uniform_n(16).unwrap(), &BitString::zeros(16), t).unwrap(), 2);
    }

    #[test]
    fn deficiency_under_identity_image() {
        let t = desk_table();
        for n in 1..=5 {
            let p = uniform_n(n).unwrap();
            let img = image_measure(&TotalFunction::identity(), &p);
            for (x, _) in p.support() {
                assert_eq!(deficiency(&img, x, t).unwrap(), deficiency(&p, x, t).unwrap());
            }
        }
    }

    #[test]
    fn verify_test_examples() {
        let p = uniform_n(3).unwrap();
        let dom: Vec<_> = BitString::all_of_length(3).collect();
        let one = verify_test(&p, &DiscreteTest::constant("one", ratio(1, 1), &dom), &dom);
        assert_eq!((one.sum.clone(), one.pass), (ratio(1, 1), true));
        let two = verify_test(&p, &DiscreteTest::constant("two", ratio(2, 1), &dom), &dom);
        assert_eq!((two.sum, two.pass), (ratio(2, 1), false));
    }

    #[test]
    fn shrinking_a_test_never_breaks_it() {
        let p = uniform_n(4).unwrap();
        let dom: Vec<_> = BitString::all_of_length(4).collect();
        let t = DiscreteTest::new("t", dom.iter().map(|x| (x.clone(), ratio(x.to_u64() as i64, 8))));
        let base = verify_test(&p, &t, &dom);
        for cut in 0..dom.len() {
            let smaller = DiscreteTest::new(
                "t'",
                t.entries().map(|(x, v)| (x.clone(), if x.to_u64() as usize == cut { Rational::zero() } else { v.clone() })),
            );
            let v = verify_test(&p, &smaller, &dom);
            assert!(v.sum <= base.sum);
            assert!(!base.pass || v.pass);
        }
    }

    #[test]
    fn thm1_identity_is_one() {
        let t = desk_table();
        let p = uniform_n(4).unwrap();
        let built = thm1_test(&p, &TotalFunction::identity(), t);
        assert!(built.zero_denominators.is_empty());
        assert!(built.test.entries().all(|(_, v)| v.is_one()));
    }

    #[test]
    fn thm1_sum_telescopes() {
        let t = desk_table();
        let omega = t.omega_prefix(2);
        let b = thm2_b(2, 2, vec![omega]).unwrap().at_stage(0);
        let p = uniform_n(4).unwrap();
        let built = thm1_test(&p, &b, t);
        let direct = verify_m_test(t, &built.test);
        assert!(direct.pass);

        // Oracle: Σ_y m(y) Σ_{x ∈ B⁻¹(y), m(x) > 0} p(x) / Bp(y), from a record scan.
        let scan = scan_m(t);
        let m = |z: &BitString| scan.get(z).map(|e| e.0.clone()).unwrap_or_else(Rational::zero);
        let mut by_image: BTreeMap<BitString, (Rational, Rational)> = BTreeMap::new();
        for (x, px) in p.support() {
            let y = b.eval(x);
            if y.is_empty() {
                continue;
            }
            let e = by_image.entry(y).or_insert((Rational::zero(), Rational::zero()));
            e.1 += px;
            if !m(x).is_zero() {
                e.0 += px;
            }
        }
        let telescoped = by_image.iter().fold(Rational::zero(), |a, (y, (hit, all))| a + m(y) * hit / all);
        assert_eq!(direct.sum, telescoped);
        assert!(telescoped <= t.kraft_sum());
    }

    #[test]
    fn thm1_drop_last_values() {
        let t = desk_table();
        let p = uniform_n(3).unwrap();
        let built = thm1_test(&p, &TotalFunction::drop_last(), t);
        assert!(built.zero_denominators.is_empty());
        // Oracle: direct formula on the scanned m values, Bp(y) = 1/4 for |y| = 2.
        let scan = scan_m(t);
        for x in BitString::all_of_length(3) {
            let y = x.parent().unwrap();
            let expect = scan[&y].0.clone() * ratio(1, 8) / (scan[&x].0.clone() * ratio(1, 4));
            assert_eq!(built.test.value(&x), expect, "{x}");
        }
        let (edge, mid) = (ratio(473, 102), ratio(1997, 438));
        let frozen = [
            ("000", &edge),
            ("001", &edge),
            ("010", &mid),
            ("011", &mid),
            ("100", &mid),
            ("101", &mid),
            ("110", &edge),
            ("111", &edge),
        ];
        for (x, v) in frozen {
            assert_eq!(&built.test.value(&bits(x)), v, "{x}");
        }
    }

    #[test]
    fn thm3_identity_and_calibration() {
        let t = desk_table();
        let dom: Vec<_> = BitString::all_up_to(2).collect();
        let pairs: Vec<_> = dom.iter().flat_map(|x| dom.iter().map(move |y| (x.clone(), y.clone()))).collect();
        let id = thm3_test(&TotalFunction::identity(), t, &pairs).unwrap();
        assert!(id.uncalibrated.values().all(|v| v.is_one()));
        assert_eq!(id.sum, Rational::one());
        let dl = thm3_test(&TotalFunction::drop_last(), t, &pairs).unwrap();
        assert_eq!(dl.sum, Rational::one());
        assert!(thm3_test(&TotalFunction::identity(), t, &[]).is_err());
    }

    #[test]
    fn thm4_identity_collapses_to_conditional_m() {
        let plain = desk_table();
        let h = plain.halting_oracle(256);
        let with_h = enumerate(&Budget::new(18, 100_000).with_aux(h)).unwrap();
        let dom: Vec<_> = BitString::all_up_to(4).collect();
        let s = thm4_semimeasure(&TotalFunction::identity(), plain, &with_h, &dom).unwrap();
        assert_eq!(s.measure.mass(), Rational::one());
        let raw_sum: Rational = dom.iter().filter(|x| !x.is_empty()).map(|x| with_h.m_approx(x)).sum();
        assert_eq!(s.uncalibrated_sum, raw_sum);
        for x in dom.iter().filter(|x| !x.is_empty()) {
            assert_eq!(s.measure.value(x), with_h.m_approx(x) * &s.c);
        }
    }

    #[test]
    fn text_round_trips() {
        let b = thm2_b(1, 2, vec![bits("10")]).unwrap().at_stage(0);
        let img = image_measure(&b, &uniform_n(3).unwrap());
        let back = DiscreteSemiMeasure::from_text(&img.to_text()).unwrap();
        assert_eq!(back.support, img.support);
        assert_eq!(back.lost_mass(), img.lost_mass());
        let t = thm1_test(&uniform_n(3).unwrap(), &TotalFunction::drop_last(), desk_table()).test;
        assert_eq!(DiscreteTest::from_text(&t.to_text()).unwrap(), t);
        assert!(DiscreteSemiMeasure::from_text("measure x 1\n0 1 0\n").is_err());
    }
}
