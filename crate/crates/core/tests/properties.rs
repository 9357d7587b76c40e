use aitlab::bits::{pair_decode, pair_encode, parse_self_delimited, self_delimit, BitString};
use aitlab::cache;
use aitlab::continuous::{image_tree_measure, inverse_set, map_catalog, uniform};
use aitlab::enumeration::{enumerate, Budget};
use aitlab::exact::{code_length, floor_log2, pow2, Rational};
use aitlab::measures::{image_measure, uniform_n, DiscreteSemiMeasure};
use aitlab::staged::function_catalog;
use num_traits::One;
use proptest::prelude::*;

fn bit_string(max: usize) -> impl Strategy<Value = BitString> {
    prop::collection::vec(any::<bool>(), 0..=max).prop_map(BitString::from_bits)
}

proptest! {
    #[test]
    fn pair_code_round_trips(x in bit_string(20), y in bit_string(20)) {
        prop_assert_eq!(pair_decode(&pair_encode(&x, &y)).unwrap(), (x.clone(), y.clone()));
        let (payload, rest) = parse_self_delimited(&self_delimit(&x).concat(&y)).unwrap();
        prop_assert_eq!(payload, x);
        prop_assert_eq!(rest, y);
    }

    #[test]
    fn canonical_index_round_trips(i in 0u64..1 << 40) {
        prop_assert_eq!(BitString::from_canonical_index(i).canonical_index(), i);
    }

    #[test]
    fn code_length_of_dyadics(e in -60i64..60) {
        prop_assert_eq!(floor_log2(&pow2(e)), e);
        prop_assert_eq!(code_length(&pow2(e)), -e);
    }

    #[test]
    fn image_measure_conserves_mass(n in 1usize..9, which in 0usize..6) {
        let p = uniform_n(n).unwrap();
        let f = &function_catalog()[which];
        let img = image_measure(f, &p);
        prop_assert_eq!(img.mass() + img.lost_mass(), Rational::one());
    }

    #[test]
    fn semimeasure_text_round_trips(n in 1usize..6) {
        let p = uniform_n(n).unwrap();
        prop_assert_eq!(DiscreteSemiMeasure::from_text(&p.to_text()).unwrap(), p);
    }
}

#[test]
fn image_tree_measure_equals_inverse_set_sums() {
    let depth = 6;
    let p = uniform(depth).unwrap();
    for nu in map_catalog() {
        let mu = image_tree_measure(&nu, &p).unwrap();
        for x in BitString::all_up_to(depth) {
            let pre = inverse_set(&nu, &x, depth);
            // Minimal elements only: drop any preimage extending another.
            let minimal: Vec<_> = pre.iter().filter(|y| !pre.iter().any(|z| z.is_strict_prefix_of(y))).collect();
            let total = minimal.iter().fold(Rational::from_integer(0.into()), |a, y| a + p.value(y));
            assert_eq!(mu.value(&x), &total, "{} at {x}", nu.label());
        }
    }
}

#[test]
fn cache_files_round_trip_through_disk() {
    let dir = tempfile::tempdir().unwrap();
    let table = enumerate(&Budget::new(14, 5_000)).unwrap();
    let path = dir.path().join("nested").join("t.cache");
    cache::save(&table, &path).unwrap();
    let back = cache::load(&path).unwrap();
    assert_eq!(back.records(), table.records());
    assert_eq!(back.budget(), table.budget());
    assert!(cache::verify_by_replay(&back).is_ok());

    let text = std::fs::read_to_string(&path).unwrap();
    let tampered = text.replacen("machine=", "machine=x", 1);
    assert!(cache::read_cache(tampered.as_bytes()).is_err());
}
