use std::collections::BTreeSet;

use proptest::prelude::*;

use compact_locality::finite::{ElemSet, FiniteGroup};
use compact_locality::ptoral::{DPGroup, TorusElement};
use compact_locality::report::{Report, Status};

fn torus(p: u32, rank: usize) -> impl Strategy<Value = TorusElement> {
    let q = p.pow(4) as i64;
    prop::collection::vec(-q..q, rank).prop_map(move |v| {
        let coords: Vec<String> = v.iter().map(|a| format!("{a}/{q}")).collect();
        let refs: Vec<&str> = coords.iter().map(String::as_str).collect();
        TorusElement::parse(p, &refs).expect("valid coordinates")
    })
}

fn group_triple() -> impl Strategy<Value = (u32, usize, TorusElement, TorusElement, TorusElement)> {
    (prop::sample::select(vec![2u32, 3, 5]), 1usize..4)
        .prop_flat_map(|(p, r)| (Just(p), Just(r), torus(p, r), torus(p, r), torus(p, r)))
}

/// `T² ⋊ C2` with the swap action.
fn swap_group(level: u32) -> DPGroup {
    let c2 = FiniteGroup::cyclic(2);
    let action = c2
        .elements()
        .map(|f| if f == c2.identity() { vec![vec![1, 0], vec![0, 1]] } else { vec![vec![0, 1], vec![1, 0]] })
        .collect();
    DPGroup::new(2, 2, c2, action, level).unwrap()
}

proptest! {
    #[test]
    fn torus_is_an_abelian_group((p, rank, a, b, c) in group_triple()) {
        let zero = TorusElement::zero(p, rank);
        prop_assert_eq!(a.add(&b), b.add(&a));
        prop_assert_eq!(a.add(&b).add(&c), a.add(&b.add(&c)));
        prop_assert_eq!(a.add(&zero), a.clone());
        prop_assert!(a.add(&a.neg()).is_zero());
        prop_assert!(a.add(&b).level() <= a.level().max(b.level()));
        prop_assert_eq!(a.neg().level(), a.level());
    }

    #[test]
    fn torus_coordinates_round_trip(t in torus(3, 2)) {
        let s = t.coordinate_strings();
        let refs: Vec<&str> = s.iter().map(String::as_str).collect();
        prop_assert_eq!(TorusElement::parse(3, &refs).unwrap(), t);
    }

    #[test]
    fn semidirect_product_laws(i in 0usize..1024, j in 0usize..1024, k in 0usize..1024) {
        for g in [swap_group(2), DPGroup::inversion_extension(2, 3).unwrap()] {
            let m = g.truncation();
            let slice = g.slice(m).unwrap();
            let n = slice.elements.len();
            let (x, y, z) = (&slice.elements[i % n], &slice.elements[j % n], &slice.elements[k % n]);
            let xy = g.multiply(x, y).unwrap();
            prop_assert_eq!(g.multiply(&xy, z).unwrap(), g.multiply(x, &g.multiply(y, z).unwrap()).unwrap());
            prop_assert_eq!(g.multiply(x, &g.inverse(x)).unwrap(), g.identity());
            prop_assert_eq!(g.multiply(&g.identity(), x).unwrap(), x.clone());
            // conjugation is an automorphism, and preserves levels on the torus
            let cxy = g.conj(&xy, z);
            prop_assert_eq!(cxy, g.multiply(&g.conj(x, z), &g.conj(y, z)).unwrap());
            if x.finite_index() == g.identity().finite_index() {
                prop_assert_eq!(g.conj(x, z).level(), x.level());
            }
            prop_assert!(x.level() <= m);
        }
    }

    #[test]
    fn elemset_matches_a_set_model(a in prop::collection::btree_set(0u32..40, 0..20), b in prop::collection::btree_set(0u32..40, 0..20)) {
        let (sa, sb) = (ElemSet::from_iter(40, a.iter().copied()), ElemSet::from_iter(40, b.iter().copied()));
        let model = |s: &ElemSet| s.iter().collect::<BTreeSet<u32>>();
        prop_assert_eq!(model(&sa.union(&sb)), a.union(&b).copied().collect::<BTreeSet<_>>());
        prop_assert_eq!(model(&sa.intersection(&sb)), a.intersection(&b).copied().collect::<BTreeSet<_>>());
        prop_assert_eq!(sa.is_subset(&sb), a.is_subset(&b));
        prop_assert_eq!(sa.len(), a.len());
        prop_assert_eq!(sa.to_vec(), a.iter().copied().collect::<Vec<_>>());
    }

    #[test]
    fn closures_are_subgroups(gens in prop::collection::vec(0u32..24, 0..3), x in 0u32..24) {
        let g = FiniteGroup::symmetric(4);
        let h = g.closure(gens.iter().copied());
        prop_assert!(g.is_subgroup(&h));
        prop_assert_eq!(24 % h.len(), 0);
        prop_assert!(gens.iter().all(|&a| h.contains(a)));
        prop_assert!(h.is_subset(&g.normalizer(&h, &g.full())));
        prop_assert!(g.center(&h).is_subset(&h));
        let c = g.conj_set(&h, x);
        prop_assert!(g.is_subgroup(&c));
        prop_assert_eq!(c.len(), h.len());
        prop_assert_eq!(g.closure(g.generators(&h)), h);
    }

    #[test]
    fn report_outcome_is_the_worst_entry(statuses in prop::collection::vec(0u8..3, 0..12)) {
        let mut r = Report::new();
        for (k, s) in statuses.iter().enumerate() {
            let axiom = format!("a{k}");
            match s {
                0 => r.pass("s", &axiom, "ok"),
                1 => r.inconclusive("s", &axiom, "unknown"),
                _ => r.fail("s", &axiom, "bad", format!("w{k}")),
            }
        }
        let worst = statuses.iter().max().map_or(Status::Pass, |s| [Status::Pass, Status::Inconclusive, Status::Fail][*s as usize]);
        prop_assert_eq!(r.outcome(), worst);
        prop_assert_eq!(r.failures().count(), statuses.iter().filter(|&&s| s == 2).count());
        let back: Report = serde_json::from_str(&r.to_json()).unwrap();
        prop_assert_eq!(back, r);
    }
}
