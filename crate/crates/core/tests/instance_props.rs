use compactknap::instance::{complement_instance, complement_selection, kappa};
use compactknap::{check_selection, compactness_pairs, validate_instance, Instance, Selection};
use proptest::prelude::*;

fn arb_instance(max_n: usize) -> impl Strategy<Value = Instance> {
    (1..=max_n, 1usize..=4).prop_flat_map(|(n, delta)| {
        (prop::collection::vec(1u64..20, n), prop::collection::vec(0.0f64..10.0, n), 0.05f64..1.0).prop_map(
            move |(w, c, frac)| {
                let total: u64 = w.iter().sum();
                let q = (total as f64 * frac).max(1.0);
                Instance::new(w, c, q, delta)
            },
        )
    })
}

/// Compactness holds iff consecutive selected items are at most `delta` apart.
fn gaps_ok(sel: &Selection, delta: usize) -> bool {
    sel.items().windows(2).all(|w| w[1] - w[0] <= delta)
}

proptest! {
    #[test]
    fn compactness_matches_consecutive_gap_rule(inst in arb_instance(12), mask in any::<u64>()) {
        let sel = Selection::from_mask(mask, inst.n);
        let rep = check_selection(&inst, &sel);
        prop_assert_eq!(rep.compactness_ok, gaps_ok(&sel, inst.delta));
        prop_assert_eq!(rep.knapsack_ok, sel.weight(&inst) as f64 >= inst.q);
        for p in &rep.violated_pairs {
            prop_assert!(p.j - p.i > inst.delta);
            prop_assert_eq!(p.kappa, kappa(p.i, p.j, inst.delta));
        }
    }

    #[test]
    fn json_round_trip(inst in arb_instance(20)) {
        let back = Instance::from_json(&inst.to_json()).unwrap();
        prop_assert_eq!(back, inst);
    }

    #[test]
    fn generated_like_instances_validate(inst in arb_instance(20)) {
        prop_assert!(validate_instance(&inst).is_empty());
    }

    #[test]
    fn complement_is_an_involution(mut inst in arb_instance(16), mask in any::<u64>()) {
        inst.q = inst.q.ceil();
        let sel = Selection::from_mask(mask, inst.n);
        let comp = complement_selection(&sel, inst.n);
        prop_assert_eq!(complement_selection(&comp, inst.n), sel.clone());
        let max = complement_instance(&inst);
        prop_assert_eq!(max.complement_capacity(), inst.q);
        prop_assert_eq!(sel.weight(&inst) as f64 >= inst.q, max.feasible(&comp));
    }

    #[test]
    fn selection_json_is_one_based(mask in any::<u32>()) {
        let sel = Selection::from_mask(mask as u64, 32);
        let s = serde_json::to_string(&sel).unwrap();
        let v: Vec<usize> = serde_json::from_str(&s).unwrap();
        prop_assert_eq!(&v, &sel.one_based());
        prop_assert_eq!(serde_json::from_str::<Selection>(&s).unwrap(), sel);
    }
}

#[test]
fn pair_count_formula() {
    for n in 1usize..30 {
        for delta in 1..6 {
            let m = n.saturating_sub(delta + 1);
            assert_eq!(compactness_pairs(n, delta).len(), m * (m + 1) / 2, "n={n} delta={delta}");
        }
    }
}

#[test]
fn zero_index_is_rejected_in_json() {
    assert!(serde_json::from_str::<Selection>("[0, 2]").is_err());
}

#[test]
fn invalid_instances_list_every_problem() {
    let inst = Instance { n: 2, weights: vec![1], costs: vec![-1.0, 1.0], q: 0.0, delta: 0, meta: Default::default() };
    let v = validate_instance(&inst);
    assert!(v.len() >= 4, "{v:?}");
}
