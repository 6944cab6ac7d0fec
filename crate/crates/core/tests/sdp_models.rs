use compactknap::instgen::{build_ce, generate_instance};
use compactknap::lp::{build_mkpc, solve_lp, solve_mip, MipLimits, SolveStatus};
use compactknap::sdp::{
    add_strengthening, build_naive, build_penalized, solve_conic, verify_lifted_integrality, ConicOptions, LiftedSolution, Tier,
    TripleWindow,
};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn strengthened(inst: &compactknap::Instance) -> compactknap::sdp::ConicProgram {
    add_strengthening(&build_naive(inst), inst, &Tier::ALL, TripleWindow::Default).unwrap()
}

#[test]
fn counterexample_sdp_meets_contract_below_lp() {
    for m in 2..=20 {
        let inst = build_ce(m).unwrap();
        let prog = build_naive(&inst);
        let (sol, rep) = solve_conic(&prog, &ConicOptions::default()).unwrap_or_else(|e| panic!("CE_{m}: {e}"));
        assert!(rep.meets_contract(), "CE_{m}: {rep:?}");
        let lp = solve_lp(&build_mkpc(&inst)).unwrap();
        assert!(rep.objective <= lp.objective + 1e-5, "CE_{m}: sdp {} lp {}", rep.objective, lp.objective);
        assert!(prog.max_row_violation(&sol.svec()) <= 1e-6);
        assert!(rep.eigen.min >= -1e-6);
    }
}

#[test]
fn lifted_optimum_is_feasible_for_every_tier() {
    for seed in 0..6 {
        let inst = generate_instance(10, seed).unwrap();
        let mip = solve_mip(&build_mkpc(&inst), &MipLimits::default()).unwrap();
        assert_eq!(mip.status, SolveStatus::Optimal);
        let x: Vec<f64> = mip.solution.unwrap().values;
        let lifted = LiftedSolution::lift(&x);
        let prog = add_strengthening(&build_naive(&inst), &inst, &Tier::ALL, TripleWindow::Full).unwrap();
        assert!(prog.max_row_violation(&lifted.svec()) <= 1e-9);
        assert!((prog.objective_value(&lifted.svec()) - mip.objective).abs() <= 1e-9);
        assert!(verify_lifted_integrality(&lifted, 1e-9).unwrap().certifies_optimum());
    }
}

#[test]
fn rank_one_x_need_not_be_binary() {
    let half = LiftedSolution::from_matrix(DMatrix::from_element(4, 4, 0.5));
    let v = verify_lifted_integrality(&half, 1e-9).unwrap();
    assert!(!v.is_binary && !v.rank_y_one);
}

#[test]
fn penalty_weight_is_checked() {
    let inst = build_ce(3).unwrap();
    assert!(build_penalized(&inst, -1.0).is_err());
    assert!(build_penalized(&inst, f64::NAN).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn bounds_are_ordered(n in 6usize..14, seed in 0u64..10_000) {
        let inst = generate_instance(n, seed).unwrap();
        let opts = ConicOptions::default();
        let (_, naive) = solve_conic(&build_naive(&inst), &opts).unwrap();
        let (_, plus) = solve_conic(&strengthened(&inst), &opts).unwrap();
        let lp = solve_lp(&build_mkpc(&inst)).unwrap();
        let mip = solve_mip(&build_mkpc(&inst), &MipLimits::default()).unwrap();
        prop_assert!(naive.meets_contract() && plus.meets_contract());
        prop_assert!(naive.bound <= plus.bound + 1e-5);
        prop_assert!(lp.objective <= plus.bound + 1e-5);
        prop_assert!(plus.bound <= mip.objective + 1e-5);
        let (_, relaxed) = solve_conic(&build_penalized(&inst, 0.0).unwrap(), &opts).unwrap();
        prop_assert!(relaxed.objective <= naive.objective + 1e-5);
    }
}
