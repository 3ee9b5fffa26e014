//! End-to-end checks of the relaxation on instances with closed-form oracles.

use gwkit_core::sdp::{
    apx_ratio_bound, check_dual_feasible, dual_g, dual_objective, rank_one_check, ratio_of_bounds,
    slater_point, solve_gw_sdp, solve_gw_sdp_certified, standard_relaxation_feasible,
    unbounded_witness, GwSdpSettings,
};
use gwkit_core::transport::{
    vec_index, CostMatrix, CouplingPlan, Histogram, QuadCostTensor,
};
use ndarray::{array, Array2};

fn hist(w: &[f64]) -> Histogram<f64> {
    Histogram::from_weights(w.to_vec()).unwrap()
}

/// C = [[0,1],[1,0]], D = [[0,2],[2,0]], uniform marginals. The closed-form
/// objective over the coupling family pi(t) is f(t) = 2.5 - 4 |pi(t)|^2 with
/// global minimum 0.5 at the endpoints t in {0, 0.5}.
fn reference_instance() -> (CostMatrix<f64>, CostMatrix<f64>, Histogram<f64>) {
    (
        CostMatrix::new(array![[0.0, 1.0], [1.0, 0.0]]).unwrap(),
        CostMatrix::new(array![[0.0, 2.0], [2.0, 0.0]]).unwrap(),
        hist(&[0.5, 0.5]),
    )
}

#[test]
fn identical_spaces_are_certified_at_zero() {
    let c = CostMatrix::new(array![[0.0, 1.0], [1.0, 0.0]]).unwrap();
    let h = hist(&[0.5, 0.5]);
    let r = solve_gw_sdp(&c, &c, &h, &h, &GwSdpSettings::default()).unwrap();
    assert!(r.lower_bound.abs() < 1e-5, "lower bound {}", r.lower_bound);
    assert!(r.upper_bound.abs() < 1e-5, "upper bound {}", r.upper_bound);
    assert!((r.ratio_bound - 1.0).abs() < 1e-6);
    assert!(r.rank_one);
    // the diagonal plan attains zero
    assert!((r.plan.entries()[[0, 0]] - 0.5).abs() < 1e-4);
    assert!((r.plan.entries()[[1, 1]] - 0.5).abs() < 1e-4);
}

#[test]
fn reference_instance_is_tight_at_one_half() {
    let (c, d, h) = reference_instance();
    let r = solve_gw_sdp(&c, &d, &h, &h, &GwSdpSettings::default()).unwrap();
    assert!((r.lower_bound - 0.5).abs() < 1e-4, "lower bound {}", r.lower_bound);
    assert!((r.upper_bound - 0.5).abs() < 1e-4, "upper bound {}", r.upper_bound);
    assert!(r.ratio_bound <= 1.001, "ratio {}", r.ratio_bound);
    assert!(r.rank_one);
    // result invariants
    assert!(r.plan.marginal_error() <= 1e-6);
    assert!(r.second_moment.iter().all(|&v| v >= -1e-7));
    assert!(r.lower_bound <= r.upper_bound + 1e-6 * (1.0 + r.upper_bound.abs()));
    // marginal-moment residuals of the returned pair
    let v = gwkit_core::transport::vectorize(r.plan.entries());
    for i in 0..2 {
        for kl in 0..4 {
            let mut s = 0.0;
            for j in 0..2 {
                s += r.second_moment[[i + j * 2, kl]];
            }
            assert!(
                (s - h.get(i) * v[kl]).abs() <= 1e-6,
                "moment row ({i}, {kl}): {s}"
            );
        }
    }
}

#[test]
fn certificates_close_the_duality_gap_on_the_reference_instance() {
    let (c, d, h) = reference_instance();
    let tensor = QuadCostTensor::squared(&c, &d);
    let (r, cert) =
        solve_gw_sdp_certified(&tensor, &h, &h, &GwSdpSettings::default()).unwrap();
    assert!(check_dual_feasible(&cert, &tensor, &h, &h, 1e-5).unwrap());
    let dobj = dual_objective(&cert, &h, &h);
    assert!(
        (dobj - r.lower_bound).abs() <= 1e-3,
        "dual {dobj} vs lower bound {}",
        r.lower_bound
    );
    // weak duality against the closed-form optimum
    assert!(dobj <= 0.5 + 1e-6);
}

#[test]
fn ratio_conventions() {
    assert_eq!(ratio_of_bounds(0.5f64, 0.5), 1.0);
    assert!((ratio_of_bounds(0.4f64, 0.5) - 1.25).abs() < 1e-15);
    assert_eq!(ratio_of_bounds(0.0f64, 0.0), 1.0);
    assert!(ratio_of_bounds(-0.1f64, 0.5).is_infinite());
}

#[test]
fn apx_ratio_uses_the_result_bounds() {
    let (c, d, h) = reference_instance();
    let r = solve_gw_sdp(&c, &d, &h, &h, &GwSdpSettings::default()).unwrap();
    let ratio = apx_ratio_bound(&r);
    assert!((ratio - r.ratio_bound).abs() < 1e-15);
    assert!(ratio >= 1.0 - 1e-9);
}

#[test]
fn rank_one_check_on_outer_products() {
    let h = hist(&[0.5, 0.5]);
    let plan = CouplingPlan::diagonal(&h);
    let v = gwkit_core::transport::vectorize(plan.entries());
    let mn = v.len();
    let mut p = Array2::zeros((mn, mn));
    for r in 0..mn {
        for c in 0..mn {
            p[[r, c]] = v[r] * v[c];
        }
    }
    let (ok, (s1, s2)) = rank_one_check(&p, &plan, 1e-4).unwrap();
    assert!(ok);
    assert!(s2.abs() <= 1e-12 * s1.max(1.0));

    // an identity bump adds spectrum and must flip the flag
    let mut bumped = p.clone();
    for r in 0..mn {
        bumped[[r, r]] += 0.5;
    }
    let (ok, _) = rank_one_check(&bumped, &plan, 1e-4).unwrap();
    assert!(!ok);
}

#[test]
fn rank_one_flag_matches_the_closed_form_on_the_reference_instance() {
    let (c, d, h) = reference_instance();
    let r = solve_gw_sdp(&c, &d, &h, &h, &GwSdpSettings::default()).unwrap();
    let (ok, _) = rank_one_check(&r.second_moment, &r.plan, 1e-4).unwrap();
    assert!(ok);
    if r.rank_one {
        assert!(
            (r.upper_bound - r.lower_bound).abs() <= 1e-5 * (1.0 + r.lower_bound.abs()),
            "rank-one without matching bounds"
        );
    }
}

#[test]
fn slater_point_postconditions() {
    let (c, d, _) = reference_instance();
    let tensor = QuadCostTensor::squared(&c, &d);
    let cert = slater_point(&tensor, 2, 2).unwrap();
    let uniform = Histogram::<f64>::uniform(2);
    // g == -m exactly for uniform marginals
    let g = dual_g(&cert, &uniform, &uniform);
    for &v in g.iter() {
        assert_eq!(v, -2.0);
    }
    // Z entrywise >= 1
    assert!(cert.z.iter().all(|&v| v >= 1.0 - 1e-12));
    // H = L + (|lambda_min| + 1) I, so its minimum eigenvalue is at least 1
    let data = gwkit_core::sdp::assemble_dual(&tensor, &uniform, &uniform).unwrap();
    let h = gwkit_core::sdp::dual_h(&cert, &data);
    let (vals, _) = gwkit_conic::symmetric_eigen(&h).unwrap();
    assert!(vals[0] >= 1.0 - 1e-9, "min eig {}", vals[0]);
    // the full feasibility check passes strictly
    assert!(check_dual_feasible(&cert, &tensor, &uniform, &uniform, 1e-9).unwrap());
}

#[test]
fn slater_point_on_singleton_spaces() {
    let c = CostMatrix::new(array![[0.0]]).unwrap();
    let tensor = QuadCostTensor::squared(&c, &c);
    let cert = slater_point(&tensor, 1, 1).unwrap();
    // lambda_min(L) = 0, c = 2: Z = [[1]], H = [[1]], g = [-1]
    assert_eq!(cert.z[[0, 0]], 1.0);
    let uniform = Histogram::<f64>::uniform(1);
    let g = dual_g(&cert, &uniform, &uniform);
    assert_eq!(g[0], -1.0);
    let data = gwkit_core::sdp::assemble_dual(&tensor, &uniform, &uniform).unwrap();
    let h = gwkit_core::sdp::dual_h(&cert, &data);
    assert!((h[[0, 0]] - 1.0).abs() < 1e-15);
}

#[test]
fn all_zero_certificate_is_recorded() {
    let (c, d, h) = reference_instance();
    let tensor = QuadCostTensor::squared(&c, &d);
    let mn = 4;
    let cert = gwkit_core::sdp::DualCertificate {
        lambda: vec![0.0; 2],
        mu: vec![0.0; 2],
        eta: (0..2).map(|_| ndarray::Array1::zeros(mn)).collect(),
        theta: (0..2).map(|_| ndarray::Array1::zeros(mn)).collect(),
        z: Array2::zeros((mn, mn)),
        y: ndarray::Array1::zeros(mn),
        t: 0.0,
    };
    assert_eq!(dual_objective(&cert, &h, &h), 0.0);
    // H = L with a zero diagonal: not PSD here, so feasibility may be false
    let feasible = check_dual_feasible(&cert, &tensor, &h, &h, 1e-9).unwrap();
    println!("all-zero certificate feasible: {feasible}");
}

#[test]
fn weak_duality_of_any_feasible_certificate() {
    let (c, d, h) = reference_instance();
    let tensor = QuadCostTensor::squared(&c, &d);
    let slater = slater_point(&tensor, 2, 2).unwrap();
    assert!(check_dual_feasible(&slater, &tensor, &h, &h, 1e-9).unwrap());
    assert!(dual_objective(&slater, &h, &h) <= 0.5 + 1e-6);
}

#[test]
fn unbounded_witness_matches_the_closed_form() {
    let (c, d, h) = reference_instance();
    let tensor = QuadCostTensor::squared(&c, &d);
    let plan = CouplingPlan::diagonal(&h);
    let s = vec_index(0, 0, 2, 2).unwrap();
    let t = vec_index(1, 1, 2, 2).unwrap();
    // L_st = (C_01 - D_01)^2 = 1, base objective 0.5
    let (_, obj0) = unbounded_witness(&tensor, &plan, s, t, 0.0).unwrap();
    assert!((obj0 - 0.5).abs() < 1e-12);
    let (p10, obj10) = unbounded_witness(&tensor, &plan, s, t, 10.0).unwrap();
    assert!((obj10 - (0.5 - 20.0)).abs() < 1e-10, "objective {obj10}");
    assert!(standard_relaxation_feasible(&plan, &p10, 1e-9).unwrap());
    // doubling c doubles the decrease
    let (_, obj20) = unbounded_witness(&tensor, &plan, s, t, 20.0).unwrap();
    assert!(((obj20 - obj0) - 2.0 * (obj10 - obj0)).abs() < 1e-9);
}

#[test]
fn witness_rejects_bad_indices() {
    let (c, d, h) = reference_instance();
    let tensor = QuadCostTensor::squared(&c, &d);
    let plan = CouplingPlan::diagonal(&h);
    // diagonal entry: L_ss = 0, not positive
    assert!(unbounded_witness(&tensor, &plan, 0, 0, 1.0).is_err());
    // entry with positive diagonal on one side
    let mut flat = tensor.flat().clone();
    flat[[0, 0]] = 1.0;
    let bad = QuadCostTensor::from_flat(flat, 2, 2).unwrap();
    assert!(unbounded_witness(&bad, &plan, 0, 3, 1.0).is_err());
}

#[test]
fn sandwich_against_independent_couplings() {
    // The relaxation's lower bound never exceeds the objective of any
    // feasible plan.
    let mut state = 21u64;
    let mut unif = move || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((state >> 11) as f64) / (1u64 << 53) as f64
    };
    for case in 0..4 {
        let m = 2 + case % 2;
        let n = 2 + (case / 2) % 2;
        let mut cm = Array2::zeros((m, m));
        let mut dm = Array2::zeros((n, n));
        for i in 0..m {
            for k in 0..i {
                let v = unif() * 2.0;
                cm[[i, k]] = v;
                cm[[k, i]] = v;
            }
        }
        for j in 0..n {
            for l in 0..j {
                let v = unif() * 2.0;
                dm[[j, l]] = v;
                dm[[l, j]] = v;
            }
        }
        let c = CostMatrix::new(cm).unwrap();
        let d = CostMatrix::new(dm).unwrap();
        let a = hist(&(0..m).map(|_| 0.2 + unif()).collect::<Vec<_>>());
        let b = hist(&(0..n).map(|_| 0.2 + unif()).collect::<Vec<_>>());
        let tensor = QuadCostTensor::squared(&c, &d);
        let r = gwkit_core::sdp::solve_gw_sdp_tensor(&tensor, &a, &b, &GwSdpSettings::default())
            .unwrap();
        let indep = CouplingPlan::independent(&a, &b);
        let indep_obj = tensor.objective(indep.entries()).unwrap();
        assert!(
            r.lower_bound <= indep_obj + 1e-6,
            "case {case}: lb {} vs independent {indep_obj}",
            r.lower_bound
        );
        assert!(r.lower_bound <= r.upper_bound + 1e-6 * (1.0 + r.upper_bound.abs()));
    }
}
