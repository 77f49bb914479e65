//! Recursion coefficient assembly, ledger unwrapping, Hölder aggregation,
//! the end-to-end estimate driver, and the appendix product bound.

mod common;

use std::f64::consts::PI;

use nalgebra::DMatrix;
use pfcert::bounds::{
    estimate_pf, exterior_recursion_coeffs, gradient_recursion_coeffs, holder_aggregate,
    product_bound, unwrap, BoundLedger, CoefficientMode, Combine, EstimateConfig, GradientVariant,
    LocalMode, RecursionRows, StepRow, Strategy,
};
use pfcert::constants::{convex_pf_kform, Assumption, KFormVariant, LebesgueExponent};
use pfcert::geometry::cell_geometry;
use pfcert::shelling::{search_shelling, spanning_tree, verify_shelling, Shelling};
use pfcert::Complex;
use rand::Rng;

type Lp = LebesgueExponent<f64>;

fn scalar_rows(spec: &[(f64, Vec<(usize, f64)>)]) -> RecursionRows<f64> {
    // Each entry: (A on self, [(j, B_j)]).
    RecursionRows {
        rows: spec
            .iter()
            .enumerate()
            .map(|(m, (a, bs))| StepRow {
                a: vec![(m, *a)],
                b: bs.iter().map(|&(j, beta)| vec![(j, beta)]).collect(),
                note: format!("row {m}"),
            })
            .collect(),
    }
}

fn find_shelling(c: &Complex) -> Shelling {
    let step_cost = |_: &[usize], _: usize, _: &pfcert::shelling::StepInfo| 0.0;
    let total_cost = |_: &Shelling| 0.0;
    let cfg = common::plain_search_config(0, 1_000_000, &step_cost, &total_cost);
    search_shelling(c, &cfg).expect("shellable").shelling
}

#[test]
fn unwrap_single_substitution() {
    // A0 = a; step 1 with A = alpha, B = beta gives [[a,0],[beta*a, alpha]].
    let (a, alpha, beta) = (1.7, 0.4, 2.5);
    let rows = scalar_rows(&[(a, vec![]), (alpha, vec![(0, beta)])]);
    let ledger = unwrap(&rows, Lp::two(), Combine::Minkowski).unwrap();
    assert!((ledger.c[(0, 0)] - a).abs() < 1e-14);
    assert!((ledger.c[(1, 0)] - beta * a).abs() < 1e-14);
    assert!((ledger.c[(1, 1)] - alpha).abs() < 1e-14);
    assert_eq!(ledger.c[(0, 1)], 0.0);
}

#[test]
fn unwrap_chain_row_sums_double() {
    // B = 1 to every earlier row, A = 1: row m sums to 2^m.
    let rows = scalar_rows(&[
        (1.0, vec![]),
        (1.0, vec![(0, 1.0)]),
        (1.0, vec![(0, 1.0), (1, 1.0)]),
    ]);
    let ledger = unwrap(&rows, Lp::two(), Combine::Minkowski).unwrap();
    for m in 0..3 {
        let sum: f64 = (0..3).map(|j| ledger.c[(m, j)]).sum();
        assert!((sum - 2f64.powi(m as i32)).abs() < 1e-12, "row {m} sums to {sum}");
    }
}

#[test]
fn unwrap_no_coupling_is_diagonal() {
    let rows = scalar_rows(&[(2.0, vec![]), (3.0, vec![]), (4.0, vec![])]);
    let ledger = unwrap(&rows, Lp::two(), Combine::Minkowski).unwrap();
    for m in 0..3 {
        for j in 0..3 {
            let expect = if m == j { (m + 2) as f64 } else { 0.0 };
            assert_eq!(ledger.c[(m, j)], expect);
        }
    }
}

#[test]
fn unwrap_rejects_forward_references() {
    let rows = RecursionRows {
        rows: vec![
            StepRow {
                a: vec![(0, 1.0)],
                b: Vec::new(),
                note: String::new(),
            },
            StepRow {
                a: vec![(1, 1.0)],
                b: vec![vec![(1, 1.0)]],
                note: String::new(),
            },
        ],
    };
    assert!(unwrap(&rows, Lp::two(), Combine::Minkowski).is_err());
}

#[test]
fn holder_aggregate_frozen_values() {
    let ledger = BoundLedger {
        c: DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 1.0]),
        provenance: vec![String::new(); 2],
    };
    assert!((holder_aggregate(&ledger, Lp::two()) - 3f64.sqrt()).abs() < 1e-12);
    // Identity ledger at p = 2 is sqrt(2).
    let id = BoundLedger {
        c: DMatrix::identity(2, 2),
        provenance: vec![String::new(); 2],
    };
    assert!((holder_aggregate(&id, Lp::two()) - 2f64.sqrt()).abs() < 1e-12);
    // p = 1: sum of row maxima; p = infinity: max row sum.
    let l = BoundLedger {
        c: DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 2.0, 5.0]),
        provenance: vec![String::new(); 2],
    };
    assert!((holder_aggregate(&l, Lp::one()) - 8.0).abs() < 1e-12);
    assert!((holder_aggregate(&l, Lp::infinity()) - 7.0).abs() < 1e-12);
}

#[test]
fn holder_p2_is_frobenius_on_random_ledgers() {
    let mut rng = common::rng(3);
    for _ in 0..200 {
        let m = rng.random_range(1..8usize);
        let mut c = DMatrix::zeros(m, m);
        for i in 0..m {
            for j in 0..=i {
                c[(i, j)] = rng.random_range(0.0..5.0);
            }
        }
        let frob = c.iter().map(|x| x * x).sum::<f64>().sqrt();
        let ledger = BoundLedger {
            c,
            provenance: vec![String::new(); m],
        };
        assert!((holder_aggregate(&ledger, Lp::two()) - frob).abs() <= 1e-12 * frob.max(1.0));
    }
}

#[test]
fn aggregate_monotone_in_coefficients() {
    let base = scalar_rows(&[(1.0, vec![]), (0.5, vec![(0, 0.7)]), (0.9, vec![(1, 0.3)])]);
    let bumped = scalar_rows(&[(1.0, vec![]), (0.5, vec![(0, 0.9)]), (1.1, vec![(1, 0.3)])]);
    for p in [Lp::one(), Lp::two(), Lp::new(4.0).unwrap(), Lp::infinity()] {
        let a = holder_aggregate(&unwrap(&base, p, Combine::Minkowski).unwrap(), p);
        let b = holder_aggregate(&unwrap(&bumped, p, Combine::Minkowski).unwrap(), p);
        assert!(b >= a - 1e-14, "aggregate must grow with coefficients");
    }
}

#[test]
fn glue_coefficients_on_the_square() {
    let c = common::example("square2");
    let tree = spanning_tree(&c, 0, &|_, _| 1.0).unwrap();
    let rows = gradient_recursion_coeffs(
        &c,
        &tree,
        Lp::two(),
        GradientVariant::Glue,
        CoefficientMode::Individualized,
        LocalMode::Hilbert,
    )
    .unwrap();
    // Start: convex gradient constant of a unit right triangle.
    assert!((rows.rows[0].a[0].1 - 2f64.sqrt() / PI).abs() < 1e-12);
    // Step: B' = sqrt(2)/pi; transport across congruent cells: A = 1.
    assert!((rows.rows[1].a[0].1 - 2f64.sqrt() / PI).abs() < 1e-12);
    assert_eq!(rows.rows[1].b.len(), 1);
    assert_eq!(rows.rows[1].b[0].len(), 1);
    assert!((rows.rows[1].b[0][0].1 - 1.0).abs() < 1e-12);
}

#[test]
fn exterior_square_k0_matches_glue_shape() {
    // On the square at k = 0 the transfer reduces to the face reflection, an
    // isometry, so the b-coefficient is again 1.
    let c = common::example("square2");
    let sh = verify_shelling(&c, &[0, 1]).unwrap();
    let rows = exterior_recursion_coeffs(
        &c,
        &sh,
        0,
        Lp::two(),
        LocalMode::Hilbert,
        CoefficientMode::Individualized,
    )
    .unwrap();
    assert_eq!(rows.rows.len(), 2);
    assert!((rows.rows[1].b[0][0].1 - 1.0).abs() < 1e-10);
    assert!((rows.rows[1].a[0].1 - 2f64.sqrt() / PI).abs() < 1e-12);
}

#[test]
fn minkowski_dominates_l1() {
    for (name, k) in [("square2", 0usize), ("cube5", 1)] {
        let c = common::example(name);
        let sh = find_shelling(&c);
        let rows = exterior_recursion_coeffs(
            &c,
            &sh,
            k,
            Lp::two(),
            LocalMode::Hilbert,
            CoefficientMode::Individualized,
        )
        .unwrap();
        let mink = unwrap(&rows, Lp::two(), Combine::Minkowski).unwrap();
        let l1 = unwrap(&rows, Lp::two(), Combine::L1).unwrap();
        for i in 0..mink.c.nrows() {
            for j in 0..mink.c.ncols() {
                assert!(
                    mink.c[(i, j)] <= l1.c[(i, j)] + 1e-12,
                    "{name}: Minkowski entry exceeds L1 at ({i},{j})"
                );
            }
        }
    }
    // Hexagon fan, k = 0: multi-cell unions appear, same domination.
    let hex = common::hexagon_fan();
    let sh = find_shelling(&hex);
    let rows = exterior_recursion_coeffs(
        &hex,
        &sh,
        0,
        Lp::two(),
        LocalMode::Hilbert,
        CoefficientMode::Individualized,
    )
    .unwrap();
    for step in &rows.rows {
        for group in &step.b {
            assert!(group.len() <= 5, "hexagon unions have at most 5 cells");
        }
    }
    let mink = unwrap(&rows, Lp::two(), Combine::Minkowski).unwrap();
    let l1 = unwrap(&rows, Lp::two(), Combine::L1).unwrap();
    for i in 0..mink.c.nrows() {
        for j in 0..mink.c.ncols() {
            assert!(mink.c[(i, j)] <= l1.c[(i, j)] + 1e-12);
        }
    }
}

#[test]
fn single_cell_estimate_is_the_local_constant() {
    let c = common::reference_cell_complex(3);
    let geo = cell_geometry(&c, 0).unwrap();
    let config = EstimateConfig {
        local_mode: LocalMode::Proved,
        ..EstimateConfig::default()
    };
    let est = estimate_pf(&c, 1, Lp::two(), Strategy::ExteriorShelling, &config).unwrap();
    let expect = convex_pf_kform(3, 2, geo.diameter, geo.volume, KFormVariant::Poincare)
        .unwrap()
        .value;
    assert!((est.constant - expect).abs() <= 1e-12 * expect);
    let ledger = est.ledger.as_ref().unwrap();
    assert_eq!(ledger.c.nrows(), 1);
    // The product bound over an empty shelling is the same start constant.
    let sh = verify_shelling(&c, &[0]).unwrap();
    let prod = product_bound(&c, &sh, 1, Lp::two()).unwrap();
    assert!((prod.constant - expect).abs() <= 1e-12 * expect);
}

#[test]
fn estimate_square2_within_expected_range() {
    let config = EstimateConfig::default();
    let c = common::example("square2");
    for strategy in [Strategy::GradientGlue, Strategy::GradientPatch] {
        let est = estimate_pf(&c, 0, Lp::two(), strategy, &config).unwrap();
        assert!(
            est.constant >= 0.318 && est.constant <= 2.0,
            "{strategy}: {}",
            est.constant
        );
        // The p = 2 aggregate equals the Frobenius norm of its own ledger.
        let ledger = est.ledger.as_ref().unwrap();
        let frob = ledger.c.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((est.constant - frob).abs() <= 1e-12 * frob);
    }
}

#[test]
fn estimates_carry_assumptions_and_proved_companions() {
    let c = common::example("cube5");
    let config = EstimateConfig::default();
    let est = estimate_pf(&c, 1, Lp::two(), Strategy::ExteriorShelling, &config).unwrap();
    assert!(est.assumptions.contains(&Assumption::ConjectureAdjacent));
    let proved = est.proved_constant.expect("companion computed");
    assert!(proved.is_finite() && proved > 0.0);
    assert!(
        proved >= est.constant * (1.0 - 1e-12),
        "the proved companion cannot be sharper than the Hilbert estimate"
    );
}

#[test]
fn product_bound_square_finite_and_ordered() {
    let c = common::example("square2");
    let sh = verify_shelling(&c, &[0, 1]).unwrap();
    let prod = product_bound(&c, &sh, 0, Lp::two()).unwrap();
    assert!(prod.constant.is_finite() && prod.constant > 0.0);
    // The product route and the recursion disagree in general; both must be
    // positive, finite upper bounds.
    let config = EstimateConfig {
        local_mode: LocalMode::Proved,
        ..EstimateConfig::default()
    };
    let est = estimate_pf(&c, 0, Lp::two(), Strategy::ExteriorShelling, &config).unwrap();
    assert!(est.constant.is_finite() && est.constant > 0.0);
}

#[test]
fn unverified_shelling_rejected() {
    let c = common::example("square2");
    let mut sh = verify_shelling(&c, &[0, 1]).unwrap();
    sh.verified = false;
    assert!(exterior_recursion_coeffs(
        &c,
        &sh,
        0,
        Lp::two(),
        LocalMode::Hilbert,
        CoefficientMode::Individualized
    )
    .is_err());
    assert!(product_bound(&c, &sh, 0, Lp::two()).is_err());
}

#[test]
fn degree_out_of_range_rejected() {
    let c = common::example("square2");
    let config = EstimateConfig::default();
    assert!(estimate_pf(&c, 2, Lp::two(), Strategy::ExteriorShelling, &config).is_err());
}

#[test]
fn global_mode_dominates_individualized() {
    // Worst-case global ratios can only produce larger coefficients.
    let c = common::example("Lshape4");
    let config = EstimateConfig::default();
    let global = EstimateConfig {
        coefficient_mode: CoefficientMode::Global,
        ..EstimateConfig::default()
    };
    for strategy in [Strategy::GradientGlue, Strategy::ExteriorShelling] {
        let ind = estimate_pf(&c, 0, Lp::two(), strategy, &config).unwrap();
        let glo = estimate_pf(&c, 0, Lp::two(), strategy, &global).unwrap();
        assert!(
            glo.constant >= ind.constant * (1.0 - 1e-9),
            "{strategy}: global {} < individualized {}",
            glo.constant,
            ind.constant
        );
    }
}

#[test]
fn scale_covariance_of_all_strategies() {
    let s = 2.5;
    for (name, ks) in [("square2", vec![0usize, 1]), ("cube5", vec![0, 1, 2])] {
        let c = common::example(name);
        let scaled = c.map_coords(|v| v * s);
        let config = EstimateConfig::default();
        for &k in &ks {
            let strategies: Vec<Strategy> = if k == 0 {
                vec![
                    Strategy::GradientGlue,
                    Strategy::GradientPatch,
                    Strategy::ExteriorShelling,
                    Strategy::AppendixProduct,
                ]
            } else {
                vec![Strategy::ExteriorShelling, Strategy::AppendixProduct]
            };
            for strategy in strategies {
                let a = estimate_pf(&c, k, Lp::two(), strategy, &config).unwrap();
                let b = estimate_pf(&scaled, k, Lp::two(), strategy, &config).unwrap();
                let ratio = b.constant / a.constant;
                assert!(
                    (ratio - s).abs() <= 1e-10 * s,
                    "{name} k={k} {strategy}: ratio {ratio} != {s}"
                );
            }
        }
    }
}

#[test]
fn estimate_deterministic_across_runs() {
    let c = common::example("cubeKuhn");
    let config = EstimateConfig::default();
    let a = estimate_pf(&c, 1, Lp::two(), Strategy::ExteriorShelling, &config).unwrap();
    let b = estimate_pf(&c, 1, Lp::two(), Strategy::ExteriorShelling, &config).unwrap();
    assert_eq!(a.constant, b.constant);
    assert_eq!(a.traversal, b.traversal);
}
