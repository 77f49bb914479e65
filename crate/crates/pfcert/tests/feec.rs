//! Whitney-form finite element reference: assembly identities, refinement,
//! eigenvalue solves, and frozen reference constants.

mod common;

use std::f64::consts::PI;

use pfcert::feec::{
    assemble_whitney, discrete_complex, reference_pf_constant, smallest_positive_eig,
    uniform_refine, BcSelection, EigConstraint,
};
use pfcert::geometry::cell_geometry;

#[test]
fn p1_mass_matrix_on_one_triangle() {
    // Vertex mass on a single triangle of area A: diagonal A/6, off-diagonal
    // A/12.
    let c = common::reference_cell_complex(2);
    let area = cell_geometry(&c, 0).unwrap().volume;
    let pair = assemble_whitney(&c, 0, &BcSelection::None).unwrap();
    let m = pair.mass.to_dense();
    assert_eq!(m.nrows(), 3);
    for i in 0..3 {
        for j in 0..3 {
            let expect = if i == j { area / 6.0 } else { area / 12.0 };
            assert!((m[(i, j)] - expect).abs() < 1e-14, "mass[{i},{j}]");
        }
    }
    // Stiffness row sums vanish: constants lie in the gradient kernel.
    let s = pair.stiffness.to_dense();
    for i in 0..3 {
        let row: f64 = (0..3).map(|j| s[(i, j)]).sum();
        assert!(row.abs() < 1e-12);
    }
}

#[test]
fn incidence_composition_vanishes() {
    // d_{k+1} ∘ d_k = 0 on the integer incidence matrices.
    let c = common::example("cubeKuhn");
    let dc = discrete_complex(&c);
    assert_eq!(dc.n, 3);
    assert_eq!(dc.dof_counts.len(), 4);
    for k in 0..dc.n - 1 {
        let dk = &dc.incidence[k];
        let dk1 = &dc.incidence[k + 1];
        // Represent d_k as a map entry list and compose.
        let mut dk_map = std::collections::HashMap::<(usize, usize), i64>::new();
        for &(r, cidx, v) in dk {
            *dk_map.entry((r, cidx)).or_insert(0) += v;
        }
        let mut product = std::collections::HashMap::<(usize, usize), i64>::new();
        for &(r2, mid, v2) in dk1 {
            for cidx in 0..dc.dof_counts[k] {
                if let Some(&v1) = dk_map.get(&(mid, cidx)) {
                    *product.entry((r2, cidx)).or_insert(0) += v2 * v1;
                }
            }
        }
        assert!(
            product.values().all(|v| *v == 0),
            "d∘d must vanish at degree {k}"
        );
    }
}

#[test]
fn refinement_counts_and_volume() {
    let sq = common::example("square2");
    let r1 = uniform_refine(&sq).unwrap();
    assert_eq!(r1.cells().len(), 8);
    let cube = common::example("cube5");
    let r1c = uniform_refine(&cube).unwrap();
    assert_eq!(r1c.cells().len(), 40);
    // Total volume preserved over two refinements.
    let vol = |c: &pfcert::Complex| -> f64 {
        (0..c.cells().len())
            .map(|i| cell_geometry(c, i).unwrap().volume)
            .sum()
    };
    let r2c = uniform_refine(&r1c).unwrap();
    assert!((vol(&cube) - vol(&r2c)).abs() < 1e-12);
    assert!((vol(&sq) - vol(&r1)).abs() < 1e-12);
}

#[test]
fn neumann_kernel_and_cross_check() {
    let c = common::example("square2");
    let refined = uniform_refine(&uniform_refine(&c).unwrap()).unwrap();
    let pair = assemble_whitney(&refined, 0, &BcSelection::None).unwrap();
    let eig = smallest_positive_eig(&pair, EigConstraint::None).unwrap();
    // Pure Neumann Laplacian has the constants as kernel.
    assert_eq!(eig.kernel_dim, 1);
    assert!(eig.cross_checked, "small solves run the sparse cross-check");
    assert!(eig.lambda_min_positive > 0.0);
    assert!((eig.constant - eig.lambda_min_positive.sqrt().recip()).abs() < 1e-12);

    // Full Dirichlet boundary removes the kernel.
    let dpair = assemble_whitney(&refined, 0, &BcSelection::All).unwrap();
    let deig = smallest_positive_eig(&dpair, EigConstraint::None).unwrap();
    assert_eq!(deig.kernel_dim, 0);
    assert!(deig.constant < eig.constant, "Dirichlet constant is smaller");
}

#[test]
fn square_gradient_constant_converges_monotonically() {
    let c = common::example("square2");
    // Nested conforming spaces: the discrete eigenvalue decreases with
    // refinement, so the constant increases toward the true value from below.
    let mut last = 0.0;
    for r in 1..=3usize {
        let res = reference_pf_constant(&c, 0, &BcSelection::None, r).unwrap();
        assert!(res.constant >= last - 1e-12);
        last = res.constant;
    }
    // Already at level 3 the square is near 1/pi.
    assert!(common::rel_err(last, 1.0 / PI) < 0.02);
}

#[test]
fn square_divergence_duality_routes_agree() {
    // Route A: top-degree with no BCs auto-dualizes to (0, All).
    // Route B: direct mixed formulation at k = 1 with the divergence-free
    // constraint projected out.
    let c = common::example("square2");
    let r = 3usize;
    let a = reference_pf_constant(&c, 1, &BcSelection::None, r).unwrap();
    let mut refined = c.clone();
    for _ in 0..r {
        refined = uniform_refine(&refined).unwrap();
    }
    let pair = assemble_whitney(&refined, 1, &BcSelection::None).unwrap();
    let b = smallest_positive_eig(&pair, EigConstraint::MixedDivfree).unwrap();
    assert!(
        (a.constant - b.constant).abs() / a.constant < 0.05,
        "dual routes disagree: {} vs {}",
        a.constant,
        b.constant
    );
    // Both sit near the known value 1/(pi*sqrt(2)).
    assert!(common::rel_err(a.constant, 1.0 / (PI * 2f64.sqrt())) < 0.02);
}

#[test]
fn partial_boundary_selection_runs() {
    let c = common::example("square2");
    let pair = assemble_whitney(&c, 0, &BcSelection::Faces(vec![0])).unwrap();
    assert!(pair.kept.len() < 4, "constraining a face removes dofs");
    let refined = uniform_refine(&c).unwrap();
    let res = reference_pf_constant(&refined, 0, &BcSelection::Faces(vec![0]), 1).unwrap();
    assert!(res.constant.is_finite() && res.constant > 0.0);
}

#[test]
fn degree_out_of_range_rejected() {
    let c = common::example("square2");
    assert!(reference_pf_constant(&c, 2, &BcSelection::None, 1).is_err());
    assert!(assemble_whitney(&c, 3, &BcSelection::None).is_err());
}

#[test]
fn eigen_result_metadata() {
    let c = common::example("cube5");
    let res = reference_pf_constant(&c, 0, &BcSelection::None, 1).unwrap();
    assert_eq!(res.refinement_level, 1);
    assert!(res.dofs > c.num_vertices());
    assert!(res.constant.is_finite());
}
