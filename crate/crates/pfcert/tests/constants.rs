//! Closed-form analytic constants: frozen values, exact identities, and
//! exponent/homogeneity properties.

mod common;

use std::f64::consts::PI;

use approx::assert_relative_eq;
use pfcert::constants::{
    bogovskii_op_constant, chua_wheeden_bound, convex_hull_volume, convex_pf_gradient,
    convex_pf_kform, convex_pf_kform_hilbert, efnt_constant, face_patch_constant,
    hilbert_div_constant, mixed_bc_gradient_constant, mixed_bc_gradient_constant_generic,
    mixed_bc_kform_constant, pf_vs_poincare_factor, poincare_op_constant, sphere_area, Assumption,
    KFormBcMode, KFormVariant, LebesgueExponent,
};
use pfcert::geometry::geometry_of;
use proptest::prelude::*;

type Lp = LebesgueExponent<f64>;

fn p(v: f64) -> Lp {
    Lp::new(v).unwrap()
}

#[test]
fn efnt_frozen_values() {
    // p = 2: the optimal constant is 1/pi.
    assert!((efnt_constant(Lp::two()).unwrap() - 1.0 / PI).abs() < 1e-12);
    // p -> 1+ limit is 1/2.
    assert!((efnt_constant(p(1.0001)).unwrap() - 0.5).abs() < 1e-3);
    // p = 4 closed form.
    let c4 = 4.0 * (PI / 4.0).sin() / (2.0 * PI * 3.0f64.powf(0.25));
    assert_relative_eq!(efnt_constant(p(4.0)).unwrap(), c4, max_relative = 1e-14);
    assert!((c4 - 0.3420).abs() < 5e-4);
    // Out of range at the endpoints.
    assert!(efnt_constant(Lp::one()).is_err());
    assert!(efnt_constant(Lp::infinity()).is_err());
}

#[test]
fn chua_wheeden_at_two() {
    assert_eq!(chua_wheeden_bound(Lp::two()).unwrap(), 2.0);
    assert!(chua_wheeden_bound(Lp::infinity()).is_err());
}

#[test]
fn potential_coefficients_exact() {
    assert_eq!(poincare_op_constant::<f64>(2, 1).unwrap(), 1.0);
    assert_eq!(poincare_op_constant::<f64>(3, 3).unwrap(), 1.0 / 3.0);
    for n in 1..=6usize {
        assert_eq!(bogovskii_op_constant::<f64>(n, 1).unwrap(), 1.0 / n as f64);
    }
    // Degree-range errors.
    assert!(poincare_op_constant::<f64>(3, 0).is_err());
    assert!(poincare_op_constant::<f64>(3, 4).is_err());
    assert!(bogovskii_op_constant::<f64>(3, 0).is_err());
}

#[test]
fn potential_coefficients_bounded() {
    for n in 1..=6usize {
        for k in 1..=n {
            let cp = poincare_op_constant::<f64>(n, k).unwrap();
            let cb = bogovskii_op_constant::<f64>(n, k).unwrap();
            assert!(cp <= 2f64.powi((n - k) as i32) + 1e-12, "C_P({n},{k}) = {cp}");
            assert!(cb <= 2f64.powi(k as i32 - 1) + 1e-12, "C_B({n},{k}) = {cb}");
            assert!(cp > 0.0 && cb > 0.0);
        }
    }
}

#[test]
fn convex_gradient_constant_cases() {
    let delta = 1.7;
    assert_eq!(convex_pf_gradient(Lp::one(), delta).value, delta / 2.0);
    assert_eq!(convex_pf_gradient(Lp::infinity(), delta).value, delta);
    assert_relative_eq!(
        convex_pf_gradient(Lp::two(), delta).value,
        delta / PI,
        max_relative = 1e-14
    );
    assert!(convex_pf_gradient(Lp::two(), delta)
        .assumptions
        .contains(&Assumption::Convexity));
}

#[test]
fn pf_vs_poincare_vs_chua_wheeden() {
    // 2^{|2/p - 1|} * C_EFNT,p stays below the Chua-Wheeden bound.
    for pv in [1.2, 1.5, 2.0, 3.0, 4.0, 8.0, 20.0] {
        let lhs = pf_vs_poincare_factor(p(pv)) * efnt_constant(p(pv)).unwrap();
        let rhs = chua_wheeden_bound(p(pv)).unwrap();
        assert!(lhs <= rhs + 1e-12, "p = {pv}: {lhs} > {rhs}");
    }
    assert_eq!(pf_vs_poincare_factor(Lp::two()), 1.0);
    assert_eq!(pf_vs_poincare_factor(Lp::one()), 2.0);
}

#[test]
fn sphere_areas() {
    assert_relative_eq!(sphere_area::<f64>(1), 2.0, max_relative = 1e-12);
    assert_relative_eq!(sphere_area::<f64>(2), 2.0 * PI, max_relative = 1e-12);
    assert_relative_eq!(sphere_area::<f64>(3), 4.0 * PI, max_relative = 1e-12);
}

#[test]
fn kform_constant_equilateral_triangle() {
    // Side-1 equilateral triangle: delta = 1, vol = sqrt(3)/4, C_P(2,1) = 1.
    let vol = 3f64.sqrt() / 4.0;
    let cv = convex_pf_kform(2, 1, 1.0, vol, KFormVariant::Poincare).unwrap();
    assert_relative_eq!(cv.value, 8.0 * PI / 3f64.sqrt(), max_relative = 1e-12);
    assert!(cv.assumptions.contains(&Assumption::Convexity));
}

#[test]
fn kform_constant_bogovskii_identity() {
    // For k = 1 the Bogovskii coefficient is 1/n, so the bound reduces to
    // (1/n) * vol(S_1) * delta^{n+1} / vol.
    let (delta, vol, n): (f64, f64, usize) = (1.3, 0.7, 3);
    let cv = convex_pf_kform(n, 1, delta, vol, KFormVariant::Bogovskii).unwrap();
    let expect = (1.0 / n as f64) * sphere_area::<f64>(n) * delta.powi(n as i32 + 1) / vol;
    assert_relative_eq!(cv.value, expect, max_relative = 1e-12);
}

#[test]
fn mixed_bc_gradient_values() {
    let pts = common::reference_simplex(2);
    let refs: Vec<&nalgebra::DVector<f64>> = pts.iter().collect();
    let geo = geometry_of(&refs).unwrap();
    // Generic value at p = 2 is delta / sqrt(2); improved value is delta/pi.
    let generic = mixed_bc_gradient_constant_generic(&geo, Lp::two());
    assert_relative_eq!(generic.value, 2f64.sqrt() / 2f64.sqrt(), max_relative = 1e-12);
    let improved = mixed_bc_gradient_constant(&geo, Lp::two());
    assert_relative_eq!(improved.value, 2f64.sqrt() / PI, max_relative = 1e-12);
    assert!(improved.value <= generic.value);
    assert!(improved.assumptions.contains(&Assumption::HilbertOnly));
    // At p = infinity the constant is the diameter itself.
    assert_eq!(
        mixed_bc_gradient_constant(&geo, Lp::infinity()).value,
        geo.diameter
    );
}

#[test]
fn mixed_bc_kform_tet_frozen_value() {
    // Reference tetrahedron, k = 1, one essential face (ell = 0), proved
    // mode: 3! * 2 * C_B(3,2) * 4*pi * kappa_M^0 * sqrt(3) * sqrt(2)
    // = 6 * 2 * (7/12) * 4*pi * sqrt(6) = 28*pi*sqrt(6).
    let pts = common::reference_simplex(3);
    let refs: Vec<&nalgebra::DVector<f64>> = pts.iter().collect();
    let geo = geometry_of(&refs).unwrap();
    let cv = mixed_bc_kform_constant(&geo, 3, 0, 1, Lp::two(), KFormBcMode::Proved).unwrap();
    assert_relative_eq!(cv.value, 28.0 * PI * 6f64.sqrt(), max_relative = 1e-12);
    assert!((cv.value - 215.4).abs() < 0.1);
}

#[test]
fn mixed_bc_kform_hilbert_simple() {
    let pts = common::reference_simplex(3);
    let refs: Vec<&nalgebra::DVector<f64>> = pts.iter().collect();
    let geo = geometry_of(&refs).unwrap();
    // k = 2: value is (2/pi) * kappa_M * delta.
    let cv = mixed_bc_kform_constant(&geo, 3, 0, 2, Lp::two(), KFormBcMode::HilbertSimple).unwrap();
    assert_relative_eq!(
        cv.value,
        2.0 / PI * geo.kappa_m.value * geo.diameter,
        max_relative = 1e-12
    );
    assert!(cv.assumptions.contains(&Assumption::ConjectureAdjacent));
    assert!(!cv.is_fully_proved());
    // k = 0: the kappa_M power is clamped and flagged.
    let cv0 =
        mixed_bc_kform_constant(&geo, 3, 0, 0, Lp::two(), KFormBcMode::HilbertSimple).unwrap();
    assert_relative_eq!(cv0.value, 2.0 / PI * geo.diameter, max_relative = 1e-12);
    assert!(cv0.assumptions.contains(&Assumption::KappaMClamped));
    // The mode rejects p != 2.
    assert!(
        mixed_bc_kform_constant(&geo, 3, 0, 1, p(3.0), KFormBcMode::HilbertSimple).is_err()
    );
    // Out-of-range degrees are rejected.
    assert!(mixed_bc_kform_constant(&geo, 3, 3, 1, Lp::two(), KFormBcMode::Proved).is_err());
    assert!(mixed_bc_kform_constant(&geo, 3, 0, 3, Lp::two(), KFormBcMode::Proved).is_err());
}

#[test]
fn hilbert_surrogates() {
    let delta = 2.3;
    let cv = convex_pf_kform_hilbert(delta);
    assert_relative_eq!(cv.value, delta / PI, max_relative = 1e-14);
    assert!(!cv.is_fully_proved());
    let dv = hilbert_div_constant(delta);
    assert_eq!(dv.value, delta);
    assert!(dv.assumptions.contains(&Assumption::TopDegreeOnly));
}

#[test]
fn face_patch_square_diagonal() {
    // Two triangles of the unit square glued along the diagonal: convex
    // union with diameter sqrt(2), so the constant is sqrt(2)/pi at p = 2.
    let f0 = common::dv(&[0.0, 0.0]);
    let f1 = common::dv(&[1.0, 1.0]);
    let a1 = common::dv(&[1.0, 0.0]);
    let a2 = common::dv(&[0.0, 1.0]);
    let fp = face_patch_constant(&[&f0, &f1], &a1, &a2, Lp::two()).unwrap();
    assert!(fp.convex);
    assert_relative_eq!(fp.value.value, 2f64.sqrt() / PI, max_relative = 1e-10);
    assert!((fp.value.value - 0.450).abs() < 1e-3);
}

#[test]
fn face_patch_mirrored_reference_triangles() {
    // Reference triangle mirrored across a leg: convex union of diameter 2.
    let f0 = common::dv(&[0.0, 0.0]);
    let f1 = common::dv(&[0.0, 1.0]);
    let a1 = common::dv(&[1.0, 0.0]);
    let a2 = common::dv(&[-1.0, 0.0]);
    let fp = face_patch_constant(&[&f0, &f1], &a1, &a2, Lp::two()).unwrap();
    assert!(fp.convex);
    assert_relative_eq!(fp.value.value, 2.0 / PI, max_relative = 1e-10);
}

#[test]
fn face_patch_nonconvex_uses_two_chart_bound() {
    // A reflex pair: second apex swung past the face plane's projection.
    let f0 = common::dv(&[0.0, 0.0]);
    let f1 = common::dv(&[1.0, 0.0]);
    let a1 = common::dv(&[0.5, 1.0]);
    let a2 = common::dv(&[2.0, -0.2]);
    let fp = face_patch_constant(&[&f0, &f1], &a1, &a2, Lp::two()).unwrap();
    assert!(!fp.convex);
    assert_relative_eq!(fp.value.value, fp.sharp, max_relative = 1e-14);
    assert!(fp.sharp.is_finite() && fp.sharp > 0.0);
}

#[test]
fn convex_hull_volume_square() {
    let pts = [
        common::dv(&[0.0, 0.0]),
        common::dv(&[1.0, 0.0]),
        common::dv(&[1.0, 1.0]),
        common::dv(&[0.0, 1.0]),
    ];
    let refs: Vec<&nalgebra::DVector<f64>> = pts.iter().collect();
    assert_relative_eq!(convex_hull_volume(&refs), 1.0, max_relative = 1e-12);
}

#[test]
fn lebesgue_exponent_basics() {
    assert!(Lp::new(0.5).is_err());
    assert!(Lp::one().conjugate().is_infinite());
    assert!(Lp::infinity().conjugate().p() == 1.0);
    assert_eq!(Lp::two().conjugate().p(), 2.0);
    // p = infinity norm is the maximum.
    assert_eq!(Lp::infinity().norm(&[1.0, 3.0, 2.0]), 3.0);
}

proptest! {
    #[test]
    fn conjugate_relation(pv in 1.01f64..50.0) {
        let q = p(pv).conjugate().p();
        prop_assert!((1.0 / pv + 1.0 / q - 1.0).abs() < 1e-12);
    }

    #[test]
    fn p2_norm_is_euclidean(xs in proptest::collection::vec(0.0f64..10.0, 1..8)) {
        let lhs = Lp::two().norm(&xs);
        let rhs = xs.iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1.0));
    }

    #[test]
    fn gradient_constant_homogeneous(pv in 1.0f64..20.0, delta in 0.01f64..100.0, s in 0.01f64..100.0) {
        let c1 = convex_pf_gradient(p(pv), delta).value;
        let cs = convex_pf_gradient(p(pv), s * delta).value;
        prop_assert!((cs - s * c1).abs() <= 1e-10 * cs.max(1e-30));
    }

    #[test]
    fn improved_le_generic_everywhere(scale in 0.1f64..10.0) {
        let pts: Vec<nalgebra::DVector<f64>> = common::reference_simplex(2)
            .into_iter()
            .map(|v| v * scale)
            .collect();
        let refs: Vec<&nalgebra::DVector<f64>> = pts.iter().collect();
        let geo = geometry_of(&refs).unwrap();
        let improved = mixed_bc_gradient_constant(&geo, Lp::two()).value;
        let generic = mixed_bc_gradient_constant_generic(&geo, Lp::two()).value;
        prop_assert!(improved <= generic * (1.0 + 1e-12));
    }
}
