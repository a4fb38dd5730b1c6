use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};

use stackmorse::expr::Expression;
use stackmorse::geometry::LevelSetManifold;
use stackmorse::groupoid::ActionGroupoid;
use stackmorse::morse::{self, SearchConfig};
use stackmorse::sampling::{random_orthogonal, rng};
use stackmorse::symmetry::{FiniteGroup, GroupElement, Symmetry};

fn sphere() -> LevelSetManifold {
    LevelSetManifold::parse(3, &["x1^2+x2^2+x3^2-1"]).unwrap()
}

fn on_sphere(name: &str) -> ActionGroupoid {
    ActionGroupoid::new(sphere(), Symmetry::preset(name, 3).unwrap()).unwrap()
}

#[test]
fn axioms_on_every_preset() {
    for name in ["trivial", "antipodal", "cyclic_z 5", "dihedral 3", "rotation_z"] {
        let report = on_sphere(name).check_axioms(30, 1).unwrap();
        assert!(report.pass(), "{name}: {report:?}");
    }
}

#[test]
fn normal_representation_is_a_homomorphism_on_the_isotropy() {
    let gpd = on_sphere("dihedral 4");
    let pole = DVector::from_vec(vec![0.0, 0.0, 1.0]);
    let frame = gpd.normal_frame(&pole).unwrap();
    let Symmetry::Finite(group) = gpd.symmetry() else { unreachable!() };
    let iso = group.isotropy(&pole, 1e-8).unwrap();
    assert_eq!(iso.len(), 8);
    let rep = |g: usize| gpd.normal_representation(&GroupElement::Finite(g), &frame).unwrap();
    for &a in &iso {
        for &b in &iso {
            let err = (rep(group.mul(a, b)) - rep(a) * rep(b)).norm();
            assert!(err < 1e-8);
        }
    }
}

#[test]
fn z3_normal_representation_is_a_third_turn() {
    let gpd = on_sphere("cyclic_z 3");
    let pole = DVector::from_vec(vec![0.0, 0.0, 1.0]);
    let frame = gpd.normal_frame(&pole).unwrap();
    for g in 1..3 {
        let r = gpd.normal_representation(&GroupElement::Finite(g), &frame).unwrap();
        let angle = r[(1, 0)].atan2(r[(0, 0)]).rem_euclid(TAU);
        let k = (angle / (TAU / 3.0)).round();
        assert!((angle - k * TAU / 3.0).abs() < 1e-10 && (k == 1.0 || k == 2.0));
        assert!((r.determinant() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn anisotropic_hessian_with_dihedral_isotropy() {
    let group = FiniteGroup::dihedral(3, 2).unwrap();
    let gpd = ActionGroupoid::new(sphere(), Symmetry::Finite(group)).unwrap();
    let f = Expression::parse("x3 + x1^2 + 0.3*x2^2", 3).unwrap();
    assert!(gpd.check_basic(&f, 100, 0).unwrap().pass);
    let pole = DVector::from_vec(vec![0.0, 0.0, 1.0]);
    let orbit = morse::classify(&gpd, &f, &pole, &SearchConfig::default()).unwrap();
    assert_eq!(orbit.isotropy.order(), Some(4));
    assert!((orbit.spectrum[0] - orbit.spectrum[1]).abs() > 0.5);
    assert!(morse::check_hessian_normal_invariance(&gpd, &orbit).unwrap() < 1e-8);
}

#[test]
fn averaged_functions_are_basic() {
    let gpd = on_sphere("dihedral 3");
    let Symmetry::Finite(group) = gpd.symmetry() else { unreachable!() };
    let f0 = Expression::parse("x1 + x1*x2 + x3^3", 3).unwrap();
    assert!(!gpd.check_basic(&f0, 100, 2).unwrap().pass);
    let f = group.haar_average(&f0).unwrap();
    assert!(gpd.check_basic(&f, 100, 2).unwrap().pass);
}

#[test]
fn circle_frames_on_the_sphere() {
    let gpd = on_sphere("rotation_z");
    let x = DVector::from_vec(vec![1.0, 0.0, 0.0]);
    let tangent = gpd.orbit_tangent_frame(&x).unwrap();
    assert_eq!(tangent.ncols(), 1);
    assert!((tangent.column(0).abs() - DVector::from_vec(vec![0.0, 1.0, 0.0])).norm() < 1e-12);
    let normal = gpd.normal_frame(&x).unwrap();
    assert_eq!(normal.columns.ncols(), 1);
    assert!((normal.columns.column(0).abs() - DVector::from_vec(vec![0.0, 0.0, 1.0])).norm() < 1e-12);
    let pole = DVector::from_vec(vec![0.0, 0.0, 1.0]);
    assert_eq!(gpd.orbit_tangent_frame(&pole).unwrap().ncols(), 0);
    assert_eq!(gpd.normal_frame(&pole).unwrap().columns.ncols(), 2);
}

#[test]
fn conjugated_presentations_share_an_inventory() {
    let cfg = SearchConfig::default();
    let cases = [
        ("cyclic_z 3", "x3"),
        ("antipodal", "x3^2+0.1*x1^2"),
    ];
    let mut r = rng(31);
    for (name, f) in cases {
        let gpd = on_sphere(name);
        let f = Expression::parse(f, 3).unwrap();
        let identity = DMatrix::identity(3, 3);
        assert!(gpd.conjugate_presentation_check(&f, &identity, &cfg).unwrap().pass);
        let q = random_orthogonal(&mut r, 3);
        let check = gpd.conjugate_presentation_check(&f, &q, &cfg).unwrap();
        assert!(check.pass, "{name}: {check:?}");
        assert_eq!(check.original.len(), if name == "antipodal" { 3 } else { 2 });
    }
}
