use nalgebra::DVector;

use stackmorse::expr::Expression;
use stackmorse::geometry::LevelSetManifold;
use stackmorse::groupoid::ActionGroupoid;
use stackmorse::morse::*;
use stackmorse::symmetry::Symmetry;

const SPHERE: &str = "x1^2+x2^2+x3^2-1";
const TORUS: &str = "(sqrt(x1^2+x2^2)-2)^2+x3^2-1";

fn setup(constraint: &str, symmetry: &str, f: &str) -> (ActionGroupoid, Expression) {
    let m = LevelSetManifold::parse(3, &[constraint]).unwrap().with_box(3.5);
    let gpd = ActionGroupoid::new(m, Symmetry::preset(symmetry, 3).unwrap()).unwrap();
    (gpd, Expression::parse(f, 3).unwrap())
}

#[test]
fn circle_orbits_on_the_rotating_torus() {
    let (gpd, f) = setup(TORUS, "rotation_z", "x3");
    let orbits = find_critical_orbits(&gpd, &f, &SearchConfig::default()).unwrap();
    assert_eq!(orbits.len(), 2);
    for (o, (value, index)) in orbits.iter().zip([(-1.0, 0), (1.0, 1)]) {
        assert!((o.value - value).abs() < 1e-8);
        assert_eq!(o.index, index);
        assert_eq!(o.orbit_dim, 1);
        assert_eq!(o.orbit_size, None);
        // Reduced function sin φ on the meridian circle has f'' = -sin φ.
        assert_eq!(o.normal_hessian.shape(), (1, 1));
        assert!((o.spectrum[0] + value).abs() < 1e-8);
    }
}

#[test]
fn moment_map_north_pole() {
    let (gpd, f) = setup(SPHERE, "rotation_z", "x3");
    let orbits = find_critical_orbits(&gpd, &f, &SearchConfig::default()).unwrap();
    let north = orbits.iter().find(|o| o.value > 0.0).unwrap();
    assert_eq!(north.orbit_dim, 0);
    assert_eq!(north.isotropy.dim(), 1);
    assert!((&north.normal_hessian + nalgebra::DMatrix::identity(2, 2)).norm() < 1e-8);
    assert_eq!(north.index, 2);
    assert!(orbits.iter().all(|o| o.index % 2 == 0));
}

#[test]
fn rp2_orbits_have_constant_spectra_and_pass_the_local_model() {
    let (gpd, f) = setup(SPHERE, "antipodal", "x3^2+0.1*x1^2");
    let cfg = SearchConfig::default();
    let orbits = find_critical_orbits(&gpd, &f, &cfg).unwrap();
    assert_eq!(orbits.iter().map(|o| o.index).collect::<Vec<_>>(), vec![0, 1, 2]);
    for o in &orbits {
        assert_eq!(o.points.len(), 2);
        assert!(spectrum_orbit_deviation(&gpd, &f, o, &cfg).unwrap() < 1e-6);
        assert!(saturation_defect(&gpd, &f, o).unwrap() < 1e-7);
        assert!(hessian_fd_error(&gpd, &f, &o.representative).unwrap() < 1e-4);
        let fit = verify_local_model(&gpd, &f, o, &[1e-1, 3e-2, 1e-2, 3e-3, 1e-3], 0).unwrap();
        assert!(fit.pass, "{fit:?}");
    }
    let saddle = &orbits[1];
    assert!((saddle.representative.abs() - DVector::from_vec(vec![1.0, 0.0, 0.0])).norm() < 1e-8);
}

#[test]
fn non_quadratic_function_has_cubic_remainder() {
    let (gpd, f) = setup(SPHERE, "trivial", "x3 + 0.2*x1^3 + x1*x2");
    let orbits = find_critical_orbits(&gpd, &f, &SearchConfig::default()).unwrap();
    assert!(!orbits.is_empty());
    for o in orbits.iter().filter(|o| o.nondegenerate) {
        let fit = verify_local_model(&gpd, &f, o, &[1e-1, 3e-2, 1e-2, 3e-3, 1e-3], 1).unwrap();
        assert!(fit.slope.is_some_and(|s| s >= 2.7), "{fit:?}");
    }
}

#[test]
fn polynomials_and_inequalities() {
    for (sym, f, expect) in [
        ("trivial", "x3", vec![1, 0, 1]),
        ("antipodal", "x3^2+0.1*x1^2", vec![1, 1, 1]),
        ("cyclic_z 3", "x3", vec![1, 0, 1]),
    ] {
        let (gpd, f) = setup(SPHERE, sym, f);
        let orbits = find_critical_orbits(&gpd, &f, &SearchConfig::default()).unwrap();
        let m = morse_polynomial(gpd.symmetry(), &orbits, 3).unwrap();
        assert_eq!(m, expect);
        let orientable = orbits.iter().filter(|o| o.orientable).count() as i64;
        assert_eq!(m.iter().sum::<i64>(), orientable);
    }
    let bad = check_morse_inequalities(&[1, 1], &[1, 0, 1]);
    assert!(!bad.pass);
    let good = check_morse_inequalities(&[1, 1, 1], &[1]);
    assert!(good.pass);
    assert_eq!(good.remainder, vec![0, 1]);
}

#[test]
fn torus_symmetry_has_no_morse_polynomial() {
    let (gpd, f) = setup(SPHERE, "rotation_z", "x3");
    let orbits = find_critical_orbits(&gpd, &f, &SearchConfig::default()).unwrap();
    assert!(morse_polynomial(gpd.symmetry(), &orbits, 3).is_err());
}
