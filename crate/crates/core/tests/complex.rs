use proptest::prelude::*;

use stackmorse::complex::*;
use stackmorse::pipeline::{run_scenario, RunOptions};
use stackmorse::scenario::Scenario;
use stackmorse::symmetry::FiniteGroup;

fn scenario(name: &str) -> Scenario {
    let path = format!("{}/scenarios/{name}.toml", env!("CARGO_MANIFEST_DIR"));
    Scenario::load(std::path::Path::new(&path)).unwrap()
}

#[test]
fn height_witten_complex() {
    let gens = vec![("min".to_string(), 0), ("max".to_string(), 2)];
    for field in [Field::Z2, Field::Q] {
        let c = build_witten_complex(field, &gens, &|_, _| 0, 2).unwrap();
        assert_eq!(c.homology_ranks().unwrap(), vec![1, 0, 1]);
        assert_eq!(c.euler_characteristic(), 2);
    }
}

#[test]
fn torus_counts_cancel_with_signs_and_mod_two() {
    // min, two saddles, max; every adjacent pair joined by two lines.
    let gens: Vec<(String, usize)> = [("m", 0), ("s1", 1), ("s2", 1), ("M", 2)]
        .iter()
        .map(|(n, d)| (n.to_string(), *d))
        .collect();
    // Each pair is two lines of opposite sign.
    let signed = |_: usize, _: usize| 0;
    let unsigned = |hi: usize, lo: usize| if gens[hi].1 == gens[lo].1 + 1 { 2 } else { 0 };
    let q = build_witten_complex(Field::Q, &gens, &signed, 2).unwrap();
    let z2 = build_witten_complex(Field::Z2, &gens, &unsigned, 2).unwrap();
    assert_eq!(q.homology_ranks().unwrap(), vec![1, 2, 1]);
    assert_eq!(z2.homology_ranks().unwrap(), vec![1, 2, 1]);
    assert!(build_witten_complex(Field::Q, &gens, &unsigned, 2).is_err());
}

#[test]
fn z3_pole_grid_and_total_cohomology() {
    let r = run_scenario(&scenario("sphere_z3"), &RunOptions::default()).unwrap();
    let dc = r.double_complex.as_ref().unwrap();
    assert_eq!(dc.n_max, 3);
    for (n, row) in dc.grid_dims.iter().enumerate() {
        assert_eq!(row, &vec![3usize.pow(n as u32), 0, 3usize.pow(n as u32)]);
    }
    assert!(dc.checks.pass());
    assert_eq!(r.total_cohomology, Some(vec![1, 0, 1]));
}

#[test]
fn trivial_group_total_cohomology_is_witten_homology() {
    let r = run_scenario(&scenario("sphere_height"), &RunOptions::default()).unwrap();
    let q = r.witten.iter().find(|w| w.field == "Q").unwrap();
    assert_eq!(r.total_cohomology.as_ref(), Some(&q.betti));
    assert_eq!(q.betti, vec![1, 0, 1]);
}

#[test]
fn simplicial_identities_for_small_groups() {
    for k in [FiniteGroup::cyclic_z(3, 3).unwrap(), FiniteGroup::dihedral(3, 3).unwrap()] {
        let fixed = vec![vec![0]; k.order()];
        assert!(check_simplicial_identities(&k, &fixed, 3));
        let regular: Vec<Vec<usize>> = (0..k.order()).map(|g| (0..k.order()).map(|x| k.mul(g, x)).collect()).collect();
        assert!(check_simplicial_identities(&k, &regular, 3));
    }
}

fn matrix(rows: usize, cols: usize, entries: &[i64]) -> ExactMatrix {
    ExactMatrix::from_i64(rows, cols, &entries[..rows * cols])
}

proptest! {
    #[test]
    fn rank_is_transpose_invariant(r in 1usize..5, c in 1usize..5, e in prop::collection::vec(-3i64..4, 16)) {
        let a = matrix(r, c, &e);
        let e = &e;
        let t: Vec<i64> = (0..c).flat_map(|j| (0..r).map(move |i| e[i * c + j])).collect();
        let at = matrix(c, r, &t);
        for field in [Field::Z2, Field::Q] {
            prop_assert_eq!(a.rank(field).unwrap(), at.rank(field).unwrap());
            prop_assert!(a.rank(field).unwrap() <= r.min(c));
        }
        prop_assert!(a.rank(Field::Z2).unwrap() <= a.rank(Field::Q).unwrap());
    }

    #[test]
    fn two_term_complex_homology(r in 1usize..5, c in 1usize..5, e in prop::collection::vec(-3i64..4, 16)) {
        let a = matrix(r, c, &e);
        let rank = a.rank(Field::Q).unwrap();
        let labels = vec![vec!["a".to_string(); c], vec!["b".to_string(); r]];
        let cx = ChainComplexOverField::new(Field::Q, labels, vec![a]).unwrap();
        prop_assert_eq!(cx.homology_ranks().unwrap(), vec![c - rank, r - rank]);
        prop_assert_eq!(cx.euler_characteristic(), c as i64 - r as i64);
    }

    #[test]
    fn doubling_vanishes_mod_two(e in prop::collection::vec(-2i64..3, 9)) {
        let a = matrix(3, 3, &e);
        let zero = ExactMatrix::zeros(3, 3);
        prop_assert!(a.mul(&zero).is_zero_in(Field::Q).unwrap());
        let twice = a.add(&a);
        prop_assert!(twice.is_zero_in(Field::Z2).unwrap());
        prop_assert_eq!(twice.rank(Field::Q).unwrap(), a.rank(Field::Q).unwrap());
    }
}
