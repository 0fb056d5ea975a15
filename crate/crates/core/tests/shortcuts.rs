mod common;

use std::collections::BTreeSet;

use common::checks::*;
use common::*;
use deepwl::machine::Cloud;
use deepwl::shortcuts::{
    crossing_pairs_for_cloud, sketch_of_contraction, sketch_of_disjoint_union,
    sketch_of_subrestriction, ShortcutError,
};
use deepwl::stdlib::ColorSet;
use deepwl::{encode_sketch, Structure, Symbol, Vocabulary};
use rand::Rng;

#[test]
fn subrestriction_examples() {
    let c6 = cycle(6);
    let d = sketch(&c6);
    let diag = (0..d.num_colors() as u32)
        .find(|&r| d.is_diagonal(r))
        .unwrap();
    let name = d.color_name(diag).clone();
    let with_u = Cloud::new(c6.clone()).create(&[name].into()).unwrap();
    let du = with_u.sketch();
    let u_sym = Symbol::empty();
    let full: Vocabulary = [sym("0")].into();
    assert_eq!(sketch_of_subrestriction(du, &full, &u_sym).unwrap(), d);
    assert!(matches!(
        sketch_of_subrestriction(du, &full, &sym("0")),
        Err(ShortcutError::NotDiagonal(_))
    ));
}

#[test]
fn subrestriction_matches_concrete() {
    let mut r = rng(11);
    for i in 0..120 {
        let n = r.gen_range(1..=8);
        let syms = r.gen_range(1..=3);
        let a = random_structure(&mut r, n, syms, 0.3);
        check_subrestriction(&a, &mut r, i);
    }
}

#[test]
fn contraction_examples() {
    let dc3 = Structure::new(3)
        .with_relation(sym("0"), [(0, 1), (1, 2), (2, 0)])
        .unwrap();
    let d = sketch(&dc3);
    let edge = (0..d.num_colors() as u32)
        .find(|&x| d.inside(x, &sym("0")) == Some(true))
        .unwrap();
    let short = sketch_of_contraction(&d, edge, &BTreeSet::new()).unwrap();
    let single = Structure::new(1)
        .with_relation(Symbol::empty(), [(0, 0)])
        .unwrap()
        .with_relation(sym("0"), [(0, 0)])
        .unwrap();
    assert_eq!(short, sketch(&single));
    assert!(sketch_of_contraction(&d, 99, &BTreeSet::new()).is_err());
}

#[test]
fn contraction_matches_concrete() {
    let mut r = rng(12);
    for i in 0..200 {
        let n = r.gen_range(1..=8);
        let syms = r.gen_range(1..=3);
        let a = random_structure(&mut r, n, syms, if i % 2 == 0 { 0.2 } else { 0.35 });
        check_contraction(&a, &mut r, i);
    }
}

#[test]
fn disjoint_union_examples() {
    let p2 = Structure::new(2).with_relation(sym("0"), [(0, 1)]).unwrap();
    let u = sketch_of_disjoint_union(&sketch(&p2), &sketch(&p2)).unwrap();
    assert_eq!(u, sketch(&p2.disjoint_union(&p2).unwrap()));
    let (c6, tt) = (cycle(6), two_triangles());
    let u = sketch_of_disjoint_union(&sketch(&c6), &sketch(&tt)).unwrap();
    assert_eq!(u, sketch(&c6.disjoint_union(&tt).unwrap()));
    let flipped = sketch_of_disjoint_union(&sketch(&tt), &sketch(&c6)).unwrap();
    assert_eq!(encode_sketch(&u), encode_sketch(&flipped));
    let other = Structure::new(1).with_relation(sym("1"), []).unwrap();
    assert_eq!(
        sketch_of_disjoint_union(&sketch(&p2), &sketch(&other)),
        Err(ShortcutError::VocabularyMismatch)
    );
}

#[test]
fn disjoint_union_matches_concrete() {
    let mut r = rng(13);
    for i in 0..150 {
        let syms = r.gen_range(1..=3);
        let (n1, n2) = (r.gen_range(1..=6), r.gen_range(1..=6));
        let (a1, a2) = if i % 3 == 0 {
            (
                random_structure(&mut r, n1, syms, 0.3),
                random_structure(&mut r, n2, syms, 0.3),
            )
        } else {
            (
                random_connected(&mut r, n1, syms, 0.2),
                random_connected(&mut r, n2, syms, 0.2),
            )
        };
        check_disjoint_union(&a1, &a2, i);
    }
}

#[test]
fn crossing_pairs_examples() {
    let p2 = Structure::new(2).with_relation(sym("0"), [(0, 1)]).unwrap();
    let cloud = Cloud::from_union(&p2, &p2).unwrap();
    assert!(cloud.is_normalised());
    assert_eq!(
        crossing_pairs_for_cloud(&cloud, &ColorSet::new()).unwrap(),
        *cloud.sketch()
    );
    let crossing = crossing_colors(&cloud);
    let diag_pair = *crossing
        .iter()
        .find(|&&x| {
            let sk = cloud.sketch();
            sk.dom(x) == sk.codom(x)
        })
        .unwrap();
    let omega: ColorSet = [diag_pair].into();
    assert_eq!(
        encode_sketch(&crossing_pairs_for_cloud(&cloud, &omega).unwrap()),
        encode_sketch(&concrete_crossing(&cloud, &omega))
    );
    let plain = (0..cloud.sketch().num_colors() as u32)
        .find(|x| !crossing.contains(x))
        .unwrap();
    assert_eq!(
        crossing_pairs_for_cloud(&cloud, &[plain].into()),
        Err(ShortcutError::NotCrossing(plain))
    );
    let single = Cloud::new(cycle(6));
    assert!(crossing_pairs_for_cloud(&single, &ColorSet::new()).is_err());
}

#[test]
fn crossing_pairs_match_concrete() {
    let mut r = rng(14);
    for i in 0..120 {
        let syms = r.gen_range(1..=2);
        let n1 = r.gen_range(1..=5);
        let a1 = random_connected(&mut r, n1, syms, 0.2);
        let a2 = if i % 4 == 0 {
            a1.apply_permutation(&random_permutation(&mut r, n1))
                .unwrap()
        } else {
            let n2 = r.gen_range(1..=5);
            random_connected(&mut r, n2, syms, 0.2)
        };
        // earlier plain pairs keep the state normalised and fix the projection symbols
        let Some(cloud) = two_sided_cloud(&a1, &a2, i % 5 == 1, &mut r) else {
            continue;
        };
        let omega = random_omega(&cloud, &mut r);
        check_crossing_pairs(&cloud, &omega, i);
    }
}
