//! Single-instance checks that run library code against the oracles in the parent module.

use std::collections::{BTreeMap, BTreeSet};

use deepwl::machine::{Cloud, Command, Session, Target};
use deepwl::refine::verify_coherent;
use deepwl::shortcuts::{
    sketch_of_contraction, sketch_of_crossing_pairs, sketch_of_disjoint_union,
    sketch_of_subrestriction,
};
use deepwl::stdlib::*;
use deepwl::structure::{Pair, Relation};
use deepwl::{
    canonical_sketch, refine_to_coarsest, AlgebraicSketch, Structure, Symbol, Vocabulary,
};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::*;

pub fn sketch(a: &Structure) -> AlgebraicSketch {
    canonical_sketch(a, &refine_to_coarsest(a)).unwrap()
}

pub fn rel(s: &Session, e: &Symbol) -> Relation {
    s.cloud().structure().relation(e).unwrap().clone()
}

/// Runs every stdlib operation on one structure and checks it against the concrete definition.
pub fn check_all_ops(a: &Structure, r: &mut ChaCha8Rng) {
    let n = a.n();
    let mut s = Session::new(Cloud::new(a.clone()));
    let mut pool: Vec<Symbol> = a.symbols().cloned().collect();

    let d = op_diag(&mut s).unwrap();
    assert_eq!(rel(&s, &d), diag(n));
    pool.push(d);

    for _ in 0..3 {
        let e1 = pool.choose(r).unwrap().clone();
        let e2 = pool.choose(r).unwrap().clone();
        let (x, y) = (rel(&s, &e1), rel(&s, &e2));

        let u = op_boolean(&mut s, BooleanOp::Union, &e1, &e2).unwrap();
        assert_eq!(rel(&s, &u), &x | &y);
        let i = op_boolean(&mut s, BooleanOp::Intersection, &e1, &e2).unwrap();
        assert_eq!(rel(&s, &i), &x & &y);
        let m = op_boolean(&mut s, BooleanOp::Difference, &e1, &e2).unwrap();
        assert_eq!(rel(&s, &m), &x - &y);

        let c = op_converse(&mut s, &e1).unwrap();
        assert_eq!(rel(&s, &c), converse(&x));
        let comp = op_compose(&mut s, &e1, &e2).unwrap();
        assert_eq!(rel(&s, &comp), compose(&x, &y));
        let scc = op_scc(&mut s, &e1).unwrap();
        assert_eq!(rel(&s, &scc), scc_relation(n, &x));

        let sk = s.sketch();
        assert_eq!(query_subset(sk, &e1, &e2).unwrap(), x.is_subset(&y));
        assert_eq!(query_equal(sk, &e1, &e2).unwrap(), x == y);
        assert_eq!(cardinality(sk, &e1).unwrap(), x.len() as u64);
        // cardinality adds up over the partition E1 = (E1 ∩ E2) ⊎ (E1 ∖ E2)
        assert_eq!(
            cardinality(sk, &i).unwrap() + cardinality(sk, &m).unwrap(),
            x.len() as u64
        );

        let dm = op_dom(&mut s, &e1).unwrap();
        assert_eq!(rel(&s, &dm), dom(&x));
        let cd = op_codom(&mut s, &e1).unwrap();
        assert_eq!(rel(&s, &cd), codom(&x));
        let sp = op_supp(&mut s, &e1).unwrap();
        assert_eq!(rel(&s, &sp), &dom(&x) | &codom(&x));

        // later rounds also work on derived relations
        pool.extend([comp, m, c]);
    }
    assert_eq!(
        s.cloud().structure().n(),
        n,
        "stdlib operations add no vertices"
    );
    verify_coherent(s.cloud().config(), s.cloud().structure()).unwrap();
    assert!(s.log().iter().all(|c| matches!(c, Command::Create(_))));
}

pub fn assert_pure_matches_direct(a: &Structure, e: &Symbol, case: usize) {
    let direct = Cloud::new(a.clone())
        .execute(&Command::AddPair(e.clone()))
        .unwrap();
    let mut s = Session::new(Cloud::new(a.clone()));
    pure_add_pair(&mut s, e).unwrap();
    assert_same_sketch(s.sketch(), direct.sketch(), case);
    assert_eq!(
        s.cloud().structure().n(),
        direct.structure().n(),
        "case {case}"
    );
}

/// Colours of pairs whose endpoints lie on different sides of a two-sided cloud.
pub fn crossing_colors(cloud: &Cloud) -> ColorSet {
    let (one, _) = cloud.side_sets();
    let n = cloud.structure().n();
    let mut out = ColorSet::new();
    for u in 0..n {
        for v in 0..n {
            if one.contains(&u) != one.contains(&v) {
                out.insert(cloud.canonical_color(u, v));
            }
        }
    }
    out
}

/// Pairs up the crossing colours in `omega` by concrete execution.
pub fn concrete_crossing_cloud(cloud: &Cloud, omega: &ColorSet) -> Cloud {
    if omega.is_empty() {
        return cloud.clone();
    }
    let sets: Vec<_> = omega.iter().map(|&r| cloud.color_pairs(r)).collect();
    let after = cloud.add_pair_sets(&sets);
    verify_coherent(after.config(), after.structure()).unwrap();
    after
}

pub fn concrete_crossing(cloud: &Cloud, omega: &ColorSet) -> AlgebraicSketch {
    concrete_crossing_cloud(cloud, omega).sketch().clone()
}

/// Whether the partition `fine` refines `coarse` on the listed pairs.
pub fn refines(
    pairs: &[(Pair, Pair)],
    fine: impl Fn(Pair) -> u32,
    coarse: impl Fn(Pair) -> u32,
) -> bool {
    let mut map: BTreeMap<u32, u32> = BTreeMap::new();
    pairs
        .iter()
        .all(|&(p, q)| *map.entry(fine(p)).or_insert(coarse(q)) == coarse(q))
}

pub fn all_pairs(n: usize) -> impl Iterator<Item = Pair> {
    (0..n).flat_map(move |u| (0..n).map(move |v| (u, v)))
}

/// Contraction shortcut against concrete contraction of a random colour.
pub fn check_contraction(a: &Structure, r: &mut ChaCha8Rng, case: usize) {
    let cloud = Cloud::new(a.clone());
    let color = r.gen_range(0..cloud.sketch().num_colors() as u32);
    let name = cloud.sketch().color_name(color).clone();
    let concrete = cloud.contract(&Target::Color(name)).unwrap();
    verify_coherent(concrete.config(), concrete.structure()).unwrap();
    let short = sketch_of_contraction(cloud.sketch(), color, &BTreeSet::new()).unwrap();
    assert_same_sketch(&short, concrete.sketch(), case);
}

/// Subrestriction shortcut against the sketch of the concrete subrestriction.
pub fn check_subrestriction(a: &Structure, r: &mut ChaCha8Rng, case: usize) {
    let d = sketch(a);
    let chosen: BTreeSet<Symbol> = (0..d.num_colors() as u32)
        .filter(|&x| d.is_diagonal(x) && r.gen_bool(0.5))
        .map(|x| d.color_name(x).clone())
        .collect();
    let cloud = Cloud::new(a.clone()).create(&chosen).unwrap();
    let e_u = cloud
        .structure()
        .symbols()
        .find(|s| !a.contains_symbol(s))
        .unwrap()
        .clone();
    let u: BTreeSet<usize> = cloud
        .structure()
        .relation(&e_u)
        .unwrap()
        .iter()
        .map(|&(v, _)| v)
        .collect();
    let sub_vocab: Vocabulary = cloud
        .structure()
        .symbols()
        .filter(|_| r.gen_bool(0.6))
        .cloned()
        .collect();
    let concrete = sketch(&cloud.structure().subrestriction(&sub_vocab, &u).unwrap());
    let short = sketch_of_subrestriction(cloud.sketch(), &sub_vocab, &e_u).unwrap();
    assert_same_sketch(&short, &concrete, case);
}

pub fn check_disjoint_union(a1: &Structure, a2: &Structure, case: usize) {
    let short = sketch_of_disjoint_union(&sketch(a1), &sketch(a2)).unwrap();
    assert_same_sketch(&short, &sketch(&a1.disjoint_union(a2).unwrap()), case);
}

/// A normalised two-sided cloud, optionally after one plain pairing step; `None` when not normalised.
pub fn two_sided_cloud(
    a1: &Structure,
    a2: &Structure,
    plain_step: bool,
    r: &mut ChaCha8Rng,
) -> Option<Cloud> {
    let mut cloud = Cloud::from_union(a1, a2).ok()?;
    if plain_step {
        let sk = cloud.sketch();
        let crossing = crossing_colors(&cloud);
        let plain: Vec<u32> = (0..sk.num_colors() as u32)
            .filter(|x| !crossing.contains(x))
            .collect();
        if let Some(&p) = plain.choose(r) {
            cloud = cloud
                .add_pair(&Target::Color(sk.color_name(p).clone()))
                .unwrap();
        }
    }
    cloud.is_normalised().then_some(cloud)
}

pub fn random_omega(cloud: &Cloud, r: &mut ChaCha8Rng) -> ColorSet {
    crossing_colors(cloud)
        .into_iter()
        .filter(|_| r.gen_bool(0.4))
        .collect()
}

pub fn check_crossing_pairs(cloud: &Cloud, omega: &ColorSet, case: usize) {
    let short = sketch_of_crossing_pairs(cloud.sketch(), omega, cloud.pair_symbols()).unwrap();
    assert_same_sketch(&short, &concrete_crossing(cloud, omega), case);
}

/// Contracting a colour: the old colouring refines the new one on the vertices outside the contracted components.
pub fn contraction_coarsens_untouched_part(a: &Structure, color: u32) -> bool {
    let cloud = Cloud::new(a.clone());
    let pairs: Relation = cloud.color_pairs(color).into_iter().collect();
    let n = a.n();
    let scc = scc_relation(n, &pairs);
    let kept: Vec<usize> = (0..n).filter(|&v| !scc.contains(&(v, v))).collect();
    let after = cloud
        .contract(&Target::Color(cloud.sketch().color_name(color).clone()))
        .unwrap();
    let mapped: Vec<(Pair, Pair)> = kept
        .iter()
        .enumerate()
        .flat_map(|(i, &u)| kept.iter().enumerate().map(move |(j, &v)| ((u, v), (i, j))))
        .collect();
    refines(
        &mapped,
        |(u, v)| cloud.config().color(u, v),
        |(u, v)| after.config().color(u, v),
    )
}

/// Pairing crossing colours: restricted to the old vertices, the new colouring is the old one.
pub fn crossing_pairs_keep_old_partition(cloud: &Cloud, omega: &ColorSet) -> bool {
    let after = concrete_crossing_cloud(cloud, omega);
    let old: Vec<(Pair, Pair)> = all_pairs(cloud.structure().n()).map(|p| (p, p)).collect();
    refines(
        &old,
        |(u, v)| cloud.config().color(u, v),
        |(u, v)| after.config().color(u, v),
    ) && refines(
        &old,
        |(u, v)| after.config().color(u, v),
        |(u, v)| cloud.config().color(u, v),
    )
}
