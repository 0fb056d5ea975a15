//! Test-side generators and brute-force oracles. Nothing here calls into the
//! refinement or sketch code of the library; `checks` pairs the two.
#![allow(dead_code)]

pub mod checks;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use deepwl::structure::{Pair, Relation};
use deepwl::{Structure, Symbol, VertexPermutation};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn sym(s: &str) -> Symbol {
    s.parse().unwrap()
}

/// Symbols "0", "1", "00", ... in shortlex order.
pub fn symbols(count: usize) -> Vec<Symbol> {
    (0..count as u64).map(|i| Symbol::nth(i + 1)).collect()
}

pub fn random_structure(
    r: &mut ChaCha8Rng,
    n: usize,
    num_symbols: usize,
    density: f64,
) -> Structure {
    let mut a = Structure::new(n);
    for s in symbols(num_symbols) {
        let pairs: Vec<Pair> = (0..n)
            .flat_map(|u| (0..n).map(move |v| (u, v)))
            .filter(|_| r.gen_bool(density))
            .collect();
        a = a.with_relation(s, pairs).unwrap();
    }
    a
}

/// Random structure whose Gaifman graph is connected (a random spanning tree goes into the first symbol).
pub fn random_connected(
    r: &mut ChaCha8Rng,
    n: usize,
    num_symbols: usize,
    density: f64,
) -> Structure {
    let base = random_structure(r, n, num_symbols, density);
    let mut rels: BTreeMap<Symbol, Relation> = base.relations().clone();
    let first = symbols(1).remove(0);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(r);
    for i in 1..n {
        let parent = order[r.gen_range(0..i)];
        let e = if r.gen_bool(0.5) {
            (parent, order[i])
        } else {
            (order[i], parent)
        };
        rels.get_mut(&first).unwrap().insert(e);
    }
    rebuild(n, rels)
}

pub fn rebuild(n: usize, rels: BTreeMap<Symbol, Relation>) -> Structure {
    rels.into_iter().fold(Structure::new(n), |a, (s, rel)| {
        a.with_relation(s, rel).unwrap()
    })
}

pub fn random_permutation(r: &mut ChaCha8Rng, n: usize) -> VertexPermutation {
    let mut images: Vec<usize> = (0..n).collect();
    images.shuffle(r);
    VertexPermutation::new(images).unwrap()
}

pub fn cycle(n: usize) -> Structure {
    let pairs = (0..n).flat_map(|i| [(i, (i + 1) % n), ((i + 1) % n, i)]);
    Structure::new(n).with_relation(sym("0"), pairs).unwrap()
}

pub fn two_triangles() -> Structure {
    let tri =
        |o: usize| (0..3).flat_map(move |i| [(o + i, o + (i + 1) % 3), (o + (i + 1) % 3, o + i)]);
    Structure::new(6)
        .with_relation(sym("0"), tri(0).chain(tri(3)))
        .unwrap()
}

/// Largest encoding compared byte by byte; bigger sketches are compared field by field,
/// which is equivalent because the encoding is injective.
pub const BYTE_COMPARE_LIMIT_BITS: u64 = 1 << 26;

pub fn assert_same_sketch(a: &deepwl::AlgebraicSketch, b: &deepwl::AlgebraicSketch, case: usize) {
    if a.encoded_bits().max(b.encoded_bits()) <= BYTE_COMPARE_LIMIT_BITS {
        let (x, y) = (deepwl::encode_sketch(a), deepwl::encode_sketch(b));
        let first = x.iter().zip(&y).position(|(p, q)| p != q);
        assert!(
            x == y,
            "case {case}: encodings differ ({} vs {} bytes, first at {first:?})\n{}\n---\n{}",
            x.len(),
            y.len(),
            a.debug_render(),
            b.debug_render()
        );
    } else {
        assert!(
            a == b,
            "case {case}: sketches differ ({} vs {} colours)",
            a.num_colors(),
            b.num_colors()
        );
    }
}

// ---------- concrete relation algebra ----------

pub fn compose(a: &Relation, b: &Relation) -> Relation {
    let mut out = Relation::new();
    for &(u, w) in a {
        for &(x, v) in b.range((w, 0)..(w + 1, 0)) {
            debug_assert_eq!(x, w);
            out.insert((u, v));
        }
    }
    out
}

pub fn converse(a: &Relation) -> Relation {
    a.iter().map(|&(u, v)| (v, u)).collect()
}

pub fn diag(n: usize) -> Relation {
    (0..n).map(|v| (v, v)).collect()
}

#[allow(clippy::needless_range_loop)]
pub fn transitive_closure(n: usize, a: &Relation) -> Relation {
    let mut reach = vec![vec![false; n]; n];
    for &(u, v) in a {
        reach[u][v] = true;
    }
    for k in 0..n {
        for i in 0..n {
            if reach[i][k] {
                for j in 0..n {
                    if reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
    }
    (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| reach[i][j])
        .collect()
}

pub fn scc_relation(n: usize, a: &Relation) -> Relation {
    let t = transitive_closure(n, a);
    t.iter()
        .copied()
        .filter(|&(u, v)| t.contains(&(v, u)))
        .collect()
}

pub fn dom(a: &Relation) -> Relation {
    a.iter().map(|&(u, _)| (u, u)).collect()
}

pub fn codom(a: &Relation) -> Relation {
    a.iter().map(|&(_, v)| (v, v)).collect()
}

// ---------- brute-force isomorphism ----------

/// Exhaustive backtracking search for an isomorphism.
pub fn isomorphic(a: &Structure, b: &Structure) -> bool {
    if a.n() != b.n() || a.vocabulary() != b.vocabulary() {
        return false;
    }
    let n = a.n();
    let syms: Vec<Symbol> = a.vocabulary().into_iter().collect();
    let mat = |s: &Structure| -> Vec<Vec<u32>> {
        let mut m = vec![vec![0u32; n]; n];
        for (i, sym) in syms.iter().enumerate() {
            for &(u, v) in s.relation(sym).unwrap() {
                m[u][v] |= 1 << i;
            }
        }
        m
    };
    let (ma, mb) = (mat(a), mat(b));
    let profile = |m: &Vec<Vec<u32>>, v: usize| {
        let mut out: Vec<u32> = m[v].clone();
        out.sort_unstable();
        let mut inn: Vec<u32> = (0..n).map(|u| m[u][v]).collect();
        inn.sort_unstable();
        (m[v][v], out, inn)
    };
    let pa: Vec<_> = (0..n).map(|v| profile(&ma, v)).collect();
    let pb: Vec<_> = (0..n).map(|v| profile(&mb, v)).collect();
    let mut image = vec![usize::MAX; n];
    let mut used = vec![false; n];
    #[allow(clippy::too_many_arguments)]
    fn go(
        i: usize,
        n: usize,
        ma: &[Vec<u32>],
        mb: &[Vec<u32>],
        pa: &[(u32, Vec<u32>, Vec<u32>)],
        pb: &[(u32, Vec<u32>, Vec<u32>)],
        image: &mut [usize],
        used: &mut [bool],
    ) -> bool {
        if i == n {
            return true;
        }
        for c in 0..n {
            if used[c] || pa[i] != pb[c] {
                continue;
            }
            if (0..i).all(|j| ma[i][j] == mb[c][image[j]] && ma[j][i] == mb[image[j]][c]) {
                image[i] = c;
                used[c] = true;
                if go(i + 1, n, ma, mb, pa, pb, image, used) {
                    return true;
                }
                used[c] = false;
            }
        }
        false
    }
    go(0, n, &ma, &mb, &pa, &pb, &mut image, &mut used)
}

// ---------- brute-force folklore k-WL ----------

/// Stable colour histograms of folklore k-WL run jointly on both structures; returns true when
/// the histograms differ.
pub fn kwl_distinguishes(a: &Structure, b: &Structure, k: usize) -> bool {
    let (ha, hb) = kwl_histograms(&[a, b], k);
    ha != hb
}

pub fn kwl_histograms(
    parts: &[&Structure; 2],
    k: usize,
) -> (BTreeMap<u64, usize>, BTreeMap<u64, usize>) {
    let syms: Vec<Symbol> = parts[0].vocabulary().into_iter().collect();
    let mut interner: HashMap<Vec<u64>, u64> = HashMap::new();
    let mut intern = |key: Vec<u64>| -> u64 {
        let next = interner.len() as u64;
        *interner.entry(key).or_insert(next)
    };
    struct Side {
        n: usize,
        colors: Vec<u64>,
    }
    let mut sides: Vec<Side> = Vec::new();
    for s in parts {
        let n = s.n();
        let total = n.pow(k as u32);
        let mut colors = Vec::with_capacity(total);
        for idx in 0..total {
            let t = unrank(idx, n, k);
            let mut key = vec![0u64];
            for i in 0..k {
                for j in 0..k {
                    key.push((t[i] == t[j]) as u64);
                    for sym in &syms {
                        key.push(s.relation(sym).unwrap().contains(&(t[i], t[j])) as u64);
                    }
                }
            }
            colors.push(intern(key));
        }
        sides.push(Side { n, colors });
    }
    let count = |sides: &[Side]| -> usize {
        sides
            .iter()
            .flat_map(|s| s.colors.iter())
            .collect::<BTreeSet<_>>()
            .len()
    };
    let mut classes = count(&sides);
    loop {
        let mut next_sides = Vec::new();
        for side in &sides {
            let n = side.n;
            let total = n.pow(k as u32);
            let mut colors = Vec::with_capacity(total);
            for idx in 0..total {
                let t = unrank(idx, n, k);
                let mut multiset: Vec<Vec<u64>> = (0..n)
                    .map(|w| {
                        (0..k)
                            .map(|i| {
                                let mut s = t.clone();
                                s[i] = w;
                                side.colors[rank(&s, n)]
                            })
                            .collect()
                    })
                    .collect();
                multiset.sort_unstable();
                let mut key = vec![1u64, side.colors[idx]];
                for m in multiset {
                    key.extend(m);
                }
                colors.push(intern(key));
            }
            next_sides.push(Side { n, colors });
        }
        let next_classes = count(&next_sides);
        sides = next_sides;
        if next_classes == classes {
            break;
        }
        classes = next_classes;
    }
    let hist = |s: &Side| {
        let mut h = BTreeMap::new();
        for &c in &s.colors {
            *h.entry(c).or_insert(0) += 1;
        }
        h
    };
    (hist(&sides[0]), hist(&sides[1]))
}

fn unrank(mut idx: usize, n: usize, k: usize) -> Vec<usize> {
    let mut t = vec![0; k];
    for i in (0..k).rev() {
        t[i] = idx % n;
        idx /= n;
    }
    t
}

fn rank(t: &[usize], n: usize) -> usize {
    t.iter().fold(0, |acc, &x| acc * n + x)
}

/// Number of colour classes of folklore 2-WL on one structure.
pub fn two_wl_class_count(a: &Structure) -> usize {
    let (h, _) = kwl_histograms(&[a, a], 2);
    h.len()
}

/// Class sizes of folklore 2-WL on one structure, sorted.
pub fn two_wl_class_sizes(a: &Structure) -> Vec<usize> {
    let (h, _) = kwl_histograms(&[a, a], 2);
    let mut v: Vec<usize> = h.into_values().collect();
    v.sort_unstable();
    v
}
