//! Canonical algebraic sketches: colour naming by an iterated quasiorder,
//! the bit-exact encoding and its decoder.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt::Write as _;

use thiserror::Error;

use crate::refine::{CoherentConfiguration, QRow};
use crate::structure::Structure;
use crate::symbol::{Symbol, Vocabulary};

pub const MAGIC: &[u8; 5] = b"DWLS1";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SketchError {
    #[error("configuration has {config} vertices, structure has {structure}")]
    DimensionMismatch { config: usize, structure: usize },
    #[error("colour {color} splits relation {symbol}")]
    NotRefining { color: u32, symbol: Symbol },
    #[error("malformed encoding: {0}")]
    Decode(&'static str),
}

/// Colours with arbitrary ids plus their relation memberships and intersection numbers;
/// the input of canonicalisation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColoredAlgebra {
    pub tau: Vocabulary,
    pub containing: Vec<BTreeSet<Symbol>>,
    pub q: Vec<QRow>,
}

/// Per-colour data that follows from the intersection numbers alone.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Derived {
    pub diagonal: Vec<bool>,
    pub converse: Vec<u32>,
    /// diagonal colour on the domain side
    pub dom: Vec<u32>,
    /// number of pairs in the class
    pub size: Vec<u64>,
    pub n: u64,
}

impl Derived {
    pub fn from_q(q: &[QRow]) -> Derived {
        let k = q.len();
        let mut diagonal = vec![true; k];
        for (r1, row) in q.iter().enumerate() {
            for &(a, b, cnt) in row {
                if cnt > 0 && a as usize != r1 {
                    diagonal[b as usize] = false;
                }
            }
        }
        let mut converse = vec![u32::MAX; k];
        let mut dom = vec![u32::MAX; k];
        for (d, row) in q.iter().enumerate() {
            if !diagonal[d] {
                continue;
            }
            for &(a, b, cnt) in row {
                if cnt > 0 {
                    converse[a as usize] = b;
                    dom[a as usize] = d as u32;
                }
            }
        }
        let lookup = |r1: usize, r2: u32, r3: u32| -> u64 {
            let row = &q[r1];
            row.binary_search_by(|&(a, b, _)| (a, b).cmp(&(r2, r3)))
                .map(|i| row[i].2 as u64)
                .unwrap_or(0)
        };
        let mut vertices = vec![0u64; k];
        for r in 0..k {
            let (d, c) = (dom[r], converse[r]);
            if d != u32::MAX && c != u32::MAX && dom[c as usize] == d {
                vertices[d as usize] += lookup(d as usize, r as u32, c);
            }
        }
        let size: Vec<u64> = (0..k)
            .map(|r| {
                let d = dom[r];
                if d == u32::MAX || converse[r] == u32::MAX {
                    return 0;
                }
                vertices[d as usize] * lookup(d as usize, r as u32, converse[r])
            })
            .collect();
        let n = (0..k).filter(|&r| diagonal[r]).map(|r| size[r]).sum();
        Derived {
            diagonal,
            converse,
            dom,
            size,
            n,
        }
    }

    pub fn codom(&self, r: u32) -> u32 {
        self.dom[self.converse[r as usize] as usize]
    }
}

/// The quadruple (τ, σ, ⊆, q) in canonical form.
///
/// Colour `i` is named `sigma[i]`; names increase in shortlex order along the canonical order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AlgebraicSketch {
    tau: Vec<Symbol>,
    sigma: Vec<Symbol>,
    /// `subset[i][j]`: colour i lies inside `tau[j]`
    subset: Vec<Vec<bool>>,
    q: Vec<QRow>,
    derived: Derived,
}

impl AlgebraicSketch {
    fn assemble(tau: Vec<Symbol>, subset: Vec<Vec<bool>>, q: Vec<QRow>) -> Self {
        let taken: BTreeSet<&Symbol> = tau.iter().collect();
        let sigma = Symbol::first_free_n(q.len(), |s| taken.contains(s));
        let derived = Derived::from_q(&q);
        AlgebraicSketch {
            tau,
            sigma,
            subset,
            q,
            derived,
        }
    }

    pub fn tau(&self) -> &[Symbol] {
        &self.tau
    }

    pub fn sigma(&self) -> &[Symbol] {
        &self.sigma
    }

    pub fn num_colors(&self) -> usize {
        self.sigma.len()
    }

    pub fn n(&self) -> u64 {
        self.derived.n
    }

    pub fn derived(&self) -> &Derived {
        &self.derived
    }

    pub fn color_index(&self, name: &Symbol) -> Option<u32> {
        self.sigma.binary_search(name).ok().map(|i| i as u32)
    }

    pub fn symbol_index(&self, name: &Symbol) -> Option<usize> {
        self.tau.binary_search(name).ok()
    }

    pub fn color_name(&self, r: u32) -> &Symbol {
        &self.sigma[r as usize]
    }

    /// Does colour `r` lie inside relation `symbol`? `None` for unknown symbols.
    pub fn inside(&self, r: u32, symbol: &Symbol) -> Option<bool> {
        self.symbol_index(symbol)
            .map(|j| self.subset[r as usize][j])
    }

    /// Colours contained in `symbol`.
    pub fn colors_inside(&self, symbol: &Symbol) -> Option<Vec<u32>> {
        let j = self.symbol_index(symbol)?;
        Some(
            (0..self.num_colors() as u32)
                .filter(|&r| self.subset[r as usize][j])
                .collect(),
        )
    }

    pub fn subset_matrix(&self) -> &[Vec<bool>] {
        &self.subset
    }

    pub fn q(&self, r1: u32, r2: u32, r3: u32) -> u32 {
        let row = &self.q[r1 as usize];
        row.binary_search_by(|&(a, b, _)| (a, b).cmp(&(r2, r3)))
            .map(|i| row[i].2)
            .unwrap_or(0)
    }

    pub fn q_row(&self, r1: u32) -> &QRow {
        &self.q[r1 as usize]
    }

    pub fn is_diagonal(&self, r: u32) -> bool {
        self.derived.diagonal[r as usize]
    }

    pub fn converse(&self, r: u32) -> u32 {
        self.derived.converse[r as usize]
    }

    pub fn dom(&self, r: u32) -> u32 {
        self.derived.dom[r as usize]
    }

    pub fn codom(&self, r: u32) -> u32 {
        self.derived.codom(r)
    }

    pub fn class_size(&self, r: u32) -> u64 {
        self.derived.size[r as usize]
    }

    /// The sketch as an algebra over its canonical colour indices.
    pub fn to_algebra(&self) -> ColoredAlgebra {
        let containing = self
            .subset
            .iter()
            .map(|row| {
                self.tau
                    .iter()
                    .zip(row)
                    .filter(|(_, &b)| b)
                    .map(|(s, _)| s.clone())
                    .collect()
            })
            .collect();
        ColoredAlgebra {
            tau: self.tau.iter().cloned().collect(),
            containing,
            q: self.q.clone(),
        }
    }

    /// Human-oriented listing; not canonical and not meant for comparison.
    pub fn debug_render(&self) -> String {
        let mut out = String::from("# debug rendering (non-canonical)\n");
        let names = |v: &[Symbol]| {
            v.iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join(" ")
        };
        writeln!(out, "tau {}", names(&self.tau)).unwrap();
        writeln!(out, "sigma {}", names(&self.sigma)).unwrap();
        for r in 0..self.num_colors() as u32 {
            let inside: Vec<String> = self
                .tau
                .iter()
                .zip(&self.subset[r as usize])
                .filter(|(_, &b)| b)
                .map(|(s, _)| s.to_string())
                .collect();
            writeln!(
                out,
                "color {} {} size={} converse={} in=[{}]",
                self.sigma[r as usize],
                if self.is_diagonal(r) { "diag" } else { "off" },
                self.class_size(r),
                self.sigma
                    .get(self.converse(r) as usize)
                    .map(ToString::to_string)
                    .unwrap_or_else(|| "?".into()),
                inside.join(" ")
            )
            .unwrap();
        }
        for (r1, row) in self.q.iter().enumerate() {
            for &(a, b, c) in row {
                writeln!(
                    out,
                    "q {} {} {} = {}",
                    self.sigma[r1], self.sigma[a as usize], self.sigma[b as usize], c
                )
                .unwrap();
            }
        }
        out
    }

    /// Length of the canonical encoding in bits, before padding.
    pub fn encoded_bits(&self) -> u64 {
        let k = self.num_colors() as u64;
        let names: u64 = self
            .tau
            .iter()
            .chain(&self.sigma)
            .map(|s| 32 + s.len() as u64)
            .sum();
        let qsum: u64 = self.q.iter().flatten().map(|&(_, _, c)| c as u64).sum();
        40 + 64 + names + k * self.tau.len() as u64 + k * k * k + qsum
    }

    pub fn encoded_len(&self) -> u64 {
        self.encoded_bits().div_ceil(8)
    }
}

/// Compares two sets of triples: smaller size first, then by the least element of each
/// side of the symmetric difference. Both inputs are sorted and duplicate free.
pub fn compare_triple_sets<T: Ord>(a: &[T], b: &[T]) -> Ordering {
    if a.len() != b.len() {
        return a.len().cmp(&b.len());
    }
    fn least_only_in<'a, T: Ord>(x: &'a [T], y: &[T]) -> Option<&'a T> {
        x.iter().find(|t| y.binary_search(t).is_err())
    }
    match (least_only_in(a, b), least_only_in(b, a)) {
        (None, None) => Ordering::Equal,
        (Some(p), Some(q)) => p.cmp(q),
        _ => unreachable!("equal-size sets with one-sided difference"),
    }
}

/// Row of a colour with both colours replaced by their classes, counts summed, sorted by packed
/// class pair, zero counts dropped.
fn aggregate_row(row: &QRow, class: &[u32]) -> Vec<(u64, u64)> {
    let mut agg: Vec<(u64, u64)> = row
        .iter()
        .map(|&(a, b, c)| (pack(class[a as usize], class[b as usize]), c as u64))
        .collect();
    agg.sort_unstable_by_key(|e| e.0);
    let mut out: Vec<(u64, u64)> = Vec::with_capacity(agg.len());
    for (key, c) in agg {
        match out.last_mut() {
            Some((k2, acc)) if *k2 == key => *acc += c,
            _ => out.push((key, c)),
        }
    }
    out.retain(|&(_, c)| c > 0);
    out
}

fn pack(a: u32, b: u32) -> u64 {
    (a as u64) << 32 | b as u64
}

/// Orders two class rows as full sets over all class pairs, zero counts included.
fn compare_rows(a: &[(u64, u64)], b: &[(u64, u64)]) -> Ordering {
    // sparse rows imply zeros for missing pairs; the first differing pair decides
    let (mut i, mut j) = (0, 0);
    loop {
        match (a.get(i), b.get(j)) {
            (None, None) => return Ordering::Equal,
            (Some(_), None) => return Ordering::Greater,
            (None, Some(_)) => return Ordering::Less,
            (Some(&(p1, c1)), Some(&(p2, c2))) => match p1.cmp(&p2) {
                Ordering::Equal => {
                    if c1 != c2 {
                        return c1.cmp(&c2);
                    }
                    i += 1;
                    j += 1;
                }
                // the side holding the smaller pair has a positive count where the other has none
                Ordering::Less => return Ordering::Greater,
                Ordering::Greater => return Ordering::Less,
            },
        }
    }
}

/// Runs the quasiorder refinement and returns the class of every input colour,
/// classes numbered along the final linear order.
pub fn canonical_classes(alg: &ColoredAlgebra) -> (Vec<u32>, usize) {
    let k = alg.q.len();
    let derived = Derived::from_q(&alg.q);
    let initial: Vec<(Vec<Symbol>, bool)> = (0..k)
        .map(|r| {
            (
                alg.containing[r].iter().cloned().collect(),
                !derived.diagonal[r],
            )
        })
        .collect();
    let (mut class, mut classes) = rank_by(k, |x, y| initial[x].cmp(&initial[y]));
    while classes < k {
        let conv: Vec<u32> = (0..k)
            .map(|r| class[derived.converse[r] as usize])
            .collect();
        let head = |r: usize| (class[r], conv[r]);
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_unstable_by_key(|&r| head(r));
        // rows only matter between colours agreeing on class and converse class
        let mut rank = vec![0u32; k];
        let mut current = 0u32;
        let mut start = 0;
        while start < k {
            let mut end = start + 1;
            while end < k && head(order[end]) == head(order[start]) {
                end += 1;
            }
            if start > 0 {
                current += 1;
            }
            let group = &mut order[start..end];
            if group.len() == 1 {
                rank[group[0]] = current;
            } else {
                let mut rows: Vec<(usize, Vec<(u64, u64)>)> = group
                    .iter()
                    .map(|&r| (r, aggregate_row(&alg.q[r], &class)))
                    .collect();
                rows.sort_by(|x, y| compare_rows(&x.1, &y.1));
                for (i, (r, row)) in rows.iter().enumerate() {
                    if i > 0 && compare_rows(&rows[i - 1].1, row) != Ordering::Equal {
                        current += 1;
                    }
                    rank[*r] = current;
                }
            }
            start = end;
        }
        let next_classes = if k == 0 { 0 } else { current as usize + 1 };
        if next_classes == classes {
            break;
        }
        class = rank;
        classes = next_classes;
    }
    (class, classes)
}

/// Dense ranks of `0..k` under a total quasiorder.
fn rank_by(k: usize, cmp: impl Fn(usize, usize) -> Ordering) -> (Vec<u32>, usize) {
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&x, &y| cmp(x, y));
    let mut rank = vec![0u32; k];
    let mut current = 0u32;
    for (i, &r) in order.iter().enumerate() {
        if i > 0 && cmp(order[i - 1], r) != Ordering::Equal {
            current += 1;
        }
        rank[r] = current;
    }
    (rank, if k == 0 { 0 } else { current as usize + 1 })
}

/// Canonical sketch of any coherent algebra refining its structure; equivalent colours merge.
pub fn canonicalize(alg: &ColoredAlgebra) -> AlgebraicSketch {
    canonicalize_with_classes(alg).0
}

/// The canonical sketch together with the canonical colour of every input colour.
pub fn canonicalize_with_classes(alg: &ColoredAlgebra) -> (AlgebraicSketch, Vec<u32>) {
    let (class, classes) = canonical_classes(alg);
    let mut rep = vec![usize::MAX; classes];
    for (r, &c) in class.iter().enumerate() {
        if rep[c as usize] == usize::MAX {
            rep[c as usize] = r;
        }
    }
    let tau: Vec<Symbol> = alg.tau.iter().cloned().collect();
    let subset = rep
        .iter()
        .map(|&r| tau.iter().map(|s| alg.containing[r].contains(s)).collect())
        .collect();
    let q = rep
        .iter()
        .map(|&r| {
            aggregate_row(&alg.q[r], &class)
                .into_iter()
                .map(|(key, c)| ((key >> 32) as u32, key as u32, c as u32))
                .collect()
        })
        .collect();
    (AlgebraicSketch::assemble(tau, subset, q), class)
}

/// Colours of a configuration together with the relations of `a` containing them.
pub fn algebra_of(a: &Structure, c: &CoherentConfiguration) -> Result<ColoredAlgebra, SketchError> {
    if a.n() != c.n() {
        return Err(SketchError::DimensionMismatch {
            config: c.n(),
            structure: a.n(),
        });
    }
    let sizes = c.class_sizes();
    let k = c.num_colors();
    let mut containing = vec![BTreeSet::new(); k];
    let mut count = vec![0usize; k];
    for (s, rel) in a.relations() {
        count.iter_mut().for_each(|x| *x = 0);
        for &(u, v) in rel {
            count[c.color(u, v) as usize] += 1;
        }
        for r in 0..k {
            if count[r] == sizes[r] && sizes[r] > 0 {
                containing[r].insert(s.clone());
            } else if count[r] > 0 {
                return Err(SketchError::NotRefining {
                    color: r as u32,
                    symbol: s.clone(),
                });
            }
        }
    }
    let q = (0..k as u32).map(|r| c.q_row(r).clone()).collect();
    Ok(ColoredAlgebra {
        tau: a.vocabulary(),
        containing,
        q,
    })
}

/// The canonical sketch of `a` under a configuration refining it.
pub fn canonical_sketch(
    a: &Structure,
    c: &CoherentConfiguration,
) -> Result<AlgebraicSketch, SketchError> {
    Ok(canonicalize(&algebra_of(a, c)?))
}

struct BitWriter {
    bytes: Vec<u8>,
    bits: u64,
}

impl BitWriter {
    fn push(&mut self, bit: bool) {
        if self.bits.is_multiple_of(8) {
            self.bytes.push(0);
        }
        if bit {
            *self.bytes.last_mut().unwrap() |= 0x80 >> (self.bits % 8);
        }
        self.bits += 1;
    }

    /// `m` copies of `bit`, whole bytes at a time where aligned.
    fn push_run(&mut self, bit: bool, mut m: u64) {
        while m > 0 && !self.bits.is_multiple_of(8) {
            self.push(bit);
            m -= 1;
        }
        let whole = (m / 8) as usize;
        self.bytes
            .resize(self.bytes.len() + whole, if bit { 0xFF } else { 0 });
        self.bits += 8 * whole as u64;
        for _ in 0..m % 8 {
            self.push(bit);
        }
    }

    fn push_u32(&mut self, x: u32) {
        for i in (0..32).rev() {
            self.push(x >> i & 1 == 1);
        }
    }

    fn push_symbol(&mut self, s: &Symbol) {
        self.push_u32(s.len() as u32);
        for b in s.bits().bytes() {
            self.push(b == b'1');
        }
    }
}

struct BitReader<'a> {
    bytes: &'a [u8],
    pos: u64,
}

impl BitReader<'_> {
    fn bit(&mut self) -> Result<bool, SketchError> {
        let byte = self
            .bytes
            .get((self.pos / 8) as usize)
            .ok_or(SketchError::Decode("truncated"))?;
        let b = byte & (0x80 >> (self.pos % 8)) != 0;
        self.pos += 1;
        Ok(b)
    }

    fn u32(&mut self) -> Result<u32, SketchError> {
        let mut x = 0u32;
        for _ in 0..32 {
            x = x << 1 | self.bit()? as u32;
        }
        Ok(x)
    }

    fn symbol(&mut self) -> Result<Symbol, SketchError> {
        let len = self.u32()? as usize;
        let mut s = String::with_capacity(len);
        for _ in 0..len {
            s.push(if self.bit()? { '1' } else { '0' });
        }
        Ok(Symbol::from_bits(&s))
    }
}

/// Canonical byte encoding (big-endian bit order, zero padded to a byte boundary).
pub fn encode_sketch(d: &AlgebraicSketch) -> Vec<u8> {
    let mut w = BitWriter {
        bytes: Vec::with_capacity(d.encoded_len() as usize),
        bits: 0,
    };
    for &b in MAGIC {
        for i in (0..8).rev() {
            w.push(b >> i & 1 == 1);
        }
    }
    w.push_u32(d.tau.len() as u32);
    d.tau.iter().for_each(|s| w.push_symbol(s));
    w.push_u32(d.sigma.len() as u32);
    d.sigma.iter().for_each(|s| w.push_symbol(s));
    for row in &d.subset {
        row.iter().for_each(|&b| w.push(b));
    }
    // per r1, one unary count for every (r2, r3); zero cells are runs of single 0 bits
    let k = d.num_colors() as u64;
    for row in &d.q {
        let mut next_cell = 0u64;
        for &(a, b, c) in row {
            let cell = a as u64 * k + b as u64;
            w.push_run(false, cell - next_cell);
            w.push_run(true, c as u64);
            w.push(false);
            next_cell = cell + 1;
        }
        w.push_run(false, k * k - next_cell);
    }
    w.bytes
}

pub fn decode_sketch(bytes: &[u8]) -> Result<AlgebraicSketch, SketchError> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(SketchError::Decode("bad header"));
    }
    let mut r = BitReader { bytes, pos: 40 };
    let tlen = r.u32()? as usize;
    let tau = (0..tlen)
        .map(|_| r.symbol())
        .collect::<Result<Vec<_>, _>>()?;
    if tau.windows(2).any(|w| w[0] >= w[1]) {
        return Err(SketchError::Decode("vocabulary not in shortlex order"));
    }
    let k = r.u32()? as usize;
    if k as u64 > bytes.len() as u64 * 8 {
        return Err(SketchError::Decode("colour count exceeds input"));
    }
    let sigma = (0..k).map(|_| r.symbol()).collect::<Result<Vec<_>, _>>()?;
    let subset = (0..k)
        .map(|_| (0..tlen).map(|_| r.bit()).collect::<Result<Vec<_>, _>>())
        .collect::<Result<Vec<_>, _>>()?;
    let mut q = vec![QRow::new(); k];
    for row in q.iter_mut() {
        for r2 in 0..k as u32 {
            for r3 in 0..k as u32 {
                let mut c = 0u32;
                while r.bit()? {
                    c += 1;
                }
                if c > 0 {
                    row.push((r2, r3, c));
                }
            }
        }
    }
    let total_bits = bytes.len() as u64 * 8;
    if total_bits - r.pos >= 8 {
        return Err(SketchError::Decode("trailing bytes"));
    }
    while r.pos < total_bits {
        if r.bit()? {
            return Err(SketchError::Decode("nonzero padding"));
        }
    }
    let d = AlgebraicSketch::assemble(tau, subset, q);
    if d.sigma != sigma {
        return Err(SketchError::Decode("colour names are not canonical"));
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::refine::refine_to_coarsest;

    fn sym(s: &str) -> Symbol {
        s.parse().unwrap()
    }

    fn undirected(n: usize, edges: &[(usize, usize)]) -> Structure {
        let pairs = edges.iter().flat_map(|&(u, v)| [(u, v), (v, u)]);
        Structure::new(n).with_relation(sym("0"), pairs).unwrap()
    }

    fn sketch(a: &Structure) -> AlgebraicSketch {
        canonical_sketch(a, &refine_to_coarsest(a)).unwrap()
    }

    #[test]
    fn single_vertex_golden_bytes() {
        let d = sketch(&Structure::new(1));
        assert_eq!(d.num_colors(), 1);
        assert_eq!(d.q(0, 0, 0), 1);
        // magic, |tau| = 0, |sigma| = 1, name "" (length 0), q = 1 as "10", padding
        let golden = hex::decode("44574c5331000000000000000100000000".to_owned() + "80").unwrap();
        assert_eq!(encode_sketch(&d), golden);
        assert_eq!(d.encoded_len(), golden.len() as u64);
    }

    #[test]
    fn cycle_versus_triangles() {
        let c6 = undirected(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0)]);
        let tt = undirected(6, &[(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3)]);
        let (a, b) = (sketch(&c6), sketch(&tt));
        assert_eq!((a.num_colors(), b.num_colors()), (4, 3));
        assert_ne!(encode_sketch(&a), encode_sketch(&b));
        assert_eq!(a.n(), 6);
    }

    #[test]
    fn round_trip_and_derived_sizes() {
        let a = Structure::new(4)
            .with_relation(sym("0"), [(0, 1), (1, 2), (2, 3)])
            .unwrap()
            .with_relation(sym("1"), [(3, 3)])
            .unwrap();
        let c = refine_to_coarsest(&a);
        let d = canonical_sketch(&a, &c).unwrap();
        let bytes = encode_sketch(&d);
        assert_eq!(decode_sketch(&bytes).unwrap(), d);
        assert_eq!(bytes.len() as u64, d.encoded_len());
        let total: u64 = (0..d.num_colors() as u32).map(|r| d.class_size(r)).sum();
        assert_eq!(total, 16);
        let concrete: BTreeSet<usize> = c.class_sizes().into_iter().collect();
        let symbolic: BTreeSet<usize> = (0..d.num_colors() as u32)
            .map(|r| d.class_size(r) as usize)
            .collect();
        assert_eq!(concrete, symbolic);
    }

    #[test]
    fn decode_rejects_garbage() {
        assert!(decode_sketch(b"nope").is_err());
        let d = sketch(&Structure::new(2));
        let mut bytes = encode_sketch(&d);
        bytes.push(0);
        assert!(decode_sketch(&bytes).is_err());
    }

    #[test]
    fn set_comparison_rule() {
        assert_eq!(compare_triple_sets(&[1, 2], &[0, 1, 2]), Ordering::Less);
        assert_eq!(compare_triple_sets(&[1, 3], &[2, 3]), Ordering::Less);
        assert_eq!(compare_triple_sets(&[1, 4], &[1, 3]), Ordering::Greater);
        assert_eq!(compare_triple_sets(&[1, 4], &[1, 4]), Ordering::Equal);
    }

    #[test]
    fn sparse_rows_compare_like_full_sets() {
        use rand::{Rng, SeedableRng};
        let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let k = 3u32;
        let full = |row: &[(u64, u64)]| -> Vec<(u64, u64)> {
            let mut out = Vec::new();
            for x in 0..k {
                for y in 0..k {
                    let key = pack(x, y);
                    out.push((key, row.iter().find(|e| e.0 == key).map_or(0, |e| e.1)));
                }
            }
            out
        };
        let random_row = |r: &mut rand_chacha::ChaCha8Rng| -> Vec<(u64, u64)> {
            let mut row = Vec::new();
            for i in 0..k * k {
                if r.gen_bool(0.4) {
                    row.push((pack(i / k, i % k), r.gen_range(1..3)));
                }
            }
            row
        };
        for _ in 0..500 {
            let (a, b) = (random_row(&mut r), random_row(&mut r));
            assert_eq!(
                compare_rows(&a, &b),
                compare_triple_sets(&full(&a), &full(&b)),
                "{a:?} {b:?}"
            );
        }
    }

    #[test]
    fn finer_configuration_merges_to_coarsest() {
        // discrete colouring of an edgeless 3-vertex structure collapses to diag/off-diag
        let a = Structure::new(3).with_relation(sym("0"), []).unwrap();
        let table: Vec<u32> = (0..9).collect();
        let fine = CoherentConfiguration::from_color_table(3, 9, table);
        let d = canonical_sketch(&a, &fine).unwrap();
        assert_eq!(d, sketch(&a));
        assert_eq!(d.num_colors(), 2);
    }

    #[test]
    fn rejects_non_refining_configuration() {
        let a = Structure::new(2).with_relation(sym("0"), [(0, 1)]).unwrap();
        let coarse = CoherentConfiguration::from_color_table(2, 2, vec![0, 1, 1, 0]);
        assert!(matches!(
            canonical_sketch(&a, &coarse),
            Err(SketchError::NotRefining { .. })
        ));
    }
}
