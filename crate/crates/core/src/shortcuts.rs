//! Sketch-to-sketch computations that predict the machine's next sketch
//! without touching vertices: subrestriction, contraction, disjoint union
//! and crossing-pair creation.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

use crate::machine::Cloud;
use crate::refine::QRow;
use crate::sketch::{canonicalize, AlgebraicSketch, ColoredAlgebra};
use crate::stdlib::{closure_colors, compose_colors, converse_colors, ColorSet};
use crate::symbol::{Symbol, Vocabulary};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ShortcutError {
    #[error("unknown relation symbol {0}")]
    UnknownSymbol(Symbol),
    #[error("colour index {0} out of range")]
    UnknownColor(u32),
    #[error("relation {0} is not diagonal")]
    NotDiagonal(Symbol),
    #[error("vocabularies differ")]
    VocabularyMismatch,
    #[error("colour {0} is not crossing")]
    NotCrossing(u32),
    #[error("state is not normalised: {0}")]
    NotNormalised(&'static str),
}

fn diagonals(d: &AlgebraicSketch) -> Vec<u32> {
    (0..d.num_colors() as u32)
        .filter(|&r| d.is_diagonal(r))
        .collect()
}

/// Sorts and sums a row given as loose triples, dropping zeros.
fn collect_row(mut entries: Vec<(u32, u32, u64)>) -> QRow {
    entries.sort_unstable();
    let mut row: Vec<(u32, u32, u64)> = Vec::new();
    for (a, b, c) in entries {
        match row.last_mut() {
            Some((x, y, acc)) if (*x, *y) == (a, b) => *acc += c,
            _ => row.push((a, b, c)),
        }
    }
    row.into_iter()
        .filter(|&(_, _, c)| c > 0)
        .map(|(a, b, c)| (a, b, c as u32))
        .collect()
}

/// Sketch of the subrestriction to the vocabulary `sub_vocab` and the vertex set carried by `e_u`.
pub fn sketch_of_subrestriction(
    d: &AlgebraicSketch,
    sub_vocab: &Vocabulary,
    e_u: &Symbol,
) -> Result<AlgebraicSketch, ShortcutError> {
    let inside: BTreeSet<u32> = d
        .colors_inside(e_u)
        .ok_or_else(|| ShortcutError::UnknownSymbol(e_u.clone()))?
        .into_iter()
        .collect();
    if inside.iter().any(|&r| !d.is_diagonal(r)) {
        return Err(ShortcutError::NotDiagonal(e_u.clone()));
    }
    if let Some(s) = sub_vocab.iter().find(|s| d.symbol_index(s).is_none()) {
        return Err(ShortcutError::UnknownSymbol(s.clone()));
    }
    let kept: Vec<u32> = (0..d.num_colors() as u32)
        .filter(|&r| inside.contains(&d.dom(r)) && inside.contains(&d.codom(r)))
        .collect();
    let index: HashMap<u32, u32> = kept
        .iter()
        .enumerate()
        .map(|(i, &r)| (r, i as u32))
        .collect();
    let containing = kept
        .iter()
        .map(|&r| {
            sub_vocab
                .iter()
                .filter(|s| d.inside(r, s) == Some(true))
                .cloned()
                .collect()
        })
        .collect();
    let q = kept
        .iter()
        .map(|&r| {
            d.q_row(r)
                .iter()
                .filter_map(|&(a, b, c)| Some((*index.get(&a)?, *index.get(&b)?, c)))
                .collect()
        })
        .collect();
    Ok(canonicalize(&ColoredAlgebra {
        tau: sub_vocab.clone(),
        containing,
        q,
    }))
}

/// Sketch after `contract` on colour `r`; `reserved` lists names the machine never hands out
/// as fresh symbols.
pub fn sketch_of_contraction(
    d: &AlgebraicSketch,
    r: u32,
    reserved: &BTreeSet<Symbol>,
) -> Result<AlgebraicSketch, ShortcutError> {
    let k = d.num_colors();
    if r as usize >= k {
        return Err(ShortcutError::UnknownColor(r));
    }
    let closure = closure_colors(d, &[r].into());
    let scc: ColorSet = &closure & &converse_colors(d, &closure);
    let diag = diagonals(d);
    let ev: ColorSet = diag
        .iter()
        .copied()
        .filter(|x| !scc.contains(x))
        .chain(scc.iter().copied())
        .collect();

    let mut parent: Vec<u32> = (0..k as u32).collect();
    fn find(p: &mut [u32], mut x: u32) -> u32 {
        while p[x as usize] != x {
            p[x as usize] = p[p[x as usize] as usize];
            x = p[x as usize];
        }
        x
    }
    for x in 0..k as u32 {
        let block = compose_colors(d, &compose_colors(d, &ev, &[x].into()), &ev);
        for y in block {
            let (a, b) = (find(&mut parent, x), find(&mut parent, y));
            if a != b {
                parent[a.max(b) as usize] = a.min(b);
            }
        }
    }
    let mut merged = vec![0u32; k];
    let mut members: Vec<Vec<u32>> = Vec::new();
    let mut root_index: HashMap<u32, u32> = HashMap::new();
    for x in 0..k as u32 {
        let root = find(&mut parent, x);
        let next = members.len() as u32;
        let m = *root_index.entry(root).or_insert(next);
        if m == next {
            members.push(Vec::new());
        }
        members[m as usize].push(x);
        merged[x as usize] = m;
    }

    // component size seen from each diagonal colour
    let mut comp_size = vec![1u64; k];
    for &dg in &diag {
        if scc.contains(&dg) {
            comp_size[dg as usize] = d
                .q_row(dg)
                .iter()
                .filter(|&&(a, b, _)| scc.contains(&a) && b == d.converse(a))
                .map(|&(_, _, c)| c as u64)
                .sum();
        }
    }

    let fresh = Symbol::first_free(|s| d.symbol_index(s).is_some() || reserved.contains(s));
    let mut tau: Vocabulary = d.tau().iter().cloned().collect();
    tau.insert(fresh.clone());
    let mut containing = Vec::with_capacity(members.len());
    let mut q = Vec::with_capacity(members.len());
    for group in &members {
        let rep = group[0];
        let mut inside: BTreeSet<Symbol> = d
            .tau()
            .iter()
            .filter(|s| group.iter().any(|&x| d.inside(x, s) == Some(true)))
            .cloned()
            .collect();
        if group.iter().any(|x| scc.contains(x)) {
            inside.insert(fresh.clone());
        }
        containing.push(inside);
        let mut acc: BTreeMap<(u32, u32, u64), u64> = BTreeMap::new();
        for &(a, b, c) in d.q_row(rep) {
            let size = comp_size[d.codom(a) as usize];
            *acc.entry((merged[a as usize], merged[b as usize], size))
                .or_default() += c as u64;
        }
        let entries = acc
            .into_iter()
            .map(|((a, b, size), total)| {
                debug_assert_eq!(total % size, 0);
                (a, b, total / size)
            })
            .collect();
        q.push(collect_row(entries));
    }
    Ok(canonicalize(&ColoredAlgebra { tau, containing, q }))
}

/// Sketch of a disjoint union, from the sketches of its two parts.
pub fn sketch_of_disjoint_union(
    d1: &AlgebraicSketch,
    d2: &AlgebraicSketch,
) -> Result<AlgebraicSketch, ShortcutError> {
    if d1.tau() != d2.tau() {
        return Err(ShortcutError::VocabularyMismatch);
    }
    let parts = [d1, d2];
    let diag = [diagonals(d1), diagonals(d2)];
    let (k1, k2) = (d1.num_colors() as u32, d2.num_colors() as u32);
    let offset = [0, k1];
    // crossing colour from diagonal `a` on side `s` to diagonal `b` on the other side
    let mut cross: HashMap<(usize, u32, u32), u32> = HashMap::new();
    let mut next = k1 + k2;
    for s in 0..2 {
        for &a in &diag[s] {
            for &b in &diag[1 - s] {
                cross.insert((s, a, b), next);
                next += 1;
            }
        }
    }
    let total = next as usize;
    let mut q: Vec<Vec<(u32, u32, u64)>> = vec![Vec::new(); total];
    let mut containing: Vec<BTreeSet<Symbol>> = vec![BTreeSet::new(); total];
    for s in 0..2 {
        let (me, other) = (parts[s], parts[1 - s]);
        for r in 0..me.num_colors() as u32 {
            let id = (offset[s] + r) as usize;
            containing[id] = me
                .tau()
                .iter()
                .filter(|t| me.inside(r, t) == Some(true))
                .cloned()
                .collect();
            let row = &mut q[id];
            for &(a, b, c) in me.q_row(r) {
                row.push((offset[s] + a, offset[s] + b, c as u64));
            }
            for &e in &diag[1 - s] {
                row.push((
                    cross[&(s, me.dom(r), e)],
                    cross[&(1 - s, e, me.codom(r))],
                    other.class_size(e),
                ));
            }
        }
        for &a in &diag[s] {
            for &b in &diag[1 - s] {
                let row = &mut q[cross[&(s, a, b)] as usize];
                // midpoint on the domain side
                for x in 0..me.num_colors() as u32 {
                    if me.dom(x) == a {
                        let c = me.q(a, x, me.converse(x)) as u64;
                        row.push((offset[s] + x, cross[&(s, me.codom(x), b)], c));
                    }
                }
                // midpoint on the codomain side
                for y in 0..other.num_colors() as u32 {
                    if other.codom(y) == b {
                        let c = other.q(b, other.converse(y), y) as u64;
                        row.push((cross[&(s, a, other.dom(y))], offset[1 - s] + y, c));
                    }
                }
            }
        }
    }
    let q = q.into_iter().map(collect_row).collect();
    let tau = d1.tau().iter().cloned().collect();
    Ok(canonicalize(&ColoredAlgebra { tau, containing, q }))
}

/// A colour of the union with the side of its domain made explicit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Sided {
    /// colour within one side
    Plain(u8, u32),
    /// from diagonal `.1` on side `.0` to diagonal `.2` on the other side
    Cross(u8, u32, u32),
}

/// One endpoint projection: side and diagonal colour.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Point {
    side: u8,
    diag: u32,
}

/// A vertex class of the enlarged structure.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Kind {
    Plain(u8, u32),
    /// pair vertex over a sided crossing colour
    Pair(u8, u32, u32),
}

impl Kind {
    fn points(self) -> [Point; 2] {
        match self {
            Kind::Plain(s, d) => [Point { side: s, diag: d }; 2],
            Kind::Pair(s, a, b) => [
                Point { side: s, diag: a },
                Point {
                    side: 1 - s,
                    diag: b,
                },
            ],
        }
    }

    fn own_color(self) -> Sided {
        match self {
            Kind::Plain(s, d) => Sided::Plain(s, d),
            Kind::Pair(s, a, b) => Sided::Cross(s, a, b),
        }
    }
}

/// Colour pattern of a pair of the enlarged structure: the two vertex kinds and the colours
/// between the projections `p_i(u)`, `p_j(v)` in row-major order.
type Pattern = (Kind, [Sided; 4], Kind);

struct SidedView<'a> {
    d: &'a AlgebraicSketch,
    plain: ColorSet,
    /// diagonal colours present on each side
    side_diags: [Vec<u32>; 2],
    /// vertices of each diagonal colour on one side
    per_side: Vec<u64>,
    cross: HashMap<(u32, u32), u32>,
}

impl<'a> SidedView<'a> {
    fn new(d: &'a AlgebraicSketch) -> Result<Self, ShortcutError> {
        let k = d.num_colors() as u32;
        let diag = diagonals(d);
        let mut gaifman: ColorSet = diag.iter().copied().collect();
        for r in 0..k {
            if d.tau().iter().any(|s| d.inside(r, s) == Some(true)) {
                gaifman.insert(r);
                gaifman.insert(d.converse(r));
            }
        }
        let plain = closure_colors(d, &gaifman);
        let mut cross = HashMap::new();
        for r in (0..k).filter(|r| !plain.contains(r)) {
            if cross.insert((d.dom(r), d.codom(r)), r).is_some() {
                return Err(ShortcutError::NotNormalised(
                    "crossing colours not determined by endpoints",
                ));
            }
        }
        if cross.is_empty() {
            return Err(ShortcutError::NotNormalised("a single component"));
        }
        // group diagonals along plain colours
        let mut group: BTreeMap<u32, u32> = BTreeMap::new();
        for &x in &diag {
            if group.contains_key(&x) {
                continue;
            }
            for r in plain.iter().filter(|&&r| d.dom(r) == x) {
                group.insert(d.codom(*r), x);
            }
        }
        let leaders: BTreeSet<u32> = group.values().copied().collect();
        let side_diags: [Vec<u32>; 2] = match leaders.len() {
            1 => [diag.clone(), diag.clone()],
            2 => {
                let first = *leaders.iter().next().unwrap();
                let (a, b): (Vec<u32>, Vec<u32>) = diag.iter().partition(|x| group[x] == first);
                [a, b]
            }
            _ => return Err(ShortcutError::NotNormalised("more than two components")),
        };
        let mut per_side = vec![0u64; k as usize];
        for &x in &diag {
            per_side[x as usize] = plain
                .iter()
                .filter(|&&r| d.dom(r) == x && d.codom(r) == x)
                .map(|&r| d.q(x, r, d.converse(r)) as u64)
                .sum();
        }
        let side_total: u64 = side_diags[0].iter().map(|&x| per_side[x as usize]).sum();
        let other_total: u64 = side_diags[1].iter().map(|&x| per_side[x as usize]).sum();
        if side_total + other_total != d.n() {
            return Err(ShortcutError::NotNormalised("more than two components"));
        }
        Ok(SidedView {
            d,
            plain,
            side_diags,
            per_side,
            cross,
        })
    }

    fn cross_color(&self, from: Point, to: Point) -> Sided {
        debug_assert_ne!(from.side, to.side);
        Sided::Cross(from.side, from.diag, to.diag)
    }

    fn merged(&self, c: Sided) -> u32 {
        match c {
            Sided::Plain(_, r) => r,
            Sided::Cross(_, a, b) => self.cross[&(a, b)],
        }
    }

    fn plain_colors(&self) -> impl Iterator<Item = u32> + '_ {
        self.plain.iter().copied()
    }

    /// Vertices `w` on `side` with prescribed diagonal (if any), described by the colour from
    /// `a` to `w` and from `w` to `b`; `ab` is the colour between the anchors.
    fn local(
        &self,
        side: u8,
        a: Option<Point>,
        b: Option<Point>,
        ab: Option<u32>,
    ) -> Vec<(u32, Option<u32>, Option<u32>, u64)> {
        let d = self.d;
        let mut out = Vec::new();
        match (a, b) {
            (Some(_), Some(_)) => {
                for &(x, y, c) in d.q_row(ab.expect("anchor colour")) {
                    if self.plain.contains(&x) {
                        out.push((d.codom(x), Some(x), Some(y), c as u64));
                    }
                }
            }
            (Some(a), None) => {
                for x in self.plain_colors().filter(|&x| d.dom(x) == a.diag) {
                    out.push((
                        d.codom(x),
                        Some(x),
                        None,
                        d.q(a.diag, x, d.converse(x)) as u64,
                    ));
                }
            }
            (None, Some(b)) => {
                for y in self.plain_colors().filter(|&y| d.codom(y) == b.diag) {
                    out.push((
                        d.dom(y),
                        None,
                        Some(y),
                        d.q(b.diag, d.converse(y), y) as u64,
                    ));
                }
            }
            (None, None) => {
                for &f in &self.side_diags[side as usize] {
                    out.push((f, None, None, self.per_side[f as usize]));
                }
            }
        }
        out
    }
}

/// Index and point of the projection lying on one side, if any.
type Anchor = Option<(usize, Point)>;

/// Sketch after `addPair` on every colour of `omega`, in canonical order, on a normalised state.
pub fn sketch_of_crossing_pairs(
    d: &AlgebraicSketch,
    omega: &ColorSet,
    pair_symbols: Option<&(Symbol, Symbol)>,
) -> Result<AlgebraicSketch, ShortcutError> {
    if let Some(&r) = omega.iter().find(|&&r| r as usize >= d.num_colors()) {
        return Err(ShortcutError::UnknownColor(r));
    }
    let view = SidedView::new(d)?;
    if let Some(&r) = omega.iter().find(|r| view.plain.contains(r)) {
        return Err(ShortcutError::NotCrossing(r));
    }
    if omega.is_empty() {
        return Ok(d.clone());
    }

    // vertex kinds
    let mut kinds: Vec<Kind> = Vec::new();
    for s in 0..2u8 {
        for &x in &view.side_diags[s as usize] {
            kinds.push(Kind::Plain(s, x));
        }
    }
    for s in 0..2u8 {
        for &a in &view.side_diags[s as usize] {
            for &b in &view.side_diags[1 - s as usize] {
                if omega.contains(&view.cross[&(a, b)]) {
                    kinds.push(Kind::Pair(s, a, b));
                }
            }
        }
    }

    // realisable patterns: for each pair of kinds, choose a plain colour between the two
    // projections sharing a side (one such couple for plain/pair mixes, two for pair/pair)
    let mut patterns: Vec<Pattern> = Vec::new();
    for &u in &kinds {
        for &v in &kinds {
            let (pu, pv) = (u.points(), v.points());
            // one projection couple per side holding projections of both
            let couples: Vec<(usize, usize)> = (0..2u8)
                .filter_map(|s| {
                    let i = (0..2).find(|&i| pu[i].side == s)?;
                    let j = (0..2).find(|&j| pv[j].side == s)?;
                    Some((i, j))
                })
                .collect();
            let options: Vec<Vec<u32>> = couples
                .iter()
                .map(|&(i, j)| {
                    view.plain_colors()
                        .filter(|&r| d.dom(r) == pu[i].diag && d.codom(r) == pv[j].diag)
                        .collect()
                })
                .collect();
            let mut choice = vec![0usize; couples.len()];
            if options.iter().any(Vec::is_empty) {
                continue;
            }
            loop {
                let mut cells = [Sided::Plain(0, 0); 4];
                for i in 0..2 {
                    for j in 0..2 {
                        let (a, b) = (pu[i], pv[j]);
                        cells[2 * i + j] = if a.side == b.side {
                            let c = couples
                                .iter()
                                .position(|&(ci, _)| pu[ci].side == a.side)
                                .unwrap();
                            Sided::Plain(a.side, options[c][choice[c]])
                        } else {
                            view.cross_color(a, b)
                        };
                    }
                }
                patterns.push((u, cells, v));
                let mut idx = 0;
                loop {
                    if idx == choice.len() {
                        break;
                    }
                    choice[idx] += 1;
                    if choice[idx] < options[idx].len() {
                        break;
                    }
                    choice[idx] = 0;
                    idx += 1;
                }
                if idx == choice.len() {
                    break;
                }
            }
        }
    }
    let index: HashMap<Pattern, u32> = patterns
        .iter()
        .enumerate()
        .map(|(i, p)| (*p, i as u32))
        .collect();

    let cell = |p: &Pattern, i: usize, j: usize| p.1[2 * i + j];
    let anchors = |p: &Pattern, side: u8| -> (Anchor, Anchor) {
        let (pu, pv) = (p.0.points(), p.2.points());
        let a = (0..2).find(|&i| pu[i].side == side).map(|i| (i, pu[i]));
        let b = (0..2).find(|&j| pv[j].side == side).map(|j| (j, pv[j]));
        (a, b)
    };
    // colour from projection `from` to a vertex `w` on `side` with diagonal `f`, given the
    // local colour when `from` is the anchor on that side
    let to_w = |from: Point, side: u8, f: u32, local: Option<u32>| -> Sided {
        if from.side == side {
            Sided::Plain(side, local.expect("anchor colour"))
        } else {
            view.cross_color(from, Point { side, diag: f })
        }
    };
    let from_w = |side: u8, f: u32, to: Point, local: Option<u32>| -> Sided {
        if to.side == side {
            Sided::Plain(side, local.expect("anchor colour"))
        } else {
            view.cross_color(Point { side, diag: f }, to)
        }
    };
    let local_on = |p: &Pattern, side: u8| {
        let (a, b) = anchors(p, side);
        let ab = match (a, b) {
            (Some((i, _)), Some((j, _))) => Some(view.merged(cell(p, i, j))),
            _ => None,
        };
        view.local(side, a.map(|x| x.1), b.map(|x| x.1), ab)
    };

    let mut q: Vec<QRow> = Vec::with_capacity(patterns.len());
    for p in &patterns {
        let (u, v) = (p.0, p.2);
        let (pu, pv) = (u.points(), v.points());
        let mut entries: Vec<(u32, u32, u64)> = Vec::new();
        let locals = [local_on(p, 0), local_on(p, 1)];
        let lookup = |pat: &Pattern| -> u32 {
            *index
                .get(pat)
                .unwrap_or_else(|| panic!("unrealised pattern {pat:?}"))
        };
        // plain midpoints
        for s in 0..2u8 {
            for &(f, x, y, c) in &locals[s as usize] {
                let w = Kind::Plain(s, f);
                let left: [Sided; 4] = std::array::from_fn(|n| to_w(pu[n / 2], s, f, x));
                let right: [Sided; 4] = std::array::from_fn(|n| from_w(s, f, pv[n % 2], y));
                entries.push((lookup(&(u, left, w)), lookup(&(w, right, v)), c));
            }
        }
        // pair midpoints
        for &w in kinds.iter().filter(|k| matches!(k, Kind::Pair(..))) {
            let Kind::Pair(s, fa, fb) = w else {
                unreachable!()
            };
            let t = 1 - s;
            for &(f1, x1, y1, c1) in locals[s as usize].iter().filter(|e| e.0 == fa) {
                for &(f2, x2, y2, c2) in locals[t as usize].iter().filter(|e| e.0 == fb) {
                    // w's projections: (s, f1) then (t, f2)
                    let left: [Sided; 4] = std::array::from_fn(|n| {
                        let from = pu[n / 2];
                        if n % 2 == 0 {
                            to_w(from, s, f1, x1)
                        } else {
                            to_w(from, t, f2, x2)
                        }
                    });
                    let right: [Sided; 4] = std::array::from_fn(|n| {
                        let to = pv[n % 2];
                        if n / 2 == 0 {
                            from_w(s, f1, to, y1)
                        } else {
                            from_w(t, f2, to, y2)
                        }
                    });
                    entries.push((lookup(&(u, left, w)), lookup(&(w, right, v)), c1 * c2));
                }
            }
        }
        q.push(collect_row(entries));
    }

    // vocabulary: old symbols, the pair projections and one diagonal symbol per colour of omega
    let old: BTreeSet<Symbol> = d.tau().iter().cloned().collect();
    let (left, right) = match pair_symbols {
        Some(p) => p.clone(),
        None => {
            let two = Symbol::first_free_n(2, |s| old.contains(s));
            (two[0].clone(), two[1].clone())
        }
    };
    let mut tau = old.clone();
    tau.insert(left.clone());
    tau.insert(right.clone());
    let mut d_names: BTreeMap<u32, Symbol> = BTreeMap::new();
    for &r in omega {
        let name = Symbol::first_free(|s| tau.contains(s));
        tau.insert(name.clone());
        d_names.insert(r, name);
    }
    let is_diag_cell = |c: Sided| matches!(c, Sided::Plain(_, r) if d.is_diagonal(r));
    let containing = patterns
        .iter()
        .map(|p| {
            let (u, v) = (p.0, p.2);
            let mut inside = BTreeSet::new();
            match (u, v) {
                (Kind::Plain(..), Kind::Plain(..)) => {
                    let r = view.merged(p.1[0]);
                    for s in d.tau() {
                        if d.inside(r, s) == Some(true) {
                            inside.insert(s.clone());
                        }
                    }
                }
                (Kind::Plain(..), Kind::Pair(..)) => {
                    if is_diag_cell(p.1[0]) {
                        inside.insert(left.clone());
                    }
                    if is_diag_cell(p.1[1]) {
                        inside.insert(right.clone());
                    }
                }
                (Kind::Pair(..), Kind::Pair(..))
                    if u == v && is_diag_cell(p.1[0]) && is_diag_cell(p.1[3]) =>
                {
                    inside.insert(d_names[&view.merged(u.own_color())].clone());
                }
                _ => {}
            }
            inside
        })
        .collect();
    Ok(canonicalize(&ColoredAlgebra { tau, containing, q }))
}

/// Crossing-pair shortcut for a cloud, checking normalisation against vertex provenance.
pub fn crossing_pairs_for_cloud(
    cloud: &Cloud,
    omega: &ColorSet,
) -> Result<AlgebraicSketch, ShortcutError> {
    if !cloud.is_normalised() {
        return Err(ShortcutError::NotNormalised("provenance"));
    }
    sketch_of_crossing_pairs(cloud.sketch(), omega, cloud.pair_symbols())
}
