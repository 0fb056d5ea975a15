//! Pair refinement to the coarsest coherent configuration, coherence checking,
//! and vertex colour refinement.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::structure::Structure;
use crate::symbol::Symbol;

/// Sparse row of intersection numbers: `(r2, r3, count)` sorted, zero entries omitted.
pub type QRow = Vec<(u32, u32, u32)>;

/// A colouring of all ordered pairs together with its derived algebra.
///
/// Colour ids are deterministic but not canonical.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoherentConfiguration {
    n: usize,
    num_colors: usize,
    color_of: Vec<u32>,
    representative: Vec<Option<(usize, usize)>>,
    converse: Vec<u32>,
    diagonal: Vec<bool>,
    q: Vec<QRow>,
}

impl CoherentConfiguration {
    /// Wraps an arbitrary colour table; derived data is read off the first pair of each class.
    pub fn from_color_table(n: usize, num_colors: usize, color_of: Vec<u32>) -> Self {
        assert_eq!(color_of.len(), n * n, "colour table must have n*n entries");
        let mut representative = vec![None; num_colors];
        for u in 0..n {
            for v in 0..n {
                let c = color_of[u * n + v] as usize;
                if c < num_colors && representative[c].is_none() {
                    representative[c] = Some((u, v));
                }
            }
        }
        let cols = transpose(&color_of, n);
        let mut converse = vec![u32::MAX; num_colors];
        let mut diagonal = vec![false; num_colors];
        let mut q = vec![QRow::new(); num_colors];
        let mut by_left: Vec<Vec<u32>> = vec![Vec::new(); n];
        let mut seconds = Vec::with_capacity(n);
        for c in 0..num_colors {
            if let Some((u, v)) = representative[c] {
                converse[c] = color_of[v * n + u];
                diagonal[c] = u == v;
                let row = &color_of[u * n..(u + 1) * n];
                if by_left[u].is_empty() {
                    by_left[u] = (0..n as u32).collect();
                    by_left[u].sort_by_key(|&w| row[w as usize]);
                }
                q[c] = sorted_profile(row, &cols[v * n..(v + 1) * n], &by_left[u], &mut seconds);
            }
        }
        CoherentConfiguration {
            n,
            num_colors,
            color_of,
            representative,
            converse,
            diagonal,
            q,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_colors(&self) -> usize {
        self.num_colors
    }

    pub fn color(&self, u: usize, v: usize) -> u32 {
        self.color_of[u * self.n + v]
    }

    pub fn color_table(&self) -> &[u32] {
        &self.color_of
    }

    pub fn representative(&self, c: u32) -> Option<(usize, usize)> {
        self.representative[c as usize]
    }

    pub fn converse_of(&self, c: u32) -> u32 {
        self.converse[c as usize]
    }

    pub fn is_diagonal(&self, c: u32) -> bool {
        self.diagonal[c as usize]
    }

    pub fn q_row(&self, c: u32) -> &QRow {
        &self.q[c as usize]
    }

    pub fn q(&self, r1: u32, r2: u32, r3: u32) -> u32 {
        let row = &self.q[r1 as usize];
        match row.binary_search_by(|&(a, b, _)| (a, b).cmp(&(r2, r3))) {
            Ok(i) => row[i].2,
            Err(_) => 0,
        }
    }

    /// All pairs of colour `c`, in row-major order.
    pub fn class(&self, c: u32) -> Vec<(usize, usize)> {
        let n = self.n;
        (0..n * n)
            .filter(|&i| self.color_of[i] == c)
            .map(|i| (i / n, i % n))
            .collect()
    }

    pub fn class_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.num_colors];
        for &c in &self.color_of {
            sizes[c as usize] += 1;
        }
        sizes
    }

    /// Applies one more refinement round and reports whether the partition stayed the same.
    pub fn is_stable(&self) -> bool {
        let n = self.n;
        let mut table = CountTable::new(n);
        let cols = transpose(&self.color_of, n);
        let mut seen: BTreeMap<(u32, QRow), ()> = BTreeMap::new();
        let mut per_color = vec![0usize; self.num_colors];
        for u in 0..n {
            for v in 0..n {
                let c = self.color(u, v);
                let key = (c, profile(&self.color_of, &cols, n, u, v, &mut table));
                if seen.insert(key, ()).is_none() {
                    per_color[c as usize] += 1;
                }
            }
        }
        per_color.iter().all(|&k| k <= 1)
    }
}

/// Why a colouring is not a coherent configuration refining a structure.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CoherenceError {
    #[error("configuration has {config} vertices, structure has {structure}")]
    DimensionMismatch { config: usize, structure: usize },
    #[error("partition: colour {color} out of range at pair {pair:?}")]
    ColorOutOfRange { color: u32, pair: (usize, usize) },
    #[error("partition: colour {color} has an empty class")]
    EmptyClass { color: u32 },
    #[error("diagonal: colour {color} holds {diagonal:?} and {off_diagonal:?}")]
    MixedDiagonal {
        color: u32,
        diagonal: (usize, usize),
        off_diagonal: (usize, usize),
    },
    #[error("converse: reversing colour {color} at {pair:?} gives {got}, expected {expected}")]
    Converse {
        color: u32,
        pair: (usize, usize),
        expected: u32,
        got: u32,
    },
    #[error("intersection numbers: {pair:?} and {reference:?} share colour {color} but differ at ({r2}, {r3})")]
    IntersectionNumber {
        color: u32,
        pair: (usize, usize),
        reference: (usize, usize),
        r2: u32,
        r3: u32,
    },
    #[error("stored intersection numbers of colour {color} do not match the colouring")]
    StoredIntersectionNumbers { color: u32 },
    #[error("refinement: colour {color} splits relation {symbol} at {inside:?} / {outside:?}")]
    NotRefining {
        color: u32,
        symbol: Symbol,
        inside: (usize, usize),
        outside: (usize, usize),
    },
}

/// Checks the four coherence axioms and that every class lies inside or outside each relation.
pub fn verify_coherent(
    c: &CoherentConfiguration,
    against: &Structure,
) -> Result<(), CoherenceError> {
    let n = c.n;
    if n != against.n() {
        return Err(CoherenceError::DimensionMismatch {
            config: n,
            structure: against.n(),
        });
    }
    let k = c.num_colors;
    let mut first: Vec<Option<(usize, usize)>> = vec![None; k];
    for u in 0..n {
        for v in 0..n {
            let col = c.color(u, v);
            if col as usize >= k {
                return Err(CoherenceError::ColorOutOfRange {
                    color: col,
                    pair: (u, v),
                });
            }
            first[col as usize].get_or_insert((u, v));
        }
    }
    if let Some(col) = first.iter().position(Option::is_none) {
        return Err(CoherenceError::EmptyClass { color: col as u32 });
    }
    let first: Vec<(usize, usize)> = first.into_iter().map(Option::unwrap).collect();

    for u in 0..n {
        for v in 0..n {
            let col = c.color(u, v) as usize;
            let (a, b) = first[col];
            if (a == b) != (u == v) {
                let (diagonal, off_diagonal) = if u == v {
                    ((u, v), (a, b))
                } else {
                    ((a, b), (u, v))
                };
                return Err(CoherenceError::MixedDiagonal {
                    color: col as u32,
                    diagonal,
                    off_diagonal,
                });
            }
        }
    }

    let conv: Vec<u32> = first.iter().map(|&(a, b)| c.color(b, a)).collect();
    for u in 0..n {
        for v in 0..n {
            let col = c.color(u, v);
            let got = c.color(v, u);
            if got != conv[col as usize] || conv[got as usize] != col {
                return Err(CoherenceError::Converse {
                    color: col,
                    pair: (u, v),
                    expected: conv[col as usize],
                    got,
                });
            }
        }
    }

    let cols = transpose(&c.color_of, n);
    let mut table = CountTable::new(n);
    // the fast check only says yes or no; rescan pair by pair to name a witness
    if !classes_are_uniform(&c.color_of, k, n) {
        let reference: Vec<QRow> = first
            .iter()
            .map(|&(a, b)| profile(&c.color_of, &cols, n, a, b, &mut table))
            .collect();
        for u in 0..n {
            for v in 0..n {
                let col = c.color(u, v);
                if let Some((r2, r3)) = profile_mismatch(
                    &c.color_of,
                    &cols,
                    n,
                    u,
                    v,
                    &reference[col as usize],
                    &mut table,
                ) {
                    return Err(CoherenceError::IntersectionNumber {
                        color: col,
                        pair: (u, v),
                        reference: first[col as usize],
                        r2,
                        r3,
                    });
                }
            }
        }
    }
    for (col, &(a, b)) in first.iter().enumerate() {
        let row = &c.q[col];
        let well_formed = row.iter().all(|e| e.2 > 0)
            && row.windows(2).all(|w| (w[0].0, w[0].1) < (w[1].0, w[1].1));
        if !well_formed
            || c.converse[col] != conv[col]
            || profile_mismatch(&c.color_of, &cols, n, a, b, row, &mut table).is_some()
        {
            return Err(CoherenceError::StoredIntersectionNumbers { color: col as u32 });
        }
    }

    for (s, rel) in against.relations() {
        let mut witness: Vec<[Option<(usize, usize)>; 2]> = vec![[None, None]; k];
        for u in 0..n {
            for v in 0..n {
                let col = c.color(u, v) as usize;
                let slot = usize::from(rel.contains(&(u, v)));
                witness[col][slot].get_or_insert((u, v));
                if let [Some(outside), Some(inside)] = witness[col] {
                    return Err(CoherenceError::NotRefining {
                        color: col as u32,
                        symbol: s.clone(),
                        inside,
                        outside,
                    });
                }
            }
        }
    }
    Ok(())
}

/// Open-addressing counter keyed by packed colour pairs, reset in time proportional to its use.
pub(crate) struct CountTable {
    keys: Vec<u64>,
    counts: Vec<u32>,
    used: Vec<usize>,
    shift: u32,
}

const EMPTY: u64 = u64::MAX;

impl CountTable {
    pub(crate) fn new(expected: usize) -> Self {
        let cap = (2 * expected + 2).next_power_of_two().max(4);
        CountTable {
            keys: vec![EMPTY; cap],
            counts: vec![0; cap],
            used: Vec::new(),
            shift: 64 - cap.trailing_zeros(),
        }
    }

    fn slot(&self, key: u64) -> usize {
        let mask = self.keys.len() - 1;
        let mut i = (key.wrapping_mul(0x9E37_79B9_7F4A_7C15) >> self.shift) as usize;
        while self.keys[i] != EMPTY && self.keys[i] != key {
            i = (i + 1) & mask;
        }
        i
    }

    pub(crate) fn add(&mut self, key: u64) {
        let i = self.slot(key);
        if self.keys[i] == EMPTY {
            self.keys[i] = key;
            self.used.push(i);
        }
        self.counts[i] += 1;
    }

    pub(crate) fn get(&self, key: u64) -> u32 {
        let i = self.slot(key);
        if self.keys[i] == key {
            self.counts[i]
        } else {
            0
        }
    }

    /// Slot and count of a present key.
    pub(crate) fn find(&self, key: u64) -> Option<(usize, u32)> {
        let i = self.slot(key);
        (self.keys[i] == key).then(|| (i, self.counts[i]))
    }

    pub(crate) fn capacity(&self) -> usize {
        self.keys.len()
    }

    pub(crate) fn distinct(&self) -> usize {
        self.used.len()
    }

    pub(crate) fn drain_sorted(&mut self) -> Vec<(u64, u32)> {
        let mut out: Vec<(u64, u32)> = self
            .used
            .iter()
            .map(|&i| (self.keys[i], self.counts[i]))
            .collect();
        self.clear();
        out.sort_unstable();
        out
    }

    pub(crate) fn clear(&mut self) {
        for &i in &self.used {
            self.keys[i] = EMPTY;
            self.counts[i] = 0;
        }
        self.used.clear();
    }
}

fn pack(a: u32, b: u32) -> u64 {
    (a as u64) << 32 | b as u64
}

/// Profile of a pair from its row, its column, and the midpoints ordered by row colour; only
/// the column colours within one row colour need sorting.
fn sorted_profile(row: &[u32], col: &[u32], by_left: &[u32], seconds: &mut Vec<u32>) -> QRow {
    let mut out = QRow::new();
    let mut i = 0;
    while i < by_left.len() {
        let left = row[by_left[i] as usize];
        seconds.clear();
        while i < by_left.len() && row[by_left[i] as usize] == left {
            seconds.push(col[by_left[i] as usize]);
            i += 1;
        }
        seconds.sort_unstable();
        for &b in seconds.iter() {
            match out.last_mut() {
                Some((a2, b2, cnt)) if (*a2, *b2) == (left, b) => *cnt += 1,
                _ => out.push((left, b, 1)),
            }
        }
    }
    out
}

/// Counts the midpoints of `(u, v)`; `cols` is the transposed colour table.
fn fill(colors: &[u32], cols: &[u32], n: usize, u: usize, v: usize, table: &mut CountTable) {
    table.clear();
    let (row, col) = (&colors[u * n..(u + 1) * n], &cols[v * n..(v + 1) * n]);
    for w in 0..n {
        table.add(pack(row[w], col[w]));
    }
}

fn profile(
    colors: &[u32],
    cols: &[u32],
    n: usize,
    u: usize,
    v: usize,
    table: &mut CountTable,
) -> QRow {
    fill(colors, cols, n, u, v, table);
    table
        .drain_sorted()
        .into_iter()
        .map(|(key, c)| ((key >> 32) as u32, key as u32, c))
        .collect()
}

fn profile_mismatch(
    colors: &[u32],
    cols: &[u32],
    n: usize,
    u: usize,
    v: usize,
    reference: &QRow,
    table: &mut CountTable,
) -> Option<(u32, u32)> {
    fill(colors, cols, n, u, v, table);
    let found = reference
        .iter()
        .find(|&&(a, b, cnt)| table.get(pack(a, b)) != cnt)
        .map(|&(a, b, _)| (a, b));
    let extra = if found.is_none() && table.distinct() != reference.len() {
        let mine = table.drain_sorted();
        mine.iter()
            .map(|&(key, _)| ((key >> 32) as u32, key as u32))
            .find(|&(a, b)| {
                reference
                    .binary_search_by(|&(x, y, _)| (x, y).cmp(&(a, b)))
                    .is_err()
            })
    } else {
        None
    };
    table.clear();
    found.or(extra)
}

/// Renumbers `keys` densely in sorted key order.
fn renumber<K: Ord + Clone>(keys: &[K]) -> (Vec<u32>, usize) {
    let mut sorted: Vec<K> = keys.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let ids = keys
        .iter()
        .map(|k| sorted.binary_search(k).unwrap() as u32)
        .collect();
    (ids, sorted.len())
}

fn initial_colors(a: &Structure) -> (Vec<u32>, usize) {
    let n = a.n();
    let words = (2 * a.relations().len()).div_ceil(64).max(1);
    let mut keys = vec![vec![0u64; words + 1]; n * n];
    for u in 0..n {
        keys[u * n + u][0] = 1;
    }
    for (i, rel) in a.relations().values().enumerate() {
        let (fw, bw) = (2 * i, 2 * i + 1);
        for &(u, v) in rel {
            keys[u * n + v][1 + fw / 64] |= 1 << (fw % 64);
            keys[v * n + u][1 + bw / 64] |= 1 << (bw % 64);
        }
    }
    renumber(&keys)
}

/// Deterministic pseudo-random weights used to fingerprint pair profiles.
fn weights(k: usize, salt: u64) -> Vec<u64> {
    let mut state = salt;
    (0..k)
        .map(|_| {
            state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
            let mut z = state;
            z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
            (z ^ (z >> 31)) | 1
        })
        .collect()
}

/// One fingerprint round: each pair keyed by its colour and a hash of its profile.
fn fingerprint_round(colors: &[u32], k: usize, n: usize, round: u64) -> (Vec<u32>, usize) {
    let x = weights(k, 0x5EED_0000 ^ round);
    let y = weights(k, 0xC0FF_EE00 ^ round.rotate_left(17));
    // column-major copy of y-weights so the inner loop is contiguous
    let mut ycol = vec![0u64; n * n];
    for w in 0..n {
        for v in 0..n {
            ycol[v * n + w] = y[colors[w * n + v] as usize];
        }
    }
    let mut keys = Vec::with_capacity(n * n);
    let mut xrow = vec![0u64; n];
    for u in 0..n {
        for w in 0..n {
            xrow[w] = x[colors[u * n + w] as usize];
        }
        for v in 0..n {
            let col = &ycol[v * n..(v + 1) * n];
            let h = xrow
                .iter()
                .zip(col)
                .fold(0u64, |acc, (&a, &b)| acc.wrapping_add(a.wrapping_mul(b)));
            keys.push((colors[u * n + v], h));
        }
    }
    renumber(&keys)
}

fn exact_round(colors: &[u32], n: usize) -> (Vec<u32>, usize) {
    let mut table = CountTable::new(n);
    let cols = transpose(colors, n);
    let keys: Vec<(u32, QRow)> = (0..n * n)
        .map(|i| {
            (
                colors[i],
                profile(colors, &cols, n, i / n, i % n, &mut table),
            )
        })
        .collect();
    renumber(&keys)
}

fn iterate(mut colors: Vec<u32>, mut k: usize, n: usize, exact: bool) -> (Vec<u32>, usize) {
    let mut round = 0u64;
    loop {
        let (next, k2) = if exact {
            exact_round(&colors, n)
        } else {
            fingerprint_round(&colors, k, n, round)
        };
        round += 1;
        if k2 == k {
            return (colors, k);
        }
        colors = next;
        k = k2;
    }
}

fn transpose(colors: &[u32], n: usize) -> Vec<u32> {
    let mut t = vec![0u32; n * n];
    for u in 0..n {
        for v in 0..n {
            t[v * n + u] = colors[u * n + v];
        }
    }
    t
}

/// Exact check that all pairs of a class share one profile. Each class's reference profile is
/// loaded once; members count against it with generation stamps instead of clearing. When the
/// converse map is well defined, a class's profile fixes its converse's, so one of each pair suffices.
fn classes_are_uniform(colors: &[u32], k: usize, n: usize) -> bool {
    let cols = transpose(colors, n);
    let mut converse = vec![u32::MAX; k];
    for (c, &d) in colors.iter().zip(&cols) {
        match converse[*c as usize] {
            u32::MAX => converse[*c as usize] = d,
            e if e != d => return false,
            _ => {}
        }
    }
    let mut members: Vec<Vec<u32>> = vec![Vec::new(); k];
    for (i, &c) in colors.iter().enumerate() {
        if converse[c as usize] >= c {
            members[c as usize].push(i as u32);
        }
    }
    let mut reference = CountTable::new(n);
    // per slot: generation in the high half, count in the low half
    let mut seen = vec![0u64; reference.capacity()];
    let mut generation = 0u64;
    for class in members.iter().filter(|m| m.len() > 1) {
        reference.clear();
        let (u0, v0) = (class[0] as usize / n, class[0] as usize % n);
        let (row, col) = (&colors[u0 * n..(u0 + 1) * n], &cols[v0 * n..(v0 + 1) * n]);
        for w in 0..n {
            reference.add(pack(row[w], col[w]));
        }
        for &pair in &class[1..] {
            generation += 1;
            let fresh = generation << 32;
            let (u, v) = (pair as usize / n, pair as usize % n);
            let (row, col) = (&colors[u * n..(u + 1) * n], &cols[v * n..(v + 1) * n]);
            for w in 0..n {
                // both profiles count n midpoints, so never exceeding the reference means equality
                let Some((slot, limit)) = reference.find(pack(row[w], col[w])) else {
                    return false;
                };
                let old = seen[slot];
                let next = if old >> 32 == generation {
                    old + 1
                } else {
                    fresh | 1
                };
                seen[slot] = next;
                if next as u32 > limit {
                    return false;
                }
            }
        }
    }
    true
}

static SELF_CHECK: AtomicBool = AtomicBool::new(false);
static CHECKED: AtomicU64 = AtomicU64::new(0);
static FAILED: AtomicU64 = AtomicU64::new(0);
static CHECK_NANOS: AtomicU64 = AtomicU64::new(0);

/// Tally of configurations verified while self-checking was on.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SelfCheckCounts {
    pub checked: u64,
    pub failed: u64,
    pub elapsed: Duration,
}

/// When on, every [`refine_to_coarsest`] result is passed through [`verify_coherent`] and counted.
pub fn set_self_check(on: bool) {
    SELF_CHECK.store(on, Ordering::SeqCst);
}

pub fn self_check_counts() -> SelfCheckCounts {
    SelfCheckCounts {
        checked: CHECKED.load(Ordering::SeqCst),
        failed: FAILED.load(Ordering::SeqCst),
        elapsed: Duration::from_nanos(CHECK_NANOS.load(Ordering::SeqCst)),
    }
}

fn self_check(c: &CoherentConfiguration, a: &Structure) {
    let start = Instant::now();
    let ok = verify_coherent(c, a).is_ok();
    CHECK_NANOS.fetch_add(start.elapsed().as_nanos() as u64, Ordering::SeqCst);
    CHECKED.fetch_add(1, Ordering::SeqCst);
    if !ok {
        FAILED.fetch_add(1, Ordering::SeqCst);
    }
}

/// Coarsest coherent configuration refining `a` (two-dimensional stabilisation).
pub fn refine_to_coarsest(a: &Structure) -> CoherentConfiguration {
    let n = a.n();
    let (init, k0) = initial_colors(a);
    let (mut colors, mut k) = iterate(init.clone(), k0, n, false);
    if !classes_are_uniform(&colors, k, n) {
        // a fingerprint collision merged two profiles; redo with exact signatures
        (colors, k) = iterate(init, k0, n, true);
    }
    let c = CoherentConfiguration::from_color_table(n, k, colors);
    if SELF_CHECK.load(Ordering::Relaxed) {
        self_check(&c, a);
    }
    c
}

/// Stable vertex colouring with dense class ids.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VertexColoring {
    pub class_of: Vec<u32>,
    pub histogram: BTreeMap<u32, usize>,
}

/// Vertex colour refinement by per-symbol, per-direction neighbour-class counts.
pub fn color_refinement_1wl(a: &Structure) -> VertexColoring {
    let n = a.n();
    let rels: Vec<_> = a.relations().values().collect();
    let mut out_adj = vec![vec![Vec::new(); n]; rels.len()];
    let mut in_adj = vec![vec![Vec::new(); n]; rels.len()];
    for (i, rel) in rels.iter().enumerate() {
        for &(u, v) in rel.iter() {
            out_adj[i][u].push(v);
            in_adj[i][v].push(u);
        }
    }
    let loops: Vec<Vec<bool>> = (0..n)
        .map(|v| rels.iter().map(|r| r.contains(&(v, v))).collect())
        .collect();
    let (mut class_of, mut k) = renumber(&loops);
    loop {
        let sigs: Vec<(u32, Vec<Vec<u32>>)> = (0..n)
            .map(|v| {
                let mut parts = Vec::with_capacity(2 * rels.len());
                for i in 0..rels.len() {
                    for adj in [&out_adj[i][v], &in_adj[i][v]] {
                        let mut cs: Vec<u32> = adj.iter().map(|&w| class_of[w]).collect();
                        cs.sort_unstable();
                        parts.push(cs);
                    }
                }
                (class_of[v], parts)
            })
            .collect();
        let (next, k2) = renumber(&sigs);
        if k2 == k {
            break;
        }
        class_of = next;
        k = k2;
    }
    let mut histogram = BTreeMap::new();
    for &c in &class_of {
        *histogram.entry(c).or_insert(0) += 1;
    }
    VertexColoring {
        class_of,
        histogram,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbol::Symbol;

    fn sym(s: &str) -> Symbol {
        s.parse().unwrap()
    }

    fn undirected(n: usize, edges: &[(usize, usize)]) -> Structure {
        let pairs = edges.iter().flat_map(|&(u, v)| [(u, v), (v, u)]);
        Structure::new(n).with_relation(sym("0"), pairs).unwrap()
    }

    fn cycle(n: usize) -> Structure {
        undirected(n, &(0..n).map(|i| (i, (i + 1) % n)).collect::<Vec<_>>())
    }

    fn two_triangles() -> Structure {
        undirected(6, &[(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3)])
    }

    /// Independent oracle: iterate explicit sorted signatures until the class count stops growing.
    fn oracle_class_count(a: &Structure) -> usize {
        let n = a.n();
        let rels: Vec<_> = a.relations().values().collect();
        let mut col: Vec<Vec<String>> = (0..n)
            .map(|u| {
                (0..n)
                    .map(|v| {
                        let bits: String = rels
                            .iter()
                            .map(|r| {
                                format!(
                                    "{}{}",
                                    r.contains(&(u, v)) as u8,
                                    r.contains(&(v, u)) as u8
                                )
                            })
                            .collect();
                        format!("{}{}", (u == v) as u8, bits)
                    })
                    .collect()
            })
            .collect();
        let count = |c: &Vec<Vec<String>>| {
            c.iter()
                .flatten()
                .collect::<std::collections::BTreeSet<_>>()
                .len()
        };
        loop {
            let before = count(&col);
            let next: Vec<Vec<String>> = (0..n)
                .map(|u| {
                    (0..n)
                        .map(|v| {
                            let mut m: Vec<String> = (0..n)
                                .map(|w| format!("({},{})", col[u][w], col[w][v]))
                                .collect();
                            m.sort();
                            format!("[{}|{}]", col[u][v], m.join(""))
                        })
                        .collect()
                })
                .collect();
            col = next;
            if count(&col) == before {
                return before;
            }
        }
    }

    #[test]
    fn cycle_and_triangles_class_counts() {
        let c6 = refine_to_coarsest(&cycle(6));
        let tt = refine_to_coarsest(&two_triangles());
        assert_eq!(c6.num_colors(), 4);
        assert_eq!(tt.num_colors(), 3);
        assert_eq!(c6.num_colors(), oracle_class_count(&cycle(6)));
        assert_eq!(tt.num_colors(), oracle_class_count(&two_triangles()));
        verify_coherent(&c6, &cycle(6)).unwrap();
        verify_coherent(&tt, &two_triangles()).unwrap();
    }

    #[test]
    fn complete_graph_intersection_number() {
        let k4 = undirected(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
        let c = refine_to_coarsest(&k4);
        assert_eq!(c.num_colors(), 2);
        let off = c.color(0, 1);
        assert_eq!(c.q(off, off, off), 2);
        assert!(c.is_stable());
        verify_coherent(&c, &k4).unwrap();
    }

    #[test]
    fn verify_rejects_bad_partitions() {
        let k4 = undirected(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
        let good: Vec<u32> = (0..16).map(|i| u32::from(i / 4 != i % 4)).collect();
        verify_coherent(
            &CoherentConfiguration::from_color_table(4, 2, good.clone()),
            &k4,
        )
        .unwrap();
        let with_empty = CoherentConfiguration::from_color_table(4, 3, good);
        assert_eq!(
            verify_coherent(&with_empty, &k4),
            Err(CoherenceError::EmptyClass { color: 2 })
        );
        let mixed = CoherentConfiguration::from_color_table(4, 1, vec![0; 16]);
        assert!(matches!(
            verify_coherent(&mixed, &k4),
            Err(CoherenceError::MixedDiagonal { .. })
        ));
        let c6 = cycle(6);
        assert!(matches!(
            verify_coherent(&refine_to_coarsest(&c6), &k4),
            Err(CoherenceError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn verify_rejects_non_refining() {
        let p2 = Structure::new(2).with_relation(sym("0"), [(0, 1)]).unwrap();
        let coarse = CoherentConfiguration::from_color_table(2, 2, vec![0, 1, 1, 0]);
        assert!(matches!(
            verify_coherent(&coarse, &p2),
            Err(CoherenceError::NotRefining { .. })
        ));
    }

    #[test]
    fn single_edge_has_four_colors() {
        let p2 = Structure::new(2).with_relation(sym("0"), [(0, 1)]).unwrap();
        let c = refine_to_coarsest(&p2);
        assert_eq!(c.num_colors(), 4);
        verify_coherent(&c, &p2).unwrap();
    }

    #[test]
    fn one_wl_cases() {
        let c6 = color_refinement_1wl(&cycle(6));
        let tt = color_refinement_1wl(&two_triangles());
        assert_eq!(c6.histogram.len(), 1);
        assert_eq!(c6.histogram, tt.histogram);
        let star = undirected(4, &[(0, 1), (0, 2), (0, 3)]);
        let s = color_refinement_1wl(&star);
        assert_eq!(s.histogram.len(), 2);
        assert_ne!(s.class_of[0], s.class_of[1]);
    }

    #[test]
    fn exact_and_fingerprint_rounds_agree() {
        let a = undirected(7, &[(0, 1), (1, 2), (2, 3), (3, 0), (4, 5), (5, 6), (1, 5)]);
        let (init, k0) = initial_colors(&a);
        let fast = iterate(init.clone(), k0, 7, false);
        let exact = iterate(init, k0, 7, true);
        assert_eq!(fast.1, exact.1);
        assert_eq!(fast.1, oracle_class_count(&a));
    }

    #[test]
    fn uniformity_check() {
        let a = undirected(4, &[(0, 1), (1, 2), (2, 3)]);
        let (init, k0) = initial_colors(&a);
        assert!(!classes_are_uniform(&init, k0, 4));
        let (done, k) = iterate(init, k0, 4, true);
        assert!(classes_are_uniform(&done, k, 4));
        // one class whose converse pairs land in two classes
        let mut broken = vec![0u32; 4];
        broken[0] = 1;
        broken[2] = 2;
        assert!(!classes_are_uniform(&broken, 3, 2));
    }
}
