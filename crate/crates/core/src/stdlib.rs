//! Sketch-computable relation operations, written as machine fragments.
//!
//! Every operation reads the current sketch, derives a colour set from the
//! subset matrix and intersection numbers, and issues `create` (plus
//! `addPair`/`forget` for [`pure_add_pair`]). Nothing here touches vertices.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::machine::{Command, MachineError, Session};
use crate::refine::CoherentConfiguration;
use crate::sketch::AlgebraicSketch;
use crate::symbol::Symbol;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StdlibError {
    #[error("unknown relation symbol {0}")]
    UnknownSymbol(Symbol),
    #[error("relation {0} is not diagonal")]
    NotDiagonal(Symbol),
    #[error(transparent)]
    Machine(#[from] MachineError),
}

pub type ColorSet = BTreeSet<u32>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BooleanOp {
    Union,
    Intersection,
    Difference,
}

/// Colours whose class lies inside `e`.
pub fn colors_in(sk: &AlgebraicSketch, e: &Symbol) -> Result<ColorSet, StdlibError> {
    sk.colors_inside(e)
        .map(|v| v.into_iter().collect())
        .ok_or_else(|| StdlibError::UnknownSymbol(e.clone()))
}

/// Colours `R` with `q(R', R'', R) = 0` whenever `R' != R''`.
pub fn diagonal_colors(sk: &AlgebraicSketch) -> ColorSet {
    let k = sk.num_colors() as u32;
    let mut off: ColorSet = BTreeSet::new();
    for r1 in 0..k {
        for &(r2, r3, count) in sk.q_row(r1) {
            if r1 != r2 && count > 0 {
                off.insert(r3);
            }
        }
    }
    (0..k).filter(|r| !off.contains(r)).collect()
}

/// Colours of `a ∘ b`: every `R` with `q(R, R1, R2) >= 1` for some `R1 ∈ a`, `R2 ∈ b`.
pub fn compose_colors(sk: &AlgebraicSketch, a: &ColorSet, b: &ColorSet) -> ColorSet {
    (0..sk.num_colors() as u32)
        .filter(|&r| {
            sk.q_row(r)
                .iter()
                .any(|&(r1, r2, c)| c > 0 && a.contains(&r1) && b.contains(&r2))
        })
        .collect()
}

/// Colours of the converse: `R` with `q(D, R1, R) >= 1` for a diagonal `D` and `R1 ∈ a`.
pub fn converse_colors(sk: &AlgebraicSketch, a: &ColorSet) -> ColorSet {
    let diag = diagonal_colors(sk);
    let mut out = BTreeSet::new();
    for &d in &diag {
        for &(r1, r, c) in sk.q_row(d) {
            if c > 0 && a.contains(&r1) {
                out.insert(r);
            }
        }
    }
    out
}

/// Colours of the transitive closure of `a`.
pub fn closure_colors(sk: &AlgebraicSketch, a: &ColorSet) -> ColorSet {
    let mut acc = a.clone();
    loop {
        let step = compose_colors(sk, &acc, a);
        let before = acc.len();
        acc.extend(step);
        if acc.len() == before {
            return acc;
        }
    }
}

/// Diagonal colours `D` with `D ∘ a` non-empty.
pub fn dom_colors(sk: &AlgebraicSketch, a: &ColorSet) -> ColorSet {
    let diag = diagonal_colors(sk);
    diag.into_iter()
        .filter(|&d| !compose_colors(sk, &[d].into(), a).is_empty())
        .collect()
}

pub fn codom_colors(sk: &AlgebraicSketch, a: &ColorSet) -> ColorSet {
    let diag = diagonal_colors(sk);
    diag.into_iter()
        .filter(|&d| !compose_colors(sk, a, &[d].into()).is_empty())
        .collect()
}

fn names(sk: &AlgebraicSketch, set: &ColorSet) -> BTreeSet<Symbol> {
    set.iter().map(|&r| sk.color_name(r).clone()).collect()
}

/// Names a colour set as a fresh relation symbol.
pub fn create_colors(s: &mut Session, set: &ColorSet) -> Result<Symbol, StdlibError> {
    let pi = names(s.sketch(), set);
    Ok(s.create(pi)?)
}

pub fn op_boolean(
    s: &mut Session,
    kind: BooleanOp,
    e1: &Symbol,
    e2: &Symbol,
) -> Result<Symbol, StdlibError> {
    let (a, b) = (colors_in(s.sketch(), e1)?, colors_in(s.sketch(), e2)?);
    let set = match kind {
        BooleanOp::Union => &a | &b,
        BooleanOp::Intersection => &a & &b,
        BooleanOp::Difference => &a - &b,
    };
    create_colors(s, &set)
}

pub fn op_diag(s: &mut Session) -> Result<Symbol, StdlibError> {
    let set = diagonal_colors(s.sketch());
    create_colors(s, &set)
}

pub fn op_converse(s: &mut Session, e1: &Symbol) -> Result<Symbol, StdlibError> {
    let a = colors_in(s.sketch(), e1)?;
    let set = converse_colors(s.sketch(), &a);
    create_colors(s, &set)
}

pub fn op_compose(s: &mut Session, e1: &Symbol, e2: &Symbol) -> Result<Symbol, StdlibError> {
    let (a, b) = (colors_in(s.sketch(), e1)?, colors_in(s.sketch(), e2)?);
    let set = compose_colors(s.sketch(), &a, &b);
    create_colors(s, &set)
}

/// Pairs in a common strongly connected component (loops only on cycles).
pub fn op_scc(s: &mut Session, e1: &Symbol) -> Result<Symbol, StdlibError> {
    let sk = s.sketch();
    let closure = closure_colors(sk, &colors_in(sk, e1)?);
    let back = converse_colors(sk, &closure);
    let set = &closure & &back;
    create_colors(s, &set)
}

pub fn query_subset(sk: &AlgebraicSketch, e1: &Symbol, e2: &Symbol) -> Result<bool, StdlibError> {
    Ok(colors_in(sk, e1)?.is_subset(&colors_in(sk, e2)?))
}

pub fn query_equal(sk: &AlgebraicSketch, e1: &Symbol, e2: &Symbol) -> Result<bool, StdlibError> {
    Ok(colors_in(sk, e1)? == colors_in(sk, e2)?)
}

/// Number of pairs in `e1`, summed over its colours with sizes derived from `q`.
pub fn cardinality(sk: &AlgebraicSketch, e1: &Symbol) -> Result<u64, StdlibError> {
    Ok(colors_in(sk, e1)?
        .into_iter()
        .map(|r| sk.class_size(r))
        .sum())
}

pub fn op_dom(s: &mut Session, e: &Symbol) -> Result<Symbol, StdlibError> {
    let a = colors_in(s.sketch(), e)?;
    let set = dom_colors(s.sketch(), &a);
    create_colors(s, &set)
}

pub fn op_codom(s: &mut Session, e: &Symbol) -> Result<Symbol, StdlibError> {
    let a = colors_in(s.sketch(), e)?;
    let set = codom_colors(s.sketch(), &a);
    create_colors(s, &set)
}

pub fn op_supp(s: &mut Session, e: &Symbol) -> Result<Symbol, StdlibError> {
    let a = colors_in(s.sketch(), e)?;
    let set = &dom_colors(s.sketch(), &a) | &codom_colors(s.sketch(), &a);
    create_colors(s, &set)
}

/// `addPair(E)` issued one colour at a time.
///
/// Each round pairs up the least colour left in the remainder, removes the
/// pairs just materialised (`E_left ∘ D ∘ E_right⁻¹`) from the remainder, and
/// continues until it is empty. The per-round diagonal symbols are merged into
/// one, which ends up under the name a direct `addPair(E)` would have chosen.
/// An empty `E` is handed to `addPair` directly, since only that creates the
/// pair-projection symbols without adding vertices.
pub fn pure_add_pair(s: &mut Session, e: &Symbol) -> Result<(), StdlibError> {
    let mut remainder = colors_in(s.sketch(), e)?;
    if remainder.is_empty() {
        s.exec(Command::AddPair(e.clone()))?;
        return Ok(());
    }
    let mut rem_symbol: Option<Symbol> = None;
    let mut diagonals: Vec<Symbol> = Vec::new();
    loop {
        let least = *remainder.iter().next().unwrap();
        let rem_sym = rem_symbol.clone().unwrap_or_else(|| e.clone());
        let name = s.sketch().color_name(least).clone();
        let fresh = s.exec_new_symbols(Command::AddPair(name))?;
        let d = fresh
            .last()
            .cloned()
            .expect("addPair adds a diagonal symbol");
        diagonals.push(d.clone());
        let sk = s.sketch();
        let (left, right) = s
            .pair_symbols()
            .expect("pair symbols reserved after addPair");
        let paired = compose_colors(
            sk,
            &compose_colors(sk, &colors_in(sk, &left)?, &colors_in(sk, &d)?),
            &converse_colors(sk, &colors_in(sk, &right)?),
        );
        remainder = &colors_in(sk, &rem_sym)? - &paired;
        // colour indices are only valid for this sketch, so create before forgetting
        let next = if remainder.is_empty() {
            None
        } else {
            Some(create_colors(s, &remainder)?)
        };
        if let Some(old) = rem_symbol.take() {
            s.forget(&old)?;
        }
        match next {
            None => break,
            Some(x) => {
                remainder = colors_in(s.sketch(), &x)?;
                rem_symbol = Some(x);
            }
        }
    }
    if diagonals.len() > 1 {
        let sk = s.sketch();
        let mut all = ColorSet::new();
        for d in &diagonals {
            all.extend(colors_in(sk, d)?);
        }
        let merged = create_colors(s, &all)?;
        for d in &diagonals {
            s.forget(d)?;
        }
        let set = colors_in(s.sketch(), &merged)?;
        create_colors(s, &set)?;
        s.forget(&merged)?;
    }
    Ok(())
}

/// How a vertex set sits relative to the diagonal colour classes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SetClass {
    /// every diagonal class is inside or disjoint
    pub aligned: bool,
    /// exactly one diagonal class
    pub homogeneous: bool,
    /// aligned and every element has its own diagonal colour
    pub discrete: bool,
}

/// Classifies the set carried by a diagonal symbol, from the sketch alone.
pub fn classify_set(sk: &AlgebraicSketch, e_u: &Symbol) -> Result<SetClass, StdlibError> {
    let inside = colors_in(sk, e_u)?;
    let diag = diagonal_colors(sk);
    if !inside.is_subset(&diag) {
        return Err(StdlibError::NotDiagonal(e_u.clone()));
    }
    Ok(SetClass {
        aligned: true,
        homogeneous: inside.len() == 1,
        discrete: inside.iter().all(|&r| sk.class_size(r) == 1),
    })
}

/// Classifies an arbitrary vertex set against a configuration's diagonal classes.
pub fn classify_vertex_set(c: &CoherentConfiguration, u: &BTreeSet<usize>) -> SetClass {
    let mut members: std::collections::BTreeMap<u32, (usize, usize)> = Default::default();
    for v in 0..c.n() {
        let entry = members.entry(c.color(v, v)).or_default();
        entry.0 += 1;
        if u.contains(&v) {
            entry.1 += 1;
        }
    }
    let aligned = members.values().all(|&(all, hit)| hit == 0 || hit == all);
    let touched: Vec<_> = members.values().filter(|&&(_, hit)| hit > 0).collect();
    SetClass {
        aligned,
        homogeneous: aligned && touched.len() == 1,
        discrete: aligned && touched.iter().all(|&&(all, _)| all == 1),
    }
}
