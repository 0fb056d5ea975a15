//! Fixtures, CFI pairs, the k-WL program and the isomorphism drivers.

use std::collections::{BTreeMap, BTreeSet};

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::machine::{
    run_on_cloud, Cloud, Command, InternalRun, MachineError, Outcome, Program, RunOptions,
};
use crate::sketch::{encode_sketch, AlgebraicSketch};
use crate::stdlib::{closure_colors, ColorSet};
use crate::structure::{Pair, Relation, Structure, StructureError};
use crate::symbol::Symbol;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HarnessError {
    #[error("unknown fixture `{0}`")]
    UnknownFixture(String),
    #[error("CFI base must be a connected undirected loop-free graph over one relation")]
    BadCfiBase,
    #[error("unknown program `{0}`")]
    UnknownProgram(String),
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error(transparent)]
    Machine(#[from] MachineError),
}

pub const FIXTURES: [&str; 8] = ["C6", "TT", "K4", "K1_3", "P2", "DC3", "shrikhande", "rook4"];

fn edge_symbol() -> Symbol {
    Symbol::from_bits("0")
}

fn undirected(n: usize, edges: impl IntoIterator<Item = Pair>) -> Structure {
    let pairs: Vec<Pair> = edges
        .into_iter()
        .flat_map(|(u, v)| [(u, v), (v, u)])
        .collect();
    Structure::new(n)
        .with_relation(edge_symbol(), pairs)
        .expect("fixture edges in range")
}

pub fn fixture(name: &str) -> Result<Structure, HarnessError> {
    let s = match name {
        "C6" => undirected(6, (0..6).map(|i| (i, (i + 1) % 6))),
        "TT" => undirected(6, [(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3)]),
        "K4" => undirected(4, (0..4).flat_map(|u| (u + 1..4).map(move |v| (u, v)))),
        "K1_3" => undirected(4, [(0, 1), (0, 2), (0, 3)]),
        "P2" => Structure::new(2).with_relation(edge_symbol(), [(0, 1)])?,
        "DC3" => Structure::new(3).with_relation(edge_symbol(), [(0, 1), (1, 2), (2, 0)])?,
        "shrikhande" => {
            let id = |i: usize, j: usize| 4 * (i % 4) + j % 4;
            let steps = [(1, 0), (0, 1), (1, 1)];
            undirected(
                16,
                (0..16).flat_map(move |v| steps.map(|(a, b)| (v, id(v / 4 + a, v % 4 + b)))),
            )
        }
        "rook4" => {
            let pairs = (0..16).flat_map(|u| (u + 1..16).map(move |v| (u, v)));
            undirected(16, pairs.filter(|&(u, v)| u / 4 == v / 4 || u % 4 == v % 4))
        }
        other => return Err(HarnessError::UnknownFixture(other.to_string())),
    };
    Ok(s)
}

/// The untwisted and twisted CFI structures over a base graph.
#[derive(Clone, Debug)]
pub struct CfiPair {
    pub base: Structure,
    pub even: Structure,
    pub odd: Structure,
    /// base vertex of every gadget vertex, `None` for edge vertices
    pub gadget_of: Vec<Option<usize>>,
    /// the twisted base edge
    pub twisted: (usize, usize),
}

/// CFI construction: for each base vertex `v` one vertex per even subset of its incident
/// edges, for each base edge two vertices `a(e,0)`, `a(e,1)`; the subset vertex for `S` is
/// joined to `a(e, [e ∈ S])`, except at the second endpoint of the twisted edge, where the bit
/// is flipped. Each base vertex gets a diagonal relation on its subset vertices.
pub fn cfi_pair(base: &Structure) -> Result<CfiPair, HarnessError> {
    let syms: Vec<&Symbol> = base.symbols().collect();
    if syms.len() != 1 {
        return Err(HarnessError::BadCfiBase);
    }
    let rel = base.relation(syms[0]).unwrap();
    let n = base.n();
    if n < 2
        || rel.iter().any(|&(u, v)| u == v || !rel.contains(&(v, u)))
        || base.connected_components().len() != 1
    {
        return Err(HarnessError::BadCfiBase);
    }
    let edges: Vec<Pair> = rel.iter().copied().filter(|&(u, v)| u < v).collect();
    let twisted = edges[0];
    let edge_index: BTreeMap<Pair, usize> =
        edges.iter().enumerate().map(|(i, &e)| (e, i)).collect();
    let incident: Vec<Vec<usize>> = (0..n)
        .map(|v| {
            edges
                .iter()
                .enumerate()
                .filter(|(_, e)| e.0 == v || e.1 == v)
                .map(|(i, _)| i)
                .collect()
        })
        .collect();

    let mut gadget_of = Vec::new();
    // (base vertex, subset bitmask over its incident edges)
    let mut middles: Vec<(usize, u32)> = Vec::new();
    for (v, inc) in incident.iter().enumerate() {
        for mask in 0u32..(1 << inc.len()) {
            if mask.count_ones() % 2 == 0 {
                middles.push((v, mask));
                gadget_of.push(Some(v));
            }
        }
    }
    let a_base = middles.len();
    gadget_of.extend(std::iter::repeat_n(None, 2 * edges.len()));
    let total = a_base + 2 * edges.len();
    let a = |e: usize, bit: usize| a_base + 2 * e + bit;

    let build = |twist: bool| -> Result<Structure, HarnessError> {
        let mut pairs = Vec::new();
        for (m, &(v, mask)) in middles.iter().enumerate() {
            for (slot, &e) in incident[v].iter().enumerate() {
                let mut bit = ((mask >> slot) & 1) as usize;
                if twist && edge_index[&twisted] == e && v == twisted.1 {
                    bit ^= 1;
                }
                pairs.push((m, a(e, bit)));
                pairs.push((a(e, bit), m));
            }
        }
        let mut s = Structure::new(total).with_relation(edge_symbol(), pairs)?;
        // base-vertex colours as diagonal relations, named after the edge symbol
        let names = Symbol::first_free_n(n, |x| *x == edge_symbol());
        for (v, name) in names.into_iter().enumerate() {
            let loops = middles
                .iter()
                .enumerate()
                .filter(|(_, &(w, _))| w == v)
                .map(|(m, _)| (m, m));
            s = s.with_relation(name, loops)?;
        }
        Ok(s)
    };
    Ok(CfiPair {
        base: base.clone(),
        even: build(false)?,
        odd: build(true)?,
        gadget_of,
        twisted,
    })
}

/// Colours of pairs inside one connected component, from the sketch.
pub fn plain_colors(sk: &AlgebraicSketch) -> ColorSet {
    let mut seed: ColorSet = (0..sk.num_colors() as u32)
        .filter(|&r| sk.is_diagonal(r))
        .collect();
    for r in 0..sk.num_colors() as u32 {
        if sk.tau().iter().any(|s| sk.inside(r, s) == Some(true)) {
            seed.insert(r);
            seed.insert(sk.converse(r));
        }
    }
    closure_colors(sk, &seed)
}

/// For a two-component state: whether every diagonal colour meets both components.
pub fn components_equivalent(sk: &AlgebraicSketch) -> bool {
    let plain = plain_colors(sk);
    let crossing: Vec<u32> = (0..sk.num_colors() as u32)
        .filter(|r| !plain.contains(r))
        .collect();
    !crossing.is_empty()
        && (0..sk.num_colors() as u32)
            .filter(|&d| sk.is_diagonal(d))
            .all(|d| crossing.iter().any(|&r| sk.dom(r) == d && sk.codom(r) == d))
}

/// k-WL as a machine program: `k - 2` rounds of pairing up all pairs within components,
/// then a halt whose first byte says whether the two components look alike.
#[derive(Clone, Debug)]
pub struct KwlProgram {
    k: usize,
    round: usize,
    pending: Option<BTreeSet<Symbol>>,
    stage: u8,
}

impl KwlProgram {
    pub fn new(k: usize) -> Self {
        assert!(k >= 2, "k-WL needs k >= 2");
        KwlProgram {
            k,
            round: 0,
            pending: None,
            stage: 0,
        }
    }
}

pub fn kwl_program(k: usize) -> KwlProgram {
    KwlProgram::new(k)
}

impl Program for KwlProgram {
    fn next(&mut self, sk: &AlgebraicSketch) -> Command {
        match self.stage {
            0 if self.round + 2 >= self.k => Command::Halt(vec![components_equivalent(sk) as u8]),
            0 => {
                self.pending = Some(sk.tau().iter().cloned().collect());
                self.stage = 1;
                let pi = plain_colors(sk)
                    .iter()
                    .map(|&r| sk.color_name(r).clone())
                    .collect();
                Command::Create(pi)
            }
            1 => {
                let before = self.pending.as_ref().unwrap();
                let e = sk
                    .tau()
                    .iter()
                    .find(|s| !before.contains(*s))
                    .unwrap()
                    .clone();
                self.pending = Some([e.clone()].into());
                self.stage = 2;
                Command::AddPair(e)
            }
            2 => {
                let e = self.pending.take().unwrap().into_iter().next().unwrap();
                self.stage = 0;
                self.round += 1;
                Command::Forget(e)
            }
            _ => unreachable!(),
        }
    }
}

/// Exercises every command, each choice read off the sketch: create the diagonal, pair up the
/// smallest off-diagonal colour (least on ties), contract the greatest colour, forget the least
/// symbol, then halt with the colour count.
#[derive(Clone, Debug, Default)]
pub struct ProbeProgram {
    stage: u8,
}

impl Program for ProbeProgram {
    fn next(&mut self, sk: &AlgebraicSketch) -> Command {
        self.stage += 1;
        let k = sk.num_colors() as u32;
        match self.stage {
            1 => Command::Create(
                (0..k)
                    .filter(|&r| sk.is_diagonal(r))
                    .map(|r| sk.color_name(r).clone())
                    .collect(),
            ),
            2 => {
                let r = (0..k)
                    .filter(|&r| !sk.is_diagonal(r))
                    .min_by_key(|&r| sk.class_size(r))
                    .unwrap_or(0);
                Command::AddPair(sk.color_name(r).clone())
            }
            3 => Command::Contract(sk.color_name(k - 1).clone()),
            4 if !sk.tau().is_empty() => Command::Forget(sk.tau()[0].clone()),
            _ => Command::Halt(vec![(k % 256) as u8, sk.tau().len() as u8]),
        }
    }
}

/// Names accepted by [`named_program`].
pub const PROGRAM_NAMES: &str = "halt1, halt0, probe, kwl<k> (k >= 2)";

/// Named programs for drivers and the command line.
pub fn named_program(name: &str) -> Result<Box<dyn ProgramFactory>, HarnessError> {
    match name {
        "probe" => Ok(Box::new(|| {
            Box::new(ProbeProgram::default()) as Box<dyn Program>
        })),
        "halt1" => Ok(Box::new(|| {
            Box::new(crate::machine::HaltWith(vec![1])) as Box<dyn Program>
        })),
        "halt0" => Ok(Box::new(|| {
            Box::new(crate::machine::HaltWith(vec![0])) as Box<dyn Program>
        })),
        _ => {
            let k: usize = name
                .strip_prefix("kwl")
                .and_then(|k| k.parse().ok())
                .filter(|&k| k >= 2)
                .ok_or_else(|| HarnessError::UnknownProgram(name.to_string()))?;
            Ok(Box::new(move || {
                Box::new(KwlProgram::new(k)) as Box<dyn Program>
            }))
        }
    }
}

/// Produces fresh program instances; drivers need one per run.
pub trait ProgramFactory {
    fn make(&self) -> Box<dyn Program>;
}

impl<F: Fn() -> Box<dyn Program>> ProgramFactory for F {
    fn make(&self) -> Box<dyn Program> {
        self()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IsoVerdict {
    Isomorphic,
    NonIsomorphic,
    Indeterminate,
}

impl IsoVerdict {
    pub fn exit_code(self) -> i32 {
        match self {
            IsoVerdict::Isomorphic => 0,
            IsoVerdict::NonIsomorphic => 1,
            IsoVerdict::Indeterminate => 2,
        }
    }
}

/// Adds a symbol holding all pairs when a structure is disconnected.
pub fn connect(a: &Structure, name: &Symbol) -> Result<Structure, HarnessError> {
    let n = a.n();
    Ok(a.clone().with_relation(
        name.clone(),
        (0..n).flat_map(|u| (0..n).map(move |v| (u, v))),
    )?)
}

fn augmented_pair(a1: &Structure, a2: &Structure) -> Result<(Structure, Structure), HarnessError> {
    if a1.vocabulary() != a2.vocabulary() {
        return Err(StructureError::VocabularyMismatch.into());
    }
    let disconnected = |a: &Structure| a.n() != 1 && a.connected_components().len() != 1;
    if disconnected(a1) || disconnected(a2) {
        let name = Symbol::first_free(|s| a1.contains_symbol(s));
        Ok((connect(a1, &name)?, connect(a2, &name)?))
    } else {
        Ok((a1.clone(), a2.clone()))
    }
}

/// Runs a program on the disjoint union and reads its answer.
pub fn iso_test(
    a1: &Structure,
    a2: &Structure,
    prog: &mut dyn Program,
    opts: RunOptions,
) -> Result<(IsoVerdict, InternalRun), HarnessError> {
    let (b1, b2) = augmented_pair(a1, a2)?;
    let run = run_on_cloud(Cloud::from_union(&b1, &b2)?, prog, opts)?;
    let verdict = match &run.outcome {
        Outcome::BudgetExhausted => IsoVerdict::Indeterminate,
        o if o.accepts() => IsoVerdict::Isomorphic,
        _ => IsoVerdict::NonIsomorphic,
    };
    Ok((verdict, run))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Distinction {
    /// first step whose sketches differ
    Distinguished(usize),
    NotDistinguished,
    Indeterminate,
}

/// Runs the program on both structures in lockstep and compares what it observes.
pub fn distinguisher_run(
    a1: &Structure,
    a2: &Structure,
    programs: &dyn ProgramFactory,
    opts: RunOptions,
) -> Result<Distinction, HarnessError> {
    if a1.vocabulary() != a2.vocabulary() {
        return Err(StructureError::VocabularyMismatch.into());
    }
    let (mut p1, mut p2) = (programs.make(), programs.make());
    let (mut c1, mut c2) = (Cloud::new(a1.clone()), Cloud::new(a2.clone()));
    let mut cost = c1.sketch().encoded_len().max(c2.sketch().encoded_len());
    let mut step = 0;
    loop {
        if c1.sketch() != c2.sketch() {
            return Ok(Distinction::Distinguished(step));
        }
        if cost.saturating_add(1) > opts.budget {
            return Ok(Distinction::Indeterminate);
        }
        let (x, y) = (p1.next(c1.sketch()), p2.next(c2.sketch()));
        debug_assert_eq!(x, y, "equal observations yield equal commands");
        cost += 1;
        if let Command::Halt(_) = x {
            return Ok(Distinction::NotDistinguished);
        }
        let wrap = |e| MachineError::Aborted {
            step,
            source: Box::new(e),
        };
        c1 = c1.execute(&x).map_err(wrap)?;
        c2 = c2.execute(&y).map_err(wrap)?;
        cost = cost.saturating_add(c1.sketch().encoded_len().max(c2.sketch().encoded_len()));
        step += 1;
    }
}

/// Transcript of the program on `A ⊎ A`, as bytes: per step the sketch encoding, then the
/// command, then the outcome.
pub fn complete_invariant(
    a: &Structure,
    prog: &mut dyn Program,
    opts: RunOptions,
) -> Result<Vec<u8>, HarnessError> {
    let (b, _) = augmented_pair(a, a)?;
    let run = run_on_cloud(Cloud::from_union(&b, &b)?, prog, opts)?;
    Ok(transcript_bytes(&run))
}

pub fn transcript_bytes(run: &InternalRun) -> Vec<u8> {
    let mut out = Vec::new();
    for step in &run.steps {
        let sk = encode_sketch(&step.sketch);
        out.extend_from_slice(&(sk.len() as u64).to_be_bytes());
        out.extend_from_slice(&sk);
        let cmd = step
            .command
            .as_ref()
            .map(ToString::to_string)
            .unwrap_or_default();
        out.extend_from_slice(&(cmd.len() as u64).to_be_bytes());
        out.extend_from_slice(cmd.as_bytes());
    }
    out.extend_from_slice(run.outcome.to_string().as_bytes());
    out
}

pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Concrete relation `E` restricted to the vertices of one CFI gadget, for inspection.
pub fn gadget_edges(p: &CfiPair, v: usize, odd: bool) -> Relation {
    let s = if odd { &p.odd } else { &p.even };
    s.relation(&edge_symbol())
        .unwrap()
        .iter()
        .copied()
        .filter(|&(x, y)| p.gadget_of[x] == Some(v) || p.gadget_of[y] == Some(v))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::run_program;

    #[test]
    fn fixtures_have_expected_shape() {
        for name in FIXTURES {
            fixture(name).unwrap();
        }
        let c6 = fixture("C6").unwrap();
        assert_eq!((c6.n(), c6.edge_count()), (6, 12));
        for name in ["shrikhande", "rook4"] {
            let g = fixture(name).unwrap();
            let e = g.relation(&edge_symbol()).unwrap();
            for v in 0..16 {
                assert_eq!(e.iter().filter(|p| p.0 == v).count(), 6);
            }
        }
        assert!(fixture("nope").is_err());
    }

    #[test]
    fn cfi_sizes() {
        let p = cfi_pair(&fixture("K4").unwrap()).unwrap();
        assert_eq!(p.even.n(), 28);
        assert_eq!(p.odd.n(), 28);
        assert_eq!(p.even.edge_count(), p.odd.edge_count());
        assert!(cfi_pair(&fixture("DC3").unwrap()).is_err());
        assert_eq!(gadget_edges(&p, 0, false).len(), 24);
    }

    #[test]
    fn kwl2_halts_at_once() {
        let run = run_program(
            &fixture("C6").unwrap(),
            &mut kwl_program(2),
            RunOptions::default(),
        )
        .unwrap();
        assert_eq!(run.steps.len(), 1);
        assert_eq!(run.outcome, Outcome::Halted(vec![0]));
    }

    #[test]
    fn named_programs() {
        assert!(named_program("kwl3").is_ok());
        assert!(named_program("kwl1").is_err());
        assert!(named_program("x").is_err());
    }
}
