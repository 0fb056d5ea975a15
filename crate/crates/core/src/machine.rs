//! The virtual machine: a cloud holding a structure and its coarsest
//! configuration, four mutating commands, and program runs that observe
//! nothing but canonical sketches.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::refine::{refine_to_coarsest, CoherentConfiguration};
use crate::sketch::{algebra_of, canonicalize_with_classes, encode_sketch, AlgebraicSketch};
use crate::structure::{Pair, Relation, Structure, StructureError};
use crate::symbol::{Symbol, Vocabulary};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MachineError {
    #[error("unknown relation symbol or colour {0}")]
    UnknownName(Symbol),
    #[error("{0} is not a colour of the current sketch")]
    UnknownColor(Symbol),
    #[error("{0} is not a relation symbol of the current vocabulary")]
    UnknownSymbol(Symbol),
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error("cannot parse command `{0}`")]
    BadCommand(String),
    #[error("step {step}: {source}")]
    Aborted {
        step: usize,
        source: Box<MachineError>,
    },
}

/// Where a vertex came from.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Origin {
    Input,
    /// pair vertex over two current vertex indices
    Pair(usize, usize),
    /// number of vertices merged into this one
    Component(usize),
}

/// Which input of a disjoint union a vertex belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    One,
    Two,
    Mixed,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct VertexInfo {
    pub origin: Origin,
    pub side: Side,
}

impl VertexInfo {
    pub fn is_plain(&self) -> bool {
        self.side != Side::Mixed
    }
}

/// A name in the current sketch: either a relation symbol or a colour.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Target {
    Symbol(Symbol),
    Color(Symbol),
}

/// One machine instruction.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Command {
    AddPair(Symbol),
    Contract(Symbol),
    Create(BTreeSet<Symbol>),
    Forget(Symbol),
    Halt(Vec<u8>),
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Command::AddPair(x) => write!(f, "addPair {x}"),
            Command::Contract(x) => write!(f, "contract {x}"),
            Command::Create(pi) => {
                f.write_str("create")?;
                for c in pi {
                    write!(f, " {c}")?;
                }
                Ok(())
            }
            Command::Forget(x) => write!(f, "forget {x}"),
            Command::Halt(out) => write!(f, "halt {}", hex::encode(out)),
        }
    }
}

impl FromStr for Command {
    type Err = MachineError;

    fn from_str(line: &str) -> Result<Self, Self::Err> {
        let bad = || MachineError::BadCommand(line.to_string());
        let toks: Vec<&str> = line.split_whitespace().collect();
        let name = |t: &str| t.parse::<Symbol>().map_err(|_| bad());
        match toks.as_slice() {
            ["addPair", x] => Ok(Command::AddPair(name(x)?)),
            ["contract", x] => Ok(Command::Contract(name(x)?)),
            ["forget", x] => Ok(Command::Forget(name(x)?)),
            ["create", rest @ ..] => Ok(Command::Create(
                rest.iter().map(|t| name(t)).collect::<Result<_, _>>()?,
            )),
            ["halt"] => Ok(Command::Halt(Vec::new())),
            ["halt", h] => Ok(Command::Halt(hex::decode(h).map_err(|_| bad())?)),
            _ => Err(bad()),
        }
    }
}

/// Structure, configuration and sketch, kept consistent after every command.
#[derive(Clone, Debug)]
pub struct Cloud {
    structure: Structure,
    config: CoherentConfiguration,
    sketch: AlgebraicSketch,
    /// canonical index of every configuration colour
    canon: Vec<u32>,
    provenance: Vec<VertexInfo>,
    pair_symbols: Option<(Symbol, Symbol)>,
}

impl Cloud {
    pub fn new(a: Structure) -> Self {
        let provenance = vec![
            VertexInfo {
                origin: Origin::Input,
                side: Side::One
            };
            a.n()
        ];
        Cloud::build(a, provenance, None)
    }

    /// Cloud over `a1 ⊎ a2` with side tags on the vertices.
    pub fn from_union(a1: &Structure, a2: &Structure) -> Result<Self, MachineError> {
        let u = a1.disjoint_union(a2)?;
        let provenance = (0..u.n())
            .map(|v| VertexInfo {
                origin: Origin::Input,
                side: if v < a1.n() { Side::One } else { Side::Two },
            })
            .collect();
        Ok(Cloud::build(u, provenance, None))
    }

    fn build(
        structure: Structure,
        provenance: Vec<VertexInfo>,
        pair_symbols: Option<(Symbol, Symbol)>,
    ) -> Self {
        let config = refine_to_coarsest(&structure);
        let alg =
            algebra_of(&structure, &config).expect("coarsest configuration refines its structure");
        let (sketch, canon) = canonicalize_with_classes(&alg);
        debug_assert_eq!(sketch.num_colors(), config.num_colors());
        Cloud {
            structure,
            config,
            sketch,
            canon,
            provenance,
            pair_symbols,
        }
    }

    pub fn structure(&self) -> &Structure {
        &self.structure
    }

    pub fn config(&self) -> &CoherentConfiguration {
        &self.config
    }

    pub fn sketch(&self) -> &AlgebraicSketch {
        &self.sketch
    }

    pub fn provenance(&self) -> &[VertexInfo] {
        &self.provenance
    }

    /// The reserved pair-projection symbols, once the first pair has been requested.
    pub fn pair_symbols(&self) -> Option<&(Symbol, Symbol)> {
        self.pair_symbols.as_ref()
    }

    /// Canonical colour index of pair `(u, v)`.
    pub fn canonical_color(&self, u: usize, v: usize) -> u32 {
        self.canon[self.config.color(u, v) as usize]
    }

    /// Vertices grouped by side, ignoring mixed ones.
    pub fn side_sets(&self) -> (BTreeSet<usize>, BTreeSet<usize>) {
        let pick = |s| {
            self.provenance
                .iter()
                .enumerate()
                .filter(|(_, p)| p.side == s)
                .map(|(v, _)| v)
                .collect()
        };
        (pick(Side::One), pick(Side::Two))
    }

    /// All vertices plain and the universe split into exactly the two sides as components.
    pub fn is_normalised(&self) -> bool {
        let (one, two) = self.side_sets();
        if one.is_empty() || two.is_empty() || one.len() + two.len() != self.structure.n() {
            return false;
        }
        let comps = self.structure.connected_components();
        comps.len() == 2
            && comps
                .iter()
                .all(|c| c.iter().all(|v| one.contains(v)) || c.iter().all(|v| two.contains(v)))
    }

    pub fn resolve(&self, name: &Symbol) -> Result<Target, MachineError> {
        if self.structure.contains_symbol(name) {
            Ok(Target::Symbol(name.clone()))
        } else if self.sketch.color_index(name).is_some() {
            Ok(Target::Color(name.clone()))
        } else {
            Err(MachineError::UnknownName(name.clone()))
        }
    }

    /// Pairs named by a target, in lexicographic order.
    pub fn pairs_of(&self, target: &Target) -> Result<Vec<Pair>, MachineError> {
        match target {
            Target::Symbol(s) => self
                .structure
                .relation(s)
                .map(|r| r.iter().copied().collect())
                .ok_or_else(|| MachineError::UnknownSymbol(s.clone())),
            Target::Color(c) => {
                let idx = self
                    .sketch
                    .color_index(c)
                    .ok_or_else(|| MachineError::UnknownColor(c.clone()))?;
                Ok(self.color_pairs(idx))
            }
        }
    }

    pub fn color_pairs(&self, idx: u32) -> Vec<Pair> {
        let n = self.structure.n();
        (0..n)
            .flat_map(|u| (0..n).map(move |v| (u, v)))
            .filter(|&(u, v)| self.canonical_color(u, v) == idx)
            .collect()
    }

    fn taken(&self, s: &Symbol) -> bool {
        self.structure.contains_symbol(s)
            || self
                .pair_symbols
                .as_ref()
                .is_some_and(|(l, r)| s == l || s == r)
    }

    /// Shortlex-least symbol outside the vocabulary and the reserved pair symbols.
    pub fn fresh_symbol(&self) -> Symbol {
        Symbol::first_free(|s| self.taken(s))
    }

    pub fn add_pair(&self, target: &Target) -> Result<Cloud, MachineError> {
        let pairs = self.pairs_of(target)?;
        Ok(self.add_pair_sets(&[pairs]))
    }

    /// Adds one batch of pair vertices per set, each with its own fresh diagonal symbol,
    /// and refines once at the end.
    pub fn add_pair_sets(&self, sets: &[Vec<Pair>]) -> Cloud {
        let (mut n, mut rels) = self.structure.clone().into_parts();
        let mut provenance = self.provenance.clone();
        let (left, right) = match &self.pair_symbols {
            Some(p) => p.clone(),
            None => {
                let two = Symbol::first_free_n(2, |s| self.taken(s));
                (two[0].clone(), two[1].clone())
            }
        };
        rels.entry(left.clone()).or_default();
        rels.entry(right.clone()).or_default();
        for pairs in sets {
            let d = Symbol::first_free(|s| rels.contains_key(s) || *s == left || *s == right);
            let mut diag = Relation::new();
            for &(u, v) in pairs {
                let w = n;
                n += 1;
                rels.get_mut(&left).unwrap().insert((u, w));
                rels.get_mut(&right).unwrap().insert((v, w));
                diag.insert((w, w));
                let (su, sv) = (self.provenance[u].side, self.provenance[v].side);
                let side = if su == sv { su } else { Side::Mixed };
                provenance.push(VertexInfo {
                    origin: Origin::Pair(u, v),
                    side,
                });
            }
            rels.insert(d, diag);
        }
        Cloud::build(
            Structure::from_parts(n, rels),
            provenance,
            Some((left, right)),
        )
    }

    pub fn contract(&self, target: &Target) -> Result<Cloud, MachineError> {
        let pairs = self.pairs_of(target)?;
        let n = self.structure.n();
        let comps = strongly_connected(n, &pairs);
        let mut comp_of = vec![usize::MAX; n];
        for (i, c) in comps.iter().enumerate() {
            for &v in c {
                comp_of[v] = i;
            }
        }
        let kept: Vec<usize> = (0..n).filter(|&v| comp_of[v] == usize::MAX).collect();
        let mut image = vec![0; n];
        for (i, &v) in kept.iter().enumerate() {
            image[v] = i;
        }
        for v in 0..n {
            if comp_of[v] != usize::MAX {
                image[v] = kept.len() + comp_of[v];
            }
        }
        let new_n = kept.len() + comps.len();
        let (_, rels) = self.structure.clone().into_parts();
        let mut rels: BTreeMap<Symbol, Relation> = rels
            .into_iter()
            .map(|(s, rel)| {
                (
                    s,
                    rel.into_iter().map(|(u, v)| (image[u], image[v])).collect(),
                )
            })
            .collect();
        let d = Symbol::first_free(|s| self.taken(s));
        rels.insert(d, (kept.len()..new_n).map(|w| (w, w)).collect());

        let remap = |info: &VertexInfo| match info.origin {
            Origin::Pair(a, b) => VertexInfo {
                origin: Origin::Pair(image[a], image[b]),
                side: info.side,
            },
            _ => info.clone(),
        };
        let mut provenance: Vec<VertexInfo> =
            kept.iter().map(|&v| remap(&self.provenance[v])).collect();
        for c in &comps {
            let sides: BTreeSet<Side> = c.iter().map(|&v| self.provenance[v].side).collect();
            let side = if sides.len() == 1 {
                *sides.iter().next().unwrap()
            } else {
                Side::Mixed
            };
            provenance.push(VertexInfo {
                origin: Origin::Component(c.len()),
                side,
            });
        }
        Ok(Cloud::build(
            Structure::from_parts(new_n, rels),
            provenance,
            self.pair_symbols.clone(),
        ))
    }

    pub fn create(&self, pi: &BTreeSet<Symbol>) -> Result<Cloud, MachineError> {
        let mut wanted = BTreeSet::new();
        for c in pi {
            wanted.insert(
                self.sketch
                    .color_index(c)
                    .ok_or_else(|| MachineError::UnknownColor(c.clone()))?,
            );
        }
        let n = self.structure.n();
        let rel: Relation = (0..n)
            .flat_map(|u| (0..n).map(move |v| (u, v)))
            .filter(|&(u, v)| wanted.contains(&self.canonical_color(u, v)))
            .collect();
        let (n, mut rels) = self.structure.clone().into_parts();
        rels.insert(self.fresh_symbol(), rel);
        Ok(Cloud::build(
            Structure::from_parts(n, rels),
            self.provenance.clone(),
            self.pair_symbols.clone(),
        ))
    }

    pub fn forget(&self, e: &Symbol) -> Result<Cloud, MachineError> {
        let (n, mut rels) = self.structure.clone().into_parts();
        if rels.remove(e).is_none() {
            return Err(MachineError::UnknownSymbol(e.clone()));
        }
        Ok(Cloud::build(
            Structure::from_parts(n, rels),
            self.provenance.clone(),
            self.pair_symbols.clone(),
        ))
    }

    /// Executes a non-halting command.
    pub fn execute(&self, cmd: &Command) -> Result<Cloud, MachineError> {
        match cmd {
            Command::AddPair(x) => self.add_pair(&self.resolve(x)?),
            Command::Contract(x) => self.contract(&self.resolve(x)?),
            Command::Create(pi) => self.create(pi),
            Command::Forget(e) => self.forget(e),
            Command::Halt(_) => Ok(self.clone()),
        }
    }

    pub fn vocabulary(&self) -> Vocabulary {
        self.structure.vocabulary()
    }
}

/// Strongly connected components of a relation; singletons only when looped.
pub fn strongly_connected(n: usize, pairs: &[Pair]) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    let mut looped = vec![false; n];
    for &(u, v) in pairs {
        adj[u].push(v);
        if u == v {
            looped[u] = true;
        }
    }
    // iterative Tarjan
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut counter = 0;
    let mut out = Vec::new();
    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut i)) = call.last_mut() {
            if *i < adj[v].len() {
                let w = adj[v][*i];
                *i += 1;
                if index[w] == usize::MAX {
                    index[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().unwrap();
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    if comp.len() > 1 || looped[v] {
                        comp.sort_unstable();
                        out.push(comp);
                    }
                }
            }
        }
    }
    out.sort();
    out
}

/// A program decides its next command from the sketches it has been shown.
pub trait Program {
    fn next(&mut self, sketch: &AlgebraicSketch) -> Command;
}

impl<F: FnMut(&AlgebraicSketch) -> Command> Program for F {
    fn next(&mut self, sketch: &AlgebraicSketch) -> Command {
        self(sketch)
    }
}

/// Halts at once with a fixed output.
#[derive(Clone, Debug)]
pub struct HaltWith(pub Vec<u8>);

impl Program for HaltWith {
    fn next(&mut self, _: &AlgebraicSketch) -> Command {
        Command::Halt(self.0.clone())
    }
}

/// Issues a fixed list of commands, then halts with empty output.
#[derive(Clone, Debug)]
pub struct Script {
    commands: Vec<Command>,
    pos: usize,
}

impl Script {
    pub fn new(commands: Vec<Command>) -> Self {
        Script { commands, pos: 0 }
    }

    /// One command per line; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, MachineError> {
        let commands = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty())
            .map(str::parse)
            .collect::<Result<_, _>>()?;
        Ok(Script::new(commands))
    }
}

impl Program for Script {
    fn next(&mut self, _: &AlgebraicSketch) -> Command {
        let cmd = self
            .commands
            .get(self.pos)
            .cloned()
            .unwrap_or(Command::Halt(Vec::new()));
        self.pos += 1;
        cmd
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Halted(Vec<u8>),
    BudgetExhausted,
}

impl Outcome {
    pub fn accepts(&self) -> bool {
        matches!(self, Outcome::Halted(out) if out.first() == Some(&1))
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Halted(out) if out.as_slice() == [1] => f.write_str("accept"),
            Outcome::Halted(out) if out.as_slice() == [0] => f.write_str("reject"),
            Outcome::Halted(out) => write!(f, "halt:{}", hex::encode(out)),
            Outcome::BudgetExhausted => f.write_str("budget"),
        }
    }
}

/// One observed sketch and the decision taken on it (absent when the run stopped first).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step {
    pub sketch: AlgebraicSketch,
    pub command: Option<Command>,
}

/// The transcript of a program execution.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InternalRun {
    pub steps: Vec<Step>,
    pub cost: u64,
    pub outcome: Outcome,
}

impl InternalRun {
    pub fn accepts(&self) -> bool {
        self.outcome.accepts()
    }

    /// Line-oriented dump: one `STEP` record per observation and a final `OUTCOME`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (i, s) in self.steps.iter().enumerate() {
            let cmd = s
                .command
                .as_ref()
                .map(ToString::to_string)
                .unwrap_or_else(|| "none".into());
            out.push_str(&format!("STEP {i} CMD {cmd} SKETCH "));
            let bytes = encode_sketch(&s.sketch);
            let mut text = vec![0u8; 2 * bytes.len()];
            hex::encode_to_slice(&bytes, &mut text).expect("buffer is twice the input");
            out.push_str(std::str::from_utf8(&text).expect("hex is ascii"));
            out.push('\n');
        }
        out.push_str(&format!("OUTCOME {}\n", self.outcome));
        out
    }
}

#[derive(Clone, Copy, Debug)]
pub struct RunOptions {
    /// cost ceiling
    pub budget: u64,
    /// also charge n³ per configuration recomputation
    pub charge_refinement: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            budget: u64::MAX,
            charge_refinement: false,
        }
    }
}

impl RunOptions {
    pub fn with_budget(budget: u64) -> Self {
        RunOptions {
            budget,
            ..Default::default()
        }
    }
}

/// Drives a program on a cloud until it halts or the budget runs out.
pub fn run_on_cloud(
    cloud: Cloud,
    prog: &mut dyn Program,
    opts: RunOptions,
) -> Result<InternalRun, MachineError> {
    let refine_cost = |c: &Cloud| {
        if opts.charge_refinement {
            (c.structure.n() as u64).pow(3)
        } else {
            0
        }
    };
    let mut cloud = cloud;
    let mut cost = cloud.sketch.encoded_len() + refine_cost(&cloud);
    let mut steps = Vec::new();
    loop {
        if cost.saturating_add(1) > opts.budget {
            steps.push(Step {
                sketch: cloud.sketch.clone(),
                command: None,
            });
            return Ok(InternalRun {
                steps,
                cost,
                outcome: Outcome::BudgetExhausted,
            });
        }
        let cmd = prog.next(&cloud.sketch);
        cost += 1;
        steps.push(Step {
            sketch: cloud.sketch.clone(),
            command: Some(cmd.clone()),
        });
        if let Command::Halt(out) = cmd {
            return Ok(InternalRun {
                steps,
                cost,
                outcome: Outcome::Halted(out),
            });
        }
        let step = steps.len() - 1;
        cloud = cloud.execute(&cmd).map_err(|e| MachineError::Aborted {
            step,
            source: Box::new(e),
        })?;
        cost = cost.saturating_add(cloud.sketch.encoded_len() + refine_cost(&cloud));
    }
}

pub fn run_program(
    a: &Structure,
    prog: &mut dyn Program,
    opts: RunOptions,
) -> Result<InternalRun, MachineError> {
    run_on_cloud(Cloud::new(a.clone()), prog, opts)
}

/// A cloud seen through the program interface: commands in, sketches out.
pub struct Session {
    cloud: Cloud,
    log: Vec<Command>,
}

impl Session {
    pub fn new(cloud: Cloud) -> Self {
        Session {
            cloud,
            log: Vec::new(),
        }
    }

    pub fn sketch(&self) -> &AlgebraicSketch {
        self.cloud.sketch()
    }

    pub fn exec(&mut self, cmd: Command) -> Result<&AlgebraicSketch, MachineError> {
        self.cloud = self.cloud.execute(&cmd)?;
        self.log.push(cmd);
        Ok(self.cloud.sketch())
    }

    /// Issues `create(pi)` and returns the new symbol, read off the sketch.
    pub fn create(&mut self, pi: BTreeSet<Symbol>) -> Result<Symbol, MachineError> {
        let before: BTreeSet<Symbol> = self.sketch().tau().iter().cloned().collect();
        self.exec(Command::Create(pi))?;
        Ok(self
            .sketch()
            .tau()
            .iter()
            .find(|s| !before.contains(*s))
            .cloned()
            .expect("create adds one symbol"))
    }

    /// Issues a command that adds exactly the symbols returned, in shortlex order.
    pub fn exec_new_symbols(&mut self, cmd: Command) -> Result<Vec<Symbol>, MachineError> {
        let before: BTreeSet<Symbol> = self.sketch().tau().iter().cloned().collect();
        self.exec(cmd)?;
        Ok(self
            .sketch()
            .tau()
            .iter()
            .filter(|s| !before.contains(*s))
            .cloned()
            .collect())
    }

    pub fn forget(&mut self, e: &Symbol) -> Result<(), MachineError> {
        self.exec(Command::Forget(e.clone())).map(|_| ())
    }

    /// Names of the reserved pair-projection symbols, fixed by the allocation rule.
    pub fn pair_symbols(&self) -> Option<(Symbol, Symbol)> {
        self.cloud.pair_symbols().cloned()
    }

    pub fn log(&self) -> &[Command] {
        &self.log
    }

    pub fn into_cloud(self) -> Cloud {
        self.cloud
    }

    pub fn cloud(&self) -> &Cloud {
        &self.cloud
    }
}
