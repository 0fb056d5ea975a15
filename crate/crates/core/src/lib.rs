//! Sketch-driven refinement machinery.
//!
//! Binary relational structures are refined to their coarsest coherent
//! configuration, summarised as canonical algebraic sketches, and driven by
//! programs that only ever see those sketches.

pub mod format;
pub mod harness;
pub mod machine;
pub mod refine;
pub mod shortcuts;
pub mod sketch;
pub mod stdlib;
pub mod structure;
pub mod symbol;

pub use machine::{
    run_program, Cloud, Command, InternalRun, Outcome, Program, RunOptions, Session, Target,
};
pub use refine::{
    color_refinement_1wl, refine_to_coarsest, verify_coherent, CoherentConfiguration,
};
pub use sketch::{canonical_sketch, decode_sketch, encode_sketch, AlgebraicSketch};
pub use structure::{Structure, VertexPermutation};
pub use symbol::{Symbol, Vocabulary};
