use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use deepwl::format::{load_structure, save_structure};
use deepwl::harness::{
    cfi_pair, complete_invariant, digest, distinguisher_run, fixture, iso_test, named_program,
    Distinction, IsoVerdict, ProgramFactory, FIXTURES, PROGRAM_NAMES,
};
use deepwl::machine::{run_program, Program, RunOptions, Script};
use deepwl::{canonical_sketch, encode_sketch, refine_to_coarsest, verify_coherent, Structure};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Exit code for unreadable input, bad arguments and failed commands.
const EXIT_ERROR: u8 = 3;

#[derive(Parser)]
#[command(
    name = "deepwl",
    version,
    about = "Coherent configurations, canonical sketches and sketch-driven programs"
)]
struct Cli {
    /// Seed for randomly generated corpora (never used by the algorithms)
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct ProgramArgs {
    /// Built-in program name or a script file
    #[arg(long)]
    program: String,
    /// Cost budget: each step costs 1 plus the encoded length of the sketch it produces
    #[arg(long)]
    max_steps: Option<u64>,
}

impl ProgramArgs {
    fn options(&self) -> RunOptions {
        self.max_steps
            .map_or_else(RunOptions::default, RunOptions::with_budget)
    }

    fn factory(&self) -> Result<Box<dyn ProgramFactory>> {
        if let Ok(f) = named_program(&self.program) {
            return Ok(f);
        }
        let path = Path::new(&self.program);
        if !path.is_file() {
            bail!(
                "unknown program `{}` (built-in: {PROGRAM_NAMES}; otherwise a script file)",
                self.program
            );
        }
        let script = Script::parse(&read(path)?)?;
        Ok(Box::new(move || {
            Box::new(script.clone()) as Box<dyn Program>
        }))
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Colour counts of the coarsest coherent configuration and a coherence report
    Refine { file: PathBuf },
    /// Canonical sketch bytes (raw unless --hex)
    Sketch {
        file: PathBuf,
        #[arg(long)]
        hex: bool,
    },
    /// Transcript dump of a program run
    Run {
        file: PathBuf,
        #[command(flatten)]
        program: ProgramArgs,
        /// Per-step summary on stderr
        #[arg(long)]
        trace: bool,
    },
    /// Isomorphism verdict; exit 0 isomorphic, 1 non-isomorphic, 2 indeterminate
    Iso {
        a: PathBuf,
        b: PathBuf,
        #[command(flatten)]
        program: ProgramArgs,
    },
    /// Lockstep comparison of the transcripts on two inputs
    Distinguish {
        a: PathBuf,
        b: PathBuf,
        #[command(flatten)]
        program: ProgramArgs,
    },
    /// SHA-256 of the transcript on the self-union (--full prints the transcript bytes as hex)
    Invariant {
        file: PathBuf,
        #[command(flatten)]
        program: ProgramArgs,
        #[arg(long)]
        full: bool,
    },
    /// Writes <prefix>.even and <prefix>.odd
    Cfi {
        #[arg(long)]
        base: PathBuf,
        #[arg(long)]
        out_prefix: PathBuf,
    },
    /// Writes a named fixture to stdout
    Fixture { name: String },
    /// Writes a random structure drawn from --seed
    Random {
        #[arg(long, default_value_t = 8)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        symbols: usize,
        #[arg(long, default_value_t = 0.3)]
        density: f64,
    },
    /// Checks coherence, sketch invariance and iso_test soundness on a random corpus
    Selfcheck {
        #[arg(long, default_value_t = 50)]
        cases: usize,
        #[arg(long, default_value_t = 8)]
        max_n: usize,
    },
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load(path: &Path) -> Result<Structure> {
    load_structure(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn random_structure(
    r: &mut ChaCha8Rng,
    n: usize,
    symbols: usize,
    density: f64,
) -> Result<Structure> {
    let mut a = Structure::new(n);
    for i in 0..symbols {
        let pairs: Vec<(usize, usize)> = (0..n * n)
            .filter(|_| r.gen_bool(density))
            .map(|j| (j / n, j % n))
            .collect();
        a = a.with_relation(deepwl::Symbol::nth(i as u64 + 1), pairs)?;
    }
    Ok(a)
}

fn selfcheck(seed: u64, cases: usize, max_n: usize) -> Result<bool> {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    for case in 0..cases {
        let n = r.gen_range(1..=max_n.max(1));
        let symbols = r.gen_range(1..=3);
        let density = r.gen_range(0.1..0.5);
        let a = random_structure(&mut r, n, symbols, density)?;
        let mut images: Vec<usize> = (0..n).collect();
        images.shuffle(&mut r);
        let b = a.apply_permutation(&deepwl::VertexPermutation::new(images)?)?;
        let mut problems = Vec::new();
        let c = refine_to_coarsest(&a);
        if let Err(e) = verify_coherent(&c, &a) {
            problems.push(format!("not coherent: {e}"));
        }
        let sa = encode_sketch(&canonical_sketch(&a, &c)?);
        let sb = encode_sketch(&canonical_sketch(&b, &refine_to_coarsest(&b))?);
        if sa != sb {
            problems.push("sketch changed under a permutation".into());
        }
        if load_structure(&save_structure(&a))? != a {
            problems.push("save/load round trip".into());
        }
        let (verdict, _) = iso_test(
            &a,
            &b,
            &mut deepwl::harness::kwl_program(2),
            RunOptions::default(),
        )?;
        if verdict != IsoVerdict::Isomorphic {
            problems.push(format!("iso_test on a permuted copy said {verdict:?}"));
        }
        for p in &problems {
            println!("case {case} (n={n}): {p}");
        }
        failures += usize::from(!problems.is_empty());
    }
    println!("{} cases, {failures} failed", cases);
    Ok(failures == 0)
}

fn execute(cli: Cli) -> Result<ExitCode> {
    let mut out = std::io::stdout().lock();
    match cli.command {
        Cmd::Refine { file } => {
            let a = load(&file)?;
            let c = refine_to_coarsest(&a);
            let diagonal = (0..c.num_colors() as u32)
                .filter(|&r| c.is_diagonal(r))
                .count();
            writeln!(out, "vertices {}", a.n())?;
            writeln!(out, "colours {}", c.num_colors())?;
            writeln!(out, "diagonal {diagonal}")?;
            writeln!(out, "off-diagonal {}", c.num_colors() - diagonal)?;
            match verify_coherent(&c, &a) {
                Ok(()) => writeln!(out, "coherent yes")?,
                Err(e) => {
                    writeln!(out, "coherent no: {e}")?;
                    return Ok(ExitCode::from(1));
                }
            }
        }
        Cmd::Sketch { file, hex } => {
            let a = load(&file)?;
            let bytes = encode_sketch(&canonical_sketch(&a, &refine_to_coarsest(&a))?);
            if hex {
                writeln!(out, "{}", hex::encode(bytes))?;
            } else {
                out.write_all(&bytes)?;
            }
        }
        Cmd::Run {
            file,
            program,
            trace,
        } => {
            let a = load(&file)?;
            let run = run_program(&a, &mut *program.factory()?.make(), program.options())?;
            if trace {
                for (i, s) in run.steps.iter().enumerate() {
                    let cmd = s
                        .command
                        .as_ref()
                        .map_or_else(|| "none".into(), ToString::to_string);
                    eprintln!(
                        "step {i}: n={} colours={} symbols={} -> {cmd}",
                        s.sketch.n(),
                        s.sketch.num_colors(),
                        s.sketch.tau().len()
                    );
                }
                eprintln!("cost {}", run.cost);
            }
            write!(out, "{}", run.dump())?;
        }
        Cmd::Iso { a, b, program } => {
            let (a, b) = (load(&a)?, load(&b)?);
            let (verdict, _) =
                iso_test(&a, &b, &mut *program.factory()?.make(), program.options())?;
            let text = match verdict {
                IsoVerdict::Isomorphic => "isomorphic",
                IsoVerdict::NonIsomorphic => "non-isomorphic",
                IsoVerdict::Indeterminate => "indeterminate",
            };
            writeln!(out, "{text}")?;
            return Ok(ExitCode::from(verdict.exit_code() as u8));
        }
        Cmd::Distinguish { a, b, program } => {
            let (a, b) = (load(&a)?, load(&b)?);
            match distinguisher_run(&a, &b, &*program.factory()?, program.options())? {
                Distinction::Distinguished(step) => writeln!(out, "distinguished at step {step}")?,
                Distinction::NotDistinguished => writeln!(out, "not distinguished")?,
                Distinction::Indeterminate => writeln!(out, "indeterminate")?,
            }
        }
        Cmd::Invariant {
            file,
            program,
            full,
        } => {
            let a = load(&file)?;
            let bytes = complete_invariant(&a, &mut *program.factory()?.make(), program.options())?;
            writeln!(
                out,
                "{}",
                if full {
                    hex::encode(&bytes)
                } else {
                    digest(&bytes)
                }
            )?;
        }
        Cmd::Cfi { base, out_prefix } => {
            let p = cfi_pair(&load(&base)?)?;
            for (suffix, s) in [("even", &p.even), ("odd", &p.odd)] {
                let mut path = out_prefix.clone().into_os_string();
                path.push(format!(".{suffix}"));
                let path = PathBuf::from(path);
                std::fs::write(&path, save_structure(s))
                    .with_context(|| format!("writing {}", path.display()))?;
                writeln!(out, "{}", path.display())?;
            }
        }
        Cmd::Fixture { name } => {
            let a = fixture(&name).with_context(|| format!("fixtures: {}", FIXTURES.join(", ")))?;
            write!(out, "{}", save_structure(&a))?;
        }
        Cmd::Random {
            n,
            symbols,
            density,
        } => {
            if !(0.0..=1.0).contains(&density) {
                bail!("density must lie in [0, 1]");
            }
            let mut r = ChaCha8Rng::seed_from_u64(cli.seed);
            write!(
                out,
                "{}",
                save_structure(&random_structure(&mut r, n, symbols, density)?)
            )?;
        }
        Cmd::Selfcheck { cases, max_n } => {
            if !selfcheck(cli.seed, cases, max_n)? {
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    execute(cli).unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        ExitCode::from(EXIT_ERROR)
    })
}
