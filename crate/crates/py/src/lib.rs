//! Python bindings for `deepwl`.
//!
//! Programs are given as a built-in name (`"kwl2"`, `"probe"`, ...), a list of command
//! lines, or a callable that receives a `Sketch` and returns a command line.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::rc::Rc;

use deepwl::harness::{self, Distinction, IsoVerdict, ProgramFactory};
use deepwl::machine::{Command, InternalRun, Program, RunOptions, Script};
use deepwl::{AlgebraicSketch, CoherentConfiguration, Symbol};
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyTypeError};
use pyo3::prelude::*;
use pyo3::types::{PyBytes, PyList};

create_exception!(deepwl_py, DeepWlError, PyException);

fn err(e: impl std::fmt::Display) -> PyErr {
    DeepWlError::new_err(e.to_string())
}

fn symbol(name: &str) -> PyResult<Symbol> {
    name.parse().map_err(err)
}

/// A finite binary relational structure on vertices `0..n`.
#[pyclass(frozen, eq, skip_from_py_object, name = "Structure")]
#[derive(Clone, PartialEq)]
struct PyStructure(deepwl::Structure);

#[pymethods]
impl PyStructure {
    /// `relations` maps a binary symbol such as `"0"` or `"01"` to a list of `(u, v)` pairs.
    #[new]
    #[pyo3(signature = (n, relations = None))]
    fn new(n: usize, relations: Option<BTreeMap<String, Vec<(usize, usize)>>>) -> PyResult<Self> {
        let mut a = deepwl::Structure::new(n);
        for (name, pairs) in relations.unwrap_or_default() {
            a = a.with_relation(symbol(&name)?, pairs).map_err(err)?;
        }
        Ok(PyStructure(a))
    }

    #[staticmethod]
    fn load(text: &str) -> PyResult<Self> {
        deepwl::format::load_structure(text)
            .map(PyStructure)
            .map_err(err)
    }

    fn save(&self) -> String {
        deepwl::format::save_structure(&self.0)
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    fn symbols(&self) -> Vec<String> {
        self.0.symbols().map(ToString::to_string).collect()
    }

    /// Sorted pairs of one relation.
    fn relation(&self, name: &str) -> PyResult<Vec<(usize, usize)>> {
        let s = symbol(name)?;
        let rel = self
            .0
            .relation(&s)
            .ok_or_else(|| err(format!("no relation {s}")))?;
        Ok(rel.iter().copied().collect())
    }

    fn relations(&self) -> BTreeMap<String, Vec<(usize, usize)>> {
        self.0
            .relations()
            .iter()
            .map(|(s, r)| (s.to_string(), r.iter().copied().collect()))
            .collect()
    }

    /// Vertex `v` becomes `images[v]`.
    fn permuted(&self, images: Vec<usize>) -> PyResult<Self> {
        let p = deepwl::VertexPermutation::new(images).map_err(err)?;
        self.0.apply_permutation(&p).map(PyStructure).map_err(err)
    }

    fn disjoint_union(&self, other: &PyStructure) -> PyResult<Self> {
        self.0
            .disjoint_union(&other.0)
            .map(PyStructure)
            .map_err(err)
    }

    fn connected_components(&self) -> Vec<Vec<usize>> {
        self.0.connected_components()
    }

    fn __repr__(&self) -> String {
        format!("Structure(n={}, symbols={:?})", self.0.n(), self.symbols())
    }
}

/// The coarsest coherent configuration of a structure.
#[pyclass(frozen, name = "Configuration")]
struct PyConfiguration {
    config: CoherentConfiguration,
    structure: deepwl::Structure,
}

#[pymethods]
impl PyConfiguration {
    #[getter]
    fn num_colors(&self) -> usize {
        self.config.num_colors()
    }

    fn color(&self, u: usize, v: usize) -> PyResult<u32> {
        let n = self.config.n();
        if u >= n || v >= n {
            return Err(err(format!("pair ({u}, {v}) outside 0..{n}")));
        }
        Ok(self.config.color(u, v))
    }

    fn is_diagonal(&self, r: u32) -> bool {
        self.config.is_diagonal(r)
    }

    fn class_sizes(&self) -> Vec<u64> {
        self.config
            .class_sizes()
            .into_iter()
            .map(|s| s as u64)
            .collect()
    }

    /// Raises `DeepWlError` naming a witness when the configuration is not coherent.
    fn verify(&self) -> PyResult<()> {
        deepwl::verify_coherent(&self.config, &self.structure).map_err(err)
    }
}

/// A canonical algebraic sketch.
#[pyclass(frozen, eq, skip_from_py_object, name = "Sketch")]
#[derive(Clone, PartialEq)]
struct PySketch(AlgebraicSketch);

#[pymethods]
impl PySketch {
    #[staticmethod]
    fn decode(data: &[u8]) -> PyResult<Self> {
        deepwl::decode_sketch(data).map(PySketch).map_err(err)
    }

    fn encode<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &deepwl::encode_sketch(&self.0))
    }

    #[getter]
    fn n(&self) -> u64 {
        self.0.n()
    }

    #[getter]
    fn num_colors(&self) -> usize {
        self.0.num_colors()
    }

    /// Symbols of the structure the sketch describes.
    #[getter]
    fn symbols(&self) -> Vec<String> {
        self.0.tau().iter().map(ToString::to_string).collect()
    }

    /// Colour names in canonical order.
    #[getter]
    fn colors(&self) -> Vec<String> {
        self.0.sigma().iter().map(ToString::to_string).collect()
    }

    fn class_size(&self, r: u32) -> PyResult<u64> {
        self.check(r)?;
        Ok(self.0.class_size(r))
    }

    fn is_diagonal(&self, r: u32) -> PyResult<bool> {
        self.check(r)?;
        Ok(self.0.is_diagonal(r))
    }

    fn converse(&self, r: u32) -> PyResult<u32> {
        self.check(r)?;
        Ok(self.0.converse(r))
    }

    /// Number of midpoints `w` with `(u, w)` in colour `r2` and `(w, v)` in colour `r3`, for
    /// any `(u, v)` in colour `r1`.
    fn q(&self, r1: u32, r2: u32, r3: u32) -> PyResult<u32> {
        for r in [r1, r2, r3] {
            self.check(r)?;
        }
        Ok(self.0.q(r1, r2, r3))
    }

    /// Colours whose pairs all lie in the relation `name`.
    fn colors_inside(&self, name: &str) -> PyResult<Vec<u32>> {
        let s = symbol(name)?;
        self.0
            .colors_inside(&s)
            .ok_or_else(|| err(format!("no symbol {s}")))
    }

    fn __repr__(&self) -> String {
        format!("Sketch(n={}, colors={})", self.0.n(), self.0.num_colors())
    }
}

impl PySketch {
    fn check(&self, r: u32) -> PyResult<()> {
        if (r as usize) < self.0.num_colors() {
            Ok(())
        } else {
            Err(err(format!(
                "colour {r} outside 0..{}",
                self.0.num_colors()
            )))
        }
    }
}

/// Calls back into Python for every decision; the first exception halts the run.
struct CallbackProgram {
    callback: Py<PyAny>,
    error: Rc<RefCell<Option<PyErr>>>,
}

impl CallbackProgram {
    fn decide(&self, sketch: &AlgebraicSketch) -> PyResult<Command> {
        Python::attach(|py| {
            let line: String = self
                .callback
                .call1(py, (PySketch(sketch.clone()),))?
                .extract(py)?;
            line.parse::<Command>().map_err(err)
        })
    }
}

impl Program for CallbackProgram {
    fn next(&mut self, sketch: &AlgebraicSketch) -> Command {
        if self.error.borrow().is_some() {
            return Command::Halt(Vec::new());
        }
        self.decide(sketch).unwrap_or_else(|e| {
            *self.error.borrow_mut() = Some(e);
            Command::Halt(Vec::new())
        })
    }
}

/// A program argument resolved to a factory, plus the slot a callback reports errors to.
struct Programs {
    factory: Box<dyn ProgramFactory>,
    error: Rc<RefCell<Option<PyErr>>>,
}

impl Programs {
    fn from_arg(program: &Bound<'_, PyAny>) -> PyResult<Self> {
        let error = Rc::new(RefCell::new(None));
        let factory: Box<dyn ProgramFactory> = if let Ok(name) = program.extract::<String>() {
            harness::named_program(&name).map_err(err)?
        } else if program.is_instance_of::<PyList>() {
            let lines: Vec<String> = program.extract()?;
            let script = Script::parse(&lines.join("\n")).map_err(err)?;
            Box::new(move || Box::new(script.clone()) as Box<dyn Program>)
        } else if program.is_callable() {
            let callback = program.clone().unbind();
            let slot = error.clone();
            Box::new(move || {
                let callback = Python::attach(|py| callback.clone_ref(py));
                Box::new(CallbackProgram {
                    callback,
                    error: slot.clone(),
                }) as Box<dyn Program>
            })
        } else {
            return Err(PyTypeError::new_err(
                "program must be a name, a list of command lines or a callable",
            ));
        };
        Ok(Programs { factory, error })
    }

    /// Raises the first callback error, if any, in place of the result.
    fn finish<T>(&self, result: PyResult<T>) -> PyResult<T> {
        match self.error.borrow_mut().take() {
            Some(e) => Err(e),
            None => result,
        }
    }
}

fn options(budget: Option<u64>) -> RunOptions {
    budget.map_or_else(RunOptions::default, RunOptions::with_budget)
}

/// The transcript of one program run.
#[pyclass(frozen, name = "Run")]
struct PyRun(InternalRun);

#[pymethods]
impl PyRun {
    /// `accept`, `reject`, `halt:<hex>` or `budget`.
    #[getter]
    fn outcome(&self) -> String {
        self.0.outcome.to_string()
    }

    #[getter]
    fn accepts(&self) -> bool {
        self.0.accepts()
    }

    #[getter]
    fn cost(&self) -> u64 {
        self.0.cost
    }

    #[getter]
    fn sketches(&self) -> Vec<PySketch> {
        self.0
            .steps
            .iter()
            .map(|s| PySketch(s.sketch.clone()))
            .collect()
    }

    /// Command issued after each sketch; `None` where the run stopped.
    #[getter]
    fn commands(&self) -> Vec<Option<String>> {
        self.0
            .steps
            .iter()
            .map(|s| s.command.as_ref().map(ToString::to_string))
            .collect()
    }

    fn dump(&self) -> String {
        self.0.dump()
    }

    fn __len__(&self) -> usize {
        self.0.steps.len()
    }
}

#[pyfunction]
fn refine(a: &PyStructure) -> PyConfiguration {
    PyConfiguration {
        config: deepwl::refine_to_coarsest(&a.0),
        structure: a.0.clone(),
    }
}

/// Canonical sketch of the coarsest coherent configuration.
#[pyfunction]
fn sketch(a: &PyStructure) -> PyResult<PySketch> {
    let c = deepwl::refine_to_coarsest(&a.0);
    deepwl::canonical_sketch(&a.0, &c)
        .map(PySketch)
        .map_err(err)
}

/// Vertex colour classes from 1-dimensional refinement.
#[pyfunction]
fn color_refinement(a: &PyStructure) -> Vec<u32> {
    deepwl::color_refinement_1wl(&a.0).class_of
}

#[pyfunction]
fn fixture(name: &str) -> PyResult<PyStructure> {
    harness::fixture(name).map(PyStructure).map_err(err)
}

/// The even and odd CFI structures over a base graph.
#[pyfunction]
fn cfi_pair(base: &PyStructure) -> PyResult<(PyStructure, PyStructure)> {
    let p = harness::cfi_pair(&base.0).map_err(err)?;
    Ok((PyStructure(p.even), PyStructure(p.odd)))
}

#[pyfunction]
#[pyo3(signature = (a, program, budget = None))]
fn run_program(
    a: &PyStructure,
    program: &Bound<'_, PyAny>,
    budget: Option<u64>,
) -> PyResult<PyRun> {
    let p = Programs::from_arg(program)?;
    let run = deepwl::run_program(&a.0, &mut *p.factory.make(), options(budget));
    p.finish(run.map(PyRun).map_err(err))
}

/// `"isomorphic"`, `"non-isomorphic"` or `"indeterminate"`.
#[pyfunction]
#[pyo3(signature = (a, b, program, budget = None))]
fn iso_test(
    a: &PyStructure,
    b: &PyStructure,
    program: &Bound<'_, PyAny>,
    budget: Option<u64>,
) -> PyResult<&'static str> {
    let p = Programs::from_arg(program)?;
    let result = harness::iso_test(&a.0, &b.0, &mut *p.factory.make(), options(budget));
    let (verdict, _) = p.finish(result.map_err(err))?;
    Ok(match verdict {
        IsoVerdict::Isomorphic => "isomorphic",
        IsoVerdict::NonIsomorphic => "non-isomorphic",
        IsoVerdict::Indeterminate => "indeterminate",
    })
}

/// First step at which the observed sketches differ, `None` if the program halts first.
/// Raises `DeepWlError` when the budget runs out.
#[pyfunction]
#[pyo3(signature = (a, b, program, budget = None))]
fn distinguish(
    a: &PyStructure,
    b: &PyStructure,
    program: &Bound<'_, PyAny>,
    budget: Option<u64>,
) -> PyResult<Option<usize>> {
    let p = Programs::from_arg(program)?;
    let result = harness::distinguisher_run(&a.0, &b.0, &*p.factory, options(budget));
    match p.finish(result.map_err(err))? {
        Distinction::Distinguished(step) => Ok(Some(step)),
        Distinction::NotDistinguished => Ok(None),
        Distinction::Indeterminate => Err(err("budget exhausted")),
    }
}

/// Transcript bytes of the program on the structure joined with itself.
#[pyfunction]
#[pyo3(signature = (a, program, budget = None))]
fn invariant<'py>(
    py: Python<'py>,
    a: &PyStructure,
    program: &Bound<'py, PyAny>,
    budget: Option<u64>,
) -> PyResult<Bound<'py, PyBytes>> {
    let p = Programs::from_arg(program)?;
    let bytes = harness::complete_invariant(&a.0, &mut *p.factory.make(), options(budget));
    Ok(PyBytes::new(py, &p.finish(bytes.map_err(err))?))
}

/// SHA-256 of some bytes as hex.
#[pyfunction]
fn digest(data: &[u8]) -> String {
    harness::digest(data)
}

#[pymodule]
fn deepwl_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("DeepWlError", m.py().get_type::<DeepWlError>())?;
    m.add("FIXTURES", harness::FIXTURES.to_vec())?;
    m.add_class::<PyStructure>()?;
    m.add_class::<PyConfiguration>()?;
    m.add_class::<PySketch>()?;
    m.add_class::<PyRun>()?;
    m.add_function(wrap_pyfunction!(refine, m)?)?;
    m.add_function(wrap_pyfunction!(sketch, m)?)?;
    m.add_function(wrap_pyfunction!(color_refinement, m)?)?;
    m.add_function(wrap_pyfunction!(fixture, m)?)?;
    m.add_function(wrap_pyfunction!(cfi_pair, m)?)?;
    m.add_function(wrap_pyfunction!(run_program, m)?)?;
    m.add_function(wrap_pyfunction!(iso_test, m)?)?;
    m.add_function(wrap_pyfunction!(distinguish, m)?)?;
    m.add_function(wrap_pyfunction!(invariant, m)?)?;
    m.add_function(wrap_pyfunction!(digest, m)?)?;
    Ok(())
}
