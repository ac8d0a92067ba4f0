//! Python bindings: networks, qudit states and the three execution paths.

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use qlnc_core::format::{network_to_json, parse_network};
use qlnc_core::network::fixtures;
use qlnc_core::oracle::apply_isometry;
use qlnc_core::{
    compile, resource_counts, CodingNetwork, ForcedOutcomes, Mode, OutcomeSource, OutcomeSpec, QuditState, RunReport,
    SampledOutcomes, XCorrection,
};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn run_err(e: qlnc_core::RunError) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn parse_mode(mode: &str) -> PyResult<Mode> {
    match mode {
        "free" => Ok(Mode::Free),
        "constrained" => Ok(Mode::Constrained),
        other => Err(PyValueError::new_err(format!("unknown mode {other:?}"))),
    }
}

/// Parse a serde JSON string into Python objects via the json module.
fn loads<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (text,))
}

/// A linear network code over Z_d.
#[pyclass(name = "Network", frozen)]
struct PyNetwork {
    inner: CodingNetwork,
}

#[pymethods]
impl PyNetwork {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = parse_network(text).map_err(value_err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| pyo3::exceptions::PyOSError::new_err(e.to_string()))?;
        Self::from_json(&text)
    }

    /// Named example networks: butterfly_swap, butterfly_multicast,
    /// butterfly_parity, identity_wire, sum_pair.
    #[staticmethod]
    fn example(name: &str, d: u64) -> PyResult<Self> {
        let inner = match name {
            "butterfly_swap" => fixtures::butterfly_swap(d),
            "butterfly_multicast" => fixtures::butterfly_multicast(d),
            "butterfly_parity" => fixtures::butterfly_parity(d),
            "identity_wire" => fixtures::identity_wire(d),
            "sum_pair" => fixtures::sum_pair(d),
            other => return Err(PyValueError::new_err(format!("no example called {other:?}"))),
        };
        Ok(Self { inner })
    }

    #[getter]
    fn d(&self) -> u64 {
        self.inner.modulus
    }

    #[getter]
    fn input_count(&self) -> usize {
        self.inner.inputs.len()
    }

    #[getter]
    fn output_count(&self) -> usize {
        self.inner.outputs.len()
    }

    /// Structural problems, empty when the network is usable.
    fn validate(&self) -> Vec<String> {
        self.inner.validate().iter().map(ToString::to_string).collect()
    }

    fn run_classical(&self, sources: Vec<u64>) -> PyResult<Vec<u64>> {
        self.inner.run_classical(&sources).map_err(value_err)
    }

    fn composite(&self) -> PyResult<Vec<Vec<u64>>> {
        Ok(self.inner.composite_map().map_err(value_err)?.to_rows())
    }

    fn counts<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let g = compile(&self.inner).map_err(run_err)?;
        let rc = resource_counts(&self.inner, &g);
        let out = PyDict::new(py);
        out.set_item("qudits", rc.qudits)?;
        out.set_item("entangling_ops", rc.entangling_ops)?;
        out.set_item("classical_messages_extra", rc.classical_messages_extra)?;
        out.set_item("cx_count_reference", rc.cx_count_reference)?;
        out.set_item("cz_edges", rc.cz_edges)?;
        Ok(out)
    }

    /// The graph-state geometry as a dict.
    fn compile_mbqc<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let g = compile(&self.inner).map_err(run_err)?;
        loads(py, &g.to_json())
    }

    fn to_json(&self) -> String {
        network_to_json(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!(
            "Network(d={}, nodes={}, inputs={}, outputs={})",
            self.inner.modulus,
            self.inner.nodes.len(),
            self.inner.inputs.len(),
            self.inner.outputs.len()
        )
    }
}

/// State vector of qudits over Z_d, first qudit most significant.
#[pyclass(name = "State", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyState {
    inner: QuditState,
}

#[pymethods]
impl PyState {
    #[staticmethod]
    fn basis(values: Vec<u64>, d: usize) -> PyResult<Self> {
        Ok(Self { inner: QuditState::basis(&values, d).map_err(value_err)? })
    }

    /// Normalizes the amplitudes.
    #[staticmethod]
    fn from_amplitudes(amplitudes: Vec<Complex64>, d: usize) -> PyResult<Self> {
        let mut inner = QuditState::from_amplitudes(d, amplitudes).map_err(value_err)?;
        inner.normalize().map_err(value_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn d(&self) -> usize {
        self.inner.dimension()
    }

    #[getter]
    fn qudit_count(&self) -> usize {
        self.inner.qudit_count()
    }

    fn amplitudes(&self) -> Vec<Complex64> {
        self.inner.amplitudes().to_vec()
    }

    fn fidelity(&self, other: &PyState) -> PyResult<f64> {
        self.inner.fidelity(&other.inner).map_err(value_err)
    }

    fn __repr__(&self) -> String {
        format!("State(d={}, qudits={})", self.inner.dimension(), self.inner.qudit_count())
    }
}

fn outcome_source(seed: u64, forced: Option<Vec<u64>>) -> (Box<dyn OutcomeSource + Send>, OutcomeSpec) {
    match forced {
        Some(v) => (Box::new(ForcedOutcomes::new(v.clone())), OutcomeSpec::Forced(v)),
        None => (Box::new(SampledOutcomes::new(seed)), OutcomeSpec::Seed(seed)),
    }
}

fn finish<'py>(py: Python<'py>, state: QuditState, report: RunReport) -> PyResult<(PyState, Bound<'py, PyAny>)> {
    Ok((PyState { inner: state }, loads(py, &report.to_json())?))
}

/// The ideal output `|x⟩ ↦ |Mx⟩`.
#[pyfunction]
fn oracle(net: &PyNetwork, state: &PyState) -> PyResult<PyState> {
    let m = net.inner.composite_map().map_err(value_err)?;
    Ok(PyState { inner: apply_isometry(&m, &state.inner).map_err(run_err)? })
}

/// Coherent execution. Returns the output state and the run report as a dict.
#[pyfunction]
#[pyo3(signature = (net, state, mode = "free", seed = 0, forced = None))]
fn run_coherent<'py>(
    py: Python<'py>,
    net: &PyNetwork,
    state: &PyState,
    mode: &str,
    seed: u64,
    forced: Option<Vec<u64>>,
) -> PyResult<(PyState, Bound<'py, PyAny>)> {
    let mode = parse_mode(mode)?;
    let (mut source, spec) = outcome_source(seed, forced);
    let (out, report) = py
        .detach(|| qlnc_core::run_coherent(&net.inner, &state.inner, mode, source.as_mut(), spec))
        .map_err(run_err)?;
    finish(py, out, report)
}

/// Measurement-based execution on the compiled graph state.
#[pyfunction]
#[pyo3(signature = (net, state, mode = "free", seed = 0, forced = None, x_correction = "propagate"))]
fn run_mbqc<'py>(
    py: Python<'py>,
    net: &PyNetwork,
    state: &PyState,
    mode: &str,
    seed: u64,
    forced: Option<Vec<u64>>,
    x_correction: &str,
) -> PyResult<(PyState, Bound<'py, PyAny>)> {
    let mode = parse_mode(mode)?;
    let xc = match x_correction {
        "propagate" => XCorrection::Propagate,
        "local" => XCorrection::Local,
        other => return Err(PyValueError::new_err(format!("unknown x_correction {other:?}"))),
    };
    let (mut source, spec) = outcome_source(seed, forced);
    let (out, report) = py
        .detach(|| {
            let g = compile(&net.inner)?;
            qlnc_core::run_mbqc(&g, &state.inner, mode, xc, source.as_mut(), spec)
        })
        .map_err(run_err)?;
    finish(py, out, report)
}

#[pymodule]
fn qlnc(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyNetwork>()?;
    m.add_class::<PyState>()?;
    m.add_function(wrap_pyfunction!(oracle, m)?)?;
    m.add_function(wrap_pyfunction!(run_coherent, m)?)?;
    m.add_function(wrap_pyfunction!(run_mbqc, m)?)?;
    Ok(())
}
