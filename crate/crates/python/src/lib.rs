//! Python bindings: `import pychaostego`.

use chaostego::{self as core, StegoError};
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyBytes, PyString};

create_exception!(pychaostego, ChaostegoError, PyValueError);
create_exception!(pychaostego, CapacityError, ChaostegoError);

fn to_py(e: StegoError) -> PyErr {
    match e {
        StegoError::Capacity(_)
        | StegoError::InsufficientCapacity { .. }
        | StegoError::Extract(_) => CapacityError::new_err(e.to_string()),
        other => ChaostegoError::new_err(other.to_string()),
    }
}

fn dims(rows: usize, cols: usize) -> PyResult<core::ImageDims> {
    core::ImageDims::new(rows, cols).map_err(to_py)
}

fn mode(name: &str) -> PyResult<core::Mode> {
    name.parse().map_err(to_py)
}

#[pyclass(name = "SecretKeySet", module = "pychaostego", from_py_object)]
#[derive(Clone)]
struct PySecretKeySet(core::SecretKeySet);

#[pymethods]
impl PySecretKeySet {
    #[new]
    fn new(alpha1: f64, alpha2: f64, x0: f64, y0: f64) -> Self {
        Self(core::SecretKeySet {
            alpha1,
            alpha2,
            x0,
            y0,
        })
    }

    #[staticmethod]
    fn from_key_file(text: &str) -> PyResult<Self> {
        core::SecretKeySet::from_key_file(text)
            .map(Self)
            .map_err(to_py)
    }

    fn to_key_file(&self) -> String {
        self.0.to_key_file()
    }

    /// Violated invariants as `field: reason` strings; empty when valid.
    fn violations(&self) -> Vec<String> {
        match core::validate_keys(&self.0) {
            Ok(()) => Vec::new(),
            Err(v) => v.iter().map(ToString::to_string).collect(),
        }
    }

    fn __repr__(&self) -> &'static str {
        "SecretKeySet(<hidden>)"
    }
}

#[pyclass(name = "Image", module = "pychaostego", from_py_object)]
#[derive(Clone)]
struct PyImage(core::RasterImage);

#[pymethods]
impl PyImage {
    #[new]
    #[pyo3(signature = (rows, cols, samples, channels = 1))]
    fn new(rows: usize, cols: usize, samples: Vec<u8>, channels: usize) -> PyResult<Self> {
        let channels = core::Channels::from_count(channels).map_err(to_py)?;
        core::RasterImage::new(dims(rows, cols)?, channels, samples)
            .map(Self)
            .map_err(to_py)
    }

    #[staticmethod]
    fn from_pnm(data: &[u8]) -> PyResult<Self> {
        core::load_pnm(data).map(Self).map_err(to_py)
    }

    fn to_pnm<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &core::save_pnm(&self.0))
    }

    #[getter]
    fn rows(&self) -> usize {
        self.0.dims().rows()
    }

    #[getter]
    fn cols(&self) -> usize {
        self.0.dims().cols()
    }

    #[getter]
    fn channels(&self) -> usize {
        self.0.channels().count()
    }

    fn samples<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, self.0.samples())
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.0 == other.0
    }

    fn __repr__(&self) -> String {
        format!(
            "Image({}x{}, channels={})",
            self.rows(),
            self.cols(),
            self.channels()
        )
    }
}

#[pyclass(name = "StegoBundle", module = "pychaostego", from_py_object)]
#[derive(Clone)]
struct PyStegoBundle(core::StegoBundle);

#[pymethods]
impl PyStegoBundle {
    #[new]
    fn new(
        stego: PyImage,
        ones_pbm: &[u8],
        zeros_pbm: &[u8],
        coupling: f64,
        mode: &str,
    ) -> PyResult<Self> {
        let side = core::SideMatrices::from_parts(
            core::load_pbm(ones_pbm).map_err(to_py)?,
            core::load_pbm(zeros_pbm).map_err(to_py)?,
        )
        .map_err(to_py)?;
        core::StegoBundle::new(
            stego.0,
            side,
            core::PublicCoupling::new(coupling),
            self::mode(mode)?,
        )
        .map(Self)
        .map_err(to_py)
    }

    #[getter]
    fn stego(&self) -> PyImage {
        PyImage(self.0.stego.clone())
    }

    fn ones_pbm<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &core::save_pbm(&self.0.side.ones))
    }

    fn zeros_pbm<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &core::save_pbm(&self.0.side.zeros))
    }

    #[getter]
    fn coupling(&self) -> f64 {
        self.0.coupling.value()
    }

    #[getter]
    fn mode(&self) -> String {
        self.0.mode.to_string()
    }

    #[getter]
    fn changed_count(&self) -> usize {
        self.0.side.changed_count()
    }
}

#[derive(FromPyObject)]
enum MessageInput {
    Text(String),
    Bytes(Vec<u8>),
}

/// Deterministic key material for `seed`: `(SecretKeySet, R)`.
#[pyfunction]
fn keygen(seed: u64) -> (PySecretKeySet, f64) {
    let (keys, coupling) = core::keygen(seed);
    (PySecretKeySet(keys), coupling.value())
}

/// Hides `message` (str for ascii7/utf16, bytes for raw) in `cover`.
#[pyfunction]
fn embed(
    cover: &PyImage,
    message: MessageInput,
    mode: &str,
    keys: &PySecretKeySet,
    coupling: f64,
) -> PyResult<PyStegoBundle> {
    let mode = self::mode(mode)?;
    let payload = match (mode, message) {
        (core::Mode::Raw, MessageInput::Bytes(b)) => core::encode_bytes(&b),
        (core::Mode::Raw, MessageInput::Text(t)) => core::encode_bytes(t.as_bytes()),
        (m, MessageInput::Text(t)) => core::encode_message(&t, m),
        (_, MessageInput::Bytes(_)) => {
            return Err(ChaostegoError::new_err("text modes take a str message"))
        }
    }
    .map_err(to_py)?;
    core::embed(
        &cover.0,
        &payload,
        &keys.0,
        core::PublicCoupling::new(coupling),
    )
    .map(PyStegoBundle)
    .map_err(to_py)
}

/// Recovers the message: str for text modes, bytes for raw.
#[pyfunction]
fn extract(py: Python<'_>, bundle: &PyStegoBundle, keys: &PySecretKeySet) -> PyResult<Py<PyAny>> {
    let payload = core::extract(&bundle.0, &keys.0).map_err(to_py)?;
    Ok(match core::decode_message(&payload).map_err(to_py)? {
        core::Message::Text(t) => PyString::new(py, &t).into_any().unbind(),
        core::Message::Bytes(b) => PyBytes::new(py, &b).into_any().unbind(),
    })
}

/// First `count` distinct 1-based `(row, col)` positions.
#[pyfunction]
fn select_positions(
    keys: &PySecretKeySet,
    coupling: f64,
    rows: usize,
    cols: usize,
    count: usize,
) -> PyResult<Vec<(usize, usize)>> {
    let stream = core::select_positions(
        &keys.0,
        core::PublicCoupling::new(coupling),
        dims(rows, cols)?,
        count,
    )
    .map_err(to_py)?;
    Ok(stream.iter().map(|p| (p.row, p.col)).collect())
}

#[pyfunction]
fn lyapunov_estimate(alpha: f64, x0: f64, n_iters: usize) -> PyResult<f64> {
    let alpha = core::MapParameter::new(alpha).map_err(to_py)?;
    core::lyapunov_estimate(alpha, x0, n_iters).map_err(to_py)
}

/// `(psnr_db, mse, flips)`; psnr is `inf` for identical images.
#[pyfunction]
fn psnr(cover: &PyImage, stego: &PyImage) -> PyResult<(f64, f64, usize)> {
    let r = core::psnr(&cover.0, &stego.0).map_err(to_py)?;
    Ok((r.psnr_db, r.mse, r.flips))
}

#[pyfunction]
fn histogram_entropy(image: &PyImage) -> f64 {
    core::histogram_entropy(&image.0)
}

#[pyfunction]
fn neighbor_diff_entropy(image: &PyImage) -> PyResult<f64> {
    core::neighbor_diff_entropy(&image.0).map_err(to_py)
}

/// Rows of `(fraction, chi_square, dof, p_embedding)`.
#[pyfunction]
#[pyo3(signature = (image, step_percent = 5))]
fn chi_square_attack(image: &PyImage, step_percent: u32) -> PyResult<Vec<(f64, f64, usize, f64)>> {
    let curve = core::chi_square_attack(&image.0, step_percent).map_err(to_py)?;
    Ok(curve
        .points
        .iter()
        .map(|p| (p.fraction, p.chi_square, p.dof, p.p_embedding))
        .collect())
}

/// Regularized upper incomplete gamma function Q(a, x).
#[pyfunction]
fn gamma_q(a: f64, x: f64) -> PyResult<f64> {
    core::gamma_q(a, x).map_err(to_py)
}

/// Transcript of the simulated exchange as `name=value` lines.
#[pyfunction]
#[pyo3(signature = (alice, bob, coupling, rows = 512, cols = 512, k = 500))]
fn simulate_exchange(
    alice: &PySecretKeySet,
    bob: &PySecretKeySet,
    coupling: f64,
    rows: usize,
    cols: usize,
    k: usize,
) -> PyResult<String> {
    core::simulate_exchange(
        &alice.0,
        &bob.0,
        core::PublicCoupling::new(coupling),
        dims(rows, cols)?,
        k,
    )
    .map(|t| t.to_text())
    .map_err(to_py)
}

#[pymodule]
fn pychaostego(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("ChaostegoError", m.py().get_type::<ChaostegoError>())?;
    m.add("CapacityError", m.py().get_type::<CapacityError>())?;
    m.add_class::<PySecretKeySet>()?;
    m.add_class::<PyImage>()?;
    m.add_class::<PyStegoBundle>()?;
    m.add_function(wrap_pyfunction!(keygen, m)?)?;
    m.add_function(wrap_pyfunction!(embed, m)?)?;
    m.add_function(wrap_pyfunction!(extract, m)?)?;
    m.add_function(wrap_pyfunction!(select_positions, m)?)?;
    m.add_function(wrap_pyfunction!(lyapunov_estimate, m)?)?;
    m.add_function(wrap_pyfunction!(psnr, m)?)?;
    m.add_function(wrap_pyfunction!(histogram_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(neighbor_diff_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(chi_square_attack, m)?)?;
    m.add_function(wrap_pyfunction!(gamma_q, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_exchange, m)?)?;
    Ok(())
}
