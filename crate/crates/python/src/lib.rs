//! Python bindings: profiles, the band minimum, the model operator and the
//! asymptotic envelopes. Values that can leave the `f64` range come back as
//! `SignedLog` objects.

use pyo3::exceptions::{PyArithmeticError, PyIndexError, PyValueError};
use pyo3::prelude::*;

use plate::asymptotics::{self, Envelope};
use plate::{band, minimum, model};

fn to_py(e: plate::Error) -> PyErr {
    use plate::Error::*;
    match e {
        Cancellation { .. } | Truncation { .. } | PsdViolation { .. } => PyArithmeticError::new_err(e.to_string()),
        OutOfSpectrum { .. } => PyIndexError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn envelope_kind(which: &str) -> PyResult<Envelope> {
    match which {
        "minus" => Ok(Envelope::Minus),
        "plus" => Ok(Envelope::Plus),
        other => Err(PyValueError::new_err(format!("envelope must be 'minus' or 'plus', got {other:?}"))),
    }
}

/// Signed number stored as `sign * exp(ln_abs)`.
#[pyclass(frozen, skip_from_py_object, name = "SignedLog", module = "plate_modes")]
#[derive(Clone, Copy)]
struct PySignedLog(plate::SignedLog);

#[pymethods]
impl PySignedLog {
    #[getter]
    fn sign(&self) -> i8 {
        if self.0.is_zero() {
            0
        } else if self.0.is_negative() {
            -1
        } else {
            1
        }
    }

    #[getter]
    fn ln_abs(&self) -> f64 {
        self.0.ln_abs
    }

    fn __float__(&self) -> f64 {
        self.0.to_f64()
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }

    fn __repr__(&self) -> String {
        format!("SignedLog({})", self.0)
    }
}

#[pyclass(frozen, skip_from_py_object, name = "RadialProfile", module = "plate_modes")]
#[derive(Clone)]
struct PyProfile(plate::RadialProfile);

#[pymethods]
impl PyProfile {
    /// Parses `disk:a=1`, `annulus:a=1,t1=0.5,t2=1`, `bump:a=1` or `table:path=f.csv`.
    #[new]
    fn new(spec: &str) -> PyResult<Self> {
        spec.parse().map(PyProfile).map_err(to_py)
    }

    #[getter]
    fn a(&self) -> f64 {
        self.0.a()
    }

    fn moment_f_t(&self, t: f64) -> PyResult<f64> {
        self.0.moment_f_t(t).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("RadialProfile({:?})", self.0.to_string())
    }
}

#[pyclass(frozen, skip_from_py_object, get_all, name = "SpectralMinimum", module = "plate_modes")]
#[derive(Clone, Copy)]
struct PyMinimum {
    kappa: f64,
    lambda_cap: f64,
    q: f64,
    kappa_err: f64,
    lambda_err: f64,
    q_err: f64,
}

impl PyMinimum {
    fn inner(&self) -> minimum::SpectralMinimum {
        minimum::SpectralMinimum {
            kappa: self.kappa,
            lambda_cap: self.lambda_cap,
            q: self.q,
            kappa_err: self.kappa_err,
            lambda_err: self.lambda_err,
            q_err: self.q_err,
        }
    }
}

#[pymethods]
impl PyMinimum {
    fn __repr__(&self) -> String {
        format!("SpectralMinimum(kappa={}, lambda_cap={}, q={})", self.kappa, self.lambda_cap, self.q)
    }
}

/// Band minimum `(κ, Λ, q)` with error bars.
#[pyfunction]
fn find_minimum() -> PyResult<PyMinimum> {
    let m = minimum::find_minimum().map_err(to_py)?;
    Ok(PyMinimum {
        kappa: m.kappa,
        lambda_cap: m.lambda_cap,
        q: m.q,
        kappa_err: m.kappa_err,
        lambda_err: m.lambda_err,
        q_err: m.q_err,
    })
}

/// `(λ1(r), branch)` with branch such as `"hat1"`.
#[pyfunction]
fn lowest_branch(r: f64) -> PyResult<(f64, String)> {
    let p = band::lowest_branch(r).map_err(to_py)?;
    Ok((p.lambda, p.branch_tag.to_string()))
}

/// Normalized secular function; its zeros in `λ` are the hat eigenvalues.
#[pyfunction]
fn secular_function(lam: f64, r: f64) -> f64 {
    band::secular_function(lam, r)
}

#[pyfunction]
fn check_eigenvalue(r: f64, k: usize) -> f64 {
    band::check_eigenvalue(r, k)
}

#[pyfunction]
fn rayleigh_quotient_testcase() -> PyResult<f64> {
    band::rayleigh_quotient_testcase().map_err(to_py)
}

#[pyclass(frozen, skip_from_py_object, name = "ModelConstants", module = "plate_modes")]
struct PyConstants(model::ModelConstants);

#[pymethods]
impl PyConstants {
    #[new]
    fn new(profile: &PyProfile, minimum: &PyMinimum) -> PyResult<Self> {
        model::ModelConstants::new(&profile.0, &minimum.inner())
            .map(PyConstants)
            .map_err(to_py)
    }

    #[getter]
    fn p(&self) -> f64 {
        self.0.p
    }

    #[getter]
    fn p_m(&self) -> (f64, f64, f64) {
        (self.0.p0, self.0.p1, self.0.p2)
    }

    #[getter]
    fn c1(&self) -> f64 {
        self.0.c1
    }

    /// `k(s, t)`; the truncation defaults to the smallest sufficient one.
    #[pyo3(signature = (s, t, truncation_k=None))]
    fn kernel(&self, s: f64, t: f64, truncation_k: Option<usize>) -> PyResult<f64> {
        let k = match truncation_k {
            Some(k) => k,
            None => model::kernel_truncation(&self.0, s, t).map_err(to_py)?,
        };
        model::kernel(&self.0, s, t, k).map_err(to_py)
    }

    #[pyo3(signature = (n, bits=128))]
    fn mu_series(&self, py: Python<'_>, n: usize, bits: usize) -> PyResult<PySignedLog> {
        py.detach(|| model::mu_series(&self.0, n, bits))
            .map(|s| PySignedLog(s.value))
            .map_err(to_py)
    }

    #[pyo3(signature = (n, min_bits=128))]
    fn mu_quadrature(&self, py: Python<'_>, n: usize, min_bits: usize) -> PyResult<PySignedLog> {
        py.detach(|| model::mu_quadrature_at(&self.0, n, min_bits))
            .map(|q| PySignedLog(q.value))
            .map_err(to_py)
    }
}

/// `λ_l(K)` in non-increasing order from `μ_0 … μ_N` (floats).
#[pyfunction]
fn ordered_spectrum(mu: Vec<f64>) -> PyResult<Vec<f64>> {
    let s = model::ordered_spectrum_f64(&mu).map_err(to_py)?;
    Ok(s.ordered.iter().map(|v| v.to_f64()).collect())
}

/// `(κ_l(α), ln(Λ − κ_l(α)))` from the leading small-coupling term.
#[pyfunction]
fn predict_eigenvalue(mu: Vec<f64>, minimum: &PyMinimum, l: usize, alpha: f64) -> PyResult<(f64, f64)> {
    let s = model::ordered_spectrum_f64(&mu).map_err(to_py)?;
    let p = asymptotics::predict_eigenvalue(&s, &minimum.inner(), l, alpha).map_err(to_py)?;
    Ok((p.predicted, p.log_gap))
}

#[pyclass(frozen, skip_from_py_object, name = "AsymptoticEnvelope", module = "plate_modes")]
struct PyEnvelope(asymptotics::AsymptoticEnvelope);

#[pymethods]
impl PyEnvelope {
    #[new]
    fn new(profile: &PyProfile, minimum: &PyMinimum) -> PyResult<Self> {
        asymptotics::AsymptoticEnvelope::new(&profile.0, &minimum.inner())
            .map(PyEnvelope)
            .map_err(to_py)
    }

    #[getter]
    fn t0(&self) -> f64 {
        self.0.t0
    }

    /// `ln w±(t)` with `which` in `{"minus", "plus"}`.
    fn log_w(&self, which: &str, t: f64) -> PyResult<f64> {
        self.0.log_w(envelope_kind(which)?, t).map_err(to_py)
    }

    fn inverse_w(&self, which: &str, log_tau: f64) -> PyResult<f64> {
        self.0.inverse_w(envelope_kind(which)?, log_tau).map_err(to_py)
    }
}

#[pymodule]
fn plate_modes(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySignedLog>()?;
    m.add_class::<PyProfile>()?;
    m.add_class::<PyMinimum>()?;
    m.add_class::<PyConstants>()?;
    m.add_class::<PyEnvelope>()?;
    m.add_function(wrap_pyfunction!(find_minimum, m)?)?;
    m.add_function(wrap_pyfunction!(lowest_branch, m)?)?;
    m.add_function(wrap_pyfunction!(secular_function, m)?)?;
    m.add_function(wrap_pyfunction!(check_eigenvalue, m)?)?;
    m.add_function(wrap_pyfunction!(rayleigh_quotient_testcase, m)?)?;
    m.add_function(wrap_pyfunction!(ordered_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(predict_eigenvalue, m)?)?;
    Ok(())
}
