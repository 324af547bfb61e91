//! Python bindings for `gshift`.
//!
//! Bodies are described with the same JSON grammar as run configurations,
//! and whole commands can be run from a configuration string.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use gshift::bodies::{BodySpec, Exactness};
use gshift::cli::{run, Command, RunConfig};
use gshift::{bounds, kernels, verify};

fn err(e: gshift::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn half_width(a: f64) -> PyResult<kernels::ExtendedHalfWidth> {
    kernels::ExtendedHalfWidth::new(a).map_err(err)
}

fn direction(u: Vec<f64>) -> PyResult<gshift::Direction> {
    gshift::Direction::normalize(&u).map_err(err)
}

#[pyfunction]
fn std_normal_cdf(x: f64) -> f64 {
    kernels::std_normal_cdf(x)
}

#[pyfunction]
fn std_normal_pdf(x: f64) -> f64 {
    kernels::std_normal_pdf(x)
}

#[pyfunction]
fn regularized_gamma_p(shape: f64, x: f64) -> PyResult<f64> {
    kernels::regularized_gamma_p(shape, x).map_err(err)
}

/// `r_t(a)`; pass `float("inf")` for an infinite half-width.
#[pyfunction]
fn ratio_r(t: f64, a: f64) -> PyResult<f64> {
    Ok(kernels::ratio_r(t, half_width(a)?).map_err(err)?.value())
}

/// `(g_a(t), g'_a(t))`.
#[pyfunction]
fn slab_g(a: f64, t: f64) -> PyResult<(f64, f64)> {
    let g = kernels::slab_g(half_width(a)?, t);
    Ok((g.value, g.derivative))
}

#[pyfunction]
fn slab_lambda(a: f64, t: f64) -> PyResult<f64> {
    kernels::slab_lambda(a, t).map_err(err)
}

#[pyfunction]
fn oracle_slab(a: f64, t: f64) -> PyResult<f64> {
    verify::oracle_slab(a, t).map_err(err)
}

#[pyfunction]
fn oracle_ball(n: usize, radius: f64, t: f64) -> PyResult<f64> {
    verify::oracle_ball(n, radius, t).map_err(err)
}

#[pyclass(name = "Covariance", frozen)]
struct PyCovariance {
    inner: gshift::Covariance,
}

#[pymethods]
impl PyCovariance {
    #[new]
    fn new(rows: Vec<Vec<f64>>) -> PyResult<Self> {
        let m = gshift::Matrix::from_rows(&rows).map_err(err)?;
        Ok(PyCovariance {
            inner: gshift::Covariance::new(m).map_err(err)?,
        })
    }

    #[staticmethod]
    fn identity(n: usize) -> Self {
        PyCovariance {
            inner: gshift::Covariance::identity(n),
        }
    }

    #[staticmethod]
    fn diagonal(values: Vec<f64>) -> PyResult<Self> {
        Ok(PyCovariance {
            inner: gshift::Covariance::diagonal(&values).map_err(err)?,
        })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn matrix(&self) -> Vec<Vec<f64>> {
        self.inner.matrix().to_rows()
    }

    fn inv_sqrt(&self) -> Vec<Vec<f64>> {
        self.inner.inv_sqrt().to_rows()
    }

    fn eigenvalues(&self) -> Vec<f64> {
        self.inner.eigenvalues().to_vec()
    }

    /// `‖Σ^{-1/2}u‖` for `u` normalized to unit length.
    fn mahalanobis_norm(&self, u: Vec<f64>) -> PyResult<f64> {
        self.inner.mahalanobis_norm(&direction(u)?).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("Covariance(dim={})", self.inner.dim())
    }
}

#[pyclass(name = "ConvexBody", frozen)]
struct PyConvexBody {
    inner: gshift::ConvexBody,
}

#[pymethods]
impl PyConvexBody {
    /// Builds a body in dimension `dim` from its JSON description, e.g.
    /// `{"kind": "lp_ball", "p": 2, "radius": 1.0}`.
    #[staticmethod]
    fn from_json(text: &str, dim: usize) -> PyResult<Self> {
        let spec: BodySpec = serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(PyConvexBody {
            inner: spec.build(dim, "body").map_err(err)?,
        })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn contains(&self, x: Vec<f64>) -> PyResult<bool> {
        self.inner.contains(&x).map_err(err)
    }

    /// `(δ*(v | A), exact)`; the value may be `inf`.
    fn support(&self, v: Vec<f64>) -> PyResult<(f64, bool)> {
        let s = self.inner.support(&v).map_err(err)?;
        Ok((s.value, s.exactness == Exactness::Exact))
    }

    fn __repr__(&self) -> String {
        format!("ConvexBody(dim={})", self.inner.dim())
    }
}

#[pyclass(name = "BoundReport", frozen, get_all)]
struct PyBoundReport {
    t: f64,
    mahalanobis: f64,
    exponent_a: f64,
    exact: bool,
    lower: f64,
    upper: f64,
}

#[pymethods]
impl PyBoundReport {
    fn __repr__(&self) -> String {
        format!(
            "BoundReport(t={}, lower={}, upper={}, exponent_a={}, exact={})",
            self.t, self.lower, self.upper, self.exponent_a, self.exact
        )
    }
}

#[pyclass(name = "PowerReport", frozen, get_all)]
struct PyPowerReport {
    theta: f64,
    alpha: f64,
    beta_lower: f64,
    beta_upper: f64,
}

#[pymethods]
impl PyPowerReport {
    fn __repr__(&self) -> String {
        format!(
            "PowerReport(theta={}, alpha={}, beta_lower={}, beta_upper={})",
            self.theta, self.alpha, self.beta_lower, self.beta_upper
        )
    }
}

#[pyclass(name = "McEstimate", frozen, get_all)]
struct PyMcEstimate {
    value: f64,
    stderr: f64,
    samples: u64,
    hits: u64,
    seed: u64,
    stream: u64,
}

impl From<verify::McEstimate> for PyMcEstimate {
    fn from(e: verify::McEstimate) -> Self {
        PyMcEstimate {
            value: e.value,
            stderr: e.stderr,
            samples: e.samples,
            hits: e.hits,
            seed: e.seed.seed,
            stream: e.seed.stream,
        }
    }
}

#[pymethods]
impl PyMcEstimate {
    fn __repr__(&self) -> String {
        format!(
            "McEstimate(value={}, stderr={}, samples={}, hits={})",
            self.value, self.stderr, self.samples, self.hits
        )
    }
}

#[pyclass(name = "SandwichVerdict", frozen, get_all)]
struct PySandwichVerdict {
    ratio: f64,
    ratio_stderr: f64,
    lower: f64,
    upper: f64,
    lower_z: f64,
    upper_z: f64,
    passed: bool,
}

#[pymethods]
impl PySandwichVerdict {
    fn __repr__(&self) -> String {
        format!(
            "SandwichVerdict(ratio={}, lower_z={}, upper_z={}, passed={})",
            self.ratio, self.lower_z, self.upper_z, self.passed
        )
    }
}

#[pyfunction]
fn ratio_bounds(sigma: &PyCovariance, body: &PyConvexBody, u: Vec<f64>, t: f64) -> PyResult<PyBoundReport> {
    let r = bounds::ratio_bounds_set(&sigma.inner, &body.inner, &direction(u)?, t).map_err(err)?;
    Ok(PyBoundReport {
        t: r.t,
        mahalanobis: r.mahalanobis,
        exponent_a: r.exponent_a.value(),
        exact: r.exponent_exactness == Exactness::Exact,
        lower: r.lower,
        upper: r.upper,
    })
}

#[pyfunction]
fn power_envelope(
    sigma: &PyCovariance,
    body: &PyConvexBody,
    u: Vec<f64>,
    theta: f64,
    alpha: f64,
) -> PyResult<PyPowerReport> {
    let r = bounds::power_envelope(&sigma.inner, &body.inner, &direction(u)?, theta, alpha).map_err(err)?;
    Ok(PyPowerReport {
        theta: r.theta,
        alpha: r.alpha,
        beta_lower: r.beta_lower,
        beta_upper: r.beta_upper,
    })
}

#[pyfunction]
fn estimate_shift_prob(
    sigma: &PyCovariance,
    body: &PyConvexBody,
    u: Vec<f64>,
    t: f64,
    samples: u64,
    seed: u64,
) -> PyResult<PyMcEstimate> {
    verify::estimate_shift_prob(&sigma.inner, &body.inner, &direction(u)?, t, samples, seed)
        .map(Into::into)
        .map_err(err)
}

#[pyfunction]
fn estimate_power(
    sigma: &PyCovariance,
    body: &PyConvexBody,
    u: Vec<f64>,
    theta: f64,
    samples: u64,
    seed: u64,
) -> PyResult<PyMcEstimate> {
    verify::estimate_power(&sigma.inner, &body.inner, &direction(u)?, theta, samples, seed)
        .map(Into::into)
        .map_err(err)
}

#[pyfunction]
fn estimate_conditional_center(body: &PyConvexBody, u: Vec<f64>, t: f64, samples: u64, seed: u64) -> PyResult<PyMcEstimate> {
    verify::estimate_conditional_center(&body.inner, &direction(u)?, t, samples, seed)
        .map(Into::into)
        .map_err(err)
}

#[pyfunction]
#[pyo3(signature = (sigma, body, u, t, samples, seed, z_threshold = verify::DEFAULT_Z))]
fn verify_sandwich(
    sigma: &PyCovariance,
    body: &PyConvexBody,
    u: Vec<f64>,
    t: f64,
    samples: u64,
    seed: u64,
    z_threshold: f64,
) -> PyResult<PySandwichVerdict> {
    let v = verify::verify_sandwich(
        &sigma.inner,
        verify::Integrand::Set(&body.inner),
        &direction(u)?,
        t,
        samples,
        z_threshold,
        seed,
    )
    .map_err(err)?;
    Ok(PySandwichVerdict {
        ratio: v.ratio,
        ratio_stderr: v.ratio_stderr,
        lower: v.bounds.lower,
        upper: v.bounds.upper,
        lower_z: v.lower_z,
        upper_z: v.upper_z,
        passed: v.pass,
    })
}

/// Runs `bounds`, `power`, `verify` or `support` on a JSON configuration and
/// returns the JSON report.
#[pyfunction]
fn run_command(command: &str, config: &str) -> PyResult<String> {
    let command = match command {
        "bounds" => Command::Bounds,
        "power" => Command::Power,
        "verify" => Command::Verify,
        "support" => Command::Support,
        other => return Err(PyValueError::new_err(format!("unknown command {other:?}"))),
    };
    let config = RunConfig::from_json(config).map_err(err)?;
    Ok(run(command, &config).map_err(err)?.to_json())
}

#[pymodule(name = "gshift")]
fn gshift_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyCovariance>()?;
    m.add_class::<PyConvexBody>()?;
    m.add_class::<PyBoundReport>()?;
    m.add_class::<PyPowerReport>()?;
    m.add_class::<PyMcEstimate>()?;
    m.add_class::<PySandwichVerdict>()?;
    m.add_function(wrap_pyfunction!(std_normal_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(std_normal_pdf, m)?)?;
    m.add_function(wrap_pyfunction!(regularized_gamma_p, m)?)?;
    m.add_function(wrap_pyfunction!(ratio_r, m)?)?;
    m.add_function(wrap_pyfunction!(slab_g, m)?)?;
    m.add_function(wrap_pyfunction!(slab_lambda, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_slab, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_ball, m)?)?;
    m.add_function(wrap_pyfunction!(ratio_bounds, m)?)?;
    m.add_function(wrap_pyfunction!(power_envelope, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_shift_prob, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_power, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_conditional_center, m)?)?;
    m.add_function(wrap_pyfunction!(verify_sandwich, m)?)?;
    m.add_function(wrap_pyfunction!(run_command, m)?)?;
    Ok(())
}
