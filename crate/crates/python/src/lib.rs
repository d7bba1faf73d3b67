//! Python bindings: transfer functions, sensitivity models, indices,
//! integral checks, bounds and the built-in cases.

use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;

use sensbound::bounds::{bode_bound, pj_bound, BoundInputs};
use sensbound::casebook::{self, CaseConfig, CaseDefinition};
use sensbound::indices::{
    default_window, extract_indices, indices_with_split, sweep, SensitivityIndices,
};
use sensbound::integral::{bode_check, poisson_check, IntegralResult, QuadratureConfig};
use sensbound::lti::{Polynomial, TransferFunction};
use sensbound::report::{parse_case, parse_variant, to_json, write_case};
use sensbound::shaping::{
    make_sensitivity, modified_sensitivity, SensitivityModel, ShapingConfig, SingularPoint,
};
use sensbound::Error;

create_exception!(sensbound_py, SensboundError, PyException);
create_exception!(sensbound_py, ConditionNotMet, SensboundError);

fn py_err(e: Error) -> PyErr {
    match e.root() {
        Error::ConditionNotMet { .. } => ConditionNotMet::new_err(e.to_string()),
        _ => SensboundError::new_err(e.to_string()),
    }
}

trait IntoPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for sensbound::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

#[pyclass(name = "TransferFunction", module = "sensbound_py", from_py_object)]
#[derive(Clone)]
struct PyTransferFunction {
    inner: TransferFunction,
}

#[pymethods]
impl PyTransferFunction {
    /// Coefficients in ascending powers of `s`.
    #[new]
    #[pyo3(signature = (num, den, dead_time = 0.0))]
    fn new(num: Vec<f64>, den: Vec<f64>, dead_time: f64) -> PyResult<Self> {
        let inner = TransferFunction::new(
            Polynomial::new(num).py()?,
            Polynomial::new(den).py()?,
            dead_time,
        )
        .py()?;
        Ok(Self { inner })
    }

    #[getter]
    fn num(&self) -> Vec<f64> {
        self.inner.num.coeffs().to_vec()
    }

    #[getter]
    fn den(&self) -> Vec<f64> {
        self.inner.den.coeffs().to_vec()
    }

    #[getter]
    fn dead_time(&self) -> f64 {
        self.inner.dead_time
    }

    /// `G(jω)`.
    fn eval(&self, omega: f64) -> PyResult<Complex64> {
        self.inner.eval(omega).py()
    }

    fn series(&self, other: &PyTransferFunction) -> Self {
        Self {
            inner: self.inner.series(&other.inner),
        }
    }

    fn __repr__(&self) -> String {
        format!(
            "TransferFunction(num={:?}, den={:?}, dead_time={})",
            self.inner.num.coeffs(),
            self.inner.den.coeffs(),
            self.inner.dead_time
        )
    }
}

#[pyclass(name = "Indices", module = "sensbound_py", get_all, from_py_object)]
#[derive(Clone, Copy)]
struct PyIndices {
    omega_c: f64,
    rho: f64,
    s_max: f64,
    omega_ms: f64,
    stability_margin: f64,
}

impl From<SensitivityIndices> for PyIndices {
    fn from(i: SensitivityIndices) -> Self {
        Self {
            omega_c: i.omega_c,
            rho: i.rho,
            s_max: i.s_max,
            omega_ms: i.omega_ms,
            stability_margin: i.stability_margin,
        }
    }
}

#[pymethods]
impl PyIndices {
    #[new]
    fn new(omega_c: f64, rho: f64, s_max: f64, omega_ms: f64) -> PyResult<Self> {
        Ok(SensitivityIndices::new(omega_c, rho, s_max, omega_ms)
            .py()?
            .into())
    }

    fn __repr__(&self) -> String {
        format!(
            "Indices(omega_c={}, rho={}, s_max={}, omega_ms={})",
            self.omega_c, self.rho, self.s_max, self.omega_ms
        )
    }
}

impl PyIndices {
    fn core(&self) -> PyResult<SensitivityIndices> {
        SensitivityIndices::new(self.omega_c, self.rho, self.s_max, self.omega_ms).py()
    }
}

#[pyclass(name = "IntegralResult", module = "sensbound_py", get_all)]
struct PyIntegralResult {
    lhs: f64,
    rhs: f64,
    residual: f64,
    tail_bound: f64,
    quad_error: f64,
    panels: usize,
}

impl From<IntegralResult> for PyIntegralResult {
    fn from(r: IntegralResult) -> Self {
        Self {
            lhs: r.lhs_numeric,
            rhs: r.rhs_analytic,
            residual: r.residual,
            tail_bound: r.tail_bound,
            quad_error: r.quad_error,
            panels: r.panels_used,
        }
    }
}

#[pymethods]
impl PyIntegralResult {
    fn __repr__(&self) -> String {
        format!(
            "IntegralResult(lhs={}, rhs={}, residual={})",
            self.lhs, self.rhs, self.residual
        )
    }
}

/// Sensitivity `g = κ/(1 + G)` of a unity-feedback loop.
#[pyclass(name = "Sensitivity", module = "sensbound_py")]
struct PySensitivity {
    inner: SensitivityModel,
}

fn roots(v: &[Complex64]) -> Vec<Complex64> {
    v.to_vec()
}

fn quad(tol: f64) -> QuadratureConfig {
    QuadratureConfig {
        abs_tol: tol,
        ..QuadratureConfig::default()
    }
}

#[pymethods]
impl PySensitivity {
    #[new]
    #[pyo3(signature = (open_loop, pade_order = 6))]
    fn new(open_loop: &PyTransferFunction, pade_order: usize) -> PyResult<Self> {
        let cfg = ShapingConfig {
            pade_order,
            ..ShapingConfig::default()
        };
        Ok(Self {
            inner: make_sensitivity(open_loop.inner.clone(), &cfg).py()?,
        })
    }

    /// RHP poles of the open loop.
    #[getter]
    fn alpha(&self) -> Vec<Complex64> {
        roots(&self.inner.alpha.roots)
    }

    /// RHP closed-loop poles.
    #[getter]
    fn beta(&self) -> Vec<Complex64> {
        roots(&self.inner.beta.roots)
    }

    /// RHP open-loop zeros.
    #[getter]
    fn zeta(&self) -> Vec<Complex64> {
        roots(&self.inner.zeta.roots)
    }

    fn eval(&self, omega: f64) -> PyResult<Complex64> {
        self.inner.eval(omega).py()
    }

    fn magnitude(&self, omega: f64) -> PyResult<f64> {
        Ok(self.inner.eval(omega).py()?.norm())
    }

    /// Same magnitude with the RHP poles and closed-loop poles reflected.
    fn modified(&self) -> PyResult<Self> {
        Ok(Self {
            inner: modified_sensitivity(&self.inner).py()?,
        })
    }

    /// `(omegas, magnitudes)` on a log grid.
    #[pyo3(signature = (omega_min = None, omega_max = None, points = 2000))]
    fn sweep(
        &self,
        omega_min: Option<f64>,
        omega_max: Option<f64>,
        points: usize,
    ) -> PyResult<(Vec<f64>, Vec<f64>)> {
        let (lo, hi) = default_window(&self.inner);
        let s = sweep(
            &self.inner,
            omega_min.unwrap_or(lo),
            omega_max.unwrap_or(hi),
            points,
        )
        .py()?;
        Ok((s.omegas, s.mags))
    }

    /// Indices at the first unit crossing, or with `ρ` taken below `split`.
    #[pyo3(signature = (split = None, points = 2000))]
    fn indices(&self, split: Option<f64>, points: usize) -> PyResult<PyIndices> {
        let (lo, hi) = default_window(&self.inner);
        let s = sweep(&self.inner, lo, hi, points).py()?;
        let ix = match split {
            Some(w) => indices_with_split(&self.inner, &s, w),
            None => extract_indices(&self.inner, &s),
        };
        Ok(ix.py()?.into())
    }

    /// Poisson integral against its analytic value at `σ + jη`.
    #[pyo3(signature = (sigma, eta = 0.0, tol = 1e-6))]
    fn poisson(&self, sigma: f64, eta: f64, tol: f64) -> PyResult<PyIntegralResult> {
        let sp = SingularPoint::explicit(sigma, eta).py()?;
        Ok(poisson_check(&self.inner, &sp, &quad(tol)).py()?.into())
    }

    /// Unweighted integral against its analytic value.
    #[pyo3(signature = (tol = 1e-6))]
    fn bode(&self, tol: f64) -> PyResult<PyIntegralResult> {
        Ok(bode_check(&self.inner, &quad(tol)).py()?.into())
    }
}

fn variant(name: &str) -> PyResult<sensbound::bounds::BoundVariant> {
    parse_variant(name)
        .ok_or_else(|| SensboundError::new_err(format!("unknown bound variant `{name}`")))
}

/// Weighted lower bound on `ln s_max` (nats).
#[pyfunction]
#[pyo3(signature = (indices, sigma, alpha = vec![], beta = vec![], g_at_sp = 1.0, variant_name = "pj_at_nmp_zero"))]
fn weighted_bound(
    indices: &PyIndices,
    sigma: f64,
    alpha: Vec<Complex64>,
    beta: Vec<Complex64>,
    g_at_sp: f64,
    variant_name: &str,
) -> PyResult<f64> {
    let inputs = BoundInputs {
        indices: indices.core()?,
        sp: SingularPoint::explicit(sigma, 0.0).py()?,
        alpha,
        beta,
        g_at_sp,
        a: 0.0,
        omega_l: None,
    };
    Ok(pj_bound(&inputs, variant(variant_name)?).py()?.bound_nats)
}

/// Unweighted lower bound on `ln s_max` (nats).
#[pyfunction]
#[pyo3(signature = (indices, omega_l, alpha = vec![], beta = vec![], a = 0.0, variant_name = "bode"))]
fn unweighted_bound(
    indices: &PyIndices,
    omega_l: f64,
    alpha: Vec<Complex64>,
    beta: Vec<Complex64>,
    a: f64,
    variant_name: &str,
) -> PyResult<f64> {
    let inputs = BoundInputs {
        indices: indices.core()?,
        sp: SingularPoint::explicit(1.0, 0.0).py()?,
        alpha,
        beta,
        g_at_sp: 1.0,
        a,
        omega_l: Some(omega_l),
    };
    Ok(bode_bound(&inputs, variant(variant_name)?).py()?.bound_nats)
}

#[pyclass(name = "Case", module = "sensbound_py")]
struct PyCase {
    inner: CaseDefinition,
}

#[pymethods]
impl PyCase {
    #[getter]
    fn name(&self) -> String {
        self.inner.name.clone()
    }

    #[getter]
    fn controllers(&self) -> Vec<String> {
        self.inner
            .controllers
            .iter()
            .map(|c| c.key.clone())
            .collect()
    }

    fn open_loop(&self, controller: &str) -> PyResult<PyTransferFunction> {
        Ok(PyTransferFunction {
            inner: self.inner.open_loop(controller).py()?,
        })
    }

    /// The case in the case-file format.
    fn to_text(&self) -> String {
        write_case(&self.inner)
    }

    /// Full analysis as a versioned JSON document.
    #[pyo3(signature = (controller = None, skip_integrals = false))]
    fn run(
        &self,
        py: Python<'_>,
        controller: Option<String>,
        skip_integrals: bool,
    ) -> PyResult<String> {
        let cfg = CaseConfig {
            controller,
            skip_integrals,
            ..CaseConfig::default()
        };
        let case = self.inner.clone();
        let report = py.detach(move || casebook::run_case(&case, &cfg)).py()?;
        to_json("case_report", &report).py()
    }
}

#[pyfunction]
fn load_case(name: &str) -> PyResult<PyCase> {
    Ok(PyCase {
        inner: casebook::load_case(name).py()?,
    })
}

#[pyfunction]
#[pyo3(name = "parse_case")]
fn parse_case_text(text: &str) -> PyResult<PyCase> {
    Ok(PyCase {
        inner: parse_case(text).py()?,
    })
}

#[pymodule]
fn sensbound_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTransferFunction>()?;
    m.add_class::<PyIndices>()?;
    m.add_class::<PyIntegralResult>()?;
    m.add_class::<PySensitivity>()?;
    m.add_class::<PyCase>()?;
    m.add_function(wrap_pyfunction!(weighted_bound, m)?)?;
    m.add_function(wrap_pyfunction!(unweighted_bound, m)?)?;
    m.add_function(wrap_pyfunction!(load_case, m)?)?;
    m.add_function(wrap_pyfunction!(parse_case_text, m)?)?;
    m.add("SensboundError", m.py().get_type::<SensboundError>())?;
    m.add("ConditionNotMet", m.py().get_type::<ConditionNotMet>())?;
    m.add("BUILTIN_CASES", casebook::BUILTIN_CASES.to_vec())?;
    Ok(())
}
