//! Python bindings for `momentgap`.
//!
//! Reports with nested structure (`run_verify`, `reproduce`) come back as JSON
//! strings; everything else maps onto floats, tuples and small classes.

use momentgap::{expsums, hypercube, rademacher, rv, sharp_constant, verify, Error};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Solver { .. } | Error::Numerical(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn json<T: serde::Serialize>(value: &T) -> PyResult<String> {
    serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

#[pyclass(name = "SharpConstant", frozen, module = "pymomentgap")]
struct PySharpConstant {
    inner: sharp_constant::SharpConstantResult,
}

#[pymethods]
impl PySharpConstant {
    #[getter]
    fn p(&self) -> f64 {
        self.inner.p
    }

    #[getter]
    fn q(&self) -> f64 {
        self.inner.q
    }

    #[getter]
    fn value(&self) -> f64 {
        self.inner.c_value
    }

    #[getter]
    fn argmin(&self) -> (f64, f64) {
        self.inner.argmin
    }

    #[getter]
    fn lower_bound(&self) -> f64 {
        self.inner.lower_bound
    }

    #[getter]
    fn achieved_tol(&self) -> f64 {
        self.inner.achieved_tol
    }

    /// Relative error of the two-point ratio limit against the constant.
    fn sharpness(&self) -> PyResult<f64> {
        Ok(sharp_constant::sharpness_check(&self.inner).map_err(to_py)?.rel_err)
    }

    fn to_json(&self) -> PyResult<String> {
        json(&self.inner.record())
    }

    fn __repr__(&self) -> String {
        format!(
            "SharpConstant(p={}, q={}, value={:.12}, argmin=({:.6}, {:.6}))",
            self.inner.p, self.inner.q, self.inner.c_value, self.inner.argmin.0, self.inner.argmin.1
        )
    }
}

#[pyfunction]
#[pyo3(signature = (p, q, tol = sharp_constant::DEFAULT_TOL))]
fn compute_c(py: Python<'_>, p: f64, q: f64, tol: f64) -> PyResult<PySharpConstant> {
    let inner = py.detach(|| sharp_constant::compute_c(p, q, tol)).map_err(to_py)?;
    Ok(PySharpConstant { inner })
}

#[pyfunction]
fn b_func(a: f64, c: f64, p: f64) -> PyResult<f64> {
    sharp_constant::b_func(a, c, p).map_err(to_py)
}

#[pyfunction]
fn objective(a: f64, c: f64, p: f64, q: f64) -> PyResult<f64> {
    sharp_constant::objective(a, c, p, q).map_err(to_py)
}

#[pyfunction]
fn c_lower_bound(p: f64, q: f64) -> PyResult<f64> {
    sharp_constant::c_lower_bound(p, q).map_err(to_py)
}

/// Minors of the torsion matrix at `(t, p, q)`.
#[pyfunction]
fn torsion_minors(t: f64, p: f64, q: f64) -> PyResult<Vec<f64>> {
    Ok(sharp_constant::torsion_minors(t, p, q).map_err(to_py)?.minors.to_vec())
}

#[pyclass(name = "RandomVariable", frozen, module = "pymomentgap")]
struct PyRandomVariable {
    inner: rv::FiniteRv,
}

#[pymethods]
impl PyRandomVariable {
    #[new]
    fn new(values: Vec<f64>, probs: Vec<f64>) -> PyResult<Self> {
        if values.len() != probs.len() {
            return Err(PyValueError::new_err("values and probs differ in length"));
        }
        let inner = rv::FiniteRv::new(values.into_iter().zip(probs)).map_err(to_py)?;
        Ok(Self { inner })
    }

    /// Unit-L2 variable on `{a, b}` with `0 < a < 1 < b`.
    #[staticmethod]
    fn two_point(a: f64, b: f64) -> PyResult<Self> {
        let inner = rv::two_point(a, b).map_err(to_py)?.to_finite_rv();
        Ok(Self { inner })
    }

    fn atoms(&self) -> Vec<(f64, f64)> {
        self.inner.atoms().iter().map(|a| (a.value, a.prob)).collect()
    }

    /// `E|X|^p`.
    fn moment(&self, p: f64) -> f64 {
        self.inner.moment(p)
    }

    fn lp_norm(&self, p: f64) -> PyResult<f64> {
        self.inner.lp_norm(p).map_err(to_py)
    }

    fn normalized(&self) -> PyResult<Self> {
        Ok(Self {
            inner: rv::normalize_l2(&self.inner).map_err(to_py)?,
        })
    }

    /// `(rhs − ‖X‖₁)` of the refined inequality; negative means it fails.
    fn gap(&self, p: f64, q: f64, c: f64) -> PyResult<f64> {
        Ok(rv::main_inequality_rhs(&self.inner, p, q, c).map_err(to_py)?.gap)
    }

    /// Largest constant for which the refined inequality holds for this variable.
    fn admissible_constant(&self, p: f64, q: f64) -> PyResult<f64> {
        rv::admissible_constant(&self.inner, p, q).map_err(to_py)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("RandomVariable({:?})", self.atoms())
    }
}

#[pyfunction]
#[pyo3(signature = (tol = 1e-10))]
fn delta_integral(tol: f64) -> PyResult<(f64, f64)> {
    let r = hypercube::delta_integral(tol).map_err(to_py)?;
    Ok((r.value, r.est_error))
}

#[pyfunction]
#[pyo3(signature = (tol = 1e-6))]
fn remark_integral(py: Python<'_>, tol: f64) -> PyResult<(f64, f64)> {
    let r = py.detach(|| hypercube::remark_integral(tol)).map_err(to_py)?;
    Ok((r.value, r.est_error))
}

#[pyclass(name = "CubeFunction", frozen, module = "pymomentgap")]
struct PyCubeFunction {
    inner: hypercube::CubeFunction,
}

#[pymethods]
impl PyCubeFunction {
    /// `values[i]` is `f(x)` where bit `j` of `i` set means `x_j = -1`.
    #[new]
    fn new(n: usize, values: Vec<f64>) -> PyResult<Self> {
        Ok(Self {
            inner: hypercube::CubeFunction::new(n, values).map_err(to_py)?,
        })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    fn values(&self) -> Vec<f64> {
        self.inner.values().to_vec()
    }

    fn expectation(&self) -> f64 {
        self.inner.expectation()
    }

    fn poincare_ratio(&self) -> PyResult<f64> {
        hypercube::poincare_ratio(&self.inner).map_err(to_py)
    }
}

#[pyfunction]
fn dax1_rhs(p: f64) -> PyResult<f64> {
    rademacher::dax1_rhs(p).map_err(to_py)
}

#[pyfunction]
fn ramon1_rhs(p: f64) -> PyResult<f64> {
    rademacher::ramon1_rhs(p).map_err(to_py)
}

#[pyfunction]
fn stone_rhs(p: f64) -> PyResult<f64> {
    rademacher::stone_rhs(p).map_err(to_py)
}

#[pyclass(name = "BiasedSum", frozen, module = "pymomentgap")]
struct PyBiasedSum {
    inner: rademacher::BiasedSumSpec,
}

#[pymethods]
impl PyBiasedSum {
    #[new]
    #[pyo3(signature = (bias, coeffs, normalize = false))]
    fn new(bias: f64, coeffs: Vec<f64>, normalize: bool) -> PyResult<Self> {
        let inner = if normalize {
            rademacher::BiasedSumSpec::normalized(bias, coeffs)
        } else {
            rademacher::BiasedSumSpec::new(bias, coeffs)
        };
        Ok(Self {
            inner: inner.map_err(to_py)?,
        })
    }

    #[getter]
    fn bias(&self) -> f64 {
        self.inner.bias()
    }

    #[getter]
    fn coeffs(&self) -> Vec<f64> {
        self.inner.coeffs().to_vec()
    }

    /// Exact `E|S|` by enumeration.
    fn mean_abs(&self) -> PyResult<f64> {
        Ok(rademacher::exact_sum_distribution(&self.inner).map_err(to_py)?.mean())
    }

    /// `E S⁴` from the closed form.
    fn fourth_moment(&self) -> f64 {
        rademacher::fourth_moment(&self.inner)
    }

    /// `E S⁴` by enumeration.
    fn fourth_moment_exact(&self) -> PyResult<f64> {
        Ok(rademacher::exact_sum_distribution(&self.inner).map_err(to_py)?.moment(4.0))
    }
}

#[pyclass(name = "ExpSumSet", frozen, module = "pymomentgap")]
struct PyExpSumSet {
    inner: expsums::ExpSumSet,
}

#[pymethods]
impl PyExpSumSet {
    #[new]
    fn new(elements: Vec<i64>) -> PyResult<Self> {
        Ok(Self {
            inner: expsums::ExpSumSet::new(elements).map_err(to_py)?,
        })
    }

    /// `{1², 2², …, m²}`.
    #[staticmethod]
    fn squares(m: u64) -> PyResult<Self> {
        Ok(Self {
            inner: expsums::squares_set(m).map_err(to_py)?,
        })
    }

    fn elements(&self) -> Vec<i64> {
        self.inner.elements().to_vec()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    /// Normalized `‖·‖_p` of the exponential sum, by quadrature.
    #[pyo3(signature = (p, tol = 1e-10))]
    fn norm(&self, py: Python<'_>, p: f64, tol: f64) -> PyResult<f64> {
        Ok(py
            .detach(|| expsums::quadrature_norm(&self.inner, p, tol))
            .map_err(to_py)?
            .value)
    }

    fn additive_energy(&self, k: u32) -> PyResult<u64> {
        expsums::additive_energy(&self.inner, k).map_err(to_py)
    }

    /// Exact `‖·‖_{2k}^{2k}` as `(numerator, denominator)`.
    fn exact_even_moment(&self, k: u32) -> PyResult<(u64, u64)> {
        let r = expsums::exact_even_moment(&self.inner, k).map_err(to_py)?;
        Ok((*r.numer(), *r.denom()))
    }

    /// Upper bound on the normalized `L1` norm from the refined inequality.
    #[pyo3(signature = (p = 4.0, q = 6.0, c = 1.0 / 3.0))]
    fn theorem_bound(&self, py: Python<'_>, p: f64, q: f64, c: f64) -> PyResult<f64> {
        Ok(py
            .detach(|| expsums::theorem_upper_bound(&self.inner, p, q, c))
            .map_err(to_py)?
            .bound)
    }
}

/// Runs every randomized suite and returns the report as JSON.
#[pyfunction]
#[pyo3(signature = (seed = 0, samples = 10_000, c = None))]
fn run_verify(py: Python<'_>, seed: u64, samples: usize, c: Option<f64>) -> PyResult<String> {
    let cfg = verify::VerifyConfig {
        seed,
        samples,
        constant_override: c,
    };
    let report = py.detach(|| verify::run_verify(&cfg)).map_err(to_py)?;
    json(&report)
}

#[pyfunction]
fn reproduce(py: Python<'_>) -> PyResult<String> {
    json(&py.detach(verify::reproduce))
}

#[pymodule]
fn pymomentgap(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySharpConstant>()?;
    m.add_class::<PyRandomVariable>()?;
    m.add_class::<PyCubeFunction>()?;
    m.add_class::<PyBiasedSum>()?;
    m.add_class::<PyExpSumSet>()?;
    m.add_function(wrap_pyfunction!(compute_c, m)?)?;
    m.add_function(wrap_pyfunction!(b_func, m)?)?;
    m.add_function(wrap_pyfunction!(objective, m)?)?;
    m.add_function(wrap_pyfunction!(c_lower_bound, m)?)?;
    m.add_function(wrap_pyfunction!(torsion_minors, m)?)?;
    m.add_function(wrap_pyfunction!(delta_integral, m)?)?;
    m.add_function(wrap_pyfunction!(remark_integral, m)?)?;
    m.add_function(wrap_pyfunction!(dax1_rhs, m)?)?;
    m.add_function(wrap_pyfunction!(ramon1_rhs, m)?)?;
    m.add_function(wrap_pyfunction!(stone_rhs, m)?)?;
    m.add_function(wrap_pyfunction!(run_verify, m)?)?;
    m.add_function(wrap_pyfunction!(reproduce, m)?)?;
    Ok(())
}
