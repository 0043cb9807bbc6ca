//! Python bindings. Fields cross the boundary as flat lists in cell order
//! (`i + nx*j`); reports come back as plain dicts.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

use turbsolve::coeffs::{self, TruncationLevel, ViscosityModel};
use turbsolve::config::SourcePreset;
use turbsolve::fixedpoint::{self, InitK, KUpdate, PicardConfig};
use turbsolve::grid::{self, ScalarField};
use turbsolve::verify::{self, ReportOptions};
use turbsolve::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::LinearSolve { .. } | Error::FixedPoint { .. } | Error::Io(_) => {
            PyRuntimeError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn to_dict<T: Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

#[pyclass(name = "Grid", module = "turbsolve_py", from_py_object)]
#[derive(Clone, Copy)]
struct PyGrid(grid::Grid);

#[pymethods]
impl PyGrid {
    #[new]
    #[pyo3(signature = (nx, ny, lx = 1.0, ly = 1.0))]
    fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> PyResult<Self> {
        grid::Grid::new(nx, ny, lx, ly).map(Self).map_err(py_err)
    }

    #[getter]
    fn nx(&self) -> usize {
        self.0.nx()
    }

    #[getter]
    fn ny(&self) -> usize {
        self.0.ny()
    }

    #[getter]
    fn lx(&self) -> f64 {
        self.0.lx()
    }

    #[getter]
    fn ly(&self) -> f64 {
        self.0.ly()
    }

    #[getter]
    fn num_cells(&self) -> usize {
        self.0.num_cells()
    }

    /// Cell centres in cell order.
    fn centers(&self) -> Vec<(f64, f64)> {
        let g = self.0;
        (0..g.ny())
            .flat_map(|j| (0..g.nx()).map(move |i| g.center(i, j)))
            .collect()
    }

    fn gaussian(&self, x0: f64, y0: f64, sigma: f64, amplitude: f64) -> PyResult<Vec<f64>> {
        if sigma.is_nan() || sigma <= 0.0 {
            return Err(PyValueError::new_err("sigma must be positive"));
        }
        let dummy = ViscosityModel::constant(1.0, 1.0, 1.0).map_err(py_err)?;
        let f = SourcePreset::Gaussian {
            x0,
            y0,
            sigma,
            amplitude,
        }
        .sample(self.0, &dummy)
        .map_err(py_err)?;
        Ok(f.into_values())
    }

    fn __repr__(&self) -> String {
        format!(
            "Grid({}, {}, lx={}, ly={})",
            self.0.nx(),
            self.0.ny(),
            self.0.lx(),
            self.0.ly()
        )
    }
}

#[pyclass(name = "Model", module = "turbsolve_py", from_py_object)]
#[derive(Clone)]
struct PyModel(ViscosityModel);

#[pymethods]
impl PyModel {
    /// `ν = ν₁ + ν₂√s`, `a = a₁ + a₂√s`.
    #[staticmethod]
    fn physical_sqrt(nu1: f64, nu2: f64, a1: f64, a2: f64, delta: f64) -> PyResult<Self> {
        ViscosityModel::physical_sqrt(nu1, nu2, a1, a2, delta)
            .map(Self)
            .map_err(py_err)
    }

    #[staticmethod]
    fn constant(nu: f64, a: f64, delta: f64) -> PyResult<Self> {
        ViscosityModel::constant(nu, a, delta)
            .map(Self)
            .map_err(py_err)
    }

    #[getter]
    fn gamma(&self) -> Option<f64> {
        self.0.gamma()
    }

    #[getter]
    fn delta(&self) -> f64 {
        self.0.delta()
    }

    fn nu(&self, s: f64) -> PyResult<f64> {
        self.0.nu(s).map_err(py_err)
    }

    fn a(&self, s: f64) -> PyResult<f64> {
        self.0.a(s).map_err(py_err)
    }

    fn kirchhoff(&self, s: f64) -> PyResult<f64> {
        self.0.kirchhoff(s).map_err(py_err)
    }

    fn kirchhoff_inv(&self, big_s: f64) -> PyResult<f64> {
        self.0.kirchhoff_inv(big_s).map_err(py_err)
    }

    fn check_ratio_floor(&self, gamma: f64) -> PyResult<()> {
        self.0.check_ratio_floor(gamma).map_err(py_err)
    }
}

fn level(n: u64) -> PyResult<TruncationLevel> {
    TruncationLevel::new(n).map_err(py_err)
}

fn field(g: &PyGrid, values: Vec<f64>) -> PyResult<ScalarField> {
    ScalarField::new(g.0, values).map_err(py_err)
}

fn picard_config(route: &str, tol: f64, max_outer: usize, warm: bool) -> PyResult<PicardConfig> {
    let k_update = match route {
        "direct" | "chi" => KUpdate::Direct,
        "kirchhoff" => KUpdate::Kirchhoff,
        other => {
            return Err(PyValueError::new_err(format!(
                "route must be direct, kirchhoff or chi, got {other:?}"
            )))
        }
    };
    let cfg = PicardConfig {
        tol,
        max_outer,
        k_update,
        init_k: if warm { InitK::WarmStart } else { InitK::Zero },
        ..PicardConfig::default()
    };
    cfg.validate().map_err(py_err)?;
    Ok(cfg)
}

/// Solves the truncated problem; returns `{"u", "k", "report"}` plus `"chi"`
/// for the χ route.
#[pyfunction]
#[pyo3(signature = (model, grid, f, n, route = "direct", tol = 1e-10, max_outer = 500))]
#[allow(clippy::too_many_arguments)]
fn solve(
    py: Python<'_>,
    model: &PyModel,
    grid: &PyGrid,
    f: Vec<f64>,
    n: u64,
    route: &str,
    tol: f64,
    max_outer: usize,
) -> PyResult<Py<PyAny>> {
    let cfg = picard_config(route, tol, max_outer, false)?;
    let f = field(grid, f)?;
    let n = level(n)?;
    let out = pyo3::types::PyDict::new(py);
    let report = if route == "chi" {
        let s = py
            .detach(|| fixedpoint::chi_decoupled_solve(&model.0, n, &f, &cfg))
            .map_err(py_err)?;
        out.set_item("u", s.u.values())?;
        out.set_item("k", s.k.values())?;
        out.set_item("chi", s.chi.values())?;
        s.report
    } else {
        let s = py
            .detach(|| fixedpoint::picard_solve(&model.0, n, &f, &cfg))
            .map_err(py_err)?;
        out.set_item("u", s.u.values())?;
        out.set_item("k", s.k.values())?;
        s.report
    };
    out.set_item("report", to_dict(py, &report)?)?;
    Ok(out.into_any().unbind())
}

/// Picard sweep over ascending `n_list`; one dict per level.
#[pyfunction]
#[pyo3(signature = (model, grid, f, n_list, route = "direct", warm_start = true, tol = 1e-10))]
#[allow(clippy::too_many_arguments)]
fn n_sweep(
    py: Python<'_>,
    model: &PyModel,
    grid: &PyGrid,
    f: Vec<f64>,
    n_list: Vec<u64>,
    route: &str,
    warm_start: bool,
    tol: f64,
) -> PyResult<Vec<Py<PyAny>>> {
    if route == "chi" {
        return Err(PyValueError::new_err(
            "n_sweep runs the Picard routes; call solve for chi",
        ));
    }
    let cfg = picard_config(route, tol, PicardConfig::default().max_outer, warm_start)?;
    let f = field(grid, f)?;
    let levels = n_list
        .into_iter()
        .map(level)
        .collect::<PyResult<Vec<_>>>()?;
    let entries = py
        .detach(|| fixedpoint::n_sweep(&model.0, &f, &levels, &cfg))
        .map_err(py_err)?;
    entries
        .into_iter()
        .map(|e| {
            let d = pyo3::types::PyDict::new(py);
            d.set_item("n", e.n.get())?;
            d.set_item("error", e.error)?;
            d.set_item("diff_u", e.diff_u)?;
            d.set_item("diff_k", e.diff_k)?;
            if let Some(s) = e.solution {
                d.set_item("u", s.u.values())?;
                d.set_item("k", s.k.values())?;
                d.set_item("report", to_dict(py, &s.report)?)?;
            }
            Ok(d.into_any().unbind())
        })
        .collect()
}

/// Every certificate for a `(u, k)` pair at level `n`.
#[pyfunction]
#[pyo3(signature = (model, grid, u, k, f, n, p = 1.4, r = 2.0))]
#[allow(clippy::too_many_arguments)]
fn full_report(
    py: Python<'_>,
    model: &PyModel,
    grid: &PyGrid,
    u: Vec<f64>,
    k: Vec<f64>,
    f: Vec<f64>,
    n: u64,
    p: f64,
    r: f64,
) -> PyResult<Py<PyAny>> {
    let opts = ReportOptions {
        p,
        r,
        ..ReportOptions::default()
    };
    let (u, k, f) = (field(grid, u)?, field(grid, k)?, field(grid, f)?);
    let rep = verify::full_report(&u, &k, &f, &model.0, level(n)?, &opts).map_err(py_err)?;
    to_dict(py, &rep)
}

/// `(ρ, β)` for the integrability exponent `r`; `ρ` is `inf` from `r = 3` on.
#[pyfunction]
fn stampacchia_exponents(r: f64) -> PyResult<(f64, f64)> {
    let e = verify::stampacchia_exponents(r).map_err(py_err)?;
    Ok((e.rho, e.beta))
}

#[pyfunction]
fn truncate(t: f64, n: u64) -> PyResult<f64> {
    Ok(coeffs::truncate(t, level(n)?))
}

#[pymodule]
fn turbsolve_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGrid>()?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(n_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(full_report, m)?)?;
    m.add_function(wrap_pyfunction!(stampacchia_exponents, m)?)?;
    m.add_function(wrap_pyfunction!(truncate, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn routes_map_to_updates() {
        assert_eq!(
            picard_config("kirchhoff", 1e-10, 10, false)
                .unwrap()
                .k_update,
            KUpdate::Kirchhoff
        );
        assert_eq!(
            picard_config("chi", 1e-10, 10, true).unwrap().init_k,
            InitK::WarmStart
        );
        assert!(picard_config("newton", 1e-10, 10, false).is_err());
        assert!(picard_config("direct", -1.0, 10, false).is_err());
    }

    #[test]
    fn field_length_is_checked() {
        let g = PyGrid::new(3, 2, 1.0, 1.0).unwrap();
        assert!(field(&g, vec![0.0; 6]).is_ok());
        assert!(field(&g, vec![0.0; 5]).is_err());
        assert_eq!(g.centers().len(), 6);
        assert_eq!(g.centers()[1], g.0.center(1, 0));
    }
}
