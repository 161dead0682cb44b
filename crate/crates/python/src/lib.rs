//! Python bindings: expressions, financial functions, projects and the
//! method registry. Failures raise `eventbase.CalcError(status, detail)`.

use std::path::PathBuf;
use std::sync::Arc;

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use engine::api;
use engine::envelope::status_vocabulary;
use engine::expr::{self, Env, SuffixExpression, Value};
use engine::finance::{self, DiscountRate, IrrConfig};
use engine::project::{self as proj, CashFlowTable};
use engine::registry::{parse_params, Binding, Bindings, Registry as CoreRegistry};
use engine::sensitivity::{sweep as core_sweep, SweepSpec};
use engine::CalcError as CoreError;

create_exception!(eventbase, CalcError, PyException, "Evaluation failure carrying (status, detail).");

fn raise(err: CoreError) -> PyErr {
    CalcError::new_err((err.status.as_str(), err.detail))
}

fn json_to_py<'py>(py: Python<'py>, value: &serde_json::Value) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (value.to_string(),))
}

fn env_from(env: &Bound<'_, PyDict>) -> PyResult<Env> {
    let mut out = Env::new();
    for (key, value) in env.iter() {
        let name: String = key.extract()?;
        let value = match value.extract::<f64>() {
            Ok(v) => Value::Num(v),
            Err(_) => Value::Series(Arc::from(value.extract::<Vec<f64>>()?)),
        };
        out.insert(name, value);
    }
    Ok(out)
}

fn bindings_from(bindings: Option<&Bound<'_, PyDict>>) -> PyResult<Bindings> {
    let mut out = Bindings::new();
    if let Some(bindings) = bindings {
        for (key, value) in bindings.iter() {
            let binding = match value.extract::<f64>() {
                Ok(v) => Binding::Number(v),
                Err(_) => Binding::Field(value.extract::<String>()?),
            };
            out.insert(key.extract()?, binding);
        }
    }
    Ok(out)
}

/// Evaluates an infix expression. `env` maps names to numbers or lists.
#[pyfunction]
#[pyo3(signature = (source, env=None))]
fn evaluate(source: &str, env: Option<&Bound<'_, PyDict>>) -> PyResult<f64> {
    let env = env.map(env_from).transpose()?.unwrap_or_default();
    expr::evaluate(source, &env).map_err(raise)
}

/// A compiled expression in suffix form.
#[pyclass(frozen, module = "eventbase")]
struct Expression {
    inner: SuffixExpression,
}

#[pymethods]
impl Expression {
    #[new]
    fn new(source: &str) -> PyResult<Self> {
        expr::compile(source).map(|inner| Expression { inner }).map_err(raise)
    }

    /// Suffix tokens as text.
    fn suffix(&self) -> Vec<String> {
        self.inner.items().iter().map(ToString::to_string).collect()
    }

    fn free_vars(&self) -> Vec<String> {
        self.inner.free_vars().iter().cloned().collect()
    }

    #[pyo3(signature = (env=None))]
    fn evaluate(&self, env: Option<&Bound<'_, PyDict>>) -> PyResult<f64> {
        let env = env.map(env_from).transpose()?.unwrap_or_default();
        expr::eval_suffix(&self.inner, &env).map_err(raise)
    }

    fn __repr__(&self) -> String {
        format!("Expression({:?})", self.suffix().join(" "))
    }
}

#[pyfunction]
fn compile(source: &str) -> PyResult<Expression> {
    Expression::new(source)
}

#[pyfunction]
fn npv(ncf: Vec<f64>, i: f64) -> PyResult<f64> {
    let rate = DiscountRate::new(i).map_err(raise)?;
    finance::npv(&ncf, rate).map_err(raise)
}

#[pyfunction]
fn irr(ncf: Vec<f64>) -> PyResult<f64> {
    finance::irr(&ncf, &IrrConfig::default())
        .map(|s| s.rate)
        .map_err(raise)
}

#[pyfunction]
fn payback(ncf: Vec<f64>) -> PyResult<f64> {
    finance::payback_static(&ncf).map_err(raise)
}

#[pyfunction]
fn ipr(profit: f64, investment: f64) -> PyResult<f64> {
    finance::ipr(profit, investment).map_err(raise)
}

#[pyfunction]
fn statuses() -> Vec<&'static str> {
    status_vocabulary()
}

/// A project's cash-flow table.
#[pyclass(frozen, module = "eventbase")]
struct Project {
    inner: CashFlowTable,
}

#[pymethods]
impl Project {
    /// `fields` maps field names to equal-length lists of numbers.
    #[new]
    fn new(name: &str, fields: &Bound<'_, PyDict>) -> PyResult<Self> {
        let mut columns = Vec::new();
        for (key, value) in fields.iter() {
            columns.push((key.extract::<String>()?, value.extract::<Vec<f64>>()?));
        }
        let periods = columns.first().map_or(0, |(_, v)| v.len());
        CashFlowTable::new(name, periods, columns)
            .map(|inner| Project { inner })
            .map_err(raise)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        proj::load_table(text).map(|inner| Project { inner }).map_err(raise)
    }

    #[staticmethod]
    #[pyo3(signature = (text, name="project"))]
    fn from_csv(text: &str, name: &str) -> PyResult<Self> {
        proj::load_csv(text, name).map(|inner| Project { inner }).map_err(raise)
    }

    #[getter]
    fn name(&self) -> &str {
        self.inner.project_name()
    }

    #[getter]
    fn periods(&self) -> usize {
        self.inner.periods()
    }

    fn fields(&self) -> Vec<String> {
        self.inner.field_names().map(str::to_string).collect()
    }

    fn field(&self, name: &str) -> PyResult<Vec<f64>> {
        proj::select_field(&self.inner, name).map(<[f64]>::to_vec).map_err(raise)
    }

    fn field_average(&self, name: &str) -> PyResult<f64> {
        proj::field_average(&self.inner, name).map_err(raise)
    }

    fn to_json(&self) -> String {
        self.inner.to_canonical_json()
    }

    fn project_id(&self) -> String {
        api::project_id(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!("Project({:?}, periods={})", self.inner.project_name(), self.inner.periods())
    }
}

/// Built-in and user-defined evaluation methods.
#[pyclass(frozen, module = "eventbase")]
struct Registry {
    inner: CoreRegistry,
}

#[pymethods]
impl Registry {
    #[new]
    fn new() -> Self {
        Registry { inner: CoreRegistry::new() }
    }

    /// `params` is `"profit:number, ncf:field"`. Returns the command binding.
    #[pyo3(signature = (name, params, source, description=""))]
    fn define<'py>(
        &self,
        py: Python<'py>,
        name: &str,
        params: &str,
        source: &str,
        description: &str,
    ) -> PyResult<Bound<'py, PyAny>> {
        let params = parse_params(params).map_err(raise)?;
        let binding = self
            .inner
            .define_method(name, params, source, description)
            .map_err(raise)?;
        json_to_py(py, &serde_json::json!(binding))
    }

    fn remove(&self, name: &str) -> PyResult<()> {
        self.inner.remove_method(name).map_err(raise)
    }

    /// Command bindings as dictionaries, built-ins first.
    fn list<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        json_to_py(py, &serde_json::json!(self.inner.list_commands()))
    }

    /// Numbers bind number parameters; strings name project fields.
    #[pyo3(signature = (name, bindings=None, project=None))]
    fn invoke(
        &self,
        name: &str,
        bindings: Option<&Bound<'_, PyDict>>,
        project: Option<&Project>,
    ) -> PyResult<f64> {
        let bindings = bindings_from(bindings)?;
        self.inner
            .invoke(name, &bindings, project.map(|p| &p.inner))
            .map_err(raise)
    }

    /// Sweeps `vary` over relative deltas. Row failures stay in their rows.
    #[pyo3(signature = (method, vary, deltas, bindings=None, project=None))]
    fn sweep<'py>(
        &self,
        py: Python<'py>,
        method: &str,
        vary: &str,
        deltas: Vec<f64>,
        bindings: Option<&Bound<'_, PyDict>>,
        project: Option<&Project>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let spec = SweepSpec {
            method: method.to_string(),
            bindings: bindings_from(bindings)?,
            vary: vary.to_string(),
            deltas,
        };
        let result = core_sweep(&self.inner.snapshot(), project.map(|p| &p.inner), &spec)
            .map_err(raise)?;
        json_to_py(py, &serde_json::json!(result))
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save_library(&path).map(|_| ()).map_err(raise)
    }

    fn load(&self, path: PathBuf) -> PyResult<()> {
        self.inner.load_library(&path).map_err(raise)
    }

    fn library_text(&self) -> String {
        self.inner.snapshot().to_library().to_text()
    }

    fn load_text(&self, text: &str) -> PyResult<()> {
        self.inner.load_library_str(text).map_err(raise)
    }
}

#[pymodule]
fn eventbase(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("CalcError", m.py().get_type::<CalcError>())?;
    m.add_class::<Expression>()?;
    m.add_class::<Project>()?;
    m.add_class::<Registry>()?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(compile, m)?)?;
    m.add_function(wrap_pyfunction!(npv, m)?)?;
    m.add_function(wrap_pyfunction!(irr, m)?)?;
    m.add_function(wrap_pyfunction!(payback, m)?)?;
    m.add_function(wrap_pyfunction!(ipr, m)?)?;
    m.add_function(wrap_pyfunction!(statuses, m)?)?;
    Ok(())
}
