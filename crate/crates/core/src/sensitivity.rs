//! What-if sweeps: re-evaluate a command while one parameter is scaled by
//! `(1 + delta)` for each relative delta.

use serde::{Deserialize, Serialize, Serializer};

use crate::format::display_number;
use crate::project::CashFlowTable;
use crate::registry::{Binding, Bindings, ParamKind, Snapshot};
use crate::status::{CalcError, CalcResult, Status};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub method: String,
    #[serde(default)]
    pub bindings: Bindings,
    pub vary: String,
    pub deltas: Vec<f64>,
}

/// How the varied parameter is perturbed, fixed by its declared kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleMode {
    /// The number itself is multiplied.
    Multiply,
    /// Every period value of the bound field is multiplied.
    ScaleField,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub delta: f64,
    /// The varied number, or the total of the scaled field.
    pub varied: Option<f64>,
    pub result: CalcResult,
}

impl Serialize for SweepRow {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Wire<'a> {
            delta: f64,
            varied: Option<f64>,
            status: Status,
            value: Option<f64>,
            detail: Option<&'a str>,
        }
        let (status, value, detail) = match &self.result {
            Ok(v) => (Status::Ok, Some(*v), None),
            Err(e) => (e.status, None, Some(e.detail.as_str())),
        };
        Wire {
            delta: self.delta,
            varied: self.varied,
            status,
            value,
            detail,
        }
        .serialize(serializer)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub method: String,
    pub vary: String,
    pub scale_mode: ScaleMode,
    /// Ordered by ascending delta.
    pub rows: Vec<SweepRow>,
    pub crossover: Option<f64>,
}

impl SweepResult {
    /// The row at delta 0, when one was requested.
    pub fn base_row(&self) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.delta == 0.0)
    }

    /// Tabular export: header `delta,value,status`, one line per row.
    pub fn to_table(&self, number: impl Fn(f64) -> String) -> String {
        let mut out = String::from("delta,value,status\n");
        for row in &self.rows {
            let (value, status) = match &row.result {
                Ok(v) => (number(*v), Status::Ok),
                Err(e) => (String::new(), e.status),
            };
            out.push_str(&format!("{},{value},{status}\n", number(row.delta)));
        }
        out
    }

    pub fn to_display_table(&self) -> String {
        self.to_table(display_number)
    }
}

/// `steps` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, steps: usize) -> CalcResult<Vec<f64>> {
    if steps == 0 || !lo.is_finite() || !hi.is_finite() {
        return Err(CalcError::arity("a delta range needs finite bounds and at least one step"));
    }
    if steps == 1 {
        return Ok(vec![lo]);
    }
    // Weighted form, so symmetric ranges hit 0 exactly at the midpoint, then
    // rounded to 12 decimals so `-0.2:0.2:5` yields -0.1 rather than
    // -0.10000000000000002.
    let n = (steps - 1) as f64;
    Ok((0..steps)
        .map(|k| {
            let x = (lo * (n - k as f64) + hi * k as f64) / n;
            (x * 1e12).round() / 1e12
        })
        .collect())
}

/// Runs the sweep. Spec-level problems fail the whole call; evaluation
/// failures are recorded in their own row.
pub fn sweep(
    snapshot: &Snapshot,
    table: Option<&CashFlowTable>,
    spec: &SweepSpec,
) -> CalcResult<SweepResult> {
    let method = snapshot.validate_bindings(&spec.method, &spec.bindings)?;
    let param = method.param(&spec.vary).ok_or_else(|| {
        CalcError::arity(format!(
            "`{}` is not a parameter of {}",
            spec.vary, spec.method
        ))
    })?;
    if spec.deltas.is_empty() {
        return Err(CalcError::arity("at least one delta is required"));
    }
    if let Some(bad) = spec.deltas.iter().find(|d| !(d.is_finite() && **d > -1.0)) {
        return Err(CalcError::arity(format!("delta {bad} must be a finite number above -1")));
    }
    let mut deltas = spec.deltas.clone();
    deltas.sort_by(f64::total_cmp);

    let scale_mode = match param.kind {
        ParamKind::Number => ScaleMode::Multiply,
        ParamKind::Field => ScaleMode::ScaleField,
    };
    let base = &spec.bindings[&spec.vary];

    let rows = deltas
        .into_iter()
        .map(|delta| {
            let factor = 1.0 + delta;
            let (varied, result) = match base {
                Binding::Number(v) => {
                    let scaled = v * factor;
                    let mut bindings = spec.bindings.clone();
                    bindings.insert(spec.vary.clone(), Binding::Number(scaled));
                    (Some(scaled), snapshot.invoke(&spec.method, &bindings, table))
                }
                Binding::Field(field) => {
                    let scaled = table
                        .ok_or_else(|| {
                            CalcError::new(
                                Status::FieldNotFound,
                                format!("field `{field}` requested but no project is loaded"),
                            )
                        })
                        .and_then(|t| t.with_scaled_field(field, factor));
                    match scaled {
                        Ok(t) => {
                            let total = t.field(field).map(|vals| vals.iter().sum());
                            (total, snapshot.invoke(&spec.method, &spec.bindings, Some(&t)))
                        }
                        Err(e) => (None, Err(e)),
                    }
                }
            };
            SweepRow {
                delta,
                varied,
                result,
            }
        })
        .collect::<Vec<_>>();

    let mut result = SweepResult {
        method: spec.method.clone(),
        vary: spec.vary.clone(),
        scale_mode,
        rows,
        crossover: None,
    };
    result.crossover = crossover_estimate(&result);
    Ok(result)
}

/// Delta at which the indicator crosses zero, linearly interpolated between
/// consecutive successful rows.
pub fn crossover_estimate(result: &SweepResult) -> Option<f64> {
    let points: Vec<(f64, f64)> = result
        .rows
        .iter()
        .filter_map(|r| r.result.as_ref().ok().map(|v| (r.delta, *v)))
        .collect();
    if points.len() < 2 {
        return None;
    }
    for pair in points.windows(2) {
        let (d0, v0) = pair[0];
        let (d1, v1) = pair[1];
        if v0 == 0.0 {
            return Some(d0);
        }
        if v1 == 0.0 {
            return Some(d1);
        }
        if v0.signum() != v1.signum() {
            return Some(d0 + (0.0 - v0) * (d1 - d0) / (v1 - v0));
        }
    }
    None
}
