//! Project cash-flow tables and the field-level basic events
//! (select, count, sum, divide) from which the field average is composed.

use std::collections::BTreeMap;
use std::sync::LazyLock;

use serde::Serialize;
use serde_json::Value as Json;

use crate::events::{seq, Event, EventSpace, ExecContext};
use crate::expr::{ArgKind, FunctionDef, FunctionTable, Value};
use crate::status::{CalcError, CalcResult, Status};

/// Current project document format version.
pub const PROJECT_FORMAT_VERSION: u32 = 1;

pub const UNIT_KEY: &str = "currency_unit";
pub const DEFAULT_UNIT: &str = "10^4 CNY, constant prices";

/// Period-indexed monetary estimates of one project. Period 0 is the first
/// construction year.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CashFlowTable {
    version: u32,
    project_name: String,
    periods: usize,
    fields: BTreeMap<String, Vec<f64>>,
    metadata: BTreeMap<String, String>,
}

impl CashFlowTable {
    pub fn new<I, S>(project_name: &str, periods: usize, fields: I) -> CalcResult<Self>
    where
        I: IntoIterator<Item = (S, Vec<f64>)>,
        S: Into<String>,
    {
        let mut table = Self::empty(project_name);
        table.periods = periods;
        for (name, values) in fields {
            let name = name.into();
            validate_field_name(&name)?;
            if values.len() != periods {
                return Err(ragged(&name, values.len(), periods));
            }
            if let Some(t) = values.iter().position(|v| !v.is_finite()) {
                return Err(CalcError::type_error(format!(
                    "field `{name}`, period {t}: value is not a finite number"
                )));
            }
            if table.fields.insert(name.clone(), values).is_some() {
                return Err(CalcError::syntax(format!("field `{name}` is defined twice")));
            }
        }
        Ok(table)
    }

    /// A table with no periods and no fields.
    pub fn empty(project_name: &str) -> Self {
        let mut metadata = BTreeMap::new();
        metadata.insert(UNIT_KEY.to_string(), DEFAULT_UNIT.to_string());
        CashFlowTable {
            version: PROJECT_FORMAT_VERSION,
            project_name: project_name.to_string(),
            periods: 0,
            fields: BTreeMap::new(),
            metadata,
        }
    }

    pub fn project_name(&self) -> &str {
        &self.project_name
    }

    pub fn periods(&self) -> usize {
        self.periods
    }

    pub fn field(&self, name: &str) -> Option<&[f64]> {
        self.fields.get(name).map(Vec::as_slice)
    }

    pub fn field_names(&self) -> impl Iterator<Item = &str> {
        self.fields.keys().map(String::as_str)
    }

    pub fn metadata(&self) -> &BTreeMap<String, String> {
        &self.metadata
    }

    pub fn set_metadata(&mut self, key: &str, value: &str) {
        self.metadata.insert(key.to_string(), value.to_string());
    }

    /// Copy of the table with every value of `name` multiplied by `factor`.
    pub fn with_scaled_field(&self, name: &str, factor: f64) -> CalcResult<Self> {
        let mut scaled = self.clone();
        let values = scaled
            .fields
            .get_mut(name)
            .ok_or_else(|| CalcError::field_not_found(name))?;
        for v in values.iter_mut() {
            *v *= factor;
        }
        Ok(scaled)
    }

    /// Canonical UTF-8 document: stable key order, two-space indent, trailing newline.
    pub fn to_canonical_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("table serializes");
        out.push('\n');
        out
    }
}

fn validate_field_name(name: &str) -> CalcResult<()> {
    if name.trim().is_empty() {
        return Err(CalcError::syntax("field names must be non-empty"));
    }
    Ok(())
}

fn ragged(name: &str, len: usize, periods: usize) -> CalcError {
    CalcError::type_error(format!(
        "field `{name}` has {len} value(s) but the project has {periods} period(s)"
    ))
}

/// Parses and validates a project document.
pub fn load_table(document: &str) -> CalcResult<CashFlowTable> {
    if document.trim().is_empty() {
        return Err(CalcError::syntax("project document is empty"));
    }
    let root: Json = serde_json::from_str(document)
        .map_err(|e| CalcError::syntax(format!("project document is not valid JSON: {e}")))?;
    let obj = root
        .as_object()
        .ok_or_else(|| CalcError::syntax("project document must be a JSON object"))?;

    if let Some(version) = obj.get("version") {
        if version.as_u64() != Some(u64::from(PROJECT_FORMAT_VERSION)) {
            return Err(CalcError::syntax(format!(
                "unsupported project format version {version}"
            )));
        }
    }
    let project_name = obj
        .get("project_name")
        .and_then(Json::as_str)
        .ok_or_else(|| CalcError::syntax("`project_name` must be a string"))?;
    let periods = obj
        .get("periods")
        .and_then(Json::as_u64)
        .ok_or_else(|| CalcError::syntax("`periods` must be a non-negative integer"))?
        as usize;
    let fields_json = obj
        .get("fields")
        .and_then(Json::as_object)
        .ok_or_else(|| CalcError::syntax("`fields` must be an object of arrays"))?;

    let mut fields = Vec::with_capacity(fields_json.len());
    for (name, cells) in fields_json {
        validate_field_name(name)?;
        let cells = cells.as_array().ok_or_else(|| {
            CalcError::type_error(format!("field `{name}` must be an array of numbers"))
        })?;
        let mut values = Vec::with_capacity(cells.len());
        for (t, cell) in cells.iter().enumerate() {
            let v = cell.as_f64().ok_or_else(|| {
                CalcError::type_error(format!(
                    "field `{name}`, period {t}: `{cell}` is not a number"
                ))
            })?;
            values.push(v);
        }
        if values.len() != periods {
            return Err(ragged(name, values.len(), periods));
        }
        fields.push((name.clone(), values));
    }

    let mut table = CashFlowTable::new(project_name, periods, fields)?;
    if let Some(meta) = obj.get("metadata") {
        let meta = meta
            .as_object()
            .ok_or_else(|| CalcError::syntax("`metadata` must be an object"))?;
        for (key, value) in meta {
            let value = value.as_str().ok_or_else(|| {
                CalcError::syntax(format!("metadata `{key}` must be a string"))
            })?;
            table.set_metadata(key, value);
        }
    }
    Ok(table)
}

/// Imports comma-separated text: a header row of field names, then one row per period.
pub fn load_csv(text: &str, project_name: &str) -> CalcResult<CashFlowTable> {
    if text.trim().is_empty() {
        return Err(CalcError::syntax("tabular document is empty"));
    }
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| CalcError::syntax(format!("cannot read header row: {e}")))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); headers.len()];
    for (row_idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CalcError::syntax(format!("row {}: {e}", row_idx + 2)))?;
        for (col, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| {
                CalcError::type_error(format!(
                    "row {}, column `{}`: `{cell}` is not a number",
                    row_idx + 2,
                    headers[col]
                ))
            })?;
            columns[col].push(v);
        }
    }
    let periods = columns.first().map_or(0, Vec::len);
    CashFlowTable::new(project_name, periods, headers.into_iter().zip(columns))
}

/// Selects the appointed field.
pub fn select_field<'t>(table: &'t CashFlowTable, name: &str) -> CalcResult<&'t [f64]> {
    table.field(name).ok_or_else(|| CalcError::field_not_found(name))
}

/// Number of data points; a field without data cannot be averaged.
pub fn field_count(values: &[f64]) -> CalcResult {
    if values.is_empty() {
        return Err(CalcError::new(Status::EmptyField, "the field holds no data"));
    }
    Ok(values.len() as f64)
}

/// Sum of the data points. The empty sum is 0.
pub fn field_sum(values: &[f64]) -> CalcResult {
    if let Some(t) = values.iter().position(|v| !v.is_finite()) {
        return Err(CalcError::type_error(format!(
            "period {t}: `{}` cannot be added",
            values[t]
        )));
    }
    let total: f64 = values.iter().sum();
    if !total.is_finite() {
        return Err(CalcError::type_error("the field data overflow when added"));
    }
    Ok(total)
}

/// The field-level event space and its composite average event.
pub struct FieldEvents {
    pub space: EventSpace,
    pub average: Event,
}

static FIELD_EVENTS: LazyLock<FieldEvents> = LazyLock::new(|| {
    let mut space = EventSpace::new();
    let select = space
        .define_basic("select_field", |ctx: &mut ExecContext<'_>| {
            let name = ctx
                .field
                .clone()
                .ok_or_else(|| CalcError::new(Status::FieldNotFound, "no field was appointed"))?;
            ctx.selection = select_field(ctx.table, &name)?.to_vec();
            Ok(())
        })
        .expect("fresh space");
    let count = space
        .define_basic("count_field", |ctx: &mut ExecContext<'_>| {
            let n = field_count(&ctx.selection)?;
            ctx.bindings.insert("count".into(), n);
            Ok(())
        })
        .expect("fresh space");
    let sum = space
        .define_basic("sum_field", |ctx: &mut ExecContext<'_>| {
            let s = field_sum(&ctx.selection)?;
            ctx.bindings.insert("sum".into(), s);
            ctx.accumulator = s;
            Ok(())
        })
        .expect("fresh space");
    let divide = space
        .define_basic("divide", |ctx: &mut ExecContext<'_>| {
            let count = ctx.binding("count")?;
            if count == 0.0 {
                return Err(CalcError::divide_by_zero("cannot divide the sum by a zero count"));
            }
            ctx.accumulator = ctx.binding("sum")? / count;
            Ok(())
        })
        .expect("fresh space");
    let body = seq(&select, &seq(&count, &seq(&sum, &divide).unwrap()).unwrap()).unwrap();
    let average = space
        .define_composite("field_average", &body)
        .expect("fresh space");
    FieldEvents { space, average }
});

pub fn field_events() -> &'static FieldEvents {
    &FIELD_EVENTS
}

/// Mean of a field, run as the composite event select + count + sum + divide.
pub fn field_average(table: &CashFlowTable, name: &str) -> CalcResult {
    let events = field_events();
    let mut ctx = ExecContext::new(table).with_field(name);
    events.space.execute(&events.average, &mut ctx)
}

const SERIES_FIELD: &str = "series";

fn average_fn(args: &[Value]) -> CalcResult {
    let values = args[0].as_series("field_average")?;
    let table = CashFlowTable::new("argument", values.len(), [(SERIES_FIELD, values.to_vec())])?;
    field_average(&table, SERIES_FIELD)
}

pub(crate) fn register_functions(table: &mut FunctionTable) -> CalcResult<()> {
    table.register(FunctionDef::new(
        "field_average",
        &[ArgKind::Series],
        "arithmetic mean of a field",
        average_fn,
    ))
}
