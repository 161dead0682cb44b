use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::opcode::OpCode;
use crate::status::{CalcError, CalcResult, Status};

/// A runtime value on the machine stack.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Num(f64),
    /// A period-indexed series, usually a project field.
    Series(Arc<[f64]>),
}

impl Value {
    pub fn kind(&self) -> ArgKind {
        match self {
            Value::Num(_) => ArgKind::Number,
            Value::Series(_) => ArgKind::Series,
        }
    }

    pub fn as_num(&self, context: &str) -> CalcResult {
        match self {
            Value::Num(v) => Ok(*v),
            Value::Series(_) => Err(CalcError::type_error(format!(
                "{context} expects a number but received a field series"
            ))),
        }
    }

    pub fn as_series(&self, context: &str) -> CalcResult<&[f64]> {
        match self {
            Value::Series(values) => Ok(values),
            Value::Num(_) => Err(CalcError::type_error(format!(
                "{context} expects a field series but received a number"
            ))),
        }
    }
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Num(v)
    }
}

impl From<Vec<f64>> for Value {
    fn from(v: Vec<f64>) -> Self {
        Value::Series(v.into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArgKind {
    Number,
    Series,
}

impl fmt::Display for ArgKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ArgKind::Number => f.write_str("number"),
            ArgKind::Series => f.write_str("series"),
        }
    }
}

pub type NativeFn = fn(&[Value]) -> CalcResult;

/// A named function callable from expressions, e.g. `NPV(ncf, 12%)`.
#[derive(Clone)]
pub struct FunctionDef {
    pub name: String,
    pub args: Vec<ArgKind>,
    pub summary: String,
    pub call: NativeFn,
}

impl fmt::Debug for FunctionDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FunctionDef")
            .field("name", &self.name)
            .field("args", &self.args)
            .finish_non_exhaustive()
    }
}

impl FunctionDef {
    pub fn new(name: &str, args: &[ArgKind], summary: &str, call: NativeFn) -> Self {
        FunctionDef {
            name: name.to_string(),
            args: args.to_vec(),
            summary: summary.to_string(),
            call,
        }
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    pub fn invoke(&self, args: &[Value]) -> CalcResult {
        if args.len() != self.args.len() {
            return Err(CalcError::arity(format!(
                "{} takes {} argument(s), got {}",
                self.name,
                self.args.len(),
                args.len()
            )));
        }
        for (pos, (arg, want)) in args.iter().zip(&self.args).enumerate() {
            if arg.kind() != *want {
                return Err(CalcError::type_error(format!(
                    "argument {} of {} must be a {want}, got a {}",
                    pos + 1,
                    self.name,
                    arg.kind()
                )));
            }
        }
        (self.call)(args)
    }
}

/// Registered functions, looked up by exact (case-sensitive) name.
#[derive(Debug, Clone, Default)]
pub struct FunctionTable {
    defs: BTreeMap<String, FunctionDef>,
}

impl FunctionTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, def: FunctionDef) -> CalcResult<()> {
        if OpCode::from_function_name(&def.name).is_some() || self.defs.contains_key(&def.name) {
            return Err(CalcError::new(
                Status::DuplicateName,
                format!("function `{}` is already defined", def.name),
            ));
        }
        self.defs.insert(def.name.clone(), def);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&FunctionDef> {
        self.defs.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.defs.contains_key(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = &FunctionDef> {
        self.defs.values()
    }

    /// True when `name` is taken by a registered function or a table opcode.
    pub fn is_reserved(&self, name: &str) -> bool {
        self.contains(name) || OpCode::from_function_name(name).is_some()
    }
}
