//! Request documents and envelope builders shared by every front end. The CLI
//! and the HTTP service both go through these functions, which is what keeps
//! their machine output identical.

use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::envelope::Envelope;
use crate::project::CashFlowTable;
use crate::registry::{parse_params, Bindings, Param, Registry, Snapshot};
use crate::sensitivity::{sweep, SweepSpec};
use crate::status::CalcResult;

/// Parameters as `"a:number, b:field"` or as a list of `{name, kind}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamList {
    Text(String),
    List(Vec<Param>),
}

impl ParamList {
    pub fn resolve(&self) -> CalcResult<Vec<Param>> {
        match self {
            ParamList::Text(text) => parse_params(text),
            ParamList::List(list) => Ok(list.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodRequest {
    pub name: String,
    pub params: ParamList,
    pub source: String,
    #[serde(default)]
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluateRequest {
    pub method: String,
    #[serde(default)]
    pub project_id: Option<String>,
    #[serde(default)]
    pub bindings: Bindings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRequest {
    #[serde(default)]
    pub project_id: Option<String>,
    #[serde(flatten)]
    pub spec: SweepSpec,
}

/// Content address of a project: the first 16 hex digits of the SHA-256 of
/// its canonical document.
pub fn project_id(table: &CashFlowTable) -> String {
    let digest = Sha256::digest(table.to_canonical_json().as_bytes());
    hex::encode(digest)[..16].to_string()
}

pub fn commands_envelope(snapshot: &Snapshot) -> Envelope {
    Envelope::ok_data(json!(snapshot.list_commands()))
}

pub fn define_method(registry: &Registry, request: &MethodRequest) -> Envelope {
    let defined = request.params.resolve().and_then(|params| {
        registry.define_method(&request.name, params, &request.source, &request.description)
    });
    match defined {
        Ok(binding) => Envelope::ok_data(json!(binding)),
        Err(e) => Envelope::error(&e),
    }
}

pub fn remove_method(registry: &Registry, name: &str) -> Envelope {
    match registry.remove_method(name) {
        Ok(()) => Envelope::ok_data(json!({ "removed": name })),
        Err(e) => Envelope::error(&e),
    }
}

pub fn evaluate(
    snapshot: &Snapshot,
    method: &str,
    bindings: &Bindings,
    table: Option<&CashFlowTable>,
) -> Envelope {
    Envelope::from_result(&snapshot.invoke(method, bindings, table))
}

pub fn sensitivity(
    snapshot: &Snapshot,
    spec: &SweepSpec,
    table: Option<&CashFlowTable>,
) -> Envelope {
    match sweep(snapshot, table, spec) {
        Ok(result) => Envelope::ok_data(json!(result)),
        Err(e) => Envelope::error(&e),
    }
}

pub fn project_stored(id: &str) -> Envelope {
    Envelope::ok_data(json!({ "project_id": id }))
}
