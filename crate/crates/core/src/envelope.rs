//! The response envelope shared by the HTTP service and the CLI's machine
//! output, so both surfaces emit byte-identical documents.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value as Json};

use crate::status::{CalcError, CalcResult, Status};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub status: Status,
    pub value: Option<f64>,
    pub detail: Option<String>,
    #[serde(default)]
    pub data: Json,
}

impl Envelope {
    pub fn from_result(result: &CalcResult) -> Self {
        match result {
            Ok(v) => Envelope {
                status: Status::Ok,
                value: Some(*v),
                detail: None,
                data: Json::Null,
            },
            Err(e) => Self::error(e),
        }
    }

    pub fn error(err: &CalcError) -> Self {
        Envelope {
            status: err.status,
            value: None,
            detail: Some(err.detail.clone()),
            data: Json::Null,
        }
    }

    pub fn ok_data(data: Json) -> Self {
        Envelope {
            status: Status::Ok,
            value: None,
            detail: None,
            data,
        }
    }

    /// Compact JSON, one document per line.
    pub fn to_machine(&self) -> String {
        serde_json::to_string(self).expect("envelope serializes")
    }
}

/// Every status name the envelope may carry, generated from [`Status::ALL`].
pub fn status_vocabulary() -> Vec<&'static str> {
    Status::ALL.iter().map(|s| s.as_str()).collect()
}

/// JSON Schema of [`Envelope`].
pub fn envelope_schema() -> Json {
    json!({
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "$id": "envelope.schema.json",
        "title": "Envelope",
        "description": "Every API response and every machine-format CLI result.",
        "type": "object",
        "required": ["status", "value", "detail", "data"],
        "additionalProperties": false,
        "properties": {
            "status": { "enum": status_vocabulary() },
            "value": { "type": ["number", "null"] },
            "detail": { "type": ["string", "null"] },
            "data": {}
        }
    })
}
