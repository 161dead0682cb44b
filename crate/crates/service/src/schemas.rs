//! JSON Schemas for every document the API accepts or returns. The files
//! under `schemas/` at the repository root are generated from these.

use serde_json::{json, Value};

use eventbase::envelope::envelope_schema;

const DRAFT: &str = "https://json-schema.org/draft/2020-12/schema";

fn param() -> Value {
    json!({
        "type": "object",
        "required": ["name", "kind"],
        "additionalProperties": false,
        "properties": {
            "name": { "type": "string", "pattern": "^[A-Za-z_][A-Za-z0-9_]*$" },
            "kind": { "enum": ["number", "field"] }
        }
    })
}

fn bindings() -> Value {
    json!({
        "type": "object",
        "description": "Parameter name to a number (number parameters) or a field name (field parameters).",
        "additionalProperties": { "type": ["number", "string"] }
    })
}

fn command_binding() -> Value {
    json!({
        "$schema": DRAFT,
        "$id": "command-binding.schema.json",
        "title": "CommandBinding",
        "type": "object",
        "required": ["name", "caption", "params", "source", "description", "created_at", "builtin", "enabled"],
        "additionalProperties": false,
        "properties": {
            "name": { "type": "string" },
            "caption": { "type": "string", "minLength": 1 },
            "params": { "type": "array", "items": param() },
            "source": { "type": "string" },
            "description": { "type": "string" },
            "created_at": { "type": "integer", "minimum": 0, "description": "Seconds since the Unix epoch; 0 for built-ins." },
            "builtin": { "type": "boolean" },
            "enabled": { "type": "boolean" }
        }
    })
}

fn method_request() -> Value {
    json!({
        "$schema": DRAFT,
        "$id": "method-request.schema.json",
        "title": "MethodRequest",
        "description": "Body of POST /api/methods. Not idempotent: repeating a successful request fails with DuplicateName (409).",
        "type": "object",
        "required": ["name", "params", "source"],
        "additionalProperties": false,
        "properties": {
            "name": { "type": "string" },
            "params": {
                "oneOf": [
                    { "type": "string", "description": "Comma-separated `name:kind` pairs." },
                    { "type": "array", "items": param() }
                ]
            },
            "source": { "type": "string" },
            "description": { "type": "string" }
        }
    })
}

fn evaluate_request() -> Value {
    json!({
        "$schema": DRAFT,
        "$id": "evaluate-request.schema.json",
        "title": "EvaluateRequest",
        "description": "Body of POST /api/evaluate.",
        "type": "object",
        "required": ["method"],
        "additionalProperties": false,
        "properties": {
            "method": { "type": "string" },
            "project_id": { "type": ["string", "null"] },
            "bindings": bindings()
        }
    })
}

fn sweep_request() -> Value {
    json!({
        "$schema": DRAFT,
        "$id": "sweep-request.schema.json",
        "title": "SweepRequest",
        "description": "Body of POST /api/sensitivity.",
        "type": "object",
        "required": ["method", "vary", "deltas"],
        "properties": {
            "method": { "type": "string" },
            "project_id": { "type": ["string", "null"] },
            "bindings": bindings(),
            "vary": { "type": "string" },
            "deltas": {
                "type": "array",
                "minItems": 1,
                "items": { "type": "number", "exclusiveMinimum": -1 }
            }
        }
    })
}

fn sweep_result() -> Value {
    json!({
        "$schema": DRAFT,
        "$id": "sweep-result.schema.json",
        "title": "SweepResult",
        "description": "The `data` of a successful POST /api/sensitivity.",
        "type": "object",
        "required": ["method", "vary", "scale_mode", "rows", "crossover"],
        "additionalProperties": false,
        "properties": {
            "method": { "type": "string" },
            "vary": { "type": "string" },
            "scale_mode": { "enum": ["multiply", "scale_field"] },
            "crossover": { "type": ["number", "null"] },
            "rows": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["delta", "varied", "status", "value", "detail"],
                    "additionalProperties": false,
                    "properties": {
                        "delta": { "type": "number" },
                        "varied": { "type": ["number", "null"] },
                        "status": { "enum": eventbase::envelope::status_vocabulary() },
                        "value": { "type": ["number", "null"] },
                        "detail": { "type": ["string", "null"] }
                    }
                }
            }
        }
    })
}

fn project() -> Value {
    json!({
        "$schema": DRAFT,
        "$id": "project.schema.json",
        "title": "Project",
        "description": "Body of POST /api/projects and response of GET /api/projects/{id}. Every field holds exactly `periods` numbers.",
        "type": "object",
        "required": ["project_name", "periods", "fields"],
        "properties": {
            "version": { "const": 1 },
            "project_name": { "type": "string" },
            "periods": { "type": "integer", "minimum": 0 },
            "fields": {
                "type": "object",
                "additionalProperties": { "type": "array", "items": { "type": "number" } }
            },
            "metadata": { "type": "object", "additionalProperties": { "type": "string" } }
        }
    })
}

fn library() -> Value {
    json!({
        "$schema": DRAFT,
        "$id": "library.schema.json",
        "title": "LibraryFile",
        "description": "The persisted method library. `checksum` is the hex SHA-256 of the compact JSON of `methods`.",
        "type": "object",
        "required": ["version", "methods"],
        "properties": {
            "version": { "const": 1 },
            "checksum": { "type": "string" },
            "methods": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["name", "params", "source", "description", "created_at"],
                    "properties": {
                        "name": { "type": "string" },
                        "params": { "type": "array", "items": param() },
                        "source": { "type": "string" },
                        "description": { "type": "string" },
                        "created_at": { "type": "integer", "minimum": 0 }
                    }
                }
            }
        }
    })
}

/// File name and schema of every published document.
pub fn published() -> Vec<(&'static str, Value)> {
    vec![
        ("envelope.schema.json", envelope_schema()),
        ("command-binding.schema.json", command_binding()),
        ("method-request.schema.json", method_request()),
        ("evaluate-request.schema.json", evaluate_request()),
        ("sweep-request.schema.json", sweep_request()),
        ("sweep-result.schema.json", sweep_result()),
        ("project.schema.json", project()),
        ("library.schema.json", library()),
    ]
}

/// File contents: two-space indent and a trailing newline.
pub fn render(schema: &Value) -> String {
    let mut text = serde_json::to_string_pretty(schema).expect("schema serializes");
    text.push('\n');
    text
}
