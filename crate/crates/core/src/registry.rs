//! User-defined evaluation methods.
//!
//! A method is a named infix expression over declared parameters. Defining one
//! registers a command that is immediately invokable; the set of user methods
//! persists as a versioned library file. Built-in commands (`NPV`, `IRR`,
//! `IPT`, `IPR`, `field_average`) are always present and cannot be removed.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::path::Path;
use std::sync::{Arc, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::expr::{compile_with, eval_suffix, standard_functions, Env, FunctionTable, SuffixExpression, Value};
use crate::project::{select_field, CashFlowTable};
use crate::status::{CalcError, CalcResult, Status};

pub const LIBRARY_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamKind {
    Number,
    Field,
}

impl fmt::Display for ParamKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamKind::Number => f.write_str("number"),
            ParamKind::Field => f.write_str("field"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Param {
    pub name: String,
    pub kind: ParamKind,
}

impl Param {
    pub fn new(name: &str, kind: ParamKind) -> Self {
        Param {
            name: name.to_string(),
            kind,
        }
    }
}

/// Parses `"profit:number, ncf:field"`. An empty string declares no parameters.
pub fn parse_params(spec: &str) -> CalcResult<Vec<Param>> {
    spec.split(',')
        .map(str::trim)
        .filter(|item| !item.is_empty())
        .map(|item| {
            let (name, kind) = item.split_once(':').ok_or_else(|| {
                CalcError::syntax(format!("parameter `{item}` must be written name:kind"))
            })?;
            let kind = match kind.trim() {
                "number" => ParamKind::Number,
                "field" => ParamKind::Field,
                other => {
                    return Err(CalcError::syntax(format!(
                        "parameter kind `{other}` must be `number` or `field`"
                    )))
                }
            };
            Ok(Param::new(name.trim(), kind))
        })
        .collect()
}

/// Source form of a method, as stored in the library file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSource {
    pub name: String,
    pub params: Vec<Param>,
    pub source: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub created_at: u64,
}

#[derive(Debug, Clone)]
pub struct MethodDefinition {
    record: MethodSource,
    builtin: bool,
    compiled: SuffixExpression,
}

impl MethodDefinition {
    pub fn name(&self) -> &str {
        &self.record.name
    }

    pub fn params(&self) -> &[Param] {
        &self.record.params
    }

    pub fn param(&self, name: &str) -> Option<&Param> {
        self.record.params.iter().find(|p| p.name == name)
    }

    pub fn source(&self) -> &str {
        &self.record.source
    }

    pub fn description(&self) -> &str {
        &self.record.description
    }

    pub fn created_at(&self) -> u64 {
        self.record.created_at
    }

    pub fn is_builtin(&self) -> bool {
        self.builtin
    }

    pub fn compiled(&self) -> &SuffixExpression {
        &self.compiled
    }

    pub fn record(&self) -> &MethodSource {
        &self.record
    }
}

/// A registered command: the entry a menu shows for one method.
#[derive(Debug, Clone)]
pub struct CommandBinding {
    pub method: Arc<MethodDefinition>,
    pub caption: String,
    pub enabled: bool,
}

impl Serialize for CommandBinding {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Wire<'a> {
            name: &'a str,
            caption: &'a str,
            params: &'a [Param],
            source: &'a str,
            description: &'a str,
            created_at: u64,
            builtin: bool,
            enabled: bool,
        }
        let m = &self.method;
        Wire {
            name: m.name(),
            caption: &self.caption,
            params: m.params(),
            source: m.source(),
            description: m.description(),
            created_at: m.created_at(),
            builtin: m.is_builtin(),
            enabled: self.enabled,
        }
        .serialize(serializer)
    }
}

impl PartialEq for CommandBinding {
    fn eq(&self, other: &Self) -> bool {
        self.caption == other.caption
            && self.enabled == other.enabled
            && self.method.builtin == other.method.builtin
            && self.method.record == other.method.record
    }
}

/// Value supplied for one parameter: a number, or the name of a project field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Binding {
    Number(f64),
    Field(String),
}

pub type Bindings = BTreeMap<String, Binding>;

const BUILTINS: [(&str, &str, &str, &str); 5] = [
    ("NPV", "ncf:field, i:number", "NPV(ncf, i)", "net present value of a cash-flow field at rate i"),
    ("IRR", "ncf:field", "IRR(ncf)", "internal rate of return of a cash-flow field"),
    ("IPT", "ncf:field", "IPT(ncf)", "static payback period in years"),
    ("IPR", "profit:number, investment:number", "IPR(profit, investment)", "annual profit over total investment"),
    ("field_average", "values:field", "field_average(values)", "arithmetic mean of a field"),
];

fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn now_secs() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// An immutable view of the registered commands. Evaluations run against a
/// snapshot, so concurrent mutations are never observed half-applied.
#[derive(Debug, Clone)]
pub struct Snapshot {
    commands: Vec<CommandBinding>,
    functions: Arc<FunctionTable>,
}

impl Snapshot {
    fn builtins_only(functions: Arc<FunctionTable>) -> Self {
        let mut snapshot = Snapshot {
            commands: Vec::new(),
            functions,
        };
        for (name, params, source, description) in BUILTINS {
            let record = MethodSource {
                name: name.to_string(),
                params: parse_params(params).expect("built-in params parse"),
                source: source.to_string(),
                description: description.to_string(),
                created_at: 0,
            };
            let compiled = compile_with(source, snapshot.functions.clone())
                .expect("built-in sources compile");
            snapshot.push(MethodDefinition {
                record,
                builtin: true,
                compiled,
            });
        }
        snapshot
    }

    fn push(&mut self, method: MethodDefinition) -> CommandBinding {
        let binding = CommandBinding {
            caption: method.record.name.clone(),
            method: Arc::new(method),
            enabled: true,
        };
        self.commands.push(binding.clone());
        binding
    }

    /// Commands in creation order, built-ins first.
    pub fn list_commands(&self) -> &[CommandBinding] {
        &self.commands
    }

    pub fn get(&self, name: &str) -> Option<&Arc<MethodDefinition>> {
        self.commands
            .iter()
            .find(|c| c.method.name() == name)
            .map(|c| &c.method)
    }

    pub fn user_methods(&self) -> impl Iterator<Item = &MethodSource> {
        self.commands
            .iter()
            .filter(|c| !c.method.builtin)
            .map(|c| &c.method.record)
    }

    fn build(&self, record: MethodSource) -> CalcResult<MethodDefinition> {
        if !is_identifier(&record.name) {
            return Err(CalcError::syntax(format!(
                "method name `{}` must be an identifier (letters, digits, `_`)",
                record.name
            )));
        }
        if self.get(&record.name).is_some() || self.functions.is_reserved(&record.name) {
            return Err(CalcError::new(
                Status::DuplicateName,
                format!("`{}` is already defined", record.name),
            ));
        }
        let mut seen = BTreeSet::new();
        for param in &record.params {
            if !is_identifier(&param.name) || self.functions.is_reserved(&param.name) {
                return Err(CalcError::syntax(format!(
                    "`{}` cannot be used as a parameter name",
                    param.name
                )));
            }
            if !seen.insert(param.name.as_str()) {
                return Err(CalcError::syntax(format!(
                    "parameter `{}` is declared twice",
                    param.name
                )));
            }
        }
        let compiled = compile_with(&record.source, self.functions.clone())?;
        if let Some(free) = compiled.free_vars().iter().find(|v| !seen.contains(v.as_str())) {
            return Err(CalcError::unknown_symbol(format!(
                "`{free}` is neither a declared parameter nor a known function"
            )));
        }
        Ok(MethodDefinition {
            record,
            builtin: false,
            compiled,
        })
    }

    /// Checks that `bindings` cover exactly the method's parameters with the
    /// right kinds.
    pub fn validate_bindings(
        &self,
        name: &str,
        bindings: &Bindings,
    ) -> CalcResult<Arc<MethodDefinition>> {
        let method = self
            .get(name)
            .ok_or_else(|| CalcError::unknown_event(format!("no command named `{name}`")))?;
        for param in method.params() {
            match (param.kind, bindings.get(&param.name)) {
                (_, None) => {
                    return Err(CalcError::arity(format!(
                        "{name}: parameter `{}` is not bound",
                        param.name
                    )))
                }
                (ParamKind::Number, Some(Binding::Field(f))) => {
                    return Err(CalcError::type_error(format!(
                        "{name}: parameter `{}` is a number, got field `{f}`",
                        param.name
                    )))
                }
                (ParamKind::Field, Some(Binding::Number(v))) => {
                    return Err(CalcError::type_error(format!(
                        "{name}: parameter `{}` is a field, got number {v}",
                        param.name
                    )))
                }
                _ => {}
            }
        }
        if let Some(extra) = bindings.keys().find(|k| method.param(k).is_none()) {
            return Err(CalcError::arity(format!(
                "{name}: `{extra}` is not a parameter"
            )));
        }
        Ok(method.clone())
    }

    /// Evaluates a command; field parameters resolve through `table`.
    pub fn invoke(
        &self,
        name: &str,
        bindings: &Bindings,
        table: Option<&CashFlowTable>,
    ) -> CalcResult {
        let method = self.validate_bindings(name, bindings)?;
        let env = direct_env(bindings, table)?;
        eval_suffix(method.compiled(), &env)
    }

    pub fn to_library(&self) -> LibraryFile {
        LibraryFile::new(self.user_methods().cloned().collect())
    }
}

/// Persisted user methods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LibraryFile {
    pub version: u32,
    pub methods: Vec<MethodSource>,
    #[serde(default)]
    pub checksum: String,
}

impl LibraryFile {
    pub fn new(methods: Vec<MethodSource>) -> Self {
        let checksum = Self::digest(&methods);
        LibraryFile {
            version: LIBRARY_FORMAT_VERSION,
            methods,
            checksum,
        }
    }

    fn digest(methods: &[MethodSource]) -> String {
        let canonical = serde_json::to_vec(methods).expect("methods serialize");
        hex::encode(Sha256::digest(&canonical))
    }

    /// Canonical text: stable key order, two-space indent, trailing newline.
    pub fn to_text(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("library serializes");
        out.push('\n');
        out
    }

    /// Parses library text. Blank text is an empty library; a present checksum
    /// must match the methods.
    pub fn parse(text: &str) -> CalcResult<Self> {
        if text.trim().is_empty() {
            return Ok(LibraryFile::new(Vec::new()));
        }
        let file: LibraryFile = serde_json::from_str(text)
            .map_err(|e| CalcError::syntax(format!("library file is corrupt: {e}")))?;
        if file.version != LIBRARY_FORMAT_VERSION {
            return Err(CalcError::syntax(format!(
                "unsupported library format version {}",
                file.version
            )));
        }
        if !file.checksum.is_empty() && file.checksum != Self::digest(&file.methods) {
            return Err(CalcError::syntax("library checksum does not match its methods"));
        }
        Ok(file)
    }
}

/// The live command registry. Reads take a snapshot; each mutation builds a
/// new snapshot and publishes it in one step.
#[derive(Debug)]
pub struct Registry {
    current: RwLock<Arc<Snapshot>>,
}

impl Default for Registry {
    fn default() -> Self {
        Self::new()
    }
}

impl Registry {
    pub fn new() -> Self {
        Registry {
            current: RwLock::new(Arc::new(Snapshot::builtins_only(standard_functions()))),
        }
    }

    pub fn snapshot(&self) -> Arc<Snapshot> {
        self.current
            .read()
            .unwrap_or_else(|poisoned| poisoned.into_inner())
            .clone()
    }

    fn mutate<T>(&self, f: impl FnOnce(&Snapshot) -> CalcResult<(Snapshot, T)>) -> CalcResult<T> {
        let mut guard = self
            .current
            .write()
            .unwrap_or_else(|poisoned| poisoned.into_inner());
        let (next, out) = f(&guard)?;
        *guard = Arc::new(next);
        Ok(out)
    }

    pub fn list_commands(&self) -> Vec<CommandBinding> {
        self.snapshot().list_commands().to_vec()
    }

    pub fn define_method(
        &self,
        name: &str,
        params: Vec<Param>,
        source: &str,
        description: &str,
    ) -> CalcResult<CommandBinding> {
        let record = MethodSource {
            name: name.to_string(),
            params,
            source: source.to_string(),
            description: description.to_string(),
            created_at: now_secs(),
        };
        self.define_record(record)
    }

    /// Registers a method keeping the record's own timestamp.
    pub fn define_record(&self, record: MethodSource) -> CalcResult<CommandBinding> {
        self.mutate(|current| {
            let method = current.build(record)?;
            let mut next = current.clone();
            let binding = next.push(method);
            Ok((next, binding))
        })
    }

    pub fn remove_method(&self, name: &str) -> CalcResult<()> {
        self.mutate(|current| {
            let method = current
                .get(name)
                .ok_or_else(|| CalcError::unknown_event(format!("no command named `{name}`")))?;
            if method.is_builtin() {
                return Err(CalcError::new(
                    Status::BuiltInProtected,
                    format!("built-in command `{name}` cannot be removed"),
                ));
            }
            let mut next = current.clone();
            next.commands.retain(|c| c.method.name() != name);
            Ok((next, ()))
        })
    }

    pub fn invoke(
        &self,
        name: &str,
        bindings: &Bindings,
        table: Option<&CashFlowTable>,
    ) -> CalcResult {
        self.snapshot().invoke(name, bindings, table)
    }

    /// Replaces every user method with `library`, or nothing at all on error.
    pub fn load_library_file(&self, library: LibraryFile) -> CalcResult<()> {
        self.mutate(|current| {
            let mut next = Snapshot::builtins_only(current.functions.clone());
            for record in library.methods {
                let method = next.build(record)?;
                next.push(method);
            }
            Ok((next, ()))
        })
    }

    pub fn load_library_str(&self, text: &str) -> CalcResult<()> {
        self.load_library_file(LibraryFile::parse(text)?)
    }

    pub fn load_library(&self, path: &Path) -> CalcResult<()> {
        let text = fs::read_to_string(path)
            .map_err(|e| CalcError::io(format!("cannot read {}: {e}", path.display())))?;
        self.load_library_str(&text)
    }

    /// Writes the user methods to `path` via a temporary file and rename.
    pub fn save_library(&self, path: &Path) -> CalcResult<LibraryFile> {
        let library = self.snapshot().to_library();
        write_atomically(path, &library.to_text())?;
        Ok(library)
    }
}

pub fn write_atomically(path: &Path, contents: &str) -> CalcResult<()> {
    let mut tmp_name = path
        .file_name()
        .map(|n| n.to_os_string())
        .unwrap_or_default();
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    fs::write(&tmp, contents)
        .map_err(|e| CalcError::io(format!("cannot write {}: {e}", tmp.display())))?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        CalcError::io(format!("cannot replace {}: {e}", path.display()))
    })
}

/// Builds the evaluation environment for `bindings`, resolving fields through `table`.
pub fn direct_env(bindings: &Bindings, table: Option<&CashFlowTable>) -> CalcResult<Env> {
    let mut env: Env = HashMap::new();
    for (key, binding) in bindings {
        let value = match binding {
            Binding::Number(v) => Value::Num(*v),
            Binding::Field(field) => {
                let table = table.ok_or_else(|| {
                    CalcError::new(
                        Status::FieldNotFound,
                        format!("field `{field}` requested but no project is loaded"),
                    )
                })?;
                Value::Series(select_field(table, field)?.into())
            }
        };
        env.insert(key.clone(), value);
    }
    Ok(env)
}
