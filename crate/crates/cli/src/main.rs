//! `eventbase`: load projects, manage the method library, evaluate and sweep.
//!
//! Exit codes: 0 when the result is `ok`, 1 for any evaluation or registry
//! status, 2 for usage errors.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};

use eventbase::api;
use eventbase::envelope::Envelope;
use eventbase::format::display_number;
use eventbase::project::{load_csv, load_table, CashFlowTable};
use eventbase::registry::{parse_params, Binding, Bindings, ParamKind, Registry, Snapshot};
use eventbase::sensitivity::{linspace, sweep, SweepSpec};
use eventbase::{CalcError, Status};
use eventbase_service::AppState;

#[derive(Debug, Parser)]
#[command(name = "eventbase", version, about = "Economic evaluation over user-defined methods")]
struct Cli {
    /// Method library file. A missing file is an empty library.
    #[arg(long, global = true, env = "EVENTBASE_LIBRARY", default_value = "eventbase-library.json")]
    library: PathBuf,

    /// `text` rounds numbers to 6 significant digits; `machine` prints the
    /// full-precision JSON envelope the HTTP service returns.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Machine,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate a command: `eval --project p.json NPV ncf=ncf i=0.1`.
    Eval {
        #[arg(long)]
        project: Option<PathBuf>,
        method: String,
        /// `param=value`; field parameters take a field name.
        bindings: Vec<String>,
    },
    /// Define a method and save it to the library.
    Define {
        #[arg(long)]
        name: String,
        /// `"profit:number, ncf:field"`.
        #[arg(long, default_value = "")]
        params: String,
        #[arg(long)]
        expr: String,
        #[arg(long, default_value = "")]
        desc: String,
    },
    /// List built-in and user commands.
    List,
    /// Remove a user method from the library.
    Remove { name: String },
    /// Sweep one parameter over relative deltas.
    Sense {
        #[arg(long)]
        project: Option<PathBuf>,
        #[arg(long)]
        vary: String,
        /// `lo:hi:steps` (evenly spaced, inclusive) or a comma-separated list.
        #[arg(long, value_parser = parse_deltas, allow_hyphen_values = true)]
        deltas: Deltas,
        method: String,
        bindings: Vec<String>,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        /// Allowed browser origin, or `*`.
        #[arg(long, default_value = "http://localhost:5173")]
        cors_origin: String,
        /// Projects to load at start; their ids are printed.
        #[arg(long)]
        project: Vec<PathBuf>,
    },
}

#[derive(Debug, Clone)]
struct Deltas(Vec<f64>);

fn parse_deltas(text: &str) -> Result<Deltas, String> {
    let number = |s: &str| {
        s.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| format!("`{s}` is not a number"))
    };
    if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        let [lo, hi, steps] = parts[..] else {
            return Err("expected lo:hi:steps".into());
        };
        let steps: usize = steps
            .trim()
            .parse()
            .map_err(|_| format!("`{steps}` is not a step count"))?;
        linspace(number(lo)?, number(hi)?, steps)
            .map(Deltas)
            .map_err(|e| e.detail)
    } else {
        text.split(',').map(number).collect::<Result<_, _>>().map(Deltas)
    }
}

/// Outcome of a subcommand: an envelope plus what text mode prints.
enum Outcome {
    Done { envelope: Envelope, text: String },
    Failed(CalcError),
    Usage(String),
}

fn failed(err: CalcError) -> Outcome {
    Outcome::Failed(err)
}

fn load_registry(path: &Path) -> Result<Registry, CalcError> {
    let registry = Registry::new();
    if path.exists() {
        registry.load_library(path)?;
    }
    Ok(registry)
}

fn load_project(path: &Path) -> Result<CashFlowTable, CalcError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CalcError::io(format!("cannot read {}: {e}", path.display())))?;
    let is_csv = path
        .extension()
        .is_some_and(|ext| ext.eq_ignore_ascii_case("csv"));
    if is_csv {
        let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("project");
        load_csv(&text, name)
    } else {
        load_table(&text)
    }
}

fn load_optional(path: Option<&Path>) -> Result<Option<CashFlowTable>, CalcError> {
    path.map(load_project).transpose()
}

/// Reads `param=value` arguments. A number parameter needs a number; anything
/// else is taken as a field name.
fn parse_bindings(snapshot: &Snapshot, method: &str, args: &[String]) -> Result<Bindings, String> {
    let mut bindings = Bindings::new();
    for arg in args {
        let (name, value) = arg
            .split_once('=')
            .ok_or_else(|| format!("binding `{arg}` must look like name=value"))?;
        let kind = snapshot
            .get(method)
            .and_then(|m| m.param(name).map(|p| p.kind));
        let binding = match (kind, value.parse::<f64>()) {
            (Some(ParamKind::Number), Ok(v)) | (None, Ok(v)) => Binding::Number(v),
            (Some(ParamKind::Number), Err(_)) => {
                return Err(format!("parameter `{name}` takes a number, got `{value}`"))
            }
            _ => Binding::Field(value.to_string()),
        };
        if bindings.insert(name.to_string(), binding).is_some() {
            return Err(format!("parameter `{name}` is bound twice"));
        }
    }
    Ok(bindings)
}

fn from_envelope(envelope: Envelope, text: impl FnOnce(&Envelope) -> String) -> Outcome {
    if envelope.status == Status::Ok {
        let text = text(&envelope);
        Outcome::Done { envelope, text }
    } else {
        Outcome::Failed(CalcError::new(
            envelope.status,
            envelope.detail.unwrap_or_default(),
        ))
    }
}

fn list_text(snapshot: &Snapshot) -> String {
    let rows: Vec<[String; 4]> = snapshot
        .list_commands()
        .iter()
        .map(|c| {
            let m = &c.method;
            let params: Vec<String> = m.params().iter().map(|p| format!("{}:{}", p.name, p.kind)).collect();
            [
                c.caption.clone(),
                if m.is_builtin() { "built-in" } else { "user" }.to_string(),
                params.join(", "),
                m.source().to_string(),
            ]
        })
        .collect();
    let widths: Vec<usize> = (0..3)
        .map(|k| rows.iter().map(|r| r[k].chars().count()).max().unwrap_or(0))
        .collect();
    rows.iter()
        .map(|r| {
            format!(
                "{:w0$}  {:w1$}  {:w2$}  {}",
                r[0], r[1], r[2], r[3],
                w0 = widths[0],
                w1 = widths[1],
                w2 = widths[2]
            )
            .trim_end()
            .to_string()
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn run(cli: &Cli) -> Outcome {
    let registry = match load_registry(&cli.library) {
        Ok(r) => r,
        Err(e) => return failed(e),
    };
    match &cli.command {
        Command::Eval {
            project,
            method,
            bindings,
        } => {
            let snapshot = registry.snapshot();
            let bindings = match parse_bindings(&snapshot, method, bindings) {
                Ok(b) => b,
                Err(usage) => return Outcome::Usage(usage),
            };
            let table = match load_optional(project.as_deref()) {
                Ok(t) => t,
                Err(e) => return failed(e),
            };
            let envelope = api::evaluate(&snapshot, method, &bindings, table.as_ref());
            from_envelope(envelope, |e| display_number(e.value.unwrap_or(f64::NAN)))
        }
        Command::Define {
            name,
            params,
            expr,
            desc,
        } => {
            let request = api::MethodRequest {
                name: name.clone(),
                params: api::ParamList::Text(params.clone()),
                source: expr.clone(),
                description: desc.clone(),
            };
            if let Err(e) = parse_params(params) {
                return failed(e);
            }
            let envelope = api::define_method(&registry, &request);
            if envelope.status == Status::Ok {
                if let Err(e) = registry.save_library(&cli.library) {
                    return failed(e);
                }
            }
            from_envelope(envelope, |_| format!("defined {name}"))
        }
        Command::List => {
            let snapshot = registry.snapshot();
            let envelope = api::commands_envelope(&snapshot);
            from_envelope(envelope, |_| list_text(&snapshot))
        }
        Command::Remove { name } => {
            let envelope = api::remove_method(&registry, name);
            if envelope.status == Status::Ok {
                if let Err(e) = registry.save_library(&cli.library) {
                    return failed(e);
                }
            }
            from_envelope(envelope, |_| format!("removed {name}"))
        }
        Command::Sense {
            project,
            vary,
            deltas,
            method,
            bindings,
        } => {
            let snapshot = registry.snapshot();
            let bindings = match parse_bindings(&snapshot, method, bindings) {
                Ok(b) => b,
                Err(usage) => return Outcome::Usage(usage),
            };
            let table = match load_optional(project.as_deref()) {
                Ok(t) => t,
                Err(e) => return failed(e),
            };
            let spec = SweepSpec {
                method: method.clone(),
                bindings,
                vary: vary.clone(),
                deltas: deltas.0.clone(),
            };
            match sweep(&snapshot, table.as_ref(), &spec) {
                Ok(result) => Outcome::Done {
                    envelope: api::sensitivity(&snapshot, &spec, table.as_ref()),
                    text: result.to_display_table().trim_end().to_string(),
                },
                Err(e) => failed(e),
            }
        }
        Command::Serve {
            addr,
            cors_origin,
            project,
        } => {
            let state = Arc::new(AppState::new(registry, Some(cli.library.clone())));
            for path in project {
                match load_project(path) {
                    Ok(table) => println!("{} {}", state.insert_project(table), path.display()),
                    Err(e) => return failed(e),
                }
            }
            let runtime = match tokio::runtime::Runtime::new() {
                Ok(rt) => rt,
                Err(e) => return failed(CalcError::io(e.to_string())),
            };
            match runtime.block_on(eventbase_service::serve(state, *addr, cors_origin)) {
                Ok(()) => Outcome::Done {
                    envelope: Envelope::ok_data(serde_json::Value::Null),
                    text: String::new(),
                },
                Err(e) => failed(CalcError::io(e.to_string())),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Outcome::Done { envelope, text } => {
            match cli.format {
                Format::Machine => println!("{}", envelope.to_machine()),
                Format::Text if !text.is_empty() => println!("{text}"),
                Format::Text => {}
            }
            ExitCode::SUCCESS
        }
        Outcome::Failed(err) => {
            match cli.format {
                Format::Machine => println!("{}", Envelope::error(&err).to_machine()),
                Format::Text => eprintln!("error: {}: {}", err.status, err.detail),
            }
            ExitCode::from(1)
        }
        Outcome::Usage(message) => {
            eprintln!("error: {message}\n\nRun `eventbase --help` for usage.");
            ExitCode::from(2)
        }
    }
}
