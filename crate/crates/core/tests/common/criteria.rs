//! One check per acceptance criterion. Each returns a one-line summary on
//! success and the first counterexample on failure.

use std::collections::HashMap;

use rand::Rng;

use eventbase::events::{scalar_mul, seq, Event, EventSpace, ExecContext};
use eventbase::expr::{evaluate, Env, OpCode, Value};
use eventbase::finance::{irr, payback_static, IrrConfig};
use eventbase::project::{field_average, CashFlowTable};
use eventbase::registry::{parse_params, Binding, Bindings, ParamKind, Registry};
use eventbase::sensitivity::{sweep, SweepSpec};
use eventbase::Status;

use super::gen::{self, TestRng};
use super::reference;

pub type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

pub fn opcode_fidelity() -> Outcome {
    let golden: [(OpCode, u8); 16] = [
        (OpCode::LBracket, 1),
        (OpCode::RBracket, 2),
        (OpCode::Mult, 3),
        (OpCode::Divide, 4),
        (OpCode::Subtract, 5),
        (OpCode::Plus, 6),
        (OpCode::Percent, 7),
        (OpCode::Absolute, 101),
        (OpCode::CubeRoot, 105),
        (OpCode::Exp, 109),
        (OpCode::Log, 112),
        (OpCode::Log10, 113),
        (OpCode::Power, 116),
        (OpCode::SqRoot, 119),
        (OpCode::Cubic, 122),
        (OpCode::Poly, 124),
    ];
    ensure!(OpCode::ALL.len() == 16, "expected 16 opcodes, found {}", OpCode::ALL.len());
    for (op, code) in golden {
        ensure!(op.code() == code, "{op:?} has code {}, expected {code}", op.code());
        ensure!(OpCode::from_code(code) == Some(op), "code {code} does not map back to {op:?}");
    }
    Ok("16 opcode constants match".into())
}

pub fn evaluator_oracle(seed: u64, cases: usize) -> Outcome {
    let mut rng = gen::rng(seed);
    let names: Vec<String> = ["x", "y", "rate"].iter().map(|s| s.to_string()).collect();
    let mut ok = 0;
    let mut worst: f64 = 0.0;
    for case in 0..cases {
        let mut vars = HashMap::new();
        let mut env = Env::new();
        for name in &names {
            let v = (rng.gen_range(-50.0..50.0f64) * 1000.0).round() / 1000.0;
            vars.insert(name.clone(), v);
            env.insert(name.clone(), Value::Num(v));
        }
        let depth = rng.gen_range(1..=5);
        let src = gen::expression(&mut rng, &names, depth);
        let expected = reference::eval_infix(&src, &vars);
        let got = evaluate(&src, &env);
        match (expected, got) {
            (Ok(r), Ok(v)) => {
                let rel = if r == v { 0.0 } else { (v - r).abs() / r.abs() };
                ensure!(rel <= 1e-12, "case {case}: `{src}` gave {v}, reference {r}");
                worst = worst.max(rel);
                ok += 1;
            }
            (Err(s), Err(e)) => {
                ensure!(s == e.status, "case {case}: `{src}` failed with {}, reference {s}", e.status)
            }
            (r, v) => return Err(format!("case {case}: `{src}` gave {v:?}, reference {r:?}")),
        }
    }
    ensure!(ok * 2 >= cases, "only {ok} of {cases} expressions evaluated to a number");
    Ok(format!(
        "{cases} expressions agree ({ok} numeric, worst relative error {worst:.1e})"
    ))
}

/// Three basic events with affine handlers, so every run is checkable
/// against a hand-computed fold.
struct LawSpace {
    space: EventSpace,
    atoms: Vec<(Event, fn(f64) -> f64, &'static str)>,
}

fn law_space() -> LawSpace {
    let maps: [(&'static str, fn(f64) -> f64); 3] = [
        ("a", |x| 2.0 * x + 1.0),
        ("b", |x| x - 3.0),
        ("c", |x| 0.5 * x + 5.0),
    ];
    let mut space = EventSpace::new();
    let mut atoms = Vec::new();
    for (name, f) in maps {
        let e = space
            .define_basic(name, move |ctx: &mut ExecContext<'_>| {
                ctx.accumulator = f(ctx.accumulator);
                Ok(())
            })
            .expect("fresh names");
        atoms.push((e, f, name));
    }
    LawSpace { space, atoms }
}

/// The test-side mirror of an event expression.
#[derive(Clone, Debug)]
enum Mirror {
    Atom(usize),
    Seq(Box<Mirror>, Box<Mirror>),
    Scaled(u32, Box<Mirror>),
}

impl Mirror {
    fn word(&self, out: &mut Vec<usize>) {
        match self {
            Mirror::Atom(i) => out.push(*i),
            Mirror::Seq(a, b) => {
                a.word(out);
                b.word(out);
            }
            Mirror::Scaled(k, e) => {
                for _ in 0..*k {
                    e.word(out);
                }
            }
        }
    }

    fn build(&self, ls: &LawSpace) -> Event {
        match self {
            Mirror::Atom(i) => ls.atoms[*i].0.clone(),
            Mirror::Seq(a, b) => seq(&a.build(ls), &b.build(ls)).expect("same space"),
            Mirror::Scaled(k, e) => scalar_mul(*k, &e.build(ls)),
        }
    }

    fn random(rng: &mut TestRng, depth: u32) -> Mirror {
        if depth == 0 || rng.gen_bool(0.25) {
            return Mirror::Atom(rng.gen_range(0..3));
        }
        if rng.gen_bool(0.6) {
            Mirror::Seq(
                Box::new(Mirror::random(rng, depth - 1)),
                Box::new(Mirror::random(rng, depth - 1)),
            )
        } else {
            Mirror::Scaled(rng.gen_range(0..=8), Box::new(Mirror::random(rng, depth - 1)))
        }
    }
}

fn check_mirror(ls: &LawSpace, table: &CashFlowTable, m: &Mirror) -> Result<(), String> {
    let e = m.build(ls);
    let mut word = Vec::new();
    m.word(&mut word);
    let expected_names: Vec<&str> = word.iter().map(|&i| ls.atoms[i].2).collect();
    let expanded = ls.space.expand(&e).map_err(|err| format!("{e}: {err}"))?;
    let names: Vec<&str> = expanded.iter().map(|id| id.as_str()).collect();
    ensure!(names == expected_names, "{e} expanded to {names:?}, expected {expected_names:?}");
    let start = 1.0;
    let mut ctx = ExecContext::new(table);
    ctx.accumulator = start;
    let got = ls.space.execute(&e, &mut ctx).map_err(|err| format!("{e}: {err}"))?;
    let expected = word.iter().fold(start, |acc, &i| (ls.atoms[i].1)(acc));
    ensure!(got == expected, "{e} executed to {got}, expected {expected}");
    Ok(())
}

/// Every sum of up to four terms `k·x` (x a basic event, k ≤ 8), in both
/// bracketings, plus random nestings to depth four.
pub fn event_laws(seed: u64) -> Outcome {
    let ls = law_space();
    let table = CashFlowTable::empty("laws");
    let terms: Vec<Mirror> = (0..2)
        .flat_map(|i| (0..=8).map(move |k| Mirror::Scaled(k, Box::new(Mirror::Atom(i)))))
        .chain((0..3).map(Mirror::Atom))
        .collect();
    let mut checked = 0usize;
    let mut stack: Vec<Vec<usize>> = (0..terms.len()).map(|i| vec![i]).collect();
    while let Some(idx) = stack.pop() {
        let parts: Vec<&Mirror> = idx.iter().map(|&i| &terms[i]).collect();
        let left = parts[1..].iter().fold(parts[0].clone(), |acc, p| {
            Mirror::Seq(Box::new(acc), Box::new((*p).clone()))
        });
        let right = parts[..parts.len() - 1]
            .iter()
            .rev()
            .fold(parts[parts.len() - 1].clone(), |acc, p| {
                Mirror::Seq(Box::new((*p).clone()), Box::new(acc))
            });
        check_mirror(&ls, &table, &left)?;
        check_mirror(&ls, &table, &right)?;
        let l = ls.space.expand(&left.build(&ls)).unwrap();
        let r = ls.space.expand(&right.build(&ls)).unwrap();
        ensure!(l == r, "bracketings of {idx:?} expand differently");
        checked += 2;
        if idx.len() < 4 {
            for i in 0..terms.len() {
                let mut next = idx.clone();
                next.push(i);
                stack.push(next);
            }
        }
    }

    // k·e = e + e + ... + e and (j + k)·e = j·e + k·e.
    for atom in 0..3 {
        let e = Mirror::Seq(Box::new(Mirror::Atom(atom)), Box::new(Mirror::Atom((atom + 1) % 3)));
        let built = e.build(&ls);
        for k in 0..=8u32 {
            let scaled = ls.space.expand(&scalar_mul(k, &built)).unwrap();
            let mut repeated = Vec::new();
            for _ in 0..k {
                repeated.extend(ls.space.expand(&built).unwrap());
            }
            ensure!(scaled == repeated, "{k}·({built}) is not {k} repetitions");
            for j in 0..=(8 - k) {
                let split = seq(&scalar_mul(j, &built), &scalar_mul(k, &built)).unwrap();
                let joined = scalar_mul(j + k, &built);
                ensure!(
                    ls.space.expand(&split).unwrap() == ls.space.expand(&joined).unwrap(),
                    "{j}·e + {k}·e differs from {}·e",
                    j + k
                );
            }
        }
    }

    let mut rng = gen::rng(seed);
    for _ in 0..2000 {
        check_mirror(&ls, &table, &Mirror::random(&mut rng, 4))?;
        checked += 1;
    }

    // Non-commutativity witness.
    let mut space = EventSpace::new();
    let push = space
        .define_basic("push_one", |ctx: &mut ExecContext<'_>| {
            ctx.accumulator += 1.0;
            Ok(())
        })
        .unwrap();
    let double = space
        .define_basic("double", |ctx: &mut ExecContext<'_>| {
            ctx.accumulator *= 2.0;
            Ok(())
        })
        .unwrap();
    let run = |e: &Event| space.execute(e, &mut ExecContext::new(&table));
    let pd = run(&seq(&push, &double).unwrap());
    let dp = run(&seq(&double, &push).unwrap());
    ensure!(pd == Ok(2.0) && dp == Ok(1.0), "witness gave {pd:?} and {dp:?}, expected 2 and 1");
    Ok(format!("{checked} expressions checked; push+double = 2, double+push = 1"))
}

pub fn field_average_example(seed: u64, tables: usize) -> Outcome {
    let mut rng = gen::rng(seed);
    for case in 0..tables {
        let periods = rng.gen_range(1..=40);
        let names: Vec<String> = (0..rng.gen_range(1..=4)).map(|_| gen::field_name(&mut rng)).collect();
        let mut fields = std::collections::BTreeMap::new();
        for name in &names {
            fields.insert(name.clone(), gen::field_values(&mut rng, periods));
        }
        let table = CashFlowTable::new("random", periods, fields.clone()).map_err(|e| e.to_string())?;
        for (name, values) in &fields {
            let expected = reference::mean(values);
            let got = field_average(&table, name);
            ensure!(got == Ok(expected), "table {case}, field {name}: {got:?} vs mean {expected}");
        }
    }
    let present = CashFlowTable::new("f", 2, [("x", vec![1.0, 2.0])]).unwrap();
    let missing = field_average(&present, "absent").map_err(|e| e.status);
    let empty = CashFlowTable::new("e", 0, [("x", Vec::new())]).unwrap();
    let empty = field_average(&empty, "x").map_err(|e| e.status);
    let huge = CashFlowTable::new("h", 2, [("x", vec![f64::MAX, f64::MAX])]).unwrap();
    let overflow = field_average(&huge, "x").map_err(|e| e.status);
    let statuses = [missing, empty, overflow];
    ensure!(
        statuses == [Err(Status::FieldNotFound), Err(Status::EmptyField), Err(Status::TypeError)],
        "failure states mapped to {statuses:?}"
    );
    Ok(format!(
        "{tables} random tables match the direct mean exactly; failures map to FieldNotFound, EmptyField, TypeError"
    ))
}

pub fn financial_root(seed: u64, flows: usize) -> Outcome {
    let mut rng = gen::rng(seed);
    let cfg = IrrConfig::default();
    let mut worst: f64 = 0.0;
    for case in 0..flows {
        let flow = gen::conventional_flow(&mut rng);
        let sol = irr(&flow, &cfg).map_err(|e| format!("flow {case} {flow:?}: {e}"))?;
        let (residual, _) = reference::npv_naive(&flow, sol.rate);
        ensure!(
            residual.abs() <= 1e-9,
            "flow {case} {flow:?}: NPV at IRR {} is {residual}",
            sol.rate
        );
        ensure!(sol.conventional, "flow {case} not reported as conventional");
        worst = worst.max(residual.abs());
    }
    let expected = reference::irr_three_period(-100.0, 60.0, 60.0);
    let got = irr(&[-100.0, 60.0, 60.0], &cfg).map_err(|e| e.to_string())?.rate;
    ensure!((got - expected).abs() <= 1e-3, "IRR([-100,60,60]) = {got}, quadratic root {expected}");
    ensure!((got - 0.1307).abs() <= 1e-3, "IRR([-100,60,60]) = {got}, expected about 0.1307");
    Ok(format!(
        "{flows} flows, worst |NPV(IRR)| {worst:.1e}; IRR([-100,60,60]) = {got:.6} (quadratic {expected:.6})"
    ))
}

pub fn payback_oracle(seed: u64, flows: usize) -> Outcome {
    let mut rng = gen::rng(seed);
    for case in 0..flows {
        let flow = gen::conventional_flow(&mut rng);
        let t = reference::recovery_period(&flow)
            .ok_or_else(|| format!("generator produced an unrecovered flow {flow:?}"))?;
        let p = payback_static(&flow).map_err(|e| format!("flow {case} {flow:?}: {e}"))?;
        let before: f64 = flow[..t].iter().sum();
        ensure!(
            (t as f64 - 1.0) < p && p <= t as f64,
            "flow {case} {flow:?}: payback {p} outside ({}, {t}]",
            t as f64 - 1.0
        );
        let fraction = p - (t as f64 - 1.0);
        let expected = -before / flow[t];
        ensure!(
            (fraction - expected).abs() <= 1e-12 * t as f64,
            "flow {case}: fractional year {fraction}, cumulative totals give {expected}"
        );
    }
    let exact = payback_static(&[-100.0, 40.0, 40.0, 40.0]);
    ensure!(exact == Ok(2.5), "payback([-100,40,40,40]) = {exact:?}");
    Ok(format!("{flows} flows bracketed; payback([-100,40,40,40]) = 2.5"))
}

fn random_bindings(rng: &mut TestRng, params: &[eventbase::registry::Param]) -> Bindings {
    params
        .iter()
        .map(|p| {
            let b = match p.kind {
                ParamKind::Number => Binding::Number((rng.gen_range(-20.0..20.0f64) * 100.0).round() / 100.0),
                ParamKind::Field => Binding::Field(if rng.gen_bool(0.9) { "ncf" } else { "absent" }.into()),
            };
            (p.name.clone(), b)
        })
        .collect()
}

pub fn registry_round_trip(seed: u64, libraries: usize) -> Outcome {
    let mut rng = gen::rng(seed);
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("library.json");
    let mut invocations = 0;
    for lib in 0..libraries {
        let registry = Registry::new();
        for m in gen::method_set(&mut rng, 50) {
            let params = parse_params(&m.params).map_err(|e| e.to_string())?;
            registry
                .define_method(&m.name, params, &m.source, &m.description)
                .map_err(|e| format!("library {lib}: `{}` rejected: {e}", m.source))?;
        }
        let saved = registry.save_library(&path).map_err(|e| e.to_string())?;
        let text = std::fs::read_to_string(&path).map_err(|e| e.to_string())?;
        ensure!(text == saved.to_text(), "library {lib}: file differs from canonical text");

        let loaded = Registry::new();
        loaded.load_library(&path).map_err(|e| format!("library {lib}: {e}"))?;
        ensure!(
            loaded.list_commands() == registry.list_commands(),
            "library {lib}: command list changed across save/load"
        );
        let flow = gen::conventional_flow(&mut rng);
        let table = CashFlowTable::new("rt", flow.len(), [("ncf", flow)]).map_err(|e| e.to_string())?;
        for command in registry.list_commands() {
            for _ in 0..3 {
                let bindings = random_bindings(&mut rng, command.method.params());
                let a = registry.invoke(command.method.name(), &bindings, Some(&table));
                let b = loaded.invoke(command.method.name(), &bindings, Some(&table));
                let same = match (&a, &b) {
                    (Ok(x), Ok(y)) => x.to_bits() == y.to_bits(),
                    _ => a == b,
                };
                ensure!(same, "library {lib}, {}: {a:?} before, {b:?} after", command.method.name());
                invocations += 1;
            }
        }

        // Failed loads leave the loaded registry untouched.
        let before = loaded.list_commands();
        let corrupt = [
            text[..text.len() / 2].to_string(),
            text.replacen("\"version\": 1", "\"version\": 9", 1),
            r#"{"version":1,"methods":[{"name":"bad","params":[],"source":"FOO(1)","description":"","created_at":0}]}"#
                .to_string(),
        ];
        for (k, doc) in corrupt.iter().enumerate() {
            ensure!(loaded.load_library_str(doc).is_err(), "library {lib}: corrupt document {k} loaded");
            ensure!(loaded.list_commands() == before, "library {lib}: failed load {k} changed state");
        }
    }
    Ok(format!("{libraries} libraries round-tripped, {invocations} invocations identical; failed loads left state unchanged"))
}

pub fn sensitivity_fidelity(seed: u64, cases: usize) -> Outcome {
    let mut rng = gen::rng(seed);
    let registry = Registry::new();
    let snapshot = registry.snapshot();
    let mut rows = 0;
    for case in 0..cases {
        let flow = gen::conventional_flow(&mut rng);
        let table = CashFlowTable::new("s", flow.len(), [("ncf", flow.clone())]).unwrap();
        for command in snapshot.list_commands() {
            let method = &command.method;
            let bindings: Bindings = method
                .params()
                .iter()
                .map(|p| {
                    let b = match p.kind {
                        ParamKind::Number => Binding::Number(rng.gen_range(0.01..0.5)),
                        ParamKind::Field => Binding::Field("ncf".into()),
                    };
                    (p.name.clone(), b)
                })
                .collect();
            for param in method.params() {
                let spec = SweepSpec {
                    method: method.name().to_string(),
                    bindings: bindings.clone(),
                    vary: param.name.clone(),
                    deltas: vec![0.2, -0.2, 0.0, 0.1],
                };
                let result = sweep(&snapshot, Some(&table), &spec).map_err(|e| e.to_string())?;
                let plain = snapshot.invoke(method.name(), &bindings, Some(&table));
                let base = result.base_row().map(|r| r.result.clone());
                ensure!(
                    base.as_ref() == Some(&plain),
                    "case {case}, {} varying {}: zero row {base:?}, plain {plain:?}",
                    method.name(),
                    param.name
                );
                rows += 1;
            }
        }

        let flow = gen::single_outlay_flow(&mut rng);
        let table = CashFlowTable::new("m", flow.len(), [("ncf", flow.clone())]).unwrap();
        let spec = SweepSpec {
            method: "NPV".into(),
            bindings: [
                ("ncf".to_string(), Binding::Field("ncf".into())),
                ("i".to_string(), Binding::Number(0.1)),
            ]
            .into(),
            vary: "i".into(),
            deltas: eventbase::sensitivity::linspace(-0.9, 5.0, 25).unwrap(),
        };
        let result = sweep(&snapshot, Some(&table), &spec).map_err(|e| e.to_string())?;
        let values: Vec<f64> = result
            .rows
            .iter()
            .map(|r| r.result.clone().map_err(|e| e.to_string()))
            .collect::<Result<_, _>>()?;
        ensure!(
            values.windows(2).all(|w| w[1] < w[0]),
            "case {case}: NPV over rate not strictly decreasing for {flow:?}: {values:?}"
        );
    }
    Ok(format!("{rows} zero-delta rows equal plain invocation; {cases} rate sweeps strictly decreasing"))
}
