//! Seeded generators for expressions, cash flows, tables and method sets.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;

pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn literal(rng: &mut TestRng) -> String {
    match rng.gen_range(0..3) {
        0 => rng.gen_range(0..100).to_string(),
        1 => format!("{}.{}", rng.gen_range(0..50), rng.gen_range(0..1000)),
        _ => format!("0.{:03}", rng.gen_range(1..1000)),
    }
}

/// A random infix expression over `vars`. Every output is well formed; its
/// meaning is whatever the precedence rules give the text.
pub fn expression(rng: &mut TestRng, vars: &[String], depth: u32) -> String {
    if depth == 0 || rng.gen_bool(0.2) {
        return if !vars.is_empty() && rng.gen_bool(0.4) {
            vars.choose(rng).unwrap().clone()
        } else {
            literal(rng)
        };
    }
    let d = depth - 1;
    let sub = |rng: &mut TestRng| expression(rng, vars, d);
    match rng.gen_range(0..16) {
        0..=4 => {
            let op = ["+", "-", "*", "/"].choose(rng).unwrap();
            let a = sub(rng);
            let b = sub(rng);
            if rng.gen_bool(0.5) {
                format!("{a} {op} {b}")
            } else {
                format!("{a}{op}{b}")
            }
        }
        5 => format!("({})", sub(rng)),
        6 => format!("-{}", sub(rng)),
        7 => format!("{}%", sub(rng)),
        8 => format!("abs({})", sub(rng)),
        9 => format!("cbrt({})", sub(rng)),
        10 => format!("sqrt(abs({}))", sub(rng)),
        11 => {
            let f = ["log", "log10"].choose(rng).unwrap();
            format!("{f}(abs({}) + 1)", sub(rng))
        }
        12 => format!("exp({} / 100)", sub(rng)),
        13 => format!("pow(abs({}) + 0.5, {})", sub(rng), rng.gen_range(0..4)),
        14 => format!("cubic({})", sub(rng)),
        _ => {
            let n = rng.gen_range(1..=4);
            let coeffs: Vec<String> = (0..n).map(|_| sub(rng)).collect();
            format!("poly({}, {})", sub(rng), coeffs.join(", "))
        }
    }
}

fn money(rng: &mut TestRng, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo..hi) * 100.0).round() / 100.0
}

/// Outlays first, then non-negative returns whose total exceeds the outlays:
/// one sign change and a root with positive rate.
pub fn conventional_flow(rng: &mut TestRng) -> Vec<f64> {
    let outlays = rng.gen_range(1..=3);
    let returns = rng.gen_range(1..=12);
    let mut flow: Vec<f64> = (0..outlays).map(|_| -money(rng, 10.0, 500.0)).collect();
    let invested: f64 = -flow.iter().sum::<f64>();
    let mut inflows: Vec<f64> = (0..returns).map(|_| money(rng, 1.0, 200.0)).collect();
    let total: f64 = inflows.iter().sum();
    let scale = invested * rng.gen_range(1.05..3.0) / total;
    for v in &mut inflows {
        *v = (*v * scale * 100.0).round() / 100.0;
    }
    flow.extend(inflows);
    flow
}

/// A single outlay followed by positive returns.
pub fn single_outlay_flow(rng: &mut TestRng) -> Vec<f64> {
    let returns = rng.gen_range(1..=10);
    let mut flow = vec![-money(rng, 50.0, 1000.0)];
    flow.extend((0..returns).map(|_| money(rng, 1.0, 400.0)));
    flow
}

pub fn field_values(rng: &mut TestRng, len: usize) -> Vec<f64> {
    (0..len).map(|_| money(rng, -1.0e4, 1.0e4)).collect()
}

pub fn field_name(rng: &mut TestRng) -> String {
    format!("f{}", rng.gen_range(0..1000))
}

pub struct GeneratedMethod {
    pub name: String,
    pub params: String,
    pub source: String,
    pub description: String,
}

/// Up to `max` distinct user methods. Number parameters appear in the
/// expression directly; field parameters go through the financial built-ins.
pub fn method_set(rng: &mut TestRng, max: usize) -> Vec<GeneratedMethod> {
    let count = rng.gen_range(0..=max);
    (0..count)
        .map(|k| {
            let nums: Vec<String> = (0..rng.gen_range(1..=3)).map(|j| format!("p{j}")).collect();
            let mut params: Vec<String> = nums.iter().map(|n| format!("{n}:number")).collect();
            let mut source = expression(rng, &nums, 3);
            if rng.gen_bool(0.4) {
                params.push("ncf:field".into());
                let call = match rng.gen_range(0..3) {
                    0 => format!("NPV(ncf, {}%)", rng.gen_range(1..30)),
                    1 => "IRR(ncf)".to_string(),
                    _ => "field_average(ncf)".to_string(),
                };
                source = format!("{call} + {source}");
            }
            GeneratedMethod {
                name: format!("m{k}_{}", rng.gen_range(0..10_000)),
                params: params.join(", "),
                source,
                description: format!("generated method {k}"),
            }
        })
        .collect()
}
