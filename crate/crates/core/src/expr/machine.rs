use std::collections::HashMap;

use super::compiler::SuffixExpression;
use super::functions::Value;
use super::lexer::Token;
use super::opcode::OpCode;
use crate::status::{finite, CalcError, CalcResult};

/// Name → value bindings visible to an evaluation.
pub type Env = HashMap<String, Value>;

fn pop(stack: &mut Vec<Value>, what: &str) -> CalcResult<Value> {
    stack
        .pop()
        .ok_or_else(|| CalcError::arity(format!("stack underflow at `{what}`")))
}

fn pop_num(stack: &mut Vec<Value>, op: OpCode) -> CalcResult {
    pop(stack, op.symbol())?.as_num(&format!("operator `{op}`"))
}

/// Horner evaluation of `c[0] + c[1]·x + ... + c[n]·x^n`.
pub fn horner(x: f64, coeffs: &[f64]) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

fn apply_unary(op: OpCode, x: f64) -> CalcResult {
    let value = match op {
        OpCode::Percent => x / 100.0,
        OpCode::Absolute => x.abs(),
        OpCode::CubeRoot => x.cbrt(),
        OpCode::Exp => x.exp(),
        OpCode::Log | OpCode::Log10 => {
            if x <= 0.0 {
                return Err(CalcError::domain(format!("{op}({x}): argument must be positive")));
            }
            if op == OpCode::Log {
                x.ln()
            } else {
                x.log10()
            }
        }
        OpCode::SqRoot => {
            if x < 0.0 {
                return Err(CalcError::domain(format!("sqrt({x}): argument is negative")));
            }
            x.sqrt()
        }
        OpCode::Cubic => x * x * x,
        _ => unreachable!("{op:?} is not unary"),
    };
    finite(value, &format!("{op}({x})"))
}

fn apply_binary(op: OpCode, a: f64, b: f64) -> CalcResult {
    let value = match op {
        OpCode::Plus => a + b,
        OpCode::Subtract => a - b,
        OpCode::Mult => a * b,
        OpCode::Divide => {
            if b == 0.0 {
                return Err(CalcError::divide_by_zero(format!("{a} / 0")));
            }
            a / b
        }
        OpCode::Power => a.powf(b),
        _ => unreachable!("{op:?} is not binary"),
    };
    finite(value, &format!("{a} {op} {b}"))
}

/// Evaluates a compiled expression on a value stack.
pub fn eval_suffix(expr: &SuffixExpression, env: &Env) -> CalcResult {
    let mut stack: Vec<Value> = Vec::with_capacity(8);
    let mut argc: Option<usize> = None;

    for item in expr.items() {
        match item {
            Token::Number(v) => stack.push(Value::Num(*v)),
            Token::Identifier(name) => {
                let value = env
                    .get(name)
                    .ok_or_else(|| CalcError::unknown_symbol(format!("`{name}` is not bound")))?;
                stack.push(value.clone());
            }
            Token::ArgCount(n) => argc = Some(*n),
            Token::Op(OpCode::Poly) => {
                let n = argc
                    .take()
                    .ok_or_else(|| CalcError::arity("poly without an argument count"))?;
                if n < 2 || stack.len() < n {
                    return Err(CalcError::arity(format!("poly: cannot take {n} arguments")));
                }
                let args = stack.split_off(stack.len() - n);
                let nums = args
                    .iter()
                    .map(|v| v.as_num("poly"))
                    .collect::<CalcResult<Vec<f64>>>()?;
                let value = finite(horner(nums[0], &nums[1..]), "poly")?;
                stack.push(Value::Num(value));
            }
            Token::Op(op) => match op.arity() {
                Some(1) => {
                    let x = pop_num(&mut stack, *op)?;
                    stack.push(Value::Num(apply_unary(*op, x)?));
                }
                Some(2) => {
                    let b = pop_num(&mut stack, *op)?;
                    let a = pop_num(&mut stack, *op)?;
                    stack.push(Value::Num(apply_binary(*op, a, b)?));
                }
                _ => {
                    return Err(CalcError::syntax(format!(
                        "`{op}` cannot appear in suffix form"
                    )))
                }
            },
            Token::Function(name) => {
                let def = expr
                    .functions()
                    .get(name)
                    .ok_or_else(|| CalcError::unknown_symbol(format!("unknown function `{name}`")))?;
                if stack.len() < def.arity() {
                    return Err(CalcError::arity(format!("stack underflow at `{name}`")));
                }
                let args = stack.split_off(stack.len() - def.arity());
                let value = finite(def.invoke(&args)?, name)?;
                stack.push(Value::Num(value));
            }
            Token::Comma => return Err(CalcError::syntax("`,` cannot appear in suffix form")),
        }
    }

    match (stack.pop(), stack.is_empty()) {
        (Some(value), true) => finite(value.as_num("expression result")?, "expression result"),
        (None, _) => Err(CalcError::arity("expression produced no value")),
        (Some(_), false) => Err(CalcError::arity("expression left extra values on the stack")),
    }
}
