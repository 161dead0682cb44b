use std::fmt;

use super::functions::FunctionTable;
use super::opcode::OpCode;
use crate::status::{CalcError, CalcResult};

#[derive(Debug, Clone, PartialEq)]
pub enum Token {
    Number(f64),
    Identifier(String),
    Op(OpCode),
    /// Call of a registered (non-opcode) function such as `NPV`.
    Function(String),
    Comma,
    /// Argument count for the variadic `poly`, emitted just before it in suffix form.
    ArgCount(usize),
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Number(v) => write!(f, "{v}"),
            Token::Identifier(name) | Token::Function(name) => f.write_str(name),
            Token::Op(op) => write!(f, "{op}"),
            Token::Comma => f.write_str(","),
            Token::ArgCount(n) => write!(f, "#{n}"),
        }
    }
}

#[derive(Debug)]
enum Raw {
    Number(f64),
    Word(String),
    Symbol(char),
}

fn lex_raw(source: &str) -> CalcResult<Vec<Raw>> {
    let chars: Vec<char> = source.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                i += 1;
                if i < chars.len() && (chars[i] == '+' || chars[i] == '-') {
                    i += 1;
                }
                let digits = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                if digits == i {
                    return Err(malformed(&chars[start..i], start));
                }
            }
            if i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '.')
            {
                return Err(malformed(&chars[start..=i], start));
            }
            let text: String = chars[start..i].iter().collect();
            match text.parse::<f64>() {
                Ok(v) if v.is_finite() => out.push(Raw::Number(v)),
                _ => return Err(malformed(&chars[start..i], start)),
            }
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Raw::Word(chars[start..i].iter().collect()));
        } else if "()*/-+%,".contains(c) {
            out.push(Raw::Symbol(c));
            i += 1;
        } else {
            return Err(CalcError::syntax(format!(
                "illegal character `{c}` at position {i}"
            )));
        }
    }
    Ok(out)
}

fn malformed(text: &[char], pos: usize) -> CalcError {
    let text: String = text.iter().collect();
    CalcError::syntax(format!("malformed number `{text}` at position {pos}"))
}

/// Lexes infix source into tokens.
///
/// Words are matched case-sensitively against the opcode table, then against
/// `functions`; anything else is an identifier. Unary minus is rewritten to
/// `(0 - operand)` and unary plus is dropped.
pub fn tokenize(source: &str, functions: &FunctionTable) -> CalcResult<Vec<Token>> {
    if source.trim().is_empty() {
        return Err(CalcError::syntax("expression is empty"));
    }
    let raw = lex_raw(source)?;
    let mut out: Vec<Token> = Vec::with_capacity(raw.len());
    // Bracket depths at which an inserted `(0 -` group must be closed.
    let mut pending: Vec<usize> = Vec::new();
    let mut depth = 0usize;

    for (idx, item) in raw.iter().enumerate() {
        let next_is_open = matches!(raw.get(idx + 1), Some(Raw::Symbol('(')));
        match item {
            Raw::Number(v) => {
                out.push(Token::Number(*v));
                settle(&mut out, &mut pending, &mut depth);
            }
            Raw::Word(word) => {
                let token = if let Some(op) = OpCode::from_function_name(word) {
                    Token::Op(op)
                } else if functions.contains(word) {
                    Token::Function(word.clone())
                } else {
                    Token::Identifier(word.clone())
                };
                let is_call = !matches!(token, Token::Identifier(_)) || next_is_open;
                out.push(token);
                if !is_call {
                    settle(&mut out, &mut pending, &mut depth);
                }
            }
            Raw::Symbol(c) => match c {
                '(' => {
                    out.push(Token::Op(OpCode::LBracket));
                    depth += 1;
                }
                ')' => {
                    out.push(Token::Op(OpCode::RBracket));
                    depth = depth.saturating_sub(1);
                    settle(&mut out, &mut pending, &mut depth);
                }
                ',' => out.push(Token::Comma),
                '%' => out.push(Token::Op(OpCode::Percent)),
                '*' => out.push(Token::Op(OpCode::Mult)),
                '/' => out.push(Token::Op(OpCode::Divide)),
                '+' | '-' => {
                    if starts_operand(out.last()) {
                        if *c == '-' {
                            out.push(Token::Op(OpCode::LBracket));
                            out.push(Token::Number(0.0));
                            out.push(Token::Op(OpCode::Subtract));
                            depth += 1;
                            pending.push(depth);
                        }
                    } else if *c == '-' {
                        out.push(Token::Op(OpCode::Subtract));
                    } else {
                        out.push(Token::Op(OpCode::Plus));
                    }
                }
                _ => unreachable!("lex_raw only yields known symbols"),
            },
        }
    }
    Ok(out)
}

/// A sign is unary when no operand precedes it.
fn starts_operand(prev: Option<&Token>) -> bool {
    match prev {
        None | Some(Token::Comma) => true,
        Some(Token::Op(op)) => *op == OpCode::LBracket || op.is_infix(),
        _ => false,
    }
}

fn settle(out: &mut Vec<Token>, pending: &mut Vec<usize>, depth: &mut usize) {
    while pending.last() == Some(depth) {
        pending.pop();
        out.push(Token::Op(OpCode::RBracket));
        *depth -= 1;
    }
}
