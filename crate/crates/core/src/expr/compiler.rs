use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use super::functions::FunctionTable;
use super::lexer::Token;
use super::opcode::OpCode;
use crate::status::{CalcError, CalcResult};

/// Compiled postfix form of an expression.
#[derive(Debug, Clone)]
pub struct SuffixExpression {
    items: Vec<Token>,
    free_vars: BTreeSet<String>,
    functions: Arc<FunctionTable>,
}

impl SuffixExpression {
    pub fn items(&self) -> &[Token] {
        &self.items
    }

    /// Identifiers that must be bound in the evaluation environment.
    pub fn free_vars(&self) -> &BTreeSet<String> {
        &self.free_vars
    }

    pub fn functions(&self) -> &Arc<FunctionTable> {
        &self.functions
    }

    /// Simulates stack depth; true when no step underflows and exactly one value remains.
    pub fn is_balanced(&self) -> bool {
        let mut depth: usize = 0;
        let mut count: Option<usize> = None;
        for item in &self.items {
            let (pops, pushes) = match item {
                Token::Number(_) | Token::Identifier(_) => (0, 1),
                Token::ArgCount(n) => {
                    count = Some(*n);
                    (0, 0)
                }
                Token::Op(OpCode::Poly) => match count.take() {
                    Some(n) => (n, 1),
                    None => return false,
                },
                Token::Op(op) => match op.arity() {
                    Some(n) if n > 0 => (n, 1),
                    _ => return false,
                },
                Token::Function(name) => match self.functions.get(name) {
                    Some(def) => (def.arity(), 1),
                    None => return false,
                },
                Token::Comma => return false,
            };
            if depth < pops {
                return false;
            }
            depth = depth - pops + pushes;
        }
        depth == 1
    }
}

impl PartialEq for SuffixExpression {
    fn eq(&self, other: &Self) -> bool {
        self.items == other.items
    }
}

impl fmt::Display for SuffixExpression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, item) in self.items.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{item}")?;
        }
        Ok(())
    }
}

#[derive(Debug)]
enum Callee {
    Op(OpCode),
    Function(String),
}

#[derive(Debug)]
enum Frame {
    Infix(OpCode),
    Group,
    Call { callee: Callee, commas: usize },
}

/// Converts infix tokens into suffix order (shunting-yard).
///
/// Precedence: `%` (postfix) over `*` `/` over `+` `-`, all left-associative.
pub fn to_suffix(tokens: &[Token], functions: Arc<FunctionTable>) -> CalcResult<SuffixExpression> {
    if tokens.is_empty() {
        return Err(CalcError::syntax("expression is empty"));
    }
    let mut output: Vec<Token> = Vec::with_capacity(tokens.len());
    let mut stack: Vec<Frame> = Vec::new();
    let mut free_vars = BTreeSet::new();
    let mut expect_operand = true;
    let mut iter = tokens.iter().peekable();

    while let Some(token) = iter.next() {
        match token {
            Token::Number(_) | Token::Identifier(_) => {
                if let Token::Identifier(name) = token {
                    if matches!(iter.peek(), Some(Token::Op(OpCode::LBracket))) {
                        return Err(CalcError::unknown_symbol(format!(
                            "unknown function `{name}`"
                        )));
                    }
                    free_vars.insert(name.clone());
                }
                if !expect_operand {
                    return Err(CalcError::syntax(format!("unexpected operand `{token}`")));
                }
                output.push(token.clone());
                expect_operand = false;
            }
            Token::Function(_) | Token::Op(_) if is_call(token) => {
                if !expect_operand {
                    return Err(CalcError::syntax(format!("unexpected call `{token}`")));
                }
                if !matches!(iter.next(), Some(Token::Op(OpCode::LBracket))) {
                    return Err(CalcError::syntax(format!("expected `(` after `{token}`")));
                }
                let callee = match token {
                    Token::Function(name) => Callee::Function(name.clone()),
                    Token::Op(op) => Callee::Op(*op),
                    _ => unreachable!("guarded by is_call"),
                };
                if matches!(iter.peek(), Some(Token::Op(OpCode::RBracket))) {
                    iter.next();
                    emit_call(&callee, 0, &functions, &mut output)?;
                    expect_operand = false;
                } else {
                    stack.push(Frame::Call { callee, commas: 0 });
                }
            }
            Token::Op(OpCode::LBracket) => {
                if !expect_operand {
                    return Err(CalcError::syntax("unexpected `(` after an operand"));
                }
                stack.push(Frame::Group);
            }
            Token::Op(OpCode::RBracket) => {
                if expect_operand {
                    return Err(CalcError::syntax("unexpected `)`"));
                }
                loop {
                    match stack.pop() {
                        Some(Frame::Infix(op)) => output.push(Token::Op(op)),
                        Some(Frame::Group) => break,
                        Some(Frame::Call { callee, commas }) => {
                            emit_call(&callee, commas + 1, &functions, &mut output)?;
                            break;
                        }
                        None => return Err(CalcError::syntax("unbalanced `)`")),
                    }
                }
            }
            Token::Comma => {
                if expect_operand {
                    return Err(CalcError::syntax("unexpected `,`"));
                }
                loop {
                    match stack.last_mut() {
                        Some(Frame::Infix(_)) => {
                            if let Some(Frame::Infix(op)) = stack.pop() {
                                output.push(Token::Op(op));
                            }
                        }
                        Some(Frame::Call { commas, .. }) => {
                            *commas += 1;
                            break;
                        }
                        _ => return Err(CalcError::syntax("`,` outside a function call")),
                    }
                }
                expect_operand = true;
            }
            Token::Op(OpCode::Percent) => {
                if expect_operand {
                    return Err(CalcError::syntax("`%` must follow an operand"));
                }
                output.push(Token::Op(OpCode::Percent));
            }
            Token::Op(op) if op.is_infix() => {
                if expect_operand {
                    return Err(CalcError::syntax(format!("missing operand before `{op}`")));
                }
                while let Some(Frame::Infix(top)) = stack.last() {
                    if top.precedence() >= op.precedence() {
                        output.push(Token::Op(*top));
                        stack.pop();
                    } else {
                        break;
                    }
                }
                stack.push(Frame::Infix(*op));
                expect_operand = true;
            }
            Token::Op(op) => {
                return Err(CalcError::syntax(format!("unexpected operator `{op}`")));
            }
            Token::Function(name) => {
                return Err(CalcError::syntax(format!("unexpected `{name}`")));
            }
            Token::ArgCount(_) => {
                return Err(CalcError::syntax("argument-count marker in infix input"));
            }
        }
    }

    if expect_operand {
        return Err(CalcError::syntax("expression ends where an operand is expected"));
    }
    while let Some(frame) = stack.pop() {
        match frame {
            Frame::Infix(op) => output.push(Token::Op(op)),
            Frame::Group | Frame::Call { .. } => {
                return Err(CalcError::syntax("unbalanced `(`"));
            }
        }
    }

    let expr = SuffixExpression {
        items: output,
        free_vars,
        functions,
    };
    debug_assert!(expr.is_balanced(), "compiler emitted unbalanced suffix: {expr}");
    Ok(expr)
}

fn is_call(token: &Token) -> bool {
    match token {
        Token::Function(_) => true,
        Token::Op(op) => op.is_function(),
        _ => false,
    }
}

fn emit_call(
    callee: &Callee,
    argc: usize,
    functions: &FunctionTable,
    output: &mut Vec<Token>,
) -> CalcResult<()> {
    match callee {
        Callee::Op(OpCode::Poly) => {
            if argc < 2 {
                return Err(CalcError::arity(format!(
                    "poly needs x and at least one coefficient, got {argc} argument(s)"
                )));
            }
            output.push(Token::ArgCount(argc));
            output.push(Token::Op(OpCode::Poly));
        }
        Callee::Op(op) => {
            let want = op.arity().unwrap_or(0);
            if argc != want {
                return Err(CalcError::arity(format!(
                    "{op} takes {want} argument(s), got {argc}"
                )));
            }
            output.push(Token::Op(*op));
        }
        Callee::Function(name) => {
            let def = functions
                .get(name)
                .ok_or_else(|| CalcError::unknown_symbol(format!("unknown function `{name}`")))?;
            if argc != def.arity() {
                return Err(CalcError::arity(format!(
                    "{name} takes {} argument(s), got {argc}",
                    def.arity()
                )));
            }
            output.push(Token::Function(name.clone()));
        }
    }
    Ok(())
}
