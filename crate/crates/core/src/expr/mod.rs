//! The expression machine: infix source → suffix form → stack evaluation.
//!
//! Operators and table functions carry fixed numeric opcodes (see
//! [`OpCode`]). Registered functions such as `NPV` or `field_average` are
//! looked up by name in a [`FunctionTable`].

mod compiler;
mod functions;
mod lexer;
mod machine;
mod opcode;

use std::sync::{Arc, LazyLock};

pub use compiler::{to_suffix, SuffixExpression};
pub use functions::{ArgKind, FunctionDef, FunctionTable, NativeFn, Value};
pub use lexer::{tokenize, Token};
pub use machine::{eval_suffix, horner, Env};
pub use opcode::OpCode;

use crate::status::CalcResult;

static STANDARD: LazyLock<Arc<FunctionTable>> = LazyLock::new(|| {
    let mut table = FunctionTable::new();
    crate::finance::register_functions(&mut table).expect("financial functions register");
    crate::project::register_functions(&mut table).expect("field functions register");
    Arc::new(table)
});

/// The built-in function table: `NPV`, `IRR`, `IPT`, `IPR` and `field_average`.
pub fn standard_functions() -> Arc<FunctionTable> {
    STANDARD.clone()
}

/// Compiles `source` against the standard function table.
pub fn compile(source: &str) -> CalcResult<SuffixExpression> {
    compile_with(source, standard_functions())
}

pub fn compile_with(source: &str, functions: Arc<FunctionTable>) -> CalcResult<SuffixExpression> {
    let tokens = tokenize(source, &functions)?;
    to_suffix(&tokens, functions)
}

/// Compiles and evaluates in one step.
pub fn evaluate(source: &str, env: &Env) -> CalcResult {
    eval_suffix(&compile(source)?, env)
}
