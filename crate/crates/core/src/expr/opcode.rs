use std::fmt;

/// Operator and built-in function codes of the expression machine.
///
/// Integers between the listed codes are reserved and never assigned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum OpCode {
    LBracket = 1,
    RBracket = 2,
    Mult = 3,
    Divide = 4,
    Subtract = 5,
    Plus = 6,
    /// Postfix `x%`, meaning `x / 100`.
    Percent = 7,
    Absolute = 101,
    CubeRoot = 105,
    Exp = 109,
    /// Natural logarithm.
    Log = 112,
    Log10 = 113,
    Power = 116,
    SqRoot = 119,
    /// `cubic(x) = x³`.
    Cubic = 122,
    /// `poly(x, c0, c1, ..., cN) = c0 + c1·x + ... + cN·x^N`.
    Poly = 124,
}

impl OpCode {
    pub const ALL: [OpCode; 16] = [
        OpCode::LBracket,
        OpCode::RBracket,
        OpCode::Mult,
        OpCode::Divide,
        OpCode::Subtract,
        OpCode::Plus,
        OpCode::Percent,
        OpCode::Absolute,
        OpCode::CubeRoot,
        OpCode::Exp,
        OpCode::Log,
        OpCode::Log10,
        OpCode::Power,
        OpCode::SqRoot,
        OpCode::Cubic,
        OpCode::Poly,
    ];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<OpCode> {
        OpCode::ALL.into_iter().find(|op| op.code() == code)
    }

    /// Surface spelling: the symbol for operators, the call name for functions.
    pub fn symbol(self) -> &'static str {
        match self {
            OpCode::LBracket => "(",
            OpCode::RBracket => ")",
            OpCode::Mult => "*",
            OpCode::Divide => "/",
            OpCode::Subtract => "-",
            OpCode::Plus => "+",
            OpCode::Percent => "%",
            OpCode::Absolute => "abs",
            OpCode::CubeRoot => "cbrt",
            OpCode::Exp => "exp",
            OpCode::Log => "log",
            OpCode::Log10 => "log10",
            OpCode::Power => "pow",
            OpCode::SqRoot => "sqrt",
            OpCode::Cubic => "cubic",
            OpCode::Poly => "poly",
        }
    }

    /// Operand count; `None` for the variadic `poly`. Brackets take none.
    pub fn arity(self) -> Option<usize> {
        match self {
            OpCode::LBracket | OpCode::RBracket => Some(0),
            OpCode::Percent
            | OpCode::Absolute
            | OpCode::CubeRoot
            | OpCode::Exp
            | OpCode::Log
            | OpCode::Log10
            | OpCode::SqRoot
            | OpCode::Cubic => Some(1),
            OpCode::Mult | OpCode::Divide | OpCode::Subtract | OpCode::Plus | OpCode::Power => {
                Some(2)
            }
            OpCode::Poly => None,
        }
    }

    pub fn is_function(self) -> bool {
        self.code() >= 101
    }

    pub fn from_function_name(name: &str) -> Option<OpCode> {
        OpCode::ALL
            .into_iter()
            .find(|op| op.is_function() && op.symbol() == name)
    }

    /// Binding strength of infix operators; higher binds tighter.
    pub(crate) fn precedence(self) -> u8 {
        match self {
            OpCode::Plus | OpCode::Subtract => 1,
            OpCode::Mult | OpCode::Divide => 2,
            OpCode::Percent => 3,
            _ => 0,
        }
    }

    pub(crate) fn is_infix(self) -> bool {
        matches!(
            self,
            OpCode::Plus | OpCode::Subtract | OpCode::Mult | OpCode::Divide
        )
    }
}

impl fmt::Display for OpCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codes_are_fixed() {
        let expected: [(OpCode, u8); 16] = [
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
        for (op, code) in expected {
            assert_eq!(op.code(), code, "{op:?}");
            assert_eq!(OpCode::from_code(code), Some(op));
        }
    }

    #[test]
    fn gaps_stay_unassigned() {
        for code in [0u8, 8, 100, 102, 103, 104, 106, 110, 125, 255] {
            assert_eq!(OpCode::from_code(code), None);
        }
    }

    #[test]
    fn function_lookup_is_case_sensitive() {
        assert_eq!(OpCode::from_function_name("log10"), Some(OpCode::Log10));
        assert_eq!(OpCode::from_function_name("LOG10"), None);
        assert_eq!(OpCode::from_function_name("+"), None);
    }
}
