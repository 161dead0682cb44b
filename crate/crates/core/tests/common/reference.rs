//! Reference implementations written without touching the library's lexer,
//! compiler or stack machine.

use std::collections::HashMap;

use eventbase::Status;

pub type RefResult = Result<f64, Status>;

fn checked(v: f64) -> RefResult {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Status::DomainError)
    }
}

/// Recursive-descent evaluator over the infix text.
///
/// expr    := term (('+' | '-') term)*
/// term    := postfix (('*' | '/') postfix)*
/// postfix := unary '%'*
/// unary   := ('-' | '+') unary | primary
/// primary := number | '(' expr ')' | name '(' args ')' | name
pub fn eval_infix(src: &str, vars: &HashMap<String, f64>) -> RefResult {
    let mut p = Parser {
        chars: src.chars().filter(|c| !c.is_whitespace()).collect(),
        pos: 0,
        vars,
    };
    let v = p.expr()?;
    if p.pos != p.chars.len() {
        return Err(Status::SyntaxError);
    }
    Ok(v)
}

struct Parser<'v> {
    chars: Vec<char>,
    pos: usize,
    vars: &'v HashMap<String, f64>,
}

impl Parser<'_> {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> RefResult {
        let mut acc = self.term()?;
        loop {
            if self.eat('+') {
                acc = checked(acc + self.term()?)?;
            } else if self.eat('-') {
                acc = checked(acc - self.term()?)?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> RefResult {
        let mut acc = self.postfix()?;
        loop {
            if self.eat('*') {
                acc = checked(acc * self.postfix()?)?;
            } else if self.eat('/') {
                let d = self.postfix()?;
                if d == 0.0 {
                    return Err(Status::DivideByZero);
                }
                acc = checked(acc / d)?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn postfix(&mut self) -> RefResult {
        let mut v = self.unary()?;
        while self.eat('%') {
            v = checked(v / 100.0)?;
        }
        Ok(v)
    }

    fn unary(&mut self) -> RefResult {
        if self.eat('-') {
            return checked(0.0 - self.unary()?);
        }
        if self.eat('+') {
            return self.unary();
        }
        self.primary()
    }

    fn primary(&mut self) -> RefResult {
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let v = self.expr()?;
                if !self.eat(')') {
                    return Err(Status::SyntaxError);
                }
                Ok(v)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => {
                let start = self.pos;
                while matches!(self.peek(), Some(c) if c.is_ascii_digit() || c == '.') {
                    self.pos += 1;
                }
                let text: String = self.chars[start..self.pos].iter().collect();
                text.parse().map_err(|_| Status::SyntaxError)
            }
            Some(c) if c.is_ascii_alphabetic() || c == '_' => {
                let start = self.pos;
                while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '_') {
                    self.pos += 1;
                }
                let name: String = self.chars[start..self.pos].iter().collect();
                if self.eat('(') {
                    let mut args = vec![self.expr()?];
                    while self.eat(',') {
                        args.push(self.expr()?);
                    }
                    if !self.eat(')') {
                        return Err(Status::SyntaxError);
                    }
                    call(&name, &args)
                } else {
                    self.vars.get(&name).copied().ok_or(Status::UnknownSymbol)
                }
            }
            _ => Err(Status::SyntaxError),
        }
    }
}

fn call(name: &str, args: &[f64]) -> RefResult {
    let one = |f: fn(f64) -> f64| {
        if args.len() == 1 {
            checked(f(args[0]))
        } else {
            Err(Status::ArityError)
        }
    };
    match name {
        "abs" => one(f64::abs),
        "cbrt" => one(f64::cbrt),
        "exp" => one(f64::exp),
        "cubic" => one(|x| x * x * x),
        "log" | "log10" | "sqrt" => {
            let x = *args.first().ok_or(Status::ArityError)?;
            let bad = if name == "sqrt" { x < 0.0 } else { x <= 0.0 };
            if bad {
                return Err(Status::DomainError);
            }
            one(match name {
                "log" => f64::ln,
                "log10" => f64::log10,
                _ => f64::sqrt,
            })
        }
        "pow" if args.len() == 2 => checked(args[0].powf(args[1])),
        "poly" if args.len() >= 2 => {
            // Horner, innermost coefficient first.
            let x = args[0];
            let mut acc = 0.0;
            for c in args[1..].iter().rev() {
                acc = acc * x + c;
            }
            checked(acc)
        }
        "pow" | "poly" => Err(Status::ArityError),
        _ => Err(Status::UnknownSymbol),
    }
}

/// `Σ c_k x^k` term by term with `powi`, plus the magnitude `Σ |c_k x^k|`
/// used to scale tolerances.
pub fn poly_naive(x: f64, coeffs: &[f64]) -> (f64, f64) {
    coeffs
        .iter()
        .enumerate()
        .fold((0.0, 0.0), |(s, m), (k, c)| {
            let term = c * x.powi(k as i32);
            (s + term, m + term.abs())
        })
}

/// `Σ ncf[t] / (1+i)^t`, plus `Σ |term|`.
pub fn npv_naive(ncf: &[f64], i: f64) -> (f64, f64) {
    ncf.iter().enumerate().fold((0.0, 0.0), |(s, m), (t, c)| {
        let term = c / (1.0 + i).powi(t as i32);
        (s + term, m + term.abs())
    })
}

/// Positive root of `a + b/x + c/x^2 = 0` in `x = 1 + i`, i.e. the IRR of a
/// three-period flow solved as the quadratic `a x^2 + b x + c = 0`.
pub fn irr_three_period(a: f64, b: f64, c: f64) -> f64 {
    let disc = (b * b - 4.0 * a * c).sqrt();
    let roots = [(-b + disc) / (2.0 * a), (-b - disc) / (2.0 * a)];
    let x = roots
        .into_iter()
        .filter(|x| *x > 0.0)
        .fold(f64::NAN, f64::max);
    x - 1.0
}

/// First period at which the running total turns non-negative.
pub fn recovery_period(ncf: &[f64]) -> Option<usize> {
    let mut total = 0.0;
    for (t, c) in ncf.iter().enumerate() {
        total += c;
        if total >= 0.0 {
            return Some(t);
        }
    }
    None
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}
