//! Recursive-descent parser for the condition grammar:
//!
//! ```text
//! cond    := "true" | literal ("AND" literal)*
//! literal := IDENT OP operand
//! OP      := "==" | "!=" | "<" | "<=" | ">" | ">="
//! operand := BOOL | INT | REAL | STRING | IDENT
//! ```
//!
//! Strings are single-quoted (`'auto'`) with `\'` and `\\` escapes, so
//! conditions can sit inside double-quoted DSL strings. Error offsets are
//! 1-based character positions; end of input is `len + 1`.

use super::condition::{CmpOp, Condition, Literal, Operand};
use super::state::Value;
use super::WorldError;

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Op(CmpOp),
    Int(i64),
    Real(f64),
    Bool(bool),
    Str(String),
    And,
}

struct Lexer {
    chars: Vec<char>,
    pos: usize,
}

impl Lexer {
    fn new(src: &str) -> Self {
        Lexer {
            chars: src.chars().collect(),
            pos: 0,
        }
    }

    fn err(&self, at: usize, expected: &str) -> WorldError {
        WorldError::Syntax {
            offset: at + 1,
            expected: expected.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    /// Next token and its 0-based start, or `None` at end of input.
    fn next(&mut self, expected: &str) -> Result<Option<(Tok, usize)>, WorldError> {
        self.skip_ws();
        let start = self.pos;
        let Some(&c) = self.chars.get(self.pos) else {
            return Ok(None);
        };
        let tok = if c.is_ascii_alphabetic() || c == '_' {
            while self
                .chars
                .get(self.pos)
                .is_some_and(|c| c.is_ascii_alphanumeric() || *c == '_' || *c == '.')
            {
                self.pos += 1;
            }
            let word: String = self.chars[start..self.pos].iter().collect();
            match word.as_str() {
                "AND" => Tok::And,
                "true" => Tok::Bool(true),
                "false" => Tok::Bool(false),
                _ => Tok::Ident(word),
            }
        } else if c.is_ascii_digit() || c == '-' || c == '+' {
            self.number(start)?
        } else if c == '\'' {
            self.string(start)?
        } else {
            let two: String = self.chars[start..(start + 2).min(self.chars.len())]
                .iter()
                .collect();
            let (op, len) = match (two.as_str(), c) {
                ("==", _) => (CmpOp::Eq, 2),
                ("!=", _) => (CmpOp::Ne, 2),
                ("<=", _) => (CmpOp::Le, 2),
                (">=", _) => (CmpOp::Ge, 2),
                (_, '<') => (CmpOp::Lt, 1),
                (_, '>') => (CmpOp::Gt, 1),
                _ => return Err(self.err(start, expected)),
            };
            self.pos += len;
            Tok::Op(op)
        };
        Ok(Some((tok, start)))
    }

    fn number(&mut self, start: usize) -> Result<Tok, WorldError> {
        let at = |s: &Self, i: usize| s.chars.get(i).copied();
        let mut i = start;
        if matches!(at(self, i), Some('-' | '+')) {
            i += 1;
        }
        let digits = |s: &Self, mut i: usize| {
            while at(s, i).is_some_and(|c| c.is_ascii_digit()) {
                i += 1;
            }
            i
        };
        let int_end = digits(self, i);
        if int_end == i {
            return Err(self.err(i, "digit"));
        }
        i = int_end;
        let mut real = false;
        if at(self, i) == Some('.') {
            let frac_end = digits(self, i + 1);
            if frac_end == i + 1 {
                return Err(self.err(i + 1, "digit"));
            }
            i = frac_end;
            real = true;
        }
        if matches!(at(self, i), Some('e' | 'E')) {
            let mut j = i + 1;
            if matches!(at(self, j), Some('-' | '+')) {
                j += 1;
            }
            let exp_end = digits(self, j);
            if exp_end == j {
                return Err(self.err(j, "digit"));
            }
            i = exp_end;
            real = true;
        }
        let text: String = self.chars[start..i].iter().collect();
        self.pos = i;
        if real {
            text.parse()
                .map(Tok::Real)
                .map_err(|_| self.err(start, "number"))
        } else {
            text.parse()
                .map(Tok::Int)
                .map_err(|_| self.err(start, "integer in range"))
        }
    }

    fn string(&mut self, start: usize) -> Result<Tok, WorldError> {
        let mut out = String::new();
        let mut i = start + 1;
        loop {
            match self.chars.get(i) {
                None => return Err(self.err(i, "closing quote")),
                Some('\'') => break,
                Some('\\') => {
                    match self.chars.get(i + 1) {
                        Some(c @ ('\'' | '\\')) => out.push(*c),
                        _ => return Err(self.err(i + 1, "escaped quote or backslash")),
                    }
                    i += 2;
                }
                Some(c) => {
                    out.push(*c);
                    i += 1;
                }
            }
        }
        self.pos = i + 1;
        Ok(Tok::Str(out))
    }
}

pub fn parse_condition(text: &str) -> Result<Condition, WorldError> {
    let mut lx = Lexer::new(text);
    let end = lx.chars.len();
    let mut literals = Vec::new();

    // Lone `true` is the empty conjunction.
    let mut probe = Lexer::new(text);
    if let Ok(Some((Tok::Bool(true), _))) = probe.next("") {
        if probe.next("end of input")?.is_none() {
            return Ok(Condition::always());
        }
    }

    loop {
        let var = match lx.next("variable name")? {
            Some((Tok::Ident(name), _)) => name,
            Some((_, at)) => return Err(lx.err(at, "variable name")),
            None => return Err(lx.err(end, "variable name")),
        };
        let op = match lx.next("comparison operator")? {
            Some((Tok::Op(op), _)) => op,
            Some((_, at)) => return Err(lx.err(at, "comparison operator")),
            None => return Err(lx.err(end, "comparison operator")),
        };
        let rhs = match lx.next("value")? {
            Some((Tok::Int(i), _)) => Operand::Const(Value::Int(i)),
            Some((Tok::Real(r), _)) => Operand::Const(Value::Real(r)),
            Some((Tok::Bool(b), _)) => Operand::Const(Value::Bool(b)),
            Some((Tok::Str(s), _)) => Operand::Const(Value::Str(s)),
            Some((Tok::Ident(v), _)) => Operand::Var(v),
            Some((_, at)) => return Err(lx.err(at, "value")),
            None => return Err(lx.err(end, "value")),
        };
        literals.push(Literal { var, op, rhs });
        match lx.next("AND")? {
            None => break,
            Some((Tok::And, _)) => continue,
            Some((_, at)) => return Err(lx.err(at, "AND or end of input")),
        }
    }
    Ok(Condition::new(literals))
}
