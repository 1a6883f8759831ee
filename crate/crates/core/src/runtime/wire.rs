//! Line-oriented wire format:
//! `seq=<u64> kind=<TICK|HALT|STATUS|DATA> node=<id> [status=<R|S|F>] [type=<t> value=<v>]\n`.
//!
//! Fields appear in exactly that order. A field value that is empty or
//! contains whitespace, `"`, `\` or `=` is written in double quotes with
//! backslash escapes. Reals use the shortest text that reads back to the
//! same bits; NaNs carry their bit pattern as `nan:<hex>`.

use std::fmt;

use thiserror::Error;

use crate::bt::Status;
use crate::worldmodel::{Value, ValueType};

#[derive(Clone, Debug, PartialEq)]
pub enum Body {
    Tick,
    Halt,
    Status(Status),
    Data(Value),
}

impl Body {
    pub fn kind(&self) -> &'static str {
        match self {
            Body::Tick => "TICK",
            Body::Halt => "HALT",
            Body::Status(_) => "STATUS",
            Body::Data(_) => "DATA",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Message {
    pub seq: u64,
    /// Control messages name the remote leaf; data messages name the
    /// receiving port.
    pub node: String,
    pub body: Body,
}

impl Message {
    pub fn new(seq: u64, node: impl Into<String>, body: Body) -> Self {
        Message {
            seq,
            node: node.into(),
            body,
        }
    }

    /// Equality with reals compared by bit pattern.
    pub fn bit_eq(&self, other: &Message) -> bool {
        self.seq == other.seq
            && self.node == other.node
            && match (&self.body, &other.body) {
                (Body::Data(a), Body::Data(b)) => a.bit_eq(b),
                (a, b) => a == b,
            }
    }
}

impl fmt::Display for Message {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(encode(self).trim_end())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("decode error at byte {offset}: {message}")]
pub struct DecodeError {
    /// Byte offset into the input where decoding failed.
    pub offset: usize,
    pub message: String,
}

fn needs_quotes(s: &str) -> bool {
    s.is_empty() || s.chars().any(|c| c.is_whitespace() || c.is_control() || matches!(c, '"' | '\\' | '='))
}

fn push_field(out: &mut String, key: &str, value: &str) {
    out.push_str(key);
    out.push('=');
    if !needs_quotes(value) {
        out.push_str(value);
        return;
    }
    out.push('"');
    for c in value.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
}

fn real_text(r: f64) -> String {
    if r.is_nan() {
        format!("nan:{:x}", r.to_bits())
    } else {
        format!("{r:?}")
    }
}

fn value_text(v: &Value) -> String {
    match v {
        Value::Real(r) => real_text(*r),
        other => other.to_string(),
    }
}

pub fn encode(m: &Message) -> String {
    let mut out = String::new();
    push_field(&mut out, "seq", &m.seq.to_string());
    out.push(' ');
    push_field(&mut out, "kind", m.body.kind());
    out.push(' ');
    push_field(&mut out, "node", &m.node);
    match &m.body {
        Body::Status(s) => {
            out.push(' ');
            push_field(&mut out, "status", &s.letter().to_string());
        }
        Body::Data(v) => {
            out.push(' ');
            push_field(&mut out, "type", v.ty().name());
            out.push(' ');
            push_field(&mut out, "value", &value_text(v));
        }
        Body::Tick | Body::Halt => {}
    }
    out.push('\n');
    out
}

struct Reader<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Reader<'a> {
    fn err<T>(&self, offset: usize, message: impl Into<String>) -> Result<T, DecodeError> {
        Err(DecodeError {
            offset,
            message: message.into(),
        })
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    /// Reads `key=value`, returning the value and its start offset.
    fn field(&mut self, key: &str) -> Result<(String, usize), DecodeError> {
        let start = self.pos;
        if !self.rest().starts_with(key) || !self.rest()[key.len()..].starts_with('=') {
            return self.err(start, format!("expected `{key}=`"));
        }
        self.pos += key.len() + 1;
        let vstart = self.pos;
        if self.rest().starts_with('"') {
            self.pos += 1;
            let mut value = String::new();
            let mut chars = self.rest().char_indices();
            loop {
                let Some((i, c)) = chars.next() else {
                    return self.err(self.src.len(), "unterminated quoted value");
                };
                match c {
                    '"' => {
                        self.pos += i + 1;
                        return Ok((value, vstart));
                    }
                    '\\' => {
                        let Some((j, e)) = chars.next() else {
                            return self.err(self.src.len(), "unterminated escape");
                        };
                        value.push(match e {
                            '"' => '"',
                            '\\' => '\\',
                            'n' => '\n',
                            'r' => '\r',
                            't' => '\t',
                            _ => return self.err(self.pos + j, format!("unknown escape `\\{e}`")),
                        });
                    }
                    c => value.push(c),
                }
            }
        }
        let len = self
            .rest()
            .find([' ', '\n'])
            .unwrap_or(self.rest().len());
        let value = self.rest()[..len].to_string();
        if value.is_empty() {
            return self.err(vstart, format!("empty value for `{key}`"));
        }
        self.pos += len;
        Ok((value, vstart))
    }

    fn space(&mut self) -> Result<(), DecodeError> {
        if self.rest().starts_with(' ') {
            self.pos += 1;
            Ok(())
        } else if self.rest().is_empty() {
            self.err(self.pos, "truncated line")
        } else {
            self.err(self.pos, "expected a space")
        }
    }
}

fn parse_value(ty: ValueType, text: &str) -> Option<Value> {
    if ty == ValueType::Real {
        if let Some(hex) = text.strip_prefix("nan:") {
            let bits = u64::from_str_radix(hex, 16).ok()?;
            let r = f64::from_bits(bits);
            return r.is_nan().then_some(Value::Real(r));
        }
        if text.to_ascii_lowercase().contains("nan") {
            return None;
        }
    }
    Value::parse_as(ty, text)
}

/// Decodes one newline-terminated message. Trailing input after the
/// newline is an error.
pub fn decode(input: &str) -> Result<Message, DecodeError> {
    let mut r = Reader { src: input, pos: 0 };
    let (seq_text, at) = r.field("seq")?;
    let seq = seq_text.parse::<u64>().or_else(|_| r.err(at, "seq is not an unsigned integer"))?;
    r.space()?;
    let (kind, kind_at) = r.field("kind")?;
    r.space()?;
    let (node, _) = r.field("node")?;
    let body = match kind.as_str() {
        "TICK" => Body::Tick,
        "HALT" => Body::Halt,
        "STATUS" => {
            r.space()?;
            let (s, at) = r.field("status")?;
            let mut chars = s.chars();
            match (chars.next().and_then(Status::from_letter), chars.next()) {
                (Some(status), None) => Body::Status(status),
                _ => return r.err(at, "status must be R, S or F"),
            }
        }
        "DATA" => {
            r.space()?;
            let (t, at) = r.field("type")?;
            let ty = ValueType::from_name(&t).map_or_else(|| r.err(at, format!("unknown type `{t}`")), Ok)?;
            r.space()?;
            let (v, at) = r.field("value")?;
            let value = parse_value(ty, &v).map_or_else(|| r.err(at, format!("`{v}` is not a valid {t}")), Ok)?;
            Body::Data(value)
        }
        _ => return r.err(kind_at, format!("unknown kind `{kind}`")),
    };
    match r.rest() {
        "\n" => Ok(Message { seq, node, body }),
        "" => r.err(r.pos, "truncated line"),
        _ => r.err(r.pos, "unexpected trailing input"),
    }
}
