//! Dialogue acts: `act(slot='value'; slot; …)`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Slot {
    pub name: String,
    pub value: Option<String>,
}

impl Slot {
    pub fn new(name: impl Into<String>, value: Option<&str>) -> Self {
        Self { name: name.into(), value: value.map(str::to_string) }
    }
}

/// An act type plus an ordered slot list. Repeated slot names are kept in order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DialogueAct {
    pub act_type: String,
    pub slots: Vec<Slot>,
}

/// Values that name a polarity or a wildcard rather than an entity; they are
/// never looked up in the surface text.
pub const NON_LEXICAL_VALUES: &[&str] = &["yes", "no", "true", "false", "none", "dontcare", "dont_care"];

impl Slot {
    /// True when the value is a literal string that should appear in the text.
    pub fn is_lexical(&self) -> bool {
        match &self.value {
            None => false,
            Some(v) => {
                let v = v.trim().to_lowercase();
                !v.is_empty() && !NON_LEXICAL_VALUES.contains(&v.as_str())
            }
        }
    }
}

impl DialogueAct {
    pub fn new(act_type: impl Into<String>, slots: Vec<Slot>) -> Self {
        Self { act_type: act_type.into(), slots }
    }
}

impl FromStr for DialogueAct {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_da(s)
    }
}

fn is_act_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '?')
}

fn is_name_char(c: char) -> bool {
    c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_'
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Parse { offset: self.pos, message: message.into() })
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.bump();
        }
    }

    fn take_while(&mut self, f: impl Fn(char) -> bool) -> &'a str {
        let start = self.pos;
        while self.peek().is_some_and(&f) {
            self.bump();
        }
        &self.src[start..self.pos]
    }

    fn expect(&mut self, c: char) -> Result<()> {
        match self.peek() {
            Some(x) if x == c => {
                self.bump();
                Ok(())
            }
            Some(x) => self.err(format!("expected `{c}`, found `{x}`")),
            None => self.err(format!("expected `{c}`, found end of input")),
        }
    }

    fn quoted(&mut self, quote: char) -> Result<String> {
        let mut out = String::new();
        loop {
            match self.bump() {
                None => return self.err("unterminated quoted value"),
                Some('\\') => match self.bump() {
                    Some(c) => out.push(c),
                    None => return self.err("dangling escape"),
                },
                Some(c) if c == quote => return Ok(out),
                Some(c) => out.push(c),
            }
        }
    }

    fn slot(&mut self) -> Result<Slot> {
        let start = self.pos;
        let name = self.take_while(|c| !matches!(c, '=' | ';' | ')') && !c.is_whitespace());
        if name.is_empty() {
            return self.err("expected slot name");
        }
        if !name.chars().all(is_name_char) || name.starts_with(|c: char| c.is_ascii_digit()) {
            return Err(Error::Parse { offset: start, message: format!("slot name `{name}` is not a lowercase identifier") });
        }
        self.skip_ws();
        if self.peek() != Some('=') {
            return Ok(Slot { name: name.to_string(), value: None });
        }
        self.bump();
        self.skip_ws();
        let value = match self.peek() {
            Some(q @ ('\'' | '"')) => {
                self.bump();
                self.quoted(q)?
            }
            _ => self.take_while(|c| !matches!(c, ';' | ')')).trim_end().to_string(),
        };
        Ok(Slot { name: name.to_string(), value: Some(value) })
    }
}

/// Parses `act(name='v'; area=xyz; kids_allowed)`. Values may be single- or
/// double-quoted (with backslash escapes) or bare; slots may omit the value.
pub fn parse_da(text: &str) -> Result<DialogueAct> {
    let mut p = Parser { src: text, pos: 0 };
    p.skip_ws();
    let act = p.take_while(is_act_char);
    if act.is_empty() {
        return p.err("expected act type");
    }
    p.skip_ws();
    p.expect('(')?;
    p.skip_ws();
    let mut slots = Vec::new();
    if p.peek() != Some(')') {
        loop {
            slots.push(p.slot()?);
            p.skip_ws();
            match p.peek() {
                Some(';') => {
                    p.bump();
                    p.skip_ws();
                }
                Some(')') => break,
                Some(c) => return p.err(format!("expected `;` or `)`, found `{c}`")),
                None => return p.err("unclosed slot list"),
            }
        }
    }
    p.expect(')')?;
    p.skip_ws();
    if p.pos != text.len() {
        return p.err("trailing input after `)`");
    }
    Ok(DialogueAct { act_type: act.to_string(), slots })
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)?;
        if let Some(v) = &self.value {
            f.write_str("='")?;
            for c in v.chars() {
                if c == '\'' || c == '\\' {
                    f.write_str("\\")?;
                }
                write!(f, "{c}")?;
            }
            f.write_str("'")?;
        }
        Ok(())
    }
}

impl fmt::Display for DialogueAct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.act_type)?;
        for (i, s) in self.slots.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{s}")?;
        }
        f.write_str(")")
    }
}
