//! Line-oriented document syntax.
//!
//! ```text
//! # comment
//! chart M vars=x,y
//! connection N base=M rank=2
//!   gamma[0,1,1] = x^2 - 1/2*y
//! check c1 kind=im target=C
//! ```
//!
//! A declaration header starts in column 0: `kind name key=value ...`.
//! Indented lines below it are entries `key[i,j,..] = value` with 0-based
//! indices; the index list may be omitted.

use std::fmt;

use super::InputError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawEntry {
    pub key: String,
    pub index: Vec<usize>,
    pub value: String,
    pub line: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawDecl {
    pub kind: String,
    pub name: String,
    pub attrs: Vec<(String, String)>,
    pub entries: Vec<RawEntry>,
    pub line: usize,
}

impl RawDecl {
    pub fn new(kind: &str, name: &str) -> RawDecl {
        RawDecl {
            kind: kind.into(),
            name: name.into(),
            attrs: Vec::new(),
            entries: Vec::new(),
            line: 0,
        }
    }

    pub fn attr(mut self, key: &str, value: impl Into<String>) -> RawDecl {
        self.attrs.push((key.into(), value.into()));
        self
    }

    pub fn entry(&mut self, key: &str, index: Vec<usize>, value: impl Into<String>) {
        self.entries.push(RawEntry {
            key: key.into(),
            index,
            value: value.into(),
            line: 0,
        });
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.attrs
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str, InputError> {
        self.get(key).ok_or_else(|| {
            InputError::at(
                self.line,
                format!("{} `{}` needs `{key}=`", self.kind, self.name),
            )
        })
    }
}

fn strip_comment(line: &str) -> &str {
    let mut in_quote = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => in_quote = !in_quote,
            '#' if !in_quote => return &line[..i],
            _ => {}
        }
    }
    line
}

fn split_tokens(s: &str, line: usize) -> Result<Vec<String>, InputError> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut in_quote = false;
    for c in s.chars() {
        match c {
            '"' => in_quote = !in_quote,
            c if c.is_whitespace() && !in_quote => {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
            }
            c => cur.push(c),
        }
    }
    if in_quote {
        return Err(InputError::at(line, "unterminated quote"));
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    Ok(out)
}

fn parse_entry(body: &str, line: usize) -> Result<RawEntry, InputError> {
    let (lhs, value) = body
        .split_once('=')
        .ok_or_else(|| InputError::at(line, "entry needs `key[...] = value`"))?;
    let lhs = lhs.trim();
    let (key, index) = match lhs.split_once('[') {
        Some((k, rest)) => {
            let inner = rest
                .strip_suffix(']')
                .ok_or_else(|| InputError::at(line, "unclosed index bracket"))?;
            let index = inner
                .split(',')
                .map(|p| {
                    p.trim()
                        .parse::<usize>()
                        .map_err(|_| InputError::at(line, format!("bad index `{}`", p.trim())))
                })
                .collect::<Result<Vec<_>, _>>()?;
            (k.trim(), index)
        }
        None => (lhs, Vec::new()),
    };
    if key.is_empty() {
        return Err(InputError::at(line, "entry key is empty"));
    }
    let value = value.trim();
    if value.is_empty() {
        return Err(InputError::at(line, "entry value is empty"));
    }
    Ok(RawEntry {
        key: key.into(),
        index,
        value: value.into(),
        line,
    })
}

pub fn parse_document(text: &str) -> Result<Vec<RawDecl>, InputError> {
    let mut decls: Vec<RawDecl> = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = strip_comment(raw);
        if content.trim().is_empty() {
            continue;
        }
        if content.starts_with(char::is_whitespace) {
            let decl = decls
                .last_mut()
                .ok_or_else(|| InputError::at(line, "entry outside of a declaration"))?;
            decl.entries.push(parse_entry(content.trim(), line)?);
            continue;
        }
        let tokens = split_tokens(content, line)?;
        if tokens.len() < 2 {
            return Err(InputError::at(line, "declaration needs a kind and a name"));
        }
        let mut attrs = Vec::new();
        for t in &tokens[2..] {
            let (k, v) = t
                .split_once('=')
                .ok_or_else(|| InputError::at(line, format!("expected key=value, found `{t}`")))?;
            if attrs.iter().any(|(a, _): &(String, String)| a == k) {
                return Err(InputError::at(line, format!("duplicate attribute `{k}`")));
            }
            attrs.push((k.to_string(), v.to_string()));
        }
        decls.push(RawDecl {
            kind: tokens[0].clone(),
            name: tokens[1].clone(),
            attrs,
            entries: Vec::new(),
            line,
        });
    }
    Ok(decls)
}

fn quote(v: &str) -> String {
    if v.is_empty() || v.chars().any(|c| c.is_whitespace() || c == '#') {
        format!("\"{v}\"")
    } else {
        v.to_string()
    }
}

impl fmt::Display for RawDecl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.kind, self.name)?;
        for (k, v) in &self.attrs {
            write!(f, " {k}={}", quote(v))?;
        }
        writeln!(f)?;
        for e in &self.entries {
            if e.index.is_empty() {
                writeln!(f, "  {} = {}", e.key, e.value)?;
            } else {
                let idx: Vec<String> = e.index.iter().map(|i| i.to_string()).collect();
                writeln!(f, "  {}[{}] = {}", e.key, idx.join(","), e.value)?;
            }
        }
        Ok(())
    }
}

pub fn format_document(decls: &[RawDecl]) -> String {
    decls
        .iter()
        .map(|d| d.to_string())
        .collect::<Vec<_>>()
        .join("\n")
}
