//! `@tag@` templates, the restricted settings format and flat JSON bindings.
//!
//! Tags resolve from bindings first, then settings parameters, then
//! settings defaults. Substitution is a single pass: inserted text is never
//! scanned for further tags. `@@` renders a literal `@`.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::lang::{parse_model, LangError};
use crate::model::SystemModel;

/// One or more ASCII letters or underscores.
pub fn is_tag_name(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphabetic() || c == '_')
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Piece {
    Text(String),
    Tag { name: String, line: usize, col: usize },
}

/// A parsed template.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    pieces: Vec<Piece>,
}

impl Template {
    pub fn parse(source: &str) -> Result<Template, TemplateError> {
        let mut pieces = Vec::new();
        let mut text = String::new();
        let mut chars = source.chars().peekable();
        let (mut line, mut col) = (1usize, 1usize);
        while let Some(c) = chars.next() {
            if c != '@' {
                text.push(c);
                if c == '\n' {
                    line += 1;
                    col = 1;
                } else {
                    col += 1;
                }
                continue;
            }
            let (tline, tcol) = (line, col);
            if chars.peek() == Some(&'@') {
                chars.next();
                text.push('@');
                col += 2;
                continue;
            }
            let mut name = String::new();
            while let Some(&n) = chars.peek() {
                if n.is_ascii_alphabetic() || n == '_' {
                    name.push(n);
                    chars.next();
                } else {
                    break;
                }
            }
            if name.is_empty() || chars.next() != Some('@') {
                return Err(TemplateError::MalformedTag {
                    line: tline,
                    col: tcol,
                });
            }
            col += name.chars().count() + 2;
            if !text.is_empty() {
                pieces.push(Piece::Text(std::mem::take(&mut text)));
            }
            pieces.push(Piece::Tag {
                name,
                line: tline,
                col: tcol,
            });
        }
        if !text.is_empty() {
            pieces.push(Piece::Text(text));
        }
        Ok(Template { pieces })
    }

    /// Distinct tag names in order of first appearance.
    pub fn tags(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for p in &self.pieces {
            if let Piece::Tag { name, .. } = p {
                if !out.contains(&name.as_str()) {
                    out.push(name);
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Scalar {
    Int(i64),
    Str(String),
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Int(n) => write!(f, "{n}"),
            Scalar::Str(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Settings {
    pub parameters: BTreeMap<String, Scalar>,
    pub defaults: BTreeMap<String, String>,
}

impl Settings {
    pub fn int_parameter(&self, key: &str) -> Option<i64> {
        match self.parameters.get(key)? {
            Scalar::Int(n) => Some(*n),
            Scalar::Str(_) => None,
        }
    }

    /// Serializes to the restricted settings format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if !self.parameters.is_empty() {
            out.push_str("parameters:\n");
            for (k, v) in &self.parameters {
                match v {
                    Scalar::Int(n) => out.push_str(&format!("  {k}: {n}\n")),
                    Scalar::Str(s) => out.push_str(&format!("  {k}: {}\n", quote(s))),
                }
            }
        }
        if !self.defaults.is_empty() {
            out.push_str("defaults:\n");
            for (k, v) in &self.defaults {
                out.push_str(&format!("  {k}: {}\n", quote(v)));
            }
        }
        out
    }
}

fn quote(s: &str) -> String {
    let mut out = String::from("\"");
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Tag values supplied by a generator or by hand: a flat JSON object of
/// strings.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Bindings(pub BTreeMap<String, String>);

impl Bindings {
    pub fn new() -> Bindings {
        Bindings::default()
    }

    pub fn insert(&mut self, tag: impl Into<String>, value: impl Into<String>) {
        self.0.insert(tag.into(), value.into());
    }

    pub fn get(&self, tag: &str) -> Option<&str> {
        self.0.get(tag).map(String::as_str)
    }

    pub fn from_json(text: &str) -> Result<Bindings, TemplateError> {
        let map: BTreeMap<String, String> = serde_json::from_str(text)
            .map_err(|e| TemplateError::Bindings(e.to_string()))?;
        if let Some(bad) = map.keys().find(|k| !is_tag_name(k)) {
            return Err(TemplateError::Bindings(format!("`{bad}` is not a tag name")));
        }
        Ok(Bindings(map))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.0).expect("string map serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TemplateError {
    #[error("malformed tag at line {line}, column {col} (write `@@` for a literal `@`)")]
    MalformedTag { line: usize, col: usize },
    #[error("unresolved tag {0}")]
    Unresolved(String),
    #[error("settings line {line}: {message}")]
    Settings { line: usize, message: String },
    #[error("bindings: {0}")]
    Bindings(String),
    #[error("rendered model does not parse{}: {source}", .tag.as_ref().map(|t| format!(" (inside value of tag `{t}`)")).unwrap_or_default())]
    Model {
        tag: Option<String>,
        #[source]
        source: LangError,
    },
}

/// Output of [`render`]: the model text and its parsed form.
#[derive(Debug, Clone)]
pub struct Rendered {
    pub text: String,
    pub model: SystemModel,
}

struct Span {
    tag: String,
    start: (usize, usize),
    end: (usize, usize),
}

/// Substitutes every tag and parses the result as a model.
pub fn render(
    template: &Template,
    bindings: &Bindings,
    settings: &Settings,
) -> Result<Rendered, TemplateError> {
    let text_and_spans = substitute(template, bindings, settings)?;
    let (text, spans) = text_and_spans;
    match parse_model(&text) {
        Ok(model) => Ok(Rendered { text, model }),
        Err(source) => {
            let tag = match &source {
                LangError::Syntax(e) => spans
                    .iter()
                    .find(|s| s.start <= (e.line, e.col) && (e.line, e.col) < s.end)
                    .map(|s| s.tag.clone()),
                LangError::Model(_) => None,
            };
            Err(TemplateError::Model { tag, source })
        }
    }
}

/// Substitution only, without the model parse.
pub fn render_text(
    template: &Template,
    bindings: &Bindings,
    settings: &Settings,
) -> Result<String, TemplateError> {
    Ok(substitute(template, bindings, settings)?.0)
}

fn substitute(
    template: &Template,
    bindings: &Bindings,
    settings: &Settings,
) -> Result<(String, Vec<Span>), TemplateError> {
    let mut out = String::new();
    let mut spans = Vec::new();
    let (mut line, mut col) = (1usize, 1usize);
    let advance = |s: &str, line: &mut usize, col: &mut usize| {
        for c in s.chars() {
            if c == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
        }
    };
    for piece in &template.pieces {
        match piece {
            Piece::Text(t) => {
                out.push_str(t);
                advance(t, &mut line, &mut col);
            }
            Piece::Tag { name, .. } => {
                let value = bindings
                    .get(name)
                    .map(str::to_string)
                    .or_else(|| settings.parameters.get(name).map(Scalar::to_string))
                    .or_else(|| settings.defaults.get(name).cloned())
                    .ok_or_else(|| TemplateError::Unresolved(name.clone()))?;
                let start = (line, col);
                out.push_str(&value);
                advance(&value, &mut line, &mut col);
                spans.push(Span {
                    tag: name.clone(),
                    start,
                    end: (line, col),
                });
            }
        }
    }
    Ok((out, spans))
}

/// Parses the restricted settings format: top-level `parameters:` and
/// `defaults:` mappings of scalars, `#` comments, nothing deeper.
pub fn parse_settings(text: &str) -> Result<Settings, TemplateError> {
    #[derive(Clone, Copy, PartialEq)]
    enum Section {
        Parameters,
        Defaults,
    }
    let err = |line: usize, message: &str| TemplateError::Settings {
        line,
        message: message.to_string(),
    };
    let mut settings = Settings::default();
    let mut section: Option<Section> = None;
    let mut seen_sections: Vec<&str> = Vec::new();
    let mut child_indent: Option<usize> = None;

    for (i, raw) in text.split('\n').enumerate() {
        let lineno = i + 1;
        let raw = raw.strip_suffix('\r').unwrap_or(raw);
        let line = strip_comment(raw);
        if line.trim().is_empty() {
            continue;
        }
        if line.starts_with('\t') {
            return Err(err(lineno, "tabs are not allowed for indentation"));
        }
        let indent = line.len() - line.trim_start_matches(' ').len();
        let body = line.trim();
        if body.starts_with("- ") || body == "-" {
            return Err(err(lineno, "non-scalar value (sequence)"));
        }
        let (key, value) = split_key(body).ok_or_else(|| err(lineno, "expected `key: value`"))?;

        if indent == 0 {
            let name = match key {
                "parameters" => Section::Parameters,
                "defaults" => Section::Defaults,
                other => {
                    return Err(err(lineno, &format!("unknown top-level key `{other}`")));
                }
            };
            if seen_sections.contains(&key) {
                return Err(err(lineno, &format!("duplicate key `{key}`")));
            }
            seen_sections.push(if name == Section::Parameters {
                "parameters"
            } else {
                "defaults"
            });
            match value {
                "" => section = Some(name),
                "{}" => section = None,
                _ => return Err(err(lineno, &format!("`{key}` must be a mapping"))),
            }
            child_indent = None;
            continue;
        }

        let current = section.ok_or_else(|| err(lineno, "indented entry outside a section"))?;
        match child_indent {
            None => child_indent = Some(indent),
            Some(expected) if indent > expected => {
                return Err(err(lineno, "nesting too deep"));
            }
            Some(expected) if indent < expected => {
                return Err(err(lineno, "inconsistent indentation"));
            }
            _ => {}
        }
        if !is_tag_name(key) {
            return Err(err(lineno, &format!("`{key}` is not a valid tag name")));
        }
        if value.is_empty() {
            return Err(err(lineno, "nesting too deep"));
        }
        let scalar = parse_scalar(value).map_err(|m| err(lineno, &m))?;
        let duplicate = match current {
            Section::Parameters => settings.parameters.insert(key.to_string(), scalar).is_some(),
            Section::Defaults => settings
                .defaults
                .insert(key.to_string(), scalar.to_string())
                .is_some(),
        };
        if duplicate {
            return Err(err(lineno, &format!("duplicate key `{key}`")));
        }
    }
    Ok(settings)
}

fn strip_comment(line: &str) -> &str {
    let mut quote: Option<char> = None;
    let mut prev_space = true;
    for (i, c) in line.char_indices() {
        match quote {
            Some(q) if c == q => quote = None,
            Some(_) => {}
            None if c == '"' || c == '\'' => quote = Some(c),
            None if c == '#' && prev_space => return &line[..i],
            None => {}
        }
        prev_space = c == ' ' || c == '\t';
    }
    line
}

fn split_key(body: &str) -> Option<(&str, &str)> {
    let (key, rest) = body.split_once(':')?;
    if !rest.is_empty() && !rest.starts_with(' ') {
        return None;
    }
    Some((key.trim(), rest.trim()))
}

fn parse_scalar(value: &str) -> Result<Scalar, String> {
    if value.starts_with('[') || value.starts_with('{') {
        return Err("non-scalar value (flow collection)".into());
    }
    if let Some(inner) = value.strip_prefix('"') {
        let inner = inner
            .strip_suffix('"')
            .ok_or_else(|| "unterminated double-quoted string".to_string())?;
        let mut out = String::new();
        let mut chars = inner.chars();
        while let Some(c) = chars.next() {
            if c == '\\' {
                match chars.next() {
                    Some('n') => out.push('\n'),
                    Some('t') => out.push('\t'),
                    Some('"') => out.push('"'),
                    Some('\\') => out.push('\\'),
                    other => return Err(format!("unsupported escape `\\{}`", other.unwrap_or(' '))),
                }
            } else if c == '"' {
                return Err("unescaped quote inside string".into());
            } else {
                out.push(c);
            }
        }
        return Ok(Scalar::Str(out));
    }
    if let Some(inner) = value.strip_prefix('\'') {
        let inner = inner
            .strip_suffix('\'')
            .ok_or_else(|| "unterminated single-quoted string".to_string())?;
        return Ok(Scalar::Str(inner.replace("''", "'")));
    }
    Ok(match value.parse::<i64>() {
        Ok(n) => Scalar::Int(n),
        Err(_) => Scalar::Str(value.to_string()),
    })
}
