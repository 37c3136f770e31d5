//! Line-oriented problem files:
//!
//! ```text
//! pred mem/2.
//! func f/2.
//! const a. const b. const c. const *.
//! init mem(x,y).
//! bg  mem(a,[a]).
//! pos mem(a,[a,c]).
//! neg mem(c,[b,a]).
//! ```
//!
//! `var NAME.` statements replace the default variable supply. `#` starts a
//! comment.

use std::fmt::Write as _;
use std::path::Path;

use crate::logic::language::DEFAULT_VARIABLES;
use crate::logic::{parse_atom_at, parse_clause_at, Language, Printer};
use crate::problem::IlpProblem;

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl FormatError {
    pub fn line(&self) -> Option<usize> {
        match self {
            FormatError::Syntax { line, .. } => Some(*line),
            FormatError::Io { .. } => None,
        }
    }
}

fn syntax(line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Syntax { line, message: message.into() }
}

fn statements(text: &str) -> Result<Vec<(usize, String, String)>, FormatError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let code = raw.split('#').next().unwrap_or("");
        let mut parts: Vec<&str> = code.split('.').collect();
        let tail = parts.pop().unwrap_or("");
        if !tail.trim().is_empty() {
            return Err(syntax(line, format!("statement `{}` is missing its final `.`", tail.trim())));
        }
        for stmt in parts {
            let stmt = stmt.trim();
            if stmt.is_empty() {
                return Err(syntax(line, "empty statement"));
            }
            let (kw, rest) = stmt.split_once(char::is_whitespace).unwrap_or((stmt, ""));
            out.push((line, kw.to_owned(), rest.trim().to_owned()))
        }
    }
    Ok(out)
}

fn signature(line: usize, text: &str) -> Result<(&str, usize), FormatError> {
    let (name, arity) = text.split_once('/').ok_or_else(|| syntax(line, format!("expected NAME/ARITY, got `{text}`")))?;
    let arity = arity.trim().parse().map_err(|_| syntax(line, format!("bad arity in `{text}`")))?;
    Ok((name.trim(), arity))
}

/// Parses a problem; declarations may appear anywhere in the file.
pub fn parse_problem(text: &str) -> Result<IlpProblem, FormatError> {
    let stmts = statements(text)?;
    let mut lang = Language::new();
    let mut custom_vars = false;
    for (line, kw, rest) in &stmts {
        let line = *line;
        let res = match kw.as_str() {
            "pred" => {
                let (n, a) = signature(line, rest)?;
                lang.add_predicate(n, a)
            }
            "func" => {
                let (n, a) = signature(line, rest)?;
                lang.add_function(n, a)
            }
            "const" => lang.add_constant(rest),
            "var" => {
                if !custom_vars {
                    lang.variables.clear();
                    custom_vars = true;
                }
                let mut names: Vec<String> = lang.variables.iter().map(|v| v.as_str().to_owned()).collect();
                names.push(rest.clone());
                let names: Vec<&str> = names.iter().map(String::as_str).collect();
                lang.set_variables(&names)
            }
            "init" | "bg" | "pos" | "neg" => Ok(()),
            other => return Err(syntax(line, format!("unknown statement `{other}`"))),
        };
        res.map_err(|e| syntax(line, e.to_string()))?;
    }
    let mut q = IlpProblem::new(lang);
    for (line, kw, rest) in &stmts {
        let wrap = |e: crate::logic::ParseError| syntax(*line, e.message);
        match kw.as_str() {
            "init" => q.initial.push(parse_clause_at(rest, Some(&q.language), *line).map_err(wrap)?),
            "bg" | "pos" | "neg" => {
                let atom = parse_atom_at(rest, Some(&q.language), *line).map_err(wrap)?;
                if !atom.is_ground() {
                    return Err(syntax(*line, format!("`{rest}` is not ground")));
                }
                match kw.as_str() {
                    "bg" => q.background.push(atom),
                    "pos" => q.positives.push(atom),
                    _ => q.negatives.push(atom),
                }
            }
            _ => {}
        }
    }
    Ok(q)
}

pub fn load_problem(path: &Path) -> Result<IlpProblem, FormatError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| FormatError::Io { path: path.display().to_string(), source })?;
    parse_problem(&text)
}

/// Renders a problem in the file format, with list sugar when available.
pub fn write_problem(q: &IlpProblem) -> String {
    let lang = &q.language;
    let pr = Printer::for_language(lang);
    let mut s = String::new();
    for (p, a) in &lang.predicates {
        let _ = writeln!(s, "pred {p}/{a}.");
    }
    for (f, a) in &lang.functions {
        let _ = writeln!(s, "func {f}/{a}.");
    }
    if !lang.constants.is_empty() {
        let consts: Vec<String> = lang.constants.iter().map(|c| format!("const {c}.")).collect();
        let _ = writeln!(s, "{}", consts.join(" "));
    }
    let default_vars: Vec<&str> = DEFAULT_VARIABLES.to_vec();
    let vars: Vec<&str> = lang.variables.iter().map(|v| v.as_str()).collect();
    if vars != default_vars {
        let decl: Vec<String> = vars.iter().map(|v| format!("var {v}.")).collect();
        let _ = writeln!(s, "{}", decl.join(" "));
    }
    for c in &q.initial {
        let _ = writeln!(s, "init {}.", pr.clause(c));
    }
    for (kw, atoms) in [("bg", &q.background), ("pos", &q.positives), ("neg", &q.negatives)] {
        for a in atoms {
            let _ = writeln!(s, "{kw} {}.", pr.atom(a));
        }
    }
    s
}

pub fn save_problem(q: &IlpProblem, path: &Path) -> Result<(), FormatError> {
    std::fs::write(path, write_problem(q)).map_err(|source| FormatError::Io { path: path.display().to_string(), source })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::{generate, TaskSpec, ALL_TASKS};

    const MEMBER: &str = "pred mem/2.\nfunc f/2.\nconst a. const b. const c. const *.\ninit mem(x,y).\nbg  mem(a,[a]).  # given\npos mem(a,[a,c]).\nneg mem(c, f(b, f(a, *))).\n";

    #[test]
    fn parses_the_documented_example() {
        let q = parse_problem(MEMBER).unwrap();
        assert_eq!(q.language.predicates.len(), 1);
        assert_eq!(q.language.constants.len(), 4);
        assert_eq!((q.positives.len(), q.negatives.len(), q.background.len(), q.initial.len()), (1, 1, 1, 1));
    }

    #[test]
    fn list_sugar_is_emitted_canonically() {
        let q = parse_problem(MEMBER).unwrap();
        let out = write_problem(&q);
        assert_eq!(
            out,
            "pred mem/2.\nfunc f/2.\nconst a. const b. const c. const *.\ninit mem(x,y).\nbg mem(a,[a]).\npos mem(a,[a,c]).\nneg mem(c,[b,a]).\n"
        );
    }

    #[test]
    fn round_trips_generated_tasks() {
        for t in ALL_TASKS {
            let q = generate(&TaskSpec::new(t, 10, 2));
            let text = write_problem(&q);
            assert_eq!(parse_problem(&text).unwrap(), q, "{t}");
        }
    }

    #[test]
    fn errors_name_the_line() {
        let bad = "pred mem/2.\nconst a.\npos mem(a).\n";
        let err = parse_problem(bad).unwrap_err();
        assert_eq!(err.line(), Some(3));
        assert_eq!(parse_problem("pred p/2.\nfoo p.\n").unwrap_err().line(), Some(2));
        assert_eq!(parse_problem("pred p/2\n").unwrap_err().line(), Some(1));
        assert_eq!(parse_problem("pred p/2.\nconst a.\npos p(a,x).\n").unwrap_err().line(), Some(3));
    }

    #[test]
    fn variable_declarations_replace_the_default() {
        let q = parse_problem("pred p/1. var x. var u.\ninit p(u).\n").unwrap();
        let names: Vec<&str> = q.language.variables.iter().map(|v| v.as_str()).collect();
        assert_eq!(names, ["x", "u"]);
        assert!(write_problem(&q).contains("var x. var u."));
    }
}
