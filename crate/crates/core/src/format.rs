//! Line-oriented machine definition format.
//!
//! ```text
//! # comment
//! field sqrt 5
//! pass-through
//! signal zig 1/2+1/2*sqrt(5)
//! rule zig,wall -> zag,wall
//! init zig@0
//! ```

use std::fmt::Write as _;

use thiserror::Error;

use crate::machine::{InitialConfiguration, SignalMachine, SignalSet, Violation};
use crate::scalar::{ExactScalar, FieldContext, Quadratic, ScalarError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {reason}")]
pub struct ParseError {
    pub line: usize,
    pub reason: String,
}

fn err(line: usize, reason: impl Into<String>) -> ParseError {
    ParseError { line, reason: reason.into() }
}

fn is_name(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '\'')
}

struct Line<'a> {
    no: usize,
    keyword: &'a str,
    rest: &'a str,
}

fn lines(text: &str) -> impl Iterator<Item = Line<'_>> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            return None;
        }
        let (keyword, rest) = body.split_once(char::is_whitespace).unwrap_or((body, ""));
        Some(Line { no: i + 1, keyword, rest: rest.trim() })
    })
}

/// Parses a machine and its initial configuration.
///
/// Definition errors found by validation are reported at the line of the
/// offending rule or `init` directive.
pub fn parse_machine<S: ExactScalar>(text: &str) -> Result<(SignalMachine<S>, InitialConfiguration<S>), ParseError> {
    let mut field = FieldContext::rationals();
    let mut field_line = None;
    for l in lines(text).filter(|l| l.keyword == "field") {
        if let Some(prev) = field_line {
            return Err(err(l.no, format!("field already declared on line {prev}")));
        }
        let d = l
            .rest
            .strip_prefix("sqrt")
            .map(str::trim)
            .and_then(|d| d.parse::<u64>().ok())
            .ok_or_else(|| err(l.no, "expected `field sqrt <d>`"))?;
        field = FieldContext::new(d);
        field_line = Some(l.no);
    }
    let scalar = |no: usize, s: &str| -> Result<S, ParseError> {
        let q: Quadratic = s.parse().map_err(|e: ScalarError| err(no, e.to_string()))?;
        field.admit(&q).map_err(|e| err(no, e.to_string()))?;
        S::from_quadratic(&q).map_err(|e| err(no, e.to_string()))
    };

    let mut machine = SignalMachine::new();
    let mut rule_lines: Vec<(SignalSet, usize)> = Vec::new();
    let mut placements = Vec::new();
    let mut init_lines: Vec<(String, usize)> = Vec::new();
    for l in lines(text) {
        match l.keyword {
            "field" => {}
            "pass-through" => {
                if !l.rest.is_empty() {
                    return Err(err(l.no, "`pass-through` takes no argument"));
                }
                machine.set_pass_through(true);
            }
            "signal" => {
                let mut parts = l.rest.split_whitespace();
                let (Some(name), Some(speed), None) = (parts.next(), parts.next(), parts.next()) else {
                    return Err(err(l.no, "expected `signal <name> <speed>`"));
                };
                if !is_name(name) {
                    return Err(err(l.no, format!("invalid signal name `{name}`")));
                }
                let speed = scalar(l.no, speed)?;
                machine.add_signal(name, speed).map_err(|e| err(l.no, e.to_string()))?;
            }
            "rule" => {
                let (lhs, rhs) =
                    l.rest.split_once("->").ok_or_else(|| err(l.no, "expected `rule <in,...> -> <out,...>`"))?;
                let names = |side: &str| -> Result<Vec<usize>, ParseError> {
                    let side = side.trim();
                    if side.is_empty() {
                        return Ok(Vec::new());
                    }
                    side.split(',')
                        .map(|n| {
                            let n = n.trim();
                            machine.signal_by_name(n).ok_or_else(|| err(l.no, format!("unknown signal `{n}`")))
                        })
                        .collect()
                };
                let ins = names(lhs)?;
                let outs = names(rhs)?;
                let key: SignalSet = ins.iter().copied().collect();
                if key.len() != ins.len() || outs.iter().copied().collect::<SignalSet>().len() != outs.len() {
                    return Err(err(l.no, "signal repeated within a rule side"));
                }
                machine.add_rule(ins, outs).map_err(|e| err(l.no, e.to_string()))?;
                rule_lines.push((key, l.no));
            }
            "init" => {
                let (name, pos) =
                    l.rest.split_once('@').ok_or_else(|| err(l.no, "expected `init <name>@<position>`"))?;
                let name = name.trim();
                let id = machine.signal_by_name(name).ok_or_else(|| err(l.no, format!("unknown signal `{name}`")))?;
                let x = scalar(l.no, pos.trim())?;
                if placements.iter().any(|(i, p)| *i == id && *p == x) {
                    return Err(err(l.no, format!("duplicate placement of `{name}`")));
                }
                placements.push((id, x.clone()));
                init_lines.push((x.to_string(), l.no));
            }
            other => return Err(err(l.no, format!("unknown directive `{other}`"))),
        }
    }
    let config = InitialConfiguration::from_placements(placements);
    if let Some(v) = machine.validate().into_iter().next() {
        let no = match &v {
            Violation::InputArity { rule }
            | Violation::InputSpeeds { rule, .. }
            | Violation::OutputSpeeds { rule, .. } => {
                rule_lines.iter().find(|(k, _)| rule.starts_with(&machine.format_set(k))).map(|(_, n)| *n).unwrap_or(0)
            }
            _ => 0,
        };
        return Err(err(no, v.to_string()));
    }
    if let Some(v) = config.validate(&machine).into_iter().next() {
        let no =
            init_lines.iter().find(|(x, _)| v.to_string().ends_with(&format!("at {x}"))).map(|(_, n)| *n).unwrap_or(0);
        return Err(err(no, v.to_string()));
    }
    Ok((machine, config))
}

/// Writes a definition that [`parse_machine`] reads back unchanged.
pub fn print_machine<S: ExactScalar>(machine: &SignalMachine<S>, config: &InitialConfiguration<S>) -> String {
    let mut out = String::new();
    let d = machine
        .signals()
        .iter()
        .map(|s| machine.speed(s.id).radicand())
        .chain(config.positions().iter().map(|x| x.radicand()))
        .find(|&d| d != 0);
    if let Some(d) = d {
        writeln!(out, "field sqrt {d}").unwrap();
    }
    if machine.pass_through() {
        writeln!(out, "pass-through").unwrap();
    }
    for s in machine.signals() {
        writeln!(out, "signal {} {}", s.name, machine.speed(s.id)).unwrap();
    }
    let names = |set: &SignalSet| set.iter().map(|&id| machine.name(id)).collect::<Vec<_>>().join(",");
    for (ins, outs) in machine.rules() {
        let rhs = names(outs);
        if rhs.is_empty() {
            writeln!(out, "rule {} ->", names(ins)).unwrap();
        } else {
            writeln!(out, "rule {} -> {}", names(ins), rhs).unwrap();
        }
    }
    for (id, x) in config.placements() {
        writeln!(out, "init {}@{}", machine.name(id), x).unwrap();
    }
    out
}
