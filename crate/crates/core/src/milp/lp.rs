//! LP file export, a reader for the same dialect, and a structural diff.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::Serialize;

use super::{Domain, MilpError, MilpModel, Relation, Sense};

const LINE_WIDTH: usize = 200;

/// Rounds to 12 significant digits and prints the shortest exact form.
fn number(x: f64) -> String {
    let rounded: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    let rounded = if rounded == 0.0 { 0.0 } else { rounded };
    format!("{rounded}")
}

/// Appends `tokens` to `out` with continuation lines indented by one space.
fn wrap(out: &mut String, head: &str, tokens: &[String]) {
    let mut line = String::from(head);
    for tok in tokens {
        if line.len() + 1 + tok.len() > LINE_WIDTH && line.trim() != head.trim() {
            out.push_str(line.trim_end());
            out.push('\n');
            line = String::from("  ");
        } else if !line.ends_with(' ') {
            line.push(' ');
        }
        line.push_str(tok);
    }
    out.push_str(line.trim_end());
    out.push('\n');
}

fn term_tokens(model: &MilpModel, terms: &[(usize, f64)]) -> Vec<String> {
    let mut out = Vec::with_capacity(terms.len() * 3);
    for (k, &(v, coef)) in terms.iter().enumerate() {
        let sign = if coef < 0.0 { "-" } else { "+" };
        if k > 0 || coef < 0.0 {
            out.push(sign.to_string());
        }
        let magnitude = coef.abs();
        let name = &model.variables[v].name;
        if magnitude == 1.0 {
            out.push(name.clone());
        } else {
            out.push(format!("{} {name}", number(magnitude)));
        }
    }
    out
}

/// Standard LP text of a model. Identical models give identical bytes.
pub fn export_lp(model: &MilpModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "\\ menuforge model {} objective {}", model.digest, model.kind.name());
    out.push_str(match model.objective.sense {
        Sense::Minimize => "Minimize\n",
        Sense::Maximize => "Maximize\n",
    });
    wrap(&mut out, " obj:", &term_tokens(model, &model.objective.terms));

    out.push_str("Subject To\n");
    for con in &model.constraints {
        let mut tokens = term_tokens(model, &con.terms);
        tokens.push(con.relation.symbol().to_string());
        tokens.push(number(con.rhs));
        wrap(&mut out, &format!(" {}:", con.name), &tokens);
    }

    out.push_str("Bounds\n");
    for var in &model.variables {
        match var.domain {
            Domain::Integer { lower, upper } => {
                let _ = writeln!(out, " {} <= {} <= {}", number(lower), var.name, number(upper));
            }
            Domain::Continuous { lower } => {
                let _ = writeln!(out, " {} >= {}", var.name, number(lower));
            }
            Domain::Binary => {}
        }
    }

    let binaries: Vec<String> =
        model.variables.iter().filter(|v| v.domain == Domain::Binary).map(|v| v.name.clone()).collect();
    out.push_str("Binaries\n");
    wrap(&mut out, "", &binaries);
    let generals: Vec<String> = model
        .variables
        .iter()
        .filter(|v| matches!(v.domain, Domain::Integer { .. }))
        .map(|v| v.name.clone())
        .collect();
    out.push_str("Generals\n");
    wrap(&mut out, "", &generals);
    out.push_str("End\n");
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpConstraint {
    pub name: String,
    pub terms: BTreeMap<String, f64>,
    pub relation: Relation,
    pub rhs: f64,
}

/// A model as read back from LP text, keyed by variable name.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LpModel {
    pub sense: Option<Sense>,
    pub objective: BTreeMap<String, f64>,
    pub constraints: Vec<LpConstraint>,
    /// Lower and optional upper bound of every variable listed in `Bounds`.
    pub bounds: BTreeMap<String, (f64, Option<f64>)>,
    pub binaries: BTreeSet<String>,
    pub generals: BTreeSet<String>,
}

impl LpModel {
    pub fn variable_names(&self) -> BTreeSet<String> {
        let mut out: BTreeSet<String> = self.objective.keys().cloned().collect();
        for c in &self.constraints {
            out.extend(c.terms.keys().cloned());
        }
        out.extend(self.bounds.keys().cloned());
        out.extend(self.binaries.iter().cloned());
        out.extend(self.generals.iter().cloned());
        out
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Preamble,
    Objective,
    Constraints,
    Bounds,
    Binaries,
    Generals,
    Done,
}

fn parse_err(line: usize, message: impl Into<String>) -> MilpError {
    MilpError::LpParse { line, message: message.into() }
}

fn parse_number(tok: &str, line: usize) -> Result<f64, MilpError> {
    match tok.to_ascii_lowercase().as_str() {
        "inf" | "+inf" | "infinity" | "+infinity" => Ok(f64::INFINITY),
        "-inf" | "-infinity" => Ok(f64::NEG_INFINITY),
        _ => tok.parse().map_err(|_| parse_err(line, format!("expected a number, found {tok:?}"))),
    }
}

fn parse_relation(tok: &str) -> Option<Relation> {
    match tok {
        "<=" | "=<" | "<" => Some(Relation::Le),
        ">=" | "=>" | ">" => Some(Relation::Ge),
        "=" => Some(Relation::Eq),
        _ => None,
    }
}

/// Parses `[+|-] [coef] name ...` into a coefficient map.
fn parse_terms(tokens: &[&str], line: usize) -> Result<BTreeMap<String, f64>, MilpError> {
    let mut out = BTreeMap::new();
    let mut sign = 1.0;
    let mut coef: Option<f64> = None;
    for &tok in tokens {
        match tok {
            "+" => sign = 1.0,
            "-" => sign = -1.0,
            _ => {
                if let Ok(x) = tok.parse::<f64>() {
                    coef = Some(x);
                } else {
                    *out.entry(tok.to_string()).or_insert(0.0) += sign * coef.unwrap_or(1.0);
                    sign = 1.0;
                    coef = None;
                }
            }
        }
    }
    if coef.is_some() {
        return Err(parse_err(line, "dangling coefficient"));
    }
    Ok(out)
}

/// Reads the LP dialect written by [`export_lp`]: one statement may span
/// several lines, continuation lines start with whitespace.
pub fn parse_lp(text: &str) -> Result<LpModel, MilpError> {
    let mut model = LpModel::default();
    let mut section = Section::Preamble;
    // Statements are accumulated until the next labelled or unindented line.
    let mut pending: Option<(usize, String)> = None;

    fn flush(model: &mut LpModel, section: Section, pending: &mut Option<(usize, String)>) -> Result<(), MilpError> {
        let Some((line, stmt)) = pending.take() else {
            return Ok(());
        };
        let (label, body) = match stmt.split_once(':') {
            Some((l, b)) => (Some(l.trim().to_string()), b.to_string()),
            None => (None, stmt.clone()),
        };
        let tokens: Vec<&str> = body.split_whitespace().collect();
        match section {
            Section::Objective => {
                model.objective = parse_terms(&tokens, line)?;
            }
            Section::Constraints => {
                let name = label.ok_or_else(|| parse_err(line, "constraint without a name"))?;
                let pos = tokens
                    .iter()
                    .position(|t| parse_relation(t).is_some())
                    .ok_or_else(|| parse_err(line, format!("constraint {name} has no relation")))?;
                let relation = parse_relation(tokens[pos]).expect("checked");
                let rhs_tokens = &tokens[pos + 1..];
                let rhs = match rhs_tokens {
                    [x] => parse_number(x, line)?,
                    ["-", x] => -parse_number(x, line)?,
                    ["+", x] => parse_number(x, line)?,
                    _ => return Err(parse_err(line, format!("constraint {name} has a malformed right-hand side"))),
                };
                let terms = parse_terms(&tokens[..pos], line)?;
                model.constraints.push(LpConstraint { name, terms, relation, rhs });
            }
            Section::Bounds => match tokens.as_slice() {
                [lo, "<=", name, "<=", hi] => {
                    model.bounds.insert(name.to_string(), (parse_number(lo, line)?, Some(parse_number(hi, line)?)));
                }
                [name, ">=", lo] => {
                    model.bounds.insert(name.to_string(), (parse_number(lo, line)?, None));
                }
                [name, "<=", hi] => {
                    model.bounds.insert(name.to_string(), (0.0, Some(parse_number(hi, line)?)));
                }
                [name, "free"] => {
                    model.bounds.insert(name.to_string(), (f64::NEG_INFINITY, None));
                }
                _ => return Err(parse_err(line, format!("unsupported bound {body:?}"))),
            },
            Section::Binaries => model.binaries.extend(tokens.iter().map(|t| t.to_string())),
            Section::Generals => model.generals.extend(tokens.iter().map(|t| t.to_string())),
            Section::Preamble | Section::Done => {
                if !tokens.is_empty() {
                    return Err(parse_err(line, "content outside any section"));
                }
            }
        }
        Ok(())
    }

    for (k, raw) in text.lines().enumerate() {
        let line_no = k + 1;
        let line = match raw.find('\\') {
            Some(p) => &raw[..p],
            None => raw,
        };
        if line.trim().is_empty() {
            continue;
        }
        let keyword = line.trim().to_ascii_lowercase();
        let next = match keyword.as_str() {
            "minimize" | "minimum" | "min" => Some((Section::Objective, Some(Sense::Minimize))),
            "maximize" | "maximum" | "max" => Some((Section::Objective, Some(Sense::Maximize))),
            "subject to" | "such that" | "st" | "s.t." => Some((Section::Constraints, None)),
            "bounds" | "bound" => Some((Section::Bounds, None)),
            "binaries" | "binary" | "bin" => Some((Section::Binaries, None)),
            "generals" | "general" | "gen" | "integers" => Some((Section::Generals, None)),
            "end" => Some((Section::Done, None)),
            _ => None,
        };
        if let Some((s, sense)) = next {
            flush(&mut model, section, &mut pending)?;
            section = s;
            if sense.is_some() {
                model.sense = sense;
            }
            continue;
        }
        if section == Section::Done {
            return Err(parse_err(line_no, "content after End"));
        }
        let continuation = raw.starts_with("  ");
        let per_line = matches!(section, Section::Bounds);
        match &mut pending {
            Some((_, stmt)) if continuation && !per_line => {
                stmt.push(' ');
                stmt.push_str(line.trim());
            }
            _ => {
                flush(&mut model, section, &mut pending)?;
                pending = Some((line_no, line.trim().to_string()));
            }
        }
    }
    flush(&mut model, section, &mut pending)?;
    if section != Section::Done {
        return Err(parse_err(text.lines().count(), "missing End"));
    }
    if model.sense.is_none() {
        return Err(parse_err(1, "missing objective section"));
    }
    Ok(model)
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

/// Differences between a model and an LP file read back from it; empty
/// when they agree on variables, domains, rows and coefficients to 1e-9.
pub fn structural_diff(model: &MilpModel, parsed: &LpModel) -> Vec<String> {
    let mut out = Vec::new();
    if parsed.sense != Some(model.objective.sense) {
        out.push(format!("objective sense {:?} != {:?}", parsed.sense, model.objective.sense));
    }
    let names: BTreeSet<String> = model.variables.iter().map(|v| v.name.clone()).collect();
    let parsed_names = parsed.variable_names();
    if names != parsed_names {
        let missing: Vec<_> = names.difference(&parsed_names).take(5).collect();
        let extra: Vec<_> = parsed_names.difference(&names).take(5).collect();
        out.push(format!("variable sets differ: missing {missing:?}, extra {extra:?}"));
    }
    for var in &model.variables {
        let ok = match var.domain {
            Domain::Binary => parsed.binaries.contains(&var.name),
            Domain::Integer { lower, upper } => {
                parsed.generals.contains(&var.name)
                    && parsed.bounds.get(&var.name).is_some_and(|&(l, u)| close(l, lower) && u.is_some_and(|u| close(u, upper)))
            }
            Domain::Continuous { lower } => {
                !parsed.binaries.contains(&var.name)
                    && !parsed.generals.contains(&var.name)
                    && parsed.bounds.get(&var.name).map_or(lower == 0.0, |&(l, u)| close(l, lower) && u.is_none())
            }
        };
        if !ok {
            out.push(format!("domain of {} differs", var.name));
        }
    }

    let as_map = |terms: &[(usize, f64)]| -> BTreeMap<String, f64> {
        terms.iter().map(|&(k, c)| (model.variables[k].name.clone(), c)).collect()
    };
    let same_terms = |a: &BTreeMap<String, f64>, b: &BTreeMap<String, f64>| {
        a.len() == b.len() && a.iter().all(|(k, v)| b.get(k).is_some_and(|w| close(*v, *w)))
    };
    if !same_terms(&as_map(&model.objective.terms), &parsed.objective) {
        out.push("objective coefficients differ".into());
    }
    if model.constraints.len() != parsed.constraints.len() {
        out.push(format!("constraint count {} != {}", model.constraints.len(), parsed.constraints.len()));
    }
    for (a, b) in model.constraints.iter().zip(&parsed.constraints) {
        if a.name != b.name || a.relation != b.relation || !close(a.rhs, b.rhs) || !same_terms(&as_map(&a.terms), &b.terms)
        {
            out.push(format!("constraint {} differs from {}", a.name, b.name));
        }
    }
    out
}

#[derive(Serialize)]
struct Metadata<'a> {
    digest: &'a str,
    objective: &'static str,
    sense: Sense,
    adapt_w: Option<f64>,
    max_tabs: usize,
    max_groups: usize,
    max_rows: usize,
    constraint_count: usize,
    families: BTreeMap<&'static str, usize>,
    variables: Vec<MetaVar<'a>>,
}

#[derive(Serialize)]
struct MetaVar<'a> {
    index: usize,
    name: &'a str,
    domain: Domain,
}

/// JSON sidecar mapping variable names to indices.
pub fn metadata_json(model: &MilpModel) -> String {
    let meta = Metadata {
        digest: &model.digest,
        objective: model.kind.name(),
        sense: model.objective.sense,
        adapt_w: model.adapt_w,
        max_tabs: model.max_tabs,
        max_groups: model.max_groups,
        max_rows: model.max_rows,
        constraint_count: model.constraints.len(),
        families: model.family_counts(),
        variables: model
            .variables
            .iter()
            .enumerate()
            .map(|(index, v)| MetaVar { index, name: &v.name, domain: v.domain })
            .collect(),
    };
    serde_json::to_string_pretty(&meta).expect("metadata serializes")
}

#[cfg(test)]
mod tests {
    use super::super::build_model;
    use super::*;
    use crate::evaluator::ObjectiveKind;
    use crate::instance::{AssociationMatrix, Command, FittsParams, TaskInstance};

    fn inst(n: usize) -> TaskInstance {
        let commands = (0..n)
            .map(|id| Command { id, name: format!("c{id}"), frequency: 1.0 + id as f64, preferred_tab: None })
            .collect();
        let mut a = AssociationMatrix::new(n);
        for i in 1..n {
            a.set(0, i, 30.0 + 10.0 * i as f64);
        }
        TaskInstance::new(commands, a, FittsParams::default()).unwrap()
    }

    #[test]
    fn number_format() {
        assert_eq!(number(1.0), "1");
        assert_eq!(number(0.1), "0.1");
        assert_eq!(number(-2.5), "-2.5");
        assert_eq!(number(1.0 / 3.0), "0.333333333333");
        assert_eq!(number(-0.0), "0");
    }

    #[test]
    fn single_command_file() {
        let m = build_model(&inst(1), ObjectiveKind::Ift, None).unwrap();
        let text = export_lp(&m);
        assert!(text.lines().nth(1).unwrap().starts_with("Minimize"));
        let binaries = text.split("Binaries\n").nth(1).unwrap().split("Generals").next().unwrap();
        for name in ["X_0_1", "Y_0_1", "R_0_1"] {
            assert!(binaries.split_whitespace().any(|t| t == name), "{name}");
        }
        let max = build_model(&inst(1), ObjectiveKind::TwoFold, None).unwrap();
        assert!(export_lp(&max).lines().nth(1).unwrap().starts_with("Maximize"));
    }

    #[test]
    fn round_trip_and_determinism() {
        for kind in [ObjectiveKind::TwoFold, ObjectiveKind::Ift] {
            let m = build_model(&inst(5), kind, None).unwrap();
            let text = export_lp(&m);
            assert_eq!(text, export_lp(&m));
            assert!(text.lines().all(|l| l.len() <= LINE_WIDTH + 40));
            let parsed = parse_lp(&text).unwrap();
            assert_eq!(structural_diff(&m, &parsed), Vec::<String>::new());
        }
    }

    #[test]
    fn diff_detects_changes() {
        let m = build_model(&inst(3), ObjectiveKind::Ift, None).unwrap();
        let mut parsed = parse_lp(&export_lp(&m)).unwrap();
        parsed.constraints.pop();
        assert!(!structural_diff(&m, &parsed).is_empty());
        let mut parsed = parse_lp(&export_lp(&m)).unwrap();
        let first = parsed.constraints[0].terms.keys().next().unwrap().clone();
        *parsed.constraints[0].terms.get_mut(&first).unwrap() += 1e-6;
        assert!(!structural_diff(&m, &parsed).is_empty());
    }

    #[test]
    fn reader_errors() {
        assert!(matches!(parse_lp("Minimize\n obj: x\nSubject To\n c1: x >= 1\n"), Err(MilpError::LpParse { .. })));
        assert!(matches!(parse_lp("Minimize\n obj: x\nSubject To\n c1: x 1\nEnd\n"), Err(MilpError::LpParse { .. })));
        let ok = parse_lp("Maximize\n obj: 2 x + y\nSubject To\n c1: x + y <= 4\nBounds\n x >= 0\nEnd\n").unwrap();
        assert_eq!(ok.sense, Some(Sense::Maximize));
        assert_eq!(ok.objective["x"], 2.0);
        assert_eq!(ok.constraints[0].rhs, 4.0);
    }

    #[test]
    fn metadata_lists_variables() {
        let m = build_model(&inst(2), ObjectiveKind::Ift, None).unwrap();
        let v: serde_json::Value = serde_json::from_str(&metadata_json(&m)).unwrap();
        assert_eq!(v["variables"].as_array().unwrap().len(), m.variables.len());
        assert_eq!(v["variables"][0]["name"], "X_0_1");
        assert_eq!(v["digest"], m.digest.as_str());
    }
}
