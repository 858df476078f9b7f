//! CPLEX-style LP text files.
//!
//! The writer emits `Maximize`, `Subject To` (quadratic rows use the
//! bracket syntax), `Bounds` for every variable in index order, `Binaries`
//! and `End`. The reader accepts that subset, so write-then-read gives back
//! the same variables, rows and objective.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use super::mip::{MipInstance, Objective, QuadRow, Row, Sense, VarKind};
use crate::error::{ChoiceError, Result};
use crate::io::write_atomic;

const TERMS_PER_LINE: usize = 8;
const RESERVED: [&str; 9] = [
    "free", "inf", "infinity", "st", "end", "bounds", "binaries", "generals", "maximize",
];

/// Makes names legal and unique: characters outside `[A-Za-z0-9_.]` become
/// `_`, names starting with a digit or `.` (or clashing with a keyword) get
/// a leading `_`, and repeats get `_1`, `_2`, .. suffixes.
pub fn sanitize_names(names: &[String]) -> Vec<String> {
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(names.len());
    for name in names {
        let mut s: String = name
            .chars()
            .map(|c| {
                if c.is_ascii_alphanumeric() || c == '_' || c == '.' {
                    c
                } else {
                    '_'
                }
            })
            .collect();
        let first = s.chars().next();
        if first.is_none_or(|c| c.is_ascii_digit() || c == '.')
            || RESERVED.contains(&s.to_ascii_lowercase().as_str())
        {
            s.insert(0, '_');
        }
        let base = s.clone();
        let mut k = 1;
        while !seen.insert(s.clone()) {
            s = format!("{base}_{k}");
            k += 1;
        }
        out.push(s);
    }
    out
}

fn num(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else if v.abs() < 1e-4 || v.abs() >= 1e15 {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

fn bound(v: f64) -> String {
    if v == f64::INFINITY {
        "+inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        num(v)
    }
}

/// Appends `c name` terms with explicit signs, wrapping long rows.
fn terms(out: &mut String, items: &[(f64, String)]) {
    for (k, (c, name)) in items.iter().enumerate() {
        if k > 0 && k % TERMS_PER_LINE == 0 {
            out.push_str("\n  ");
        }
        let sign = if *c < 0.0 { "-" } else { "+" };
        let mag = c.abs();
        if k == 0 {
            if *c < 0.0 {
                out.push_str("- ");
            }
        } else {
            let _ = write!(out, " {sign} ");
        }
        if mag == 1.0 {
            out.push_str(name);
        } else {
            let _ = write!(out, "{} {name}", num(mag));
        }
    }
}

/// LP text of `inst`. A ratio objective is written as its linearisation
/// `num - t den` and is refused without `t`.
pub fn write_lp(inst: &MipInstance, t: Option<f64>) -> Result<String> {
    inst.validate()?;
    let objective = inst.linearized(t)?;
    let names = sanitize_names(&inst.vars.iter().map(|v| v.name.clone()).collect::<Vec<_>>());
    let row_names = sanitize_names(
        &inst
            .rows
            .iter()
            .map(|r| r.name.clone())
            .chain(inst.quad_rows.iter().map(|r| r.name.clone()))
            .collect::<Vec<_>>(),
    );
    let mut out = String::new();
    let _ = writeln!(out, "\\ {}", inst.name);
    if let (Objective::Ratio { .. }, Some(t)) = (&inst.objective, t) {
        let _ = writeln!(out, "\\ ratio objective linearised at t = {}", num(t));
    }
    out.push_str("Maximize\n obj:");
    if !objective.is_empty() {
        out.push(' ');
        terms(
            &mut out,
            &objective
                .iter()
                .map(|&(j, c)| (c, names[j].clone()))
                .collect::<Vec<_>>(),
        );
    }
    out.push_str("\nSubject To\n");
    for (r, name) in inst.rows.iter().zip(&row_names) {
        let _ = write!(out, " {name}: ");
        terms(
            &mut out,
            &r.coefs
                .iter()
                .map(|&(j, c)| (c, names[j].clone()))
                .collect::<Vec<_>>(),
        );
        let _ = writeln!(out, " {} {}", r.sense.symbol(), num(r.rhs));
    }
    for (r, name) in inst.quad_rows.iter().zip(&row_names[inst.rows.len()..]) {
        let _ = write!(out, " {name}: ");
        terms(
            &mut out,
            &r.linear
                .iter()
                .map(|&(j, c)| (c, names[j].clone()))
                .collect::<Vec<_>>(),
        );
        let quad: Vec<(f64, String)> = r
            .quad
            .iter()
            .map(|&(j, k, c)| {
                let term = if j == k {
                    format!("{} ^ 2", names[j])
                } else {
                    format!("{} * {}", names[j], names[k])
                };
                (c, term)
            })
            .collect();
        out.push_str(if r.linear.is_empty() { "[ " } else { " + [ " });
        terms(&mut out, &quad);
        let _ = writeln!(out, " ] {} {}", r.sense.symbol(), num(r.rhs));
    }
    out.push_str("Bounds\n");
    for (v, name) in inst.vars.iter().zip(&names) {
        if v.lo == f64::NEG_INFINITY && v.hi == f64::INFINITY {
            let _ = writeln!(out, " {name} free");
        } else if v.lo == v.hi {
            let _ = writeln!(out, " {name} = {}", num(v.lo));
        } else {
            let _ = writeln!(out, " {} <= {name} <= {}", bound(v.lo), bound(v.hi));
        }
    }
    let binaries: Vec<&String> = inst
        .vars
        .iter()
        .zip(&names)
        .filter(|(v, _)| v.kind == VarKind::Binary)
        .map(|(_, n)| n)
        .collect();
    if !binaries.is_empty() {
        out.push_str("Binaries\n");
        for chunk in binaries.chunks(TERMS_PER_LINE) {
            let line: Vec<&str> = chunk.iter().map(|s| s.as_str()).collect();
            let _ = writeln!(out, " {}", line.join(" "));
        }
    }
    out.push_str("End\n");
    Ok(out)
}

/// Writes the LP file atomically.
pub fn export_lp(inst: &MipInstance, t: Option<f64>, path: &Path) -> Result<()> {
    write_atomic(path, write_lp(inst, t)?.as_bytes())
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Name(String),
    Op(&'static str),
}

/// Tokens of `text` with the file line of each; `text` starts at `line`.
fn tokenize(text: &str, mut line: usize) -> Result<(Vec<Tok>, Vec<usize>)> {
    let b = text.as_bytes();
    let mut toks = Vec::new();
    let mut lines = Vec::new();
    let mut i = 0;
    while i < b.len() {
        let c = b[i] as char;
        let err = |msg: String| ChoiceError::Parse { line, msg };
        while lines.len() < toks.len() {
            lines.push(line);
        }
        if c == '\n' {
            line += 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let two = text.get(i..i + 2).unwrap_or("");
        let op = match two {
            "<=" | "=<" => Some(("<=", 2)),
            ">=" | "=>" => Some((">=", 2)),
            _ => match c {
                '<' => Some(("<=", 1)),
                '>' => Some((">=", 1)),
                '=' => Some(("=", 1)),
                '+' => Some(("+", 1)),
                '-' => Some(("-", 1)),
                '[' => Some(("[", 1)),
                ']' => Some(("]", 1)),
                '^' => Some(("^", 1)),
                '*' => Some(("*", 1)),
                ':' => Some((":", 1)),
                '/' => Some(("/", 1)),
                _ => None,
            },
        };
        if let Some((op, len)) = op {
            toks.push(Tok::Op(op));
            i += len;
            continue;
        }
        let start = i;
        if c.is_ascii_digit() || c == '.' {
            while i < b.len() {
                let d = b[i] as char;
                let exp_sign = (d == '+' || d == '-') && matches!(b[i - 1] as char, 'e' | 'E');
                if d.is_ascii_digit() || d == '.' || d == 'e' || d == 'E' || exp_sign {
                    i += 1;
                } else {
                    break;
                }
            }
            let s = &text[start..i];
            toks.push(Tok::Num(
                s.parse().map_err(|_| err(format!("bad number {s:?}")))?,
            ));
        } else {
            while i < b.len() {
                let d = b[i] as char;
                if d.is_whitespace() || "<>=+-[]^*:/".contains(d) {
                    break;
                }
                i += 1;
            }
            let s = &text[start..i];
            if s.eq_ignore_ascii_case("inf") || s.eq_ignore_ascii_case("infinity") {
                toks.push(Tok::Num(f64::INFINITY));
            } else {
                toks.push(Tok::Name(s.to_string()));
            }
        }
    }
    while lines.len() < toks.len() {
        lines.push(line);
    }
    Ok((toks, lines))
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Section {
    Objective,
    Constraints,
    Bounds,
    Binaries,
    Generals,
    Done,
}

fn section_of(line: &str) -> Option<(Section, bool)> {
    match line.trim().to_ascii_lowercase().as_str() {
        "maximize" | "maximum" | "max" => Some((Section::Objective, true)),
        "minimize" | "minimum" | "min" => Some((Section::Objective, false)),
        "subject to" | "such that" | "st" | "s.t." => Some((Section::Constraints, true)),
        "bounds" | "bound" => Some((Section::Bounds, true)),
        "binaries" | "binary" | "bin" => Some((Section::Binaries, true)),
        "generals" | "general" | "gen" => Some((Section::Generals, true)),
        "end" => Some((Section::Done, true)),
        _ => None,
    }
}

struct Parser {
    names: HashMap<String, usize>,
    inst: MipInstance,
}

impl Parser {
    fn var(&mut self, name: &str) -> usize {
        if let Some(&j) = self.names.get(name) {
            return j;
        }
        let j = self
            .inst
            .add_var(name, VarKind::Continuous, 0.0, f64::INFINITY);
        self.names.insert(name.to_string(), j);
        j
    }
}

type Linear = Vec<(usize, f64)>;
type Quad = Vec<(usize, usize, f64)>;

/// Parses `[name :] expr [sense rhs]` starting at `toks[*pos]`.
fn expression(
    p: &mut Parser,
    toks: &[Tok],
    lines: &[usize],
    pos: &mut usize,
    constraint: bool,
) -> Result<(Option<String>, Linear, Quad, Option<(Sense, f64)>)> {
    let err_at = |at: usize, msg: String| ChoiceError::Parse {
        line: lines
            .get(at.min(lines.len().saturating_sub(1)))
            .copied()
            .unwrap_or(0),
        msg,
    };
    let mut name = None;
    if let (Some(Tok::Name(n)), Some(Tok::Op(":"))) = (toks.get(*pos), toks.get(*pos + 1)) {
        name = Some(n.clone());
        *pos += 2;
    }
    let mut lin = Vec::new();
    let mut quad = Vec::new();
    let mut in_bracket = false;
    loop {
        let mut sign = 1.0;
        let signed_at = *pos;
        while let Some(Tok::Op(op @ ("+" | "-"))) = toks.get(*pos) {
            if *op == "-" {
                sign = -sign;
            }
            *pos += 1;
        }
        let dangling = *pos > signed_at;
        if dangling
            && matches!(
                toks.get(*pos),
                None | Some(Tok::Op("<=" | ">=" | "=" | "]"))
            )
        {
            return Err(err_at(*pos, "sign without a term".into()));
        }
        match toks.get(*pos) {
            None => {
                if constraint {
                    return Err(err_at(*pos, "constraint is missing its sense".into()));
                }
                return Ok((name, lin, quad, None));
            }
            Some(Tok::Op("[")) => {
                in_bracket = true;
                *pos += 1;
                continue;
            }
            Some(Tok::Op("]")) => {
                in_bracket = false;
                *pos += 1;
                if let Some(Tok::Op("/")) = toks.get(*pos) {
                    // objective-style `[ .. ] / 2`
                    let Some(Tok::Num(d)) = toks.get(*pos + 1) else {
                        return Err(err_at(*pos, "expected a divisor after '/'".into()));
                    };
                    quad.iter_mut()
                        .for_each(|t: &mut (usize, usize, f64)| t.2 /= d);
                    *pos += 2;
                }
                continue;
            }
            Some(Tok::Op(op @ ("<=" | ">=" | "="))) if constraint => {
                let sense = match *op {
                    "<=" => Sense::Le,
                    ">=" => Sense::Ge,
                    _ => Sense::Eq,
                };
                *pos += 1;
                let mut s = 1.0;
                while let Some(Tok::Op(op @ ("+" | "-"))) = toks.get(*pos) {
                    if *op == "-" {
                        s = -s;
                    }
                    *pos += 1;
                }
                let Some(Tok::Num(rhs)) = toks.get(*pos) else {
                    return Err(err_at(*pos, "expected a right-hand side number".into()));
                };
                *pos += 1;
                return Ok((name, lin, quad, Some((sense, s * rhs))));
            }
            _ => {}
        }
        let mut coef = sign;
        if let Some(Tok::Num(c)) = toks.get(*pos) {
            coef *= c;
            *pos += 1;
        }
        let Some(Tok::Name(v)) = toks.get(*pos) else {
            return Err(err_at(
                *pos,
                format!("expected a variable, found {:?}", toks.get(*pos)),
            ));
        };
        // a `name :` here starts the next statement
        if !constraint {
            if let Some(Tok::Op(":")) = toks.get(*pos + 1) {
                return Err(err_at(*pos, "unexpected label inside the objective".into()));
            }
        }
        let j = p.var(v);
        *pos += 1;
        if in_bracket {
            match toks.get(*pos) {
                Some(Tok::Op("^")) => {
                    if toks.get(*pos + 1) != Some(&Tok::Num(2.0)) {
                        return Err(err_at(*pos, "only squares are supported".into()));
                    }
                    *pos += 2;
                    quad.push((j, j, coef));
                }
                Some(Tok::Op("*")) => {
                    let Some(Tok::Name(w)) = toks.get(*pos + 1) else {
                        return Err(err_at(*pos, "expected a variable after '*'".into()));
                    };
                    let k = p.var(w);
                    *pos += 2;
                    quad.push((j, k, coef));
                }
                _ => return Err(err_at(*pos, "linear term inside brackets".into())),
            }
        } else {
            lin.push((j, coef));
        }
    }
}

/// Parses LP text into an instance with a linear objective.
pub fn read_lp(text: &str) -> Result<MipInstance> {
    let mut p = Parser {
        names: HashMap::new(),
        inst: MipInstance::new("lp"),
    };
    let mut section: Option<Section> = None;
    let mut maximize = true;
    // statements spanning several lines are joined per section
    let mut chunks: Vec<(Section, usize, String)> = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line_no = k + 1;
        let line = match raw.find('\\') {
            Some(c) => &raw[..c],
            None => raw,
        };
        if k == 0 && raw.starts_with('\\') {
            p.inst.name = raw.trim_start_matches('\\').trim().to_string();
        }
        if line.trim().is_empty() {
            if let Some(chunk) = chunks.last_mut().filter(|c| !c.2.is_empty()) {
                chunk.2.push('\n');
            }
            continue;
        }
        if let Some((s, flag)) = section_of(line) {
            if s == Section::Objective {
                maximize = flag;
            }
            section = Some(s);
            chunks.push((s, line_no, String::new()));
            continue;
        }
        match (section, chunks.last_mut()) {
            (Some(Section::Done), _) => {}
            (Some(_), Some(chunk)) => {
                if chunk.2.is_empty() {
                    chunk.1 = line_no;
                }
                chunk.2.push_str(line);
                chunk.2.push('\n');
            }
            _ => {
                return Err(ChoiceError::Parse {
                    line: line_no,
                    msg: "content before the objective section".into(),
                })
            }
        }
    }
    // bounds are read first so that variable order follows the Bounds section
    let mut bounds: Vec<(usize, String)> = Vec::new();
    for (s, line, body) in &chunks {
        if *s == Section::Bounds {
            for (k, l) in body.lines().enumerate() {
                bounds.push((line + k, l.to_string()));
            }
        }
    }
    let mut declared: Vec<(usize, f64, f64)> = Vec::new();
    for (line, l) in &bounds {
        let (toks, _) = tokenize(l, *line)?;
        let err = |msg: &str| ChoiceError::Parse {
            line: *line,
            msg: msg.to_string(),
        };
        let signed = |t: &[Tok]| -> Option<(f64, usize)> {
            match t {
                [Tok::Op("-"), Tok::Num(v), ..] => Some((-v, 2)),
                [Tok::Op("+"), Tok::Num(v), ..] => Some((*v, 2)),
                [Tok::Num(v), ..] => Some((*v, 1)),
                _ => None,
            }
        };
        match toks.as_slice() {
            [Tok::Name(v), Tok::Name(f)] if f.eq_ignore_ascii_case("free") => {
                let j = p.var(v);
                declared.push((j, f64::NEG_INFINITY, f64::INFINITY));
            }
            [Tok::Name(v), Tok::Op(op), rest @ ..] => {
                let (x, used) = signed(rest).ok_or_else(|| err("expected a bound value"))?;
                if used != rest.len() {
                    return Err(err("trailing tokens after bound"));
                }
                let j = p.var(v);
                let (lo, hi) = (p.inst.vars[j].lo, p.inst.vars[j].hi);
                declared.push(match *op {
                    "=" => (j, x, x),
                    "<=" => (j, lo, x),
                    ">=" => (j, x, hi),
                    _ => return Err(err("unexpected operator in bound")),
                });
            }
            _ => {
                let (lo, used) = signed(&toks).ok_or_else(|| err("unrecognised bound"))?;
                match &toks[used..] {
                    [Tok::Op("<="), Tok::Name(v), Tok::Op("<="), rest @ ..] => {
                        let (hi, used) =
                            signed(rest).ok_or_else(|| err("expected an upper bound"))?;
                        if used != rest.len() {
                            return Err(err("trailing tokens after bound"));
                        }
                        let j = p.var(v);
                        declared.push((j, lo, hi));
                    }
                    [Tok::Op("<="), Tok::Name(v)] => {
                        let j = p.var(v);
                        let hi = p.inst.vars[j].hi;
                        declared.push((j, lo, hi));
                    }
                    _ => return Err(err("unrecognised bound")),
                }
            }
        }
    }
    for (j, lo, hi) in declared {
        p.inst.vars[j].lo = lo;
        p.inst.vars[j].hi = hi;
    }
    for (s, line, body) in &chunks {
        match s {
            Section::Objective => {
                let (toks, lines) = tokenize(body, *line)?;
                let mut pos = 0;
                let (_, lin, quad, _) = expression(&mut p, &toks, &lines, &mut pos, false)?;
                if !quad.is_empty() {
                    return Err(ChoiceError::Parse {
                        line: *line,
                        msg: "quadratic objectives are not supported".into(),
                    });
                }
                let sign = if maximize { 1.0 } else { -1.0 };
                p.inst.objective = Objective::Linear {
                    coefs: lin.into_iter().map(|(j, c)| (j, sign * c)).collect(),
                };
            }
            Section::Constraints => {
                let (toks, lines) = tokenize(body, *line)?;
                let mut pos = 0;
                while pos < toks.len() {
                    let (name, lin, quad, cmp) = expression(&mut p, &toks, &lines, &mut pos, true)?;
                    let (sense, rhs) = cmp.expect("constraints carry a sense");
                    let name = name.unwrap_or_else(|| {
                        format!("r{}", p.inst.rows.len() + p.inst.quad_rows.len())
                    });
                    if quad.is_empty() {
                        p.inst.rows.push(Row {
                            name,
                            coefs: lin,
                            sense,
                            rhs,
                        });
                    } else {
                        p.inst.quad_rows.push(QuadRow {
                            name,
                            linear: lin,
                            quad,
                            sense,
                            rhs,
                        });
                    }
                }
            }
            Section::Binaries | Section::Generals => {
                for tok in tokenize(body, *line)?.0 {
                    let Tok::Name(v) = tok else {
                        return Err(ChoiceError::Parse {
                            line: *line,
                            msg: "expected variable names".into(),
                        });
                    };
                    let j = p.var(&v);
                    let var = &mut p.inst.vars[j];
                    var.kind = VarKind::Binary;
                    if *s == Section::Binaries && var.lo == 0.0 && var.hi == f64::INFINITY {
                        var.hi = 1.0;
                    }
                }
            }
            Section::Bounds | Section::Done => {}
        }
    }
    p.inst.validate()?;
    Ok(p.inst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sanitizes_deterministically() {
        let names: Vec<String> = ["x[1]", "1x", "x_1_", "x[1]", "", ".a", "free", "ok.name"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let out = sanitize_names(&names);
        assert_eq!(
            out,
            ["x_1_", "_1x", "x_1__1", "x_1__2", "_", "_.a", "_free", "ok.name"]
        );
        assert_eq!(sanitize_names(&names), out);
    }

    #[test]
    fn numbers_round_trip() {
        for v in [0.1, -2.5, 1e-20, 123456789.125, 1e300, 3.0, -0.0] {
            let s = num(v);
            assert_eq!(s.parse::<f64>().unwrap(), v, "{s}");
        }
    }

    #[test]
    fn parses_hand_written_file() {
        let text = "\\ hand\nMinimize\n obj: x + 2 y\nSubject To\n c1: x + y >= 1\n c2: - x\n  + y <= 3\nBounds\n y <= 4\nGenerals\n y\nEnd\n";
        let m = read_lp(text).unwrap();
        assert_eq!(m.vars.len(), 2);
        // variables are numbered in Bounds order, so y comes first
        assert_eq!(m.vars[0].name, "y");
        assert_eq!(m.rows[1].coefs, vec![(1, -1.0), (0, 1.0)]);
        assert_eq!(m.vars[0].hi, 4.0);
        assert_eq!(m.vars[0].kind, VarKind::Binary);
        assert_eq!(
            m.objective,
            Objective::Linear {
                coefs: vec![(1, -1.0), (0, -2.0)]
            }
        );
    }

    #[test]
    fn malformed_file_names_line() {
        let text = "Maximize\n obj: x\nSubject To\n c0: x <= 1\n c1: x + <= 3\nEnd\n";
        let err = read_lp(text).unwrap_err();
        assert!(matches!(err, ChoiceError::Parse { line: 5, .. }), "{err}");
    }
}
