//! CPLEX LP text format (the `Maximize/Subject To/Bounds/Binary/End` subset).

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write;

use super::{MilpError, Model, ObjectiveSense, Sense, VarId, VarKind};

const LINE_WIDTH: usize = 78;

fn safe_name(raw: &str) -> String {
    let mut out: String =
        raw.chars().map(|c| if c.is_ascii_alphanumeric() || "_.[]()#$%&@".contains(c) { c } else { '_' }).collect();
    if out.is_empty() || out.starts_with(|c: char| c.is_ascii_digit() || c == '.') {
        out.insert(0, '_');
    }
    if matches!(out.to_ascii_lowercase().as_str(), "free" | "inf" | "infinity") {
        out.push('_');
    }
    out
}

fn num(v: f64) -> String {
    if v == f64::INFINITY {
        "+inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else if v == libm::trunc(v) && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{:?}", v)
    }
}

struct Wrapped {
    out: String,
    col: usize,
}

impl Wrapped {
    fn start(&mut self, head: &str) {
        self.out.push(' ');
        self.out.push_str(head);
        self.col = 1 + head.len();
    }

    fn token(&mut self, tok: &str) {
        if self.col + 1 + tok.len() > LINE_WIDTH && self.col > 1 {
            self.out.push_str("\n  ");
            self.col = 2;
        } else {
            self.out.push(' ');
            self.col += 1;
        }
        self.out.push_str(tok);
        self.col += tok.len();
    }

    fn terms(&mut self, names: &[String], terms: &[(VarId, f64)]) {
        let mut first = true;
        for &(v, a) in terms {
            let name = &names[v.index()];
            let tok = match (first, a < 0.0) {
                (true, false) => format!("{} {}", num(a), name),
                (true, true) => format!("- {} {}", num(-a), name),
                (false, false) => format!("+ {} {}", num(a), name),
                (false, true) => format!("- {} {}", num(-a), name),
            };
            self.token(&tok);
            first = false;
        }
    }

    fn end_line(&mut self) {
        self.out.push('\n');
        self.col = 0;
    }
}

/// Renders `model` as LP text. Names are made LP-safe; sanitising must not
/// create collisions.
pub fn write_lp(model: &Model) -> Result<String, MilpError> {
    model.validate()?;
    let names: Vec<String> = model.variables.iter().map(|v| safe_name(&v.name)).collect();
    let mut sorted = names.clone();
    sorted.sort();
    if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
        return Err(MilpError::DuplicateName(w[0].clone()));
    }

    let mut w = Wrapped { out: String::new(), col: 0 };
    w.out.push_str(match model.objective.sense {
        ObjectiveSense::Maximize => "Maximize\n",
        ObjectiveSense::Minimize => "Minimize\n",
    });
    let obj = &model.objective;
    if obj.terms.is_empty() {
        w.out.push_str("\\ constant objective\n");
        w.start("obj:");
        w.token(&num(obj.constant));
    } else {
        w.start("obj:");
        w.terms(&names, &obj.terms);
        if obj.constant != 0.0 {
            let c = obj.constant;
            w.token(&if c < 0.0 { format!("- {}", num(-c)) } else { format!("+ {}", num(c)) });
        }
    }
    w.end_line();

    w.out.push_str("Subject To\n");
    let mut referenced = vec![false; names.len()];
    for &(v, _) in &obj.terms {
        referenced[v.index()] = true;
    }
    for (i, c) in model.constraints.iter().enumerate() {
        let cname = if c.name.is_empty() { format!("c{}", i + 1) } else { safe_name(&c.name) };
        w.start(&format!("{}:", cname));
        if c.terms.is_empty() {
            // LP needs at least one term
            match names.first() {
                Some(n) => w.token(&format!("0 {}", n)),
                None => continue,
            }
        } else {
            w.terms(&names, &c.terms);
        }
        for &(v, _) in &c.terms {
            referenced[v.index()] = true;
        }
        let op = match c.sense {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        };
        w.token(&format!("{} {}", op, num(c.rhs)));
        w.end_line();
    }

    let mut bounds = String::new();
    for (j, v) in model.variables.iter().enumerate() {
        let n = &names[j];
        let default = match v.kind {
            VarKind::Binary => (0.0, 1.0),
            VarKind::Continuous => (0.0, f64::INFINITY),
        };
        if (v.lower, v.upper) == default {
            if !referenced[j] && v.kind == VarKind::Continuous {
                let _ = writeln!(bounds, " {} >= 0", n);
            }
            continue;
        }
        if v.lower == v.upper {
            let _ = writeln!(bounds, " {} = {}", n, num(v.lower));
        } else if v.lower == f64::NEG_INFINITY && v.upper == f64::INFINITY {
            let _ = writeln!(bounds, " {} free", n);
        } else {
            let _ = writeln!(bounds, " {} <= {} <= {}", num(v.lower), n, num(v.upper));
        }
    }
    if !bounds.is_empty() {
        w.out.push_str("Bounds\n");
        w.out.push_str(&bounds);
    }

    let binaries: Vec<&String> =
        model.variables.iter().zip(&names).filter(|(v, _)| v.kind == VarKind::Binary).map(|(_, n)| n).collect();
    if !binaries.is_empty() {
        w.out.push_str("Binary\n");
        w.col = 0;
        for n in binaries {
            w.token(n);
        }
        w.end_line();
    }
    w.out.push_str("End\n");
    Ok(w.out)
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(Sense),
    Colon,
    Plus,
    Minus,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    None,
    Objective,
    Constraints,
    Bounds,
    Binary,
    End,
}

fn section_header(line: &str) -> Option<(Section, Option<ObjectiveSense>)> {
    let l = line.to_ascii_lowercase();
    let l = l.split_whitespace().collect::<Vec<_>>().join(" ");
    Some(match l.as_str() {
        "maximize" | "maximise" | "maximum" | "max" => (Section::Objective, Some(ObjectiveSense::Maximize)),
        "minimize" | "minimise" | "minimum" | "min" => (Section::Objective, Some(ObjectiveSense::Minimize)),
        "subject to" | "such that" | "st" | "s.t." => (Section::Constraints, None),
        "bounds" | "bound" => (Section::Bounds, None),
        "binary" | "binaries" | "bin" => (Section::Binary, None),
        "end" => (Section::End, None),
        _ => return None,
    })
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || "_.[]()#$%&@!\"',;?`{}|~/".contains(c)
}

fn tokenize(text: &str, line: usize) -> Result<Vec<Tok>, MilpError> {
    let err = |message: String| MilpError::Parse { line, message };
    let chars: Vec<char> = text.chars().collect();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c == '+' {
            toks.push(Tok::Plus);
            i += 1;
        } else if c == '-' {
            toks.push(Tok::Minus);
            i += 1;
        } else if c == ':' {
            toks.push(Tok::Colon);
            i += 1;
        } else if c == '<' || c == '>' || c == '=' {
            let mut op = String::from(c);
            if i + 1 < chars.len() && "<>=".contains(chars[i + 1]) {
                op.push(chars[i + 1]);
                i += 1;
            }
            i += 1;
            let sense = match op.as_str() {
                "<=" | "=<" | "<" => Sense::Le,
                ">=" | "=>" | ">" => Sense::Ge,
                "=" => Sense::Eq,
                _ => return Err(err(format!("bad operator `{}`", op))),
            };
            toks.push(Tok::Op(sense));
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut k = i + 1;
                if k < chars.len() && (chars[k] == '+' || chars[k] == '-') {
                    k += 1;
                }
                if k < chars.len() && chars[k].is_ascii_digit() {
                    i = k;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let s: String = chars[start..i].iter().collect();
            let v = s.parse::<f64>().map_err(|_| err(format!("bad number `{}`", s)))?;
            toks.push(Tok::Num(v));
        } else if is_ident_char(c) {
            let start = i;
            while i < chars.len() && is_ident_char(chars[i]) {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            match s.to_ascii_lowercase().as_str() {
                "inf" | "infinity" => toks.push(Tok::Num(f64::INFINITY)),
                _ => toks.push(Tok::Ident(s)),
            }
        } else {
            return Err(err(format!("unexpected character `{}`", c)));
        }
    }
    Ok(toks)
}

struct Builder {
    model: Model,
    index: BTreeMap<String, VarId>,
    explicit_bounds: Vec<bool>,
}

impl Builder {
    fn var(&mut self, name: &str) -> VarId {
        if let Some(&v) = self.index.get(name) {
            return v;
        }
        let v = self.model.add_continuous(name, 0.0, f64::INFINITY);
        self.index.insert(name.to_string(), v);
        self.explicit_bounds.push(false);
        v
    }
}

/// Parses a linear expression starting at `pos`. Returns terms, constant and
/// the position after the expression.
type Terms = Vec<(VarId, f64)>;

fn linear_expr(b: &mut Builder, toks: &[Tok], mut pos: usize, line: usize) -> Result<(Terms, f64, usize), MilpError> {
    let mut terms: Vec<(VarId, f64)> = Vec::new();
    let mut constant = 0.0;
    loop {
        let mut sign = 1.0;
        let mut saw_sign = false;
        while let Some(t @ (Tok::Plus | Tok::Minus)) = toks.get(pos) {
            if *t == Tok::Minus {
                sign = -sign;
            }
            saw_sign = true;
            pos += 1;
        }
        match (toks.get(pos), toks.get(pos + 1)) {
            (Some(Tok::Num(a)), Some(Tok::Ident(n))) => {
                let v = b.var(n);
                if *a != 0.0 {
                    terms.push((v, sign * a));
                }
                pos += 2;
            }
            (Some(Tok::Num(a)), _) => {
                constant += sign * a;
                pos += 1;
            }
            (Some(Tok::Ident(n)), _) => {
                let v = b.var(n);
                terms.push((v, sign));
                pos += 1;
            }
            _ => {
                if saw_sign {
                    return Err(MilpError::Parse { line, message: "dangling sign".into() });
                }
                return Ok((terms, constant, pos));
            }
        }
    }
}

fn signed_number(toks: &[Tok], pos: usize, line: usize) -> Result<(f64, usize), MilpError> {
    match (toks.get(pos), toks.get(pos + 1)) {
        (Some(Tok::Minus), Some(Tok::Num(v))) => Ok((-v, pos + 2)),
        (Some(Tok::Plus), Some(Tok::Num(v))) => Ok((*v, pos + 2)),
        (Some(Tok::Num(v)), _) => Ok((*v, pos + 1)),
        _ => Err(MilpError::Parse { line, message: "expected a number".into() }),
    }
}

/// Parses LP text into a [`Model`]. Variables are numbered in order of first
/// appearance.
pub fn read_lp(text: &str) -> Result<Model, MilpError> {
    let mut section = Section::None;
    let mut sense = None;
    // (section, first line number, joined text)
    let mut blocks: Vec<(Section, usize, String)> = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line_no = k + 1;
        let line = raw.split('\\').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some((s, os)) = section_header(line) {
            if s == Section::Objective {
                if sense.is_some() {
                    return Err(MilpError::Parse { line: line_no, message: "second objective".into() });
                }
                sense = os;
            }
            section = s;
            continue;
        }
        match section {
            Section::None => {
                return Err(MilpError::Parse { line: line_no, message: "text before objective section".into() })
            }
            Section::End => return Err(MilpError::Parse { line: line_no, message: "text after End".into() }),
            _ => {}
        }
        // a line that opens a new statement in line-oriented sections
        let starts_statement = match section {
            Section::Bounds => true,
            Section::Constraints => {
                let t = tokenize(line, line_no)?;
                matches!((t.first(), t.get(1)), (Some(Tok::Ident(_)), Some(Tok::Colon)))
                    || blocks.last().is_none_or(|(s, _, txt)| *s != section || statement_complete(txt))
            }
            _ => false,
        };
        match blocks.last_mut() {
            Some((s, _, txt)) if *s == section && !starts_statement => {
                txt.push(' ');
                txt.push_str(line);
            }
            _ => blocks.push((section, line_no, line.to_string())),
        }
    }
    let Some(sense) = sense else {
        return Err(MilpError::Parse { line: 1, message: "missing Maximize/Minimize".into() });
    };
    if section != Section::End {
        return Err(MilpError::Parse { line: text.lines().count(), message: "missing End".into() });
    }

    let mut b = Builder { model: Model::new(sense), index: BTreeMap::new(), explicit_bounds: Vec::new() };
    let mut binaries = Vec::new();
    for (sec, line, txt) in blocks {
        let toks = tokenize(&txt, line)?;
        match sec {
            Section::Objective => {
                let start =
                    if matches!((toks.first(), toks.get(1)), (Some(Tok::Ident(_)), Some(Tok::Colon))) { 2 } else { 0 };
                let (terms, constant, end) = linear_expr(&mut b, &toks, start, line)?;
                if end != toks.len() {
                    return Err(MilpError::Parse { line, message: "trailing tokens in objective".into() });
                }
                b.model.objective.terms = terms;
                b.model.objective.constant = constant;
            }
            Section::Constraints => {
                let (name, start) = match (toks.first(), toks.get(1)) {
                    (Some(Tok::Ident(n)), Some(Tok::Colon)) => (n.clone(), 2),
                    _ => (format!("c{}", b.model.constraints.len() + 1), 0),
                };
                let (terms, constant, end) = linear_expr(&mut b, &toks, start, line)?;
                let Some(Tok::Op(s)) = toks.get(end) else {
                    return Err(MilpError::Parse { line, message: "expected a comparison".into() });
                };
                let (rhs, end) = signed_number(&toks, end + 1, line)?;
                if end != toks.len() {
                    return Err(MilpError::Parse { line, message: "trailing tokens in constraint".into() });
                }
                b.model.add_constraint(name, terms, *s, rhs - constant);
            }
            Section::Bounds => parse_bound(&mut b, &toks, line)?,
            Section::Binary => {
                for t in &toks {
                    match t {
                        Tok::Ident(n) => binaries.push(b.var(n)),
                        _ => return Err(MilpError::Parse { line, message: "expected variable names".into() }),
                    }
                }
            }
            Section::None | Section::End => {}
        }
    }
    for v in binaries {
        let var = &mut b.model.variables[v.index()];
        var.kind = VarKind::Binary;
        if !b.explicit_bounds[v.index()] {
            var.lower = 0.0;
            var.upper = 1.0;
        }
    }
    b.model.validate()?;
    Ok(b.model)
}

fn statement_complete(txt: &str) -> bool {
    match tokenize(txt, 0) {
        Ok(t) => {
            let n = t.len();
            n >= 2 && matches!(t[n - 1], Tok::Num(_)) && t[..n - 1].iter().any(|x| matches!(x, Tok::Op(_)))
        }
        Err(_) => false,
    }
}

fn parse_bound(b: &mut Builder, toks: &[Tok], line: usize) -> Result<(), MilpError> {
    let err = |m: &str| MilpError::Parse { line, message: m.into() };
    // `x free`
    if let [Tok::Ident(n), Tok::Ident(kw)] = toks {
        if kw.eq_ignore_ascii_case("free") {
            let v = b.var(n);
            let var = &mut b.model.variables[v.index()];
            var.lower = f64::NEG_INFINITY;
            var.upper = f64::INFINITY;
            b.explicit_bounds[v.index()] = true;
            return Ok(());
        }
        return Err(err("unrecognised bound"));
    }
    if let Some(Tok::Ident(n)) = toks.first() {
        // `x op value`
        let v = b.var(n);
        let Some(Tok::Op(s)) = toks.get(1) else { return Err(err("expected a comparison")) };
        let (val, end) = signed_number(toks, 2, line)?;
        if end != toks.len() {
            return Err(err("trailing tokens in bound"));
        }
        let var = &mut b.model.variables[v.index()];
        match s {
            Sense::Le => var.upper = val,
            Sense::Ge => var.lower = val,
            Sense::Eq => {
                var.lower = val;
                var.upper = val;
            }
        }
        b.explicit_bounds[v.index()] = true;
        return Ok(());
    }
    // `lo <= x [<= up]`
    let (lo, pos) = signed_number(toks, 0, line)?;
    let (Some(Tok::Op(s1)), Some(Tok::Ident(n))) = (toks.get(pos), toks.get(pos + 1)) else {
        return Err(err("unrecognised bound"));
    };
    let v = b.var(n);
    let apply_left = |var: &mut super::Variable, s: Sense, val: f64| match s {
        Sense::Le => var.lower = val,
        Sense::Ge => var.upper = val,
        Sense::Eq => {
            var.lower = val;
            var.upper = val;
        }
    };
    apply_left(&mut b.model.variables[v.index()], *s1, lo);
    let mut pos = pos + 2;
    if let Some(Tok::Op(s2)) = toks.get(pos) {
        let (hi, end) = signed_number(toks, pos + 1, line)?;
        pos = end;
        let var = &mut b.model.variables[v.index()];
        match s2 {
            Sense::Le => var.upper = hi,
            Sense::Ge => var.lower = hi,
            Sense::Eq => {
                var.lower = hi;
                var.upper = hi;
            }
        }
    }
    if pos != toks.len() {
        return Err(err("trailing tokens in bound"));
    }
    b.explicit_bounds[v.index()] = true;
    Ok(())
}
