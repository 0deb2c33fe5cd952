use crate::symcore::{parse, Expr, Sym, SymMatrix};

use super::{AffineSystem, Domain, SysError};

/// One logical entry of a section: a line, or a bracketed list that may
/// span several lines. `col` is the 0-based byte column of `text`.
#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub line: usize,
    pub col: usize,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    pub name: String,
    pub line: usize,
    pub entries: Vec<Entry>,
}

impl Section {
    pub fn err(&self, msg: impl Into<String>) -> SysError {
        SysError::Parse {
            line: self.line,
            col: 1,
            msg: msg.into(),
        }
    }

    /// All comma-separated items across the section's entries, brackets
    /// stripped.
    pub fn items(&self) -> Result<Vec<Entry>, SysError> {
        let mut out = Vec::new();
        for e in &self.entries {
            out.extend(split_entry(e)?);
        }
        Ok(out)
    }

    pub fn exprs(&self) -> Result<Vec<Expr>, SysError> {
        self.items()?.iter().map(parse_entry).collect()
    }

    /// `name = value` entries.
    pub fn bindings(&self) -> Result<Vec<(String, Entry)>, SysError> {
        self.entries
            .iter()
            .map(|e| {
                let eq = e.text.find('=').ok_or_else(|| SysError::Parse {
                    line: e.line,
                    col: e.col + 1,
                    msg: "expected `name = value`".into(),
                })?;
                let name = e.text[..eq].trim().to_string();
                let rest = &e.text[eq + 1..];
                let lead = rest.len() - rest.trim_start().len();
                Ok((
                    name,
                    Entry {
                        line: e.line,
                        col: e.col + eq + 1 + lead,
                        text: rest.trim().to_string(),
                    },
                ))
            })
            .collect()
    }
}

pub fn parse_entry(e: &Entry) -> Result<Expr, SysError> {
    parse(&e.text).map_err(|err| SysError::parse_at(e.line, e.col + 1, &err))
}

/// Splits `[a, b, c]` (or a bare `a, b, c`) at top-level commas.
pub fn parse_bracket_list(text: &str) -> Result<Vec<(usize, String)>, String> {
    let t = text.trim_end();
    let lead = t.len() - t.trim_start().len();
    let t = t.trim_start();
    let (body, off) = if let Some(rest) = t.strip_prefix('[') {
        let inner = rest.strip_suffix(']').ok_or("missing closing `]`")?;
        (inner, lead + 1)
    } else {
        (t, lead)
    };
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0usize;
    let bytes = body.as_bytes();
    for (i, &c) in bytes.iter().enumerate() {
        match c {
            b'(' => depth += 1,
            b')' => depth -= 1,
            b',' if depth == 0 => {
                push_item(body, start, i, off, &mut out);
                start = i + 1;
            }
            _ => {}
        }
    }
    if !body.trim().is_empty() || !out.is_empty() {
        push_item(body, start, body.len(), off, &mut out);
    }
    if out.iter().any(|(_, s)| s.is_empty()) {
        return Err("empty list item".into());
    }
    Ok(out)
}

fn push_item(body: &str, start: usize, end: usize, off: usize, out: &mut Vec<(usize, String)>) {
    let raw = &body[start..end];
    let lead = raw.len() - raw.trim_start().len();
    out.push((off + start + lead, raw.trim().to_string()));
}

fn split_entry(e: &Entry) -> Result<Vec<Entry>, SysError> {
    parse_bracket_list(&e.text)
        .map(|items| {
            items
                .into_iter()
                .map(|(c, text)| Entry {
                    line: e.line,
                    col: e.col + c,
                    text,
                })
                .collect()
        })
        .map_err(|msg| SysError::Parse {
            line: e.line,
            col: e.col + 1,
            msg,
        })
}

/// Splits text into `[name]` sections, where `name` is one of `known`.
/// `#` starts a comment.
pub struct SectionReader;

impl SectionReader {
    pub fn read(text: &str, known: &[&str]) -> Result<Vec<Section>, SysError> {
        let mut sections: Vec<Section> = Vec::new();
        let mut pending: Option<Entry> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("");
            if content.trim().is_empty() {
                continue;
            }
            let lead = content.len() - content.trim_start().len();
            let trimmed = content.trim();
            if let Some(p) = pending.as_mut() {
                p.text.push(' ');
                p.text.push_str(trimmed);
                if balanced(&p.text) {
                    let done = pending.take().unwrap();
                    sections.last_mut().unwrap().entries.push(done);
                }
                continue;
            }
            if trimmed.starts_with('[')
                && trimmed.ends_with(']')
                && known.contains(&trimmed[1..trimmed.len() - 1].trim())
            {
                sections.push(Section {
                    name: trimmed[1..trimmed.len() - 1].trim().to_string(),
                    line,
                    entries: Vec::new(),
                });
                continue;
            }
            let Some(sec) = sections.last_mut() else {
                return Err(SysError::Parse {
                    line,
                    col: lead + 1,
                    msg: "content before the first section".into(),
                });
            };
            let entry = Entry {
                line,
                col: lead,
                text: trimmed.to_string(),
            };
            if balanced(&entry.text) {
                sec.entries.push(entry);
            } else {
                pending = Some(entry);
            }
        }
        if let Some(p) = pending {
            return Err(SysError::Parse {
                line: p.line,
                col: p.col + 1,
                msg: "unterminated `[`".into(),
            });
        }
        Ok(sections)
    }
}

fn balanced(t: &str) -> bool {
    t.matches('[').count() <= t.matches(']').count()
}

fn find<'a>(secs: &'a [Section], name: &str) -> Option<&'a Section> {
    secs.iter().find(|s| s.name == name)
}

pub fn parse_system(text: &str) -> Result<AffineSystem, SysError> {
    let secs = SectionReader::read(text, &["states", "f", "g", "h", "domain"])?;
    let need = |name: &str| {
        find(&secs, name).ok_or_else(|| SysError::Parse {
            line: 1,
            col: 1,
            msg: format!("missing section [{name}]"),
        })
    };
    let states: Vec<Sym> = need("states")?
        .items()?
        .into_iter()
        .map(|e| Sym::from(e.text.as_str()))
        .collect();
    let n = states.len();
    let f = need("f")?.exprs()?;
    let gsec = need("g")?;
    let rows: Vec<Vec<Expr>> = gsec
        .entries
        .iter()
        .map(|e| {
            split_entry(e)?
                .iter()
                .map(parse_entry)
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<_, _>>()?;
    let g = if rows.len() == n && n > 1 {
        let m = rows[0].len();
        if rows.iter().any(|r| r.len() != m) {
            return Err(gsec.err("rows of [g] differ in length"));
        }
        SymMatrix::from_rows(rows, m)
    } else {
        let flat: Vec<Expr> = rows.into_iter().flatten().collect();
        if n == 0 || !flat.len().is_multiple_of(n) {
            return Err(gsec.err(format!(
                "[g] has {} entries, not a multiple of n = {n}",
                flat.len()
            )));
        }
        SymMatrix::new(n, flat.len() / n, flat)
    };
    let h = need("h")?.exprs()?;
    let mut domain = Domain::unit(n);
    if let Some(d) = find(&secs, "domain") {
        for e in &d.entries {
            let (target, body) = match e.text.find('=') {
                Some(eq) => (Some(e.text[..eq].trim().to_string()), &e.text[eq + 1..]),
                None => (None, e.text.as_str()),
            };
            let bad = |msg: &str| SysError::Parse {
                line: e.line,
                col: e.col + 1,
                msg: msg.to_string(),
            };
            let vals = parse_bracket_list(body).map_err(|m| bad(&m))?;
            if vals.len() != 2 {
                return Err(bad("expected `[lo, hi]`"));
            }
            let num = |s: &str| -> Result<f64, SysError> {
                let ex = parse(s).map_err(|_| bad("bad bound"))?;
                ex.as_num()
                    .map(|v| v.to_f64())
                    .ok_or_else(|| bad("bound must be numeric"))
            };
            let (lo, hi) = (num(&vals[0].1)?, num(&vals[1].1)?);
            match target {
                Some(name) => {
                    let i = states
                        .iter()
                        .position(|s| **s == *name)
                        .ok_or_else(|| bad("unknown state in [domain]"))?;
                    domain.lo[i] = lo;
                    domain.hi[i] = hi;
                }
                None => {
                    domain.lo = vec![lo; n];
                    domain.hi = vec![hi; n];
                }
            }
        }
    }
    AffineSystem::new(states, f, g, h, domain)
}

fn list(es: &[Expr]) -> String {
    let parts: Vec<String> = es.iter().map(|e| e.to_string()).collect();
    format!("[{}]", parts.join(", "))
}

pub fn render_system(sys: &AffineSystem) -> String {
    let mut s = String::new();
    let names: Vec<&str> = sys.states.iter().map(|v| &**v).collect();
    s.push_str(&format!(
        "[states]\n{}\n\n[f]\n{}\n\n[g]\n",
        names.join(", "),
        list(&sys.f)
    ));
    for i in 0..sys.n() {
        s.push_str(&list(&sys.g.row(i)));
        s.push('\n');
    }
    s.push_str(&format!("\n[h]\n{}\n\n[domain]\n", list(&sys.h)));
    for (i, v) in sys.states.iter().enumerate() {
        s.push_str(&format!(
            "{v} = [{:?}, {:?}]\n",
            sys.domain.lo[i], sys.domain.hi[i]
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    const EX31: &str = "\
[states]
x1, x2, x3, x4, x5
[f]
[x3, x5, x1, x1*x2, x4]
[g]
[0, 0]
[0, 0]
[1, x3]
[0, 1]
[x4, x3*x4]
[h]
[x1, x2]
[domain]
x1 = [-0.9, 0.9]
";

    #[test]
    fn loads_and_round_trips() {
        let sys = parse_system(EX31).unwrap();
        assert_eq!((sys.n(), sys.m(), sys.p()), (5, 2, 2));
        assert_eq!(sys.domain.hi[0], 0.9);
        let again = parse_system(&render_system(&sys)).unwrap();
        assert_eq!(again, sys);
    }

    #[test]
    fn rejects_nonzero_output_at_origin() {
        let bad = EX31.replace("[x1, x2]", "[x1 + 1, x2]");
        assert_eq!(parse_system(&bad).unwrap_err(), SysError::HNonzero(1));
        assert_eq!(
            parse_system(&bad).unwrap_err().to_string(),
            "h(0)≠0 at component 1"
        );
    }

    #[test]
    fn reports_position_of_syntax_errors() {
        let bad = EX31.replace("x1*x2,", "x1*/x2,");
        match parse_system(&bad).unwrap_err() {
            SysError::Parse { line, col, .. } => assert_eq!((line, col), (4, 17)),
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn multiline_lists() {
        let text = "[states]\nx1, x2\n[f]\n[x2,\n -x1]\n[g]\n[0, 1]\n[h]\n[x1]\n";
        let sys = parse_system(text).unwrap();
        assert_eq!(sys.f.len(), 2);
        assert_eq!(sys.m(), 1);
    }
}
