//! Plain-text series exchange.
//!
//! ```text
//! # comment
//! ndof 2
//! K 4
//! grading torus
//! action_cap 6        (optional)
//! polar_cap 6         (optional)
//! knorm l1            (optional, l1|linf)
//! kinds a a           (optional, a = action, p = polar)
//! 1.0000000000000000e0  1 0  c  0 0
//! ```
//!
//! Monomial lines are `coeff l1 .. ln parity k1 .. kn`. Coefficients are written
//! with 17 significant digits, which round-trips every `f64` exactly.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use super::truncate::{KNorm, Truncation};
use super::{DofKind, Grading, Parity, PoissonSeries, TrigMonomial};
use crate::error::{Error, Result};

pub fn to_string(f: &PoissonSeries) -> String {
    let mut s = String::new();
    write_header(f, &mut s);
    let n = f.n_dof();
    for (key, c) in f.terms() {
        let _ = write!(s, "{c:.16e}");
        for e in &key.l[..n] {
            let _ = write!(s, " {e}");
        }
        let _ = write!(s, " {}", key.parity.symbol());
        for e in &key.k[..n] {
            let _ = write!(s, " {e}");
        }
        s.push('\n');
    }
    s
}

fn write_header(f: &PoissonSeries, s: &mut String) {
    let t = f.truncation();
    let _ = writeln!(s, "ndof {}", f.n_dof());
    if t.k_budget == u32::MAX {
        let _ = writeln!(s, "K none");
    } else {
        let _ = writeln!(s, "K {}", t.k_budget);
    }
    let _ = writeln!(s, "grading {}", t.grading.name());
    if let Some(c) = t.action_cap {
        let _ = writeln!(s, "action_cap {c}");
    }
    if let Some(c) = t.polar_cap {
        let _ = writeln!(s, "polar_cap {c}");
    }
    if t.k_norm != KNorm::L1 {
        let _ = writeln!(s, "knorm {}", t.k_norm.name());
    }
    if f.kinds().iter().any(|k| *k == DofKind::Polar) {
        s.push_str("kinds");
        for k in f.kinds() {
            s.push_str(match k {
                DofKind::Action => " a",
                DofKind::Polar => " p",
            });
        }
        s.push('\n');
    }
}

pub fn write<W: Write>(f: &PoissonSeries, mut w: W) -> std::io::Result<()> {
    w.write_all(to_string(f).as_bytes())
}

pub fn write_file(f: &PoissonSeries, path: &std::path::Path) -> std::io::Result<()> {
    std::fs::write(path, to_string(f))
}

pub fn from_str(text: &str) -> Result<PoissonSeries> {
    read(text.as_bytes())
}

pub fn read_file(path: &std::path::Path) -> Result<PoissonSeries> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io { path: path.display().to_string(), msg: e.to_string() })?;
    from_str(&text)
}

pub fn read<R: BufRead>(r: R) -> Result<PoissonSeries> {
    let mut n_dof: Option<usize> = None;
    let mut trunc = Truncation::raw();
    let mut kinds: Option<Vec<DofKind>> = None;
    let mut monomials = Vec::new();

    for (idx, line) in r.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::Parse {
            line: lineno,
            msg: e.to_string(),
        })?;
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut tok = line.split_whitespace();
        let head = tok.next().unwrap_or_default();
        let perr = |msg: String| Error::Parse { line: lineno, msg };
        let parse_u32 = |s: Option<&str>| -> Result<u32> {
            s.ok_or_else(|| perr("missing value".into()))?
                .parse::<u32>()
                .map_err(|e| perr(e.to_string()))
        };
        match head {
            "ndof" => n_dof = Some(parse_u32(tok.next())? as usize),
            "K" => {
                trunc.k_budget = match tok.next() {
                    Some("none") => u32::MAX,
                    other => parse_u32(other)?,
                }
            }
            "grading" => {
                trunc.grading = match tok.next() {
                    Some("torus") => Grading::Torus,
                    Some("raw") => Grading::Raw,
                    other => return Err(perr(format!("unknown grading {other:?}"))),
                }
            }
            "action_cap" => trunc.action_cap = Some(parse_u32(tok.next())?),
            "polar_cap" => trunc.polar_cap = Some(parse_u32(tok.next())?),
            "knorm" => {
                trunc.k_norm = match tok.next() {
                    Some("l1") => KNorm::L1,
                    Some("linf") => KNorm::LInf,
                    other => return Err(perr(format!("unknown k norm {other:?}"))),
                }
            }
            "kinds" => {
                let v = tok
                    .map(|t| match t {
                        "a" => Ok(DofKind::Action),
                        "p" => Ok(DofKind::Polar),
                        _ => Err(perr(format!("unknown dof kind {t:?}"))),
                    })
                    .collect::<Result<Vec<_>>>()?;
                kinds = Some(v);
            }
            _ => {
                let n = n_dof.ok_or_else(|| perr("monomial before ndof header".into()))?;
                let coeff: f64 = head
                    .parse()
                    .map_err(|_| perr(format!("bad coefficient {head:?}")))?;
                let rest: Vec<&str> = tok.collect();
                if rest.len() != 2 * n + 1 {
                    return Err(perr(format!(
                        "expected {} fields after the coefficient, found {}",
                        2 * n + 1,
                        rest.len()
                    )));
                }
                let l = rest[..n]
                    .iter()
                    .map(|t| t.parse::<u32>().map_err(|e| perr(e.to_string())))
                    .collect::<Result<Vec<_>>>()?;
                let parity = match rest[n] {
                    "c" => Parity::Cos,
                    "s" => Parity::Sin,
                    other => return Err(perr(format!("parity must be c or s, got {other:?}"))),
                };
                let k = rest[n + 1..]
                    .iter()
                    .map(|t| t.parse::<i32>().map_err(|e| perr(e.to_string())))
                    .collect::<Result<Vec<_>>>()?;
                monomials.push(TrigMonomial {
                    coeff,
                    l,
                    k,
                    parity,
                });
            }
        }
    }
    let n = n_dof.ok_or(Error::Parse {
        line: 0,
        msg: "missing ndof header".into(),
    })?;
    let kinds = kinds.unwrap_or_else(|| vec![DofKind::Action; n]);
    PoissonSeries::from_monomials_with_kinds(n, &kinds, trunc, monomials)
}
