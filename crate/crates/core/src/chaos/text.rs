//! Sparse text dump of a chaos element.
//!
//! ```text
//! # fraclevy chaos v1
//! # cells -1.0 1.0 8 marks 2 order 4
//! # overflow false dropped 0.0
//! - -> 1.0
//! 3:1 -> 0.25
//! 3:1 5:2 -> -0.125
//! ```
//!
//! One term per line: the multi-index as `k:count` pairs (`-` for the constant
//! term), then `->` and the coefficient in shortest round-trip form.

use std::fmt::Write as _;
use std::sync::Arc;

use super::basis::Basis;
use super::element::ChaosElement;
use super::multi_index::MultiIndex;
use crate::error::{Error, Result};

const MAGIC: &str = "# fraclevy chaos v1";

pub fn to_text(f: &ChaosElement) -> String {
    let b = f.basis();
    let g = b.grid();
    let mut s = String::new();
    let _ = writeln!(s, "{MAGIC}");
    let _ = writeln!(
        s,
        "# cells {:?} {:?} {} marks {} order {}",
        g.t_min(),
        g.t_max(),
        g.n_cells(),
        b.n_marks(),
        b.order()
    );
    let _ = writeln!(s, "# overflow {} dropped {:?}", f.overflow(), f.dropped_mass());
    for (a, c) in f.terms() {
        let _ = writeln!(s, "{a} -> {c:?}");
    }
    s
}

fn parse_err(line: usize, reason: impl Into<String>) -> Error {
    Error::Parse {
        line,
        reason: reason.into(),
    }
}

/// Reads an element written by [`to_text`] onto `basis`, whose shape must
/// match the header.
pub fn from_text(basis: &Arc<Basis>, text: &str) -> Result<ChaosElement> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, l)) if l.trim() == MAGIC => {}
        _ => return Err(parse_err(1, format!("expected `{MAGIC}`"))),
    }
    let (n, header) = lines.next().ok_or_else(|| parse_err(2, "missing basis header"))?;
    let f: Vec<&str> = header.split_whitespace().collect();
    let shape_ok = f.len() == 9
        && f[1] == "cells"
        && f[4].parse::<usize>().ok() == Some(basis.grid().n_cells())
        && f[6].parse::<usize>().ok() == Some(basis.n_marks())
        && f[8].parse::<usize>().ok() == Some(basis.order());
    if !shape_ok {
        return Err(parse_err(n + 1, format!("basis header `{header}` does not match the basis")));
    }
    let (n, flags) = lines.next().ok_or_else(|| parse_err(3, "missing overflow header"))?;
    let f: Vec<&str> = flags.split_whitespace().collect();
    if f.len() != 5 || f[1] != "overflow" || f[3] != "dropped" {
        return Err(parse_err(n + 1, "malformed overflow header"));
    }
    let overflow: bool = f[2].parse().map_err(|_| parse_err(n + 1, "overflow must be true/false"))?;
    let dropped: f64 = f[4].parse().map_err(|_| parse_err(n + 1, "bad dropped mass"))?;
    let mut terms = Vec::new();
    for (n, line) in lines {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (idx, coef) = line
            .split_once("->")
            .ok_or_else(|| parse_err(n + 1, "expected `index -> coefficient`"))?;
        let coef: f64 = coef
            .trim()
            .parse()
            .map_err(|_| parse_err(n + 1, format!("bad coefficient `{}`", coef.trim())))?;
        let idx = idx.trim();
        let a = if idx == "-" {
            MultiIndex::zero()
        } else {
            let mut pairs = Vec::new();
            for p in idx.split_whitespace() {
                let (k, c) = p
                    .split_once(':')
                    .ok_or_else(|| parse_err(n + 1, format!("bad pair `{p}`")))?;
                let k: usize = k.parse().map_err(|_| parse_err(n + 1, format!("bad index `{k}`")))?;
                let c: u32 = c.parse().map_err(|_| parse_err(n + 1, format!("bad count `{c}`")))?;
                pairs.push((k, c));
            }
            MultiIndex::from_pairs(pairs)
        };
        terms.push((a, coef));
    }
    let mut e = ChaosElement::from_terms(basis, terms)?;
    if overflow {
        e.mark_overflow(dropped);
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TimeGrid;
    use crate::levy::Atom;

    #[test]
    fn round_trip() {
        let g = TimeGrid::new(-1.0, 1.0, 8).unwrap();
        let b = Basis::new(g, vec![Atom { size: 0.5, mass: 2.0 }], 4).unwrap();
        let f = ChaosElement::from_terms(
            &b,
            [
                (MultiIndex::zero(), 1.0),
                (MultiIndex::unit(3), 0.1 + 0.2),
                (MultiIndex::from_pairs([(3, 1), (5, 2)]), -1e-300),
            ],
        )
        .unwrap();
        let text = to_text(&f);
        let back = from_text(&b, &text).unwrap();
        assert_eq!(back, f);
        assert!(text.contains("3:1 5:2 -> -1e-300"));
        let other = b.with_order(3);
        assert!(from_text(&other, &text).is_err());
        assert!(matches!(
            from_text(&b, &text.replace("-> 1.0", "-> x")),
            Err(Error::Parse { line: 4, .. })
        ));
    }
}
