//! Sampled kernel pairs as CSV: a `t,k,l` header, then one row per sample
//! time starting at `t = 0`. Lines starting with `#` are comments.

use crate::io::format_float;
use crate::kernel::{Kernel, KernelError, KernelTable, SoninePair};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PairTableError {
    #[error("missing `t,k,l` header")]
    Header,
    #[error("line {line}: expected 3 fields, found {found}")]
    Width { line: usize, found: usize },
    #[error("line {line}: cannot parse `{text}` as a number")]
    Number { line: usize, text: String },
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

pub fn parse_pair_table(text: &str) -> Result<SoninePair, PairTableError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    match lines.next() {
        Some((_, h)) if h.split(',').map(str::trim).eq(["t", "k", "l"]) => {}
        _ => return Err(PairTableError::Header),
    }
    let (mut t, mut k, mut l) = (Vec::new(), Vec::new(), Vec::new());
    for (line, row) in lines {
        let fields: Vec<&str> = row.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(PairTableError::Width {
                line,
                found: fields.len(),
            });
        }
        let mut parsed = [0.0; 3];
        for (slot, text) in parsed.iter_mut().zip(&fields) {
            *slot = text.parse().map_err(|_| PairTableError::Number {
                line,
                text: text.to_string(),
            })?;
        }
        t.push(parsed[0]);
        k.push(parsed[1]);
        l.push(parsed[2]);
    }
    let k = Kernel::Tabulated(KernelTable::new(t.clone(), k)?);
    let l = Kernel::Tabulated(KernelTable::new(t, l)?);
    Ok(SoninePair::new(k, l)?)
}

/// Samples both kernels at `times` (the first must be 0 and both kernels
/// finite there).
pub fn write_pair_table(pair: &SoninePair, times: &[f64]) -> String {
    let mut out = String::from("t,k,l\n");
    for &t in times {
        let row = [
            format_float(t),
            format_float(pair.k.eval(t)),
            format_float(pair.l.eval(t)),
        ];
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_pair_round_trips() {
        let text = "# sampled\nt,k,l\n0,1,1\n0.5,0.8,0.9\n1.0,0.7,0.85\n";
        let pair = parse_pair_table(text).unwrap();
        let again = parse_pair_table(&write_pair_table(&pair, &[0.0, 0.5, 1.0])).unwrap();
        assert_eq!(pair, again);
        assert!((pair.k.eval(0.25) - 0.9).abs() < 1e-15);
    }

    #[test]
    fn malformed_tables() {
        assert_eq!(parse_pair_table(""), Err(PairTableError::Header));
        assert_eq!(parse_pair_table("t,k\n"), Err(PairTableError::Header));
        assert!(matches!(
            parse_pair_table("t,k,l\n0,1\n"),
            Err(PairTableError::Width { line: 2, .. })
        ));
        assert!(matches!(
            parse_pair_table("t,k,l\n0,x,1\n1,1,1\n"),
            Err(PairTableError::Number { .. })
        ));
        // increasing kernel
        assert!(matches!(
            parse_pair_table("t,k,l\n0,1,1\n1,2,1\n"),
            Err(PairTableError::Kernel(_))
        ));
        // does not start at 0
        assert!(parse_pair_table("t,k,l\n1,1,1\n2,1,1\n").is_err());
        assert!(parse_pair_table("t,k,l\n0,nan,1\n1,1,1\n").is_err());
    }
}
