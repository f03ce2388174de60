//! Plain-text model format.
//!
//! A file is a sequence of blocks. Each block starts with a header line
//! `<name> <rows> <cols>` followed by `rows * cols` whitespace-separated
//! values in row-major order (line breaks are free). `#` starts a comment.
//!
//! Required blocks: `A`, `Bc`, `Bd`, `C`. Optional: `D` (must be all zeros)
//! and `M` (Gram matrix of the state inner product).
//!
//! ```text
//! # scalar toy model
//! A 1 1
//! -1
//! Bc 1 1
//! 1
//! Bd 1 1
//! 1
//! C 1 1
//! 1
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use ndarray::Array2;

use crate::error::{RegError, Result};
use crate::state_space::StateSpaceModel;

const BLOCKS: [&str; 6] = ["A", "Bc", "Bd", "C", "D", "M"];

fn parse_error(line: usize, message: impl Into<String>) -> RegError {
    RegError::Parse {
        line,
        message: message.into(),
    }
}

pub fn parse_model(text: &str) -> Result<StateSpaceModel> {
    let mut blocks: BTreeMap<String, Array2<f64>> = BTreeMap::new();
    let mut current: Option<(String, usize, usize, usize, Vec<f64>)> = None;

    let finish = |cur: Option<(String, usize, usize, usize, Vec<f64>)>,
                  blocks: &mut BTreeMap<String, Array2<f64>>|
     -> Result<()> {
        if let Some((name, rows, cols, line, values)) = cur {
            if values.len() != rows * cols {
                return Err(parse_error(
                    line,
                    format!(
                        "block {name} expects {} values, found {}",
                        rows * cols,
                        values.len()
                    ),
                ));
            }
            let m = Array2::from_shape_vec((rows, cols), values)
                .map_err(|e| parse_error(line, e.to_string()))?;
            blocks.insert(name, m);
        }
        Ok(())
    };

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace().peekable();
        let first = *tokens.peek().unwrap();
        if first
            .chars()
            .next()
            .is_some_and(|c| c.is_ascii_alphabetic())
            && BLOCKS.contains(&first)
        {
            let name = tokens.next().unwrap().to_string();
            let dims: Vec<usize> = tokens
                .map(|t| {
                    t.parse::<usize>()
                        .map_err(|_| parse_error(lineno, format!("bad dimension '{t}'")))
                })
                .collect::<Result<_>>()?;
            if dims.len() != 2 {
                return Err(parse_error(
                    lineno,
                    format!("header '{name}' needs <rows> <cols>"),
                ));
            }
            if blocks.contains_key(&name) || current.as_ref().is_some_and(|c| c.0 == name) {
                return Err(parse_error(lineno, format!("duplicate block {name}")));
            }
            finish(current.take(), &mut blocks)?;
            current = Some((
                name,
                dims[0],
                dims[1],
                lineno,
                Vec::with_capacity(dims[0] * dims[1]),
            ));
            continue;
        }
        let Some(cur) = current.as_mut() else {
            return Err(parse_error(lineno, "values before any block header"));
        };
        for t in tokens {
            let v: f64 = t
                .parse()
                .map_err(|_| parse_error(lineno, format!("bad number '{t}'")))?;
            cur.4.push(v);
        }
    }
    finish(current.take(), &mut blocks)?;

    let mut take = |name: &str| -> Result<Array2<f64>> {
        blocks
            .remove(name)
            .ok_or_else(|| parse_error(0, format!("missing required block {name}")))
    };
    let a = take("A")?;
    let b_c = take("Bc")?;
    let b_d = take("Bd")?;
    let c = take("C")?;
    let gram = blocks.remove("M");
    match blocks.remove("D") {
        Some(d) => StateSpaceModel::with_feedthrough(a, b_c, b_d, c, &d, gram),
        None => StateSpaceModel::new(a, b_c, b_d, c, gram),
    }
}

pub fn read_model(path: &Path) -> Result<StateSpaceModel> {
    parse_model(&std::fs::read_to_string(path)?)
}

fn write_block(out: &mut String, name: &str, m: &Array2<f64>) {
    let _ = writeln!(out, "{name} {} {}", m.nrows(), m.ncols());
    for row in m.rows() {
        let line: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        let _ = writeln!(out, "{}", line.join(" "));
    }
}

/// Serializes a model with 17 significant digits (exact round trip).
pub fn format_model(model: &StateSpaceModel) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# state dim {}, inputs {}, disturbances {}",
        model.dim_x(),
        model.dim_u(),
        model.dim_d()
    );
    write_block(&mut out, "A", model.a());
    write_block(&mut out, "Bc", model.b_c());
    write_block(&mut out, "Bd", model.b_d());
    write_block(&mut out, "C", model.c());
    if let Some(m) = model.gram() {
        write_block(&mut out, "M", m);
    }
    out
}

pub fn write_model(path: &Path, model: &StateSpaceModel) -> Result<()> {
    std::fs::write(path, format_model(model))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    const TOY: &str = "# toy\nA 1 1\n-1\nBc 1 1\n1\nBd 1 1\n1\nC 1 1\n1\n";

    #[test]
    fn parses_toy() {
        let m = parse_model(TOY).unwrap();
        assert_eq!(m.a(), &array![[-1.0]]);
        assert_eq!(m.dim_u(), 1);
    }

    #[test]
    fn round_trip_is_exact() {
        let m = StateSpaceModel::new(
            array![[-0.1, 1.0 / 3.0], [std::f64::consts::PI, -2.0]],
            array![[1.0], [0.25]],
            array![[0.0], [1e-300]],
            array![[1.0, 0.25]],
            Some(array![[2.0, 0.1], [0.1, 1.0]]),
        )
        .unwrap();
        let back = parse_model(&format_model(&m)).unwrap();
        assert_eq!(back.a(), m.a());
        assert_eq!(back.b_d(), m.b_d());
        assert_eq!(back.gram(), m.gram());
    }

    #[test]
    fn zero_feedthrough_accepted_nonzero_rejected() {
        assert!(parse_model(&format!("{TOY}D 1 2\n0 0\n")).is_ok());
        assert!(matches!(
            parse_model(&format!("{TOY}D 1 2\n1 0\n")),
            Err(RegError::FeedthroughUnsupported)
        ));
    }

    #[test]
    fn reports_errors() {
        assert!(matches!(
            parse_model("A 1 1\n"),
            Err(RegError::Parse { .. })
        ));
        assert!(matches!(
            parse_model("1 2 3\n"),
            Err(RegError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_model("A 1 1\nx\n"),
            Err(RegError::Parse { line: 2, .. })
        ));
        assert!(parse_model("A 1 1\n-1\n").is_err());
    }
}
