//! Plain-text exchange sequences: `i j angle` per line, 1-based qubit
//! indices, angle in radians, `#` starts a comment.

use std::path::Path;

use crate::error::{Error, Result};
use crate::model::ExchangeOp;
use crate::scalar::Real;

pub fn parse_sequence<T: Real>(text: &str, system_count: usize) -> Result<Vec<ExchangeOp<T>>> {
    let mut ops = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let bad = |reason: String| Error::SequenceFileInvalid { line, reason };
        let fields: Vec<&str> = body.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(bad(format!(
                "expected `i j angle`, found {} fields",
                fields.len()
            )));
        }
        let index = |s: &str| -> Result<usize> {
            let i: usize = s
                .parse()
                .map_err(|_| bad(format!("`{s}` is not a qubit index")))?;
            if i == 0 || i > system_count {
                return Err(bad(format!("qubit {i} outside 1..={system_count}")));
            }
            Ok(i - 1)
        };
        let (i, j) = (index(fields[0])?, index(fields[1])?);
        if i == j {
            return Err(bad(format!("pair ({}, {}) repeats a qubit", i + 1, j + 1)));
        }
        let angle: f64 = fields[2]
            .parse()
            .map_err(|_| bad(format!("`{}` is not an angle", fields[2])))?;
        if !angle.is_finite() {
            return Err(bad("angle must be finite".into()));
        }
        ops.push(ExchangeOp::new(i, j, T::lit(angle))?);
    }
    Ok(ops)
}

pub fn load_sequence<T: Real>(path: &Path, system_count: usize) -> Result<Vec<ExchangeOp<T>>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::SequenceFileInvalid {
        line: 0,
        reason: format!("{}: {e}", path.display()),
    })?;
    parse_sequence(&text, system_count)
}

/// Inverse of [`parse_sequence`]; angles keep full double precision.
pub fn format_sequence<T: Real>(ops: &[ExchangeOp<T>]) -> String {
    let mut out = String::from("# i j angle_rad\n");
    for op in ops {
        out.push_str(&format!(
            "{} {} {:e}\n",
            op.pair.0 + 1,
            op.pair.1 + 1,
            op.angle.as_f64()
        ));
    }
    out
}
