//! Finite families of affine planes and their line-based text format.
//!
//! One record per line: `n k <k*n basis floats row-major> <n offset floats>`,
//! whitespace separated; `#` starts a comment. A record with only the
//! basis floats is a linear subspace (zero offset omitted).

use std::io::{BufRead, Write};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::subspace::{AffinePlane, Subspace};

/// A spacing certificate attached to a family after a successful audit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpacingCertificate {
    /// Ball-count exponent.
    pub s: f64,
    /// Slack constant the audit passed with.
    pub slack: f64,
    /// The dyadic radii that were audited.
    pub audited_scales: Vec<f64>,
}

/// A finite family of affine planes at a common scale.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlaneFamily {
    pub planes: Vec<AffinePlane>,
    pub delta: f64,
    pub certificate: Option<SpacingCertificate>,
}

impl PlaneFamily {
    pub fn new(planes: Vec<AffinePlane>, delta: f64) -> Self {
        PlaneFamily {
            planes,
            delta,
            certificate: None,
        }
    }

    pub fn len(&self) -> usize {
        self.planes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.planes.is_empty()
    }

    /// Writes the family in the text format.
    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        for plane in &self.planes {
            let n = plane.n();
            let k = plane.k();
            let mut fields = Vec::with_capacity(2 + k * n + n);
            fields.push(n.to_string());
            fields.push(k.to_string());
            for row in 0..k {
                for col in 0..n {
                    fields.push(format!("{}", plane.dir().basis()[(row, col)]));
                }
            }
            for i in 0..n {
                fields.push(format!("{}", plane.offset()[i]));
            }
            writeln!(out, "{}", fields.join(" "))?;
        }
        Ok(())
    }

    /// Parses the text format. Offsets are re-perpendicularized when the
    /// residual is below 1e-8 and rejected otherwise.
    pub fn read_from<R: BufRead>(reader: R, delta: f64) -> Result<Self> {
        let mut planes = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let body = match line.find('#') {
                Some(pos) => &line[..pos],
                None => &line[..],
            };
            let fields: Vec<&str> = body.split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            let lineno = idx + 1;
            let parse_err = |msg: String| Error::Parse { line: lineno, msg };
            if fields.len() < 2 {
                return Err(parse_err("expected `n k` header".into()));
            }
            let n: usize = fields[0]
                .parse()
                .map_err(|e| parse_err(format!("bad n: {e}")))?;
            let k: usize = fields[1]
                .parse()
                .map_err(|e| parse_err(format!("bad k: {e}")))?;
            let with_offset = 2 + k * n + n;
            let without_offset = 2 + k * n;
            if fields.len() != with_offset && fields.len() != without_offset {
                return Err(parse_err(format!(
                    "expected {without_offset} or {with_offset} fields, got {}",
                    fields.len()
                )));
            }
            let mut values = Vec::with_capacity(fields.len() - 2);
            for f in &fields[2..] {
                values.push(
                    f.parse::<f64>()
                        .map_err(|e| parse_err(format!("bad float {f:?}: {e}")))?,
                );
            }
            let basis = DMatrix::from_row_slice(k, n, &values[..k * n]);
            let dir = Subspace::new(basis)
                .map_err(|e| parse_err(format!("bad basis: {e}")))?;
            let offset = if fields.len() == with_offset {
                DVector::from_column_slice(&values[k * n..])
            } else {
                DVector::zeros(n)
            };
            let resid = if k > 0 {
                (dir.basis() * &offset).abs().max()
            } else {
                0.0
            };
            if resid > 1e-8 {
                return Err(parse_err(format!(
                    "offset not perpendicular to the direction (residual {resid:.3e})"
                )));
            }
            let offset = dir.reject(&offset);
            planes.push(
                AffinePlane::new(dir, offset)
                    .map_err(|e| parse_err(format!("bad plane: {e}")))?,
            );
        }
        Ok(PlaneFamily::new(planes, delta))
    }
}

/// Writes a list of linear subspaces in the same format (offset omitted).
pub fn write_subspaces<W: Write>(subspaces: &[Subspace], mut out: W) -> Result<()> {
    for s in subspaces {
        let n = s.n();
        let k = s.dim();
        let mut fields = Vec::with_capacity(2 + k * n);
        fields.push(n.to_string());
        fields.push(k.to_string());
        for row in 0..k {
            for col in 0..n {
                fields.push(format!("{}", s.basis()[(row, col)]));
            }
        }
        writeln!(out, "{}", fields.join(" "))?;
    }
    Ok(())
}
