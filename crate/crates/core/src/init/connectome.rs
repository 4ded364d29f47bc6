//! Connectome edge lists.
//!
//! Accepted rows (optional single header line):
//!
//! ```text
//! pre_index,post_index,weight
//! pre_index,post_index,volume,cell_type      # cell_type ∈ {E, I}
//! ```
//!
//! Indices are 0-based and the matrix is `n × n` with `n = 1 + max index`.
//! Entry `(post, pre)` holds the connection so that column `j` collects the
//! outgoing weights of neuron `j`. Duplicate edges are summed. In the
//! four-column form, volumes from inhibitory presynaptic cells are negated.

use std::collections::BTreeSet;
use std::path::Path;

use crate::error::{LabError, Result};
use crate::tensor::DenseMatrix;

#[derive(Clone, Debug)]
pub struct Connectome {
    pub matrix: DenseMatrix,
    /// Presynaptic neurons whose outgoing weights carry both signs.
    pub dale_violations: Vec<usize>,
}

pub fn load_connectome(path: &Path) -> Result<DenseMatrix> {
    let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
    let c = parse_connectome(&text)?;
    if !c.dale_violations.is_empty() {
        log::warn!(
            "{}: {} presynaptic neurons have mixed-sign outgoing weights (first: {})",
            path.display(),
            c.dale_violations.len(),
            c.dale_violations[0]
        );
    }
    Ok(c.matrix)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum RowForm {
    Signed,
    Typed,
}

pub fn parse_connectome(text: &str) -> Result<Connectome> {
    let mut edges: Vec<(usize, usize, f64)> = Vec::new();
    let mut form: Option<RowForm> = None;
    let mut saw_data = false;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if !saw_data && fields[0].parse::<i64>().is_err() {
            if line_no != 1 {
                return Err(LabError::Parse {
                    line: line_no,
                    msg: "header is only allowed on the first line".into(),
                });
            }
            continue;
        }
        saw_data = true;
        let this_form = match fields.len() {
            3 => RowForm::Signed,
            4 => RowForm::Typed,
            k => {
                return Err(LabError::Parse {
                    line: line_no,
                    msg: format!("expected 3 or 4 fields, found {k}"),
                })
            }
        };
        match form {
            None => form = Some(this_form),
            Some(f) if f != this_form => {
                return Err(LabError::Parse {
                    line: line_no,
                    msg: "rows mix the 3-field and 4-field layouts".into(),
                })
            }
            _ => {}
        }
        let index = |s: &str, what: &str| -> Result<usize> {
            s.parse::<usize>().map_err(|_| LabError::Parse {
                line: line_no,
                msg: format!("{what} index `{s}` is not a nonnegative integer"),
            })
        };
        let pre = index(fields[0], "pre")?;
        let post = index(fields[1], "post")?;
        let value: f64 = fields[2].parse().map_err(|_| LabError::Parse {
            line: line_no,
            msg: format!("weight `{}` is not a number", fields[2]),
        })?;
        if !value.is_finite() {
            return Err(LabError::Parse {
                line: line_no,
                msg: "weight is not finite".into(),
            });
        }
        let weight = if this_form == RowForm::Typed {
            match fields[3] {
                "E" | "e" => value.abs(),
                "I" | "i" => -value.abs(),
                other => {
                    return Err(LabError::Parse {
                        line: line_no,
                        msg: format!("cell type `{other}` is not E or I"),
                    })
                }
            }
        } else {
            value
        };
        edges.push((pre, post, weight));
    }

    if edges.is_empty() {
        return Err(LabError::Parse {
            line: text.lines().count().max(1),
            msg: "no connectivity rows found".into(),
        });
    }
    let max_pre = edges.iter().map(|e| e.0).max().unwrap_or(0);
    let max_post = edges.iter().map(|e| e.1).max().unwrap_or(0);
    if max_pre != max_post {
        return Err(LabError::Dimension {
            op: "load_connectome",
            lhs: (max_post + 1, max_pre + 1),
            rhs: (max_pre + 1, max_pre + 1),
        });
    }
    let n = max_pre + 1;
    let mut matrix = DenseMatrix::zeros(n, n);
    for &(pre, post, w) in &edges {
        matrix[(post, pre)] += w;
    }

    let mut violations = BTreeSet::new();
    for j in 0..n {
        let col = matrix.col_to_vec(j);
        let pos = col.iter().any(|&v| v > 0.0);
        let neg = col.iter().any(|&v| v < 0.0);
        if pos && neg {
            violations.insert(j);
        }
    }
    Ok(Connectome {
        matrix,
        dale_violations: violations.into_iter().collect(),
    })
}
