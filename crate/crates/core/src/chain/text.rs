//! Whitespace-delimited text chains.
//!
//! The default layout follows the common cosmology convention: column 0 is
//! the sample weight (multiplicity), column 1 is `-ln(target)`, and every
//! remaining column is a parameter. Lines starting with `#` are comments;
//! two comment forms carry metadata when they precede the first data row:
//!
//! ```text
//! # model: lcdm_base
//! # columns: weight neg_log_target omega_b omega_c
//! ```

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use super::Chain;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;

/// Which columns hold the parameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParameterColumns {
    /// Every column not used for the weight or the log-target.
    Rest,
    Explicit(Vec<usize>),
}

/// Column layout of a text chain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnSpec {
    /// `None` means every weight is 1.
    pub weight_column: Option<usize>,
    pub log_target_column: usize,
    /// Set when the file stores `-ln(target)`.
    pub negate_log_target: bool,
    pub parameter_columns: ParameterColumns,
}

impl Default for ColumnSpec {
    fn default() -> Self {
        Self {
            weight_column: Some(0),
            log_target_column: 1,
            negate_log_target: true,
            parameter_columns: ParameterColumns::Rest,
        }
    }
}

impl ColumnSpec {
    fn validate(&self) -> Result<()> {
        if self.weight_column == Some(self.log_target_column) {
            return Err(Error::Validation(
                "weight and log-target columns must differ".into(),
            ));
        }
        if let ParameterColumns::Explicit(cols) = &self.parameter_columns {
            if cols.is_empty() {
                return Err(Error::Validation("no parameter columns selected".into()));
            }
            for (i, c) in cols.iter().enumerate() {
                if Some(*c) == self.weight_column || *c == self.log_target_column {
                    return Err(Error::Validation(format!(
                        "column {c} is used both as a parameter and as weight/log-target"
                    )));
                }
                if cols[..i].contains(c) {
                    return Err(Error::Validation(format!(
                        "parameter column {c} listed twice"
                    )));
                }
            }
        }
        Ok(())
    }

    fn resolve_parameters(&self, ncols: usize) -> Vec<usize> {
        match &self.parameter_columns {
            ParameterColumns::Explicit(cols) => cols.clone(),
            ParameterColumns::Rest => (0..ncols)
                .filter(|&c| Some(c) != self.weight_column && c != self.log_target_column)
                .collect(),
        }
    }
}

/// Parses a text chain. `source_name` is only used in error messages.
pub fn parse_chain<T: Real, R: BufRead>(
    reader: R,
    spec: &ColumnSpec,
    source_name: Option<&str>,
) -> Result<Chain<T>> {
    spec.validate()?;
    let parse_err = |line: usize, msg: String| Error::Parse {
        source_name: source_name.map(str::to_owned),
        line,
        msg,
    };

    let mut header_names: Option<Vec<String>> = None;
    let mut model_id: Option<String> = None;
    let mut ncols: Option<usize> = None;
    let mut param_cols: Vec<usize> = Vec::new();
    let mut params: Vec<T> = Vec::new();
    let mut log_target: Vec<T> = Vec::new();
    let mut weights: Vec<T> = Vec::new();
    let mut fields: Vec<T> = Vec::new();

    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| parse_err(lineno, e.to_string()))?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(comment) = trimmed.strip_prefix('#') {
            if ncols.is_none() {
                let comment = comment.trim();
                if let Some(rest) = comment.strip_prefix("columns:") {
                    header_names = Some(rest.split_whitespace().map(str::to_owned).collect());
                } else if let Some(rest) = comment.strip_prefix("model:") {
                    model_id = Some(rest.trim().to_owned());
                }
            }
            continue;
        }

        fields.clear();
        for tok in trimmed.split_whitespace() {
            let v = tok
                .parse::<T>()
                .map_err(|_| parse_err(lineno, format!("non-numeric token {tok:?}")))?;
            fields.push(v);
        }

        let width = match ncols {
            Some(w) => w,
            None => {
                let w = fields.len();
                let needed = spec
                    .weight_column
                    .into_iter()
                    .chain(std::iter::once(spec.log_target_column))
                    .chain(match &spec.parameter_columns {
                        ParameterColumns::Explicit(c) => c.clone(),
                        ParameterColumns::Rest => Vec::new(),
                    })
                    .max()
                    .unwrap_or(0);
                if needed >= w {
                    return Err(parse_err(
                        lineno,
                        format!("row has {w} columns but column {needed} is required"),
                    ));
                }
                param_cols = spec.resolve_parameters(w);
                if param_cols.is_empty() {
                    return Err(parse_err(lineno, "no parameter columns in row".into()));
                }
                ncols = Some(w);
                w
            }
        };
        if fields.len() != width {
            return Err(parse_err(
                lineno,
                format!("expected {width} columns, found {}", fields.len()),
            ));
        }

        let w = spec.weight_column.map_or(T::one(), |c| fields[c]);
        if !(w > T::zero() && w.is_finite()) {
            return Err(Error::Validation(format!(
                "{}line {lineno}: weight {w} is not strictly positive",
                source_name.map(|s| format!("{s}: ")).unwrap_or_default()
            )));
        }
        let lt = fields[spec.log_target_column];
        weights.push(w);
        log_target.push(if spec.negate_log_target { -lt } else { lt });
        params.extend(param_cols.iter().map(|&c| fields[c]));
    }

    let n = log_target.len();
    if n < 2 {
        return Err(Error::Validation(format!(
            "{}chain needs at least 2 data rows, found {n}",
            source_name.map(|s| format!("{s}: ")).unwrap_or_default()
        )));
    }
    let m = param_cols.len();
    let mut chain = Chain::new(Matrix::from_row_major(n, m, params), log_target, weights)?;
    if let Some(names) = header_names {
        if names.len() == ncols.unwrap_or(0) {
            let picked = param_cols.iter().map(|&c| names[c].clone()).collect();
            chain = chain.with_param_names(picked)?;
        }
    }
    if let Some(id) = model_id {
        chain = chain.with_model_id(id);
    }
    Ok(chain)
}

/// Opens and parses a chain file.
pub fn read_chain_file<T: Real>(path: &Path, spec: &ColumnSpec) -> Result<Chain<T>> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_chain(
        BufReader::new(file),
        spec,
        Some(&path.display().to_string()),
    )
}

/// Writes the canonical text form (default [`ColumnSpec`] layout).
///
/// Values use Rust's shortest round-trip formatting, so parsing the output
/// with the default spec reproduces the chain exactly.
pub fn dump_chain<T: Real, W: Write>(chain: &Chain<T>, mut out: W) -> std::io::Result<()> {
    if let Some(id) = chain.model_id() {
        writeln!(out, "# model: {id}")?;
    }
    if let Some(names) = chain.param_names() {
        writeln!(out, "# columns: weight neg_log_target {}", names.join(" "))?;
    }
    for i in 0..chain.len() {
        write!(out, "{} {}", chain.weights()[i], -chain.log_target()[i])?;
        for v in chain.parameters().row(i) {
            write!(out, " {v}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}
