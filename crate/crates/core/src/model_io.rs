//! Plain-text model container "CNNEST v1" for trained CNNs and filter banks.
//!
//! ```text
//! CNNEST v1
//! <activation> <Q kind> <K> <M> <T> <sigma2 | variable>
//! <a1: K values>
//! <b1: K values>
//! <a2: K values>
//! <b2: K values>
//! ```
//!
//! Banks use the magic `CNNEST v1 BANK`, a header
//! `<dense|structured> <Q kind> <N> <K> <M> <T> <sigma2>`, one line of
//! offsets and one line per filter (dense filters as interleaved re/im,
//! row-major). Numbers use 17 significant digits so that a load of a save is
//! bit-exact.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::estimators::{BankFilters, FilterBank};
use crate::learning::{Activation, CnnParams};
use crate::numerics::{ComplexMatrix, TransformQ};

pub const MAGIC: &str = "CNNEST v1";
pub const BANK_MAGIC: &str = "CNNEST v1 BANK";

/// A CNN together with the setting it was trained for.
#[derive(Debug, Clone, PartialEq)]
pub struct CnnModel {
    pub params: CnnParams,
    pub snapshots: usize,
    /// `None` when trained over varying noise levels.
    pub sigma2: Option<f64>,
}

fn push_row(out: &mut String, values: impl IntoIterator<Item = f64>) {
    let mut first = true;
    for v in values {
        if !first {
            out.push(' ');
        }
        first = false;
        write!(out, "{v:.16e}").expect("string write");
    }
    out.push('\n');
}

fn format_err(msg: impl Into<String>) -> Error {
    Error::ModelFormat(msg.into())
}

fn parse_row(line: Option<&str>, n: usize, what: &str) -> Result<Vec<f64>> {
    let line = line.ok_or_else(|| format_err(format!("missing {what} line")))?;
    let v = line
        .split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|e| format_err(format!("{what}: {e}"))))
        .collect::<Result<Vec<_>>>()?;
    if v.len() != n {
        return Err(format_err(format!("{what}: expected {n} values, found {}", v.len())));
    }
    Ok(v)
}

fn parse_field<T: std::str::FromStr>(tok: Option<&str>, what: &str) -> Result<T> {
    tok.ok_or_else(|| format_err(format!("missing {what}")))?
        .parse()
        .map_err(|_| format_err(format!("bad {what}")))
}

fn sigma2_token(s: Option<f64>) -> String {
    s.map_or_else(|| "variable".into(), |v| format!("{v:.16e}"))
}

pub fn cnn_to_string(model: &CnnModel) -> String {
    let p = &model.params;
    let mut out = format!(
        "{MAGIC}\n{} {} {} {} {} {}\n",
        p.activation,
        p.transform.kind_name(),
        p.dim(),
        p.transform.input_dim(),
        model.snapshots,
        sigma2_token(model.sigma2)
    );
    for v in [&p.a1, &p.b1, &p.a2, &p.b2] {
        push_row(&mut out, v.iter().copied());
    }
    out
}

pub fn cnn_from_str(text: &str) -> Result<CnnModel> {
    let mut lines = text.lines();
    if lines.next().map(str::trim_end) != Some(MAGIC) {
        return Err(format_err("not a CNNEST v1 model file"));
    }
    let header = lines.next().ok_or_else(|| format_err("missing header"))?;
    let mut tok = header.split_whitespace();
    let activation: Activation = parse_field::<String>(tok.next(), "activation")?.parse()?;
    let kind: String = parse_field(tok.next(), "transform kind")?;
    let k: usize = parse_field(tok.next(), "K")?;
    let m: usize = parse_field(tok.next(), "M")?;
    let snapshots: usize = parse_field(tok.next(), "T")?;
    let sigma2 = match tok.next() {
        Some("variable") => None,
        s => Some(parse_field::<f64>(s, "sigma2")?),
    };
    let transform = TransformQ::parse(&kind, m)?;
    if transform.output_dim() != k {
        return Err(format_err(format!("K={k} does not match transform {kind} with M={m}")));
    }
    let a1 = parse_row(lines.next(), k, "a1")?;
    let b1 = parse_row(lines.next(), k, "b1")?;
    let a2 = parse_row(lines.next(), k, "a2")?;
    let b2 = parse_row(lines.next(), k, "b2")?;
    Ok(CnnModel { params: CnnParams::new(a1, b1, a2, b2, activation, transform)?, snapshots, sigma2 })
}

pub fn bank_to_string(bank: &FilterBank) -> String {
    let (kind, k) = match &bank.filters {
        BankFilters::Dense(_) => ("dense", bank.antennas()),
        BankFilters::Structured(_) => ("structured", bank.transform.output_dim()),
    };
    let mut out = format!(
        "{BANK_MAGIC}\n{kind} {} {} {k} {} {} {:.16e}\n",
        bank.transform.kind_name(),
        bank.len(),
        bank.antennas(),
        bank.snapshots,
        bank.sigma2
    );
    push_row(&mut out, bank.offsets.iter().copied());
    match &bank.filters {
        BankFilters::Dense(ws) => {
            for w in ws {
                push_row(&mut out, w.as_slice().iter().flat_map(|z| [z.re, z.im]));
            }
        }
        BankFilters::Structured(ws) => {
            for w in ws {
                push_row(&mut out, w.iter().copied());
            }
        }
    }
    out
}

pub fn bank_from_str(text: &str) -> Result<FilterBank> {
    let mut lines = text.lines();
    if lines.next().map(str::trim_end) != Some(BANK_MAGIC) {
        return Err(format_err("not a CNNEST v1 BANK file"));
    }
    let header = lines.next().ok_or_else(|| format_err("missing header"))?;
    let mut tok = header.split_whitespace();
    let kind: String = parse_field(tok.next(), "bank kind")?;
    let qkind: String = parse_field(tok.next(), "transform kind")?;
    let n: usize = parse_field(tok.next(), "N")?;
    let k: usize = parse_field(tok.next(), "K")?;
    let m: usize = parse_field(tok.next(), "M")?;
    let snapshots: usize = parse_field(tok.next(), "T")?;
    let sigma2: f64 = parse_field(tok.next(), "sigma2")?;
    let transform = TransformQ::parse(&qkind, m)?;
    let offsets = parse_row(lines.next(), n, "offsets")?;
    match kind.as_str() {
        "dense" => {
            let filters = (0..n)
                .map(|i| {
                    let v = parse_row(lines.next(), 2 * m * m, &format!("filter {i}"))?;
                    let data = v.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect();
                    ComplexMatrix::from_row_major(m, m, data)
                })
                .collect::<Result<Vec<_>>>()?;
            FilterBank::from_dense(filters, offsets, snapshots, sigma2)
        }
        "structured" => {
            let filters = (0..n).map(|i| parse_row(lines.next(), k, &format!("filter {i}"))).collect::<Result<Vec<_>>>()?;
            FilterBank::from_structured(transform, filters, offsets, snapshots, sigma2)
        }
        other => Err(format_err(format!("unknown bank kind `{other}`"))),
    }
}

pub fn save_cnn(model: &CnnModel, path: &Path) -> Result<()> {
    std::fs::write(path, cnn_to_string(model))?;
    Ok(())
}

pub fn load_cnn(path: &Path) -> Result<CnnModel> {
    cnn_from_str(&std::fs::read_to_string(path)?)
}

pub fn save_bank(bank: &FilterBank, path: &Path) -> Result<()> {
    std::fs::write(path, bank_to_string(bank))?;
    Ok(())
}

pub fn load_bank(path: &Path) -> Result<FilterBank> {
    bank_from_str(&std::fs::read_to_string(path)?)
}
