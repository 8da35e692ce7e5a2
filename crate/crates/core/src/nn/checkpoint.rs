//! Plain-text network checkpoints.
//!
//! ```text
//! MLP v1 <num_layers> <dims...> <activation tags...>
//! <all parameters, whitespace separated, 17 significant digits>
//! ```
//!
//! Parameters follow the in-memory layout: per layer, weights row-major,
//! then bias.

use std::fmt::Write as _;

use super::mlp::{param_count_for, Activation, Mlp};
use crate::error::{Error, Result};

const MAGIC: &str = "MLP";
const VERSION: &str = "v1";

/// Formats a float with 17 significant digits, enough to round-trip any `f64`.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

impl Mlp {
    pub fn header_line(&self) -> String {
        let mut s = format!("{MAGIC} {VERSION} {}", self.num_layers());
        for d in self.dims() {
            let _ = write!(s, " {d}");
        }
        for a in self.activations() {
            let _ = write!(s, " {a}");
        }
        s
    }

    pub fn to_checkpoint_string(&self) -> String {
        let params: Vec<String> = self.params().iter().map(|&p| format_f64(p)).collect();
        format!("{}\n{}\n", self.header_line(), params.join(" "))
    }

    pub fn from_checkpoint_str(text: &str) -> Result<Mlp> {
        let mut lines = text.lines();
        let net = read_checkpoint(&mut lines)?;
        if lines.any(|l| !l.trim().is_empty()) {
            return Err(Error::Checkpoint("trailing data after parameters".into()));
        }
        Ok(net)
    }
}

fn parse_header(line: &str) -> Result<(Vec<usize>, Vec<Activation>)> {
    let mut tok = line.split_whitespace();
    if tok.next() != Some(MAGIC) {
        return Err(Error::Checkpoint(format!("expected `{MAGIC}` header, found `{line}`")));
    }
    match tok.next() {
        Some(VERSION) => {}
        other => {
            return Err(Error::Checkpoint(format!(
                "unsupported version {}",
                other.unwrap_or("<missing>")
            )))
        }
    }
    let layers: usize = tok
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::Checkpoint("missing layer count".into()))?;
    let dims = (0..=layers)
        .map(|_| {
            tok.next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::Checkpoint("missing or malformed layer width".into()))
        })
        .collect::<Result<Vec<usize>>>()?;
    let acts = (0..layers)
        .map(|_| {
            let t = tok
                .next()
                .ok_or_else(|| Error::Checkpoint("missing activation tag".into()))?;
            Activation::from_tag(t).ok_or_else(|| Error::Checkpoint(format!("unknown activation `{t}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    if tok.next().is_some() {
        return Err(Error::Checkpoint("unexpected tokens in header".into()));
    }
    Ok((dims, acts))
}

/// Reads one network (header line plus parameter tokens) from `lines`.
///
/// Parameter tokens may span several lines; reading stops as soon as the
/// count implied by the header has been consumed.
pub fn read_checkpoint<'a, I>(lines: &mut I) -> Result<Mlp>
where
    I: Iterator<Item = &'a str>,
{
    let header = lines
        .by_ref()
        .find(|l| !l.trim().is_empty())
        .ok_or_else(|| Error::Checkpoint("empty checkpoint".into()))?;
    let (dims, acts) = parse_header(header)?;
    let expected = param_count_for(&dims);
    let mut params = Vec::with_capacity(expected);
    while params.len() < expected {
        let line = lines.next().ok_or_else(|| {
            Error::Checkpoint(format!("expected {expected} parameters, found {}", params.len()))
        })?;
        for t in line.split_whitespace() {
            let v: f64 = t
                .parse()
                .map_err(|_| Error::Checkpoint(format!("malformed parameter `{t}`")))?;
            params.push(v);
        }
    }
    if params.len() != expected {
        return Err(Error::Checkpoint(format!(
            "expected {expected} parameters, found {}",
            params.len()
        )));
    }
    Mlp::from_params(&dims, &acts, params)
}
