//! Plain-text configuration records for graphon families.
//!
//! The canonical record has three fields, spelled identically in every
//! serialization (TOML, JSON) and in the compact one-line form:
//!
//! - `family`: one of `constant`, `separable`, `stripe`, `threshold`,
//!   `block`, `step`, `combine`;
//! - `params`: a map of parameter name → number;
//! - `blocks`: an optional matrix (array of arrays), used by the `block` and
//!   `step` families.
//!
//! Per-family parameters:
//!
//! | family      | params                                  | blocks        |
//! |-------------|------------------------------------------|---------------|
//! | `constant`  | `p` ∈ [0,1]                              | —             |
//! | `separable` | —                                        | —             |
//! | `stripe`    | `h` ∈ [0,1] (half-width)                 | —             |
//! | `threshold` | `alpha` > 0                              | —             |
//! | `block`     | optional `cut1 < cut2 < …` in (0,1)      | symmetric m×m |
//! | `step`      | —                                        | adjacency     |
//! | `combine`   | `offset` (via `offset` field)            | —             |
//!
//! The `combine` family additionally carries `offset` and `terms` (a list of
//! `{coeff, graphon}` records); it has no compact form.
//!
//! The compact form is `family:key=value,key=value,…`, e.g. `stripe:h=0.25`
//! or `constant:p=0.5`. Block matrices can be given compactly through entry
//! parameters `b11=…,b12=…,…` (1-based, symmetric entries may be omitted).

use std::collections::BTreeMap;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::discretize::WeightedGraph;
use crate::error::{Error, Result};
use crate::graphon::Graphon;

/// One weighted term of a `combine` record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TermConfig {
    pub coeff: f64,
    pub graphon: GraphonConfig,
}

/// The structured plain-text description of a graphon.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct GraphonConfig {
    pub family: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blocks: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terms: Option<Vec<TermConfig>>,
}

impl GraphonConfig {
    /// Parse the compact `family:key=value,…` form.
    pub fn parse_compact(s: &str) -> Result<Self> {
        let (family, rest) = match s.split_once(':') {
            Some((f, r)) => (f.trim(), r),
            None => (s.trim(), ""),
        };
        if family.is_empty() {
            return Err(Error::InvalidConfig("empty graphon family".into()));
        }
        let mut params = BTreeMap::new();
        for part in rest.split(',').filter(|p| !p.trim().is_empty()) {
            let (key, value) = part.split_once('=').ok_or_else(|| {
                Error::InvalidConfig(format!("expected key=value in graphon spec, got {part:?}"))
            })?;
            let v: f64 = value
                .trim()
                .parse()
                .map_err(|e| Error::InvalidConfig(format!("bad number for {}: {e}", key.trim())))?;
            params.insert(key.trim().to_string(), v);
        }
        let mut cfg = GraphonConfig {
            family: family.to_string(),
            params,
            ..Default::default()
        };
        if cfg.family == "block" {
            cfg.blocks = Some(blocks_from_entry_params(&mut cfg.params)?);
        }
        Ok(cfg)
    }

    /// Build the graphon this record describes.
    pub fn build(&self) -> Result<Graphon> {
        match self.family.as_str() {
            "constant" => Graphon::constant(self.require("p")?),
            "separable" => Ok(Graphon::separable()),
            "stripe" => Graphon::stripe(self.require("h")?),
            "threshold" => Graphon::threshold(self.require("alpha")?),
            "block" => {
                let weights = self.blocks_matrix()?;
                let m = weights.nrows();
                let mut cuts = Vec::new();
                for i in 1..m {
                    if let Some(&c) = self.params.get(&format!("cut{i}")) {
                        cuts.push(c);
                    }
                }
                if cuts.is_empty() {
                    Graphon::uniform_block(weights)
                } else if cuts.len() == m - 1 {
                    Graphon::block(weights, &cuts)
                } else {
                    Err(Error::InvalidConfig(format!(
                        "{} blocks need {} cuts, got {}",
                        m,
                        m - 1,
                        cuts.len()
                    )))
                }
            }
            "step" => {
                let weights = self.blocks_matrix()?;
                let graph = WeightedGraph::new(weights)?;
                Ok(crate::discretize::step_graphon(&graph))
            }
            "combine" => {
                let terms = self
                    .terms
                    .as_ref()
                    .ok_or_else(|| Error::InvalidConfig("combine needs a terms list".into()))?;
                let built: Result<Vec<(f64, Graphon)>> = terms
                    .iter()
                    .map(|t| Ok((t.coeff, t.graphon.build()?)))
                    .collect();
                Graphon::combine(self.offset.unwrap_or(0.0), built?)
            }
            other => Err(Error::InvalidConfig(format!(
                "unknown graphon family {other:?}"
            ))),
        }
    }

    fn require(&self, key: &str) -> Result<f64> {
        self.params.get(key).copied().ok_or_else(|| {
            Error::InvalidConfig(format!("family {:?} needs parameter {key:?}", self.family))
        })
    }

    fn blocks_matrix(&self) -> Result<Array2<f64>> {
        let rows = self.blocks.as_ref().ok_or_else(|| {
            Error::InvalidConfig(format!("family {:?} needs a blocks matrix", self.family))
        })?;
        let m = rows.len();
        if m == 0 || rows.iter().any(|r| r.len() != m) {
            return Err(Error::InvalidConfig(
                "blocks matrix must be square and nonempty".into(),
            ));
        }
        Ok(Array2::from_shape_fn((m, m), |(i, j)| rows[i][j]))
    }

    /// Compact one-line description, used in run manifests.
    pub fn describe(&self) -> String {
        let mut s = self.family.clone();
        if !self.params.is_empty() {
            let parts: Vec<String> = self
                .params
                .iter()
                .map(|(k, v)| format!("{k}={v}"))
                .collect();
            s.push(':');
            s.push_str(&parts.join(","));
        }
        if let Some(b) = &self.blocks {
            s.push_str(&format!(";blocks={}x{}", b.len(), b.len()));
        }
        s
    }
}

/// Assemble a symmetric matrix from `b{i}{j}` entry parameters (1-based
/// single-digit indices), removing them from the map.
fn blocks_from_entry_params(params: &mut BTreeMap<String, f64>) -> Result<Vec<Vec<f64>>> {
    let mut entries: Vec<(usize, usize, f64)> = Vec::new();
    let keys: Vec<String> = params
        .keys()
        .filter(|k| k.starts_with('b') && k.len() == 3)
        .cloned()
        .collect();
    for key in keys {
        let digits: Vec<u32> = key[1..].chars().filter_map(|c| c.to_digit(10)).collect();
        if digits.len() == 2 && digits[0] >= 1 && digits[1] >= 1 {
            let v = params.remove(&key).unwrap();
            entries.push((digits[0] as usize - 1, digits[1] as usize - 1, v));
        }
    }
    if entries.is_empty() {
        return Err(Error::InvalidConfig(
            "block family needs entries b11=…,b12=…,… in compact form".into(),
        ));
    }
    let m = entries.iter().map(|&(i, j, _)| i.max(j) + 1).max().unwrap();
    let mut filled = vec![vec![None; m]; m];
    for &(i, j, v) in &entries {
        filled[i][j] = Some(v);
        if filled[j][i].is_none() {
            filled[j][i] = Some(v);
        }
    }
    let mut out = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in 0..m {
            out[i][j] = filled[i][j].ok_or_else(|| {
                Error::InvalidConfig(format!("block entry b{}{} missing", i + 1, j + 1))
            })?;
        }
    }
    Ok(out)
}
