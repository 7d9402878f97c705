//! CSV ensembles and the JSON tree document.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cuboid::Cuboid;
use crate::ensemble::Ensemble;
use crate::error::{DetError, Result};
use crate::marginal::{MarginalModel, Order};
use crate::tree::{default_column_names, DetTree, DistributionElement, RawNode};

pub const FORMAT_VERSION: u32 = 1;

/// Reads a comma-separated ensemble. The first row is a header when any of
/// its fields is not a number.
pub fn read_csv(path: impl AsRef<Path>) -> Result<Ensemble> {
    let file = File::open(path.as_ref())?;
    parse_csv(BufReader::new(file))
}

pub fn parse_csv(input: impl Read) -> Result<Ensemble> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut names: Option<Vec<String>> = None;
    let mut dims: Option<usize> = None;
    let mut data = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| DetError::Csv {
            row,
            message: e.to_string(),
        })?;
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if let Some(d) = dims {
            if record.len() != d {
                return Err(DetError::Csv {
                    row,
                    message: format!("expected {d} fields, found {}", record.len()),
                });
            }
        } else {
            dims = Some(record.len());
            if i == 0 && record.iter().any(|f| f.parse::<f64>().is_err()) {
                names = Some(record.iter().map(str::to_owned).collect());
                continue;
            }
        }
        for (col, field) in record.iter().enumerate() {
            if field.is_empty() {
                return Err(DetError::Csv {
                    row,
                    message: format!("empty field in column {}", col + 1),
                });
            }
            let v: f64 = field.parse().map_err(|_| DetError::Csv {
                row,
                message: format!("non-numeric field `{field}` in column {}", col + 1),
            })?;
            if !v.is_finite() {
                return Err(DetError::Csv {
                    row,
                    message: format!("non-finite value in column {}", col + 1),
                });
            }
            data.push(v);
        }
    }
    let dims = dims.ok_or(DetError::Csv {
        row: 1,
        message: "file is empty".into(),
    })?;
    if data.is_empty() {
        return Err(DetError::Csv {
            row: 1,
            message: "no data rows".into(),
        });
    }
    let names = names.unwrap_or_else(|| default_column_names(dims));
    Ensemble::new(data, dims, names)
}

/// Writes a header row followed by one sample per row, each value in its
/// shortest round-trip decimal form.
pub fn write_csv(path: impl AsRef<Path>, ensemble: &Ensemble) -> Result<()> {
    let file = File::create(path.as_ref())?;
    format_csv(BufWriter::new(file), ensemble)
}

pub fn format_csv(out: impl Write, ensemble: &Ensemble) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| DetError::Io(std::io::Error::other(e));
    w.write_record(ensemble.column_names()).map_err(csv_err)?;
    let mut buf = Vec::with_capacity(ensemble.dims());
    for row in ensemble.rows() {
        buf.clear();
        buf.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&buf).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Serialized form of a [`DetTree`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct TreeDocument {
    pub format_version: u32,
    pub n: u64,
    pub dims: usize,
    pub column_names: Vec<String>,
    pub order: Order,
    pub root: NodeRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeRecord {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub count: u64,
    /// Per-dimension slopes; leaves only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<SplitRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<NodeRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitRecord {
    pub dim: usize,
    pub position: f64,
}

impl TreeDocument {
    pub fn from_tree(tree: &DetTree) -> Self {
        TreeDocument {
            format_version: FORMAT_VERSION,
            n: tree.n(),
            dims: tree.dims(),
            column_names: tree.column_names().to_vec(),
            order: tree.order(),
            root: record(&tree.to_raw()),
        }
    }

    /// Validates the document and rebuilds the tree.
    pub fn into_tree(self) -> Result<DetTree> {
        if self.format_version != FORMAT_VERSION {
            return Err(DetError::Format(format!(
                "unsupported formatVersion {} (expected {FORMAT_VERSION})",
                self.format_version
            )));
        }
        if self.column_names.len() != self.dims {
            return Err(DetError::Format(format!(
                "{} column names for {} dimensions",
                self.column_names.len(),
                self.dims
            )));
        }
        let raw = raw_node(&self.root, self.dims, self.order, "root")?;
        let tree = DetTree::from_raw(raw, self.order, self.column_names)
            .map_err(|e| DetError::Format(e.to_string()))?;
        if tree.n() != self.n {
            return Err(DetError::Format(format!(
                "n = {} but leaf counts sum to {}",
                self.n,
                tree.n()
            )));
        }
        Ok(tree)
    }
}

fn record(node: &RawNode) -> NodeRecord {
    let c = node.cuboid();
    match node {
        RawNode::Leaf(de) => NodeRecord {
            lower: c.lower().to_vec(),
            upper: c.upper().to_vec(),
            count: de.count(),
            theta: Some(de.marginals().iter().map(|m| m.theta()).collect()),
            split: None,
            children: Vec::new(),
        },
        RawNode::Split {
            dim,
            position,
            children,
            ..
        } => NodeRecord {
            lower: c.lower().to_vec(),
            upper: c.upper().to_vec(),
            count: node.count(),
            theta: None,
            split: Some(SplitRecord {
                dim: *dim,
                position: *position,
            }),
            children: children.iter().map(record).collect(),
        },
    }
}

fn raw_node(rec: &NodeRecord, dims: usize, order: Order, path: &str) -> Result<RawNode> {
    let at = |msg: String| DetError::Format(format!("{path}: {msg}"));
    if rec.lower.len() != dims || rec.upper.len() != dims {
        return Err(at(format!("bounds must have {dims} entries")));
    }
    let cuboid =
        Cuboid::new(rec.lower.clone(), rec.upper.clone()).map_err(|e| at(e.to_string()))?;
    match (&rec.theta, &rec.split) {
        (Some(theta), None) => {
            if !rec.children.is_empty() {
                return Err(at("leaf must not have children".into()));
            }
            if theta.len() != dims {
                return Err(at(format!("theta must have {dims} entries")));
            }
            let marginals = theta
                .iter()
                .map(|&t| MarginalModel::new(order, t))
                .collect::<Result<Vec<_>>>()
                .map_err(|e| at(e.to_string()))?;
            let de = DistributionElement::new(cuboid, rec.count, marginals)
                .map_err(|e| at(e.to_string()))?;
            Ok(RawNode::Leaf(de))
        }
        (None, Some(split)) => {
            if rec.children.len() != 2 {
                return Err(at(format!(
                    "split needs 2 children, found {}",
                    rec.children.len()
                )));
            }
            let a = raw_node(
                &rec.children[0],
                dims,
                order,
                &format!("{path}.children[0]"),
            )?;
            let b = raw_node(
                &rec.children[1],
                dims,
                order,
                &format!("{path}.children[1]"),
            )?;
            if a.count() + b.count() != rec.count {
                return Err(at(format!(
                    "count {} differs from children's total {}",
                    rec.count,
                    a.count() + b.count()
                )));
            }
            Ok(RawNode::Split {
                cuboid,
                dim: split.dim,
                position: split.position,
                children: Box::new([a, b]),
            })
        }
        (Some(_), Some(_)) => Err(at("node has both theta and split".into())),
        (None, None) => Err(at("node has neither theta nor split".into())),
    }
}

pub fn tree_to_json(tree: &DetTree) -> String {
    let mut s = serde_json::to_string_pretty(&TreeDocument::from_tree(tree))
        .expect("tree documents always serialize");
    s.push('\n');
    s
}

pub fn tree_from_json(text: &str) -> Result<DetTree> {
    let doc: TreeDocument =
        serde_json::from_str(text).map_err(|e| DetError::Format(e.to_string()))?;
    doc.into_tree()
}

pub fn write_tree(path: impl AsRef<Path>, tree: &DetTree) -> Result<()> {
    std::fs::write(path, tree_to_json(tree))?;
    Ok(())
}

pub fn read_tree(path: impl AsRef<Path>) -> Result<DetTree> {
    let text = std::fs::read_to_string(path)?;
    tree_from_json(&text)
}
