//! Versioned text encoding of a boosted model.
//!
//! ```text
//! sector-congest-model 1
//! sector S01
//! schema minuteOfDay weekdayMon ... hasPressure [uncertainty]
//! f0 3.25
//! shrinkage 0.1
//! terms 400
//! term 0.1 3
//! split 0 719.5 1 2
//! leaf -0.75
//! leaf 1.5
//! ...
//! mse 4.1 3.9 ...
//! end
//! ```
//!
//! Each `term <rho> <node count>` line is followed by its nodes in index
//! order: `split <feature> <threshold> <left> <right>` or `leaf <value>`.
//! Reals are written in shortest round-trip form, so a decoded model
//! predicts bit-identically. The sector name is percent-escaped.

use std::fmt::Write as _;

use thiserror::Error;

use super::boost::{BoostedModel, Term};
use super::features::FeatureSchema;
use super::tree::{Node, RegressionTree};
use crate::fsutil::{decode_component, encode_component};

pub const MODEL_FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "sector-congest-model";

#[derive(Debug, Error, PartialEq, Eq)]
#[error("model text line {line}: {reason}")]
pub struct ModelFormatError {
    pub line: usize,
    pub reason: String,
}

pub fn model_to_text(m: &BoostedModel) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{MAGIC} {MODEL_FORMAT_VERSION}");
    let _ = writeln!(s, "sector {}", encode_component(&m.sector));
    let _ = writeln!(s, "schema {}", m.schema.names().join(" "));
    let _ = writeln!(s, "f0 {}", m.f0);
    let _ = writeln!(s, "shrinkage {}", m.shrinkage);
    let _ = writeln!(s, "terms {}", m.terms.len());
    for t in &m.terms {
        let _ = writeln!(s, "term {} {}", t.rho, t.tree.nodes.len());
        for n in &t.tree.nodes {
            match n {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    let _ = writeln!(s, "split {feature} {threshold} {left} {right}");
                }
                Node::Leaf { value } => {
                    let _ = writeln!(s, "leaf {value}");
                }
            }
        }
    }
    let mse: Vec<String> = m.train_mse.iter().map(|v| v.to_string()).collect();
    let _ = writeln!(s, "mse {}", mse.join(" "));
    s.push_str("end\n");
    s
}

struct Lines<'a> {
    it: std::iter::Enumerate<std::str::Lines<'a>>,
    at: usize,
}

impl<'a> Lines<'a> {
    fn err(&self, reason: impl Into<String>) -> ModelFormatError {
        ModelFormatError {
            line: self.at,
            reason: reason.into(),
        }
    }

    /// Next line split into words; the first word must be `key`.
    fn expect(&mut self, key: &str) -> Result<Vec<&'a str>, ModelFormatError> {
        let (i, line) = self.it.next().ok_or_else(|| self.err(format!("missing `{key}`")))?;
        self.at = i + 1;
        let mut words = line.split(' ');
        if words.next() != Some(key) {
            return Err(self.err(format!("expected `{key}`")));
        }
        Ok(words.collect())
    }

    fn next_words(&mut self) -> Result<Vec<&'a str>, ModelFormatError> {
        let (i, line) = self.it.next().ok_or_else(|| self.err("unexpected end"))?;
        self.at = i + 1;
        Ok(line.split(' ').collect())
    }

    fn num<T: std::str::FromStr>(&self, w: Option<&&str>) -> Result<T, ModelFormatError> {
        w.and_then(|w| w.parse().ok()).ok_or_else(|| self.err("bad number"))
    }
}

pub fn model_from_text(text: &str) -> Result<BoostedModel, ModelFormatError> {
    let mut l = Lines {
        it: text.lines().enumerate(),
        at: 0,
    };
    let v = l.expect(MAGIC)?;
    let version: u32 = l.num(v.first())?;
    if version != MODEL_FORMAT_VERSION {
        return Err(l.err(format!("unsupported version {version}")));
    }
    let sector_words = l.expect("sector")?;
    let sector = sector_words
        .first()
        .and_then(|s| decode_component(s))
        .ok_or_else(|| l.err("bad sector name"))?;
    let names = l.expect("schema")?;
    let schema = FeatureSchema::from_names(&names).ok_or_else(|| l.err("unknown feature schema"))?;
    let w = l.expect("f0")?;
    let f0: f64 = l.num(w.first())?;
    let w = l.expect("shrinkage")?;
    let shrinkage: f64 = l.num(w.first())?;
    let w = l.expect("terms")?;
    let n_terms: usize = l.num(w.first())?;
    let mut terms = Vec::with_capacity(n_terms);
    for _ in 0..n_terms {
        let head = l.expect("term")?;
        let rho: f64 = l.num(head.first())?;
        let n_nodes: usize = l.num(head.get(1))?;
        let mut nodes = Vec::with_capacity(n_nodes);
        for _ in 0..n_nodes {
            let w = l.next_words()?;
            let node = match w.first().copied() {
                Some("leaf") => Node::Leaf { value: l.num(w.get(1))? },
                Some("split") => Node::Split {
                    feature: l.num(w.get(1))?,
                    threshold: l.num(w.get(2))?,
                    left: l.num(w.get(3))?,
                    right: l.num(w.get(4))?,
                },
                _ => return Err(l.err("expected `leaf` or `split`")),
            };
            nodes.push(node);
        }
        let tree = RegressionTree { nodes };
        tree.validate(schema.len()).map_err(|e| l.err(e))?;
        terms.push(Term { tree, rho });
    }
    let mse_words = l.expect("mse")?;
    let train_mse = mse_words
        .iter()
        .filter(|w| !w.is_empty())
        .map(|w| w.parse::<f64>().map_err(|_| l.err("bad mse value")))
        .collect::<Result<Vec<_>, _>>()?;
    l.expect("end")?;
    Ok(BoostedModel {
        sector,
        schema,
        f0,
        shrinkage,
        terms,
        train_mse,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> BoostedModel {
        BoostedModel {
            sector: "ZNY 42/a".into(),
            schema: FeatureSchema { uncertainty: true },
            f0: 0.1 + 0.2,
            shrinkage: 0.1,
            terms: vec![Term {
                rho: 0.1,
                tree: RegressionTree {
                    nodes: vec![
                        Node::Split {
                            feature: 0,
                            threshold: 719.5,
                            left: 1,
                            right: 2,
                        },
                        Node::Leaf { value: -1.0 / 3.0 },
                        Node::Leaf { value: 2.0e-17 },
                    ],
                },
            }],
            train_mse: vec![2.0, 1.0 / 7.0],
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let m = model();
        let text = model_to_text(&m);
        assert_eq!(model_from_text(&text).unwrap(), m);
        assert_eq!(model_to_text(&model_from_text(&text).unwrap()), text);
    }

    #[test]
    fn rejects_damage() {
        let text = model_to_text(&model());
        assert!(model_from_text(&text.replace("sector-congest-model 1", "sector-congest-model 2")).is_err());
        assert!(model_from_text(&text.replace("split 0 719.5 1 2", "split 0 719.5 1 9")).is_err());
        assert!(model_from_text(&text.replace("end\n", "")).is_err());
        let e = model_from_text(&text.replace("f0 ", "g0 ")).unwrap_err();
        assert_eq!(e.line, 4);
    }
}
