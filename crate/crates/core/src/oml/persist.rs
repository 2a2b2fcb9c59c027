use serde::{Deserialize, Serialize};

use super::{Block, FiniteOml, Ray, Representation};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::QuadScalar;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElementJson {
    pub id: usize,
    pub label: String,
    pub rank: usize,
    /// Row-major projector entries, matrix mode only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<String>>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockJson {
    pub atoms: Vec<usize>,
    pub elements: Vec<usize>,
}

/// On-disk form of a [`FiniteOml`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelJson {
    pub mode: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    pub ring: u32,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rays: Vec<Vec<String>>,
    #[serde(default)]
    pub completions: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub atom_labels: Vec<String>,
    pub elements: Vec<ElementJson>,
    /// `order[p]` lists every q with p ≤ q.
    pub order: Vec<Vec<usize>>,
    pub ortho: Vec<usize>,
    pub zero: usize,
    pub one: usize,
    pub blocks: Vec<BlockJson>,
}

impl ModelJson {
    pub fn from_oml(o: &FiniteOml) -> ModelJson {
        let n = o.len();
        let (mode, dim, rays, completions, atom_labels) = match o.representation() {
            Representation::Matrix {
                dim,
                rays,
                completions,
                ..
            } => (
                "matrix",
                Some(*dim),
                rays.iter()
                    .map(|r| r.entries.iter().map(|x| x.to_string()).collect())
                    .collect(),
                *completions,
                Vec::new(),
            ),
            Representation::Abstract { atom_labels } => {
                ("greechie", None, Vec::new(), 0, atom_labels.clone())
            }
        };
        ModelJson {
            mode: mode.to_string(),
            dim,
            ring: o.ring(),
            rays,
            completions,
            atom_labels,
            elements: (0..n)
                .map(|e| ElementJson {
                    id: e,
                    label: o.label(e).to_string(),
                    rank: o.rank(e),
                    matrix: o.matrix(e).map(|m| {
                        m.rows()
                            .iter()
                            .map(|r| r.iter().map(|x| x.to_string()).collect())
                            .collect()
                    }),
                })
                .collect(),
            order: (0..n)
                .map(|p| (0..n).filter(|&q| o.leq(p, q)).collect())
                .collect(),
            ortho: (0..n).map(|p| o.ortho(p)).collect(),
            zero: o.zero(),
            one: o.one(),
            blocks: o
                .blocks()
                .iter()
                .map(|b| BlockJson {
                    atoms: b.atoms.clone(),
                    elements: b.elements.clone(),
                })
                .collect(),
        }
    }

    /// Rebuilds the structure and re-validates it.
    pub fn to_oml(&self) -> Result<FiniteOml> {
        let n = self.elements.len();
        let in_range = |x: usize| -> Result<usize> {
            if x < n {
                Ok(x)
            } else {
                Err(Error::Parse(format!("element id {x} out of range")))
            }
        };
        if self.order.len() != n || self.ortho.len() != n {
            return Err(Error::Parse("order/ortho length mismatch".into()));
        }
        for (i, e) in self.elements.iter().enumerate() {
            if e.id != i {
                return Err(Error::Parse(format!("element {i} has id {}", e.id)));
            }
        }
        let mut leq = vec![vec![false; n]; n];
        for (p, ups) in self.order.iter().enumerate() {
            for &q in ups {
                leq[p][in_range(q)?] = true;
            }
        }
        for &x in self.ortho.iter().chain([&self.zero, &self.one]) {
            in_range(x)?;
        }
        let mut blocks = Vec::new();
        for b in &self.blocks {
            for &x in b.atoms.iter().chain(&b.elements) {
                in_range(x)?;
            }
            blocks.push(Block {
                atoms: b.atoms.clone(),
                elements: b.elements.clone(),
            });
        }
        let repr = match self.mode.as_str() {
            "matrix" => {
                let dim = self
                    .dim
                    .ok_or_else(|| Error::Parse("matrix model lacks dim".into()))?;
                let parse = |s: &String| QuadScalar::parse(s, self.ring);
                let mut matrices = Vec::with_capacity(n);
                for e in &self.elements {
                    let rows = e
                        .matrix
                        .as_ref()
                        .ok_or_else(|| Error::Parse(format!("element {} lacks a matrix", e.id)))?;
                    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
                        return Err(Error::Parse(format!("element {} is not {dim}×{dim}", e.id)));
                    }
                    let rows = rows
                        .iter()
                        .map(|r| r.iter().map(parse).collect::<Result<Vec<_>>>())
                        .collect::<Result<Vec<_>>>()?;
                    matrices.push(Matrix::from_rows(rows));
                }
                let rays = self
                    .rays
                    .iter()
                    .enumerate()
                    .map(|(id, r)| {
                        Ok(Ray {
                            entries: r.iter().map(parse).collect::<Result<Vec<_>>>()?,
                            id,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Representation::Matrix {
                    dim,
                    ring: self.ring,
                    matrices,
                    rays,
                    completions: self.completions,
                }
            }
            "greechie" => Representation::Abstract {
                atom_labels: self.atom_labels.clone(),
            },
            other => return Err(Error::Parse(format!("unknown model mode {other:?}"))),
        };
        let oml = FiniteOml::assemble(
            repr,
            self.elements.iter().map(|e| e.label.clone()).collect(),
            self.elements.iter().map(|e| e.rank).collect(),
            |p, q| leq[p][q],
            self.ortho.clone(),
            self.zero,
            self.one,
            blocks,
        );
        let report = oml.validate();
        if !report.is_valid() {
            return Err(Error::InvalidOml(report.violations));
        }
        Ok(oml)
    }
}

#[cfg(test)]
mod tests {
    use super::super::rays::int_ray;
    use super::super::tests::greechie;
    use super::super::{build_oml_from_rays, BuildOptions};
    use super::*;

    #[test]
    fn greechie_roundtrip() {
        let o = greechie(&[&["a", "b", "c"], &["c", "d", "e"]]);
        let j = ModelJson::from_oml(&o);
        let text = serde_json::to_string(&j).unwrap();
        let back: ModelJson = serde_json::from_str(&text).unwrap();
        let o2 = back.to_oml().unwrap();
        assert_eq!(ModelJson::from_oml(&o2), j);
    }

    #[test]
    fn matrix_roundtrip() {
        let rays = vec![int_ray(&[1, 1, 0]), int_ray(&[1, -1, 0]), int_ray(&[0, 0, 1])];
        let o = build_oml_from_rays(&rays, 3, 0, &BuildOptions::default()).unwrap();
        let j = ModelJson::from_oml(&o);
        let o2 = j.to_oml().unwrap();
        assert_eq!(o2.matrix(3), o.matrix(3));
        assert_eq!(ModelJson::from_oml(&o2), j);
    }

    #[test]
    fn corrupted_model_rejected() {
        let o = greechie(&[&["a", "b", "c"]]);
        let mut j = ModelJson::from_oml(&o);
        j.ortho.swap(1, 2);
        assert!(matches!(j.to_oml(), Err(Error::InvalidOml(_))));
    }
}
