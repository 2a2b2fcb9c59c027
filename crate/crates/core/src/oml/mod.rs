//! Finite orthomodular posets built from ray sets or Greechie block lists.
//!
//! Elements are dense ids sorted by `(rank, canonical key)`. In matrix mode
//! every element carries its exact projector; in abstract mode elements are
//! classes of `(block, atom subset)` pairs glued along shared atoms.

mod greechie;
mod persist;
mod rays;
mod validate;

use std::collections::HashMap;

use fixedbitset::FixedBitSet;

use crate::matrix::Matrix;

pub use greechie::build_oml_from_greechie;
pub use persist::{ElementJson, ModelJson};
pub use rays::{
    build_oml_from_rays, canonicalize_ray, int_ray, parse_ray_file, BuildOptions, Ray, RayFile,
    Undersized,
};
pub use validate::{ValidationReport, Violation};

pub type ElemId = usize;

#[derive(Clone, Debug)]
pub enum Representation {
    Matrix {
        dim: usize,
        ring: u32,
        matrices: Vec<Matrix>,
        rays: Vec<Ray>,
        /// Atoms adjoined by auto-completion.
        completions: usize,
    },
    Abstract {
        atom_labels: Vec<String>,
    },
}

/// A maximal Boolean block: its atoms and the element for every atom subset.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    pub atoms: Vec<ElemId>,
    /// `elements[mask]` is the join of the atoms selected by `mask`.
    pub elements: Vec<ElemId>,
}

impl Block {
    pub fn element(&self, mask: usize) -> ElemId {
        self.elements[mask]
    }

    pub fn full_mask(&self) -> usize {
        (1usize << self.atoms.len()) - 1
    }

    /// The subset mask of `e` inside this block, if it lives here.
    pub fn mask_of(&self, e: ElemId) -> Option<usize> {
        self.elements.iter().position(|&x| x == e)
    }
}

#[derive(Clone, Debug)]
pub struct FiniteOml {
    repr: Representation,
    labels: Vec<String>,
    ranks: Vec<usize>,
    up: Vec<FixedBitSet>,
    ortho: Vec<ElemId>,
    zero: ElemId,
    one: ElemId,
    blocks: Vec<Block>,
    joins: HashMap<(ElemId, ElemId), ElemId>,
}

impl FiniteOml {
    /// Assembles a structure from raw parts without validating it.
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn assemble(
        repr: Representation,
        labels: Vec<String>,
        ranks: Vec<usize>,
        leq: impl Fn(ElemId, ElemId) -> bool,
        ortho: Vec<ElemId>,
        zero: ElemId,
        one: ElemId,
        blocks: Vec<Block>,
    ) -> FiniteOml {
        let n = labels.len();
        let mut up = vec![FixedBitSet::with_capacity(n); n];
        for (i, row) in up.iter_mut().enumerate() {
            for j in 0..n {
                if leq(i, j) {
                    row.insert(j);
                }
            }
        }
        let mut oml = FiniteOml {
            repr,
            labels,
            ranks,
            up,
            ortho,
            zero,
            one,
            blocks,
            joins: HashMap::new(),
        };
        oml.joins = oml.compute_orthogonal_joins();
        oml
    }

    fn compute_orthogonal_joins(&self) -> HashMap<(ElemId, ElemId), ElemId> {
        let n = self.len();
        let matrix_mode = self.is_matrix_mode();
        let mut out = HashMap::new();
        for p in 0..n {
            for q in p..n {
                if !self.orthogonal(p, q) {
                    continue;
                }
                let Some(j) = self.lub(p, q) else { continue };
                // in matrix mode only the exact sum counts as the join
                if matrix_mode && self.ranks[j] != self.ranks[p] + self.ranks[q] {
                    continue;
                }
                out.insert((p, q), j);
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn representation(&self) -> &Representation {
        &self.repr
    }

    pub fn is_matrix_mode(&self) -> bool {
        matches!(self.repr, Representation::Matrix { .. })
    }

    pub fn dim(&self) -> Option<usize> {
        match &self.repr {
            Representation::Matrix { dim, .. } => Some(*dim),
            Representation::Abstract { .. } => None,
        }
    }

    pub fn ring(&self) -> u32 {
        match &self.repr {
            Representation::Matrix { ring, .. } => *ring,
            Representation::Abstract { .. } => 0,
        }
    }

    pub fn matrix(&self, e: ElemId) -> Option<&Matrix> {
        match &self.repr {
            Representation::Matrix { matrices, .. } => Some(&matrices[e]),
            Representation::Abstract { .. } => None,
        }
    }

    pub fn label(&self, e: ElemId) -> &str {
        &self.labels[e]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Projector rank in matrix mode; number of block atoms in the
    /// canonical representative otherwise.
    pub fn rank(&self, e: ElemId) -> usize {
        self.ranks[e]
    }

    pub fn zero(&self) -> ElemId {
        self.zero
    }

    pub fn one(&self) -> ElemId {
        self.one
    }

    pub fn leq(&self, p: ElemId, q: ElemId) -> bool {
        self.up[p].contains(q)
    }

    pub fn ortho(&self, p: ElemId) -> ElemId {
        self.ortho[p]
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// `p ⊥ q` iff `p ≤ q′`.
    pub fn orthogonal(&self, p: ElemId, q: ElemId) -> bool {
        self.leq(p, self.ortho[q])
    }

    /// Join of two orthogonal elements, when it exists in the structure.
    pub fn join_orth(&self, p: ElemId, q: ElemId) -> Option<ElemId> {
        let key = if p <= q { (p, q) } else { (q, p) };
        self.joins.get(&key).copied()
    }

    /// Least upper bound in the poset, if any.
    pub fn lub(&self, p: ElemId, q: ElemId) -> Option<ElemId> {
        let mut ub = self.up[p].clone();
        ub.intersect_with(&self.up[q]);
        ub.ones().find(|&m| ub.is_subset(&self.up[m]))
    }

    /// Greatest lower bound in the poset, if any.
    pub fn glb(&self, p: ElemId, q: ElemId) -> Option<ElemId> {
        let lower: Vec<ElemId> = (0..self.len())
            .filter(|&x| self.leq(x, p) && self.leq(x, q))
            .collect();
        lower
            .iter()
            .copied()
            .find(|&m| lower.iter().all(|&x| self.leq(x, m)))
    }

    /// Minimal nonzero elements.
    pub fn atoms(&self) -> Vec<ElemId> {
        (0..self.len())
            .filter(|&p| {
                p != self.zero
                    && (0..self.len()).all(|x| x == p || x == self.zero || !self.leq(x, p))
            })
            .collect()
    }

    pub fn is_atom(&self, p: ElemId) -> bool {
        p != self.zero && (0..self.len()).all(|x| x == p || x == self.zero || !self.leq(x, p))
    }

    /// Element with the given label.
    pub fn find_label(&self, label: &str) -> Option<ElemId> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn validate(&self) -> ValidationReport {
        validate::validate_oml(self)
    }

    /// Blocks containing `p`.
    pub fn blocks_containing(&self, p: ElemId) -> Vec<usize> {
        (0..self.blocks.len())
            .filter(|&b| self.blocks[b].elements.contains(&p))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn greechie(blocks: &[&[&str]]) -> FiniteOml {
        let b: Vec<Vec<String>> = blocks
            .iter()
            .map(|x| x.iter().map(|s| s.to_string()).collect())
            .collect();
        build_oml_from_greechie(&b).unwrap()
    }

    #[test]
    fn cube_joins_and_atoms() {
        let o = greechie(&[&["a", "b", "c"]]);
        assert_eq!(o.len(), 8);
        let a = o.find_label("a").unwrap();
        let b = o.find_label("b").unwrap();
        let c = o.find_label("c").unwrap();
        let ab = o.join_orth(a, b).unwrap();
        assert_eq!(o.ortho(ab), c);
        assert_eq!(o.atoms(), vec![a, b, c]);
        assert!(o.orthogonal(a, b));
        assert!(!o.orthogonal(a, a));
        assert_eq!(o.glb(ab, o.ortho(a)), Some(b));
    }
}
