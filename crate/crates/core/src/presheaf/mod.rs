//! Finite set-valued presheaves over finite posets, their subobjects and
//! global sections.

mod instances;
mod search;
mod value;

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::poset::{FinitePoset, NodeId};

pub use instances::{klein4_presheaf, outer_projection_presheaf, spectral_presheaf, GroupPresheaf};
pub use search::{brute_force_sections, global_sections, SearchMode, SearchOptions, SearchResult, TraceEvent};
pub use value::{check_naturality, NatTrans, NaturalityReport, ValueFiber};

/// Largest fiber the u64 domain masks can hold.
pub const MAX_FIBER: usize = 64;

/// A contravariant functor from a finite poset to finite sets. Fiber
/// elements are `0..fiber_size(node)`. Restrictions are given on cover
/// pairs; composites for every comparable pair are precomputed.
#[derive(Clone, Debug)]
pub struct Presheaf {
    base: FinitePoset,
    fibers: Vec<Vec<String>>,
    /// `composite[&(lo, hi)][x]` restricts `x ∈ fiber(hi)` to `fiber(lo)`.
    composite: HashMap<(NodeId, NodeId), Vec<usize>>,
    failures: Vec<(NodeId, NodeId)>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct FunctorialityReport {
    /// Pairs `(lo, hi)` where two cover paths disagree.
    pub failures: Vec<(NodeId, NodeId)>,
}

impl FunctorialityReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

impl Presheaf {
    /// `res(lo, hi, x)` is queried on cover pairs only.
    pub fn new(
        base: FinitePoset,
        fibers: Vec<Vec<String>>,
        res: impl Fn(NodeId, NodeId, usize) -> usize,
    ) -> Result<Presheaf> {
        let n = base.len();
        if fibers.len() != n {
            return Err(Error::Internal("one fiber per node required".into()));
        }
        if let Some(big) = fibers.iter().map(Vec::len).max().filter(|&m| m > MAX_FIBER) {
            return Err(Error::TooLarge {
                what: "fiber size",
                reached: big,
                budget: MAX_FIBER,
            });
        }
        let mut cover_maps: HashMap<(NodeId, NodeId), Vec<usize>> = HashMap::new();
        for (lo, hi) in base.cover_pairs() {
            let m: Vec<usize> = (0..fibers[hi].len()).map(|x| res(lo, hi, x)).collect();
            if m.iter().any(|&y| y >= fibers[lo].len()) {
                return Err(Error::Internal(format!(
                    "restriction {hi}→{lo} leaves the fiber"
                )));
            }
            cover_maps.insert((lo, hi), m);
        }
        Ok(Self::from_cover_maps(base, fibers, cover_maps))
    }

    fn from_cover_maps(
        base: FinitePoset,
        fibers: Vec<Vec<String>>,
        cover_maps: HashMap<(NodeId, NodeId), Vec<usize>>,
    ) -> Presheaf {
        let n = base.len();
        let mut composite: HashMap<(NodeId, NodeId), Vec<usize>> = HashMap::new();
        let mut failures = Vec::new();
        for i in 0..n {
            composite.insert((i, i), (0..fibers[i].len()).collect());
        }
        // fill pairs by increasing height gap so shorter composites exist
        let mut pairs: Vec<(NodeId, NodeId)> = (0..n)
            .flat_map(|lo| base.upset(lo).ones().filter(move |&hi| hi != lo).map(move |hi| (lo, hi)))
            .collect();
        pairs.sort_by_key(|&(lo, hi)| (base.height_of(hi) - base.height_of(lo), lo, hi));
        for (lo, hi) in pairs {
            let mut result: Option<Vec<usize>> = None;
            let mut agree = true;
            for &m in base.upper_covers(lo) {
                if !base.leq(m, hi) {
                    continue;
                }
                let first = &cover_maps[&(lo, m)];
                let rest = &composite[&(m, hi)];
                let path: Vec<usize> = rest.iter().map(|&x| first[x]).collect();
                match &result {
                    None => result = Some(path),
                    Some(r) => agree &= *r == path,
                }
            }
            if !agree {
                failures.push((lo, hi));
            }
            composite.insert((lo, hi), result.expect("a cover path exists"));
        }
        failures.sort_unstable();
        Presheaf {
            base,
            fibers,
            composite,
            failures,
        }
    }

    pub fn base(&self) -> &FinitePoset {
        &self.base
    }

    pub fn len(&self) -> usize {
        self.base.len()
    }

    pub fn is_empty(&self) -> bool {
        self.base.is_empty()
    }

    pub fn fiber_size(&self, node: NodeId) -> usize {
        self.fibers[node].len()
    }

    pub fn fiber_labels(&self, node: NodeId) -> &[String] {
        &self.fibers[node]
    }

    /// Restriction of `x ∈ fiber(hi)` to `lo ≤ hi`.
    pub fn restrict(&self, lo: NodeId, hi: NodeId, x: usize) -> usize {
        self.composite[&(lo, hi)][x]
    }

    pub fn restriction_map(&self, lo: NodeId, hi: NodeId) -> &[usize] {
        &self.composite[&(lo, hi)]
    }

    pub fn check_functoriality(&self) -> FunctorialityReport {
        FunctorialityReport {
            failures: self.failures.clone(),
        }
    }

    /// Restriction to the nodes of height ≤ `h`; returns the kept node ids.
    pub fn restricted_to_height(&self, h: usize) -> (Presheaf, Vec<NodeId>) {
        let keep: Vec<NodeId> = (0..self.len())
            .filter(|&i| self.base.height_of(i) <= h)
            .collect();
        (self.induced(&keep), keep)
    }

    /// Restriction to an arbitrary node subset (new ids follow `keep`).
    pub fn induced(&self, keep: &[NodeId]) -> Presheaf {
        let base = self.base.induced(keep);
        let fibers = keep.iter().map(|&i| self.fibers[i].clone()).collect();
        let cover_maps = base
            .cover_pairs()
            .into_iter()
            .map(|(lo, hi)| ((lo, hi), self.composite[&(keep[lo], keep[hi])].clone()))
            .collect();
        Presheaf::from_cover_maps(base, fibers, cover_maps)
    }

    /// Relabels nodes: node `i` becomes `perm[i]`.
    pub fn permuted(&self, perm: &[NodeId]) -> Presheaf {
        let mut inv = vec![0; perm.len()];
        for (i, &p) in perm.iter().enumerate() {
            inv[p] = i;
        }
        self.induced(&inv)
    }

    /// The presheaf with one point over every node.
    pub fn terminal(base: FinitePoset) -> Presheaf {
        let fibers = vec![vec!["*".to_string()]; base.len()];
        Presheaf::new(base, fibers, |_, _, _| 0).expect("terminal presheaf")
    }

    pub fn is_section(&self, s: &GlobalSection) -> bool {
        s.choice.len() == self.len()
            && self
                .base
                .cover_pairs()
                .into_iter()
                .all(|(lo, hi)| self.restrict(lo, hi, s.choice[hi]) == s.choice[lo])
    }

    pub fn full_subobject(&self) -> Subobject {
        Subobject {
            parts: (0..self.len()).map(|i| full_mask(self.fiber_size(i))).collect(),
        }
    }

    pub fn empty_subobject(&self) -> Subobject {
        Subobject {
            parts: vec![0; self.len()],
        }
    }

    /// Restriction maps every part into the part below.
    pub fn is_subobject(&self, s: &Subobject) -> bool {
        s.parts.len() == self.len()
            && (0..self.len()).all(|i| s.parts[i] & !full_mask(self.fiber_size(i)) == 0)
            && self.base.cover_pairs().into_iter().all(|(lo, hi)| {
                ones(s.parts[hi]).all(|x| s.parts[lo] >> self.restrict(lo, hi, x) & 1 == 1)
            })
    }

    /// Every subobject, by backtracking from the top nodes down.
    pub fn enumerate_subobjects(&self, budget: usize) -> Result<Vec<Subobject>> {
        let order = self.base.by_decreasing_height();
        let mut out = Vec::new();
        let mut parts = vec![0u64; self.len()];
        self.subobjects_rec(&order, 0, &mut parts, &mut out, budget)?;
        out.sort();
        Ok(out)
    }

    fn subobjects_rec(
        &self,
        order: &[NodeId],
        k: usize,
        parts: &mut Vec<u64>,
        out: &mut Vec<Subobject>,
        budget: usize,
    ) -> Result<()> {
        if k == order.len() {
            out.push(Subobject {
                parts: parts.clone(),
            });
            if out.len() > budget {
                return Err(Error::TooLarge {
                    what: "subobjects",
                    reached: out.len(),
                    budget,
                });
            }
            return Ok(());
        }
        let node = order[k];
        // the part must contain the restrictions of every part above
        let mut required = 0u64;
        for &up in self.base.upper_covers(node) {
            for x in ones(parts[up]) {
                required |= 1 << self.restrict(node, up, x);
            }
        }
        let full = full_mask(self.fiber_size(node));
        let free = full & !required;
        let mut sub = free;
        loop {
            parts[node] = required | sub;
            self.subobjects_rec(order, k + 1, parts, out, budget)?;
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & free;
        }
        parts[node] = 0;
        Ok(())
    }

    pub fn section_to_json(&self, s: &GlobalSection) -> Vec<String> {
        s.choice
            .iter()
            .enumerate()
            .map(|(i, &x)| self.fibers[i][x].clone())
            .collect()
    }
}

pub(crate) fn full_mask(k: usize) -> u64 {
    if k >= 64 {
        u64::MAX
    } else {
        (1u64 << k) - 1
    }
}

pub(crate) fn ones(mask: u64) -> impl Iterator<Item = usize> {
    (0..64).filter(move |&b| mask >> b & 1 == 1)
}

/// A compatible choice of one fiber element per node.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct GlobalSection {
    pub choice: Vec<usize>,
}

/// A sub-presheaf, one bitmask of fiber elements per node.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Subobject {
    pub parts: Vec<u64>,
}

impl Subobject {
    pub fn meet(&self, o: &Subobject) -> Subobject {
        Subobject {
            parts: self.parts.iter().zip(&o.parts).map(|(a, b)| a & b).collect(),
        }
    }

    pub fn join(&self, o: &Subobject) -> Subobject {
        Subobject {
            parts: self.parts.iter().zip(&o.parts).map(|(a, b)| a | b).collect(),
        }
    }

    pub fn leq(&self, o: &Subobject) -> bool {
        self.parts.iter().zip(&o.parts).all(|(a, b)| a & !b == 0)
    }

    pub fn contains(&self, node: NodeId, x: usize) -> bool {
        self.parts[node] >> x & 1 == 1
    }
}
