//! Finite posets given by their order relation, with cached covers and
//! heights.

use fixedbitset::FixedBitSet;
use serde::Serialize;

pub type NodeId = usize;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FinitePoset {
    /// `up[i]` holds every `j` with `i ≤ j`.
    up: Vec<FixedBitSet>,
    /// `down[i]` holds every `j` with `j ≤ i`.
    down: Vec<FixedBitSet>,
    upper_covers: Vec<Vec<NodeId>>,
    lower_covers: Vec<Vec<NodeId>>,
    height: Vec<usize>,
}

impl FinitePoset {
    /// Builds a poset from a reflexive, antisymmetric, transitive relation.
    /// The relation is trusted; use [`FinitePoset::is_partial_order`] on
    /// untrusted input.
    pub fn from_relation(n: usize, leq: impl Fn(NodeId, NodeId) -> bool) -> Self {
        let mut up = vec![FixedBitSet::with_capacity(n); n];
        let mut down = vec![FixedBitSet::with_capacity(n); n];
        for i in 0..n {
            for j in 0..n {
                if leq(i, j) {
                    up[i].insert(j);
                    down[j].insert(i);
                }
            }
        }
        Self::from_bitsets(up, down)
    }

    /// Builds a poset from its cover pairs `(lower, upper)`, closing
    /// transitively.
    pub fn from_covers(n: usize, covers: &[(NodeId, NodeId)]) -> Self {
        let mut up = vec![FixedBitSet::with_capacity(n); n];
        for (i, u) in up.iter_mut().enumerate() {
            u.insert(i);
        }
        for &(lo, hi) in covers {
            up[lo].insert(hi);
        }
        // Warshall closure
        for k in 0..n {
            let row = up[k].clone();
            for i in 0..n {
                if up[i].contains(k) {
                    up[i].union_with(&row);
                }
            }
        }
        let mut down = vec![FixedBitSet::with_capacity(n); n];
        for i in 0..n {
            for j in up[i].ones() {
                down[j].insert(i);
            }
        }
        Self::from_bitsets(up, down)
    }

    fn from_bitsets(up: Vec<FixedBitSet>, down: Vec<FixedBitSet>) -> Self {
        let n = up.len();
        let mut upper_covers = vec![Vec::new(); n];
        let mut lower_covers = vec![Vec::new(); n];
        for i in 0..n {
            for j in up[i].ones() {
                if i == j {
                    continue;
                }
                // i < j is a cover iff no k with i < k < j
                let mut between = up[i].clone();
                between.intersect_with(&down[j]);
                if between.count_ones(..) == 2 {
                    upper_covers[i].push(j);
                    lower_covers[j].push(i);
                }
            }
        }
        // height = longest chain down to a minimal element
        let mut order: Vec<NodeId> = (0..n).collect();
        order.sort_by_key(|&i| down[i].count_ones(..));
        let mut height = vec![0usize; n];
        for &i in &order {
            height[i] = lower_covers[i]
                .iter()
                .map(|&j| height[j] + 1)
                .max()
                .unwrap_or(0);
        }
        FinitePoset {
            up,
            down,
            upper_covers,
            lower_covers,
            height,
        }
    }

    pub fn len(&self) -> usize {
        self.up.len()
    }

    pub fn is_empty(&self) -> bool {
        self.up.is_empty()
    }

    pub fn leq(&self, a: NodeId, b: NodeId) -> bool {
        self.up[a].contains(b)
    }

    pub fn lt(&self, a: NodeId, b: NodeId) -> bool {
        a != b && self.leq(a, b)
    }

    pub fn upset(&self, a: NodeId) -> &FixedBitSet {
        &self.up[a]
    }

    pub fn downset(&self, a: NodeId) -> &FixedBitSet {
        &self.down[a]
    }

    pub fn upper_covers(&self, a: NodeId) -> &[NodeId] {
        &self.upper_covers[a]
    }

    pub fn lower_covers(&self, a: NodeId) -> &[NodeId] {
        &self.lower_covers[a]
    }

    /// All cover pairs `(lower, upper)` in lexicographic order.
    pub fn cover_pairs(&self) -> Vec<(NodeId, NodeId)> {
        let mut out: Vec<_> = (0..self.len())
            .flat_map(|i| self.upper_covers[i].iter().map(move |&j| (i, j)))
            .collect();
        out.sort_unstable();
        out
    }

    /// Graded height of a node: length of the longest chain below it.
    pub fn height_of(&self, a: NodeId) -> usize {
        self.height[a]
    }

    /// Length of the longest chain minus one; 0 for the empty poset.
    pub fn height(&self) -> usize {
        self.height.iter().copied().max().unwrap_or(0)
    }

    /// Nodes sorted by decreasing height, ties by id.
    pub fn by_decreasing_height(&self) -> Vec<NodeId> {
        let mut v: Vec<NodeId> = (0..self.len()).collect();
        v.sort_by_key(|&i| (std::cmp::Reverse(self.height[i]), i));
        v
    }

    /// Induced subposet on `keep` (in the given order).
    pub fn induced(&self, keep: &[NodeId]) -> FinitePoset {
        FinitePoset::from_relation(keep.len(), |i, j| self.leq(keep[i], keep[j]))
    }

    /// Relabels nodes: node `i` of `self` becomes node `perm[i]`.
    pub fn permuted(&self, perm: &[NodeId]) -> FinitePoset {
        let mut inv = vec![0; perm.len()];
        for (i, &p) in perm.iter().enumerate() {
            inv[p] = i;
        }
        FinitePoset::from_relation(self.len(), |i, j| self.leq(inv[i], inv[j]))
    }

    /// Whether a node set is closed downward.
    pub fn is_downset(&self, set: &FixedBitSet) -> bool {
        set.ones().all(|i| self.down[i].is_subset(set))
    }

    /// Checks reflexivity, antisymmetry and transitivity of an arbitrary
    /// relation.
    pub fn is_partial_order(n: usize, leq: impl Fn(usize, usize) -> bool) -> bool {
        for i in 0..n {
            if !leq(i, i) {
                return false;
            }
            for j in 0..n {
                if i != j && leq(i, j) && leq(j, i) {
                    return false;
                }
                if !leq(i, j) {
                    continue;
                }
                for k in 0..n {
                    if leq(j, k) && !leq(i, k) {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Every node has height equal to its distance from a minimal element
    /// along any maximal chain, i.e. covers raise height by exactly one.
    pub fn is_graded(&self) -> bool {
        (0..self.len()).all(|i| {
            self.upper_covers[i]
                .iter()
                .all(|&j| self.height[j] == self.height[i] + 1)
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct HasseJson {
    pub nodes: Vec<HasseNode>,
    pub covers: Vec<(NodeId, NodeId)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct HasseNode {
    pub id: NodeId,
    pub label: String,
    pub height: usize,
}

/// Hasse diagram in DOT, one `rank=same` group per height, bottom first.
pub fn to_dot(poset: &FinitePoset, labels: &[String], name: &str) -> String {
    let mut out = String::new();
    out.push_str(&format!("digraph \"{}\" {{\n", name.replace('"', "'")));
    out.push_str("  rankdir=BT;\n  node [shape=box, fontsize=10];\n");
    for i in 0..poset.len() {
        out.push_str(&format!(
            "  n{} [label=\"{}\"];\n",
            i,
            labels[i].replace('"', "'")
        ));
    }
    for h in 0..=poset.height() {
        let ids: Vec<String> = (0..poset.len())
            .filter(|&i| poset.height_of(i) == h)
            .map(|i| format!("n{i}"))
            .collect();
        if !ids.is_empty() {
            out.push_str(&format!("  {{ rank=same; {}; }}\n", ids.join("; ")));
        }
    }
    for (lo, hi) in poset.cover_pairs() {
        out.push_str(&format!("  n{lo} -> n{hi};\n"));
    }
    out.push_str("}\n");
    out
}

pub fn to_hasse_json(poset: &FinitePoset, labels: &[String]) -> HasseJson {
    HasseJson {
        nodes: (0..poset.len())
            .map(|i| HasseNode {
                id: i,
                label: labels[i].clone(),
                height: poset.height_of(i),
            })
            .collect(),
        covers: poset.cover_pairs(),
    }
}
