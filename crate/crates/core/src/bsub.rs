//! Posets of Boolean subalgebras: the full poset, the star restriction to
//! height ≤ 2, and the height-3 extension by planes.

use std::collections::{BTreeSet, HashMap};

use fixedbitset::FixedBitSet;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::oml::{ElemId, FiniteOml};
use crate::poset::{self, FinitePoset, NodeId};

/// A unital Boolean subalgebra, identified by its sorted atom list.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BooleanSubalg {
    pub atoms: Vec<ElemId>,
    pub elements: Vec<ElemId>,
}

impl BooleanSubalg {
    /// `log₂(size) − 1`; the trivial algebra `{0,1}` has height 0.
    pub fn height(&self) -> usize {
        self.atoms.len() - 1
    }

    pub fn size(&self) -> usize {
        self.elements.len()
    }

    pub fn contains(&self, e: ElemId) -> bool {
        self.elements.binary_search(&e).is_ok()
    }

    pub fn is_subalgebra_of(&self, other: &BooleanSubalg) -> bool {
        self.elements.iter().all(|&e| other.contains(e))
    }

    /// The atom of `self` lying above `x`, if unique.
    pub fn atom_above(&self, o: &FiniteOml, x: ElemId) -> Option<ElemId> {
        let mut it = self.atoms.iter().copied().filter(|&a| o.leq(x, a));
        let first = it.next()?;
        it.next().is_none().then_some(first)
    }

    pub fn label(&self, o: &FiniteOml) -> String {
        let names: Vec<&str> = self.atoms.iter().map(|&a| o.label(a)).collect();
        format!("{{{}}}", names.join(","))
    }

    fn from_atoms(o: &FiniteOml, mut atoms: Vec<ElemId>) -> Option<BooleanSubalg> {
        atoms.sort_unstable();
        let joins = subset_joins(o, &atoms)?;
        let mut elements = joins.clone();
        elements.sort_unstable();
        elements.dedup();
        (elements.len() == joins.len()).then_some(BooleanSubalg { atoms, elements })
    }
}

/// Joins of every atom subset, indexed by mask.
fn subset_joins(o: &FiniteOml, atoms: &[ElemId]) -> Option<Vec<ElemId>> {
    let mut joins = vec![o.zero()];
    for &x in atoms {
        let ext: Option<Vec<ElemId>> = joins.iter().map(|&j| o.join_orth(j, x)).collect();
        joins.extend(ext?);
    }
    Some(joins)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Full,
    Star,
    Height3,
    Bounded(usize),
}

#[derive(Clone, Debug)]
pub struct BSubPoset {
    pub variant: Variant,
    nodes: Vec<BooleanSubalg>,
    poset: FinitePoset,
    index: HashMap<Vec<ElemId>, NodeId>,
}

impl BSubPoset {
    /// Sorts nodes by `(height, atoms)` and orders them by inclusion.
    fn from_nodes(variant: Variant, mut nodes: Vec<BooleanSubalg>) -> BSubPoset {
        nodes.sort_by(|a, b| (a.height(), &a.atoms).cmp(&(b.height(), &b.atoms)));
        nodes.dedup();
        let universe = nodes
            .iter()
            .flat_map(|n| n.elements.iter().copied())
            .max()
            .map_or(0, |m| m + 1);
        let sets: Vec<FixedBitSet> = nodes
            .iter()
            .map(|n| {
                let mut s = FixedBitSet::with_capacity(universe);
                for &e in &n.elements {
                    s.insert(e);
                }
                s
            })
            .collect();
        let poset = FinitePoset::from_relation(nodes.len(), |i, j| sets[i].is_subset(&sets[j]));
        let index = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.atoms.clone(), i))
            .collect();
        BSubPoset {
            variant,
            nodes,
            poset,
            index,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[BooleanSubalg] {
        &self.nodes
    }

    pub fn node(&self, i: NodeId) -> &BooleanSubalg {
        &self.nodes[i]
    }

    pub fn poset(&self) -> &FinitePoset {
        &self.poset
    }

    pub fn bottom(&self) -> NodeId {
        0
    }

    pub fn find(&self, atoms: &[ElemId]) -> Option<NodeId> {
        let mut key = atoms.to_vec();
        key.sort_unstable();
        self.index.get(&key).copied()
    }

    /// The 4-element node `{0, p, p′, 1}`.
    pub fn point_of(&self, o: &FiniteOml, p: ElemId) -> Option<NodeId> {
        self.find(&[p, o.ortho(p)])
    }

    pub fn of_height(&self, h: usize) -> Vec<NodeId> {
        (0..self.len())
            .filter(|&i| self.nodes[i].height() == h)
            .collect()
    }

    pub fn points(&self) -> Vec<NodeId> {
        self.of_height(1)
    }

    pub fn lines(&self) -> Vec<NodeId> {
        self.of_height(2)
    }

    pub fn planes(&self) -> Vec<NodeId> {
        self.of_height(3)
    }

    /// Keeps the nodes of height ≤ `h` (the bottom is always kept).
    pub fn truncated(&self, h: usize) -> BSubPoset {
        let variant = match h {
            2 => Variant::Star,
            3 => Variant::Height3,
            _ => Variant::Bounded(h),
        };
        BSubPoset::from_nodes(
            variant,
            self.nodes
                .iter()
                .filter(|n| n.height() <= h)
                .cloned()
                .collect(),
        )
    }

    pub fn labels(&self, o: &FiniteOml) -> Vec<String> {
        self.nodes.iter().map(|n| n.label(o)).collect()
    }

    pub fn to_dot(&self, o: &FiniteOml, name: &str) -> String {
        poset::to_dot(&self.poset, &self.labels(o), name)
    }

    pub fn to_json(&self, o: &FiniteOml) -> BSubJson {
        BSubJson {
            variant: self.variant,
            nodes: self
                .nodes
                .iter()
                .enumerate()
                .map(|(id, n)| BSubNodeJson {
                    id,
                    atoms: n.atoms.iter().map(|&a| o.label(a).to_string()).collect(),
                    height: n.height(),
                    size: n.size(),
                })
                .collect(),
            covers: self.poset.cover_pairs(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BSubJson {
    pub variant: Variant,
    pub nodes: Vec<BSubNodeJson>,
    pub covers: Vec<(NodeId, NodeId)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct BSubNodeJson {
    pub id: NodeId,
    pub atoms: Vec<String>,
    pub height: usize,
    pub size: usize,
}

fn trivial(o: &FiniteOml) -> BooleanSubalg {
    let mut elements = vec![o.zero(), o.one()];
    elements.sort_unstable();
    BooleanSubalg {
        atoms: vec![o.one()],
        elements,
    }
}

/// Height ≤ 2 subalgebras: `{0,1}`, every `{0,p,p′,1}`, and every 8-element
/// algebra spanned by an orthogonal triple whose joins all exist.
pub fn enumerate_bsub_star(o: &FiniteOml) -> BSubPoset {
    let mut nodes = vec![trivial(o)];
    if o.zero() == o.one() {
        return BSubPoset::from_nodes(Variant::Star, nodes);
    }
    for p in 0..o.len() {
        let pc = o.ortho(p);
        if p == o.zero() || p == o.one() || p > pc {
            continue;
        }
        if o.join_orth(p, pc) == Some(o.one()) {
            nodes.push(BooleanSubalg {
                atoms: vec![p, pc],
                elements: {
                    let mut v = vec![o.zero(), p, pc, o.one()];
                    v.sort_unstable();
                    v
                },
            });
        }
    }
    let triples: Vec<BooleanSubalg> = (0..o.len())
        .into_par_iter()
        .flat_map_iter(|a| {
            let mut out = Vec::new();
            if a == o.zero() || a == o.one() {
                return out;
            }
            for b in a + 1..o.len() {
                if b == o.one() || !o.orthogonal(a, b) {
                    continue;
                }
                let Some(ab) = o.join_orth(a, b) else { continue };
                let c = o.ortho(ab);
                if c <= b || c == o.zero() {
                    continue;
                }
                let ok = o.orthogonal(a, c)
                    && o.orthogonal(b, c)
                    && o.join_orth(a, c) == Some(o.ortho(b))
                    && o.join_orth(b, c) == Some(o.ortho(a));
                if ok {
                    if let Some(node) = BooleanSubalg::from_atoms(o, vec![a, b, c]) {
                        out.push(node);
                    }
                }
            }
            out
        })
        .collect();
    nodes.extend(triples);
    BSubPoset::from_nodes(Variant::Star, nodes)
}

/// Every Boolean subalgebra up to `max_height`, by backtracking over
/// increasing orthogonal families whose subset joins all exist.
pub fn enumerate_bsub(o: &FiniteOml, max_height: Option<usize>, budget: usize) -> Result<BSubPoset> {
    let max_atoms = max_height.map_or(usize::MAX, |h| h + 1);
    let mut found: Vec<BooleanSubalg> = Vec::new();

    fn rec(
        o: &FiniteOml,
        atoms: &mut Vec<ElemId>,
        joins: &[ElemId],
        max_atoms: usize,
        budget: usize,
        found: &mut Vec<BooleanSubalg>,
    ) -> Result<()> {
        let full = joins.len() - 1;
        let top = joins[full];
        if top == o.one() {
            let closed = (0..joins.len()).all(|m| o.ortho(joins[m]) == joins[full ^ m]);
            let mut elements = joins.to_vec();
            elements.sort_unstable();
            elements.dedup();
            if closed && elements.len() == joins.len() {
                found.push(BooleanSubalg {
                    atoms: atoms.clone(),
                    elements,
                });
                if found.len() > budget {
                    return Err(Error::TooLarge {
                        what: "boolean subalgebras",
                        reached: found.len(),
                        budget,
                    });
                }
            }
            return Ok(());
        }
        if atoms.len() >= max_atoms {
            return Ok(());
        }
        let start = atoms.last().map_or(0, |&a| a + 1);
        let rest = o.ortho(top);
        for x in start..o.len() {
            if x == o.zero() || !o.leq(x, rest) {
                continue;
            }
            let ext: Option<Vec<ElemId>> = joins.iter().map(|&j| o.join_orth(j, x)).collect();
            let Some(ext) = ext else { continue };
            let mut next = joins.to_vec();
            next.extend(ext);
            atoms.push(x);
            rec(o, atoms, &next, max_atoms, budget, found)?;
            atoms.pop();
        }
        Ok(())
    }

    rec(o, &mut Vec::new(), &[o.zero()], max_atoms, budget, &mut found)?;
    let variant = match max_height {
        None => Variant::Full,
        Some(2) => Variant::Star,
        Some(3) => Variant::Height3,
        Some(h) => Variant::Bounded(h),
    };
    Ok(BSubPoset::from_nodes(variant, found))
}

/// The height-≤2 part of the subalgebra poset of `2⁴`, as a pattern:
/// nodes 0 (bottom), 1..=7 points, 8..=13 lines, with its cover pairs.
fn plane_pattern() -> (usize, Vec<(usize, usize)>) {
    // atoms 0..4 as bitmasks; points are {x} for singletons and pairs
    // {01,23},{02,13},{03,12}; lines are partitions {x},{y},{zw}
    let points: Vec<u8> = vec![0b0001, 0b0010, 0b0100, 0b1000, 0b0011, 0b0101, 0b1001];
    let point_of = |m: u8| -> usize {
        let m = if points.contains(&m) { m } else { !m & 0b1111 };
        1 + points.iter().position(|&p| p == m).unwrap()
    };
    let mut covers = Vec::new();
    for i in 1..=7 {
        covers.push((0, i));
    }
    let pairs = [0b0011u8, 0b0101, 0b1001, 0b0110, 0b1010, 0b1100];
    for (k, &pair) in pairs.iter().enumerate() {
        let line = 8 + k;
        let singles: Vec<u8> = (0..4).map(|b| 1u8 << b).filter(|s| s & pair == 0).collect();
        covers.push((point_of(pair), line));
        for s in singles {
            covers.push((point_of(s), line));
        }
    }
    (14, covers)
}

/// Inserts one height-3 node over every downset of `star` shaped like the
/// points and lines of a 16-element Boolean algebra.
pub fn planes_completion(star: &BSubPoset) -> Result<BSubPoset> {
    let configs = plane_configurations(star);
    let mut nodes: Vec<BooleanSubalg> = star
        .nodes()
        .iter()
        .filter(|n| n.height() <= 2)
        .cloned()
        .collect();
    for lines in configs {
        let mut count: HashMap<ElemId, usize> = HashMap::new();
        let mut elements = BTreeSet::new();
        for &l in &lines {
            for &a in &star.node(l).atoms {
                *count.entry(a).or_default() += 1;
            }
            elements.extend(star.node(l).elements.iter().copied());
        }
        let atoms: Vec<ElemId> = {
            let mut v: Vec<ElemId> = count
                .into_iter()
                .filter(|&(_, c)| c == 3)
                .map(|(a, _)| a)
                .collect();
            v.sort_unstable();
            v
        };
        if atoms.len() != 4 || elements.len() != 16 {
            return Err(Error::Internal(format!(
                "plane configuration over lines {lines:?} spans {} elements",
                elements.len()
            )));
        }
        nodes.push(BooleanSubalg {
            atoms,
            elements: elements.into_iter().collect(),
        });
    }
    Ok(BSubPoset::from_nodes(Variant::Height3, nodes))
}

/// Sets of six lines whose downset matches the plane pattern, each set
/// reported once (sorted node ids).
pub fn plane_configurations(star: &BSubPoset) -> Vec<Vec<NodeId>> {
    let (pn, pcovers) = plane_pattern();
    let pat = FinitePoset::from_covers(pn, &pcovers);
    let q = star.poset();
    let height = |i: NodeId| star.node(i).height();
    // match lines first, then points through line covers
    let order: Vec<usize> = {
        let mut v = Vec::new();
        let mut placed = vec![false; pn];
        // first line, then repeatedly the unplaced node adjacent to most placed
        v.push(8);
        placed[8] = true;
        while v.len() < pn {
            let next = (0..pn)
                .filter(|&i| !placed[i])
                .max_by_key(|&i| {
                    let adj = pat
                        .upper_covers(i)
                        .iter()
                        .chain(pat.lower_covers(i))
                        .filter(|&&j| placed[j])
                        .count();
                    (adj, std::cmp::Reverse(i))
                })
                .unwrap();
            placed[next] = true;
            v.push(next);
        }
        v
    };
    let pat_height = |i: usize| match i {
        0 => 0,
        1..=7 => 1,
        _ => 2,
    };
    let mut found: BTreeSet<Vec<NodeId>> = BTreeSet::new();
    let mut map = vec![usize::MAX; pn];
    let mut used = FixedBitSet::with_capacity(star.len());

    #[allow(clippy::too_many_arguments)]
    fn rec(
        k: usize,
        order: &[usize],
        pat: &FinitePoset,
        q: &FinitePoset,
        height: &dyn Fn(NodeId) -> usize,
        pat_height: &dyn Fn(usize) -> usize,
        map: &mut Vec<usize>,
        used: &mut FixedBitSet,
        found: &mut BTreeSet<Vec<NodeId>>,
    ) {
        if k == order.len() {
            let mut lines: Vec<NodeId> = (8..14).map(|i| map[i]).collect();
            lines.sort_unstable();
            found.insert(lines);
            return;
        }
        let u = order[k];
        let candidates: Vec<NodeId> = if u == 0 {
            vec![0]
        } else if let Some(&w) = pat
            .upper_covers(u)
            .iter()
            .chain(pat.lower_covers(u))
            .find(|&&w| map[w] != usize::MAX)
        {
            let img = map[w];
            q.upper_covers(img)
                .iter()
                .chain(q.lower_covers(img))
                .copied()
                .collect()
        } else {
            (0..q.len()).collect()
        };
        for c in candidates {
            if used.contains(c) || height(c) != pat_height(u) {
                continue;
            }
            let consistent = (0..pat.len()).all(|v| {
                map[v] == usize::MAX || (pat.leq(u, v) == q.leq(c, map[v]) && pat.leq(v, u) == q.leq(map[v], c))
            });
            if !consistent {
                continue;
            }
            // a line's lower covers must all be pattern points
            if pat_height(u) == 2 && q.lower_covers(c).len() != 3 {
                continue;
            }
            map[u] = c;
            used.insert(c);
            rec(k + 1, order, pat, q, height, pat_height, map, used, found);
            used.set(c, false);
            map[u] = usize::MAX;
        }
    }

    rec(
        0,
        &order,
        &pat,
        q,
        &height,
        &pat_height,
        &mut map,
        &mut used,
        &mut found,
    );
    found.into_iter().collect()
}

/// `↓x ∩ P3` for one node `x` of the full poset.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BooleanShadow {
    /// Node of the full poset this shadow reconstructs.
    pub source: NodeId,
    /// Members, as nodes of the height-3 poset.
    pub members: Vec<NodeId>,
}

/// One shadow per node of `full`, each taken inside `p3`.
pub fn boolean_shadows(p3: &BSubPoset, full: &BSubPoset) -> Vec<BooleanShadow> {
    (0..full.len())
        .map(|x| BooleanShadow {
            source: x,
            members: (0..p3.len())
                .filter(|&n| p3.node(n).is_subalgebra_of(full.node(x)))
                .collect(),
        })
        .collect()
}
