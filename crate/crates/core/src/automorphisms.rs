//! Order-automorphisms of context posets, restriction from the full poset to
//! the star poset and back, and automorphisms of the spectral presheaf over
//! a fixed base automorphism.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::Serialize;

use crate::bsub::{boolean_shadows, planes_completion, BSubPoset};
use crate::error::{Error, Result};
use crate::poset::{FinitePoset, NodeId};
use crate::presheaf::{global_sections, Presheaf, SearchMode, SearchOptions};

/// Largest fiber whose bijections are tabulated as a presheaf fiber.
const MAX_PERMUTED: usize = 4;

/// A node permutation; `perm[i]` is the image of node `i`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct PosetAutomorphism {
    pub perm: Vec<NodeId>,
}

impl PosetAutomorphism {
    pub fn identity(n: usize) -> Self {
        PosetAutomorphism { perm: (0..n).collect() }
    }

    pub fn apply(&self, i: NodeId) -> NodeId {
        self.perm[i]
    }

    /// `self ∘ other`: first `other`, then `self`.
    pub fn compose(&self, other: &PosetAutomorphism) -> PosetAutomorphism {
        PosetAutomorphism {
            perm: other.perm.iter().map(|&i| self.perm[i]).collect(),
        }
    }

    pub fn inverse(&self) -> PosetAutomorphism {
        let mut inv = vec![0; self.perm.len()];
        for (i, &p) in self.perm.iter().enumerate() {
            inv[p] = i;
        }
        PosetAutomorphism { perm: inv }
    }

    pub fn is_identity(&self) -> bool {
        self.perm.iter().enumerate().all(|(i, &p)| i == p)
    }

    pub fn is_automorphism_of(&self, q: &FinitePoset) -> bool {
        let n = q.len();
        if self.perm.len() != n {
            return false;
        }
        let mut seen = vec![false; n];
        for &p in &self.perm {
            if p >= n || std::mem::replace(&mut seen[p], true) {
                return false;
            }
        }
        (0..n).all(|i| {
            q.height_of(i) == q.height_of(self.perm[i])
                && (0..n).all(|j| q.leq(i, j) == q.leq(self.perm[i], self.perm[j]))
        })
    }
}

/// All automorphisms, sorted lexicographically; the identity comes first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AutomorphismGroup {
    pub elements: Vec<PosetAutomorphism>,
}

impl AutomorphismGroup {
    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn index_of(&self, g: &PosetAutomorphism) -> Option<usize> {
        self.elements.binary_search(g).ok()
    }

    /// `table[i][j]` is the index of `elements[i] ∘ elements[j]`.
    pub fn composition_table(&self) -> Result<Vec<Vec<usize>>> {
        self.elements
            .iter()
            .map(|a| {
                self.elements
                    .iter()
                    .map(|b| {
                        self.index_of(&a.compose(b))
                            .ok_or_else(|| Error::Internal("automorphisms not closed under composition".into()))
                    })
                    .collect()
            })
            .collect()
    }

    /// A generating set chosen greedily in element order.
    pub fn generators(&self) -> Vec<PosetAutomorphism> {
        let Some(first) = self.elements.first() else { return vec![] };
        let mut gens: Vec<PosetAutomorphism> = Vec::new();
        let mut span: HashSet<PosetAutomorphism> = HashSet::from([first.clone()]);
        for g in &self.elements {
            if span.contains(g) {
                continue;
            }
            gens.push(g.clone());
            let mut queue: VecDeque<PosetAutomorphism> = span.iter().cloned().collect();
            while let Some(x) = queue.pop_front() {
                for s in &gens {
                    let y = s.compose(&x);
                    if span.insert(y.clone()) {
                        queue.push_back(y);
                    }
                }
            }
        }
        gens
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "order": self.order(),
            "generators": self.generators().into_iter().map(|g| g.perm).collect::<Vec<_>>(),
        })
    }
}

/// Colour refinement seeded with height and cover/up/down degrees.
fn refined_colours(q: &FinitePoset) -> Vec<usize> {
    let n = q.len();
    let mut colour: Vec<usize> = {
        let keys: Vec<_> = (0..n)
            .map(|i| {
                (
                    q.height_of(i),
                    q.upset(i).count_ones(..),
                    q.downset(i).count_ones(..),
                    q.upper_covers(i).len(),
                    q.lower_covers(i).len(),
                )
            })
            .collect();
        relabel(&keys)
    };
    loop {
        let keys: Vec<_> = (0..n)
            .map(|i| {
                let mut up: Vec<usize> = q.upper_covers(i).iter().map(|&j| colour[j]).collect();
                let mut down: Vec<usize> = q.lower_covers(i).iter().map(|&j| colour[j]).collect();
                up.sort_unstable();
                down.sort_unstable();
                (colour[i], up, down)
            })
            .collect();
        let next = relabel(&keys);
        let classes = |c: &[usize]| c.iter().collect::<HashSet<_>>().len();
        if classes(&next) == classes(&colour) {
            return next;
        }
        colour = next;
    }
}

fn relabel<K: Ord + Clone>(keys: &[K]) -> Vec<usize> {
    let mut sorted: Vec<K> = keys.to_vec();
    sorted.sort();
    sorted.dedup();
    keys.iter().map(|k| sorted.binary_search(k).unwrap()).collect()
}

/// Node order for backtracking: nodes alone in their colour first, then
/// repeatedly the node with most already ordered Hasse neighbours (ignoring
/// those fixed nodes), rarest colour first on ties.
fn search_order(q: &FinitePoset, colour: &[usize]) -> Vec<NodeId> {
    let n = q.len();
    let mut size: HashMap<usize, usize> = HashMap::new();
    for &c in colour {
        *size.entry(c).or_default() += 1;
    }
    let fixed = |i: NodeId| size[&colour[i]] == 1;
    let mut order: Vec<NodeId> = (0..n).filter(|&i| fixed(i)).collect();
    let mut placed = vec![false; n];
    for &i in &order {
        placed[i] = true;
    }
    let mut score = vec![0usize; n];
    while order.len() < n {
        let next = (0..n)
            .filter(|&i| !placed[i])
            .min_by_key(|&i| (std::cmp::Reverse(score[i]), size[&colour[i]], i))
            .unwrap();
        placed[next] = true;
        order.push(next);
        for &v in q.upper_covers(next).iter().chain(q.lower_covers(next)) {
            score[v] += 1;
        }
    }
    order
}

struct AutSearch<'a> {
    q: &'a FinitePoset,
    colour: Vec<usize>,
    order: Vec<NodeId>,
    visited: &'a AtomicUsize,
    budget: usize,
}

impl AutSearch<'_> {
    fn consistent(&self, perm: &[Option<NodeId>], u: NodeId, v: NodeId) -> bool {
        self.order.iter().all(|&w| match perm[w] {
            Some(pw) => self.q.leq(w, u) == self.q.leq(pw, v) && self.q.leq(u, w) == self.q.leq(v, pw),
            None => true,
        })
    }

    fn rec(
        &self,
        k: usize,
        perm: &mut Vec<Option<NodeId>>,
        used: &mut Vec<bool>,
        out: &mut Vec<PosetAutomorphism>,
    ) -> Result<()> {
        if self.visited.fetch_add(1, Ordering::Relaxed) >= self.budget {
            return Err(Error::TooLarge {
                what: "automorphism search nodes",
                reached: self.budget,
                budget: self.budget,
            });
        }
        if k == self.order.len() {
            out.push(PosetAutomorphism {
                perm: perm.iter().map(|p| p.unwrap()).collect(),
            });
            return Ok(());
        }
        let u = self.order[k];
        for v in 0..self.q.len() {
            if used[v] || self.colour[v] != self.colour[u] || !self.consistent(perm, u, v) {
                continue;
            }
            perm[u] = Some(v);
            used[v] = true;
            self.rec(k + 1, perm, used, out)?;
            perm[u] = None;
            used[v] = false;
        }
        Ok(())
    }
}

/// Exhaustive backtracking after colour refinement; `budget` bounds the
/// number of search nodes.
pub fn poset_automorphisms(q: &FinitePoset, budget: usize) -> Result<AutomorphismGroup> {
    let n = q.len();
    if n == 0 {
        return Ok(AutomorphismGroup {
            elements: vec![PosetAutomorphism::identity(0)],
        });
    }
    let colour = refined_colours(q);
    let order = search_order(q, &colour);
    let visited = AtomicUsize::new(0);
    let search = AutSearch {
        q,
        colour,
        order,
        visited: &visited,
        budget,
    };
    let first = search.order[0];
    let images: Vec<NodeId> = (0..n).filter(|&v| search.colour[v] == search.colour[first]).collect();
    let parts: Vec<Result<Vec<PosetAutomorphism>>> = images
        .par_iter()
        .map(|&v| {
            let mut perm = vec![None; n];
            let mut used = vec![false; n];
            perm[first] = Some(v);
            used[v] = true;
            let mut out = Vec::new();
            search.rec(1, &mut perm, &mut used, &mut out)?;
            Ok(out)
        })
        .collect();
    let mut elements = Vec::new();
    for p in parts {
        elements.extend(p?);
    }
    elements.sort();
    Ok(AutomorphismGroup { elements })
}

/// Restriction of an automorphism of `full` to the nodes of `star`.
pub fn restrict_automorphism(full: &BSubPoset, star: &BSubPoset, g: &PosetAutomorphism) -> Result<PosetAutomorphism> {
    let perm = (0..star.len())
        .map(|i| {
            let x = full
                .find(&star.node(i).atoms)
                .ok_or_else(|| Error::Internal("star node missing from the full poset".into()))?;
            star.find(&full.node(g.apply(x)).atoms)
                .ok_or_else(|| Error::Internal("automorphism does not preserve height".into()))
        })
        .collect::<Result<Vec<_>>>()?;
    let r = PosetAutomorphism { perm };
    if !r.is_automorphism_of(star.poset()) {
        return Err(Error::Internal("restriction is not an automorphism".into()));
    }
    Ok(r)
}

/// Lifts `phi` first to the planes completion, then to every node of `full`
/// through its Boolean shadow.
pub fn extend_automorphism(star: &BSubPoset, full: &BSubPoset, phi: &PosetAutomorphism) -> Result<PosetAutomorphism> {
    let p3 = planes_completion(star)?;
    let to_star = |n: NodeId| star.find(&p3.node(n).atoms);
    let below_in_star = |x: NodeId| -> Vec<NodeId> {
        let mut v: Vec<NodeId> = p3.poset().downset(x).ones().filter_map(to_star).collect();
        v.sort_unstable();
        v
    };
    let mut planes_by_downset: HashMap<Vec<NodeId>, NodeId> = HashMap::new();
    for x in p3.of_height(3) {
        planes_by_downset.insert(below_in_star(x), x);
    }
    let mut lift = vec![0; p3.len()];
    for x in 0..p3.len() {
        lift[x] = match to_star(x) {
            Some(s) => p3.find(&star.node(phi.apply(s)).atoms).expect("star node in completion"),
            None => {
                let mut img: Vec<NodeId> = below_in_star(x).into_iter().map(|s| phi.apply(s)).collect();
                img.sort_unstable();
                *planes_by_downset
                    .get(&img)
                    .ok_or_else(|| Error::Internal("image of a plane is not plane-shaped".into()))?
            }
        };
    }
    let shadows = boolean_shadows(&p3, full);
    let by_members: HashMap<&[NodeId], NodeId> = shadows.iter().map(|s| (s.members.as_slice(), s.source)).collect();
    let perm = shadows
        .iter()
        .map(|s| {
            let mut img: Vec<NodeId> = s.members.iter().map(|&m| lift[m]).collect();
            img.sort_unstable();
            by_members
                .get(img.as_slice())
                .copied()
                .ok_or_else(|| Error::Internal("image of a shadow has no join".into()))
        })
        .collect::<Result<Vec<_>>>()?;
    let g = PosetAutomorphism { perm };
    if !g.is_automorphism_of(full.poset()) {
        return Err(Error::Internal("extension is not an automorphism".into()));
    }
    if restrict_automorphism(full, star, &g)? != *phi {
        return Err(Error::Internal("extension does not restrict back".into()));
    }
    Ok(g)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RestrictionReport {
    pub full_order: usize,
    pub star_order: usize,
    pub bijective: bool,
    pub homomorphism: bool,
    pub extension_inverse: bool,
}

impl RestrictionReport {
    pub fn isomorphism(&self) -> bool {
        self.bijective && self.homomorphism && self.extension_inverse
    }
}

/// Computes both groups and compares them through restriction and extension.
pub fn check_restriction_isomorphism(full: &BSubPoset, star: &BSubPoset, budget: usize) -> Result<RestrictionReport> {
    let g = poset_automorphisms(full.poset(), budget)?;
    let h = poset_automorphisms(star.poset(), budget)?;
    let r: Vec<usize> = g
        .elements
        .iter()
        .map(|x| {
            let y = restrict_automorphism(full, star, x)?;
            h.index_of(&y)
                .ok_or_else(|| Error::Internal("restriction not in the star group".into()))
        })
        .collect::<Result<_>>()?;
    let mut image = r.clone();
    image.sort_unstable();
    image.dedup();
    let bijective = image.len() == r.len() && r.len() == h.order();
    let tg = g.composition_table()?;
    let th = h.composition_table()?;
    let homomorphism = (0..g.order()).all(|i| (0..g.order()).all(|j| r[tg[i][j]] == th[r[i]][r[j]]));
    let mut extension_inverse = true;
    for (j, phi) in h.elements.iter().enumerate() {
        let e = extend_automorphism(star, full, phi)?;
        match g.index_of(&e) {
            Some(i) if r[i] == j => {}
            _ => extension_inverse = false,
        }
    }
    Ok(RestrictionReport {
        full_order: g.order(),
        star_order: h.order(),
        bijective,
        homomorphism,
        extension_inverse,
    })
}

/// A base automorphism with components `comps[B]: fiber(γ(B)) → fiber(B)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct SpectralAutomorphism {
    pub base: PosetAutomorphism,
    pub comps: Vec<Vec<usize>>,
}

impl SpectralAutomorphism {
    /// `(γ₂∘γ₁, τ₁_B ∘ τ₂_{γ₁(B)})` for `self = (γ₁, τ₁)`, `second = (γ₂, τ₂)`.
    pub fn then(&self, second: &SpectralAutomorphism) -> SpectralAutomorphism {
        let comps = (0..self.comps.len())
            .map(|b| {
                let t2 = &second.comps[self.base.apply(b)];
                t2.iter().map(|&x| self.comps[b][x]).collect()
            })
            .collect();
        SpectralAutomorphism {
            base: second.base.compose(&self.base),
            comps,
        }
    }

    pub fn is_natural(&self, p: &Presheaf) -> bool {
        p.base().cover_pairs().into_iter().all(|(lo, hi)| {
            let (glo, ghi) = (self.base.apply(lo), self.base.apply(hi));
            (0..p.fiber_size(ghi)).all(|x| p.restrict(lo, hi, self.comps[hi][x]) == self.comps[lo][p.restrict(glo, ghi, x)])
        })
    }
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for i in 0..k {
            let mut q = p.clone();
            q.insert(i, k - 1);
            out.push(q);
        }
    }
    out.sort();
    out
}

/// Every natural family of fiber bijections over `gamma`, at most `limit`.
///
/// When every restriction map is onto, a component determines the
/// components below it, so the families are the global sections of a
/// presheaf of admissible bijections and the section search applies.
pub fn spectral_automorphisms_over(p: &Presheaf, gamma: &PosetAutomorphism, limit: usize) -> Result<Vec<SpectralAutomorphism>> {
    let q = p.base();
    let n = q.len();
    if (0..n).any(|b| p.fiber_size(b) != p.fiber_size(gamma.apply(b))) {
        return Ok(vec![]);
    }
    let onto = q.cover_pairs().into_iter().all(|(lo, hi)| {
        let mut hit = vec![false; p.fiber_size(lo)];
        for x in 0..p.fiber_size(hi) {
            hit[p.restrict(lo, hi, x)] = true;
        }
        hit.into_iter().all(|h| h)
    });
    if !onto || (0..n).any(|b| p.fiber_size(b) > MAX_PERMUTED) {
        return spectral_automorphisms_backtracking(p, gamma, limit);
    }
    // τ_lo forced by τ_hi: τ_lo(res(x)) = res(τ_hi(x)) over x ∈ fiber(γ hi)
    let induced = |lo: NodeId, hi: NodeId, t_hi: &[usize]| -> Option<Vec<usize>> {
        let (glo, ghi) = (gamma.apply(lo), gamma.apply(hi));
        let mut t: Vec<Option<usize>> = vec![None; p.fiber_size(lo)];
        for x in 0..p.fiber_size(ghi) {
            let y = p.restrict(glo, ghi, x);
            let v = p.restrict(lo, hi, t_hi[x]);
            match t[y] {
                Some(w) if w != v => return None,
                _ => t[y] = Some(v),
            }
        }
        let t: Vec<usize> = t.into_iter().collect::<Option<_>>()?;
        let mut seen = vec![false; t.len()];
        t.iter().all(|&v| !std::mem::replace(&mut seen[v], true)).then_some(t)
    };
    let mut by_height: Vec<NodeId> = (0..n).collect();
    by_height.sort_by_key(|&b| (q.height_of(b), b));
    let mut admissible: Vec<Vec<Vec<usize>>> = vec![Vec::new(); n];
    for &b in &by_height {
        admissible[b] = permutations(p.fiber_size(b))
            .into_iter()
            .filter(|t| {
                q.lower_covers(b)
                    .iter()
                    .all(|&lo| induced(lo, b, t).is_some_and(|s| admissible[lo].binary_search(&s).is_ok()))
            })
            .collect();
        if admissible[b].is_empty() {
            return Ok(vec![]);
        }
    }
    let fibers = admissible
        .iter()
        .map(|ts| ts.iter().map(|t| format!("{t:?}")).collect())
        .collect();
    let local = Presheaf::new(q.clone(), fibers, |lo, hi, x| {
        let t = induced(lo, hi, &admissible[hi][x]).expect("admissible");
        admissible[lo].binary_search(&t).expect("admissible below")
    })?;
    let found = global_sections(&local, &SearchOptions::mode(SearchMode::Enumerate { limit }))?;
    let mut out: Vec<SpectralAutomorphism> = found
        .sections
        .into_iter()
        .map(|s| SpectralAutomorphism {
            base: gamma.clone(),
            comps: s.choice.iter().enumerate().map(|(b, &i)| admissible[b][i].clone()).collect(),
        })
        .collect();
    out.sort();
    Ok(out)
}

/// Reference enumeration by plain backtracking over all fiber bijections.
pub fn spectral_automorphisms_backtracking(p: &Presheaf, gamma: &PosetAutomorphism, limit: usize) -> Result<Vec<SpectralAutomorphism>> {
    let q = p.base();
    let n = q.len();
    if (0..n).any(|b| p.fiber_size(b) != p.fiber_size(gamma.apply(b))) {
        return Ok(vec![]);
    }
    // breadth-first from the highest nodes so every node meets an assigned
    // neighbour early
    let mut order = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    for s in q.by_decreasing_height() {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            order.push(u);
            for &v in q.lower_covers(u).iter().chain(q.upper_covers(u)) {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
    }
    let mut comps: Vec<Option<Vec<usize>>> = vec![None; n];
    let mut out = Vec::new();

    let square_ok = |comps: &[Option<Vec<usize>>], lo: NodeId, hi: NodeId| -> bool {
        let (Some(t_lo), Some(t_hi)) = (&comps[lo], &comps[hi]) else { return true };
        let (glo, ghi) = (gamma.apply(lo), gamma.apply(hi));
        (0..p.fiber_size(ghi)).all(|x| p.restrict(lo, hi, t_hi[x]) == t_lo[p.restrict(glo, ghi, x)])
    };

    fn rec(
        k: usize,
        order: &[NodeId],
        comps: &mut Vec<Option<Vec<usize>>>,
        p: &Presheaf,
        gamma: &PosetAutomorphism,
        square_ok: &dyn Fn(&[Option<Vec<usize>>], NodeId, NodeId) -> bool,
        out: &mut Vec<SpectralAutomorphism>,
        limit: usize,
    ) -> Result<()> {
        if k == order.len() {
            if out.len() == limit {
                return Err(Error::TooLarge {
                    what: "spectral automorphisms",
                    reached: limit + 1,
                    budget: limit,
                });
            }
            out.push(SpectralAutomorphism {
                base: gamma.clone(),
                comps: comps.iter().map(|c| c.clone().unwrap()).collect(),
            });
            return Ok(());
        }
        let b = order[k];
        for t in permutations(p.fiber_size(b)) {
            comps[b] = Some(t);
            let q = p.base();
            let ok = q.upper_covers(b).iter().all(|&hi| square_ok(comps, b, hi))
                && q.lower_covers(b).iter().all(|&lo| square_ok(comps, lo, b));
            if ok {
                rec(k + 1, order, comps, p, gamma, square_ok, out, limit)?;
            }
        }
        comps[b] = None;
        Ok(())
    }

    rec(0, &order, &mut comps, p, gamma, &square_ok, &mut out, limit)?;
    out.sort();
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SpectralGroupReport {
    pub base_order: usize,
    /// Number of spectral automorphisms over each base element, keyed by
    /// index in the base group.
    pub counts: BTreeMap<usize, usize>,
    pub over_identity: usize,
    /// Every height-1 node lies under a height-2 node.
    pub points_covered: bool,
    /// `γ ↦ (γ, τ_γ)` is a bijection reversing composition.
    pub anti_isomorphism: Option<bool>,
}

pub fn points_covered(star: &FinitePoset) -> bool {
    (0..star.len())
        .filter(|&i| star.height_of(i) == 1)
        .all(|i| star.upper_covers(i).iter().any(|&j| star.height_of(j) == 2))
}

/// Spectral automorphisms over every base automorphism, and the composition
/// check when each base element carries exactly one.
pub fn spectral_group_report(p: &Presheaf, budget: usize, limit: usize) -> Result<SpectralGroupReport> {
    let g = poset_automorphisms(p.base(), budget)?;
    let mut counts = BTreeMap::new();
    let mut unique: Vec<Option<SpectralAutomorphism>> = Vec::with_capacity(g.order());
    for (i, gamma) in g.elements.iter().enumerate() {
        let found = spectral_automorphisms_over(p, gamma, limit)?;
        counts.insert(i, found.len());
        unique.push(if found.len() == 1 { found.into_iter().next() } else { None });
    }
    let over_identity = counts[&0];
    let anti_isomorphism = if unique.iter().all(Option::is_some) {
        let tau: Vec<SpectralAutomorphism> = unique.into_iter().map(Option::unwrap).collect();
        let table = g.composition_table()?;
        // (γ₂∘γ₁) carries τ₁ then τ₂
        let ok = (0..g.order()).all(|i| (0..g.order()).all(|j| tau[j].then(&tau[i]) == tau[table[i][j]]));
        Some(ok)
    } else {
        None
    };
    Ok(SpectralGroupReport {
        base_order: g.order(),
        counts,
        over_identity,
        points_covered: points_covered(p.base()),
        anti_isomorphism,
    })
}
