//! Two-valued measures, density-operator states, measures on subobjects of
//! the spectral presheaf, and ℤ₂-valued states.

use fixedbitset::FixedBitSet;
use num_rational::BigRational;
use num_traits::{One, Zero};
use std::collections::HashMap;

use serde_json::json;

use crate::bsub::{BSubPoset, BooleanSubalg};
use crate::daseinisation::{daseinise_projection, Direction};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::oml::{ElemId, FiniteOml};
use crate::presheaf::{GlobalSection, GroupPresheaf, Presheaf, Subobject};
use crate::scalar::{fmt_rational, QuadScalar};

/// A finitely additive `{0,1}`-valued measure on the elements.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ZeroOneMeasure {
    pub value: Vec<u8>,
}

impl ZeroOneMeasure {
    /// First violated condition as a witnessing pair of element labels.
    pub fn check(&self, o: &FiniteOml) -> Result<()> {
        let bad = |p: ElemId, q: ElemId| Err(Error::NotAMeasure(o.label(p).to_string(), o.label(q).to_string()));
        if self.value.len() != o.len() || self.value.iter().any(|&v| v > 1) {
            return Err(Error::NotAMeasure("domain".into(), "range".into()));
        }
        if self.value[o.zero()] != 0 || self.value[o.one()] != 1 {
            return bad(o.zero(), o.one());
        }
        for p in 0..o.len() {
            for q in p..o.len() {
                if let Some(j) = o.join_orth(p, q) {
                    if self.value[j] != self.value[p] + self.value[q] {
                        return bad(p, q);
                    }
                }
            }
        }
        Ok(())
    }
}

/// `σ(p) = 1` iff the section's Stone point at `{0,p,p′,1}` is `p`.
pub fn section_to_measure(o: &FiniteOml, star: &BSubPoset, sigma: &Presheaf, s: &GlobalSection) -> Result<ZeroOneMeasure> {
    if !sigma.is_section(s) {
        return Err(Error::Internal("not a global section".into()));
    }
    let mut value = vec![0u8; o.len()];
    value[o.one()] = 1;
    for p in 0..o.len() {
        if p == o.zero() || p == o.one() {
            continue;
        }
        let node = star
            .point_of(o, p)
            .ok_or_else(|| Error::Internal(format!("no 4-element node for {}", o.label(p))))?;
        value[p] = (star.node(node).atoms[s.choice[node]] == p) as u8;
    }
    let m = ZeroOneMeasure { value };
    // every 8-element node must see exactly one atom valued 1
    for l in star.lines() {
        let b = star.node(l);
        if b.atoms.iter().map(|&a| m.value[a] as usize).sum::<usize>() != 1 {
            return Err(Error::Internal(format!("section is not additive on {}", b.label(o))));
        }
    }
    m.check(o)?;
    Ok(m)
}

/// `s_B` is the atom of B valued 1.
pub fn measure_to_section(o: &FiniteOml, star: &BSubPoset, sigma: &Presheaf, m: &ZeroOneMeasure) -> Result<GlobalSection> {
    m.check(o)?;
    let mut choice = Vec::with_capacity(star.len());
    for b in star.nodes() {
        let hits: Vec<usize> = (0..b.atoms.len()).filter(|&i| m.value[b.atoms[i]] == 1).collect();
        if hits.len() != 1 {
            let a = b.atoms[0];
            return Err(Error::NotAMeasure(o.label(a).to_string(), b.label(o)));
        }
        choice.push(hits[0]);
    }
    let s = GlobalSection { choice };
    if !sigma.is_section(&s) {
        return Err(Error::Internal("restriction of a measure is not compatible".into()));
    }
    Ok(s)
}

/// All two-valued measures, found by choosing one atom per block; shares
/// no code with the section search.
pub fn enumerate_zero_one_measures(o: &FiniteOml, limit: usize) -> Result<Vec<ZeroOneMeasure>> {
    let mut assign: Vec<Option<u8>> = vec![None; o.len()];
    let mut out = Vec::new();

    fn rec(
        o: &FiniteOml,
        bi: usize,
        assign: &mut Vec<Option<u8>>,
        out: &mut Vec<ZeroOneMeasure>,
        limit: usize,
    ) -> Result<()> {
        let blocks = o.blocks();
        if bi == blocks.len() {
            // extend to every element through the blocks and check coherence
            let mut value: Vec<Option<u8>> = vec![None; o.len()];
            for b in blocks {
                for mask in 0..=b.full_mask() {
                    let v: u8 = (0..b.atoms.len())
                        .filter(|k| mask >> k & 1 == 1)
                        .map(|k| assign[b.atoms[k]].unwrap())
                        .sum();
                    let e = b.element(mask);
                    match value[e] {
                        Some(w) if w != v => return Ok(()),
                        _ => value[e] = Some(v),
                    }
                }
            }
            let m = ZeroOneMeasure {
                value: value.into_iter().map(|v| v.unwrap_or(0)).collect(),
            };
            if m.check(o).is_ok() {
                out.push(m);
                if out.len() > limit {
                    return Err(Error::TooLarge {
                        what: "two-valued measures",
                        reached: out.len(),
                        budget: limit,
                    });
                }
            }
            return Ok(());
        }
        let b = &blocks[bi];
        let ones = b.atoms.iter().filter(|&&a| assign[a] == Some(1)).count();
        let open: Vec<ElemId> = b.atoms.iter().copied().filter(|&a| assign[a].is_none()).collect();
        if ones > 1 || (ones == 0 && open.is_empty()) {
            return Ok(());
        }
        if ones == 1 {
            for &a in &open {
                assign[a] = Some(0);
            }
            rec(o, bi + 1, assign, out, limit)?;
            for &a in &open {
                assign[a] = None;
            }
            return Ok(());
        }
        for &chosen in &open {
            for &a in &open {
                assign[a] = Some((a == chosen) as u8);
            }
            rec(o, bi + 1, assign, out, limit)?;
        }
        for &a in &open {
            assign[a] = None;
        }
        Ok(())
    }

    rec(o, 0, &mut assign, &mut out, limit)?;
    out.sort();
    Ok(out)
}

/// `ρ = Σ w·|v⟩⟨v|/⟨v|v⟩` with positive rational weights summing to one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct State {
    pub weights: Vec<(BigRational, Vec<QuadScalar>)>,
    density: Matrix,
}

impl State {
    pub fn new(dim: usize, weights: Vec<(BigRational, Vec<QuadScalar>)>) -> Result<State> {
        if weights.is_empty() {
            return Err(Error::InvalidState("no weights".into()));
        }
        let mut total = BigRational::zero();
        let mut density = Matrix::zero(dim);
        for (w, v) in &weights {
            if *w <= BigRational::zero() {
                return Err(Error::InvalidState(format!("weight {} is not positive", fmt_rational(w))));
            }
            if v.len() != dim {
                return Err(Error::InvalidState(format!("ray of length {} in dimension {dim}", v.len())));
            }
            if v.iter().all(|x| x.is_zero()) {
                return Err(Error::InvalidState("zero ray".into()));
            }
            total += w;
            density = density.add(&Matrix::rank_one_projector(v).scale(&QuadScalar::from_rational(w.clone())));
        }
        if !total.is_one() {
            return Err(Error::InvalidState(format!("weights sum to {}", fmt_rational(&total))));
        }
        Ok(State { weights, density })
    }

    pub fn maximally_mixed(dim: usize) -> State {
        let w = BigRational::new(1.into(), (dim as i64).into());
        let weights = (0..dim)
            .map(|i| {
                let v = (0..dim).map(|j| QuadScalar::from_int((i == j) as i64)).collect();
                (w.clone(), v)
            })
            .collect();
        State::new(dim, weights).expect("valid mixed state")
    }

    pub fn density(&self) -> &Matrix {
        &self.density
    }

    /// `tr(ρ p)`.
    pub fn expectation(&self, p: &Matrix) -> QuadScalar {
        self.density.mul(p).trace()
    }
}

/// A measure on subobjects of the spectral presheaf, tabulated on finitely
/// many subobjects: `values[i][node]` belongs to `subobjects[i]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PresheafMeasure {
    subobjects: Vec<Subobject>,
    index: HashMap<Subobject, usize>,
    pub values: Vec<Vec<BigRational>>,
}

impl PresheafMeasure {
    pub fn new(subobjects: Vec<Subobject>, values: Vec<Vec<BigRational>>) -> PresheafMeasure {
        let index = subobjects.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
        PresheafMeasure {
            subobjects,
            index,
            values,
        }
    }

    pub fn subobjects(&self) -> &[Subobject] {
        &self.subobjects
    }

    pub fn value(&self, s: &Subobject) -> Option<&[BigRational]> {
        self.index.get(s).map(|&i| self.values[i].as_slice())
    }

    /// Normalization, range, antitone values and the modular law on every
    /// tabulated pair whose meet and join are tabulated.
    pub fn check(&self, sigma: &Presheaf) -> Vec<String> {
        let mut out = Vec::new();
        let base = sigma.base();
        let full = sigma.full_subobject();
        let empty = sigma.empty_subobject();
        match self.value(&full) {
            Some(v) if v.iter().all(One::is_one) => {}
            _ => out.push("μ(full) is not constantly 1".to_string()),
        }
        if let Some(v) = self.value(&empty) {
            if !v.iter().all(Zero::is_zero) {
                out.push("μ(empty) is not constantly 0".to_string());
            }
        }
        let unit = BigRational::one();
        for (i, vals) in self.values.iter().enumerate() {
            for (lo, hi) in base.cover_pairs() {
                if vals[lo] < vals[hi] {
                    out.push(format!("subobject {i} increases from node {lo} to {hi}"));
                }
            }
            if vals.iter().any(|v| *v < BigRational::zero() || *v > unit) {
                out.push(format!("subobject {i} leaves [0,1]"));
            }
        }
        for i in 0..self.subobjects.len() {
            for j in i + 1..self.subobjects.len() {
                let (a, b) = (&self.subobjects[i], &self.subobjects[j]);
                let (Some(join), Some(meet)) = (self.value(&a.join(b)), self.value(&a.meet(b))) else {
                    continue;
                };
                for n in 0..base.len() {
                    if &join[n] + &meet[n] != &self.values[i][n] + &self.values[j][n] {
                        out.push(format!("modular law fails for subobjects {i}, {j} at node {n}"));
                    }
                }
            }
        }
        out
    }

    /// Additivity over pairs that are disjoint at a node, and stabilization
    /// of ascending chains; with finite fibers the countable condition has
    /// only finitely many nonempty terms.
    pub fn check_locally_sigma_additive(&self, sigma: &Presheaf) -> Vec<String> {
        let mut out = Vec::new();
        let base = sigma.base();
        match self.value(&sigma.full_subobject()) {
            Some(v) if v.iter().all(One::is_one) => {}
            _ => out.push("μ(full) is not constantly 1".to_string()),
        }
        for (i, vals) in self.values.iter().enumerate() {
            for (lo, hi) in base.cover_pairs() {
                if vals[lo] < vals[hi] {
                    out.push(format!("subobject {i} increases from node {lo} to {hi}"));
                }
            }
        }
        for i in 0..self.subobjects.len() {
            for j in i + 1..self.subobjects.len() {
                let (a, b) = (&self.subobjects[i], &self.subobjects[j]);
                let Some(join) = self.value(&a.join(b)) else { continue };
                for n in 0..base.len() {
                    if a.parts[n] & b.parts[n] != 0 {
                        continue;
                    }
                    if join[n] != &self.values[i][n] + &self.values[j][n] {
                        out.push(format!("additivity fails for subobjects {i}, {j} at node {n}"));
                    }
                }
            }
        }
        out
    }

    pub fn to_json(&self, sigma: &Presheaf) -> serde_json::Value {
        json!(self
            .subobjects
            .iter()
            .zip(&self.values)
            .map(|(s, v)| json!({
                "parts": (0..s.parts.len())
                    .map(|n| crate::presheaf::ones(s.parts[n]).map(|x| sigma.fiber_labels(n)[x].clone()).collect::<Vec<_>>())
                    .collect::<Vec<_>>(),
                "values": v.iter().map(fmt_rational).collect::<Vec<_>>(),
            }))
            .collect::<Vec<_>>())
    }
}

/// The subobject of Stone points under `δ^o(p)_B` at every node B.
pub fn daseinisation_subobject(o: &FiniteOml, star: &BSubPoset, p: ElemId) -> Result<Subobject> {
    let parts = star
        .nodes()
        .iter()
        .map(|b| {
            let d = daseinise_projection(o, p, b, Direction::Outer)?;
            Ok(b.atoms
                .iter()
                .enumerate()
                .filter(|(_, &a)| o.leq(a, d))
                .fold(0u64, |m, (i, _)| m | 1 << i))
        })
        .collect::<Result<Vec<u64>>>()?;
    Ok(Subobject { parts })
}

/// Daseinisation subobjects of every element with the empty and full
/// subobjects.
pub fn default_subobjects(o: &FiniteOml, star: &BSubPoset, sigma: &Presheaf) -> Result<Vec<Subobject>> {
    let mut base: Vec<Subobject> = (0..o.len())
        .map(|p| daseinisation_subobject(o, star, p))
        .collect::<Result<_>>()?;
    base.push(sigma.empty_subobject());
    base.push(sigma.full_subobject());
    base.sort();
    base.dedup();
    Ok(base)
}

/// Adds every pairwise meet and join.
pub fn with_meets_and_joins(subobjects: &[Subobject]) -> Vec<Subobject> {
    let mut all = subobjects.to_vec();
    for i in 0..subobjects.len() {
        for j in i + 1..subobjects.len() {
            all.push(subobjects[i].meet(&subobjects[j]));
            all.push(subobjects[i].join(&subobjects[j]));
        }
    }
    all.sort();
    all.dedup();
    all
}

fn rational(x: QuadScalar) -> Result<BigRational> {
    x.to_rational()
        .ok_or_else(|| Error::Internal(format!("irrational expectation {x}")))
}

/// `μ_ρ(S)(B) = tr(ρ P_{S_B})` on the given subobjects, with all measure
/// axioms verified on the table.
pub fn measure_from_state(
    o: &FiniteOml,
    star: &BSubPoset,
    sigma: &Presheaf,
    rho: &State,
    subobjects: Vec<Subobject>,
) -> Result<PresheafMeasure> {
    if !o.is_matrix_mode() {
        return Err(Error::NeedsMatrixMode);
    }
    // P_{S_B} is a sum of atom projectors, so its trace is the sum of theirs
    let weight = trace_pairing(o, rho)?;
    let mut values = Vec::with_capacity(subobjects.len());
    for (i, s) in subobjects.iter().enumerate() {
        if !sigma.is_subobject(s) {
            return Err(Error::NotASubobject(format!("table entry {i}")));
        }
        let v = (0..star.len())
            .map(|n| {
                crate::presheaf::ones(s.parts[n])
                    .map(|x| &weight[star.node(n).atoms[x]])
                    .sum()
            })
            .collect();
        values.push(v);
    }
    let m = PresheafMeasure::new(subobjects, values);
    let problems = m.check(sigma);
    if !problems.is_empty() {
        return Err(Error::Internal(format!("state measure fails: {}", problems.join("; "))));
    }
    Ok(m)
}

/// `m*(p) = μ(S_p)(B_p)` over the daseinisation subobject of `p`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProjectionMeasure {
    pub values: Vec<BigRational>,
}

pub fn projection_measure_from_presheaf_measure(
    o: &FiniteOml,
    star: &BSubPoset,
    m: &PresheafMeasure,
) -> Result<ProjectionMeasure> {
    let mut values = Vec::with_capacity(o.len());
    for p in 0..o.len() {
        let s = daseinisation_subobject(o, star, p)?;
        let node = if p == o.zero() || p == o.one() {
            star.bottom()
        } else {
            star.point_of(o, p)
                .ok_or_else(|| Error::Internal(format!("no 4-element node for {}", o.label(p))))?
        };
        let v = m
            .value(&s)
            .ok_or_else(|| Error::NotInducedByState(format!("subobject of {} is not tabulated", o.label(p))))?;
        values.push(v[node].clone());
    }
    // well-definedness: every tabulated (S, B) with S_B equal to p's clopen
    for (s, v) in m.subobjects().iter().zip(&m.values) {
        for (n, b) in star.nodes().iter().enumerate() {
            let part = s.parts[n];
            let Some(p) = clopen_element(o, b, part) else { continue };
            if v[n] != values[p] {
                return Err(Error::NotInducedByState(format!(
                    "{} gets {} at {} but {} at its own context",
                    o.label(p),
                    fmt_rational(&v[n]),
                    b.label(o),
                    fmt_rational(&values[p])
                )));
            }
        }
    }
    // additivity inside every 8-element context
    for l in star.lines() {
        let b = star.node(l);
        for &p in &b.elements {
            for &q in &b.elements {
                if p < q && o.orthogonal(p, q) {
                    if let Some(j) = o.join_orth(p, q) {
                        if values[j] != &values[p] + &values[q] {
                            return Err(Error::NotInducedByState(format!(
                                "m* not additive on {} and {}",
                                o.label(p),
                                o.label(q)
                            )));
                        }
                    }
                }
            }
        }
    }
    for p in 0..o.len() {
        if &values[p] + &values[o.ortho(p)] != BigRational::one() {
            return Err(Error::NotInducedByState(format!("m*({0}) + m*({0}′) ≠ 1", o.label(p))));
        }
    }
    Ok(ProjectionMeasure { values })
}

/// The element of `b` whose atoms are exactly those in `part`.
fn clopen_element(o: &FiniteOml, b: &BooleanSubalg, part: u64) -> Option<ElemId> {
    let mut acc = o.zero();
    for (i, &a) in b.atoms.iter().enumerate() {
        if part >> i & 1 == 1 {
            acc = o.join_orth(acc, a)?;
        }
    }
    Some(acc)
}

/// Exact trace pairing `p ↦ tr(ρ p)` on every element.
pub fn trace_pairing(o: &FiniteOml, rho: &State) -> Result<Vec<BigRational>> {
    (0..o.len())
        .map(|p| rational(rho.expectation(o.matrix(p).ok_or(Error::NeedsMatrixMode)?)))
        .collect()
}

/// Assignments of 0/1 to the atoms with an even number of ones per block,
/// sorted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Z2States {
    pub atoms: Vec<ElemId>,
    /// `states[k][i]` is the value at `atoms[i]`.
    pub states: Vec<Vec<u8>>,
    pub non_constant: Vec<bool>,
}

/// Solved as the kernel of the block parity equations; errors if that
/// kernel has more than `budget` elements.
pub fn z2_states(o: &FiniteOml, budget: usize) -> Result<Z2States> {
    for (i, b) in o.blocks().iter().enumerate() {
        if b.atoms.len() != 3 {
            return Err(Error::Z2Arity {
                block: i,
                arity: b.atoms.len(),
            });
        }
    }
    let atoms = o.atoms();
    let pos = |a: ElemId| atoms.binary_search(&a).expect("block atoms are atoms");
    let blocks: Vec<[usize; 3]> = o
        .blocks()
        .iter()
        .map(|b| [pos(b.atoms[0]), pos(b.atoms[1]), pos(b.atoms[2])])
        .collect();
    let n = atoms.len();
    // row-reduce the parity equations over GF(2)
    let mut rows: Vec<FixedBitSet> = blocks
        .iter()
        .map(|b| {
            let mut r = FixedBitSet::with_capacity(n);
            for &i in b {
                r.toggle(i);
            }
            r
        })
        .collect();
    let mut pivots: Vec<(usize, usize)> = Vec::new();
    let mut next = 0;
    for col in 0..n {
        let Some(r) = (next..rows.len()).find(|&r| rows[r].contains(col)) else {
            continue;
        };
        rows.swap(next, r);
        let pivot = rows[next].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i != next && row.contains(col) {
                row.symmetric_difference_with(&pivot);
            }
        }
        pivots.push((next, col));
        next += 1;
    }
    let is_pivot: Vec<bool> = {
        let mut v = vec![false; n];
        for &(_, c) in &pivots {
            v[c] = true;
        }
        v
    };
    let basis: Vec<Vec<u8>> = (0..n)
        .filter(|&f| !is_pivot[f])
        .map(|f| {
            let mut v = vec![0u8; n];
            v[f] = 1;
            for &(r, c) in &pivots {
                v[c] = rows[r].contains(f) as u8;
            }
            v
        })
        .collect();
    if basis.len() >= usize::BITS as usize || 1usize << basis.len() > budget {
        return Err(Error::TooLarge {
            what: "Z2 states",
            reached: 1usize.checked_shl(basis.len() as u32).unwrap_or(usize::MAX),
            budget,
        });
    }
    let mut states: Vec<Vec<u8>> = (0..1usize << basis.len())
        .map(|mask| {
            let mut v = vec![0u8; n];
            for (j, b) in basis.iter().enumerate() {
                if mask >> j & 1 == 1 {
                    v.iter_mut().zip(b).for_each(|(x, y)| *x ^= y);
                }
            }
            v
        })
        .collect();
    states.sort();
    let non_constant = states
        .iter()
        .map(|s| s.iter().any(|&v| v != s[0]))
        .collect();
    Ok(Z2States {
        atoms,
        states,
        non_constant,
    })
}

/// Reads a ℤ₂ state off a Klein-4 section at the 4-element nodes.
pub fn klein_section_to_z2(k: &GroupPresheaf, star: &BSubPoset, atoms: &[ElemId], s: &GlobalSection) -> Result<Vec<u8>> {
    atoms
        .iter()
        .map(|&a| {
            let node = (0..star.len())
                .find(|&n| k.coords[n] == [a])
                .ok_or_else(|| Error::Internal("atom without a 4-element node".into()))?;
            Ok(k.vectors[node][s.choice[node]][0])
        })
        .collect()
}

/// The Klein-4 section carrying a ℤ₂ state, coordinate by coordinate.
pub fn z2_to_klein_section(k: &GroupPresheaf, atoms: &[ElemId], state: &[u8]) -> Result<GlobalSection> {
    let value = |a: ElemId| state[atoms.binary_search(&a).expect("known atom")];
    let mut choice = Vec::with_capacity(k.coords.len());
    for (n, coords) in k.coords.iter().enumerate() {
        let v: Vec<u8> = coords.iter().map(|&a| value(a)).collect();
        let x = k.vectors[n]
            .iter()
            .position(|w| *w == v)
            .ok_or_else(|| Error::Internal("state is odd on an 8-element node".into()))?;
        choice.push(x);
    }
    let s = GlobalSection { choice };
    if !k.presheaf.is_section(&s) {
        return Err(Error::Internal("state does not give a compatible section".into()));
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bsub::enumerate_bsub_star;
    use crate::bsub::tests::greechie;
    use crate::daseinisation::tests::{basis, q};
    use crate::presheaf::{global_sections, klein4_presheaf, spectral_presheaf, SearchMode, SearchOptions};

    fn all_sections(p: &Presheaf) -> Vec<GlobalSection> {
        global_sections(p, &SearchOptions::mode(SearchMode::Enumerate { limit: 10_000 }))
            .unwrap()
            .sections
    }

    #[test]
    fn basis_section_measure_roundtrip() {
        let o = basis(3);
        let star = enumerate_bsub_star(&o);
        let sigma = spectral_presheaf(&star, &o).unwrap();
        let sections = all_sections(&sigma);
        assert_eq!(sections.len(), 3);
        let e1 = o.find_label("v0").unwrap();
        let [e2, e3, e12, e23] = ["v1", "v2", "v0+v1", "v1+v2"].map(|l| o.find_label(l).unwrap());
        let mut hit = false;
        for s in &sections {
            let m = section_to_measure(&o, &star, &sigma, s).unwrap();
            assert_eq!(measure_to_section(&o, &star, &sigma, &m).unwrap(), *s);
            for p in 0..o.len() {
                assert_eq!(m.value[p] + m.value[o.ortho(p)], 1);
            }
            if m.value[e1] == 1 {
                hit = true;
                assert_eq!((m.value[e2], m.value[e3], m.value[e23], m.value[e12]), (0, 0, 0, 1));
            }
        }
        assert!(hit);
        let independent = enumerate_zero_one_measures(&o, 100).unwrap();
        assert_eq!(independent.len(), 3);
    }

    #[test]
    fn inconsistent_assignment_rejected() {
        let o = basis(3);
        let star = enumerate_bsub_star(&o);
        let sigma = spectral_presheaf(&star, &o).unwrap();
        let mut v = vec![0u8; o.len()];
        v[o.one()] = 1;
        for a in o.atoms() {
            v[a] = 1;
        }
        let m = ZeroOneMeasure { value: v };
        assert!(matches!(measure_to_section(&o, &star, &sigma, &m), Err(Error::NotAMeasure(_, _))));
    }

    #[test]
    fn mixed_state_measure() {
        let o = basis(3);
        let star = enumerate_bsub_star(&o);
        let sigma = spectral_presheaf(&star, &o).unwrap();
        let rho = State::maximally_mixed(3);
        let subs = default_subobjects(&o, &star, &sigma).unwrap();
        let m = measure_from_state(&o, &star, &sigma, &rho, subs).unwrap();
        for (s, v) in m.subobjects().iter().zip(&m.values) {
            for n in 0..star.len() {
                let rank: usize = ones_rank(&o, star.node(n), s.parts[n]);
                assert_eq!(v[n], BigRational::new((rank as i64).into(), 3.into()));
            }
        }
        assert!(m.value(&sigma.full_subobject()).unwrap().iter().all(|v| v.is_one()));
        let pm = projection_measure_from_presheaf_measure(&o, &star, &m).unwrap();
        assert_eq!(pm.values, trace_pairing(&o, &rho).unwrap());
        assert_eq!(pm.values[o.one()], q(1));
        assert_eq!(pm.values[o.zero()], q(0));
        assert!(m.check_locally_sigma_additive(&sigma).is_empty());
    }

    fn ones_rank(o: &FiniteOml, b: &BooleanSubalg, part: u64) -> usize {
        b.atoms
            .iter()
            .enumerate()
            .filter(|(i, _)| part >> i & 1 == 1)
            .map(|(_, &a)| o.rank(a))
            .sum()
    }

    #[test]
    fn corrupted_measure_fails_both_checks() {
        let o = basis(3);
        let star = enumerate_bsub_star(&o);
        let sigma = spectral_presheaf(&star, &o).unwrap();
        let subs = with_meets_and_joins(&default_subobjects(&o, &star, &sigma).unwrap());
        let mut m = measure_from_state(&o, &star, &sigma, &State::maximally_mixed(3), subs).unwrap();
        let top = star.lines()[0];
        for (s, v) in m.subobjects.clone().iter().zip(m.values.iter_mut()) {
            let k = s.parts[top].count_ones() as i64;
            v[top] = BigRational::new((k * k).into(), 9.into());
        }
        assert!(!m.check(&sigma).is_empty());
        assert!(!m.check_locally_sigma_additive(&sigma).is_empty());
    }


    fn z2_brute_force(blocks: &[[usize; 3]], n: usize) -> Vec<Vec<u8>> {
        let mut states = Vec::new();
            let mut cur: Vec<Option<u8>> = vec![None; n];

        fn rec(k: usize, cur: &mut Vec<Option<u8>>, blocks: &[[usize; 3]], out: &mut Vec<Vec<u8>>) {
            let ok = blocks.iter().all(|b| {
                let vals: Vec<Option<u8>> = b.iter().map(|&i| cur[i]).collect();
                match (vals[0], vals[1], vals[2]) {
                    (Some(x), Some(y), Some(z)) => (x + y + z) % 2 == 0,
                    _ => true,
                }
            });
            if !ok {
                return;
            }
            if k == cur.len() {
                out.push(cur.iter().map(|v| v.unwrap()).collect());
                return;
            }
            for v in [0u8, 1] {
                cur[k] = Some(v);
                rec(k + 1, cur, blocks, out);
            }
            cur[k] = None;
        }

        rec(0, &mut cur, blocks, &mut states);
        states
    }

    #[test]
    fn z2_kernel_matches_brute_force() {
        for o in [
            greechie(&[&["a", "b", "c"], &["c", "d", "e"]]),
            greechie(&[&["a", "b", "c"], &["c", "d", "e"], &["c", "f", "g"]]),
            greechie(&[&["a", "b", "c"], &["c", "d", "e"], &["e", "f", "g"], &["g", "h", "a"], &["b", "i", "f"]]),
        ] {
            let z = z2_states(&o, 1 << 20).unwrap();
            let pos = |a: ElemId| z.atoms.binary_search(&a).unwrap();
            let blocks: Vec<[usize; 3]> = o.blocks().iter().map(|b| [pos(b.atoms[0]), pos(b.atoms[1]), pos(b.atoms[2])]).collect();
            assert_eq!(z.states, z2_brute_force(&blocks, z.atoms.len()));
        }
    }

    #[test]
    fn z2_single_block() {
        let o = greechie(&[&["a", "b", "c"]]);
        let z = z2_states(&o, 100).unwrap();
        assert_eq!(z.states.len(), 4);
        assert_eq!(z.non_constant.iter().filter(|&&b| b).count(), 3);
        assert!(z.states.contains(&vec![0, 0, 0]));
        let star = enumerate_bsub_star(&o);
        let k = klein4_presheaf(&star, &o).unwrap();
        let sections = all_sections(&k.presheaf);
        assert_eq!(sections.len(), 4);
        for st in &z.states {
            let s = z2_to_klein_section(&k, &z.atoms, st).unwrap();
            assert_eq!(klein_section_to_z2(&k, &star, &z.atoms, &s).unwrap(), *st);
        }
    }

    #[test]
    fn z2_rejects_other_arity() {
        let o = basis(2);
        assert!(matches!(z2_states(&o, 100), Err(Error::Z2Arity { arity: 2, .. })));
    }
}
