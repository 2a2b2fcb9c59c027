//! Heyting algebras of downsets and the Peirce-style height formulas.

use std::collections::{BTreeSet, HashMap};

use fixedbitset::FixedBitSet;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::poset::{FinitePoset, NodeId};

pub type DownsetId = usize;

/// All downsets of a finite poset with the Heyting operations.
#[derive(Clone, Debug)]
pub struct DownsetAlgebra {
    base: FinitePoset,
    elements: Vec<FixedBitSet>,
    index: HashMap<FixedBitSet, DownsetId>,
}

impl DownsetAlgebra {
    pub fn new(base: &FinitePoset, budget: usize) -> Result<DownsetAlgebra> {
        let n = base.len();
        let mut order: Vec<NodeId> = (0..n).collect();
        order.sort_by_key(|&i| (base.height_of(i), i));
        let mut elements = Vec::new();
        let mut cur = FixedBitSet::with_capacity(n);

        fn rec(
            k: usize,
            order: &[NodeId],
            base: &FinitePoset,
            cur: &mut FixedBitSet,
            out: &mut Vec<FixedBitSet>,
            budget: usize,
        ) -> Result<()> {
            if k == order.len() {
                if out.len() == budget {
                    return Err(Error::TooLarge {
                        what: "downsets",
                        reached: budget + 1,
                        budget,
                    });
                }
                out.push(cur.clone());
                return Ok(());
            }
            let x = order[k];
            rec(k + 1, order, base, cur, out, budget)?;
            if base.lower_covers(x).iter().all(|&y| cur.contains(y)) {
                cur.insert(x);
                rec(k + 1, order, base, cur, out, budget)?;
                cur.set(x, false);
            }
            Ok(())
        }

        rec(0, &order, base, &mut cur, &mut elements, budget)?;
        elements.sort_by(|a, b| {
            a.count_ones(..)
                .cmp(&b.count_ones(..))
                .then_with(|| a.ones().cmp(b.ones()))
        });
        let index = elements.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
        Ok(DownsetAlgebra {
            base: base.clone(),
            elements,
            index,
        })
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn base(&self) -> &FinitePoset {
        &self.base
    }

    pub fn element(&self, a: DownsetId) -> &FixedBitSet {
        &self.elements[a]
    }

    pub fn bottom(&self) -> DownsetId {
        0
    }

    pub fn top(&self) -> DownsetId {
        self.elements.len() - 1
    }

    pub fn leq(&self, a: DownsetId, b: DownsetId) -> bool {
        self.elements[a].is_subset(&self.elements[b])
    }

    fn id(&self, s: FixedBitSet) -> DownsetId {
        self.index[&s]
    }

    pub fn meet(&self, a: DownsetId, b: DownsetId) -> DownsetId {
        let mut s = self.elements[a].clone();
        s.intersect_with(&self.elements[b]);
        self.id(s)
    }

    pub fn join(&self, a: DownsetId, b: DownsetId) -> DownsetId {
        let mut s = self.elements[a].clone();
        s.union_with(&self.elements[b]);
        self.id(s)
    }

    /// `{q : ↓q ∩ A ⊆ B}`.
    pub fn implies(&self, a: DownsetId, b: DownsetId) -> DownsetId {
        let (sa, sb) = (&self.elements[a], &self.elements[b]);
        let mut s = FixedBitSet::with_capacity(self.base.len());
        for q in 0..self.base.len() {
            if self.base.downset(q).ones().all(|x| !sa.contains(x) || sb.contains(x)) {
                s.insert(q);
            }
        }
        self.id(s)
    }

    /// `((y→x)→y)→y`.
    pub fn peirce(&self, x: DownsetId, y: DownsetId) -> DownsetId {
        self.implies(self.implies(self.implies(y, x), y), y)
    }

    /// Values taken by `φ_k` over all assignments of its variables.
    pub fn phi_values(&self, k: usize) -> BTreeSet<DownsetId> {
        let all = 0..self.len();
        let mut vals: BTreeSet<DownsetId> = all.clone().flat_map(|x| all.clone().map(move |y| (x, y))).map(|(x, y)| self.peirce(x, y)).collect();
        for _ in 0..k {
            vals = vals
                .iter()
                .flat_map(|&v| (0..self.len()).map(move |w| (v, w)))
                .map(|(v, w)| self.peirce(v, w))
                .collect();
        }
        vals
    }

    /// Whether `φ_k` evaluates to top under every assignment.
    pub fn satisfies_phi(&self, k: usize) -> bool {
        self.phi_values(k).iter().all(|&v| v == self.top())
    }

    /// `φ_k` evaluated directly over all `N^(k+2)` assignments.
    pub fn satisfies_phi_brute_force(&self, k: usize) -> bool {
        let n = self.len();
        let mut vars = vec![0usize; k + 2];
        loop {
            let mut v = self.peirce(vars[0], vars[1]);
            for &w in &vars[2..] {
                v = self.peirce(v, w);
            }
            if v != self.top() {
                return false;
            }
            let mut i = 0;
            loop {
                if i == vars.len() {
                    return true;
                }
                vars[i] += 1;
                if vars[i] < n {
                    break;
                }
                vars[i] = 0;
                i += 1;
            }
        }
    }
}

/// Length of the longest chain minus one.
pub fn poset_height(q: &FinitePoset) -> usize {
    q.height()
}

/// `φ_k` on the downsets of `q`, decided on each principal downset of a
/// maximal node; a formula holds in the whole algebra iff it holds on every
/// such generated piece.
pub fn satisfies_phi_poset(q: &FinitePoset, k: usize, budget: usize) -> Result<bool> {
    for top in 0..q.len() {
        if !q.upper_covers(top).is_empty() {
            continue;
        }
        let keep: Vec<NodeId> = q.downset(top).ones().collect();
        let h = DownsetAlgebra::new(&q.induced(&keep), budget)?;
        if !h.satisfies_phi(k) {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PhiRow {
    pub height: usize,
    pub phi0: bool,
    pub phi1: bool,
    pub phi2: bool,
}

pub fn phi_table(q: &FinitePoset, budget: usize) -> Result<PhiRow> {
    Ok(PhiRow {
        height: poset_height(q),
        phi0: satisfies_phi_poset(q, 0, budget)?,
        phi1: satisfies_phi_poset(q, 1, budget)?,
        phi2: satisfies_phi_poset(q, 2, budget)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bsub::enumerate_bsub_star;
    use crate::bsub::tests::greechie;
    use proptest::prelude::*;

    fn chain(n: usize) -> FinitePoset {
        FinitePoset::from_relation(n, |i, j| i <= j)
    }

    fn antichain(n: usize) -> FinitePoset {
        FinitePoset::from_relation(n, |i, j| i == j)
    }

    #[test]
    fn small_algebras() {
        assert_eq!(DownsetAlgebra::new(&antichain(3), 100).unwrap().len(), 8);
        assert_eq!(DownsetAlgebra::new(&chain(2), 100).unwrap().len(), 3);
        let o = greechie(&[&["a", "b", "c"]]);
        let star = enumerate_bsub_star(&o);
        assert_eq!(DownsetAlgebra::new(star.poset(), 100).unwrap().len(), 10);
        assert_eq!(poset_height(star.poset()), 2);
        assert_eq!(poset_height(&antichain(4)), 0);
    }

    #[test]
    fn budget_is_enforced() {
        assert!(matches!(DownsetAlgebra::new(&antichain(8), 100), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn chain_fails_peirce() {
        let h = DownsetAlgebra::new(&chain(2), 100).unwrap();
        assert!(!h.satisfies_phi(0));
        assert!(h.satisfies_phi(1));
        let mid = 1;
        assert_ne!(h.peirce(h.bottom(), mid), h.top());
        assert!(DownsetAlgebra::new(&antichain(3), 100).unwrap().satisfies_phi(0));
    }

    #[test]
    fn cube_star_row() {
        let o = greechie(&[&["a", "b", "c"]]);
        let star = enumerate_bsub_star(&o);
        let row = phi_table(star.poset(), 10_000).unwrap();
        assert_eq!(
            row,
            PhiRow {
                height: 2,
                phi0: false,
                phi1: false,
                phi2: true
            }
        );
    }

    #[test]
    fn adjunction_exhaustive() {
        let o = greechie(&[&["a", "b", "c"]]);
        let star = enumerate_bsub_star(&o);
        let h = DownsetAlgebra::new(star.poset(), 100).unwrap();
        for a in 0..h.len() {
            for b in 0..h.len() {
                let i = h.implies(a, b);
                for x in 0..h.len() {
                    assert_eq!(h.leq(h.meet(a, x), b), h.leq(x, i));
                }
                assert_eq!(h.meet(a, h.join(b, i)), h.join(h.meet(a, b), h.meet(a, i)));
            }
        }
    }

    fn random_poset() -> impl Strategy<Value = FinitePoset> {
        (1usize..=6)
            .prop_flat_map(|n| (Just(n), proptest::collection::vec(any::<bool>(), n * n)))
            .prop_map(|(n, bits)| {
                // transitive closure of a random DAG on 0..n
                let mut r = vec![vec![false; n]; n];
                for i in 0..n {
                    r[i][i] = true;
                    for j in i + 1..n {
                        r[i][j] = bits[i * n + j] && bits[j * n + i];
                    }
                }
                for k in 0..n {
                    for i in 0..n {
                        for j in 0..n {
                            r[i][j] |= r[i][k] && r[k][j];
                        }
                    }
                }
                FinitePoset::from_relation(n, |i, j| r[i][j])
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn height_matches_formulas(q in random_poset()) {
            let h = DownsetAlgebra::new(&q, 10_000).unwrap();
            for k in 0..3 {
                prop_assert_eq!(h.satisfies_phi(k), poset_height(&q) <= k);
                prop_assert_eq!(satisfies_phi_poset(&q, k, 10_000).unwrap(), h.satisfies_phi(k));
            }
        }

        #[test]
        fn value_sets_agree_with_brute_force(q in random_poset().prop_filter("small", |q| q.len() <= 4)) {
            let h = DownsetAlgebra::new(&q, 10_000).unwrap();
            for k in 0..2 {
                prop_assert_eq!(h.satisfies_phi(k), h.satisfies_phi_brute_force(k));
            }
        }
    }
}
