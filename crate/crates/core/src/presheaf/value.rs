use num_rational::BigRational;
use serde::Serialize;
use serde_json::json;

use super::Presheaf;
use crate::poset::{FinitePoset, NodeId};
use crate::scalar::fmt_rational;

/// Components of a natural transformation out of a finite presheaf:
/// `comps[node][x]` is the image of `x ∈ fiber(node)`.
#[derive(Clone, Debug, PartialEq)]
pub struct NatTrans<T> {
    pub comps: Vec<Vec<T>>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct NaturalityReport {
    /// `(lo, hi, x)`: the square for cover `lo < hi` fails at `x ∈ fiber(hi)`.
    pub failures: Vec<(NodeId, NodeId, usize)>,
}

impl NaturalityReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Checks `t_lo ∘ res = res′ ∘ t_hi` on every cover pair, where `target_res`
/// restricts values of the target presheaf.
pub fn check_naturality<T: PartialEq>(
    source: &Presheaf,
    t: &NatTrans<T>,
    target_res: impl Fn(NodeId, NodeId, &T) -> T,
) -> NaturalityReport {
    let mut failures = Vec::new();
    for (lo, hi) in source.base().cover_pairs() {
        for x in 0..source.fiber_size(hi) {
            let down = &t.comps[lo][source.restrict(lo, hi, x)];
            if *down != target_res(lo, hi, &t.comps[hi][x]) {
                failures.push((lo, hi, x));
            }
        }
    }
    NaturalityReport { failures }
}

/// A pair of functions on `↓B`: `α` order-preserving, `β` order-inverting,
/// `α ≤ β`. Entries are sorted by node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValueFiber {
    pub alpha: Vec<(NodeId, BigRational)>,
    pub beta: Vec<(NodeId, BigRational)>,
}

impl ValueFiber {
    /// Restriction to `↓lo`.
    pub fn restrict(&self, base: &FinitePoset, lo: NodeId) -> ValueFiber {
        let keep = |v: &Vec<(NodeId, BigRational)>| {
            v.iter()
                .filter(|(n, _)| base.leq(*n, lo))
                .cloned()
                .collect()
        };
        ValueFiber {
            alpha: keep(&self.alpha),
            beta: keep(&self.beta),
        }
    }

    /// Lists the broken conditions, empty when the pair is well formed.
    pub fn check(&self, base: &FinitePoset) -> Vec<String> {
        let mut out = Vec::new();
        if self.alpha.iter().map(|e| e.0).ne(self.beta.iter().map(|e| e.0)) {
            out.push("α and β have different domains".to_string());
            return out;
        }
        for (i, (n1, a1)) in self.alpha.iter().enumerate() {
            let b1 = &self.beta[i].1;
            if a1 > b1 {
                out.push(format!("α > β at node {n1}"));
            }
            for (j, (n2, a2)) in self.alpha.iter().enumerate() {
                if base.lt(*n1, *n2) {
                    if a1 > a2 {
                        out.push(format!("α not order-preserving on {n1} < {n2}"));
                    }
                    if *b1 < self.beta[j].1 {
                        out.push(format!("β not order-inverting on {n1} < {n2}"));
                    }
                }
            }
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        let f = |v: &Vec<(NodeId, BigRational)>| -> serde_json::Value {
            v.iter()
                .map(|(n, r)| json!([n, fmt_rational(r)]))
                .collect::<Vec<_>>()
                .into()
        };
        json!({ "alpha": f(&self.alpha), "beta": f(&self.beta) })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> Presheaf {
        let base = FinitePoset::from_relation(2, |i, j| i <= j);
        Presheaf::new(
            base,
            vec![vec!["*".into()], vec!["a".into(), "b".into()]],
            |_, _, _| 0,
        )
        .unwrap()
    }

    #[test]
    fn identity_is_natural() {
        let p = chain();
        let t = NatTrans {
            comps: (0..p.len()).map(|i| (0..p.fiber_size(i)).collect()).collect(),
        };
        assert!(check_naturality(&p, &t, |lo, hi, &x| p.restrict(lo, hi, x)).passed());
    }

    #[test]
    fn corrupted_component_fails_at_its_cover() {
        let p = chain();
        // target: two points at the bottom, identity-like at top
        let t = NatTrans {
            comps: vec![vec![0usize], vec![0, 1]],
        };
        let r = check_naturality(&p, &t, |_, _, &x| x);
        assert_eq!(r.failures, vec![(0, 1, 1)]);
    }

    #[test]
    fn value_fiber_checks() {
        let base = FinitePoset::from_relation(2, |i, j| i <= j);
        let q = |n: i64| BigRational::from_integer(n.into());
        let good = ValueFiber {
            alpha: vec![(0, q(1)), (1, q(2))],
            beta: vec![(0, q(3)), (1, q(2))],
        };
        assert!(good.check(&base).is_empty());
        let bad = ValueFiber {
            alpha: vec![(0, q(2)), (1, q(1))],
            beta: vec![(0, q(1)), (1, q(2))],
        };
        assert_eq!(bad.check(&base).len(), 3);
        assert_eq!(good.restrict(&base, 0).alpha, vec![(0, q(1))]);
    }
}
