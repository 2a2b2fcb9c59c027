use serde::Serialize;

use super::{FiniteOml, Representation};
use crate::matrix::Matrix;
use crate::scalar::QuadScalar;

/// One broken invariant with every witness found for it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub invariant: String,
    pub details: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Witnesses are capped so a badly broken input still yields a short report.
const MAX_DETAILS: usize = 16;

struct Collector {
    violations: Vec<Violation>,
    current: Vec<String>,
}

impl Collector {
    fn note(&mut self, msg: impl FnOnce() -> String) {
        if self.current.len() < MAX_DETAILS {
            self.current.push(msg());
        }
    }

    fn finish(&mut self, invariant: &str) {
        if !self.current.is_empty() {
            self.violations.push(Violation {
                invariant: invariant.to_string(),
                details: std::mem::take(&mut self.current),
            });
        }
    }
}

pub(crate) fn validate_oml(o: &FiniteOml) -> ValidationReport {
    let n = o.len();
    let l = |e: usize| o.label(e).to_string();
    let mut c = Collector {
        violations: Vec::new(),
        current: Vec::new(),
    };

    for p in 0..n {
        if !o.leq(p, p) {
            c.note(|| format!("{} is not below itself", l(p)));
        }
        for q in 0..n {
            if p != q && o.leq(p, q) && o.leq(q, p) {
                c.note(|| format!("{} and {} are mutually below", l(p), l(q)));
            }
            if o.leq(p, q) {
                for r in 0..n {
                    if o.leq(q, r) && !o.leq(p, r) {
                        c.note(|| format!("{} ≤ {} ≤ {} but not {0} ≤ {2}", l(p), l(q), l(r)));
                    }
                }
            }
        }
    }
    c.finish("partial-order");

    for p in 0..n {
        if !o.leq(o.zero(), p) || !o.leq(p, o.one()) {
            c.note(|| format!("{} is not between 0 and 1", l(p)));
        }
    }
    c.finish("bounds");

    for p in 0..n {
        let pc = o.ortho(p);
        if pc >= n {
            c.note(|| format!("{} has no orthocomplement", l(p)));
            continue;
        }
        if o.ortho(pc) != p {
            c.note(|| format!("{}′′ = {} ≠ {0}", l(p), l(o.ortho(pc))));
        }
        for q in 0..n {
            if o.leq(p, q) && o.ortho(q) < n && !o.leq(o.ortho(q), pc) {
                c.note(|| format!("{} ≤ {} but {1}′ ≰ {0}′", l(p), l(q)));
            }
        }
        for b in o.blocks() {
            if let Some(m) = b.mask_of(p) {
                let comp = b.element(b.full_mask() ^ m);
                if comp != pc {
                    c.note(|| format!("{}′ is {} but its block complement is {}", l(p), l(pc), l(comp)));
                }
            }
        }
    }
    c.finish("ortho");

    for (bi, b) in o.blocks().iter().enumerate() {
        let k = b.atoms.len();
        if b.elements.len() != 1 << k {
            c.note(|| format!("block {bi} has {} elements for {k} atoms", b.elements.len()));
            continue;
        }
        if b.element(0) != o.zero() || b.element(b.full_mask()) != o.one() {
            c.note(|| format!("block {bi} does not span 0..1"));
        }
        let mut seen = std::collections::HashSet::new();
        for m1 in 0..b.elements.len() {
            if !seen.insert(b.element(m1)) {
                c.note(|| format!("block {bi} repeats {}", l(b.element(m1))));
            }
            for m2 in 0..b.elements.len() {
                let (p, q) = (b.element(m1), b.element(m2));
                if o.leq(p, q) != (m1 & m2 == m1) {
                    c.note(|| format!("block {bi}: order of {} and {} is not subset order", l(p), l(q)));
                }
                let meet = b.element(m1 & m2);
                if o.glb(p, q) != Some(meet) {
                    c.note(|| format!("block {bi}: {} is not the meet of {} and {}", l(meet), l(p), l(q)));
                }
                let join = b.element(m1 | m2);
                if o.lub(p, q) != Some(join) {
                    c.note(|| format!("block {bi}: {} is not the join of {} and {}", l(join), l(p), l(q)));
                }
            }
        }
    }
    c.finish("blocks");

    let mut covered = vec![false; n];
    for b in o.blocks() {
        for &e in &b.elements {
            if e < n {
                covered[e] = true;
            }
        }
    }
    for (p, &cov) in covered.iter().enumerate() {
        if !cov {
            c.note(|| format!("{} lies in no block", l(p)));
        }
    }
    c.finish("coverage");

    if let Representation::Matrix {
        dim, matrices, ..
    } = o.representation()
    {
        let id = Matrix::identity(*dim);
        for (p, m) in matrices.iter().enumerate() {
            if !m.is_symmetric() || !m.is_idempotent() {
                c.note(|| format!("{} is not an orthogonal projector", l(p)));
            }
            if m.trace() != QuadScalar::from_int(o.rank(p) as i64) {
                c.note(|| format!("trace of {} differs from its rank", l(p)));
            }
            if o.ortho(p) < n && matrices[o.ortho(p)] != id.sub(m) {
                c.note(|| format!("{}′ is not 1 − {0}", l(p)));
            }
            for (q, mq) in matrices.iter().enumerate() {
                if o.leq(p, q) != (mq.mul(m) == *m) {
                    c.note(|| format!("order of {} and {} disagrees with q·p = p", l(p), l(q)));
                }
            }
        }
        for (bi, b) in o.blocks().iter().enumerate() {
            let sum = b
                .atoms
                .iter()
                .fold(Matrix::zero(*dim), |acc, &a| acc.add(&matrices[a]));
            if sum != id {
                c.note(|| format!("atoms of block {bi} do not sum to the identity"));
            }
        }
        c.finish("projectors");
    }

    ValidationReport {
        violations: c.violations,
    }
}

#[cfg(test)]
mod tests {
    use super::super::tests::greechie;
    use super::*;

    #[test]
    fn cube_is_valid() {
        assert!(greechie(&[&["a", "b", "c"]]).validate().is_valid());
    }

    #[test]
    fn non_involutive_ortho_is_one_violation() {
        let o = greechie(&[&["a", "b", "c"]]);
        let a = o.find_label("a").unwrap();
        let b = o.find_label("b").unwrap();
        let mut ortho: Vec<usize> = (0..o.len()).map(|p| o.ortho(p)).collect();
        // a′ := b′, so a′′ = b
        ortho[a] = o.ortho(b);
        let bad = FiniteOml::assemble(
            o.representation().clone(),
            o.labels().to_vec(),
            (0..o.len()).map(|p| o.rank(p)).collect(),
            |p, q| o.leq(p, q),
            ortho,
            o.zero(),
            o.one(),
            o.blocks().to_vec(),
        );
        let r = bad.validate();
        assert_eq!(r.violations.len(), 1, "{r:?}");
        assert_eq!(r.violations[0].invariant, "ortho");
    }

    #[test]
    fn missing_coverage_reported() {
        let o = greechie(&[&["a", "b"]]);
        let mut blocks = o.blocks().to_vec();
        blocks.clear();
        let bad = FiniteOml::assemble(
            o.representation().clone(),
            o.labels().to_vec(),
            (0..o.len()).map(|p| o.rank(p)).collect(),
            |p, q| o.leq(p, q),
            (0..o.len()).map(|p| o.ortho(p)).collect(),
            o.zero(),
            o.one(),
            blocks,
        );
        let kinds: Vec<String> = bad
            .validate()
            .violations
            .into_iter()
            .map(|v| v.invariant)
            .collect();
        assert_eq!(kinds, vec!["coverage".to_string()]);
    }
}
