//! Approximating projections and pre-diagonalized operators inside a
//! Boolean context, from above (outer) and below (inner).

use num_rational::BigRational;
use serde_json::json;

use crate::bsub::{BSubPoset, BooleanSubalg};
use crate::error::{Error, Result};
use crate::oml::{ElemId, FiniteOml};
use crate::poset::NodeId;
use crate::presheaf::{check_naturality, spectral_presheaf, NatTrans, NaturalityReport, Presheaf, ValueFiber};
use crate::scalar::fmt_rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Outer,
    Inner,
}

/// Outer: the least element of `b` above `p`. Inner: the greatest below.
pub fn daseinise_projection(o: &FiniteOml, p: ElemId, b: &BooleanSubalg, dir: Direction) -> Result<ElemId> {
    let bounds: Vec<ElemId> = b
        .elements
        .iter()
        .copied()
        .filter(|&x| match dir {
            Direction::Outer => o.leq(p, x),
            Direction::Inner => o.leq(x, p),
        })
        .collect();
    bounds
        .iter()
        .copied()
        .find(|&m| {
            bounds.iter().all(|&x| match dir {
                Direction::Outer => o.leq(m, x),
                Direction::Inner => o.leq(x, m),
            })
        })
        .ok_or_else(|| Error::DaseinisationUndefined {
            element: o.label(p).to_string(),
            context: b.label(o),
        })
}

/// `Σ λᵢ Pᵢ` over pairwise orthogonal projections joining to one, with
/// strictly increasing coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SelfAdjointOp {
    terms: Vec<(BigRational, ElemId)>,
}

impl SelfAdjointOp {
    /// Validates the resolution, drops zero projections and merges equal
    /// coefficients.
    pub fn new(o: &FiniteOml, terms: Vec<(BigRational, ElemId)>) -> Result<SelfAdjointOp> {
        let mut terms: Vec<(BigRational, ElemId)> = terms.into_iter().filter(|t| t.1 != o.zero()).collect();
        if terms.is_empty() {
            return Err(Error::InvalidOperator("no terms".into()));
        }
        for i in 0..terms.len() {
            if terms[i].1 >= o.len() {
                return Err(Error::InvalidOperator(format!("unknown element {}", terms[i].1)));
            }
            for j in i + 1..terms.len() {
                if !o.orthogonal(terms[i].1, terms[j].1) {
                    return Err(Error::InvalidOperator(format!(
                        "{} and {} are not orthogonal",
                        o.label(terms[i].1),
                        o.label(terms[j].1)
                    )));
                }
            }
        }
        terms.sort();
        let mut merged: Vec<(BigRational, ElemId)> = Vec::new();
        for (c, p) in terms {
            match merged.last_mut() {
                Some((lc, lp)) if *lc == c => {
                    *lp = o.join_orth(*lp, p).ok_or_else(|| {
                        Error::InvalidOperator(format!("{} ∨ {} does not exist", o.label(*lp), o.label(p)))
                    })?;
                }
                _ => merged.push((c, p)),
            }
        }
        let op = SelfAdjointOp { terms: merged };
        op.spectral_family(o)?;
        Ok(op)
    }

    pub fn constant(o: &FiniteOml, c: BigRational) -> SelfAdjointOp {
        SelfAdjointOp {
            terms: vec![(c, o.one())],
        }
    }

    pub fn terms(&self) -> &[(BigRational, ElemId)] {
        &self.terms
    }

    pub fn min_coefficient(&self) -> &BigRational {
        &self.terms[0].0
    }

    pub fn max_coefficient(&self) -> &BigRational {
        &self.terms[self.terms.len() - 1].0
    }

    /// Cumulative projections `E_λ` at each coefficient.
    pub fn spectral_family(&self, o: &FiniteOml) -> Result<SpectralFamily> {
        let mut steps = Vec::with_capacity(self.terms.len());
        let mut acc = o.zero();
        for (c, p) in &self.terms {
            acc = o.join_orth(acc, *p).ok_or_else(|| {
                Error::InvalidOperator(format!("partial sum with {} does not exist", o.label(*p)))
            })?;
            steps.push((c.clone(), acc));
        }
        if acc != o.one() {
            return Err(Error::InvalidOperator("projections do not join to one".into()));
        }
        Ok(SpectralFamily { steps })
    }

    pub fn to_json(&self, o: &FiniteOml) -> serde_json::Value {
        json!(self
            .terms
            .iter()
            .map(|(c, p)| json!({"coeff": fmt_rational(c), "projection": o.label(*p)}))
            .collect::<Vec<_>>())
    }

    pub fn display(&self, o: &FiniteOml) -> String {
        self.terms
            .iter()
            .map(|(c, p)| format!("{}·{}", fmt_rational(c), o.label(*p)))
            .collect::<Vec<_>>()
            .join(" + ")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpectralFamily {
    pub steps: Vec<(BigRational, ElemId)>,
}

impl SpectralFamily {
    /// `E_λ`: the last step at or below `λ`, zero before the first.
    pub fn at(&self, o: &FiniteOml, lambda: &BigRational) -> ElemId {
        self.steps
            .iter()
            .take_while(|(c, _)| c <= lambda)
            .last()
            .map_or(o.zero(), |s| s.1)
    }

    pub fn points(&self) -> impl Iterator<Item = &BigRational> {
        self.steps.iter().map(|s| &s.0)
    }
}

fn union_grid(a: &SpectralFamily, b: &SpectralFamily) -> Vec<BigRational> {
    let mut g: Vec<BigRational> = a.points().chain(b.points()).cloned().collect();
    g.sort();
    g.dedup();
    g
}

/// `A ⪯ A′` iff `E′_λ ≤ E_λ` for every λ.
pub fn spectral_order_leq(o: &FiniteOml, a: &SelfAdjointOp, b: &SelfAdjointOp) -> Result<bool> {
    let fa = a.spectral_family(o)?;
    let fb = b.spectral_family(o)?;
    Ok(union_grid(&fa, &fb)
        .iter()
        .all(|l| o.leq(fb.at(o, l), fa.at(o, l))))
}

/// Coefficient per atom of `b` of the outer or inner daseinisation.
pub fn daseinised_coefficients(
    o: &FiniteOml,
    a: &SelfAdjointOp,
    b: &BooleanSubalg,
    dir: Direction,
) -> Result<Vec<(ElemId, BigRational)>> {
    let fam = a.spectral_family(o)?;
    let mut out = Vec::with_capacity(b.atoms.len());
    for &atom in &b.atoms {
        let mut coeff = None;
        for (l, e) in &fam.steps {
            let dominates = match dir {
                Direction::Outer => o.leq(atom, *e),
                Direction::Inner => o.leq(atom, daseinise_projection(o, *e, b, Direction::Outer)?),
            };
            if dominates {
                coeff = Some(l.clone());
                break;
            }
        }
        let c = coeff.ok_or_else(|| Error::Internal("last spectral step is not one".into()))?;
        out.push((atom, c));
    }
    Ok(out)
}

fn from_coefficients(o: &FiniteOml, coeffs: Vec<(ElemId, BigRational)>) -> Result<SelfAdjointOp> {
    SelfAdjointOp::new(o, coeffs.into_iter().map(|(p, c)| (c, p)).collect())
}

/// The least operator over `b` above `a` in the spectral order.
pub fn outer_daseinise_operator(o: &FiniteOml, a: &SelfAdjointOp, b: &BooleanSubalg) -> Result<SelfAdjointOp> {
    from_coefficients(o, daseinised_coefficients(o, a, b, Direction::Outer)?)
}

/// The greatest operator over `b` below `a` in the spectral order.
pub fn inner_daseinise_operator(o: &FiniteOml, a: &SelfAdjointOp, b: &BooleanSubalg) -> Result<SelfAdjointOp> {
    from_coefficients(o, daseinised_coefficients(o, a, b, Direction::Inner)?)
}

/// Lowering any coefficient of the outer daseinisation to the next smaller
/// step value of `a` must break `a ⪯ ·`.
pub fn outer_minimality_holds(o: &FiniteOml, a: &SelfAdjointOp, b: &BooleanSubalg) -> Result<bool> {
    let coeffs = daseinised_coefficients(o, a, b, Direction::Outer)?;
    let fam = a.spectral_family(o)?;
    let current = from_coefficients(o, coeffs.clone())?;
    if !spectral_order_leq(o, a, &current)? {
        return Ok(false);
    }
    for i in 0..coeffs.len() {
        let lower = fam.points().filter(|l| **l < coeffs[i].1).last().cloned();
        let Some(lower) = lower else { continue };
        let mut c = coeffs.clone();
        c[i].1 = lower;
        if spectral_order_leq(o, a, &from_coefficients(o, c)?)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `B ↦ δ^o(A)_B` over a star poset, with its section property verified.
#[derive(Clone, Debug)]
pub struct OuterSection {
    pub values: Vec<SelfAdjointOp>,
}

pub fn outer_global_section(o: &FiniteOml, a: &SelfAdjointOp, star: &BSubPoset) -> Result<OuterSection> {
    if !o.is_matrix_mode() {
        return Err(Error::NeedsMatrixMode);
    }
    let values = star
        .nodes()
        .iter()
        .map(|b| outer_daseinise_operator(o, a, b))
        .collect::<Result<Vec<_>>>()?;
    for (lo, hi) in star.poset().cover_pairs() {
        let again = outer_daseinise_operator(o, &values[hi], star.node(lo))?;
        if again != values[lo] {
            return Err(Error::Internal(format!(
                "outer section breaks on {} < {}",
                star.node(lo).label(o),
                star.node(hi).label(o)
            )));
        }
    }
    Ok(OuterSection { values })
}

/// A height-1 context where the outer daseinisations of two operators
/// differ.
#[derive(Clone, Debug)]
pub struct Separation {
    pub context: BooleanSubalg,
    pub lambda0: BigRational,
    pub first: SelfAdjointOp,
    pub second: SelfAdjointOp,
}

pub fn separating_context(o: &FiniteOml, a: &SelfAdjointOp, b: &SelfAdjointOp) -> Result<Separation> {
    let fa = a.spectral_family(o)?;
    let fb = b.spectral_family(o)?;
    let grid = union_grid(&fa, &fb);
    let lambda0 = grid
        .iter()
        .find(|l| fa.at(o, l) != fb.at(o, l))
        .cloned()
        .ok_or(Error::OperatorsEqual)?;
    let (e, e2) = (fa.at(o, &lambda0), fb.at(o, &lambda0));
    // a step projection not below the other family's step separates at its
    // own 4-element context; try that one first
    let mut candidates = Vec::new();
    if !o.leq(e, e2) {
        candidates.push(e);
    }
    if !o.leq(e2, e) {
        candidates.push(e2);
    }
    candidates.push(e);
    candidates.push(e2);
    // disjoint spectra: every context separates
    candidates.extend(0..o.len());
    for q in candidates {
        if q == o.zero() || q == o.one() {
            continue;
        }
        let qc = o.ortho(q);
        let mut elements = vec![o.zero(), q, qc, o.one()];
        elements.sort_unstable();
        let mut atoms = vec![q, qc];
        atoms.sort_unstable();
        let ctx = BooleanSubalg { atoms, elements };
        let da = outer_daseinise_operator(o, a, &ctx)?;
        let db = outer_daseinise_operator(o, b, &ctx)?;
        if da != db {
            return Ok(Separation {
                context: ctx,
                lambda0,
                first: da,
                second: db,
            });
        }
    }
    Err(Error::Internal("no separating context found".into()))
}

/// Components of `δ̌(A)`: at node B, each Stone point (atom of B) maps to
/// the inner and outer coefficient functions on `↓B`.
pub fn delta_transformation(o: &FiniteOml, a: &SelfAdjointOp, star: &BSubPoset) -> Result<(Presheaf, NatTrans<ValueFiber>)> {
    if !o.is_matrix_mode() {
        return Err(Error::NeedsMatrixMode);
    }
    let sigma = spectral_presheaf(star, o)?;
    let inner: Vec<Vec<(ElemId, BigRational)>> = star
        .nodes()
        .iter()
        .map(|b| daseinised_coefficients(o, a, b, Direction::Inner))
        .collect::<Result<_>>()?;
    let outer: Vec<Vec<(ElemId, BigRational)>> = star
        .nodes()
        .iter()
        .map(|b| daseinised_coefficients(o, a, b, Direction::Outer))
        .collect::<Result<_>>()?;
    let coeff_at = |table: &Vec<Vec<(ElemId, BigRational)>>, node: NodeId, x: ElemId| -> Result<BigRational> {
        let above = star
            .node(node)
            .atom_above(o, x)
            .ok_or_else(|| Error::Internal("no atom above a Stone point".into()))?;
        Ok(table[node].iter().find(|(p, _)| *p == above).expect("atom listed").1.clone())
    };
    let mut comps = Vec::with_capacity(star.len());
    for b in 0..star.len() {
        let below: Vec<NodeId> = star.poset().downset(b).ones().collect();
        let mut fiber = Vec::new();
        for &atom in &star.node(b).atoms {
            let alpha = below
                .iter()
                .map(|&n| Ok((n, coeff_at(&inner, n, atom)?)))
                .collect::<Result<Vec<_>>>()?;
            let beta = below
                .iter()
                .map(|&n| Ok((n, coeff_at(&outer, n, atom)?)))
                .collect::<Result<Vec<_>>>()?;
            fiber.push(ValueFiber { alpha, beta });
        }
        comps.push(fiber);
    }
    Ok((sigma, NatTrans { comps }))
}

#[derive(Clone, Debug)]
pub struct DeltaReport {
    pub naturality: NaturalityReport,
    /// Broken value-pair conditions as `(node, point, message)`.
    pub value_failures: Vec<(NodeId, usize, String)>,
}

impl DeltaReport {
    pub fn passed(&self) -> bool {
        self.naturality.passed() && self.value_failures.is_empty()
    }
}

/// Builds `δ̌(A)` and checks naturality and every value pair.
pub fn delta_check(o: &FiniteOml, a: &SelfAdjointOp, star: &BSubPoset) -> Result<(NatTrans<ValueFiber>, DeltaReport)> {
    let (sigma, t) = delta_transformation(o, a, star)?;
    let base = star.poset();
    let naturality = check_naturality(&sigma, &t, |lo, _, v: &ValueFiber| v.restrict(base, lo));
    let mut value_failures = Vec::new();
    for (node, fiber) in t.comps.iter().enumerate() {
        for (x, v) in fiber.iter().enumerate() {
            for msg in v.check(base) {
                value_failures.push((node, x, msg));
            }
        }
    }
    Ok((
        t,
        DeltaReport {
            naturality,
            value_failures,
        },
    ))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::bsub::enumerate_bsub_star;
    use crate::oml::{build_oml_from_rays, int_ray, BuildOptions};

    pub(crate) fn q(n: i64) -> BigRational {
        BigRational::from_integer(n.into())
    }

    pub(crate) fn basis(d: usize) -> FiniteOml {
        let rays: Vec<_> = (0..d)
            .map(|i| int_ray(&(0..d).map(|j| (i == j) as i64).collect::<Vec<_>>()))
            .collect();
        build_oml_from_rays(&rays, d, 0, &BuildOptions::default()).unwrap()
    }

    pub(crate) fn diag(o: &FiniteOml, cs: &[i64]) -> SelfAdjointOp {
        let terms = cs
            .iter()
            .enumerate()
            .map(|(i, &c)| (q(c), o.find_label(&format!("v{i}")).unwrap()))
            .collect();
        SelfAdjointOp::new(o, terms).unwrap()
    }

    fn ctx(o: &FiniteOml, atoms: &[&str]) -> BooleanSubalg {
        let star = enumerate_bsub_star(o);
        let ids: Vec<ElemId> = atoms.iter().map(|a| o.find_label(a).unwrap()).collect();
        star.node(star.find(&ids).unwrap()).clone()
    }

    #[test]
    fn projection_daseinisation_on_a_point() {
        let rays = vec![int_ray(&[1, 0, 0]), int_ray(&[0, 1, 0]), int_ray(&[0, 0, 1]), int_ray(&[1, 1, 0]), int_ray(&[1, -1, 0])];
        let o = build_oml_from_rays(&rays, 3, 0, &BuildOptions::default()).unwrap();
        let star = enumerate_bsub_star(&o);
        let e1 = o.find_label("v0").unwrap();
        let b = star.node(star.point_of(&o, e1).unwrap());
        let p = o.find_label("v3").unwrap();
        assert_eq!(daseinise_projection(&o, p, b, Direction::Outer).unwrap(), o.one());
        assert_eq!(daseinise_projection(&o, p, b, Direction::Inner).unwrap(), o.zero());
        for node in star.nodes() {
            for &x in &node.elements {
                assert_eq!(daseinise_projection(&o, x, node, Direction::Outer).unwrap(), x);
            }
            assert_eq!(daseinise_projection(&o, o.one(), node, Direction::Inner).unwrap(), o.one());
            assert_eq!(daseinise_projection(&o, o.zero(), node, Direction::Outer).unwrap(), o.zero());
        }
    }

    #[test]
    fn spectral_order_examples() {
        let o = basis(3);
        let a = diag(&o, &[1, 2, 3]);
        assert!(spectral_order_leq(&o, &a, &a).unwrap());
        assert!(spectral_order_leq(&o, &a, &diag(&o, &[1, 3, 3])).unwrap());
        assert!(!spectral_order_leq(&o, &a, &diag(&o, &[0, 3, 3])).unwrap());
    }

    #[test]
    fn outer_operator_example() {
        let o = basis(3);
        let a = diag(&o, &[1, 2, 3]);
        let b = ctx(&o, &["v0", "v1+v2"]);
        let d = outer_daseinise_operator(&o, &a, &b).unwrap();
        let e23 = o.find_label("v1+v2").unwrap();
        let e1 = o.find_label("v0").unwrap();
        assert_eq!(d.terms(), &[(q(1), e1), (q(3), e23)]);
        let lowered = SelfAdjointOp::new(&o, vec![(q(1), e1), (q(2), e23)]).unwrap();
        assert!(!spectral_order_leq(&o, &a, &lowered).unwrap());
        assert!(outer_minimality_holds(&o, &a, &b).unwrap());
        let i = inner_daseinise_operator(&o, &a, &b).unwrap();
        assert_eq!(i.terms(), &[(q(1), e1), (q(2), e23)]);
    }

    #[test]
    fn operator_already_in_context_is_fixed() {
        let o = basis(3);
        let a = diag(&o, &[1, 2, 3]);
        let b = ctx(&o, &["v0", "v1", "v2"]);
        assert_eq!(outer_daseinise_operator(&o, &a, &b).unwrap(), a);
        assert_eq!(inner_daseinise_operator(&o, &a, &b).unwrap(), a);
    }

    #[test]
    fn outer_section_bottom_is_max() {
        let o = basis(3);
        let star = enumerate_bsub_star(&o);
        let s = outer_global_section(&o, &diag(&o, &[1, 2, 3]), &star).unwrap();
        assert_eq!(s.values[star.bottom()], SelfAdjointOp::constant(&o, q(3)));
        let c = SelfAdjointOp::constant(&o, q(5));
        let s = outer_global_section(&o, &c, &star).unwrap();
        assert!(s.values.iter().all(|v| *v == c));
    }

    #[test]
    fn separation_examples() {
        let o = basis(3);
        let star = enumerate_bsub_star(&o);
        let pairs = [([1, 2, 3], [1, 2, 4]), ([0, 1, 1], [1, 0, 1]), ([1, 2, 3], [2, 3, 4]), ([0, 1, 1], [0, 0, 1])];
        for (x, y) in pairs {
            let (a, b) = (diag(&o, &x), diag(&o, &y));
            let s = separating_context(&o, &a, &b).unwrap();
            assert_eq!(s.context.height(), 1);
            assert!(star.find(&s.context.atoms).is_some());
            assert_ne!(
                outer_daseinise_operator(&o, &a, &s.context).unwrap(),
                outer_daseinise_operator(&o, &b, &s.context).unwrap()
            );
        }
        let a = diag(&o, &[0, 1, 1]);
        let s = separating_context(&o, &a, &diag(&o, &[1, 0, 1])).unwrap();
        let e1 = o.find_label("v0").unwrap();
        assert!(s.context.contains(e1));
        assert!(matches!(separating_context(&o, &a, &a), Err(Error::OperatorsEqual)));
    }

    #[test]
    fn delta_example_values() {
        let o = basis(3);
        let star = enumerate_bsub_star(&o);
        let (t, report) = delta_check(&o, &diag(&o, &[1, 2, 3]), &star).unwrap();
        assert!(report.passed(), "{report:?}");
        let top = star.lines()[0];
        let e2 = o.find_label("v1").unwrap();
        let x = star.node(top).atoms.iter().position(|&a| a == e2).unwrap();
        let v = &t.comps[top][x];
        let beta = |n: NodeId| v.beta.iter().find(|e| e.0 == n).unwrap().1.clone();
        assert_eq!(beta(top), q(2));
        assert_eq!(beta(star.bottom()), q(3));
    }

    #[test]
    fn constant_delta_is_constant_pair() {
        let o = basis(3);
        let star = enumerate_bsub_star(&o);
        let (t, report) = delta_check(&o, &SelfAdjointOp::constant(&o, q(7)), &star).unwrap();
        assert!(report.passed());
        for fiber in &t.comps {
            for v in fiber {
                assert!(v.alpha.iter().chain(&v.beta).all(|e| e.1 == q(7)));
            }
        }
    }

    #[test]
    fn invalid_operators_rejected() {
        let o = basis(3);
        let e1 = o.find_label("v0").unwrap();
        let e12 = o.find_label("v0+v1").unwrap();
        assert!(SelfAdjointOp::new(&o, vec![(q(1), e1), (q(2), e12)]).is_err());
        assert!(SelfAdjointOp::new(&o, vec![(q(1), e1)]).is_err());
    }
}
