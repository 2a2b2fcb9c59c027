use std::collections::HashMap;

use fixedbitset::FixedBitSet;
use num_bigint::BigInt;
use num_rational::BigRational;

use super::{Block, ElemId, FiniteOml, Representation};
use crate::error::{Error, Result};
use crate::matrix::{dot, Matrix};
use crate::scalar::{gcd_all, lcm_all, QuadScalar};

/// A line through the origin, stored by its canonical representative.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Ray {
    pub entries: Vec<QuadScalar>,
    pub id: usize,
}

impl Ray {
    pub fn dim(&self) -> usize {
        self.entries.len()
    }
}

/// Canonical representative of the line through `v`: the first nonzero
/// coordinate is positive and all coefficients are coprime integers.
pub fn canonicalize_ray(v: &[QuadScalar]) -> Result<Vec<QuadScalar>> {
    let first = v.iter().find(|x| !x.is_zero()).ok_or(Error::ZeroRay)?;
    let scaled: Vec<QuadScalar> = v.iter().map(|x| x / first).collect();
    let mut dens = Vec::new();
    for x in &scaled {
        let (da, db) = x.denominators();
        dens.push(da);
        dens.push(db);
    }
    let l = lcm_all(&dens);
    let ints: Vec<QuadScalar> = scaled
        .iter()
        .map(|x| x.scale(&BigRational::from_integer(l.clone())))
        .collect();
    let mut nums = Vec::new();
    for x in &ints {
        let (na, nb) = x.numerators();
        nums.push(na);
        nums.push(nb);
    }
    let g = gcd_all(&nums);
    let g = BigRational::new(BigInt::from(1), g);
    Ok(ints.iter().map(|x| x.scale(&g)).collect())
}

/// What to do with a maximal orthogonal set smaller than the dimension.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Undersized {
    /// Fail with an incomplete-context error.
    #[default]
    Reject,
    /// Adjoin the orthocomplement of its span as one extra atom.
    Complete,
    /// Drop it; only full orthogonal bases become blocks.
    Ignore,
}

#[derive(Clone, Debug, Default)]
pub struct BuildOptions {
    pub undersized: Undersized,
}

impl BuildOptions {
    pub fn auto_complete() -> Self {
        BuildOptions {
            undersized: Undersized::Complete,
        }
    }

    pub fn bases_only() -> Self {
        BuildOptions {
            undersized: Undersized::Ignore,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RayFile {
    pub dim: usize,
    pub ring: u32,
    pub rays: Vec<Vec<QuadScalar>>,
}

/// Parses the text ray format: a `dim=<d> ring=<m>` header, then one ray
/// per line with whitespace-separated entries `a` or `a+b*r`. Blank lines
/// and `#` comments are skipped.
pub fn parse_ray_file(text: &str) -> Result<RayFile> {
    let mut lines = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .enumerate()
        .filter(|(_, l)| !l.is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::Parse("empty ray file".into()))?;
    let mut dim = None;
    let mut ring = None;
    for tok in header.split_whitespace() {
        match tok.split_once('=') {
            Some(("dim", v)) => dim = v.parse::<usize>().ok(),
            Some(("ring", v)) => ring = v.parse::<u32>().ok(),
            _ => return Err(Error::Parse(format!("bad header token {tok:?}"))),
        }
    }
    let dim = dim.ok_or_else(|| Error::Parse("header lacks dim=<d>".into()))?;
    let ring = ring.unwrap_or(0);
    let mut rays = Vec::new();
    for (lineno, line) in lines {
        if line.contains('i') {
            return Err(Error::Parse(format!(
                "line {}: complex entries are not supported",
                lineno + 1
            )));
        }
        let entries = line
            .split_whitespace()
            .map(|t| QuadScalar::parse(t, ring))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
        if entries.len() != dim {
            return Err(Error::RayLength {
                expected: dim,
                found: entries.len(),
            });
        }
        rays.push(entries);
    }
    Ok(RayFile { dim, ring, rays })
}

/// Bron–Kerbosch with pivoting; cliques come out sorted.
fn maximal_cliques(adj: &[FixedBitSet]) -> Vec<Vec<usize>> {
    fn rec(
        adj: &[FixedBitSet],
        r: &mut Vec<usize>,
        mut p: FixedBitSet,
        mut x: FixedBitSet,
        out: &mut Vec<Vec<usize>>,
    ) {
        if p.count_ones(..) == 0 {
            if x.count_ones(..) == 0 {
                let mut c = r.clone();
                c.sort_unstable();
                out.push(c);
            }
            return;
        }
        let mut px = p.clone();
        px.union_with(&x);
        let pivot = px
            .ones()
            .max_by_key(|&u| {
                let mut t = p.clone();
                t.intersect_with(&adj[u]);
                t.count_ones(..)
            })
            .unwrap();
        let mut cand = p.clone();
        cand.difference_with(&adj[pivot]);
        for v in cand.ones().collect::<Vec<_>>() {
            r.push(v);
            let mut np = p.clone();
            np.intersect_with(&adj[v]);
            let mut nx = x.clone();
            nx.intersect_with(&adj[v]);
            rec(adj, r, np, nx, out);
            r.pop();
            p.set(v, false);
            x.insert(v);
        }
    }
    let n = adj.len();
    let mut p = FixedBitSet::with_capacity(n);
    p.insert_range(..);
    let mut out = Vec::new();
    rec(adj, &mut Vec::new(), p, FixedBitSet::with_capacity(n), &mut out);
    out.sort();
    out
}

struct AtomData {
    label: String,
    matrix: Matrix,
    rank: usize,
}

/// Builds the orthomodular poset generated by the maximal orthogonal sets
/// of a ray list.
pub fn build_oml_from_rays(
    input: &[Vec<QuadScalar>],
    dim: usize,
    ring: u32,
    opts: &BuildOptions,
) -> Result<FiniteOml> {
    // canonical, deduplicated rays in input order
    let mut rays: Vec<Ray> = Vec::new();
    let mut seen: HashMap<Vec<QuadScalar>, usize> = HashMap::new();
    for v in input {
        if v.len() != dim {
            return Err(Error::RayLength {
                expected: dim,
                found: v.len(),
            });
        }
        if let Some(bad) = v.iter().find(|x| x.ring() != 0 && x.ring() != ring) {
            return Err(Error::Parse(format!(
                "entry {bad} lies outside the ring Q(√{ring})"
            )));
        }
        let c = canonicalize_ray(v)?;
        if !seen.contains_key(&c) {
            seen.insert(c.clone(), rays.len());
            let id = rays.len();
            rays.push(Ray { entries: c, id });
        }
    }
    let n = rays.len();
    let mut adj = vec![FixedBitSet::with_capacity(n); n];
    for i in 0..n {
        for j in i + 1..n {
            if dot(&rays[i].entries, &rays[j].entries).is_zero() {
                adj[i].insert(j);
                adj[j].insert(i);
            }
        }
    }
    let cliques = maximal_cliques(&adj);

    let mut atoms: Vec<AtomData> = rays
        .iter()
        .map(|r| AtomData {
            label: format!("v{}", r.id),
            matrix: Matrix::rank_one_projector(&r.entries),
            rank: 1,
        })
        .collect();
    let mut atom_index: HashMap<Matrix, usize> = atoms
        .iter()
        .enumerate()
        .map(|(i, a)| (a.matrix.clone(), i))
        .collect();
    let mut completions = 0;
    let mut block_atoms: Vec<Vec<usize>> = Vec::new();
    for clique in &cliques {
        if clique.len() > dim {
            return Err(Error::Internal(format!(
                "orthogonal set of size {} in dimension {dim}",
                clique.len()
            )));
        }
        let mut members = clique.clone();
        if clique.len() < dim {
            if opts.undersized == Undersized::Ignore {
                continue;
            }
            if opts.undersized == Undersized::Reject {
                return Err(Error::IncompleteContext {
                    clique: clique.iter().map(|&i| atoms[i].label.clone()).collect(),
                    size: clique.len(),
                    dim,
                });
            }
            let span = clique
                .iter()
                .fold(Matrix::zero(dim), |acc, &i| acc.add(&atoms[i].matrix));
            let comp = Matrix::identity(dim).sub(&span);
            let idx = match atom_index.get(&comp) {
                Some(&i) => i,
                None => {
                    let i = atoms.len();
                    atoms.push(AtomData {
                        label: format!("c{completions}"),
                        matrix: comp.clone(),
                        rank: dim - clique.len(),
                    });
                    completions += 1;
                    atom_index.insert(comp, i);
                    i
                }
            };
            members.push(idx);
        }
        block_atoms.push(members);
    }
    if block_atoms.is_empty() {
        return Err(Error::NoContext(dim));
    }

    // elements: sub-sums inside each block, deduplicated by matrix
    struct Proto {
        matrix: Matrix,
        rank: usize,
        label: (usize, String),
    }
    let mut protos: Vec<Proto> = Vec::new();
    let mut by_matrix: HashMap<Matrix, usize> = HashMap::new();
    let mut block_protos: Vec<Vec<usize>> = Vec::new();
    for members in &block_atoms {
        let k = members.len();
        let mut elems = Vec::with_capacity(1 << k);
        for mask in 0..(1usize << k) {
            let chosen: Vec<usize> = (0..k)
                .filter(|b| mask >> b & 1 == 1)
                .map(|b| members[b])
                .collect();
            let matrix = chosen
                .iter()
                .fold(Matrix::zero(dim), |acc, &a| acc.add(&atoms[a].matrix));
            let rank = chosen.iter().map(|&a| atoms[a].rank).sum();
            let mut names: Vec<&str> = chosen.iter().map(|&a| atoms[a].label.as_str()).collect();
            names.sort_by_key(|x| label_key(x));
            let label = match (mask, chosen.len() == k) {
                (0, _) => "0".to_string(),
                (_, true) => "1".to_string(),
                _ => names.join("+"),
            };
            let cand = (chosen.len(), label);
            let id = match by_matrix.get(&matrix) {
                Some(&id) => {
                    if label_rank(&cand) < label_rank(&protos[id].label) {
                        protos[id].label = cand;
                    }
                    id
                }
                None => {
                    let id = protos.len();
                    by_matrix.insert(matrix.clone(), id);
                    protos.push(Proto {
                        matrix,
                        rank,
                        label: cand,
                    });
                    id
                }
            };
            elems.push(id);
        }
        block_protos.push(elems);
    }

    // deterministic order: (rank, lexicographic entries)
    let mut order: Vec<usize> = (0..protos.len()).collect();
    order.sort_by(|&a, &b| {
        protos[a]
            .rank
            .cmp(&protos[b].rank)
            .then_with(|| protos[a].matrix.lex_cmp(&protos[b].matrix))
    });
    let mut new_id = vec![0; protos.len()];
    for (i, &p) in order.iter().enumerate() {
        new_id[p] = i;
    }
    let matrices: Vec<Matrix> = order.iter().map(|&p| protos[p].matrix.clone()).collect();
    let ranks: Vec<usize> = order.iter().map(|&p| protos[p].rank).collect();
    let labels: Vec<String> = order.iter().map(|&p| protos[p].label.1.clone()).collect();
    let ne = matrices.len();

    let spans: Vec<Vec<Vec<QuadScalar>>> = matrices.iter().map(|m| m.columns()).collect();
    let leq = |p: ElemId, q: ElemId| -> bool {
        if p == q {
            return true;
        }
        if ranks[p] >= ranks[q] {
            return false;
        }
        spans[p].iter().all(|v| matrices[q].apply(v) == *v)
    };
    let mut leq_table = vec![vec![false; ne]; ne];
    for (p, row) in leq_table.iter_mut().enumerate() {
        for (q, cell) in row.iter_mut().enumerate() {
            *cell = leq(p, q);
        }
    }
    let identity = Matrix::identity(dim);
    let by_matrix_final: HashMap<&Matrix, ElemId> =
        matrices.iter().enumerate().map(|(i, m)| (m, i)).collect();
    let mut ortho = Vec::with_capacity(ne);
    for m in &matrices {
        let c = identity.sub(m);
        let id = *by_matrix_final
            .get(&c)
            .ok_or_else(|| Error::Internal("orthocomplement missing".into()))?;
        ortho.push(id);
    }
    let zero = *by_matrix_final.get(&Matrix::zero(dim)).expect("zero element");
    let one = *by_matrix_final.get(&identity).expect("unit element");

    let blocks: Vec<Block> = block_atoms
        .iter()
        .zip(&block_protos)
        .map(|(members, elems)| Block {
            atoms: (0..members.len()).map(|b| new_id[elems[1 << b]]).collect(),
            elements: elems.iter().map(|&p| new_id[p]).collect(),
        })
        .collect();

    let oml = FiniteOml::assemble(
        Representation::Matrix {
            dim,
            ring,
            matrices,
            rays,
            completions,
        },
        labels,
        ranks,
        |p, q| leq_table[p][q],
        ortho,
        zero,
        one,
        blocks,
    );
    let report = oml.validate();
    if !report.is_valid() {
        return Err(Error::InvalidOml(report.violations));
    }
    Ok(oml)
}

/// Sort key for atom labels so `v10` follows `v9`.
fn label_key(s: &str) -> (char, u64) {
    let mut chars = s.chars();
    let head = chars.next().unwrap_or(' ');
    (head, chars.as_str().parse::<u64>().unwrap_or(0))
}

fn label_rank(l: &(usize, String)) -> (usize, Vec<(char, u64)>) {
    (l.0, l.1.split('+').map(label_key).collect())
}

/// Integer vector convenience for tests and bundled data.
pub fn int_ray(xs: &[i64]) -> Vec<QuadScalar> {
    xs.iter().map(|&x| QuadScalar::from_int(x)).collect()
}

#[cfg(test)]
pub(crate) fn scalar_to_i64(x: &QuadScalar) -> Option<i64> {
    use num_traits::ToPrimitive;
    let r = x.to_rational()?;
    if r.is_integer() {
        r.numer().to_i64()
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn canon(xs: &[i64]) -> Vec<i64> {
        canonicalize_ray(&int_ray(xs))
            .unwrap()
            .iter()
            .map(|x| scalar_to_i64(x).unwrap())
            .collect()
    }

    #[test]
    fn canonical_forms() {
        assert_eq!(canon(&[0, -2, 0]), vec![0, 1, 0]);
        assert_eq!(canon(&[1, 1, 0]), vec![1, 1, 0]);
        assert_eq!(canon(&[2, -2, 2]), vec![1, -1, 1]);
        assert_eq!(canon(&[-3, 6, 0]), vec![1, -2, 0]);
    }

    #[test]
    fn zero_ray_rejected() {
        assert!(matches!(
            canonicalize_ray(&int_ray(&[0, 0, 0])),
            Err(Error::ZeroRay)
        ));
    }

    #[test]
    fn quadratic_rays_collide_when_proportional() {
        let r = QuadScalar::sqrt(2).unwrap();
        let v = vec![r.clone(), QuadScalar::one(), QuadScalar::zero()];
        let w: Vec<QuadScalar> = v.iter().map(|x| x * &r).collect();
        assert_eq!(canonicalize_ray(&v).unwrap(), canonicalize_ray(&w).unwrap());
    }

    #[test]
    fn ray_file_parsing() {
        let f = parse_ray_file("dim=3 ring=2\n# comment\n1 0 0\n0 1 0+1*r\n").unwrap();
        assert_eq!(f.dim, 3);
        assert_eq!(f.ring, 2);
        assert_eq!(f.rays.len(), 2);
        assert_eq!(f.rays[1][2], QuadScalar::sqrt(2).unwrap());
        assert!(parse_ray_file("dim=3\n1 0\n").is_err());
        assert!(parse_ray_file("dim=2\n1 1i\n").is_err());
    }

    #[test]
    fn basis3_is_boolean_cube() {
        let rays = vec![int_ray(&[1, 0, 0]), int_ray(&[0, 1, 0]), int_ray(&[0, 0, 1])];
        let o = build_oml_from_rays(&rays, 3, 0, &BuildOptions::default()).unwrap();
        assert_eq!(o.len(), 8);
        assert_eq!(o.blocks().len(), 1);
        assert!(o.validate().is_valid());
    }

    #[test]
    fn incomplete_context_reported() {
        let rays = vec![int_ray(&[1, 0, 0]), int_ray(&[0, 1, 0]), int_ray(&[1, 1, 1])];
        match build_oml_from_rays(&rays, 3, 0, &BuildOptions::default()) {
            Err(Error::IncompleteContext { size, .. }) => assert!(size < 3),
            other => panic!("expected incomplete context, got {other:?}"),
        }
    }

    #[test]
    fn auto_complete_adjoins_complement() {
        let rays = vec![int_ray(&[1, 0, 0]), int_ray(&[0, 1, 0])];
        let o = build_oml_from_rays(
            &rays,
            3,
            0,
            &BuildOptions::auto_complete(),
        )
        .unwrap();
        assert_eq!(o.blocks().len(), 1);
        assert_eq!(o.blocks()[0].atoms.len(), 3);
        assert!(o.labels().iter().any(|l| l == "c0"));
    }

    #[test]
    fn bases_only_drops_partial_sets() {
        let rays = vec![
            int_ray(&[1, 0, 0]),
            int_ray(&[0, 1, 0]),
            int_ray(&[0, 0, 1]),
            int_ray(&[1, 1, 1]),
        ];
        let o = build_oml_from_rays(&rays, 3, 0, &BuildOptions::bases_only()).unwrap();
        assert_eq!(o.blocks().len(), 1);
        assert!(o.find_label("v3").is_none());
    }

    #[test]
    fn order_matches_range_inclusion() {
        let rays = vec![int_ray(&[1, 0, 0]), int_ray(&[0, 1, 1]), int_ray(&[0, 1, -1])];
        let o = build_oml_from_rays(&rays, 3, 0, &BuildOptions::default()).unwrap();
        for p in 0..o.len() {
            for q in 0..o.len() {
                let mp = o.matrix(p).unwrap();
                let mq = o.matrix(q).unwrap();
                assert_eq!(o.leq(p, q), mq.mul(mp) == *mp);
            }
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn canonicalization_is_idempotent_and_scale_invariant(
                v in proptest::collection::vec(-6i64..6, 3),
                k in prop_oneof![-5i64..-1, 1i64..5],
            ) {
                prop_assume!(v.iter().any(|&x| x != 0));
                let c = canonicalize_ray(&int_ray(&v)).unwrap();
                prop_assert_eq!(canonicalize_ray(&c).unwrap(), c.clone());
                let scaled: Vec<i64> = v.iter().map(|x| x * k).collect();
                prop_assert_eq!(canonicalize_ray(&int_ray(&scaled)).unwrap(), c);
            }
        }
    }
}
