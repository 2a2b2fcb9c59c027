use super::Presheaf;
use crate::bsub::BSubPoset;
use crate::daseinisation::{daseinise_projection, Direction};
use crate::error::{Error, Result};
use crate::oml::{ElemId, FiniteOml};
use crate::poset::NodeId;

/// Stone spectra: the fiber over B is its atom list, and an atom restricts
/// to the unique atom of the smaller algebra above it.
pub fn spectral_presheaf(star: &BSubPoset, o: &FiniteOml) -> Result<Presheaf> {
    let fibers = star
        .nodes()
        .iter()
        .map(|b| b.atoms.iter().map(|&a| o.label(a).to_string()).collect())
        .collect();
    let bad = std::cell::Cell::new(None);
    let p = Presheaf::new(star.poset().clone(), fibers, |lo, hi, x| {
        let atom = star.node(hi).atoms[x];
        let lower = star.node(lo);
        match lower.atom_above(o, atom) {
            Some(a) => lower.atoms.iter().position(|&y| y == a).unwrap(),
            None => {
                bad.set(Some((lo, hi)));
                0
            }
        }
    })?;
    if let Some((lo, hi)) = bad.get() {
        return Err(Error::Internal(format!(
            "no unique atom of {} above an atom of {}",
            star.node(lo).label(o),
            star.node(hi).label(o)
        )));
    }
    Ok(p)
}

/// Elements of each algebra, restricted by outer daseinisation.
pub fn outer_projection_presheaf(star: &BSubPoset, o: &FiniteOml) -> Result<Presheaf> {
    let fibers = star
        .nodes()
        .iter()
        .map(|b| b.elements.iter().map(|&e| o.label(e).to_string()).collect())
        .collect();
    let mut maps = std::collections::HashMap::new();
    for (lo, hi) in star.poset().cover_pairs() {
        let lower = star.node(lo);
        let m = star
            .node(hi)
            .elements
            .iter()
            .map(|&p| {
                let d = daseinise_projection(o, p, lower, Direction::Outer)?;
                Ok(lower.elements.binary_search(&d).expect("result lies in the context"))
            })
            .collect::<Result<Vec<usize>>>()?;
        maps.insert((lo, hi), m);
    }
    Presheaf::new(star.poset().clone(), fibers, |lo, hi, x| maps[&(lo, hi)][x])
}

/// A presheaf of elementary abelian 2-groups: each fiber element is a
/// coordinate vector over ℤ₂ and the group law is coordinatewise addition.
#[derive(Clone, Debug)]
pub struct GroupPresheaf {
    pub presheaf: Presheaf,
    /// `vectors[node][x]` is the coordinate vector of fiber element `x`.
    pub vectors: Vec<Vec<Vec<u8>>>,
    /// The OML atom read off by each coordinate.
    pub coords: Vec<Vec<ElemId>>,
}

impl GroupPresheaf {
    pub fn identity(&self, node: NodeId) -> usize {
        self.vectors[node]
            .iter()
            .position(|v| v.iter().all(|&b| b == 0))
            .expect("zero vector present")
    }

    pub fn add(&self, node: NodeId, x: usize, y: usize) -> usize {
        let sum: Vec<u8> = self.vectors[node][x]
            .iter()
            .zip(&self.vectors[node][y])
            .map(|(a, b)| a ^ b)
            .collect();
        self.vectors[node]
            .iter()
            .position(|v| *v == sum)
            .expect("fiber closed under addition")
    }

    /// Every fiber is a group and every restriction a homomorphism.
    pub fn check_homomorphisms(&self) -> bool {
        let p = &self.presheaf;
        let closed = (0..p.len()).all(|n| {
            (0..p.fiber_size(n)).all(|x| {
                (0..p.fiber_size(n)).all(|y| {
                    let s: Vec<u8> = self.vectors[n][x].iter().zip(&self.vectors[n][y]).map(|(a, b)| a ^ b).collect();
                    self.vectors[n].contains(&s)
                })
            })
        });
        closed
            && p.base().cover_pairs().into_iter().all(|(lo, hi)| {
                (0..p.fiber_size(hi)).all(|x| {
                    (0..p.fiber_size(hi)).all(|y| {
                        p.restrict(lo, hi, self.add(hi, x, y)) == self.add(lo, p.restrict(lo, hi, x), p.restrict(lo, hi, y))
                    })
                })
            })
    }
}

/// ℤ₂ over each 4-element node (read at its atom), the even-parity Klein
/// group over each 8-element node, trivial at the bottom. Restrictions are
/// coordinate projections.
pub fn klein4_presheaf(star: &BSubPoset, o: &FiniteOml) -> Result<GroupPresheaf> {
    let mut vectors = Vec::with_capacity(star.len());
    let mut coords = Vec::with_capacity(star.len());
    for b in star.nodes() {
        match b.height() {
            0 => {
                vectors.push(vec![vec![]]);
                coords.push(vec![]);
            }
            1 => {
                let atoms: Vec<ElemId> = b.atoms.iter().copied().filter(|&a| o.is_atom(a)).collect();
                if atoms.len() != 1 {
                    return Err(Error::KleinUndefined(format!(
                        "{} has {} atoms of the whole structure",
                        b.label(o),
                        atoms.len()
                    )));
                }
                vectors.push(vec![vec![0], vec![1]]);
                coords.push(atoms);
            }
            2 => {
                if !b.atoms.iter().all(|&a| o.is_atom(a)) {
                    return Err(Error::KleinUndefined(format!(
                        "{} is not spanned by three atoms",
                        b.label(o)
                    )));
                }
                vectors.push(vec![vec![0, 0, 0], vec![0, 1, 1], vec![1, 0, 1], vec![1, 1, 0]]);
                coords.push(b.atoms.clone());
            }
            h => {
                return Err(Error::KleinUndefined(format!("node of height {h}")));
            }
        }
    }
    let fibers = vectors
        .iter()
        .map(|vs| {
            vs.iter()
                .map(|v| v.iter().map(|b| b.to_string()).collect::<String>())
                .map(|s| if s.is_empty() { "e".to_string() } else { s })
                .collect()
        })
        .collect();
    let presheaf = Presheaf::new(star.poset().clone(), fibers, |lo, hi, x| {
        let sub: Vec<u8> = coords[lo]
            .iter()
            .map(|a| {
                let i = coords[hi].iter().position(|c| c == a).expect("coordinate present above");
                vectors[hi][x][i]
            })
            .collect();
        vectors[lo].iter().position(|v| *v == sub).unwrap()
    })?;
    Ok(GroupPresheaf {
        presheaf,
        vectors,
        coords,
    })
}
