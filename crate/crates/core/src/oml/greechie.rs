use std::collections::{BTreeSet, HashMap};

use super::{Block, FiniteOml, Representation};
use crate::error::{Error, Result};

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.parent[r] != r {
            r = self.parent[r];
        }
        let mut y = x;
        while self.parent[y] != r {
            let next = self.parent[y];
            self.parent[y] = r;
            y = next;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Pastes the Boolean algebras `2^block` along shared atoms.
pub fn build_oml_from_greechie(blocks: &[Vec<String>]) -> Result<FiniteOml> {
    // normalize each block to a sorted atom set, dropping exact duplicates
    let mut uniq: Vec<Vec<String>> = Vec::new();
    for (i, b) in blocks.iter().enumerate() {
        let set: BTreeSet<&String> = b.iter().collect();
        if set.len() < 2 || set.len() != b.len() {
            return Err(Error::DegenerateBlock(i));
        }
        let v: Vec<String> = set.into_iter().cloned().collect();
        if !uniq.contains(&v) {
            uniq.push(v);
        }
    }
    if uniq.is_empty() {
        return Err(Error::Parse("no blocks given".into()));
    }
    for i in 0..uniq.len() {
        for j in i + 1..uniq.len() {
            let shared = uniq[i].iter().filter(|a| uniq[j].contains(a)).count();
            if shared >= 2 {
                return Err(Error::IllegalPasting {
                    first: i,
                    second: j,
                    shared,
                });
            }
        }
    }

    let atom_names: Vec<String> = uniq
        .iter()
        .flatten()
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();

    // one union-find slot per (block, mask)
    let offsets: Vec<usize> = uniq
        .iter()
        .scan(0usize, |acc, b| {
            let o = *acc;
            *acc += 1 << b.len();
            Some(o)
        })
        .collect();
    let total: usize = uniq.iter().map(|b| 1usize << b.len()).sum();
    let mut uf = UnionFind::new(total);
    let full = |b: usize| (1usize << uniq[b].len()) - 1;
    for b in 1..uniq.len() {
        uf.union(offsets[0], offsets[b]);
        uf.union(offsets[0] + full(0), offsets[b] + full(b));
    }
    let mut home: HashMap<&str, (usize, usize)> = HashMap::new();
    for (b, atoms) in uniq.iter().enumerate() {
        for (k, a) in atoms.iter().enumerate() {
            match home.get(a.as_str()) {
                None => {
                    home.insert(a, (b, k));
                }
                Some(&(b0, k0)) => {
                    uf.union(offsets[b0] + (1 << k0), offsets[b] + (1 << k));
                    uf.union(
                        offsets[b0] + (full(b0) ^ (1 << k0)),
                        offsets[b] + (full(b) ^ (1 << k)),
                    );
                }
            }
        }
    }

    // canonical label per class: fewest atoms, then lexicographic names
    let mut classes: HashMap<usize, (usize, Vec<String>)> = HashMap::new();
    for (b, atoms) in uniq.iter().enumerate() {
        for mask in 0..(1usize << atoms.len()) {
            let root = uf.find(offsets[b] + mask);
            let names: Vec<String> = (0..atoms.len())
                .filter(|k| mask >> k & 1 == 1)
                .map(|k| atoms[k].clone())
                .collect();
            let cand = (names.len(), names);
            classes
                .entry(root)
                .and_modify(|cur| {
                    if cand < *cur {
                        *cur = cand.clone();
                    }
                })
                .or_insert(cand);
        }
    }
    let zero_root = uf.find(offsets[0]);
    let one_root = uf.find(offsets[0] + full(0));
    let mut roots: Vec<usize> = classes.keys().copied().collect();
    roots.sort_by(|a, b| {
        let ka = (*a != zero_root, *a == one_root, &classes[a]);
        let kb = (*b != zero_root, *b == one_root, &classes[b]);
        ka.cmp(&kb)
    });
    let id_of: HashMap<usize, usize> = roots.iter().enumerate().map(|(i, &r)| (r, i)).collect();
    let n = roots.len();
    let labels: Vec<String> = roots
        .iter()
        .map(|r| {
            if *r == zero_root {
                "0".to_string()
            } else if *r == one_root {
                "1".to_string()
            } else {
                classes[r].1.join("+")
            }
        })
        .collect();
    let ranks: Vec<usize> = roots.iter().map(|r| classes[r].0).collect();

    let mut out_blocks = Vec::new();
    let mut leq = vec![vec![false; n]; n];
    let mut ortho = vec![usize::MAX; n];
    for (b, atoms) in uniq.iter().enumerate() {
        let k = atoms.len();
        let elements: Vec<usize> = (0..(1usize << k))
            .map(|m| id_of[&uf.find(offsets[b] + m)])
            .collect();
        for m1 in 0..(1usize << k) {
            ortho[elements[m1]] = elements[full(b) ^ m1];
            for m2 in 0..(1usize << k) {
                if m1 & m2 == m1 {
                    leq[elements[m1]][elements[m2]] = true;
                }
            }
        }
        out_blocks.push(Block {
            atoms: (0..k).map(|j| elements[1 << j]).collect(),
            elements,
        });
    }
    // transitive closure; in a legal pasting this adds nothing
    for k in 0..n {
        for i in 0..n {
            if leq[i][k] {
                for j in 0..n {
                    if leq[k][j] {
                        leq[i][j] = true;
                    }
                }
            }
        }
    }

    let oml = FiniteOml::assemble(
        Representation::Abstract {
            atom_labels: atom_names,
        },
        labels,
        ranks,
        |p, q| leq[p][q],
        ortho,
        id_of[&zero_root],
        id_of[&one_root],
        out_blocks,
    );
    let report = oml.validate();
    if !report.is_valid() {
        return Err(Error::InvalidOml(report.violations));
    }
    Ok(oml)
}
