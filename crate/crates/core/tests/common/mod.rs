#![allow(dead_code)]

use std::path::PathBuf;
use std::process::{Command, Output};

use kstopos::daseinisation::SelfAdjointOp;
use kstopos::datasets::{find, ModelBundle};
use kstopos::measures::State;
use kstopos::oml::FiniteOml;
use kstopos::poset::FinitePoset;
use kstopos::scalar::QuadScalar;
use num_rational::BigRational;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_kstopos")
}

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn run(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut c = Command::new(bin());
    c.args(args).env_remove("KSTOPOS_WORKERS").env_remove("KSTOPOS_NODE_BUDGET");
    for (k, v) in env {
        c.env(k, v);
    }
    c.output().expect("binary runs")
}

pub fn json_of(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

pub fn load(name: &str) -> ModelBundle {
    find(name).unwrap_or_else(|| panic!("no dataset {name}")).load().unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

/// A convex combination of one to three integer rays.
pub fn random_state(r: &mut ChaCha8Rng, dim: usize) -> State {
    let k = r.gen_range(1..=3);
    let raw: Vec<i64> = (0..k).map(|_| r.gen_range(1..=6)).collect();
    let total: i64 = raw.iter().sum();
    let weights = raw
        .iter()
        .map(|&w| {
            let ray: Vec<QuadScalar> = loop {
                let v: Vec<i64> = (0..dim).map(|_| r.gen_range(-2..=2)).collect();
                if v.iter().any(|&x| x != 0) {
                    break v.into_iter().map(QuadScalar::from_int).collect();
                }
            };
            (q(w, total), ray)
        })
        .collect();
    State::new(dim, weights).unwrap()
}

/// An operator diagonal in a randomly chosen block.
pub fn random_op(r: &mut ChaCha8Rng, o: &FiniteOml) -> SelfAdjointOp {
    let b = &o.blocks()[r.gen_range(0..o.blocks().len())];
    let terms = b
        .atoms
        .iter()
        .map(|&a| (q(r.gen_range(-3..=3), r.gen_range(1..=2)), a))
        .collect();
    SelfAdjointOp::new(o, terms).unwrap()
}

/// Transitive closure of a random DAG on `n` nodes.
pub fn random_poset(r: &mut ChaCha8Rng, n: usize, density: f64) -> FinitePoset {
    let mut rel = vec![vec![false; n]; n];
    for i in 0..n {
        rel[i][i] = true;
        for j in i + 1..n {
            rel[i][j] = r.gen_bool(density);
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                rel[i][j] |= rel[i][k] && rel[k][j];
            }
        }
    }
    FinitePoset::from_relation(n, |i, j| rel[i][j])
}
