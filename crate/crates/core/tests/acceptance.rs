//! One pass/fail line per acceptance criterion. Lines are written straight
//! to stdout so they survive output capture.

mod common;

use std::collections::BTreeSet;
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use common::*;
use kstopos::automorphisms::{
    check_restriction_isomorphism, points_covered, spectral_automorphisms_over, PosetAutomorphism,
};
use kstopos::bsub::enumerate_bsub;
use kstopos::daseinisation::{delta_check, outer_daseinise_operator, outer_global_section, separating_context};
use kstopos::logic::{poset_height, satisfies_phi_poset, DownsetAlgebra};
use kstopos::measures::{
    default_subobjects, enumerate_zero_one_measures, klein_section_to_z2, measure_from_state, measure_to_section,
    projection_measure_from_presheaf_measure, section_to_measure, trace_pairing, z2_states, z2_to_klein_section,
};
use kstopos::oml::build_oml_from_greechie;
use kstopos::presheaf::{global_sections, klein4_presheaf, spectral_presheaf, SearchMode, SearchOptions};
use rand::Rng;

const BUDGET: usize = 1_000_000;
const CAB18_LIMIT: Duration = Duration::from_secs(5);
const PERES33_LIMIT: Duration = Duration::from_secs(60);

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn report(id: usize, what: &str, f: impl FnOnce() -> Outcome) -> bool {
    let res = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        let msg = e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(format!("panicked: {msg}"))
    });
    let (tag, detail, ok) = match &res {
        Ok(d) => ("PASS", d.as_str(), true),
        Err(d) => ("FAIL", d.as_str(), false),
    };
    let line = format!("criterion {id:>2} {tag}  {what}: {detail}\n");
    std::io::stdout().write_all(line.as_bytes()).ok();
    ok
}

fn ks_check(model: &str) -> Result<(serde_json::Value, Duration), String> {
    let t = Instant::now();
    let out = run(&["ks-check", model], &[]);
    let dt = t.elapsed();
    ensure!(out.status.code() == Some(0), "exit {:?}", out.status.code());
    Ok((json_of(&out), dt))
}

/// Recomputes the 4-ray orthogonal sets of cab18 straight from the file.
fn cab18_parity() -> Result<(usize, BTreeSet<usize>), String> {
    let text = include_str!("../data/cab18.rays");
    let rays: Vec<Vec<i64>> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#') && !l.contains('='))
        .map(|l| l.split_whitespace().map(|x| x.parse().unwrap()).collect())
        .collect();
    ensure!(rays.len() == 18, "{} rays", rays.len());
    let dot = |a: &[i64], b: &[i64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<i64>();
    let n = rays.len();
    let mut mult = vec![0usize; n];
    let mut contexts = 0;
    for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                for d in c + 1..n {
                    let s = [a, b, c, d];
                    if s.iter().all(|&i| s.iter().all(|&j| i == j || dot(&rays[i], &rays[j]) == 0)) {
                        contexts += 1;
                        for &i in &s {
                            mult[i] += 1;
                        }
                    }
                }
            }
        }
    }
    Ok((contexts, mult.into_iter().collect()))
}

fn c1() -> Outcome {
    let (r, dt) = ks_check("cab18")?;
    ensure!(r["verdict"] == "no-global-section", "verdict {}", r["verdict"]);
    ensure!(r["global_sections"] == 0, "sections {}", r["global_sections"]);
    let (contexts, mult) = cab18_parity()?;
    ensure!(contexts == 9 && mult == BTreeSet::from([2]), "oracle saw {contexts} contexts, multiplicities {mult:?}");
    ensure!(r["parity_oracle"]["verdict"] == "no-global-section", "tool oracle {}", r["parity_oracle"]);
    ensure!(r["parity_oracle"]["contexts"] == 9, "tool contexts {}", r["parity_oracle"]["contexts"]);
    ensure!(dt < CAB18_LIMIT, "took {dt:?}");
    Ok(format!("0 sections, parity oracle agrees (9 contexts, each ray in 2), {:.2}s", dt.as_secs_f64()))
}

fn c2() -> Outcome {
    let (r, dt) = ks_check("peres33")?;
    ensure!(r["verdict"] == "no-global-section", "verdict {}", r["verdict"]);
    ensure!(r["manifest"]["ring"] == 2, "ring {}", r["manifest"]["ring"]);
    ensure!(dt < PERES33_LIMIT, "took {dt:?}");
    Ok(format!("0 sections over Q(√2), {:.2}s", dt.as_secs_f64()))
}

fn count_sections(model: &str) -> Result<u64, String> {
    let out = run(&["sections", "--count", model], &[]);
    let r = json_of(&out);
    r["count"].as_u64().ok_or_else(|| format!("no count for {model}: {r}"))
}

fn c3() -> Outcome {
    let b = count_sections("basis3")?;
    let d = count_sections("dim2")?;
    ensure!(b == 3 && d == 2, "basis3 {b}, dim2 {d}");
    Ok("basis3 3, dim2 2".into())
}

fn c4() -> Outcome {
    let out = run(&["sections", "--max-height", "1", "cab18"], &[]);
    ensure!(out.status.code() == Some(0), "exit {:?}", out.status.code());
    let r = json_of(&out);
    ensure!(r["verdict"] == "sections-exist", "verdict {}", r["verdict"]);
    let full = run(&["sections", "cab18"], &[]);
    ensure!(full.status.code() == Some(2), "full search exit {:?}", full.status.code());
    Ok(format!("section over {} nodes of height ≤ 1; full search unsatisfiable", r["searched_nodes"]))
}

fn c5() -> Outcome {
    let mut detail = Vec::new();
    for name in ["basis3", "cube8", "dim2", "twoblock"] {
        let m = load(name);
        let sigma = spectral_presheaf(&m.star, &m.oml).map_err(|e| e.to_string())?;
        let mut sections = global_sections(&sigma, &SearchOptions::mode(SearchMode::Enumerate { limit: BUDGET }))
            .map_err(|e| e.to_string())?
            .sections;
        sections.sort();
        let measures = enumerate_zero_one_measures(&m.oml, BUDGET).map_err(|e| e.to_string())?;
        ensure!(sections.len() == measures.len(), "{name}: {} sections, {} measures", sections.len(), measures.len());
        let mut images = Vec::new();
        for s in &sections {
            let mu = section_to_measure(&m.oml, &m.star, &sigma, s).map_err(|e| e.to_string())?;
            ensure!(measure_to_section(&m.oml, &m.star, &sigma, &mu).map_err(|e| e.to_string())? == *s, "{name}: s→σ→s");
            images.push(mu);
        }
        for mu in &measures {
            let s = measure_to_section(&m.oml, &m.star, &sigma, mu).map_err(|e| e.to_string())?;
            ensure!(section_to_measure(&m.oml, &m.star, &sigma, &s).map_err(|e| e.to_string())? == *mu, "{name}: σ→s→σ");
        }
        images.sort();
        ensure!(images == measures, "{name}: image of sections differs from the measures");
        detail.push(format!("{name} {}", sections.len()));
    }
    Ok(detail.join(", "))
}

fn c6() -> Outcome {
    let mut r = rng(6);
    for name in ["basis3", "cab18"] {
        let m = load(name);
        let (o, star) = (&m.oml, &m.star);
        let sigma = spectral_presheaf(star, o).map_err(|e| e.to_string())?;
        let base = default_subobjects(o, star, &sigma).map_err(|e| e.to_string())?;
        let dim = o.dim().unwrap();
        for k in 0..50 {
            let rho = random_state(&mut r, dim);
            let mut table = base.clone();
            let mut pairs = Vec::new();
            while pairs.len() < 50 {
                let (i, j) = (r.gen_range(0..base.len()), r.gen_range(0..base.len()));
                if i != j {
                    pairs.push((i, j));
                }
            }
            for &(i, j) in &pairs {
                table.push(base[i].meet(&base[j]));
                table.push(base[i].join(&base[j]));
            }
            table.sort();
            table.dedup();
            let mu = measure_from_state(o, star, &sigma, &rho, table).map_err(|e| format!("{name} state {k}: {e}"))?;
            let problems = mu.check(&sigma);
            ensure!(problems.is_empty(), "{name} state {k}: {problems:?}");
            for &(i, j) in &pairs {
                let (a, b) = (&base[i], &base[j]);
                let (va, vb) = (mu.value(a).unwrap(), mu.value(b).unwrap());
                let (vj, vm) = (mu.value(&a.join(b)).unwrap(), mu.value(&a.meet(b)).unwrap());
                for n in 0..star.len() {
                    ensure!(&vj[n] + &vm[n] == &va[n] + &vb[n], "{name} state {k}: modular law at node {n}");
                }
            }
            let local = mu.check_locally_sigma_additive(&sigma);
            ensure!(local.is_empty(), "{name} state {k}: local additivity {local:?}");
            let pm = projection_measure_from_presheaf_measure(o, star, &mu).map_err(|e| e.to_string())?;
            let trace = trace_pairing(o, &rho).map_err(|e| e.to_string())?;
            ensure!(pm.values == trace, "{name} state {k}: m* differs from the trace pairing");
        }
    }
    Ok("50 states each on basis3 and cab18; axioms exact, m* = tr(ρ·)".into())
}

fn c7() -> Outcome {
    let mut r = rng(7);
    let mut counts = Vec::new();
    for (name, d) in [("peres33", 3), ("cab18", 4)] {
        let m = load(name);
        let (o, star) = (&m.oml, &m.star);
        ensure!(o.dim() == Some(d), "{name} dimension");
        let mut done = 0;
        while done < 100 {
            let a = random_op(&mut r, o);
            let b = random_op(&mut r, o);
            if a == b {
                continue;
            }
            let s = separating_context(o, &a, &b).map_err(|e| format!("{name}: {e}"))?;
            let node = star.find(&s.context.atoms).ok_or("separating context not a star node")?;
            ensure!(star.node(node).height() == 1, "{name}: context of height {}", star.node(node).height());
            let da = outer_daseinise_operator(o, &a, star.node(node)).map_err(|e| e.to_string())?;
            let db = outer_daseinise_operator(o, &b, star.node(node)).map_err(|e| e.to_string())?;
            ensure!(da != db, "{name}: daseinisations agree at the returned context");
            for x in [&a, &b] {
                outer_global_section(o, x, star).map_err(|e| format!("{name}: {e}"))?;
            }
            done += 1;
        }
        counts.push(format!("{name} (d={d}) 100"));
    }
    Ok(format!("{} pairs separated at height 1", counts.join(", ")))
}

fn c8() -> Outcome {
    let mut r = rng(8);
    let models = [load("basis3"), load("peres33"), load("cab18")];
    for k in 0..50 {
        let m = &models[k % models.len()];
        let a = random_op(&mut r, &m.oml);
        let (_, rep) = delta_check(&m.oml, &a, &m.star).map_err(|e| e.to_string())?;
        ensure!(rep.passed(), "{} operator {k}: {:?} {:?}", m.name, rep.naturality.failures, rep.value_failures);
    }
    Ok("50 operators over basis3, peres33, cab18".into())
}

fn c9() -> Outcome {
    let block4 = build_oml_from_greechie(&[vec!["a".into(), "b".into(), "c".into(), "d".into()]]).map_err(|e| e.to_string())?;
    let mut cases: Vec<(String, kstopos::oml::FiniteOml)> =
        ["cube8", "dim2", "twoblock"].iter().map(|n| (n.to_string(), load(n).oml)).collect();
    cases.push(("single 4-atom block".into(), block4));
    let mut detail = Vec::new();
    for (name, o) in &cases {
        let full = enumerate_bsub(o, None, BUDGET).map_err(|e| e.to_string())?;
        let star = kstopos::bsub::enumerate_bsub_star(o);
        let rep = check_restriction_isomorphism(&full, &star, BUDGET).map_err(|e| e.to_string())?;
        ensure!(rep.isomorphism(), "{name}: {rep:?}");
        ensure!(rep.full_order == rep.star_order, "{name}: orders differ");
        if name == "cube8" {
            ensure!(rep.full_order == 6, "cube8 order {}", rep.full_order);
        }
        detail.push(format!("{name} {}", rep.full_order));
    }
    Ok(format!("orders {}", detail.join(", ")))
}

fn c10() -> Outcome {
    let mut detail = Vec::new();
    for name in ["basis3", "cube8", "twoblock", "block4", "dim2", "cab18", "peres33"] {
        let m = load(name);
        let sigma = spectral_presheaf(&m.star, &m.oml).map_err(|e| e.to_string())?;
        let id = PosetAutomorphism::identity(m.star.len());
        let n = spectral_automorphisms_over(&sigma, &id, 1000).map_err(|e| e.to_string())?.len();
        let covered = points_covered(m.star.poset());
        let expect = if name == "dim2" { 2 } else { 1 };
        ensure!(name == "dim2" || covered, "{name}: a point lies under no line");
        ensure!(n == expect, "{name}: {n} over the identity");
        detail.push(format!("{name} {n}"));
    }
    Ok(detail.join(", "))
}

fn c11() -> Outcome {
    for d in kstopos::datasets::DATASETS {
        let m = d.load().map_err(|e| e.to_string())?;
        let q = m.star.poset();
        ensure!(satisfies_phi_poset(q, 2, BUDGET).map_err(|e| e.to_string())?, "{}: φ₂ fails", d.name);
        if !m.star.lines().is_empty() {
            ensure!(!satisfies_phi_poset(q, 1, BUDGET).map_err(|e| e.to_string())?, "{}: φ₁ holds", d.name);
        }
    }
    let mut r = rng(11);
    let mut tested = 0;
    let mut heights = BTreeSet::new();
    while tested < 150 {
        let n = r.gen_range(1..=7);
        let density = r.gen_range(0.1..0.7);
        let q = random_poset(&mut r, n, density);
        let h = poset_height(&q);
        if h > 3 {
            continue;
        }
        let alg = DownsetAlgebra::new(&q, BUDGET).map_err(|e| e.to_string())?;
        for k in 0..3 {
            ensure!(alg.satisfies_phi(k) == (h <= k), "height {h} poset on {n} nodes, φ{k}");
        }
        heights.insert(h);
        tested += 1;
    }
    ensure!(heights.len() == 4, "heights covered {heights:?}");
    Ok(format!("all bundled stars satisfy φ₂, those with lines fail φ₁; {tested} random posets of height ≤ 3"))
}

fn c12() -> Outcome {
    let single = build_oml_from_greechie(&[vec!["a".into(), "b".into(), "c".into()]]).map_err(|e| e.to_string())?;
    let z = z2_states(&single, BUDGET).map_err(|e| e.to_string())?;
    let nc = z.non_constant.iter().filter(|&&b| b).count();
    ensure!(z.states.len() == 4 && nc == 3, "single block {} states, {nc} non-constant", z.states.len());
    let mut detail = Vec::new();
    for name in ["basis3", "cube8", "twoblock", "peres33"] {
        let m = load(name);
        let z = z2_states(&m.oml, BUDGET).map_err(|e| format!("{name}: {e}"))?;
        let k = klein4_presheaf(&m.star, &m.oml).map_err(|e| e.to_string())?;
        let sections = global_sections(&k.presheaf, &SearchOptions::mode(SearchMode::Enumerate { limit: BUDGET }))
            .map_err(|e| e.to_string())?
            .sections;
        ensure!(sections.len() == z.states.len(), "{name}: {} sections, {} states", sections.len(), z.states.len());
        let mut back = BTreeSet::new();
        for s in &sections {
            back.insert(klein_section_to_z2(&k, &m.star, &z.atoms, s).map_err(|e| e.to_string())?);
        }
        ensure!(back.len() == sections.len(), "{name}: two sections give one state");
        for st in &z.states {
            ensure!(back.contains(st), "{name}: state without a section");
            let s = z2_to_klein_section(&k, &z.atoms, st).map_err(|e| e.to_string())?;
            ensure!(klein_section_to_z2(&k, &m.star, &z.atoms, &s).map_err(|e| e.to_string())? == *st, "{name}: round trip");
        }
        detail.push(format!("{name} {}", z.states.len()));
    }
    Ok(format!("single block 4 (3 non-constant); {}", detail.join(", ")))
}

fn c13() -> Outcome {
    let dir = std::env::temp_dir().join(format!("kstopos-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let op_a = fixture("basis3_op_a.json");
    let op_b = fixture("basis3_op_b.json");
    let state = fixture("basis3_state.json");
    let (a, b, s) = (op_a.to_str().unwrap(), op_b.to_str().unwrap(), state.to_str().unwrap());
    let commands: Vec<Vec<String>> = [
        vec!["build", "twoblock"],
        vec!["sections", "--count", "cab18"],
        vec!["sections", "--max-height", "1", "cab18"],
        vec!["sections", "--list", "10", "twoblock"],
        vec!["ks-check", "cab18"],
        vec!["ks-check", "peres33"],
        vec!["daseinise", "peres33", "--element", "v3"],
        vec!["op-dasein", "basis3", "--op", a],
        vec!["separate", "basis3", "--first", a, "--second", b],
        vec!["measure", "basis3", "--state", s, "--closure"],
        vec!["roundtrip", "twoblock"],
        vec!["z2-state", "cube8"],
        vec!["aut", "block4", "--check-restriction", "--spectral"],
        vec!["aut", "cab18", "--star"],
        vec!["logic", "cube8", "dim2", "cab18"],
        vec!["hasse", "cube8", "--dot", "@DOT"],
    ]
    .iter()
    .map(|c| c.iter().map(|s| s.to_string()).collect())
    .collect();
    for cmd in &commands {
        let mut seen: Option<(Vec<u8>, Option<Vec<u8>>)> = None;
        for (i, workers) in ["0", "1", "4", "1"].iter().enumerate() {
            let dot = dir.join(format!("h{i}.dot"));
            let args: Vec<String> = cmd.iter().map(|a| if a == "@DOT" { dot.display().to_string() } else { a.clone() }).collect();
            let argv: Vec<&str> = args.iter().map(String::as_str).collect();
            let out = run(&argv, &[("KSTOPOS_WORKERS", workers)]);
            ensure!(matches!(out.status.code(), Some(0) | Some(2)), "{cmd:?} exit {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr));
            let stdout = String::from_utf8_lossy(&out.stdout).replace(&dot.display().to_string(), "@DOT").into_bytes();
            let dotfile = std::fs::read(&dot).ok();
            match &seen {
                None => seen = Some((stdout, dotfile)),
                Some((s0, d0)) => {
                    ensure!(*s0 == stdout, "{cmd:?} differs with {workers} workers");
                    ensure!(*d0 == dotfile, "{cmd:?} DOT differs with {workers} workers");
                }
            }
        }
    }
    std::fs::remove_dir_all(&dir).ok();
    Ok(format!("{} commands byte-identical over 4 runs with 0/1/4/1 workers", commands.len()))
}

#[test]
fn acceptance() {
    let criteria: Vec<(&str, fn() -> Outcome)> = vec![
        ("KS refutation cab18", c1),
        ("KS refutation peres33", c2),
        ("positive controls", c3),
        ("height-one degradation", c4),
        ("section/measure round trip", c5),
        ("state measures", c6),
        ("operator injectivity", c7),
        ("value transformation", c8),
        ("restriction isomorphism", c9),
        ("spectral automorphisms over identity", c10),
        ("downset logic", c11),
        ("Z2 states and Klein-4 sections", c12),
        ("determinism", c13),
    ];
    let mut failed = Vec::new();
    for (i, (what, f)) in criteria.into_iter().enumerate() {
        if !report(i + 1, what, f) {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
