//! Command-line entry point. Every report is a JSON object with sorted keys
//! written to stdout; diagnostics go to stderr.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use serde_json::{json, Value};

use crate::automorphisms::{check_restriction_isomorphism, poset_automorphisms, spectral_group_report};
use crate::bsub::enumerate_bsub;
use crate::daseinisation::{
    daseinise_projection, delta_check, inner_daseinise_operator, outer_daseinise_operator, outer_global_section,
    outer_minimality_holds, separating_context, Direction,
};
use crate::datasets::{load_model, parse_undersized, ModelBundle};
use crate::error::{Error, Result};
use crate::io::{parse_operator_json, parse_state_json};
use crate::logic::phi_table;
use crate::measures::{
    default_subobjects, enumerate_zero_one_measures, klein_section_to_z2, measure_from_state, measure_to_section,
    projection_measure_from_presheaf_measure, section_to_measure, trace_pairing, with_meets_and_joins, z2_states,
    z2_to_klein_section,
};
use crate::oml::{BuildOptions, FiniteOml, ModelJson};
use crate::poset::{to_dot, to_hasse_json};
use crate::presheaf::{global_sections, klein4_presheaf, spectral_presheaf, GlobalSection, Presheaf, SearchMode, SearchOptions};
use crate::scalar::fmt_rational;

/// Exit code for an unsatisfiable section query.
pub const EXIT_UNSAT: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "kstopos", version, about = "Spectral presheaf computations on finite orthomodular posets")]
pub struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalOpts {
    /// Worker threads; 0 uses all cores.
    #[arg(long, global = true, env = "KSTOPOS_WORKERS", default_value_t = 0)]
    workers: usize,
    /// Bound on enumerated nodes, downsets, sections and search steps.
    #[arg(long, global = true, env = "KSTOPOS_NODE_BUDGET", default_value_t = 2_000_000)]
    node_budget: usize,
    /// Accepted for script compatibility; every algorithm is deterministic.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Policy for maximal orthogonal ray sets smaller than the dimension.
    #[arg(long, global = true, default_value = "reject", value_parser = ["reject", "complete", "ignore"])]
    undersized: String,
    /// Also write the report to this file.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a model from rays or Greechie blocks and emit it as JSON.
    Build { model: String },
    /// Search global sections of the spectral presheaf.
    Sections {
        model: String,
        #[arg(long)]
        max_height: Option<usize>,
        /// Count all sections instead of stopping at the first.
        #[arg(long)]
        count: bool,
        /// List up to this many sections.
        #[arg(long)]
        list: Option<usize>,
    },
    /// Decide whether the spectral presheaf has a global section.
    KsCheck { model: String },
    /// Daseinise one element into every context of the star poset.
    Daseinise {
        model: String,
        #[arg(long)]
        element: String,
        #[arg(long, value_enum)]
        direction: Option<Dir>,
    },
    /// Daseinise an operator file and check the value transformation.
    OpDasein {
        model: String,
        #[arg(long)]
        op: PathBuf,
    },
    /// Find a 4-element context where two operators differ.
    Separate {
        model: String,
        #[arg(long)]
        first: PathBuf,
        #[arg(long)]
        second: PathBuf,
    },
    /// Tabulate the measure of a state on subobjects.
    Measure {
        model: String,
        #[arg(long)]
        state: PathBuf,
        /// Also tabulate pairwise meets and joins.
        #[arg(long)]
        closure: bool,
    },
    /// Check the section / two-valued measure correspondence.
    Roundtrip { model: String },
    /// Enumerate ℤ₂-valued states and match them with Klein-4 sections.
    Z2State { model: String },
    /// Automorphism groups of the context posets.
    Aut {
        model: String,
        /// Use the star poset instead of the full poset.
        #[arg(long)]
        star: bool,
        #[arg(long)]
        check_restriction: bool,
        #[arg(long)]
        spectral: bool,
    },
    /// Height and φ₀, φ₁, φ₂ of the downset algebra of each star poset.
    Logic {
        #[arg(required = true)]
        models: Vec<String>,
    },
    /// Write the Hasse diagram of a context poset.
    Hasse {
        model: String,
        #[arg(long)]
        dot: PathBuf,
        /// Use the full poset instead of the star poset.
        #[arg(long)]
        full: bool,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Dir {
    Outer,
    Inner,
}

struct Ctx {
    budget: usize,
    build: BuildOptions,
}

impl Ctx {
    fn load(&self, model: &str) -> Result<ModelBundle> {
        load_model(model, &self.build)
    }
}

/// Parses arguments, runs the command and returns stdout text and exit code.
pub fn run<I, T>(args: I) -> (i32, String, String)
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            return if code == 0 { (0, text, String::new()) } else { (1, String::new(), text) };
        }
    };
    let run = || -> Result<(Value, i32)> {
        let ctx = Ctx {
            budget: cli.global.node_budget,
            build: BuildOptions {
                undersized: parse_undersized(&cli.global.undersized)?,
            },
        };
        dispatch(&cli.command, &ctx)
    };
    let result = if cli.global.workers > 0 {
        match rayon::ThreadPoolBuilder::new().num_threads(cli.global.workers).build() {
            Ok(pool) => pool.install(run),
            Err(e) => Err(Error::Internal(e.to_string())),
        }
    } else {
        run()
    };
    match result {
        Ok((report, code)) => {
            let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
            text.push('\n');
            if let Some(path) = &cli.global.out {
                if let Err(e) = std::fs::write(path, &text) {
                    return (1, String::new(), format!("error: {e}\n"));
                }
            }
            (code, text, String::new())
        }
        Err(e) => (1, String::new(), format!("error: {e}\n")),
    }
}

fn dispatch(cmd: &Command, ctx: &Ctx) -> Result<(Value, i32)> {
    match cmd {
        Command::Build { model } => {
            let m = ctx.load(model)?;
            Ok((
                json!({ "manifest": m.manifest, "model": ModelJson::from_oml(&m.oml) }),
                0,
            ))
        }
        Command::Sections {
            model,
            max_height,
            count,
            list,
        } => sections(ctx, model, *max_height, *count, *list),
        Command::KsCheck { model } => ks_check(ctx, model),
        Command::Daseinise {
            model,
            element,
            direction,
        } => daseinise(ctx, model, element, *direction),
        Command::OpDasein { model, op } => op_dasein(ctx, model, op),
        Command::Separate { model, first, second } => separate(ctx, model, first, second),
        Command::Measure { model, state, closure } => measure(ctx, model, state, *closure),
        Command::Roundtrip { model } => roundtrip(ctx, model),
        Command::Z2State { model } => z2(ctx, model),
        Command::Aut {
            model,
            star,
            check_restriction,
            spectral,
        } => aut(ctx, model, *star, *check_restriction, *spectral),
        Command::Logic { models } => {
            let mut rows = Vec::new();
            for name in models {
                let m = ctx.load(name)?;
                let row = phi_table(m.star.poset(), ctx.budget)?;
                rows.push(json!({
                    "model": m.name,
                    "height": row.height,
                    "phi0": row.phi0,
                    "phi1": row.phi1,
                    "phi2": row.phi2,
                }));
            }
            Ok((json!({ "rows": rows }), 0))
        }
        Command::Hasse { model, dot, full } => {
            let m = ctx.load(model)?;
            let poset = if *full {
                enumerate_bsub(&m.oml, None, ctx.budget)?
            } else {
                m.star.clone()
            };
            let labels = poset.labels(&m.oml);
            std::fs::write(dot, to_dot(poset.poset(), &labels, &m.name))?;
            Ok((json!({ "model": m.name, "hasse": to_hasse_json(poset.poset(), &labels) }), 0))
        }
    }
}

fn count_value(c: u128) -> Value {
    match u64::try_from(c) {
        Ok(v) => json!(v),
        Err(_) => json!(c.to_string()),
    }
}

fn section_json(p: &Presheaf, labels: &[String], s: &GlobalSection) -> Value {
    let picks = p.section_to_json(s);
    let map: BTreeMap<String, String> = labels.iter().cloned().zip(picks).collect();
    json!(map)
}

fn verdict(sat: bool) -> &'static str {
    if sat {
        "sections-exist"
    } else {
        "no-global-section"
    }
}

fn sections(ctx: &Ctx, model: &str, max_height: Option<usize>, count: bool, list: Option<usize>) -> Result<(Value, i32)> {
    let m = ctx.load(model)?;
    let sigma = spectral_presheaf(&m.star, &m.oml)?;
    let mode = match (count, list) {
        (true, _) => SearchMode::Count,
        (false, Some(limit)) => SearchMode::Enumerate { limit },
        (false, None) => SearchMode::Exists,
    };
    let opts = SearchOptions {
        mode,
        max_height,
        ..SearchOptions::default()
    };
    let r = global_sections(&sigma, &opts)?;
    let labels = m.star.labels(&m.oml);
    let kept: Vec<String> = r.searched_nodes.iter().map(|&n| labels[n].clone()).collect();
    let shown: Vec<Value> = r
        .sections
        .iter()
        .map(|s| {
            let picks = s.choice.iter().copied();
            let by_node: BTreeMap<String, String> = r
                .searched_nodes
                .iter()
                .zip(picks)
                .map(|(&n, x)| (labels[n].clone(), sigma.fiber_labels(n)[x].clone()))
                .collect();
            json!(by_node)
        })
        .collect();
    let mut report = json!({
        "model": m.name,
        "verdict": verdict(r.satisfiable),
        "satisfiable": r.satisfiable,
        "searched_nodes": kept.len(),
        "max_height": max_height,
        "sections": shown,
        "decisions": r.decisions,
    });
    if let Some(c) = r.count {
        report["count"] = count_value(c);
    }
    Ok((report, if r.satisfiable { 0 } else { EXIT_UNSAT }))
}

/// Parity certificate: an odd number of contexts with every atom in an even
/// number of them admits no choice of exactly one atom per context.
fn parity_oracle(o: &FiniteOml) -> Value {
    let mut mult: BTreeMap<usize, usize> = BTreeMap::new();
    for a in o.atoms() {
        *mult.entry(o.blocks_containing(a).len()).or_default() += 1;
    }
    let contexts = o.blocks().len();
    let even = mult.keys().all(|k| k % 2 == 0);
    let refutes = contexts % 2 == 1 && even;
    json!({
        "contexts": contexts,
        "atom_multiplicities": mult.iter().map(|(k, v)| (k.to_string(), *v)).collect::<BTreeMap<_, _>>(),
        "applicable": refutes,
        "verdict": if refutes { "no-global-section" } else { "inconclusive" },
    })
}

fn ks_check(ctx: &Ctx, model: &str) -> Result<(Value, i32)> {
    let m = ctx.load(model)?;
    let sigma = spectral_presheaf(&m.star, &m.oml)?;
    let r = global_sections(&sigma, &SearchOptions::mode(SearchMode::Exists))?;
    let labels = m.star.labels(&m.oml);
    let witness = r.sections.first().map(|s| section_json(&sigma, &labels, s));
    Ok((
        json!({
            "model": m.name,
            "manifest": m.manifest,
            "verdict": verdict(r.satisfiable),
            "global_sections": if r.satisfiable { json!(null) } else { json!(0) },
            "witness": witness,
            "parity_oracle": parity_oracle(&m.oml),
            "certificate": {
                "decisions": r.decisions,
                "trace": r.trace,
                "trace_truncated": r.trace_truncated,
            },
        }),
        0,
    ))
}

fn daseinise(ctx: &Ctx, model: &str, element: &str, dir: Option<Dir>) -> Result<(Value, i32)> {
    let m = ctx.load(model)?;
    let o = &m.oml;
    let p = o
        .find_label(element)
        .ok_or_else(|| Error::Parse(format!("unknown element {element:?}")))?;
    let dirs: Vec<(Direction, &str)> = match dir {
        Some(Dir::Outer) => vec![(Direction::Outer, "outer")],
        Some(Dir::Inner) => vec![(Direction::Inner, "inner")],
        None => vec![(Direction::Outer, "outer"), (Direction::Inner, "inner")],
    };
    let mut rows = Vec::new();
    for (i, b) in m.star.nodes().iter().enumerate() {
        let mut row = json!({ "node": i, "context": b.label(o) });
        for (d, name) in &dirs {
            row[*name] = json!(o.label(daseinise_projection(o, p, b, *d)?));
        }
        rows.push(row);
    }
    Ok((json!({ "model": m.name, "element": element, "contexts": rows }), 0))
}

fn op_dasein(ctx: &Ctx, model: &str, op: &PathBuf) -> Result<(Value, i32)> {
    let m = ctx.load(model)?;
    let o = &m.oml;
    let a = parse_operator_json(o, &std::fs::read_to_string(op)?)?;
    let mut rows = Vec::new();
    let mut minimal = true;
    for (i, b) in m.star.nodes().iter().enumerate() {
        let min = outer_minimality_holds(o, &a, b)?;
        minimal &= min;
        rows.push(json!({
            "node": i,
            "context": b.label(o),
            "outer": outer_daseinise_operator(o, &a, b)?.to_json(o),
            "inner": inner_daseinise_operator(o, &a, b)?.to_json(o),
            "outer_minimal": min,
        }));
    }
    outer_global_section(o, &a, &m.star)?;
    let (_, report) = delta_check(o, &a, &m.star)?;
    let ok = minimal && report.passed();
    Ok((
        json!({
            "model": m.name,
            "operator": a.to_json(o),
            "contexts": rows,
            "outer_section_natural": true,
            "delta": {
                "naturality_failures": report.naturality.failures,
                "value_failures": report.value_failures,
                "passed": report.passed(),
            },
            "ok": ok,
        }),
        if ok { 0 } else { 1 },
    ))
}

fn separate(ctx: &Ctx, model: &str, first: &PathBuf, second: &PathBuf) -> Result<(Value, i32)> {
    let m = ctx.load(model)?;
    let o = &m.oml;
    let a = parse_operator_json(o, &std::fs::read_to_string(first)?)?;
    let b = parse_operator_json(o, &std::fs::read_to_string(second)?)?;
    let s = separating_context(o, &a, &b)?;
    Ok((
        json!({
            "model": m.name,
            "context": s.context.label(o),
            "lambda0": fmt_rational(&s.lambda0),
            "first": s.first.to_json(o),
            "second": s.second.to_json(o),
        }),
        0,
    ))
}

fn measure(ctx: &Ctx, model: &str, state: &PathBuf, closure: bool) -> Result<(Value, i32)> {
    let m = ctx.load(model)?;
    let o = &m.oml;
    let rho = parse_state_json(o, &std::fs::read_to_string(state)?)?;
    let sigma = spectral_presheaf(&m.star, o)?;
    let mut subs = default_subobjects(o, &m.star, &sigma)?;
    if closure {
        subs = with_meets_and_joins(&subs);
    }
    let mu = measure_from_state(o, &m.star, &sigma, &rho, subs)?;
    let pm = projection_measure_from_presheaf_measure(o, &m.star, &mu)?;
    let trace = trace_pairing(o, &rho)?;
    let local = mu.check_locally_sigma_additive(&sigma);
    let fmt = |v: &[BigRational]| -> BTreeMap<String, String> {
        (0..o.len()).map(|p| (o.label(p).to_string(), fmt_rational(&v[p]))).collect()
    };
    let ok = pm.values == trace && local.is_empty();
    Ok((
        json!({
            "model": m.name,
            "subobjects": mu.subobjects().len(),
            "measure": mu.to_json(&sigma),
            "projection_measure": fmt(&pm.values),
            "matches_trace": pm.values == trace,
            "locally_sigma_additive": local.is_empty(),
            "ok": ok,
        }),
        if ok { 0 } else { 1 },
    ))
}

fn roundtrip(ctx: &Ctx, model: &str) -> Result<(Value, i32)> {
    let m = ctx.load(model)?;
    let o = &m.oml;
    let sigma = spectral_presheaf(&m.star, o)?;
    let found = global_sections(&sigma, &SearchOptions::mode(SearchMode::Enumerate { limit: ctx.budget }))?;
    let mut sections = found.sections;
    sections.sort();
    let mut measures = enumerate_zero_one_measures(o, ctx.budget)?;
    measures.sort();
    let mut section_identity = true;
    let mut from_sections = Vec::with_capacity(sections.len());
    for s in &sections {
        let mu = section_to_measure(o, &m.star, &sigma, s)?;
        section_identity &= measure_to_section(o, &m.star, &sigma, &mu)? == *s;
        from_sections.push(mu);
    }
    let mut measure_identity = true;
    for mu in &measures {
        let s = measure_to_section(o, &m.star, &sigma, mu)?;
        measure_identity &= section_to_measure(o, &m.star, &sigma, &s)? == *mu;
    }
    from_sections.sort();
    let same = from_sections == measures;
    let ok = section_identity && measure_identity && same;
    Ok((
        json!({
            "model": m.name,
            "sections": sections.len(),
            "measures": measures.len(),
            "section_measure_section": section_identity,
            "measure_section_measure": measure_identity,
            "same_sets": same,
            "ok": ok,
        }),
        if ok { 0 } else { 1 },
    ))
}

fn z2(ctx: &Ctx, model: &str) -> Result<(Value, i32)> {
    let m = ctx.load(model)?;
    let o = &m.oml;
    let z = z2_states(o, ctx.budget)?;
    let k = klein4_presheaf(&m.star, o)?;
    let found = global_sections(&k.presheaf, &SearchOptions::mode(SearchMode::Enumerate { limit: ctx.budget }))?;
    let mut bijective = found.sections.len() == z.states.len();
    for st in &z.states {
        let s = z2_to_klein_section(&k, &z.atoms, st)?;
        bijective &= klein_section_to_z2(&k, &m.star, &z.atoms, &s)? == *st;
    }
    for s in &found.sections {
        bijective &= z.states.binary_search(&klein_section_to_z2(&k, &m.star, &z.atoms, s)?).is_ok();
    }
    let atoms: Vec<&str> = z.atoms.iter().map(|&a| o.label(a)).collect();
    Ok((
        json!({
            "model": m.name,
            "atoms": atoms,
            "states": z.states,
            "non_constant": z.non_constant.iter().filter(|&&b| b).count(),
            "klein_sections": found.sections.len(),
            "bijective": bijective,
        }),
        if bijective { 0 } else { 1 },
    ))
}

fn aut(ctx: &Ctx, model: &str, star: bool, check: bool, spectral: bool) -> Result<(Value, i32)> {
    let m = ctx.load(model)?;
    let mut report = json!({ "model": m.name });
    let mut ok = true;
    let full = if !star || check {
        Some(enumerate_bsub(&m.oml, None, ctx.budget)?)
    } else {
        None
    };
    let poset = if star { m.star.poset() } else { full.as_ref().unwrap().poset() };
    report["group"] = poset_automorphisms(poset, ctx.budget)?.to_json();
    report["poset"] = json!(if star { "star" } else { "full" });
    if check {
        let r = check_restriction_isomorphism(full.as_ref().unwrap(), &m.star, ctx.budget)?;
        ok &= r.isomorphism();
        report["restriction"] = json!({
            "full_order": r.full_order,
            "star_order": r.star_order,
            "bijective": r.bijective,
            "homomorphism": r.homomorphism,
            "extension_inverse": r.extension_inverse,
            "isomorphism": r.isomorphism(),
        });
    }
    if spectral {
        let sigma = spectral_presheaf(&m.star, &m.oml)?;
        let r = spectral_group_report(&sigma, ctx.budget, ctx.budget)?;
        report["spectral"] = serde_json::to_value(&r)?;
    }
    Ok((report, if ok { 0 } else { 1 }))
}
