//! Global-section search: arc consistency on cover pairs plus
//! backtracking, highest nodes first.

use rayon::prelude::*;
use serde::Serialize;

use super::{full_mask, ones, GlobalSection, Presheaf};
use crate::error::{Error, Result};
use crate::poset::NodeId;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SearchMode {
    /// Stop at the first section.
    Exists,
    /// Count all sections.
    Count,
    /// List sections, failing past `limit`.
    Enumerate { limit: usize },
}

#[derive(Clone, Debug)]
pub struct SearchOptions {
    pub mode: SearchMode,
    pub max_height: Option<usize>,
    /// Events kept in the trace (exists mode only).
    pub trace_cap: usize,
    /// Worker threads for count/enumerate; 0 uses the global pool.
    pub workers: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            mode: SearchMode::Exists,
            max_height: None,
            trace_cap: 4096,
            workers: 0,
        }
    }
}

impl SearchOptions {
    pub fn mode(mode: SearchMode) -> Self {
        SearchOptions {
            mode,
            ..Default::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "event", rename_all = "kebab-case")]
pub enum TraceEvent {
    Assign { node: NodeId, value: usize },
    Prune { node: NodeId, via: (NodeId, NodeId), left: Vec<usize> },
    Wipeout { node: NodeId },
    Backtrack { node: NodeId },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SearchResult {
    pub satisfiable: bool,
    /// Sections over the searched base (node ids of the original presheaf).
    pub sections: Vec<GlobalSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub count: Option<u128>,
    /// Branching decisions taken.
    pub decisions: u64,
    /// Nodes of the original base that were searched.
    pub searched_nodes: Vec<NodeId>,
    pub trace: Vec<TraceEvent>,
    pub trace_truncated: bool,
}

struct Solver<'a> {
    p: &'a Presheaf,
    /// Cover pairs `(lo, hi)` incident to each node.
    incident: Vec<Vec<(NodeId, NodeId)>>,
    order_key: Vec<usize>,
    trace_cap: usize,
}

struct Trace {
    on: bool,
    cap: usize,
    events: Vec<TraceEvent>,
    truncated: bool,
}

impl Trace {
    fn push(&mut self, e: impl FnOnce() -> TraceEvent) {
        if !self.on {
            return;
        }
        if self.events.len() < self.cap {
            self.events.push(e());
        } else {
            self.truncated = true;
        }
    }
}

impl<'a> Solver<'a> {
    fn new(p: &'a Presheaf, trace_cap: usize) -> Self {
        let mut incident = vec![Vec::new(); p.len()];
        for (lo, hi) in p.base().cover_pairs() {
            incident[lo].push((lo, hi));
            incident[hi].push((lo, hi));
        }
        Solver {
            p,
            incident,
            order_key: p.base().by_decreasing_height(),
            trace_cap,
        }
    }

    fn initial(&self) -> Vec<u64> {
        (0..self.p.len()).map(|i| full_mask(self.p.fiber_size(i))).collect()
    }

    /// Arc consistency from the given dirty nodes. `Err(node)` on wipeout.
    fn propagate(&self, dom: &mut [u64], dirty: Vec<NodeId>, tr: &mut Trace) -> std::result::Result<(), NodeId> {
        let mut queue = dirty;
        let mut queued = vec![false; dom.len()];
        for &q in &queue {
            queued[q] = true;
        }
        while let Some(u) = queue.pop() {
            queued[u] = false;
            for &(lo, hi) in &self.incident[u] {
                let map = self.p.restriction_map(lo, hi);
                // hi keeps values restricting into dom[lo]
                let keep_hi = ones(dom[hi])
                    .filter(|&x| dom[lo] >> map[x] & 1 == 1)
                    .fold(0u64, |m, x| m | 1 << x);
                // lo keeps values hit from dom[hi]
                let keep_lo = ones(keep_hi).fold(0u64, |m, x| m | 1 << map[x]) & dom[lo];
                for (node, keep) in [(hi, keep_hi), (lo, keep_lo)] {
                    if keep != dom[node] {
                        dom[node] = keep;
                        tr.push(|| TraceEvent::Prune {
                            node,
                            via: (lo, hi),
                            left: ones(keep).collect(),
                        });
                        if keep == 0 {
                            tr.push(|| TraceEvent::Wipeout { node });
                            return Err(node);
                        }
                        if !queued[node] {
                            queued[node] = true;
                            queue.push(node);
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Branch variable: highest node first, then smallest domain.
    fn pick(&self, dom: &[u64], within: Option<&[bool]>) -> Option<NodeId> {
        let mut best: Option<(usize, u32, NodeId)> = None;
        for (rank, &node) in self.order_key.iter().enumerate() {
            if within.is_some_and(|w| !w[node]) {
                continue;
            }
            let size = dom[node].count_ones();
            if size <= 1 {
                continue;
            }
            let h = self.p.base().height_of(node);
            let key = (usize::MAX - h, size, rank);
            if best.is_none_or(|(bh, bs, br)| (key.0, key.1, key.2) < (bh, bs, br)) {
                best = Some(key);
            }
        }
        best.map(|(_, _, rank)| self.order_key[rank])
    }

    fn assign(&self, dom: &[u64], node: NodeId, value: usize, tr: &mut Trace) -> Option<Vec<u64>> {
        let mut d = dom.to_vec();
        d[node] = 1 << value;
        tr.push(|| TraceEvent::Assign { node, value });
        match self.propagate(&mut d, vec![node], tr) {
            Ok(()) => Some(d),
            Err(_) => {
                tr.push(|| TraceEvent::Backtrack { node });
                None
            }
        }
    }

    fn first(&self, dom: &[u64], decisions: &mut u64, tr: &mut Trace) -> Option<Vec<u64>> {
        let Some(node) = self.pick(dom, None) else {
            return Some(dom.to_vec());
        };
        for v in ones(dom[node]) {
            *decisions += 1;
            if let Some(d) = self.assign(dom, node, v, tr) {
                if let Some(sol) = self.first(&d, decisions, tr) {
                    return Some(sol);
                }
            }
        }
        None
    }

    fn enumerate(&self, dom: &[u64], decisions: &mut u64, out: &mut Vec<Vec<u64>>, limit: usize) -> Result<()> {
        let Some(node) = self.pick(dom, None) else {
            out.push(dom.to_vec());
            if out.len() > limit {
                return Err(Error::TooLarge {
                    what: "global sections",
                    reached: out.len(),
                    budget: limit,
                });
            }
            return Ok(());
        };
        let mut tr = self.silent();
        for v in ones(dom[node]) {
            *decisions += 1;
            if let Some(d) = self.assign(dom, node, v, &mut tr) {
                self.enumerate(&d, decisions, out, limit)?;
            }
        }
        Ok(())
    }

    /// Counts solutions, multiplying over independent components.
    fn count(&self, dom: &[u64], within: &[bool], decisions: &mut u64) -> Result<u128> {
        let comps = self.components(dom, within);
        let mut total: u128 = 1;
        for comp in comps {
            let c = self.count_component(dom, &comp, decisions)?;
            total = total.checked_mul(c).ok_or(Error::TooLarge {
                what: "section count bits",
                reached: 129,
                budget: 128,
            })?;
            if total == 0 {
                return Ok(0);
            }
        }
        Ok(total)
    }

    fn count_component(&self, dom: &[u64], comp: &[bool], decisions: &mut u64) -> Result<u128> {
        let Some(node) = self.pick(dom, Some(comp)) else {
            return Ok(1);
        };
        let mut tr = self.silent();
        let mut total: u128 = 0;
        for v in ones(dom[node]) {
            *decisions += 1;
            if let Some(d) = self.assign(dom, node, v, &mut tr) {
                let c = self.count(&d, comp, decisions)?;
                total = total.checked_add(c).ok_or(Error::TooLarge {
                    what: "section count bits",
                    reached: 129,
                    budget: 128,
                })?;
            }
        }
        Ok(total)
    }

    /// Connected components of undecided nodes inside `within`.
    fn components(&self, dom: &[u64], within: &[bool]) -> Vec<Vec<bool>> {
        let n = dom.len();
        let open = |i: usize| within[i] && dom[i].count_ones() > 1;
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for s in 0..n {
            if seen[s] || !open(s) {
                continue;
            }
            let mut comp = vec![false; n];
            let mut stack = vec![s];
            seen[s] = true;
            while let Some(u) = stack.pop() {
                comp[u] = true;
                for &(lo, hi) in &self.incident[u] {
                    let w = if lo == u { hi } else { lo };
                    if !seen[w] && open(w) {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
            out.push(comp);
        }
        out
    }

    fn silent(&self) -> Trace {
        Trace {
            on: false,
            cap: 0,
            events: Vec::new(),
            truncated: false,
        }
    }
}

fn to_section(dom: &[u64]) -> GlobalSection {
    GlobalSection {
        choice: dom.iter().map(|m| m.trailing_zeros() as usize).collect(),
    }
}

/// Searches for global sections of `p`, optionally over the nodes of height
/// ≤ `max_height` only.
pub fn global_sections(p: &Presheaf, opts: &SearchOptions) -> Result<SearchResult> {
    let (restricted, kept);
    let target = match opts.max_height {
        Some(h) => {
            (restricted, kept) = p.restricted_to_height(h);
            &restricted
        }
        None => {
            kept = (0..p.len()).collect::<Vec<_>>();
            p
        }
    };
    let run = || search(target, opts);
    let mut res = if opts.workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(opts.workers)
            .build()
            .map_err(|e| Error::Internal(format!("thread pool: {e}")))?
            .install(run)?
    } else {
        run()?
    };
    // map node ids back to the caller's base
    for e in res.trace.iter_mut() {
        match e {
            TraceEvent::Assign { node, .. }
            | TraceEvent::Wipeout { node }
            | TraceEvent::Backtrack { node } => *node = kept[*node],
            TraceEvent::Prune { node, via, .. } => {
                *node = kept[*node];
                *via = (kept[via.0], kept[via.1]);
            }
        }
    }
    res.searched_nodes = kept;
    Ok(res)
}

fn search(p: &Presheaf, opts: &SearchOptions) -> Result<SearchResult> {
    let solver = Solver::new(p, opts.trace_cap);
    let mut tr = Trace {
        on: opts.mode == SearchMode::Exists,
        cap: solver.trace_cap,
        events: Vec::new(),
        truncated: false,
    };
    let mut dom = solver.initial();
    let all: Vec<NodeId> = (0..p.len()).collect();
    let mut decisions = 0u64;
    let consistent = dom.iter().all(|&d| d != 0) && solver.propagate(&mut dom, all, &mut tr).is_ok();
    let mut result = SearchResult {
        satisfiable: false,
        sections: Vec::new(),
        count: None,
        decisions: 0,
        searched_nodes: Vec::new(),
        trace: Vec::new(),
        trace_truncated: false,
    };
    match opts.mode {
        SearchMode::Exists => {
            if consistent {
                if let Some(sol) = solver.first(&dom, &mut decisions, &mut tr) {
                    result.sections.push(to_section(&sol));
                }
            }
            result.satisfiable = !result.sections.is_empty();
        }
        SearchMode::Count => {
            let count = if consistent {
                let within = vec![true; p.len()];
                // fan out over the first branching node
                match solver.pick(&dom, None) {
                    None => 1,
                    Some(node) => {
                        let values: Vec<usize> = ones(dom[node]).collect();
                        let parts: Vec<Result<(u128, u64)>> = values
                            .par_iter()
                            .map(|&v| {
                                let mut dec = 1u64;
                                let mut t = solver.silent();
                                match solver.assign(&dom, node, v, &mut t) {
                                    Some(d) => Ok((solver.count(&d, &within, &mut dec)?, dec)),
                                    None => Ok((0, dec)),
                                }
                            })
                            .collect();
                        let mut total = 0u128;
                        for part in parts {
                            let (c, d) = part?;
                            total += c;
                            decisions += d;
                        }
                        total
                    }
                }
            } else {
                0
            };
            result.count = Some(count);
            result.satisfiable = count > 0;
        }
        SearchMode::Enumerate { limit } => {
            let mut sols: Vec<Vec<u64>> = Vec::new();
            if consistent {
                match solver.pick(&dom, None) {
                    None => sols.push(dom.clone()),
                    Some(node) => {
                        let values: Vec<usize> = ones(dom[node]).collect();
                        let parts: Vec<Result<(Vec<Vec<u64>>, u64)>> = values
                            .par_iter()
                            .map(|&v| {
                                let mut dec = 1u64;
                                let mut out = Vec::new();
                                let mut t = solver.silent();
                                if let Some(d) = solver.assign(&dom, node, v, &mut t) {
                                    solver.enumerate(&d, &mut dec, &mut out, limit)?;
                                }
                                Ok((out, dec))
                            })
                            .collect();
                        for part in parts {
                            let (s, d) = part?;
                            sols.extend(s);
                            decisions += d;
                        }
                    }
                }
            }
            if sols.len() > limit {
                return Err(Error::TooLarge {
                    what: "global sections",
                    reached: sols.len(),
                    budget: limit,
                });
            }
            let mut sections: Vec<GlobalSection> = sols.iter().map(|d| to_section(d)).collect();
            sections.sort();
            result.count = Some(sections.len() as u128);
            result.satisfiable = !sections.is_empty();
            result.sections = sections;
        }
    }
    for s in &result.sections {
        if !p.is_section(s) {
            return Err(Error::Internal("search produced an incompatible section".into()));
        }
    }
    result.decisions = decisions;
    result.trace = tr.events;
    result.trace_truncated = tr.truncated;
    Ok(result)
}

/// Sections by brute force over all choices; for cross-checking only.
pub fn brute_force_sections(p: &Presheaf) -> Vec<GlobalSection> {
    let n = p.len();
    let mut out = Vec::new();
    let mut choice = vec![0usize; n];
    loop {
        let s = GlobalSection {
            choice: choice.clone(),
        };
        if p.is_section(&s) {
            out.push(s);
        }
        let mut i = 0;
        loop {
            if i == n {
                out.sort();
                return out;
            }
            choice[i] += 1;
            if choice[i] < p.fiber_size(i) {
                break;
            }
            choice[i] = 0;
            i += 1;
        }
    }
}
