//! JSON input formats: Greechie block lists, operators and states.

use serde::Deserialize;

use crate::daseinisation::SelfAdjointOp;
use crate::error::{Error, Result};
use crate::measures::State;
use crate::oml::{ElemId, FiniteOml};
use crate::scalar::{parse_rational, QuadScalar};

#[derive(Deserialize)]
struct GreechieFile {
    blocks: Vec<Vec<String>>,
}

/// Parses `{"blocks": [["a","b","c"], ...]}`.
pub fn parse_greechie_json(text: &str) -> Result<Vec<Vec<String>>> {
    let f: GreechieFile =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("greechie file: {e}")))?;
    Ok(f.blocks)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ProjectionRef {
    Label(String),
    Block { block: usize, atoms: Vec<AtomRef> },
}

#[derive(Deserialize)]
#[serde(untagged)]
enum AtomRef {
    Index(usize),
    Label(String),
}

#[derive(Deserialize)]
struct TermJson {
    coeff: String,
    projection: ProjectionRef,
}

#[derive(Deserialize)]
struct OperatorFile {
    terms: Vec<TermJson>,
}

fn resolve_projection(o: &FiniteOml, p: &ProjectionRef) -> Result<ElemId> {
    match p {
        ProjectionRef::Label(l) => o
            .find_label(l)
            .ok_or_else(|| Error::Parse(format!("unknown element {l:?}"))),
        ProjectionRef::Block { block, atoms } => {
            let b = o
                .blocks()
                .get(*block)
                .ok_or_else(|| Error::Parse(format!("no block {block}")))?;
            let mut mask = 0usize;
            for a in atoms {
                let k = match a {
                    AtomRef::Index(k) => *k,
                    AtomRef::Label(l) => {
                        let e = o
                            .find_label(l)
                            .ok_or_else(|| Error::Parse(format!("unknown atom {l:?}")))?;
                        b.atoms
                            .iter()
                            .position(|&x| x == e)
                            .ok_or_else(|| Error::Parse(format!("{l:?} is not an atom of block {block}")))?
                    }
                };
                if k >= b.atoms.len() {
                    return Err(Error::Parse(format!("block {block} has no atom {k}")));
                }
                mask |= 1 << k;
            }
            Ok(b.element(mask))
        }
    }
}

/// Parses `{"terms": [{"coeff": "p/q", "projection": ...}]}`, where a
/// projection is an element label or `{"block": i, "atoms": [...]}` with
/// atoms given by index within the block or by label.
pub fn parse_operator_json(o: &FiniteOml, text: &str) -> Result<SelfAdjointOp> {
    let f: OperatorFile =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("operator file: {e}")))?;
    let terms = f
        .terms
        .iter()
        .map(|t| Ok((parse_rational(&t.coeff)?, resolve_projection(o, &t.projection)?)))
        .collect::<Result<Vec<_>>>()?;
    SelfAdjointOp::new(o, terms)
}

#[derive(Deserialize)]
struct WeightJson {
    w: String,
    ray: Vec<serde_json::Value>,
}

#[derive(Deserialize)]
struct StateFile {
    weights: Vec<WeightJson>,
}

/// Parses `{"weights": [{"w": "p/q", "ray": [...]}]}`; ray entries are
/// integers or scalar strings in the model's ring.
pub fn parse_state_json(o: &FiniteOml, text: &str) -> Result<State> {
    let dim = o.dim().ok_or(Error::NeedsMatrixMode)?;
    let f: StateFile = serde_json::from_str(text).map_err(|e| Error::Parse(format!("state file: {e}")))?;
    let weights = f
        .weights
        .iter()
        .map(|w| {
            let ray = w
                .ray
                .iter()
                .map(|v| match v {
                    serde_json::Value::Number(n) => n
                        .as_i64()
                        .map(QuadScalar::from_int)
                        .ok_or_else(|| Error::Parse(format!("ray entry {n} is not an integer"))),
                    serde_json::Value::String(s) => QuadScalar::parse(s, o.ring()),
                    other => Err(Error::Parse(format!("ray entry {other}"))),
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((parse_rational(&w.w)?, ray))
        })
        .collect::<Result<Vec<_>>>()?;
    State::new(dim, weights)
}
