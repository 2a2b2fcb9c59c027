//! Bundled models and their manifests.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bsub::{enumerate_bsub_star, BSubPoset};
use crate::error::{Error, Result};
use crate::io::parse_greechie_json;
use crate::oml::{build_oml_from_greechie, build_oml_from_rays, parse_ray_file, BuildOptions, FiniteOml, Undersized};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SourceKind {
    Rays,
    Greechie,
}

/// A bundled dataset: source text plus its recorded manifest.
#[derive(Clone, Copy, Debug)]
pub struct Dataset {
    pub name: &'static str,
    pub file: &'static str,
    pub kind: SourceKind,
    pub source: &'static str,
    pub manifest: &'static str,
}

macro_rules! dataset {
    ($name:literal, $file:literal, $kind:expr) => {
        Dataset {
            name: $name,
            file: $file,
            kind: $kind,
            source: include_str!(concat!("../data/", $file)),
            manifest: include_str!(concat!("../data/", $name, ".manifest.json")),
        }
    };
}

pub const DATASETS: &[Dataset] = &[
    dataset!("basis3", "basis3.rays", SourceKind::Rays),
    dataset!("dim2", "dim2.rays", SourceKind::Rays),
    dataset!("block4", "block4.rays", SourceKind::Rays),
    dataset!("cube8", "cube8.json", SourceKind::Greechie),
    dataset!("twoblock", "twoblock.json", SourceKind::Greechie),
    dataset!("cab18", "cab18.rays", SourceKind::Rays),
    dataset!("peres33", "peres33.rays", SourceKind::Rays),
];

pub fn find(name: &str) -> Option<&'static Dataset> {
    DATASETS.iter().find(|d| d.name == name)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub rays: usize,
    pub elements: usize,
    pub atoms: usize,
    pub blocks: usize,
    pub star_nodes: usize,
    pub points: usize,
    pub lines: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    pub ring: u32,
    /// Policy for undersized orthogonal sets: reject, complete or ignore.
    pub undersized: String,
    pub counts: Counts,
}

/// A loaded model with its star poset and checked manifest.
#[derive(Clone, Debug)]
pub struct ModelBundle {
    pub name: String,
    pub sources: Vec<String>,
    pub oml: FiniteOml,
    pub star: BSubPoset,
    pub manifest: Manifest,
}

pub fn parse_undersized(s: &str) -> Result<Undersized> {
    match s {
        "reject" => Ok(Undersized::Reject),
        "complete" => Ok(Undersized::Complete),
        "ignore" => Ok(Undersized::Ignore),
        other => Err(Error::Parse(format!("unknown undersized policy {other:?}"))),
    }
}

pub fn undersized_name(u: Undersized) -> &'static str {
    match u {
        Undersized::Reject => "reject",
        Undersized::Complete => "complete",
        Undersized::Ignore => "ignore",
    }
}

/// Builds a model from source text.
pub fn build_from_source(kind: SourceKind, text: &str, opts: &BuildOptions) -> Result<(FiniteOml, usize)> {
    match kind {
        SourceKind::Rays => {
            let f = parse_ray_file(text)?;
            let n = f.rays.len();
            Ok((build_oml_from_rays(&f.rays, f.dim, f.ring, opts)?, n))
        }
        SourceKind::Greechie => {
            let blocks = parse_greechie_json(text)?;
            Ok((build_oml_from_greechie(&blocks)?, 0))
        }
    }
}

/// Manifest describing a freshly built model.
pub fn compute_manifest(name: &str, source: &str, oml: &FiniteOml, star: &BSubPoset, rays: usize, undersized: Undersized) -> Manifest {
    Manifest {
        name: name.to_string(),
        source: source.to_string(),
        dim: oml.dim(),
        ring: oml.ring(),
        undersized: undersized_name(undersized).to_string(),
        counts: Counts {
            rays,
            elements: oml.len(),
            atoms: oml.atoms().len(),
            blocks: oml.blocks().len(),
            star_nodes: star.len(),
            points: star.points().len(),
            lines: star.lines().len(),
        },
    }
}

impl Dataset {
    pub fn recorded_manifest(&self) -> Result<Manifest> {
        Ok(serde_json::from_str(self.manifest)?)
    }

    /// Builds the dataset and checks every manifest count.
    pub fn load(&self) -> Result<ModelBundle> {
        let recorded = self.recorded_manifest()?;
        let undersized = parse_undersized(&recorded.undersized)?;
        let (oml, rays) = build_from_source(self.kind, self.source, &BuildOptions { undersized })?;
        let star = enumerate_bsub_star(&oml);
        let computed = compute_manifest(self.name, self.file, &oml, &star, rays, undersized);
        if computed != recorded {
            return Err(Error::Internal(format!(
                "manifest mismatch for {}: recorded {:?}, recomputed {:?}",
                self.name, recorded.counts, computed.counts
            )));
        }
        Ok(ModelBundle {
            name: self.name.to_string(),
            sources: vec![self.file.to_string()],
            oml,
            star,
            manifest: computed,
        })
    }
}

/// Loads a bundled dataset by name, or a ray/Greechie file by path.
pub fn load_model(spec: &str, opts: &BuildOptions) -> Result<ModelBundle> {
    if let Some(d) = find(spec) {
        return d.load();
    }
    let path = Path::new(spec);
    let text = std::fs::read_to_string(path)?;
    let kind = if path.extension().is_some_and(|e| e == "json") {
        SourceKind::Greechie
    } else {
        SourceKind::Rays
    };
    let (oml, rays) = build_from_source(kind, &text, opts)?;
    let star = enumerate_bsub_star(&oml);
    let manifest = compute_manifest(spec, spec, &oml, &star, rays, opts.undersized);
    Ok(ModelBundle {
        name: spec.to_string(),
        sources: vec![spec.to_string()],
        oml,
        star,
        manifest,
    })
}
