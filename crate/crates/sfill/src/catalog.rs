//! The classification output: every filling found for an input, which of
//! them is the minimal resolution, and the blowdown relations between them.

use serde::{Deserialize, Serialize};

use crate::blowdown::{blowdown_graph, BlowdownEdge, BlowdownGraph};
use crate::curveconfig::CurveConfiguration;
use crate::enumerate::{enumerate_fillings, minimal_resolution_config, EnumError, SearchBudget};
use crate::plumbing::{build_concave_cap, build_star_graph, SeifertData};

pub const SCHEMA: u32 = 1;
pub const TOOL_VERSION: &str = concat!("sfill ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub id: usize,
    pub b2: i64,
    pub reachable: bool,
    pub minimal_resolution: bool,
    pub config: CurveConfiguration,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Catalog {
    pub schema: u32,
    pub tool_version: String,
    pub input: String,
    pub budget: SearchBudget,
    pub states_explored: usize,
    pub entries: Vec<CatalogEntry>,
    pub edges: Vec<BlowdownEdge>,
    /// Blowdown results that matched no entry; nonzero means the search
    /// missed a filling.
    pub unmatched_blowdowns: usize,
}

pub fn build_catalog(s: &SeifertData, budget: SearchBudget) -> Result<Catalog, EnumError> {
    let cap = build_concave_cap(s)?;
    let symmetries = cap.arm_symmetries();
    let found = enumerate_fillings(s, budget)?;
    let min_res = minimal_resolution_config(s)?
        .to_homological_data()
        .expect("minimal resolution has a full cap")
        .canonical_key(&symmetries);
    let root = found.fillings.iter().position(|f| f.key == min_res);
    let BlowdownGraph { edges, reachable, unmatched, .. } = blowdown_graph(&found.fillings, root, &symmetries);
    let entries = found
        .fillings
        .into_iter()
        .enumerate()
        .map(|(id, f)| CatalogEntry {
            id,
            b2: f.b2(),
            reachable: reachable[id],
            minimal_resolution: Some(id) == root,
            config: f.config,
        })
        .collect();
    Ok(Catalog {
        schema: SCHEMA,
        tool_version: TOOL_VERSION.to_string(),
        input: s.to_string(),
        budget,
        states_explored: found.states_explored,
        entries,
        edges,
        unmatched_blowdowns: unmatched,
    })
}

impl Catalog {
    pub fn root(&self) -> Option<usize> {
        self.entries.iter().position(|e| e.minimal_resolution)
    }

    pub fn graph(&self) -> BlowdownGraph {
        BlowdownGraph {
            edges: self.edges.clone(),
            root: self.root(),
            reachable: self.entries.iter().map(|e| e.reachable).collect(),
            unmatched: self.unmatched_blowdowns,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("catalog serializes");
        s.push('\n');
        s
    }

    pub fn from_json(s: &str) -> serde_json::Result<Catalog> {
        serde_json::from_str(s)
    }

    /// `Gamma`, `K`, every entry and the blowdown graph, one DOT graph each.
    pub fn to_dot(&self) -> Result<String, crate::plumbing::SeifertError> {
        let s: SeifertData = self.input.parse()?;
        let mut out = build_star_graph(&s).to_dot("Gamma");
        out.push_str(&build_concave_cap(&s)?.graph().to_dot("K"));
        for e in &self.entries {
            out.push_str(&e.config.to_dot(&format!("W{}", e.id)));
        }
        let labels: Vec<String> = self.entries.iter().map(|e| format!("W{} b2={}", e.id, e.b2)).collect();
        out.push_str(&self.graph().to_dot(&labels));
        Ok(out)
    }
}
