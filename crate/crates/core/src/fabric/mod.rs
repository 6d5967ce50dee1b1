//! Structural model of timed paths: nodes, LUTs, launch/capture FFs.
//!
//! A path runs launch FF → node run → LUT → node run → LUT → … → node run →
//! capture FF. Node runs are one-or-more wires (each wire and its entry
//! switch are treated as a single delay component); every LUT is fed by the
//! node run before it, and the final node run drives the capture FF. Paths
//! carry a transition polarity because the measurement style propagates a
//! single transition direction end to end, and only same-polarity paths are
//! ever compared.

mod generate;
mod parse;

pub use generate::{generate_design, GeneratorParams};
pub use parse::{
    design_digest, parse_design, parse_design_str, read_design, write_design, write_design_file,
};

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ComponentKind {
    Lut,
    Node,
    LaunchFf,
    CaptureFf,
}

/// A named delay component. Identity is `(kind, name)`; names are compared
/// as exact strings, never positionally.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ComponentId {
    pub kind: ComponentKind,
    pub name: String,
}

impl ComponentId {
    pub fn new(kind: ComponentKind, name: impl Into<String>) -> Self {
        Self {
            kind,
            name: name.into(),
        }
    }
}

/// Index into a design's component catalog. Paths store these instead of
/// owned strings so set operations over pairs reduce to integer merges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CompRef(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Polarity {
    Rising,
    Falling,
}

impl Polarity {
    pub fn tag(self) -> &'static str {
        match self {
            Polarity::Rising => "R",
            Polarity::Falling => "F",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "R" => Some(Polarity::Rising),
            "F" => Some(Polarity::Falling),
            _ => None,
        }
    }
}

/// One timed path. `components` alternates node runs and LUTs, starting with
/// the node run out of the launch FF and ending with the node run into the
/// capture FF (the launch and capture FFs themselves are not in the list).
#[derive(Debug, Clone, PartialEq)]
pub struct PathRecord {
    pub path_id: u32,
    pub polarity: Polarity,
    pub launch_ff: CompRef,
    pub capture_ff: CompRef,
    pub components: Vec<CompRef>,
    pub lut_count: u32,
    pub node_count: u32,
}

/// A full design: paths plus the catalog they reference.
#[derive(Debug, Clone)]
pub struct FabricDesign {
    paths: Vec<PathRecord>,
    npr: u64,
    npf: u64,
    catalog: Vec<ComponentId>,
    index: HashMap<ComponentId, CompRef>,
    pub metadata: Vec<(String, String)>,
}

impl FabricDesign {
    pub fn new() -> Self {
        Self {
            paths: Vec::new(),
            npr: 0,
            npf: 0,
            catalog: Vec::new(),
            index: HashMap::new(),
            metadata: Vec::new(),
        }
    }

    pub fn paths(&self) -> &[PathRecord] {
        &self.paths
    }

    pub fn path(&self, id: u32) -> &PathRecord {
        &self.paths[id as usize]
    }

    pub fn np(&self) -> usize {
        self.paths.len()
    }

    /// Count of rising paths.
    pub fn npr(&self) -> u64 {
        self.npr
    }

    /// Count of falling paths.
    pub fn npf(&self) -> u64 {
        self.npf
    }

    pub fn catalog(&self) -> &[ComponentId] {
        &self.catalog
    }

    pub fn component(&self, r: CompRef) -> &ComponentId {
        &self.catalog[r.0 as usize]
    }

    pub fn kind(&self, r: CompRef) -> ComponentKind {
        self.catalog[r.0 as usize].kind
    }

    pub fn intern(&mut self, id: ComponentId) -> CompRef {
        if let Some(&r) = self.index.get(&id) {
            return r;
        }
        let r = CompRef(self.catalog.len() as u32);
        self.catalog.push(id.clone());
        self.index.insert(id, r);
        r
    }

    pub fn lookup(&self, id: &ComponentId) -> Option<CompRef> {
        self.index.get(id).copied()
    }

    /// Append a path built from component names. Counts are recomputed from
    /// the segment structure, never taken on faith from the caller.
    ///
    /// `segments` lists `(node names, Some(lut name))` for interior segments
    /// and `(node names, None)` for the final run into the capture FF.
    pub fn push_path(
        &mut self,
        polarity: Polarity,
        launch: &str,
        capture: &str,
        segments: &[(Vec<String>, Option<String>)],
    ) -> Result<u32> {
        let path_id = self.paths.len() as u32;
        if segments.is_empty() || segments.iter().all(|(nodes, lut)| nodes.is_empty() && lut.is_none()) {
            return Err(Error::EmptyPath(path_id as u64));
        }
        let launch_ff = self.intern(ComponentId::new(ComponentKind::LaunchFf, launch));
        let capture_ff = self.intern(ComponentId::new(ComponentKind::CaptureFf, capture));
        let mut components = Vec::new();
        let mut lut_count = 0u32;
        let mut node_count = 0u32;
        for (si, (nodes, lut)) in segments.iter().enumerate() {
            let last = si == segments.len() - 1;
            if nodes.is_empty() {
                return Err(Error::Parse {
                    line: 0,
                    msg: format!("path {path_id}: segment {si} has no nodes"),
                });
            }
            if last != lut.is_none() {
                return Err(Error::Parse {
                    line: 0,
                    msg: format!(
                        "path {path_id}: only the final segment may omit the LUT, and it must"
                    ),
                });
            }
            for n in nodes {
                components.push(self.intern(ComponentId::new(ComponentKind::Node, n)));
                node_count += 1;
            }
            if let Some(l) = lut {
                components.push(self.intern(ComponentId::new(ComponentKind::Lut, l)));
                lut_count += 1;
            }
        }
        if lut_count == 0 {
            return Err(Error::Parse {
                line: 0,
                msg: format!("path {path_id}: a path must traverse at least one LUT"),
            });
        }
        match polarity {
            Polarity::Rising => self.npr += 1,
            Polarity::Falling => self.npf += 1,
        }
        self.paths.push(PathRecord {
            path_id,
            polarity,
            launch_ff,
            capture_ff,
            components,
            lut_count,
            node_count,
        });
        Ok(path_id)
    }

    /// Segment view of a path: `(node runs, Some(lut))`, final run has `None`.
    pub fn segments(&self, path: &PathRecord) -> Vec<(Vec<CompRef>, Option<CompRef>)> {
        let mut segs = Vec::new();
        let mut nodes = Vec::new();
        for &c in &path.components {
            match self.kind(c) {
                ComponentKind::Node => nodes.push(c),
                ComponentKind::Lut => {
                    segs.push((std::mem::take(&mut nodes), Some(c)));
                }
                _ => unreachable!("FFs never appear in a component list"),
            }
        }
        segs.push((nodes, None));
        segs
    }

    /// Checks the structural invariants of every path. Parse and generation
    /// both funnel through this.
    pub fn validate(&self) -> Result<()> {
        if self.npr + self.npf != self.paths.len() as u64 {
            return Err(Error::Parse {
                line: 0,
                msg: "polarity counts do not sum to path count".into(),
            });
        }
        for (i, p) in self.paths.iter().enumerate() {
            if p.path_id as usize != i {
                return Err(Error::Parse {
                    line: 0,
                    msg: format!("path ids not dense: expected {i}, found {}", p.path_id),
                });
            }
            if p.components.is_empty() {
                return Err(Error::EmptyPath(p.path_id as u64));
            }
            // Alternation: (node+ lut)+ node+
            let mut nodes_in_run = 0u32;
            let mut luts = 0u32;
            let mut nodes = 0u32;
            for &c in &p.components {
                match self.kind(c) {
                    ComponentKind::Node => {
                        nodes_in_run += 1;
                        nodes += 1;
                    }
                    ComponentKind::Lut => {
                        if nodes_in_run == 0 {
                            return Err(Error::Parse {
                                line: 0,
                                msg: format!("path {}: LUT without a preceding node run", i),
                            });
                        }
                        nodes_in_run = 0;
                        luts += 1;
                    }
                    _ => {
                        return Err(Error::Parse {
                            line: 0,
                            msg: format!("path {}: FF inside component list", i),
                        })
                    }
                }
            }
            if nodes_in_run == 0 {
                return Err(Error::Parse {
                    line: 0,
                    msg: format!("path {}: must end with a node run into the capture FF", i),
                });
            }
            if luts == 0 {
                return Err(Error::Parse {
                    line: 0,
                    msg: format!("path {}: no LUT", i),
                });
            }
            if luts != p.lut_count || nodes != p.node_count {
                return Err(Error::Parse {
                    line: 0,
                    msg: format!("path {}: stored counts disagree with components", i),
                });
            }
            if self.kind(p.launch_ff) != ComponentKind::LaunchFf
                || self.kind(p.capture_ff) != ComponentKind::CaptureFf
            {
                return Err(Error::Parse {
                    line: 0,
                    msg: format!("path {}: endpoint kinds wrong", i),
                });
            }
        }
        Ok(())
    }
}

impl Default for FabricDesign {
    fn default() -> Self {
        Self::new()
    }
}

/// Total component count (LUTs + nodes) of a path: the grouping key used
/// when per-path variances are aggregated by path length.
pub fn lut_node_class(path: &PathRecord) -> u32 {
    path.lut_count + path.node_count
}
