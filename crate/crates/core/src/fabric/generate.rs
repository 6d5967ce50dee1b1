//! Synthetic layered-DAG design generation.
//!
//! The generator builds, per polarity, a layered network: launch FFs feed the
//! first LUT layer and each LUT layer feeds the next. Capture FFs are tapped
//! off every last-layer LUT and off a strided subset of interior LUTs, so
//! enumerated paths span a range of LUT depths and the population's delay
//! spread dwarfs per-instance variation. Each wire between two logic
//! components is a node run of random length; runs are shared by every path
//! that traverses the same edge, so overlapping paths share components
//! exactly as overlapping routes do in a real fabric.
//!
//! Paths ending at the same capture FF necessarily share its tap LUT and
//! traverse the same number of LUTs, so every multiply-reached capture
//! yields equal-length pairs — the shape the pairing analysis feeds on.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::rng;

use super::{FabricDesign, Polarity};

#[derive(Debug, Clone)]
pub struct GeneratorParams {
    /// Launch FFs per polarity network.
    pub n_inputs: u32,
    /// LUT layers between launch and capture.
    pub n_layers: u32,
    pub luts_per_layer: u32,
    /// Inputs wired into each LUT (capped by the previous layer's size).
    pub fanin: u32,
    /// Minimum out-degree driven from each component; ≥ 2 creates the
    /// reconvergence the pairing analysis requires.
    pub fanout: u32,
    /// Inclusive range of nodes per run.
    pub nodes_per_segment: (u32, u32),
    /// Paths enumerated per polarity before truncation stops the walk.
    pub target_path_count: u32,
    pub seed: u64,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        Self {
            n_inputs: 16,
            n_layers: 6,
            luts_per_layer: 16,
            fanin: 3,
            fanout: 2,
            nodes_per_segment: (1, 3),
            target_path_count: 1000,
            seed: 1,
        }
    }
}

impl GeneratorParams {
    fn validate(&self) -> Result<()> {
        if self.n_inputs < 1
            || self.n_layers < 1
            || self.luts_per_layer < 1
            || self.fanin < 1
            || self.target_path_count < 1
        {
            return Err(Error::UnsatisfiableParams("all counts must be ≥ 1".into()));
        }
        if self.fanout < 2 {
            return Err(Error::UnsatisfiableParams(
                "fanout must be ≥ 2 to create reconvergent path pairs".into(),
            ));
        }
        let (lo, hi) = self.nodes_per_segment;
        if lo < 1 || lo > hi {
            return Err(Error::UnsatisfiableParams(
                "nodes_per_segment range must satisfy 1 ≤ lo ≤ hi".into(),
            ));
        }
        Ok(())
    }
}

/// Per-polarity wiring graph. Vertex numbering: launches, then LUT layers in
/// order. Tapped LUTs drive a capture FF of their own; every last-layer LUT
/// is tapped, plus a deterministic subset of each interior layer, so path
/// depths (and with them delay magnitudes) spread widely across the design.
struct LayerGraph {
    /// Adjacency: vertex → (edge id, successor vertex). Successor `None`
    /// marks the edge into the vertex's capture FF.
    succ: Vec<Vec<(usize, Option<usize>)>>,
    /// Node names of each edge's run.
    edge_nodes: Vec<Vec<String>>,
    /// Capture FF index per tapped vertex.
    capture_of: Vec<Option<usize>>,
    n_inputs: usize,
    first_lut: usize,
    lut_names: Vec<String>,
}

/// Interior layers tap one LUT in eight; the final layer taps all of them.
const TAP_STRIDE: usize = 8;

fn build_layer_graph(params: &GeneratorParams, pol: Polarity, rng: &mut ChaCha8Rng) -> LayerGraph {
    let tag = pol.tag();
    let n_inputs = params.n_inputs as usize;
    let per_layer = params.luts_per_layer as usize;
    let n_layers = params.n_layers as usize;
    let total = n_inputs + n_layers * per_layer;

    let mut succ: Vec<Vec<(usize, Option<usize>)>> = vec![Vec::new(); total];
    let mut edge_nodes: Vec<Vec<String>> = Vec::new();
    let mut lut_names = Vec::with_capacity(n_layers * per_layer);
    for layer in 0..n_layers {
        for i in 0..per_layer {
            lut_names.push(format!("{tag}/L{layer}_{i}"));
        }
    }

    let (lo, hi) = params.nodes_per_segment;
    let add_edge = |rng: &mut ChaCha8Rng,
                        succ: &mut Vec<Vec<(usize, Option<usize>)>>,
                        edge_nodes: &mut Vec<Vec<String>>,
                        from: usize,
                        to: Option<usize>| {
        let eid = edge_nodes.len();
        let run_len = rng.gen_range(lo..=hi) as usize;
        edge_nodes.push((0..run_len).map(|t| format!("{tag}/N{eid}_{t}")).collect());
        succ[from].push((eid, to));
    };

    for layer in 0..n_layers {
        let (src_base, src_count) = if layer == 0 {
            (0usize, n_inputs)
        } else {
            (n_inputs + (layer - 1) * per_layer, per_layer)
        };
        let dst_base = n_inputs + layer * per_layer;

        // Each LUT draws `fanin` distinct sources.
        let mut wired: Vec<Vec<usize>> = vec![Vec::new(); per_layer];
        let k = (params.fanin as usize).min(src_count);
        for w in wired.iter_mut() {
            let mut pool: Vec<usize> = (0..src_count).collect();
            for _ in 0..k {
                let pick = rng.gen_range(0..pool.len());
                w.push(pool.swap_remove(pick));
            }
            w.sort_unstable();
        }
        // Then every source is topped up to the requested fanout.
        let mut out_deg = vec![0usize; src_count];
        for w in &wired {
            for &s in w {
                out_deg[s] += 1;
            }
        }
        for s in 0..src_count {
            while out_deg[s] < params.fanout as usize {
                let unconnected: Vec<usize> = (0..per_layer)
                    .filter(|&d| !wired[d].contains(&s))
                    .collect();
                if unconnected.is_empty() {
                    break;
                }
                let d = unconnected[rng.gen_range(0..unconnected.len())];
                wired[d].push(s);
                out_deg[s] += 1;
            }
        }
        for (di, w) in wired.iter().enumerate() {
            for &s in w {
                add_edge(rng, &mut succ, &mut edge_nodes, src_base + s, Some(dst_base + di));
            }
        }
    }

    // Capture taps: every final-layer LUT, plus a strided subset of each
    // interior layer from the second onward. Tap edges are appended after
    // the interior wiring, so walkers yield a path at the tap and then keep
    // descending.
    let mut capture_of = vec![None; total];
    let mut n_captures = 0usize;
    for layer in 0..n_layers {
        for i in 0..per_layer {
            let tapped = layer == n_layers - 1 || (layer >= 1 && i % TAP_STRIDE == 0);
            if tapped {
                let vertex = n_inputs + layer * per_layer + i;
                capture_of[vertex] = Some(n_captures);
                n_captures += 1;
                add_edge(rng, &mut succ, &mut edge_nodes, vertex, None);
            }
        }
    }

    LayerGraph {
        succ,
        edge_nodes,
        capture_of,
        n_inputs,
        first_lut: n_inputs,
        lut_names,
    }
}

/// Depth-first path enumeration from one launch FF, yielding segment lists.
struct PathWalker<'g> {
    graph: &'g LayerGraph,
    /// Stack of (vertex, next-successor-index).
    stack: Vec<(usize, usize)>,
    /// Edges taken to reach the top of the stack.
    trail: Vec<usize>,
    done: bool,
}

impl<'g> PathWalker<'g> {
    fn new(graph: &'g LayerGraph, launch: usize) -> Self {
        Self {
            graph,
            stack: vec![(launch, 0)],
            trail: Vec::new(),
            done: false,
        }
    }

    /// Next complete launch→capture trail, as (edge ids, capture lut vertex).
    fn next_trail(&mut self) -> Option<(Vec<usize>, usize)> {
        if self.done {
            return None;
        }
        loop {
            let Some(&(vertex, si)) = self.stack.last() else {
                self.done = true;
                return None;
            };
            let succs = &self.graph.succ[vertex];
            if si >= succs.len() {
                self.stack.pop();
                self.trail.pop();
                continue;
            }
            self.stack.last_mut().unwrap().1 += 1;
            let (eid, to) = succs[si];
            match to {
                Some(next) => {
                    self.stack.push((next, 0));
                    self.trail.push(eid);
                }
                None => {
                    // Capture edge: a full path. Do not push; continue from here.
                    let mut edges = self.trail.clone();
                    edges.push(eid);
                    return Some((edges, vertex));
                }
            }
        }
    }
}

/// Generates a synthetic design. Deterministic for a fixed seed; fails with
/// `UNSATISFIABLE_PARAMS` when the parameters cannot produce at least one
/// equal-length path pair sharing a capture FF per polarity.
pub fn generate_design(params: &GeneratorParams) -> Result<FabricDesign> {
    params.validate()?;
    let mut design = FabricDesign::new();
    design.metadata.push(("generator".into(), "layered-dag".into()));
    design.metadata.push(("seed".into(), params.seed.to_string()));

    for (pi, pol) in [Polarity::Rising, Polarity::Falling].into_iter().enumerate() {
        let mut grng = rng::stream(params.seed, "design", pi as u64, 0);
        let graph = build_layer_graph(params, pol, &mut grng);

        // Round-robin across launch FFs so truncation keeps launch diversity.
        let mut walkers: Vec<PathWalker> =
            (0..graph.n_inputs).map(|l| PathWalker::new(&graph, l)).collect();
        let mut emitted = 0u32;
        let mut live = true;
        let mut reconverged = false;
        let mut seen_endpoints: Vec<(usize, u32)> = Vec::new();
        while emitted < params.target_path_count && live {
            live = false;
            for (launch, walker) in walkers.iter_mut().enumerate() {
                if emitted >= params.target_path_count {
                    break;
                }
                let Some((edges, last_vertex)) = walker.next_trail() else {
                    continue;
                };
                live = true;
                let capture_idx = graph.capture_of[last_vertex]
                    .expect("trail ends at a tapped vertex");
                let capture_name = format!("{}/CFF{capture_idx}", pol.tag());
                let launch_name = format!("{}/LFF{}", pol.tag(), launch);

                let mut segments: Vec<(Vec<String>, Option<String>)> = Vec::new();
                let mut vertex = launch;
                for (idx, &eid) in edges.iter().enumerate() {
                    let nodes = graph.edge_nodes[eid].clone();
                    if idx == edges.len() - 1 {
                        segments.push((nodes, None));
                    } else {
                        let (_, to) = graph.succ[vertex]
                            .iter()
                            .find(|(e, _)| *e == eid)
                            .copied()
                            .expect("edge on trail");
                        let to = to.expect("interior edge has a successor");
                        let lut = graph.lut_names[to - graph.first_lut].clone();
                        segments.push((nodes, Some(lut)));
                        vertex = to;
                    }
                }
                design.push_path(pol, &launch_name, &capture_name, &segments)?;
                emitted += 1;

                if let Some(entry) = seen_endpoints.iter_mut().find(|(v, _)| *v == last_vertex) {
                    entry.1 += 1;
                    reconverged = true;
                } else {
                    seen_endpoints.push((last_vertex, 1));
                }
            }
        }
        if emitted == 0 {
            return Err(Error::UnsatisfiableParams(format!(
                "no {} paths could be enumerated",
                pol.tag()
            )));
        }
        if !reconverged {
            return Err(Error::UnsatisfiableParams(format!(
                "no two {} paths share a capture FF; increase fanin/fanout or path budget",
                pol.tag()
            )));
        }
    }

    design.validate()?;
    Ok(design)
}
