//! Directed acyclic linear coding networks over Z_d.
//!
//! Every node applies a matrix to the vector of messages on its in-ports and
//! emits the result on its out-ports. Port order is declaration order: in-port
//! `k` is column `k` of the node matrix, out-port `j` is row `j`.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use rand::Rng;
use thiserror::Error;

use crate::linalg::{LinalgError, RingMatrix};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeSpec {
    pub id: String,
    pub matrix: RingMatrix,
}

/// `(node id, port index)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PortRef {
    pub node: String,
    pub port: usize,
}

impl PortRef {
    pub fn new(node: impl Into<String>, port: usize) -> Self {
        Self { node: node.into(), port }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Link {
    pub from: PortRef,
    pub to: PortRef,
}

impl Link {
    pub fn new(from: &str, from_port: usize, to: &str, to_port: usize) -> Self {
        Self { from: PortRef::new(from, from_port), to: PortRef::new(to, to_port) }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodingNetwork {
    pub modulus: u64,
    pub nodes: Vec<NodeSpec>,
    pub links: Vec<Link>,
    /// Network inputs in source-vector order.
    pub inputs: Vec<PortRef>,
    /// Network outputs in target-vector order.
    pub outputs: Vec<PortRef>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    InvalidModulus(u64),
    NoInputs,
    NoOutputs,
    DuplicateNode(String),
    UnknownNode { context: String, node: String },
    ModulusMismatch { node: String, modulus: u64 },
    Shape { node: String, rows: usize, cols: usize, in_degree: usize, out_degree: usize },
    PortOutOfRange { context: String, node: String, port: usize },
    InPortUnfed { node: String, port: usize },
    InPortMultiplyFed { node: String, port: usize },
    OutPortUnused { node: String, port: usize },
    OutPortMultiplyUsed { node: String, port: usize },
    Cycle { nodes: Vec<String> },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::InvalidModulus(d) => write!(f, "modulus {d} is below 2"),
            Violation::NoInputs => write!(f, "network has no source inputs"),
            Violation::NoOutputs => write!(f, "network has no target outputs"),
            Violation::DuplicateNode(id) => write!(f, "node id {id:?} declared twice"),
            Violation::UnknownNode { context, node } => write!(f, "{context} refers to unknown node {node:?}"),
            Violation::ModulusMismatch { node, modulus } => {
                write!(f, "node {node:?} matrix is over Z_{modulus}, not the network modulus")
            }
            Violation::Shape { node, rows, cols, in_degree, out_degree } => write!(
                f,
                "node {node:?} has a {rows}x{cols} matrix but {in_degree} in-ports and {out_degree} out-ports"
            ),
            Violation::PortOutOfRange { context, node, port } => {
                write!(f, "{context} uses port {port} of node {node:?}, which does not exist")
            }
            Violation::InPortUnfed { node, port } => write!(f, "in-port {port} of node {node:?} is not fed"),
            Violation::InPortMultiplyFed { node, port } => {
                write!(f, "in-port {port} of node {node:?} is fed more than once")
            }
            Violation::OutPortUnused { node, port } => write!(f, "out-port {port} of node {node:?} goes nowhere"),
            Violation::OutPortMultiplyUsed { node, port } => {
                write!(f, "out-port {port} of node {node:?} is used more than once")
            }
            Violation::Cycle { nodes } => write!(f, "links form a cycle through {}", nodes.join(", ")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NetworkError {
    #[error("invalid network: {}", join_violations(.0))]
    Invalid(Vec<Violation>),
    #[error("expected {expected} input symbols, got {actual}")]
    InputLength { expected: usize, actual: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

/// What feeds a node in-port.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Feed {
    Input(usize),
    Link(usize),
}

/// Where a node out-port goes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sink {
    Output(usize),
    Link(usize),
}

/// Resolved connectivity of a validated network. Node indices follow
/// declaration order.
#[derive(Debug, Clone)]
pub struct Wiring {
    pub in_feeds: Vec<Vec<Feed>>,
    pub out_sinks: Vec<Vec<Sink>>,
    /// Topological order; ties broken by node id.
    pub order: Vec<usize>,
    pub link_ends: Vec<(usize, usize)>,
    pub input_nodes: Vec<usize>,
    pub output_nodes: Vec<usize>,
}

impl Wiring {
    /// Indices of nodes that hold at least one network output.
    pub fn target_nodes(&self) -> Vec<usize> {
        let set: BTreeSet<usize> = self.output_nodes.iter().copied().collect();
        self.order.iter().copied().filter(|n| set.contains(n)).collect()
    }

    /// Indices of nodes that hold at least one network input.
    pub fn source_nodes(&self) -> Vec<usize> {
        let set: BTreeSet<usize> = self.input_nodes.iter().copied().collect();
        self.order.iter().copied().filter(|n| set.contains(n)).collect()
    }
}

impl CodingNetwork {
    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.id == id)
    }

    /// Every broken structural invariant; empty when the network is well formed.
    pub fn validate(&self) -> Vec<Violation> {
        match self.resolve() {
            Ok(_) => Vec::new(),
            Err(v) => v,
        }
    }

    pub fn wiring(&self) -> Result<Wiring, NetworkError> {
        self.resolve().map_err(NetworkError::Invalid)
    }

    pub fn source_count(&self) -> usize {
        self.inputs.len()
    }

    pub fn target_count(&self) -> usize {
        self.outputs.len()
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    fn resolve(&self) -> Result<Wiring, Vec<Violation>> {
        let mut violations = Vec::new();
        if self.modulus < 2 {
            return Err(vec![Violation::InvalidModulus(self.modulus)]);
        }
        if self.inputs.is_empty() {
            violations.push(Violation::NoInputs);
        }
        if self.outputs.is_empty() {
            violations.push(Violation::NoOutputs);
        }

        let mut index: HashMap<&str, usize> = HashMap::new();
        for (i, node) in self.nodes.iter().enumerate() {
            if index.insert(node.id.as_str(), i).is_some() {
                violations.push(Violation::DuplicateNode(node.id.clone()));
            }
            if node.matrix.modulus() != self.modulus {
                violations.push(Violation::ModulusMismatch { node: node.id.clone(), modulus: node.matrix.modulus() });
            }
        }

        let n = self.nodes.len();
        let mut feeds: Vec<Vec<(usize, Feed)>> = vec![Vec::new(); n];
        let mut sinks: Vec<Vec<(usize, Sink)>> = vec![Vec::new(); n];
        let mut link_ends = Vec::with_capacity(self.links.len());
        let mut input_nodes = Vec::with_capacity(self.inputs.len());
        let mut output_nodes = Vec::with_capacity(self.outputs.len());
        let lookup = |context: String, node: &str, violations: &mut Vec<Violation>| -> Option<usize> {
            let found = index.get(node).copied();
            if found.is_none() {
                violations.push(Violation::UnknownNode { context, node: node.to_string() });
            }
            found
        };

        for (i, p) in self.inputs.iter().enumerate() {
            if let Some(ni) = lookup(format!("input {i}"), &p.node, &mut violations) {
                feeds[ni].push((p.port, Feed::Input(i)));
                input_nodes.push(ni);
            }
        }
        for (i, p) in self.outputs.iter().enumerate() {
            if let Some(ni) = lookup(format!("output {i}"), &p.node, &mut violations) {
                sinks[ni].push((p.port, Sink::Output(i)));
                output_nodes.push(ni);
            }
        }
        for (i, link) in self.links.iter().enumerate() {
            let from = lookup(format!("link {i}"), &link.from.node, &mut violations);
            let to = lookup(format!("link {i}"), &link.to.node, &mut violations);
            if let (Some(f), Some(t)) = (from, to) {
                sinks[f].push((link.from.port, Sink::Link(i)));
                feeds[t].push((link.to.port, Feed::Link(i)));
                link_ends.push((f, t));
            }
        }
        if !violations.is_empty() {
            return Err(violations);
        }

        let mut in_feeds = Vec::with_capacity(n);
        let mut out_sinks = Vec::with_capacity(n);
        for (ni, node) in self.nodes.iter().enumerate() {
            let (rows, cols) = (node.matrix.rows(), node.matrix.cols());
            if feeds[ni].len() != cols || sinks[ni].len() != rows {
                violations.push(Violation::Shape {
                    node: node.id.clone(),
                    rows,
                    cols,
                    in_degree: feeds[ni].len(),
                    out_degree: sinks[ni].len(),
                });
                in_feeds.push(Vec::new());
                out_sinks.push(Vec::new());
                continue;
            }
            in_feeds.push(self.assign_ports(ni, cols, &feeds[ni], true, &mut violations));
            out_sinks.push(self.assign_ports(ni, rows, &sinks[ni], false, &mut violations));
        }

        let order = match topological_order(self, &link_ends) {
            Ok(order) => order,
            Err(cycle) => {
                violations.push(Violation::Cycle { nodes: cycle });
                Vec::new()
            }
        };
        if !violations.is_empty() {
            return Err(violations);
        }
        let in_feeds = in_feeds.into_iter().map(|v| v.into_iter().map(Option::unwrap).collect()).collect();
        let out_sinks = out_sinks.into_iter().map(|v| v.into_iter().map(Option::unwrap).collect()).collect();
        Ok(Wiring { in_feeds, out_sinks, order, link_ends, input_nodes, output_nodes })
    }

    fn assign_ports<T: Copy + fmt::Debug>(
        &self,
        node: usize,
        count: usize,
        uses: &[(usize, T)],
        incoming: bool,
        violations: &mut Vec<Violation>,
    ) -> Vec<Option<T>> {
        let id = &self.nodes[node].id;
        let mut slots: Vec<Option<T>> = vec![None; count];
        for &(port, what) in uses {
            if port >= count {
                let context = if incoming { format!("in-port feed {what:?}") } else { format!("out-port use {what:?}") };
                violations.push(Violation::PortOutOfRange { context, node: id.clone(), port });
            } else if slots[port].is_some() {
                violations.push(if incoming {
                    Violation::InPortMultiplyFed { node: id.clone(), port }
                } else {
                    Violation::OutPortMultiplyUsed { node: id.clone(), port }
                });
            } else {
                slots[port] = Some(what);
            }
        }
        for (port, slot) in slots.iter().enumerate() {
            if slot.is_none() {
                violations.push(if incoming {
                    Violation::InPortUnfed { node: id.clone(), port }
                } else {
                    Violation::OutPortUnused { node: id.clone(), port }
                });
            }
        }
        slots
    }

    /// The matrix `M` with `t = M·s` for the whole network (targets × sources).
    pub fn composite_map(&self) -> Result<RingMatrix, NetworkError> {
        let wiring = self.wiring()?;
        let forms = self.link_forms(&wiring)?;
        let k = self.inputs.len();
        let mut rows = Vec::with_capacity(self.outputs.len());
        for form in &forms.outputs {
            rows.push(form.clone());
        }
        Ok(RingMatrix::new(rows.len(), k, self.modulus, rows.concat())?)
    }

    /// Linear forms (rows over the source vector) carried by every link and output.
    pub fn link_forms(&self, wiring: &Wiring) -> Result<WireForms, NetworkError> {
        let d = self.modulus;
        let k = self.inputs.len();
        let mut links: Vec<Option<Vec<u64>>> = vec![None; self.links.len()];
        let mut outputs: Vec<Option<Vec<u64>>> = vec![None; self.outputs.len()];
        for &ni in &wiring.order {
            let node = &self.nodes[ni];
            let mut incoming = Vec::with_capacity(node.matrix.cols());
            for feed in &wiring.in_feeds[ni] {
                let form = match *feed {
                    Feed::Input(i) => unit(k, i),
                    Feed::Link(l) => links[l].clone().expect("topological order feeds links first"),
                };
                incoming.push(form);
            }
            let in_mat = RingMatrix::new(incoming.len(), k, d, incoming.concat())?;
            let out_mat = node.matrix.mul(&in_mat)?;
            for (j, sink) in wiring.out_sinks[ni].iter().enumerate() {
                let row = out_mat.row(j).to_vec();
                match *sink {
                    Sink::Link(l) => links[l] = Some(row),
                    Sink::Output(o) => outputs[o] = Some(row),
                }
            }
        }
        Ok(WireForms {
            links: links.into_iter().map(Option::unwrap).collect(),
            outputs: outputs.into_iter().map(Option::unwrap).collect(),
        })
    }

    /// Forward propagation of concrete symbols; every node fires once all its
    /// inputs have arrived.
    pub fn run_classical(&self, sources: &[u64]) -> Result<Vec<u64>, NetworkError> {
        let wiring = self.wiring()?;
        Ok(self.propagate(&wiring, sources)?.outputs)
    }

    /// Like [`run_classical`](Self::run_classical) but also returns the symbol on every link.
    pub fn propagate(&self, wiring: &Wiring, sources: &[u64]) -> Result<Propagation, NetworkError> {
        if sources.len() != self.inputs.len() {
            return Err(NetworkError::InputLength { expected: self.inputs.len(), actual: sources.len() });
        }
        let d = self.modulus;
        let mut links: Vec<Option<u64>> = vec![None; self.links.len()];
        let mut outputs = vec![0u64; self.outputs.len()];
        for &ni in &wiring.order {
            let node = &self.nodes[ni];
            let x: Vec<u64> = wiring.in_feeds[ni]
                .iter()
                .map(|feed| match *feed {
                    Feed::Input(i) => sources[i] % d,
                    Feed::Link(l) => links[l].expect("link value ready in topological order"),
                })
                .collect();
            let y = node.matrix.mul_vec(&x)?;
            for (j, sink) in wiring.out_sinks[ni].iter().enumerate() {
                match *sink {
                    Sink::Link(l) => links[l] = Some(y[j]),
                    Sink::Output(o) => outputs[o] = y[j],
                }
            }
        }
        Ok(Propagation { links: links.into_iter().map(Option::unwrap).collect(), outputs })
    }

    /// Total number of nonzero node-matrix coefficients.
    pub fn nonzero_coefficients(&self) -> usize {
        self.nodes.iter().map(|n| n.matrix.nonzero_count()).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WireForms {
    pub links: Vec<Vec<u64>>,
    pub outputs: Vec<Vec<u64>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Propagation {
    pub links: Vec<u64>,
    pub outputs: Vec<u64>,
}

fn unit(k: usize, i: usize) -> Vec<u64> {
    let mut v = vec![0; k];
    v[i] = 1;
    v
}

/// Kahn's algorithm, always releasing the ready node with the smallest id.
fn topological_order(net: &CodingNetwork, link_ends: &[(usize, usize)]) -> Result<Vec<usize>, Vec<String>> {
    let n = net.nodes.len();
    let mut indegree = vec![0usize; n];
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(f, t) in link_ends {
        indegree[t] += 1;
        succ[f].push(t);
    }
    let mut ready: BTreeSet<(&str, usize)> =
        (0..n).filter(|&i| indegree[i] == 0).map(|i| (net.nodes[i].id.as_str(), i)).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(first) = ready.pop_first() {
        let i = first.1;
        order.push(i);
        for &t in &succ[i] {
            indegree[t] -= 1;
            if indegree[t] == 0 {
                ready.insert((net.nodes[t].id.as_str(), t));
            }
        }
    }
    if order.len() == n {
        Ok(order)
    } else {
        let mut stuck: Vec<String> = (0..n).filter(|&i| indegree[i] > 0).map(|i| net.nodes[i].id.clone()).collect();
        stuck.sort();
        Err(stuck)
    }
}

/// Size limits for [`random_network`].
#[derive(Debug, Clone, Copy)]
pub struct RandomShape {
    pub max_nodes: usize,
    pub max_links: usize,
    pub max_inputs: usize,
    pub max_outputs: usize,
}

impl Default for RandomShape {
    fn default() -> Self {
        Self { max_nodes: 5, max_links: 6, max_inputs: 3, max_outputs: 4 }
    }
}

/// A random well-formed network with uniformly random node matrices. Nodes
/// without incoming links get a network input; nodes without outgoing links
/// get a network output. The result may or may not be injective.
pub fn random_network<R: Rng + ?Sized>(rng: &mut R, modulus: u64, shape: RandomShape) -> CodingNetwork {
    let n = rng.random_range(1..=shape.max_nodes.max(1));
    let ids: Vec<String> = (0..n).map(|i| format!("N{i}")).collect();

    let mut pairs = Vec::new();
    let link_target = rng.random_range(0..=shape.max_links);
    for _ in 0..link_target * 4 {
        if pairs.len() >= link_target || n < 2 {
            break;
        }
        let a = rng.random_range(0..n - 1);
        let b = rng.random_range(a + 1..n);
        pairs.push((a, b));
    }

    let mut in_count = vec![0usize; n];
    let mut out_count = vec![0usize; n];
    let mut links = Vec::new();
    for &(a, b) in &pairs {
        links.push(Link::new(&ids[a], out_count[a], &ids[b], in_count[b]));
        out_count[a] += 1;
        in_count[b] += 1;
    }

    let mut inputs = Vec::new();
    for i in 0..n {
        if in_count[i] == 0 {
            inputs.push(PortRef::new(&ids[i], in_count[i]));
            in_count[i] += 1;
        }
    }
    while inputs.len() < shape.max_inputs && rng.random_bool(0.3) {
        let i = rng.random_range(0..n);
        inputs.push(PortRef::new(&ids[i], in_count[i]));
        in_count[i] += 1;
    }
    let mut outputs = Vec::new();
    for i in 0..n {
        if out_count[i] == 0 {
            outputs.push(PortRef::new(&ids[i], out_count[i]));
            out_count[i] += 1;
        }
    }
    while outputs.len() < shape.max_outputs && rng.random_bool(0.4) {
        let i = rng.random_range(0..n);
        outputs.push(PortRef::new(&ids[i], out_count[i]));
        out_count[i] += 1;
    }

    let nodes = (0..n)
        .map(|i| {
            let data = (0..out_count[i] * in_count[i]).map(|_| rng.random_range(0..modulus)).collect();
            NodeSpec { id: ids[i].clone(), matrix: RingMatrix::new(out_count[i], in_count[i], modulus, data).unwrap() }
        })
        .collect();
    CodingNetwork { modulus, nodes, links, inputs, outputs }
}

/// Networks from the butterfly figures and a few small fixtures.
pub mod fixtures {
    use super::*;

    fn node(d: u64, id: &str, rows: &[&[i64]]) -> NodeSpec {
        let rows: Vec<Vec<i64>> = rows.iter().map(|r| r.to_vec()).collect();
        NodeSpec { id: id.to_string(), matrix: RingMatrix::from_rows(d, &rows, 0).unwrap() }
    }

    /// Butterfly links in the order m1..m7:
    /// S1→V1, S2→V1, S1→T1, V1→V2, S2→T2, V2→T1, V2→T2.
    fn butterfly_links() -> Vec<Link> {
        vec![
            Link::new("S1", 0, "V1", 0),
            Link::new("S2", 0, "V1", 1),
            Link::new("S1", 1, "T1", 0),
            Link::new("V1", 0, "V2", 0),
            Link::new("S2", 1, "T2", 0),
            Link::new("V2", 0, "T1", 1),
            Link::new("V2", 1, "T2", 1),
        ]
    }

    /// The two-pair butterfly code that swaps the two source messages:
    /// sources and V2 duplicate, V1 and the targets take the negated sum.
    pub fn butterfly_swap(d: u64) -> CodingNetwork {
        let dup: &[&[i64]] = &[&[1], &[1]];
        let negsum: &[&[i64]] = &[&[-1, -1]];
        CodingNetwork {
            modulus: d,
            nodes: vec![
                node(d, "S1", dup),
                node(d, "S2", dup),
                node(d, "V1", negsum),
                node(d, "V2", dup),
                node(d, "T1", negsum),
                node(d, "T2", negsum),
            ],
            links: butterfly_links(),
            inputs: vec![PortRef::new("S1", 0), PortRef::new("S2", 0)],
            outputs: vec![PortRef::new("T1", 0), PortRef::new("T2", 0)],
        }
    }

    /// The classic parity code for the two-pair problem (V1, T1, T2 add).
    pub fn butterfly_parity(d: u64) -> CodingNetwork {
        let mut net = butterfly_swap(d);
        for id in ["V1", "T1", "T2"] {
            let i = net.node_index(id).unwrap();
            net.nodes[i] = node(d, id, &[&[1, 1]]);
        }
        net
    }

    /// Multicast on the butterfly: both targets receive `(s1, s2)`.
    pub fn butterfly_multicast(d: u64) -> CodingNetwork {
        let dup: &[&[i64]] = &[&[1], &[1]];
        let mut links = butterfly_links();
        // T1 receives m3 on in-port 0 and m6 on in-port 1; T2 receives m7 on
        // in-port 0 and m5 on in-port 1 so that T2 = [[1,-1],[0,1]] yields (s1, s2).
        links[4] = Link::new("S2", 1, "T2", 1);
        links[6] = Link::new("V2", 1, "T2", 0);
        CodingNetwork {
            modulus: d,
            nodes: vec![
                node(d, "S1", dup),
                node(d, "S2", dup),
                node(d, "V1", &[&[1, 1]]),
                node(d, "V2", dup),
                node(d, "T1", &[&[1, 0], &[-1, 1]]),
                node(d, "T2", &[&[1, -1], &[0, 1]]),
            ],
            links,
            inputs: vec![PortRef::new("S1", 0), PortRef::new("S2", 0)],
            outputs: vec![PortRef::new("T1", 0), PortRef::new("T1", 1), PortRef::new("T2", 0), PortRef::new("T2", 1)],
        }
    }

    /// One node passing its single input straight through.
    pub fn identity_wire(d: u64) -> CodingNetwork {
        CodingNetwork {
            modulus: d,
            nodes: vec![node(d, "W", &[&[1]])],
            links: Vec::new(),
            inputs: vec![PortRef::new("W", 0)],
            outputs: vec![PortRef::new("W", 0)],
        }
    }

    /// Two targets computing `(s1 + s2, s2)`. Injective, but no block-diagonal
    /// `B` with `MᵀBM = I` exists for the per-target blocks.
    pub fn sum_pair(d: u64) -> CodingNetwork {
        CodingNetwork {
            modulus: d,
            nodes: vec![
                node(d, "S1", &[&[1]]),
                node(d, "S2", &[&[1], &[1]]),
                node(d, "T1", &[&[1, 1]]),
                node(d, "T2", &[&[1]]),
            ],
            links: vec![Link::new("S1", 0, "T1", 0), Link::new("S2", 0, "T1", 1), Link::new("S2", 1, "T2", 0)],
            inputs: vec![PortRef::new("S1", 0), PortRef::new("S2", 0)],
            outputs: vec![PortRef::new("T1", 0), PortRef::new("T2", 0)],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    fn rows(m: &RingMatrix) -> Vec<Vec<u64>> {
        m.to_rows()
    }

    #[test]
    fn butterfly_networks_validate() {
        for d in 2..6 {
            assert!(butterfly_swap(d).validate().is_empty());
            assert!(butterfly_parity(d).validate().is_empty());
            assert!(butterfly_multicast(d).validate().is_empty());
        }
    }

    #[test]
    fn two_cycle_is_reported() {
        let net = CodingNetwork {
            modulus: 2,
            nodes: vec![
                NodeSpec { id: "A".into(), matrix: RingMatrix::identity(2, 2) },
                NodeSpec { id: "B".into(), matrix: RingMatrix::identity(2, 2) },
            ],
            links: vec![Link::new("A", 0, "B", 0), Link::new("B", 0, "A", 0)],
            inputs: vec![PortRef::new("A", 1), PortRef::new("B", 1)],
            outputs: vec![PortRef::new("A", 1), PortRef::new("B", 1)],
        };
        assert_eq!(net.validate(), vec![Violation::Cycle { nodes: vec!["A".into(), "B".into()] }]);
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let net = CodingNetwork {
            modulus: 3,
            nodes: vec![
                NodeSpec { id: "S".into(), matrix: RingMatrix::identity(3, 3) },
                NodeSpec { id: "N".into(), matrix: RingMatrix::zeros(4, 2, 3) },
            ],
            links: (0..3).map(|p| Link::new("S", p, "N", p)).collect(),
            inputs: (0..3).map(|p| PortRef::new("S", p)).collect(),
            outputs: (0..4).map(|p| PortRef::new("N", p)).collect(),
        };
        let v = net.validate();
        assert_eq!(v.len(), 1, "{v:?}");
        assert!(matches!(v[0], Violation::Shape { in_degree: 3, cols: 2, .. }));
    }

    #[test]
    fn port_problems_are_reported() {
        let mut net = identity_wire(3);
        net.inputs.push(PortRef::new("W", 0));
        net.nodes[0].matrix = RingMatrix::identity(2, 3);
        net.outputs.push(PortRef::new("W", 1));
        let v = net.validate();
        assert!(v.contains(&Violation::InPortMultiplyFed { node: "W".into(), port: 0 }));
        assert!(v.contains(&Violation::InPortUnfed { node: "W".into(), port: 1 }));

        let mut net = identity_wire(3);
        net.outputs[0].node = "X".into();
        assert!(matches!(net.validate()[0], Violation::UnknownNode { .. }));
    }

    #[test]
    fn composite_maps() {
        let multicast = butterfly_multicast(3).composite_map().unwrap();
        assert_eq!(rows(&multicast), vec![vec![1, 0], vec![0, 1], vec![1, 0], vec![0, 1]]);
        for d in 2..=5 {
            let swap = butterfly_swap(d).composite_map().unwrap();
            assert_eq!(rows(&swap), vec![vec![0, 1], vec![1, 0]], "d = {d}");
        }
        assert_eq!(rows(&identity_wire(7).composite_map().unwrap()), vec![vec![1]]);
        assert_eq!(rows(&sum_pair(3).composite_map().unwrap()), vec![vec![1, 1], vec![0, 1]]);
    }

    #[test]
    fn classical_runs() {
        assert_eq!(butterfly_parity(2).run_classical(&[1, 0]).unwrap(), vec![0, 1]);
        assert_eq!(butterfly_multicast(3).run_classical(&[1, 2]).unwrap(), vec![1, 2, 1, 2]);
        assert_eq!(butterfly_swap(5).run_classical(&[0, 0]).unwrap(), vec![0, 0]);
        assert!(matches!(
            butterfly_swap(5).run_classical(&[1]),
            Err(NetworkError::InputLength { expected: 2, actual: 1 })
        ));
    }

    #[test]
    fn topological_order_breaks_ties_by_id() {
        let net = butterfly_swap(2);
        let w = net.wiring().unwrap();
        let ids: Vec<&str> = w.order.iter().map(|&i| net.nodes[i].id.as_str()).collect();
        assert_eq!(ids, vec!["S1", "S2", "V1", "V2", "T1", "T2"]);
    }
}
