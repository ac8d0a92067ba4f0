//! One-way (measurement-based) execution of a coding network.
//!
//! Each out-port of a node gets an auxiliary qudit `b′` joined to the node's
//! inputs with `cZ^{V_jk}` and a message qudit `b` joined to `b′` with `cZ†`.
//! Measuring `b′` in the Fourier basis teleports `F†` of the auxiliary onto
//! `b`, which therefore ends up holding `(Vx)_j` up to a known X shift.

use serde::{Deserialize, Serialize};

use crate::coherent::{kappa_corrections, node_phase_ops, report_to_targets, source_phase_ops, CorrectionPlan};
use crate::linalg::{dot_mod, RingMatrix};
use crate::network::{CodingNetwork, Feed, Sink};
use crate::oracle::apply_isometry;
use crate::report::{OutcomeSpec, Protocol, RunReport};
use crate::schedule::{
    CorrectionReason, Direction, Execution, Mode, Op, PauliKind, QuditInfo, RunError, Schedule, Term, XCorrection,
};
use crate::schedule::STATE_AMPLITUDE_LIMIT;
use crate::state::{OutcomeSource, QuditState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuditKind {
    NetworkInput,
    Message,
    Auxiliary,
    NetworkOutput,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeometryQudit {
    pub label: String,
    pub kind: QuditKind,
    /// Node whose port the qudit belongs to: the consuming node for network
    /// inputs, the producing node otherwise.
    pub node: String,
    pub port: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub link: Option<usize>,
    /// Node that measures or outputs it.
    pub holder: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub weight: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeometryNode {
    pub id: String,
    pub matrix: Vec<Vec<u64>>,
    /// Qudit on each in-port.
    pub inputs: Vec<usize>,
    /// Auxiliary and message qudit of each out-port.
    pub aux: Vec<usize>,
    pub messages: Vec<usize>,
    /// Auxiliary qudit upstream of each in-port fed by a link.
    pub upstream_aux: Vec<Option<usize>>,
}

impl GeometryNode {
    pub fn coefficient(&self, j: usize, k: usize) -> u64 {
        self.matrix[j][k]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MbqcGeometry {
    pub version: u32,
    pub d: u64,
    pub qudits: Vec<GeometryQudit>,
    pub edges: Vec<Edge>,
    pub inputs: Vec<usize>,
    pub outputs: Vec<usize>,
    /// `λ_q`: value of each qudit as a form over the network inputs.
    /// Auxiliary qudits get an empty vector.
    pub depends: Vec<Vec<u64>>,
    /// Topological order.
    pub nodes: Vec<GeometryNode>,
    pub composite: Vec<Vec<u64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceCounts {
    pub qudits: usize,
    /// `nnz + 2(m+ℓ)`.
    pub entangling_ops: usize,
    pub classical_messages_extra: usize,
    /// `cX` gates in the coherent protocol.
    pub cx_count_reference: usize,
    /// Edges actually present in the graph.
    pub cz_edges: usize,
}

impl MbqcGeometry {
    pub fn qudit_count(&self) -> usize {
        self.qudits.len()
    }

    pub fn count(&self, kind: QuditKind) -> usize {
        self.qudits.iter().filter(|q| q.kind == kind).count()
    }

    pub fn composite_matrix(&self) -> RingMatrix {
        let cols = self.inputs.len();
        let data = self.composite.iter().flatten().copied().collect();
        RingMatrix::new(self.outputs.len(), cols, self.d, data).expect("composite rows have one entry per input")
    }

    /// Nodes holding network outputs, in topological order.
    pub fn target_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = Vec::new();
        for n in &self.nodes {
            if n.messages.iter().any(|&q| self.qudits[q].kind == QuditKind::NetworkOutput) {
                ids.push(n.id.clone());
            }
        }
        ids
    }

    pub fn correction_plan(&self) -> Result<CorrectionPlan, RunError> {
        let holders: Vec<String> = self.outputs.iter().map(|&q| self.qudits[q].holder.clone()).collect();
        CorrectionPlan::new(self.composite_matrix(), &holders)
    }

    pub fn resource_counts(&self) -> ResourceCounts {
        let nnz: usize = self.nodes.iter().map(|n| n.matrix.iter().flatten().filter(|&&c| c != 0).count()).sum();
        let out_ports = self.count(QuditKind::Message) + self.count(QuditKind::NetworkOutput);
        ResourceCounts {
            qudits: self.qudits.len(),
            entangling_ops: nnz + 2 * out_ports,
            classical_messages_extra: 2 * out_ports,
            cx_count_reference: nnz,
            cz_edges: self.edges.len(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("geometries always serialize")
    }
}

/// Build the graph-state geometry. Qudits: network inputs, then per node in
/// topological order and per out-port an auxiliary followed by its message.
pub fn compile(net: &CodingNetwork) -> Result<MbqcGeometry, RunError> {
    let w = net.wiring()?;
    let forms = net.link_forms(&w)?;
    let d = net.modulus;
    let k = net.inputs.len();
    let id = |n: usize| net.nodes[n].id.clone();

    let mut qudits: Vec<GeometryQudit> = net
        .inputs
        .iter()
        .enumerate()
        .map(|(i, p)| GeometryQudit {
            label: format!("in{i}"),
            kind: QuditKind::NetworkInput,
            node: p.node.clone(),
            port: p.port,
            link: None,
            holder: p.node.clone(),
        })
        .collect();
    let mut depends: Vec<Vec<u64>> = (0..k).map(|i| (0..k).map(|j| u64::from(i == j)).collect()).collect();
    let mut link_msg = vec![0; net.links.len()];
    let mut link_aux = vec![0; net.links.len()];
    let mut outputs = vec![0; net.outputs.len()];
    let mut aux = vec![Vec::new(); net.nodes.len()];
    let mut messages = vec![Vec::new(); net.nodes.len()];
    for &n in &w.order {
        for (j, sink) in w.out_sinks[n].iter().enumerate() {
            let a = qudits.len();
            qudits.push(GeometryQudit {
                label: format!("{}.out{j}.aux", id(n)),
                kind: QuditKind::Auxiliary,
                node: id(n),
                port: j,
                link: None,
                holder: id(n),
            });
            depends.push(Vec::new());
            let m = qudits.len();
            let (kind, link, holder, form) = match *sink {
                Sink::Link(l) => {
                    link_msg[l] = m;
                    link_aux[l] = a;
                    (QuditKind::Message, Some(l), id(w.link_ends[l].1), forms.links[l].clone())
                }
                Sink::Output(o) => {
                    outputs[o] = m;
                    (QuditKind::NetworkOutput, None, id(n), forms.outputs[o].clone())
                }
            };
            qudits.push(GeometryQudit { label: format!("{}.out{j}", id(n)), kind, node: id(n), port: j, link, holder });
            depends.push(form);
            aux[n].push(a);
            messages[n].push(m);
        }
    }

    let mut edges = Vec::new();
    let mut nodes = Vec::new();
    for &n in &w.order {
        let v = &net.nodes[n].matrix;
        let (inputs, upstream_aux): (Vec<usize>, Vec<Option<usize>>) = w.in_feeds[n]
            .iter()
            .map(|f| match *f {
                Feed::Input(i) => (i, None),
                Feed::Link(l) => (link_msg[l], Some(link_aux[l])),
            })
            .unzip();
        for (j, &b) in aux[n].iter().enumerate() {
            for (kk, &a) in inputs.iter().enumerate() {
                if v.get(j, kk) != 0 {
                    edges.push(Edge { a, b, weight: v.get(j, kk) });
                }
            }
            edges.push(Edge { a: b, b: messages[n][j], weight: d - 1 });
        }
        nodes.push(GeometryNode {
            id: id(n),
            matrix: v.to_rows(),
            inputs,
            aux: aux[n].clone(),
            messages: messages[n].clone(),
            upstream_aux,
        });
    }

    let inputs = (0..k).collect();
    let composite = net.composite_map()?.to_rows();
    Ok(MbqcGeometry { version: 1, d, qudits, edges, inputs, outputs, depends, nodes, composite })
}

/// Resource counts from the network's own parameters; they must agree with
/// [`MbqcGeometry::resource_counts`].
pub fn resource_counts(net: &CodingNetwork, geometry: &MbqcGeometry) -> ResourceCounts {
    let (k, l, m) = (net.inputs.len(), net.outputs.len(), net.links.len());
    let nnz = net.nonzero_coefficients();
    ResourceCounts {
        qudits: k + 2 * l + 2 * m,
        entangling_ops: nnz + 2 * (m + l),
        classical_messages_extra: 2 * (m + l),
        cx_count_reference: nnz,
        cz_edges: geometry.edges.len(),
    }
}

/// The full graph state: inputs carry `input`, everything else starts in
/// `|+⟩`, then `cZ^w` on every edge. Qudits are labelled by geometry index.
/// Returns the state and the number of `cZ` gates applied.
pub fn prepare_graph_state(geometry: &MbqcGeometry, input: &QuditState) -> Result<(QuditState, usize), RunError> {
    let n = geometry.qudits.len();
    let too_large = (0..n).try_fold(1usize, |acc, _| acc.checked_mul(geometry.d as usize)).is_none_or(|size| size > STATE_AMPLITUDE_LIMIT);
    if too_large {
        let limit = (STATE_AMPLITUDE_LIMIT as f64).log(geometry.d as f64).floor() as usize;
        return Err(RunError::TooLarge { count: n, limit });
    }
    if input.qudit_count() != geometry.inputs.len() || input.dimension() as u64 != geometry.d {
        return Err(RunError::InputShape {
            expected: geometry.inputs.len(),
            expected_d: geometry.d,
            actual: input.qudit_count(),
            actual_d: input.dimension() as u64,
        });
    }
    let mut state = input.clone();
    state.relabel(geometry.inputs.clone())?;
    for q in 0..n {
        if !geometry.inputs.contains(&q) {
            state.push_plus(q)?;
        }
    }
    for e in &geometry.edges {
        let (a, b) = (state.position(e.a)?, state.position(e.b)?);
        state.apply_cz(a, b, e.weight as i64)?;
    }
    Ok((state, geometry.edges.len()))
}

/// Adjusted auxiliary outcome `r′ = r₀ + e_i·U·r`: the raw outcome plus the
/// shifts carried in by the upstream messages.
pub fn adjust_outcome(raw: u64, row: &[u64], upstream: &[u64], d: u64) -> Result<u64, RunError> {
    if row.len() != upstream.len() {
        return Err(RunError::Linalg(crate::linalg::LinalgError::EntryCount {
            expected: row.len(),
            actual: upstream.len(),
        }));
    }
    Ok((raw % d + dot_mod(row, upstream, d)) % d)
}

/// Compile the measurement pattern. Nodes run in topological order and each
/// one prepares, entangles and measures its auxiliaries before the next
/// starts, so only a few qudits are alive at once. This is equivalent to
/// preparing the whole graph state first: every `cZ` commutes with
/// measurements of qudits it does not touch.
pub fn mbqc_schedule(geometry: &MbqcGeometry, mode: Mode, x_correction: XCorrection) -> Result<Schedule, RunError> {
    let plan = geometry.correction_plan()?;
    let d = geometry.d;
    let targets = geometry.target_ids();
    let qudits: Vec<QuditInfo> =
        geometry.qudits.iter().map(|q| QuditInfo { label: q.label.clone(), holder: q.holder.clone() }).collect();
    let is_output = |q: usize| geometry.qudits[q].kind == QuditKind::NetworkOutput;
    let local = x_correction == XCorrection::Local;

    let mut ops = Vec::new();
    let mut measured_free: Vec<usize> = Vec::new();
    for node in &geometry.nodes {
        for (&a, &m) in node.aux.iter().zip(&node.messages) {
            ops.push(Op::PreparePlus(a));
            ops.push(Op::PreparePlus(m));
        }
        for (j, (&a, &m)) in node.aux.iter().zip(&node.messages).enumerate() {
            for (k, &input) in node.inputs.iter().enumerate() {
                let c = node.coefficient(j, k);
                if c != 0 {
                    ops.push(Op::Cz { a: input, b: a, power: c });
                }
            }
            ops.push(Op::Cz { a, b: m, power: d - 1 });
        }
        // Upstream shift terms of auxiliary j.
        let shifts: Vec<Vec<Term>> = (0..node.aux.len())
            .map(|j| {
                node.upstream_aux
                    .iter()
                    .enumerate()
                    .filter_map(|(k, u)| u.filter(|_| node.coefficient(j, k) != 0).map(|u| (u, node.coefficient(j, k))))
                    .collect()
            })
            .collect();
        if local {
            for (&input, u) in node.inputs.iter().zip(&node.upstream_aux) {
                if let Some(u) = u {
                    ops.push(Op::Correct {
                        qudit: input,
                        kind: PauliKind::X,
                        terms: vec![(*u, 1)],
                        reason: CorrectionReason::AuxByproduct,
                    });
                }
            }
            for (&a, terms) in node.aux.iter().zip(&shifts) {
                if !terms.is_empty() {
                    ops.push(Op::Correct {
                        qudit: a,
                        kind: PauliKind::Z,
                        terms: terms.clone(),
                        reason: CorrectionReason::AuxPhase,
                    });
                }
            }
        }
        for ((&a, &m), terms) in node.aux.iter().zip(&node.messages).zip(&shifts) {
            ops.push(Op::Measure(a));
            if !local && !terms.is_empty() {
                ops.push(Op::Adjust { qudit: a, terms: terms.clone() });
            }
            if is_output(m) {
                if local {
                    ops.push(Op::Correct {
                        qudit: m,
                        kind: PauliKind::X,
                        terms: vec![(a, 1)],
                        reason: CorrectionReason::AuxByproduct,
                    });
                }
            } else {
                ops.push(Op::Send {
                    from: node.id.clone(),
                    to: geometry.qudits[m].holder.clone(),
                    terms: vec![(a, 1)],
                    over_network: true,
                    direction: Direction::Forward,
                });
            }
        }
        if mode == Mode::Free {
            for &input in &node.inputs {
                ops.push(Op::Measure(input));
                ops.extend(report_to_targets(&targets, &node.id, input));
                measured_free.push(input);
            }
        }
    }

    if !local {
        for node in &geometry.nodes {
            for (&a, &m) in node.aux.iter().zip(&node.messages) {
                if is_output(m) {
                    ops.push(Op::Correct {
                        qudit: m,
                        kind: PauliKind::X,
                        terms: vec![(a, 1)],
                        reason: CorrectionReason::AuxByproduct,
                    });
                }
            }
        }
    }

    let mut requires_out_of_network = false;
    match mode {
        Mode::Free => {
            let with_lambda: Vec<(usize, Vec<u64>)> =
                measured_free.iter().map(|&q| (q, geometry.depends[q].clone())).collect();
            ops.extend(kappa_corrections(&plan, &with_lambda, &geometry.outputs, CorrectionReason::OutputPhase));
        }
        Mode::Constrained => {
            for node in geometry.nodes.iter().rev() {
                let matrix = RingMatrix::new(
                    node.messages.len(),
                    node.inputs.len(),
                    d,
                    node.matrix.iter().flatten().copied().collect(),
                )?;
                let out_messages: Vec<Option<usize>> =
                    node.messages.iter().map(|&m| (!is_output(m)).then_some(m)).collect();
                ops.extend(node_phase_ops(&matrix, &node.inputs, &out_messages));
                for &input in &node.inputs {
                    ops.push(Op::Measure(input));
                    let q = &geometry.qudits[input];
                    if q.kind == QuditKind::Message {
                        ops.push(Op::Send {
                            from: node.id.clone(),
                            to: q.node.clone(),
                            terms: vec![(input, 1)],
                            over_network: true,
                            direction: Direction::Backward,
                        });
                    }
                }
            }
            let inputs: Vec<(usize, String)> =
                geometry.inputs.iter().map(|&q| (q, geometry.qudits[q].holder.clone())).collect();
            let mut links: Vec<(usize, String, String, Vec<u64>)> = geometry
                .qudits
                .iter()
                .enumerate()
                .filter_map(|(q, info)| {
                    info.link.map(|l| (l, info.node.clone(), info.holder.clone(), geometry.depends[q].clone()))
                })
                .collect();
            links.sort_by_key(|x| x.0);
            let links: Vec<(String, String, Vec<u64>)> = links.into_iter().map(|(_, f, t, form)| (f, t, form)).collect();
            let (source_ops, flag) = source_phase_ops(&plan, mode, &inputs, &targets, &links, &geometry.outputs);
            ops.extend(source_ops);
            requires_out_of_network = flag;
        }
    }

    Ok(Schedule {
        d,
        mode,
        qudits,
        inputs: geometry.inputs.clone(),
        outputs: geometry.outputs.clone(),
        ops,
        requires_out_of_network,
    })
}

/// The same pattern with every preparation and `cZ` moved to the front, i.e.
/// the whole graph state built before the first measurement.
pub fn eager(schedule: &Schedule) -> Schedule {
    let (mut front, rest): (Vec<Op>, Vec<Op>) = schedule
        .ops
        .iter()
        .cloned()
        .partition(|op| matches!(op, Op::PreparePlus(_) | Op::PrepareZero(_) | Op::Cz { .. }));
    front.extend(rest);
    Schedule { ops: front, ..schedule.clone() }
}

/// Run the measurement pattern and compare with the isometry `|x⟩ ↦ |Mx⟩`.
pub fn run_mbqc(
    geometry: &MbqcGeometry,
    input: &QuditState,
    mode: Mode,
    x_correction: XCorrection,
    source: &mut dyn OutcomeSource,
    spec: OutcomeSpec,
) -> Result<(QuditState, RunReport), RunError> {
    let schedule = mbqc_schedule(geometry, mode, x_correction)?;
    if let OutcomeSpec::Forced(v) = &spec {
        let expected = schedule.measurement_count();
        if v.len() != expected {
            return Err(RunError::ForcedLength { expected, actual: v.len() });
        }
    }
    let finished = Execution::new(&schedule, input)?.run(source)?;
    let oracle = apply_isometry(&geometry.composite_matrix(), input)?;
    let fidelity = finished.output.fidelity(&oracle)?;
    let report = RunReport::from_run(
        Protocol::Mbqc,
        &schedule,
        Some(x_correction),
        spec,
        &finished,
        Some(geometry.resource_counts()),
        fidelity,
    );
    Ok((finished.output, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::fixtures::*;
    use crate::schedule::run_forced;
    use crate::state::SampledOutcomes;

    fn basis(v: &[u64], d: u64) -> QuditState {
        QuditState::basis(v, d as usize).unwrap()
    }

    #[test]
    fn identity_wire_geometry() {
        let g = compile(&identity_wire(3)).unwrap();
        assert_eq!(g.qudit_count(), 3);
        assert_eq!(g.edges, vec![Edge { a: 0, b: 1, weight: 1 }, Edge { a: 1, b: 2, weight: 2 }]);
        assert_eq!(g.outputs, vec![2]);
        assert_eq!(g.depends[2], vec![1]);
    }

    #[test]
    fn identity_wire_graph_state_d2() {
        let g = compile(&identity_wire(2)).unwrap();
        let (s, n) = prepare_graph_state(&g, &basis(&[0], 2)).unwrap();
        assert_eq!(n, 2);
        for (bits, want) in [([0, 0, 0], 0.5), ([0, 1, 0], 0.5), ([0, 0, 1], 0.5), ([0, 1, 1], -0.5), ([1, 0, 0], 0.0)] {
            assert!((s.amplitude(&bits).re - want).abs() < 1e-12, "{bits:?}");
        }
    }

    #[test]
    fn adjust_examples() {
        assert_eq!(adjust_outcome(3, &[1, 2], &[0, 0], 5).unwrap(), 3);
        assert_eq!(adjust_outcome(1, &[1, 1], &[1, 0], 2).unwrap(), 0);
        assert_eq!(adjust_outcome(2, &[3, 4], &[1, 1], 5).unwrap(), 4);
        assert!(adjust_outcome(2, &[3, 4], &[1], 5).is_err());
    }

    #[test]
    fn swap_all_variants_on_basis_input() {
        let g = compile(&butterfly_swap(3)).unwrap();
        for mode in [Mode::Free, Mode::Constrained] {
            for xc in [XCorrection::Propagate, XCorrection::Local] {
                let sched = mbqc_schedule(&g, mode, xc).unwrap();
                for seed in 0..5 {
                    let f = Execution::new(&sched, &basis(&[1, 2], 3))
                        .unwrap()
                        .run(&mut SampledOutcomes::new(seed))
                        .unwrap();
                    let fid = f.output.fidelity(&basis(&[2, 1], 3)).unwrap();
                    assert!((fid - 1.0).abs() < 1e-9, "{mode:?} {xc:?} seed {seed}: {fid}");
                }
            }
        }
    }

    #[test]
    fn eager_matches_lazy() {
        let g = compile(&butterfly_swap(2)).unwrap();
        let input = QuditState::random(2, 2, &mut <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(3)).unwrap();
        let lazy = mbqc_schedule(&g, Mode::Free, XCorrection::Propagate).unwrap();
        let outcomes: Vec<u64> = (0..lazy.measurement_count() as u64).map(|i| i * 7 % 2).collect();
        let a = run_forced(&lazy, &input, &outcomes).unwrap().output;
        let b = run_forced(&eager(&lazy), &input, &outcomes).unwrap().output;
        assert!((a.fidelity(&b).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn oversized_graph_state_is_refused() {
        let g = compile(&butterfly_multicast(3)).unwrap();
        let err = prepare_graph_state(&g, &basis(&[0, 0], 3)).unwrap_err();
        assert!(matches!(err, RunError::TooLarge { count: 24, .. }), "{err:?}");
    }

    #[test]
    fn counts_agree() {
        for net in [butterfly_swap(2), butterfly_multicast(3), identity_wire(5), sum_pair(3)] {
            let g = compile(&net).unwrap();
            assert_eq!(resource_counts(&net, &g), g.resource_counts());
        }
    }
}
