//! Coherent simulation of a linear network code: every node embeds its map
//! with controlled shifts, incoming qudits are measured in the Fourier basis,
//! and the resulting phases are undone with Z corrections.

use crate::linalg::{dot_mod, RingMatrix};
use crate::network::{CodingNetwork, Feed, NodeSpec, Sink, WireForms, Wiring};
use crate::oracle::apply_isometry;
use crate::report::{OutcomeSpec, Protocol, RunReport};
use crate::schedule::{
    CorrectionReason, Direction, Execution, Mode, Op, PauliKind, QuditInfo, RunError, Schedule, Term,
};
use crate::state::{OutcomeSource, QuditState, StateError};

/// `Ũ_V`: append one `|0⟩` qudit per row of `V` and apply `cX^{V_jk}` from
/// input `k` to output `j`, so `|x⟩|0⟩ ↦ |x⟩|Vx⟩`. Positions are taken
/// from `inputs`; the new qudits get the labels in `outputs`.
pub fn embed_node(
    state: &mut QuditState,
    node: &NodeSpec,
    inputs: &[usize],
    outputs: &[usize],
) -> Result<(), StateError> {
    let v = &node.matrix;
    if v.cols() != inputs.len() || v.rows() != outputs.len() {
        return Err(StateError::ShapeMismatch(
            format!("{}x{} matrix", v.rows(), v.cols()),
            format!("{} inputs, {} outputs", inputs.len(), outputs.len()),
        ));
    }
    for (j, &out) in outputs.iter().enumerate() {
        state.push_zero(out)?;
        let t = state.position(out)?;
        for (k, &input) in inputs.iter().enumerate() {
            let c = state.position(input)?;
            state.apply_cx(c, t, v.get(j, k) as i64)?;
        }
    }
    Ok(())
}

/// `τ = Lᵀr`: the Z exponents a node applies to its inputs once the
/// recipients of its outputs report outcomes `r`.
pub fn node_phase_correction(r: &[u64], l: &RingMatrix) -> Result<Vec<u64>, RunError> {
    Ok(l.transpose().mul_vec(r)?)
}

/// `σ = r·κ`: target Z exponents undoing the phase left by measuring a qudit
/// whose value is `κ·y` in terms of the output vector `y`.
pub fn target_z_correction(r: u64, kappa: &[u64], d: u64) -> Vec<u64> {
    kappa.iter().map(|&k| r % d * k % d).collect()
}

/// Everything the correction steps need to know about the composite map.
#[derive(Debug, Clone)]
pub struct CorrectionPlan {
    pub composite: RingMatrix,
    pub left_inverse: RingMatrix,
    /// Output indices grouped by the target node holding them.
    pub target_blocks: Vec<Vec<usize>>,
    pub block_diagonal: Option<RingMatrix>,
}

impl CorrectionPlan {
    pub fn new(composite: RingMatrix, output_holders: &[String]) -> Result<Self, RunError> {
        let d = composite.modulus();
        let left_inverse = composite.left_inverse().ok_or(RunError::NotInjective { d })?;
        let mut target_blocks: Vec<(String, Vec<usize>)> = Vec::new();
        for (o, holder) in output_holders.iter().enumerate() {
            match target_blocks.iter_mut().find(|(h, _)| h == holder) {
                Some((_, block)) => block.push(o),
                None => target_blocks.push((holder.clone(), vec![o])),
            }
        }
        let target_blocks: Vec<Vec<usize>> = target_blocks.into_iter().map(|(_, b)| b).collect();
        let block_diagonal = composite.find_block_diagonal(&target_blocks)?;
        Ok(Self { composite, left_inverse, target_blocks, block_diagonal })
    }

    pub fn modulus(&self) -> u64 {
        self.composite.modulus()
    }

    /// `κ = Aᵀλ`.
    pub fn kappa(&self, lambda: &[u64]) -> Vec<u64> {
        self.left_inverse.transpose().mul_vec(lambda).expect("λ has one entry per source")
    }

    /// Matrix `C` with `σ = C·s` for the source-measurement phases, and whether
    /// it needs communication outside the network.
    pub fn source_correction(&self, mode: Mode) -> (RingMatrix, bool) {
        match (mode, &self.block_diagonal) {
            (Mode::Constrained, Some(b)) => (b.transpose().mul(&self.composite).expect("shapes agree"), false),
            (Mode::Constrained, None) => (self.left_inverse.transpose(), true),
            (Mode::Free, _) => (self.left_inverse.transpose(), false),
        }
    }
}

/// Per-network bookkeeping shared by the coherent and measurement-based compilers.
pub(crate) struct Layout<'n> {
    pub net: &'n CodingNetwork,
    pub wiring: Wiring,
    pub forms: WireForms,
    pub plan: CorrectionPlan,
}

impl<'n> Layout<'n> {
    pub fn new(net: &'n CodingNetwork) -> Result<Self, RunError> {
        let wiring = net.wiring()?;
        let forms = net.link_forms(&wiring)?;
        let composite = net.composite_map()?;
        let holders: Vec<String> = wiring.output_nodes.iter().map(|&n| net.nodes[n].id.clone()).collect();
        let plan = CorrectionPlan::new(composite, &holders)?;
        Ok(Self { net, wiring, forms, plan })
    }

    pub fn id(&self, node: usize) -> &str {
        &self.net.nodes[node].id
    }

    pub fn target_ids(&self) -> Vec<String> {
        self.wiring.target_nodes().into_iter().map(|n| self.id(n).to_string()).collect()
    }

    /// Node feeding link `l`.
    pub fn link_from(&self, l: usize) -> usize {
        self.wiring.link_ends[l].0
    }

    pub fn link_to(&self, l: usize) -> usize {
        self.wiring.link_ends[l].1
    }

    /// `(from, to, λ)` per link.
    pub fn link_list(&self) -> Vec<(String, String, Vec<u64>)> {
        (0..self.net.links.len())
            .map(|l| (self.id(self.link_from(l)).to_string(), self.id(self.link_to(l)).to_string(), self.forms.links[l].clone()))
            .collect()
    }
}

/// Sends of outcome `q` from `from` to every target other than `from`.
pub(crate) fn report_to_targets(targets: &[String], from: &str, q: usize) -> Vec<Op> {
    targets
        .iter()
        .filter(|t| *t != from)
        .map(|t| Op::Send {
            from: from.to_string(),
            to: t.clone(),
            terms: vec![(q, 1)],
            over_network: false,
            direction: Direction::Direct,
        })
        .collect()
}

/// Z corrections on the outputs for outcomes of qudits holding `λ·x`.
pub(crate) fn kappa_corrections(
    plan: &CorrectionPlan,
    measured: &[(usize, Vec<u64>)],
    outputs: &[usize],
    reason: CorrectionReason,
) -> Vec<Op> {
    let kappas: Vec<(usize, Vec<u64>)> = measured.iter().map(|(q, l)| (*q, plan.kappa(l))).collect();
    outputs
        .iter()
        .enumerate()
        .map(|(o, &out)| {
            let terms: Vec<Term> = kappas.iter().filter(|(_, k)| k[o] != 0).map(|(q, k)| (*q, k[o])).collect();
            Op::Correct { qudit: out, kind: PauliKind::Z, terms, reason }
        })
        .collect()
}

/// Source-phase correction. With a block-diagonal `B` the sources network-code
/// their outcomes forward along every link; otherwise each source messages
/// every target directly.
pub(crate) fn source_phase_ops(
    plan: &CorrectionPlan,
    mode: Mode,
    inputs: &[(usize, String)],
    targets: &[String],
    links: &[(String, String, Vec<u64>)],
    outputs: &[usize],
) -> (Vec<Op>, bool) {
    let (c, out_of_network) = plan.source_correction(mode);
    let mut ops = Vec::new();
    if out_of_network {
        for (q, from) in inputs {
            ops.extend(report_to_targets(targets, from, *q));
        }
    } else {
        for (from, to, form) in links {
            let terms: Vec<Term> =
                form.iter().enumerate().filter(|(_, &c)| c != 0).map(|(i, &c)| (inputs[i].0, c)).collect();
            ops.push(Op::Send {
                from: from.clone(),
                to: to.clone(),
                terms,
                over_network: true,
                direction: Direction::Forward,
            });
        }
    }
    for (o, &out) in outputs.iter().enumerate() {
        let terms: Vec<Term> =
            (0..inputs.len()).filter(|&i| c.get(o, i) != 0).map(|i| (inputs[i].0, c.get(o, i))).collect();
        ops.push(Op::Correct { qudit: out, kind: PauliKind::Z, terms, reason: CorrectionReason::SourcePhase });
    }
    (ops, out_of_network)
}

/// `Z^{Lᵀr}` on a node's inputs, `r` being the outcomes of its outgoing link
/// messages (`None` marks out-ports that are network outputs).
pub(crate) fn node_phase_ops(v: &RingMatrix, inputs: &[usize], out_messages: &[Option<usize>]) -> Vec<Op> {
    if out_messages.iter().all(Option::is_none) {
        return Vec::new();
    }
    inputs
        .iter()
        .enumerate()
        .map(|(k, &a)| {
            let terms: Vec<Term> = out_messages
                .iter()
                .enumerate()
                .filter_map(|(j, m)| m.filter(|_| v.get(j, k) != 0).map(|q| (q, v.get(j, k))))
                .collect();
            Op::Correct { qudit: a, kind: PauliKind::Z, terms, reason: CorrectionReason::NodePhase }
        })
        .collect()
}

/// Compile the coherent protocol. Qudits: network inputs first, then one per
/// node out-port in topological order.
pub fn coherent_schedule(net: &CodingNetwork, mode: Mode) -> Result<Schedule, RunError> {
    let lay = Layout::new(net)?;
    let d = net.modulus;
    let w = &lay.wiring;
    let k = net.inputs.len();

    let mut qudits: Vec<QuditInfo> = (0..k)
        .map(|i| QuditInfo { label: format!("in{i}"), holder: lay.id(w.input_nodes[i]).to_string() })
        .collect();
    let mut lambda: Vec<Vec<u64>> = (0..k).map(|i| (0..k).map(|j| u64::from(i == j)).collect()).collect();
    let mut link_qudit = vec![0; net.links.len()];
    let mut output_qudit = vec![0; net.outputs.len()];
    let mut out_qudits: Vec<Vec<usize>> = vec![Vec::new(); net.nodes.len()];
    for &n in &w.order {
        for (j, sink) in w.out_sinks[n].iter().enumerate() {
            let q = qudits.len();
            let (holder, form) = match *sink {
                Sink::Link(l) => {
                    link_qudit[l] = q;
                    (lay.id(lay.link_to(l)).to_string(), lay.forms.links[l].clone())
                }
                Sink::Output(o) => {
                    output_qudit[o] = q;
                    (lay.id(n).to_string(), lay.forms.outputs[o].clone())
                }
            };
            qudits.push(QuditInfo { label: format!("{}.out{j}", lay.id(n)), holder });
            lambda.push(form);
            out_qudits[n].push(q);
        }
    }
    let in_qudits: Vec<Vec<usize>> = w
        .in_feeds
        .iter()
        .map(|feeds| feeds.iter().map(|f| match *f { Feed::Input(i) => i, Feed::Link(l) => link_qudit[l] }).collect())
        .collect();
    let input_qudits: Vec<usize> = (0..k).collect();

    let targets = lay.target_ids();
    let mut ops = Vec::new();
    for &n in &w.order {
        let v = &net.nodes[n].matrix;
        for (j, &out) in out_qudits[n].iter().enumerate() {
            ops.push(Op::PrepareZero(out));
            for (kk, &a) in in_qudits[n].iter().enumerate() {
                if v.get(j, kk) != 0 {
                    ops.push(Op::Cx { control: a, target: out, power: v.get(j, kk) });
                }
            }
        }
    }

    let mut requires_out_of_network = false;
    match mode {
        Mode::Free => {
            // Everything but the outputs, in label order, after all messages are sent.
            let measured: Vec<usize> = (0..qudits.len()).filter(|q| !output_qudit.contains(q)).collect();
            for &q in &measured {
                ops.push(Op::Measure(q));
                ops.extend(report_to_targets(&targets, &qudits[q].holder, q));
            }
            let with_lambda: Vec<(usize, Vec<u64>)> = measured.iter().map(|&q| (q, lambda[q].clone())).collect();
            ops.extend(kappa_corrections(&lay.plan, &with_lambda, &output_qudit, CorrectionReason::OutputPhase));
        }
        Mode::Constrained => {
            for &n in w.order.iter().rev() {
                let out_messages: Vec<Option<usize>> = w.out_sinks[n]
                    .iter()
                    .zip(&out_qudits[n])
                    .map(|(sink, &q)| matches!(sink, Sink::Link(_)).then_some(q))
                    .collect();
                ops.extend(node_phase_ops(&net.nodes[n].matrix, &in_qudits[n], &out_messages));
                for (port, &a) in in_qudits[n].iter().enumerate() {
                    ops.push(Op::Measure(a));
                    if let Feed::Link(l) = w.in_feeds[n][port] {
                        ops.push(Op::Send {
                            from: lay.id(n).to_string(),
                            to: lay.id(lay.link_from(l)).to_string(),
                            terms: vec![(a, 1)],
                            over_network: true,
                            direction: Direction::Backward,
                        });
                    }
                }
            }
            let inputs: Vec<(usize, String)> = input_qudits.iter().map(|&q| (q, qudits[q].holder.clone())).collect();
            let (source_ops, flag) =
                source_phase_ops(&lay.plan, mode, &inputs, &targets, &lay.link_list(), &output_qudit);
            ops.extend(source_ops);
            requires_out_of_network = flag;
        }
    }

    Ok(Schedule { d, mode, qudits, inputs: input_qudits, outputs: output_qudit, ops, requires_out_of_network })
}

/// Run the coherent protocol and compare with the isometry `|x⟩ ↦ |Mx⟩`.
pub fn run_coherent(
    net: &CodingNetwork,
    input: &QuditState,
    mode: Mode,
    source: &mut dyn OutcomeSource,
    spec: OutcomeSpec,
) -> Result<(QuditState, RunReport), RunError> {
    let schedule = coherent_schedule(net, mode)?;
    if let OutcomeSpec::Forced(v) = &spec {
        let expected = schedule.measurement_count();
        if v.len() != expected {
            return Err(RunError::ForcedLength { expected, actual: v.len() });
        }
    }
    let finished = Execution::new(&schedule, input)?.run(source)?;
    let oracle = apply_isometry(&net.composite_map()?, input)?;
    let fidelity = finished.output.fidelity(&oracle)?;
    let report = RunReport::from_run(Protocol::Coherent, &schedule, None, spec, &finished, None, fidelity);
    Ok((finished.output, report))
}

/// `λ·x` helper for tests and callers inspecting schedules.
pub fn dependence_value(lambda: &[u64], x: &[u64], d: u64) -> u64 {
    dot_mod(lambda, x, d)
}
