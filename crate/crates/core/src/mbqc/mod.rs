//! Measurement-based protocols: chain teleportation with a displaced input,
//! byproduct feed-forward, post-selection, and the CNOT and SWAP checks.
//!
//! Feed-forward is classical post-processing of complete x-basis records.

pub mod flow;

use rand::Rng;
use rayon::prelude::*;

use crate::engine::{
    build_ideal_graph_state, init_ground, outcome_bits, sample_from_probabilities, Basis, EvolutionParams,
    StateVector,
};
use crate::error::{Error, Result};
use crate::geometry::{
    build_chain, build_cnot_layout, build_swap_layout, chain_graph, cz_time, AtomLayout, Edge, GraphSpec,
    InteractionMatrix, Role,
};
use crate::noise::{
    apply_readout_bias, apply_x_flip, averaged_interaction, averaged_pair_interaction, sample_jittered_layout,
    JitterModel, NoiseConfig,
};
use crate::observables::OrderEstimate;
use crate::pulses::{graph_schedule, PulseSchedule};
use crate::rng::{derive_seed, shot_rng};
use crate::stats::jackknife_se;

pub use flow::{derive_relations, Relation};

const DAMPING_STREAM: u64 = 0xda;

/// One global measurement: outcomes in atom order plus feed-forward result.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShotRecord {
    pub basis: Basis,
    pub bits: Vec<u8>,
    pub kept: bool,
    /// Corrected output bits; empty for discarded shots.
    pub corrected: Vec<u8>,
}

fn bit_string(bits: &[u8]) -> String {
    bits.iter().map(|&b| char::from(b'0' + b)).collect()
}

fn parse_bits(s: &str) -> Option<Vec<u8>> {
    s.bytes()
        .map(|c| match c {
            b'0' => Some(0),
            b'1' => Some(1),
            _ => None,
        })
        .collect()
}

impl ShotRecord {
    /// `basis kept bits corrected`, with `-` when there is no corrected output.
    pub fn to_line(&self) -> String {
        let corr = if self.corrected.is_empty() { "-".to_string() } else { bit_string(&self.corrected) };
        format!("{} {} {} {}", self.basis.as_str(), u8::from(self.kept), bit_string(&self.bits), corr)
    }

    pub fn parse_line(line: &str) -> std::result::Result<Self, String> {
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 4 {
            return Err(format!("expected 4 fields, found {}", f.len()));
        }
        let basis = match f[0] {
            "x" => Basis::X,
            "z" => Basis::Z,
            o => return Err(format!("unknown basis `{o}`")),
        };
        let kept = match f[1] {
            "0" => false,
            "1" => true,
            o => return Err(format!("kept flag must be 0 or 1, got `{o}`")),
        };
        let bits = parse_bits(f[2]).ok_or_else(|| format!("bad outcome string `{}`", f[2]))?;
        let corrected = match (kept, f[3]) {
            (_, "-") => vec![],
            (false, o) => return Err(format!("discarded shot carries output `{o}`")),
            (true, o) => parse_bits(o).ok_or_else(|| format!("bad corrected output `{o}`"))?,
        };
        Ok(ShotRecord { basis, bits, kept, corrected })
    }
}

/// Reads a shot file, skipping blank lines and `#` comments.
pub fn parse_records(text: &str) -> Result<Vec<ShotRecord>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        out.push(ShotRecord::parse_line(t).map_err(|msg| Error::Parse { line: i + 1, msg })?);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProtocolKind {
    Teleport,
    Cnot,
    Swap,
}

impl ProtocolKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ProtocolKind::Teleport => "teleport",
            ProtocolKind::Cnot => "cnot",
            ProtocolKind::Swap => "swap",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "teleport" | "identity" => Some(ProtocolKind::Teleport),
            "cnot" => Some(ProtocolKind::Cnot),
            "swap" => Some(ProtocolKind::Swap),
            _ => None,
        }
    }

    fn wires(&self) -> usize {
        match self {
            ProtocolKind::Teleport => 1,
            _ => 2,
        }
    }
}

/// A graph, its geometry and the parity relations used for feed-forward.
#[derive(Debug, Clone)]
pub struct Protocol {
    kind: ProtocolKind,
    layout: AtomLayout,
    graph: GraphSpec,
    inputs: Vec<usize>,
    outputs: Vec<usize>,
    relations: Vec<Relation>,
}

impl Protocol {
    pub fn new(kind: ProtocolKind, layout: AtomLayout, graph: GraphSpec) -> Result<Self> {
        if graph.n_vertices() != layout.len() {
            return Err(Error::SizeMismatch(graph.n_vertices(), layout.len()));
        }
        let inputs = layout.atoms_with_role(Role::Input);
        let outputs = layout.atoms_with_role(Role::Output);
        let w = kind.wires();
        if inputs.len() != w || outputs.len() != w {
            return Err(Error::Layout(format!(
                "{} needs {w} input and {w} output atoms, layout has {} and {}",
                kind.as_str(),
                inputs.len(),
                outputs.len()
            )));
        }
        let relations = derive_relations(&graph, &inputs, &outputs)?;
        Ok(Protocol { kind, layout, graph, inputs, outputs, relations })
    }

    /// Chain of `n` atoms (odd, at least 3) with the first atom pushed out by `dd`.
    pub fn teleport(n: usize, d: f64, dd: f64) -> Result<Self> {
        if n < 3 || n % 2 == 0 {
            return Err(Error::Domain(format!("teleportation needs an odd chain of at least 3 atoms, got {n}")));
        }
        Protocol::new(ProtocolKind::Teleport, build_chain(n, d, dd)?, chain_graph(n))
    }

    pub fn cnot(d: f64, dd: f64) -> Result<Self> {
        let (l, g) = build_cnot_layout(d, dd)?;
        Protocol::new(ProtocolKind::Cnot, l, g)
    }

    pub fn swap(d: f64, dd: f64) -> Result<Self> {
        let (l, g) = build_swap_layout(d, dd)?;
        Protocol::new(ProtocolKind::Swap, l, g)
    }

    /// `n` is used only for chains.
    pub fn build(kind: ProtocolKind, n: usize, d: f64, dd: f64) -> Result<Self> {
        match kind {
            ProtocolKind::Teleport => Protocol::teleport(n, d, dd),
            ProtocolKind::Cnot => Protocol::cnot(d, dd),
            ProtocolKind::Swap => Protocol::swap(d, dd),
        }
    }

    pub fn kind(&self) -> ProtocolKind {
        self.kind
    }

    pub fn layout(&self) -> &AtomLayout {
        &self.layout
    }

    pub fn graph(&self) -> &GraphSpec {
        &self.graph
    }

    pub fn inputs(&self) -> &[usize] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[usize] {
        &self.outputs
    }

    pub fn relations(&self) -> &[Relation] {
        &self.relations
    }

    pub fn n_atoms(&self) -> usize {
        self.layout.len()
    }

    /// Displaced inputs encode a rotation that only survives when the
    /// input atoms read 0.
    pub fn post_selects(&self) -> bool {
        self.layout.input_displacement() > 0.0
    }

    fn check_len(&self, bits: &[u8]) -> Result<()> {
        if bits.len() != self.n_atoms() {
            return Err(Error::SizeMismatch(bits.len(), self.n_atoms()));
        }
        Ok(())
    }

    /// Output outcomes with the byproducts of the body atoms removed.
    pub fn logical_outputs(&self, bits: &[u8]) -> Result<Vec<u8>> {
        self.check_len(bits)?;
        Ok(self
            .relations
            .iter()
            .map(|r| r.byproducts.iter().fold(bits[r.output] ^ u8::from(r.flip), |acc, &b| acc ^ bits[b]))
            .collect())
    }

    /// Output values the gate should produce from the input outcomes.
    pub fn expected_outputs(&self, bits: &[u8]) -> Result<Vec<u8>> {
        self.check_len(bits)?;
        Ok(self.relations.iter().map(|r| r.inputs.iter().fold(0, |acc, &i| acc ^ bits[i])).collect())
    }

    /// Noise-free x-basis probabilities, or z-basis probabilities after
    /// the pulsed measurement rotation.
    pub fn state(&self, spec: &RunSpec) -> Result<(StateVector, Basis)> {
        prepare(&self.layout, &self.graph, spec, averaged_jitter(&spec.noise))
    }
}

/// Feed-forward for one record. On an undistorted chain the input outcome
/// is folded in as well, so ideal teleportation always yields 0.
pub fn byproduct_correct(bits: &[u8], protocol: &Protocol) -> Result<Vec<u8>> {
    let mut out = protocol.logical_outputs(bits)?;
    if protocol.kind == ProtocolKind::Teleport && !protocol.post_selects() {
        for (o, e) in out.iter_mut().zip(protocol.expected_outputs(bits)?) {
            *o ^= e;
        }
    }
    Ok(out)
}

/// With displaced inputs, keeps the shot iff every input atom read 0.
pub fn post_select(bits: &[u8], protocol: &Protocol) -> Result<bool> {
    protocol.check_len(bits)?;
    Ok(!protocol.post_selects() || protocol.inputs.iter().all(|&i| bits[i] == 0))
}

pub fn process_shot(bits: Vec<u8>, protocol: &Protocol) -> Result<ShotRecord> {
    let kept = post_select(&bits, protocol)?;
    let corrected = if kept { byproduct_correct(&bits, protocol)? } else { vec![] };
    Ok(ShotRecord { basis: Basis::X, bits, kept, corrected })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    /// Ideal graph state with edge phases set by the actual distances.
    #[default]
    Oracle,
    /// Full evolution under the drive schedule and all couplings.
    Pulsed,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Oracle => "oracle",
            Mode::Pulsed => "pulsed",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "oracle" => Some(Mode::Oracle),
            "pulsed" => Some(Mode::Pulsed),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunSpec {
    pub mode: Mode,
    pub noise: NoiseConfig,
    pub shots: usize,
    pub seed: u64,
    pub params: EvolutionParams,
    /// Pulsed mode only; defaults to the graph preset at the layout spacing.
    pub schedule: Option<PulseSchedule>,
    /// Pulsed mode only; coupling range in units of the spacing.
    pub cutoff: Option<f64>,
}

impl RunSpec {
    pub fn new(mode: Mode, shots: usize, seed: u64) -> Self {
        RunSpec {
            mode,
            noise: NoiseConfig::none(),
            shots,
            seed,
            params: EvolutionParams::default(),
            schedule: None,
            cutoff: None,
        }
    }

    pub fn oracle(shots: usize, seed: u64) -> Self {
        RunSpec::new(Mode::Oracle, shots, seed)
    }

    pub fn pulsed(shots: usize, seed: u64) -> Self {
        RunSpec::new(Mode::Pulsed, shots, seed)
    }

    pub fn with_noise(mut self, noise: NoiseConfig) -> Self {
        self.noise = noise;
        self
    }
}

fn averaged_jitter(noise: &NoiseConfig) -> f64 {
    if noise.jitter_model == JitterModel::Averaged {
        noise.jitter
    } else {
        0.0
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn prepare(layout: &AtomLayout, graph: &GraphSpec, spec: &RunSpec, avg: f64) -> Result<(StateVector, Basis)> {
    let d = layout.spacing();
    match spec.mode {
        Mode::Oracle => {
            let hold = cz_time(d)?;
            let g = if avg > 0.0 {
                let pos = layout.positions();
                let edges = graph
                    .edges()
                    .iter()
                    .map(|e| Ok(Edge { theta: hold * averaged_pair_interaction(dist(pos[e.a], pos[e.b]), avg)?, ..*e }))
                    .collect::<Result<Vec<_>>>()?;
                GraphSpec::new(graph.n_vertices(), edges)?
            } else {
                graph.with_hold_phases(layout, hold)?
            };
            Ok((build_ideal_graph_state(&g)?, Basis::X))
        }
        Mode::Pulsed => {
            let mut psi = init_ground(layout.len())?;
            let v = if avg > 0.0 {
                averaged_interaction(layout, avg, spec.cutoff)?
            } else {
                InteractionMatrix::from_layout(layout, spec.cutoff)?
            };
            let schedule = match &spec.schedule {
                Some(s) => s.clone(),
                None => graph_schedule(d)?,
            };
            psi.evolve(&schedule, &v, &spec.params)?;
            Ok((psi, Basis::Z))
        }
    }
}

/// Noise-free state of any layout under the run settings, with the basis
/// its probabilities should be read in to give x outcomes.
pub fn prepare_state(layout: &AtomLayout, graph: &GraphSpec, spec: &RunSpec) -> Result<(StateVector, Basis)> {
    prepare(layout, graph, spec, averaged_jitter(&spec.noise))
}

fn apply_noise<R: Rng + ?Sized>(bits: &mut [u8], noise: &NoiseConfig, rng: &mut R) {
    apply_x_flip(bits, noise.eps_l, rng);
    apply_readout_bias(bits, noise.eps_m, rng);
}

/// Raw x-basis outcomes, one bit vector per shot, with flips and readout
/// bias applied. Shot `i` draws only from its own stream.
pub fn sample_outcomes(layout: &AtomLayout, graph: &GraphSpec, spec: &RunSpec) -> Result<Vec<Vec<u8>>> {
    spec.noise.validate()?;
    if spec.shots == 0 {
        return Err(Error::Domain("need at least one shot".into()));
    }
    let n = layout.len();
    let noise = spec.noise;
    if noise.jitter > 0.0 && noise.jitter_model == JitterModel::Quenched {
        return (0..spec.shots as u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = shot_rng(spec.seed, i);
                let jl = sample_jittered_layout(layout, noise.jitter, &mut rng)?;
                let (psi, basis) = prepare(&jl, graph, spec, 0.0)?;
                let mut bits = outcome_bits(psi.measure_all(basis, &mut rng), n);
                apply_noise(&mut bits, &noise, &mut rng);
                Ok(bits)
            })
            .collect();
    }
    let (psi, basis) = prepare(layout, graph, spec, averaged_jitter(&noise))?;
    let probs = psi.probabilities(basis);
    let us: Vec<f64> = (0..spec.shots as u64).into_par_iter().map(|i| shot_rng(spec.seed, i).random()).collect();
    let outcomes = sample_from_probabilities(&probs, &us);
    Ok(outcomes
        .into_par_iter()
        .enumerate()
        .map(|(i, o)| {
            let mut rng = shot_rng(spec.seed, i as u64);
            let _: f64 = rng.random();
            let mut bits = outcome_bits(o, n);
            apply_noise(&mut bits, &noise, &mut rng);
            bits
        })
        .collect())
}

/// Samples, post-selects and corrects every shot. Teleportation runs also
/// pass the output through `eps_damp` decay: each of the N steps decays
/// with that probability and a decayed output is replaced by a random bit.
pub fn run_protocol(protocol: &Protocol, spec: &RunSpec) -> Result<Vec<ShotRecord>> {
    let raw = sample_outcomes(&protocol.layout, &protocol.graph, spec)?;
    let eps = spec.noise.eps_damp;
    let damp_seed = derive_seed(spec.seed, DAMPING_STREAM);
    let steps = protocol.n_atoms();
    raw.into_par_iter()
        .enumerate()
        .map(|(i, bits)| {
            let mut rec = process_shot(bits, protocol)?;
            if rec.kept && eps > 0.0 && protocol.kind == ProtocolKind::Teleport {
                let mut rng = shot_rng(damp_seed, i as u64);
                let decayed = (0..steps).fold(false, |acc, _| rng.random::<f64>() < eps || acc);
                if decayed {
                    rec.corrected[0] = u8::from(rng.random::<bool>());
                }
            }
            Ok(rec)
        })
        .collect()
}

fn estimate(values: &[f64], total: usize) -> Result<OrderEstimate> {
    if values.is_empty() {
        return Err(Error::AllDiscarded(total));
    }
    let (value, std_error) = if values.len() >= 2 { jackknife_se(values)? } else { (values[0], 0.0) };
    Ok(OrderEstimate { value, std_error, n_shots_used: values.len(), n_shots_total: total })
}

/// Fraction of kept shots whose corrected output is 0.
pub fn teleport_estimate(records: &[ShotRecord]) -> Result<OrderEstimate> {
    let vals: Vec<f64> = records
        .iter()
        .filter(|r| r.kept)
        .map(|r| if r.corrected.first() == Some(&0) { 1.0 } else { 0.0 })
        .collect();
    estimate(&vals, records.len())
}

/// Teleportation order parameter on an `n`-atom chain.
pub fn teleport_q(n: usize, d: f64, dd: f64, spec: &RunSpec) -> Result<OrderEstimate> {
    let p = Protocol::teleport(n, d, dd)?;
    teleport_estimate(&run_protocol(&p, spec)?)
}

/// Kept probability mass and the joint distribution of the corrected
/// outputs (index built from output bits, first output most significant),
/// summed exactly over the Born distribution of `probs`.
pub fn corrected_distribution(protocol: &Protocol, probs: &[f64]) -> Result<(f64, Vec<f64>)> {
    let n = protocol.n_atoms();
    if probs.len() != 1usize << n {
        return Err(Error::SizeMismatch(probs.len(), 1usize << n));
    }
    let mut kept = 0.0;
    let mut dist = vec![0.0; 1usize << protocol.outputs.len()];
    for (o, &p) in probs.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let bits = outcome_bits(o as u64, n);
        if post_select(&bits, protocol)? {
            kept += p;
            let c = byproduct_correct(&bits, protocol)?;
            dist[c.iter().fold(0usize, |a, &b| a << 1 | b as usize)] += p;
        }
    }
    if kept <= 0.0 {
        return Err(Error::AllDiscarded(0));
    }
    dist.iter_mut().for_each(|x| *x /= kept);
    Ok((kept, dist))
}

/// Exact teleportation order parameter of the noise-free state.
pub fn teleport_q_exact(protocol: &Protocol, spec: &RunSpec) -> Result<f64> {
    let (psi, basis) = protocol.state(spec)?;
    Ok(corrected_distribution(protocol, &psi.probabilities(basis))?.1[0])
}

/// One outcome pattern of the measured (non-output) atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    /// Outcomes of the non-output atoms, in atom order.
    pub outcomes: Vec<u8>,
    pub probability: f64,
    pub kept: bool,
    /// Distribution of the corrected outputs conditioned on this branch.
    pub corrected: Vec<f64>,
}

const BRANCH_CUTOFF: f64 = 1e-12;

/// Measures every non-output atom in x by successive projection, then
/// reads the outputs. Branches below `1e-12` probability are dropped.
pub fn enumerate_branches(protocol: &Protocol, state: &StateVector) -> Result<Vec<Branch>> {
    let n = protocol.n_atoms();
    if state.n_atoms() != n {
        return Err(Error::SizeMismatch(state.n_atoms(), n));
    }
    let measured: Vec<usize> = (0..n).filter(|i| !protocol.outputs.contains(i)).collect();
    let mut out = Vec::new();
    let mut bits = vec![0u8; n];
    descend(protocol, state.clone(), &measured, 0, 1.0, &mut bits, &mut out)?;
    Ok(out)
}

fn descend(
    protocol: &Protocol,
    psi: StateVector,
    measured: &[usize],
    depth: usize,
    prob: f64,
    bits: &mut Vec<u8>,
    out: &mut Vec<Branch>,
) -> Result<()> {
    if depth == measured.len() {
        let k = protocol.outputs.len();
        let kept = post_select(bits, protocol)?;
        let mut corrected = vec![0.0; 1usize << k];
        for combo in 0..1usize << k {
            let mut leaf = psi.clone();
            let mut p = 1.0;
            for (j, &o) in protocol.outputs.iter().enumerate() {
                let b = (combo >> (k - 1 - j) & 1) as u8;
                bits[o] = b;
                match leaf.project(o, Basis::X, b) {
                    Ok(q) => p *= q,
                    Err(Error::ZeroProbability { .. }) => {
                        p = 0.0;
                        break;
                    }
                    Err(e) => return Err(e),
                }
            }
            if p > 0.0 && kept {
                let c = byproduct_correct(bits, protocol)?;
                corrected[c.iter().fold(0usize, |a, &b| a << 1 | b as usize)] += p;
            }
        }
        let outcomes = measured.iter().map(|&i| bits[i]).collect();
        out.push(Branch { outcomes, probability: prob, kept, corrected });
        return Ok(());
    }
    let atom = measured[depth];
    for b in 0..2u8 {
        let mut next = psi.clone();
        let p = match next.project(atom, Basis::X, b) {
            Ok(p) => p,
            Err(Error::ZeroProbability { .. }) => continue,
            Err(e) => return Err(e),
        };
        if prob * p < BRANCH_CUTOFF {
            continue;
        }
        bits[atom] = b;
        descend(protocol, next, measured, depth + 1, prob * p, bits, out)?;
    }
    Ok(())
}

/// Scores of a two-wire gate run.
#[derive(Debug, Clone, PartialEq)]
pub struct GateScores {
    /// Both corrected outputs equal the expected values.
    pub joint: OrderEstimate,
    /// Mean fraction of correct output bits per shot.
    pub per_bit: OrderEstimate,
}

pub fn gate_scores(protocol: &Protocol, records: &[ShotRecord]) -> Result<GateScores> {
    let mut joint = Vec::new();
    let mut per_bit = Vec::new();
    for r in records.iter().filter(|r| r.kept) {
        let want = protocol.expected_outputs(&r.bits)?;
        let hits = want.iter().zip(&r.corrected).filter(|(a, b)| a == b).count();
        joint.push(if hits == want.len() { 1.0 } else { 0.0 });
        per_bit.push(hits as f64 / want.len() as f64);
    }
    Ok(GateScores { joint: estimate(&joint, records.len())?, per_bit: estimate(&per_bit, records.len())? })
}

/// Exact probability that a kept shot of the noise-free state violates the
/// expected gate relation.
pub fn gate_violation_probability(protocol: &Protocol, spec: &RunSpec) -> Result<f64> {
    let (psi, basis) = protocol.state(spec)?;
    let probs = psi.probabilities(basis);
    let n = protocol.n_atoms();
    let mut kept = 0.0;
    let mut bad = 0.0;
    for (o, &p) in probs.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let bits = outcome_bits(o as u64, n);
        if post_select(&bits, protocol)? {
            kept += p;
            if byproduct_correct(&bits, protocol)? != protocol.expected_outputs(&bits)? {
                bad += p;
            }
        }
    }
    if kept <= 0.0 {
        return Err(Error::AllDiscarded(0));
    }
    Ok(bad / kept)
}

/// Frequencies of corrected outputs, rows indexed by the input outcomes
/// (first input most significant), columns by the corrected outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct TruthTable {
    pub counts: [[u64; 4]; 4],
    pub scores: GateScores,
}

impl TruthTable {
    pub fn frequencies(&self) -> [[f64; 4]; 4] {
        let total: u64 = self.counts.iter().flatten().sum();
        let mut f = [[0.0; 4]; 4];
        for (r, row) in self.counts.iter().enumerate() {
            for (c, &x) in row.iter().enumerate() {
                f[r][c] = x as f64 / total.max(1) as f64;
            }
        }
        f
    }
}

pub fn truth_table(protocol: &Protocol, records: &[ShotRecord]) -> Result<TruthTable> {
    if protocol.kind.wires() != 2 {
        return Err(Error::Domain("truth tables need a two-wire protocol".into()));
    }
    let mut counts = [[0u64; 4]; 4];
    for r in records.iter().filter(|r| r.kept) {
        let row = 2 * r.bits[protocol.inputs[0]] as usize + r.bits[protocol.inputs[1]] as usize;
        let col = 2 * r.corrected[0] as usize + r.corrected[1] as usize;
        counts[row][col] += 1;
    }
    Ok(TruthTable { counts, scores: gate_scores(protocol, records)? })
}

pub fn cnot_truth_table(d: f64, dd: f64, spec: &RunSpec) -> Result<TruthTable> {
    let p = Protocol::cnot(d, dd)?;
    truth_table(&p, &run_protocol(&p, spec)?)
}

/// Mean fraction of output bits that carry the exchanged input values.
pub fn swap_check(d: f64, spec: &RunSpec) -> Result<OrderEstimate> {
    let p = Protocol::swap(d, 0.0)?;
    Ok(gate_scores(&p, &run_protocol(&p, spec)?)?.per_bit)
}
