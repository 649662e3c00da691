//! Experiment runner: config files in, shot records, summaries and
//! tab-separated tables out. Every output starts with a header carrying the
//! tool version, a SHA-256 of the effective settings and the seed.

pub mod config;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use sha2::{Digest, Sha256};

pub use config::{ExperimentConfig, Kind};

use crate::engine::{bell_state, init_ground, overlap, Basis, StateVector};
use crate::error::{Error, Result};
use crate::geometry::{build_chain, build_cnot_layout, build_rect, build_swap_layout, chain_graph, InteractionMatrix};
use crate::mbqc::{prepare_state, run_protocol, sample_outcomes, teleport_estimate, truth_table, Mode, ProtocolKind, ShotRecord};
use crate::mitigation::{correct_counts, CountVector};
use crate::noise::{domain_size, p_even, DomainModel};
use crate::observables::{
    displacement_for_gamma, gamma_from_displacement, q_ideal, stabilizer_average, string_order, string_order_exact,
    OrderEstimate, StringSpec,
};
use crate::pulses::{bell_schedule, Label};
use crate::rng::derive_seed;
use crate::stats::{fit_epsilon, FitModel, FitPoint, Weighting};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(name = "rygraph", version, about = "Graph-state emulator for always-on Rydberg interactions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one experiment; shot records go to --out.
    Run(ConfigArgs),
    /// Repeat an experiment over one variable and tabulate the estimates.
    Sweep(SweepArgs),
    /// Fit an error probability to a table whose first columns are n, value, se.
    Fit(FitArgs),
    /// Remove readout bias from a count file.
    Mitigate(MitigateArgs),
    /// Largest graph whose order parameter stays above a threshold.
    Domain(DomainArgs),
    /// Print atom positions and roles of a built-in geometry.
    Layout(LayoutArgs),
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub shots: Option<usize>,
    #[arg(long, value_parser = parse_mode)]
    pub mode: Option<Mode>,
    #[arg(long = "eps-m")]
    pub eps_m: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_mode(s: &str) -> std::result::Result<Mode, String> {
    Mode::parse(s).ok_or_else(|| format!("unknown mode `{s}` (oracle or pulsed)"))
}

impl ConfigArgs {
    pub fn resolve(&self) -> Result<ExperimentConfig> {
        let mut c = ExperimentConfig::load(&self.config)?;
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if let Some(s) = self.shots {
            c.shots = s;
        }
        if let Some(m) = self.mode {
            c.mode = m;
        }
        if let Some(e) = self.eps_m {
            c.noise.eps_m = e;
        }
        if let Some(o) = &self.out {
            c.out = Some(o.clone());
        }
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepVar {
    /// String length on a chain of 2n - 1 atoms.
    #[value(name = "n_string")]
    NString,
    /// Teleportation chain length.
    #[value(name = "N_chain")]
    NChain,
    /// Encoded rotation magnitude; the input displacement is solved for.
    #[value(name = "gamma")]
    Gamma,
    /// Atom spacing in um.
    #[value(name = "d")]
    D,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: ConfigArgs,
    #[arg(long = "var", value_enum)]
    pub var: SweepVar,
    /// Comma-separated values.
    #[arg(long, conflicts_with = "range", required_unless_present = "range")]
    pub values: Option<String>,
    /// Inclusive `start:stop:step`.
    #[arg(long)]
    pub range: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    #[value(name = "p_even")]
    PEven,
    #[value(name = "trajectory")]
    Trajectory,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub table: PathBuf,
    #[arg(long, value_enum, default_value = "p_even")]
    pub model: ModelArg,
    /// Ignore the error bars.
    #[arg(long)]
    pub unweighted: bool,
    /// First column holds chain lengths N; the model uses n = (N + 1) / 2.
    #[arg(long)]
    pub chain: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MitigateArgs {
    #[arg(long)]
    pub counts: PathBuf,
    #[arg(long = "eps-m")]
    pub eps_m: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DomainArg {
    #[value(name = "ideal")]
    Ideal,
    #[value(name = "p_even")]
    PEven,
}

#[derive(Debug, Args)]
pub struct DomainArgs {
    #[arg(value_enum)]
    pub model: DomainArg,
    pub eps: f64,
    #[arg(default_value_t = 2.0 / 3.0)]
    pub threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LayoutKind {
    Chain,
    Rect,
    Cnot,
    Swap,
}

#[derive(Debug, Args)]
pub struct LayoutArgs {
    #[arg(long, value_enum)]
    pub kind: LayoutKind,
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    #[arg(long, default_value_t = 3)]
    pub rows: usize,
    #[arg(long, default_value_t = 4)]
    pub cols: usize,
    #[arg(long, default_value_t = crate::geometry::DEFAULT_SPACING)]
    pub d: f64,
    #[arg(long, default_value_t = 0.0)]
    pub dd: f64,
    /// Nominal positions in units of the spacing, readable as a layout file.
    #[arg(long)]
    pub grid: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Runs a parsed command and returns what should go to stdout.
pub fn execute(cli: Cli) -> Result<String> {
    match cli.command {
        Command::Run(a) => cmd_run(&a.resolve()?),
        Command::Sweep(a) => {
            let cfg = a.common.resolve()?;
            let values = match (&a.values, &a.range) {
                (Some(v), _) => parse_values(v)?,
                (None, Some(r)) => parse_range(r)?,
                (None, None) => return Err(Error::Config("give --values or --range".into())),
            };
            let table = cmd_sweep(&cfg, a.var, &values)?;
            emit(cfg.out.as_deref(), table)
        }
        Command::Fit(a) => {
            let text = read(&a.table)?;
            let model = match a.model {
                ModelArg::PEven => FitModel::PEven,
                ModelArg::Trajectory => FitModel::Trajectory,
            };
            let weighting = if a.unweighted { Weighting::Unweighted } else { Weighting::Weighted };
            emit(a.out.as_deref(), cmd_fit(&text, model, weighting, a.chain)?)
        }
        Command::Mitigate(a) => emit(a.out.as_deref(), cmd_mitigate(&read(&a.counts)?, a.eps_m)?),
        Command::Domain(a) => {
            let model = match a.model {
                DomainArg::Ideal => DomainModel::Ideal,
                DomainArg::PEven => DomainModel::PEven,
            };
            cmd_domain(model, a.eps, a.threshold)
        }
        Command::Layout(a) => {
            let text = cmd_layout(&a)?;
            emit(a.out.as_deref(), text)
        }
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io(format!("cannot write {}: {e}", path.display())))
}

/// Writes to `out` when given, otherwise hands the text back for stdout.
fn emit(out: Option<&Path>, text: String) -> Result<String> {
    match out {
        Some(p) => {
            write(p, &text)?;
            Ok(format!("wrote {}\n", p.display()))
        }
        None => Ok(text),
    }
}

pub fn sha256_hex(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

pub fn header(hash: &str, seed: Option<u64>) -> String {
    let seed = seed.map(|s| s.to_string()).unwrap_or_else(|| "-".into());
    format!("# rygraph {VERSION}\n# config_sha256 {hash}\n# seed {seed}\n")
}

fn kv(out: &mut String, key: &str, value: impl std::fmt::Display) {
    let _ = writeln!(out, "{key}\t{value}");
}

fn f6(x: f64) -> String {
    format!("{x:.6}")
}

/// Runs the configured experiment. Shot records are written to the
/// configured output path; the summary is returned.
/// Canonical config text with the output path removed.
fn hashed_text(cfg: &ExperimentConfig) -> String {
    ExperimentConfig { out: None, ..cfg.clone() }.to_text()
}

fn config_hash(cfg: &ExperimentConfig) -> String {
    sha256_hex(&hashed_text(cfg))
}

pub fn cmd_run(cfg: &ExperimentConfig) -> Result<String> {
    let head = header(&config_hash(cfg), Some(cfg.seed));
    let mut summary = head.clone();
    kv(&mut summary, "protocol", cfg.kind.as_str());
    kv(&mut summary, "mode", cfg.mode.as_str());
    let records = match cfg.kind {
        Kind::Bell => run_bell(cfg, &mut summary)?,
        Kind::Graph => run_graph(cfg, &mut summary)?,
        _ => run_gate(cfg, &mut summary)?,
    };
    if let Some(out) = &cfg.out {
        let mut text = head;
        text.push_str("# basis kept bits corrected\n");
        for r in &records {
            text.push_str(&r.to_line());
            text.push('\n');
        }
        write(out, &text)?;
    }
    Ok(summary)
}

fn run_gate(cfg: &ExperimentConfig, s: &mut String) -> Result<Vec<ShotRecord>> {
    let p = cfg.protocol()?;
    let recs = run_protocol(&p, &cfg.run_spec()?)?;
    let kept = recs.iter().filter(|r| r.kept).count();
    kv(s, "atoms", p.n_atoms());
    kv(s, "shots", recs.len());
    kv(s, "kept", kept);
    kv(s, "kept_fraction", f6(kept as f64 / recs.len() as f64));
    match p.kind() {
        ProtocolKind::Teleport => {
            let e = teleport_estimate(&recs)?;
            kv(s, "estimate", f6(e.value));
            kv(s, "se", f6(e.std_error));
            if p.post_selects() {
                let g = gamma_from_displacement(cfg.d, cfg.dd)?;
                kv(s, "gamma", f6(g));
                kv(s, "q_ideal", f6(q_ideal(g)));
            }
        }
        kind => {
            let t = truth_table(&p, &recs)?;
            let main = if kind == ProtocolKind::Cnot { t.scores.joint } else { t.scores.per_bit };
            kv(s, "estimate", f6(main.value));
            kv(s, "se", f6(main.std_error));
            kv(s, "joint_accuracy", f6(t.scores.joint.value));
            kv(s, "joint_se", f6(t.scores.joint.std_error));
            kv(s, "per_bit_accuracy", f6(t.scores.per_bit.value));
            kv(s, "per_bit_se", f6(t.scores.per_bit.std_error));
            for (row, counts) in t.counts.iter().enumerate() {
                let cells: Vec<String> = counts.iter().map(|c| c.to_string()).collect();
                kv(s, &format!("inputs_{row:02b}"), cells.join("\t"));
            }
        }
    }
    Ok(recs)
}

/// (sum_i sqrt(p_i q_i))^2 between two distributions.
pub fn bhattacharyya_fidelity(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(a, b)| (a * b).sqrt()).sum::<f64>().powi(2)
}

fn run_bell(cfg: &ExperimentConfig, s: &mut String) -> Result<Vec<ShotRecord>> {
    let layout = build_chain(2, cfg.d, 0.0)?;
    let mut spec = cfg.run_spec()?;
    if spec.schedule.is_none() {
        spec.schedule = Some(bell_schedule(cfg.d)?);
    }
    let v = InteractionMatrix::from_layout(&layout, cfg.cutoff)?;
    let mut psi = init_ground(2)?;
    psi.evolve(spec.schedule.as_ref().expect("schedule set above"), &v, &spec.params)?;
    let ov = overlap(&psi, &bell_state())?;
    let raw = sample_outcomes(&layout, &chain_graph(2), &spec)?;
    let mut counts = [0usize; 4];
    for b in &raw {
        counts[2 * b[0] as usize + b[1] as usize] += 1;
    }
    let m = raw.len() as f64;
    let freq: Vec<f64> = counts.iter().map(|&c| c as f64 / m).collect();
    kv(s, "shots", raw.len());
    kv(s, "state_overlap", f6(ov));
    kv(s, "classical_fidelity", f6(bhattacharyya_fidelity(&freq, &[0.5, 0.0, 0.0, 0.5])));
    for (k, c) in ["gg", "gr", "rg", "rr"].iter().zip(counts) {
        kv(s, &format!("count_{k}"), c);
    }
    Ok(raw.into_iter().map(|bits| ShotRecord { basis: Basis::Z, bits, kept: true, corrected: vec![] }).collect())
}

/// Undoes a trailing measurement rotation so exact observables see the
/// graph state itself.
fn pre_measurement(mut psi: StateVector, cfg: &ExperimentConfig, spec: &crate::mbqc::RunSpec) -> Result<StateVector> {
    if cfg.mode == Mode::Pulsed {
        let sched = match &spec.schedule {
            Some(s) => s.clone(),
            None => crate::pulses::graph_schedule(cfg.d)?,
        };
        if let Some(m) = sched.segments().last().filter(|g| g.label == Label::Measure) {
            psi.apply_global_rotation(m.phi, -m.rotation_angle());
        }
    }
    Ok(psi)
}

fn run_graph(cfg: &ExperimentConfig, s: &mut String) -> Result<Vec<ShotRecord>> {
    let (layout, graph) = cfg.graph_layout()?;
    let spec = cfg.run_spec()?;
    let (psi, _) = prepare_state(&layout, &graph, &spec)?;
    let psi = pre_measurement(psi, cfg, &spec)?;
    let recs: Vec<ShotRecord> = sample_outcomes(&layout, &graph, &spec)?
        .into_iter()
        .map(|bits| ShotRecord { basis: Basis::X, bits, kept: true, corrected: vec![] })
        .collect();
    kv(s, "atoms", layout.len());
    kv(s, "shots", recs.len());
    kv(s, "stabilizer_average", f6(stabilizer_average(&psi, &graph)?));
    if cfg.layout_file.is_none() && cfg.rows * cfg.cols == 0 {
        let string = StringSpec::alternating(cfg.n.div_ceil(2))?;
        let e = string_order(&recs, &string)?;
        kv(s, "string_length", string.len());
        kv(s, "estimate", f6(e.value));
        kv(s, "se", f6(e.std_error));
        kv(s, "exact", f6(string_order_exact(&psi, &string)?));
    }
    Ok(recs)
}

pub fn parse_values(text: &str) -> Result<Vec<f64>> {
    let v = text
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| Error::Config(format!("bad sweep value `{}`", t.trim()))))
        .collect::<Result<Vec<_>>>()?;
    if v.is_empty() {
        return Err(Error::Config("empty sweep".into()));
    }
    Ok(v)
}

pub fn parse_range(text: &str) -> Result<Vec<f64>> {
    let parts = parse_values(&text.replace(':', ","))?;
    let [start, stop, step] = parts[..] else {
        return Err(Error::Config(format!("range must be start:stop:step, got `{text}`")));
    };
    if !(step > 0.0) || stop < start {
        return Err(Error::Config(format!("range needs step > 0 and stop >= start, got `{text}`")));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| start + i as f64 * step).collect())
}

fn whole(v: f64, what: &str) -> Result<usize> {
    if v < 1.0 || v.fract() != 0.0 {
        return Err(Error::Config(format!("{what} must be a positive integer, got {v}")));
    }
    Ok(v as usize)
}

struct SweepRow {
    estimate: OrderEstimate,
    theory: f64,
    dd: f64,
}

fn sweep_point(cfg: &ExperimentConfig, var: SweepVar, v: f64) -> Result<SweepRow> {
    let mut c = cfg.clone();
    c.out = None;
    let need = |k: Kind| {
        if cfg.kind == k {
            Ok(())
        } else {
            Err(Error::Config(format!("this sweep needs protocol kind {}", k.as_str())))
        }
    };
    let flips = cfg.noise.eps_l;
    match var {
        SweepVar::NString => {
            need(Kind::Graph)?;
            let n = whole(v, "string length")?;
            c.n = 2 * n - 1;
            c.rows = 0;
            c.cols = 0;
            c.layout_file = None;
            let (layout, graph) = c.graph_layout()?;
            let recs: Vec<ShotRecord> = sample_outcomes(&layout, &graph, &c.run_spec()?)?
                .into_iter()
                .map(|bits| ShotRecord { basis: Basis::X, bits, kept: true, corrected: vec![] })
                .collect();
            let estimate = string_order(&recs, &StringSpec::alternating(n)?)?;
            return Ok(SweepRow { estimate, theory: p_even(n as u32, flips), dd: 0.0 });
        }
        SweepVar::NChain => c.n = whole(v, "chain length")?,
        SweepVar::Gamma => c.dd = displacement_for_gamma(c.d, v)?,
        SweepVar::D => c.d = v,
    }
    need(Kind::Teleport)?;
    c.validate()?;
    let estimate = teleport_estimate(&run_protocol(&c.protocol()?, &c.run_spec()?)?)?;
    let theory = if c.dd == 0.0 {
        p_even(c.n.div_ceil(2) as u32, flips)
    } else if flips == 0.0 {
        q_ideal(gamma_from_displacement(c.d, c.dd)?)
    } else {
        f64::NAN
    };
    Ok(SweepRow { estimate, theory, dd: c.dd })
}

/// One row per value: value, estimate, se, kept, total, theory, dd.
/// Point `i` uses a seed derived from the master seed and `i`.
pub fn cmd_sweep(cfg: &ExperimentConfig, var: SweepVar, values: &[f64]) -> Result<String> {
    let name = var.to_possible_value().map(|p| p.get_name().to_string()).unwrap_or_default();
    let mut out = header(&sha256_hex(&format!("{}sweep {name} {values:?}\n", hashed_text(cfg))), Some(cfg.seed));
    let _ = writeln!(out, "# sweep {name} protocol {}", cfg.kind.as_str());
    out.push_str("# value\testimate\tse\tkept\ttotal\ttheory\tdd_um\n");
    for (i, &v) in values.iter().enumerate() {
        let mut c = cfg.clone();
        c.seed = derive_seed(cfg.seed, i as u64);
        let r = sweep_point(&c, var, v)?;
        let _ = writeln!(
            out,
            "{v}\t{:.8}\t{:.8}\t{}\t{}\t{:.8}\t{:.6}",
            r.estimate.value, r.estimate.std_error, r.estimate.n_shots_used, r.estimate.n_shots_total, r.theory, r.dd
        );
    }
    Ok(out)
}

/// First three numeric columns of every non-comment line.
pub fn parse_table(text: &str, chain: bool) -> Result<Vec<FitPoint>> {
    let mut pts = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| Error::Parse { line: i + 1, msg };
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() < 3 {
            return Err(err("expected at least `n value se`".into()));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| err(format!("bad number `{s}`")));
        let n = num(f[0])?;
        pts.push(FitPoint { n: if chain { (n + 1.0) / 2.0 } else { n }, value: num(f[1])?, se: num(f[2])? });
    }
    Ok(pts)
}

pub fn cmd_fit(text: &str, model: FitModel, weighting: Weighting, chain: bool) -> Result<String> {
    let pts = parse_table(text, chain)?;
    let r = fit_epsilon(&pts, model, weighting)?;
    let tag = format!("fit {} weighted={} chain={chain}\n{text}", model.as_str(), weighting == Weighting::Weighted);
    let mut out = header(&sha256_hex(&tag), None);
    kv(&mut out, "model", model.as_str());
    kv(&mut out, "eps", format!("{:.8}", r.eps));
    kv(&mut out, "half_width", format!("{:.8}", r.half_width));
    kv(&mut out, "sse", format!("{:.8e}", r.sse));
    kv(&mut out, "chi2", format!("{:.8e}", r.chi2));
    kv(&mut out, "weighted", r.weighted);
    kv(&mut out, "points", pts.len());
    Ok(out)
}

pub fn cmd_mitigate(text: &str, eps_m: f64) -> Result<String> {
    let counts = CountVector::parse(text)?;
    let (fixed, report) = correct_counts(&counts, eps_m)?;
    let mut out = header(&sha256_hex(&format!("mitigate {eps_m}\n{text}")), None);
    let _ = writeln!(out, "# eps_m {eps_m}");
    let _ = writeln!(out, "# clipped_mass {:.6}", report.clipped_mass);
    let _ = writeln!(out, "# clipped_outcomes {}", report.clipped_outcomes);
    out.push_str(&fixed.to_text());
    Ok(out)
}

pub fn cmd_domain(model: DomainModel, eps: f64, threshold: f64) -> Result<String> {
    let r = domain_size(model, eps, threshold)?;
    let name = match model {
        DomainModel::Ideal => "ideal",
        DomainModel::PEven => "p_even",
    };
    let mut out = header(&sha256_hex(&format!("domain {name} {eps} {threshold}")), None);
    kv(&mut out, "model", name);
    kv(&mut out, "eps", eps);
    kv(&mut out, "threshold", f6(threshold));
    kv(&mut out, "n_o", r.n_o.map(|n| n.to_string()).unwrap_or_else(|| "-".into()));
    kv(&mut out, "size", r.size);
    Ok(out)
}

pub fn cmd_layout(a: &LayoutArgs) -> Result<String> {
    let layout = match a.kind {
        LayoutKind::Chain => build_chain(a.n, a.d, a.dd)?,
        LayoutKind::Rect => build_rect(a.rows, a.cols, a.d)?.0,
        LayoutKind::Cnot => build_cnot_layout(a.d, a.dd)?.0,
        LayoutKind::Swap => build_swap_layout(a.d, a.dd)?.0,
    };
    let tag = format!("layout {:?} {} {} {} {} {} {}", a.kind, a.n, a.rows, a.cols, a.d, a.dd, a.grid);
    let mut out = header(&sha256_hex(&tag), None);
    if a.grid {
        out.push_str("# x y role, in units of the spacing\n");
        for (p, r) in layout.nominal_positions().iter().zip(layout.roles()) {
            let _ = writeln!(out, "{} {} {}", p[0] / a.d, p[1] / a.d, r.as_str());
        }
    } else {
        out.push_str("# x_um y_um role\n");
        out.push_str(&layout.to_text());
    }
    Ok(out)
}
