//! Experiment files: `[section]` headers followed by `key = value` lines.
//!
//! Sections are protocol, layout, schedule, noise and run. `#` and `;`
//! start comments. Paths are resolved against the config file's directory.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::engine::{EvolutionParams, Splitting};
use crate::error::{Error, Result};
use crate::geometry::{build_chain, build_rect, AtomLayout, GraphSpec, DEFAULT_SPACING};
use crate::mbqc::{Mode, Protocol, ProtocolKind, RunSpec};
use crate::noise::{JitterModel, NoiseConfig};
use crate::pulses::{preset, PulseSchedule};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Teleport,
    Cnot,
    Swap,
    /// Two atoms driven by the Bell schedule.
    Bell,
    /// Chain or grid graph state read out for stabilizers and string order.
    Graph,
}

impl Kind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Kind::Teleport => "teleport",
            Kind::Cnot => "cnot",
            Kind::Swap => "swap",
            Kind::Bell => "bell",
            Kind::Graph => "graph",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "bell" => Some(Kind::Bell),
            "graph" => Some(Kind::Graph),
            o => ProtocolKind::parse(o).map(|k| match k {
                ProtocolKind::Teleport => Kind::Teleport,
                ProtocolKind::Cnot => Kind::Cnot,
                ProtocolKind::Swap => Kind::Swap,
            }),
        }
    }

    pub fn protocol(&self) -> Option<ProtocolKind> {
        match self {
            Kind::Teleport => Some(ProtocolKind::Teleport),
            Kind::Cnot => Some(ProtocolKind::Cnot),
            Kind::Swap => Some(ProtocolKind::Swap),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: Kind,
    /// Chain length for teleport and chain graphs.
    pub n: usize,
    /// Grid shape for graph runs; zero means a chain.
    pub rows: usize,
    pub cols: usize,
    pub d: f64,
    pub dd: f64,
    pub layout_file: Option<PathBuf>,
    pub schedule_preset: Option<String>,
    pub schedule_file: Option<PathBuf>,
    pub step: f64,
    pub order: Splitting,
    pub cutoff: Option<f64>,
    pub mode: Mode,
    pub noise: NoiseConfig,
    pub shots: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let p = EvolutionParams::default();
        ExperimentConfig {
            kind: Kind::Teleport,
            n: 3,
            rows: 0,
            cols: 0,
            d: DEFAULT_SPACING,
            dd: 0.0,
            layout_file: None,
            schedule_preset: None,
            schedule_file: None,
            step: p.step,
            order: p.order,
            cutoff: None,
            mode: Mode::Oracle,
            noise: NoiseConfig::none(),
            shots: 1000,
            seed: 0,
            out: None,
        }
    }
}

const SECTIONS: [&str; 5] = ["protocol", "layout", "schedule", "noise", "run"];

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("cannot read config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let cfg = ExperimentConfig::parse(&text, base)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Syntax and value checks only; call `validate` for cross-field rules.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut c = ExperimentConfig::default();
        let mut section: Option<&str> = None;
        for (i, raw) in text.lines().enumerate() {
            let ln = i + 1;
            let err = |msg: String| Error::Parse { line: ln, msg };
            let line = raw.split(['#', ';']).next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name.strip_suffix(']').ok_or_else(|| err("unterminated section header".into()))?.trim();
                section = Some(SECTIONS.iter().find(|s| **s == name).ok_or_else(|| err(format!("unknown section `{name}`")))?);
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| err("expected `key = value`".into()))?;
            let (key, value) = (key.trim(), value.trim());
            let sec = section.ok_or_else(|| err(format!("`{key}` appears before any section")))?;
            let num = |v: &str| v.parse::<f64>().map_err(|_| err(format!("`{key}` expects a number, got `{v}`")));
            let int = |v: &str| v.parse::<u64>().map_err(|_| err(format!("`{key}` expects a non-negative integer, got `{v}`")));
            let opt_path = || (value != "-").then(|| base.join(value));
            match (sec, key) {
                ("protocol", "kind") => c.kind = Kind::parse(value).ok_or_else(|| err(format!("unknown protocol `{value}`")))?,
                ("layout", "n") => c.n = int(value)? as usize,
                ("layout", "rows") => c.rows = int(value)? as usize,
                ("layout", "cols") => c.cols = int(value)? as usize,
                ("layout", "d") | ("layout", "d_um") => c.d = num(value)?,
                ("layout", "dd") | ("layout", "dd_um") => c.dd = num(value)?,
                ("layout", "file") => c.layout_file = opt_path(),
                ("schedule", "preset") => c.schedule_preset = (value != "-").then(|| value.to_string()),
                ("schedule", "file") => c.schedule_file = opt_path(),
                ("schedule", "step") | ("schedule", "step_us") => c.step = num(value)?,
                ("schedule", "order") => {
                    c.order = match value {
                        "1" => Splitting::First,
                        "2" => Splitting::Second,
                        o => return Err(err(format!("splitting order must be 1 or 2, got `{o}`"))),
                    }
                }
                ("schedule", "cutoff") => c.cutoff = if value == "-" { None } else { Some(num(value)?) },
                ("noise", "eps_l") => c.noise.eps_l = num(value)?,
                ("noise", "eps_m") => c.noise.eps_m = num(value)?,
                ("noise", "eps_damp") => c.noise.eps_damp = num(value)?,
                ("noise", "jitter_um") => c.noise.jitter = num(value)?,
                ("noise", "jitter_model") => {
                    c.noise.jitter_model = match value {
                        "quenched" => JitterModel::Quenched,
                        "averaged" => JitterModel::Averaged,
                        o => return Err(err(format!("unknown jitter model `{o}`"))),
                    }
                }
                ("run", "mode") => c.mode = Mode::parse(value).ok_or_else(|| err(format!("unknown mode `{value}`")))?,
                ("run", "shots") => c.shots = int(value)? as usize,
                ("run", "seed") => c.seed = int(value)?,
                ("run", "out") => c.out = opt_path(),
                (s, k) => return Err(err(format!("unknown key `{k}` in [{s}]"))),
            }
        }
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.shots == 0 {
            return bad("shots must be at least 1".into());
        }
        if !(self.d > 0.0) || !self.d.is_finite() {
            return bad(format!("d must be positive, got {}", self.d));
        }
        if !(self.dd >= 0.0) || !self.dd.is_finite() {
            return bad(format!("dd must be non-negative, got {}", self.dd));
        }
        if !(self.step > 0.0) || !self.step.is_finite() {
            return bad(format!("step must be positive, got {}", self.step));
        }
        if let Some(c) = self.cutoff {
            if !(c > 0.0) {
                return bad(format!("cutoff must be positive, got {c}"));
            }
        }
        self.noise.validate().map_err(|e| Error::Config(e.to_string()))?;
        for f in [&self.layout_file, &self.schedule_file].into_iter().flatten() {
            if !f.is_file() {
                return bad(format!("file {} does not exist", f.display()));
            }
        }
        if self.schedule_preset.is_some() && self.schedule_file.is_some() {
            return bad("give either a schedule preset or a schedule file, not both".into());
        }
        match self.kind {
            Kind::Teleport if self.layout_file.is_none() && (self.n < 3 || self.n % 2 == 0) => {
                bad(format!("teleportation needs an odd chain of at least 3 atoms, got n = {}", self.n))
            }
            Kind::Bell if self.mode != Mode::Pulsed => bad("bell runs need mode = pulsed".into()),
            Kind::Graph if self.rows * self.cols == 0 && self.n == 0 => bad("graph runs need n or rows and cols".into()),
            _ => Ok(()),
        }
    }

    /// Canonical rendering of every effective setting; hashed into headers.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_else(|| "-".into());
        let _ = writeln!(s, "[protocol]\nkind = {}", self.kind.as_str());
        let _ = writeln!(s, "[layout]\nn = {}\nrows = {}\ncols = {}\nd = {}\ndd = {}\nfile = {}", self.n, self.rows, self.cols, self.d, self.dd, path(&self.layout_file));
        let _ = writeln!(
            s,
            "[schedule]\npreset = {}\nfile = {}\nstep = {}\norder = {}\ncutoff = {}",
            self.schedule_preset.as_deref().unwrap_or("-"),
            path(&self.schedule_file),
            self.step,
            if self.order == Splitting::First { 1 } else { 2 },
            self.cutoff.map(|c| c.to_string()).unwrap_or_else(|| "-".into())
        );
        let jm = match self.noise.jitter_model {
            JitterModel::Quenched => "quenched",
            JitterModel::Averaged => "averaged",
        };
        let _ = writeln!(
            s,
            "[noise]\neps_l = {}\neps_m = {}\neps_damp = {}\njitter_um = {}\njitter_model = {jm}",
            self.noise.eps_l, self.noise.eps_m, self.noise.eps_damp, self.noise.jitter
        );
        let _ = writeln!(s, "[run]\nmode = {}\nshots = {}\nseed = {}\nout = {}", self.mode.as_str(), self.shots, self.seed, path(&self.out));
        s
    }

    pub fn schedule(&self) -> Result<Option<PulseSchedule>> {
        if let Some(f) = &self.schedule_file {
            return Ok(Some(PulseSchedule::parse(&std::fs::read_to_string(f)?)?));
        }
        self.schedule_preset.as_deref().map(|p| preset(p, self.d)).transpose()
    }

    pub fn run_spec(&self) -> Result<RunSpec> {
        let mut spec = RunSpec::new(self.mode, self.shots, self.seed).with_noise(self.noise);
        spec.params = EvolutionParams { step: self.step, order: self.order };
        spec.schedule = self.schedule()?;
        spec.cutoff = self.cutoff;
        Ok(spec)
    }

    fn file_layout(&self) -> Result<Option<AtomLayout>> {
        match &self.layout_file {
            Some(f) => Ok(Some(AtomLayout::parse(&std::fs::read_to_string(f)?, self.d, self.d, self.dd)?)),
            None => Ok(None),
        }
    }

    pub fn protocol(&self) -> Result<Protocol> {
        let kind = self.kind.protocol().ok_or_else(|| Error::Config(format!("{} is not a protocol run", self.kind.as_str())))?;
        match self.file_layout()? {
            Some(l) => {
                let g = l.nearest_neighbor_graph();
                Protocol::new(kind, l, g)
            }
            None => Protocol::build(kind, self.n, self.d, self.dd),
        }
    }

    /// Layout and nearest-neighbour graph for graph runs.
    pub fn graph_layout(&self) -> Result<(AtomLayout, GraphSpec)> {
        if let Some(l) = self.file_layout()? {
            let g = l.nearest_neighbor_graph();
            return Ok((l, g));
        }
        if self.rows * self.cols > 0 {
            return build_rect(self.rows, self.cols, self.d);
        }
        let l = build_chain(self.n, self.d, 0.0)?;
        let g = l.nearest_neighbor_graph();
        Ok((l, g))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
# teleport run
[protocol]
kind = teleport
[layout]
n = 5
d = 12.3
dd = 0.5   ; outward push
[noise]
eps_l = 0.09
[run]
mode = oracle
shots = 200
seed = 7
";

    #[test]
    fn parses_sample() {
        let c = ExperimentConfig::parse(SAMPLE, Path::new(".")).unwrap();
        c.validate().unwrap();
        assert_eq!(c.kind, Kind::Teleport);
        assert_eq!(c.n, 5);
        assert_eq!(c.dd, 0.5);
        assert_eq!(c.noise.eps_l, 0.09);
        assert_eq!(c.shots, 200);
        assert_eq!(c.seed, 7);
    }

    #[test]
    fn canonical_text_round_trips() {
        let c = ExperimentConfig::parse(SAMPLE, Path::new(".")).unwrap();
        let again = ExperimentConfig::parse(&c.to_text(), Path::new("")).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = ExperimentConfig::parse("[run]\nshots = many\n", Path::new(".")).unwrap_err();
        assert_eq!(e, Error::Parse { line: 2, msg: "`shots` expects a non-negative integer, got `many`".into() });
        assert!(matches!(ExperimentConfig::parse("[bogus]\n", Path::new(".")), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(ExperimentConfig::parse("\n\nkind = cnot\n", Path::new(".")), Err(Error::Parse { line: 3, .. })));
        assert!(matches!(ExperimentConfig::parse("[run]\ncolour = red\n", Path::new(".")), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(ExperimentConfig::parse("[run]\nshots\n", Path::new(".")), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn validation_rules() {
        let base = ExperimentConfig::default();
        assert!(base.validate().is_ok());
        assert!(ExperimentConfig { n: 4, ..base.clone() }.validate().is_err());
        assert!(ExperimentConfig { shots: 0, ..base.clone() }.validate().is_err());
        assert!(ExperimentConfig { kind: Kind::Bell, ..base.clone() }.validate().is_err());
        assert!(ExperimentConfig { layout_file: Some("/nonexistent/file".into()), ..base.clone() }.validate().is_err());
        let mut noisy = base.clone();
        noisy.noise.eps_m = 1.0;
        assert!(matches!(noisy.validate(), Err(Error::Config(_))));
    }
}
