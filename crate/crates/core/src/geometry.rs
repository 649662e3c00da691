//! Atom layouts, graph specifications and van der Waals couplings.

use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::engine::MAX_ATOMS;
use crate::error::{Error, Result};

/// Van der Waals coefficient in um^6 rad/us.
pub const C6: f64 = 5_420_503.0;

/// Default atom spacing in um.
pub const DEFAULT_SPACING: f64 = 12.3;

const CNOT_DATA: &str = include_str!("../data/cnot.layout");
const SWAP_DATA: &str = include_str!("../data/swap.layout");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Input,
    Output,
    Body,
}

impl Role {
    pub fn as_str(&self) -> &'static str {
        match self {
            Role::Input => "input",
            Role::Output => "output",
            Role::Body => "body",
        }
    }

    pub fn parse(s: &str) -> Option<Role> {
        match s {
            "input" => Some(Role::Input),
            "output" => Some(Role::Output),
            "body" => Some(Role::Body),
            _ => None,
        }
    }
}

/// Planar atom positions with role labels.
///
/// Input atoms are pushed away from their neighbours by `input_displacement`;
/// the undistorted positions are kept so graph edges stay well defined.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomLayout {
    nominal: Vec<[f64; 2]>,
    outward: Vec<[f64; 2]>,
    offsets: Vec<[f64; 2]>,
    roles: Vec<Role>,
    spacing: f64,
    input_displacement: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub theta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphSpec {
    n_vertices: usize,
    edges: Vec<Edge>,
}

/// Symmetric matrix of pair couplings in rad/us.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionMatrix {
    n: usize,
    v: Vec<f64>,
}

fn check_length(d: f64, what: &str) -> Result<()> {
    if !d.is_finite() || d <= 0.0 {
        return Err(Error::Domain(format!("{what} must be positive and finite, got {d}")));
    }
    Ok(())
}

pub fn pair_interaction(d: f64) -> Result<f64> {
    check_length(d, "distance")?;
    Ok(C6 / d.powi(6))
}

/// Hold time pi/V(d) that turns the pair coupling into a CZ.
pub fn cz_time(d: f64) -> Result<f64> {
    Ok(PI / pair_interaction(d)?)
}

fn dist(p: [f64; 2], q: [f64; 2]) -> f64 {
    ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
}

impl AtomLayout {
    /// Builds a layout from undistorted positions; input atoms are then
    /// displaced outward from the centroid of their nearest neighbours.
    pub fn new(nominal: Vec<[f64; 2]>, roles: Vec<Role>, spacing: f64, input_displacement: f64) -> Result<Self> {
        check_length(spacing, "spacing")?;
        if !input_displacement.is_finite() || input_displacement < 0.0 {
            return Err(Error::Domain(format!(
                "input displacement must be finite and non-negative, got {input_displacement}"
            )));
        }
        if nominal.len() != roles.len() {
            return Err(Error::SizeMismatch(nominal.len(), roles.len()));
        }
        if nominal.is_empty() {
            return Err(Error::Layout("layout has no atoms".into()));
        }
        if nominal.len() > MAX_ATOMS {
            return Err(Error::Capacity { requested: nominal.len(), cap: MAX_ATOMS });
        }
        if nominal.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return Err(Error::Layout("non-finite coordinate".into()));
        }
        let n = nominal.len();
        let mut outward = vec![[0.0; 2]; n];
        for i in 0..n {
            if roles[i] != Role::Input || input_displacement == 0.0 {
                continue;
            }
            let nn = nominal
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &q)| dist(nominal[i], q))
                .fold(f64::INFINITY, f64::min);
            let mut c = [0.0; 2];
            let mut cnt = 0.0;
            for (j, &q) in nominal.iter().enumerate() {
                if j != i && dist(nominal[i], q) <= nn * (1.0 + 1e-9) {
                    c[0] += q[0];
                    c[1] += q[1];
                    cnt += 1.0;
                }
            }
            let dir = [nominal[i][0] - c[0] / cnt, nominal[i][1] - c[1] / cnt];
            let len = (dir[0] * dir[0] + dir[1] * dir[1]).sqrt();
            if len == 0.0 {
                return Err(Error::Layout(format!("input atom {i} has no outward direction")));
            }
            outward[i] = [dir[0] / len, dir[1] / len];
        }
        let layout = AtomLayout { offsets: vec![[0.0; 2]; n], nominal, outward, roles, spacing, input_displacement };
        layout.check_distinct()?;
        Ok(layout)
    }

    fn check_distinct(&self) -> Result<()> {
        let n = self.len();
        let pos = self.positions();
        for i in 0..n {
            for j in (i + 1)..n {
                if dist(pos[i], pos[j]) <= 0.0 {
                    return Err(Error::Layout(format!("atoms {i} and {j} coincide")));
                }
            }
        }
        Ok(())
    }

    /// Parses "x_um y_um role" lines; `#` starts a comment. Coordinates are
    /// multiplied by `scale`.
    pub fn parse(text: &str, scale: f64, spacing: f64, input_displacement: f64) -> Result<Self> {
        let mut pos = Vec::new();
        let mut roles = Vec::new();
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 3 {
                return Err(Error::Parse { line: ln + 1, msg: "expected `x y role`".into() });
            }
            let x: f64 = f[0].parse().map_err(|_| Error::Parse { line: ln + 1, msg: format!("bad x `{}`", f[0]) })?;
            let y: f64 = f[1].parse().map_err(|_| Error::Parse { line: ln + 1, msg: format!("bad y `{}`", f[1]) })?;
            let role = Role::parse(f[2]).ok_or_else(|| Error::Parse { line: ln + 1, msg: format!("bad role `{}`", f[2]) })?;
            pos.push([x * scale, y * scale]);
            roles.push(role);
        }
        AtomLayout::new(pos, roles, spacing, input_displacement)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (p, r) in self.positions().iter().zip(&self.roles) {
            let _ = writeln!(s, "{:.6} {:.6} {}", p[0], p[1], r.as_str());
        }
        s
    }

    pub fn len(&self) -> usize {
        self.nominal.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nominal.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn input_displacement(&self) -> f64 {
        self.input_displacement
    }

    pub fn roles(&self) -> &[Role] {
        &self.roles
    }

    pub fn nominal_positions(&self) -> &[[f64; 2]] {
        &self.nominal
    }

    pub fn positions(&self) -> Vec<[f64; 2]> {
        self.nominal
            .iter()
            .zip(&self.outward)
            .zip(&self.offsets)
            .map(|((p, u), o)| {
                [p[0] + self.input_displacement * u[0] + o[0], p[1] + self.input_displacement * u[1] + o[1]]
            })
            .collect()
    }

    pub fn atoms_with_role(&self, role: Role) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.roles[i] == role).collect()
    }

    /// Copy with every atom shifted by an extra offset; graph edges and
    /// cutoffs still refer to the undistorted positions.
    pub fn with_offsets(&self, offsets: Vec<[f64; 2]>) -> Result<Self> {
        if offsets.len() != self.len() {
            return Err(Error::SizeMismatch(offsets.len(), self.len()));
        }
        if offsets.iter().any(|o| !o[0].is_finite() || !o[1].is_finite()) {
            return Err(Error::Layout("non-finite offset".into()));
        }
        let out = AtomLayout { offsets, ..self.clone() };
        out.check_distinct()?;
        Ok(out)
    }

    /// Edges between undistorted nearest neighbours at the nominal spacing.
    pub fn nearest_neighbor_graph(&self) -> GraphSpec {
        let n = self.len();
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if (dist(self.nominal[i], self.nominal[j]) - self.spacing).abs() <= 1e-6 * self.spacing {
                    edges.push(Edge { a: i, b: j, theta: PI });
                }
            }
        }
        GraphSpec { n_vertices: n, edges }
    }
}

pub fn build_chain(n: usize, d: f64, dd: f64) -> Result<AtomLayout> {
    if n < 2 {
        return Err(Error::Layout(format!("a chain needs at least 2 atoms, got {n}")));
    }
    let pos = (0..n).map(|i| [i as f64 * d, 0.0]).collect();
    let mut roles = vec![Role::Body; n];
    roles[0] = Role::Input;
    roles[n - 1] = Role::Output;
    AtomLayout::new(pos, roles, d, dd)
}

pub fn build_rect(rows: usize, cols: usize, d: f64) -> Result<(AtomLayout, GraphSpec)> {
    if rows == 0 || cols == 0 {
        return Err(Error::Layout("grid needs at least one row and column".into()));
    }
    if rows * cols > MAX_ATOMS {
        return Err(Error::Capacity { requested: rows * cols, cap: MAX_ATOMS });
    }
    let mut pos = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            pos.push([c as f64 * d, r as f64 * d]);
        }
    }
    let layout = AtomLayout::new(pos, vec![Role::Body; rows * cols], d, 0.0)?;
    let g = layout.nearest_neighbor_graph();
    Ok((layout, g))
}

/// Two-wire graph realising CNOT on the x-basis values: the control wire
/// runs along the top row, the target wire along the bottom row.
pub fn build_cnot_layout(d: f64, dd: f64) -> Result<(AtomLayout, GraphSpec)> {
    check_length(d, "spacing")?;
    let layout = AtomLayout::parse(CNOT_DATA, d, d, dd)?;
    let g = layout.nearest_neighbor_graph();
    Ok((layout, g))
}

/// Two wires joined by a six-vertex central block; exchanges the inputs.
pub fn build_swap_layout(d: f64, dd: f64) -> Result<(AtomLayout, GraphSpec)> {
    check_length(d, "spacing")?;
    let layout = AtomLayout::parse(SWAP_DATA, d, d, dd)?;
    let g = layout.nearest_neighbor_graph();
    Ok((layout, g))
}

pub fn chain_graph(n: usize) -> GraphSpec {
    GraphSpec {
        n_vertices: n,
        edges: (1..n).map(|i| Edge { a: i - 1, b: i, theta: PI }).collect(),
    }
}

impl GraphSpec {
    pub fn new(n_vertices: usize, edges: Vec<Edge>) -> Result<Self> {
        if n_vertices > MAX_ATOMS {
            return Err(Error::Capacity { requested: n_vertices, cap: MAX_ATOMS });
        }
        let mut seen = std::collections::HashSet::new();
        for e in &edges {
            if e.a == e.b {
                return Err(Error::Layout(format!("self-loop on vertex {}", e.a)));
            }
            if e.a >= n_vertices || e.b >= n_vertices {
                return Err(Error::Index { index: e.a.max(e.b), n: n_vertices });
            }
            if !e.theta.is_finite() {
                return Err(Error::Domain("non-finite edge phase".into()));
            }
            if !seen.insert((e.a.min(e.b), e.a.max(e.b))) {
                return Err(Error::Layout(format!("duplicate edge {}-{}", e.a, e.b)));
            }
        }
        Ok(GraphSpec { n_vertices, edges })
    }

    /// Parses "j k [theta]" lines with 1-based vertex indices.
    pub fn parse(text: &str, n_vertices: usize) -> Result<Self> {
        let mut edges = Vec::new();
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 2 && f.len() != 3 {
                return Err(Error::Parse { line: ln + 1, msg: "expected `j k [theta]`".into() });
            }
            let idx = |s: &str| -> Result<usize> {
                let v: usize = s.parse().map_err(|_| Error::Parse { line: ln + 1, msg: format!("bad index `{s}`") })?;
                if v == 0 {
                    return Err(Error::Parse { line: ln + 1, msg: "indices are 1-based".into() });
                }
                Ok(v - 1)
            };
            let theta = match f.get(2) {
                Some(t) => t.parse().map_err(|_| Error::Parse { line: ln + 1, msg: format!("bad theta `{t}`") })?,
                None => PI,
            };
            edges.push(Edge { a: idx(f[0])?, b: idx(f[1])?, theta });
        }
        GraphSpec::new(n_vertices, edges)
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn neighbors(&self, i: usize) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .edges
            .iter()
            .filter_map(|e| {
                if e.a == i {
                    Some(e.b)
                } else if e.b == i {
                    Some(e.a)
                } else {
                    None
                }
            })
            .collect();
        v.sort_unstable();
        v
    }

    pub fn degree(&self, i: usize) -> usize {
        self.edges.iter().filter(|e| e.a == i || e.b == i).count()
    }

    /// Re-weights every edge with the phase picked up during `hold` at the
    /// actual (possibly displaced) distance of its endpoints.
    pub fn with_hold_phases(&self, layout: &AtomLayout, hold: f64) -> Result<Self> {
        if layout.len() != self.n_vertices {
            return Err(Error::SizeMismatch(layout.len(), self.n_vertices));
        }
        let pos = layout.positions();
        let mut edges = Vec::with_capacity(self.edges.len());
        for e in &self.edges {
            let v = pair_interaction(dist(pos[e.a], pos[e.b]))?;
            edges.push(Edge { theta: hold * v, ..*e });
        }
        Ok(GraphSpec { n_vertices: self.n_vertices, edges })
    }
}

impl InteractionMatrix {
    /// All-pairs couplings, or only pairs closer than `cutoff` (in units of
    /// the layout spacing, measured on undistorted positions) when given.
    pub fn from_layout(layout: &AtomLayout, cutoff: Option<f64>) -> Result<Self> {
        Self::from_positions(&layout.positions(), cutoff.map(|c| (c * layout.spacing(), layout.nominal_positions())))
    }

    fn from_positions(pos: &[[f64; 2]], cutoff: Option<(f64, &[[f64; 2]])>) -> Result<Self> {
        let n = pos.len();
        let mut v = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let r = dist(pos[i], pos[j]);
                if r <= 0.0 {
                    return Err(Error::Layout(format!("atoms {i} and {j} coincide")));
                }
                if let Some((rc, nominal)) = cutoff {
                    if dist(nominal[i], nominal[j]) > rc * (1.0 + 1e-9) {
                        continue;
                    }
                }
                let x = C6 / r.powi(6);
                v[i * n + j] = x;
                v[j * n + i] = x;
            }
        }
        Ok(InteractionMatrix { n, v })
    }

    /// Builds a matrix from explicit pair rates, symmetrising the input.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut v = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let x = f(i, j);
                v[i * n + j] = x;
                v[j * n + i] = x;
            }
        }
        InteractionMatrix { n, v }
    }

    pub fn zeros(n: usize) -> Self {
        InteractionMatrix { n, v: vec![0.0; n * n] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.v[j * self.n + k]
    }
}

pub fn interaction_matrix(layout: &AtomLayout) -> Result<InteractionMatrix> {
    InteractionMatrix::from_layout(layout, None)
}
