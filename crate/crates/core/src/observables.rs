//! Stabilizer expectations, string order and the rotation-angle encoding.

use std::f64::consts::{PI, SQRT_2};

use rand::Rng;
use rayon::prelude::*;

use crate::engine::{sample_from_probabilities, Basis, StateVector};
use crate::error::{Error, Result};
use crate::geometry::{cz_time, pair_interaction, GraphSpec};
use crate::mbqc::ShotRecord;
use crate::rng::shot_rng;
use crate::stats::jackknife_se;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StringSpec {
    atoms: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderEstimate {
    pub value: f64,
    pub std_error: f64,
    pub n_shots_used: usize,
    pub n_shots_total: usize,
}

impl StringSpec {
    pub fn new(atoms: Vec<usize>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::Empty("string has no atoms".into()));
        }
        let mut seen = atoms.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != atoms.len() {
            return Err(Error::Domain("string atoms must be distinct".into()));
        }
        Ok(StringSpec { atoms })
    }

    /// Atoms 0, 2, 4, ... (every other site) for a string of length `n`.
    pub fn alternating(n: usize) -> Result<Self> {
        StringSpec::new((0..n).map(|k| 2 * k).collect())
    }

    pub fn atoms(&self) -> &[usize] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    fn mask(&self, n: usize) -> Result<u64> {
        let mut m = 0u64;
        for &a in &self.atoms {
            if a >= n {
                return Err(Error::Index { index: a, n });
            }
            m |= 1u64 << (n - 1 - a);
        }
        Ok(m)
    }
}

fn atom_bit(n: usize, atom: usize) -> usize {
    1usize << (n - 1 - atom)
}

/// Exact <psi| X_i prod_{j in N(i)} Z_j |psi>.
pub fn stabilizer_expectation(state: &StateVector, center: usize, graph: &GraphSpec) -> Result<f64> {
    let n = state.n_atoms();
    if graph.n_vertices() != n {
        return Err(Error::SizeMismatch(graph.n_vertices(), n));
    }
    if center >= n {
        return Err(Error::Index { index: center, n });
    }
    let xm = atom_bit(n, center);
    let zm = graph.neighbors(center).iter().fold(0usize, |m, &j| m | atom_bit(n, j));
    let a = state.amplitudes();
    let v: f64 = (0..a.len())
        .into_par_iter()
        .with_min_len(4096)
        .map(|b| {
            let sign = if (b & zm).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            sign * (a[b].conj() * a[b ^ xm]).re
        })
        .sum();
    Ok(v)
}

/// Average over every vertex with at least one neighbour.
pub fn stabilizer_average(state: &StateVector, graph: &GraphSpec) -> Result<f64> {
    let centers: Vec<usize> = (0..graph.n_vertices()).filter(|&i| graph.degree(i) > 0).collect();
    stabilizer_average_over(state, graph, &centers)
}

pub fn stabilizer_average_over(state: &StateVector, graph: &GraphSpec, centers: &[usize]) -> Result<f64> {
    if centers.is_empty() {
        return Err(Error::Empty("no stabilizer centre".into()));
    }
    let mut s = 0.0;
    for &c in centers {
        s += stabilizer_expectation(state, c, graph)?;
    }
    Ok(s / centers.len() as f64)
}

/// Vertices of maximal degree, i.e. the bulk sites of a regular lattice.
pub fn interior_centers(graph: &GraphSpec) -> Vec<usize> {
    let maxd = (0..graph.n_vertices()).map(|i| graph.degree(i)).max().unwrap_or(0);
    if maxd == 0 {
        return vec![];
    }
    (0..graph.n_vertices()).filter(|&i| graph.degree(i) == maxd).collect()
}

/// Shot estimate of one stabilizer: the centre is read in x, its
/// neighbours in z, and the product of the +-1 outcomes is averaged.
pub fn stabilizer_shot_estimate(
    state: &StateVector,
    center: usize,
    graph: &GraphSpec,
    shots: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    let n = state.n_atoms();
    if center >= n {
        return Err(Error::Index { index: center, n });
    }
    let mut rotated = state.clone();
    rotated.apply_hadamards(1u64 << center);
    let probs = rotated.probabilities(Basis::Z);
    let us: Vec<f64> = (0..shots as u64).map(|i| shot_rng(seed, i).random()).collect();
    let mask = graph.neighbors(center).iter().fold(atom_bit(n, center), |m, &j| m | atom_bit(n, j)) as u64;
    let vals: Vec<f64> = sample_from_probabilities(&probs, &us)
        .into_iter()
        .map(|o| if (o & mask).count_ones() % 2 == 0 { 1.0 } else { -1.0 })
        .collect();
    jackknife_se(&vals)
}

/// Fraction of x-basis shots with even parity over the string.
pub fn string_order(shots: &[ShotRecord], string: &StringSpec) -> Result<OrderEstimate> {
    if shots.is_empty() {
        return Err(Error::Empty("no shots".into()));
    }
    let mut vals = Vec::with_capacity(shots.len());
    for s in shots {
        if s.basis != Basis::X {
            return Err(Error::Domain("string order needs x-basis shots".into()));
        }
        let mut parity = 0u8;
        for &a in string.atoms() {
            parity ^= *s.bits.get(a).ok_or(Error::Index { index: a, n: s.bits.len() })?;
        }
        vals.push(if parity == 0 { 1.0 } else { 0.0 });
    }
    let (value, se) = if vals.len() >= 2 { jackknife_se(&vals)? } else { (vals[0], 0.0) };
    Ok(OrderEstimate { value, std_error: se, n_shots_used: shots.len(), n_shots_total: shots.len() })
}

/// Exact even-parity probability of the string under an x measurement.
pub fn string_order_exact(state: &StateVector, string: &StringSpec) -> Result<f64> {
    let m = string.mask(state.n_atoms())?;
    Ok(state
        .probabilities(Basis::X)
        .iter()
        .enumerate()
        .filter(|(b, _)| (*b as u64 & m).count_ones() % 2 == 0)
        .map(|(_, p)| p)
        .sum())
}

fn wrap_angle(x: f64) -> f64 {
    let mut y = x % (2.0 * PI);
    if y <= -PI {
        y += 2.0 * PI;
    } else if y > PI {
        y -= 2.0 * PI;
    }
    y
}

/// gamma for an extra input-edge phase `delta` (relative to pi).
pub fn gamma_from_phase_difference(delta: f64) -> f64 {
    wrap_angle(2.0 * (SQRT_2 * (delta / 2.0).tan()).atan())
}

/// Rotation angle encoded by pushing the input atom out by `dd`; the input
/// edge then picks up t_cz * V(d + dd) instead of pi during the CZ hold.
pub fn gamma_from_displacement(d: f64, dd: f64) -> Result<f64> {
    let v = pair_interaction(d)?;
    if !dd.is_finite() || d + dd <= 0.0 {
        return Err(Error::Domain(format!("displaced spacing must be positive, got {}", d + dd)));
    }
    let delta = cz_time(d)? * (pair_interaction(d + dd)? - v);
    if (delta / 2.0).cos().abs() < 1e-12 {
        let critical = d * (2f64.powf(-1.0 / 6.0) - 1.0);
        return Err(Error::Pole { critical_dd: critical });
    }
    Ok(gamma_from_phase_difference(delta))
}

/// Input displacement that encodes a rotation of magnitude `|gamma|`
/// (gamma itself is non-positive for outward shifts).
pub fn displacement_for_gamma(d: f64, gamma: f64) -> Result<f64> {
    pair_interaction(d)?;
    let g = -gamma.abs();
    if !(g > -PI) {
        return Err(Error::Domain(format!("|gamma| must be below pi, got {}", gamma.abs())));
    }
    let delta = 2.0 * ((g / 2.0).tan() / SQRT_2).atan();
    // t_cz * V(d) = pi, so V(d + dd) / V(d) = 1 + delta / pi.
    Ok(d * (1.0 + delta / PI).powf(-1.0 / 6.0) - d)
}

pub fn q_ideal(gamma: f64) -> f64 {
    (3.0 + gamma.cos()) / 4.0
}
