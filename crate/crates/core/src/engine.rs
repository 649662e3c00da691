//! Dense state-vector simulation over the {g, r} product basis.
//!
//! Atom `i` (0-based) is stored in bit `n - 1 - i` of the basis index, so
//! atom 0 is the most significant digit. Digit 0 is |g>, digit 1 is |r>.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{GraphSpec, InteractionMatrix};
use crate::pulses::{PulseSchedule, PulseSegment, Shape};

pub const MAX_ATOMS: usize = 24;
pub const DEFAULT_STEP: f64 = 1e-3;
const PAR_MIN: usize = 1 << 14;
const CDF_MAX_ATOMS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    X,
    Z,
}

impl Basis {
    pub fn as_str(&self) -> &'static str {
        match self {
            Basis::X => "x",
            Basis::Z => "z",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Splitting {
    First,
    Second,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolutionParams {
    pub step: f64,
    pub order: Splitting,
}

impl Default for EvolutionParams {
    fn default() -> Self {
        EvolutionParams { step: DEFAULT_STEP, order: Splitting::Second }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<Complex64>,
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 || n > MAX_ATOMS {
        return Err(Error::Capacity { requested: n, cap: MAX_ATOMS });
    }
    Ok(())
}

/// exp(-i angle (cos phi sx + sin phi sy) / 2) as [[a, b], [c, d]].
pub fn rotation_matrix(phi: f64, angle: f64) -> [[Complex64; 2]; 2] {
    let c = (angle / 2.0).cos();
    let s = (angle / 2.0).sin();
    let mi = Complex64::new(0.0, -s);
    [
        [Complex64::new(c, 0.0), mi * Complex64::from_polar(1.0, -phi)],
        [mi * Complex64::from_polar(1.0, phi), Complex64::new(c, 0.0)],
    ]
}

fn hadamard_matrix() -> [[Complex64; 2]; 2] {
    let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    [[h, h], [h, -h]]
}

fn apply_pair(lo: &mut [Complex64], hi: &mut [Complex64], u: &[[Complex64; 2]; 2]) {
    for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
        let x = *a;
        let y = *b;
        *a = u[0][0] * x + u[0][1] * y;
        *b = u[1][0] * x + u[1][1] * y;
    }
}

fn apply_1q(amps: &mut [Complex64], bit: usize, u: &[[Complex64; 2]; 2]) {
    let m = 1usize << bit;
    let block = 2 * m;
    if amps.len() < PAR_MIN {
        for c in amps.chunks_mut(block) {
            let (lo, hi) = c.split_at_mut(m);
            apply_pair(lo, hi, u);
        }
    } else if m >= 4096 {
        for c in amps.chunks_mut(block) {
            let (lo, hi) = c.split_at_mut(m);
            lo.par_chunks_mut(2048)
                .zip(hi.par_chunks_mut(2048))
                .for_each(|(a, b)| apply_pair(a, b, u));
        }
    } else {
        amps.par_chunks_mut(block)
            .with_min_len((4096 / block).max(1))
            .for_each(|c| {
                let (lo, hi) = c.split_at_mut(m);
                apply_pair(lo, hi, u);
            });
    }
}

fn mul_diag(amps: &mut [Complex64], phases: &[Complex64]) {
    if amps.len() < PAR_MIN {
        amps.iter_mut().zip(phases).for_each(|(a, p)| *a *= p);
    } else {
        amps.par_iter_mut().zip(phases.par_iter()).with_min_len(4096).for_each(|(a, p)| *a *= p);
    }
}

/// Interaction energy sum_{j<k} V_jk n_j n_k of every basis state.
pub fn diagonal_energies(v: &InteractionMatrix) -> Vec<f64> {
    let n = v.n();
    let dim = 1usize << n;
    let atom = |bit: usize| n - 1 - bit;
    let mut e = vec![0.0; dim];
    for b in 1..dim {
        let low = b.trailing_zeros() as usize;
        let rest = b & (b - 1);
        let mut acc = 0.0;
        let mut r = rest;
        while r != 0 {
            let k = r.trailing_zeros() as usize;
            acc += v.get(atom(low), atom(k));
            r &= r - 1;
        }
        e[b] = e[rest] + acc;
    }
    e
}

fn phase_factors(energies: &[f64], dt: f64) -> Vec<Complex64> {
    if energies.len() < PAR_MIN {
        energies.iter().map(|&e| Complex64::from_polar(1.0, -e * dt)).collect()
    } else {
        energies.par_iter().map(|&e| Complex64::from_polar(1.0, -e * dt)).collect()
    }
}

impl StateVector {
    pub fn from_amplitudes(n: usize, amps: Vec<Complex64>) -> Result<Self> {
        check_n(n)?;
        if amps.len() != 1usize << n {
            return Err(Error::SizeMismatch(amps.len(), 1usize << n));
        }
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::Domain("amplitudes must have a finite non-zero norm".into()));
        }
        let mut s = StateVector { n, amps };
        s.scale(1.0 / norm);
        Ok(s)
    }

    pub fn n_atoms(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    fn scale(&mut self, f: f64) {
        self.amps.iter_mut().for_each(|a| *a *= f);
    }

    fn bit(&self, atom: usize) -> usize {
        self.n - 1 - atom
    }

    fn check_atom(&self, atom: usize) -> Result<()> {
        if atom >= self.n {
            return Err(Error::Index { index: atom, n: self.n });
        }
        Ok(())
    }

    /// Same single-atom rotation on every atom.
    pub fn apply_global_rotation(&mut self, phi: f64, angle: f64) {
        if angle == 0.0 {
            return;
        }
        let u = rotation_matrix(phi, angle);
        for bit in 0..self.n {
            apply_1q(&mut self.amps, bit, &u);
        }
    }

    pub fn apply_rotation(&mut self, atom: usize, phi: f64, angle: f64) -> Result<()> {
        self.check_atom(atom)?;
        let u = rotation_matrix(phi, angle);
        let b = self.bit(atom);
        apply_1q(&mut self.amps, b, &u);
        Ok(())
    }

    /// Hadamard on every atom whose bit is set in `atom_mask` (bit `i` = atom `i`).
    pub fn apply_hadamards(&mut self, atom_mask: u64) {
        let h = hadamard_matrix();
        for atom in 0..self.n {
            if atom_mask >> atom & 1 == 1 {
                let b = self.bit(atom);
                apply_1q(&mut self.amps, b, &h);
            }
        }
    }

    pub fn apply_cp(&mut self, j: usize, k: usize, theta: f64) -> Result<()> {
        self.check_atom(j)?;
        self.check_atom(k)?;
        if j == k {
            return Err(Error::Domain(format!("controlled phase needs two distinct atoms, got {j} twice")));
        }
        let mask = (1usize << self.bit(j)) | (1usize << self.bit(k));
        let p = Complex64::from_polar(1.0, -theta);
        for (b, a) in self.amps.iter_mut().enumerate() {
            if b & mask == mask {
                *a *= p;
            }
        }
        Ok(())
    }

    /// Probability of each basis outcome after an ideal measurement in `basis`.
    pub fn probabilities(&self, basis: Basis) -> Vec<f64> {
        match basis {
            Basis::Z => self.amps.iter().map(|a| a.norm_sqr()).collect(),
            Basis::X => {
                let mut s = self.clone();
                s.apply_hadamards(u64::MAX);
                s.amps.iter().map(|a| a.norm_sqr()).collect()
            }
        }
    }

    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        if self.n != other.n {
            return Err(Error::SizeMismatch(self.n, other.n));
        }
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }

    /// Collapses `atom` onto the given outcome; returns the Born probability.
    pub fn project(&mut self, atom: usize, basis: Basis, outcome: u8) -> Result<f64> {
        self.check_atom(atom)?;
        if outcome > 1 {
            return Err(Error::Domain(format!("outcome must be 0 or 1, got {outcome}")));
        }
        let m = 1usize << self.bit(atom);
        let mut p = 0.0;
        match basis {
            Basis::Z => {
                let want = if outcome == 1 { m } else { 0 };
                for (b, a) in self.amps.iter_mut().enumerate() {
                    if b & m == want {
                        p += a.norm_sqr();
                    } else {
                        *a = Complex64::new(0.0, 0.0);
                    }
                }
            }
            Basis::X => {
                let sign = if outcome == 0 { 1.0 } else { -1.0 };
                for b in 0..self.amps.len() {
                    if b & m != 0 {
                        continue;
                    }
                    let c = (self.amps[b] + sign * self.amps[b | m]) * 0.5;
                    self.amps[b] = c;
                    self.amps[b | m] = c * sign;
                    p += 2.0 * c.norm_sqr();
                }
            }
        }
        if p <= 1e-300 {
            return Err(Error::ZeroProbability { atom, outcome });
        }
        self.scale(1.0 / p.sqrt());
        Ok(p)
    }

    /// Samples one complete outcome by a linear scan of the Born distribution.
    pub fn measure_all<R: Rng + ?Sized>(&self, basis: Basis, rng: &mut R) -> u64 {
        let probs = self.probabilities(basis);
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (b, p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return b as u64;
            }
        }
        probs.iter().rposition(|&p| p > 0.0).unwrap_or(0) as u64
    }

    /// Integrates the drive plus interaction over the whole schedule.
    pub fn evolve(&mut self, schedule: &PulseSchedule, v: &InteractionMatrix, params: &EvolutionParams) -> Result<()> {
        if v.n() != self.n {
            return Err(Error::SizeMismatch(v.n(), self.n));
        }
        if !(params.step > 0.0) || !params.step.is_finite() {
            return Err(Error::Domain(format!("step must be positive, got {}", params.step)));
        }
        let energies = diagonal_energies(v);
        for seg in schedule.segments() {
            self.evolve_segment(seg, &energies, params);
        }
        if self.amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::Integration("non-finite amplitude after evolution".into()));
        }
        let nrm = self.norm();
        self.scale(1.0 / nrm);
        Ok(())
    }

    fn evolve_segment(&mut self, seg: &PulseSegment, energies: &[f64], params: &EvolutionParams) {
        if seg.duration == 0.0 {
            return;
        }
        if !seg.is_driven() {
            let ph = phase_factors(energies, seg.duration);
            mul_diag(&mut self.amps, &ph);
            return;
        }
        let steps = (seg.duration / params.step - 1e-9).ceil().max(1.0) as usize;
        let h = seg.duration / steps as f64;
        let ph = phase_factors(energies, h);
        match params.order {
            Splitting::First => {
                for k in 0..steps {
                    let t0 = k as f64 * h;
                    self.apply_global_rotation(seg.phi, seg.area(t0, t0 + h));
                    mul_diag(&mut self.amps, &ph);
                }
            }
            Splitting::Second => {
                let mut pending = 0.0;
                for k in 0..steps {
                    let t0 = k as f64 * h;
                    let tm = t0 + h / 2.0;
                    pending += seg.area(t0, tm);
                    self.apply_global_rotation(seg.phi, pending);
                    mul_diag(&mut self.amps, &ph);
                    pending = seg.area(tm, t0 + h);
                }
                self.apply_global_rotation(seg.phi, pending);
            }
        }
    }
}

pub fn init_ground(n: usize) -> Result<StateVector> {
    check_n(n)?;
    let mut amps = vec![Complex64::new(0.0, 0.0); 1usize << n];
    amps[0] = Complex64::new(1.0, 0.0);
    Ok(StateVector { n, amps })
}

/// Product of |+> states with a controlled phase on every edge.
pub fn build_ideal_graph_state(graph: &GraphSpec) -> Result<StateVector> {
    let n = graph.n_vertices();
    check_n(n)?;
    let dim = 1usize << n;
    let amp = (dim as f64).sqrt().recip();
    let edges: Vec<(usize, usize, f64)> = graph
        .edges()
        .iter()
        .map(|e| ((1usize << (n - 1 - e.a)) | (1usize << (n - 1 - e.b)), 0, e.theta))
        .collect();
    let f = |b: usize| {
        let phase: f64 = edges.iter().filter(|(m, _, _)| b & m == *m).map(|(_, _, t)| t).sum();
        Complex64::from_polar(amp, -phase)
    };
    let amps = if dim < PAR_MIN {
        (0..dim).map(f).collect()
    } else {
        (0..dim).into_par_iter().map(f).collect()
    };
    Ok(StateVector { n, amps })
}

/// (|gg> + |rr>) / sqrt 2.
pub fn bell_state() -> StateVector {
    let a = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let z = Complex64::new(0.0, 0.0);
    StateVector { n: 2, amps: vec![a, z, z, a] }
}

pub fn overlap(a: &StateVector, b: &StateVector) -> Result<f64> {
    Ok(a.inner(b)?.norm_sqr())
}

/// Draws one outcome index per uniform in `uniforms`.
///
/// Up to 20 atoms this is a binary search of the cumulative distribution;
/// above that the uniforms are sorted and matched in one sweep so no extra
/// 2^N buffer is allocated. Both paths return the same outcomes.
pub fn sample_from_probabilities(probs: &[f64], uniforms: &[f64]) -> Vec<u64> {
    if probs.len() <= 1usize << CDF_MAX_ATOMS {
        sample_by_cdf(probs, uniforms)
    } else {
        sample_by_sweep(probs, uniforms)
    }
}

fn last_support(probs: &[f64]) -> u64 {
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0) as u64
}

fn sample_by_cdf(probs: &[f64], uniforms: &[f64]) -> Vec<u64> {
    let last = last_support(probs);
    let mut cdf = Vec::with_capacity(probs.len());
    let mut acc = 0.0;
    for p in probs {
        acc += p;
        cdf.push(acc);
    }
    uniforms
        .iter()
        .map(|&u| (cdf.partition_point(|&c| c <= u * acc) as u64).min(last))
        .collect()
}

fn sample_by_sweep(probs: &[f64], uniforms: &[f64]) -> Vec<u64> {
    let last = last_support(probs);
    let total: f64 = probs.iter().sum();
    let mut order: Vec<usize> = (0..uniforms.len()).collect();
    order.sort_by(|&a, &b| uniforms[a].total_cmp(&uniforms[b]));
    let mut out = vec![last; uniforms.len()];
    let mut acc = 0.0;
    let mut idx = 0usize;
    for &o in &order {
        let x = uniforms[o] * total;
        while idx < probs.len() && acc + probs[idx] <= x {
            acc += probs[idx];
            idx += 1;
        }
        out[o] = (idx as u64).min(last);
    }
    out
}

/// Bit of `atom` in an outcome index over `n` atoms.
pub fn outcome_bit(outcome: u64, n: usize, atom: usize) -> u8 {
    ((outcome >> (n - 1 - atom)) & 1) as u8
}

pub fn outcome_bits(outcome: u64, n: usize) -> Vec<u8> {
    (0..n).map(|i| outcome_bit(outcome, n, i)).collect()
}

pub fn bits_to_outcome(bits: &[u8]) -> u64 {
    bits.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64)
}

/// Norm of the part of the pulsed state orthogonal to the instantaneous
/// rotation oracle, for a square pi/2 pulse about y of width `dt` on a
/// chain at spacing `d` (all pairs coupled).
pub fn prep_error_norm(n: usize, d: f64, dt: f64) -> Result<f64> {
    let layout = crate::geometry::build_chain(n, d, 0.0)?;
    let v = crate::geometry::interaction_matrix(&layout)?;
    prep_error_norm_with(&v, dt)
}

pub fn prep_error_norm_with(v: &InteractionMatrix, dt: f64) -> Result<f64> {
    use crate::pulses::{Label, Y_AXIS};
    if !(dt >= 0.0) || !dt.is_finite() {
        return Err(Error::Domain(format!("pulse width must be >= 0, got {dt}")));
    }
    let n = v.n();
    let mut ideal = init_ground(n)?;
    ideal.apply_global_rotation(Y_AXIS, std::f64::consts::FRAC_PI_2);
    if dt == 0.0 {
        return Ok(0.0);
    }
    let seg = PulseSegment::rotation(Label::Prep, Shape::Square, dt, std::f64::consts::FRAC_PI_2, Y_AXIS)?;
    let mut full = init_ground(n)?;
    let params = EvolutionParams { step: (dt / 400.0).min(DEFAULT_STEP), order: Splitting::Second };
    full.evolve(&PulseSchedule::new(vec![seg]), v, &params)?;
    let c = ideal.inner(&full)?;
    let resid: f64 = full
        .amps
        .iter()
        .zip(&ideal.amps)
        .map(|(f, i)| (f - c * i).norm_sqr())
        .sum();
    Ok(resid.sqrt())
}
