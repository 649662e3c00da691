//! Classical error channels and the analytic scaling models.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::geometry::{AtomLayout, InteractionMatrix, C6};

/// Error threshold used when quoting domain sizes.
pub const EPS_THRESHOLD: f64 = 0.0075;

/// How position jitter enters a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum JitterModel {
    /// Fresh Gaussian positions for every shot.
    #[default]
    Quenched,
    /// Couplings replaced by their average over the Gaussian displacement.
    Averaged,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NoiseConfig {
    pub eps_l: f64,
    pub eps_m: f64,
    pub eps_damp: f64,
    pub jitter: f64,
    pub jitter_model: JitterModel,
}

impl NoiseConfig {
    pub fn none() -> Self {
        NoiseConfig::default()
    }

    pub fn flips(eps_l: f64) -> Self {
        NoiseConfig { eps_l, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name: &str, v: f64, range: &str| Err(Error::Domain(format!("{name} = {v} outside {range}")));
        if !(0.0..=0.5).contains(&self.eps_l) {
            return bad("eps_l", self.eps_l, "[0, 0.5]");
        }
        if !(0.0..1.0).contains(&self.eps_m) {
            return bad("eps_m", self.eps_m, "[0, 1)");
        }
        if !(0.0..=1.0).contains(&self.eps_damp) {
            return bad("eps_damp", self.eps_damp, "[0, 1]");
        }
        if !(self.jitter >= 0.0) || !self.jitter.is_finite() {
            return bad("jitter_um", self.jitter, "[0, inf)");
        }
        Ok(())
    }

    pub fn is_clean(&self) -> bool {
        self.eps_l == 0.0 && self.eps_m == 0.0 && self.eps_damp == 0.0 && self.jitter == 0.0
    }
}

pub fn apply_x_flip<R: Rng + ?Sized>(bits: &mut [u8], eps_l: f64, rng: &mut R) {
    if eps_l <= 0.0 {
        return;
    }
    for b in bits.iter_mut() {
        if rng.random::<f64>() < eps_l {
            *b ^= 1;
        }
    }
}

/// Each |r> readout (bit 1) is lost to |g> with probability `eps_m`.
pub fn apply_readout_bias<R: Rng + ?Sized>(bits: &mut [u8], eps_m: f64, rng: &mut R) {
    if eps_m <= 0.0 {
        return;
    }
    for b in bits.iter_mut() {
        if *b == 1 && rng.random::<f64>() < eps_m {
            *b = 0;
        }
    }
}

/// Probability that an even number of `n` independent flips occurred.
pub fn p_even(n: u32, eps_l: f64) -> f64 {
    0.5 * (1.0 + (1.0 - 2.0 * eps_l).powi(n as i32))
}

/// Same model for a real-valued string length.
pub fn p_even_real(n: f64, eps_l: f64) -> f64 {
    0.5 * (1.0 + (1.0 - 2.0 * eps_l).powf(n))
}

pub fn trajectory_fidelity(n: f64, eps: f64) -> f64 {
    0.5 * (1.0 + (-eps * n).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainModel {
    PEven,
    Ideal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DomainSize {
    /// Output-path length n_O at which the parity model first drops below
    /// the threshold; `None` for the ideal model.
    pub n_o: Option<u64>,
    pub size: u64,
}

pub fn domain_size(model: DomainModel, eps: f64, threshold: f64) -> Result<DomainSize> {
    if !(threshold > 0.5 && threshold < 1.0) {
        return Err(Error::Domain(format!("threshold must lie in (0.5, 1), got {threshold}")));
    }
    if !(eps >= 0.0) || !eps.is_finite() {
        return Err(Error::Domain(format!("error rate must be >= 0, got {eps}")));
    }
    if eps == 0.0 {
        return Err(Error::Unbounded("zero error rate gives an unbounded domain".into()));
    }
    match model {
        DomainModel::Ideal => {
            let n = -(2.0 * threshold - 1.0).ln() / eps;
            Ok(DomainSize { n_o: None, size: n.floor() as u64 })
        }
        DomainModel::PEven => {
            if eps > 0.5 {
                return Err(Error::Domain(format!("flip probability must be <= 0.5, got {eps}")));
            }
            let mut n = 1u64;
            while p_even(n as u32, eps) >= threshold {
                n += 1;
                if n > u32::MAX as u64 {
                    return Err(Error::Unbounded("parity model never crosses the threshold".into()));
                }
            }
            Ok(DomainSize { n_o: Some(n), size: 2 * n - 1 })
        }
    }
}

/// First-order coupling shift from position jitter of amplitude `dd`.
pub fn jitter_shift(d: f64, dd: f64) -> Result<f64> {
    if !(d > 0.0) || !d.is_finite() || !(dd >= 0.0) {
        return Err(Error::Domain(format!("need d > 0 and jitter >= 0, got d = {d}, jitter = {dd}")));
    }
    Ok(36.0 * C6 * dd / d.powi(7))
}

/// Copy of the layout with every coordinate displaced by N(0, dd^2).
pub fn sample_jittered_layout<R: Rng + ?Sized>(layout: &AtomLayout, dd: f64, rng: &mut R) -> Result<AtomLayout> {
    if dd == 0.0 {
        return Ok(layout.clone());
    }
    let normal = Normal::new(0.0, dd).map_err(|e| Error::Domain(e.to_string()))?;
    let offsets = (0..layout.len()).map(|_| [normal.sample(rng), normal.sample(rng)]).collect();
    layout.with_offsets(offsets)
}

/// E[C6 / |r + u|^6] for u ~ N(0, 2 dd^2 I), the relative displacement of
/// two independently jittered atoms at separation `r`.
pub fn averaged_pair_interaction(r: f64, dd: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::Domain(format!("separation must be positive, got {r}")));
    }
    if dd == 0.0 {
        return Ok(C6 / r.powi(6));
    }
    let sigma = std::f64::consts::SQRT_2 * dd;
    if 8.0 * sigma >= r {
        return Err(Error::Domain(format!("jitter {dd} um too large for separation {r} um")));
    }
    let half = 48;
    let h = 8.0 * sigma / half as f64;
    let w = |u: f64| (-0.5 * (u / sigma).powi(2)).exp();
    let mut num = 0.0;
    let mut den = 0.0;
    for i in -half..=half {
        let ux = i as f64 * h;
        let wx = w(ux);
        for j in -half..=half {
            let uy = j as f64 * h;
            let wt = wx * w(uy);
            let dist2 = (r + ux).powi(2) + uy * uy;
            num += wt * C6 / dist2.powi(3);
            den += wt;
        }
    }
    Ok(num / den)
}

/// Interaction matrix with every coupling averaged over position jitter.
pub fn averaged_interaction(layout: &AtomLayout, dd: f64, cutoff: Option<f64>) -> Result<InteractionMatrix> {
    let bare = InteractionMatrix::from_layout(layout, cutoff)?;
    let pos = layout.positions();
    let mut err = None;
    let m = InteractionMatrix::from_fn(layout.len(), |i, j| {
        if bare.get(i, j) == 0.0 {
            return 0.0;
        }
        let r = ((pos[i][0] - pos[j][0]).powi(2) + (pos[i][1] - pos[j][1]).powi(2)).sqrt();
        averaged_pair_interaction(r, dd).unwrap_or_else(|e| {
            err = Some(e);
            0.0
        })
    });
    match err {
        Some(e) => Err(e),
        None => Ok(m),
    }
}
