//! Readout-bias correction of count vectors.
//!
//! The single-atom bias matrix maps true (g, r) populations to measured
//! ones; it acts independently on every atom, so it is applied one tensor
//! axis at a time on a sparse map of populated outcomes.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CountVector {
    n_atoms: usize,
    counts: BTreeMap<u64, f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NegativityReport {
    /// Total weight of the negative entries that were clipped to zero.
    pub clipped_mass: f64,
    pub clipped_outcomes: usize,
}

impl CountVector {
    pub fn new(n_atoms: usize) -> Result<Self> {
        if n_atoms == 0 || n_atoms > 63 {
            return Err(Error::Domain(format!("count vectors support 1..=63 atoms, got {n_atoms}")));
        }
        Ok(CountVector { n_atoms, counts: BTreeMap::new() })
    }

    pub fn from_pairs(n_atoms: usize, pairs: impl IntoIterator<Item = (u64, f64)>) -> Result<Self> {
        let mut c = CountVector::new(n_atoms)?;
        for (k, v) in pairs {
            c.add(k, v)?;
        }
        Ok(c)
    }

    pub fn add(&mut self, outcome: u64, count: f64) -> Result<()> {
        if outcome >> self.n_atoms != 0 {
            return Err(Error::Domain(format!("outcome {outcome} does not fit {} atoms", self.n_atoms)));
        }
        if !count.is_finite() {
            return Err(Error::Domain("non-finite count".into()));
        }
        *self.counts.entry(outcome).or_insert(0.0) += count;
        Ok(())
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn get(&self, outcome: u64) -> f64 {
        self.counts.get(&outcome).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.counts.iter().map(|(&k, &v)| (k, v))
    }

    pub fn total(&self) -> f64 {
        self.counts.values().sum()
    }

    /// Dense copy, only sensible for small atom counts.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut v = vec![0.0; 1usize << self.n_atoms];
        for (&k, &c) in &self.counts {
            v[k as usize] = c;
        }
        v
    }

    /// Parses "bitstring count" lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut out: Option<CountVector> = None;
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| Error::Parse { line: ln + 1, msg };
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 2 {
                return Err(err("expected `bitstring count`".into()));
            }
            if f[0].is_empty() || !f[0].bytes().all(|b| b == b'0' || b == b'1') {
                return Err(err(format!("bad bitstring `{}`", f[0])));
            }
            let count: f64 = f[1].parse().map_err(|_| err(format!("bad count `{}`", f[1])))?;
            if count < 0.0 {
                return Err(err("counts must be non-negative".into()));
            }
            let n = f[0].len();
            let cv = match &mut out {
                Some(c) => c,
                None => out.insert(CountVector::new(n).map_err(|e| err(e.to_string()))?),
            };
            if n != cv.n_atoms {
                return Err(err(format!("bitstring length {n} differs from {}", cv.n_atoms)));
            }
            let k = u64::from_str_radix(f[0], 2).map_err(|_| err("bitstring too long".into()))?;
            cv.add(k, count).map_err(|e| err(e.to_string()))?;
        }
        out.ok_or_else(|| Error::Empty("count file has no entries".into()))
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (&k, &v) in &self.counts {
            let _ = writeln!(s, "{:0width$b} {}", k, fmt_count(v), width = self.n_atoms);
        }
        s
    }

    fn apply_axis(&self, atom: usize, m: [[f64; 2]; 2]) -> CountVector {
        let bit = 1u64 << (self.n_atoms - 1 - atom);
        let mut out = BTreeMap::new();
        for (&k, &c) in &self.counts {
            if c == 0.0 {
                continue;
            }
            let src = usize::from(k & bit != 0);
            for dst in 0..2 {
                let w = m[dst][src];
                if w != 0.0 {
                    let key = if dst == 1 { k | bit } else { k & !bit };
                    *out.entry(key).or_insert(0.0) += w * c;
                }
            }
        }
        CountVector { n_atoms: self.n_atoms, counts: out }
    }

    fn apply_all(&self, m: [[f64; 2]; 2]) -> CountVector {
        (0..self.n_atoms).fold(self.clone(), |acc, a| acc.apply_axis(a, m))
    }
}

fn fmt_count(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v:.9}")
    }
}

fn check_eps(eps_m: f64) -> Result<()> {
    if !(0.0..1.0).contains(&eps_m) {
        return Err(Error::Domain(format!("readout bias must lie in [0, 1), got {eps_m}")));
    }
    Ok(())
}

pub fn bias_matrix(eps_m: f64) -> [[f64; 2]; 2] {
    [[1.0, eps_m], [0.0, 1.0 - eps_m]]
}

pub fn inverse_bias_matrix(eps_m: f64) -> [[f64; 2]; 2] {
    [[1.0, -eps_m / (1.0 - eps_m)], [0.0, 1.0 / (1.0 - eps_m)]]
}

/// Measured counts expected from true counts `counts`.
pub fn bias_counts(counts: &CountVector, eps_m: f64) -> Result<CountVector> {
    check_eps(eps_m)?;
    Ok(counts.apply_all(bias_matrix(eps_m)))
}

/// Exact inverse of the bias, without clipping.
pub fn unbias_counts(counts: &CountVector, eps_m: f64) -> Result<CountVector> {
    check_eps(eps_m)?;
    Ok(counts.apply_all(inverse_bias_matrix(eps_m)))
}

/// Inverts the bias, clips negative entries and rescales to the original
/// total; the clipped weight is reported.
pub fn correct_counts(counts: &CountVector, eps_m: f64) -> Result<(CountVector, NegativityReport)> {
    let raw = unbias_counts(counts, eps_m)?;
    let total = counts.total();
    let tiny = 1e-12 * total.abs().max(1.0);
    let mut clipped = 0.0;
    let mut n_clipped = 0;
    let mut kept = BTreeMap::new();
    for (k, v) in raw.iter() {
        if v.abs() <= tiny {
            continue;
        }
        if v < 0.0 {
            clipped += -v;
            n_clipped += 1;
        } else if v > 0.0 {
            kept.insert(k, v);
        }
    }
    let s: f64 = kept.values().sum();
    if s > 0.0 && s != total {
        kept.values_mut().for_each(|v| *v *= total / s);
    }
    Ok((
        CountVector { n_atoms: counts.n_atoms, counts: kept },
        NegativityReport { clipped_mass: clipped, clipped_outcomes: n_clipped },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::shot_rng;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::Rng;

    fn kron(a: &[Vec<f64>], b: &[[f64; 2]; 2]) -> Vec<Vec<f64>> {
        let n = a.len();
        let mut out = vec![vec![0.0; 2 * n]; 2 * n];
        for i in 0..n {
            for j in 0..n {
                for p in 0..2 {
                    for q in 0..2 {
                        out[2 * i + p][2 * j + q] = a[i][j] * b[p][q];
                    }
                }
            }
        }
        out
    }

    fn dense_apply(counts: &CountVector, m: [[f64; 2]; 2]) -> Vec<f64> {
        let mut t = vec![vec![1.0]];
        for _ in 0..counts.n_atoms() {
            t = kron(&t, &m);
        }
        let v = counts.to_dense();
        t.iter().map(|row| row.iter().zip(&v).map(|(a, b)| a * b).sum()).collect()
    }

    #[test]
    fn single_atom_arithmetic() {
        let c = CountVector::from_pairs(1, [(0, 0.5), (1, 0.5)]).unwrap();
        let b = bias_counts(&c, 0.08).unwrap();
        assert_relative_eq!(b.get(0), 0.54, epsilon = 1e-15);
        assert_relative_eq!(b.get(1), 0.46, epsilon = 1e-15);
        let m = CountVector::from_pairs(1, [(0, 0.54), (1, 0.46)]).unwrap();
        let (r, rep) = correct_counts(&m, 0.08).unwrap();
        assert_relative_eq!(r.get(0), 0.5, epsilon = 1e-12);
        assert_relative_eq!(r.get(1), 0.5, epsilon = 1e-12);
        assert_eq!(rep.clipped_outcomes, 0);
    }

    #[test]
    fn zero_bias_is_identity() {
        let c = CountVector::from_pairs(3, [(1, 4.0), (6, 2.0)]).unwrap();
        assert_eq!(bias_counts(&c, 0.0).unwrap(), c);
        assert!(correct_counts(&c, 1.0).is_err());
    }

    #[test]
    fn clipping_keeps_total() {
        // All weight read as gg; the inverse produces a negative rr entry.
        let c = CountVector::from_pairs(2, [(0, 90.0), (3, 10.0), (1, 0.0)]).unwrap();
        let (r, rep) = correct_counts(&c, 0.3).unwrap();
        assert!(rep.clipped_mass > 0.0);
        assert_relative_eq!(r.total(), 100.0, epsilon = 1e-9);
        assert!(r.iter().all(|(_, v)| v >= 0.0));
    }

    #[test]
    fn round_trip_large() {
        let mut rng = shot_rng(4, 0);
        let n = 12;
        let mut c = CountVector::new(n).unwrap();
        for _ in 0..300 {
            c.add(rng.random_range(0..1u64 << n), rng.random_range(1..50) as f64).unwrap();
        }
        for &e in &[0.0, 0.08, 0.5, 0.9] {
            let back = unbias_counts(&bias_counts(&c, e).unwrap(), e).unwrap();
            for k in 0..(1u64 << n) {
                let want = c.get(k);
                assert!((back.get(k) - want).abs() <= 1e-9 * want.max(1.0), "eps {e}");
            }
        }
    }

    #[test]
    fn sampled_bell_counts_recover_weights() {
        let shots = 100_000u64;
        let eps = 0.08;
        let mut meas = CountVector::new(2).unwrap();
        for i in 0..shots {
            let mut rng = shot_rng(21, i);
            let mut bits = if rng.random::<f64>() < 0.5 { [0u8, 0] } else { [1u8, 1] };
            crate::noise::apply_readout_bias(&mut bits, eps, &mut rng);
            meas.add(crate::engine::bits_to_outcome(&bits), 1.0).unwrap();
        }
        let (corr, _) = correct_counts(&meas, eps).unwrap();
        let m = shots as f64;
        for k in [0u64, 3] {
            let p = corr.get(k) / m;
            let sd = (0.25 / m).sqrt() / (1.0 - eps).powi(2);
            assert!((p - 0.5).abs() < 4.0 * sd, "outcome {k}: {p}");
        }
    }

    #[test]
    fn count_file_round_trip() {
        let c = CountVector::from_pairs(3, [(0b101, 7.0), (0b000, 3.0)]).unwrap();
        let t = c.to_text();
        assert_eq!(t, "000 3\n101 7\n");
        assert_eq!(CountVector::parse(&t).unwrap(), c);
        assert!(CountVector::parse("01 3\n011 2\n").is_err());
        assert!(CountVector::parse("0x1 3\n").is_err());
        assert!(CountVector::parse("").is_err());
    }

    proptest! {
        #[test]
        fn axis_application_matches_dense(n in 1usize..=4, eps in 0.0f64..0.95, seed in 0u64..500) {
            let mut rng = shot_rng(seed, 0);
            let c = CountVector::from_pairs(n, (0..(1u64 << n)).map(|k| (k, rng.random_range(0.0..10.0)))).unwrap();
            for m in [bias_matrix(eps), inverse_bias_matrix(eps)] {
                let dense = dense_apply(&c, m);
                let sparse = c.apply_all(m).to_dense();
                for (a, b) in dense.iter().zip(&sparse) {
                    prop_assert!((a - b).abs() < 1e-12 * a.abs().max(1.0));
                }
            }
        }

        #[test]
        fn bias_preserves_total(n in 1usize..=8, eps in 0.0f64..0.9, seed in 0u64..500) {
            let mut rng = shot_rng(seed, 1);
            let c = CountVector::from_pairs(n, (0..20).map(|_| (rng.random_range(0..1u64 << n), 1.0))).unwrap();
            let b = bias_counts(&c, eps).unwrap();
            prop_assert!((b.total() - c.total()).abs() < 1e-9);
            let (r, _) = correct_counts(&b, eps).unwrap();
            prop_assert!((r.total() - c.total()).abs() < 1e-9);
        }

        #[test]
        fn round_trip_any_bias(n in 1usize..=12, eps in 0.0f64..=0.9, seed in 0u64..200) {
            let mut rng = shot_rng(seed, 2);
            let c = CountVector::from_pairs(n, (0..30).map(|_| (rng.random_range(0..1u64 << n), rng.random_range(1.0..9.0)))).unwrap();
            let (back, rep) = correct_counts(&bias_counts(&c, eps).unwrap(), eps).unwrap();
            prop_assert_eq!(rep.clipped_outcomes, 0);
            for (k, v) in c.iter() {
                prop_assert!((back.get(k) - v).abs() <= 1e-9 * v.max(1.0));
            }
        }
    }
}
