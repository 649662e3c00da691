//! Jackknife errors, running estimates and single-parameter scaling fits.

use argmin::core::{CostFunction, Executor};
use argmin::solver::brent::{BrentOpt, BrentRoot};

use crate::error::{Error, Result};

/// Delete-1 jackknife mean and standard error of the sample mean.
pub fn jackknife_se(values: &[f64]) -> Result<(f64, f64)> {
    let m = values.len();
    if m < 2 {
        return Err(Error::Domain(format!("jackknife needs at least 2 values, got {m}")));
    }
    let mf = m as f64;
    let sum: f64 = values.iter().sum();
    let loo = |x: f64| (sum - x) / (mf - 1.0);
    let mean = values.iter().map(|&x| loo(x)).sum::<f64>() / mf;
    let ss: f64 = values.iter().map(|&x| (loo(x) - mean).powi(2)).sum();
    Ok((mean, ((mf - 1.0) / mf * ss).sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergencePoint {
    pub shots: usize,
    pub estimate: f64,
    pub std_error: f64,
}

/// Running mean and jackknife error of the first `m` values at each
/// checkpoint `m`; checkpoints past the end of the stream are skipped and
/// a single value reports a zero error.
pub fn convergence_curve(stream: &[f64], checkpoints: &[usize]) -> Result<Vec<ConvergencePoint>> {
    if stream.is_empty() {
        return Err(Error::Empty("empty shot stream".into()));
    }
    let mut out = Vec::new();
    for &m in checkpoints {
        if m == 0 || m > stream.len() {
            continue;
        }
        let (estimate, std_error) = if m == 1 { (stream[0], 0.0) } else { jackknife_se(&stream[..m])? };
        out.push(ConvergencePoint { shots: m, estimate, std_error });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitModel {
    /// Even-flip probability of `n` independent flips.
    PEven,
    /// Survival model 1/2 (1 + exp(-eps n)).
    Trajectory,
}

impl FitModel {
    pub fn eval(&self, n: f64, eps: f64) -> f64 {
        match self {
            FitModel::PEven => crate::noise::p_even_real(n, eps),
            FitModel::Trajectory => crate::noise::trajectory_fidelity(n, eps),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            FitModel::PEven => "p_even",
            FitModel::Trajectory => "trajectory",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Weighting {
    #[default]
    Weighted,
    Unweighted,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitPoint {
    pub n: f64,
    pub value: f64,
    pub se: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    pub model: FitModel,
    pub eps: f64,
    /// Unweighted sum of squared residuals at the optimum.
    pub sse: f64,
    /// Weighted objective at the optimum.
    pub chi2: f64,
    pub half_width: f64,
    /// True when the error bars were used as weights.
    pub weighted: bool,
}

pub const EPS_MAX: f64 = 0.5;

struct Objective<'a> {
    points: &'a [FitPoint],
    model: FitModel,
    weights: Vec<f64>,
    scale: f64,
    offset: f64,
}

impl Objective<'_> {
    fn chi2(&self, eps: f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| w * (p.value - self.model.eval(p.n, eps)).powi(2))
            .sum::<f64>()
            / self.scale
    }
}

impl CostFunction for Objective<'_> {
    type Param = f64;
    type Output = f64;

    fn cost(&self, eps: &f64) -> std::result::Result<f64, argmin::core::Error> {
        Ok(self.chi2(*eps) - self.offset)
    }
}

fn run_err(e: argmin::core::Error) -> Error {
    Error::Fit(e.to_string())
}

/// Least-squares fit of one error probability on [0, 0.5].
///
/// With error bars the objective is chi^2 and the half width comes from
/// chi^2_min + 1. Unweighted fits, or any point with a zero error bar, use
/// uniform weights with the objective scaled by SSE_min / (n - 1).
pub fn fit_epsilon(points: &[FitPoint], model: FitModel, weighting: Weighting) -> Result<FitResult> {
    if points.len() < 2 {
        return Err(Error::Fit(format!("need at least 2 points, got {}", points.len())));
    }
    if points.iter().any(|p| !p.n.is_finite() || !p.value.is_finite() || !p.se.is_finite() || p.se < 0.0) {
        return Err(Error::Fit("points must be finite with non-negative error bars".into()));
    }
    if points.iter().all(|p| p.n == points[0].n) {
        return Err(Error::Fit("all points share the same length".into()));
    }
    let weighted = weighting == Weighting::Weighted && points.iter().all(|p| p.se > 0.0);
    let weights: Vec<f64> = points.iter().map(|p| if weighted { 1.0 / (p.se * p.se) } else { 1.0 }).collect();
    let mut obj = Objective { points, model, weights, scale: 1.0, offset: 0.0 };

    let grid = 1000;
    let h = EPS_MAX / grid as f64;
    let best: usize = (0..=grid)
        .map(|i| (i, obj.chi2(i as f64 * h)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let lo = (best.saturating_sub(1)) as f64 * h;
    let hi = ((best + 1).min(grid)) as f64 * h;
    let solver = BrentOpt::new(lo, hi).set_tolerance(1e-10, 1e-12);
    let res = Executor::new(obj, solver)
        .configure(|s| s.max_iters(500))
        .run()
        .map_err(run_err)?;
    let state = res.state();
    let mut eps = state.best_param.ok_or_else(|| Error::Fit("minimiser returned no parameter".into()))?;
    obj = res.problem.problem.ok_or_else(|| Error::Fit("objective lost".into()))?;
    for edge in [0.0, EPS_MAX] {
        if obj.chi2(edge) <= obj.chi2(eps) {
            eps = edge;
        }
    }
    let chi2 = obj.chi2(eps);
    let sse: f64 = points.iter().map(|p| (p.value - model.eval(p.n, eps)).powi(2)).sum();

    if !weighted {
        let dof = (points.len() - 1) as f64;
        let sigma2 = sse / dof;
        if sigma2 <= 1e-30 {
            return Ok(FitResult { model, eps, sse, chi2, half_width: 0.0, weighted });
        }
        obj.scale = sigma2;
    }
    let target = obj.chi2(eps);
    obj.offset = target + 1.0;
    let mut widths = Vec::new();
    for (a, b) in [(0.0, eps), (eps, EPS_MAX)] {
        if b - a <= 0.0 || obj.chi2(if a == eps { b } else { a }) - obj.offset <= 0.0 {
            continue;
        }
        let solver = BrentRoot::new(a, b, 1e-12);
        let probe = Objective { points, model, weights: obj.weights.clone(), scale: obj.scale, offset: obj.offset };
        let r = Executor::new(probe, solver).configure(|s| s.max_iters(500)).run().map_err(run_err)?;
        if let Some(x) = r.state().best_param {
            widths.push((x - eps).abs());
        }
    }
    let half_width = if widths.is_empty() { f64::INFINITY } else { widths.iter().sum::<f64>() / widths.len() as f64 };
    Ok(FitResult { model, eps, sse, chi2, half_width, weighted })
}

/// Parses "n value se" lines; `#` starts a comment.
pub fn parse_points(text: &str) -> Result<Vec<FitPoint>> {
    let mut out = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 3 {
            return Err(Error::Parse { line: ln + 1, msg: "expected `n value se`".into() });
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| Error::Parse { line: ln + 1, msg: format!("bad number `{s}`") });
        out.push(FitPoint { n: num(f[0])?, value: num(f[1])?, se: num(f[2])? });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::shot_rng;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::Rng;

    fn exact_points(model: FitModel, eps: f64, ns: impl Iterator<Item = u32>) -> Vec<FitPoint> {
        ns.map(|n| FitPoint { n: n as f64, value: model.eval(n as f64, eps), se: 0.0 }).collect()
    }

    #[test]
    fn jackknife_basics() {
        assert_eq!(jackknife_se(&[1.0; 10]).unwrap(), (1.0, 0.0));
        assert!(jackknife_se(&[1.0]).is_err());
        let mut rng = shot_rng(1, 0);
        let xs: Vec<f64> = (0..1000).map(|_| if rng.random::<f64>() < 0.75 { 1.0 } else { 0.0 }).collect();
        let (m, se) = jackknife_se(&xs).unwrap();
        let mean = xs.iter().sum::<f64>() / 1000.0;
        let s2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 999.0;
        assert_relative_eq!(m, mean, epsilon = 1e-12);
        assert_relative_eq!(se, (s2 / 1000.0).sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn jackknife_reference_value() {
        let m = 1000;
        let ones = 752;
        let xs: Vec<f64> = (0..m).map(|i| if i < ones { 1.0 } else { 0.0 }).collect();
        let (_, se) = jackknife_se(&xs).unwrap();
        assert!((se - 0.0137).abs() < 5e-5);
        let p = 0.752f64;
        assert_relative_eq!(se, (p * (1.0 - p) / (m as f64 - 1.0)).sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn convergence_curves() {
        let flat = convergence_curve(&[1.0; 50], &[1, 10, 50, 80]).unwrap();
        assert_eq!(flat.len(), 3);
        assert!(flat.iter().all(|c| c.estimate == 1.0 && c.std_error == 0.0));
        let xs: Vec<f64> = (0..10_000u64)
            .map(|i| if shot_rng(77, i).random::<f64>() < 0.75 { 1.0 } else { 0.0 })
            .collect();
        let c = convergence_curve(&xs, &[100, 1000, 10_000]).unwrap();
        for p in &c {
            let sd = (0.75 * 0.25 / p.shots as f64).sqrt();
            assert!((p.estimate - 0.75).abs() < 4.0 * sd);
        }
        let ratio = c[0].std_error / c[2].std_error;
        assert!((ratio / 10.0 - 1.0).abs() < 0.2, "ratio {ratio}");
        assert!(convergence_curve(&[], &[1]).is_err());
    }

    #[test]
    fn exact_data_recovered() {
        for model in [FitModel::PEven, FitModel::Trajectory] {
            for &eps in &[0.0, 0.02, 0.12, 0.3] {
                let pts = exact_points(model, eps, 2..=12);
                let r = fit_epsilon(&pts, model, Weighting::Weighted).unwrap();
                assert!((r.eps - eps).abs() < 1e-4, "{model:?} {eps}: {}", r.eps);
                assert!(r.sse < 1e-12);
                assert!(!r.weighted);
            }
        }
    }

    #[test]
    fn weighted_half_width() {
        let pts: Vec<FitPoint> = (2..=12)
            .map(|n| FitPoint { n: n as f64, value: FitModel::PEven.eval(n as f64, 0.12), se: 0.005 })
            .collect();
        let r = fit_epsilon(&pts, FitModel::PEven, Weighting::Weighted).unwrap();
        assert!(r.weighted);
        assert!((r.eps - 0.12).abs() < 1e-6);
        // curvature check: chi2 at eps +- half_width rises by one
        let chi = |e: f64| pts.iter().map(|p| ((p.value - FitModel::PEven.eval(p.n, e)) / p.se).powi(2)).sum::<f64>();
        assert_relative_eq!(chi(r.eps + r.half_width), 1.0, epsilon = 0.05);
        assert!(r.half_width > 0.0 && r.half_width < 0.01);
    }

    #[test]
    fn degenerate_inputs() {
        let one = [FitPoint { n: 3.0, value: 0.9, se: 0.01 }];
        assert!(fit_epsilon(&one, FitModel::PEven, Weighting::Weighted).is_err());
        let same = [FitPoint { n: 3.0, value: 0.9, se: 0.01 }, FitPoint { n: 3.0, value: 0.8, se: 0.01 }];
        assert!(fit_epsilon(&same, FitModel::PEven, Weighting::Weighted).is_err());
        let nan = [FitPoint { n: 3.0, value: f64::NAN, se: 0.01 }, FitPoint { n: 4.0, value: 0.8, se: 0.01 }];
        assert!(fit_epsilon(&nan, FitModel::PEven, Weighting::Weighted).is_err());
    }

    #[test]
    fn model_ordering_on_shared_data() {
        let pts: Vec<FitPoint> = (1..=7)
            .map(|k| {
                let n = (2 * k + 1) as f64;
                FitPoint { n: (n + 1.0) / 2.0, value: FitModel::PEven.eval((n + 1.0) / 2.0, 0.09), se: 0.004 }
            })
            .collect();
        let pe = fit_epsilon(&pts, FitModel::PEven, Weighting::Weighted).unwrap();
        let tr = fit_epsilon(&pts, FitModel::Trajectory, Weighting::Weighted).unwrap();
        assert!(tr.eps > pe.eps);
    }

    #[test]
    fn unweighted_mode_scales_by_residual() {
        let mut rng = shot_rng(5, 0);
        let pts: Vec<FitPoint> = (2..=12)
            .map(|n| FitPoint {
                n: n as f64,
                value: FitModel::PEven.eval(n as f64, 0.1) + 0.01 * (rng.random::<f64>() - 0.5),
                se: 0.01,
            })
            .collect();
        let r = fit_epsilon(&pts, FitModel::PEven, Weighting::Unweighted).unwrap();
        assert!(!r.weighted);
        assert!((r.eps - 0.1).abs() < 0.01);
        assert!(r.half_width > 0.0 && r.half_width.is_finite());
    }

    #[test]
    fn parse_fit_points() {
        let p = parse_points("# n value se\n2 0.9 0.01\n3 0.8 0.02\n").unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p[1], FitPoint { n: 3.0, value: 0.8, se: 0.02 });
        assert!(parse_points("2 0.9\n").is_err());
    }

    proptest! {
        #[test]
        fn jackknife_permutation_invariant(mut xs in proptest::collection::vec(0.0f64..1.0, 2..60), k in 0usize..1000) {
            let a = jackknife_se(&xs).unwrap();
            let n = xs.len();
            xs.rotate_left(k % n);
            xs.swap(0, n - 1);
            let b = jackknife_se(&xs).unwrap();
            prop_assert!((a.0 - b.0).abs() < 1e-12 && (a.1 - b.1).abs() < 1e-12);
        }

        #[test]
        fn fit_scale_invariant(eps in 0.02f64..0.3, scale in 0.1f64..10.0, seed in 0u64..100) {
            let mut rng = shot_rng(seed, 0);
            let pts: Vec<FitPoint> = (2..=10)
                .map(|n| FitPoint {
                    n: n as f64,
                    value: FitModel::PEven.eval(n as f64, eps) + 0.01 * (rng.random::<f64>() - 0.5),
                    se: 0.005 + 0.01 * rng.random::<f64>(),
                })
                .collect();
            let scaled: Vec<FitPoint> = pts.iter().map(|p| FitPoint { se: p.se * scale, ..*p }).collect();
            let a = fit_epsilon(&pts, FitModel::PEven, Weighting::Weighted).unwrap();
            let b = fit_epsilon(&scaled, FitModel::PEven, Weighting::Weighted).unwrap();
            prop_assert!((a.eps - b.eps).abs() < 1e-7);
        }

        #[test]
        fn exact_recovery_any_model(eps in 0.0f64..0.5, traj in proptest::bool::ANY) {
            let model = if traj { FitModel::Trajectory } else { FitModel::PEven };
            let pts = exact_points(model, eps, 1..=9);
            let r = fit_epsilon(&pts, model, Weighting::Weighted).unwrap();
            prop_assert!((r.eps - eps).abs() < 1e-4, "{} vs {}", r.eps, eps);
        }
    }
}
