//! Turns trajectory ensembles into lagged correlations, spectra, and
//! equal-time output moments comparable with the analytic module.
//!
//! Correlations are time-and-ensemble averages with jackknife standard
//! errors over trajectories (trajectories are i.i.d., making delete-one
//! resampling the simplest valid scheme). Spectra come from a direct
//! lag-sum Fourier integral rather than an FFT periodogram: the white-noise
//! floor and the `[0, dt)` gap of output records are handled explicitly.

use crate::analytic::{SpectrumCurve, SpectrumKind, SteadyMoments};
use crate::error::{Error, Result};
use crate::model::{derive, DpoParams};
use crate::sde::{self, output_record, SimConfig, TrajectoryEnsemble, TrajectoryRecord};

/// Which series a correlation refers to. Output kinds exclude lag 0, where
/// the white-noise floor of the records lives; cavity kinds include it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrKind {
    CavityQuadPlus,
    CavityQuadMinus,
    OutputQuadPlus,
    OutputQuadMinus,
    CavityPower,
    OutputPower,
}

impl CorrKind {
    fn is_output(self) -> bool {
        matches!(
            self,
            CorrKind::OutputQuadPlus | CorrKind::OutputQuadMinus | CorrKind::OutputPower
        )
    }

    fn name(self) -> &'static str {
        match self {
            CorrKind::CavityQuadPlus => "cavity-quadrature-plus",
            CorrKind::CavityQuadMinus => "cavity-quadrature-minus",
            CorrKind::OutputQuadPlus => "output-quadrature-plus",
            CorrKind::OutputQuadMinus => "output-quadrature-minus",
            CorrKind::CavityPower => "cavity-power",
            CorrKind::OutputPower => "output-power",
        }
    }

    /// Base series feeding the estimate; power kinds combine two.
    fn bases(self) -> &'static [Base] {
        match self {
            CorrKind::CavityQuadPlus => &[Base::U],
            CorrKind::CavityQuadMinus => &[Base::V],
            CorrKind::OutputQuadPlus => &[Base::UOut],
            CorrKind::OutputQuadMinus => &[Base::VOut],
            CorrKind::CavityPower => &[Base::U, Base::V],
            CorrKind::OutputPower => &[Base::UOut, Base::VOut],
        }
    }
}

impl std::fmt::Display for CorrKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Base {
    U,
    V,
    UOut,
    VOut,
}

/// A lagged autocorrelation with per-lag standard errors. `per_traj` keeps
/// the raw per-trajectory lag means so that derived quantities (spectrum
/// points, extrapolated intercepts) can be jackknifed through the full
/// pipeline.
#[derive(Debug, Clone)]
pub struct CorrelationEstimate {
    pub lags: Vec<f64>,
    pub values: Vec<f64>,
    pub std_errs: Vec<f64>,
    pub kind: CorrKind,
    pub n_traj: usize,
    pub per_traj: Option<Vec<Vec<f64>>>,
}

/// Four-accumulator dot product (keeps the hot loop vectorizable).
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (mut s0, mut s1, mut s2, mut s3) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let chunks = n / 4;
    for c in 0..chunks {
        let i = 4 * c;
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    for i in 4 * chunks..n {
        s0 += a[i] * b[i];
    }
    (s0 + s1) + (s2 + s3)
}

/// Raw per-trajectory lag means of one series over `[w0, last]`:
/// `m_j = mean_t x[t] x[t - j]` for `j = j0..=l_max`.
fn traj_lag_means(x: &[f64], w0: usize, j0: usize, l_max: usize) -> Vec<f64> {
    let last = x.len();
    (j0..=l_max)
        .map(|j| {
            let count = last - w0 - j;
            dot(&x[w0 + j..], &x[w0..last - j]) / count as f64
        })
        .collect()
}

fn window_mean(x: &[f64], w0: usize) -> f64 {
    let w = &x[w0..];
    w.iter().sum::<f64>() / w.len() as f64
}

fn mean_and_se(per_traj: &[f64]) -> (f64, f64) {
    let n = per_traj.len() as f64;
    let mean = per_traj.iter().sum::<f64>() / n;
    let var = per_traj.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// One correlation request inside a streaming plan.
#[derive(Debug, Clone)]
pub struct CorrRequest {
    pub kind: CorrKind,
    pub max_lag: f64,
}

/// What to accumulate in a single streaming pass over the ensemble.
#[derive(Debug, Clone, Default)]
pub struct StreamPlan {
    /// Transient discard: statistics start at this time.
    pub window_start: f64,
    pub requests: Vec<CorrRequest>,
    /// Also estimate the equal-time cavity moments from windowed `u^2`, `v^2`.
    pub cavity_moments: bool,
}

/// Equal-time cavity moments reconstructed from the surrogate identities,
/// with jackknife standard errors over trajectories.
#[derive(Debug, Clone, Copy)]
pub struct CavityMomentsEstimate {
    pub mean_photon: f64,
    pub mean_stderr: f64,
    pub anomalous: f64,
    pub anom_stderr: f64,
}

#[derive(Debug)]
pub struct StreamAnalysis {
    pub correlations: Vec<CorrelationEstimate>,
    pub cavity_moments: Option<CavityMomentsEstimate>,
}

struct Layout {
    w0: usize,
    j0: usize,
    l_max: usize,
}

fn layout_for(kind: CorrKind, max_lag: f64, window_start: f64, dt: f64, n_steps: usize) -> Result<Layout> {
    let w0 = (window_start / dt - 1e-9).ceil().max(0.0) as usize;
    let j0 = usize::from(kind.is_output());
    let l_max = (max_lag / dt + 1e-9).floor() as usize;
    // cavity series have n_steps + 1 samples, output records n_steps
    let len = n_steps + 1 - usize::from(kind.is_output());
    let avail = len.saturating_sub(w0 + 1);
    if l_max + 1 > avail || l_max < j0 {
        return Err(Error::WindowTooShort {
            window_steps: avail,
            lag_steps: l_max,
        });
    }
    Ok(Layout { w0, j0, l_max })
}

struct TrajPartial {
    corr: Vec<Vec<f64>>,
    base_means: [f64; 4],
    u2: f64,
    v2: f64,
}

fn analyze_record(
    rec: &TrajectoryRecord,
    params: &DpoParams,
    dt: f64,
    plan: &StreamPlan,
    layouts: &[Layout],
) -> TrajPartial {
    let needs_output = plan.requests.iter().any(|r| r.kind.is_output());
    let out = needs_output.then(|| output_record(rec, params, dt));
    let series = |b: Base| -> &[f64] {
        match b {
            Base::U => &rec.u,
            Base::V => &rec.v,
            Base::UOut => &out.as_ref().unwrap().u_out,
            Base::VOut => &out.as_ref().unwrap().v_out,
        }
    };

    let mut base_means = [0.0f64; 4];
    let mut means_ready = [false; 4];
    let mut corr = Vec::with_capacity(plan.requests.len());
    for (req, lay) in plan.requests.iter().zip(layouts) {
        let bases = req.kind.bases();
        let mut vecs: Vec<Vec<f64>> = bases
            .iter()
            .map(|&b| traj_lag_means(series(b), lay.w0, lay.j0, lay.l_max))
            .collect();
        for &b in bases {
            let slot = b as usize;
            if !means_ready[slot] {
                base_means[slot] = window_mean(series(b), lay.w0);
                means_ready[slot] = true;
            }
        }
        let combined = if vecs.len() == 2 {
            let second = vecs.pop().unwrap();
            let first = vecs.pop().unwrap();
            first
                .iter()
                .zip(&second)
                .map(|(a, b)| 0.25 * (a - b))
                .collect()
        } else {
            vecs.pop().unwrap()
        };
        corr.push(combined);
    }

    let (mut u2, mut v2) = (0.0, 0.0);
    if plan.cavity_moments {
        let w0 = (plan.window_start / dt - 1e-9).ceil().max(0.0) as usize;
        u2 = dot(&rec.u[w0..], &rec.u[w0..]) / (rec.u.len() - w0) as f64;
        v2 = dot(&rec.v[w0..], &rec.v[w0..]) / (rec.v.len() - w0) as f64;
    }
    TrajPartial {
        corr,
        base_means,
        u2,
        v2,
    }
}

fn combine_partials(
    partials: Vec<TrajPartial>,
    plan: &StreamPlan,
    layouts: &[Layout],
    dt: f64,
) -> StreamAnalysis {
    let n_traj = partials.len();
    let mut correlations = Vec::with_capacity(plan.requests.len());
    // global series means over ensemble and window (near zero by symmetry)
    let mut global_means = [0.0f64; 4];
    for p in &partials {
        for s in 0..4 {
            global_means[s] += p.base_means[s];
        }
    }
    for g in &mut global_means {
        *g /= n_traj as f64;
    }

    for (ri, (req, lay)) in plan.requests.iter().zip(layouts).enumerate() {
        let n_lags = lay.l_max - lay.j0 + 1;
        let per_traj: Vec<Vec<f64>> = partials.iter().map(|p| p.corr[ri].clone()).collect();
        // zero-mean correction from the (near-zero) global sample mean
        let bases = req.kind.bases();
        let correction = if bases.len() == 2 {
            let a = global_means[bases[0] as usize];
            let b = global_means[bases[1] as usize];
            0.25 * (a * a - b * b)
        } else {
            let a = global_means[bases[0] as usize];
            a * a
        };
        let mut values = Vec::with_capacity(n_lags);
        let mut std_errs = Vec::with_capacity(n_lags);
        let mut column = vec![0.0f64; n_traj];
        for l in 0..n_lags {
            for (t, p) in column.iter_mut().zip(&per_traj) {
                *t = p[l];
            }
            let (mean, se) = mean_and_se(&column);
            values.push(mean - correction);
            std_errs.push(se);
        }
        correlations.push(CorrelationEstimate {
            lags: (lay.j0..=lay.l_max).map(|j| j as f64 * dt).collect(),
            values,
            std_errs,
            kind: req.kind,
            n_traj,
            per_traj: Some(per_traj),
        });
    }

    let cavity_moments = plan.cavity_moments.then(|| {
        let photon: Vec<f64> = partials.iter().map(|p| 0.25 * (p.u2 - p.v2)).collect();
        let anom: Vec<f64> = partials.iter().map(|p| 0.25 * (p.u2 + p.v2)).collect();
        let (mean_photon, mean_stderr) = mean_and_se(&photon);
        let (anomalous, anom_stderr) = mean_and_se(&anom);
        CavityMomentsEstimate {
            mean_photon,
            mean_stderr,
            anomalous,
            anom_stderr,
        }
    });

    StreamAnalysis {
        correlations,
        cavity_moments,
    }
}

/// Runs the ensemble and accumulates everything in `plan` in one streaming
/// pass: trajectories are simulated, analyzed, and dropped in parallel, and
/// the per-trajectory results are reduced in fixed (index) order.
pub fn analyze_streaming(
    params: &DpoParams,
    cfg: &SimConfig,
    plan: &StreamPlan,
) -> Result<StreamAnalysis> {
    let layouts: Vec<Layout> = plan
        .requests
        .iter()
        .map(|r| layout_for(r.kind, r.max_lag, plan.window_start, cfg.dt, cfg.n_steps))
        .collect::<Result<_>>()?;
    let partials = sde::map_trajectories(params, cfg, |_, rec| {
        analyze_record(rec, params, cfg.dt, plan, &layouts)
    })?;
    Ok(combine_partials(partials, plan, &layouts, cfg.dt))
}

/// Time-and-ensemble averaged lagged autocorrelation of one series of a
/// materialized ensemble, with jackknife standard errors; the sample mean
/// over the stationarity window is subtracted.
pub fn lagged_autocorrelation(
    ensemble: &TrajectoryEnsemble,
    params: &DpoParams,
    kind: CorrKind,
    max_lag: f64,
    window_start: f64,
) -> Result<CorrelationEstimate> {
    let plan = StreamPlan {
        window_start,
        requests: vec![CorrRequest { kind, max_lag }],
        cavity_moments: false,
    };
    let layouts = vec![layout_for(
        kind,
        max_lag,
        window_start,
        ensemble.dt,
        ensemble.n_steps,
    )?];
    let partials: Vec<TrajPartial> = ensemble
        .records
        .iter()
        .map(|rec| analyze_record(rec, params, ensemble.dt, &plan, &layouts))
        .collect();
    let mut analysis = combine_partials(partials, &plan, &layouts, ensemble.dt);
    Ok(analysis.correlations.pop().unwrap())
}

/// Exponential fit `C(tau) ~ C0 e^{-gamma tau}` over the early, positive part
/// of a correlation.
#[derive(Debug, Clone, Copy)]
struct ExpFit {
    intercept: f64,
    rate: f64,
    r_squared: f64,
}

fn fit_exponential(lags: &[f64], values: &[f64]) -> Option<ExpFit> {
    let head = values.first().copied()?;
    if head <= 0.0 {
        return None;
    }
    let cutoff = head * (-2.5f64).exp();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&tau, &v) in lags.iter().zip(values) {
        if v <= 0.0 || v < cutoff {
            break;
        }
        xs.push(tau);
        ys.push(v.ln());
    }
    if xs.len() < 5 {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let p = intercept + slope * x;
            (y - p) * (y - p)
        })
        .sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Some(ExpFit {
        intercept: intercept.exp(),
        rate: -slope,
        r_squared,
    })
}

/// `int_0^t0 C0 e^{-gamma tau} cos(omega tau) d tau` in closed form.
fn head_integral(c0: f64, gamma: f64, omega: f64, t0: f64) -> f64 {
    let g = num_complex::Complex64::new(gamma, -omega);
    let val = (num_complex::Complex64::new(1.0, 0.0) - (-g * t0).exp()) / g;
    c0 * val.re
}

fn spectrum_kind_of(corr: CorrKind) -> Result<(SpectrumKind, f64)> {
    match corr {
        CorrKind::OutputQuadPlus => Ok((SpectrumKind::SqueezingPlus, 1.0)),
        CorrKind::OutputQuadMinus => Ok((SpectrumKind::SqueezingMinus, -1.0)),
        CorrKind::CavityPower => Ok((SpectrumKind::PowerCavity, 1.0)),
        CorrKind::OutputPower => Ok((SpectrumKind::PowerOutput, 1.0)),
        other => Err(Error::UnsupportedKind(other.name())),
    }
}

fn check_decayed(corr: &CorrelationEstimate) -> Result<()> {
    let last_v = *corr.values.last().unwrap();
    let last_se = *corr.std_errs.last().unwrap();
    let all_zero = corr.values.iter().all(|&v| v == 0.0);
    if !all_zero && last_v.abs() >= 2.0 * last_se {
        return Err(Error::UndecayedCorrelation {
            max_lag: *corr.lags.last().unwrap(),
            value: last_v,
            two_se: 2.0 * last_se,
        });
    }
    Ok(())
}

fn spectrum_value_from(values: &[f64], lags: &[f64], omega: f64, dt: f64, sign: f64, floor: f64) -> f64 {
    // trapezoid over the sampled lags
    let mut acc = 0.0;
    for (i, (&tau, &v)) in lags.iter().zip(values).enumerate() {
        let w = if i == 0 || i == lags.len() - 1 { 0.5 } else { 1.0 };
        acc += w * v * (omega * tau).cos();
    }
    let mut integral = acc * dt;
    // analytic continuation over the [0, dt) gap of output records
    if lags[0] > 0.0 {
        integral += match fit_exponential(lags, values) {
            Some(fit) => head_integral(fit.intercept, fit.rate, omega, lags[0]),
            // noise-dominated correlation: rectangle on the first sample
            None => values[0] * lags[0],
        };
    }
    floor + sign * 2.0 * integral
}

/// Fourier-integrates a decayed correlation into a spectrum, adding the
/// analytically known flat floor (`e^{+-2r}` for output quadrature kinds,
/// `N` for the output power, 0 for the cavity power).
pub fn spectrum_from_correlation(
    corr: &CorrelationEstimate,
    omegas: &[f64],
    analytic_floor: f64,
) -> Result<SpectrumCurve> {
    let (kind, sign) = spectrum_kind_of(corr.kind)?;
    check_decayed(corr)?;
    let dt = if corr.lags.len() >= 2 {
        corr.lags[1] - corr.lags[0]
    } else {
        corr.lags[0]
    };
    let values = omegas
        .iter()
        .map(|&w| spectrum_value_from(&corr.values, &corr.lags, w, dt, sign, analytic_floor))
        .collect();
    Ok(SpectrumCurve {
        omegas: omegas.to_vec(),
        values,
        floor: analytic_floor,
        kind,
    })
}

/// Spectrum estimate at a single frequency with a jackknife standard error
/// propagated through the whole pipeline (fit, gap continuation, lag sum).
pub fn spectrum_point_stderr(
    corr: &CorrelationEstimate,
    omega: f64,
    analytic_floor: f64,
) -> Result<(f64, f64)> {
    let (_, sign) = spectrum_kind_of(corr.kind)?;
    check_decayed(corr)?;
    let per_traj = corr.per_traj.as_ref().ok_or_else(|| {
        Error::InvalidParams("per-trajectory correlation data required for a stderr".into())
    })?;
    let dt = if corr.lags.len() >= 2 {
        corr.lags[1] - corr.lags[0]
    } else {
        corr.lags[0]
    };
    let value = spectrum_value_from(&corr.values, &corr.lags, omega, dt, sign, analytic_floor);

    let n = per_traj.len();
    let n_lags = corr.values.len();
    // column sums once, then leave-one-out means
    let mut sums = vec![0.0f64; n_lags];
    for row in per_traj {
        for (s, v) in sums.iter_mut().zip(row) {
            *s += v;
        }
    }
    let mut loo = vec![0.0f64; n_lags];
    let mut jack = Vec::with_capacity(n);
    for row in per_traj {
        for ((l, s), v) in loo.iter_mut().zip(&sums).zip(row) {
            *l = (s - v) / (n - 1) as f64;
        }
        jack.push(spectrum_value_from(&loo, &corr.lags, omega, dt, sign, analytic_floor));
    }
    let jbar = jack.iter().sum::<f64>() / n as f64;
    let se = ((n - 1) as f64 / n as f64
        * jack.iter().map(|x| (x - jbar) * (x - jbar)).sum::<f64>())
    .sqrt();
    Ok((value, se))
}

/// Extrapolated equal-time output moments with fit diagnostics and
/// jackknife standard errors.
#[derive(Debug, Clone, Copy)]
pub struct OutputMomentsEstimate {
    pub moments: SteadyMoments,
    pub mean_stderr: f64,
    pub anom_stderr: f64,
    pub r_squared_plus: f64,
    pub r_squared_minus: f64,
}

fn intercept_of(lags: &[f64], values: &[f64]) -> Result<(f64, f64)> {
    if values.iter().all(|&v| v == 0.0) {
        return Ok((0.0, 1.0));
    }
    let fit = fit_exponential(lags, values).ok_or(Error::PoorFit { r_squared: 0.0 })?;
    if fit.r_squared < 0.99 {
        return Err(Error::PoorFit {
            r_squared: fit.r_squared,
        });
    }
    Ok((fit.intercept, fit.r_squared))
}

/// Extrapolates the continuous parts of the two output quadrature
/// correlations to `tau = 0` and adds the delta-term contributions (`N`, `M`)
/// known analytically, returning the estimated output moments.
pub fn equal_time_output_moments(
    plus: &CorrelationEstimate,
    minus: &CorrelationEstimate,
    params: &DpoParams,
) -> Result<OutputMomentsEstimate> {
    if plus.kind != CorrKind::OutputQuadPlus || minus.kind != CorrKind::OutputQuadMinus {
        return Err(Error::InvalidParams(
            "equal-time extrapolation needs the output quadrature correlations".into(),
        ));
    }
    let (res, _) = derive(params);
    let (cu0, r2_plus) = intercept_of(&plus.lags, &plus.values)?;
    let (cv0, r2_minus) = intercept_of(&minus.lags, &minus.values)?;
    let moments = SteadyMoments {
        mean_photon: 0.25 * (cu0 - cv0) + res.n_res,
        anomalous: 0.25 * (cu0 + cv0) + res.m_res,
        field_label: crate::analytic::FieldLabel::Output,
    };

    // jackknife through both fits
    let (mean_stderr, anom_stderr) = match (&plus.per_traj, &minus.per_traj) {
        (Some(pu), Some(pv)) if pu.len() == pv.len() => {
            let n = pu.len();
            let loo_intercepts = |per: &Vec<Vec<f64>>, lags: &[f64]| -> Vec<f64> {
                let n_lags = lags.len();
                let mut sums = vec![0.0f64; n_lags];
                for row in per {
                    for (s, v) in sums.iter_mut().zip(row) {
                        *s += v;
                    }
                }
                let mut out = Vec::with_capacity(n);
                let mut loo = vec![0.0f64; n_lags];
                for row in per {
                    for ((l, s), v) in loo.iter_mut().zip(&sums).zip(row) {
                        *l = (s - v) / (n - 1) as f64;
                    }
                    let c0 = if loo.iter().all(|&v| v == 0.0) {
                        0.0
                    } else {
                        fit_exponential(lags, &loo).map(|f| f.intercept).unwrap_or(0.0)
                    };
                    out.push(c0);
                }
                out
            };
            let ju = loo_intercepts(pu, &plus.lags);
            let jv = loo_intercepts(pv, &minus.lags);
            let jn: Vec<f64> = ju.iter().zip(&jv).map(|(a, b)| 0.25 * (a - b)).collect();
            let jm: Vec<f64> = ju.iter().zip(&jv).map(|(a, b)| 0.25 * (a + b)).collect();
            let jse = |xs: &[f64]| {
                let m = xs.iter().sum::<f64>() / n as f64;
                ((n - 1) as f64 / n as f64
                    * xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>())
                .sqrt()
            };
            (jse(&jn), jse(&jm))
        }
        _ => (f64::NAN, f64::NAN),
    };

    Ok(OutputMomentsEstimate {
        moments,
        mean_stderr,
        anom_stderr,
        r_squared_plus: r2_plus,
        r_squared_minus: r2_minus,
    })
}
