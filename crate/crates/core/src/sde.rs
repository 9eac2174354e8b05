//! Ensemble Monte Carlo integrator for the c-number Langevin dynamics in the
//! quadrature surrogate representation.
//!
//! The complex noise force has a normal-ordered correlation matrix that is
//! not positive semidefinite as a classical complex process, so the mode is
//! evolved as two independent real Ornstein-Uhlenbeck processes `u ~ alpha_+`
//! and `v ~ alpha_-` whose branch diffusions `D_+- = 2 [kappa (M +- N) + eps]`
//! are provably nonnegative. Physical moments are reconstructed from
//! quadratic combinations only:
//!
//! `<alpha* alpha> = (<u^2> - <v^2>) / 4`, `<alpha^2> = (<u^2> + <v^2>) / 4`.
//!
//! State updates use the exact OU transition (no time-step bias in any
//! stationary moment); cavity and reservoir noise enter through separate
//! streams so that discrete output records `x_out = sqrt(kappa) x -
//! dW_R / (sqrt(kappa) dt)` can be formed per the input-output relation.
//! Same-time output moments are never read from these records directly (they
//! carry an `O(1/dt)` white-noise floor); the estimators module extrapolates
//! equal-time quantities from lags `>= dt` instead.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{derive, DpoParams, Regime};
use crate::rng::hash3;

/// Instantaneous surrogate pair.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SurrogateState {
    pub u: f64,
    pub v: f64,
}

/// Per-step Gaussian increments of the four independent noise streams,
/// with variances `D_C Δt` (cavity) and `D_R+- Δt` (reservoir).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseIncrements {
    pub dw_c_plus: f64,
    pub dw_c_minus: f64,
    pub dw_r_plus: f64,
    pub dw_r_minus: f64,
}

/// Branch diffusion coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diffusions {
    /// cavity part, `2 eps`, common to both branches
    pub d_cavity: f64,
    /// reservoir part of the plus branch, `2 kappa (M + N)`
    pub d_res_plus: f64,
    /// reservoir part of the minus branch, `2 kappa (M - N)`
    pub d_res_minus: f64,
}

impl Diffusions {
    pub fn total_plus(&self) -> f64 {
        self.d_cavity + self.d_res_plus
    }

    pub fn total_minus(&self) -> f64 {
        self.d_cavity + self.d_res_minus
    }
}

/// Diffusions from the noise-force correlations. Nonnegative for every
/// `r >= 0`, `eps >= 0` since `M >= N`.
pub fn diffusions(params: &DpoParams) -> Diffusions {
    let (res, _) = derive(params);
    Diffusions {
        d_cavity: 2.0 * params.epsilon,
        d_res_plus: 2.0 * params.kappa * res.m_plus_n(),
        d_res_minus: 2.0 * params.kappa * res.m_minus_n(),
    }
}

/// Exact Ornstein-Uhlenbeck transition over one step:
/// `x' = x e^{-lambda dt / 2} + xi sqrt((D / lambda)(1 - e^{-lambda dt}))`,
/// degenerating to pure diffusion `x + xi sqrt(D dt)` at `lambda = 0`.
///
/// This is the exact distributional update of the branch dynamics, so
/// stationary-moment checks carry statistical error only.
pub fn exact_ou_step(x: f64, lambda: f64, d: f64, dt: f64, xi: f64) -> Result<f64> {
    let (decay, amp) = ou_decay_amp(lambda, d, dt)?;
    Ok(x * decay + xi * amp)
}

/// Decay factor and noise amplitude of the exact OU transition.
pub fn ou_decay_amp(lambda: f64, d: f64, dt: f64) -> Result<(f64, f64)> {
    if d < 0.0 {
        return Err(Error::NegativeDiffusion(d));
    }
    if lambda == 0.0 {
        return Ok((1.0, (d * dt).sqrt()));
    }
    let decay = (-lambda * dt / 2.0).exp();
    let var = d / lambda * (1.0 - (-lambda * dt).exp());
    Ok((decay, var.sqrt()))
}

/// Ensemble configuration. `t_end = n_steps * dt`.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub n_traj: usize,
    pub dt: f64,
    pub n_steps: usize,
    pub seed: u64,
    /// Above-threshold runs have no steady state; they are refused unless
    /// the caller confirms a transient window covering the full duration.
    pub transient_window: Option<f64>,
}

impl SimConfig {
    pub fn new(n_traj: usize, dt: f64, t_end: f64, seed: u64) -> Self {
        Self {
            n_traj,
            dt,
            n_steps: (t_end / dt).ceil() as usize,
            seed,
            transient_window: None,
        }
    }

    pub fn t_end(&self) -> f64 {
        self.n_steps as f64 * self.dt
    }
}

/// One trajectory: states at `t_k = k dt` for `k = 0..=n_steps` and the
/// reservoir increments over `[t_k, t_k + dt)` for `k = 0..n_steps`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub dw_r_plus: Vec<f64>,
    pub dw_r_minus: Vec<f64>,
}

/// Seeded collection of surrogate sample paths plus reservoir-noise records.
/// Bit-reproducible given `(seed, n_traj, dt, n_steps, params)`.
#[derive(Debug, Clone)]
pub struct TrajectoryEnsemble {
    pub n_traj: usize,
    pub dt: f64,
    pub n_steps: usize,
    pub seed: u64,
    pub records: Vec<TrajectoryRecord>,
}

#[inline]
fn stream_normal_pair(seed: u64, traj: u64, counter: u64) -> (f64, f64) {
    let w1 = hash3(seed, traj, counter);
    let w2 = hash3(seed, traj, counter + 1);
    let u1 = (((w1 >> 11) + 1) as f64) * (1.0 / 9_007_199_254_740_992.0);
    let u2 = (((w2 >> 11) + 1) as f64) * (1.0 / 9_007_199_254_740_992.0);
    let mag = (-2.0 * u1.ln()).sqrt();
    let ang = 2.0 * std::f64::consts::PI * u2;
    (mag * ang.cos(), mag * ang.sin())
}

fn check_regime(params: &DpoParams, cfg: &SimConfig) -> Result<()> {
    if params.regime() == Regime::AboveThreshold {
        match cfg.transient_window {
            Some(window) if window >= cfg.t_end() => Ok(()),
            _ => Err(Error::AboveThreshold { t_end: cfg.t_end() }),
        }
    } else {
        Ok(())
    }
}

/// Simulates a single trajectory. Vacuum initial condition: all normally
/// ordered c-number moments vanish, hence a deterministic zero start.
///
/// The same standard-normal draws feed the state update (through the exact
/// OU amplitude) and the recorded plain increments (through `sqrt(D dt)`),
/// keeping record and state consistently coupled within each step.
pub fn simulate_trajectory(
    params: &DpoParams,
    cfg: &SimConfig,
    traj_idx: usize,
) -> Result<TrajectoryRecord> {
    check_regime(params, cfg)?;
    let (_, rates) = derive(params);
    let dif = diffusions(params);
    let dt = cfg.dt;
    let (decay_p, amp_c_p) = ou_decay_amp(rates.lambda_plus, dif.d_cavity, dt)?;
    let (_, amp_r_p) = ou_decay_amp(rates.lambda_plus, dif.d_res_plus, dt)?;
    let (decay_m, amp_c_m) = ou_decay_amp(rates.lambda_minus, dif.d_cavity, dt)?;
    let (_, amp_r_m) = ou_decay_amp(rates.lambda_minus, dif.d_res_minus, dt)?;
    let s_r_plus = (dif.d_res_plus * dt).sqrt();
    let s_r_minus = (dif.d_res_minus * dt).sqrt();

    let n = cfg.n_steps;
    let mut u = Vec::with_capacity(n + 1);
    let mut v = Vec::with_capacity(n + 1);
    let mut dw_r_plus = Vec::with_capacity(n);
    let mut dw_r_minus = Vec::with_capacity(n);
    let (mut cu, mut cv) = (0.0f64, 0.0f64);
    u.push(cu);
    v.push(cv);
    let traj = traj_idx as u64;
    for k in 0..n as u64 {
        let (xi_c_p, xi_r_p) = stream_normal_pair(cfg.seed, traj, 4 * k);
        let (xi_c_m, xi_r_m) = stream_normal_pair(cfg.seed, traj, 4 * k + 2);
        dw_r_plus.push(xi_r_p * s_r_plus);
        dw_r_minus.push(xi_r_m * s_r_minus);
        cu = cu * decay_p + xi_c_p * amp_c_p + xi_r_p * amp_r_p;
        cv = cv * decay_m + xi_c_m * amp_c_m + xi_r_m * amp_r_m;
        u.push(cu);
        v.push(cv);
    }
    Ok(TrajectoryRecord {
        u,
        v,
        dw_r_plus,
        dw_r_minus,
    })
}

/// Full materialized ensemble. Trajectories are generated in parallel;
/// record content is independent of scheduling because every draw is a pure
/// function of `(seed, trajectory, step)`.
pub fn simulate_ensemble(params: &DpoParams, cfg: &SimConfig) -> Result<TrajectoryEnsemble> {
    check_regime(params, cfg)?;
    let records: Result<Vec<TrajectoryRecord>> = (0..cfg.n_traj)
        .into_par_iter()
        .map(|idx| simulate_trajectory(params, cfg, idx))
        .collect();
    Ok(TrajectoryEnsemble {
        n_traj: cfg.n_traj,
        dt: cfg.dt,
        n_steps: cfg.n_steps,
        seed: cfg.seed,
        records: records?,
    })
}

/// Streams trajectories through `f` without keeping them, returning the
/// per-trajectory results in trajectory order (a deterministic reduction
/// regardless of thread scheduling).
pub fn map_trajectories<T, F>(params: &DpoParams, cfg: &SimConfig, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &TrajectoryRecord) -> T + Sync,
{
    check_regime(params, cfg)?;
    (0..cfg.n_traj)
        .into_par_iter()
        .map(|idx| {
            let rec = simulate_trajectory(params, cfg, idx)?;
            Ok(f(idx, &rec))
        })
        .collect()
}

/// Discrete output record of one trajectory per the input-output relation,
/// with the white-noise term represented as increment-per-step density:
/// `x_out,k = sqrt(kappa) x_k - dW_R,k / (sqrt(kappa) dt)` for
/// `k = 0..n_steps`.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputRecord {
    pub u_out: Vec<f64>,
    pub v_out: Vec<f64>,
}

pub fn output_record(rec: &TrajectoryRecord, params: &DpoParams, dt: f64) -> OutputRecord {
    let sk = params.kappa.sqrt();
    let w = 1.0 / (sk * dt);
    let n = rec.dw_r_plus.len();
    let u_out = (0..n).map(|k| sk * rec.u[k] - w * rec.dw_r_plus[k]).collect();
    let v_out = (0..n).map(|k| sk * rec.v[k] - w * rec.dw_r_minus[k]).collect();
    OutputRecord { u_out, v_out }
}

/// Output records for every trajectory of an ensemble.
pub fn output_records(ensemble: &TrajectoryEnsemble, params: &DpoParams) -> Vec<OutputRecord> {
    ensemble
        .records
        .iter()
        .map(|rec| output_record(rec, params, ensemble.dt))
        .collect()
}
