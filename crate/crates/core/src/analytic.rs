//! Closed-form steady-state moments, quadrature variances, two-time
//! correlations, and spectra for the cavity and output fields.
//!
//! Everything here is a pure function of [`DpoParams`]; curves are safe to
//! evaluate data-parallel over frequency grids. Divergent quantities at the
//! critical point are reported either as errors or as an explicit infinity
//! sentinel, never as a silent floating-point overflow from `1/0`.

use crate::error::{Error, Result};
use crate::model::{derive, DpoParams, Regime};

/// Which field a steady-state quantity refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldLabel {
    Cavity,
    Output,
}

impl std::fmt::Display for FieldLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FieldLabel::Cavity => write!(f, "cavity"),
            FieldLabel::Output => write!(f, "output"),
        }
    }
}

/// Quadrature branch selector: `plus` is the amplified quadrature
/// (decay rate `lambda_plus`), `minus` the squeezed one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadratureSign {
    Plus,
    Minus,
}

/// Second-order steady-state moments of a field: the mean photon number
/// and the (real) anomalous moment `<alpha^2>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyMoments {
    pub mean_photon: f64,
    pub anomalous: f64,
    pub field_label: FieldLabel,
}

/// Variances of the two quadratures of a field. `var_minus < 1` indicates
/// squeezing; `var_plus` is `f64::INFINITY` (an explicit sentinel) at the
/// critical point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureVariances {
    pub var_plus: f64,
    pub var_minus: f64,
    pub field_label: FieldLabel,
}

/// Which closed form of the output power spectrum to evaluate.
///
/// The printed expression and the one obtained by transforming the two-time
/// correlation term by term disagree in the sign of the `1` in the narrow-
/// Lorentzian companion numerator (`1 - 2N + 2M` vs `2M - 2N - 1`). Only the
/// derived form satisfies the output photon-number sum rule, so it is the
/// default; the printed form is kept for faithfulness and for documenting
/// the discrepancy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PowerVariant {
    AsPrinted,
    #[default]
    DerivedConsistent,
}

impl std::fmt::Display for PowerVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PowerVariant::AsPrinted => write!(f, "printed"),
            PowerVariant::DerivedConsistent => write!(f, "derived"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumKind {
    SqueezingPlus,
    SqueezingMinus,
    PowerCavity,
    PowerOutput,
}

impl std::fmt::Display for SpectrumKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SpectrumKind::SqueezingPlus => write!(f, "squeezing-plus"),
            SpectrumKind::SqueezingMinus => write!(f, "squeezing-minus"),
            SpectrumKind::PowerCavity => write!(f, "power-cavity"),
            SpectrumKind::PowerOutput => write!(f, "power-output"),
        }
    }
}

/// A sampled spectrum over a frequency grid. `values` holds the full
/// spectrum including the flat part; `floor` records the frequency-
/// independent additive contribution separately (0 when there is none).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumCurve {
    pub omegas: Vec<f64>,
    pub values: Vec<f64>,
    pub floor: f64,
    pub kind: SpectrumKind,
}

/// A single Lorentzian component `amplitude / (lambda^2 + 4 omega^2)`.
/// Its half-width at half maximum in `omega` is `lambda / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lorentzian {
    pub amplitude: f64,
    pub lambda: f64,
}

impl Lorentzian {
    pub fn eval(&self, omega: f64) -> f64 {
        self.amplitude / (self.lambda * self.lambda + 4.0 * omega * omega)
    }

    /// `(1/2pi) * integral over omega` of the component, from the closed
    /// antiderivative `int d omega / (a^2 + 4 omega^2) = pi / (2a)`.
    pub fn integral_over_2pi(&self) -> f64 {
        self.amplitude / (4.0 * self.lambda)
    }
}

/// Default CLI frequency grid: 801 uniform points on `[-2, 2]`.
pub fn default_omega_grid() -> Vec<f64> {
    uniform_grid(-2.0, 2.0, 801)
}

pub fn uniform_grid(min: f64, max: f64, count: usize) -> Vec<f64> {
    assert!(count >= 2, "grid needs at least two points");
    let step = (max - min) / (count - 1) as f64;
    (0..count).map(|i| min + step * i as f64).collect()
}

fn require_below_threshold(params: &DpoParams, quantity: &'static str) -> Result<()> {
    match params.regime() {
        Regime::BelowThreshold => Ok(()),
        _ => Err(Error::Divergence {
            quantity,
            kappa: params.kappa,
            epsilon: params.epsilon,
        }),
    }
}

/// Steady-state intracavity moments.
///
/// `mean_photon = [2 eps^2 + kappa (N kappa + 2 eps M)] / (kappa^2 - 4 eps^2)`
/// and `anomalous = kappa (2 eps N + eps + kappa M) / (kappa^2 - 4 eps^2)`,
/// the stationary solution of the second-order moment equations.
pub fn cavity_moments_ss(params: &DpoParams) -> Result<SteadyMoments> {
    require_below_threshold(params, "cavity steady-state moments")?;
    let (res, _) = derive(params);
    let (k, e) = (params.kappa, params.epsilon);
    let det = k * k - 4.0 * e * e;
    Ok(SteadyMoments {
        mean_photon: (2.0 * e * e + k * (res.n_res * k + 2.0 * e * res.m_res)) / det,
        anomalous: k * (2.0 * e * res.n_res + e + k * res.m_res) / det,
        field_label: FieldLabel::Cavity,
    })
}

/// Steady-state moments of the output radiation.
///
/// Equal to `kappa * <cavity> + (1 - kappa) * (N or M)` by the input-output
/// relation; evaluated here in the expanded closed form.
pub fn output_moments_ss(params: &DpoParams) -> Result<SteadyMoments> {
    require_below_threshold(params, "output steady-state moments")?;
    let (res, _) = derive(params);
    let (k, e) = (params.kappa, params.epsilon);
    let det = k * k - 4.0 * e * e;
    let mean_photon = res.n_res
        + 2.0 * k * e * e / det
        + 2.0 * e * k * (2.0 * res.n_res * e + k * res.m_res) / det;
    let anomalous = res.m_res
        + k * k * e / det
        + 2.0 * k * e * (k * res.n_res + 2.0 * e * res.m_res) / det;
    Ok(SteadyMoments {
        mean_photon,
        anomalous,
        field_label: FieldLabel::Output,
    })
}

/// Steady-state moments for either field.
pub fn moments_ss(params: &DpoParams, field: FieldLabel) -> Result<SteadyMoments> {
    match field {
        FieldLabel::Cavity => cavity_moments_ss(params),
        FieldLabel::Output => output_moments_ss(params),
    }
}

/// Quadrature variances at steady state.
///
/// Output: `e^{+-2r} [1 +- 2 eps kappa / (kappa -+ 2 eps)]`;
/// cavity: `e^{+-2r} kappa / (kappa -+ 2 eps)`.
///
/// At the critical point `var_plus` diverges and is reported as the
/// `f64::INFINITY` sentinel while `var_minus` takes its finite limit.
/// Above threshold both diverge and an error is returned.
pub fn quadrature_variances(params: &DpoParams, field: FieldLabel) -> Result<QuadratureVariances> {
    if params.regime() == Regime::AboveThreshold {
        return Err(Error::Divergence {
            quantity: "quadrature variances",
            kappa: params.kappa,
            epsilon: params.epsilon,
        });
    }
    let (k, e, r) = (params.kappa, params.epsilon, params.r);
    let var_minus = match field {
        FieldLabel::Output => (-2.0 * r).exp() * (1.0 - 2.0 * e * k / (k + 2.0 * e)),
        FieldLabel::Cavity => (-2.0 * r).exp() * k / (k + 2.0 * e),
    };
    let var_plus = match params.regime() {
        Regime::Critical => f64::INFINITY,
        _ => match field {
            FieldLabel::Output => (2.0 * r).exp() * (1.0 + 2.0 * e * k / (k - 2.0 * e)),
            FieldLabel::Cavity => (2.0 * r).exp() * k / (k - 2.0 * e),
        },
    };
    Ok(QuadratureVariances {
        var_plus,
        var_minus,
        field_label: field,
    })
}

/// Critical-point limit of the squeezed output quadrature variance,
/// `e^{-2r} (1 - kappa / 2)`.
pub fn output_var_minus_critical(kappa: f64, r: f64) -> f64 {
    (-2.0 * r).exp() * (1.0 - 0.5 * kappa)
}

/// Critical-point limit of the squeezed cavity quadrature variance,
/// `e^{-2r} / 2` (50% squeezing for a vacuum reservoir).
pub fn cavity_var_minus_critical(r: f64) -> f64 {
    0.5 * (-2.0 * r).exp()
}

/// Output squeezing spectrum `S_out_+-(omega) = e^{+-2r} [1 +- 8 eps kappa /
/// ((kappa -+ 2 eps)^2 + 4 omega^2)]`, with flat floor `e^{+-2r}`.
///
/// Valid below and at threshold. In the plus branch at the critical point the
/// expression diverges at `omega = 0` only; that sample is set to the
/// infinity sentinel.
pub fn squeezing_spectrum_out(
    params: &DpoParams,
    omegas: &[f64],
    sign: QuadratureSign,
) -> Result<SpectrumCurve> {
    if params.regime() == Regime::AboveThreshold {
        return Err(Error::Divergence {
            quantity: "output squeezing spectrum",
            kappa: params.kappa,
            epsilon: params.epsilon,
        });
    }
    let (_, rates) = derive(params);
    let (k, e, r) = (params.kappa, params.epsilon, params.r);
    let critical = params.regime() == Regime::Critical;
    let (floor, lambda, s) = match sign {
        QuadratureSign::Plus => ((2.0 * r).exp(), rates.lambda_plus, 1.0),
        QuadratureSign::Minus => ((-2.0 * r).exp(), rates.lambda_minus, -1.0),
    };
    let values = omegas
        .iter()
        .map(|&w| {
            if critical && sign == QuadratureSign::Plus && w == 0.0 {
                f64::INFINITY
            } else {
                floor * (1.0 + s * 8.0 * e * k / (lambda * lambda + 4.0 * w * w))
            }
        })
        .collect();
    Ok(SpectrumCurve {
        omegas: omegas.to_vec(),
        values,
        floor,
        kind: match sign {
            QuadratureSign::Plus => SpectrumKind::SqueezingPlus,
            QuadratureSign::Minus => SpectrumKind::SqueezingMinus,
        },
    })
}

/// Two-time quadrature correlation of the cavity field,
/// `<alpha_+-(t + tau) alpha_+-(t)>_ss = 2 [kappa (M +- N) + eps] /
/// (kappa -+ 2 eps) * e^{-lambda_+- tau / 2}`.
pub fn two_time_quadrature_corr(params: &DpoParams, tau: f64, sign: QuadratureSign) -> Result<f64> {
    if tau < 0.0 {
        return Err(Error::InvalidParams(format!("tau must be >= 0, got {tau}")));
    }
    let (res, rates) = derive(params);
    let regime = params.regime();
    if regime == Regime::AboveThreshold
        || (regime == Regime::Critical && sign == QuadratureSign::Plus)
    {
        return Err(Error::Divergence {
            quantity: "two-time quadrature correlation",
            kappa: params.kappa,
            epsilon: params.epsilon,
        });
    }
    let (k, e) = (params.kappa, params.epsilon);
    let (lambda, pm) = match sign {
        QuadratureSign::Plus => (rates.lambda_plus, res.m_plus_n()),
        QuadratureSign::Minus => (rates.lambda_minus, res.m_minus_n()),
    };
    Ok(2.0 * (k * pm + e) / lambda * (-lambda * tau / 2.0).exp())
}

/// Lorentzian decomposition of the power spectrum. The first component
/// carries the slow rate `lambda_plus` (the dominant, narrow line); the
/// second the fast rate `lambda_minus`.
pub fn power_lorentzians(
    params: &DpoParams,
    field: FieldLabel,
    variant: PowerVariant,
) -> Result<[Lorentzian; 2]> {
    require_below_threshold(params, "power spectrum")?;
    let (res, rates) = derive(params);
    let (k, e) = (params.kappa, params.epsilon);
    let (n, m) = (res.n_res, res.m_res);
    Ok(match field {
        FieldLabel::Cavity => [
            Lorentzian {
                amplitude: 2.0 * (k * (n + m) + e),
                lambda: rates.lambda_plus,
            },
            Lorentzian {
                amplitude: 2.0 * (k * (n - m) - e),
                lambda: rates.lambda_minus,
            },
        ],
        FieldLabel::Output => {
            let second = match variant {
                PowerVariant::AsPrinted => 1.0 - 2.0 * n + 2.0 * m,
                PowerVariant::DerivedConsistent => 2.0 * m - 2.0 * n - 1.0,
            };
            [
                Lorentzian {
                    amplitude: 2.0 * k * e * (1.0 + 2.0 * n + 2.0 * m),
                    lambda: rates.lambda_plus,
                },
                Lorentzian {
                    amplitude: 2.0 * k * e * second,
                    lambda: rates.lambda_minus,
                },
            ]
        }
    })
}

/// Flat floor of the power spectrum: the reflected-reservoir contribution
/// `N` for the output field, none for the cavity field.
pub fn power_floor(params: &DpoParams, field: FieldLabel) -> f64 {
    match field {
        FieldLabel::Cavity => 0.0,
        FieldLabel::Output => derive(params).0.n_res,
    }
}

/// Power spectrum of the cavity or output radiation over a frequency grid.
///
/// For the output field, `variant` selects between the printed closed form
/// and the derived-consistent one (see [`PowerVariant`]); the cavity
/// spectrum is variant-independent.
pub fn power_spectrum(
    params: &DpoParams,
    omegas: &[f64],
    field: FieldLabel,
    variant: PowerVariant,
) -> Result<SpectrumCurve> {
    let comps = power_lorentzians(params, field, variant)?;
    let floor = power_floor(params, field);
    let values = omegas
        .iter()
        .map(|&w| floor + comps[0].eval(w) + comps[1].eval(w))
        .collect();
    Ok(SpectrumCurve {
        omegas: omegas.to_vec(),
        values,
        floor,
        kind: match field {
            FieldLabel::Cavity => SpectrumKind::PowerCavity,
            FieldLabel::Output => SpectrumKind::PowerOutput,
        },
    })
}

/// Result of an exact power-spectrum sum rule evaluation.
#[derive(Debug, Clone, Copy)]
pub struct SumRuleReport {
    /// `(1/2pi) * integral (S - floor) d omega`, from the closed Lorentzian
    /// antiderivatives (no quadrature grid involved).
    pub integral: f64,
    /// The photon-number target: cavity mean photon number, or
    /// `n_out - N` for the output field.
    pub target: f64,
}

impl SumRuleReport {
    pub fn relative_error(&self) -> f64 {
        (self.integral - self.target).abs() / self.target.abs().max(f64::MIN_POSITIVE)
    }
}

/// Evaluates the power-spectrum sum rule in closed form.
///
/// Cavity: `(1/2pi) int S d omega = <alpha* alpha>_ss`. Output:
/// `(1/2pi) int (S_out - N) d omega = n_out - N`, satisfied by the
/// derived-consistent variant and violated by the printed one.
pub fn power_sum_rule(
    params: &DpoParams,
    field: FieldLabel,
    variant: PowerVariant,
) -> Result<SumRuleReport> {
    let comps = power_lorentzians(params, field, variant)?;
    let integral = comps[0].integral_over_2pi() + comps[1].integral_over_2pi();
    let target = match field {
        FieldLabel::Cavity => cavity_moments_ss(params)?.mean_photon,
        FieldLabel::Output => {
            let n_res = derive(params).0.n_res;
            output_moments_ss(params)?.mean_photon - n_res
        }
    };
    Ok(SumRuleReport { integral, target })
}

/// Numerically measures the half-width at half maximum of the dominant
/// (narrow, `lambda_plus`) line of a sampled power spectrum, after removing
/// the flat floor and the broad `lambda_minus` companion known in closed
/// form. Returns the interpolated `omega > 0` where the remainder falls to
/// half its `omega = 0` value.
pub fn dominant_half_width(
    params: &DpoParams,
    field: FieldLabel,
    variant: PowerVariant,
    curve: &SpectrumCurve,
) -> Result<f64> {
    let comps = power_lorentzians(params, field, variant)?;
    let floor = power_floor(params, field);
    let remainder: Vec<(f64, f64)> = curve
        .omegas
        .iter()
        .zip(&curve.values)
        .filter(|(w, _)| **w >= 0.0)
        .map(|(&w, &v)| (w, v - floor - comps[1].eval(w)))
        .collect();
    let peak = remainder
        .iter()
        .find(|(w, _)| *w == 0.0)
        .map(|(_, v)| *v)
        .ok_or_else(|| Error::InvalidParams("grid must contain omega = 0".into()))?;
    let half = peak / 2.0;
    for pair in remainder.windows(2) {
        let (w0, v0) = pair[0];
        let (w1, v1) = pair[1];
        if v0 >= half && v1 < half {
            return Ok(w0 + (v0 - half) / (v0 - v1) * (w1 - w0));
        }
    }
    Err(Error::InvalidParams(
        "half-maximum crossing not bracketed by the grid".into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::CounterRng;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    fn params(kappa: f64, epsilon: f64, r: f64) -> DpoParams {
        DpoParams::new(kappa, epsilon, r).unwrap()
    }

    #[test]
    fn cavity_moments_vacuum_reservoir() {
        let m = cavity_moments_ss(&params(0.8, 0.2, 0.0)).unwrap();
        assert_relative_eq!(m.mean_photon, 1.0 / 6.0, max_relative = 1e-12);
        assert_relative_eq!(m.anomalous, 1.0 / 3.0, max_relative = 1e-12);
    }

    #[test]
    fn cavity_moments_pump_off_reduce_to_reservoir() {
        let p = params(0.8, 0.0, 0.75);
        let (res, _) = derive(&p);
        let m = cavity_moments_ss(&p).unwrap();
        assert_relative_eq!(m.mean_photon, res.n_res, max_relative = 1e-12);
        assert_relative_eq!(m.anomalous, res.m_res, max_relative = 1e-12);
        assert_abs_diff_eq!(m.mean_photon, 0.676213, epsilon = 1e-5);
    }

    #[test]
    fn cavity_moments_satisfy_stationarity() {
        // -kappa n + 2 eps m + kappa N = 0 and -kappa m + 2 eps n + eps + kappa M = 0
        for &(k, e, r) in &[(0.8, 0.2, 0.0), (0.8, 0.3, 0.75), (0.6, 0.1, 0.4)] {
            let p = params(k, e, r);
            let (res, _) = derive(&p);
            let m = cavity_moments_ss(&p).unwrap();
            let scale = m.mean_photon.abs().max(m.anomalous.abs()).max(1.0);
            let r1 = -k * m.mean_photon + 2.0 * e * m.anomalous + k * res.n_res;
            let r2 = -k * m.anomalous + 2.0 * e * m.mean_photon + e + k * res.m_res;
            assert!(r1.abs() / scale < 1e-12, "first stationarity residual {r1}");
            assert!(r2.abs() / scale < 1e-12, "second stationarity residual {r2}");
        }
    }

    #[test]
    fn cavity_moments_diverge_at_critical() {
        assert!(matches!(
            cavity_moments_ss(&params(0.8, 0.4, 0.0)),
            Err(Error::Divergence { .. })
        ));
        assert!(cavity_moments_ss(&params(0.8, 0.5, 0.0)).is_err());
    }

    #[test]
    fn output_moments_vacuum_reservoir() {
        let m = output_moments_ss(&params(0.8, 0.2, 0.0)).unwrap();
        assert_relative_eq!(m.mean_photon, 2.0 / 15.0, max_relative = 1e-12);
        assert_relative_eq!(m.anomalous, 4.0 / 15.0, max_relative = 1e-12);
    }

    #[test]
    fn output_moments_pump_off_are_reflected_squeezed_vacuum() {
        let p = params(0.8, 0.0, 0.75);
        let (res, _) = derive(&p);
        let m = output_moments_ss(&p).unwrap();
        assert_relative_eq!(m.mean_photon, res.n_res, max_relative = 1e-12);
        assert_relative_eq!(m.anomalous, res.m_res, max_relative = 1e-12);
    }

    #[test]
    fn output_moments_consistent_with_input_output_relation() {
        // n_out = kappa n + N (1 - kappa), m_out = kappa m + M (1 - kappa)
        for &(k, e, r) in &[(0.8, 0.2, 0.0), (0.8, 0.3, 0.75), (0.5, 0.2, 1.0)] {
            let p = params(k, e, r);
            let (res, _) = derive(&p);
            let c = cavity_moments_ss(&p).unwrap();
            let o = output_moments_ss(&p).unwrap();
            assert_relative_eq!(
                o.mean_photon,
                k * c.mean_photon + res.n_res * (1.0 - k),
                max_relative = 1e-12
            );
            assert_relative_eq!(
                o.anomalous,
                k * c.anomalous + res.m_res * (1.0 - k),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn variances_match_paper_values() {
        // critical point, vacuum reservoir
        let v = quadrature_variances(&params(0.8, 0.4, 0.0), FieldLabel::Output).unwrap();
        assert_relative_eq!(v.var_minus, 0.6, max_relative = 1e-12);
        assert!(v.var_plus.is_infinite());
        let v = quadrature_variances(&params(0.8, 0.4, 0.0), FieldLabel::Cavity).unwrap();
        assert_relative_eq!(v.var_minus, 0.5, max_relative = 1e-12);
        // below threshold
        let v = quadrature_variances(&params(0.8, 0.2, 0.0), FieldLabel::Output).unwrap();
        assert_relative_eq!(v.var_minus, 11.0 / 15.0, max_relative = 1e-12);
        assert_relative_eq!(v.var_plus, 1.8, max_relative = 1e-12);
    }

    #[test]
    fn critical_limit_helpers() {
        assert_relative_eq!(output_var_minus_critical(0.8, 0.0), 0.6, max_relative = 1e-12);
        assert_relative_eq!(cavity_var_minus_critical(0.0), 0.5, max_relative = 1e-12);
    }

    #[test]
    fn variances_cross_check_against_moments() {
        // var_+- = 1 + 2 n +- 2 m for the matching field
        for &(k, e, r) in &[(0.8, 0.2, 0.0), (0.8, 0.3, 0.75), (0.9, 0.1, 0.5)] {
            let p = params(k, e, r);
            for field in [FieldLabel::Cavity, FieldLabel::Output] {
                let m = moments_ss(&p, field).unwrap();
                let v = quadrature_variances(&p, field).unwrap();
                assert_relative_eq!(
                    v.var_plus,
                    1.0 + 2.0 * m.mean_photon + 2.0 * m.anomalous,
                    max_relative = 1e-12
                );
                assert_relative_eq!(
                    v.var_minus,
                    1.0 + 2.0 * m.mean_photon - 2.0 * m.anomalous,
                    max_relative = 1e-12
                );
            }
        }
    }

    #[test]
    fn squeezing_spectrum_zero_at_critical_point() {
        let p = params(0.8, 0.4, 0.6);
        let s = squeezing_spectrum_out(&p, &[0.0], QuadratureSign::Minus).unwrap();
        assert_abs_diff_eq!(s.values[0], 0.0, epsilon = 1e-14);
        // plus branch at the critical point diverges only at omega = 0
        let s = squeezing_spectrum_out(&p, &[0.0, 0.3], QuadratureSign::Plus).unwrap();
        assert!(s.values[0].is_infinite());
        assert!(s.values[1].is_finite());
    }

    #[test]
    fn squeezing_spectrum_flat_when_pump_off() {
        let p = params(0.8, 0.0, 0.75);
        let grid = [-1.5, 0.0, 0.3, 2.0];
        let minus = squeezing_spectrum_out(&p, &grid, QuadratureSign::Minus).unwrap();
        let plus = squeezing_spectrum_out(&p, &grid, QuadratureSign::Plus).unwrap();
        for (&vm, &vp) in minus.values.iter().zip(&plus.values) {
            assert_abs_diff_eq!(vm, 0.223130, epsilon = 1e-5);
            assert_abs_diff_eq!(vp, 4.481689, epsilon = 1e-5);
        }
        assert_relative_eq!(minus.floor, (-1.5f64).exp(), max_relative = 1e-14);
    }

    #[test]
    fn squeezing_spectrum_at_zero_frequency() {
        let s = squeezing_spectrum_out(&params(0.8, 0.2, 0.0), &[0.0], QuadratureSign::Minus)
            .unwrap();
        assert_relative_eq!(s.values[0], 1.0 / 9.0, max_relative = 1e-12);
    }

    #[test]
    fn squeezing_spectrum_tends_to_floor() {
        let p = params(0.8, 0.3, 0.5);
        for sign in [QuadratureSign::Plus, QuadratureSign::Minus] {
            let s = squeezing_spectrum_out(&p, &[1e6], sign).unwrap();
            assert_relative_eq!(s.values[0], s.floor, max_relative = 1e-9);
        }
    }

    #[test]
    fn two_time_correlation_examples() {
        let p = params(0.8, 0.2, 0.0);
        assert_relative_eq!(
            two_time_quadrature_corr(&p, 0.0, QuadratureSign::Plus).unwrap(),
            1.0,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            two_time_quadrature_corr(&p, 0.0, QuadratureSign::Minus).unwrap(),
            1.0 / 3.0,
            max_relative = 1e-12
        );
        assert_abs_diff_eq!(
            two_time_quadrature_corr(&p, 200.0, QuadratureSign::Plus).unwrap(),
            0.0,
            epsilon = 1e-15
        );
        // plus branch diverges at the critical point; minus stays finite
        let pc = params(0.8, 0.4, 0.0);
        assert!(two_time_quadrature_corr(&pc, 0.5, QuadratureSign::Plus).is_err());
        assert!(two_time_quadrature_corr(&pc, 0.5, QuadratureSign::Minus).is_ok());
    }

    #[test]
    fn cavity_power_spectrum_at_zero_frequency() {
        let s = power_spectrum(
            &params(0.8, 0.2, 0.0),
            &[0.0],
            FieldLabel::Cavity,
            PowerVariant::DerivedConsistent,
        )
        .unwrap();
        assert_relative_eq!(
            s.values[0],
            2.0 * (0.2 / 0.16 - 0.2 / 1.44),
            max_relative = 1e-12
        );
        assert_eq!(s.floor, 0.0);
    }

    /// Independent oracle for the derived-consistent output value at
    /// omega = 0: numerical quadrature of the two-time output correlation
    /// (slow + fast exponentials), plus the flat reservoir floor.
    fn output_power_zero_freq_by_quadrature(p: &DpoParams) -> f64 {
        let (res, rates) = derive(p);
        let c = cavity_moments_ss(p).unwrap();
        let k = p.kappa;
        let a_slow = 0.5 * k * (c.mean_photon + c.anomalous - res.m_plus_n());
        let a_fast = 0.5 * k * (c.mean_photon - c.anomalous + res.m_minus_n());
        let corr = |tau: f64| {
            a_slow * (-rates.lambda_plus * tau / 2.0).exp()
                + a_fast * (-rates.lambda_minus * tau / 2.0).exp()
        };
        // 2 * int_0^T corr(tau) d tau by fine trapezoid
        let t_max = 400.0 / rates.lambda_plus;
        let steps = 4_000_000usize;
        let h = t_max / steps as f64;
        let mut acc = 0.5 * (corr(0.0) + corr(t_max));
        for i in 1..steps {
            acc += corr(h * i as f64);
        }
        res.n_res + 2.0 * acc * h
    }

    #[test]
    fn output_power_spectrum_variants_at_zero_frequency() {
        let p = params(0.8, 0.2, 0.0);
        let derived = power_spectrum(&p, &[0.0], FieldLabel::Output, PowerVariant::DerivedConsistent)
            .unwrap();
        let printed =
            power_spectrum(&p, &[0.0], FieldLabel::Output, PowerVariant::AsPrinted).unwrap();
        assert_abs_diff_eq!(derived.values[0], 0.32 * (6.25 - 0.694444), epsilon = 1e-5);
        assert_abs_diff_eq!(printed.values[0], 0.32 * (6.25 + 0.694444), epsilon = 1e-5);
        // oracle: Fourier transform of the two-time correlation by quadrature
        let oracle = output_power_zero_freq_by_quadrature(&p);
        assert_relative_eq!(derived.values[0], oracle, max_relative = 1e-6);
    }

    #[test]
    fn sum_rules_hold_for_random_parameter_sets() {
        let mut rng = CounterRng::new(0xD1CE, 7);
        for _ in 0..20 {
            let kappa = 0.2 + 0.8 * rng.uniform();
            let epsilon = 0.45 * kappa * rng.uniform();
            let r = 1.2 * rng.uniform();
            let p = params(kappa, epsilon, r);
            let cavity = power_sum_rule(&p, FieldLabel::Cavity, PowerVariant::DerivedConsistent)
                .unwrap();
            assert!(
                cavity.relative_error() < 1e-10,
                "cavity sum rule off by {} at {p:?}",
                cavity.relative_error()
            );
            let output = power_sum_rule(&p, FieldLabel::Output, PowerVariant::DerivedConsistent)
                .unwrap();
            assert!(
                output.relative_error() < 1e-10,
                "output sum rule off by {} at {p:?}",
                output.relative_error()
            );
        }
    }

    #[test]
    fn printed_variant_violates_output_sum_rule() {
        let p = params(0.8, 0.2, 0.0);
        let printed = power_sum_rule(&p, FieldLabel::Output, PowerVariant::AsPrinted).unwrap();
        // the violation is exactly kappa eps / lambda_minus = 0.16 / 1.2
        let expected_excess = 0.8 * 0.2 / 1.2;
        assert_relative_eq!(
            printed.integral - printed.target,
            expected_excess,
            max_relative = 1e-10
        );
        // omega = 0 ratio of the two variants documents the discrepancy
        let d = power_spectrum(&p, &[0.0], FieldLabel::Output, PowerVariant::DerivedConsistent)
            .unwrap()
            .values[0];
        let q = power_spectrum(&p, &[0.0], FieldLabel::Output, PowerVariant::AsPrinted)
            .unwrap()
            .values[0];
        assert_abs_diff_eq!(q, 2.2222, epsilon = 1e-4);
        assert_abs_diff_eq!(d, 1.7778, epsilon = 1e-4);
    }

    #[test]
    fn dominant_half_width_is_lambda_plus_over_two() {
        let grid = uniform_grid(-2.0, 2.0, 8001);
        let mut widths = Vec::new();
        for &r in &[0.0, 0.5, 1.0] {
            for field in [FieldLabel::Cavity, FieldLabel::Output] {
                let p = params(0.8, 0.2, r);
                let curve =
                    power_spectrum(&p, &grid, field, PowerVariant::DerivedConsistent).unwrap();
                let w =
                    dominant_half_width(&p, field, PowerVariant::DerivedConsistent, &curve)
                        .unwrap();
                assert_abs_diff_eq!(w, 0.2, epsilon = 1e-3);
                widths.push(w);
            }
        }
        let first = widths[0];
        for w in widths {
            assert_abs_diff_eq!(w, first, epsilon = 1e-3);
        }
    }

    proptest! {
        #[test]
        fn uncertainty_product_holds_for_kappa_below_one(
            kappa in 0.05f64..1.0,
            frac in 0.0f64..0.98,
            r in 0.0f64..1.5,
        ) {
            let p = params(kappa, frac * kappa / 2.0, r);
            for field in [FieldLabel::Cavity, FieldLabel::Output] {
                let v = quadrature_variances(&p, field).unwrap();
                prop_assert!(v.var_plus * v.var_minus >= 1.0 - 1e-12);
                prop_assert!(v.var_minus > 0.0);
            }
        }

        #[test]
        fn squeezing_minus_spectrum_nonnegative(
            kappa in 0.05f64..2.0,
            frac in 0.0f64..1.0,
            r in 0.0f64..2.0,
            omega in -5.0f64..5.0,
        ) {
            // valid below and at threshold: 8 eps kappa <= (kappa + 2 eps)^2
            let p = params(kappa, frac * kappa / 2.0, r);
            let s = squeezing_spectrum_out(&p, &[omega], QuadratureSign::Minus).unwrap();
            prop_assert!(s.values[0] >= -1e-14);
        }

        #[test]
        fn sum_rule_property(
            kappa in 0.1f64..1.5,
            frac in 0.0f64..0.95,
            r in 0.0f64..1.5,
        ) {
            let p = params(kappa, frac * kappa / 2.0, r);
            let rep = power_sum_rule(&p, FieldLabel::Cavity, PowerVariant::DerivedConsistent).unwrap();
            prop_assert!(rep.relative_error() < 1e-10);
        }
    }
}
