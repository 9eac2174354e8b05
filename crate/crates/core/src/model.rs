//! Physical parameters, derived reservoir quantities, and regime
//! classification shared by every other module.

use crate::error::{Error, Result};

/// Absolute tolerance (scaled by `max(kappa, 1)`) for detecting the critical
/// point `kappa = 2 epsilon`. The closed forms diverge at `lambda_plus = 0`,
/// so classification must be crisp rather than left to a silent `1/0`.
pub const CRITICAL_TOL: f64 = 1e-12;

/// Physical parameter set of the oscillator.
///
/// `kappa` is the cavity damping constant, `epsilon` the (real, nonnegative)
/// pump amplitude, both in inverse time units; `r` is the dimensionless
/// squeeze parameter of the reservoir.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DpoParams {
    pub kappa: f64,
    pub epsilon: f64,
    pub r: f64,
}

/// Squeezed-reservoir moments `N = sinh^2(r)` and `M = sinh(r) cosh(r)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReservoirMoments {
    pub n_res: f64,
    pub m_res: f64,
}

/// Quadrature decay rates `lambda_plus = kappa - 2 epsilon` and
/// `lambda_minus = kappa + 2 epsilon`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayRates {
    pub lambda_plus: f64,
    pub lambda_minus: f64,
}

/// Operating regime relative to the critical point `kappa = 2 epsilon`.
///
/// Above threshold there is no steady state; only transient (finite-time)
/// operations are permitted downstream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    BelowThreshold,
    Critical,
    AboveThreshold,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Regime::BelowThreshold => write!(f, "below-threshold"),
            Regime::Critical => write!(f, "critical"),
            Regime::AboveThreshold => write!(f, "above-threshold"),
        }
    }
}

impl DpoParams {
    /// Validates and bundles the parameter set.
    pub fn new(kappa: f64, epsilon: f64, r: f64) -> Result<Self> {
        if !kappa.is_finite() || !epsilon.is_finite() || !r.is_finite() {
            return Err(Error::InvalidParams(format!(
                "non-finite input: kappa = {kappa}, epsilon = {epsilon}, r = {r}"
            )));
        }
        if kappa <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "kappa must be positive, got {kappa}"
            )));
        }
        if epsilon < 0.0 {
            return Err(Error::InvalidParams(format!(
                "epsilon must be nonnegative, got {epsilon}"
            )));
        }
        if r < 0.0 {
            return Err(Error::InvalidParams(format!(
                "r must be nonnegative, got {r}"
            )));
        }
        Ok(Self { kappa, epsilon, r })
    }

    /// Non-fatal advisories. `kappa > 1` keeps every closed form finite but
    /// voids the guarantee `var_plus * var_minus >= 1` for the output field,
    /// which holds for `kappa` in `(0, 1]`.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.kappa > 1.0 {
            w.push(format!(
                "kappa = {} > 1: the output uncertainty product var_plus * var_minus >= 1 \
                 is only guaranteed for kappa in (0, 1]",
                self.kappa
            ));
        }
        w
    }

    pub fn regime(&self) -> Regime {
        classify_regime(self)
    }

    /// `true` strictly below the critical point.
    pub fn is_below_threshold(&self) -> bool {
        self.regime() == Regime::BelowThreshold
    }
}

/// Reservoir moments and decay rates from the definitions.
///
/// Pure: identical inputs produce bit-identical outputs. At the critical
/// point `lambda_plus` is snapped to exactly zero.
pub fn derive(params: &DpoParams) -> (ReservoirMoments, DecayRates) {
    let sh = params.r.sinh();
    let ch = params.r.cosh();
    let moments = ReservoirMoments {
        n_res: sh * sh,
        m_res: sh * ch,
    };
    let lambda_plus = match classify_regime(params) {
        Regime::Critical => 0.0,
        _ => params.kappa - 2.0 * params.epsilon,
    };
    let rates = DecayRates {
        lambda_plus,
        lambda_minus: params.kappa + 2.0 * params.epsilon,
    };
    (moments, rates)
}

/// Classifies the regime with the [`CRITICAL_TOL`] band around
/// `kappa = 2 epsilon`.
pub fn classify_regime(params: &DpoParams) -> Regime {
    let gap = params.kappa - 2.0 * params.epsilon;
    let tol = CRITICAL_TOL * params.kappa.max(1.0);
    if gap.abs() <= tol {
        Regime::Critical
    } else if gap > 0.0 {
        Regime::BelowThreshold
    } else {
        Regime::AboveThreshold
    }
}

impl ReservoirMoments {
    /// `M - N = sinh(r) e^{-r}`, nonnegative for all `r >= 0`.
    pub fn m_minus_n(&self) -> f64 {
        self.m_res - self.n_res
    }

    pub fn m_plus_n(&self) -> f64 {
        self.m_res + self.n_res
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn derive_vacuum_reservoir() {
        let p = DpoParams::new(0.8, 0.2, 0.0).unwrap();
        let (res, rates) = derive(&p);
        assert_eq!(res.n_res, 0.0);
        assert_eq!(res.m_res, 0.0);
        assert_abs_diff_eq!(rates.lambda_plus, 0.4, epsilon = 1e-15);
        assert_abs_diff_eq!(rates.lambda_minus, 1.2, epsilon = 1e-15);
    }

    #[test]
    fn derive_squeezed_reservoir() {
        let p = DpoParams::new(0.8, 0.2, 0.75).unwrap();
        let (res, _) = derive(&p);
        // sinh^2(0.75) and sinh(0.75) cosh(0.75)
        assert_abs_diff_eq!(res.n_res, 0.676213, epsilon = 1e-5);
        assert_abs_diff_eq!(res.m_res, 1.064639, epsilon = 1e-5);
        // route check against the double-angle forms
        assert_abs_diff_eq!(res.n_res, ((2.0 * 0.75f64).cosh() - 1.0) / 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(res.m_res, (2.0 * 0.75f64).sinh() / 2.0, epsilon = 1e-14);
    }

    #[test]
    fn derive_critical_point_snaps_lambda_plus() {
        let p = DpoParams::new(0.8, 0.4, 0.0).unwrap();
        let (_, rates) = derive(&p);
        assert_eq!(rates.lambda_plus, 0.0);
        assert_eq!(p.regime(), Regime::Critical);
    }

    #[test]
    fn classify_examples() {
        assert_eq!(
            DpoParams::new(0.8, 0.2, 0.0).unwrap().regime(),
            Regime::BelowThreshold
        );
        assert_eq!(
            DpoParams::new(0.8, 0.4, 0.0).unwrap().regime(),
            Regime::Critical
        );
        assert_eq!(
            DpoParams::new(0.8, 0.5, 0.0).unwrap().regime(),
            Regime::AboveThreshold
        );
    }

    #[test]
    fn critical_band_is_tight() {
        let tol = CRITICAL_TOL; // kappa < 1 here, so scale is max(kappa, 1) = 1
        let p = DpoParams::new(0.8, (0.8 + 0.5 * tol) / 2.0, 0.0).unwrap();
        assert_eq!(p.regime(), Regime::Critical);
        let p = DpoParams::new(0.8, (0.8 + 4.0 * tol) / 2.0, 0.0).unwrap();
        assert_eq!(p.regime(), Regime::AboveThreshold);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(DpoParams::new(f64::NAN, 0.1, 0.0).is_err());
        assert!(DpoParams::new(0.8, f64::INFINITY, 0.0).is_err());
        assert!(DpoParams::new(0.0, 0.1, 0.0).is_err());
        assert!(DpoParams::new(-0.8, 0.1, 0.0).is_err());
        assert!(DpoParams::new(0.8, -0.1, 0.0).is_err());
        assert!(DpoParams::new(0.8, 0.1, -0.5).is_err());
    }

    #[test]
    fn kappa_above_one_warns_but_validates() {
        let p = DpoParams::new(1.5, 0.1, 0.0).unwrap();
        assert_eq!(p.warnings().len(), 1);
        assert!(DpoParams::new(0.9, 0.1, 0.0).unwrap().warnings().is_empty());
    }

    #[test]
    fn derive_is_bit_deterministic() {
        let p = DpoParams::new(0.8347, 0.21219, 0.6181).unwrap();
        let (a1, r1) = derive(&p);
        let (a2, r2) = derive(&p);
        assert_eq!(a1.n_res.to_bits(), a2.n_res.to_bits());
        assert_eq!(a1.m_res.to_bits(), a2.m_res.to_bits());
        assert_eq!(r1.lambda_plus.to_bits(), r2.lambda_plus.to_bits());
        assert_eq!(r1.lambda_minus.to_bits(), r2.lambda_minus.to_bits());
    }

    #[test]
    fn ideal_squeezed_vacuum_identity() {
        // M^2 = N (N + 1) within 4 ulps
        for &r in &[0.1, 0.5, 0.75, 1.0, 2.0] {
            let p = DpoParams::new(0.8, 0.0, r).unwrap();
            let (res, _) = derive(&p);
            let lhs = res.m_res * res.m_res;
            let rhs = res.n_res * (res.n_res + 1.0);
            let ulp = 4.0 * f64::EPSILON * lhs.abs().max(rhs.abs());
            assert!(
                (lhs - rhs).abs() <= ulp,
                "r = {r}: |M^2 - N(N+1)| = {} > {ulp}",
                (lhs - rhs).abs()
            );
        }
    }

    proptest! {
        #[test]
        fn surrogate_diffusion_positivity(
            r in 0.0f64..12.0,
            kappa in 1e-3f64..3.0,
            epsilon in 0.0f64..1.5,
        ) {
            let p = DpoParams::new(kappa, epsilon, r).unwrap();
            let (res, _) = derive(&p);
            // M - N = sinh(r) e^{-r} >= 0 and kappa (M - N) + epsilon >= 0
            prop_assert!(res.m_minus_n() >= 0.0);
            prop_assert!(kappa * res.m_minus_n() + epsilon >= 0.0);
        }

        #[test]
        fn regime_matches_lambda_plus_sign(
            kappa in 1e-3f64..3.0,
            epsilon in 0.0f64..1.6,
        ) {
            let p = DpoParams::new(kappa, epsilon, 0.0).unwrap();
            let (_, rates) = derive(&p);
            match p.regime() {
                Regime::BelowThreshold => prop_assert!(rates.lambda_plus > 0.0),
                Regime::Critical => prop_assert_eq!(rates.lambda_plus, 0.0),
                Regime::AboveThreshold => prop_assert!(rates.lambda_plus < 0.0),
            }
        }
    }
}
