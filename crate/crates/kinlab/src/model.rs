//! Force-field models and the analytic quantities they induce.
//!
//! A model is an even velocity profile `theta : R -> (0, inf)` together with
//! an exponent `beta` in (1, 5). Everything else is derived:
//!
//! ```text
//! drift            F(v)  = (beta/2) theta'(v) / theta(v)
//! scale function   s(v)  = int_0^v theta(u)^{-beta} du
//! speed density    m(v)  = theta(v)^beta
//! stability index  alpha = (beta + 1) / 3            in (2/3, 2)
//! normalization    c_beta = ( int_R theta^beta )^{-1}
//! diffusivity      sigma_alpha = 3^{1-2a} 2^{a-1} pi c_beta
//!                                / ( Gamma(a)^2 sin(pi a / 2) ),  a = alpha
//! ```
//!
//! The built-in profile is `theta(v) = (1 + v^2)^{-1/2}`, for which the
//! drift is `F(v) = -(beta/2) v / (1 + v^2)`, the speed density has the
//! polynomial tail `m(v) ~ |v|^{-beta}`, and several closed forms exist
//! that the tests pin down (`s(1) = 4/3` and `c_2 = 1/pi` at `beta = 2`).
//!
//! Hitting-time expectations for the velocity diffusion come from the
//! scale/speed representation: started at `v > 0`, the expected time to
//! reach 0 is `s(v) int_v^inf m + int_0^v s m`, and the expected time to
//! climb from 0 to `v` is `s(v) int_R m` minus those two terms. Both are
//! evaluated by adaptive quadrature with analytic tail control.

use crate::numeric::{self, QuadratureSpec};
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

/// Shared function handle for profiles; cheap to clone, safe to send to
/// worker threads.
pub type Profile = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("beta = {0} outside the open interval (1, 5)")]
    BetaOutOfRange(f64),
    #[error("theta must be even: theta({v}) = {plus} but theta({minus_v}) = {minus}")]
    ProfileNotEven { v: f64, plus: f64, minus_v: f64, minus: f64 },
    #[error("theta must be positive: theta({v}) = {value}")]
    ProfileNotPositive { v: f64, value: f64 },
    #[error("quadrature failure in {context}: {source}")]
    Quadrature {
        context: &'static str,
        #[source]
        source: numeric::NumericError,
    },
    #[error("scale inversion failed: {0}")]
    ScaleInversion(#[from] numeric::NumericError),
}

/// A velocity model: exponent, profile, profile derivative, and a Lipschitz
/// constant for the induced drift.
///
/// Construction validates the model on a symmetric probe grid; invalid
/// models are rejected rather than carried around half-checked.
#[derive(Clone)]
pub struct ForceField {
    beta: f64,
    theta: Profile,
    theta_prime: Profile,
    /// Precompiled drift closure; one dynamic call per simulation step
    /// instead of two profile calls and a power.
    force: Profile,
    lipschitz_bound: f64,
}

impl fmt::Debug for ForceField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ForceField")
            .field("beta", &self.beta)
            .field("lipschitz_bound", &self.lipschitz_bound)
            .finish()
    }
}

/// Velocities at which registration checks probe the profile.
const PROBE_GRID: [f64; 7] = [0.0, 0.3, 1.0, 2.0, 5.0, 10.0, 100.0];

impl ForceField {
    /// The built-in model `theta(v) = (1 + v^2)^{-1/2}`.
    ///
    /// Its drift `F(v) = -(beta/2) v / (1 + v^2)` has derivative
    /// `-(beta/2)(1 - v^2)/(1 + v^2)^2`, maximal in absolute value at
    /// `v = 0`, so the exact Lipschitz constant is `beta / 2`.
    pub fn builtin(beta: f64) -> Result<Self, ModelError> {
        let theta: Profile = Arc::new(|v: f64| (1.0 + v * v).sqrt().recip());
        let theta_prime: Profile = Arc::new(|v: f64| -v * (1.0 + v * v).powf(-1.5));
        let force: Profile = Arc::new(move |v: f64| -0.5 * beta * v / (1.0 + v * v));
        let mut ff = Self::with_profiles(beta, theta, theta_prime, Some(beta / 2.0))?;
        ff.force = force;
        Ok(ff)
    }

    /// Register a custom model. `lipschitz_bound`, when not supplied, is
    /// estimated as the largest central-difference slope of F on a dense
    /// grid over [-50, 50] with a 5% safety factor; this is a recorded
    /// numerical bound, not a proof.
    pub fn with_profiles(
        beta: f64,
        theta: Profile,
        theta_prime: Profile,
        lipschitz_bound: Option<f64>,
    ) -> Result<Self, ModelError> {
        if !(beta > 1.0 && beta < 5.0) {
            return Err(ModelError::BetaOutOfRange(beta));
        }
        for &v in &PROBE_GRID {
            let plus = theta(v);
            let minus = theta(-v);
            if !(plus > 0.0) || !plus.is_finite() {
                return Err(ModelError::ProfileNotPositive { v, value: plus });
            }
            if (plus - minus).abs() > 1e-12 * plus.abs() {
                return Err(ModelError::ProfileNotEven { v, plus, minus_v: -v, minus });
            }
        }
        let force: Profile = {
            let theta = theta.clone();
            let theta_prime = theta_prime.clone();
            Arc::new(move |v: f64| 0.5 * beta * theta_prime(v) / theta(v))
        };
        let lipschitz_bound = lipschitz_bound.unwrap_or_else(|| {
            let h = 1e-4;
            let mut max_slope: f64 = 0.0;
            let mut v = -50.0;
            while v <= 50.0 {
                let slope = (force(v + h) - force(v - h)) / (2.0 * h);
                max_slope = max_slope.max(slope.abs());
                v += 0.01;
            }
            max_slope * 1.05
        });
        Ok(Self { beta, theta, theta_prime, force, lipschitz_bound })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn lipschitz_bound(&self) -> f64 {
        self.lipschitz_bound
    }

    pub fn theta(&self, v: f64) -> f64 {
        (self.theta)(v)
    }

    pub fn theta_prime(&self, v: f64) -> f64 {
        (self.theta_prime)(v)
    }

    /// Drift `F(v) = (beta/2) theta'(v)/theta(v)`; odd and bounded.
    #[inline]
    pub fn force(&self, v: f64) -> f64 {
        (self.force)(v)
    }

    /// Stability index `alpha = (beta + 1)/3` of the diffusive limit.
    pub fn alpha(&self) -> f64 {
        alpha_of_beta(self.beta)
    }

    /// Speed density `m(v) = theta(v)^beta`; even, positive, with
    /// polynomial tail `~ |v|^{-beta}` for tail-normalized profiles.
    #[inline]
    pub fn speed_density(&self, v: f64) -> f64 {
        (self.theta)(v).powf(self.beta)
    }

    /// Scale function `s(v) = int_0^v theta^{-beta}`; odd, strictly
    /// increasing, `s(0) = 0`.
    pub fn scale_function(&self, v: f64) -> f64 {
        if v == 0.0 {
            return 0.0;
        }
        let (lo, hi, sign) = if v > 0.0 { (0.0, v, 1.0) } else { (v, 0.0, -1.0) };
        let spec = QuadratureSpec { rel_tol: 1e-12, abs_tol: 1e-300, max_panels: 4000 };
        let value = numeric::integrate(|u| self.scale_derivative(u), lo, hi, spec)
            .expect("scale integrand is smooth and positive on a finite range");
        sign * value
    }

    /// `s'(v) = theta(v)^{-beta}`, the scale density.
    #[inline]
    pub fn scale_derivative(&self, v: f64) -> f64 {
        (self.theta)(v).powf(-self.beta)
    }

    /// Inverse of the scale function, solved by safeguarded Newton within a
    /// bracket seeded from the asymptotic `s(v) ~ v^{beta+1}/(beta+1)`.
    pub fn inverse_scale(&self, w: f64) -> Result<f64, ModelError> {
        if w == 0.0 {
            return Ok(0.0);
        }
        let target = w.abs();
        // Seed from the tail asymptotic, then grow until bracketed. The
        // asymptotic underestimates s near 0, so include a linear floor.
        let mut hi = ((self.beta + 1.0) * target).powf(1.0 / (self.beta + 1.0)) + target + 1.0;
        while self.scale_function(hi) < target {
            hi *= 2.0;
        }
        let root = numeric::invert_monotone(
            |v| self.scale_function(v),
            Some(|v: f64| self.scale_derivative(v)),
            target,
            0.0,
            hi,
            1e-12,
        )?;
        Ok(root.copysign(w))
    }

    /// `psi(w) = s'(s^{-1}(w))`, the scale-changed diffusivity.
    pub fn psi(&self, w: f64) -> Result<f64, ModelError> {
        Ok(self.scale_derivative(self.inverse_scale(w)?))
    }

    /// `phi(w) = s^{-1}(w) / psi(w)^2`; behaves like
    /// `((beta+1) w)^{(1-2 beta)/(beta+1)}` for large `w`.
    pub fn phi_coeff(&self, w: f64) -> Result<f64, ModelError> {
        let v = self.inverse_scale(w)?;
        let psi = self.scale_derivative(v);
        Ok(v / (psi * psi))
    }

    /// Total mass of the speed density, `int_R theta^beta`, with relative
    /// error at most `quad.rel_tol`. The tail beyond a cutoff `V*` is added
    /// analytically from `m(v) <= v^{-beta}`, with `V*` chosen so the bound
    /// is below a tenth of the error budget.
    pub fn speed_mass(&self, quad: QuadratureSpec) -> Result<f64, ModelError> {
        let half = self.speed_mass_from(0.0, quad)?;
        Ok(2.0 * half)
    }

    /// `int_from^inf theta^beta` for `from >= 0`.
    pub fn speed_mass_from(&self, from: f64, quad: QuadratureSpec) -> Result<f64, ModelError> {
        debug_assert!(from >= 0.0);
        let beta = self.beta;
        // Core region: quadrature up to a moderate velocity.
        let core_hi = (from + 10.0).max(10.0);
        let core = numeric::integrate(|v| self.speed_density(v), from, core_hi, quad)
            .map_err(|source| ModelError::Quadrature { context: "speed core", source })?;
        // A first estimate sets the scale for the tail tolerance.
        let scale_estimate = core.abs().max(core_hi.powf(1.0 - beta) / (beta - 1.0));
        let tail_budget = (quad.rel_tol * scale_estimate * 0.1).max(1e-300);
        // v^{ -beta } bound: int_{V*}^inf = V*^{1-beta}/(beta-1).
        let v_star = ((beta - 1.0) * tail_budget).powf(1.0 / (1.0 - beta)).max(core_hi * 2.0);
        // Log substitution v = e^u turns the polynomial tail into an
        // exponentially decaying smooth integrand.
        let tail = numeric::integrate(
            |u: f64| {
                let v = u.exp();
                v * self.speed_density(v)
            },
            core_hi.ln(),
            v_star.ln(),
            quad,
        )
        .map_err(|source| ModelError::Quadrature { context: "speed tail", source })?;
        let remainder = v_star.powf(1.0 - beta) / (beta - 1.0);
        Ok(core + tail + remainder)
    }

    /// Normalizing constant `c_beta = (int_R theta^beta)^{-1}`.
    pub fn c_beta(&self, quad: QuadratureSpec) -> Result<f64, ModelError> {
        Ok(self.speed_mass(quad)?.recip())
    }

    /// Diffusion constants `(alpha, sigma_alpha, c_beta)` of the stable
    /// limit.
    pub fn stable_params(&self) -> Result<StableParams, ModelError> {
        let c_beta = self.c_beta(QuadratureSpec::with_rel_tol(1e-10))?;
        let alpha = self.alpha();
        Ok(StableParams { alpha, sigma_alpha: sigma_alpha_from_c_beta(alpha, c_beta), c_beta })
    }

    /// Expected time for the velocity diffusion started at `v > 0` to hit
    /// zero: `s(v) int_v^inf m + int_0^v s m`.
    pub fn kac_hitting_moment_down(&self, v: f64) -> Result<f64, ModelError> {
        assert!(v > 0.0, "hitting moment requires a positive start");
        let quad = QuadratureSpec::with_rel_tol(1e-9);
        let sv = self.scale_function(v);
        let upper = self.speed_mass_from(v, quad)?;
        let inner = numeric::integrate(
            |u| self.scale_function(u) * self.speed_density(u),
            0.0,
            v,
            quad,
        )
        .map_err(|source| ModelError::Quadrature { context: "kac inner", source })?;
        Ok(sv * upper + inner)
    }

    /// Expected time for the velocity diffusion started at 0 to reach
    /// `v > 0`: `s(v) int_R m` minus the two terms of the downward moment.
    pub fn kac_hitting_moment_up(&self, v: f64) -> Result<f64, ModelError> {
        assert!(v > 0.0, "hitting moment requires a positive target");
        let quad = QuadratureSpec::with_rel_tol(1e-9);
        let sv = self.scale_function(v);
        let total = self.speed_mass(quad)?;
        let down = self.kac_hitting_moment_down(v)?;
        Ok(sv * total - down)
    }
}

/// Stability index of the limit process: `alpha = (beta + 1) / 3`.
///
/// Panics outside the admissible exponent range; model construction
/// enforces the range, so this is a programmer-error guard.
pub fn alpha_of_beta(beta: f64) -> f64 {
    assert!(beta > 1.0 && beta < 5.0, "beta = {beta} outside (1, 5)");
    (beta + 1.0) / 3.0
}

/// Parameters `(alpha, sigma_alpha)` of a symmetric stable law with
/// characteristic function `exp(-t sigma_alpha |xi|^alpha)`, together with
/// the profile normalization `c_beta` they came from.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct StableParams {
    pub alpha: f64,
    pub sigma_alpha: f64,
    pub c_beta: f64,
}

impl StableParams {
    /// Build from `(alpha, sigma_alpha)` directly, reconstructing the
    /// `c_beta` consistent with the closed-form relation between the three.
    pub fn from_alpha_sigma(alpha: f64, sigma_alpha: f64) -> Self {
        assert!(alpha > 0.0 && alpha < 2.0, "alpha = {alpha} outside (0, 2)");
        assert!(sigma_alpha > 0.0, "sigma_alpha must be positive");
        let c_beta = sigma_alpha / sigma_alpha_from_c_beta(alpha, 1.0);
        Self { alpha, sigma_alpha, c_beta }
    }
}

/// `sigma_alpha` as an explicit function of `alpha` and `c_beta`:
/// `3^{1-2a} 2^{a-1} pi c_beta / (Gamma(a)^2 sin(pi a/2))`.
pub fn sigma_alpha_from_c_beta(alpha: f64, c_beta: f64) -> f64 {
    let gamma_a = statrs::function::gamma::gamma(alpha);
    3f64.powf(1.0 - 2.0 * alpha) * 2f64.powf(alpha - 1.0) * std::f64::consts::PI * c_beta
        / (gamma_a * gamma_a * (std::f64::consts::FRAC_PI_2 * alpha).sin())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn builtin(beta: f64) -> ForceField {
        ForceField::builtin(beta).expect("valid beta")
    }

    #[test]
    fn rejects_beta_endpoints() {
        assert!(ForceField::builtin(1.0).is_err());
        assert!(ForceField::builtin(5.0).is_err());
        assert!(ForceField::builtin(0.5).is_err());
        assert!(ForceField::builtin(1.0 + 1e-9).is_ok());
    }

    #[test]
    fn force_closed_form_at_beta_two() {
        let ff = builtin(2.0);
        // F(v) = -v/(1+v^2) at beta = 2.
        assert_abs_diff_eq!(ff.force(1.0), -0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(ff.force(0.0), 0.0, epsilon = 0.0);
    }

    #[test]
    fn force_is_odd() {
        let ff = builtin(3.0);
        for v in [0.3, 1.0, 7.0] {
            assert_abs_diff_eq!(ff.force(v), -ff.force(-v), epsilon = 1e-15);
        }
    }

    #[test]
    fn builtin_profile_tail_normalization() {
        // |v| theta(v) -> 1 with quadratic rate: within 1%, 0.1%, 0.01%
        // at v = 1e3, 1e4, 1e5.
        let ff = builtin(2.0);
        for (v, tol) in [(1e3, 1e-2), (1e4, 1e-3), (1e5, 1e-4)] {
            assert!((v * ff.theta(v) - 1.0).abs() < tol);
        }
    }

    #[test]
    fn alpha_map() {
        assert_abs_diff_eq!(alpha_of_beta(2.0), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(alpha_of_beta(3.5), 1.5, epsilon = 1e-15);
        assert!((alpha_of_beta(1.0 + 1e-9) - 2.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    #[should_panic]
    fn alpha_map_rejects_out_of_range() {
        let _ = alpha_of_beta(5.5);
    }

    #[test]
    fn c_beta_closed_forms() {
        // int (1+v^2)^{-1} = pi and int (1+v^2)^{-2} = pi/2.
        let quad = QuadratureSpec::with_rel_tol(1e-10);
        let c2 = builtin(2.0).c_beta(quad).unwrap();
        assert_relative_eq!(c2, 1.0 / PI, max_relative = 1e-8);
        let c4 = builtin(4.0).c_beta(quad).unwrap();
        assert_relative_eq!(c4, 2.0 / PI, max_relative = 1e-8);
    }

    #[test]
    fn speed_mass_even_symmetry() {
        let ff = builtin(2.0);
        let quad = QuadratureSpec::with_rel_tol(1e-11);
        let half = ff.speed_mass_from(0.0, quad).unwrap();
        let full = ff.speed_mass(quad).unwrap();
        assert_relative_eq!(2.0 * half, full, max_relative = 1e-10);
    }

    #[test]
    fn sigma_alpha_at_beta_two_is_one_third() {
        let params = builtin(2.0).stable_params().unwrap();
        assert_abs_diff_eq!(params.alpha, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(params.sigma_alpha, 1.0 / 3.0, epsilon = 1e-10);
    }

    #[test]
    fn sigma_alpha_positive_across_betas() {
        for beta in [1.5, 2.0, 3.0, 4.0, 4.5] {
            let params = builtin(beta).stable_params().unwrap();
            assert!(params.sigma_alpha > 0.0, "sigma <= 0 at beta = {beta}");
            assert!(params.c_beta > 0.0);
        }
    }

    #[test]
    fn sigma_alpha_frozen_values() {
        // Independently computed with 50-digit arithmetic.
        let s4 = builtin(4.0).stable_params().unwrap();
        assert_relative_eq!(s4.sigma_alpha, 0.600_251_511_273_129_1, max_relative = 1e-8);
        let s15 = builtin(1.5).stable_params().unwrap();
        assert_relative_eq!(s15.sigma_alpha, 0.208_476_618_932_157_9, max_relative = 1e-8);
        let s35 = builtin(3.5).stable_params().unwrap();
        assert_relative_eq!(s35.sigma_alpha, 0.508_506_509_001_208_8, max_relative = 1e-8);
    }

    #[test]
    fn stable_params_roundtrip_from_alpha_sigma() {
        let p = builtin(2.0).stable_params().unwrap();
        let q = StableParams::from_alpha_sigma(p.alpha, p.sigma_alpha);
        assert_relative_eq!(q.c_beta, p.c_beta, max_relative = 1e-8);
    }

    #[test]
    fn constants_are_deterministic() {
        let ff = builtin(2.7);
        let a = ff.stable_params().unwrap();
        let b = ff.stable_params().unwrap();
        assert_eq!(a.sigma_alpha.to_bits(), b.sigma_alpha.to_bits());
        assert_eq!(a.c_beta.to_bits(), b.c_beta.to_bits());
    }

    #[test]
    fn scale_function_closed_form() {
        let ff = builtin(2.0);
        // s(v) = v + v^3/3 at beta = 2.
        assert_relative_eq!(ff.scale_function(1.0), 4.0 / 3.0, max_relative = 1e-10);
        assert_eq!(ff.scale_function(0.0), 0.0);
        assert_abs_diff_eq!(ff.speed_density(0.0), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn scale_function_asymptotic() {
        let ff = builtin(2.0);
        let v = 100.0_f64;
        let leading = v.powf(ff.beta() + 1.0) / (ff.beta() + 1.0);
        assert!((ff.scale_function(v) / leading - 1.0).abs() < 0.01);
    }

    #[test]
    fn inverse_scale_closed_form() {
        let ff = builtin(2.0);
        assert_relative_eq!(ff.inverse_scale(4.0 / 3.0).unwrap(), 1.0, max_relative = 1e-10);
        assert_eq!(ff.inverse_scale(0.0).unwrap(), 0.0);
    }

    #[test]
    fn psi_and_phi_at_origin() {
        let ff = builtin(2.0);
        assert_relative_eq!(ff.psi(0.0).unwrap(), 1.0, max_relative = 1e-12);
        assert_eq!(ff.phi_coeff(0.0).unwrap(), 0.0);
    }

    #[test]
    fn phi_coeff_tail_exponent() {
        let ff = builtin(2.0);
        let beta = ff.beta();
        let expo = (1.0 - 2.0 * beta) / (beta + 1.0);
        let w = 1e6;
        let leading = ((beta + 1.0) * w).powf(expo);
        assert!(
            (ff.phi_coeff(w).unwrap() / leading - 1.0).abs() < 0.02,
            "phi tail off: {} vs {}",
            ff.phi_coeff(w).unwrap(),
            leading
        );
    }

    #[test]
    fn kac_moments_closed_forms() {
        // At beta = 2, v = 1: down = pi/3 + 1/6 + ln(2)/3 and
        // up = pi - 1/6 - ln(2)/3, both verified against 50-digit
        // quadrature.
        let ff = builtin(2.0);
        let down = ff.kac_hitting_moment_down(1.0).unwrap();
        assert_relative_eq!(down, 1.444_913_278_049_912_8, max_relative = 1e-8);
        let up = ff.kac_hitting_moment_up(1.0).unwrap();
        assert_relative_eq!(up, 2.743_876_926_736_478_1, max_relative = 1e-8);
    }

    #[test]
    fn kac_moments_limits_and_monotonicity() {
        let ff = builtin(2.0);
        assert!(ff.kac_hitting_moment_down(1e-6).unwrap() < 1e-5);
        assert!(ff.kac_hitting_moment_up(1e-6).unwrap() < 1e-5);
        assert!(
            ff.kac_hitting_moment_down(2.0).unwrap() > ff.kac_hitting_moment_down(1.0).unwrap()
        );
        // Upward moment is dominated by s(v) * total speed mass.
        let bound = ff.scale_function(1.0)
            * ff.speed_mass(QuadratureSpec::with_rel_tol(1e-9)).unwrap();
        assert!(ff.kac_hitting_moment_up(1.0).unwrap() <= bound);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn force_odd_and_bounded(beta in 1.01f64..4.99, v in -50.0f64..50.0) {
            let ff = builtin(beta);
            prop_assert!((ff.force(v) + ff.force(-v)).abs() < 1e-12);
            prop_assert!(ff.force(v).abs() <= ff.lipschitz_bound() * 1.0 + 1e-12);
            prop_assert!(ff.force(v).abs() <= ff.lipschitz_bound() * v.abs() + 1e-12);
        }

        #[test]
        fn scale_odd_and_increasing(beta in 1.01f64..4.99, v in 0.01f64..5.0) {
            let ff = builtin(beta);
            let s = ff.scale_function(v);
            prop_assert!(s > 0.0);
            prop_assert!((ff.scale_function(-v) + s).abs() < 1e-10 * s.abs().max(1.0));
            prop_assert!(ff.scale_function(v * 1.1) > s);
        }

        #[test]
        fn inverse_scale_roundtrip(beta in 1.01f64..4.99, w in -50.0f64..50.0) {
            let ff = builtin(beta);
            let v = ff.inverse_scale(w).unwrap();
            prop_assert!((ff.scale_function(v) - w).abs() <= 1e-10 * w.abs().max(1.0));
        }

        #[test]
        fn speed_density_even_positive(beta in 1.01f64..4.99, v in -100.0f64..100.0) {
            let ff = builtin(beta);
            prop_assert!(ff.speed_density(v) > 0.0);
            prop_assert!((ff.speed_density(v) - ff.speed_density(-v)).abs() < 1e-14);
        }
    }
}
