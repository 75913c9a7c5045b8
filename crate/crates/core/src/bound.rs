//! Encounter probability bound from hierarchical stochastic contraction.
//!
//! With `B(t) = E[V(0)]·e^{−2α_s t} + c_s + e^{−2α_s t}·ζ̄_I(t)` the failure
//! probability `P[‖x − x_d‖ ≥ D]` is bounded by `B(t) / (D·m̲)` and the
//! probability of ending within `D` of the target is at least
//! `(D·m̲ − B(T)) / (D·m̲)`, where
//!
//! * `c_s = (m̄_c·ḡ·ε_c)² / (2·α_s·γ_c)`
//! * `ζ̄_I(t) = λ·m̄_e·ℓ̄·∫₀ᵗ e^{2α_s τ}·ζ̄(τ) dτ`
//! * `m̲ = m̲_c + λ·m̲_e`
//!
//! `E[V(0)]` is supplied by the caller. The bound is only valid when the
//! rate conditions checked by [`check_rate_matrix`] hold.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vector3;
use crate::sampling::UncertaintyEllipsoid;
use crate::scalar::Scalar;

/// Scalar constants of the contraction bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContractionParams<T> {
    /// Controller contraction rate α_c.
    pub alpha_c: T,
    /// Estimator contraction rate α_e.
    pub alpha_e: T,
    pub m_c_lower: T,
    pub m_c_upper: T,
    pub m_e_lower: T,
    pub m_e_upper: T,
    /// Control-policy approximation error bound.
    pub eps_c: T,
    /// Estimation-gain approximation error bound.
    pub eps_e: T,
    pub g_bar: T,
    pub u_bar: T,
    pub h_bar: T,
    /// Bound on the squared Frobenius norm of the estimation gain.
    pub ell_bar: T,
    pub gamma_c: T,
    pub lambda: T,
    pub alpha_s: T,
}

impl<T: Scalar> ContractionParams<T> {
    /// Checks signs and metric orderings. Does not check the rate conditions.
    pub fn validate(&self) -> Result<()> {
        let strictly_positive = [
            ("alpha_c", self.alpha_c),
            ("alpha_e", self.alpha_e),
            ("m_c_lower", self.m_c_lower),
            ("m_c_upper", self.m_c_upper),
            ("m_e_lower", self.m_e_lower),
            ("m_e_upper", self.m_e_upper),
            ("gamma_c", self.gamma_c),
            ("lambda", self.lambda),
            ("alpha_s", self.alpha_s),
        ];
        for (name, v) in strictly_positive {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        let non_negative = [
            ("eps_c", self.eps_c),
            ("eps_e", self.eps_e),
            ("g_bar", self.g_bar),
            ("u_bar", self.u_bar),
            ("h_bar", self.h_bar),
            ("ell_bar", self.ell_bar),
        ];
        for (name, v) in non_negative {
            if !(v >= T::zero()) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be non-negative and finite, got {v}"
                )));
            }
        }
        if self.m_c_lower > self.m_c_upper {
            return Err(Error::InvalidParameter(
                "m_c_lower exceeds m_c_upper".into(),
            ));
        }
        if self.m_e_lower > self.m_e_upper {
            return Err(Error::InvalidParameter(
                "m_e_lower exceeds m_e_upper".into(),
            ));
        }
        Ok(())
    }

    /// `c_s = (m̄_c·ḡ·ε_c)² / (2·α_s·γ_c)`.
    pub fn c_s(&self) -> T {
        let b = self.m_c_upper * self.g_bar * self.eps_c;
        b * b / (T::lit(2.0) * self.alpha_s * self.gamma_c)
    }

    /// `m̲ = m̲_c + λ·m̲_e`.
    pub fn m_lower_combined(&self) -> T {
        self.m_c_lower + self.lambda * self.m_e_lower
    }
}

/// Which rate condition failed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateViolation {
    /// `α_c·m̲_c − γ_c/2 ≤ 0`.
    ControllerRate,
    /// `α_e·m̲_e − m̄_e·ε_e·h̄ ≤ 0`.
    EstimatorRate,
    /// The shifted 2×2 rate matrix is not negative semidefinite.
    CoupledRate,
}

impl std::fmt::Display for RateViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::ControllerRate => "controller rate alpha_c*m_c_lower - gamma_c/2 must be positive",
            Self::EstimatorRate => "estimator rate alpha_e*m_e_lower - m_e_upper*eps_e*h_bar must be positive",
            Self::CoupledRate => {
                "coupled rate matrix [[-2a_c, m_c_upper*g*u], [m_c_upper*g*u, -2*lambda*a_e]] + 2*alpha_s*diag(m_c_upper, lambda*m_e_upper) must be negative semidefinite"
            }
        })
    }
}

/// Outcome of [`check_rate_matrix`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateMatrixCheck<T> {
    pub feasible: bool,
    pub alpha_bar_c: T,
    pub alpha_bar_e: T,
    /// The shifted matrix whose negative semidefiniteness is required.
    pub shifted: [[T; 2]; 2],
    pub violation: Option<RateViolation>,
}

/// Evaluates the rate conditions that make the bound hold.
///
/// `ᾱ_c = α_c·m̲_c − γ_c/2` and `ᾱ_e = α_e·m̲_e − m̄_e·ε_e·h̄` must be positive
/// and `[[−2ᾱ_c, m̄_c·ḡ·ū], [m̄_c·ḡ·ū, −2λᾱ_e]] + 2α_s·diag(m̄_c, λ·m̄_e)` must
/// be negative semidefinite (trace ≤ 0 and determinant ≥ 0).
pub fn check_rate_matrix<T: Scalar>(params: &ContractionParams<T>) -> Result<RateMatrixCheck<T>> {
    params.validate()?;
    let two = T::lit(2.0);
    let p = params;
    let alpha_bar_c = p.alpha_c * p.m_c_lower - p.gamma_c / two;
    let alpha_bar_e = p.alpha_e * p.m_e_lower - p.m_e_upper * p.eps_e * p.h_bar;
    let off = p.m_c_upper * p.g_bar * p.u_bar;
    let a = -two * alpha_bar_c + two * p.alpha_s * p.m_c_upper;
    let d = -two * p.lambda * alpha_bar_e + two * p.alpha_s * p.lambda * p.m_e_upper;
    let shifted = [[a, off], [off, d]];

    let violation = if !(alpha_bar_c > T::zero()) {
        Some(RateViolation::ControllerRate)
    } else if !(alpha_bar_e > T::zero()) {
        Some(RateViolation::EstimatorRate)
    } else if !(a + d <= T::zero() && a * d - off * off >= T::zero()) {
        Some(RateViolation::CoupledRate)
    } else {
        None
    };
    Ok(RateMatrixCheck {
        feasible: violation.is_none(),
        alpha_bar_c,
        alpha_bar_e,
        shifted,
        violation,
    })
}

/// Piecewise-linear upper bound ζ̄(t) on the squared noise intensity.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseProfile<T> {
    samples: Vec<(T, T)>,
}

impl<T: Scalar> NoiseProfile<T> {
    /// `samples` are `(t, ζ̄)` pairs starting at `t = 0` with strictly increasing `t`.
    pub fn new(samples: Vec<(T, T)>) -> Result<Self> {
        let Some(&(t0, _)) = samples.first() else {
            return Err(Error::Empty("noise profile has no samples".into()));
        };
        if t0 != T::zero() {
            return Err(Error::InvalidParameter(format!(
                "noise profile must start at t = 0, got {t0}"
            )));
        }
        for (i, &(t, z)) in samples.iter().enumerate() {
            if !t.is_finite() || !z.is_finite() || z < T::zero() {
                return Err(Error::InvalidParameter(format!(
                    "noise sample {i} must have finite t and finite non-negative zeta, got ({t}, {z})"
                )));
            }
            if i > 0 && t <= samples[i - 1].0 {
                return Err(Error::InvalidParameter(format!(
                    "noise sample times must increase strictly (sample {i})"
                )));
            }
        }
        Ok(Self { samples })
    }

    /// Constant profile on a uniform grid of `n_intervals` steps over `[0, t_end]`.
    pub fn constant(value: T, t_end: T, n_intervals: usize) -> Result<Self> {
        Self::from_fn(t_end, n_intervals, |_| value)
    }

    /// Samples `f` on a uniform grid of `n_intervals` steps over `[0, t_end]`.
    pub fn from_fn(t_end: T, n_intervals: usize, f: impl Fn(T) -> T) -> Result<Self> {
        if n_intervals == 0 || !(t_end > T::zero()) {
            return Err(Error::InvalidParameter(
                "grid needs positive span and at least one interval".into(),
            ));
        }
        let n = T::from_usize(n_intervals).unwrap();
        Self::new(
            (0..=n_intervals)
                .map(|k| {
                    let t = if k == n_intervals {
                        t_end
                    } else {
                        t_end * T::from_usize(k).unwrap() / n
                    };
                    (t, f(t))
                })
                .collect(),
        )
    }

    pub fn samples(&self) -> &[(T, T)] {
        &self.samples
    }

    pub fn end_time(&self) -> T {
        self.samples.last().unwrap().0
    }

    /// Linear interpolation of ζ̄ at `t`.
    pub fn value_at(&self, t: T) -> Result<T> {
        self.check_span(t)?;
        let idx = self.samples.partition_point(|&(ti, _)| ti <= t);
        if idx == self.samples.len() {
            return Ok(self.samples[idx - 1].1);
        }
        let (t0, z0) = self.samples[idx - 1];
        let (t1, z1) = self.samples[idx];
        Ok(z0 + (z1 - z0) * (t - t0) / (t1 - t0))
    }

    fn check_span(&self, t: T) -> Result<()> {
        if !(t >= T::zero()) || t > self.end_time() {
            return Err(Error::Extrapolation {
                t: t.to_f64_lossy(),
                end: self.end_time().to_f64_lossy(),
            });
        }
        Ok(())
    }
}

/// `ζ̄_I(t)` by trapezoidal quadrature over the profile nodes in `[0, t]`.
pub fn zeta_integral<T: Scalar>(
    t: T,
    params: &ContractionParams<T>,
    noise: &NoiseProfile<T>,
) -> Result<T> {
    noise.check_span(t)?;
    let rate = T::lit(2.0) * params.alpha_s;
    let integrand = |tau: T, z: T| (rate * tau).exp() * z;
    let half = T::lit(0.5);
    let mut acc = T::zero();
    let mut prev = None;
    for &(tk, zk) in noise.samples() {
        if tk > t {
            break;
        }
        if let Some((tp, fp)) = prev {
            acc += half * (tk - tp) * (fp + integrand(tk, zk));
        }
        prev = Some((tk, integrand(tk, zk)));
    }
    let (tp, fp) = prev.expect("profile starts at t = 0");
    if t > tp {
        acc += half * (t - tp) * (fp + integrand(t, noise.value_at(t)?));
    }
    Ok(params.lambda * params.m_e_upper * params.ell_bar * acc)
}

/// How the failure distance enters the denominator.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DenominatorMode {
    /// `D·m̲`.
    #[default]
    Linear,
    /// `D²·m̲`, the form a quadratic Lyapunov function gives under Markov's inequality.
    Squared,
}

/// Bound values at one `(D, t)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundResult<T> {
    /// Failure bound clamped to `[0, 1]`.
    pub failure_prob_upper: T,
    /// Success bound clamped to `[0, 1]`.
    pub success_prob_lower: T,
    pub failure_raw: T,
    pub success_raw: T,
    pub c_s: T,
    pub zeta_integral: T,
    pub m_lower_combined: T,
    /// `B(t)`, the numerator shared by both bounds.
    pub numerator: T,
}

/// Serialised form of a [`BoundResult`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundRecord {
    pub distance: f64,
    pub time: f64,
    pub failure_prob_upper: f64,
    pub success_prob_lower: f64,
    pub failure_raw: f64,
    pub success_raw: f64,
    pub c_s: f64,
    pub zeta_integral: f64,
    pub m_lower_combined: f64,
    pub numerator: f64,
}

fn clamp_unit<T: Scalar>(x: T) -> T {
    x.max(T::zero()).min(T::one())
}

/// Evaluator tying validated parameters to a noise history.
#[derive(Clone, Debug)]
pub struct EncounterBound<'a, T> {
    params: &'a ContractionParams<T>,
    noise: &'a NoiseProfile<T>,
    denominator: DenominatorMode,
}

impl<'a, T: Scalar> EncounterBound<'a, T> {
    /// Fails with [`Error::Infeasible`] naming the violated rate condition.
    pub fn new(params: &'a ContractionParams<T>, noise: &'a NoiseProfile<T>) -> Result<Self> {
        let check = check_rate_matrix(params)?;
        if let Some(v) = check.violation {
            return Err(Error::Infeasible(v.to_string()));
        }
        Ok(Self {
            params,
            noise,
            denominator: DenominatorMode::Linear,
        })
    }

    pub fn with_denominator(mut self, mode: DenominatorMode) -> Self {
        self.denominator = mode;
        self
    }

    /// `B(t)`.
    pub fn numerator(&self, t: T, v0_expected: T) -> Result<T> {
        if !(v0_expected >= T::zero()) || !v0_expected.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "E[V(0)] must be finite and non-negative, got {v0_expected}"
            )));
        }
        let decay = (-T::lit(2.0) * self.params.alpha_s * t).exp();
        let zeta = zeta_integral(t, self.params, self.noise)?;
        Ok(v0_expected * decay + self.params.c_s() + decay * zeta)
    }

    fn denominator(&self, distance: T) -> Result<T> {
        if !(distance > T::zero()) || !distance.is_finite() {
            return Err(Error::Domain(format!(
                "failure distance must be positive, got {distance}"
            )));
        }
        let m = self.params.m_lower_combined();
        Ok(match self.denominator {
            DenominatorMode::Linear => distance * m,
            DenominatorMode::Squared => distance * distance * m,
        })
    }

    pub fn evaluate(&self, distance: T, t: T, v0_expected: T) -> Result<BoundResult<T>> {
        let den = self.denominator(distance)?;
        let numerator = self.numerator(t, v0_expected)?;
        let failure_raw = numerator / den;
        let success_raw = T::one() - failure_raw;
        Ok(BoundResult {
            failure_prob_upper: clamp_unit(failure_raw),
            success_prob_lower: clamp_unit(success_raw),
            failure_raw,
            success_raw,
            c_s: self.params.c_s(),
            zeta_integral: zeta_integral(t, self.params, self.noise)?,
            m_lower_combined: self.params.m_lower_combined(),
            numerator,
        })
    }

    /// Smallest `D` whose success bound at time `t` reaches `p_target`.
    pub fn radius_for_success_probability(&self, p_target: T, t: T, v0_expected: T) -> Result<T> {
        if !(p_target > T::zero()) || !p_target.is_finite() {
            return Err(Error::Domain(format!(
                "target probability must lie in (0, 1), got {p_target}"
            )));
        }
        if p_target >= T::one() {
            return Err(Error::Unattainable(
                "the bound never certifies probability 1".into(),
            ));
        }
        let b = self.numerator(t, v0_expected)?;
        let scaled = b / ((T::one() - p_target) * self.params.m_lower_combined());
        Ok(match self.denominator {
            DenominatorMode::Linear => scaled,
            DenominatorMode::Squared => scaled.sqrt(),
        })
    }
}

/// Failure bound, clamped to `[0, 1]`.
pub fn failure_probability_bound<T: Scalar>(
    distance: T,
    t: T,
    v0_expected: T,
    params: &ContractionParams<T>,
    noise: &NoiseProfile<T>,
) -> Result<T> {
    Ok(EncounterBound::new(params, noise)?
        .evaluate(distance, t, v0_expected)?
        .failure_prob_upper)
}

/// Success bound at terminal time `t_final`, clamped to `[0, 1]`.
pub fn success_probability<T: Scalar>(
    distance: T,
    t_final: T,
    v0_expected: T,
    params: &ContractionParams<T>,
    noise: &NoiseProfile<T>,
) -> Result<T> {
    Ok(EncounterBound::new(params, noise)?
        .evaluate(distance, t_final, v0_expected)?
        .success_prob_lower)
}

pub fn radius_for_success_probability<T: Scalar>(
    p_target: T,
    t_final: T,
    v0_expected: T,
    params: &ContractionParams<T>,
    noise: &NoiseProfile<T>,
) -> Result<T> {
    EncounterBound::new(params, noise)?.radius_for_success_probability(
        p_target,
        t_final,
        v0_expected,
    )
}

/// Ellipsoid of the weighted norm `sqrt(Σ (p_i / w_i)²) ≤ D`, i.e. radii `D·w`.
pub fn ellipsoid_from_radius<T: Scalar>(
    center: Vector3<T>,
    distance: T,
    weights: Vector3<T>,
) -> Result<UncertaintyEllipsoid<T>> {
    UncertaintyEllipsoid::new(center, weights * distance)
}

/// Flat JSON configuration for bound evaluation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundConfig {
    pub schema_version: u32,
    pub alpha_c: f64,
    pub alpha_e: f64,
    pub m_c_lower: f64,
    pub m_c_upper: f64,
    pub m_e_lower: f64,
    pub m_e_upper: f64,
    pub eps_c: f64,
    pub eps_e: f64,
    pub g_bar: f64,
    pub u_bar: f64,
    pub h_bar: f64,
    pub ell_bar: f64,
    pub gamma_c: f64,
    pub lambda: f64,
    pub alpha_s: f64,
    /// `[t, zeta]` pairs.
    pub noise: Vec<[f64; 2]>,
    /// Failure distance `D`.
    #[serde(default)]
    pub distance: Option<f64>,
    /// Evaluation time, usually the terminal time `T`.
    pub time: f64,
    #[serde(default)]
    pub v0_expected: f64,
    #[serde(default)]
    pub denominator: DenominatorMode,
}

pub const BOUND_SCHEMA_VERSION: u32 = 1;

impl BoundConfig {
    pub fn params(&self) -> ContractionParams<f64> {
        ContractionParams {
            alpha_c: self.alpha_c,
            alpha_e: self.alpha_e,
            m_c_lower: self.m_c_lower,
            m_c_upper: self.m_c_upper,
            m_e_lower: self.m_e_lower,
            m_e_upper: self.m_e_upper,
            eps_c: self.eps_c,
            eps_e: self.eps_e,
            g_bar: self.g_bar,
            u_bar: self.u_bar,
            h_bar: self.h_bar,
            ell_bar: self.ell_bar,
            gamma_c: self.gamma_c,
            lambda: self.lambda,
            alpha_s: self.alpha_s,
        }
    }

    pub fn noise_profile(&self) -> Result<NoiseProfile<f64>> {
        NoiseProfile::new(self.noise.iter().map(|&[t, z]| (t, z)).collect())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if cfg.schema_version != BOUND_SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema_version {} (expected {BOUND_SCHEMA_VERSION})",
                cfg.schema_version
            )));
        }
        Ok(cfg)
    }
}

impl BoundRecord {
    pub fn new(distance: f64, time: f64, r: &BoundResult<f64>) -> Self {
        Self {
            distance,
            time,
            failure_prob_upper: r.failure_prob_upper,
            success_prob_lower: r.success_prob_lower,
            failure_raw: r.failure_raw,
            success_raw: r.success_raw,
            c_s: r.c_s,
            zeta_integral: r.zeta_integral,
            m_lower_combined: r.m_lower_combined,
            numerator: r.numerator,
        }
    }
}
