//! Information cost of a swarm configuration.
//!
//! The cost is `I = w·κ_total − ε`, where `κ_total` sums the pairwise angular
//! overlap of the spacecraft FOV intervals `(θ − ν, θ + ν)` and `ε` is the
//! share of POIs seen by at least one spacecraft. Lower is better.

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{visible, ConeFov, Vector3};
use crate::rng::rng_from_seed;
use crate::sampling::{PoiSet, UncertaintyEllipsoid};
use crate::scalar::{wrap_angle, Scalar};

/// Terminal position and camera orientation of one spacecraft.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpacecraftPose<T> {
    pub position: Vector3<T>,
    /// Angular position θ, kept in `[0, 2π)`.
    pub theta: T,
    /// Angular half-width ν of the overlap interval.
    pub nu: T,
    /// Full camera aperture φ.
    pub phi: T,
}

impl<T: Scalar> SpacecraftPose<T> {
    pub fn new(position: Vector3<T>, theta: T, nu: T, phi: T) -> Self {
        Self {
            position,
            theta: wrap_angle(theta),
            nu,
            phi,
        }
    }

    /// Pose with ν = φ/2.
    pub fn with_default_nu(position: Vector3<T>, theta: T, phi: T) -> Self {
        Self::new(position, theta, phi / T::lit(2.0), phi)
    }

    pub fn fov(&self, center: Vector3<T>) -> Result<ConeFov<T>> {
        ConeFov::new(self.position, center, self.phi, self.theta, self.nu)
    }
}

/// A swarm of `N ≥ 1` spacecraft observing one ellipsoid.
#[derive(Clone, Debug, PartialEq)]
pub struct SwarmConfig<T> {
    pub spacecraft: Vec<SpacecraftPose<T>>,
    pub ellipsoid: UncertaintyEllipsoid<T>,
}

impl<T: Scalar> SwarmConfig<T> {
    pub fn new(
        spacecraft: Vec<SpacecraftPose<T>>,
        ellipsoid: UncertaintyEllipsoid<T>,
    ) -> Result<Self> {
        let s = Self {
            spacecraft,
            ellipsoid,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.spacecraft.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spacecraft.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.spacecraft.is_empty() {
            return Err(Error::Empty("swarm needs at least one spacecraft".into()));
        }
        self.ellipsoid.validate()?;
        self.fovs().map(|_| ())
    }

    /// One cone per spacecraft, in swarm order.
    pub fn fovs(&self) -> Result<Vec<ConeFov<T>>> {
        self.spacecraft
            .iter()
            .map(|p| p.fov(self.ellipsoid.center))
            .collect()
    }
}

/// How the coverage term enters the cost.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpsilonMode {
    /// Percentage of POIs seen, 0–100.
    #[default]
    Percentage,
    /// Raw number of POIs seen.
    Count,
}

/// Tunables of the information cost.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CostOptions<T> {
    /// Offset applied to θ_j when two orientations coincide exactly.
    pub identical_theta_delta: T,
    /// Weight `w` on `κ_total`.
    pub kappa_weight: T,
    pub epsilon_mode: EpsilonMode,
}

impl<T: Scalar> Default for CostOptions<T> {
    fn default() -> Self {
        Self {
            identical_theta_delta: T::lit(1e-6),
            kappa_weight: T::one(),
            epsilon_mode: EpsilonMode::Percentage,
        }
    }
}

/// Result of one cost evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct CostBreakdown<T> {
    /// Sum of pairwise overlaps, radians.
    pub kappa_total: T,
    pub kappa_weight: T,
    /// Coverage term ε (percentage or count, per [`EpsilonMode`]).
    pub epsilon_term: T,
    /// Coverage percentage regardless of mode.
    pub coverage_pct: T,
    /// `kappa_weight·kappa_total − epsilon_term`.
    pub information_cost: T,
    /// Indices of POIs visible to at least one spacecraft, ascending.
    pub visible_poi_indices: Vec<usize>,
    pub n_pois: usize,
}

/// Serialised form of a [`CostBreakdown`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostRecord {
    pub kappa_total: f64,
    pub epsilon_pct: f64,
    pub info_cost: f64,
    pub visible_count: usize,
    pub n_pois: usize,
}

impl<T: Scalar> CostBreakdown<T> {
    pub fn visible_count(&self) -> usize {
        self.visible_poi_indices.len()
    }

    pub fn to_record(&self) -> CostRecord {
        CostRecord {
            kappa_total: self.kappa_total.to_f64_lossy(),
            epsilon_pct: self.coverage_pct.to_f64_lossy(),
            info_cost: self.information_cost.to_f64_lossy(),
            visible_count: self.visible_count(),
            n_pois: self.n_pois,
        }
    }
}

/// FOV interval `(θ − ν, θ + ν)`, not wrapped.
pub fn fov_interval<T: Scalar>(pose: &SpacecraftPose<T>) -> (T, T) {
    (pose.theta - pose.nu, pose.theta + pose.nu)
}

#[inline]
fn interval_overlap<T: Scalar>((s_i, e_i): (T, T), (s_j, e_j): (T, T)) -> T {
    let start = s_i.max(s_j);
    let end = e_i.min(e_j);
    (end - start).max(T::zero())
}

/// Circular overlap of two FOV arcs, in radians.
///
/// The first arc is rotated to be centred on zero and the second is placed at
/// the circular separation `Δ ∈ [0, π]`; the interval overlap is taken with the
/// second arc and with its copy one turn back, which covers arcs wider than a
/// half turn. Coincident orientations are separated by `delta` first.
pub fn pair_overlap<T: Scalar>(
    pose_i: &SpacecraftPose<T>,
    pose_j: &SpacecraftPose<T>,
    delta: T,
) -> T {
    // fixed argument order keeps the result bit-symmetric
    let (pose_i, pose_j) = if pose_j.nu < pose_i.nu {
        (pose_j, pose_i)
    } else {
        (pose_i, pose_j)
    };
    let tau = T::TAU();
    let diff = (pose_i.theta - pose_j.theta).abs() % tau;
    let mut sep = diff.min(tau - diff);
    if sep == T::zero() {
        sep = delta;
    }
    let a = (-pose_i.nu, pose_i.nu);
    let near = interval_overlap(a, (sep - pose_j.nu, sep + pose_j.nu));
    let far = interval_overlap(a, (sep - tau - pose_j.nu, sep - tau + pose_j.nu));
    near + far
}

/// Sum of [`pair_overlap`] over unordered pairs.
pub fn kappa_total<T: Scalar>(poses: &[SpacecraftPose<T>], delta: T) -> T {
    let mut total = T::zero();
    for (i, a) in poses.iter().enumerate() {
        for b in &poses[i + 1..] {
            total += pair_overlap(a, b, delta);
        }
    }
    total
}

/// Coverage of a POI set: `(visible indices, percentage)`.
pub fn coverage<T: Scalar>(swarm: &SwarmConfig<T>, pois: &PoiSet<T>) -> Result<(Vec<usize>, T)> {
    if pois.is_empty() {
        return Err(Error::Empty("POI set is empty".into()));
    }
    let fovs = swarm.fovs()?;
    let center = swarm.ellipsoid.center;
    let seen: Vec<usize> = pois
        .points
        .iter()
        .enumerate()
        .filter(|(_, &p)| fovs.iter().any(|f| visible(p, f, center)))
        .map(|(i, _)| i)
        .collect();
    let pct =
        T::lit(100.0) * T::from_usize(seen.len()).unwrap() / T::from_usize(pois.len()).unwrap();
    Ok((seen, pct))
}

/// Evaluates `I = w·κ_total − ε`.
pub fn information_cost<T: Scalar>(
    swarm: &SwarmConfig<T>,
    pois: &PoiSet<T>,
    opts: &CostOptions<T>,
) -> Result<CostBreakdown<T>> {
    if swarm.is_empty() {
        return Err(Error::Empty("swarm needs at least one spacecraft".into()));
    }
    let (visible_poi_indices, coverage_pct) = coverage(swarm, pois)?;
    let kappa = kappa_total(&swarm.spacecraft, opts.identical_theta_delta);
    let epsilon_term = match opts.epsilon_mode {
        EpsilonMode::Percentage => coverage_pct,
        EpsilonMode::Count => T::from_usize(visible_poi_indices.len()).unwrap(),
    };
    Ok(CostBreakdown {
        kappa_total: kappa,
        kappa_weight: opts.kappa_weight,
        epsilon_term,
        coverage_pct,
        information_cost: opts.kappa_weight * kappa - epsilon_term,
        visible_poi_indices,
        n_pois: pois.len(),
    })
}

/// Monte Carlo estimate of `E[I]` when every spacecraft position carries
/// isotropic Gaussian noise of standard deviation `position_stddev`.
///
/// θ is not perturbed. The draws come from the ChaCha8 stream for `seed`, so
/// repeated calls with the same seed use common random numbers.
pub fn expected_information_cost<T: Scalar>(
    swarm: &SwarmConfig<T>,
    pois: &PoiSet<T>,
    position_stddev: T,
    n_samples: usize,
    seed: u64,
    opts: &CostOptions<T>,
) -> Result<T> {
    if n_samples == 0 {
        return Err(Error::InvalidParameter(
            "n_samples must be at least 1".into(),
        ));
    }
    if !(position_stddev >= T::zero()) || !position_stddev.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "position standard deviation must be finite and non-negative, got {position_stddev}"
        )));
    }
    let mut rng = rng_from_seed(seed);
    let mut perturbed = swarm.clone();
    let mut mean = T::zero();
    for k in 0..n_samples {
        for (dst, src) in perturbed.spacecraft.iter_mut().zip(&swarm.spacecraft) {
            let mut draw = || T::lit(rng.sample::<f64, _>(StandardNormal)) * position_stddev;
            let noise = Vector3::new(draw(), draw(), draw());
            dst.position = src.position + noise;
        }
        let cost = information_cost(&perturbed, pois, opts)?.information_cost;
        // running mean is exact when every sample is equal
        mean += (cost - mean) / T::from_usize(k + 1).unwrap();
    }
    Ok(mean)
}
