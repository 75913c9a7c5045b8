//! Uniform sampling of points of interest inside an uncertainty ellipsoid.

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vector3;
use crate::rng::rng_from_seed;
use crate::scalar::Scalar;

/// Axis-aligned ellipsoid. Equal radii give an uncertainty sphere.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyEllipsoid<T> {
    pub center: Vector3<T>,
    pub radii: Vector3<T>,
}

impl<T: Scalar> UncertaintyEllipsoid<T> {
    pub fn new(center: Vector3<T>, radii: Vector3<T>) -> Result<Self> {
        let e = Self { center, radii };
        e.validate()?;
        Ok(e)
    }

    pub fn sphere(center: Vector3<T>, radius: T) -> Result<Self> {
        Self::new(center, Vector3::new(radius, radius, radius))
    }

    pub fn validate(&self) -> Result<()> {
        if !self.center.is_finite() {
            return Err(Error::InvalidParameter(
                "ellipsoid centre must be finite".into(),
            ));
        }
        let r = self.radii;
        if !(r.x > T::zero() && r.y > T::zero() && r.z > T::zero()) || !r.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "ellipsoid radii must be positive and finite, got ({}, {}, {})",
                r.x, r.y, r.z
            )));
        }
        Ok(())
    }

    /// Normalised quadratic form; `≤ 1` inside.
    pub fn level(&self, p: Vector3<T>) -> T {
        let q = p - self.center;
        let (a, b, c) = (q.x / self.radii.x, q.y / self.radii.y, q.z / self.radii.z);
        a * a + b * b + c * c
    }

    pub fn contains(&self, p: Vector3<T>) -> bool {
        self.level(p) <= T::one()
    }
}

/// Ordered POI list together with the seed and ellipsoid that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct PoiSet<T> {
    pub points: Vec<Vector3<T>>,
    pub seed: u64,
    pub ellipsoid: UncertaintyEllipsoid<T>,
}

impl<T> PoiSet<T> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Draws `n` points uniformly by volume inside `ellipsoid`.
///
/// Each point takes a direction from a normalised standard-normal triple and
/// a radius `u^(1/3)` with `u ~ U[0, 1)`, both from the ChaCha8 stream seeded
/// by `seed`; the unit-ball point is then stretched by the radii and shifted
/// to the centre. Draws happen in `f64` and are converted to `T` afterwards.
pub fn sample_pois<T: Scalar>(
    ellipsoid: &UncertaintyEllipsoid<T>,
    n: usize,
    seed: u64,
) -> Result<PoiSet<T>> {
    if n == 0 {
        return Err(Error::Empty("POI count must be at least 1".into()));
    }
    ellipsoid.validate()?;
    let mut rng = rng_from_seed(seed);
    let points = (0..n)
        .map(|_| {
            let dir = loop {
                let g = Vector3::<f64>::new(
                    rng.sample(StandardNormal),
                    rng.sample(StandardNormal),
                    rng.sample(StandardNormal),
                );
                if let Some(d) = g.normalized() {
                    break d;
                }
            };
            let u: f64 = rng.random();
            let unit = dir * u.cbrt();
            let unit = Vector3::new(T::lit(unit.x), T::lit(unit.y), T::lit(unit.z));
            ellipsoid.center + unit.component_mul(ellipsoid.radii)
        })
        .collect();
    Ok(PoiSet {
        points,
        seed,
        ellipsoid: *ellipsoid,
    })
}
