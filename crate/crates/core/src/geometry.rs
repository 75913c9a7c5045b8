//! Conal field-of-view geometry.
//!
//! A camera is modelled as a right circular cone whose apex sits at the
//! spacecraft position and whose axis points at the centre of the
//! uncertainty ellipsoid. A point of interest is visible when it lies inside
//! the forward nappe of the cone and in the half of the ellipsoid facing the
//! spacecraft.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{wrap_angle, Scalar};

/// A point or direction in three dimensions.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vector3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Scalar> Vector3<T> {
    pub const fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    pub fn zeros() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    pub fn from_array(a: [T; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn to_array(self) -> [T; 3] {
        [self.x, self.y, self.z]
    }

    #[inline]
    pub fn dot(self, other: Self) -> T {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    #[inline]
    pub fn norm_squared(self) -> T {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> T {
        self.norm_squared().sqrt()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Unit vector in the same direction, or `None` for a zero or non-finite vector.
    pub fn normalized(self) -> Option<Self> {
        let n = self.norm();
        if n > T::zero() && n.is_finite() {
            Some(self / n)
        } else {
            None
        }
    }

    /// Componentwise product.
    pub fn component_mul(self, other: Self) -> Self {
        Self::new(self.x * other.x, self.y * other.y, self.z * other.z)
    }

    pub fn map(self, f: impl Fn(T) -> T) -> Self {
        Self::new(f(self.x), f(self.y), f(self.z))
    }
}

impl<T: Scalar> Add for Vector3<T> {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        Self::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl<T: Scalar> AddAssign for Vector3<T> {
    #[inline]
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl<T: Scalar> Sub for Vector3<T> {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl<T: Scalar> Neg for Vector3<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

impl<T: Scalar> Mul<T> for Vector3<T> {
    type Output = Self;
    #[inline]
    fn mul(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }
}

impl<T: Scalar> Div<T> for Vector3<T> {
    type Output = Self;
    #[inline]
    fn div(self, s: T) -> Self {
        Self::new(self.x / s, self.y / s, self.z / s)
    }
}

/// Unit axis from the apex toward the ellipsoid centre.
pub fn cone_axis<T: Scalar>(apex: Vector3<T>, ellipsoid_center: Vector3<T>) -> Result<Vector3<T>> {
    (ellipsoid_center - apex).normalized().ok_or_else(|| {
        Error::DegenerateGeometry("cone apex coincides with the ellipsoid centre".into())
    })
}

/// Conal field of view of one spacecraft camera.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConeFov<T> {
    pub apex: Vector3<T>,
    /// Unit vector from the apex toward the ellipsoid centre.
    pub axis: Vector3<T>,
    /// Full aperture angle φ in radians.
    pub aperture_phi: T,
    /// Angular position θ in `[0, 2π)`, used by the overlap metric.
    pub angular_position_theta: T,
    /// Angular half-width ν, used by the overlap metric.
    pub angular_halfwidth_nu: T,
    tan_half_aperture: T,
}

impl<T: Scalar> ConeFov<T> {
    /// Builds a cone at `apex` aimed at `ellipsoid_center`. θ is wrapped into `[0, 2π)`.
    pub fn new(
        apex: Vector3<T>,
        ellipsoid_center: Vector3<T>,
        aperture_phi: T,
        theta: T,
        nu: T,
    ) -> Result<Self> {
        if !apex.is_finite() || !ellipsoid_center.is_finite() {
            return Err(Error::Domain("cone apex and centre must be finite".into()));
        }
        check_open_angle("aperture φ", aperture_phi)?;
        check_open_angle("half-width ν", nu)?;
        if !theta.is_finite() {
            return Err(Error::Domain("θ must be finite".into()));
        }
        let axis = cone_axis(apex, ellipsoid_center)?;
        Ok(Self {
            apex,
            axis,
            aperture_phi,
            angular_position_theta: wrap_angle(theta),
            angular_halfwidth_nu: nu,
            tan_half_aperture: (aperture_phi / T::lit(2.0)).tan(),
        })
    }

    /// Same as [`ConeFov::new`] with ν = φ/2.
    pub fn with_default_nu(
        apex: Vector3<T>,
        ellipsoid_center: Vector3<T>,
        aperture_phi: T,
        theta: T,
    ) -> Result<Self> {
        Self::new(
            apex,
            ellipsoid_center,
            aperture_phi,
            theta,
            aperture_phi / T::lit(2.0),
        )
    }

    #[inline]
    pub fn tan_half_aperture(&self) -> T {
        self.tan_half_aperture
    }
}

fn check_open_angle<T: Scalar>(name: &str, angle: T) -> Result<()> {
    if angle > T::zero() && angle < T::PI() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "{name} must lie in (0, π), got {angle}"
        )))
    }
}

/// Signed projection of `poi − apex` onto the cone axis.
#[inline]
pub fn axial_distance<T: Scalar>(poi: Vector3<T>, fov: &ConeFov<T>) -> T {
    (poi - fov.apex).dot(fov.axis)
}

/// Cone radius `d·tan(φ/2)` at axial distance `d ≥ 0`.
pub fn cone_radius_at<T: Scalar>(d: T, aperture_phi: T) -> Result<T> {
    if d < T::zero() || d.is_nan() {
        return Err(Error::Domain(format!(
            "axial distance must be non-negative, got {d}"
        )));
    }
    Ok(d * (aperture_phi / T::lit(2.0)).tan())
}

/// Distance from the POI to the cone axis line.
#[inline]
pub fn orthogonal_distance<T: Scalar>(poi: Vector3<T>, fov: &ConeFov<T>) -> T {
    let rel = poi - fov.apex;
    let d = rel.dot(fov.axis);
    (rel - fov.axis * d).norm()
}

/// Forward-nappe containment. Points on the cone surface count as inside,
/// points at or behind the apex never do.
#[inline]
pub fn in_fov<T: Scalar>(poi: Vector3<T>, fov: &ConeFov<T>) -> bool {
    let rel = poi - fov.apex;
    let d = rel.dot(fov.axis);
    if d <= T::zero() {
        return false;
    }
    let eps = (rel - fov.axis * d).norm();
    eps <= d * fov.tan_half_aperture
}

/// True when the POI lies on the spacecraft's side of the plane through the
/// centre whose normal points at the spacecraft. The plane itself is included.
pub fn in_near_hemisphere<T: Scalar>(
    poi: Vector3<T>,
    apex: Vector3<T>,
    center: Vector3<T>,
) -> Result<bool> {
    let normal = apex - center;
    if normal.norm_squared() == T::zero() {
        return Err(Error::DegenerateGeometry(
            "spacecraft at the ellipsoid centre has no facing hemisphere".into(),
        ));
    }
    Ok(near_side(poi, apex, center))
}

#[inline]
pub(crate) fn near_side<T: Scalar>(poi: Vector3<T>, apex: Vector3<T>, center: Vector3<T>) -> bool {
    (poi - center).dot(apex - center) >= T::zero()
}

/// In the cone and in the facing hemisphere.
#[inline]
pub fn visible<T: Scalar>(poi: Vector3<T>, fov: &ConeFov<T>, center: Vector3<T>) -> bool {
    in_fov(poi, fov) && near_side(poi, fov.apex, center)
}
