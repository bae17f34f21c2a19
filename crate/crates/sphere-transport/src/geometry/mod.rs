//! Points on the unit sphere, coordinate conversions and distances.
//!
//! Every point is carried in two equivalent forms: a Cartesian unit
//! 3-vector and (longitude, latitude) in radians measured from the
//! equator. Longitude lives in [-pi, pi] (branch cut at the date line,
//! with the convention that (-1, 0, 0) maps to +pi), latitude in
//! [-pi/2, pi/2]. At the poles the longitude is set to 0.

mod neighbors;
mod point_set;

pub use neighbors::{cap_indices, cap_neighbors, CapGrid, Neighborhood};
pub use point_set::{generate_phyllotaxis, load_point_set, save_point_set, PointFormat, PointSet};

use crate::error::{Error, Result};

/// A point on the unit sphere S².
///
/// Holds both the Cartesian unit vector and the (longitude, latitude)
/// pair; the two stay consistent to machine precision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpherePoint {
    xyz: [f64; 3],
    lambda: f64,
    theta: f64,
}

impl SpherePoint {
    /// Build a point from longitude `lambda` and latitude `theta` (radians).
    pub fn from_angles(lambda: f64, theta: f64) -> Result<Self> {
        if !(-std::f64::consts::PI..=std::f64::consts::PI).contains(&lambda)
            || !(-std::f64::consts::FRAC_PI_2..=std::f64::consts::FRAC_PI_2).contains(&theta)
        {
            return Err(Error::AngleOutOfRange { lambda, theta });
        }
        Ok(SpherePoint {
            xyz: spherical_to_cartesian_unchecked(lambda, theta),
            lambda,
            theta,
        })
    }

    /// Build a point from a Cartesian vector that must already be a unit
    /// vector within 1e-9; it is re-normalized to exact unit length.
    pub fn from_xyz(p: [f64; 3]) -> Result<Self> {
        let norm = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::NonUnitVector { norm });
        }
        let q = [p[0] / norm, p[1] / norm, p[2] / norm];
        let (lambda, theta) = angles_of(q);
        Ok(SpherePoint {
            xyz: q,
            lambda,
            theta,
        })
    }

    #[inline]
    pub fn xyz(&self) -> [f64; 3] {
        self.xyz
    }

    #[inline]
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    #[inline]
    pub fn theta(&self) -> f64 {
        self.theta
    }
}

#[inline]
fn spherical_to_cartesian_unchecked(lambda: f64, theta: f64) -> [f64; 3] {
    let (sin_l, cos_l) = lambda.sin_cos();
    let (sin_t, cos_t) = theta.sin_cos();
    [cos_l * cos_t, sin_l * cos_t, sin_t]
}

#[inline]
fn angles_of(p: [f64; 3]) -> (f64, f64) {
    let lambda = if p[0] == 0.0 && p[1] == 0.0 {
        0.0 // pole convention
    } else {
        p[1].atan2(p[0])
    };
    let theta = p[2].clamp(-1.0, 1.0).asin();
    (lambda, theta)
}

/// Convert (longitude, latitude) to a Cartesian unit vector:
/// x = cos(lambda) cos(theta), y = sin(lambda) cos(theta), z = sin(theta).
pub fn spherical_to_cartesian(lambda: f64, theta: f64) -> Result<[f64; 3]> {
    SpherePoint::from_angles(lambda, theta).map(|p| p.xyz)
}

/// Convert a Cartesian unit vector to (longitude, latitude).
///
/// The input must have unit norm within 1e-9. At the poles the longitude
/// is 0; on the negative x-axis it is +pi.
pub fn cartesian_to_spherical(p: [f64; 3]) -> Result<(f64, f64)> {
    SpherePoint::from_xyz(p).map(|q| (q.lambda, q.theta))
}

#[inline]
pub(crate) fn dot(p: [f64; 3], q: [f64; 3]) -> f64 {
    p[0] * q[0] + p[1] * q[1] + p[2] * q[2]
}

#[inline]
pub(crate) fn cross(p: [f64; 3], q: [f64; 3]) -> [f64; 3] {
    [
        p[1] * q[2] - p[2] * q[1],
        p[2] * q[0] - p[0] * q[2],
        p[0] * q[1] - p[1] * q[0],
    ]
}

#[inline]
pub(crate) fn norm(p: [f64; 3]) -> f64 {
    dot(p, p).sqrt()
}

/// Geodesic (great-circle) distance in radians, in [0, pi].
///
/// Computed as atan2(|p x q|, p . q), which stays accurate near 0 and pi
/// where the bare arccos of the dot product loses digits.
pub fn geodesic_distance(p: &SpherePoint, q: &SpherePoint) -> f64 {
    geodesic_distance_xyz(p.xyz, q.xyz)
}

#[inline]
pub(crate) fn geodesic_distance_xyz(p: [f64; 3], q: [f64; 3]) -> f64 {
    norm(cross(p, q)).atan2(dot(p, q))
}

/// Chordal (straight-line) distance |p - q| in [0, 2].
pub fn chordal_distance(p: &SpherePoint, q: &SpherePoint) -> f64 {
    chordal_distance_xyz(p.xyz, q.xyz)
}

#[inline]
pub(crate) fn chordal_distance_xyz(p: [f64; 3], q: [f64; 3]) -> f64 {
    norm([p[0] - q[0], p[1] - q[1], p[2] - q[2]])
}
