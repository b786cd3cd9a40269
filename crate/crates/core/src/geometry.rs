//! Angle geometry: true azimuth/elevation between two points, the two
//! measurement planes each UAV contributes, point-plane distances and the
//! Jacobian of the angle functions with respect to the source position.
//!
//! Conventions: azimuth is measured in the horizontal plane from the +x axis
//! and lives in (-pi, pi]; elevation is measured from the horizontal plane and
//! lives strictly in (-pi/2, pi/2). Both angles describe the direction from
//! the source towards the UAV.

use std::f64::consts::{FRAC_PI_2, PI};
use std::ops::{Add, Mul, Sub};

use nalgebra::{Matrix2x3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point in 3-D Cartesian space, meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const ORIGIN: Point3 = Point3 {
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Point3 { x, y, z }
    }

    pub fn from_vector(v: &Vector3<f64>) -> Self {
        Point3::new(v.x, v.y, v.z)
    }

    pub fn to_vector(self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn norm_squared(&self) -> f64 {
        self.x * self.x + self.y * self.y + self.z * self.z
    }

    pub fn distance(&self, other: &Point3) -> f64 {
        (*self - *other).norm()
    }
}

impl Add for Point3 {
    type Output = Point3;
    fn add(self, rhs: Point3) -> Point3 {
        Point3::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl Sub for Point3 {
    type Output = Point3;
    fn sub(self, rhs: Point3) -> Point3 {
        Point3::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl Mul<f64> for Point3 {
    type Output = Point3;
    fn mul(self, rhs: f64) -> Point3 {
        Point3::new(self.x * rhs, self.y * rhs, self.z * rhs)
    }
}

/// Wraps an angle into (-pi, pi].
pub fn wrap_angle(angle: f64) -> f64 {
    let mut a = angle.rem_euclid(2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    }
    // rem_euclid can round up to exactly 2*pi for tiny negative inputs.
    if a <= -PI {
        a += 2.0 * PI;
    }
    a
}

/// Azimuth/elevation pair in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnglePair {
    azimuth: f64,
    elevation: f64,
}

impl AnglePair {
    /// Builds a validated pair. The azimuth is wrapped into (-pi, pi]; an
    /// elevation on or beyond +-pi/2 is rejected.
    pub fn new(azimuth: f64, elevation: f64) -> Result<Self> {
        if !azimuth.is_finite() || !elevation.is_finite() {
            return Err(Error::NonFinite("angle pair"));
        }
        if elevation.abs() >= FRAC_PI_2 {
            return Err(Error::InvalidElevation(elevation));
        }
        Ok(AnglePair {
            azimuth: wrap_angle(azimuth),
            elevation,
        })
    }

    pub fn azimuth(&self) -> f64 {
        self.azimuth
    }

    pub fn elevation(&self) -> f64 {
        self.elevation
    }

    /// Unit vector pointing from the source towards the sensor.
    pub fn direction(&self) -> Vector3<f64> {
        let (st, ct) = self.azimuth.sin_cos();
        let (sp, cp) = self.elevation.sin_cos();
        Vector3::new(cp * ct, cp * st, sp)
    }
}

/// Per-UAV measured angles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleMeasurementSet {
    pairs: Vec<AnglePair>,
}

impl AngleMeasurementSet {
    pub fn new(pairs: Vec<AnglePair>) -> Result<Self> {
        if pairs.len() < 2 {
            return Err(Error::InsufficientSensors(pairs.len()));
        }
        Ok(AngleMeasurementSet { pairs })
    }

    pub fn pairs(&self) -> &[AnglePair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Plane `normal . u = offset` with a unit normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plane {
    pub normal: Vector3<f64>,
    pub offset: f64,
}

impl Plane {
    /// Signed residual `normal . p - offset`.
    #[inline]
    pub fn residual(&self, p: &Vector3<f64>) -> f64 {
        self.normal.dot(p) - self.offset
    }

    /// Euclidean distance from `p` to the plane.
    #[inline]
    pub fn distance(&self, p: &Point3) -> f64 {
        self.residual(&p.to_vector()).abs()
    }
}

/// Direction from `source` to `uav` as an azimuth/elevation pair.
pub fn true_angles(source: &Point3, uav: &Point3) -> Result<AnglePair> {
    angles_for_sensor(source, uav, 0)
}

pub(crate) fn angles_for_sensor(source: &Point3, uav: &Point3, sensor: usize) -> Result<AnglePair> {
    let d = *uav - *source;
    if d.norm_squared() == 0.0 {
        return Err(Error::IdenticalPoints { sensor });
    }
    let rho = d.x.hypot(d.y);
    if rho == 0.0 {
        return Err(Error::DegenerateGeometry { sensor });
    }
    AnglePair::new(d.y.atan2(d.x), d.z.atan2(rho))
}

/// Vertical plane through `uav` containing the measured bearing.
pub fn plane_from_azimuth(azimuth: f64, uav: &Point3) -> Plane {
    let (s, c) = azimuth.sin_cos();
    Plane {
        normal: Vector3::new(s, -c, 0.0),
        offset: s * uav.x - c * uav.y,
    }
}

/// Plane through `uav` containing the measured line of sight and the
/// horizontal direction perpendicular to the azimuth.
pub fn plane_from_elevation(azimuth: f64, elevation: f64, uav: &Point3) -> Result<Plane> {
    if elevation.abs() >= FRAC_PI_2 {
        return Err(Error::InvalidElevation(elevation));
    }
    let (st, ct) = azimuth.sin_cos();
    let (sp, cp) = elevation.sin_cos();
    let normal = Vector3::new(sp * ct, sp * st, -cp);
    Ok(Plane {
        normal,
        offset: normal.dot(&uav.to_vector()),
    })
}

pub fn plane_point_distance(plane: &Plane, p: &Point3) -> f64 {
    plane.distance(p)
}

/// The 2M measurement planes plus the UAV positions they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneSet {
    azimuth: Vec<Plane>,
    elevation: Vec<Plane>,
    uavs: Vec<Point3>,
}

impl PlaneSet {
    pub fn build(measurements: &AngleMeasurementSet, uavs: &[Point3]) -> Result<Self> {
        if measurements.len() != uavs.len() {
            return Err(Error::LengthMismatch {
                measurements: measurements.len(),
                uavs: uavs.len(),
            });
        }
        if uavs.len() < 2 {
            return Err(Error::InsufficientSensors(uavs.len()));
        }
        let mut azimuth = Vec::with_capacity(uavs.len());
        let mut elevation = Vec::with_capacity(uavs.len());
        for (pair, uav) in measurements.pairs().iter().zip(uavs) {
            azimuth.push(plane_from_azimuth(pair.azimuth(), uav));
            elevation.push(plane_from_elevation(
                pair.azimuth(),
                pair.elevation(),
                uav,
            )?);
        }
        Ok(PlaneSet {
            azimuth,
            elevation,
            uavs: uavs.to_vec(),
        })
    }

    /// Assembles a plane set from precomputed planes. Only the lengths are
    /// checked; normals are expected to be unit length.
    pub fn from_planes(azimuth: Vec<Plane>, elevation: Vec<Plane>, uavs: Vec<Point3>) -> Result<Self> {
        if azimuth.len() != elevation.len() || azimuth.len() != uavs.len() {
            return Err(Error::LengthMismatch {
                measurements: azimuth.len().max(elevation.len()),
                uavs: uavs.len(),
            });
        }
        if uavs.is_empty() {
            return Err(Error::InsufficientSensors(0));
        }
        Ok(PlaneSet {
            azimuth,
            elevation,
            uavs,
        })
    }

    /// Number of sensors M.
    pub fn sensor_count(&self) -> usize {
        self.uavs.len()
    }

    pub fn azimuth_planes(&self) -> &[Plane] {
        &self.azimuth
    }

    pub fn elevation_planes(&self) -> &[Plane] {
        &self.elevation
    }

    pub fn uavs(&self) -> &[Point3] {
        &self.uavs
    }

    /// All 2M planes, azimuth planes first.
    pub fn iter(&self) -> impl Iterator<Item = &Plane> + '_ {
        self.azimuth.iter().chain(self.elevation.iter())
    }
}

pub fn build_plane_set(measurements: &AngleMeasurementSet, uavs: &[Point3]) -> Result<PlaneSet> {
    PlaneSet::build(measurements, uavs)
}

/// Sensitivities of (azimuth, elevation) to the source coordinates,
/// rad per meter. Row 0 is the azimuth gradient, row 1 the elevation gradient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleJacobian(pub Matrix2x3<f64>);

impl AngleJacobian {
    pub fn azimuth_row(&self) -> Vector3<f64> {
        self.0.row(0).transpose()
    }

    pub fn elevation_row(&self) -> Vector3<f64> {
        self.0.row(1).transpose()
    }
}

pub fn angle_jacobian(source: &Point3, uav: &Point3) -> Result<AngleJacobian> {
    jacobian_for_sensor(source, uav, 0).map(|(_, j)| j)
}

/// Angles and Jacobian in one pass.
pub(crate) fn jacobian_for_sensor(
    source: &Point3,
    uav: &Point3,
    sensor: usize,
) -> Result<(AnglePair, AngleJacobian)> {
    let angles = angles_for_sensor(source, uav, sensor)?;
    let d = source.distance(uav);
    let (st, ct) = angles.azimuth().sin_cos();
    let (sp, cp) = angles.elevation().sin_cos();
    let horiz = d * cp;
    #[rustfmt::skip]
    let m = Matrix2x3::new(
        st / horiz,      -ct / horiz,     0.0,
        sp * ct / d,     sp * st / d,     -cp / d,
    );
    Ok((angles, AngleJacobian(m)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn true_angles_examples() {
        let o = Point3::ORIGIN;
        let a = true_angles(&o, &Point3::new(1.0, 0.0, 0.0)).unwrap();
        assert_eq!((a.azimuth(), a.elevation()), (0.0, 0.0));

        let a = true_angles(&o, &Point3::new(1.0, 1.0, 2f64.sqrt())).unwrap();
        assert!(close(a.azimuth(), FRAC_PI_4, 1e-15));
        assert!(close(a.elevation(), FRAC_PI_4, 1e-15));

        let a = true_angles(&o, &Point3::new(-1.0, 0.0, 0.0)).unwrap();
        assert_eq!(a.azimuth(), PI);
        // -0.0 in y still maps onto +pi
        let a = true_angles(&o, &Point3::new(-1.0, -0.0, 0.0)).unwrap();
        assert_eq!(a.azimuth(), PI);
    }

    #[test]
    fn true_angles_errors() {
        let o = Point3::ORIGIN;
        assert_eq!(
            true_angles(&o, &o),
            Err(Error::IdenticalPoints { sensor: 0 })
        );
        assert_eq!(
            true_angles(&o, &Point3::new(0.0, 0.0, 5.0)),
            Err(Error::DegenerateGeometry { sensor: 0 })
        );
    }

    #[test]
    fn wrap_angle_range() {
        assert_eq!(wrap_angle(PI), PI);
        assert_eq!(wrap_angle(-PI), PI);
        assert!(close(wrap_angle(3.0 * PI / 2.0), -FRAC_PI_2, 1e-15));
        assert!(close(wrap_angle(-7.0), -7.0 + 2.0 * PI, 1e-15));
        assert!(wrap_angle(-1e-300) <= PI && wrap_angle(-1e-300) > -PI);
    }

    #[test]
    fn angle_pair_rejects_vertical() {
        assert_eq!(
            AnglePair::new(0.0, FRAC_PI_2),
            Err(Error::InvalidElevation(FRAC_PI_2))
        );
        assert!(AnglePair::new(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn azimuth_plane_examples() {
        let p = plane_from_azimuth(0.0, &Point3::new(1.0, 0.0, 0.0));
        assert_eq!(p.normal, Vector3::new(0.0, -1.0, 0.0));
        assert_eq!(p.offset, 0.0);

        let p = plane_from_azimuth(FRAC_PI_2, &Point3::new(0.0, 10.0, 0.0));
        assert!((p.normal - Vector3::new(1.0, 0.0, 0.0)).norm() < 1e-15);
        assert!(p.offset.abs() < 1e-15);

        let uav = Point3::new(3.0, -7.0, 2.0);
        assert!(plane_point_distance(&plane_from_azimuth(1.234, &uav), &uav) < 1e-12);
    }

    #[test]
    fn elevation_plane_examples() {
        let p = plane_from_elevation(0.0, 0.0, &Point3::new(1.0, 0.0, 0.0)).unwrap();
        assert_eq!(p.normal, Vector3::new(0.0, 0.0, -1.0));
        assert_eq!(p.offset, 0.0);

        let p = plane_from_elevation(0.0, FRAC_PI_4, &Point3::ORIGIN).unwrap();
        let h = 2f64.sqrt() / 2.0;
        assert!((p.normal - Vector3::new(h, 0.0, -h)).norm() < 1e-15);
        assert_eq!(p.offset, 0.0);

        let p = plane_from_elevation(2.5, -1.1, &Point3::new(1.0, 2.0, 3.0)).unwrap();
        assert!((p.normal.norm() - 1.0).abs() < 1e-12);

        assert!(matches!(
            plane_from_elevation(0.0, -FRAC_PI_2, &Point3::ORIGIN),
            Err(Error::InvalidElevation(_))
        ));
    }

    #[test]
    fn distance_examples() {
        let y0 = Plane {
            normal: Vector3::new(0.0, -1.0, 0.0),
            offset: 0.0,
        };
        assert_eq!(plane_point_distance(&y0, &Point3::new(3.0, 4.0, 5.0)), 4.0);
        let z2 = Plane {
            normal: Vector3::new(0.0, 0.0, -1.0),
            offset: -2.0,
        };
        assert_eq!(plane_point_distance(&z2, &Point3::new(0.0, 0.0, 5.0)), 3.0);
    }

    #[test]
    fn plane_set_cardinality_and_errors() {
        let uavs = vec![
            Point3::new(10.0, 0.0, 1.0),
            Point3::new(0.0, 10.0, -2.0),
            Point3::new(-5.0, -5.0, 4.0),
        ];
        let src = Point3::new(0.5, -0.5, 0.25);
        let meas = AngleMeasurementSet::new(
            uavs.iter().map(|u| true_angles(&src, u).unwrap()).collect(),
        )
        .unwrap();
        let set = PlaneSet::build(&meas, &uavs).unwrap();
        assert_eq!(set.azimuth_planes().len(), 3);
        assert_eq!(set.elevation_planes().len(), 3);
        assert_eq!(set.iter().count(), 6);
        for p in set.iter() {
            assert!(p.distance(&src) < 1e-12);
        }

        assert_eq!(
            PlaneSet::build(&meas, &uavs[..2]),
            Err(Error::LengthMismatch {
                measurements: 3,
                uavs: 2
            })
        );
        let one = vec![AnglePair::new(0.0, 0.0).unwrap()];
        assert_eq!(
            AngleMeasurementSet::new(one),
            Err(Error::InsufficientSensors(1))
        );
    }

    fn fd_jacobian(source: &Point3, uav: &Point3, h: f64) -> Matrix2x3<f64> {
        let mut m = Matrix2x3::zeros();
        for axis in 0..3 {
            let mut e = Point3::ORIGIN;
            match axis {
                0 => e.x = h,
                1 => e.y = h,
                _ => e.z = h,
            }
            let plus = true_angles(&(*source + e), uav).unwrap();
            let minus = true_angles(&(*source - e), uav).unwrap();
            m[(0, axis)] = wrap_angle(plus.azimuth() - minus.azimuth()) / (2.0 * h);
            m[(1, axis)] = (plus.elevation() - minus.elevation()) / (2.0 * h);
        }
        m
    }

    #[test]
    fn jacobian_axis_example() {
        let j = angle_jacobian(&Point3::ORIGIN, &Point3::new(10.0, 0.0, 0.0)).unwrap();
        let fd = fd_jacobian(&Point3::ORIGIN, &Point3::new(10.0, 0.0, 0.0), 1e-6);
        #[rustfmt::skip]
        let expected = Matrix2x3::new(0.0, -0.1, 0.0,
                                      0.0, 0.0, -0.1);
        assert!((fd - expected).abs().max() < 1e-9);
        assert!((j.0 - expected).abs().max() < 1e-15);
        assert_eq!(j.0[(0, 2)], 0.0);
    }

    #[test]
    fn jacobian_diagonal_example() {
        let uav = Point3::new(1.0, 1.0, 2f64.sqrt());
        let j = angle_jacobian(&Point3::ORIGIN, &uav).unwrap();
        let fd = fd_jacobian(&Point3::ORIGIN, &uav, 1e-6);
        for (a, b) in j.0.iter().zip(fd.iter()) {
            assert!((a - b).abs() <= 1e-6 * a.abs().max(1e-3), "{a} vs {b}");
        }
    }
}
