//! Coordinates, seeded point processes and geometric queries.
//!
//! Disc scenarios live in a flat Earth-tangent frame whose origin is the disc
//! center on the ground, with `z` as altitude. Satellites are sampled in an
//! Earth-centered frame and reported in the same tangent frame, so the Earth
//! center sits at `(0, 0, -EARTH_RADIUS_M)`.

use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean Earth radius.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

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

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn sub(&self, other: &Point3) -> Point3 {
        Point3::new(self.x - other.x, self.y - other.y, self.z - other.z)
    }

    pub fn add(&self, other: &Point3) -> Point3 {
        Point3::new(self.x + other.x, self.y + other.y, self.z + other.z)
    }

    pub fn scale(&self, k: f64) -> Point3 {
        Point3::new(self.x * k, self.y * k, self.z * k)
    }

    pub fn dot(&self, other: &Point3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn distance(&self, other: &Point3) -> f64 {
        self.sub(other).norm()
    }

    pub fn horizontal_distance(&self, other: &Point3) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Distance from the disc center in the horizontal plane.
    pub fn horizontal_range(&self) -> f64 {
        self.x.hypot(self.y)
    }
}

/// Position of the Earth center in the tangent frame.
pub fn earth_center() -> Point3 {
    Point3::new(0.0, 0.0, -EARTH_RADIUS_M)
}

/// Cosine of the angle between `a -> b` and `a -> c`.
///
/// Returns 1 when either direction is degenerate, so a zero-length beam is
/// treated as pointing at everything.
pub fn cos_angle_at(a: &Point3, b: &Point3, c: &Point3) -> f64 {
    let u = b.sub(a);
    let v = c.sub(a);
    let nu = u.norm();
    let nv = v.norm();
    if nu == 0.0 || nv == 0.0 {
        return 1.0;
    }
    (u.dot(&v) / (nu * nv)).clamp(-1.0, 1.0)
}

/// Angle in degrees between `a -> b` and `a -> c`.
pub fn angle_at_deg(a: &Point3, b: &Point3, c: &Point3) -> f64 {
    cos_angle_at(a, b, c).acos().to_degrees()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlatformKind {
    User,
    Uav,
    Haps,
    Mbs,
    Satellite,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub kind: PlatformKind,
    pub position: Point3,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PointProcess {
    /// Exactly `n` points uniform on a disc of `radius` meters.
    BppDisc { n: usize, radius: f64 },
    /// Poisson count with intensity `density_per_km2` on a disc of `radius` meters.
    PppDisc { density_per_km2: f64, radius: f64 },
    /// Exactly `n` points uniform on the sphere of radius `R_E + shell_altitude`.
    BppSphere { n: usize, shell_altitude: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Deployment {
    pub nodes: Vec<Node>,
    pub seed: u64,
    pub process: PointProcess,
}

impl Deployment {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn positions(&self) -> Vec<Point3> {
        self.nodes.iter().map(|n| n.position).collect()
    }

    fn from_points(kind: PlatformKind, points: Vec<Point3>, seed: u64, process: PointProcess) -> Self {
        Deployment {
            nodes: points
                .into_iter()
                .map(|position| Node { kind, position })
                .collect(),
            seed,
            process,
        }
    }
}

fn check_radius(radius: f64) -> Result<()> {
    if !radius.is_finite() || radius <= 0.0 {
        return Err(Error::config(
            "radius",
            format!("disc radius must be finite and positive, got {radius}"),
        ));
    }
    Ok(())
}

/// `n` points uniform on a disc at a fixed altitude, drawn from `rng`.
pub fn disc_points<R: Rng + ?Sized>(rng: &mut R, n: usize, radius: f64, altitude: f64) -> Vec<Point3> {
    (0..n).map(|_| disc_point(rng, radius, altitude)).collect()
}

pub fn disc_point<R: Rng + ?Sized>(rng: &mut R, radius: f64, altitude: f64) -> Point3 {
    // radial CDF is (r/R)^2
    let r = radius * rng.random::<f64>().sqrt();
    let theta = 2.0 * PI * rng.random::<f64>();
    Point3::new(r * theta.cos(), r * theta.sin(), altitude)
}

/// Poisson-distributed count for a disc of the given intensity.
pub fn poisson_count<R: Rng + ?Sized>(rng: &mut R, density_per_km2: f64, radius: f64) -> Result<usize> {
    if !(density_per_km2 >= 0.0) || !density_per_km2.is_finite() {
        return Err(Error::config(
            "density",
            format!("point density must be finite and non-negative, got {density_per_km2}"),
        ));
    }
    let radius_km = radius / 1e3;
    let mean = density_per_km2 * PI * radius_km * radius_km;
    if mean == 0.0 {
        return Ok(0);
    }
    let poisson = Poisson::new(mean).map_err(|e| Error::config("density", e.to_string()))?;
    Ok(poisson.sample(rng) as usize)
}

/// Points of a homogeneous PPP on a disc, drawn from `rng`.
pub fn ppp_disc_points<R: Rng + ?Sized>(
    rng: &mut R,
    density_per_km2: f64,
    radius: f64,
    altitude: f64,
) -> Result<Vec<Point3>> {
    check_radius(radius)?;
    let n = poisson_count(rng, density_per_km2, radius)?;
    Ok(disc_points(rng, n, radius, altitude))
}

/// `n` points uniform on the sphere of radius `R_E + shell_altitude`,
/// reported in the tangent frame.
pub fn sphere_points<R: Rng + ?Sized>(rng: &mut R, n: usize, shell_altitude: f64) -> Vec<Point3> {
    let shell = EARTH_RADIUS_M + shell_altitude;
    let center = earth_center();
    (0..n)
        .map(|_| {
            let z: f64 = rng.random_range(-1.0..=1.0);
            let lon = 2.0 * PI * rng.random::<f64>();
            let s = (1.0 - z * z).max(0.0).sqrt();
            Point3::new(shell * s * lon.cos(), shell * s * lon.sin(), shell * z).add(&center)
        })
        .collect()
}

pub fn sample_bpp_disc(kind: PlatformKind, n: usize, radius: f64, altitude: f64, seed: u64) -> Result<Deployment> {
    check_radius(radius)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = disc_points(&mut rng, n, radius, altitude);
    Ok(Deployment::from_points(kind, points, seed, PointProcess::BppDisc { n, radius }))
}

pub fn sample_ppp_disc(
    kind: PlatformKind,
    density_per_km2: f64,
    radius: f64,
    altitude: f64,
    seed: u64,
) -> Result<Deployment> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = ppp_disc_points(&mut rng, density_per_km2, radius, altitude)?;
    Ok(Deployment::from_points(
        kind,
        points,
        seed,
        PointProcess::PppDisc {
            density_per_km2,
            radius,
        },
    ))
}

pub fn sample_bpp_sphere(n: usize, shell_altitude: f64, seed: u64) -> Result<Deployment> {
    if !shell_altitude.is_finite() || shell_altitude < 0.0 {
        return Err(Error::config(
            "shell_altitude",
            format!("shell altitude must be finite and non-negative, got {shell_altitude}"),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = sphere_points(&mut rng, n, shell_altitude);
    Ok(Deployment::from_points(
        PlatformKind::Satellite,
        points,
        seed,
        PointProcess::BppSphere { n, shell_altitude },
    ))
}

/// Elevation of `b` seen from `a` in the flat tangent frame, in degrees.
///
/// Positive when `b` is above `a`; 90 at zenith.
pub fn elevation_angle(a: &Point3, b: &Point3) -> Result<f64> {
    if a == b {
        return Err(Error::domain("elevation angle of coincident points"));
    }
    let dz = b.z - a.z;
    Ok(dz.atan2(a.horizontal_distance(b)).to_degrees())
}

/// Elevation of `target` above the local horizon at `ground`, accounting for
/// Earth curvature. Used for satellite visibility.
pub fn elevation_angle_curved(ground: &Point3, target: &Point3) -> Result<f64> {
    let v = target.sub(ground);
    let range = v.norm();
    if range == 0.0 {
        return Err(Error::domain("elevation angle of coincident points"));
    }
    let up = ground.sub(&earth_center());
    let sin_el = (v.dot(&up) / (range * up.norm())).clamp(-1.0, 1.0);
    Ok(sin_el.asin().to_degrees())
}

/// Fraction of a sphere of radius `R_E + h` that lies above elevation
/// `min_elevation_deg` as seen from a point on the Earth surface.
pub fn visible_cap_fraction(shell_altitude: f64, min_elevation_deg: f64) -> f64 {
    let el = min_elevation_deg.to_radians();
    let ratio = EARTH_RADIUS_M / (EARTH_RADIUS_M + shell_altitude);
    let central = (ratio * el.cos()).acos() - el;
    (1.0 - central.cos()) / 2.0
}
