//! Synthetic LiDAR returns over a cone scene, and RANSAC ground removal.
//!
//! Sensor frame: `x` right, `y` forward, `z` up, origin at the optical
//! center, which sits `mount_height` above the ground.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::control::VehicleState;
use crate::geom::{VehiclePoint, WorldPoint};
use crate::sim::TrackSpec;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }

    fn dot(self, o: Self) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    fn cross(self, o: Self) -> Self {
        Self::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    fn norm(self) -> f64 {
        libm::sqrt(self.dot(self))
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PerceptionError {
    #[error("plane fit needs at least 3 points, got {0}")]
    FewerThanThreePoints(usize),
    #[error("all {0} sampled triples were collinear")]
    DegenerateSamples(usize),
    #[error("point {0} has a non-finite coordinate")]
    NonFinitePoint(usize),
}

/// Sensor-frame points plus the height of the sensor above the ground.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    pub points: Vec<Point3>,
    pub sensor_height: f64,
}

impl PointCloud {
    pub fn new(points: Vec<Point3>, sensor_height: f64) -> Result<Self, PerceptionError> {
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(PerceptionError::NonFinitePoint(i));
        }
        Ok(Self {
            points,
            sensor_height,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Ground-plane footprint of every point no higher than `max_height`
    /// above the ground.
    pub fn footprint(&self, max_height: f64) -> Vec<VehiclePoint> {
        self.points
            .iter()
            .filter(|p| p.z + self.sensor_height <= max_height)
            .map(|p| VehiclePoint::new(p.y, p.x))
            .collect()
    }
}

/// Multi-beam spinning LiDAR.
#[derive(Debug, Clone, PartialEq)]
pub struct LidarModel {
    /// Elevation of each beam, radians, positive up.
    pub beam_elevations: Vec<f64>,
    /// Angular step between firings, radians.
    pub azimuth_step: f64,
    pub max_range: f64,
    pub range_noise_sigma: f64,
    pub mount_height: f64,
}

impl Default for LidarModel {
    fn default() -> Self {
        Self {
            beam_elevations: Self::even_beams(16, -15f64.to_radians(), 15f64.to_radians()),
            azimuth_step: 0.5f64.to_radians(),
            max_range: 15.0,
            range_noise_sigma: 0.01,
            mount_height: 0.8,
        }
    }
}

impl LidarModel {
    /// `count` elevations evenly spaced over `[lo, hi]`.
    pub fn even_beams(count: usize, lo: f64, hi: f64) -> Vec<f64> {
        match count {
            0 => Vec::new(),
            1 => vec![(lo + hi) / 2.0],
            _ => (0..count)
                .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
                .collect(),
        }
    }

    /// Number of firings per revolution.
    pub fn azimuth_count(&self) -> usize {
        libm::round(TAU / self.azimuth_step).max(1.0) as usize
    }
}

/// Which surface a simulated ray struck.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HitKind {
    Ground,
    Cone,
}

/// Casts every `(elevation, azimuth)` ray of `model` from the sensor on
/// `pose` into the cone scene, returning one point per hit.
pub fn simulate_lidar(
    track: &TrackSpec,
    pose: &VehicleState,
    model: &LidarModel,
    noise_seed: u64,
) -> PointCloud {
    let labeled = simulate_lidar_labeled(track, pose, model, noise_seed);
    PointCloud {
        points: labeled.into_iter().map(|(p, _)| p).collect(),
        sensor_height: model.mount_height,
    }
}

/// As [`simulate_lidar`], tagging each return with the surface it came from.
/// Returns are ordered beam by beam, then by azimuth.
pub fn simulate_lidar_labeled(
    track: &TrackSpec,
    pose: &VehicleState,
    model: &LidarModel,
    noise_seed: u64,
) -> Vec<(Point3, HitKind)> {
    let n_az = model.azimuth_count();
    let n_beams = model.beam_elevations.len();
    let h = model.mount_height;
    let origin = WorldPoint::new(pose.x, pose.y);
    let forward = WorldPoint::from_angle(pose.heading);
    let left = forward.perp();

    // nearest hit per ray: (horizontal distance, kind)
    let mut hits: Vec<Option<(f64, HitKind)>> = vec![None; n_beams * n_az];

    let beams: Vec<(f64, f64)> = model
        .beam_elevations
        .iter()
        .map(|&el| (libm::tan(el), libm::cos(el)))
        .collect();

    for (b, &(tan_el, cos_el)) in beams.iter().enumerate() {
        if tan_el < 0.0 {
            let t = h / -tan_el;
            if t / cos_el <= model.max_range {
                for slot in &mut hits[b * n_az..(b + 1) * n_az] {
                    *slot = Some((t, HitKind::Ground));
                }
            }
        }
    }

    let shape = track.cone_shape;
    let r = shape.radius;
    for cone in &track.cones {
        let rel = *cone - origin;
        let q = WorldPoint::new(rel.dot(forward), rel.dot(left));
        let dist = q.norm();
        if dist <= r || dist - r > model.max_range {
            continue;
        }
        let bearing = libm::atan2(q.y, q.x);
        let half = libm::asin(r / dist);
        let first = libm::floor((bearing - half) / model.azimuth_step) as i64;
        let last = libm::ceil((bearing + half) / model.azimuth_step) as i64;
        for j in first..=last {
            let az_index = j.rem_euclid(n_az as i64) as usize;
            let az = az_index as f64 * model.azimuth_step;
            let u = WorldPoint::new(libm::cos(az), libm::sin(az));
            let Some((t_in, t_out)) = ray_circle(u, q, r) else {
                continue;
            };
            for (b, &(tan_el, cos_el)) in beams.iter().enumerate() {
                let Some(t) = cylinder_hit(t_in, t_out, tan_el, h, shape.height, u, q, r) else {
                    continue;
                };
                if t / cos_el > model.max_range {
                    continue;
                }
                let slot = &mut hits[b * n_az + az_index];
                if slot.is_none_or(|(best, _)| t < best) {
                    *slot = Some((t, HitKind::Cone));
                }
            }
        }
    }

    let noise = (model.range_noise_sigma > 0.0)
        .then(|| Normal::new(0.0, model.range_noise_sigma).expect("finite sigma"));
    let mut rng = ChaCha8Rng::seed_from_u64(noise_seed);

    let mut out = Vec::new();
    for (b, &(tan_el, cos_el)) in beams.iter().enumerate() {
        let sin_el = tan_el * cos_el;
        for az_index in 0..n_az {
            let Some((t, kind)) = hits[b * n_az + az_index] else {
                continue;
            };
            let mut range = t / cos_el;
            if let Some(normal) = &noise {
                range += normal.sample(&mut rng);
            }
            let az = az_index as f64 * model.azimuth_step;
            // azimuth is counterclockwise from forward, so left is +az
            let horiz = range * cos_el;
            let p = Point3::new(
                -horiz * libm::sin(az),
                horiz * libm::cos(az),
                range * sin_el,
            );
            out.push((p, kind));
        }
    }
    out
}

/// Entry and exit distances of the unit ray `u` through the circle at `q`.
fn ray_circle(u: WorldPoint, q: WorldPoint, r: f64) -> Option<(f64, f64)> {
    let b = u.dot(q);
    let disc = b * b - (q.dot(q) - r * r);
    if disc < 0.0 {
        return None;
    }
    let s = libm::sqrt(disc);
    let t_out = b + s;
    if t_out <= 0.0 {
        return None;
    }
    Some((b - s, t_out))
}

/// Horizontal distance at which a ray at elevation `atan(tan_el)` first meets
/// the finite cylinder, given the horizontal entry/exit span of its
/// footprint circle.
#[allow(clippy::too_many_arguments)]
fn cylinder_hit(
    t_in: f64,
    t_out: f64,
    tan_el: f64,
    mount: f64,
    height: f64,
    u: WorldPoint,
    q: WorldPoint,
    r: f64,
) -> Option<f64> {
    if t_in > 0.0 {
        let z = mount + t_in * tan_el;
        if (0.0..=height).contains(&z) {
            return Some(t_in);
        }
    }
    // Entered above the top: the ray may still come down through the cap.
    if tan_el < 0.0 && mount > height {
        let t_cap = (height - mount) / tan_el;
        if t_cap >= t_in.max(0.0) && t_cap <= t_out {
            let foot = u * t_cap - q;
            if foot.dot(foot) <= r * r {
                return Some(t_cap);
            }
        }
    }
    None
}

/// A plane `normal · p + offset = 0` with `|normal| = 1` and a non-negative
/// `z` component.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PlaneModel {
    pub normal: [f64; 3],
    pub offset: f64,
    pub inlier_threshold: f64,
}

impl PlaneModel {
    pub fn residual(&self, p: &Point3) -> f64 {
        let [nx, ny, nz] = self.normal;
        libm::fabs(nx * p.x + ny * p.y + nz * p.z + self.offset)
    }

    pub fn is_inlier(&self, p: &Point3) -> bool {
        self.residual(p) <= self.inlier_threshold
    }

    /// Angle between the normal and vertical, radians.
    pub fn tilt(&self) -> f64 {
        libm::acos(self.normal[2].clamp(-1.0, 1.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RansacParams {
    pub iterations: usize,
    pub inlier_threshold: f64,
    pub rng_seed: u64,
}

impl Default for RansacParams {
    fn default() -> Self {
        Self {
            iterations: 100,
            inlier_threshold: 0.05,
            rng_seed: 0,
        }
    }
}

/// Plane through three points, or `None` when they are (numerically)
/// collinear.
fn plane_through(a: Point3, b: Point3, c: Point3, threshold: f64) -> Option<PlaneModel> {
    let ab = b.sub(a);
    let ac = c.sub(a);
    let n = ab.cross(ac);
    let len = n.norm();
    if !(len > 1e-9 * ab.norm() * ac.norm()) {
        return None;
    }
    let sign = if n.z < 0.0 { -1.0 } else { 1.0 };
    let normal = [sign * n.x / len, sign * n.y / len, sign * n.z / len];
    let offset = -(normal[0] * a.x + normal[1] * a.y + normal[2] * a.z);
    Some(PlaneModel {
        normal,
        offset,
        inlier_threshold: threshold,
    })
}

/// Seeded RANSAC over random point triples. The plane with the most inliers
/// wins; equal counts go to the lower mean inlier residual.
pub fn fit_plane_ransac(
    cloud: &PointCloud,
    params: &RansacParams,
) -> Result<(PlaneModel, Vec<bool>), PerceptionError> {
    let pts = &cloud.points;
    if pts.len() < 3 {
        return Err(PerceptionError::FewerThanThreePoints(pts.len()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.rng_seed);
    let n = pts.len();
    let mut best: Option<(PlaneModel, usize, f64)> = None;

    for _ in 0..params.iterations {
        let i = rng.random_range(0..n);
        let mut j = rng.random_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        let (lo, hi) = if i < j { (i, j) } else { (j, i) };
        let mut k = rng.random_range(0..n - 2);
        if k >= lo {
            k += 1;
        }
        if k >= hi {
            k += 1;
        }
        let Some(plane) = plane_through(pts[i], pts[j], pts[k], params.inlier_threshold) else {
            continue;
        };
        let (count, residual_sum) = score(&plane, pts);
        let mean = residual_sum / count as f64;
        let better = match &best {
            None => true,
            Some((_, best_count, best_mean)) => {
                count > *best_count || (count == *best_count && mean < *best_mean)
            }
        };
        if better {
            best = Some((plane, count, mean));
        }
    }

    let (plane, _, _) = best.ok_or(PerceptionError::DegenerateSamples(params.iterations))?;
    let mask = pts.iter().map(|p| plane.is_inlier(p)).collect();
    Ok((plane, mask))
}

fn score(plane: &PlaneModel, pts: &[Point3]) -> (usize, f64) {
    let [nx, ny, nz] = plane.normal;
    let (d, thr) = (plane.offset, plane.inlier_threshold);
    let mut count = 0;
    let mut sum = 0.0;
    for p in pts {
        let r = libm::fabs(nx * p.x + ny * p.y + nz * p.z + d);
        if r <= thr {
            count += 1;
            sum += r;
        }
    }
    (count, sum)
}

/// Result of ground removal with the fitted plane kept for diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundSegmentation {
    pub obstacles: PointCloud,
    pub plane: PlaneModel,
    pub ground_points: usize,
    /// The winning plane does not look like the ground under the sensor:
    /// its normal is tilted more than [`GROUND_TILT_LIMIT`] from vertical or
    /// it sits more than [`GROUND_HEIGHT_SLACK`] away from the expected
    /// ground height.
    pub suspect: bool,
}

pub const GROUND_TILT_LIMIT: f64 = PI / 18.0;
pub const GROUND_HEIGHT_SLACK: f64 = 0.25;

pub fn segment_ground_report(
    cloud: &PointCloud,
    params: &RansacParams,
) -> Result<GroundSegmentation, PerceptionError> {
    let (plane, mask) = fit_plane_ransac(cloud, params)?;
    let obstacles: Vec<Point3> = cloud
        .points
        .iter()
        .zip(&mask)
        .filter(|(_, &inlier)| !inlier)
        .map(|(p, _)| *p)
        .collect();
    let ground_points = cloud.len() - obstacles.len();
    // distance from the sensor origin to the plane along the normal
    let height = libm::fabs(plane.offset);
    let suspect = plane.tilt() > GROUND_TILT_LIMIT
        || libm::fabs(height - cloud.sensor_height) > GROUND_HEIGHT_SLACK;
    Ok(GroundSegmentation {
        obstacles: PointCloud {
            points: obstacles,
            sensor_height: cloud.sensor_height,
        },
        plane,
        ground_points,
        suspect,
    })
}

/// Everything that is not on the fitted ground plane.
pub fn segment_ground(
    cloud: &PointCloud,
    params: &RansacParams,
) -> Result<PointCloud, PerceptionError> {
    segment_ground_report(cloud, params).map(|s| s.obstacles)
}
