use super::{Obstacle, Vec3};

/// Range reported when the sensor origin lies inside or on an obstacle.
pub const CONTACT_RANGE: f64 = 1e-6;

/// Horizontal fan of `ray_count` unit vectors, evenly spaced over a full
/// turn, starting at `offset_rad` from +x.
pub fn lidar_fan(ray_count: usize, offset_rad: f64) -> Vec<Vec3> {
    (0..ray_count)
        .map(|i| {
            let angle = offset_rad + std::f64::consts::TAU * i as f64 / ray_count as f64;
            Vec3::new(angle.cos(), angle.sin(), 0.0)
        })
        .collect()
}

/// Distance along a ray to the first surface point of a capped vertical
/// cylinder with its base on `z = 0`, or `None` if the ray misses.
pub fn ray_cylinder_distance(origin: &Vec3, dir: &Vec3, obstacle: &Obstacle) -> Option<f64> {
    let c = obstacle.center_xy;
    let (r, h) = (obstacle.radius, obstacle.height);
    let fx = origin.x - c.x;
    let fy = origin.y - c.y;
    let radial_sq = fx * fx + fy * fy;

    if radial_sq <= r * r && (0.0..=h).contains(&origin.z) {
        return Some(0.0);
    }

    let mut best = f64::INFINITY;

    let a = dir.x * dir.x + dir.y * dir.y;
    if a > 1e-18 {
        let b = fx * dir.x + fy * dir.y;
        let cc = radial_sq - r * r;
        let disc = b * b - a * cc;
        if disc >= 0.0 && cc > 0.0 {
            // entry root of the infinite cylinder
            let t = (-b - disc.sqrt()) / a;
            if t >= 0.0 {
                let z = origin.z + t * dir.z;
                if (0.0..=h).contains(&z) {
                    best = t;
                }
            }
        }
    }

    if dir.z != 0.0 {
        for plane in [h, 0.0] {
            let t = (plane - origin.z) / dir.z;
            if t >= 0.0 && t < best {
                let x = fx + t * dir.x;
                let y = fy + t * dir.y;
                if x * x + y * y <= r * r {
                    best = t;
                }
            }
        }
    }

    best.is_finite().then_some(best)
}

/// One range per ray: distance to the nearest obstacle surface along the
/// ray, saturating at `max_range`. Every range lies in `[CONTACT_RANGE, max_range]`.
pub fn raycast_lidar(position: &Vec3, obstacles: &[Obstacle], rays: &[Vec3], max_range: f64) -> Vec<f64> {
    rays.iter()
        .map(|dir| {
            obstacles
                .iter()
                .filter_map(|o| ray_cylinder_distance(position, dir, o))
                .fold(max_range, f64::min)
                .max(CONTACT_RANGE)
        })
        .collect()
}

/// Euclidean distance from a point to the nearest obstacle surface; zero
/// inside an obstacle and infinite when there are no obstacles.
pub fn min_separation(position: &Vec3, obstacles: &[Obstacle]) -> f64 {
    obstacles.iter().map(|o| point_cylinder_distance(position, o)).fold(f64::INFINITY, f64::min)
}

pub fn point_cylinder_distance(p: &Vec3, o: &Obstacle) -> f64 {
    let dx = p.x - o.center_xy.x;
    let dy = p.y - o.center_xy.y;
    let radial = ((dx * dx + dy * dy).sqrt() - o.radius).max(0.0);
    let vertical = if p.z > o.height {
        p.z - o.height
    } else if p.z < 0.0 {
        -p.z
    } else {
        0.0
    };
    radial.hypot(vertical)
}
