//! Brute-force reference implementations, written without reference to the
//! library code they check.

use stpa_harness::sim::{Obstacle, Vec3};

fn inside(p: &Vec3, o: &Obstacle) -> bool {
    let dx = p.x - o.center_xy.x;
    let dy = p.y - o.center_xy.y;
    dx * dx + dy * dy <= o.radius * o.radius && p.z >= 0.0 && p.z <= o.height
}

/// First distance along `dir` at which the ray is inside any obstacle,
/// found by stepping `step` metres at a time; `max_range` if none.
pub fn march_ray(origin: &Vec3, dir: &Vec3, obstacles: &[Obstacle], max_range: f64, step: f64) -> f64 {
    let n = (max_range / step).ceil() as usize;
    for i in 0..=n {
        let t = (i as f64 * step).min(max_range);
        let p = origin + dir * t;
        if obstacles.iter().any(|o| inside(&p, o)) {
            return t;
        }
    }
    max_range
}

/// Minimum of `f` over a 2D parameter box by grid search followed by
/// repeated local refinement around the best sample.
fn refine_min(f: impl Fn(f64, f64) -> f64, mut a: (f64, f64), mut b: (f64, f64), wrap_a: bool) -> f64 {
    const N: usize = 48;
    let mut best = f64::INFINITY;
    for _ in 0..6 {
        let (da, db) = ((a.1 - a.0) / N as f64, (b.1 - b.0) / N as f64);
        let mut arg = (a.0, b.0);
        for i in 0..=N {
            for j in 0..=N {
                let (u, v) = (a.0 + da * i as f64, b.0 + db * j as f64);
                let d = f(u, v);
                if d < best {
                    best = d;
                    arg = (u, v);
                }
            }
        }
        let (lo_a, hi_a) = (arg.0 - 2.0 * da, arg.0 + 2.0 * da);
        a = if wrap_a { (lo_a, hi_a) } else { (lo_a.max(a.0), hi_a.min(a.1)) };
        b = ((arg.1 - 2.0 * db).max(b.0), (arg.1 + 2.0 * db).min(b.1));
    }
    best
}

/// Distance from `p` to the nearest surface point of the capped cylinder,
/// or 0 inside, by sampling the side wall and both caps.
pub fn sampled_cylinder_distance(p: &Vec3, o: &Obstacle) -> f64 {
    if inside(p, o) {
        return 0.0;
    }
    let (cx, cy, r, h) = (o.center_xy.x, o.center_xy.y, o.radius, o.height);
    let tau = std::f64::consts::TAU;
    let side = refine_min(
        |theta, z| (Vec3::new(cx + r * theta.cos(), cy + r * theta.sin(), z) - p).norm(),
        (0.0, tau),
        (0.0, h),
        true,
    );
    let cap = |z: f64| {
        refine_min(
            |theta, rho| (Vec3::new(cx + rho * theta.cos(), cy + rho * theta.sin(), z) - p).norm(),
            (0.0, tau),
            (0.0, r),
            true,
        )
    };
    side.min(cap(h)).min(cap(0.0))
}

pub fn sampled_min_separation(p: &Vec3, obstacles: &[Obstacle]) -> f64 {
    obstacles.iter().map(|o| sampled_cylinder_distance(p, o)).fold(f64::INFINITY, f64::min)
}

/// `Σ γᵗ rₜ` term by term with explicit powers.
pub fn naive_discounted_return(rewards: &[f64], gamma: f64) -> f64 {
    let mut total = 0.0;
    for (t, r) in rewards.iter().enumerate() {
        total += gamma.powi(t as i32) * r;
    }
    total
}
