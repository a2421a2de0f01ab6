mod support;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stpa_harness::sim::{lidar_fan, min_separation, raycast_lidar, Obstacle, Vec3};
use support::oracles::{march_ray, sampled_min_separation};

fn random_obstacles(rng: &mut ChaCha8Rng) -> Vec<Obstacle> {
    (0..rng.random_range(1..=4))
        .map(|_| {
            Obstacle::tree(
                rng.random_range(-4.0..4.0),
                rng.random_range(-4.0..4.0),
                rng.random_range(0.2..1.5),
                rng.random_range(0.5..6.0),
            )
        })
        .collect()
}

fn random_point_outside(rng: &mut ChaCha8Rng, obstacles: &[Obstacle]) -> Vec3 {
    loop {
        let p = Vec3::new(rng.random_range(-6.0..6.0), rng.random_range(-6.0..6.0), rng.random_range(0.0..7.0));
        if min_separation(&p, obstacles) > 0.05 {
            return p;
        }
    }
}

fn random_direction(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let d = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-0.6..0.6));
        let n = d.norm();
        if n > 0.1 && n <= 1.0 {
            return d / n;
        }
    }
}

#[test]
fn raycast_matches_ray_marching() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let max_range = 10.0;
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let obstacles = random_obstacles(&mut rng);
        let origin = random_point_outside(&mut rng, &obstacles);
        let rays: Vec<Vec3> = (0..4).map(|_| random_direction(&mut rng)).collect();
        let got = raycast_lidar(&origin, &obstacles, &rays, max_range);
        for (dir, r) in rays.iter().zip(&got) {
            let expected = march_ray(&origin, dir, &obstacles, max_range, 1e-4);
            worst = worst.max((r - expected).abs());
        }
    }
    assert!(worst <= 1e-3, "worst ray error {worst}");
}

#[test]
fn lidar_fan_matches_ray_marching() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let rays = lidar_fan(36, 2f64.to_radians());
    for _ in 0..20 {
        let obstacles = random_obstacles(&mut rng);
        let origin = random_point_outside(&mut rng, &obstacles);
        let got = raycast_lidar(&origin, &obstacles, &rays, 10.0);
        for (dir, r) in rays.iter().zip(&got) {
            let expected = march_ray(&origin, dir, &obstacles, 10.0, 1e-4);
            assert!((r - expected).abs() <= 1e-3, "ray {dir:?}: {r} vs {expected}");
        }
    }
}

#[test]
fn fan_is_horizontal_unit_and_evenly_spaced() {
    let rays = lidar_fan(36, 2f64.to_radians());
    assert_eq!(rays.len(), 36);
    for (i, r) in rays.iter().enumerate() {
        assert!((r.norm() - 1.0).abs() < 1e-12);
        assert_eq!(r.z, 0.0);
        let angle = (2.0 + 10.0 * i as f64).to_radians();
        assert!((r.x - angle.cos()).abs() < 1e-12 && (r.y - angle.sin()).abs() < 1e-12);
    }
}

#[test]
fn min_separation_matches_surface_sampling() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for case in 0..100 {
        let obstacles = random_obstacles(&mut rng);
        let p = Vec3::new(rng.random_range(-7.0..7.0), rng.random_range(-7.0..7.0), rng.random_range(0.0..8.0));
        let got = min_separation(&p, &obstacles);
        let expected = sampled_min_separation(&p, &obstacles);
        assert!((got - expected).abs() <= 1e-3, "case {case} at {p:?}: {got} vs {expected}");
    }
}

#[test]
fn head_on_ray_hits_front_face() {
    let tree = Obstacle::tree(0.0, 0.0, 0.5, 10.0);
    let origin = Vec3::new(-10.0, 0.0, 2.0);
    let r = raycast_lidar(&origin, &[tree], &[Vec3::new(1.0, 0.0, 0.0)], 10.0);
    assert!((r[0] - 9.5).abs() < 1e-12);
    let miss = raycast_lidar(&origin, &[tree], &[Vec3::new(-1.0, 0.0, 0.0)], 10.0);
    assert_eq!(miss[0], 10.0);
}

#[test]
fn ray_over_a_short_obstacle_misses() {
    let stump = Obstacle::tree(0.0, 0.0, 0.5, 1.0);
    let r = raycast_lidar(&Vec3::new(-3.0, 0.0, 2.0), &[stump], &[Vec3::new(1.0, 0.0, 0.0)], 10.0);
    assert_eq!(r[0], 10.0);
}
