//! Synthetic trajectories labelled by hand against the detector rules
//! (default thresholds: trigger 3 m, act_eps 0.2, maneuver 2 m/s²,
//! ttc_min 1 s, persist 10 steps, dt 0.05 s, d_thresh 0.25 m, tree radius
//! 0.5 m).

use stpa_harness::analysis::Trajectory;
use stpa_harness::sim::{point_cylinder_distance, ScenarioSpec, Vec3};
use stpa_harness::stpa::UcaCategory::{self, *};

use super::synth::{cluster, fly, left_of, scenario_with, tree};

pub struct LabeledCase {
    pub name: &'static str,
    pub scenario: ScenarioSpec,
    pub trajectory: Trajectory,
    /// Expected event categories in start-step order.
    pub expected: Vec<UcaCategory>,
    /// Whether the geometry should breach `d_thresh`; checked separately so
    /// a mislabelled geometry cannot pass silently.
    pub violates: bool,
}

fn case(
    name: &'static str,
    scenario: ScenarioSpec,
    trajectory: Trajectory,
    expected: Vec<UcaCategory>,
    violates: bool,
) -> LabeledCase {
    LabeledCase { name, scenario, trajectory, expected, violates }
}

fn at(x: f64, y: f64) -> Vec3 {
    Vec3::new(x, y, 2.0)
}

fn vx(speed: f64) -> Vec3 {
    Vec3::new(speed, 0.0, 0.0)
}

/// `+y` push of `accel` while the tree surface is closer than `within`.
fn swerve_inside(within: f64, accel: f64) -> impl FnMut(usize, &stpa_harness::sim::DroneState) -> Vec3 {
    let t = tree();
    move |_, s| {
        if point_cylinder_distance(&s.position, &t) < within {
            Vec3::new(0.0, accel, 0.0)
        } else {
            Vec3::zeros()
        }
    }
}

#[allow(clippy::vec_init_then_push)]
pub fn labeled_cases() -> Vec<LabeledCase> {
    let single = scenario_with(vec![tree()]);
    let three = scenario_with(cluster());
    let open = scenario_with(Vec::new());
    let zero = |_: usize, _: &stpa_harness::sim::DroneState| Vec3::zeros();
    let mut cases = Vec::new();

    // Not providing: closing for 10+ steps with no lateral action.
    cases.push(case(
        "head_on_no_action",
        single.clone(),
        fly(&single, at(-5.0, 0.0), vx(2.0), 100, zero),
        vec![NotProviding],
        true,
    ));
    cases.push(case(
        "graze_no_action",
        single.clone(),
        fly(&single, at(-5.0, 0.6), vx(2.0), 120, zero),
        vec![NotProviding],
        true,
    ));
    cases.push(case(
        "slow_graze_no_action",
        single.clone(),
        fly(&single, at(-4.0, 0.65), vx(1.0), 160, zero),
        vec![NotProviding],
        true,
    ));
    cases.push(case(
        "cluster_no_action",
        three.clone(),
        fly(&three, at(-5.0, 0.0), vx(2.0), 100, zero),
        vec![NotProviding],
        true,
    ));

    // Wrong timing: avoidance starts with time-to-collision under 1 s, or
    // the obstacle appears too late for 10 warning steps.
    cases.push(case(
        "late_hard_swerve",
        single.clone(),
        fly(&single, at(-6.0, 0.3), vx(6.0), 60, swerve_inside(1.2, 6.0)),
        vec![WrongTiming],
        true,
    ));
    cases.push(case(
        "late_medium_swerve",
        single.clone(),
        fly(&single, at(-5.0, 0.35), vx(4.0), 80, swerve_inside(1.6, 2.0)),
        vec![WrongTiming],
        true,
    ));
    cases.push(case(
        "short_warning_no_action",
        single.clone(),
        fly(&single, at(-1.5, 0.3), vx(4.0), 40, zero),
        vec![WrongTiming],
        true,
    ));

    // Wrong duration / magnitude: avoidance in time, but too weak or too
    // short.
    cases.push(case(
        "timely_weak_swerve",
        single.clone(),
        fly(&single, at(-5.0, 0.3), vx(2.0), 120, swerve_inside(2.5, 0.25)),
        vec![WrongDuration],
        true,
    ));
    cases.push(case(
        "timely_weak_swerve_faster",
        single.clone(),
        fly(&single, at(-5.0, 0.2), vx(2.5), 100, swerve_inside(3.0, 0.4)),
        vec![WrongDuration],
        true,
    ));
    let t = tree();
    let mut pushed = 0;
    cases.push(case(
        "stopped_too_soon",
        single.clone(),
        fly(&single, at(-5.0, 0.3), vx(2.0), 120, move |_, s| {
            if point_cylinder_distance(&s.position, &t) < 3.0 && pushed < 8 {
                pushed += 1;
                Vec3::new(0.0, 0.5, 0.0)
            } else {
                Vec3::zeros()
            }
        }),
        vec![WrongDuration],
        true,
    ));

    // Precedence: a long unprotected approach outranks both a late and a
    // timely-but-weak swerve.
    cases.push(case(
        "coast_then_late_swerve",
        single.clone(),
        fly(&single, at(-6.0, 0.3), vx(2.0), 120, swerve_inside(1.5, 0.6)),
        vec![NotProviding],
        true,
    ));
    cases.push(case(
        "coast_then_timely_swerve",
        single.clone(),
        fly(&single, at(-6.0, 0.25), vx(1.5), 160, swerve_inside(2.175, 0.25)),
        vec![NotProviding],
        true,
    ));

    // Providing causes hazard: hard maneuvers with nothing within 3 m.
    let turn = |from: usize, to: usize, a: f64| {
        move |k: usize, s: &stpa_harness::sim::DroneState| {
            if (from..to).contains(&k) {
                left_of(s) * a
            } else {
                Vec3::zeros()
            }
        }
    };
    cases.push(case(
        "open_hard_turn",
        open.clone(),
        fly(&open, at(-5.0, 0.0), vx(3.0), 60, turn(10, 30, 3.0)),
        vec![ProvidingCausesHazard],
        false,
    ));
    cases.push(case(
        "far_tree_hard_turn",
        single.clone(),
        fly(&single, at(-5.0, 8.0), vx(3.0), 60, turn(10, 30, 3.0)),
        vec![ProvidingCausesHazard],
        false,
    ));
    cases.push(case(
        "two_bursts",
        open.clone(),
        fly(&open, at(-5.0, 0.0), vx(3.0), 80, |k, s| {
            if (5..20).contains(&k) || (30..45).contains(&k) {
                left_of(s) * 3.0
            } else {
                Vec3::zeros()
            }
        }),
        vec![ProvidingCausesHazard, ProvidingCausesHazard],
        false,
    ));
    cases.push(case(
        "s_turn_then_no_action",
        single.clone(),
        fly(&single, at(-12.0, -1.0), vx(3.0), 160, |k, s| match k {
            0..12 => left_of(s) * 3.0,
            12..24 => left_of(s) * -3.0,
            _ => Vec3::zeros(),
        }),
        vec![ProvidingCausesHazard, NotProviding],
        true,
    ));

    // Negatives.
    cases.push(case("open_straight", open.clone(), fly(&open, at(-5.0, 0.0), vx(3.0), 60, zero), vec![], false));
    cases.push(case("safe_pass", single.clone(), fly(&single, at(-5.0, 1.5), vx(2.0), 120, zero), vec![], false));
    cases.push(case(
        "gentle_turn",
        open.clone(),
        fly(&open, at(-5.0, 0.0), vx(3.0), 60, turn(5, 45, 1.5)),
        vec![],
        false,
    ));
    cases.push(case(
        "short_hard_turn",
        open.clone(),
        fly(&open, at(-5.0, 0.0), vx(3.0), 40, turn(10, 15, 3.0)),
        vec![],
        false,
    ));
    let t = tree();
    cases.push(case(
        "hard_turn_near_tree",
        single.clone(),
        fly(&single, at(-5.0, 1.5), vx(2.0), 120, move |_, s| {
            if point_cylinder_distance(&s.position, &t) < 2.5 {
                left_of(s) * 3.0
            } else {
                Vec3::zeros()
            }
        }),
        vec![],
        false,
    ));
    cases.push(case(
        "hover_jitter",
        open.clone(),
        fly(&open, at(-5.0, 0.0), Vec3::zeros(), 60, |k, _| Vec3::new(0.0, if k % 2 == 0 { 3.0 } else { -3.0 }, 0.0)),
        vec![],
        false,
    ));
    cases
}
