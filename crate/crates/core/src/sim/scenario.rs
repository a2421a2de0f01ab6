use serde::{Deserialize, Serialize};

use super::{lidar_fan, DynamicsParams, Obstacle, SimError, Vec3};

/// Side length of the equilateral triangle used by [`ObstacleLayout::ThreeTreeCluster`], m.
pub const THREE_TREE_SPACING: f64 = 2.0;

/// Mission phases evaluated in isolation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubtaskKind {
    TakeoffNavigate,
    ObstacleAvoidance,
    DescentLanding,
}

impl SubtaskKind {
    pub fn name(self) -> &'static str {
        match self {
            SubtaskKind::TakeoffNavigate => "takeoff_navigate",
            SubtaskKind::ObstacleAvoidance => "obstacle_avoidance",
            SubtaskKind::DescentLanding => "descent_landing",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObstacleLayout {
    None,
    #[default]
    SingleTree,
    /// Three trees on an equilateral triangle of side [`THREE_TREE_SPACING`]
    /// centred on the origin, one vertex pointing at the approaching drone
    /// (at `(-s/√3, 0)`), the other two at `(s/(2√3), ±s/2)`.
    ThreeTreeCluster,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LidarConfig {
    pub ray_count: usize,
    pub max_range: f64,
    /// Angle of the first ray from +x, degrees.
    pub offset_deg: f64,
}

impl Default for LidarConfig {
    fn default() -> Self {
        // The 2° offset keeps the fan from being mirror-symmetric about the
        // x axis, so a head-on approach does not balance repulsion exactly.
        Self { ray_count: 36, max_range: 10.0, offset_deg: 2.0 }
    }
}

impl LidarConfig {
    pub fn rays(&self) -> Vec<Vec3> {
        lidar_fan(self.ray_count, self.offset_deg.to_radians())
    }
}

/// Axis-aligned box the drone must stay inside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub min: Vec3,
    pub max: Vec3,
}

impl Bounds {
    pub fn contains(&self, p: &Vec3) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }
}

/// One isolated subtask instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub kind: SubtaskKind,
    pub obstacles: Vec<Obstacle>,
    pub start: Vec3,
    pub target: Vec3,
    /// Minimum-separation threshold, m.
    pub d_thresh: f64,
    /// Target-reached radius, m.
    pub success_radius: f64,
    /// Speed limit at the target, m/s; only descent scenarios set it.
    #[serde(default)]
    pub touchdown_speed: Option<f64>,
    pub step_cap: usize,
    pub dt: f64,
    /// Discount factor for the episode return.
    pub gamma: f64,
    pub lidar: LidarConfig,
    pub dynamics: DynamicsParams,
    pub bounds: Bounds,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |msg: String| Err(SimError::InvalidParameter(msg));
        if !(self.d_thresh > 0.0) {
            return bad(format!("d_thresh must be positive, got {}", self.d_thresh));
        }
        if !(self.success_radius > 0.0) {
            return bad(format!("success_radius must be positive, got {}", self.success_radius));
        }
        if !(self.dt > 0.0) || self.step_cap == 0 {
            return bad("dt and step_cap must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad(format!("gamma must lie in [0, 1], got {}", self.gamma));
        }
        if self.lidar.ray_count == 0 || !(self.lidar.max_range > 0.0) {
            return bad("lidar needs at least one ray and a positive range".into());
        }
        if let Some(i) = self.obstacles.iter().position(|o| !o.is_valid()) {
            return bad(format!("obstacle {i} has non-positive size"));
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn to_toml_string(&self) -> Result<String, toml::ser::Error> {
        toml::to_string(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioParams {
    /// Start-to-obstacle distance (and obstacle-to-target distance) for
    /// obstacle avoidance; waypoint distance for takeoff; hover height for
    /// descent. m.
    pub distance: f64,
    /// Cruise altitude, m.
    pub altitude: f64,
    pub layout: ObstacleLayout,
    pub tree_radius: f64,
    pub tree_height: f64,
    /// Touchdown speed limit for descent, m/s.
    pub touchdown_speed: f64,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        Self {
            distance: 10.0,
            altitude: 2.0,
            layout: ObstacleLayout::SingleTree,
            tree_radius: 0.5,
            tree_height: 10.0,
            touchdown_speed: 1.0,
        }
    }
}

fn layout_obstacles(params: &ScenarioParams) -> Vec<Obstacle> {
    let (r, h) = (params.tree_radius, params.tree_height);
    match params.layout {
        ObstacleLayout::None => Vec::new(),
        ObstacleLayout::SingleTree => vec![Obstacle::tree(0.0, 0.0, r, h)],
        ObstacleLayout::ThreeTreeCluster => {
            let s = THREE_TREE_SPACING;
            let circumradius = s / 3f64.sqrt();
            vec![
                Obstacle::tree(-circumradius, 0.0, r, h),
                Obstacle::tree(circumradius / 2.0, s / 2.0, r, h),
                Obstacle::tree(circumradius / 2.0, -s / 2.0, r, h),
            ]
        }
    }
}

/// Builds a subtask scenario.
///
/// * Obstacle avoidance: start at `(-D, 0, altitude)`, target at
///   `(D, 0, altitude)`, obstacles from `layout` around the origin.
/// * Takeoff/navigate: start on the pad at the origin, waypoint at
///   `(D, 0, altitude)`, no obstacles.
/// * Descent/landing: hover at `(0, 0, D)`, land at the origin within the
///   success radius and below the touchdown speed.
pub fn make_scenario(kind: SubtaskKind, params: &ScenarioParams) -> Result<ScenarioSpec, SimError> {
    if !(params.distance > 0.0 && params.distance.is_finite()) {
        return Err(SimError::InvalidParameter(format!("distance must be positive, got {}", params.distance)));
    }
    if !(params.altitude >= 0.0 && params.tree_radius > 0.0 && params.tree_height > 0.0) {
        return Err(SimError::InvalidParameter("altitude and tree dimensions must be positive".into()));
    }
    let d = params.distance;
    let (start, target, obstacles, touchdown_speed) = match kind {
        SubtaskKind::ObstacleAvoidance => {
            (Vec3::new(-d, 0.0, params.altitude), Vec3::new(d, 0.0, params.altitude), layout_obstacles(params), None)
        }
        SubtaskKind::TakeoffNavigate => (Vec3::zeros(), Vec3::new(d, 0.0, params.altitude), Vec::new(), None),
        SubtaskKind::DescentLanding => {
            (Vec3::new(0.0, 0.0, d), Vec3::zeros(), Vec::new(), Some(params.touchdown_speed))
        }
    };

    let margin = Vec3::repeat(20.0);
    let bounds = Bounds { min: start.inf(&target) - margin, max: start.sup(&target) + margin };
    let spec = ScenarioSpec {
        kind,
        obstacles,
        start,
        target,
        d_thresh: 0.25,
        success_radius: 0.5,
        touchdown_speed,
        step_cap: 600,
        dt: 0.05,
        gamma: 0.99,
        lidar: LidarConfig::default(),
        dynamics: DynamicsParams::default(),
        bounds,
    };
    spec.validate()?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn obstacle_avoidance_geometry() {
        let s = make_scenario(SubtaskKind::ObstacleAvoidance, &ScenarioParams::default()).unwrap();
        assert_eq!(s.start, Vec3::new(-10.0, 0.0, 2.0));
        assert_eq!(s.target, Vec3::new(10.0, 0.0, 2.0));
        assert_eq!(s.obstacles.len(), 1);
        assert_eq!(s.obstacles[0].center_xy, nalgebra::Vector2::zeros());
        assert_eq!(s.d_thresh, 0.25);
    }

    #[test]
    fn three_tree_cluster_is_equilateral() {
        let params = ScenarioParams { layout: ObstacleLayout::ThreeTreeCluster, ..Default::default() };
        let s = make_scenario(SubtaskKind::ObstacleAvoidance, &params).unwrap();
        assert_eq!(s.obstacles.len(), 3);
        for i in 0..3 {
            let j = (i + 1) % 3;
            let gap = (s.obstacles[i].center_xy - s.obstacles[j].center_xy).norm();
            approx::assert_abs_diff_eq!(gap, THREE_TREE_SPACING, epsilon = 1e-12);
        }
        let centroid: nalgebra::Vector2<f64> =
            s.obstacles.iter().map(|o| o.center_xy).sum::<nalgebra::Vector2<f64>>() / 3.0;
        approx::assert_abs_diff_eq!(centroid.norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn descent_success_radius() {
        let s = make_scenario(SubtaskKind::DescentLanding, &ScenarioParams::default()).unwrap();
        assert_eq!(s.success_radius, 0.5);
        assert_eq!(s.touchdown_speed, Some(1.0));
        assert!(s.start.z > s.target.z);
    }

    #[test]
    fn takeoff_has_no_obstacles() {
        let s = make_scenario(SubtaskKind::TakeoffNavigate, &ScenarioParams::default()).unwrap();
        assert!(s.obstacles.is_empty());
        assert_eq!(s.start, Vec3::zeros());
    }

    #[test]
    fn rejects_non_positive_distance() {
        for d in [0.0, -3.0, f64::NAN] {
            let params = ScenarioParams { distance: d, ..Default::default() };
            assert!(make_scenario(SubtaskKind::ObstacleAvoidance, &params).is_err());
        }
    }

    #[test]
    fn toml_round_trip() {
        let s = make_scenario(SubtaskKind::ObstacleAvoidance, &ScenarioParams::default()).unwrap();
        let text = s.to_toml_string().unwrap();
        assert_eq!(ScenarioSpec::from_toml_str(&text).unwrap(), s);
    }
}
