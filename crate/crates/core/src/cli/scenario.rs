use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{convex_hull, Bounds, ObstacleSet, Polygon, TargetRegion};
use crate::model::{pose_chain, RobotParams, RobotState, Vec2};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("could not place {what} after {tries} tries")]
    GenerationFailed { what: String, tries: usize },
    #[error("scenario file: {0}")]
    Parse(#[from] toml::de::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Rectangular target region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetSpec {
    pub center: [f64; 2],
    pub yaw: f64,
    pub length: f64,
    pub width: f64,
}

impl TargetSpec {
    pub fn region(&self) -> TargetRegion {
        TargetRegion::rectangle(Vec2::new(self.center[0], self.center[1]), self.yaw, self.length, self.width)
    }
}

/// One planning task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub seed: u64,
    pub n_trailers: usize,
    /// Start-goal distance band the task was drawn from (m).
    pub band: [f64; 2],
    pub start: RobotState,
    pub target: TargetSpec,
    pub world: ObstacleSet,
}

impl Scenario {
    pub fn from_toml_str(text: &str) -> Result<Self, ScenarioError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self, ScenarioError> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    /// Distance from the tractor rear axle to the target center.
    pub fn start_goal_distance(&self) -> f64 {
        (self.start.position() - Vec2::new(self.target.center[0], self.target.center[1])).norm()
    }
}

/// Recipe for a random scenario.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioSpec {
    pub seed: u64,
    pub n_trailers: usize,
    /// Numbers of triangles, quadrilaterals and pentagons.
    pub counts: [usize; 3],
    pub band: [f64; 2],
    pub world_size: f64,
    /// Obstacle vertex radius range (m).
    pub vertex_radius: [f64; 2],
    /// Gap kept between obstacles and the start chain or target (m), on top
    /// of the tractor covering radius.
    pub margin: f64,
    /// Target length beyond the chain length (m).
    pub target_slack: f64,
    pub target_width: f64,
    pub max_tries: usize,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            n_trailers: 1,
            counts: [20, 20, 20],
            band: [10.0, 20.0],
            world_size: 40.0,
            vertex_radius: [0.5, 2.0],
            margin: 0.1,
            target_slack: 1.0,
            target_width: 1.4,
            max_tries: 1000,
        }
    }
}

/// Length of the chain from the front of the tractor to the back of the
/// last trailer when aligned.
pub fn chain_length(params: &RobotParams) -> f64 {
    let front = params.rear_offset + 0.5 * params.body_sizes[0].length;
    let back = match params.n_trailers() {
        0 => 0.5 * params.body_sizes[0].length - params.rear_offset,
        n => params.hitch_lengths.iter().sum::<f64>() + 0.5 * params.body_sizes[n].length,
    };
    front + back
}

fn polygon_gap(poly: &Polygon, p: Vec2) -> f64 {
    if poly.contains(p) {
        0.0
    } else {
        poly.boundary_distance(p)
    }
}

/// Lower bound on the distance between a convex obstacle and the target,
/// sampling the target boundary every `step`.
fn target_gap(poly: &Polygon, target: &TargetRegion, step: f64) -> f64 {
    if poly.points().any(|p| target.contains(p)) {
        return 0.0;
    }
    let n = target.vertices.len();
    let mut gap = f64::INFINITY;
    for k in 0..n {
        let (a, b) = (target.vertices[k], target.vertices[(k + 1) % n]);
        let pieces = ((b - a).norm() / step).ceil().max(1.0) as usize;
        for i in 0..pieces {
            gap = gap.min(polygon_gap(poly, a + (b - a) * (i as f64 / pieces as f64)));
        }
    }
    gap - 0.5 * step
}

fn random_polygon(rng: &mut ChaCha8Rng, sides: usize, center: Vec2, radius: [f64; 2]) -> Option<Polygon> {
    let mut angles: Vec<f64> = (0..sides).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect();
    angles.sort_by(f64::total_cmp);
    let pts: Vec<Vec2> = angles
        .iter()
        .map(|a| center + rng.gen_range(radius[0]..=radius[1]) * Vec2::new(a.cos(), a.sin()))
        .collect();
    let hull = convex_hull(&pts);
    (hull.len() == sides).then(|| Polygon::new(hull.iter().map(|p| [p.x, p.y]).collect()))
}

/// Draws a scenario deterministically from `spec.seed`: start pose, then a
/// target in the distance band, then obstacles clear of both.
pub fn gen_scenario(spec: &ScenarioSpec, params: &RobotParams) -> Result<Scenario, ScenarioError> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let size = spec.world_size;
    let bounds = Bounds::new([0.0, 0.0], [size, size]);
    let border = chain_length(params) + 1.0;
    let inside = |p: Vec2, pad: f64| p.x >= pad && p.y >= pad && p.x <= size - pad && p.y <= size - pad;
    let fail = |what: &str| ScenarioError::GenerationFailed { what: what.into(), tries: spec.max_tries };

    let mut start = None;
    for _ in 0..spec.max_tries {
        let p = Vec2::new(rng.gen_range(border..size - border), rng.gen_range(border..size - border));
        let yaw = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
        let s = RobotState::aligned(p.x, p.y, yaw, spec.n_trailers);
        let chain = pose_chain(params, p, &s.yaws());
        if chain.centers.iter().all(|c| inside(*c, 1.0)) {
            start = Some(s);
            break;
        }
    }
    let start = start.ok_or_else(|| fail("start"))?;
    let chain = pose_chain(params, start.position(), &start.yaws());

    let length = chain_length(params) + spec.target_slack;
    let mut target = None;
    for _ in 0..spec.max_tries {
        let d = rng.gen_range(spec.band[0]..=spec.band[1]);
        let dir = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
        let c = start.position() + d * Vec2::new(dir.cos(), dir.sin());
        let t = TargetSpec {
            center: [c.x, c.y],
            yaw: rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI),
            length,
            width: spec.target_width,
        };
        let region = t.region();
        let clear_of_start = chain.centers.iter().zip(&params.wrap_radii).all(|(p, r)| region.distance(*p) > r + 1.0);
        if region.vertices.iter().all(|v| inside(*v, 1.0)) && clear_of_start {
            target = Some(t);
            break;
        }
    }
    let target = target.ok_or_else(|| fail("target"))?;
    let region = target.region();

    let keep = params.wrap_radii[0] + spec.margin;
    let mut polygons = Vec::new();
    for (kind, count) in spec.counts.iter().enumerate() {
        let sides = kind + 3;
        for _ in 0..*count {
            let mut placed = false;
            for _ in 0..spec.max_tries {
                let c = Vec2::new(rng.gen_range(0.0..size), rng.gen_range(0.0..size));
                let Some(poly) = random_polygon(&mut rng, sides, c, spec.vertex_radius) else {
                    continue;
                };
                if !poly.points().all(|p| bounds.contains(p)) {
                    continue;
                }
                let clear_start = chain.centers.iter().zip(&params.wrap_radii).all(|(p, r)| polygon_gap(&poly, *p) > r + keep);
                if clear_start && target_gap(&poly, &region, 0.1) > keep {
                    polygons.push(poly);
                    placed = true;
                    break;
                }
            }
            if !placed {
                return Err(fail(&format!("obstacle with {sides} sides")));
            }
        }
    }

    Ok(Scenario {
        seed: spec.seed,
        n_trailers: spec.n_trailers,
        band: spec.band,
        start,
        target,
        world: ObstacleSet { bounds, polygons },
    })
}
