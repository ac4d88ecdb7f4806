//! Runs the kinodynamic search for a tractor with one trailer around a wall
//! and prints the resulting path.

use trailplan::env::{build_sdf, rasterize, Bounds, ObstacleSet, Polygon, TargetRegion};
use trailplan::model::{RobotParams, Vec2};
use trailplan::search::{search, SearchConfig};

fn main() {
    let params = RobotParams::benchmark(1);
    let world = ObstacleSet {
        bounds: Bounds::new([0.0, 0.0], [14.0, 10.0]),
        polygons: vec![Polygon::new(vec![[6.0, 0.0], [7.0, 0.0], [7.0, 6.5], [6.0, 6.5]])],
    };
    let grid = rasterize(&world, 0.1).expect("valid world");
    let sdf = build_sdf(&grid);
    let region = TargetRegion::rectangle(Vec2::new(11.0, 3.0), 0.0, 2.5, 1.4);
    let outcome = search(&grid, &sdf, &params, [2.0, 3.0, 0.0], &[0.0], &region, &SearchConfig::default())
        .expect("a path exists");
    let best = &outcome.best;
    println!(
        "{} expansions, {} candidates, best length {:.2} m, score {:.2}",
        outcome.expansions,
        outcome.candidates.len(),
        best.length,
        best.score
    );
    for (p, tr) in best.points.iter().zip(&best.trailers).step_by(5) {
        println!("t {:6.2}  ({:6.2}, {:6.2})  yaw {:6.3}  trailer {:6.3}  v {:5.2}", p.t, p.x, p.y, p.theta0, tr[0], p.v);
    }
}
