//! Rasterizes two obstacles, builds the signed distance field and queries it
//! along a horizontal line.

use trailplan::env::{build_sdf, rasterize, Bounds, ObstacleSet, Polygon};
use trailplan::model::Vec2;

fn main() {
    let world = ObstacleSet {
        bounds: Bounds::new([0.0, 0.0], [10.0, 6.0]),
        polygons: vec![
            Polygon::new(vec![[2.0, 2.0], [4.0, 2.0], [4.0, 4.0], [2.0, 4.0]]),
            Polygon::new(vec![[6.0, 1.0], [8.5, 2.5], [6.5, 4.5]]),
        ],
    };
    let grid = rasterize(&world, 0.05).expect("valid world");
    let sdf = build_sdf(&grid);
    println!("{} x {} cells, {} occupied", grid.width, grid.height, grid.occupied_count());
    println!("{:>5} {:>9} {:>9} {:>9}", "x", "sdf", "grad_x", "grad_y");
    for k in 0..=20 {
        let p = Vec2::new(0.5 * k as f64, 3.0);
        let (d, g) = sdf.query(p);
        println!("{:5.2} {d:9.4} {:9.4} {:9.4}", p.x, g.x, g.y);
    }
}
