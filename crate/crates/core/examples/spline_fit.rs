//! Fits a minimum-jerk quintic spline through planar waypoints and prints
//! samples of position, velocity and jerk.

use trailplan::poly::{minco_solve, Boundary};

fn main() {
    let lengths = [1.0, 1.5, 1.0, 2.0];
    let start = Boundary::new(vec![0.0, 0.0], vec![1.0, 0.0]);
    let end = Boundary::new(vec![6.0, 2.0], vec![0.0, 1.0]);
    let waypoints = [1.0, 0.2, 3.0, 1.0, 4.5, 0.5];
    let spline = minco_solve(&lengths, &start, &waypoints, &end).expect("valid instance");
    println!("total length {:.2}, jerk energy {:.4}", spline.total_length(), spline.jerk_energy(&[1.0, 1.0]).0);
    println!("{:>6} {:>8} {:>8} {:>8} {:>8} {:>9} {:>9}", "s", "x", "y", "dx", "dy", "jx", "jy");
    let n = 20;
    for k in 0..=n {
        let s = spline.total_length() * k as f64 / n as f64;
        let e = spline.eval(s, 3).expect("inside the domain");
        let (x, y) = (e[0], e[1]);
        println!("{s:6.2} {:8.3} {:8.3} {:8.3} {:8.3} {:9.3} {:9.3}", x[0], y[0], x[1], y[1], x[3], y[3]);
    }
}
