use crate::env::{Sdf, TargetRegion};
use crate::model::{rotation, RobotParams, RobotState, Vec2};
use crate::poly::{basis, Boundary, FlatTrajectory, Minco, PolyError, COEFFS};

use super::alm::{ConstrainedProblem, ConstraintVisitor};
use super::transform::{hitch_from_free, hitch_to_free, lc2, lc2_inv, TransformError};
use super::SolverConfig;

/// Constraint classes in the order of their ids.
pub const CLASS_NAMES: [&str; 11] = [
    "kinematics",
    "arc_rate",
    "tangent",
    "jackknife",
    "speed",
    "accel",
    "lat_accel",
    "curvature",
    "clearance",
    "self_collision",
    "end_region",
];

const KINEMATICS: usize = 0;
const ARC_RATE: usize = 1;
const TANGENT: usize = 2;
const JACKKNIFE: usize = 3;
const SPEED: usize = 4;
const ACCEL: usize = 5;
const LAT_ACCEL: usize = 6;
const CURVATURE: usize = 7;
const CLEARANCE: usize = 8;
const SELF_COLLISION: usize = 9;
const END_REGION: usize = 10;

/// Positions of the blocks of the decision vector:
/// tractor waypoints `(M-1) x 2`, transformed segment lengths `M`, trailer
/// waypoints `(Omega-1) x N`, terminal `x, y, theta0`, transformed terminal
/// hitch angles `N`, transformed duration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub pieces: usize,
    pub trailer_pieces: usize,
    pub trailers: usize,
}

impl Layout {
    pub fn waypoints(&self) -> std::ops::Range<usize> {
        0..2 * (self.pieces - 1)
    }

    pub fn segments(&self) -> std::ops::Range<usize> {
        let a = self.waypoints().end;
        a..a + self.pieces
    }

    pub fn trailer_waypoints(&self) -> std::ops::Range<usize> {
        let a = self.segments().end;
        a..a + self.trailers * (self.trailer_pieces - 1)
    }

    pub fn end_pose(&self) -> std::ops::Range<usize> {
        let a = self.trailer_waypoints().end;
        a..a + 3
    }

    pub fn hitches(&self) -> std::ops::Range<usize> {
        let a = self.end_pose().end;
        a..a + self.trailers
    }

    pub fn duration(&self) -> usize {
        self.hitches().end
    }

    pub fn len(&self) -> usize {
        self.duration() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// The reduced variables in their natural (constrained) form.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameters {
    /// Row-major `(M-1) x 2`.
    pub waypoints: Vec<f64>,
    /// Segment lengths `S`, all positive.
    pub segments: Vec<f64>,
    /// Row-major `(Omega-1) x N`.
    pub trailer_waypoints: Vec<f64>,
    /// Terminal `x, y, theta0`.
    pub end_pose: [f64; 3],
    /// Terminal yaw differences `theta_{i-1} - theta_i`, inside the jackknife bound.
    pub hitches: Vec<f64>,
    pub duration: f64,
}

/// A decoded decision vector.
#[derive(Debug, Clone)]
pub struct Decoded {
    pub traj: FlatTrajectory,
    pub segments: Vec<f64>,
    pub duration: f64,
    /// Terminal yaws `theta_0..theta_N`.
    pub end_yaws: Vec<f64>,
    d_segments: Vec<f64>,
    d_duration: f64,
    d_hitches: Vec<f64>,
    minco_xy: Minco,
    minco_s: Minco,
    minco_theta: Minco,
}

/// Cost, constraints and gradients of one planning instance.
pub struct TrajectoryProblem<'a> {
    pub params: &'a RobotParams,
    pub sdf: &'a Sdf,
    pub region: &'a TargetRegion,
    pub start: RobotState,
    pub cfg: SolverConfig,
    pub layout: Layout,
}

/// Accumulators for the partial derivatives of one evaluation.
struct Grads {
    xy_c: Vec<f64>,
    xy_l: Vec<f64>,
    s_c: Vec<f64>,
    s_l: Vec<f64>,
    th_c: Vec<f64>,
    th_l: Vec<f64>,
    /// Direct dependence on the segment lengths through piece offsets.
    segments: Vec<f64>,
    duration: f64,
    end_xy: [f64; 2],
    end_yaws: Vec<f64>,
}

impl<'a> TrajectoryProblem<'a> {
    pub fn new(
        params: &'a RobotParams,
        sdf: &'a Sdf,
        region: &'a TargetRegion,
        start: RobotState,
        pieces: usize,
        cfg: SolverConfig,
    ) -> Self {
        let layout = Layout {
            pieces,
            trailer_pieces: pieces * cfg.trailer_piece_ratio.max(2),
            trailers: params.n_trailers(),
        };
        Self { params, sdf, region, start, cfg, layout }
    }

    /// Trailer yaw rates at the start implied by the kinematic chain.
    fn start_trailer_rates(&self) -> Vec<f64> {
        let yaws = self.start.yaws();
        let speeds = crate::model::chain_speeds(self.start.v0, &yaws);
        (0..self.layout.trailers)
            .map(|i| speeds[i] * (yaws[i] - yaws[i + 1]).sin() / self.params.hitch_lengths[i])
            .collect()
    }

    pub fn encode(&self, p: &Parameters) -> Result<Vec<f64>, TransformError> {
        let l = &self.layout;
        let mut x = vec![0.0; l.len()];
        x[l.waypoints()].copy_from_slice(&p.waypoints);
        for (dst, s) in x[l.segments()].iter_mut().zip(&p.segments) {
            *dst = lc2(*s)?;
        }
        x[l.trailer_waypoints()].copy_from_slice(&p.trailer_waypoints);
        x[l.end_pose()].copy_from_slice(&p.end_pose);
        for (dst, h) in x[l.hitches()].iter_mut().zip(&p.hitches) {
            *dst = hitch_to_free(*h, self.params.limits.jackknife)?;
        }
        x[l.duration()] = lc2(p.duration)?;
        Ok(x)
    }

    pub fn parameters(&self, x: &[f64]) -> Parameters {
        let l = &self.layout;
        Parameters {
            waypoints: x[l.waypoints()].to_vec(),
            segments: x[l.segments()].iter().map(|v| lc2_inv(*v).0).collect(),
            trailer_waypoints: x[l.trailer_waypoints()].to_vec(),
            end_pose: [x[l.end_pose().start], x[l.end_pose().start + 1], x[l.end_pose().start + 2]],
            hitches: x[l.hitches()].iter().map(|v| hitch_from_free(*v, self.params.limits.jackknife).0).collect(),
            duration: lc2_inv(x[l.duration()]).0,
        }
    }

    pub fn decode(&self, x: &[f64]) -> Result<Decoded, PolyError> {
        let l = self.layout;
        let (m, omega, n) = (l.pieces, l.trailer_pieces, l.trailers);
        let (segments, d_segments): (Vec<f64>, Vec<f64>) = x[l.segments()].iter().map(|v| lc2_inv(*v)).unzip();
        let (duration, d_duration) = lc2_inv(x[l.duration()]);
        let e = l.end_pose().start;
        let theta0_end = x[e + 2];
        let mut end_yaws = vec![theta0_end];
        let mut d_hitches = Vec::with_capacity(n);
        for v in &x[l.hitches()] {
            let (h, dh) = hitch_from_free(*v, self.params.limits.jackknife);
            end_yaws.push(end_yaws.last().unwrap() - h);
            d_hitches.push(dh);
        }

        let th0 = self.start.theta0;
        let minco_xy = Minco::new(2, &segments)?;
        let xy = minco_xy.solve(
            &Boundary::new(self.start.p0.to_vec(), vec![th0.cos(), th0.sin()]),
            &x[l.waypoints()],
            &Boundary::new(vec![x[e], x[e + 1]], vec![theta0_end.cos(), theta0_end.sin()]),
        )?;

        let minco_s = Minco::new(1, &vec![duration / m as f64; m])?;
        let mut cum = Vec::with_capacity(m - 1);
        let mut acc = 0.0;
        for s in &segments[..m - 1] {
            acc += s;
            cum.push(acc);
        }
        let total = acc + segments[m - 1];
        let s_of_t = minco_s.solve(
            &Boundary::new(vec![0.0], vec![self.start.v0]),
            &cum,
            &Boundary::new(vec![total], vec![0.0]),
        )?;

        let minco_theta = Minco::new(n, &vec![duration / omega as f64; omega])?;
        let thetas = minco_theta.solve(
            &Boundary::new(self.start.thetas.clone(), self.start_trailer_rates()),
            &x[l.trailer_waypoints()],
            &Boundary::new(end_yaws[1..].to_vec(), vec![0.0; n]),
        )?;

        Ok(Decoded {
            traj: FlatTrajectory { xy, s_of_t, thetas },
            segments,
            duration,
            end_yaws,
            d_segments,
            d_duration,
            d_hitches,
            minco_xy,
            minco_s,
            minco_theta,
        })
    }

    /// Constraint stamps as `(piece, numerator)` with local time
    /// `numerator / K * T_p`; the final instant is included.
    fn stamps(&self) -> impl Iterator<Item = (usize, usize)> {
        let (m, k) = (self.layout.pieces, self.cfg.stamps);
        (0..m).flat_map(move |j| (0..k).map(move |p| (j, p))).chain(std::iter::once((m - 1, k)))
    }

    fn visit_stamp(
        &self,
        dec: &Decoded,
        j: usize,
        p: usize,
        visitor: &mut dyn ConstraintVisitor,
        g: &mut Grads,
    ) {
        let l = self.layout;
        let (m, omega, n, kk) = (l.pieces, l.trailer_pieces, l.trailers, self.cfg.stamps);
        let lim = &self.params.limits;
        let shrink = 1.0 - self.cfg.bound_margin;
        let traj = &dec.traj;
        let tp = dec.duration / m as f64;
        let frac_s = p as f64 / kk as f64;
        let tau = frac_s * tp;

        let mut s = [0.0; 4];
        for (o, v) in s.iter_mut().enumerate() {
            *v = traj.s_of_t.piece_derivative(j, tau, o, 0);
        }
        let sigma = s[0] - traj.xy.knots()[j];
        let mut xd = [0.0; 4];
        let mut yd = [0.0; 4];
        for o in 0..4 {
            xd[o] = traj.xy.piece_derivative(j, sigma, o, 0);
            yd[o] = traj.xy.piece_derivative(j, sigma, o, 1);
        }
        // trailer piece and local time, exact in integers
        let num = (j * kk + p) * omega;
        let den = m * kk;
        let (kth, frac_th) = if num / den >= omega { (omega - 1, 1.0) } else { (num / den, (num % den) as f64 / den as f64) };
        let tau_th = frac_th * dec.duration / omega as f64;
        let mut th = vec![[0.0; 3]; n];
        for (i, t) in th.iter_mut().enumerate() {
            for o in 0..3 {
                t[o] = traj.thetas.piece_derivative(kth, tau_th, o, i);
            }
        }

        // flat map
        let n2 = (xd[1] * xd[1] + yd[1] * yd[1]).max(1e-12);
        let nn = n2.sqrt();
        let n3 = n2 * nn;
        let xi = xd[1] * xd[2] + yd[1] * yd[2];
        let cr = xd[1] * yd[2] - yd[1] * xd[2];
        let raw = yd[1].atan2(xd[1]);
        let theta0 = if n > 0 { th[0][0] + crate::search::wrap_pi(raw - th[0][0]) } else { raw };
        let v0 = s[1] * nn;
        let acc = s[2] * nn + s[1] * s[1] * xi / nn;
        let kappa = cr / n3;
        let alat = v0 * v0 * kappa;

        let mut yaws = Vec::with_capacity(n + 1);
        yaws.push(theta0);
        yaws.extend(th.iter().map(|t| t[0]));
        let speeds = crate::model::chain_speeds(v0, &yaws);
        let mut pos = vec![Vec2::new(xd[0], yd[0])];
        for i in 1..=n {
            let (si, ci) = yaws[i].sin_cos();
            let prev = pos[i - 1];
            pos.push(prev - self.params.hitch_lengths[i - 1] * Vec2::new(ci, si));
        }
        let mut centers = pos.clone();
        centers[0] += self.params.rear_offset * Vec2::new(theta0.cos(), theta0.sin());

        // adjoints of intermediate quantities
        let mut a_v = vec![0.0; n + 1];
        let mut a_yaw = vec![0.0; n + 1];
        let mut a_thd = vec![0.0; n];
        let mut a_pc = vec![Vec2::zeros(); n + 1];
        let (mut a_acc, mut a_kappa, mut a_n2) = (0.0, 0.0, 0.0);
        let mut a_s = [0.0; 3];

        for i in 1..=n {
            let d = yaws[i - 1] - yaws[i];
            let (sd, cd) = d.sin_cos();
            let li = self.params.hitch_lengths[i - 1];
            let w = visitor.equality(KINEMATICS, th[i - 1][1] * li - speeds[i - 1] * sd);
            a_thd[i - 1] += w * li;
            a_v[i - 1] -= w * sd;
            a_yaw[i - 1] -= w * speeds[i - 1] * cd;
            a_yaw[i] += w * speeds[i - 1] * cd;
        }
        a_s[1] -= visitor.inequality(ARC_RATE, -s[1]);
        a_n2 -= visitor.inequality(TANGENT, self.params.slack_floor - n2);
        let jk = lim.jackknife * shrink;
        for i in 1..=n {
            let d = yaws[i - 1] - yaws[i];
            let w = visitor.inequality(JACKKNIFE, d * d - jk * jk);
            a_yaw[i - 1] += 2.0 * d * w;
            a_yaw[i] -= 2.0 * d * w;
        }
        let vm = lim.v_max * shrink;
        a_v[0] += 2.0 * v0 * visitor.inequality(SPEED, v0 * v0 - vm * vm);
        let am = lim.a_max * shrink;
        a_acc += 2.0 * acc * visitor.inequality(ACCEL, acc * acc - am * am);
        let lm = lim.a_lat_max * shrink;
        let a_alat = 2.0 * alat * visitor.inequality(LAT_ACCEL, alat * alat - lm * lm);
        a_v[0] += a_alat * 2.0 * v0 * kappa;
        a_kappa += a_alat * v0 * v0;
        let km = lim.kappa_max * shrink;
        a_kappa += 2.0 * kappa * visitor.inequality(CURVATURE, kappa * kappa - km * km);
        for (i, c) in centers.iter().enumerate() {
            let (value, grad) = self.sdf.query(*c);
            let w = visitor.inequality(CLEARANCE, self.params.wrap_radii[i] + self.cfg.clearance_margin - value);
            a_pc[i] -= w * grad;
        }
        let cl2 = self.params.veh_clearance * self.params.veh_clearance;
        for a in 0..=n {
            for b in a + 2..=n {
                let delta = centers[a] - centers[b];
                let w = visitor.inequality(SELF_COLLISION, cl2 - delta.norm_squared());
                a_pc[a] -= 2.0 * w * delta;
                a_pc[b] += 2.0 * w * delta;
            }
        }

        // back through the speed chain
        for k in (1..n).rev() {
            let d = yaws[k - 1] - yaws[k];
            let (sd, cd) = d.sin_cos();
            a_v[k - 1] += a_v[k] * cd;
            a_yaw[k - 1] -= a_v[k] * speeds[k - 1] * sd;
            a_yaw[k] += a_v[k] * speeds[k - 1] * sd;
        }
        // back through the hitch chain
        let mut a_p = a_pc.clone();
        a_yaw[0] += self.params.rear_offset * a_pc[0].dot(&Vec2::new(-theta0.sin(), theta0.cos()));
        for i in (1..=n).rev() {
            let carry = a_p[i];
            a_p[i - 1] += carry;
            let (si, ci) = yaws[i].sin_cos();
            a_yaw[i] += self.params.hitch_lengths[i - 1] * carry.dot(&Vec2::new(si, -ci));
        }

        // onto derivatives of the flat outputs
        let mut ax = [a_p[0].x, 0.0, 0.0];
        let mut ay = [a_p[0].y, 0.0, 0.0];
        ax[1] += a_yaw[0] * (-yd[1] / n2);
        ay[1] += a_yaw[0] * (xd[1] / n2);
        a_s[1] += a_v[0] * nn;
        ax[1] += a_v[0] * s[1] * xd[1] / nn;
        ay[1] += a_v[0] * s[1] * yd[1] / nn;
        a_s[2] += a_acc * nn;
        a_s[1] += a_acc * 2.0 * s[1] * xi / nn;
        let ss = s[1] * s[1];
        ax[1] += a_acc * (s[2] * xd[1] / nn + ss * (xd[2] / nn - xi * xd[1] / n3));
        ay[1] += a_acc * (s[2] * yd[1] / nn + ss * (yd[2] / nn - xi * yd[1] / n3));
        ax[2] += a_acc * ss * xd[1] / nn;
        ay[2] += a_acc * ss * yd[1] / nn;
        let n5 = n3 * n2;
        ax[1] += a_kappa * (yd[2] / n3 - 3.0 * cr * xd[1] / n5);
        ay[1] += a_kappa * (-xd[2] / n3 - 3.0 * cr * yd[1] / n5);
        ax[2] += a_kappa * (-yd[1] / n3);
        ay[2] += a_kappa * (xd[1] / n3);
        ax[1] += a_n2 * 2.0 * xd[1];
        ay[1] += a_n2 * 2.0 * yd[1];

        // into coefficients and the stamp's own dependence on S and T_f
        let mut d_sigma = 0.0;
        for o in 0..3 {
            let b = basis(sigma, o);
            for c in 0..COEFFS {
                g.xy_c[(COEFFS * j + c) * 2] += ax[o] * b[c];
                g.xy_c[(COEFFS * j + c) * 2 + 1] += ay[o] * b[c];
            }
            d_sigma += ax[o] * xd[o + 1] + ay[o] * yd[o + 1];
        }
        a_s[0] += d_sigma;
        for seg in &mut g.segments[..j] {
            *seg -= d_sigma;
        }
        let mut d_tau = 0.0;
        for o in 0..3 {
            let b = basis(tau, o);
            for c in 0..COEFFS {
                g.s_c[COEFFS * j + c] += a_s[o] * b[c];
            }
            d_tau += a_s[o] * s[o + 1];
        }
        g.duration += d_tau * frac_s / m as f64;
        if n > 0 {
            let b0 = basis(tau_th, 0);
            let b1 = basis(tau_th, 1);
            let mut d_tau_th = 0.0;
            for i in 0..n {
                let (ay_i, ad_i) = (a_yaw[i + 1], a_thd[i]);
                for c in 0..COEFFS {
                    g.th_c[(COEFFS * kth + c) * n + i] += ay_i * b0[c] + ad_i * b1[c];
                }
                d_tau_th += ay_i * th[i][1] + ad_i * th[i][2];
            }
            g.duration += d_tau_th * frac_th / omega as f64;
        }
    }

    fn visit_end_region(&self, dec: &Decoded, x: &[f64], visitor: &mut dyn ConstraintVisitor, g: &mut Grads) {
        let n = self.layout.trailers;
        let e = self.layout.end_pose().start;
        let yaws = &dec.end_yaws;
        let mut pos = vec![Vec2::new(x[e], x[e + 1])];
        for i in 1..=n {
            let prev = pos[i - 1];
            pos.push(prev - self.params.hitch_lengths[i - 1] * Vec2::new(yaws[i].cos(), yaws[i].sin()));
        }
        let mut a_p = vec![Vec2::zeros(); n + 1];
        for i in 0..=n {
            let r = rotation(yaws[i]);
            let (si, ci) = yaws[i].sin_cos();
            for c in self.params.body_corners(i) {
                let world = r * c + pos[i];
                let d_world = Vec2::new(-si * c.x - ci * c.y, ci * c.x - si * c.y);
                for (nrm, v) in self.region.normals.iter().zip(&self.region.vertices) {
                    let w = visitor.inequality(END_REGION, nrm.dot(&(world - v)) + self.cfg.region_margin);
                    a_p[i] += w * nrm;
                    g.end_yaws[i] += w * nrm.dot(&d_world);
                }
            }
        }
        for i in (1..=n).rev() {
            let carry = a_p[i];
            a_p[i - 1] += carry;
            g.end_yaws[i] += self.params.hitch_lengths[i - 1] * carry.dot(&Vec2::new(yaws[i].sin(), -yaws[i].cos()));
        }
        g.end_xy[0] += a_p[0].x;
        g.end_xy[1] += a_p[0].y;
    }

    /// Evaluates the cost and visits every constraint; returns the decoded
    /// trajectory as a by-product.
    pub fn evaluate_decoded(
        &self,
        x: &[f64],
        visitor: &mut dyn ConstraintVisitor,
        grad: &mut [f64],
    ) -> Result<(f64, Decoded), PolyError> {
        let l = self.layout;
        let (m, omega, n) = (l.pieces, l.trailer_pieces, l.trailers);
        let dec = self.decode(x)?;
        let mut w_st = vec![self.cfg.w_s];
        w_st.extend(std::iter::repeat(self.cfg.w_theta).take(n));
        let je = dec.traj.jerk_energy(self.cfg.w_p, &w_st);
        let cost = je.cost + self.cfg.rho_t * dec.duration;
        let mut g = Grads {
            xy_c: je.xy.0,
            xy_l: je.xy.1,
            s_c: je.s_of_t.0,
            s_l: je.s_of_t.1,
            th_c: je.thetas.0,
            th_l: je.thetas.1,
            segments: vec![0.0; m],
            duration: self.cfg.rho_t,
            end_xy: [0.0; 2],
            end_yaws: vec![0.0; n + 1],
        };

        for (j, p) in self.stamps() {
            self.visit_stamp(&dec, j, p, visitor, &mut g);
        }
        self.visit_end_region(&dec, x, visitor, &mut g);

        let traj = &dec.traj;
        let e = l.end_pose().start;
        let theta0_end = x[e + 2];

        let gxy = dec.minco_xy.propagate_grad(&traj.xy, &g.xy_c, &g.xy_l)?;
        grad[l.waypoints()].copy_from_slice(&gxy.waypoints);
        for (a, b) in g.segments.iter_mut().zip(&gxy.lengths) {
            *a += b;
        }
        let mut g_theta0_end = -theta0_end.sin() * gxy.end.derivative[0] + theta0_end.cos() * gxy.end.derivative[1];
        let mut g_end_xy = [g.end_xy[0] + gxy.end.value[0], g.end_xy[1] + gxy.end.value[1]];

        let gs = dec.minco_s.propagate_grad(&traj.s_of_t, &g.s_c, &g.s_l)?;
        g.duration += gs.lengths.iter().sum::<f64>() / m as f64;
        // interior targets are cumulative sums of the segments, the end is the total
        let mut tail = gs.end.value[0];
        for k in (0..m).rev() {
            g.segments[k] += tail;
            if k > 0 {
                tail += gs.waypoints[k - 1];
            }
        }

        let gth = dec.minco_theta.propagate_grad(&traj.thetas, &g.th_c, &g.th_l)?;
        g.duration += gth.lengths.iter().sum::<f64>() / omega as f64;
        grad[l.trailer_waypoints()].copy_from_slice(&gth.waypoints);
        for i in 0..n {
            g.end_yaws[i + 1] += gth.end.value[i];
        }

        // theta_i_end = theta0_end - sum_{k <= i} hitch_k
        g_theta0_end += g.end_yaws.iter().sum::<f64>();
        let mut suffix = 0.0;
        let hs = l.hitches().start;
        for k in (1..=n).rev() {
            suffix += g.end_yaws[k];
            grad[hs + k - 1] = -suffix * dec.d_hitches[k - 1];
        }
        g_end_xy.iter_mut().zip(&mut grad[e..e + 2]).for_each(|(a, b)| *b = *a);
        grad[e + 2] = g_theta0_end;
        for (k, (gs, ds)) in g.segments.iter().zip(&dec.d_segments).enumerate() {
            grad[l.segments().start + k] = gs * ds;
        }
        grad[l.duration()] = g.duration * dec.d_duration;
        Ok((cost, dec))
    }
}

impl ConstrainedProblem for TrajectoryProblem<'_> {
    fn dim(&self) -> usize {
        self.layout.len()
    }

    fn class_names(&self) -> Vec<&'static str> {
        CLASS_NAMES.to_vec()
    }

    fn evaluate(&self, x: &[f64], visitor: &mut dyn ConstraintVisitor, grad: &mut [f64]) -> f64 {
        if x.iter().any(|v| !v.is_finite()) {
            grad.fill(0.0);
            return f64::INFINITY;
        }
        match self.evaluate_decoded(x, visitor, grad) {
            Ok((cost, _)) => cost,
            Err(_) => {
                grad.fill(0.0);
                f64::INFINITY
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{build_sdf, rasterize, Bounds, ObstacleSet, Polygon};
    use crate::opt::alm::{augmented_lagrangian, AlmState, RecordingVisitor};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup(n: usize) -> (RobotParams, Sdf, TargetRegion) {
        let params = RobotParams::benchmark(n);
        let obs = ObstacleSet {
            bounds: Bounds::new([-2.0, -4.0], [12.0, 4.0]),
            polygons: vec![Polygon::new(vec![[4.0, 0.9], [5.0, 0.9], [5.0, 2.0], [4.0, 2.0]])],
        };
        let sdf = build_sdf(&rasterize(&obs, 0.1).unwrap());
        let region = TargetRegion::rectangle(Vec2::new(8.5, 0.0), 0.0, 3.0, 1.4);
        (params, sdf, region)
    }

    fn straight_guess(problem: &TrajectoryProblem, len: f64) -> Parameters {
        let l = problem.layout;
        let m = l.pieces;
        let waypoints = (1..m).flat_map(|j| [len * j as f64 / m as f64, 0.0]).collect();
        Parameters {
            waypoints,
            segments: vec![len / m as f64; m],
            trailer_waypoints: vec![0.0; l.trailers * (l.trailer_pieces - 1)],
            end_pose: [len, 0.0, 0.0],
            hitches: vec![0.0; l.trailers],
            duration: len / 1.2,
        }
    }

    #[test]
    fn layout_is_contiguous() {
        let l = Layout { pieces: 4, trailer_pieces: 8, trailers: 2 };
        assert_eq!(l.waypoints(), 0..6);
        assert_eq!(l.segments(), 6..10);
        assert_eq!(l.trailer_waypoints(), 10..24);
        assert_eq!(l.end_pose(), 24..27);
        assert_eq!(l.hitches(), 27..29);
        assert_eq!(l.duration(), 29);
        assert_eq!(l.len(), 30);
    }

    #[test]
    fn encode_decode_round_trip() {
        let (params, sdf, region) = setup(2);
        let start = RobotState::aligned(0.0, 0.0, 0.0, 2);
        let problem = TrajectoryProblem::new(&params, &sdf, &region, start, 4, SolverConfig::default());
        let mut p = straight_guess(&problem, 8.0);
        p.hitches = vec![0.3, -0.2];
        p.segments = vec![1.5, 2.5, 2.0, 2.0];
        let x = problem.encode(&p).unwrap();
        let back = problem.parameters(&x);
        for (a, b) in back.segments.iter().zip(&p.segments) {
            assert!((a - b).abs() < 1e-9);
        }
        assert!((back.duration - p.duration).abs() < 1e-9);
        for (a, b) in back.hitches.iter().zip(&p.hitches) {
            assert!((a - b).abs() < 1e-12);
        }
        let d1 = problem.decode(&x).unwrap();
        let d2 = problem.decode(&problem.encode(&back).unwrap()).unwrap();
        for (a, b) in d1.traj.xy.coefficients().iter().zip(d2.traj.xy.coefficients()) {
            assert!((a - b).abs() < 1e-9);
        }
        assert!((d1.end_yaws[2] - (0.0 - 0.3 + 0.2)).abs() < 1e-12);
    }

    #[test]
    fn decoded_boundaries_hold() {
        let (params, sdf, region) = setup(1);
        let start = RobotState::new(0.0, 0.0, 0.4, vec![0.2]);
        let problem = TrajectoryProblem::new(&params, &sdf, &region, start.clone(), 4, SolverConfig::default());
        let x = problem.encode(&straight_guess(&problem, 8.0)).unwrap();
        let dec = problem.decode(&x).unwrap();
        let k0 = crate::poly::composed_state(&dec.traj, 0.0, &params).unwrap();
        assert!((k0.state.theta0 - 0.4).abs() < 1e-12);
        assert!((k0.tangent_norm_sq - 1.0).abs() < 1e-12);
        assert!((k0.state.thetas[0] - 0.2).abs() < 1e-12);
        let kf = crate::poly::composed_state(&dec.traj, dec.duration, &params).unwrap();
        assert!(kf.state.v0.abs() < 1e-12);
        assert!(kf.trailer_rates[0].abs() < 1e-12);
        assert!((kf.arc[0] - 8.0).abs() < 1e-10);
    }

    #[test]
    fn obstacle_crossing_is_flagged() {
        let (params, sdf, region) = setup(0);
        let start = RobotState::new(0.0, 1.5, 0.0, vec![]);
        let problem = TrajectoryProblem::new(&params, &sdf, &region, start, 4, SolverConfig::default());
        let mut p = straight_guess(&problem, 8.0);
        for w in p.waypoints.chunks_mut(2) {
            w[1] = 1.5;
        }
        p.end_pose[1] = 1.5;
        let x = problem.encode(&p).unwrap();
        let mut rec = RecordingVisitor::default();
        let mut g = vec![0.0; problem.dim()];
        problem.evaluate(&x, &mut rec, &mut g);
        assert!(rec.inequalities.iter().any(|(c, v)| *c == CLEARANCE && *v > 0.0));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for (n, m) in [(0, 3), (1, 4), (2, 4), (3, 5)] {
            let (params, sdf, region) = setup(n);
            let start = RobotState::new(0.0, -0.3, 0.1, (0..n).map(|i| 0.1 - 0.05 * i as f64).collect());
            let mut start = start;
            start.v0 = 0.4;
            let cfg = SolverConfig { stamps: 8, ..Default::default() };
            let problem = TrajectoryProblem::new(&params, &sdf, &region, start, m, cfg);
            let mut x = problem.encode(&straight_guess(&problem, 8.0)).unwrap();
            for v in x.iter_mut() {
                *v += rng.gen_range(-0.15..0.15);
            }
            let mut rec = RecordingVisitor::default();
            let mut scratch = vec![0.0; x.len()];
            problem.evaluate(&x, &mut rec, &mut scratch);
            let state = AlmState {
                lambda: (0..rec.equalities.len()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                mu: (0..rec.inequalities.len()).map(|_| rng.gen_range(0.0..1.0)).collect(),
                rho: 10.0,
            };
            let mut grad = vec![0.0; x.len()];
            augmented_lagrangian(&problem, &state, &x, &mut grad);
            let h = 1e-6;
            let mut fd = vec![0.0; x.len()];
            for i in 0..x.len() {
                let mut xp = x.clone();
                xp[i] += h;
                let fp = augmented_lagrangian(&problem, &state, &xp, &mut scratch);
                xp[i] -= 2.0 * h;
                let fm = augmented_lagrangian(&problem, &state, &xp, &mut scratch);
                fd[i] = (fp - fm) / (2.0 * h);
            }
            let scale = fd.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            for i in 0..x.len() {
                assert!((grad[i] - fd[i]).abs() <= 1e-4 * scale, "n={n} m={m} component {i}: {} vs {}", grad[i], fd[i]);
            }
        }
    }
}
