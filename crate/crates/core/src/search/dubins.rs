//! Shortest forward paths of bounded curvature between two planar poses.

use std::f64::consts::TAU;

/// Planar pose `(x, y, heading)`.
pub type Pose = [f64; 3];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Segment {
    Left,
    Straight,
    Right,
}

impl Segment {
    /// Signed curvature in units of `1 / radius`.
    pub fn turn(self) -> f64 {
        match self {
            Segment::Left => 1.0,
            Segment::Straight => 0.0,
            Segment::Right => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Word {
    Lsl,
    Rsr,
    Lsr,
    Rsl,
    Rlr,
    Lrl,
}

impl Word {
    pub const ALL: [Word; 6] = [Word::Lsl, Word::Rsr, Word::Lsr, Word::Rsl, Word::Rlr, Word::Lrl];

    pub fn segments(self) -> [Segment; 3] {
        use Segment::*;
        match self {
            Word::Lsl => [Left, Straight, Left],
            Word::Rsr => [Right, Straight, Right],
            Word::Lsr => [Left, Straight, Right],
            Word::Rsl => [Right, Straight, Left],
            Word::Rlr => [Right, Left, Right],
            Word::Lrl => [Left, Right, Left],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DubinsPath {
    pub start: Pose,
    pub word: Word,
    /// Segment lengths normalized by the turning radius.
    pub params: [f64; 3],
    pub radius: f64,
}

fn wrap(a: f64) -> f64 {
    a.rem_euclid(TAU)
}

/// Normalized segment lengths of one word, or `None` if it does not exist.
fn word_params(word: Word, d: f64, alpha: f64, beta: f64) -> Option<[f64; 3]> {
    let (sa, ca) = alpha.sin_cos();
    let (sb, cb) = beta.sin_cos();
    let cab = (alpha - beta).cos();
    match word {
        Word::Lsl => {
            let p2 = 2.0 + d * d - 2.0 * cab + 2.0 * d * (sa - sb);
            if p2 < 0.0 {
                return None;
            }
            let tmp = (cb - ca).atan2(d + sa - sb);
            Some([wrap(tmp - alpha), p2.sqrt(), wrap(beta - tmp)])
        }
        Word::Rsr => {
            let p2 = 2.0 + d * d - 2.0 * cab + 2.0 * d * (sb - sa);
            if p2 < 0.0 {
                return None;
            }
            let tmp = (ca - cb).atan2(d - sa + sb);
            Some([wrap(alpha - tmp), p2.sqrt(), wrap(tmp - beta)])
        }
        Word::Lsr => {
            let p2 = -2.0 + d * d + 2.0 * cab + 2.0 * d * (sa + sb);
            if p2 < 0.0 {
                return None;
            }
            let p = p2.sqrt();
            let tmp = (-ca - cb).atan2(d + sa + sb) - (-2.0f64).atan2(p);
            Some([wrap(tmp - alpha), p, wrap(tmp - beta)])
        }
        Word::Rsl => {
            let p2 = -2.0 + d * d + 2.0 * cab - 2.0 * d * (sa + sb);
            if p2 < 0.0 {
                return None;
            }
            let p = p2.sqrt();
            let tmp = (ca + cb).atan2(d - sa - sb) - 2.0f64.atan2(p);
            Some([wrap(alpha - tmp), p, wrap(beta - tmp)])
        }
        Word::Rlr => {
            let tmp = (6.0 - d * d + 2.0 * cab + 2.0 * d * (sa - sb)) / 8.0;
            if tmp.abs() > 1.0 {
                return None;
            }
            let p = wrap(TAU - tmp.acos());
            let t = wrap(alpha - (ca - cb).atan2(d - sa + sb) + p / 2.0);
            Some([t, p, wrap(alpha - beta - t + p)])
        }
        Word::Lrl => {
            let tmp = (6.0 - d * d + 2.0 * cab + 2.0 * d * (sb - sa)) / 8.0;
            if tmp.abs() > 1.0 {
                return None;
            }
            let p = wrap(TAU - tmp.acos());
            let t = wrap(-alpha - (ca - cb).atan2(d + sa - sb) + p / 2.0);
            Some([t, p, wrap(beta - alpha - t + p)])
        }
    }
}

/// Moves along one segment by a normalized length `t` from a unit-radius pose.
fn advance(q: Pose, seg: Segment, t: f64) -> Pose {
    let [x, y, th] = q;
    match seg {
        Segment::Left => [x + (th + t).sin() - th.sin(), y - (th + t).cos() + th.cos(), th + t],
        Segment::Right => [x - (th - t).sin() + th.sin(), y + (th - t).cos() - th.cos(), th - t],
        Segment::Straight => [x + t * th.cos(), y + t * th.sin(), th],
    }
}

impl DubinsPath {
    /// Word `word` from `from` to `to`, if that word exists.
    pub fn with_word(from: Pose, to: Pose, radius: f64, word: Word) -> Option<Self> {
        let dx = to[0] - from[0];
        let dy = to[1] - from[1];
        let d = dx.hypot(dy) / radius;
        let phi = if d > 0.0 { dy.atan2(dx) } else { 0.0 };
        let alpha = wrap(from[2] - phi);
        let beta = wrap(to[2] - phi);
        word_params(word, d, alpha, beta).map(|params| Self { start: from, word, params, radius })
    }

    pub fn length(&self) -> f64 {
        self.params.iter().sum::<f64>() * self.radius
    }

    /// Pose at arc length `s` (clamped to the path).
    pub fn pose_at(&self, s: f64) -> Pose {
        let mut remaining = (s / self.radius).clamp(0.0, self.params.iter().sum());
        let mut q = [0.0, 0.0, self.start[2]];
        for (seg, len) in self.word.segments().iter().zip(self.params) {
            let step = remaining.min(len);
            q = advance(q, *seg, step);
            remaining -= step;
            if remaining <= 0.0 {
                break;
            }
        }
        [self.start[0] + q[0] * self.radius, self.start[1] + q[1] * self.radius, wrap_pi(q[2])]
    }

    /// Signed curvature at arc length `s`.
    pub fn curvature_at(&self, s: f64) -> f64 {
        let mut u = s / self.radius;
        for (seg, len) in self.word.segments().iter().zip(self.params) {
            if u <= len {
                return seg.turn() / self.radius;
            }
            u -= len;
        }
        self.word.segments()[2].turn() / self.radius
    }

    /// Poses at arc lengths `0, step, 2 step, ...` and at the end.
    pub fn sample(&self, step: f64) -> Vec<(f64, Pose)> {
        let len = self.length();
        let n = (len / step).ceil().max(1.0) as usize;
        (0..=n).map(|k| {
            let s = len * k as f64 / n as f64;
            (s, self.pose_at(s))
        })
        .collect()
    }
}

pub fn wrap_pi(a: f64) -> f64 {
    let w = (a + std::f64::consts::PI).rem_euclid(TAU) - std::f64::consts::PI;
    if w == -std::f64::consts::PI {
        std::f64::consts::PI
    } else {
        w
    }
}

/// Shortest of the six words, or `None` for a non-positive radius.
pub fn dubins_connect(from: Pose, to: Pose, radius: f64) -> Option<DubinsPath> {
    if !(radius > 0.0) {
        return None;
    }
    if from[0] == to[0] && from[1] == to[1] && wrap_pi(from[2] - to[2]) == 0.0 {
        return Some(DubinsPath { start: from, word: Word::Lsl, params: [0.0; 3], radius });
    }
    Word::ALL
        .iter()
        .filter_map(|w| DubinsPath::with_word(from, to, radius, *w))
        .min_by(|a, b| a.length().total_cmp(&b.length()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn close(a: Pose, b: Pose, tol: f64) -> bool {
        (a[0] - b[0]).abs() < tol && (a[1] - b[1]).abs() < tol && wrap_pi(a[2] - b[2]).abs() < tol
    }

    #[test]
    fn straight_connection() {
        let p = dubins_connect([0.0, 0.0, 0.0], [5.0, 0.0, 0.0], 1.0).unwrap();
        assert!((p.length() - 5.0).abs() < 1e-12);
        assert!(close(p.pose_at(p.length()), [5.0, 0.0, 0.0], 1e-12));
    }

    #[test]
    fn identical_poses_have_zero_length() {
        let q = [1.0, -2.0, 0.3];
        let p = dubins_connect(q, q, 0.7).unwrap();
        assert!(p.length() < 1e-12);
    }

    #[test]
    fn u_turn_is_no_longer_than_lsl() {
        // LSL for (0,0,0) -> (0,4,pi), r = 1: quarter turn, 2 m straight, quarter turn
        let lsl = PI / 2.0 + 2.0 + PI / 2.0;
        let p = dubins_connect([0.0, 0.0, 0.0], [0.0, 4.0, PI], 1.0).unwrap();
        let w = DubinsPath::with_word([0.0, 0.0, 0.0], [0.0, 4.0, PI], 1.0, Word::Lsl).unwrap();
        assert!((w.length() - lsl).abs() < 1e-12);
        assert!(p.length() <= lsl + 1e-12);
    }

    #[test]
    fn every_word_reaches_its_goal() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let a = [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0), rng.gen_range(-PI..PI)];
            let b = [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0), rng.gen_range(-PI..PI)];
            let r = rng.gen_range(0.3..2.0);
            let mut best = f64::INFINITY;
            for w in Word::ALL {
                if let Some(p) = DubinsPath::with_word(a, b, r, w) {
                    assert!(close(p.pose_at(p.length()), b, 1e-9), "{w:?}");
                    best = best.min(p.length());
                }
            }
            let p = dubins_connect(a, b, r).unwrap();
            assert_eq!(p.length(), best);
            // no shorter than the straight-line distance
            assert!(p.length() >= (b[0] - a[0]).hypot(b[1] - a[1]) - 1e-9);
        }
    }

    #[test]
    fn samples_are_spaced_and_curvature_is_bounded() {
        let p = dubins_connect([0.0, 0.0, 0.0], [2.0, 3.0, -1.0], 0.8).unwrap();
        let s = p.sample(0.1);
        for w in s.windows(2) {
            let d = (w[1].1[0] - w[0].1[0]).hypot(w[1].1[1] - w[0].1[1]);
            assert!(d <= 0.1 + 1e-9);
        }
        for (arc, _) in &s {
            assert!(p.curvature_at(*arc).abs() <= 1.0 / 0.8 + 1e-12);
        }
    }
}
