//! Deterministic volumes of a Euclidean ball clipped to the unit cube.
//!
//! `d = 1` is interval clipping, `d = 2` is an exact disc/square area from the
//! antiderivative of `sqrt(r^2 - s^2)`, and `d = 3` integrates exact 2-D slice
//! areas with Gauss-Legendre on pieces split wherever the slice radius crosses
//! an edge or corner distance of the square.

use std::sync::OnceLock;

const GL_ORDER: usize = 24;

fn gauss_legendre() -> &'static (Vec<f64>, Vec<f64>) {
    static NODES: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    NODES.get_or_init(|| gauss_legendre_nodes(GL_ORDER))
}

/// Nodes and weights on `[-1, 1]` by Newton iteration on `P_n`.
pub fn gauss_legendre_nodes(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut xs = vec![0.0; n];
    let mut ws = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=n {
                let jf = j as f64;
                let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
                p0 = p1;
                p1 = p2;
            }
            // p1 = P_n(x), p0 = P_{n-1}(x)
            dp = nf * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        xs[i] = -x;
        xs[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        ws[i] = w;
        ws[n - 1 - i] = w;
    }
    (xs, ws)
}

fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let (xs, ws) = gauss_legendre();
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    half * xs
        .iter()
        .zip(ws)
        .map(|(x, w)| w * f(mid + half * x))
        .sum::<f64>()
}

/// `|[c - r, c + r] ∩ [0, 1]|`
pub fn interval_clip(c: f64, r: f64) -> f64 {
    ((c + r).min(1.0) - (c - r).max(0.0)).max(0.0)
}

/// Antiderivative of `sqrt(r^2 - s^2)` with `s` clamped to `[-r, r]`.
fn circle_primitive(s: f64, r: f64) -> f64 {
    let s = s.clamp(-r, r);
    0.5 * (s * (r * r - s * s).max(0.0).sqrt() + r * r * (s / r).clamp(-1.0, 1.0).asin())
}

/// `∫_{lo}^{hi} min(t, sqrt(r^2 - s^2)) ds` for `lo, hi` inside `[-r, r]`, `t >= 0`.
fn capped_chord_integral(lo: f64, hi: f64, r: f64, t: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let full = circle_primitive(hi, r) - circle_primitive(lo, r);
    if t >= r {
        return full;
    }
    // where sqrt(r^2 - s^2) > t the integrand is capped at t
    let w = (r * r - t * t).sqrt();
    let (a, b) = (lo.max(-w), hi.min(w));
    if b <= a {
        return full;
    }
    full - (circle_primitive(b, r) - circle_primitive(a, r)) + t * (b - a)
}

/// Exact area of the disc of radius `r` about `c` intersected with `[0,1]^2`.
pub fn disc_square_area(c: [f64; 2], r: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    let lo = (-c[0]).max(-r);
    let hi = (1.0 - c[0]).min(r);
    // chord length in y is min(1 - c_y, h) + min(c_y, h)
    capped_chord_integral(lo, hi, r, 1.0 - c[1]) + capped_chord_integral(lo, hi, r, c[1])
}

fn ball_cube_volume_3(c: [f64; 3], r: f64) -> f64 {
    let lo = (-c[2]).max(-r);
    let hi = (1.0 - c[2]).min(r);
    if hi <= lo {
        return 0.0;
    }
    let (x, y) = (c[0], c[1]);
    let mut critical = vec![x, 1.0 - x, y, 1.0 - y];
    for cx in [x, 1.0 - x] {
        for cy in [y, 1.0 - y] {
            critical.push(cx.hypot(cy));
        }
    }
    let mut cuts = vec![lo, hi];
    for a in critical {
        if a < r {
            let s = (r * r - a * a).sqrt();
            cuts.extend([-s, s].into_iter().filter(|v| *v > lo && *v < hi));
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let slice = |s: f64| disc_square_area([x, y], (r * r - s * s).max(0.0).sqrt());
    cuts.windows(2).map(|w| integrate(slice, w[0], w[1])).sum()
}

/// Volume of `B(c, r) ∩ [0,1]^d` for `d <= 3`; `None` in higher dimension.
pub fn ball_cube_volume(c: &[f64], r: f64) -> Option<f64> {
    if r <= 0.0 {
        return Some(0.0);
    }
    match *c {
        [c0] => Some(interval_clip(c0, r)),
        [c0, c1] => Some(disc_square_area([c0, c1], r)),
        [c0, c1, c2] => Some(ball_cube_volume_3([c0, c1, c2], r)),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn gl_integrates_polynomials_exactly() {
        let (xs, ws) = gauss_legendre_nodes(GL_ORDER);
        assert!((ws.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        // exact up to degree 2n - 1
        let q: f64 = xs.iter().zip(&ws).map(|(x, w)| w * x.powi(46)).sum();
        assert!((q - 2.0 / 47.0).abs() < 1e-14);
        let (xs, ws) = gauss_legendre_nodes(3);
        assert!((xs[2] - (0.6f64).sqrt()).abs() < 1e-15);
        assert!((ws[1] - 8.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn interior_balls() {
        assert!((ball_cube_volume(&[0.5], 0.3).unwrap() - 0.6).abs() < 1e-15);
        let a = ball_cube_volume(&[0.5, 0.5], 0.3).unwrap();
        assert!((a - PI * 0.09).abs() < 1e-14);
        let v = ball_cube_volume(&[0.5, 0.5, 0.5], 0.3).unwrap();
        assert!((v - 4.0 / 3.0 * PI * 0.027).abs() < 1e-12);
    }

    #[test]
    fn quarter_and_eighth_balls() {
        let a = ball_cube_volume(&[0.0, 0.0], 0.7).unwrap();
        assert!((a - PI * 0.49 / 4.0).abs() < 1e-14);
        let v = ball_cube_volume(&[0.0, 0.0, 0.0], 0.9).unwrap();
        assert!((v - PI * 0.729 / 6.0).abs() < 1e-10, "{v}");
        let half = ball_cube_volume(&[0.5, 0.5, 0.0], 0.4).unwrap();
        assert!((half - 2.0 / 3.0 * PI * 0.064).abs() < 1e-10);
    }

    #[test]
    fn huge_balls_cover_the_cube() {
        assert!((ball_cube_volume(&[0.2, 0.9], 2.0).unwrap() - 1.0).abs() < 1e-14);
        assert!((ball_cube_volume(&[0.2, 0.9, 0.4], 2.0).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn disc_square_by_grid_count() {
        // midpoint rule on a 2000^2 grid; error ~ perimeter / N
        let (c, r) = ([0.1, 0.8], 0.45);
        let n = 2000;
        let mut hits = 0usize;
        for i in 0..n {
            for j in 0..n {
                let (x, y) = ((i as f64 + 0.5) / n as f64, (j as f64 + 0.5) / n as f64);
                if (x - c[0]).hypot(y - c[1]) <= r {
                    hits += 1;
                }
            }
        }
        let grid = hits as f64 / (n * n) as f64;
        assert!((disc_square_area(c, r) - grid).abs() < 2e-4);
    }

    #[test]
    fn three_d_by_slicing_grid() {
        // cross-check against a fine midpoint rule over exact 2-D slices
        let (c, r): ([f64; 3], f64) = ([0.15, 0.7, 0.3], 0.6);
        let m = 20_000;
        let (lo, hi) = ((-c[2]).max(-r), (1.0 - c[2]).min(r));
        let h = (hi - lo) / m as f64;
        let mid: f64 = (0..m)
            .map(|i| {
                let s = lo + (i as f64 + 0.5) * h;
                disc_square_area([c[0], c[1]], (r * r - s * s).sqrt())
            })
            .sum::<f64>()
            * h;
        assert!((ball_cube_volume(&c, r).unwrap() - mid).abs() < 1e-7);
    }

    #[test]
    fn high_dimension_is_none() {
        assert_eq!(ball_cube_volume(&[0.5; 4], 0.1), None);
        assert_eq!(ball_cube_volume(&[0.5; 4], 0.0), Some(0.0));
    }
}
