//! Globally adaptive Gauss-Kronrod (7/15) quadrature.

use crate::error::{Error, Result};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            max_intervals: 4000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut gauss = fc * WG[3];
    let mut kron = fc * WGK[7];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    Segment {
        a,
        b,
        value: kron * h,
        error: ((kron - gauss) * h).abs(),
    }
}

/// Integrates `f` over the finite interval [a, b].
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: QuadOptions) -> Result<QuadResult> {
    integrate_pieces(&f, &[a, b], opts)
}

/// Integrates over [breaks[0], breaks[last]], starting from the given subdivision.
pub fn integrate_pieces<F: Fn(f64) -> f64>(f: &F, breaks: &[f64], opts: QuadOptions) -> Result<QuadResult> {
    if breaks.len() < 2 {
        return Err(Error::Domain("quadrature needs at least one interval".into()));
    }
    let mut heap = BinaryHeap::new();
    let mut total = 0.0;
    let mut err = 0.0;
    for w in breaks.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::Domain(format!("quadrature breakpoints not increasing: {} {}", w[0], w[1])));
        }
        let s = kronrod(f, w[0], w[1]);
        total += s.value;
        err += s.error;
        heap.push(s);
    }
    let mut n = heap.len();
    loop {
        if !total.is_finite() || !err.is_finite() {
            return Err(Error::Numerical {
                message: "non-finite integrand".into(),
                achieved: err,
            });
        }
        if err <= opts.abs_tol.max(opts.rel_tol * total.abs()) {
            return Ok(QuadResult {
                value: total,
                error: err,
                intervals: n,
            });
        }
        if n >= opts.max_intervals {
            return Err(Error::Numerical {
                message: format!("quadrature did not converge in {n} intervals"),
                achieved: err,
            });
        }
        let worst = heap.pop().expect("non-empty heap");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            return Err(Error::Numerical {
                message: "interval too small to bisect".into(),
                achieved: err,
            });
        }
        let left = kronrod(f, worst.a, mid);
        let right = kronrod(f, mid, worst.b);
        total += left.value + right.value - worst.value;
        err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        n += 1;
        if n % 64 == 0 {
            // refresh the running sums to stop cancellation drift
            total = heap.iter().map(|s| s.value).sum();
            err = heap.iter().map(|s| s.error).sum();
        }
    }
}

/// Integrates over the whole real line through x = c + s t/(1 - t^2), t in (-1, 1).
pub fn integrate_real_line<F: Fn(f64) -> f64>(f: F, center: f64, scale: f64, opts: QuadOptions) -> Result<QuadResult> {
    let g = |t: f64| {
        let d = 1.0 - t * t;
        if d <= 0.0 {
            return 0.0;
        }
        let x = center + scale * t / d;
        let jac = scale * (1.0 + t * t) / (d * d);
        let v = f(x) * jac;
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    let breaks: Vec<f64> = (0..=16).map(|i| -1.0 + i as f64 / 8.0).collect();
    integrate_pieces(&g, &breaks, opts)
}

/// Integrates over (0, infinity) through x = s t/(1 - t), t in (0, 1).
pub fn integrate_half_line<F: Fn(f64) -> f64>(f: F, scale: f64, opts: QuadOptions) -> Result<QuadResult> {
    let g = |t: f64| {
        let d = 1.0 - t;
        if d <= 0.0 || t <= 0.0 {
            return 0.0;
        }
        let x = scale * t / d;
        let v = f(x) * scale / (d * d);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    let breaks: Vec<f64> = (0..=16).map(|i| i as f64 / 16.0).collect();
    integrate_pieces(&g, &breaks, opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_and_gaussian() {
        let r = integrate(|x| x * x, 0.0, 3.0, QuadOptions::default()).unwrap();
        assert!((r.value - 9.0).abs() < 1e-12);
        let r = integrate_real_line(|x| (-0.5 * x * x).exp(), 0.0, 1.0, QuadOptions::default()).unwrap();
        assert!((r.value - (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-9);
        let r = integrate_real_line(|x| 1.0 / (std::f64::consts::PI * (1.0 + x * x)), 0.0, 1.0, QuadOptions::default()).unwrap();
        assert!((r.value - 1.0).abs() < 1e-9);
        let r = integrate_half_line(|x| (-x).exp(), 1.0, QuadOptions::default()).unwrap();
        assert!((r.value - 1.0).abs() < 1e-10);
    }

    #[test]
    fn reports_failure() {
        let opts = QuadOptions {
            max_intervals: 20,
            ..QuadOptions::default()
        };
        let r = integrate(|x: f64| x.abs().powf(-0.9), -1.0, 1.0, opts);
        assert!(matches!(r, Err(Error::Numerical { .. })));
    }
}
