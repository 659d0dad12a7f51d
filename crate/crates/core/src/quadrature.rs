//! Globally adaptive Gauss–Legendre quadrature and Wynn's epsilon algorithm.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ORDER: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureConfig {
    pub abs_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            max_subdivisions: 1 << 16,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.abs_tol.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "abs_tol must be positive, got {}",
                self.abs_tol
            )));
        }
        if self.max_subdivisions == 0 {
            return Err(Error::InvalidInput("max_subdivisions must be positive".into()));
        }
        Ok(())
    }

    pub fn with_tol(abs_tol: f64) -> Self {
        Self {
            abs_tol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: Complex64,
    pub est_error: f64,
    pub subdivisions: usize,
}

/// Compensated (Neumaier) accumulator for complex sums.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    re: (f64, f64),
    im: (f64, f64),
}

fn neumaier_add((sum, comp): &mut (f64, f64), x: f64) {
    let t = *sum + x;
    if sum.abs() >= x.abs() {
        *comp += (*sum - t) + x;
    } else {
        *comp += (x - t) + *sum;
    }
    *sum = t;
}

impl NeumaierSum {
    pub fn add(&mut self, z: Complex64) {
        neumaier_add(&mut self.re, z.re);
        neumaier_add(&mut self.im, z.im);
    }

    pub fn total(&self) -> Complex64 {
        Complex64::new(self.re.0 + self.re.1, self.im.0 + self.im.1)
    }
}

impl FromIterator<Complex64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = Complex64>>(iter: I) -> Self {
        let mut s = Self::default();
        for z in iter {
            s.add(z);
        }
        s
    }
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[−1, 1]`.
pub fn gauss_legendre_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Three-term recurrence for P_n(x) and its derivative.
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 {
                1.0
            } else if n == 1 {
                x
            } else {
                p1
            };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre_rule(ORDER))
}

/// Fixed 20-point Gauss–Legendre rule on `[a, b]`.
pub fn gauss_legendre<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> Complex64 {
    let (nodes, weights) = rule();
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let s: NeumaierSum = nodes.iter().zip(weights).map(|(x, w)| f(mid + half * x) * *w).collect();
    s.total() * half
}

struct Segment {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
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
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

fn segment<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64, whole: Complex64) -> (Segment, Complex64, Complex64) {
    let m = 0.5 * (a + b);
    let left = gauss_legendre(f, a, m);
    let right = gauss_legendre(f, m, b);
    let value = left + right;
    let error = (value - whole).norm();
    (Segment { a, b, value, error }, left, right)
}

/// Integrates `f` over `[a, b]`, bisecting the segment with the largest error
/// estimate until the summed estimate drops below `cfg.abs_tol`.
pub fn adaptive<F: Fn(f64) -> Complex64>(f: F, a: f64, b: f64, cfg: &QuadratureConfig) -> Result<QuadResult> {
    cfg.validate()?;
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidInput("integration bounds must be finite".into()));
    }
    if a == b {
        return Ok(QuadResult {
            value: Complex64::default(),
            est_error: 0.0,
            subdivisions: 0,
        });
    }
    let whole = gauss_legendre(&f, a, b);
    let (first, _, _) = segment(&f, a, b, whole);
    let mut heap = BinaryHeap::new();
    let mut total_error = first.error;
    heap.push(first);
    let mut subdivisions = 0;

    let collect = |heap: &BinaryHeap<Segment>| -> (Complex64, f64) {
        let mut segs: Vec<&Segment> = heap.iter().collect();
        segs.sort_by(|x, y| x.a.total_cmp(&y.a));
        let value: NeumaierSum = segs.iter().map(|s| s.value).collect();
        (value.total(), segs.iter().map(|s| s.error).sum())
    };

    while total_error > cfg.abs_tol {
        if subdivisions >= cfg.max_subdivisions {
            let (estimate, error) = collect(&heap);
            return Err(Error::NonConvergence { estimate, error });
        }
        let worst = heap.pop().expect("heap is never empty");
        let m = 0.5 * (worst.a + worst.b);
        if !(worst.a < m && m < worst.b) {
            // Interval cannot be split further in floating point.
            let (estimate, error) = collect(&heap);
            return Err(Error::NonConvergence {
                estimate: estimate + worst.value,
                error: error + worst.error,
            });
        }
        let left_whole = gauss_legendre(&f, worst.a, m);
        let right_whole = gauss_legendre(&f, m, worst.b);
        let (l, _, _) = segment(&f, worst.a, m, left_whole);
        let (r, _, _) = segment(&f, m, worst.b, right_whole);
        if !(l.value.re.is_finite() && l.value.im.is_finite() && r.value.re.is_finite() && r.value.im.is_finite()) {
            return Err(Error::NonConvergence {
                estimate: Complex64::new(f64::NAN, f64::NAN),
                error: f64::INFINITY,
            });
        }
        heap.push(l);
        heap.push(r);
        subdivisions += 1;
        // Re-summing avoids drift from repeated subtraction.
        total_error = heap.iter().map(|s| s.error).sum();
    }
    let (value, est_error) = collect(&heap);
    Ok(QuadResult {
        value,
        est_error,
        subdivisions,
    })
}

/// Wynn's epsilon algorithm on a sequence of partial sums. Returns the
/// accelerated limit and an error estimate taken from the difference of
/// successive even columns, or `None` for fewer than three terms.
pub fn wynn_epsilon(partial_sums: &[Complex64]) -> Option<(Complex64, f64)> {
    let n = partial_sums.len();
    if n < 3 {
        return None;
    }
    let mut best = partial_sums[n - 1];
    let mut best_err = (partial_sums[n - 1] - partial_sums[n - 2]).norm();
    let mut prev: Vec<Complex64> = vec![Complex64::default(); n + 1];
    let mut cur: Vec<Complex64> = partial_sums.to_vec();
    let mut last_even = partial_sums[n - 1];
    for k in 1..n {
        let len = cur.len() - 1;
        if len == 0 {
            break;
        }
        let mut next = Vec::with_capacity(len);
        let mut broke = false;
        for i in 0..len {
            let diff = cur[i + 1] - cur[i];
            if diff.norm() <= 1e-300 {
                broke = true;
                break;
            }
            next.push(prev[i + 1] + diff.inv());
        }
        if broke {
            break;
        }
        if k % 2 == 0 {
            let est = *next.last().expect("nonempty column");
            let err = (est - last_even).norm();
            if err < best_err {
                best = est;
                best_err = err;
            }
            last_even = est;
        }
        prev = cur;
        cur = next;
    }
    Some((best, best_err))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn rule_is_exact_for_high_degree_polynomials() {
        let (nodes, weights) = gauss_legendre_rule(ORDER);
        assert!((weights.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        for deg in 0..(2 * ORDER) {
            let q: f64 = nodes.iter().zip(&weights).map(|(x, w)| w * x.powi(deg as i32)).sum();
            let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
            assert!((q - exact).abs() < 1e-14, "degree {deg}");
        }
    }

    #[test]
    fn odd_order_rule() {
        let (nodes, weights) = gauss_legendre_rule(5);
        assert_eq!(nodes[2], 0.0);
        assert!((weights[2] - 128.0 / 225.0).abs() < 1e-15);
    }

    #[test]
    fn adaptive_handles_peaked_integrand() {
        let cfg = QuadratureConfig::default();
        let r = adaptive(|x| c(1.0 / (1e-4 + x * x)), -1.0, 1.0, &cfg).unwrap();
        let exact = 2.0 / 1e-2 * (1.0f64 / 1e-2).atan();
        assert!((r.value.re - exact).abs() < 1e-8);
        assert!(r.subdivisions > 0);
    }

    #[test]
    fn adaptive_reports_nonconvergence() {
        let cfg = QuadratureConfig {
            abs_tol: 1e-14,
            max_subdivisions: 3,
        };
        let err = adaptive(|x| c((1.0 / x).sin()), 1e-6, 1.0, &cfg).unwrap_err();
        assert!(matches!(err, Error::NonConvergence { .. }));
    }

    #[test]
    fn wynn_accelerates_alternating_series() {
        // ln 2 = 1 − 1/2 + 1/3 − …
        let mut s = c(0.0);
        let sums: Vec<Complex64> = (1..=20)
            .map(|k| {
                s += c(if k % 2 == 1 { 1.0 } else { -1.0 } / k as f64);
                s
            })
            .collect();
        let (v, err) = wynn_epsilon(&sums).unwrap();
        assert!((v.re - 2f64.ln()).abs() < 1e-12);
        assert!(err < 1e-10);
    }

    #[test]
    fn wynn_on_constant_sequence() {
        let (v, _) = wynn_epsilon(&[c(2.0); 5]).unwrap();
        assert_eq!(v, c(2.0));
    }

    #[test]
    fn neumaier_recovers_cancellation() {
        let s: NeumaierSum = [c(1.0), c(1e100), c(1.0), c(-1e100)].into_iter().collect();
        assert_eq!(s.total(), c(2.0));
    }
}
