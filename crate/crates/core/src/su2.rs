//! SU(2) as unit quaternions, the double cover onto SO(3), and the holonomies of
//! the invariant connections along linear and circular curves.
//!
//! The basis `τ₁ = −iσ₁, τ₂ = −iσ₂, τ₃ = −iσ₃` satisfies `τ₁τ₂ = τ₃`, so
//! `w·1 + x τ₁ + y τ₂ + z τ₃` multiplies like the quaternion `w + xi + yj + zk`.
//! Group elements are stored in that form and renormalized after each product.

use std::f64::consts::PI;
use std::ops::Mul;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frequency::Frequency;
use crate::harmonic::{beta, check_circle_params, circular_entry_decomposition, entry_a0, rbar_eval, RBarPoint};
use crate::Status;

const UNIT_AXIS_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Su2 {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

/// A 2×2 complex matrix, row major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2(pub [[Complex64; 2]; 2]);

impl Mat2 {
    pub fn identity() -> Self {
        let (o, l) = (Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0));
        Self([[l, o], [o, l]])
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.0;
        Self([[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]])
    }

    pub fn det(&self) -> Complex64 {
        let m = &self.0;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    pub fn frobenius_distance(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .flatten()
            .zip(other.0.iter().flatten())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// `‖M†M − 1‖_F`
    pub fn unitarity_defect(&self) -> f64 {
        (self.adjoint() * *self).frobenius_distance(&Self::identity())
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, rhs: Mat2) -> Mat2 {
        let (a, b) = (&self.0, &rhs.0);
        let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Mat2(out)
    }
}

/// Coefficients of an element of su(2) with respect to `τ₁, τ₂, τ₃`.
pub type AlgebraVector = [f64; 3];

fn norm3(v: &AlgebraVector) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn check_unit(v: &AlgebraVector) -> Result<()> {
    let n = norm3(v);
    if !n.is_finite() || (n - 1.0).abs() > UNIT_AXIS_TOL {
        return Err(Error::NonUnitAxis(n));
    }
    Ok(())
}

/// `μ(v) = v₁τ₁ + v₂τ₂ + v₃τ₃` as a matrix.
pub fn mu(v: &AlgebraVector) -> Mat2 {
    Su2::raw(0.0, v[0], v[1], v[2]).matrix()
}

impl Su2 {
    const fn raw(w: f64, x: f64, y: f64, z: f64) -> Self {
        Self { w, x, y, z }
    }

    pub const IDENTITY: Su2 = Su2::raw(1.0, 0.0, 0.0, 0.0);

    /// Normalizes `(w, x, y, z)` onto the unit sphere.
    pub fn new(w: f64, x: f64, y: f64, z: f64) -> Result<Self> {
        let n = (w * w + x * x + y * y + z * z).sqrt();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::InvalidInput(format!(
                "cannot normalize quaternion ({w}, {x}, {y}, {z})"
            )));
        }
        Ok(Self::raw(w / n, x / n, y / n, z / n))
    }

    /// The element with matrix `[[a, b], [−b̄, ā]]`.
    pub fn from_cayley_klein(a: Complex64, b: Complex64) -> Result<Self> {
        Self::new(a.re, -b.im, -b.re, -a.im)
    }

    pub fn quaternion(&self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }

    pub fn norm_defect(&self) -> f64 {
        ((self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt() - 1.0).abs()
    }

    fn renormalized(self) -> Self {
        let n = (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt();
        Self::raw(self.w / n, self.x / n, self.y / n, self.z / n)
    }

    fn hamilton(&self, o: &Self) -> Self {
        Self::raw(
            self.w * o.w - self.x * o.x - self.y * o.y - self.z * o.z,
            self.w * o.x + self.x * o.w + self.y * o.z - self.z * o.y,
            self.w * o.y - self.x * o.z + self.y * o.w + self.z * o.x,
            self.w * o.z + self.x * o.y - self.y * o.x + self.z * o.w,
        )
    }

    pub fn inverse(&self) -> Self {
        Self::raw(self.w, -self.x, -self.y, -self.z)
    }

    pub fn neg(&self) -> Self {
        Self::raw(-self.w, -self.x, -self.y, -self.z)
    }

    /// `[[w − iz, −y − ix], [y − ix, w + iz]]`
    pub fn matrix(&self) -> Mat2 {
        let c = Complex64::new;
        Mat2([
            [c(self.w, -self.z), c(-self.y, -self.x)],
            [c(self.y, -self.x), c(self.w, self.z)],
        ])
    }

    /// `‖A − B‖_op`; for quaternion matrices this equals the Euclidean distance in ℝ⁴.
    pub fn distance(&self, other: &Self) -> f64 {
        let d = [self.w - other.w, self.x - other.x, self.y - other.y, self.z - other.z];
        d.iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    /// `σ g σ⁻¹`
    pub fn conjugate_by(&self, sigma: &Self) -> Self {
        *sigma * *self * sigma.inverse()
    }
}

impl Mul for Su2 {
    type Output = Su2;
    fn mul(self, rhs: Su2) -> Su2 {
        self.hamilton(&rhs).renormalized()
    }
}

/// `exp(t·μ(n)) = cos t·1 + sin t·μ(n)` for a unit axis `n`.
pub fn su2_exp(t: f64, n: &AlgebraVector) -> Result<Su2> {
    check_unit(n)?;
    let (s, c) = t.sin_cos();
    Ok(Su2::raw(c, s * n[0], s * n[1], s * n[2]).renormalized())
}

/// The rotation `ρ(σ) = μ⁻¹ ∘ Ad_σ ∘ μ`, built column by column from `σ τ_i σ⁻¹`.
pub fn covering(sigma: &Su2) -> [[f64; 3]; 3] {
    let mut r = [[0.0; 3]; 3];
    for i in 0..3 {
        let mut e = [0.0; 3];
        e[i] = 1.0;
        let img = sigma
            .hamilton(&Su2::raw(0.0, e[0], e[1], e[2]))
            .hamilton(&sigma.inverse());
        for (row, v) in r.iter_mut().zip([img.x, img.y, img.z]) {
            row[i] = v;
        }
    }
    r
}

pub fn rotate(r: &[[f64; 3]; 3], v: &AlgebraVector) -> AlgebraVector {
    let mut out = [0.0; 3];
    for (o, row) in out.iter_mut().zip(r) {
        *o = row.iter().zip(v).map(|(a, b)| a * b).sum();
    }
    out
}

/// Holonomy along a straight segment of length `l` in direction `v`:
/// `cos(cl)·1 − sin(cl)·μ(v)`.
pub fn holonomy_linear(c: f64, l: f64, v: &AlgebraVector) -> Result<Su2> {
    su2_exp(-c * l, v)
}

/// `A(τ, c)` from its explicit entries.
pub fn a_matrix_entries(tau: f64, r: f64, c: f64) -> Mat2 {
    let b = beta(c, r);
    let (s, co) = (b * tau).sin_cos();
    let cx = Complex64::new;
    let off = c * r / b * s;
    Mat2([
        [cx(co, s / (2.0 * b)), cx(off, 0.0)],
        [cx(-off, 0.0), cx(co, -s / (2.0 * b))],
    ])
}

/// `A(τ, c) = exp(−τ/2·[2rc·τ₂ + τ₃])`, through the axis–angle form.
pub fn a_matrix_exp(tau: f64, r: f64, c: f64) -> Su2 {
    let b = beta(c, r);
    let axis = [0.0, 2.0 * r * c / (2.0 * b), 1.0 / (2.0 * b)];
    su2_exp(-tau * b, &axis).expect("axis has unit norm by construction")
}

/// `A(τ, c)` as a group element, from the entry formula.
pub fn a_element(tau: f64, r: f64, c: f64) -> Su2 {
    let b = beta(c, r);
    let s = (b * tau).sin();
    Su2::raw((b * tau).cos(), 0.0, -r * c * s / b, -s / (2.0 * b)).renormalized()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircularCurve {
    pub tau: f64,
    pub r: f64,
    pub n: AlgebraVector,
    pub sigma: Su2,
}

/// The minimal rotation carrying `e₃` to `n`; for `n = −e₃` the half turn about `e₁`.
pub fn minimal_sigma(n: &AlgebraVector) -> Result<Su2> {
    check_unit(n)?;
    let w = 1.0 + n[2];
    if w <= 1e-15 {
        return Ok(Su2::raw(0.0, 1.0, 0.0, 0.0));
    }
    Su2::new(w, -n[1], n[0], 0.0)
}

impl CircularCurve {
    pub fn new(tau: f64, r: f64, n: AlgebraVector) -> Result<Self> {
        let sigma = minimal_sigma(&n)?;
        Self::with_sigma(tau, r, n, sigma)
    }

    /// Any `σ` with `ρ(σ)e₃ = n` is admissible.
    pub fn with_sigma(tau: f64, r: f64, n: AlgebraVector, sigma: Su2) -> Result<Self> {
        check_circle_params(tau, r)?;
        check_unit(&n)?;
        let image = rotate(&covering(&sigma), &[0.0, 0.0, 1.0]);
        let err = norm3(&[image[0] - n[0], image[1] - n[1], image[2] - n[2]]);
        if err > 1e-10 {
            return Err(Error::InvalidInput(format!(
                "sigma does not carry e3 to n (error {err:e})"
            )));
        }
        Ok(Self { tau, r, n, sigma })
    }

    /// The reduced curve with `n = e₃`, `σ = 1`.
    pub fn reduced(tau: f64, r: f64) -> Result<Self> {
        Self::with_sigma(tau, r, [0.0, 0.0, 1.0], Su2::IDENTITY)
    }

    /// `d = exp(τ/2·μ(n))`
    pub fn d(&self) -> Su2 {
        su2_exp(self.tau / 2.0, &self.n).expect("validated axis")
    }

    /// `d·σ·g·σ⁻¹`
    fn place(&self, g: Su2) -> Su2 {
        self.d() * g.conjugate_by(&self.sigma)
    }

    /// Distance from `s` to the coset `d·σT_{e₂}σ⁻¹`, where `T_{e₂} = {exp(tτ₂)}`.
    pub fn coset_distance(&self, s: &Su2) -> f64 {
        let q = (self.d().inverse() * *s).conjugate_by(&self.sigma.inverse());
        circle_distance_e2(&q)
    }
}

/// Distance in ℝ⁴ from a unit quaternion to the great circle `{cos t + sin t·j}`.
pub fn circle_distance_e2(q: &Su2) -> f64 {
    let rho = (q.w * q.w + q.y * q.y).sqrt();
    (q.x * q.x + q.z * q.z + (rho - 1.0) * (rho - 1.0)).sqrt()
}

/// `d·σ·A(τ,c)·σ⁻¹`
pub fn holonomy_circular(c: f64, curve: &CircularCurve) -> Su2 {
    curve.place(a_element(curve.tau, curve.r, c))
}

/// The circular holonomy at any point of `R̄`, computed from the `C₀ ⊕ CAP` split of
/// the entries of `A`. `omega` must have value `rτ`.
pub fn holonomy_circular_rbar(point: &RBarPoint, curve: &CircularCurve, omega: &Frequency) -> Result<Su2> {
    let entries = circular_entry_decomposition(curve.tau, curve.r, omega)?;
    let a = rbar_eval(point, &entries.a)?;
    let b = rbar_eval(point, &entries.b)?;
    Ok(curve.place(Su2::from_cayley_klein(a, b)?))
}

/// `a_n = sign(n)/r·√(n²π²/τ² − ¼)`
pub fn self_intersection_point(n: i64, tau: f64, r: f64) -> Result<f64> {
    check_circle_params(tau, r)?;
    if n == 0 {
        return Err(Error::Domain("self-intersection index must be nonzero".into()));
    }
    let nf = n as f64;
    Ok(nf.signum() / r * (nf * nf * PI * PI / (tau * tau) - 0.25).sqrt())
}

/// `‖h(c, l, ρ(σ)v) − σ h(c, l, v) σ⁻¹‖_F`
pub fn invariance_check(c: f64, l: f64, v: &AlgebraVector, sigma: &Su2) -> Result<f64> {
    let rv = rotate(&covering(sigma), v);
    let lhs = holonomy_linear(c, l, &rv)?;
    let rhs = holonomy_linear(c, l, v)?.conjugate_by(sigma);
    Ok(lhs.matrix().frobenius_distance(&rhs.matrix()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    /// Uniform grid on `[−c_max, c_max]` for the coset and commutator checks.
    pub c_max: f64,
    pub points: usize,
    /// Bands `A_n` with `|n| ≤ bands` are sampled for injectivity.
    pub bands: usize,
    pub band_samples: usize,
    pub alternation_max_n: usize,
    pub merge_max_n: usize,
    pub merge_samples: usize,
    pub footnote_max_n: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            c_max: 20.0,
            points: 4001,
            bands: 10,
            band_samples: 200,
            alternation_max_n: 20,
            merge_max_n: 200,
            merge_samples: 129,
            footnote_max_n: 50,
        }
    }
}

impl GridSpec {
    fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::DegenerateGrid(what.into()));
        if !(self.c_max > 0.0 && self.c_max.is_finite()) {
            return bad("c_max must be positive and finite");
        }
        if self.points < 3 {
            return bad("need at least 3 grid points");
        }
        if self.band_samples < 8 || self.merge_samples < 3 {
            return bad("band_samples ≥ 8 and merge_samples ≥ 3 required");
        }
        if self.alternation_max_n == 0 || self.merge_max_n == 0 || self.footnote_max_n == 0 {
            return bad("index ranges must be nonempty");
        }
        Ok(())
    }

    fn grid(&self) -> impl Iterator<Item = f64> + '_ {
        let step = 2.0 * self.c_max / (self.points - 1) as f64;
        (0..self.points).map(move |i| -self.c_max + i as f64 * step)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommutatorWitness {
    pub status: Status,
    pub c1: f64,
    pub c2: f64,
    pub commutator_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CosetIntersection {
    pub status: Status,
    pub grid_points: usize,
    pub grid_members: usize,
    pub exact_points_checked: usize,
    pub exact_points_members: usize,
    /// Largest distance from a member to the nearer of `±d`.
    pub max_member_distance_to_pm_d: f64,
    pub origin_is_member: bool,
    pub origin_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Alternation {
    pub status: Status,
    pub max_n: usize,
    pub max_error: f64,
    pub worst_n: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Injectivity {
    pub status: Status,
    pub bands: usize,
    pub samples_per_band: usize,
    /// Smallest ratio of a non-adjacent sample distance to the local step.
    pub min_separation_ratio: f64,
    pub violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Merging {
    pub status: Status,
    pub epsilon: f64,
    pub n_epsilon: Option<usize>,
    pub max_n_checked: usize,
    /// `sup_{B_n} dist ≤ τ/(4π|n|)`, so every `|n| ≥ analytic_n` is within ε.
    pub analytic_n: usize,
    pub distance_at_max_n: f64,
    /// Distance from the last band to the undisplaced circle `T_{e₂}`.
    pub distance_to_undisplaced_circle: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FootnoteSpacing {
    pub status: Status,
    pub epsilon: f64,
    pub n0: Option<usize>,
    pub max_n: usize,
    /// `Δ_n − 2π` at `n = 1` and `n = max_n`; positive throughout.
    pub deviation_first: f64,
    pub deviation_last: f64,
    pub all_deviations_positive: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeparationEvidence {
    pub a0_min_on_log_grid: f64,
    pub grid_points: usize,
    pub b_dot_zero: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CircleLemmaReport {
    pub status: Status,
    pub tau: f64,
    pub r: f64,
    pub d: Su2,
    pub commutator: CommutatorWitness,
    pub coset_intersection: CosetIntersection,
    pub alternation: Alternation,
    pub injectivity: Injectivity,
    pub merging: Merging,
    pub footnote: FootnoteSpacing,
    pub separation: SeparationEvidence,
    pub measure_zero_note: &'static str,
}

const COSET_TOL: f64 = 1e-10;

fn commutator_check(curve: &CircularCurve, grid: &GridSpec) -> CommutatorWitness {
    let cs: Vec<f64> = grid.grid().step_by((grid.points / 64).max(1)).collect();
    let mut best = (0.0, 0.0, 0.0);
    for (i, &c1) in cs.iter().enumerate() {
        let h1 = holonomy_circular(c1, curve);
        for &c2 in &cs[i + 1..] {
            let h2 = holonomy_circular(c2, curve);
            let norm = (h1 * h2).distance(&(h2 * h1));
            if norm > best.2 {
                best = (c1, c2, norm);
            }
        }
    }
    CommutatorWitness {
        status: Status::from_bool(best.2 > 1e-6),
        c1: best.0,
        c2: best.1,
        commutator_norm: best.2,
    }
}

fn coset_check(curve: &CircularCurve, grid: &GridSpec) -> Result<CosetIntersection> {
    let d = curve.d();
    let mut max_pm = 0.0f64;
    let mut consistent = true;
    let mut visit = |c: f64| -> bool {
        let h = holonomy_circular(c, curve);
        let member = curve.coset_distance(&h) <= COSET_TOL;
        if member {
            let b = beta(c, curve.r);
            let to_pm = h.distance(&d).min(h.distance(&d.neg()));
            max_pm = max_pm.max(to_pm);
            // Membership forces sin(βτ) = 0 up to the tolerance and hence ±d.
            consistent &=
                (b * curve.tau).sin().abs() <= 2.0 * b * COSET_TOL * (1.0 + 1e-6) && to_pm <= 1e-9 * (2.0 * b).max(1.0);
        }
        member
    };
    let grid_members = grid.grid().filter(|&c| visit(c)).count();
    let max_n = grid.alternation_max_n as i64;
    let mut exact_checked = 0;
    let mut exact_members = 0;
    for n in (-max_n..=max_n).filter(|&n| n != 0) {
        exact_checked += 1;
        if visit(self_intersection_point(n, curve.tau, curve.r)?) {
            exact_members += 1;
        }
    }
    let origin_distance = curve.coset_distance(&holonomy_circular(0.0, curve));
    let origin_is_member = origin_distance <= COSET_TOL;
    // At c = 0 the holonomy lies in the coset only when sin(τ/2) = 0, impossible for 0 < τ < 2π.
    let ok = consistent && exact_members == exact_checked && !origin_is_member;
    Ok(CosetIntersection {
        status: Status::from_bool(ok),
        grid_points: grid.points,
        grid_members,
        exact_points_checked: exact_checked,
        exact_points_members: exact_members,
        max_member_distance_to_pm_d: max_pm,
        origin_is_member,
        origin_distance,
    })
}

fn alternation_check(curve: &CircularCurve, max_n: usize) -> Result<Alternation> {
    let d = curve.d();
    let mut worst = (0.0, 0);
    for n in (-(max_n as i64)..=max_n as i64).filter(|&n| n != 0) {
        let h = holonomy_circular(self_intersection_point(n, curve.tau, curve.r)?, curve);
        let expected = if n % 2 == 0 { d } else { d.neg() };
        let err = h.distance(&expected);
        if err >= worst.0 {
            worst = (err, n);
        }
    }
    Ok(Alternation {
        status: Status::from_bool(worst.0 <= 1e-9),
        max_n,
        max_error: worst.0,
        worst_n: worst.1,
    })
}

/// The band `A_n` as an open interval.
fn band(n: i64, tau: f64, r: f64) -> Result<(f64, f64)> {
    let a = |k| self_intersection_point(k, tau, r);
    Ok(match n {
        0 => (a(-1)?, a(1)?),
        n if n > 0 => (a(n)?, a(n + 1)?),
        n => (a(n - 1)?, a(n)?),
    })
}

fn injectivity_check(curve: &CircularCurve, grid: &GridSpec) -> Result<Injectivity> {
    let m = grid.band_samples;
    let bands = grid.bands as i64;
    // Per sample: image and the local step to each neighbour inside its band.
    let mut samples: Vec<(i64, Su2, f64)> = Vec::with_capacity((2 * grid.bands + 1) * m);
    for n in -bands..=bands {
        let (lo, hi) = band(n, curve.tau, curve.r)?;
        let h = (hi - lo) / m as f64;
        let imgs: Vec<Su2> = (0..m)
            .map(|k| holonomy_circular(lo + (k as f64 + 0.5) * h, curve))
            .collect();
        let steps: Vec<f64> = imgs.windows(2).map(|w| w[0].distance(&w[1])).collect();
        for (k, img) in imgs.iter().enumerate() {
            let left = if k > 0 { steps[k - 1] } else { steps[0] };
            let right = if k + 1 < m { steps[k] } else { steps[m - 2] };
            samples.push((n, *img, left.min(right)));
        }
    }
    let mut min_ratio = f64::INFINITY;
    let mut violations = 0;
    for chunk in samples.chunks(m) {
        for i in 0..m {
            for j in (i + 2)..m {
                let (_, gi, si) = &chunk[i];
                let (_, gj, sj) = &chunk[j];
                let ratio = gi.distance(gj) / si.min(*sj);
                min_ratio = min_ratio.min(ratio);
                if ratio <= 0.5 {
                    violations += 1;
                }
            }
        }
    }
    Ok(Injectivity {
        status: Status::from_bool(violations == 0),
        bands: samples.len() / m,
        samples_per_band: m,
        min_separation_ratio: min_ratio,
        violations,
    })
}

/// `B_n = [a_{2n}, a_{2n+2}]` for `n ≥ 1`, `[a_{2n−2}, a_{2n}]` for `n ≤ −1`.
fn merge_band(n: i64, tau: f64, r: f64) -> Result<(f64, f64)> {
    let a = |k| self_intersection_point(k, tau, r);
    if n > 0 {
        Ok((a(2 * n)?, a(2 * n + 2)?))
    } else {
        Ok((a(2 * n - 2)?, a(2 * n)?))
    }
}

fn merging_check(curve: &CircularCurve, grid: &GridSpec, eps: f64) -> Result<Merging> {
    let m = grid.merge_samples;
    let mut sup = Vec::with_capacity(grid.merge_max_n);
    let mut last_undisplaced = 0.0f64;
    for n in 1..=grid.merge_max_n as i64 {
        let mut worst = 0.0f64;
        let mut undisplaced = f64::INFINITY;
        for signed in [n, -n] {
            let (lo, hi) = merge_band(signed, curve.tau, curve.r)?;
            for k in 0..m {
                let c = lo + (hi - lo) * k as f64 / (m - 1) as f64;
                let h = holonomy_circular(c, curve);
                worst = worst.max(curve.coset_distance(&h));
                undisplaced = undisplaced.min(circle_distance_e2(&h.conjugate_by(&curve.sigma.inverse())));
            }
        }
        sup.push(worst);
        last_undisplaced = undisplaced;
    }
    // Smallest n₀ such that every checked |n| ≥ n₀ stays within ε.
    let n_epsilon = (0..sup.len())
        .rev()
        .take_while(|&i| sup[i] <= eps)
        .last()
        .map(|i| i + 1);
    let analytic_n = (curve.tau / (4.0 * PI * eps)).ceil().max(1.0) as usize;
    let ok = n_epsilon.is_some() && analytic_n <= grid.merge_max_n.max(n_epsilon.unwrap_or(0));
    Ok(Merging {
        status: Status::from_bool(ok),
        epsilon: eps,
        n_epsilon,
        max_n_checked: grid.merge_max_n,
        analytic_n,
        distance_at_max_n: *sup.last().expect("merge_max_n ≥ 1"),
        distance_to_undisplaced_circle: last_undisplaced,
    })
}

/// `τ·r·a_{2n} − 4nπ·… `: returns `l·a_{2n} − 2nπ` without cancellation.
fn footnote_offset(n: usize, tau: f64) -> f64 {
    let two_n_pi = 2.0 * n as f64 * PI;
    let f = (two_n_pi * two_n_pi - tau * tau / 4.0).sqrt();
    -(tau * tau / 4.0) / (f + two_n_pi)
}

fn footnote_check(curve: &CircularCurve, max_n: usize, eps: f64) -> Result<FootnoteSpacing> {
    let l = curve.tau * curve.r;
    let mut devs = Vec::with_capacity(max_n);
    for n in 1..=max_n {
        let stable = footnote_offset(n + 1, curve.tau) - footnote_offset(n, curve.tau);
        let direct = l * self_intersection_point(2 * n as i64 + 2, curve.tau, curve.r)?
            - l * self_intersection_point(2 * n as i64, curve.tau, curve.r)?
            - 2.0 * PI;
        if (stable - direct).abs() > 1e-9 {
            return Err(Error::Domain(format!(
                "footnote spacing at n = {n}: stable {stable:e} vs direct {direct:e}"
            )));
        }
        devs.push(stable);
    }
    let inside = |d: f64| d.abs() < eps && d != 0.0;
    let n0 = (0..devs.len())
        .rev()
        .take_while(|&i| inside(devs[i]))
        .last()
        .map(|i| i + 1);
    Ok(FootnoteSpacing {
        status: Status::from_bool(n0.is_some()),
        epsilon: eps,
        n0,
        max_n,
        deviation_first: devs[0],
        deviation_last: *devs.last().expect("max_n ≥ 1"),
        all_deviations_positive: devs.iter().all(|&d| d > 0.0),
    })
}

fn separation_evidence(curve: &CircularCurve) -> SeparationEvidence {
    let count = 4001;
    let mut min = entry_a0(0.0, curve.tau, curve.r).norm();
    for i in 0..count {
        let mag = 10f64.powf(-6.0 + 12.0 * i as f64 / (count - 1) as f64);
        for c in [mag, -mag] {
            min = min.min(entry_a0(c, curve.tau, curve.r).norm());
        }
    }
    SeparationEvidence {
        a0_min_on_log_grid: min,
        grid_points: 2 * count + 1,
        b_dot_zero: 2.0 * curve.r * (curve.tau / 2.0).sin(),
    }
}

/// Numerical audit of the image of the circular holonomy on the reduced curve
/// `n = e₃`, `σ = 1`; other curves are conjugate to it.
pub fn circle_lemma_report(tau: f64, r: f64, grid: &GridSpec, eps: f64) -> Result<CircleLemmaReport> {
    check_circle_params(tau, r)?;
    grid.validate()?;
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Domain(format!("epsilon = {eps} must be positive")));
    }
    let curve = CircularCurve::reduced(tau, r)?;
    let commutator = commutator_check(&curve, grid);
    let coset_intersection = coset_check(&curve, grid)?;
    let alternation = alternation_check(&curve, grid.alternation_max_n)?;
    let injectivity = injectivity_check(&curve, grid)?;
    let merging = merging_check(&curve, grid, eps)?;
    let footnote = footnote_check(&curve, grid.footnote_max_n, eps)?;
    let separation = separation_evidence(&curve);
    let status = [
        commutator.status,
        coset_intersection.status,
        alternation.status,
        injectivity.status,
        merging.status,
        footnote.status,
    ]
    .into_iter()
    .fold(Status::from_bool(separation.a0_min_on_log_grid > 0.0), Status::and);
    Ok(CircleLemmaReport {
        status,
        tau,
        r,
        d: curve.d(),
        commutator,
        coset_intersection,
        alternation,
        injectivity,
        merging,
        footnote,
        separation,
        measure_zero_note:
            "structural: the image is a countable union of embedded curves plus one circle; not checked numerically",
    })
}
