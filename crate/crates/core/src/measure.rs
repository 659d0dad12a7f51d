//! The measures `μ_{ρ,t} = t·ρ(λ) ⊕ (1−t)·μ_Bohr` on `R̄` and integration against them.
//!
//! The ℝ-leg is always integrated on `(0, 1)` through the substitution `x = ρ(u)`.
//! Parts of an integrand carrying a `C₀` factor decay and go to adaptive
//! Gauss–Legendre directly. A bare character `e^{iωρ(u)}` does not decay, so it
//! oscillates infinitely often near the ends of `(0, 1)`. [`characteristic`]
//! handles it by cutting `(0, 1)` at the zeros of the phase and summing the two
//! tails of half-period pieces with Wynn's epsilon algorithm.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harmonic::{bohr_inner_product, bohr_integral, ApPolynomial, C0Function, QuantumFunction};
use crate::quadrature::{adaptive, wynn_epsilon, NeumaierSum, QuadResult, QuadratureConfig};
use crate::Status;

type Map = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Built-in parametrizations `ρ: (0,1) → ℝ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ParametrizationKind {
    /// `tan(π(u − ½))`
    TanMap,
    /// `tan(π(u^p − ½))`
    TanPower { p: f64 },
    /// `scale·tan(π(u − ½)) + shift`
    TanAffine { scale: f64, shift: f64 },
}

#[derive(Clone)]
pub struct Parametrization {
    label: String,
    forward: Map,
    inverse: Map,
    derivative: Option<Map>,
    increasing: bool,
}

impl fmt::Debug for Parametrization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Parametrization({})", self.label)
    }
}

const VALIDATION_POINTS: usize = 257;

fn tan_centered(u: f64) -> f64 {
    (PI * (u - 0.5)).tan()
}

fn atan_centered(x: f64) -> f64 {
    x.atan() / PI + 0.5
}

pub fn make_parametrization(kind: ParametrizationKind) -> Result<Parametrization> {
    match kind {
        ParametrizationKind::TanMap => Ok(Parametrization {
            label: "tan_map".into(),
            forward: Arc::new(tan_centered),
            inverse: Arc::new(atan_centered),
            derivative: Some(Arc::new(|u| {
                let c = (PI * (u - 0.5)).cos();
                PI / (c * c)
            })),
            increasing: true,
        }),
        ParametrizationKind::TanPower { p } => {
            if !(p > 0.0 && p.is_finite()) {
                return Err(Error::InvalidParametrization(format!(
                    "tan_power exponent {p} must be positive"
                )));
            }
            Parametrization::custom(
                format!("tan_power({p})"),
                move |u| tan_centered(u.powf(p)),
                move |x| atan_centered(x).powf(1.0 / p),
                Some(move |u: f64| {
                    let c = (PI * (u.powf(p) - 0.5)).cos();
                    PI * p * u.powf(p - 1.0) / (c * c)
                }),
            )
        }
        ParametrizationKind::TanAffine { scale, shift } => {
            if !(scale.is_finite() && scale != 0.0 && shift.is_finite()) {
                return Err(Error::InvalidParametrization(format!(
                    "tan_affine needs finite nonzero scale and finite shift, got {scale}, {shift}"
                )));
            }
            Parametrization::custom(
                format!("tan_affine({scale},{shift})"),
                move |u| scale * tan_centered(u) + shift,
                move |x| atan_centered((x - shift) / scale),
                Some(move |u: f64| {
                    let c = (PI * (u - 0.5)).cos();
                    scale * PI / (c * c)
                }),
            )
        }
    }
}

impl Parametrization {
    /// A user-supplied homeomorphism `(0,1) → ℝ`, checked for strict monotonicity
    /// and `ρ(ρ⁻¹(x)) = x` on a sample grid.
    pub fn custom<F, G, D>(label: impl Into<String>, forward: F, inverse: G, derivative: Option<D>) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        G: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let label = label.into();
        let samples: Vec<f64> = (0..VALIDATION_POINTS)
            .map(|i| forward((i as f64 + 0.5) / VALIDATION_POINTS as f64))
            .collect();
        if samples.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParametrization(format!(
                "{label}: non-finite value on (0,1)"
            )));
        }
        let increasing = samples[1] > samples[0];
        let monotone = samples
            .windows(2)
            .all(|w| if increasing { w[1] > w[0] } else { w[1] < w[0] });
        if !monotone {
            return Err(Error::InvalidParametrization(format!("{label}: not strictly monotone")));
        }
        for &x in &samples {
            let back = forward(inverse(x));
            let round_trips = (back - x).abs() <= 1e-10 * x.abs().max(1.0);
            if !round_trips {
                return Err(Error::InvalidParametrization(format!("{label}: ρ(ρ⁻¹({x})) = {back}")));
            }
        }
        Ok(Self {
            label,
            forward: Arc::new(forward),
            inverse: Arc::new(inverse),
            derivative: derivative.map(|d| Arc::new(d) as Map),
            increasing,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn rho(&self, u: f64) -> f64 {
        (self.forward)(u)
    }

    pub fn rho_inv(&self, x: f64) -> f64 {
        (self.inverse)(x)
    }

    pub fn derivative(&self, u: f64) -> Option<f64> {
        self.derivative.as_ref().map(|d| d(u))
    }

    pub fn is_increasing(&self) -> bool {
        self.increasing
    }

    /// The induced embedding `f = +1 ∘ h ∘ ρ⁻¹` into the shifted unit circle,
    /// `h(u) = e^{2πi(u − ½)}`.
    pub fn circle_image(&self, x: f64) -> Complex64 {
        let u = self.rho_inv(x);
        Complex64::new(1.0, 0.0) + Complex64::from_polar(1.0, 2.0 * PI * (u - 0.5))
    }

    /// The map `u ↦ ρ₁(ρ₂⁻¹(ρ₂(u)))` along which a function transported from
    /// `ρ₁(λ)` is evaluated under `ρ₂(λ)`. No simplification of `ρ₂⁻¹∘ρ₂` is assumed.
    pub fn transported(source: &Self, target: &Self) -> Self {
        let (s, t) = (source.clone(), target.clone());
        let (s2, t2) = (source.clone(), target.clone());
        Self {
            label: format!("{}∘{}⁻¹∘{}", s.label, t.label, t.label),
            forward: Arc::new(move |u| s.rho(t.rho_inv(t.rho(u)))),
            inverse: Arc::new(move |x| t2.rho_inv(t2.rho(s2.rho_inv(x)))),
            derivative: None,
            increasing: source.increasing,
        }
    }

    /// Monotone increasing view `(Φ, Φ⁻¹)` with `∫₀¹ g(Φ) = ∫₀¹ g(ρ)`.
    fn increasing_view(&self) -> (impl Fn(f64) -> f64 + '_, impl Fn(f64) -> f64 + '_) {
        let inc = self.increasing;
        (
            move |u: f64| if inc { self.rho(u) } else { self.rho(1.0 - u) },
            move |x: f64| if inc { self.rho_inv(x) } else { 1.0 - self.rho_inv(x) },
        )
    }
}

#[derive(Debug, Clone)]
pub struct MeasureDescriptor {
    pub rho: Parametrization,
    pub t: f64,
}

impl MeasureDescriptor {
    pub fn new(rho: Parametrization, t: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::Domain(format!("t = {t} must lie in [0, 1]")));
        }
        Ok(Self { rho, t })
    }
}

fn zero_result() -> QuadResult {
    QuadResult {
        value: Complex64::zero(),
        est_error: 0.0,
        subdivisions: 0,
    }
}

fn accumulate(acc: &mut QuadResult, part: QuadResult, weight: Complex64) {
    acc.value += part.value * weight;
    acc.est_error += part.est_error * weight.norm();
    acc.subdivisions += part.subdivisions;
}

const TAIL_TERMS: [usize; 3] = [40, 80, 160];

/// `∫₀¹ e^{iωρ(u)} du`, the characteristic function of `ρ(λ)` at `ω`.
pub fn characteristic(rho: &Parametrization, omega: f64, cfg: &QuadratureConfig) -> Result<QuadResult> {
    cfg.validate()?;
    if !omega.is_finite() {
        return Err(Error::InvalidInput("frequency value must be finite".into()));
    }
    if omega == 0.0 {
        return Ok(QuadResult {
            value: Complex64::new(1.0, 0.0),
            est_error: 0.0,
            subdivisions: 0,
        });
    }
    let (phi, phi_inv) = rho.increasing_view();
    let integrand = |u: f64| Complex64::from_polar(1.0, omega * phi(u));
    let half_period = PI / omega.abs();
    let m = ((20.0 / half_period).ceil() as i64).max(4);
    let knot = |k: i64| phi_inv(k as f64 * half_period);
    let tol = cfg.abs_tol / 4.0;
    let piece_cfg = QuadratureConfig {
        abs_tol: tol / TAIL_TERMS[TAIL_TERMS.len() - 1] as f64,
        ..*cfg
    };

    let mut total = adaptive(integrand, knot(-m), knot(m), &QuadratureConfig { abs_tol: tol, ..*cfg })?;

    for direction in [1i64, -1] {
        let mut pieces: Vec<QuadResult> = Vec::new();
        let mut done = None;
        for &terms in &TAIL_TERMS {
            while pieces.len() < terms {
                let j = pieces.len() as i64;
                let (a, b) = if direction > 0 {
                    (knot(m + j), knot(m + j + 1))
                } else {
                    (knot(-m - j - 1), knot(-m - j))
                };
                pieces.push(adaptive(integrand, a, b, &piece_cfg)?);
            }
            let mut running = NeumaierSum::default();
            let sums: Vec<Complex64> = pieces
                .iter()
                .map(|p| {
                    running.add(p.value);
                    running.total()
                })
                .collect();
            let (limit, err) = wynn_epsilon(&sums).expect("at least three tail terms");
            if err <= tol {
                done = Some((limit, err));
                break;
            }
            done = (terms == TAIL_TERMS[TAIL_TERMS.len() - 1]).then_some((limit, err));
            if let Some((limit, err)) = done {
                return Err(Error::NonConvergence {
                    estimate: total.value + limit,
                    error: total.est_error + err,
                });
            }
        }
        let (limit, err) = done.expect("loop either converges or returns");
        total.value += limit;
        total.est_error += err + pieces.iter().map(|p| p.est_error).sum::<f64>();
        total.subdivisions += pieces.iter().map(|p| p.subdivisions).sum::<usize>();
    }
    Ok(total)
}

/// `∫₀¹ g(ρ(u)) du` for a decaying `g`.
pub fn integrate_decaying<F>(g: F, rho: &Parametrization, cfg: &QuadratureConfig) -> Result<QuadResult>
where
    F: Fn(f64) -> Complex64,
{
    let (phi, _) = rho.increasing_view();
    adaptive(|u| g(phi(u)), 0.0, 1.0, cfg)
}

/// `∫₀¹ p(ρ(u)) du` for a trigonometric polynomial, term by term.
pub fn integrate_ap_real(p: &ApPolynomial, rho: &Parametrization, cfg: &QuadratureConfig) -> Result<QuadResult> {
    let weight: f64 = p.terms().map(|(_, c)| c.norm()).sum::<f64>().max(1.0);
    let term_cfg = QuadratureConfig {
        abs_tol: cfg.abs_tol / weight,
        ..*cfg
    };
    let mut acc = zero_result();
    for (l, c) in p.terms() {
        accumulate(&mut acc, characteristic(rho, l.value(), &term_cfg)?, c);
    }
    Ok(acc)
}

fn half(cfg: &QuadratureConfig) -> QuadratureConfig {
    QuadratureConfig {
        abs_tol: cfg.abs_tol / 2.0,
        ..*cfg
    }
}

/// `∫ qf dρ(λ)`.
pub fn real_leg_integral(qf: &QuantumFunction, rho: &Parametrization, cfg: &QuadratureConfig) -> Result<QuadResult> {
    let mut acc = zero_result();
    if !qf.c0.is_zero() {
        accumulate(
            &mut acc,
            integrate_decaying(|x| qf.c0.eval(x), rho, &half(cfg))?,
            Complex64::new(1.0, 0.0),
        );
    }
    accumulate(
        &mut acc,
        integrate_ap_real(&qf.ap, rho, &half(cfg))?,
        Complex64::new(1.0, 0.0),
    );
    Ok(acc)
}

/// `∫ qf₁·conj(qf₂) dρ(λ)`. The product of the AP parts is again a trigonometric
/// polynomial; everything else carries a `C₀` factor.
pub fn real_leg_inner_product(
    f: &QuantumFunction,
    g: &QuantumFunction,
    rho: &Parametrization,
    cfg: &QuadratureConfig,
) -> Result<QuadResult> {
    let mut acc = zero_result();
    if !(f.c0.is_zero() && g.c0.is_zero()) {
        let decaying = |x: f64| {
            let (f0, g0) = (f.c0.eval(x), g.c0.eval(x));
            let (fa, ga) = (f.ap.eval(x), g.ap.eval(x));
            f0 * g0.conj() + f0 * ga.conj() + fa * g0.conj()
        };
        accumulate(
            &mut acc,
            integrate_decaying(decaying, rho, &half(cfg))?,
            Complex64::new(1.0, 0.0),
        );
    }
    let product = f.ap.mul(&g.ap.conj())?;
    accumulate(
        &mut acc,
        integrate_ap_real(&product, rho, &half(cfg))?,
        Complex64::new(1.0, 0.0),
    );
    Ok(acc)
}

/// `∫_{R̄} qf dμ_{ρ,t} = t·∫ qf dρ(λ) + (1−t)·∫ qf_AP dμ_Bohr`.
pub fn integrate(qf: &QuantumFunction, mu: &MeasureDescriptor, cfg: &QuadratureConfig) -> Result<QuadResult> {
    let mut acc = zero_result();
    if mu.t > 0.0 {
        accumulate(
            &mut acc,
            real_leg_integral(qf, &mu.rho, cfg)?,
            Complex64::new(mu.t, 0.0),
        );
    }
    acc.value += (1.0 - mu.t) * bohr_integral(&qf.ap);
    Ok(acc)
}

/// `⟨qf₁, qf₂⟩` in `L²(R̄, μ_{ρ,t})`; on `ℝ_Bohr` only the AP parts survive.
pub fn inner_product(
    f: &QuantumFunction,
    g: &QuantumFunction,
    mu: &MeasureDescriptor,
    cfg: &QuadratureConfig,
) -> Result<QuadResult> {
    let mut acc = zero_result();
    if mu.t > 0.0 {
        accumulate(
            &mut acc,
            real_leg_inner_product(f, g, &mu.rho, cfg)?,
            Complex64::new(mu.t, 0.0),
        );
    }
    acc.value += (1.0 - mu.t) * bohr_inner_product(&f.ap, &g.ap)?;
    Ok(acc)
}

pub fn norm_sq(f: &QuantumFunction, mu: &MeasureDescriptor, cfg: &QuadratureConfig) -> Result<QuadResult> {
    let mut r = inner_product(f, f, mu, cfg)?;
    r.value = Complex64::new(r.value.re, 0.0);
    Ok(r)
}

/// `φ(ψ)` for the isometry `L²(R̄, μ_{ρ₁,t₁}) → L²(R̄, μ_{ρ₂,t₂})`:
/// `√(t₁/t₂)·ψ∘ρ₁∘ρ₂⁻¹` on ℝ and `√((1−t₁)/(1−t₂))·ψ` on `ℝ_Bohr`.
#[derive(Debug, Clone)]
pub struct TransportedFunction {
    pub source: QuantumFunction,
    pub from: MeasureDescriptor,
    pub to: MeasureDescriptor,
    pub real_scale: f64,
    pub bohr_scale: f64,
}

fn is_endpoint(t: f64) -> bool {
    t == 0.0 || t == 1.0
}

pub fn isometry_transport(
    psi: &QuantumFunction,
    from: &MeasureDescriptor,
    to: &MeasureDescriptor,
) -> Result<TransportedFunction> {
    let (t1, t2) = (from.t, to.t);
    if (is_endpoint(t1) || is_endpoint(t2)) && t1 != t2 {
        return Err(Error::Domain(format!(
            "no isometry between t = {t1} and t = {t2}: endpoint values must match"
        )));
    }
    let real_scale = if t2 == 0.0 { 0.0 } else { (t1 / t2).sqrt() };
    let bohr_scale = if t2 == 1.0 {
        0.0
    } else {
        ((1.0 - t1) / (1.0 - t2)).sqrt()
    };
    Ok(TransportedFunction {
        source: psi.clone(),
        from: from.clone(),
        to: to.clone(),
        real_scale,
        bohr_scale,
    })
}

impl TransportedFunction {
    /// Value on the ℝ-leg at `x`.
    pub fn eval_real(&self, x: f64) -> Complex64 {
        let y = self.from.rho.rho(self.to.rho.rho_inv(x));
        self.source.eval_real(y) * self.real_scale
    }

    pub fn bohr_part(&self) -> ApPolynomial {
        self.source.ap.scale(Complex64::new(self.bohr_scale, 0.0))
    }

    /// `‖φ(ψ)‖²` under the target measure.
    pub fn norm_sq(&self, cfg: &QuadratureConfig) -> Result<QuadResult> {
        let mut acc = zero_result();
        if self.to.t > 0.0 && self.real_scale > 0.0 {
            let path = Parametrization::transported(&self.from.rho, &self.to.rho);
            let leg = real_leg_inner_product(&self.source, &self.source, &path, cfg)?;
            let w = self.to.t * self.real_scale * self.real_scale;
            accumulate(&mut acc, leg, Complex64::new(w, 0.0));
        }
        if self.to.t < 1.0 {
            let b = self.bohr_part();
            acc.value += (1.0 - self.to.t) * bohr_inner_product(&b, &b)?;
        }
        acc.value = Complex64::new(acc.value.re, 0.0);
        Ok(acc)
    }
}

/// The ℝ-leg of a candidate Radon measure on `R̄`.
#[derive(Debug, Clone)]
pub enum RealLeg {
    Zero,
    Pushforward { rho: Parametrization, weight: f64 },
}

/// `real ⊕ bohr_weight·μ_Bohr`.
#[derive(Debug, Clone)]
pub struct CandidateMeasure {
    pub real: RealLeg,
    pub bohr_weight: f64,
}

impl CandidateMeasure {
    /// `0_ℝ ⊕ μ_Bohr`.
    pub fn bohr_only() -> Self {
        Self {
            real: RealLeg::Zero,
            bohr_weight: 1.0,
        }
    }

    pub fn from_descriptor(mu: &MeasureDescriptor) -> Self {
        Self {
            real: if mu.t > 0.0 {
                RealLeg::Pushforward {
                    rho: mu.rho.clone(),
                    weight: mu.t,
                }
            } else {
                RealLeg::Zero
            },
            bohr_weight: 1.0 - mu.t,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionResult {
    pub status: Status,
    pub max_deviation: f64,
    /// Indices into the test family of the worst pair.
    pub worst_pair: Option<[usize; 2]>,
    pub pairs_checked: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JonsReport {
    /// `⟨f̂₀, ĝ_AP⟩ = 0`
    pub condition_i: ConditionResult,
    /// `⟨f̂_AP, ĝ_AP⟩ = ⟨f_AP, g_AP⟩_{μ_Bohr}`
    pub condition_ii: ConditionResult,
    /// `⟨f̂₀, 1⟩` for the first strictly positive `C₀` member of the family.
    pub probe_value: f64,
    pub probe_index: usize,
}

fn is_constant_one(p: &ApPolynomial) -> bool {
    p.len() == 1 && p.terms().all(|(l, c)| l.is_zero() && c == Complex64::new(1.0, 0.0))
}

fn looks_positive(f: &C0Function) -> bool {
    [-10.0, -1.0, 0.0, 0.5, 1.0, 10.0].iter().all(|&x| {
        let v = f.eval(x);
        v.re > 0.0 && v.im == 0.0
    })
}

fn fold_condition(values: impl IntoIterator<Item = ([usize; 2], f64)>, tol: f64) -> ConditionResult {
    let mut worst: Option<([usize; 2], f64)> = None;
    let mut count = 0;
    for (pair, dev) in values {
        count += 1;
        if worst.is_none_or(|(_, w)| dev > w || dev.is_nan()) {
            worst = Some((pair, dev));
        }
    }
    let max_deviation = worst.map_or(0.0, |(_, d)| d);
    ConditionResult {
        status: Status::from_bool(max_deviation <= tol),
        max_deviation,
        worst_pair: worst.map(|(p, _)| p),
        pairs_checked: count,
    }
}

/// Evaluates the two conditions that single out `0_ℝ ⊕ μ_Bohr` on the hats
/// `f̂₀ = f₀ ⊕ 0` and `f̂_AP = 0 ⊕ f_AP` of a test family.
pub fn jons_conditions_check(
    candidate: &CandidateMeasure,
    family: &[QuantumFunction],
    tol: f64,
    cfg: &QuadratureConfig,
) -> Result<JonsReport> {
    if !family.iter().any(|f| is_constant_one(&f.ap)) {
        return Err(Error::InvalidInput(
            "test family must contain a member with AP part 1".into(),
        ));
    }
    let probe_index = family
        .iter()
        .position(|f| !f.c0.is_zero() && looks_positive(&f.c0))
        .ok_or_else(|| Error::InvalidInput("test family must contain a strictly positive C0 part".into()))?;
    let ctx = family[0].context();
    let hat_c0 = |f: &QuantumFunction| QuantumFunction::from_c0(ctx, f.c0.clone());
    let hat_ap = |f: &QuantumFunction| QuantumFunction::from_ap(f.ap.clone());

    // The C₀ parts die on ℝ_Bohr, so only the ℝ-leg contributes.
    let real_ip = |f: &QuantumFunction, g: &QuantumFunction| -> Result<Complex64> {
        match &candidate.real {
            RealLeg::Zero => Ok(Complex64::zero()),
            RealLeg::Pushforward { rho, weight } => Ok(real_leg_inner_product(f, g, rho, cfg)?.value * *weight),
        }
    };

    let mut cond_i = Vec::new();
    let mut probe_value = 0.0;
    for (i, f) in family.iter().enumerate() {
        if f.c0.is_zero() {
            continue;
        }
        for (j, g) in family.iter().enumerate() {
            if g.ap.is_empty() {
                continue;
            }
            let v = real_ip(&hat_c0(f), &hat_ap(g))?;
            if i == probe_index && is_constant_one(&g.ap) {
                probe_value = v.re;
            }
            cond_i.push(([i, j], v.norm()));
        }
    }

    let mut cond_ii = Vec::new();
    for (i, f) in family.iter().enumerate() {
        for (j, g) in family.iter().enumerate().skip(i) {
            if f.ap.is_empty() || g.ap.is_empty() {
                continue;
            }
            let bohr = bohr_inner_product(&f.ap, &g.ap)?;
            let value = real_ip(&hat_ap(f), &hat_ap(g))? + bohr * candidate.bohr_weight;
            cond_ii.push(([i, j], (value - bohr).norm()));
        }
    }

    Ok(JonsReport {
        condition_i: fold_condition(cond_i, tol),
        condition_ii: fold_condition(cond_ii, tol),
        probe_value,
        probe_index,
    })
}

/// The positive probe of the uniqueness argument: 1 on `[−n, n]`, Gaussian shoulders outside.
pub fn positive_bump_probe(ctx: &Arc<crate::frequency::FrequencyContext>, n: f64) -> QuantumFunction {
    QuantumFunction::from_c0(ctx, C0Function::plateau(n))
}

/// `ρ(λ)([−n, n])`, a lower bound for `∫ f₀ dρ(λ)` whenever `f₀ ≥ 1` on `[−n, n]`.
pub fn probe_mass_floor(rho: &Parametrization, n: f64) -> f64 {
    (rho.rho_inv(n) - rho.rho_inv(-n)).abs()
}
