//! Almost periodic polynomials, `C₀(ℝ) ⊕ CAP` functions, and points of
//! `R̄ = ℝ ⊔ ℝ_Bohr`.
//!
//! Bohr points are stored cylindrically: a level `L` together with the angles
//! `θ ∈ 𝕋^|L|` that the point assigns to `χ_{l₁}, …, χ_{l_k}`. A character whose
//! frequency lies in `span_ℤ(L)` is then evaluated exactly through its integer
//! coordinates. The `C₀` part of a function vanishes on every Bohr point.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frequency::{char_eval, Frequency, FrequencyContext, FrequencyTuple};

/// A finite trigonometric polynomial `Σ c_l χ_l`.
#[derive(Debug, Clone, PartialEq)]
pub struct ApPolynomial {
    ctx: Arc<FrequencyContext>,
    terms: BTreeMap<Vec<BigRational>, Complex64>,
}

impl ApPolynomial {
    pub fn new(ctx: &Arc<FrequencyContext>) -> Self {
        Self {
            ctx: Arc::clone(ctx),
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(ctx: &Arc<FrequencyContext>, c: Complex64) -> Self {
        let mut p = Self::new(ctx);
        p.add_term(&Frequency::zero(ctx), c).expect("same context");
        p
    }

    pub fn character(l: &Frequency) -> Self {
        let mut p = Self::new(l.context());
        p.add_term(l, Complex64::new(1.0, 0.0)).expect("same context");
        p
    }

    pub fn from_terms<I>(ctx: &Arc<FrequencyContext>, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Frequency, Complex64)>,
    {
        let mut p = Self::new(ctx);
        for (l, c) in terms {
            p.add_term(&l, c)?;
        }
        Ok(p)
    }

    /// Adds `c·χ_l`, merging with an existing term and dropping exact zeros.
    pub fn add_term(&mut self, l: &Frequency, c: Complex64) -> Result<()> {
        if !l.shares_context(&self.ctx) {
            return Err(Error::ContextMismatch);
        }
        let key = l.coords().to_vec();
        let merged = self.terms.get(&key).copied().unwrap_or_default() + c;
        if merged.is_zero() {
            self.terms.remove(&key);
        } else {
            self.terms.insert(key, merged);
        }
        Ok(())
    }

    pub fn context(&self) -> &Arc<FrequencyContext> {
        &self.ctx
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (Frequency, Complex64)> + '_ {
        self.terms.iter().map(|(coords, &c)| {
            (
                Frequency::new(&self.ctx, coords.clone()).expect("stored coordinates fit"),
                c,
            )
        })
    }

    pub fn coefficient(&self, l: &Frequency) -> Complex64 {
        self.terms.get(l.coords()).copied().unwrap_or_default()
    }

    /// Pointwise complex conjugate: `conj(c χ_l) = c̄ χ_{−l}`.
    pub fn conj(&self) -> Self {
        Self {
            ctx: Arc::clone(&self.ctx),
            terms: self
                .terms
                .iter()
                .map(|(coords, c)| (coords.iter().map(|q| -q).collect(), c.conj()))
                .collect(),
        }
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        let mut out = Self::new(&self.ctx);
        for (coords, c) in &self.terms {
            let v = c * factor;
            if !v.is_zero() {
                out.terms.insert(coords.clone(), v);
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let mut out = self.clone();
        for (l, c) in other.terms() {
            out.add_term(&l, c)?;
        }
        Ok(out)
    }

    /// Pointwise product; frequencies add exactly.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        if !other.ctx.as_ref().eq(self.ctx.as_ref()) {
            return Err(Error::ContextMismatch);
        }
        let mut out = Self::new(&self.ctx);
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                let key: Vec<BigRational> = a.iter().zip(b.iter()).map(|(x, y)| x + y).collect();
                let merged = out.terms.get(&key).copied().unwrap_or_default() + ca * cb;
                if merged.is_zero() {
                    out.terms.remove(&key);
                } else {
                    out.terms.insert(key, merged);
                }
            }
        }
        Ok(out)
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        ap_eval(self, x)
    }

    pub fn to_records(&self) -> Vec<ApTermRecord> {
        self.terms()
            .map(|(l, c)| ApTermRecord {
                freq: l.coord_strings(),
                re: c.re,
                im: c.im,
            })
            .collect()
    }

    pub fn from_records(ctx: &Arc<FrequencyContext>, records: &[ApTermRecord]) -> Result<Self> {
        let mut p = Self::new(ctx);
        for rec in records {
            if !rec.re.is_finite() || !rec.im.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "coefficient of frequency {:?} is not finite",
                    rec.freq
                )));
            }
            p.add_term(&Frequency::parse(ctx, &rec.freq)?, Complex64::new(rec.re, rec.im))?;
        }
        Ok(p)
    }
}

/// One term of the JSON form `[{freq: ["p/q", …], re, im}]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApTermRecord {
    pub freq: Vec<String>,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

/// Evaluation at a real point, `Σ c_l e^{ilx}`.
pub fn ap_eval(p: &ApPolynomial, x: f64) -> Complex64 {
    p.terms().map(|(l, c)| c * char_eval(&l, x)).sum()
}

/// `∫ p dμ_Bohr`: every nontrivial character integrates to zero, so this is the
/// coefficient of the trivial character.
pub fn bohr_integral(p: &ApPolynomial) -> Complex64 {
    p.coefficient(&Frequency::zero(&p.ctx))
}

/// `⟨p, q⟩` in `L²(ℝ_Bohr, μ_Bohr)`; characters are orthonormal there.
pub fn bohr_inner_product(p: &ApPolynomial, q: &ApPolynomial) -> Result<Complex64> {
    if !p.ctx.as_ref().eq(q.ctx.as_ref()) {
        return Err(Error::ContextMismatch);
    }
    Ok(p.terms
        .iter()
        .filter_map(|(l, c)| q.terms.get(l).map(|d| c * d.conj()))
        .sum())
}

type RealFn = dyn Fn(f64) -> Complex64 + Send + Sync;
type BoundFn = dyn Fn(f64) -> f64 + Send + Sync;

/// A continuous function vanishing at infinity, given by evaluation only. The
/// decay is the caller's contract; `decay_hint` optionally bounds `|f(x)|`.
#[derive(Clone)]
pub struct C0Function {
    label: String,
    eval: Option<Arc<RealFn>>,
    decay_hint: Option<Arc<BoundFn>>,
}

impl fmt::Debug for C0Function {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("C0Function")
            .field("label", &self.label)
            .field("zero", &self.eval.is_none())
            .finish()
    }
}

impl C0Function {
    pub fn zero() -> Self {
        Self {
            label: "zero".into(),
            eval: None,
            decay_hint: None,
        }
    }

    pub fn new(label: impl Into<String>, f: impl Fn(f64) -> Complex64 + Send + Sync + 'static) -> Self {
        Self {
            label: label.into(),
            eval: Some(Arc::new(f)),
            decay_hint: None,
        }
    }

    pub fn real(label: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::new(label, move |x| Complex64::new(f(x), 0.0))
    }

    pub fn with_decay_hint(mut self, bound: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.decay_hint = Some(Arc::new(bound));
        self
    }

    /// `amplitude · exp(−((x − center)/width)²)`
    pub fn gaussian(amplitude: f64, center: f64, width: f64) -> Self {
        let a = amplitude.abs();
        Self::real(format!("gaussian({amplitude},{center},{width})"), move |x| {
            let s = (x - center) / width;
            amplitude * (-s * s).exp()
        })
        .with_decay_hint(move |x| {
            let s = (x - center) / width;
            a * (-s * s).exp()
        })
    }

    /// `amplitude / (1 + ((x − center)/width)²)`
    pub fn lorentzian(amplitude: f64, center: f64, width: f64) -> Self {
        let a = amplitude.abs();
        Self::real(format!("lorentzian({amplitude},{center},{width})"), move |x| {
            let s = (x - center) / width;
            amplitude / (1.0 + s * s)
        })
        .with_decay_hint(move |x| {
            let s = (x - center) / width;
            a / (1.0 + s * s)
        })
    }

    /// Identically 1 on `[−half_width, half_width]`, Gaussian shoulders outside.
    /// Strictly positive everywhere.
    pub fn plateau(half_width: f64) -> Self {
        let shoulder = move |x: f64| {
            let over = (x.abs() - half_width).max(0.0);
            (-over * over).exp()
        };
        Self::real(format!("plateau({half_width})"), shoulder).with_decay_hint(shoulder)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn is_zero(&self) -> bool {
        self.eval.is_none()
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        self.eval.as_ref().map_or(Complex64::zero(), |f| f(x))
    }

    pub fn decay_bound(&self, x: f64) -> Option<f64> {
        match (&self.eval, &self.decay_hint) {
            (None, _) => Some(0.0),
            (Some(_), Some(h)) => Some(h(x)),
            (Some(_), None) => None,
        }
    }
}

/// `f₀ ⊕ f_AP ∈ C₀(ℝ) ⊕ CAP`.
#[derive(Debug, Clone)]
pub struct QuantumFunction {
    pub c0: C0Function,
    pub ap: ApPolynomial,
}

impl QuantumFunction {
    pub fn new(c0: C0Function, ap: ApPolynomial) -> Self {
        Self { c0, ap }
    }

    pub fn from_ap(ap: ApPolynomial) -> Self {
        Self {
            c0: C0Function::zero(),
            ap,
        }
    }

    pub fn from_c0(ctx: &Arc<FrequencyContext>, c0: C0Function) -> Self {
        Self {
            c0,
            ap: ApPolynomial::new(ctx),
        }
    }

    pub fn context(&self) -> &Arc<FrequencyContext> {
        self.ap.context()
    }

    pub fn eval_real(&self, x: f64) -> Complex64 {
        self.c0.eval(x) + self.ap.eval(x)
    }
}

pub fn normalize_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    if TAU - t <= 1e-15 {
        0.0
    } else {
        t
    }
}

/// Distance on the circle between two angles.
pub fn angle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// A Bohr point known through its values on the characters of one level.
#[derive(Debug, Clone, PartialEq)]
pub struct BohrPoint {
    level: FrequencyTuple,
    angles: Vec<f64>,
}

impl BohrPoint {
    pub fn new(level: FrequencyTuple, angles: Vec<f64>) -> Result<Self> {
        if angles.len() != level.len() {
            return Err(Error::PointShape(format!(
                "{} angles for a level of length {}",
                angles.len(),
                level.len()
            )));
        }
        if angles.iter().any(|a| !a.is_finite()) {
            return Err(Error::PointShape("angles must be finite".into()));
        }
        Ok(Self {
            level,
            angles: angles.into_iter().map(normalize_angle).collect(),
        })
    }

    pub fn level(&self) -> &FrequencyTuple {
        &self.level
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    /// Angle `⟨n, θ⟩ mod 2π` assigned to `χ_l`, with `n` the integer coordinates of `l`.
    pub fn angle_of(&self, l: &Frequency) -> Result<f64> {
        let coords = self
            .level
            .integer_coordinates(l)?
            .ok_or_else(|| Error::FrequencyNotInLevel(l.to_string()))?;
        Ok(integer_phase(&coords, &self.angles))
    }

    pub fn character_value(&self, l: &Frequency) -> Result<Complex64> {
        let phase = self.angle_of(l)?;
        Ok(Complex64::new(phase.cos(), phase.sin()))
    }
}

/// `Σ nᵢ θᵢ mod 2π`, reducing each product before summing.
pub(crate) fn integer_phase(coeffs: &[num_bigint::BigInt], angles: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (n, theta) in coeffs.iter().zip(angles) {
        if n.is_zero() {
            continue;
        }
        let n = n.to_f64().unwrap_or(f64::NAN);
        acc = (acc + (n * theta).rem_euclid(TAU)).rem_euclid(TAU);
    }
    normalize_angle(acc)
}

#[derive(Debug, Clone, PartialEq)]
pub enum RBarPoint {
    Real(f64),
    Bohr(BohrPoint),
}

impl RBarPoint {
    pub fn bohr(level: FrequencyTuple, angles: Vec<f64>) -> Result<Self> {
        Ok(Self::Bohr(BohrPoint::new(level, angles)?))
    }

    /// Gelfand evaluation `x̄(χ_l)`.
    pub fn character_value(&self, l: &Frequency) -> Result<Complex64> {
        match self {
            Self::Real(x) => Ok(char_eval(l, *x)),
            Self::Bohr(b) => b.character_value(l),
        }
    }

    pub fn to_record(&self) -> RBarPointRecord {
        match self {
            Self::Real(x) => RBarPointRecord::Real(*x),
            Self::Bohr(b) => RBarPointRecord::Bohr(BohrRecord {
                level: b.level.coord_strings(),
                angles: b.angles.clone(),
            }),
        }
    }

    pub fn from_record(ctx: &Arc<FrequencyContext>, rec: &RBarPointRecord) -> Result<Self> {
        match rec {
            RBarPointRecord::Real(x) if x.is_finite() => Ok(Self::Real(*x)),
            RBarPointRecord::Real(_) => Err(Error::InvalidInput("real point must be finite".into())),
            RBarPointRecord::Bohr(b) => Self::bohr(tuple_from_strings(ctx, &b.level)?, b.angles.clone()),
        }
    }
}

/// JSON form: `{"real": x}` or `{"bohr": {level: [...], angles: [...]}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RBarPointRecord {
    Real(f64),
    Bohr(BohrRecord),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BohrRecord {
    pub level: Vec<Vec<String>>,
    pub angles: Vec<f64>,
}

pub fn tuple_from_strings(ctx: &Arc<FrequencyContext>, rows: &[Vec<String>]) -> Result<FrequencyTuple> {
    FrequencyTuple::new(
        rows.iter()
            .map(|r| Frequency::parse(ctx, r))
            .collect::<Result<Vec<_>>>()?,
    )
}

/// Gelfand evaluation of `f₀ ⊕ f_AP` at `x̄`; the `C₀` part vanishes on Bohr points.
pub fn rbar_eval(point: &RBarPoint, qf: &QuantumFunction) -> Result<Complex64> {
    match point {
        RBarPoint::Real(x) => Ok(qf.eval_real(*x)),
        RBarPoint::Bohr(b) => qf.ap.terms().map(|(l, c)| b.character_value(&l).map(|v| c * v)).sum(),
    }
}

/// `β_c = √(c²r² + ¼)`
pub fn beta(c: f64, r: f64) -> f64 {
    (c * c * r * r + 0.25).sqrt()
}

/// Upper-left entry of the circular holonomy matrix `A(τ, c)`.
pub fn entry_a(c: f64, tau: f64, r: f64) -> Complex64 {
    let b = beta(c, r);
    let (s, co) = (b * tau).sin_cos();
    Complex64::new(co, s / (2.0 * b))
}

/// Upper-right entry of `A(τ, c)`.
pub fn entry_b(c: f64, tau: f64, r: f64) -> f64 {
    let b = beta(c, r);
    c * r / b * (b * tau).sin()
}

/// `C₀` part of [`entry_a`]: `a(c) − cos(c r τ)`.
pub fn entry_a0(c: f64, tau: f64, r: f64) -> Complex64 {
    entry_a(c, tau, r) - (c * r * tau).cos()
}

/// `C₀` part of [`entry_b`]: `b(c) − sin(c r τ)`.
pub fn entry_b0(c: f64, tau: f64, r: f64) -> f64 {
    entry_b(c, tau, r) - (c * r * tau).sin()
}

/// The entries `a, b` of `A(τ, ·)` as elements of `C₀(ℝ) ⊕ CAP`, in the variable `c`.
#[derive(Debug, Clone)]
pub struct CircularEntries {
    pub a: QuantumFunction,
    pub b: QuantumFunction,
}

pub(crate) fn check_circle_params(tau: f64, r: f64) -> Result<()> {
    if !(tau > 0.0 && tau < 2.0 * PI) {
        return Err(Error::Domain(format!("tau = {tau} must lie in (0, 2π)")));
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Domain(format!("r = {r} must be positive")));
    }
    Ok(())
}

/// Splits the entries of `A(τ, c)` as `a = a₀ ⊕ cos(c r τ)`, `b = b₀ ⊕ sin(c r τ)`.
/// `omega` is the frequency `r τ` expressed in the caller's context.
pub fn circular_entry_decomposition(tau: f64, r: f64, omega: &Frequency) -> Result<CircularEntries> {
    check_circle_params(tau, r)?;
    let expected = r * tau;
    let found = omega.value();
    if (found - expected).abs() > 1e-12 * expected.abs().max(1.0) {
        return Err(Error::FrequencyMismatch { expected, found });
    }
    let ctx = omega.context();
    let half = Complex64::new(0.5, 0.0);
    let cos_part = ApPolynomial::from_terms(ctx, [(omega.clone(), half), (omega.neg(), half)])?;
    // sin(ωc) = (χ_ω − χ_{−ω}) / 2i
    let sin_part = ApPolynomial::from_terms(
        ctx,
        [
            (omega.clone(), Complex64::new(0.0, -0.5)),
            (omega.neg(), Complex64::new(0.0, 0.5)),
        ],
    )?;
    Ok(CircularEntries {
        a: QuantumFunction::new(C0Function::new("a0", move |c| entry_a0(c, tau, r)), cos_part),
        b: QuantumFunction::new(C0Function::real("b0", move |c| entry_b0(c, tau, r)), sin_part),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frequency::BasisSymbol;
    use std::f64::consts::{FRAC_PI_2, SQRT_2};

    fn ctx2() -> Arc<FrequencyContext> {
        FrequencyContext::new(vec![
            BasisSymbol {
                id: "b1".into(),
                value: 1.0,
            },
            BasisSymbol {
                id: "b2".into(),
                value: SQRT_2,
            },
        ])
        .unwrap()
    }

    fn f(ctx: &Arc<FrequencyContext>, c: &[&str]) -> Frequency {
        Frequency::parse(ctx, c).unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn ap_eval_examples() {
        let ctx = ctx2();
        assert_eq!(ApPolynomial::constant(&ctx, c(1.0, 0.0)).eval(0.83), c(1.0, 0.0));
        let chi = ApPolynomial::character(&f(&ctx, &["1", "0"]));
        assert!((chi.eval(FRAC_PI_2) - c(0.0, 1.0)).norm() < 1e-15);
        let cosine = ApPolynomial::from_terms(
            &ctx,
            [
                (f(&ctx, &["1", "0"]), c(1.0, 0.0)),
                (f(&ctx, &["-1", "0"]), c(1.0, 0.0)),
            ],
        )
        .unwrap();
        assert!((cosine.eval(0.0) - c(2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn zero_coefficients_are_dropped() {
        let ctx = ctx2();
        let l = f(&ctx, &["1", "0"]);
        let mut p = ApPolynomial::character(&l);
        p.add_term(&l, c(-1.0, 0.0)).unwrap();
        assert!(p.is_empty());
        assert!(ApPolynomial::from_terms(&ctx, [(l, c(0.0, 0.0))]).unwrap().is_empty());
    }

    #[test]
    fn bohr_integral_examples() {
        let ctx = ctx2();
        assert_eq!(bohr_integral(&ApPolynomial::constant(&ctx, c(3.0, 0.0))), c(3.0, 0.0));
        assert_eq!(
            bohr_integral(&ApPolynomial::character(&f(&ctx, &["1", "0"]))),
            c(0.0, 0.0)
        );
        let p = ApPolynomial::from_terms(
            &ctx,
            [
                (Frequency::zero(&ctx), c(2.0, 0.0)),
                (f(&ctx, &["0", "1"]), c(5.0, 0.0)),
                (f(&ctx, &["1", "1"]), c(0.0, -1.0)),
            ],
        )
        .unwrap();
        assert_eq!(bohr_integral(&p), c(2.0, 0.0));
    }

    #[test]
    fn bohr_inner_product_examples() {
        let ctx = ctx2();
        let b1 = ApPolynomial::character(&f(&ctx, &["1", "0"]));
        let b2 = ApPolynomial::character(&f(&ctx, &["0", "1"]));
        assert_eq!(bohr_inner_product(&b1, &b1).unwrap(), c(1.0, 0.0));
        assert_eq!(bohr_inner_product(&b1, &b2).unwrap(), c(0.0, 0.0));
        let mix = ApPolynomial::constant(&ctx, c(2.0, 0.0)).add(&b1).unwrap();
        assert_eq!(bohr_inner_product(&mix, &b1).unwrap(), c(1.0, 0.0));
        // Agrees with integrating p·conj(q).
        let via_product = bohr_integral(&mix.mul(&b1.conj()).unwrap());
        assert_eq!(via_product, c(1.0, 0.0));
    }

    #[test]
    fn rbar_eval_examples() {
        let ctx = ctx2();
        let b1 = f(&ctx, &["1", "0"]);
        let qf = QuantumFunction::new(C0Function::gaussian(1.0, 0.0, 1.0), ApPolynomial::character(&b1));
        assert!((rbar_eval(&RBarPoint::Real(0.0), &qf).unwrap() - c(2.0, 0.0)).norm() < 1e-15);

        let level = FrequencyTuple::single(b1.clone()).unwrap();
        let p = RBarPoint::bohr(level.clone(), vec![PI]).unwrap();
        assert!((rbar_eval(&p, &qf).unwrap() - c(-1.0, 0.0)).norm() < 1e-15);

        let p = RBarPoint::bohr(level, vec![PI / 3.0]).unwrap();
        let doubled = QuantumFunction::from_ap(ApPolynomial::character(&f(&ctx, &["2", "0"])));
        let expected = c(0.0, 2.0 * PI / 3.0).exp();
        assert!((rbar_eval(&p, &doubled).unwrap() - expected).norm() < 1e-14);
    }

    #[test]
    fn rbar_eval_rejects_frequency_outside_level() {
        let ctx = ctx2();
        let level = FrequencyTuple::single(f(&ctx, &["1", "0"])).unwrap();
        let p = RBarPoint::bohr(level, vec![0.4]).unwrap();
        let qf = QuantumFunction::from_ap(ApPolynomial::character(&f(&ctx, &["1/2", "0"])));
        assert!(matches!(rbar_eval(&p, &qf), Err(Error::FrequencyNotInLevel(_))));
    }

    #[test]
    fn angles_are_normalized() {
        let ctx = ctx2();
        let level = FrequencyTuple::single(f(&ctx, &["1", "0"])).unwrap();
        let p = BohrPoint::new(level.clone(), vec![-FRAC_PI_2]).unwrap();
        assert!((p.angles()[0] - 3.0 * FRAC_PI_2).abs() < 1e-15);
        let p = BohrPoint::new(level.clone(), vec![TAU - 1e-16]).unwrap();
        assert_eq!(p.angles()[0], 0.0);
        assert!(BohrPoint::new(level, vec![0.0, 1.0]).is_err());
    }

    #[test]
    fn records_round_trip() {
        let ctx = ctx2();
        let p = ApPolynomial::from_terms(
            &ctx,
            [
                (f(&ctx, &["1/2", "0"]), c(1.5, -2.0)),
                (Frequency::zero(&ctx), c(1.0, 0.0)),
            ],
        )
        .unwrap();
        let json = serde_json::to_string(&p.to_records()).unwrap();
        let back: Vec<ApTermRecord> = serde_json::from_str(&json).unwrap();
        assert_eq!(ApPolynomial::from_records(&ctx, &back).unwrap(), p);

        let pt: RBarPointRecord = serde_json::from_str(r#"{"bohr":{"level":[["1","0"]],"angles":[1.0]}}"#).unwrap();
        let point = RBarPoint::from_record(&ctx, &pt).unwrap();
        assert_eq!(point.to_record(), pt);
        let real: RBarPointRecord = serde_json::from_str(r#"{"real":2.5}"#).unwrap();
        assert_eq!(RBarPoint::from_record(&ctx, &real).unwrap(), RBarPoint::Real(2.5));
    }

    fn omega_ctx(value: f64) -> Frequency {
        let ctx = FrequencyContext::new(vec![BasisSymbol {
            id: "omega".into(),
            value,
        }])
        .unwrap();
        Frequency::from_ints(&ctx, &[1]).unwrap()
    }

    #[test]
    fn circular_entries_at_zero() {
        let tau = 2.1;
        let e = circular_entry_decomposition(tau, 1.3, &omega_ctx(1.3 * tau)).unwrap();
        let a = rbar_eval(&RBarPoint::Real(0.0), &e.a).unwrap();
        let b = rbar_eval(&RBarPoint::Real(0.0), &e.b).unwrap();
        assert!((a - c(0.0, tau / 2.0).exp()).norm() < 1e-15);
        assert!(b.norm() < 1e-15);
    }

    #[test]
    fn circular_entries_at_first_intersection() {
        // τ = π, r = 1, c = √3/2 gives β = 1 and sin(βτ) = 0.
        let c0 = 3f64.sqrt() / 2.0;
        assert!((beta(c0, 1.0) - 1.0).abs() < 1e-15);
        let e = circular_entry_decomposition(PI, 1.0, &omega_ctx(PI)).unwrap();
        let a = rbar_eval(&RBarPoint::Real(c0), &e.a).unwrap();
        let b = rbar_eval(&RBarPoint::Real(c0), &e.b).unwrap();
        assert!((a - c(-1.0, 0.0)).norm() < 1e-15);
        assert!(b.norm() < 1e-15);
    }

    #[test]
    fn circular_c0_parts_vanish_at_infinity() {
        for &(cc, bound) in &[(1e3, 1e-2), (1e6, 1e-5)] {
            for sign in [-1.0, 1.0] {
                assert!(entry_a0(sign * cc, PI, 1.0).norm() < bound);
                assert!(entry_b0(sign * cc, PI, 1.0).abs() < bound);
            }
        }
    }

    #[test]
    fn circular_decomposition_rejects_wrong_frequency() {
        let err = circular_entry_decomposition(PI, 1.0, &omega_ctx(3.0)).unwrap_err();
        assert!(matches!(err, Error::FrequencyMismatch { .. }));
        assert!(circular_entry_decomposition(7.0, 1.0, &omega_ctx(7.0)).is_err());
    }

    #[test]
    fn entries_form_unitary_rows() {
        for &(tau, r) in &[(0.3, 0.5), (PI, 1.0), (6.0, 2.5)] {
            for i in -200..=200 {
                let cc = i as f64 * 0.173;
                let n = entry_a(cc, tau, r).norm_sqr() + entry_b(cc, tau, r).powi(2);
                assert!((n - 1.0).abs() < 1e-12, "tau={tau} r={r} c={cc}");
            }
        }
    }

    #[test]
    fn derivative_of_b_at_zero() {
        for &(tau, r) in &[(0.7, 0.4), (PI, 1.0), (5.5, 2.0)] {
            let h = 1e-5;
            let fd = (entry_b(h, tau, r) - entry_b(-h, tau, r)) / (2.0 * h);
            assert!((fd - 2.0 * r * (tau / 2.0).sin()).abs() < 1e-6);
        }
    }

    #[test]
    fn a0_is_nowhere_zero_on_log_grid() {
        let (tau, r) = (PI, 1.0);
        let mut min = f64::INFINITY;
        for i in 0..=4000 {
            let mag = 10f64.powf(-6.0 + 12.0 * i as f64 / 4000.0);
            for cc in [mag, -mag] {
                min = min.min(entry_a0(cc, tau, r).norm());
            }
        }
        min = min.min(entry_a0(0.0, tau, r).norm());
        assert!(min > 0.0);
    }
}
