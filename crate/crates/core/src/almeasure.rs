//! Transition maps of the Ashtekar–Lewandowski projective system on `SU(2)^k`, and a
//! Monte Carlo check that they push Haar measure forward to Haar measure.
//!
//! A refinement of graphs is abstracted to a [`DecompositionSpec`]: every coarse
//! edge is a word in the fine edges. Pushforwards are tested against low-degree
//! Peter–Weyl moments, all of which vanish under Haar measure except the constant.
//!
//! Each panel statistic is a sample mean with variance at most `1/(2N)` per real
//! component, so the `4/√N` threshold sits at more than `5.6σ` and the chance of a
//! false failure over the whole panel is below `10⁻⁶` for every spec size used here.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::NeumaierSum;
use crate::su2::{covering, Su2};
use crate::Status;

/// One factor `x_i^p` of a word; `i` counts from 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WordFactor {
    pub i: usize,
    pub p: i8,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EdgeWord(pub Vec<WordFactor>);

impl EdgeWord {
    pub fn factors(&self) -> &[WordFactor] {
        &self.0
    }

    /// `(x_{i₁}^{p₁}⋯x_{i_m}^{p_m})⁻¹ = x_{i_m}^{−p_m}⋯x_{i₁}^{−p₁}`
    pub fn inverse(&self) -> EdgeWord {
        EdgeWord(self.0.iter().rev().map(|f| WordFactor { i: f.i, p: -f.p }).collect())
    }

    fn eval(&self, point: &[Su2]) -> Su2 {
        let letter = |f: &WordFactor| {
            let x = point[f.i - 1];
            if f.p > 0 {
                x
            } else {
                x.inverse()
            }
        };
        let (first, rest) = self.0.split_first().expect("words are nonempty");
        rest.iter().fold(letter(first), |acc, f| acc * letter(f))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecompositionSpec {
    pub k: usize,
    pub k_prime: usize,
    pub words: Vec<EdgeWord>,
}

impl DecompositionSpec {
    /// A spec in which every fine index occurs in exactly one word.
    pub fn new(k_prime: usize, words: Vec<EdgeWord>) -> Result<Self> {
        let spec = Self::unchecked(k_prime, words)?;
        spec.validate()?;
        Ok(spec)
    }

    /// Checks only shape: nonempty words, exponents ±1 and indices in range.
    /// Specs built this way may reuse fine edges, which breaks consistency.
    pub fn unchecked(k_prime: usize, words: Vec<EdgeWord>) -> Result<Self> {
        let spec = Self {
            k: words.len(),
            k_prime,
            words,
        };
        spec.check_shape()?;
        Ok(spec)
    }

    pub fn identity(k: usize) -> Self {
        let words = (1..=k).map(|i| EdgeWord(vec![WordFactor { i, p: 1 }])).collect();
        Self { k, k_prime: k, words }
    }

    fn check_shape(&self) -> Result<()> {
        if self.k == 0 || self.k != self.words.len() {
            return Err(Error::InvalidSpec(format!(
                "k = {} but {} words given",
                self.k,
                self.words.len()
            )));
        }
        for (w, word) in self.words.iter().enumerate() {
            if word.0.is_empty() {
                return Err(Error::InvalidSpec(format!("word {} is empty", w + 1)));
            }
            for f in &word.0 {
                if f.i == 0 || f.i > self.k_prime {
                    return Err(Error::IndexOutOfRange {
                        index: f.i,
                        len: self.k_prime,
                    });
                }
                if f.p != 1 && f.p != -1 {
                    return Err(Error::InvalidSpec(format!("exponent {} is not ±1", f.p)));
                }
            }
        }
        Ok(())
    }

    fn occurrences(&self) -> Vec<usize> {
        let mut seen = vec![0; self.k_prime];
        for f in self.words.iter().flat_map(|w| &w.0) {
            seen[f.i - 1] += 1;
        }
        seen
    }

    pub fn is_disjoint(&self) -> bool {
        self.occurrences().iter().all(|&n| n == 1)
    }

    pub fn validate(&self) -> Result<()> {
        self.check_shape()?;
        if let Some(i) = self.occurrences().iter().position(|&n| n != 1) {
            return Err(Error::InvalidSpec(format!(
                "fine index {} occurs {} times; each must occur in exactly one word",
                i + 1,
                self.occurrences()[i]
            )));
        }
        Ok(())
    }

    /// The spec for `coarser ∘ self`: each word of `coarser` with its letters
    /// replaced by the corresponding words of `self`.
    pub fn then(&self, coarser: &DecompositionSpec) -> Result<DecompositionSpec> {
        if coarser.k_prime != self.k {
            return Err(Error::InvalidSpec(format!(
                "cannot compose: coarser spec expects {} inputs, finer produces {}",
                coarser.k_prime, self.k
            )));
        }
        let words = coarser
            .words
            .iter()
            .map(|w| {
                EdgeWord(
                    w.0.iter()
                        .flat_map(|f| {
                            let inner = &self.words[f.i - 1];
                            if f.p > 0 {
                                inner.0.clone()
                            } else {
                                inner.inverse().0
                            }
                        })
                        .collect(),
                )
            })
            .collect();
        Self::unchecked(self.k_prime, words)
    }
}

/// Applies every word of `spec` to a point of `SU(2)^{k′}`.
pub fn word_transition(spec: &DecompositionSpec, point: &[Su2]) -> Result<Vec<Su2>> {
    if point.len() != spec.k_prime {
        return Err(Error::DimensionMismatch {
            expected: spec.k_prime,
            found: point.len(),
        });
    }
    spec.check_shape()?;
    Ok(spec.words.iter().map(|w| w.eval(point)).collect())
}

/// A Haar-distributed element: a standard normal vector in ℝ⁴ projected to the 3-sphere.
pub fn haar_su2_sample<R: Rng + ?Sized>(rng: &mut R) -> Su2 {
    loop {
        let v: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
        if let Ok(q) = Su2::new(v[0], v[1], v[2], v[3]) {
            return q;
        }
    }
}

pub const DEFAULT_STREAMS: u64 = 8;

/// The generator for stream `s` of a run seeded with `seed`.
pub fn stream_rng(seed: u64, s: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(s);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonomialStat {
    pub label: String,
    #[serde(serialize_with = "crate::serialize_complex")]
    pub mean: Complex64,
    pub abs_mean: f64,
    pub threshold: f64,
    pub status: Status,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlReport {
    pub status: Status,
    pub n: usize,
    pub seed: u64,
    pub streams: u64,
    pub disjoint: bool,
    pub trivial_mean: f64,
    pub worst: Option<MonomialStat>,
    pub monomials: Vec<MonomialStat>,
}

/// Labels of the moment panel on `SU(2)^k`, in evaluation order.
fn panel_labels(k: usize) -> Vec<String> {
    let mut labels = Vec::new();
    for a in 1..=k {
        for i in 1..=2 {
            for j in 1..=2 {
                labels.push(format!("U{a}_{i}{j}"));
            }
        }
        for i in 1..=3 {
            for j in 1..=3 {
                labels.push(format!("Ad{a}_{i}{j}"));
            }
        }
    }
    for a in 1..=k {
        for b in (a + 1)..=k {
            for (i, j, p, q) in index_quads() {
                labels.push(format!("U{a}_{i}{j}*conj(U{b}_{p}{q})"));
            }
        }
    }
    labels
}

fn index_quads() -> impl Iterator<Item = (usize, usize, usize, usize)> {
    (0..16).map(|m| (m / 8 + 1, (m / 4) % 2 + 1, (m / 2) % 2 + 1, m % 2 + 1))
}

/// Degree ≤ 2 matrix-coefficient monomials of a point of `SU(2)^k`.
fn panel_values(ys: &[Su2], out: &mut Vec<Complex64>) {
    out.clear();
    let mats: Vec<_> = ys.iter().map(|y| y.matrix().0).collect();
    for (y, m) in ys.iter().zip(&mats) {
        out.extend(m.iter().flatten().copied());
        out.extend(covering(y).iter().flatten().map(|&v| Complex64::new(v, 0.0)));
    }
    for a in 0..mats.len() {
        for b in (a + 1)..mats.len() {
            for (i, j, p, q) in index_quads() {
                out.push(mats[a][i - 1][j - 1] * mats[b][p - 1][q - 1].conj());
            }
        }
    }
}

fn stream_counts(n: usize, streams: u64) -> Vec<usize> {
    let s = streams as usize;
    (0..s).map(|i| n / s + usize::from(i < n % s)).collect()
}

/// Panel sums (including the constant monomial, first) over `count` Haar draws of
/// `SU(2)^{k′}` pushed through `transform`.
fn stream_sums<F>(k_prime: usize, count: usize, mut rng: ChaCha8Rng, transform: F) -> Vec<NeumaierSum>
where
    F: Fn(&[Su2]) -> Vec<Su2>,
{
    let mut sums: Vec<NeumaierSum> = Vec::new();
    let mut point = vec![Su2::IDENTITY; k_prime];
    let mut vals = Vec::new();
    for _ in 0..count {
        for x in point.iter_mut() {
            *x = haar_su2_sample(&mut rng);
        }
        panel_values(&transform(&point), &mut vals);
        if sums.is_empty() {
            sums = vec![NeumaierSum::default(); vals.len() + 1];
        }
        sums[0].add(Complex64::new(1.0, 0.0));
        for (s, v) in sums[1..].iter_mut().zip(&vals) {
            s.add(*v);
        }
    }
    sums
}

/// Moment-panel means of `transform(X)` for Haar-distributed `X ∈ SU(2)^{k′}`.
/// The first entry is the constant monomial.
pub fn panel_means<F>(k_prime: usize, n: usize, seed: u64, streams: u64, transform: F) -> Vec<Complex64>
where
    F: Fn(&[Su2]) -> Vec<Su2> + Sync,
{
    let per_stream: Vec<Vec<NeumaierSum>> = stream_counts(n, streams)
        .into_par_iter()
        .enumerate()
        .map(|(s, count)| stream_sums(k_prime, count, stream_rng(seed, s as u64), &transform))
        .collect();
    let width = per_stream.iter().map(Vec::len).max().unwrap_or(0);
    let mut total = vec![NeumaierSum::default(); width];
    for sums in &per_stream {
        for (t, s) in total.iter_mut().zip(sums) {
            t.add(s.total());
        }
    }
    total.iter().map(|t| t.total() / n as f64).collect()
}

pub const MIN_SAMPLES: usize = 10_000;

/// Draws `n` Haar points of `SU(2)^{k′}`, maps them through the words of `spec` and
/// compares the moment panel on `SU(2)^k` with its Haar values.
pub fn verify_al_pushforward(spec: &DecompositionSpec, n: usize, seed: u64) -> Result<AlReport> {
    verify_al_pushforward_streams(spec, n, seed, DEFAULT_STREAMS)
}

pub fn verify_al_pushforward_streams(spec: &DecompositionSpec, n: usize, seed: u64, streams: u64) -> Result<AlReport> {
    spec.check_shape()?;
    if n < MIN_SAMPLES {
        return Err(Error::InvalidInput(format!(
            "need at least {MIN_SAMPLES} samples, got {n}"
        )));
    }
    if streams == 0 {
        return Err(Error::InvalidInput("stream count must be positive".into()));
    }
    let means = panel_means(spec.k_prime, n, seed, streams, |x| {
        spec.words.iter().map(|w| w.eval(x)).collect()
    });
    let threshold = 4.0 / (n as f64).sqrt();
    let monomials: Vec<MonomialStat> = panel_labels(spec.k)
        .into_iter()
        .zip(&means[1..])
        .map(|(label, &mean)| MonomialStat {
            label,
            mean,
            abs_mean: mean.norm(),
            threshold,
            status: Status::from_bool(mean.norm() <= threshold),
        })
        .collect();
    let trivial_mean = means[0].re;
    let worst = monomials
        .iter()
        .max_by(|a, b| a.abs_mean.total_cmp(&b.abs_mean))
        .cloned();
    let ok = trivial_mean == 1.0 && monomials.iter().all(|m| m.status.passed());
    Ok(AlReport {
        status: Status::from_bool(ok),
        n,
        seed,
        streams,
        disjoint: spec.is_disjoint(),
        trivial_mean,
        worst,
        monomials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn word(factors: &[(usize, i8)]) -> EdgeWord {
        EdgeWord(factors.iter().map(|&(i, p)| WordFactor { i, p }).collect())
    }

    fn random_point(k: usize, seed: u64) -> Vec<Su2> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..k).map(|_| haar_su2_sample(&mut rng)).collect()
    }

    #[test]
    fn transition_examples() {
        let x = random_point(3, 1);
        assert_eq!(word_transition(&DecompositionSpec::identity(3), &x).unwrap(), x);

        let split = DecompositionSpec::new(2, vec![word(&[(2, 1), (1, 1)])]).unwrap();
        let y = word_transition(&split, &x[..2]).unwrap();
        let direct = x[1].matrix() * x[0].matrix();
        assert!(y[0].matrix().frobenius_distance(&direct) < 1e-12);

        let inv = DecompositionSpec::new(1, vec![word(&[(1, -1)])]).unwrap();
        let y = word_transition(&inv, &x[..1]).unwrap();
        assert!((y[0] * x[0]).distance(&Su2::IDENTITY) < 1e-12);
    }

    #[test]
    fn spec_validation() {
        assert!(matches!(
            DecompositionSpec::new(2, vec![word(&[(3, 1)])]),
            Err(Error::IndexOutOfRange { index: 3, len: 2 })
        ));
        assert!(DecompositionSpec::new(2, vec![word(&[(1, 1)]), word(&[(1, 1)])]).is_err());
        assert!(DecompositionSpec::new(2, vec![word(&[(1, 1)])]).is_err());
        assert!(DecompositionSpec::new(1, vec![word(&[])]).is_err());
        assert!(DecompositionSpec::new(1, vec![word(&[(1, 2)])]).is_err());
        let dup = DecompositionSpec::unchecked(1, vec![word(&[(1, 1)]), word(&[(1, 1)])]).unwrap();
        assert!(!dup.is_disjoint());
        assert!(word_transition(&dup, &random_point(2, 0)).is_err());
    }

    #[test]
    fn spec_json_shape() {
        let spec: DecompositionSpec =
            serde_json::from_str(r#"{"k":1,"k_prime":2,"words":[[{"i":2,"p":1},{"i":1,"p":1}]]}"#).unwrap();
        assert_eq!(spec, DecompositionSpec::new(2, vec![word(&[(2, 1), (1, 1)])]).unwrap());
    }

    #[test]
    fn sampler_moments() {
        let n = 100_000;
        let means = panel_means(1, n, 11, DEFAULT_STREAMS, |x| x.to_vec());
        let tol = 4.0 / (n as f64).sqrt();
        assert_eq!(means[0], Complex64::new(1.0, 0.0));
        for m in &means[1..5] {
            assert!(m.norm() <= tol);
        }
        let trace = means[5] + means[9] + means[13];
        assert!(trace.norm() <= 4.0 * 3f64.sqrt() / (n as f64).sqrt());
        let mut rng = stream_rng(11, 0);
        for _ in 0..1000 {
            assert!((haar_su2_sample(&mut rng).matrix().det() - 1.0).norm() < 1e-12);
        }
    }

    #[test]
    fn sampler_is_left_invariant() {
        let n = 50_000;
        let g = random_point(1, 99)[0];
        let plain = panel_means(1, n, 3, DEFAULT_STREAMS, |x| x.to_vec());
        let shifted = panel_means(1, n, 3, DEFAULT_STREAMS, |x| vec![g * x[0]]);
        let tol = 4.0 / (n as f64).sqrt();
        for (a, b) in plain.iter().zip(&shifted).skip(1) {
            assert!(a.norm() <= tol && b.norm() <= tol);
        }
    }

    #[test]
    fn reports_are_deterministic() {
        let spec = DecompositionSpec::new(2, vec![word(&[(2, 1), (1, 1)])]).unwrap();
        let a = verify_al_pushforward(&spec, 20_000, 5).unwrap();
        let b = verify_al_pushforward(&spec, 20_000, 5).unwrap();
        assert_eq!(a, b);
        assert!(a.status.passed());
        assert!(verify_al_pushforward(&spec, 100, 5).is_err());
    }

    #[test]
    fn duplicated_variable_is_detected() {
        let dup = DecompositionSpec::unchecked(1, vec![word(&[(1, 1)]), word(&[(1, 1)])]).unwrap();
        let report = verify_al_pushforward(&dup, 20_000, 5).unwrap();
        assert_eq!(report.status, Status::Fail);
        let worst = report.worst.unwrap();
        assert!(worst.label.contains("conj"));
        assert!((worst.abs_mean - 0.5).abs() < 0.05, "{worst:?}");
    }

    fn valid_spec() -> impl Strategy<Value = DecompositionSpec> {
        (1usize..=3)
            .prop_flat_map(|k| prop::collection::vec(1usize..=4, k))
            .prop_filter("at most six fine edges", |lens| lens.iter().sum::<usize>() <= 6)
            .prop_flat_map(|lens| {
                let total: usize = lens.iter().sum();
                let order = Just((1..=total).collect::<Vec<_>>()).prop_shuffle();
                let signs = prop::collection::vec(prop::bool::ANY, total);
                (Just(lens), order, signs)
            })
            .prop_map(|(lens, order, signs)| {
                let mut it = order.into_iter().zip(signs);
                let words = lens
                    .iter()
                    .map(|&len| {
                        EdgeWord(
                            it.by_ref()
                                .take(len)
                                .map(|(i, s)| WordFactor {
                                    i,
                                    p: if s { 1 } else { -1 },
                                })
                                .collect(),
                        )
                    })
                    .collect();
                DecompositionSpec::new(lens.iter().sum(), words).unwrap()
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn composition_matches_substitution(fine in valid_spec(), seed in any::<u64>(), signs in prop::collection::vec(prop::bool::ANY, 3)) {
            // A coarser spec over fine's outputs: reverse order with random exponents.
            let words = (1..=fine.k).rev()
                .map(|i| EdgeWord(vec![WordFactor { i, p: if signs[i - 1] { 1 } else { -1 } }]))
                .collect::<Vec<_>>();
            let coarse = DecompositionSpec::new(fine.k, vec![EdgeWord(words.into_iter().flat_map(|w| w.0).collect())]).unwrap();
            let x = random_point(fine.k_prime, seed);
            let stepwise = word_transition(&coarse, &word_transition(&fine, &x).unwrap()).unwrap();
            let composed = fine.then(&coarse).unwrap();
            prop_assert!(composed.is_disjoint());
            let direct = word_transition(&composed, &x).unwrap();
            for (a, b) in stepwise.iter().zip(&direct) {
                prop_assert!(a.distance(b) < 1e-12);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(6))]

        #[test]
        fn valid_specs_pass_the_panel(spec in valid_spec(), seed in any::<u64>()) {
            let report = verify_al_pushforward(&spec, 100_000, seed).unwrap();
            prop_assert!(report.status.passed(), "{:?}", report.worst);
        }
    }
}
