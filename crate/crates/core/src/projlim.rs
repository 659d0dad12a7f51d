//! Level spaces `X_L = im[f] ⊔ 𝕋^|L|` and the maps between them.
//!
//! The `im[f]` leg is stored through its preimage `x ∈ ℝ`; since every transition
//! map is the identity there, `f` itself never enters this module.

use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frequency::{join, meet, solve_span, FrequencyTuple, IntegerRelationMatrix, SpanSolution};
use crate::harmonic::{angle_distance, integer_phase, normalize_angle, BohrPoint, RBarPoint};
use crate::Status;

/// Angles closer than this on the circle are treated as equal when separating points.
pub const ANGLE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct LevelSpace {
    pub level: FrequencyTuple,
    pub parametrization_id: Arc<str>,
}

impl LevelSpace {
    pub fn new(level: FrequencyTuple, parametrization_id: impl Into<Arc<str>>) -> Self {
        Self {
            level,
            parametrization_id: parametrization_id.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LevelPoint {
    Circle(f64),
    Torus(Vec<f64>),
}

/// Angles `θ_j = Σ_i n^i_j θ'_i mod 2π` induced on the coarse level.
pub fn apply_relation(n: &IntegerRelationMatrix, fine_angles: &[f64]) -> Vec<f64> {
    (0..n.coarse_len())
        .map(|j| {
            let column: Vec<BigInt> = (0..n.fine_len()).map(|i| n.get(i, j).clone()).collect();
            integer_phase(&column, fine_angles)
        })
        .collect()
}

fn relation(coarse: &FrequencyTuple, fine: &FrequencyTuple) -> Result<IntegerRelationMatrix> {
    match solve_span(coarse, fine)? {
        SpanSolution::Relation(n) => Ok(n),
        SpanSolution::NotInSpan => Err(Error::NotRefinable(format!("{coarse} is not ≤_Z {fine}"))),
    }
}

/// `π_L(x̄)`.
pub fn project(point: &RBarPoint, space: &LevelSpace) -> Result<LevelPoint> {
    match point {
        RBarPoint::Real(x) => Ok(LevelPoint::Circle(*x)),
        RBarPoint::Bohr(b) => {
            let n = relation(&space.level, b.level())?;
            Ok(LevelPoint::Torus(apply_relation(&n, b.angles())))
        }
    }
}

/// `π_L^{L′}` from the finer space `from` to the coarser space `to`.
pub fn transition(from: &LevelSpace, to: &LevelSpace, point: &LevelPoint) -> Result<LevelPoint> {
    if from.parametrization_id != to.parametrization_id {
        return Err(Error::ParametrizationMismatch(
            from.parametrization_id.to_string(),
            to.parametrization_id.to_string(),
        ));
    }
    let n = relation(&to.level, &from.level)?;
    match point {
        LevelPoint::Circle(x) => Ok(LevelPoint::Circle(*x)),
        LevelPoint::Torus(angles) => {
            if angles.len() != from.level.len() {
                return Err(Error::PointShape(format!(
                    "{} angles at a level of length {}",
                    angles.len(),
                    from.level.len()
                )));
            }
            Ok(LevelPoint::Torus(apply_relation(&n, angles)))
        }
    }
}

/// A Bohr point over `space` with exactly the prescribed torus coordinates.
pub fn torus_preimage(space: &LevelSpace, angles: &[f64]) -> Result<RBarPoint> {
    Ok(RBarPoint::Bohr(BohrPoint::new(space.level.clone(), angles.to_vec())?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub check: String,
    pub pair: [String; 2],
    pub status: Status,
    pub monomials_tested: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Vec<i64>>,
}

/// Checks `π̂^{L′}_L(μ_{𝕋,L′}) = μ_{𝕋,L}` on every character `θ ↦ e^{i⟨k,θ⟩}`
/// with `|k|_∞ ≤ max_exponent`.
pub fn verify_pushforward_exact(
    l: &FrequencyTuple,
    lp: &FrequencyTuple,
    max_exponent: u32,
) -> Result<ConsistencyReport> {
    let n = relation(l, lp)?;
    let mut report = verify_pushforward_matrix(&n, max_exponent)?;
    report.pair = [l.to_string(), lp.to_string()];
    Ok(report)
}

/// The exponent vector `k` on the coarse torus pulls back to `N·k` on the fine one.
/// Haar integrals agree iff `N·k = 0` exactly when `k = 0`.
pub fn verify_pushforward_matrix(n: &IntegerRelationMatrix, max_exponent: u32) -> Result<ConsistencyReport> {
    if max_exponent == 0 {
        return Err(Error::InvalidInput("max_exponent must be positive".into()));
    }
    let k = n.coarse_len();
    let e = i64::from(max_exponent);
    let side = (2 * e + 1) as u64;
    let total = side
        .checked_pow(k as u32)
        .filter(|&t| t <= 20_000_000)
        .ok_or_else(|| Error::InvalidInput(format!("{side}^{k} monomials is too many to enumerate")))?;

    let entries: Vec<Vec<BigInt>> = n.rows();
    let mut counterexample = None;
    let mut exps = vec![-e; k];
    for _ in 0..total {
        let trivial = exps.iter().all(|&x| x == 0);
        let pulled_back_trivial = entries
            .iter()
            .all(|row| row.iter().zip(&exps).map(|(a, &b)| a * b).sum::<BigInt>().is_zero());
        if trivial != pulled_back_trivial {
            counterexample = Some(exps.clone());
            break;
        }
        for x in exps.iter_mut() {
            if *x < e {
                *x += 1;
                break;
            }
            *x = -e;
        }
    }
    let rows: Vec<String> = entries
        .iter()
        .map(|r| {
            format!(
                "{:?}",
                r.iter().map(|v| v.to_i64().unwrap_or(i64::MAX)).collect::<Vec<_>>()
            )
        })
        .collect();
    Ok(ConsistencyReport {
        check: "pushforward_haar".into(),
        pair: [format!("k={k}"), format!("N={}", rows.join(","))],
        status: Status::from_bool(counterexample.is_none()),
        monomials_tested: total,
        counterexample,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum Separation {
    /// The points differ on the `im[f]` leg, or lie on different legs; every level separates them.
    CircleWitness,
    /// `π_level` separates the points. They already differ on the coarser `witness_level`,
    /// where their angles are `angles`.
    Level {
        level: FrequencyTuple,
        witness_level: FrequencyTuple,
        angles: [Vec<f64>; 2],
    },
    /// No level inside the declared context distinguishes the two representations.
    Indistinguishable,
}

/// Finds a projection telling two points apart. Bohr points are compared on the
/// meet of their levels, the only level on which both are determined; any
/// finer level, in particular the join, then separates them as well.
pub fn separate_points(x: &RBarPoint, y: &RBarPoint) -> Result<Separation> {
    match (x, y) {
        (RBarPoint::Real(a), RBarPoint::Real(b)) => Ok(if a == b {
            Separation::Indistinguishable
        } else {
            Separation::CircleWitness
        }),
        (RBarPoint::Real(_), RBarPoint::Bohr(_)) | (RBarPoint::Bohr(_), RBarPoint::Real(_)) => {
            Ok(Separation::CircleWitness)
        }
        (RBarPoint::Bohr(p), RBarPoint::Bohr(q)) => {
            let Some(m) = meet(p.level(), q.level())? else {
                return Ok(Separation::Indistinguishable);
            };
            let ap = apply_relation(&relation(&m, p.level())?, p.angles());
            let aq = apply_relation(&relation(&m, q.level())?, q.angles());
            if ap.iter().zip(&aq).all(|(s, t)| angle_distance(*s, *t) <= ANGLE_TOL) {
                return Ok(Separation::Indistinguishable);
            }
            Ok(Separation::Level {
                level: join(p.level(), q.level())?,
                witness_level: m,
                angles: [ap, aq],
            })
        }
    }
}

/// Whether two level points agree: exactly on the circle leg, up to `tol` on the torus.
pub fn level_points_close(a: &LevelPoint, b: &LevelPoint, tol: f64) -> bool {
    match (a, b) {
        (LevelPoint::Circle(x), LevelPoint::Circle(y)) => x == y,
        (LevelPoint::Torus(s), LevelPoint::Torus(t)) => {
            s.len() == t.len()
                && s.iter()
                    .zip(t)
                    .all(|(u, v)| angle_distance(normalize_angle(*u), normalize_angle(*v)) <= tol)
        }
        _ => false,
    }
}
