//! The cosmological configuration space `R̄ = ℝ ⊔ ℝ_Bohr`, realized as a projective
//! limit of level spaces `X_L = im[f] ⊔ 𝕋^|L|`.
//!
//! * [`frequency`]: exact rational frequencies over a declared ℚ-basis, ℤ-span
//!   solves and the directed join of the index set.
//! * [`harmonic`]: almost periodic polynomials, `C₀ ⊕ CAP` functions and points
//!   of `R̄` in cylindrical form.
//! * [`projlim`]: level spaces, projections, transition maps and consistency audits.
//! * [`measure`]: the measures `μ_{ρ,t} = t·ρ(λ) ⊕ (1−t)·μ_Bohr`, integration,
//!   the isometries between their `L²` spaces and the uniqueness probe.
//! * [`su2`]: SU(2) arithmetic, the covering map and the linear / circular holonomies.
//! * [`almeasure`]: word transition maps on `SU(2)^k` and Monte Carlo Haar consistency.

pub mod almeasure;
pub mod error;
pub mod frequency;
pub mod harmonic;
mod lattice;
pub mod measure;
pub mod projlim;
pub mod quadrature;
pub mod su2;

pub use error::{Error, Result};

use serde::{Deserialize, Serialize};

/// Outcome of a verification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

impl Status {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Self::Pass
        } else {
            Self::Fail
        }
    }

    pub fn passed(self) -> bool {
        self == Self::Pass
    }

    pub fn and(self, other: Self) -> Self {
        Self::from_bool(self.passed() && other.passed())
    }
}

/// Serializes a complex number as `{"re": …, "im": …}`.
pub fn serialize_complex<S: serde::Serializer>(
    z: &num_complex::Complex64,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeStruct;
    let mut st = s.serialize_struct("Complex", 2)?;
    st.serialize_field("re", &z.re)?;
    st.serialize_field("im", &z.im)?;
    st.end()
}
