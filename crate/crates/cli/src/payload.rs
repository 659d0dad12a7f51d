//! Payload schemas shared by several commands.

use std::sync::Arc;

use num_complex::Complex64;
use rbar_core::frequency::{BasisSymbol, FrequencyContext, FrequencyTuple};
use rbar_core::harmonic::{tuple_from_strings, ApPolynomial, ApTermRecord, C0Function, QuantumFunction};
use rbar_core::measure::{make_parametrization, MeasureDescriptor, ParametrizationKind};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub fn default_basis() -> Vec<BasisSymbol> {
    vec![BasisSymbol {
        id: "one".into(),
        value: 1.0,
    }]
}

pub fn context(basis: Option<&Vec<BasisSymbol>>) -> Result<Arc<FrequencyContext>, CliError> {
    Ok(FrequencyContext::new(basis.cloned().unwrap_or_else(default_basis))?)
}

pub fn tuple(ctx: &Arc<FrequencyContext>, rows: &[Vec<String>]) -> Result<FrequencyTuple, CliError> {
    Ok(tuple_from_strings(ctx, rows)?)
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureSpec {
    pub rho: ParametrizationKind,
    pub t: f64,
}

impl MeasureSpec {
    pub fn build(&self) -> Result<MeasureDescriptor, CliError> {
        Ok(MeasureDescriptor::new(make_parametrization(self.rho)?, self.t)?)
    }
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum C0Spec {
    Zero,
    Gaussian {
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default)]
        center: f64,
        #[serde(default = "one")]
        width: f64,
    },
    Lorentzian {
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default)]
        center: f64,
        #[serde(default = "one")]
        width: f64,
    },
    /// 1 on `[−half_width, half_width]` with Gaussian shoulders.
    #[serde(alias = "bump")]
    Plateau {
        #[serde(default = "one")]
        half_width: f64,
    },
}

impl C0Spec {
    fn build(self) -> Result<C0Function, CliError> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(CliError::Input(format!(
                    "c0.{name} must be positive and finite, got {v}"
                )))
            }
        };
        Ok(match self {
            C0Spec::Zero => C0Function::zero(),
            C0Spec::Gaussian {
                amplitude,
                center,
                width,
            } => {
                positive("width", width)?;
                C0Function::gaussian(amplitude, center, width)
            }
            C0Spec::Lorentzian {
                amplitude,
                center,
                width,
            } => {
                positive("width", width)?;
                C0Function::lorentzian(amplitude, center, width)
            }
            C0Spec::Plateau { half_width } => {
                positive("half_width", half_width)?;
                C0Function::plateau(half_width)
            }
        })
    }
}

/// `{c0: {kind, …}, ap: [{freq, re, im}]}`; both parts optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionSpec {
    #[serde(default)]
    pub c0: Option<C0Spec>,
    #[serde(default)]
    pub ap: Vec<ApTermRecord>,
}

impl FunctionSpec {
    pub fn build(&self, ctx: &Arc<FrequencyContext>) -> Result<QuantumFunction, CliError> {
        let c0 = self.c0.unwrap_or(C0Spec::Zero).build()?;
        let ap = ApPolynomial::from_records(ctx, &self.ap)?;
        Ok(QuantumFunction::new(c0, ap))
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ComplexOut {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for ComplexOut {
    fn from(z: Complex64) -> Self {
        Self { re: z.re, im: z.im }
    }
}
