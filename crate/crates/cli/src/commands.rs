use std::fmt::Write as _;

use rbar_core::almeasure::{verify_al_pushforward_streams, DecompositionSpec, DEFAULT_STREAMS};
use rbar_core::frequency::{is_z_independent, join, meet, BasisSymbol, Frequency, IntegerRelationMatrix};
use rbar_core::harmonic::{ApTermRecord, RBarPoint, RBarPointRecord};
use rbar_core::measure::{
    inner_product, integrate, isometry_transport, jons_conditions_check, make_parametrization, norm_sq,
    probe_mass_floor, CandidateMeasure,
};
use rbar_core::projlim::{
    project, transition, verify_pushforward_exact, verify_pushforward_matrix, LevelPoint, LevelSpace,
};
use rbar_core::quadrature::{QuadResult, QuadratureConfig};
use rbar_core::su2::{
    circle_lemma_report, holonomy_circular, holonomy_circular_rbar, holonomy_linear, CircularCurve, GridSpec, Su2,
};
use rbar_core::Status;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::output::csv_float;
use crate::payload::{context, tuple, ComplexOut, FunctionSpec, MeasureSpec};
use crate::{CliError, Command};

pub struct CommandOutput {
    pub result: Value,
    pub diagnostics: Value,
    /// `None` for commands that compute rather than verify.
    pub verdict: Option<Status>,
    pub csv: Option<String>,
}

impl CommandOutput {
    fn computed(result: impl Serialize) -> Self {
        Self {
            result: to_value(result),
            diagnostics: json!({}),
            verdict: None,
            csv: None,
        }
    }

    fn verified(result: impl Serialize, status: Status) -> Self {
        Self {
            verdict: Some(status),
            ..Self::computed(result)
        }
    }

    fn with_diagnostics(mut self, d: Value) -> Self {
        self.diagnostics = d;
        self
    }
}

fn to_value(v: impl Serialize) -> Value {
    serde_json::to_value(v).expect("report types serialize to JSON")
}

pub fn parse<T: DeserializeOwned>(payload: Value) -> Result<T, CliError> {
    serde_path_to_error::deserialize(payload).map_err(|e| {
        let path = e.path().to_string();
        CliError::Input(format!("payload.{path}: {}", e.into_inner()))
    })
}

pub fn dispatch(command: Command, payload: Value, seed: u64) -> Result<CommandOutput, CliError> {
    match command {
        Command::FreqIndep => freq_indep(parse(payload)?),
        Command::FreqJoin => freq_join(parse(payload)?),
        Command::Project => project_cmd(parse(payload)?),
        Command::Transition => transition_cmd(parse(payload)?),
        Command::VerifyConsistency => verify_consistency(parse(payload)?),
        Command::Integrate => integrate_cmd(parse(payload)?),
        Command::InnerProduct => inner_product_cmd(parse(payload)?),
        Command::IsometryCheck => isometry_check(parse(payload)?),
        Command::JonsCheck => jons_check(parse(payload)?),
        Command::Holonomy => holonomy(parse(payload)?),
        Command::CircleLemma => circle_lemma(parse(payload)?),
        Command::AlVerify => al_verify(parse(payload)?, seed),
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FreqIndep {
    basis: Option<Vec<BasisSymbol>>,
    freqs: Vec<Vec<String>>,
}

fn freq_indep(p: FreqIndep) -> Result<CommandOutput, CliError> {
    let ctx = context(p.basis.as_ref())?;
    let freqs = p
        .freqs
        .iter()
        .map(|f| Frequency::parse(&ctx, f))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CommandOutput::computed(
        json!({ "independent": is_z_independent(&freqs)? }),
    ))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FreqJoin {
    basis: Option<Vec<BasisSymbol>>,
    l: Vec<Vec<String>>,
    lp: Vec<Vec<String>>,
}

fn freq_join(p: FreqJoin) -> Result<CommandOutput, CliError> {
    let ctx = context(p.basis.as_ref())?;
    let (l, lp) = (tuple(&ctx, &p.l)?, tuple(&ctx, &p.lp)?);
    Ok(CommandOutput::computed(json!({
        "join": join(&l, &lp)?.coord_strings(),
        "meet": meet(&l, &lp)?.map(|m| m.coord_strings()),
        "l_le_lp": l.le(&lp)?,
        "lp_le_l": lp.le(&l)?,
    })))
}

fn tan_map_id() -> String {
    "tan_map".into()
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ProjectPayload {
    basis: Option<Vec<BasisSymbol>>,
    level: Vec<Vec<String>>,
    point: RBarPointRecord,
    #[serde(default = "tan_map_id")]
    parametrization_id: String,
}

fn project_cmd(p: ProjectPayload) -> Result<CommandOutput, CliError> {
    let ctx = context(p.basis.as_ref())?;
    let space = LevelSpace::new(tuple(&ctx, &p.level)?, p.parametrization_id);
    let point = RBarPoint::from_record(&ctx, &p.point)?;
    Ok(CommandOutput::computed(
        json!({ "level_point": project(&point, &space)? }),
    ))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TransitionPayload {
    basis: Option<Vec<BasisSymbol>>,
    from: Vec<Vec<String>>,
    to: Vec<Vec<String>>,
    point: LevelPoint,
    #[serde(default = "tan_map_id")]
    parametrization_id: String,
}

fn transition_cmd(p: TransitionPayload) -> Result<CommandOutput, CliError> {
    let ctx = context(p.basis.as_ref())?;
    let from = LevelSpace::new(tuple(&ctx, &p.from)?, p.parametrization_id.as_str());
    let to = LevelSpace::new(tuple(&ctx, &p.to)?, p.parametrization_id.as_str());
    Ok(CommandOutput::computed(
        json!({ "level_point": transition(&from, &to, &p.point)? }),
    ))
}

fn five() -> u32 {
    5
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Consistency {
    basis: Option<Vec<BasisSymbol>>,
    l: Option<Vec<Vec<String>>>,
    lp: Option<Vec<Vec<String>>>,
    /// Alternatively an explicit relation matrix, rows = fine index.
    relation: Option<Vec<Vec<i64>>>,
    #[serde(default = "five")]
    max_exponent: u32,
}

fn verify_consistency(p: Consistency) -> Result<CommandOutput, CliError> {
    let report = match (&p.l, &p.lp, &p.relation) {
        (Some(l), Some(lp), None) => {
            let ctx = context(p.basis.as_ref())?;
            verify_pushforward_exact(&tuple(&ctx, l)?, &tuple(&ctx, lp)?, p.max_exponent)?
        }
        (None, None, Some(rows)) => {
            verify_pushforward_matrix(&IntegerRelationMatrix::from_i64_rows(rows)?, p.max_exponent)?
        }
        _ => {
            return Err(CliError::Input(
                "payload: give either both `l` and `lp`, or `relation`".into(),
            ))
        }
    };
    let status = report.status;
    Ok(CommandOutput::verified(report, status))
}

fn quad_json(r: &QuadResult) -> Value {
    json!({ "value": ComplexOut::from(r.value), "est_error": r.est_error })
}

fn checked_quad(q: Option<QuadratureConfig>) -> Result<QuadratureConfig, CliError> {
    let q = q.unwrap_or_default();
    q.validate()?;
    Ok(q)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct IntegratePayload {
    basis: Option<Vec<BasisSymbol>>,
    measure: MeasureSpec,
    function: FunctionSpec,
    quad: Option<QuadratureConfig>,
}

fn integrate_cmd(p: IntegratePayload) -> Result<CommandOutput, CliError> {
    let ctx = context(p.basis.as_ref())?;
    let cfg = checked_quad(p.quad)?;
    let r = integrate(&p.function.build(&ctx)?, &p.measure.build()?, &cfg)?;
    Ok(CommandOutput::computed(quad_json(&r)).with_diagnostics(json!({ "subdivisions": r.subdivisions })))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct InnerProductPayload {
    basis: Option<Vec<BasisSymbol>>,
    measure: MeasureSpec,
    f: FunctionSpec,
    g: FunctionSpec,
    quad: Option<QuadratureConfig>,
}

fn inner_product_cmd(p: InnerProductPayload) -> Result<CommandOutput, CliError> {
    let ctx = context(p.basis.as_ref())?;
    let cfg = checked_quad(p.quad)?;
    let r = inner_product(&p.f.build(&ctx)?, &p.g.build(&ctx)?, &p.measure.build()?, &cfg)?;
    Ok(CommandOutput::computed(quad_json(&r)).with_diagnostics(json!({ "subdivisions": r.subdivisions })))
}

fn isometry_tol() -> f64 {
    1e-7
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct IsometryPayload {
    basis: Option<Vec<BasisSymbol>>,
    from: MeasureSpec,
    to: MeasureSpec,
    functions: Vec<FunctionSpec>,
    #[serde(default = "isometry_tol")]
    tol: f64,
    quad: Option<QuadratureConfig>,
}

fn isometry_check(p: IsometryPayload) -> Result<CommandOutput, CliError> {
    let ctx = context(p.basis.as_ref())?;
    let cfg = checked_quad(p.quad)?;
    let (from, to) = (p.from.build()?, p.to.build()?);
    let mut rows = Vec::with_capacity(p.functions.len());
    let mut worst = 0.0f64;
    for spec in &p.functions {
        let psi = spec.build(&ctx)?;
        let before = norm_sq(&psi, &from, &cfg)?.value.re.max(0.0).sqrt();
        let after = isometry_transport(&psi, &from, &to)?
            .norm_sq(&cfg)?
            .value
            .re
            .max(0.0)
            .sqrt();
        let deviation = (before - after).abs();
        worst = worst.max(deviation);
        rows.push(json!({ "norm_source": before, "norm_target": after, "deviation": deviation }));
    }
    let status = Status::from_bool(worst <= p.tol);
    Ok(CommandOutput::verified(
        json!({ "status": status, "max_deviation": worst, "tol": p.tol, "functions": rows }),
        status,
    ))
}

#[derive(Deserialize)]
#[serde(rename_all = "snake_case")]
enum Candidate {
    BohrOnly,
    Pushforward(MeasureSpec),
}

fn jons_tol() -> f64 {
    1e-10
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JonsPayload {
    basis: Option<Vec<BasisSymbol>>,
    candidate: Candidate,
    family: Option<Vec<FunctionSpec>>,
    #[serde(default = "jons_tol")]
    tol: f64,
    quad: Option<QuadratureConfig>,
}

/// Constant 1, the positive probe (plateau of half-width 1), and mixed members
/// built on the first basis frequency.
fn default_family() -> Vec<FunctionSpec> {
    let term = |k: &str, re: f64| ApTermRecord {
        freq: vec![k.to_string()],
        re,
        im: 0.0,
    };
    let spec = |c0: Value, ap: Vec<ApTermRecord>| FunctionSpec {
        c0: serde_json::from_value(c0).expect("static c0 spec"),
        ap,
    };
    vec![
        spec(Value::Null, vec![term("0", 1.0)]),
        spec(json!({ "kind": "plateau", "half_width": 1.0 }), vec![]),
        spec(json!({ "kind": "gaussian" }), vec![term("1", 1.0)]),
        spec(
            json!({ "kind": "lorentzian", "center": 0.5 }),
            vec![term("1/2", 0.5), term("-2", 1.0)],
        ),
    ]
}

fn jons_check(p: JonsPayload) -> Result<CommandOutput, CliError> {
    let ctx = context(p.basis.as_ref())?;
    let cfg = checked_quad(p.quad)?;
    let family_specs = match &p.family {
        Some(f) => f.clone(),
        None => {
            if ctx.dim() != 1 {
                return Err(CliError::Input(
                    "payload.family is required for multi-symbol bases".into(),
                ));
            }
            default_family()
        }
    };
    let family = family_specs
        .iter()
        .map(|f| f.build(&ctx))
        .collect::<Result<Vec<_>, _>>()?;
    let (candidate, floor) = match &p.candidate {
        Candidate::BohrOnly => (CandidateMeasure::bohr_only(), None),
        Candidate::Pushforward(m) => {
            let mu = m.build()?;
            // The default family's probe is 1 on [−1, 1], so its integral is at least this.
            let floor = match p.family {
                None => Some(mu.t * probe_mass_floor(&make_parametrization(m.rho)?, 1.0)),
                Some(_) => None,
            };
            (CandidateMeasure::from_descriptor(&mu), floor)
        }
    };
    let report = jons_conditions_check(&candidate, &family, p.tol, &cfg)?;
    let status = report.condition_i.status.and(report.condition_ii.status);
    let mut result = to_value(&report);
    result["status"] = to_value(status);
    result["probe_floor"] = to_value(floor);
    Ok(CommandOutput::verified(result, status))
}

#[derive(Deserialize, Clone, Copy)]
#[serde(deny_unknown_fields)]
struct Sweep {
    from: f64,
    to: f64,
    points: usize,
}

impl Sweep {
    fn values(&self) -> Result<Vec<f64>, CliError> {
        if self.points < 2 || !(self.from.is_finite() && self.to.is_finite()) {
            return Err(CliError::Input(
                "payload.sweep needs finite bounds and at least 2 points".into(),
            ));
        }
        let h = (self.to - self.from) / (self.points - 1) as f64;
        Ok((0..self.points).map(|i| self.from + i as f64 * h).collect())
    }
}

fn e3() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum HolonomyPayload {
    Linear {
        l: f64,
        v: [f64; 3],
        c: Option<f64>,
        sweep: Option<Sweep>,
    },
    Circular {
        tau: f64,
        r: f64,
        #[serde(default = "e3")]
        n: [f64; 3],
        c: Option<f64>,
        sweep: Option<Sweep>,
        #[serde(default)]
        points: Vec<RBarPointRecord>,
        /// Context for Bohr points; defaults to one symbol of value `r·τ`.
        basis: Option<Vec<BasisSymbol>>,
        /// Coordinates of `r·τ` in `basis`; defaults to `["1"]`.
        omega: Option<Vec<String>>,
    },
}

#[derive(Serialize)]
struct HolonomySample {
    point: RBarPointRecord,
    quaternion: [f64; 4],
    matrix: [[ComplexOut; 2]; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    coset_distance: Option<f64>,
}

fn sample(point: RBarPointRecord, h: Su2, coset_distance: Option<f64>) -> HolonomySample {
    HolonomySample {
        point,
        quaternion: h.quaternion(),
        matrix: h.matrix().0.map(|row| row.map(ComplexOut::from)),
        coset_distance,
    }
}

fn real_grid(c: Option<f64>, sweep: Option<Sweep>) -> Result<Vec<f64>, CliError> {
    let mut cs: Vec<f64> = c.into_iter().collect();
    if let Some(s) = sweep {
        cs.extend(s.values()?);
    }
    Ok(cs)
}

const CSV_HEADER: &str = "c,w,x,y,z,m11_re,m11_im,m12_re,m12_im,m21_re,m21_im,m22_re,m22_im\n";

fn csv_rows(rows: impl IntoIterator<Item = (f64, Su2)>) -> String {
    let mut out = String::from(CSV_HEADER);
    for (c, h) in rows {
        let mut fields = vec![csv_float(c)];
        fields.extend(h.quaternion().iter().map(|&v| csv_float(v)));
        for z in h.matrix().0.iter().flatten() {
            fields.push(csv_float(z.re));
            fields.push(csv_float(z.im));
        }
        let _ = writeln!(out, "{}", fields.join(","));
    }
    out
}

fn holonomy(p: HolonomyPayload) -> Result<CommandOutput, CliError> {
    match p {
        HolonomyPayload::Linear { l, v, c, sweep } => {
            let cs = real_grid(c, sweep)?;
            if cs.is_empty() {
                return Err(CliError::Input("payload: give `c` or `sweep`".into()));
            }
            let hs = cs
                .iter()
                .map(|&c| Ok((c, holonomy_linear(c, l, &v)?)))
                .collect::<Result<Vec<_>, CliError>>()?;
            let samples: Vec<_> = hs
                .iter()
                .map(|&(c, h)| sample(RBarPointRecord::Real(c), h, None))
                .collect();
            let mut out = CommandOutput::computed(json!({ "kind": "linear", "samples": samples }));
            out.csv = Some(csv_rows(hs));
            Ok(out)
        }
        HolonomyPayload::Circular {
            tau,
            r,
            n,
            c,
            sweep,
            points,
            basis,
            omega,
        } => {
            let curve = CircularCurve::new(tau, r, n)?;
            let cs = real_grid(c, sweep)?;
            if cs.is_empty() && points.is_empty() {
                return Err(CliError::Input("payload: give `c`, `sweep` or `points`".into()));
            }
            let hs: Vec<(f64, Su2)> = cs.iter().map(|&c| (c, holonomy_circular(c, &curve))).collect();
            let mut samples: Vec<_> = hs
                .iter()
                .map(|&(c, h)| sample(RBarPointRecord::Real(c), h, Some(curve.coset_distance(&h))))
                .collect();
            if !points.is_empty() {
                let (basis, omega) = match (basis, omega) {
                    (None, None) => (
                        vec![BasisSymbol {
                            id: "rtau".into(),
                            value: r * tau,
                        }],
                        vec!["1".to_string()],
                    ),
                    (Some(b), Some(o)) => (b, o),
                    _ => return Err(CliError::Input("payload: `basis` and `omega` go together".into())),
                };
                let ctx = context(Some(&basis))?;
                let omega = Frequency::parse(&ctx, &omega)?;
                for rec in points {
                    let pt = RBarPoint::from_record(&ctx, &rec)?;
                    let h = holonomy_circular_rbar(&pt, &curve, &omega)?;
                    samples.push(sample(rec, h, Some(curve.coset_distance(&h))));
                }
            }
            let mut out = CommandOutput::computed(json!({
                "kind": "circular",
                "d": curve.d().quaternion(),
                "sigma": curve.sigma.quaternion(),
                "samples": samples,
            }));
            out.csv = Some(csv_rows(hs));
            Ok(out)
        }
    }
}

fn default_epsilon() -> f64 {
    0.1
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CircleLemmaPayload {
    tau: f64,
    r: f64,
    #[serde(default = "default_epsilon")]
    epsilon: f64,
    #[serde(default)]
    grid: GridSpec,
}

fn circle_lemma(p: CircleLemmaPayload) -> Result<CommandOutput, CliError> {
    let report = circle_lemma_report(p.tau, p.r, &p.grid, p.epsilon)?;
    let status = report.status;
    let curve = CircularCurve::reduced(p.tau, p.r)?;
    let step = 2.0 * p.grid.c_max / (p.grid.points - 1) as f64;
    let csv = csv_rows((0..p.grid.points).map(|i| {
        let c = -p.grid.c_max + i as f64 * step;
        (c, holonomy_circular(c, &curve))
    }));
    let mut out = CommandOutput::verified(report, status).with_diagnostics(json!({
        "curve": "reduced: n = e3, sigma = 1",
        "merging_target": "d·T_e2",
    }));
    out.csv = Some(csv);
    Ok(out)
}

fn default_n() -> usize {
    100_000
}

fn default_streams() -> u64 {
    DEFAULT_STREAMS
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AlPayload {
    spec: DecompositionSpec,
    #[serde(default = "default_n")]
    n: usize,
    #[serde(default)]
    allow_overlap: bool,
    #[serde(default = "default_streams")]
    streams: u64,
}

fn al_verify(p: AlPayload, seed: u64) -> Result<CommandOutput, CliError> {
    let spec = DecompositionSpec::unchecked(p.spec.k_prime, p.spec.words.clone())?;
    if spec.k != p.spec.k {
        return Err(CliError::Input(format!(
            "payload.spec.k: {} but {} words given",
            p.spec.k, spec.k
        )));
    }
    if !p.allow_overlap {
        spec.validate()?;
    }
    let report = verify_al_pushforward_streams(&spec, p.n, seed, p.streams)?;
    let status = report.status;
    Ok(CommandOutput::verified(report, status).with_diagnostics(json!({ "threshold": 4.0 / (p.n as f64).sqrt() })))
}
