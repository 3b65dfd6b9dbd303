//! Job payloads and their execution.
//!
//! Every subcommand's flags live in one struct that derives both
//! `clap::Args` and the serde traits, and [`JobSpec`] is the same set of
//! payloads under a `"command"` tag. A job file is therefore exactly the
//! flag set in JSON form and round-trips losslessly.

use std::fmt;
use std::path::{Path, PathBuf};

use clap::Args;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use toda_cft::blocks::SemiDegDirection;
use toda_cft::constants::{
    scalar_c, shift_residual_scalar, three_point, SemiDegData, ShiftFamily, ThreePointQuery,
    ThreePointResult,
};
use toda_cft::crossing::{crossing_residual, CrossingReport};
use toda_cft::exact::{CoeffB, Rat};
use toda_cft::fields::{
    fuse_nonscalar_degenerate, make_field_sln, monodromy_charges, verify_constraints, FieldLabel,
    MonodromyCharge,
};
use toda_cft::kinematics::{
    classify_charge, fuse_deg_semideg, fuse_fully_degenerate, weight_data, DegenerateLabel,
    DegeneracyTag, TodaParams,
};
use toda_cft::lattice::{Bindings, Charge};
use toda_cft::special::{SpecialValue, UpsilonEvaluator};
use toda_cft::TodaError;

use crate::args::{self, FieldInput};
use crate::output;

/// Failure classes with their process exit codes: parse errors exit 2,
/// domain errors 3, tolerance breaches 1.
#[derive(Debug)]
pub enum CliError {
    Parse(String),
    Domain(String),
    Tolerance(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Domain(_) => 3,
            CliError::Tolerance(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Parse(m) => write!(f, "parse: {m}"),
            CliError::Domain(m) => write!(f, "domain: {m}"),
            CliError::Tolerance(m) => write!(f, "tolerance: {m}"),
        }
    }
}

impl From<TodaError> for CliError {
    fn from(e: TodaError) -> Self {
        CliError::Domain(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Domain(format!("io: {e}"))
    }
}

fn emit_json<T: Serialize>(out: Option<&Path>, value: &T) -> Result<(), CliError> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| CliError::Domain(e.to_string()))?;
    text.push('\n');
    output::emit(out, text.as_bytes()).map_err(CliError::from)
}

/// One job: a tagged union over the eight compute commands.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum JobSpec {
    Upsilon(UpsilonArgs),
    Weights(WeightsArgs),
    StructureConstant(StructureConstantArgs),
    Classify(ClassifyArgs),
    Fuse(FuseArgs),
    VerifyShift(VerifyShiftArgs),
    VerifyCrossing(VerifyCrossingArgs),
    Sweep(SweepArgs),
}

impl JobSpec {
    pub fn run(&self) -> Result<(), CliError> {
        match self {
            JobSpec::Upsilon(a) => run_upsilon(a),
            JobSpec::Weights(a) => run_weights(a),
            JobSpec::StructureConstant(a) => run_structure_constant(a),
            JobSpec::Classify(a) => run_classify(a),
            JobSpec::Fuse(a) => run_fuse(a),
            JobSpec::VerifyShift(a) => run_verify_shift(a),
            JobSpec::VerifyCrossing(a) => run_verify_crossing(a),
            JobSpec::Sweep(a) => run_sweep(a),
        }
    }
}

/// Execute a JSON job file holding one [`JobSpec`].
pub fn run_job_file(path: &Path) -> Result<(), CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Parse(format!("cannot read job file {}: {e}", path.display())))?;
    let job: JobSpec =
        serde_json::from_str(&text).map_err(|e| CliError::Parse(format!("bad job file: {e}")))?;
    job.run()
}

fn default_direction() -> SemiDegDirection {
    SemiDegDirection::OmegaLast
}

fn default_shift_cases() -> usize {
    4
}

fn default_shift_tol() -> f64 {
    1e-7
}

fn default_crossing_cases() -> usize {
    2
}

fn default_crossing_points() -> usize {
    3
}

fn default_offdiag_tol() -> f64 {
    1e-8
}

fn default_gluing_tol() -> f64 {
    1e-6
}

fn default_sweep_points() -> usize {
    11
}

// ---------------------------------------------------------------- upsilon

/// Evaluate the Upsilon function at a real or exact argument.
#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UpsilonArgs {
    /// Coupling b (positive real)
    #[arg(long, allow_hyphen_values = true)]
    pub b: f64,
    /// Real evaluation point
    #[arg(long, conflicts_with = "coeff", allow_hyphen_values = true)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    /// Exact evaluation point "u,v,w" meaning u + v b + w/b
    #[arg(long, value_parser = args::parse_coeffb, allow_hyphen_values = true)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coeff: Option<CoeffB>,
    /// Quadrature refinement doublings
    #[arg(long, default_value_t = 0)]
    #[serde(default)]
    pub refine: u32,
    /// Output file (stdout when omitted)
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct UpsilonReport {
    b: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    x: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    coeff: Option<CoeffB>,
    /// Exact log-magnitude form, present for exact arguments.
    #[serde(skip_serializing_if = "Option::is_none")]
    value: Option<SpecialValue>,
    /// Plain numeric value; absent at a pole.
    #[serde(skip_serializing_if = "Option::is_none")]
    value_f64: Option<f64>,
}

pub fn run_upsilon(a: &UpsilonArgs) -> Result<(), CliError> {
    let ev = UpsilonEvaluator::with_refinement(a.b, a.refine)?;
    let report = match (a.x, a.coeff) {
        (Some(_), Some(_)) => {
            return Err(CliError::Parse("give exactly one of x and coeff".into()))
        }
        (Some(x), None) => {
            let v = ev.upsilon(x)?;
            UpsilonReport { b: a.b, x: Some(x), coeff: None, value: None, value_f64: Some(v) }
        }
        (None, Some(c)) => {
            let v = ev.upsilon_coeffb(&c)?;
            UpsilonReport {
                b: a.b,
                x: None,
                coeff: Some(c),
                value_f64: v.to_f64().ok(),
                value: Some(v),
            }
        }
        (None, None) => return Err(CliError::Parse("give one of x or coeff".into())),
    };
    emit_json(a.out.as_deref(), &report)
}

// ---------------------------------------------------------------- weights

/// Conformal weight, W3 charge, and degeneracy class of a momentum.
#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightsArgs {
    /// Rank parameter n of sl(n)
    #[arg(long)]
    pub n: usize,
    /// Coupling b (positive real)
    #[arg(long, allow_hyphen_values = true)]
    pub b: f64,
    /// Momentum: JSON charge or comma-separated rational coordinates
    #[arg(long, value_parser = args::parse_charge, allow_hyphen_values = true)]
    pub alpha: Charge,
    /// Continuous-parameter binding "name=value" (repeatable)
    #[arg(long = "bind", value_parser = args::parse_binding)]
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bind: Vec<(String, f64)>,
    /// Output file (stdout when omitted)
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct WeightsReport {
    n: usize,
    b: f64,
    central_charge: f64,
    /// Set when b^2 is close to a small rational, where lattice
    /// classifications degrade.
    #[serde(skip_serializing_if = "Option::is_none")]
    rationality_warning: Option<(i64, i64)>,
    alpha: Charge,
    degeneracy: DegeneracyTag,
    delta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    w3: Option<f64>,
}

pub fn run_weights(a: &WeightsArgs) -> Result<(), CliError> {
    let params = TodaParams::new(a.n, a.b)?;
    let mut bindings = Bindings::empty();
    for (name, value) in &a.bind {
        bindings = bindings.with(name, *value);
    }
    let data = weight_data(&a.alpha, &params, &bindings)?;
    let degeneracy = classify_charge(&a.alpha)?;
    let report = WeightsReport {
        n: a.n,
        b: a.b,
        central_charge: params.central_charge(),
        rationality_warning: params.rationality_warning(),
        alpha: a.alpha.clone(),
        degeneracy,
        delta: data.delta,
        w3: data.w3,
    };
    emit_json(a.out.as_deref(), &report)
}

// ---------------------------------------------------- structure-constant

/// Three-point structure constant with one weight-line field.
#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructureConstantArgs {
    /// Rank parameter n of sl(n)
    #[arg(long)]
    pub n: usize,
    /// Coupling b (positive real)
    #[arg(long, allow_hyphen_values = true)]
    pub b: f64,
    /// First field: JSON field label, JSON charge, or rational coordinates
    #[arg(long, value_parser = args::parse_field_input, allow_hyphen_values = true)]
    pub field1: FieldInput,
    /// Second field: JSON field label, JSON charge, or rational coordinates
    #[arg(long, value_parser = args::parse_field_input, allow_hyphen_values = true)]
    pub field2: FieldInput,
    /// Weight-line coupling "u,v,w" meaning u + v b + w/b
    #[arg(long, value_parser = args::parse_coeffb, default_value = "0,0,0", allow_hyphen_values = true)]
    #[serde(default = "CoeffB::zero")]
    pub kappa: CoeffB,
    /// Antiholomorphic weight-line coupling (defaults to kappa)
    #[arg(long, value_parser = args::parse_coeffb, allow_hyphen_values = true)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappabar: Option<CoeffB>,
    /// Weight-line direction: omega1 or omega-last
    #[arg(long, value_parser = args::parse_direction, default_value = "omega-last")]
    #[serde(default = "default_direction")]
    pub direction: SemiDegDirection,
    /// Quadrature refinement doublings
    #[arg(long, default_value_t = 0)]
    #[serde(default)]
    pub refine: u32,
    /// Output file (stdout when omitted)
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct StructureConstantReport {
    n: usize,
    b: f64,
    field1: FieldLabel,
    field2: FieldLabel,
    semideg: SemiDegData,
    result: ThreePointResult,
    /// Numeric value when the exact square admits a root.
    #[serde(skip_serializing_if = "Option::is_none")]
    value_f64: Option<f64>,
    /// log |C|, from the exact square.
    log_abs: f64,
    /// Sign of the squared constant.
    sign: i8,
    /// Vanishing order of C in Upsilon-zero units (half-integer).
    order: f64,
}

pub fn run_structure_constant(a: &StructureConstantArgs) -> Result<(), CliError> {
    let params = TodaParams::new(a.n, a.b)?;
    let ev = UpsilonEvaluator::with_refinement(a.b, a.refine)?;
    let field1 = a.field1.clone().into_label(a.n).map_err(CliError::Parse)?;
    let field2 = a.field2.clone().into_label(a.n).map_err(CliError::Parse)?;
    let semideg = SemiDegData {
        direction: a.direction,
        kappa: a.kappa,
        kappabar: a.kappabar.unwrap_or(a.kappa),
    };
    let query = ThreePointQuery { field1, field2, semideg };
    let result = three_point(&query, &params, &ev)?;
    let report = StructureConstantReport {
        n: a.n,
        b: a.b,
        field1: query.field1,
        field2: query.field2,
        semideg: query.semideg,
        value_f64: result.value.as_ref().and_then(|v| v.to_f64().ok()),
        log_abs: 0.5 * result.squared.log_abs,
        sign: result.squared.sign,
        order: f64::from(result.squared.order) / 2.0,
        result,
    };
    emit_json(a.out.as_deref(), &report)
}

// --------------------------------------------------------------- classify

/// Degeneracy class of a momentum, or construction of a spinning field
/// from its twist and constraint vectors.
#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifyArgs {
    /// Rank parameter n of sl(n)
    #[arg(long)]
    pub n: usize,
    /// Momentum to classify (JSON charge or rational coordinates)
    #[arg(long, value_parser = args::parse_charge, allow_hyphen_values = true,
          conflicts_with_all = ["sigma", "u", "v"])]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub charge: Option<Charge>,
    /// Twist permutation in cycle notation, e.g. "(123)"
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<String>,
    /// Integer h-basis coefficients of the 1/b constraint vector (comma list,
    /// zero by default)
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<Vec<i64>>,
    /// Integer h-basis coefficients of the b constraint vector (comma list,
    /// zero by default)
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v: Option<Vec<i64>>,
    /// Output file (stdout when omitted)
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
#[serde(untagged)]
enum ClassifyReport {
    Charge {
        n: usize,
        alpha: Charge,
        degeneracy: DegeneracyTag,
    },
    Field {
        n: usize,
        sigma: String,
        cycle_type: Vec<usize>,
        u: Vec<i64>,
        v: Vec<i64>,
        field: FieldLabel,
        monodromy: MonodromyCharge,
        eta: String,
        etahat: String,
        constraints_ok: bool,
    },
}

pub fn run_classify(a: &ClassifyArgs) -> Result<(), CliError> {
    let report = match (&a.charge, &a.sigma) {
        (Some(c), None) => {
            if c.rank() != a.n {
                return Err(CliError::Domain(format!(
                    "charge has rank {}, expected {}",
                    c.rank(),
                    a.n
                )));
            }
            ClassifyReport::Charge { n: a.n, alpha: c.clone(), degeneracy: classify_charge(c)? }
        }
        (None, Some(s)) => {
            let sigma = args::parse_cycles(a.n, s).map_err(CliError::Parse)?;
            let u = a.u.clone().unwrap_or_else(|| vec![0; a.n]);
            let v = a.v.clone().unwrap_or_else(|| vec![0; a.n]);
            let field = make_field_sln(&sigma, &u, &v)?;
            let monodromy = monodromy_charges(&field)?;
            ClassifyReport::Field {
                n: a.n,
                sigma: s.clone(),
                cycle_type: sigma.cycle_type(),
                u,
                v,
                eta: monodromy.eta.to_string(),
                etahat: monodromy.etahat.to_string(),
                constraints_ok: verify_constraints(&field),
                field,
                monodromy,
            }
        }
        (Some(_), Some(_)) => {
            return Err(CliError::Parse("give either charge or sigma, not both".into()))
        }
        (None, None) => {
            return Err(CliError::Parse("give a charge to classify or a sigma to construct".into()))
        }
    };
    emit_json(a.out.as_deref(), &report)
}

// ------------------------------------------------------------------- fuse

/// Fusion channels of a fully degenerate field with a partner.
#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FuseArgs {
    /// Rank parameter n of sl(n)
    #[arg(long)]
    pub n: usize,
    /// Coupling b (positive real)
    #[arg(long, allow_hyphen_values = true)]
    pub b: f64,
    /// Degenerate label: b-omega1, b-omega-last, minus-omega1-over-b,
    /// or minus-omega-last-over-b
    #[arg(long, value_parser = args::parse_label)]
    pub degenerate: DegenerateLabel,
    /// Partner field (JSON label, JSON charge, or rational coordinates)
    #[arg(long, value_parser = args::parse_field_input, allow_hyphen_values = true,
          conflicts_with_all = ["semideg_j", "kappa"])]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub with: Option<FieldInput>,
    /// Weight-line partner index j (1 or n-1)
    #[arg(long, requires = "kappa")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub semideg_j: Option<usize>,
    /// Weight-line coupling "u,v,w" for the semi-degenerate partner
    #[arg(long, value_parser = args::parse_coeffb, requires = "semideg_j", allow_hyphen_values = true)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<CoeffB>,
    /// Output file (stdout when omitted)
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
#[serde(untagged)]
enum FuseChannels {
    Scalars(Vec<Charge>),
    Fields(Vec<FieldLabel>),
}

#[derive(Serialize)]
struct FuseReport {
    n: usize,
    degenerate: DegenerateLabel,
    count: usize,
    channels: FuseChannels,
}

pub fn run_fuse(a: &FuseArgs) -> Result<(), CliError> {
    let params = TodaParams::new(a.n, a.b)?;
    let channels = match (&a.with, a.semideg_j, a.kappa) {
        (Some(input), None, None) => {
            let partner = input.clone().into_label(a.n).map_err(CliError::Parse)?;
            if partner.is_scalar() {
                FuseChannels::Scalars(fuse_fully_degenerate(a.degenerate, &partner.alpha, &params)?)
            } else {
                FuseChannels::Fields(fuse_nonscalar_degenerate(&partner, a.degenerate)?)
            }
        }
        (None, Some(j), Some(kappa)) => {
            if a.degenerate != DegenerateLabel::BOmega1 {
                return Err(CliError::Domain(
                    "the weight-line fusion rule is implemented for b-omega1 only".into(),
                ));
            }
            FuseChannels::Scalars(fuse_deg_semideg(j, kappa, &params)?.to_vec())
        }
        _ => {
            return Err(CliError::Parse(
                "give either a partner field (with) or a weight-line partner \
                 (semideg-j plus kappa)"
                    .into(),
            ))
        }
    };
    let count = match &channels {
        FuseChannels::Scalars(v) => v.len(),
        FuseChannels::Fields(v) => v.len(),
    };
    let report = FuseReport { n: a.n, degenerate: a.degenerate, count, channels };
    emit_json(a.out.as_deref(), &report)
}

// ----------------------------------------------------------- verify-shift

/// Check the degenerate-shift recursions on seeded random configurations.
#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyShiftArgs {
    /// Rank parameter n of sl(n)
    #[arg(long)]
    pub n: usize,
    /// Coupling b (positive real)
    #[arg(long, allow_hyphen_values = true)]
    pub b: f64,
    /// RNG seed for the random configurations
    #[arg(long)]
    pub seed: u64,
    /// Configurations per shift family
    #[arg(long, default_value_t = 4)]
    #[serde(default = "default_shift_cases")]
    pub cases: usize,
    /// Largest allowed relative residual
    #[arg(long, default_value_t = 1e-7)]
    #[serde(default = "default_shift_tol")]
    pub tol: f64,
    /// Output file (stdout when omitted)
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct ShiftRow {
    family: &'static str,
    case: usize,
    direction: SemiDegDirection,
    residual: f64,
}

#[derive(Serialize)]
struct VerifyShiftReport {
    n: usize,
    b: f64,
    seed: u64,
    tol: f64,
    max_residual: f64,
    pass: bool,
    rows: Vec<ShiftRow>,
}

fn small_rat(rng: &mut StdRng) -> Rat {
    let p = loop {
        let p = rng.gen_range(-300..300);
        if p != 0 {
            break p;
        }
    };
    Rat::new(p, rng.gen_range(89..199))
}

/// Random momentum redrawn until it keeps the full fusion channel count,
/// so seeded verification runs never land on a degeneracy lattice by
/// accident. At rank 1 every momentum lies on the weight line, which is
/// still acceptable there.
fn random_generic_charge(rng: &mut StdRng, n: usize) -> Charge {
    loop {
        let coords: Vec<Rat> = (1..n).map(|_| small_rat(rng)).collect();
        let c = Charge::from_rational_coords(n, &coords).expect("rank matches coordinate count");
        match classify_charge(&c) {
            Ok(DegeneracyTag::Generic) => return c,
            Ok(DegeneracyTag::SemiDegenerate { .. }) if n == 2 => return c,
            _ => {}
        }
    }
}

fn random_coeffb(rng: &mut StdRng) -> CoeffB {
    CoeffB::new(small_rat(rng), small_rat(rng), small_rat(rng))
}

pub fn run_verify_shift(a: &VerifyShiftArgs) -> Result<(), CliError> {
    let params = TodaParams::new(a.n, a.b)?;
    let ev = UpsilonEvaluator::new(a.b)?;
    let mut rng = StdRng::seed_from_u64(a.seed);
    if a.cases == 0 {
        return Err(CliError::Parse("cases must be at least 1".into()));
    }
    let mut rows = Vec::new();
    let mut max_residual = 0.0f64;
    for case in 0..a.cases {
        let alpha1 = random_generic_charge(&mut rng, a.n);
        let alpha2_first = random_generic_charge(&mut rng, a.n);
        let alpha2_second = random_generic_charge(&mut rng, a.n);
        let kappa = random_coeffb(&mut rng);
        let direction =
            if case % 2 == 0 { SemiDegDirection::OmegaLast } else { SemiDegDirection::Omega1 };
        for (family, name) in
            [(ShiftFamily::TimesB, "times-b"), (ShiftFamily::OverB, "over-b")]
        {
            let residual = shift_residual_scalar(
                &alpha1,
                &alpha2_first,
                &alpha2_second,
                &kappa,
                direction,
                family,
                1,
                a.n,
                &params,
                &ev,
            )?;
            max_residual = max_residual.max(residual);
            rows.push(ShiftRow { family: name, case, direction, residual });
        }
    }
    let pass = max_residual <= a.tol;
    let report =
        VerifyShiftReport { n: a.n, b: a.b, seed: a.seed, tol: a.tol, max_residual, pass, rows };
    emit_json(a.out.as_deref(), &report)?;
    if !pass {
        return Err(CliError::Tolerance(format!(
            "max shift residual {max_residual:.3e} exceeds {:.1e}",
            a.tol
        )));
    }
    Ok(())
}

// -------------------------------------------------------- verify-crossing

/// Check crossing on seeded random scalar configurations: the connection
/// solve, the off-diagonal gluing residual, and transported blocks.
#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyCrossingArgs {
    /// Rank parameter n of sl(n)
    #[arg(long)]
    pub n: usize,
    /// Coupling b (positive real)
    #[arg(long, allow_hyphen_values = true)]
    pub b: f64,
    /// RNG seed for the random configurations
    #[arg(long)]
    pub seed: u64,
    /// Number of random configurations
    #[arg(long, default_value_t = 2)]
    #[serde(default = "default_crossing_cases")]
    pub cases: usize,
    /// Cross-channel sample points per configuration
    #[arg(long, default_value_t = 3)]
    #[serde(default = "default_crossing_points")]
    pub points: usize,
    /// Largest allowed off-diagonal gluing residual
    #[arg(long, default_value_t = 1e-8)]
    #[serde(default = "default_offdiag_tol")]
    pub offdiag_tol: f64,
    /// Largest allowed transported-block gluing residual
    #[arg(long, default_value_t = 1e-6)]
    #[serde(default = "default_gluing_tol")]
    pub gluing_tol: f64,
    /// Output file (stdout when omitted)
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct CrossingRow {
    case: usize,
    direction: SemiDegDirection,
    report: CrossingReport,
}

#[derive(Serialize)]
struct VerifyCrossingReport {
    n: usize,
    b: f64,
    seed: u64,
    offdiag_tol: f64,
    gluing_tol: f64,
    max_offdiag: f64,
    max_gluing: f64,
    pass: bool,
    rows: Vec<CrossingRow>,
}

pub fn run_verify_crossing(a: &VerifyCrossingArgs) -> Result<(), CliError> {
    let params = TodaParams::new(a.n, a.b)?;
    let mut rng = StdRng::seed_from_u64(a.seed);
    if a.cases == 0 || a.points == 0 {
        return Err(CliError::Parse("cases and points must be at least 1".into()));
    }
    let z_list: Vec<f64> =
        (0..a.points).map(|k| -0.15 - 0.65 * (k as f64 + 0.5) / a.points as f64).collect();
    let mut rows = Vec::new();
    let mut max_offdiag = 0.0f64;
    let mut max_gluing = 0.0f64;
    for case in 0..a.cases {
        let f1 = toda_cft::fields::make_scalar(random_generic_charge(&mut rng, a.n))?;
        let f2 = toda_cft::fields::make_scalar(random_generic_charge(&mut rng, a.n))?;
        let kappa = random_coeffb(&mut rng);
        let direction =
            if case % 2 == 0 { SemiDegDirection::OmegaLast } else { SemiDegDirection::Omega1 };
        let semideg = SemiDegData::scalar(direction, kappa);
        let report = crossing_residual(&f1, &f2, &semideg, &params, &z_list)?;
        max_offdiag = max_offdiag.max(report.offdiag_residual);
        max_gluing = max_gluing.max(report.gluing_residual);
        rows.push(CrossingRow { case, direction, report });
    }
    let pass = max_offdiag <= a.offdiag_tol && max_gluing <= a.gluing_tol;
    let report = VerifyCrossingReport {
        n: a.n,
        b: a.b,
        seed: a.seed,
        offdiag_tol: a.offdiag_tol,
        gluing_tol: a.gluing_tol,
        max_offdiag,
        max_gluing,
        pass,
        rows,
    };
    emit_json(a.out.as_deref(), &report)?;
    if !pass {
        return Err(CliError::Tolerance(format!(
            "crossing residuals offdiag {max_offdiag:.3e} (tol {:.1e}), \
             gluing {max_gluing:.3e} (tol {:.1e})",
            a.offdiag_tol, a.gluing_tol
        )));
    }
    Ok(())
}

// ------------------------------------------------------------------ sweep

/// Structure-constant scan along an exact coupling line, written as CSV.
#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepArgs {
    /// Rank parameter n of sl(n)
    #[arg(long)]
    pub n: usize,
    /// Coupling b (positive real)
    #[arg(long, allow_hyphen_values = true)]
    pub b: f64,
    /// First scalar momentum (JSON charge or rational coordinates)
    #[arg(long, value_parser = args::parse_charge, allow_hyphen_values = true)]
    pub alpha1: Charge,
    /// Second scalar momentum (JSON charge or rational coordinates)
    #[arg(long, value_parser = args::parse_charge, allow_hyphen_values = true)]
    pub alpha2: Charge,
    /// Start of the coupling line, "u,v,w" meaning u + v b + w/b
    #[arg(long, value_parser = args::parse_coeffb, allow_hyphen_values = true)]
    pub kappa_from: CoeffB,
    /// End of the coupling line
    #[arg(long, value_parser = args::parse_coeffb, allow_hyphen_values = true)]
    pub kappa_to: CoeffB,
    /// Number of evenly spaced samples (endpoints included)
    #[arg(long, default_value_t = 11)]
    #[serde(default = "default_sweep_points")]
    pub points: usize,
    /// Weight-line direction: omega1 or omega-last
    #[arg(long, value_parser = args::parse_direction, default_value = "omega-last")]
    #[serde(default = "default_direction")]
    pub direction: SemiDegDirection,
    /// Quadrature refinement doublings
    #[arg(long, default_value_t = 0)]
    #[serde(default)]
    pub refine: u32,
    /// Output file (stdout when omitted)
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy)]
struct SweepPoint {
    log_abs: f64,
    sign: i8,
    order: i32,
}

/// Exact interpolation: `points` evenly spaced couplings from `from` to
/// `to`, endpoints included, with rational line parameters.
fn kappa_line(from: CoeffB, to: CoeffB, points: usize) -> Vec<(Rat, CoeffB)> {
    let diff = to - from;
    let denom = (points - 1).max(1) as i64;
    (0..points)
        .map(|i| {
            let t = Rat::new(i as i64, denom);
            (t, from + diff * t)
        })
        .collect()
}

/// Worker count: available parallelism, capped by the
/// TODA_BOOTSTRAP_THREADS variable and by the number of rows.
fn thread_count(rows: usize) -> usize {
    let hw = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let cap = std::env::var("TODA_BOOTSTRAP_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&t| t >= 1)
        .unwrap_or(hw);
    hw.min(cap).max(1).min(rows.max(1))
}

fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

pub fn run_sweep(a: &SweepArgs) -> Result<(), CliError> {
    let params = TodaParams::new(a.n, a.b)?;
    let ev = UpsilonEvaluator::with_refinement(a.b, a.refine)?;
    if a.points == 0 {
        return Err(CliError::Parse("points must be at least 1".into()));
    }
    let line = kappa_line(a.kappa_from, a.kappa_to, a.points);

    let threads = thread_count(a.points);
    let mut slots: Vec<Option<Result<SweepPoint, TodaError>>> = Vec::new();
    slots.resize_with(a.points, || None);
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for worker in 0..threads {
            let line = &line;
            let params = &params;
            let ev = &ev;
            let alpha1 = &a.alpha1;
            let alpha2 = &a.alpha2;
            let direction = a.direction;
            let points = a.points;
            handles.push(scope.spawn(move || {
                let mut done = Vec::new();
                let mut idx = worker;
                while idx < points {
                    let value = scalar_c(alpha1, alpha2, &line[idx].1, direction, params, ev)
                        .map(|r| SweepPoint {
                            log_abs: 0.5 * r.squared.log_abs,
                            sign: r.squared.sign,
                            order: r.squared.order,
                        });
                    done.push((idx, value));
                    idx += threads;
                }
                done
            }));
        }
        for handle in handles {
            for (idx, value) in handle.join().expect("sweep worker panicked") {
                slots[idx] = Some(value);
            }
        }
    });

    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    writer
        .write_record(["index", "t", "kappa_u", "kappa_v", "kappa_w", "log_abs", "sign", "order"])
        .map_err(|e| CliError::Domain(e.to_string()))?;
    for (idx, slot) in slots.into_iter().enumerate() {
        let point = slot.expect("all rows assigned").map_err(CliError::from)?;
        let (t, kappa) = &line[idx];
        let t_f64 = (*t.numer() as f64) / (*t.denom() as f64);
        writer
            .write_record([
                idx.to_string(),
                fmt_f64(t_f64),
                kappa.u.to_string(),
                kappa.v.to_string(),
                kappa.w.to_string(),
                fmt_f64(point.log_abs),
                point.sign.to_string(),
                fmt_f64(f64::from(point.order) / 2.0),
            ])
            .map_err(|e| CliError::Domain(e.to_string()))?;
    }
    let bytes = writer.into_inner().map_err(|e| CliError::Domain(e.to_string()))?;
    output::emit(a.out.as_deref(), &bytes).map_err(CliError::from)
}
