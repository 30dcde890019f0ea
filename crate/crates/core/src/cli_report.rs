//! Command-line front end: channel files, routing, reports and the
//! reference-example suite.
//!
//! Every command returns a report object plus an exit code. Reports are
//! rendered as text, CSV or JSON; the JSON form has sorted keys and every
//! real number printed with six decimals, so identical inputs and seeds
//! give byte-identical output. Work is measured in solver iterations, which
//! are deterministic, rather than wall-clock time.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, LN_2, PI};
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::certifier::{certify_mimo, certify_mimo_at, certify_mimo_z, MimoCertificate, NoisyVerdict};
use crate::channel_model::{classify, mat_to_rows, reduce_miso, reduce_simo, rows_to_mat, ChannelKind, MimoChannel, RawChannel, StandardMiso};
use crate::error::{Error, Result};
use crate::genie_bound::{solve_upper, validate_genie, GenieParameters, UpperSolution};
use crate::matrix_kit::{frob, max_abs_diff, numerical_rank, Mat};
use crate::miso_simo::{
    certify_miso, certify_miso_z, certify_simo, certify_simo_z, hk_sum_rate_miso_z, hk_witness, is_miso_z, is_simo_z,
    simo_upper_check, HkSplit, MisoCertificate,
};
use crate::tin_bound::{kkt_certificate, solve_tin, tin_rates, CovariancePair, SolverConfig, RANK_REL_TOL};

/// Exit code of a certified channel or a successful command.
pub const EXIT_PASS: i32 = 0;
/// Exit code for operational errors.
pub const EXIT_ERROR: i32 = 1;
/// Exit code of a channel that is not certified, or of a failed example suite.
pub const EXIT_FAIL: i32 = 2;

/// Output format of a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    /// Human-readable summary.
    Text,
    /// Deterministic JSON document.
    Json,
    /// Comma-separated rows.
    Csv,
}

/// Solver settings shared by all commands.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    /// Stationarity tolerance of the ascent solvers.
    pub tol: f64,
    /// Random restarts of the TIN solver in addition to the deterministic starts.
    pub restarts: usize,
    /// Seed of the restart generator.
    pub seed: u64,
    /// Iteration cap per ascent run.
    pub max_iters: usize,
    /// Whether MISO and SIMO channels are also run through the MIMO certifier.
    pub cross_check: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let s = SolverConfig::default();
        RunConfig { tol: s.grad_tol, restarts: s.restarts, seed: s.seed, max_iters: s.max_iters, cross_check: false }
    }
}

impl RunConfig {
    /// Solver configuration derived from these settings.
    pub fn solver(&self) -> SolverConfig {
        SolverConfig { restarts: self.restarts, max_iters: self.max_iters, grad_tol: self.tol, seed: self.seed, ..SolverConfig::default() }
    }
}

/// Reads and validates a channel file.
pub fn load_channel(path: &Path) -> Result<MimoChannel> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))?;
    parse_channel(&text)
}

/// Parses and validates a channel document.
pub fn parse_channel(text: &str) -> Result<MimoChannel> {
    let raw: RawChannel = serde_json::from_str(text).map_err(|e| Error::Input(format!("channel file: {e}")))?;
    raw.into_channel()
}

/// Genie file contents: `A1`, `A2`, `Sigma1`, `Sigma2` as row-major arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawGenie {
    /// Correlation `A_1`, `r1 x r2`.
    #[serde(rename = "A1")]
    pub a1: Vec<Vec<f64>>,
    /// Correlation `A_2`, `r2 x r1`.
    #[serde(rename = "A2")]
    pub a2: Vec<Vec<f64>>,
    /// Genie covariance `Sigma_1`, `r2 x r2`.
    #[serde(rename = "Sigma1")]
    pub sigma1: Vec<Vec<f64>>,
    /// Genie covariance `Sigma_2`, `r1 x r1`.
    #[serde(rename = "Sigma2")]
    pub sigma2: Vec<Vec<f64>>,
}

impl RawGenie {
    /// Serialisable copy of a genie.
    pub fn from_genie(g: &GenieParameters) -> RawGenie {
        RawGenie { a1: mat_to_rows(&g.a1), a2: mat_to_rows(&g.a2), sigma1: mat_to_rows(&g.sigma1), sigma2: mat_to_rows(&g.sigma2) }
    }
}

/// Reads a genie file.
pub fn load_genie(path: &Path) -> Result<GenieParameters> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))?;
    let raw: RawGenie = serde_json::from_str(&text).map_err(|e| Error::Input(format!("genie file: {e}")))?;
    Ok(GenieParameters {
        a1: rows_to_mat("A1", &raw.a1)?,
        a2: rows_to_mat("A2", &raw.a2)?,
        sigma1: rows_to_mat("Sigma1", &raw.sigma1)?,
        sigma2: rows_to_mat("Sigma2", &raw.sigma2)?,
    })
}

/// KKT residuals of the reported TIN input.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KktReport {
    /// Stationarity residual of `W_i = G_i + lambda_i I`.
    pub stationarity_residual: f64,
    /// Largest `|tr(S_i W_i)|`.
    pub complementarity_residual: f64,
    /// Most negative eigenvalue of `W_i`, clipped at zero.
    pub psd_violation: f64,
    /// Trace-constraint multipliers.
    pub lambda: [f64; 2],
}

/// Lower bound section of a report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LowerReport {
    /// `S_1*` on the original antennas.
    pub s1: Vec<Vec<f64>>,
    /// `S_2*` on the original antennas.
    pub s2: Vec<Vec<f64>>,
    /// Per-user TIN rates, nats.
    pub rates: [f64; 2],
    /// TIN sum rate, nats.
    pub sum_rate: f64,
    /// TIN sum rate, bits.
    pub sum_rate_bits: f64,
    /// KKT residuals at the reported input.
    pub kkt: KktReport,
}

/// Upper bound section of a report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UpperReport {
    /// Genie used, when one is available.
    pub genie: Option<RawGenie>,
    /// Coordinates the genie refers to: `original` or `standard`.
    pub frame: String,
    /// Maximised upper bound, nats; absent when unknown.
    pub value: Option<f64>,
    /// Maximising input, in the genie's coordinates.
    pub argmax: Option<[Vec<Vec<f64>>; 2]>,
    /// `upper - lower`, nats; absent when unknown.
    pub gap: Option<f64>,
    /// `upper - lower`, bits.
    pub gap_bits: Option<f64>,
}

impl UpperReport {
    fn unknown() -> UpperReport {
        UpperReport { genie: None, frame: "original".into(), value: None, argmax: None, gap: None, gap_bits: None }
    }

    fn from_solution(g: &GenieParameters, frame: &str, up: &UpperSolution, lower: f64) -> UpperReport {
        let gap = up.value - lower;
        UpperReport {
            genie: Some(RawGenie::from_genie(g)),
            frame: frame.into(),
            value: Some(up.value),
            argmax: Some([mat_to_rows(&up.pair.s1), mat_to_rows(&up.pair.s2)]),
            gap: Some(gap),
            gap_bits: Some(gap / LN_2),
        }
    }
}

/// Han-Kobayashi comparison for a MISO Z channel.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessReport {
    /// Best sum rate found over rank-one splits, nats.
    pub sum_rate: f64,
    /// Private covariance of the split.
    pub sp: Vec<Vec<f64>>,
    /// Common covariance of the split.
    pub sc: Vec<Vec<f64>>,
    /// Whether it exceeds the TIN sum rate.
    pub beats_tin: bool,
}

/// MIMO-certifier result on a channel routed to a specialised checker.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossCheckReport {
    /// Whether the MIMO certifier passed.
    pub passed: bool,
    /// Its certified sum capacity.
    pub sum_capacity: Option<f64>,
    /// Whether the two verdicts agree.
    pub agrees: bool,
}

/// Deterministic work counters.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Timing {
    /// Ascent iterations of the TIN solve, summed over starts.
    pub tin_iterations: usize,
    /// Ascent iterations of the upper-bound solve.
    pub upper_iterations: usize,
    /// Riccati fixed-point iterations.
    pub riccati_iterations: usize,
}

/// Full report of a `certify` or `bounds` run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    /// Command that produced the report.
    pub command: String,
    /// The channel as read.
    pub channel_echo: RawChannel,
    /// Structural features of the channel.
    pub class: Vec<String>,
    /// Certifier the channel was routed to.
    pub route: String,
    /// Standard-form parameters for MISO and SIMO channels.
    pub standard_form: Option<Value>,
    /// Route-specific condition quantities.
    pub details: Option<Value>,
    /// TIN lower bound.
    pub lower: LowerReport,
    /// Genie upper bound.
    pub upper: UpperReport,
    /// Certification verdict; absent for `bounds`.
    pub verdict: Option<NoisyVerdict>,
    /// Han-Kobayashi witness for failing MISO Z channels.
    pub witness: Option<WitnessReport>,
    /// MIMO-certifier cross-check, when requested.
    pub cross_check: Option<CrossCheckReport>,
    /// Deterministic work counters.
    pub timing: Timing,
    /// Settings used.
    pub config_echo: RunConfig,
    /// Crate version.
    pub tool_version: String,
}

impl RunReport {
    /// Exit code of a `certify` report.
    pub fn exit_code(&self) -> i32 {
        match &self.verdict {
            Some(v) if v.passed => EXIT_PASS,
            Some(_) => EXIT_FAIL,
            None => EXIT_PASS,
        }
    }
}

fn lower_report(ch: &MimoChannel, pair: &CovariancePair) -> LowerReport {
    let (r1, r2) = tin_rates(ch, pair);
    let k = kkt_certificate(ch, pair);
    LowerReport {
        s1: mat_to_rows(&pair.s1),
        s2: mat_to_rows(&pair.s2),
        rates: [r1, r2],
        sum_rate: r1 + r2,
        sum_rate_bits: (r1 + r2) / LN_2,
        kkt: KktReport {
            stationarity_residual: k.stationarity_residual,
            complementarity_residual: k.complementarity_residual,
            psd_violation: k.psd_violation,
            lambda: [k.lambda1, k.lambda2],
        },
    }
}

fn swap_pair(p: &CovariancePair) -> CovariancePair {
    CovariancePair { s1: p.s2.clone(), s2: p.s1.clone() }
}

fn miso_standard_json(std: &StandardMiso) -> Value {
    json!({
        "kind": "miso",
        "theta": std.theta,
        "theta_over_pi": [std.theta[0] / PI, std.theta[1] / PI],
        "a": std.a,
        "p": std.p,
    })
}

/// Routed certification of one channel, without rendering.
struct Routed {
    route: String,
    standard_form: Option<Value>,
    details: Option<Value>,
    lower_pair: CovariancePair,
    upper: UpperReport,
    verdict: NoisyVerdict,
    witness: Option<WitnessReport>,
    timing: Timing,
}

fn mimo_routed(route: &str, cert: MimoCertificate, swapped: bool) -> Routed {
    let lower_pair = if swapped { swap_pair(&cert.tin.pair) } else { cert.tin.pair.clone() };
    let upper = match (&cert.genie, &cert.upper) {
        (Some(g), Some(u)) => {
            let mut rep = UpperReport::from_solution(g, if swapped { "swapped" } else { "original" }, u, cert.tin.sum_rate);
            if swapped {
                rep.argmax = Some([mat_to_rows(&u.pair.s2), mat_to_rows(&u.pair.s1)]);
            }
            rep
        }
        _ => UpperReport::unknown(),
    };
    let details = json!({
        "markov_routes": [format!("{:?}", cert.markov.routes[0]), format!("{:?}", cert.markov.routes[1])],
        "a1": mat_to_rows(&cert.markov.a1),
        "a2": mat_to_rows(&cert.markov.a2),
        "o_norms": cert.o.as_ref().map(|o| [frob(&o.o1), frob(&o.o2)]),
        "ranks": [numerical_rank(&cert.tin.pair.s1, RANK_REL_TOL), numerical_rank(&cert.tin.pair.s2, RANK_REL_TOL)],
        "users_swapped": swapped,
    });
    let timing = Timing {
        tin_iterations: cert.tin.total_iterations,
        upper_iterations: cert.upper.as_ref().map_or(0, |u| u.iterations),
        riccati_iterations: cert.riccati.as_ref().map_or(0, |r| r.iterations),
    };
    Routed {
        route: route.into(),
        standard_form: None,
        details: Some(details),
        lower_pair,
        upper,
        verdict: cert.verdict,
        witness: None,
        timing,
    }
}

fn miso_routed(route: &str, cert: MisoCertificate, swapped: bool) -> Routed {
    let lower_pair = if swapped { swap_pair(&cert.lifted) } else { cert.lifted.clone() };
    let upper = match (&cert.genie, &cert.upper) {
        (Some(g), Some(u)) => UpperReport::from_solution(g, "standard", u, cert.tin.sum_rate),
        _ => UpperReport::unknown(),
    };
    let mut witness = None;
    if !cert.verdict.passed && is_miso_z(&cert.standard) {
        if let Ok(w) = hk_witness(&cert.standard) {
            witness = Some(WitnessReport {
                sum_rate: w.sum_rate,
                sp: mat_to_rows(&w.split.sp),
                sc: mat_to_rows(&w.split.sc),
                beats_tin: w.sum_rate > cert.tin.sum_rate + 1e-9,
            });
        }
    }
    let mut details = json!({
        "phi": cert.tin.phi,
        "users_swapped": swapped,
    });
    if let Some(c) = &cert.conditions {
        details["conditions"] = serde_json::to_value(c).expect("plain data");
    }
    if let Some(o) = &cert.o {
        details["o1"] = json!(mat_to_rows(&o.o1));
        details["o2"] = json!(mat_to_rows(&o.o2));
    }
    Routed {
        route: route.into(),
        standard_form: Some(miso_standard_json(&cert.standard)),
        details: Some(details),
        lower_pair,
        upper,
        verdict: cert.verdict,
        witness,
        timing: Timing { upper_iterations: cert.upper.as_ref().map_or(0, |u| u.iterations), ..Timing::default() },
    }
}

fn route_channel(ch: &MimoChannel, cfg: &SolverConfig) -> Result<Routed> {
    let class = classify(ch);
    if class.has(ChannelKind::Miso) {
        let (std, _) = reduce_miso(ch)?;
        if is_miso_z(&std) {
            return Ok(miso_routed("miso-z", certify_miso_z(&std, cfg)?, false));
        }
        let (swapped_std, _) = reduce_miso(&ch.swapped())?;
        if is_miso_z(&swapped_std) {
            return Ok(miso_routed("miso-z (users swapped)", certify_miso_z(&swapped_std, cfg)?, true));
        }
        return Ok(miso_routed("miso", certify_miso(&std, cfg)?, false));
    }
    if class.has(ChannelKind::Simo) {
        let tin = solve_tin(ch, cfg);
        let lower_pair = tin.pair.clone();
        let (std, _) = reduce_simo(ch)?;
        let form = |s: &crate::channel_model::StandardSimo| {
            json!({
                "kind": "simo",
                "varphi": s.varphi,
                "varphi_over_pi": [s.varphi[0] / PI, s.varphi[1] / PI],
                "a": s.a,
                "p": s.p,
            })
        };
        let z = |s: &crate::channel_model::StandardSimo, route: &str| -> Result<Routed> {
            let (mut v, cap) = certify_simo_z(s)?;
            full_power_condition(&mut v, cap, tin.sum_rate);
            Ok(Routed {
                route: route.into(),
                standard_form: Some(form(s)),
                details: Some(json!({ "capacity": cap })),
                lower_pair: lower_pair.clone(),
                upper: UpperReport::unknown(),
                verdict: v,
                witness: None,
                timing: Timing { tin_iterations: tin.total_iterations, ..Timing::default() },
            })
        };
        if is_simo_z(&std) {
            return z(&std, "simo-z");
        }
        let (swapped_std, _) = reduce_simo(&ch.swapped())?;
        if is_simo_z(&swapped_std) {
            return z(&swapped_std, "simo-z (users swapped)");
        }
        let mut cert = certify_simo(&std);
        let up = if cert.verdict.passed { simo_upper_check(&mut cert, cfg) } else { None };
        full_power_condition(&mut cert.verdict, cert.full_power_rate, tin.sum_rate);
        let upper = match (&cert.genie, &up) {
            (Some(g), Some(u)) => UpperReport::from_solution(g, "standard", u, cert.full_power_rate),
            _ => UpperReport::unknown(),
        };
        let details = json!({
            "simple": cert.simple,
            "best": cert.best,
            "full_power_rate": cert.full_power_rate,
        });
        return Ok(Routed {
            route: "simo".into(),
            standard_form: Some(form(&std)),
            details: Some(details),
            lower_pair,
            upper,
            verdict: cert.verdict,
            witness: None,
            timing: Timing {
                tin_iterations: tin.total_iterations,
                upper_iterations: up.as_ref().map_or(0, |u| u.iterations),
                riccati_iterations: cert.riccati.as_ref().map_or(0, |r| r.iterations),
            },
        });
    }
    if class.has(ChannelKind::ZicF1Zero) {
        return Ok(mimo_routed("mimo-z", certify_mimo_z(ch, cfg)?, false));
    }
    if ch.is_negligible(&ch.f2) {
        return Ok(mimo_routed("mimo-z (users swapped)", certify_mimo_z(&ch.swapped(), cfg)?, true));
    }
    Ok(mimo_routed("mimo", certify_mimo(ch, cfg), false))
}

/// Records whether the full-power rate the SIMO certificates report is the
/// TIN optimum; it must be whenever the certificate passes.
fn full_power_condition(v: &mut NoisyVerdict, full_power: f64, tin_optimum: f64) {
    let diff = tin_optimum - full_power;
    v.check("full_power_is_tin_optimal", "TIN optimum equals the full-power rate", diff, 1e-6 * (1.0 + tin_optimum) - diff.abs(), false);
}

fn assemble(command: &str, ch: &MimoChannel, routed: Routed, verdict: Option<NoisyVerdict>, cross: Option<CrossCheckReport>, cfg: &RunConfig) -> RunReport {
    RunReport {
        command: command.into(),
        channel_echo: RawChannel::from_channel(ch),
        class: classify(ch).names(),
        route: routed.route,
        standard_form: routed.standard_form,
        details: routed.details,
        lower: lower_report(ch, &routed.lower_pair),
        upper: routed.upper,
        verdict,
        witness: routed.witness,
        cross_check: cross,
        timing: routed.timing,
        config_echo: cfg.clone(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
    }
}

/// Certifies one channel with automatic routing.
pub fn certify_channel(ch: &MimoChannel, cfg: &RunConfig) -> Result<RunReport> {
    let solver = cfg.solver();
    let routed = route_channel(ch, &solver)?;
    let specialised = routed.route.starts_with("miso") || routed.route.starts_with("simo");
    let cross = if cfg.cross_check && specialised {
        let cert = certify_mimo_at(ch, &solve_tin(ch, &solver), &solver);
        Some(CrossCheckReport {
            passed: cert.verdict.passed,
            sum_capacity: cert.verdict.sum_capacity,
            agrees: cert.verdict.passed == routed.verdict.passed,
        })
    } else {
        None
    };
    let verdict = Some(routed.verdict.clone());
    Ok(assemble("certify", ch, routed, verdict, cross, cfg))
}

/// `certify` command: reads a channel file and certifies it.
pub fn cmd_certify(path: &Path, cfg: &RunConfig) -> Result<RunReport> {
    certify_channel(&load_channel(path)?, cfg)
}

/// Lower and upper bounds of one channel.
///
/// With a genie the upper bound is maximised for it. Without one the
/// certifier's genie is used, and the upper bound is reported only when the
/// certificate passes; otherwise it is unknown.
pub fn bounds_channel(ch: &MimoChannel, genie: Option<&GenieParameters>, cfg: &RunConfig) -> Result<RunReport> {
    let solver = cfg.solver();
    if let Some(g) = genie {
        let val = validate_genie(g)?;
        if !val.passed {
            return Err(Error::InvalidGenie(format!(
                "margins E1 {:.3e}, E2 {:.3e}, Sigma1 {:.3e}, Sigma2 {:.3e}",
                val.e1_margin, val.e2_margin, val.sigma1_margin, val.sigma2_margin
            )));
        }
        let tin = solve_tin(ch, &solver);
        let up = solve_upper(ch, g, &solver)?;
        let routed = Routed {
            route: "bounds (supplied genie)".into(),
            standard_form: None,
            details: None,
            lower_pair: tin.pair.clone(),
            upper: UpperReport::from_solution(g, "original", &up, tin.sum_rate),
            verdict: NoisyVerdict::new(),
            witness: None,
            timing: Timing { tin_iterations: tin.total_iterations, upper_iterations: up.iterations, riccati_iterations: 0 },
        };
        return Ok(assemble("bounds", ch, routed, None, None, cfg));
    }
    let mut routed = route_channel(ch, &solver)?;
    if !routed.verdict.passed {
        routed.upper = UpperReport::unknown();
    }
    Ok(assemble("bounds", ch, routed, None, None, cfg))
}

/// `bounds` command.
pub fn cmd_bounds(path: &Path, genie: Option<&Path>, cfg: &RunConfig) -> Result<RunReport> {
    let ch = load_channel(path)?;
    let g = genie.map(load_genie).transpose()?;
    bounds_channel(&ch, g.as_ref(), cfg)
}

/// Parameters of the MISO Z-channel sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    /// Power of the non-interfering user.
    pub p1: f64,
    /// Powers of the interfering user, one table block each.
    pub p2: Vec<f64>,
    /// Number of intervals of the `theta2` grid on `[0, pi/2]`.
    pub theta2_grid: usize,
    /// Bisection tolerance on `a2`.
    pub a2_resolution: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig { p1: 1.0, p2: vec![1.0, 10.0, 100.0], theta2_grid: 16, a2_resolution: 1e-4 }
    }
}

/// Largest `a2` searched by the sweep; cells passing there report infinity.
pub const A2_CAP: f64 = 1024.0;

/// One row of the sweep table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    /// Power of user 1.
    pub p1: f64,
    /// Power of user 2.
    pub p2: f64,
    /// Angle of user 2.
    pub theta2: f64,
    /// Largest `a2` with a passing MISO Z certificate.
    pub a2_max: f64,
}

/// Largest `a2` for which the MISO Z channel with `theta1 = pi/2` passes.
///
/// Assumes the passing set is an interval `[0, a2_max]`, which holds on
/// every grid examined, and bisects to `resolution`.
pub fn max_noisy_a2(p1: f64, p2: f64, theta2: f64, resolution: f64, cfg: &SolverConfig) -> f64 {
    let pass = |a2: f64| {
        let std = StandardMiso::from_parameters([FRAC_PI_2, theta2], [0.0, a2], [p1, p2]);
        certify_miso_z(&std, cfg).map(|c| c.verdict.passed).unwrap_or(false)
    };
    let mut lo = 0.0;
    let mut hi = 1.0;
    while pass(hi) {
        lo = hi;
        hi *= 2.0;
        if hi > A2_CAP {
            return f64::INFINITY;
        }
    }
    while hi - lo > resolution {
        let mid = 0.5 * (lo + hi);
        if pass(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Sweep of the MISO Z-channel noisy-interference region.
pub fn sweep_rows(sw: &SweepConfig, cfg: &SolverConfig) -> Vec<SweepRow> {
    let mut cells = Vec::new();
    for &p2 in &sw.p2 {
        for k in 0..=sw.theta2_grid {
            cells.push((p2, FRAC_PI_2 * k as f64 / sw.theta2_grid.max(1) as f64));
        }
    }
    let mut rows: Vec<SweepRow> = cells
        .par_iter()
        .map(|&(p2, theta2)| SweepRow { p1: sw.p1, p2, theta2, a2_max: max_noisy_a2(sw.p1, p2, theta2, sw.a2_resolution, cfg) })
        .collect();
    rows.sort_by(|a, b| a.p2.total_cmp(&b.p2).then(a.theta2.total_cmp(&b.theta2)));
    rows
}

/// `sweep` command: CSV with header `P1,P2,theta2,a2_max`.
pub fn cmd_sweep(sw: &SweepConfig, cfg: &RunConfig) -> Result<String> {
    if !(sw.p1 > 0.0) || sw.p2.iter().any(|p| !(*p > 0.0)) || sw.theta2_grid == 0 || !(sw.a2_resolution > 0.0) {
        return Err(Error::Input("sweep parameters must be positive".into()));
    }
    let mut out = String::from("P1,P2,theta2,a2_max\n");
    for r in sweep_rows(sw, &cfg.solver()) {
        let _ = writeln!(out, "{},{},{},{}", fmt_f64(r.p1), fmt_f64(r.p2), fmt_f64(r.theta2), fmt_f64(r.a2_max));
    }
    Ok(out)
}

/// One golden comparison of the example suite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExampleCheck {
    /// Example number.
    pub example: u32,
    /// Quantity compared.
    pub quantity: String,
    /// Reference value; for matrices the largest entry deviation is compared with zero.
    pub expected: f64,
    /// Computed value.
    pub computed: f64,
    /// Allowed absolute deviation.
    pub tolerance: f64,
    /// Whether the comparison holds.
    pub passed: bool,
}

struct Checks(Vec<ExampleCheck>);

impl Checks {
    fn value(&mut self, example: u32, quantity: &str, expected: f64, computed: f64, tolerance: f64) {
        let passed = (computed - expected).abs() <= tolerance;
        self.0.push(ExampleCheck { example, quantity: quantity.into(), expected, computed, tolerance, passed });
    }

    fn matrix(&mut self, example: u32, quantity: &str, expected: &Mat, computed: &Mat, tolerance: f64) {
        let dev = if expected.shape() == computed.shape() { max_abs_diff(expected, computed) } else { f64::INFINITY };
        self.0.push(ExampleCheck { example, quantity: format!("{quantity} max entry deviation"), expected: 0.0, computed: dev, tolerance, passed: dev <= tolerance });
    }

    fn flag(&mut self, example: u32, quantity: &str, expected: bool, computed: bool) {
        let b = |x: bool| if x { 1.0 } else { 0.0 };
        self.0.push(ExampleCheck { example, quantity: quantity.into(), expected: b(expected), computed: b(computed), tolerance: 0.0, passed: expected == computed });
    }
}

fn m(rows: &[&[f64]]) -> Mat {
    crate::matrix_kit::from_rows(rows)
}

/// Channel files of the reference examples.
pub const EXAMPLE_CHANNELS: [(u32, &str); 4] = [
    (1, include_str!("../examples/ex1.json")),
    (2, include_str!("../examples/ex2.json")),
    (3, include_str!("../examples/ex3.json")),
    (5, include_str!("../examples/ex5.json")),
];

fn example_channel(n: u32) -> MimoChannel {
    let text = EXAMPLE_CHANNELS.iter().find(|(k, _)| *k == n).expect("embedded example").1;
    parse_channel(text).expect("embedded example is valid")
}

fn example1(c: &mut Checks, cfg: &SolverConfig) {
    let ch = example_channel(1);
    let cert = certify_mimo(&ch, cfg);
    let s = &cert.tin.pair;
    let k = &cert.tin.kkt;
    c.flag(1, "certificate passes", true, cert.verdict.passed);
    c.matrix(1, "S1*", &m(&[&[0.9079, -0.2892], &[-0.2892, 0.0921]]), &s.s1, 5e-3);
    c.matrix(1, "S2*", &m(&[&[0.9458, 0.1788, 0.5314], &[0.1788, 0.6839, -1.0601], &[0.5314, -1.0601, 2.3703]]), &s.s2, 5e-3);
    c.value(1, "rank S1*", 1.0, numerical_rank(&s.s1, RANK_REL_TOL) as f64, 0.0);
    c.value(1, "rank S2*", 2.0, numerical_rank(&s.s2, RANK_REL_TOL) as f64, 0.0);
    c.matrix(1, "G1", &m(&[&[-0.3624, 0.0005], &[0.0005, -0.3608]]), &k.g1, 5e-3);
    c.matrix(1, "G2", &m(&[&[-0.1368, -0.0525, -0.0294], &[-0.0525, -0.0591, 0.0583], &[-0.0294, 0.0583, -0.1305]]), &k.g2, 5e-3);
    c.matrix(1, "W1", &(m(&[&[0.1740, 0.5463], &[0.5463, 1.7150]]) * 1e-3), &k.w1, 5e-3);
    c.matrix(1, "W2", &(m(&[&[2.6419, -5.2450, -2.9381], &[-5.2450, 10.4117, 5.8325], &[-2.9381, 5.8325, 3.2674]]) * 1e-2), &k.w2, 5e-3);
    c.value(1, "lambda1", 0.3626, k.lambda1, 1e-3);
    c.value(1, "lambda2", 0.1632, k.lambda2, 1e-3);
    let (r1, r2) = cert.riccati.as_ref().map_or((f64::NAN, f64::NAN), |r| (r.radius1, r.radius2));
    c.value(1, "radius(Phi1)", 0.4350, r1, 1e-3);
    c.value(1, "radius(Phi2)", 0.3130, r2, 1e-3);
    let (o1, o2) = cert.o.as_ref().map_or((f64::NAN, f64::NAN), |o| (frob(&o.o1), frob(&o.o2)));
    c.value(1, "||O1||", 0.0, o1, 1e-3);
    c.value(1, "||O2||", 0.0, o2, 1e-3);
}

fn example2(c: &mut Checks, cfg: &SolverConfig) {
    let ch = example_channel(2);
    let Ok((std, _)) = reduce_miso(&ch) else {
        c.flag(2, "MISO reduction", true, false);
        return;
    };
    c.value(2, "theta1/pi", 0.3833, std.theta[0] / PI, 1e-3);
    c.value(2, "theta2/pi", 0.3753, std.theta[1] / PI, 1e-3);
    c.value(2, "a1", 0.1588, std.a[0], 1e-3);
    c.value(2, "a2", 0.2944, std.a[1], 1e-3);
    c.value(2, "P1", 3.7100, std.p[0], 1e-3);
    c.value(2, "P2", 3.2789, std.p[1], 1e-3);
    let cert = match certify_miso(&std, cfg) {
        Ok(cert) => cert,
        Err(_) => {
            c.flag(2, "MISO certificate", true, false);
            return;
        }
    };
    let k = cert.conditions.clone().expect("general MISO path");
    c.value(2, "A1", 0.0992, k.a1, 1e-3);
    c.value(2, "A2", 0.1156, k.a2, 1e-3);
    c.value(2, "sigma1^2", 0.9874, k.sigma1_sq, 1e-3);
    c.value(2, "bar sigma1^2", 0.6277, k.bar_sigma1_sq, 1e-3);
    c.value(2, "sigma2^2", 0.9891, k.sigma2_sq, 1e-3);
    c.value(2, "bar sigma2^2", 0.4643, k.bar_sigma2_sq, 1e-3);
    c.value(2, "k1", 1.0994, k.k1, 2e-3);
    c.value(2, "k2", 0.8133, k.k2, 2e-3);
    c.flag(2, "certificate passes", true, cert.verdict.passed);
    c.value(2, "sum capacity", 1.4543, cert.verdict.sum_capacity.unwrap_or(f64::NAN), 1e-3);
    c.matrix(
        2,
        "lifted S1*",
        &m(&[&[0.0070, 0.0808, -0.0071, -0.0187], &[0.0808, 0.9356, -0.0820, -0.2168], &[-0.0071, -0.0820, 0.0072, 0.0190], &[-0.0187, -0.2168, 0.0190, 0.0502]]),
        &cert.lifted.s1,
        5e-3,
    );
    c.matrix(2, "lifted S2*", &m(&[&[0.0253, 0.0204, 0.1558], &[0.0204, 0.0164, 0.1253], &[0.1558, 0.1253, 0.9583]]), &cert.lifted.s2, 5e-3);
}

fn example3(c: &mut Checks) {
    let ch = example_channel(3);
    let Ok((std, _)) = reduce_simo(&ch) else {
        c.flag(3, "SIMO reduction", true, false);
        return;
    };
    c.value(3, "varphi1/pi", 0.5717, std.varphi[0] / PI, 1e-3);
    c.value(3, "varphi2/pi", 0.4436, std.varphi[1] / PI, 1e-3);
    c.value(3, "a1", 0.3909, std.a[0], 1e-3);
    c.value(3, "a2", 0.3845, std.a[1], 1e-3);
    c.value(3, "P1", 3.3753, std.p[0], 1e-3);
    c.value(3, "P2", 1.9304, std.p[1], 1e-3);
    let cert = certify_simo(&std);
    c.value(3, "radius(Phi1), simple A", 0.2784, cert.simple.radius1, 1e-3);
    c.value(3, "radius(Phi2), simple A", 0.2815, cert.simple.radius2, 1e-3);
    c.flag(3, "certificate passes", true, cert.verdict.passed);
    c.value(3, "sum capacity", 1.2614, cert.verdict.sum_capacity.unwrap_or(f64::NAN), 1e-3);
}

fn example4(c: &mut Checks, cfg: &SolverConfig) {
    let simo_z = |a2: f64| {
        let std = crate::channel_model::StandardSimo::from_parameters([0.3 * PI, 0.4 * PI], [0.0, a2], [1.0, 10.0]);
        certify_simo_z(&std).map(|(v, _)| v.passed).unwrap_or(false)
    };
    c.flag(4, "SIMO Z passes at a2 = 1", true, simo_z(1.0));
    c.flag(4, "SIMO Z passes at a2 = 1.001", false, simo_z(1.001));
    let a2_max = max_noisy_a2(1.0, 10.0, FRAC_PI_4, 1e-4, cfg);
    c.flag(4, "MISO Z a2_max < 0.4 at P1=1, P2=10, theta2=pi/4", true, a2_max < 0.4);
}

fn example5(c: &mut Checks, cfg: &SolverConfig) {
    let ch = example_channel(5);
    let report = match certify_channel(&ch, &RunConfig { restarts: cfg.restarts, seed: cfg.seed, max_iters: cfg.max_iters, tol: cfg.grad_tol, cross_check: false }) {
        Ok(r) => r,
        Err(_) => {
            c.flag(5, "certification runs", true, false);
            return;
        }
    };
    c.value(5, "TIN sum rate", 1.3725, report.lower.sum_rate, 1e-3);
    let (std, _) = reduce_miso(&ch).expect("MISO channel");
    let split = HkSplit { sp: m(&[&[1.1542, 2.2652], &[2.2652, 4.4458]]), sc: m(&[&[4.1906, 0.9367], &[0.9367, 0.2094]]) };
    c.value(5, "HK rate at printed split", 1.4093, hk_sum_rate_miso_z(&std, &split).unwrap_or(f64::NAN), 1e-3);
    c.flag(5, "certificate passes", false, report.verdict.as_ref().is_some_and(|v| v.passed));
    let w = report.witness.as_ref().map_or(f64::NAN, |w| w.sum_rate);
    c.flag(5, "HK witness >= 1.4093 - 1e-3 and beats TIN", true, w >= 1.4093 - 1e-3 && w > report.lower.sum_rate);
}

/// Runs every golden comparison of the reference examples.
pub fn example_checks(cfg: &RunConfig) -> Vec<ExampleCheck> {
    let solver = cfg.solver();
    let mut c = Checks(Vec::new());
    example1(&mut c, &solver);
    example2(&mut c, &solver);
    example3(&mut c);
    example4(&mut c, &solver);
    example5(&mut c, &solver);
    c.0
}

/// `examples` command: the comparison table and its exit code.
pub fn cmd_examples(cfg: &RunConfig, format: Format) -> (String, i32) {
    let checks = example_checks(cfg);
    let code = if checks.iter().all(|c| c.passed) { EXIT_PASS } else { EXIT_FAIL };
    let out = match format {
        Format::Json => {
            let passed = code == EXIT_PASS;
            to_deterministic_json(&json!({ "checks": checks, "passed": passed }))
        }
        Format::Csv => {
            let mut s = String::from("example,quantity,expected,computed,tolerance,passed\n");
            for c in &checks {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{}",
                    c.example,
                    csv_field(&c.quantity),
                    fmt_f64(c.expected),
                    fmt_f64(c.computed),
                    fmt_f64(c.tolerance),
                    c.passed
                );
            }
            s
        }
        Format::Text => {
            let mut s = String::new();
            let _ = writeln!(s, "{:<3} {:<52} {:>12} {:>12} {:>9}  result", "ex", "quantity", "expected", "computed", "tol");
            for c in &checks {
                let _ = writeln!(
                    s,
                    "{:<3} {:<52} {:>12.6} {:>12.6} {:>9.1e}  {}",
                    c.example,
                    c.quantity,
                    c.expected,
                    c.computed,
                    c.tolerance,
                    if c.passed { "PASS" } else { "FAIL" }
                );
            }
            let failed = checks.iter().filter(|c| !c.passed).count();
            let _ = writeln!(s, "{} checks, {} failed", checks.len(), failed);
            s
        }
    };
    (out, code)
}

/// Formats a real with six decimals, mapping `-0` to `0` and non-finite
/// values to `inf`, `-inf` or `nan`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{x:.6}");
    if s == "-0.000000" {
        "0.000000".into()
    } else {
        s
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn write_json(v: &Value, indent: usize, out: &mut String) {
    let pad = |n: usize| "  ".repeat(n);
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_f64() {
                let x = n.as_f64().expect("f64 number");
                out.push_str(&fmt_f64(x));
            } else {
                out.push_str(&n.to_string());
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            let flat = items.iter().all(|x| !(x.is_array() || x.is_object()));
            if flat {
                out.push('[');
                for (k, x) in items.iter().enumerate() {
                    if k > 0 {
                        out.push_str(", ");
                    }
                    write_json(x, indent, out);
                }
                out.push(']');
                return;
            }
            out.push_str("[\n");
            for (k, x) in items.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                write_json(x, indent + 1, out);
                out.push_str(if k + 1 < items.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            // serde_json maps are ordered by key, so iteration is sorted.
            out.push_str("{\n");
            let n = map.len();
            for (k, (key, x)) in map.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                out.push_str(&Value::String(key.clone()).to_string());
                out.push_str(": ");
                write_json(x, indent + 1, out);
                out.push_str(if k + 1 < n { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push('}');
        }
    }
}

/// Renders a JSON value with sorted keys and six-decimal reals.
///
/// Non-finite reals, which JSON cannot represent, become `null`.
pub fn to_deterministic_json(v: &Value) -> String {
    let mut out = String::new();
    write_json(v, 0, &mut out);
    out.push('\n');
    out
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "unknown".into(), fmt_f64)
}

/// Renders a report in the requested format.
pub fn render_report(r: &RunReport, format: Format) -> String {
    match format {
        Format::Json => to_deterministic_json(&serde_json::to_value(r).expect("plain data")),
        Format::Csv => {
            let mut s = String::from("section,name,value,margin,passed,blocking\n");
            let _ = writeln!(s, "lower,sum_rate_nats,{},,,", fmt_f64(r.lower.sum_rate));
            let _ = writeln!(s, "lower,sum_rate_bits,{},,,", fmt_f64(r.lower.sum_rate_bits));
            let _ = writeln!(s, "upper,value_nats,{},,,", opt(r.upper.value));
            let _ = writeln!(s, "upper,gap_nats,{},,,", opt(r.upper.gap));
            if let Some(v) = &r.verdict {
                for c in &v.conditions {
                    let _ = writeln!(s, "condition,{},{},{},{},{}", csv_field(&c.name), fmt_f64(c.value), fmt_f64(c.margin), c.passed, c.blocking);
                }
                let _ = writeln!(s, "verdict,passed,{},,,", v.passed);
            }
            if let Some(w) = &r.witness {
                let _ = writeln!(s, "witness,hk_sum_rate_nats,{},,,", fmt_f64(w.sum_rate));
            }
            s
        }
        Format::Text => {
            let mut s = String::new();
            let _ = writeln!(s, "class: {}", r.class.join(", "));
            let _ = writeln!(s, "route: {}", r.route);
            let _ = writeln!(
                s,
                "lower bound (TIN): {} nats ({} bits), rates {} + {}",
                fmt_f64(r.lower.sum_rate),
                fmt_f64(r.lower.sum_rate_bits),
                fmt_f64(r.lower.rates[0]),
                fmt_f64(r.lower.rates[1])
            );
            let _ = writeln!(s, "upper bound (genie): {} nats", opt(r.upper.value));
            let _ = writeln!(s, "gap: {} nats ({} bits)", opt(r.upper.gap), opt(r.upper.gap_bits));
            if let Some(v) = &r.verdict {
                let _ = writeln!(s, "conditions:");
                for c in &v.conditions {
                    let _ = writeln!(
                        s,
                        "  {:<26} value {:>14}  margin {:>14}  {}{}",
                        c.name,
                        fmt_f64(c.value),
                        fmt_f64(c.margin),
                        if c.passed { "ok" } else { "FAILED" },
                        if c.blocking { "" } else { " (informational)" }
                    );
                }
                for n in &v.notes {
                    let _ = writeln!(s, "note: {n}");
                }
                match v.sum_capacity {
                    Some(cap) => {
                        let _ = writeln!(s, "verdict: noisy interference, sum capacity {} nats ({} bits)", fmt_f64(cap), fmt_f64(cap / LN_2));
                    }
                    None => {
                        let _ = writeln!(s, "verdict: not certified");
                    }
                }
            }
            if let Some(w) = &r.witness {
                let _ = writeln!(s, "Han-Kobayashi witness: {} nats{}", fmt_f64(w.sum_rate), if w.beats_tin { ", exceeds TIN" } else { "" });
            }
            if let Some(x) = &r.cross_check {
                let _ = writeln!(s, "MIMO cross-check: {}{}", if x.passed { "passed" } else { "not certified" }, if x.agrees { "" } else { " (disagrees)" });
            }
            s
        }
    }
}
