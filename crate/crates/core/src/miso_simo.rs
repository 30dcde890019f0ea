//! Low-dimensional noisy-interference conditions for MISO and SIMO channels.
//!
//! After reduction to standard form every quantity in these conditions is a
//! scalar or a `2 x 2` matrix, so the checks are closed-form:
//!
//! * MISO: scalar genie correlations `A_i`, genie variances `sigma_i^2` and
//!   the thresholds `bar sigma_i^2`;
//! * MISO Z channel: two scalar inequalities at the TIN optimum;
//! * SIMO: numerical-radius test over a family of `A_i` parametrised by a
//!   direction `v_i`, with a closed form for the symmetric case;
//! * SIMO Z channel: `a_2 <= 1`.
//!
//! A Han-Kobayashi rate for MISO Z channels is provided as the comparison
//! that shows when treating interference as noise is strictly suboptimal.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::Serialize;

use crate::certifier::{compute_o, solve_sigma, NoisyVerdict, OMatrices, RiccatiSolution, MARGIN_TOL, REL_TOL};
use crate::channel_model::{lift_covariance, StandardMiso, StandardSimo};
use crate::error::{Error, Result};
use crate::genie_bound::{solve_upper, GenieParameters, UpperSolution};
use crate::matrix_kit::{eye, min_eig, Mat, Vect};
use crate::tin_bound::{kkt_certificate, solve_tin_miso, tin_rates, tin_sum_rate, CovariancePair, MisoTinSolution, SolverConfig};

/// Tolerance for recognising `theta = pi/2` or a vanishing gain ratio.
pub const ANGLE_TOL: f64 = 1e-9;

/// Scalar quantities of the MISO noisy-interference condition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MisoConditions {
    /// Genie correlation of user 1.
    pub a1: f64,
    /// Genie correlation of user 2.
    pub a2: f64,
    /// Genie noise variance seen with user 1's side information.
    pub sigma1_sq: f64,
    /// Genie noise variance seen with user 2's side information.
    pub sigma2_sq: f64,
    /// Threshold `sigma1_sq` must reach.
    pub bar_sigma1_sq: f64,
    /// Threshold `sigma2_sq` must reach.
    pub bar_sigma2_sq: f64,
    /// Whether `|A1| + |A2| <= 1`.
    pub existence_ok: bool,
    /// Scaling between the KKT multiplier and its rank-one part, user 1.
    pub k1: f64,
    /// Scaling between the KKT multiplier and its rank-one part, user 2.
    pub k2: f64,
}

/// Result of a MISO certification on the standard form.
#[derive(Debug, Clone)]
pub struct MisoCertificate {
    /// Pass/fail with every checked condition.
    pub verdict: NoisyVerdict,
    /// Standard form the conditions were evaluated on.
    pub standard: StandardMiso,
    /// Beam-steering TIN optimum.
    pub tin: MisoTinSolution,
    /// Scalar condition values; absent for the Z-channel path.
    pub conditions: Option<MisoConditions>,
    /// TIN optimum mapped back to the original transmit antennas.
    pub lifted: CovariancePair,
    /// Genie on the standard form, when the variances are real.
    pub genie: Option<GenieParameters>,
    /// `O_i` at the optimum for that genie.
    pub o: Option<OMatrices>,
    /// Upper-bound maximisation for that genie.
    pub upper: Option<UpperSolution>,
}

fn quad(v: &Vect, s: &Mat, w: &Vect) -> f64 {
    (v.transpose() * s * w)[(0, 0)]
}

fn sqrt_discriminant_root(b: f64, c: f64) -> f64 {
    let disc = b * b - 4.0 * c;
    0.5 * (b + disc.sqrt())
}

/// Evaluates the MISO condition quantities at a given input.
///
/// Requires `cos theta_i != 0`, `a_i > 0` and nonzero `h_i^T S_i h_i`.
pub fn miso_conditions(std: &StandardMiso, s: &CovariancePair) -> Result<MisoConditions> {
    for i in 1..=2 {
        if std.theta[i - 1].cos().abs() <= ANGLE_TOL {
            return Err(Error::HypothesisViolated(format!("cos(theta_{i}) = 0")));
        }
        if std.a[i - 1] <= 0.0 {
            return Err(Error::HypothesisViolated(format!("f_{i} = 0")));
        }
        if quad(&std.h(i), s.get(i), &std.h(i)) <= 0.0 {
            return Err(Error::HypothesisViolated(format!("S_{i} delivers no signal")));
        }
    }
    let (h1, h2, f1, f2) = (std.h(1), std.h(2), std.f(1), std.f(2));
    let (s1, s2) = (&s.s1, &s.s2);
    let hsh1 = quad(&h1, s1, &h1);
    let hsh2 = quad(&h2, s2, &h2);
    let fsf1 = quad(&f1, s1, &f1);
    let fsf2 = quad(&f2, s2, &f2);
    let fsh1 = quad(&f1, s1, &h1);
    let fsh2 = quad(&f2, s2, &h2);
    let q1 = fsh1 / hsh1;
    let q2 = fsh2 / hsh2;
    let a1 = q1 * (1.0 + fsf2);
    let a2 = q2 * (1.0 + fsf1);
    let sigma1_sq = sqrt_discriminant_root(1.0 + a1 * a1 - a2 * a2, a1 * a1);
    let sigma2_sq = sqrt_discriminant_root(1.0 + a2 * a2 - a1 * a1, a2 * a2);
    let [t1, t2] = std.theta;
    let [r1, r2] = [std.a[0].sqrt(), std.a[1].sqrt()];
    let bar_sigma1_sq = -fsf2 + r2 / t2.cos() * (1.0 + hsh2 + fsf1) * q2;
    let bar_sigma2_sq = -fsf1 + r1 / t1.cos() * (1.0 + hsh1 + fsf2) * q1;
    let d1 = 1.0 + hsh1 + fsf2;
    let d2 = 1.0 + hsh2 + fsf1;
    let k1 = -t1.cos() / (2.0 * d1 * q1 * (q1 * t1.cos() - r1));
    let k2 = -t2.cos() / (2.0 * d2 * q2 * (q2 * t2.cos() - r2));
    Ok(MisoConditions {
        a1,
        a2,
        sigma1_sq,
        sigma2_sq,
        bar_sigma1_sq,
        bar_sigma2_sq,
        existence_ok: a1.abs() + a2.abs() <= 1.0,
        k1,
        k2,
    })
}

fn lift_pair(std: &StandardMiso, pair: &CovariancePair) -> CovariancePair {
    CovariancePair { s1: lift_covariance(&pair.s1, std, 1), s2: lift_covariance(&pair.s2, std, 2) }
}

fn scalar(x: f64) -> Mat {
    Mat::from_element(1, 1, x)
}

/// Attaches the genie-side checks shared by the MISO paths: `O_i`, the
/// upper-bound maximisation and the resulting gap. All are informational.
fn attach_upper(
    v: &mut NoisyVerdict,
    std: &StandardMiso,
    pair: &CovariancePair,
    g: &GenieParameters,
    lower: f64,
    cfg: &SolverConfig,
) -> (Option<OMatrices>, Option<UpperSolution>) {
    let ch = std.channel();
    let o = compute_o(&ch, pair, g).ok();
    if let Some(o) = &o {
        let so = o.s1_o1.max(o.s2_o2);
        v.check("S_O_product", "||S_i* O_i|| <= 1e-6", so, MARGIN_TOL - so, false);
        let k = kkt_certificate(&ch, pair);
        let d1 = min_eig(&(&k.w1 - &o.o1));
        let d2 = min_eig(&(&k.w2 - &o.o2));
        v.check("W1_minus_O1_psd", "W_1 - O_1 >= 0", d1, d1, false);
        v.check("W2_minus_O2_psd", "W_2 - O_2 >= 0", d2, d2, false);
    }
    let upper = solve_upper(&ch, g, cfg).ok();
    if let Some(u) = &upper {
        let gap = u.value - lower;
        let tol = REL_TOL * (1.0 + lower);
        v.push("bound_gap", "|upper - lower| <= 1e-6 (1 + lower)", gap, tol - gap.abs(), gap.abs() <= tol, false);
    }
    (o, upper)
}

/// Certifies a MISO channel in standard form at its beam-steering optimum.
///
/// Passes iff `|A1| + |A2| <= 1` and `sigma_i^2 >= bar sigma_i^2` for both
/// users. Channels where a transmitter can steer a null towards the other
/// receiver (`cos theta_i = 0`) or causes no interference (`a_i = 0`) are
/// rejected with `HypothesisViolated`; they belong to [`certify_miso_z`].
pub fn certify_miso(std: &StandardMiso, cfg: &SolverConfig) -> Result<MisoCertificate> {
    let tin = solve_tin_miso(std, cfg);
    certify_miso_at(std, tin, cfg)
}

/// MISO certification at a given beam-steering solution.
pub fn certify_miso_at(std: &StandardMiso, tin: MisoTinSolution, cfg: &SolverConfig) -> Result<MisoCertificate> {
    let c = miso_conditions(std, &tin.pair)?;
    let mut v = NoisyVerdict::new();
    let budget = c.a1.abs() + c.a2.abs();
    v.check("existence", "|A1| + |A2| <= 1", budget, 1.0 - budget, true);
    v.check("sigma1_vs_threshold", "sigma1^2 >= bar sigma1^2", c.sigma1_sq, c.sigma1_sq - c.bar_sigma1_sq, true);
    v.check("sigma2_vs_threshold", "sigma2^2 >= bar sigma2^2", c.sigma2_sq, c.sigma2_sq - c.bar_sigma2_sq, true);
    if c.sigma1_sq.is_nan() || c.sigma2_sq.is_nan() {
        let last = v.conditions.len();
        for cond in &mut v.conditions[last - 2..] {
            cond.passed = false;
        }
        v.notes.push("genie variances are complex: the Riccati discriminant is negative".into());
    }
    v.check("k1_nonnegative", "k1 >= 0", c.k1, c.k1, false);
    v.check("k2_nonnegative", "k2 >= 0", c.k2, c.k2, false);
    let mut genie = None;
    let mut o = None;
    let mut upper = None;
    if c.existence_ok && c.sigma1_sq.is_finite() && c.sigma2_sq.is_finite() {
        let g = GenieParameters { a1: scalar(c.a1), a2: scalar(c.a2), sigma1: scalar(c.sigma1_sq), sigma2: scalar(c.sigma2_sq) };
        (o, upper) = attach_upper(&mut v, std, &tin.pair, &g, tin.sum_rate, cfg);
        genie = Some(g);
    }
    v.finish(tin.sum_rate);
    let lifted = lift_pair(std, &tin.pair);
    Ok(MisoCertificate { verdict: v, standard: std.clone(), tin, conditions: Some(c), lifted, genie, o, upper })
}

/// Whether user 1 of a MISO standard form causes no interference, either
/// because it can steer a null (`theta_1 = pi/2`) or because `a_1 = 0`.
pub fn is_miso_z(std: &StandardMiso) -> bool {
    (std.theta[0] - FRAC_PI_2).abs() <= ANGLE_TOL || std.a[0] <= 0.0
}

/// Certifies a MISO Z channel in standard form.
///
/// User 1 transmits along `h_1` at full power. The certificate passes iff
/// `f_2^T S_2 f_2 <= h_2^T S_2 h_2` and
/// `cos^2 theta_2 >= a_2 [f_2^T S_2 h_2 (1 + h_2^T S_2 h_2) / (h_2^T S_2 h_2 (1 + f_2^T S_2 f_2))]^2`
/// at the TIN optimum.
pub fn certify_miso_z(std: &StandardMiso, cfg: &SolverConfig) -> Result<MisoCertificate> {
    if !is_miso_z(std) {
        return Err(Error::NotAZic("user 1 neither nulls nor lacks its cross link".into()));
    }
    let mut tin = solve_tin_miso(std, cfg);
    // With a_1 = 0 the steering angle of user 1 is irrelevant to receiver 2;
    // full power along h_1 is optimal for it.
    let h1 = std.h(1);
    tin.pair.s1 = &h1 * h1.transpose() * std.p[0];
    tin.sum_rate = tin_sum_rate(&std.channel(), &tin.pair);
    let (h2, f2) = (std.h(2), std.f(2));
    let s2 = &tin.pair.s2;
    let hsh = quad(&h2, s2, &h2);
    let fsf = quad(&f2, s2, &f2);
    let fsh = quad(&f2, s2, &h2);
    let c1 = hsh - fsf;
    let ratio = if hsh > 0.0 { fsh * (1.0 + hsh) / (hsh * (1.0 + fsf)) } else { 0.0 };
    let c2 = std.theta[1].cos().powi(2) - std.a[1] * ratio * ratio;
    let mut v = NoisyVerdict::new();
    v.check("z_cross_below_direct", "f2^T S2 f2 <= h2^T S2 h2", c1, c1, true);
    v.check("z_angle_bound", "cos^2 theta2 >= a2 (f2^T S2 h2 (1 + h2^T S2 h2) / (h2^T S2 h2 (1 + f2^T S2 f2)))^2", c2, c2, true);
    v.finish(tin.sum_rate);
    let lifted = lift_pair(std, &tin.pair);
    Ok(MisoCertificate { verdict: v, standard: std.clone(), tin, conditions: None, lifted, genie: None, o: None, upper: None })
}

/// Rate split of user 2 in a MISO Z channel into private and common parts.
#[derive(Debug, Clone, PartialEq)]
pub struct HkSplit {
    /// Private-message covariance, treated as noise at receiver 1.
    pub sp: Mat,
    /// Common-message covariance, decoded at receiver 1.
    pub sc: Mat,
}

/// Han-Kobayashi sum rate of a MISO Z channel at a given split:
/// `min(c1 + c2, c3)` with
/// `c1 = 1/2 log(1 + P1 / (1 + f2^T Sp f2))`,
/// `c2 = 1/2 log(1 + h2^T (Sp + Sc) h2)` and
/// `c3 = 1/2 log(1 + h2^T Sp h2) + 1/2 log(1 + (P1 + f2^T Sc f2) / (1 + f2^T Sp f2))`.
pub fn hk_sum_rate_miso_z(std: &StandardMiso, split: &HkSplit) -> Result<f64> {
    if !is_miso_z(std) {
        return Err(Error::NotAZic("Han-Kobayashi rate is defined for MISO Z channels".into()));
    }
    let psd = |m: &Mat| min_eig(m) >= -1e-9 * (1.0 + m.trace().abs());
    let tr = split.sp.trace() + split.sc.trace();
    if split.sp.shape() != (2, 2) || split.sc.shape() != (2, 2) {
        return Err(Error::InfeasibleSplit("split covariances must be 2x2".into()));
    }
    if !psd(&split.sp) || !psd(&split.sc) {
        return Err(Error::InfeasibleSplit("split covariances must be positive semidefinite".into()));
    }
    if tr > std.p[1] * (1.0 + 1e-9) {
        return Err(Error::InfeasibleSplit(format!("tr(Sp + Sc) = {tr} exceeds P2 = {}", std.p[1])));
    }
    Ok(hk_value(std, &split.sp, &split.sc))
}

fn hk_value(std: &StandardMiso, sp: &Mat, sc: &Mat) -> f64 {
    let (h2, f2) = (std.h(2), std.f(2));
    let p1 = std.p[0];
    let fpf = quad(&f2, sp, &f2);
    let c1 = 0.5 * (1.0 + p1 / (1.0 + fpf)).ln();
    let c2 = 0.5 * (1.0 + quad(&h2, &(sp + sc), &h2)).ln();
    let c3 = 0.5 * (1.0 + quad(&h2, sp, &h2)).ln() + 0.5 * (1.0 + (p1 + quad(&f2, sc, &f2)) / (1.0 + fpf)).ln();
    (c1 + c2).min(c3)
}

/// Best Han-Kobayashi split found by search and its sum rate.
#[derive(Debug, Clone)]
pub struct HkWitness {
    /// The split.
    pub split: HkSplit,
    /// Its sum rate, nats.
    pub sum_rate: f64,
    /// Fraction of user 2's power given to the private part.
    pub private_fraction: f64,
    /// Direction angles of the private and common beams.
    pub angles: [f64; 2],
}

fn rank_one_split(p: f64, x: [f64; 3]) -> (Mat, Mat) {
    let [b, u, w] = x;
    let pu = Vect::from_vec(vec![u.cos(), u.sin()]);
    let cw = Vect::from_vec(vec![w.cos(), w.sin()]);
    (&pu * pu.transpose() * (p * b), &cw * cw.transpose() * (p * (1.0 - b)))
}

/// Searches rank-one private/common splits of user 2's power.
///
/// The split is `Sp = b P2 p p^T`, `Sc = (1 - b) P2 c c^T` with unit
/// directions `p`, `c` at angles in `[0, pi)`. A grid over `(b, angle_p,
/// angle_c)` is refined by a bounded compass search.
pub fn hk_witness(std: &StandardMiso) -> Result<HkWitness> {
    if !is_miso_z(std) {
        return Err(Error::NotAZic("Han-Kobayashi rate is defined for MISO Z channels".into()));
    }
    const NB: usize = 40;
    const NA: usize = 90;
    let p = std.p[1];
    let eval = |x: [f64; 3]| {
        let (sp, sc) = rank_one_split(p, x);
        hk_value(std, &sp, &sc)
    };
    let mut best = ([1.0, 0.0, 0.0], f64::NEG_INFINITY);
    for ib in 0..=NB {
        for iu in 0..NA {
            for iw in 0..NA {
                let x = [ib as f64 / NB as f64, PI * iu as f64 / NA as f64, PI * iw as f64 / NA as f64];
                let val = eval(x);
                if val > best.1 {
                    best = (x, val);
                }
            }
        }
    }
    let (mut x, mut val) = best;
    let mut step = [1.0 / NB as f64, PI / NA as f64, PI / NA as f64];
    while step.iter().any(|s| *s > 1e-12) {
        let mut improved = false;
        for d in 0..3 {
            for sign in [1.0, -1.0] {
                let mut cand = x;
                cand[d] += sign * step[d];
                if d == 0 {
                    cand[0] = cand[0].clamp(0.0, 1.0);
                }
                let v = eval(cand);
                if v > val {
                    x = cand;
                    val = v;
                    improved = true;
                }
            }
        }
        if !improved {
            step = step.map(|s| s * 0.5);
        }
    }
    let (sp, sc) = rank_one_split(p, x);
    Ok(HkWitness {
        split: HkSplit { sp, sc },
        sum_rate: val,
        private_fraction: x[0],
        angles: [x[1].rem_euclid(PI), x[2].rem_euclid(PI)],
    })
}

/// Real `2 x 2` matrix stored row-major, used on the hot path of the SIMO search.
#[derive(Debug, Clone, Copy, PartialEq)]
struct M2([f64; 4]);

impl M2 {
    const I: M2 = M2([1.0, 0.0, 0.0, 1.0]);

    fn to_mat(self) -> Mat {
        Mat::from_row_slice(2, 2, &self.0)
    }

    fn outer(u: [f64; 2], w: [f64; 2]) -> M2 {
        M2([u[0] * w[0], u[0] * w[1], u[1] * w[0], u[1] * w[1]])
    }

    fn t(self) -> M2 {
        let [a, b, c, d] = self.0;
        M2([a, c, b, d])
    }

    fn mul(self, o: M2) -> M2 {
        let [a, b, c, d] = self.0;
        let [e, f, g, h] = o.0;
        M2([a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h])
    }

    fn add(self, o: M2) -> M2 {
        let [a, b, c, d] = self.0;
        let [e, f, g, h] = o.0;
        M2([a + e, b + f, c + g, d + h])
    }

    fn sub(self, o: M2) -> M2 {
        let [a, b, c, d] = self.0;
        let [e, f, g, h] = o.0;
        M2([a - e, b - f, c - g, d - h])
    }

    fn scale(self, s: f64) -> M2 {
        M2(self.0.map(|x| x * s))
    }

    fn apply(self, v: [f64; 2]) -> [f64; 2] {
        let [a, b, c, d] = self.0;
        [a * v[0] + b * v[1], c * v[0] + d * v[1]]
    }

    /// Eigenvalues `(min, max)` of the symmetric part.
    fn sym_eig(self) -> (f64, f64) {
        let [a, b, c, d] = self.0;
        let off = 0.5 * (b + c);
        let mean = 0.5 * (a + d);
        let rad = (0.25 * (a - d) * (a - d) + off * off).sqrt();
        (mean - rad, mean + rad)
    }

    /// `M^{-1/2}` of a symmetric matrix, or `None` unless it is positive definite.
    fn inv_sqrt_pd(self) -> Option<M2> {
        let [a, b, _, d] = self.0;
        let det = a * d - b * b;
        let tr = a + d;
        if !(det > 1e-14 && tr > 0.0) {
            return None;
        }
        // sqrt(M) = (M + s I) / t with s = sqrt(det), t = sqrt(tr + 2 s).
        let s = det.sqrt();
        let t = (tr + 2.0 * s).sqrt();
        let root = M2([(a + s) / t, b / t, b / t, (d + s) / t]);
        let [p, q, _, r] = root.0;
        let rdet = p * r - q * q;
        Some(M2([r / rdet, -q / rdet, -q / rdet, p / rdet]))
    }
}

/// Radii of `Phi_1`, `Phi_2` for `2 x 2` genie correlations, or `None` when
/// `I - A1^T A1 - A2 A2^T` or `I - A1 A1^T - A2^T A2` is not positive definite.
fn radii_2x2(a1: M2, a2: M2) -> Option<(f64, f64)> {
    let m1 = M2::I.sub(a1.t().mul(a1)).sub(a2.mul(a2.t()));
    let k1 = m1.inv_sqrt_pd()?;
    let m2 = M2::I.sub(a1.mul(a1.t())).sub(a2.t().mul(a2));
    let k2 = m2.inv_sqrt_pd()?;
    let (l1, u1) = k1.mul(a1.t()).mul(a2.t()).mul(k1).sym_eig();
    let (l2, u2) = k2.mul(a2.t()).mul(a1.t()).mul(k2).sym_eig();
    Some((l1.abs().max(u1.abs()), l2.abs().max(u2.abs())))
}

/// Number of directions per user scanned by the SIMO search.
pub const SIMO_DIRECTIONS: usize = 360;

/// Candidate pair of genie correlations for a SIMO channel.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimoCandidate {
    /// How the candidate was produced.
    pub label: String,
    /// Direction angles of `v_1`, `v_2`.
    pub angles: [f64; 2],
    /// `radius(Phi_1)`, infinite when the PD requirements fail.
    pub radius1: f64,
    /// `radius(Phi_2)`, infinite when the PD requirements fail.
    pub radius2: f64,
}

impl SimoCandidate {
    /// Smaller of the two radii.
    pub fn best_radius(&self) -> f64 {
        self.radius1.min(self.radius2)
    }
}

/// Result of a SIMO certification on the standard form.
#[derive(Debug, Clone)]
pub struct SimoCertificate {
    /// Pass/fail with every checked condition.
    pub verdict: NoisyVerdict,
    /// Standard form the conditions were evaluated on.
    pub standard: StandardSimo,
    /// The simple candidate `v_i = N_i h_i`.
    pub simple: SimoCandidate,
    /// Best candidate of the direction search.
    pub best: SimoCandidate,
    /// Genie built from the passing candidate.
    pub genie: Option<GenieParameters>,
    /// Riccati solution for that genie.
    pub riccati: Option<RiccatiSolution>,
    /// Sum rate at full power, the capacity when the verdict passes.
    pub full_power_rate: f64,
}

struct SimoFamily {
    h: [[f64; 2]; 2],
    f: [[f64; 2]; 2],
    n_inv: [M2; 2],
    n: [M2; 2],
}

impl SimoFamily {
    fn new(std: &StandardSimo) -> SimoFamily {
        let v = |x: Vect| [x[0], x[1]];
        let h = [v(std.h(1)), v(std.h(2))];
        let f = [v(std.f(1)), v(std.f(2))];
        // Receiver i hears transmitter j through f_j.
        let n = [
            M2::I.add(M2::outer(f[1], f[1]).scale(std.p[1])),
            M2::I.add(M2::outer(f[0], f[0]).scale(std.p[0])),
        ];
        let inv = |m: M2| {
            let [a, b, c, d] = m.0;
            let det = a * d - b * c;
            M2([d / det, -b / det, -c / det, a / det])
        };
        SimoFamily { h, f, n_inv: [inv(n[0]), inv(n[1])], n }
    }

    /// `A_i = v f_i^T / (h_i^T N_i^{-1} v)`, which satisfies the Markov
    /// condition `A_i^T N_i^{-1} h_i = f_i` for every admissible `v`.
    fn a(&self, i: usize, v: [f64; 2]) -> Option<M2> {
        let w = self.n_inv[i].apply(v);
        let den = self.h[i][0] * w[0] + self.h[i][1] * w[1];
        if den.abs() < 1e-12 {
            return None;
        }
        Some(M2::outer(v, self.f[i]).scale(1.0 / den))
    }

    fn simple_direction(&self, i: usize) -> f64 {
        let v = self.n[i].apply(self.h[i]);
        v[1].atan2(v[0]).rem_euclid(PI)
    }

    fn a_at(&self, i: usize, angle: f64) -> Option<M2> {
        self.a(i, [angle.cos(), angle.sin()])
    }

    fn evaluate(&self, angles: [f64; 2]) -> (f64, f64) {
        match (self.a_at(0, angles[0]), self.a_at(1, angles[1])) {
            (Some(a1), Some(a2)) => radii_2x2(a1, a2).unwrap_or((f64::INFINITY, f64::INFINITY)),
            _ => (f64::INFINITY, f64::INFINITY),
        }
    }

    fn candidate(&self, label: &str, angles: [f64; 2]) -> SimoCandidate {
        let (radius1, radius2) = self.evaluate(angles);
        SimoCandidate { label: label.to_string(), angles, radius1, radius2 }
    }
}

/// Searches the direction family for the smallest `min(radius(Phi_1), radius(Phi_2))`.
///
/// The simple candidate is tried first. Otherwise `SIMO_DIRECTIONS`
/// directions per user over `[0, pi)` are scanned (the sign of `v_i` does
/// not change `A_i`), stopping at the first pass, and the best grid point
/// is refined by a compass search.
fn simo_search(fam: &SimoFamily) -> (SimoCandidate, SimoCandidate) {
    let simple = fam.candidate("simple", [fam.simple_direction(0), fam.simple_direction(1)]);
    if simple.best_radius() <= 0.5 {
        return (simple.clone(), simple);
    }
    let n = SIMO_DIRECTIONS;
    let angle = |k: usize| PI * k as f64 / n as f64;
    let a1s: Vec<Option<M2>> = (0..n).map(|k| fam.a_at(0, angle(k))).collect();
    let a2s: Vec<Option<M2>> = (0..n).map(|k| fam.a_at(1, angle(k))).collect();
    let mut best = (simple.angles, simple.best_radius());
    'scan: for (k1, a1) in a1s.iter().enumerate() {
        let Some(a1) = a1 else { continue };
        for (k2, a2) in a2s.iter().enumerate() {
            let Some(a2) = a2 else { continue };
            if let Some((r1, r2)) = radii_2x2(*a1, *a2) {
                let r = r1.min(r2);
                if r < best.1 {
                    best = ([angle(k1), angle(k2)], r);
                    if r <= 0.5 {
                        break 'scan;
                    }
                }
            }
        }
    }
    let (mut x, mut val) = best;
    if val > 0.5 && val.is_finite() {
        let mut step = [PI / n as f64; 2];
        while step[0] > 1e-10 && val > 0.5 {
            let mut improved = false;
            for d in 0..2 {
                for sign in [1.0, -1.0] {
                    let mut cand = x;
                    cand[d] += sign * step[d];
                    let (r1, r2) = fam.evaluate(cand);
                    if r1.min(r2) < val {
                        x = cand;
                        val = r1.min(r2);
                        improved = true;
                    }
                }
            }
            if !improved {
                step = step.map(|s| s * 0.5);
            }
        }
    }
    let best = fam.candidate("direction search", [x[0].rem_euclid(PI), x[1].rem_euclid(PI)]);
    (simple, best)
}

fn full_power_rate(std: &StandardSimo) -> f64 {
    let pair = CovariancePair { s1: Mat::from_element(1, 1, std.p[0]), s2: Mat::from_element(1, 1, std.p[1]) };
    let (r1, r2) = tin_rates(&std.channel(), &pair);
    r1 + r2
}

/// Radius test of the SIMO condition without building the genie.
///
/// Returns the best candidate found; the channel has noisy interference
/// when its smaller radius is at most one half.
pub fn simo_gate(std: &StandardSimo) -> SimoCandidate {
    simo_search(&SimoFamily::new(std)).1
}

/// Certifies a SIMO channel in standard form.
///
/// Passes iff some `A_i` in the direction family keeps both
/// `I - A1^T A1 - A2 A2^T` and `I - A1 A1^T - A2^T A2` positive definite
/// and makes `radius(Phi_1) <= 1/2` or `radius(Phi_2) <= 1/2`. The sum
/// capacity is then the TIN rate at full power.
pub fn certify_simo(std: &StandardSimo) -> SimoCertificate {
    let fam = SimoFamily::new(std);
    let (simple, best) = simo_search(&fam);
    let mut v = NoisyVerdict::new();
    let chosen = if simple.best_radius() <= 0.5 { &simple } else { &best };
    v.push(
        "inner_pd",
        "I - A1^T A1 - A2 A2^T > 0 and I - A1 A1^T - A2^T A2 > 0",
        chosen.best_radius(),
        0.0,
        chosen.best_radius().is_finite(),
        true,
    );
    v.check("radius_phi1", "radius(Phi_1) <= 1/2", chosen.radius1, 0.5 - chosen.radius1, false);
    v.check("radius_phi2", "radius(Phi_2) <= 1/2", chosen.radius2, 0.5 - chosen.radius2, false);
    let r = chosen.best_radius();
    v.push("existence_gate", "radius(Phi_1) <= 1/2 or radius(Phi_2) <= 1/2", r, 0.5 - r, r <= 0.5, true);
    v.notes.push(format!("A_i from the {} candidate", chosen.label));
    let mut genie = None;
    let mut riccati = None;
    if r <= 0.5 {
        let a1 = fam.a_at(0, chosen.angles[0]).expect("finite candidate").to_mat();
        let a2 = fam.a_at(1, chosen.angles[1]).expect("finite candidate").to_mat();
        match solve_sigma(&a1, &a2) {
            Ok(sol) => {
                genie = Some(GenieParameters { a1, a2, sigma1: sol.sigma1.clone(), sigma2: sol.sigma2.clone() });
                riccati = Some(sol);
            }
            Err(e) => v.notes.push(format!("Riccati solve failed: {e}")),
        }
    }
    let rate = full_power_rate(std);
    v.finish(rate);
    SimoCertificate { verdict: v, standard: std.clone(), simple, best, genie, riccati, full_power_rate: rate }
}

/// Maximises the upper bound for a passing SIMO certificate's genie and
/// records the gap to the full-power rate as an informational condition.
pub fn simo_upper_check(cert: &mut SimoCertificate, cfg: &SolverConfig) -> Option<UpperSolution> {
    let g = cert.genie.as_ref()?;
    let up = solve_upper(&cert.standard.channel(), g, cfg).ok()?;
    let lower = cert.full_power_rate;
    let gap = up.value - lower;
    let tol = REL_TOL * (1.0 + lower);
    cert.verdict.push("bound_gap", "|upper - lower| <= 1e-6 (1 + lower)", gap, tol - gap.abs(), gap.abs() <= tol, false);
    Some(up)
}

/// Whether receiver 2 of a SIMO standard form sees no interference, either
/// because it can null it (`varphi_2 = pi/2`) or because `a_1 = 0`.
pub fn is_simo_z(std: &StandardSimo) -> bool {
    (std.varphi[1] - FRAC_PI_2).abs() <= ANGLE_TOL || std.a[0] <= 0.0
}

/// Certifies a SIMO Z channel: passes iff `a_2 <= 1`, with capacity
/// `1/2 log(1 + P1 h1^T (I + P2 f2 f2^T)^{-1} h1) + 1/2 log(1 + P2)`.
pub fn certify_simo_z(std: &StandardSimo) -> Result<(NoisyVerdict, f64)> {
    if !is_simo_z(std) {
        return Err(Error::NotAZic("receiver 2 neither nulls nor lacks interference".into()));
    }
    let mut v = NoisyVerdict::new();
    let a2 = std.a[1];
    v.push("z_weak_cross", "a2 <= 1", a2, 1.0 - a2, a2 <= 1.0 + 1e-12, true);
    let (h1, f2) = (std.h(1), std.f(2));
    let n = eye(2) + &f2 * f2.transpose() * std.p[1];
    let n_inv = crate::matrix_kit::inv_pd(&n);
    let capacity = 0.5 * (1.0 + std.p[0] * quad(&h1, &n_inv, &h1)).ln() + 0.5 * (1.0 + std.p[1]).ln();
    v.finish(capacity);
    Ok((v, capacity))
}

/// Closed-form noisy-interference test for a symmetric SIMO channel with
/// angle `theta` in `[0, pi/2]`, gain ratio `a` and power `p`.
///
/// With `c = cos theta / (1 + a p)`: if `c <= sin theta` the condition is
/// `a <= sin^2 theta`, otherwise `c^2 - 2 sqrt(a) c + sin^2 theta >= 0`.
pub fn symmetric_simo_closed_form(theta: f64, a: f64, p: f64) -> bool {
    let c = theta.cos() / (1.0 + a * p);
    let s = theta.sin();
    if c <= s {
        a <= s * s
    } else {
        c * c - 2.0 * a.sqrt() * c + s * s >= 0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certifier::a_candidates;
    use crate::matrix_kit::{max_abs_diff, numerical_radius};
    use crate::tin_bound::miso_beam_covariance;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn example2() -> StandardMiso {
        StandardMiso::from_parameters([0.3833 * PI, 0.3753 * PI], [0.1588, 0.2944], [3.7100, 3.2789])
    }

    #[test]
    fn zero_correlation_gives_unit_variances() {
        let std = StandardMiso::from_parameters([0.3 * PI, 0.35 * PI], [0.2, 0.3], [2.0, 3.0]);
        let pair = CovariancePair { s1: miso_beam_covariance(2.0, 0.0, 1.0), s2: miso_beam_covariance(3.0, 0.0, 1.0) };
        let c = miso_conditions(&std, &pair).unwrap();
        assert_eq!((c.a1, c.a2), (0.0, 0.0));
        assert_eq!((c.sigma1_sq, c.sigma2_sq), (1.0, 1.0));
        assert!(c.existence_ok);
    }

    #[test]
    fn variances_solve_the_scalar_riccati_pair() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut checked = 0;
        for _ in 0..300 {
            let std = StandardMiso::from_parameters(
                [rng.gen_range(0.05..1.5), rng.gen_range(0.05..1.5)],
                [rng.gen_range(0.01..1.0), rng.gen_range(0.01..1.0)],
                [rng.gen_range(0.5..5.0), rng.gen_range(0.5..5.0)],
            );
            let phi = [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];
            let pair = CovariancePair {
                s1: miso_beam_covariance(std.p[0], phi[0] * (FRAC_PI_2 - std.theta[0]).abs(), std.rho(1)),
                s2: miso_beam_covariance(std.p[1], phi[1] * (FRAC_PI_2 - std.theta[1]).abs(), std.rho(2)),
            };
            let c = miso_conditions(&std, &pair).unwrap();
            if c.existence_ok {
                checked += 1;
                assert!((c.sigma1_sq - (1.0 - c.a2 * c.a2 / c.sigma2_sq)).abs() < 1e-10);
                assert!((c.sigma2_sq - (1.0 - c.a1 * c.a1 / c.sigma1_sq)).abs() < 1e-10);
            }
            // Scalar correlations agree with the matrix Markov solve.
            let ch = std.channel();
            let m1 = a_candidates(&ch, &pair, 1).pop().unwrap();
            let m2 = a_candidates(&ch, &pair, 2).pop().unwrap();
            assert!((m1.a[(0, 0)] - c.a1).abs() < 1e-9 * (1.0 + c.a1.abs()));
            assert!((m2.a[(0, 0)] - c.a2).abs() < 1e-9 * (1.0 + c.a2.abs()));
        }
        assert!(checked > 50);
    }

    #[test]
    fn example_two_conditions() {
        let cert = certify_miso(&example2(), &SolverConfig::default()).unwrap();
        let c = cert.conditions.as_ref().unwrap();
        assert!((c.a1 - 0.0992).abs() < 1e-3 && (c.a2 - 0.1156).abs() < 1e-3);
        assert!((c.bar_sigma1_sq - 0.6277).abs() < 1e-3 && (c.bar_sigma2_sq - 0.4643).abs() < 1e-3);
        assert!(cert.verdict.passed);
        assert!((cert.tin.sum_rate - 1.4543).abs() < 1e-3);
        let gap = cert.verdict.condition("bound_gap").unwrap();
        assert!(gap.passed, "{gap:?}");
    }

    #[test]
    fn excessive_correlation_fails_existence() {
        let std = StandardMiso::from_parameters([0.2 * PI, 0.2 * PI], [3.0, 3.0], [2.0, 2.0]);
        let phi = (FRAC_PI_2 - 0.2 * PI) * 0.5;
        let pair = CovariancePair { s1: miso_beam_covariance(2.0, phi, 1.0), s2: miso_beam_covariance(2.0, phi, 1.0) };
        let c = miso_conditions(&std, &pair).unwrap();
        assert!(c.a1.abs() + c.a2.abs() > 1.2, "{c:?}");
        let cert = certify_miso_at(&std, solve_tin_miso(&std, &SolverConfig::default()), &SolverConfig::default()).unwrap();
        let e = cert.verdict.condition("existence").unwrap();
        assert!(!cert.verdict.passed && !e.passed);
    }

    #[test]
    fn miso_hypotheses_route_to_z_channel() {
        let std = StandardMiso::from_parameters([FRAC_PI_2, PI / 4.0], [0.0, 0.1], [1.0, 10.0]);
        assert!(matches!(certify_miso(&std, &SolverConfig::default()), Err(Error::HypothesisViolated(_))));
        let general = example2();
        assert!(matches!(certify_miso_z(&general, &SolverConfig::default()), Err(Error::NotAZic(_))));
    }

    #[test]
    fn miso_z_trivial_and_counter_example() {
        let cfg = SolverConfig::default();
        let clean = StandardMiso::from_parameters([FRAC_PI_2, PI / 4.0], [0.0, 0.0], [1.0, 10.0]);
        assert!(certify_miso_z(&clean, &cfg).unwrap().verdict.passed);
        let ex5 = StandardMiso::from_parameters([FRAC_PI_2, PI / 4.0], [0.0, 0.4], [1.0, 10.0]);
        let cert = certify_miso_z(&ex5, &cfg).unwrap();
        assert!(!cert.verdict.passed);
        assert!((cert.tin.sum_rate - 1.3725).abs() < 1e-3);
    }

    #[test]
    fn miso_z_pass_set_is_an_interval_in_a2() {
        let cfg = SolverConfig::default();
        let pass = |a2: f64| {
            let std = StandardMiso::from_parameters([FRAC_PI_2, PI / 4.0], [0.0, a2], [1.0, 10.0]);
            certify_miso_z(&std, &cfg).unwrap().verdict.passed
        };
        let flags: Vec<bool> = (0..=40).map(|k| pass(k as f64 * 0.01)).collect();
        let first_fail = flags.iter().position(|p| !p).unwrap();
        assert!(first_fail > 0 && flags[first_fail..].iter().all(|p| !p), "{flags:?}");
    }

    #[test]
    fn hk_split_reduces_to_tin_and_witness_dominates() {
        let ex5 = StandardMiso::from_parameters([FRAC_PI_2, PI / 4.0], [0.0, 0.4], [1.0, 10.0]);
        let tin = certify_miso_z(&ex5, &SolverConfig::default()).unwrap().tin;
        let split = HkSplit { sp: tin.pair.s2.clone(), sc: Mat::zeros(2, 2) };
        let tin_like = hk_sum_rate_miso_z(&ex5, &split).unwrap();
        assert!((tin_like - tin.sum_rate).abs() < 1e-9);
        let w = hk_witness(&ex5).unwrap();
        assert!(w.sum_rate >= 1.4093 - 1e-3 && w.sum_rate > tin.sum_rate);
        let all_common = HkSplit { sp: Mat::zeros(2, 2), sc: &ex5.h(2) * ex5.h(2).transpose() * 10.0 };
        assert!(hk_sum_rate_miso_z(&ex5, &all_common).unwrap() <= w.sum_rate + 1e-12);
        let over = HkSplit { sp: eye(2) * 6.0, sc: Mat::zeros(2, 2) };
        assert!(matches!(hk_sum_rate_miso_z(&ex5, &over), Err(Error::InfeasibleSplit(_))));
    }

    #[test]
    fn fast_radii_match_general_routine() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..500 {
            let a1 = M2([0; 4].map(|_| rng.gen_range(-0.6..0.6)));
            let a2 = M2([0; 4].map(|_| rng.gen_range(-0.6..0.6)));
            let general = crate::certifier::phi_radii(&a1.to_mat(), &a2.to_mat());
            match (radii_2x2(a1, a2), general) {
                (Some((r1, r2)), Ok((g1, g2))) => assert!((r1 - g1).abs() < 1e-9 && (r2 - g2).abs() < 1e-9),
                (None, Err(_)) => {}
                (fast, slow) => {
                    // Disagreement is only allowed right at the PD boundary.
                    let m1 = eye(2) - a1.to_mat().transpose() * a1.to_mat() - a2.to_mat() * a2.to_mat().transpose();
                    let m2 = eye(2) - a1.to_mat() * a1.to_mat().transpose() - a2.to_mat().transpose() * a2.to_mat();
                    let m = crate::matrix_kit::min_eig(&m1).min(crate::matrix_kit::min_eig(&m2));
                    assert!(m.abs() < 1e-6, "{fast:?} {slow:?}");
                }
            }
        }
    }

    #[test]
    fn direction_family_satisfies_markov_condition() {
        let std = StandardSimo::from_parameters([0.3 * PI, 0.6 * PI], [0.5, 0.3], [2.0, 1.5]);
        let fam = SimoFamily::new(&std);
        for k in 0..36 {
            let ang = PI * k as f64 / 36.0;
            for i in 0..2 {
                if let Some(a) = fam.a_at(i, ang) {
                    let back = a.t().mul(fam.n_inv[i]).apply(fam.h[i]);
                    assert!((back[0] - fam.f[i][0]).abs() < 1e-9 && (back[1] - fam.f[i][1]).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn simo_without_cross_link_always_passes() {
        let std = StandardSimo::from_parameters([0.2 * PI, 0.7 * PI], [0.0, 0.9], [3.0, 2.0]);
        let cert = certify_simo(&std);
        assert!(cert.verdict.passed);
        assert_eq!(cert.simple.radius1, 0.0);
        assert_eq!(cert.simple.radius2, 0.0);
    }

    #[test]
    fn passing_simo_genie_is_tight() {
        let std = StandardSimo::from_parameters([0.35 * PI, 0.55 * PI], [0.2, 0.15], [2.0, 1.5]);
        let mut cert = certify_simo(&std);
        assert!(cert.verdict.passed);
        let g = cert.genie.clone().unwrap();
        let a1 = g.a1.clone();
        assert!(numerical_radius(&a1).is_ok());
        let up = simo_upper_check(&mut cert, &SolverConfig::default()).unwrap();
        assert!((up.value - cert.full_power_rate).abs() < 1e-6 * (1.0 + cert.full_power_rate));
        assert!((up.pair.s1[(0, 0)] - std.p[0]).abs() < 1e-6 && (up.pair.s2[(0, 0)] - std.p[1]).abs() < 1e-6);
    }

    #[test]
    fn simo_z_boundary() {
        let at = |a2: f64, f2_zero: bool| {
            let a = [0.0, if f2_zero { 0.0 } else { a2 }];
            StandardSimo::from_parameters([0.3 * PI, 0.4 * PI], a, [2.0, 3.0])
        };
        assert!(certify_simo_z(&at(1.0, false)).unwrap().0.passed);
        assert!(!certify_simo_z(&at(1.5, false)).unwrap().0.passed);
        let (v, cap) = certify_simo_z(&at(0.0, true)).unwrap();
        assert!(v.passed);
        assert!((cap - (0.5 * 3.0f64.ln() + 0.5 * 4.0f64.ln())).abs() < 1e-12);
        let general = StandardSimo::from_parameters([0.3 * PI, 0.4 * PI], [0.2, 0.2], [2.0, 3.0]);
        assert!(matches!(certify_simo_z(&general), Err(Error::NotAZic(_))));
    }

    #[test]
    fn closed_form_branches() {
        for &a in &[0.5, 1.0, 1.01] {
            assert_eq!(symmetric_simo_closed_form(FRAC_PI_2, a, 2.0), a <= 1.0);
        }
        for &(a, p) in &[(0.01, 1.0), (0.2, 1.0), (0.05, 10.0)] {
            let expected = 1.0 >= 2.0 * f64::sqrt(a) * (1.0 + a * p);
            assert_eq!(symmetric_simo_closed_form(0.0, a, p), expected);
        }
    }

    #[test]
    fn closed_form_agrees_with_search_on_a_coarse_grid() {
        let mut disagreements = 0;
        for &p in &[0.5, 2.0, 10.0] {
            for i in 0..10 {
                for j in 0..10 {
                    let theta = FRAC_PI_2 * (i as f64 + 0.5) / 10.0;
                    let a = 1.2 * (j as f64 + 0.5) / 10.0;
                    let std = StandardSimo::from_parameters([theta, theta], [a, a], [p, p]);
                    let search = simo_gate(&std).best_radius() <= 0.5;
                    if search != symmetric_simo_closed_form(theta, a, p) {
                        disagreements += 1;
                    }
                }
            }
        }
        assert_eq!(disagreements, 0);
    }

    #[test]
    fn lifted_covariance_matches_identity_rotation() {
        let std = example2();
        let tin = solve_tin_miso(&std, &SolverConfig::default());
        let lifted = lift_pair(&std, &tin.pair);
        assert!(max_abs_diff(&lifted.s1, &tin.pair.s1) < 1e-15);
    }
}
