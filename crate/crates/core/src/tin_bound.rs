//! Treating-interference-as-noise (TIN) lower bound.
//!
//! With Gaussian inputs of covariances `S1`, `S2` and each receiver decoding
//! only its own message, the achievable rates are
//!
//! ```text
//! R1l = 1/2 log|I + H1 S1 H1^T (I + F2 S2 F2^T)^{-1}|
//! R2l = 1/2 log|I + H2 S2 H2^T (I + F1 S1 F1^T)^{-1}|
//! ```
//!
//! in nats. Maximising `R1l + R2l` over the trace-constrained PSD cone is
//! non-convex, so the solver runs projected gradient ascent from several
//! starts and attaches a KKT certificate to the best point found.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel_model::{MimoChannel, StandardMiso};
use crate::matrix_kit::{eye, frob, inv_pd, log_det_pd, min_eig, psd_project, sym_eig, symmetrize, Mat, Vect};

/// Eigenvalues below this fraction of the trace count as zero when ranks are reported.
pub const RANK_REL_TOL: f64 = 1e-6;

/// Input covariances of the two transmitters.
#[derive(Debug, Clone, PartialEq)]
pub struct CovariancePair {
    /// Covariance of transmitter 1, `t1 x t1`.
    pub s1: Mat,
    /// Covariance of transmitter 2, `t2 x t2`.
    pub s2: Mat,
}

impl CovariancePair {
    /// Covariance of user `i` (1-based).
    pub fn get(&self, i: usize) -> &Mat {
        if i == 1 {
            &self.s1
        } else {
            &self.s2
        }
    }

    /// Zero covariances matching the channel dimensions.
    pub fn zeros(ch: &MimoChannel) -> CovariancePair {
        CovariancePair { s1: Mat::zeros(ch.t(1), ch.t(1)), s2: Mat::zeros(ch.t(2), ch.t(2)) }
    }

    /// Full-power isotropic covariances `(P_i / t_i) I`.
    pub fn isotropic(ch: &MimoChannel) -> CovariancePair {
        CovariancePair {
            s1: eye(ch.t(1)) * (ch.p1 / ch.t(1) as f64),
            s2: eye(ch.t(2)) * (ch.p2 / ch.t(2) as f64),
        }
    }

    /// True when both matrices are symmetric PSD and within budget.
    pub fn is_feasible(&self, ch: &MimoChannel) -> bool {
        [(&self.s1, ch.p1), (&self.s2, ch.p2)].iter().all(|(s, p)| {
            frob(&(*s - s.transpose())) <= 1e-10 * (1.0 + frob(s)) && min_eig(s) >= -1e-10 && s.trace() <= p + 1e-9
        })
    }

    fn project(&self, ch: &MimoChannel) -> CovariancePair {
        CovariancePair { s1: psd_project(&self.s1, Some(ch.p1)), s2: psd_project(&self.s2, Some(ch.p2)) }
    }

    fn axpy(&self, t: f64, g: &CovariancePair) -> CovariancePair {
        CovariancePair { s1: &self.s1 + &g.s1 * t, s2: &self.s2 + &g.s2 * t }
    }

    fn sub(&self, other: &CovariancePair) -> CovariancePair {
        CovariancePair { s1: &self.s1 - &other.s1, s2: &self.s2 - &other.s2 }
    }

    fn dot(&self, other: &CovariancePair) -> f64 {
        self.s1.dot(&other.s1) + self.s2.dot(&other.s2)
    }

    fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }
}

/// Settings of the projected gradient ascent.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Number of starting points.
    pub restarts: usize,
    /// Iteration budget per start.
    pub max_iters: usize,
    /// Relative stopping tolerance on the projected-gradient norm.
    pub grad_tol: f64,
    /// Backtracking shrink factor.
    pub step_shrink: f64,
    /// Armijo sufficient-increase constant.
    pub armijo_c: f64,
    /// Seed for the random starts.
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { restarts: 16, max_iters: 5000, grad_tol: 1e-8, step_shrink: 0.5, armijo_c: 1e-4, seed: 0 }
    }
}

/// `(R1l, R2l)` in nats.
pub fn tin_rates(ch: &MimoChannel, s: &CovariancePair) -> (f64, f64) {
    let rate = |h: &Mat, si: &Mat, f: &Mat, sj: &Mat| {
        let n = eye(h.nrows()) + f * sj * f.transpose();
        let d = &n + h * si * h.transpose();
        0.5 * (log_det_pd(&d) - log_det_pd(&n))
    };
    (rate(&ch.h1, &s.s1, &ch.f2, &s.s2), rate(&ch.h2, &s.s2, &ch.f1, &s.s1))
}

/// TIN sum rate in nats.
pub fn tin_sum_rate(ch: &MimoChannel, s: &CovariancePair) -> f64 {
    let (a, b) = tin_rates(ch, s);
    a + b
}

/// Partial derivatives of the TIN rates with respect to the covariances.
#[derive(Debug, Clone)]
pub struct TinGradients {
    /// `dR1l/dS1`, PSD.
    pub d1_s1: Mat,
    /// `dR1l/dS2`, negative semidefinite.
    pub d1_s2: Mat,
    /// `dR2l/dS1`, negative semidefinite.
    pub d2_s1: Mat,
    /// `dR2l/dS2`, PSD.
    pub d2_s2: Mat,
}

impl TinGradients {
    /// Gradient of the sum rate.
    pub fn sum(&self) -> CovariancePair {
        CovariancePair { s1: &self.d1_s1 + &self.d2_s1, s2: &self.d1_s2 + &self.d2_s2 }
    }
}

/// Closed-form gradients of `R1l` and `R2l`.
///
/// With `N1 = I + F2 S2 F2^T` and `D1 = N1 + H1 S1 H1^T`:
/// `dR1l/dS1 = 1/2 H1^T D1^{-1} H1` and
/// `dR1l/dS2 = -1/2 F2^T (N1^{-1} - D1^{-1}) F2`; user 2 by symmetry.
pub fn tin_gradients(ch: &MimoChannel, s: &CovariancePair) -> TinGradients {
    let parts = |h: &Mat, si: &Mat, f: &Mat, sj: &Mat| {
        let n = eye(h.nrows()) + f * sj * f.transpose();
        let d = &n + h * si * h.transpose();
        let (n_inv, d_inv) = (inv_pd(&n), inv_pd(&d));
        let own = symmetrize(&(h.transpose() * &d_inv * h * 0.5));
        let other = symmetrize(&(f.transpose() * (n_inv - d_inv) * f * -0.5));
        (own, other)
    };
    let (d1_s1, d1_s2) = parts(&ch.h1, &s.s1, &ch.f2, &s.s2);
    let (d2_s2, d2_s1) = parts(&ch.h2, &s.s2, &ch.f1, &s.s1);
    TinGradients { d1_s1, d1_s2, d2_s1, d2_s2 }
}

/// Outcome of one projected gradient ascent run.
#[derive(Debug, Clone)]
pub struct AscentOutcome {
    /// Final iterate.
    pub pair: CovariancePair,
    /// Objective at the final iterate.
    pub value: f64,
    /// Projected-gradient norm at the final iterate.
    pub residual: f64,
    /// Iterations used.
    pub iterations: usize,
    /// Whether the stopping rule was met.
    pub converged: bool,
}

/// Projected gradient ascent with Armijo backtracking on the PSD trace balls
/// of the channel.
///
/// Each iteration tries the step `1.0` and shrinks it until the Armijo
/// condition `f(S') >= f(S) + c <grad, S' - S>` holds. The stopping rule is
/// `||P(S + grad) - S|| <= grad_tol (1 + |f|)`.
pub fn projected_ascent<F, G>(ch: &MimoChannel, obj: F, grad: G, start: CovariancePair, cfg: &SolverConfig) -> AscentOutcome
where
    F: Fn(&CovariancePair) -> f64,
    G: Fn(&CovariancePair) -> CovariancePair,
{
    let mut s = start.project(ch);
    let mut f = obj(&s);
    let mut iterations = 0;
    loop {
        let g = grad(&s);
        let residual = s.axpy(1.0, &g).project(ch).sub(&s).norm();
        if residual <= cfg.grad_tol * (1.0 + f.abs()) {
            return AscentOutcome { pair: s, value: f, residual, iterations, converged: true };
        }
        if iterations >= cfg.max_iters {
            return AscentOutcome { pair: s, value: f, residual, iterations, converged: false };
        }
        iterations += 1;
        let mut t = 1.0;
        let mut accepted = None;
        while t > 1e-16 {
            let cand = s.axpy(t, &g).project(ch);
            let fc = obj(&cand);
            if fc >= f + cfg.armijo_c * g.dot(&cand.sub(&s)) {
                accepted = Some((cand, fc));
                break;
            }
            t *= cfg.step_shrink;
        }
        match accepted {
            Some((cand, fc)) => {
                s = cand;
                f = fc;
            }
            None => {
                // No ascent step survives round-off: the iterate is as
                // stationary as floating point allows.
                return AscentOutcome { pair: s, value: f, residual, iterations, converged: false };
            }
        }
    }
}

/// Multiplier certificate of the KKT conditions at a covariance pair.
#[derive(Debug, Clone)]
pub struct KktCertificate {
    /// Negated sum-rate gradient with respect to `S1`.
    pub g1: Mat,
    /// Negated sum-rate gradient with respect to `S2`.
    pub g2: Mat,
    /// Multiplier of the trace constraint of user 1.
    pub lambda1: f64,
    /// Multiplier of the trace constraint of user 2.
    pub lambda2: f64,
    /// Multiplier of the PSD constraint of user 1, `G1 + lambda1 I`.
    pub w1: Mat,
    /// Multiplier of the PSD constraint of user 2, `G2 + lambda2 I`.
    pub w2: Mat,
    /// Projected-gradient norm at the point.
    pub stationarity_residual: f64,
    /// Largest `|tr(S_i W_i)|`.
    pub complementarity_residual: f64,
    /// Largest negative part of the eigenvalues of `W_i`.
    pub psd_violation: f64,
    /// Largest gap between the trace-formula multiplier and the multiplier
    /// fitted on the range of `S_i` from `G_i S_i = -lambda_i S_i`.
    pub lambda_agreement: f64,
}

impl KktCertificate {
    /// Multiplier `lambda_i` (1-based).
    pub fn lambda(&self, i: usize) -> f64 {
        if i == 1 {
            self.lambda1
        } else {
            self.lambda2
        }
    }

    /// `W_i` (1-based).
    pub fn w(&self, i: usize) -> &Mat {
        if i == 1 {
            &self.w1
        } else {
            &self.w2
        }
    }
}

/// True when the trace constraint of a covariance is active.
pub fn trace_active(s: &Mat, p: f64) -> bool {
    s.trace() >= p * (1.0 - 1e-6)
}

/// Builds the KKT certificate at `s`.
///
/// `G_i` is the negated sum-rate gradient, `lambda_i = -tr(S_i G_i) / P_i`
/// when the budget is active and zero otherwise, and `W_i = G_i + lambda_i I`.
pub fn kkt_certificate(ch: &MimoChannel, s: &CovariancePair) -> KktCertificate {
    let grad = tin_gradients(ch, s).sum();
    let g1 = -grad.s1.clone();
    let g2 = -grad.s2.clone();
    let lam = |g: &Mat, si: &Mat, p: f64| if trace_active(si, p) { -(si * g).trace() / p } else { 0.0 };
    let lambda1 = lam(&g1, &s.s1, ch.p1);
    let lambda2 = lam(&g2, &s.s2, ch.p2);
    let w1 = &g1 + eye(g1.nrows()) * lambda1;
    let w2 = &g2 + eye(g2.nrows()) * lambda2;
    let stationarity_residual = s.axpy(1.0, &grad).project(ch).sub(s).norm();
    let complementarity_residual = (s.s1.clone() * &w1).trace().abs().max((s.s2.clone() * &w2).trace().abs());
    let psd_violation = (-min_eig(&w1)).max(-min_eig(&w2)).max(0.0);
    let fitted = |g: &Mat, si: &Mat, l: f64| {
        let ss = (si * si).trace();
        if ss <= 0.0 {
            return 0.0;
        }
        let fit = -(si * g * si).trace() / ss;
        (fit - l).abs()
    };
    let lambda_agreement = fitted(&g1, &s.s1, lambda1).max(fitted(&g2, &s.s2, lambda2));
    KktCertificate {
        g1,
        g2,
        lambda1,
        lambda2,
        w1,
        w2,
        stationarity_residual,
        complementarity_residual,
        psd_violation,
        lambda_agreement,
    }
}

/// Best covariance pair found by the multi-start ascent.
#[derive(Debug, Clone)]
pub struct TinSolution {
    /// Optimal covariances.
    pub pair: CovariancePair,
    /// TIN sum rate at `pair`, nats.
    pub sum_rate: f64,
    /// KKT certificate at `pair`.
    pub kkt: KktCertificate,
    /// Whether the winning run met the stopping rule.
    pub converged: bool,
    /// Iterations of the winning run.
    pub iterations: usize,
    /// Total iterations over all starts.
    pub total_iterations: usize,
    /// Other starts that reached the same value at a different point.
    pub alternates: usize,
}

fn random_start(rng: &mut ChaCha8Rng, t: usize, p: f64) -> Mat {
    let x = Mat::from_fn(t, t, |_, _| rng.gen_range(-1.0..1.0));
    let s = &x * x.transpose();
    let tr = s.trace();
    if tr <= 0.0 {
        return eye(t) * (p / t as f64);
    }
    s * (p * rng.gen_range(0.5..1.0) / tr)
}

fn dominant_start(h: &Mat, p: f64) -> Mat {
    let eig = sym_eig(&(h.transpose() * h));
    let v: Vect = eig.vectors.column(0).into_owned();
    &v * v.transpose() * p
}

/// Starting points: isotropic, dominant-eigenvector, then seeded random draws.
pub fn tin_starts(ch: &MimoChannel, cfg: &SolverConfig) -> Vec<CovariancePair> {
    let mut starts = vec![CovariancePair::isotropic(ch)];
    if cfg.restarts >= 2 {
        starts.push(CovariancePair { s1: dominant_start(&ch.h1, ch.p1), s2: dominant_start(&ch.h2, ch.p2) });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    while starts.len() < cfg.restarts.max(1) {
        let s1 = random_start(&mut rng, ch.t(1), ch.p1);
        let s2 = random_start(&mut rng, ch.t(2), ch.p2);
        starts.push(CovariancePair { s1, s2 });
    }
    starts
}

fn lexicographic(a: &Mat, b: &Mat) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Equal => continue,
            other => return other,
        }
    }
    std::cmp::Ordering::Equal
}

/// Maximises the TIN sum rate by multi-start projected gradient ascent.
///
/// Starts run in parallel and are merged deterministically: highest value,
/// then lowest stationarity residual, then the lexicographically smallest
/// vectorised `S1`. A run that misses the stopping rule is still returned
/// with `converged = false`.
pub fn solve_tin(ch: &MimoChannel, cfg: &SolverConfig) -> TinSolution {
    let starts = tin_starts(ch, cfg);
    let outcomes: Vec<AscentOutcome> = starts
        .into_par_iter()
        .map(|start| {
            projected_ascent(ch, |s| tin_sum_rate(ch, s), |s| tin_gradients(ch, s).sum(), start, cfg)
        })
        .collect();
    let total_iterations = outcomes.iter().map(|o| o.iterations).sum();
    let tie = |v: f64| 1e-10 * (1.0 + v.abs());
    let mut best = 0;
    for (k, o) in outcomes.iter().enumerate().skip(1) {
        let b = &outcomes[best];
        let better = if o.value > b.value + tie(b.value) {
            true
        } else if (o.value - b.value).abs() <= tie(b.value) {
            match o.residual.total_cmp(&b.residual) {
                std::cmp::Ordering::Less => true,
                std::cmp::Ordering::Equal => lexicographic(&o.pair.s1, &b.pair.s1).is_lt(),
                std::cmp::Ordering::Greater => false,
            }
        } else {
            false
        };
        if better {
            best = k;
        }
    }
    let winner = &outcomes[best];
    let alternates = outcomes
        .iter()
        .filter(|o| {
            (o.value - winner.value).abs() <= 1e-8 * (1.0 + winner.value.abs()) && o.pair.sub(&winner.pair).norm() > 1e-4
        })
        .count();
    let kkt = kkt_certificate(ch, &winner.pair);
    TinSolution {
        pair: winner.pair.clone(),
        sum_rate: winner.value,
        kkt,
        converged: winner.converged,
        iterations: winner.iterations,
        total_iterations,
        alternates,
    }
}

/// Optimum of the TIN problem on a MISO standard form.
#[derive(Debug, Clone)]
pub struct MisoTinSolution {
    /// Optimal steering angles `phi_i`.
    pub phi: [f64; 2],
    /// Rank-one optimal covariances.
    pub pair: CovariancePair,
    /// TIN sum rate, nats.
    pub sum_rate: f64,
}

/// Rank-one covariance `P [sin phi, rho cos phi]^T [sin phi, rho cos phi]`.
pub fn miso_beam_covariance(p: f64, phi: f64, rho: f64) -> Mat {
    let v = Vect::from_vec(vec![phi.sin(), rho * phi.cos()]);
    &v * v.transpose() * p
}

/// TIN sum rate of a MISO standard form as a function of the steering angles.
pub fn miso_tin_objective(std: &StandardMiso, phi: [f64; 2]) -> f64 {
    let [t1, t2] = std.theta;
    let [a1, a2] = std.a;
    let [p1, p2] = std.p;
    let (r1, r2) = (std.rho(1), std.rho(2));
    let s1 = (t1 + r1 * phi[0]).sin().powi(2);
    let s2 = (t2 + r2 * phi[1]).sin().powi(2);
    let i1 = a1 * p1 * phi[0].sin().powi(2);
    let i2 = a2 * p2 * phi[1].sin().powi(2);
    0.5 * (1.0 + p1 * s1 / (1.0 + i2)).ln() + 0.5 * (1.0 + p2 * s2 / (1.0 + i1)).ln()
}

/// Solves the two-angle beam-steering problem of a MISO standard form.
///
/// Each `phi_i` ranges over `[0, |pi/2 - theta_i|]`, between pointing away
/// from the interfered receiver and pointing at the intended one. A dense
/// grid locates the basin and a bounded compass search refines it.
pub fn solve_tin_miso(std: &StandardMiso, cfg: &SolverConfig) -> MisoTinSolution {
    const GRID: usize = 400;
    let upper = [
        (std::f64::consts::FRAC_PI_2 - std.theta[0]).abs(),
        (std::f64::consts::FRAC_PI_2 - std.theta[1]).abs(),
    ];
    let at = |k: usize, u: f64| u * k as f64 / GRID as f64;
    let mut best = ([0.0, 0.0], f64::NEG_INFINITY);
    for i in 0..=GRID {
        for j in 0..=GRID {
            let phi = [at(i, upper[0]), at(j, upper[1])];
            let v = miso_tin_objective(std, phi);
            if v > best.1 {
                best = (phi, v);
            }
        }
    }
    let (mut phi, mut value) = best;
    let mut step = [upper[0] / GRID as f64, upper[1] / GRID as f64];
    let mut iters = 0;
    while (step[0] > 1e-14 || step[1] > 1e-14) && iters < cfg.max_iters.max(100) * 10 {
        iters += 1;
        let mut improved = false;
        for d in 0..2 {
            for sign in [1.0, -1.0] {
                let mut cand = phi;
                cand[d] = (cand[d] + sign * step[d]).clamp(0.0, upper[d]);
                let v = miso_tin_objective(std, cand);
                if v > value {
                    phi = cand;
                    value = v;
                    improved = true;
                }
            }
        }
        if !improved {
            step = [step[0] * 0.5, step[1] * 0.5];
        }
    }
    let pair = CovariancePair {
        s1: miso_beam_covariance(std.p[0], phi[0], std.rho(1)),
        s2: miso_beam_covariance(std.p[1], phi[1], std.rho(2)),
    };
    let sum_rate = tin_sum_rate(&std.channel(), &pair);
    MisoTinSolution { phi, pair, sum_rate }
}
