//! Genie-aided upper bound on the sum rate.
//!
//! Receiver `i` is handed the side information `s_i = F_i x_i + n_i`, where
//! the genie noise `n_i` is jointly Gaussian with the receiver noise `z_i`:
//!
//! ```text
//! Cov([z_i; n_i]) = E_i = [[I, A_i], [A_i^T, Sigma_i]]
//! ```
//!
//! For any valid genie (`E_i > 0`, `Sigma_1 <= I - A2 Sigma_2^{-1} A2^T`,
//! `Sigma_2 <= I - A1 Sigma_1^{-1} A1^T`) the maximum over inputs of
//! `R1u + R2u` bounds the sum capacity from above, and the objective is
//! concave in `(S1, S2)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::certifier::solve_sigma;
use crate::channel_model::MimoChannel;
use crate::error::{Error, Result};
use crate::matrix_kit::{eye, inv_pd, inv_sym_checked, log_abs_det, log_det_pd, min_eig, psd_project, symmetrize, Mat};
use crate::tin_bound::{projected_ascent, AscentOutcome, CovariancePair, SolverConfig};

/// Relative eigenvalue cutoff when inverting a genie covariance.
pub const SIGMA_RCOND: f64 = 1e-12;

/// Strictness margin for `E_i > 0`.
pub const E_STRICT: f64 = 1e-9;

/// Side-information parameters of the genie.
#[derive(Debug, Clone, PartialEq)]
pub struct GenieParameters {
    /// Correlation between `z1` and `n1`, `r1 x r2`.
    pub a1: Mat,
    /// Correlation between `z2` and `n2`, `r2 x r1`.
    pub a2: Mat,
    /// Covariance of `n1`, `r2 x r2`.
    pub sigma1: Mat,
    /// Covariance of `n2`, `r1 x r1`.
    pub sigma2: Mat,
}

impl GenieParameters {
    /// Independent genie noise: `A_i = 0`, `Sigma_i = I`.
    pub fn independent(ch: &MimoChannel) -> GenieParameters {
        let (r1, r2) = (ch.r(1), ch.r(2));
        GenieParameters { a1: Mat::zeros(r1, r2), a2: Mat::zeros(r2, r1), sigma1: eye(r2), sigma2: eye(r1) }
    }

    /// `A_i` (1-based).
    pub fn a(&self, i: usize) -> &Mat {
        if i == 1 {
            &self.a1
        } else {
            &self.a2
        }
    }

    /// `Sigma_i` (1-based).
    pub fn sigma(&self, i: usize) -> &Mat {
        if i == 1 {
            &self.sigma1
        } else {
            &self.sigma2
        }
    }

    /// Assembled `E_i = [[I, A_i], [A_i^T, Sigma_i]]`.
    pub fn e(&self, i: usize) -> Mat {
        let a = self.a(i);
        let s = self.sigma(i);
        let (m, n) = a.shape();
        let mut e = Mat::zeros(m + n, m + n);
        e.view_mut((0, 0), (m, m)).copy_from(&eye(m));
        e.view_mut((0, m), (m, n)).copy_from(a);
        e.view_mut((m, 0), (n, m)).copy_from(&a.transpose());
        e.view_mut((m, m), (n, n)).copy_from(s);
        e
    }

    fn check_dims(&self) -> Result<()> {
        let (r1, r2) = self.a1.shape();
        if self.a2.shape() != (r2, r1) || self.sigma1.shape() != (r2, r2) || self.sigma2.shape() != (r1, r1) {
            return Err(Error::DimensionMismatch(format!(
                "genie needs A1 {r1}x{r2}, A2 {r2}x{r1}, Sigma1 {r2}x{r2}, Sigma2 {r1}x{r1}"
            )));
        }
        Ok(())
    }

    fn check_channel(&self, ch: &MimoChannel) -> Result<()> {
        self.check_dims()?;
        if self.a1.shape() != (ch.r(1), ch.r(2)) {
            return Err(Error::DimensionMismatch(format!(
                "A1 is {}x{}, channel needs {}x{}",
                self.a1.nrows(),
                self.a1.ncols(),
                ch.r(1),
                ch.r(2)
            )));
        }
        Ok(())
    }
}

/// Margins of the genie validity conditions.
#[derive(Debug, Clone, PartialEq)]
pub struct GenieValidation {
    /// Smallest eigenvalue of `Sigma_1 - A1^T A1`.
    pub e1_margin: f64,
    /// Smallest eigenvalue of `Sigma_2 - A2^T A2`.
    pub e2_margin: f64,
    /// Smallest eigenvalue of `I - A2 Sigma_2^{-1} A2^T - Sigma_1`.
    pub sigma1_margin: f64,
    /// Smallest eigenvalue of `I - A1 Sigma_1^{-1} A1^T - Sigma_2`.
    pub sigma2_margin: f64,
    /// All four margins clear their thresholds.
    pub passed: bool,
}

/// Evaluates the validity conditions of a genie.
///
/// `E_i > 0` is checked through the Schur complement `Sigma_i - A_i^T A_i`
/// and must exceed `1e-9`; the two dominance conditions must be at least
/// `-1e-9`.
pub fn validate_genie(g: &GenieParameters) -> Result<GenieValidation> {
    g.check_dims()?;
    let s1_inv = inv_sym_checked(&g.sigma1, SIGMA_RCOND).ok_or(Error::SingularSigma(1))?;
    let s2_inv = inv_sym_checked(&g.sigma2, SIGMA_RCOND).ok_or(Error::SingularSigma(2))?;
    let e1_margin = min_eig(&(&g.sigma1 - g.a1.transpose() * &g.a1));
    let e2_margin = min_eig(&(&g.sigma2 - g.a2.transpose() * &g.a2));
    let sigma1_margin = min_eig(&(eye(g.sigma1.nrows()) - &g.a2 * s2_inv * g.a2.transpose() - &g.sigma1));
    let sigma2_margin = min_eig(&(eye(g.sigma2.nrows()) - &g.a1 * s1_inv * g.a1.transpose() - &g.sigma2));
    let passed = e1_margin >= E_STRICT && e2_margin >= E_STRICT && sigma1_margin >= -1e-9 && sigma2_margin >= -1e-9;
    Ok(GenieValidation { e1_margin, e2_margin, sigma1_margin, sigma2_margin, passed })
}

/// `O_i`-type matrix `1/2 B^T M^{-1} B` with `B = A_i^T N_i^{-1} H_i - F_i`,
/// `M = Sigma_i - A_i^T N_i^{-1} A_i` and `N_i = I + F_j S_j F_j^T`.
///
/// At an optimal input this is the `O_i` of the capacity certificate; at a
/// general input it is the excess term of the reduced upper-bound rate.
pub fn o_matrix(ch: &MimoChannel, s: &CovariancePair, g: &GenieParameters, user: usize) -> Result<Mat> {
    let j = 3 - user;
    let (h, f, fj, sj) = (ch.direct(user), ch.cross(user), ch.cross(j), s.get(j));
    let a = g.a(user);
    let n_inv = inv_pd(&(eye(h.nrows()) + fj * sj * fj.transpose()));
    let b = a.transpose() * &n_inv * h - f;
    let middle = g.sigma(user) - a.transpose() * &n_inv * a;
    let m_inv = inv_sym_checked(&middle, SIGMA_RCOND).ok_or(Error::SingularMiddle(user))?;
    Ok(symmetrize(&(b.transpose() * m_inv * b * 0.5)))
}

/// `(R1u, R2u)` in nats through the reduced form
/// `1/2 log|I + S_i H_i^T N_i^{-1} H_i + 2 S_i Obar_i|`.
pub fn genie_rates(ch: &MimoChannel, s: &CovariancePair, g: &GenieParameters) -> Result<(f64, f64)> {
    g.check_channel(ch)?;
    let rate = |user: usize| -> Result<f64> {
        let j = 3 - user;
        let (h, fj, sj, si) = (ch.direct(user), ch.cross(j), s.get(j), s.get(user));
        let n_inv = inv_pd(&(eye(h.nrows()) + fj * sj * fj.transpose()));
        let o = o_matrix(ch, s, g, user)?;
        let m = eye(si.nrows()) + si * (h.transpose() * n_inv * h + o * 2.0);
        Ok(0.5 * log_abs_det(&m))
    };
    Ok((rate(1)?, rate(2)?))
}

struct RawBlocks {
    k: Mat,
    j: Mat,
    e: Mat,
}

fn raw_blocks(ch: &MimoChannel, g: &GenieParameters, user: usize) -> RawBlocks {
    let other = 3 - user;
    let h = ch.direct(user);
    let f = ch.cross(user);
    let fj = ch.cross(other);
    let (r, n) = (h.nrows(), f.nrows());
    let mut k = Mat::zeros(r + n, h.ncols());
    k.view_mut((0, 0), (r, h.ncols())).copy_from(h);
    k.view_mut((r, 0), (n, h.ncols())).copy_from(f);
    let mut j = Mat::zeros(r + n, fj.ncols());
    j.view_mut((0, 0), (r, fj.ncols())).copy_from(fj);
    RawBlocks { k, j, e: g.e(user) }
}

/// `(R1u, R2u)` in nats through the block-determinant form
/// `1/2 log|E_i + K_i S_i K_i^T + J_j S_j J_j^T| - 1/2 log|E_i + J_j S_j J_j^T|`
/// with `K_i = [H_i; F_i]` and `J_j = [F_j; 0]`.
pub fn genie_rates_raw(ch: &MimoChannel, s: &CovariancePair, g: &GenieParameters) -> Result<(f64, f64)> {
    g.check_channel(ch)?;
    let rate = |user: usize| {
        let b = raw_blocks(ch, g, user);
        let c = &b.e + &b.j * s.get(3 - user) * b.j.transpose();
        let d = &c + &b.k * s.get(user) * b.k.transpose();
        0.5 * (log_det_pd(&d) - log_det_pd(&c))
    };
    Ok((rate(1), rate(2)))
}

/// Gradient of `R1u + R2u` from the block-determinant form.
pub fn upper_gradient(ch: &MimoChannel, s: &CovariancePair, g: &GenieParameters) -> CovariancePair {
    let mut out = CovariancePair::zeros(ch);
    for user in 1..=2 {
        let b = raw_blocks(ch, g, user);
        let c = &b.e + &b.j * s.get(3 - user) * b.j.transpose();
        let d = &c + &b.k * s.get(user) * b.k.transpose();
        let (c_inv, d_inv) = (inv_pd(&c), inv_pd(&d));
        let own = symmetrize(&(b.k.transpose() * &d_inv * &b.k * 0.5));
        let other = symmetrize(&(b.j.transpose() * (d_inv - c_inv) * &b.j * 0.5));
        if user == 1 {
            out.s1 += own;
            out.s2 += other;
        } else {
            out.s2 += own;
            out.s1 += other;
        }
    }
    out
}

fn upper_sum_raw(ch: &MimoChannel, s: &CovariancePair, g: &GenieParameters) -> f64 {
    genie_rates_raw(ch, s, g).map(|(a, b)| a + b).unwrap_or(f64::NEG_INFINITY)
}

/// Maximiser of the upper-bound objective for a fixed genie.
#[derive(Debug, Clone)]
pub struct UpperSolution {
    /// Maximising covariances.
    pub pair: CovariancePair,
    /// Maximum of `R1u + R2u`, nats.
    pub value: f64,
    /// Projected-gradient norm at the maximiser.
    pub residual: f64,
    /// Iterations used.
    pub iterations: usize,
    /// Whether the stopping rule was met.
    pub converged: bool,
}

/// Maximises `R1u + R2u` for a fixed valid genie.
///
/// The objective is concave, so a single deterministic start at the
/// isotropic full-power input suffices.
pub fn solve_upper(ch: &MimoChannel, g: &GenieParameters, cfg: &SolverConfig) -> Result<UpperSolution> {
    g.check_channel(ch)?;
    let v = validate_genie(g)?;
    if !v.passed {
        return Err(Error::InvalidGenie(format!(
            "E margins ({:.3e}, {:.3e}), Sigma margins ({:.3e}, {:.3e})",
            v.e1_margin, v.e2_margin, v.sigma1_margin, v.sigma2_margin
        )));
    }
    let AscentOutcome { pair, value, residual, iterations, converged } = projected_ascent(
        ch,
        |s| upper_sum_raw(ch, s, g),
        |s| upper_gradient(ch, s, g),
        CovariancePair::isotropic(ch),
        cfg,
    );
    Ok(UpperSolution { pair, value, residual, iterations, converged })
}

/// Worst violations found by the saddle-point sampling check.
#[derive(Debug, Clone, PartialEq)]
pub struct SaddleReport {
    /// Minimum over sampled inputs `S` of `Rsu(S*, g*) - Rsu(S, g*)`.
    pub input_margin: f64,
    /// Minimum over sampled genies `g` of `Rsu(S*, g) - Rsu(S*, g*)`.
    pub genie_margin: f64,
    /// Number of inputs sampled.
    pub inputs_sampled: usize,
    /// Number of valid genies sampled.
    pub genies_sampled: usize,
    /// Both margins are at least `-1e-7`.
    pub passed: bool,
}

/// Random feasible covariance of size `t` with trace at most `p`.
pub fn random_feasible(rng: &mut ChaCha8Rng, t: usize, p: f64) -> Mat {
    let rank = rng.gen_range(1..=t);
    let x = Mat::from_fn(t, rank, |_, _| rng.gen_range(-1.0..1.0));
    let s = &x * x.transpose();
    let tr = s.trace().max(f64::MIN_POSITIVE);
    psd_project(&(s * (p * rng.gen_range(0.0..1.0) / tr)), Some(p))
}

/// Checks that `(S*, g*)` behaves as a saddle point of the upper bound:
/// the input is a maximiser for the fixed genie and the genie is a
/// minimiser for the fixed input. Perturbed genies are built by moving each
/// `A_i` randomly by up to `0.1` per entry and re-solving for the maximal
/// `Sigma_i`; perturbations without a valid genie are skipped.
pub fn saddle_check(
    ch: &MimoChannel,
    s_star: &CovariancePair,
    g_star: &GenieParameters,
    samples: usize,
    seed: u64,
) -> Result<SaddleReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = upper_sum_raw(ch, s_star, g_star);
    let mut input_margin = f64::INFINITY;
    for _ in 0..samples {
        let s = CovariancePair { s1: random_feasible(&mut rng, ch.t(1), ch.p1), s2: random_feasible(&mut rng, ch.t(2), ch.p2) };
        input_margin = input_margin.min(base - upper_sum_raw(ch, &s, g_star));
    }
    let mut genie_margin = f64::INFINITY;
    let mut genies_sampled = 0;
    for _ in 0..samples {
        let jitter = |rng: &mut ChaCha8Rng, m: &Mat| m + Mat::from_fn(m.nrows(), m.ncols(), |_, _| rng.gen_range(-0.1..0.1));
        let a1 = jitter(&mut rng, &g_star.a1);
        let a2 = jitter(&mut rng, &g_star.a2);
        let Ok(sol) = solve_sigma(&a1, &a2) else { continue };
        let g = GenieParameters { a1, a2, sigma1: sol.sigma1, sigma2: sol.sigma2 };
        if !validate_genie(&g).map(|v| v.passed).unwrap_or(false) {
            continue;
        }
        genies_sampled += 1;
        genie_margin = genie_margin.min(upper_sum_raw(ch, s_star, &g) - base);
    }
    let passed = input_margin >= -1e-7 && genie_margin >= -1e-7;
    Ok(SaddleReport { input_margin, genie_margin, inputs_sampled: samples, genies_sampled, passed })
}
