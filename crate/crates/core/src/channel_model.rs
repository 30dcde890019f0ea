//! Two-user vector Gaussian interference channel data model.
//!
//! Receiver 1 observes `y1 = H1 x1 + F2 x2 + z1` and receiver 2 observes
//! `y2 = H2 x2 + F1 x1 + z2` with unit-covariance Gaussian noise. Transmitter
//! `i` has `t_i` antennas, receiver `i` has `r_i` antennas, and the inputs obey
//! `tr(S_i) <= P_i`.
//!
//! Besides validation and classification this module rewrites single-receive
//! (MISO) and single-transmit (SIMO) channels in a two-antenna standard form
//! parametrised by one angle and one gain ratio per user, and maps input
//! covariances of the standard form back to the original antennas.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix_kit::{frob, Mat, Vect};

/// Relative tolerance under which a matrix counts as zero or two matrices
/// count as equal during classification.
pub const ZERO_TOL: f64 = 1e-12;

/// A validated two-user MIMO interference channel.
#[derive(Debug, Clone, PartialEq)]
pub struct MimoChannel {
    /// Direct link of user 1, `r1 x t1`.
    pub h1: Mat,
    /// Cross link from transmitter 1 to receiver 2, `r2 x t1`.
    pub f1: Mat,
    /// Direct link of user 2, `r2 x t2`.
    pub h2: Mat,
    /// Cross link from transmitter 2 to receiver 1, `r1 x t2`.
    pub f2: Mat,
    /// Power budget of transmitter 1.
    pub p1: f64,
    /// Power budget of transmitter 2.
    pub p2: f64,
}

impl MimoChannel {
    /// Receive antennas at receiver `i` (1-based).
    pub fn r(&self, i: usize) -> usize {
        self.direct(i).nrows()
    }

    /// Transmit antennas at transmitter `i` (1-based).
    pub fn t(&self, i: usize) -> usize {
        self.direct(i).ncols()
    }

    /// Direct link `H_i`.
    pub fn direct(&self, i: usize) -> &Mat {
        if i == 1 {
            &self.h1
        } else {
            &self.h2
        }
    }

    /// Cross link `F_i` leaving transmitter `i`.
    pub fn cross(&self, i: usize) -> &Mat {
        if i == 1 {
            &self.f1
        } else {
            &self.f2
        }
    }

    /// Power budget `P_i`.
    pub fn power(&self, i: usize) -> f64 {
        if i == 1 {
            self.p1
        } else {
            self.p2
        }
    }

    /// The same channel with the user labels exchanged.
    pub fn swapped(&self) -> MimoChannel {
        MimoChannel {
            h1: self.h2.clone(),
            f1: self.f2.clone(),
            h2: self.h1.clone(),
            f2: self.f1.clone(),
            p1: self.p2,
            p2: self.p1,
        }
    }

    /// Scale of the channel used by the relative zero tolerance.
    fn scale(&self) -> f64 {
        [&self.h1, &self.f1, &self.h2, &self.f2].iter().map(|m| frob(m)).fold(0.0, f64::max)
    }

    /// True when `m` is zero relative to the channel scale.
    pub fn is_negligible(&self, m: &Mat) -> bool {
        frob(m) <= ZERO_TOL * (1.0 + self.scale())
    }
}

/// Channel file contents: row-major nested arrays and two powers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawChannel {
    /// Direct link of user 1 as rows.
    #[serde(rename = "H1")]
    pub h1: Vec<Vec<f64>>,
    /// Cross link from transmitter 1 to receiver 2 as rows.
    #[serde(rename = "F1")]
    pub f1: Vec<Vec<f64>>,
    /// Direct link of user 2 as rows.
    #[serde(rename = "H2")]
    pub h2: Vec<Vec<f64>>,
    /// Cross link from transmitter 2 to receiver 1 as rows.
    #[serde(rename = "F2")]
    pub f2: Vec<Vec<f64>>,
    /// Power budget of transmitter 1.
    #[serde(rename = "P1")]
    pub p1: f64,
    /// Power budget of transmitter 2.
    #[serde(rename = "P2")]
    pub p2: f64,
}

impl RawChannel {
    /// Validates the document and builds the channel.
    pub fn into_channel(self) -> Result<MimoChannel> {
        let h1 = rows_to_mat("H1", &self.h1)?;
        let f1 = rows_to_mat("F1", &self.f1)?;
        let h2 = rows_to_mat("H2", &self.h2)?;
        let f2 = rows_to_mat("F2", &self.f2)?;
        validate_channel(h1, f1, h2, f2, self.p1, self.p2)
    }

    /// Serialisable copy of a channel.
    pub fn from_channel(ch: &MimoChannel) -> RawChannel {
        RawChannel {
            h1: mat_to_rows(&ch.h1),
            f1: mat_to_rows(&ch.f1),
            h2: mat_to_rows(&ch.h2),
            f2: mat_to_rows(&ch.f2),
            p1: ch.p1,
            p2: ch.p2,
        }
    }
}

/// Converts row-major nested vectors into a matrix, rejecting ragged input.
pub fn rows_to_mat(key: &str, rows: &[Vec<f64>]) -> Result<Mat> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if r == 0 || c == 0 {
        return Err(Error::DimensionMismatch(format!("{key} is empty")));
    }
    if let Some(bad) = rows.iter().position(|row| row.len() != c) {
        return Err(Error::DimensionMismatch(format!(
            "{key} row {bad} has {} entries, expected {c}",
            rows[bad].len()
        )));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Input(format!("{key} contains a non-finite entry")));
    }
    Ok(Mat::from_fn(r, c, |i, j| rows[i][j]))
}

/// Row-major nested vectors of a matrix.
pub fn mat_to_rows(m: &Mat) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

/// Checks dimensions, nonzero direct links and positive powers.
pub fn validate_channel(h1: Mat, f1: Mat, h2: Mat, f2: Mat, p1: f64, p2: f64) -> Result<MimoChannel> {
    let (r1, t1) = h1.shape();
    let (r2, t2) = h2.shape();
    if r1 == 0 || t1 == 0 || r2 == 0 || t2 == 0 {
        return Err(Error::DimensionMismatch("direct links must be nonempty".into()));
    }
    if f2.shape() != (r1, t2) {
        return Err(Error::DimensionMismatch(format!(
            "F2 is {}x{}, expected {r1}x{t2} (rows of H1, columns of H2)",
            f2.nrows(),
            f2.ncols()
        )));
    }
    if f1.shape() != (r2, t1) {
        return Err(Error::DimensionMismatch(format!(
            "F1 is {}x{}, expected {r2}x{t1} (rows of H2, columns of H1)",
            f1.nrows(),
            f1.ncols()
        )));
    }
    for (i, h) in [(1, &h1), (2, &h2)] {
        if h.iter().all(|v| *v == 0.0) {
            return Err(Error::ZeroDirectLink(i));
        }
    }
    for (i, p) in [(1, p1), (2, p2)] {
        if !(p.is_finite() && p > 0.0) {
            return Err(Error::NonpositivePower(i, p));
        }
    }
    Ok(MimoChannel { h1, f1, h2, f2, p1, p2 })
}

/// Structural features of a channel used to route it to a certifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ChannelKind {
    /// No MISO, SIMO or parallel structure.
    GeneralMimo,
    /// The cross link `F1` vanishes.
    ZicF1Zero,
    /// Both receivers have a single antenna.
    Miso,
    /// Both transmitters have a single antenna.
    Simo,
    /// All four matrices are square and diagonal.
    Parallel,
    /// A MISO channel whose two users are identical.
    SymmetricMiso,
    /// A SIMO channel whose two users are identical.
    SymmetricSimo,
}

/// Set of structural features of a channel, sorted and duplicate free.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelClass {
    /// Features present in the channel.
    pub kinds: Vec<ChannelKind>,
}

impl ChannelClass {
    /// True when `kind` is present.
    pub fn has(&self, kind: ChannelKind) -> bool {
        self.kinds.contains(&kind)
    }

    /// Names of the features, for reports.
    pub fn names(&self) -> Vec<String> {
        self.kinds.iter().map(|k| format!("{k:?}")).collect()
    }
}

/// Identifies the structure of a channel under the relative zero tolerance.
pub fn classify(ch: &MimoChannel) -> ChannelClass {
    let mut kinds = Vec::new();
    let miso = ch.r(1) == 1 && ch.r(2) == 1;
    let simo = ch.t(1) == 1 && ch.t(2) == 1;
    let diag = |m: &Mat| {
        m.is_square()
            && ch.is_negligible(&Mat::from_fn(m.nrows(), m.ncols(), |i, j| if i == j { 0.0 } else { m[(i, j)] }))
    };
    let n = ch.h1.nrows();
    let parallel = [&ch.h1, &ch.f1, &ch.h2, &ch.f2].iter().all(|m| m.shape() == (n, n) && diag(m));
    let same_users = ch.h1.shape() == ch.h2.shape()
        && ch.is_negligible(&(&ch.h1 - &ch.h2))
        && ch.is_negligible(&(&ch.f1 - &ch.f2))
        && (ch.p1 - ch.p2).abs() <= ZERO_TOL * (1.0 + ch.p1.abs());
    if ch.is_negligible(&ch.f1) {
        kinds.push(ChannelKind::ZicF1Zero);
    }
    if miso {
        kinds.push(ChannelKind::Miso);
        if same_users {
            kinds.push(ChannelKind::SymmetricMiso);
        }
    }
    if simo {
        kinds.push(ChannelKind::Simo);
        if same_users {
            kinds.push(ChannelKind::SymmetricSimo);
        }
    }
    if parallel {
        kinds.push(ChannelKind::Parallel);
    }
    if !miso && !simo && !parallel {
        kinds.push(ChannelKind::GeneralMimo);
    }
    kinds.sort();
    ChannelClass { kinds }
}

/// Orthonormal frame whose first axis follows `f` and whose second axis
/// completes the plane spanned by `f` and `h`.
struct Frame {
    /// Orthonormal `n x n` matrix whose rows are the frame axes.
    q: Mat,
    /// Angle of `h` in the frame, in `[0, pi]`.
    angle: f64,
}

fn frame(h: &Vect, f: &Vect) -> Frame {
    let n = h.len();
    let nh = h.norm();
    let nf = f.norm();
    let mut axes: Vec<Vect> = Vec::with_capacity(n);
    let angle;
    if nf <= ZERO_TOL * (1.0 + nh) {
        // No cross link: put h on the second axis so that it is orthogonal
        // to the (absent) interference direction.
        let u_h = h / nh;
        if n >= 2 {
            axes.push(orthogonal_to(std::slice::from_ref(&u_h), n));
            axes.push(u_h);
            angle = FRAC_PI_2;
        } else {
            axes.push(u_h);
            angle = 0.0;
        }
    } else {
        let u1 = f / nf;
        let along = h.dot(&u1);
        let g = h - &u1 * along;
        let ng = g.norm();
        if n >= 2 && ng > ZERO_TOL * (1.0 + nh) {
            let u2 = g / ng;
            angle = ng.atan2(along);
            axes.push(u1);
            axes.push(u2);
        } else {
            angle = if along >= 0.0 { 0.0 } else { std::f64::consts::PI };
            axes.push(u1);
        }
    }
    while axes.len() < n {
        let next = orthogonal_to(&axes, n);
        axes.push(next);
    }
    let q = Mat::from_fn(n, n, |i, j| axes[i][j]);
    Frame { q, angle }
}

/// A unit vector orthogonal to the given orthonormal vectors, picked from the
/// standard basis by largest residual for numerical stability.
fn orthogonal_to(basis: &[Vect], n: usize) -> Vect {
    let mut best = Vect::zeros(n);
    let mut best_norm = -1.0;
    for k in 0..n {
        let mut v = Vect::zeros(n);
        v[k] = 1.0;
        for _ in 0..2 {
            for b in basis {
                let d = v.dot(b);
                v -= b * d;
            }
        }
        let nv = v.norm();
        if nv > best_norm {
            best_norm = nv;
            best = v / nv;
        }
    }
    best
}

/// Standard form of a MISO interference channel.
///
/// In the standard form `h_i = [cos theta_i, sin theta_i]^T` and
/// `f_i = [sqrt(a_i), 0]^T`, and each transmitter has two antennas. Index 0
/// of every array refers to user 1.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardMiso {
    /// Angle between direct and cross link of each transmitter, in `[0, pi]`.
    pub theta: [f64; 2],
    /// Cross-to-direct gain ratios `||f_i||^2 / ||h_i||^2`.
    pub a: [f64; 2],
    /// Rescaled powers `P_i ||h_i||^2`.
    pub p: [f64; 2],
    /// Orthonormal rotations of the transmit antennas, rows are the new axes.
    pub reduction: [Mat; 2],
    /// Norms of the original direct links.
    pub h_norm: [f64; 2],
}

impl StandardMiso {
    /// Builds a standard form directly from angles, gain ratios and powers,
    /// with identity rotations and unit direct-link norms.
    pub fn from_parameters(theta: [f64; 2], a: [f64; 2], p: [f64; 2]) -> StandardMiso {
        StandardMiso { theta, a, p, reduction: [Mat::identity(2, 2), Mat::identity(2, 2)], h_norm: [1.0, 1.0] }
    }

    /// Direct link `h_i` of user `i` (1-based).
    pub fn h(&self, i: usize) -> Vect {
        let t = self.theta[i - 1];
        Vect::from_vec(vec![t.cos(), t.sin()])
    }

    /// Cross link `f_i` leaving transmitter `i` (1-based).
    pub fn f(&self, i: usize) -> Vect {
        Vect::from_vec(vec![self.a[i - 1].sqrt(), 0.0])
    }

    /// Steering sign: `+1` when `theta_i <= pi/2`, else `-1`.
    pub fn rho(&self, i: usize) -> f64 {
        if self.theta[i - 1] <= FRAC_PI_2 {
            1.0
        } else {
            -1.0
        }
    }

    /// The standard form as a `1 x 2` MIMO channel.
    pub fn channel(&self) -> MimoChannel {
        let row = |v: Vect| Mat::from_row_slice(1, 2, v.as_slice());
        MimoChannel {
            h1: row(self.h(1)),
            f1: row(self.f(1)),
            h2: row(self.h(2)),
            f2: row(self.f(2)),
            p1: self.p[0],
            p2: self.p[1],
        }
    }
}

/// Standard form of a SIMO interference channel.
///
/// In the standard form `h_i = [cos varphi_i, sin varphi_i]^T` lives at
/// receiver `i` and `f_i = [sqrt(a_i), 0]^T` is the cross link of
/// transmitter `i` seen at the other receiver. Index 0 refers to user 1.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardSimo {
    /// Angle between `h_i` and the interference `f_j` at receiver `i`, in `[0, pi]`.
    pub varphi: [f64; 2],
    /// Cross-to-direct gain ratios `||f_i||^2 / ||h_i||^2`.
    pub a: [f64; 2],
    /// Rescaled powers `P_i ||h_i||^2`.
    pub p: [f64; 2],
    /// Orthonormal rotations of the receive antennas, rows are the new axes.
    pub reduction: [Mat; 2],
    /// Norms of the original direct links.
    pub h_norm: [f64; 2],
}

impl StandardSimo {
    /// Builds a standard form directly from angles, gain ratios and powers.
    pub fn from_parameters(varphi: [f64; 2], a: [f64; 2], p: [f64; 2]) -> StandardSimo {
        StandardSimo { varphi, a, p, reduction: [Mat::identity(2, 2), Mat::identity(2, 2)], h_norm: [1.0, 1.0] }
    }

    /// Direct link `h_i` at receiver `i` (1-based).
    pub fn h(&self, i: usize) -> Vect {
        let t = self.varphi[i - 1];
        Vect::from_vec(vec![t.cos(), t.sin()])
    }

    /// Cross link `f_i` of transmitter `i` (1-based).
    pub fn f(&self, i: usize) -> Vect {
        Vect::from_vec(vec![self.a[i - 1].sqrt(), 0.0])
    }

    /// The standard form as a `2 x 1` MIMO channel.
    pub fn channel(&self) -> MimoChannel {
        let col = |v: Vect| Mat::from_column_slice(2, 1, v.as_slice());
        MimoChannel {
            h1: col(self.h(1)),
            f1: col(self.f(1)),
            h2: col(self.h(2)),
            f2: col(self.f(2)),
            p1: self.p[0],
            p2: self.p[1],
        }
    }
}

/// Rewrites a MISO channel (`r1 = r2 = 1`) in standard form.
///
/// Transmit antennas of user `i` are rotated so that the cross link points
/// along the first axis, and the direct link is normalised to unit length
/// with the power budget rescaled accordingly. A zero cross link gives
/// `a_i = 0` and places the direct link on the second axis (`theta_i = pi/2`).
pub fn reduce_miso(ch: &MimoChannel) -> Result<(StandardMiso, MimoChannel)> {
    if ch.r(1) != 1 || ch.r(2) != 1 {
        return Err(Error::HypothesisViolated("MISO reduction needs single-antenna receivers".into()));
    }
    let mut theta = [0.0; 2];
    let mut a = [0.0; 2];
    let mut p = [0.0; 2];
    let mut h_norm = [0.0; 2];
    let mut reduction = [Mat::zeros(0, 0), Mat::zeros(0, 0)];
    for i in 1..=2 {
        let h = ch.direct(i).row(0).transpose();
        let f = ch.cross(i).row(0).transpose();
        let fr = frame(&h, &f);
        let nh = h.norm();
        theta[i - 1] = fr.angle;
        a[i - 1] = if ch.is_negligible(ch.cross(i)) { 0.0 } else { f.norm_squared() / (nh * nh) };
        p[i - 1] = ch.power(i) * nh * nh;
        h_norm[i - 1] = nh;
        reduction[i - 1] = fr.q;
    }
    let std = StandardMiso { theta, a, p, reduction, h_norm };
    let reduced = std.channel();
    Ok((std, reduced))
}

/// Rewrites a SIMO channel (`t1 = t2 = 1`) in standard form.
///
/// Receive antennas of receiver `i` are rotated so that the interference
/// from transmitter `j` lies on the first axis; `varphi_i` is the angle
/// between `h_i` and `f_j`.
pub fn reduce_simo(ch: &MimoChannel) -> Result<(StandardSimo, MimoChannel)> {
    if ch.t(1) != 1 || ch.t(2) != 1 {
        return Err(Error::HypothesisViolated("SIMO reduction needs single-antenna transmitters".into()));
    }
    let mut varphi = [0.0; 2];
    let mut a = [0.0; 2];
    let mut p = [0.0; 2];
    let mut h_norm = [0.0; 2];
    let mut reduction = [Mat::zeros(0, 0), Mat::zeros(0, 0)];
    for i in 1..=2 {
        let j = 3 - i;
        let h = ch.direct(i).column(0).into_owned();
        let f_j = ch.cross(j).column(0).into_owned();
        let fr = frame(&h, &f_j);
        let nh = h.norm();
        varphi[i - 1] = fr.angle;
        let nhj = ch.direct(j).norm();
        a[j - 1] = if ch.is_negligible(ch.cross(j)) { 0.0 } else { f_j.norm_squared() / (nhj * nhj) };
        p[i - 1] = ch.power(i) * nh * nh;
        h_norm[i - 1] = nh;
        reduction[i - 1] = fr.q;
    }
    let std = StandardSimo { varphi, a, p, reduction, h_norm };
    let reduced = std.channel();
    Ok((std, reduced))
}

/// Maps a `2 x 2` standard-form covariance of user `i` back to the original
/// transmit antennas: `(1/||h_i||^2) Q_i^T blockdiag(S, 0) Q_i`.
///
/// When the original transmitter has a single antenna only the first axis
/// exists and the second diagonal entry of `S` carries no signal.
pub fn lift_covariance(s: &Mat, red: &StandardMiso, user: usize) -> Mat {
    let q = &red.reduction[user - 1];
    let t = q.nrows();
    let k = t.min(2);
    let b = q.rows(0, k).into_owned();
    let core = s.view((0, 0), (k, k)).into_owned();
    let nh = red.h_norm[user - 1];
    b.transpose() * core * b / (nh * nh)
}
