//! Attack models: channel parameters of a block-diagonal symplectic attack,
//! Eve's noises and conditional variances, the one-parameter family of
//! symmetric attacks, and the four explicit optimal heterodyne attacks.
//!
//! Mode convention for three-mode attacks: mode 1 is the signal mode headed
//! for Bob, Eve measures X on mode 2 and P on mode 3.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::gaussian::{
    beam_splitter, conditional_variance, fifty_fifty, mode_swap, p_sum, squeezer, x_sum,
    BlockDiagSymplectic, CovarianceMatrix,
};
use crate::Tolerances;

/// Gaussian channel parameters per quadrature, in shot-noise units.
///
/// `chi = 1/t + eps - 1` refers all noise to the channel input; `v` is Alice's
/// total variance (modulation variance `v - 1` plus shot noise).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    pub t_x: f64,
    pub t_p: f64,
    pub eps_x: f64,
    pub eps_p: f64,
    pub chi_x: f64,
    pub chi_p: f64,
    pub v: f64,
    pub n0: f64,
}

impl ChannelParams {
    /// Symmetric channel from `(t, eps)`.
    pub fn symmetric(t: f64, eps: f64, v: f64) -> Result<Self> {
        if !(t > 0.0) {
            return Err(Error::param("t", "transmission must be positive"));
        }
        if v < 1.0 {
            return Err(Error::param("v", "total variance is at least shot noise"));
        }
        let chi = 1.0 / t + eps - 1.0;
        Ok(Self {
            t_x: t,
            t_p: t,
            eps_x: eps,
            eps_p: eps,
            chi_x: chi,
            chi_p: chi,
            v,
            n0: 1.0,
        })
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (self.t_x - self.t_p).abs() <= tol && (self.chi_x - self.chi_p).abs() <= tol
    }

    /// Shared added noise of a symmetric channel.
    pub fn chi(&self) -> Result<f64> {
        if !self.is_symmetric(Tolerances::default().channel_symmetry) {
            return Err(Error::param("channel", "not symmetric in X and P"));
        }
        Ok(self.chi_x)
    }

    /// `rho = (T chi)^2 - (1 - T)^2`; nonnegative exactly when the symmetric
    /// channel is compatible with the Heisenberg inequality.
    pub fn rho(&self) -> Result<f64> {
        let chi = self.chi()?;
        let t = self.t_x;
        Ok((t * chi).powi(2) - (1.0 - t).powi(2))
    }
}

/// Reads channel parameters off the signal rows of a three-mode attack:
/// `T_Q` is the squared signal coupling and `chi_Q` collects the remaining
/// row entries referred to the input.
pub fn channel_params_from(s: &BlockDiagSymplectic, v: f64) -> Result<ChannelParams> {
    if s.n_modes() != 3 {
        return Err(Error::UnsupportedModeCount(s.n_modes()));
    }
    let (t_x, chi_x) = signal_row_params(s.x_block(), "X")?;
    let (t_p, chi_p) = signal_row_params(s.p_block(), "P")?;
    Ok(ChannelParams {
        t_x,
        t_p,
        eps_x: chi_x - (1.0 / t_x - 1.0),
        eps_p: chi_p - (1.0 / t_p - 1.0),
        chi_x,
        chi_p,
        v,
        n0: 1.0,
    })
}

pub(crate) fn signal_row_params(block: &DMatrix<f64>, quad: &'static str) -> Result<(f64, f64)> {
    let t = block[(0, 0)] * block[(0, 0)];
    if t < 1e-24 {
        return Err(Error::DegenerateChannel(quad));
    }
    let noise: f64 = (1..block.ncols()).map(|j| block[(0, j)].powi(2)).sum();
    Ok((t, noise / t))
}

/// Eve's equivalent input noises and the conditional variances of the signal
/// mode given her measurements. Decoupled quadratures carry an infinity
/// sentinel in the noise and the unconditioned variance in the conditional.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EveView {
    pub chi_x_e1: f64,
    pub chi_p_e2: f64,
    pub v_x_cond: f64,
    pub v_p_cond: f64,
}

impl EveView {
    pub fn max_abs_diff(&self, other: &EveView) -> f64 {
        fn d(a: f64, b: f64) -> f64 {
            if a.is_infinite() && b.is_infinite() {
                0.0
            } else {
                (a - b).abs()
            }
        }
        d(self.chi_x_e1, other.chi_x_e1)
            .max(d(self.chi_p_e2, other.chi_p_e2))
            .max(d(self.v_x_cond, other.v_x_cond))
            .max(d(self.v_p_cond, other.v_p_cond))
    }
}

/// Standard role assignment: X measured on mode 2, P on mode 3.
pub fn eve_view_from(s: &BlockDiagSymplectic, v: f64) -> Result<EveView> {
    eve_view_on(s, v, 1, 2)
}

/// Eve view with explicit measured modes (0-based indices).
pub fn eve_view_on(s: &BlockDiagSymplectic, v: f64, x_mode: usize, p_mode: usize) -> Result<EveView> {
    if s.n_modes() != 3 {
        return Err(Error::UnsupportedModeCount(s.n_modes()));
    }
    if x_mode == 0 || p_mode == 0 || x_mode == p_mode || x_mode > 2 || p_mode > 2 {
        return Err(Error::param("modes", "Eve measures two distinct ancillas"));
    }
    let row_noise = |block: &DMatrix<f64>, row: usize| -> f64 {
        let sig = block[(row, 0)];
        if sig.abs() < 1e-150 {
            return f64::INFINITY;
        }
        let rest: f64 = (1..3).map(|j| block[(row, j)].powi(2)).sum();
        rest / (sig * sig)
    };
    let chi_x_e1 = row_noise(s.x_block(), x_mode);
    let chi_p_e2 = row_noise(s.p_block(), p_mode);
    let gamma = s.propagate(&CovarianceMatrix::vacuum_with_signal(3, v))?;
    let v_x_cond = if chi_x_e1.is_infinite() {
        gamma.matrix()[(0, 0)]
    } else {
        conditional_variance(&gamma, 0, &[x_mode])?
    };
    let v_p_cond = if chi_p_e2.is_infinite() {
        gamma.matrix()[(3, 3)]
    } else {
        conditional_variance(&gamma, 3, &[3 + p_mode])?
    };
    Ok(EveView {
        chi_x_e1,
        chi_p_e2,
        v_x_cond,
        v_p_cond,
    })
}

/// Sign choice in the symmetric-attack family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// One-parameter family of attacks producing a symmetric channel.
///
/// The channel fixes the signal squeezing `s1` and passive coupling `b1`
/// through `s1^2 = T(1 + chi)` and `b1^2 = 1/(1 + chi)`. The free parameter is
/// the coupling `b4` of the signal into Eve's X-measured ancilla, together
/// with a sign; symmetry of the channel then forces the feed-forward ratio `r`
/// and the entry `delta` of the P-block feed-forward stage.
#[derive(Debug, Clone)]
pub struct SymmetricAttackFamily {
    pub t: f64,
    pub chi: f64,
    pub s1: f64,
    pub b1: f64,
    pub b4: f64,
    pub sigma: Sign,
    pub r: f64,
    pub rho: f64,
    pub delta: f64,
    attack: BlockDiagSymplectic,
}

impl SymmetricAttackFamily {
    pub fn attack(&self) -> &BlockDiagSymplectic {
        &self.attack
    }

    /// Closed forms of Eve's noises and conditional variances in terms of
    /// `(s1, b1, r, b4)`; agrees with [`eve_view_from`] on the composed attack.
    pub fn eve_view_closed_form(&self, v: f64) -> EveView {
        let (s1, b1, r, b4) = (self.s1, self.b1, self.r, self.b4);
        let w = r * b1 + b4;
        let chi_x_e1 = if w.abs() < 1e-150 {
            f64::INFINITY
        } else {
            (r * r + 1.0) / (w * w) - 1.0
        };
        let b7sq = 1.0 - b1 * b1 - b4 * b4;
        let chi_p_e2 = if b7sq < 1e-150 {
            f64::INFINITY
        } else {
            1.0 / b7sq - 1.0
        };
        // (v*chi + 1)/(chi + 1) -> v and (chi + 1)/(v + chi) -> 1 as chi -> inf
        let grow = |chi: f64| if chi.is_infinite() { v } else { (v * chi + 1.0) / (chi + 1.0) };
        let damp = |chi: f64| if chi.is_infinite() { 1.0 } else { (chi + 1.0) / (v + chi) };
        let v_x_cond = s1 * s1 / (r * r + 1.0) * grow(chi_p_e2) * damp(chi_x_e1);
        let v_p_cond = (r * r + 1.0) / (s1 * s1) * grow(chi_x_e1) * damp(chi_p_e2);
        EveView {
            chi_x_e1,
            chi_p_e2,
            v_x_cond,
            v_p_cond,
        }
    }
}

/// Builds the member of the symmetric family with coupling `b4` and sign
/// `sigma` for the channel `(t, chi)`.
pub fn symmetrize(t: f64, chi: f64, b4: f64, sigma: Sign) -> Result<SymmetricAttackFamily> {
    if !(t > 0.0) {
        return Err(Error::param("t", "transmission must be positive"));
    }
    if chi < 0.0 {
        return Err(Error::param("chi", "added noise must be nonnegative"));
    }
    let rho = (t * chi).powi(2) - (1.0 - t).powi(2);
    if rho < 0.0 {
        return Err(Error::NotSymmetrizable {
            transmission: t,
            chi,
            rho,
        });
    }
    let b1_sq = 1.0 / (1.0 + chi);
    let b4_max_sq = 1.0 - b1_sq;
    if chi == 0.0 {
        // lossless noiseless channel: the only member is the identity
        if b4 != 0.0 {
            return Err(Error::param("b4", "only b4 = 0 is admissible when chi = 0"));
        }
        return Ok(SymmetricAttackFamily {
            t,
            chi,
            s1: 1.0,
            b1: 1.0,
            b4: 0.0,
            sigma,
            r: 0.0,
            rho,
            delta: 0.0,
            attack: BlockDiagSymplectic::identity(3),
        });
    }
    if b4 * b4 >= b4_max_sq {
        return Err(Error::param(
            "b4",
            format!("b4^2 = {} must stay below chi/(1+chi) = {b4_max_sq}", b4 * b4),
        ));
    }
    let s1 = (t * (1.0 + chi)).sqrt();
    let b1 = b1_sq.sqrt();
    let b7_sq = 1.0 - b1_sq - b4 * b4;
    let b7 = b7_sq.sqrt();
    if !(b7 > 0.0) {
        return Err(Error::DegenerateBasis);
    }
    let r = (b1 * b4 * (1.0 - s1 * s1) + sigma.value() * (b7_sq * rho).sqrt()) / (1.0 - b1_sq);
    // gauge choice: unit squeezing on both ancillas
    let s2 = 1.0;
    let s3 = 1.0;
    let a = r * s2 / s1;
    let delta = s3 * (b1 * (s1 * s1 - 1.0) / s1 + a * b4 / s2) / b7;
    let c = 0.0;
    let b = a * c - delta;

    let mut ff = DMatrix::identity(3, 3);
    ff[(1, 0)] = a;
    ff[(2, 0)] = b;
    ff[(2, 1)] = c;
    let orth = complete_orthogonal_column(b1, b4, b7)?;
    let params = crate::gaussian::IwasawaParams::new(
        ff,
        nalgebra::DVector::from_row_slice(&[s1, s2, s3]),
        orth,
    )?;
    let attack = params.compose()?;

    let family = SymmetricAttackFamily {
        t,
        chi,
        s1,
        b1,
        b4,
        sigma,
        r,
        rho,
        delta,
        attack,
    };
    debug_assert!(channel_params_from(family.attack(), 2.0)
        .map(|p| p.is_symmetric(1e-9))
        .unwrap_or(false));
    Ok(family)
}

/// Completes the first column `(b1, b4, b7)` of the passive stage to an
/// orthogonal matrix by Gram-Schmidt against the canonical basis, taking the
/// basis vector least aligned with the column first.
fn complete_orthogonal_column(b1: f64, b4: f64, b7: f64) -> Result<DMatrix<f64>> {
    let col1 = [b1, b4, b7];
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| col1[i].abs().partial_cmp(&col1[j].abs()).unwrap());
    let mut cols: Vec<[f64; 3]> = vec![col1];
    for &k in &order {
        if cols.len() == 3 {
            break;
        }
        let mut v = [0.0; 3];
        v[k] = 1.0;
        for c in &cols {
            let dot = v[0] * c[0] + v[1] * c[1] + v[2] * c[2];
            for i in 0..3 {
                v[i] -= dot * c[i];
            }
        }
        let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if norm < 1e-8 {
            continue;
        }
        cols.push([v[0] / norm, v[1] / norm, v[2] / norm]);
    }
    if cols.len() != 3 {
        return Err(Error::DegenerateBasis);
    }
    Ok(DMatrix::from_fn(3, 3, |i, j| cols[j][i]))
}

/// Coupling that maximizes Eve's information over the symmetric family, for
/// either reconciliation direction. Valid in the quantum regime `eps <= 2`;
/// requires `T(1 + chi) >= 1`, which holds for every physical channel with
/// nonnegative excess noise.
pub fn optimal_coupling(t: f64, chi: f64, sigma: Sign) -> Result<f64> {
    if !(t > 0.0) || chi < 0.0 {
        return Err(Error::param("channel", "need t > 0 and chi >= 0"));
    }
    let s1_sq = t * (1.0 + chi);
    let b1_sq = 1.0 / (1.0 + chi);
    if s1_sq < 1.0 {
        return Err(Error::NumericDomain(format!(
            "T(1 + chi) = {s1_sq} < 1: channel lies outside the family's coverage"
        )));
    }
    let inner = 1.0 - s1_sq * (2.0 * b1_sq - 1.0);
    if inner < 0.0 {
        return Err(Error::NumericDomain(format!(
            "1 - s1^2 (2 b1^2 - 1) = {inner} < 0"
        )));
    }
    let s1 = s1_sq.sqrt();
    Ok(sigma.value() * (s1 * inner.sqrt() - (b1_sq * (s1_sq - 1.0)).sqrt()) / (s1_sq + 1.0))
}

/// The four explicit optimal attacks against the heterodyne protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttackKind {
    FeedForward,
    Cloning,
    Teleportation,
    EntanglingCloner,
}

impl std::fmt::Display for AttackKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            AttackKind::FeedForward => "feed-forward",
            AttackKind::Cloning => "cloning",
            AttackKind::Teleportation => "teleportation",
            AttackKind::EntanglingCloner => "entangling-cloner",
        };
        f.write_str(s)
    }
}

/// Kind-specific tuning fixed by the channel parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AttackTuning {
    /// Tap transmission `tap` and displacement gain `gain`, `gain^2 = eps T`.
    FeedForward { gain: f64, tap: f64 },
    /// Amplifier gain `gain = 1/(1 - eps/2)` and tap `tap = T(1 - eps/2)`.
    Cloning { gain: f64, tap: f64 },
    /// Displacement gain `gain^2 = 2T` and EPR squeezing `squeeze` (as s^2).
    Teleportation { gain: f64, squeeze_sq: f64 },
    /// Tap `tap = T` and EPR squeezing chosen so the injected noise fakes eps.
    EntanglingCloner { tap: f64, squeeze_sq: f64 },
}

#[derive(Debug, Clone)]
pub struct NamedAttack {
    pub kind: AttackKind,
    pub tuning: AttackTuning,
    attack: BlockDiagSymplectic,
}

impl NamedAttack {
    pub fn attack(&self) -> &BlockDiagSymplectic {
        &self.attack
    }
}

pub fn build_attack(kind: AttackKind, t: f64, eps: f64) -> Result<NamedAttack> {
    match kind {
        AttackKind::FeedForward => build_feed_forward(t, eps),
        AttackKind::Cloning => build_cloning(t, eps),
        AttackKind::Teleportation => build_teleportation(t, eps),
        AttackKind::EntanglingCloner => build_entangling_cloner(t, eps),
    }
}

fn check_channel_args(t: f64, eps: f64, attack: &'static str) -> Result<()> {
    if !(t > 0.0) {
        return Err(Error::UnrealizableTuning {
            attack,
            reason: "transmission must be positive".into(),
        });
    }
    if eps < 0.0 {
        return Err(Error::UnrealizableTuning {
            attack,
            reason: "excess noise must be nonnegative".into(),
        });
    }
    Ok(())
}

/// Tap, heterodyne both arms, and displace the transmitted mode according to
/// the measurement outcomes with gain `g`, `g^2 = eps T`. The displacement is
/// represented by QND sum gates so the composed map stays symplectic.
pub fn build_feed_forward(t: f64, eps: f64) -> Result<NamedAttack> {
    check_channel_args(t, eps, "feed-forward")?;
    let inner = eps * (2.0 - 2.0 * t + t * eps);
    if inner < 0.0 {
        return Err(Error::UnrealizableTuning {
            attack: "feed-forward",
            reason: format!("eps (2 - 2T + T eps) = {inner} < 0"),
        });
    }
    let gain = (eps * t).sqrt();
    let tap = 4.0 * (2.0 - inner.sqrt()) / ((2.0 + t * eps).powi(2) / t)
        - t * (2.0 - eps) / (2.0 + t * eps);
    if !(0.0..=1.0).contains(&tap) {
        return Err(Error::UnrealizableTuning {
            attack: "feed-forward",
            reason: format!("tap transmission {tap} outside [0, 1]"),
        });
    }
    // 50/50 with arms [[1,1],[-1,1]]/sqrt(2): both outputs carry the tapped signal
    let mut het = DMatrix::identity(3, 3);
    let c = std::f64::consts::FRAC_1_SQRT_2;
    het[(1, 1)] = c;
    het[(1, 2)] = c;
    het[(2, 1)] = -c;
    het[(2, 2)] = c;
    let het = BlockDiagSymplectic::new(het.clone(), het)?;
    let passive = het.compose(&beam_splitter(3, 0, 1, tap))?;
    let displaced = x_sum(3, 1, 0, gain)
        .compose(&p_sum(3, 2, 0, -gain))?
        .compose(&passive)?;
    Ok(NamedAttack {
        kind: AttackKind::FeedForward,
        tuning: AttackTuning::FeedForward { gain, tap },
        attack: displaced,
    })
}

/// EPR source on modes `i`, `j`: single-mode squeezers `(1/s, s)` mixed on a
/// balanced beam splitter.
fn epr_source(n: usize, i: usize, j: usize, s: f64) -> Result<BlockDiagSymplectic> {
    fifty_fifty(n, i, j)
        .compose(&squeezer(n, i, 1.0 / s))?
        .compose(&squeezer(n, j, s))
}

/// Continuous-variable teleportation: the signal interferes with one EPR arm,
/// both interferometer outputs are measured, and the surviving arm is
/// displaced with gain `g`, `g^2 = 2T`.
pub fn build_teleportation(t: f64, eps: f64) -> Result<NamedAttack> {
    check_channel_args(t, eps, "teleportation")?;
    let denom = (1.0 - t.sqrt()).powi(2);
    if denom < 1e-30 {
        return Err(Error::UnrealizableTuning {
            attack: "teleportation",
            reason: "tuning is singular at T = 1".into(),
        });
    }
    let inner = t * eps * (2.0 - 2.0 * t + t * eps);
    if inner < 0.0 {
        return Err(Error::UnrealizableTuning {
            attack: "teleportation",
            reason: format!("T eps (2 - 2T + T eps) = {inner} < 0"),
        });
    }
    let squeeze_sq = (1.0 - t + t * eps - inner.sqrt()) / denom;
    if !(squeeze_sq > 0.0) {
        return Err(Error::UnrealizableTuning {
            attack: "teleportation",
            reason: format!("squeezing s^2 = {squeeze_sq} not positive"),
        });
    }
    let gain = (2.0 * t).sqrt();
    let passive = mode_swap(3, 0, 2)
        .compose(&fifty_fifty(3, 0, 1))?
        .compose(&epr_source(3, 1, 2, squeeze_sq.sqrt())?)?;
    let attack = x_sum(3, 1, 0, gain)
        .compose(&p_sum(3, 2, 0, gain))?
        .compose(&passive)?;
    Ok(NamedAttack {
        kind: AttackKind::Teleportation,
        tuning: AttackTuning::Teleportation { gain, squeeze_sq },
        attack,
    })
}

/// Tap a fraction `1 - T` of the signal while injecting EPR-correlated noise,
/// then measure the tapped arm jointly with the second EPR arm.
pub fn build_entangling_cloner(t: f64, eps: f64) -> Result<NamedAttack> {
    check_channel_args(t, eps, "entangling-cloner")?;
    if t >= 1.0 {
        return Err(Error::UnrealizableTuning {
            attack: "entangling-cloner",
            reason: "tuning needs T < 1".into(),
        });
    }
    let mu = t * eps / (1.0 - t) + 1.0;
    // smaller root of s^4 - 2 mu s^2 + 1; with this interferometer orientation
    // it is the bound-saturating one (the other root swaps the EPR arms)
    let squeeze_sq = mu - (mu * mu - 1.0).max(0.0).sqrt();
    let attack = fifty_fifty(3, 1, 2)
        .compose(&beam_splitter(3, 0, 1, t))?
        .compose(&epr_source(3, 1, 2, squeeze_sq.sqrt())?)?;
    Ok(NamedAttack {
        kind: AttackKind::EntanglingCloner,
        tuning: AttackTuning::EntanglingCloner {
            tap: t,
            squeeze_sq,
        },
        attack,
    })
}

/// Phase-insensitive amplification of the signal followed by a tap of the
/// amplified beam; Eve interferes the idler with the tapped arm before
/// measuring, which is what lets her reach the heterodyne bound.
pub fn build_cloning(t: f64, eps: f64) -> Result<NamedAttack> {
    check_channel_args(t, eps, "cloning")?;
    if eps >= 2.0 {
        return Err(Error::UnrealizableTuning {
            attack: "cloning",
            reason: "gain diverges as eps -> 2".into(),
        });
    }
    let gain = 1.0 / (1.0 - eps / 2.0);
    let tap = t * (1.0 - eps / 2.0);
    if tap > 1.0 {
        return Err(Error::UnrealizableTuning {
            attack: "cloning",
            reason: format!("tap transmission {tap} exceeds 1"),
        });
    }
    let mut amp_x = DMatrix::identity(3, 3);
    let mut amp_p = DMatrix::identity(3, 3);
    let (g, h) = (gain.sqrt(), (gain - 1.0).sqrt());
    amp_x[(0, 0)] = g;
    amp_x[(1, 1)] = g;
    amp_x[(0, 1)] = h;
    amp_x[(1, 0)] = h;
    amp_p[(0, 0)] = g;
    amp_p[(1, 1)] = g;
    amp_p[(0, 1)] = -h;
    amp_p[(1, 0)] = -h;
    let amplifier = BlockDiagSymplectic::new(amp_x, amp_p)?;
    let mut joint = DMatrix::identity(3, 3);
    let c = std::f64::consts::FRAC_1_SQRT_2;
    joint[(1, 1)] = c;
    joint[(1, 2)] = c;
    joint[(2, 1)] = -c;
    joint[(2, 2)] = c;
    let joint = BlockDiagSymplectic::new(joint.clone(), joint)?;
    let attack = joint
        .compose(&beam_splitter(3, 0, 2, tap))?
        .compose(&amplifier)?;
    Ok(NamedAttack {
        kind: AttackKind::Cloning,
        tuning: AttackTuning::Cloning { gain, tap },
        attack,
    })
}
