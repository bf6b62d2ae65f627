//! Symplectic linear algebra on quadrature vectors.
//!
//! All matrices act on the quadrature ordering `(X_1 .. X_n, P_1 .. P_n)` and
//! all variances are expressed in shot-noise units (`N0 = 1`). The symplectic
//! form for this ordering is written `beta_form` to keep it apart from the
//! reconciliation efficiency beta used elsewhere in the crate.

use nalgebra::{DMatrix, DVector, Matrix2, Matrix4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::Tolerances;

/// Symplectic form `[[0, I_n], [-I_n, 0]]` for `n` modes.
pub fn beta_form(n_modes: usize) -> DMatrix<f64> {
    let n = n_modes;
    let mut b = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        b[(i, n + i)] = 1.0;
        b[(n + i, i)] = -1.0;
    }
    b
}

/// Max-norm of `S beta S^T - beta`; zero iff `S` is exactly symplectic.
pub fn symplectic_residual(mat: &DMatrix<f64>) -> Result<f64> {
    if !mat.is_square() {
        return Err(Error::DimensionMismatch {
            expected: mat.nrows(),
            found: mat.ncols(),
        });
    }
    if mat.nrows() % 2 != 0 {
        return Err(Error::OddDimension(mat.nrows()));
    }
    let b = beta_form(mat.nrows() / 2);
    let r = mat * &b * mat.transpose() - &b;
    Ok(r.amax())
}

/// A real `2n x 2n` symplectic map on quadratures.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticMatrix {
    n_modes: usize,
    mat: DMatrix<f64>,
}

impl SymplecticMatrix {
    /// Validates the symplectic condition and unit determinant before wrapping.
    pub fn new(mat: DMatrix<f64>) -> Result<Self> {
        let tol = Tolerances::default();
        let residual = symplectic_residual(&mat)?;
        if residual > tol.symplectic_residual {
            return Err(Error::param(
                "matrix",
                format!("symplectic residual {residual:.3e} exceeds {:.1e}", tol.symplectic_residual),
            ));
        }
        let det = mat.determinant();
        if (det - 1.0).abs() > tol.determinant {
            return Err(Error::param(
                "matrix",
                format!("determinant {det} differs from 1"),
            ));
        }
        Ok(Self {
            n_modes: mat.nrows() / 2,
            mat,
        })
    }

    pub fn identity(n_modes: usize) -> Self {
        Self {
            n_modes,
            mat: DMatrix::identity(2 * n_modes, 2 * n_modes),
        }
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    pub fn residual(&self) -> f64 {
        symplectic_residual(&self.mat).expect("validated at construction")
    }
}

/// Symplectic map that does not mix X and P quadratures: `S = diag(S_X, S_P)`
/// with `S_P = S_X^{-T}`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockDiagSymplectic {
    n_modes: usize,
    s_x: DMatrix<f64>,
    s_p: DMatrix<f64>,
}

impl BlockDiagSymplectic {
    /// Wraps an `(S_X, S_P)` pair, checking `S_X S_P^T = I`.
    pub fn new(s_x: DMatrix<f64>, s_p: DMatrix<f64>) -> Result<Self> {
        if !s_x.is_square() || s_x.shape() != s_p.shape() {
            return Err(Error::DimensionMismatch {
                expected: s_x.nrows(),
                found: s_p.nrows(),
            });
        }
        let n = s_x.nrows();
        let resid = (&s_x * s_p.transpose() - DMatrix::identity(n, n)).amax();
        if resid > Tolerances::default().block_inverse_transpose {
            return Err(Error::param(
                "s_p",
                format!("S_X S_P^T deviates from identity by {resid:.3e}"),
            ));
        }
        Ok(Self {
            n_modes: n,
            s_x,
            s_p,
        })
    }

    /// Builds the pair from the X block alone, `S_P = S_X^{-T}`.
    pub fn from_x_block(s_x: DMatrix<f64>) -> Result<Self> {
        let s_p = s_x
            .clone()
            .try_inverse()
            .ok_or(Error::SingularConditioning)?
            .transpose();
        Self::new(s_x, s_p)
    }

    pub fn identity(n_modes: usize) -> Self {
        Self {
            n_modes,
            s_x: DMatrix::identity(n_modes, n_modes),
            s_p: DMatrix::identity(n_modes, n_modes),
        }
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn x_block(&self) -> &DMatrix<f64> {
        &self.s_x
    }

    pub fn p_block(&self) -> &DMatrix<f64> {
        &self.s_p
    }

    /// Embeds the pair as a full `2n x 2n` symplectic matrix.
    pub fn embed(&self) -> SymplecticMatrix {
        let n = self.n_modes;
        let mut m = DMatrix::zeros(2 * n, 2 * n);
        m.view_mut((0, 0), (n, n)).copy_from(&self.s_x);
        m.view_mut((n, n), (n, n)).copy_from(&self.s_p);
        SymplecticMatrix {
            n_modes: n,
            mat: m,
        }
    }

    /// `self` applied after `earlier`.
    pub fn compose(&self, earlier: &Self) -> Result<Self> {
        if self.n_modes != earlier.n_modes {
            return Err(Error::DimensionMismatch {
                expected: self.n_modes,
                found: earlier.n_modes,
            });
        }
        Ok(Self {
            n_modes: self.n_modes,
            s_x: &self.s_x * &earlier.s_x,
            s_p: &self.s_p * &earlier.s_p,
        })
    }

    /// Relabels modes `i` and `j` (conjugation by the transposition).
    pub fn swap_modes(&self, i: usize, j: usize) -> Self {
        let mut s_x = self.s_x.clone();
        let mut s_p = self.s_p.clone();
        s_x.swap_rows(i, j);
        s_x.swap_columns(i, j);
        s_p.swap_rows(i, j);
        s_p.swap_columns(i, j);
        Self {
            n_modes: self.n_modes,
            s_x,
            s_p,
        }
    }
}

/// Iwasawa factor data generating a block-diagonal symplectic attack:
/// a lower-unitriangular feed-forward matrix, strictly positive squeezing
/// factors and an orthogonal passive stage.
#[derive(Debug, Clone, PartialEq)]
pub struct IwasawaParams {
    feed_forward: DMatrix<f64>,
    squeezing: DVector<f64>,
    orthogonal: DMatrix<f64>,
}

impl IwasawaParams {
    pub fn new(
        feed_forward: DMatrix<f64>,
        squeezing: DVector<f64>,
        orthogonal: DMatrix<f64>,
    ) -> Result<Self> {
        let n = feed_forward.nrows();
        if !feed_forward.is_square() || squeezing.len() != n || orthogonal.shape() != (n, n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: orthogonal.nrows(),
            });
        }
        for i in 0..n {
            if (feed_forward[(i, i)] - 1.0).abs() > 1e-12 {
                return Err(Error::param("feed_forward", "diagonal must be 1"));
            }
            for j in i + 1..n {
                if feed_forward[(i, j)].abs() > 1e-12 {
                    return Err(Error::param("feed_forward", "must be lower triangular"));
                }
            }
        }
        for &s in squeezing.iter() {
            if !(s > 0.0) {
                return Err(Error::param(
                    "squeezing",
                    format!("factors must be strictly positive, got {s}"),
                ));
            }
        }
        let resid = (&orthogonal * orthogonal.transpose() - DMatrix::identity(n, n)).amax();
        if resid > Tolerances::default().orthogonality {
            return Err(Error::param(
                "orthogonal",
                format!("orthogonality residual {resid:.3e}"),
            ));
        }
        Ok(Self {
            feed_forward,
            squeezing,
            orthogonal,
        })
    }

    pub fn n_modes(&self) -> usize {
        self.feed_forward.nrows()
    }

    pub fn feed_forward(&self) -> &DMatrix<f64> {
        &self.feed_forward
    }

    pub fn squeezing(&self) -> &DVector<f64> {
        &self.squeezing
    }

    pub fn orthogonal(&self) -> &DMatrix<f64> {
        &self.orthogonal
    }

    /// Derived feed-forward combination `a c - b` for three modes, the entry
    /// appearing in the P-block of the inverse-transposed feed-forward stage.
    pub fn delta(&self) -> Result<f64> {
        if self.n_modes() != 3 {
            return Err(Error::UnsupportedModeCount(self.n_modes()));
        }
        let a = self.feed_forward[(1, 0)];
        let b = self.feed_forward[(2, 0)];
        let c = self.feed_forward[(2, 1)];
        Ok(a * c - b)
    }

    /// `S_X = A D B`, `S_P = A^{-T} D^{-1} B`.
    pub fn compose(&self) -> Result<BlockDiagSymplectic> {
        let n = self.n_modes();
        let d = DMatrix::from_diagonal(&self.squeezing);
        let d_inv = DMatrix::from_diagonal(&self.squeezing.map(|s| 1.0 / s));
        let s_x = &self.feed_forward * d * &self.orthogonal;
        let a_inv_t = self
            .feed_forward
            .clone()
            .try_inverse()
            .ok_or(Error::SingularConditioning)?
            .transpose();
        let s_p = a_inv_t * d_inv * &self.orthogonal;
        debug_assert!(n == s_x.nrows());
        BlockDiagSymplectic::new(s_x, s_p)
    }
}

/// Gaussian state covariance matrix in shot-noise units.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    n_modes: usize,
    mat: DMatrix<f64>,
}

impl CovarianceMatrix {
    /// Wraps a symmetric `2n x 2n` matrix. Physicality (all symplectic
    /// eigenvalues at least one) is not enforced here; use
    /// [`CovarianceMatrix::is_physical`] where it matters.
    pub fn new(mat: DMatrix<f64>) -> Result<Self> {
        if !mat.is_square() {
            return Err(Error::DimensionMismatch {
                expected: mat.nrows(),
                found: mat.ncols(),
            });
        }
        if mat.nrows() % 2 != 0 {
            return Err(Error::OddDimension(mat.nrows()));
        }
        let asym = (&mat - mat.transpose()).amax();
        if asym > Tolerances::default().covariance_symmetry {
            return Err(Error::param(
                "matrix",
                format!("asymmetry {asym:.3e} exceeds tolerance"),
            ));
        }
        Ok(Self {
            n_modes: mat.nrows() / 2,
            mat,
        })
    }

    /// Input state of the eavesdropping model: mode 1 carries the modulated
    /// signal of total variance `v`, all other modes are vacuum, so the
    /// covariance is `diag(v, 1, .., 1, v, 1, .., 1)`.
    pub fn vacuum_with_signal(n_modes: usize, v: f64) -> Self {
        let n = n_modes;
        let mut d = DVector::from_element(2 * n, 1.0);
        d[0] = v;
        d[n] = v;
        Self {
            n_modes: n,
            mat: DMatrix::from_diagonal(&d),
        }
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    /// Symplectic spectrum: moduli of the eigenvalues of `beta_form^{-1} gamma`,
    /// each symplectic eigenvalue appearing twice.
    pub fn symplectic_eigenvalue_moduli(&self) -> Vec<f64> {
        let m = -beta_form(self.n_modes) * &self.mat;
        let eig = m.complex_eigenvalues();
        let mut moduli: Vec<f64> = eig.iter().map(|c| c.norm()).collect();
        moduli.sort_by(|a, b| a.partial_cmp(b).unwrap());
        moduli
    }

    /// All symplectic eigenvalues at least `1 - tol` in shot-noise units.
    pub fn is_physical(&self, tol: f64) -> bool {
        self.symplectic_eigenvalue_moduli()
            .iter()
            .all(|&nu| nu >= 1.0 - tol)
    }
}

/// `S gamma S^T`.
pub fn propagate(s: &SymplecticMatrix, gamma: &CovarianceMatrix) -> Result<CovarianceMatrix> {
    if s.n_modes() != gamma.n_modes() {
        return Err(Error::DimensionMismatch {
            expected: 2 * gamma.n_modes(),
            found: 2 * s.n_modes(),
        });
    }
    let mut out = s.matrix() * &gamma.mat * s.matrix().transpose();
    // exact symmetry: average away the rounding skew of the triple product
    let t = out.transpose();
    out += t;
    out *= 0.5;
    Ok(CovarianceMatrix {
        n_modes: gamma.n_modes,
        mat: out,
    })
}

impl BlockDiagSymplectic {
    /// Convenience wrapper over [`propagate`] for block-diagonal maps.
    pub fn propagate(&self, gamma: &CovarianceMatrix) -> Result<CovarianceMatrix> {
        propagate(&self.embed(), gamma)
    }
}

/// Schur-complement conditional variance of quadrature `target` given the
/// quadratures in `given`: `g_tt - g_tG (g_GG)^{-1} g_Gt`.
pub fn conditional_variance(
    gamma: &CovarianceMatrix,
    target: usize,
    given: &[usize],
) -> Result<f64> {
    conditional_variance_raw(&gamma.mat, target, given)
}

pub(crate) fn conditional_variance_raw(
    mat: &DMatrix<f64>,
    target: usize,
    given: &[usize],
) -> Result<f64> {
    if given.is_empty() {
        return Err(Error::param("given", "conditioning set is empty"));
    }
    let k = given.len();
    let mut ggg = DMatrix::zeros(k, k);
    let mut gtg = DVector::zeros(k);
    for (a, &i) in given.iter().enumerate() {
        gtg[a] = mat[(target, i)];
        for (b, &j) in given.iter().enumerate() {
            ggg[(a, b)] = mat[(i, j)];
        }
    }
    let chol = ggg.cholesky().ok_or(Error::SingularConditioning)?;
    let w = chol.solve(&gtg);
    Ok(mat[(target, target)] - gtg.dot(&w))
}

/// Determinant-ratio form of the conditional variance,
/// `det(gamma_{target+given}) / det(gamma_given)`. Agrees with the Schur
/// complement whenever both are defined.
pub fn conditional_variance_det_ratio(
    gamma: &CovarianceMatrix,
    target: usize,
    given: &[usize],
) -> Result<f64> {
    if given.is_empty() {
        return Err(Error::param("given", "conditioning set is empty"));
    }
    let mat = &gamma.mat;
    let mut idx = vec![target];
    idx.extend_from_slice(given);
    let top = DMatrix::from_fn(idx.len(), idx.len(), |a, b| mat[(idx[a], idx[b])]);
    let bot = DMatrix::from_fn(given.len(), given.len(), |a, b| mat[(given[a], given[b])]);
    let den = bot.determinant();
    if den.abs() < 1e-300 {
        return Err(Error::SingularConditioning);
    }
    Ok(top.determinant() / den)
}

/// Conditional variance computed from a Gram factor `F` with `gamma = F F^T`:
/// the squared residual of the target row after projecting onto the span of
/// the given rows. Avoids squaring the condition number of the conditioning
/// block, which matters for heavily squeezed multi-mode attacks.
pub fn conditional_variance_from_factor(
    factor: &DMatrix<f64>,
    target: usize,
    given: &[usize],
) -> Result<f64> {
    if given.is_empty() {
        return Err(Error::param("given", "conditioning set is empty"));
    }
    let n = factor.ncols();
    let k = given.len();
    let mut a = DMatrix::zeros(n, k);
    for (col, &i) in given.iter().enumerate() {
        for r in 0..n {
            a[(r, col)] = factor[(i, r)];
        }
    }
    let qr = a.qr();
    let q = qr.q();
    let mut res = factor.row(target).transpose();
    res -= &q * (q.transpose() * &res);
    // second projection pass restores orthogonality lost to rounding
    res -= &q * (q.transpose() * &res);
    Ok(res.norm_squared())
}

/// The three symplectic invariants of a 3-mode covariance matrix: sums of the
/// principal `2j x 2j` minors of `beta_form * gamma`, equal to the elementary
/// symmetric polynomials of the squared symplectic eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvariantTriple {
    pub delta1: f64,
    pub delta2: f64,
    pub delta3: f64,
}

pub fn symplectic_invariants(gamma: &CovarianceMatrix) -> Result<InvariantTriple> {
    if gamma.n_modes() != 3 {
        return Err(Error::UnsupportedModeCount(gamma.n_modes()));
    }
    let m = beta_form(3) * &gamma.mat;
    let mut delta1 = 0.0;
    for a in 0..6 {
        for b in a + 1..6 {
            let sub = Matrix2::new(m[(a, a)], m[(a, b)], m[(b, a)], m[(b, b)]);
            delta1 += sub.determinant();
        }
    }
    let mut delta2 = 0.0;
    for a in 0..6 {
        for b in a + 1..6 {
            for c in b + 1..6 {
                for d in c + 1..6 {
                    let idx = [a, b, c, d];
                    let sub = Matrix4::from_fn(|r, s| m[(idx[r], idx[s])]);
                    delta2 += sub.determinant();
                }
            }
        }
    }
    let delta3 = m.determinant();
    Ok(InvariantTriple {
        delta1,
        delta2,
        delta3,
    })
}

/// Deterministic Haar-like random orthogonal matrix: QR of a square matrix of
/// independent standard normals, columns sign-fixed by the R diagonal so both
/// determinant signs stay reachable.
pub fn random_orthogonal(n: usize, seed: u64) -> Result<DMatrix<f64>> {
    if n < 1 {
        return Err(Error::param("n", "must be at least 1"));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let m = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = m.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            for i in 0..n {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    Ok(q)
}

/// 3x3 rotation from z-y-z Euler angles, optionally composed with a
/// reflection to flip the determinant sign.
pub fn orthogonal_from_euler(alpha: f64, beta: f64, gamma: f64, reflect: bool) -> DMatrix<f64> {
    let rz = |t: f64| {
        DMatrix::from_row_slice(
            3,
            3,
            &[t.cos(), -t.sin(), 0.0, t.sin(), t.cos(), 0.0, 0.0, 0.0, 1.0],
        )
    };
    let ry = DMatrix::from_row_slice(
        3,
        3,
        &[
            beta.cos(),
            0.0,
            beta.sin(),
            0.0,
            1.0,
            0.0,
            -beta.sin(),
            0.0,
            beta.cos(),
        ],
    );
    let mut m = rz(alpha) * ry * rz(gamma);
    if reflect {
        for i in 0..3 {
            m[(i, 2)] = -m[(i, 2)];
        }
    }
    m
}

// ---- elementary optical components (block-diagonal symplectic) ----

/// Beam splitter of intensity transmission `t` coupling modes `i` and `j`.
pub fn beam_splitter(n_modes: usize, i: usize, j: usize, t: f64) -> BlockDiagSymplectic {
    let mut m = DMatrix::identity(n_modes, n_modes);
    let (c, s) = (t.sqrt(), (1.0 - t).sqrt());
    m[(i, i)] = c;
    m[(i, j)] = -s;
    m[(j, i)] = s;
    m[(j, j)] = c;
    BlockDiagSymplectic {
        n_modes,
        s_x: m.clone(),
        s_p: m,
    }
}

/// Balanced beam splitter `[[1, -1], [1, 1]]/sqrt(2)` on modes `i`, `j`.
pub fn fifty_fifty(n_modes: usize, i: usize, j: usize) -> BlockDiagSymplectic {
    let mut m = DMatrix::identity(n_modes, n_modes);
    let c = std::f64::consts::FRAC_1_SQRT_2;
    m[(i, i)] = c;
    m[(i, j)] = -c;
    m[(j, i)] = c;
    m[(j, j)] = c;
    BlockDiagSymplectic {
        n_modes,
        s_x: m.clone(),
        s_p: m,
    }
}

/// Single-mode squeezer scaling `X_i` by `s` and `P_i` by `1/s`.
pub fn squeezer(n_modes: usize, i: usize, s: f64) -> BlockDiagSymplectic {
    let mut s_x = DMatrix::identity(n_modes, n_modes);
    let mut s_p = DMatrix::identity(n_modes, n_modes);
    s_x[(i, i)] = s;
    s_p[(i, i)] = 1.0 / s;
    BlockDiagSymplectic { n_modes, s_x, s_p }
}

/// QND sum gate `X_to += gain * X_from`, with back-action `P_from -= gain * P_to`.
pub fn x_sum(n_modes: usize, from: usize, to: usize, gain: f64) -> BlockDiagSymplectic {
    let mut s_x = DMatrix::identity(n_modes, n_modes);
    let mut s_p = DMatrix::identity(n_modes, n_modes);
    s_x[(to, from)] = gain;
    s_p[(from, to)] = -gain;
    BlockDiagSymplectic { n_modes, s_x, s_p }
}

/// QND sum gate `P_to += gain * P_from`, with back-action `X_from -= gain * X_to`.
pub fn p_sum(n_modes: usize, from: usize, to: usize, gain: f64) -> BlockDiagSymplectic {
    let mut s_x = DMatrix::identity(n_modes, n_modes);
    let mut s_p = DMatrix::identity(n_modes, n_modes);
    s_p[(to, from)] = gain;
    s_x[(from, to)] = -gain;
    BlockDiagSymplectic { n_modes, s_x, s_p }
}

/// Exchange of modes `i` and `j`.
pub fn mode_swap(n_modes: usize, i: usize, j: usize) -> BlockDiagSymplectic {
    let mut m = DMatrix::identity(n_modes, n_modes);
    m[(i, i)] = 0.0;
    m[(j, j)] = 0.0;
    m[(i, j)] = 1.0;
    m[(j, i)] = 1.0;
    BlockDiagSymplectic {
        n_modes,
        s_x: m.clone(),
        s_p: m,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample_iwasawa3(a: f64, s: [f64; 3], euler: [f64; 3]) -> IwasawaParams {
        let mut ff = DMatrix::identity(3, 3);
        ff[(1, 0)] = a;
        IwasawaParams::new(
            ff,
            DVector::from_row_slice(&s),
            orthogonal_from_euler(euler[0], euler[1], euler[2], false),
        )
        .unwrap()
    }

    #[test]
    fn identity_is_symplectic() {
        for n in [1, 2, 3, 5] {
            let id = DMatrix::identity(2 * n, 2 * n);
            assert_eq!(symplectic_residual(&id).unwrap(), 0.0);
        }
    }

    #[test]
    fn odd_dimension_rejected() {
        let m = DMatrix::identity(3, 3);
        assert!(matches!(
            symplectic_residual(&m),
            Err(Error::OddDimension(3))
        ));
    }

    #[test]
    fn balanced_beam_splitter_residual() {
        let bs = fifty_fifty(2, 0, 1);
        assert!(bs.embed().residual() <= 1e-15);
    }

    #[test]
    fn iwasawa_composition_is_symplectic() {
        let p = sample_iwasawa3(0.3, [1.2, 0.9, 1.1], [0.1, 0.2, 0.3]);
        let s = p.compose().unwrap();
        assert!(s.embed().residual() <= 1e-12);
    }

    #[test]
    fn compose_identity_factors() {
        let p = sample_iwasawa3(0.0, [1.0, 1.0, 1.0], [0.0, 0.0, 0.0]);
        let s = p.compose().unwrap();
        assert_eq!(s.x_block(), &DMatrix::identity(3, 3));
        assert_eq!(s.p_block(), &DMatrix::identity(3, 3));
    }

    #[test]
    fn compose_single_squeezer() {
        let p = sample_iwasawa3(0.0, [2.0, 1.0, 1.0], [0.0, 0.0, 0.0]);
        let s = p.compose().unwrap();
        assert_eq!(s.x_block()[(0, 0)], 2.0);
        assert_eq!(s.p_block()[(0, 0)], 0.5);
        assert_eq!(s.x_block()[(1, 1)], 1.0);
    }

    #[test]
    fn nonpositive_squeezing_rejected() {
        let r = IwasawaParams::new(
            DMatrix::identity(3, 3),
            DVector::from_row_slice(&[1.0, -0.5, 1.0]),
            DMatrix::identity(3, 3),
        );
        assert!(r.is_err());
    }

    #[test]
    fn delta_accessor() {
        let mut ff = DMatrix::identity(3, 3);
        ff[(1, 0)] = 0.5;
        ff[(2, 0)] = 0.2;
        ff[(2, 1)] = 0.4;
        let p = IwasawaParams::new(
            ff,
            DVector::from_element(3, 1.0),
            DMatrix::identity(3, 3),
        )
        .unwrap();
        assert!((p.delta().unwrap() - (0.5 * 0.4 - 0.2)).abs() < 1e-15);
    }

    #[test]
    fn propagate_identity() {
        let g = CovarianceMatrix::vacuum_with_signal(3, 11.0);
        let out = propagate(&SymplecticMatrix::identity(3), &g).unwrap();
        assert_eq!(out.matrix(), g.matrix());
    }

    #[test]
    fn propagate_beam_splitter_mixing() {
        let t_e = 0.3;
        let g = CovarianceMatrix::vacuum_with_signal(2, 11.0);
        let out = beam_splitter(2, 0, 1, t_e).propagate(&g).unwrap();
        let expect = t_e * 11.0 + (1.0 - t_e);
        assert!((out.matrix()[(0, 0)] - expect).abs() < 1e-12);
    }

    #[test]
    fn invariants_of_input_state() {
        let g = CovarianceMatrix::vacuum_with_signal(3, 11.0);
        let inv = symplectic_invariants(&g).unwrap();
        assert!((inv.delta1 - 123.0).abs() < 1e-12);
        assert!((inv.delta2 - 243.0).abs() < 1e-12);
        assert!((inv.delta3 - 121.0).abs() < 1e-12);

        let vac = CovarianceMatrix::vacuum_with_signal(3, 1.0);
        let inv = symplectic_invariants(&vac).unwrap();
        assert!((inv.delta1 - 3.0).abs() < 1e-12);
        assert!((inv.delta2 - 3.0).abs() < 1e-12);
        assert!((inv.delta3 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn invariants_preserved_under_propagation() {
        let p = sample_iwasawa3(-0.7, [1.8, 0.6, 1.3], [0.4, 1.1, -0.5]);
        let s = p.compose().unwrap();
        for (v, expect) in [(5.0, [27.0, 51.0, 25.0]), (11.0, [123.0, 243.0, 121.0])] {
            let g = CovarianceMatrix::vacuum_with_signal(3, v);
            let out = s.propagate(&g).unwrap();
            let inv = symplectic_invariants(&out).unwrap();
            assert!((inv.delta1 - expect[0]).abs() < 1e-8);
            assert!((inv.delta2 - expect[1]).abs() < 1e-8);
            assert!((inv.delta3 - expect[2]).abs() < 1e-8);
        }
    }

    #[test]
    fn invariants_need_three_modes() {
        let g = CovarianceMatrix::vacuum_with_signal(2, 5.0);
        assert!(matches!(
            symplectic_invariants(&g),
            Err(Error::UnsupportedModeCount(2))
        ));
    }

    #[test]
    fn conditional_variance_uncorrelated_target() {
        let g = CovarianceMatrix::vacuum_with_signal(3, 7.0);
        let v = conditional_variance(&g, 0, &[1, 2]).unwrap();
        assert!((v - 7.0).abs() < 1e-14);
    }

    #[test]
    fn conditional_variance_two_by_two() {
        let m = DMatrix::from_row_slice(2, 2, &[5.0, 1.5, 1.5, 2.0]);
        let g = CovarianceMatrix::new(m).unwrap();
        let v = conditional_variance(&g, 0, &[1]).unwrap();
        assert!((v - (5.0 - 1.5 * 1.5 / 2.0)).abs() < 1e-14);
    }

    #[test]
    fn symplectic_spectrum_of_input_state() {
        let g = CovarianceMatrix::vacuum_with_signal(3, 11.0);
        let nus = g.symplectic_eigenvalue_moduli();
        assert!((nus[0] - 1.0).abs() < 1e-10);
        assert!((nus[5] - 11.0).abs() < 1e-10);
        assert!(g.is_physical(1e-8));
    }

    #[test]
    fn random_orthogonal_single_mode() {
        for seed in 0..20 {
            let q = random_orthogonal(1, seed).unwrap();
            assert!((q[(0, 0)].abs() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn random_orthogonal_residual_and_determinism() {
        for seed in [0, 1, 42, u64::MAX] {
            let q = random_orthogonal(3, seed).unwrap();
            let resid = (&q * q.transpose() - DMatrix::identity(3, 3)).amax();
            assert!(resid <= 1e-12);
            assert_eq!(q, random_orthogonal(3, seed).unwrap());
        }
    }

    #[test]
    fn random_orthogonal_sign_balance() {
        let negative = (0..10_000u64)
            .filter(|&s| random_orthogonal(3, s).unwrap().determinant() < 0.0)
            .count();
        let frac = negative as f64 / 10_000.0;
        assert!((0.45..=0.55).contains(&frac), "det<0 fraction {frac}");
    }

    #[test]
    fn factor_route_matches_schur_route() {
        let p = sample_iwasawa3(0.9, [1.5, 0.7, 1.2], [0.3, -0.8, 1.9]);
        let s = p.compose().unwrap();
        let v = 11.0;
        let g = s.propagate(&CovarianceMatrix::vacuum_with_signal(3, v)).unwrap();
        let mut factor = DMatrix::zeros(6, 6);
        let sq = v.sqrt();
        for r in 0..3 {
            for c in 0..3 {
                let w = if c == 0 { sq } else { 1.0 };
                factor[(r, c)] = s.x_block()[(r, c)] * w;
                factor[(3 + r, 3 + c)] = s.p_block()[(r, c)] * w;
            }
        }
        for target in [0usize, 3] {
            for given in [vec![1], vec![1, 2], vec![4, 5]] {
                let a = conditional_variance(&g, target, &given).unwrap();
                let b = conditional_variance_from_factor(&factor, target, &given).unwrap();
                let c = conditional_variance_det_ratio(&g, target, &given).unwrap();
                assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0));
                assert!((a - c).abs() <= 1e-10 * a.abs().max(1.0));
            }
        }
    }

    proptest! {
        #[test]
        fn prop_iwasawa_residual(
            a in -3.0f64..3.0, b in -3.0f64..3.0, c in -3.0f64..3.0,
            e1 in -2.0f64..2.0, e2 in -2.0f64..2.0, e3 in -2.0f64..2.0,
            ang1 in -3.0f64..3.0, ang2 in -3.0f64..3.0, ang3 in -3.0f64..3.0,
            reflect in proptest::bool::ANY,
        ) {
            let mut ff = DMatrix::identity(3, 3);
            ff[(1, 0)] = a;
            ff[(2, 0)] = b;
            ff[(2, 1)] = c;
            let p = IwasawaParams::new(
                ff,
                DVector::from_row_slice(&[e1.exp(), e2.exp(), e3.exp()]),
                orthogonal_from_euler(ang1, ang2, ang3, reflect),
            ).unwrap();
            let s = p.compose().unwrap();
            prop_assert!(s.embed().residual() <= 1e-10);
        }

        #[test]
        fn prop_schur_equals_det_ratio_and_monotone(
            a in -2.0f64..2.0,
            e1 in -1.5f64..1.5, e2 in -1.5f64..1.5, e3 in -1.5f64..1.5,
            ang1 in -3.0f64..3.0, ang2 in -3.0f64..3.0, ang3 in -3.0f64..3.0,
            v in 1.0f64..40.0,
        ) {
            let mut ff = DMatrix::identity(3, 3);
            ff[(1, 0)] = a;
            let p = IwasawaParams::new(
                ff,
                DVector::from_row_slice(&[e1.exp(), e2.exp(), e3.exp()]),
                orthogonal_from_euler(ang1, ang2, ang3, false),
            ).unwrap();
            let g = p.compose().unwrap()
                .propagate(&CovarianceMatrix::vacuum_with_signal(3, v)).unwrap();
            let schur = conditional_variance(&g, 0, &[1, 2]).unwrap();
            let ratio = conditional_variance_det_ratio(&g, 0, &[1, 2]).unwrap();
            prop_assert!((schur - ratio).abs() <= 1e-10 * schur.abs().max(1.0));
            // conditioning on more quadratures cannot increase the variance
            let less = conditional_variance(&g, 0, &[1]).unwrap();
            prop_assert!(schur <= less + 1e-10);
        }
    }
}
