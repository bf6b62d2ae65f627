//! Randomized verification of the two structural results over
//! Iwasawa-parameterized attacks: the homodyne optimality theorem (every
//! quantum-memory attack reaches the homodyne bound exactly, asymmetric
//! channels included) and the heterodyne information bound.
//!
//! Determinism: every sample derives its own counter-mixed RNG from
//! `(seed, index)`, so outcomes do not depend on thread scheduling.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::attacks::{symmetrize, Sign};
use crate::bounds::{heterodyne_conditional_min, heterodyne_eve_noise_min, total_added_noise};
use crate::error::{Error, Result};
use crate::gaussian::{
    conditional_variance_from_factor, random_orthogonal, BlockDiagSymplectic, IwasawaParams,
};
use crate::report::format_significant;

/// Which structural result a run verifies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchMode {
    Homodyne,
    Heterodyne,
}

impl std::fmt::Display for SearchMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SearchMode::Homodyne => "homodyne",
            SearchMode::Heterodyne => "heterodyne",
        })
    }
}

/// How heterodyne verification obtains symmetric-channel samples: build them
/// through the symmetrized family constructor (exact symmetry), or draw fully
/// random attacks and skip those whose channel is not symmetric within
/// `1e-6`. The conditioned mode rejects almost every continuous draw and is
/// kept for completeness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelSampling {
    Symmetrized,
    Conditioned,
}

/// Randomized-search configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    /// Eve holds `2 n_pairs` ancilla modes; the attack acts on `2 n_pairs + 1`.
    pub n_pairs: usize,
    pub samples: u64,
    pub seed: u64,
    /// Alice's total variance V.
    pub modulation: f64,
    /// Channel transmission for heterodyne-family generation.
    pub transmission: f64,
    /// Channel excess noise for heterodyne-family generation.
    pub excess_noise: f64,
    /// Log-uniform exponent range of the squeezing factors.
    pub squeeze_exp_range: (f64, f64),
    /// Standard deviation of the feed-forward subdiagonal entries.
    pub feed_forward_spread: f64,
    pub channel_sampling: ChannelSampling,
    /// Deviation/violation tolerance.
    pub tolerance: f64,
    /// Per-sample records are stored for indices below this cap; aggregates
    /// always cover every sample.
    pub record_capacity: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            n_pairs: 1,
            samples: 100_000,
            seed: 1,
            modulation: 11.0,
            transmission: 0.5,
            excess_noise: 0.02,
            squeeze_exp_range: (-2.0, 2.0),
            feed_forward_spread: 1.0,
            channel_sampling: ChannelSampling::Symmetrized,
            tolerance: 1e-8,
            record_capacity: u64::MAX,
        }
    }
}

impl SearchConfig {
    fn validate(&self) -> Result<()> {
        if self.samples < 1 {
            return Err(Error::param("samples", "need at least one sample"));
        }
        if self.n_pairs < 1 {
            return Err(Error::param("n_pairs", "Eve needs at least one ancilla pair"));
        }
        let (lo, hi) = self.squeeze_exp_range;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::param("squeeze_exp_range", "bounds must be finite and ordered"));
        }
        if self.modulation < 1.0 {
            return Err(Error::param("modulation", "total variance is at least shot noise"));
        }
        Ok(())
    }

    fn n_modes(&self) -> usize {
        2 * self.n_pairs + 1
    }
}

/// Outcome of one verification run. Margins are signed and never clipped:
/// a negative margin is a violation of the corresponding inequality.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub mode: SearchMode,
    pub n_pairs: usize,
    pub samples: u64,
    pub seed: u64,
    /// Samples that entered the comparison.
    pub evaluated: u64,
    /// Samples skipped for numerically degenerate Eve information.
    pub degenerate: u64,
    /// Samples skipped for an asymmetric channel (conditioned sampling only).
    pub rejected: u64,
    pub violations: u64,
    /// Homodyne: worst relative deviation from the closed-form equality.
    pub max_equality_deviation: f64,
    /// Heterodyne: smallest margin of the conditional-variance product over
    /// the squared bound (reverse reconciliation).
    pub min_product_margin: f64,
    /// Heterodyne: smallest margin of the information bound in bits
    /// (direct reconciliation).
    pub min_info_margin: f64,
    pub records: Vec<SampleRecord>,
}

/// Per-sample channel parameters and check results.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleRecord {
    pub index: u64,
    pub t_x: f64,
    pub chi_x: f64,
    pub t_p: f64,
    pub chi_p: f64,
    pub degenerate: bool,
    pub rejected: bool,
    /// Worst relative deviation over the four homodyne equalities.
    pub deviation: Option<f64>,
    /// Reverse-reconciliation product margin.
    pub rr_margin: Option<f64>,
    /// Direct-reconciliation information margin in bits.
    pub dr_margin: Option<f64>,
}

impl SearchOutcome {
    /// A run passes when nothing was violated and, for homodyne runs, the
    /// worst equality deviation stays within tolerance.
    pub fn passed(&self, tolerance: f64) -> bool {
        self.violations == 0
            && match self.mode {
                SearchMode::Homodyne => self.max_equality_deviation <= tolerance,
                SearchMode::Heterodyne => {
                    self.min_product_margin >= -tolerance && self.min_info_margin >= -tolerance
                }
            }
    }

    /// One human-readable pass/fail line.
    pub fn summary_line(&self, tolerance: f64) -> String {
        let verdict = if self.passed(tolerance) { "PASS" } else { "FAIL" };
        match self.mode {
            SearchMode::Homodyne => format!(
                "homodyne optimality [pairs={} samples={} seed={}]: evaluated={} degenerate={} \
                 max deviation={} ({verdict})",
                self.n_pairs,
                self.samples,
                self.seed,
                self.evaluated,
                self.degenerate,
                format_significant(self.max_equality_deviation, 12),
            ),
            SearchMode::Heterodyne => format!(
                "heterodyne bound [pairs={} samples={} seed={}]: evaluated={} rejected={} \
                 violations={} min RR margin={} min DR margin={} bits ({verdict})",
                self.n_pairs,
                self.samples,
                self.seed,
                self.evaluated,
                self.rejected,
                self.violations,
                format_significant(self.min_product_margin, 12),
                format_significant(self.min_info_margin, 12),
            ),
        }
    }

    pub const CSV_HEADER: &'static str = "mode,pairs,samples,seed,evaluated,degenerate,rejected,\
violations,max_equality_deviation,min_product_margin,min_info_margin";

    /// Machine-readable one-line summary following the shared CSV conventions.
    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.mode,
            self.n_pairs,
            self.samples,
            self.seed,
            self.evaluated,
            self.degenerate,
            self.rejected,
            self.violations,
            format_significant(self.max_equality_deviation, 12),
            format_significant(self.min_product_margin, 12),
            format_significant(self.min_info_margin, 12),
        )
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Counter-based per-sample seed so outcomes are independent of scheduling.
fn sample_seed(seed: u64, index: u64) -> u64 {
    let mut state = seed ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03);
    let a = splitmix64(&mut state);
    let b = splitmix64(&mut state);
    a ^ b.rotate_left(32)
}

fn sample_iwasawa<R: Rng>(
    rng: &mut R,
    n: usize,
    spread: f64,
    exp_range: (f64, f64),
) -> Result<BlockDiagSymplectic> {
    let mut ff = DMatrix::identity(n, n);
    for i in 1..n {
        for j in 0..i {
            let g: f64 = rng.sample(StandardNormal);
            ff[(i, j)] = spread * g;
        }
    }
    let (lo, hi) = exp_range;
    let squeeze = DVector::from_fn(n, |_, _| {
        let e = if hi > lo { rng.random_range(lo..hi) } else { lo };
        e.exp()
    });
    let orth = if spread == 0.0 && lo == 0.0 && hi == 0.0 {
        // fully degenerate distributions pin every factor
        DMatrix::identity(n, n)
    } else {
        random_orthogonal(n, rng.random::<u64>())?
    };
    IwasawaParams::new(ff, squeeze, orth)?.compose()
}

/// Deterministic random attack on `2 n_pairs + 1` modes for `(seed, index)`.
pub fn random_attack(cfg: &SearchConfig, index: u64) -> Result<BlockDiagSymplectic> {
    let mut rng = ChaCha12Rng::seed_from_u64(sample_seed(cfg.seed, index));
    sample_iwasawa(
        &mut rng,
        cfg.n_modes(),
        cfg.feed_forward_spread,
        cfg.squeeze_exp_range,
    )
}

/// Signal-row channel parameters for any mode count.
fn channel_rows(s: &BlockDiagSymplectic) -> Option<(f64, f64, f64, f64)> {
    let row = |block: &DMatrix<f64>| -> Option<(f64, f64)> {
        let t = block[(0, 0)] * block[(0, 0)];
        if t < 1e-24 {
            return None;
        }
        let noise: f64 = (1..block.ncols()).map(|j| block[(0, j)].powi(2)).sum();
        Some((t, noise / t))
    };
    let (t_x, chi_x) = row(s.x_block())?;
    let (t_p, chi_p) = row(s.p_block())?;
    Some((t_x, chi_x, t_p, chi_p))
}

/// Gram factor of the output covariance for one quadrature block: column `0`
/// carries weight `sqrt(v)`, the ancilla columns weight one.
fn block_factor(block: &DMatrix<f64>, v: f64) -> DMatrix<f64> {
    let n = block.nrows();
    let w = v.sqrt();
    DMatrix::from_fn(n, n, |i, j| block[(i, j)] * if j == 0 { w } else { 1.0 })
}

/// Gram factor of the Alice-extended quadrature covariance: variable `0` is
/// Alice's modulation value with variance `v - 1`, fully correlated with the
/// signal input; variables `1..=n` are the transformed modes.
fn alice_extended_factor(block: &DMatrix<f64>, v: f64) -> DMatrix<f64> {
    let n = block.nrows();
    let m = n + 1;
    let w = (v - 1.0).sqrt();
    let mut f = DMatrix::zeros(m, m);
    f[(0, 0)] = w;
    for i in 0..n {
        // mode input i expands over (modulation, signal vacuum, ancillas)
        f[(1 + i, 0)] = block[(i, 0)] * w;
        for j in 0..n {
            f[(1 + i, 1 + j)] = block[(i, j)];
        }
    }
    f
}

struct Aggregate {
    evaluated: u64,
    degenerate: u64,
    rejected: u64,
    violations: u64,
    max_dev: f64,
    min_rr: f64,
    min_dr: f64,
    records: Vec<SampleRecord>,
}

impl Aggregate {
    fn empty() -> Self {
        Self {
            evaluated: 0,
            degenerate: 0,
            rejected: 0,
            violations: 0,
            max_dev: 0.0,
            min_rr: f64::INFINITY,
            min_dr: f64::INFINITY,
            records: Vec::new(),
        }
    }

    fn absorb(mut self, rec: SampleRecord, keep: bool, tol: f64) -> Self {
        if rec.rejected {
            self.rejected += 1;
        } else if rec.degenerate {
            self.degenerate += 1;
        } else {
            self.evaluated += 1;
            let mut violated = false;
            if let Some(d) = rec.deviation {
                self.max_dev = self.max_dev.max(d);
                violated |= d > tol;
            }
            if let Some(m) = rec.rr_margin {
                self.min_rr = self.min_rr.min(m);
                violated |= m < -tol;
            }
            if let Some(m) = rec.dr_margin {
                self.min_dr = self.min_dr.min(m);
                violated |= m < -tol;
            }
            if violated {
                self.violations += 1;
            }
        }
        if keep {
            self.records.push(rec);
        }
        self
    }

    fn merge(mut self, mut other: Self) -> Self {
        self.evaluated += other.evaluated;
        self.degenerate += other.degenerate;
        self.rejected += other.rejected;
        self.violations += other.violations;
        self.max_dev = self.max_dev.max(other.max_dev);
        self.min_rr = self.min_rr.min(other.min_rr);
        self.min_dr = self.min_dr.min(other.min_dr);
        self.records.append(&mut other.records);
        self
    }

    fn into_outcome(mut self, mode: SearchMode, cfg: &SearchConfig) -> SearchOutcome {
        self.records.sort_by_key(|r| r.index);
        SearchOutcome {
            mode,
            n_pairs: cfg.n_pairs,
            samples: cfg.samples,
            seed: cfg.seed,
            evaluated: self.evaluated,
            degenerate: self.degenerate,
            rejected: self.rejected,
            violations: self.violations,
            max_equality_deviation: self.max_dev,
            min_product_margin: if self.min_rr.is_finite() { self.min_rr } else { 0.0 },
            min_info_margin: if self.min_dr.is_finite() { self.min_dr } else { 0.0 },
            records: self.records,
        }
    }
}

/// Checks, over random attacks with quantum-memory measurements (Eve measures
/// the same quadrature as Bob on all ancillas), that the conditional variances
/// equal the closed forms `V / (T' (V chi' + 1))` (reverse reconciliation) and
/// `(V - 1)(1 + chi') / (V chi' + 1)` (direct), `chi'` being the unmeasured
/// quadrature's channel noise.
pub fn verify_homodyne_optimality(cfg: &SearchConfig) -> Result<SearchOutcome> {
    cfg.validate()?;
    let v = cfg.modulation;
    let n = cfg.n_modes();
    let agg = (0..cfg.samples)
        .into_par_iter()
        .map(|index| -> Result<SampleRecord> {
            let s = random_attack(cfg, index)?;
            let mut rec = SampleRecord {
                index,
                t_x: f64::NAN,
                chi_x: f64::NAN,
                t_p: f64::NAN,
                chi_p: f64::NAN,
                degenerate: false,
                rejected: false,
                deviation: None,
                rr_margin: None,
                dr_margin: None,
            };
            let Some((t_x, chi_x, t_p, chi_p)) = channel_rows(&s) else {
                rec.degenerate = true;
                return Ok(rec);
            };
            rec.t_x = t_x;
            rec.chi_x = chi_x;
            rec.t_p = t_p;
            rec.chi_p = chi_p;
            let coupled = |block: &DMatrix<f64>| (1..n).any(|i| block[(i, 0)].abs() > 1e-12);
            if !coupled(s.x_block()) || !coupled(s.p_block()) {
                rec.degenerate = true;
                return Ok(rec);
            }
            let eve: Vec<usize> = (1..n).collect();
            let eve_alice: Vec<usize> = (2..n + 1).collect();
            let fx = block_factor(s.x_block(), v);
            let fp = block_factor(s.p_block(), v);
            let rr_x = conditional_variance_from_factor(&fx, 0, &eve)?;
            let rr_p = conditional_variance_from_factor(&fp, 0, &eve)?;
            let ax = alice_extended_factor(s.x_block(), v);
            let ap = alice_extended_factor(s.p_block(), v);
            let dr_x = conditional_variance_from_factor(&ax, 0, &eve_alice)?;
            let dr_p = conditional_variance_from_factor(&ap, 0, &eve_alice)?;
            let rr_x_ref = v / (t_p * (v * chi_p + 1.0));
            let rr_p_ref = v / (t_x * (v * chi_x + 1.0));
            let dr_x_ref = (v - 1.0) * (1.0 + chi_p) / (v * chi_p + 1.0);
            let dr_p_ref = (v - 1.0) * (1.0 + chi_x) / (v * chi_x + 1.0);
            let rel = |got: f64, want: f64| (got / want - 1.0).abs();
            let dev = rel(rr_x, rr_x_ref)
                .max(rel(rr_p, rr_p_ref))
                .max(rel(dr_x, dr_x_ref))
                .max(rel(dr_p, dr_p_ref));
            rec.deviation = Some(dev);
            Ok(rec)
        })
        .try_fold(Aggregate::empty, |acc, rec| {
            let rec = rec?;
            let keep = rec.index < cfg.record_capacity;
            Ok(acc.absorb(rec, keep, cfg.tolerance))
        })
        .try_reduce(Aggregate::empty, |a, b| Ok(a.merge(b)))?;
    Ok(agg.into_outcome(SearchMode::Homodyne, cfg))
}

/// Checks, over random symmetric attacks, that Eve's heterodyne information
/// stays below the tight bound: the conditional-variance product satisfies
/// `(V_X|E + 1)(V_P|E + 1) >= (V_min + 1)^2` and the direct-reconciliation
/// information stays below `log2((V + chi_E_min)/(1 + chi_E_min))`.
///
/// Eve measures X on her first `n_pairs` ancillas and P on the rest. In
/// symmetrized sampling each draw composes a random family member with a
/// random symplectic stage on Eve's modes, which leaves the channel exactly
/// symmetric while spreading her information over all ancillas.
pub fn verify_heterodyne_bound(cfg: &SearchConfig) -> Result<SearchOutcome> {
    cfg.validate()?;
    let v = cfg.modulation;
    let n = cfg.n_modes();
    let p = cfg.n_pairs;
    let chi = total_added_noise(cfg.transmission, cfg.excess_noise)?;
    let chi_e = heterodyne_eve_noise_min(cfg.transmission, cfg.excess_noise)?;
    let v_min = heterodyne_conditional_min(v, chi_e)?;
    let rr_bound = (v_min + 1.0) * (v_min + 1.0);
    let dr_bound = if chi_e.is_infinite() {
        0.0
    } else {
        ((v + chi_e) / (1.0 + chi_e)).log2()
    };
    let b4_max = (chi / (1.0 + chi)).sqrt();

    let x_set: Vec<usize> = (1..=p).collect();
    let p_set: Vec<usize> = (p + 1..=2 * p).collect();
    let x_set_alice: Vec<usize> = x_set.iter().map(|&m| m + 1).collect();
    let p_set_alice: Vec<usize> = p_set.iter().map(|&m| m + 1).collect();

    let agg = (0..cfg.samples)
        .into_par_iter()
        .map(|index| -> Result<SampleRecord> {
            let mut rng = ChaCha12Rng::seed_from_u64(sample_seed(cfg.seed, index));
            let mut rec = SampleRecord {
                index,
                t_x: f64::NAN,
                chi_x: f64::NAN,
                t_p: f64::NAN,
                chi_p: f64::NAN,
                degenerate: false,
                rejected: false,
                deviation: None,
                rr_margin: None,
                dr_margin: None,
            };
            let s = match cfg.channel_sampling {
                ChannelSampling::Symmetrized => {
                    let sigma = if rng.random::<bool>() { Sign::Plus } else { Sign::Minus };
                    let fam = loop {
                        let b4 = if b4_max > 0.0 {
                            rng.random_range(-b4_max..b4_max)
                        } else {
                            0.0
                        };
                        match symmetrize(cfg.transmission, chi, b4, sigma) {
                            Ok(f) => break f,
                            Err(_) => continue,
                        }
                    };
                    let core = embed_three_mode(fam.attack(), n, p);
                    let mixing = sample_iwasawa(
                        &mut rng,
                        2 * p,
                        cfg.feed_forward_spread,
                        cfg.squeeze_exp_range,
                    )?;
                    embed_eve_stage(&mixing, n).compose(&core)?
                }
                ChannelSampling::Conditioned => {
                    let s = sample_iwasawa(
                        &mut rng,
                        n,
                        cfg.feed_forward_spread,
                        cfg.squeeze_exp_range,
                    )?;
                    let Some((t_x, chi_x, t_p, chi_p)) = channel_rows(&s) else {
                        rec.degenerate = true;
                        return Ok(rec);
                    };
                    if (t_x - t_p).abs() > 1e-6 || (chi_x - chi_p).abs() > 1e-6 {
                        rec.t_x = t_x;
                        rec.chi_x = chi_x;
                        rec.t_p = t_p;
                        rec.chi_p = chi_p;
                        rec.rejected = true;
                        return Ok(rec);
                    }
                    s
                }
            };
            let Some((t_x, chi_x, t_p, chi_p)) = channel_rows(&s) else {
                rec.degenerate = true;
                return Ok(rec);
            };
            rec.t_x = t_x;
            rec.chi_x = chi_x;
            rec.t_p = t_p;
            rec.chi_p = chi_p;
            let (rr_b, dr_b) = match cfg.channel_sampling {
                ChannelSampling::Symmetrized => (rr_bound, dr_bound),
                ChannelSampling::Conditioned => {
                    // bound at the sample's own (nearly) symmetric channel
                    let eps = 0.5 * ((chi_x - (1.0 / t_x - 1.0)) + (chi_p - (1.0 / t_p - 1.0)));
                    let t = 0.5 * (t_x + t_p);
                    let ce = heterodyne_eve_noise_min(t, eps.max(0.0))?;
                    let vm = heterodyne_conditional_min(v, ce)?;
                    let db = if ce.is_infinite() {
                        0.0
                    } else {
                        ((v + ce) / (1.0 + ce)).log2()
                    };
                    ((vm + 1.0) * (vm + 1.0), db)
                }
            };
            let fx = block_factor(s.x_block(), v);
            let fp = block_factor(s.p_block(), v);
            let v_x = conditional_variance_from_factor(&fx, 0, &x_set)?;
            let v_p = conditional_variance_from_factor(&fp, 0, &p_set)?;
            rec.rr_margin = Some((v_x + 1.0) * (v_p + 1.0) - rr_b);
            let ax = alice_extended_factor(s.x_block(), v);
            let ap = alice_extended_factor(s.p_block(), v);
            let v_xa = conditional_variance_from_factor(&ax, 0, &x_set_alice)?;
            let v_pa = conditional_variance_from_factor(&ap, 0, &p_set_alice)?;
            let i_ae = 0.5 * ((v - 1.0) / v_xa).log2() + 0.5 * ((v - 1.0) / v_pa).log2();
            rec.dr_margin = Some(dr_b - i_ae);
            Ok(rec)
        })
        .try_fold(Aggregate::empty, |acc, rec| {
            let rec = rec?;
            let keep = rec.index < cfg.record_capacity;
            Ok(acc.absorb(rec, keep, cfg.tolerance))
        })
        .try_reduce(Aggregate::empty, |a, b| Ok(a.merge(b)))?;
    Ok(agg.into_outcome(SearchMode::Heterodyne, cfg))
}

/// Embeds a three-mode attack into `n` modes with the signal on mode 0, the
/// X-measured ancilla on mode 1 and the P-measured ancilla on mode `p + 1`.
fn embed_three_mode(core: &BlockDiagSymplectic, n: usize, p: usize) -> BlockDiagSymplectic {
    let map = [0usize, 1, p + 1];
    let place = |block: &DMatrix<f64>| {
        let mut m = DMatrix::identity(n, n);
        for i in 0..3 {
            for j in 0..3 {
                m[(map[i], map[j])] = block[(i, j)];
            }
        }
        m
    };
    BlockDiagSymplectic::new(place(core.x_block()), place(core.p_block()))
        .expect("embedding preserves symplecticity")
}

/// Embeds a symplectic stage on Eve's `n - 1` ancillas (modes `1..n`).
fn embed_eve_stage(stage: &BlockDiagSymplectic, n: usize) -> BlockDiagSymplectic {
    let k = stage.n_modes();
    debug_assert_eq!(k + 1, n);
    let place = |block: &DMatrix<f64>| {
        let mut m = DMatrix::identity(n, n);
        for i in 0..k {
            for j in 0..k {
                m[(1 + i, 1 + j)] = block[(i, j)];
            }
        }
        m
    };
    BlockDiagSymplectic::new(place(stage.x_block()), place(stage.p_block()))
        .expect("embedding preserves symplecticity")
}
