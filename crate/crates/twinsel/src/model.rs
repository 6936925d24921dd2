//! Gaussian source model for quantum-correlated twin beams.
//!
//! At a fixed analysis frequency the joint intensity fluctuations of the
//! signal and idler beams are well described by a zero-mean bivariate
//! Gaussian. The model is parameterised the way the quantities are measured:
//! each beam's total noise `V` in shot units (its Fano factor) and the
//! twin-beam gemellity `G = Var(signal - idler) / 2`, from which the
//! covariance follows as `cov = (V_s + V_i) / 2 - G`.
//!
//! Detection imperfections are layered on explicitly: optical/detection loss
//! mixes in vacuum ([`apply_loss`]), electronic dark noise adds an
//! independent Gaussian floor ([`add_dark_noise`]), and the acquisition card
//! rounds samples to a finite grid ([`quantize`]). Each stage is a pure
//! function, so pipelines stay reproducible sample-for-sample from the
//! seeds.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::trace::{Trace, TraceError, TraceMeta};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ModelError {
    #[error("beam noise must be positive and finite, got {0}")]
    InvalidExcess(f64),
    #[error("gemellity must be non-negative and finite, got {0}")]
    InvalidGemellity(f64),
    #[error("loss must lie in [0, 1], got {0}")]
    InvalidLoss(f64),
    #[error("dark-noise variance must be non-negative and finite, got {0}")]
    InvalidDarkVariance(f64),
    #[error("variance must be non-negative and finite, got {0}")]
    InvalidVariance(f64),
    #[error(
        "unphysical covariance matrix: cov = {cov} exceeds the \
         positive-semidefinite bound sqrt({v_s} * {v_i})"
    )]
    NotPositiveSemidefinite { v_s: f64, v_i: f64, cov: f64 },
    #[error("quantizer bits must lie in 1..=52, got {0}")]
    InvalidBits(u32),
    #[error("quantizer full scale must be positive and finite, got {0}")]
    InvalidFullScale(f64),
    #[error("calibration trace needs at least 2 samples, got {0}")]
    CalibrationTooShort(usize),
    #[error(transparent)]
    Trace(#[from] TraceError),
}

/// Source and detection-chain parameters, all in shot-noise units.
///
/// `excess_signal` / `excess_idler` are the single-beam noise levels `V_s`,
/// `V_i`: the variance of each beam alone in shot units (its Fano factor).
/// Twin beams from an above-threshold parametric oscillator are individually
/// very noisy (`V ~ 100`, i.e. 20 dB above shot noise) while their
/// difference is quiet: `gemellity < 1` beats the classical limit for two
/// independent beams and `gemellity < 0.5` has no classical explanation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwinBeamModel {
    /// Signal-beam noise `V_s` in shot units.
    pub excess_signal: f64,
    /// Idler-beam noise `V_i` in shot units.
    pub excess_idler: f64,
    /// Intensity-difference noise `G = Var(s - i) / 2` in shot units.
    pub gemellity: f64,
    /// Fractional loss in the signal detection path, in `[0, 1]`.
    #[serde(default)]
    pub loss_signal: f64,
    /// Fractional loss in the idler detection path, in `[0, 1]`.
    #[serde(default)]
    pub loss_idler: f64,
    /// Electronic dark-noise variance added to each channel, shot units.
    #[serde(default)]
    pub dark_variance: f64,
}

impl Default for TwinBeamModel {
    /// The reference operating point used throughout the test suite: both
    /// beams 20 dB above shot noise, gemellity 0.178 (-7.5 dB), lossless
    /// detection, no dark noise.
    fn default() -> Self {
        TwinBeamModel {
            excess_signal: 100.0,
            excess_idler: 100.0,
            gemellity: 0.178,
            loss_signal: 0.0,
            loss_idler: 0.0,
            dark_variance: 0.0,
        }
    }
}

impl TwinBeamModel {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !self.excess_signal.is_finite() || self.excess_signal <= 0.0 {
            return Err(ModelError::InvalidExcess(self.excess_signal));
        }
        if !self.excess_idler.is_finite() || self.excess_idler <= 0.0 {
            return Err(ModelError::InvalidExcess(self.excess_idler));
        }
        if !self.gemellity.is_finite() || self.gemellity < 0.0 {
            return Err(ModelError::InvalidGemellity(self.gemellity));
        }
        for &loss in &[self.loss_signal, self.loss_idler] {
            if !loss.is_finite() || !(0.0..=1.0).contains(&loss) {
                return Err(ModelError::InvalidLoss(loss));
            }
        }
        if !self.dark_variance.is_finite() || self.dark_variance < 0.0 {
            return Err(ModelError::InvalidDarkVariance(self.dark_variance));
        }
        Ok(())
    }

    /// The covariance matrix actually seen by the digitiser: source
    /// covariance with the per-channel losses applied. Dark noise is *not*
    /// folded in here — it is additive on the samples, not part of the
    /// optical state.
    pub fn effective_covariance(&self) -> Result<CovarianceMatrix, ModelError> {
        let source = build_covariance(self)?;
        apply_loss(&source, self.loss_signal, self.loss_idler)
    }

    /// Total per-channel sample variances `(signal, idler)` including dark
    /// noise — what a variance estimator on the recorded trace converges to.
    pub fn channel_variances(&self) -> Result<(f64, f64), ModelError> {
        let cov = self.effective_covariance()?;
        Ok((
            cov.v_signal() + self.dark_variance,
            cov.v_idler() + self.dark_variance,
        ))
    }

    /// Default digitiser full scale: four standard deviations of the louder
    /// channel (dark noise included), so clipping is a < 1e-4 tail event.
    pub fn default_full_scale(&self) -> Result<f64, ModelError> {
        let (v_s, v_i) = self.channel_variances()?;
        Ok(4.0 * v_s.max(v_i).sqrt())
    }
}

/// A validated 2x2 covariance matrix for the (signal, idler) fluctuations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceMatrix {
    v_s: f64,
    v_i: f64,
    cov: f64,
}

impl CovarianceMatrix {
    /// Builds a covariance matrix, rejecting negative variances and
    /// off-diagonal terms beyond the positive-semidefinite bound
    /// `cov^2 <= v_s * v_i` (a relative slack of 1e-12 absorbs rounding in
    /// matrices arriving from arithmetic like loss application).
    pub fn new(v_s: f64, v_i: f64, cov: f64) -> Result<Self, ModelError> {
        for &v in &[v_s, v_i] {
            if !v.is_finite() || v < 0.0 {
                return Err(ModelError::InvalidVariance(v));
            }
        }
        if !cov.is_finite() {
            return Err(ModelError::InvalidVariance(cov));
        }
        let bound = v_s * v_i;
        if cov * cov > bound * (1.0 + 1e-12) {
            return Err(ModelError::NotPositiveSemidefinite { v_s, v_i, cov });
        }
        Ok(CovarianceMatrix { v_s, v_i, cov })
    }

    pub fn v_signal(&self) -> f64 {
        self.v_s
    }

    pub fn v_idler(&self) -> f64 {
        self.v_i
    }

    pub fn covariance(&self) -> f64 {
        self.cov
    }

    pub fn sigma_signal(&self) -> f64 {
        self.v_s.sqrt()
    }

    pub fn sigma_idler(&self) -> f64 {
        self.v_i.sqrt()
    }

    /// The gemellity this matrix implies: `(v_s + v_i) / 2 - cov`. Inverts
    /// [`build_covariance`] up to floating-point rounding.
    pub fn implied_gemellity(&self) -> f64 {
        (self.v_s + self.v_i) / 2.0 - self.cov
    }
}

/// Builds the source covariance matrix from single-beam noises and
/// gemellity: `v_s = V_s`, `v_i = V_i`, `cov = (V_s + V_i) / 2 - G`.
///
/// Parameter sets whose implied matrix is not positive semidefinite (for
/// example strongly unbalanced beams with a tiny gemellity) are rejected —
/// no silent clamping.
pub fn build_covariance(model: &TwinBeamModel) -> Result<CovarianceMatrix, ModelError> {
    model.validate()?;
    let cov = (model.excess_signal + model.excess_idler) / 2.0 - model.gemellity;
    CovarianceMatrix::new(model.excess_signal, model.excess_idler, cov)
}

/// Mixes vacuum into each channel: a fractional loss `L` maps a variance
/// `v` to `(1 - L) v + L` (the lost light is replaced by unit shot noise)
/// and scales the covariance by `sqrt((1 - L_s)(1 - L_i))`.
///
/// Equal loss on both channels degrades the gemellity as
/// `G' = (1 - L) G + L`, and two successive losses compose like a single
/// loss of `1 - (1 - L1)(1 - L2)`.
pub fn apply_loss(
    cov: &CovarianceMatrix,
    loss_signal: f64,
    loss_idler: f64,
) -> Result<CovarianceMatrix, ModelError> {
    for &loss in &[loss_signal, loss_idler] {
        if !loss.is_finite() || !(0.0..=1.0).contains(&loss) {
            return Err(ModelError::InvalidLoss(loss));
        }
    }
    let t_s = 1.0 - loss_signal;
    let t_i = 1.0 - loss_idler;
    CovarianceMatrix::new(
        t_s * cov.v_s + loss_signal,
        t_i * cov.v_i + loss_idler,
        (t_s * t_i).sqrt() * cov.cov,
    )
}

/// Draws `n` correlated sample pairs from the zero-mean bivariate Gaussian
/// with covariance `cov`, via the Cholesky factorisation
/// `s = l11 z1`, `i = l21 z1 + l22 z2` with independent standard normals.
///
/// Identical `(cov, n, seed)` reproduce the trace bit for bit; the stream
/// always consumes two normal draws per pair, so prefixes agree across
/// different `n` at the same seed.
pub fn sample_trace(cov: &CovarianceMatrix, n: usize, seed: u64) -> Result<Trace, ModelError> {
    let l11 = cov.v_s.sqrt();
    let l21 = if l11 > 0.0 { cov.cov / l11 } else { 0.0 };
    // max() guards the subtraction against rounding when the matrix sits on
    // the positive-semidefinite boundary.
    let l22 = (cov.v_i - l21 * l21).max(0.0).sqrt();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut signal = Vec::with_capacity(n);
    let mut idler = Vec::with_capacity(n);
    for _ in 0..n {
        let z1: f64 = rng.sample(StandardNormal);
        let z2: f64 = rng.sample(StandardNormal);
        signal.push(l11 * z1);
        idler.push(l21 * z1 + l22 * z2);
    }
    let meta = TraceMeta {
        seed,
        ..TraceMeta::default()
    };
    Ok(Trace::new(signal, idler, meta)?)
}

/// Draws a single shot-noise-limited calibration channel: `n >= 2`
/// independent unit-variance Gaussian samples. Its sample variance is the
/// measured shot reference a real setup would obtain from a coherent beam
/// of matched power.
pub fn shot_calibration_trace(n: usize, seed: u64) -> Result<Vec<f64>, ModelError> {
    if n < 2 {
        return Err(ModelError::CalibrationTooShort(n));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n).map(|_| rng.sample(StandardNormal)).collect())
}

/// Adds independent zero-mean Gaussian dark noise of the same variance to
/// both channels. `dark_variance = 0` returns the trace unchanged.
pub fn add_dark_noise(trace: &Trace, dark_variance: f64, seed: u64) -> Result<Trace, ModelError> {
    add_dark_noise_channels(trace, dark_variance, dark_variance, seed)
}

/// Adds independent dark noise with per-channel variances; useful for
/// modelling unbalanced detection chains. Because the added noise is
/// independent of everything else, `Var(s - i)` grows by exactly the sum of
/// the two variances in expectation, i.e. equal dark noise of variance `d`
/// raises the gemellity by `d`.
pub fn add_dark_noise_channels(
    trace: &Trace,
    signal_variance: f64,
    idler_variance: f64,
    seed: u64,
) -> Result<Trace, ModelError> {
    for &v in &[signal_variance, idler_variance] {
        if !v.is_finite() || v < 0.0 {
            return Err(ModelError::InvalidDarkVariance(v));
        }
    }
    if signal_variance == 0.0 && idler_variance == 0.0 {
        return Ok(trace.clone());
    }
    let sd_s = signal_variance.sqrt();
    let sd_i = idler_variance.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut signal = Vec::with_capacity(trace.len());
    let mut idler = Vec::with_capacity(trace.len());
    for (&s, &i) in trace.signal().iter().zip(trace.idler()) {
        let d_s: f64 = rng.sample(StandardNormal);
        let d_i: f64 = rng.sample(StandardNormal);
        signal.push(s + sd_s * d_s);
        idler.push(i + sd_i * d_i);
    }
    Ok(Trace::new(signal, idler, trace.meta())?)
}

/// Mid-rise uniform quantizer modelling the acquisition card.
///
/// Samples are clamped to `[-full_scale, +full_scale]` and rounded to the
/// nearest of `2^bits` levels `-full_scale + (k + 1/2) q` with step
/// `q = 2 full_scale / 2^bits`. Zero sits on a decision boundary, not on a
/// level (mid-rise), so even `bits = 1` maps everything to `±full_scale/2`.
///
/// Idempotent bit for bit: levels quantize to themselves. `bits` is capped
/// at 52 so level indices stay exact in an f64.
pub fn quantize(trace: &Trace, bits: u32, full_scale: f64) -> Result<Trace, ModelError> {
    if !(1..=52).contains(&bits) {
        return Err(ModelError::InvalidBits(bits));
    }
    if !full_scale.is_finite() || full_scale <= 0.0 {
        return Err(ModelError::InvalidFullScale(full_scale));
    }
    let levels = (1u64 << bits) as f64;
    let step = 2.0 * full_scale / levels;
    let quantize_one = |x: f64| -> f64 {
        let clamped = x.clamp(-full_scale, full_scale);
        let index = ((clamped + full_scale) / step).floor().min(levels - 1.0);
        -full_scale + (index + 0.5) * step
    };
    let signal = trace.signal().iter().map(|&x| quantize_one(x)).collect();
    let idler = trace.idler().iter().map(|&x| quantize_one(x)).collect();
    Ok(Trace::new(signal, idler, trace.meta())?)
}

/// Derives a decorrelated child seed from a base seed and an index
/// (splitmix64 finaliser), so multi-point scenarios can give every point an
/// independent stream while staying reproducible from one configured seed.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats;

    #[test]
    fn reference_point_covariance() {
        let cov = build_covariance(&TwinBeamModel::default()).unwrap();
        assert_eq!(cov.v_signal(), 100.0);
        assert_eq!(cov.v_idler(), 100.0);
        assert!((cov.covariance() - 99.822).abs() < 1e-12);
        assert!((cov.implied_gemellity() - 0.178).abs() < 1e-12);
    }

    #[test]
    fn psd_violations_error_instead_of_clamping() {
        // Strongly unbalanced beams with zero gemellity imply a covariance
        // beyond the Cauchy-Schwarz bound.
        let model = TwinBeamModel {
            excess_signal: 1.0,
            excess_idler: 100.0,
            gemellity: 0.0,
            ..TwinBeamModel::default()
        };
        assert!(matches!(
            build_covariance(&model),
            Err(ModelError::NotPositiveSemidefinite { .. })
        ));
        // Gemellity so large the implied covariance is strongly negative.
        let model = TwinBeamModel {
            excess_signal: 1.0,
            excess_idler: 1.0,
            gemellity: 2.5,
            ..TwinBeamModel::default()
        };
        assert!(matches!(
            build_covariance(&model),
            Err(ModelError::NotPositiveSemidefinite { .. })
        ));
    }

    #[test]
    fn psd_boundary_is_accepted() {
        // Equal beams with zero gemellity sit exactly on the boundary
        // (perfectly correlated) and must build.
        let model = TwinBeamModel {
            gemellity: 0.0,
            ..TwinBeamModel::default()
        };
        let cov = build_covariance(&model).unwrap();
        assert_eq!(cov.covariance(), 100.0);
    }

    #[test]
    fn parameter_validation() {
        let bad = TwinBeamModel {
            excess_signal: 0.0,
            ..TwinBeamModel::default()
        };
        assert_eq!(bad.validate(), Err(ModelError::InvalidExcess(0.0)));
        let bad = TwinBeamModel {
            gemellity: -0.1,
            ..TwinBeamModel::default()
        };
        assert_eq!(bad.validate(), Err(ModelError::InvalidGemellity(-0.1)));
        let bad = TwinBeamModel {
            loss_signal: 1.5,
            ..TwinBeamModel::default()
        };
        assert_eq!(bad.validate(), Err(ModelError::InvalidLoss(1.5)));
        let bad = TwinBeamModel {
            dark_variance: -1.0,
            ..TwinBeamModel::default()
        };
        assert_eq!(bad.validate(), Err(ModelError::InvalidDarkVariance(-1.0)));
    }

    #[test]
    fn half_loss_on_both_channels() {
        let cov = build_covariance(&TwinBeamModel::default()).unwrap();
        let lossy = apply_loss(&cov, 0.5, 0.5).unwrap();
        assert!((lossy.v_signal() - 50.5).abs() < 1e-12);
        assert!((lossy.v_idler() - 50.5).abs() < 1e-12);
        assert!((lossy.covariance() - 49.911).abs() < 1e-12);
        // G' = (1 - L) G + L = 0.589.
        assert!((lossy.implied_gemellity() - 0.589).abs() < 1e-12);
    }

    #[test]
    fn full_loss_leaves_pure_shot_noise() {
        let cov = build_covariance(&TwinBeamModel::default()).unwrap();
        let vacuum = apply_loss(&cov, 1.0, 1.0).unwrap();
        assert_eq!(vacuum.v_signal(), 1.0);
        assert_eq!(vacuum.v_idler(), 1.0);
        assert_eq!(vacuum.covariance(), 0.0);
    }

    #[test]
    fn loss_rejects_out_of_range() {
        let cov = build_covariance(&TwinBeamModel::default()).unwrap();
        assert!(matches!(
            apply_loss(&cov, -0.1, 0.0),
            Err(ModelError::InvalidLoss(_))
        ));
        assert!(matches!(
            apply_loss(&cov, 0.0, 1.1),
            Err(ModelError::InvalidLoss(_))
        ));
    }

    #[test]
    fn sampling_is_deterministic_in_the_seed() {
        let cov = build_covariance(&TwinBeamModel::default()).unwrap();
        let a = sample_trace(&cov, 1000, 42).unwrap();
        let b = sample_trace(&cov, 1000, 42).unwrap();
        assert_eq!(a, b);
        let c = sample_trace(&cov, 1000, 43).unwrap();
        assert_ne!(a.signal()[0], c.signal()[0]);
    }

    #[test]
    fn sampled_moments_match_the_matrix() {
        let cov = build_covariance(&TwinBeamModel::default()).unwrap();
        let trace = sample_trace(&cov, 200_000, 7).unwrap();
        let v_s = stats::variance(trace.signal()).unwrap();
        let v_i = stats::variance(trace.idler()).unwrap();
        let c = stats::covariance(trace.signal(), trace.idler()).unwrap();
        // Variance estimator standard error is V sqrt(2/n) ≈ 0.32 here;
        // allow five of those.
        assert!((v_s - 100.0).abs() < 1.6, "v_s = {v_s}");
        assert!((v_i - 100.0).abs() < 1.6, "v_i = {v_i}");
        assert!((c - 99.822).abs() < 1.6, "cov = {c}");
        let g = stats::gemellity(trace.signal(), trace.idler()).unwrap();
        assert!((g.linear() - 0.178).abs() < 0.01, "G = {}", g.linear());
    }

    #[test]
    fn degenerate_matrices_sample_without_panicking() {
        // Zero signal variance forces cov = 0; the idler still fluctuates.
        let cov = CovarianceMatrix::new(0.0, 1.0, 0.0).unwrap();
        let trace = sample_trace(&cov, 100, 1).unwrap();
        assert!(trace.signal().iter().all(|&x| x == 0.0));
        assert!(trace.idler().iter().any(|&x| x != 0.0));
    }

    #[test]
    fn shot_calibration_is_unit_variance() {
        let shot = shot_calibration_trace(200_000, 11).unwrap();
        let v = stats::variance(&shot).unwrap();
        assert!((v - 1.0).abs() < 0.02, "shot variance {v}");
        assert!(stats::mean(&shot).unwrap().abs() < 0.01);
        assert_eq!(
            shot_calibration_trace(1, 0),
            Err(ModelError::CalibrationTooShort(1))
        );
    }

    #[test]
    fn zero_dark_noise_is_identity() {
        let cov = build_covariance(&TwinBeamModel::default()).unwrap();
        let trace = sample_trace(&cov, 100, 3).unwrap();
        let same = add_dark_noise(&trace, 0.0, 99).unwrap();
        assert_eq!(trace, same);
    }

    #[test]
    fn dark_noise_raises_gemellity_by_its_variance() {
        let cov = build_covariance(&TwinBeamModel::default()).unwrap();
        let clean = sample_trace(&cov, 200_000, 5).unwrap();
        let g0 = stats::gemellity(clean.signal(), clean.idler())
            .unwrap()
            .linear();
        let dark = 0.5;
        let noisy = add_dark_noise(&clean, dark, 6).unwrap();
        let g1 = stats::gemellity(noisy.signal(), noisy.idler())
            .unwrap()
            .linear();
        assert!((g1 - g0 - dark).abs() < 0.01, "g0 = {g0}, g1 = {g1}");
    }

    #[test]
    fn dark_noise_validates_variances() {
        let cov = build_covariance(&TwinBeamModel::default()).unwrap();
        let trace = sample_trace(&cov, 10, 1).unwrap();
        assert!(matches!(
            add_dark_noise(&trace, -1.0, 0),
            Err(ModelError::InvalidDarkVariance(_))
        ));
    }

    #[test]
    fn quantizer_grid_is_mid_rise() {
        let meta = TraceMeta::default();
        let trace = Trace::new(vec![0.0, 0.3, -0.3, 5.0], vec![0.0; 4], meta).unwrap();
        // 1 bit, full scale 1: only levels ±0.5 exist, zero is a boundary.
        let q = quantize(&trace, 1, 1.0).unwrap();
        assert_eq!(q.signal(), &[0.5, 0.5, -0.5, 0.5]);
        // 2 bits: levels -0.75, -0.25, 0.25, 0.75; out-of-range clamps to
        // the top level.
        let q = quantize(&trace, 2, 1.0).unwrap();
        assert_eq!(q.signal(), &[0.25, 0.25, -0.25, 0.75]);
    }

    #[test]
    fn quantizer_error_is_at_most_half_a_step() {
        let cov = build_covariance(&TwinBeamModel::default()).unwrap();
        let trace = sample_trace(&cov, 10_000, 21).unwrap();
        let fs = 4.0 * 10.0; // 4 sigma of the 100-shot-unit beams
        let bits = 12;
        let step = 2.0 * fs / (1u64 << bits) as f64;
        let q = quantize(&trace, bits, fs).unwrap();
        for (&x, &y) in trace.signal().iter().zip(q.signal()) {
            if x.abs() <= fs {
                assert!((x - y).abs() <= step / 2.0 + 1e-12, "x = {x}, q = {y}");
            } else {
                assert!((y.abs() - (fs - step / 2.0)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn quantizer_is_idempotent() {
        let cov = build_covariance(&TwinBeamModel::default()).unwrap();
        let trace = sample_trace(&cov, 10_000, 22).unwrap();
        let q1 = quantize(&trace, 12, 40.0).unwrap();
        let q2 = quantize(&q1, 12, 40.0).unwrap();
        assert_eq!(q1, q2);
    }

    #[test]
    fn quantizer_validates_parameters() {
        let trace = Trace::new(vec![0.0], vec![0.0], TraceMeta::default()).unwrap();
        assert_eq!(quantize(&trace, 0, 1.0), Err(ModelError::InvalidBits(0)));
        assert_eq!(quantize(&trace, 53, 1.0), Err(ModelError::InvalidBits(53)));
        assert_eq!(
            quantize(&trace, 12, 0.0),
            Err(ModelError::InvalidFullScale(0.0))
        );
    }

    #[test]
    fn default_full_scale_covers_four_sigma() {
        let model = TwinBeamModel::default();
        let fs = model.default_full_scale().unwrap();
        assert!((fs - 40.0).abs() < 1e-12);
    }

    #[test]
    fn derived_seeds_differ_and_are_stable() {
        let a = derive_seed(42, 0);
        let b = derive_seed(42, 1);
        let c = derive_seed(43, 0);
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a, derive_seed(42, 0));
    }
}
