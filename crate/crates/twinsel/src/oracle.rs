//! Closed-form Gaussian predictions for the conditional measurement.
//!
//! For a zero-mean bivariate Gaussian, selecting on the idler decomposes the
//! signal as `s = beta * i + eps` with regression slope `beta = cov / v_i`
//! and an independent residual of variance `V(s|i) = v_s - cov^2 / v_i`. The
//! selected-ensemble variance is therefore exactly
//!
//! ```text
//! Var(s | i in band) = beta^2 * Var(i | i in band) + V(s|i)
//! ```
//!
//! where the first factor is the variance of a truncated Gaussian. These
//! formulas are what the Monte Carlo side of the crate is tested against;
//! they contain no simulation, only `erf`/`erfc` evaluations, and the test
//! suite pins them in turn against brute-force numerical integration.
//!
//! Tail masses are computed through `erfc` on whichever side is small, so
//! bands far off-center keep full relative accuracy down to about 1e-300;
//! below that the band is declared empty ([`OracleError::TailUnderflow`])
//! rather than silently returning denormal garbage.

use thiserror::Error;

use crate::model::CovarianceMatrix;
use crate::noise::{from_db, to_db};
use crate::select::SelectionBand;

/// Band masses below this are treated as numerically empty.
const TAIL_UNDERFLOW_CUTOFF: f64 = 1e-300;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum OracleError {
    #[error("conditioning requires a positive idler variance, got {0}")]
    DegenerateConditioning(f64),
    #[error("sigma must be positive and finite, got {0}")]
    InvalidSigma(f64),
    #[error("half-width must be positive, got {0}")]
    NonPositiveHalfWidth(f64),
    #[error(
        "band at {center} +- {half_width} carries probability mass below 1e-300; \
         no prediction is possible that far into the tail"
    )]
    TailUnderflow { center: f64, half_width: f64 },
    #[error("gemellity in dB must be finite, got {0}")]
    NonFiniteGemellity(f64),
    #[error("single-beam noise must be positive, got {0}")]
    InvalidExcess(f64),
    #[error(
        "gemellity {gemellity} and single-beam noise {excess} give a non-positive \
         conditioned variance; the narrow-band law only applies to physical pairs"
    )]
    Unphysical { gemellity: f64, excess: f64 },
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    const INV_SQRT_TWO_PI: f64 = 0.3989422804014327;
    (-0.5 * x * x).exp() * INV_SQRT_TWO_PI
}

/// Standard normal CDF via `erfc`, accurate in both tails.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// `P(a <= Z <= b)` for a standard normal, evaluated on whichever side of
/// the origin keeps the subtraction well conditioned: both-positive and
/// both-negative intervals go through `erfc` differences of small numbers,
/// straddling intervals through `erf`.
pub fn normal_mass(a: f64, b: f64) -> f64 {
    debug_assert!(a <= b);
    let s = std::f64::consts::SQRT_2;
    let mass = if a >= 0.0 {
        0.5 * (libm::erfc(a / s) - libm::erfc(b / s))
    } else if b <= 0.0 {
        0.5 * (libm::erfc(-b / s) - libm::erfc(-a / s))
    } else {
        0.5 * (libm::erf(b / s) - libm::erf(a / s))
    };
    // Guard the subtractions against returning -0.0 or a rounding-level
    // negative for extremely narrow bands.
    mass.max(0.0)
}

/// `x * pdf(x)` with the correct zero limit at infinite `x`.
fn x_pdf(x: f64) -> f64 {
    if x.is_infinite() {
        0.0
    } else {
        x * normal_pdf(x)
    }
}

fn pdf_or_zero(x: f64) -> f64 {
    if x.is_infinite() {
        0.0
    } else {
        normal_pdf(x)
    }
}

/// Conditional variance of the signal given the exact idler value:
/// `V(s|i) = v_s - cov^2 / v_i`.
///
/// This is the floor the selected-ensemble variance approaches as the band
/// narrows. On the positive-semidefinite boundary the subtraction lands on
/// zero; a `max(0)` guard absorbs the last-ulp rounding of `cov^2 / v_i`.
pub fn conditional_variance(cov: &CovarianceMatrix) -> Result<f64, OracleError> {
    let v_i = cov.v_idler();
    if v_i <= 0.0 {
        return Err(OracleError::DegenerateConditioning(v_i));
    }
    Ok((cov.v_signal() - cov.covariance() * cov.covariance() / v_i).max(0.0))
}

/// Variance of a zero-mean Gaussian of standard deviation `sigma`
/// restricted to the window `[center - half_width, center + half_width]`.
///
/// Uses the closed form
/// `sigma^2 * (1 + (a phi(a) - b phi(b))/Z - ((phi(a) - phi(b))/Z)^2)` with
/// standardised edges `a`, `b` and window mass `Z`. The result is clamped
/// into `[0, sigma^2]`: truncation can only reduce a Gaussian's variance,
/// and the clamp absorbs rounding at both the narrow and the wide limit.
///
/// Narrow windows approach the uniform-distribution value `half_width^2/3`;
/// `half_width = +inf` returns exactly `sigma^2`.
pub fn truncated_gaussian_variance(
    sigma: f64,
    center: f64,
    half_width: f64,
) -> Result<f64, OracleError> {
    if !sigma.is_finite() || sigma <= 0.0 {
        return Err(OracleError::InvalidSigma(sigma));
    }
    if half_width.is_nan() || half_width <= 0.0 {
        return Err(OracleError::NonPositiveHalfWidth(half_width));
    }
    let a = (center - half_width) / sigma;
    let b = (center + half_width) / sigma;
    let z = normal_mass(a, b);
    if z < TAIL_UNDERFLOW_CUTOFF {
        return Err(OracleError::TailUnderflow { center, half_width });
    }
    let mean = (pdf_or_zero(a) - pdf_or_zero(b)) / z;
    let v = 1.0 + (x_pdf(a) - x_pdf(b)) / z - mean * mean;
    Ok(sigma * sigma * v.clamp(0.0, 1.0))
}

/// Predicted variance of the selected signal ensemble for a given source
/// covariance and idler acceptance band:
/// `beta^2 * truncated_gaussian_variance + V(s|i)`.
pub fn predicted_selected_variance(
    cov: &CovarianceMatrix,
    band: SelectionBand,
) -> Result<f64, OracleError> {
    let v_i = cov.v_idler();
    if v_i <= 0.0 {
        return Err(OracleError::DegenerateConditioning(v_i));
    }
    let slope = cov.covariance() / v_i;
    let truncated =
        truncated_gaussian_variance(cov.sigma_idler(), band.center(), band.half_width())?;
    Ok(slope * slope * truncated + conditional_variance(cov)?)
}

/// Probability that an idler sample of standard deviation `sigma_idler`
/// falls inside the band — the expected selection success rate.
///
/// Total for any band (a zero half-width gives 0); far-off-center bands
/// return a tiny but *accurate* mass thanks to the `erfc` evaluation, down
/// to the f64 underflow threshold where the result is exactly 0.
pub fn predicted_success_rate(sigma_idler: f64, band: SelectionBand) -> Result<f64, OracleError> {
    if !sigma_idler.is_finite() || sigma_idler <= 0.0 {
        return Err(OracleError::InvalidSigma(sigma_idler));
    }
    Ok(normal_mass(
        band.lo() / sigma_idler,
        band.hi() / sigma_idler,
    ))
}

/// The narrow-band limit of the conditioned noise, in dB, for symmetric
/// beams of single-beam noise `excess` (shot units) and the given gemellity
/// (dB): `10 log10(2 G - G^2 / V)`.
///
/// As `excess -> inf` this tends to `gemellity_db + 3.01 dB` — the
/// conditioned ensemble sits 3 dB above the twin-beam difference noise
/// because only one beam's worth of shot noise remains. The finite-`excess`
/// term `G^2 / V` is the correction the full formula carries. `excess` may
/// be `+inf` to get the limit law itself.
pub fn narrow_limit_db(gemellity_db: f64, excess: f64) -> Result<f64, OracleError> {
    if !gemellity_db.is_finite() {
        return Err(OracleError::NonFiniteGemellity(gemellity_db));
    }
    if excess.is_nan() || excess <= 0.0 {
        return Err(OracleError::InvalidExcess(excess));
    }
    let g = from_db(gemellity_db);
    let linear = 2.0 * g - g * g / excess;
    if linear <= 0.0 {
        return Err(OracleError::Unphysical {
            gemellity: g,
            excess,
        });
    }
    Ok(to_db(linear).expect("positive by the check above"))
}

/// Bundle of the closed-form predictions for one covariance matrix and
/// selection band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    /// Exact-conditioning floor `V(s|i)`.
    pub conditional_variance: f64,
    /// Expected variance of the selected signal ensemble.
    pub selected_variance: f64,
    /// `selected_variance` in dB relative to shot noise; `None` only for a
    /// degenerate zero-variance prediction.
    pub selected_db: Option<f64>,
    /// Expected fraction of samples accepted by the band.
    pub success_rate: f64,
    /// Regression slope `beta = cov / v_i` of signal on idler.
    pub regression_slope: f64,
}

/// Computes the full [`Prediction`] for a band. The selected variance is
/// always at least the conditional-variance floor, and the success rate
/// lies in `[0, 1]`.
pub fn predict(cov: &CovarianceMatrix, band: SelectionBand) -> Result<Prediction, OracleError> {
    let conditional = conditional_variance(cov)?;
    let selected = predicted_selected_variance(cov, band)?;
    let success = predicted_success_rate(cov.sigma_idler(), band)?;
    let selected_db = if selected > 0.0 {
        Some(to_db(selected).expect("positive"))
    } else {
        None
    };
    Ok(Prediction {
        conditional_variance: conditional,
        selected_variance: selected,
        selected_db,
        success_rate: success,
        regression_slope: cov.covariance() / cov.v_idler(),
    })
}
