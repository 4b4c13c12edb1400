//! Static-arbitrage validation of call quotes and variance wings.
//!
//! Discrete checks on a [`CallQuoteSet`]: strict price bounds, strict
//! monotonicity and convexity in strike, the first-chord slope bound, and
//! calendar ordering across maturities. Butterflies priced at zero are
//! rejected outright; the downstream hedging formulation requires strictly
//! positive butterflies.
//!
//! For variance slices the butterfly condition is expressed through the
//! function `g(k)`; linear wings `w = a1*k + a0` admit closed-form
//! admissibility thresholds which [`wing_admissibility`] evaluates.

use crate::market::{CallQuote, CallQuoteSet};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Strictness/reporting tolerance for the discrete checks.
pub const CHECK_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum ArbitrageError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("need at least two maturities, got {0}")]
    NeedTwoMaturities(usize),
    #[error("strike {0} outside the quoted grid")]
    OutsideGrid(f64),
    #[error("degenerate extrapolation lines: {0}")]
    DegenerateRegion(String),
}

/// Identifier of a violated no-arbitrage condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Condition {
    /// Price outside the strict bounds `(1-K)^+ < c < 1`.
    PriceBound,
    /// Prices not strictly decreasing in strike.
    Monotonicity,
    /// Negative butterfly (discrete convexity in strike fails).
    Convexity,
    /// Butterfly priced at zero; rejected to keep the hedging LP well posed.
    ZeroButterfly,
    /// First observable chord slope below -1.
    ChordSlope,
    /// Call prices decreasing in maturity at a common strike.
    Calendar,
}

/// A single detected violation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Violation {
    pub condition: Condition,
    pub maturity: f64,
    /// Strikes involved (one for bounds, up to three for butterflies).
    pub strikes: Vec<f64>,
    /// How far the condition is violated, always positive.
    pub magnitude: f64,
}

/// Outcome of [`validate_quotes`] (and of surface diagnostics that reuse it).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub violations: Vec<Violation>,
    /// Per-maturity minimum of the butterfly function `g` when a surface was
    /// sampled; empty for purely discrete quote checks.
    pub g_min: Vec<(f64, f64)>,
}

impl ValidationReport {
    pub fn from_violations(violations: Vec<Violation>) -> Self {
        Self {
            passed: violations.is_empty(),
            violations,
            g_min: Vec::new(),
        }
    }

    pub fn with_g_min(mut self, g_min: Vec<(f64, f64)>) -> Self {
        self.g_min = g_min;
        self
    }
}

/// Check a quote set for static arbitrage.
///
/// Per maturity: strict bounds `(1-K)^+ < c < 1`, strictly decreasing
/// prices, non-negative butterflies (zero butterflies are flagged), and
/// first-chord slope at least -1. Across maturities: prices non-decreasing
/// in maturity at strikes common to both. Failures are reported, never
/// thrown.
pub fn validate_quotes(quotes: &CallQuoteSet) -> ValidationReport {
    let mut violations = Vec::new();

    for (i, &t) in quotes.maturities().iter().enumerate() {
        let group = quotes.quotes_at(i);
        for q in group {
            let intrinsic = (1.0 - q.moneyness).max(0.0);
            let lower_slack = q.price - intrinsic;
            let upper_slack = 1.0 - q.price;
            if lower_slack <= CHECK_TOL {
                violations.push(Violation {
                    condition: Condition::PriceBound,
                    maturity: t,
                    strikes: vec![q.moneyness],
                    magnitude: (CHECK_TOL - lower_slack).max(CHECK_TOL),
                });
            }
            if upper_slack <= CHECK_TOL {
                violations.push(Violation {
                    condition: Condition::PriceBound,
                    maturity: t,
                    strikes: vec![q.moneyness],
                    magnitude: (CHECK_TOL - upper_slack).max(CHECK_TOL),
                });
            }
        }
        for pair in group.windows(2) {
            let decrease = pair[0].price - pair[1].price;
            if decrease <= CHECK_TOL {
                violations.push(Violation {
                    condition: Condition::Monotonicity,
                    maturity: t,
                    strikes: vec![pair[0].moneyness, pair[1].moneyness],
                    magnitude: (CHECK_TOL - decrease).max(CHECK_TOL),
                });
            }
        }
        if group.len() >= 2 {
            let slope =
                (group[1].price - group[0].price) / (group[1].moneyness - group[0].moneyness);
            if slope < -1.0 - CHECK_TOL {
                violations.push(Violation {
                    condition: Condition::ChordSlope,
                    maturity: t,
                    strikes: vec![group[0].moneyness, group[1].moneyness],
                    magnitude: -1.0 - slope,
                });
            }
        }
        for triple in group.windows(3) {
            let (k0, k1, k2) = (triple[0].moneyness, triple[1].moneyness, triple[2].moneyness);
            let lambda = (k2 - k1) / (k2 - k0);
            let butterfly =
                lambda * triple[0].price + (1.0 - lambda) * triple[2].price - triple[1].price;
            if butterfly < -CHECK_TOL {
                violations.push(Violation {
                    condition: Condition::Convexity,
                    maturity: t,
                    strikes: vec![k0, k1, k2],
                    magnitude: -butterfly,
                });
            } else if butterfly <= CHECK_TOL {
                violations.push(Violation {
                    condition: Condition::ZeroButterfly,
                    maturity: t,
                    strikes: vec![k0, k1, k2],
                    magnitude: CHECK_TOL - butterfly.min(CHECK_TOL),
                });
            }
        }
    }

    // Calendar condition at strikes quoted for both maturities.
    for i in 1..quotes.maturities().len() {
        let (earlier, later) = (quotes.quotes_at(i - 1), quotes.quotes_at(i));
        for qe in earlier {
            if let Some(ql) = later.iter().find(|q| q.moneyness == qe.moneyness) {
                let gap = qe.price - ql.price;
                if gap > CHECK_TOL {
                    violations.push(Violation {
                        condition: Condition::Calendar,
                        maturity: quotes.maturities()[i - 1],
                        strikes: vec![qe.moneyness],
                        magnitude: gap,
                    });
                }
            }
        }
    }

    ValidationReport::from_violations(violations)
}

/// One row of a convex-order comparison between two adjacent maturities.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvexOrderEntry {
    pub strike: f64,
    pub earlier_maturity: f64,
    pub later_maturity: f64,
    pub earlier_price: f64,
    pub later_price: f64,
    /// Positive when the earlier-maturity call exceeds the later one.
    pub excess: f64,
    pub violated: bool,
}

/// Compare call prices across maturities on a common strike grid.
///
/// Prices are interpolated linearly in strike between quoted points; a grid
/// strike outside a maturity's quoted range is an error. Equality is
/// allowed; an excess beyond `1e-12` is flagged.
pub fn convex_order_check(
    quotes: &CallQuoteSet,
    grid: &[f64],
) -> Result<Vec<ConvexOrderEntry>, ArbitrageError> {
    let n = quotes.maturities().len();
    if n < 2 {
        return Err(ArbitrageError::NeedTwoMaturities(n));
    }
    let interp = |group: &[CallQuote], strike: f64| -> Result<f64, ArbitrageError> {
        let first = group.first().expect("non-empty group");
        let last = group.last().expect("non-empty group");
        if strike < first.moneyness || strike > last.moneyness {
            return Err(ArbitrageError::OutsideGrid(strike));
        }
        for pair in group.windows(2) {
            if strike <= pair[1].moneyness {
                let u = (strike - pair[0].moneyness) / (pair[1].moneyness - pair[0].moneyness);
                return Ok(pair[0].price + u * (pair[1].price - pair[0].price));
            }
        }
        Ok(last.price)
    };
    let mut out = Vec::new();
    for i in 1..n {
        for &strike in grid {
            let earlier_price = interp(quotes.quotes_at(i - 1), strike)?;
            let later_price = interp(quotes.quotes_at(i), strike)?;
            let excess = earlier_price - later_price;
            out.push(ConvexOrderEntry {
                strike,
                earlier_maturity: quotes.maturities()[i - 1],
                later_maturity: quotes.maturities()[i],
                earlier_price,
                later_price,
                excess,
                violated: excess > CHECK_TOL,
            });
        }
    }
    Ok(out)
}

/// Butterfly positivity function of a total-variance slice.
///
/// `g(k) = (1 - k w'/(2w))^2 - (w'^2/4)(1/w + 1/4) + w''/2`, evaluated
/// algebraically from caller-supplied derivatives. Non-negativity of `g`
/// excludes butterfly-spread arbitrage on the slice.
pub fn g_function(w: f64, wk: f64, wkk: f64, k: f64) -> Result<f64, ArbitrageError> {
    if !(w > 0.0) {
        return Err(ArbitrageError::Domain(format!(
            "total variance must be positive, got {w}"
        )));
    }
    let a = 1.0 - k * wk / (2.0 * w);
    Ok(a * a - 0.25 * wk * wk * (1.0 / w + 0.25) + 0.5 * wkk)
}

/// Side of a variance wing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WingSide {
    Left,
    Right,
}

/// Admissibility verdict for a linear variance wing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "k_star", rename_all = "snake_case")]
pub enum WingVerdict {
    /// `g >= 0` on the whole wing.
    AdmissibleEverywhere,
    /// `g >= 0` beyond the contained threshold log-moneyness (mirrored for
    /// left wings: admissible below the threshold).
    AdmissibleBeyond(f64),
    /// Slope outside `[0, 2]`; no admissible region.
    Inadmissible,
}

/// Admissibility certificate for a linear wing `w = a1|k| + a0`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct WingAdmissibility {
    pub intercept: f64,
    pub slope: f64,
    pub side: WingSide,
    pub verdict: WingVerdict,
}

impl WingAdmissibility {
    /// Threshold log-moneyness when the verdict is `AdmissibleBeyond`.
    pub fn k_star(&self) -> Option<f64> {
        match self.verdict {
            WingVerdict::AdmissibleBeyond(k) => Some(k),
            _ => None,
        }
    }
}

/// Decide admissibility of the linear variance wing `w(k) = a1*k + a0`
/// (right side; the left side mirrors by `k -> -k`).
///
/// Slopes above 2 are inadmissible. For `a1` in `(0, 2)` the wing is
/// admissible everywhere when `a0 >= 2 - sqrt(4 - a1^2)`, otherwise beyond
/// `k+ = [a1(a0+2) - 8 a0/a1 + 2 sqrt(a0^2 - 4 a0 + a1^2)] / (4 - a1^2)`.
/// At the extreme slope `a1 = 2` the threshold is
/// `k* = a0(8 - 6 a0) / (8(a0 - 2))`, defined for `a0 < 2`.
pub fn wing_admissibility(
    a0: f64,
    a1: f64,
    side: WingSide,
) -> Result<WingAdmissibility, ArbitrageError> {
    if !(a0 >= 0.0) || !(a1 >= 0.0) {
        return Err(ArbitrageError::Domain(format!(
            "wing coefficients must be non-negative, got a0={a0}, a1={a1}"
        )));
    }
    let mirror = |k: f64| match side {
        WingSide::Right => k,
        WingSide::Left => -k,
    };
    let verdict = if a1 > 2.0 {
        WingVerdict::Inadmissible
    } else if a1 == 0.0 {
        // Flat slice: g is identically 1.
        WingVerdict::AdmissibleEverywhere
    } else if a1 == 2.0 {
        if a0 >= 2.0 {
            WingVerdict::AdmissibleEverywhere
        } else {
            WingVerdict::AdmissibleBeyond(mirror(a0 * (8.0 - 6.0 * a0) / (8.0 * (a0 - 2.0))))
        }
    } else {
        let threshold = 2.0 - (4.0 - a1 * a1).sqrt();
        if a0 >= threshold {
            WingVerdict::AdmissibleEverywhere
        } else {
            let root = (a0 * a0 - 4.0 * a0 + a1 * a1).sqrt();
            let k_plus = (a1 * (a0 + 2.0) - 8.0 * a0 / a1 + 2.0 * root) / (4.0 - a1 * a1);
            WingVerdict::AdmissibleBeyond(mirror(k_plus))
        }
    };
    Ok(WingAdmissibility {
        intercept: a0,
        slope: a1,
        side,
        verdict,
    })
}

/// Value of the implied distribution function recovered from call prices.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CdfValue {
    pub value: f64,
    /// Set when the raw chord estimate fell outside `[0, 1]`.
    pub clamped: bool,
}

/// Breeden-Litzenberger distribution function `F(K) = 1 + d+c(K)` from the
/// right finite-difference chord of call prices on a strike grid.
pub fn breeden_litzenberger_cdf(
    strikes: &[f64],
    prices: &[f64],
    at: f64,
) -> Result<CdfValue, ArbitrageError> {
    if strikes.len() != prices.len() || strikes.len() < 2 {
        return Err(ArbitrageError::Domain(
            "need matching strike/price grids with at least two points".into(),
        ));
    }
    if at < strikes[0] || at >= *strikes.last().unwrap() {
        return Err(ArbitrageError::OutsideGrid(at));
    }
    // Right chord: the first grid interval whose right end lies beyond `at`.
    let mut slope = f64::NAN;
    for i in 0..strikes.len() - 1 {
        if at >= strikes[i] && at < strikes[i + 1] {
            slope = (prices[i + 1] - prices[i]) / (strikes[i + 1] - strikes[i]);
            break;
        }
    }
    let raw = 1.0 + slope;
    let value = raw.clamp(0.0, 1.0);
    Ok(CdfValue {
        value,
        clamped: (raw - value).abs() > 0.0,
    })
}

/// Feasible-region envelope for arbitrage-free extrapolation of a single
/// maturity's call prices.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FeasibleRegion {
    pub maturity: f64,
    /// Strike where the left linear extrapolation meets intrinsic value.
    pub k_square: f64,
    /// Strike where the right linear extrapolation reaches zero.
    pub k_circle: f64,
    /// (slope, intercept) of the line through the first two quotes.
    pub left_line: (f64, f64),
    /// (slope, intercept) of the line through the last two quotes.
    pub right_line: (f64, f64),
}

/// Intersect the extreme quote chords with the no-arbitrage envelope: the
/// left chord with the intrinsic payoff `(1-K)^+`, the right chord with
/// zero.
pub fn feasible_extrapolation_region(
    quotes: &[CallQuote],
) -> Result<FeasibleRegion, ArbitrageError> {
    if quotes.len() < 2 {
        return Err(ArbitrageError::Domain(format!(
            "need at least two quotes, got {}",
            quotes.len()
        )));
    }
    let t = quotes[0].maturity;
    let line = |a: &CallQuote, b: &CallQuote| -> (f64, f64) {
        let slope = (b.price - a.price) / (b.moneyness - a.moneyness);
        (slope, a.price - slope * a.moneyness)
    };
    let left_line = line(&quotes[0], &quotes[1]);
    let right_line = line(&quotes[quotes.len() - 2], &quotes[quotes.len() - 1]);

    // Left: slope*K + intercept = 1 - K  =>  K = (1 - intercept)/(slope + 1).
    if (left_line.0 + 1.0).abs() < 1e-14 {
        return Err(ArbitrageError::DegenerateRegion(
            "left chord parallel to intrinsic payoff".into(),
        ));
    }
    let k_square = (1.0 - left_line.1) / (left_line.0 + 1.0);
    // Right: slope*K + intercept = 0.
    if right_line.0.abs() < 1e-14 {
        return Err(ArbitrageError::DegenerateRegion(
            "right chord is flat, no zero crossing".into(),
        ));
    }
    let k_circle = -right_line.1 / right_line.0;
    Ok(FeasibleRegion {
        maturity: t,
        k_square,
        k_circle,
        left_line,
        right_line,
    })
}
