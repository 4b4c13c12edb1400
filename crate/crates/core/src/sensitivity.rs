//! First-order perturbation analysis of the hedging bounds.
//!
//! The optimal value of the measure problem is directionally differentiable
//! in the instrument prices, with derivative `<w*, h>` at a unique optimal
//! hedge `w*`. When the prices move along a parametric surface family
//! (wing slopes, moment orders), the chain rule composes `w*` with the
//! price Jacobian of the family, yielding first-order estimates of the
//! perturbed bounds that can be compared against full re-solves.

use crate::arbitrage::validate_quotes;
use crate::hedge::{
    subhedge_with, superhedge_with, HedgeError, HedgeSolution, Instrument, InstrumentSet,
    PayoffSpec, Side, StateGrid, StrategyBasis,
};
use crate::lp::SimplexOptions;
use crate::market::{bs_vega_total, CallQuote, CallQuoteSet};
use crate::wing::{
    bs_flat_wing_surface, extrapolated_call_prices, heston_wing_surface, lee_psi,
    lee_psi_derivative, HestonWingInput, WingError,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SensitivityError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("hedge is not certified optimal (residual {0:e})")]
    Uncertified(f64),
    #[error("surface family is not differentiable at the base point: {0}")]
    NotDifferentiable(String),
    #[error(transparent)]
    Wing(#[from] WingError),
    #[error(transparent)]
    Hedge(#[from] HedgeError),
}

/// Residual level below which a hedge counts as certified for sensitivity
/// purposes.
pub const CERTIFICATE_TOL: f64 = 1e-8;

/// A parametric family `p -> prices` of instrument price vectors built from
/// total-variance surfaces.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum PriceFamily {
    /// Flat-base surfaces `w = p_t |k| + sigma^2 t`; one slope parameter
    /// per maturity, `p = (a_{t_1}, ..., a_{t_n})`.
    BsSlopes {
        sigma: f64,
        maturities: Vec<f64>,
        strikes_per_maturity: Vec<Vec<f64>>,
    },
    /// Wing extrapolation driven by critical moment orders,
    /// `p = (q_{t_1}, p_{t_1}, q_{t_2}, p_{t_2}, ...)`: slopes `psi(q)`,
    /// `psi(p)` anchored at the quoted region, traded strikes untouched.
    HestonWings {
        maturities: Vec<f64>,
        /// Quoted `(k, w)` region per maturity (the traded strikes).
        quoted: Vec<Vec<(f64, f64)>>,
        strikes_per_maturity: Vec<Vec<f64>>,
    },
}

impl PriceFamily {
    /// Number of parameters.
    pub fn dim(&self) -> usize {
        match self {
            PriceFamily::BsSlopes { maturities, .. } => maturities.len(),
            PriceFamily::HestonWings { maturities, .. } => 2 * maturities.len(),
        }
    }

    /// Instrument count (maturity-major).
    pub fn num_prices(&self) -> usize {
        match self {
            PriceFamily::BsSlopes {
                strikes_per_maturity,
                ..
            }
            | PriceFamily::HestonWings {
                strikes_per_maturity,
                ..
            } => strikes_per_maturity.iter().map(|s| s.len()).sum(),
        }
    }

    /// Maturity/strike keys in instrument order.
    pub fn keys(&self) -> Vec<(f64, f64)> {
        let (maturities, strikes_per_maturity) = match self {
            PriceFamily::BsSlopes {
                maturities,
                strikes_per_maturity,
                ..
            }
            | PriceFamily::HestonWings {
                maturities,
                strikes_per_maturity,
                ..
            } => (maturities, strikes_per_maturity),
        };
        let mut keys = Vec::new();
        for (&t, strikes) in maturities.iter().zip(strikes_per_maturity) {
            for &strike in strikes {
                keys.push((t, strike));
            }
        }
        keys
    }

    /// Price vector at parameter `p`.
    pub fn prices(&self, p: &[f64]) -> Result<Vec<f64>, SensitivityError> {
        if p.len() != self.dim() {
            return Err(SensitivityError::Dimension(format!(
                "parameter has {} entries, family needs {}",
                p.len(),
                self.dim()
            )));
        }
        match self {
            PriceFamily::BsSlopes {
                sigma,
                maturities,
                strikes_per_maturity,
            } => {
                let slopes: Vec<(f64, f64)> =
                    maturities.iter().copied().zip(p.iter().copied()).collect();
                let surface = bs_flat_wing_surface(*sigma, &slopes)?;
                Ok(extrapolated_call_prices(&surface, strikes_per_maturity)?)
            }
            PriceFamily::HestonWings {
                maturities,
                quoted,
                strikes_per_maturity,
            } => {
                let inputs: Vec<HestonWingInput> = maturities
                    .iter()
                    .zip(quoted)
                    .enumerate()
                    .map(|(i, (&t, q_region))| HestonWingInput {
                        maturity: t,
                        quoted: q_region.clone(),
                        q: p[2 * i],
                        p: p[2 * i + 1],
                    })
                    .collect();
                let surface = heston_wing_surface(&inputs)?;
                Ok(extrapolated_call_prices(&surface, strikes_per_maturity)?)
            }
        }
    }

    /// Analytic price Jacobian at `p`: `d prices / d p`, one row per
    /// instrument. Rows of traded (non-extrapolated) strikes are zero.
    pub fn jacobian(&self, p: &[f64]) -> Result<Vec<Vec<f64>>, SensitivityError> {
        if p.len() != self.dim() {
            return Err(SensitivityError::Dimension(format!(
                "parameter has {} entries, family needs {}",
                p.len(),
                self.dim()
            )));
        }
        let dim = self.dim();
        let mut rows = Vec::with_capacity(self.num_prices());
        match self {
            PriceFamily::BsSlopes {
                sigma,
                maturities,
                strikes_per_maturity,
            } => {
                for (i, (&t, strikes)) in maturities.iter().zip(strikes_per_maturity).enumerate() {
                    for &strike in strikes {
                        let k = strike.ln();
                        let w = p[i] * k.abs() + sigma * sigma * t;
                        if !(w > 0.0) {
                            return Err(SensitivityError::NotDifferentiable(format!(
                                "variance {w} at k={k}"
                            )));
                        }
                        let total_vol = w.sqrt();
                        // dc/dw = n(d)/(2 sqrt(w)); dw/da_t = |k|.
                        let dc_dw = bs_vega_total(k, total_vol) / (2.0 * total_vol);
                        let mut row = vec![0.0; dim];
                        row[i] = dc_dw * k.abs();
                        rows.push(row);
                    }
                }
            }
            PriceFamily::HestonWings {
                maturities,
                quoted,
                strikes_per_maturity,
            } => {
                for (i, ((_, q_region), strikes)) in maturities
                    .iter()
                    .zip(quoted)
                    .zip(strikes_per_maturity)
                    .enumerate()
                {
                    let (k_l, w_l) = q_region[0];
                    let (k_r, w_r) = *q_region.last().unwrap();
                    let (q, pp) = (p[2 * i], p[2 * i + 1]);
                    let psi_q = lee_psi(q)?;
                    let psi_p = lee_psi(pp)?;
                    let psi_q_prime = lee_psi_derivative(q)?;
                    let psi_p_prime = lee_psi_derivative(pp)?;
                    for &strike in strikes {
                        let k = strike.ln();
                        let mut row = vec![0.0; dim];
                        // Strikes at (or within rounding of) the anchors
                        // count as traded: zero sensitivity rows.
                        if k < k_l - 1e-12 {
                            let w = psi_q * (k - k_l).abs() + w_l;
                            let dc_dw = bs_vega_total(k, w.sqrt()) / (2.0 * w.sqrt());
                            row[2 * i] = dc_dw * (k - k_l).abs() * psi_q_prime;
                        } else if k > k_r + 1e-12 {
                            let w = psi_p * (k - k_r).abs() + w_r;
                            let dc_dw = bs_vega_total(k, w.sqrt()) / (2.0 * w.sqrt());
                            row[2 * i + 1] = dc_dw * (k - k_r).abs() * psi_p_prime;
                        }
                        rows.push(row);
                    }
                }
            }
        }
        Ok(rows)
    }
}

/// Interiority of a price vector in the moment cone: strictly inside the
/// static bounds and free of detected arbitrage.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct InteriorCheck {
    pub interior: bool,
    /// Smallest slack to the strict price bounds.
    pub margin: f64,
}

/// Check that perturbed prices remain strictly inside `((1-K)^+, 1)` and
/// pass the full static-arbitrage validation.
pub fn moment_cone_interior_check(
    maturities_strikes: &[(f64, f64)],
    prices: &[f64],
) -> InteriorCheck {
    if maturities_strikes.len() != prices.len() || prices.is_empty() {
        return InteriorCheck {
            interior: false,
            margin: f64::NEG_INFINITY,
        };
    }
    let mut margin = f64::INFINITY;
    let mut quotes = Vec::with_capacity(prices.len());
    for (&(t, strike), &price) in maturities_strikes.iter().zip(prices) {
        let intrinsic = (1.0 - strike).max(0.0);
        margin = margin.min(price - intrinsic).min(1.0 - price);
        quotes.push(CallQuote {
            maturity: t,
            moneyness: strike,
            price,
        });
    }
    let passed = CallQuoteSet::from_quotes(quotes)
        .map(|set| validate_quotes(&set).passed)
        .unwrap_or(false);
    InteriorCheck {
        interior: margin > 0.0 && passed,
        margin,
    }
}

/// Directional derivative of the bound from a certified optimal hedge.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DirectionalDerivative {
    pub value: f64,
    /// False when alternative optimal hedges were detected; the value is
    /// then only the vertex value, and the true one-sided derivative is an
    /// extremum over the optimal face.
    pub unique: bool,
}

/// `<w*, h>` for a direction `h` in price space.
///
/// For super-hedging the theoretical derivative is the infimum of this
/// inner product over all optimal hedges; for sub-hedging the supremum.
/// The vertex value is returned together with a uniqueness flag.
pub fn directional_derivative(
    hedge: &HedgeSolution,
    direction: &[f64],
) -> Result<DirectionalDerivative, SensitivityError> {
    let worst = hedge
        .residuals
        .primal_infeasibility
        .max(hedge.residuals.dual_infeasibility)
        .max(hedge.residuals.duality_gap);
    if worst > CERTIFICATE_TOL {
        return Err(SensitivityError::Uncertified(worst));
    }
    if direction.len() != hedge.option_weights.len() {
        return Err(SensitivityError::Dimension(format!(
            "direction has {} entries, hedge carries {} weights",
            direction.len(),
            hedge.option_weights.len()
        )));
    }
    Ok(DirectionalDerivative {
        value: hedge
            .option_weights
            .iter()
            .zip(direction)
            .map(|(w, h)| w * h)
            .sum(),
        unique: !hedge.alternative_optima,
    })
}

/// Chain rule through a parametric family: `<w*, J h>`.
pub fn chain_rule_derivative(
    option_weights: &[f64],
    jacobian: &[Vec<f64>],
    h_param: &[f64],
) -> Result<f64, SensitivityError> {
    if jacobian.len() != option_weights.len() {
        return Err(SensitivityError::Dimension(format!(
            "jacobian has {} rows, hedge carries {} weights",
            jacobian.len(),
            option_weights.len()
        )));
    }
    let mut total = 0.0;
    for (w, row) in option_weights.iter().zip(jacobian) {
        if row.len() != h_param.len() {
            return Err(SensitivityError::Dimension(format!(
                "jacobian row has {} columns, direction has {}",
                row.len(),
                h_param.len()
            )));
        }
        total += w * row.iter().zip(h_param).map(|(a, b)| a * b).sum::<f64>();
    }
    Ok(total)
}

/// First-order value estimate `base + <w*, J (p - p0)>`.
pub fn first_order_estimate(
    base_bound: f64,
    option_weights: &[f64],
    jacobian: &[Vec<f64>],
    delta_param: &[f64],
) -> Result<f64, SensitivityError> {
    Ok(base_bound + chain_rule_derivative(option_weights, jacobian, delta_param)?)
}

/// One row of a perturbation study.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SensitivityRow {
    pub label: String,
    pub parameter: Vec<f64>,
    /// `<w*, J (p - p0)>` at the unperturbed optimum.
    pub derivative: f64,
    /// Re-solved bound; `None` when the perturbed prices left the interior
    /// of the moment cone and the row was refused.
    pub solved: Option<f64>,
    pub estimate: f64,
    pub abs_diff: Option<f64>,
    pub interior: bool,
}

/// Perturbation table: derivative, first-order estimate and re-solved value
/// per parameter set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub side: Side,
    pub base_parameter: Vec<f64>,
    pub base_bound: f64,
    pub rows: Vec<SensitivityRow>,
}

/// Inputs for [`perturbation_study`].
pub struct StudySetup<'a> {
    pub payoff: &'a PayoffSpec,
    pub family: &'a PriceFamily,
    pub base_point: &'a [f64],
    pub grid: &'a StateGrid,
    pub basis: &'a StrategyBasis,
    pub side: Side,
    pub options: SimplexOptions,
}

fn instruments_for(family: &PriceFamily, prices: &[f64]) -> InstrumentSet {
    let entries = family
        .keys()
        .into_iter()
        .zip(prices)
        .map(|((maturity, strike), &price)| Instrument {
            maturity,
            strike,
            price,
        })
        .collect();
    InstrumentSet::new(entries)
}

fn solve_side(
    side: Side,
    payoff: &PayoffSpec,
    instruments: &InstrumentSet,
    basis: &StrategyBasis,
    grid: &StateGrid,
    opts: &SimplexOptions,
) -> Result<HedgeSolution, HedgeError> {
    let (hedge, _) = match side {
        Side::Super => superhedge_with(payoff, instruments, basis, grid, opts)?,
        Side::Sub => subhedge_with(payoff, instruments, basis, grid, opts)?,
    };
    Ok(hedge)
}

/// Solve the base problem once, then walk the perturbation list: each row
/// gets the directional derivative at the base optimum, the first-order
/// estimate and (when the perturbed prices stay interior) a full re-solve.
/// All derivatives are taken at the unperturbed base point.
pub fn perturbation_study(
    setup: &StudySetup,
    perturbations: &[(String, Vec<f64>)],
) -> Result<SensitivityReport, SensitivityError> {
    let base_prices = setup.family.prices(setup.base_point)?;
    let keys = setup.family.keys();
    let base_instruments = instruments_for(setup.family, &base_prices);
    let base = solve_side(
        setup.side,
        setup.payoff,
        &base_instruments,
        setup.basis,
        setup.grid,
        &setup.options,
    )?;
    let worst = base
        .residuals
        .primal_infeasibility
        .max(base.residuals.dual_infeasibility)
        .max(base.residuals.duality_gap);
    if worst > CERTIFICATE_TOL {
        return Err(SensitivityError::Uncertified(worst));
    }
    let jacobian = setup.family.jacobian(setup.base_point)?;

    let mut rows = Vec::with_capacity(perturbations.len());
    for (label, param) in perturbations {
        let delta: Vec<f64> = param
            .iter()
            .zip(setup.base_point)
            .map(|(p, p0)| p - p0)
            .collect();
        let derivative = chain_rule_derivative(&base.option_weights, &jacobian, &delta)?;
        let estimate = base.bound + derivative;
        let refused = |derivative, estimate| SensitivityRow {
            label: label.clone(),
            parameter: param.clone(),
            derivative,
            solved: None,
            estimate,
            abs_diff: None,
            interior: false,
        };
        match setup.family.prices(param) {
            Ok(prices) => {
                let check = moment_cone_interior_check(&keys, &prices);
                if !check.interior {
                    rows.push(refused(derivative, estimate));
                    continue;
                }
                let instruments = instruments_for(setup.family, &prices);
                let hedge = solve_side(
                    setup.side,
                    setup.payoff,
                    &instruments,
                    setup.basis,
                    setup.grid,
                    &setup.options,
                )?;
                rows.push(SensitivityRow {
                    label: label.clone(),
                    parameter: param.clone(),
                    derivative,
                    solved: Some(hedge.bound),
                    estimate,
                    abs_diff: Some((hedge.bound - estimate).abs()),
                    interior: true,
                });
            }
            // Inadmissible parameters (slope beyond the wing bound, price
            // out of range): refused, not solved.
            Err(_) => rows.push(refused(derivative, estimate)),
        }
    }
    Ok(SensitivityReport {
        side: setup.side,
        base_parameter: setup.base_point.to_vec(),
        base_bound: base.bound,
        rows,
    })
}
