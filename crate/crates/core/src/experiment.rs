//! The two bundled forward-start straddle experiments.
//!
//! Shared by the command-line `reproduce` front end and the acceptance
//! suite: a flat-smile study with symmetric wing-slope perturbations, and a
//! Heston study where only strikes 0.8..1.2 are traded and the remaining
//! instruments come from moment-driven wing extrapolation.

use crate::hedge::{
    forward_start_straddle, Instrument, InstrumentSet, PayoffSpec, StateGrid, StrategyBasis,
};
use crate::heston::{heston_call, HestonError, HestonQuadratureConfig};
use crate::market::{bs_call_price, total_variance};
use crate::sensitivity::PriceFamily;
use crate::wing::HestonParams;
use crate::hedge::HedgeError;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Heston(#[from] HestonError),
    #[error(transparent)]
    Hedge(#[from] HedgeError),
    #[error(transparent)]
    Market(#[from] crate::market::MarketError),
    #[error(transparent)]
    Sensitivity(#[from] crate::sensitivity::SensitivityError),
}

/// Eighteen strikes `0.3, 0.4, ..., 2.0`.
pub fn default_strikes() -> Vec<f64> {
    // i/10 rounds to the same f64 as the decimal literals (0.3, ..., 2.0);
    // 0.1 * i does not.
    (3..=20).map(|i| i as f64 / 10.0).collect()
}

/// Flat-smile study configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BsExperiment {
    pub sigma: f64,
    pub maturities: Vec<f64>,
    pub strikes: Vec<f64>,
    pub grid_points: usize,
    pub grid_max: f64,
    pub basis_degree: usize,
    pub fs_strike: f64,
}

impl Default for BsExperiment {
    fn default() -> Self {
        Self {
            sigma: 0.2,
            maturities: vec![1.0, 1.5],
            strikes: default_strikes(),
            grid_points: 500,
            grid_max: 5.0,
            basis_degree: 4,
            fs_strike: 1.0,
        }
    }
}

impl BsExperiment {
    pub fn grid(&self) -> Result<StateGrid, ExperimentError> {
        Ok(StateGrid::uniform(
            self.grid_points,
            self.grid_max,
            &self.maturities,
        )?)
    }

    pub fn basis(&self) -> StrategyBasis {
        StrategyBasis::monomials(self.basis_degree, self.maturities.len() - 1)
    }

    pub fn payoff(&self) -> Result<PayoffSpec, ExperimentError> {
        Ok(forward_start_straddle(self.fs_strike)?)
    }

    /// The symmetric-slope price family with this experiment's strikes.
    pub fn family(&self) -> PriceFamily {
        PriceFamily::BsSlopes {
            sigma: self.sigma,
            maturities: self.maturities.clone(),
            strikes_per_maturity: vec![self.strikes.clone(); self.maturities.len()],
        }
    }

    /// Instruments priced from the flat surface with equal slopes `a`.
    pub fn instruments(&self, slope: f64) -> Result<InstrumentSet, ExperimentError> {
        let p = vec![slope; self.maturities.len()];
        let prices = self.family().prices(&p)?;
        let mut entries = Vec::with_capacity(prices.len());
        let mut idx = 0;
        for &t in &self.maturities {
            for &strike in &self.strikes {
                entries.push(Instrument {
                    maturity: t,
                    strike,
                    price: prices[idx],
                });
                idx += 1;
            }
        }
        Ok(InstrumentSet::new(entries))
    }
}

/// Heston study configuration: model-traded strikes plus wing-extrapolated
/// instruments.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HestonExperiment {
    pub params: HestonParams,
    pub maturities: Vec<f64>,
    pub all_strikes: Vec<f64>,
    /// Inclusive moneyness range of traded (model-priced) strikes.
    pub traded_range: (f64, f64),
    pub grid_points: usize,
    pub grid_max: f64,
    pub basis_degree: usize,
    pub fs_strike: f64,
}

impl Default for HestonExperiment {
    fn default() -> Self {
        Self {
            params: HestonParams::new(1.0, 0.07, 0.4, 0.07, -0.8).expect("valid parameters"),
            maturities: vec![1.0, 1.5],
            all_strikes: default_strikes(),
            traded_range: (0.8, 1.2),
            grid_points: 500,
            grid_max: 5.0,
            basis_degree: 4,
            fs_strike: 1.0,
        }
    }
}

impl HestonExperiment {
    pub fn grid(&self) -> Result<StateGrid, ExperimentError> {
        Ok(StateGrid::uniform(
            self.grid_points,
            self.grid_max,
            &self.maturities,
        )?)
    }

    pub fn basis(&self) -> StrategyBasis {
        StrategyBasis::monomials(self.basis_degree, self.maturities.len() - 1)
    }

    pub fn payoff(&self) -> Result<PayoffSpec, ExperimentError> {
        Ok(forward_start_straddle(self.fs_strike)?)
    }

    pub fn is_traded(&self, strike: f64) -> bool {
        strike >= self.traded_range.0 - 1e-12 && strike <= self.traded_range.1 + 1e-12
    }

    pub fn traded_strikes(&self) -> Vec<f64> {
        self.all_strikes
            .iter()
            .copied()
            .filter(|&s| self.is_traded(s))
            .collect()
    }

    /// Model prices and implied total variances at the traded strikes, per
    /// maturity: the quoted `(k, w)` regions anchoring the wings.
    pub fn quoted_regions(
        &self,
        config: &HestonQuadratureConfig,
    ) -> Result<Vec<Vec<(f64, f64)>>, ExperimentError> {
        let traded = self.traded_strikes();
        let mut regions = Vec::with_capacity(self.maturities.len());
        for &t in &self.maturities {
            let mut region = Vec::with_capacity(traded.len());
            for &strike in &traded {
                let k = strike.ln();
                let price = heston_call(k, t, &self.params, config)?;
                region.push((k, total_variance(k, price)?));
            }
            regions.push(region);
        }
        Ok(regions)
    }

    /// The moment-order price family anchored at the traded quotes.
    pub fn family(
        &self,
        config: &HestonQuadratureConfig,
    ) -> Result<PriceFamily, ExperimentError> {
        Ok(PriceFamily::HestonWings {
            maturities: self.maturities.clone(),
            quoted: self.quoted_regions(config)?,
            strikes_per_maturity: vec![self.all_strikes.clone(); self.maturities.len()],
        })
    }

    /// Instruments for a moment parameter vector `(q_t1, p_t1, ...)`:
    /// traded strikes carry model prices, the rest wing prices.
    pub fn instruments(
        &self,
        family: &PriceFamily,
        parameter: &[f64],
    ) -> Result<InstrumentSet, ExperimentError> {
        let prices = family.prices(parameter)?;
        let mut entries = Vec::with_capacity(prices.len());
        let mut idx = 0;
        for &t in &self.maturities {
            for &strike in &self.all_strikes {
                entries.push(Instrument {
                    maturity: t,
                    strike,
                    price: prices[idx],
                });
                idx += 1;
            }
        }
        Ok(InstrumentSet::new(entries))
    }
}

/// Sanity helper used in tests and the demo data path: flat-smile quote CSV
/// content for the default experiment.
pub fn bs_quote_csv(exp: &BsExperiment) -> String {
    let mut out = String::from("maturity,moneyness,price\n");
    for &t in &exp.maturities {
        for &strike in &exp.strikes {
            let price = bs_call_price(strike.ln(), exp.sigma * t.sqrt());
            out.push_str(&format!("{t},{strike},{price:.12}\n"));
        }
    }
    out
}
