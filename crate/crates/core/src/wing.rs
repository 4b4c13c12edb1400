//! Arbitrage-free total-implied-variance surfaces with linear wings.
//!
//! A surface holds, per maturity, the quoted `(k, w)` region (interpolated
//! linearly in log-moneyness) and two linear wings anchored at the outermost
//! quoted points. Wing slopes live in `[0, 2]`; the moment formula
//! `psi(z) = 2 - 4(sqrt(z(z+1)) - z)` converts a critical moment order into
//! the asymptotic variance slope.
//!
//! For Heston dynamics the critical moment order at horizon `t` is the root
//! of a trigonometric equation; the negative-moment order comes from the
//! same equation under the share-measure parameter transform
//! `kappa -> kappa - rho*xi`, `theta -> kappa*theta/(kappa - rho*xi)`,
//! `rho -> -rho`.

use crate::arbitrage::WingSide;
use crate::market::bs_call_price;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum WingError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("wing slope {slope} exceeds the admissible bound {bound} at maturity {maturity}")]
    InadmissibleSlope {
        maturity: f64,
        slope: f64,
        bound: f64,
    },
    #[error("no critical moment found in ({lo}, {hi}] at maturity {t}")]
    RootNotFound { lo: f64, hi: f64, t: f64 },
    #[error("root residual {residual} exceeds tolerance at p = {root}")]
    RootResidual { root: f64, residual: f64 },
    #[error("share-measure transform requires kappa - rho*xi > 0, got {0}")]
    TransformInvalid(f64),
    #[error("extrapolated price {price} at (k={k}, t={t}) violates static bounds")]
    PriceOutOfBounds { k: f64, t: f64, price: f64 },
}

/// Heston model parameters for `dV = kappa(theta - V) dt + xi sqrt(V) dZ`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct HestonParams {
    pub kappa: f64,
    pub theta: f64,
    pub xi: f64,
    pub v0: f64,
    pub rho: f64,
}

impl HestonParams {
    pub fn new(kappa: f64, theta: f64, xi: f64, v0: f64, rho: f64) -> Result<Self, WingError> {
        if !(kappa > 0.0 && theta > 0.0 && xi > 0.0 && v0 > 0.0) {
            return Err(WingError::Domain(
                "kappa, theta, xi, v0 must all be positive".into(),
            ));
        }
        if !(-1.0..=1.0).contains(&rho) {
            return Err(WingError::Domain(format!("rho must lie in [-1, 1], got {rho}")));
        }
        Ok(Self { kappa, theta, xi, v0, rho })
    }

    /// Parameters of the share-measure dynamics of `1/S`.
    ///
    /// Requires `kappa - rho*xi > 0`.
    pub fn share_measure_transform(&self) -> Result<Self, WingError> {
        let kappa_t = self.kappa - self.rho * self.xi;
        if !(kappa_t > 0.0) {
            return Err(WingError::TransformInvalid(kappa_t));
        }
        Ok(Self {
            kappa: kappa_t,
            theta: self.kappa * self.theta / kappa_t,
            xi: self.xi,
            v0: self.v0,
            rho: -self.rho,
        })
    }
}

/// Critical moment orders of the underlying at one maturity.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CriticalMoments {
    pub maturity: f64,
    /// Supremal positive moment order.
    pub p_star: f64,
    /// Supremal negative moment order.
    pub q_star: f64,
}

/// Moment formula for the asymptotic total-variance slope:
/// `psi(z) = 2 - 4(sqrt(z(z+1)) - z)`, mapping `[0, inf)` onto `(0, 2]`.
pub fn lee_psi(z: f64) -> Result<f64, WingError> {
    if !(z >= 0.0) {
        return Err(WingError::Domain(format!("moment order must be >= 0, got {z}")));
    }
    if z == 0.0 {
        return Ok(2.0);
    }
    // Rationalised form 2 - 4/(1 + sqrt(1 + 1/z)): no cancellation at
    // large z, where the naive difference loses half the digits.
    Ok(2.0 - 4.0 / (1.0 + (1.0 + 1.0 / z).sqrt()))
}

/// Derivative of [`lee_psi`]: `-psi(z) / sqrt(z(z+1))`, negative for `z > 0`.
pub fn lee_psi_derivative(z: f64) -> Result<f64, WingError> {
    if !(z > 0.0) {
        return Err(WingError::Domain(format!("moment order must be > 0, got {z}")));
    }
    Ok(-lee_psi(z)? / (z * (z + 1.0)).sqrt())
}

/// Largest symmetric wing slope keeping a flat-base slice `w = a|k| + s^2 t`
/// free of butterfly arbitrage: `sqrt(4 - (2 - s^2 t)^2)`.
pub fn bs_max_slope(sigma: f64, t: f64) -> Result<f64, WingError> {
    let base = sigma * sigma * t;
    if !(base > 0.0 && base < 4.0) {
        return Err(WingError::Domain(format!(
            "sigma^2 t must lie in (0, 4), got {base}"
        )));
    }
    Ok((4.0 - (2.0 - base) * (2.0 - base)).sqrt())
}

/// A linear variance wing `w(k) = slope * |k - anchor_k| + anchor_w`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct WingSpec {
    pub side: WingSide,
    pub anchor_k: f64,
    pub anchor_w: f64,
    pub slope: f64,
}

impl WingSpec {
    pub fn new(
        side: WingSide,
        anchor_k: f64,
        anchor_w: f64,
        slope: f64,
    ) -> Result<Self, WingError> {
        if !(anchor_w > 0.0) {
            return Err(WingError::Domain(format!(
                "anchor variance must be positive, got {anchor_w}"
            )));
        }
        if !(0.0..=2.0).contains(&slope) {
            return Err(WingError::Domain(format!(
                "wing slope must lie in [0, 2], got {slope}"
            )));
        }
        Ok(Self { side, anchor_k, anchor_w, slope })
    }

    fn value(&self, k: f64) -> f64 {
        self.anchor_w + self.slope * (k - self.anchor_k).abs()
    }
}

/// One maturity of a total-variance surface.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SurfaceSlice {
    pub maturity: f64,
    /// Quoted `(k, w)` pairs, `k` strictly increasing; linear interpolation
    /// in between.
    pub quoted: Vec<(f64, f64)>,
    pub left: WingSpec,
    pub right: WingSpec,
}

impl SurfaceSlice {
    /// Total implied variance at log-moneyness `k`.
    pub fn w(&self, k: f64) -> f64 {
        let first = self.quoted.first().expect("non-empty quoted region");
        let last = self.quoted.last().expect("non-empty quoted region");
        if k <= first.0 {
            return self.left.value(k);
        }
        if k >= last.0 {
            return self.right.value(k);
        }
        for pair in self.quoted.windows(2) {
            if k <= pair[1].0 {
                let u = (k - pair[0].0) / (pair[1].0 - pair[0].0);
                return pair[0].1 + u * (pair[1].1 - pair[0].1);
            }
        }
        last.1
    }
}

/// Total implied variance surface: quoted regions plus parametric wings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TotalVarianceSurface {
    pub slices: Vec<SurfaceSlice>,
}

impl TotalVarianceSurface {
    pub fn maturities(&self) -> Vec<f64> {
        self.slices.iter().map(|s| s.maturity).collect()
    }

    /// Variance at `(k, maturity index)`.
    pub fn w(&self, slice: usize, k: f64) -> f64 {
        self.slices[slice].w(k)
    }

    /// Calendar diagnostic: `w(k, t_i) <= w(k, t_{i+1})` sampled on `[k_lo,
    /// k_hi]`; returns the worst (most negative) gap `w_next - w_cur`.
    pub fn calendar_margin(&self, k_lo: f64, k_hi: f64, samples: usize) -> f64 {
        let mut worst = f64::INFINITY;
        for i in 1..self.slices.len() {
            for j in 0..=samples {
                let k = k_lo + (k_hi - k_lo) * j as f64 / samples as f64;
                worst = worst.min(self.slices[i].w(k) - self.slices[i - 1].w(k));
            }
        }
        worst
    }
}

/// Flat-base Black-Scholes surface with symmetric linear wings:
/// `w(k, t) = a_t |k| + sigma^2 t`, anchored at `k = 0`.
///
/// Each slope must lie within [`bs_max_slope`] for its maturity.
pub fn bs_flat_wing_surface(
    sigma: f64,
    slope_per_maturity: &[(f64, f64)],
) -> Result<TotalVarianceSurface, WingError> {
    let mut slices = Vec::new();
    for &(t, slope) in slope_per_maturity {
        let bound = bs_max_slope(sigma, t)?;
        if !(slope >= 0.0 && slope <= bound) {
            return Err(WingError::InadmissibleSlope {
                maturity: t,
                slope,
                bound,
            });
        }
        let base = sigma * sigma * t;
        slices.push(SurfaceSlice {
            maturity: t,
            quoted: vec![(0.0, base)],
            left: WingSpec::new(WingSide::Left, 0.0, base, slope)?,
            right: WingSpec::new(WingSide::Right, 0.0, base, slope)?,
        });
    }
    Ok(TotalVarianceSurface { slices })
}

/// Quoted region and moment orders for one maturity of a Heston-style
/// surface.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HestonWingInput {
    pub maturity: f64,
    /// Quoted `(k, w)` pairs, `k` strictly increasing.
    pub quoted: Vec<(f64, f64)>,
    /// Negative critical moment order driving the left wing slope `psi(q)`.
    pub q: f64,
    /// Positive critical moment order driving the right wing slope `psi(p)`.
    pub p: f64,
}

/// Surface with wings `psi(q)|k - k_L| + w(k_L)` on the left and
/// `psi(p)|k - k_R| + w(k_R)` on the right of the quoted region.
pub fn heston_wing_surface(inputs: &[HestonWingInput]) -> Result<TotalVarianceSurface, WingError> {
    let mut slices = Vec::new();
    for input in inputs {
        if input.quoted.is_empty() {
            return Err(WingError::Domain(format!(
                "empty quoted region at maturity {}",
                input.maturity
            )));
        }
        if !(input.p > 0.0 && input.q > 0.0) {
            return Err(WingError::Domain("moment orders must be positive".into()));
        }
        let first = input.quoted[0];
        let last = *input.quoted.last().unwrap();
        slices.push(SurfaceSlice {
            maturity: input.maturity,
            quoted: input.quoted.clone(),
            left: WingSpec::new(WingSide::Left, first.0, first.1, lee_psi(input.q)?)?,
            right: WingSpec::new(WingSide::Right, last.0, last.1, lee_psi(input.p)?)?,
        });
    }
    Ok(TotalVarianceSurface { slices })
}

/// Price the calls `(k, t)` implied by the surface, maturity-major.
///
/// Every price must land strictly inside `((1-K)^+, 1)`.
pub fn extrapolated_call_prices(
    surface: &TotalVarianceSurface,
    strikes_per_maturity: &[Vec<f64>],
) -> Result<Vec<f64>, WingError> {
    if strikes_per_maturity.len() != surface.slices.len() {
        return Err(WingError::Domain(format!(
            "{} strike lists for {} maturities",
            strikes_per_maturity.len(),
            surface.slices.len()
        )));
    }
    let mut prices = Vec::new();
    for (slice, strikes) in surface.slices.iter().zip(strikes_per_maturity) {
        for &strike in strikes {
            let k = strike.ln();
            let price = bs_call_price(k, slice.w(k).sqrt());
            let intrinsic = (1.0 - strike).max(0.0);
            if !(price > intrinsic && price < 1.0) {
                return Err(WingError::PriceOutOfBounds {
                    k,
                    t: slice.maturity,
                    price,
                });
            }
            prices.push(price);
        }
    }
    Ok(prices)
}

// Discriminant of the Riccati equation governing moment explosions:
// `xi^2 u(u-1) - (kappa - rho xi u)^2`; the defining equation is real only
// where this is positive.
fn moment_discriminant(u: f64, p: &HestonParams) -> f64 {
    let a = p.kappa - p.rho * p.xi * u;
    p.xi * p.xi * u * (u - 1.0) - a * a
}

/// Left-hand side of the critical-moment equation
/// `(kappa - rho xi u) + sqrt(D) cot(sqrt(D) t / 2) = 0` with
/// `D = xi^2 u(u-1) - (kappa - rho xi u)^2`, defined where `D > 0`.
pub fn critical_moment_equation(u: f64, params: &HestonParams, t: f64) -> Option<f64> {
    let d = moment_discriminant(u, params);
    if d <= 0.0 {
        return None;
    }
    let beta = d.sqrt();
    let half = 0.5 * beta * t;
    Some(params.kappa - params.rho * params.xi * u + beta * half.cos() / half.sin())
}

// Index of the cot branch at order u; roots are only accepted inside a
// single branch so that pole crossings are never mistaken for sign changes.
fn branch_index(u: f64, params: &HestonParams, t: f64) -> Option<i64> {
    let d = moment_discriminant(u, params);
    if d <= 0.0 {
        return None;
    }
    Some((0.5 * d.sqrt() * t / std::f64::consts::PI).floor() as i64)
}

const MOMENT_SCAN_HI: f64 = 200.0;

fn critical_moment_root(params: &HestonParams, t: f64) -> Result<f64, WingError> {
    if !(t > 0.0) {
        return Err(WingError::Domain(format!("maturity must be positive, got {t}")));
    }
    if params.rho.abs() >= 1.0 {
        return Err(WingError::Domain("|rho| must be < 1".into()));
    }
    // Log-spaced scan of (1, 200] restricted to the real domain of the
    // equation, looking for the first within-branch sign change.
    let lo = 1.0f64;
    let n = 8000;
    let ratio = (MOMENT_SCAN_HI / lo).ln();
    let mut prev: Option<(f64, f64, i64)> = None;
    let mut bracket = None;
    for i in 0..=n {
        let u = lo * (ratio * i as f64 / n as f64).exp();
        let (val, branch) =
            match (critical_moment_equation(u, params, t), branch_index(u, params, t)) {
                (Some(v), Some(b)) => (v, b),
                _ => {
                    prev = None;
                    continue;
                }
            };
        if let Some((pu, pv, pb)) = prev {
            if pb == branch && pv > 0.0 && val <= 0.0 {
                bracket = Some((pu, u));
                break;
            }
        }
        prev = Some((u, val, branch));
    }
    let (mut a, mut b) = bracket.ok_or(WingError::RootNotFound {
        lo,
        hi: MOMENT_SCAN_HI,
        t,
    })?;
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        match critical_moment_equation(mid, params, t) {
            Some(v) if v > 0.0 => a = mid,
            Some(_) => b = mid,
            None => a = mid,
        }
        if b - a <= 1e-13 * b.max(1.0) {
            break;
        }
    }
    let root = 0.5 * (a + b);
    let residual = critical_moment_equation(root, params, t).ok_or(WingError::RootNotFound {
        lo,
        hi: MOMENT_SCAN_HI,
        t,
    })?;
    if residual.abs() > 1e-9 {
        return Err(WingError::RootResidual { root, residual });
    }
    Ok(root)
}

/// Critical positive moment order `p*` at horizon `t`: the smallest root of
/// the defining equation beyond 1, located by a log-spaced scan and
/// bisection. The residual of the returned root is at most `1e-9`.
pub fn heston_critical_moment_right(params: &HestonParams, t: f64) -> Result<f64, WingError> {
    critical_moment_root(params, t)
}

/// Critical negative moment order `q*` at horizon `t`: the same equation
/// under the share-measure transform of the parameters.
pub fn heston_critical_moment_left(params: &HestonParams, t: f64) -> Result<f64, WingError> {
    let transformed = params.share_measure_transform()?;
    critical_moment_root(&transformed, t)
}

/// Price a diagnostic strike grid from the surface and run the full static
/// checks, recording the per-maturity minimum of the butterfly function `g`
/// sampled along both wings out to `wing_extent` beyond the anchors.
pub fn diagnostic_report(
    surface: &TotalVarianceSurface,
    strikes: &[f64],
    wing_extent: f64,
    samples: usize,
) -> Result<crate::arbitrage::ValidationReport, WingError> {
    use crate::arbitrage::g_function;
    let mut quotes = Vec::new();
    for (i, slice) in surface.slices.iter().enumerate() {
        for &strike in strikes {
            let k = strike.ln();
            quotes.push(crate::market::CallQuote {
                maturity: slice.maturity,
                moneyness: strike,
                price: bs_call_price(k, surface.w(i, k).sqrt()),
            });
        }
    }
    let set = crate::market::CallQuoteSet::from_quotes(quotes)
        .map_err(|e| WingError::Domain(e.to_string()))?;
    let report = crate::arbitrage::validate_quotes(&set);
    let mut g_min = Vec::new();
    for slice in &surface.slices {
        let mut worst = f64::INFINITY;
        for j in 0..=samples {
            let off = wing_extent * j as f64 / samples as f64;
            let k_left = slice.left.anchor_k - off;
            let g_left = g_function(slice.left.value(k_left), -slice.left.slope, 0.0, k_left)
                .map_err(|e| WingError::Domain(e.to_string()))?;
            let k_right = slice.right.anchor_k + off;
            let g_right = g_function(slice.right.value(k_right), slice.right.slope, 0.0, k_right)
                .map_err(|e| WingError::Domain(e.to_string()))?;
            worst = worst.min(g_left).min(g_right);
        }
        g_min.push((slice.maturity, worst));
    }
    Ok(report.with_g_min(g_min))
}

/// Both critical moment orders at one horizon.
pub fn critical_moments(params: &HestonParams, t: f64) -> Result<CriticalMoments, WingError> {
    Ok(CriticalMoments {
        maturity: t,
        p_star: heston_critical_moment_right(params, t)?,
        q_star: heston_critical_moment_left(params, t)?,
    })
}
