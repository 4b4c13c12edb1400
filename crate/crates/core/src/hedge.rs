//! Discretised super- and sub-hedging problems on a product state grid.
//!
//! The linear programme is solved in its measure form: one column per grid
//! state carrying the payoff as cost, with rows enforcing unit mass,
//! repricing of every call instrument, and zero expectation for each
//! trading-strategy basis payoff (the initial stock position plus monomials
//! in the observed path times the next increment). The optimal semi-static
//! hedge — cash, option weights and strategy coefficients — is read off the
//! row duals; the super-hedging bound is the common optimal value.
//!
//! Sub-hedging is the mirror image through the identity
//! `sub(phi) = -super(-phi)`.

use crate::arbitrage::validate_quotes;
use crate::lp::{self, CertificateResiduals, ColumnOracle, LpStatus, SimplexOptions};
use crate::market::CallQuoteSet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HedgeError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("assembly error: {0}")]
    Assembly(String),
    #[error("input quotes admit static arbitrage ({violations} violations)")]
    ArbitrageInInputs { violations: usize },
    #[error("no measure on the grid reprices the instruments: inputs admit arbitrage relative to this grid")]
    MeasureInfeasible,
    #[error("payoff is not dominated by any portfolio on the grid")]
    PayoffNotDominated,
    #[error(transparent)]
    Lp(#[from] lp::LpError),
}

/// Product state grid: one strictly positive node list per maturity,
/// iterated maturity-major (the first maturity is the most significant
/// index digit).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateGrid {
    maturities: Vec<f64>,
    nodes: Vec<Vec<f64>>,
}

impl StateGrid {
    /// Uniform grid `s_i = i * s_max / n`, `i = 1..n` (zero excluded), the
    /// same nodes for every maturity.
    pub fn uniform(n_points: usize, s_max: f64, maturities: &[f64]) -> Result<Self, HedgeError> {
        if n_points < 2 {
            return Err(HedgeError::Domain(format!(
                "need at least 2 grid points, got {n_points}"
            )));
        }
        if !(s_max > 0.0) {
            return Err(HedgeError::Domain(format!("s_max must be positive, got {s_max}")));
        }
        if maturities.is_empty() {
            return Err(HedgeError::Domain("need at least one maturity".into()));
        }
        for pair in maturities.windows(2) {
            if !(pair[0] < pair[1]) {
                return Err(HedgeError::Domain(
                    "maturities must be strictly increasing".into(),
                ));
            }
        }
        let nodes: Vec<f64> = (1..=n_points)
            .map(|i| i as f64 * s_max / n_points as f64)
            .collect();
        Ok(Self {
            maturities: maturities.to_vec(),
            nodes: vec![nodes; maturities.len()],
        })
    }

    pub fn maturities(&self) -> &[f64] {
        &self.maturities
    }

    pub fn nodes(&self, maturity_index: usize) -> &[f64] {
        &self.nodes[maturity_index]
    }

    /// Total number of product states.
    pub fn num_states(&self) -> usize {
        self.nodes.iter().map(|n| n.len()).product()
    }

    /// Decode a maturity-major state index into per-maturity node indices.
    pub fn decode(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.nodes.len()];
        for j in (0..self.nodes.len()).rev() {
            let len = self.nodes[j].len();
            out[j] = idx % len;
            idx /= len;
        }
        out
    }

    /// Spot path of a state index.
    pub fn state(&self, idx: usize) -> Vec<f64> {
        self.decode(idx)
            .iter()
            .enumerate()
            .map(|(j, &i)| self.nodes[j][i])
            .collect()
    }
}

/// One call instrument: maturity, strike and quoted price.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Instrument {
    pub maturity: f64,
    pub strike: f64,
    pub price: f64,
}

/// The static-hedging universe: call payoffs and prices in maturity-major,
/// strike-minor order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstrumentSet {
    entries: Vec<Instrument>,
}

impl InstrumentSet {
    pub fn new(entries: Vec<Instrument>) -> Self {
        Self { entries }
    }

    /// Take every quote of a quote set, preserving its maturity-major order.
    pub fn from_quotes(quotes: &CallQuoteSet) -> Self {
        Self {
            entries: quotes
                .iter()
                .map(|q| Instrument {
                    maturity: q.maturity,
                    strike: q.moneyness,
                    price: q.price,
                })
                .collect(),
        }
    }

    pub fn entries(&self) -> &[Instrument] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn prices(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.price).collect()
    }

    fn to_quote_set(&self) -> Option<CallQuoteSet> {
        CallQuoteSet::from_quotes(
            self.entries
                .iter()
                .map(|e| crate::market::CallQuote {
                    maturity: e.maturity,
                    moneyness: e.strike,
                    price: e.price,
                })
                .collect(),
        )
        .ok()
    }
}

/// Monomial trading-strategy basis: for each intermediate period `j`
/// (between maturities `j` and `j+1`), all monomials in the observed path
/// of total degree at most `degrees[j]`. The initial stock position `a0`
/// (constant over the first period) is always present and separate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StrategyBasis {
    degrees: Vec<usize>,
}

impl StrategyBasis {
    /// The same degree cap for every intermediate period.
    pub fn monomials(degree: usize, intermediate_periods: usize) -> Self {
        Self {
            degrees: vec![degree; intermediate_periods],
        }
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    // Exponent multi-indices over the first `period+1` coordinates, graded
    // lexicographic for determinism.
    fn multi_indices(&self, period: usize) -> Vec<Vec<usize>> {
        let vars = period + 1;
        let cap = self.degrees[period];
        let mut out = Vec::new();
        let mut current = vec![0usize; vars];
        gen_indices(&mut out, &mut current, 0, cap);
        out
    }

    #[cfg(test)]
    fn num_functions(&self, period: usize) -> usize {
        self.multi_indices(period).len()
    }
}

fn gen_indices(out: &mut Vec<Vec<usize>>, current: &mut Vec<usize>, pos: usize, remaining: usize) {
    if pos == current.len() {
        out.push(current.clone());
        return;
    }
    for d in 0..=remaining {
        current[pos] = d;
        gen_indices(out, current, pos + 1, remaining - d);
    }
    current[pos] = 0;
}

/// Exotic payoff evaluated on a grid state (the spot path).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PayoffSpec {
    /// `|S_last - strike * S_first|`.
    ForwardStartStraddle { strike: f64 },
    /// `S_last - 1`.
    Forward,
    /// `(S_t - strike)^+` at the given maturity index.
    TradedCall { maturity_index: usize, strike: f64 },
    /// Negation wrapper (used by the sub-hedging reduction).
    Negated(Box<PayoffSpec>),
}

impl PayoffSpec {
    pub fn evaluate(&self, path: &[f64]) -> f64 {
        match self {
            PayoffSpec::ForwardStartStraddle { strike } => {
                (path[path.len() - 1] - strike * path[0]).abs()
            }
            PayoffSpec::Forward => path[path.len() - 1] - 1.0,
            PayoffSpec::TradedCall {
                maturity_index,
                strike,
            } => (path[*maturity_index] - strike).max(0.0),
            PayoffSpec::Negated(inner) => -inner.evaluate(path),
        }
    }

    pub fn negated(self) -> PayoffSpec {
        PayoffSpec::Negated(Box::new(self))
    }
}

/// Forward-start straddle payoff `|S_T - strike * S_t1|`.
pub fn forward_start_straddle(strike: f64) -> Result<PayoffSpec, HedgeError> {
    if !(strike > 0.0) {
        return Err(HedgeError::Domain(format!(
            "forward-start strike must be positive, got {strike}"
        )));
    }
    Ok(PayoffSpec::ForwardStartStraddle { strike })
}

/// Which bound is being computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Super,
    Sub,
}

/// The assembled measure-form LP: columns are grid states (cost = payoff),
/// rows are mass, instrument repricing and strategy-expectation conditions.
/// Row duals are the semi-static hedge `(lambda, w, a0, a)`.
pub struct HedgeLp {
    grid: StateGrid,
    instruments: InstrumentSet,
    payoff: PayoffSpec,
    /// Instrument count per grid maturity, maturity-major.
    per_maturity: Vec<usize>,
    /// Expanded multi-indices per intermediate period.
    indices: Vec<Vec<Vec<usize>>>,
    /// Row equilibration scales (solver row = original row / scale).
    row_scales: Vec<f64>,
    rhs_scaled: Vec<f64>,
    max_abs_payoff: f64,
}

impl HedgeLp {
    pub fn num_rows(&self) -> usize {
        2 + self.instruments.len() + self.indices.iter().map(|ix| ix.len()).sum::<usize>()
    }

    pub fn grid(&self) -> &StateGrid {
        &self.grid
    }

    // Scaled coefficient column of one grid state.
    fn scaled_column(&self, idx: usize, out: &mut [f64]) {
        let path = self.grid.state(idx);
        out[0] = 1.0 / self.row_scales[0];
        let d_total = self.instruments.len();
        let mut offset = 0usize;
        for (mat_idx, &count) in self.per_maturity.iter().enumerate() {
            let s = path[mat_idx];
            for local in 0..count {
                let i = offset + local;
                let strike = self.instruments.entries()[i].strike;
                out[1 + i] = (s - strike).max(0.0) / self.row_scales[1 + i];
            }
            offset += count;
        }
        out[1 + d_total] = (path[0] - 1.0) / self.row_scales[1 + d_total];
        let mut row = 2 + d_total;
        for (j, period_indices) in self.indices.iter().enumerate() {
            let inc = path[j + 1] - path[j];
            for alpha in period_indices {
                let theta: f64 = alpha
                    .iter()
                    .enumerate()
                    .map(|(c, &a)| path[c].powi(a as i32))
                    .product();
                out[row] = theta * inc / self.row_scales[row];
                row += 1;
            }
        }
    }
}

/// Assemble the measure-form LP for the given payoff, instruments, strategy
/// basis and grid.
///
/// Row layout: mass; one repricing row per instrument (maturity-major);
/// the initial-position row `S_{t1} - 1`; one row per strategy basis
/// function `theta(path) * (S_next - S_cur)`. Rows are scaled by their
/// largest absolute coefficient on the grid.
pub fn assemble(
    payoff: &PayoffSpec,
    instruments: &InstrumentSet,
    basis: &StrategyBasis,
    grid: &StateGrid,
) -> Result<HedgeLp, HedgeError> {
    let n_mats = grid.maturities().len();
    if basis.degrees().len() != n_mats.saturating_sub(1) {
        return Err(HedgeError::Assembly(format!(
            "{} basis periods for {} maturities",
            basis.degrees().len(),
            n_mats
        )));
    }
    // Instruments must be maturity-major over grid maturities.
    let mut per_maturity = vec![0usize; n_mats];
    let mut cursor = 0usize;
    for inst in instruments.entries() {
        let idx = grid
            .maturities()
            .iter()
            .position(|&t| (t - inst.maturity).abs() <= 1e-12)
            .ok_or_else(|| {
                HedgeError::Assembly(format!(
                    "instrument maturity {} not on the grid",
                    inst.maturity
                ))
            })?;
        if idx < cursor {
            return Err(HedgeError::Assembly(
                "instruments must be ordered maturity-major".into(),
            ));
        }
        cursor = idx;
        per_maturity[idx] += 1;
    }

    let indices: Vec<Vec<Vec<usize>>> = (0..n_mats.saturating_sub(1))
        .map(|j| basis.multi_indices(j))
        .collect();

    // Row scales from analytic grid maxima.
    let d_total = instruments.len();
    let n_strategy: usize = indices.iter().map(|ix| ix.len()).sum();
    let m = 2 + d_total + n_strategy;
    let mut scales = vec![1.0f64; m];
    for (i, inst) in instruments.entries().iter().enumerate() {
        let mat_idx = grid
            .maturities()
            .iter()
            .position(|&t| (t - inst.maturity).abs() <= 1e-12)
            .expect("validated above");
        let s_max = *grid.nodes(mat_idx).last().unwrap();
        scales[1 + i] = (s_max - inst.strike).max(1e-6);
    }
    {
        let s1 = grid.nodes(0);
        scales[1 + d_total] = (s1[s1.len() - 1] - 1.0)
            .abs()
            .max((s1[0] - 1.0).abs())
            .max(1e-6);
    }
    let mut row = 2 + d_total;
    for (j, period_indices) in indices.iter().enumerate() {
        // Monomials peak at the top node of each coordinate; the increment
        // peaks at the widest corner of the two adjacent node sets.
        let coord_max: Vec<f64> = (0..=j).map(|c| *grid.nodes(c).last().unwrap()).collect();
        let next = grid.nodes(j + 1);
        let cur = grid.nodes(j);
        let inc_max = (next[next.len() - 1] - cur[0])
            .abs()
            .max((cur[cur.len() - 1] - next[0]).abs());
        for alpha in period_indices {
            let theta_max: f64 = alpha
                .iter()
                .zip(&coord_max)
                .map(|(&a, &s)| s.powi(a as i32))
                .product();
            scales[row] = (theta_max * inc_max).max(1e-6);
            row += 1;
        }
    }

    let mut rhs = vec![0.0; m];
    rhs[0] = 1.0;
    for (i, inst) in instruments.entries().iter().enumerate() {
        rhs[1 + i] = inst.price;
    }
    let rhs_scaled: Vec<f64> = rhs.iter().zip(&scales).map(|(v, s)| v / s).collect();

    // Payoff magnitude over the grid for tolerance scaling.
    let mut max_abs = 0.0f64;
    for idx in 0..grid.num_states() {
        max_abs = max_abs.max(payoff.evaluate(&grid.state(idx)).abs());
    }

    Ok(HedgeLp {
        grid: grid.clone(),
        instruments: instruments.clone(),
        payoff: payoff.clone(),
        per_maturity,
        indices,
        row_scales: scales,
        rhs_scaled,
        max_abs_payoff: max_abs,
    })
}

impl ColumnOracle for HedgeLp {
    fn num_rows(&self) -> usize {
        HedgeLp::num_rows(self)
    }
    fn num_cols(&self) -> usize {
        self.grid.num_states()
    }
    fn rhs(&self) -> &[f64] {
        &self.rhs_scaled
    }
    fn cost(&self, j: usize) -> f64 {
        self.payoff.evaluate(&self.grid.state(j))
    }
    fn column(&self, j: usize, out: &mut [f64]) {
        self.scaled_column(j, out);
    }
    fn max_abs_cost(&self) -> f64 {
        self.max_abs_payoff
    }

    fn price(
        &self,
        y: &[f64],
        use_costs: bool,
        tol: f64,
        bland: bool,
        excluded: &[usize],
    ) -> Option<(usize, f64)> {
        // Fold the row scaling into the duals so per-state work uses raw
        // coefficients: y^T A_scaled(state) = z^T A_raw(state).
        let z: Vec<f64> = y.iter().zip(&self.row_scales).map(|(v, s)| v / s).collect();
        let d_total = self.instruments.len();

        if self.grid.maturities().len() == 2 {
            // Separable fast path: z^T A = F(s1) + G(s2) + H(s1) * s2.
            let nodes1 = self.grid.nodes(0);
            let nodes2 = self.grid.nodes(1);
            let count1 = self.per_maturity[0];
            let period = &self.indices[0];
            let mut f_tab = vec![0.0f64; nodes1.len()];
            let mut h_tab = vec![0.0f64; nodes1.len()];
            for (i1, &s1) in nodes1.iter().enumerate() {
                let mut f = z[0];
                for local in 0..count1 {
                    let inst = &self.instruments.entries()[local];
                    f += z[1 + local] * (s1 - inst.strike).max(0.0);
                }
                f += z[1 + d_total] * (s1 - 1.0);
                let mut h = 0.0;
                for (b, alpha) in period.iter().enumerate() {
                    h += z[2 + d_total + b] * s1.powi(alpha[0] as i32);
                }
                f_tab[i1] = f - h * s1;
                h_tab[i1] = h;
            }
            let mut g_tab = vec![0.0f64; nodes2.len()];
            for (i2, &s2) in nodes2.iter().enumerate() {
                let mut g = 0.0;
                for local in 0..self.per_maturity[1] {
                    let inst = &self.instruments.entries()[count1 + local];
                    g += z[1 + count1 + local] * (s2 - inst.strike).max(0.0);
                }
                g_tab[i2] = g;
            }
            let mut best: Option<(usize, f64)> = None;
            let mut path = [0.0f64; 2];
            for (i1, &s1) in nodes1.iter().enumerate() {
                let base = f_tab[i1];
                let h = h_tab[i1];
                path[0] = s1;
                for (i2, &s2) in nodes2.iter().enumerate() {
                    let cost = if use_costs {
                        path[1] = s2;
                        self.payoff.evaluate(&path)
                    } else {
                        0.0
                    };
                    let d = cost - (base + g_tab[i2] + h * s2);
                    if d > tol {
                        let idx = i1 * nodes2.len() + i2;
                        if !excluded.is_empty() && excluded.binary_search(&idx).is_ok() {
                            continue;
                        }
                        if bland {
                            return Some((idx, d));
                        }
                        if best.is_none_or(|(_, bd)| d > bd) {
                            best = Some((idx, d));
                        }
                    }
                }
            }
            return best;
        }

        // General path: walk every state with a scratch column.
        let m = HedgeLp::num_rows(self);
        let mut col = vec![0.0; m];
        let mut best: Option<(usize, f64)> = None;
        for idx in 0..self.grid.num_states() {
            if !excluded.is_empty() && excluded.binary_search(&idx).is_ok() {
                continue;
            }
            self.scaled_column(idx, &mut col);
            let mut d = if use_costs { self.cost(idx) } else { 0.0 };
            for i in 0..m {
                d -= y[i] * col[i];
            }
            if d > tol {
                if bland {
                    return Some((idx, d));
                }
                if best.is_none_or(|(_, bd)| d > bd) {
                    best = Some((idx, d));
                }
            }
        }
        best
    }
}

/// Strategy coefficients of the optimal hedge.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StrategyCoefficients {
    /// Initial stock position (constant strategy on the first period).
    pub a0: f64,
    /// Per intermediate period, coefficients aligned with the monomial
    /// basis in graded lexicographic order.
    pub per_period: Vec<Vec<f64>>,
}

/// The optimal semi-static portfolio and its bound.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HedgeSolution {
    pub side: Side,
    /// Optimal bound `lambda + <c, w>`.
    pub bound: f64,
    pub lambda: f64,
    pub option_weights: Vec<f64>,
    pub strategy: StrategyCoefficients,
    /// Worst domination slack over the grid (>= -1e-8 for a valid hedge).
    pub slack_min: f64,
    pub slack_mean: f64,
    /// Bound recomputed as `lambda + <c, w>` independent of the LP value.
    pub recomputed_bound: f64,
    pub residuals: CertificateResiduals,
    pub iterations: usize,
    pub alternative_optima: bool,
}

/// Near-martingale measure certificate extracted from the optimal basis.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    /// Sparse weights `(state index, weight)`.
    pub weights: Vec<(usize, f64)>,
    pub total_mass: f64,
    /// Call prices implied by the measure, instrument order.
    pub implied_call_prices: Vec<f64>,
    /// Worst repricing error against the instrument prices.
    pub call_residual_max: f64,
    /// Worst violation of the strategy-expectation (martingale) rows.
    pub martingale_residual_max: f64,
}

impl DiscreteMeasure {
    /// Materialise `(path..., weight)` rows for export.
    pub fn nodes(&self, grid: &StateGrid) -> Vec<(Vec<f64>, f64)> {
        self.weights
            .iter()
            .map(|&(idx, w)| (grid.state(idx), w))
            .collect()
    }
}

/// Gap and feasibility diagnostics tying a hedge to its measure.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DualityReport {
    /// `|primal - dual| / (1 + |bound|)`.
    pub relative_gap: f64,
    pub complementary_slackness: f64,
    pub call_residual_max: f64,
    pub martingale_residual_max: f64,
}

/// Certified gap and residual summary for a solved pair.
pub fn duality_report(hedge: &HedgeSolution, measure: &DiscreteMeasure) -> DualityReport {
    DualityReport {
        relative_gap: hedge.residuals.duality_gap / (1.0 + hedge.bound.abs()),
        complementary_slackness: hedge.residuals.complementary_slackness,
        call_residual_max: measure.call_residual_max,
        martingale_residual_max: measure.martingale_residual_max,
    }
}

fn solve_measure_form(
    hedge_lp: &HedgeLp,
    opts: &SimplexOptions,
) -> Result<(HedgeSolution, DiscreteMeasure), HedgeError> {
    let sol = lp::solve_oracle(hedge_lp, opts)?;
    match sol.status {
        LpStatus::Infeasible => return Err(HedgeError::MeasureInfeasible),
        LpStatus::Unbounded => return Err(HedgeError::PayoffNotDominated),
        LpStatus::Optimal => {}
    }

    // Unscale duals: solver rows are original rows divided by row_scales.
    let duals: Vec<f64> = sol
        .duals
        .iter()
        .zip(&hedge_lp.row_scales)
        .map(|(y, s)| y / s)
        .collect();
    let d_total = hedge_lp.instruments.len();
    let lambda = duals[0];
    let option_weights: Vec<f64> = duals[1..1 + d_total].to_vec();
    let a0 = duals[1 + d_total];
    let mut per_period = Vec::new();
    let mut row = 2 + d_total;
    for period_indices in &hedge_lp.indices {
        per_period.push(duals[row..row + period_indices.len()].to_vec());
        row += period_indices.len();
    }
    let strategy = StrategyCoefficients { a0, per_period };

    let prices = hedge_lp.instruments.prices();
    let recomputed_bound = lambda
        + option_weights
            .iter()
            .zip(&prices)
            .map(|(w, c)| w * c)
            .sum::<f64>();

    let (slack_min, slack_mean) = dominance_stats(hedge_lp, lambda, &option_weights, &strategy);

    // Measure certificate with raw-coefficient diagnostics.
    let mut weights: Vec<(usize, f64)> = sol
        .primal
        .iter()
        .filter(|&&(_, w)| w != 0.0)
        .map(|&(j, w)| (j, w))
        .collect();
    weights.sort_unstable_by_key(|&(j, _)| j);
    let mut total_mass = 0.0;
    let mut implied = vec![0.0; d_total];
    let n_strategy: usize = hedge_lp.indices.iter().map(|ix| ix.len()).sum();
    let mut strat_res = vec![0.0; n_strategy + 1];
    for &(idx, w) in &weights {
        let path = hedge_lp.grid.state(idx);
        total_mass += w;
        let mut offset = 0usize;
        for (mat_idx, &count) in hedge_lp.per_maturity.iter().enumerate() {
            let s = path[mat_idx];
            for local in 0..count {
                let i = offset + local;
                implied[i] += w * (s - hedge_lp.instruments.entries()[i].strike).max(0.0);
            }
            offset += count;
        }
        strat_res[0] += w * (path[0] - 1.0);
        let mut r = 1;
        for (j, period_indices) in hedge_lp.indices.iter().enumerate() {
            let inc = path[j + 1] - path[j];
            for alpha in period_indices {
                let theta: f64 = alpha
                    .iter()
                    .enumerate()
                    .map(|(c, &a)| path[c].powi(a as i32))
                    .product();
                strat_res[r] += w * theta * inc;
                r += 1;
            }
        }
    }
    let call_residual_max = implied
        .iter()
        .zip(&prices)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    let martingale_residual_max = strat_res.iter().fold(0.0f64, |a, v| a.max(v.abs()));

    let hedge = HedgeSolution {
        side: Side::Super,
        bound: sol.objective,
        lambda,
        option_weights,
        strategy,
        slack_min,
        slack_mean,
        recomputed_bound,
        residuals: sol.residuals,
        iterations: sol.iterations,
        alternative_optima: sol.alternative_optima,
    };
    let measure = DiscreteMeasure {
        weights,
        total_mass,
        implied_call_prices: implied,
        call_residual_max,
        martingale_residual_max,
    };
    Ok((hedge, measure))
}

// Worst / mean of A(state) - payoff(state) over the grid, computed from the
// recovered portfolio independent of solver internals.
fn dominance_stats(
    hedge_lp: &HedgeLp,
    lambda: f64,
    option_weights: &[f64],
    strategy: &StrategyCoefficients,
) -> (f64, f64) {
    let grid = &hedge_lp.grid;
    let mut min_slack = f64::INFINITY;
    let mut sum_slack = 0.0;
    let n = grid.num_states();
    for idx in 0..n {
        let path = grid.state(idx);
        let mut value = lambda;
        let mut offset = 0usize;
        for (mat_idx, &count) in hedge_lp.per_maturity.iter().enumerate() {
            let s = path[mat_idx];
            for local in 0..count {
                let i = offset + local;
                value +=
                    option_weights[i] * (s - hedge_lp.instruments.entries()[i].strike).max(0.0);
            }
            offset += count;
        }
        value += strategy.a0 * (path[0] - 1.0);
        for (j, period_indices) in hedge_lp.indices.iter().enumerate() {
            let inc = path[j + 1] - path[j];
            for (b, alpha) in period_indices.iter().enumerate() {
                let theta: f64 = alpha
                    .iter()
                    .enumerate()
                    .map(|(c, &a)| path[c].powi(a as i32))
                    .product();
                value += strategy.per_period[j][b] * theta * inc;
            }
        }
        let slack = value - hedge_lp.payoff.evaluate(&path);
        min_slack = min_slack.min(slack);
        sum_slack += slack;
    }
    (min_slack, sum_slack / n as f64)
}

/// Least-cost dominating semi-static portfolio and the associated extremal
/// measure.
///
/// The instruments must pass [`validate_quotes`]; an infeasible measure LP
/// is reported as arbitrage relative to the grid.
pub fn superhedge(
    payoff: &PayoffSpec,
    instruments: &InstrumentSet,
    basis: &StrategyBasis,
    grid: &StateGrid,
) -> Result<(HedgeSolution, DiscreteMeasure), HedgeError> {
    superhedge_with(payoff, instruments, basis, grid, &SimplexOptions::default())
}

/// [`superhedge`] with explicit solver options.
pub fn superhedge_with(
    payoff: &PayoffSpec,
    instruments: &InstrumentSet,
    basis: &StrategyBasis,
    grid: &StateGrid,
    opts: &SimplexOptions,
) -> Result<(HedgeSolution, DiscreteMeasure), HedgeError> {
    if let Some(set) = instruments.to_quote_set() {
        let report = validate_quotes(&set);
        if !report.passed {
            return Err(HedgeError::ArbitrageInInputs {
                violations: report.violations.len(),
            });
        }
    }
    let hedge_lp = assemble(payoff, instruments, basis, grid)?;
    solve_measure_form(&hedge_lp, opts)
}

/// Greatest-cost dominated portfolio: `sub(phi) = -super(-phi)`, with the
/// portfolio negated back into the sub-hedging orientation.
pub fn subhedge(
    payoff: &PayoffSpec,
    instruments: &InstrumentSet,
    basis: &StrategyBasis,
    grid: &StateGrid,
) -> Result<(HedgeSolution, DiscreteMeasure), HedgeError> {
    subhedge_with(payoff, instruments, basis, grid, &SimplexOptions::default())
}

/// [`subhedge`] with explicit solver options.
pub fn subhedge_with(
    payoff: &PayoffSpec,
    instruments: &InstrumentSet,
    basis: &StrategyBasis,
    grid: &StateGrid,
    opts: &SimplexOptions,
) -> Result<(HedgeSolution, DiscreteMeasure), HedgeError> {
    let negated = payoff.clone().negated();
    let (mut hedge, measure) = superhedge_with(&negated, instruments, basis, grid, opts)?;
    hedge.side = Side::Sub;
    hedge.bound = -hedge.bound;
    hedge.lambda = -hedge.lambda;
    hedge.recomputed_bound = -hedge.recomputed_bound;
    for w in hedge.option_weights.iter_mut() {
        *w = -*w;
    }
    hedge.strategy.a0 = -hedge.strategy.a0;
    for period in hedge.strategy.per_period.iter_mut() {
        for a in period.iter_mut() {
            *a = -*a;
        }
    }
    // The slack of the negated super-hedge equals phi - A of the sub-hedge,
    // so the statistics carry over unchanged.
    Ok((hedge, measure))
}

/// Bounds as the strategy-basis degree grows: super-hedging values are
/// non-increasing and sub-hedging values non-decreasing as the set of
/// admissible strategies widens.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BasisStudy {
    pub degrees: Vec<usize>,
    pub super_bounds: Vec<f64>,
    pub sub_bounds: Vec<f64>,
}

/// Re-solve both bounds for each basis degree in `degrees` (increasing).
pub fn refine_basis_study(
    payoff: &PayoffSpec,
    instruments: &InstrumentSet,
    grid: &StateGrid,
    degrees: &[usize],
) -> Result<BasisStudy, HedgeError> {
    if degrees.windows(2).any(|w| w[0] >= w[1]) {
        return Err(HedgeError::Domain("degrees must be strictly increasing".into()));
    }
    let periods = grid.maturities().len() - 1;
    let mut super_bounds = Vec::new();
    let mut sub_bounds = Vec::new();
    for &d in degrees {
        let basis = StrategyBasis::monomials(d, periods);
        let (sup, _) = superhedge(payoff, instruments, &basis, grid)?;
        let (sub, _) = subhedge(payoff, instruments, &basis, grid)?;
        super_bounds.push(sup.bound);
        sub_bounds.push(sub.bound);
    }
    Ok(BasisStudy {
        degrees: degrees.to_vec(),
        super_bounds,
        sub_bounds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::{brute_force_vertex_optimum, Sense, StandardLp, VarBound};
    use crate::market::bs_call_price;

    fn bs_instruments(sigma: f64, maturities: &[f64], strikes: &[f64]) -> InstrumentSet {
        let mut entries = Vec::new();
        for &t in maturities {
            for &k in strikes {
                entries.push(Instrument {
                    maturity: t,
                    strike: k,
                    price: bs_call_price(k.ln(), sigma * t.sqrt()),
                });
            }
        }
        InstrumentSet::new(entries)
    }

    #[test]
    fn uniform_grid_nodes_and_count() {
        let g = StateGrid::uniform(4, 1.0, &[1.0]).unwrap();
        assert_eq!(g.nodes(0), &[0.25, 0.5, 0.75, 1.0]);
        let g2 = StateGrid::uniform(500, 5.0, &[1.0, 1.5]).unwrap();
        assert_eq!(g2.num_states(), 250_000);
        assert!(StateGrid::uniform(1, 1.0, &[1.0]).is_err());
    }

    #[test]
    fn grid_indexing_is_maturity_major() {
        let g = StateGrid::uniform(3, 3.0, &[1.0, 2.0]).unwrap();
        assert_eq!(g.state(0), vec![1.0, 1.0]);
        assert_eq!(g.state(1), vec![1.0, 2.0]);
        assert_eq!(g.state(3), vec![2.0, 1.0]);
        assert_eq!(g.state(8), vec![3.0, 3.0]);
    }

    #[test]
    fn row_count_matches_experiment_setup() {
        // 18 strikes x 2 maturities + mass + a0 + degree<=4 monomials.
        let strikes: Vec<f64> = (3..=20).map(|i| 0.1 * i as f64).collect();
        let instruments = bs_instruments(0.2, &[1.0, 1.5], &strikes);
        let grid = StateGrid::uniform(10, 5.0, &[1.0, 1.5]).unwrap();
        let basis = StrategyBasis::monomials(4, 1);
        let lp = assemble(
            &PayoffSpec::ForwardStartStraddle { strike: 1.0 },
            &instruments,
            &basis,
            &grid,
        )
        .unwrap();
        assert_eq!(HedgeLp::num_rows(&lp), 43);
        assert_eq!(ColumnOracle::num_cols(&lp), 100);
    }

    #[test]
    fn forward_start_straddle_payoff_values() {
        let phi = forward_start_straddle(1.0).unwrap();
        assert_eq!(phi.evaluate(&[1.0, 1.0]), 0.0);
        assert!((phi.evaluate(&[1.0, 1.3]) - 0.3).abs() < 1e-15);
        let phi09 = forward_start_straddle(0.9).unwrap();
        assert!((phi09.evaluate(&[2.0, 1.5]) - 0.3).abs() < 1e-12);
        assert!(forward_start_straddle(0.0).is_err());
    }

    #[test]
    fn forward_repricing_on_two_nodes() {
        // No options: max/min of E[S] over measures with mass 1 and
        // E[S - 1] = 0 is exactly 1.
        let grid = StateGrid::uniform(2, 2.0, &[1.0]).unwrap();
        let instruments = InstrumentSet::new(vec![]);
        let basis = StrategyBasis::monomials(0, 0);
        let payoff = PayoffSpec::TradedCall {
            maturity_index: 0,
            strike: 0.0,
        }; // payoff S
        let (sup, _) = superhedge(&payoff, &instruments, &basis, &grid).unwrap();
        let (sub, _) = subhedge(&payoff, &instruments, &basis, &grid).unwrap();
        assert!((sup.bound - 1.0).abs() < 1e-10, "super {}", sup.bound);
        assert!((sub.bound - 1.0).abs() < 1e-10, "sub {}", sub.bound);
    }

    #[test]
    fn traded_call_is_replicated_at_its_price() {
        let instruments = bs_instruments(0.2, &[1.0, 1.5], &[0.8, 1.0, 1.2]);
        let grid = StateGrid::uniform(60, 5.0, &[1.0, 1.5]).unwrap();
        let basis = StrategyBasis::monomials(2, 1);
        let payoff = PayoffSpec::TradedCall {
            maturity_index: 0,
            strike: 1.0,
        };
        let price = instruments.entries()[1].price;
        let (sup, _) = superhedge(&payoff, &instruments, &basis, &grid).unwrap();
        let (sub, _) = subhedge(&payoff, &instruments, &basis, &grid).unwrap();
        assert!((sup.bound - price).abs() < 1e-8, "super {} vs {}", sup.bound, price);
        assert!((sub.bound - price).abs() < 1e-8, "sub {} vs {}", sub.bound, price);
    }

    #[test]
    fn forward_bound_is_zero() {
        let instruments = bs_instruments(0.2, &[1.0, 1.5], &[0.9, 1.0, 1.1]);
        let grid = StateGrid::uniform(50, 5.0, &[1.0, 1.5]).unwrap();
        let basis = StrategyBasis::monomials(1, 1);
        let (sup, _) = superhedge(&PayoffSpec::Forward, &instruments, &basis, &grid).unwrap();
        let (sub, _) = subhedge(&PayoffSpec::Forward, &instruments, &basis, &grid).unwrap();
        assert!(sup.bound.abs() < 1e-9, "super {}", sup.bound);
        assert!(sub.bound.abs() < 1e-9, "sub {}", sub.bound);
    }

    #[test]
    fn negation_identity_links_sub_and_super() {
        let instruments = bs_instruments(0.25, &[1.0, 1.5], &[0.8, 1.0, 1.3]);
        let grid = StateGrid::uniform(40, 4.0, &[1.0, 1.5]).unwrap();
        let basis = StrategyBasis::monomials(2, 1);
        let phi = forward_start_straddle(1.0).unwrap();
        let (sub, _) = subhedge(&phi, &instruments, &basis, &grid).unwrap();
        let (sup_neg, _) =
            superhedge(&phi.clone().negated(), &instruments, &basis, &grid).unwrap();
        assert!((sub.bound + sup_neg.bound).abs() < 1e-10);
    }

    #[test]
    fn translating_the_payoff_shifts_the_bound_exactly() {
        // Adding a constant to the cost vector moves the optimum by that
        // constant: cash absorbs it (total mass is one).
        let grid = StateGrid::uniform(30, 3.0, &[1.0, 1.5]).unwrap();
        let instruments = bs_instruments(0.2, &[1.0, 1.5], &[0.9, 1.1]);
        let basis = StrategyBasis::monomials(1, 1);
        let phi = forward_start_straddle(1.0).unwrap();
        let (sup, _) = superhedge(&phi, &instruments, &basis, &grid).unwrap();
        let lp = assemble(&phi, &instruments, &basis, &grid).unwrap();
        let shifted = ShiftedOracle {
            inner: &lp,
            shift: 2.0,
        };
        let sol = crate::lp::solve_oracle(&shifted, &SimplexOptions::default()).unwrap();
        assert!((sol.objective - (sup.bound + 2.0)).abs() < 1e-9);
    }

    struct ShiftedOracle<'a> {
        inner: &'a HedgeLp,
        shift: f64,
    }

    impl ColumnOracle for ShiftedOracle<'_> {
        fn num_rows(&self) -> usize {
            ColumnOracle::num_rows(self.inner)
        }
        fn num_cols(&self) -> usize {
            self.inner.num_cols()
        }
        fn rhs(&self) -> &[f64] {
            ColumnOracle::rhs(self.inner)
        }
        fn cost(&self, j: usize) -> f64 {
            self.inner.cost(j) + self.shift
        }
        fn column(&self, j: usize, out: &mut [f64]) {
            self.inner.column(j, out)
        }
        fn max_abs_cost(&self) -> f64 {
            self.inner.max_abs_cost() + self.shift.abs()
        }
    }

    #[test]
    fn weak_duality_and_certificates_on_straddle() {
        let instruments = bs_instruments(0.2, &[1.0, 1.5], &[0.7, 0.9, 1.0, 1.1, 1.3]);
        let grid = StateGrid::uniform(80, 5.0, &[1.0, 1.5]).unwrap();
        let basis = StrategyBasis::monomials(3, 1);
        let phi = forward_start_straddle(1.0).unwrap();
        let (sup, sup_measure) = superhedge(&phi, &instruments, &basis, &grid).unwrap();
        let (sub, sub_measure) = subhedge(&phi, &instruments, &basis, &grid).unwrap();
        assert!(sub.bound <= sup.bound + 1e-9);
        for (hedge, measure) in [(&sup, &sup_measure), (&sub, &sub_measure)] {
            assert!(hedge.slack_min >= -1e-8, "slack {}", hedge.slack_min);
            assert!(
                (hedge.bound - hedge.recomputed_bound).abs() < 1e-12 * (1.0 + hedge.bound.abs())
            );
            assert!((measure.total_mass - 1.0).abs() < 1e-9);
            assert!(measure.call_residual_max < 1e-8);
            assert!(measure.martingale_residual_max < 1e-8);
            let report = duality_report(hedge, measure);
            assert!(report.relative_gap < 1e-8);
        }
    }

    #[test]
    fn brute_force_agreement_on_tiny_grid() {
        // 5x5 grid, 2 options, degree-1 basis: compare against exhaustive
        // vertex enumeration of the same measure LP.
        let instruments = InstrumentSet::new(vec![
            Instrument {
                maturity: 1.0,
                strike: 0.9,
                price: bs_call_price((0.9f64).ln(), 0.2),
            },
            Instrument {
                maturity: 1.5,
                strike: 1.1,
                price: bs_call_price((1.1f64).ln(), 0.2 * 1.5f64.sqrt()),
            },
        ]);
        let grid = StateGrid::uniform(5, 2.5, &[1.0, 1.5]).unwrap();
        let basis = StrategyBasis::monomials(1, 1);
        let phi = forward_start_straddle(1.0).unwrap();
        let hedge_lp = assemble(&phi, &instruments, &basis, &grid).unwrap();

        let m = HedgeLp::num_rows(&hedge_lp);
        let n = ColumnOracle::num_cols(&hedge_lp);
        let mut columns = Vec::with_capacity(n);
        let mut costs = Vec::with_capacity(n);
        let mut col = vec![0.0; m];
        for j in 0..n {
            hedge_lp.column(j, &mut col);
            columns.push(col.clone());
            costs.push(hedge_lp.cost(j));
        }
        let rhs = ColumnOracle::rhs(&hedge_lp).to_vec();
        let dense_max = StandardLp::new(
            Sense::Maximize,
            costs.clone(),
            columns.clone(),
            rhs.clone(),
            vec![VarBound::NonNegative; n],
        )
        .unwrap();
        let (brute_max, _) = brute_force_vertex_optimum(&dense_max, 1e-9).expect("feasible");
        let (sup, _) = superhedge(&phi, &instruments, &basis, &grid).unwrap();
        assert!(
            (sup.bound - brute_max).abs() < 1e-9,
            "{} vs {brute_max}",
            sup.bound
        );

        let dense_min =
            StandardLp::new(Sense::Minimize, costs, columns, rhs, vec![
                VarBound::NonNegative;
                n
            ])
            .unwrap();
        let (brute_min, _) = brute_force_vertex_optimum(&dense_min, 1e-9).expect("feasible");
        let (sub, _) = subhedge(&phi, &instruments, &basis, &grid).unwrap();
        assert!(
            (sub.bound - brute_min).abs() < 1e-9,
            "{} vs {brute_min}",
            sub.bound
        );
    }

    #[test]
    fn refine_basis_study_is_monotone() {
        let instruments = bs_instruments(0.2, &[1.0, 1.5], &[0.8, 1.0, 1.2]);
        let grid = StateGrid::uniform(40, 4.0, &[1.0, 1.5]).unwrap();
        let phi = forward_start_straddle(1.0).unwrap();
        let study = refine_basis_study(&phi, &instruments, &grid, &[0, 1, 2, 3, 4]).unwrap();
        for w in study.super_bounds.windows(2) {
            assert!(w[1] <= w[0] + 1e-8, "super not monotone: {:?}", study.super_bounds);
        }
        for w in study.sub_bounds.windows(2) {
            assert!(w[1] >= w[0] - 1e-8, "sub not monotone: {:?}", study.sub_bounds);
        }
        for (sup, sub) in study.super_bounds.iter().zip(&study.sub_bounds) {
            assert!(sub <= sup);
        }
        let gaps: Vec<f64> = study
            .super_bounds
            .iter()
            .zip(&study.sub_bounds)
            .map(|(a, b)| a - b)
            .collect();
        for w in gaps.windows(2) {
            assert!(w[1] <= w[0] + 1e-8);
        }
    }

    #[test]
    fn degree_zero_equals_static_plus_forward_bound() {
        // A degree-0 basis spans exactly the constant strategy, so the
        // study's first entry must coincide with a direct degree-0 solve.
        let instruments = bs_instruments(0.2, &[1.0, 1.5], &[0.8, 1.0, 1.2]);
        let grid = StateGrid::uniform(40, 4.0, &[1.0, 1.5]).unwrap();
        let phi = forward_start_straddle(1.0).unwrap();
        let study = refine_basis_study(&phi, &instruments, &grid, &[0, 1]).unwrap();
        let basis0 = StrategyBasis::monomials(0, 1);
        let (sup0, _) = superhedge(&phi, &instruments, &basis0, &grid).unwrap();
        assert!((study.super_bounds[0] - sup0.bound).abs() < 1e-12);
    }

    #[test]
    fn arbitrage_inputs_are_rejected() {
        // Increasing prices in strike violate monotonicity.
        let instruments = InstrumentSet::new(vec![
            Instrument {
                maturity: 1.0,
                strike: 0.9,
                price: 0.05,
            },
            Instrument {
                maturity: 1.0,
                strike: 1.1,
                price: 0.06,
            },
        ]);
        let grid = StateGrid::uniform(10, 2.0, &[1.0]).unwrap();
        let basis = StrategyBasis::monomials(0, 0);
        match superhedge(&PayoffSpec::Forward, &instruments, &basis, &grid) {
            Err(HedgeError::ArbitrageInInputs { violations }) => assert!(violations > 0),
            other => panic!("expected arbitrage rejection, got {other:?}"),
        }
    }

    #[test]
    fn infeasible_grid_is_reported_as_arbitrage() {
        // A price only attainable with mass beyond the grid ceiling.
        let instruments = InstrumentSet::new(vec![Instrument {
            maturity: 1.0,
            strike: 1.0,
            price: 0.9,
        }]);
        let grid = StateGrid::uniform(10, 1.5, &[1.0]).unwrap();
        let basis = StrategyBasis::monomials(0, 0);
        match superhedge(&PayoffSpec::Forward, &instruments, &basis, &grid) {
            Err(HedgeError::MeasureInfeasible) => {}
            other => panic!("expected measure infeasibility, got {other:?}"),
        }
    }

    #[test]
    fn dominance_holds_on_every_state() {
        let instruments = bs_instruments(0.2, &[1.0, 1.5], &[0.8, 1.0, 1.2, 1.5]);
        let grid = StateGrid::uniform(60, 5.0, &[1.0, 1.5]).unwrap();
        let basis = StrategyBasis::monomials(4, 1);
        let phi = forward_start_straddle(1.0).unwrap();
        let (sup, _) = superhedge(&phi, &instruments, &basis, &grid).unwrap();
        assert!(sup.slack_min >= -1e-8);
        assert!(sup.slack_mean >= 0.0);
    }

    #[test]
    fn three_maturity_assembly_and_solve() {
        // Not exercised by the bundled experiments but supported: total
        // degree <= 1 monomials in two coordinates for the second period.
        let instruments = bs_instruments(0.2, &[0.5, 1.0, 1.5], &[0.9, 1.1]);
        let grid = StateGrid::uniform(12, 3.0, &[0.5, 1.0, 1.5]).unwrap();
        let basis = StrategyBasis::monomials(1, 2);
        assert_eq!(basis.num_functions(0), 2); // 1, s1
        assert_eq!(basis.num_functions(1), 3); // 1, s1, s2
        let phi = forward_start_straddle(1.0).unwrap();
        let (sup, _) = superhedge(&phi, &instruments, &basis, &grid).unwrap();
        let (sub, _) = subhedge(&phi, &instruments, &basis, &grid).unwrap();
        assert!(sub.bound <= sup.bound + 1e-9);
        assert!(sup.slack_min >= -1e-8);
    }
}
