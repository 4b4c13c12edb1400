//! Revised simplex with lazily generated columns.
//!
//! The solver works on equality-form problems `A x = b`, `x >= 0`,
//! maximising `c^T x` internally. Columns are supplied through
//! [`ColumnOracle`] so huge column sets (grid measures) are priced against
//! the dual multipliers instead of being materialised; [`StandardLp`] wraps
//! the oracle machinery for ordinary dense problems, adding row
//! equilibration, free-variable splitting and sense handling.
//!
//! Anti-cycling follows the usual recipe: deterministic Dantzig pricing with
//! lowest-index tie-breaks, switching to Bland's rule after a run of
//! degenerate pivots. The basis inverse is updated by elementary row
//! operations and refactorised from scratch periodically.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LpError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("coefficients must be finite: {0}")]
    NotFinite(String),
    #[error("singular basis at iteration {iteration}")]
    SingularBasis { iteration: usize },
    #[error("iteration limit {limit} reached (phase {phase}, objective {objective})")]
    IterationLimit {
        limit: usize,
        phase: u8,
        objective: f64,
    },
    #[error("numerical breakdown at iteration {iteration}: {detail}")]
    Breakdown { iteration: usize, detail: String },
}

/// Optimisation direction of a [`StandardLp`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Minimize,
    Maximize,
}

/// Per-column sign restriction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarBound {
    NonNegative,
    Free,
}

/// Solve status; all three are valid outcomes, not errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Residuals recomputed independently of the solve path.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct CertificateResiduals {
    /// `max_i |(A x - b)_i|`.
    pub primal_infeasibility: f64,
    /// Worst improving reduced cost left over (0 when dual feasible).
    pub dual_infeasibility: f64,
    /// `sum_j |x_j * reduced_cost_j|` over basic columns.
    pub complementary_slackness: f64,
    /// `|c^T x - b^T y|`.
    pub duality_gap: f64,
}

impl CertificateResiduals {
    pub fn within(&self, tol: f64) -> bool {
        self.primal_infeasibility <= tol
            && self.dual_infeasibility <= tol
            && self.complementary_slackness <= tol
            && self.duality_gap <= tol
    }
}

/// Result of a simplex run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Objective in the caller's sense (meaningful for `Optimal`).
    pub objective: f64,
    /// Nonzero primal entries `(column, value)`.
    pub primal: Vec<(usize, f64)>,
    /// One dual multiplier per row.
    pub duals: Vec<f64>,
    pub residuals: CertificateResiduals,
    pub iterations: usize,
    /// Dual certificate of infeasibility (`y^T A <= 0`, `y^T b > 0`) when
    /// status is `Infeasible` and one was obtained.
    pub farkas: Option<Vec<f64>>,
    /// Improving ray `(column, coefficient)` witnessing unboundedness:
    /// non-negative, `A r = 0`, with positive objective growth in the
    /// caller's improving direction.
    pub ray: Option<Vec<(usize, f64)>>,
    /// A nonbasic column with (near-)zero reduced cost exists: the optimal
    /// vertex is not unique.
    pub alternative_optima: bool,
    pub degenerate_pivots: usize,
}

impl LpSolution {
    /// Primal value of column `j` (zero if nonbasic).
    pub fn value_of(&self, j: usize) -> f64 {
        self.primal
            .iter()
            .find(|(idx, _)| *idx == j)
            .map_or(0.0, |(_, v)| *v)
    }
}

/// Solver tuning knobs.
#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    /// Feasibility tolerance on the (scaled) data.
    pub feas_tol: f64,
    /// Optimality tolerance for reduced costs, relative to the objective
    /// magnitude.
    pub opt_tol: f64,
    pub max_iterations: usize,
    /// Refactorise the basis inverse every this many pivots.
    pub refactor_every: usize,
    /// Switch to Bland's rule after this many consecutive degenerate pivots.
    pub bland_after: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            feas_tol: 1e-9,
            opt_tol: 1e-9,
            max_iterations: 200_000,
            refactor_every: 64,
            bland_after: 50,
        }
    }
}

/// Column access for the simplex engine. Everything is phrased for the
/// internal maximisation form.
pub trait ColumnOracle {
    fn num_rows(&self) -> usize;
    fn num_cols(&self) -> usize;
    fn rhs(&self) -> &[f64];
    fn cost(&self, j: usize) -> f64;
    /// Write column `j` into `out` (length `num_rows`).
    fn column(&self, j: usize, out: &mut [f64]);
    /// Largest |cost| over all columns, used to scale tolerances.
    fn max_abs_cost(&self) -> f64;

    /// Best entering candidate: the column maximising the reduced cost
    /// `d_j = (use_costs ? c_j : 0) - y^T A_j` over `d_j > tol`, excluding
    /// `excluded` (sorted). `bland` picks the lowest such index instead.
    /// Ties break towards the lower index.
    fn price(
        &self,
        y: &[f64],
        use_costs: bool,
        tol: f64,
        bland: bool,
        excluded: &[usize],
    ) -> Option<(usize, f64)> {
        let m = self.num_rows();
        let mut col = vec![0.0; m];
        let mut best: Option<(usize, f64)> = None;
        for j in 0..self.num_cols() {
            if excluded.binary_search(&j).is_ok() {
                continue;
            }
            self.column(j, &mut col);
            let mut d = if use_costs { self.cost(j) } else { 0.0 };
            for i in 0..m {
                d -= y[i] * col[i];
            }
            if d > tol {
                if bland {
                    return Some((j, d));
                }
                if best.is_none_or(|(_, bd)| d > bd) {
                    best = Some((j, d));
                }
            }
        }
        best
    }
}

/// Dense equality-form LP, the plain [`ColumnOracle`] implementation.
pub struct DenseOracle {
    pub costs: Vec<f64>,
    /// Column-major coefficients.
    pub columns: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
}

impl ColumnOracle for DenseOracle {
    fn num_rows(&self) -> usize {
        self.rhs.len()
    }
    fn num_cols(&self) -> usize {
        self.columns.len()
    }
    fn rhs(&self) -> &[f64] {
        &self.rhs
    }
    fn cost(&self, j: usize) -> f64 {
        self.costs[j]
    }
    fn column(&self, j: usize, out: &mut [f64]) {
        out.copy_from_slice(&self.columns[j]);
    }
    fn max_abs_cost(&self) -> f64 {
        self.costs.iter().fold(0.0, |a, c| a.max(c.abs()))
    }
}

// Basis bookkeeping: column indices >= num_cols denote artificials.
struct Basis {
    indices: Vec<usize>,
    binv: Vec<f64>, // row-major m*m
    xb: Vec<f64>,
    art_sign: Vec<f64>,
    m: usize,
}

impl Basis {
    fn artificial(rhs: &[f64], n_real: usize) -> Self {
        let m = rhs.len();
        let mut binv = vec![0.0; m * m];
        let mut xb = vec![0.0; m];
        let mut art_sign = vec![1.0; m];
        for i in 0..m {
            let s = if rhs[i] < 0.0 { -1.0 } else { 1.0 };
            art_sign[i] = s;
            binv[i * m + i] = s;
            xb[i] = rhs[i].abs();
        }
        Self {
            indices: (0..m).map(|i| n_real + i).collect(),
            binv,
            xb,
            art_sign,
            m,
        }
    }

    fn is_artificial(&self, pos: usize, n_real: usize) -> bool {
        self.indices[pos] >= n_real
    }

    // u = B^-1 a
    fn ftran(&self, a: &[f64], u: &mut [f64]) {
        let m = self.m;
        for i in 0..m {
            let mut acc = 0.0;
            let row = &self.binv[i * m..(i + 1) * m];
            for j in 0..m {
                acc += row[j] * a[j];
            }
            u[i] = acc;
        }
    }

    // y^T = cB^T B^-1
    fn duals(&self, cb: &[f64], y: &mut [f64]) {
        let m = self.m;
        y.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..m {
            let ci = cb[i];
            if ci != 0.0 {
                let row = &self.binv[i * m..(i + 1) * m];
                for j in 0..m {
                    y[j] += ci * row[j];
                }
            }
        }
    }

    fn pivot(&mut self, r: usize, u: &[f64], entering: usize, theta: f64) {
        let m = self.m;
        let ur = u[r];
        for j in 0..m {
            self.binv[r * m + j] /= ur;
        }
        for i in 0..m {
            if i != r {
                let f = u[i];
                if f != 0.0 {
                    for j in 0..m {
                        self.binv[i * m + j] -= f * self.binv[r * m + j];
                    }
                }
            }
        }
        for i in 0..m {
            if i != r {
                self.xb[i] -= theta * u[i];
                if self.xb[i] < 0.0 && self.xb[i] > -1e-11 {
                    self.xb[i] = 0.0;
                }
            }
        }
        self.xb[r] = theta;
        self.indices[r] = entering;
    }

    fn refactor<O: ColumnOracle>(
        &mut self,
        oracle: &O,
        n_real: usize,
        iteration: usize,
    ) -> Result<(), LpError> {
        let m = self.m;
        let mut bmat = DMatrix::<f64>::zeros(m, m);
        let mut col = vec![0.0; m];
        for (p, &j) in self.indices.iter().enumerate() {
            if j < n_real {
                oracle.column(j, &mut col);
                for i in 0..m {
                    bmat[(i, p)] = col[i];
                }
            } else {
                bmat[(j - n_real, p)] = self.art_sign[j - n_real];
            }
        }
        let inv = bmat
            .try_inverse()
            .ok_or(LpError::SingularBasis { iteration })?;
        for i in 0..m {
            for j in 0..m {
                self.binv[i * m + j] = inv[(i, j)];
            }
        }
        // Recompute basic values from scratch to purge drift.
        let rhs = oracle.rhs().to_vec();
        let mut xb = vec![0.0; m];
        self.ftran(&rhs, &mut xb);
        for v in xb.iter_mut() {
            if *v < 0.0 && *v > -1e-9 {
                *v = 0.0;
            }
        }
        self.xb = xb;
        Ok(())
    }
}

/// Maximise `c^T x` s.t. `A x = b`, `x >= 0` with columns from the oracle.
pub fn solve_oracle<O: ColumnOracle>(
    oracle: &O,
    opts: &SimplexOptions,
) -> Result<LpSolution, LpError> {
    let m = oracle.num_rows();
    let n = oracle.num_cols();
    if m == 0 || n == 0 {
        return Err(LpError::Dimension("empty problem".into()));
    }
    let rhs = oracle.rhs().to_vec();
    if rhs.iter().any(|v| !v.is_finite()) {
        return Err(LpError::NotFinite("rhs".into()));
    }

    let cost_scale = oracle.max_abs_cost().max(1.0);
    let rhs_scale = rhs.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let mut basis = Basis::artificial(&rhs, n);
    let mut y = vec![0.0; m];
    let mut cb = vec![0.0; m];
    let mut acol = vec![0.0; m];
    let mut u = vec![0.0; m];
    let mut iterations = 0usize;
    let mut degenerate_run = 0usize;
    let mut total_degenerate = 0usize;
    let mut since_refactor = 0usize;

    // Phase 1 maximises -(sum of artificials); phase 2 the real objective.
    for phase in [1u8, 2u8] {
        let use_costs = phase == 2;
        let tol = if use_costs {
            opts.opt_tol * cost_scale
        } else {
            opts.opt_tol
        };
        loop {
            if iterations >= opts.max_iterations {
                return Err(LpError::IterationLimit {
                    limit: opts.max_iterations,
                    phase,
                    objective: objective_of(&basis, oracle, n),
                });
            }
            for (p, &j) in basis.indices.iter().enumerate() {
                cb[p] = if j < n {
                    if use_costs {
                        oracle.cost(j)
                    } else {
                        0.0
                    }
                } else if use_costs {
                    0.0
                } else {
                    -1.0
                };
            }
            basis.duals(&cb, &mut y);

            let bland = degenerate_run >= opts.bland_after;
            let mut excluded: Vec<usize> = basis
                .indices
                .iter()
                .copied()
                .filter(|&j| j < n)
                .collect();
            excluded.sort_unstable();
            let candidate = oracle.price(&y, use_costs, tol, bland, &excluded);
            let Some((entering, _)) = candidate else {
                break; // phase optimal
            };

            oracle.column(entering, &mut acol);
            basis.ftran(&acol, &mut u);

            // Ratio test. In phase 2 the zero-level artificials still in the
            // basis are pinned at zero: a negative direction through such a
            // row blocks immediately (theta ~ 0), which pivots the
            // artificial out without moving the solution.
            let rtol = 1e-10;
            let mut theta = f64::INFINITY;
            let mut leave: Option<usize> = None;
            for i in 0..m {
                let blocking = if u[i] > rtol {
                    Some(basis.xb[i].max(0.0) / u[i])
                } else if use_costs && u[i] < -rtol && basis.is_artificial(i, n) {
                    Some(0.0f64.max(-basis.xb[i] / u[i]))
                } else {
                    None
                };
                if let Some(r) = blocking {
                    let better = r < theta - 1e-15
                        || ((r - theta).abs() <= 1e-15
                            && leave.is_none_or(|l| basis.indices[i] < basis.indices[l]));
                    if better {
                        theta = r;
                        leave = Some(i);
                    }
                }
            }
            let Some(r) = leave else {
                if phase == 1 {
                    return Err(LpError::Breakdown {
                        iteration: iterations,
                        detail: "phase-1 objective unbounded".into(),
                    });
                }
                let residuals = compute_residuals(oracle, &basis, &y, n);
                let mut ray = vec![(entering, 1.0)];
                for i in 0..m {
                    if u[i].abs() > 1e-12 && basis.indices[i] < n {
                        ray.push((basis.indices[i], -u[i]));
                    }
                }
                return Ok(LpSolution {
                    status: LpStatus::Unbounded,
                    objective: f64::INFINITY,
                    primal: Vec::new(),
                    duals: y,
                    residuals,
                    iterations,
                    farkas: None,
                    ray: Some(ray),
                    alternative_optima: false,
                    degenerate_pivots: total_degenerate,
                });
            };

            if u[r].abs() < 1e-12 {
                return Err(LpError::Breakdown {
                    iteration: iterations,
                    detail: format!("pivot element {:.3e} too small", u[r]),
                });
            }
            basis.pivot(r, &u, entering, theta);
            iterations += 1;
            since_refactor += 1;
            if theta <= 1e-12 * rhs_scale {
                degenerate_run += 1;
                total_degenerate += 1;
            } else {
                degenerate_run = 0;
            }
            if since_refactor >= opts.refactor_every {
                basis.refactor(oracle, n, iterations)?;
                since_refactor = 0;
            }
        }

        if phase == 1 {
            let infeasibility: f64 = (0..m)
                .filter(|&i| basis.is_artificial(i, n))
                .map(|i| basis.xb[i].max(0.0))
                .sum();
            if infeasibility > opts.feas_tol * (1.0 + rhs_scale) {
                // Phase-1 duals certify infeasibility: -y^T A_j <= tol for
                // all j and -y^T b >= infeasibility.
                let farkas: Vec<f64> = y.iter().map(|v| -v).collect();
                return Ok(LpSolution {
                    status: LpStatus::Infeasible,
                    objective: f64::NAN,
                    primal: Vec::new(),
                    duals: y.clone(),
                    residuals: CertificateResiduals::default(),
                    iterations,
                    farkas: Some(farkas),
                    ray: None,
                    alternative_optima: false,
                    degenerate_pivots: total_degenerate,
                });
            }
            degenerate_run = 0;
        }
    }

    // Optimal: refresh the factorisation once more for clean duals/values.
    basis.refactor(oracle, n, iterations)?;
    for (p, &j) in basis.indices.iter().enumerate() {
        cb[p] = if j < n { oracle.cost(j) } else { 0.0 };
    }
    basis.duals(&cb, &mut y);

    let primal: Vec<(usize, f64)> = basis
        .indices
        .iter()
        .zip(&basis.xb)
        .filter(|(&j, _)| j < n)
        .map(|(&j, &v)| (j, v))
        .collect();
    let objective = primal
        .iter()
        .map(|&(j, v)| oracle.cost(j) * v)
        .sum::<f64>();

    let residuals = compute_residuals(oracle, &basis, &y, n);
    let mut excluded: Vec<usize> = basis.indices.iter().copied().filter(|&j| j < n).collect();
    excluded.sort_unstable();
    let near_tol = opts.opt_tol * cost_scale;
    let alternative = oracle
        .price(&y, true, -near_tol, false, &excluded)
        .is_some_and(|(_, d)| d.abs() <= near_tol);

    Ok(LpSolution {
        status: LpStatus::Optimal,
        objective,
        primal,
        duals: y,
        residuals,
        iterations,
        farkas: None,
        ray: None,
        alternative_optima: alternative,
        degenerate_pivots: total_degenerate,
    })
}

fn objective_of<O: ColumnOracle>(basis: &Basis, oracle: &O, n: usize) -> f64 {
    basis
        .indices
        .iter()
        .zip(&basis.xb)
        .filter(|(&j, _)| j < n)
        .map(|(&j, &v)| oracle.cost(j) * v)
        .sum()
}

fn compute_residuals<O: ColumnOracle>(
    oracle: &O,
    basis: &Basis,
    y: &[f64],
    n: usize,
) -> CertificateResiduals {
    let m = oracle.num_rows();
    let mut ax = vec![0.0; m];
    let mut col = vec![0.0; m];
    let mut slack = 0.0;
    let mut objective = 0.0;
    let mut negativity = 0.0f64;
    for (p, &j) in basis.indices.iter().enumerate() {
        let x = basis.xb[p];
        if j < n {
            oracle.column(j, &mut col);
            for i in 0..m {
                ax[i] += col[i] * x;
            }
            let mut d = oracle.cost(j);
            for i in 0..m {
                d -= y[i] * col[i];
            }
            slack += (x * d).abs();
            objective += oracle.cost(j) * x;
        } else {
            ax[j - n] += basis.art_sign[j - n] * x;
        }
        negativity = negativity.max(-x);
    }
    let rhs = oracle.rhs();
    let primal_infeasibility = (0..m)
        .map(|i| (ax[i] - rhs[i]).abs())
        .fold(negativity.max(0.0), f64::max);
    let dual_infeasibility = oracle
        .price(y, true, f64::NEG_INFINITY, false, &[])
        .map_or(0.0, |(_, d)| d.max(0.0));
    let dual_objective: f64 = y.iter().zip(rhs).map(|(a, b)| a * b).sum();
    CertificateResiduals {
        primal_infeasibility,
        dual_infeasibility,
        complementary_slackness: slack,
        duality_gap: (objective - dual_objective).abs(),
    }
}

/// Re-derive the certificate residuals of an `Optimal` solution directly
/// from the oracle data, independent of the solver's internal state.
pub fn verify_certificates<O: ColumnOracle>(oracle: &O, sol: &LpSolution) -> CertificateResiduals {
    let m = oracle.num_rows();
    let mut ax = vec![0.0; m];
    let mut col = vec![0.0; m];
    let mut slack = 0.0;
    let mut objective = 0.0;
    let mut negativity = 0.0f64;
    for &(j, x) in &sol.primal {
        oracle.column(j, &mut col);
        for i in 0..m {
            ax[i] += col[i] * x;
        }
        let mut d = oracle.cost(j);
        for i in 0..m {
            d -= sol.duals[i] * col[i];
        }
        slack += (x * d).abs();
        objective += oracle.cost(j) * x;
        negativity = negativity.max(-x);
    }
    let rhs = oracle.rhs();
    let primal_infeasibility = (0..m)
        .map(|i| (ax[i] - rhs[i]).abs())
        .fold(negativity.max(0.0), f64::max);
    let dual_infeasibility = oracle
        .price(&sol.duals, true, f64::NEG_INFINITY, false, &[])
        .map_or(0.0, |(_, d)| d.max(0.0));
    let dual_objective: f64 = sol.duals.iter().zip(rhs).map(|(a, b)| a * b).sum();
    CertificateResiduals {
        primal_infeasibility,
        dual_infeasibility,
        complementary_slackness: slack,
        duality_gap: (objective - dual_objective).abs(),
    }
}

/// Dense standard-form problem with sense, sign restrictions and row
/// equilibration on top of the raw engine.
#[derive(Debug, Clone)]
pub struct StandardLp {
    pub sense: Sense,
    pub costs: Vec<f64>,
    /// Column-major constraint coefficients.
    pub columns: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
    pub bounds: Vec<VarBound>,
}

impl StandardLp {
    pub fn new(
        sense: Sense,
        costs: Vec<f64>,
        columns: Vec<Vec<f64>>,
        rhs: Vec<f64>,
        bounds: Vec<VarBound>,
    ) -> Result<Self, LpError> {
        if costs.len() != columns.len() || bounds.len() != columns.len() {
            return Err(LpError::Dimension(format!(
                "{} costs, {} columns, {} bounds",
                costs.len(),
                columns.len(),
                bounds.len()
            )));
        }
        for (j, col) in columns.iter().enumerate() {
            if col.len() != rhs.len() {
                return Err(LpError::Dimension(format!(
                    "column {j} has {} rows, rhs has {}",
                    col.len(),
                    rhs.len()
                )));
            }
            if col.iter().any(|v| !v.is_finite()) {
                return Err(LpError::NotFinite(format!("column {j}")));
            }
        }
        if costs.iter().any(|v| !v.is_finite()) || rhs.iter().any(|v| !v.is_finite()) {
            return Err(LpError::NotFinite("costs or rhs".into()));
        }
        Ok(Self {
            sense,
            costs,
            columns,
            rhs,
            bounds,
        })
    }

    /// Solve with row equilibration and free-variable splitting, mapping the
    /// solution back to the original data and recomputing certificates on
    /// the original (unscaled) problem.
    pub fn solve(&self, opts: &SimplexOptions) -> Result<LpSolution, LpError> {
        let m = self.rhs.len();
        // Row equilibration by max-|coefficient|.
        let mut scale = vec![1.0f64; m];
        for i in 0..m {
            let mut mx = 0.0f64;
            for col in &self.columns {
                mx = mx.max(col[i].abs());
            }
            if mx > 0.0 {
                scale[i] = mx;
            }
        }
        // Internal maximisation with split free variables.
        let mut costs = Vec::new();
        let mut columns = Vec::new();
        let mut origin = Vec::new(); // (original index, sign)
        let sense_sign = match self.sense {
            Sense::Maximize => 1.0,
            Sense::Minimize => -1.0,
        };
        for (j, col) in self.columns.iter().enumerate() {
            let scaled: Vec<f64> = col.iter().zip(&scale).map(|(v, s)| v / s).collect();
            costs.push(sense_sign * self.costs[j]);
            columns.push(scaled.clone());
            origin.push((j, 1.0));
            if self.bounds[j] == VarBound::Free {
                costs.push(-sense_sign * self.costs[j]);
                columns.push(scaled.iter().map(|v| -v).collect());
                origin.push((j, -1.0));
            }
        }
        let rhs: Vec<f64> = self.rhs.iter().zip(&scale).map(|(v, s)| v / s).collect();
        let oracle = DenseOracle {
            costs,
            columns,
            rhs,
        };
        let mut sol = solve_oracle(&oracle, opts)?;

        // Map back: merge split columns, unscale duals, restore sense.
        let mut merged: Vec<(usize, f64)> = Vec::new();
        for &(jint, v) in &sol.primal {
            let (jorig, sign) = origin[jint];
            match merged.iter_mut().find(|(j, _)| *j == jorig) {
                Some((_, acc)) => *acc += sign * v,
                None => merged.push((jorig, sign * v)),
            }
        }
        sol.primal = merged;
        if let Some(ray) = sol.ray.take() {
            let mut merged_ray: Vec<(usize, f64)> = Vec::new();
            for &(jint, v) in &ray {
                let (jorig, sign) = origin[jint];
                match merged_ray.iter_mut().find(|(j, _)| *j == jorig) {
                    Some((_, acc)) => *acc += sign * v,
                    None => merged_ray.push((jorig, sign * v)),
                }
            }
            sol.ray = Some(merged_ray);
        }
        for (yi, s) in sol.duals.iter_mut().zip(&scale) {
            *yi = sense_sign * *yi / s;
        }
        if let Some(f) = sol.farkas.as_mut() {
            for (fi, s) in f.iter_mut().zip(&scale) {
                *fi /= s;
            }
        }
        if sol.status == LpStatus::Optimal {
            sol.objective *= sense_sign;
            sol.residuals = self.verify(&sol);
        } else if sol.status == LpStatus::Unbounded {
            sol.objective = match self.sense {
                Sense::Maximize => f64::INFINITY,
                Sense::Minimize => f64::NEG_INFINITY,
            };
        }
        Ok(sol)
    }

    /// Plain-text row/column listing for debugging small instances.
    pub fn debug_dump(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        writeln!(
            out,
            "{:?} LP: {} rows, {} columns",
            self.sense,
            self.rhs.len(),
            self.columns.len()
        )
        .unwrap();
        for (j, col) in self.columns.iter().enumerate() {
            writeln!(
                out,
                "col {j} [{:?}] cost {:+.6e}: {}",
                self.bounds[j],
                self.costs[j],
                col.iter()
                    .map(|v| format!("{v:+.6e}"))
                    .collect::<Vec<_>>()
                    .join(" ")
            )
            .unwrap();
        }
        writeln!(
            out,
            "rhs: {}",
            self.rhs
                .iter()
                .map(|v| format!("{v:+.6e}"))
                .collect::<Vec<_>>()
                .join(" ")
        )
        .unwrap();
        out
    }

    /// Independent certificate check on the original data: recomputes
    /// `A x - b`, the reduced costs and the pairing `x_j * reduced_cost_j`.
    pub fn verify(&self, sol: &LpSolution) -> CertificateResiduals {
        let m = self.rhs.len();
        let mut ax = vec![0.0; m];
        let mut slack = 0.0;
        let mut objective = 0.0;
        let mut negativity = 0.0f64;
        for &(j, x) in &sol.primal {
            for i in 0..m {
                ax[i] += self.columns[j][i] * x;
            }
            objective += self.costs[j] * x;
            if self.bounds[j] == VarBound::NonNegative {
                negativity = negativity.max(-x);
            }
        }
        let mut dual_infeasibility = 0.0f64;
        for (j, col) in self.columns.iter().enumerate() {
            let mut d = self.costs[j];
            for i in 0..m {
                d -= sol.duals[i] * col[i];
            }
            // Improving direction: positive reduced cost when maximising,
            // negative when minimising (free variables: any nonzero).
            let viol = match (self.sense, self.bounds[j]) {
                (_, VarBound::Free) => d.abs(),
                (Sense::Maximize, _) => d.max(0.0),
                (Sense::Minimize, _) => (-d).max(0.0),
            };
            dual_infeasibility = dual_infeasibility.max(viol);
            slack += (sol.value_of(j) * d).abs();
        }
        let primal_infeasibility = (0..m)
            .map(|i| (ax[i] - self.rhs[i]).abs())
            .fold(negativity.max(0.0), f64::max);
        let dual_objective: f64 = sol.duals.iter().zip(&self.rhs).map(|(a, b)| a * b).sum();
        CertificateResiduals {
            primal_infeasibility,
            dual_infeasibility,
            complementary_slackness: slack,
            duality_gap: (objective - dual_objective).abs(),
        }
    }
}

/// Brute-force reference for small problems: enumerate all basis subsets,
/// solve each square system, keep the best feasible vertex. Completely
/// independent of the simplex path.
pub fn brute_force_vertex_optimum(lp: &StandardLp, feas_tol: f64) -> Option<(f64, Vec<f64>)> {
    let m = lp.rhs.len();
    let n = lp.columns.len();
    if n < m {
        return None;
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut subset: Vec<usize> = (0..m).collect();
    loop {
        // Solve B x_B = b for this subset.
        let mut bmat = DMatrix::<f64>::zeros(m, m);
        for (p, &j) in subset.iter().enumerate() {
            for i in 0..m {
                bmat[(i, p)] = lp.columns[j][i];
            }
        }
        let bvec = nalgebra::DVector::from_column_slice(&lp.rhs);
        if let Some(x) = bmat.lu().solve(&bvec) {
            let feasible = subset
                .iter()
                .enumerate()
                .all(|(p, &j)| lp.bounds[j] == VarBound::Free || x[p] >= -feas_tol);
            // Guard against near-singular solves.
            let mut residual = 0.0f64;
            for i in 0..m {
                let mut acc = 0.0;
                for (p, &j) in subset.iter().enumerate() {
                    acc += lp.columns[j][i] * x[p];
                }
                residual = residual.max((acc - lp.rhs[i]).abs());
            }
            if feasible && residual <= 1e-7 {
                let value: f64 = subset
                    .iter()
                    .enumerate()
                    .map(|(p, &j)| lp.costs[j] * x[p])
                    .sum();
                let better = match (&best, lp.sense) {
                    (None, _) => true,
                    (Some((bv, _)), Sense::Maximize) => value > *bv,
                    (Some((bv, _)), Sense::Minimize) => value < *bv,
                };
                if better {
                    let mut full = vec![0.0; n];
                    for (p, &j) in subset.iter().enumerate() {
                        full[j] = x[p];
                    }
                    best = Some((value, full));
                }
            }
        }
        // Next lexicographic m-subset of {0..n}.
        let mut i = m;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if subset[i] != i + n - m {
                subset[i] += 1;
                for k in i + 1..m {
                    subset[k] = subset[k - 1] + 1;
                }
                break;
            }
        }
    }
}
