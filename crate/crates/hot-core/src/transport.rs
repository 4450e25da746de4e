//! Harmonic-constrained optimal transport between token sequences.
//!
//! The cost of matching token `i` of one sequence to token `j` of another is
//! `(1 - cos(z_i, z~_j)) + lambda_h * |r_i - r~_j|`: cosine dissimilarity of
//! the tokens plus a weighted gap between their harmonic ratios. The entropic
//! transport problem over these costs is solved with the log-domain Sinkhorn
//! iteration, parametrized as `P_ij = a_i * b_j * exp((u_i + v_j - C_ij) /
//! epsilon)`. Every log-sum-exp subtracts its running maximum, which keeps the
//! iteration finite for small `epsilon` where the kernel `exp(-C/epsilon)`
//! underflows to zero.
//!
//! Each iteration updates the column potential `v` first and the row
//! potential `u` second, so the returned plan satisfies the row marginals to
//! machine precision and all remaining infeasibility shows up in the column
//! marginals — the reported column-marginal l1 error is therefore an honest
//! convergence residual, not an artifact of update order.
//!
//! For small instances an exhaustive permutation search provides the exact
//! linear-program optimum (with uniform marginals an optimal plan sits on a
//! permutation), used by tests to sandwich the entropic solution.

use crate::parallel;

#[derive(Debug, thiserror::Error)]
pub enum TransportError {
    #[error("token dimensions differ: {left} vs {right}")]
    DimMismatch { left: usize, right: usize },
    #[error("{side} sequence has {tokens} tokens but {ratios} ratios")]
    RatioLength {
        side: &'static str,
        tokens: usize,
        ratios: usize,
    },
    #[error("{side} token {index} has zero norm; cosine undefined")]
    ZeroNormToken { side: &'static str, index: usize },
    #[error("{side} ratio {index} is not finite")]
    NonFiniteRatio { side: &'static str, index: usize },
    #[error("lambda_h {lambda_h} must be finite and >= 0")]
    BadLambda { lambda_h: f64 },
    #[error("epsilon {epsilon} must be finite and > 0")]
    BadEpsilon { epsilon: f64 },
    #[error("iteration count must be >= 1")]
    ZeroIterations,
    #[error("tolerance {tol} must be finite and >= 0")]
    BadTolerance { tol: f64 },
    #[error("marginal has {found} entries, cost side has {expected}")]
    MarginalLength { expected: usize, found: usize },
    #[error("marginal entry {index} = {value} must be > 0")]
    NonPositiveMarginal { index: usize, value: f64 },
    #[error("marginal sums to {sum}, expected 1 within 1e-9")]
    MarginalSum { sum: f64 },
    #[error("shapes differ: {left_rows}x{left_cols} vs {right_rows}x{right_cols}")]
    ShapeMismatch {
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },
    #[error("cost must be square for the permutation oracle, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("permutation oracle limited to n <= 8, got {n}")]
    OracleTooLarge { n: usize },
    #[error("cost entry ({row},{col}) is not finite")]
    NonFiniteCost { row: usize, col: usize },
}

/// Pairwise matching costs, row-major `rows x cols`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    lambda_h: f64,
    values: Vec<f64>,
}

impl CostMatrix {
    /// Wraps raw nonneg-ish cost values (finiteness enforced); used by tests
    /// and the permutation oracle on synthetic costs.
    pub fn from_values(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self, TransportError> {
        assert_eq!(
            values.len(),
            rows * cols,
            "cost value count must equal rows*cols"
        );
        for (flat, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(TransportError::NonFiniteCost {
                    row: flat / cols,
                    col: flat % cols,
                });
            }
        }
        Ok(Self {
            rows,
            cols,
            lambda_h: 0.0,
            values,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn lambda_h(&self) -> f64 {
        self.lambda_h
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

fn unit_rows(
    tokens: &crate::harmonic::TokenSequence,
    side: &'static str,
) -> Result<Vec<f64>, TransportError> {
    let dim = tokens.dim();
    let mut rows = Vec::with_capacity(tokens.t_prime() * dim);
    for t0 in 0..tokens.t_prime() {
        let token = tokens.token(t0);
        let norm = token.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(TransportError::ZeroNormToken { side, index: t0 });
        }
        rows.extend(token.iter().map(|v| v / norm));
    }
    Ok(rows)
}

fn check_ratios(side: &'static str, tokens: usize, ratios: &[f64]) -> Result<(), TransportError> {
    if ratios.len() != tokens {
        return Err(TransportError::RatioLength {
            side,
            tokens,
            ratios: ratios.len(),
        });
    }
    if let Some(index) = ratios.iter().position(|r| !r.is_finite()) {
        return Err(TransportError::NonFiniteRatio { side, index });
    }
    Ok(())
}

/// Builds `C_ij = (1 - cos(z_i, z~_j)) + lambda_h * |r_i - r~_j|`.
///
/// The cosine term is clamped at zero from below: for identical tokens the
/// dot product of a unit vector with itself can exceed 1 by one ulp, and a
/// negative cost would violate the matrix invariant.
pub fn cost_matrix(
    left: &crate::harmonic::TokenSequence,
    right: &crate::harmonic::TokenSequence,
    left_ratios: &[f64],
    right_ratios: &[f64],
    lambda_h: f64,
) -> Result<CostMatrix, TransportError> {
    if left.dim() != right.dim() {
        return Err(TransportError::DimMismatch {
            left: left.dim(),
            right: right.dim(),
        });
    }
    if !(lambda_h.is_finite() && lambda_h >= 0.0) {
        return Err(TransportError::BadLambda { lambda_h });
    }
    check_ratios("left", left.t_prime(), left_ratios)?;
    check_ratios("right", right.t_prime(), right_ratios)?;
    let dim = left.dim();
    let lu = unit_rows(left, "left")?;
    let ru = unit_rows(right, "right")?;
    let rows = left.t_prime();
    let cols = right.t_prime();
    let mut values = vec![0.0; rows * cols];
    let chunks = parallel::map_indexed(rows, |i| {
        let zi = &lu[i * dim..(i + 1) * dim];
        let mut row = Vec::with_capacity(cols);
        for j in 0..cols {
            let zj = &ru[j * dim..(j + 1) * dim];
            let cos: f64 = zi.iter().zip(zj).map(|(x, y)| x * y).sum();
            let cost = (1.0 - cos).max(0.0) + lambda_h * (left_ratios[i] - right_ratios[j]).abs();
            row.push(cost);
        }
        row
    });
    for (i, row) in chunks.into_iter().enumerate() {
        values[i * cols..(i + 1) * cols].copy_from_slice(&row);
    }
    Ok(CostMatrix {
        rows,
        cols,
        lambda_h,
        values,
    })
}

/// A transport plan with its marginals' target vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl TransportPlan {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows)
            .map(|i| self.values[i * self.cols..(i + 1) * self.cols].iter().sum())
            .collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.cols];
        for i in 0..self.rows {
            for (j, sum) in sums.iter_mut().enumerate() {
                *sum += self.values[i * self.cols + j];
            }
        }
        sums
    }
}

/// Solver knobs. `tol = 0` disables early stopping and runs all `iters`
/// iterations.
#[derive(Debug, Clone, PartialEq)]
pub struct SinkhornConfig {
    pub epsilon: f64,
    pub iters: usize,
    pub tol: f64,
}

impl Default for SinkhornConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.05,
            iters: 40,
            tol: 0.0,
        }
    }
}

/// Solver result: the plan, the column-marginal l1 residual of that plan,
/// and how many iterations actually ran.
#[derive(Debug, Clone)]
pub struct SinkhornOutput {
    pub plan: TransportPlan,
    pub col_marginal_l1: f64,
    pub iters_run: usize,
}

/// The uniform probability vector of length `n`.
pub fn uniform_marginals(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

fn check_marginal(m: &[f64], expected: usize) -> Result<(), TransportError> {
    if m.len() != expected {
        return Err(TransportError::MarginalLength {
            expected,
            found: m.len(),
        });
    }
    for (index, &value) in m.iter().enumerate() {
        if !(value.is_finite() && value > 0.0) {
            return Err(TransportError::NonPositiveMarginal { index, value });
        }
    }
    let sum: f64 = m.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(TransportError::MarginalSum { sum });
    }
    Ok(())
}

/// Log-domain Sinkhorn with max-stabilized log-sum-exp.
pub fn sinkhorn_log(
    cost: &CostMatrix,
    a: &[f64],
    b: &[f64],
    config: &SinkhornConfig,
) -> Result<SinkhornOutput, TransportError> {
    if !(config.epsilon.is_finite() && config.epsilon > 0.0) {
        return Err(TransportError::BadEpsilon {
            epsilon: config.epsilon,
        });
    }
    if config.iters == 0 {
        return Err(TransportError::ZeroIterations);
    }
    if !(config.tol.is_finite() && config.tol >= 0.0) {
        return Err(TransportError::BadTolerance { tol: config.tol });
    }
    check_marginal(a, cost.rows)?;
    check_marginal(b, cost.cols)?;

    let n = cost.rows;
    let m = cost.cols;
    let eps = config.epsilon;
    let log_a: Vec<f64> = a.iter().map(|x| x.ln()).collect();
    let log_b: Vec<f64> = b.iter().map(|x| x.ln()).collect();
    // Pre-divide the cost by epsilon once; the updates only ever see C/eps.
    let scaled: Vec<f64> = cost.values.iter().map(|c| c / eps).collect();
    let mut u = vec![0.0; n];
    let mut v = vec![0.0; m];
    let mut iters_run = 0;

    let build_plan = |u: &[f64], v: &[f64]| -> Vec<f64> {
        let mut plan = vec![0.0; n * m];
        for i in 0..n {
            for j in 0..m {
                plan[i * m + j] = a[i] * b[j] * ((u[i] + v[j]) / eps - scaled[i * m + j]).exp();
            }
        }
        plan
    };
    let col_error = |plan: &[f64]| -> f64 {
        let mut err = 0.0;
        for j in 0..m {
            let mut sum = 0.0;
            for i in 0..n {
                sum += plan[i * m + j];
            }
            err += (sum - b[j]).abs();
        }
        err
    };

    for iter in 1..=config.iters {
        // Column potentials from the current rows...
        for j in 0..m {
            let mut hi = f64::NEG_INFINITY;
            for i in 0..n {
                let q = log_a[i] + u[i] / eps - scaled[i * m + j];
                if q > hi {
                    hi = q;
                }
            }
            let mut sum = 0.0;
            for i in 0..n {
                sum += (log_a[i] + u[i] / eps - scaled[i * m + j] - hi).exp();
            }
            v[j] = -eps * (hi + sum.ln());
        }
        // ...then row potentials, leaving the row marginals exact.
        for i in 0..n {
            let mut hi = f64::NEG_INFINITY;
            for j in 0..m {
                let q = log_b[j] + v[j] / eps - scaled[i * m + j];
                if q > hi {
                    hi = q;
                }
            }
            let mut sum = 0.0;
            for j in 0..m {
                sum += (log_b[j] + v[j] / eps - scaled[i * m + j] - hi).exp();
            }
            u[i] = -eps * (hi + sum.ln());
        }
        iters_run = iter;
        if config.tol > 0.0 && col_error(&build_plan(&u, &v)) <= config.tol {
            break;
        }
    }

    let values = build_plan(&u, &v);
    let col_marginal_l1 = col_error(&values);
    Ok(SinkhornOutput {
        plan: TransportPlan {
            rows: n,
            cols: m,
            values,
        },
        col_marginal_l1,
        iters_run,
    })
}

/// Frobenius inner product `sum P_ij * C_ij`.
pub fn hot_loss(plan: &TransportPlan, cost: &CostMatrix) -> Result<f64, TransportError> {
    if plan.rows != cost.rows || plan.cols != cost.cols {
        return Err(TransportError::ShapeMismatch {
            left_rows: plan.rows,
            left_cols: plan.cols,
            right_rows: cost.rows,
            right_cols: cost.cols,
        });
    }
    Ok(plan
        .values
        .iter()
        .zip(&cost.values)
        .map(|(p, c)| p * c)
        .sum())
}

/// Exact minimum of `(1/n) * sum_i C[i, sigma(i)]` over all permutations,
/// with the lexicographically smallest minimizer on ties. Exhaustive, so the
/// instance is capped at `n <= 8`.
pub fn exact_ot_uniform(cost: &CostMatrix) -> Result<(f64, Vec<usize>), TransportError> {
    if cost.rows != cost.cols {
        return Err(TransportError::NotSquare {
            rows: cost.rows,
            cols: cost.cols,
        });
    }
    let n = cost.rows;
    if n > 8 {
        return Err(TransportError::OracleTooLarge { n });
    }
    let mut best_sum = f64::INFINITY;
    let mut best: Vec<usize> = Vec::new();
    let mut current = Vec::with_capacity(n);
    let mut used = vec![false; n];
    // Depth-first in increasing column order: the first minimum found is the
    // lexicographically smallest, and only strict improvements replace it.
    fn visit(
        cost: &CostMatrix,
        used: &mut [bool],
        current: &mut Vec<usize>,
        best_sum: &mut f64,
        best: &mut Vec<usize>,
        partial: f64,
    ) {
        let i = current.len();
        if i == cost.rows() {
            if partial < *best_sum {
                *best_sum = partial;
                *best = current.clone();
            }
            return;
        }
        for j in 0..cost.cols() {
            if !used[j] {
                used[j] = true;
                current.push(j);
                visit(
                    cost,
                    used,
                    current,
                    best_sum,
                    best,
                    partial + cost.get(i, j),
                );
                current.pop();
                used[j] = false;
            }
        }
    }
    visit(cost, &mut used, &mut current, &mut best_sum, &mut best, 0.0);
    Ok((best_sum / n as f64, best))
}
