//! Cyclic coordinate-descent lasso on standardized designs.
//!
//! Minimizes `(1/2n)‖y − Xβ‖² + λ‖β‖₁` without an intercept. The solver
//! works on the Gram form (`XᵀX/n`, `Xᵀy/n`) so the neighborhood-selection
//! stage can share one Gram matrix across all `p` regressions.

use nalgebra::DMatrix;
use thiserror::Error;

pub const DEFAULT_TOL: f64 = 1e-7;
pub const DEFAULT_MAX_ITER: usize = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub struct LassoFit {
    pub coefficients: Vec<f64>,
    pub lambda: f64,
    /// Number of full coordinate sweeps performed.
    pub iterations: usize,
    pub converged: bool,
}

impl LassoFit {
    pub fn support(&self) -> Vec<usize> {
        self.coefficients.iter().enumerate().filter(|(_, b)| **b != 0.0).map(|(k, _)| k).collect()
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LassoError {
    #[error("coordinate descent did not converge after {} sweeps", .fit.iterations)]
    NotConverged { fit: Box<LassoFit> },
    #[error("lambda must be finite and nonnegative, got {0}")]
    InvalidLambda(f64),
    #[error("design has {rows} rows but response has {len}")]
    Shape { rows: usize, len: usize },
    #[error("{0}")]
    InvalidArgument(String),
}

#[inline]
pub fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// Smallest λ for which the all-zero vector is optimal: `max_k |⟨x_k, y⟩| / n`.
pub fn lambda_max(x: &DMatrix<f64>, y: &[f64]) -> f64 {
    let n = y.len() as f64;
    x.column_iter()
        .map(|c| c.iter().zip(y).map(|(a, b)| a * b).sum::<f64>().abs() / n)
        .fold(0.0, f64::max)
}

/// Gram-form problem: `gram = XᵀX/n` (accessed through a closure so callers
/// can view a submatrix without copying) and `xty = Xᵀy/n`.
pub(crate) struct GramProblem<'a, G: Fn(usize, usize) -> f64> {
    pub gram: G,
    pub xty: &'a [f64],
}

/// Sweeps between attempts to solve the KKT system on the current support.
const POLISH_EVERY: usize = 200;

impl<G: Fn(usize, usize) -> f64> GramProblem<'_, G> {
    /// Runs sweeps until the largest coefficient change drops below `tol`.
    /// `on_sweep` sees the coefficients after every full sweep.
    ///
    /// Near-collinear designs make cyclic descent crawl. Every
    /// `POLISH_EVERY` sweeps the stationarity equations are solved exactly
    /// on the current support with the current signs; the result replaces
    /// the iterate only if the signs survive and the objective does not rise.
    pub fn solve(
        &self,
        lambda: f64,
        tol: f64,
        max_iter: usize,
        mut on_sweep: impl FnMut(&[f64]),
    ) -> LassoFit {
        let m = self.xty.len();
        let mut beta = vec![0.0; m];
        // grad[k] = xty[k] − Σ_l gram(k, l) β_l
        let mut grad = self.xty.to_vec();
        let diag: Vec<f64> = (0..m).map(|k| (self.gram)(k, k)).collect();
        let mut iterations = 0;
        let mut converged = m == 0;
        while !converged && iterations < max_iter {
            iterations += 1;
            let mut max_delta = 0.0f64;
            for k in 0..m {
                if diag[k] <= 0.0 {
                    continue;
                }
                let old = beta[k];
                let z = grad[k] + diag[k] * old;
                let new = soft_threshold(z, lambda) / diag[k];
                if new != old {
                    let delta = new - old;
                    beta[k] = new;
                    for (l, g) in grad.iter_mut().enumerate() {
                        *g -= (self.gram)(l, k) * delta;
                    }
                    max_delta = max_delta.max(delta.abs());
                }
            }
            converged = max_delta < tol;
            if !converged && iterations % POLISH_EVERY == 0 {
                self.polish(lambda, &mut beta, &mut grad);
            }
            on_sweep(&beta);
        }
        LassoFit { coefficients: beta, lambda, iterations, converged }
    }

    /// `½βᵀGβ − cᵀβ + λ‖β‖₁`, using `Gβ = c − grad`.
    fn gram_objective(&self, lambda: f64, beta: &[f64], grad: &[f64]) -> f64 {
        let quad: f64 = beta.iter().zip(self.xty).zip(grad).map(|((b, c), g)| b * (c + g)).sum();
        -0.5 * quad + lambda * beta.iter().map(|b| b.abs()).sum::<f64>()
    }

    fn polish(&self, lambda: f64, beta: &mut [f64], grad: &mut [f64]) {
        let signs: Vec<f64> = beta.iter().map(|b| b.signum()).collect();
        let mut cand = beta.to_vec();
        let mut active: Vec<usize> = (0..beta.len()).filter(|&k| beta[k] != 0.0).collect();
        // Each pass solves on the support with fixed signs. With the signs
        // held, the objective along the segment towards that solution is a
        // convex quadratic minimized at its end, so stopping at the first
        // sign change and dropping that coordinate never increases it.
        while !active.is_empty() {
            let a = active.len();
            let g_aa = DMatrix::from_fn(a, a, |r, c| (self.gram)(active[r], active[c]));
            let rhs = nalgebra::DVector::from_fn(a, |r, _| self.xty[active[r]] - lambda * signs[active[r]]);
            let Some(chol) = g_aa.cholesky() else { return };
            let sol = chol.solve(&rhs);
            if sol.iter().any(|v| !v.is_finite()) {
                return;
            }
            let mut t = 1.0f64;
            let mut blocking = None;
            for (r, &k) in active.iter().enumerate() {
                let v = sol[r];
                if v.signum() != signs[k] || v == 0.0 {
                    let tk = cand[k] / (cand[k] - v);
                    if tk < t {
                        t = tk;
                        blocking = Some(k);
                    }
                }
            }
            for (r, &k) in active.iter().enumerate() {
                cand[k] += t * (sol[r] - cand[k]);
            }
            match blocking {
                None => break,
                Some(k) => {
                    cand[k] = 0.0;
                    active.retain(|&l| l != k);
                }
            }
        }
        let cand_grad: Vec<f64> =
            (0..beta.len()).map(|l| self.xty[l] - active.iter().map(|&k| (self.gram)(l, k) * cand[k]).sum::<f64>()).collect();
        if self.gram_objective(lambda, &cand, &cand_grad) <= self.gram_objective(lambda, beta, grad) {
            beta.copy_from_slice(&cand);
            grad.copy_from_slice(&cand_grad);
        }
    }
}

/// Lasso by cyclic coordinate descent over coordinates `0..p−1`.
///
/// Returns `NotConverged` (carrying the partial fit) if `max_iter` sweeps
/// elapse before the largest per-sweep coefficient change falls below `tol`.
pub fn lasso_cd(x: &DMatrix<f64>, y: &[f64], lambda: f64, tol: f64, max_iter: usize) -> Result<LassoFit, LassoError> {
    lasso_cd_traced(x, y, lambda, tol, max_iter, |_| {})
}

/// As [`lasso_cd`], reporting the objective value after every sweep.
pub fn lasso_cd_traced(
    x: &DMatrix<f64>,
    y: &[f64],
    lambda: f64,
    tol: f64,
    max_iter: usize,
    mut on_objective: impl FnMut(f64),
) -> Result<LassoFit, LassoError> {
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(LassoError::InvalidLambda(lambda));
    }
    if x.nrows() != y.len() {
        return Err(LassoError::Shape { rows: x.nrows(), len: y.len() });
    }
    let n = y.len() as f64;
    let gram = x.tr_mul(x) / n;
    let xty: Vec<f64> = x.column_iter().map(|c| c.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() / n).collect();
    let problem = GramProblem { gram: |k, l| gram[(k, l)], xty: &xty };
    let fit = problem.solve(lambda, tol, max_iter, |beta| on_objective(objective(x, y, beta, lambda)));
    if fit.converged {
        Ok(fit)
    } else {
        Err(LassoError::NotConverged { fit: Box::new(fit) })
    }
}

/// `(1/2n)‖y − Xβ‖² + λ‖β‖₁`, evaluated from a freshly computed residual.
///
/// Accumulation is carried in double-double arithmetic, so the result is
/// within a rounding of the exact value for the given `β`. Traces of the
/// objective across sweeps are therefore monotone whenever the exact
/// values are.
pub fn objective(x: &DMatrix<f64>, y: &[f64], beta: &[f64], lambda: f64) -> f64 {
    let n = y.len();
    let mut rss = Dd::ZERO;
    for i in 0..n {
        let mut r = Dd::from(y[i]);
        for (k, &b) in beta.iter().enumerate() {
            r = r.sub(Dd::product(x[(i, k)], b));
        }
        rss = rss.add(r.square());
    }
    let mut l1 = Dd::ZERO;
    for &b in beta {
        l1 = l1.add(Dd::from(b.abs()));
    }
    rss.scale(1.0 / (2.0 * n as f64)).add(l1.scale(lambda)).value()
}

/// Unevaluated sum `hi + lo` with `|lo| ≤ ulp(hi)/2`.
#[derive(Debug, Clone, Copy)]
struct Dd {
    hi: f64,
    lo: f64,
}

impl Dd {
    const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    fn two_sum(a: f64, b: f64) -> Dd {
        let s = a + b;
        let bb = s - a;
        Dd { hi: s, lo: (a - (s - bb)) + (b - bb) }
    }

    fn product(a: f64, b: f64) -> Dd {
        let p = a * b;
        Dd { hi: p, lo: a.mul_add(b, -p) }
    }

    fn add(self, o: Dd) -> Dd {
        let s = Self::two_sum(self.hi, o.hi);
        let t = Self::two_sum(self.lo, o.lo);
        let r = Self::two_sum(s.hi, s.lo + t.hi);
        Self::two_sum(r.hi, r.lo + t.lo)
    }

    fn sub(self, o: Dd) -> Dd {
        self.add(Dd { hi: -o.hi, lo: -o.lo })
    }

    fn mul(self, o: Dd) -> Dd {
        let p = Self::product(self.hi, o.hi);
        Self::two_sum(p.hi, p.lo + (self.hi * o.lo + self.lo * o.hi))
    }

    fn square(self) -> Dd {
        self.mul(self)
    }

    fn scale(self, c: f64) -> Dd {
        self.mul(Dd::from(c))
    }

    fn value(self) -> f64 {
        self.hi + self.lo
    }
}

impl From<f64> for Dd {
    fn from(v: f64) -> Self {
        Dd { hi: v, lo: 0.0 }
    }
}
