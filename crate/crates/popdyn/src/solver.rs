//! Numerical solution of the level-crossing equations.
//!
//! The stationary density balances the downward drift flux against the
//! upward jump flux across each level:
//!
//! `gamma·y·f(y) = ∫_0^y [lambda(x)·F̄_V(y-x|x) + mu·F̄_W(y-x)]·f(x) dx`
//!
//! solved directly on a log-spaced grid: with trapezoid quadrature the
//! balance is a lower-triangular (Volterra) system and forward
//! substitution produces the density in one pass. The transient
//! counterpart evolves the CDF with upwind differencing of the
//! advection term. The integral runs over `x < y` (upward level
//! crossings) and the intensity inside it is the state intensity
//! `lambda(x)`.

use crate::model::{
    conditional_jump_mean, posting_intensity, InfluencerParams, SystemParams,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum SolverError {
    #[error("kernel requires 0 <= x <= y (got x={x}, y={y})")]
    KernelDomain { x: f64, y: f64 },
    #[error("fixed point did not converge in {max_iter} iterations (last delta {delta:.3e}, tol {tol:.3e})")]
    NoConvergence {
        max_iter: usize,
        delta: f64,
        tol: f64,
    },
    #[error("time step {dt} exceeds advection stability bound {bound}")]
    TimeStepTooLarge { dt: f64, bound: f64 },
    #[error("transient evolution unstable at t={t}: monotonicity violated by {violation:.3e}")]
    Unstable { t: f64, violation: f64 },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
}

/// Strictly increasing popularity grid, `y_min > 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    nodes: Vec<f64>,
}

impl Grid {
    pub fn log_spaced(y_min: f64, y_max: f64, n: usize) -> Result<Self, SolverError> {
        if !(y_min > 0.0 && y_max > y_min) {
            return Err(SolverError::InvalidGrid(format!(
                "need 0 < y_min < y_max (got {y_min}, {y_max})"
            )));
        }
        if n < 64 {
            return Err(SolverError::InvalidGrid(format!("need n >= 64 (got {n})")));
        }
        let step = (y_max / y_min).ln() / (n - 1) as f64;
        Ok(Self {
            nodes: (0..n).map(|k| y_min * (step * k as f64).exp()).collect(),
        })
    }

    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self, SolverError> {
        if nodes.len() < 64 {
            return Err(SolverError::InvalidGrid("need at least 64 nodes".into()));
        }
        if nodes[0] <= 0.0 || nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(SolverError::InvalidGrid(
                "nodes must be positive and strictly increasing".into(),
            ));
        }
        Ok(Self { nodes })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Largest stable explicit time step for the advection term.
    pub fn advection_dt_bound(&self, gamma: f64) -> f64 {
        self.nodes
            .windows(2)
            .map(|w| (w[1] - w[0]) / (gamma * w[1]))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Discretized probability density on a [`Grid`], log-linear between
/// nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityOnGrid {
    pub grid: Grid,
    pub f: Vec<f64>,
}

impl DensityOnGrid {
    /// Trapezoidal integral of the density.
    pub fn mass(&self) -> f64 {
        trapz(self.grid.nodes(), &self.f)
    }

    /// Rescale so the trapezoidal integral equals 1.
    pub fn normalize(&mut self) {
        let m = self.mass();
        if m > 0.0 {
            for v in &mut self.f {
                *v /= m;
            }
        }
    }

    /// CDF at the grid nodes via cumulative trapezoid, clamped to [0, 1].
    pub fn cdf(&self) -> Vec<f64> {
        let y = self.grid.nodes();
        let mut out = Vec::with_capacity(y.len());
        let mut acc = 0.0;
        out.push(0.0);
        for k in 1..y.len() {
            acc += 0.5 * (self.f[k - 1] + self.f[k]) * (y[k] - y[k - 1]);
            out.push(acc.min(1.0));
        }
        out
    }
}

/// Trapezoidal mean and variance of a density on its grid.
pub fn distribution_moments(d: &DensityOnGrid) -> (f64, f64) {
    let y = d.grid.nodes();
    let m1: Vec<f64> = y.iter().zip(&d.f).map(|(y, f)| y * f).collect();
    let m2: Vec<f64> = y.iter().zip(&d.f).map(|(y, f)| y * y * f).collect();
    let mean = trapz(y, &m1);
    let var = (trapz(y, &m2) - mean * mean).max(0.0);
    (mean, var)
}

fn trapz(x: &[f64], f: &[f64]) -> f64 {
    x.windows(2)
        .zip(f.windows(2))
        .map(|(xw, fw)| 0.5 * (fw[0] + fw[1]) * (xw[1] - xw[0]))
        .sum()
}

/// Upward-crossing kernel `lambda(x)·F̄_V(y-x|x) + mu·F̄_W(y-x)` where
/// `F̄_V(w|x) = F̄_V̂(w/(eps + beta·x^theta))`.
pub fn kernel_ccdf(
    y: f64,
    x: f64,
    sys: &SystemParams,
    inf: &InfluencerParams,
) -> Result<f64, SolverError> {
    if !(0.0 <= x && x <= y) {
        return Err(SolverError::KernelDomain { x, y });
    }
    Ok(kernel_ccdf_unchecked(y, x, sys, inf))
}

fn kernel_ccdf_unchecked(y: f64, x: f64, sys: &SystemParams, inf: &InfluencerParams) -> f64 {
    let w = y - x;
    let scale = conditional_jump_mean(x, sys, inf);
    posting_intensity(x, inf) * inf.v_dist().ccdf(w / scale)
        + if sys.mu > 0.0 { sys.mu * sys.w_dist.ccdf(w) } else { 0.0 }
}

/// Combined-kernel reading `(lambda(x) + mu)·F̄_Z(y-x|x)` with
/// `F̄_Z = p_I·F̄_V + p_E·F̄_W`. Algebraically identical to
/// [`kernel_ccdf`] since `p_E(x) = mu/(lambda(x)+mu)`.
pub fn kernel_ccdf_combined(
    y: f64,
    x: f64,
    sys: &SystemParams,
    inf: &InfluencerParams,
) -> Result<f64, SolverError> {
    if !(0.0 <= x && x <= y) {
        return Err(SolverError::KernelDomain { x, y });
    }
    let total = posting_intensity(x, inf) + sys.mu;
    if total == 0.0 {
        return Ok(0.0);
    }
    let p_e = sys.mu / total;
    let w = y - x;
    let scale = conditional_jump_mean(x, sys, inf);
    let fz_bar = (1.0 - p_e) * inf.v_dist().ccdf(w / scale) + p_e * sys.w_dist.ccdf(w);
    Ok(total * fz_bar)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveDiagnostics {
    pub iterations: usize,
    /// L1 change of the density at the last sweep.
    pub final_delta: f64,
    /// L1 residual of the level-crossing balance at the solution.
    pub residual_l1: f64,
    pub residual_history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationarySolution {
    pub density: DensityOnGrid,
    pub diagnostics: SolveDiagnostics,
}

/// Self-consistent stationary-mean estimate from the moment balance
/// `gamma·m = (lambda0 + lambda1·m^phi)·(eps + beta·m^theta)`, used to
/// size default grids. Reduces to `lambda0(eps+beta)/gamma` for
/// `theta = phi = 0`.
pub fn stationary_mean_estimate(sys: &SystemParams, inf: &InfluencerParams) -> f64 {
    let mut m = inf.lambda0 * (sys.epsilon + inf.beta) / sys.gamma;
    for _ in 0..200 {
        let next = (posting_intensity(m, inf) + sys.mu)
            * (conditional_jump_mean(m, sys, inf).max(sys.epsilon))
            / sys.gamma;
        let blended = 0.5 * m + 0.5 * next;
        if (blended - m).abs() <= 1e-12 * m.abs() {
            return blended;
        }
        m = blended;
    }
    m
}

/// Default log grid centered on the stationary-mean estimate. The
/// half-width in log space covers ~10 linearized standard deviations,
/// and the spacing is chosen fine enough to resolve the jump-kernel
/// width at the top of the grid and to keep the Volterra cascade of
/// [`solve_stationary`] subcritical.
pub fn default_grid(sys: &SystemParams, inf: &InfluencerParams) -> Grid {
    let m = stationary_mean_estimate(sys, inf);
    let s = conditional_jump_mean(m, sys, inf).max(sys.epsilon);
    let lam = posting_intensity(m, inf) + sys.mu;
    // Linearized (OU) relative standard deviation of the state.
    let eta = (s / m) * (lam * (1.0 + inf.cv * inf.cv) / (2.0 * sys.gamma)).sqrt();
    let spread = (10.0 * eta).clamp(2.0, 6.0);
    let y_lo = m * (-spread).exp();
    let y_hi = m * spread.exp();
    let lam_hi = posting_intensity(y_hi, inf) + sys.mu;
    // ~10 panels per kernel width where the mass sits keeps the
    // trapezoid quadrature error on the CDF well below 0.01.
    let dln = (s / m / 10.0)
        .min(2.0 * sys.gamma / (3.0 * lam_hi))
        .min(2.0 * spread / 511.0);
    let n = ((2.0 * spread / dln).ceil() as usize + 1).clamp(512, 20_001);
    Grid::log_spaced(y_lo, y_hi, n).expect("default grid parameters are valid")
}

/// Upward-flux operator: `(A f)_j = (1/(gamma·y_j)) ∫ K(y_j,x) f(x) dx`
/// by trapezoid quadrature; the stationary balance is `A f = f`.
fn apply_flux(
    f: &[f64],
    y: &[f64],
    sys: &SystemParams,
    inf: &InfluencerParams,
) -> Vec<f64> {
    let n = y.len();
    let mut out = vec![0.0; n];
    for j in 1..n {
        let mut integ = 0.0;
        let mut k_prev = kernel_ccdf_unchecked(y[j], y[0], sys, inf);
        for k in 1..=j {
            let k_cur = kernel_ccdf_unchecked(y[j], y[k], sys, inf);
            integ += 0.5 * (k_prev * f[k - 1] + k_cur * f[k]) * (y[k] - y[k - 1]);
            k_prev = k_cur;
        }
        out[j] = integ / (sys.gamma * y[j]);
    }
    out
}

/// Solve the stationary level-crossing balance.
///
/// With trapezoid quadrature the balance is a homogeneous Volterra
/// equation of the second kind: node `j` satisfies
///
/// `gamma·y_j·f_j = Σ_{k≤j} w_{jk}·K(y_j, y_k)·f_k`,
///
/// lower-triangular in `f`, so each `f_j` follows from the prefix by
/// forward substitution once the seed at the first node is fixed — the
/// solution family is one-dimensional and is normalized afterwards.
/// The cascade is well-posed only while the diagonal quadrature weight
/// `0.5·Δy_j·(lambda(y_j)+mu)` stays below the drift `gamma·y_j`;
/// grids too coarse for that are rejected ([`default_grid`] respects
/// the bound by construction).
pub fn solve_stationary(
    sys: &SystemParams,
    inf: &InfluencerParams,
    grid: &Grid,
    tol: f64,
    max_iter: usize,
) -> Result<StationarySolution, SolverError> {
    let _ = max_iter; // direct method: no iteration budget needed
    let y = grid.nodes();
    let n = y.len();
    for j in 1..n {
        let diag = 0.5 * (y[j] - y[j - 1]) * (posting_intensity(y[j], inf) + sys.mu);
        if diag >= 0.95 * sys.gamma * y[j] {
            return Err(SolverError::InvalidGrid(format!(
                "spacing too coarse at y = {:.3e} (panel weight {:.3e} vs drift {:.3e}); \
                 increase the node count",
                y[j],
                diag,
                sys.gamma * y[j]
            )));
        }
    }

    let mut f = vec![0.0; n];
    f[0] = 1.0;
    for j in 1..n {
        let mut integ = 0.0;
        let mut k_prev = kernel_ccdf_unchecked(y[j], y[0], sys, inf);
        for k in 1..j {
            let k_cur = kernel_ccdf_unchecked(y[j], y[k], sys, inf);
            integ += 0.5 * (k_prev * f[k - 1] + k_cur * f[k]) * (y[k] - y[k - 1]);
            k_prev = k_cur;
        }
        let dj = y[j] - y[j - 1];
        let k_diag = posting_intensity(y[j], inf) + sys.mu; // ccdf(0) = 1
        integ += 0.5 * k_prev * f[j - 1] * dj;
        f[j] = integ / (sys.gamma * y[j] - 0.5 * dj * k_diag);
        if f[j] > 1e250 {
            // The seed is arbitrary; rescale the prefix before overflow.
            for v in f[..=j].iter_mut() {
                *v *= 1e-250;
            }
        }
    }
    let mut density = DensityOnGrid {
        grid: grid.clone(),
        f,
    };
    density.normalize();
    let f = density.f.clone();

    let flux = apply_flux(&f, y, sys, inf);
    let delta = trapz(
        y,
        &f.iter().zip(&flux).map(|(a, b)| (a - b).abs()).collect::<Vec<_>>(),
    );
    if !(delta.is_finite() && delta <= tol.max(1e-5)) {
        return Err(SolverError::NoConvergence {
            max_iter,
            delta,
            tol,
        });
    }
    let residual: Vec<f64> = flux
        .iter()
        .zip(&f)
        .zip(y)
        .map(|((fl, fv), yv)| (sys.gamma * yv * (fv - fl)).abs())
        .collect();
    let residual_l1 = trapz(y, &residual);
    Ok(StationarySolution {
        density,
        diagnostics: SolveDiagnostics {
            iterations: 1,
            final_delta: delta,
            residual_l1,
            residual_history: vec![delta],
        },
    })
}

/// Explicit time-stepping of the transient equation for the CDF with
/// upwind (forward) differencing of the advection term. The boundary
/// `F(y_max) = 1` is enforced each step.
pub fn evolve_transient(
    cdf0: &[f64],
    grid: &Grid,
    sys: &SystemParams,
    inf: &InfluencerParams,
    t_end: f64,
    dt: f64,
) -> Result<Vec<f64>, SolverError> {
    let y = grid.nodes();
    let n = y.len();
    assert_eq!(cdf0.len(), n, "cdf length must match grid");
    let bound = grid.advection_dt_bound(sys.gamma);
    if dt > bound {
        return Err(SolverError::TimeStepTooLarge { dt, bound });
    }
    // Kernel evaluated at cell midpoints (geometric mean on the log grid).
    let midkernel: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            (0..j)
                .map(|k| kernel_ccdf_unchecked(y[j], (y[k] * y[k + 1]).sqrt(), sys, inf))
                .collect()
        })
        .collect();

    let mut f = cdf0.to_vec();
    f[n - 1] = 1.0;
    let mut t = 0.0;
    while t < t_end {
        let step = dt.min(t_end - t);
        let mut next = f.clone();
        for j in 0..n - 1 {
            let adv = sys.gamma * y[j] * (f[j + 1] - f[j]) / (y[j + 1] - y[j]);
            let mut jump = 0.0;
            let row = &midkernel[j];
            for k in 0..j {
                jump += row[k] * (f[k + 1] - f[k]);
            }
            next[j] = (f[j] + step * (adv - jump)).clamp(0.0, 1.0);
        }
        next[n - 1] = 1.0;
        // Small monotonicity violations are quadrature noise; large ones
        // mean the scheme has gone unstable.
        let mut violation: f64 = 0.0;
        for k in 0..n - 1 {
            violation = violation.max(next[k] - next[k + 1]);
        }
        if violation > 1e-4 {
            return Err(SolverError::Unstable { t, violation });
        }
        for k in 1..n {
            if next[k] < next[k - 1] {
                next[k] = next[k - 1];
            }
        }
        f = next;
        t += step;
    }
    Ok(f)
}

/// Kolmogorov distance between two CDFs given on (possibly different)
/// grids: sup over the merged nodes of the interpolated difference.
/// Interpolation is linear in `ln y`; outside a grid the endpoint value
/// is used.
pub fn ks_distance(xa: &[f64], fa: &[f64], xb: &[f64], fb: &[f64]) -> f64 {
    assert_eq!(xa.len(), fa.len());
    assert_eq!(xb.len(), fb.len());
    let interp = |x: &[f64], f: &[f64], q: f64| -> f64 {
        if q <= x[0] {
            return f[0];
        }
        if q >= x[x.len() - 1] {
            return f[f.len() - 1];
        }
        let idx = x.partition_point(|&v| v < q);
        let (x0, x1) = (x[idx - 1], x[idx]);
        let w = (q.ln() - x0.ln()) / (x1.ln() - x0.ln());
        f[idx - 1] * (1.0 - w) + f[idx] * w
    };
    let mut sup: f64 = 0.0;
    for &q in xa.iter().chain(xb.iter()) {
        sup = sup.max((interp(xa, fa, q) - interp(xb, fb, q)).abs());
    }
    sup
}
