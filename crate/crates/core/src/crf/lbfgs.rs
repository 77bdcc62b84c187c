//! Limited-memory BFGS with Armijo backtracking.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LbfgsSettings {
    pub max_iter: usize,
    /// Stop once the gradient's Euclidean norm is at most this.
    pub tol: f64,
    pub memory: usize,
}

impl Default for LbfgsSettings {
    fn default() -> Self {
        LbfgsSettings {
            max_iter: 200,
            tol: 1e-4,
            memory: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Converged,
    MaxIterations,
    /// No step satisfying the sufficient-decrease condition was found.
    LineSearchFailed,
    NonFinite,
}

#[derive(Debug, Clone)]
pub struct LbfgsOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    /// Objective after each accepted step, starting with the initial value.
    pub trace: Vec<f64>,
    pub reason: StopReason,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Minimizes `f`, which returns the objective and writes the gradient into
/// its second argument.
pub fn minimize<F>(mut f: F, x0: Vec<f64>, settings: LbfgsSettings) -> LbfgsOutcome
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    const ARMIJO: f64 = 1e-4;
    const MAX_BACKTRACK: usize = 60;

    let n = x0.len();
    let mut x = x0;
    let mut g = vec![0.0; n];
    let mut fx = f(&x, &mut g);
    let mut trace = vec![fx];
    let outcome = |x: Vec<f64>, value, g: &[f64], iterations, trace, reason| LbfgsOutcome {
        x,
        value,
        grad_norm: norm(g),
        iterations,
        trace,
        reason,
    };
    if !fx.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return outcome(x, fx, &g, 0, trace, StopReason::NonFinite);
    }

    let mut s_hist: Vec<Vec<f64>> = Vec::new();
    let mut y_hist: Vec<Vec<f64>> = Vec::new();
    let mut rho: Vec<f64> = Vec::new();
    let mut d = vec![0.0; n];
    let mut x_new = vec![0.0; n];
    let mut g_new = vec![0.0; n];
    let mut alpha_buf = Vec::with_capacity(settings.memory);

    for iter in 0..settings.max_iter {
        if norm(&g) <= settings.tol {
            return outcome(x, fx, &g, iter, trace, StopReason::Converged);
        }

        // Two-loop recursion.
        d.iter_mut().zip(&g).for_each(|(di, gi)| *di = -gi);
        alpha_buf.clear();
        for k in (0..s_hist.len()).rev() {
            let a = rho[k] * dot(&s_hist[k], &d);
            d.iter_mut().zip(&y_hist[k]).for_each(|(di, yi)| *di -= a * yi);
            alpha_buf.push(a);
        }
        if let (Some(s), Some(y)) = (s_hist.last(), y_hist.last()) {
            let gamma = dot(s, y) / dot(y, y);
            d.iter_mut().for_each(|di| *di *= gamma);
        }
        for (k, a) in (0..s_hist.len()).zip(alpha_buf.iter().rev()) {
            let b = rho[k] * dot(&y_hist[k], &d);
            d.iter_mut().zip(&s_hist[k]).for_each(|(di, si)| *di += (a - b) * si);
        }
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            s_hist.clear();
            y_hist.clear();
            rho.clear();
            d.iter_mut().zip(&g).for_each(|(di, gi)| *di = -gi);
            slope = dot(&g, &d);
        }

        let mut step = if s_hist.is_empty() {
            (1.0 / norm(&g)).min(1.0)
        } else {
            1.0
        };
        let mut accepted = false;
        let mut fx_new = f64::NAN;
        for _ in 0..MAX_BACKTRACK {
            for i in 0..n {
                x_new[i] = x[i] + step * d[i];
            }
            fx_new = f(&x_new, &mut g_new);
            if fx_new.is_finite() && fx_new <= fx + ARMIJO * step * slope {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            let reason = if fx_new.is_finite() {
                StopReason::LineSearchFailed
            } else {
                StopReason::NonFinite
            };
            return outcome(x, fx, &g, iter, trace, reason);
        }
        if g_new.iter().any(|v| !v.is_finite()) {
            return outcome(x, fx, &g, iter, trace, StopReason::NonFinite);
        }

        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 {
            if s_hist.len() == settings.memory {
                s_hist.remove(0);
                y_hist.remove(0);
                rho.remove(0);
            }
            s_hist.push(s);
            y_hist.push(y);
            rho.push(1.0 / sy);
        }
        std::mem::swap(&mut x, &mut x_new);
        std::mem::swap(&mut g, &mut g_new);
        fx = fx_new;
        trace.push(fx);
    }
    let reason = if norm(&g) <= settings.tol {
        StopReason::Converged
    } else {
        StopReason::MaxIterations
    };
    outcome(x, fx, &g, settings.max_iter, trace, reason)
}
