//! Generic L-BFGS with a strong-Wolfe line search over an abstract point
//! type. The same core drives both the Riemannian optimizer (points are
//! TMERA states, tangents live at each gate/tensor) and the Euclidean one
//! (points are flat angle vectors, retraction is addition).
//!
//! Tangent vectors are lists of tensors; the metric is the sum of real parts
//! of the entrywise inner products, and gradients are scaled so that the
//! directional derivative along a tangent `d` is exactly `dot(grad, d)`.

use std::collections::VecDeque;

use super::OptimizerConfig;
use crate::error::Result;
use crate::tensor::Tensor;

/// One objective/gradient evaluation at a point.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub objective: f64,
    pub energy: f64,
    pub penalty: f64,
    /// Tangent gradient: `df(d) = dot(gradient, d)`.
    pub gradient: Vec<Tensor>,
}

/// One trace row per accepted iterate (row 0 is the starting point).
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub objective: f64,
    pub grad_norm: f64,
    pub energy: f64,
    pub penalty: f64,
}

/// Outcome summary of one optimization run.
#[derive(Debug, Clone)]
pub struct OptimizeReport {
    pub trace: Vec<TraceRow>,
    pub iterations: usize,
    /// Gradient tolerance reached.
    pub converged: bool,
    /// Two consecutive line-search failures forced a graceful stop.
    pub stalled: bool,
}

pub(crate) fn dot(a: &[Tensor], b: &[Tensor]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.inner(y).re).sum()
}

pub(crate) fn norm(a: &[Tensor]) -> f64 {
    dot(a, a).sqrt()
}

fn scaled(a: &[Tensor], s: f64) -> Vec<Tensor> {
    let c = num_complex::Complex64::new(s, 0.0);
    a.iter().map(|t| t.scale(c)).collect()
}

/// a + s b
fn add_scaled(a: &[Tensor], b: &[Tensor], s: f64) -> Vec<Tensor> {
    let c = num_complex::Complex64::new(s, 0.0);
    a.iter()
        .zip(b)
        .map(|(x, y)| x.add(&y.scale(c)).unwrap())
        .collect()
}

type Pair = (Vec<Tensor>, Vec<Tensor>, f64);

/// Two-loop recursion; returns the quasi-Newton descent direction `-H g`.
fn two_loop(g: &[Tensor], hist: &VecDeque<Pair>) -> Vec<Tensor> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(hist.len());
    for (s, y, rho) in hist.iter().rev() {
        let a = rho * dot(s, &q);
        q = add_scaled(&q, y, -a);
        alphas.push(a);
    }
    // Barzilai-Borwein-style initial Hessian scaling from the newest pair
    let gamma = hist
        .back()
        .map(|(s, y, _)| dot(s, y) / dot(y, y).max(1e-300))
        .unwrap_or(1.0);
    let mut r = scaled(&q, gamma);
    for ((s, y, rho), a) in hist.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &r);
        r = add_scaled(&r, s, a - b);
    }
    scaled(&r, -1.0)
}

struct LinePoint<P> {
    s: f64,
    x: P,
    eval: Evaluation,
    /// phi'(s) = dot(grad at x(s), transported direction)
    dphi: f64,
}

fn eval_line_point<P, FE, FR, FT>(
    x: &P,
    d: &[Tensor],
    s: f64,
    eval: &mut FE,
    retract: &FR,
    transport: &FT,
) -> Result<LinePoint<P>>
where
    FE: FnMut(&P) -> Result<Evaluation>,
    FR: Fn(&P, &[Tensor], f64) -> Result<P>,
    FT: Fn(&P, &[Tensor]) -> Result<Vec<Tensor>>,
{
    let xs = retract(x, d, s)?;
    let ev = eval(&xs)?;
    let td = transport(&xs, d)?;
    let dphi = dot(&ev.gradient, &td);
    Ok(LinePoint {
        s,
        x: xs,
        eval: ev,
        dphi,
    })
}

/// Strong-Wolfe line search (bracket + bisection zoom). Returns None when no
/// acceptable step is found within the evaluation budget.
#[allow(clippy::too_many_arguments)]
fn line_search<P: Clone, FE, FR, FT>(
    x: &P,
    ev0: &Evaluation,
    d: &[Tensor],
    dphi0: f64,
    s_init: f64,
    cfg: &OptimizerConfig,
    eval: &mut FE,
    retract: &FR,
    transport: &FT,
) -> Result<Option<LinePoint<P>>>
where
    FE: FnMut(&P) -> Result<Evaluation>,
    FR: Fn(&P, &[Tensor], f64) -> Result<P>,
    FT: Fn(&P, &[Tensor]) -> Result<Vec<Tensor>>,
{
    let phi0 = ev0.objective;
    let (c1, c2) = (cfg.c1, cfg.c2);
    let sufficient = |s: f64, f: f64| f <= phi0 + c1 * s * dphi0;
    let curvature = |dphi: f64| dphi.abs() <= -c2 * dphi0;

    // bisection zoom between a low (Wolfe-feasible) and a high endpoint
    macro_rules! zoom {
        ($lo:expr, $hi:expr) => {{
            let mut lo: LinePoint<P> = $lo;
            let mut hi: LinePoint<P> = $hi;
            for _ in 0..40 {
                if (hi.s - lo.s).abs() <= 1e-14 * (1.0 + lo.s.abs()) {
                    break;
                }
                let sm = 0.5 * (lo.s + hi.s);
                let mid = eval_line_point(x, d, sm, eval, retract, transport)?;
                if !sufficient(sm, mid.eval.objective) || mid.eval.objective >= lo.eval.objective {
                    hi = mid;
                } else {
                    if curvature(mid.dphi) {
                        return Ok(Some(mid));
                    }
                    if mid.dphi * (hi.s - lo.s) >= 0.0 {
                        hi = lo;
                    }
                    lo = mid;
                }
            }
            return Ok(None);
        }};
    }

    // s = 0 endpoint, reused as a zoom boundary
    let origin = || LinePoint {
        s: 0.0,
        x: x.clone(),
        eval: ev0.clone(),
        dphi: dphi0,
    };
    let mut prev: Option<LinePoint<P>> = None;
    let mut s = s_init;
    for _ in 0..30 {
        let lp = eval_line_point(x, d, s, eval, retract, transport)?;
        let prev_f = prev.as_ref().map(|p| p.eval.objective);
        if !sufficient(s, lp.eval.objective) || prev_f.is_some_and(|f| lp.eval.objective >= f) {
            zoom!(prev.unwrap_or_else(origin), lp);
        }
        if curvature(lp.dphi) {
            return Ok(Some(lp));
        }
        if lp.dphi >= 0.0 {
            zoom!(lp, prev.unwrap_or_else(origin));
        }
        s *= 2.0;
        prev = Some(lp);
    }
    Ok(None)
}

/// L-BFGS with projection transport of direction, gradient, and stored
/// curvature pairs. `eval` returns the tangent gradient at a point; `retract`
/// moves along a tangent; `transport` projects a tangent into the tangent
/// space at a (new) point.
pub(crate) fn lbfgs_core<P: Clone, FE, FR, FT>(
    x0: P,
    mut eval: FE,
    retract: FR,
    transport: FT,
    cfg: &OptimizerConfig,
) -> Result<(P, Evaluation, OptimizeReport)>
where
    FE: FnMut(&P) -> Result<Evaluation>,
    FR: Fn(&P, &[Tensor], f64) -> Result<P>,
    FT: Fn(&P, &[Tensor]) -> Result<Vec<Tensor>>,
{
    cfg.validate()?;
    let mut x = x0;
    let mut ev = eval(&x)?;
    let mut hist: VecDeque<Pair> = VecDeque::with_capacity(cfg.memory + 1);
    let row = |k: usize, ev: &Evaluation| TraceRow {
        iteration: k,
        objective: ev.objective,
        grad_norm: norm(&ev.gradient),
        energy: ev.energy,
        penalty: ev.penalty,
    };
    let mut trace = vec![row(0, &ev)];
    let mut failures = 0usize;
    let mut converged = false;
    let mut stalled = false;
    let mut iterations = 0usize;

    for k in 1..=cfg.max_iterations {
        let gnorm = norm(&ev.gradient);
        if gnorm <= cfg.grad_tol {
            converged = true;
            break;
        }
        let mut d = two_loop(&ev.gradient, &hist);
        let mut dphi0 = dot(&ev.gradient, &d);
        if dphi0 >= 0.0 {
            // not a descent direction: fall back to steepest descent
            hist.clear();
            d = scaled(&ev.gradient, -1.0);
            dphi0 = -gnorm * gnorm;
        }
        let s_init = if hist.is_empty() { 1.0 / gnorm.max(1e-12) } else { 1.0 };
        match line_search(&x, &ev, &d, dphi0, s_init, cfg, &mut eval, &retract, &transport)? {
            Some(lp) => {
                failures = 0;
                // transport direction, gradient, and history to the new point
                let td = transport(&lp.x, &d)?;
                let tg = transport(&lp.x, &ev.gradient)?;
                let svec = scaled(&td, lp.s);
                let yvec = add_scaled(&lp.eval.gradient, &tg, -1.0);
                let mut moved: VecDeque<Pair> = VecDeque::with_capacity(hist.len() + 1);
                for (s, y, rho) in hist.iter() {
                    moved.push_back((transport(&lp.x, s)?, transport(&lp.x, y)?, *rho));
                }
                let sy = dot(&yvec, &svec);
                if sy > 1e-12 * norm(&yvec) * norm(&svec) {
                    moved.push_back((svec, yvec, 1.0 / sy));
                    if moved.len() > cfg.memory {
                        moved.pop_front();
                    }
                }
                hist = moved;
                x = lp.x;
                ev = lp.eval;
                iterations = k;
                trace.push(row(k, &ev));
            }
            None => {
                failures += 1;
                hist.clear();
                if failures >= 2 {
                    stalled = true;
                    break;
                }
                // retry from the same point with steepest descent
            }
        }
    }

    Ok((
        x,
        ev,
        OptimizeReport {
            trace,
            iterations,
            converged,
            stalled,
        },
    ))
}
