//! Cost model comparing classical tensor-network contraction with quantum
//! evaluation of the same TMERA expectation values, plus the power-law
//! fitting used in accuracy-versus-cost studies.
//!
//! All costs are dimensionless operation counts, exact to double precision.
//! The amplitude-estimation cost uses the natural logarithm; the base only
//! shifts a constant factor.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Published classical contraction exponents by MERA variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeraVariant {
    /// 1D modified binary (the variant implemented here): cost chi^7.
    ModifiedBinary,
    /// 1D ternary: chi^8.
    Ternary,
    /// 1D binary: chi^9.
    Binary,
    /// 2D 3x3 -> 1 coarse-graining: chi^16.
    TwoDimNineToOne,
    /// 2D 2x2 -> 1 coarse-graining: chi^28.
    TwoDimFourToOne,
}

impl MeraVariant {
    pub fn exponent(&self) -> u32 {
        match self {
            MeraVariant::ModifiedBinary => 7,
            MeraVariant::Ternary => 8,
            MeraVariant::Binary => 9,
            MeraVariant::TwoDimNineToOne => 16,
            MeraVariant::TwoDimFourToOne => 28,
        }
    }

    pub fn from_exponent(r: u32) -> Result<MeraVariant> {
        match r {
            7 => Ok(MeraVariant::ModifiedBinary),
            8 => Ok(MeraVariant::Ternary),
            9 => Ok(MeraVariant::Binary),
            16 => Ok(MeraVariant::TwoDimNineToOne),
            28 => Ok(MeraVariant::TwoDimFourToOne),
            _ => Err(Error::InvalidArgument(format!(
                "no MERA variant has contraction exponent r = {r}; known: 7, 8, 9, 16, 28"
            ))),
        }
    }
}

/// Classical contraction cost `chi^r` with `r` from the variant table.
pub fn classical_cost(chi: usize, r: u32) -> Result<f64> {
    if chi < 2 {
        return Err(Error::InvalidArgument(format!(
            "bond dimension chi = {chi} must be >= 2"
        )));
    }
    MeraVariant::from_exponent(r)?;
    Ok((chi as f64).powi(r as i32))
}

/// Sampling cost of one optimization step on quantum hardware:
/// `q t^2 T^2 / eps^2`.
pub fn quantum_cost_sampling(q: usize, t: usize, layers: usize, eps: f64) -> Result<f64> {
    check_structure(q, t, layers)?;
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "target accuracy eps = {eps} must be positive"
        )));
    }
    Ok(q as f64 * (t * t * layers * layers) as f64 / (eps * eps))
}

/// Amplitude-estimation cost: the full formula `q t^2 T^2 ln(1/eps) / eps`
/// and the fixed-depth figure metric `q t^2 ln(1/eps) / eps`, side by side.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct QaeCost {
    pub full: f64,
    pub caption_metric: f64,
}

pub fn quantum_cost_qae(q: usize, t: usize, layers: usize, eps: f64) -> Result<QaeCost> {
    check_structure(q, t, layers)?;
    if !(eps.is_finite() && eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "amplitude estimation needs 0 < eps < 1, got {eps}"
        )));
    }
    let base = q as f64 * (t * t) as f64 * (1.0 / eps).ln() / eps;
    Ok(QaeCost {
        full: base * (layers * layers) as f64,
        caption_metric: base,
    })
}

fn check_structure(q: usize, t: usize, layers: usize) -> Result<()> {
    if q == 0 || t == 0 || layers == 0 {
        return Err(Error::InvalidArgument(
            "q, t, and T must all be positive".into(),
        ));
    }
    Ok(())
}

/// Power-law fit `y = a x^(-beta)` by least squares in log-log space.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PowerLawFit {
    /// Decay exponent beta (positive for decaying data).
    pub exponent: f64,
    /// Prefactor a.
    pub prefactor: f64,
    /// Root-mean-square residual of log y.
    pub residual: f64,
}

/// Fits `accuracy = a * x^(-beta)` to `(x, accuracy)` points, e.g.
/// (bond dimension, e - e_gs). Needs at least three strictly positive points.
pub fn fit_power_law(points: &[(f64, f64)]) -> Result<PowerLawFit> {
    if points.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "power-law fit needs >= 3 points, got {}",
            points.len()
        )));
    }
    if points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
        return Err(Error::InvalidArgument(
            "power-law fit needs strictly positive coordinates".into(),
        ));
    }
    let n = points.len() as f64;
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let sx: f64 = logs.iter().map(|p| p.0).sum();
    let sy: f64 = logs.iter().map(|p| p.1).sum();
    let sxx: f64 = logs.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = logs.iter().map(|p| p.0 * p.1).sum();
    let det = n * sxx - sx * sx;
    if det.abs() <= 1e-12 * (n * sxx.abs() + sx * sx) {
        return Err(Error::Numerical(
            "power-law fit is degenerate: all x values coincide".into(),
        ));
    }
    let slope = (n * sxy - sx * sy) / det;
    let intercept = (sy - slope * sx) / n;
    let residual = (logs
        .iter()
        .map(|&(lx, ly)| {
            let d = ly - (intercept + slope * lx);
            d * d
        })
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(PowerLawFit {
        exponent: -slope,
        prefactor: intercept.exp(),
        residual,
    })
}
