use serde::Serialize;

/// Ordinary least squares `y = intercept + slope x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// Root-mean-square residual of the fit.
    pub rmse: f64,
    pub points: usize,
}

/// Needs at least two distinct abscissae.
pub fn linear_fit(points: &[(f64, f64)]) -> Option<LinearFit> {
    let m = points.len();
    if m < 2 {
        return None;
    }
    let mf = m as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / mf;
    let my = points.iter().map(|p| p.1).sum::<f64>() / mf;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy) / (sxx * syy)
    };
    let intercept = my - slope * mx;
    let sse: f64 = points
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    Some(LinearFit {
        slope,
        intercept,
        r2,
        rmse: (sse / mf).sqrt(),
        points: m,
    })
}

/// Slope of `log y` against `log n`; nonpositive values are skipped.
pub fn loglog_fit(ns: &[f64], ys: &[f64]) -> Option<LinearFit> {
    let pts: Vec<(f64, f64)> = ns
        .iter()
        .zip(ys)
        .filter(|(n, y)| **n > 0.0 && **y > 0.0)
        .map(|(n, y)| (n.ln(), y.ln()))
        .collect();
    linear_fit(&pts)
}
