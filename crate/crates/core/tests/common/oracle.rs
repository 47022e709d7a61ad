/// F and R evaluated straight from their defining sums.
pub fn direct_f(base: &[(f64, f64)], other: &[(f64, f64)]) -> f64 {
    let n = base.len() as f64;
    base.iter().zip(other).map(|(b, o)| (o.0 - b.0) + (o.1 - b.1)).sum::<f64>() / n
}

pub fn direct_r(base: &[(f64, f64)], other: &[(f64, f64)], eps: f64) -> f64 {
    let d = |p: &(f64, f64)| (p.0 - p.1).abs() / 2f64.sqrt();
    let n = base.len() as f64;
    base.iter().zip(other).map(|(b, o)| d(b) / d(o).max(eps)).sum::<f64>() / n - 1.0
}

/// OLS by the 2x2 normal equations and Cramer's rule.
pub fn normal_equations(pts: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let det = n * sxx - sx * sx;
    let intercept = (sy * sxx - sx * sxy) / det;
    let slope = (n * sxy - sx * sy) / det;
    let mean = sy / n;
    let ss_tot: f64 = pts.iter().map(|p| (p.1 - mean).powi(2)).sum();
    let ss_res: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    (slope, intercept, if ss_tot == 0.0 { 0.0 } else { 1.0 - ss_res / ss_tot })
}
