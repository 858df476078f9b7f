/// Excess-risk bound for networks in the norm ball
/// `||W_l||_inf <= w_bar`, `||b_l||_inf <= b_bar`:
///
/// `(4n / sqrt(m)) * (b_bar * ((2 w_bar)^L - 1) / (2 w_bar - 1) + (2 w_bar)^L sqrt(2 ln 2n))`
/// plus `5 C sqrt(2 ln(8/delta) / m)` when `confidence = Some((delta, C))`.
/// At `w_bar = 1/2` the geometric factor is its limit `L`.
pub fn generalization_bound(
    w_bar: f64,
    b_bar: f64,
    depth: usize,
    n: usize,
    m: usize,
    confidence: Option<(f64, f64)>,
) -> f64 {
    let q = 2.0 * w_bar;
    let l = depth as i32;
    let geom = if (q - 1.0).abs() < 1e-12 {
        depth as f64
    } else {
        (q.powi(l) - 1.0) / (q - 1.0)
    };
    let n = n as f64;
    let m = m as f64;
    let mut out = 4.0 * n / m.sqrt() * (b_bar * geom + q.powi(l) * (2.0 * (2.0 * n).ln()).sqrt());
    if let Some((delta, c)) = confidence {
        out += 5.0 * c * (2.0 * (8.0 / delta).ln() / m).sqrt();
    }
    out
}
