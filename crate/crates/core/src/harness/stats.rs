use crate::solvers::Trace;

/// Best-effort optimal value: the smallest `f` seen in any of the traces,
/// lowered by `1e-12·(1 + |min|)` so that suboptimalities stay positive.
///
/// Returns `None` when no trace holds a finite value.
pub fn estimate_fstar<'a, I>(traces: I) -> Option<f64>
where
    I: IntoIterator<Item = &'a Trace>,
{
    let min = traces
        .into_iter()
        .flat_map(|t| t.records.iter().map(|r| r.f_value))
        .filter(|f| f.is_finite())
        .fold(f64::INFINITY, f64::min);
    min.is_finite().then(|| min - 1e-12 * (1.0 + min.abs()))
}

/// Least-squares slope of `log y` against `log x`.
///
/// `None` unless there are at least two points, all coordinates are positive
/// and the `x` values are not all equal.
pub fn fit_power_law(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    if xs.iter().chain(ys).any(|&v| !(v > 0.0) || !v.is_finite()) {
        return None;
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Slope of `log(f_k − f*)` against `log k` over iterations `first..=last`,
/// where `values[k]` is `f(x^k)`. Iteration 0 is skipped.
pub fn fit_rate_values(values: &[f64], f_star: f64, first: usize, last: usize) -> Option<f64> {
    let first = first.max(1);
    if last >= values.len() || first > last {
        return None;
    }
    let ks: Vec<f64> = (first..=last).map(|k| k as f64).collect();
    let gaps: Vec<f64> = values[first..=last].iter().map(|f| f - f_star).collect();
    fit_power_law(&ks, &gaps)
}

/// [`fit_rate_values`] applied to a trace's function values.
pub fn fit_rate(trace: &Trace, f_star: f64, first: usize, last: usize) -> Option<f64> {
    fit_rate_values(&trace.values(), f_star, first, last)
}
