use serde::{Deserialize, Serialize};

/// Sample mean and its standard error, accumulated in the given order.
pub fn mean_stderr(samples: &[f64]) -> (f64, f64) {
    let n = samples.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxStats {
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub whisker_lo: f64,
    pub whisker_hi: f64,
    pub outliers: Vec<f64>,
}

/// Linear-interpolation quantile of sorted data, position `(n - 1) p`.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Box-plot summary; whiskers end at the extreme data points within 1.5 IQR
/// of the box, everything beyond is an outlier. An interpolated quartile can
/// lie beyond every such point, in which case the whisker stops at the box.
/// `None` for an empty sample.
pub fn box_stats(samples: &[f64]) -> Option<BoxStats> {
    if samples.is_empty() {
        return None;
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let q1 = quantile(&s, 0.25);
    let q3 = quantile(&s, 0.75);
    let reach = 1.5 * (q3 - q1);
    let (lo_fence, hi_fence) = (q1 - reach, q3 + reach);
    let inside: Vec<f64> = s.iter().copied().filter(|&x| x >= lo_fence && x <= hi_fence).collect();
    Some(BoxStats {
        median: quantile(&s, 0.5),
        q1,
        q3,
        whisker_lo: inside.first().map_or(q1, |&x| x.min(q1)),
        whisker_hi: inside.last().map_or(q3, |&x| x.max(q3)),
        outliers: s.into_iter().filter(|&x| x < lo_fence || x > hi_fence).collect(),
    })
}
