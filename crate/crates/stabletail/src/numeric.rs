//! Small numeric helpers shared across modules.

/// Neumaier-compensated accumulator. Sequential and deterministic: the same
/// inputs in the same order produce bit-identical totals.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

pub fn compensated_total<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut acc = CompensatedSum::new();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

/// Linear-interpolation quantile (the "type 7" convention) on pre-sorted data.
///
/// `p` must lie in [0, 1] and `sorted` must be nonempty and ascending.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    debug_assert!((0.0..=1.0).contains(&p));
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let rank = p * (n - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let w = rank - lo as f64;
        sorted[lo] + (sorted[hi] - sorted[lo]) * w
    }
}

/// Quantile of unsorted data; sorts a copy.
pub fn quantile(values: &[f64], p: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(|a, b| {
        a.partial_cmp(b)
            .expect("non-finite value in quantile input")
    });
    quantile_sorted(&sorted, p)
}

pub fn median(values: &[f64]) -> f64 {
    quantile(values, 0.5)
}

pub fn mean(values: &[f64]) -> f64 {
    compensated_total(values.iter().copied()) / values.len() as f64
}

/// Unbiased (n-1 denominator) sample variance.
pub fn sample_variance(values: &[f64]) -> f64 {
    let n = values.len();
    debug_assert!(n >= 2);
    let m = mean(values);
    let ss = compensated_total(values.iter().map(|v| (v - m) * (v - m)));
    ss / (n - 1) as f64
}
