//! Compensated accumulation and sample statistics.

use std::ops::AddAssign;

/// Neumaier (improved Kahan–Babuška) summation.
#[derive(Clone, Copy, Debug, Default)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    /// Folds another partial sum in, keeping both compensation terms.
    pub fn merge(&mut self, other: &NeumaierSum) {
        self.add(other.sum);
        self.add(other.compensation);
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl AddAssign<f64> for NeumaierSum {
    fn add_assign(&mut self, x: f64) {
        self.add(x);
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = NeumaierSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// Sample mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SampleMean {
    pub mean: f64,
    /// Standard error of the mean; `None` with fewer than two samples.
    pub sem: Option<f64>,
    pub count: usize,
}

impl SampleMean {
    /// Two-pass mean and standard error. The result depends only on the
    /// order of `values`, which callers keep fixed (realization order).
    pub fn from_values(values: &[f64]) -> Self {
        let count = values.len();
        if count == 0 {
            return Self { mean: f64::NAN, sem: None, count };
        }
        let mean = values.iter().copied().collect::<NeumaierSum>().value() / count as f64;
        let sem = (count >= 2).then(|| {
            let ss = values.iter().map(|x| (x - mean) * (x - mean)).collect::<NeumaierSum>().value();
            (ss / (count as f64 - 1.0) / count as f64).sqrt()
        });
        Self { mean, sem, count }
    }

    pub fn sem_or_zero(&self) -> f64 {
        self.sem.unwrap_or(0.0)
    }

    /// |mean − target| ≤ n_sigma · SE. A zero SE demands equality to 1e-12.
    pub fn agrees_with(&self, target: f64, n_sigma: f64) -> bool {
        (self.mean - target).abs() <= n_sigma * self.sem_or_zero() + 1e-12
    }
}
