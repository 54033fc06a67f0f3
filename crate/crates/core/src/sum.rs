//! Compensated summation.
//!
//! Every reduction over modes, samples or shifts goes through [`CompensatedSum`]
//! in a fixed order so that results do not depend on thread scheduling.

/// Neumaier's variant of Kahan summation.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Sum of a slice in index order.
pub fn compensated_sum(values: &[f64]) -> f64 {
    let mut acc = CompensatedSum::new();
    for &v in values {
        acc.add(v);
    }
    acc.value()
}

/// Arithmetic mean of a slice in index order. Returns `NaN` for an empty slice.
pub fn compensated_mean(values: &[f64]) -> f64 {
    compensated_sum(values) / values.len() as f64
}

/// Componentwise compensated accumulator over equal-length vectors.
#[derive(Clone, Debug)]
pub struct VectorSum {
    acc: Vec<CompensatedSum>,
    count: usize,
}

impl VectorSum {
    pub fn new(len: usize) -> Self {
        Self {
            acc: vec![CompensatedSum::new(); len],
            count: 0,
        }
    }

    pub fn add(&mut self, values: &[f64]) {
        debug_assert_eq!(values.len(), self.acc.len());
        for (a, &v) in self.acc.iter_mut().zip(values) {
            a.add(v);
        }
        self.count += 1;
    }

    pub fn add_scaled(&mut self, values: &[f64], weight: f64) {
        debug_assert_eq!(values.len(), self.acc.len());
        for (a, &v) in self.acc.iter_mut().zip(values) {
            a.add(weight * v);
        }
        self.count += 1;
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn sum(&self) -> Vec<f64> {
        self.acc.iter().map(CompensatedSum::value).collect()
    }

    pub fn mean(&self) -> Vec<f64> {
        let n = self.count as f64;
        self.acc.iter().map(|a| a.value() / n).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_cancelled_small_terms() {
        let values = [1.0, 1e100, 1.0, -1e100];
        assert_eq!(compensated_sum(&values), 2.0);
        assert_eq!(values.iter().sum::<f64>(), 0.0);
    }

    #[test]
    fn vector_mean() {
        let mut acc = VectorSum::new(2);
        acc.add(&[1.0, 2.0]);
        acc.add(&[3.0, 6.0]);
        assert_eq!(acc.mean(), vec![2.0, 4.0]);
        assert_eq!(acc.count(), 2);
    }
}
