//! Compensated (Kahan–Babuška/Neumaier) summation.

/// Running compensated sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.comp += (self.sum - t) + value;
        } else {
            self.comp += (value - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut acc = CompensatedSum::new();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

/// Componentwise compensated accumulator for vectors of fixed length.
#[derive(Debug, Clone)]
pub struct VecSum {
    parts: Vec<CompensatedSum>,
}

impl VecSum {
    pub fn new(len: usize) -> Self {
        Self {
            parts: vec![CompensatedSum::new(); len],
        }
    }

    #[inline]
    pub fn add_scaled(&mut self, scale: f64, values: &[f64]) {
        for (acc, v) in self.parts.iter_mut().zip(values) {
            acc.add(scale * v);
        }
    }

    pub fn write_into(&self, out: &mut [f64]) {
        for (o, acc) in out.iter_mut().zip(&self.parts) {
            *o = acc.value();
        }
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.parts.iter().map(CompensatedSum::value).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_cancelled_terms() {
        let naive: f64 = [1.0, 1e100, 1.0, -1e100].iter().sum();
        assert_eq!(naive, 0.0);
        assert_eq!(compensated_sum([1.0, 1e100, 1.0, -1e100]), 2.0);
    }

    #[test]
    fn many_small_terms() {
        let n = 1_000_000;
        let s = compensated_sum(std::iter::repeat(0.1).take(n));
        assert!((s - 100_000.0).abs() < 1e-9);
    }
}
