//! Summation helpers shared by the trace kernels and estimators.

const PAIRWISE_BLOCK: usize = 64;

/// Neumaier (improved Kahan) running sum.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct Compensated {
    sum: f64,
    comp: f64,
}

impl Compensated {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub(crate) fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut acc = Compensated::default();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

/// Pairwise dot product; error grows as O(log n) instead of O(n).
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    if a.len() <= PAIRWISE_BLOCK {
        let mut lanes = [0.0f64; 4];
        let chunks = a.len() / 4;
        for c in 0..chunks {
            let i = 4 * c;
            lanes[0] += a[i] * b[i];
            lanes[1] += a[i + 1] * b[i + 1];
            lanes[2] += a[i + 2] * b[i + 2];
            lanes[3] += a[i + 3] * b[i + 3];
        }
        let mut tail = 0.0;
        for i in 4 * chunks..a.len() {
            tail += a[i] * b[i];
        }
        return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]) + tail;
    }
    let mid = a.len() / 2;
    dot(&a[..mid], &b[..mid]) + dot(&a[mid..], &b[mid..])
}

/// Pairwise sum of `f(x)` over a slice.
pub(crate) fn pairwise_map_sum(a: &[f64], f: &impl Fn(f64) -> f64) -> f64 {
    if a.len() <= PAIRWISE_BLOCK {
        return a.iter().map(|&x| f(x)).sum();
    }
    let mid = a.len() / 2;
    pairwise_map_sum(&a[..mid], f) + pairwise_map_sum(&a[mid..], f)
}

pub(crate) fn pairwise_sum(a: &[f64]) -> f64 {
    pairwise_map_sum(a, &|x| x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_recovers_small_terms() {
        let mut values = vec![1e16, 1.0, -1e16];
        values.extend(std::iter::repeat(1.0).take(10));
        assert_eq!(compensated_sum(values), 11.0);
    }

    #[test]
    fn pairwise_dot_matches_naive_on_integers() {
        let a: Vec<f64> = (0..1000).map(|i| (i % 7) as f64).collect();
        let b: Vec<f64> = (0..1000).map(|i| (i % 5) as f64 - 2.0).collect();
        let naive: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        assert_eq!(dot(&a, &b), naive);
        assert_eq!(pairwise_sum(&a), a.iter().sum::<f64>());
    }
}
