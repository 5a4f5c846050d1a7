//! Compensated summation and mean / standard-error summaries.

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.comp
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

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    /// Sample standard deviation over √count.
    pub se: f64,
    pub count: usize,
}

impl Summary {
    /// Two-pass mean and standard error; `se` is `NaN` for fewer than two values.
    pub fn from_samples(xs: &[f64]) -> Summary {
        let n = xs.len();
        if n == 0 {
            return Summary { mean: f64::NAN, se: f64::NAN, count: 0 };
        }
        let mean = xs.iter().copied().collect::<NeumaierSum>().total() / n as f64;
        let se = if n < 2 {
            f64::NAN
        } else {
            let ss = xs.iter().map(|x| (x - mean) * (x - mean)).collect::<NeumaierSum>().total();
            (ss / (n - 1) as f64).sqrt() / (n as f64).sqrt()
        };
        Summary { mean, se, count: n }
    }
}
