//! Log-space dynamic programming over a linear-chain tag lattice, shared by
//! the feature CRF and the neural CRF output layer.
//!
//! Score of a path `y`:
//! `start[y0] + Σ emit[i][y_i] + Σ trans[y_{i-1}][y_i] + stop[y_{n-1}]`,
//! with absent start/stop vectors contributing zero.

/// Numerically stable `ln Σ exp(x)`; `-inf` for an empty slice.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

#[derive(Debug, Clone, Copy)]
pub struct Lattice<'a> {
    /// Row-major `len × tags`.
    pub emissions: &'a [f64],
    /// Row-major `tags × tags`, indexed `[from * tags + to]`.
    pub transitions: &'a [f64],
    pub start: Option<&'a [f64]>,
    pub stop: Option<&'a [f64]>,
    pub len: usize,
    pub tags: usize,
}

/// Posterior expectations under the lattice distribution.
#[derive(Debug, Clone)]
pub struct Marginals {
    pub log_z: f64,
    /// `len × tags` per-position tag probabilities.
    pub unary: Vec<f64>,
    /// `tags × tags` expected transition counts, summed over positions.
    pub pairwise: Vec<f64>,
}

impl<'a> Lattice<'a> {
    pub fn new(emissions: &'a [f64], transitions: &'a [f64], tags: usize) -> Lattice<'a> {
        assert!(tags > 0 && emissions.len() % tags == 0);
        assert_eq!(transitions.len(), tags * tags);
        Lattice {
            emissions,
            transitions,
            start: None,
            stop: None,
            len: emissions.len() / tags,
            tags,
        }
    }

    pub fn with_boundaries(mut self, start: &'a [f64], stop: &'a [f64]) -> Lattice<'a> {
        assert_eq!(start.len(), self.tags);
        assert_eq!(stop.len(), self.tags);
        self.start = Some(start);
        self.stop = Some(stop);
        self
    }

    #[inline]
    fn emit(&self, i: usize, y: usize) -> f64 {
        self.emissions[i * self.tags + y]
    }

    #[inline]
    fn trans(&self, x: usize, y: usize) -> f64 {
        self.transitions[x * self.tags + y]
    }

    #[inline]
    fn start_of(&self, y: usize) -> f64 {
        self.start.map_or(0.0, |s| s[y])
    }

    #[inline]
    fn stop_of(&self, y: usize) -> f64 {
        self.stop.map_or(0.0, |s| s[y])
    }

    pub fn score(&self, path: &[usize]) -> f64 {
        assert_eq!(path.len(), self.len);
        let mut s = 0.0;
        for (i, &y) in path.iter().enumerate() {
            s += self.emit(i, y);
            if i == 0 {
                s += self.start_of(y);
            } else {
                s += self.trans(path[i - 1], y);
            }
        }
        if let Some(&last) = path.last() {
            s += self.stop_of(last);
        }
        s
    }

    /// Forward log-potentials `alpha` (`len × tags`) and `ln Z`.
    pub fn forward(&self) -> (Vec<f64>, f64) {
        let (n, t) = (self.len, self.tags);
        assert!(n > 0, "empty lattice");
        let mut alpha = vec![0.0; n * t];
        for y in 0..t {
            alpha[y] = self.start_of(y) + self.emit(0, y);
        }
        let mut buf = vec![0.0; t];
        for i in 1..n {
            for y in 0..t {
                for (x, b) in buf.iter_mut().enumerate() {
                    *b = alpha[(i - 1) * t + x] + self.trans(x, y);
                }
                alpha[i * t + y] = self.emit(i, y) + log_sum_exp(&buf);
            }
        }
        for (y, b) in buf.iter_mut().enumerate() {
            *b = alpha[(n - 1) * t + y] + self.stop_of(y);
        }
        let log_z = log_sum_exp(&buf);
        (alpha, log_z)
    }

    /// Backward log-potentials `beta` (`len × tags`) and `ln Z` computed
    /// right to left.
    pub fn backward(&self) -> (Vec<f64>, f64) {
        let (n, t) = (self.len, self.tags);
        assert!(n > 0, "empty lattice");
        let mut beta = vec![0.0; n * t];
        for y in 0..t {
            beta[(n - 1) * t + y] = self.stop_of(y);
        }
        let mut buf = vec![0.0; t];
        for i in (0..n - 1).rev() {
            for x in 0..t {
                for (y, b) in buf.iter_mut().enumerate() {
                    *b = self.trans(x, y) + self.emit(i + 1, y) + beta[(i + 1) * t + y];
                }
                beta[i * t + x] = log_sum_exp(&buf);
            }
        }
        for (y, b) in buf.iter_mut().enumerate() {
            *b = self.start_of(y) + self.emit(0, y) + beta[y];
        }
        let log_z = log_sum_exp(&buf);
        (beta, log_z)
    }

    pub fn log_partition(&self) -> f64 {
        self.forward().1
    }

    pub fn marginals(&self) -> Marginals {
        let (n, t) = (self.len, self.tags);
        let (alpha, log_z) = self.forward();
        let (beta, _) = self.backward();
        let unary: Vec<f64> = alpha
            .iter()
            .zip(&beta)
            .map(|(a, b)| (a + b - log_z).exp())
            .collect();
        let mut pairwise = vec![0.0; t * t];
        for i in 1..n {
            for x in 0..t {
                let a = alpha[(i - 1) * t + x];
                for y in 0..t {
                    pairwise[x * t + y] +=
                        (a + self.trans(x, y) + self.emit(i, y) + beta[i * t + y] - log_z).exp();
                }
            }
        }
        Marginals {
            log_z,
            unary,
            pairwise,
        }
    }

    /// Best path and its score. Ties resolve toward lower tag indices.
    pub fn viterbi(&self) -> (Vec<usize>, f64) {
        let (n, t) = (self.len, self.tags);
        assert!(n > 0, "empty lattice");
        let mut delta = vec![0.0; n * t];
        let mut back = vec![0usize; n * t];
        for y in 0..t {
            delta[y] = self.start_of(y) + self.emit(0, y);
        }
        for i in 1..n {
            for y in 0..t {
                let mut best = f64::NEG_INFINITY;
                let mut arg = 0;
                for x in 0..t {
                    let s = delta[(i - 1) * t + x] + self.trans(x, y);
                    if s > best {
                        best = s;
                        arg = x;
                    }
                }
                delta[i * t + y] = best + self.emit(i, y);
                back[i * t + y] = arg;
            }
        }
        let mut best = f64::NEG_INFINITY;
        let mut last = 0;
        for y in 0..t {
            let s = delta[(n - 1) * t + y] + self.stop_of(y);
            if s > best {
                best = s;
                last = y;
            }
        }
        let mut path = vec![0; n];
        path[n - 1] = last;
        for i in (1..n).rev() {
            path[i - 1] = back[i * t + path[i]];
        }
        (path, best)
    }
}
