use serde::{Deserialize, Serialize};

use super::HawkesError;

/// One day of fifteen-minute buckets.
pub const DEFAULT_DT_MAX: usize = 96;

/// Fixed probability mass functions over lags `1..=dt_max`. Impulse kernels
/// are convex combinations of these.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpulseBasis {
    dt_max: usize,
    /// `functions[j][d - 1]` is the mass basis `j` puts on lag `d`.
    functions: Vec<Vec<f64>>,
    /// Inclusive upper lag of each boxcar, when built by [`boxcars`](Self::boxcars).
    upper_edges: Vec<usize>,
}

impl ImpulseBasis {
    /// Uniform boxcars over `1..=e0`, `e0+1..=e1`, ... with `upper_edges`
    /// strictly increasing and the last edge equal to `dt_max`.
    pub fn boxcars(dt_max: usize, upper_edges: &[usize]) -> Result<Self, HawkesError> {
        if dt_max == 0 || upper_edges.is_empty() {
            return Err(HawkesError::Config("basis needs dt_max > 0 and at least one edge".into()));
        }
        if upper_edges.last() != Some(&dt_max) {
            return Err(HawkesError::Config(format!(
                "last basis edge {:?} must equal dt_max {dt_max}",
                upper_edges.last()
            )));
        }
        let mut lo = 1;
        let mut functions = Vec::with_capacity(upper_edges.len());
        for &hi in upper_edges {
            if hi < lo {
                return Err(HawkesError::Config(format!(
                    "basis edges must be strictly increasing, got {upper_edges:?}"
                )));
            }
            let width = (hi - lo + 1) as f64;
            functions.push((1..=dt_max).map(|d| if d >= lo && d <= hi { 1.0 / width } else { 0.0 }).collect());
            lo = hi + 1;
        }
        Ok(Self {
            dt_max,
            functions,
            upper_edges: upper_edges.to_vec(),
        })
    }

    /// Three boxcars: lags 1-8, 9-32 and 33-96 for the default `dt_max` of
    /// 96, scaled proportionally for other windows.
    pub fn default_for(dt_max: usize) -> Result<Self, HawkesError> {
        if dt_max == DEFAULT_DT_MAX {
            return Self::boxcars(dt_max, &[8, 32, 96]);
        }
        let mut edges: Vec<usize> = Vec::new();
        for e in [dt_max / 12, dt_max / 3, dt_max] {
            let floor = edges.last().map_or(1, |&p| p + 1);
            if e >= floor {
                edges.push(e);
            }
        }
        if edges.last() != Some(&dt_max) {
            edges.push(dt_max);
        }
        Self::boxcars(dt_max, &edges)
    }

    pub fn dt_max(&self) -> usize {
        self.dt_max
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn upper_edges(&self) -> &[usize] {
        &self.upper_edges
    }

    /// Mass of basis `j` at lag `d` (1-based).
    pub fn mass(&self, j: usize, d: usize) -> f64 {
        self.functions[j][d - 1]
    }

    /// Kernel `sum_j coefficients[j] * phi_j`, indexed by `lag - 1`.
    pub fn kernel(&self, coefficients: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dt_max];
        for (phi, &c) in self.functions.iter().zip(coefficients) {
            for (dst, &m) in g.iter_mut().zip(phi) {
                *dst += c * m;
            }
        }
        g
    }

    /// Coefficients placing all weight on basis `j`.
    pub fn unit(&self, j: usize) -> Vec<f64> {
        let mut c = vec![0.0; self.len()];
        c[j] = 1.0;
        c
    }
}
