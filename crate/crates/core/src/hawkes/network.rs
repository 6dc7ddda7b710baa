use ndarray::{Array1, Array2};

use super::basis::ImpulseBasis;
use super::HawkesError;
use crate::events::ProcessSet;

/// Discrete-time mutually exciting network over `K` processes.
///
/// The rate of process `b` at bucket `t` is
/// `lambda0[b] + sum_a sum_{d=1..dt_max} N_a[t-d] * W[a][b] * g_ab[d]`,
/// where `N_a` is the 0/1 event indicator of process `a`.
#[derive(Debug, Clone, PartialEq)]
pub struct HawkesNetwork {
    labels: Vec<String>,
    lambda0: Vec<f64>,
    weights: Array2<f64>,
    dt_max: usize,
    /// `kernels[a * K + b][d - 1]`
    kernels: Vec<Vec<f64>>,
}

const KERNEL_TOL: f64 = 1e-9;

impl HawkesNetwork {
    /// `kernels` are row-major over `(source, target)` pairs, each a mass
    /// function over lags `1..=dt_max`.
    pub fn new(
        labels: Vec<String>,
        lambda0: Vec<f64>,
        weights: Array2<f64>,
        kernels: Vec<Vec<f64>>,
    ) -> Result<Self, HawkesError> {
        let k = labels.len();
        if lambda0.len() != k || weights.dim() != (k, k) || kernels.len() != k * k {
            return Err(HawkesError::Shape(format!(
                "{k} labels, {} rates, {:?} weights, {} kernels",
                lambda0.len(),
                weights.dim(),
                kernels.len()
            )));
        }
        if let Some(r) = lambda0.iter().find(|&&r| !(r > 0.0) || !r.is_finite()) {
            return Err(HawkesError::Config(format!("background rates must be positive, got {r}")));
        }
        if let Some(w) = weights.iter().find(|&&w| !(w >= 0.0) || !w.is_finite()) {
            return Err(HawkesError::Config(format!("weights must be nonnegative, got {w}")));
        }
        let dt_max = kernels.first().map_or(0, Vec::len);
        if dt_max == 0 {
            return Err(HawkesError::Config("kernels must cover at least one lag".into()));
        }
        for (e, g) in kernels.iter().enumerate() {
            let total: f64 = g.iter().sum();
            if g.len() != dt_max || g.iter().any(|&x| x < 0.0) || (total - 1.0).abs() > KERNEL_TOL {
                return Err(HawkesError::Config(format!(
                    "kernel {} -> {} is not a mass function over {dt_max} lags",
                    e / k,
                    e % k
                )));
            }
        }
        Ok(Self {
            labels,
            lambda0,
            weights,
            dt_max,
            kernels,
        })
    }

    /// Builds kernels from `basis` and per-edge `coefficients` (row-major
    /// over `(source, target)`).
    pub fn from_basis(
        labels: Vec<String>,
        lambda0: Vec<f64>,
        weights: Array2<f64>,
        basis: &ImpulseBasis,
        coefficients: &[Vec<f64>],
    ) -> Result<Self, HawkesError> {
        let kernels = coefficients.iter().map(|c| basis.kernel(c)).collect();
        Self::new(labels, lambda0, weights, kernels)
    }

    /// Same kernel coefficients on every edge.
    pub fn with_shared_kernel(
        labels: Vec<String>,
        lambda0: Vec<f64>,
        weights: Array2<f64>,
        basis: &ImpulseBasis,
        coefficients: &[f64],
    ) -> Result<Self, HawkesError> {
        let k = labels.len();
        Self::from_basis(labels, lambda0, weights, basis, &vec![coefficients.to_vec(); k * k])
    }

    pub fn n_processes(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn lambda0(&self) -> &[f64] {
        &self.lambda0
    }

    pub fn weights(&self) -> &Array2<f64> {
        &self.weights
    }

    pub fn dt_max(&self) -> usize {
        self.dt_max
    }

    /// Mass function of lags from `source` to `target`, indexed by `lag - 1`.
    pub fn kernel(&self, source: usize, target: usize) -> &[f64] {
        &self.kernels[source * self.n_processes() + target]
    }

    /// Same network with processes reordered: new process `i` is old process
    /// `order[i]`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        let k = self.n_processes();
        let mut kernels = Vec::with_capacity(k * k);
        for &a in order {
            for &b in order {
                kernels.push(self.kernel(a, b).to_vec());
            }
        }
        Self {
            labels: order.iter().map(|&i| self.labels[i].clone()).collect(),
            lambda0: order.iter().map(|&i| self.lambda0[i]).collect(),
            weights: Array2::from_shape_fn((k, k), |(a, b)| self.weights[[order[a], order[b]]]),
            dt_max: self.dt_max,
            kernels,
        }
    }

    fn check_set(&self, set: &ProcessSet) -> Result<(), HawkesError> {
        if set.n_processes() != self.n_processes() {
            return Err(HawkesError::Shape(format!(
                "network has {} processes, event set has {}",
                self.n_processes(),
                set.n_processes()
            )));
        }
        Ok(())
    }
}

/// Conditional rate of `process` at `bucket` given the events in `set`.
/// Lags reaching before bucket 0 contribute nothing.
pub fn intensity(
    net: &HawkesNetwork,
    set: &ProcessSet,
    process: usize,
    bucket: usize,
) -> Result<f64, HawkesError> {
    net.check_set(set)?;
    if process >= net.n_processes() {
        return Err(HawkesError::IndexOutOfRange(format!("process {process}")));
    }
    if bucket >= set.n_buckets() {
        return Err(HawkesError::IndexOutOfRange(format!("bucket {bucket}")));
    }
    let lo = bucket.saturating_sub(net.dt_max);
    let mut rate = net.lambda0[process];
    for (a, stream) in set.streams().iter().enumerate() {
        let w = net.weights[[a, process]];
        if w == 0.0 {
            continue;
        }
        let g = net.kernel(a, process);
        let ev = &stream.event_buckets;
        let from = ev.partition_point(|&t| t < lo);
        for &t in ev[from..].iter().take_while(|&&t| t < bucket) {
            rate += w * g[bucket - t - 1];
        }
    }
    Ok(rate)
}

/// Poisson log-likelihood of the event indicators, summed over every
/// process and bucket. Returns negative infinity when some event falls on
/// a bucket with zero rate.
pub fn log_likelihood(net: &HawkesNetwork, set: &ProcessSet) -> Result<f64, HawkesError> {
    net.check_set(set)?;
    let k = net.n_processes();
    let n = set.n_buckets();
    // Cumulative kernel mass, cum[e][m] = sum of the first m lags.
    let cum: Vec<Vec<f64>> = net
        .kernels
        .iter()
        .map(|g| {
            std::iter::once(0.0)
                .chain(g.iter().scan(0.0, |acc, &x| {
                    *acc += x;
                    Some(*acc)
                }))
                .collect()
        })
        .collect();

    let mut compensator: f64 = net.lambda0.iter().sum::<f64>() * n as f64;
    for (a, stream) in set.streams().iter().enumerate() {
        for &t in &stream.event_buckets {
            let reach = net.dt_max.min(n - 1 - t);
            for b in 0..k {
                compensator += net.weights[[a, b]] * cum[a * k + b][reach];
            }
        }
    }

    let mut log_rates = 0.0;
    for (b, stream) in set.streams().iter().enumerate() {
        for &t in &stream.event_buckets {
            let rate = intensity(net, set, b, t)?;
            if rate <= 0.0 {
                return Ok(f64::NEG_INFINITY);
            }
            log_rates += rate.ln();
        }
    }
    Ok(log_rates - compensator)
}

/// Largest eigenvalue magnitude of a nonnegative square matrix.
///
/// Power iteration runs on `W + I`, whose Perron root is `rho(W) + 1` and
/// which is aperiodic, so cyclic matrices converge too.
pub fn spectral_radius(weights: &Array2<f64>) -> Result<f64, HawkesError> {
    let (rows, cols) = weights.dim();
    if rows != cols {
        return Err(HawkesError::Shape(format!("matrix is {rows}x{cols}, not square")));
    }
    if rows == 0 {
        return Ok(0.0);
    }
    if weights.iter().any(|&w| !(w >= 0.0)) {
        return Err(HawkesError::Config("spectral radius needs a nonnegative matrix".into()));
    }
    let shifted = weights + &Array2::<f64>::eye(rows);
    let mut x = Array1::from_elem(rows, 1.0 / (rows as f64).sqrt());
    let mut estimate = 0.0;
    for _ in 0..10_000 {
        let y = shifted.dot(&x);
        let norm = y.dot(&y).sqrt();
        let converged = (norm - estimate).abs() < 1e-10;
        estimate = norm;
        x = y / norm;
        if converged {
            break;
        }
    }
    Ok((estimate - 1.0).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::{BucketGrid, EventStream};
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn labels(k: usize) -> Vec<String> {
        (0..k).map(|i| format!("p{i}")).collect()
    }

    fn grid(n: usize) -> BucketGrid {
        BucketGrid::new(0, 900, n).unwrap()
    }

    fn set(n: usize, streams: Vec<Vec<usize>>) -> ProcessSet {
        let streams = streams
            .into_iter()
            .enumerate()
            .map(|(i, e)| EventStream::new(format!("p{i}"), e))
            .collect();
        ProcessSet::new(grid(n), streams).unwrap()
    }

    fn lag_one_net(lambda0: f64, w: f64) -> HawkesNetwork {
        let mut g = vec![0.0; 4];
        g[0] = 1.0;
        HawkesNetwork::new(
            labels(2),
            vec![lambda0; 2],
            Array2::from_elem((2, 2), w),
            vec![g; 4],
        )
        .unwrap()
    }

    #[test]
    fn empty_history_gives_background() {
        let net = lag_one_net(0.3, 0.5);
        let s = set(20, vec![vec![], vec![15]]);
        assert_eq!(intensity(&net, &s, 0, 10).unwrap(), 0.3);
        assert_eq!(intensity(&net, &s, 0, 15).unwrap(), 0.3);
    }

    #[test]
    fn single_lag_one_event() {
        let net = lag_one_net(0.3, 0.5);
        let s = set(20, vec![vec![9], vec![]]);
        assert!((intensity(&net, &s, 1, 10).unwrap() - 0.8).abs() < 1e-15);
        assert_eq!(intensity(&net, &s, 1, 11).unwrap(), 0.3);
        assert!(intensity(&net, &s, 2, 11).is_err());
        assert!(intensity(&net, &s, 1, 20).is_err());
    }

    #[test]
    fn empty_set_likelihood_closed_form() {
        let net = lag_one_net(0.25, 0.1);
        let s = set(40, vec![vec![], vec![]]);
        assert!((log_likelihood(&net, &s).unwrap() - (-2.0 * 40.0 * 0.25)).abs() < 1e-12);
    }

    /// Brute-force Poisson log-likelihood over every (process, bucket).
    fn brute_log_likelihood(net: &HawkesNetwork, s: &ProcessSet) -> f64 {
        let mut ll = 0.0;
        for b in 0..s.n_processes() {
            for t in 0..s.n_buckets() {
                let rate = intensity(net, s, b, t).unwrap();
                let n = s.streams()[b].event_buckets.contains(&t) as u8 as f64;
                ll += n * rate.ln() - rate;
            }
        }
        ll
    }

    #[test]
    fn compensator_shortcut_matches_brute_force() {
        let basis = ImpulseBasis::boxcars(6, &[2, 6]).unwrap();
        let net = HawkesNetwork::with_shared_kernel(
            labels(2),
            vec![0.1, 0.2],
            array![[0.3, 0.1], [0.0, 0.4]],
            &basis,
            &[0.7, 0.3],
        )
        .unwrap();
        let s = set(30, vec![vec![1, 5, 6, 20, 28], vec![0, 7, 29]]);
        let fast = log_likelihood(&net, &s).unwrap();
        assert!((fast - brute_log_likelihood(&net, &s)).abs() < 1e-10);
    }

    #[test]
    fn best_single_event_placement_is_max_intensity() {
        // The placed event lands on a process that excites nothing, so it
        // changes the likelihood only through its own log-rate.
        let basis = ImpulseBasis::boxcars(3, &[1, 3]).unwrap();
        let net = HawkesNetwork::with_shared_kernel(
            labels(2),
            vec![0.05, 0.02],
            array![[0.6, 0.5], [0.0, 0.0]],
            &basis,
            &[0.8, 0.2],
        )
        .unwrap();
        let base = vec![2usize, 3];
        let mut best = (f64::NEG_INFINITY, 0);
        let mut best_rate = (0.0, 0);
        for t in 0..10 {
            let without = set(10, vec![base.clone(), vec![]]);
            let rate = intensity(&net, &without, 1, t).unwrap();
            let ll = log_likelihood(&net, &set(10, vec![base.clone(), vec![t]])).unwrap();
            if ll > best.0 {
                best = (ll, t);
            }
            if rate > best_rate.0 {
                best_rate = (rate, t);
            }
        }
        assert_eq!(best.1, best_rate.1);
        assert_eq!(best.1, 4);
    }

    #[test]
    fn relabeling_invariance() {
        let basis = ImpulseBasis::boxcars(4, &[1, 4]).unwrap();
        let coeffs: Vec<Vec<f64>> = (0..9).map(|e| vec![0.1 * (e % 5) as f64 + 0.1, 0.0]).map(|mut c| {
            c[1] = 1.0 - c[0];
            c
        }).collect();
        let net = HawkesNetwork::from_basis(
            labels(3),
            vec![0.1, 0.2, 0.05],
            array![[0.1, 0.2, 0.0], [0.3, 0.0, 0.1], [0.0, 0.2, 0.2]],
            &basis,
            &coeffs,
        )
        .unwrap();
        let streams = vec![vec![0, 4, 9], vec![2, 3, 15], vec![7]];
        let order = [2, 0, 1];
        let s = set(20, streams.clone());
        let permuted = set(20, order.iter().map(|&i| streams[i].clone()).collect());
        let a = log_likelihood(&net, &s).unwrap();
        let b = log_likelihood(&net.permuted(&order), &permuted).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn intensity_matches_triple_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let basis = ImpulseBasis::boxcars(10, &[3, 10]).unwrap();
        for _ in 0..20 {
            let w = Array2::from_shape_fn((3, 3), |_| rng.random_range(0.0..0.5));
            let coeffs: Vec<Vec<f64>> = (0..9)
                .map(|_| {
                    let c = rng.random::<f64>();
                    vec![c, 1.0 - c]
                })
                .collect();
            let net = HawkesNetwork::from_basis(labels(3), vec![0.1, 0.2, 0.3], w, &basis, &coeffs).unwrap();
            let streams: Vec<Vec<usize>> = (0..3)
                .map(|_| (0..60).filter(|_| rng.random_bool(0.2)).collect())
                .collect();
            let s = set(60, streams.clone());
            for b in 0..3 {
                for t in 0..60 {
                    let mut direct = net.lambda0()[b];
                    for (a, ev) in streams.iter().enumerate() {
                        for d in 1..=10 {
                            if t >= d && ev.contains(&(t - d)) {
                                direct += net.weights()[[a, b]] * net.kernel(a, b)[d - 1];
                            }
                        }
                    }
                    assert!((intensity(&net, &s, b, t).unwrap() - direct).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn spectral_radius_cases() {
        assert!((spectral_radius(&array![[0.5]]).unwrap() - 0.5).abs() < 1e-9);
        assert!((spectral_radius(&array![[0.0, 0.3], [0.3, 0.0]]).unwrap() - 0.3).abs() < 1e-9);
        assert_eq!(spectral_radius(&Array2::zeros((3, 3))).unwrap(), 0.0);
        assert!((spectral_radius(&array![[0.2, 0.4], [0.0, 0.3]]).unwrap() - 0.3).abs() < 1e-6);
        assert!(spectral_radius(&Array2::zeros((2, 3))).is_err());
    }

    #[test]
    fn validation() {
        let g = vec![vec![1.0]];
        assert!(HawkesNetwork::new(labels(1), vec![0.0], array![[0.1]], g.clone()).is_err());
        assert!(HawkesNetwork::new(labels(1), vec![0.1], array![[-0.1]], g.clone()).is_err());
        assert!(HawkesNetwork::new(labels(1), vec![0.1], array![[0.1]], vec![vec![0.5, 0.4]]).is_err());
        assert!(HawkesNetwork::new(labels(2), vec![0.1], array![[0.1]], g).is_err());
    }
}
