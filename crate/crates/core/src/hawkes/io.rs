use std::io::Write;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::basis::{ImpulseBasis, DEFAULT_DT_MAX};
use super::gibbs::{GibbsConfig, PosteriorSummary};
use super::network::HawkesNetwork;
use super::HawkesError;

/// Ground-truth network description read by the simulator.
///
/// ```toml
/// labels = ["a", "b"]
/// lambda0 = [0.01, 0.01]
/// weights = [[0.2, 0.0], [0.4, 0.2]]
/// dt_max = 96
/// basis_edges = [8, 32, 96]
/// impulse = [1.0, 0.0, 0.0]
/// ```
///
/// `dt_max`, `basis_edges` and `impulse` are optional; `impulse` is shared
/// by every edge and defaults to uniform coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub labels: Vec<String>,
    pub lambda0: Vec<f64>,
    pub weights: Vec<Vec<f64>>,
    #[serde(default = "default_dt_max")]
    pub dt_max: usize,
    #[serde(default)]
    pub basis_edges: Option<Vec<usize>>,
    #[serde(default)]
    pub impulse: Option<Vec<f64>>,
}

fn default_dt_max() -> usize {
    DEFAULT_DT_MAX
}

impl NetworkSpec {
    pub fn basis(&self) -> Result<ImpulseBasis, HawkesError> {
        match &self.basis_edges {
            Some(edges) => ImpulseBasis::boxcars(self.dt_max, edges),
            None => ImpulseBasis::default_for(self.dt_max),
        }
    }

    pub fn to_network(&self) -> Result<HawkesNetwork, HawkesError> {
        let k = self.labels.len();
        if self.weights.len() != k || self.weights.iter().any(|r| r.len() != k) {
            return Err(HawkesError::Shape(format!("weights must be {k}x{k}")));
        }
        let weights = Array2::from_shape_fn((k, k), |(a, b)| self.weights[a][b]);
        let basis = self.basis()?;
        let impulse = self
            .impulse
            .clone()
            .unwrap_or_else(|| vec![1.0 / basis.len() as f64; basis.len()]);
        if impulse.len() != basis.len()
            || impulse.iter().any(|&c| c < 0.0)
            || (impulse.iter().sum::<f64>() - 1.0).abs() > 1e-9
        {
            return Err(HawkesError::Config(format!(
                "impulse must be {} nonnegative coefficients summing to 1",
                basis.len()
            )));
        }
        HawkesNetwork::with_shared_kernel(self.labels.clone(), self.lambda0.clone(), weights, &basis, &impulse)
    }
}

pub fn read_network_spec(text: &str) -> Result<NetworkSpec, HawkesError> {
    toml::from_str(text).map_err(|e| HawkesError::Spec(e.to_string()))
}

/// Posterior means as a labelled square table, six decimals per cell.
pub fn write_weight_csv<W: Write>(summary: &PosteriorSummary, out: W) -> Result<(), HawkesError> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| HawkesError::Io(e.into());
    let mut header = vec![String::new()];
    header.extend(summary.labels.iter().cloned());
    w.write_record(&header).map_err(io)?;
    for (a, label) in summary.labels.iter().enumerate() {
        let mut row = vec![label.clone()];
        row.extend(summary.mean_weights.row(a).iter().map(|x| format!("{x:.6}")));
        w.write_record(&row).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CredibleBand {
    pub lower: Vec<Vec<f64>>,
    pub upper: Vec<Vec<f64>>,
}

/// JSON form of a [`PosteriorSummary`] with the settings that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorReport {
    pub labels: Vec<String>,
    pub mean_lambda0: Vec<f64>,
    #[serde(rename = "mean_W")]
    pub mean_w: Vec<Vec<f64>>,
    #[serde(rename = "ci90_W")]
    pub ci90_w: CredibleBand,
    pub mean_impulse: Vec<Vec<f64>>,
    pub n_samples: usize,
    pub config: PosteriorConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorConfig {
    pub dt_max: usize,
    pub basis_edges: Vec<usize>,
    pub gibbs: GibbsConfig,
}

fn rows(m: &Array2<f64>) -> Vec<Vec<f64>> {
    m.rows().into_iter().map(|r| r.to_vec()).collect()
}

impl PosteriorReport {
    pub fn new(summary: &PosteriorSummary, basis: &ImpulseBasis, gibbs: &GibbsConfig) -> Self {
        Self {
            labels: summary.labels.clone(),
            mean_lambda0: summary.mean_lambda0.clone(),
            mean_w: rows(&summary.mean_weights),
            ci90_w: CredibleBand {
                lower: rows(&summary.ci90_lower),
                upper: rows(&summary.ci90_upper),
            },
            mean_impulse: summary.mean_impulse.clone(),
            n_samples: summary.n_samples,
            config: PosteriorConfig {
                dt_max: basis.dt_max(),
                basis_edges: basis.upper_edges().to_vec(),
                gibbs: gibbs.clone(),
            },
        }
    }
}

pub fn write_posterior_json<W: Write>(report: &PosteriorReport, mut out: W) -> Result<(), HawkesError> {
    serde_json::to_writer_pretty(&mut out, report).map_err(|e| HawkesError::Io(e.into()))?;
    out.write_all(b"\n")?;
    Ok(())
}
