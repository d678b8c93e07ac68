//! Portfolio weights scored by Sharpe ratio over historical daily prices.

use std::io::Write;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};

use crate::diversity::Diversity;
use crate::error::{Error, Result};
use crate::problems::Problem;
use crate::space::SearchSpace;

/// Returned in place of the ratio when the return series has zero variance.
pub const ZERO_VOL_SHARPE: f64 = 1e6;

const TRADING_DAYS: f64 = 252.0;

#[derive(Debug, Clone)]
pub struct PortfolioProblem {
    pub assets: Vec<String>,
    /// `prices[t][j]`: closing price of asset `j` on day `t`.
    pub prices: Vec<Vec<f64>>,
    space: SearchSpace,
}

impl PortfolioProblem {
    pub fn new(assets: Vec<String>, prices: Vec<Vec<f64>>) -> Result<Self> {
        if assets.is_empty() {
            return Err(Error::InvalidConfig("portfolio needs at least one asset".into()));
        }
        if prices.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "portfolio needs at least 2 days of prices, got {}",
                prices.len()
            )));
        }
        for (t, row) in prices.iter().enumerate() {
            if row.len() != assets.len() {
                return Err(Error::DimensionMismatch {
                    expected: assets.len(),
                    got: row.len(),
                });
            }
            if let Some(j) = row.iter().position(|&p| !(p.is_finite() && p > 0.0)) {
                return Err(Error::InvalidConfig(format!(
                    "price of asset {j} on day {t} must be positive"
                )));
            }
        }
        let space = SearchSpace::unit(assets.len());
        Ok(Self {
            assets,
            prices,
            space,
        })
    }

    pub fn n_assets(&self) -> usize {
        self.assets.len()
    }

    pub fn n_days(&self) -> usize {
        self.prices.len()
    }
}

/// Clamps to non-negative and rescales to sum one; all-zero maps to uniform.
pub fn normalize_weights(w: &[f64]) -> Vec<f64> {
    let clamped: Vec<f64> = w.iter().map(|v| v.max(0.0)).collect();
    let total: f64 = clamped.iter().sum();
    if total > 0.0 {
        clamped.iter().map(|v| v / total).collect()
    } else {
        vec![1.0 / w.len() as f64; w.len()]
    }
}

/// `ROI / (σ √252)` of the buy-and-hold portfolio with weights `w`, where σ
/// is the population standard deviation of daily returns.
pub fn sharpe_objective(w: &[f64], prob: &PortfolioProblem) -> Result<f64> {
    if w.len() != prob.n_assets() {
        return Err(Error::DimensionMismatch {
            expected: prob.n_assets(),
            got: w.len(),
        });
    }
    if prob.n_days() < 2 {
        return Err(Error::InsufficientData("need at least 2 days of prices".into()));
    }
    let w = normalize_weights(w);
    let base = &prob.prices[0];
    let values: Vec<f64> = prob
        .prices
        .iter()
        .map(|row| {
            row.iter()
                .zip(base)
                .zip(&w)
                .map(|((p, p0), wj)| wj * p / p0)
                .sum()
        })
        .collect();
    let roi = values[values.len() - 1] / values[0] - 1.0;
    let returns: Vec<f64> = values.windows(2).map(|v| v[1] / v[0] - 1.0).collect();
    let n = returns.len() as f64;
    let mean = returns.iter().sum::<f64>() / n;
    let sigma = (returns.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n).sqrt();
    if sigma <= 1e-15 {
        return Ok(if roi > 0.0 {
            ZERO_VOL_SHARPE
        } else if roi < 0.0 {
            -ZERO_VOL_SHARPE
        } else {
            0.0
        });
    }
    Ok(roi / (sigma * TRADING_DAYS.sqrt()))
}

/// Asset indices by descending weight, lower index first on ties.
fn holdings_order(w: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..w.len()).collect();
    idx.sort_by(|&a, &b| w[b].partial_cmp(&w[a]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b)));
    idx
}

/// Largest `k` for which the top-`k` holdings of the two portfolios share
/// no asset.
pub fn topk_disjoint_diversity(w1: &[f64], w2: &[f64]) -> usize {
    assert_eq!(w1.len(), w2.len(), "portfolios must have equal length");
    let (o1, o2) = (holdings_order(w1), holdings_order(w2));
    let n = w1.len();
    let mut in1 = vec![false; n];
    let mut in2 = vec![false; n];
    for k in 0..n {
        let (a, b) = (o1[k], o2[k]);
        in1[a] = true;
        in2[b] = true;
        if in2[a] || in1[b] {
            return k;
        }
    }
    n
}

#[derive(Debug, Clone, Copy, Default)]
pub struct TopKDisjoint;

impl Diversity for TopKDisjoint {
    fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        topk_disjoint_diversity(a, b) as f64
    }

    fn name(&self) -> &str {
        "topk"
    }
}

impl Problem for PortfolioProblem {
    fn name(&self) -> &str {
        "portfolio"
    }

    fn space(&self) -> &SearchSpace {
        &self.space
    }

    fn evaluate(&self, x: &[f64]) -> Result<f64> {
        self.space.check_point(x)?;
        sharpe_objective(x, self)
    }
}

/// Reads a price table: a header row of asset identifiers followed by one
/// row of positive prices per trading day, oldest first.
///
/// Errors name the 1-based file row (the header is row 1) and column.
pub fn load_prices(path: impl AsRef<Path>) -> Result<PortfolioProblem> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let assets: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    let mut prices = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 2;
        let record = record.map_err(|e| Error::Parse {
            row,
            column: 0,
            message: e.to_string(),
        })?;
        if record.len() != assets.len() {
            return Err(Error::Parse {
                row,
                column: record.len().min(assets.len()) + 1,
                message: format!("expected {} cells, found {}", assets.len(), record.len()),
            });
        }
        let values = record
            .iter()
            .enumerate()
            .map(|(j, cell)| {
                let parse_err = |message: String| Error::Parse {
                    row,
                    column: j + 1,
                    message,
                };
                if cell.is_empty() {
                    return Err(parse_err("missing value".into()));
                }
                let v: f64 = cell
                    .parse()
                    .map_err(|_| parse_err(format!("`{cell}` is not a number")))?;
                if !(v.is_finite() && v > 0.0) {
                    return Err(parse_err(format!("price must be positive, got {cell}")));
                }
                Ok(v)
            })
            .collect::<Result<Vec<f64>>>()?;
        prices.push(values);
    }
    PortfolioProblem::new(assets, prices)
}

/// Geometric-Brownian price paths with per-asset drift and volatility.
/// Returns asset names and `days` rows of prices starting at 100.
pub fn generate_gbm_prices(days: usize, assets: usize, seed: u64) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let drift = Uniform::new(-0.0005, 0.0015);
    let vol = Uniform::new(0.005, 0.03);
    let params: Vec<(f64, f64)> = (0..assets)
        .map(|_| (drift.sample(&mut rng), vol.sample(&mut rng)))
        .collect();
    let names = (0..assets).map(|j| format!("A{j:03}")).collect();
    let mut rows = Vec::with_capacity(days);
    let mut current = vec![100.0; assets];
    for t in 0..days {
        if t > 0 {
            for (p, &(mu, sigma)) in current.iter_mut().zip(&params) {
                let z: f64 = Normal::new(0.0, 1.0).expect("unit normal").sample(&mut rng);
                *p *= (mu - 0.5 * sigma * sigma + sigma * z).exp();
            }
        }
        rows.push(current.clone());
    }
    (names, rows)
}

pub fn write_prices_csv(path: impl AsRef<Path>, assets: &[String], prices: &[Vec<f64>]) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "{}", assets.join(","))?;
    for row in prices {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        writeln!(out, "{}", cells.join(","))?;
    }
    out.flush()?;
    Ok(())
}
