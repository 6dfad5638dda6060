//! Symbolic-regression benchmark: eight synthetic two-variable equations,
//! deterministic dataset generation with a 75/25 split, and the toy study
//! with R²-success and mean-rank aggregation.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{AnyModel, ModelKind};
use crate::nn::{mse, predict, r_squared, train_supervised, TrainConfig};
use crate::util::{median, ranks};

/// Uniform sampling range per input variable; keeps every corpus equation
/// well-defined (logarithms, division, positive power-term inputs).
pub const SAMPLE_LO: f64 = 0.5;
pub const SAMPLE_HI: f64 = 3.0;
pub const DEFAULT_N: usize = 2000;
/// Fraction of rows used for training; the rest are the test split.
pub const TRAIN_FRACTION: f64 = 0.75;

pub struct CorpusEntry {
    pub id: &'static str,
    pub f: fn(f64, f64) -> f64,
    /// Laurent-polynomial target — the function class power-term networks
    /// represent natively.
    pub lp: bool,
}

/// The eight benchmark equations: two additive trigonometric rows, two
/// Laurent-polynomial rows, and four rows mixing multiplication with
/// non-polynomial functions.
pub const CORPUS: [CorpusEntry; 8] = [
    CorpusEntry {
        id: "sin(x1)+x2",
        f: |x1, x2| x1.sin() + x2,
        lp: false,
    },
    CorpusEntry {
        id: "sin(x1)+sin(x2)",
        f: |x1, x2| x1.sin() + x2.sin(),
        lp: false,
    },
    CorpusEntry {
        id: "x1*x2^2",
        f: |x1, x2| x1 * x2 * x2,
        lp: true,
    },
    CorpusEntry {
        id: "2*x1+3*x2^2+x1*x2",
        f: |x1, x2| 2.0 * x1 + 3.0 * x2 * x2 + x1 * x2,
        lp: true,
    },
    CorpusEntry {
        id: "sin(x1*x2)",
        f: |x1, x2| (x1 * x2).sin(),
        lp: false,
    },
    CorpusEntry {
        id: "sin(x1*x2)+x1",
        f: |x1, x2| (x1 * x2).sin() + x1,
        lp: false,
    },
    CorpusEntry {
        id: "x1*x2^2+sin(x1)",
        f: |x1, x2| x1 * x2 * x2 + x1.sin(),
        lp: false,
    },
    CorpusEntry {
        id: "ln(x1*x2+x1)",
        f: |x1, x2| (x1 * x2 + x1).ln(),
        lp: false,
    },
];

pub fn corpus_ids() -> Vec<&'static str> {
    CORPUS.iter().map(|e| e.id).collect()
}

fn corpus_entry(id: &str) -> Result<&'static CorpusEntry> {
    CORPUS
        .iter()
        .find(|e| e.id == id)
        .ok_or_else(|| Error::UnknownDataset(id.to_string(), corpus_ids().join(", ")))
}

/// One synthetic dataset: feature columns, exact targets, and a seeded
/// 75/25 train/test split.
#[derive(Debug, Clone)]
pub struct SrDataset {
    pub name: &'static str,
    pub features: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
    pub lp: bool,
    pub train_idx: Vec<usize>,
    pub test_idx: Vec<usize>,
}

impl SrDataset {
    fn select(&self, idx: &[usize]) -> (Vec<Vec<f64>>, Vec<f64>) {
        let cols = self
            .features
            .iter()
            .map(|c| idx.iter().map(|&i| c[i]).collect())
            .collect();
        let t = idx.iter().map(|&i| self.targets[i]).collect();
        (cols, t)
    }

    pub fn train_split(&self) -> (Vec<Vec<f64>>, Vec<f64>) {
        self.select(&self.train_idx)
    }

    pub fn test_split(&self) -> (Vec<Vec<f64>>, Vec<f64>) {
        self.select(&self.test_idx)
    }
}

/// Samples `n` points per variable uniformly over [0.5, 3], evaluates the
/// ground-truth equation exactly, and splits 75/25; deterministic per seed.
pub fn generate_dataset(id: &str, n: usize, seed: u64) -> Result<SrDataset> {
    let entry = corpus_entry(id)?;
    if n == 0 {
        return Err(Error::Empty(1));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x1: Vec<f64> = (0..n).map(|_| rng.gen_range(SAMPLE_LO..SAMPLE_HI)).collect();
    let x2: Vec<f64> = (0..n).map(|_| rng.gen_range(SAMPLE_LO..SAMPLE_HI)).collect();
    let targets: Vec<f64> = x1.iter().zip(&x2).map(|(&a, &b)| (entry.f)(a, b)).collect();
    // Generation-time exactness check: targets are the ground truth, not an
    // approximation of it.
    debug_assert!(targets
        .iter()
        .zip(x1.iter().zip(&x2))
        .all(|(&t, (&a, &b))| t == (entry.f)(a, b)));
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng);
    let n_train = ((n as f64) * TRAIN_FRACTION).round() as usize;
    let (train, test) = idx.split_at(n_train.clamp(1, n - (n > 1) as usize));
    Ok(SrDataset {
        name: entry.id,
        features: vec![x1, x2],
        targets,
        lp: entry.lp,
        train_idx: train.to_vec(),
        test_idx: test.to_vec(),
    })
}

/// One (dataset, model, seed) run of the toy study.
#[derive(Debug, Clone)]
pub struct BenchCell {
    pub dataset: &'static str,
    pub model: ModelKind,
    pub seed: u64,
    pub mse: Option<f64>,
    pub r2: Option<f64>,
    pub note: String,
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub datasets: Vec<&'static str>,
    pub lp: Vec<bool>,
    pub kinds: Vec<ModelKind>,
    pub cells: Vec<BenchCell>,
    /// Median over seeds, indexed `[dataset][kind]`; NaN where every seed
    /// failed.
    pub median_mse: Vec<Vec<f64>>,
    pub median_r2: Vec<Vec<f64>>,
    /// Percentage of datasets with median R² > 0.99, per kind.
    pub r2_success_pct: Vec<f64>,
    pub mean_rank_all: Vec<f64>,
    pub mean_rank_lp: Vec<f64>,
    pub mean_rank_non_lp: Vec<f64>,
}

/// Median/rank/success aggregation over per-run cells. Failed cells keep
/// NaN medians and rank worst, so means stay comparable across models.
pub fn aggregate(
    datasets: &[&'static str],
    lp: &[bool],
    kinds: &[ModelKind],
    cells: Vec<BenchCell>,
) -> BenchReport {
    let mut median_mse = Vec::with_capacity(datasets.len());
    let mut median_r2 = Vec::with_capacity(datasets.len());
    for &ds in datasets {
        let mut mse_row = Vec::with_capacity(kinds.len());
        let mut r2_row = Vec::with_capacity(kinds.len());
        for &kind in kinds {
            let mses: Vec<f64> = cells
                .iter()
                .filter(|c| c.dataset == ds && c.model == kind)
                .filter_map(|c| c.mse)
                .collect();
            let r2s: Vec<f64> = cells
                .iter()
                .filter(|c| c.dataset == ds && c.model == kind)
                .filter_map(|c| c.r2)
                .collect();
            mse_row.push(if mses.is_empty() { f64::NAN } else { median(&mses) });
            r2_row.push(if r2s.is_empty() { f64::NAN } else { median(&r2s) });
        }
        median_mse.push(mse_row);
        median_r2.push(r2_row);
    }
    let r2_success_pct: Vec<f64> = (0..kinds.len())
        .map(|k| {
            let hits = median_r2.iter().filter(|row| row[k] > 0.99).count();
            100.0 * hits as f64 / datasets.len().max(1) as f64
        })
        .collect();
    let mut sums = [vec![0.0; kinds.len()], vec![0.0; kinds.len()], vec![0.0; kinds.len()]];
    let mut counts = [0usize; 3];
    for (row, &is_lp) in median_mse.iter().zip(lp) {
        let r = ranks(row);
        let groups: &[usize] = if is_lp { &[0, 1] } else { &[0, 2] };
        for &gi in groups {
            counts[gi] += 1;
            for (k, v) in r.iter().enumerate() {
                sums[gi][k] += v;
            }
        }
    }
    let mean = |gi: usize| -> Vec<f64> {
        sums[gi]
            .iter()
            .map(|s| s / counts[gi].max(1) as f64)
            .collect()
    };
    BenchReport {
        datasets: datasets.to_vec(),
        lp: lp.to_vec(),
        kinds: kinds.to_vec(),
        mean_rank_all: mean(0),
        mean_rank_lp: mean(1),
        mean_rank_non_lp: mean(2),
        cells,
        median_mse,
        median_r2,
        r2_success_pct,
    }
}

/// Trains every model kind on every corpus equation for every seed and
/// aggregates test MSE / R²; per-run failures are recorded, not fatal.
pub fn run_toy_study(kinds: &[ModelKind], seeds: &[u64], base: &TrainConfig) -> Result<BenchReport> {
    run_toy_study_with(kinds, seeds, base, &mut |_, _, _, _| {})
}

/// [`run_toy_study`] that also hands each successfully trained model to
/// `sink` (for checkpointing or plotting).
pub fn run_toy_study_with(
    kinds: &[ModelKind],
    seeds: &[u64],
    base: &TrainConfig,
    sink: &mut dyn FnMut(&'static str, ModelKind, u64, &AnyModel),
) -> Result<BenchReport> {
    base.validate()?;
    let mut cells = Vec::new();
    for entry in &CORPUS {
        for &kind in kinds {
            for &seed in seeds {
                let cell = match toy_cell(entry.id, kind, seed, base) {
                    Ok((model, m, r)) => {
                        sink(entry.id, kind, seed, &model);
                        BenchCell {
                            dataset: entry.id,
                            model: kind,
                            seed,
                            mse: Some(m),
                            r2: Some(r),
                            note: String::new(),
                        }
                    }
                    Err(e) => BenchCell {
                        dataset: entry.id,
                        model: kind,
                        seed,
                        mse: None,
                        r2: None,
                        note: e.to_string(),
                    },
                };
                cells.push(cell);
            }
        }
    }
    let datasets = corpus_ids();
    let lp: Vec<bool> = CORPUS.iter().map(|e| e.lp).collect();
    Ok(aggregate(&datasets, &lp, kinds, cells))
}

fn toy_cell(id: &str, kind: ModelKind, seed: u64, base: &TrainConfig) -> Result<(AnyModel, f64, f64)> {
    let data = generate_dataset(id, DEFAULT_N, seed)?;
    let (train_x, train_y) = data.train_split();
    let (test_x, test_y) = data.test_split();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut model = AnyModel::new(kind, &train_x, &mut rng);
    let config = TrainConfig {
        seed,
        ..base.clone()
    };
    train_supervised(&mut model, &train_x, &train_y, &config)?;
    let pred = predict(&model, &test_x)?;
    let (m, r) = (mse(&pred, &test_y)?, r_squared(&pred, &test_y)?);
    Ok((model, m, r))
}

/// CSV of per-run results: `dataset,model,seed,mse,r2`.
pub fn bench_csv(report: &BenchReport) -> String {
    let mut out = String::from("dataset,model,seed,mse,r2\n");
    for c in &report.cells {
        let mse = c.mse.map(|m| format!("{m:e}")).unwrap_or_default();
        let r2 = c.r2.map(|r| format!("{r:e}")).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            c.dataset, c.model, c.seed, mse, r2
        ));
    }
    out
}

/// Median test-MSE matrix with the per-row winner starred, followed by the
/// R²-success and mean-rank summary rows.
pub fn bench_table(report: &BenchReport) -> String {
    let mut out = String::new();
    out.push_str(&format!("{:<22}", "dataset"));
    for k in &report.kinds {
        out.push_str(&format!("{:>14}", k.name()));
    }
    out.push('\n');
    for (i, ds) in report.datasets.iter().enumerate() {
        out.push_str(&format!("{ds:<22}"));
        let row = &report.median_mse[i];
        let best = row
            .iter()
            .cloned()
            .filter(|v| v.is_finite())
            .fold(f64::INFINITY, f64::min);
        for &v in row {
            if v.is_finite() {
                let star = if v == best { "*" } else { "" };
                out.push_str(&format!("{:>14}", format!("{v:.3e}{star}")));
            } else {
                out.push_str(&format!("{:>14}", "failed"));
            }
        }
        out.push('\n');
    }
    let summary = [
        ("R2>0.99 (%)", &report.r2_success_pct),
        ("mean rank", &report.mean_rank_all),
        ("mean rank (LP)", &report.mean_rank_lp),
        ("mean rank (non-LP)", &report.mean_rank_non_lp),
    ];
    for (label, row) in summary {
        out.push_str(&format!("{label:<22}"));
        for v in row.iter() {
            out.push_str(&format!("{v:>14.2}"));
        }
        out.push('\n');
    }
    out
}

pub mod plot;
