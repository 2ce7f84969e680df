//! Browser demo: tag-interest clustering and MF vs UCMF learning curves on
//! synthetic data with planted taste groups.
//!
//! The `#[wasm_bindgen]` exports return JSON strings; the plain functions
//! behind them return serde structs and are what the native tests call.

use serde::Serialize;
use ucmf::clustering::{kmeans, ClusteringConfig, InterestMatrix};
use ucmf::dataset::{split, RatingDataset, SplitSpec};
use ucmf::evaluation::evaluate;
use ucmf::factorization::{BaselineKind, BaselineModel, SgdTrainer, TrainingConfig};
use ucmf::similarity::build_neighbor_weights;
use ucmf::synthetic::{generate, SyntheticConfig, SyntheticData};
use wasm_bindgen::prelude::*;

#[derive(Debug, Serialize)]
pub struct ClusterView {
    /// `[x, y]` per user: projection of the interest vector on its top two principal axes.
    pub points: Vec<[f64; 2]>,
    pub labels: Vec<usize>,
    /// Planted group of each user.
    pub groups: Vec<usize>,
    /// Distortion after the initial assignment and after every iteration.
    pub trace: Vec<f64>,
    pub sizes: Vec<usize>,
    /// Share of users whose cluster's majority group is their own.
    pub purity: f64,
}

#[derive(Debug, Serialize)]
pub struct Curves {
    pub epochs: usize,
    /// Test RMSE after each epoch.
    pub mf: Vec<f64>,
    pub ucmf: Vec<f64>,
    pub user_mean: f64,
    pub item_mean: f64,
    pub mf_mae: f64,
    pub ucmf_mae: f64,
}

#[derive(Debug, Serialize)]
pub struct AlphaPoint {
    pub alpha: f64,
    pub mae: f64,
    pub rmse: f64,
}

fn data(users: usize, groups: usize, seed: u64) -> Result<SyntheticData, String> {
    if !(20..=2000).contains(&users) || !(1..=8).contains(&groups) {
        return Err("users must lie in 20..=2000 and groups in 1..=8".into());
    }
    generate(&SyntheticConfig {
        users,
        groups,
        seed,
        ..Default::default()
    })
    .map_err(|e| e.to_string())
}

fn split_data(d: &SyntheticData, seed: u64) -> Result<(RatingDataset, RatingDataset), String> {
    split(&d.ratings, &SplitSpec { train_fraction: 0.8, seed }).map_err(|e| e.to_string())
}

/// Top two principal axes of the rows by power iteration with deflation.
fn principal_axes(rows: &[f64], dim: usize) -> [Vec<f64>; 2] {
    let n = rows.len() / dim;
    let mut mean = vec![0.0; dim];
    for r in rows.chunks(dim) {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v / n as f64;
        }
    }
    let mut cov = vec![0.0; dim * dim];
    for r in rows.chunks(dim) {
        for a in 0..dim {
            for b in 0..dim {
                cov[a * dim + b] += (r[a] - mean[a]) * (r[b] - mean[b]);
            }
        }
    }
    let mut axes: [Vec<f64>; 2] = [vec![0.0; dim], vec![0.0; dim]];
    for (k, axis) in axes.iter_mut().enumerate() {
        let mut v: Vec<f64> = (0..dim).map(|i| 1.0 + (i * (k + 3)) as f64 % 7.0).collect();
        for _ in 0..200 {
            let mut w: Vec<f64> = (0..dim).map(|a| (0..dim).map(|b| cov[a * dim + b] * v[b]).sum()).collect();
            let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm < 1e-15 {
                break;
            }
            w.iter_mut().for_each(|x| *x /= norm);
            v = w;
        }
        let lambda: f64 = (0..dim)
            .map(|a| v[a] * (0..dim).map(|b| cov[a * dim + b] * v[b]).sum::<f64>())
            .sum();
        for a in 0..dim {
            for b in 0..dim {
                cov[a * dim + b] -= lambda * v[a] * v[b];
            }
        }
        *axis = v;
    }
    axes
}

pub fn cluster_view(users: usize, groups: usize, k: usize, seed: u64) -> Result<ClusterView, String> {
    let d = data(users, groups, seed)?;
    let interest = InterestMatrix::build(&d.ratings, &d.tags).map_err(|e| e.to_string())?;
    let a = kmeans(&interest, &ClusteringConfig { k, seed, ..Default::default() }).map_err(|e| e.to_string())?;
    let dim = interest.n_tags();
    let axes = principal_axes(interest.normalized(), dim);
    let points = interest
        .normalized()
        .chunks(dim)
        .map(|r| {
            let dot = |axis: &Vec<f64>| r.iter().zip(axis).map(|(x, y)| x * y).sum::<f64>();
            [dot(&axes[0]), dot(&axes[1])]
        })
        .collect();
    let mut agree = 0;
    for members in a.members() {
        let mut counts = vec![0usize; groups];
        for &u in &members {
            counts[d.groups[u as usize]] += 1;
        }
        agree += counts.iter().max().copied().unwrap_or(0);
    }
    Ok(ClusterView {
        points,
        labels: a.labels().to_vec(),
        groups: d.groups.clone(),
        trace: a.trace().to_vec(),
        sizes: a.cluster_sizes(),
        purity: agree as f64 / users as f64,
    })
}

fn demo_training(alpha: f64, epochs: usize, seed: u64) -> TrainingConfig {
    TrainingConfig {
        alpha,
        epochs,
        eta: 0.01,
        seed,
        ..Default::default()
    }
}

pub fn learning_curves(users: usize, k: usize, alpha: f64, epochs: usize, seed: u64) -> Result<Curves, String> {
    if !(1..=500).contains(&epochs) {
        return Err("epochs must lie in 1..=500".into());
    }
    let d = data(users, 4, seed)?;
    let (train, test) = split_data(&d, seed)?;
    let err = |e: ucmf::Error| e.to_string();
    let interest = InterestMatrix::build(&train, &d.tags).map_err(err)?;
    let a = kmeans(&interest, &ClusteringConfig { k, seed, ..Default::default() }).map_err(err)?;
    let weights = build_neighbor_weights(&a, &train).map_err(err)?;
    let cfg = demo_training(alpha, epochs, seed);
    let mut mf = SgdTrainer::mf(&train, &cfg).map_err(err)?;
    let mut uc = SgdTrainer::ucmf(&train, &weights, &cfg).map_err(err)?;
    let (mut mf_curve, mut uc_curve) = (Vec::with_capacity(epochs), Vec::with_capacity(epochs));
    for _ in 0..epochs {
        mf.run_epoch().map_err(err)?;
        uc.run_epoch().map_err(err)?;
        mf_curve.push(evaluate(mf.model(), &test).map_err(err)?.rmse);
        uc_curve.push(evaluate(uc.model(), &test).map_err(err)?.rmse);
    }
    let baseline = |kind| -> Result<f64, String> {
        let m = BaselineModel::train(&train, kind).map_err(err)?;
        Ok(evaluate(&m, &test).map_err(err)?.rmse)
    };
    Ok(Curves {
        epochs,
        user_mean: baseline(BaselineKind::UserMean)?,
        item_mean: baseline(BaselineKind::ItemMean)?,
        mf_mae: evaluate(mf.model(), &test).map_err(err)?.mae,
        ucmf_mae: evaluate(uc.model(), &test).map_err(err)?.mae,
        mf: mf_curve,
        ucmf: uc_curve,
    })
}

/// UCMF test error over a log grid of alpha, on one split and one clustering.
pub fn alpha_curve(users: usize, k: usize, epochs: usize, seed: u64) -> Result<Vec<AlphaPoint>, String> {
    let d = data(users, 4, seed)?;
    let (train, test) = split_data(&d, seed)?;
    let err = |e: ucmf::Error| e.to_string();
    let interest = InterestMatrix::build(&train, &d.tags).map_err(err)?;
    let a = kmeans(&interest, &ClusteringConfig { k, seed, ..Default::default() }).map_err(err)?;
    let weights = build_neighbor_weights(&a, &train).map_err(err)?;
    let mut out = Vec::new();
    for e in -5..=0 {
        let alpha = 10f64.powi(e);
        let model = ucmf::factorization::train_ucmf(&train, &weights, &demo_training(alpha, epochs, seed)).map_err(err)?;
        let m = evaluate(&model, &test).map_err(err)?;
        out.push(AlphaPoint {
            alpha,
            mae: m.mae,
            rmse: m.rmse,
        });
    }
    Ok(out)
}

fn to_json<T: Serialize>(r: Result<T, String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
        .and_then(|v| serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string())))
}

#[wasm_bindgen(js_name = clusterUsers)]
pub fn cluster_users(users: usize, groups: usize, k: usize, seed: u32) -> Result<String, JsError> {
    to_json(cluster_view(users, groups, k, seed as u64))
}

#[wasm_bindgen(js_name = trainCurves)]
pub fn train_curves(users: usize, k: usize, alpha: f64, epochs: usize, seed: u32) -> Result<String, JsError> {
    to_json(learning_curves(users, k, alpha, epochs, seed as u64))
}

#[wasm_bindgen(js_name = alphaSweep)]
pub fn alpha_sweep(users: usize, k: usize, epochs: usize, seed: u32) -> Result<String, JsError> {
    to_json(alpha_curve(users, k, epochs, seed as u64))
}
