use super::model::dot;
use super::{FactorModel, TrainingConfig};
use crate::dataset::RatingDataset;
use crate::similarity::NeighborWeights;

/// Full-batch gradient, laid out like the model's factor buffers.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorGradient {
    pub users: Vec<f64>,
    pub items: Vec<f64>,
}

fn check_shapes(model: &FactorModel, train: &RatingDataset, weights: &NeighborWeights) {
    assert_eq!(model.n_users(), train.n_users(), "model and ratings disagree on users");
    assert_eq!(model.n_items(), train.n_items(), "model and ratings disagree on items");
    assert_eq!(weights.n_users(), train.n_users(), "weights and ratings disagree on users");
}

/// Value of the training objective: half the squared residuals over observed
/// ratings, plus `alpha/2 * sum_i sum_{f in G(i)} Sim(i,f) |U_i - U_f|^2`, plus
/// the two Frobenius penalties. Pass empty weights (or `alpha = 0`) for the
/// plain MF objective.
///
/// # Panics
/// If the model, ratings and weights do not share one user/item space.
pub fn objective(model: &FactorModel, train: &RatingDataset, weights: &NeighborWeights, config: &TrainingConfig) -> f64 {
    check_shapes(model, train, weights);
    let fit: f64 = train
        .ratings()
        .iter()
        .map(|r| {
            let e = r.value - model.score(r.user, r.item);
            0.5 * e * e
        })
        .sum();

    let mut cluster = 0.0;
    if config.alpha != 0.0 {
        for i in 0..model.n_users() {
            let ui = model.user_factors(i as u32);
            for (f, w) in weights.iter(i) {
                let uf = model.user_factors(f);
                let d2: f64 = ui.iter().zip(uf).map(|(a, b)| (a - b) * (a - b)).sum();
                cluster += w * d2;
            }
        }
    }

    let sq = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
    fit + 0.5 * config.alpha * cluster + 0.5 * config.lambda1 * sq(model.users()) + 0.5 * config.lambda2 * sq(model.items())
}

/// Analytic gradient of [`objective`]. The cluster term contributes
/// `2 * alpha * sum_f Sim(i,f) (U_i - U_f)` to user `i`, since every pair
/// appears once in each direction.
///
/// # Panics
/// As [`objective`].
pub fn gradient(model: &FactorModel, train: &RatingDataset, weights: &NeighborWeights, config: &TrainingConfig) -> FactorGradient {
    check_shapes(model, train, weights);
    let l = model.factors();
    let mut users: Vec<f64> = model.users().iter().map(|u| config.lambda1 * u).collect();
    let mut items: Vec<f64> = model.items().iter().map(|v| config.lambda2 * v).collect();

    for r in train.ratings() {
        let ui = model.user_factors(r.user);
        let vj = model.item_factors(r.item);
        let e = dot(ui, vj) - r.value;
        let gu = &mut users[r.user as usize * l..][..l];
        for (g, v) in gu.iter_mut().zip(vj) {
            *g += e * v;
        }
        let gv = &mut items[r.item as usize * l..][..l];
        for (g, u) in gv.iter_mut().zip(ui) {
            *g += e * u;
        }
    }

    if config.alpha != 0.0 {
        for i in 0..model.n_users() {
            let ui = model.user_factors(i as u32);
            let gu = &mut users[i * l..][..l];
            for (f, w) in weights.iter(i) {
                let uf = model.user_factors(f);
                for d in 0..l {
                    gu[d] += 2.0 * config.alpha * w * (ui[d] - uf[d]);
                }
            }
        }
    }

    FactorGradient { users, items }
}
