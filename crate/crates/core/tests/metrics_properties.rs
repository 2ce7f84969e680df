use proptest::prelude::*;
use ucmf::dataset::{Rating, RatingDataset};
use ucmf::evaluation::{evaluate, mae, rmse};
use ucmf::factorization::Predictor;

fn pairs() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (1usize..300).prop_flat_map(|n| {
        (
            proptest::collection::vec(-10.0f64..10.0, n),
            proptest::collection::vec(-10.0f64..10.0, n),
        )
    })
}

proptest! {
    #[test]
    fn match_one_line_definitions((p, t) in pairs()) {
        let n = p.len() as f64;
        let naive_mae = p.iter().zip(&t).map(|(a, b)| (a - b).abs()).sum::<f64>() / n;
        let naive_rmse = (p.iter().zip(&t).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / n).sqrt();
        prop_assert!((mae(&p, &t).unwrap() - naive_mae).abs() <= 1e-12);
        prop_assert!((rmse(&p, &t).unwrap() - naive_rmse).abs() <= 1e-12);
    }

    #[test]
    fn rmse_dominates_mae((p, t) in pairs()) {
        prop_assert!(rmse(&p, &t).unwrap() >= mae(&p, &t).unwrap() - 1e-12);
    }

    #[test]
    fn predictions_are_clamped_before_scoring(value in -20.0f64..20.0, truth in 1u8..=5) {
        struct Constant(f64);
        impl Predictor for Constant {
            fn predict(&self, _: u32, _: u32) -> f64 {
                self.0
            }
        }
        let test = RatingDataset::from_dense(1, 1, vec![Rating { user: 0, item: 0, value: truth as f64 }]).unwrap();
        let m = evaluate(&Constant(value), &test).unwrap();
        let want = (value.clamp(1.0, 5.0) - truth as f64).abs();
        prop_assert!((m.mae - want).abs() < 1e-12);
        prop_assert_eq!(m.tested, 1);
    }
}

#[test]
fn perfect_predictions_score_zero() {
    let v = [1.0, 2.5, 5.0];
    assert_eq!(mae(&v, &v).unwrap(), 0.0);
    assert_eq!(rmse(&v, &v).unwrap(), 0.0);
}
