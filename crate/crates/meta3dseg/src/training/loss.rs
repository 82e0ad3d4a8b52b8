//! Reconstruction and regularization losses, in pure and graph forms.

use crate::geometry::OccupancySample;
use crate::numerics::{Graph, NodeId, Scalar, Tensor};
use crate::{Error, Result};

/// Mean squared error between predicted occupancies and binary labels:
/// L_R = (1/n) sum (f(x) - f*(x))^2.
pub fn reconstruction_loss<T: Scalar>(
    predictions: &[T],
    samples: &[OccupancySample],
) -> Result<T> {
    if predictions.len() != samples.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} predictions against {} samples",
            predictions.len(),
            samples.len()
        )));
    }
    if samples.is_empty() {
        return Err(Error::InvalidArgument("empty sample list".into()));
    }
    let mut total = T::zero();
    for (&p, s) in predictions.iter().zip(samples) {
        let d = p - T::from_f64(f64::from(s.label));
        total = total + d * d;
    }
    Ok(total / T::from_f64(samples.len() as f64))
}

/// Graph form of [`reconstruction_loss`]; `predictions` is a `[n]` node.
pub fn loss_on_graph<T: Scalar>(
    g: &mut Graph<T>,
    predictions: NodeId,
    labels: &[u8],
) -> Result<NodeId> {
    if g.value(predictions).shape() != [labels.len()] {
        return Err(Error::ShapeMismatch(format!(
            "prediction node {:?} against {} labels",
            g.value(predictions).shape(),
            labels.len()
        )));
    }
    if labels.is_empty() {
        return Err(Error::InvalidArgument("empty label list".into()));
    }
    let targets: Vec<f64> = labels.iter().map(|&l| f64::from(l)).collect();
    let target_node = g.constant(Tensor::from_f64(&[labels.len()], &targets)?);
    let diff = g.sub(predictions, target_node)?;
    let sq = g.mul(diff, diff)?;
    let total = g.sum(sq)?;
    g.scale(total, 1.0 / labels.len() as f64)
}

/// KL(N(mu, sigma^2) || N(0, I)) = 1/2 sum (mu^2 + sigma^2 - log sigma^2 - 1).
pub fn kl_term<T: Scalar>(mu: &[T], log_variance: &[T]) -> Result<T> {
    if mu.len() != log_variance.len() {
        return Err(Error::ShapeMismatch(format!(
            "mu has {} entries, log_variance {}",
            mu.len(),
            log_variance.len()
        )));
    }
    let mut total = T::zero();
    for (&m, &lv) in mu.iter().zip(log_variance) {
        if !(m.is_finite() && lv.is_finite()) {
            return Err(Error::NonFinite("kl inputs".into()));
        }
        total = total + m * m + lv.exp() - lv - T::one();
    }
    Ok(total * T::from_f64(0.5))
}

/// Graph form of [`kl_term`].
pub fn kl_on_graph<T: Scalar>(g: &mut Graph<T>, mu: NodeId, log_variance: NodeId) -> Result<NodeId> {
    let mu_sq = g.mul(mu, mu)?;
    let var = g.exp(log_variance)?;
    let sum_terms = g.add(mu_sq, var)?;
    let minus_lv = g.sub(sum_terms, log_variance)?;
    let shifted = g.add_scalar(minus_lv, -1.0)?;
    let total = g.sum(shifted)?;
    g.scale(total, 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn samples(labels: &[u8]) -> Vec<OccupancySample> {
        labels
            .iter()
            .map(|&label| OccupancySample {
                point: [0.0; 3],
                label,
            })
            .collect()
    }

    #[test]
    fn perfect_predictions_have_zero_loss() {
        let s = samples(&[1, 0, 1]);
        let loss = reconstruction_loss(&[1.0f64, 0.0, 1.0], &s).unwrap();
        assert_eq!(loss, 0.0);
    }

    #[test]
    fn coin_flip_predictions_lose_a_quarter() {
        let s = samples(&[1, 0, 0, 1]);
        let loss = reconstruction_loss(&[0.5f64; 4], &s).unwrap();
        assert_eq!(loss, 0.25);
    }

    #[test]
    fn two_point_example() {
        let s = samples(&[1, 0]);
        let loss = reconstruction_loss(&[0.9f64, 0.2], &s).unwrap();
        assert!((loss - 0.025).abs() < 1e-15, "loss = {loss}");
    }

    #[test]
    fn misaligned_or_empty_inputs_error() {
        assert!(reconstruction_loss(&[0.5f64], &samples(&[1, 0])).is_err());
        assert!(reconstruction_loss::<f64>(&[], &[]).is_err());
    }

    #[test]
    fn graph_loss_matches_pure_loss_and_has_the_right_gradient() {
        let labels = [1u8, 0, 1, 0, 1];
        let preds = [0.9f64, 0.3, 0.4, 0.1, 0.75];
        let mut g: Graph<f64> = Graph::new();
        let p = g.leaf(Tensor::from_f64(&[5], &preds).unwrap(), true);
        let loss = loss_on_graph(&mut g, p, &labels).unwrap();
        let pure = reconstruction_loss(&preds, &samples(&labels)).unwrap();
        assert!((g.value(loss).item().unwrap() - pure).abs() < 1e-15);

        // d/dp of (1/n) sum (p - y)^2 is 2 (p - y) / n.
        let grads = g.backward(loss).unwrap();
        for (i, &grad) in grads.get(p).unwrap().data().iter().enumerate() {
            let expected = 2.0 * (preds[i] - f64::from(labels[i])) / 5.0;
            assert!((grad - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn kl_matches_closed_forms() {
        assert_eq!(kl_term(&[0.0f64; 3], &[0.0; 3]).unwrap(), 0.0);
        assert_eq!(kl_term(&[1.0f64], &[0.0]).unwrap(), 0.5);
        let expected = 0.5 * (2.0 - std::f64::consts::LN_2 - 1.0);
        let got = kl_term(&[0.0f64], &[std::f64::consts::LN_2]).unwrap();
        assert!((got - expected).abs() < 1e-15);
        assert!((got - 0.153_426_409_720_027_35).abs() < 1e-15);
    }

    #[test]
    fn kl_rejects_bad_inputs() {
        assert!(kl_term(&[0.0f64], &[0.0, 1.0]).is_err());
        assert!(kl_term(&[f64::INFINITY], &[0.0]).is_err());
    }

    #[test]
    fn graph_kl_matches_pure_kl_and_mu_gradient_is_mu() {
        let mu = [0.3f64, -0.8, 1.1];
        let lv = [0.2f64, -0.4, 0.0];
        let mut g: Graph<f64> = Graph::new();
        let mu_node = g.leaf(Tensor::from_f64(&[3], &mu).unwrap(), true);
        let lv_node = g.leaf(Tensor::from_f64(&[3], &lv).unwrap(), true);
        let kl = kl_on_graph(&mut g, mu_node, lv_node).unwrap();
        let pure = kl_term(&mu, &lv).unwrap();
        assert!((g.value(kl).item().unwrap() - pure).abs() < 1e-14);

        let grads = g.backward(kl).unwrap();
        for (&grad, &m) in grads.get(mu_node).unwrap().data().iter().zip(&mu) {
            assert!((grad - m).abs() < 1e-14);
        }
        // d/d lv of 1/2 (exp(lv) - lv) is (exp(lv) - 1) / 2.
        for (&grad, &l) in grads.get(lv_node).unwrap().data().iter().zip(&lv) {
            assert!((grad - 0.5 * (l.exp() - 1.0)).abs() < 1e-14);
        }
    }
}
