//! Log-domain Sinkhorn iterations for grids beyond the exact solver's cap.
//!
//! Results are labelled [`TransportMethod::EntropicApprox`]; the returned
//! value is the transport cost of the regularized plan, which overestimates
//! the exact cost.

use super::{torus_distance, TransportMethod, TransportResult};
use crate::empirical::DiscreteMeasure;
use crate::error::{invalid, Result};

pub fn wp_entropic(mu: &DiscreteMeasure, nu: &DiscreteMeasure, p: f64, reg: f64, iters: usize) -> Result<TransportResult> {
    if !mu.same_grid(nu) {
        return invalid("measures live on different grids");
    }
    if !(p >= 1.0) || !(reg > 0.0) {
        return invalid("need p >= 1 and a positive regularization");
    }
    let src: Vec<usize> = (0..mu.cells()).filter(|&i| mu.weights()[i] > 0.0).collect();
    let dst: Vec<usize> = (0..nu.cells()).filter(|&j| nu.weights()[j] > 0.0).collect();
    let centers: Vec<Vec<f64>> = (0..mu.cells()).map(|c| mu.cell_center(c)).collect();
    let n = dst.len();
    let cost: Vec<f64> = src
        .iter()
        .flat_map(|&i| dst.iter().map(move |&j| (i, j)))
        .map(|(i, j)| torus_distance(&centers[i], &centers[j]).powf(p))
        .collect();
    let log_a: Vec<f64> = src.iter().map(|&i| mu.weights()[i].ln()).collect();
    let log_b: Vec<f64> = dst.iter().map(|&j| nu.weights()[j].ln()).collect();
    let mut f = vec![0.0; src.len()];
    let mut g = vec![0.0; n];
    let lse = |vals: &mut dyn Iterator<Item = f64>| -> f64 {
        let v: Vec<f64> = vals.collect();
        let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
    };
    for _ in 0..iters {
        for (i, fi) in f.iter_mut().enumerate() {
            *fi = -reg * lse(&mut (0..n).map(|j| (g[j] - cost[i * n + j]) / reg)) + reg * log_a[i];
        }
        for (j, gj) in g.iter_mut().enumerate() {
            *gj = -reg * lse(&mut (0..src.len()).map(|i| (f[i] - cost[i * n + j]) / reg)) + reg * log_b[j];
        }
    }
    let mut total = 0.0;
    for i in 0..src.len() {
        for j in 0..n {
            let c = cost[i * n + j];
            total += ((f[i] + g[j] - c) / reg).exp() * c;
        }
    }
    Ok(TransportResult {
        value: total.max(0.0).powf(1.0 / p),
        p,
        method: TransportMethod::EntropicApprox,
        certificate: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wasserstein::wp_discrete;

    #[test]
    fn entropic_upper_approximates_exact() {
        let a = DiscreteMeasure::new(1, 8, vec![0.3, 0.2, 0.0, 0.0, 0.1, 0.1, 0.2, 0.1]).unwrap();
        let b = DiscreteMeasure::uniform(1, 8).unwrap();
        let exact = wp_discrete(&a, &b, 2.0).unwrap().value;
        let approx = wp_entropic(&a, &b, 2.0, 1e-3, 2000).unwrap();
        assert_eq!(approx.method, TransportMethod::EntropicApprox);
        assert!(approx.value >= exact - 1e-9);
        assert!((approx.value - exact).abs() < 0.02, "{} vs {exact}", approx.value);
    }
}
