#![allow(dead_code)]

use minilp::{ComparisonOp, OptimizationDirection, Problem};

/// Kolmogorov tail `P(K > x)`.
pub fn kolmogorov_tail(x: f64) -> f64 {
    if x < 0.2 {
        return 1.0;
    }
    let s: f64 = (1..=100)
        .map(|k| {
            let k = k as f64;
            let sign = if k as u64 % 2 == 1 { 1.0 } else { -1.0 };
            sign * (-2.0 * k * k * x * x).exp()
        })
        .sum();
    (2.0 * s).clamp(0.0, 1.0)
}

/// One-sample KS statistic of `values` against the uniform law on `[0,1)`.
pub fn ks_uniform(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len() as f64;
    values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let lo = v - i as f64 / n;
            let hi = (i as f64 + 1.0) / n - v;
            lo.max(hi)
        })
        .fold(0.0, f64::max)
}

/// Two-sample KS statistic.
pub fn ks_two_sample(a: &mut [f64], b: &mut [f64]) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Optimal transport cost by a generic LP over all couplings.
pub fn lp_transport(supply: &[f64], demand: &[f64], cost: impl Fn(usize, usize) -> f64) -> f64 {
    let mut pb = Problem::new(OptimizationDirection::Minimize);
    let m = demand.len();
    let vars: Vec<_> = (0..supply.len())
        .flat_map(|i| (0..m).map(move |j| (i, j)))
        .map(|(i, j)| pb.add_var(cost(i, j), (0.0, f64::INFINITY)))
        .collect();
    for (i, &s) in supply.iter().enumerate() {
        let row: Vec<_> = (0..m).map(|j| (vars[i * m + j], 1.0)).collect();
        pb.add_constraint(row.as_slice(), ComparisonOp::Eq, s);
    }
    for (j, &d) in demand.iter().enumerate().skip(1) {
        let col: Vec<_> = (0..supply.len()).map(|i| (vars[i * m + j], 1.0)).collect();
        pb.add_constraint(col.as_slice(), ComparisonOp::Eq, d);
    }
    pb.solve().expect("lp").objective()
}

/// Signed displacement on the circle, in `(-1/2, 1/2]`.
pub fn circle_delta(a: f64, b: f64) -> f64 {
    let mut d = b - a;
    d -= d.round();
    d
}

pub fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}
