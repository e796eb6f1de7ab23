//! Empirical occupation measures of sampled paths.
//!
//! Time averages use the grid points `t_1, ..., t_n` (the start `t_0` is
//! dropped), so each point carries weight `Δ/T = 1/n` and averages over
//! concatenated paths are exactly the length-weighted average of the pieces.

use std::io::Write;

use crate::error::{invalid, Error, Result};
use crate::simulator::Trajectory;
use crate::spectral::{Mode, Parity, SpectralModel, MAX_DIM};

/// Default cap on `grid_n^d` for binned measures.
pub const DEFAULT_CELL_CAP: usize = 4096;

/// Truncated vector of empirical eigenfunction averages `a_i = μ_T(φ_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalSpectrum {
    coeffs: Vec<f64>,
    horizon: f64,
    model_id: u64,
}

impl EmpiricalSpectrum {
    pub fn from_coeffs(model: &SpectralModel, coeffs: Vec<f64>, horizon: f64) -> Result<Self> {
        if coeffs.len() > model.truncation() {
            return Err(Error::CapExceeded {
                what: "spectrum length",
                requested: coeffs.len(),
                cap: model.truncation(),
            });
        }
        Ok(EmpiricalSpectrum {
            coeffs,
            horizon,
            model_id: model.id(),
        })
    }

    /// Spectrum of the Dirac mass at `x0`: `a_i = φ_i(x0)`.
    pub fn point_mass(model: &SpectralModel, x0: &[f64], horizon: f64) -> Result<Self> {
        model.check_point(x0)?;
        let coeffs = model.modes().iter().map(|m| m.eval(x0)).collect();
        Self::from_coeffs(model, coeffs, horizon)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn truncation(&self) -> usize {
        self.coeffs.len()
    }

    pub fn model_id(&self) -> u64 {
        self.model_id
    }

    pub fn check_model(&self, model: &SpectralModel) -> Result<()> {
        if model.id() != self.model_id {
            return invalid("spectrum was computed with a different spectral model");
        }
        Ok(())
    }

    /// `a_i`, counted from 1.
    pub fn coeff(&self, i: usize) -> Result<f64> {
        if i == 0 || i > self.coeffs.len() {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: self.coeffs.len(),
            });
        }
        Ok(self.coeffs[i - 1])
    }

    /// `ψ_i(T) = √T · a_i`.
    pub fn psi(&self, i: usize) -> Result<f64> {
        Ok(self.horizon.sqrt() * self.coeff(i)?)
    }

    /// Coefficients of `f_{T,ε} - 1`: `e^{-λ_i ε} a_i`.
    pub fn mollified_coeffs(&self, model: &SpectralModel, eps: f64) -> Result<Vec<f64>> {
        check_eps(eps)?;
        self.check_model(model)?;
        Ok(self
            .coeffs
            .iter()
            .zip(model.modes())
            .map(|(a, m)| (-m.lambda * eps).exp() * a)
            .collect())
    }

    /// `i, lambda_i, a_i` rows with a header.
    pub fn write_csv<W: Write>(&self, model: &SpectralModel, mut w: W) -> Result<()> {
        self.check_model(model)?;
        writeln!(w, "i,lambda_i,a_i")?;
        for (i, (a, m)) in self.coeffs.iter().zip(model.modes()).enumerate() {
            writeln!(w, "{},{},{}", i + 1, m.lambda, a)?;
        }
        Ok(())
    }
}

/// `ψ_i(T)` of a spectrum.
pub fn psi_functional(spectrum: &EmpiricalSpectrum, i: usize) -> Result<f64> {
    spectrum.psi(i)
}

pub(crate) fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0) || eps.is_nan() {
        return invalid(format!("mollification parameter must be positive, got {eps}"));
    }
    Ok(())
}

struct ModeGroup {
    k: [i32; MAX_DIM],
    cos: Option<usize>,
    sin: Option<usize>,
}

/// Streaming accumulator of `Σ_j φ_i(x_j)` for the first `n` modes.
///
/// Each frequency `k` is evaluated once as `e^{2πik·x}` from per-axis power
/// tables; its real and imaginary parts feed the cosine and sine modes.
pub struct CoefficientAccumulator {
    dim: usize,
    model_id: u64,
    n: usize,
    kmax: usize,
    groups: Vec<ModeGroup>,
    sum_re: Vec<f64>,
    sum_im: Vec<f64>,
    tables: Vec<Vec<(f64, f64)>>,
    count: usize,
}

impl CoefficientAccumulator {
    pub fn new(model: &SpectralModel, n: usize) -> Result<Self> {
        if n == 0 || n > model.truncation() {
            return Err(Error::IndexOutOfRange {
                index: n,
                len: model.truncation(),
            });
        }
        let modes: &[Mode] = &model.modes()[..n];
        let mut groups: Vec<ModeGroup> = Vec::new();
        for (i, m) in modes.iter().enumerate() {
            let g = match groups.last_mut() {
                Some(g) if g.k == m.k => g,
                _ => {
                    groups.push(ModeGroup {
                        k: m.k,
                        cos: None,
                        sin: None,
                    });
                    groups.last_mut().unwrap()
                }
            };
            match m.parity {
                Parity::Cos => g.cos = Some(i),
                Parity::Sin => g.sin = Some(i),
            }
        }
        let kmax = modes
            .iter()
            .flat_map(|m| m.k.iter().map(|c| c.unsigned_abs() as usize))
            .max()
            .unwrap_or(0);
        let d = model.dim();
        Ok(CoefficientAccumulator {
            dim: d,
            model_id: model.id(),
            n,
            kmax,
            sum_re: vec![0.0; groups.len()],
            sum_im: vec![0.0; groups.len()],
            groups,
            tables: vec![vec![(1.0, 0.0); kmax + 1]; d],
            count: 0,
        })
    }

    #[inline]
    pub fn push(&mut self, x: &[f64]) {
        for (c, table) in self.tables.iter_mut().enumerate() {
            let (s, co) = (2.0 * std::f64::consts::PI * x[c]).sin_cos();
            let mut re = 1.0;
            let mut im = 0.0;
            for slot in table.iter_mut().skip(1) {
                let r = re * co - im * s;
                im = re * s + im * co;
                re = r;
                *slot = (re, im);
            }
        }
        for (g, (sr, si)) in self.groups.iter().zip(self.sum_re.iter_mut().zip(self.sum_im.iter_mut())) {
            let mut re = 1.0;
            let mut im = 0.0;
            for (c, table) in self.tables.iter().enumerate() {
                let kc = g.k[c];
                if kc == 0 {
                    continue;
                }
                let (tr, mut ti) = table[kc.unsigned_abs() as usize];
                if kc < 0 {
                    ti = -ti;
                }
                let r = re * tr - im * ti;
                im = re * ti + im * tr;
                re = r;
            }
            *sr += re;
            *si += im;
        }
        self.count += 1;
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// Average over everything pushed so far.
    pub fn finish(&self, horizon: f64) -> EmpiricalSpectrum {
        let scale = std::f64::consts::SQRT_2 / self.count.max(1) as f64;
        let mut coeffs = vec![0.0; self.n];
        for (g, (sr, si)) in self.groups.iter().zip(self.sum_re.iter().zip(&self.sum_im)) {
            if let Some(i) = g.cos {
                coeffs[i] = scale * sr;
            }
            if let Some(i) = g.sin {
                coeffs[i] = scale * si;
            }
        }
        EmpiricalSpectrum {
            coeffs,
            horizon,
            model_id: self.model_id,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_frequency(&self) -> usize {
        self.kmax
    }
}

/// `a_i = (Δ/T) Σ_{j=1}^{n} φ_i(X_{t_j})` for `i = 1..=n`.
///
/// A path with no steps averages its single point.
pub fn spectral_coefficients(traj: &Trajectory, model: &SpectralModel, n: usize) -> Result<EmpiricalSpectrum> {
    if traj.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            found: traj.dim(),
        });
    }
    let mut acc = CoefficientAccumulator::new(model, n)?;
    if traj.step_count() == 0 {
        acc.push(traj.point(0));
    } else {
        for x in traj.points().skip(1) {
            acc.push(x);
        }
    }
    Ok(acc.finish(traj.horizon()))
}

/// Value of the truncated mollified density together with its error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MollifiedValue {
    pub value: f64,
    pub truncation_estimate: f64,
}

/// `f_{T,ε}(y) = 1 + Σ_i e^{-λ_i ε} a_i φ_i(y)` (truncated; may dip below 0).
pub fn mollified_density(
    model: &SpectralModel,
    spectrum: &EmpiricalSpectrum,
    eps: f64,
    y: &[f64],
) -> Result<MollifiedValue> {
    check_eps(eps)?;
    spectrum.check_model(model)?;
    model.check_point(y)?;
    let s: f64 = spectrum
        .coeffs
        .iter()
        .zip(model.modes())
        .map(|(a, m)| (-m.lambda * eps).exp() * a * m.eval(y))
        .sum();
    Ok(MollifiedValue {
        value: 1.0 + s,
        truncation_estimate: model.kernel_truncation_estimate(eps),
    })
}

/// Probability weights on the periodic grid with `grid_n` cells per axis.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    dim: usize,
    grid_n: usize,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(dim: usize, grid_n: usize, weights: Vec<f64>) -> Result<Self> {
        check_grid(dim, grid_n, usize::MAX)?;
        if weights.len() != grid_n.pow(dim as u32) {
            return invalid(format!(
                "expected {} weights, got {}",
                grid_n.pow(dim as u32),
                weights.len()
            ));
        }
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return invalid("weights must be nonnegative");
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return invalid(format!("weights must sum to 1, got {total}"));
        }
        Ok(DiscreteMeasure { dim, grid_n, weights })
    }

    /// `μ` discretized to the grid.
    pub fn uniform(dim: usize, grid_n: usize) -> Result<Self> {
        check_grid(dim, grid_n, usize::MAX)?;
        let cells = grid_n.pow(dim as u32);
        Ok(DiscreteMeasure {
            dim,
            grid_n,
            weights: vec![1.0 / cells as f64; cells],
        })
    }

    pub fn point_mass(dim: usize, grid_n: usize, cell: usize) -> Result<Self> {
        check_grid(dim, grid_n, usize::MAX)?;
        let cells = grid_n.pow(dim as u32);
        if cell >= cells {
            return Err(Error::IndexOutOfRange { index: cell, len: cells });
        }
        let mut weights = vec![0.0; cells];
        weights[cell] = 1.0;
        Ok(DiscreteMeasure { dim, grid_n, weights })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn grid_n(&self) -> usize {
        self.grid_n
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn cells(&self) -> usize {
        self.weights.len()
    }

    /// Cell containing `x`; axis 0 varies fastest.
    pub fn cell_index(&self, x: &[f64]) -> usize {
        cell_index(self.grid_n, x)
    }

    pub fn cell_center(&self, cell: usize) -> Vec<f64> {
        let h = 1.0 / self.grid_n as f64;
        let mut rest = cell;
        (0..self.dim)
            .map(|_| {
                let i = rest % self.grid_n;
                rest /= self.grid_n;
                (i as f64 + 0.5) * h
            })
            .collect()
    }

    pub fn same_grid(&self, other: &DiscreteMeasure) -> bool {
        self.dim == other.dim && self.grid_n == other.grid_n
    }
}

pub(crate) fn cell_index(grid_n: usize, x: &[f64]) -> usize {
    let mut idx = 0;
    for &c in x.iter().rev() {
        let i = ((c * grid_n as f64) as usize).min(grid_n - 1);
        idx = idx * grid_n + i;
    }
    idx
}

fn check_grid(dim: usize, grid_n: usize, cap: usize) -> Result<()> {
    if !(1..=MAX_DIM).contains(&dim) {
        return invalid(format!("dimension must be in 1..={MAX_DIM}, got {dim}"));
    }
    if grid_n < 2 {
        return invalid(format!("grid_n must be at least 2, got {grid_n}"));
    }
    let cells = grid_n.checked_pow(dim as u32).unwrap_or(usize::MAX);
    if cells > cap {
        return Err(Error::CapExceeded {
            what: "grid cells",
            requested: cells,
            cap,
        });
    }
    Ok(())
}

/// Fraction of grid time points `t_1..t_n` falling in each cell.
pub fn bin_measure(traj: &Trajectory, grid_n: usize) -> Result<DiscreteMeasure> {
    bin_measure_capped(traj, grid_n, DEFAULT_CELL_CAP)
}

pub fn bin_measure_capped(traj: &Trajectory, grid_n: usize, cap: usize) -> Result<DiscreteMeasure> {
    let d = traj.dim();
    check_grid(d, grid_n, cap)?;
    let mut counts = vec![0u64; grid_n.pow(d as u32)];
    let skip = usize::from(traj.step_count() > 0);
    let mut n = 0u64;
    for x in traj.points().skip(skip) {
        counts[cell_index(grid_n, x)] += 1;
        n += 1;
    }
    let weights = counts.iter().map(|&c| c as f64 / n as f64).collect();
    Ok(DiscreteMeasure {
        dim: d,
        grid_n,
        weights,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::replica_stream;
    use crate::simulator::{simulate_path, ProcessParams, Start};
    use approx::assert_abs_diff_eq;

    fn constant_path(x0: Vec<f64>, steps: usize) -> Trajectory {
        let d = x0.len();
        let params = ProcessParams {
            alpha: 1.0,
            drift: vec![0.0; d],
            horizon: steps.max(1) as f64 * 0.1,
            step: 0.1,
            start: Start::Point(x0.clone()),
        };
        let positions = x0.iter().copied().cycle().take(d * (steps + 1)).collect();
        Trajectory::from_positions(params, positions, 0).unwrap()
    }

    #[test]
    fn constant_path_reproduces_eigenfunctions() {
        let model = SpectralModel::build(2, 30).unwrap();
        let x0 = vec![0.13, 0.71];
        for steps in [0, 5] {
            let s = spectral_coefficients(&constant_path(x0.clone(), steps), &model, 30).unwrap();
            for i in 1..=30 {
                assert_abs_diff_eq!(s.coeff(i).unwrap(), model.eigenfunction(i, &x0).unwrap(), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn fast_accumulator_matches_direct_evaluation() {
        let model = SpectralModel::build(3, 400).unwrap();
        let p = ProcessParams::symmetric(0.5, 3, 2.0, 0.01).unwrap();
        let tr = simulate_path(&p, &mut replica_stream(2, 0), 2).unwrap();
        let s = spectral_coefficients(&tr, &model, 399).unwrap();
        for i in [1, 2, 57, 200, 398, 399] {
            let direct: f64 =
                tr.points().skip(1).map(|x| model.eigenfunction(i, x).unwrap()).sum::<f64>() / tr.step_count() as f64;
            assert_abs_diff_eq!(s.coeff(i).unwrap(), direct, epsilon = 1e-11);
        }
    }

    #[test]
    fn psi_scales_by_root_horizon() {
        let model = SpectralModel::build(1, 4).unwrap();
        let s = EmpiricalSpectrum::from_coeffs(&model, vec![0.5, 0.0, -0.2, 0.1], 1.0).unwrap();
        assert_eq!(psi_functional(&s, 1).unwrap(), 0.5);
        assert_eq!(psi_functional(&s, 2).unwrap(), 0.0);
        let s = EmpiricalSpectrum::from_coeffs(&model, vec![0.5, 0.0, -0.2, 0.1], 4.0).unwrap();
        assert_eq!(s.psi(3).unwrap(), -0.4);
        assert!(s.psi(5).is_err());
        assert!(s.psi(0).is_err());
    }

    #[test]
    fn mollified_density_limits() {
        let model = SpectralModel::build(1, 40).unwrap();
        let s = EmpiricalSpectrum::point_mass(&model, &[0.3], 1.0).unwrap();
        let v = mollified_density(&model, &s, 5.0, &[0.8]).unwrap();
        assert_abs_diff_eq!(v.value, 1.0, epsilon = 1e-12);
        assert!(mollified_density(&model, &s, 0.0, &[0.8]).is_err());
    }

    #[test]
    fn binning_single_point_and_totals() {
        let tr = constant_path(vec![0.5 / 8.0 + 3.0 / 8.0], 10);
        let m = bin_measure(&tr, 8).unwrap();
        assert_eq!(m.weights()[3], 1.0);
        assert_eq!(m.weights().iter().filter(|w| **w > 0.0).count(), 1);

        let p = ProcessParams::symmetric(0.5, 2, 5.0, 0.01).unwrap();
        let tr = simulate_path(&p, &mut replica_stream(4, 0), 4).unwrap();
        let m = bin_measure(&tr, 16).unwrap();
        assert_abs_diff_eq!(m.weights().iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        assert!(matches!(bin_measure(&tr, 100), Err(Error::CapExceeded { .. })));
        assert!(bin_measure(&tr, 1).is_err());
    }

    #[test]
    fn cell_geometry() {
        let m = DiscreteMeasure::uniform(2, 4).unwrap();
        assert_eq!(m.cell_index(&[0.3, 0.9]), 1 + 3 * 4);
        assert_eq!(m.cell_center(1 + 3 * 4), vec![0.375, 0.875]);
        assert!(DiscreteMeasure::new(1, 2, vec![0.5, 0.6]).is_err());
        assert!(DiscreteMeasure::new(1, 2, vec![1.5, -0.5]).is_err());
    }

    #[test]
    fn spectrum_csv_has_header_and_rows() {
        let model = SpectralModel::build(1, 3).unwrap();
        let s = EmpiricalSpectrum::from_coeffs(&model, vec![0.25, -0.5, 0.0], 2.0).unwrap();
        let mut out = Vec::new();
        s.write_csv(&model, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "i,lambda_i,a_i");
        assert_eq!(lines.len(), 4);
        assert!(lines[2].ends_with(",-0.5"));
    }
}
