//! Spectral models of the flat unit torus `[0,1)^d`.
//!
//! The generator is the Laplacian `L = Δ`, so the nonzero eigenvalues of `-L`
//! are `λ = 4π²|k|²` for lattice vectors `k ∈ Z^d \ {0}`. Each frequency pair
//! `±k` carries two real orthonormal eigenfunctions `√2 cos(2πk·x)` and
//! `√2 sin(2πk·x)`; the constant eigenfunction is never stored.

use std::cmp::Ordering;
use std::f64::consts::{PI, SQRT_2};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Error, Result};

/// Largest supported torus dimension.
pub const MAX_DIM: usize = 4;

/// Memory cap on the number of stored eigenpairs.
pub const MAX_EIGENPAIRS: usize = 200_000;

/// Truncation estimate above which the spectral heat kernel refuses to answer.
pub const SPECTRAL_KERNEL_TOL: f64 = 1e-6;

/// Below this time the automatic heat-kernel method uses the image sum.
pub const IMAGE_METHOD_MAX_T: f64 = 0.05;

const FOUR_PI_SQ: f64 = 4.0 * PI * PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Parity {
    Cos,
    Sin,
}

/// One real eigenpair of `-Δ` on the torus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    /// Canonical lattice representative (first nonzero coordinate positive);
    /// entries beyond the model dimension are zero.
    pub k: [i32; MAX_DIM],
    pub norm_sq: u64,
    pub parity: Parity,
    pub lambda: f64,
}

impl Mode {
    fn new(k: [i32; MAX_DIM], parity: Parity) -> Self {
        let norm_sq = k.iter().map(|&c| (c as i64 * c as i64) as u64).sum::<u64>();
        Mode {
            k,
            norm_sq,
            parity,
            lambda: FOUR_PI_SQ * norm_sq as f64,
        }
    }

    #[inline]
    pub fn phase(&self, x: &[f64]) -> f64 {
        2.0 * PI
            * x.iter()
                .zip(self.k.iter())
                .map(|(xi, &ki)| ki as f64 * xi)
                .sum::<f64>()
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        let ph = self.phase(x);
        match self.parity {
            Parity::Cos => SQRT_2 * ph.cos(),
            Parity::Sin => SQRT_2 * ph.sin(),
        }
    }

    /// Gradient of the eigenfunction, written into `out`.
    pub fn grad(&self, x: &[f64], out: &mut [f64]) {
        let ph = self.phase(x);
        let s = match self.parity {
            Parity::Cos => -SQRT_2 * 2.0 * PI * ph.sin(),
            Parity::Sin => SQRT_2 * 2.0 * PI * ph.cos(),
        };
        for (o, &kc) in out.iter_mut().zip(self.k.iter()) {
            *o = s * kc as f64;
        }
    }

    /// Deterministic eigenvalue order: `|k|²`, then `k` in descending
    /// lexicographic order, then cosine before sine.
    fn order(&self, other: &Self) -> Ordering {
        self.norm_sq
            .cmp(&other.norm_sq)
            .then_with(|| other.k.cmp(&self.k))
            .then_with(|| self.parity.cmp(&other.parity))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeatKernelMethod {
    Spectral,
    Image,
    /// Image sum for `t <= 0.05`, spectral sum above.
    Auto,
}

/// Truncated eigen-decomposition of `-Δ` on the unit torus.
#[derive(Debug, Clone)]
pub struct SpectralModel {
    dim: usize,
    modes: Vec<Mode>,
    volume: f64,
    sup_norm: f64,
    id: u64,
}

impl SpectralModel {
    /// Builds the first `n` nonzero eigenpairs in dimension `d`.
    pub fn build(d: usize, n: usize) -> Result<Self> {
        check_dim(d)?;
        if n == 0 {
            return invalid("truncation N must be at least 1");
        }
        if n > MAX_EIGENPAIRS {
            return Err(Error::CapExceeded {
                what: "eigenpairs",
                requested: n,
                cap: MAX_EIGENPAIRS,
            });
        }
        // Smallest shell radius whose cumulative real-mode count reaches n.
        let mut n_max = 1u64;
        let radius = loop {
            let shells = LatticeShells::new(d, n_max)?;
            if shells.real_mode_count() >= n as u64 {
                break n_max;
            }
            n_max *= 2;
        };
        let shells = LatticeShells::new(d, radius)?;
        let mut cumulative = 0u64;
        let mut cutoff = radius;
        for (m, &c) in shells.counts.iter().enumerate().skip(1) {
            cumulative += c;
            if cumulative >= n as u64 {
                cutoff = m as u64;
                break;
            }
        }
        let mut modes = enumerate_modes(d, cutoff);
        modes.truncate(n);
        Ok(Self::from_modes(d, modes))
    }

    /// All eigenpairs with `|k|² <= max_norm_sq` (whole shells).
    pub fn with_shells(d: usize, max_norm_sq: u64) -> Result<Self> {
        check_dim(d)?;
        if max_norm_sq == 0 {
            return invalid("max_norm_sq must be at least 1");
        }
        let count = LatticeShells::new(d, max_norm_sq)?.real_mode_count() as usize;
        if count > MAX_EIGENPAIRS {
            return Err(Error::CapExceeded {
                what: "eigenpairs",
                requested: count,
                cap: MAX_EIGENPAIRS,
            });
        }
        Ok(Self::from_modes(d, enumerate_modes(d, max_norm_sq)))
    }

    /// Smallest whole-shell model with `λ_N >= lambda_min`.
    pub fn covering(d: usize, lambda_min: f64) -> Result<Self> {
        let shell = (lambda_min / FOUR_PI_SQ).ceil().max(1.0) as u64;
        Self::with_shells(d, shell)
    }

    fn from_modes(dim: usize, modes: Vec<Mode>) -> Self {
        let id = fingerprint(dim, &modes);
        SpectralModel {
            dim,
            modes,
            volume: 1.0,
            sup_norm: SQRT_2,
            id,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn truncation(&self) -> usize {
        self.modes.len()
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }

    /// Uniform bound on `|φ_i|` over the whole basis.
    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    /// Mode `i`, counted from 1 as in `λ_1 <= λ_2 <= ...`.
    pub fn mode(&self, i: usize) -> Result<&Mode> {
        if i == 0 || i > self.modes.len() {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: self.modes.len(),
            });
        }
        Ok(&self.modes[i - 1])
    }

    pub fn lambda(&self, i: usize) -> Result<f64> {
        Ok(self.mode(i)?.lambda)
    }

    pub fn spectral_gap(&self) -> f64 {
        self.modes[0].lambda
    }

    pub fn largest_lambda(&self) -> f64 {
        self.modes.last().map(|m| m.lambda).unwrap_or(0.0)
    }

    pub fn lambdas(&self) -> impl Iterator<Item = f64> + '_ {
        self.modes.iter().map(|m| m.lambda)
    }

    /// `φ_i(x)` for `1 <= i <= N` and `x ∈ [0,1)^d`.
    pub fn eigenfunction(&self, i: usize, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        Ok(self.mode(i)?.eval(x))
    }

    pub(crate) fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        if x.iter().any(|c| !(0.0..1.0).contains(c)) {
            return invalid("point coordinates must lie in [0,1)");
        }
        Ok(())
    }

    /// Bound on the discarded part of `Σ_i e^{-λ_i t} |φ_i(x) φ_i(y)|`.
    pub fn kernel_truncation_estimate(&self, t: f64) -> f64 {
        let n_last = self.modes.last().map(|m| m.norm_sq).unwrap_or(1);
        2.0 * lattice_gaussian_tail(self.dim, n_last, FOUR_PI_SQ * t)
    }

    /// `p_t(x, y)` with respect to the uniform measure.
    pub fn heat_kernel(&self, t: f64, x: &[f64], y: &[f64], method: HeatKernelMethod) -> Result<f64> {
        Ok(self.heat_kernel_with_estimate(t, x, y, method)?.0)
    }

    /// Heat kernel together with the truncation estimate of the chosen method.
    pub fn heat_kernel_with_estimate(
        &self,
        t: f64,
        x: &[f64],
        y: &[f64],
        method: HeatKernelMethod,
    ) -> Result<(f64, f64)> {
        if !(t > 0.0) || !t.is_finite() {
            return invalid(format!("heat kernel time must be positive, got {t}"));
        }
        self.check_point(x)?;
        self.check_point(y)?;
        let method = match method {
            HeatKernelMethod::Auto if t <= IMAGE_METHOD_MAX_T => HeatKernelMethod::Image,
            HeatKernelMethod::Auto => HeatKernelMethod::Spectral,
            m => m,
        };
        match method {
            HeatKernelMethod::Image => Ok((image_heat_kernel(t, x, y), IMAGE_TAIL_TOL)),
            _ => {
                let est = self.kernel_truncation_estimate(t);
                if est > SPECTRAL_KERNEL_TOL {
                    return Err(Error::Truncation {
                        estimate: est,
                        tolerance: SPECTRAL_KERNEL_TOL,
                    });
                }
                let sum: f64 = self
                    .modes
                    .iter()
                    .map(|m| (-m.lambda * t).exp() * m.eval(x) * m.eval(y))
                    .sum();
                Ok((1.0 + sum, est))
            }
        }
    }
}

fn check_dim(d: usize) -> Result<()> {
    if !(1..=MAX_DIM).contains(&d) {
        return invalid(format!("dimension must be in 1..={MAX_DIM}, got {d}"));
    }
    Ok(())
}

fn fingerprint(dim: usize, modes: &[Mode]) -> u64 {
    // FNV-1a over (dim, len, last mode)
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |v: u64| {
        for b in v.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    };
    eat(dim as u64);
    eat(modes.len() as u64);
    if let Some(m) = modes.last() {
        for &c in &m.k {
            eat(c as i64 as u64);
        }
        eat(m.parity as u64);
    }
    h
}

/// Every mode with `1 <= |k|² <= max_norm_sq`, sorted.
fn enumerate_modes(d: usize, max_norm_sq: u64) -> Vec<Mode> {
    let r = (max_norm_sq as f64).sqrt().floor() as i32;
    let mut modes = Vec::new();
    let mut k = [0i32; MAX_DIM];
    fn canonical(k: &[i32]) -> bool {
        k.iter().find(|&&c| c != 0).map_or(false, |&c| c > 0)
    }
    fn rec(
        axis: usize,
        d: usize,
        r: i32,
        budget: i64,
        k: &mut [i32; MAX_DIM],
        out: &mut Vec<Mode>,
    ) {
        if axis == d {
            if canonical(&k[..d]) {
                out.push(Mode::new(*k, Parity::Cos));
                out.push(Mode::new(*k, Parity::Sin));
            }
            return;
        }
        for c in -r..=r {
            let used = (c as i64) * (c as i64);
            if used > budget {
                continue;
            }
            k[axis] = c;
            rec(axis + 1, d, r, budget - used, k, out);
        }
        k[axis] = 0;
    }
    rec(0, d, r, max_norm_sq as i64, &mut k, &mut modes);
    modes.sort_by(|a, b| a.order(b));
    modes
}

const IMAGE_TAIL_TOL: f64 = 1e-14;

/// Wrapped Gaussian `Σ_m (4πt)^{-1/2} exp(-(δ+m)²/(4t))` for one coordinate.
pub fn wrapped_gaussian(t: f64, delta: f64) -> f64 {
    let delta = delta - delta.round();
    let norm = (4.0 * PI * t).sqrt().recip();
    // Terms with |δ+m| >= m_cut - 1/2 are below the tail tolerance.
    let log_tol = (IMAGE_TAIL_TOL * 1e-2 / norm.max(1.0)).ln();
    let reach = (-4.0 * t * log_tol).sqrt();
    let m_cut = reach.ceil() as i64 + 1;
    let mut s = 0.0;
    for m in -m_cut..=m_cut {
        let z = delta + m as f64;
        s += (-z * z / (4.0 * t)).exp();
    }
    norm * s
}

fn image_heat_kernel(t: f64, x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| wrapped_gaussian(t, a - b))
        .product()
}

/// Componentwise reduction into `[0,1)`.
#[inline]
pub fn wrap_unit(x: f64) -> f64 {
    let y = x.rem_euclid(1.0);
    if y >= 1.0 {
        0.0
    } else {
        y
    }
}

/// One draw from the heat kernel `p_t(x, ·)`.
pub fn heat_kernel_sample<R: Rng + ?Sized>(t: f64, x: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    if !(t > 0.0) || !t.is_finite() {
        return invalid(format!("heat kernel time must be positive, got {t}"));
    }
    check_dim(x.len())?;
    let s = (2.0 * t).sqrt();
    Ok(x.iter()
        .map(|&c| {
            let z: f64 = rng.sample(StandardNormal);
            wrap_unit(c + s * z)
        })
        .collect())
}

/// `Σ_{k ∈ Z^d, |k|² >= n_min} exp(-a|k|²)`, bounded above.
///
/// Uses `exp(-a|k|²) <= exp(-a(1-s) n_min) exp(-a s |k|²)` and the
/// one-dimensional theta bound `Σ_m exp(-b m²) <= 1 + sqrt(π/b)`, minimized
/// over a grid of splits `s`.
pub fn lattice_gaussian_tail(d: usize, n_min: u64, a: f64) -> f64 {
    let n = n_min as f64;
    (1..20)
        .map(|j| {
            let s = j as f64 / 20.0;
            let theta = 1.0 + (PI / (a * s)).sqrt();
            (-a * (1.0 - s) * n).exp() * theta.powi(d as i32)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Multiplicities of the eigenvalue shells `4π²n`, `n = 0..=n_max`.
///
/// `counts[n]` is the number of lattice vectors with `|k|² = n`, which is
/// also the number of real eigenfunctions with eigenvalue `4π²n` for `n >= 1`.
/// No eigenfunctions are materialized, so this reaches far beyond
/// [`MAX_EIGENPAIRS`].
#[derive(Debug, Clone)]
pub struct LatticeShells {
    dim: usize,
    counts: Vec<u64>,
}

/// Cap on the largest shell index of a [`LatticeShells`].
pub const MAX_SHELL: u64 = 20_000_000;

impl LatticeShells {
    pub fn new(d: usize, n_max: u64) -> Result<Self> {
        check_dim(d)?;
        if n_max > MAX_SHELL {
            return Err(Error::CapExceeded {
                what: "lattice shell index",
                requested: n_max as usize,
                cap: MAX_SHELL as usize,
            });
        }
        let len = n_max as usize + 1;
        let r = (n_max as f64).sqrt().floor() as usize;
        let mut one = vec![0u64; len];
        for m in 0..=r {
            one[m * m] += if m == 0 { 1 } else { 2 };
        }
        let mut counts = one.clone();
        for _ in 1..d {
            let mut next = vec![0u64; len];
            for (n, &c) in counts.iter().enumerate() {
                if c == 0 {
                    continue;
                }
                for m in 0..=r {
                    let idx = n + m * m;
                    if idx >= len {
                        break;
                    }
                    next[idx] += c * one[m * m];
                }
            }
            counts = next;
        }
        Ok(LatticeShells { dim: d, counts })
    }

    /// Shells needed so that `Σ_{λ > λ_max} e^{-aλ}` falls below `tol`.
    pub fn for_gaussian_tail(d: usize, a: f64, tol: f64) -> Result<Self> {
        let mut n = 8u64;
        while lattice_gaussian_tail(d, n + 1, FOUR_PI_SQ * a) > tol {
            n = n.checked_mul(2).ok_or_else(|| Error::InvalidArgument("tail".into()))?;
            if n > MAX_SHELL {
                return Err(Error::CapExceeded {
                    what: "lattice shell index",
                    requested: n as usize,
                    cap: MAX_SHELL as usize,
                });
            }
        }
        Self::new(d, n)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_norm_sq(&self) -> u64 {
        self.counts.len() as u64 - 1
    }

    pub fn real_mode_count(&self) -> u64 {
        self.counts.iter().skip(1).sum()
    }

    /// `(λ, multiplicity)` over the nonzero shells.
    pub fn shells(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.counts
            .iter()
            .enumerate()
            .skip(1)
            .filter(|(_, &c)| c > 0)
            .map(|(n, &c)| (FOUR_PI_SQ * n as f64, c as f64))
    }

    /// Number of real eigenvalues `<= lambda` (constant mode excluded).
    pub fn count_le(&self, lambda: f64) -> u64 {
        self.shells()
            .take_while(|(l, _)| *l <= lambda)
            .map(|(_, c)| c as u64)
            .sum()
    }
}

/// Anything that can list eigenvalues with multiplicities.
pub trait Eigenvalues {
    fn dim(&self) -> usize;
    /// `(λ, multiplicity)` pairs, ascending.
    fn eigenvalues(&self) -> Vec<(f64, f64)>;
    /// Smallest `|k|²` that may be missing from the list.
    fn first_missing_shell(&self) -> u64;
}

impl Eigenvalues for LatticeShells {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eigenvalues(&self) -> Vec<(f64, f64)> {
        self.shells().collect()
    }
    fn first_missing_shell(&self) -> u64 {
        self.max_norm_sq() + 1
    }
}

impl Eigenvalues for SpectralModel {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eigenvalues(&self) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = Vec::new();
        for m in &self.modes {
            match out.last_mut() {
                Some((l, c)) if *l == m.lambda => *c += 1.0,
                _ => out.push((m.lambda, 1.0)),
            }
        }
        out
    }
    fn first_missing_shell(&self) -> u64 {
        // The last shell may be only partially retained.
        self.modes.last().map(|m| m.norm_sq).unwrap_or(1)
    }
}
