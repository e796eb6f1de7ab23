//! Subordinated diffusions on the torus.
//!
//! The process is `X_{S_t} + Z t (mod 1)` where `X` has generator `Δ`, `S` is
//! an independent α-stable subordinator and `Z` a constant drift. On the flat
//! torus `-(-Δ)^α` and `Z·∇` are simultaneous Fourier multipliers, so one grid
//! step is exactly a Gaussian move with variance `2ΔS` per coordinate followed
//! by the translation `ZΔ`. Grid marginals carry no discretization bias.

use std::f64::consts::PI;
use std::io::{Read, Write};

use rand::distr::Open01;
use rand::Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::error::{invalid, Error, Result};
use crate::spectral::{wrap_unit, MAX_DIM};

#[derive(Debug, Clone, PartialEq)]
pub enum Start {
    Point(Vec<f64>),
    /// Start from the invariant (uniform) law.
    Stationary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProcessParams {
    pub alpha: f64,
    pub drift: Vec<f64>,
    pub horizon: f64,
    pub step: f64,
    pub start: Start,
}

impl ProcessParams {
    pub fn new(alpha: f64, drift: Vec<f64>, horizon: f64, step: f64, start: Start) -> Result<Self> {
        let p = ProcessParams {
            alpha,
            drift,
            horizon,
            step,
            start,
        };
        p.validate()?;
        Ok(p)
    }

    /// Stationary start with zero drift in dimension `d`.
    pub fn symmetric(alpha: f64, d: usize, horizon: f64, step: f64) -> Result<Self> {
        Self::new(alpha, vec![0.0; d], horizon, step, Start::Stationary)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return invalid(format!("alpha must lie in (0,1], got {}", self.alpha));
        }
        let d = self.drift.len();
        if !(1..=MAX_DIM).contains(&d) {
            return invalid(format!("dimension must be in 1..={MAX_DIM}, got {d}"));
        }
        if self.drift.iter().any(|z| !z.is_finite()) {
            return invalid("drift must be finite");
        }
        if !(self.step > 0.0 && self.step.is_finite()) {
            return invalid(format!("step must be positive, got {}", self.step));
        }
        if !(self.horizon >= self.step && self.horizon.is_finite()) {
            return invalid(format!(
                "horizon {} must be finite and at least one step {}",
                self.horizon, self.step
            ));
        }
        if let Start::Point(x) = &self.start {
            if x.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: x.len(),
                });
            }
            if x.iter().any(|c| !(0.0..1.0).contains(c)) {
                return invalid("start point must lie in [0,1)^d");
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.drift.len()
    }

    /// `round(T/Δ)`.
    pub fn step_count(&self) -> usize {
        ((self.horizon / self.step).round() as usize).max(1)
    }

    /// The horizon actually simulated, `step_count · Δ`.
    pub fn effective_horizon(&self) -> f64 {
        self.step_count() as f64 * self.step
    }
}

/// Positive strictly α-stable law with `E[exp(-u S)] = exp(-dt u^α)`.
///
/// Sampled with one uniform angle and one exponential (Kanter / Chambers–
/// Mallows–Stuck): `S_1 = sin(αU)/sin(U)^{1/α} · (sin((1-α)U)/E)^{(1-α)/α}`,
/// then scaled by `dt^{1/α}`.
#[derive(Debug, Clone, Copy)]
pub struct StableSampler {
    alpha: f64,
    inv_alpha: f64,
    tail_exp: f64,
    scale: f64,
}

impl StableSampler {
    pub fn new(alpha: f64, dt: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return invalid(format!("stable index must lie in (0,1), got {alpha}"));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return invalid(format!("time increment must be positive, got {dt}"));
        }
        Ok(StableSampler {
            alpha,
            inv_alpha: alpha.recip(),
            tail_exp: (1.0 - alpha) / alpha,
            scale: dt.powf(alpha.recip()),
        })
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = PI * rng.sample::<f64, _>(Open01);
        let e: f64 = rng.sample(Exp1);
        let a = (self.alpha * u).sin() / u.sin().powf(self.inv_alpha);
        let b = ((1.0 - self.alpha) * u).sin() / e;
        self.scale * a * b.powf(self.tail_exp)
    }
}

/// One increment of the α-stable subordinator over time `dt`.
pub fn sample_stable_increment<R: Rng + ?Sized>(alpha: f64, dt: f64, rng: &mut R) -> Result<f64> {
    Ok(StableSampler::new(alpha, dt)?.sample(rng))
}

/// Streaming generator of grid positions, for consumers that do not need the
/// whole path in memory.
pub struct PathStream<'r, R: Rng + ?Sized> {
    rng: &'r mut R,
    x: Vec<f64>,
    shift: Vec<f64>,
    sampler: Option<StableSampler>,
    step: f64,
    remaining: usize,
}

impl<'r, R: Rng + ?Sized> PathStream<'r, R> {
    pub fn new(params: &ProcessParams, rng: &'r mut R) -> Result<Self> {
        params.validate()?;
        let d = params.dim();
        let x = match &params.start {
            Start::Point(p) => p.clone(),
            Start::Stationary => (0..d).map(|_| rng.random::<f64>()).collect(),
        };
        let sampler = if params.alpha < 1.0 {
            Some(StableSampler::new(params.alpha, params.step)?)
        } else {
            None
        };
        Ok(PathStream {
            rng,
            x,
            shift: params.drift.iter().map(|z| z * params.step).collect(),
            sampler,
            step: params.step,
            remaining: params.step_count(),
        })
    }

    /// Current position (the start before the first `advance`).
    pub fn position(&self) -> &[f64] {
        &self.x
    }

    pub fn remaining(&self) -> usize {
        self.remaining
    }

    /// Moves one grid step forward; `None` once the horizon is reached.
    #[inline]
    pub fn advance(&mut self) -> Option<&[f64]> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        let ds = match &self.sampler {
            Some(s) => s.sample(self.rng),
            None => self.step,
        };
        let sd = (2.0 * ds).sqrt();
        for (c, z) in self.x.iter_mut().zip(&self.shift) {
            let g: f64 = self.rng.sample(StandardNormal);
            *c = wrap_unit(*c + sd * g + z);
        }
        Some(&self.x)
    }
}

/// Sample path on the grid `t_j = jΔ`, `j = 0..=round(T/Δ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub params: ProcessParams,
    positions: Vec<f64>,
    pub seed: u64,
}

impl Trajectory {
    /// Wraps raw positions (flattened, `d` coordinates per grid point).
    pub fn from_positions(params: ProcessParams, positions: Vec<f64>, seed: u64) -> Result<Self> {
        let d = params.dim();
        if positions.is_empty() || positions.len() % d != 0 {
            return invalid("positions must hold a whole number of points");
        }
        if positions.iter().any(|c| !(0.0..1.0).contains(c)) {
            return invalid("positions must lie in [0,1)^d");
        }
        Ok(Trajectory {
            params,
            positions,
            seed,
        })
    }

    pub fn dim(&self) -> usize {
        self.params.dim()
    }

    /// Number of grid points, `step_count + 1`.
    pub fn len(&self) -> usize {
        self.positions.len() / self.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn step_count(&self) -> usize {
        self.len() - 1
    }

    pub fn step(&self) -> f64 {
        self.params.step
    }

    pub fn horizon(&self) -> f64 {
        self.step_count() as f64 * self.params.step
    }

    pub fn point(&self, j: usize) -> &[f64] {
        let d = self.dim();
        &self.positions[j * d..(j + 1) * d]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.positions.chunks_exact(self.dim())
    }

    pub fn raw(&self) -> &[f64] {
        &self.positions
    }

    /// Path followed by `next`, which must start where `self` ends.
    pub fn concat(&self, next: &Trajectory) -> Result<Trajectory> {
        if next.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: next.dim(),
            });
        }
        if next.step() != self.step() || next.point(0) != self.point(self.step_count()) {
            return invalid("concatenated paths must share the step and the junction point");
        }
        let mut positions = self.positions.clone();
        positions.extend_from_slice(&next.positions[self.dim()..]);
        let mut params = self.params.clone();
        params.horizon = (self.step_count() + next.step_count()) as f64 * self.step();
        Ok(Trajectory {
            params,
            positions,
            seed: self.seed,
        })
    }

    /// Little-endian dump: `d: u32, steps: u64, Δ: f64, α: f64, Z: d×f64,
    /// seed: u64`, then `steps + 1` points of `d` f64 each.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&(self.dim() as u32).to_le_bytes())?;
        w.write_all(&(self.step_count() as u64).to_le_bytes())?;
        w.write_all(&self.params.step.to_le_bytes())?;
        w.write_all(&self.params.alpha.to_le_bytes())?;
        for z in &self.params.drift {
            w.write_all(&z.to_le_bytes())?;
        }
        w.write_all(&self.seed.to_le_bytes())?;
        for c in &self.positions {
            w.write_all(&c.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Trajectory> {
        let mut b4 = [0u8; 4];
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b4)?;
        let d = u32::from_le_bytes(b4) as usize;
        if !(1..=MAX_DIM).contains(&d) {
            return invalid(format!("bad dimension {d} in trajectory header"));
        }
        let mut next_u64 = |r: &mut R| -> Result<u64> {
            r.read_exact(&mut b8)?;
            Ok(u64::from_le_bytes(b8))
        };
        let steps = next_u64(&mut r)? as usize;
        let step = f64::from_bits(next_u64(&mut r)?);
        let alpha = f64::from_bits(next_u64(&mut r)?);
        let drift = (0..d)
            .map(|_| next_u64(&mut r).map(f64::from_bits))
            .collect::<Result<Vec<_>>>()?;
        let seed = next_u64(&mut r)?;
        let positions = (0..(steps + 1) * d)
            .map(|_| next_u64(&mut r).map(f64::from_bits))
            .collect::<Result<Vec<_>>>()?;
        let start = Start::Point(positions[..d].to_vec());
        let params = ProcessParams {
            alpha,
            drift,
            horizon: steps as f64 * step,
            step,
            start,
        };
        Trajectory::from_positions(params, positions, seed)
    }
}

/// Simulates one path on the time grid of `params`.
pub fn simulate_path<R: Rng + ?Sized>(params: &ProcessParams, rng: &mut R, seed: u64) -> Result<Trajectory> {
    let mut stream = PathStream::new(params, rng)?;
    let d = params.dim();
    let mut positions = Vec::with_capacity((params.step_count() + 1) * d);
    positions.extend_from_slice(stream.position());
    while let Some(x) = stream.advance() {
        positions.extend_from_slice(x);
    }
    let mut params = params.clone();
    params.horizon = params.effective_horizon();
    Ok(Trajectory {
        params,
        positions,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::replica_stream;

    #[test]
    fn params_validation() {
        assert!(ProcessParams::symmetric(0.0, 1, 1.0, 0.1).is_err());
        assert!(ProcessParams::symmetric(1.2, 1, 1.0, 0.1).is_err());
        assert!(ProcessParams::symmetric(0.5, 1, 0.05, 0.1).is_err());
        assert!(ProcessParams::new(0.5, vec![f64::NAN], 1.0, 0.1, Start::Stationary).is_err());
        assert!(ProcessParams::new(0.5, vec![0.0], 1.0, 0.1, Start::Point(vec![0.1, 0.2])).is_err());
        let p = ProcessParams::symmetric(0.5, 2, 1.04, 0.1).unwrap();
        assert_eq!(p.step_count(), 10);
        assert!((p.effective_horizon() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn stable_sampler_rejects_bad_index() {
        let mut rng = replica_stream(1, 0);
        assert!(sample_stable_increment(1.0, 1.0, &mut rng).is_err());
        assert!(sample_stable_increment(0.5, 0.0, &mut rng).is_err());
        let s = sample_stable_increment(0.5, 1.0, &mut rng).unwrap();
        assert!(s > 0.0 && s.is_finite());
    }

    #[test]
    fn path_has_expected_shape() {
        let p = ProcessParams::new(0.5, vec![0.3, -0.1], 2.0, 0.25, Start::Point(vec![0.5, 0.5])).unwrap();
        let mut rng = replica_stream(9, 1);
        let tr = simulate_path(&p, &mut rng, 9).unwrap();
        assert_eq!(tr.len(), 9);
        assert_eq!(tr.point(0), &[0.5, 0.5]);
        assert!(tr.raw().iter().all(|c| (0.0..1.0).contains(c)));
        assert!((tr.horizon() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn binary_dump_round_trips() {
        let p = ProcessParams::new(0.7, vec![0.2, 0.0, 0.1], 1.0, 0.1, Start::Stationary).unwrap();
        let tr = simulate_path(&p, &mut replica_stream(5, 0), 5).unwrap();
        let mut buf = Vec::new();
        tr.write_binary(&mut buf).unwrap();
        assert_eq!(buf.len(), 4 + 8 + 8 + 8 + 3 * 8 + 8 + 11 * 3 * 8);
        let back = Trajectory::read_binary(&buf[..]).unwrap();
        assert_eq!(back.raw(), tr.raw());
        assert_eq!(back.params.drift, tr.params.drift);
        assert_eq!(back.params.alpha, 0.7);
        assert_eq!(back.seed, 5);
        assert!(Trajectory::read_binary(&buf[..20]).is_err());
    }

    #[test]
    fn concatenation_requires_matching_junction() {
        let p = ProcessParams::new(1.0, vec![0.0], 1.0, 0.5, Start::Point(vec![0.1])).unwrap();
        let a = simulate_path(&p, &mut replica_stream(1, 0), 1).unwrap();
        let mut q = p.clone();
        q.start = Start::Point(a.point(a.step_count()).to_vec());
        let b = simulate_path(&q, &mut replica_stream(1, 1), 1).unwrap();
        let ab = a.concat(&b).unwrap();
        assert_eq!(ab.len(), 5);
        assert!(b.concat(&b).is_err() || b.point(0) == b.point(b.step_count()));
    }
}
