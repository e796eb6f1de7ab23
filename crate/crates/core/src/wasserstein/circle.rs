//! Exact `W_1` on the circle `R/Z`.
//!
//! With `G = F_μ - F_ν`, `W_1 = min_θ ∫_0^1 |G(x) - θ| dx` and the minimizer
//! is a median of the push-forward of Lebesgue measure under `G`. Measures
//! here are atoms plus an optional uniform component, so `G` is piecewise
//! linear with one global slope and the median is found by a sorted sweep.

use crate::empirical::DiscreteMeasure;
use crate::error::{invalid, Result};

/// Finite atoms on `[0,1)` plus `uniform_mass` spread as Lebesgue measure.
#[derive(Debug, Clone, PartialEq)]
pub struct CircleMeasure {
    atoms: Vec<(f64, f64)>,
    uniform_mass: f64,
}

impl CircleMeasure {
    pub fn atoms(points: &[f64], weights: &[f64]) -> Result<Self> {
        if points.len() != weights.len() {
            return invalid("points and weights differ in length");
        }
        let atoms: Vec<(f64, f64)> = points.iter().copied().zip(weights.iter().copied()).collect();
        Self::from_atoms(atoms, 0.0)
    }

    /// Equal weights `1/n` on each point.
    pub fn empirical(points: &[f64]) -> Result<Self> {
        if points.is_empty() {
            return invalid("empty point set");
        }
        let w = 1.0 / points.len() as f64;
        Self::from_atoms(points.iter().map(|&p| (p, w)).collect(), 0.0)
    }

    pub fn uniform() -> Self {
        CircleMeasure {
            atoms: Vec::new(),
            uniform_mass: 1.0,
        }
    }

    /// Grid measure as atoms at cell centers.
    pub fn from_grid(m: &DiscreteMeasure) -> Result<Self> {
        if m.dim() != 1 {
            return invalid(format!("circular transport needs d = 1, got d = {}", m.dim()));
        }
        let atoms = m
            .weights()
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(|(i, &w)| (m.cell_center(i)[0], w))
            .collect();
        Self::from_atoms(atoms, 0.0)
    }

    fn from_atoms(atoms: Vec<(f64, f64)>, uniform_mass: f64) -> Result<Self> {
        if atoms.iter().any(|(p, w)| !(0.0..1.0).contains(p) || !(*w >= 0.0)) {
            return invalid("atoms need positions in [0,1) and nonnegative weights");
        }
        let total: f64 = atoms.iter().map(|a| a.1).sum::<f64>() + uniform_mass;
        if (total - 1.0).abs() > 1e-9 {
            return invalid(format!("circle measure must have mass 1, got {total}"));
        }
        Ok(CircleMeasure { atoms, uniform_mass })
    }

    pub fn atom_list(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn uniform_mass(&self) -> f64 {
        self.uniform_mass
    }
}

/// Piece of `G` on `[start, start + len)`: value `g0 + slope·(x - start)`.
struct Segment {
    len: f64,
    g0: f64,
}

/// Exact circular `W_1`; returns `(distance, optimal shift θ)`.
pub fn w1_circle(mu: &CircleMeasure, nu: &CircleMeasure) -> (f64, f64) {
    let slope = mu.uniform_mass - nu.uniform_mass;
    let mut events: Vec<(f64, f64)> = Vec::with_capacity(mu.atoms.len() + nu.atoms.len());
    events.extend(mu.atoms.iter().copied());
    events.extend(nu.atoms.iter().map(|&(p, w)| (p, -w)));
    events.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));

    let mut segments = Vec::with_capacity(events.len() + 1);
    let mut pos = 0.0;
    let mut level = 0.0;
    let mut i = 0;
    while i < events.len() {
        let x = events[i].0;
        if x > pos {
            segments.push(Segment {
                len: x - pos,
                g0: level + slope * pos,
            });
            pos = x;
        }
        while i < events.len() && events[i].0 == x {
            level += events[i].1;
            i += 1;
        }
    }
    if pos < 1.0 {
        segments.push(Segment {
            len: 1.0 - pos,
            g0: level + slope * pos,
        });
    }
    let theta = if slope.abs() < 1e-14 {
        median_flat(&segments)
    } else {
        median_sloped(&segments, slope)
    };
    let cost = segments
        .iter()
        .map(|s| {
            if slope.abs() < 1e-14 {
                s.len * (s.g0 - theta).abs()
            } else {
                let a = s.g0;
                let b = s.g0 + slope * s.len;
                abs_integral(a.min(b), a.max(b), theta) / slope.abs()
            }
        })
        .sum();
    (cost, theta)
}

/// `∫_lo^hi |v - θ| dv`.
fn abs_integral(lo: f64, hi: f64, theta: f64) -> f64 {
    if theta <= lo {
        0.5 * ((hi - theta).powi(2) - (lo - theta).powi(2))
    } else if theta >= hi {
        0.5 * ((theta - lo).powi(2) - (theta - hi).powi(2))
    } else {
        0.5 * ((theta - lo).powi(2) + (hi - theta).powi(2))
    }
}

fn median_flat(segments: &[Segment]) -> f64 {
    let mut vals: Vec<(f64, f64)> = segments.iter().map(|s| (s.g0, s.len)).collect();
    vals.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = vals.iter().map(|v| v.1).sum();
    let mut acc = 0.0;
    for (g, w) in &vals {
        acc += w;
        if acc >= 0.5 * total {
            return *g;
        }
    }
    vals.last().map(|v| v.0).unwrap_or(0.0)
}

/// Solves `|{x : G(x) < θ}| = 1/2` when every segment is a uniform spread of
/// values over `[lo, hi]` with density `1/|slope|`.
fn median_sloped(segments: &[Segment], slope: f64) -> f64 {
    let density = 1.0 / slope.abs();
    let mut events: Vec<(f64, f64)> = Vec::with_capacity(2 * segments.len());
    for s in segments {
        let a = s.g0;
        let b = s.g0 + slope * s.len;
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        events.push((lo, density));
        events.push((hi, -density));
    }
    events.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
    let target = 0.5 * segments.iter().map(|s| s.len).sum::<f64>();
    let mut mass = 0.0;
    let mut rate = 0.0;
    let mut at = events[0].0;
    for &(v, dr) in &events {
        let next = mass + rate * (v - at);
        if next >= target && rate > 0.0 {
            return at + (target - mass) / rate;
        }
        mass = next;
        at = v;
        rate += dr;
    }
    at
}
