//! Reflectionless Herglotz functions on a gap system, their measures, the
//! comb function `Π` of a set accumulating at its left end and the
//! one-parameter family `R_λ, I_λ, H_λ` built from it.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{theta_point, QuadratureSpec};
use crate::realset::{log_length, GapSystem, LogLengthOptions, RealSet, Verdict};
use crate::roots::bisect;

const I_PI: Complex64 = Complex64::new(0.0, PI);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DivisorPoint {
    pub x: f64,
    /// Sheet sign. Carried as data; evaluation depends on `x` only.
    pub eps: i8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Divisor {
    pub entries: Vec<DivisorPoint>,
}

impl Divisor {
    /// Validates one point per gap; a point on a gap edge gets `eps = +1`.
    pub fn new(sys: &GapSystem, entries: Vec<(f64, i8)>) -> Result<Self> {
        if entries.len() != sys.genus() {
            return Err(Error::DivisorMismatch { expected: sys.genus(), got: entries.len() });
        }
        let mut out = Vec::with_capacity(entries.len());
        for (j, ((x, eps), g)) in entries.into_iter().zip(&sys.gaps).enumerate() {
            if !(g[0] <= x && x <= g[1]) {
                return Err(Error::DivisorOutsideGap { gap: j, x, lo: g[0], hi: g[1] });
            }
            if eps != 1 && eps != -1 {
                return Err(Error::ParameterDomain(format!("sheet sign {eps} is not ±1")));
            }
            let eps = if x == g[0] || x == g[1] { 1 } else { eps };
            out.push(DivisorPoint { x, eps });
        }
        Ok(Divisor { entries: out })
    }

    /// Divisor at the right edge of every gap.
    pub fn right_edges(sys: &GapSystem) -> Self {
        Divisor { entries: sys.gaps.iter().map(|g| DivisorPoint { x: g[1], eps: 1 }).collect() }
    }

    pub fn points(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.x).collect()
    }
}

/// `R(z) = -1/sqrt((z-a_0)(z-b_0)) ∏_j (z-x_j)/sqrt((z-a_j)(z-b_j))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reflectionless {
    pub sys: GapSystem,
    pub divisor: Divisor,
}

impl Reflectionless {
    pub fn new(sys: GapSystem, divisor: Divisor) -> Result<Self> {
        if divisor.entries.len() != sys.genus() {
            return Err(Error::DivisorMismatch { expected: sys.genus(), got: divisor.entries.len() });
        }
        Ok(Reflectionless { sys, divisor })
    }

    /// Finite-gap set with the divisor at the right gap edges.
    pub fn with_right_edges(set: &RealSet) -> Self {
        let sys = GapSystem::of(set);
        let divisor = Divisor::right_edges(&sys);
        Reflectionless { sys, divisor }
    }

    fn log_value(&self, z: Complex64, skip_gaps: &[bool]) -> Complex64 {
        let mut l = I_PI - 0.5 * ((z - self.sys.hull[0]).ln() + (z - self.sys.hull[1]).ln());
        for (j, (g, d)) in self.sys.gaps.iter().zip(&self.divisor.entries).enumerate() {
            if skip_gaps.get(j).copied().unwrap_or(false) {
                continue;
            }
            l += (z - d.x).ln() - 0.5 * ((z - g[0]).ln() + (z - g[1]).ln());
        }
        l
    }

    /// Value at `z` in the closed upper half-plane; real `z` is `z + i0`.
    fn upper(&self, z: Complex64) -> Complex64 {
        self.log_value(z, &[]).exp()
    }

    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        if z.im == 0.0 && self.sys.on_set(z.re) {
            return Err(Error::OnSet { re: z.re, im: z.im });
        }
        Ok(conj_eval(z, |w| self.upper(w)))
    }

    /// Boundary value `R(x + i0)`.
    pub fn boundary(&self, x: f64) -> Complex64 {
        self.upper(Complex64::new(x, 0.0))
    }

    /// Evaluation with the factors nearest the accumulation point dropped
    /// while their summed log bound `|x_j - c_j|/d_j + (w_j/d_j)²` stays
    /// below `tol` (`c_j` gap midpoint, `w_j` gap width, `d_j` distance from
    /// `z` to the gap).
    pub fn eval_truncated(&self, z: Complex64, tol: f64) -> Result<(Complex64, TailNote)> {
        if z.im == 0.0 && self.sys.on_set(z.re) {
            return Err(Error::OnSet { re: z.re, im: z.im });
        }
        let w = Complex64::new(z.re, z.im.abs());
        let mut skip = vec![false; self.sys.genus()];
        let mut bound = 0.0;
        let mut dropped = 0;
        if let Some(&c) = self.sys.point_bands.first() {
            let mut order: Vec<usize> = (0..self.sys.genus()).collect();
            let mid = |j: usize| 0.5 * (self.sys.gaps[j][0] + self.sys.gaps[j][1]);
            order.sort_by(|&a, &b| (mid(a) - c).abs().total_cmp(&(mid(b) - c).abs()));
            for j in order {
                let g = self.sys.gaps[j];
                let width = g[1] - g[0];
                let d = dist_to_segment(w, g[0], g[1]);
                let term = (self.divisor.entries[j].x - mid(j)).abs() / d + (width / d).powi(2);
                if !(bound + term < tol) {
                    break;
                }
                bound += term;
                skip[j] = true;
                dropped += 1;
            }
        }
        let v = self.log_value(w, &skip).exp();
        let v = if z.im < 0.0 { v.conj() } else { v };
        Ok((v, TailNote { kept_gaps: self.sys.genus() - dropped, dropped_gaps: dropped, log_bound: bound }))
    }

    /// `log|R(t)|` for real `t`, plus `½ log|(t-l)(r-t)|` of band `k`.
    fn log_abs_band_weighted(&self, t: f64, l: f64, r: f64) -> f64 {
        let mut s = 0.0;
        for e in self.sys.edges() {
            if e != l && e != r {
                s -= 0.5 * (t - e).abs().ln();
            }
        }
        for d in &self.divisor.entries {
            s += (t - d.x).abs().ln();
        }
        s
    }

    /// `(1/π) ∫_E |R(x + i0)| dx`.
    pub fn ac_mass(&self, quad: &QuadratureSpec) -> Result<f64> {
        let bands = self.sys.bands();
        let parts = bands
            .par_iter()
            .map(|b| {
                quad.integrate_theta(|th| self.log_abs_band_weighted(theta_point(b[0], b[1], th), b[0], b[1]).exp())
                    .map(|(v, _)| v / PI)
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(parts.iter().sum())
    }

    /// `R'(x)` inside a gap by central differences with one Richardson step.
    pub fn derivative_in_gap(&self, gap: usize, x: f64) -> f64 {
        let g = self.sys.gaps[gap];
        let h = (1e-6 * (g[1] - g[0])).min(0.25 * (x - g[0]).min(g[1] - x));
        let d = |h: f64| (self.boundary(x + h).re - self.boundary(x - h).re) / (2.0 * h);
        (4.0 * d(0.5 * h) - d(h)) / 3.0
    }
}

fn conj_eval<F: Fn(Complex64) -> Complex64>(z: Complex64, f: F) -> Complex64 {
    if z.im < 0.0 {
        f(z.conj()).conj()
    } else {
        f(Complex64::new(z.re, 0.0) + Complex64::new(0.0, z.im.abs()))
    }
}

fn dist_to_segment(z: Complex64, a: f64, b: f64) -> f64 {
    let x = z.re.clamp(a, b);
    (z - x).norm()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailNote {
    pub kept_gaps: usize,
    pub dropped_gaps: usize,
    pub log_bound: f64,
}

/// Evaluates `R(z, {x_j})`.
pub fn eval_r(sys: &GapSystem, divisor: &Divisor, z: Complex64) -> Result<Complex64> {
    Reflectionless::new(sys.clone(), divisor.clone())?.eval(z)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureReport {
    /// `ac_mass + Σ point-mass weights`.
    pub total_mass: f64,
    pub ac_mass: f64,
    /// `(x, |R(x + i0)| / π)` at Chebyshev points of every band.
    pub density_samples: Vec<(f64, f64)>,
    /// Point masses of the measure of `R` (at one-point bands).
    pub point_masses: Vec<(f64, f64)>,
    /// Point masses `τ_j = 1 / R'(x_j)` of the measure of `-1/R`.
    pub reciprocal_masses: Vec<(f64, f64)>,
    /// Divisor points on a gap edge, which carry no reciprocal mass.
    pub edge_divisor_points: Vec<f64>,
    /// `-1/R(iy) = iy - q0 + O(1/y)`.
    pub q0: f64,
    pub tail_note: String,
}

pub fn measure_report(r: &Reflectionless, quad: &QuadratureSpec, samples_per_band: usize) -> Result<MeasureReport> {
    let ac_mass = r.ac_mass(quad)?;
    let mut density_samples = Vec::new();
    let n = samples_per_band.max(1);
    for b in r.sys.bands() {
        for k in 0..n {
            let x = theta_point(b[0], b[1], (k as f64 + 0.5) * PI / n as f64);
            density_samples.push((x, r.boundary(x).norm() / PI));
        }
    }
    let mut point_masses = Vec::new();
    for &c in &r.sys.point_bands {
        point_masses.push((c, point_mass_at(c, &r.sys, |x| r.boundary(x).re)));
    }
    let mut reciprocal_masses = Vec::new();
    let mut edge_divisor_points = Vec::new();
    for (j, (d, g)) in r.divisor.entries.iter().zip(&r.sys.gaps).enumerate() {
        if d.x == g[0] || d.x == g[1] {
            edge_divisor_points.push(d.x);
        } else {
            reciprocal_masses.push((d.x, 1.0 / r.derivative_in_gap(j, d.x)));
        }
    }
    let diam = r.sys.hull[1] - r.sys.hull[0];
    let q = |y: f64| {
        let z = Complex64::new(0.0, y);
        (z + 1.0 / r.upper(z)).re
    };
    // the real part has no 1/y term
    let y = 1e4 * diam;
    let q0 = (4.0 * q(2.0 * y) - q(y)) / 3.0;
    let total_mass = ac_mass + point_masses.iter().map(|p| p.1).sum::<f64>();
    Ok(MeasureReport {
        total_mass,
        ac_mass,
        density_samples,
        point_masses,
        reciprocal_masses,
        edge_divisor_points,
        q0,
        tail_note: format!("finite product over {} gaps, no truncation", r.sys.genus()),
    })
}

/// `lim_{x↑c} (c - x) f(x)` from two probes left of `c`, linearly
/// extrapolated.
fn point_mass_at<F: Fn(f64) -> f64>(c: f64, sys: &GapSystem, f: F) -> f64 {
    let scale = sys
        .edges()
        .iter()
        .map(|e| (e - c).abs())
        .filter(|d| *d > 0.0)
        .fold(f64::INFINITY, f64::min);
    let d = 1e-9 * scale;
    let s = |d: f64| d * f(c - d);
    2.0 * s(d) - s(2.0 * d)
}

// ---------------------------------------------------------------------------
// Comb function and the λ-family

/// `Π(z) = -sqrt(∏ (z - l_i)/(z - r_i))` over the intervals of a set that
/// accumulates at its left end `b_0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comb {
    pub b0: f64,
    pub intervals: Vec<[f64; 2]>,
    pub lambda_star: f64,
    pub log_length_total: f64,
    pub verdict: Verdict,
}

impl Comb {
    pub fn new(set: &RealSet) -> Result<Self> {
        let b0 = set
            .accumulation()
            .ok_or_else(|| Error::MissingAccumulation("no accumulation point declared".into()))?;
        let ll = log_length(set, b0, &LogLengthOptions::default())?;
        if b0 > set.lo() && ll.verdict != Verdict::Divergent {
            return Err(Error::MissingAccumulation(format!(
                "accumulation point {b0} is not the left end of the set"
            )));
        }
        let lambda_star = if ll.verdict == Verdict::Divergent || !ll.total.is_finite() {
            0.0
        } else {
            (-0.5 * ll.total).exp()
        };
        Ok(Comb { b0, intervals: set.intervals().to_vec(), lambda_star, log_length_total: ll.total, verdict: ll.verdict })
    }

    fn upper(&self, z: Complex64) -> Complex64 {
        let mut l = Complex64::new(0.0, 0.0);
        for iv in &self.intervals {
            l += (z - iv[0]).ln() - (z - iv[1]).ln();
        }
        -(0.5 * l).exp()
    }

    fn on_set(&self, z: Complex64) -> bool {
        z.im == 0.0 && self.intervals.iter().any(|iv| iv[0] <= z.re && z.re <= iv[1])
    }

    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        if self.on_set(z) {
            return Err(Error::OnSet { re: z.re, im: z.im });
        }
        Ok(conj_eval(z, |w| self.upper(w)))
    }

    /// `log Π(x)²` for real `x` off the set.
    fn log_square(&self, x: f64) -> f64 {
        self.intervals.iter().map(|iv| ((x - iv[0]) / (x - iv[1])).abs().ln()).sum()
    }

    /// `-Π(x)` probed just left of `b_0`, at `b_0 - 1e-9 (l_1 - b_0)`.
    pub fn limit_probe(&self) -> f64 {
        let d = 1e-9 * (self.intervals[0][0] - self.b0);
        -self.upper(Complex64::new(self.b0 - d, 0.0)).re
    }
}

/// `Π(z)` for a set with its accumulation point at the left end.
pub fn comb_pi(set: &RealSet, z: Complex64) -> Result<Complex64> {
    Comb::new(set)?.eval(z)
}

/// `λ* = exp(-½ ∫_E dx / (x - b_0))`, zero when the integral diverges.
pub fn lambda_star(set: &RealSet) -> Result<f64> {
    Ok(Comb::new(set)?.lambda_star)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaValues {
    pub pi: Complex64,
    pub r: Complex64,
    pub i: Complex64,
    pub h: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaFamily {
    pub comb: Comb,
    pub lambda: f64,
}

impl LambdaFamily {
    pub fn new(set: &RealSet, lambda: f64) -> Result<Self> {
        Self::from_comb(Comb::new(set)?, lambda)
    }

    pub fn from_comb(comb: Comb, lambda: f64) -> Result<Self> {
        let ls = comb.lambda_star;
        if !(lambda >= 0.0 && lambda <= ls * (1.0 + 1e-15)) {
            return Err(Error::LambdaOutOfRange { lambda, lambda_star: ls });
        }
        Ok(LambdaFamily { comb, lambda: lambda.min(ls) })
    }

    fn from_pi(&self, z: Complex64, pi: Complex64) -> LambdaValues {
        let l = self.lambda;
        let zb = z - self.comb.b0;
        let r = (pi * pi - l * l) / ((1.0 - l * l) * zb * pi);
        let i = (pi + l) / (pi - l);
        let h = (pi - l) * (pi - l) / ((1.0 + l) * (1.0 + l) * zb * pi);
        LambdaValues { pi, r, i, h }
    }

    /// `R_λ, I_λ, H_λ` from a single evaluation of `Π`.
    pub fn values(&self, z: Complex64) -> Result<LambdaValues> {
        let pi = self.comb.eval(z)?;
        Ok(self.from_pi(z, pi))
    }

    /// Boundary values at `x + i0` on a band.
    pub fn boundary(&self, x: f64) -> LambdaValues {
        let z = Complex64::new(x, 0.0);
        self.from_pi(z, self.comb.upper(z))
    }

    pub fn i_infinity(&self) -> f64 {
        (1.0 - self.lambda) / (1.0 + self.lambda)
    }

    /// `(λ*² - λ²) / (λ* (1 - λ²))`.
    pub fn sigma0_closed(&self) -> f64 {
        let ls = self.comb.lambda_star;
        let l = self.lambda;
        if ls == 0.0 {
            return 0.0;
        }
        (ls * ls - l * l) / (ls * (1.0 - l * l))
    }

    /// `(b_0 - x) R_λ(x)` probed left of `b_0` and extrapolated to `x = b_0`.
    pub fn sigma0_numeric(&self) -> f64 {
        let b0 = self.comb.b0;
        let d = 1e-9 * (self.comb.intervals[0][0] - b0);
        let s = |d: f64| {
            let z = Complex64::new(b0 - d, 0.0);
            d * self.from_pi(z, self.comb.upper(z)).r.re
        };
        2.0 * s(d) - s(2.0 * d)
    }

    /// `(1/π) ∫_E |R_λ(x + i0)| dx`.
    pub fn ac_mass(&self, quad: &QuadratureSpec) -> Result<f64> {
        let parts = self
            .comb
            .intervals
            .par_iter()
            .map(|iv| {
                quad.integrate_theta(|th| {
                    let x = theta_point(iv[0], iv[1], th);
                    self.boundary(x).r.norm() * ((x - iv[0]) * (iv[1] - x)).sqrt()
                })
                .map(|(v, _)| v / PI)
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(parts.iter().sum())
    }

    /// Zeros of `Π² - λ²`, one per gap of the closure; with them
    /// `R(z, {x_j}) = R_λ(z)` on [`GapSystem::with_accumulation`].
    pub fn divisor(&self) -> Result<(GapSystem, Divisor)> {
        let set = RealSet::new(self.comb.intervals.clone(), Some(self.comb.b0), false, Default::default())?;
        let sys = GapSystem::with_accumulation(&set);
        let target = 2.0 * self.lambda.ln();
        let ls = self.comb.lambda_star;
        let mut entries = Vec::with_capacity(sys.genus());
        for (j, g) in sys.gaps.iter().enumerate() {
            let x = if self.lambda == 0.0 {
                g[1]
            } else if g[0] == self.comb.b0 && self.lambda >= ls {
                g[0]
            } else {
                let f = |x: f64| self.comb.log_square(x) - target;
                let lo = if g[0] == self.comb.b0 { g[0] } else { g[0] + f64::EPSILON * g[0].abs().max(f64::MIN_POSITIVE) };
                bisect(f, lo, g[1], 0.0).ok_or(Error::RootNotBracketed { gap: j, lo: g[0], hi: g[1] })?
            };
            entries.push((x, 1));
        }
        let div = Divisor::new(&sys, entries)?;
        Ok((sys, div))
    }
}
