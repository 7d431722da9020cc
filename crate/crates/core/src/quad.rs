//! Quadrature rules used across the crate.
//!
//! Integrands on bands and gaps carry inverse square root singularities at
//! both edges. Every such integral is rewritten with `t = m - h cos θ`, which
//! turns `∫_u^v f(t) / sqrt|(t-u)(v-t)| dt` into `∫_0^π f(t(θ)) dθ` with a
//! smooth, even, 2π-periodic integrand. The midpoint rule in θ (Gauss-Chebyshev
//! of the first kind) is then spectrally accurate.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Fixed number of Chebyshev nodes per band or gap.
    GaussChebyshevPerBand,
    /// Node doubling until two successive estimates agree to `tol`.
    AdaptiveGap,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub scheme: Scheme,
    pub nodes_per_band: usize,
    pub tol: f64,
}

const MAX_NODES: usize = 1 << 16;
/// Relative change below which successive midpoint sums differ only by
/// rounding.
const ROUNDING_FLOOR: f64 = 64.0 * f64::EPSILON;

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec { scheme: Scheme::AdaptiveGap, nodes_per_band: 32, tol: 1e-13 }
    }
}

impl QuadratureSpec {
    pub fn new(scheme: Scheme, nodes_per_band: usize, tol: f64) -> Result<Self> {
        let spec = QuadratureSpec { scheme, nodes_per_band, tol };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes_per_band < 8 {
            return Err(Error::ParameterDomain(format!(
                "nodes_per_band = {} < 8",
                self.nodes_per_band
            )));
        }
        if !(self.tol > 0.0 && self.tol <= 1e-3) {
            return Err(Error::ParameterDomain(format!("tol = {} not in (0, 1e-3]", self.tol)));
        }
        Ok(())
    }

    /// Same rule with `k` times as many starting nodes.
    pub fn refined(&self, k: usize) -> Self {
        QuadratureSpec { nodes_per_band: self.nodes_per_band * k, ..*self }
    }

    /// Integrates a smooth function of θ over [0, π].
    ///
    /// Returns `(∫ g, ∫ |g|)`; the second value is the scale against which the
    /// adaptive stopping rule measures the change between refinements.
    pub fn integrate_theta<F: Fn(f64) -> f64>(&self, g: F) -> Result<(f64, f64)> {
        let mut n = self.nodes_per_band;
        let mut prev = midpoint_theta(&g, n);
        if self.scheme == Scheme::GaussChebyshevPerBand {
            return Ok(prev);
        }
        loop {
            n *= 2;
            let cur = midpoint_theta(&g, n);
            let scale = cur.1.max(f64::MIN_POSITIVE);
            let tol = self.tol.max(ROUNDING_FLOOR);
            if (cur.0 - prev.0).abs() <= tol * scale {
                return Ok(cur);
            }
            if n >= MAX_NODES {
                return Err(Error::NonConvergent(format!(
                    "θ-quadrature did not reach tol {:e} with {} nodes (last change {:e}, scale {:e})",
                    self.tol,
                    n,
                    (cur.0 - prev.0).abs(),
                    scale
                )));
            }
            prev = cur;
        }
    }
}

impl QuadratureSpec {
    /// Vector version of [`QuadratureSpec::integrate_theta`]: `g(θ, out)`
    /// fills `out` with `dim` integrand values. All components share one
    /// stopping rule, measured against the largest `∫ |g_j|`.
    pub fn integrate_theta_vec<F: Fn(f64, &mut [f64])>(&self, dim: usize, g: F) -> Result<Vec<f64>> {
        let mut n = self.nodes_per_band;
        let mut prev = midpoint_theta_vec(&g, dim, n);
        if self.scheme == Scheme::GaussChebyshevPerBand {
            return Ok(prev.0);
        }
        loop {
            n *= 2;
            let cur = midpoint_theta_vec(&g, dim, n);
            let scale = cur.1.iter().cloned().fold(f64::MIN_POSITIVE, f64::max);
            let change = cur.0.iter().zip(&prev.0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            if change <= self.tol.max(ROUNDING_FLOOR) * scale {
                return Ok(cur.0);
            }
            if n >= MAX_NODES {
                return Err(Error::NonConvergent(format!(
                    "θ-quadrature did not reach tol {:e} with {} nodes (last change {:e}, scale {:e})",
                    self.tol, n, change, scale
                )));
            }
            prev = cur;
        }
    }
}

fn midpoint_theta_vec<F: Fn(f64, &mut [f64])>(g: &F, dim: usize, n: usize) -> (Vec<f64>, Vec<f64>) {
    let w = PI / n as f64;
    let mut s = vec![0.0; dim];
    let mut a = vec![0.0; dim];
    let mut buf = vec![0.0; dim];
    for k in 0..n {
        g((k as f64 + 0.5) * w, &mut buf);
        for j in 0..dim {
            s[j] += buf[j];
            a[j] += buf[j].abs();
        }
    }
    s.iter_mut().for_each(|v| *v *= w);
    a.iter_mut().for_each(|v| *v *= w);
    (s, a)
}

fn midpoint_theta<F: Fn(f64) -> f64>(g: &F, n: usize) -> (f64, f64) {
    let w = PI / n as f64;
    let mut s = 0.0;
    let mut a = 0.0;
    for k in 0..n {
        let v = g((k as f64 + 0.5) * w);
        s += v;
        a += v.abs();
    }
    (s * w, a * w)
}

/// Maps θ ∈ [0, π] onto [lo, hi] via `t = m - h cos θ`.
///
/// Written as `lo + 2h sin²(θ/2)` or `hi - 2h cos²(θ/2)` so that the offset
/// from the nearer edge keeps full relative precision.
#[inline]
pub fn theta_point(lo: f64, hi: f64, theta: f64) -> f64 {
    let w = hi - lo;
    if theta <= 0.5 * PI {
        let s = (0.5 * theta).sin();
        lo + w * s * s
    } else {
        let c = (0.5 * (PI - theta)).sin();
        hi - w * c * c
    }
}

/// Inverse of [`theta_point`].
pub fn theta_of(lo: f64, hi: f64, t: f64) -> f64 {
    let w = hi - lo;
    let m = 0.5 * (lo + hi);
    if t <= m {
        2.0 * ((t - lo) / w).clamp(0.0, 1.0).sqrt().asin()
    } else {
        PI - 2.0 * ((hi - t) / w).clamp(0.0, 1.0).sqrt().asin()
    }
}

/// Gauss-Legendre nodes and weights on (-1, 1), by Newton iteration on P_n.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, 0.0);
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

fn gl16() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(16))
}

/// Values that adaptive Gauss-Legendre can accumulate.
pub trait QuadValue: Copy + std::ops::Add<Output = Self> + std::ops::Sub<Output = Self> + std::ops::Mul<f64, Output = Self> {
    fn zero() -> Self;
    fn mag(&self) -> f64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn mag(&self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn mag(&self) -> f64 {
        self.norm()
    }
}

fn gl_panel<T: QuadValue, F: Fn(f64) -> T>(f: &F, a: f64, b: f64) -> T {
    let (x, w) = gl16();
    let m = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut s = T::zero();
    for (xi, wi) in x.iter().zip(w) {
        s = s + f(m + h * xi) * (wi * h);
    }
    s
}

/// Adaptive 16-point Gauss-Legendre on [a, b].
///
/// A panel is accepted when it agrees with the sum of its halves to
/// `rel_tol * |panel|`, or to `max(abs_tol, rel_tol * |whole|)` scaled by the
/// panel's share of `[a, b]` (floored at 1e-3 so that endpoint singularities
/// terminate).
pub fn adaptive_gl<T: QuadValue, F: Fn(f64) -> T>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<T> {
    let whole = gl_panel(&f, a, b);
    let scale = whole.mag();
    let mut stack = vec![(a, b, whole, 0usize)];
    let mut total = T::zero();
    while let Some((lo, hi, est, depth)) = stack.pop() {
        let mid = 0.5 * (lo + hi);
        let left = gl_panel(&f, lo, mid);
        let right = gl_panel(&f, mid, hi);
        let refined = left + right;
        let err = (refined - est).mag();
        let frac = ((hi - lo) / (b - a).abs().max(f64::MIN_POSITIVE)).max(1e-3);
        if err <= (abs_tol.max(rel_tol * scale) * frac).max(rel_tol * refined.mag()) || mid == lo || mid == hi {
            total = total + refined;
        } else if depth >= 48 {
            return Err(Error::NonConvergent(format!(
                "adaptive Gauss-Legendre on [{a}, {b}] stalled at depth {depth} (error {err:e})"
            )));
        } else {
            stack.push((lo, mid, left, depth + 1));
            stack.push((mid, hi, right, depth + 1));
        }
    }
    Ok(total)
}
