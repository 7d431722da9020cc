//! The transfer matrix `𝔄(z)`, its half trace `Δ(z)`, band extraction on the
//! real axis, the eigenvalue `λ(z)` and the numerical witness that the Cauchy
//! identity fails on `ℂ ∖ ({|Δ| ≤ 1} ∪ [0, ∞))`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::adaptive_gl;
use crate::roots::bisect;

const SERIES_RADIUS: f64 = 1e-4;

/// `(cos t√z, sin t√z / √z)` from the even series; used for `|z| < 1e-4`.
fn cs_series(t: f64, z: Complex64) -> (Complex64, Complex64) {
    let tz = z * (t * t);
    let mut c = Complex64::new(0.0, 0.0);
    let mut s = Complex64::new(0.0, 0.0);
    let mut term = Complex64::new(1.0, 0.0);
    for n in 0..10 {
        let n2 = 2.0 * n as f64;
        c += term;
        s += term / (n2 + 1.0);
        term *= -tz / ((n2 + 1.0) * (n2 + 2.0));
    }
    (c, s * t)
}

/// `cos u · e^{-|Im u|}` and `sin u · e^{-|Im u|}`.
fn scaled_trig(u: Complex64) -> (Complex64, Complex64) {
    let (sa, ca) = u.re.sin_cos();
    let e = (-2.0 * u.im.abs()).exp();
    let ch = 0.5 * (1.0 + e);
    let sh = 0.5 * (1.0 - e) * u.im.signum();
    (Complex64::new(ca * ch, -sa * sh), Complex64::new(sa * ch, ca * sh))
}

/// `(L, ĉ, ŝ)` with `cos t√z = e^L ĉ` and `sin t√z / √z = e^L ŝ`.
fn cs_scaled(t: f64, z: Complex64, flip: bool) -> (f64, Complex64, Complex64) {
    if z.norm() < SERIES_RADIUS {
        let (c, s) = cs_series(t, z);
        return (0.0, c, s);
    }
    let w = if flip { -z.sqrt() } else { z.sqrt() };
    let u = w * t;
    let (c, s) = scaled_trig(u);
    (u.im.abs(), c, s / w)
}

/// `cos t√z` and `sin t√z / √z`; both entire in `z`.
pub fn cos_sin_sqrt(t: f64, z: Complex64) -> (Complex64, Complex64) {
    let (l, c, s) = cs_scaled(t, z, false);
    let e = l.exp();
    (c * e, s * e)
}

/// Same pair evaluated with the other branch of `√z`.
pub fn cos_sin_sqrt_other_branch(t: f64, z: Complex64) -> (Complex64, Complex64) {
    let (l, c, s) = cs_scaled(t, z, true);
    let e = l.exp();
    (c * e, s * e)
}

/// Real fast path of [`cos_sin_sqrt`].
pub fn cos_sin_sqrt_real(t: f64, x: f64) -> (f64, f64) {
    if x.abs() < SERIES_RADIUS {
        let (c, s) = cs_series(t, Complex64::new(x, 0.0));
        return (c.re, s.re);
    }
    let w = x.abs().sqrt();
    if x > 0.0 {
        ((t * w).cos(), (t * w).sin() / w)
    } else {
        ((t * w).cosh(), (t * w).sinh() / w)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferMatrix {
    pub entries: [[Complex64; 2]; 2],
    pub z: Complex64,
    pub t: f64,
}

impl TransferMatrix {
    pub fn det(&self) -> Complex64 {
        let a = &self.entries;
        a[0][0] * a[1][1] - a[0][1] * a[1][0]
    }

    pub fn half_trace(&self) -> Complex64 {
        0.5 * (self.entries[0][0] + self.entries[1][1])
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.entries.iter().flatten().map(|v| v.norm_sqr()).sum()
    }
}

fn check_t(t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::ParameterDomain(format!("t = {t} must be positive")));
    }
    Ok(())
}

/// `[[C, S], [-zS, C]] · [[cos z, sin z], [-sin z, cos z]]`.
pub fn transfer_matrix(t: f64, z: Complex64) -> Result<TransferMatrix> {
    check_t(t)?;
    let (c, s) = cos_sin_sqrt(t, z);
    let (cz, sz) = (z.cos(), z.sin());
    let entries = [[c * cz - s * sz, c * sz + s * cz], [-z * s * cz - c * sz, -z * s * sz + c * cz]];
    Ok(TransferMatrix { entries, z, t })
}

/// `Δ(z) = cos t√z cos z - ((z+1)/2) (sin t√z / √z) sin z`.
pub fn delta(t: f64, z: Complex64) -> Result<Complex64> {
    check_t(t)?;
    let (l, m) = delta_scaled(t, z);
    Ok(m * l.exp())
}

/// `Δ = e^L · M`, safe for large `|Im z|`.
fn delta_scaled(t: f64, z: Complex64) -> (f64, Complex64) {
    let (l1, c, s) = cs_scaled(t, z, false);
    let (cz, sz) = scaled_trig(z);
    (l1 + z.im.abs(), c * cz - (z + 1.0) * 0.5 * s * sz)
}

/// `Δ(z)` as half the trace of [`transfer_matrix`].
pub fn delta_trace(t: f64, z: Complex64) -> Result<Complex64> {
    Ok(transfer_matrix(t, z)?.half_trace())
}

/// `Δ(x)` on the real axis.
pub fn delta_real(t: f64, x: f64) -> f64 {
    let (c, s) = cos_sin_sqrt_real(t, x);
    let (sx, cx) = x.sin_cos();
    c * cx - 0.5 * (x + 1.0) * s * sx
}

/// Smallest eigenvalue of the Hermitian form `(𝔄* J 𝔄 - J) / (z - z̄)`,
/// `J = [[0, -1], [1, 0]]`.
pub fn j_monotonicity_check(t: f64, z: Complex64) -> Result<f64> {
    if !(z.im > 0.0) {
        return Err(Error::Precondition(format!("Im z = {} must be positive", z.im)));
    }
    let a = transfer_matrix(t, z)?.entries;
    let j = [[0.0, -1.0], [1.0, 0.0]];
    // (A* J A)_{pq} = Σ conj(a_rp) J_rs a_sq
    let mut f = [[Complex64::new(0.0, 0.0); 2]; 2];
    for p in 0..2 {
        for q in 0..2 {
            let mut v = Complex64::new(0.0, 0.0);
            for r in 0..2 {
                for s in 0..2 {
                    if j[r][s] != 0.0 {
                        v += a[r][p].conj() * a[s][q] * j[r][s];
                    }
                }
            }
            f[p][q] = (v - j[p][q]) / Complex64::new(0.0, 2.0 * z.im);
        }
    }
    let (a11, a22) = (f[0][0].re, f[1][1].re);
    let b = 0.5 * (f[0][1] + f[1][0].conj());
    Ok(0.5 * (a11 + a22) - (0.25 * (a11 - a22).powi(2) + b.norm_sqr()).sqrt())
}

/// Both roots of `w² - 2Δw + 1 = 0`.
pub fn lambda_roots(t: f64, z: Complex64) -> Result<[Complex64; 2]> {
    let d = delta(t, z)?;
    let r = (d * d - 1.0).sqrt();
    Ok([d + r, d - r])
}

/// `log λ(z)` with `λ` the root of `w² - 2Δw + 1 = 0` of modulus > 1.
///
/// Evaluated in scaled form so that `|Im z|` in the thousands does not
/// overflow.
pub fn martin_lambda(t: f64, z: Complex64) -> Result<Complex64> {
    check_t(t)?;
    if !(z.im > 0.0) {
        return Err(Error::Precondition(format!("Im z = {} must be positive", z.im)));
    }
    let (l, m) = delta_scaled(t, z);
    if m == Complex64::new(0.0, 0.0) {
        return Err(Error::NonConvergent(format!("Δ vanishes in floating point at {z}")));
    }
    let r = (-2.0 * l).exp() / (m * m);
    let q = (1.0 - r).sqrt();
    let (p, n) = (1.0 + q, 1.0 - q);
    let big = if p.norm() >= n.norm() { p } else { n };
    if (p.norm() - n.norm()).abs() <= 1e-15 * p.norm().max(n.norm()) {
        return Err(Error::NonConvergent(format!("Δ² = 1 at {z}: both roots have modulus 1")));
    }
    Ok(l + m.ln() + big.ln())
}

// ---------------------------------------------------------------------------
// Bands

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandStructure {
    pub t: f64,
    pub window: [f64; 2],
    pub scan_step: f64,
    pub bands: Vec<[f64; 2]>,
    /// `k` with the band just left of `-kπ`, for bands on the negative axis.
    pub band_index: Vec<Option<u64>>,
    /// Sign of `Δ` at the left and right edge.
    pub edge_signs: Vec<[i8; 2]>,
    /// `||Δ(edge)| - 1|`.
    pub edge_residuals: Vec<[f64; 2]>,
    /// `max(1e-10, |Δ(e⁺) - Δ(e⁻)|)` over the neighbouring floats.
    pub edge_tolerances: Vec<[f64; 2]>,
    pub edge_monotone: Vec<[bool; 2]>,
    /// Edge set to the window boundary because the band runs past it.
    pub clipped: Vec<[bool; 2]>,
    /// `|Δ| > 1` at the midpoint of every gap between reported bands.
    pub gaps_verified: bool,
    /// `(k, length / (e^{-t√(kπ)} / √(kπ)))`.
    pub asymptotic_ratios: Vec<(u64, f64)>,
    /// `(k, distance from band k to band k-1)`.
    pub gap_widths: Vec<(u64, f64)>,
}

impl BandStructure {
    pub fn band(&self, k: u64) -> Option<[f64; 2]> {
        self.band_index.iter().position(|&i| i == Some(k)).map(|i| self.bands[i])
    }

    pub fn ratio(&self, k: u64) -> Option<f64> {
        self.asymptotic_ratios.iter().find(|r| r.0 == k).map(|r| r.1)
    }

    pub fn gap_width(&self, k: u64) -> Option<f64> {
        self.gap_widths.iter().find(|r| r.0 == k).map(|r| r.1)
    }
}

/// Leading term `e^{-t√(kπ)} / √(kπ)` of the band length.
pub fn asymptotic_length(t: f64, k: u64) -> f64 {
    let s = (k as f64 * PI).sqrt();
    (-t * s).exp() / s
}

/// Walks from `seed` (where `|Δ| ≤ 1`) in direction `dir` until `|Δ| > 1`,
/// then bisects down to neighbouring floats.
fn expand(t: f64, seed: f64, dir: f64, limit: f64, cap: f64) -> (f64, bool) {
    let inside = |x: f64| delta_real(t, x).abs() <= 1.0;
    let mut a = seed;
    let mut h = 4.0 * f64::EPSILON * seed.abs().max(1.0);
    let b = loop {
        let mut b = a + dir * h;
        if (b - limit) * dir >= 0.0 {
            b = limit;
            if inside(b) {
                return (limit, true);
            }
            break b;
        }
        if !inside(b) {
            break b;
        }
        a = b;
        h = (2.0 * h).min(cap);
    };
    let (mut a, mut b) = (a, b);
    loop {
        let m = 0.5 * (a + b);
        if m == a || m == b {
            break;
        }
        if inside(m) {
            a = m;
        } else {
            b = m;
        }
    }
    let res = |x: f64| (delta_real(t, x).abs() - 1.0).abs();
    (if res(a) <= res(b) { a } else { b }, false)
}

pub fn find_bands(t: f64, window: [f64; 2], scan_step: f64) -> Result<BandStructure> {
    check_t(t)?;
    let [lo, hi] = window;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::ParameterDomain(format!("window [{lo}, {hi}] is empty")));
    }
    if !(scan_step > 0.0) || (hi - lo) / scan_step > 1e8 {
        return Err(Error::ParameterDomain(format!("scan_step = {scan_step} unusable on [{lo}, {hi}]")));
    }
    let n = ((hi - lo) / scan_step).ceil() as usize;
    let mut xs: Vec<f64> = (0..n).map(|i| lo + i as f64 * scan_step).collect();
    xs.push(hi);
    // hints: the points -kπ inside the window
    let (k0, k1) = ((-hi / PI).ceil().max(0.0) as u64, (-lo / PI).floor().max(0.0) as u64);
    if lo < 0.0 {
        for k in k0..=k1 {
            let x = -(k as f64) * PI;
            if x >= lo && x <= hi {
                xs.push(x);
            }
        }
    }
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let ds: Vec<f64> = xs.par_iter().map(|&x| delta_real(t, x)).collect();

    let mut seeds: Vec<f64> = Vec::new();
    for i in 0..xs.len() {
        if ds[i].abs() <= 1.0 {
            seeds.push(xs[i]);
        }
        if i + 1 < xs.len() && ds[i] * ds[i + 1] < 0.0 {
            if let Some(z) = bisect(|x| delta_real(t, x), xs[i], xs[i + 1], 0.0) {
                seeds.push(z);
            }
        }
    }
    let cap = 0.25 * scan_step;
    let mut raw: Vec<([f64; 2], [bool; 2])> = seeds
        .par_iter()
        .map(|&s| {
            let (l, cl) = expand(t, s, -1.0, lo, cap);
            let (r, cr) = expand(t, s, 1.0, hi, cap);
            ([l, r], [cl, cr])
        })
        .collect();
    raw.sort_by(|a, b| a.0[0].total_cmp(&b.0[0]));
    let mut merged: Vec<([f64; 2], [bool; 2])> = Vec::new();
    for (b, c) in raw {
        match merged.last_mut() {
            Some((m, mc)) if b[0] <= m[1] => {
                if b[1] > m[1] {
                    m[1] = b[1];
                    mc[1] = c[1];
                }
            }
            _ => merged.push((b, c)),
        }
    }

    let mut out = BandStructure {
        t,
        window,
        scan_step,
        bands: Vec::new(),
        band_index: Vec::new(),
        edge_signs: Vec::new(),
        edge_residuals: Vec::new(),
        edge_tolerances: Vec::new(),
        edge_monotone: Vec::new(),
        clipped: Vec::new(),
        gaps_verified: true,
        asymptotic_ratios: Vec::new(),
        gap_widths: Vec::new(),
    };
    for (b, c) in merged {
        let width = b[1] - b[0];
        let mid = 0.5 * (b[0] + b[1]);
        if width < 4.0 * f64::EPSILON * mid.abs() {
            return Err(Error::UnresolvedBand { near: mid, width });
        }
        let edge = |e: f64| {
            let d = delta_real(t, e);
            let tol = (delta_real(t, e.next_up()) - delta_real(t, e.next_down())).abs().max(1e-10);
            let dx = 0.01 * width.min(scan_step);
            let v: Vec<f64> = (-2..=2).map(|i| delta_real(t, e + 0.5 * i as f64 * dx)).collect();
            let mono = v.windows(2).all(|w| w[1] > w[0]) || v.windows(2).all(|w| w[1] < w[0]);
            (d.signum() as i8, (d.abs() - 1.0).abs(), tol, mono)
        };
        let (sl, rl, tl, ml) = edge(b[0]);
        let (sr, rr, tr, mr) = edge(b[1]);
        let k = (mid < 0.0).then(|| (-mid / PI).floor() as u64);
        if let Some(k) = k {
            if k >= 1 && !c[0] && !c[1] {
                out.asymptotic_ratios.push((k, width / asymptotic_length(t, k)));
            }
        }
        out.bands.push(b);
        out.band_index.push(k);
        out.edge_signs.push([sl, sr]);
        out.edge_residuals.push([rl, rr]);
        out.edge_tolerances.push([tl, tr]);
        out.edge_monotone.push([ml, mr]);
        out.clipped.push(c);
    }
    for i in 1..out.bands.len() {
        let (a, b) = (out.bands[i - 1], out.bands[i]);
        if delta_real(t, 0.5 * (a[1] + b[0])).abs() <= 1.0 {
            out.gaps_verified = false;
        }
        if let (Some(kl), Some(kr)) = (out.band_index[i - 1], out.band_index[i]) {
            if kl == kr + 1 {
                out.gap_widths.push((kl, b[0] - a[1]));
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// DCT failure witness

/// Truncation of the ray `[0, ∞)` in the weighted L¹ integral.
pub const X_RAY: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailConstants {
    /// `A` in `length_k ≤ A e^{-t√(kπ)} / √(kπ)`.
    pub amplitude: f64,
    /// Factor applied to the largest measured ratio to get `A`.
    pub safety: f64,
    /// Smallest `k` whose measured ratio enters `A`.
    pub fitted_from_k: u64,
    /// Terms summed explicitly.
    pub k_max: u64,
    /// Closed-form bound on the terms beyond `k_max`.
    pub remainder: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DctDemoReport {
    pub t: f64,
    pub tau: f64,
    pub k_bands: usize,
    pub c1: f64,
    pub c1_choice: String,
    /// `τ sin(τ√c₁) / (2√c₁)`.
    pub f_prime_c1: f64,
    pub f_prime_fd: f64,
    pub f_prime_rel_err: f64,
    /// `Σ ∫ [F(x+i0) - F(x-i0)] / (x - c₁)² dx` over bands and ray.
    pub boundary_integral: Complex64,
    pub band_terms: Vec<f64>,
    pub band_partial_sums: Vec<f64>,
    pub ray_cutoff: f64,
    pub ray_integral: f64,
    /// `(cosh(τ√|c₁|) + 1) / (X_ray - c₁)`.
    pub ray_tail: f64,
    /// Bands, ray and ray tail.
    pub l1_weighted_norm: f64,
    /// Bound on the bands beyond the truncation.
    pub tail_bound: f64,
    pub tail_constants: TailConstants,
    /// Largest `|e^{iτ√z}|` at the sample points, `√` mapping into the upper
    /// half-plane.
    pub outer_factor_max_modulus: f64,
    pub outer_samples: usize,
    pub conclusion: String,
}

fn ray_panels() -> Vec<[f64; 2]> {
    let mut p = vec![[0.0, 1.0]];
    let mut a = 1.0;
    while 2.0 * a < X_RAY {
        p.push([a, 2.0 * a]);
        a *= 2.0;
    }
    p.push([a, X_RAY]);
    p
}

pub fn dct_failure_demo(t: f64, tau: f64, k_bands: usize) -> Result<DctDemoReport> {
    check_t(t)?;
    if !(tau > 0.0 && tau <= t) {
        return Err(Error::ParameterDomain(format!("τ = {tau} outside (0, {t}]")));
    }
    if k_bands < 5 {
        return Err(Error::ParameterDomain(format!("K = {k_bands} < 5")));
    }
    let kb = k_bands as u64;
    let bs = find_bands(t, [-(kb as f64 - 0.5) * PI, -1e-3], 0.05)?;
    let idx: Vec<Option<u64>> = (0..kb).map(Some).rev().collect();
    if bs.band_index != idx || bs.clipped.iter().flatten().any(|&c| c) {
        return Err(Error::NonConvergent(format!(
            "expected bands k = 0..{} on the window, found indices {:?}",
            kb - 1,
            bs.band_index
        )));
    }
    // bands ordered by k
    let bands: Vec<[f64; 2]> = bs.bands.iter().rev().cloned().collect();
    let c1 = 0.5 * bands[0][1];

    let f = |z: Complex64| cos_sin_sqrt(tau, Complex64::new(c1, 0.0)).0 - cos_sin_sqrt(tau, z).0;
    let f_real = |x: f64| cos_sin_sqrt_real(tau, c1).0 - cos_sin_sqrt_real(tau, x).0;
    let f_prime_c1 = 0.5 * tau * cos_sin_sqrt_real(tau, c1).1;
    let h = 1e-3 * c1.abs();
    let d = |h: f64| (f_real(c1 + h) - f_real(c1 - h)) / (2.0 * h);
    let f_prime_fd = (4.0 * d(0.5 * h) - d(h)) / 3.0;
    let f_prime_rel_err = (f_prime_fd - f_prime_c1).abs() / f_prime_c1.abs();

    let jump = |x: f64, eta: f64| {
        let j = |e: f64| f(Complex64::new(x, e)) - f(Complex64::new(x, -e));
        (2.0 * j(eta) - j(2.0 * eta)) / ((x - c1) * (x - c1))
    };
    // F is bounded on the bands, so plain Gauss-Legendre in x; the jump is
    // rounding noise, integrated to an absolute tolerance set by the L¹ part
    let l1_jump = |a: f64, b: f64, eta: f64| -> Result<(f64, Complex64)> {
        let l1 = adaptive_gl(|x| f_real(x).abs() / ((x - c1) * (x - c1)), a, b, 0.0, 1e-13)?;
        let j = adaptive_gl(|x| jump(x, eta), a, b, 1e-12 * l1, 1e-12)?;
        Ok((l1, j))
    };
    let band_parts = bands
        .par_iter()
        .map(|b| l1_jump(b[0], b[1], 1e-8 * (b[1] - b[0])))
        .collect::<Result<Vec<(f64, Complex64)>>>()?;
    let panels = ray_panels();
    let ray_parts =
        panels.par_iter().map(|p| l1_jump(p[0], p[1], 1e-8)).collect::<Result<Vec<(f64, Complex64)>>>()?;

    let mut boundary_integral = Complex64::new(0.0, 0.0);
    let mut band_terms = Vec::with_capacity(bands.len());
    for (l1, j) in &band_parts {
        boundary_integral += j;
        band_terms.push(*l1);
    }
    boundary_integral += ray_parts.iter().map(|p| p.1).sum::<Complex64>();
    let mut acc = 0.0;
    let band_partial_sums: Vec<f64> = band_terms
        .iter()
        .map(|v| {
            acc += v;
            acc
        })
        .collect();
    let ray_integral: f64 = ray_parts.iter().map(|p| p.0).sum();
    let cosh_c1 = cos_sin_sqrt_real(tau, c1).0;
    let ray_tail = (cosh_c1 + 1.0) / (X_RAY - c1);
    let l1_weighted_norm = acc + ray_integral + ray_tail;

    // tail of the band series
    let safety = 1.25;
    let fitted_from_k = (kb / 2).max(1);
    let amp = bs
        .asymptotic_ratios
        .iter()
        .filter(|r| r.0 >= fitted_from_k)
        .map(|r| r.1)
        .fold(0.0, f64::max)
        * safety;
    let k_max = 100_000u64.max(4 * kb);
    let mut tail_bound = 0.0;
    for k in kb..k_max {
        let kp = k as f64 * PI;
        let dist = kp - c1.abs();
        tail_bound += amp * asymptotic_length(t, k) * (tau * ((k as f64 + 0.5) * PI).sqrt()).cosh() / (dist * dist);
    }
    // beyond k_max: cosh(τ√((k+½)π)) e^{-t√(kπ)} ≤ e^{0.45τ} e^{-(t-τ)√(kπ)} and
    // kπ - |c₁| ≥ kπ/2; the exponential is bounded by its value at k_max
    let km = (k_max - 1) as f64;
    let remainder = amp * (0.45 * tau - (t - tau) * (km * PI).sqrt()).exp() * 4.0 / PI.powf(2.5) * (2.0 / 3.0)
        * km.powf(-1.5);
    tail_bound += remainder;

    let mut outer = 0.0f64;
    let mut outer_samples = 0;
    for i in 0..40 {
        let r = 10f64.powf(-3.0 + 7.0 * i as f64 / 39.0);
        for j in 1..64 {
            let ang = 2.0 * PI * j as f64 / 64.0;
            let z = Complex64::from_polar(r, ang);
            let s = Complex64::new(0.0, 1.0) * (-z).sqrt();
            outer = outer.max((Complex64::new(0.0, tau) * s).exp().norm());
            outer_samples += 1;
        }
    }

    let conclusion = format!(
        "residue F'(c1) = {f_prime_c1:.12e} is nonzero while the boundary pairing is {:.3e}; \
         F has finite weighted L1 norm {l1_weighted_norm:.6e} (band tail <= {tail_bound:.3e}), \
         so the Cauchy identity fails for this candidate",
        boundary_integral.norm()
    );
    Ok(DctDemoReport {
        t,
        tau,
        k_bands,
        c1,
        c1_choice: "midpoint of the gap between the band nearest 0 and the ray [0, inf), \
                    not the Green critical point"
            .into(),
        f_prime_c1,
        f_prime_fd,
        f_prime_rel_err,
        boundary_integral,
        band_terms,
        band_partial_sums,
        ray_cutoff: X_RAY,
        ray_integral,
        ray_tail,
        l1_weighted_norm,
        tail_bound,
        tail_constants: TailConstants { amplitude: amp, safety, fitted_from_k, k_max, remainder },
        outer_factor_max_modulus: outer,
        outer_samples,
        conclusion,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delta_at_zero() {
        assert!((delta(1.0, Complex64::new(0.0, 0.0)).unwrap() - 1.0).norm() < 1e-15);
        assert_eq!(delta_real(1.0, 0.0), 1.0);
    }

    #[test]
    fn trace_matches_formula() {
        let z = Complex64::new(2.0, 3.0);
        let a = delta(1.0, z).unwrap();
        let b = delta_trace(1.0, z).unwrap();
        assert!((a - b).norm() <= 1e-12 * a.norm());
    }

    #[test]
    fn branch_independent() {
        for z in [Complex64::new(-3.0, 0.2), Complex64::new(5.0, -7.0), Complex64::new(1e-5, 1e-5)] {
            let (c1, s1) = cos_sin_sqrt(0.7, z);
            let (c2, s2) = cos_sin_sqrt_other_branch(0.7, z);
            assert!((c1 - c2).norm() <= 1e-14 * c1.norm());
            assert!((s1 - s2).norm() <= 1e-14 * s1.norm());
        }
    }

    #[test]
    fn series_joins_closed_form() {
        let z = Complex64::from_polar(SERIES_RADIUS, 0.3);
        let (c, s) = cs_series(1.3, z);
        let w = z.sqrt();
        assert!((c - (w * 1.3).cos()).norm() < 1e-15);
        assert!((s - (w * 1.3).sin() / w).norm() < 1e-15);
    }

    #[test]
    fn real_path_matches_complex() {
        for x in [-50.0, -1.0, -1e-5, 0.5, 30.0] {
            let c = delta(0.5, Complex64::new(x, 0.0)).unwrap();
            assert!((c.re - delta_real(0.5, x)).abs() <= 1e-12 * c.re.abs().max(1.0));
        }
    }

    #[test]
    fn j_form_examples() {
        assert!(j_monotonicity_check(1.0, Complex64::new(0.0, 1.0)).unwrap() >= -1e-9);
        assert!(j_monotonicity_check(0.5, Complex64::new(10.0, 0.1)).unwrap() >= -1e-9);
        assert!(j_monotonicity_check(1.0, Complex64::new(0.0, -1.0)).is_err());
    }

    #[test]
    fn martin_large_height() {
        let l = martin_lambda(1.0, Complex64::new(0.0, 1e3)).unwrap();
        assert!((l.re / 1e3 - 1.0).abs() < 0.05);
        let r = lambda_roots(1.0, Complex64::new(0.3, 2.0)).unwrap();
        assert!((r[0] * r[1] - 1.0).norm() < 1e-12);
    }

    #[test]
    fn martin_matches_unscaled_root() {
        let z = Complex64::new(-4.0, 0.7);
        let r = lambda_roots(1.0, z).unwrap();
        let big = if r[0].norm() > r[1].norm() { r[0] } else { r[1] };
        let l = martin_lambda(1.0, z).unwrap();
        assert!((l.exp() - big).norm() < 1e-12 * big.norm());
    }

    #[test]
    fn first_bands_t1() {
        let bs = find_bands(1.0, [-12.0, -1e-3], 0.05).unwrap();
        assert_eq!(bs.bands.len(), 4);
        assert!((bs.bands[3][1] + 0.873).abs() < 1e-3);
        assert!(bs.gaps_verified);
        for r in bs.edge_residuals.iter().flatten() {
            assert!(*r < 1e-10);
        }
    }

    #[test]
    fn demo_rejects_bad_parameters() {
        assert!(dct_failure_demo(1.0, 1.5, 10).is_err());
        assert!(dct_failure_demo(1.0, 0.5, 4).is_err());
    }
}
