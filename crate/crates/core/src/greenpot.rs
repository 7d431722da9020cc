//! Green function with pole at infinity for a finite union of intervals.
//!
//! With band edges `e_0 < … < e_{2g+1}` the Green function is
//! `G(z) = Re ∫_{e_0}^{z} P(s) ds / sqrt(∏(s - e_i))` where `P` is monic of
//! degree `g` and fixed by requiring the integral over every gap to vanish.
//! The root of `P` in gap `k` is the critical point `c_k`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discriminant;
use crate::error::{Error, Result};
use crate::quad::{adaptive_gl, theta_of, theta_point, QuadratureSpec};
use crate::realset::RealSet;
use crate::roots::bisect;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobinFit {
    /// Distances from the hull midpoint at which `G - log R` was sampled.
    pub radii: [f64; 2],
    pub values: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreenDiagnostics {
    /// `∫_{gap_j} P / sqrt|∏(t - e_i)| dt` divided by the band scale `π`.
    pub period_residuals: Vec<f64>,
    /// Singular-value ratio of the equilibrated period matrix.
    pub condition_estimate: f64,
    /// Relative disagreement between `G(c_k)` integrated from the left and
    /// from the right gap edge.
    pub critical_value_spread: Vec<f64>,
    pub robin_fit: RobinFit,
    pub quad: QuadratureSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreenData {
    /// Coefficients of `P`, ascending; the last one is 1.
    pub poly: Vec<f64>,
    pub critical_points: Vec<f64>,
    /// `G(c_k)` per gap.
    pub critical_values: Vec<f64>,
    pub widom_sum: f64,
    pub robin: f64,
    /// All `2g + 2` band edges, increasing.
    pub edges: Vec<f64>,
    pub diagnostics: GreenDiagnostics,
}

fn gap(edges: &[f64], i: usize) -> (f64, f64) {
    (edges[2 * i + 1], edges[2 * i + 2])
}

/// `-½ Σ log|t - e|` over all edges except `skip` and `skip + 1`.
fn log_weight(t: f64, edges: &[f64], skip: usize) -> f64 {
    let mut s = 0.0;
    for (i, e) in edges.iter().enumerate() {
        if i != skip && i != skip + 1 {
            s += (t - e).abs().ln();
        }
    }
    -0.5 * s
}

/// Solves the period system and returns the Green data of `set`.
pub fn solve_green(set: &RealSet, quad: &QuadratureSpec) -> Result<GreenData> {
    quad.validate()?;
    let edges: Vec<f64> = set.intervals().iter().flat_map(|iv| [iv[0], iv[1]]).collect();
    let g = set.gap_count();
    let (alpha, condition) = if g == 0 { (Vec::new(), 1.0) } else { solve_period_system(&edges, quad)? };
    let mids: Vec<f64> = (0..g).map(|i| 0.5 * (gap(&edges, i).0 + gap(&edges, i).1)).collect();

    let critical_points: Vec<f64> = (0..g)
        .into_par_iter()
        .map(|i| locate_root(i, &edges, &mids, &alpha))
        .collect::<Result<_>>()?;

    let sides: Vec<(f64, f64)> = (0..g)
        .into_par_iter()
        .map(|k| critical_value(k, &edges, &critical_points))
        .collect::<Result<_>>()?;
    let critical_values: Vec<f64> = sides.iter().map(|(l, r)| 0.5 * (l + r)).collect();
    let critical_value_spread: Vec<f64> =
        sides.iter().map(|(l, r)| (l - r).abs() / (0.5 * (l + r)).max(f64::MIN_POSITIVE)).collect();
    let widom_sum = critical_values.iter().fold(0.0, |a, b| a + b);

    let period_residuals = (0..g)
        .into_par_iter()
        .map(|i| {
            let (a, b) = gap(&edges, i);
            let (v, _) = quad.integrate_theta(|th| {
                let t = theta_point(a, b, th);
                signed_exp(log_poly_abs(t, &critical_points) + log_weight(t, &edges, 2 * i + 1), poly_sign(t, &critical_points))
            })?;
            Ok(v / PI)
        })
        .collect::<Result<Vec<f64>>>()?;

    let mut data = GreenData {
        poly: expand_roots(&critical_points),
        critical_points,
        critical_values,
        widom_sum,
        robin: 0.0,
        edges,
        diagnostics: GreenDiagnostics {
            period_residuals,
            condition_estimate: condition,
            critical_value_spread,
            robin_fit: RobinFit { radii: [0.0; 2], values: [0.0; 2] },
            quad: *quad,
        },
    };
    let m = 0.5 * (set.lo() + set.hi());
    let d = set.hi() - set.lo();
    let radii = [1e6 * d, 2e6 * d];
    let mut values = [0.0; 2];
    for (v, r) in values.iter_mut().zip(radii) {
        *v = data.green_at(Complex64::new(m + r, 0.0))? - r.ln();
    }
    // G - log R = γ + c/R + O(R⁻²); eliminate the 1/R term
    data.robin = (radii[1] * values[1] - radii[0] * values[0]) / (radii[1] - radii[0]);
    data.diagnostics.robin_fit = RobinFit { radii, values };
    Ok(data)
}

fn signed_exp(log_abs: f64, negative: bool) -> f64 {
    let v = log_abs.exp();
    if negative {
        -v
    } else {
        v
    }
}

fn log_poly_abs(t: f64, roots: &[f64]) -> f64 {
    roots.iter().map(|c| (t - c).abs().ln()).sum()
}

fn poly_sign(t: f64, roots: &[f64]) -> bool {
    roots.iter().filter(|&&c| t < c).count() % 2 == 1
}

/// Writes `P = ω₀ (1 + Σ α_j / (t - m_j))` with `ω₀ = ∏ (t - m_k)` over gap
/// midpoints. In this basis the period matrix is close to diagonal: on gap
/// `i` the `α_i` term is even about `m_i` while all others are nearly odd.
fn solve_period_system(edges: &[f64], quad: &QuadratureSpec) -> Result<(Vec<f64>, f64)> {
    let g = edges.len() / 2 - 1;
    let mids: Vec<f64> = (0..g).map(|i| 0.5 * (gap(edges, i).0 + gap(edges, i).1)).collect();
    let rows: Vec<Vec<f64>> = (0..g)
        .into_par_iter()
        .map(|i| {
            let (a, b) = gap(edges, i);
            quad.integrate_theta_vec(g + 1, |th, out| {
                let t = theta_point(a, b, th);
                let lw = log_weight(t, edges, 2 * i + 1);
                let logs: Vec<f64> = mids.iter().map(|m| (t - m).abs().ln()).collect();
                let neg: Vec<bool> = mids.iter().map(|m| t < *m).collect();
                // prefix / suffix sums give Σ_{k≠j} without cancellation
                let mut prefix = vec![0.0; g + 1];
                let mut pneg = vec![0usize; g + 1];
                for k in 0..g {
                    prefix[k + 1] = prefix[k] + logs[k];
                    pneg[k + 1] = pneg[k] + neg[k] as usize;
                }
                let mut suffix = 0.0;
                let mut sneg = 0usize;
                for j in (0..g).rev() {
                    let l = prefix[j] + suffix + lw;
                    out[j] = signed_exp(l, (pneg[j] + sneg) % 2 == 1);
                    suffix += logs[j];
                    sneg += neg[j] as usize;
                }
                out[g] = signed_exp(prefix[g] + lw, pneg[g] % 2 == 1);
            })
        })
        .collect::<Result<_>>()?;

    let mut a = DMatrix::<f64>::zeros(g, g);
    let mut rhs = DVector::<f64>::zeros(g);
    for (i, row) in rows.iter().enumerate() {
        let scale = row[..g].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::SingularSystem { condition: f64::INFINITY });
        }
        for j in 0..g {
            a[(i, j)] = row[j] / scale;
        }
        rhs[i] = -row[g] / scale;
    }
    let mut col_scale = vec![1.0; g];
    for (j, cs) in col_scale.iter_mut().enumerate() {
        let m = a.column(j).amax();
        if m > 0.0 {
            *cs = 1.0 / m;
            a.column_mut(j).scale_mut(*cs);
        }
    }
    let sv = a.clone().singular_values();
    let smax = sv.max();
    let smin = sv.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !condition.is_finite() || condition > 1e14 {
        return Err(Error::SingularSystem { condition });
    }
    let y = a.lu().solve(&rhs).ok_or(Error::SingularSystem { condition })?;
    let alpha = (0..g).map(|j| y[j] * col_scale[j]).collect();
    Ok((alpha, condition))
}

fn locate_root(i: usize, edges: &[f64], mids: &[f64], alpha: &[f64]) -> Result<f64> {
    let (a, b) = gap(edges, i);
    let h = |t: f64| {
        let mut s = 1.0;
        for (j, (m, al)) in mids.iter().zip(alpha).enumerate() {
            if j != i {
                s += al / (t - m);
            }
        }
        (t - mids[i]) * s + alpha[i]
    };
    const SCAN: usize = 64;
    let vals: Vec<f64> = (0..=SCAN).map(|k| h(a + (b - a) * k as f64 / SCAN as f64)).collect();
    let changes = vals.windows(2).filter(|w| w[0].signum() != w[1].signum()).count();
    match changes {
        0 => return Err(Error::RootNotBracketed { gap: i, lo: a, hi: b }),
        1 => {}
        count => return Err(Error::MultipleRoots { gap: i, count }),
    }
    let tol = 1e-13 * (b - a).min(1.0);
    bisect(h, a, b, tol).ok_or(Error::RootNotBracketed { gap: i, lo: a, hi: b })
}

/// `G(c_k)` integrated from both gap edges, in the θ variable of the gap.
fn critical_value(k: usize, edges: &[f64], roots: &[f64]) -> Result<(f64, f64)> {
    let (a, b) = gap(edges, k);
    let c = roots[k];
    let th = theta_of(a, b, c);
    let f = |theta: f64| {
        let t = theta_point(a, b, theta);
        (log_poly_abs(t, roots) + log_weight(t, edges, 2 * k + 1)).exp()
    };
    let left: f64 = adaptive_gl(f, 0.0, th, 0.0, 1e-13)?;
    let right: f64 = adaptive_gl(f, th, PI, 0.0, 1e-13)?;
    Ok((left, right))
}

fn expand_roots(roots: &[f64]) -> Vec<f64> {
    let mut c = vec![1.0];
    for r in roots {
        let mut next = vec![0.0; c.len() + 1];
        for (i, ci) in c.iter().enumerate() {
            next[i + 1] += ci;
            next[i] -= r * ci;
        }
        c = next;
    }
    c
}

impl GreenData {
    pub fn genus(&self) -> usize {
        self.critical_points.len()
    }

    fn bands(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.edges.chunks(2).map(|c| (c[0], c[1]))
    }

    /// `P(s) / sqrt(∏(s - e_i))` with principal logs; positive for real
    /// `s` right of the set and continuous in the closed upper half-plane.
    pub fn differential(&self, s: Complex64) -> Complex64 {
        let mut l = Complex64::new(0.0, 0.0);
        for c in &self.critical_points {
            l += (s - c).ln();
        }
        for e in &self.edges {
            l -= 0.5 * (s - e).ln();
        }
        l.exp()
    }

    /// [`GreenData::differential`] at `s = e_k + off`, with `s - e_k` taken
    /// as `off` exactly.
    fn differential_near(&self, k: usize, off: Complex64) -> Complex64 {
        let s = off + self.edges[k];
        let mut l = Complex64::new(0.0, 0.0);
        for c in &self.critical_points {
            l += (s - c).ln();
        }
        for (i, e) in self.edges.iter().enumerate() {
            l -= 0.5 * if i == k { off.ln() } else { (s - e).ln() };
        }
        l.exp()
    }

    /// Evaluates `G(z)`. Real `z` is read as `z + i0`; on the set the result
    /// is the boundary value (zero up to quadrature error).
    pub fn green_at(&self, z: Complex64) -> Result<f64> {
        // G(z̄) = G(z); also maps -0.0 to +0.0 so real z means z + i0
        let z = Complex64::new(z.re, z.im.abs());
        let k = (0..self.edges.len())
            .min_by(|&a, &b| (z - self.edges[a]).norm().total_cmp(&(z - self.edges[b]).norm()))
            .expect("at least two edges");
        let e = self.edges[k];
        let dz = z - e;
        let len = dz.norm();
        if len == 0.0 {
            return Ok(0.0);
        }
        // local length scale near e: distance to the nearest other edge or root
        let mut local = f64::INFINITY;
        for x in self.edges.iter().chain(&self.critical_points) {
            let d = (x - e).abs();
            if d > 0.0 {
                local = local.min(d);
            }
        }
        // s = e + dz u², panels at u = 2^-k refined down to the local scale
        let integrand = |u: f64| -> Complex64 {
            self.differential_near(k, dz * (u * u)) * dz * (2.0 * u)
        };
        let mut breaks: Vec<f64> = vec![1.0];
        while len * breaks.last().unwrap().powi(2) > 0.25 * local && breaks.len() < 80 {
            let u = breaks.last().unwrap() * 0.5;
            breaks.push(u);
        }
        breaks.push(0.0);
        let mut total = Complex64::new(0.0, 0.0);
        for w in breaks.windows(2) {
            total += adaptive_gl(integrand, w[1], w[0], 0.0, 1e-13)?;
        }
        Ok(total.re)
    }

    /// Harmonic measure density at `∞`, `|P(x)| / (π sqrt|∏(x - e_i)|)`.
    pub fn harmonic_density(&self, x: f64) -> Result<f64> {
        let inside = self.bands().any(|(l, r)| l < x && x < r);
        if !inside {
            if self.bands().any(|(l, r)| l <= x && x <= r) {
                return Err(Error::Precondition(format!("x = {x} is a band edge")));
            }
            return Err(Error::SampleNotInSet(x));
        }
        let mut l = log_poly_abs(x, &self.critical_points);
        for e in &self.edges {
            l -= 0.5 * (x - e).abs().ln();
        }
        Ok(l.exp() / PI)
    }

    /// `∫_E ρ dx`, band by band in the θ variable.
    pub fn harmonic_mass(&self, quad: &QuadratureSpec) -> Result<f64> {
        let bands: Vec<(usize, (f64, f64))> = self.bands().enumerate().collect();
        let parts = bands
            .par_iter()
            .map(|&(k, (l, r))| {
                quad.integrate_theta(|th| {
                    let t = theta_point(l, r, th);
                    (log_poly_abs(t, &self.critical_points) + log_weight(t, &self.edges, 2 * k)).exp()
                })
                .map(|(v, _)| v / PI)
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(parts.iter().sum())
    }
}

/// Convenience wrapper for [`GreenData::harmonic_density`].
pub fn harmonic_density(green: &GreenData, x: f64) -> Result<f64> {
    green.harmonic_density(x)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WidomRow {
    pub index: usize,
    pub genus: usize,
    pub widom_sum: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WidomTable {
    pub rows: Vec<WidomRow>,
    pub monotone: bool,
    /// `(S_last - S_prev) / S_last`.
    pub saturation: Option<f64>,
}

/// Widom sums over a nested family of truncations.
pub fn widom_partial_sums(family: &[RealSet], quad: &QuadratureSpec) -> Result<WidomTable> {
    if family.windows(2).any(|w| w[1].gap_count() < w[0].gap_count()) {
        return Err(Error::Precondition("truncations must not lose gaps".into()));
    }
    let sums: Vec<f64> =
        family.par_iter().map(|s| solve_green(s, quad).map(|g| g.widom_sum)).collect::<Result<_>>()?;
    let rows: Vec<WidomRow> = family
        .iter()
        .zip(&sums)
        .enumerate()
        .map(|(index, (s, &w))| WidomRow { index, genus: s.gap_count(), widom_sum: w })
        .collect();
    let monotone = sums.windows(2).all(|w| w[1] >= w[0]);
    let saturation = match sums.as_slice() {
        [.., a, b] if *b > 0.0 => Some((b - a) / b),
        [.., _, _] => Some(0.0),
        _ => None,
    };
    Ok(WidomTable { rows, monotone, saturation })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum MartinKind {
    /// `E = [0, ∞)`, `ℳ(z) = Re sqrt(-z)`, points on the negative axis.
    HalfLine,
    /// `ℳ(iy) = log|λ(iy)|` for the discriminant with parameter `t`;
    /// points are the heights `y`.
    Discriminant { t: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MartinRow {
    pub point: f64,
    pub value: f64,
    pub expected: f64,
    pub ratio: f64,
}

pub fn martin_asymptotics(kind: MartinKind, points: &[f64]) -> Result<Vec<MartinRow>> {
    points
        .iter()
        .map(|&p| match kind {
            MartinKind::HalfLine => {
                if p >= 0.0 {
                    return Err(Error::OnSet { re: p, im: 0.0 });
                }
                let value = Complex64::new(-p, 0.0).sqrt().re;
                let expected = p.abs().sqrt();
                Ok(MartinRow { point: p, value, expected, ratio: value / expected })
            }
            MartinKind::Discriminant { t } => {
                if p == 0.0 {
                    return Err(Error::Precondition("y must be nonzero".into()));
                }
                let value = discriminant::martin_lambda(t, Complex64::new(0.0, p.abs()))?.re;
                let expected = p.abs();
                Ok(MartinRow { point: p, value, expected, ratio: value / expected })
            }
        })
        .collect()
}
