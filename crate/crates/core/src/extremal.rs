//! Boundary L¹ norms of candidate functions, the λ-sweep of the comb family,
//! the structural form `R · I(∞) / I` and the hypothesis checks for sets of
//! Benedicks type.

use std::cell::RefCell;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{theta_point, QuadratureSpec};
use crate::realset::{least_squares_slope, log_length, GapSystem, LogLengthOptions, RealSet, Verdict};
use crate::reflect::{Comb, LambdaFamily, Reflectionless};

/// Offset of the boundary evaluation, relative to the band width.
pub const ETA_REL: f64 = 1e-8;
/// Tolerance attached to every numerical norm claim.
pub const NORM_TOL: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct L1Norm {
    /// `(1/2π)(∫|F(x+i0)| + ∫|F(x-i0)|)`.
    pub two_sided: f64,
    /// `(1/π) ∫ |F(x+i0)|`.
    pub upper: f64,
    /// `(1/π) ∫ |F(x-i0)|`.
    pub lower: f64,
    /// Difference between the extrapolations from `(η, 2η)` and `(2η, 4η)`.
    pub eta_spread: f64,
    pub eta_rel: f64,
}

/// Boundary L¹ norm of `f` over `bands`.
///
/// Each side is evaluated at `x ± iη`, `x ± 2iη`, `x ± 4iη` and extrapolated
/// linearly to `η = 0`. The offset `η = 1e-8 (x - l)(r - x) / (r - l)` on the
/// band `[l, r]` shrinks with the distance to the nearer edge, so that the
/// disc of radius `4η` around `x` stays well inside the region where `F` is
/// analytic.
pub fn boundary_l1_norm<F>(bands: &[[f64; 2]], f: F, quad: &QuadratureSpec) -> Result<L1Norm>
where
    F: Fn(Complex64) -> Result<Complex64> + Sync,
{
    let parts = bands
        .par_iter()
        .map(|b| {
            let err = RefCell::new(None);
            let v = quad.integrate_theta_vec(4, |th, out| {
                let x = theta_point(b[0], b[1], th);
                let jac = ((x - b[0]) * (b[1] - x)).sqrt();
                let eta = ETA_REL * jac * jac / (b[1] - b[0]);
                let eval = |y: f64| match f(Complex64::new(x, y)) {
                    Ok(v) => v,
                    Err(e) => {
                        err.borrow_mut().get_or_insert(e);
                        Complex64::new(0.0, 0.0)
                    }
                };
                let up = [eval(eta), eval(2.0 * eta), eval(4.0 * eta)];
                let lo = [eval(-eta), eval(-2.0 * eta), eval(-4.0 * eta)];
                out[0] = (2.0 * up[0] - up[1]).norm() * jac;
                out[1] = (2.0 * lo[0] - lo[1]).norm() * jac;
                out[2] = (2.0 * up[1] - up[2]).norm() * jac;
                out[3] = (2.0 * lo[1] - lo[2]).norm() * jac;
            })?;
            if let Some(e) = err.into_inner() {
                return Err(e);
            }
            Ok(v)
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    let mut s = [0.0; 4];
    for p in &parts {
        for k in 0..4 {
            s[k] += p[k];
        }
    }
    let upper = s[0] / PI;
    let lower = s[1] / PI;
    let two_sided = 0.5 * (upper + lower);
    let coarse = 0.5 * (s[2] + s[3]) / PI;
    let eta_spread = (two_sided - coarse).abs();
    if eta_spread > 1e-6 * two_sided.max(1e-300) + 1e-14 {
        return Err(Error::NonConvergent(format!(
            "η-extrapolation: norms {two_sided} (η = {ETA_REL:e}·d) and {coarse} (η = {:e}·d) disagree",
            2.0 * ETA_REL
        )));
    }
    Ok(L1Norm { two_sided, upper, lower, eta_spread, eta_rel: ETA_REL })
}

/// `((1 - λ*)/λ*) (λ* + λ²) / (1 + λ)²`.
pub fn closed_form_norm(lambda_star: f64, lambda: f64) -> f64 {
    (1.0 - lambda_star) / lambda_star * (lambda_star + lambda * lambda) / ((1.0 + lambda) * (1.0 + lambda))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtremalCurve {
    pub lambda_grid: Vec<f64>,
    /// Two-sided boundary norms of `H_λ`.
    pub norms: Vec<f64>,
    pub closed_form: Vec<f64>,
    pub rel_errors: Vec<f64>,
    pub lambda_star: f64,
    /// `(1 - λ*) / (1 + λ*)`.
    pub m1: f64,
    /// `1 - λ*`.
    pub reflectionless_inf: f64,
    pub argmin_numeric: f64,
    pub min_norm: f64,
    pub monotone: bool,
    pub max_rel_error: f64,
    pub note: String,
}

pub fn lambda_sweep(set: &RealSet, grid: usize, quad: &QuadratureSpec) -> Result<ExtremalCurve> {
    let comb = Comb::new(set)?;
    let ls = comb.lambda_star;
    if ls == 0.0 {
        return Ok(ExtremalCurve {
            lambda_grid: vec![0.0],
            norms: vec![1.0],
            closed_form: vec![1.0],
            rel_errors: vec![0.0],
            lambda_star: 0.0,
            m1: 1.0,
            reflectionless_inf: 1.0,
            argmin_numeric: 0.0,
            min_norm: 1.0,
            monotone: true,
            max_rel_error: 0.0,
            note: "λ* = 0: the family collapses to λ = 0 and the sweep is degenerate".into(),
        });
    }
    let n = grid.max(2);
    let intervals = comb.intervals.clone();
    let norm_at = |l: f64| -> Result<f64> {
        let fam = LambdaFamily::from_comb(comb.clone(), l)?;
        boundary_l1_norm(&intervals, |z| fam.values(z).map(|v| v.h), quad).map(|n| n.two_sided)
    };
    let lambda_grid: Vec<f64> = (0..n).map(|k| ls * k as f64 / (n - 1) as f64).collect();
    let norms: Vec<f64> = lambda_grid.par_iter().map(|&l| norm_at(l)).collect::<Result<_>>()?;
    let closed_form: Vec<f64> = lambda_grid.iter().map(|&l| closed_form_norm(ls, l)).collect();
    let rel_errors: Vec<f64> = norms.iter().zip(&closed_form).map(|(a, b)| (a - b).abs() / b).collect();
    let max_rel_error = rel_errors.iter().cloned().fold(0.0, f64::max);
    let monotone = norms.windows(2).all(|w| w[1] <= w[0] + NORM_TOL * w[0]);

    // golden-section refinement of the minimiser
    let invphi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.0, ls);
    let mut c = b - invphi * (b - a);
    let mut d = a + invphi * (b - a);
    let mut fc = norm_at(c)?;
    let mut fd = norm_at(d)?;
    while b - a > 1e-8 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = norm_at(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = norm_at(d)?;
        }
    }
    let argmin_numeric = 0.5 * (a + b);
    let min_norm = norm_at(argmin_numeric)?;

    Ok(ExtremalCurve {
        lambda_grid,
        norms,
        closed_form,
        rel_errors,
        lambda_star: ls,
        m1: (1.0 - ls) / (1.0 + ls),
        reflectionless_inf: 1.0 - ls,
        argmin_numeric,
        min_norm,
        monotone,
        max_rel_error,
        note: format!(
            "norms are upper bounds on the extremal value over the λ-family only; set truncated: {}",
            set.meta().truncation.clone().unwrap_or_else(|| "no".into())
        ),
    })
}

/// The factor `I` of the structural form.
pub trait BlaschkeFactor: Sync {
    fn value(&self, z: Complex64) -> Result<Complex64>;
    fn at_infinity(&self) -> f64;
    /// Whether the contract `|I| < 1` is meaningful (false for `I ≡ 1`).
    fn checks_modulus(&self) -> bool {
        true
    }
}

/// `I ≡ 1`.
pub struct Trivial;

impl BlaschkeFactor for Trivial {
    fn value(&self, _z: Complex64) -> Result<Complex64> {
        Ok(Complex64::new(1.0, 0.0))
    }
    fn at_infinity(&self) -> f64 {
        1.0
    }
    fn checks_modulus(&self) -> bool {
        false
    }
}

impl BlaschkeFactor for LambdaFamily {
    fn value(&self, z: Complex64) -> Result<Complex64> {
        self.values(z).map(|v| v.i)
    }
    fn at_infinity(&self) -> f64 {
        self.i_infinity()
    }
}

/// `R(z, {x_j}) · I(∞) / I(z)`.
pub fn structural_form_eval(r: &Reflectionless, i: &dyn BlaschkeFactor, z: Complex64) -> Result<Complex64> {
    let iv = i.value(z)?;
    if i.checks_modulus() && iv.norm() >= 1.0 {
        return Err(Error::BlaschkeContract { modulus: iv.norm() });
    }
    Ok(r.eval(z)? * i.at_infinity() / iv)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub name: String,
    pub norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DctGapReport {
    pub lambda_star: f64,
    pub reflectionless_inf: f64,
    pub candidates: Vec<Candidate>,
    /// Smallest candidate norm: an upper bound on the extremal value.
    pub best_known_norm: f64,
    pub strict_gap: bool,
    /// A candidate with norm below `1 - 10·tol` exists.
    pub dct_cannot_hold: bool,
    pub tolerance: f64,
    pub note: String,
}

pub fn dct_gap_indicator(set: &RealSet, quad: &QuadratureSpec) -> Result<DctGapReport> {
    let comb = match set.accumulation() {
        Some(_) => Some(Comb::new(set)?),
        None => None,
    };
    let ls = comb.as_ref().map_or(0.0, |c| c.lambda_star);
    let mut candidates = Vec::new();
    match comb {
        Some(c) if ls > 0.0 => {
            for (name, l) in [("H_0", 0.0), ("H_lambda_star", ls)] {
                let fam = LambdaFamily::from_comb(c.clone(), l)?;
                let n = boundary_l1_norm(set.intervals(), |z| fam.values(z).map(|v| v.h), quad)?;
                candidates.push(Candidate { name: name.into(), norm: n.two_sided });
            }
        }
        _ => {
            let r = Reflectionless::with_right_edges(set);
            let n = boundary_l1_norm(set.intervals(), |z| r.eval(z), quad)?;
            candidates.push(Candidate { name: "R_right_edges".into(), norm: n.two_sided });
        }
    }
    let best_known_norm = candidates.iter().map(|c| c.norm).fold(f64::INFINITY, f64::min);
    let reflectionless_inf = 1.0 - ls;
    let tolerance = NORM_TOL;
    Ok(DctGapReport {
        lambda_star: ls,
        reflectionless_inf,
        candidates,
        best_known_norm,
        strict_gap: best_known_norm < reflectionless_inf - 10.0 * tolerance,
        dct_cannot_hold: best_known_norm < 1.0 - 10.0 * tolerance,
        tolerance,
        note: "a strict gap is evidence that DCT fails; its absence proves nothing".into(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub separation_ok: bool,
    pub min_gap_after_padding: f64,
    pub padded_gaps: usize,
    pub padded_set: RealSet,
    /// Gaps in order of increasing `|c̃_k|` with `c̃_k` the gap midpoint.
    pub weighted_terms: Vec<f64>,
    pub weighted_widom_partial: Vec<f64>,
    pub weighted_fit_slope: Option<f64>,
    pub weighted_verdict: Verdict,
    pub log_length_verdict: Verdict,
    pub log_length_fit_slope: Option<f64>,
    pub benedicks_constant: f64,
    pub hypotheses_ok: [bool; 3],
    pub conclusion: String,
}

/// Majorant `log(e + |x|) / (1 + |x|)^{(p+1)/p}` with constant 1.
pub fn benedicks_bound(p: f64, x: f64) -> f64 {
    (std::f64::consts::E + x.abs()).ln() / (1.0 + x.abs()).powf((p + 1.0) / p)
}

/// Slope threshold of the log-log fit below which the majorant series is
/// declared convergent.
pub const SERIES_SLOPE: f64 = -1.05;

pub fn theorem72_certificate(set: &RealSet, p: f64, delta: f64, q: Option<f64>) -> Result<CertificateReport> {
    let meta = set.meta();
    let param = |k: &str| meta.params.get(k).copied();
    let same = |a: Option<f64>, b: f64| a.is_some_and(|a| (a - b).abs() <= 1e-12 * b.abs().max(1.0));
    let shape_ok = match meta.generator.as_str() {
        "benedicks" => same(param("p"), p) && same(param("delta"), delta) && q.is_none(),
        "benedicks_mod" => same(param("p"), p) && same(param("delta"), delta) && q.is_some_and(|q| same(param("q"), q)),
        _ => false,
    };
    if !shape_ok {
        return Err(Error::NotBenedicksShape(format!("{} {:?}", meta.generator, meta.params)));
    }

    // close every gap shorter than 1
    let mut padded: Vec<[f64; 2]> = Vec::new();
    let mut padded_gaps = 0;
    for iv in set.intervals() {
        match padded.last_mut() {
            Some(last) if iv[0] - last[1] < 1.0 => {
                last[1] = iv[1];
                padded_gaps += 1;
            }
            _ => padded.push(*iv),
        }
    }
    let padded_set = RealSet::new(padded, set.accumulation(), set.unbounded_right(), meta.clone())?;
    let sys = GapSystem::of(&padded_set);
    let min_gap = sys.gaps.iter().map(|g| g[1] - g[0]).fold(f64::INFINITY, f64::min);
    let separation_ok = min_gap >= 1.0;

    let mut gaps = sys.gaps.clone();
    gaps.sort_by(|a, b| (0.5 * (a[0] + a[1])).abs().total_cmp(&(0.5 * (b[0] + b[1])).abs()));
    let weighted_terms: Vec<f64> =
        gaps.iter().map(|g| benedicks_bound(p, 0.5 * (g[0] + g[1])) * (g[1] - g[0])).collect();
    let mut acc = 0.0;
    let weighted_widom_partial: Vec<f64> = weighted_terms
        .iter()
        .map(|t| {
            acc += t;
            acc
        })
        .collect();
    let (weighted_fit_slope, weighted_verdict) = if weighted_terms.len() < 3 {
        // a finite sum of finite terms
        (None, Verdict::Convergent)
    } else {
        let n = weighted_terms.len();
        let start = n - n.div_ceil(3).max(3);
        let pts: Vec<(f64, f64)> =
            (start..n).map(|k| (((k + 1) as f64).ln(), weighted_terms[k].ln())).collect();
        let s = least_squares_slope(&pts);
        (Some(s), if s < SERIES_SLOPE { Verdict::Convergent } else { Verdict::Divergent })
    };

    let ll = log_length(&padded_set, 0.0, &LogLengthOptions::default())?;
    let hypotheses_ok =
        [separation_ok, weighted_verdict == Verdict::Convergent, ll.verdict == Verdict::Divergent];
    let conclusion = if hypotheses_ok.iter().all(|&b| b) {
        "hypotheses-evidenced".to_string()
    } else {
        let names = ["separation", "weighted Widom series", "log-length divergence"];
        let failed: Vec<&str> = names.iter().zip(hypotheses_ok).filter(|(_, ok)| !ok).map(|(n, _)| *n).collect();
        format!("certificate withheld: {} failed", failed.join(", "))
    };
    Ok(CertificateReport {
        separation_ok,
        min_gap_after_padding: min_gap,
        padded_gaps,
        padded_set,
        weighted_terms,
        weighted_widom_partial,
        weighted_fit_slope,
        weighted_verdict,
        log_length_verdict: ll.verdict,
        log_length_fit_slope: ll.fit_slope,
        benedicks_constant: 1.0,
        hypotheses_ok,
        conclusion,
    })
}
