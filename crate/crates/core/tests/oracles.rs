//! Values checked against closed forms or against independent computations
//! written here from scratch.

use std::f64::consts::PI;

use widom_lab::discriminant::{self, find_bands};
use widom_lab::extremal::{self, boundary_l1_norm, closed_form_norm, structural_form_eval, Trivial};
use widom_lab::greenpot::{self, solve_green, MartinKind};
use widom_lab::realset::{self, density_ratio, log_length, LogLengthOptions};
use widom_lab::reflect::{measure_report, Comb, Divisor, LambdaFamily, Reflectionless};
use widom_lab::{build_named_set, Complex64, GapSystem, NamedSet, QuadratureSpec, RealSet, Verdict};

fn quad() -> QuadratureSpec {
    QuadratureSpec::default()
}

// ---------------------------------------------------------------------------
// three-band oracle: monomial basis, plain Chebyshev sums, 4x nodes

/// `∫_a^b f(t) / sqrt((t-a)(b-t)) dt` by the midpoint rule in θ.
fn cheb(a: f64, b: f64, n: usize, f: impl Fn(f64) -> f64) -> f64 {
    let (m, h) = (0.5 * (a + b), 0.5 * (b - a));
    (0..n).map(|k| f(m - h * ((k as f64 + 0.5) * PI / n as f64).cos())).sum::<f64>() * PI / n as f64
}

/// Gauss-Legendre nodes by Newton on the Legendre recurrence.
fn legendre(n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|i| {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            (x, 2.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

struct ThreeBand {
    crit: [f64; 2],
    values: [f64; 2],
}

fn three_band_oracle(e: [f64; 6], n: usize) -> ThreeBand {
    let gaps = [(e[1], e[2]), (e[3], e[4])];
    let others = |t: f64, skip: usize| {
        let mut p = 1.0;
        for (i, x) in e.iter().enumerate() {
            if i != skip && i != skip + 1 {
                p *= (t - x).abs();
            }
        }
        p.sqrt()
    };
    // rows: ∫ t^m w over each gap, m = 0, 1, 2
    let mut mom = [[0.0; 3]; 2];
    for (j, &(a, b)) in gaps.iter().enumerate() {
        for m in 0..3 {
            mom[j][m] = cheb(a, b, n, |t| t.powi(m as i32) / others(t, 2 * j + 1));
        }
    }
    // P = t² + p1 t + p0 with ∫ P w = 0 on both gaps
    let det = mom[0][0] * mom[1][1] - mom[0][1] * mom[1][0];
    let p0 = (-mom[0][2] * mom[1][1] + mom[1][2] * mom[0][1]) / det;
    let p1 = (-mom[0][0] * mom[1][2] + mom[1][0] * mom[0][2]) / det;
    let disc = (p1 * p1 - 4.0 * p0).sqrt();
    let mut crit = [(-p1 - disc) / 2.0, (-p1 + disc) / 2.0];
    crit.sort_by(f64::total_cmp);
    let gl = legendre(200);
    let mut values = [0.0; 2];
    for (j, &(a, _)) in gaps.iter().enumerate() {
        // G(c) = ∫_a^c |P| / sqrt|∏(t - e_i)| dt with t = a + (c - a) s²
        let c = crit[j];
        let mut s = 0.0;
        for &(x, w) in &gl {
            let u = 0.5 * (x + 1.0);
            let t = a + (c - a) * u * u;
            let all: f64 = e.iter().filter(|&&x| x != a).map(|x| (t - x).abs()).product();
            s += w * 0.5 * 2.0 * (c - a).sqrt() * ((t - crit[0]) * (t - crit[1])).abs() / all.sqrt();
        }
        values[j] = s;
    }
    ThreeBand { crit, values }
}

#[test]
fn three_band_green_matches_oracle() {
    let e = [-3.0, -2.2, -1.0, 0.5, 1.3, 2.0];
    let set = RealSet::from_intervals(vec![[e[0], e[1]], [e[2], e[3]], [e[4], e[5]]]).unwrap();
    let g = solve_green(&set, &quad()).unwrap();
    let coarse = three_band_oracle(e, 64);
    let fine = three_band_oracle(e, 256);
    for j in 0..2 {
        // the oracle must have converged before it can judge
        assert!((coarse.crit[j] - fine.crit[j]).abs() < 1e-13);
        assert!((g.critical_points[j] - fine.crit[j]).abs() < 1e-8, "{} vs {}", g.critical_points[j], fine.crit[j]);
        assert!((g.critical_values[j] - fine.values[j]).abs() < 1e-8, "{} vs {}", g.critical_values[j], fine.values[j]);
    }
}

#[test]
fn single_interval_green_and_mass() {
    let set = build_named_set(&NamedSet::Single).unwrap();
    let g = solve_green(&set, &quad()).unwrap();
    let v = g.green_at(Complex64::new(2.0, 0.0)).unwrap();
    assert!((v - (2.0 + 3f64.sqrt()).ln()).abs() < 1e-9);
    assert!((g.harmonic_mass(&quad()).unwrap() - 1.0).abs() < 1e-8);
    assert!((g.robin - 2f64.ln()).abs() < 1e-9);
}

#[test]
fn two_band_green_has_zero_off_the_set_only_on_e() {
    let set = build_named_set(&NamedSet::TwoSymmetric).unwrap();
    let g = solve_green(&set, &quad()).unwrap();
    assert!(g.critical_points[0].abs() <= 1e-10);
    assert!(g.green_at(Complex64::new(1.5, 0.0)).unwrap().abs() < 1e-10);
    let c = g.green_at(Complex64::new(0.0, 0.0)).unwrap();
    assert!((c - g.critical_values[0]).abs() < 1e-10);
}

#[test]
fn half_line_martin_ratio_is_one() {
    let rows = greenpot::martin_asymptotics(MartinKind::HalfLine, &[-0.01, -1.0, -100.0]).unwrap();
    for r in rows {
        assert!((r.ratio - 1.0).abs() < 1e-14);
    }
}

#[test]
fn discriminant_martin_grows_like_y() {
    let rows = greenpot::martin_asymptotics(MartinKind::Discriminant { t: 1.0 }, &[1e3]).unwrap();
    assert!((rows[0].ratio - 1.0).abs() < 0.05, "{}", rows[0].ratio);
}

// ---------------------------------------------------------------------------
// realset

#[test]
fn benedicks_density_matches_interval_count() {
    let set = build_named_set(&NamedSet::Benedicks { p: 2.0, delta: 0.1, n_max: 50 }).unwrap();
    let mut prev = f64::INFINITY;
    for n in 10..50 {
        let nf = n as f64;
        let x = nf * nf + 0.1;
        let d = (nf + 1.0).powi(2) - 0.1 - x;
        // (x - d, x + d) covers the intervals at n - 1 and n and nothing else
        let expected = 0.4 / d;
        let r = density_ratio(&set, x, d);
        assert!((r - expected).abs() < 1e-12, "{n}: {r} vs {expected}");
        assert!(r < prev);
        prev = r;
    }
    assert!(prev < 0.05);
}

#[test]
fn log_length_of_geometric_set() {
    let set = build_named_set(&NamedSet::Geometric { n: 40, q: 4.0 }).unwrap();
    let r = log_length(&set, 0.0, &LogLengthOptions::default()).unwrap();
    // ∫ dx/x over [q^-k, q^-k(1 + 2^-k)] is ln(1 + 2^-k)
    let exact: f64 = (1..=40).map(|k| (1.0 + 0.5f64.powi(k)).ln()).sum();
    assert!((r.total - exact).abs() < 1e-13);
    assert_eq!(r.verdict, Verdict::Convergent);
}

#[test]
fn benedicks_log_length_verdicts() {
    let plain = build_named_set(&NamedSet::Benedicks { p: 2.0, delta: 0.1, n_max: 50 }).unwrap();
    let modded = build_named_set(&NamedSet::BenedicksMod { p: 2.0, delta: 0.1, q: 2.0, n_max: 50 }).unwrap();
    let o = LogLengthOptions::default();
    assert_eq!(log_length(&plain, 0.0, &o).unwrap().verdict, Verdict::Convergent);
    assert_eq!(log_length(&modded, 0.0, &o).unwrap().verdict, Verdict::Divergent);
}

#[test]
fn single_interval_is_homogeneous() {
    let set = build_named_set(&NamedSet::Single).unwrap();
    let xs = [-0.5, 0.0, 0.3];
    let deltas = [0.01, 0.1, 0.5];
    let r = realset::homogeneity_report(&set, &xs, &deltas).unwrap();
    assert!(r.min_ratio >= 1.0);
}

// ---------------------------------------------------------------------------
// reflect

#[test]
fn reflectionless_mass_on_fixed_sets() {
    let set = RealSet::from_intervals(vec![[-3.0, -2.0], [-1.0, 0.5], [1.0, 4.0]]).unwrap();
    let sys = GapSystem::of(&set);
    let div = Divisor::new(&sys, vec![(-1.4, 1), (0.9, -1)]).unwrap();
    let r = Reflectionless::new(sys, div).unwrap();
    let rep = measure_report(&r, &quad(), 8).unwrap();
    assert!((rep.total_mass - 1.0).abs() < 1e-6);
    // for R = -1/(z - a) + ..., Σ τ_j equals the ac mass of -1/R minus nothing:
    // every τ_j is positive
    assert!(rep.reciprocal_masses.iter().all(|m| m.1 > 0.0));
}

#[test]
fn single_interval_reflectionless_norm_is_one() {
    let set = build_named_set(&NamedSet::Single).unwrap();
    let r = Reflectionless::with_right_edges(&set);
    let n = boundary_l1_norm(set.intervals(), |z| r.eval(z), &quad()).unwrap();
    assert!((n.two_sided - 1.0).abs() < 1e-8, "{}", n.two_sided);
    assert!((n.upper - n.lower).abs() < 1e-12);
}

#[test]
fn lambda_family_mass_budget() {
    let set = build_named_set(&NamedSet::Geometric { n: 40, q: 4.0 }).unwrap();
    let comb = Comb::new(&set).unwrap();
    let ls = comb.lambda_star;
    for l in [0.0, 0.5 * ls, ls] {
        let f = LambdaFamily::from_comb(comb.clone(), l).unwrap();
        let ac = f.ac_mass(&quad()).unwrap();
        assert!((ac + f.sigma0_closed() - 1.0).abs() < 1e-5);
        assert!((f.sigma0_numeric() - f.sigma0_closed()).abs() < 1e-5);
    }
}

#[test]
fn lambda_divisor_reproduces_r_lambda() {
    let set = build_named_set(&NamedSet::Geometric { n: 12, q: 4.0 }).unwrap();
    let f = LambdaFamily::new(&set, 0.3 * Comb::new(&set).unwrap().lambda_star).unwrap();
    let (sys, div) = f.divisor().unwrap();
    let r = Reflectionless::new(sys, div).unwrap();
    for z in [Complex64::new(0.3, 0.2), Complex64::new(-1.0, 1e-3), Complex64::new(2.0, -0.5)] {
        let a = r.eval(z).unwrap();
        let b = f.values(z).unwrap().r;
        assert!((a - b).norm() < 1e-9 * b.norm(), "{a} vs {b}");
    }
}

// ---------------------------------------------------------------------------
// extremal

#[test]
fn h_lambda_star_norm_is_m1() {
    let set = build_named_set(&NamedSet::Geometric { n: 40, q: 4.0 }).unwrap();
    let comb = Comb::new(&set).unwrap();
    let ls = comb.lambda_star;
    let f = LambdaFamily::from_comb(comb, ls).unwrap();
    let n = boundary_l1_norm(set.intervals(), |z| f.values(z).map(|v| v.h), &quad()).unwrap();
    let m1 = (1.0 - ls) / (1.0 + ls);
    assert!((n.two_sided - m1).abs() < 1e-5);
    assert!((closed_form_norm(ls, ls) - m1).abs() < 1e-15);
}

#[test]
fn structural_form_reproduces_h_lambda() {
    let set = build_named_set(&NamedSet::Geometric { n: 20, q: 4.0 }).unwrap();
    let fam = LambdaFamily::new(&set, 0.4 * Comb::new(&set).unwrap().lambda_star).unwrap();
    let (sys, div) = fam.divisor().unwrap();
    let r = Reflectionless::new(sys, div).unwrap();
    let mut state = 0x2545f4914f6cdd1du64;
    let mut next = || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    for _ in 0..100 {
        let z = Complex64::new(-1.0 + 3.0 * next(), 0.05 + 2.0 * next());
        let a = structural_form_eval(&r, &fam, z).unwrap();
        let b = fam.values(z).unwrap().h;
        assert!((a - b).norm() <= 1e-12 * b.norm().max(1.0), "{z}: {a} vs {b}");
    }
}

#[test]
fn trivial_factor_on_single_interval_has_norm_one() {
    let set = build_named_set(&NamedSet::Single).unwrap();
    let r = Reflectionless::with_right_edges(&set);
    let n = boundary_l1_norm(set.intervals(), |z| structural_form_eval(&r, &Trivial, z), &quad()).unwrap();
    assert!((n.two_sided - 1.0).abs() < 1e-8);
}

#[test]
fn dct_gap_examples() {
    let single = build_named_set(&NamedSet::Single).unwrap();
    let r = extremal::dct_gap_indicator(&single, &quad()).unwrap();
    assert_eq!(r.reflectionless_inf, 1.0);
    assert!((r.best_known_norm - 1.0).abs() < 1e-8);
    assert!(!r.strict_gap);

    let geo = build_named_set(&NamedSet::Geometric { n: 40, q: 4.0 }).unwrap();
    let r = extremal::dct_gap_indicator(&geo, &quad()).unwrap();
    let ls = r.lambda_star;
    assert!((r.best_known_norm - (1.0 - ls) / (1.0 + ls)).abs() < 1e-5);
    assert!(r.strict_gap && r.dct_cannot_hold);

    let inv = build_named_set(&NamedSet::InvertedCorollary { p: 2.0, delta: 0.1, q: 2.0, n_max: 10 }).unwrap();
    let r = extremal::dct_gap_indicator(&inv, &quad()).unwrap();
    assert_eq!(r.lambda_star, 0.0);
    assert!(!r.strict_gap);
}

#[test]
fn certificate_examples() {
    let modded = build_named_set(&NamedSet::BenedicksMod { p: 2.0, delta: 0.1, q: 2.0, n_max: 50 }).unwrap();
    let c = extremal::theorem72_certificate(&modded, 2.0, 0.1, Some(2.0)).unwrap();
    assert_eq!(c.hypotheses_ok, [true, true, true]);
    assert_eq!(c.conclusion, "hypotheses-evidenced");
    let plain = build_named_set(&NamedSet::Benedicks { p: 2.0, delta: 0.1, n_max: 50 }).unwrap();
    let c = extremal::theorem72_certificate(&plain, 2.0, 0.1, None).unwrap();
    assert!(!c.hypotheses_ok[2]);
    assert_ne!(c.conclusion, "hypotheses-evidenced");
}

// ---------------------------------------------------------------------------
// discriminant

#[test]
fn delta_two_paths_at_sample_point() {
    let z = Complex64::new(2.0, 3.0);
    let a = discriminant::delta(1.0, z).unwrap();
    // written out by hand from the entries of the product
    let w = z.sqrt();
    let direct = w.cos() * z.cos() - (z + 1.0) * 0.5 * (w.sin() / w) * z.sin();
    assert!((a - direct).norm() <= 1e-12 * direct.norm());
}

#[test]
fn bands_sit_left_of_minus_k_pi() {
    let bs = find_bands(1.0, [-35.0 * PI, -5.0 * PI], 0.05).unwrap();
    for k in 5..35u64 {
        let b = bs.band(k).unwrap();
        let kp = -(k as f64) * PI;
        assert!(b[1] < kp && b[0] > kp - 0.5 * PI, "{k}: {b:?}");
    }
    assert!((bs.gap_width(30).unwrap() - PI).abs() < 0.05 * PI);
}

#[test]
fn band_edges_stable_under_halved_step() {
    let a = find_bands(0.7, [-30.0, -0.5], 0.05).unwrap();
    let b = find_bands(0.7, [-30.0, -0.5], 0.025).unwrap();
    assert_eq!(a.bands.len(), b.bands.len());
    for (x, y) in a.bands.iter().zip(&b.bands) {
        assert!((x[0] - y[0]).abs() < 1e-10 && (x[1] - y[1]).abs() < 1e-10);
    }
}

#[test]
fn dct_demo_derivative_and_pairing() {
    let rep = discriminant::dct_failure_demo(1.0, 1.0, 20).unwrap();
    assert!(rep.f_prime_rel_err < 1e-10);
    assert!(rep.f_prime_c1 > 0.0);
    assert!(rep.boundary_integral.norm() < 1e-12);
    assert!(rep.outer_factor_max_modulus <= 1.0);
    // the closed form written in terms of the real variable
    let a = rep.c1.abs().sqrt();
    assert!((rep.f_prime_c1 - (a).sinh() / (2.0 * a)).abs() < 1e-14);
}
