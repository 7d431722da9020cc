//! Finite unions of closed real intervals, the example families built from
//! them, and measure-theoretic diagnostics (homogeneity ratios and
//! logarithmic length).

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SetMeta {
    pub generator: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    /// Human-readable note on how an infinite family was cut off.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<String>,
}

/// A finite union of disjoint closed intervals, sorted left to right.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawRealSet")]
pub struct RealSet {
    intervals: Vec<[f64; 2]>,
    accumulation: Option<f64>,
    unbounded_right: bool,
    meta: SetMeta,
}

#[derive(Deserialize)]
struct RawRealSet {
    intervals: Vec<[f64; 2]>,
    #[serde(default)]
    accumulation: Option<f64>,
    #[serde(default)]
    unbounded_right: bool,
    #[serde(default)]
    meta: SetMeta,
}

impl TryFrom<RawRealSet> for RealSet {
    type Error = Error;
    fn try_from(raw: RawRealSet) -> Result<Self> {
        RealSet::new(raw.intervals, raw.accumulation, raw.unbounded_right, raw.meta)
    }
}

impl RealSet {
    pub fn new(
        intervals: Vec<[f64; 2]>,
        accumulation: Option<f64>,
        unbounded_right: bool,
        meta: SetMeta,
    ) -> Result<Self> {
        if intervals.is_empty() {
            return Err(Error::InvalidSet("no intervals".into()));
        }
        for iv in &intervals {
            if !(iv[0].is_finite() && iv[1].is_finite()) {
                return Err(Error::InvalidSet(format!("non-finite endpoint in {iv:?}")));
            }
            if iv[0] >= iv[1] {
                return Err(Error::InvalidSet(format!("empty or reversed interval {iv:?}")));
            }
        }
        for w in intervals.windows(2) {
            if w[0][1] >= w[1][0] {
                return Err(Error::Overlap(w[0][0], w[0][1], w[1][0], w[1][1]));
            }
        }
        if let Some(c) = accumulation {
            if !c.is_finite() {
                return Err(Error::InvalidSet("accumulation point must be finite".into()));
            }
            if let Some(iv) = intervals.iter().find(|iv| iv[0] < c && c < iv[1]) {
                return Err(Error::InvalidSet(format!(
                    "accumulation point {c} inside open interval ({}, {})",
                    iv[0], iv[1]
                )));
            }
        }
        Ok(RealSet { intervals, accumulation, unbounded_right, meta })
    }

    /// Plain set without accumulation tag or generator metadata.
    pub fn from_intervals(intervals: Vec<[f64; 2]>) -> Result<Self> {
        Self::new(intervals, None, false, SetMeta { generator: "explicit".into(), ..Default::default() })
    }

    /// Sorts and merges overlapping or touching intervals before validating.
    pub fn from_union(mut intervals: Vec<[f64; 2]>, accumulation: Option<f64>, meta: SetMeta) -> Result<Self> {
        intervals.sort_by(|a, b| a[0].total_cmp(&b[0]));
        let mut merged: Vec<[f64; 2]> = Vec::with_capacity(intervals.len());
        for iv in intervals {
            match merged.last_mut() {
                Some(last) if iv[0] <= last[1] => last[1] = last[1].max(iv[1]),
                _ => merged.push(iv),
            }
        }
        Self::new(merged, accumulation, false, meta)
    }

    pub fn intervals(&self) -> &[[f64; 2]] {
        &self.intervals
    }
    pub fn accumulation(&self) -> Option<f64> {
        self.accumulation
    }
    pub fn unbounded_right(&self) -> bool {
        self.unbounded_right
    }
    pub fn meta(&self) -> &SetMeta {
        &self.meta
    }
    pub fn lo(&self) -> f64 {
        self.intervals[0][0]
    }
    pub fn hi(&self) -> f64 {
        self.intervals[self.intervals.len() - 1][1]
    }
    pub fn diameter(&self) -> f64 {
        let mut lo = self.lo();
        let mut hi = self.hi();
        if let Some(c) = self.accumulation {
            lo = lo.min(c);
            hi = hi.max(c);
        }
        hi - lo
    }
    pub fn total_length(&self) -> f64 {
        self.intervals.iter().map(|iv| iv[1] - iv[0]).sum()
    }
    pub fn gap_count(&self) -> usize {
        self.intervals.len() - 1
    }

    pub fn contains(&self, x: f64) -> bool {
        self.interval_index(x).is_some()
    }

    /// Index of the closed interval containing `x`.
    pub fn interval_index(&self, x: f64) -> Option<usize> {
        let i = self.intervals.partition_point(|iv| iv[1] < x);
        (i < self.intervals.len() && self.intervals[i][0] <= x).then_some(i)
    }

    /// Whether `x` lies strictly inside one of the intervals.
    pub fn in_interior(&self, x: f64) -> bool {
        self.interval_index(x).is_some_and(|i| self.intervals[i][0] < x && x < self.intervals[i][1])
    }

    /// Lebesgue measure of `E ∩ (a, b)`.
    pub fn measure_in(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let start = self.intervals.partition_point(|iv| iv[1] <= a);
        let mut m = 0.0;
        for iv in &self.intervals[start..] {
            if iv[0] >= b {
                break;
            }
            m += (iv[1].min(b) - iv[0].max(a)).max(0.0);
        }
        m
    }

    pub fn with_meta(mut self, meta: SetMeta) -> Self {
        self.meta = meta;
        self
    }

    /// Truncation of the set to its first `k` intervals counted from the
    /// outer end (away from the accumulation point, if any).
    pub fn keep_outer(&self, k: usize) -> Result<RealSet> {
        let n = self.intervals.len();
        let k = k.clamp(1, n);
        let kept = match self.accumulation {
            Some(c) if c <= self.lo() => self.intervals[n - k..].to_vec(),
            _ => self.intervals[..k].to_vec(),
        };
        RealSet::new(kept, self.accumulation, self.unbounded_right, self.meta.clone())
    }
}

impl fmt::Display for RealSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.intervals.iter().map(|iv| format!("[{}, {}]", iv[0], iv[1])).collect();
        write!(f, "{}", parts.join(" ∪ "))
    }
}

/// Hull and gaps of a set. Gap `j` is the open interval `(gaps[j][0], gaps[j][1])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapSystem {
    pub hull: [f64; 2],
    pub gaps: Vec<[f64; 2]>,
    /// Degenerate one-point bands (an accumulation point kept as a point of
    /// the closure).
    pub point_bands: Vec<f64>,
}

impl GapSystem {
    /// Gaps between consecutive intervals.
    pub fn of(set: &RealSet) -> Self {
        let iv = set.intervals();
        let gaps = iv.windows(2).map(|w| [w[0][1], w[1][0]]).collect();
        GapSystem { hull: [set.lo(), set.hi()], gaps, point_bands: Vec::new() }
    }

    /// Like [`GapSystem::of`], but the accumulation point (when it is not an
    /// endpoint of an interval) becomes a one-point band. This is the gap
    /// structure of the closure of the truncated family.
    pub fn with_accumulation(set: &RealSet) -> Self {
        let mut sys = Self::of(set);
        let Some(c) = set.accumulation() else { return sys };
        if set.contains(c) {
            return sys;
        }
        if c < sys.hull[0] {
            sys.gaps.insert(0, [c, sys.hull[0]]);
            sys.hull[0] = c;
        } else if c > sys.hull[1] {
            sys.gaps.push([sys.hull[1], c]);
            sys.hull[1] = c;
        } else {
            let j = sys.gaps.iter().position(|g| g[0] < c && c < g[1]).expect("c lies in a gap");
            let g = sys.gaps[j];
            sys.gaps.splice(j..=j, [[g[0], c], [c, g[1]]]);
        }
        sys.point_bands.push(c);
        sys
    }

    pub fn genus(&self) -> usize {
        self.gaps.len()
    }

    /// All band edges in increasing order (hull ends included).
    pub fn edges(&self) -> Vec<f64> {
        let mut e = Vec::with_capacity(2 * self.gaps.len() + 2);
        e.push(self.hull[0]);
        for g in &self.gaps {
            e.push(g[0]);
            e.push(g[1]);
        }
        e.push(self.hull[1]);
        e
    }

    /// Bands of positive length.
    pub fn bands(&self) -> Vec<[f64; 2]> {
        let e = self.edges();
        e.chunks(2).map(|c| [c[0], c[1]]).filter(|b| b[1] > b[0]).collect()
    }

    pub fn gap_of(&self, x: f64) -> Option<usize> {
        self.gaps.iter().position(|g| g[0] < x && x < g[1])
    }

    pub fn in_band_interior(&self, x: f64) -> bool {
        self.bands().iter().any(|b| b[0] < x && x < b[1])
    }

    /// Whether the real point `x` is on the closed set.
    pub fn on_set(&self, x: f64) -> bool {
        self.bands().iter().any(|b| b[0] <= x && x <= b[1]) || self.point_bands.contains(&x)
    }
}

// ---------------------------------------------------------------------------
// Named families

#[derive(Debug, Clone, PartialEq)]
pub enum NamedSet {
    Single,
    TwoSymmetric,
    Geometric { n: usize, q: f64 },
    FatCantor { level: u32, ratio: f64 },
    Benedicks { p: f64, delta: f64, n_max: usize },
    BenedicksMod { p: f64, delta: f64, q: f64, n_max: usize },
    InvertedCorollary { p: f64, delta: f64, q: f64, n_max: usize },
}

impl NamedSet {
    /// Parses `name` or `name:key=value,key=value`.
    ///
    /// ```
    /// use widom_lab::realset::NamedSet;
    /// let s = NamedSet::parse("geometric:N=40,q=4").unwrap();
    /// assert_eq!(s, NamedSet::Geometric { n: 40, q: 4.0 });
    /// ```
    pub fn parse(spec: &str) -> Result<Self> {
        let (name, rest) = spec.split_once(':').unwrap_or((spec, ""));
        let mut kv = BTreeMap::new();
        for part in rest.split(',').filter(|s| !s.trim().is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::ParameterDomain(format!("expected key=value, got {part:?}")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::ParameterDomain(format!("bad number {v:?} for {k}")))?;
            kv.insert(k.trim().to_ascii_lowercase(), v);
        }
        let get = |k: &str, default: Option<f64>| -> Result<f64> {
            kv.get(k)
                .copied()
                .or(default)
                .ok_or_else(|| Error::ParameterDomain(format!("missing parameter {k} for {name}")))
        };
        let count = |k: &str, default: Option<f64>| -> Result<usize> {
            let v = get(k, default)?;
            if v < 0.0 || v.fract() != 0.0 {
                return Err(Error::ParameterDomain(format!("{k} must be a non-negative integer")));
            }
            Ok(v as usize)
        };
        Ok(match name.trim() {
            "single" => NamedSet::Single,
            "two_symmetric" | "two-symmetric" => NamedSet::TwoSymmetric,
            "geometric" => NamedSet::Geometric { n: count("n", Some(40.0))?, q: get("q", Some(4.0))? },
            "fat_cantor" | "fat-cantor" => NamedSet::FatCantor {
                level: count("level", Some(4.0))? as u32,
                ratio: get("ratio", Some(0.25))?,
            },
            "benedicks" => NamedSet::Benedicks {
                p: get("p", Some(2.0))?,
                delta: get("delta", Some(0.1))?,
                n_max: count("n", Some(50.0))?,
            },
            "benedicks_mod" | "benedicks-mod" => NamedSet::BenedicksMod {
                p: get("p", Some(2.0))?,
                delta: get("delta", Some(0.1))?,
                q: get("q", Some(2.0))?,
                n_max: count("n", Some(50.0))?,
            },
            "inverted_corollary" | "inverted-corollary" => NamedSet::InvertedCorollary {
                p: get("p", Some(2.0))?,
                delta: get("delta", Some(0.1))?,
                q: get("q", Some(2.0))?,
                n_max: count("n", Some(25.0))?,
            },
            other => return Err(Error::ParameterDomain(format!("unknown set family {other:?}"))),
        })
    }
}

fn meta(generator: &str, params: &[(&str, f64)], truncation: Option<String>) -> SetMeta {
    SetMeta {
        generator: generator.into(),
        params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        truncation,
    }
}

fn benedicks_intervals(p: f64, delta: f64, n_max: usize) -> Result<Vec<[f64; 2]>> {
    if !(p > 1.0) {
        return Err(Error::ParameterDomain(format!("p = {p} must exceed 1")));
    }
    if !(delta > 0.0) {
        return Err(Error::ParameterDomain(format!("delta = {delta} must be positive")));
    }
    if n_max < 1 {
        return Err(Error::ParameterDomain("n_max must be at least 1".into()));
    }
    if delta >= 1.0 {
        return Err(Error::Overlap(-1.0 - delta, -1.0 + delta, 1.0 - delta, 1.0 + delta));
    }
    let mut right = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let c = (n as f64).powf(p);
        right.push([c - delta, c + delta]);
    }
    for w in right.windows(2) {
        if w[0][1] >= w[1][0] {
            return Err(Error::Overlap(w[0][0], w[0][1], w[1][0], w[1][1]));
        }
    }
    let mut all: Vec<[f64; 2]> = right.iter().rev().map(|iv| [-iv[1], -iv[0]]).collect();
    all.extend(right);
    Ok(all)
}

fn benedicks_mod_intervals(p: f64, delta: f64, q: f64, n_max: usize) -> Result<Vec<[f64; 2]>> {
    if !(q > 1.0) {
        return Err(Error::ParameterDomain(format!("q = {q} must exceed 1")));
    }
    let mut all = benedicks_intervals(p, delta, n_max)?;
    for n in 1..=n_max {
        let lo = q.powi(2 * n as i32 - 1);
        let hi = q.powi(2 * n as i32);
        all.push([lo, hi]);
        all.push([-hi, -lo]);
    }
    Ok(all)
}

/// Builds one of the example sets.
pub fn build_named_set(name: &NamedSet) -> Result<RealSet> {
    match *name {
        NamedSet::Single => RealSet::new(vec![[-1.0, 1.0]], None, false, meta("single", &[], None)),
        NamedSet::TwoSymmetric => {
            RealSet::new(vec![[-2.0, -1.0], [1.0, 2.0]], None, false, meta("two_symmetric", &[], None))
        }
        NamedSet::Geometric { n, q } => {
            if n < 1 {
                return Err(Error::ParameterDomain("geometric set needs N >= 1".into()));
            }
            if !(q > 1.0) {
                return Err(Error::ParameterDomain(format!("q = {q} must exceed 1")));
            }
            // [q^-k, q^-k (1 + 2^-k)], k = 1..N, accumulating at 0
            let mut iv: Vec<[f64; 2]> = (1..=n)
                .map(|k| {
                    let s = q.powi(-(k as i32));
                    [s, s * (1.0 + 0.5f64.powi(k as i32))]
                })
                .collect();
            iv.reverse();
            RealSet::new(
                iv,
                Some(0.0),
                false,
                meta("geometric", &[("N", n as f64), ("q", q)], Some(format!("k <= {n}"))),
            )
        }
        NamedSet::FatCantor { level, ratio } => {
            if !(ratio > 0.0 && ratio < 1.0) {
                return Err(Error::ParameterDomain(format!("ratio = {ratio} not in (0, 1)")));
            }
            if level > 16 {
                return Err(Error::ParameterDomain("fat Cantor level capped at 16".into()));
            }
            let mut iv = vec![[0.0, 1.0]];
            for k in 1..=level {
                let frac = ratio.powi(k as i32);
                iv = iv
                    .iter()
                    .flat_map(|&[a, b]| {
                        let len = b - a;
                        let cut = 0.5 * (1.0 - frac) * len;
                        [[a, a + cut], [b - cut, b]]
                    })
                    .collect();
            }
            RealSet::new(
                iv,
                None,
                false,
                meta("fat_cantor", &[("level", level as f64), ("ratio", ratio)], Some(format!("level {level}"))),
            )
        }
        NamedSet::Benedicks { p, delta, n_max } => RealSet::new(
            benedicks_intervals(p, delta, n_max)?,
            None,
            false,
            meta(
                "benedicks",
                &[("p", p), ("delta", delta), ("n_max", n_max as f64)],
                Some(format!("n <= {n_max}")),
            ),
        ),
        NamedSet::BenedicksMod { p, delta, q, n_max } => RealSet::from_union(
            benedicks_mod_intervals(p, delta, q, n_max)?,
            None,
            meta(
                "benedicks_mod",
                &[("p", p), ("delta", delta), ("q", q), ("n_max", n_max as f64)],
                Some(format!("n <= {n_max} in both the power and the geometric family")),
            ),
        ),
        NamedSet::InvertedCorollary { p, delta, q, n_max } => {
            let src = build_named_set(&NamedSet::BenedicksMod { p, delta, q, n_max })?;
            let iv: Vec<[f64; 2]> = src.intervals().iter().map(|iv| [1.0 / iv[1], 1.0 / iv[0]]).collect();
            RealSet::from_union(
                iv,
                Some(0.0),
                meta(
                    "inverted_corollary",
                    &[("p", p), ("delta", delta), ("q", q), ("n_max", n_max as f64)],
                    Some(format!("image of benedicks_mod with n <= {n_max} under x -> 1/x")),
                ),
            )
        }
    }
}

// ---------------------------------------------------------------------------
// Homogeneity

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomogeneityRow {
    pub x: f64,
    pub delta: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomogeneityReport {
    pub min_ratio: f64,
    pub argmin: (f64, f64),
    /// Per sample point, the largest ratio over the δ grid (finite-grid
    /// stand-in for the limsup as δ → 0⁺).
    pub limsup_proxy: Vec<(f64, f64)>,
    pub delta_grid: Vec<f64>,
    pub table: Vec<HomogeneityRow>,
}

/// `|E ∩ (x-δ, x+δ)| / δ`.
pub fn density_ratio(set: &RealSet, x: f64, delta: f64) -> f64 {
    set.measure_in(x - delta, x + delta) / delta
}

/// Log-spaced δ grid from `1e-6 · diameter` up to the diameter.
pub fn default_delta_grid(set: &RealSet, points: usize) -> Vec<f64> {
    let d = set.diameter();
    let lo = (1e-6 * d).ln();
    let hi = d.ln();
    let n = points.max(2);
    (0..n).map(|i| (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp()).collect()
}

pub fn homogeneity_report(set: &RealSet, x_samples: &[f64], delta_grid: &[f64]) -> Result<HomogeneityReport> {
    if x_samples.is_empty() || delta_grid.is_empty() {
        return Err(Error::Precondition("empty sample or δ grid".into()));
    }
    if let Some(d) = delta_grid.iter().find(|d| !(**d > 0.0)) {
        return Err(Error::ParameterDomain(format!("δ = {d} must be positive")));
    }
    let mut table = Vec::with_capacity(x_samples.len() * delta_grid.len());
    let mut limsup_proxy = Vec::with_capacity(x_samples.len());
    let mut min_ratio = f64::INFINITY;
    let mut argmin = (f64::NAN, f64::NAN);
    for &x in x_samples {
        if !set.contains(x) {
            return Err(Error::SampleNotInSet(x));
        }
        let mut best = 0.0f64;
        for &d in delta_grid {
            let ratio = density_ratio(set, x, d);
            if ratio < min_ratio {
                min_ratio = ratio;
                argmin = (x, d);
            }
            best = best.max(ratio);
            table.push(HomogeneityRow { x, delta: d, ratio });
        }
        limsup_proxy.push((x, best));
    }
    Ok(HomogeneityReport { min_ratio, argmin, limsup_proxy, delta_grid: delta_grid.to_vec(), table })
}

// ---------------------------------------------------------------------------
// Logarithmic length

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Convergent,
    Divergent,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailDirection {
    /// Intervals accumulate at the pole; the tail is the part nearest to it.
    Inward,
    /// The tail is the part farthest from the pole.
    Outward,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalTerm {
    pub lo: f64,
    pub hi: f64,
    pub integral: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShellTerm {
    pub index: usize,
    pub inner: f64,
    pub outer: f64,
    pub increment: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogLengthReport {
    pub pole: f64,
    pub direction: TailDirection,
    /// Intervals in tail order with their closed-form `∫ dx / |x - pole|`.
    pub per_interval: Vec<IntervalTerm>,
    pub partial_sums: Vec<f64>,
    pub total: f64,
    pub shell_ratio: f64,
    /// Complete distance shells only.
    pub shells: Vec<ShellTerm>,
    /// Least-squares slope of `ln(increment)` against shell index over the
    /// last third of the non-empty shells.
    pub fit_slope: Option<f64>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LogLengthOptions {
    /// Ratio between consecutive distance shells; defaults from the generator.
    pub shell_ratio: Option<f64>,
    /// Restriction to a range of intervals in tail order.
    pub range: Option<Range<usize>>,
}

pub const SLOPE_THRESHOLD: f64 = 0.05;

fn default_shell_ratio(set: &RealSet) -> f64 {
    let m = set.meta();
    let q = m.params.get("q").copied();
    match (m.generator.as_str(), q) {
        ("geometric", Some(q)) => q,
        ("benedicks_mod" | "inverted_corollary", Some(q)) => q * q,
        _ => 4.0,
    }
}

/// Closed-form `∫_E dx / |x - pole|`, per interval and by distance shells,
/// with a convergence verdict for the infinite family the set truncates.
pub fn log_length(set: &RealSet, pole: f64, opts: &LogLengthOptions) -> Result<LogLengthReport> {
    if let Some(iv) = set.intervals().iter().find(|iv| iv[0] < pole && pole < iv[1]) {
        return Err(Error::PoleInsideInterval { pole, lo: iv[0], hi: iv[1] });
    }
    let ratio = opts.shell_ratio.unwrap_or_else(|| default_shell_ratio(set));
    if !(ratio > 1.0) {
        return Err(Error::ParameterDomain(format!("shell ratio {ratio} must exceed 1")));
    }
    let direction = if set.accumulation() == Some(pole) { TailDirection::Inward } else { TailDirection::Outward };

    // distance range [near, far] of every interval
    let mut dist: Vec<([f64; 2], [f64; 2])> = set
        .intervals()
        .iter()
        .map(|&iv| {
            let d = if iv[0] >= pole { [iv[0] - pole, iv[1] - pole] } else { [pole - iv[1], pole - iv[0]] };
            (iv, d)
        })
        .collect();
    match direction {
        TailDirection::Outward => dist.sort_by(|a, b| a.1[0].total_cmp(&b.1[0])),
        TailDirection::Inward => dist.sort_by(|a, b| b.1[1].total_cmp(&a.1[1])),
    }
    if let Some(r) = &opts.range {
        if r.start >= r.end || r.end > dist.len() {
            return Err(Error::ParameterDomain(format!("range {r:?} outside 0..{}", dist.len())));
        }
        dist = dist[r.clone()].to_vec();
    }

    let per_interval: Vec<IntervalTerm> = dist
        .iter()
        .map(|(iv, d)| IntervalTerm { lo: iv[0], hi: iv[1], integral: (d[1] / d[0]).ln() })
        .collect();
    let mut acc = 0.0;
    let partial_sums: Vec<f64> = per_interval
        .iter()
        .map(|t| {
            acc += t.integral;
            acc
        })
        .collect();
    let total = acc;

    if !total.is_finite() {
        return Ok(LogLengthReport {
            pole,
            direction,
            per_interval,
            partial_sums,
            total,
            shell_ratio: ratio,
            shells: Vec::new(),
            fit_slope: None,
            verdict: Verdict::Divergent,
        });
    }

    let near = dist.iter().map(|(_, d)| d[0]).fold(f64::INFINITY, f64::min);
    let far = dist.iter().map(|(_, d)| d[1]).fold(0.0, f64::max);
    let mut shells = Vec::new();
    for k in 0usize.. {
        let (inner, outer) = match direction {
            TailDirection::Outward => (near * ratio.powi(k as i32), near * ratio.powi(k as i32 + 1)),
            TailDirection::Inward => (far * ratio.powi(-(k as i32) - 1), far * ratio.powi(-(k as i32))),
        };
        let complete = match direction {
            TailDirection::Outward => outer <= far * (1.0 + 1e-12),
            TailDirection::Inward => inner >= near * (1.0 - 1e-12),
        };
        if !complete || k > 4000 {
            break;
        }
        let increment: f64 = dist
            .iter()
            .map(|(_, d)| {
                let a = d[0].max(inner);
                let b = d[1].min(outer);
                if b > a {
                    (b / a).ln()
                } else {
                    0.0
                }
            })
            .sum();
        shells.push(ShellTerm { index: k, inner, outer, increment });
    }

    let nonempty: Vec<(f64, f64)> =
        shells.iter().filter(|s| s.increment > 0.0).map(|s| (s.index as f64, s.increment.ln())).collect();
    let take = nonempty.len().div_ceil(3).max(3);
    let (fit_slope, verdict) = if nonempty.len() < 3 {
        (None, Verdict::Inconclusive)
    } else {
        let pts = &nonempty[nonempty.len().saturating_sub(take)..];
        let slope = least_squares_slope(pts);
        (Some(slope), if slope >= -SLOPE_THRESHOLD { Verdict::Divergent } else { Verdict::Convergent })
    };

    Ok(LogLengthReport { pole, direction, per_interval, partial_sums, total, shell_ratio: ratio, shells, fit_slope, verdict })
}

pub(crate) fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}
