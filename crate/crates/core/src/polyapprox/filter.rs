use serde::{Deserialize, Serialize};
use statrs::function::erf::{erf, erfc_inv};

use crate::error::{Error, Result};

use super::series::{ChebyshevSeries, Parity};

/// Filters are scaled so that `max |f| ≤ 1 − FILTER_MARGIN`.
pub const FILTER_MARGIN: f64 = 1e-6;
pub const DEGREE_CAP: usize = 2000;
pub const DEFAULT_GRID: usize = 2001;

const QUADRATURE_NODES: usize = 4096;
// fractions of ε spent on the erf tail at the gap edge
const TAIL_FRACTIONS: [f64; 19] = [
    0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5, 0.55, 0.6, 0.65, 0.7, 0.75, 0.8,
    0.85, 0.9, 0.95,
];

/// Threshold `μ`, transition width `Δ` and error budget `ε` for a smoothed step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpecRepr", into = "SpecRepr")]
pub struct FilterSpec {
    pub mu: f64,
    pub delta: f64,
    pub epsilon: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecRepr {
    mu: f64,
    delta: f64,
    epsilon: f64,
}

impl TryFrom<SpecRepr> for FilterSpec {
    type Error = Error;
    fn try_from(r: SpecRepr) -> Result<Self> {
        FilterSpec::new(r.mu, r.delta, r.epsilon)
    }
}

impl From<FilterSpec> for SpecRepr {
    fn from(s: FilterSpec) -> Self {
        SpecRepr {
            mu: s.mu,
            delta: s.delta,
            epsilon: s.epsilon,
        }
    }
}

impl FilterSpec {
    pub fn new(mu: f64, delta: f64, epsilon: f64) -> Result<Self> {
        if !(mu.is_finite() && delta.is_finite() && epsilon.is_finite()) {
            return Err(Error::NonFinite("filter spec".into()));
        }
        if !(0.0 < mu && mu < 1.0) {
            return Err(Error::Domain(format!("threshold mu = {mu} not in (0, 1)")));
        }
        if delta <= 0.0 {
            return Err(Error::Domain(format!("gap width delta = {delta} not positive")));
        }
        if !(0.0 < epsilon && epsilon < 1.0) {
            return Err(Error::Domain(format!("epsilon = {epsilon} not in (0, 1)")));
        }
        if mu - delta / 2.0 <= 0.0 || mu + delta / 2.0 >= 1.0 {
            return Err(Error::Domain(format!(
                "transition band [{}, {}] must lie inside (0, 1)",
                mu - delta / 2.0,
                mu + delta / 2.0
            )));
        }
        Ok(FilterSpec { mu, delta, epsilon })
    }

    pub fn lower_edge(&self) -> f64 {
        self.mu - self.delta / 2.0
    }

    pub fn upper_edge(&self) -> f64 {
        self.mu + self.delta / 2.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub name: String,
    pub region: [f64; 2],
    pub bound: f64,
    pub worst: f64,
    pub worst_x: f64,
    /// `bound − worst`; negative when violated.
    pub margin: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterReport {
    pub degree: usize,
    pub gridsize: usize,
    pub conditions: Vec<ConditionReport>,
}

impl FilterReport {
    pub fn pass(&self) -> bool {
        self.conditions.iter().all(|c| c.pass)
    }

    pub fn condition(&self, name: &str) -> Option<&ConditionReport> {
        self.conditions.iter().find(|c| c.name == name)
    }
}

/// A certified filter together with the erf width it was expanded from.
#[derive(Clone, Debug)]
pub struct FilterDesign {
    pub spec: FilterSpec,
    pub series: ChebyshevSeries,
    pub degree: usize,
    pub width: f64,
    pub report: FilterReport,
}

/// Uniform grid of `n` points on `[a, b]` merged with its `n − 1` midpoints.
fn certification_grid(a: f64, b: f64, n: usize) -> impl Iterator<Item = f64> {
    let m = 2 * n - 1;
    let h = (b - a) / (m - 1) as f64;
    (0..m).map(move |j| if j == m - 1 { b } else { a + h * j as f64 })
}

fn worst_over(
    f: &ChebyshevSeries,
    a: f64,
    b: f64,
    n: usize,
    err: impl Fn(f64) -> f64,
) -> (f64, f64) {
    certification_grid(a, b, n)
        .map(|x| (err(f.eval(x)), x))
        .fold((f64::NEG_INFINITY, a), |acc, v| if v.0 > acc.0 { v } else { acc })
}

/// Checks the three filter conditions on uniform grids plus their half-step shifts.
pub fn certify_filter(f: &ChebyshevSeries, spec: &FilterSpec, gridsize: usize) -> FilterReport {
    let n = gridsize.max(101);
    let half = spec.epsilon / 2.0;
    let mut conditions = Vec::with_capacity(3);

    let (a, b) = (spec.upper_edge(), 1.0);
    let (worst, x) = worst_over(f, a, b, n, |v| v.abs());
    conditions.push(ConditionReport {
        name: "filter1".into(),
        region: [a, b],
        bound: half,
        worst,
        worst_x: x,
        margin: half - worst,
        pass: worst < half,
    });

    let (a, b) = (0.0, spec.lower_edge());
    let (worst, x) = worst_over(f, a, b, n, |v| (1.0 - v).abs());
    conditions.push(ConditionReport {
        name: "filter2".into(),
        region: [a, b],
        bound: half,
        worst,
        worst_x: x,
        margin: half - worst,
        pass: worst < half,
    });

    let bound = 1.0 - FILTER_MARGIN;
    let (worst, x) = worst_over(f, -1.0, 1.0, n, |v| v.abs());
    conditions.push(ConditionReport {
        name: "filter3".into(),
        region: [-1.0, 1.0],
        bound,
        worst,
        worst_x: x,
        margin: bound - worst,
        pass: worst <= bound,
    });

    FilterReport {
        degree: f.degree(),
        gridsize: n,
        conditions,
    }
}

/// Even Chebyshev expansion of `½(erf(k(x+μ)) − erf(k(x−μ)))`, extended on demand.
struct ErfWindow {
    width: f64,
    samples: Vec<f64>,
    coeffs: Vec<f64>,
}

impl ErfWindow {
    fn new(mu: f64, width: f64) -> Self {
        let n = QUADRATURE_NODES;
        let samples = (0..n)
            .map(|j| {
                let x = ((j as f64 + 0.5) * std::f64::consts::PI / n as f64).cos();
                0.5 * (erf(width * (x + mu)) - erf(width * (x - mu)))
            })
            .collect();
        ErfWindow {
            width,
            samples,
            coeffs: Vec::new(),
        }
    }

    fn ensure(&mut self, d: usize) {
        let n = QUADRATURE_NODES;
        while self.coeffs.len() <= d {
            let k = self.coeffs.len();
            let c = if k % 2 == 1 {
                0.0
            } else {
                let s: f64 = self
                    .samples
                    .iter()
                    .enumerate()
                    .map(|(j, g)| {
                        g * (k as f64 * (j as f64 + 0.5) * std::f64::consts::PI / n as f64).cos()
                    })
                    .sum();
                let c = 2.0 * s / n as f64;
                if k == 0 {
                    c / 2.0
                } else {
                    c
                }
            };
            self.coeffs.push(c);
        }
    }

    /// Degree-`d` truncation rescaled to `max |f| ≤ 1 − FILTER_MARGIN`.
    fn candidate(&mut self, d: usize) -> ChebyshevSeries {
        self.ensure(d);
        let raw = ChebyshevSeries::new(self.coeffs[..=d].to_vec(), Parity::Even)
            .expect("odd coefficients are exactly zero");
        let peak = raw.max_abs_on(0.0, 1.0);
        raw.scaled((1.0 - FILTER_MARGIN) / peak.max(1.0))
    }
}

fn windows(spec: &FilterSpec) -> Vec<ErfWindow> {
    TAIL_FRACTIONS
        .iter()
        .map(|frac| ErfWindow::new(spec.mu, erfc_inv(frac * spec.epsilon) / (spec.delta / 2.0)))
        .collect()
}

// cheap rejection before the full certification grid
fn quick_reject(f: &ChebyshevSeries, spec: &FilterSpec) -> bool {
    certify_filter(f, spec, 101).conditions[..2].iter().any(|c| !c.pass)
}

fn try_degree(ws: &mut [ErfWindow], spec: &FilterSpec, d: usize) -> Option<FilterDesign> {
    for w in ws.iter_mut() {
        let f = w.candidate(d);
        if quick_reject(&f, spec) {
            continue;
        }
        let report = certify_filter(&f, spec, DEFAULT_GRID);
        if report.pass() {
            return Some(FilterDesign {
                spec: *spec,
                degree: d,
                width: w.width,
                series: f,
                report,
            });
        }
    }
    None
}

fn cap_failure(ws: &mut [ErfWindow], spec: &FilterSpec, d: usize) -> Error {
    // report the least-bad violation among the candidates at the cap
    let mut worst: Option<(f64, &'static str, f64)> = None;
    for w in ws.iter_mut() {
        let report = certify_filter(&w.candidate(d), spec, DEFAULT_GRID);
        let bad = report
            .conditions
            .iter()
            .filter(|c| !c.pass)
            .map(|c| (-c.margin, c.worst_x, c.name.clone()))
            .fold(None::<(f64, f64, String)>, |acc, v| match acc {
                Some(a) if a.0 >= v.0 => Some(a),
                _ => Some(v),
            });
        if let Some((excess, x, name)) = bad {
            let name: &'static str = match name.as_str() {
                "filter1" => "filter1",
                "filter2" => "filter2",
                _ => "filter3",
            };
            if worst.is_none_or(|w| excess < w.0) {
                worst = Some((excess, name, x));
            }
        }
    }
    let (excess, condition, x) = worst.unwrap_or((0.0, "filter1", spec.upper_edge()));
    Error::FilterCertification {
        degree: d,
        condition,
        x,
        excess,
    }
}

/// Lowest even degree (up to [`DEGREE_CAP`]) at which an erf window certifies.
pub fn heaviside_filter(spec: &FilterSpec) -> Result<FilterDesign> {
    let mut ws = windows(spec);
    let mut hi = 8;
    let mut found = loop {
        if let Some(f) = try_degree(&mut ws, spec, hi) {
            break f;
        }
        if hi >= DEGREE_CAP {
            return Err(cap_failure(&mut ws, spec, DEGREE_CAP));
        }
        hi = (2 * hi).min(DEGREE_CAP);
    };
    let mut lo = if hi == 8 { 0 } else { hi / 2 };
    // invariant: lo fails (or is 0 and untested), hi passes
    while hi - lo > 2 {
        let mid = (lo + hi) / 2 & !1;
        match try_degree(&mut ws, spec, mid) {
            Some(f) => {
                hi = mid;
                found = f;
            }
            None => lo = mid,
        }
    }
    if lo == 0 && hi == 2 {
        if let Some(f) = try_degree(&mut ws, spec, 0) {
            found = f;
        }
    }
    Ok(found)
}

/// Filter at a prescribed even degree; fails if no erf window certifies there.
pub fn heaviside_filter_at_degree(spec: &FilterSpec, degree: usize) -> Result<FilterDesign> {
    if degree % 2 == 1 {
        return Err(Error::Domain(format!("filter degree {degree} must be even")));
    }
    let mut ws = windows(spec);
    try_degree(&mut ws, spec, degree).ok_or_else(|| cap_failure(&mut ws, spec, degree))
}
