//! Detection of the ordered critical set (strict extremizers and plateau
//! extremizer intervals) of a univariate function, plus validation of the
//! alternation relation the downstream construction relies on.
//!
//! Detection is numeric: an equidistant scan classifies successive
//! differences as rising, falling, or flat (within a plateau tolerance);
//! sign changes bracket point extrema, which golden-section search then
//! refines; flat runs become plateau intervals whose endpoints are refined
//! by bisection against the plateau tolerance.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Refinement tolerance in `x` for extremum locations.
const X_REFINE_TOL: f64 = 1e-10;

/// One extremizer set: a strict extremum point or a plateau interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Extremizer {
    /// Strict local extremum at a point.
    Point(f64),
    /// Plateau extremizer spanning a closed interval.
    Interval(f64, f64),
}

impl Extremizer {
    /// Canonical representative: the point itself, or the plateau midpoint.
    pub fn representative(&self) -> f64 {
        match *self {
            Extremizer::Point(x) => x,
            Extremizer::Interval(l, u) => 0.5 * (l + u),
        }
    }

    /// Smallest element of the set.
    pub fn min(&self) -> f64 {
        match *self {
            Extremizer::Point(x) => x,
            Extremizer::Interval(l, _) => l,
        }
    }

    /// Largest element of the set.
    pub fn max(&self) -> f64 {
        match *self {
            Extremizer::Point(x) => x,
            Extremizer::Interval(_, u) => u,
        }
    }
}

/// Ordered critical structure of a function on a closed interval.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CriticalSet {
    /// Domain the set was computed on.
    pub domain: (f64, f64),
    /// Strictly ordered extremizer sets, endpoints excluded.
    pub extremizers: Vec<Extremizer>,
    /// Function values at the extremizers, aligned with `extremizers`.
    pub values: Vec<f64>,
    /// `(f(x_0), f(x_{M+1}))` at the domain endpoints.
    pub endpoint_values: (f64, f64),
    /// Alternation sign: `+1` when the full node-value sequence starts
    /// increasing (first extremizer is a maximum), `−1` otherwise.
    pub sign: i8,
    /// True for interval (plateau) extremizers, aligned with `extremizers`.
    pub plateau_flags: Vec<bool>,
}

impl CriticalSet {
    /// Number of extremizer sets `M`.
    pub fn m(&self) -> usize {
        self.extremizers.len()
    }

    /// Full node-value sequence `f(x_0), f_1, …, f_M, f(x_{M+1})`.
    pub fn node_values(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.m() + 2);
        out.push(self.endpoint_values.0);
        out.extend_from_slice(&self.values);
        out.push(self.endpoint_values.1);
        out
    }

    /// Representatives of the extremizer sets, in order.
    pub fn representatives(&self) -> Vec<f64> {
        self.extremizers.iter().map(|e| e.representative()).collect()
    }

    /// Smallest absolute jump `min_i |f(x_{i+1}) − f(x_i)|` between
    /// consecutive node values. Half of this is the sup-error floor for any
    /// approximant of polynomial degree ≤ M composed with a homeomorphism.
    pub fn min_value_gap(&self) -> f64 {
        self.node_values()
            .windows(2)
            .map(|w| (w[1] - w[0]).abs())
            .fold(f64::INFINITY, f64::min)
    }

    /// True when any extremizer is a plateau interval.
    pub fn has_plateau(&self) -> bool {
        self.plateau_flags.iter().any(|&p| p)
    }
}

/// Default plateau tolerance for an observed value range.
pub fn default_plateau_tol(range: f64) -> f64 {
    1e-9 * (1.0 + range)
}

/// Sign `s ∈ {+1, −1}` such that `s · (−1)^i (f_{i+1} − f_i) > 0` for all
/// consecutive pairs, i.e. the sequence strictly alternates starting upward
/// (`+1`) or downward (`−1`).
pub fn alternation_sign(values: &[f64]) -> Result<i8> {
    if values.len() < 2 {
        return Err(Error::InvalidInput(
            "alternation needs at least two values".into(),
        ));
    }
    let first = values[1] - values[0];
    if first == 0.0 {
        return Err(Error::NotAlternating { index: 0 });
    }
    // The first pair admits exactly one sign; verify it on the rest.
    let sign = if first > 0.0 { 1i8 } else { -1i8 };
    let mut parity = 1.0;
    for (i, w) in values.windows(2).enumerate() {
        let term = f64::from(sign) * parity * (w[1] - w[0]);
        if !(term > 0.0) {
            return Err(Error::NotAlternating { index: i });
        }
        parity = -parity;
    }
    Ok(sign)
}

/// Monotone pieces `I_0 .. I_M`: contiguous intervals covering the domain,
/// meeting at the extremizer representatives.
pub fn piece_decomposition(domain: (f64, f64), cs: &CriticalSet) -> Vec<(f64, f64)> {
    let mut cuts = vec![domain.0];
    cuts.extend(cs.representatives());
    cuts.push(domain.1);
    cuts.windows(2).map(|w| (w[0], w[1])).collect()
}

/// Scan an equidistant grid, classify difference signs, and return the
/// refined critical set.
///
/// `plateau_tol` of `None` uses [`default_plateau_tol`] of the observed
/// range. Constant functions (range below the plateau tolerance) are an
/// error, as is a refined value sequence that fails to alternate.
pub fn find_critical_sets(
    f: &dyn Fn(f64) -> f64,
    domain: (f64, f64),
    n_scan: usize,
    plateau_tol: Option<f64>,
) -> Result<CriticalSet> {
    let (a, b) = domain;
    if !(a < b) {
        return Err(Error::InvalidInput(format!("invalid domain [{a}, {b}]")));
    }
    if n_scan < 3 {
        return Err(Error::InvalidInput(format!(
            "n_scan must be at least 3, got {n_scan}"
        )));
    }
    let xs: Vec<f64> = (0..n_scan)
        .map(|i| a + (b - a) * i as f64 / (n_scan - 1) as f64)
        .collect();
    let vs: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    if let Some(i) = vs.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!(
            "f({}) is not finite during critical scan",
            xs[i]
        )));
    }
    let (vmin, vmax) = vs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let range = vmax - vmin;
    let tol = plateau_tol.unwrap_or_else(|| default_plateau_tol(range));
    if range <= tol {
        return Err(Error::ConstantFunction { range });
    }

    // Classify each grid difference and merge equal classes into segments
    // (class, first diff index, last diff index).
    #[derive(PartialEq, Clone, Copy)]
    enum Class {
        Up,
        Down,
        Flat,
    }
    let mut segments: Vec<(Class, usize, usize)> = Vec::new();
    for i in 0..n_scan - 1 {
        let d = vs[i + 1] - vs[i];
        let class = if d.abs() <= tol {
            Class::Flat
        } else if d > 0.0 {
            Class::Up
        } else {
            Class::Down
        };
        match segments.last_mut() {
            Some((c, _, last)) if *c == class => *last = i,
            _ => segments.push((class, i, i)),
        }
    }
    // Single-cell flat segments between two opposite movements are part of
    // a smooth turning point, not a plateau; absorb them so the
    // surrounding movements become adjacent.
    let mut filtered: Vec<(Class, usize, usize)> = Vec::new();
    for (idx, seg) in segments.iter().enumerate() {
        let (class, first, last) = *seg;
        if class == Class::Flat && last == first && idx > 0 && idx + 1 < segments.len() {
            let prev = segments[idx - 1].0;
            let next = segments[idx + 1].0;
            let opposite = matches!(
                (prev, next),
                (Class::Up, Class::Down) | (Class::Down, Class::Up)
            );
            if opposite {
                continue;
            }
        }
        filtered.push(*seg);
    }

    let mut extremizers = Vec::new();
    let mut values = Vec::new();
    let mut plateau_flags = Vec::new();
    for i in 0..filtered.len() {
        let (class, first, last) = filtered[i];
        match class {
            Class::Flat => {
                // Interior flat run bounded by opposite movements is a
                // plateau extremizer; flat shelves inside a monotone
                // stretch and flat runs touching the boundary are not.
                if i == 0 || i + 1 == filtered.len() {
                    continue;
                }
                let prev = filtered[i - 1].0;
                let next = filtered[i + 1].0;
                let is_plateau = matches!(
                    (prev, next),
                    (Class::Up, Class::Down) | (Class::Down, Class::Up)
                );
                if !is_plateau {
                    continue;
                }
                let inside_l = xs[first];
                let inside_u = xs[last + 1];
                let level = f(0.5 * (inside_l + inside_u));
                let outer_l = xs[first.saturating_sub(1)];
                let outer_u = xs[(last + 2).min(n_scan - 1)];
                let l = refine_plateau_edge(f, outer_l, inside_l, level, tol);
                let u = refine_plateau_edge(f, outer_u, inside_u, level, tol);
                extremizers.push(Extremizer::Interval(l, u));
                values.push(level);
                plateau_flags.push(true);
            }
            Class::Up | Class::Down => {
                // A turning point sits between this segment and the next
                // movement of opposite class.
                let Some(&(next_class, next_first, _)) = filtered.get(i + 1) else {
                    continue;
                };
                let turns = matches!(
                    (class, next_class),
                    (Class::Up, Class::Down) | (Class::Down, Class::Up)
                );
                if !turns {
                    continue;
                }
                // Bracket around the turning grid point. The two segments
                // may be separated by an absorbed single-cell flat.
                let lo = xs[last];
                let hi = xs[(next_first + 1).min(n_scan - 1)];
                let maximum = class == Class::Up;
                let x_star = golden_section(f, lo, hi, maximum);
                extremizers.push(Extremizer::Point(x_star));
                values.push(f(x_star));
                plateau_flags.push(false);
            }
        }
    }

    let endpoint_values = (vs[0], vs[n_scan - 1]);
    let mut node_values = Vec::with_capacity(values.len() + 2);
    node_values.push(endpoint_values.0);
    node_values.extend_from_slice(&values);
    node_values.push(endpoint_values.1);
    let sign = alternation_sign(&node_values).map_err(|e| {
        Error::InternalConsistency(format!(
            "refined critical values fail alternation: {e}"
        ))
    })?;
    Ok(CriticalSet {
        domain,
        extremizers,
        values,
        endpoint_values,
        sign,
        plateau_flags,
    })
}

/// Bisection for the plateau edge: the point where `|f − level|` crosses
/// the plateau tolerance, between a point outside the plateau and a point
/// inside it.
fn refine_plateau_edge(
    f: &dyn Fn(f64) -> f64,
    mut outside: f64,
    mut inside: f64,
    level: f64,
    tol: f64,
) -> f64 {
    // The scan guarantees |f(inside) − level| <= tol; if the outer sample
    // is also within tolerance (plateau touches the scan cell boundary),
    // keep the inner point.
    if (f(outside) - level).abs() <= tol {
        return inside;
    }
    while (inside - outside).abs() > X_REFINE_TOL {
        let mid = 0.5 * (inside + outside);
        if (f(mid) - level).abs() <= tol {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    inside
}

/// Golden-section search for a local extremum of `f` on `[lo, hi]`.
fn golden_section(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64, maximum: bool) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let sign = if maximum { -1.0 } else { 1.0 };
    let g = |x: f64| sign * f(x);
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut g1 = g(x1);
    let mut g2 = g(x2);
    while hi - lo > X_REFINE_TOL {
        if g1 <= g2 {
            hi = x2;
            x2 = x1;
            g2 = g1;
            x1 = hi - INV_PHI * (hi - lo);
            g1 = g(x1);
        } else {
            lo = x1;
            x1 = x2;
            g1 = g2;
            x2 = lo + INV_PHI * (hi - lo);
            g2 = g(x2);
        }
    }
    0.5 * (lo + hi)
}
