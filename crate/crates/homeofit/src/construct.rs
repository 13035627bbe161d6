//! Exact constructive path: build the polynomial of degree `M + 1` that
//! realizes prescribed alternating values with vanishing derivative at the
//! interior nodes, then assemble the piecewise homeomorphism `h` with
//! `f = p ∘ h`.
//!
//! The polynomial construction parametrizes `p'(y) = c · ∏_{j=1}^{M} (y − y_j)`
//! and solves for the interior nodes and scale by damped Newton iteration;
//! the affine reparametrization freedom is pinned by `y_1 = 0` and
//! `y_M = 1`. The homeomorphism inverts `p` on each monotone node interval
//! at the target's own values, piece by piece.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::critical::{alternation_sign, piece_decomposition, CriticalSet};
use crate::error::{Error, Result};
use crate::poly::Polynomial;

/// Maximum Newton iterations for the node solve.
const NEWTON_MAX_ITERS: usize = 200;
/// Maximum step halvings per Newton iteration.
const NEWTON_MAX_HALVINGS: usize = 30;

/// Result of the alternating-value polynomial construction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChandlerResult {
    /// The degree `M + 1` polynomial, in the raw monomial basis.
    pub p: Polynomial,
    /// Nodes `y_0 < y_1 < … < y_{M+1}` with `p(y_i) = f_i`.
    pub nodes: Vec<f64>,
    /// `max_i |p(y_i) − f_i|`.
    pub residual_interp: f64,
    /// `max_j |p'(y_j)|` over interior nodes.
    pub residual_deriv: f64,
}

/// Construct the degree `M + 1` polynomial through `M + 2` alternating
/// values with `p'(y_j) = 0` at the `M` interior nodes.
///
/// Interior nodes are normalized to `y_1 = 0`, `y_M = 1` for `M ≥ 2`; for
/// `M = 1` the scale is pinned by `c = ±2` (so `p = f_1 ± y²`); `M = 0`
/// produces the linear interpolant on nodes `(0, 1)`.
pub fn chandler_polynomial(values: &[f64]) -> Result<ChandlerResult> {
    let sign = alternation_sign(values)?;
    let m = values.len() - 2;
    let scale = 1.0 + values.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    let y_tol = 1e-13 * scale;

    if m == 0 {
        let p = Polynomial::monomial(vec![values[0], values[1] - values[0]], (0.0, 1.0))?;
        return finish(p, vec![0.0, 1.0], values);
    }
    if m == 1 {
        // p(y) = f_1 + (c/2) y² with c = ±2; the endpoint nodes follow in
        // closed form from |p(y) − f_1| = |f_0,2 − f_1|.
        let c = 2.0 * (values[2] - values[1]).signum();
        let p = Polynomial::monomial(vec![values[1], 0.0, c / 2.0], (-1.0, 1.0))?;
        let y0 = -((values[0] - values[1]) / (c / 2.0)).sqrt();
        let y2 = ((values[2] - values[1]) / (c / 2.0)).sqrt();
        return finish(p, vec![y0, 0.0, y2], values);
    }

    // M >= 2: damped Newton on (y_2 .. y_{M-1}, c).
    let n_unknowns = m - 1;
    // Interior nodes y_1..y_M, with first and last pinned.
    let mut roots = vec![0.0; m];
    for (j, r) in roots.iter_mut().enumerate() {
        *r = j as f64 / (m - 1) as f64;
    }
    // Sign of p' on (y_1, y_2) is sign(c) · (−1)^{M−1}; it must match the
    // direction of the first interior gap.
    let gap_dir = (values[2] - values[1]).signum();
    let parity = if (m - 1) % 2 == 0 { 1.0 } else { -1.0 };
    let mut c = {
        let total_variation: f64 = values.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
        gap_dir * parity * total_variation.max(1.0)
    };

    let residual_tol = 1e-12 * scale;
    let mut res = gap_residuals(c, &roots, values);
    let mut res_norm = inf_norm(&res);
    let mut iterations = 0;
    while res_norm > residual_tol {
        if iterations >= NEWTON_MAX_ITERS {
            return Err(Error::ConvergenceFailure {
                context: "alternating-value polynomial node solve".into(),
                residual: res_norm,
                iterations,
            });
        }
        iterations += 1;
        let jac = gap_jacobian(c, &roots);
        let delta = jac
            .lu()
            .solve(&(-DVector::from_column_slice(&res)))
            .ok_or_else(|| Error::ConvergenceFailure {
                context: "singular Newton system in node solve".into(),
                residual: res_norm,
                iterations,
            })?;
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..=NEWTON_MAX_HALVINGS {
            let mut trial_roots = roots.clone();
            for (k, r) in trial_roots.iter_mut().enumerate().take(m - 1).skip(1) {
                *r += lambda * delta[k - 1];
            }
            let trial_c = c + lambda * delta[n_unknowns - 1];
            if ordered_strictly(&trial_roots) && trial_c != 0.0 {
                let trial_res = gap_residuals(trial_c, &trial_roots, values);
                let trial_norm = inf_norm(&trial_res);
                if trial_norm < res_norm {
                    roots = trial_roots;
                    c = trial_c;
                    res = trial_res;
                    res_norm = trial_norm;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            return Err(Error::ConvergenceFailure {
                context: "Newton damping exhausted in node solve".into(),
                residual: res_norm,
                iterations,
            });
        }
    }

    let p_coeffs = integrate_with_constant(&expand_derivative(c, &roots), values[1]);
    let p = Polynomial::monomial(p_coeffs, (0.0, 1.0))?;
    // Recover the outer nodes by the endpoint bracketing argument: p is
    // strictly monotone outside [y_1, y_M] and unbounded, so each endpoint
    // value is attained exactly once there.
    let y0 = recover_endpoint(&p, values[0], 0.0, false, y_tol)?;
    let y_last = recover_endpoint(&p, values[m + 1], 1.0, true, y_tol)?;
    let mut nodes = Vec::with_capacity(m + 2);
    nodes.push(y0);
    nodes.extend_from_slice(&roots);
    nodes.push(y_last);
    let _ = sign; // alternation validated above; direction is encoded in c
    finish(p, nodes, values)
}

/// Assemble the result struct and its residual certificates.
fn finish(p: Polynomial, nodes: Vec<f64>, values: &[f64]) -> Result<ChandlerResult> {
    if nodes.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InternalConsistency(format!(
            "polynomial nodes not strictly increasing: {nodes:?}"
        )));
    }
    let deriv = p.derivative();
    let residual_interp = nodes
        .iter()
        .zip(values)
        .map(|(&y, &f)| (p.eval(y) - f).abs())
        .fold(0.0f64, f64::max);
    let residual_deriv = nodes[1..nodes.len() - 1]
        .iter()
        .map(|&y| deriv.eval(y).abs())
        .fold(0.0f64, f64::max);
    Ok(ChandlerResult {
        p,
        nodes,
        residual_interp,
        residual_deriv,
    })
}

fn ordered_strictly(roots: &[f64]) -> bool {
    roots.windows(2).all(|w| w[0] < w[1])
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, &x| a.max(x.abs()))
}

/// Monomial coefficients of `p'(y) = c ∏_j (y − roots[j])`.
fn expand_derivative(c: f64, roots: &[f64]) -> Vec<f64> {
    let mut coeffs = vec![c];
    for &r in roots {
        let mut next = vec![0.0; coeffs.len() + 1];
        for (k, &a) in coeffs.iter().enumerate() {
            next[k] -= r * a;
            next[k + 1] += a;
        }
        coeffs = next;
    }
    coeffs
}

/// Antiderivative with `P(0) = 0`, then shifted so the value at `y = 0`
/// equals `value_at_zero` (which is `p(y_1) = f_1` under the normalization).
fn integrate_with_constant(deriv_coeffs: &[f64], value_at_zero: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(deriv_coeffs.len() + 1);
    out.push(value_at_zero);
    for (k, &a) in deriv_coeffs.iter().enumerate() {
        out.push(a / (k + 1) as f64);
    }
    out
}

/// Evaluate the antiderivative `P(y) = ∫_0^y p'` for `p'` given by roots.
fn antiderivative_at(c: f64, roots: &[f64], y: f64) -> f64 {
    let coeffs = integrate_with_constant(&expand_derivative(c, roots), 0.0);
    let mut acc = 0.0;
    for &a in coeffs.iter().rev() {
        acc = acc * y + a;
    }
    acc
}

/// Residuals of the interior gap conditions
/// `P(y_{i+1}) − P(y_i) = f_{i+1} − f_i` for consecutive interior nodes.
fn gap_residuals(c: f64, roots: &[f64], values: &[f64]) -> Vec<f64> {
    (0..roots.len() - 1)
        .map(|g| {
            let lhs = antiderivative_at(c, roots, roots[g + 1])
                - antiderivative_at(c, roots, roots[g]);
            lhs - (values[g + 2] - values[g + 1])
        })
        .collect()
}

/// Jacobian of the gap residuals with respect to `(y_2 .. y_{M−1}, c)`.
///
/// Boundary terms vanish because `p'` is zero at every interior node, so
/// only the integrand's dependence on the roots contributes:
/// `∂R_g/∂y_m = −c (Q_m(y_{g+1}) − Q_m(y_g))` with
/// `Q_m(y) = ∫_0^y ∏_{k≠m}(t − y_k) dt`.
fn gap_jacobian(c: f64, roots: &[f64]) -> DMatrix<f64> {
    let m = roots.len();
    let n = m - 1;
    let mut jac = DMatrix::zeros(n, n);
    for g in 0..n {
        for um in 1..m - 1 {
            let reduced: Vec<f64> = roots
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != um)
                .map(|(_, &r)| r)
                .collect();
            let q = |y: f64| antiderivative_at(1.0, &reduced, y);
            jac[(g, um - 1)] = -c * (q(roots[g + 1]) - q(roots[g]));
        }
        let dp = antiderivative_at(1.0, roots, roots[g + 1])
            - antiderivative_at(1.0, roots, roots[g]);
        jac[(g, n - 1)] = dp;
    }
    jac
}

/// Find the node outside the normalized interval where `p` attains `value`:
/// to the left of 0 (`above = false`) or to the right of 1 (`above = true`).
fn recover_endpoint(
    p: &Polynomial,
    value: f64,
    boundary: f64,
    above: bool,
    tol: f64,
) -> Result<f64> {
    let mut width = 1.0;
    for _ in 0..200 {
        let (lo, hi) = if above {
            (boundary, boundary + width)
        } else {
            (boundary - width, boundary)
        };
        let r_out = p.eval(if above { hi } else { lo }) - value;
        let r_in = p.eval(boundary) - value;
        if r_out == 0.0 {
            return Ok(if above { hi } else { lo });
        }
        if r_out.signum() != r_in.signum() {
            return p.invert_on_monotone_interval((lo, hi), value, tol);
        }
        width *= 2.0;
    }
    Err(Error::ConvergenceFailure {
        context: "endpoint node bracketing".into(),
        residual: f64::INFINITY,
        iterations: 200,
    })
}

/// Piecewise homeomorphism evaluating `h = (p|_{J_i})⁻¹ ∘ f` on each
/// monotone piece, with an optional strictness ramp across plateaus.
pub struct PiecewiseHomeo {
    f: Box<dyn Fn(f64) -> f64>,
    p: Polynomial,
    /// Piece boundaries in `x`: `x_0 < r_1 < … < r_M < x_{M+1}`.
    cuts: Vec<f64>,
    /// Node values `p(y_i) = f_i` aligned with `cuts`.
    node_values: Vec<f64>,
    /// Nodes `y_i` aligned with `cuts`.
    nodes: Vec<f64>,
    /// Cumulative strictness ramps `(x_lo, x_hi, eps)`: each contributes
    /// `eps · clamp((x − x_lo)/(x_hi − x_lo), 0, 1)`.
    ramps: Vec<(f64, f64, f64)>,
    /// Slack allowed when a function value falls just outside its piece's
    /// node-value range (refinement noise), before range-mismatch fires.
    value_slack: f64,
    /// Convergence tolerance handed to the polynomial inversion.
    invert_tol: f64,
}

impl PiecewiseHomeo {
    /// Orientation of the homeomorphism (always increasing: nodes are
    /// ordered along with the pieces).
    pub fn orientation(&self) -> i8 {
        1
    }

    /// The piece's index for a given `x`.
    fn piece_of(&self, x: f64) -> Result<usize> {
        let n_pieces = self.cuts.len() - 1;
        if x < self.cuts[0] || x > self.cuts[n_pieces] {
            return Err(Error::InvalidInput(format!(
                "x={x} outside domain [{}, {}]",
                self.cuts[0], self.cuts[n_pieces]
            )));
        }
        let mut idx = match self
            .cuts
            .binary_search_by(|c| c.partial_cmp(&x).expect("finite cut"))
        {
            Ok(i) => i,
            Err(i) => i.saturating_sub(1),
        };
        if idx >= n_pieces {
            idx = n_pieces - 1;
        }
        Ok(idx)
    }

    /// Evaluate `h(x)`.
    pub fn eval(&self, x: f64) -> Result<f64> {
        let i = self.piece_of(x)?;
        let (j_lo, j_hi) = (self.nodes[i], self.nodes[i + 1]);
        let (v_lo, v_hi) = (self.node_values[i], self.node_values[i + 1]);
        let (range_lo, range_hi) = if v_lo <= v_hi { (v_lo, v_hi) } else { (v_hi, v_lo) };
        let mut value = (self.f)(x);
        if value < range_lo - self.value_slack || value > range_hi + self.value_slack {
            let excess = (value - range_hi).max(range_lo - value);
            return Err(Error::RangeMismatch {
                piece: i,
                value,
                excess,
            });
        }
        value = value.clamp(range_lo, range_hi);
        let y = self
            .p
            .invert_on_monotone_interval((j_lo, j_hi), value, self.invert_tol)?;
        Ok(y + self.ramp(x))
    }

    fn ramp(&self, x: f64) -> f64 {
        self.ramps
            .iter()
            .map(|&(lo, hi, eps)| eps * ((x - lo) / (hi - lo)).clamp(0.0, 1.0))
            .sum()
    }

    /// Piece boundaries in `x`.
    pub fn cuts(&self) -> &[f64] {
        &self.cuts
    }

    /// Node positions `y_i` in the polynomial's variable.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }
}

/// Build the exact homeomorphism from a critical set and a matching
/// polynomial construction.
///
/// Pieces with plateau extremizers receive a strictness ramp of total
/// height `1e-9 · range(f)` across the plateau (the density argument:
/// nudging `h` by an arbitrarily small ramp makes it strictly monotone
/// while perturbing `p ∘ h` only at second order near the flat node).
pub fn exact_homeomorphism(
    f: Box<dyn Fn(f64) -> f64>,
    cs: &CriticalSet,
    cr: &ChandlerResult,
) -> Result<PiecewiseHomeo> {
    let pieces = piece_decomposition(cs.domain, cs);
    let node_values = cs.node_values();
    if cr.nodes.len() != node_values.len() {
        return Err(Error::InvalidInput(format!(
            "polynomial has {} nodes but critical set implies {}",
            cr.nodes.len(),
            node_values.len()
        )));
    }
    let mut cuts = Vec::with_capacity(pieces.len() + 1);
    cuts.push(pieces[0].0);
    for &(_, hi) in &pieces {
        cuts.push(hi);
    }
    let values_range = {
        let (lo, hi) = node_values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        hi - lo
    };
    let eps = 1e-9 * values_range;
    let ramps = cs
        .extremizers
        .iter()
        .zip(&cs.plateau_flags)
        .filter(|&(_, &flag)| flag)
        .map(|(e, _)| (e.min(), e.max(), eps))
        .collect();
    Ok(PiecewiseHomeo {
        f,
        p: cr.p.clone(),
        cuts,
        node_values,
        nodes: cr.nodes.clone(),
        ramps,
        value_slack: 0.5e-8 * (1.0 + values_range),
        invert_tol: 1e-12 * (1.0 + values_range),
    })
}

/// Make monotone (non-strict) samples strictly monotone by spreading a
/// linear ramp of total height ≤ `eps` across each maximal constant run.
///
/// A run of `k` equal values receives increments `eps/k` between
/// consecutive entries, so the output deviates from the input by less than
/// `eps` in sup norm and is strictly monotone provided `eps` is below the
/// smallest nonzero jump.
pub fn strictify(samples: &[(f64, f64)], eps: f64) -> Vec<(f64, f64)> {
    let n = samples.len();
    if n < 2 {
        return samples.to_vec();
    }
    // Overall direction: first nonzero jump decides; flat input defaults
    // to increasing.
    let dir = samples
        .windows(2)
        .map(|w| w[1].1 - w[0].1)
        .find(|d| *d != 0.0)
        .map_or(1.0, f64::signum);
    let mut out = samples.to_vec();
    let mut run_start = 0;
    for i in 1..=n {
        let continues = i < n && samples[i].1 == samples[run_start].1;
        if continues {
            continue;
        }
        let k = i - run_start;
        if k > 1 {
            for (j, row) in out.iter_mut().enumerate().take(i).skip(run_start) {
                row.1 += dir * eps * (j - run_start) as f64 / k as f64;
            }
        }
        run_start = i;
    }
    out
}

/// Closed-form single-extremum factorization `f(x) = a₀ + a₂ h(x)²` with
/// `h(x) = sign(x − x₀) √|f(x) − a₀|`.
///
/// Verifies on a scan grid that `f − a₀` does not change sign beyond
/// tolerance (otherwise `x₀` is not the sole extremizer).
pub fn single_extremum_h(
    f: Box<dyn Fn(f64) -> f64>,
    x0: f64,
    domain: (f64, f64),
) -> Result<(f64, i8, Box<dyn Fn(f64) -> f64>)> {
    let (a, b) = domain;
    if !(a < b) || x0 < a || x0 > b {
        return Err(Error::InvalidInput(format!(
            "x0={x0} outside domain [{a}, {b}]"
        )));
    }
    let a0 = f(x0);
    let n = 1001;
    let mut max_pos = 0.0f64;
    let mut max_neg = 0.0f64;
    let mut range = 0.0f64;
    for i in 0..n {
        let x = a + (b - a) * i as f64 / (n - 1) as f64;
        let d = f(x) - a0;
        max_pos = max_pos.max(d);
        max_neg = max_neg.max(-d);
        range = range.max(d.abs());
    }
    let tol = 1e-9 * (1.0 + range);
    if max_pos > tol && max_neg > tol {
        return Err(Error::NotSingleExtremum(format!(
            "f − f(x0) changes sign (+{max_pos:e} / −{max_neg:e})"
        )));
    }
    let a2: i8 = if max_neg > tol { -1 } else { 1 };
    let h = Box::new(move |x: f64| (x - x0).signum() * (f(x) - a0).abs().sqrt());
    Ok((a0, a2, h))
}

/// Full exact construction for a target on a domain.
pub struct Construction {
    /// Detected critical structure.
    pub critical: CriticalSet,
    /// Polynomial and node construction.
    pub chandler: ChandlerResult,
    /// The piecewise homeomorphism with `f = p ∘ h`.
    pub h: PiecewiseHomeo,
    /// Certified sup composition error on the certification grid.
    pub sup_error: f64,
    /// Degree of the constructed polynomial (`M + 1`, or 1 for monotone
    /// targets).
    pub degree: usize,
}

/// Number of points in the composition certification grid.
pub const CERT_GRID: usize = 2001;

/// Run critical detection, the polynomial construction, and homeomorphism
/// assembly, then certify `sup |f − p∘h|` on a 2001-point grid.
pub fn construct_exact<F>(f: F, domain: (f64, f64), n_scan: usize) -> Result<Construction>
where
    F: Fn(f64) -> f64 + Clone + 'static,
{
    let critical = crate::critical::find_critical_sets(&f, domain, n_scan, None)?;
    let chandler = chandler_polynomial(&critical.node_values())?;
    let h = exact_homeomorphism(Box::new(f.clone()), &critical, &chandler)?;
    let (a, b) = domain;
    let mut sup_error = 0.0f64;
    for i in 0..CERT_GRID {
        let x = a + (b - a) * i as f64 / (CERT_GRID - 1) as f64;
        let err = (f(x) - chandler.p.eval(h.eval(x)?)).abs();
        sup_error = sup_error.max(err);
    }
    let degree = chandler.p.degree();
    Ok(Construction {
        critical,
        chandler,
        h,
        sup_error,
        degree,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn linear_case_is_identity_on_nodes() {
        let cr = chandler_polynomial(&[0.0, 1.0]).expect("M=0");
        assert_eq!(cr.nodes, vec![0.0, 1.0]);
        assert_relative_eq!(cr.p.eval(0.25), 0.25, epsilon = 1e-14);
    }

    #[test]
    fn quadratic_case_matches_closed_form() {
        let cr = chandler_polynomial(&[3.0, 0.0, 3.0]).expect("M=1");
        // p(y) = y² under the c = ±2 normalization.
        assert_relative_eq!(cr.p.eval(2.0), 4.0, epsilon = 1e-12);
        assert_relative_eq!(cr.nodes[0], -(3.0f64.sqrt()), epsilon = 1e-12);
        assert_relative_eq!(cr.nodes[1], 0.0);
        assert_relative_eq!(cr.nodes[2], 3.0f64.sqrt(), epsilon = 1e-12);
        assert!(cr.residual_interp <= 1e-12);
        assert!(cr.residual_deriv <= 1e-12);
    }

    #[test]
    fn cubic_case_satisfies_conditions() {
        let values = [0.0, 1.0, -1.0, 2.0];
        let cr = chandler_polynomial(&values).expect("M=2");
        let scale = 1.0 + 2.0;
        assert!(cr.residual_interp <= 1e-10 * scale, "{}", cr.residual_interp);
        assert!(cr.residual_deriv <= 1e-10 * scale, "{}", cr.residual_deriv);
        assert_eq!(cr.p.degree(), 3);
        assert!(cr.nodes.windows(2).all(|w| w[0] < w[1]));
        // Interior normalization.
        assert_relative_eq!(cr.nodes[1], 0.0);
        assert_relative_eq!(cr.nodes[2], 1.0);
    }

    #[test]
    fn cubic_scale_matches_brute_force_oracle() {
        // With y_1 = 0 and y_2 = 1 pinned, M = 2 leaves only the scale c
        // free, fixed by the single interior gap condition. A dense scan
        // over c must agree with the Newton solution.
        let values = [0.0, 1.0, -1.0, 2.0];
        let cr = chandler_polynomial(&values).expect("M=2");
        let gap = values[2] - values[1];
        let mut best = (f64::INFINITY, 0.0);
        for i in 0..40001 {
            let c = -20.0 + 40.0 * i as f64 / 40000.0;
            // P(1) − P(0) for p' = c t(t−1) is −c/6.
            let r = (-c / 6.0 - gap).abs();
            if r < best.0 {
                best = (r, c);
            }
        }
        let p2 = cr.p.derivative().eval(0.5); // p'(1/2) = c·(1/2)(−1/2) = −c/4
        let c_newton = -4.0 * p2;
        assert_relative_eq!(c_newton, best.1, epsilon = 2e-3);
        assert_relative_eq!(c_newton, -6.0 * gap, epsilon = 1e-10);
    }

    #[test]
    fn strictify_spreads_constant_runs() {
        let samples = vec![(0.0, 1.0), (1.0, 2.0), (2.0, 2.0), (3.0, 2.0), (4.0, 5.0)];
        let out = strictify(&samples, 1e-6);
        for w in out.windows(2) {
            assert!(w[1].1 > w[0].1, "not strictly increasing: {out:?}");
        }
        for (orig, adj) in samples.iter().zip(&out) {
            assert!((adj.1 - orig.1).abs() <= 1e-6);
        }
        // Run of 3 equal values: increments eps/3 (up to rounding at the
        // run's base value).
        assert_relative_eq!(out[3].1 - out[2].1, 1e-6 / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn strictify_keeps_strict_input_unchanged() {
        let samples = vec![(0.0, 1.0), (1.0, 2.0), (2.0, 4.0)];
        assert_eq!(strictify(&samples, 1e-3), samples);
    }

    #[test]
    fn single_extremum_negative_parabola() {
        let (a0, a2, h) =
            single_extremum_h(Box::new(|x: f64| -x * x), 0.0, (-1.0, 1.0)).expect("factor");
        assert_relative_eq!(a0, 0.0);
        assert_eq!(a2, -1);
        assert_relative_eq!(h(0.5), 0.5, epsilon = 1e-12);
        assert_relative_eq!(h(-0.5), -0.5, epsilon = 1e-12);
    }

    #[test]
    fn single_extremum_rejects_mixed_sign() {
        let err = match single_extremum_h(Box::new(|x: f64| x * x * x), 0.0, (-1.0, 1.0)) {
            Err(e) => e,
            Ok(_) => panic!("expected rejection"),
        };
        assert_eq!(err.reason(), "not-single-extremum");
    }

    #[test]
    fn construct_identity_for_monotone_target() {
        // Strictly increasing target: p is the linear map through the
        // endpoint values and h is (p⁻¹ ∘ f).
        let f = |x: f64| x.tanh();
        let c = construct_exact(f, (0.0, 2.0), 1001).expect("construct");
        assert_eq!(c.degree, 1);
        assert!(c.sup_error <= 1e-8 * (1.0 + 1.0), "sup {}", c.sup_error);
    }

    #[test]
    fn construct_parabola_recovers_square() {
        let f = |x: f64| 2.0 + (x - 0.5) * (x - 0.5);
        let c = construct_exact(f, (-1.0, 2.0), 2001).expect("construct");
        assert_eq!(c.degree, 2);
        let range = f(-1.0) - 2.0;
        assert!(
            c.sup_error <= 1e-8 * (1.0 + range),
            "sup {}",
            c.sup_error
        );
        // h should be x − 0.5 up to the node normalization (c = ±2 makes
        // p = a0 ± y², so h(x) = ±|x − 0.5|·sign(x − 0.5)).
        let h_at = c.h.eval(1.5).expect("eval");
        assert_relative_eq!(h_at, 1.0, epsilon = 1e-6);
    }
}
