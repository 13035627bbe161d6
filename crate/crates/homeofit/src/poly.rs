//! Polynomial representation, evaluation, differentiation, conditioned
//! least-squares fitting, monotone-piece inversion, and multivariate
//! total-degree index generation.
//!
//! High-degree fits are solved in a basis affinely mapped to the data domain
//! (powers of `t = (2x − a − b)/(b − a)` on `[a, b]`), combined with a
//! spectral-cutoff pseudoinverse. The cutoff, not the basis orthogonality,
//! is what tames degree-80 fits on a few hundred samples: directions of the
//! sample space that the data cannot resolve are dropped rather than
//! amplified. Raw monomials in `x` remain available for low-degree exact
//! work (Chandler polynomials, closed-form oracles).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Relative singular-value cutoff used by [`fit_least_squares`].
///
/// Chosen a few units above machine epsilon: large enough to drop the
/// noise-level directions of an ill-conditioned high-degree design matrix,
/// small enough to leave every resolvable direction in place.
pub const FIT_RCOND: f64 = 4.0 * f64::EPSILON;

/// Basis in which a [`Polynomial`]'s coefficients are expressed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Basis {
    /// Plain powers of `x`.
    Monomial,
    /// Powers of the affinely mapped variable `t = (2x − a − b)/(b − a)`,
    /// which sends the polynomial's domain `[a, b]` onto `[−1, 1]`. Keeps
    /// high-degree design matrices within floating-point reach.
    Mapped,
}

/// Univariate polynomial with an explicit domain.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Polynomial {
    basis: Basis,
    /// Coefficients in ascending degree; length is degree + 1.
    coeffs: Vec<f64>,
    /// Closed interval `[a, b]` with `a < b`.
    domain: (f64, f64),
}

impl Polynomial {
    /// Polynomial in the raw monomial basis.
    pub fn monomial(coeffs: Vec<f64>, domain: (f64, f64)) -> Result<Self> {
        Self::new(Basis::Monomial, coeffs, domain)
    }

    /// Polynomial in the domain-mapped basis.
    pub fn mapped(coeffs: Vec<f64>, domain: (f64, f64)) -> Result<Self> {
        Self::new(Basis::Mapped, coeffs, domain)
    }

    fn new(basis: Basis, coeffs: Vec<f64>, domain: (f64, f64)) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidInput(
                "polynomial needs at least one coefficient".into(),
            ));
        }
        if !(domain.0 < domain.1) || !domain.0.is_finite() || !domain.1.is_finite() {
            return Err(Error::InvalidInput(format!(
                "invalid domain [{}, {}]",
                domain.0, domain.1
            )));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("non-finite coefficient".into()));
        }
        Ok(Self {
            basis,
            coeffs,
            domain,
        })
    }

    /// Degree (length of the coefficient vector minus one).
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Coefficients in ascending degree, in this polynomial's basis.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// The basis the coefficients live in.
    pub fn basis(&self) -> Basis {
        self.basis
    }

    /// Domain `[a, b]` the polynomial was built for.
    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    /// Map `x` to the internal evaluation variable.
    fn to_t(&self, x: f64) -> f64 {
        match self.basis {
            Basis::Monomial => x,
            Basis::Mapped => {
                let (a, b) = self.domain;
                (2.0 * x - a - b) / (b - a)
            }
        }
    }

    /// Horner evaluation at `x`.
    pub fn eval(&self, x: f64) -> f64 {
        let t = self.to_t(x);
        let mut acc = 0.0;
        for &c in self.coeffs.iter().rev() {
            acc = acc * t + c;
        }
        acc
    }

    /// Derivative with respect to `x`, in the same basis.
    ///
    /// The derivative of a constant is the zero polynomial (degree 0).
    pub fn derivative(&self) -> Polynomial {
        if self.coeffs.len() == 1 {
            return Polynomial {
                basis: self.basis,
                coeffs: vec![0.0],
                domain: self.domain,
            };
        }
        // d/dx = (dt/dx) d/dt; dt/dx is 1 for the monomial basis and
        // 2/(b − a) for the mapped basis.
        let chain = match self.basis {
            Basis::Monomial => 1.0,
            Basis::Mapped => 2.0 / (self.domain.1 - self.domain.0),
        };
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, &c)| chain * i as f64 * c)
            .collect();
        Polynomial {
            basis: self.basis,
            coeffs,
            domain: self.domain,
        }
    }

    /// Convert a mapped-basis polynomial to raw monomial coefficients by
    /// binomial expansion of `t = αx + β`. Only offered for degree ≤ 20;
    /// beyond that the expansion itself loses more accuracy than it is
    /// worth and evaluation should stay in the mapped basis.
    pub fn to_monomial(&self) -> Result<Polynomial> {
        if self.basis == Basis::Monomial {
            return Ok(self.clone());
        }
        if self.degree() > 20 {
            return Err(Error::InvalidInput(format!(
                "monomial conversion limited to degree <= 20, got {}",
                self.degree()
            )));
        }
        let (a, b) = self.domain;
        let alpha = 2.0 / (b - a);
        let beta = -(a + b) / (b - a);
        // Accumulate c_i (αx + β)^i by repeated multiplication.
        let mut out = vec![0.0; self.coeffs.len()];
        // power holds the monomial coefficients of (αx + β)^i.
        let mut power = vec![0.0; self.coeffs.len()];
        power[0] = 1.0;
        let mut power_len = 1;
        for (i, &c) in self.coeffs.iter().enumerate() {
            if i > 0 {
                // Multiply `power` by (αx + β) in place.
                let mut next = vec![0.0; power_len + 1];
                for (k, &p) in power.iter().take(power_len).enumerate() {
                    next[k] += beta * p;
                    next[k + 1] += alpha * p;
                }
                power_len += 1;
                power[..power_len].copy_from_slice(&next[..power_len]);
            }
            for k in 0..power_len {
                out[k] += c * power[k];
            }
        }
        Polynomial::monomial(out, self.domain)
    }

    /// Solve `p(x) = y` for strictly monotone `p` on the closed interval
    /// `j`, by bisection with Newton acceleration. The bisection bracket
    /// guarantees convergence; Newton steps are only taken when they stay
    /// inside the bracket.
    ///
    /// `y` may exceed the range of `p` on `j` by at most `tol` (it is then
    /// clamped); farther out is an out-of-range error. Passing a
    /// non-monotone piece is detected as a bracket sign violation.
    pub fn invert_on_monotone_interval(&self, j: (f64, f64), y: f64, tol: f64) -> Result<f64> {
        let (mut lo, mut hi) = j;
        if !(lo < hi) {
            return Err(Error::InvalidInput(format!(
                "invalid interval [{lo}, {hi}]"
            )));
        }
        let deriv = self.derivative();
        let p_lo = self.eval(lo);
        let p_hi = self.eval(hi);
        let increasing = p_hi >= p_lo;
        let (range_lo, range_hi) = if increasing { (p_lo, p_hi) } else { (p_hi, p_lo) };
        if y < range_lo - tol || y > range_hi + tol {
            return Err(Error::OutOfRange {
                y,
                lo: range_lo,
                hi: range_hi,
            });
        }
        let y = y.clamp(range_lo, range_hi);
        // Residual signs at the bracket ends; equal signs mean the bracket
        // does not straddle y, i.e. the piece is not monotone as promised.
        let mut r_lo = p_lo - y;
        let r_hi = p_hi - y;
        if r_lo == 0.0 {
            return Ok(lo);
        }
        if r_hi == 0.0 {
            return Ok(hi);
        }
        if r_lo.signum() == r_hi.signum() {
            return Err(Error::NotMonotone(format!(
                "bracket sign violation on [{lo}, {hi}]"
            )));
        }
        let mut x = 0.5 * (lo + hi);
        for _ in 0..200 {
            let r = self.eval(x) - y;
            if r.abs() <= tol {
                return Ok(x);
            }
            // Shrink the bracket around the root.
            if r.signum() == r_lo.signum() {
                lo = x;
                r_lo = r;
            } else {
                hi = x;
            }
            if hi - lo <= f64::EPSILON * (1.0 + lo.abs().max(hi.abs())) {
                return Ok(0.5 * (lo + hi));
            }
            // Newton candidate, accepted only inside the open bracket.
            let d = deriv.eval(x);
            let newton = if d != 0.0 { x - r / d } else { f64::NAN };
            x = if newton.is_finite() && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
        }
        Ok(x)
    }

    /// Default inversion tolerance for an interval `j`.
    pub fn default_inversion_tol(j: (f64, f64)) -> f64 {
        1e-12 * (1.0 + (j.1 - j.0).abs())
    }
}

/// Least-squares polynomial fit of the given degree.
///
/// The solve runs in the domain-mapped basis with the spectral cutoff
/// [`FIT_RCOND`]; high degrees are therefore regularized by truncation, and
/// the result is reported as a degree-`degree` polynomial on the data's
/// span. See [`fit_least_squares_with`] for explicit control.
pub fn fit_least_squares(xs: &[f64], ys: &[f64], degree: usize) -> Result<Polynomial> {
    fit_least_squares_with(xs, ys, degree, FIT_RCOND, false)
}

/// Least-squares fit with explicit cutoff and rank policy.
///
/// With `strict_rank`, an effective rank below `degree + 1` is an error
/// naming the rank — the caller asked for an unregularized solve and the
/// data cannot support one. Without it, rank deficiency is handled by the
/// minimum-norm truncated solution.
pub fn fit_least_squares_with(
    xs: &[f64],
    ys: &[f64],
    degree: usize,
    rcond: f64,
    strict_rank: bool,
) -> Result<Polynomial> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidInput(format!(
            "got {} sample points but {} values",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < degree + 1 {
        return Err(Error::InvalidInput(format!(
            "degree {} needs at least {} samples, got {}",
            degree,
            degree + 1,
            xs.len()
        )));
    }
    let (min, max) = xs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        });
    if !(min < max) {
        return Err(Error::InvalidInput(
            "sample points must span a nondegenerate interval".into(),
        ));
    }
    let domain = (min, max);
    let mut design = DMatrix::zeros(xs.len(), degree + 1);
    for (p, &x) in xs.iter().enumerate() {
        let t = (2.0 * x - min - max) / (max - min);
        let mut pw = 1.0;
        for i in 0..=degree {
            design[(p, i)] = pw;
            pw *= t;
        }
    }
    let rhs = DVector::from_column_slice(ys);
    let out = linalg::lstsq(&design, &rhs, rcond)?;
    if strict_rank && out.effective_rank < degree + 1 {
        return Err(Error::SingularSystem {
            effective_rank: out.effective_rank,
            cols: degree + 1,
        });
    }
    Polynomial::mapped(out.solution.iter().copied().collect(), domain)
}

/// All `dim`-tuples of exponents with total degree ≤ `max_degree`, in
/// lexicographic order. The count is `binomial(max_degree + dim, dim)`.
pub fn total_degree_indices(dim: usize, max_degree: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::with_capacity(binomial(max_degree + dim, dim));
    let mut prefix = Vec::with_capacity(dim);
    fn rec(dim: usize, rem: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if prefix.len() == dim {
            out.push(prefix.clone());
            return;
        }
        for e in 0..=rem {
            prefix.push(e);
            rec(dim, rem - e, prefix, out);
            prefix.pop();
        }
    }
    rec(dim, max_degree as u32, &mut prefix, &mut out);
    out
}

/// Binomial coefficient `C(n, k)` as usize (exact for the sizes used here).
pub fn binomial(n: usize, k: usize) -> usize {
    let k = k.min(n - k.min(n));
    let mut num: u128 = 1;
    let mut den: u128 = 1;
    for i in 0..k {
        num *= (n - i) as u128;
        den *= (i + 1) as u128;
    }
    (num / den) as usize
}

/// Multivariate polynomial over a total-degree basis.
///
/// Evaluation happens on raw variables by default; with a per-dimension
/// `mapped_domain`, inputs are first sent onto `[−1, 1]` per dimension
/// (used by direct multivariate baselines for conditioning, mirroring the
/// univariate mapped basis).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MultiIndexExpansion {
    /// Number of variables `D`.
    pub dim: usize,
    /// Maximum total degree `N`.
    pub max_total_degree: usize,
    /// Exponent tuples, lexicographically ordered.
    pub indices: Vec<Vec<u32>>,
    /// Coefficients aligned with `indices`.
    pub coeffs: Vec<f64>,
    /// Optional per-dimension affine mapping onto `[−1, 1]`.
    pub mapped_domain: Option<Vec<(f64, f64)>>,
}

impl MultiIndexExpansion {
    /// Zero polynomial over the total-degree basis.
    pub fn new(dim: usize, max_total_degree: usize) -> Self {
        let indices = total_degree_indices(dim, max_total_degree);
        let coeffs = vec![0.0; indices.len()];
        Self {
            dim,
            max_total_degree,
            indices,
            coeffs,
            mapped_domain: None,
        }
    }

    /// Number of basis functions.
    pub fn n_basis(&self) -> usize {
        self.indices.len()
    }

    /// Map a point into evaluation variables.
    fn to_t(&self, x: &[f64]) -> Vec<f64> {
        match &self.mapped_domain {
            None => x.to_vec(),
            Some(doms) => x
                .iter()
                .zip(doms)
                .map(|(&xi, &(a, b))| (2.0 * xi - a - b) / (b - a))
                .collect(),
        }
    }

    /// Evaluate at a point (length must equal `dim`).
    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        let t = self.to_t(x);
        let tables = power_tables(&t, self.max_total_degree);
        self.indices
            .iter()
            .zip(&self.coeffs)
            .map(|(idx, &c)| {
                c * idx
                    .iter()
                    .enumerate()
                    .map(|(k, &e)| tables[k][e as usize])
                    .product::<f64>()
            })
            .sum()
    }
}

/// Per-dimension power tables `t_k^0 .. t_k^N`.
fn power_tables(t: &[f64], max_degree: usize) -> Vec<Vec<f64>> {
    t.iter()
        .map(|&v| {
            let mut row = Vec::with_capacity(max_degree + 1);
            let mut pw = 1.0;
            for _ in 0..=max_degree {
                row.push(pw);
                pw *= v;
            }
            row
        })
        .collect()
}

/// Design matrix over a total-degree basis: entry `(p, j)` is
/// `∏_k q[p][k]^{indices[j][k]}` for the `p`-th row of `q`.
pub fn design_matrix_from_values(q: &DMatrix<f64>, indices: &[Vec<u32>]) -> DMatrix<f64> {
    let max_degree = indices
        .iter()
        .map(|idx| idx.iter().sum::<u32>())
        .max()
        .unwrap_or(0) as usize;
    let mut out = DMatrix::zeros(q.nrows(), indices.len());
    let dim = q.ncols();
    let stride = max_degree + 1;
    let mut tables = vec![0.0; dim * stride];
    for p in 0..q.nrows() {
        for k in 0..dim {
            let v = q[(p, k)];
            let mut pw = 1.0;
            for e in 0..stride {
                tables[k * stride + e] = pw;
                pw *= v;
            }
        }
        for (j, idx) in indices.iter().enumerate() {
            let mut prod = 1.0;
            for (k, &e) in idx.iter().enumerate() {
                prod *= tables[k * stride + e as usize];
            }
            out[(p, j)] = prod;
        }
    }
    out
}

/// Gradient of the expansion `Σ_j a_j ∏_k q_k^{e_jk}` with respect to the
/// variables `q`, evaluated batch-wise: returns a `(P, D)` matrix whose row
/// `p` is `∂(Σ_j a_j φ_j)/∂q` at `q[p]`.
pub fn design_gradient(
    q: &DMatrix<f64>,
    indices: &[Vec<u32>],
    coeffs: &[f64],
) -> DMatrix<f64> {
    let max_degree = indices
        .iter()
        .map(|idx| idx.iter().sum::<u32>())
        .max()
        .unwrap_or(0) as usize;
    let dim = q.ncols();
    let mut out = DMatrix::zeros(q.nrows(), dim);
    let stride = max_degree + 1;
    let mut tables = vec![0.0; dim * stride];
    for p in 0..q.nrows() {
        for k in 0..dim {
            let v = q[(p, k)];
            let mut pw = 1.0;
            for e in 0..stride {
                tables[k * stride + e] = pw;
                pw *= v;
            }
        }
        for (idx, &a) in indices.iter().zip(coeffs) {
            if a == 0.0 {
                continue;
            }
            for k in 0..dim {
                let e_k = idx[k];
                if e_k == 0 {
                    continue;
                }
                let mut term = a * e_k as f64;
                for (j, &e_j) in idx.iter().enumerate() {
                    let e = if j == k { e_j - 1 } else { e_j };
                    term *= tables[j * stride + e as usize];
                }
                out[(p, k)] += term;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn eval_monomial_examples() {
        let p = Polynomial::monomial(vec![2.0, 0.0, 1.0], (-10.0, 10.0)).unwrap();
        assert_relative_eq!(p.eval(3.0), 11.0);
        let c = Polynomial::monomial(vec![7.5], (0.0, 1.0)).unwrap();
        assert_relative_eq!(c.eval(123.0), 7.5);
    }

    #[test]
    fn derivative_power_rule() {
        let p = Polynomial::monomial(vec![2.0, 0.0, 1.0], (-10.0, 10.0)).unwrap();
        let d = p.derivative();
        assert_eq!(d.coeffs(), &[0.0, 2.0]);
        let c = Polynomial::monomial(vec![5.0], (0.0, 1.0)).unwrap();
        assert_eq!(c.derivative().coeffs(), &[0.0]);
    }

    #[test]
    fn mapped_derivative_chain_rule() {
        // p(t) = t^2 on [0, 4] -> t = (x - 2)/2, dp/dx = 2t * (1/2) = t.
        let p = Polynomial::mapped(vec![0.0, 0.0, 1.0], (0.0, 4.0)).unwrap();
        let d = p.derivative();
        assert_relative_eq!(d.eval(3.0), 0.5, epsilon = 1e-14);
        assert_relative_eq!(p.eval(3.0), 0.25, epsilon = 1e-14);
    }

    #[test]
    fn fit_line_is_exact() {
        let xs = [0.0, 1.0, 2.0];
        let ys = [1.0, 3.0, 5.0];
        let p = fit_least_squares(&xs, &ys, 1).unwrap();
        for (&x, &y) in xs.iter().zip(&ys) {
            assert_relative_eq!(p.eval(x), y, epsilon = 1e-12);
        }
    }

    #[test]
    fn strict_rank_rejects_duplicate_samples() {
        // Two distinct abscissae cannot support an unregularized cubic.
        let xs = [0.0, 0.0, 1.0, 1.0];
        let ys = [0.0, 0.0, 1.0, 1.0];
        let err = fit_least_squares_with(&xs, &ys, 3, FIT_RCOND, true).unwrap_err();
        match err {
            Error::SingularSystem { effective_rank, cols } => {
                assert_eq!(cols, 4);
                assert!(effective_rank < 4, "rank was {effective_rank}");
            }
            other => panic!("expected singular-system, got {other:?}"),
        }
    }

    #[test]
    fn invert_square_both_branches() {
        let p = Polynomial::monomial(vec![0.0, 0.0, 1.0], (-2.0, 2.0)).unwrap();
        let tol = Polynomial::default_inversion_tol((0.0, 2.0));
        let x = p.invert_on_monotone_interval((0.0, 2.0), 4.0, tol).unwrap();
        assert_relative_eq!(x, 2.0, epsilon = 1e-9);
        let x = p.invert_on_monotone_interval((-2.0, 0.0), 4.0, tol).unwrap();
        assert_relative_eq!(x, -2.0, epsilon = 1e-9);
    }

    #[test]
    fn invert_rejects_out_of_range() {
        let p = Polynomial::monomial(vec![0.0, 1.0], (0.0, 1.0)).unwrap();
        let err = p
            .invert_on_monotone_interval((0.0, 1.0), 2.0, 1e-12)
            .unwrap_err();
        assert_eq!(err.reason(), "out-of-range");
    }

    #[test]
    fn total_degree_index_counts() {
        assert_eq!(total_degree_indices(2, 2).len(), 6);
        assert_eq!(total_degree_indices(3, 4).len(), 35);
        assert_eq!(total_degree_indices(1, 0), vec![vec![0]]);
        assert_eq!(total_degree_indices(2, 13).len(), 105);
        assert_eq!(total_degree_indices(3, 18).len(), 1330);
    }

    #[test]
    fn indices_are_lexicographic_and_unique() {
        let idx = total_degree_indices(3, 5);
        for w in idx.windows(2) {
            assert!(w[0] < w[1], "{:?} !< {:?}", w[0], w[1]);
        }
    }

    #[test]
    fn mapped_to_monomial_agrees() {
        let p = Polynomial::mapped(vec![0.5, -1.0, 2.0, 0.25], (1.0, 3.0)).unwrap();
        let m = p.to_monomial().unwrap();
        for i in 0..50 {
            let x = 1.0 + 2.0 * (i as f64) / 49.0;
            let a = p.eval(x);
            let b = m.eval(x);
            assert_relative_eq!(a, b, max_relative = 1e-9, epsilon = 1e-12);
        }
    }

    #[test]
    fn multi_expansion_eval_matches_design() {
        let mut e = MultiIndexExpansion::new(2, 2);
        e.coeffs = vec![1.0, -2.0, 0.5, 3.0, 0.0, -1.0];
        let q = DMatrix::from_row_slice(2, 2, &[0.3, -0.7, 1.1, 0.2]);
        let design = design_matrix_from_values(&q, &e.indices);
        let via_design = &design * DVector::from_column_slice(&e.coeffs);
        assert_relative_eq!(e.eval(&[0.3, -0.7]), via_design[0], epsilon = 1e-14);
        assert_relative_eq!(e.eval(&[1.1, 0.2]), via_design[1], epsilon = 1e-14);
    }

    #[test]
    fn design_gradient_matches_finite_differences() {
        let indices = total_degree_indices(3, 4);
        let coeffs: Vec<f64> = (0..indices.len())
            .map(|i| ((i * 37 + 11) % 19) as f64 / 19.0 - 0.4)
            .collect();
        let q = DMatrix::from_row_slice(2, 3, &[0.4, -0.8, 1.3, -0.2, 0.9, 0.6]);
        let grad = design_gradient(&q, &indices, &coeffs);
        let eps = 1e-6;
        for p in 0..2 {
            for k in 0..3 {
                let mut qp = q.clone();
                qp[(p, k)] += eps;
                let mut qm = q.clone();
                qm[(p, k)] -= eps;
                let dp = design_matrix_from_values(&qp, &indices)
                    * DVector::from_column_slice(&coeffs);
                let dm = design_matrix_from_values(&qm, &indices)
                    * DVector::from_column_slice(&coeffs);
                let fd = (dp[p] - dm[p]) / (2.0 * eps);
                assert_relative_eq!(grad[(p, k)], fd, max_relative = 1e-6, epsilon = 1e-9);
            }
        }
    }
}
