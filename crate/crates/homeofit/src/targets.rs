//! Benchmark target functions, grid generation, the synthetic
//! potential-energy surface with Morse-variable structure, and dataset
//! ingestion/persistence.

use std::fs::File;
use std::io::{BufWriter, Write as IoWrite};
use std::path::Path;
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::total_degree_indices;

/// One dimension of a tensor-product sampling grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridDim {
    /// Lower interval bound.
    pub lo: f64,
    /// Upper interval bound.
    pub hi: f64,
    /// Number of points (≥ 2).
    pub n: usize,
}

/// Tensor-product sampling grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Per-dimension intervals and point counts.
    pub dims: Vec<GridDim>,
    /// Points are equidistant within each interval.
    pub equidistant: bool,
}

impl GridSpec {
    /// Equidistant grid from `(lo, hi, n)` triples.
    pub fn equidistant(dims: &[(f64, f64, usize)]) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidInput("grid needs at least one dimension".into()));
        }
        for &(lo, hi, n) in dims {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "degenerate grid interval [{lo}, {hi}]"
                )));
            }
            if n < 2 {
                return Err(Error::InvalidInput(format!(
                    "grid needs at least 2 points per dimension, got {n}"
                )));
            }
        }
        Ok(GridSpec {
            dims: dims.iter().map(|&(lo, hi, n)| GridDim { lo, hi, n }).collect(),
            equidistant: true,
        })
    }

    /// Number of dimensions.
    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    /// Total number of grid points.
    pub fn len(&self) -> usize {
        self.dims.iter().map(|d| d.n).product()
    }

    /// True when the grid has no points (never, for validated specs).
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Coordinates of the point at a flat lexicographic index (first
    /// dimension varies slowest).
    pub fn point(&self, flat: usize, out: &mut [f64]) {
        let mut rem = flat;
        for (k, d) in self.dims.iter().enumerate().rev() {
            let i = rem % d.n;
            rem /= d.n;
            out[k] = d.lo + (d.hi - d.lo) * i as f64 / (d.n - 1) as f64;
        }
    }
}

/// A sampled dataset: rows of coordinates plus one value per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// Sample coordinates, one row per point.
    pub x: DMatrix<f64>,
    /// Sampled values aligned with the rows of `x`.
    pub y: DVector<f64>,
}

impl Dataset {
    /// Number of rows.
    pub fn len(&self) -> usize {
        self.y.len()
    }

    /// True when the dataset has no rows.
    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// Number of coordinate dimensions.
    pub fn dim(&self) -> usize {
        self.x.ncols()
    }
}

/// Sample `f` on a tensor-product grid in lexicographic index order.
///
/// With a cutoff, rows whose value exceeds it are removed and the row of
/// the grid minimum is appended afterwards (so the minimum is always
/// present even when the filter is aggressive). Removing every row is an
/// error.
pub fn make_dataset<F>(f: F, grid: &GridSpec, cutoff: Option<f64>) -> Result<Dataset>
where
    F: Fn(&[f64]) -> f64,
{
    let d = grid.dim();
    let total = grid.len();
    let mut coords = vec![0.0; d];
    let mut rows: Vec<f64> = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    let mut min_row: Option<(Vec<f64>, f64)> = None;
    for flat in 0..total {
        grid.point(flat, &mut coords);
        let v = f(&coords);
        if !v.is_finite() {
            return Err(Error::NonFinite(format!(
                "target value at {coords:?} is {v}"
            )));
        }
        if min_row.as_ref().is_none_or(|(_, mv)| v < *mv) {
            min_row = Some((coords.clone(), v));
        }
        if cutoff.is_none_or(|c| v <= c) {
            rows.extend_from_slice(&coords);
            values.push(v);
        }
    }
    if values.is_empty() {
        return Err(Error::EmptyDataset {
            cutoff: cutoff.unwrap_or(f64::NAN),
            total,
        });
    }
    if cutoff.is_some() {
        let (mc, mv) = min_row.expect("nonempty grid");
        rows.extend_from_slice(&mc);
        values.push(mv);
    }
    Ok(Dataset {
        x: DMatrix::from_row_slice(values.len(), d, &rows),
        y: DVector::from_vec(values),
    })
}

/// Write a dataset as CSV: header `x0,…,x{D−1},value`, one row per
/// sample, 17 significant digits, LF line endings.
pub fn save_dataset(ds: &Dataset, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for k in 0..ds.dim() {
        write!(w, "x{k},")?;
    }
    writeln!(w, "value")?;
    for i in 0..ds.len() {
        for k in 0..ds.dim() {
            write!(w, "{:.16e},", ds.x[(i, k)])?;
        }
        writeln!(w, "{:.16e}", ds.y[i])?;
    }
    w.flush()?;
    Ok(())
}

/// Read a dataset written by [`save_dataset`]; the roundtrip is lossless.
pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)?;
    let mut records = reader.records();
    let header = match records.next() {
        Some(rec) => rec?,
        None => {
            return Err(Error::Parse {
                line: 1,
                message: "empty file".into(),
            })
        }
    };
    let arity = header.len();
    if arity < 2 {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected at least 2 columns, found {arity}"),
        });
    }
    let d = arity - 1;
    for k in 0..d {
        if header.get(k).map(str::trim) != Some(&format!("x{k}")) {
            return Err(Error::Parse {
                line: 1,
                message: format!(
                    "bad header column {k}: expected 'x{k}', found '{}'",
                    header.get(k).unwrap_or("")
                ),
            });
        }
    }
    if header.get(d).map(str::trim) != Some("value") {
        return Err(Error::Parse {
            line: 1,
            message: format!(
                "bad header column {d}: expected 'value', found '{}'",
                header.get(d).unwrap_or("")
            ),
        });
    }
    let mut rows: Vec<f64> = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    for (i, rec) in records.enumerate() {
        let line = i + 2;
        let rec = rec?;
        if rec.len() != arity {
            return Err(Error::Parse {
                line,
                message: format!("expected {arity} fields, found {}", rec.len()),
            });
        }
        for (k, field) in rec.iter().enumerate() {
            let v: f64 = field.trim().parse().map_err(|e| Error::Parse {
                line,
                message: format!("column {k}: {e}"),
            })?;
            if k < d {
                rows.push(v);
            } else {
                values.push(v);
            }
        }
    }
    if values.is_empty() {
        return Err(Error::Parse {
            line: 2,
            message: "no data rows".into(),
        });
    }
    Ok(Dataset {
        x: DMatrix::from_row_slice(values.len(), d, &rows),
        y: DVector::from_vec(values),
    })
}

/// `f₁(x) = eˣ + e⁻ˣ` on `[−10, 10]`: one interior minimum at 0.
pub fn f1(x: f64) -> f64 {
    x.exp() + (-x).exp()
}

/// `f₂(x) = 1 − (x − 1)²` for `x > 0`, `arctan(−x)` for `x ≤ 0`, on
/// `[−3, 3]`: continuous at 0, extrema at 0 (min) and 1 (max).
pub fn f2(x: f64) -> f64 {
    if x > 0.0 {
        1.0 - (x - 1.0) * (x - 1.0)
    } else {
        (-x).atan()
    }
}

/// `f₃(x) = exp(−1/(|x| − 1)²)` for `|x| > 1`, 0 on `[−1, 1]`, on
/// `[−4, 4]`: a plateau minimizer spanning `[−1, 1]`.
pub fn f3(x: f64) -> f64 {
    let a = x.abs();
    if a > 1.0 {
        (-1.0 / ((a - 1.0) * (a - 1.0))).exp()
    } else {
        0.0
    }
}

/// `f₄(x, y) = arctan(x)·arctan(y)` on `[−4, 4]²`.
pub fn f4(x: f64, y: f64) -> f64 {
    x.atan() * y.atan()
}

/// Configuration of the synthetic potential-energy surface: Morse
/// variables plus a degree-4 total-degree expansion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PesConfig {
    /// Morse width for the first bond (1/Å).
    pub alpha0: f64,
    /// Morse width for the second bond (1/Å).
    pub alpha1: f64,
    /// Equilibrium length of the first bond (Å).
    pub beta0: f64,
    /// Equilibrium length of the second bond (Å).
    pub beta1: f64,
    /// Equilibrium bond angle (rad), in `(0, π)`.
    pub beta2: f64,
    /// Expansion coefficients over the 35 total-degree ≤ 4 monomials in
    /// `(y₀, y₁, y₂)`, lexicographically ordered; the constant term is 0
    /// so the surface has value 0 at equilibrium.
    pub coeffs: Vec<f64>,
    /// Energy cutoff used when building datasets (cm⁻¹).
    pub cutoff: f64,
}

/// Morse variables of the internal coordinates `(r₀, r₁, θ)`:
/// `y_i = 1 − exp(−α_i (x_i − β_i))` for the bonds and
/// `y₂ = cos(x₂) − cos(β₂)` for the angle.
pub fn morse_variables(cfg: &PesConfig, x: &[f64]) -> [f64; 3] {
    [
        1.0 - (-cfg.alpha0 * (x[0] - cfg.beta0)).exp(),
        1.0 - (-cfg.alpha1 * (x[1] - cfg.beta1)).exp(),
        x[2].cos() - cfg.beta2.cos(),
    ]
}

/// Evaluate the configured degree-4 expansion in Morse variables. By
/// construction the value is 0 at `(β₀, β₁, β₂)` and the surface is
/// exactly representable as a quartic in `(y₀, y₁, y₂)`.
pub fn pes_eval(cfg: &PesConfig, x: &[f64]) -> f64 {
    let y = morse_variables(cfg, x);
    let indices = pes_indices();
    let mut pow = [[1.0f64; 5]; 3];
    for k in 0..3 {
        for e in 1..5 {
            pow[k][e] = pow[k][e - 1] * y[k];
        }
    }
    indices
        .iter()
        .zip(&cfg.coeffs)
        .map(|(t, &c)| c * pow[0][t[0] as usize] * pow[1][t[1] as usize] * pow[2][t[2] as usize])
        .sum()
}

fn pes_indices() -> &'static [Vec<u32>] {
    static INDICES: OnceLock<Vec<Vec<u32>>> = OnceLock::new();
    INDICES.get_or_init(|| total_degree_indices(3, 4))
}

/// Sampling domain of the surface: bonds in `[0.9, 3.5]` Å, angle in
/// `[0, π]`.
pub const PES_DOMAIN: [(f64, f64); 3] = [(0.9, 3.5), (0.9, 3.5), (0.0, std::f64::consts::PI)];

/// The default synthetic surface: a symmetrized sum of four squared
/// random linear-plus-quadratic forms in the Morse variables (hence a
/// nonnegative quartic with minimum 0 at equilibrium), drawn once from a
/// seeded generator and scaled so the default 40³ training grid peaks at
/// 6·10⁴ cm⁻¹ (the 4·10⁴ cutoff then removes a realistic fraction).
pub fn default_pes_config() -> &'static PesConfig {
    static CONFIG: OnceLock<PesConfig> = OnceLock::new();
    CONFIG.get_or_init(|| {
        let mut cfg = PesConfig {
            alpha0: 1.8,
            alpha1: 1.8,
            beta0: 1.336,
            beta1: 1.336,
            beta2: 1.611,
            coeffs: generate_quartic_coeffs(42, 4),
            cutoff: 4e4,
        };
        // Scale so the training grid's maximum is 6e4.
        let grid = pes_train_grid();
        let mut coords = vec![0.0; 3];
        let mut max_v = 0.0f64;
        for flat in 0..grid.len() {
            grid.point(flat, &mut coords);
            max_v = max_v.max(pes_eval(&cfg, &coords));
        }
        let lambda = 6e4 / max_v;
        for c in &mut cfg.coeffs {
            *c *= lambda;
        }
        cfg
    })
}

/// Draw the quartic expansion: `n_forms` random forms with standard
/// normal coefficients over the nine non-constant monomials of degree
/// ≤ 2, squared, summed, and symmetrized under `y₀ ↔ y₁`.
fn generate_quartic_coeffs(seed: u64, n_forms: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let idx2: Vec<Vec<u32>> = total_degree_indices(3, 2)
        .into_iter()
        .filter(|t| t.iter().sum::<u32>() >= 1)
        .collect();
    let idx4 = total_degree_indices(3, 4);
    let pos_of = |t: &[u32]| -> usize {
        idx4.iter()
            .position(|u| u.as_slice() == t)
            .expect("product exponent within degree 4")
    };
    let mut coeffs = vec![0.0; idx4.len()];
    for _ in 0..n_forms {
        let form: Vec<f64> = (0..idx2.len())
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        for (a, &ca) in idx2.iter().zip(&form) {
            for (b, &cb) in idx2.iter().zip(&form) {
                let sum: Vec<u32> = a.iter().zip(b).map(|(&p, &q)| p + q).collect();
                coeffs[pos_of(&sum)] += ca * cb;
            }
        }
    }
    // Symmetrize under exchange of the two bonds.
    let mut sym = vec![0.0; coeffs.len()];
    for (t, &c) in idx4.iter().zip(&coeffs) {
        let swapped = [t[1], t[0], t[2]];
        let j = pos_of(&swapped);
        sym[pos_of(t)] += 0.5 * c;
        sym[j] += 0.5 * c;
    }
    sym
}

/// Default 40-points-per-coordinate PES training grid.
pub fn pes_train_grid() -> GridSpec {
    GridSpec::equidistant(&[
        (PES_DOMAIN[0].0, PES_DOMAIN[0].1, 40),
        (PES_DOMAIN[1].0, PES_DOMAIN[1].1, 40),
        (PES_DOMAIN[2].0, PES_DOMAIN[2].1, 40),
    ])
    .expect("static grid")
}

/// Default 100-points-per-coordinate PES validation grid.
pub fn pes_val_grid() -> GridSpec {
    GridSpec::equidistant(&[
        (PES_DOMAIN[0].0, PES_DOMAIN[0].1, 100),
        (PES_DOMAIN[1].0, PES_DOMAIN[1].1, 100),
        (PES_DOMAIN[2].0, PES_DOMAIN[2].1, 100),
    ])
    .expect("static grid")
}

/// The benchmark targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Benchmark {
    /// `eˣ + e⁻ˣ` on `[−10, 10]`.
    F1,
    /// Piecewise parabola/arctangent on `[−3, 3]`.
    F2,
    /// Flat-bottomed bump function on `[−4, 4]`.
    F3,
    /// `arctan(x)·arctan(y)` on `[−4, 4]²`.
    F4,
    /// Synthetic triatomic potential-energy surface.
    Pes,
}

impl Benchmark {
    /// Parse a benchmark name (`f1`–`f4`, `pes`).
    pub fn from_name(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "f1" => Ok(Benchmark::F1),
            "f2" => Ok(Benchmark::F2),
            "f3" => Ok(Benchmark::F3),
            "f4" => Ok(Benchmark::F4),
            "pes" => Ok(Benchmark::Pes),
            other => Err(Error::UnknownTarget(other.to_string())),
        }
    }

    /// Canonical name.
    pub fn name(self) -> &'static str {
        match self {
            Benchmark::F1 => "f1",
            Benchmark::F2 => "f2",
            Benchmark::F3 => "f3",
            Benchmark::F4 => "f4",
            Benchmark::Pes => "pes",
        }
    }

    /// Input dimension.
    pub fn dim(self) -> usize {
        match self {
            Benchmark::F1 | Benchmark::F2 | Benchmark::F3 => 1,
            Benchmark::F4 => 2,
            Benchmark::Pes => 3,
        }
    }

    /// Per-dimension working domain.
    pub fn domain(self) -> Vec<(f64, f64)> {
        match self {
            Benchmark::F1 => vec![(-10.0, 10.0)],
            Benchmark::F2 => vec![(-3.0, 3.0)],
            Benchmark::F3 => vec![(-4.0, 4.0)],
            Benchmark::F4 => vec![(-4.0, 4.0), (-4.0, 4.0)],
            Benchmark::Pes => PES_DOMAIN.to_vec(),
        }
    }

    /// Dataset cutoff, if the target uses one.
    pub fn cutoff(self) -> Option<f64> {
        match self {
            Benchmark::Pes => Some(default_pes_config().cutoff),
            _ => None,
        }
    }

    /// Evaluate at a point of the target's dimension.
    pub fn eval(self, x: &[f64]) -> f64 {
        match self {
            Benchmark::F1 => f1(x[0]),
            Benchmark::F2 => f2(x[0]),
            Benchmark::F3 => f3(x[0]),
            Benchmark::F4 => f4(x[0], x[1]),
            Benchmark::Pes => pes_eval(default_pes_config(), x),
        }
    }

    /// Evaluate a one-dimensional target.
    pub fn eval1(self, x: f64) -> f64 {
        self.eval(&[x])
    }

    /// Default training grid (sizes from the experiments: 301, 301, 1000,
    /// 20/dim, 40/dim).
    pub fn train_grid(self) -> GridSpec {
        let spec = match self {
            Benchmark::F1 => vec![(-10.0, 10.0, 301)],
            Benchmark::F2 => vec![(-3.0, 3.0, 301)],
            Benchmark::F3 => vec![(-4.0, 4.0, 1000)],
            Benchmark::F4 => vec![(-4.0, 4.0, 20), (-4.0, 4.0, 20)],
            Benchmark::Pes => return pes_train_grid(),
        };
        GridSpec::equidistant(&spec).expect("static grid")
    }

    /// Default validation grid (5001, 5001, 5000, 100/dim, 100/dim).
    pub fn val_grid(self) -> GridSpec {
        let spec = match self {
            Benchmark::F1 => vec![(-10.0, 10.0, 5001)],
            Benchmark::F2 => vec![(-3.0, 3.0, 5001)],
            Benchmark::F3 => vec![(-4.0, 4.0, 5000)],
            Benchmark::F4 => vec![(-4.0, 4.0, 100), (-4.0, 4.0, 100)],
            Benchmark::Pes => return pes_val_grid(),
        };
        GridSpec::equidistant(&spec).expect("static grid")
    }

    /// Build the default training dataset.
    pub fn train_dataset(self) -> Result<Dataset> {
        make_dataset(|x| self.eval(x), &self.train_grid(), self.cutoff())
    }

    /// Build the default validation dataset.
    pub fn val_dataset(self) -> Result<Dataset> {
        make_dataset(|x| self.eval(x), &self.val_grid(), self.cutoff())
    }
}

/// Randomly generated continuous piecewise strictly monotone target with
/// a prescribed number of interior extrema, for exercising the exact
/// construction.
#[derive(Debug, Clone)]
pub struct PiecewiseMonotone {
    /// Piece boundaries, endpoints included (`m + 2` entries).
    cuts: Vec<f64>,
    /// Values at the boundaries, alternating in the interior.
    values: Vec<f64>,
}

impl PiecewiseMonotone {
    /// Draw a target with exactly `m` interior extrema on `domain`.
    ///
    /// Interior cut points keep a separation of at least 1/20 of the
    /// domain span; consecutive values alternate with gaps in
    /// `[0.5, 2.5]`. Each piece is a smoothstep bridge, so the function
    /// is C¹, strictly monotone inside pieces, and has exactly one
    /// extremum per interior cut.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, m: usize, domain: (f64, f64)) -> Self {
        let (a, b) = domain;
        let span = b - a;
        let min_sep = span / 20.0;
        let cuts = loop {
            let mut interior: Vec<f64> = (0..m).map(|_| rng.gen_range(a..b)).collect();
            interior.sort_by(|p, q| p.partial_cmp(q).expect("finite"));
            let mut all = Vec::with_capacity(m + 2);
            all.push(a);
            all.extend_from_slice(&interior);
            all.push(b);
            if all.windows(2).all(|w| w[1] - w[0] >= min_sep) {
                break all;
            }
        };
        let mut dir = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let mut values = Vec::with_capacity(m + 2);
        values.push(rng.gen_range(-3.0..3.0));
        for i in 0..m + 1 {
            let gap: f64 = rng.gen_range(0.5..2.5);
            values.push(values[i] + dir * gap);
            dir = -dir;
        }
        PiecewiseMonotone { cuts, values }
    }

    /// Number of interior extrema.
    pub fn m(&self) -> usize {
        self.cuts.len() - 2
    }

    /// Working domain.
    pub fn domain(&self) -> (f64, f64) {
        (self.cuts[0], *self.cuts.last().expect("nonempty"))
    }

    /// Spread of the boundary values.
    pub fn range(&self) -> f64 {
        let (lo, hi) = self
            .values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        hi - lo
    }

    /// Evaluate at `x` (clamped to the domain).
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.cuts.len();
        let x = x.clamp(self.cuts[0], self.cuts[n - 1]);
        let mut i = match self
            .cuts
            .binary_search_by(|c| c.partial_cmp(&x).expect("finite"))
        {
            Ok(j) => j,
            Err(j) => j.saturating_sub(1),
        };
        if i >= n - 1 {
            i = n - 2;
        }
        let t = (x - self.cuts[i]) / (self.cuts[i + 1] - self.cuts[i]);
        let s = t * t * (3.0 - 2.0 * t);
        self.values[i] + (self.values[i + 1] - self.values[i]) * s
    }
}

/// Piecewise-linear interpolant through one-dimensional samples, used to
/// treat a user-supplied dataset as a target function.
#[derive(Debug, Clone)]
pub struct LinearInterpolant {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl LinearInterpolant {
    /// Build from a one-dimensional dataset; samples are sorted by
    /// coordinate and duplicates are rejected.
    pub fn from_dataset(ds: &Dataset) -> Result<Self> {
        if ds.dim() != 1 {
            return Err(Error::InvalidInput(format!(
                "interpolant needs a 1-dimensional dataset, got {}",
                ds.dim()
            )));
        }
        if ds.len() < 2 {
            return Err(Error::InvalidInput(
                "interpolant needs at least 2 samples".into(),
            ));
        }
        let mut pairs: Vec<(f64, f64)> =
            (0..ds.len()).map(|i| (ds.x[(i, 0)], ds.y[i])).collect();
        pairs.sort_by(|p, q| p.0.partial_cmp(&q.0).expect("finite"));
        if pairs.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidInput(
                "duplicate coordinates in interpolant samples".into(),
            ));
        }
        Ok(LinearInterpolant {
            xs: pairs.iter().map(|p| p.0).collect(),
            ys: pairs.iter().map(|p| p.1).collect(),
        })
    }

    /// Domain covered by the samples.
    pub fn domain(&self) -> (f64, f64) {
        (self.xs[0], *self.xs.last().expect("nonempty"))
    }

    /// Evaluate at `x` (clamped to the sample range).
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        let x = x.clamp(self.xs[0], self.xs[n - 1]);
        let mut i = match self
            .xs
            .binary_search_by(|c| c.partial_cmp(&x).expect("finite"))
        {
            Ok(j) => j,
            Err(j) => j.saturating_sub(1),
        };
        if i >= n - 1 {
            i = n - 2;
        }
        let t = (x - self.xs[i]) / (self.xs[i + 1] - self.xs[i]);
        self.ys[i] + (self.ys[i + 1] - self.ys[i]) * t
    }
}
