//! Vectorized kernels for the batch-sized inner loops.
//!
//! The training hot path spends nearly all of its time in three patterns:
//! sigmoid evaluation over activation matrices, axpy updates in the small
//! batch GEMMs, and long dot products contracting over the batch dimension
//! (weight gradients and Gram matrices). `wide::f64x4` compiles each of
//! these to the widest instruction set enabled at build time (see the
//! repository `.cargo/config.toml`) and falls back to SSE pairs elsewhere,
//! so results are identical for a given binary while throughput tracks the
//! hardware.
//!
//! All loops walk slices through `chunks_exact`, whose compile-time chunk
//! length lets the compiler drop every bounds check from the hot path.

use nalgebra::{DMatrix, DVector};
use wide::f64x4;

/// Lanes per SIMD register.
const LANES: usize = 4;

/// Sigmoid pre-activations are clamped to this magnitude. `wide`'s `exp`
/// returns zero outside ±708.39 (even on the overflow side), which would
/// turn a saturated sigmoid into the wrong branch; at ±700 the result is
/// still finite and the sigmoid has long since saturated to ~1e-304.
const SIGMOID_CLAMP: f64 = 700.0;

#[inline(always)]
fn load(xs: &[f64; LANES]) -> f64x4 {
    f64x4::new(*xs)
}

#[inline(always)]
fn store(v: f64x4, out: &mut [f64; LANES]) {
    *out = v.to_array();
}

/// Borrow a length-`LANES` window at a constant offset of a fixed-size
/// chunk; resolves to an unchecked vector load after inlining.
#[inline(always)]
fn quad<const N: usize>(xs: &[f64; N], at: usize) -> f64x4 {
    f64x4::new([xs[at], xs[at + 1], xs[at + 2], xs[at + 3]])
}

#[inline(always)]
fn vsigmoid(t: f64x4) -> f64x4 {
    let t = t
        .max(f64x4::splat(-SIGMOID_CLAMP))
        .min(f64x4::splat(SIGMOID_CLAMP));
    f64x4::ONE / (f64x4::ONE + (f64x4::ZERO - t).exp())
}

/// Scalar sigmoid with the same clamp as the vector path.
#[inline(always)]
pub(crate) fn sigmoid(t: f64) -> f64 {
    let t = t.clamp(-SIGMOID_CLAMP, SIGMOID_CLAMP);
    1.0 / (1.0 + (-t).exp())
}

/// Fused bias + LipSwish over one column: `z += bj`, `a = z σ(βz) / 1.1`,
/// optionally recording the sigmoid values for the backward pass.
pub(crate) fn bias_lipswish(
    z: &mut [f64],
    bj: f64,
    beta: f64,
    a: &mut [f64],
    sig: Option<&mut [f64]>,
) {
    debug_assert_eq!(z.len(), a.len());
    let bv = f64x4::splat(bj);
    let betav = f64x4::splat(beta);
    let inv = f64x4::splat(1.0 / 1.1);
    match sig {
        Some(ss) => {
            debug_assert_eq!(ss.len(), z.len());
            let mut cz = z.chunks_exact_mut(LANES);
            let mut ca = a.chunks_exact_mut(LANES);
            let mut cs = ss.chunks_exact_mut(LANES);
            for ((zc, ac), sc) in (&mut cz).zip(&mut ca).zip(&mut cs) {
                let zc: &mut [f64; LANES] = zc.try_into().unwrap();
                let ac: &mut [f64; LANES] = ac.try_into().unwrap();
                let sc: &mut [f64; LANES] = sc.try_into().unwrap();
                let zv = load(zc) + bv;
                let s = vsigmoid(betav * zv);
                store(zv, zc);
                store(s, sc);
                store(zv * s * inv, ac);
            }
            for ((zv, av), sv) in cz
                .into_remainder()
                .iter_mut()
                .zip(ca.into_remainder())
                .zip(cs.into_remainder())
            {
                let zb = *zv + bj;
                let s = sigmoid(beta * zb);
                *zv = zb;
                *sv = s;
                *av = zb * s / 1.1;
            }
        }
        None => {
            let mut cz = z.chunks_exact_mut(LANES);
            let mut ca = a.chunks_exact_mut(LANES);
            for (zc, ac) in (&mut cz).zip(&mut ca) {
                let zc: &mut [f64; LANES] = zc.try_into().unwrap();
                let ac: &mut [f64; LANES] = ac.try_into().unwrap();
                let zv = load(zc) + bv;
                let s = vsigmoid(betav * zv);
                store(zv, zc);
                store(zv * s * inv, ac);
            }
            for (zv, av) in cz.into_remainder().iter_mut().zip(ca.into_remainder()) {
                let zb = *zv + bj;
                *zv = zb;
                *av = zb * sigmoid(beta * zb) / 1.1;
            }
        }
    }
}

/// LipSwish backward over a slice: `dz = da · s(1 + βz(1−s)) / 1.1` from the
/// cached sigmoids; returns `Σ da · z² s(1−s) / 1.1` (the β gradient).
pub(crate) fn lipswish_backward(
    da: &[f64],
    z: &[f64],
    sig: &[f64],
    beta: f64,
    dz: &mut [f64],
) -> f64 {
    let n = da.len();
    debug_assert_eq!(z.len(), n);
    debug_assert_eq!(sig.len(), n);
    debug_assert_eq!(dz.len(), n);
    let betav = f64x4::splat(beta);
    let inv = f64x4::splat(1.0 / 1.1);
    let mut acc = f64x4::ZERO;
    let mut cd = da.chunks_exact(LANES);
    let mut cz = z.chunks_exact(LANES);
    let mut cs = sig.chunks_exact(LANES);
    let mut co = dz.chunks_exact_mut(LANES);
    for (((dc, zc), sc), oc) in (&mut cd).zip(&mut cz).zip(&mut cs).zip(&mut co) {
        let d = load(dc.try_into().unwrap());
        let zv = load(zc.try_into().unwrap());
        let s = load(sc.try_into().unwrap());
        let one_m_s = f64x4::ONE - s;
        let dzv = d * s * (betav * zv).mul_add(one_m_s, f64x4::ONE) * inv;
        store(dzv, oc.try_into().unwrap());
        acc = (d * zv * zv * s * one_m_s).mul_add(inv, acc);
    }
    let mut dbeta = acc.reduce_add();
    for (((d, zv), s), o) in cd
        .remainder()
        .iter()
        .zip(cz.remainder())
        .zip(cs.remainder())
        .zip(co.into_remainder())
    {
        *o = d * s * (1.0 + beta * zv * (1.0 - s)) / 1.1;
        dbeta += d * zv * zv * s * (1.0 - s) / 1.1;
    }
    dbeta
}

/// Dot product with four independent accumulators, breaking the add-latency
/// chain that otherwise dominates long batch-dimension contractions.
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc0 = f64x4::ZERO;
    let mut acc1 = f64x4::ZERO;
    let mut acc2 = f64x4::ZERO;
    let mut acc3 = f64x4::ZERO;
    let mut ca = a.chunks_exact(4 * LANES);
    let mut cb = b.chunks_exact(4 * LANES);
    for (xa, xb) in (&mut ca).zip(&mut cb) {
        let xa: &[f64; 4 * LANES] = xa.try_into().unwrap();
        let xb: &[f64; 4 * LANES] = xb.try_into().unwrap();
        acc0 = quad(xa, 0).mul_add(quad(xb, 0), acc0);
        acc1 = quad(xa, 4).mul_add(quad(xb, 4), acc1);
        acc2 = quad(xa, 8).mul_add(quad(xb, 8), acc2);
        acc3 = quad(xa, 12).mul_add(quad(xb, 12), acc3);
    }
    let mut ra = ca.remainder().chunks_exact(LANES);
    let mut rb = cb.remainder().chunks_exact(LANES);
    for (xa, xb) in (&mut ra).zip(&mut rb) {
        let xa: &[f64; LANES] = xa.try_into().unwrap();
        let xb: &[f64; LANES] = xb.try_into().unwrap();
        acc0 = load(xa).mul_add(load(xb), acc0);
    }
    let mut sum = ((acc0 + acc1) + (acc2 + acc3)).reduce_add();
    for (x, y) in ra.remainder().iter().zip(rb.remainder()) {
        sum += x * y;
    }
    sum
}

/// Sum of a slice with four independent accumulators.
pub(crate) fn sum(xs: &[f64]) -> f64 {
    let mut acc0 = f64x4::ZERO;
    let mut acc1 = f64x4::ZERO;
    let mut acc2 = f64x4::ZERO;
    let mut acc3 = f64x4::ZERO;
    let mut cx = xs.chunks_exact(4 * LANES);
    for xc in &mut cx {
        let xc: &[f64; 4 * LANES] = xc.try_into().unwrap();
        acc0 += quad(xc, 0);
        acc1 += quad(xc, 4);
        acc2 += quad(xc, 8);
        acc3 += quad(xc, 12);
    }
    let mut rx = cx.remainder().chunks_exact(LANES);
    for xc in &mut rx {
        acc0 += load(xc.try_into().unwrap());
    }
    let mut total = ((acc0 + acc1) + (acc2 + acc3)).reduce_add();
    for x in rx.remainder() {
        total += x;
    }
    total
}

/// In-place `y += a·x`.
pub(crate) fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    debug_assert_eq!(y.len(), x.len());
    let av = f64x4::splat(a);
    let mut cy = y.chunks_exact_mut(LANES);
    let mut cx = x.chunks_exact(LANES);
    for (yc, xc) in (&mut cy).zip(&mut cx) {
        let yc: &mut [f64; LANES] = yc.try_into().unwrap();
        let xc: &[f64; LANES] = xc.try_into().unwrap();
        store(av.mul_add(load(xc), load(yc)), yc);
    }
    for (yv, xv) in cy.into_remainder().iter_mut().zip(cx.remainder()) {
        *yv += a * xv;
    }
}

/// Symmetric Gram matrix `AᵀA` of a tall column-major matrix, computed
/// column-pair by column-pair (each pair is one long [`dot`]).
pub(crate) fn gram(a: &DMatrix<f64>) -> DMatrix<f64> {
    let (p, n) = a.shape();
    let s = a.as_slice();
    let mut g = DMatrix::zeros(n, n);
    for i in 0..n {
        let ci = &s[i * p..(i + 1) * p];
        for j in i..n {
            let v = dot(ci, &s[j * p..(j + 1) * p]);
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    g
}

/// `Aᵀ y` for a tall column-major matrix (one [`dot`] per column).
pub(crate) fn tr_mul_vec(a: &DMatrix<f64>, y: &[f64]) -> DVector<f64> {
    let (p, n) = a.shape();
    debug_assert_eq!(y.len(), p);
    let s = a.as_slice();
    DVector::from_fn(n, |i, _| dot(&s[i * p..(i + 1) * p], y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn vector_sigmoid_matches_scalar_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for beta in [1e-3, 0.7, 1.0, 3.0, 40.0] {
            let z: Vec<f64> = (0..257).map(|_| rng.gen_range(-60.0..60.0)).collect();
            let mut zc = z.clone();
            let mut a = vec![0.0; z.len()];
            let mut sig = vec![0.0; z.len()];
            bias_lipswish(&mut zc, 0.25, beta, &mut a, Some(&mut sig));
            for i in 0..z.len() {
                let zv = z[i] + 0.25;
                let s_ref = 1.0 / (1.0 + (-beta * zv).exp());
                assert!(
                    (sig[i] - s_ref).abs() <= 1e-14 * (1.0 + s_ref.abs()),
                    "sigmoid lane mismatch: {} vs {}",
                    sig[i],
                    s_ref
                );
                assert!((a[i] - zv * s_ref / 1.1).abs() <= 1e-13 * (1.0 + a[i].abs()));
                assert_eq!(zc[i], zv);
            }
        }
    }

    #[test]
    fn sigmoid_saturates_cleanly_at_extremes() {
        // Far outside the clamp the sigmoid must stay finite and pinned to
        // the correct branch; the vector exp alone would return zero for
        // both signs beyond ±708.
        let mut z = vec![800.0, -800.0, 1e12, -1e12];
        let mut a = vec![0.0; 4];
        let mut sig = vec![0.0; 4];
        bias_lipswish(&mut z, 0.0, 1.0, &mut a, Some(&mut sig));
        assert!((sig[0] - 1.0).abs() < 1e-300);
        assert!(sig[1] >= 0.0 && sig[1] < 1e-300);
        assert!((sig[2] - 1.0).abs() < 1e-300);
        assert!(sig[3] >= 0.0 && sig[3] < 1e-300);
        assert!(a.iter().all(|v| v.is_finite()));
        assert_eq!(sigmoid(800.0), sig[0]);
        assert_eq!(sigmoid(-800.0), sig[1]);
    }

    #[test]
    fn dot_and_sum_match_naive_at_all_lengths() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [0usize, 1, 3, 4, 5, 15, 16, 17, 63, 64, 301, 1000] {
            let a: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let naive: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
            let fast = dot(&a, &b);
            assert!(
                (fast - naive).abs() <= 1e-12 * (1.0 + naive.abs()),
                "n={n}: {fast} vs {naive}"
            );
            let naive_sum: f64 = a.iter().sum();
            assert!((sum(&a) - naive_sum).abs() <= 1e-12 * (1.0 + naive_sum.abs()));
        }
    }

    #[test]
    fn axpy_matches_naive_update() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in [0usize, 1, 4, 7, 301] {
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let y0: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let mut y = y0.clone();
            axpy(&mut y, -1.75, &x);
            for i in 0..n {
                let want = y0[i] - 1.75 * x[i];
                assert!((y[i] - want).abs() <= 1e-15 * (1.0 + want.abs()));
            }
        }
    }

    #[test]
    fn gram_and_tr_mul_match_nalgebra() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let a = DMatrix::from_fn(53, 6, |_, _| rng.gen_range(-1.0..1.0));
        let y: Vec<f64> = (0..53).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let g = gram(&a);
        let g_ref = a.tr_mul(&a);
        assert!((&g - &g_ref).abs().max() <= 1e-13);
        let v = tr_mul_vec(&a, &y);
        let v_ref = a.tr_mul(&nalgebra::DVector::from_column_slice(&y));
        assert!((&v - &v_ref).abs().max() <= 1e-13);
    }
}
