//! Acceptance checks for the whole workspace: one criterion per line,
//! nonzero exit if any fails.
//!
//! The ten criteria cover the exact constructive path (representation
//! and alternating-polynomial residuals), the minimal-degree floor, the
//! learned fits on every benchmark, the deterministic polynomial
//! baselines they are compared against, the invertible-network
//! properties, and run-to-run determinism. Tolerances: deterministic
//! baselines carry ±20% bands, learned results sit inside factor-3
//! bands around their reference values, and exact-path checks are tight.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use homeofit::construct::{chandler_polynomial, construct_exact};
use homeofit::critical::find_critical_sets;
use homeofit::fit::{
    baseline_fit, default_config, metrics, train_benchmark, varpro_coeffs, FitConfig, FitOutcome,
    Schedule,
};
use homeofit::invnet::Net;
use homeofit::poly::{design_matrix_from_values, total_degree_indices};
use homeofit::targets::{default_pes_config, morse_variables, Benchmark, PiecewiseMonotone};

type Check = (&'static str, fn() -> Result<String, String>);

fn main() {
    let checks: [Check; 10] = [
        ("exact representation", exact_representation),
        ("alternating-polynomial residuals", chandler_residuals),
        ("minimal-degree floor", minimal_degree_floor),
        ("f1 learned fit", f1_learned),
        ("f2 learned fit and degree-80 baseline", f2_experiment),
        ("f3 learned fit and degree-40 baseline", f3_experiment),
        ("2D learned fit and degree-13 baseline", f4_experiment),
        ("PES learned variables vs direct fits", pes_experiment),
        ("network invertibility, monotonicity, gradients", network_properties),
        ("seeded-run determinism", determinism),
    ];

    let t0 = Instant::now();
    let mut failed = 0usize;
    for (i, (name, check)) in checks.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {:2}: PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:2}: FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {}/{} criteria passed in {:.0}s",
        checks.len() - failed,
        checks.len(),
        t0.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}

/// Largest function value spread on an equidistant grid.
fn grid_range(f: &dyn Fn(f64) -> f64, domain: (f64, f64), n: usize) -> f64 {
    let (a, b) = domain;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let v = f(a + (b - a) * i as f64 / (n - 1) as f64);
        lo = lo.min(v);
        hi = hi.max(v);
    }
    hi - lo
}

/// Criterion 1 — for f1, f2, and 50 seeded piecewise strictly monotone
/// targets with up to 4 interior extrema, the exact construction reaches
/// sup|f − p∘h| ≤ 1e-8·(1 + range f) on 2001-point grids within 5 s total.
fn exact_representation() -> Result<String, String> {
    let t0 = Instant::now();
    let mut worst_rel = 0.0f64;

    for b in [Benchmark::F1, Benchmark::F2] {
        let domain = b.domain()[0];
        let c = construct_exact(move |x| b.eval1(x), domain, 2001)
            .map_err(|e| format!("{} construction failed: {e}", b.name()))?;
        let rel = c.sup_error / (1.0 + grid_range(&|x| b.eval1(x), domain, 2001));
        worst_rel = worst_rel.max(rel);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for k in 0..50u64 {
        let m = (k % 5) as usize;
        let domain = (-3.0, 2.0);
        let target = PiecewiseMonotone::random(&mut rng, m, domain);
        let probe = target.clone();
        let c = construct_exact(move |x| probe.eval(x), domain, 2001)
            .map_err(|e| format!("synthetic target {k} (m = {m}) failed: {e}"))?;
        let rel = c.sup_error / (1.0 + grid_range(&|x| target.eval(x), domain, 2001));
        worst_rel = worst_rel.max(rel);
    }

    let dt = t0.elapsed().as_secs_f64();
    if worst_rel > 1e-8 {
        return Err(format!("worst relative sup error {worst_rel:.3e} > 1e-8"));
    }
    if dt > 5.0 {
        return Err(format!("took {dt:.2}s > 5s"));
    }
    Ok(format!(
        "52 targets, worst relative sup error {worst_rel:.3e}, {dt:.2}s"
    ))
}

/// Criterion 2 — on 200 random alternating sequences with 1–4 interior
/// extrema, the interpolation and critical-derivative residuals of the
/// alternating polynomial stay below 1e-10·(1 + max|f_i|).
fn chandler_residuals() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst_rel = 0.0f64;
    for k in 0..200u64 {
        let m = 1 + (k % 4) as usize;
        let mut values = Vec::with_capacity(m + 2);
        let mut v: f64 = rng.gen_range(-5.0..5.0);
        let mut up = rng.gen_bool(0.5);
        values.push(v);
        for _ in 0..m + 1 {
            let gap: f64 = rng.gen_range(0.1..10.0);
            v += if up { gap } else { -gap };
            values.push(v);
            up = !up;
        }
        let r = chandler_polynomial(&values)
            .map_err(|e| format!("sequence {k} (m = {m}) failed: {e}"))?;
        let scale = 1.0 + values.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        worst_rel = worst_rel
            .max(r.residual_interp / scale)
            .max(r.residual_deriv / scale);
    }
    if worst_rel > 1e-10 {
        return Err(format!("worst relative residual {worst_rel:.3e} > 1e-10"));
    }
    Ok(format!(
        "200 sequences, worst relative residual {worst_rel:.3e}"
    ))
}

/// Criterion 3 — a fit whose polynomial degree is below the number of
/// interior extrema plus one cannot descend below half the smallest gap
/// between consecutive alternation values. Asserted on trained fits of
/// f1 (degree 1) and f2 (degree 2); the bound is structural, so it must
/// hold for any training outcome.
fn minimal_degree_floor() -> Result<String, String> {
    let mut details = Vec::new();
    for (b, degree) in [(Benchmark::F1, 1usize), (Benchmark::F2, 2usize)] {
        let domain = b.domain()[0];
        let cs = find_critical_sets(&|x| b.eval1(x), domain, 2001, None)
            .map_err(|e| format!("{} critical detection failed: {e}", b.name()))?;
        let floor = 0.5 * cs.min_value_gap();
        let cfg = FitConfig {
            steps: 3000,
            ..FitConfig::new(degree)
        };
        let out = train_benchmark(b, &cfg).map_err(|e| format!("{} fit failed: {e}", b.name()))?;
        if out.report.sup_error < floor {
            return Err(format!(
                "{} degree-{degree} sup error {:.3e} fell below the floor {floor:.3e}",
                b.name(),
                out.report.sup_error
            ));
        }
        details.push(format!(
            "{} d{degree}: sup {:.3e} ≥ floor {:.3e}",
            b.name(),
            out.report.sup_error,
            floor
        ));
    }
    Ok(details.join("; "))
}

/// Largest deviation of the learned 1D map from a reference
/// reparametrization, minimized over the two reflection orientations
/// (`p(y) = p(−y)` for an even polynomial leaves the sign free).
fn h_deviation(net: &Net, reference: &dyn Fn(f64) -> f64, domain: (f64, f64)) -> f64 {
    let n = 5001;
    let (a, b) = domain;
    let xs = DMatrix::from_fn(n, 1, |i, _| a + (b - a) * i as f64 / (n - 1) as f64);
    let h = net.forward(&xs);
    let mut sup_pos = 0.0f64;
    let mut sup_neg = 0.0f64;
    for i in 0..n {
        let r = reference(xs[(i, 0)]);
        sup_pos = sup_pos.max((h[(i, 0)] - r).abs());
        sup_neg = sup_neg.max((h[(i, 0)] + r).abs());
    }
    sup_pos.min(sup_neg)
}

/// Criterion 4 — the f1 fit at degree 2 with coefficients fixed to
/// (2, 0, 1), 301 training and 5001 validation points: validation RMSE
/// ≤ 33.4 and MRE ≤ 0.063, the learned map matches sign(x)·√(f1(x) − 2)
/// to sup error ≤ 0.5 on [−10, 10], all within 5 CPU-minutes.
fn f1_learned() -> Result<String, String> {
    let cfg = default_config(Benchmark::F1);
    if cfg.degree != 2 || cfg.fixed_coeffs.as_deref() != Some(&[2.0, 0.0, 1.0]) {
        return Err("standard f1 configuration drifted from degree 2, coefficients (2, 0, 1)".into());
    }
    let t0 = Instant::now();
    let out = train_benchmark(Benchmark::F1, &cfg).map_err(|e| format!("fit failed: {e}"))?;
    let dt = t0.elapsed().as_secs_f64();
    if out.report.train_rows != 301 || out.report.val_rows != 5001 {
        return Err(format!(
            "grid drifted: {} train / {} validation rows",
            out.report.train_rows, out.report.val_rows
        ));
    }
    // sign(x)·√(f1(x) − 2) simplifies to 2·sinh(x/2).
    let hsup = h_deviation(&out.net, &|x: f64| 2.0 * (x / 2.0).sinh(), (-10.0, 10.0));
    let detail = format!(
        "rmse {:.3} (≤ 33.4), mre {:.4} (≤ 0.063), h deviation {:.3} (≤ 0.5), {dt:.0}s",
        out.report.rmse, out.report.mre, hsup
    );
    if out.report.rmse > 33.4 || out.report.mre > 0.063 || hsup > 0.5 || dt > 300.0 {
        return Err(detail);
    }
    Ok(detail)
}

fn band(value: f64, center: f64) -> bool {
    (0.8 * center..=1.2 * center).contains(&value)
}

/// Criterion 5 — f2: the learned degree-3 fit reaches validation RMSE
/// ≤ 1.2e-2 and maximum absolute error ≤ 0.114; the deterministic
/// degree-80 baseline lands at RMSE 6.93e-3 and MAE 0.063, both ±20%.
fn f2_experiment() -> Result<String, String> {
    let out = train_benchmark(Benchmark::F2, &default_config(Benchmark::F2))
        .map_err(|e| format!("fit failed: {e}"))?;
    let train = Benchmark::F2.train_dataset().map_err(|e| e.to_string())?;
    let val = Benchmark::F2.val_dataset().map_err(|e| e.to_string())?;
    let base = baseline_fit(&train, &val, 80, &Benchmark::F2.domain(), false)
        .map_err(|e| format!("baseline failed: {e}"))?;
    let detail = format!(
        "learned rmse {:.3e} (≤ 1.2e-2), mae {:.3e} (≤ 0.114); d80 rmse {:.3e} (6.93e-3 ±20%), mae {:.3e} (0.063 ±20%)",
        out.report.rmse, out.report.mae, base.report.rmse, base.report.mae
    );
    let ok = out.report.rmse <= 1.2e-2
        && out.report.mae <= 0.114
        && band(base.report.rmse, 6.93e-3)
        && band(base.report.mae, 0.063);
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Criterion 6 — f3: the learned degree-2 fit with coefficients fixed to
/// (0, 0, 1) reaches validation RMSE ≤ 2.82e-3; the deterministic
/// degree-40 baseline lands at RMSE 9.16e-4 and MAE 2.65e-3, both ±20%.
fn f3_experiment() -> Result<String, String> {
    let cfg = default_config(Benchmark::F3);
    if cfg.fixed_coeffs.as_deref() != Some(&[0.0, 0.0, 1.0]) {
        return Err("standard f3 configuration drifted from coefficients (0, 0, 1)".into());
    }
    let out = train_benchmark(Benchmark::F3, &cfg).map_err(|e| format!("fit failed: {e}"))?;
    let train = Benchmark::F3.train_dataset().map_err(|e| e.to_string())?;
    let val = Benchmark::F3.val_dataset().map_err(|e| e.to_string())?;
    let base = baseline_fit(&train, &val, 40, &Benchmark::F3.domain(), false)
        .map_err(|e| format!("baseline failed: {e}"))?;
    let detail = format!(
        "learned rmse {:.3e} (≤ 2.82e-3); d40 rmse {:.3e} (9.16e-4 ±20%), mae {:.3e} (2.65e-3 ±20%)",
        out.report.rmse, base.report.rmse, base.report.mae
    );
    let ok = out.report.rmse <= 2.82e-3
        && band(base.report.rmse, 9.16e-4)
        && band(base.report.mae, 2.65e-3);
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Criterion 7 — the 2D target: the induced degree-2 fit (6 basis
/// functions) reaches validation RMSE ≤ 9.3e-4 and MAE ≤ 3.3e-3, at
/// least 10× below the degree-13 direct baseline (105 functions), whose
/// RMSE must land in [8.0e-3, 2.76e-2] and MAE in [6.0e-2, 0.1956].
fn f4_experiment() -> Result<String, String> {
    let out = train_benchmark(Benchmark::F4, &default_config(Benchmark::F4))
        .map_err(|e| format!("fit failed: {e}"))?;
    if out.report.n_basis != 6 {
        return Err(format!("induced fit has {} basis functions, not 6", out.report.n_basis));
    }
    let train = Benchmark::F4.train_dataset().map_err(|e| e.to_string())?;
    let val = Benchmark::F4.val_dataset().map_err(|e| e.to_string())?;
    let base = baseline_fit(&train, &val, 13, &Benchmark::F4.domain(), false)
        .map_err(|e| format!("baseline failed: {e}"))?;
    if base.report.n_basis != 105 {
        return Err(format!("baseline has {} basis functions, not 105", base.report.n_basis));
    }
    let ratio = base.report.rmse / out.report.rmse;
    let detail = format!(
        "induced rmse {:.3e} (≤ 9.3e-4), mae {:.3e} (≤ 3.3e-3); d13 rmse {:.3e} (∈ [8.0e-3, 2.76e-2]), mae {:.3e} (∈ [6.0e-2, 0.1956]); ratio {ratio:.0}× (≥ 10×)",
        out.report.rmse, out.report.mae, base.report.rmse, base.report.mae
    );
    let ok = out.report.rmse <= 9.3e-4
        && out.report.mae <= 3.3e-3
        && (8.0e-3..=2.76e-2).contains(&base.report.rmse)
        && (6.0e-2..=0.1956).contains(&base.report.mae)
        && ratio >= 10.0;
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Criterion 8 — the synthetic PES: the degree-4 fit in learned
/// variables (35 functions) beats the direct degree-4 fit in the raw
/// coordinates (35 functions) by at least 5× in validation RMSE, and an
/// exact quartic fit in the true Morse variables has residual ≤ 1e-8
/// (the surface is quartic there by construction). The direct degree-18
/// fit (1330 functions) is reported for context: the synthetic surface
/// is analytic, so unlike a measured surface it is resolvable by a
/// high-degree direct polynomial. Everything within 20 CPU-minutes.
fn pes_experiment() -> Result<String, String> {
    let t0 = Instant::now();
    let out = train_benchmark(Benchmark::Pes, &default_config(Benchmark::Pes))
        .map_err(|e| format!("fit failed: {e}"))?;
    if out.report.n_basis != 35 {
        return Err(format!("learned fit has {} basis functions, not 35", out.report.n_basis));
    }
    let train = Benchmark::Pes.train_dataset().map_err(|e| e.to_string())?;
    let val = Benchmark::Pes.val_dataset().map_err(|e| e.to_string())?;
    let domain = Benchmark::Pes.domain();
    let direct4 = baseline_fit(&train, &val, 4, &domain, false)
        .map_err(|e| format!("degree-4 baseline failed: {e}"))?;
    let ratio = direct4.report.rmse / out.report.rmse;

    // Sanity anchor: in the true Morse variables the surface is exactly
    // quartic, so a direct quartic fit there is floating-point noise.
    let pes = default_pes_config();
    let indices = total_degree_indices(3, 4);
    let to_y = |x: &DMatrix<f64>| {
        DMatrix::from_fn(x.nrows(), 3, |i, k| {
            morse_variables(pes, &[x[(i, 0)], x[(i, 1)], x[(i, 2)]])[k]
        })
    };
    let a_train = design_matrix_from_values(&to_y(&train.x), &indices);
    let (coeffs, _) = varpro_coeffs(&a_train, &train.y).map_err(|e| format!("anchor solve failed: {e}"))?;
    let anchor_pred = design_matrix_from_values(&to_y(&val.x), &indices) * &coeffs;
    let anchor = metrics(&anchor_pred, &val.y);

    // Context: the expressive direct fit.
    let direct18 = baseline_fit(&train, &val, 18, &domain, false)
        .map_err(|e| format!("degree-18 baseline failed: {e}"))?;

    let dt = t0.elapsed().as_secs_f64();
    let detail = format!(
        "learned d4 rmse {:.3e} vs direct d4 rmse {:.3e}: {ratio:.0}× (≥ 5×); Morse-variable anchor rmse {:.3e} (≤ 1e-8); direct d18 rmse {:.3e} (context); {dt:.0}s",
        out.report.rmse, direct4.report.rmse, anchor.rmse, direct18.report.rmse
    );
    if ratio >= 5.0 && anchor.rmse <= 1e-8 && dt <= 1200.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Criterion 9 — network properties: forward/inverse roundtrip within
/// 1e-6 on 500 probes in 1, 2, and 3 dimensions; strict monotonicity of
/// the 1D map on a 1000-point sorted grid; analytic parameter gradients
/// match central finite differences to relative 1e-4 on a small net.
fn network_properties() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(99);

    let mut worst_roundtrip = 0.0f64;
    for d in [1usize, 2, 3] {
        let mut net = Net::new(d, 6, 8, &mut rng);
        net.set_domain(&vec![-2.0; d], &vec![3.0; d]).map_err(|e| e.to_string())?;
        net.normalize(20);
        let x = DMatrix::from_fn(500, d, |_, _| rng.gen_range(-2.0..3.0));
        let y = net.forward(&x);
        let back = net.inverse(&y, 1e-8).map_err(|e| format!("inverse failed in {d}D: {e}"))?;
        worst_roundtrip = worst_roundtrip.max((&x - &back).abs().max());
    }
    if worst_roundtrip > 1e-6 {
        return Err(format!("roundtrip error {worst_roundtrip:.3e} > 1e-6"));
    }

    let mut net1 = Net::new(1, 6, 8, &mut rng);
    net1.set_domain(&[-4.0], &[4.0]).map_err(|e| e.to_string())?;
    net1.normalize(20);
    let grid = DMatrix::from_fn(1000, 1, |i, _| -4.0 + 8.0 * i as f64 / 999.0);
    let h = net1.forward(&grid);
    if !(1..1000).all(|i| h[(i, 0)] > h[(i - 1, 0)]) {
        return Err("1D map is not strictly increasing on a sorted grid".into());
    }

    // Gradient check on a small net: L = ½‖h(x)‖² so dL/dh = h.
    let mut net = Net::new(2, 2, 4, &mut rng);
    net.set_domain(&[-1.0, -1.0], &[1.0, 1.0]).map_err(|e| e.to_string())?;
    net.normalize(20);
    let x = DMatrix::from_fn(20, 2, |_, _| rng.gen_range(-1.0..1.0));
    let loss = |net: &Net| -> f64 { 0.5 * net.forward(&x).iter().map(|v| v * v).sum::<f64>() };
    let mut cache = Vec::new();
    let q = net.forward_cached(&x, &mut cache);
    let analytic = net.flatten_grads(&net.backward(&cache, &q));
    let mut params = net.flatten_params();
    let mut worst_grad = 0.0f64;
    let eps = 1e-6;
    for k in 0..params.len() {
        let saved = params[k];
        params[k] = saved + eps;
        net.unflatten_params(&params);
        let up = loss(&net);
        params[k] = saved - eps;
        net.unflatten_params(&params);
        let down = loss(&net);
        params[k] = saved;
        net.unflatten_params(&params);
        let fd = (up - down) / (2.0 * eps);
        let scale = analytic[k].abs().max(fd.abs());
        if scale > 1e-7 {
            worst_grad = worst_grad.max((analytic[k] - fd).abs() / scale);
        }
    }
    if worst_grad > 1e-4 {
        return Err(format!("gradient mismatch {worst_grad:.3e} > 1e-4"));
    }

    Ok(format!(
        "roundtrip {worst_roundtrip:.3e}, 1D strictly monotone, gradient mismatch {worst_grad:.3e}"
    ))
}

/// Criterion 10 — determinism: repeating a seeded learned run and a
/// seeded baseline reproduces every reported metric to 1e-12.
fn determinism() -> Result<String, String> {
    let cfg = FitConfig {
        steps: 1500,
        seed: 5,
        schedule: Schedule::Cosine,
        ..FitConfig::new(2)
    };
    let run = || -> Result<FitOutcome, String> {
        train_benchmark(Benchmark::F3, &cfg).map_err(|e| format!("fit failed: {e}"))
    };
    let a = run()?;
    let b = run()?;
    let fields = |o: &FitOutcome| {
        [
            o.report.rmse,
            o.report.mae,
            o.report.mre,
            o.report.sup_error,
        ]
    };
    let mut worst = 0.0f64;
    for (va, vb) in fields(&a).iter().zip(fields(&b)) {
        worst = worst.max((va - vb).abs());
    }
    let ca: DVector<f64> = a.coeffs.clone();
    let cb: DVector<f64> = b.coeffs.clone();
    worst = worst.max((ca - cb).abs().max());

    let train = Benchmark::F3.train_dataset().map_err(|e| e.to_string())?;
    let val = Benchmark::F3.val_dataset().map_err(|e| e.to_string())?;
    let base_a = baseline_fit(&train, &val, 40, &Benchmark::F3.domain(), false)
        .map_err(|e| e.to_string())?;
    let base_b = baseline_fit(&train, &val, 40, &Benchmark::F3.domain(), false)
        .map_err(|e| e.to_string())?;
    worst = worst.max((base_a.report.rmse - base_b.report.rmse).abs());

    if worst > 1e-12 {
        return Err(format!("metric drift {worst:.3e} > 1e-12 between identical runs"));
    }
    Ok(format!("repeated learned and baseline runs agree (drift {worst:.1e})"))
}
