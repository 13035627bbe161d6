//! Scratch harness for timing and hyperparameter sweeps.
//!
//! Usage: `cargo run --release -p homeofit --example tune -- mode=learned target=f1 steps=1000 seed=0`

use std::collections::HashMap;
use std::env;
use std::time::Instant;

use nalgebra::DMatrix;
use homeofit::fit::{
    baseline_fit, default_config, metrics, train_benchmark, varpro_coeffs, Schedule,
};
use homeofit::linalg::lstsq;
use homeofit::poly::{design_matrix_from_values, total_degree_indices, FIT_RCOND};
use homeofit::targets::{default_pes_config, morse_variables, Benchmark};

fn main() {
    let args: HashMap<String, String> = env::args()
        .skip(1)
        .filter_map(|a| {
            a.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
        })
        .collect();
    let mode = args.get("mode").map(String::as_str).unwrap_or("learned").to_string();
    let target = args.get("target").map(String::as_str).unwrap_or("f1").to_string();
    let b = Benchmark::from_name(&target).expect("target");

    match mode.as_str() {
        "learned" => {
            let mut cfg = default_config(b);
            if let Some(v) = args.get("steps") {
                cfg.steps = v.parse().unwrap();
            }
            if let Some(v) = args.get("seed") {
                cfg.seed = v.parse().unwrap();
            }
            if let Some(v) = args.get("beta") {
                cfg.beta_init = v.parse().unwrap();
            }
            if let Some(v) = args.get("degree") {
                cfg.degree = v.parse().unwrap();
                cfg.fixed_coeffs = None;
            }
            if let Some(v) = args.get("plateau") {
                let f: f64 = v.parse().unwrap();
                cfg.schedule = if f <= 0.0 {
                    Schedule::Cosine
                } else {
                    Schedule::PlateauCosine { plateau_frac: f }
                };
            }
            if let Some(v) = args.get("lr0") {
                cfg.lr0 = v.parse().unwrap();
            }
            if let Some(v) = args.get("lr1") {
                cfg.lr1 = v.parse().unwrap();
            }
            if let Some(v) = args.get("sub") {
                cfg.val_subsample = v.parse().unwrap();
            }
            let t0 = Instant::now();
            let out = train_benchmark(b, &cfg).expect("train");
            let dt = t0.elapsed().as_secs_f64();
            println!(
                "target={target} seed={} steps={} beta={} rmse={:.6e} mae={:.6e} mre={:.6e} wall={:.1}s",
                cfg.seed, cfg.steps, cfg.beta_init, out.report.rmse, out.report.mae, out.report.mre, dt
            );
            if b == Benchmark::F1 {
                // Compare the learned map against sign(x)·sqrt(f1(x) − 2)
                // (up to the reflection symmetry of p(y) = 2 + y²).
                let n = 5001;
                let mut sup_pos = 0.0f64;
                let mut sup_neg = 0.0f64;
                let xs = DMatrix::from_fn(n, 1, |i, _| -10.0 + 20.0 * i as f64 / (n - 1) as f64);
                let h = out.net.forward(&xs);
                for i in 0..n {
                    let x = xs[(i, 0)];
                    let hstar = 2.0 * (x / 2.0).sinh();
                    sup_pos = sup_pos.max((h[(i, 0)] - hstar).abs());
                    sup_neg = sup_neg.max((h[(i, 0)] + hstar).abs());
                }
                println!("  hsup={:.4e} (orientation ±: {:.4e} / {:.4e})", sup_pos.min(sup_neg), sup_pos, sup_neg);
            }
            if let Some(trace) = args.get("trace") {
                if trace == "1" {
                    for (s, v) in &out.history {
                        println!("  step={s} best={v:.6e}");
                    }
                }
            }
        }
        "baseline" => {
            let degree: usize = args.get("degree").expect("degree").parse().unwrap();
            let train = b.train_dataset().expect("train");
            let val = b.val_dataset().expect("val");
            let t0 = Instant::now();
            let out = baseline_fit(&train, &val, degree, &b.domain(), false).expect("fit");
            println!(
                "baseline target={target} degree={degree} n_basis={} rmse={:.6e} mae={:.6e} mre={:.6e} rank_deficient={} wall={:.1}s",
                out.report.n_basis,
                out.report.rmse,
                out.report.mae,
                out.report.mre,
                out.report.rank_deficient,
                t0.elapsed().as_secs_f64()
            );
        }
        "anchor" => {
            // Direct least squares in the true Morse variables: the
            // surface is exactly quartic there, so the residual is pure
            // floating-point noise.
            let pes = default_pes_config();
            let train = Benchmark::Pes.train_dataset().expect("train");
            let val = Benchmark::Pes.val_dataset().expect("val");
            let indices = total_degree_indices(3, 4);
            let to_y = |x: &DMatrix<f64>| {
                DMatrix::from_fn(x.nrows(), 3, |i, k| {
                    let row = [x[(i, 0)], x[(i, 1)], x[(i, 2)]];
                    morse_variables(pes, &row)[k]
                })
            };
            let a_train = design_matrix_from_values(&to_y(&train.x), &indices);
            let (coeffs, deficient) = varpro_coeffs(&a_train, &train.y).expect("solve");
            let a_val = design_matrix_from_values(&to_y(&val.x), &indices);
            let pred = a_val * &coeffs;
            let m = metrics(&pred, &val.y);
            let mean_abs_y = val.y.iter().map(|v| v.abs()).sum::<f64>() / val.y.len() as f64;
            println!(
                "anchor rmse={:.6e} mae={:.6e} rank_deficient={deficient} rel_rmse={:.6e} (mean|y|={:.3e})",
                m.rmse,
                m.mae,
                m.rmse / mean_abs_y,
                mean_abs_y
            );
            // Same solve through the plain SVD path for comparison.
            let fit = lstsq(&a_train, &train.y, FIT_RCOND).expect("lstsq");
            let pred2 = design_matrix_from_values(&to_y(&val.x), &indices) * &fit.solution;
            let m2 = metrics(&pred2, &val.y);
            println!("anchor(svd) rmse={:.6e} mae={:.6e} rank={}", m2.rmse, m2.mae, fit.effective_rank);
        }
        "time" => {
            let steps: usize = args
                .get("steps")
                .map(|v| v.parse().unwrap())
                .unwrap_or(200);
            let mut cfg = default_config(b);
            cfg.steps = steps;
            cfg.schedule = Schedule::Cosine;
            let t0 = Instant::now();
            let out = train_benchmark(b, &cfg).expect("train");
            let dt = t0.elapsed().as_secs_f64();
            println!(
                "target={target} steps={steps} wall={:.2}s per_step={:.3}ms rmse={:.4e}",
                dt,
                1e3 * dt / steps as f64,
                out.report.rmse
            );
        }
        "floor" => {
            // Degree-capped fits for the minimal-degree floor.
            let degree: usize = args.get("degree").expect("degree").parse().unwrap();
            let steps: usize = args.get("steps").map(|v| v.parse().unwrap()).unwrap_or(2000);
            let mut cfg = default_config(b);
            cfg.degree = degree;
            cfg.fixed_coeffs = None;
            cfg.steps = steps;
            cfg.schedule = Schedule::Cosine;
            let out = train_benchmark(b, &cfg).expect("train");
            println!(
                "floor target={target} degree={degree} sup={:.6e}",
                out.report.sup_error
            );
        }
        "pes-direct" => {
            // Direct polynomial fit in the raw coordinates at a given degree.
            let degree: usize = args.get("degree").expect("degree").parse().unwrap();
            let train = Benchmark::Pes.train_dataset().expect("train");
            let val = Benchmark::Pes.val_dataset().expect("val");
            let t0 = Instant::now();
            let out = baseline_fit(&train, &val, degree, &Benchmark::Pes.domain(), false).expect("fit");
            println!(
                "pes-direct degree={degree} n_basis={} rmse={:.6e} mae={:.6e} rank_deficient={} wall={:.1}s",
                out.report.n_basis,
                out.report.rmse,
                out.report.mae,
                out.report.rank_deficient,
                t0.elapsed().as_secs_f64()
            );
        }
        "prof" => {
            let cfg = default_config(b);
            let train = b.train_dataset().expect("train");
            let val = b.val_dataset().expect("val");
            let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(0);
            let mut net = homeofit::invnet::Net::new(b.dim(), cfg.n_blocks, cfg.width, &mut rng);
            let lo: Vec<f64> = b.domain().iter().map(|d| d.0).collect();
            let hi: Vec<f64> = b.domain().iter().map(|d| d.1).collect();
            net.set_domain(&lo, &hi).unwrap();
            net.normalize(10);
            let indices = total_degree_indices(b.dim(), cfg.degree);
            let reps = args
                .get("reps")
                .map(|v| v.parse().unwrap())
                .unwrap_or(100usize);

            let t = Instant::now();
            for _ in 0..reps {
                let _ = net.forward(&train.x);
            }
            println!("forward(train {} rows): {:.3}ms", train.x.nrows(), 1e3 * t.elapsed().as_secs_f64() / reps as f64);

            let t = Instant::now();
            for _ in 0..reps {
                let _ = net.forward(&val.x);
            }
            println!("forward(val {} rows): {:.3}ms", val.x.nrows(), 1e3 * t.elapsed().as_secs_f64() / reps as f64);

            let mut cache = Vec::new();
            let _ = net.forward_cached(&train.x, &mut cache);
            let t = Instant::now();
            for _ in 0..reps {
                let _ = net.forward_cached(&train.x, &mut cache);
            }
            println!("forward_cached(train): {:.3}ms", 1e3 * t.elapsed().as_secs_f64() / reps as f64);

            let q = net.forward(&train.x);
            let t = Instant::now();
            for _ in 0..reps {
                let _ = design_matrix_from_values(&q, &indices);
            }
            println!("design(train): {:.3}ms", 1e3 * t.elapsed().as_secs_f64() / reps as f64);

            let design = design_matrix_from_values(&q, &indices);
            let t = Instant::now();
            for _ in 0..reps {
                let _ = varpro_coeffs(&design, &train.y).unwrap();
            }
            println!("varpro: {:.3}ms", 1e3 * t.elapsed().as_secs_f64() / reps as f64);

            let (coeffs, _) = varpro_coeffs(&design, &train.y).unwrap();
            let dq = homeofit::poly::design_gradient(&q, &indices, coeffs.as_slice());
            let t = Instant::now();
            for _ in 0..reps {
                let _ = homeofit::poly::design_gradient(&q, &indices, coeffs.as_slice());
            }
            println!("design_gradient: {:.3}ms", 1e3 * t.elapsed().as_secs_f64() / reps as f64);

            let t = Instant::now();
            for _ in 0..reps {
                let _ = net.backward(&cache, &dq);
            }
            println!("backward: {:.3}ms", 1e3 * t.elapsed().as_secs_f64() / reps as f64);

            let t = Instant::now();
            for _ in 0..reps {
                net.normalize(1);
            }
            println!("normalize(1): {:.3}ms", 1e3 * t.elapsed().as_secs_f64() / reps as f64);

            let grads = net.backward(&cache, &dq);
            let t = Instant::now();
            for _ in 0..reps {
                let _ = net.flatten_grads(&grads);
            }
            println!("flatten_grads: {:.3}ms", 1e3 * t.elapsed().as_secs_f64() / reps as f64);
        }
        other => {
            eprintln!("unknown mode {other}");
            std::process::exit(2);
        }
    }
}
