//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any hard criterion fails. Criterion 7 is advisory: a
//! violation prints WARN and does not fail the run.

mod common;

use std::path::Path;
use std::time::Instant;

use common::{jacobi_svd, rng, uniform};
use ctsvd::completion::{admm_complete, ObservationMask, SamplingPattern, SolverConfig};
use ctsvd::io::load;
use ctsvd::metrics::{ergas, psnr, sam, ssim_global};
use ctsvd::structured::{
    bdiag, bh, bt, btph, shift, shift_decompose, stride_permutation, verify_diagonalization,
};
use ctsvd::svt::svt;
use ctsvd::transform::{dct_matrix, dft_matrix};
use ctsvd::tsvd::{is_f_diagonal, is_orthogonal, t_svd, t_svd_timed, StageTimes};
use ctsvd::{bench, Tensor3, TransformKind, TubeTransform};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

enum Outcome {
    Pass(String),
    Fail(String),
    Warn(String),
}

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn m(rows: usize, v: &[f64]) -> DMatrix<f64> {
    DMatrix::from_row_slice(rows, v.len() / rows, v)
}

fn dev(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax()
}

fn criterion_1() -> Check {
    let x = Tensor3::from_vec([2, 2, 2], vec![1., 2., 3., 4., 5., 6., 7., 8.]).unwrap();
    let a = shift_decompose(&x).a;
    let mut worst = 0.0_f64;
    let mut check = |name: &str, got: &DMatrix<f64>, want: DMatrix<f64>| -> Result<(), String> {
        let d = dev(got, &want);
        worst = worst.max(d);
        ensure(d < 1e-10, format!("{name} deviates by {d:e}"))
    };
    check(
        "A(:,:,1)",
        &a.frontal_slice(0).unwrap(),
        m(2, &[-4., -4., -4., -4.]),
    )?;
    check(
        "A(:,:,2)",
        &a.frontal_slice(1).unwrap(),
        m(2, &[5., 6., 7., 8.]),
    )?;
    check(
        "shift(A)(:,:,1)",
        &shift(&a).frontal_slice(0).unwrap(),
        m(2, &[5., 6., 7., 8.]),
    )?;
    check(
        "bt(A)",
        &bt(&a),
        m(
            4,
            &[
                -4., -4., 5., 6., -4., -4., 7., 8., 5., 6., -4., -4., 7., 8., -4., -4.,
            ],
        ),
    )?;
    check(
        "bh(A)",
        &bh(&a),
        m(
            4,
            &[
                5., 6., 0., 0., 7., 8., 0., 0., 0., 0., 5., 6., 0., 0., 7., 8.,
            ],
        ),
    )?;
    check(
        "btph(A)",
        &btph(&a),
        m(
            4,
            &[
                1., 2., 5., 6., 3., 4., 7., 8., 5., 6., 1., 2., 7., 8., 3., 4.,
            ],
        ),
    )?;
    let p = stride_permutation(2, 2);
    check(
        "P",
        &p,
        m(
            4,
            &[
                1., 0., 0., 0., 0., 0., 1., 0., 0., 1., 0., 0., 0., 0., 0., 1.,
            ],
        ),
    )?;
    check(
        "P btph(A) P",
        &(&p * btph(&a) * &p),
        m(
            4,
            &[
                1., 5., 2., 6., 5., 1., 6., 2., 3., 7., 4., 8., 7., 3., 8., 4.,
            ],
        ),
    )?;
    let xbar = TubeTransform::new(TransformKind::DctDiag, 2)
        .unwrap()
        .forward_real(&x)
        .unwrap();
    check(
        "bdiag",
        &bdiag(&xbar),
        m(
            4,
            &[
                6., 8., 0., 0., 10., 12., 0., 0., 0., 0., -4., -4., 0., 0., -4., -4.,
            ],
        ),
    )?;
    let r = verify_diagonalization(&x).map_err(|e| e.to_string())?;
    ensure(
        r.max() < 1e-10,
        format!("diagonalization residual {:e}", r.max()),
    )?;
    worst = worst.max(r.max());
    Ok(format!(
        "all 2x2x2 worked-example matrices reproduced, max deviation {worst:.1e}"
    ))
}

fn criterion_2() -> Check {
    let start = Instant::now();
    let mut r = rng(2002);
    let mut worst = 0.0_f64;
    for _ in 0..50 {
        let (m1, m2, m3) = (
            r.random_range(1..=4),
            r.random_range(1..=4),
            r.random_range(1..=8),
        );
        let x = uniform(&mut r, m1, m2, m3);
        let res = verify_diagonalization(&x).map_err(|e| e.to_string())?;
        worst = worst.max(res.max());
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(worst < 1e-10, format!("max residual {worst:e}"))?;
    ensure(secs < 10.0, format!("took {secs:.2} s"))?;
    Ok(format!("50 tensors, max residual {worst:.1e}, {secs:.2} s"))
}

fn criterion_3() -> Check {
    let mut r = rng(3003);
    let mut worst = 0.0_f64;
    let mut cases = 0;
    for &(m1, m2, m3) in &[
        (16, 16, 8),
        (16, 9, 8),
        (5, 12, 7),
        (3, 3, 2),
        (8, 16, 5),
        (1, 4, 6),
    ] {
        let x = uniform(&mut r, m1, m2, m3);
        for kind in [TransformKind::DctOrtho, TransformKind::Dft] {
            let t = TubeTransform::new(kind, m3).unwrap();
            let f = t_svd(&x, &t).map_err(|e| e.to_string())?;
            let err = f.reconstruct().unwrap().max_abs_diff(&x);
            worst = worst.max(err);
            ensure(
                err < 1e-10,
                format!("{kind} {m1}x{m2}x{m3}: reconstruction {err:e}"),
            )?;
            ensure(
                is_orthogonal(&f.u, &t, 1e-10).unwrap(),
                format!("{kind}: U not orthogonal"),
            )?;
            ensure(
                is_orthogonal(&f.v, &t, 1e-10).unwrap(),
                format!("{kind}: V not orthogonal"),
            )?;
            ensure(
                is_f_diagonal(&f.s, &t, 1e-10).unwrap(),
                format!("{kind}: S not f-diagonal"),
            )?;
            cases += 1;
        }
    }
    let mut single = 0.0_f64;
    for &(m1, m2) in &[(16, 16), (16, 7), (4, 11), (1, 1)] {
        let x = uniform(&mut r, m1, m2, 1);
        let a = x.frontal_slice(0).unwrap();
        let (_, s_ref, _) = jacobi_svd(&a);
        for kind in [TransformKind::DctOrtho, TransformKind::Dft] {
            let t = TubeTransform::new(kind, 1).unwrap();
            let f = t_svd(&x, &t).map_err(|e| e.to_string())?;
            let s = f.singular_values().unwrap();
            for (got, want) in s[0].iter().zip(&s_ref) {
                single = single.max((got - want).abs());
            }
            let u = f.u.frontal_slice(0).unwrap();
            let v = f.v.frontal_slice(0).unwrap();
            single = single.max(dev(
                &(u * f.s.frontal_slice(0).unwrap() * v.transpose()),
                &a,
            ));
        }
    }
    ensure(
        single < 1e-12,
        format!("m3 = 1 deviation from Jacobi SVD {single:e}"),
    )?;
    Ok(format!(
        "{cases} factorizations, max reconstruction error {worst:.1e}; m3 = 1 vs Jacobi {single:.1e}"
    ))
}

/// Max violation of `z - y in tau * d|.|(y)` coordinatewise on complex scalars.
fn subgradient_residual(z: &[Complex64], y: &[Complex64], tau: f64) -> f64 {
    z.iter()
        .zip(y)
        .map(|(z, y)| {
            let g = z - y;
            if y.norm() > 1e-12 {
                (g - y / y.norm() * tau).norm()
            } else {
                (g.norm() - tau).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}

fn criterion_4() -> Check {
    let mut r = rng(4004);
    let mut worst_sub = 0.0_f64;
    for n in 1..=12 {
        let z = uniform(&mut r, 1, 1, n).map(|v| 3.0 * v);
        let tau = r.random_range(0.1..2.0);
        // DCT: transform-domain entries are soft-thresholded reals.
        let c = dct_matrix(n).unwrap();
        let y = svt(
            &z,
            tau,
            &TubeTransform::new(TransformKind::DctOrtho, n).unwrap(),
        )
        .unwrap()
        .y;
        let zc = &c * nalgebra::DVector::from_column_slice(z.data());
        let yc = &c * nalgebra::DVector::from_column_slice(y.data());
        let zc: Vec<Complex64> = zc.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let yc: Vec<Complex64> = yc.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        worst_sub = worst_sub.max(subgradient_residual(&zc, &yc, tau));
        // DFT: each Fourier coefficient is shrunk toward zero by tau.
        let f = dft_matrix(n, false).unwrap();
        let y = svt(&z, tau, &TubeTransform::new(TransformKind::Dft, n).unwrap())
            .unwrap()
            .y;
        let lift = |x: &Tensor3| {
            nalgebra::DVector::from_iterator(n, x.data().iter().map(|&v| Complex64::new(v, 0.0)))
        };
        let zf: Vec<Complex64> = (&f * lift(&z)).iter().copied().collect();
        let yf: Vec<Complex64> = (&f * lift(&y)).iter().copied().collect();
        worst_sub = worst_sub.max(subgradient_residual(&zf, &yf, tau));
    }
    ensure(
        worst_sub < 1e-8,
        format!("subgradient residual {worst_sub:e}"),
    )?;

    let mut worst_ratio = 0.0_f64;
    for _ in 0..100 {
        let (m1, m2, m3) = (
            r.random_range(1..=5),
            r.random_range(1..=5),
            r.random_range(1..=8),
        );
        let a = uniform(&mut r, m1, m2, m3);
        let b = uniform(&mut r, m1, m2, m3);
        let tau = r.random_range(0.01..1.5);
        for kind in [TransformKind::DctOrtho, TransformKind::Dft] {
            let t = TubeTransform::new(kind, m3).unwrap();
            let d = (&svt(&a, tau, &t).unwrap().y - &svt(&b, tau, &t).unwrap().y).frobenius_norm();
            worst_ratio = worst_ratio.max(d / (&a - &b).frobenius_norm());
        }
    }
    ensure(
        worst_ratio <= 1.0 + 1e-12,
        format!("expansion ratio {worst_ratio}"),
    )?;
    Ok(format!(
        "subgradient residual {worst_sub:.1e}; 100 pairs, max ||prox(a)-prox(b)||/||a-b|| = {worst_ratio:.4}"
    ))
}

fn fixture(name: &str) -> Tensor3 {
    load(
        Path::new(env!("CARGO_MANIFEST_DIR"))
            .join("tests/fixtures")
            .join(name),
    )
    .unwrap_or_else(|e| panic!("fixture {name}: {e}"))
}

fn criterion_5() -> Check {
    let truth = fixture("rank1_truth.t3f");
    let pattern =
        SamplingPattern::from_tensor(&fixture("rank1_mask.t3f")).map_err(|e| e.to_string())?;
    let oracle = fixture("rank1_oracle_recovered.t3f");
    let meta: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(
            Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/rank1_oracle.json"),
        )
        .unwrap(),
    )
    .unwrap();
    ensure(truth.dims() == [16, 16, 8], "fixture is not 16x16x8")?;
    let sr = pattern.sampling_rate();
    ensure(
        (sr - 0.6).abs() < 1e-3,
        format!("fixture sampling rate {sr}"),
    )?;

    let mask = ObservationMask::observe(pattern, &truth).map_err(|e| e.to_string())?;
    let cfg = SolverConfig::experiment();
    let start = Instant::now();
    let (x, state) = admm_complete(&mask, &cfg).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();

    let rel = (&x - &truth).frobenius_norm() / truth.frobenius_norm();
    let feasible = state.history.iter().all(|r| r.feasibility_residual == 0.0);
    let primal = state.primal_residual();
    let vs_oracle = (&x - &oracle).frobenius_norm() / oracle.frobenius_norm();
    let oracle_iters = meta["iterations"].as_u64().unwrap() as i64;
    let iter_gap = (state.iteration as i64 - oracle_iters).abs();

    ensure(rel < 1e-2, format!("relative error {rel:e}"))?;
    ensure(
        state.iteration <= 500 && !state.hit_max_iters,
        format!("{} iterations", state.iteration),
    )?;
    ensure(feasible, "feasibility residual nonzero after some step")?;
    ensure(primal < 1e-3, format!("primal residual {primal:e}"))?;
    ensure(secs < 30.0, format!("took {secs:.1} s"))?;
    ensure(
        vs_oracle < 1e-6,
        format!("differs from scripted oracle by {vs_oracle:e}"),
    )?;
    ensure(
        iter_gap <= 2,
        format!("{} iterations vs oracle {oracle_iters}", state.iteration),
    )?;
    Ok(format!(
        "rel. error {rel:.1e}, {} iterations (oracle {oracle_iters}), primal residual {primal:.1e}, \
         feasibility exactly 0, vs oracle {vs_oracle:.1e}, {secs:.2} s",
        state.iteration
    ))
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

fn criterion_6() -> Check {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    pool.install(|| {
        let x = bench::random_tensor([100, 100, 100], 6006);
        let dft = TubeTransform::new(TransformKind::Dft, 100).unwrap();
        let dct = TubeTransform::new(TransformKind::DctOrtho, 100).unwrap();
        t_svd_timed(&x, &dft).map_err(|e| e.to_string())?;
        t_svd_timed(&x, &dct).map_err(|e| e.to_string())?;
        let (mut fd, mut cd): (Vec<StageTimes>, Vec<StageTimes>) = (Vec::new(), Vec::new());
        for _ in 0..5 {
            fd.push(t_svd_timed(&x, &dft).map_err(|e| e.to_string())?.1);
            cd.push(t_svd_timed(&x, &dct).map_err(|e| e.to_string())?.1);
        }
        let svd_f = median(fd.iter().map(|t| t.svd).collect());
        let svd_c = median(cd.iter().map(|t| t.svd).collect());
        let tot_f = median(fd.iter().map(|t| t.total).collect());
        let tot_c = median(cd.iter().map(|t| t.total).collect());
        let (rs, rt) = (svd_c / svd_f, tot_c / tot_f);
        let detail = format!(
            "SVD stage {svd_c:.3}/{svd_f:.3} s = {rs:.3}, total {tot_c:.3}/{tot_f:.3} s = {rt:.3} (single thread, median of 5)"
        );
        ensure(rs <= 0.75 && rt <= 0.75, detail.clone())?;
        Ok(detail)
    })
}

fn criterion_7() -> Result<String, String> {
    let cmp = bench::smooth_tube_comparison([24, 24, 16], 0.1, 7007).map_err(|e| e.to_string())?;
    let (c, f) = (&cmp.results[0], &cmp.results[1]);
    let detail = format!(
        "24x24x16 smooth tubes at SR 0.1: mean PSNR DCT {:.2} dB vs DFT {:.2} dB (SSIM {:.3} vs {:.3}; {} / {} iterations)",
        c.psnr_mean, f.psnr_mean, c.ssim_mean, f.ssim_mean, c.iterations, f.iterations
    );
    if cmp.dct_not_worse {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn direct_psnr(r: &[f64], e: &[f64], peak: f64) -> f64 {
    let mut sse = 0.0;
    for i in 0..r.len() {
        sse += (e[i] - r[i]).powi(2);
    }
    10.0 * (r.len() as f64 * peak * peak / sse).log10()
}

fn direct_ssim(x: &[f64], y: &[f64], l: f64) -> f64 {
    let n = x.len() as f64;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / n;
    let (mx, my) = (mean(x), mean(y));
    let var = |v: &[f64], mu: f64| v.iter().map(|a| (a - mu).powi(2)).sum::<f64>() / n;
    let cov = x
        .iter()
        .zip(y)
        .map(|(a, b)| (a - mx) * (b - my))
        .sum::<f64>()
        / n;
    let (c1, c2) = ((0.01 * l).powi(2), (0.03 * l).powi(2));
    (2.0 * mx * my + c1) * (2.0 * cov + c2)
        / ((mx * mx + my * my + c1) * (var(x, mx) + var(y, my) + c2))
}

fn direct_sam(r: &Tensor3, e: &Tensor3) -> f64 {
    let [m1, m2, _] = r.dims();
    let mut total = 0.0;
    for i in 0..m1 {
        for j in 0..m2 {
            let (a, b) = (r.tube(i, j).unwrap(), e.tube(i, j).unwrap());
            let dot: f64 = a.iter().zip(&b).map(|(p, q)| p * q).sum();
            let na = a.iter().map(|p| p * p).sum::<f64>().sqrt();
            let nb = b.iter().map(|p| p * p).sum::<f64>().sqrt();
            total += (dot / (na * nb)).acos();
        }
    }
    total / (m1 * m2) as f64
}

fn direct_ergas(r: &Tensor3, e: &Tensor3, ratio: f64) -> f64 {
    let [m1, m2, m3] = r.dims();
    let mut acc = 0.0;
    for k in 0..m3 {
        let (mut mse, mut mu) = (0.0, 0.0);
        for i in 0..m1 {
            for j in 0..m2 {
                mse += (r.get(i, j, k) - e.get(i, j, k)).powi(2);
                mu += r.get(i, j, k);
            }
        }
        let n = (m1 * m2) as f64;
        acc += (mse / n) / (mu / n).powi(2);
    }
    100.0 * ratio * (acc / m3 as f64).sqrt()
}

fn criterion_8() -> Check {
    let mut r = rng(8008);
    let mut worst = 0.0_f64;
    for _ in 0..20 {
        let reference = uniform(&mut r, 8, 8, 4).map(|v| 100.0 + 80.0 * v);
        let estimate = &reference + &uniform(&mut r, 8, 8, 4).map(|v| 20.0 * v);
        for k in 0..4 {
            let (a, b) = (reference.slice_data(k), estimate.slice_data(k));
            let peak = a.iter().copied().fold(f64::MIN, f64::max);
            let got = psnr(a, b, peak).unwrap();
            worst = worst.max((got - direct_psnr(a, b, peak)).abs());
            let got = ssim_global(a, b, 255.0).unwrap();
            worst = worst.max((got - direct_ssim(a, b, 255.0)).abs());
        }
        worst = worst
            .max((sam(&reference, &estimate).unwrap() - direct_sam(&reference, &estimate)).abs());
        for ratio in [1.0, 0.25] {
            let got = ergas(&reference, &estimate, ratio).unwrap().value;
            worst = worst.max((got - direct_ergas(&reference, &estimate, ratio)).abs());
        }
    }
    ensure(worst < 1e-10, format!("max deviation {worst:e}"))?;
    Ok(format!(
        "20 random 8x8x4 pairs, max deviation from direct formulas {worst:.1e}"
    ))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("1 2x2x2 golden matrices", || hard(criterion_1())),
        ("2 Block diagonalization residuals", || hard(criterion_2())),
        ("3 t-SVD factorization", || hard(criterion_3())),
        ("4 Prox correctness", || hard(criterion_4())),
        (
            "5 ADMM completion of rank-1 fixture",
            || hard(criterion_5()),
        ),
        ("6 DCT vs DFT t-SVD timing", || hard(criterion_6())),
        (
            "7 Smooth-tube completion PSNR (advisory)",
            || match criterion_7() {
                Ok(s) => Outcome::Pass(s),
                Err(s) => Outcome::Warn(s),
            },
        ),
        ("8 Metric formula oracles", || hard(criterion_8())),
    ];
    let filter: Option<String> = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let mut failed = 0;
    for (name, run) in criteria {
        if filter.as_deref().is_some_and(|f| !name.contains(f)) {
            continue;
        }
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Outcome::Fail(format!("panicked: {msg}"))
        });
        match outcome {
            Outcome::Pass(d) => println!("PASS  criterion {name}: {d}"),
            Outcome::Warn(d) => println!("WARN  criterion {name}: {d}"),
            Outcome::Fail(d) => {
                failed += 1;
                println!("FAIL  criterion {name}: {d}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}

fn hard(c: Check) -> Outcome {
    match c {
        Ok(s) => Outcome::Pass(s),
        Err(s) => Outcome::Fail(s),
    }
}
