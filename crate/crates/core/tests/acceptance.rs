//! Acceptance suite: one PASS/FAIL line per criterion on stdout, detail
//! tables on stderr. Exits nonzero if any criterion fails.

use std::time::Instant;

use nalgebra::SVD;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tlsq_core::bcirc::{bcirc_oracle, bcirc_product, fold, unfold};
use tlsq_core::experiments::{
    compare_mls, gen_design, gen_response, run_experiment, split_seed, write_report, DesignKind, ExperimentConfig,
    MetricsReport, Mode,
};
use tlsq_core::sampling::{
    compute_distribution, draw_plan, leverage_probs, leverage_scores, opt_probs, uniform_probs, DistributionKind,
    SamplingDistribution,
};
use tlsq_core::solver::{solve_ols, solve_subsampled, solve_subsampled_spatial, TlsProblem};
use tlsq_core::stats::{
    conditional_variance_fo, conditional_variance_lev, conditional_variance_unif, trace_t, unconditional_sandwich,
    unconditional_sandwich_lev, unconditional_sandwich_unif,
};
use tlsq_core::tsvd::{fourier_singular_values, t_pinv, thin_t_svd};
use tlsq_core::{t_product, Result, TubalTensor};

const SEED: u64 = 20240917;

type Verdict = Result<(bool, String)>;

/// Id, name, runtime budget in seconds, check.
type Criterion = (u32, &'static str, f64, fn() -> Verdict);

fn rel(a: &TubalTensor, b: &TubalTensor) -> f64 {
    a.sub(b).unwrap().fro_norm() / b.fro_norm().max(f64::MIN_POSITIVE)
}

fn random_problem(rng: &mut ChaCha8Rng, n: usize, p: usize, l: usize) -> Result<TlsProblem> {
    let x = TubalTensor::random(n, p, l, rng);
    let y = TubalTensor::random(n, 1, l, rng);
    TlsProblem::new(x, y)
}

/// Criterion 1: t-product against `fold(bcirc(X) unfold(Y))`.
fn t_product_oracle() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let (n, p, r, l) = (rng.random_range(1..=6), rng.random_range(1..=6), rng.random_range(1..=6), rng.random_range(1..=8));
        let x = TubalTensor::random(n, p, l, &mut rng);
        let y = TubalTensor::random(p, r, l, &mut rng);
        let dev = t_product(&x, &y)?.max_abs_diff(&bcirc_product(&x, &y)?).unwrap();
        worst = worst.max(dev);
    }
    Ok((worst <= 1e-10, format!("100 cases, max abs deviation {worst:.2e} (tol 1e-10)")))
}

/// Criterion 2: t-SVD reconstruction, Penrose identities, singular-value multiset.
fn tsvd_and_pinv() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 2);
    let (mut recon, mut penrose, mut spectrum): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for case in 0..50 {
        let (n, p, l) = (rng.random_range(1..=8), rng.random_range(1..=8), rng.random_range(1..=6));
        // every third tensor has reduced tubal rank
        let x = if case % 3 == 2 && n.min(p) > 1 {
            let r = rng.random_range(1..n.min(p));
            t_product(&TubalTensor::random(n, r, l, &mut rng), &TubalTensor::random(r, p, l, &mut rng))?
        } else {
            TubalTensor::random(n, p, l, &mut rng)
        };
        let f = thin_t_svd(&x)?;
        recon = recon.max(rel(&t_product(&t_product(&f.u, &f.s)?, &f.v.t_transpose())?, &x));

        let xp = t_pinv(&x)?;
        let xxp = t_product(&x, &xp)?;
        let xpx = t_product(&xp, &x)?;
        for e in [
            rel(&t_product(&xxp, &x)?, &x),
            rel(&t_product(&xpx, &xp)?, &xp),
            rel(&xxp.t_transpose(), &xxp),
            rel(&xpx.t_transpose(), &xpx),
        ] {
            penrose = penrose.max(e);
        }

        let mut dense: Vec<f64> = SVD::new(bcirc_oracle(&x)?, false, false).singular_values.iter().copied().collect();
        dense.sort_by(|a, b| b.total_cmp(a));
        let ours = fourier_singular_values(&x)?;
        assert_eq!(ours.len(), dense.len());
        for (a, b) in ours.iter().zip(&dense) {
            spectrum = spectrum.max((a - b).abs());
        }
    }
    let pass = recon <= 1e-8 && penrose <= 1e-10 && spectrum <= 1e-8;
    Ok((
        pass,
        format!("50 tensors: reconstruction {recon:.2e} (1e-8), Penrose {penrose:.2e} (1e-10), singular values {spectrum:.2e} (1e-8)"),
    ))
}

/// Criterion 3: OLS against dense LS on the block-circulant system; Fourier
/// versus spatial subsampled solves.
fn solver_equivalence() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 3);
    let (mut ols_err, mut path_err): (f64, f64) = (0.0, 0.0);
    for _ in 0..20 {
        let (p, l) = (rng.random_range(1..=6), rng.random_range(1..=6));
        let n = p + rng.random_range(5..=40);
        let prob = random_problem(&mut rng, n, p, l)?;
        let dense = SVD::new(bcirc_oracle(prob.x())?, true, true)
            .solve(&unfold(prob.y()), 1e-13)
            .unwrap();
        ols_err = ols_err.max(rel(&solve_ols(&prob)?.coef, &fold(&dense, p, l)?));

        let dist = compute_distribution(DistributionKind::Slev { alpha: 0.9 }, prob.x())?;
        let plan = draw_plan(&dist, 2 * n, rng.random())?;
        let a = solve_subsampled(&prob, &plan)?;
        let b = solve_subsampled_spatial(&prob, &plan)?;
        path_err = path_err.max(rel(&a.coef, &b.coef));
    }
    Ok((
        ols_err <= 1e-8 && path_err <= 1e-10,
        format!("20 problems: OLS vs dense {ols_err:.2e} (1e-8), Fourier vs spatial {path_err:.2e} (1e-10)"),
    ))
}

/// Flat Dirichlet draw.
fn random_simplex(rng: &mut ChaCha8Rng, n: usize) -> SamplingDistribution {
    let w: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let total: f64 = w.iter().sum();
    SamplingDistribution {
        kind: DistributionKind::Unif,
        probs: w.iter().map(|v| v / total).collect(),
        leverage: None,
    }
}

/// Criterion 4: Distribution sums and brute-force optimality of the Opt distribution.
fn distributions() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 4);
    let (mut lev_err, mut sum_err): (f64, f64) = (0.0, 0.0);
    let mut violations = 0;
    for _ in 0..10 {
        let (p, l) = (rng.random_range(2..=5), rng.random_range(1..=5));
        let n = rng.random_range(20..=60);
        let x = TubalTensor::random(n, p, l, &mut rng);
        lev_err = lev_err.max((leverage_scores(&x)?.iter().sum::<f64>() - p as f64).abs());
        for kind in [DistributionKind::Unif, DistributionKind::Lev, DistributionKind::Slev { alpha: 0.9 }, DistributionKind::Opt] {
            sum_err = sum_err.max((compute_distribution(kind, &x)?.total() - 1.0).abs());
        }
        let tau = 2 * n;
        let best = trace_t(&unconditional_sandwich(&x, &opt_probs(&x)?, tau, 1.0)?)?;
        for _ in 0..100 {
            let other = trace_t(&unconditional_sandwich(&x, &random_simplex(&mut rng, n), tau, 1.0)?)?;
            if other < best {
                violations += 1;
            }
        }
    }
    Ok((
        lev_err <= 1e-10 && sum_err <= 1e-12 && violations == 0,
        format!("leverage sum err {lev_err:.2e} (1e-10), prob sum err {sum_err:.2e} (1e-12), opt violations {violations}/1000"),
    ))
}

/// Criterion 5: Relative-error guarantee at a practical sample size.
fn relative_error_guarantee() -> Verdict {
    let (n, p, l, tau, eps) = (2000, 5, 4, 400, 1.0);
    let trials = 200;
    let mut hits = 0;
    for t in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(split_seed(SEED + 5, &[t]));
        let x = TubalTensor::random(n, p, l, &mut rng);
        let (y, _) = gen_response(&x, 9.0, rng.random())?;
        let prob = TlsProblem::new(x, y)?;
        let plan = draw_plan(&leverage_probs(prob.x())?, tau, rng.random())?;
        let sub = solve_subsampled(&prob, &plan)?;
        if sub.objective <= (1.0 + eps) * solve_ols(&prob)?.objective {
            hits += 1;
        }
    }
    let rate = hits as f64 / trials as f64;
    Ok((rate >= 0.7, format!("f(B_W) <= 2 f(B_ols) in {hits}/{trials} = {:.1}% (need 70%)", 100.0 * rate)))
}

/// Criterion 6: Conditional variance formula against Monte-Carlo over sampling plans.
fn variance_monte_carlo() -> Verdict {
    let (n, p, l, tau, plans) = (500, 4, 3, 200, 5000u64);
    let x = gen_design(DesignKind::Mn, n, p, l, SEED + 6)?;
    let (y, _) = gen_response(&x, 9.0, SEED + 7)?;
    let prob = TlsProblem::new(x, y)?;
    let unif = uniform_probs(n)?;
    let predicted = trace_t(&conditional_variance_fo(&prob, &unif, tau)?)?;
    let estimates = (0..plans)
        .map(|b| Ok(solve_subsampled(&prob, &draw_plan(&unif, tau, split_seed(SEED + 8, &[b]))?)?.coef))
        .collect::<Result<Vec<_>>>()?;
    let mut mean = vec![0.0; p * l];
    for e in &estimates {
        mean.iter_mut().zip(e.data()).for_each(|(m, v)| *m += v / plans as f64);
    }
    let empirical: f64 = estimates
        .iter()
        .map(|e| e.data().iter().zip(&mean).map(|(v, m)| (v - m).powi(2)).sum::<f64>())
        .sum::<f64>()
        / (plans - 1) as f64;
    let gap = (empirical - predicted).abs() / predicted;
    Ok((
        gap <= 0.15,
        format!("empirical trace {empirical:.4e}, formula {predicted:.4e}, relative gap {:.1}% (15%)", 100.0 * gap),
    ))
}

/// Criterion 7: General formulas at uniform and leverage probabilities against
/// the closed forms.
fn closed_form_identities() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 9);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let (p, l) = (rng.random_range(1..=5), rng.random_range(1..=6));
        let n = p + rng.random_range(5..=50);
        let tau = rng.random_range(p..=2 * n);
        let sigma2 = rng.random_range(0.5..10.0);
        let prob = random_problem(&mut rng, n, p, l)?;
        let unif = uniform_probs(n)?;
        let lev = leverage_probs(prob.x())?;
        let h = lev.leverage.clone().unwrap();
        for e in [
            rel(&conditional_variance_fo(&prob, &unif, tau)?, &conditional_variance_unif(&prob, tau)?),
            rel(&conditional_variance_fo(&prob, &lev, tau)?, &conditional_variance_lev(&prob, &h, tau)?),
            rel(&unconditional_sandwich(prob.x(), &unif, tau, sigma2)?, &unconditional_sandwich_unif(prob.x(), tau, sigma2)?),
            rel(&unconditional_sandwich(prob.x(), &lev, tau, sigma2)?, &unconditional_sandwich_lev(prob.x(), &h, tau, sigma2)?),
        ] {
            worst = worst.max(e);
        }
    }
    Ok((worst <= 1e-10, format!("10 designs, 4 identities each, max relative deviation {worst:.2e} (1e-10)")))
}

fn desk_config(design: DesignKind, mode: Mode) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(SEED + 10);
    cfg.design = design;
    cfg.mode = mode;
    cfg
}

fn table(title: &str, r: &MetricsReport) {
    eprintln!("  {title}");
    for row in &r.rows {
        eprintln!(
            "    {:<16} tau={:<5} smse={:.4e} ssb={:.3e} sv={:.4e} smre={:.3e} smrfv={:.3e} ms={:.3} ok={} fail={}",
            row.method, row.tau, row.smse, row.ssb, row.sv, row.smre, row.smrfv, row.mean_ms, row.replicates, row.failures
        );
    }
}

fn smse(r: &MetricsReport, method: &str, tau: usize) -> f64 {
    r.get(method, tau).map_or(f64::NAN, |row| row.smse)
}

/// Criterion 8: Qualitative reproduction of the method comparison.
fn method_comparison() -> Verdict {
    let taus = [150, 300, 600];
    let methods = ["unif", "lev", "slev", "opt"];
    let mut notes = Vec::new();
    let mut pass = true;

    let t1 = run_experiment(&desk_config(DesignKind::T1, Mode::Unconditional))?;
    table("T1, unconditional", &t1);
    let mut ordered = 0;
    for &tau in &taus {
        let s = |m| smse(&t1, m, tau);
        if s("opt") <= s("slev") && s("slev") <= s("unif").min(s("lev")) {
            ordered += 1;
        }
    }
    pass &= ordered == taus.len();
    notes.push(format!("(a) T1 ordering holds at {ordered}/3 tau"));

    let mn = run_experiment(&desk_config(DesignKind::Mn, Mode::Unconditional))?;
    table("MN, unconditional", &mn);
    let mut worst_ratio: f64 = 0.0;
    for &tau in &taus {
        let v: Vec<f64> = methods.iter().map(|m| smse(&mn, m, tau)).collect();
        let (lo, hi) = v.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &x| (lo.min(x), hi.max(x)));
        worst_ratio = worst_ratio.max(hi / lo);
    }
    pass &= worst_ratio <= 1.3;
    notes.push(format!("(b) MN max/min SMSE {worst_ratio:.3} (1.3)"));

    let t3 = run_experiment(&desk_config(DesignKind::T3, Mode::Unconditional))?;
    table("T3, unconditional", &t3);
    let bias_ratio = [&mn, &t3]
        .iter()
        .flat_map(|r| r.rows.iter().map(|row| row.ssb / row.sv))
        .fold(0.0f64, f64::max);
    pass &= bias_ratio <= 0.1;
    notes.push(format!("(c) max SSB/SV on MN,T3 {bias_ratio:.4} (0.1)"));

    let mut runs = vec![mn, t3, t1];
    for design in [DesignKind::Mn, DesignKind::T3, DesignKind::T1] {
        let r = run_experiment(&desk_config(design, Mode::Conditional))?;
        table(&format!("{design}, conditional"), &r);
        runs.push(r);
    }
    // the 1/tau law holds for the sampling variance; unconditional runs carry
    // a full-data noise floor that does not shrink with tau
    let decay = |runs: &[MetricsReport]| {
        let mut worst: f64 = 0.0;
        for r in runs {
            for m in methods {
                for pair in taus.windows(2) {
                    worst = worst.max(r.get(m, pair[1]).unwrap().sv / r.get(m, pair[0]).unwrap().sv);
                }
            }
        }
        worst
    };
    let (conditional, unconditional) = (decay(&runs[3..]), decay(&runs[..3]));
    pass &= conditional <= 0.65;
    notes.push(format!(
        "(d) max SV(2 tau)/SV(tau) conditional {conditional:.3} (0.65), unconditional {unconditional:.3} (info)"
    ));
    Ok((pass, notes.join("; ")))
}

/// Criterion 9: Tensor versus matrix subsampling.
fn tensor_vs_matrix() -> Verdict {
    let mut cfg = ExperimentConfig::new(SEED + 11);
    cfg.taus = vec![200, 300];
    let r = compare_mls(&cfg)?;
    table("MN, tensor vs matrix subsampling", &r);
    let (mut beats, mut close, mut faster, mut cells) = (0, 0, 0, 0);
    let mut worst_gap: f64 = 0.0;
    for &tau in &cfg.taus {
        for m in ["unif", "lev"] {
            cells += 1;
            let stls = r.get(m, tau).unwrap();
            let same = r.get(&format!("smls-{m}"), tau).unwrap();
            let big = r.get(&format!("smls-{m}-ltau"), tau).unwrap();
            beats += usize::from(stls.smse < same.smse);
            let gap = (big.smse - stls.smse).abs() / stls.smse;
            worst_gap = worst_gap.max(gap);
            close += usize::from(gap <= 0.2);
            faster += usize::from(stls.mean_ms < big.mean_ms);
        }
    }
    Ok((
        beats == cells && close == cells && faster == cells,
        format!(
            "STLS beats SMLS(tau) {beats}/{cells}; SMLS(l*tau) within 20% {close}/{cells} (worst {:.1}%); STLS faster {faster}/{cells}",
            100.0 * worst_gap
        ),
    ))
}

/// Criterion 10: Byte-identical reports under 1, 2 and 8 threads.
fn determinism() -> Verdict {
    let dir = tempfile::tempdir().map_err(|e| tlsq_core::TlsError::Domain(e.to_string()))?;
    let mut configs = Vec::new();
    let mut a = ExperimentConfig::new(SEED + 12);
    (a.n, a.p, a.l, a.replicates, a.taus, a.design) = (400, 6, 4, 40, vec![60, 120], DesignKind::T3);
    configs.push(a.clone());
    a.methods = vec![DistributionKind::Unif, DistributionKind::Lev];
    a.smls = tlsq_core::experiments::SmlsMode::Both;
    a.mode = Mode::Conditional;
    configs.push(a);
    let mut identical = 0;
    let mut total = 0;
    for (c, cfg) in configs.iter().enumerate() {
        let mut files = Vec::new();
        for (i, threads) in [1, 2, 8, 8].into_iter().enumerate() {
            let mut cfg = cfg.clone();
            cfg.threads = threads;
            let path = dir.path().join(format!("r{c}_{i}.csv"));
            write_report(&run_experiment(&cfg)?, &path)?;
            files.push(std::fs::read(&path).unwrap());
        }
        for f in &files[1..] {
            total += 1;
            identical += usize::from(*f == files[0]);
        }
    }
    Ok((identical == total, format!("{identical}/{total} reruns byte-identical (threads 1, 2, 8, 8)")))
}

fn main() {
    let criteria: [Criterion; 10] = [
        (1, "t-product oracle", 5.0, t_product_oracle),
        (2, "t-SVD / pseudoinverse", 10.0, tsvd_and_pinv),
        (3, "solver equivalence", f64::INFINITY, solver_equivalence),
        (4, "distribution correctness", f64::INFINITY, distributions),
        (5, "relative-error guarantee", 60.0, relative_error_guarantee),
        (6, "variance vs Monte-Carlo", 120.0, variance_monte_carlo),
        (7, "closed-form identities", f64::INFINITY, closed_form_identities),
        (8, "method comparison", 600.0, method_comparison),
        (9, "tensor vs matrix subsampling", f64::INFINITY, tensor_vs_matrix),
        (10, "determinism", f64::INFINITY, determinism),
    ];
    let mut failed = 0;
    for (id, name, limit, run) in criteria {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        let budget = if limit.is_finite() { format!(", budget {limit:.0}s") } else { String::new() };
        let (pass, detail) = match outcome {
            Ok((ok, detail)) => (ok && secs < limit, detail),
            Err(e) => (false, format!("error: {e}")),
        };
        failed += usize::from(!pass);
        println!(
            "criterion {id:>2} {}: {name}: {detail} [{secs:.1}s{budget}]",
            if pass { "PASS" } else { "FAIL" }
        );
    }
    println!("acceptance: {} of 10 criteria passed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
