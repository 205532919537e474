//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails. Pass criterion numbers as arguments to
//! run a subset.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use pairstate::config::Estimator;
use pairstate::estimate::{fidelity, li_diagnostics, match_and_score};
use pairstate::linalg::{self, CMat, C64};
use pairstate::plausible::draw_prior;
use pairstate::povm::{self, SicPovm, TetraPovm};
use pairstate::qstate::{ParamVector, PureQubit, SymmetricTwoQubitState, TripletMatrix};
use pairstate::recon::{decompose_moments, decompose_xi, Decomposition, XI_GAP_TOLERANCE};
use pairstate::sim::{self, stream_rng, StreamKind};
use pairstate_cli::{asymptotics_rows, AsymptoticsRow, load_config, read_rows, CommonOptions, ResultRow, SimulateOptions};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn within(elapsed: Duration, limit_s: f64, what: &str) -> Result<(), String> {
    if elapsed.as_secs_f64() > limit_s {
        return Err(format!("{what} took {:.1} s, limit {limit_s} s", elapsed.as_secs_f64()));
    }
    Ok(())
}

fn worst_infidelity(truth: &ParamVector, d: &Decomposition) -> (f64, f64) {
    let s = match_and_score(truth, d);
    (s.err0_ppm.max(s.err1_ppm) * 1e-6, s.prob_abs_err)
}

fn criterion_1() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (mut worst_m, mut worst_x, mut worst_p) = (0.0f64, 0.0f64, 0.0f64);
    let mut failures = Vec::new();
    let mut degenerate_routed = 0;
    for i in 0..10_000 {
        let p = draw_prior(&mut rng);
        for (route, d) in [
            ("moments", decompose_moments(&p.ensemble_state(), 1e-12)),
            ("xi", decompose_xi(&p.triplet_matrix())),
        ] {
            match d {
                Ok(d) if !d.degenerate => {
                    let (inf, dp) = worst_infidelity(&p, &d);
                    if route == "moments" {
                        worst_m = worst_m.max(inf);
                    } else {
                        worst_x = worst_x.max(inf);
                    }
                    worst_p = worst_p.max(dp);
                    if inf >= 1e-9 || dp >= 1e-9 {
                        failures.push(format!("draw {i} {route}: infidelity {inf:.2e}, dp {dp:.2e}"));
                    }
                }
                Ok(d) => {
                    // only sources within the documented degenerate set may take the single-state branch
                    let documented = match route {
                        "moments" => p.ensemble_state().connected_correlation().frobenius_norm() <= 1e-12,
                        _ => p.triplet_matrix().eigen().values[1] < XI_GAP_TOLERANCE,
                    };
                    let dominant = if p.p0() >= p.p1() { p.state0() } else { p.state1() };
                    if documented && 1.0 - fidelity(&d.state0, &dominant) < 1e-9 {
                        degenerate_routed += 1;
                    } else {
                        failures.push(format!("draw {i} {route}: reported degenerate"));
                    }
                }
                Err(e) => failures.push(format!("draw {i} {route}: {e}")),
            }
        }
    }

    // sources that must take the degenerate branches
    let z = PureQubit::new(0.4, 1.3).unwrap();
    let other = PureQubit::new(1.2, 0.2).unwrap();
    for (name, p) in [
        ("identical states", ParamVector::from_qubits(z, z, 0.3).unwrap()),
        ("p0 = 1", ParamVector::from_qubits(z, other, 1.0).unwrap()),
    ] {
        for (route, d) in [
            ("moments", decompose_moments(&p.ensemble_state(), 1e-12)),
            ("xi", decompose_xi(&p.triplet_matrix())),
        ] {
            match d {
                Ok(d) if d.degenerate && 1.0 - fidelity(&d.state0, &z) < 1e-9 => {}
                Ok(d) => failures.push(format!("{name} {route}: degenerate={} state0 off", d.degenerate)),
                Err(e) => failures.push(format!("{name} {route}: {e}")),
            }
        }
    }
    let eq = ParamVector::from_qubits(z, other, 0.5).unwrap();
    match decompose_moments(&eq.ensemble_state(), 1e-12) {
        Ok(d) if worst_infidelity(&eq, &d).0 < 1e-9 => {}
        other => failures.push(format!("p0 = p1 moments: {other:?}")),
    }

    if let Err(e) = within(start.elapsed(), 10.0, "round trips") {
        failures.push(e);
    }
    let detail = format!(
        "max infidelity moments {worst_m:.1e}, xi {worst_x:.1e}, max |dp| {worst_p:.1e}, {degenerate_routed} near-degenerate draws on the single-state branch, {:.2} s",
        start.elapsed().as_secs_f64()
    );
    if failures.is_empty() {
        Ok(detail)
    } else {
        Err(format!("{detail}; {} failures: {}", failures.len(), failures.iter().take(5).cloned().collect::<Vec<_>>().join(" / ")))
    }
}

fn max_dev<const N: usize>(a: &CMat<N>, b: &CMat<N>) -> f64 {
    linalg::max_abs_diff(a, b)
}

fn ket_projector(v: [C64; 4]) -> CMat<4> {
    linalg::outer(&v, &v)
}

fn criterion_2() -> Check {
    let start = Instant::now();
    let mut dev = BTreeMap::<&str, f64>::new();
    let mut note = |k: &'static str, v: f64| {
        let e = dev.entry(k).or_insert(0.0);
        *e = e.max(v);
    };
    let real = |x: f64| C64::new(x, 0.0);
    let sic = SicPovm::get();
    let tetra = TetraPovm::get();

    let sum3 = sic.elements.iter().fold(linalg::zeros::<3>(), |a, e| linalg::add(&a, e));
    note("sic completeness", max_dev(&sum3, &linalg::identity::<3>()));
    // triplet projector in |00>,|01>,|10>,|11> built from its kets
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let kets = [
        [real(1.0), real(0.0), real(0.0), real(0.0)],
        [real(0.0), real(0.0), real(0.0), real(1.0)],
        [real(0.0), real(h), real(h), real(0.0)],
    ];
    let triplet = kets.iter().fold(linalg::zeros::<4>(), |a, k| linalg::add(&a, &ket_projector(*k)));
    let singlet = ket_projector([real(0.0), real(h), real(-h), real(0.0)]);
    let sum4 = sic
        .elements
        .iter()
        .fold(linalg::zeros::<4>(), |a, e| linalg::add(&a, &pairstate::qstate::triplet_to_matrix4(&TripletMatrix(*e))));
    note("sic completeness", max_dev(&sum4, &triplet));
    for j in 0..9 {
        note("sic traces", (linalg::trace(&sic.elements[j]) - real(1.0 / 3.0)).norm());
        for k in 0..9 {
            let expect = if j == k { 1.0 / 9.0 } else { 1.0 / 36.0 };
            note("sic traces", (linalg::trace_product(&sic.elements[j], &sic.elements[k]) - real(expect)).norm());
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..500 {
        let p = draw_prior(&mut rng);
        let q = povm::sic_probabilities(&p.triplet_matrix());
        let purity = q.sum_sq();
        note("purity range", (1.0 / 9.0 - purity).max(purity - 1.0 / 6.0).max(0.0));
        let pure = povm::sic_probabilities(&TripletMatrix::from_ket(&p.state0().pair_ket()));
        note("purity of pure triplets", (pure.sum_sq() - 1.0 / 6.0).abs());
        let t = povm::tetra_probabilities(&p.ensemble_state());
        note("tetra sum rules", (t.0[..4].iter().sum::<f64>() - 1.0 / 3.0).abs());
        note("tetra sum rules", (t.0[4..].iter().sum::<f64>() - 2.0 / 3.0).abs());
    }

    for j in 0..4 {
        for k in 0..4 {
            let expect = if j == k { 1.0 } else { -1.0 / 3.0 };
            note("tetra gram", (tetra.t[j].dot(tetra.t[k]) - expect).abs());
        }
    }
    let sum_t = tetra.elements.iter().fold(linalg::zeros::<4>(), |a, e| linalg::add(&a, e));
    note("tetra completeness", max_dev(&sum_t, &linalg::identity::<4>()));
    for a in 0..10 {
        for b in 0..10 {
            let expect = if a == b { 1.0 } else { 0.0 };
            note("tetra duality", (linalg::trace_product(&tetra.elements[a], &tetra.reconstruction[b]) - real(expect)).norm());
        }
    }
    let q = povm::tetra_probabilities(&SymmetricTwoQubitState::singlet());
    for (o, e) in tetra.elements.iter().enumerate() {
        let expect = if o < 4 { 0.0 } else { 1.0 / 6.0 };
        note("singlet probabilities", (linalg::trace_product(e, &singlet).re - expect).abs());
        note("singlet probabilities", (q.0[o] - expect).abs());
    }

    let elapsed = start.elapsed();
    let worst = dev.iter().max_by(|a, b| a.1.total_cmp(b.1)).map(|(k, v)| (*k, *v)).unwrap();
    let detail = format!("{} identity groups, worst {} at {:.1e}, {:.3} s", dev.len(), worst.0, worst.1, elapsed.as_secs_f64());
    within(elapsed, 1.0, "identities")?;
    if worst.1 < 1e-12 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn mean_summed_ppm(config: &str) -> Result<BTreeMap<Estimator, (f64, usize)>, String> {
    let cfg = load_config(&configs().join(config)).map_err(|e| e.to_string())?;
    let records = sim::run_experiment(&cfg).map_err(|e| e.to_string())?;
    let mut acc = BTreeMap::<Estimator, (f64, usize)>::new();
    let mut failed = 0;
    for rec in &records {
        for cp in &rec.checkpoints {
            for est in &cp.estimates {
                match est.score {
                    Some(s) => {
                        let e = acc.entry(est.estimator).or_insert((0.0, 0));
                        e.0 += s.summed_ppm();
                        e.1 += 1;
                    }
                    None => failed += 1,
                }
            }
        }
    }
    if failed > 0 {
        eprintln!("  {config}: {failed} estimates failed and are excluded");
    }
    Ok(acc.into_iter().map(|(k, (sum, n))| (k, (sum / n as f64, n))).collect())
}

fn criterion_3() -> Check {
    let start = Instant::now();
    let mut lines = Vec::new();
    let mut ok = true;
    for (config, li_ref, ml_ref) in [("histogram_a.toml", 11852.0, 10546.0), ("histogram_b.toml", 15760.0, 9283.0)] {
        let means = mean_summed_ppm(config)?;
        let li = means.get(&Estimator::LiXi).ok_or("no li-xi results")?.0;
        let ml = means.get(&Estimator::Ml).ok_or("no ml results")?.0;
        let li_ok = (li / li_ref - 1.0).abs() <= 0.2;
        let ml_ok = (ml / ml_ref - 1.0).abs() <= 0.2;
        ok &= li_ok && ml_ok;
        lines.push(format!("{config}: LI {li:.0} (ref {li_ref}) ML {ml:.0} (ref {ml_ref})"));
        if config == "histogram_b.toml" && ml >= li {
            ok = false;
            lines.push("ML mean not below LI mean".into());
        }
    }
    let elapsed = start.elapsed();
    lines.push(format!("{:.1} s", elapsed.as_secs_f64()));
    within(elapsed, 1800.0, "replication")?;
    let detail = lines.join("; ");
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_4() -> Check {
    let start = Instant::now();
    const RUNS: u64 = 10_000;
    const N: u64 = 1000;
    let cfg = load_config(&configs().join("histogram_a.toml")).map_err(|e| e.to_string())?;
    let truth = cfg.truth().map_err(|e| e.to_string())?;
    let rho = truth.triplet_matrix();
    let q = povm::sic_probabilities(&rho);
    let predicted = 12.0 / N as f64 * (1.0 - q.sum_sq());
    // independent form: (11 - tr ρ²)/N
    let purity = linalg::trace_product(&rho.0, &rho.0).re;
    let predicted_alt = (11.0 - purity) / N as f64;
    let lowest = rho.eigen().vector(0);

    let mut hs_sum = 0.0;
    let mut sums = [[C64::new(0.0, 0.0); 3]; 3];
    let mut sq = [[(0.0f64, 0.0f64); 3]; 3];
    let mut bound_checked = 0;
    let mut bound_violations = 0;
    for run in 0..RUNS {
        let mut rng = stream_rng(404, StreamKind::Counts, run);
        let counts = sim::sample_counts_with(q.as_slice(), N, &mut rng).map_err(|e| e.to_string())?;
        let inv = povm::sic_linear_inversion(&counts).map_err(|e| e.to_string())?;
        let m = &inv.matrix.0;
        let mut hs = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let d = m[i][j] - rho.0[i][j];
                hs += d.norm_sqr();
                sums[i][j] += m[i][j];
                sq[i][j].0 += m[i][j].re * m[i][j].re;
                sq[i][j].1 += m[i][j].im * m[i][j].im;
            }
        }
        hs_sum += hs;
        let diag = li_diagnostics(&inv.matrix, &rho);
        let [_, r1, _] = diag.eigenvalues;
        if r1 > 10.0 * diag.epsilon {
            bound_checked += 1;
            let u0 = inv.matrix.eigen().vector(0);
            let overlap = linalg::inner(&u0, &lowest).norm_sqr();
            if overlap < diag.overlap_lower_bound - 1e-12 {
                bound_violations += 1;
            }
        }
    }
    let r = RUNS as f64;
    let mean_hs = hs_sum / r;
    let mut max_z = 0.0f64;
    for i in 0..3 {
        for j in 0..3 {
            let mean = sums[i][j] / r;
            for (mu, s2, t) in [(mean.re, sq[i][j].0, rho.0[i][j].re), (mean.im, sq[i][j].1, rho.0[i][j].im)] {
                let var = (s2 / r - mu * mu).max(0.0);
                let se = (var / r).sqrt();
                if se > 0.0 {
                    max_z = max_z.max((mu - t).abs() / se);
                } else if (mu - t).abs() > 1e-12 {
                    max_z = f64::INFINITY;
                }
            }
        }
    }
    let elapsed = start.elapsed();
    let rel = mean_hs / predicted - 1.0;
    let n = N as f64;
    let in_range = (10.0 / n..=32.0 / (3.0 * n)).contains(&mean_hs);
    let detail = format!(
        "E|d rho|^2 = {mean_hs:.4e} vs {predicted:.4e} ({:+.2}%), alternative form {predicted_alt:.4e}, max entry z {max_z:.2}, \
         overlap bound checked in {bound_checked} runs with {bound_violations} violations, {:.1} s",
        rel * 100.0,
        elapsed.as_secs_f64()
    );
    within(elapsed, 120.0, "statistical suite")?;
    let ok = rel.abs() <= 0.05 && in_range && (predicted - predicted_alt).abs() < 1e-12 && max_z <= 4.0 && bound_violations == 0;
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn plausible_rows() -> Result<Vec<ResultRow>, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let opts = CommonOptions { out: Some(dir.path().to_path_buf()), ..Default::default() };
    let out = pairstate_cli::cmd_simulate(&configs().join("tetra_plausible.toml"), &opts, SimulateOptions::default()).map_err(|e| e.to_string())?;
    let rows = read_rows(&out.join("results.csv")).map_err(|e| e.to_string())?;
    Ok(rows.into_iter().filter(|r| r.estimator == "ml").collect())
}

fn criterion_5(rows: &[ResultRow], elapsed: Duration) -> Check {
    let mut problems = Vec::new();
    let thresholds = [(1000u64, 0.9999, 1e-3), (2000, 0.99999, 1e-4), (5000, 0.999999, 1e-5)];
    let mut summary = Vec::new();
    for r in rows {
        let (Some(c), Some(s)) = (r.credibility, r.size) else {
            problems.push(format!("run {} N {}: no plausibility ({:?})", r.run, r.n, r.error));
            continue;
        };
        if r.truth_plausible != Some(true) {
            problems.push(format!("run {} N {}: truth not plausible", r.run, r.n));
        }
        for (n, cmin, smax) in thresholds {
            if r.n == n && !(c > cmin && s < smax) {
                problems.push(format!("run {} N {n}: credibility {c}, size {s}", r.run));
            }
        }
        if r.n == 100 && !(0.95..=0.999).contains(&c) {
            problems.push(format!("run {} N 100: credibility {c}", r.run));
        }
    }
    for n in [100u64, 1000, 2000, 5000] {
        let sel: Vec<&ResultRow> = rows.iter().filter(|r| r.n == n).collect();
        let cmin = sel.iter().filter_map(|r| r.credibility).fold(1.0f64, f64::min);
        let smax = sel.iter().filter_map(|r| r.size).fold(0.0f64, f64::max);
        summary.push(format!("N={n}: min c {cmin:.7}, max s {smax:.2e}"));
    }
    let checkpoints = rows.len();
    let detail = format!("{checkpoints} checkpoints; {}; {:.0} s", summary.join(", "), elapsed.as_secs_f64());
    within(elapsed, 3600.0, "plausibility sweep")?;
    if checkpoints != 5 * 50 {
        problems.push(format!("expected 250 checkpoints, got {checkpoints}"));
    }
    if problems.is_empty() {
        Ok(detail)
    } else {
        Err(format!("{detail}; {} problems, first: {}", problems.len(), problems[0]))
    }
}

fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    sxy / sxx
}

/// Mean per-run slope over its standard error. Counts are cumulative within
/// a run, so residuals along N are correlated and only the spread between
/// runs measures the slope uncertainty.
fn slope_t(series: &[&AsymptoticsRow], value: impl Fn(&AsymptoticsRow) -> f64) -> f64 {
    let mut slopes = Vec::new();
    let runs: std::collections::BTreeSet<usize> = series.iter().map(|r| r.run).collect();
    for run in runs {
        let rows: Vec<_> = series.iter().filter(|r| r.run == run).collect();
        let x: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
        let y: Vec<f64> = rows.iter().map(|r| value(r)).collect();
        slopes.push(ols_slope(&x, &y));
    }
    let k = slopes.len() as f64;
    let mean = slopes.iter().sum::<f64>() / k;
    let var = slopes.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
    mean / (var / k).sqrt()
}

fn criterion_6(rows: &[ResultRow]) -> Check {
    let series = asymptotics_rows(rows).map_err(|e| e.to_string())?;
    let late: Vec<_> = series.iter().filter(|r| r.n >= 2000).collect();
    let outside: Vec<_> = late.iter().filter(|r| !(0.9..=1.1).contains(&r.ratio_d)).collect();
    let ratios: Vec<f64> = late.iter().map(|r| r.ratio_d).collect();
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let sd = (ratios.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (ratios.len() - 1) as f64).sqrt();

    let mid: Vec<_> = series.iter().filter(|r| (1000..=5000).contains(&r.n)).collect();
    let t = [
        ("lambda", slope_t(&mid, |r| r.scaled_lambda)),
        ("size", slope_t(&mid, |r| r.scaled_size)),
        ("1-c", slope_t(&mid, |r| r.scaled_one_minus_credibility)),
    ];
    let trend_ok = t.iter().all(|(_, v)| v.abs() < 4.0);
    let detail = format!(
        "ratio_d for N>=2000: {} of {} outside [0.9, 1.1], mean {mean:.3}, sd {sd:.3}; slope t: {}",
        outside.len(),
        late.len(),
        t.iter().map(|(k, v)| format!("{k} {v:+.2}")).collect::<Vec<_>>().join(", ")
    );
    if outside.is_empty() && trend_ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn run_bin(args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_pairstate")).args(args).output().map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr)));
    }
    Ok(out.stdout)
}

fn criterion_7() -> Check {
    let start = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = dir.path().join("det.toml");
    std::fs::write(
        &config,
        r#"povm = "tetra"
n_schedule = [200, 400]
runs = 4
estimators = ["li-xi", "li-moments", "ml"]
master_seed = 77

[source]
kind = "angles"
theta0 = 0.3
phi0 = 1.0
theta1 = 1.2
phi1 = 4.0
alpha = 0.7

[plausibility]
enabled = true
samples = 200000
chunk_size = 30000
"#,
    )
    .map_err(|e| e.to_string())?;
    let mut outputs: Vec<BTreeMap<String, Vec<u8>>> = Vec::new();
    for threads in ["1", "3"] {
        let out = dir.path().join(format!("t{threads}"));
        let out_s = out.to_str().unwrap();
        let cfg = config.to_str().unwrap();
        run_bin(&["simulate", "--config", cfg, "--out", out_s, "--threads", threads, "--write-counts"])?;
        let mut files = BTreeMap::new();
        for name in ["results.csv", "manifest.json"] {
            files.insert(name.to_string(), std::fs::read(out.join(name)).map_err(|e| e.to_string())?);
        }
        let counts = out.join("counts/run1_N400.csv");
        let counts = counts.to_str().unwrap();
        files.insert("estimate".into(), run_bin(&["estimate", "--counts", counts, "--povm", "tetra", "--threads", threads])?);
        files.insert(
            "plausible".into(),
            run_bin(&["plausible", "--counts", counts, "--povm", "tetra", "--samples", "100000", "--seed", "5", "--threads", threads])?,
        );
        let table = out.join("results.csv");
        files.insert("asymptotics".into(), run_bin(&["asymptotics", "--table", table.to_str().unwrap(), "--threads", threads])?);
        outputs.push(files);
    }
    let differing: Vec<&String> = outputs[0].keys().filter(|k| outputs[0][*k] != outputs[1][*k]).collect();
    let detail = format!("{} outputs compared across 1 and 3 threads, {:.1} s", outputs[0].len(), start.elapsed().as_secs_f64());
    if differing.is_empty() {
        Ok(detail)
    } else {
        Err(format!("{detail}; differing: {differing:?}"))
    }
}

fn main() {
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let want = |k: u32| selected.is_empty() || selected.contains(&k);
    let mut results: Vec<(u32, &str, Check)> = Vec::new();

    if want(1) {
        results.push((1, "analytic round trips", criterion_1()));
    }
    if want(2) {
        results.push((2, "measurement identities", criterion_2()));
    }
    if want(3) {
        results.push((3, "error histogram means", criterion_3()));
    }
    if want(4) {
        results.push((4, "linear-inversion statistics", criterion_4()));
    }
    if want(5) || want(6) {
        let start = Instant::now();
        match plausible_rows() {
            Ok(rows) => {
                let elapsed = start.elapsed();
                if want(5) {
                    results.push((5, "plausible region", criterion_5(&rows, elapsed)));
                }
                if want(6) {
                    results.push((6, "large-N asymptotics", criterion_6(&rows)));
                }
            }
            Err(e) => {
                for (k, name) in [(5, "plausible region"), (6, "large-N asymptotics")] {
                    if want(k) {
                        results.push((k, name, Err(e.clone())));
                    }
                }
            }
        }
    }
    if want(7) {
        results.push((7, "determinism across thread counts", criterion_7()));
    }

    println!();
    let mut failed = 0;
    for (k, name, r) in &results {
        match r {
            Ok(d) => println!("criterion {k} ({name}): PASS  {d}"),
            Err(d) => {
                failed += 1;
                println!("criterion {k} ({name}): FAIL  {d}");
            }
        }
    }
    println!("{} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
