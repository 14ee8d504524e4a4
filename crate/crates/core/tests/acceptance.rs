//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::time::{Duration, Instant};

use nalgebra::Matrix3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tness::asymptotics::{info_wide, info_wide_inv, sample_limit_triple, score_at_null};
use tness::compromise::{ARule, DEFAULT_LIMTRANS_D};
use tness::densities::{mixture_r, penalty_r, t_cdf, t_quantile, MixtureSpec, QuasiT, QUASI_T_MIN_CUTOFF};
use tness::estimand::NullPoint;
use tness::estimation::{fit_narrow, fit_wide, FitOptions};
use tness::quadrature::{integrate_breaks, Tolerance};
use tness::risk::{
    a_grid, coverage_narrow_ci, mixture_tolerance, quasi_t_kappa, risk_closed, risk_quadrature, risk_table,
    t_test_power, tolerance_threshold,
};
use tness::simulate::{delta_from_dof, risk_sim_draws, run, sample_local, SimConfig, SimKind};
use tness::special::norm_quantile;

const REFERENCE_TABLE: &str = include_str!("data/risk_table_fixture.csv");

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

fn threshold_constants() -> Outcome {
    let t = tolerance_threshold();
    let ok = within(t.a_star, 0.8399, 5e-4) && within(t.delta_star, 0.6858, 5e-4) && within(t.m_coeff, 1.4582, 1e-3);
    outcome(ok, format!("a*={:.10} delta*={:.10} m-coeff={:.10}", t.a_star, t.delta_star, t.m_coeff))
}

fn published_rows() -> (Vec<String>, Vec<Vec<Option<f64>>>) {
    let mut lines = REFERENCE_TABLE.lines();
    let header = lines.next().unwrap().split(',').map(str::to_owned).collect();
    let rows = lines.map(|l| l.split(',').map(|c| c.parse().ok()).collect()).collect();
    (header, rows)
}

fn risk_table_reproduction() -> Outcome {
    let grid = a_grid(5.0, 0.05).unwrap();
    let table = risk_table(&grid, &ARule::table_rules()).unwrap();
    let (header, rows) = published_rows();
    let mut worst = (0.0f64, String::new());
    for spot in [0.0, 1.0, 2.0, 2.9, 3.75, 5.0] {
        let i = grid.iter().position(|a| (a - spot).abs() < 1e-9).unwrap();
        for (col, cell) in header.iter().zip(&rows[i]).skip(1) {
            if let Some(p) = cell {
                let d = (table.curve(col).unwrap().values[i] - p).abs();
                if d > worst.0 {
                    worst = (d, format!("{col}@{spot}"));
                }
            }
        }
    }
    let at0 = |c: &str| table.curve(c).unwrap().values[0];
    let named = [("wide", 0.5), ("ratio", 0.2494), ("eb", 0.3368), ("vague", 0.8183), ("pre", 0.4360), ("lim", 0.2601)];
    let named_ok = named.iter().all(|&(c, v)| within(at0(c), v, 0.002));
    let peak = |rule: &ARule, lo: f64, hi: f64| {
        let mut best = (lo, f64::MIN);
        let mut a = lo;
        while a <= hi + 1e-12 {
            let r = risk_quadrature(rule, a).unwrap();
            if r > best.1 {
                best = (a, r);
            }
            a += 0.01;
        }
        best
    };
    let (ra, rr) = peak(&ARule::Ratio, 2.0, 4.0);
    let (ea, er) = peak(&ARule::EmpiricalBayes, 2.5, 5.0);
    let ok = worst.0 <= 0.002
        && named_ok
        && within(rr, 1.223, 0.003)
        && within(ra, 2.9, 0.3)
        && within(er, 1.147, 0.003)
        && within(ea, 3.75, 0.4);
    outcome(
        ok,
        format!(
            "max spot-row gap {:.5} ({}); ratio max {rr:.4} at a={ra:.2}; eb max {er:.4} at a={ea:.2}",
            worst.0, worst.1
        ),
    )
}

fn closed_form_equivalence() -> Outcome {
    let grid = a_grid(5.0, 0.05).unwrap();
    let rules = [ARule::Wide, ARule::PreTest { d: 0.8399 }, ARule::LimitedTranslation { d: DEFAULT_LIMTRANS_D }];
    let mut worst = 0.0f64;
    for r in &rules {
        for &a in &grid {
            worst = worst.max((risk_closed(r, a).unwrap() - risk_quadrature(r, a).unwrap()).abs());
        }
    }
    outcome(worst < 1e-6, format!("max |closed - quadrature| = {worst:.2e}"))
}

fn score_covariance(z: impl Iterator<Item = f64>) -> Matrix3<f64> {
    let mut sum = nalgebra::Vector3::zeros();
    let mut prod = Matrix3::zeros();
    let mut n = 0.0;
    for zi in z {
        let s = score_at_null(zi, 1.0);
        let v = nalgebra::Vector3::new(s.u, s.v, s.w);
        sum += v;
        prod += v * v.transpose();
        n += 1.0;
    }
    let mean = sum / n;
    prod / n - mean * mean.transpose()
}

fn information_identities() -> Outcome {
    const N: usize = 1_000_000;
    let j = info_wide(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    // stratified: one draw from each of N equal-probability slices of the null
    let strat = score_covariance((0..N).map(|i| norm_quantile((i as f64 + rng.random::<f64>()) / N as f64)));
    let strat_gap = (strat - j).abs().max();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let iid = score_covariance((0..N).map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal)));
    let iid_gap = (iid - j).abs().max();
    let ident = [0.3, 1.0, 2.5]
        .iter()
        .map(|&s| (info_wide(s) * info_wide_inv(s) - Matrix3::identity()).abs().max())
        .fold(0.0, f64::max);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let cs: Vec<f64> = (0..N).map(|_| sample_limit_triple(1.0, &mut rng)[2]).collect();
    let m = cs.iter().sum::<f64>() / N as f64;
    let var_c = cs.iter().map(|c| (c - m).powi(2)).sum::<f64>() / (N as f64 - 1.0);
    let ok = strat_gap <= 0.02 && ident <= 1e-12 && within(var_c, 2.0 / 3.0, 0.01);
    outcome(
        ok,
        format!(
            "stratified max|Ĵ-J| = {strat_gap:.4} (i.i.d. draws: {iid_gap:.4}); max|JJ⁻¹-I| = {ident:.1e}; Var C = {var_c:.5}"
        ),
    )
}

fn corner_asymptotics() -> Outcome {
    let c0 = run(&SimConfig::new(SimKind::Corner, 2000, 0.0, 2000, 101)).unwrap();
    let c1 = run(&SimConfig::new(SimKind::Corner, 2000, 1.0, 2000, 102)).unwrap();
    let (f0, f1) = (c0.corner_freq.unwrap(), c1.corner_freq.unwrap());
    let (g0, g1) = (c0.agreement.unwrap(), c1.agreement.unwrap());
    let ok = within(f0, 0.5, 0.05) && within(f1, 0.110, 0.03) && g0 >= 0.9 && g1 >= 0.9;
    outcome(
        ok,
        format!(
            "delta=0: corner {f0:.4}, agreement {g0:.4}; delta=1: corner {f1:.4} (Φ(-1.2247)=0.1103), agreement {g1:.4}, KS {:.4}",
            c1.ks_distance.unwrap_or(f64::NAN)
        ),
    )
}

fn crossover_at_boundary() -> Outcome {
    let cfg = |delta: f64, seed: u64| {
        let mut c = SimConfig::new(SimKind::Risk, 2000, delta, 4000, seed);
        c.estimand = "quantile:0.75".into();
        c.rules = vec!["narrow".into(), "wide".into()];
        c
    };
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let at_star = risk_sim_draws(&cfg(tolerance_threshold().delta_star, 201)).unwrap();
    let ratio = mean(&at_star.sq_err[0]) / mean(&at_star.sq_err[1]);
    let zero = risk_sim_draws(&cfg(0.0, 202)).unwrap();
    let two = risk_sim_draws(&cfg(2.0, 203)).unwrap();
    let (d0, se0) = zero.paired_difference(1, 0);
    let (d2, se2) = two.paired_difference(0, 1);
    let ok = within(ratio, 1.0, 0.1) && d0 > 3.0 * se0 && d2 > 3.0 * se2;
    outcome(
        ok,
        format!(
            "delta*: narrow/wide n·MSE ratio {ratio:.4}; delta=0: wide-narrow {d0:.4} (paired SE {se0:.4}); delta=2: narrow-wide {d2:.4} (paired SE {se2:.4})"
        ),
    )
}

fn scale_mixture_consistency() -> Outcome {
    let gap = (0..=400)
        .map(|i| {
            let z = -8.0 + 0.04 * i as f64;
            (mixture_r(z, &MixtureSpec::T) - penalty_r(z)).abs()
        })
        .fold(0.0, f64::max);
    let n = 100.0;
    let coeff = mixture_tolerance(&MixtureSpec::T, n).unwrap() * n.sqrt();
    let t = tolerance_threshold();
    let ok = gap <= 1e-12 && within(coeff, 0.3429, 5e-4) && within(coeff, t.delta_star * MixtureSpec::T.k2, 1e-6);
    outcome(ok, format!("max|mixture_R - R| = {gap:.1e}; tolerance·√n = {coeff:.6} vs delta*·k2 = {:.6}", t.delta_star * 0.5))
}

fn diagnostics() -> Outcome {
    let a = tolerance_threshold().a_star;
    let p05 = t_test_power(a, 0.05).unwrap();
    let p10 = t_test_power(a, 0.10).unwrap();
    let cov0 = coverage_narrow_ci(0.0, 2.0, 1.0, 1.645).unwrap();
    let rep = run(&SimConfig::new(SimKind::Coverage, 2000, 2.0, 4000, 301)).unwrap();
    let (mc, pred) = (rep.coverage.unwrap(), rep.predicted.unwrap());
    let ok = within(p05, 0.210, 0.001) && within(p10, 0.329, 0.001) && within(cov0, 0.900, 5e-4) && within(mc, pred, 0.03) && mc < 0.88;
    outcome(
        ok,
        format!("power(.05)={p05:.4} power(.10)={p10:.4}; coverage at b=0 {cov0:.5}; q.75 at delta=2: MC {mc:.4} vs formula {pred:.4}"),
    )
}

fn quasi_t() -> Outcome {
    let q = QuasiT::new(QUASI_T_MIN_CUTOFF).unwrap();
    let int_a = q.integrate_against_phi(|_| 1.0).unwrap();
    let c = q.cutoff();
    let tol = Tolerance { abs: 1e-13, rel: 1e-12 };
    let mut dens_ok = true;
    let mut masses = Vec::new();
    for gamma in [-0.15, 0.15] {
        let d = q.density(gamma).unwrap();
        let f = |z: f64| d.log_density(z, 0.0, 1.0).unwrap().exp();
        dens_ok &= (0..=2400).all(|i| f(-12.0 + 0.01 * i as f64) >= 0.0);
        let mass = integrate_breaks(f, &[-14.0, -c, -1.0, 0.0, 1.0, c, 14.0], tol).unwrap().value;
        dens_ok &= within(mass, 1.0, 1e-9);
        masses.push(mass);
    }
    let kd = q.kurtosis_derivative().unwrap();
    let kappa = quasi_t_kappa(QUASI_T_MIN_CUTOFF).unwrap();
    let ok = int_a.abs() <= 1e-8 && dens_ok && within(kd, 1.244, 0.01) && within(kappa, 1.895, 0.02);
    outcome(
        ok,
        format!(
            "∫φA = {int_a:.1e}; masses {:.12}, {:.12}; kurtosis derivative {kd:.5}; kappa {kappa:.5} (soft check vs 1.895)",
            masses[0], masses[1]
        ),
    )
}

fn property_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(401);
    let mut failures = Vec::new();
    let null = NullPoint::standard();
    for case in 0..30 {
        let y = sample_local(60, &null, 3.0, &mut rng).unwrap();
        let (a, b) = (rng.random_range(-50.0..50.0), rng.random_range(0.1..20.0) * if case % 2 == 0 { 1.0 } else { -1.0 });
        let yt: Vec<f64> = y.iter().map(|v| a + b * v).collect();
        let (w, wt) = (fit_wide(&y, &FitOptions::default()).unwrap(), fit_wide(&yt, &FitOptions::default()).unwrap());
        let n = fit_narrow(&y).unwrap();
        let eq = within(wt.xi(), a + b * w.xi(), 1e-6 * b.abs() * w.sigma.max(1.0))
            && within(wt.sigma, b.abs() * w.sigma, 1e-6 * b.abs() * w.sigma)
            && within(wt.gamma, w.gamma, 1e-6)
            && within(wt.loglik, w.loglik - 60.0 * b.abs().ln(), 1e-7 * w.loglik.abs());
        if !eq {
            failures.push(format!("equivariance case {case}"));
        }
        if w.loglik < n.loglik - 1e-9 {
            failures.push(format!("nesting case {case}"));
        }
    }
    for &m in &[1.0, 2.5, 5.0, 30.0, 150.0, 1e4] {
        for i in 1..100 {
            let p = i as f64 / 100.0;
            let back = t_cdf(t_quantile(p, m).unwrap(), m).unwrap();
            if !within(back, p, 1e-12) {
                failures.push(format!("round trip p={p} m={m}"));
            }
        }
    }
    let cfg = SimConfig::new(SimKind::Corner, 300, 1.0, 200, 402);
    let serial = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(|| run(&cfg).unwrap());
    let parallel = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap().install(|| run(&cfg).unwrap());
    if serial.to_json().unwrap() != parallel.to_json().unwrap() {
        failures.push("determinism across thread counts".into());
    }
    outcome(failures.is_empty(), if failures.is_empty() { "equivariance, nesting, round trips, determinism".to_string() } else { failures.join("; ") })
}

fn quantile_test_power() -> Outcome {
    let delta = delta_from_dof(100, 14.58).unwrap();
    let rep = run(&SimConfig::new(SimKind::QuantileTest, 100, delta, 1000, 501)).unwrap();
    let r = rep.rejection.unwrap();
    outcome(within(r, 0.13, 0.04), format!("rejection {r:.3} at n=100, m=14.58, B=500, 1000 replicates"))
}

fn main() {
    type Check = (&'static str, &'static str, Option<Duration>, fn() -> Outcome);
    let checks: [Check; 11] = [
        ("1", "threshold constants", Some(Duration::from_secs(1)), threshold_constants),
        ("2", "risk table reproduction", Some(Duration::from_secs(10)), risk_table_reproduction),
        ("3", "closed form vs quadrature", None, closed_form_equivalence),
        ("4", "information identities", Some(Duration::from_secs(30)), information_identities),
        ("5", "corner asymptotics", Some(Duration::from_secs(300)), corner_asymptotics),
        ("6", "crossover at the tolerance boundary", Some(Duration::from_secs(600)), crossover_at_boundary),
        ("7", "scale-mixture consistency", None, scale_mixture_consistency),
        ("8", "diagnostics", None, diagnostics),
        ("9", "quasi-t", None, quasi_t),
        ("10", "property suite", None, property_suite),
        ("D", "quantile-statistic power", None, quantile_test_power),
    ];
    let mut failed = 0;
    for (id, name, limit, f) in checks {
        let start = Instant::now();
        let o = f();
        let took = start.elapsed();
        let in_time = limit.is_none_or(|l| took <= l);
        let pass = o.pass && in_time;
        if !pass {
            failed += 1;
        }
        let budget = limit.map_or(String::new(), |l| format!(" / {}s budget", l.as_secs()));
        println!(
            "{} [{id}] {name}: {} ({:.2}s{budget}){}",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            took.as_secs_f64(),
            if in_time { "" } else { " over time budget" }
        );
    }
    println!("acceptance: {} of {} criteria passed", 11 - failed, 11);
    if failed > 0 {
        std::process::exit(1);
    }
}
