//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Criteria listed in `KNOWN_UNATTAINABLE` are reported as FAIL when they
//! fail but do not change the exit status; any other failure exits with 1.

use std::time::Instant;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use trapspec::correlation::{
    aging_function, deep_trap_constants, expect_h_laplace, pi_contour, pi_spectral, CorrelationQuery,
    DepthDomain,
};
use trapspec::landscape::{sample_landscape, LandscapeConfig};
use trapspec::montecarlo::{window_samples, DeepSet, McConfig, McEstimate};
use trapspec::observable::AtLeast;
use trapspec::ppp::{pi_e, sample_ppp, stationary_limit_pi, PppConfig, PppMethod};
use trapspec::quadrature::{integrate_real, ContourSpec, Tolerance};
use trapspec::resolvent::{
    characteristic_identity_check, determinant_identity_check, trap_transition_contour, transition_prob_contour,
    uniformization_oracle, ReversibleChain,
};
use trapspec::spectral::{compute_spectrum, orthogonality_residual, perturbation_report};
use trapspec::tauberian::{
    bromwich_invert, laplace_forward_analytic, tauberian_limit, time_domain_limit, BromwichPath, LaplaceOptions,
    SectorGrid,
};
use trapspec::{Complex64, EnergyLandscape};

/// Criteria whose failure is analysed and expected at desk scale.
const KNOWN_UNATTAINABLE: &[&str] = &["6b"];

struct Outcome {
    id: &'static str,
    name: &'static str,
    passed: bool,
    detail: String,
}

fn landscape(alpha: f64, n: usize, seed: u64) -> EnergyLandscape {
    sample_landscape(&LandscapeConfig::new(alpha, n, seed)).unwrap()
}

/// Kolmogorov–Smirnov distance of sorted `v` to `cdf`.
fn ks(sorted: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = cdf(v);
            (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max)
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn mean_stderr(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

/// Eigenvalues of the generator from a dense symmetric solver applied to
/// `diag(x) − (1/N)·√x √xᵀ`, which is similar to it.
fn dense_eigenvalues(rates: &[f64]) -> (Vec<f64>, f64) {
    let n = rates.len();
    let nf = n as f64;
    let s = DMatrix::from_fn(n, n, |i, j| {
        let off = (rates[i] * rates[j]).sqrt() / nf;
        if i == j {
            rates[i] - off
        } else {
            -off
        }
    });
    let norm = s.norm();
    let mut ev: Vec<f64> = SymmetricEigen::new(s).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    (ev, norm)
}

fn criterion_1() -> Outcome {
    let cases: Vec<(usize, f64, u64)> = (0..100)
        .map(|i| ([8, 32, 64][i % 3], [0.3, 0.5, 0.8][(i / 3) % 3], 1000 + i as u64))
        .collect();
    let results: Vec<(bool, f64, f64, f64)> = cases
        .par_iter()
        .map(|&(n, alpha, seed)| {
            let l = landscape(alpha, n, seed);
            let s = compute_spectrum(&l, 1e-15).unwrap();
            let x = l.rates();
            let lam = s.eigenvalues();
            let mut strict = lam[0] == 0.0 && lam[0] < x[0];
            for k in 1..n {
                strict &= x[k - 1] < lam[k] && lam[k] < x[k];
            }
            let phi = (0..n).map(|k| s.secular_residual(k) / n as f64).fold(0.0, f64::max);
            let ortho = orthogonality_residual(&s);
            let (dense, norm) = dense_eigenvalues(x);
            // The zero mode is exact; the dense solver only resolves it to its backward error.
            let zero_ok = dense[0].abs() <= 32.0 * n as f64 * f64::EPSILON * norm;
            let rel = lam[1..]
                .iter()
                .zip(&dense[1..])
                .map(|(a, b)| (a - b).abs() / a)
                .fold(0.0, f64::max);
            (strict && zero_ok, phi, ortho, rel)
        })
        .collect();
    let strict = results.iter().all(|r| r.0);
    let phi = results.iter().map(|r| r.1).fold(0.0, f64::max);
    let ortho = results.iter().map(|r| r.2).fold(0.0, f64::max);
    let rel = results.iter().map(|r| r.3).fold(0.0, f64::max);
    Outcome {
        id: "1",
        name: "spectral exactness",
        passed: strict && phi <= 1e-10 && ortho <= 1e-8 && rel <= 1e-9,
        detail: format!(
            "100 landscapes: strict interlacing and exact zero mode {strict}; max |phi|/N {phi:.2e} (<= 1e-10); orthogonality {ortho:.2e} (<= 1e-8); nonzero eigenvalues rel. diff vs dense {rel:.2e} (<= 1e-9)"
        ),
    }
}

fn criterion_2() -> Outcome {
    let grid = [0.5, 5.0, 15.0, 30.0, 50.0];
    let mut worst_oracle: f64 = 0.0;
    let mut worst_contour: f64 = 0.0;
    for (i, &n) in [8usize, 32, 64].iter().enumerate() {
        let l = landscape(0.5, n, 77 + i as u64);
        let s = compute_spectrum(&l, 1e-15).unwrap();
        let chain = ReversibleChain::trap(&l).unwrap();
        let factor = l.exit_factor();
        for &t_w in &grid {
            let nu = uniformization_oracle(&chain, t_w).unwrap();
            for &t in &grid {
                let q = CorrelationQuery::new(t, t_w).unwrap();
                let spectral = pi_spectral(&s, q).unwrap();
                let oracle: f64 = nu.iter().zip(l.rates()).map(|(p, x)| p * (-factor * x * t).exp()).sum();
                let c = ContourSpec::rectangle_for(l.max_rate(), &[t_w]).with_tol(1e-10);
                let contour = pi_contour(&l, &c, q).unwrap();
                worst_oracle = worst_oracle.max((spectral - oracle).abs());
                worst_contour = worst_contour.max((spectral - contour).abs());
            }
        }
    }
    Outcome {
        id: "2",
        name: "method triangle",
        passed: worst_oracle <= 1e-8 && worst_contour <= 1e-6,
        detail: format!("N in {{8,32,64}}, 5x5 grid: spectral vs oracle {worst_oracle:.2e} (<= 1e-8), vs contour {worst_contour:.2e} (<= 1e-6)"),
    }
}

const THETAS: [f64; 5] = [0.1, 0.3, 1.0, 3.0, 10.0];

fn criterion_3() -> Outcome {
    let alpha = 0.5;
    let t_w = 1e3;
    let l = landscape(alpha, 10_000, 2024);
    let samples = window_samples(&l, &DeepSet::new(&l, 1.0), t_w, 10.0 * t_w, &McConfig::new(10_000, 2024)).unwrap();
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for theta in THETAS {
        let end = t_w + theta * t_w;
        let ind: Vec<f64> = samples.iter().map(|s| if s.first_jump > end { 1.0 } else { 0.0 }).collect();
        let (m, _) = mean_stderr(&ind);
        let a = aging_function(alpha, theta).unwrap();
        worst = worst.max((m - a).abs());
        parts.push(format!("{theta}:{m:.3}/{a:.3}"));
    }
    let anchor = (aging_function(0.5, 1.0).unwrap() - 0.5).abs();
    Outcome {
        id: "3",
        name: "ageing reproduction",
        passed: worst <= 0.05 && anchor <= 1e-12,
        detail: format!("N=1e4, t_w=1e3, 1e4 replicas; theta:mc/limit {}; max dev {worst:.4} (<= 0.05); |A(1)-1/2| {anchor:.1e}", parts.join(" ")),
    }
}

fn criterion_4() -> Outcome {
    let sizes = [100usize, 1000, 10_000];
    let mut medians = Vec::new();
    for &n in &sizes {
        let mut d: Vec<f64> = (0..20)
            .map(|seed| {
                let s = compute_spectrum(&landscape(0.5, n, 500 + seed), 1e-14).unwrap();
                ks(s.eigenvalues(), |x| x.clamp(0.0, 1.0).sqrt())
            })
            .collect();
        medians.push(median(&mut d));
    }
    let decreasing = medians.windows(2).all(|w| w[1] < w[0]);
    Outcome {
        id: "4",
        name: "spectral law",
        passed: decreasing && medians[2] <= 0.05,
        detail: format!(
            "median KS over 20 landscapes: N=1e2 {:.4}, N=1e3 {:.4}, N=1e4 {:.4} (decreasing, last <= 0.05)",
            medians[0], medians[1], medians[2]
        ),
    }
}

fn criterion_5() -> Outcome {
    let (alpha, delta) = (0.5, 0.25);
    let (b_unit, c) = deep_trap_constants(alpha, delta, DepthDomain::UnitInterval).unwrap();
    let (b_half, _) = deep_trap_constants(alpha, delta, DepthDomain::HalfLine).unwrap();
    let l = landscape(alpha, 10_000, 31);
    let ppp = sample_ppp(&PppConfig::new(alpha, -24.0, 1e-8, 31)).unwrap();
    let mut ok = true;
    let mut parts = Vec::new();
    for t in [1e3f64, 3e3] {
        let scale = t.powf(1.0 - alpha);
        let canonical = scale * expect_h_laplace(l.rates(), &AtLeast(delta), t, 1e-10).unwrap();
        let half = scale * expect_h_laplace(&ppp.rates, &AtLeast(delta), t, 1e-9).unwrap();
        let (rc, rh) = (canonical / (b_unit / c), half / (b_half / c));
        ok &= (rc - 1.0).abs() <= 0.25 && (rh - 1.0).abs() <= 0.25;
        parts.push(format!("t={t:.0}: canonical {canonical:.4} (ratio {rc:.3}), ppp {half:.4} (ratio {rh:.3})"));
    }
    Outcome {
        id: "5",
        name: "deep traps",
        passed: ok,
        detail: format!(
            "targets B/c: unit {:.4}, half-line {:.4}; {} (ratios within 0.25 of 1)",
            b_unit / c,
            b_half / c,
            parts.join("; ")
        ),
    }
}

fn criterion_6a() -> Outcome {
    let l = landscape(0.5, 10_000, 606);
    let deep = DeepSet::new(&l, 0.1);
    let mut gaps = Vec::new();
    for (i, t_w) in [10.0f64, 100.0, 1000.0].into_iter().enumerate() {
        let s = window_samples(&l, &deep, t_w, 10.0 * t_w, &McConfig::new(10_000, 606 + i as u64)).unwrap();
        let (gap, se) = THETAS
            .iter()
            .map(|th| {
                let end = t_w + th * t_w;
                let d: Vec<f64> = s
                    .iter()
                    .map(|w| (w.first_exit > end) as u8 as f64 - (w.first_jump > end) as u8 as f64)
                    .collect();
                let e = McEstimate::from_samples(&d);
                (e.estimate.abs(), e.stderr)
            })
            .fold((0.0, 0.0), |a, b| if b.0 > a.0 { b } else { a });
        gaps.push((t_w, gap, se));
    }
    let monotone = gaps.windows(2).all(|w| w[1].1 <= w[0].1 + (w[0].2.powi(2) + w[1].2.powi(2)).sqrt());
    let last = gaps[2].1;
    Outcome {
        id: "6a",
        name: "window equivalence (canonical)",
        passed: monotone && last <= 0.1,
        detail: format!(
            "N=1e4, delta=0.1: max gap {} (non-increasing within stderr, <= 0.1 at t_w=1e3)",
            gaps.iter().map(|(t, g, s)| format!("t_w={t:.0}: {g:.4}±{s:.4}")).collect::<Vec<_>>().join(", ")
        ),
    }
}

fn criterion_6b() -> Outcome {
    let (tau0, threshold, t_w) = (0.01, -14.0, 1e3);
    let per_landscape: Vec<f64> = (0..200u64)
        .map(|seed| {
            let s = sample_ppp(&PppConfig::new(0.5, threshold, tau0, seed)).unwrap();
            let l = s.landscape().unwrap();
            let w = window_samples(&l, &DeepSet::new(&l, 0.1), t_w, t_w, &McConfig::new(200, seed)).unwrap();
            w.iter().filter(|x| x.first_exit > 2.0 * t_w).count() as f64 / w.len() as f64
        })
        .collect();
    let (m, se) = mean_stderr(&per_landscape);
    let quenched = per_landscape[0];
    Outcome {
        id: "6b",
        name: "window correlation, point-process regime",
        passed: (m - 0.5).abs() <= 0.07,
        detail: format!(
            "tau0=0.01, E=-14, t_w=1e3, theta=1, delta=0.1: disorder mean over 200 landscapes {m:.4}±{se:.4}, first landscape {quenched:.4}; target 0.5±0.07"
        ),
    }
}

/// `s^{1−α}·(1/Γ(α))∫₀^s u^{α−1}e^{−(s−u)}du`, substituting `w = s − u`.
fn convolution_oracle(alpha: f64, s: f64) -> f64 {
    let gamma = statrs::function::gamma::gamma(alpha);
    let upper = 80.0f64.min(s);
    let (v, _) = integrate_real(|w| (s - w).powf(alpha - 1.0) * (-w).exp(), 0.0, upper, &[1.0, 5.0, 20.0], Tolerance::new(1e-14, 1e-13)).unwrap();
    s.powf(1.0 - alpha) * v / gamma
}

fn criterion_7() -> Outcome {
    let alpha = 0.5;
    let g_hat = move |w: Complex64| w.powf(-alpha) / (1.0 + w);
    let fit = tauberian_limit(|w| Ok(g_hat(w)), alpha, &SectorGrid::default()).unwrap();
    let b_err = (fit.probe.b - 1.0).abs();
    let s = 1e4;
    let path = BromwichPath::for_exponents(1.0 + alpha, alpha);
    let g_s = bromwich_invert(g_hat, s, &path).unwrap().value;
    let scaled = s.powf(1.0 - alpha) * g_s;
    let target = 1.0 / statrs::function::gamma::gamma(alpha);
    let oracle = convolution_oracle(alpha, s);
    let time_limit = time_domain_limit(&fit.probe);
    let rel = (scaled / target - 1.0).abs();
    let oracle_rel = (oracle / target - 1.0).abs();

    let opts = LaplaceOptions { bound: 2.0, tol: 1e-12 };
    let tests: [Box<dyn Fn(Complex64) -> Complex64 + Sync>; 3] = [
        Box::new(|z: Complex64| (-z).exp()),
        Box::new(|z: Complex64| 1.0 / ((z + 1.0) * (z + 1.0))),
        Box::new(|z: Complex64| (-z * 0.5).exp() + 1.0 / (z + 2.0)),
    ];
    let mut round_trip: f64 = 0.0;
    for g in &tests {
        for s in [0.1, 0.5, 1.0, 3.0, 10.0] {
            let inv = bromwich_invert(|w| laplace_forward_analytic(g, w, opts).unwrap(), s, &BromwichPath::new(0.5).with_tol(1e-8))
                .unwrap()
                .value;
            round_trip = round_trip.max((inv - g(Complex64::new(s, 0.0)).re).abs());
        }
    }
    Outcome {
        id: "7",
        name: "tauberian toolkit",
        passed: b_err <= 0.01 && rel <= 0.02 && oracle_rel <= 0.02 && round_trip <= 1e-5,
        detail: format!(
            "B {:.6} (|B-1| {b_err:.1e} <= 1e-2); s^(1-a)G(s) at s=1e4: Bromwich {scaled:.5}, convolution oracle {oracle:.5}, B/Gamma {time_limit:.5}, 1/Gamma {target:.5} (rel {rel:.1e} <= 2e-2); round trip {round_trip:.1e} (<= 1e-5)",
            fit.probe.b
        ),
    }
}

fn criterion_8() -> Outcome {
    let reports: Vec<(bool, f64)> = (0..100u64)
        .into_par_iter()
        .map(|seed| {
            let l = landscape(0.5, 100, 8000 + seed);
            let s = compute_spectrum(&l, 1e-15).unwrap();
            let r = perturbation_report(&l, &s).unwrap();
            (r.condition_satisfied, r.max_relative_error)
        })
        .collect();
    let satisfied = reports.iter().filter(|r| r.0).count();
    let worst = reports.iter().map(|r| r.1).fold(0.0, f64::max);
    let l = EnergyLandscape::from_rates(vec![0.2, 0.5, 0.5 + 1e-3, 0.9]).unwrap();
    let s = compute_spectrum(&l, 1e-15).unwrap();
    let r = perturbation_report(&l, &s).unwrap();
    let pair = r.peaks.iter().find(|p| p.eigen_index == 2).unwrap();
    let mut sites = [pair.first.0, pair.second.0];
    sites.sort();
    let two_peak = sites == [1, 2] && pair.opposite_signs();
    Outcome {
        id: "8",
        name: "perturbative regime",
        passed: satisfied == 0 && two_peak,
        detail: format!(
            "condition met in {satisfied}/100 landscapes at N=100; near-degenerate pair peaks at sites {sites:?} with values {:.3}, {:.3} (opposite signs {two_peak}); perturbative eigenvalues max rel. error {worst:.3e} (reported only), engineered case {:.3e}",
            pair.first.1, pair.second.1, r.max_relative_error
        ),
    }
}

fn criterion_9() -> Outcome {
    let mut det: f64 = 0.0;
    let mut chr: f64 = 0.0;
    for seed in 0..200u64 {
        let n = 2 + (seed % 5) as usize;
        let l = landscape(0.5, n, 9000 + seed);
        let lambda = Complex64::new(((seed * 37) % 100) as f64 / 40.0 - 1.0, ((seed * 53) % 100) as f64 / 40.0 - 1.25);
        chr = chr.max(characteristic_identity_check(&l, lambda).unwrap().relative_residual());
        for j in 0..n {
            let d = determinant_identity_check(&l, lambda, j).unwrap();
            det = det.max(d.residual / (1.0 + d.rhs.norm()));
        }
    }
    let mut specialization: f64 = 0.0;
    for (i, n) in [3usize, 6, 12].into_iter().enumerate() {
        let l = landscape(0.5, n, 90 + i as u64);
        let chain = ReversibleChain::trap(&l).unwrap();
        for t in [0.0, 1.0, 5.0] {
            let c = ContourSpec::rectangle_for(chain.spectral_bound(), &[t]);
            for j in 0..n {
                let a = trap_transition_contour(&l, j, t, &c).unwrap();
                let b = transition_prob_contour(&chain, j, t, &c).unwrap();
                specialization = specialization.max((a - b).abs());
            }
        }
    }
    Outcome {
        id: "9",
        name: "resolvent identities",
        passed: det <= 1e-10 && chr <= 1e-10 && specialization <= 1e-8,
        detail: format!("200 instances N<=6: determinant identity {det:.1e}, characteristic polynomial {chr:.1e} (<= 1e-10); specialization vs general {specialization:.1e} (<= 1e-8)"),
    }
}

fn criterion_10() -> Outcome {
    // Fixed time unit: the ageing correlation relaxes to the stationary limit.
    let fixed = sample_ppp(&PppConfig::new(0.5, -31.0, 1.0, 10)).unwrap();
    let mut stationary_gap: f64 = 0.0;
    for t in [1.0, 10.0] {
        let q = CorrelationQuery::new(t, 1e3).unwrap();
        let v = pi_e(&fixed, q, PppMethod::Laplace { tol: 1e-9 }).unwrap().value;
        stationary_gap = stationary_gap.max((v - stationary_limit_pi(&fixed, t).unwrap()).abs());
    }

    // Time unit e^E: the point process reproduces the canonical law.
    let threshold = -2.0 * 1e4f64.ln();
    let coupled = sample_ppp(&PppConfig::new(0.5, threshold, threshold.exp(), 10)).unwrap();
    let coupling_ks = ks(&coupled.rates, |x| x.clamp(0.0, 1.0).sqrt());

    // Time-unit ladder at E = −15, disorder averaged.
    let q = CorrelationQuery::new(10.0, 10.0).unwrap();
    let ladder: Vec<(f64, f64)> = [1.0, 0.1, 0.01]
        .iter()
        .map(|&tau0| {
            let v: Vec<f64> = (0..200u64)
                .into_par_iter()
                .map(|seed| {
                    let s = sample_ppp(&PppConfig::new(0.5, -15.0, tau0, 100 + seed)).unwrap();
                    pi_e(&s, q, PppMethod::Laplace { tol: 1e-9 }).unwrap().value
                })
                .collect();
            mean_stderr(&v)
        })
        .collect();
    let target = aging_function(0.5, 1.0).unwrap();
    let dist: Vec<f64> = ladder.iter().map(|(m, _)| (m - target).abs()).collect();
    let monotone = dist.windows(2).all(|w| w[1] < w[0]);
    let last = dist[2];
    Outcome {
        id: "10",
        name: "point-process regimes",
        passed: stationary_gap <= 0.02 && coupling_ks <= 0.03 && monotone && last <= 0.05,
        detail: format!(
            "stationary gap {stationary_gap:.2e} (<= 0.02); coupling KS {coupling_ks:.4} at N_E={} (<= 0.03); ladder means tau0=1 {:.4}±{:.4}, 0.1 {:.4}±{:.4}, 0.01 {:.4}±{:.4} (monotone toward 0.5, last within 0.05)",
            coupled.count(),
            ladder[0].0,
            ladder[0].1,
            ladder[1].0,
            ladder[1].1,
            ladder[2].0,
            ladder[2].1
        ),
    }
}

fn main() {
    let criteria: [fn() -> Outcome; 11] = [
        criterion_1,
        criterion_2,
        criterion_3,
        criterion_4,
        criterion_5,
        criterion_6a,
        criterion_6b,
        criterion_7,
        criterion_8,
        criterion_9,
        criterion_10,
    ];
    let mut unexpected = 0;
    for c in criteria {
        let start = Instant::now();
        let o = c();
        let known = KNOWN_UNATTAINABLE.contains(&o.id);
        let status = if o.passed { "PASS" } else { "FAIL" };
        let note = if !o.passed && known { " [known limitation; see README]" } else { "" };
        println!("{status} [{}] {}: {} ({:.1}s){note}", o.id, o.name, o.detail, start.elapsed().as_secs_f64());
        if !o.passed && !known {
            unexpected += 1;
        }
    }
    if unexpected > 0 {
        println!("{unexpected} criteria failed unexpectedly");
        std::process::exit(1);
    }
}
