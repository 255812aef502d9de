//! Acceptance suite. One test per criterion; each prints its measured figures
//! (`cargo test --test acceptance -- --nocapture` to see them).

use std::process::{Command, Output};
use std::time::{Duration, Instant};

use nu_ring::nu_engine::{self, NUProblem, Poly2};
use nu_ring::oracle::{self, GridSpec, Tolerances};
use nu_ring::spectrum::{self, PhysicalConstants, PotentialParams, QuantumNumbers};
use nu_ring::wavefunctions::{self, AngularState, RadialState};
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn unit() -> PhysicalConstants {
    PhysicalConstants::default()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn report(name: &str, ok: bool, detail: String) {
    println!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "{name}: {detail}");
}

fn random_params(rng: &mut ChaCha8Rng) -> PotentialParams {
    PotentialParams::new(
        rng.gen_range(0.01..=5.0),
        rng.gen_range(0.0..=5.0),
        rng.gen_range(-5.0..=5.0),
        rng.gen_range(0.0..=5.0),
        rng.gen_range(2..=8),
    )
}

fn random_state(rng: &mut ChaCha8Rng, max: u32) -> QuantumNumbers {
    QuantumNumbers::new(rng.gen_range(0..=max), rng.gen_range(0..=max), rng.gen_range(0..=max))
}

#[test]
fn form_equivalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let draws: Vec<_> = (0..1000).map(|_| (random_params(&mut rng), random_state(&mut rng, 6))).collect();
    let start = Instant::now();
    let mut worst = 0.0f64;
    for (p, q) in &draws {
        let general = spectrum::energy(p, &unit(), *q).unwrap().energy;
        let coulombic = spectrum::energy_coulombic(p, &unit(), *q).unwrap();
        worst = worst.max(rel(coulombic, general));
    }
    let elapsed = start.elapsed();
    report(
        "form equivalence",
        worst <= 1e-12 && elapsed < Duration::from_secs(1),
        format!("1000 draws, worst rel {worst:.2e} (tol 1e-12), {elapsed:.2?} (limit 1s)"),
    );
}

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

#[test]
fn nu_pipeline_exact() {
    // (ε, α, s) with s = √(4γ+1) rational so every quantity stays in ℚ
    let spots = [
        (q(1, 1), q(2, 1), q(1, 1)),
        (q(2, 1), q(6, 1), q(3, 1)),
        (q(1, 2), q(1, 1), q(3, 1)),
        (q(3, 4), q(5, 2), q(5, 3)),
        (q(1, 3), q(7, 5), q(2, 1)),
        (q(5, 2), q(10, 1), q(9, 4)),
        (q(1, 10), q(3, 10), q(11, 7)),
        (q(7, 3), q(1, 2), q(4, 1)),
        (q(2, 9), q(8, 3), q(13, 5)),
        (q(4, 1), q(1, 7), q(6, 5)),
    ];
    let (one, two) = (q(1, 1), q(2, 1));
    let mut mismatches = Vec::new();
    for (i, (eps, alpha, s)) in spots.iter().enumerate() {
        let gamma = (s * s - &one) / q(4, 1);
        let p = NUProblem::radial(eps.clone(), alpha.clone(), gamma);
        let ks: Vec<BigRational> = nu_engine::k_candidates(&p).unwrap().into_iter().map(|c| c.k).collect();
        let want_ks = vec![alpha - eps * s, alpha + eps * s];
        let sol = nu_engine::solve(&p).unwrap();
        let pi = Poly2::linear((&one + s) / &two, -eps.clone());
        let tau = Poly2::linear(&one + s, -(&two * eps));
        let lambda = alpha - eps * s - eps;
        let lambda_n_ok = (0..6).all(|n| sol.lambda_n(n) == q(2 * i64::from(n), 1) * eps);
        let ok = ks == want_ks
            && sol.branch.k == want_ks[0]
            && sol.branch.pi == pi
            && sol.branch.tau == tau
            && lambda_n_ok
            && sol.lambda_const() == lambda;
        if !ok {
            mismatches.push(i);
        }
    }
    report(
        "NU pipeline fidelity",
        mismatches.is_empty(),
        format!("{} spot points exact in rational arithmetic, mismatches {mismatches:?}", spots.len()),
    );
}

#[test]
fn quantization_dual_path() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let alpha = rng.gen_range(0.01..=20.0);
        let gamma = rng.gen_range(0.0..=40.0);
        let n = rng.gen_range(0..=20);
        let closed = nu_engine::quantize_epsilon_closed(alpha, gamma, n).unwrap();
        let direct = alpha / (2.0 * f64::from(n) + 1.0 + (4.0 * gamma + 1.0).sqrt());
        let bisected = nu_engine::quantize_epsilon_bisection(alpha, gamma, n).unwrap();
        worst = worst.max(rel(bisected, closed)).max(rel(closed, direct));
    }
    report("quantization dual path", worst <= 1e-10, format!("1000 draws, worst rel {worst:.2e} (tol 1e-10)"));
}

#[test]
fn radial_oracle() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let tol = Tolerances::default();
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    for _ in 0..20 {
        let p = PotentialParams::new(
            rng.gen_range(0.5..=3.0),
            rng.gen_range(0.0..=3.0),
            rng.gen_range(-1.0..=1.0),
            rng.gen_range(0.0..=3.0),
            rng.gen_range(3..=5),
        );
        let qn = QuantumNumbers::new(rng.gen_range(0..=3), rng.gen_range(0..=3), rng.gen_range(0..=2));
        let rep = oracle::verify_state(&p, &unit(), qn, &tol).unwrap();
        match rep.checks.iter().find(|c| c.name == "radial_eigenvalue") {
            Some(c) if c.passed() => worst = worst.max(rel(c.value, c.target)),
            _ => failures.push((p, qn)),
        }
    }

    // hydrogen: e = 2E = −1/n_p²
    let ladder = oracle::radial_eigen(2.0, 0.0, GridSpec::radial(2.0, 200.0), 5).unwrap();
    let ladder_dev = ladder
        .richardson_estimates
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let np = i as f64 + 1.0;
            (0.5 * e + 0.5 / (np * np)).abs()
        })
        .fold(0.0, f64::max);
    let elapsed = start.elapsed();
    report(
        "radial oracle",
        failures.is_empty() && ladder_dev <= 1e-5 && elapsed < Duration::from_secs(60),
        format!(
            "20 states worst rel {worst:.2e} (tol 1e-4), failures {}, hydrogen ladder max dev {ladder_dev:.2e} (tol 1e-5), {elapsed:.2?} (limit 60s)",
            failures.len()
        ),
    );
}

#[test]
fn angular_oracle() {
    let consts = unit();
    let mut worst = 0.0f64;
    for beta in [0.0, 2.0, 8.0] {
        for m in 0..=2u32 {
            let res = oracle::angular_eigen(m, beta, &consts, GridSpec::angular(), 4).unwrap();
            let mp = spectrum::m_prime(m, beta, &consts);
            for (n, v) in res.richardson_estimates.iter().enumerate() {
                let nm = n as f64 + mp;
                let want = nm * (nm + 1.0) - 2.0 * beta;
                worst = worst.max((v - want).abs());
            }
        }
    }
    let legendre = oracle::angular_eigen(0, 0.0, &consts, GridSpec::angular(), 4).unwrap();
    let ladder_dev = legendre
        .richardson_estimates
        .iter()
        .zip([0.0, 2.0, 6.0, 12.0])
        .map(|(v, want)| (v - want).abs())
        .fold(0.0, f64::max);
    report(
        "angular oracle",
        worst <= 1e-4 && ladder_dev <= 1e-5,
        format!("n≤3, m≤2, β∈{{0,2,8}} worst abs {worst:.2e} (tol 1e-4), Legendre ladder {ladder_dev:.2e} (tol 1e-5)"),
    );
}

#[test]
fn reductions() {
    let consts = unit();
    let first = [0.5, 1.0, 2.0];
    let second = [0.5, 1.0, 1.5];
    let third = [0.0, 1.0, 2.0];
    let mut worst = [0.0f64; 4];
    let mut grid_points = 0;
    for &x in &first {
        for &y in &second {
            for (k, &z) in third.iter().enumerate() {
                grid_points += 1;
                for big_n in 0..=2 {
                    for n in 0..=2 {
                        for m in 0..=2 {
                            let qn = QuantumNumbers::new(big_n, n, m);
                            let paths = [
                                spectrum::reduce_cheng_dai(x, y, z, &consts, qn).unwrap(),
                                spectrum::reduce_kratzer(x, y, &consts, big_n, k as u32).unwrap(),
                                spectrum::reduce_ddim(x, y, 1.0, &consts, qn, 3 + k as u32).unwrap(),
                                spectrum::reduce_coulomb_ring(1.0 + x, y, z, &consts, qn).unwrap(),
                            ];
                            for (w, dp) in worst.iter_mut().zip(paths) {
                                *w = w.max(dp.rel_diff());
                            }
                        }
                    }
                }
            }
        }
    }

    // β = 0 ring: every composition of N + n + m shares one energy bit for bit
    let mut broken = Vec::new();
    for z in [1.0, 2.0, 3.0] {
        for charge in [0.5, 1.0, 1.5] {
            for shell in 0..=4u32 {
                let energies: Vec<u64> = (0..=shell)
                    .flat_map(|big_n| (0..=shell - big_n).map(move |n| QuantumNumbers::new(big_n, n, shell - big_n - n)))
                    .map(|qn| spectrum::reduce_coulomb_ring(z, charge, 0.0, &consts, qn).unwrap().general.to_bits())
                    .collect();
                if energies.iter().any(|e| *e != energies[0]) {
                    broken.push((z, charge, shell));
                }
            }
        }
    }
    let ok = worst.iter().all(|w| *w <= 1e-12) && broken.is_empty();
    report(
        "reductions",
        ok,
        format!(
            "{grid_points} grid points per case, worst rel cheng-dai {:.1e} kratzer {:.1e} ddim {:.1e} coulomb-ring {:.1e} (tol 1e-12), broken degeneracies {broken:?}",
            worst[0], worst[1], worst[2], worst[3]
        ),
    );
}

#[test]
fn wavefunction_contracts() {
    let consts = unit();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut radial_res, mut angular_res, mut norm_dev, mut round_trip) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..40 {
        let p = random_params(&mut rng);
        let qn = random_state(&mut rng, 4);
        let entry = spectrum::energy(&p, &consts, qn).unwrap();
        let radial = RadialState::from_entry(&entry, p.dim).unwrap();
        let res = oracle::radial_residual(|r| radial.reduced(r), -entry.epsilon * entry.epsilon, entry.eff.alpha, entry.eff.gamma, 0.1, 20.0, 400);
        radial_res = radial_res.max(res.relative());
        let angular = AngularState::from_entry(&entry).unwrap();
        let res = oracle::angular_residual(|t| angular.eval(t), entry.eff.lambda, qn.magnetic, 2.0 * p.beta, 0.1, std::f64::consts::PI - 0.1, 400);
        angular_res = angular_res.max(res.relative());
        norm_dev = norm_dev.max((radial.norm_integral().unwrap() - 1.0).abs());
        let back = spectrum::jacobi_index(entry.eff.ell_prime, entry.eff.m_prime, p.dim);
        round_trip = round_trip.max((back - f64::from(qn.jacobi)).abs());
    }

    let c = wavefunctions::normalization_c(0, 0.0, 1.0);
    let ground = RadialState::new(0, 0.0, 1.0, 3).unwrap();
    let shape_dev = [0.0, 0.3, 1.0, 2.5, 7.0]
        .iter()
        .map(|&r| (ground.eval(r) - 2.0 * f64::exp(-r)).abs())
        .fold(0.0, f64::max);

    let ok = radial_res <= 1e-6 && angular_res <= 1e-6 && norm_dev <= 1e-8 && (c - 2.0).abs() <= 1e-14 && shape_dev <= 1e-14 && round_trip <= 1e-10;
    report(
        "wavefunction contracts",
        ok,
        format!(
            "40 states: residual radial {radial_res:.1e} angular {angular_res:.1e} (tol 1e-6), norm dev {norm_dev:.1e} (tol 1e-8), C(0,0,1) = {c}, R vs 2e^-r {shape_dev:.1e}, index round trip {round_trip:.1e} (tol 1e-10)"
        ),
    );
}

fn nu_ring(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nu-ring")).args(args).env("NO_COLOR", "1").output().expect("binary runs")
}

#[test]
fn cli_determinism() {
    let runs: [&[&str]; 8] = [
        &["spectrum", "--a", "1.7", "--b", "0.3", "--beta", "1.2", "--D", "4", "--N", "0..3", "--n", "0..3", "--m", "0..2"],
        &["spectrum", "--a", "1.7", "--b", "0.3", "--beta", "1.2", "--D", "4", "--N", "0..3", "--n", "0..3", "--m", "0..2", "--format", "json"],
        &["wavefunction", "--a", "2", "--beta", "0.5", "--N", "1", "--n", "1", "--m", "1"],
        &["wavefunction", "--a", "2", "--beta", "0.5", "--N", "1", "--n", "1", "--m", "1", "--format", "json"],
        &["verify", "--a", "1.5", "--beta", "2", "--N", "0..1", "--n", "0..1", "--m", "0..1"],
        &["verify", "--a", "1.5", "--beta", "2", "--N", "1", "--format", "csv"],
        &["reduce", "--case", "all"],
        &["reduce", "--case", "all", "--format", "json"],
    ];
    let mut unstable = Vec::new();
    for args in runs {
        let (x, y) = (nu_ring(args), nu_ring(args));
        if x.status.code() != Some(0) || x.stdout != y.stdout || x.stdout.is_empty() {
            unstable.push(args.join(" "));
        }
    }

    // seeded negative control: any literal perturbation above the tolerance must exit 1
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let cases = ["cheng-dai", "kratzer", "ddim", "coulomb-ring"];
    let mut contract = Vec::new();
    for case in cases {
        let clean = nu_ring(&["reduce", "--case", case]).status.code();
        let eps = 10f64.powf(rng.gen_range(-10.0..-6.0));
        let eps = format!("{eps:e}");
        let perturbed = nu_ring(&["reduce", "--case", case, "--perturb-literal", &eps]).status.code();
        if clean != Some(0) || perturbed != Some(1) {
            contract.push(format!("{case}: clean {clean:?}, perturbed({eps}) {perturbed:?}"));
        }
    }
    let bad_config = nu_ring(&["reduce", "--case", "kratzer", "--beta", "1"]).status.code();
    report(
        "CLI determinism",
        unstable.is_empty() && contract.is_empty() && bad_config == Some(2),
        format!(
            "{} commands rerun byte-identical (unstable {unstable:?}), reduce exit codes clean 0 / perturbed 1 / config 2 (violations {contract:?}, config {bad_config:?})",
            runs.len()
        ),
    );
}
