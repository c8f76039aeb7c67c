//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use common::*;
use polyqubo::linsys::*;
use polyqubo::polysys::worked_quadratic;
use polyqubo::regression::*;
use polyqubo::solvers::*;
use polyqubo::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Outcome of one criterion: pass flag and a one-line summary.
type Outcome = (bool, String);
type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("worked quadratic system", c1_worked_pubo),
        ("quadratized 10-bit QUBO", c2_worked_qubo),
        ("noiseless regression", c3_regression),
        ("iterative refinement", c4_iterative),
        ("CG scaling", c5_cg_scaling),
        ("energy identity", c6_energy_identity),
        ("quadratization exactness", c7_quadratization),
        ("linear fast path", c8_linear_path),
        ("backward optimality", c9_backward_optimality),
        ("determinism", c10_determinism),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (ok, detail) = catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|e| (false, format!("panicked: {}", panic_message(&e))));
        let tag = if ok { "PASS" } else { "FAIL" };
        println!(
            "criterion {:>2} [{tag}] {name}: {detail} ({:.2}s)",
            k + 1,
            start.elapsed().as_secs_f64()
        );
        failed += usize::from(!ok);
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}

fn panic_message(e: &Box<dyn std::any::Any + Send>) -> String {
    e.downcast_ref::<String>()
        .cloned()
        .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
        .unwrap_or_default()
}

fn c1_worked_pubo() -> Outcome {
    let enc = BitEncoding::uniform(2, 0.0, 3.0, 2).unwrap();
    let pubo = compile_pubo(&worked_quadratic(), &enc).unwrap();
    let r = brute_force(&pubo, &BruteForceOptions::default()).unwrap();
    let x = enc.decode(r.ground_state().as_slice()).unwrap();
    let ok = x == [2.0, 3.0] && r.energy.abs() <= 1e-9;
    (
        ok,
        format!(
            "bits {} decode to {x:?}, energy {:e}",
            r.ground_state(),
            r.energy
        ),
    )
}

fn c2_worked_qubo() -> Outcome {
    let enc = BitEncoding::uniform(2, 0.0, 3.0, 2).unwrap();
    let pubo = compile_pubo(&worked_quadratic(), &enc).unwrap();
    let q = quadratize(&pubo, choose_penalty(&pubo), AuxMode::All).unwrap();
    let r = brute_force(&q, &BruteForceOptions::default()).unwrap();
    let bits = r.ground_state().to_string();
    (
        bits == "0111000111",
        format!(
            "ground state {bits} (penalty {}, {} aux)",
            q.penalty(),
            q.num_aux()
        ),
    )
}

fn c3_regression() -> Outcome {
    let d = generate_dataset(50, 0.9, Noise::None).unwrap();
    let basis = BasisSet::polynomial(2, d.x_grid()).unwrap();
    let enc = BitEncoding::uniform(3, 0.0, 15.0, 4).unwrap();
    let fit = fit_qubo(&d, &basis, &enc, &Backend::default(), FitObjective::Gls).unwrap();
    let bits = fit.bits.to_string();
    let ok = fit.logical_bits == 12 && fit.params == [8.0, 4.0, 7.0] && bits == "000100101110";
    (
        ok,
        format!(
            "{} logical bits, ground state {bits} decodes to {:?}",
            fit.logical_bits, fit.params
        ),
    )
}

fn c4_iterative() -> Outcome {
    let (p1, p0) = conditioned_system(&ConditionedSpec {
        size: 4,
        kappa: 1.1,
        seed: 0,
    })
    .unwrap();
    let enc = BitEncoding::uniform(4, -1.0, 1.0, 4).unwrap();
    let trace = iterate_solve(&p1, &p0, enc, 9, &Backend::default()).unwrap();
    let res = trace.residuals();
    let last = *res.last().unwrap();
    let monotone = res.windows(2).all(|w| w[1] <= w[0]);
    let shown: Vec<String> = res.iter().map(|r| format!("{r:.1e}")).collect();
    (
        last <= 1e-6 && monotone,
        format!(
            "residuals [{}], non-increasing: {monotone}",
            shown.join(", ")
        ),
    )
}

fn c5_cg_scaling() -> Outcome {
    let kappas = [10.0, 100.0, 1e3, 1e4];
    let iters: Vec<usize> = kappas
        .iter()
        .map(|&kappa| {
            let (p1, p0) = conditioned_system(&ConditionedSpec {
                size: 12,
                kappa,
                seed: 0,
            })
            .unwrap();
            conjugate_gradient(&p1, &p0, 1e-6, 10_000)
                .unwrap()
                .iterations
        })
        .collect();
    let xs: Vec<f64> = kappas.iter().map(|k: &f64| k.ln()).collect();
    let ys: Vec<f64> = iters.iter().map(|&i| (i as f64).ln()).collect();
    let slope = least_squares_slope(&xs, &ys);
    let band = (0.5 * 1e4f64.sqrt(), 5.0 * 1e4f64.sqrt());
    let at_max = iters[3] as f64;
    (
        (0.4..=0.8).contains(&slope),
        format!(
            "iterations {iters:?} over kappa {kappas:?}, log-log slope {slope:.3} (target [0.4, 0.8]); \
             kappa=1e4 count {at_max} vs band [{}, {}]",
            band.0, band.1
        ),
    )
}

fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn c6_energy_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    let mut pointwise = 0.0f64;
    let mut states = 0u64;
    let mut widest = 0;
    let systems = 120;
    for k in 0..systems {
        let degree = 1 + k % 2;
        let (vars, bits) = if k % 12 == 0 {
            (2, 8)
        } else {
            let vars = rng.random_range(1..=4);
            (vars, rng.random_range(1..=(12 / vars).min(4)))
        };
        let eqs = rng.random_range(1..=3);
        let sys = random_system(&mut rng, eqs, vars, degree);
        let lo: Vec<f64> = (0..vars).map(|_| rng.random_range(-3.0..0.0)).collect();
        let hi: Vec<f64> = lo.iter().map(|l| l + rng.random_range(0.5..4.0)).collect();
        let enc = BitEncoding::from_range(&lo, &hi, bits).unwrap();
        let pubo = compile_pubo(&sys, &enc).unwrap();
        let n = enc.num_bits();
        widest = widest.max(n);
        // magnitude of the sum that produces each energy
        let scale = pubo.offset().abs() + pubo.abs_coefficient_sum();
        for state in 0..1u64 << n {
            let psi = bits_of(state, n);
            let e = pubo.energy(&psi).unwrap();
            let chi2 = sys.chi_squared(&enc.decode(&psi).unwrap()).unwrap();
            let diff = (e - chi2).abs();
            worst = worst.max(diff / e.abs().max(chi2.abs()).max(scale));
            pointwise = pointwise.max(diff / e.abs().max(chi2.abs()).max(f64::MIN_POSITIVE));
            states += 1;
        }
    }
    (
        worst <= 1e-9,
        format!(
            "{systems} systems up to {widest} bits, {states} states, worst error relative to energy scale {worst:.2e} \
             (relative to the value itself {pointwise:.2e}, largest near roots)"
        ),
    )
}

fn c7_quadratization() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    let mut inconsistent = 0usize;
    let mut instances = 0;
    let mut max_aux = 0;
    while instances < 120 {
        let (n, mode) = if instances % 4 == 0 {
            (4, AuxMode::All)
        } else {
            (rng.random_range(5..=8), AuxMode::Lazy)
        };
        let p = random_quartic_pubo(&mut rng, n, 3);
        let q = quadratize(&p, choose_penalty(&p), mode).unwrap();
        if q.num_aux() > 8 {
            continue;
        }
        instances += 1;
        max_aux = max_aux.max(q.num_aux());
        let k = q.num_aux();
        for logical in 0..1u64 << n {
            let psi = bits_of(logical, n);
            let target = naive_pubo_energy(&p, &psi);
            let mut energies = Vec::with_capacity(1 << k);
            for aux in 0..1u64 << k {
                let full: Vec<u8> = psi.iter().copied().chain(bits_of(aux, k)).collect();
                energies.push((q.energy(&full).unwrap(), aux));
            }
            let min = energies.iter().map(|e| e.0).fold(f64::INFINITY, f64::min);
            worst = worst.max((min - target).abs() / target.abs().max(1.0));
            let tol = 1e-9 * min.abs().max(1.0);
            for &(e, aux) in &energies {
                if e <= min + tol {
                    let a = bits_of(aux, k);
                    let ok = q
                        .aux_map()
                        .pairs()
                        .iter()
                        .enumerate()
                        .all(|(m, &(i, j))| a[m] == psi[i] & psi[j]);
                    inconsistent += usize::from(!ok);
                }
            }
        }
    }
    (
        worst <= 1e-9 && inconsistent == 0,
        format!(
            "{instances} quartic PUBOs (<= 8 logical, <= {max_aux} aux): worst min-over-aux error {worst:.2e}, \
             inconsistent minimizers {inconsistent}"
        ),
    )
}

fn c8_linear_path() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    let systems = 120;
    for _ in 0..systems {
        let (eqs, vars, bits) = (
            rng.random_range(1..=4),
            rng.random_range(1..=3),
            rng.random_range(1..=3),
        );
        let (p1, p0) = random_linear(&mut rng, eqs, vars);
        let sys = PolynomialSystem::linear(&p1, &p0).unwrap();
        let enc = BitEncoding::uniform(
            vars,
            rng.random_range(-2.0..0.0),
            rng.random_range(0.5..2.0),
            bits,
        )
        .unwrap();
        let fast = compile_linear_qubo(&sys, &enc).unwrap();
        let pubo = compile_pubo(&sys, &enc).unwrap();
        let general = quadratize(&pubo, choose_penalty(&pubo), AuxMode::Lazy).unwrap();
        if fast.size() != general.size() {
            return (
                false,
                format!("sizes differ: {} vs {}", fast.size(), general.size()),
            );
        }
        let n = enc.num_bits();
        for state in 0..1u64 << n {
            let psi = bits_of(state, n);
            let (a, b) = (fast.energy(&psi).unwrap(), general.energy(&psi).unwrap());
            worst = worst.max((a - b).abs() / a.abs().max(b.abs()).max(1.0));
        }
    }
    (
        worst <= 1e-9,
        format!("{systems} linear systems, worst pointwise difference {worst:.2e}"),
    )
}

fn c9_backward_optimality() -> Outcome {
    let mut violations = 0;
    let mut strict = 0;
    let instances = 24;
    for k in 0..instances {
        let size = 2 + k % 4;
        let kappa = [1.1, 3.0, 10.0, 100.0][k / 6];
        let (p1, p0) = conditioned_system(&ConditionedSpec {
            size,
            kappa,
            seed: k as u64,
        })
        .unwrap();
        let cg = conjugate_gradient(&p1, &p0, 1e-12, 1000).unwrap();
        let lo = cg.solution.iter().copied().fold(f64::INFINITY, f64::min) - 0.3;
        let hi = cg
            .solution
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
            + 0.3;
        let enc = BitEncoding::uniform(size, lo, hi, 2).unwrap();
        let q = compile_linear_qubo(&PolynomialSystem::linear(&p1, &p0).unwrap(), &enc).unwrap();
        let r = brute_force(&q, &BruteForceOptions::default()).unwrap();
        let best =
            relative_residual(&p1, &p0, &enc.decode(r.ground_state().as_slice()).unwrap()).unwrap();
        let fe = forward_error_minimum(&p1, &p0, &enc)
            .unwrap()
            .relative_residual;
        let tol = 1e-12 * best.max(1e-300);
        if best > fe + tol {
            violations += 1;
        }
        if best < fe - tol {
            strict += 1;
        }
        let n = enc.num_bits();
        for state in 0..1u64 << n {
            let x = enc.decode(&bits_of(state, n)).unwrap();
            if best > relative_residual(&p1, &p0, &x).unwrap() + tol {
                violations += 1;
            }
        }
    }
    (
        violations == 0,
        format!(
            "{instances} conditioned instances, {violations} grid points beat the QUBO minimizer; \
             forward-error point strictly worse on {strict}"
        ),
    )
}

fn c10_determinism() -> Outcome {
    let run = || -> String {
        let enc = BitEncoding::uniform(2, 0.0, 3.0, 2).unwrap();
        let pubo = compile_pubo(&worked_quadratic(), &enc).unwrap();
        let q = quadratize(&pubo, choose_penalty(&pubo), AuxMode::All).unwrap();
        let anneal = AnnealParams {
            reads: 200,
            sweeps: 200,
            seed: 42,
            ..Default::default()
        };
        let samples = simulated_anneal(&q, &anneal).unwrap();

        let d = generate_dataset(20, 0.9, Noise::Seeded(5)).unwrap();
        let basis = BasisSet::polynomial(2, d.x_grid()).unwrap();
        let fit_enc = BitEncoding::uniform(3, 0.0, 15.0, 3).unwrap();
        let fit = fit_qubo(
            &d,
            &basis,
            &fit_enc,
            &Backend::Anneal(anneal),
            FitObjective::Gls,
        )
        .unwrap();

        let (p1, p0) = conditioned_system(&ConditionedSpec {
            size: 4,
            kappa: 1.1,
            seed: 0,
        })
        .unwrap();
        let trace = iterate_solve(
            &p1,
            &p0,
            BitEncoding::uniform(4, -1.0, 1.0, 2).unwrap(),
            3,
            &Backend::Anneal(anneal),
        )
        .unwrap();
        let sweep = run_sweep(&SweepConfig::new(
            SweepKind::Size,
            vec![2.0, 3.0],
            Backend::Anneal(anneal),
        ))
        .unwrap();
        serde_json::to_string(&(samples, fit, trace, sweep)).unwrap()
    };
    let first = run();
    let second = run();
    let serial = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(run);
    (
        first == second && first == serial,
        format!(
            "{} bytes of sample sets and reports; repeat identical: {}, single-thread identical: {}",
            first.len(),
            first == second,
            first == serial
        ),
    )
}
