use std::path::Path;

use polyqubo::linsys::{self, ConditionedSpec, SweepConfig, SweepKind};
use polyqubo::regression::{self, BasisSet, FitObjective, Noise, RegressionDataset};
use polyqubo::solvers::{
    conjugate_gradient, solve_qubo, AnnealParams, BruteForceOptions, CgReport, QuboSolution,
};
use polyqubo::{
    choose_penalty, compile_linear_qubo, compile_pubo, quadratize, AuxMode, Backend, BitEncoding,
    Error, PolynomialSystem, QuboMatrix,
};
use serde_json::{json, Value};

use crate::args::*;

/// Why a run stopped; maps onto the process exit code.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags or input: exit 1.
    Config(String),
    /// The solver could not produce a result: exit 2.
    Solver(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => 1,
            Failure::Solver(_) => 2,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Solver(m) => m,
        }
    }
}

fn config(e: Error) -> Failure {
    Failure::Config(e.to_string())
}

/// Errors raised while solving; oversized brute-force requests are still config errors.
fn solving(e: Error) -> Failure {
    match e {
        Error::TooManyBits { .. } => config(e),
        e => Failure::Solver(e.to_string()),
    }
}

/// Errors from combined build-and-solve routines, sorted by kind.
fn classify(e: Error) -> Failure {
    match e {
        Error::SingularCovariance(_) | Error::ZeroRhs => Failure::Solver(e.to_string()),
        e => config(e),
    }
}

/// Finished run: the report, an optional CSV rendering, and a solver
/// problem that should still fail the run after the report is written.
pub struct Outcome {
    pub report: Value,
    pub csv: Option<String>,
    pub failure: Option<Failure>,
}

pub fn run(command: &Command) -> Result<Outcome, Failure> {
    match command {
        Command::SolvePoly(a) => solve_poly(a),
        Command::SolveLinear(a) => solve_linear(a),
        Command::Regress(a) => regress(a),
        Command::Sweep(a) => sweep(a),
        Command::Iterate(a) => iterate(a),
    }
}

fn qubo_backend(s: &SolverArgs, logical_bits: usize) -> Result<Backend, Failure> {
    match s.backend {
        BackendKind::Brute => {
            if logical_bits > s.max_bits {
                return Err(Failure::Config(format!(
                    "{logical_bits} logical bits exceeds the brute-force limit of {} (2^{logical_bits} states); \
                     reduce --bits or use --backend anneal",
                    s.max_bits
                )));
            }
            Ok(Backend::Brute(BruteForceOptions {
                max_bits: s.max_bits,
                ..Default::default()
            }))
        }
        BackendKind::Anneal => {
            if s.reads == 0 || s.sweeps == 0 {
                return Err(Failure::Config(
                    "--reads and --sweeps must be at least 1".into(),
                ));
            }
            Ok(Backend::Anneal(AnnealParams {
                reads: s.reads,
                sweeps: s.sweeps,
                seed: s.seed,
                t_hot: s.t_hot,
                t_cold: s.t_cold,
            }))
        }
        BackendKind::Cg => Err(Failure::Config(
            "backend cg only applies to degree-1 systems (solve-poly, solve-linear, regress)"
                .into(),
        )),
    }
}

fn encoding(e: &EncodingArgs, n_variables: usize) -> Result<BitEncoding, Failure> {
    let bits = e
        .bits
        .ok_or_else(|| Failure::Config("--bits is required for QUBO backends".into()))?;
    let widen = |v: &[f64], flag: &str| -> Result<Vec<f64>, Failure> {
        match v.len() {
            0 => Err(Failure::Config(format!(
                "--{flag} is required for QUBO backends"
            ))),
            1 => Ok(vec![v[0]; n_variables]),
            n if n == n_variables => Ok(v.to_vec()),
            n => Err(Failure::Config(format!(
                "--{flag} has {n} values; expected 1 or {n_variables} (one per variable)"
            ))),
        }
    };
    BitEncoding::from_range(&widen(&e.lo, "lo")?, &widen(&e.hi, "hi")?, bits).map_err(config)
}

fn load_system(path: &Path) -> Result<PolynomialSystem, Failure> {
    PolynomialSystem::load(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn echo<T: serde::Serialize>(args: &T) -> Value {
    serde_json::to_value(args).expect("arguments serialize")
}

fn solver_section(solution: &QuboSolution, backend: &Backend) -> Value {
    match backend {
        Backend::Brute(opts) => json!({
            "backend": "brute",
            "max_bits": opts.max_bits,
            "states_searched": 1u64 << solution.bits.len(),
            "energy": solution.energy,
        }),
        Backend::Anneal(_) => json!({
            "backend": "anneal",
            "energy": solution.energy,
            "hit_fraction": solution.hit_fraction,
            "reads": solution.reads,
            "samples": solution.samples,
        }),
    }
}

fn samples_csv(solution: &QuboSolution) -> String {
    match &solution.samples {
        Some(set) => set.to_csv(),
        None => format!(
            "bits,energy,count\n{},{:?},1\n",
            solution.bits, solution.energy
        ),
    }
}

fn reject_csv_for_cg(out: &OutputArgs, backend: BackendKind) -> Result<(), Failure> {
    if out.format == Format::Csv && backend == BackendKind::Cg {
        return Err(Failure::Config(
            "--format csv lists QUBO samples; it is not available with --backend cg".into(),
        ));
    }
    Ok(())
}

fn qubo_summary(q: &QuboMatrix) -> Value {
    json!({
        "logical_bits": q.num_logical(),
        "aux_bits": q.num_aux(),
        "total_bits": q.size(),
        "penalty": q.penalty(),
        "offset": q.offset(),
        "aux_pairs": q.aux_map().pairs(),
    })
}

fn solve_poly(a: &SolvePolyArgs) -> Result<Outcome, Failure> {
    reject_csv_for_cg(&a.output, a.solver.backend)?;
    let system = load_system(&a.input)?;
    if a.solver.backend == BackendKind::Cg {
        return linear_cg("solve-poly", echo(a), &system, &a.solver);
    }
    let enc = encoding(&a.encoding, system.n_variables())?;
    let backend = qubo_backend(&a.solver, enc.num_bits())?;
    let pubo = compile_pubo(&system, &enc).map_err(config)?;
    let penalty = a.penalty.unwrap_or_else(|| choose_penalty(&pubo));
    let mode = match a.aux {
        AuxKind::Lazy => AuxMode::Lazy,
        AuxKind::All => AuxMode::All,
    };
    let q = quadratize(&pubo, penalty, mode).map_err(config)?;
    let solution = solve_qubo(&q, &backend).map_err(solving)?;
    let logical = &solution.bits.as_slice()[..q.num_logical()];
    let x = enc.decode(logical).map_err(solving)?;
    let chi2 = system.chi_squared(&x).map_err(solving)?;
    let consistent = q.with_consistent_aux(logical).map_err(solving)? == solution.bits;
    let mut problem = qubo_summary(&q);
    problem["equations"] = json!(system.n_equations());
    problem["variables"] = json!(system.n_variables());
    problem["degree"] = json!(system.degree());
    problem["pubo_terms"] = json!(pubo.terms().len());
    problem["pubo_order"] = json!(pubo.max_order());
    let report = json!({
        "command": "solve-poly",
        "config": echo(a),
        "encoding": enc,
        "problem": problem,
        "solver": solver_section(&solution, &backend),
        "solution": {
            "bits": solution.bits,
            "logical_bits": polyqubo::BitString::new(logical.to_vec()).map_err(solving)?,
            "x": x,
            "energy": solution.energy,
            "chi_squared": chi2,
            "aux_consistent": consistent,
        },
    });
    Ok(Outcome {
        report,
        csv: Some(samples_csv(&solution)),
        failure: None,
    })
}

fn solve_linear(a: &SolveLinearArgs) -> Result<Outcome, Failure> {
    reject_csv_for_cg(&a.output, a.solver.backend)?;
    let system = load_system(&a.input)?;
    let (_, p0) = system.linear_parts().map_err(config)?;
    if a.solver.backend == BackendKind::Cg {
        return linear_cg("solve-linear", echo(a), &system, &a.solver);
    }
    let enc = encoding(&a.encoding, system.n_variables())?;
    let backend = qubo_backend(&a.solver, enc.num_bits())?;
    let q = compile_linear_qubo(&system, &enc).map_err(config)?;
    let solution = solve_qubo(&q, &backend).map_err(solving)?;
    let x = enc.decode(solution.bits.as_slice()).map_err(solving)?;
    let chi2 = system.chi_squared(&x).map_err(solving)?;
    let rhs = p0.norm_squared();
    let mut problem = qubo_summary(&q);
    problem["equations"] = json!(system.n_equations());
    problem["variables"] = json!(system.n_variables());
    let report = json!({
        "command": "solve-linear",
        "config": echo(a),
        "encoding": enc,
        "problem": problem,
        "solver": solver_section(&solution, &backend),
        "solution": {
            "bits": solution.bits,
            "x": x,
            "energy": solution.energy,
            "chi_squared": chi2,
            "relative_residual": (rhs > 0.0).then(|| chi2 / rhs),
        },
    });
    Ok(Outcome {
        report,
        csv: Some(samples_csv(&solution)),
        failure: None,
    })
}

/// CG on `P1` when it is square and symmetric, otherwise on the normal equations.
fn cg_solve(system: &PolynomialSystem, s: &SolverArgs) -> Result<(CgReport, bool), Failure> {
    let (p1, p0) = system.linear_parts().map_err(config)?;
    if s.tol.is_nan() || s.tol <= 0.0 {
        return Err(Failure::Config("--tol must be positive".into()));
    }
    let symmetric = p1.is_square() && (&p1 - p1.transpose()).amax() <= 1e-12 * p1.amax().max(1.0);
    let (a, b) = if symmetric {
        (p1, p0)
    } else {
        (p1.transpose() * &p1, p1.transpose() * p0)
    };
    let max_iter = 100 * a.nrows().max(1);
    let report = conjugate_gradient(&a, &b, s.tol, max_iter).map_err(solving)?;
    Ok((report, !symmetric))
}

fn linear_cg(
    command: &str,
    config_echo: Value,
    system: &PolynomialSystem,
    s: &SolverArgs,
) -> Result<Outcome, Failure> {
    let (cg, normal) = cg_solve(system, s)?;
    let (_, p0) = system.linear_parts().map_err(config)?;
    let chi2 = system
        .chi_squared(cg.solution.as_slice())
        .map_err(solving)?;
    let rhs = p0.norm_squared();
    let failure = (!cg.converged).then(|| {
        Failure::Solver(format!(
            "conjugate gradient did not reach tolerance {} in {} iterations (relative residual norm {:e})",
            s.tol, cg.iterations, cg.final_relative_residual_norm
        ))
    });
    let report = json!({
        "command": command,
        "config": config_echo,
        "problem": {
            "equations": system.n_equations(),
            "variables": system.n_variables(),
            "normal_equations": normal,
        },
        "solver": {
            "backend": "cg",
            "tolerance": s.tol,
            "iterations": cg.iterations,
            "final_relative_residual_norm": cg.final_relative_residual_norm,
            "converged": cg.converged,
        },
        "solution": {
            "x": cg.solution,
            "chi_squared": chi2,
            "relative_residual": (rhs > 0.0).then(|| chi2 / rhs),
        },
    });
    Ok(Outcome {
        report,
        csv: None,
        failure,
    })
}

fn regress(a: &RegressArgs) -> Result<Outcome, Failure> {
    reject_csv_for_cg(&a.output, a.solver.backend)?;
    let data = match &a.input {
        Some(path) => RegressionDataset::read_csv(path, a.covariance.as_deref())
            .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?,
        None => {
            let noise = a.noise_seed.map_or(Noise::None, Noise::Seeded);
            regression::generate_dataset(a.points, a.corr, noise).map_err(config)?
        }
    };
    let basis = BasisSet::parse(&a.basis, data.x_grid()).map_err(config)?;
    let dataset = json!({
        "source": a.input.as_ref().map_or("generated".to_string(), |p| p.display().to_string()),
        "points": data.len(),
        "noise_seed": a.noise_seed,
    });
    if a.solver.backend == BackendKind::Cg {
        let system = regression::normal_equations(&data, &basis).map_err(classify)?;
        let (cg, _) = cg_solve(&system, &a.solver)?;
        let params = cg.solution.as_slice().to_vec();
        let failure = (!cg.converged).then(|| {
            Failure::Solver(format!(
                "conjugate gradient did not reach tolerance {} in {} iterations",
                a.solver.tol, cg.iterations
            ))
        });
        let report = json!({
            "command": "regress",
            "config": echo(a),
            "problem": {"dataset": dataset, "basis": basis.labels()},
            "solver": {
                "backend": "cg",
                "tolerance": a.solver.tol,
                "iterations": cg.iterations,
                "final_relative_residual_norm": cg.final_relative_residual_norm,
                "converged": cg.converged,
            },
            "solution": {
                "labels": basis.labels(),
                "params": params,
                "gls_objective": regression::gls_objective(&data, &basis, &params).map_err(solving)?,
            },
        });
        return Ok(Outcome {
            report,
            csv: None,
            failure,
        });
    }
    let enc = encoding(&a.encoding, basis.len())?;
    let backend = qubo_backend(&a.solver, enc.num_bits())?;
    let objective = match a.objective {
        ObjectiveKind::Gls => FitObjective::Gls,
        ObjectiveKind::NormalResidual => FitObjective::NormalResidual,
    };
    let fit = regression::fit_qubo(&data, &basis, &enc, &backend, objective).map_err(classify)?;
    let solution = QuboSolution {
        bits: fit.bits.clone(),
        energy: fit.energy,
        hit_fraction: fit.hit_fraction,
        reads: fit.reads,
        samples: fit.samples.clone(),
    };
    let report = json!({
        "command": "regress",
        "config": echo(a),
        "encoding": enc,
        "problem": {
            "dataset": dataset,
            "basis": basis.labels(),
            "objective": fit.objective,
            "logical_bits": fit.logical_bits,
            "aux_bits": 0,
        },
        "solver": solver_section(&solution, &backend),
        "solution": {
            "bits": fit.bits,
            "labels": fit.labels,
            "params": fit.params,
            "energy": fit.energy,
            "energy_without_constant": fit.energy_without_constant,
            "gls_objective": fit.gls_objective,
            "gls_estimate": fit.gls_estimate,
        },
    });
    Ok(Outcome {
        report,
        csv: Some(samples_csv(&solution)),
        failure: None,
    })
}

fn sweep(a: &SweepArgs) -> Result<Outcome, Failure> {
    let kind = match a.kind {
        SweepKindArg::Size => SweepKind::Size,
        SweepKindArg::Condition => SweepKind::Condition,
        SweepKindArg::Precision => SweepKind::Precision,
    };
    let mut cfg = SweepConfig::new(kind, a.values.clone(), Backend::default());
    cfg.size = a.n.unwrap_or(cfg.size);
    cfg.kappa = a.kappa.unwrap_or(cfg.kappa);
    cfg.bits = a.bits.unwrap_or(cfg.bits);
    cfg.seed = a.instance_seed;
    let top = a.values.iter().copied().fold(0.0f64, f64::max);
    let largest = match kind {
        SweepKind::Size => top as usize * cfg.bits,
        SweepKind::Condition => cfg.size * cfg.bits,
        SweepKind::Precision => cfg.size * top as usize,
    };
    cfg.backend = qubo_backend(&a.solver, largest)?;
    let rows = linsys::run_sweep(&cfg).map_err(classify)?;
    let report = json!({
        "command": "sweep",
        "config": echo(a),
        "sweep": cfg,
        "columns": linsys::SWEEP_CSV_HEADER.split(',').collect::<Vec<_>>(),
        "rows": rows,
    });
    Ok(Outcome {
        report,
        csv: Some(linsys::sweep_csv(&rows)),
        failure: None,
    })
}

pub const ITERATE_CSV_HEADER: &str =
    "iteration,rel_residual,min_energy,hit_fraction,reads,bits,lo,hi,x";

fn iterate(a: &IterateArgs) -> Result<Outcome, Failure> {
    let backend = qubo_backend(&a.solver, a.n * a.bits)?;
    let spec = ConditionedSpec {
        size: a.n,
        kappa: a.kappa,
        seed: a.instance_seed,
    };
    if a.n == 0 || a.kappa.is_nan() || a.kappa < 1.0 {
        return Err(Failure::Config(
            "--n must be at least 1 and --kappa at least 1".into(),
        ));
    }
    let (p1, p0) = linsys::conditioned_system(&spec).map_err(config)?;
    let initial = BitEncoding::uniform(a.n, a.lo, a.hi, a.bits).map_err(config)?;
    let trace = linsys::iterate_solve(&p1, &p0, initial, a.iters, &backend).map_err(classify)?;
    let join = |v: &[f64]| {
        v.iter()
            .map(|x| format!("{x:?}"))
            .collect::<Vec<_>>()
            .join(";")
    };
    let mut csv = format!("{ITERATE_CSV_HEADER}\n");
    for r in &trace.records {
        csv.push_str(&format!(
            "{},{:?},{:?},{:?},{},{},{},{},{}\n",
            r.iteration,
            r.rel_residual,
            r.min_energy,
            r.hit_fraction,
            r.reads,
            r.bits,
            join(&r.lo),
            join(&r.hi),
            join(&r.x)
        ));
    }
    let report = json!({
        "command": "iterate",
        "config": echo(a),
        "problem": {
            "size": a.n,
            "kappa": a.kappa,
            "instance_seed": a.instance_seed,
            "logical_bits": a.n * a.bits,
            "aux_bits": 0,
        },
        "solver": {"backend": backend},
        "trace": trace.records,
        "solution": {
            "iterations": trace.records.len(),
            "x": trace.records.last().map(|r| r.x.clone()),
            "relative_residual": trace.final_relative_residual(),
        },
    });
    Ok(Outcome {
        report,
        csv: Some(csv),
        failure: None,
    })
}
