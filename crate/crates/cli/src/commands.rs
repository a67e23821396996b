use std::path::{Path, PathBuf};

use normground::problem::Verdict;
use normground::io::{
    identity_records, verify_artifact, write_branch, write_config, write_identities, write_mass_curve, write_solution,
    DomainChoice, ExperimentConfig, GridConfig, IdentityRecord,
};
use normground::mass_min::{counterexample_crossing, m_expression_check, mass_curve};
use normground::problem::{Family, ProblemParams};
use normground::solve::{branch_tangent, continue_branch as trace_branch, seed_solution};
use normground::spectrum::morse_index;
use normground::{Error, Result};

use crate::ProblemArgs;
use crate::{EXIT_IDENTITY, EXIT_NONCONVERGENCE, EXIT_OK};

const WHOLE_SPACE_NODES: usize = 16384;
const BALL_NODES: usize = 16384;

pub struct CurveArgs {
    pub c_grid: Option<Vec<f64>>,
    pub c_min: f64,
    pub c_max: f64,
    pub c_count: usize,
    pub seed: Option<u64>,
    pub budget: Option<usize>,
    pub probe: Option<f64>,
    pub no_probe: bool,
}

fn build_config(args: &ProblemArgs) -> Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => {
            let preset = args
                .preset
                .clone()
                .ok_or_else(|| Error::Validation("either --config or --preset is required".into()))?;
            let dim = args
                .dim
                .ok_or_else(|| Error::Validation("--N is required".into()))?;
            let p = match (args.p, preset.as_str()) {
                (Some(p), _) => p,
                (None, "cubic_quintic") => 4.0,
                (None, _) => return Err(Error::Validation("--p is required".into())),
            };
            let ball = preset == "ball_hardy";
            let params = ProblemParams::new(&preset, args.s.unwrap_or(1.0), dim, p);
            ExperimentConfig::new(
                params,
                GridConfig {
                    n: if ball { BALL_NODES } else { WHOLE_SPACE_NODES },
                    outer_radius: None,
                    domain: if ball {
                        DomainChoice::UnitBall
                    } else {
                        DomainChoice::WholeSpace
                    },
                },
            )
        }
    };
    if args.config.is_some() {
        if let Some(preset) = &args.preset {
            cfg.problem.preset = preset.clone();
        }
        if let Some(s) = args.s {
            cfg.problem.s = s;
        }
        if let Some(dim) = args.dim {
            cfg.problem.dim = dim;
        }
        if let Some(p) = args.p {
            cfg.problem.p = p;
        }
    }
    if args.q.is_some() {
        cfg.problem.q = args.q;
    }
    if args.k.is_some() {
        cfg.problem.k = args.k;
    }
    if args.weight.is_some() {
        cfg.problem.weight = args.weight.clone();
    }
    if args.potential.is_some() {
        cfg.problem.potential = args.potential.clone();
    }
    if let Some(n) = args.n {
        cfg.grid.n = n;
    }
    if args.outer_radius.is_some() {
        cfg.grid.outer_radius = args.outer_radius;
    }
    if let Some(tol) = args.tol {
        cfg.solver.newton_tol = tol;
    }
    Ok(cfg)
}

fn output_dir(root: &Path, args: &ProblemArgs, cfg: &ExperimentConfig, command: &str) -> PathBuf {
    args.out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| root.join(format!("{command}-{}", &cfg.config_hash()[..12])))
}

fn print_identities(records: &[IdentityRecord]) {
    for r in records {
        let rep = &r.report;
        let status = match (rep.pass, rep.verdict) {
            (_, Verdict::Inconclusive) => "SKIP",
            (true, _) => "PASS",
            (false, _) => "FAIL",
        };
        say!(
            "  {status}  {:<22} {:<28} lhs = {:+.10e}  rhs = {:+.10e}  rel = {:.3e}  tol = {:.1e}",
            rep.identity_id.as_str(),
            r.source,
            rep.lhs,
            rep.rhs,
            rep.rel_residual,
            rep.tolerance
        );
    }
}

pub fn solve(root: &Path, args: &ProblemArgs, lambda: Option<f64>) -> Result<u8> {
    let mut cfg = build_config(args)?;
    if lambda.is_some() {
        cfg.sweep.lambda = lambda;
    }
    cfg.validate()?;
    let lambda = cfg.lambda()?;
    let model = cfg.model(Some(lambda))?;
    let dir = output_dir(root, args, &cfg, "solve");
    write_config(&dir, &cfg)?;
    let sol = seed_solution(&model, lambda, &cfg.newton_options())?;
    if !sol.converged {
        write_solution(&dir, &cfg, &model, &sol, None, None)?;
        eprintln!(
            "not converged at λ = {lambda}: residual {:.3e} after {} iterations; flagged artifact in {}",
            sol.residual_norm,
            sol.iterations,
            dir.display()
        );
        return Ok(EXIT_NONCONVERGENCE);
    }
    let tangent = branch_tangent(&model, &sol).ok();
    let spectrum = morse_index(&model, &sol).ok();
    write_solution(&dir, &cfg, &model, &sol, tangent.as_deref(), spectrum.as_ref())?;
    let records = identity_records(&model, &sol, tangent.as_deref(), "solution")?;
    write_identities(&dir, &records)?;
    say!("converged at λ = {lambda} in {} Newton iterations", sol.iterations);
    say!("  mass ∫u² = {:.10}", sol.mass);
    say!("  u(r₁)    = {:.10}  (r₁ = {:.3e})", sol.peak(), model.grid().nodes()[0]);
    say!("  energy   = {:.10}", sol.energy);
    say!("  residual = {:.3e} (tolerance {:.1e})", sol.residual_norm, sol.tolerance);
    if let Some(s) = &spectrum {
        say!(
            "  Morse index {} (radial), smallest |μ| = {:.3e}, nondegenerate: {}",
            s.morse_index, s.smallest_abs_eig, s.nondegenerate
        );
    }
    say!("identities:");
    print_identities(&records);
    say!("artifact: {}", dir.display());
    Ok(EXIT_OK)
}

pub fn continue_branch(
    root: &Path,
    args: &ProblemArgs,
    lambda_start: Option<f64>,
    lambda_end: Option<f64>,
    verify: bool,
) -> Result<u8> {
    let mut cfg = build_config(args)?;
    if lambda_start.is_some() {
        cfg.sweep.lambda_start = lambda_start;
    }
    if lambda_end.is_some() {
        cfg.sweep.lambda_end = lambda_end;
    }
    cfg.validate()?;
    let (a, b) = cfg.lambda_range()?;
    let model = cfg.model(Some(a.min(b)))?;
    let dir = output_dir(root, args, &cfg, "continue");
    write_config(&dir, &cfg)?;
    let branch = trace_branch(&model, a, b, &cfg.solver.step, &cfg.newton_options())?;
    write_branch(&dir, &cfg, &model, &branch)?;
    let d = branch.mass_derivatives();
    let (lo, hi) = d
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &x| (l.min(x), h.max(x)));
    let n = branch.len();
    match branch.mass_derivative_sign() {
        Some(-1) => say!("mass_derivative < 0 on all {n} nodes"),
        Some(_) => say!("mass_derivative > 0 on all {n} nodes"),
        None => say!("mass_derivative changes sign across {n} nodes"),
    }
    say!("  min mass_derivative = {lo:+.6e}, max = {hi:+.6e}");
    let masses = branch.masses();
    say!(
        "  λ ∈ [{}, {}], mass from {:.6e} to {:.6e}",
        branch.nodes[0].solution.lambda,
        branch.nodes[n - 1].solution.lambda,
        masses[0],
        masses[n - 1]
    );
    let morse_one = branch.nodes.iter().filter(|x| x.morse_index == 1).count();
    let max_changes = branch.nodes.iter().map(|x| x.sign_changes).max().unwrap_or(0);
    say!("  Morse index 1 on {morse_one}/{n} nodes; tangent sign changes ≤ {max_changes}");
    let mut code = EXIT_OK;
    if verify {
        let mut records = Vec::new();
        for (k, node) in branch.nodes.iter().enumerate() {
            let source = format!("node {k} (λ = {})", node.solution.lambda);
            records.extend(identity_records(&model, &node.solution, Some(&node.tangent), &source)?);
        }
        write_identities(&dir, &records)?;
        let failed = records.iter().filter(|r| !r.report.pass).count();
        say!("identities: {} checked, {failed} failed", records.len());
        if failed > 0 {
            print_identities(&records.into_iter().filter(|r| !r.report.pass).collect::<Vec<_>>());
            code = EXIT_IDENTITY;
        }
    }
    if let Some(reason) = &branch.truncated {
        eprintln!("warning: branch truncated: {reason}");
        code = EXIT_NONCONVERGENCE;
    }
    say!("artifact: {}", dir.display());
    Ok(code)
}

fn log_spaced(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if count == 0 || !(lo > 0.0 && hi >= lo) {
        return Err(Error::Validation(format!("invalid mass range [{lo}, {hi}] with {count} samples")));
    }
    if count == 1 {
        return Ok(vec![lo]);
    }
    let (a, b) = (lo.ln(), hi.ln());
    Ok((0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect())
}

pub fn masscurve(root: &Path, args: &ProblemArgs, curve_args: &CurveArgs) -> Result<u8> {
    let mut cfg = build_config(args)?;
    if let Some(g) = &curve_args.c_grid {
        cfg.sweep.c_grid = g.clone();
    } else if cfg.sweep.c_grid.is_empty() {
        cfg.sweep.c_grid = log_spaced(curve_args.c_min, curve_args.c_max, curve_args.c_count)?;
    }
    if let Some(seed) = curve_args.seed {
        cfg.multistart.seed = seed;
    }
    if let Some(budget) = curve_args.budget {
        cfg.multistart.budget = budget;
    }
    if curve_args.probe.is_some() {
        cfg.solver.probe = curve_args.probe;
    }
    if curve_args.no_probe {
        cfg.solver.probe = None;
    }
    let spec = cfg.validate()?;
    let mut grid = cfg.c_grid()?;
    let model = cfg.model(None)?;
    let dir = output_dir(root, args, &cfg, "masscurve");
    write_config(&dir, &cfg)?;
    let opts = cfg.minimize_options();
    let mut curve_opts = cfg.curve_options();
    if grid.len() < 2 {
        curve_opts.probe = None;
        say!("single sample: no derivative estimates, no kink claims");
    }
    let crossing = if spec.family() == Family::Counterexample && grid.len() >= 2 {
        let q = spec.q().expect("asymmetric preset carries q");
        let x = counterexample_crossing(spec.order(), spec.dim(), spec.p(), q, model.grid(), &opts)?;
        if !grid.iter().any(|c| (c - x.c_hat).abs() <= 1e-12 * x.c_hat) {
            grid.push(x.c_hat);
            grid.sort_by(f64::total_cmp);
        }
        Some(x)
    } else {
        None
    };
    if let (Some(p), true) = (curve_opts.probe, grid.len() >= 2) {
        let gap = grid.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        if 2.0 * p >= gap || 2.0 * p >= grid[0] {
            return Err(Error::Validation(format!(
                "probe {p} too large for the mass grid (min spacing {gap:.3e}, c_min {})",
                grid[0]
            )));
        }
    }
    let curve = mass_curve(&model, &grid, &opts, &curve_opts)?;
    let expression = if spec.family() == Family::FractionalPower
        && spec.order() == 1.0
        && !spec.has_potential()
        && grid.len() >= 2
    {
        m_expression_check(&model, &curve, None).ok()
    } else {
        None
    };
    write_mass_curve(&dir, &cfg, &model, &curve, crossing.as_ref(), expression.as_ref())?;

    say!(
        "{:>12} {:>16} {:>14} {:>14} {:>11} {:>5} {:>5}",
        "c", "m(c)", "λ(c)", "m'(c)", "rel diff", "kink", "mins"
    );
    let mut max_rel: Option<f64> = None;
    let fmt_opt = |x: Option<f64>| x.map(|v| format!("{v:+.8}")).unwrap_or_else(|| "-".into());
    for s in &curve.samples {
        let rel = s
            .dq_centered
            .filter(|_| !s.kink)
            .map(|d| (d - s.lambda).abs() / s.lambda.abs().max(1e-300));
        if let Some(r) = rel {
            max_rel = Some(max_rel.map_or(r, |m: f64| m.max(r)));
        }
        say!(
            "{:>12.6} {:>16.10} {:>14.8} {:>14} {:>11} {:>5} {:>5}",
            s.c,
            s.m,
            s.lambda,
            fmt_opt(s.dq_centered),
            rel.map(|r| format!("{r:.2e}")).unwrap_or_else(|| "-".into()),
            if s.kink { "yes" } else { "" },
            s.distinct_minima
        );
    }
    let kinks: Vec<_> = curve.samples.iter().filter(|s| s.kink).collect();
    let word = if kinks.len() == 1 { "kink" } else { "kinks" };
    if grid.len() >= 2 {
        match max_rel {
            Some(r) => say!("{} {word} detected; max |m'(c) − λ(c)|/|λ(c)| = {r:.1e}", kinks.len()),
            None => say!("{} {word} detected", kinks.len()),
        }
    }
    for s in &kinks {
        let (l, r) = (s.dq_left.unwrap_or(f64::NAN), s.dq_right.unwrap_or(f64::NAN));
        say!(
            "  kink at c = {:.8}: dq_left = {l:+.8}, dq_right = {r:+.8}, gap = {:.6e}, error estimate = {:.3e}",
            s.c,
            (l - r).abs(),
            s.err_left.unwrap_or(0.0) + s.err_right.unwrap_or(0.0)
        );
        say!("    multipliers at c: [{:.8}, {:.8}]", s.lambda_range.0, s.lambda_range.1);
    }
    if let Some(x) = &crossing {
        say!(
            "crossing ĉ = {:.8} (power-law prediction (m⁻(1)/m⁺(1))^(1/(α⁺−α⁻)) = {:.8}); predicted dq gap = {:.6e}",
            x.c_hat, x.c_hat_scaling, x.predicted_gap
        );
    }
    if let Some(e) = &expression {
        say!(
            "m'(c) expression: max ODE residual {:.3e}, multiplier residual {:.3e}",
            e.max_ode_residual, e.max_multiplier_residual
        );
    }
    say!("artifact: {}", dir.display());
    if curve.samples.iter().any(|s| !s.converged) {
        eprintln!("warning: some minimizers did not converge");
        return Ok(EXIT_NONCONVERGENCE);
    }
    Ok(EXIT_OK)
}

pub fn verify(artifact: &Path, config: Option<&Path>) -> Result<u8> {
    let expected = match config {
        Some(path) => Some(ExperimentConfig::load(path)?.config_hash()),
        None => None,
    };
    let ver = verify_artifact(artifact, expected.as_deref())?;
    say!("{:?} artifact, config hash {}", ver.kind, ver.config_hash);
    print_identities(&ver.records);
    let failed = ver.records.iter().filter(|r| !r.report.pass).count();
    match ver.matches_stored {
        Some(true) => say!("stored identity reports reproduced exactly"),
        Some(false) => say!("recomputed identity reports differ from the stored ones"),
        None => {}
    }
    if ver.unconverged > 0 {
        say!("{} stored profile(s) flagged as not converged", ver.unconverged);
    }
    say!("{} identities checked, {failed} failed", ver.records.len());
    if failed > 0 {
        Ok(EXIT_IDENTITY)
    } else if ver.unconverged > 0 {
        Ok(EXIT_NONCONVERGENCE)
    } else {
        Ok(EXIT_OK)
    }
}
