use std::fs;
use std::io::Write;
use std::path::Path;

use mimo_decay::decay_oracle::{write_decay_csv, CurvePoint};
use mimo_decay::lattice_codes::random_ensemble;
use mimo_decay::projected_basis::run_projection_suite;
use mimo_decay::reduction_lemma::run_reduction_suite;
use mimo_decay::{
    bound_report, brute_force_decay, construct_witness, exponent_alpha, CodeEnsemble, DecayCurve, DecaySample,
    LatticeSpec, Witness,
};
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::{Output, Source};

pub const DEFAULT_SEARCH_BUDGET: u64 = 100_000;

pub fn load_source(source: &Source) -> CliResult<CodeEnsemble> {
    let generated = [source.users.is_some(), source.n.is_some(), source.k.is_some()];
    match (&source.spec, generated) {
        (Some(path), [false, false, false]) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            Ok(LatticeSpec::from_json(&text)?.to_ensemble()?)
        }
        (None, [true, true, true]) => Ok(random_ensemble(
            source.users.unwrap_or_default(),
            source.n.unwrap_or_default(),
            source.k.unwrap_or_default(),
            source.seed,
        )?),
        (Some(_), _) => Err(CliError::Usage("give either --spec or --U/--n/--k, not both".into())),
        (None, _) => Err(CliError::Usage("need --spec or all of --U, --n, --k".into())),
    }
}

fn wants_json(output: &Output) -> bool {
    output.out.as_deref().and_then(Path::extension).is_some_and(|e| e == "json")
}

fn emit(output: &Output, bytes: &[u8]) -> CliResult<()> {
    match &output.out {
        Some(path) => fs::write(path, bytes).map_err(|e| CliError::io(path, e)),
        None => std::io::stdout().write_all(bytes).map_err(|e| CliError::Io(format!("stdout: {e}"))),
    }
}

fn to_json<T: Serialize>(value: &T) -> CliResult<Vec<u8>> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Failed(e.to_string()))?;
    text.push('\n');
    Ok(text.into_bytes())
}

pub fn gen(users: usize, n: usize, k: usize, seed: u64, bound: u64, output: &Output) -> CliResult<()> {
    let e = random_ensemble(users, n, k, seed)?.with_uniform_bound(bound)?;
    let mut text = LatticeSpec::from_ensemble(&e).to_json()?;
    text.push('\n');
    emit(output, text.as_bytes())
}

pub fn decay(source: &Source, grid: &[u64], budget: u64, output: &Output) -> CliResult<()> {
    let e = source.load()?;
    let samples = decay_samples(&e, grid, budget)?;
    let bytes = if wants_json(output) {
        to_json(&samples)?
    } else {
        let mut buf = Vec::new();
        write_decay_csv(&samples, &mut buf)?;
        buf
    };
    emit(output, &bytes)
}

fn decay_samples(e: &CodeEnsemble, grid: &[u64], budget: u64) -> CliResult<Vec<DecaySample>> {
    grid.iter()
        .map(|&bound| {
            let windowed = e.with_uniform_bound(bound)?;
            brute_force_decay(&windowed, budget).map_err(|err| match CliError::from(err) {
                CliError::Budget(msg) => CliError::Budget(format!("N={bound} {msg}")),
                other => other,
            })
        })
        .collect()
}

fn witnesses(e: &CodeEnsemble, grid: &[u64], budget: u64, seed: u64) -> CliResult<Vec<Witness>> {
    grid.iter().map(|&bound| Ok(construct_witness(&e.with_uniform_bound(bound)?, budget, seed)?)).collect()
}

fn identity_failures(ws: &[Witness]) -> Vec<u64> {
    ws.iter().filter(|w| !w.identity_pass).map(|w| w.nominal_windows[0]).collect()
}

pub fn witness(source: &Source, grid: &[u64], budget: u64, output: &Output) -> CliResult<()> {
    let e = source.load()?;
    let ws = witnesses(&e, grid, budget, source.seed)?;
    emit(output, &to_json(&ws)?)?;
    let failed = identity_failures(&ws);
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Failed(format!("determinant identity failed for N in {failed:?}")))
    }
}

pub fn report(
    source: &Source,
    grid: &[u64],
    budget: u64,
    oracle_budget: u64,
    oracle_only: bool,
    output: &Output,
) -> CliResult<()> {
    let e = source.load()?;
    let spec = exponent_alpha(e.user_count(), e.n(), e.k())?;
    let (oracle, witness_curve, ws) = if oracle_only {
        let samples = decay_samples(&e, grid, oracle_budget)?;
        let points = samples
            .iter()
            .zip(grid)
            .map(|(s, &n)| CurvePoint { n, value: s.value, windows: Some(s.windows.clone()) })
            .collect();
        (DecayCurve::fitted_or_plain(points), DecayCurve::unfitted(Vec::new()), Vec::new())
    } else {
        let ws = witnesses(&e, grid, budget, source.seed)?;
        let mut oracle_points = Vec::with_capacity(ws.len());
        let mut witness_points = Vec::with_capacity(ws.len());
        for (w, &n) in ws.iter().zip(grid) {
            // the witness may use coefficients beyond N, so it is compared on
            // the windows it actually occupies
            let eff = e.with_bounds(&w.coeff_windows)?;
            let s = brute_force_decay(&eff, oracle_budget).map_err(|err| match CliError::from(err) {
                CliError::Budget(msg) => CliError::Budget(format!("N={n} oracle on windows {:?} {msg}", w.coeff_windows)),
                other => other,
            })?;
            oracle_points.push(CurvePoint { n, value: s.value, windows: Some(w.coeff_windows.clone()) });
            witness_points.push(CurvePoint { n, value: w.det_value, windows: Some(w.coeff_windows.clone()) });
        }
        (DecayCurve::fitted_or_plain(oracle_points), DecayCurve::fitted_or_plain(witness_points), ws)
    };
    let r = bound_report(&oracle, &witness_curve, &spec)?;
    let bytes = if wants_json(output) { to_json(&r)? } else { r.to_string().into_bytes() };
    emit(output, &bytes)?;

    let mut problems = Vec::new();
    if r.all_feasible == Some(false) {
        problems.push("oracle exceeds witness for some N".to_string());
    }
    let failed = identity_failures(&ws);
    if !failed.is_empty() {
        problems.push(format!("determinant identity failed for N in {failed:?}"));
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(CliError::Failed(problems.join("; ")))
    }
}

#[derive(Serialize)]
struct LemmaSummary {
    reduction: mimo_decay::reduction_lemma::ReductionSuiteSummary,
    projection: mimo_decay::projected_basis::ProjectionSuiteSummary,
}

pub fn verify_lemmas(trials: usize, seed: u64, tol: f64, max_dim: usize, output: &Output) -> CliResult<()> {
    if trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(CliError::Usage("--tol must be positive".into()));
    }
    if max_dim == 0 {
        return Err(CliError::Usage("--max-dim must be at least 1".into()));
    }
    let reduction = run_reduction_suite(trials, seed, tol);
    let projection = run_projection_suite(trials, seed, max_dim);
    let mut text = format!(
        "row reduction identity: {}/{} passed (tol {:e}, worst scaled error {:e})\n",
        reduction.passed, reduction.trials, reduction.tolerance, reduction.worst_scaled_error
    );
    for c in &reduction.cases {
        text.push_str(&format!("  {:?}: {}/{}\n", c.case, c.passed, c.trials));
    }
    text.push_str(&format!(
        "projected basis bound: {}/{} passed ({} samples, worst ratio {:.4}, {} swaps)\n",
        projection.passed, projection.trials, projection.samples_checked, projection.worst_ratio, projection.total_swaps
    ));
    for f in projection.failures.iter().take(10) {
        text.push_str(&format!("  failure: {f}\n"));
    }
    let ok = reduction.all_passed() && projection.all_passed();
    match &output.out {
        Some(_) => {
            print!("{text}");
            emit(output, &to_json(&LemmaSummary { reduction, projection })?)?;
        }
        None => emit(output, text.as_bytes())?,
    }
    if ok {
        Ok(())
    } else {
        Err(CliError::Failed("lemma checks failed".into()))
    }
}
