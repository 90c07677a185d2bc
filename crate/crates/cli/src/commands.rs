//! The subcommands. Each returns the human-readable report and an exit
//! status; CSV output goes to the output directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context as _, Result};
use blowup_core::nonlinearity::{check_condition_c, check_condition_ibb, check_condition_pp, search_condition_params};
use blowup_core::*;
use rayon::prelude::*;

use crate::report::{fmt6, fmt17, Report};
use crate::scenario::{LambdaSource, ParamsMode, Scenario};

/// Process exit status: 0 admissible and consistent, 2 non-admissible,
/// 1 error or a run that contradicts its certificate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    NonAdmissible,
    Failed,
}

impl Status {
    pub fn code(self) -> u8 {
        match self {
            Status::Ok => 0,
            Status::Failed => 1,
            Status::NonAdmissible => 2,
        }
    }
}

pub struct Output {
    pub report: String,
    pub status: Status,
}

/// Grid, source term, eigen data and initial field of a scenario.
pub struct Prepared {
    pub grid: Grid,
    pub nl: Nonlinearity,
    pub eigen: Option<Eigenpair>,
    pub lambda0: f64,
    pub lambda_analytic: f64,
    pub u0: Field,
}

pub fn prepare(scn: &Scenario) -> Result<Prepared> {
    let grid = scn.grid()?;
    let nl = scn.nonlinearity()?;
    let eigen = if scn.needs_eigenpair() {
        Some(principal_eigenpair(&grid, scn.solver.eig_tol, scn.solver.eig_max_iter).context("principal eigenpair")?)
    } else {
        None
    };
    let lambda_analytic = analytic_lambda0(&grid.domain());
    let lambda0 = match (scn.params.lambda0, &eigen) {
        (LambdaSource::Discrete, Some(e)) => e.lambda0,
        _ => lambda_analytic,
    };
    let u0 = scn.initial_field(&grid, eigen.as_ref())?;
    Ok(Prepared {
        grid,
        nl,
        eigen,
        lambda0,
        lambda_analytic,
        u0,
    })
}

/// `(α, β, γ)` from the scenario, or from the search. `None` when the
/// search finds nothing.
pub fn resolve_params(scn: &Scenario, prep: &Prepared) -> Result<Option<ConditionParams>> {
    match scn.params.mode {
        ParamsMode::Explicit => Ok(Some(scn.explicit_params()?)),
        ParamsMode::Search => Ok(search_condition_params(&prep.nl, prep.lambda0, &scn.sampling(), &scn.search_grid())?),
    }
}

fn domain_label(grid: &Grid) -> String {
    match grid.domain() {
        Domain::Interval { length } => format!("interval(L={}) n={}", fmt6(length), grid.nx()),
        Domain::Rectangle { lx, ly } => {
            format!("rectangle(Lx={}, Ly={}) nx={} ny={}", fmt6(lx), fmt6(ly), grid.nx(), grid.ny())
        }
    }
}

fn lambda_label(scn: &Scenario) -> &'static str {
    match scn.params.lambda0 {
        LambdaSource::Discrete => "discrete",
        LambdaSource::Analytic => "analytic",
    }
}

pub fn eig(scn: &Scenario) -> Result<Output> {
    let grid = scn.grid()?;
    let pair = principal_eigenpair(&grid, scn.solver.eig_tol, scn.solver.eig_max_iter)?;
    let analytic = analytic_lambda0(&grid.domain());
    let mut r = Report::new("eig");
    r.line("domain", domain_label(&grid));
    r.num("lambda0_discrete", pair.lambda0);
    r.num("lambda0_analytic", analytic);
    r.num("discrete_minus_analytic", pair.lambda0 - analytic);
    r.num("residual", pair.residual);
    r.line("iterations", pair.iterations);
    Ok(Output {
        report: r.finish(),
        status: Status::Ok,
    })
}

pub fn check_condition(scn: &Scenario) -> Result<Output> {
    let prep = prepare(scn)?;
    let mut r = Report::new("check-condition");
    r.line("nonlinearity", &prep.nl);
    r.line("lambda0_source", lambda_label(scn));
    r.num("lambda0", prep.lambda0);
    let Some(params) = resolve_params(scn, &prep)? else {
        r.line("params", "search found no admissible (alpha, beta, gamma)");
        r.line("satisfied", false);
        return Ok(Output {
            report: r.finish(),
            status: Status::NonAdmissible,
        });
    };
    let verdict = check_condition_c(&prep.nl, &params, prep.lambda0, &scn.sampling())?;
    write_params(&mut r, scn, &params, prep.lambda0);
    write_verdict(&mut r, &verdict);
    Ok(Output {
        report: r.finish(),
        status: if verdict.satisfied { Status::Ok } else { Status::NonAdmissible },
    })
}

fn write_params(r: &mut Report, scn: &Scenario, params: &ConditionParams, lambda0: f64) {
    let source = match scn.params.mode {
        ParamsMode::Search => "search",
        ParamsMode::Explicit => "explicit",
    };
    r.line("params_source", source);
    r.num("alpha", params.alpha);
    r.num("beta", params.beta);
    r.num("beta_bound", ConditionParams::beta_bound(params.alpha, lambda0));
    r.num("gamma", params.gamma);
    r.num("xi", params.xi());
}

fn write_verdict(r: &mut Report, v: &ConditionVerdict) {
    r.line("satisfied", v.satisfied);
    r.num("worst_margin", v.worst_margin);
    r.line("witness_u", v.witness_u.map_or("none".to_string(), fmt6));
    r.line("asymptotic_ok", v.asymptotic_ok);
}

/// Certificate, or the reason there is none.
pub enum CertOutcome {
    Certified(Certificate),
    NoParams,
    ConditionFails { params: ConditionParams, witness: Option<f64> },
}

pub fn certify_prepared(scn: &Scenario, prep: &Prepared) -> Result<CertOutcome> {
    let Some(params) = resolve_params(scn, prep)? else {
        return Ok(CertOutcome::NoParams);
    };
    match blow_up_certificate_with(&prep.grid, &prep.u0, &prep.nl, &params, prep.lambda0, &scn.sampling()) {
        Ok(cert) => Ok(CertOutcome::Certified(cert)),
        Err(CertificateError::ConditionCViolated { witness, .. }) => Ok(CertOutcome::ConditionFails { params, witness }),
        Err(e) => Err(e.into()),
    }
}

fn write_certificate(r: &mut Report, scn: &Scenario, prep: &Prepared, outcome: &CertOutcome) -> bool {
    r.line("domain", domain_label(&prep.grid));
    r.line("nonlinearity", &prep.nl);
    r.line("lambda0_source", lambda_label(scn));
    r.num("lambda0", prep.lambda0);
    match outcome {
        CertOutcome::NoParams => {
            r.line("params", "search found no admissible (alpha, beta, gamma)");
            r.line("admissible", false);
            false
        }
        CertOutcome::ConditionFails { params, witness } => {
            write_params(r, scn, params, prep.lambda0);
            r.line("condition_c", "violated");
            r.line("witness_u", witness.map_or("none".to_string(), fmt6));
            r.line("admissible", false);
            false
        }
        CertOutcome::Certified(c) => {
            write_params(r, scn, &c.params, prep.lambda0);
            r.line("condition_c", "satisfied");
            r.num("J0", c.j0);
            r.num("mass0", c.mass0);
            r.num("measure", c.measure);
            r.line("M", c.m.map_or("undefined".to_string(), fmt6));
            r.line("T_star", c.t_star.map_or("undefined".to_string(), fmt6));
            r.line("admissible", c.admissible);
            c.admissible
        }
    }
}

pub fn certify(scn: &Scenario) -> Result<Output> {
    let prep = prepare(scn)?;
    let outcome = certify_prepared(scn, &prep)?;
    let mut r = Report::new("certify");
    let admissible = write_certificate(&mut r, scn, &prep, &outcome);
    Ok(Output {
        report: r.finish(),
        status: if admissible { Status::Ok } else { Status::NonAdmissible },
    })
}

/// Everything `run` reports, also used as one sweep row.
pub struct RunSummary {
    pub certificate: Option<Certificate>,
    pub trajectory: Trajectory,
    pub min_defect: Option<f64>,
    pub needed_offset: Option<f64>,
    pub status: Status,
    pub xi: Option<f64>,
}

impl RunSummary {
    pub fn t_star(&self) -> Option<f64> {
        self.certificate.as_ref().and_then(|c| c.t_star)
    }

    pub fn ratio(&self) -> Option<f64> {
        Some(self.trajectory.t_obs()? / self.t_star()?)
    }
}

pub fn run_pipeline(scn: &Scenario, prep: &Prepared, outcome: &CertOutcome) -> Result<RunSummary> {
    let (certificate, params) = match outcome {
        CertOutcome::Certified(c) => (Some(c.clone()), Some(c.params)),
        CertOutcome::ConditionFails { params, .. } => (None, Some(*params)),
        CertOutcome::NoParams => (None, None),
    };
    // Without parameters the monitors use γ = 0 and M = 0.
    let gamma = params.map_or(0.0, |p| p.gamma);
    let m = certificate.as_ref().and_then(|c| c.m).unwrap_or(0.0);
    let xi = params.map(|p| p.xi());
    let traj = run_until_blowup(&prep.grid, &prep.u0, &prep.nl, &scn.solver_config(), gamma, m)?;
    let (min_defect, needed_offset) = match xi {
        Some(xi) if traj.len() >= 3 => (
            concavity_defect(&traj, xi)?.into_iter().reduce(f64::min),
            minimal_offset(&traj, xi)?,
        ),
        _ => (None, None),
    };
    let admissible = certificate.as_ref().is_some_and(|c| c.admissible);
    let t_star = certificate.as_ref().and_then(|c| c.t_star);
    let t_end = *traj.times.last().expect("trajectory has a record");
    let status = consistency(admissible, traj.t_obs(), t_end, t_star);
    Ok(RunSummary {
        certificate,
        trajectory: traj,
        min_defect,
        needed_offset,
        status,
        xi,
    })
}

/// Exit status of a run. An admissible certificate is contradicted by a
/// blow-up after `T*` or by survival up to or past `T*`; survival that stops
/// short of `T*` is inconclusive but not a contradiction.
pub fn consistency(admissible: bool, t_obs: Option<f64>, t_end: f64, t_star: Option<f64>) -> Status {
    if !admissible {
        return Status::NonAdmissible;
    }
    match (t_obs, t_star) {
        (Some(t), Some(bound)) if t <= bound => Status::Ok,
        (None, Some(bound)) if t_end < bound => Status::Ok,
        _ => Status::Failed,
    }
}

fn opt6(v: Option<f64>) -> String {
    v.map_or("undefined".to_string(), fmt6)
}

pub fn run(scn: &Scenario, out_dir: &Path) -> Result<Output> {
    let prep = prepare(scn)?;
    let outcome = certify_prepared(scn, &prep)?;
    let mut r = Report::new("run");
    write_certificate(&mut r, scn, &prep, &outcome);
    let summary = run_pipeline(scn, &prep, &outcome)?;
    let traj = &summary.trajectory;
    r.line("outcome", traj.outcome.label());
    r.line("t_obs", opt6(traj.t_obs()));
    r.line("t_end", fmt6(*traj.times.last().expect("trajectory has a record")));
    r.line("T_star", opt6(summary.t_star()));
    r.line("t_obs_over_T_star", opt6(summary.ratio()));
    r.line("min_concavity_defect", opt6(summary.min_defect));
    r.line("minimal_offset_M", opt6(summary.needed_offset));
    r.num("max_J_decrease", max_decrease(&traj.j_direct));
    r.num("min_relative_value", traj.min_relative_value);
    r.line("steps", traj.steps);
    r.line("rejected_steps", traj.rejected_steps);
    r.line("records", traj.len());

    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let csv_path = out_dir.join("trajectory.csv");
    let file = fs::File::create(&csv_path).with_context(|| format!("creating {}", csv_path.display()))?;
    traj.write_csv(std::io::BufWriter::new(file), summary.xi)?;
    r.line("trajectory_csv", csv_path.display());

    let verdict = match (summary.status, traj.t_obs()) {
        (Status::Failed, _) => "FAILED: admissible certificate but no blow-up by T_star",
        (Status::Ok, Some(_)) => "ok",
        (Status::Ok, None) => "inconclusive (t_max is below T_star)",
        (Status::NonAdmissible, _) => "not applicable (non-admissible)",
    };
    r.line("consistency", verdict);
    Ok(Output {
        report: r.finish(),
        status: summary.status,
    })
}

/// Largest `J(t_k) − J(t_{k+1})` over the records; negative when `J` increases throughout.
fn max_decrease(j: &[f64]) -> f64 {
    j.windows(2).map(|w| w[0] - w[1]).fold(f64::NEG_INFINITY, f64::max)
}

pub fn compare(scn: &Scenario, out_dir: &Path) -> Result<Output> {
    let prep = prepare(scn)?;
    let sampling = scn.sampling();
    let mut rows: Vec<[String; 9]> = Vec::new();
    let mut r = Report::new("compare");
    r.line("nonlinearity", &prep.nl);
    r.line("lambda0_source", lambda_label(scn));
    r.num("lambda0", prep.lambda0);

    let mut table = String::new();
    writeln!(table, "{:<10} {:<28} {:<6} {:>14} {:>14}", "condition", "parameters", "holds", "worst_margin", "witness_u")?;
    let mut push = |table: &mut String, name: &str, eps: Option<f64>, c: Option<f64>, p: Option<ConditionParams>, v: &ConditionVerdict| {
        let label = match (eps, c, p) {
            (_, _, Some(p)) => format!("a={} b={} g={}", fmt6(p.alpha), fmt6(p.beta), fmt6(p.gamma)),
            (Some(e), Some(c), None) => format!("eps={} c={}", fmt6(e), fmt6(c)),
            (Some(e), None, None) => format!("eps={}", fmt6(e)),
            _ => String::new(),
        };
        let witness = v.witness_u.map_or("-".to_string(), fmt6);
        let _ = writeln!(table, "{:<10} {:<28} {:<6} {:>14} {:>14}", name, label, if v.satisfied { "yes" } else { "no" }, fmt6(v.worst_margin), witness);
        let o17 = |x: Option<f64>| x.map_or(String::new(), fmt17);
        rows.push([
            name.to_string(),
            o17(eps),
            o17(c),
            o17(p.map(|p| p.alpha)),
            o17(p.map(|p| p.beta)),
            o17(p.map(|p| p.gamma)),
            v.satisfied.to_string(),
            fmt17(v.worst_margin),
            o17(v.witness_u),
        ]);
    };

    let mut pp_count = 0;
    for &eps in &scn.compare.epsilons {
        let v = check_condition_pp(&prep.nl, eps, &sampling)?;
        pp_count += v.satisfied as usize;
        push(&mut table, "PP", Some(eps), None, None, &v);
    }
    let mut ibb_count = 0;
    for &eps in &scn.compare.epsilons {
        for &c in &scn.compare.cs {
            let v = check_condition_ibb(&prep.nl, eps, c, &sampling)?;
            ibb_count += v.satisfied as usize;
            push(&mut table, "IBB", Some(eps), Some(c), None, &v);
        }
    }
    let searched = search_condition_params(&prep.nl, prep.lambda0, &sampling, &scn.search_grid())?;
    let c_ok = match searched {
        Some(p) => {
            let v = check_condition_c(&prep.nl, &p, prep.lambda0, &sampling)?;
            push(&mut table, "C", None, None, Some(p), &v);
            v.satisfied
        }
        None => false,
    };
    let n_eps = scn.compare.epsilons.len();
    r.line("PP_satisfied", format!("{pp_count} of {n_eps} epsilons"));
    r.line("IBB_satisfied", format!("{ibb_count} of {} (epsilon, c) pairs", n_eps * scn.compare.cs.len()));
    r.line(
        "C_satisfied",
        match searched {
            Some(p) if c_ok => format!("yes (alpha={}, beta={}, gamma={})", fmt6(p.alpha), fmt6(p.beta), fmt6(p.gamma)),
            _ => "no admissible (alpha, beta, gamma) on the search grid".to_string(),
        },
    );
    let mut report = r.finish();
    report.push('\n');
    report.push_str(&table);

    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let path = out_dir.join("compare.csv");
    let mut w = csv::Writer::from_path(&path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(["condition", "epsilon", "c", "alpha", "beta", "gamma", "satisfied", "worst_margin", "witness_u"])?;
    for row in &rows {
        w.write_record(row)?;
    }
    w.flush()?;
    writeln!(report, "\ncompare_csv = {}", path.display())?;
    Ok(Output { report, status: Status::Ok })
}

/// `KEY=v1,v2,...` for `sweep`.
#[derive(Debug, Clone, PartialEq)]
pub struct Vary {
    pub key: String,
    pub values: Vec<String>,
}

impl std::str::FromStr for Vary {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (key, values) = s.split_once('=').ok_or_else(|| format!("{s:?} is not KEY=v1,v2,..."))?;
        let values: Vec<String> = values.split(',').map(|v| v.trim().to_string()).filter(|v| !v.is_empty()).collect();
        if key.trim().is_empty() || values.is_empty() {
            return Err(format!("{s:?} needs a key and at least one value"));
        }
        Ok(Vary {
            key: key.trim().to_string(),
            values,
        })
    }
}

/// Cartesian product of the varied values, first key slowest.
pub fn combinations(vary: &[Vary]) -> Vec<Vec<(String, String)>> {
    let mut out: Vec<Vec<(String, String)>> = vec![Vec::new()];
    for v in vary {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                v.values.iter().map(move |val| {
                    let mut next = prefix.clone();
                    next.push((v.key.clone(), val.clone()));
                    next
                })
            })
            .collect();
    }
    out
}

pub fn sweep(base_text: &str, overrides: &[String], vary: &[Vary], workers: usize, out_dir: &Path) -> Result<Output> {
    if vary.is_empty() {
        bail!("sweep needs at least one --vary KEY=v1,v2,...");
    }
    let combos = combinations(vary);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build()?;
    let rows: Vec<Result<RunSummary, String>> = pool.install(|| {
        combos
            .par_iter()
            .map(|combo| {
                let mut all = overrides.to_vec();
                all.extend(combo.iter().map(|(k, v)| format!("{k}={v}")));
                sweep_one(base_text, &all).map_err(|e| format!("{e:#}"))
            })
            .collect()
    });

    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let path = out_dir.join("sweep.csv");
    let mut w = csv::Writer::from_path(&path).with_context(|| format!("creating {}", path.display()))?;
    let mut header = vec!["index".to_string()];
    header.extend(vary.iter().map(|v| v.key.clone()));
    header.extend(
        ["admissible", "alpha", "beta", "gamma", "J0", "M", "T_star", "outcome", "t_obs", "t_obs_over_T_star", "min_concavity_defect", "status", "error"]
            .map(String::from),
    );
    w.write_record(&header)?;

    let mut table = String::new();
    writeln!(table, "{:>5} {:<40} {:<10} {:<14} {:>12} {:>12} {:>10}", "index", "values", "admissible", "outcome", "t_obs", "T_star", "ratio")?;
    let mut worst = Status::Ok;
    for (i, (combo, row)) in combos.iter().zip(&rows).enumerate() {
        let values = combo.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(" ");
        let mut record = vec![i.to_string()];
        record.extend(combo.iter().map(|(_, v)| v.clone()));
        let o17 = |x: Option<f64>| x.map_or(String::new(), fmt17);
        match row {
            Ok(s) => {
                let c = s.certificate.as_ref();
                let p = c.map(|c| c.params);
                record.extend([
                    c.is_some_and(|c| c.admissible).to_string(),
                    o17(p.map(|p| p.alpha)),
                    o17(p.map(|p| p.beta)),
                    o17(p.map(|p| p.gamma)),
                    o17(c.map(|c| c.j0)),
                    o17(c.and_then(|c| c.m)),
                    o17(s.t_star()),
                    s.trajectory.outcome.label().to_string(),
                    o17(s.trajectory.t_obs()),
                    o17(s.ratio()),
                    o17(s.min_defect),
                    s.status.code().to_string(),
                    String::new(),
                ]);
                writeln!(
                    table,
                    "{:>5} {:<40} {:<10} {:<14} {:>12} {:>12} {:>10}",
                    i,
                    values,
                    c.is_some_and(|c| c.admissible),
                    s.trajectory.outcome.label(),
                    opt6(s.trajectory.t_obs()),
                    opt6(s.t_star()),
                    opt6(s.ratio())
                )?;
                if s.status == Status::Failed {
                    worst = Status::Failed;
                }
            }
            Err(e) => {
                record.extend(std::iter::repeat_n(String::new(), 11));
                record.push("1".into());
                record.push(e.clone());
                writeln!(table, "{i:>5} {values:<40} error: {e}")?;
                worst = Status::Failed;
            }
        }
        w.write_record(&record)?;
    }
    w.flush()?;

    let mut r = Report::new("sweep");
    r.line("scenarios", combos.len());
    r.line("workers", workers.max(1));
    r.line("sweep_csv", path.display());
    let mut report = r.finish();
    report.push('\n');
    report.push_str(&table);
    Ok(Output { report, status: worst })
}

fn sweep_one(base_text: &str, overrides: &[String]) -> Result<RunSummary> {
    let scn = Scenario::from_toml(base_text, overrides)?;
    let prep = prepare(&scn)?;
    let outcome = certify_prepared(&scn, &prep)?;
    run_pipeline(&scn, &prep, &outcome)
}

/// `--out` if given, else `output.dir` from the scenario.
pub fn out_dir(cli_out: Option<&Path>, scn: &Scenario) -> PathBuf {
    cli_out.map_or_else(|| PathBuf::from(&scn.output.dir), Path::to_path_buf)
}
