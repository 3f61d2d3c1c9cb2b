//! One function per subcommand, each producing a [`Document`].

use anyhow::Result;
use rayon::prelude::*;

use tfim_core::bounds::{dec_rms, proj_rms, t_bound, ConfirmedOutcome, ProtocolConfig};
use tfim_core::gaussian::{cso, mode_occupation, GaussianOperator};
use tfim_core::linalg::max_abs;
use tfim_core::modes::{mode_number_quadratic_form, OpenChainSpectrum};
use tfim_core::oracle::{
    confirmation_stats, dense_alpha, dense_cso, dense_expectation, dense_gamma, mode_projector,
    partial_trace, quench_state, Boundary, Evolver, Postulate, ProtocolSimulator, ProtocolSpec,
};
use tfim_core::practical::{
    all_overlaps, optimize_basis, partition_subspaces, proj_confirm_bound, repeated_confirm_bounds,
    z_basis_overlap, BasisObjective, LocalBasis, OptimizeOptions, OutcomeString,
};
use tfim_core::quench::{
    correlation_matrix, finite_l_correlation_matrix, stationary_correlation_matrix,
    CorrelationMatrix, QuenchConfig,
};
use tfim_core::{exact_alpha, purity, Error};

use crate::config::Params;
use crate::output::{Cell, Document};
use crate::{
    usage, Command, CsoArgs, CsoMethodArg, LimitArg, ObjectiveArg, OracleArgs, OracleTask,
    OutcomeArg, PostulateArg, PracticalArgs, PracticalTask, RmsArgs, RmsKindArg,
};

/// Largest N for which the local-measurement bound enumerates all strings.
const MAX_ENUMERATED_SITES: usize = 20;

/// The document, plus a failure message when the run completed but its
/// checks did not pass.
pub type Outcome = (Document, Option<String>);

pub fn execute(command: &Command, p: &Params) -> Result<Outcome> {
    let doc = match command {
        Command::Modes => modes(p)?,
        Command::Gamma => gamma(p)?,
        Command::Cso(args) => cso_command(args, p)?,
        Command::Rms(args) => rms(args, p)?,
        Command::Practical(args) => practical(args, p)?,
        Command::Oracle(args) => return oracle(args, p),
        Command::Sweep(_) => unreachable!("sweep is dispatched separately"),
    };
    Ok((doc, None))
}

fn with_extra(p: &Params, extra: &[(&str, String)]) -> Vec<(String, String)> {
    let mut v = p.provenance();
    v.retain(|(key, _)| !extra.iter().any(|(e, _)| e == key));
    v.extend(extra.iter().map(|(k, s)| (k.to_string(), s.clone())));
    v.sort();
    v
}

fn confirmed(outcome: OutcomeArg) -> ConfirmedOutcome {
    match outcome {
        OutcomeArg::Empty => ConfirmedOutcome::Empty,
        OutcomeArg::Occupied => ConfirmedOutcome::Occupied,
    }
}

pub fn modes(p: &Params) -> Result<Document> {
    let s = OpenChainSpectrum::new(p.n(), p.xi())?;
    let mut doc = Document::new("modes", with_extra(p, &[]), &["k", "phi", "lambda", "norm"]);
    for k in 0..s.n {
        doc.push(vec![k.into(), s.phi[k].into(), s.lambda[k].into(), s.norm[k].into()]);
    }
    Ok(doc)
}

fn quench_config(p: &Params, n: usize, xi: f64, t: f64) -> QuenchConfig {
    QuenchConfig {
        quad_tol: p.quad_tol(),
        l: p.l,
        ..QuenchConfig::new(n, xi, t)
    }
}

fn gamma_at(cfg: &QuenchConfig) -> tfim_core::Result<CorrelationMatrix> {
    match cfg.l {
        Some(_) => finite_l_correlation_matrix(cfg),
        None => correlation_matrix(cfg),
    }
}

pub fn gamma(p: &Params) -> Result<Document> {
    let g = gamma_at(&quench_config(p, p.n(), p.xi(), p.t()))?;
    let mut doc = Document::new("gamma", with_extra(p, &[]), &["row", "col", "re", "im"]);
    for r in 0..g.dim() {
        for c in 0..g.dim() {
            let z = g.data[(r, c)];
            doc.push(vec![r.into(), c.into(), z.re.into(), z.im.into()]);
        }
    }
    doc.summarize("purity", purity(&g)?);
    doc.summarize("invariant_violation", g.invariant_violation());
    Ok(doc)
}

pub fn cso_command(args: &CsoArgs, p: &Params) -> Result<Document> {
    if args.inset {
        cso_inset(args, p)
    } else {
        cso_series(args, p)
    }
}

fn cso_series(args: &CsoArgs, p: &Params) -> Result<Document> {
    let (n, k, xi) = (p.n(), p.k(), p.xi());
    let spectrum = OpenChainSpectrum::new(n, xi)?;
    spectrum.check_mode(k)?;
    let times = p.time_grid()?;
    let method = format!("{:?}", args.method).to_lowercase();
    let mut doc = Document::new("cso", with_extra(p, &[("method", method)]), &["t", "cso"]);

    let values: Vec<tfim_core::Result<f64>> = match args.method {
        CsoMethodArg::Gaussian => times
            .par_iter()
            .map(|&t| {
                let g = gamma_at(&quench_config(p, n, xi, t))?;
                Ok(cso(&GaussianOperator::state(g), &spectrum, k)?.value)
            })
            .collect(),
        CsoMethodArg::Dense => {
            let l = p
                .l
                .ok_or_else(|| usage("the dense method needs --l (periodic chain length)"))?;
            let evolver = Evolver::for_chain(l, xi, Boundary::Periodic)?;
            times
                .par_iter()
                .map(|&t| {
                    let rdm = partial_trace(&quench_state(&evolver, l, t)?, n)?;
                    Ok(dense_cso(&rdm, &spectrum, k, t)?.value)
                })
                .collect()
        }
    };
    for (t, v) in times.iter().zip(values) {
        match v {
            Ok(c) => doc.push(vec![(*t).into(), c.into()]),
            Err(e) if !e.is_invalid_input() => {
                doc.note(format!("gap at t = {t}: {e}"));
                doc.push(vec![(*t).into(), Cell::Gap]);
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(doc)
}

fn cso_inset(args: &CsoArgs, p: &Params) -> Result<Document> {
    let n = p.n.unwrap_or(16);
    let k = p.k.unwrap_or(if n <= 2 { 0 } else { 1 });
    let xis = p.xi_values.clone().unwrap_or_else(|| vec![0.99, 1.0, 1.001]);
    let mut extra = vec![
        ("limit", format!("{:?}", args.limit).to_lowercase()),
        ("n", n.to_string()),
        ("k", k.to_string()),
        ("xi-values", format!("{xis:?}")),
    ];
    if args.limit == LimitArg::Window {
        if !(args.window_step > 0.0 && args.window_end >= args.window_start && args.window_start >= 0.0) {
            return Err(usage("late-time window needs 0 <= start <= end and step > 0"));
        }
        extra.push(("window", format!("[{}, {}] step {}", args.window_start, args.window_end, args.window_step)));
    }
    let mut doc = Document::new("cso-inset", with_extra(p, &extra), &["xi", "cso_limit"]);
    let values: Vec<tfim_core::Result<f64>> = xis
        .par_iter()
        .map(|&xi| {
            let spectrum = OpenChainSpectrum::new(n, xi)?;
            spectrum.check_mode(k)?;
            match args.limit {
                LimitArg::Stationary => {
                    let g = stationary_correlation_matrix(n, xi, p.quad_tol())?;
                    Ok(cso(&GaussianOperator::state(g), &spectrum, k)?.value)
                }
                LimitArg::Window => {
                    let count = ((args.window_end - args.window_start) / args.window_step + 1e-9)
                        .floor() as usize;
                    let mut acc = 0.0;
                    for i in 0..=count {
                        let t = args.window_start + i as f64 * args.window_step;
                        let g = correlation_matrix(&QuenchConfig {
                            quad_tol: p.quad_tol(),
                            ..QuenchConfig::new(n, xi, t)
                        })?;
                        acc += cso(&GaussianOperator::state(g), &spectrum, k)?.value;
                    }
                    Ok(acc / (count + 1) as f64)
                }
            }
        })
        .collect();
    for (xi, v) in xis.iter().zip(values) {
        match v {
            Ok(c) => doc.push(vec![(*xi).into(), c.into()]),
            Err(e) => {
                doc.note(format!("gap at xi = {xi}: {e}"));
                doc.push(vec![(*xi).into(), Cell::Gap]);
            }
        }
    }
    Ok(doc)
}

/// Overlap of a z-basis string with the confirmed sector of `Π_k`.
fn sector_overlap(s: &OpenChainSpectrum, k: usize, o: &OutcomeString, outcome: OutcomeArg) -> tfim_core::Result<f64> {
    let occ = z_basis_overlap(s, k, o)?;
    Ok(match outcome {
        OutcomeArg::Empty => 1.0 - occ,
        OutcomeArg::Occupied => occ,
    })
}

/// Best string for confirming `outcome` and its overlap.
pub fn best_string(s: &OpenChainSpectrum, k: usize, outcome: OutcomeArg) -> tfim_core::Result<(OutcomeString, f64)> {
    let mut best = (OutcomeString::from_index(s.n, 0), f64::NEG_INFINITY);
    for o in OutcomeString::all(s.n) {
        let v = sector_overlap(s, k, &o, outcome)?;
        if v > best.1 {
            best = (o, v);
        }
    }
    Ok(best)
}

pub fn rms(args: &RmsArgs, p: &Params) -> Result<Document> {
    let config = ProtocolConfig {
        quad_tol: p.quad_tol(),
        ..ProtocolConfig::new(p.n(), p.k(), p.xi(), p.p_min(), p.n_max())
    };
    let tb = t_bound(&config)?;
    let spectrum = config.spectrum()?;
    let extra = [
        ("kind", format!("{:?}", args.kind).to_lowercase()),
        ("outcome", format!("{:?}", args.outcome).to_lowercase()),
    ];
    let mut doc = Document::new(
        "rms",
        with_extra(p, &extra),
        &["n", "proj_min", "proj_min_local", "dec_max"],
    );
    doc.summarize("t_bound", tb);
    let want = |k: RmsKindArg| args.kind == RmsKindArg::All || args.kind == k;

    let proj = if want(RmsKindArg::Proj) {
        Some(proj_rms(&config)?.values)
    } else {
        None
    };
    let local = if want(RmsKindArg::Local) {
        if config.n > MAX_ENUMERATED_SITES {
            doc.note(format!("local bound skipped: N > {MAX_ENUMERATED_SITES}"));
            None
        } else {
            let (string, overlap) = best_string(&spectrum, config.k, args.outcome)?;
            let per_step = proj_confirm_bound(overlap, config.p_min);
            doc.summarize("best_string", string.to_string());
            doc.summarize("best_overlap", overlap);
            doc.summarize("local_per_step", per_step);
            Some(tfim_core::proj_local_rms(per_step, config.n_max).values)
        }
    } else {
        None
    };
    let dec = if want(RmsKindArg::Dec) {
        Some(dec_rms(&config, confirmed(args.outcome))?.values)
    } else {
        None
    };
    let cell = |s: &Option<Vec<f64>>, i: usize| s.as_ref().map_or(Cell::Gap, |v| Cell::Num(v[i]));
    for i in 0..config.n_max {
        doc.push(vec![(i + 1).into(), cell(&proj, i), cell(&local, i), cell(&dec, i)]);
    }
    Ok(doc)
}

pub fn practical(args: &PracticalArgs, p: &Params) -> Result<Document> {
    let (n, k, xi) = (p.n(), p.k(), p.xi());
    let spectrum = OpenChainSpectrum::new(n, xi)?;
    spectrum.check_mode(k)?;
    let task = format!("{:?}", args.task).to_lowercase();
    let enumerable = || {
        if n > MAX_ENUMERATED_SITES {
            Err(usage(format!("enumerating 2^N strings needs N <= {MAX_ENUMERATED_SITES}")))
        } else {
            Ok(())
        }
    };
    let doc = match args.task {
        PracticalTask::Overlaps => {
            enumerable()?;
            let mut doc = Document::new(
                "practical",
                with_extra(p, &[("task", task)]),
                &["index", "string", "overlap"],
            );
            let overlaps = all_overlaps(&spectrum, k, &LocalBasis::z(n))?;
            for (i, o) in overlaps.iter().enumerate() {
                doc.push(vec![i.into(), OutcomeString::from_index(n, i).to_string().into(), (*o).into()]);
            }
            doc
        }
        PracticalTask::Bound => {
            enumerable()?;
            let extra = [("task", task), ("outcome", format!("{:?}", args.outcome).to_lowercase())];
            let mut doc = Document::new("practical", with_extra(p, &extra), &["n", "bound"]);
            let (string, overlap) = best_string(&spectrum, k, args.outcome)?;
            let per_step = proj_confirm_bound(overlap, p.p_min());
            doc.summarize("best_string", string.to_string());
            doc.summarize("best_overlap", overlap);
            doc.summarize("per_step", per_step);
            for (i, v) in tfim_core::proj_local_rms(per_step, p.n_max()).values.iter().enumerate() {
                doc.push(vec![(i + 1).into(), (*v).into()]);
            }
            doc
        }
        PracticalTask::Repeated => {
            let b = repeated_confirm_bounds(p.eps(), p.p_min(), n, p.n_max())?;
            let mut doc = Document::new(
                "practical",
                with_extra(p, &[("task", task)]),
                &["step", "per_step", "cumulative"],
            );
            doc.summarize("base", b.base);
            doc.summarize("retention", b.retention);
            doc.summarize("min_overlap", *b.min_overlap.last().expect("non-empty"));
            for j in 0..b.per_step.len() {
                doc.push(vec![(j + 1).into(), b.per_step[j].into(), b.cumulative[j].into()]);
            }
            doc
        }
        PracticalTask::Optimize => {
            let objective = match args.objective {
                ObjectiveArg::Variance => BasisObjective::VarianceL,
                ObjectiveArg::Partition => BasisObjective::PartitionEps,
            };
            let options = OptimizeOptions {
                objective,
                budget: args.budget,
                starts: args.starts,
                seed: p.seed(),
            };
            let extra = [
                ("task", task),
                ("objective", format!("{:?}", args.objective).to_lowercase()),
                ("budget", args.budget.to_string()),
                ("starts", args.starts.to_string()),
            ];
            let mut doc = Document::new("practical", with_extra(p, &extra), &["site", "theta", "phi"]);
            let (basis, value, baseline) = match optimize_basis(&spectrum, k, &options) {
                Ok(r) => (r.basis, r.objective, Some(r.baseline)),
                Err(Error::BudgetExhausted { objective, best, .. }) => {
                    doc.note("evaluation budget exhausted; reporting the best basis found");
                    (*best, objective, None)
                }
                Err(e) => return Err(e.into()),
            };
            doc.summarize("objective", value);
            if let Some(b) = baseline {
                doc.summarize("z_basis_objective", b);
            }
            let part = partition_subspaces(&spectrum, k, &basis, p.eps())?;
            doc.summarize("partition_exhaustive", if part.exhaustive { "yes" } else { "no" });
            for i in 0..n {
                doc.push(vec![i.into(), basis.theta[i].into(), basis.phi_az[i].into()]);
            }
            doc
        }
        PracticalTask::Partition => {
            enumerable()?;
            let mut doc = Document::new(
                "practical",
                with_extra(p, &[("task", task)]),
                &["string", "set", "overlap"],
            );
            let basis = LocalBasis::z(n);
            let part = partition_subspaces(&spectrum, k, &basis, p.eps())?;
            let overlaps = all_overlaps(&spectrum, k, &basis)?;
            doc.summarize("exhaustive", if part.exhaustive { "yes" } else { "no" });
            doc.summarize("plus", part.plus_set.len());
            doc.summarize("minus", part.minus_set.len());
            for (i, o) in overlaps.iter().enumerate() {
                let s = OutcomeString::from_index(n, i);
                let set = if part.plus_set.contains(&s) {
                    "plus"
                } else if part.minus_set.contains(&s) {
                    "minus"
                } else {
                    "none"
                };
                doc.push(vec![s.to_string().into(), set.into(), (*o).into()]);
            }
            doc
        }
    };
    Ok(doc)
}

pub fn oracle(args: &OracleArgs, p: &Params) -> Result<Outcome> {
    match args.task {
        OracleTask::Equivalence => equivalence(args, p),
        OracleTask::Protocol => protocol(args, p).map(|d| (d, None)),
    }
}

fn equivalence(args: &OracleArgs, p: &Params) -> Result<Outcome> {
    let l = p.l.unwrap_or(8);
    let n = p.n.unwrap_or(2);
    let xi = p.xi();
    let spectrum = OpenChainSpectrum::new(n, xi)?;
    let forms = (0..n)
        .map(|k| mode_number_quadratic_form(&spectrum, k))
        .collect::<tfim_core::Result<Vec<_>>>()?;
    let evolver = Evolver::for_chain(l, xi, Boundary::Periodic)?;
    let times = p.time_grid()?;
    let extra = [
        ("task", "equivalence".to_string()),
        ("tol", format!("{:e}", args.tol)),
        ("l", l.to_string()),
        ("n", n.to_string()),
    ];
    let mut doc = Document::new(
        "oracle",
        with_extra(p, &extra),
        &["t", "quantity", "deviation", "status"],
    );
    let rows: Vec<Vec<(String, f64)>> = times
        .par_iter()
        .map(|&t| -> Result<Vec<(String, f64)>> {
            let rdm = partial_trace(&quench_state(&evolver, l, t)?, n)?;
            let g = finite_l_correlation_matrix(&QuenchConfig::new(n, xi, t).with_length(l))?;
            let mut out = vec![
                ("gamma".to_string(), max_abs(&(dense_gamma(&rdm, t).data - &g.data))),
                ("purity".to_string(), (purity(&g)? - rdm.purity()).abs()),
                ("alpha".to_string(), (exact_alpha(&g) - dense_alpha(&rdm)).abs()),
            ];
            let op = GaussianOperator::state(g.clone());
            for (k, form) in forms.iter().enumerate() {
                let occ = dense_expectation(&rdm, &mode_projector(&spectrum, k));
                out.push((format!("occupation_{k}"), (mode_occupation(&g, form) - occ).abs()));
                let dense = dense_cso(&rdm, &spectrum, k, t)?.value;
                out.push((format!("cso_{k}"), (cso(&op, &spectrum, k)?.value - dense).abs()));
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut failures = 0usize;
    let mut worst: f64 = 0.0;
    for (t, checks) in times.iter().zip(rows) {
        for (name, dev) in checks {
            let pass = dev <= args.tol;
            failures += usize::from(!pass);
            worst = worst.max(dev);
            doc.push(vec![(*t).into(), name.into(), dev.into(), (if pass { "pass" } else { "fail" }).into()]);
        }
    }
    doc.summarize("checks", doc.rows.len());
    doc.summarize("failures", failures);
    doc.summarize("max_deviation", worst);
    let failure = (failures > 0).then(|| format!("{failures} equivalence checks exceeded {:e}", args.tol));
    Ok((doc, failure))
}

fn protocol(args: &OracleArgs, p: &Params) -> Result<Document> {
    let l = p.l.unwrap_or(10);
    let n = p.n.unwrap_or(4);
    let k = p.k.unwrap_or(if n <= 2 { 0 } else { 1 });
    let xi = p.xi();
    let n_steps = p.n_max.unwrap_or(3);
    let dt = match args.dt {
        Some(dt) => dt,
        None => t_bound(&ProtocolConfig::new(n, k, xi, p.p_min(), n_steps.max(1)))?,
    };
    let postulate = match args.postulate {
        PostulateArg::Projective => Postulate::Projective,
        PostulateArg::Continuous => Postulate::Continuous,
    };
    let spec = ProtocolSpec {
        l,
        n,
        k,
        xi,
        dt,
        n_steps,
        boundary: Boundary::Periodic,
        postulate,
    };
    let sim = ProtocolSimulator::new(spec)?;
    let records = sim.trajectories(p.seed(), args.trajectories)?;
    let stats = confirmation_stats(&records);
    let exact = sim.exact_cumulative_confirmation();
    let mut histogram = vec![0u64; n_steps + 1];
    for r in &records {
        histogram[r.confirmations()] += 1;
    }
    let extra = [
        ("task", "protocol".to_string()),
        ("postulate", format!("{:?}", args.postulate).to_lowercase()),
        ("trajectories", args.trajectories.to_string()),
        ("dt", format!("{dt:e}")),
        ("l", l.to_string()),
        ("n", n.to_string()),
        ("k", k.to_string()),
        ("n-max", n_steps.to_string()),
    ];
    let mut doc = Document::new(
        "oracle",
        with_extra(p, &extra),
        &["step", "rate", "sigma", "cumulative", "exact_cumulative", "stopped_here"],
    );
    doc.summarize("dt", dt);
    doc.summarize("never_confirmed", histogram[0]);
    for j in 1..=n_steps {
        // trajectories whose first disagreement is at step j + 1 (or never)
        doc.push(vec![
            j.into(),
            stats.per_step_rate[j - 1].into(),
            stats.per_step_sigma[j - 1].into(),
            stats.cumulative[j - 1].into(),
            exact[j].into(),
            histogram[j].into(),
        ]);
    }
    Ok(doc)
}
