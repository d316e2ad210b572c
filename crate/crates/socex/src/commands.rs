//! Subcommand bodies. Each returns the rendered report and whether every
//! assertion held; the caller decides where the text goes.

use serde_json::{json, Value};
use socex_core::agent::{exact_audit, AuditReport, ExactAudit, EXACT_TOL};
use socex_core::mechanism::MechanismKind;
use socex_core::network::power_floor;
use socex_core::partition::{build_partition, build_replicated_partition, cell_table, k_bounds, verify_partition};
use socex_core::sim::{run_demos, Metrics, Prepared};
use socex_core::stats::Moments;

use crate::config::{AuditMethod, Config};
use crate::error::CliResult;
use crate::parallel;
use crate::table::Table;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Structured,
}

/// Rendered output plus the overall verdict.
pub struct Report {
    pub text: String,
    pub ok: bool,
}

fn render(format: Format, table: Table, summary: Value, ok: bool) -> Report {
    let text = match format {
        Format::Csv => table.finish(),
        Format::Structured => {
            let mut s = serde_json::to_string_pretty(&summary).expect("json values serialize");
            s.push('\n');
            s
        }
    };
    Report { text, ok }
}

fn moments(m: &Moments) -> Value {
    json!({ "n": m.n, "mean": finite(m.mean()), "stderr": finite(m.std_err()) })
}

/// NaN and infinities become `null`.
fn finite(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

fn opt_cell<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn scenario_json(p: &Prepared) -> Value {
    json!({
        "mechanism": p.mechanism.kind().as_str(),
        "n_agents": p.n_agents(),
        "edges": p.graph.edge_count(),
        "max_degree": p.graph.max_degree(),
        "alpha": p.regime.alpha,
        "beta": p.regime.beta,
        "mu_a": p.mu_a(),
        "mu_b": p.mu_b(),
        "k": p.base_k,
        "cells": p.mechanism.cells(),
        "replicas": p.mechanism.replica_count(),
        "seed": p.seed,
    })
}

fn metrics_json(m: &Metrics) -> Value {
    json!({
        "replications": m.replications,
        "fraction_optimal": moments(&m.fraction_optimal),
        "avg_reward": moments(&m.avg_reward),
        "optimality_ratio": moments(&m.optimality_ratio),
        "regret": moments(&m.regret),
        "b_better": moments(&m.b_better),
        "exploration_end": moments(&m.exploration_end),
        "exploration_end_max": m.exploration_end_max,
        "exploration_incomplete": m.exploration_incomplete,
    })
}

pub fn partition(cfg: &Config, format: Format) -> CliResult<Report> {
    let va = cfg.dist_a.build("dist_a")?;
    let vb = cfg.dist_b.build("dist_b")?;
    let mu_b = vb.mean();
    let tol = cfg.mechanism.tol;
    let header = ["cell", "lo", "hi", "mass", "cond_mean", "indifference_residual"];
    let part = match build_partition(&va, mu_b, tol) {
        Ok(p) => p,
        Err(socex_core::Error::NoExplorationNeeded) => {
            let summary = json!({ "mu_b": mu_b, "k": 0, "exploration_needed": false, "pass": true });
            return Ok(render(format, Table::new("partition", &header), summary, true));
        }
        Err(e) => return Err(e.into()),
    };
    let bounds = k_bounds(&va, mu_b)?;
    let report = verify_partition(&part, &va, tol);
    // the bracket only holds for non-negative rewards
    let bracket_applies = va.support_lo() >= 0.0;
    let in_bracket = !bracket_applies || bounds.contains(part.k());

    let mut table = Table::new("partition", &header);
    let rows = cell_table(&part, &va);
    for r in &rows {
        table.row([
            r.index.to_string(),
            r.lo.to_string(),
            r.hi.to_string(),
            r.mass.to_string(),
            r.cond_mean.to_string(),
            r.residual.to_string(),
        ]);
    }

    let mut replicated = Value::Null;
    let mut ok = report.pass() && in_bracket;
    if cfg.mechanism.kind == crate::config::MechanismName::High {
        let m = match (cfg.mechanism.replicas, cfg.n_agents) {
            (Some(m), _) => m,
            (None, Some(n)) => power_floor(n, cfg.mechanism.beta) + 1,
            (None, None) => 1,
        };
        let rp = build_replicated_partition(&va, mu_b, m, cfg.mechanism.replica_mode(), tol)?;
        let rep_report = verify_partition(&rp, &va, tol);
        let bound = socex_core::partition::k_prime_bound(va.mean(), mu_b, m, part.k());
        ok &= rep_report.pass() && rp.k_prime() as f64 <= bound;
        replicated = json!({
            "replicas": m,
            "k_prime": rp.k_prime(),
            "k_prime_bound": bound,
            "checks_pass": rep_report.pass(),
        });
    }

    let checks: Vec<Value> = report
        .checks
        .iter()
        .map(|c| json!({ "name": c.name, "residual": c.residual, "tolerance": c.tolerance, "pass": c.pass() }))
        .collect();
    let summary = json!({
        "mu_b": mu_b,
        "k": part.k(),
        "exploration_needed": true,
        "k_bracket": if bracket_applies { json!([bounds.lower, bounds.upper]) } else { Value::Null },
        "k_in_bracket": in_bracket,
        "delta": part.delta(),
        "d0_mass": part.d0_mass(),
        "d0_mean": part.d0_mean(),
        "cells": rows.iter().map(|r| json!({
            "cell": r.index, "lo": r.lo, "hi": r.hi, "mass": r.mass,
            "cond_mean": finite(r.cond_mean), "indifference_residual": finite(r.residual),
        })).collect::<Vec<_>>(),
        "checks": checks,
        "replicated": replicated,
        "pass": ok,
    });
    Ok(render(format, table, summary, ok))
}

pub fn simulate(cfg: &Config, format: Format) -> CliResult<Report> {
    let p = cfg.scenario()?.prepare()?;
    let rows = parallel::checked_runs(&p, cfg.replications as u64)?;
    let mut table = Table::new(
        "simulate",
        &[
            "replication",
            "seed",
            "va",
            "vb",
            "fraction_optimal",
            "avg_reward",
            "exploration_end",
            "rho",
            "shadow",
            "z",
            "k",
            "bounds_pass",
        ],
    );
    let mut metrics = Metrics::default();
    let mut failures = 0usize;
    for (s, checks) in &rows {
        metrics.push(s);
        let pass = checks.iter().all(|c| c.pass());
        failures += usize::from(!pass);
        table.row([
            s.index.to_string(),
            s.seed.to_string(),
            s.va.to_string(),
            s.vb.to_string(),
            s.fraction_optimal.to_string(),
            s.avg_reward.to_string(),
            opt_cell(s.exploration_end),
            s.rho.to_string(),
            s.shadow.to_string(),
            s.z.to_string(),
            s.k.to_string(),
            pass.to_string(),
        ]);
    }
    let summary = json!({
        "scenario": scenario_json(&p),
        "metrics": metrics_json(&metrics),
        "bound_check_failures": failures,
    });
    Ok(render(format, table, summary, failures == 0))
}

pub fn check_bounds(cfg: &Config, format: Format) -> CliResult<Report> {
    let p = cfg.scenario()?.prepare()?;
    let rows = parallel::checked_runs(&p, cfg.replications as u64)?;
    let mut table = Table::new(
        "check-bounds",
        &["replication", "seed", "check", "applicable", "measured", "bound", "slack", "pass"],
    );
    let mut agg: std::collections::BTreeMap<&str, (usize, usize, usize, f64)> = Default::default();
    for (s, checks) in &rows {
        for c in checks {
            table.row([
                s.index.to_string(),
                s.seed.to_string(),
                c.name.to_string(),
                c.applicable.to_string(),
                c.measured.to_string(),
                c.bound.to_string(),
                c.slack().to_string(),
                c.pass().to_string(),
            ]);
            let e = agg.entry(c.name).or_insert((0, 0, 0, f64::INFINITY));
            e.0 += 1;
            if c.applicable {
                e.1 += 1;
                e.3 = e.3.min(c.slack());
            }
            e.2 += usize::from(!c.pass());
        }
    }
    let ok = agg.values().all(|e| e.2 == 0);
    let checks: Vec<Value> = agg
        .iter()
        .map(|(name, e)| json!({ "check": name, "runs": e.0, "applicable": e.1, "failures": e.2, "min_slack": finite(e.3) }))
        .collect();
    let summary = json!({ "scenario": scenario_json(&p), "checks": checks, "pass": ok });
    Ok(render(format, table, summary, ok))
}

pub fn audit(cfg: &Config, format: Format) -> CliResult<Report> {
    let p = cfg.scenario()?.prepare()?;
    let a = &cfg.audit;
    let exact = match a.method {
        AuditMethod::Exact | AuditMethod::Both => Some(exact_audit(&p)?),
        AuditMethod::MonteCarlo => None,
    };
    let mc = match a.method {
        AuditMethod::MonteCarlo | AuditMethod::Both => {
            let runs = a.runs.unwrap_or(cfg.replications as u64);
            Some(parallel::mc_audit(&p, a.agents.as_deref(), runs)?.finish(&a.params()))
        }
        AuditMethod::Exact => None,
    };
    let wanted = |agent: usize| a.agents.as_ref().is_none_or(|list| list.contains(&agent));

    let mut table = Table::new(
        "audit",
        &[
            "source",
            "agent_class",
            "position",
            "agent",
            "info_set",
            "matched",
            "prob",
            "ev_a",
            "ev_b",
            "gain",
            "stderr",
            "status",
        ],
    );
    if let Some(ex) = &exact {
        for g in ex.groups.iter().filter(|g| wanted(g.agent)) {
            let status = if g.gain <= EXACT_TOL { "ok" } else { "violation" };
            table.row([
                "exact".into(),
                g.branch.as_str().into(),
                g.position.to_string(),
                g.agent.to_string(),
                g.key.to_string(),
                String::new(),
                g.prob.to_string(),
                g.ev_a.to_string(),
                g.ev_b.to_string(),
                g.gain.to_string(),
                "0".into(),
                status.into(),
            ]);
        }
    }
    if let Some(r) = &mc {
        for g in &r.groups {
            let status = if !r.is_supported(g) {
                "insufficient"
            } else if r.certifies(g) {
                "ok"
            } else {
                "violation"
            };
            table.row([
                "monte-carlo".into(),
                g.branch.as_str().into(),
                g.position.to_string(),
                g.agent.to_string(),
                g.key.to_string(),
                g.matched.to_string(),
                String::new(),
                g.ev_a.to_string(),
                g.ev_b.to_string(),
                g.gain.to_string(),
                g.stderr.to_string(),
                status.into(),
            ]);
        }
    }

    let exact_ok =
        exact.as_ref().is_none_or(|e| e.groups.iter().filter(|g| wanted(g.agent)).all(|g| g.gain <= EXACT_TOL));
    let mc_ok = mc.as_ref().is_none_or(AuditReport::certified);
    let summary = json!({
        "scenario": scenario_json(&p),
        "exact": exact.as_ref().map(|e| exact_json(e, &wanted)),
        "monte_carlo": mc.as_ref().map(|r| mc_json(r, exact.as_ref())),
        "certified": exact_ok && mc_ok,
    });
    Ok(render(format, table, summary, exact_ok && mc_ok))
}

fn exact_json(e: &ExactAudit, wanted: &dyn Fn(usize) -> bool) -> Value {
    let witness =
        e.groups.iter().filter(|g| wanted(g.agent)).max_by(|a, b| a.gain.total_cmp(&b.gain)).map(
            |g| json!({ "agent": g.agent, "position": g.position, "info_set": g.key.to_string(), "gain": g.gain }),
        );
    let classes: Vec<Value> = e
        .by_branch()
        .iter()
        .map(
            |(b, (sets, prob, gain))| json!({ "class": b.as_str(), "info_sets": sets, "prob": prob, "max_gain": gain }),
        )
        .collect();
    json!({
        "info_sets": e.groups.len(),
        "max_gain": e.max_gain(),
        "witness": witness,
        "classes": classes,
        "p_b_better_never_tried": e.p_b_missed,
        "p_exploration_unfinished": e.p_unfinished,
    })
}

fn mc_json(r: &AuditReport, exact: Option<&ExactAudit>) -> Value {
    let witness = r.witness().map(|g| {
        json!({ "agent": g.agent, "position": g.position, "info_set": g.key.to_string(), "gain": g.gain,
                "stderr": g.stderr, "matched": g.matched, "significant": r.significant(g) })
    });
    let classes: Vec<Value> = r
        .by_branch()
        .iter()
        .map(|(b, (sup, unsup, gain, cert))| {
            json!({ "class": b.as_str(), "supported": sup, "insufficient": unsup, "max_gain": gain, "certified": cert })
        })
        .collect();
    json!({
        "runs": r.runs,
        "min_matched": r.min_matched,
        "z_threshold": r.z_certify,
        "supported": r.supported().count(),
        "insufficient": r.insufficient().count(),
        "witness": witness,
        "classes": classes,
        "worst_exact_disagreement_se": exact.and_then(|e| r.worst_disagreement(e)).map(finite),
        "certified": r.certified(),
    })
}

pub fn sweep(cfg: &Config, format: Format) -> CliResult<Report> {
    let alphas = cfg.sweep.alpha_grid.clone().unwrap_or_else(|| vec![cfg.mechanism.alpha]);
    let betas = cfg.sweep.beta_grid.clone().unwrap_or_else(|| vec![cfg.mechanism.beta]);
    let reps = cfg.sweep.replications.unwrap_or(cfg.replications) as u64;
    let mut table = Table::new(
        "sweep",
        &[
            "n",
            "alpha",
            "beta",
            "feasible",
            "s_count",
            "max_degree",
            "k",
            "cells",
            "replications",
            "fraction_optimal",
            "fraction_optimal_se",
            "avg_reward",
            "exploration_end_mean",
            "exploration_incomplete",
            "bound_failures",
            "note",
        ],
    );
    let mut cells = Vec::new();
    for &n in &cfg.sweep.n_grid {
        for &alpha in &alphas {
            for &beta in &betas {
                let regime = socex_core::network::RegimeSpec { alpha, beta };
                let outcome = cfg.scenario_with(Some(n), regime)?.prepare().and_then(|p| {
                    let rows = parallel::checked_runs(&p, reps)?;
                    Ok((p, rows))
                });
                let mut cell = vec![n.to_string(), alpha.to_string(), beta.to_string()];
                let value = match outcome {
                    Ok((p, rows)) => {
                        let report = p.graph.check_regime(regime);
                        let mut m = Metrics::default();
                        let mut failures = 0;
                        for (s, checks) in &rows {
                            m.push(s);
                            failures += usize::from(!checks.iter().all(|c| c.pass()));
                        }
                        cell.extend([
                            report.feasible.to_string(),
                            report.s_count.to_string(),
                            p.graph.max_degree().to_string(),
                            opt_cell(p.base_k),
                            p.mechanism.cells().to_string(),
                            m.replications.to_string(),
                            m.fraction_optimal.mean().to_string(),
                            m.fraction_optimal.std_err().to_string(),
                            m.avg_reward.mean().to_string(),
                            m.exploration_end.mean().to_string(),
                            m.exploration_incomplete.to_string(),
                            failures.to_string(),
                            String::new(),
                        ]);
                        json!({ "n": n, "alpha": alpha, "beta": beta, "feasible": report.feasible,
                                "s_count": report.s_count, "metrics": metrics_json(&m), "bound_failures": failures })
                    }
                    Err(e) => {
                        cell.extend(["false".to_string()]);
                        cell.extend(std::iter::repeat_n(String::new(), 11));
                        cell.push(e.to_string());
                        json!({ "n": n, "alpha": alpha, "beta": beta, "feasible": false, "error": e.to_string() })
                    }
                };
                table.row(cell);
                cells.push(value);
            }
        }
    }
    let summary = json!({ "mechanism": MechanismKind::from(cfg.mechanism.kind).as_str(), "cells": cells });
    Ok(render(format, table, summary, true))
}

pub fn demo_failures(format: Format) -> CliResult<Report> {
    let mut table = Table::new("demo-failures", &["demo", "status", "value", "detail"]);
    let mut out = Vec::new();
    let mut ok = true;
    for result in run_demos() {
        match result {
            Ok(d) => {
                table.row([d.name.to_string(), "confirmed".into(), d.value.to_string(), d.detail.clone()]);
                out.push(json!({ "demo": d.name, "confirmed": true, "value": d.value, "detail": d.detail }));
            }
            Err(e) => {
                ok = false;
                let name = match &e {
                    socex_core::Error::DemoFailed { name, .. } => name.to_string(),
                    _ => "error".into(),
                };
                table.row([name.clone(), "not-confirmed".into(), String::new(), e.to_string()]);
                out.push(json!({ "demo": name, "confirmed": false, "detail": e.to_string() }));
            }
        }
    }
    Ok(render(format, table, json!({ "demos": out, "all_confirmed": ok }), ok))
}
