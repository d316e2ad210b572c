//! Replications fanned out over rayon in fixed chunks. Each chunk is
//! reduced on its own and the chunks are merged in index order, so results
//! do not depend on the thread count or on scheduling.

use std::ops::Range;

use rayon::prelude::*;
use socex_core::agent::McAudit;
use socex_core::sim::{BoundCheck, Metrics, Prepared, RunSummary};
use socex_core::{AgentId, Result};

const CHUNK: u64 = 128;

fn chunks(runs: u64) -> Vec<Range<u64>> {
    (0..runs.div_ceil(CHUNK)).map(|c| c * CHUNK..((c + 1) * CHUNK).min(runs)).collect()
}

pub fn summaries(p: &Prepared, runs: u64) -> Result<Vec<RunSummary>> {
    let parts: Vec<Vec<RunSummary>> = chunks(runs).into_par_iter().map(|r| p.summaries(r)).collect::<Result<_>>()?;
    Ok(parts.into_iter().flatten().collect())
}

pub fn metrics(p: &Prepared, runs: u64) -> Result<Metrics> {
    Ok(Metrics::from_summaries(&summaries(p, runs)?))
}

/// Per-replication summary with its bound checks.
pub fn checked_runs(p: &Prepared, runs: u64) -> Result<Vec<(RunSummary, Vec<BoundCheck>)>> {
    let parts: Vec<Vec<_>> = chunks(runs)
        .into_par_iter()
        .map(|r| {
            r.map(|i| {
                let trace = p.run_index(i)?;
                Ok((trace.summary(i), p.bound_checks(&trace)))
            })
            .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    Ok(parts.into_iter().flatten().collect())
}

pub fn mc_audit(p: &Prepared, agents: Option<&[AgentId]>, runs: u64) -> Result<McAudit> {
    let parts: Vec<McAudit> = chunks(runs)
        .into_par_iter()
        .map(|r| {
            let mut acc = McAudit::new(p, agents);
            acc.run_range(p, r)?;
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let mut total = McAudit::new(p, agents);
    for part in parts {
        total.merge(part);
    }
    Ok(total)
}
