//! TSV exports of posterior factor expressions for plotting.

use std::io::{BufRead, Write};

use dpf_core::inference::Side;
use dpf_core::math;

use crate::error::{Error, Result};
use crate::format::Checkpoint;

pub const TRAJECTORY_HEADER: &str = "kind\tentity_id\tfactor\tstep\texpression";
pub const GLOBAL_HEADER: &str = "kind\tentity_id\tfactor\tglobal";
pub const AGGREGATE_HEADER: &str = "step\tfactor\tvalue";

fn ids(cp: &Checkpoint, side: Side) -> &dpf_core::ingest::IdMap {
    match side {
        Side::User => &cp.users,
        Side::Item => &cp.items,
    }
}

/// Resolve entity ids to indices; an empty selection means every entity.
pub fn resolve_entities(cp: &Checkpoint, side: Side, selection: &[String]) -> Result<Vec<usize>> {
    let map = ids(cp, side);
    if selection.is_empty() {
        return Ok((0..map.len()).collect());
    }
    let kind = match side {
        Side::User => "user",
        Side::Item => "item",
    };
    let mut out: Vec<usize> = selection
        .iter()
        .map(|id| map.get(id).map(|i| i as usize).ok_or_else(|| Error::UnknownId { kind, id: id.clone() }))
        .collect::<Result<_>>()?;
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub kind: Side,
    pub entity_id: String,
    pub factor: usize,
    pub step: usize,
    /// Posterior mean of `dynamic + global`.
    pub expression: f64,
}

/// One row per `(entity, k, t)`, sorted by entity index, then `k`, then `t`.
pub fn trajectories(cp: &Checkpoint, side: Side, entities: &[usize]) -> Vec<TrajectoryRow> {
    let s = &cp.state;
    let map = ids(cp, side);
    let mut rows = Vec::with_capacity(entities.len() * s.k * s.n_steps);
    for &e in entities {
        for k in 0..s.k {
            for t in 0..s.n_steps {
                rows.push(TrajectoryRow {
                    kind: side,
                    entity_id: map.id(e).unwrap_or_default().to_string(),
                    factor: k,
                    step: t,
                    expression: s.expression(side, e, t, k),
                });
            }
        }
    }
    rows
}

pub fn write_trajectories<W: Write>(mut w: W, rows: &[TrajectoryRow]) -> Result<()> {
    writeln!(w, "{TRAJECTORY_HEADER}")?;
    for r in rows {
        writeln!(w, "{}\t{}\t{}\t{}\t{:?}", r.kind, r.entity_id, r.factor, r.step, r.expression)?;
    }
    Ok(())
}

fn parse_side(s: &str, line: usize) -> Result<Side> {
    match s {
        "user" => Ok(Side::User),
        "item" => Ok(Side::Item),
        _ => Err(Error::parse(line, format!("unknown entity kind {s:?}"))),
    }
}

fn field<T: std::str::FromStr>(s: &str, line: usize) -> Result<T> {
    s.parse().map_err(|_| Error::parse(line, format!("cannot parse {s:?}")))
}

pub fn read_trajectories<R: BufRead>(r: R) -> Result<Vec<TrajectoryRow>> {
    let mut rows = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if i == 0 {
            if line != TRAJECTORY_HEADER {
                return Err(Error::parse(1, "missing trajectory header"));
            }
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 5 {
            return Err(Error::parse(i + 1, "expected 5 fields"));
        }
        rows.push(TrajectoryRow {
            kind: parse_side(f[0], i + 1)?,
            entity_id: f[1].to_string(),
            factor: field(f[2], i + 1)?,
            step: field(f[3], i + 1)?,
            expression: field(f[4], i + 1)?,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlobalRow {
    pub kind: Side,
    pub entity_id: String,
    pub factor: usize,
    pub global: f64,
}

pub fn global_factors(cp: &Checkpoint, side: Side, entities: &[usize]) -> Vec<GlobalRow> {
    let s = &cp.state;
    let map = ids(cp, side);
    entities
        .iter()
        .flat_map(|&e| {
            (0..s.k).map(move |k| GlobalRow {
                kind: side,
                entity_id: map.id(e).unwrap_or_default().to_string(),
                factor: k,
                global: s.global(side).mean[s.glob_offset(e) + k],
            })
        })
        .collect()
}

pub fn write_global<W: Write>(mut w: W, rows: &[GlobalRow]) -> Result<()> {
    writeln!(w, "{GLOBAL_HEADER}")?;
    for r in rows {
        writeln!(w, "{}\t{}\t{}\t{:?}", r.kind, r.entity_id, r.factor, r.global)?;
    }
    Ok(())
}

pub fn read_global<R: BufRead>(r: R) -> Result<Vec<GlobalRow>> {
    let mut rows = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if i == 0 {
            if line != GLOBAL_HEADER {
                return Err(Error::parse(1, "missing global-factor header"));
            }
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 4 {
            return Err(Error::parse(i + 1, "expected 4 fields"));
        }
        rows.push(GlobalRow {
            kind: parse_side(f[0], i + 1)?,
            entity_id: f[1].to_string(),
            factor: field(f[2], i + 1)?,
            global: field(f[3], i + 1)?,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AggregateOptions {
    pub side: Side,
    /// Average `exp(expression)` (default) or the raw expression.
    pub raw: bool,
    /// Divide each step by its total over factors.
    pub normalize: bool,
}

/// `values[t][k]`: the mean over entities of each factor's expression at `t`.
pub fn aggregate_factors(cp: &Checkpoint, opts: AggregateOptions) -> Vec<Vec<f64>> {
    let s = &cp.state;
    let count = s.count(opts.side);
    (0..s.n_steps)
        .map(|t| {
            let mut col: Vec<f64> = (0..s.k)
                .map(|k| {
                    let total: f64 = (0..count)
                        .map(|e| {
                            let x = s.expression(opts.side, e, t, k);
                            if opts.raw {
                                x
                            } else {
                                math::exp(x)
                            }
                        })
                        .sum();
                    total / count as f64
                })
                .collect();
            if opts.normalize {
                let z: f64 = col.iter().sum();
                col.iter_mut().for_each(|v| *v /= z);
            }
            col
        })
        .collect()
}

pub fn write_aggregate<W: Write>(mut w: W, values: &[Vec<f64>]) -> Result<()> {
    writeln!(w, "{AGGREGATE_HEADER}")?;
    for (t, col) in values.iter().enumerate() {
        for (k, v) in col.iter().enumerate() {
            writeln!(w, "{t}\t{k}\t{v:?}")?;
        }
    }
    Ok(())
}
