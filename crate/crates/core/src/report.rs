//! CSV logs and aggregate tables.
//!
//! Every float is printed with six decimals so that identical runs produce
//! identical bytes.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::grid::Point;
use crate::sim::{AggregateRow, CandidateRow, EpochRecord, TrajectoryRow};

fn f(v: f64) -> String {
    format!("{v:.6}")
}

fn opt(v: Option<f64>) -> String {
    v.map(f).unwrap_or_default()
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

fn writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out)
}

/// One row per epoch. `snapshot_epochs` marks epochs whose maps were saved.
pub fn write_events(out: impl Write, epochs: &[EpochRecord], snapshot_epochs: &[usize]) -> Result<()> {
    let mut w = writer(out);
    w.write_record([
        "epoch",
        "t",
        "x",
        "y",
        "heading",
        "subgoal_x",
        "subgoal_y",
        "safe_cells",
        "reachable_frontiers",
        "g",
        "p_e",
        "v_goal",
        "v_overall",
        "collapsed",
        "samples",
        "snapshot",
        "event",
    ])
    .map_err(csv_err)?;
    for e in epochs {
        let c = e.chosen.as_ref();
        w.write_record([
            e.epoch.to_string(),
            f(e.time),
            f(e.robot.x),
            f(e.robot.y),
            f(e.heading),
            opt(e.subgoal.map(|p| p.x)),
            opt(e.subgoal.map(|p| p.y)),
            e.safe_cells.to_string(),
            e.reachable_frontiers.to_string(),
            c.map(|c| c.g_count.to_string()).unwrap_or_default(),
            opt(c.map(|c| c.expansion_prob)),
            opt(c.map(|c| c.goal_value)),
            opt(c.map(|c| c.overall)),
            e.collapsed.to_string(),
            e.samples.to_string(),
            u8::from(snapshot_epochs.contains(&e.epoch)).to_string(),
            e.event.clone(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trajectory(out: impl Write, rows: &[TrajectoryRow]) -> Result<()> {
    let mut w = writer(out);
    w.write_record(["t", "x", "y", "s_true", "in_safe_set", "event"])
        .map_err(csv_err)?;
    for r in rows {
        w.write_record([
            f(r.time),
            f(r.position.x),
            f(r.position.y),
            f(r.slip),
            u8::from(r.in_safe_set).to_string(),
            r.event.clone(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_candidates(out: impl Write, rows: &[CandidateRow]) -> Result<()> {
    let mut w = writer(out);
    w.write_record(["epoch", "cell", "x", "y", "g", "p_e", "v_goal", "v_overall", "component", "chosen"])
        .map_err(csv_err)?;
    for r in rows {
        let c = &r.candidate;
        w.write_record([
            r.epoch.to_string(),
            c.cell.to_string(),
            f(c.location.x),
            f(c.location.y),
            c.g_count.to_string(),
            f(c.expansion_prob),
            f(c.goal_value),
            f(c.overall),
            c.component.to_string(),
            u8::from(r.chosen).to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn aggregate_csv(rows: &[AggregateRow]) -> Result<String> {
    let mut buf = Vec::new();
    {
        let mut w = writer(&mut buf);
        w.write_record([
            "environment",
            "strategy",
            "trials",
            "success_mean",
            "success_std",
            "time_mean",
            "time_std",
            "length_mean",
            "length_std",
            "coverage_mean",
            "coverage_std",
            "safety_violations",
        ])
        .map_err(csv_err)?;
        for r in rows {
            w.write_record([
                r.environment.clone(),
                r.strategy.name().to_string(),
                r.trials.to_string(),
                f(r.success_mean),
                f(r.success_std),
                f(r.time_mean),
                f(r.time_std),
                f(r.length_mean),
                f(r.length_std),
                f(r.coverage_mean),
                f(r.coverage_std),
                r.safety_violations.to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
    }
    String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))
}

/// Fixed-width table with one row per environment and strategy.
pub fn aggregate_table(rows: &[AggregateRow]) -> String {
    let mut s = format!(
        "{:<14} {:<6} {:>6} {:>14} {:>20} {:>18} {:>16}\n",
        "environment", "method", "trials", "success", "time (s)", "length (m)", "coverage"
    );
    for r in rows {
        s.push_str(&format!(
            "{:<14} {:<6} {:>6} {:>6.1}% ± {:>4.1} {:>9.2} ± {:>8.2} {:>8.2} ± {:>7.2} {:>7.3} ± {:>6.3}\n",
            r.environment,
            r.strategy.name(),
            r.trials,
            100.0 * r.success_mean,
            100.0 * r.success_std,
            r.time_mean,
            r.time_std,
            r.length_mean,
            r.length_std,
            r.coverage_mean,
            r.coverage_std,
        ));
    }
    s
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().has_headers(true).from_reader(input)
}

fn parse<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, what: &str) -> Result<T> {
    rec.get(i)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Data(format!("bad {what} in log row {:?}", rec.position().map(|p| p.line()))))
}

/// `(t, position)` pairs from a trajectory log.
pub fn read_trajectory(input: impl Read) -> Result<Vec<(f64, Point)>> {
    let mut out = Vec::new();
    for rec in reader(input).records() {
        let rec = rec.map_err(|e| Error::Data(e.to_string()))?;
        out.push((parse(&rec, 0, "t")?, Point::new(parse(&rec, 1, "x")?, parse(&rec, 2, "y")?)));
    }
    Ok(out)
}

/// `(epoch, t, snapshot saved)` for every row of an event log.
pub fn read_event_index(input: impl Read) -> Result<Vec<(usize, f64, bool)>> {
    let mut rdr = reader(input);
    let headers = rdr.headers().map_err(|e| Error::Data(e.to_string()))?.clone();
    let snap = headers
        .iter()
        .position(|h| h == "snapshot")
        .ok_or_else(|| Error::Data("event log has no snapshot column".into()))?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Data(e.to_string()))?;
        let flag: u8 = parse(&rec, snap, "snapshot")?;
        out.push((parse(&rec, 0, "epoch")?, parse(&rec, 1, "t")?, flag == 1));
    }
    Ok(out)
}
