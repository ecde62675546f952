use std::io::Write;

use super::engine::SimReport;
use super::metrics::{Outcome, TraceRow, TRACE_HEADER};

/// Channel trace as CSV with a header row.
pub fn write_traces<W: Write>(rows: &[TraceRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER)?;
    for r in rows {
        w.write_record([
            format!("{:.3}", r.time_s),
            r.channel.to_string(),
            r.direction.to_string(),
            format!("{:.6}", r.lambda),
            format!("{:.6}", r.mu),
            format!("{:.6}", r.xi),
            format!("{:.6}", r.rate),
            r.queue_len.to_string(),
            format!("{:.6}", r.window),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One row per demand: id, endpoints, value, creation, outcome, finish time, fees.
pub fn write_records<W: Write>(report: &SimReport, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["id", "source", "dest", "value", "created_s", "outcome", "finished_s", "fees"])?;
    for r in &report.records {
        let (outcome, at) = match &r.outcome {
            Outcome::Completed { at } => ("completed".to_string(), *at),
            Outcome::Failed { at, reason } => (format!("{reason:?}").to_lowercase(), *at),
        };
        w.write_record([
            r.id.0.to_string(),
            r.source.to_string(),
            r.dest.to_string(),
            r.value.to_string(),
            format!("{:.3}", r.created_at.secs()),
            outcome,
            format!("{:.3}", at.secs()),
            format!("{:.6}", r.fees),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `key = value` summary of a run.
pub fn summary_text(report: &SimReport) -> String {
    let m = &report.metrics;
    let mut lines = vec![
        format!("demands = {}", m.demands),
        format!("completed = {}", m.completed),
        format!("tsr = {:.6}", m.tsr),
        format!("normalized_throughput = {:.6}", m.normalized_throughput),
        format!("generated_value = {:.3}", m.generated_value),
        format!("completed_value = {:.3}", m.completed_value),
        format!("avg_delay_s = {:.6}", m.avg_delay),
        format!("fees_paid = {:.6}", m.fees_paid),
        format!("deadlock_events = {}", m.deadlock_events),
        format!("control_messages = {}", m.control_messages),
        format!("control_hops = {}", m.control_hops),
        format!("token_hops = {:.3}", m.token_hops),
        format!("queue_overflows = {}", m.queue_overflows),
        format!("tus_sent = {}", m.tus_sent),
        format!("tus_aborted = {}", m.tus_aborted),
        format!("steady_throughput = {:.6}", report.throughput(report.steady_from, report.duration)),
        format!("hubs = {}", report.hubs.iter().map(|h| h.to_string()).collect::<Vec<_>>().join(" ")),
    ];
    if let Some(c) = report.placement_cost {
        lines.push(format!("placement_cost = {c:.6}"));
    }
    if let Some(c) = &report.comm {
        lines.push(format!("model_avg_delay_s = {:.6}", c.avg_delay_s));
        lines.push(format!("model_management_overhead = {}", c.management_overhead));
        lines.push(format!("model_sync_overhead = {}", c.sync_overhead));
    }
    let mut s = lines.join("\n");
    s.push('\n');
    s
}
