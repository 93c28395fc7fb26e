//! CSV reports with fixed schemas plus a plain-text summary of trend
//! checks. Every byte of every CSV is a pure function of (config, seed,
//! software version); timestamps live only in the manifest.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::lab::compare::ComparisonReport;
use crate::lab::sweep::ScalingReport;
use crate::tdsc::TdscIterationLog;

fn f(x: f64) -> String {
    format!("{x:.6}")
}

pub fn scaling_csv(report: &ScalingReport) -> String {
    let mut out = String::from("alpha,replicate,seed,wer,h_p_bits,repetition,pass_rate\n");
    for r in &report.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            f(r.alpha),
            r.replicate,
            r.seed,
            f(r.metrics.wer),
            f(r.metrics.h_p),
            f(r.metrics.repetition),
            f(r.metrics.pass_rate),
        );
    }
    out
}

pub fn comparison_csv(report: &ComparisonReport) -> String {
    let mut out =
        String::from("method,alpha,wer,h_p_bits,repetition,pass_rate,stage1_hash,params_hash\n");
    for r in &report.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{:016x},{:016x}",
            r.method,
            f(report.alpha),
            f(r.metrics.wer),
            f(r.metrics.h_p),
            f(r.metrics.repetition),
            f(r.metrics.pass_rate),
            r.stage1_hash,
            r.params_hash,
        );
    }
    out
}

pub fn tdsc_csv(logs: &[TdscIterationLog]) -> String {
    let mut out =
        String::from("k,t_high,pass_rate,wer,h_p_bits,repetition,accepted,rejected,pairs\n");
    for l in logs {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            l.iteration,
            f(l.t_high),
            f(l.pass_rate),
            f(l.wer_after),
            f(l.h_p_after),
            f(l.repetition_after),
            l.accepted,
            l.rejected,
            l.mined_pairs,
        );
    }
    out
}

/// Named trend checks over a finished scaling report; these mirror the
/// sweep portion of the acceptance checklist.
pub fn scaling_trend_checks(report: &ScalingReport) -> Vec<(String, bool)> {
    let agg = &report.aggregates;
    let at = |alpha: f64| {
        agg.iter()
            .find(|a| (a.alpha - alpha).abs() < 1e-9)
            .cloned()
    };
    let mut checks = Vec::new();
    if let (Some(first), Some(last)) = (agg.first(), agg.last()) {
        checks.push((
            format!(
                "wer(alpha={}) < wer(alpha={}) [stability gain]",
                last.alpha, first.alpha
            ),
            last.wer < first.wer,
        ));
        if agg.len() > 2 {
            let interior_peak = agg[1..agg.len() - 1]
                .iter()
                .map(|a| a.h_p)
                .fold(f64::NEG_INFINITY, f64::max);
            checks.push((
                "interior h_p peak exceeds both endpoints [two-phase shape]".into(),
                interior_peak > first.h_p && interior_peak > last.h_p,
            ));
        }
    }
    if let (Some(mid), Some(end)) = (at(0.5), at(1.0)) {
        checks.push((
            "h_p(alpha=1.0) < h_p(alpha=0.5) [erosion tail, entropy]".into(),
            end.h_p < mid.h_p,
        ));
        checks.push((
            "repetition(alpha=1.0) > repetition(alpha=0.5) [erosion tail, repetition]".into(),
            end.repetition > mid.repetition,
        ));
    }
    checks
}

pub fn alignment_trend_checks(report: &ComparisonReport) -> Vec<(String, bool)> {
    let get = |m: crate::lab::config::Method| report.rows.iter().find(|r| r.method == m);
    let mut checks = Vec::new();
    if let (Some(sft), Some(dgsa)) = (
        get(crate::lab::config::Method::Sft),
        get(crate::lab::config::Method::Dgsa),
    ) {
        checks.push((
            "dgsa wer <= 1.05 x sft wer [stability parity]".into(),
            dgsa.metrics.wer <= 1.05 * sft.metrics.wer,
        ));
        checks.push((
            "dgsa h_p > sft h_p [expressivity gain]".into(),
            dgsa.metrics.h_p > sft.metrics.h_p,
        ));
        checks.push((
            "dgsa repetition < sft repetition".into(),
            dgsa.metrics.repetition < sft.metrics.repetition,
        ));
        if let Some(dpo) = get(crate::lab::config::Method::StandardDpo) {
            checks.push((
                "standard dpo wer > dgsa wer [single objective drifts]".into(),
                dpo.metrics.wer > dgsa.metrics.wer,
            ));
        }
        if let Some(rs) = get(crate::lab::config::Method::RejectionSampling) {
            checks.push((
                "rejection sampling params identical to sft".into(),
                rs.params_hash == sft.params_hash,
            ));
            let between = |v: f64, a: f64, b: f64| v > a.min(b) && v < a.max(b);
            let axes = usize::from(between(rs.metrics.wer, sft.metrics.wer, dgsa.metrics.wer))
                + usize::from(between(rs.metrics.h_p, sft.metrics.h_p, dgsa.metrics.h_p));
            checks.push((
                "rejection sampling between sft and dgsa on at most one axis".into(),
                axes <= 1,
            ));
        }
    }
    checks
}

pub fn tdsc_trend_checks(report: &ComparisonReport) -> Vec<(String, bool)> {
    let logs = &report.tdsc_logs;
    let mut checks = Vec::new();
    if let (Some(first), Some(last)) = (logs.first(), logs.last()) {
        checks.push((
            "tdsc wer(final) <= 0.9 x wer(initial)".into(),
            last.wer_after <= 0.9 * first.wer_before,
        ));
        checks.push((
            "tdsc pass rate rises from first to last iteration".into(),
            last.pass_rate > first.pass_rate,
        ));
        if logs.len() >= 2 {
            checks.push((
                "late-phase entropy recovery: h_p(last) >= h_p(iter 2)".into(),
                last.h_p_after >= logs[1].h_p_after,
            ));
        }
        let get = |m: crate::lab::config::Method| report.rows.iter().find(|r| r.method == m);
        if let (Some(sft), Some(st), Some(tdsc)) = (
            get(crate::lab::config::Method::Sft),
            get(crate::lab::config::Method::SelfTraining),
            get(crate::lab::config::Method::Tdsc),
        ) {
            checks.push((
                "self-training improves wer less than tdsc".into(),
                sft.metrics.wer - st.metrics.wer < sft.metrics.wer - tdsc.metrics.wer,
            ));
        }
        let audit: usize = logs
            .iter()
            .chain(&report.self_training_logs)
            .map(|l| l.loser_filter_violations)
            .sum();
        checks.push(("no mined loser fails length/repetition filters".into(), audit == 0));
    }
    checks
}

pub fn summary_text(title: &str, checks: &[(String, bool)]) -> String {
    let mut out = format!("{title}\n");
    for _ in title.chars() {
        out.push('=');
    }
    out.push('\n');
    if checks.is_empty() {
        out.push_str("no trend checks apply to this run\n");
    }
    for (name, ok) in checks {
        let _ = writeln!(out, "[{}] {name}", if *ok { "PASS" } else { "FAIL" });
    }
    out
}

pub fn write_file(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, content).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::MetricsRecord;
    use crate::lab::sweep::{ScalingAggregate, ScalingRow};

    fn metrics(wer: f64, h_p: f64, rep: f64) -> MetricsRecord {
        MetricsRecord {
            wer,
            h_p,
            repetition: rep,
            pass_rate: 0.5,
            sample_count: 10,
        }
    }

    fn report() -> ScalingReport {
        let mk = |alpha: f64, wer: f64, h_p: f64, rep: f64| ScalingAggregate {
            alpha,
            wer,
            h_p,
            repetition: rep,
            pass_rate: 0.5,
        };
        ScalingReport {
            rows: vec![ScalingRow {
                alpha: 0.03,
                alpha_index: 0,
                replicate: 0,
                seed: 7,
                metrics: metrics(0.9, 4.0, 0.01),
            }],
            aggregates: vec![
                mk(0.03, 0.9, 4.0, 0.01),
                mk(0.5, 0.6, 5.0, 0.02),
                mk(1.0, 0.4, 3.0, 0.08),
            ],
            peak_alpha_h_p: 0.5,
        }
    }

    #[test]
    fn csv_schema_lines() {
        let csv = scaling_csv(&report());
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "alpha,replicate,seed,wer,h_p_bits,repetition,pass_rate"
        );
        assert_eq!(
            lines.next().unwrap(),
            "0.030000,0,7,0.900000,4.000000,0.010000,0.500000"
        );
    }

    #[test]
    fn trend_checks_on_synthetic_shapes() {
        let checks = scaling_trend_checks(&report());
        assert_eq!(checks.len(), 4);
        assert!(checks.iter().all(|(_, ok)| *ok));
        let text = summary_text("scaling", &checks);
        assert!(text.contains("[PASS]"));
        assert!(!text.contains("[FAIL]"));

        // Break the erosion tail and the check flips.
        let mut bad = report();
        bad.aggregates[2].h_p = 6.0;
        let checks = scaling_trend_checks(&bad);
        assert!(checks.iter().any(|(_, ok)| !*ok));
    }
}
