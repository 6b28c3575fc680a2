//! Markdown summary of the result documents in a directory.

use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::Utc;
use clap::Args;
use log::warn;
use serde_json::json;

use crate::commands::Context;
use crate::error::CliError;
use crate::output::ResultDoc;

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// Directory holding the result JSON files.
    dir: PathBuf,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub experiment: String,
    pub kappa: Option<f64>,
    pub reference: Option<f64>,
    pub estimate: Option<f64>,
    pub stderr: Option<f64>,
    pub pass: Option<bool>,
}

/// Result documents in `dir`; manifests and unrelated JSON are skipped.
pub fn collect(dir: &Path) -> Result<Vec<Row>, CliError> {
    let mut rows = Vec::new();
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
    for entry in entries {
        let path = entry.map_err(|e| CliError::io(dir, e))?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
        if !name.ends_with(".json") || name.ends_with(".manifest.json") {
            continue;
        }
        let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
        match serde_json::from_str::<ResultDoc>(&text) {
            Ok(doc) => rows.push(Row {
                experiment: doc.experiment,
                kappa: doc.kappa,
                reference: doc.reference.map(|r| r.value),
                estimate: doc.estimate,
                stderr: doc.estimate_stderr,
                pass: doc.check.map(|c| c.pass),
            }),
            Err(e) => warn!("skipping {}: {e}", path.display()),
        }
    }
    rows.sort_by(|a, b| {
        a.experiment.cmp(&b.experiment).then_with(|| match (a.kappa, b.kappa) {
            (Some(x), Some(y)) => x.total_cmp(&y),
            (x, y) => x.is_some().cmp(&y.is_some()),
        })
    });
    Ok(rows)
}

fn cell(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_string(), |v| format!("{v:.4}"))
}

pub fn render(rows: &[Row], out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(out, "| experiment | kappa | reference | estimate | stderr | pass |")?;
    writeln!(out, "|---|---|---|---|---|---|")?;
    for r in rows {
        let pass = match r.pass {
            Some(true) => "PASS",
            Some(false) => "FAIL",
            None => "n/a",
        };
        writeln!(
            out,
            "| {} | {} | {} | {} | {} | {pass} |",
            r.experiment,
            cell(r.kappa),
            cell(r.reference),
            cell(r.estimate),
            cell(r.stderr)
        )?;
    }
    Ok(())
}

pub fn report(ctx: &Context, args: &ReportArgs) -> Result<(), CliError> {
    let started = Utc::now();
    let rows = collect(&args.dir)?;
    let mut sink = crate::output::Sink::new(&ctx.out, ctx.name.as_deref().unwrap_or("report"))?;
    sink.write(".md", |out| render(&rows, out))?;
    let failed = rows.iter().filter(|r| r.pass == Some(false)).count();
    sink.finish("report", json!({ "dir": args.dir, "rows": rows.len(), "failed": failed }), None, started)?;
    Ok(())
}
