//! `sweep`: a grid of p-Laplace experiments, one CSV row per tuple.
//!
//! Finished rows are appended to `ledger.jsonl` as they complete, so an
//! interrupted sweep resumes where it stopped. The CSV is assembled from the
//! ledger in tuple order, which makes it independent of worker scheduling.

use crate::config::SweepBlock;
use crate::{write_file, CliError, Invocation, EXIT_OK};
use fraflow::io::{format_float, parse_ledger, LedgerEntry};
use fraflow::plaplace::{classify_regime, run_experiment, ExperimentResult, PdeConfig};
use rayon::prelude::*;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::Path;
use std::sync::Mutex;

pub const LEDGER_FILE: &str = "ledger.jsonl";
pub const SWEEP_CSV: &str = "sweep.csv";
pub const FRONTIER_CSV: &str = "frontier.csv";

/// Columns appended after the experiment columns.
pub const EXTRA_COLUMNS: [&str; 2] = ["regime", "note"];

/// Tuples in deterministic order: `p`, then `q`, `alpha`, `m`, `amplitude`.
pub fn tuples(sweep: &SweepBlock) -> Vec<PdeConfig> {
    let base = sweep.base;
    let or_base = |axis: &[f64], v: f64| if axis.is_empty() { vec![v] } else { axis.to_vec() };
    let ms = if sweep.m.is_empty() {
        vec![base.m]
    } else {
        sweep.m.clone()
    };
    let amps = or_base(&sweep.amplitude, base.initial.amplitude());
    let mut out = Vec::new();
    for &p in &or_base(&sweep.p, base.p) {
        for &q in &or_base(&sweep.q, base.q) {
            for &alpha in &or_base(&sweep.alpha, base.alpha) {
                for &m in &ms {
                    for &a in &amps {
                        let cfg = PdeConfig { p, q, alpha, m, ..base };
                        out.push(cfg.with_amplitude(a).unwrap_or(cfg));
                    }
                }
            }
        }
    }
    out
}

/// Stable identity of a tuple, matched on resume.
pub fn tuple_key(pde: &PdeConfig) -> String {
    serde_json::to_string(pde).expect("configs serialize")
}

fn row_fields(pde: &PdeConfig, result: Result<ExperimentResult, String>) -> Vec<String> {
    let regime = classify_regime(pde.p, pde.q, pde.regime_dim())
        .verdict
        .as_str()
        .to_string();
    match result {
        Ok(r) => {
            let mut fields = r.csv_fields();
            fields.push(regime);
            fields.push(String::new());
            fields
        }
        Err(message) => {
            let mut fields = vec![
                format_float(pde.p),
                format_float(pde.q),
                format_float(pde.alpha),
                pde.m.to_string(),
                pde.steps.to_string(),
                format_float(pde.initial.amplitude()),
                "error".to_string(),
            ];
            fields.resize(ExperimentResult::CSV_HEADER.len(), String::new());
            fields.push(regime);
            fields.push(message.replace([',', '\n', '\r'], ";"));
            fields
        }
    }
}

fn read_ledger(path: &Path, keys: &[String]) -> Result<Vec<Option<Vec<String>>>, CliError> {
    let mut done = vec![None; keys.len()];
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(done),
        Err(source) => {
            return Err(CliError::Io {
                path: path.to_path_buf(),
                source,
            })
        }
    };
    let entries = parse_ledger(&text).map_err(|e| CliError::Run(format!("{}: {e}", path.display())))?;
    for e in entries {
        if keys.get(e.index) != Some(&e.key) {
            return Err(CliError::Run(format!(
                "{}: row {} belongs to a different sweep; use a fresh output directory",
                path.display(),
                e.index
            )));
        }
        done[e.index] = Some(e.fields);
    }
    // drop a torn final line so appends start on a fresh line
    if !text.is_empty() && !text.ends_with('\n') {
        let keep = text.rfind('\n').map_or(0, |i| i + 1);
        fs::write(path, &text[..keep]).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
    }
    Ok(done)
}

fn csv_line(fields: &[String]) -> String {
    let mut s = fields.join(",");
    s.push('\n');
    s
}

/// Per `(p, q, alpha, m)` group: largest completed amplitude below the
/// smallest blown-up one, and whether blow-up is monotone in the amplitude.
pub fn frontier_csv(configs: &[PdeConfig], rows: &[Vec<String>]) -> String {
    let mut out = String::from("p,q,alpha,m,largest_completed,smallest_blowup,monotone\n");
    let mut start = 0;
    while start < configs.len() {
        let c = configs[start];
        let same = |d: &PdeConfig| d.p == c.p && d.q == c.q && d.alpha == c.alpha && d.m == c.m;
        let end = start + configs[start..].iter().take_while(|d| same(d)).count();
        let mut group: Vec<(f64, &str)> = (start..end)
            .map(|i| (configs[i].initial.amplitude(), rows[i][6].as_str()))
            .collect();
        group.sort_by(|a, b| a.0.total_cmp(&b.0));
        let first_blowup = group.iter().position(|(_, s)| *s == "blew_up");
        let monotone = match first_blowup {
            Some(i) => group[i..].iter().all(|(_, s)| *s == "blew_up"),
            None => true,
        };
        let smallest = first_blowup.map(|i| format_float(group[i].0)).unwrap_or_default();
        let largest = group[..first_blowup.unwrap_or(group.len())]
            .iter()
            .filter(|(_, s)| *s == "completed")
            .map(|(a, _)| *a)
            .next_back()
            .map(format_float)
            .unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{largest},{smallest},{monotone}\n",
            format_float(c.p),
            format_float(c.q),
            format_float(c.alpha),
            c.m
        ));
        start = end;
    }
    out
}

pub fn cmd_sweep(inv: &Invocation) -> Result<i32, CliError> {
    let sweep = inv
        .config
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::invalid("missing sweep block"))?;
    let configs = tuples(sweep);
    let keys: Vec<String> = configs.iter().map(tuple_key).collect();
    let ledger_path = inv.out.join(LEDGER_FILE);
    let done = read_ledger(&ledger_path, &keys)?;

    let ledger = OpenOptions::new()
        .create(true)
        .append(true)
        .open(&ledger_path)
        .map_err(|source| CliError::Io {
            path: ledger_path.clone(),
            source,
        })?;
    let ledger = Mutex::new(ledger);
    let pending: Vec<usize> = (0..configs.len()).filter(|&i| done[i].is_none()).collect();
    let solver = inv.config.solver;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(inv.jobs.unwrap_or(0))
        .build()
        .map_err(CliError::run)?;
    let fresh: Vec<Result<(usize, Vec<String>), CliError>> = pool.install(|| {
        pending
            .par_iter()
            .map(|&i| {
                let pde = &configs[i];
                let result = run_experiment(pde, &solver).map_err(|e| e.to_string());
                let fields = row_fields(pde, result);
                let entry = LedgerEntry {
                    index: i,
                    key: keys[i].clone(),
                    fields: fields.clone(),
                };
                let mut file = ledger.lock().expect("ledger lock");
                file.write_all(entry.to_line().as_bytes())
                    .and_then(|_| file.flush())
                    .map_err(|source| CliError::Io {
                        path: ledger_path.clone(),
                        source,
                    })?;
                Ok((i, fields))
            })
            .collect()
    });

    let mut rows = done;
    for r in fresh {
        let (i, fields) = r?;
        rows[i] = Some(fields);
    }
    let rows: Vec<Vec<String>> = rows.into_iter().map(|r| r.expect("every tuple ran")).collect();

    let mut header: Vec<String> = ExperimentResult::CSV_HEADER.iter().map(|s| s.to_string()).collect();
    header.extend(EXTRA_COLUMNS.iter().map(|s| s.to_string()));
    let mut csv = csv_line(&header);
    for row in &rows {
        csv.push_str(&csv_line(row));
    }
    write_file(&inv.out.join(SWEEP_CSV), csv)?;
    write_file(&inv.out.join(FRONTIER_CSV), frontier_csv(&configs, &rows))?;
    let errors = rows.iter().filter(|r| r[6] == "error").count();
    if errors > 0 {
        eprintln!("{errors} of {} rows failed; see the note column", rows.len());
    }
    Ok(EXIT_OK)
}
