//! `kernels`: Sonine certificates for a pair and its regularized kernels.

use crate::{build_pair, to_json, write_file, CliError, Invocation, EXIT_ERROR, EXIT_OK};
use fraflow::io::format_float;
use fraflow::kernel::{regularized_kernel, verify_sonine, SonineCertificate};
use fraflow::TimeGrid;
use serde::Serialize;

#[derive(Debug, Serialize)]
pub struct RegularizedSummary {
    pub index: u32,
    pub steps: usize,
    /// `‖k_n - k‖_{L¹(0,T)}`.
    pub l1_distance: f64,
}

#[derive(Debug, Serialize)]
pub struct KernelReport {
    pub passed: bool,
    pub sonine: Vec<SonineCertificate>,
    pub regularized: Vec<RegularizedSummary>,
}

pub fn cmd_kernels(inv: &Invocation) -> Result<i32, CliError> {
    let block = inv
        .config
        .kernels
        .as_ref()
        .ok_or_else(|| CliError::invalid("missing kernels block"))?;
    let kernel = inv
        .config
        .kernel
        .as_ref()
        .ok_or_else(|| CliError::invalid("missing kernel block"))?;
    let pair = build_pair(kernel, inv)?;
    let grid = |n: usize| TimeGrid::new(block.horizon, n).map_err(|e| CliError::invalid(e.to_string()));

    let mut sonine = Vec::new();
    let mut csv = String::from("coarse_steps,fine_steps,coarse_error,fine_error,observed_order,passed\n");
    for &n in &block.steps {
        let cert = verify_sonine(&pair, &grid(n)?, block.tolerance);
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            cert.coarse_steps,
            cert.fine_steps,
            format_float(cert.coarse_error),
            format_float(cert.fine_error),
            format_float(cert.observed_order),
            cert.passed
        ));
        sonine.push(cert);
    }
    write_file(&inv.out.join("sonine.csv"), csv)?;

    let finest = grid(*block.steps.iter().max().expect("validated nonempty"))?;
    let mut regularized = Vec::new();
    let mut samples = Vec::new();
    for &n in &block.regularize {
        let reg = regularized_kernel(&pair.l, n, &finest).map_err(CliError::run)?;
        regularized.push(RegularizedSummary {
            index: n,
            steps: finest.steps(),
            l1_distance: reg.l1_distance(&pair.k),
        });
        samples.push(reg.k);
    }
    if !samples.is_empty() {
        let mut csv = String::from("t");
        for n in &block.regularize {
            csv.push_str(&format!(",k_{n}"));
        }
        csv.push('\n');
        for j in 0..finest.nodes() {
            csv.push_str(&format_float(finest.time(j)));
            for s in &samples {
                csv.push(',');
                csv.push_str(&format_float(s[j]));
            }
            csv.push('\n');
        }
        write_file(&inv.out.join("regularized.csv"), csv)?;
    }

    let report = KernelReport {
        passed: sonine.iter().all(|c| c.passed),
        sonine,
        regularized,
    };
    write_file(&inv.out.join("kernels.json"), to_json(&report))?;
    Ok(if report.passed { EXIT_OK } else { EXIT_ERROR })
}
