//! File formats: trajectory CSV, binary state dumps, sampled kernel pairs and
//! the sweep ledger.

mod dump;
mod ledger;
mod pair_table;

pub use dump::{DumpError, TrajectoryDump, DUMP_MAGIC, DUMP_VERSION};
pub use ledger::{parse_ledger, LedgerEntry, LedgerError};
pub use pair_table::{parse_pair_table, write_pair_table, PairTableError};

use crate::flow::Trajectory;

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub const TRAJECTORY_HEADER: [&str; 6] = ["j", "t", "norm", "energy", "reaction_envelope", "residual"];

/// One row per accepted node, LF line endings.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut out = TRAJECTORY_HEADER.join(",");
    out.push('\n');
    for (j, d) in traj.diagnostics.iter().enumerate() {
        let row = [
            j.to_string(),
            format_float(d.t),
            format_float(d.norm),
            format_float(d.energy),
            format_float(d.reaction_envelope),
            format_float(d.residual),
        ];
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Full states, one row per node: `j,t,u_0,…,u_{m-1}`.
pub fn states_csv(traj: &Trajectory) -> String {
    let mut out = String::from("j,t");
    for i in 0..traj.space.dim {
        out.push_str(&format!(",u{i}"));
    }
    out.push('\n');
    for (j, u) in traj.states.iter().enumerate() {
        out.push_str(&j.to_string());
        out.push(',');
        out.push_str(&format_float(traj.grid.time(j)));
        for v in u {
            out.push(',');
            out.push_str(&format_float(*v));
        }
        out.push('\n');
    }
    out
}
