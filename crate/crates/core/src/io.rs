//! Trajectory, report and plot-series serialization.
//!
//! Numbers are written with Rust's shortest round-trip formatting, so a
//! value parsed back from a CSV file is bit-identical to the one written.

use std::fmt::Write as _;

use crate::error_space::{CoupledModel, Curve, Trajectory};
use crate::trajopt::{Solution, SolverReport};
use crate::{Error, Result};

/// Column headers of the trajectory CSV, `name[unit]`.
pub const TRAJECTORY_COLUMNS: [&str; 19] = [
    "t[s]",
    "e_x[m]",
    "e_y[m]",
    "e_z[m]",
    "e_v[m/s]",
    "e_gamma[rad]",
    "e_chi[rad]",
    "e_phi[rad]",
    "v_G[m/s]",
    "s_G[m]",
    "u1[N]",
    "u2[rad/s]",
    "u3[-]",
    "u4[m/s^2]",
    "x_A[m]",
    "y_A[m]",
    "z_A[m]",
    "v_a[m/s]",
    "n_lf[-]",
];

fn push_row(out: &mut String, values: &[f64]) {
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let _ = write!(out, "{v}");
    }
    out.push('\n');
}

/// One row per grid node with reconstructed inertial position, airspeed and load factor.
pub fn trajectory_csv(model: &CoupledModel, traj: &Trajectory) -> Result<String> {
    let mut out = TRAJECTORY_COLUMNS.join(",");
    out.push('\n');
    for k in 0..traj.grid.len {
        let x = &traj.states[k];
        let u = &traj.inputs[k];
        let uav = model.uav_state(x).map_err(|e| e.at_time(traj.grid.time(k)))?;
        let (v_a, n_lf) = model.air_diagnostics(x, u).map_err(|e| e.at_time(traj.grid.time(k)))?;
        let mut row = Vec::with_capacity(TRAJECTORY_COLUMNS.len());
        row.push(traj.grid.time(k));
        row.extend(x.iter());
        row.extend(u.iter());
        row.extend([uav.x, uav.y, uav.z, v_a, n_lf]);
        push_row(&mut out, &row);
    }
    Ok(out)
}

/// Parsed CSV table: header names and numeric rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    /// Column by its bare name (the part before the unit bracket).
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c.split('[').next() == Some(name))?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}

pub fn parse_csv(text: &str) -> Result<Table> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| Error::Parse("empty CSV".into()))?;
    let columns: Vec<String> = header.split(',').map(|c| c.trim().to_string()).collect();
    let mut rows = Vec::new();
    for (n, line) in lines.enumerate() {
        let row = line
            .split(',')
            .map(|f| {
                f.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("row {}: `{f}`: {e}", n + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        if row.len() != columns.len() {
            return Err(Error::Parse(format!(
                "row {} has {} fields, header has {}",
                n + 1,
                row.len(),
                columns.len()
            )));
        }
        rows.push(row);
    }
    Ok(Table { columns, rows })
}

pub fn report_json(report: &SolverReport) -> Result<String> {
    serde_json::to_string_pretty(report).map_err(|e| Error::Io(e.to_string()))
}

/// Plot-ready series, one CSV per figure quantity: `(file name, contents)`.
/// Each file holds time, the achieved value and, where one exists, the desired value.
pub fn plot_series(solution: &Solution) -> Result<Vec<(String, String)>> {
    let traj = &solution.trajectory;
    let des = &solution.desired;
    let mut diag = Vec::with_capacity(traj.grid.len);
    for k in 0..traj.grid.len {
        diag.push(solution.model.air_diagnostics(&traj.states[k], &traj.inputs[k])?);
    }
    let state = |i: usize| move |c: &Curve, k: usize| c.states[k][i];
    let input = |i: usize| move |c: &Curve, k: usize| c.inputs[k][i];
    let achieved = traj.as_curve();

    let mut files = Vec::new();
    let mut tracked = |name: &str, col: &str, get: &dyn Fn(&Curve, usize) -> f64| {
        let mut out = format!("t[s],{col},{}_desired{}\n", col_name(col), col_unit(col));
        for k in 0..traj.grid.len {
            push_row(&mut out, &[traj.grid.time(k), get(&achieved, k), get(des, k)]);
        }
        files.push((format!("{name}.csv"), out));
    };
    tracked("vertical_error", "e_z[m]", &state(2));
    tracked("e_v", "e_v[m/s]", &state(3));
    tracked("e_gamma", "e_gamma[rad]", &state(4));
    tracked("e_y", "e_y[m]", &state(1));
    tracked("u1", "u1[N]", &input(0));
    tracked("u3", "u3[-]", &input(2));
    tracked("ugv_accel", "u4[m/s^2]", &input(3));

    let mut single = |name: &str, col: &str, values: Vec<f64>| {
        let mut out = format!("t[s],{col}\n");
        for (k, v) in values.iter().enumerate() {
            push_row(&mut out, &[traj.grid.time(k), *v]);
        }
        files.push((format!("{name}.csv"), out));
    };
    single("n_lf", "n_lf[-]", diag.iter().map(|d| d.1).collect());
    single("phi_A", "phi_A[rad]", traj.states.iter().map(|x| x[6]).collect());
    Ok(files)
}

fn col_name(col: &str) -> &str {
    col.split('[').next().unwrap_or(col)
}

fn col_unit(col: &str) -> &str {
    col.find('[').map(|i| &col[i..]).unwrap_or("")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::guidance::initial_trajectory;
    use crate::scenarios::preset_straight;

    #[test]
    fn trajectory_csv_round_trips() {
        let sc = preset_straight();
        let grid = crate::error_space::Grid::covering(0.05, 3.0);
        let traj = initial_trajectory(&sc, grid).unwrap();
        let text = trajectory_csv(&sc.model(), &traj).unwrap();
        let table = parse_csv(&text).unwrap();
        assert_eq!(table.columns, TRAJECTORY_COLUMNS);
        assert_eq!(table.rows.len(), grid.len);
        let ez = table.column("e_z").unwrap();
        let za = table.column("z_A").unwrap();
        for k in 0..grid.len {
            assert_eq!(ez[k], traj.states[k][2]);
            assert!((ez[k] - za[k]).abs() < 1e-12);
            assert_eq!(table.rows[k][13], traj.inputs[k][3]);
        }
        assert!(!text.contains(' '));
    }

    #[test]
    fn malformed_csv_rejected() {
        assert!(matches!(parse_csv(""), Err(Error::Parse(_))));
        assert!(matches!(parse_csv("a,b\n1,x\n"), Err(Error::Parse(_))));
        assert!(matches!(parse_csv("a,b\n1\n"), Err(Error::Parse(_))));
    }

    #[test]
    fn column_lookup_ignores_units() {
        let t = parse_csv("t[s],e_z[m]\n0,1\n0.5,2\n").unwrap();
        assert_eq!(t.column("e_z"), Some(vec![1.0, 2.0]));
        assert_eq!(t.column("e_x"), None);
    }
}
