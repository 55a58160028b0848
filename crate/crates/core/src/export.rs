//! CSV import/export of trajectories.
//!
//! Floats are written in Rust's shortest round-trip representation, so a
//! written value parses back to the identical `f64`.

use std::io::{Read, Write};

use crate::error::{MagflowError, Result};
use crate::integrator::{Diagnostics, PhasePoint, Trajectory};

/// Shortest text that parses back to exactly `x`; scientific notation
/// outside `[1e-4, 1e15)`.
pub fn format_f64(x: f64) -> String {
    let m = x.abs();
    if m == 0.0 || (1e-4..1e15).contains(&m) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// `q_0..q_{2n−1}, v_0..v_{2n−1}` for states in ℂⁿ.
pub fn phase_state_columns(n: usize) -> Vec<String> {
    let mut cols: Vec<String> = (0..2 * n).map(|k| format!("q_{k}")).collect();
    cols.extend((0..2 * n).map(|k| format!("v_{k}")));
    cols
}

/// `r, theta, r_dot, theta_dot`.
pub fn revolution_state_columns() -> Vec<String> {
    ["r", "theta", "r_dot", "theta_dot"].map(String::from).to_vec()
}

/// Writes `t`, the state columns and the diagnostic columns, one row per sample.
pub fn write_trajectory<S: PhasePoint, W: Write>(out: W, traj: &Trajectory<S>, state_columns: &[String]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    header.extend(state_columns.iter().cloned());
    header.extend(traj.diagnostic_names.iter().cloned());
    w.write_record(&header)?;
    for ((t, st), diag) in traj.times.iter().zip(&traj.states).zip(&traj.diagnostics) {
        let width = st.position().len() + st.velocity().len();
        if width != state_columns.len() {
            return Err(MagflowError::DimensionMismatch {
                expected: state_columns.len(),
                found: width,
            });
        }
        let row = std::iter::once(t)
            .chain(st.position())
            .chain(st.velocity())
            .chain(diag)
            .map(|x| format_f64(*x));
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

/// A numeric CSV table with a header row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[idx]).collect())
    }
}

pub fn read_table<R: Read>(input: R) -> Result<CsvTable> {
    let mut rd = csv::Reader::from_reader(input);
    let header: Vec<String> = rd.headers()?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| MagflowError::InvalidInput(format!("row {}: cannot parse {s:?} as a number", i + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(CsvTable { header, rows })
}

/// Rebuilds a trajectory from a table written by [`write_trajectory`] whose
/// state has `half` position and `half` velocity columns. Diagnostics are
/// re-evaluated with `diag`, not copied from the file.
pub fn trajectory_from_table<S: PhasePoint>(
    table: &CsvTable,
    half: usize,
    diag: &dyn Diagnostics<S>,
) -> Result<Trajectory<S>> {
    if table.header.first().map(String::as_str) != Some("t") || table.header.len() < 1 + 2 * half {
        return Err(MagflowError::InvalidInput(
            "table does not start with t and the state columns".into(),
        ));
    }
    let mut states = Vec::with_capacity(table.rows.len());
    for row in &table.rows {
        let q = row[1..1 + half].to_vec();
        let v = row[1 + half..1 + 2 * half].to_vec();
        states.push(S::from_parts(q, v)?);
    }
    let times: Vec<f64> = table.rows.iter().map(|r| r[0]).collect();
    let diagnostics = states.iter().map(|s| diag.evaluate(s)).collect();
    Ok(Trajectory {
        times,
        states,
        diagnostic_names: diag.names(),
        diagnostics,
    })
}

/// Max absolute difference between same-named diagnostic columns.
pub fn diagnostic_mismatch(table: &CsvTable, traj: &Trajectory<impl PhasePoint>) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for name in &traj.diagnostic_names {
        let stored = table
            .column(name)
            .ok_or_else(|| MagflowError::InvalidInput(format!("missing column {name}")))?;
        let fresh = traj.column(name).expect("own column");
        if stored.len() != fresh.len() {
            return Err(MagflowError::DimensionMismatch {
                expected: fresh.len(),
                found: stored.len(),
            });
        }
        for (a, b) in stored.iter().zip(&fresh) {
            worst = worst.max((a - b).abs());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{EllipsoidFlow, SurfaceDiagnostics};
    use crate::integrator::{integrate, IntegratorConfig, Method};
    use crate::revolution::{RevState, RevolutionDiagnostics, RevolutionSurface, RevolutionSystem};
    use crate::sampling::{random_tangent_state, SeedableRng, SplitMix64};
    use crate::surface::{EllipsoidSpec, PhaseState};
    use proptest::prelude::*;

    #[test]
    fn ellipsoid_round_trip() {
        let spec = EllipsoidSpec::new(vec![1.0, 2.0, 4.0]).unwrap();
        let mut rng = SplitMix64::seed_from_u64(9);
        let st = random_tangent_state(&spec, &mut rng, 1.0);
        let diag = SurfaceDiagnostics::new(&spec);
        let cfg = IntegratorConfig::new(Method::Rk4Projected, 1e-3, 1.0, 50);
        let traj = integrate(&EllipsoidFlow::new(spec.clone()), &st, &cfg, &diag).unwrap();
        let mut buf = Vec::new();
        write_trajectory(&mut buf, &traj, &phase_state_columns(3)).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,q_0,q_1,q_2,q_3,q_4,q_5,v_0,"));
        assert!(text
            .lines()
            .next()
            .unwrap()
            .ends_with("energy,C,F_1,F_2,F_3,f_residual,alpha_v"));

        let table = read_table(buf.as_slice()).unwrap();
        assert_eq!(table.rows.len(), traj.len());
        let back: Trajectory<PhaseState> = trajectory_from_table(&table, 6, &diag).unwrap();
        assert_eq!(back.states, traj.states);
        assert_eq!(back.times, traj.times);
        assert!(diagnostic_mismatch(&table, &back).unwrap() <= 1e-12);
    }

    #[test]
    fn revolution_round_trip() {
        let torus = RevolutionSurface::torus();
        let diag = RevolutionDiagnostics::new(&torus);
        let cfg = IntegratorConfig::new(Method::Rk4, 1e-2, 1.0, 10);
        let traj = integrate(
            &RevolutionSystem::new(torus.clone()),
            &RevState::new(0.1, 0.0, 0.3, 0.5),
            &cfg,
            &diag,
        )
        .unwrap();
        let mut buf = Vec::new();
        write_trajectory(&mut buf, &traj, &revolution_state_columns()).unwrap();
        let table = read_table(buf.as_slice()).unwrap();
        assert_eq!(table.header, ["t", "r", "theta", "r_dot", "theta_dot", "energy", "F"]);
        let back: Trajectory<RevState> = trajectory_from_table(&table, 2, &diag).unwrap();
        assert_eq!(diagnostic_mismatch(&table, &back).unwrap(), 0.0);
    }

    #[test]
    fn number_format() {
        assert_eq!(format_f64(0.5), "0.5");
        assert_eq!(format_f64(2.7755575615628914e-16), "2.7755575615628914e-16");
        assert_eq!(format_f64(-3e20), "-3e20");
        assert_eq!(format_f64(0.0), "0");
    }

    #[test]
    fn wrong_width_and_garbage() {
        let st = PhaseState::from_real(vec![1.0, 0.0], vec![0.0, 1.0]).unwrap();
        let traj = Trajectory::from_samples(0.1, vec![st], &());
        assert!(write_trajectory(Vec::new(), &traj, &phase_state_columns(2)).is_err());
        assert!(read_table("t,x\n0,abc\n".as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn floats_round_trip_exactly(x in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
            prop_assert_eq!(format_f64(x).parse::<f64>().unwrap(), x);
        }
    }
}
