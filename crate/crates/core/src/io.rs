//! File formats: trajectory JSON (reals printed with 17 significant digits so
//! every `f64` survives a round trip) and header-first CSV tables.

use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::ser::{CompactFormatter, Formatter, PrettyFormatter};

use crate::params::ProblemParams;
use crate::shooting::{DirichletSolution, Outcome, State, Trajectory, ZeroEvent};

/// Writes every float as `d.dddddddddddddddde±x`.
struct Sig17<F>(F);

macro_rules! forward_formatter {
    ($($name:ident($($arg:ident : $ty:ty),*);)*) => {
        $(
            #[inline]
            fn $name<W: ?Sized + Write>(&mut self, writer: &mut W $(, $arg: $ty)*) -> io::Result<()> {
                self.0.$name(writer $(, $arg)*)
            }
        )*
    };
}

impl<F: Formatter> Formatter for Sig17<F> {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }

    forward_formatter! {
        begin_array();
        end_array();
        begin_array_value(first: bool);
        end_array_value();
        begin_object();
        end_object();
        begin_object_key(first: bool);
        end_object_key();
        begin_object_value();
        end_object_value();
    }
}

/// Compact JSON with 17-significant-digit reals.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> serde_json::Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Sig17(CompactFormatter));
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(out).expect("serde_json writes UTF-8"))
}

/// Indented variant of [`to_json`], for reports read by people.
pub fn to_json_pretty<T: Serialize + ?Sized>(value: &T) -> serde_json::Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Sig17(PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(out).expect("serde_json writes UTF-8"))
}

/// On-disk form of a trajectory or Dirichlet solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryFile {
    pub params: ProblemParams,
    pub a0: f64,
    pub b0: f64,
    pub outcome: Outcome,
    /// `[r, u, v, flux_u, flux_v]` per node.
    pub nodes: Vec<[f64; 5]>,
    pub events: Vec<ZeroEvent>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_star: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unscaled_radius: Option<f64>,
    /// Integral-form residual of the solution.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bisection_history: Option<Vec<(f64, Outcome)>>,
}

impl TrajectoryFile {
    pub fn from_trajectory(traj: &Trajectory) -> Self {
        TrajectoryFile {
            params: traj.params,
            a0: traj.a0,
            b0: traj.b0,
            outcome: traj.outcome,
            nodes: traj.nodes.iter().map(|s| [s.r, s.u, s.v, s.flux_u, s.flux_v]).collect(),
            events: traj.events.clone(),
            b_star: None,
            unscaled_radius: None,
            residual: None,
            bisection_history: None,
        }
    }

    pub fn from_solution(sol: &DirichletSolution, residual: Option<f64>) -> Self {
        TrajectoryFile {
            params: sol.params,
            b_star: Some(sol.b_star),
            unscaled_radius: Some(sol.unscaled_radius),
            residual,
            bisection_history: Some(sol.bisection_history.clone()),
            ..Self::from_trajectory(&sol.trajectory)
        }
    }

    pub fn to_trajectory(&self) -> Trajectory {
        Trajectory {
            params: self.params,
            a0: self.a0,
            b0: self.b0,
            nodes: self
                .nodes
                .iter()
                .map(|&[r, u, v, flux_u, flux_v]| State {
                    r,
                    u,
                    v,
                    flux_u,
                    flux_v,
                })
                .collect(),
            events: self.events.clone(),
            outcome: self.outcome,
        }
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        to_json(self)
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn read(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(Self::from_json(&text)?)
    }

    pub fn write(&self, path: &Path) -> anyhow::Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

/// Serializes rows as CSV with a header; `None` fields become empty cells.
pub fn write_csv<W: Write, S: Serialize>(writer: W, rows: &[S]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_string<S: Serialize>(rows: &[S]) -> csv::Result<String> {
    let mut buf = Vec::new();
    write_csv(&mut buf, rows)?;
    Ok(String::from_utf8(buf).expect("csv writes UTF-8"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::region_boundaries;
    use crate::shooting::{integrate_to_first_zero, ShootingOptions};
    use proptest::prelude::*;

    fn sample_trajectory() -> Trajectory {
        let params = ProblemParams::new(3, 2.0, 2.0, 2.0, 2.0)
            .unwrap()
            .with_radius(1.0)
            .unwrap();
        integrate_to_first_zero(&params, 1.0, 0.7, 100.0, &ShootingOptions::default()).unwrap()
    }

    #[test]
    fn trajectory_json_round_trip_is_bit_exact() {
        let traj = sample_trajectory();
        let text = TrajectoryFile::from_trajectory(&traj).to_json().unwrap();
        let back = TrajectoryFile::from_json(&text).unwrap().to_trajectory();
        assert_eq!(back.nodes.len(), traj.nodes.len());
        for (a, b) in traj.nodes.iter().zip(&back.nodes) {
            for (x, y) in [
                (a.r, b.r),
                (a.u, b.u),
                (a.v, b.v),
                (a.flux_u, b.flux_u),
                (a.flux_v, b.flux_v),
            ] {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
        assert_eq!(back, traj);
    }

    #[test]
    fn schema_has_the_documented_fields() {
        let traj = sample_trajectory();
        let value: serde_json::Value =
            serde_json::from_str(&TrajectoryFile::from_trajectory(&traj).to_json().unwrap()).unwrap();
        for key in ["params", "a0", "b0", "outcome", "nodes", "events"] {
            assert!(value.get(key).is_some(), "missing {key}");
        }
        assert_eq!(value["nodes"][0].as_array().unwrap().len(), 5);
        assert!(value.get("b_star").is_none());
    }

    #[test]
    fn reals_carry_seventeen_digits() {
        let text = to_json(&[0.1f64, 1.0, -2.5e-300]).unwrap();
        assert_eq!(
            text,
            "[1.0000000000000001e-1,1.0000000000000000e0,-2.5000000000000000e-300]"
        );
    }

    #[test]
    fn csv_has_header_and_empty_cells() {
        let rows = region_boundaries(4, 2.0, &[0.0, 3.0]);
        let text = csv_string(&rows).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "mu,delta_boundary_existence_new,delta_boundary_nonexistence,delta_boundary_cmm"
        );
        assert_eq!(lines.next().unwrap(), "0.0,,,");
        assert!(lines.next().unwrap().starts_with("3.0,"));
    }

    proptest! {
        #[test]
        fn any_finite_float_round_trips(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
            let text = to_json(&x).unwrap();
            let back: f64 = serde_json::from_str(&text).unwrap();
            prop_assert_eq!(back.to_bits(), x.to_bits());
        }
    }
}
