//! Comparison of simulated ensembles against targets and series predictions,
//! the 1/n splitting-error scan, and the bundled demonstration datasets.

use std::f64::consts::{FRAC_PI_2, PI};
use std::str::FromStr;

use crate::compiler::{compile_design, compile_eps, split, Axis, PulseProgram};
use crate::error::{Error, Result};
use crate::fourier::{
    coefficients_1d, even_extension, series_eval_1d, series_eval_2d, slice_target, Design,
    FourierDesign1D, TargetProfile1D, Term1, Variable,
};
use crate::simulator::{
    linspace, naive_pulse, propagate, simulate_ensemble, DispersionPoint, EnsembleMesh,
    SimulationResult,
};
use crate::so3::{apply, axis_angle_of, operator_error, rot_exp, Rotation, SpinState};

/// Rotation angle the truncated series predicts at a dispersion point:
/// rf-scale designs deliver eps times the series at eps, position designs
/// the series at s, joint designs eps times the double series at (s, eps).
pub fn predicted_angle(design: &Design, p: DispersionPoint) -> f64 {
    match design {
        Design::OneD(d) => match d.variable() {
            Variable::Epsilon => p.eps() * series_eval_1d(d, p.eps()),
            Variable::Position => series_eval_1d(d, p.s()),
        },
        Design::TwoD(d) => p.eps() * series_eval_2d(d, p.s(), p.eps()),
    }
}

/// Distance between two angles on the circle: |a - b| wrapped into [0, pi].
pub fn circular_distance(a: f64, b: f64) -> f64 {
    let mut d = (a - b) % (2.0 * PI);
    if d > PI {
        d -= 2.0 * PI;
    } else if d < -PI {
        d += 2.0 * PI;
    }
    d.abs()
}

/// Per-point comparison of a simulated propagator against the series
/// prediction and the ideal target rotation.
#[derive(Clone, Copy, Debug)]
pub struct PointReport {
    /// The varying dispersion parameter (eps or s).
    pub param: f64,
    pub predicted_angle: f64,
    /// Rotation angle about the design axis, signed by the side of the axis
    /// the achieved rotation points to.
    pub achieved_angle: f64,
    pub achieved_axis: [f64; 3],
    /// Euclidean distance between the final state and the target rotation
    /// applied to the initial state.
    pub state_error: f64,
    /// Operator distance between the propagator and the target rotation.
    pub op_error: f64,
    /// Set when a non-negligible rotation's axis strays more than 10 degrees
    /// from the design axis.
    pub axis_drift: bool,
}

/// Point reports plus max/rms aggregates over the profile.
#[derive(Clone, Debug)]
pub struct ProfileErrorReport {
    pub points: Vec<PointReport>,
    pub max_angle_gap: f64,
    pub rms_angle_gap: f64,
    pub max_state_error: f64,
    pub rms_state_error: f64,
    pub max_op_error: f64,
    pub rms_op_error: f64,
}

impl ProfileErrorReport {
    /// CSV export with header `param,predicted_angle,achieved_angle,
    /// state_error,op_error`, floats at 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("param,predicted_angle,achieved_angle,state_error,op_error\n");
        for p in &self.points {
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                p.param, p.predicted_angle, p.achieved_angle, p.state_error, p.op_error
            ));
        }
        out
    }
}

fn axis_vector(axis: Axis) -> [f64; 3] {
    match axis {
        Axis::X => [1.0, 0.0, 0.0],
        Axis::Y => [0.0, 1.0, 0.0],
    }
}

fn rot_about(axis: Axis, angle: f64) -> Result<Rotation> {
    match axis {
        Axis::X => rot_exp(angle, 0.0, 0.0),
        Axis::Y => rot_exp(0.0, angle, 0.0),
    }
}

/// Score a simulated ensemble against its design and target.
///
/// The result's mesh must be one-dimensional along the target's variable
/// (one s value for rf-scale profiles, one eps value for position profiles).
/// The target rotation at each point is about `axis` by the target angle
/// (parameter clamped into the active range); the achieved angle comes from
/// the propagator's axis-angle form, signed relative to the design axis.
pub fn profile_error(
    result: &SimulationResult,
    design: &Design,
    axis: Axis,
    target: &TargetProfile1D,
) -> Result<ProfileErrorReport> {
    let d1 = match design {
        Design::OneD(d) => d,
        Design::TwoD(_) => {
            return Err(Error::invalid(
                "profile scoring runs over one variable; joint designs are not supported",
            ))
        }
    };
    if d1.variable() != target.variable() {
        return Err(Error::invalid(
            "design and target run over different dispersion variables",
        ));
    }
    let mesh = result.mesh();
    let params: &[f64] = match target.variable() {
        Variable::Epsilon => {
            if mesh.s_values().len() != 1 {
                return Err(Error::invalid(
                    "rf-scale profiles need a single-position mesh",
                ));
            }
            mesh.eps_values()
        }
        Variable::Position => {
            if mesh.eps_values().len() != 1 {
                return Err(Error::invalid(
                    "position profiles need a single-rf-scale mesh",
                ));
            }
            mesh.s_values()
        }
    };
    let (lo, hi) = target.active_range();
    let n_axis = axis_vector(axis);
    let drift_cos = 10f64.to_radians().cos();

    let mut points = Vec::with_capacity(params.len());
    let mut agg = [(0.0f64, 0.0f64); 3]; // (max, sum of squares) per error kind
    for (i, &x) in params.iter().enumerate() {
        let (i_s, i_eps, point) = match target.variable() {
            Variable::Epsilon => (0, i, DispersionPoint::raw(mesh.s_values()[0], x)),
            Variable::Position => (i, 0, DispersionPoint::raw(x, mesh.eps_values()[0])),
        };
        let u = result.propagator(i_s, i_eps);
        let aa = axis_angle_of(u);
        let dot = aa.axis[0] * n_axis[0] + aa.axis[1] * n_axis[1] + aa.axis[2] * n_axis[2];
        let achieved = if dot < 0.0 { -aa.angle } else { aa.angle };
        let predicted = predicted_angle(design, point);
        let target_rot = rot_about(axis, target.angle(x.clamp(lo, hi)))?;
        let m_target = apply(&target_rot, result.initial_state());
        let m_final = result.final_state(i_s, i_eps);
        let state_error = (0..3)
            .map(|j| (m_final.0[j] - m_target.0[j]).powi(2))
            .sum::<f64>()
            .sqrt();
        let op_error = operator_error(u, &target_rot);
        let angle_gap = circular_distance(achieved, predicted);
        for (slot, e) in agg.iter_mut().zip([angle_gap, state_error, op_error]) {
            slot.0 = slot.0.max(e);
            slot.1 += e * e;
        }
        points.push(PointReport {
            param: x,
            predicted_angle: predicted,
            achieved_angle: achieved,
            achieved_axis: aa.axis,
            state_error,
            op_error,
            axis_drift: aa.angle > 1e-6 && dot.abs() < drift_cos,
        });
    }
    let n = points.len() as f64;
    Ok(ProfileErrorReport {
        points,
        max_angle_gap: agg[0].0,
        rms_angle_gap: (agg[0].1 / n).sqrt(),
        max_state_error: agg[1].0,
        rms_state_error: (agg[1].1 / n).sqrt(),
        max_op_error: agg[2].0,
        rms_op_error: (agg[2].1 / n).sqrt(),
    })
}

/// One row of the splitting-error scan.
#[derive(Clone, Copy, Debug)]
pub struct ScanRow {
    pub beta0: f64,
    /// Repeat count the threshold forced for the scanned coefficient.
    pub n: usize,
    /// Operator distance from the ideal single-term rotation
    /// exp(eps * beta * cos(pi k eps) * Omega_y).
    pub operator_error: f64,
}

/// Compile the single term (k, beta) at each threshold in `beta0_list`,
/// propagate at rf scale `eps`, and measure the operator error against the
/// ideal rotation. Errors shrink like 1/n as the threshold halves.
pub fn splitting_error_scan(
    k: u32,
    beta: f64,
    eps: f64,
    beta0_list: &[f64],
) -> Result<Vec<ScanRow>> {
    if beta == 0.0 || !beta.is_finite() {
        return Err(Error::invalid(
            "scanned coefficient must be finite and nonzero",
        ));
    }
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::invalid(format!(
            "rf scale must lie in (0, 1], got {eps}"
        )));
    }
    let d = FourierDesign1D::new(Variable::Epsilon, vec![Term1 { k, beta }])?;
    let ideal = rot_exp(0.0, eps * beta * (PI * k as f64 * eps).cos(), 0.0)?;
    beta0_list
        .iter()
        .map(|&beta0| {
            let prog = compile_eps(&d, Axis::Y, beta0)?;
            let u = propagate(&prog, DispersionPoint::raw(0.0, eps));
            Ok(ScanRow {
                beta0,
                n: split(beta, beta0).0,
                operator_error: operator_error(&u, &ideal),
            })
        })
        .collect()
}

/// The bundled demonstration scenarios, named for the dataset files they
/// produce.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Figure {
    /// Series-vs-extension curves for the uniform 90-degree rf-scale design.
    Fig2,
    /// Compensated 90-degree y rotation over eps in [0.1, 1], five terms.
    Fig3,
    /// The uncompensated 90-degree pulse over the same rf-scale range.
    Fig4,
    /// Compensated 180-degree x rotation over eps in [0.5, 1], nine terms.
    Fig5,
    /// Slice-selective 90-degree y rotation over s in [0, 1], thirty terms.
    Fig6,
}

impl FromStr for Figure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Figure> {
        match s.to_ascii_lowercase().as_str() {
            "fig2" => Ok(Figure::Fig2),
            "fig3" => Ok(Figure::Fig3),
            "fig4" => Ok(Figure::Fig4),
            "fig5" => Ok(Figure::Fig5),
            "fig6" => Ok(Figure::Fig6),
            other => Err(Error::invalid(format!(
                "unknown figure '{other}' (expected fig2..fig6)"
            ))),
        }
    }
}

/// Named files making up one demonstration dataset.
#[derive(Clone, Debug)]
pub struct FigureData {
    pub files: Vec<(String, String)>,
}

/// Splitting threshold used by the demonstration datasets: 5 degrees, well
/// below the 30-degree cap, so first-order element error stays small.
pub fn demo_beta0() -> f64 {
    5f64.to_radians()
}

fn report_files(
    tag: &str,
    design: &FourierDesign1D,
    axis: Axis,
    target: &TargetProfile1D,
    mesh: &EnsembleMesh,
    m0: SpinState,
    meta: serde_json::Value,
) -> Result<Vec<(String, String)>> {
    let d = Design::OneD(design.clone());
    let prog = compile_design(&d, axis, demo_beta0())?;
    let result = simulate_ensemble(&prog, mesh, &m0);
    let report = profile_error(&result, &d, axis, target)?;
    Ok(vec![
        (format!("{tag}_states.csv"), result.to_csv()),
        (format!("{tag}_report.csv"), report.to_csv()),
        (
            format!("{tag}_meta.json"),
            serde_json::to_string_pretty(&meta).expect("metadata serialization is infallible"),
        ),
    ])
}

/// Run one demonstration scenario end to end and return its dataset files.
/// Parameters (term counts, meshes, initial states) are fixed so outputs are
/// reproducible byte for byte.
pub fn figure_dataset(fig: Figure) -> Result<FigureData> {
    let files = match fig {
        Figure::Fig2 => {
            let target = TargetProfile1D::uniform_eps(FRAC_PI_2, 0.9)?;
            let g = even_extension(&target);
            let design = coefficients_1d(&g, 5)?;
            let mut csv = String::from("x,series,extension\n");
            for &x in &linspace(-1.0, 1.0, 401)? {
                csv.push_str(&format!(
                    "{:.16e},{:.16e},{:.16e}\n",
                    x,
                    series_eval_1d(&design, x),
                    g.eval(x)
                ));
            }
            let meta = serde_json::json!({
                "target": {"kind": "uniform_eps", "angle": FRAC_PI_2, "delta": 0.9},
                "k_count": 5,
                "grid": {"lo": -1.0, "hi": 1.0, "n": 401},
            });
            vec![
                ("fig2_series.csv".to_string(), csv),
                (
                    "fig2_meta.json".to_string(),
                    serde_json::to_string_pretty(&meta).unwrap(),
                ),
            ]
        }
        Figure::Fig3 => {
            let target = TargetProfile1D::uniform_eps(FRAC_PI_2, 0.9)?;
            let design = coefficients_1d(&even_extension(&target), 5)?;
            let mesh = EnsembleMesh::new(vec![0.0], linspace(0.1, 1.0, 181)?)?;
            let meta = serde_json::json!({
                "target": {"kind": "uniform_eps", "angle": FRAC_PI_2, "delta": 0.9},
                "k_count": 5,
                "axis": "y",
                "beta0": demo_beta0(),
                "mesh": {"s": [0.0], "eps": {"lo": 0.1, "hi": 1.0, "n": 181}},
                "m0": "e_z",
            });
            report_files(
                "fig3",
                &design,
                Axis::Y,
                &target,
                &mesh,
                SpinState::E_Z,
                meta,
            )?
        }
        Figure::Fig4 => {
            let eps = linspace(0.1, 1.0, 181)?;
            let states = naive_pulse(&eps)?;
            let mut csv = String::from("s,eps,Mx,My,Mz\n");
            for (&e, m) in eps.iter().zip(&states) {
                csv.push_str(&format!(
                    "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                    0.0, e, m.0[0], m.0[1], m.0[2]
                ));
            }
            let meta = serde_json::json!({
                "pulse": "nominal 90-degree y flip, one unit of time",
                "mesh": {"s": [0.0], "eps": {"lo": 0.1, "hi": 1.0, "n": 181}},
                "m0": "e_z",
            });
            vec![
                ("fig4_states.csv".to_string(), csv),
                (
                    "fig4_meta.json".to_string(),
                    serde_json::to_string_pretty(&meta).unwrap(),
                ),
            ]
        }
        Figure::Fig5 => {
            let target = TargetProfile1D::uniform_eps(PI, 0.5)?;
            let design = coefficients_1d(&even_extension(&target), 9)?;
            let mesh = EnsembleMesh::new(vec![0.0], linspace(0.5, 1.0, 101)?)?;
            let meta = serde_json::json!({
                "target": {"kind": "uniform_eps", "angle": PI, "delta": 0.5},
                "k_count": 9,
                "axis": "x",
                "beta0": demo_beta0(),
                "mesh": {"s": [0.0], "eps": {"lo": 0.5, "hi": 1.0, "n": 101}},
                "m0": "e_y",
            });
            report_files(
                "fig5",
                &design,
                Axis::X,
                &target,
                &mesh,
                SpinState::E_Y,
                meta,
            )?
        }
        Figure::Fig6 => {
            let target = slice_target(0.5, 0.75, FRAC_PI_2, 0.0)?;
            let design = coefficients_1d(&even_extension(&target), 30)?;
            let mesh = EnsembleMesh::new(linspace(0.0, 1.0, 201)?, vec![1.0])?;
            let meta = serde_json::json!({
                "target": {"kind": "slice", "lo": 0.5, "hi": 0.75, "angle": FRAC_PI_2,
                           "ramp_width": 0.0},
                "k_count": 30,
                "axis": "y",
                "beta0": demo_beta0(),
                "mesh": {"s": {"lo": 0.0, "hi": 1.0, "n": 201}, "eps": [1.0]},
                "m0": "e_z",
            });
            report_files(
                "fig6",
                &design,
                Axis::Y,
                &target,
                &mesh,
                SpinState::E_Z,
                meta,
            )?
        }
    };
    Ok(FigureData { files })
}

/// Convenience used by scoring flows: recompile a design document the same
/// way the dataset generators do.
pub fn recompile(design: &Design, axis: Axis, beta0: f64) -> Result<PulseProgram> {
    compile_design(design, axis, beta0)
}
