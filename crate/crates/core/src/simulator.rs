//! Exact propagation of pulse programs over dispersion meshes, plus an
//! independent Runge-Kutta oracle and the uncompensated-pulse reference.
//!
//! The exact path multiplies closed-form segment rotations, so its only
//! error is roundoff; the RK4 path integrates the same dynamics as an ODE
//! with each segment held at constant amplitude for unit time. The two share
//! no kernel code, which is what makes their agreement meaningful.

use rayon::prelude::*;

use crate::compiler::{PulseProgram, SegmentKind};
use crate::error::{Error, Result};
use crate::so3::{apply, rodrigues, Rotation, SpinState};

/// One system in the dispersion ensemble: position `s` in [0, 1] and rf
/// scale `eps` in (0, 1].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DispersionPoint {
    s: f64,
    eps: f64,
}

impl DispersionPoint {
    pub fn new(s: f64, eps: f64) -> Result<DispersionPoint> {
        if !(s.is_finite() && (0.0..=1.0).contains(&s)) {
            return Err(Error::invalid(format!(
                "position must lie in [0, 1], got {s}"
            )));
        }
        if !(eps.is_finite() && eps > 0.0 && eps <= 1.0) {
            return Err(Error::invalid(format!(
                "rf scale must lie in (0, 1], got {eps}"
            )));
        }
        Ok(DispersionPoint { s, eps })
    }

    /// Bypass the range checks, e.g. to probe the eps -> 0 limit. Values
    /// must still be finite.
    pub fn raw(s: f64, eps: f64) -> DispersionPoint {
        debug_assert!(s.is_finite() && eps.is_finite());
        DispersionPoint { s, eps }
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }
}

/// Uniformly spaced grid from `lo` to `hi` inclusive. A single-point grid is
/// allowed only when the endpoints coincide.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo.is_finite() && hi.is_finite()) || lo > hi {
        return Err(Error::invalid(format!("bad grid bounds [{lo}, {hi}]")));
    }
    match n {
        0 => Err(Error::invalid("grid needs at least one point")),
        1 if lo == hi => Ok(vec![lo]),
        1 => Err(Error::invalid("single-point grid needs lo = hi")),
        _ => Ok((0..n)
            .map(|i| {
                if i == n - 1 {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (n - 1) as f64
                }
            })
            .collect()),
    }
}

/// The rectangular (s, eps) mesh a program is checked over.
#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleMesh {
    s_values: Vec<f64>,
    eps_values: Vec<f64>,
}

impl EnsembleMesh {
    pub fn new(s_values: Vec<f64>, eps_values: Vec<f64>) -> Result<EnsembleMesh> {
        let increasing = |v: &[f64]| v.windows(2).all(|w| w[0] < w[1]);
        if s_values.is_empty() || eps_values.is_empty() {
            return Err(Error::invalid("mesh axes must be non-empty"));
        }
        if !increasing(&s_values) || !increasing(&eps_values) {
            return Err(Error::invalid("mesh axes must strictly increase"));
        }
        if !(s_values[0] >= 0.0 && *s_values.last().unwrap() <= 1.0) {
            return Err(Error::invalid("positions must lie in [0, 1]"));
        }
        if !(eps_values[0] > 0.0 && *eps_values.last().unwrap() <= 1.0) {
            return Err(Error::invalid("rf scales must lie in (0, 1]"));
        }
        Ok(EnsembleMesh {
            s_values,
            eps_values,
        })
    }

    pub fn s_values(&self) -> &[f64] {
        &self.s_values
    }

    pub fn eps_values(&self) -> &[f64] {
        &self.eps_values
    }

    pub fn len(&self) -> usize {
        self.s_values.len() * self.eps_values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Final states and net propagators over a mesh, stored s-major (all eps for
/// the first s, then the next s, ...).
#[derive(Clone, Debug)]
pub struct SimulationResult {
    mesh: EnsembleMesh,
    initial_state: SpinState,
    final_states: Vec<SpinState>,
    propagators: Vec<Rotation>,
}

impl SimulationResult {
    pub fn mesh(&self) -> &EnsembleMesh {
        &self.mesh
    }

    pub fn initial_state(&self) -> &SpinState {
        &self.initial_state
    }

    fn index(&self, i_s: usize, i_eps: usize) -> usize {
        i_s * self.mesh.eps_values.len() + i_eps
    }

    pub fn final_state(&self, i_s: usize, i_eps: usize) -> &SpinState {
        &self.final_states[self.index(i_s, i_eps)]
    }

    pub fn propagator(&self, i_s: usize, i_eps: usize) -> &Rotation {
        &self.propagators[self.index(i_s, i_eps)]
    }

    /// CSV export: header `s,eps,Mx,My,Mz`, one row per mesh point in s-major
    /// order, every float at 17 significant digits (exact round trip).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,eps,Mx,My,Mz\n");
        for (i_s, &s) in self.mesh.s_values.iter().enumerate() {
            for (i_eps, &eps) in self.mesh.eps_values.iter().enumerate() {
                let m = self.final_state(i_s, i_eps).0;
                out.push_str(&format!(
                    "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                    s, eps, m[0], m[1], m[2]
                ));
            }
        }
        out
    }
}

/// Parse the state CSV back into a mesh and the per-point final states
/// (s-major, matching `SimulationResult::to_csv`).
pub fn parse_states_csv(text: &str) -> Result<(EnsembleMesh, Vec<[f64; 3]>)> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    if header.trim() != "s,eps,Mx,My,Mz" {
        return Err(Error::invalid(format!(
            "expected header 's,eps,Mx,My,Mz', got '{header}'"
        )));
    }
    let mut rows: Vec<(f64, f64, [f64; 3])> = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<f64> = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::invalid(format!("row {}: {e}", i + 2)))?;
        if fields.len() != 5 {
            return Err(Error::invalid(format!(
                "row {}: expected 5 fields, got {}",
                i + 2,
                fields.len()
            )));
        }
        rows.push((fields[0], fields[1], [fields[2], fields[3], fields[4]]));
    }
    if rows.is_empty() {
        return Err(Error::invalid("state file has no data rows"));
    }
    let s0 = rows[0].0;
    let eps_values: Vec<f64> = rows.iter().take_while(|r| r.0 == s0).map(|r| r.1).collect();
    let n_eps = eps_values.len();
    if !rows.len().is_multiple_of(n_eps) {
        return Err(Error::invalid("state rows do not form a full grid"));
    }
    let mut s_values = Vec::with_capacity(rows.len() / n_eps);
    for block in rows.chunks(n_eps) {
        s_values.push(block[0].0);
        for (row, &eps) in block.iter().zip(&eps_values) {
            if row.0 != block[0].0 || row.1 != eps {
                return Err(Error::invalid("state rows are not in s-major grid order"));
            }
        }
    }
    let mesh = EnsembleMesh::new(s_values, eps_values)?;
    Ok((mesh, rows.into_iter().map(|r| r.2).collect()))
}

/// Closed-form rotation realized by one segment at one dispersion point: rf
/// flips scale with eps about their axis, gradient lobes rotate about z by
/// area times s.
pub fn segment_propagator(seg: &crate::compiler::PulseSegment, p: DispersionPoint) -> Rotation {
    Rotation::from_mat(match seg.kind {
        SegmentKind::RfX => rodrigues(seg.magnitude * p.eps, 0.0, 0.0),
        SegmentKind::RfY => rodrigues(0.0, seg.magnitude * p.eps, 0.0),
        SegmentKind::Grad => rodrigues(0.0, 0.0, seg.magnitude * p.s),
    })
}

/// Net propagator of a program at one point: the product of segment
/// rotations with the last segment applied leftmost. Empty programs give the
/// identity.
pub fn propagate(prog: &PulseProgram, p: DispersionPoint) -> Rotation {
    let mut u = Rotation::IDENTITY;
    for seg in prog.segments() {
        u = segment_propagator(seg, p) * u;
    }
    u
}

/// Propagate over every mesh point (in parallel; output order is the mesh
/// order regardless of scheduling) and apply to the initial state.
pub fn simulate_ensemble(
    prog: &PulseProgram,
    mesh: &EnsembleMesh,
    m0: &SpinState,
) -> SimulationResult {
    let n_eps = mesh.eps_values.len();
    let cells: Vec<(Rotation, SpinState)> = (0..mesh.len())
        .into_par_iter()
        .map(|idx| {
            let p = DispersionPoint::raw(mesh.s_values[idx / n_eps], mesh.eps_values[idx % n_eps]);
            let u = propagate(prog, p);
            let m = apply(&u, m0);
            (u, m)
        })
        .collect();
    let mut propagators = Vec::with_capacity(cells.len());
    let mut final_states = Vec::with_capacity(cells.len());
    for (u, m) in cells {
        propagators.push(u);
        final_states.push(m);
    }
    SimulationResult {
        mesh: mesh.clone(),
        initial_state: *m0,
        final_states,
        propagators,
    }
}

/// Final states of the uncompensated reference: a nominal 90-degree pulse
/// applied to e_z, which lands at (sin(eps pi/2), 0, cos(eps pi/2)).
pub fn naive_pulse(eps_values: &[f64]) -> Result<Vec<SpinState>> {
    let mut out = Vec::with_capacity(eps_values.len());
    for &eps in eps_values {
        if !(eps.is_finite() && eps > 0.0 && eps <= 1.0) {
            return Err(Error::invalid(format!(
                "rf scale must lie in (0, 1], got {eps}"
            )));
        }
        let a = eps * std::f64::consts::FRAC_PI_2;
        out.push(SpinState([a.sin(), 0.0, a.cos()]));
    }
    Ok(out)
}

/// Independent check on the exact path: integrate dM/dt = w x M with
/// classical fourth-order Runge-Kutta, realizing each segment as a
/// constant-amplitude interval of unit duration (amplitude = magnitude). No
/// renormalization is applied, so norm drift measures integration error.
pub fn rk4_oracle(
    prog: &PulseProgram,
    p: DispersionPoint,
    m0: &SpinState,
    steps_per_segment: usize,
) -> Result<SpinState> {
    if steps_per_segment == 0 {
        return Err(Error::invalid("need at least one step per segment"));
    }
    fn cross(w: [f64; 3], v: [f64; 3]) -> [f64; 3] {
        [
            w[1] * v[2] - w[2] * v[1],
            w[2] * v[0] - w[0] * v[2],
            w[0] * v[1] - w[1] * v[0],
        ]
    }
    fn axpy(v: [f64; 3], k: [f64; 3], h: f64) -> [f64; 3] {
        [v[0] + h * k[0], v[1] + h * k[1], v[2] + h * k[2]]
    }
    let mut m = m0.0;
    let h = 1.0 / steps_per_segment as f64;
    for seg in prog.segments() {
        let w = match seg.kind {
            SegmentKind::RfX => [seg.magnitude * p.eps, 0.0, 0.0],
            SegmentKind::RfY => [0.0, seg.magnitude * p.eps, 0.0],
            SegmentKind::Grad => [0.0, 0.0, seg.magnitude * p.s],
        };
        for _ in 0..steps_per_segment {
            let k1 = cross(w, m);
            let k2 = cross(w, axpy(m, k1, h / 2.0));
            let k3 = cross(w, axpy(m, k2, h / 2.0));
            let k4 = cross(w, axpy(m, k3, h));
            for i in 0..3 {
                m[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
    }
    Ok(SpinState(m))
}
