//! Target rotation profiles and truncated cosine-series designs.
//!
//! A target assigns a desired rotation angle to each value of a dispersion
//! parameter (rf scale epsilon, position s, or both). Designs approximate the
//! target — divided by the parameter for epsilon-type targets — by a finite
//! cosine series on [-1, 1] after an even, clamped extension. Coefficients
//! come from the orthogonality integrals, evaluated by piecewise composite
//! Simpson quadrature with a half-step accuracy check, so identical inputs
//! give bit-identical coefficients run to run.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Grid step the 1-D coefficient quadrature aims for (about 4000 intervals
/// across [-1, 1]; each smooth piece gets an even interval count near this
/// density, then is re-run at half step for the accuracy check).
const H_TARGET_1D: f64 = 2.0 / 4000.0;
/// Per-variable step for the 2-D tensor quadrature; coarser than 1-D since
/// cost is quadratic in node count.
const H_TARGET_2D: f64 = 2.0 / 800.0;
/// Largest tolerated Richardson residual before a coefficient is rejected.
const QUAD_RESIDUAL_LIMIT: f64 = 1e-9;

/// Which dispersion parameter a 1-D profile or design runs over.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variable {
    Epsilon,
    Position,
}

/// Desired rotation angle as a function of one dispersion parameter.
///
/// `active_range` is the parameter interval the design is judged on; for
/// epsilon targets its lower edge is `1 - delta` and must stay positive
/// because the series approximates `angle / epsilon`.
#[derive(Clone)]
pub struct TargetProfile1D {
    variable: Variable,
    angle_fn: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    active_range: (f64, f64),
    breakpoints: Vec<f64>,
}

impl TargetProfile1D {
    /// Wrap an arbitrary angle function. `breakpoints` lists interior points
    /// of `[0, 1]` where the function (or a derivative) jumps, so quadrature
    /// panels can be aligned with them.
    pub fn from_fn(
        variable: Variable,
        active_range: (f64, f64),
        breakpoints: &[f64],
        angle_fn: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<TargetProfile1D> {
        let (lo, hi) = active_range;
        if !(lo.is_finite() && hi.is_finite()) || lo >= hi || lo < 0.0 || hi > 1.0 {
            return Err(Error::invalid(format!(
                "active range must satisfy 0 <= lo < hi <= 1, got [{lo}, {hi}]"
            )));
        }
        if variable == Variable::Epsilon && lo <= 0.0 {
            return Err(Error::invalid(
                "epsilon targets need active range bounded away from 0",
            ));
        }
        // Probe for finiteness across the active range.
        for i in 0..=32 {
            let x = lo + (hi - lo) * i as f64 / 32.0;
            if !angle_fn(x).is_finite() {
                return Err(Error::invalid(format!(
                    "target angle is not finite at parameter {x}"
                )));
            }
        }
        let mut bps: Vec<f64> = breakpoints
            .iter()
            .copied()
            .filter(|b| *b > 0.0 && *b < 1.0)
            .collect();
        bps.sort_by(|a, b| a.partial_cmp(b).unwrap());
        bps.dedup_by(|a, b| (*a - *b).abs() <= 1e-12);
        Ok(TargetProfile1D {
            variable,
            angle_fn: Arc::new(angle_fn),
            active_range,
            breakpoints: bps,
        })
    }

    /// Constant target angle over epsilon in `[1 - delta, 1]`.
    pub fn uniform_eps(angle: f64, delta: f64) -> Result<TargetProfile1D> {
        if !angle.is_finite() {
            return Err(Error::invalid("target angle must be finite"));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::invalid(format!(
                "rf dispersion width must lie in (0, 1), got {delta}"
            )));
        }
        TargetProfile1D::from_fn(Variable::Epsilon, (1.0 - delta, 1.0), &[], move |_| angle)
    }

    /// Piecewise-linear target through the sample points `(xs[i], ys[i])`;
    /// values outside the table are held at the nearest endpoint.
    pub fn tabulated(variable: Variable, xs: Vec<f64>, ys: Vec<f64>) -> Result<TargetProfile1D> {
        if xs.len() != ys.len() || xs.len() < 2 {
            return Err(Error::invalid(
                "tabulated target needs two or more (x, y) samples",
            ));
        }
        if !xs.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::invalid("tabulated abscissae must strictly increase"));
        }
        if !ys.iter().all(|y| y.is_finite()) {
            return Err(Error::invalid("tabulated values must be finite"));
        }
        let range = (xs[0], *xs.last().unwrap());
        let xs = Arc::new(xs);
        let ys = Arc::new(ys);
        TargetProfile1D::from_fn(variable, range, &[], move |x| {
            let n = xs.len();
            if x <= xs[0] {
                return ys[0];
            }
            if x >= xs[n - 1] {
                return ys[n - 1];
            }
            let i = xs.partition_point(|&t| t <= x) - 1;
            let t = (x - xs[i]) / (xs[i + 1] - xs[i]);
            ys[i] * (1.0 - t) + ys[i + 1] * t
        })
    }

    pub fn variable(&self) -> Variable {
        self.variable
    }

    pub fn active_range(&self) -> (f64, f64) {
        self.active_range
    }

    /// Target angle at a parameter value (no clamping).
    pub fn angle(&self, x: f64) -> f64 {
        (self.angle_fn)(x)
    }
}

/// Band target for position: `angle` on `[lo, hi]`, zero outside, with
/// optional linear ramps of width `ramp_width` leading into each edge
/// (rising over `[lo - w, lo]`, falling over `[hi, hi + w]`).
pub fn slice_target(lo: f64, hi: f64, angle: f64, ramp_width: f64) -> Result<TargetProfile1D> {
    if !(lo >= 0.0 && lo < hi && hi <= 1.0) {
        return Err(Error::invalid(format!(
            "slice band must satisfy 0 <= lo < hi <= 1, got [{lo}, {hi}]"
        )));
    }
    if !(ramp_width >= 0.0 && ramp_width < (hi - lo) / 2.0) {
        return Err(Error::invalid(format!(
            "ramp width must lie in [0, (hi - lo)/2), got {ramp_width}"
        )));
    }
    if !angle.is_finite() {
        return Err(Error::invalid("slice angle must be finite"));
    }
    let bps = [lo - ramp_width, lo, hi, hi + ramp_width];
    TargetProfile1D::from_fn(Variable::Position, (0.0, 1.0), &bps, move |s| {
        if ramp_width == 0.0 {
            if (lo..=hi).contains(&s) {
                angle
            } else {
                0.0
            }
        } else if s < lo - ramp_width || s > hi + ramp_width {
            0.0
        } else if s < lo {
            angle * (s - (lo - ramp_width)) / ramp_width
        } else if s <= hi {
            angle
        } else {
            angle * ((hi + ramp_width) - s) / ramp_width
        }
    })
}

/// The even, clamped extension `g` of a target onto [-1, 1]: the function the
/// cosine coefficients integrate against. For epsilon targets `g` is
/// `angle(x)/x` (clamped into the active range), so that multiplying the
/// series by epsilon recovers the angle; position targets extend the angle
/// itself.
#[derive(Clone)]
pub struct EvenExtension {
    angle_fn: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    variable: Variable,
    lo: f64,
    hi: f64,
    /// Smoothness boundaries in (0, 1), mirrored to negative x by symmetry.
    breakpoints: Vec<f64>,
}

pub fn even_extension(t: &TargetProfile1D) -> EvenExtension {
    let (lo, hi) = t.active_range;
    let mut bps = t.breakpoints.clone();
    bps.push(lo);
    bps.push(hi);
    bps.retain(|b| *b > 0.0 && *b < 1.0);
    bps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    bps.dedup_by(|a, b| (*a - *b).abs() <= 1e-12);
    EvenExtension {
        angle_fn: t.angle_fn.clone(),
        variable: t.variable,
        lo,
        hi,
        breakpoints: bps,
    }
}

impl EvenExtension {
    /// Evaluate g(x) on [-1, 1]. Even by construction: depends on |x| only.
    pub fn eval(&self, x: f64) -> f64 {
        let xa = x.abs().clamp(self.lo, self.hi);
        let phi = (self.angle_fn)(xa);
        match self.variable {
            Variable::Epsilon => phi / xa,
            Variable::Position => phi,
        }
    }

    pub fn variable(&self) -> Variable {
        self.variable
    }
}

/// One cosine term: contributes `beta * cos(pi * k * x)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term1 {
    pub k: u32,
    pub beta: f64,
}

/// Truncated cosine series in one dispersion variable.
///
/// Epsilon designs approximate `angle/epsilon` (`divides_by_parameter`), so
/// the achieved rotation angle is `epsilon * series`; position designs
/// approximate the angle directly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DesignDoc1", into = "DesignDoc1")]
pub struct FourierDesign1D {
    variable: Variable,
    divides_by_parameter: bool,
    terms: Vec<Term1>,
}

impl FourierDesign1D {
    pub fn new(variable: Variable, terms: Vec<Term1>) -> Result<FourierDesign1D> {
        if !terms.windows(2).all(|w| w[0].k < w[1].k) {
            return Err(Error::invalid(
                "design terms must have strictly increasing harmonic numbers",
            ));
        }
        if !terms.iter().all(|t| t.beta.is_finite()) {
            return Err(Error::invalid("design coefficients must be finite"));
        }
        Ok(FourierDesign1D {
            variable,
            divides_by_parameter: variable == Variable::Epsilon,
            terms,
        })
    }

    pub fn variable(&self) -> Variable {
        self.variable
    }

    pub fn divides_by_parameter(&self) -> bool {
        self.divides_by_parameter
    }

    pub fn terms(&self) -> &[Term1] {
        &self.terms
    }
}

#[derive(Serialize, Deserialize)]
struct DesignDoc1 {
    variable: Variable,
    divides_by_parameter: bool,
    terms: Vec<Term1>,
}

impl TryFrom<DesignDoc1> for FourierDesign1D {
    type Error = Error;

    fn try_from(doc: DesignDoc1) -> Result<FourierDesign1D> {
        let design = FourierDesign1D::new(doc.variable, doc.terms)?;
        if design.divides_by_parameter != doc.divides_by_parameter {
            return Err(Error::invalid(
                "divides_by_parameter contradicts the design variable",
            ));
        }
        Ok(design)
    }
}

impl From<FourierDesign1D> for DesignDoc1 {
    fn from(d: FourierDesign1D) -> DesignDoc1 {
        DesignDoc1 {
            variable: d.variable,
            divides_by_parameter: d.divides_by_parameter,
            terms: d.terms,
        }
    }
}

/// One product term: contributes `beta * cos(pi k1 s) * cos(pi k2 eps)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term2 {
    pub k1: u32,
    pub k2: u32,
    pub beta: f64,
}

/// Truncated double cosine series over (s, epsilon); always approximates
/// `angle / epsilon`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DesignDoc2", into = "DesignDoc2")]
pub struct FourierDesign2D {
    terms: Vec<Term2>,
}

impl FourierDesign2D {
    pub fn new(terms: Vec<Term2>) -> Result<FourierDesign2D> {
        if !terms
            .windows(2)
            .all(|w| (w[0].k1, w[0].k2) < (w[1].k1, w[1].k2))
        {
            return Err(Error::invalid(
                "design terms must be in strictly increasing (k1, k2) order",
            ));
        }
        if !terms.iter().all(|t| t.beta.is_finite()) {
            return Err(Error::invalid("design coefficients must be finite"));
        }
        Ok(FourierDesign2D { terms })
    }

    pub fn terms(&self) -> &[Term2] {
        &self.terms
    }
}

#[derive(Serialize, Deserialize)]
enum JointTag {
    #[serde(rename = "joint")]
    Joint,
}

#[derive(Serialize, Deserialize)]
struct DesignDoc2 {
    variable: JointTag,
    divides_by_parameter: bool,
    terms: Vec<Term2>,
}

impl TryFrom<DesignDoc2> for FourierDesign2D {
    type Error = Error;

    fn try_from(doc: DesignDoc2) -> Result<FourierDesign2D> {
        if !doc.divides_by_parameter {
            return Err(Error::invalid(
                "joint designs always divide by the rf scale",
            ));
        }
        FourierDesign2D::new(doc.terms)
    }
}

impl From<FourierDesign2D> for DesignDoc2 {
    fn from(d: FourierDesign2D) -> DesignDoc2 {
        DesignDoc2 {
            variable: JointTag::Joint,
            divides_by_parameter: true,
            terms: d.terms,
        }
    }
}

/// A design of either dimensionality; this is the on-disk document type.
///
/// The JSON schema is `{"variable": "epsilon"|"position"|"joint",
/// "divides_by_parameter": bool, "terms": [{"k", "beta"} | {"k1", "k2",
/// "beta"}]}` and round-trips finite doubles bit-exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Design {
    OneD(FourierDesign1D),
    TwoD(FourierDesign2D),
}

impl Design {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("design serialization is infallible")
    }

    pub fn from_json(text: &str) -> Result<Design> {
        serde_json::from_str(text).map_err(|e| Error::invalid(format!("design document: {e}")))
    }

    pub fn kind_str(&self) -> &'static str {
        match self {
            Design::OneD(d) => match d.variable {
                Variable::Epsilon => "epsilon",
                Variable::Position => "position",
            },
            Design::TwoD(_) => "joint",
        }
    }
}

// ---------------------------------------------------------------------------
// Quadrature
// ---------------------------------------------------------------------------

/// Composite-Simpson node/weight pairs at two resolutions; the coarse grid is
/// every other fine node, so the half-step comparison is a valid Richardson
/// estimate.
struct QuadNodes {
    fine: Vec<(f64, f64)>,
    coarse: Vec<(f64, f64)>,
}

fn push_simpson(out: &mut Vec<(f64, f64)>, a: f64, b: f64, n: usize) {
    let h = (b - a) / n as f64;
    // Pull the end nodes a sliver inside the panel: panel edges sit on the
    // integrand's breakpoints, and sampling exactly at a jump would take the
    // wrong one-sided value for one of the adjoining panels.
    let nudge = (b - a) * 1e-12;
    for i in 0..=n {
        let x = if i == 0 {
            a + nudge
        } else if i == n {
            b - nudge
        } else {
            a + i as f64 * h
        };
        let c = if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        out.push((x, c * h / 3.0));
    }
}

/// Panels for the interval union described by `edges` (ascending); each piece
/// gets an even interval count targeting step `h_target`, doubled for the
/// fine pass. Degenerate pieces are skipped.
fn simpson_nodes(edges: &[f64], h_target: f64) -> QuadNodes {
    let mut nodes = QuadNodes {
        fine: Vec::new(),
        coarse: Vec::new(),
    };
    for w in edges.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b - a <= 1e-12 {
            continue;
        }
        let mut n = (((b - a) / h_target).ceil() as usize).max(2);
        if n % 2 == 1 {
            n += 1;
        }
        push_simpson(&mut nodes.coarse, a, b, n);
        push_simpson(&mut nodes.fine, a, b, 2 * n);
    }
    nodes
}

/// Mirror interior breakpoints of (0, 1) onto [-1, 1] and add the ends.
fn symmetric_edges(breakpoints: &[f64]) -> Vec<f64> {
    let mut edges = Vec::with_capacity(2 * breakpoints.len() + 2);
    edges.push(-1.0);
    for b in breakpoints.iter().rev() {
        edges.push(-b);
    }
    edges.extend_from_slice(breakpoints);
    edges.push(1.0);
    edges
}

/// Integrate `f` against the stored nodes, returning the Richardson-
/// extrapolated value and the residual estimate `|fine - coarse| / 15`.
fn integrate_checked(
    fine: &[(f64, f64, f64)],
    coarse: &[(f64, f64, f64)],
    weight: impl Fn(f64) -> f64,
) -> (f64, f64) {
    let i_f: f64 = fine.iter().map(|&(x, w, g)| w * g * weight(x)).sum();
    let i_c: f64 = coarse.iter().map(|&(x, w, g)| w * g * weight(x)).sum();
    let resid = (i_f - i_c).abs() / 15.0;
    (i_f + (i_f - i_c) / 15.0, resid)
}

/// Cosine coefficients of the extended target for k = 0 .. k_count-1:
/// `beta_k = integral cos(pi k x) g(x) dx` over [-1, 1], halved for k = 0.
///
/// Quadrature panels align with the extension's breakpoints; each
/// coefficient is rejected if its half-step residual exceeds 1e-9, otherwise
/// the extrapolated value is kept (worth several digits over the fine grid).
pub fn coefficients_1d(g: &EvenExtension, k_count: usize) -> Result<FourierDesign1D> {
    if k_count == 0 {
        return Err(Error::invalid("term count must be at least 1"));
    }
    let nodes = simpson_nodes(&symmetric_edges(&g.breakpoints), H_TARGET_1D);
    let fine: Vec<(f64, f64, f64)> = nodes.fine.iter().map(|&(x, w)| (x, w, g.eval(x))).collect();
    let coarse: Vec<(f64, f64, f64)> = nodes
        .coarse
        .iter()
        .map(|&(x, w)| (x, w, g.eval(x)))
        .collect();

    let mut terms = Vec::with_capacity(k_count);
    for k in 0..k_count {
        let kk = PI * k as f64;
        let (val, resid) = integrate_checked(&fine, &coarse, |x| (kk * x).cos());
        if resid > QUAD_RESIDUAL_LIMIT {
            return Err(Error::Numerical {
                context: format!("cosine coefficient k = {k}"),
                residual: resid,
            });
        }
        terms.push(Term1 {
            k: k as u32,
            beta: if k == 0 { val / 2.0 } else { val },
        });
    }
    FourierDesign1D::new(g.variable, terms)
}

/// Evaluate the series at a parameter value: sum of beta_k cos(pi k x).
pub fn series_eval_1d(d: &FourierDesign1D, x: f64) -> f64 {
    d.terms
        .iter()
        .map(|t| t.beta * (PI * t.k as f64 * x).cos())
        .sum()
}

/// Evaluate the double series at (s, eps).
pub fn series_eval_2d(d: &FourierDesign2D, s: f64, eps: f64) -> f64 {
    d.terms
        .iter()
        .map(|t| t.beta * (PI * t.k1 as f64 * s).cos() * (PI * t.k2 as f64 * eps).cos())
        .sum()
}

/// Worst-case and root-mean-square gap between the series and the base
/// function it approximates, on a uniform grid over the target's active
/// range.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruncationReport {
    pub max_abs: f64,
    pub rms: f64,
}

pub fn truncation_error(
    d: &FourierDesign1D,
    t: &TargetProfile1D,
    grid_n: usize,
) -> Result<TruncationReport> {
    if grid_n < 2 {
        return Err(Error::invalid("truncation grid needs at least 2 points"));
    }
    if d.variable != t.variable {
        return Err(Error::invalid(
            "design and target run over different dispersion variables",
        ));
    }
    let (lo, hi) = t.active_range;
    let mut max_abs: f64 = 0.0;
    let mut sum_sq = 0.0;
    for i in 0..grid_n {
        let x = lo + (hi - lo) * i as f64 / (grid_n - 1) as f64;
        let base = if d.divides_by_parameter {
            t.angle(x) / x
        } else {
            t.angle(x)
        };
        let e = series_eval_1d(d, x) - base;
        max_abs = max_abs.max(e.abs());
        sum_sq += e * e;
    }
    Ok(TruncationReport {
        max_abs,
        rms: (sum_sq / grid_n as f64).sqrt(),
    })
}

// ---------------------------------------------------------------------------
// Two-variable targets
// ---------------------------------------------------------------------------

/// Desired rotation angle over the (s, epsilon) rectangle.
#[derive(Clone)]
pub struct TargetProfile2D {
    angle_fn: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
    s_range: (f64, f64),
    eps_range: (f64, f64),
    s_breakpoints: Vec<f64>,
    eps_breakpoints: Vec<f64>,
}

impl TargetProfile2D {
    pub fn from_fn(
        s_range: (f64, f64),
        eps_range: (f64, f64),
        s_breakpoints: &[f64],
        eps_breakpoints: &[f64],
        angle_fn: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Result<TargetProfile2D> {
        let ok = |(lo, hi): (f64, f64)| lo.is_finite() && hi.is_finite() && lo < hi && hi <= 1.0;
        if !ok(s_range) || s_range.0 < 0.0 {
            return Err(Error::invalid("s range must satisfy 0 <= lo < hi <= 1"));
        }
        if !ok(eps_range) || eps_range.0 <= 0.0 {
            return Err(Error::invalid(
                "epsilon range must satisfy 0 < lo < hi <= 1",
            ));
        }
        for i in 0..=8 {
            for j in 0..=8 {
                let s = s_range.0 + (s_range.1 - s_range.0) * i as f64 / 8.0;
                let e = eps_range.0 + (eps_range.1 - eps_range.0) * j as f64 / 8.0;
                if !angle_fn(s, e).is_finite() {
                    return Err(Error::invalid(format!(
                        "target angle is not finite at (s, eps) = ({s}, {e})"
                    )));
                }
            }
        }
        let clean = |bps: &[f64]| {
            let mut v: Vec<f64> = bps
                .iter()
                .copied()
                .filter(|b| *b > 0.0 && *b < 1.0)
                .collect();
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            v.dedup_by(|a, b| (*a - *b).abs() <= 1e-12);
            v
        };
        Ok(TargetProfile2D {
            angle_fn: Arc::new(angle_fn),
            s_range,
            eps_range,
            s_breakpoints: clean(s_breakpoints),
            eps_breakpoints: clean(eps_breakpoints),
        })
    }

    /// Constant target angle over s in [0, 1], epsilon in [1 - delta, 1].
    pub fn uniform_joint(angle: f64, delta: f64) -> Result<TargetProfile2D> {
        if !angle.is_finite() {
            return Err(Error::invalid("target angle must be finite"));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::invalid(format!(
                "rf dispersion width must lie in (0, 1), got {delta}"
            )));
        }
        TargetProfile2D::from_fn((0.0, 1.0), (1.0 - delta, 1.0), &[], &[], move |_, _| angle)
    }

    pub fn angle(&self, s: f64, eps: f64) -> f64 {
        (self.angle_fn)(s, eps)
    }

    pub fn s_range(&self) -> (f64, f64) {
        self.s_range
    }

    pub fn eps_range(&self) -> (f64, f64) {
        self.eps_range
    }
}

/// Tensor-product cosine coefficients of the extended 2-D target
/// `g(xs, xe) = angle(|xs|, |xe|) / |xe|` (each variable clamped into its
/// range), for k1 = 0..k1_count-1 and k2 = 0..k2_count-1. Normalization is
/// per variable: a factor 1/2 whenever the harmonic number is 0.
pub fn coefficients_2d(
    t: &TargetProfile2D,
    k1_count: usize,
    k2_count: usize,
) -> Result<FourierDesign2D> {
    if k1_count == 0 || k2_count == 0 {
        return Err(Error::invalid("term counts must be at least 1"));
    }
    let g2 = |xs: f64, xe: f64| {
        let cs = xs.abs().clamp(t.s_range.0, t.s_range.1);
        let ce = xe.abs().clamp(t.eps_range.0, t.eps_range.1);
        (t.angle_fn)(cs, ce) / ce
    };
    let mut s_bps = t.s_breakpoints.clone();
    s_bps.extend([t.s_range.0, t.s_range.1]);
    let mut e_bps = t.eps_breakpoints.clone();
    e_bps.extend([t.eps_range.0, t.eps_range.1]);
    let filter = |mut v: Vec<f64>| {
        v.retain(|b| *b > 0.0 && *b < 1.0);
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v.dedup_by(|a, b| (*a - *b).abs() <= 1e-12);
        v
    };
    let s_nodes = simpson_nodes(&symmetric_edges(&filter(s_bps)), H_TARGET_2D);
    let e_nodes = simpson_nodes(&symmetric_edges(&filter(e_bps)), H_TARGET_2D);

    // I[k1][k2] = sum_i sum_j w_i w_j g(x_i, y_j) cos(pi k1 x_i) cos(pi k2 y_j),
    // accumulated row by row so the g grid is never materialized.
    let tensor = |sn: &[(f64, f64)], en: &[(f64, f64)]| -> Vec<Vec<f64>> {
        let cos_e: Vec<Vec<f64>> = (0..k2_count)
            .map(|k2| {
                en.iter()
                    .map(|&(y, wy)| wy * (PI * k2 as f64 * y).cos())
                    .collect()
            })
            .collect();
        // inner[k2][i] = sum_j w_j g(x_i, y_j) cos(pi k2 y_j)
        let mut inner = vec![vec![0.0; sn.len()]; k2_count];
        let mut row = vec![0.0; en.len()];
        for (i, &(x, _)) in sn.iter().enumerate() {
            for (j, &(y, _)) in en.iter().enumerate() {
                row[j] = g2(x, y);
            }
            for (k2, ce) in cos_e.iter().enumerate() {
                inner[k2][i] = row.iter().zip(ce).map(|(g, c)| g * c).sum();
            }
        }
        (0..k1_count)
            .map(|k1| {
                let cs: Vec<f64> = sn
                    .iter()
                    .map(|&(x, wx)| wx * (PI * k1 as f64 * x).cos())
                    .collect();
                (0..k2_count)
                    .map(|k2| cs.iter().zip(&inner[k2]).map(|(c, v)| c * v).sum())
                    .collect()
            })
            .collect()
    };
    let i_fine = tensor(&s_nodes.fine, &e_nodes.fine);
    let i_coarse = tensor(&s_nodes.coarse, &e_nodes.coarse);

    let mut terms = Vec::with_capacity(k1_count * k2_count);
    for k1 in 0..k1_count {
        for k2 in 0..k2_count {
            let (f, c) = (i_fine[k1][k2], i_coarse[k1][k2]);
            let resid = (f - c).abs() / 15.0;
            if resid > QUAD_RESIDUAL_LIMIT {
                return Err(Error::Numerical {
                    context: format!("cosine coefficient (k1, k2) = ({k1}, {k2})"),
                    residual: resid,
                });
            }
            let norm = if k1 == 0 { 0.5 } else { 1.0 } * if k2 == 0 { 0.5 } else { 1.0 };
            terms.push(Term2 {
                k1: k1 as u32,
                k2: k2 as u32,
                beta: norm * (f + (f - c) / 15.0),
            });
        }
    }
    FourierDesign2D::new(terms)
}
