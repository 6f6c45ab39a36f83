//! Translation of cosine-series designs into executable pulse programs.
//!
//! Each series term (k, beta) becomes a short fixed "element" of hard rf
//! pulses and gradient lobes whose net effect, to first order in beta, is a
//! rotation by beta times the term's cosine profile. Large coefficients are
//! split into n repeats of beta/n so every element stays within a smallness
//! threshold beta0; the leftover error scales like 1/n.
//!
//! Chronology convention: segment lists are in time order, and the net
//! propagator is the reverse-order matrix product (the last segment acts
//! leftmost). All magnitudes are signed radians; a negative rf flip is a
//! 180-degree phase shift, a negative gradient lobe an inverted polarity.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{Design, FourierDesign1D, FourierDesign2D, Variable};

/// Largest accepted splitting threshold (30 degrees), with headroom for the
/// rounding of degree-to-radian conversions.
const BETA0_MAX: f64 = PI / 6.0 + 1e-12;

/// Rotation axis a design is realized about.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
}

/// Primitive control segment kinds. Rf pulses scale with the rf field (a
/// nominal flip theta acts as theta * epsilon); gradient lobes carry area
/// only and act as a z rotation by area * s.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentKind {
    RfX,
    RfY,
    Grad,
}

/// One hard pulse or gradient lobe; magnitude is the nominal flip angle or
/// the gradient area, in radians.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseSegment {
    pub kind: SegmentKind,
    pub magnitude: f64,
}

impl PulseSegment {
    pub fn new(kind: SegmentKind, magnitude: f64) -> PulseSegment {
        PulseSegment { kind, magnitude }
    }
}

/// How a program came to be, kept alongside it for reporting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    /// Compiled from a single design about one axis.
    Design { axis: Axis, design: Design },
    /// Concatenation of three compiled stages (an Euler-angle factorization).
    Euler { stages: Vec<EulerStage> },
    /// Assembled by hand or loaded from elsewhere.
    Manual,
}

/// One stage of an Euler-angle composition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EulerStage {
    pub axis: Axis,
    pub design: FourierDesign1D,
}

/// A chronologically ordered pulse sequence plus the splitting threshold it
/// was compiled with.
///
/// The JSON form is `{"beta0": float, "segments": [{"kind":
/// "rf_x"|"rf_y"|"grad", "magnitude": radians}], "provenance": ...}` with
/// array order equal to time order; it round-trips finite doubles
/// bit-exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProgramDoc", into = "ProgramDoc")]
pub struct PulseProgram {
    beta0: f64,
    segments: Vec<PulseSegment>,
    provenance: Provenance,
}

impl PulseProgram {
    pub fn new(
        beta0: f64,
        segments: Vec<PulseSegment>,
        provenance: Provenance,
    ) -> Result<PulseProgram> {
        if !(beta0.is_finite() && beta0 > 0.0) {
            return Err(Error::invalid(format!(
                "splitting threshold must be positive and finite, got {beta0}"
            )));
        }
        if let Some(bad) = segments.iter().find(|s| !s.magnitude.is_finite()) {
            return Err(Error::invalid(format!(
                "segment magnitudes must be finite, got {:?}",
                bad
            )));
        }
        Ok(PulseProgram {
            beta0,
            segments,
            provenance,
        })
    }

    pub fn beta0(&self) -> f64 {
        self.beta0
    }

    pub fn segments(&self) -> &[PulseSegment] {
        &self.segments
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("program serialization is infallible")
    }

    pub fn from_json(text: &str) -> Result<PulseProgram> {
        serde_json::from_str(text).map_err(|e| Error::invalid(format!("program document: {e}")))
    }
}

#[derive(Serialize, Deserialize)]
struct ProgramDoc {
    beta0: f64,
    segments: Vec<PulseSegment>,
    provenance: Provenance,
}

impl TryFrom<ProgramDoc> for PulseProgram {
    type Error = Error;

    fn try_from(doc: ProgramDoc) -> Result<PulseProgram> {
        PulseProgram::new(doc.beta0, doc.segments, doc.provenance)
    }
}

impl From<PulseProgram> for ProgramDoc {
    fn from(p: PulseProgram) -> ProgramDoc {
        ProgramDoc {
            beta0: p.beta0,
            segments: p.segments,
            provenance: p.provenance,
        }
    }
}

fn check_beta0(beta0: f64) -> Result<()> {
    if !(beta0 > 0.0 && beta0 <= BETA0_MAX) {
        return Err(Error::invalid(format!(
            "splitting threshold must lie in (0, pi/6], got {beta0}"
        )));
    }
    Ok(())
}

/// Repeat count and per-repeat coefficient for one term. The relative guard
/// keeps quotients that are integers up to roundoff (pi/2 over pi/6, say)
/// from ceiling one step too high, while still guaranteeing
/// |beta/n| <= beta0 well within 1e-12.
pub(crate) fn split(beta: f64, beta0: f64) -> (usize, f64) {
    let n = ((beta.abs() / beta0) * (1.0 - 1e-13)).ceil().max(1.0) as usize;
    (n, beta / n as f64)
}

fn push_nonzero(out: &mut Vec<PulseSegment>, kind: SegmentKind, magnitude: f64) {
    if magnitude != 0.0 {
        out.push(PulseSegment::new(kind, magnitude));
    }
}

/// Rf roles for a given rotation axis: the `flip` kind carries the series
/// coefficient, the `conj` kind carries the conjugating half-turns.
fn rf_roles(axis: Axis) -> (SegmentKind, SegmentKind) {
    match axis {
        Axis::Y => (SegmentKind::RfY, SegmentKind::RfX),
        Axis::X => (SegmentKind::RfX, SegmentKind::RfY),
    }
}

/// Compile a design over the rf scale into pure-rf elements.
///
/// Term (k, beta) splits into n = ceil(|beta|/beta0) repeats of the element
/// `[conj(-pi k), flip(beta_eff/2), conj(pi k), conj(pi k), flip(beta_eff/2),
/// conj(-pi k)]`, whose net propagator at rf scale eps is, to first order,
/// a rotation by eps * beta_eff * cos(pi k eps) about the design axis. The
/// k = 0 element collapses to the bare flip `flip(beta_eff)`. Terms are
/// emitted in increasing k; zero coefficients and zero segments are omitted.
pub fn compile_eps(d: &FourierDesign1D, axis: Axis, beta0: f64) -> Result<PulseProgram> {
    check_beta0(beta0)?;
    if d.variable() != Variable::Epsilon {
        return Err(Error::invalid(
            "rf-scale compilation needs an epsilon design",
        ));
    }
    let (flip, conj) = rf_roles(axis);
    let mut segments = Vec::new();
    for term in d.terms() {
        if term.beta == 0.0 {
            continue;
        }
        let (n, beta_eff) = split(term.beta, beta0);
        let pk = PI * term.k as f64;
        for _ in 0..n {
            if term.k == 0 {
                push_nonzero(&mut segments, flip, beta_eff);
            } else {
                push_nonzero(&mut segments, conj, -pk);
                push_nonzero(&mut segments, flip, beta_eff / 2.0);
                push_nonzero(&mut segments, conj, pk);
                push_nonzero(&mut segments, conj, pk);
                push_nonzero(&mut segments, flip, beta_eff / 2.0);
                push_nonzero(&mut segments, conj, -pk);
            }
        }
    }
    PulseProgram::new(
        beta0,
        segments,
        Provenance::Design {
            axis,
            design: Design::OneD(d.clone()),
        },
    )
}

/// Compile a design over position into gradient-wrapped elements.
///
/// Same splitting as `compile_eps`; the element wraps the half flips in
/// gradient lobes instead of rf half-turns: `[Grad(pi k), flip(beta_eff/2),
/// Grad(-pi k), Grad(-pi k), flip(beta_eff/2), Grad(pi k)]`, realizing a
/// rotation by beta_eff * cos(pi k s) about the design axis to first order.
pub fn compile_position(d: &FourierDesign1D, axis: Axis, beta0: f64) -> Result<PulseProgram> {
    check_beta0(beta0)?;
    if d.variable() != Variable::Position {
        return Err(Error::invalid(
            "position compilation needs a position design",
        ));
    }
    let (flip, _) = rf_roles(axis);
    let mut segments = Vec::new();
    for term in d.terms() {
        if term.beta == 0.0 {
            continue;
        }
        let (n, beta_eff) = split(term.beta, beta0);
        let pk = PI * term.k as f64;
        for _ in 0..n {
            if term.k == 0 {
                push_nonzero(&mut segments, flip, beta_eff);
            } else {
                push_nonzero(&mut segments, SegmentKind::Grad, pk);
                push_nonzero(&mut segments, flip, beta_eff / 2.0);
                push_nonzero(&mut segments, SegmentKind::Grad, -pk);
                push_nonzero(&mut segments, SegmentKind::Grad, -pk);
                push_nonzero(&mut segments, flip, beta_eff / 2.0);
                push_nonzero(&mut segments, SegmentKind::Grad, pk);
            }
        }
    }
    PulseProgram::new(
        beta0,
        segments,
        Provenance::Design {
            axis,
            design: Design::OneD(d.clone()),
        },
    )
}

/// Compile a joint (s, epsilon) design.
///
/// Term (k1, k2, beta) nests the position element (with quarter flips)
/// inside rf half-turn conjugation, giving a 16-segment element whose net
/// rotation is eps * beta_eff * cos(pi k1 s) * cos(pi k2 eps) about the
/// design axis to first order. Zero-magnitude segments drop out, so k1 = 0
/// and k2 = 0 terms shrink to the obvious reduced forms.
pub fn compile_joint(d: &FourierDesign2D, axis: Axis, beta0: f64) -> Result<PulseProgram> {
    check_beta0(beta0)?;
    let (flip, conj) = rf_roles(axis);
    let mut segments = Vec::new();
    for term in d.terms() {
        if term.beta == 0.0 {
            continue;
        }
        let (n, beta_eff) = split(term.beta, beta0);
        let pk1 = PI * term.k1 as f64;
        let pk2 = PI * term.k2 as f64;
        for _ in 0..n {
            let inner = |segments: &mut Vec<PulseSegment>| {
                push_nonzero(segments, SegmentKind::Grad, pk1);
                push_nonzero(segments, flip, beta_eff / 4.0);
                push_nonzero(segments, SegmentKind::Grad, -pk1);
                push_nonzero(segments, SegmentKind::Grad, -pk1);
                push_nonzero(segments, flip, beta_eff / 4.0);
                push_nonzero(segments, SegmentKind::Grad, pk1);
            };
            push_nonzero(&mut segments, conj, -pk2);
            inner(&mut segments);
            push_nonzero(&mut segments, conj, pk2);
            push_nonzero(&mut segments, conj, pk2);
            inner(&mut segments);
            push_nonzero(&mut segments, conj, -pk2);
        }
    }
    PulseProgram::new(
        beta0,
        segments,
        Provenance::Design {
            axis,
            design: Design::TwoD(d.clone()),
        },
    )
}

/// Compile three same-variable designs about the given axes and concatenate
/// them chronologically, so the first-listed rotation acts first and the net
/// propagator is R3 * R2 * R1.
pub fn compile_euler(
    r1: &FourierDesign1D,
    r2: &FourierDesign1D,
    r3: &FourierDesign1D,
    axes: (Axis, Axis, Axis),
    beta0: f64,
) -> Result<PulseProgram> {
    let variable = r1.variable();
    if r2.variable() != variable || r3.variable() != variable {
        return Err(Error::invalid(
            "all three stages must share one dispersion variable",
        ));
    }
    let compile_stage = |d: &FourierDesign1D, axis: Axis| match variable {
        Variable::Epsilon => compile_eps(d, axis, beta0),
        Variable::Position => compile_position(d, axis, beta0),
    };
    let stage_list = [(axes.0, r1), (axes.1, r2), (axes.2, r3)];
    let mut segments = Vec::new();
    let mut stages = Vec::with_capacity(3);
    for (axis, design) in stage_list {
        let p = compile_stage(design, axis)?;
        segments.extend_from_slice(p.segments());
        stages.push(EulerStage {
            axis,
            design: design.clone(),
        });
    }
    PulseProgram::new(beta0, segments, Provenance::Euler { stages })
}

/// Dispatch on the design's dimensionality and variable.
pub fn compile_design(design: &Design, axis: Axis, beta0: f64) -> Result<PulseProgram> {
    match design {
        Design::OneD(d) => match d.variable() {
            Variable::Epsilon => compile_eps(d, axis, beta0),
            Variable::Position => compile_position(d, axis, beta0),
        },
        Design::TwoD(d) => compile_joint(d, axis, beta0),
    }
}

/// Merge adjacent segments of identical kind (their propagators commute, so
/// this is exact), dropping any that sum to zero; cancellations cascade.
/// Idempotent, and the net propagator is unchanged at every (s, epsilon).
pub fn peephole_cancel(p: &PulseProgram) -> PulseProgram {
    let mut out: Vec<PulseSegment> = Vec::with_capacity(p.segments.len());
    for seg in &p.segments {
        if seg.magnitude == 0.0 {
            continue;
        }
        if let Some(last) = out.last_mut() {
            if last.kind == seg.kind {
                last.magnitude += seg.magnitude;
                if last.magnitude == 0.0 {
                    out.pop();
                }
                continue;
            }
        }
        out.push(*seg);
    }
    PulseProgram {
        beta0: p.beta0,
        segments: out,
        provenance: p.provenance.clone(),
    }
}

/// Wall-clock duration at the given peak rates: rf flips play at
/// `max_rf_amplitude` rad/time, gradient areas accrue at
/// `max_grad_area_rate` rad/time.
pub fn program_duration(
    p: &PulseProgram,
    max_rf_amplitude: f64,
    max_grad_area_rate: f64,
) -> Result<f64> {
    if !(max_rf_amplitude > 0.0 && max_grad_area_rate > 0.0) {
        return Err(Error::invalid("peak rates must be positive"));
    }
    Ok(p.segments
        .iter()
        .map(|s| {
            s.magnitude.abs()
                / match s.kind {
                    SegmentKind::Grad => max_grad_area_rate,
                    _ => max_rf_amplitude,
                }
        })
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::{Term1, Term2};
    use std::f64::consts::FRAC_PI_2;

    fn eps_design(terms: Vec<Term1>) -> FourierDesign1D {
        FourierDesign1D::new(Variable::Epsilon, terms).unwrap()
    }

    fn pos_design(terms: Vec<Term1>) -> FourierDesign1D {
        FourierDesign1D::new(Variable::Position, terms).unwrap()
    }

    fn kinds(p: &PulseProgram) -> Vec<SegmentKind> {
        p.segments().iter().map(|s| s.kind).collect()
    }

    fn magnitudes(p: &PulseProgram) -> Vec<f64> {
        p.segments().iter().map(|s| s.magnitude).collect()
    }

    #[test]
    fn constant_term_splits_into_bare_flips() {
        let d = eps_design(vec![Term1 {
            k: 0,
            beta: FRAC_PI_2,
        }]);
        let p = compile_eps(&d, Axis::Y, PI / 6.0).unwrap();
        assert_eq!(p.segments().len(), 3);
        for s in p.segments() {
            assert_eq!(s.kind, SegmentKind::RfY);
            assert!((s.magnitude - PI / 6.0).abs() < 1e-15);
        }
    }

    #[test]
    fn harmonic_element_has_conjugated_structure() {
        let d = eps_design(vec![Term1 { k: 1, beta: 0.1 }]);
        let p = compile_eps(&d, Axis::Y, PI / 6.0).unwrap();
        use SegmentKind::*;
        assert_eq!(kinds(&p), vec![RfX, RfY, RfX, RfX, RfY, RfX]);
        assert_eq!(magnitudes(&p), vec![-PI, 0.05, PI, PI, 0.05, -PI]);
        // The x-axis variant swaps the rf roles.
        let p = compile_eps(&d, Axis::X, PI / 6.0).unwrap();
        assert_eq!(kinds(&p), vec![RfY, RfX, RfY, RfY, RfX, RfY]);
        assert_eq!(magnitudes(&p), vec![-PI, 0.05, PI, PI, 0.05, -PI]);
    }

    #[test]
    fn splitting_respects_threshold_and_count() {
        // pi/2 over a 30-degree threshold is exactly three repeats, even
        // though the float quotient lands a hair above 3.
        let (n, eff) = split(FRAC_PI_2, 30f64.to_radians());
        assert_eq!(n, 3);
        assert!((eff - FRAC_PI_2 / 3.0).abs() < 1e-15);
        let (n, eff) = split(-PI, PI / 6.0);
        assert_eq!(n, 6);
        assert!((eff + PI / 6.0).abs() < 1e-15);
        let (n, _) = split(0.1, PI / 6.0);
        assert_eq!(n, 1);
        // Every split coefficient obeys the threshold.
        for beta in [0.01, 0.5, 1.0, FRAC_PI_2, PI, 4.9, -3.3] {
            for beta0 in [PI / 6.0, 0.1, 0.02] {
                let (_, eff) = split(beta, beta0);
                assert!(eff.abs() <= beta0 + 1e-12, "beta {beta} beta0 {beta0}");
            }
        }
    }

    #[test]
    fn series_flips_stay_below_half_threshold() {
        let beta0 = 30f64.to_radians();
        // Bare k = 0 flips carry beta_eff, bounded by the threshold itself.
        let d = eps_design(vec![Term1 { k: 0, beta: 2.2 }]);
        let p = compile_eps(&d, Axis::Y, beta0).unwrap();
        assert!(!p.segments().is_empty());
        for s in p.segments() {
            assert!(s.magnitude.abs() <= beta0 + 1e-12);
        }
        // Conjugated elements carry beta_eff/2 on the flip axis.
        let d = eps_design(vec![Term1 { k: 1, beta: -1.7 }, Term1 { k: 4, beta: 0.9 }]);
        let p = compile_eps(&d, Axis::Y, beta0).unwrap();
        for s in p.segments().iter().filter(|s| s.kind == SegmentKind::RfY) {
            assert!(s.magnitude.abs() <= beta0 / 2.0 + 1e-12);
        }
    }

    #[test]
    fn terms_emit_in_increasing_k_and_zeros_are_skipped() {
        let d = eps_design(vec![
            Term1 { k: 0, beta: 0.2 },
            Term1 { k: 1, beta: 0.0 },
            Term1 { k: 2, beta: 0.3 },
        ]);
        let p = compile_eps(&d, Axis::Y, PI / 6.0).unwrap();
        // k = 0 gives one bare flip, k = 1 vanishes, k = 2 gives one element.
        assert_eq!(p.segments().len(), 7);
        assert_eq!(p.segments()[0].kind, SegmentKind::RfY);
        assert_eq!(p.segments()[1].magnitude, -2.0 * PI);
    }

    #[test]
    fn empty_design_compiles_to_empty_program() {
        let d = eps_design(vec![]);
        let p = compile_eps(&d, Axis::Y, PI / 6.0).unwrap();
        assert!(p.segments().is_empty());
        assert!((program_duration(&p, 1.0, 1.0).unwrap()).abs() == 0.0);
    }

    #[test]
    fn position_element_wraps_flips_in_gradient_lobes() {
        let d = pos_design(vec![Term1 { k: 2, beta: 0.1 }]);
        let p = compile_position(&d, Axis::Y, PI / 6.0).unwrap();
        use SegmentKind::*;
        assert_eq!(kinds(&p), vec![Grad, RfY, Grad, Grad, RfY, Grad]);
        let two_pi = 2.0 * PI;
        assert_eq!(
            magnitudes(&p),
            vec![two_pi, 0.05, -two_pi, -two_pi, 0.05, two_pi]
        );
        // Axis only changes the rf kind, not the gradient lobes.
        let p = compile_position(&d, Axis::X, PI / 6.0).unwrap();
        assert_eq!(kinds(&p), vec![Grad, RfX, Grad, Grad, RfX, Grad]);
    }

    #[test]
    fn position_constant_term_matches_rf_constant_term() {
        let d = pos_design(vec![Term1 {
            k: 0,
            beta: FRAC_PI_2,
        }]);
        let p = compile_position(&d, Axis::Y, PI / 6.0).unwrap();
        assert_eq!(p.segments().len(), 3);
        for s in p.segments() {
            assert_eq!(s.kind, SegmentKind::RfY);
            assert!((s.magnitude - PI / 6.0).abs() < 1e-15);
        }
    }

    #[test]
    fn joint_element_nests_position_inside_rf_conjugation() {
        let d = FourierDesign2D::new(vec![Term2 {
            k1: 1,
            k2: 1,
            beta: 0.1,
        }])
        .unwrap();
        let p = compile_joint(&d, Axis::Y, PI / 6.0).unwrap();
        use SegmentKind::*;
        assert_eq!(
            kinds(&p),
            vec![
                RfX, Grad, RfY, Grad, Grad, RfY, Grad, RfX, RfX, Grad, RfY, Grad, Grad, RfY, Grad,
                RfX
            ]
        );
        assert_eq!(
            magnitudes(&p),
            vec![-PI, PI, 0.025, -PI, -PI, 0.025, PI, PI, PI, PI, 0.025, -PI, -PI, 0.025, PI, -PI]
        );
    }

    #[test]
    fn joint_reduced_forms_drop_zero_conjugations() {
        // (0, 0): four bare quarter flips per repeat.
        let d = FourierDesign2D::new(vec![Term2 {
            k1: 0,
            k2: 0,
            beta: 0.2,
        }])
        .unwrap();
        let p = compile_joint(&d, Axis::Y, PI / 6.0).unwrap();
        assert_eq!(kinds(&p), vec![SegmentKind::RfY; 4]);
        assert_eq!(magnitudes(&p), vec![0.05; 4]);
        // (1, 0): two position elements with quarter flips, no rf half-turns.
        let d = FourierDesign2D::new(vec![Term2 {
            k1: 1,
            k2: 0,
            beta: 0.2,
        }])
        .unwrap();
        let p = compile_joint(&d, Axis::Y, PI / 6.0).unwrap();
        use SegmentKind::*;
        assert_eq!(
            kinds(&p),
            vec![Grad, RfY, Grad, Grad, RfY, Grad, Grad, RfY, Grad, Grad, RfY, Grad]
        );
    }

    #[test]
    fn euler_concatenates_first_listed_first() {
        let a = eps_design(vec![Term1 { k: 0, beta: 0.3 }]);
        let b = eps_design(vec![Term1 { k: 0, beta: 0.2 }]);
        let c = eps_design(vec![Term1 { k: 0, beta: 0.1 }]);
        let p = compile_euler(&a, &b, &c, (Axis::Y, Axis::X, Axis::Y), PI / 6.0).unwrap();
        use SegmentKind::*;
        assert_eq!(kinds(&p), vec![RfY, RfX, RfY]);
        assert_eq!(magnitudes(&p), vec![0.3, 0.2, 0.1]);
        match p.provenance() {
            Provenance::Euler { stages } => {
                assert_eq!(stages.len(), 3);
                assert_eq!(stages[0].axis, Axis::Y);
                assert_eq!(stages[1].axis, Axis::X);
            }
            other => panic!("unexpected provenance {other:?}"),
        }
    }

    #[test]
    fn euler_zero_flanks_reduce_to_middle_stage() {
        let zero = eps_design(vec![]);
        let d = eps_design(vec![Term1 { k: 1, beta: 0.1 }]);
        let p = compile_euler(&zero, &d, &zero, (Axis::Y, Axis::X, Axis::Y), PI / 6.0).unwrap();
        let alone = compile_eps(&d, Axis::X, PI / 6.0).unwrap();
        assert_eq!(p.segments(), alone.segments());
        let empty =
            compile_euler(&zero, &zero, &zero, (Axis::Y, Axis::X, Axis::Y), PI / 6.0).unwrap();
        assert!(empty.segments().is_empty());
    }

    #[test]
    fn euler_rejects_mixed_variables() {
        let e = eps_design(vec![Term1 { k: 0, beta: 0.1 }]);
        let s = pos_design(vec![Term1 { k: 0, beta: 0.1 }]);
        assert!(compile_euler(&e, &s, &e, (Axis::Y, Axis::X, Axis::Y), PI / 6.0).is_err());
    }

    #[test]
    fn compile_rejects_bad_threshold_or_variable() {
        let d = eps_design(vec![Term1 { k: 0, beta: 0.1 }]);
        assert!(compile_eps(&d, Axis::Y, 0.0).is_err());
        assert!(compile_eps(&d, Axis::Y, PI / 6.0 + 0.01).is_err());
        assert!(compile_eps(&d, Axis::Y, -0.1).is_err());
        assert!(compile_eps(&d, Axis::Y, 30f64.to_radians()).is_ok());
        let s = pos_design(vec![Term1 { k: 0, beta: 0.1 }]);
        assert!(compile_eps(&s, Axis::Y, PI / 6.0).is_err());
        assert!(compile_position(&d, Axis::Y, PI / 6.0).is_err());
    }

    #[test]
    fn peephole_merges_drops_and_cascades() {
        let prog = |segs: Vec<(SegmentKind, f64)>| {
            PulseProgram::new(
                PI / 6.0,
                segs.into_iter()
                    .map(|(k, m)| PulseSegment::new(k, m))
                    .collect(),
                Provenance::Manual,
            )
            .unwrap()
        };
        use SegmentKind::*;
        let p = peephole_cancel(&prog(vec![(RfX, PI), (RfX, PI)]));
        assert_eq!(magnitudes(&p), vec![2.0 * PI]);
        let p = peephole_cancel(&prog(vec![(Grad, PI), (Grad, -PI)]));
        assert!(p.segments().is_empty());
        // Cancellation exposes a new adjacent pair, which also cancels.
        let p = peephole_cancel(&prog(vec![
            (RfX, 1.0),
            (Grad, 2.0),
            (Grad, -2.0),
            (RfX, -1.0),
        ]));
        assert!(p.segments().is_empty());
        // Idempotence on a compiled program.
        let d = eps_design(vec![Term1 { k: 1, beta: 0.4 }, Term1 { k: 2, beta: 0.3 }]);
        let once = peephole_cancel(&compile_eps(&d, Axis::Y, PI / 6.0).unwrap());
        let twice = peephole_cancel(&once);
        assert_eq!(once.segments(), twice.segments());
    }

    #[test]
    fn duration_sums_magnitudes_over_rates() {
        let p = PulseProgram::new(
            PI / 6.0,
            vec![
                PulseSegment::new(SegmentKind::RfY, FRAC_PI_2),
                PulseSegment::new(SegmentKind::Grad, -PI),
            ],
            Provenance::Manual,
        )
        .unwrap();
        assert!((program_duration(&p, 1.0, 1.0).unwrap() - (FRAC_PI_2 + PI)).abs() < 1e-15);
        assert!(
            (program_duration(&p, 2.0, 0.5).unwrap() - (FRAC_PI_2 / 2.0 + 2.0 * PI)).abs() < 1e-15
        );
        assert!(program_duration(&p, 0.0, 1.0).is_err());
        assert!(program_duration(&p, 1.0, -1.0).is_err());
    }

    #[test]
    fn program_json_round_trips_bit_exactly() {
        let d = eps_design(vec![Term1 { k: 0, beta: 0.7 }, Term1 { k: 3, beta: -0.2 }]);
        let p = compile_eps(&d, Axis::X, 0.25).unwrap();
        let json = p.to_json();
        let back = PulseProgram::from_json(&json).unwrap();
        assert_eq!(p, back);
        assert_eq!(json, back.to_json());
        assert!(json.contains("\"kind\": \"rf_y\""));
        assert!(json.contains("\"beta0\": 0.25"));
        assert!(PulseProgram::from_json("{}").is_err());
        assert!(PulseProgram::from_json(
            r#"{"beta0": 0.5, "segments": [{"kind": "rf_q", "magnitude": 1.0}], "provenance": {"kind": "manual"}}"#
        )
        .is_err());
    }
}
