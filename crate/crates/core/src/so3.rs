//! Exact rotation-group kernels.
//!
//! Everything in this module is closed form on 3x3 matrices: the rotation
//! generators, the Rodrigues exponential, the conjugation identity used by the
//! pulse constructions, the spectral-norm error functional, and the axis-angle
//! and Euler log maps used to read rotations back out. No series summation,
//! no iterative solvers. All values are immutable and every function is pure.

use crate::error::{Error, Result};

/// Row-major 3x3 real matrix.
pub type Mat3 = [[f64; 3]; 3];

/// Generators of rotation about the lab axes.
///
/// `matrix()` returns the exact antisymmetric generator; the sign convention
/// is fixed so that `exp(th * matrix(Y))` carries e_z toward e_x for small
/// positive `th`, and `[X, Y] = Z` cyclically.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Generator {
    X,
    Y,
    Z,
}

impl Generator {
    pub const fn matrix(self) -> Mat3 {
        match self {
            Generator::X => [[0.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]],
            Generator::Y => [[0.0, 0.0, 1.0], [0.0, 0.0, 0.0], [-1.0, 0.0, 0.0]],
            Generator::Z => [[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]],
        }
    }
}

/// A 3x3 special-orthogonal matrix acting on spin states.
///
/// Instances come out of [`rot_exp`] and products thereof, which keep
/// `R^T R = I` and `det R = 1` to within 1e-12.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rotation {
    m: Mat3,
}

impl Rotation {
    pub const IDENTITY: Rotation = Rotation {
        m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
    };

    pub fn matrix(&self) -> &Mat3 {
        &self.m
    }

    pub(crate) fn from_mat(m: Mat3) -> Rotation {
        Rotation { m }
    }
}

/// Matrix product: `a * b` applies `b` first, then `a`.
impl std::ops::Mul for Rotation {
    type Output = Rotation;

    fn mul(self, rhs: Rotation) -> Rotation {
        Rotation {
            m: mat_mul(&self.m, &rhs.m),
        }
    }
}

pub(crate) fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
        }
    }
    out
}

/// Magnetization vector on the unit sphere.
///
/// The dynamics preserve the norm, so states are unit vectors to within
/// 1e-12; [`SpinState::new`] enforces this for caller-supplied data.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpinState(pub [f64; 3]);

impl SpinState {
    pub const E_X: SpinState = SpinState([1.0, 0.0, 0.0]);
    pub const E_Y: SpinState = SpinState([0.0, 1.0, 0.0]);
    pub const E_Z: SpinState = SpinState([0.0, 0.0, 1.0]);

    pub fn new(m: [f64; 3]) -> Result<SpinState> {
        if !m.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("spin state has non-finite components"));
        }
        let n = (m[0] * m[0] + m[1] * m[1] + m[2] * m[2]).sqrt();
        if (n - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!(
                "spin state must be a unit vector, got norm {n:.17}"
            )));
        }
        Ok(SpinState(m))
    }

    pub fn norm(&self) -> f64 {
        let m = &self.0;
        (m[0] * m[0] + m[1] * m[1] + m[2] * m[2]).sqrt()
    }
}

/// Unit axis plus rotation angle in [0, pi]; the log-map image of a rotation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AxisAngle {
    pub axis: [f64; 3],
    pub angle: f64,
}

/// Closed-form exponential `exp(ax*X + ay*Y + az*Z)` of the generators.
///
/// Uses the Rodrigues axis-angle formula with series guards near zero angle,
/// so `rot_exp(0, 0, 0)` is exactly the identity.
pub fn rot_exp(ax: f64, ay: f64, az: f64) -> Result<Rotation> {
    if !(ax.is_finite() && ay.is_finite() && az.is_finite()) {
        return Err(Error::invalid(format!(
            "rotation coefficients must be finite, got ({ax}, {ay}, {az})"
        )));
    }
    Ok(Rotation {
        m: rodrigues(ax, ay, az),
    })
}

/// Rodrigues formula: R = I + sinc(t) W + (1-cos t)/t^2 W^2 with W the
/// antisymmetric matrix of (ax, ay, az) and t its norm. W^2 is expanded as
/// w w^T - t^2 I so only the angle coefficients appear.
pub(crate) fn rodrigues(ax: f64, ay: f64, az: f64) -> Mat3 {
    let t2 = ax * ax + ay * ay + az * az;
    let t = t2.sqrt();
    let (a, b) = if t < 1e-4 {
        // Taylor; both coefficients exact to < 1e-20 absolute in this range.
        (
            1.0 - t2 / 6.0 * (1.0 - t2 / 20.0),
            0.5 * (1.0 - t2 / 12.0 * (1.0 - t2 / 30.0)),
        )
    } else {
        (t.sin() / t, (1.0 - t.cos()) / t2)
    };
    [
        [
            1.0 + b * (ax * ax - t2),
            -a * az + b * ax * ay,
            a * ay + b * ax * az,
        ],
        [
            a * az + b * ax * ay,
            1.0 + b * (ay * ay - t2),
            -a * ax + b * ay * az,
        ],
        [
            -a * ay + b * ax * az,
            a * ax + b * ay * az,
            1.0 + b * (az * az - t2),
        ],
    ]
}

/// The conjugation identity behind every pulse construction in this crate:
///
/// `exp(alpha X) exp(beta Y) exp(-alpha X) = exp(beta (cos(alpha) Y + sin(alpha) Z))`
///
/// Returns the common value of both sides, computed as the explicit triple
/// product; debug builds assert agreement with the closed form to 1e-12.
pub fn conjugated_rotation(alpha: f64, beta: f64) -> Result<Rotation> {
    if !(alpha.is_finite() && beta.is_finite()) {
        return Err(Error::invalid(format!(
            "conjugation angles must be finite, got ({alpha}, {beta})"
        )));
    }
    let left = mat_mul(
        &mat_mul(&rodrigues(alpha, 0.0, 0.0), &rodrigues(0.0, beta, 0.0)),
        &rodrigues(-alpha, 0.0, 0.0),
    );
    #[cfg(debug_assertions)]
    {
        let right = rodrigues(0.0, beta * alpha.cos(), beta * alpha.sin());
        for i in 0..3 {
            for j in 0..3 {
                debug_assert!(
                    (left[i][j] - right[i][j]).abs() <= 1e-12,
                    "conjugation identity violated at ({i},{j}): {} vs {}",
                    left[i][j],
                    right[i][j]
                );
            }
        }
    }
    Ok(Rotation { m: left })
}

/// Rotate a spin state: returns `r * m`. Preserves the norm to 1e-12.
pub fn apply(r: &Rotation, m: &SpinState) -> SpinState {
    let v = &m.0;
    let a = &r.m;
    SpinState([
        a[0][0] * v[0] + a[0][1] * v[1] + a[0][2] * v[2],
        a[1][0] * v[0] + a[1][1] * v[1] + a[1][2] * v[2],
        a[2][0] * v[0] + a[2][1] * v[1] + a[2][2] * v[2],
    ])
}

/// Worst-case state discrepancy between two rotations:
/// `E(Z, V) = max_{|x|=1} |(Z - V) x|`, i.e. the largest singular value of
/// `Z - V`. Always in [0, 2].
///
/// For rotations, `Z - V = Z (I - ZᵀV)` and the nonzero singular values of
/// `I - W` are the degenerate pair `2 sin(theta/2)` with theta the angle of
/// the relative rotation `W = ZᵀV`. The angle comes out of atan2 at full
/// precision; a closed-form symmetric eigensolver on `DᵀD` would lose half
/// its digits exactly at such double roots.
pub fn operator_error(z: &Rotation, v: &Rotation) -> f64 {
    let mut w = [[0.0; 3]; 3];
    for (i, row) in w.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = z.m[0][i] * v.m[0][j] + z.m[1][i] * v.m[1][j] + z.m[2][i] * v.m[2][j];
        }
    }
    let sx = (w[2][1] - w[1][2]) / 2.0;
    let sy = (w[0][2] - w[2][0]) / 2.0;
    let sz = (w[1][0] - w[0][1]) / 2.0;
    let sin = (sx * sx + sy * sy + sz * sz).sqrt();
    let cos = (w[0][0] + w[1][1] + w[2][2] - 1.0) / 2.0;
    let theta = sin.atan2(cos);
    2.0 * (theta / 2.0).sin()
}

/// Log map: extract the unit axis and the angle in [0, pi].
///
/// Conventions: the identity reports axis (1, 0, 0); within rounding noise of
/// a half turn, where the axis sign is genuinely ambiguous, the sign is fixed
/// by making the largest-magnitude component positive. Everywhere else the
/// sign follows the antisymmetric part, so `rot_exp` of `angle * axis`
/// reproduces the input to 1e-10.
pub fn axis_angle_of(r: &Rotation) -> AxisAngle {
    let m = &r.m;
    let w = [
        (m[2][1] - m[1][2]) * 0.5,
        (m[0][2] - m[2][0]) * 0.5,
        (m[1][0] - m[0][1]) * 0.5,
    ];
    let sin = (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt();
    let cos = (m[0][0] + m[1][1] + m[2][2] - 1.0) * 0.5;
    let angle = sin.atan2(cos);

    if sin == 0.0 && cos >= 0.0 {
        return AxisAngle {
            axis: [1.0, 0.0, 0.0],
            angle,
        };
    }
    if cos < 0.0 && sin < 1e-4 {
        // Near a half turn the antisymmetric part cancels; recover the axis
        // from the symmetric part instead: (R + R^T)/2 - cos*I = (1-cos) kk^T.
        let f = 1.0 - cos;
        let diag = [
            (m[0][0] - cos) / f,
            (m[1][1] - cos) / f,
            (m[2][2] - cos) / f,
        ];
        let j = if diag[0] >= diag[1] && diag[0] >= diag[2] {
            0
        } else if diag[1] >= diag[2] {
            1
        } else {
            2
        };
        let kj = diag[j].max(0.0).sqrt();
        let mut k = [0.0; 3];
        for (i, ki) in k.iter_mut().enumerate() {
            *ki = if i == j {
                kj
            } else {
                (m[i][j] + m[j][i]) * 0.5 / (f * kj)
            };
        }
        let sign = if sin >= 1e-9 {
            // The antisymmetric part still carries a trustworthy sign.
            if w[0] * k[0] + w[1] * k[1] + w[2] * k[2] < 0.0 {
                -1.0
            } else {
                1.0
            }
        } else {
            // Ambiguous half turn: largest-magnitude component positive.
            let l = if k[0].abs() >= k[1].abs() && k[0].abs() >= k[2].abs() {
                0
            } else if k[1].abs() >= k[2].abs() {
                1
            } else {
                2
            };
            if k[l] < 0.0 {
                -1.0
            } else {
                1.0
            }
        };
        return AxisAngle {
            axis: [sign * k[0], sign * k[1], sign * k[2]],
            angle,
        };
    }
    AxisAngle {
        axis: [w[0] / sin, w[1] / sin, w[2] / sin],
        angle,
    }
}

/// Euler decomposition in the y-x-y convention:
/// `r = exp(a Y) exp(b X) exp(c Y)` with `b` in [0, pi].
///
/// At the gimbal degeneracies (`b` within 1e-9 of 0 or pi) only the
/// combination of `a` and `c` is determined; the free angle is absorbed into
/// `a` and `c` is reported as 0.
pub fn euler_yxy(r: &Rotation) -> (f64, f64, f64) {
    let m = &r.m;
    let sb = (m[0][1] * m[0][1] + m[2][1] * m[2][1]).sqrt();
    let b = sb.atan2(m[1][1]);
    if b < 1e-9 {
        (m[0][2].atan2(m[0][0]), b, 0.0)
    } else if b > std::f64::consts::PI - 1e-9 {
        ((-m[0][2]).atan2(m[0][0]), b, 0.0)
    } else {
        (m[0][1].atan2(m[2][1]), b, m[1][0].atan2(-m[1][2]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, PI};

    const TOL_EXACT: f64 = 1e-12;
    const TOL_ROUNDTRIP: f64 = 1e-10;

    fn max_abs_diff(a: &Mat3, b: &Mat3) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                worst = worst.max((a[i][j] - b[i][j]).abs());
            }
        }
        worst
    }

    fn orthogonality_defect(r: &Rotation) -> f64 {
        let m = r.matrix();
        let mut rt = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                rt[i][j] = m[j][i];
            }
        }
        let p = mat_mul(&rt, m);
        let eye = Rotation::IDENTITY;
        max_abs_diff(&p, eye.matrix())
    }

    fn det(m: &Mat3) -> f64 {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    #[test]
    fn generators_are_antisymmetric_and_close() {
        for g in [Generator::X, Generator::Y, Generator::Z] {
            let m = g.matrix();
            for (i, row) in m.iter().enumerate() {
                for (j, &cell) in row.iter().enumerate() {
                    assert_eq!(cell, -m[j][i]);
                }
            }
        }
        // [X, Y] = Z entrywise with these conventions.
        let (x, y, z) = (
            Generator::X.matrix(),
            Generator::Y.matrix(),
            Generator::Z.matrix(),
        );
        let xy = mat_mul(&x, &y);
        let yx = mat_mul(&y, &x);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(xy[i][j] - yx[i][j], z[i][j]);
            }
        }
    }

    #[test]
    fn rot_exp_of_zero_is_exactly_identity() {
        let r = rot_exp(0.0, 0.0, 0.0).unwrap();
        assert_eq!(r.matrix(), Rotation::IDENTITY.matrix());
    }

    #[test]
    fn rot_exp_matches_hand_cases() {
        // Half turn about x flips e_y.
        let r = rot_exp(PI, 0.0, 0.0).unwrap();
        let m = apply(&r, &SpinState::E_Y);
        assert!((m.0[0]).abs() < TOL_EXACT);
        assert!((m.0[1] + 1.0).abs() < TOL_EXACT);
        assert!((m.0[2]).abs() < TOL_EXACT);
        // Quarter turn about y carries e_z to e_x (sign convention).
        let r = rot_exp(0.0, FRAC_PI_2, 0.0).unwrap();
        let m = apply(&r, &SpinState::E_Z);
        assert!((m.0[0] - 1.0).abs() < TOL_EXACT);
        assert!((m.0[1]).abs() < TOL_EXACT);
        assert!((m.0[2]).abs() < TOL_EXACT);
    }

    #[test]
    fn rot_exp_rejects_non_finite() {
        assert!(rot_exp(f64::NAN, 0.0, 0.0).is_err());
        assert!(rot_exp(0.0, f64::INFINITY, 0.0).is_err());
    }

    #[test]
    fn rot_exp_outputs_are_orthogonal_with_unit_det() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5031);
        for _ in 0..200 {
            let r = rot_exp(
                rng.gen_range(-10.0..10.0),
                rng.gen_range(-10.0..10.0),
                rng.gen_range(-10.0..10.0),
            )
            .unwrap();
            assert!(orthogonality_defect(&r) < TOL_EXACT);
            assert!((det(r.matrix()) - 1.0).abs() < TOL_EXACT);
        }
    }

    #[test]
    fn conjugation_closed_form_cases() {
        // alpha = pi/2 rotates the y generator fully onto z.
        let r = conjugated_rotation(FRAC_PI_2, 0.3).unwrap();
        let expected = rot_exp(0.0, 0.0, 0.3).unwrap();
        assert!(max_abs_diff(r.matrix(), expected.matrix()) < TOL_EXACT);
        // alpha = 0 conjugates by the identity.
        let r = conjugated_rotation(0.0, 0.3).unwrap();
        let expected = rot_exp(0.0, 0.3, 0.0).unwrap();
        assert!(max_abs_diff(r.matrix(), expected.matrix()) < TOL_EXACT);
        // Oblique case against the closed form.
        let r = conjugated_rotation(FRAC_PI_3, 0.1).unwrap();
        let expected = rot_exp(0.0, 0.1 * FRAC_PI_3.cos(), 0.1 * FRAC_PI_3.sin()).unwrap();
        assert!(max_abs_diff(r.matrix(), expected.matrix()) < TOL_EXACT);
    }

    #[test]
    fn conjugation_identity_on_random_angles() {
        let mut rng = ChaCha8Rng::seed_from_u64(0xC0);
        for _ in 0..100 {
            let alpha = rng.gen_range(-2.0 * PI..2.0 * PI);
            let beta = rng.gen_range(-PI..PI);
            let left = conjugated_rotation(alpha, beta).unwrap();
            let right = rot_exp(0.0, beta * alpha.cos(), beta * alpha.sin()).unwrap();
            assert!(max_abs_diff(left.matrix(), right.matrix()) < TOL_EXACT);
        }
    }

    #[test]
    fn apply_preserves_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let r = rot_exp(
                rng.gen_range(-5.0..5.0),
                rng.gen_range(-5.0..5.0),
                rng.gen_range(-5.0..5.0),
            )
            .unwrap();
            let v: [f64; 3] = [
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            ];
            let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            if n < 1e-3 {
                continue;
            }
            let m = SpinState::new([v[0] / n, v[1] / n, v[2] / n]).unwrap();
            assert!((apply(&r, &m).norm() - 1.0).abs() < TOL_EXACT);
        }
    }

    #[test]
    fn spin_state_rejects_non_unit_vectors() {
        assert!(SpinState::new([0.0, 0.0, 0.5]).is_err());
        assert!(SpinState::new([0.0, f64::NAN, 1.0]).is_err());
        assert!(SpinState::new([0.0, 0.0, 1.0]).is_ok());
    }

    #[test]
    fn operator_error_known_values() {
        let id = Rotation::IDENTITY;
        assert_eq!(operator_error(&id, &id), 0.0);
        // Half turn about z: I - diag(-1,-1,1) has largest singular value 2.
        let half = rot_exp(0.0, 0.0, PI).unwrap();
        assert!((operator_error(&id, &half) - 2.0).abs() < TOL_EXACT);
        // Small rotation: E(I, exp(th Z)) = 2 |sin(th/2)|.
        let th = 0.2_f64;
        let r = rot_exp(0.0, 0.0, th).unwrap();
        assert!((operator_error(&id, &r) - 2.0 * (th / 2.0).sin()).abs() < TOL_EXACT);
    }

    #[test]
    fn operator_error_matches_dense_svd() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x51D);
        for _ in 0..100 {
            let z = rot_exp(
                rng.gen_range(-4.0..4.0),
                rng.gen_range(-4.0..4.0),
                rng.gen_range(-4.0..4.0),
            )
            .unwrap();
            let v = rot_exp(
                rng.gen_range(-4.0..4.0),
                rng.gen_range(-4.0..4.0),
                rng.gen_range(-4.0..4.0),
            )
            .unwrap();
            let mut d = nalgebra::Matrix3::<f64>::zeros();
            for i in 0..3 {
                for j in 0..3 {
                    d[(i, j)] = z.matrix()[i][j] - v.matrix()[i][j];
                }
            }
            let reference = d.svd(false, false).singular_values[0];
            assert!((operator_error(&z, &v) - reference).abs() < TOL_EXACT);
        }
    }

    #[test]
    fn operator_error_triangle_inequality() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x7A1);
        for _ in 0..50 {
            let mut rot = || {
                rot_exp(
                    rng.gen_range(-4.0..4.0),
                    rng.gen_range(-4.0..4.0),
                    rng.gen_range(-4.0..4.0),
                )
                .unwrap()
            };
            let (z, v, w) = (rot(), rot(), rot());
            assert!(
                operator_error(&z, &w) <= operator_error(&z, &v) + operator_error(&v, &w) + 1e-14
            );
        }
    }

    #[test]
    fn axis_angle_conventions() {
        let aa = axis_angle_of(&Rotation::IDENTITY);
        assert_eq!(aa.angle, 0.0);
        assert_eq!(aa.axis, [1.0, 0.0, 0.0]);

        let aa = axis_angle_of(&rot_exp(0.0, FRAC_PI_2, 0.0).unwrap());
        assert!((aa.angle - FRAC_PI_2).abs() < TOL_EXACT);
        assert!((aa.axis[1] - 1.0).abs() < TOL_EXACT);

        // Exact half turn: ambiguous sign resolved toward the positive axis.
        let aa = axis_angle_of(&rot_exp(0.0, 0.0, PI).unwrap());
        assert!((aa.angle - PI).abs() < TOL_EXACT);
        assert!((aa.axis[2] - 1.0).abs() < 1e-7);
    }

    #[test]
    fn axis_angle_round_trips_random_rotations() {
        let mut rng = ChaCha8Rng::seed_from_u64(0xAA);
        for _ in 0..300 {
            let mut axis: [f64; 3] = [
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            ];
            let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
            if n < 1e-3 {
                continue;
            }
            axis = [axis[0] / n, axis[1] / n, axis[2] / n];
            let angle = rng.gen_range(1e-8..PI - 1e-6);
            let r = rot_exp(angle * axis[0], angle * axis[1], angle * axis[2]).unwrap();
            let aa = axis_angle_of(&r);
            let back = rot_exp(
                aa.angle * aa.axis[0],
                aa.angle * aa.axis[1],
                aa.angle * aa.axis[2],
            )
            .unwrap();
            assert!(
                max_abs_diff(back.matrix(), r.matrix()) < TOL_ROUNDTRIP,
                "round trip failed at angle {angle}"
            );
        }
    }

    #[test]
    fn axis_angle_round_trips_near_half_turn() {
        for d in [1e-5, 1e-7, 1e-10, 0.0] {
            let angle = PI - d;
            let r = rot_exp(0.0, angle, 0.0).unwrap();
            let aa = axis_angle_of(&r);
            let back = rot_exp(
                aa.angle * aa.axis[0],
                aa.angle * aa.axis[1],
                aa.angle * aa.axis[2],
            )
            .unwrap();
            assert!(max_abs_diff(back.matrix(), r.matrix()) < TOL_ROUNDTRIP);
        }
    }

    #[test]
    fn euler_yxy_known_cases() {
        let (a, b, c) = euler_yxy(&Rotation::IDENTITY);
        assert_eq!((a, b, c), (0.0, 0.0, 0.0));

        let (a, b, c) = euler_yxy(&rot_exp(0.4, 0.0, 0.0).unwrap());
        assert!(a.abs() < TOL_EXACT);
        assert!((b - 0.4).abs() < TOL_EXACT);
        assert!(c.abs() < TOL_EXACT);
    }

    #[test]
    fn euler_yxy_round_trips_random_rotations() {
        let mut rng = ChaCha8Rng::seed_from_u64(0xE1);
        for _ in 0..300 {
            let r = rot_exp(
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
            )
            .unwrap();
            let (a, b, c) = euler_yxy(&r);
            let back = rot_exp(0.0, a, 0.0).unwrap()
                * rot_exp(b, 0.0, 0.0).unwrap()
                * rot_exp(0.0, c, 0.0).unwrap();
            assert!(max_abs_diff(back.matrix(), r.matrix()) < TOL_ROUNDTRIP);
        }
    }

    #[test]
    fn euler_yxy_handles_gimbal_cases() {
        // Pure y rotation: b = 0, whole angle absorbed into a.
        let r = rot_exp(0.0, 1.1, 0.0).unwrap();
        let (a, b, c) = euler_yxy(&r);
        assert!((a - 1.1).abs() < TOL_EXACT);
        assert!(b.abs() < 1e-8);
        assert_eq!(c, 0.0);
        // Half turn about x composed with y rotation: b = pi.
        let r = rot_exp(0.0, 0.7, 0.0).unwrap() * rot_exp(PI, 0.0, 0.0).unwrap();
        let (a, b, c) = euler_yxy(&r);
        let back = rot_exp(0.0, a, 0.0).unwrap()
            * rot_exp(b, 0.0, 0.0).unwrap()
            * rot_exp(0.0, c, 0.0).unwrap();
        assert!(max_abs_diff(back.matrix(), r.matrix()) < TOL_ROUNDTRIP);
    }
}
