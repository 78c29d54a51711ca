//! Canonical (Weyl/KAK) decomposition of an arbitrary two-qubit unitary into
//! the 15-angle form of [`super::gate_from_angles`], with angles in the
//! chamber pi/2 >= tx >= ty >= |tz|, ties broken toward tz >= 0.
//!
//! Pipeline: conjugate into the magic basis, where SU(2)(x)SU(2) becomes
//! SO(4); diagonalize M2 = U^T U (complex symmetric) with a real orthogonal
//! eigenbasis by mixing real and imaginary parts with random coefficients;
//! read the canonical-class angles off the eigenvalue phases; fold them into
//! the Weyl chamber while absorbing the reflections into the single-qubit
//! factors; finally split the two SU(2)(x)SU(2) factors and extract Euler
//! z-y-z angles for each.

use num_complex::Complex64;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use super::{gate_from_angles, GateAngles};
use crate::error::{Error, Result};
use crate::tensor::{determinant, eigh_real, Rng, Tensor, C_ONE, C_ZERO};

const TWO_PI: f64 = 2.0 * PI;

/// Normalized magic basis B: columns are the Bell-like states in which the
/// local-unitary group is real orthogonal.
fn magic_basis() -> Tensor {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let i = Complex64::new(0.0, s);
    let r = Complex64::new(s, 0.0);
    let rows = [
        [r, i, C_ZERO, C_ZERO],
        [C_ZERO, C_ZERO, i, r],
        [C_ZERO, C_ZERO, i, -r],
        [r, -i, C_ZERO, C_ZERO],
    ];
    let mut b = Tensor::zeros(&[4, 4]);
    for (p, row) in rows.iter().enumerate() {
        for (q, &v) in row.iter().enumerate() {
            b.set2(p, q, v);
        }
    }
    b
}

fn into_magic(u: &Tensor) -> Tensor {
    let b = magic_basis();
    b.matmul(u).unwrap().matmul(&b.dagger()).unwrap()
}

fn out_of_magic(u: &Tensor) -> Tensor {
    let b = magic_basis();
    b.dagger().matmul(u).unwrap().matmul(&b).unwrap()
}

fn det2(m: &Tensor, rows: (usize, usize), cols: (usize, usize)) -> Complex64 {
    m.get2(rows.0, cols.0) * m.get2(rows.1, cols.1)
        - m.get2(rows.0, cols.1) * m.get2(rows.1, cols.0)
}

/// Splits U = L (x) R for U in SU(2)(x)SU(2) (up to phase), with L on the
/// lower-numbered qubit. Follows the largest-block strategy: recover R from
/// whichever 2x2 block of U has non-negligible determinant.
fn split_product_gate(u: &Tensor) -> Result<(Tensor, Tensor)> {
    let mut r = Tensor::zeros(&[2, 2]);
    for i in 0..2 {
        for j in 0..2 {
            r.set2(i, j, u.get2(i, j));
        }
    }
    let mut det_r = det2(u, (0, 1), (0, 1));
    if det_r.norm() < 0.1 {
        for i in 0..2 {
            for j in 0..2 {
                r.set2(i, j, u.get2(2 + i, j));
            }
        }
        det_r = det2(u, (2, 3), (0, 1));
    }
    if det_r.norm() < 0.1 {
        return Err(Error::Numerical(
            "product-gate split failed: no usable 2x2 block".into(),
        ));
    }
    let r = r.scale(C_ONE / det_r.sqrt());
    let temp = u.matmul(&Tensor::identity(2).kron(&r.dagger())).unwrap();
    let mut l = Tensor::zeros(&[2, 2]);
    for i in 0..2 {
        for j in 0..2 {
            l.set2(i, j, temp.get2(2 * i, 2 * j));
        }
    }
    let det_l = det2(&temp, (0, 2), (0, 2));
    if det_l.norm() < 0.9 {
        return Err(Error::Numerical(
            "product-gate split failed: input is not a tensor product".into(),
        ));
    }
    let l = l.scale(C_ONE / det_l.sqrt());
    Ok((l, r))
}

/// Euler z-y-z angles (a, b, c) with V ~ Rz(a) Ry(b) Rz(c) up to phase.
fn euler_zyz_angles(v: &Tensor) -> [f64; 3] {
    let det = det2(v, (0, 1), (0, 1));
    let v = v.scale(C_ONE / det.sqrt());
    let (v00, v10, v11) = (v.get2(0, 0), v.get2(1, 0), v.get2(1, 1));
    let beta = 2.0 * v10.norm().atan2(v00.norm());
    if v10.norm() < 1e-9 {
        // diagonal-dominant: beta ~ 0, only a+c is defined
        [2.0 * v11.arg(), beta, 0.0]
    } else if v00.norm() < 1e-9 {
        // anti-diagonal-dominant: beta ~ pi, only a-c is defined
        [2.0 * v10.arg(), beta, 0.0]
    } else {
        [v11.arg() + v10.arg(), beta, v11.arg() - v10.arg()]
    }
}

/// 2x2 constant: i * sigma (x = 0, y = 1, z = 2).
fn i_pauli(which: usize) -> Tensor {
    let mut t = Tensor::zeros(&[2, 2]);
    let i = Complex64::new(0.0, 1.0);
    match which {
        0 => {
            t.set2(0, 1, i);
            t.set2(1, 0, i);
        }
        1 => {
            t.set2(0, 1, C_ONE);
            t.set2(1, 0, -C_ONE);
        }
        _ => {
            t.set2(0, 0, i);
            t.set2(1, 1, -i);
        }
    }
    t
}

fn pauli(which: usize) -> Tensor {
    i_pauli(which).scale(Complex64::new(0.0, -1.0))
}

fn argsort3(xs: &[f64; 3]) -> [usize; 3] {
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).unwrap());
    order
}

/// Canonical decomposition of a 4x4 unitary into [`GateAngles`]; the
/// reconstruction `gate_from_angles(result)` reproduces the input up to
/// global phase to 1e-10.
pub fn kak_decompose(u: &Tensor) -> Result<GateAngles> {
    if u.shape() != [4, 4] {
        return Err(Error::InvalidArgument("kak_decompose needs a 4x4 matrix".into()));
    }
    if u.unitarity_residual() > 1e-10 {
        return Err(Error::InvalidArgument(
            "kak_decompose needs a unitary input (residual > 1e-10)".into(),
        ));
    }

    // scale into SU(4)
    let det_u = determinant(u);
    let su = u.scale(det_u.powf(-0.25));
    let u_p = out_of_magic(&su);
    let m2 = u_p.transpose2().matmul(&u_p).unwrap();

    // Diagonalize the complex-symmetric M2 with a real orthogonal P:
    // M2 = A + iB with commuting real-symmetric A, B, so a random real
    // mixture a*A + b*B has the desired eigenbasis except for unlucky
    // degeneracies; retry with fresh coefficients until the residual check
    // passes. The seed is fixed for determinism.
    let mut rng = Rng::new(2023);
    let mut p = Tensor::zeros(&[4, 4]);
    let mut d_phases = [0.0f64; 4];
    let mut found = false;
    for _ in 0..100 {
        let (ca, cb) = (rng.normal(), rng.normal());
        let mut mix = Tensor::zeros(&[4, 4]);
        for i in 0..4 {
            for j in 0..4 {
                let z = m2.get2(i, j);
                mix.set2(i, j, Complex64::new(ca * z.re + cb * z.im, 0.0));
            }
        }
        let (_, p_try) = eigh_real(&mix)?;
        let d_try = p_try
            .transpose2()
            .matmul(&m2)
            .unwrap()
            .matmul(&p_try)
            .unwrap();
        // residual: P diag(d) P^T must reproduce M2
        let mut diag = Tensor::zeros(&[4, 4]);
        for k in 0..4 {
            diag.set2(k, k, d_try.get2(k, k));
        }
        let rebuilt = p_try.matmul(&diag).unwrap().matmul(&p_try.transpose2()).unwrap();
        if rebuilt.sub(&m2).unwrap().max_abs() < 1e-12 {
            for k in 0..4 {
                d_phases[k] = -d_try.get2(k, k).arg() / 2.0;
            }
            p = p_try;
            found = true;
            break;
        }
    }
    if !found {
        return Err(Error::Numerical("kak_decompose: failed to diagonalize M2".into()));
    }

    let mut d = d_phases;
    d[3] = -d[0] - d[1] - d[2];
    let mut cs = [0.0f64; 3];
    for i in 0..3 {
        cs[i] = ((d[i] + d[3]) / 2.0).rem_euclid(TWO_PI);
    }
    // order by distance to the chamber boundary, rotated as in the canonical
    // ordering of the Weyl coordinates (b, a, c) = (cs0, cs1, cs2)
    let cstemp = {
        let mut t = [0.0f64; 3];
        for i in 0..3 {
            let x = cs[i].rem_euclid(FRAC_PI_2);
            t[i] = x.min(FRAC_PI_2 - x);
        }
        t
    };
    let mut order = argsort3(&cstemp);
    order = [order[1], order[2], order[0]];
    let (cs_orig, d_orig, p_orig) = (cs, d, p.clone());
    for (new, &old) in order.iter().enumerate() {
        cs[new] = cs_orig[old];
        d[new] = d_orig[old];
        for i in 0..4 {
            p.set2(i, new, p_orig.get2(i, old));
        }
    }
    if determinant(&p).re < 0.0 {
        for i in 0..4 {
            p.set2(i, 3, -p.get2(i, 3));
        }
    }

    let mut temp = Tensor::zeros(&[4, 4]);
    for k in 0..4 {
        temp.set2(k, k, Complex64::from_polar(1.0, d[k]));
    }
    let k1 = into_magic(&u_p.matmul(&p).unwrap().matmul(&temp).unwrap());
    let k2 = into_magic(&p.transpose2());

    let (mut k1l, mut k1r) = split_product_gate(&k1)?;
    let (k2l, mut k2r) = split_product_gate(&k2)?;

    // Fold (cs0, cs1, cs2) into the Weyl chamber, absorbing each reflection
    // into the single-qubit factors (i*sigma conjugations).
    let ipx = i_pauli(0);
    let ipy = i_pauli(1);
    let ipz = i_pauli(2);
    const PI32: f64 = 3.0 * FRAC_PI_2;
    if cs[0] > FRAC_PI_2 {
        cs[0] -= PI32;
        k1l = k1l.matmul(&ipy).unwrap();
        k1r = k1r.matmul(&ipy).unwrap();
    }
    if cs[1] > FRAC_PI_2 {
        cs[1] -= PI32;
        k1l = k1l.matmul(&ipx).unwrap();
        k1r = k1r.matmul(&ipx).unwrap();
    }
    let mut conjs = 0;
    if cs[0] > FRAC_PI_4 {
        cs[0] = FRAC_PI_2 - cs[0];
        k1l = k1l.matmul(&ipy).unwrap();
        k2r = ipy.matmul(&k2r).unwrap();
        conjs += 1;
    }
    if cs[1] > FRAC_PI_4 {
        cs[1] = FRAC_PI_2 - cs[1];
        k1l = k1l.matmul(&ipx).unwrap();
        k2r = ipx.matmul(&k2r).unwrap();
        conjs += 1;
    }
    if cs[2] > FRAC_PI_2 {
        cs[2] -= PI32;
        k1l = k1l.matmul(&ipz).unwrap();
        k1r = k1r.matmul(&ipz).unwrap();
    }
    if conjs == 1 {
        cs[2] = FRAC_PI_2 - cs[2];
        k1l = k1l.matmul(&ipz).unwrap();
        k2r = ipz.matmul(&k2r).unwrap();
    }
    if cs[2] > FRAC_PI_4 {
        cs[2] -= FRAC_PI_2;
        k1l = k1l.matmul(&ipz).unwrap();
        k1r = k1r.matmul(&ipz).unwrap();
    }
    let (a, b, c) = (cs[1], cs[0], cs[2]);

    // Here U ~ (K1l (x) K1r) exp(i [a XX + b YY + c ZZ]) (K2l (x) K2r) with
    // pi/4 >= a >= b >= |c|. Conjugating the core with Z (x) I flips the
    // signs of a and b, turning the exponential into
    // Rzz(-2c) Ryy(2b) Rxx(2a), so
    //   (tx, ty, tz) = (2a, 2b, -2c),
    //   left factor Z joins K1l, right factor Z joins K2l.
    let tx = 2.0 * a;
    let ty = 2.0 * b;
    let mut tz = -2.0 * c;
    let z = pauli(2);
    let mut left_a = k1l.matmul(&z).unwrap();
    let left_b = k1r;
    let mut right_a = z.matmul(&k2l).unwrap();
    let mut right_b = k2r;

    // Tie rule: on the chamber face tx = pi/2 the sign of tz is gauge; pick
    // tz >= 0. The move uses (Y (x) I) conjugation (negates tx and tz) and a
    // pi-shift of tx absorbed as X (x) X on the right, valid only at
    // tx = pi/2.
    if tz < 0.0 && (tx - FRAC_PI_2).abs() < 1e-12 {
        let x = pauli(0);
        let y = pauli(1);
        tz = -tz;
        left_a = left_a.matmul(&y).unwrap();
        right_a = x.matmul(&y).unwrap().matmul(&right_a).unwrap();
        right_b = x.matmul(&right_b).unwrap();
    }
    let angles = GateAngles {
        theta_x: tx,
        theta_y: ty,
        theta_z: tz,
        pre: [euler_zyz_angles(&right_a), euler_zyz_angles(&right_b)],
        post: [euler_zyz_angles(&left_a), euler_zyz_angles(&left_b)],
    };

    // defensive reconstruction check (up to global phase)
    let rebuilt = gate_from_angles(&angles);
    if rebuilt.phase_distance(u) > 1e-10 {
        return Err(Error::Numerical(format!(
            "kak_decompose reconstruction residual {:.2e} exceeds 1e-10",
            rebuilt.phase_distance(u)
        )));
    }
    Ok(angles)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::random_unitary;
    use approx::assert_abs_diff_eq;

    fn canonical_ok(a: &GateAngles) {
        assert!(a.theta_x <= FRAC_PI_2 + 1e-12);
        assert!(a.theta_x >= a.theta_y - 1e-12);
        assert!(a.theta_y >= a.theta_z.abs() - 1e-12);
        assert!(a.theta_y >= -1e-12);
    }

    #[test]
    fn identity_has_zero_interaction() {
        let a = kak_decompose(&Tensor::identity(4)).unwrap();
        assert_abs_diff_eq!(a.theta_x, 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(a.theta_y, 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(a.theta_z, 0.0, epsilon = 1e-10);
        let rebuilt = gate_from_angles(&a);
        assert!(rebuilt.phase_distance(&Tensor::identity(4)) < 1e-10);
    }

    #[test]
    fn cnot_canonical_class() {
        let mut cnot = Tensor::zeros(&[4, 4]);
        for (i, j) in [(0, 0), (1, 1), (2, 3), (3, 2)] {
            cnot.set2(i, j, C_ONE);
        }
        let a = kak_decompose(&cnot).unwrap();
        canonical_ok(&a);
        assert_abs_diff_eq!(a.theta_x, FRAC_PI_2, epsilon = 1e-9);
        assert_abs_diff_eq!(a.theta_y, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(a.theta_z, 0.0, epsilon = 1e-9);
        assert!(gate_from_angles(&a).phase_distance(&cnot) < 1e-10);
    }

    #[test]
    fn swap_canonical_class() {
        let mut swap = Tensor::zeros(&[4, 4]);
        for (i, j) in [(0, 0), (1, 2), (2, 1), (3, 3)] {
            swap.set2(i, j, C_ONE);
        }
        let a = kak_decompose(&swap).unwrap();
        canonical_ok(&a);
        assert_abs_diff_eq!(a.theta_x, FRAC_PI_2, epsilon = 1e-9);
        assert_abs_diff_eq!(a.theta_y, FRAC_PI_2, epsilon = 1e-9);
        assert_abs_diff_eq!(a.theta_z, FRAC_PI_2, epsilon = 1e-9);
        assert!(gate_from_angles(&a).phase_distance(&swap) < 1e-10);
    }

    #[test]
    fn haar_round_trip() {
        let mut rng = Rng::new(60);
        for _ in 0..100 {
            let u = random_unitary(4, &mut rng);
            let a = kak_decompose(&u).unwrap();
            canonical_ok(&a);
            let rebuilt = gate_from_angles(&a);
            assert!(
                rebuilt.phase_distance(&u) < 1e-9,
                "round-trip residual {}",
                rebuilt.phase_distance(&u)
            );
        }
    }

    #[test]
    fn parametrized_round_trip() {
        // gates built from angles decompose back to the same canonical class
        let mut rng = Rng::new(61);
        for _ in 0..50 {
            let mut v = [0.0; 15];
            for x in &mut v {
                *x = rng.uniform(-PI, PI);
            }
            let u = gate_from_angles(&GateAngles::from_vector(&v));
            let a = kak_decompose(&u).unwrap();
            canonical_ok(&a);
            assert!(gate_from_angles(&a).phase_distance(&u) < 1e-9);
        }
    }

    #[test]
    fn rejects_non_unitary() {
        let mut m = Tensor::identity(4);
        m.set2(0, 1, Complex64::new(0.5, 0.0));
        assert!(matches!(
            kak_decompose(&m),
            Err(Error::InvalidArgument(_))
        ));
    }
}
