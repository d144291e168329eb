use num_complex::Complex64 as C64;

use super::CMatrix;
use crate::error::{OqsError, Result};

/// Matrix exponential.
///
/// Hermitian input (within 1e-12 of its adjoint) goes through the
/// eigendecomposition; everything else through scaling-and-squaring with the
/// degree-13 Padé approximant, squaring count chosen from the 1-norm.
/// Non-normal generators (Redfield, coherence blocks) need the latter.
pub fn expm(a: &CMatrix) -> Result<CMatrix> {
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(OqsError::NonFinite);
    }
    let herm_defect = super::max_abs_diff(a, &a.adjoint());
    if herm_defect <= 1e-12 {
        return Ok(expm_hermitian(a));
    }
    // i·Hermitian (unitary generator case, A = -itH): exp via eigenbasis too
    let ih = a * C64::new(0.0, 1.0);
    if super::max_abs_diff(&ih, &ih.adjoint()) <= 1e-12 {
        let e = expm_hermitian_phases(&ih);
        return Ok(e);
    }
    expm_pade13(a)
}

fn expm_hermitian(a: &CMatrix) -> CMatrix {
    let sym = (a + a.adjoint()).scale(0.5);
    let se = sym.symmetric_eigen();
    let d = a.nrows();
    let mut exp_diag = CMatrix::zeros(d, d);
    for i in 0..d {
        exp_diag[(i, i)] = C64::new(se.eigenvalues[i].exp(), 0.0);
    }
    &se.eigenvectors * exp_diag * se.eigenvectors.adjoint()
}

/// exp(-iH) for Hermitian H (phases on the eigenvalues).
fn expm_hermitian_phases(h: &CMatrix) -> CMatrix {
    let sym = (h + h.adjoint()).scale(0.5);
    let se = sym.symmetric_eigen();
    let d = h.nrows();
    let mut exp_diag = CMatrix::zeros(d, d);
    for i in 0..d {
        exp_diag[(i, i)] = C64::new(0.0, -se.eigenvalues[i]).exp();
    }
    &se.eigenvectors * exp_diag * se.eigenvectors.adjoint()
}

fn one_norm(a: &CMatrix) -> f64 {
    let mut worst = 0.0f64;
    for j in 0..a.ncols() {
        let s: f64 = a.column(j).iter().map(|z| z.norm()).sum();
        worst = worst.max(s);
    }
    worst
}

const PADE13_THETA: f64 = 5.371920351148152;
const PADE13_B: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

fn expm_pade13(a: &CMatrix) -> Result<CMatrix> {
    let d = a.nrows();
    let norm = one_norm(a);
    let s = if norm > PADE13_THETA {
        (norm / PADE13_THETA).log2().ceil() as u32
    } else {
        0
    };
    let scaled = a.scale(0.5f64.powi(s as i32));

    let b = &PADE13_B;
    let id = CMatrix::identity(d, d);
    let a2 = &scaled * &scaled;
    let a4 = &a2 * &a2;
    let a6 = &a2 * &a4;

    let u_inner = &a6 * (a6.scale(b[13]) + a4.scale(b[11]) + a2.scale(b[9]))
        + a6.scale(b[7])
        + a4.scale(b[5])
        + a2.scale(b[3])
        + id.scale(b[1]);
    let u = &scaled * u_inner;
    let v = &a6 * (a6.scale(b[12]) + a4.scale(b[10]) + a2.scale(b[8]))
        + a6.scale(b[6])
        + a4.scale(b[4])
        + a2.scale(b[2])
        + id.scale(b[0]);

    let lhs = &v - &u;
    let rhs = &v + &u;
    let mut result = lhs
        .lu()
        .solve(&rhs)
        .ok_or(OqsError::SingularSolve("Padé denominator"))?;
    for _ in 0..s {
        result = &result * &result;
    }
    Ok(result)
}
