//! Small-frequency closed forms: lambda_j ~ i beta_j eta - alpha_j eta^2 and
//! M_hat_j ~ M_j^0 + i eta M_j^1 for the three (v, u, E) branches.
//!
//! The tables only fill the (v, u, E) block. Column 4 is completed as -q
//! times column 3, which holds for the exact mode matrices at every eta.

use nalgebra::{Matrix3, Matrix4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{GasParameters, LinearizationPoint};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LongWaveData {
    pub alphas: [f64; 3],
    pub betas: [f64; 3],
    pub m0: [Matrix4<f64>; 3],
    pub m1: [Matrix4<f64>; 3],
}

fn complete(m: Matrix3<f64>, q: f64) -> Matrix4<f64> {
    let mut out = Matrix4::zeros();
    out.fixed_view_mut::<3, 3>(0, 0).copy_from(&m);
    for r in 0..3 {
        out[(r, 3)] = -q * m[(r, 2)];
    }
    out
}

pub fn longwave_matrices(lp: &LinearizationPoint, params: &GasParameters) -> Result<LongWaveData> {
    let (p, pv, pe, te) = (lp.p, lp.p_v, lp.p_e, lp.theta_e);
    let (u, v, m, n) = (lp.u_bar, lp.v_bar, params.mu, params.nu);
    let ppp = p * pe - pv;
    if !(ppp > 0.0) {
        return Err(Error::InvalidParameter(format!("sound speed squared {ppp} is not positive")));
    }
    let s = ppp.sqrt();

    let alpha1 = -n * te * pv / (v * ppp);
    let alpha_ac = (n * p * te * pe + m * p * pe - m * pv) / (2.0 * v * ppp);

    #[rustfmt::skip]
    let m0_1 = Matrix3::new(
        p * pe / ppp,   -u * pe / ppp,  pe / ppp,
        0.0,            0.0,            0.0,
        -p * pv / ppp,  u * pv / ppp,   -pv / ppp,
    );
    let h = 2.0 * ppp;
    #[rustfmt::skip]
    let m0_2 = Matrix3::new(
        -pv / h,                (u * pe - s) / h,                               -pe / h,
        pv / (2.0 * s),         0.5 - u * pe / (2.0 * s),                       pe / (2.0 * s),
        (p + u * s) * pv / h,   (-pe * s * u * u - pv * u + p * s) / h,         pe * (p + u * s) / h,
    );
    #[rustfmt::skip]
    let m0_3 = Matrix3::new(
        -pv / h,                (u * pe + s) / h,                               -pe / h,
        -pv / (2.0 * s),        0.5 * (u * pe / s + 1.0),                       -pe / (2.0 * s),
        (p - u * s) * pv / h,   -(-pe * s * u * u + pv * u + p * s) / h,        pe * (p - u * s) / h,
    );

    let q2 = ppp * ppp;
    let w = n * te / (v * q2);
    #[rustfmt::skip]
    let m1_1 = Matrix3::new(
        0.0,                    p * pe * w,                 0.0,
        -p * pe * pv * w,       u * pe * pv * w,            -pe * pv * w,
        -p * u * pe * pv * w,   -(p - u * u * pe) * pv * w, -u * pe * pv * w,
    );
    let f = 4.0 * v * ppp.powf(2.5);
    let g = 4.0 * v * q2;
    #[rustfmt::skip]
    let m1_2 = Matrix3::new(
        pv * (m * pv - p * pe * (m + 3.0 * n * te)) / f,
        pe * (-2.0 * p * n * s * te - u * pv * (m - 2.0 * n * te) + p * u * pe * (m + n * te)) / f,
        -pe * (p * pe * (m + n * te) - pv * (m - 2.0 * n * te)) / f,

        p * n * pe * pv * te / (2.0 * v * q2),
        -(pe * (p * s * m + (2.0 * u * n * pv - p * n * s) * te) - m * s * pv) / g,
        n * pe * pv * te / (2.0 * v * q2),

        p * pv * (pe * (p * m + n * (p + 2.0 * u * s) * te) - pv * (m - 2.0 * n * te)) / f,
        -(2.0 * p * p * u * (m - n * te) * pe * pe
            + u * pv * (n * (5.0 * p + 2.0 * u * s) * te - 3.0 * p * m) * pe
            + pv * (u * m * pv - 2.0 * p * n * s * te)) / f,
        pe * (pe * (m - n * te) * p * p + pv * (2.0 * n * (2.0 * p + u * s) * te - p * m)) / f,
    );
    #[rustfmt::skip]
    let m1_3 = Matrix3::new(
        pv * (p * pe * (m + 3.0 * n * te) - m * pv) / f,
        -pe * (2.0 * p * n * s * te - u * pv * (m - 2.0 * n * te) + p * u * pe * (m + n * te)) / f,
        pe * (p * pe * (m + n * te) - pv * (m - 2.0 * n * te)) / f,

        p * n * pe * pv * te / (2.0 * v * q2),
        (pe * (p * m * s - n * (s * p + 2.0 * u * pv) * te) - m * s * pv) / g,
        n * pe * pv * te / (2.0 * v * q2),

        pv * (p * pv * (m - 2.0 * n * te) - p * pe * (p * m + n * (p - 2.0 * u * s) * te)) / f,
        (2.0 * p * p * u * (m - n * te) * pe * pe
            + u * pv * (n * (5.0 * p - 2.0 * u * s) * te - 3.0 * p * m) * pe
            + pv * (u * m * pv + 2.0 * p * n * s * te)) / f,
        pe * (pe * (n * te - m) * p * p + pv * (p * m + (2.0 * u * n * s - 4.0 * p * n) * te)) / f,
    );

    let q = params.heat_q;
    Ok(LongWaveData {
        alphas: [alpha1, alpha_ac, alpha_ac],
        betas: [0.0, -s, s],
        m0: [complete(m0_1, q), complete(m0_2, q), complete(m0_3, q)],
        m1: [complete(m1_1, q), complete(m1_2, q), complete(m1_3, q)],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{default_parameters, equilibrium};

    #[test]
    fn default_values() {
        let p = default_parameters();
        let lw = longwave_matrices(&equilibrium(&p), &p).unwrap();
        let cs = 0.56f64.sqrt();
        assert_eq!(lw.betas[0], 0.0);
        assert!((lw.betas[1] + cs).abs() < 1e-15 && (lw.betas[2] - cs).abs() < 1e-15);
        assert!(lw.alphas.iter().all(|&a| a > 0.0));
        assert!((lw.m0[0][(0, 0)] - 0.16 / 0.56).abs() < 1e-15);
        // the three leading projectors sum to the identity on the (v, u, E) block
        let sum = lw.m0[0] + lw.m0[1] + lw.m0[2];
        for r in 0..3 {
            for c in 0..3 {
                let want = if r == c { 1.0 } else { 0.0 };
                assert!((sum[(r, c)] - want).abs() < 1e-14);
            }
        }
        // and the first-order corrections cancel
        let s1 = lw.m1[0] + lw.m1[1] + lw.m1[2];
        assert!(s1.amax() < 1e-14);
    }
}
