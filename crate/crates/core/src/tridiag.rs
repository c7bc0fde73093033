//! Tridiagonal and cyclic tridiagonal solves for implicit diffusion steps.
//!
//! Unknowns h_0..h_{n-1} are coupled through links: link i joins unknowns i
//! and i+1 with conductivity k[i]. On periodic grids the last link joins
//! n-1 and 0; otherwise k[n-1] is ignored (no flux).

/// Solves a_i x_{i-1} + b_i x_i + c_i x_{i+1} = d_i in place.
pub(crate) fn thomas(a: &[f64], b: &[f64], c: &[f64], d: &mut [f64]) {
    let n = d.len();
    let mut cp = vec![0.0; n];
    let mut m = b[0];
    cp[0] = c[0] / m;
    d[0] /= m;
    for i in 1..n {
        m = b[i] - a[i] * cp[i - 1];
        cp[i] = c[i] / m;
        d[i] = (d[i] - a[i] * d[i - 1]) / m;
    }
    for i in (0..n - 1).rev() {
        d[i] -= cp[i] * d[i + 1];
    }
}

/// Cyclic variant via Sherman-Morrison; alpha = A[n-1][0], beta = A[0][n-1].
pub(crate) fn cyclic_thomas(a: &[f64], b: &[f64], c: &[f64], alpha: f64, beta: f64, d: &mut [f64]) {
    let n = d.len();
    let gamma = -b[0];
    let mut bb = b.to_vec();
    bb[0] -= gamma;
    bb[n - 1] -= alpha * beta / gamma;
    thomas(a, &bb, c, d);
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = alpha;
    thomas(a, &bb, c, &mut u);
    let fact = (d[0] + beta * d[n - 1] / gamma) / (1.0 + u[0] + beta * u[n - 1] / gamma);
    for i in 0..n {
        d[i] -= fact * u[i];
    }
}

fn link(k: &[f64], i: usize, periodic: bool) -> f64 {
    if i + 1 < k.len() || periodic {
        k[i]
    } else {
        0.0
    }
}

/// dx^-2 * (k (h_{i+1} - h_i) - k (h_i - h_{i-1})) per unknown.
pub(crate) fn apply_diffusion(k: &[f64], h: &[f64], dx: f64, periodic: bool) -> Vec<f64> {
    let n = h.len();
    (0..n)
        .map(|i| {
            let right = if i + 1 < n { k[i] * (h[i + 1] - h[i]) } else { link(k, i, periodic) * (h[0] - h[i]) };
            let left = if i > 0 { k[i - 1] * (h[i] - h[i - 1]) } else { link(k, n - 1, periodic) * (h[0] - h[n - 1]) };
            (right - left) / (dx * dx)
        })
        .collect()
}

/// Solves (1 + dt r_i) h_i - dt * diffusion(h)_i = rhs_i in place, where r is
/// an optional nonnegative extra diagonal (reaction or damping).
pub(crate) fn implicit_diffusion(k: &[f64], extra: Option<&[f64]>, h: &mut [f64], dt: f64, dx: f64, periodic: bool) {
    let n = h.len();
    let r = dt / (dx * dx);
    let mut a = vec![0.0; n];
    let mut b = vec![0.0; n];
    let mut c = vec![0.0; n];
    for i in 0..n {
        let kl = if i > 0 { k[i - 1] } else { link(k, n - 1, periodic) };
        let kr = if i + 1 < n { k[i] } else { link(k, i, periodic) };
        a[i] = -r * kl;
        c[i] = -r * kr;
        b[i] = 1.0 + r * (kl + kr) + extra.map_or(0.0, |e| dt * e[i]);
    }
    if periodic {
        let corner_top = a[0];
        let corner_bottom = c[n - 1];
        a[0] = 0.0;
        c[n - 1] = 0.0;
        cyclic_thomas(&a, &b, &c, corner_bottom, corner_top, h);
    } else {
        a[0] = 0.0;
        c[n - 1] = 0.0;
        thomas(&a, &b, &c, h);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn implicit_step_inverts_operator() {
        let n = 24;
        let k: Vec<f64> = (0..n).map(|i| 1.0 + 0.3 * (i as f64).sin()).collect();
        let extra: Vec<f64> = (0..n).map(|i| 0.1 * i as f64).collect();
        let h0: Vec<f64> = (0..n).map(|i| (0.4 * i as f64).cos()).collect();
        for periodic in [true, false] {
            let mut h = h0.clone();
            implicit_diffusion(&k, Some(&extra), &mut h, 0.01, 0.1, periodic);
            let lh = apply_diffusion(&k, &h, 0.1, periodic);
            for i in 0..n {
                let back = h[i] * (1.0 + 0.01 * extra[i]) - 0.01 * lh[i];
                assert!((back - h0[i]).abs() < 1e-12, "periodic {periodic} i {i}");
            }
        }
    }

    proptest::proptest! {
        #[test]
        fn implicit_step_conserves_sum_and_sign(
            k in proptest::collection::vec(0.05f64..5.0, 3..40),
            seed in proptest::collection::vec(0.0f64..1.0, 40),
            dt in 1e-4f64..1.0,
            periodic: bool,
        ) {
            let n = k.len();
            let mut h: Vec<f64> = seed[..n].to_vec();
            let before: f64 = h.iter().sum();
            implicit_diffusion(&k, None, &mut h, dt, 0.1, periodic);
            let after: f64 = h.iter().sum();
            proptest::prop_assert!((after - before).abs() <= 1e-10 * before.max(1.0));
            proptest::prop_assert!(h.iter().all(|&x| x >= -1e-12));
        }
    }
}
