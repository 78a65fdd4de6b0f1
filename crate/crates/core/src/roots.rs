//! Polynomial roots as eigenvalues of a balanced companion matrix.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Roots of `c[0] xᵈ + c[1] x^{d−1} + … + c[d]`, sorted by real part then
/// imaginary part.
pub fn polynomial_roots(coeffs: &[f64]) -> Result<Vec<Complex64>> {
    let lead = *coeffs
        .first()
        .ok_or_else(|| Error::InvalidParams("empty polynomial".into()))?;
    if lead == 0.0 || !coeffs.iter().all(|c| c.is_finite()) {
        return Err(Error::InvalidParams("leading coefficient must be nonzero and finite".into()));
    }
    let d = coeffs.len() - 1;
    if d == 0 {
        return Ok(Vec::new());
    }
    let monic: Vec<f64> = coeffs.iter().map(|c| c / lead).collect();

    // Companion matrix with the coefficients in the last row.
    let mut m = DMatrix::<f64>::zeros(d, d);
    for i in 0..d - 1 {
        m[(i, i + 1)] = 1.0;
    }
    for j in 0..d {
        m[(d - 1, j)] = -monic[d - j];
    }
    balance(&mut m);

    // Plain QR can stall when eigenvalues come in ± pairs of equal modulus;
    // a diagonal shift breaks the symmetry and is undone afterwards.
    let scale = m.amax().max(1.0);
    let mut eig = None;
    for sigma in [0.0, 0.318_309_886 * scale, -0.577_215_665 * scale] {
        let shifted = &m + DMatrix::<f64>::identity(d, d) * sigma;
        if let Some(schur) = shifted.try_schur(f64::EPSILON, 10_000) {
            let shift = Complex64::new(sigma, 0.0);
            eig = Some(schur.complex_eigenvalues().iter().map(|z| z - shift).collect::<Vec<_>>());
            break;
        }
    }
    let eig = eig.ok_or_else(|| Error::Integration { t: f64::NAN, reason: "Schur iteration did not converge".into() })?;

    let mut roots: Vec<Complex64> = eig.iter().map(|z| polish(&monic, *z)).collect();
    roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(roots)
}

/// Parlett–Reinsch balancing with powers of two.
fn balance(m: &mut DMatrix<f64>) {
    const RADIX: f64 = 2.0;
    let n = m.nrows();
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += m[(j, i)].abs();
                    r += m[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g {
                f *= RADIX;
                c *= RADIX * RADIX;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= RADIX * RADIX;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                for j in 0..n {
                    m[(i, j)] /= f;
                    m[(j, i)] *= f;
                }
            }
        }
    }
}

fn horner(monic: &[f64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &c in monic {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

// A few Newton steps; keeps the eigenvalue if Newton does not improve it.
fn polish(monic: &[f64], z0: Complex64) -> Complex64 {
    let mut z = z0;
    let mut best = (horner(monic, z).0.norm(), z);
    for _ in 0..4 {
        let (p, dp) = horner(monic, z);
        if dp.norm() == 0.0 {
            break;
        }
        z -= p / dp;
        let res = horner(monic, z).0.norm();
        if res < best.0 {
            best = (res, z);
        }
    }
    let mut out = best.1;
    if out.im.abs() <= 1e-14 * out.re.abs().max(1.0) {
        out.im = 0.0;
    }
    out
}

/// Expands `Π (x − r)` into real coefficients, leading coefficient first.
pub fn expand_roots(roots: &[Complex64]) -> Vec<f64> {
    let mut c = vec![Complex64::new(1.0, 0.0)];
    for r in roots {
        let mut next = vec![Complex64::new(0.0, 0.0); c.len() + 1];
        for (i, ci) in c.iter().enumerate() {
            next[i] += ci;
            next[i + 1] -= ci * r;
        }
        c = next;
    }
    c.iter().map(|z| z.re).collect()
}
