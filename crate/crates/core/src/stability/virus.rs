//! Stability of the coexistence point `E*` of the virus-only model
//! (`K = γ = 1`): the Hurwitz function `H(b)`, its polynomial numerator
//! `Φ(b)` and the Hopf burst size.

use nalgebra::Matrix3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::eigen::{characteristic_coefficients, eigenvalues};
use crate::equilibria::virus_equilibrium;
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::poly::RealPolynomial;
use crate::scalar;

fn unit_scale(p: &ModelParams) -> (f64, f64, f64) {
    let q = p.rescale().params;
    (q.lambda, q.beta, q.delta)
}

/// Characteristic coefficients `(a₁, a₂, a₃)` of `E*` at burst size `b`,
/// in closed form for the rescaled parameters.
pub fn virus_char_coefficients(p: &ModelParams, b: f64) -> (f64, f64, f64) {
    let (l, be, d) = unit_scale(p);
    let bm = b - 1.0;
    let a1 = (be * (b + b * d - 1.0) + d * l) / (bm * be);
    let a2 = d * l * (bm * be * (be - 1.0 + d + b * (1.0 - be + d)) + (bm * bm * be + b * d * d) * l)
        / (bm * bm * be * (bm * be + d * l));
    let a3 = d * l * (1.0 + d / (be * (1.0 - b)));
    (a1, a2, a3)
}

/// `H(b) = a₁a₂ − a₃`; positive iff `E*` is locally stable (for `R₀ > 1`).
pub fn stability_function_h(p: &ModelParams, b: f64) -> Result<f64> {
    if b <= 1.0 {
        return Err(Error::Precondition(format!("H(b) needs b > 1, got {b}")));
    }
    let (a1, a2, a3) = virus_char_coefficients(p, b);
    Ok(a1 * a2 - a3)
}

/// Positive factor with `H(b) · phi_denominator(b) = Φ(b)` for `b > 1`.
pub fn phi_denominator(p: &ModelParams, b: f64) -> f64 {
    let (l, be, d) = unit_scale(p);
    (b - 1.0).powi(3) * be * be * ((b - 1.0) * be + d * l) / (d * l)
}

/// The quartic `Φ(b) = B₄b⁴ + … + B₀` sharing the sign of `H(b)`.
pub fn phi_polynomial(p: &ModelParams) -> RealPolynomial {
    let (l, be, d) = unit_scale(p);
    let b4 = -be.powi(3);
    let b3 = be * be * (-be * (d - 3.0) + d * (d + 3.0) + l + 1.0);
    let b2 = be * (be * be * (2.0 * d - 3.0) - 3.0 * be * (2.0 * d + l + 1.0) + d * l * (d * (d + 3.0) + l + 1.0));
    let b1 = -be.powi(3) * (d - 1.0) + be * be * (-d * d + 3.0 * d + 3.0 * l + 3.0) - be * d * l * (3.0 * d + 2.0 * l + 2.0)
        + d.powi(3) * l * l;
    let b0 = be * (l + 1.0) * (d * l - be);
    RealPolynomial::new(vec![b0, b1, b2, b3, b4])
}

/// Coefficients of `Φ(b₀ + x)` in closed form.
pub fn shifted_phi(p: &ModelParams) -> RealPolynomial {
    let (l, be, d) = unit_scale(p);
    let t0 = d.powi(3) * (l + 1.0) * (be + d + 1.0) * (be + d + l + 1.0) / be;
    let t1 = d * d
        * (be * (2.0 * d * l + 3.0 * d + 3.0 * l + 3.0) + (d + 2.0) * l * l + 2.0 * d * (d + 3.0) * l + d * (3.0 * d + 5.0)
            + 5.0 * l
            + 3.0);
    let t2 = be * d * (-be * be + d * (d + 3.0) * l + 3.0 * d * (d + 1.0) + l * l + 4.0 * l + 3.0);
    let t3 = be * be * (-be * (d + 1.0) + (d - 1.0) * d + l + 1.0);
    let t4 = -be.powi(3);
    RealPolynomial::new(vec![t0, t1, t2, t3, t4])
}

/// The Hopf burst size of `E*`: the unique real root of `Φ` above `b₀`.
pub fn virus_hopf_burst(p: &ModelParams) -> Result<Option<f64>> {
    let b0 = p.critical_burst();
    let roots = phi_polynomial(p).real_roots(Some((b0, f64::INFINITY)))?;
    Ok(roots.iter().map(|r| r.value).find(|&r| r > b0))
}

/// Which indicator [`locate_bh`] brackets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum HopfTest {
    /// Closed-form `H(b)` of the three-dimensional block.
    VirusBlock,
    /// Order-4 Hurwitz margin of the full Jacobian at `E*`.
    FullJacobian,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HopfPoint {
    pub b: f64,
    /// Imaginary part of the critical pair.
    pub omega: f64,
    /// Real part of the critical pair, a check on the location.
    pub real_part: f64,
}

fn full_margin(p: &ModelParams, b: f64) -> f64 {
    let q = p.with_b(b);
    let m = crate::model::jacobian(&q, &virus_equilibrium(&q)).map(|j| characteristic_coefficients(&j));
    match m {
        Ok(a) => a[0] * a[1] * a[2] - a[2] * a[2] - a[0] * a[0] * a[3],
        Err(_) => f64::NAN,
    }
}

/// Locates the Hopf point of `E*` inside `bracket` by Brent refinement.
pub fn locate_bh(p: &ModelParams, bracket: (f64, f64), test: HopfTest) -> Result<HopfPoint> {
    let (lo, hi) = bracket;
    let b = match test {
        HopfTest::VirusBlock => scalar::brent(
            |b| stability_function_h(p, b).unwrap_or(f64::NAN),
            lo,
            hi,
            1e-13,
            "H(b)",
        )?,
        HopfTest::FullJacobian => scalar::brent(|b| full_margin(p, b), lo, hi, 1e-13, "Hurwitz margin")?,
    };
    let q = p.with_b(b);
    let s = virus_equilibrium(&q);
    let j = q.jacobian_array(&s.as_array());
    let block = Matrix3::from_fn(|r, c| j[r][c]);
    let pair = eigenvalues(&block)?
        .into_iter()
        .filter(|z| z.im > 0.0)
        .min_by(|a, b| a.re.abs().total_cmp(&b.re.abs()))
        .unwrap_or(Complex64::new(f64::NAN, 0.0));
    Ok(HopfPoint {
        b,
        omega: pair.im,
        real_part: pair.re,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_virus(rng: &mut ChaCha8Rng) -> ModelParams {
        ModelParams::virus_only(rng.gen_range(0.01..5.0), rng.gen_range(0.01..5.0), rng.gen_range(0.01..5.0), 2.0)
    }

    #[test]
    fn h_at_threshold() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..100 {
            let p = random_virus(&mut rng);
            let (l, be, d) = (p.lambda, p.beta, p.delta);
            let h = stability_function_h(&p, p.critical_burst()).unwrap();
            let want = l * (1.0 + d + be) * (1.0 + d + l + be);
            assert!((h - want).abs() <= 1e-9 * want.abs().max(1.0), "{h} vs {want}");
            assert!(h > 0.0);
        }
    }

    #[test]
    fn h_matches_jacobian_coefficients() {
        let p = ModelParams::virus_only(0.36, 0.11, 0.44, 28.0);
        let (a1, a2, a3) = virus_char_coefficients(&p, 28.0);
        let s = virus_equilibrium(&p);
        let j = p.jacobian_array(&s.as_array());
        let a = characteristic_coefficients(&Matrix3::from_fn(|r, c| j[r][c]));
        for (x, y) in [a1, a2, a3].iter().zip(a) {
            assert!((x - y).abs() < 1e-12, "{x} {y}");
        }
    }

    #[test]
    fn h_times_denominator_is_phi() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..100 {
            let p = random_virus(&mut rng);
            let b = rng.gen_range(1.01..60.0);
            let lhs = stability_function_h(&p, b).unwrap() * phi_denominator(&p, b);
            let rhs = phi_polynomial(&p).eval(b);
            let scale = phi_polynomial(&p).coeffs().iter().map(|c| c.abs()).sum::<f64>() * b.powi(4);
            assert!((lhs - rhs).abs() <= 1e-9 * scale, "{lhs} {rhs}");
            assert!(phi_denominator(&p, b) > 0.0);
        }
    }

    #[test]
    fn phi_at_threshold_and_shift() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..10 {
            let p = random_virus(&mut rng);
            let (l, be, d) = (p.lambda, p.beta, p.delta);
            let b0 = p.critical_burst();
            let want = d.powi(3) * (1.0 + l) * (1.0 + be + d) * (1.0 + be + d + l) / be;
            let phi = phi_polynomial(&p);
            assert!((phi.eval(b0) - want).abs() <= 1e-9 * want.max(1.0));
            let numeric = phi.taylor_shift(b0);
            let closed = shifted_phi(&p);
            let scale = numeric.scale();
            for i in 0..5 {
                assert!((numeric.coeff(i) - closed.coeff(i)).abs() <= 1e-9 * scale, "B~{i}");
            }
            assert_eq!(closed.coeff(4), -be.powi(3));
            assert_eq!(phi.coeff(4), -be.powi(3));
        }
    }

    #[test]
    fn hopf_values() {
        let p = ModelParams::virus_only(0.36, 0.11, 0.44, 28.0);
        let bh = virus_hopf_burst(&p).unwrap().unwrap();
        assert!((bh - 27.7664).abs() < 1e-3);
        let h = locate_bh(&p, (20.0, 40.0), HopfTest::VirusBlock).unwrap();
        assert!((h.b - bh).abs() < 1e-9);
        let (_, a2, _) = virus_char_coefficients(&p, h.b);
        assert!((h.omega - a2.sqrt()).abs() < 1e-6 && h.real_part.abs() < 1e-7);
        assert_eq!(shifted_phi(&p).sign_changes(), 1);
    }
}
