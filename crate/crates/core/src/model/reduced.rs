//! Three-compartment virus model obtained with `β_y = β_v = 0`.
//!
//! With no immune coupling the `(x, y, v)` block does not depend on `z`, and the
//! plane `z = 0` is invariant, so the reduced flow is the projection of the
//! full flow started at `z = 0`.

use nalgebra::Matrix3;

use super::{ModelParams, State};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Reduced3d {
    params: ModelParams,
}

impl Reduced3d {
    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn field(&self, s: &[f64; 3]) -> [f64; 3] {
        let p = &self.params;
        let [x, y, v] = *s;
        let infection = p.beta * x * v;
        [
            p.lambda * x * (1.0 - (x + y) / p.k) - infection,
            infection - p.gamma * y,
            p.b * p.gamma * y - infection - p.delta * v,
        ]
    }

    pub fn jacobian(&self, s: &[f64; 3]) -> Matrix3<f64> {
        let full = self.params.jacobian_array(&[s[0], s[1], s[2], 0.0]);
        Matrix3::from_fn(|r, c| full[r][c])
    }

    /// `E₀`, `E_K` and, when `b > 1`, `E*` (which may lie outside the
    /// nonnegative orthant when `R₀ < 1`).
    pub fn equilibria(&self) -> Vec<[f64; 3]> {
        let p = &self.params;
        let mut out = vec![[0.0; 3], [p.k, 0.0, 0.0]];
        if p.b > 1.0 {
            let s = crate::equilibria::virus_equilibrium(p);
            out.push([s.x, s.y, s.v]);
        }
        out
    }

    pub fn lift(&self, s: &[f64; 3]) -> State {
        State::new(s[0], s[1], s[2], 0.0)
    }
}

/// Drops the immune coupling, keeping every other rate.
pub fn reduce_3d(p: &ModelParams) -> Reduced3d {
    let mut params = *p;
    params.beta_y = 0.0;
    params.beta_v = 0.0;
    Reduced3d { params }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn virus_equilibrium_vanishes() {
        let r = reduce_3d(&ModelParams::virus_only(0.36, 0.11, 0.44, 28.0));
        let eqs = r.equilibria();
        assert_eq!(eqs.len(), 3);
        let e = eqs[2];
        for (got, want) in e.iter().zip([0.148148, 0.0431317, 2.64672]) {
            assert!((got - want).abs() < 1e-5, "{got} vs {want}");
        }
        for eq in &eqs {
            assert!(r.field(eq).iter().all(|f| f.abs() < 1e-12));
        }
    }

    #[test]
    fn block_matches_full_field_on_invariant_plane() {
        let p = ModelParams::virus_only(0.36, 0.11, 0.44, 28.0);
        let r = reduce_3d(&p);
        let s = [0.3, 0.1, 1.2];
        let full = r.params().field(&[s[0], s[1], s[2], 0.0]);
        assert_eq!(&full[..3], &r.field(&s)[..]);
        assert_eq!(full[3], 0.0);
    }
}
