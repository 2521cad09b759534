use super::{wrap_angle, EnvState, FullState, ModelSpec};

#[inline]
fn mode(j: usize) -> f64 {
    (j + 1) as f64
}

/// `F′(x) = −Σ k a_k sin(kx)`.
pub fn eval_f_prime(x: f64, a: &[f64]) -> f64 {
    let theta = wrap_angle(x);
    -a.iter()
        .enumerate()
        .map(|(j, &ak)| mode(j) * ak * (mode(j) * theta).sin())
        .sum::<f64>()
}

/// Derivative of the static potential `G(x) = Σ a_k (u0_k cos kx + v0_k sin kx)`.
pub fn eval_g_prime(x: f64, spec: &ModelSpec) -> f64 {
    let theta = wrap_angle(x);
    spec.a
        .iter()
        .zip(spec.u0.iter().zip(&spec.v0))
        .enumerate()
        .map(|(j, (&ak, (&uk, &vk)))| {
            let k = mode(j);
            let (sin, cos) = (k * theta).sin_cos();
            ak * k * (vk * cos - uk * sin)
        })
        .sum()
}

/// Drift of the displacement in the reduced system,
/// `Σ j a_j (sin(jx) u_j − cos(jx) v_j)`.
pub fn reduced_drift(state: &FullState, a: &[f64]) -> f64 {
    let theta = state.theta();
    a.iter()
        .enumerate()
        .map(|(j, &aj)| {
            let k = mode(j);
            let (sin, cos) = (k * theta).sin_cos();
            k * aj * (sin * state.u[j] - cos * state.v[j])
        })
        .sum()
}

/// `g(c, s) = Σ k a_k s_k`, the displacement drift in environment coordinates.
pub fn g_observable(env: &EnvState, a: &[f64]) -> f64 {
    a.iter()
        .zip(&env.s)
        .enumerate()
        .map(|(j, (&ak, &sk))| mode(j) * ak * sk)
        .sum()
}

/// `h(c, s) = Σ a_k c_k`.
pub fn h_observable(env: &EnvState, a: &[f64]) -> f64 {
    a.iter().zip(&env.c).map(|(&ak, &ck)| ak * ck).sum()
}

/// Potential seen from the particle, `η(x) = Σ a_k (c_k cos kx − s_k sin kx)`.
pub fn eta_eval(env: &EnvState, a: &[f64], x: f64) -> f64 {
    let theta = wrap_angle(x);
    a.iter()
        .enumerate()
        .map(|(j, &ak)| {
            let (sin, cos) = (mode(j) * theta).sin_cos();
            ak * (env.c[j] * cos - env.s[j] * sin)
        })
        .sum()
}

/// `‖h‖²_{L²(π)} = Σ a_j / j²`.
pub fn h_norm_squared(a: &[f64]) -> f64 {
    a.iter()
        .enumerate()
        .map(|(j, &aj)| aj / (mode(j) * mode(j)))
        .sum()
}

/// Closed-form bounds `(1, 1 + 2 Σ a_j / j²)` on the effective variance.
pub fn sigma2_bounds(a: &[f64]) -> (f64, f64) {
    (1.0, 1.0 + 2.0 * h_norm_squared(a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::full_to_env;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn f_prime_values() {
        assert_eq!(eval_f_prime(0.0, &[1.0, 2.0, 3.0]), 0.0);
        assert!((eval_f_prime(FRAC_PI_2, &[2.0]) + 2.0).abs() < 1e-15);
    }

    #[test]
    fn g_and_h_values() {
        let a = [1.0, 0.5];
        assert_eq!(g_observable(&EnvState::zeros(2), &a), 0.0);
        assert_eq!(h_observable(&EnvState::zeros(2), &a), 0.0);
        let env = EnvState {
            c: vec![1.0, 1.0],
            s: vec![1.0, 1.0],
        };
        assert_eq!(g_observable(&env, &a), 2.0);
        assert_eq!(h_observable(&env, &a), 1.5);
    }

    #[test]
    fn eta_values() {
        let a = [1.0];
        let env = EnvState {
            c: vec![1.0],
            s: vec![0.0],
        };
        assert!((eta_eval(&env, &a, 0.0) - 1.0).abs() < 1e-15);
        let env = EnvState {
            c: vec![0.0],
            s: vec![1.0],
        };
        assert!((eta_eval(&env, &a, FRAC_PI_2) + 1.0).abs() < 1e-15);
        assert!((eta_eval(&env, &a, FRAC_PI_2 + 2.0 * PI) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn sigma2_bound_values() {
        assert_eq!(sigma2_bounds(&[1.0]), (1.0, 3.0));
        assert_eq!(sigma2_bounds(&[1.0, 0.5]), (1.0, 3.25));
        assert_eq!(sigma2_bounds(&[2.0]), (1.0, 5.0));
    }

    #[test]
    fn g_prime_matches_reduced_drift_at_origin() {
        // At t = 0 the reduced drift is exactly −G′(0).
        let spec = ModelSpec::new(vec![1.0, 0.5], vec![0.3, -0.7], vec![1.1, 0.2]).unwrap();
        for x in [0.0, 0.4, -2.0, 7.5] {
            let st = FullState {
                x,
                u: spec.u0.clone(),
                v: spec.v0.clone(),
            };
            assert!((reduced_drift(&st, &spec.a) + eval_g_prime(x, &spec)).abs() < 1e-13);
        }
    }

    fn coeffs() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.01f64..5.0, 1..6)
    }

    proptest! {
        #[test]
        fn f_prime_is_odd_and_periodic(x in -50.0f64..50.0, a in coeffs()) {
            prop_assert!((eval_f_prime(x, &a) + eval_f_prime(-x, &a)).abs() < 1e-9);
            prop_assert!((eval_f_prime(x, &a) - eval_f_prime(x + 2.0 * PI, &a)).abs() < 1e-9);
        }

        #[test]
        fn g_in_env_coordinates_is_the_reduced_drift(
            x in -100.0f64..100.0,
            uv in prop::collection::vec(-5.0f64..5.0, 8),
            a in prop::collection::vec(0.01f64..5.0, 4),
        ) {
            let st = FullState { x, u: uv[..4].to_vec(), v: uv[4..].to_vec() };
            let env = full_to_env(&st);
            prop_assert!((g_observable(&env, &a) - reduced_drift(&st, &a)).abs() < 1e-11);
        }

        #[test]
        fn eta_slope_at_origin_is_minus_g(
            cs in prop::collection::vec(-3.0f64..3.0, 6),
            a in prop::collection::vec(0.01f64..3.0, 3),
        ) {
            let env = EnvState { c: cs[..3].to_vec(), s: cs[3..].to_vec() };
            let step = 1e-4;
            let slope = (eta_eval(&env, &a, step) - eta_eval(&env, &a, -step)) / (2.0 * step);
            prop_assert!((slope + g_observable(&env, &a)).abs() < 1e-6);
        }

        #[test]
        fn upper_bound_is_monotone(a in coeffs(), idx in 0usize..6, bump in 0.001f64..1.0) {
            let (lo, hi) = sigma2_bounds(&a);
            prop_assert!(lo <= hi);
            let mut b = a.clone();
            let i = idx % b.len();
            b[i] += bump;
            prop_assert!(sigma2_bounds(&b).1 > hi);
        }
    }
}
