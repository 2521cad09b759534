use super::{EnvState, FullState};

/// Rotates `(u_j, v_j)` into the particle frame:
/// `c_j = u_j cos(jx) + v_j sin(jx)`, `s_j = u_j sin(jx) − v_j cos(jx)`.
pub fn full_to_env(state: &FullState) -> EnvState {
    let theta = state.theta();
    let (c, s) = state
        .u
        .iter()
        .zip(&state.v)
        .enumerate()
        .map(|(j, (&u, &v))| {
            let (sin, cos) = (((j + 1) as f64) * theta).sin_cos();
            (u * cos + v * sin, u * sin - v * cos)
        })
        .unzip();
    EnvState { c, s }
}

/// Inverse of [`full_to_env`] at displacement `x`.
pub fn env_to_full(env: &EnvState, x: f64) -> FullState {
    let theta = super::wrap_angle(x);
    let (u, v) = env
        .c
        .iter()
        .zip(&env.s)
        .enumerate()
        .map(|(j, (&c, &s))| {
            let (sin, cos) = (((j + 1) as f64) * theta).sin_cos();
            (c * cos + s * sin, c * sin - s * cos)
        })
        .unzip();
    FullState { x, u, v }
}
