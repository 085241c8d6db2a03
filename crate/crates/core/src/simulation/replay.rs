//! Open-loop replays of the identifier pieces on prescribed signals.
//!
//! These isolate the least-squares flow and the derivative observer from the
//! rest of the loop, so their convergence can be measured against exact
//! references.

use crate::identifier::{ls_flow, observer_rhs, psidot_unsaturated, LsIdentifierConfig, LsState};
use crate::internal_model::{LinearModel, PredictionModel};
use crate::numerics::{rk4_step, DenseMatrix, NumericsError};

fn pack(states: &[LsState]) -> Vec<f64> {
    let mut v = Vec::new();
    for st in states {
        v.extend_from_slice(st.s1.as_slice());
        v.extend_from_slice(&st.s2);
    }
    v
}

fn unpack(p: usize, data: &[f64]) -> Vec<LsState> {
    data.chunks(p * p + p)
        .map(|c| LsState {
            s1: DenseMatrix::from_row_major(p, p, c[..p * p].to_vec()).expect("block has p*p entries"),
            s2: c[p * p..].to_vec(),
        })
        .collect()
}

/// Integrates the least-squares flow with `ξ2` replaced by the exact
/// `η̇_d(t)`. `signals(t)` returns `(η(t), η̇_d(t))`. Returns the state at
/// each of the (increasing) `sample_times`, which are hit exactly.
pub fn replay_ls<S>(
    cfg: &LsIdentifierConfig,
    model: &LinearModel,
    signals: S,
    init: &[LsState],
    dt: f64,
    sample_times: &[f64],
) -> Result<Vec<Vec<LsState>>, NumericsError>
where
    S: Fn(f64) -> (Vec<f64>, Vec<f64>),
{
    let p = cfg.p();
    let rhs = |t: f64, y: &[f64]| {
        let (eta, etad_dot) = signals(t);
        let states = unpack(p, y);
        let mut out = Vec::with_capacity(y.len());
        for (j, st) in states.iter().enumerate() {
            let sigma = model.sigma(j, &eta);
            let (d1, d2) = ls_flow(cfg, &st.s1, &st.s2, &sigma, etad_dot[j]);
            out.extend_from_slice(d1.as_slice());
            out.extend(d2);
        }
        out
    };
    let mut y = pack(init);
    let mut t = 0.0;
    let mut out = Vec::with_capacity(sample_times.len());
    for &target in sample_times {
        let span = target - t;
        if span > 0.0 {
            let n = (span / dt).ceil() as usize;
            let h = span / n as f64;
            for k in 0..n {
                y = rk4_step(&rhs, &y, t + k as f64 * h, h)?;
            }
            t = target;
        }
        out.push(unpack(p, &y));
    }
    Ok(out)
}

/// Drives the derivative observer with `η(t)` and a frozen `θ`, so that `ψ̇`
/// mismatches `η̈_d` whenever `θ` is wrong. Returns `(t, |ξ1 − η_d|)` at
/// every step, starting from `ξ = 0`.
pub fn replay_observer<S>(
    cfg: &LsIdentifierConfig,
    model: &dyn PredictionModel,
    theta: &[f64],
    eta: S,
    t_end: f64,
    dt: f64,
) -> Result<Vec<(f64, f64)>, NumericsError>
where
    S: Fn(f64) -> Vec<f64>,
{
    let ne = model.ne();
    let d = model.eta_dim() / ne;
    let zero = vec![0.0; theta.len()];
    let rhs = |t: f64, y: &[f64]| {
        let eta_t = eta(t);
        let psidot = cfg.saturate_psidot(&psidot_unsaturated(model, &eta_t, theta, &zero));
        let (a, b) = observer_rhs(cfg, &y[..ne], &y[ne..], &eta_t[(d - 1) * ne..], &psidot);
        let mut out = a;
        out.extend(b);
        out
    };
    let steps = (t_end / dt).ceil() as usize;
    let h = t_end / steps as f64;
    let err = |t: f64, y: &[f64]| {
        let eta_t = eta(t);
        (0..ne).map(|j| (y[j] - eta_t[(d - 1) * ne + j]).powi(2)).sum::<f64>().sqrt()
    };
    let mut y = vec![0.0; 2 * ne];
    let mut out = Vec::with_capacity(steps + 1);
    out.push((0.0, err(0.0, &y)));
    for k in 0..steps {
        let t = k as f64 * h;
        y = rk4_step(&rhs, &y, t, h)?;
        out.push((t + h, err(t + h, &y)));
    }
    Ok(out)
}
