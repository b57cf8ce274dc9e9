//! Evolution engines: four independent routes from parameters to the same
//! covariance history, reduced to CSV-ready rows.
//!
//! Rows always report the co-rotating (half-angle) sum/difference frame, in
//! which the measurement-squeezed pair is diagonal, so the columns are
//! directly comparable across static and rotating runs.

use nalgebra::{DMatrix, Matrix4};

use spinlight::analytic::{a_plus_minus, lossy_norot_covariances};
use spinlight::entanglement::{geof, log_neg_diagonal_sd, log_negativity};
use spinlight::gaussian::{
    check_physical, counter_rotated_cov, to_sum_diff_basis, SymplecticForm,
};
use spinlight::riccati::{integrate_ode_sampled, solve_doubling, RiccatiProblem};
use spinlight::{PhysicalParams, SliceSimulator};

use crate::config::{Engine, Reduce};
use crate::CliError;

/// Physicality tolerance applied to every sampled covariance.
const GATE_TOL: f64 = 1e-6;
/// Rough number of rows an evolve run aims for.
const TARGET_ROWS: usize = 400;
/// Entanglement is considered dead below this once it was alive.
const DEATH_FLOOR: f64 = 1e-6;
/// Entanglement counts as alive above this.
const ALIVE_LEVEL: f64 = 1e-3;

#[derive(Debug)]
pub struct EvolveRow {
    pub t: f64,
    pub kappa_sq_t: f64,
    pub theta: f64,
    /// Sum/difference diagonals (x₊, x₋, p₊, p₋) in the co-rotating frame.
    pub g_sd: [f64; 4],
    pub delta: f64,
    pub geof: f64,
    pub logneg: f64,
}

/// Accumulated coupling κ²_t = ∫₀ᵗ κ̃²e^{−ηs} ds.
fn accumulated_coupling(params: &PhysicalParams, t: f64) -> f64 {
    if params.eta == 0.0 {
        params.kappa_sq_rate * t
    } else {
        -params.kappa_sq_rate / params.eta * (-params.eta * t).exp_m1()
    }
}

fn runtime(e: spinlight::Error) -> CliError {
    CliError::Runtime(e.to_string())
}

fn row_from_lab_cov(
    cov: &Matrix4<f64>,
    params: &PhysicalParams,
    t: f64,
) -> Result<EvolveRow, CliError> {
    let dyn_cov = DMatrix::from_column_slice(4, 4, cov.as_slice());
    let ok = check_physical(&dyn_cov, &SymplecticForm::interleaved(2), GATE_TOL)
        .map_err(runtime)?;
    if !ok {
        return Err(CliError::Runtime(format!(
            "covariance failed the physicality check at t = {t}"
        )));
    }
    let theta = params.omega * t;
    let frame = counter_rotated_cov(cov, theta);
    let sd = to_sum_diff_basis(&frame);
    let g_sd = [sd[(0, 0)], sd[(1, 1)], sd[(2, 2)], sd[(3, 3)]];
    let delta = (sd[(1, 1)] * sd[(2, 2)]).max(0.0).sqrt();
    Ok(EvolveRow {
        t,
        kappa_sq_t: accumulated_coupling(params, t),
        theta,
        g_sd,
        delta,
        geof: geof(delta).map_err(runtime)?,
        logneg: log_negativity(&frame).map_err(runtime)?,
    })
}

fn row_from_sd_diagonal(
    g_sd: [f64; 4],
    params: &PhysicalParams,
    t: f64,
) -> Result<EvolveRow, CliError> {
    let delta = (g_sd[1] * g_sd[2]).sqrt();
    Ok(EvolveRow {
        t,
        kappa_sq_t: accumulated_coupling(params, t),
        theta: params.omega * t,
        g_sd,
        delta,
        geof: geof(delta).map_err(runtime)?,
        logneg: log_neg_diagonal_sd(g_sd[0], g_sd[1], g_sd[2], g_sd[3]).map_err(runtime)?,
    })
}

pub fn evolve_series(
    params: &PhysicalParams,
    t_end: f64,
    engine: Engine,
) -> Result<Vec<EvolveRow>, CliError> {
    match engine {
        Engine::Discrete => discrete_series(params, t_end),
        Engine::Ode => ode_series(params, t_end),
        Engine::Doubling => doubling_series(params, t_end),
        Engine::Analytic => analytic_series(params, t_end),
    }
}

fn discrete_series(params: &PhysicalParams, t_end: f64) -> Result<Vec<EvolveRow>, CliError> {
    let n = ((t_end / params.tau).ceil() as usize).max(1);
    let every = (n / TARGET_ROWS).max(1);
    let mut sim = SliceSimulator::new(*params).map_err(runtime)?;
    let mut rows = vec![row_from_lab_cov(&sim.state().cov, params, 0.0)?];
    for i in 1..=n {
        sim.step_deterministic().map_err(runtime)?;
        if i % every == 0 || i == n {
            rows.push(row_from_lab_cov(&sim.state().cov, params, sim.time())?);
        }
    }
    Ok(rows)
}

/// Step size small enough for the stiffest of measurement, rotation and
/// decay time scales.
fn stable_dt(params: &PhysicalParams, t_end: f64) -> f64 {
    let mut dt = 1e-3 / params.kappa_sq_rate.max(1.0);
    dt = dt.min(5e-3 / params.omega.abs().max(1.0));
    if params.eta > 0.0 {
        dt = dt.min(1e-2 / params.eta);
    }
    dt.min(t_end)
}

fn ode_series(params: &PhysicalParams, t_end: f64) -> Result<Vec<EvolveRow>, CliError> {
    let problem = RiccatiProblem::lossy(params);
    let dt = stable_dt(params, t_end);
    let steps = (t_end / dt).ceil() as usize;
    let every = (steps / TARGET_ROWS).max(1);
    let series = integrate_ode_sampled(&problem, &Matrix4::identity(), t_end, dt, every)
        .map_err(runtime)?;
    series
        .iter()
        .map(|(t, cov)| row_from_lab_cov(cov, params, t))
        .collect()
}

fn doubling_series(params: &PhysicalParams, t_end: f64) -> Result<Vec<EvolveRow>, CliError> {
    if params.eta > 0.0 {
        return Err(CliError::Usage(
            "engine 'doubling' integrates time-independent flows only — \
             constant coefficients required; with eta > 0 use 'ode' or 'discrete'"
                .into(),
        ));
    }
    let problem = RiccatiProblem::lossy(params);
    let n = 200;
    (0..=n)
        .map(|i| {
            let t = t_end * i as f64 / n as f64;
            let cov = solve_doubling(&problem, &Matrix4::identity(), t).map_err(runtime)?;
            row_from_lab_cov(&cov, params, t)
        })
        .collect()
}

fn analytic_series(params: &PhysicalParams, t_end: f64) -> Result<Vec<EvolveRow>, CliError> {
    if params.omega != 0.0 && params.eta > 0.0 {
        return Err(CliError::Usage(
            "engine 'analytic' has closed forms for rotation without decay or decay \
             without rotation, not both; use 'ode' or 'discrete'"
                .into(),
        ));
    }
    let n = TARGET_ROWS;
    (0..=n)
        .map(|i| {
            let t = t_end * i as f64 / n as f64;
            let g_sd = if params.eta > 0.0 {
                let alpha0 = params.kappa_sq_rate / params.eta;
                let (g11, g22, g33, g44) = lossy_norot_covariances(alpha0, params.eta * t);
                [g11, g22, g33, g44]
            } else {
                let (ap, am) = a_plus_minus(params.kappa_sq_rate * t, params.omega * t);
                [ap, 1.0 / am, 1.0 / ap, am]
            };
            row_from_sd_diagonal(g_sd, params, t)
        })
        .collect()
}

/// One sweep cell collapsed per the requested reduction; `None` cells mean
/// the feature (e.g. entanglement death) did not occur in the window.
pub struct CellResult {
    pub t: Option<f64>,
    pub delta: Option<f64>,
    pub geof: Option<f64>,
    pub logneg: Option<f64>,
}

impl CellResult {
    fn from_row(row: &EvolveRow) -> Self {
        CellResult {
            t: Some(row.t),
            delta: Some(row.delta),
            geof: Some(row.geof),
            logneg: Some(row.logneg),
        }
    }

    fn empty() -> Self {
        CellResult {
            t: None,
            delta: None,
            geof: None,
            logneg: None,
        }
    }
}

pub fn reduce_series(rows: &[EvolveRow], reduce: Reduce) -> CellResult {
    match reduce {
        Reduce::Final => rows.last().map(CellResult::from_row).unwrap_or_else(CellResult::empty),
        Reduce::Peak => {
            let mut best: Option<&EvolveRow> = None;
            for row in rows {
                if best.map_or(true, |b| row.geof > b.geof) {
                    best = Some(row);
                }
            }
            best.map(CellResult::from_row).unwrap_or_else(CellResult::empty)
        }
        Reduce::Death => {
            let mut alive = false;
            for row in rows {
                if row.geof > ALIVE_LEVEL {
                    alive = true;
                }
                if alive && row.geof < DEATH_FLOOR {
                    return CellResult::from_row(row);
                }
            }
            CellResult::empty()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lossless(kappa_sq: f64, omega: f64) -> PhysicalParams {
        PhysicalParams::lossless(kappa_sq)
            .unwrap()
            .with_omega(omega)
    }

    #[test]
    fn engines_agree_on_a_static_lossless_run() {
        let params = lossless(1.0, 0.0);
        let ode = evolve_series(&params, 2.0, Engine::Ode).unwrap();
        let doubling = evolve_series(&params, 2.0, Engine::Doubling).unwrap();
        let analytic = evolve_series(&params, 2.0, Engine::Analytic).unwrap();
        for series in [&ode, &doubling, &analytic] {
            let last = series.last().unwrap();
            assert!((last.g_sd[0] - 5.0).abs() < 1e-6, "x₊ variance {}", last.g_sd[0]);
            assert!((last.g_sd[2] - 0.2).abs() < 1e-6, "p₊ variance {}", last.g_sd[2]);
            assert!((last.logneg - 5.0f64.log2()).abs() < 1e-6);
        }
    }

    #[test]
    fn discrete_engine_tracks_the_closed_form() {
        let params = lossless(1.0, 4.0).with_tau(1e-3);
        let rows = evolve_series(&params, 1.0, Engine::Discrete).unwrap();
        let reference = evolve_series(&params, 1.0, Engine::Analytic).unwrap();
        let last = rows.last().unwrap();
        let want = reference.last().unwrap();
        assert!((last.t - want.t).abs() < 1e-9);
        for k in 0..4 {
            let rel = ((last.g_sd[k] - want.g_sd[k]) / want.g_sd[k]).abs();
            assert!(rel < 1e-2, "sd diagonal {k}: {} vs {}", last.g_sd[k], want.g_sd[k]);
        }
    }

    #[test]
    fn zero_coupling_stays_flat_and_separable() {
        let params = lossless(0.0, 0.0);
        for engine in [Engine::Discrete, Engine::Ode, Engine::Doubling, Engine::Analytic] {
            let rows = evolve_series(&params, 1.0, engine).unwrap();
            for row in rows {
                assert_eq!(row.geof, 0.0);
                assert!((row.delta - 1.0).abs() < 1e-12);
                assert!(row.logneg.abs() < 1e-9);
            }
        }
    }

    #[test]
    fn doubling_rejects_decaying_probes() {
        let params = PhysicalParams::from_optical_density(10.0, 1.0).unwrap();
        let err = evolve_series(&params, 0.5, Engine::Doubling).unwrap_err();
        assert!(err.message().contains("constant coefficients required"));
    }

    #[test]
    fn death_reduction_finds_the_crossing() {
        let params = PhysicalParams::from_optical_density(100.0, 1.0).unwrap();
        let rows = evolve_series(&params, 3.0, Engine::Ode).unwrap();
        let death = reduce_series(&rows, Reduce::Death);
        let t = death.t.expect("the absorbing probe must disentangle in time");
        assert!((0.5..2.5).contains(&t), "death at {t}");
        let peak = reduce_series(&rows, Reduce::Peak);
        assert!(peak.geof.unwrap() > 0.9);
        assert!(peak.t.unwrap() < t);
    }
}
