//! The five subcommands. Each takes the resolved configuration and an
//! output context, runs the corresponding pipeline stage, and writes
//! CSV/JSON (and optional SVG) artifacts into the output directory.

use serde_json::{json, Value};

use mpemba_core::asymmetry::{entanglement_asymmetry, AsymmetryCurve, CurveLabel, GaussianFit};
use mpemba_core::basis::Geometry;
use mpemba_core::dynamics::{time_grid, DensityMatrix, EnsembleSpec, EvolutionEngine};
use mpemba_core::krylov::{
    charge_transfer_pair, correlation_direct, correlation_krylov, lanczos_chain, phi_evolve,
    ChainMode,
};
use mpemba_core::model::{full_hamiltonian, ModelParams};
use mpemba_core::spectra::{gap_histogram, ChainSpectra};
use mpemba_core::states::{qos_initial_state, qtb_initial_state, PureState};
use mpemba_core::theory::{
    dephased_bath, per_m_timescale, predict_offdiagonal, OffdiagElement,
};
use mpemba_core::C64;

use crate::config::RunConfig;
use crate::output::{sig, OutputContext, Plot};
use crate::CliError;

/// Krylov chains stop at this depth if no natural breakdown occurs.
const MAX_CHAIN_DEPTH: usize = 64;

/// Chain overlaps below this threshold count as zero when locating the
/// first Krylov shell reached by the target operator.
const OVERLAP_THRESHOLD: f64 = 1e-10;

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

struct RunSetup {
    params: ModelParams<f64>,
    geometry: Geometry,
    times: Vec<f64>,
    ensemble: EnsembleSpec<f64>,
}

fn setup(config: &RunConfig) -> Result<RunSetup, CliError> {
    let params = ModelParams::new(config.model.j, config.model.h, config.model.l)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let [first, last] = config.geometry.qos_sites;
    let geometry = Geometry::new(config.model.l, first, last)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let times = time_grid(config.time.t_max, config.time.n_points)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let e = &config.ensemble;
    let ensemble = EnsembleSpec::new(e.n_samples, e.dt_min, e.dt_max, e.seed)
        .map_err(|e| CliError::Config(e.to_string()))?;
    Ok(RunSetup { params, geometry, times, ensemble })
}

/// Pre-quench bath factor: the pair-structured bath when the bath has
/// an even number of sites, otherwise a tilted product at the same
/// angle (pairs need two sites each).
fn bath_state(theta_b: f64, bath_len: usize) -> Result<PureState<f64>, CliError> {
    if bath_len.is_multiple_of(2) {
        qtb_initial_state(theta_b, bath_len).map_err(runtime)
    } else {
        qos_initial_state(theta_b, bath_len).map_err(runtime)
    }
}

fn asymmetry_values(series: &[DensityMatrix<f64>]) -> Result<Vec<f64>, CliError> {
    series
        .iter()
        .map(|rho| entanglement_asymmetry(rho).map_err(runtime))
        .collect()
}

fn ensemble_curve(
    engine: &EvolutionEngine<f64>,
    setup: &RunSetup,
    theta_s: f64,
    theta_b: f64,
) -> Result<Vec<DensityMatrix<f64>>, CliError> {
    let qos = qos_initial_state(theta_s, setup.geometry.qos_len()).map_err(runtime)?;
    let bath = bath_state(theta_b, setup.geometry.bath_len())?;
    engine
        .ensemble_reduced_with(&qos, &bath, &setup.ensemble, &setup.times)
        .map_err(runtime)
}

fn curve_label(setup: &RunSetup, theta_s: f64, theta_b: f64) -> CurveLabel<f64> {
    CurveLabel {
        theta_s,
        theta_b,
        n_samples: setup.ensemble.n_samples,
        dt_min: setup.ensemble.dt_min,
        dt_max: setup.ensemble.dt_max,
        seed: setup.ensemble.seed,
    }
}

fn fit_json(fit: &Result<GaussianFit<f64>, impl std::fmt::Display>) -> Value {
    match fit {
        Ok(f) => json!({
            "amplitude": f.amplitude,
            "timescale": f.timescale,
            "residual": f.residual,
            "window": [f.window.0, f.window.1],
        }),
        Err(e) => json!({ "fit_error": e.to_string() }),
    }
}

/// Relaxation curves `ΔS(t)` for every angle combination, plus
/// Gaussian-decay fits.
pub fn relax(config: &RunConfig, out: &OutputContext) -> Result<(), CliError> {
    let setup = setup(config)?;
    let engine = EvolutionEngine::new(setup.params, setup.geometry)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let mut fits = Vec::new();
    let mut plot = Plot::new("entanglement-asymmetry relaxation", "t", "delta_s");
    for &theta_s in &config.init.theta_s {
        for &theta_b in &config.init.theta_b {
            let series = ensemble_curve(&engine, &setup, theta_s, theta_b)?;
            let values = asymmetry_values(&series)?;
            let rows = setup
                .times
                .iter()
                .zip(&values)
                .map(|(&t, &v)| format!("{},{}", sig(t), sig(v)));
            out.write_csv(
                &format!("relax_{theta_s:.4}_{theta_b:.4}.csv"),
                "t,delta_s",
                rows,
            )?;
            let curve = AsymmetryCurve::new(
                setup.times.clone(),
                values.clone(),
                curve_label(&setup, theta_s, theta_b),
            )
            .map_err(runtime)?;
            let fit = curve.fit(config.analysis.fit_floor);
            fits.push(json!({
                "theta_s": theta_s,
                "theta_b": theta_b,
                "fit": fit_json(&fit),
            }));
            plot.add_series(
                format!("θs={theta_s:.3} θb={theta_b:.3}"),
                setup.times.iter().copied().zip(values).collect(),
            );
        }
    }
    out.write_json(
        "relax_fits.json",
        json!({ "fit_floor": config.analysis.fit_floor, "curves": fits }),
    )?;
    if config.output.emit_svg {
        out.write_svg("relax.svg", &plot)?;
    }
    Ok(())
}

/// Runs the two positionally paired `(θ_s, θ_b)` configurations and
/// reports whether the initially more asymmetric one relaxes past the
/// other.
pub fn qme(config: &RunConfig, out: &OutputContext) -> Result<(), CliError> {
    if config.init.theta_s.len() < 2 || config.init.theta_b.len() < 2 {
        return Err(CliError::Config(
            "qme needs two (theta_s, theta_b) pairs: init.theta_s and init.theta_b \
             must each hold at least two entries (paired by position)"
                .into(),
        ));
    }
    let setup = setup(config)?;
    let engine = EvolutionEngine::new(setup.params, setup.geometry)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let pairs = [
        (config.init.theta_s[0], config.init.theta_b[0]),
        (config.init.theta_s[1], config.init.theta_b[1]),
    ];
    let mut curves = Vec::new();
    for &(theta_s, theta_b) in &pairs {
        let values = asymmetry_values(&ensemble_curve(&engine, &setup, theta_s, theta_b)?)?;
        curves.push(
            AsymmetryCurve::new(
                setup.times.clone(),
                values,
                curve_label(&setup, theta_s, theta_b),
            )
            .map_err(runtime)?,
        );
    }
    let verdict = mpemba_core::asymmetry::detect_mpemba(&curves[0], &curves[1]).map_err(runtime)?;
    let rows = setup
        .times
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            format!(
                "{},{},{}",
                sig(t),
                sig(curves[0].values[k]),
                sig(curves[1].values[k])
            )
        });
    out.write_csv("qme_curves.csv", "t,delta_s_first,delta_s_second", rows)?;
    out.write_json(
        "qme_verdict.json",
        json!({
            "first": { "theta_s": pairs[0].0, "theta_b": pairs[0].1 },
            "second": { "theta_s": pairs[1].0, "theta_b": pairs[1].1 },
            "occurs": verdict.occurs,
            "mpemba_time": verdict.mpemba_time,
            "margin": verdict.margin,
        }),
    )?;
    if config.output.emit_svg {
        let mut plot = Plot::new("anomalous relaxation comparison", "t", "delta_s");
        for (curve, &(ts, tb)) in curves.iter().zip(&pairs) {
            plot.add_series(
                format!("θs={ts:.3} θb={tb:.3}"),
                setup.times.iter().copied().zip(curve.values.iter().copied()).collect(),
            );
        }
        out.write_svg("qme.svg", &plot)?;
    }
    Ok(())
}

/// Per-sector spectral statistics plus weighted gap histograms for the
/// configured matrix element, one file per bath charge block.
pub fn spectra(config: &RunConfig, out: &OutputContext) -> Result<(), CliError> {
    let setup = setup(config)?;
    let (bra, ket) = config.element()?;
    let chain = ChainSpectra::full_chain(&setup.params).map_err(runtime)?;

    let sector_rows = (0..=config.model.l).map(|n_up| {
        let e = &chain.sector(n_up).eigenvalues;
        let dim = e.len();
        let mean: f64 = e.iter().sum::<f64>() / dim as f64;
        let variance: f64 = e.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / dim as f64;
        format!("{n_up},{dim},{},{}", sig(mean), sig(variance))
    });
    out.write_csv(
        "sector_variance.csv",
        "n_up,dim,mean_energy,energy_variance",
        sector_rows,
    )?;

    let element = OffdiagElement { bra, ket };
    let (q1, q2) = (bra.n_up(), ket.n_up());
    let mut plot = Plot::new("weighted gap density by bath charge", "omega", "density");
    for m in 0..=setup.geometry.bath_len() {
        if q1 + m > config.model.l || q2 + m > config.model.l {
            break;
        }
        let weights = mpemba_core::theory::transition_weights(&chain, &setup.geometry, element, m)
            .map_err(runtime)?;
        let (a, b) = (chain.sector(q1 + m), chain.sector(q2 + m));
        let span = (b.eigenvalues[b.eigenvalues.len() - 1] - a.eigenvalues[0])
            - (b.eigenvalues[0] - a.eigenvalues[a.eigenvalues.len() - 1]);
        let width = if span > 0.0 {
            Some(span / config.analysis.delta_omega_bins as f64)
        } else {
            None
        };
        let histogram = gap_histogram(a, b, width, Some(&weights)).map_err(runtime)?;
        let mean_weight = histogram.mean_weight.as_ref().expect("weights were supplied");
        let weighted = histogram.weighted_density.as_ref().expect("weights were supplied");
        let rows = (0..histogram.centers.len()).map(|k| {
            format!(
                "{},{},{},{},{},{}",
                sig(histogram.centers[k]),
                histogram.counts[k],
                sig(histogram.n_pair[k]),
                sig(histogram.n_level[k]),
                sig(mean_weight[k]),
                sig(weighted[k]),
            )
        });
        out.write_csv(
            &format!("element_gaps_m{m}.csv"),
            "omega,count,pair_density,level_density,mean_weight,weighted_density",
            rows,
        )?;
        plot.add_series(
            format!("m={m}"),
            histogram
                .centers
                .iter()
                .copied()
                .zip(weighted.iter().copied())
                .collect(),
        );
    }
    if config.output.emit_svg {
        out.write_svg("spectra.svg", &plot)?;
    }
    Ok(())
}

/// Operator-space Lanczos chains for the window charge transfers
/// `q' ∈ {0, 1, 2}`, the reconstructed-versus-direct correlators, and
/// the suppression summary.
pub fn krylov(config: &RunConfig, out: &OutputContext) -> Result<(), CliError> {
    if config.model.l > 8 {
        return Err(CliError::Config(format!(
            "krylov builds dense operators over 4^L entries; model.l = {} exceeds the supported 8",
            config.model.l
        )));
    }
    if config.qos_len() < 3 {
        return Err(CliError::Config(
            "krylov sweeps charge transfers up to q' = 2 and needs a window of at least 3 sites"
                .into(),
        ));
    }
    let setup = setup(config)?;
    let hamiltonian = full_hamiltonian(&setup.params).map_err(runtime)?;
    let mut correlation_rows = Vec::new();
    let mut suppression = Vec::new();
    let mut plot = Plot::new("charge-transfer correlators", "t", "abs_c");
    for q_prime in 0..=2usize {
        let (seed, target) = charge_transfer_pair(&setup.geometry, q_prime).map_err(runtime)?;
        let chain = lanczos_chain(
            &hamiltonian,
            &seed,
            &target,
            MAX_CHAIN_DEPTH,
            ChainMode::Generalized,
        )
        .map_err(runtime)?;
        let evolution = phi_evolve(&chain, &setup.times).map_err(runtime)?;
        let reconstructed = correlation_krylov(&chain, &evolution).map_err(runtime)?;
        let direct =
            correlation_direct(&hamiltonian, &seed, &target, &setup.times).map_err(runtime)?;

        let chain_rows = (0..chain.depth()).map(|n| {
            let b = if n == 0 { 0.0 } else { chain.b[n - 1] };
            format!(
                "{n},{},{},{},{}",
                sig(chain.a[n]),
                sig(b),
                sig(chain.overlaps[n].re),
                sig(chain.overlaps[n].im),
            )
        });
        out.write_csv(
            &format!("krylov_chain_q{q_prime}.csv"),
            "n,a_n,b_n,re_c,im_c",
            chain_rows,
        )?;

        for (k, &t) in setup.times.iter().enumerate() {
            correlation_rows.push(format!(
                "{},{},{},{},{},{q_prime}",
                sig(t),
                sig(direct[k].re),
                sig(direct[k].im),
                sig(reconstructed[k].re),
                sig(reconstructed[k].im),
            ));
        }
        let max_abs = direct.iter().map(|c| c.norm()).fold(0.0, f64::max);
        suppression.push(json!({
            "q_prime": q_prime,
            "max_abs_correlation": max_abs,
            "min_overlap_depth": chain.min_overlap_depth(OVERLAP_THRESHOLD),
        }));
        plot.add_series(
            format!("q'={q_prime}"),
            setup
                .times
                .iter()
                .copied()
                .zip(direct.iter().map(|c| c.norm()))
                .collect(),
        );
    }
    out.write_csv(
        "krylov_correlation.csv",
        "t,re_direct,im_direct,re_krylov,im_krylov,qprime",
        correlation_rows,
    )?;
    out.write_json("krylov_suppression.json", json!({ "entries": suppression }))?;
    if config.output.emit_svg {
        out.write_svg("krylov.svg", &plot)?;
    }
    Ok(())
}

/// Dephased-bath prediction for the configured element, block by
/// block, next to the ensemble-simulated element.
pub fn theory(config: &RunConfig, out: &OutputContext) -> Result<(), CliError> {
    let setup = setup(config)?;
    let (bra, ket) = config.element()?;
    let element = OffdiagElement { bra, ket };
    let theta_s = config.init.theta_s[0];
    let theta_b = config.init.theta_b[0];
    let qos = qos_initial_state(theta_s, setup.geometry.qos_len()).map_err(runtime)?;
    let bath = bath_state(theta_b, setup.geometry.bath_len())?;

    let chain = ChainSpectra::full_chain(&setup.params).map_err(runtime)?;
    let prediction = predict_offdiagonal(
        &chain,
        &setup.geometry,
        &qos,
        &dephased_bath(&bath),
        element,
        &setup.times,
        None,
    )
    .map_err(runtime)?;

    let mut per_m_rows = Vec::new();
    for (m, series) in &prediction.per_m {
        for (k, &t) in setup.times.iter().enumerate() {
            per_m_rows.push(format!(
                "{m},{},{},{},{}",
                sig(t),
                sig(series[k].re),
                sig(series[k].im),
                sig(series[k].norm()),
            ));
        }
    }
    out.write_csv("theory_per_m.csv", "m,t,re,im,abs", per_m_rows)?;

    let engine = EvolutionEngine::new(setup.params, setup.geometry)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let simulated: Vec<C64> = engine
        .ensemble_reduced_with(&qos, &bath, &setup.ensemble, &setup.times)
        .map_err(runtime)?
        .iter()
        .map(|rho| rho.element(bra, ket))
        .collect();
    let rows = setup.times.iter().enumerate().map(|(k, &t)| {
        let p = prediction.total[k];
        let s = simulated[k];
        format!(
            "{},{},{},{},{},{},{}",
            sig(t),
            sig(p.re),
            sig(p.im),
            sig(p.norm()),
            sig(s.re),
            sig(s.im),
            sig(s.norm()),
        )
    });
    out.write_csv(
        "theory_vs_sim.csv",
        "t,re_theory,im_theory,abs_theory,re_sim,im_sim,abs_sim",
        rows,
    )?;

    let per_m_fits: Vec<Value> = per_m_timescale(&prediction, config.analysis.fit_floor)
        .iter()
        .map(|(m, fit)| json!({ "m": m, "fit": fit_json(fit) }))
        .collect();
    let magnitudes: Vec<f64> = prediction.total.iter().map(|z| z.norm()).collect();
    let total_fit = mpemba_core::asymmetry::fit_gaussian_decay(
        &setup.times,
        &magnitudes,
        config.analysis.fit_floor,
    );
    let max_deviation = simulated
        .iter()
        .zip(&prediction.total)
        .map(|(s, p)| (s - p).norm())
        .fold(0.0, f64::max);
    out.write_json(
        "theory_fits.json",
        json!({
            "theta_s": theta_s,
            "theta_b": theta_b,
            "element": { "bra": config.analysis.element.bra, "ket": config.analysis.element.ket },
            "per_m": per_m_fits,
            "total_magnitude_fit": fit_json(&total_fit),
            "max_abs_deviation_sim_vs_theory": max_deviation,
        }),
    )?;
    if config.output.emit_svg {
        let mut plot = Plot::new("predicted vs simulated element", "t", "abs_element");
        plot.add_series(
            "theory".into(),
            setup.times.iter().copied().zip(magnitudes).collect(),
        );
        plot.add_series(
            "simulation".into(),
            setup
                .times
                .iter()
                .copied()
                .zip(simulated.iter().map(|z| z.norm()))
                .collect(),
        );
        out.write_svg("theory.svg", &plot)?;
    }
    Ok(())
}
