//! Scenario execution. Everything written is a pure function of the resolved
//! configuration (and, for `radiate`, the input snapshot), so a run can be
//! replayed byte for byte from its manifest.

use std::f64::consts::{FRAC_PI_2, TAU};
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use oamring::dynamics::{
    bunching, default_initial_state, edge_width, evolve, mean_angular_velocity, populations,
};
use oamring::potential::{
    dispersion_coefficients, pair_potential, quadrature_grid_size, rate_coefficients, CONVERGENCE_TOLERANCE,
};
use oamring::radiation::{azimuthal_intensity, averaged_intensity, count_periodic_maxima, pattern_from_bunching};
use oamring::rate_model::{delay_time, evolve_rates, two_state_analytic};
use oamring::stability::{classify_regime, spectrum_sweep};
use oamring::{
    BunchingSpectrum, Complex64, DispersionCoefficients, FourierPotential, OdeControls, RateCoefficients,
    RateState, SeedMode, StabilitySpectrum, StateVector, SystemParams,
};

use crate::config::{Entry, Override, Preset, RunConfig, Scenario};
use crate::error::CliError;
use crate::output::{json_artifact, Artifact, Cell, CsvTable};

pub const TOOL: &str = "oamring";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub entries: Vec<Entry>,
    pub resolved: String,
    pub overrides: Vec<Override>,
    pub pinned: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub scenario: Scenario,
    pub preset: Option<Preset>,
    pub manifest_hash: String,
    pub config: ConfigEcho,
    pub inputs: Map<String, Value>,
    pub derived: Map<String, Value>,
    pub diagnostics: Map<String, Value>,
    pub outputs: Vec<String>,
    /// Elapsed seconds; the only field that varies between identical runs.
    pub wall_clock_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub manifest: Manifest,
    pub artifacts: Vec<Artifact>,
}

impl RunOutput {
    pub fn artifact(&self, name: &str) -> Option<&Artifact> {
        self.artifacts.iter().find(|a| a.name == name)
    }

    pub fn manifest_bytes(&self) -> Vec<u8> {
        let mut bytes = serde_json::to_vec_pretty(&self.manifest).expect("manifest serializes");
        bytes.push(b'\n');
        bytes
    }

    /// Writes every artifact and then the manifest into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<(), CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        for a in &self.artifacts {
            let path = dir.join(&a.name);
            std::fs::write(&path, &a.contents).map_err(|e| CliError::io(&path, e))?;
        }
        let path = dir.join(MANIFEST_FILE);
        std::fs::write(&path, self.manifest_bytes()).map_err(|e| CliError::io(&path, e))
    }
}

/// Hex SHA-256 over tool, version, scenario and the resolved configuration.
pub fn manifest_hash(config: &RunConfig) -> String {
    let mut h = Sha256::new();
    h.update(format!("{TOOL} {VERSION}\nscenario = {}\n", config.scenario.name()));
    h.update(config.resolved_text());
    hex(&h.finalize())
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Default)]
struct Outcome {
    artifacts: Vec<Artifact>,
    inputs: Map<String, Value>,
    derived: Map<String, Value>,
    diagnostics: Map<String, Value>,
}

pub fn execute(config: &RunConfig) -> Result<RunOutput, CliError> {
    let start = Instant::now();
    let hash = manifest_hash(config);
    let outcome = match config.scenario {
        Scenario::Potential => run_potential(config, &hash)?,
        Scenario::Spectrum => run_spectrum(config, &hash)?,
        Scenario::Evolve => run_evolve(config, &hash)?,
        Scenario::Rate => run_rate(config, &hash)?,
        Scenario::Radiate => run_radiate(config, &hash)?,
    };
    let manifest = Manifest {
        tool: TOOL.into(),
        version: VERSION.into(),
        scenario: config.scenario,
        preset: config.preset,
        manifest_hash: hash,
        config: ConfigEcho {
            entries: config.entries(),
            resolved: config.resolved_text(),
            overrides: config.overrides(),
            pinned: config.pinned(),
        },
        inputs: outcome.inputs,
        derived: outcome.derived,
        diagnostics: outcome.diagnostics,
        outputs: outcome.artifacts.iter().map(|a| a.name.clone()).collect(),
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    };
    Ok(RunOutput { manifest, artifacts: outcome.artifacts })
}

/// Re-runs the scenario recorded in a manifest and checks its inputs.
pub fn replay(manifest: &Manifest) -> Result<RunOutput, CliError> {
    if manifest.version != VERSION {
        return Err(CliError::Config(format!(
            "manifest written by version {}, this is {VERSION}",
            manifest.version
        )));
    }
    let config = RunConfig::from_entries(manifest.scenario, manifest.preset, &manifest.config.entries)?;
    let run = execute(&config)?;
    if run.manifest.manifest_hash != manifest.manifest_hash {
        return Err(CliError::Config("recorded configuration does not match the manifest hash".into()));
    }
    if run.manifest.inputs != manifest.inputs {
        return Err(CliError::Config("replay inputs differ from the recorded inputs".into()));
    }
    Ok(run)
}

pub fn system_params(config: &RunConfig) -> Result<SystemParams, CliError> {
    let k0_rho: f64 = config.get("params.k0_rho");
    let ell: i32 = config.get("params.ell");
    let m_max = config.auto("params.m_max").unwrap_or_else(|| SystemParams::default_m_max(k0_rho, ell));
    let k_max = config.auto("params.k_max").unwrap_or(2 * m_max);
    SystemParams::with_band(config.get("params.gamma"), config.get("params.epsilon"), k0_rho, ell, m_max, k_max)
        .map_err(|e| CliError::Config(format!("params: {e}")))
}

fn controls(config: &RunConfig) -> OdeControls {
    OdeControls {
        rel_tol: config.get("ode.rel_tol"),
        abs_tol: config.get("ode.abs_tol"),
        max_step: config.get("ode.max_step"),
        initial_step: config.get("ode.initial_step"),
    }
}

/// Rate table, dominant channel and growth-rate summary of one configuration.
fn derived_quantities(params: &SystemParams, fp: &FourierPotential) -> Result<Map<String, Value>, CliError> {
    let g = rate_coefficients(fp, params.gamma);
    let spectrum = StabilitySpectrum::new(params, fp, 1..=params.m_max as i64)?;
    let mut d = Map::new();
    d.insert("mean_potential".into(), json!(fp.mean()));
    d.insert("g_k".into(), Value::Array(g.iter().map(|(k, v)| json!([k, v])).collect()));
    d.insert("dominant_k".into(), json!(g.dominant()));
    if let Some((m, rate)) = spectrum.dominant() {
        let regime = classify_regime(m, params.gamma, fp.coefficient(m)?);
        d.insert(
            "growth_spectrum".into(),
            json!({ "dominant_m": m, "max_rate": rate, "regime": regime }),
        );
    }
    Ok(d)
}

fn run_potential(config: &RunConfig, hash: &str) -> Result<Outcome, CliError> {
    let params = system_params(config)?;
    let fp = FourierPotential::new(&params)?;
    let mut table = CsvTable::new(
        "potential.csv",
        ["k", "re_Vk", "im_Vk", "g_k", "alpha_k"].map(String::from).to_vec(),
    );
    for (k, v) in fp.harmonics().iter() {
        table.push(vec![
            Cell::Int(k),
            v.re.into(),
            v.im.into(),
            (params.gamma * v.im.abs()).into(),
            (0.5 * params.gamma * v.re).into(),
        ]);
    }
    let samples: usize = config.get("potential.samples");
    let mut curve = CsvTable::new("potential_samples.csv", vec!["phi".into(), "V".into()]);
    for j in 0..samples {
        let phi = TAU * j as f64 / samples as f64;
        curve.push(vec![phi.into(), pair_potential(phi, &params).into()]);
    }
    let mut diagnostics = Map::new();
    diagnostics.insert("quadrature_grid".into(), json!(2 * quadrature_grid_size(&params)));
    diagnostics.insert("convergence_tolerance".into(), json!(CONVERGENCE_TOLERANCE));
    Ok(Outcome {
        artifacts: vec![table.render(hash)?, curve.render(hash)?],
        derived: derived_quantities(&params, &fp)?,
        diagnostics,
        ..Outcome::default()
    })
}

fn run_spectrum(config: &RunConfig, hash: &str) -> Result<Outcome, CliError> {
    let params = system_params(config)?;
    let mut radii = config.list("spectrum.k0_rho");
    if radii.is_empty() {
        radii.push(params.k0_rho);
    }
    let (first, last): (i64, i64) = (config.get("spectrum.m_first"), config.get("spectrum.m_last"));
    if first > last {
        return Err(CliError::Config(format!("spectrum.m_first = {first} exceeds spectrum.m_last = {last}")));
    }
    let sweep = spectrum_sweep(&params, &radii, first..=last)?;

    let mut header = vec!["k0_rho".to_string()];
    header.extend(sweep.modes.iter().map(|m| format!("rate_m{m}")));
    let mut table = CsvTable::new("spectrum.csv", header);
    let mut rows = Vec::new();
    for (i, &k0_rho) in sweep.k0_rho.iter().enumerate() {
        let mut row = vec![Cell::Float(k0_rho)];
        row.extend(sweep.rates[i].iter().map(|&r| Cell::Float(r)));
        table.push(row);
        rows.push(json!({ "k0_rho": k0_rho, "argmax_m": sweep.argmax_m[i], "max_rate": sweep.max_rate[i] }));
    }
    let mut summary = Map::new();
    summary.insert("modes".into(), json!(sweep.modes));
    summary.insert("rows".into(), Value::Array(rows.clone()));
    let mut derived = Map::new();
    derived.insert("sweep".into(), Value::Array(rows));
    Ok(Outcome {
        artifacts: vec![table.render(hash)?, json_artifact("spectrum_summary.json", hash, summary)?],
        derived,
        ..Outcome::default()
    })
}

fn snapshot_body(state: &StateVector, params: &SystemParams) -> Map<String, Value> {
    let mut body = Map::new();
    body.insert("tau".into(), json!(state.tau));
    body.insert("m_max".into(), json!(state.m_max()));
    body.insert("ell".into(), json!(params.ell));
    body.insert("k0_rho".into(), json!(params.k0_rho));
    body.insert(
        "amplitudes".into(),
        Value::Array(state.amplitudes().iter().map(|c| json!([c.re, c.im])).collect()),
    );
    body
}

fn run_evolve(config: &RunConfig, hash: &str) -> Result<Outcome, CliError> {
    let params = system_params(config)?;
    let fp = FourierPotential::new(&params)?;
    let mode = match config.text("evolve.seed_mode") {
        "random" => SeedMode::Random(config.get("evolve.seed")),
        _ => SeedMode::Deterministic,
    };
    let initial = default_initial_state(&params, config.get("evolve.seed_amplitude"), mode)?;
    let band = 2 * params.m_max;
    let shown = config.get::<usize>("evolve.bunching_modes").min(band);
    let peak: usize = config.get("evolve.snapshot_peak");
    if peak > band {
        return Err(CliError::Config(format!("evolve.snapshot_peak = {peak} exceeds the bunching band {band}")));
    }
    let ev = evolve(&initial, &params, &fp, config.get("evolve.tau_end"), &controls(config), config.get("evolve.stride"))?;

    let m_max = params.m_max as i64;
    let mut header = vec!["tau".to_string()];
    header.extend((-m_max..=m_max).map(|m| format!("N_{m}")));
    for k in 0..=shown {
        header.push(format!("re_Phi_{k}"));
        header.push(format!("im_Phi_{k}"));
    }
    header.push("mean_omega".into());
    let mut table = CsvTable::new("evolve.csv", header);

    let mut max_phi0_error: f64 = 0.0;
    let mut peaks = vec![(0.0f64, 0.0f64); band + 1];
    let mut peak_index = 0;
    for (i, state) in ev.states().enumerate() {
        let b = bunching(&state);
        max_phi0_error = max_phi0_error.max((b.get(0) - 1.0).norm());
        for (k, slot) in peaks.iter_mut().enumerate() {
            let v = b.get(k as i64).norm();
            if v > slot.0 {
                *slot = (v, state.tau);
                if k == peak {
                    peak_index = i;
                }
            }
        }
        let mut row: Vec<Cell> = vec![state.tau.into()];
        row.extend(populations(&state).into_iter().map(Cell::Float));
        for k in 0..=shown as i64 {
            row.push(b.get(k).re.into());
            row.push(b.get(k).im.into());
        }
        row.push(mean_angular_velocity(&state).into());
        table.push(row);
    }

    let final_state = ev.final_state();
    let mut artifacts = vec![
        table.render(hash)?,
        json_artifact("snapshot_final.json", hash, snapshot_body(&final_state, &params))?,
    ];
    if peak > 0 {
        let state = ev.state(peak_index);
        let mut body = snapshot_body(&state, &params);
        body.insert("harmonic".into(), json!(peak));
        body.insert("bunching_abs".into(), json!(bunching(&state).get(peak as i64).norm()));
        artifacts.push(json_artifact("snapshot_peak.json", hash, body)?);
    }

    let mut derived = derived_quantities(&params, &fp)?;
    derived.insert(
        "max_bunching".into(),
        Value::Array(
            (1..=shown)
                .map(|k| json!({ "k": k, "max_abs": peaks[k].0, "tau": peaks[k].1 }))
                .collect(),
        ),
    );
    derived.insert("final_mean_omega".into(), json!(mean_angular_velocity(&final_state)));
    let mut diagnostics = Map::new();
    diagnostics.insert("max_norm_drift".into(), json!(ev.max_norm_drift));
    diagnostics.insert("max_edge_population".into(), json!(ev.max_edge_population));
    diagnostics.insert("edge_modes_per_side".into(), json!(edge_width(params.m_max)));
    diagnostics.insert("max_phi0_error".into(), json!(max_phi0_error));
    diagnostics.insert("steps".into(), json!(ev.trajectory.steps));
    diagnostics.insert("samples".into(), json!(ev.trajectory.len()));
    Ok(Outcome { artifacts, derived, diagnostics, ..Outcome::default() })
}

fn run_rate(config: &RunConfig, hash: &str) -> Result<Outcome, CliError> {
    let params = system_params(config)?;
    let fp = FourierPotential::new(&params)?;
    let all = rate_coefficients(&fp, params.gamma);
    let m_max = config.auto("rate.m_max").unwrap_or(params.m_max);
    let seed: f64 = config.get("rate.seed_population");
    let channel: usize = config.get("rate.channel");

    let (g, initial) = if channel > 0 {
        if channel > m_max || channel > all.k_max() {
            return Err(CliError::Config(format!(
                "rate.channel = {channel} exceeds rate.m_max = {m_max} or k_max = {}",
                all.k_max()
            )));
        }
        let mut n = vec![0.0; m_max + 1];
        n[0] = 1.0 - seed;
        n[channel] = seed;
        let state = RateState::new(0.0, n, vec![0.0; m_max + 1])?;
        (RateCoefficients::single_channel(channel, all.get(channel), all.k_max()), state)
    } else {
        (all.clone(), RateState::seeded(m_max, seed)?)
    };
    let alpha = if config.get::<bool>("rate.dispersion") {
        dispersion_coefficients(&fp, params.gamma)
    } else {
        DispersionCoefficients::new(vec![0.0; fp.k_max() + 1])
    };
    let gamma_v0 = params.gamma * fp.mean();
    let ev = evolve_rates(&initial, &g, &alpha, gamma_v0, config.get("rate.tau_end"), &controls(config), config.get("rate.stride"))?;

    let active: Vec<(usize, f64)> = g.iter().filter(|&(k, v)| v != 0.0 && k <= m_max).collect();
    let overlay = match active.as_slice() {
        [(k, v)] => Some((*k, *v, initial.populations[*k])),
        _ => None,
    };
    let mut header = vec!["tau".to_string()];
    header.extend((0..=m_max).map(|m| format!("N_{m}")));
    header.extend((0..=m_max).map(|m| format!("phi_{m}")));
    if let Some((k, _, _)) = overlay {
        header.push("analytic_N_0".into());
        header.push(format!("analytic_N_{k}"));
    }
    let mut table = CsvTable::new("rate.csv", header);
    for state in ev.states() {
        let mut row: Vec<Cell> = vec![state.tau.into()];
        row.extend(state.populations.iter().map(|&n| Cell::Float(n)));
        row.extend(state.phases.iter().map(|&p| Cell::Float(p)));
        if let Some((_, rate, seed)) = overlay {
            let (n0, nk) = two_state_analytic(rate, seed, state.tau);
            row.push(n0.into());
            row.push(nk.into());
        }
        table.push(row);
    }

    let mut derived = derived_quantities(&params, &fp)?;
    if let Some(k) = g.dominant() {
        derived.insert("delay_time".into(), json!({ "k": k, "tau0": delay_time(g.get(k), seed) }));
    }
    let mut diagnostics = Map::new();
    diagnostics.insert("max_population_drift".into(), json!(ev.max_population_drift));
    diagnostics.insert("max_edge_growth".into(), json!(ev.max_edge_growth));
    diagnostics.insert("steps".into(), json!(ev.trajectory.steps));
    diagnostics.insert("samples".into(), json!(ev.trajectory.len()));
    Ok(Outcome { artifacts: vec![table.render(hash)?], derived, diagnostics, ..Outcome::default() })
}

/// `m:re:im` entries for `m >= 0`, separated by commas or whitespace.
pub fn parse_bunching_list(text: &str) -> Result<BunchingSpectrum, CliError> {
    let mut values: Vec<Complex64> = Vec::new();
    for item in text.split([',', ' ', '\t']).filter(|s| !s.is_empty()) {
        let bad = || CliError::Config(format!("radiate.bunching entry {item:?}: expected m:re:im with m >= 0"));
        let parts: Vec<&str> = item.split(':').collect();
        let [m, re, im] = parts.as_slice() else { return Err(bad()) };
        let m: usize = m.parse().map_err(|_| bad())?;
        let re: f64 = re.parse().ok().filter(|v: &f64| v.is_finite()).ok_or_else(bad)?;
        let im: f64 = im.parse().ok().filter(|v: &f64| v.is_finite()).ok_or_else(bad)?;
        if values.len() <= m {
            values.resize(m + 1, Complex64::new(0.0, 0.0));
        }
        values[m] = Complex64::new(re, im);
    }
    Ok(BunchingSpectrum::from_nonnegative(&values)?)
}

#[derive(Deserialize)]
struct Snapshot {
    tau: f64,
    m_max: usize,
    amplitudes: Vec<[f64; 2]>,
}

pub fn read_snapshot(path: &Path) -> Result<(StateVector, String), CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    let snap: Snapshot = serde_json::from_slice(&bytes)
        .map_err(|e| CliError::Config(format!("radiate.snapshot {}: {e}", path.display())))?;
    let amplitudes = snap.amplitudes.iter().map(|[re, im]| Complex64::new(*re, *im)).collect();
    let state = StateVector::new(snap.tau, snap.m_max, amplitudes)?;
    Ok((state, hex(&Sha256::digest(&bytes))))
}

fn run_radiate(config: &RunConfig, hash: &str) -> Result<Outcome, CliError> {
    let params = system_params(config)?;
    let (snapshot, list) = (config.text("radiate.snapshot"), config.text("radiate.bunching"));
    let mut inputs = Map::new();
    let spectrum = match (snapshot.is_empty(), list.is_empty()) {
        (false, true) => {
            let (state, digest) = read_snapshot(Path::new(snapshot))?;
            inputs.insert("snapshot_sha256".into(), json!(digest));
            inputs.insert("snapshot_tau".into(), json!(state.tau));
            bunching(&state)
        }
        (true, false) => parse_bunching_list(list)?,
        _ => {
            return Err(CliError::Config(
                "radiate needs exactly one of radiate.snapshot and radiate.bunching".into(),
            ))
        }
    };
    let (ell, k0_rho) = (params.ell, params.k0_rho);
    let phi_count: usize = config.get("radiate.phi_count");
    let pattern = pattern_from_bunching(&spectrum, ell, k0_rho, config.get("radiate.theta_count"), phi_count)?;

    let mut grid = CsvTable::new(
        "radiation_grid.csv",
        ["theta", "phi", "re_M", "im_M", "intensity"].map(String::from).to_vec(),
    );
    for (i, &theta) in pattern.theta_grid.iter().enumerate() {
        for (j, &phi) in pattern.phi_grid.iter().enumerate() {
            let m = pattern.field[i][j];
            grid.push(vec![theta.into(), phi.into(), m.re.into(), m.im.into(), m.norm_sqr().into()]);
        }
    }
    let ell_primes: Vec<i64> = pattern.components[0].iter().map(|c| c.ell_prime).collect();
    let mut header = vec!["theta".to_string(), "total".to_string()];
    header.extend(ell_primes.iter().map(|l| format!("I_lp{l}")));
    let mut average = CsvTable::new("radiation_average.csv", header);
    for (i, &theta) in pattern.theta_grid.iter().enumerate() {
        let mut row = vec![Cell::Float(theta), Cell::Float(pattern.avg_intensity[i])];
        row.extend(pattern.components[i].iter().map(|c| Cell::Float(c.weight)));
        average.push(row);
    }

    // Power per ℓ′ integrated over the sphere, trapezoid in θ with weight sinθ.
    let mut power = vec![0.0; ell_primes.len()];
    for i in 1..pattern.theta_grid.len() {
        let (t0, t1) = (pattern.theta_grid[i - 1], pattern.theta_grid[i]);
        for (p, (a, b)) in power.iter_mut().zip(pattern.components[i - 1].iter().zip(&pattern.components[i])) {
            *p += 0.5 * (t1 - t0) * (a.weight * t0.sin() + b.weight * t1.sin());
        }
    }
    let mut ranked: Vec<(i64, f64)> = ell_primes.iter().copied().zip(power).collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));

    let equator = averaged_intensity(&spectrum, ell, k0_rho, FRAC_PI_2)?;
    let mut at_equator: Vec<_> = equator.components.iter().map(|c| (c.ell_prime, c.weight)).collect();
    at_equator.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let profile = azimuthal_intensity(&spectrum, ell, k0_rho, FRAC_PI_2, phi_count)?;
    let peak = pattern
        .avg_intensity
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| pattern.theta_grid[i])
        .unwrap_or(0.0);

    let top = |list: &[(i64, f64)]| -> Value {
        Value::Array(list.iter().take(5).map(|(l, w)| json!({ "ell_prime": l, "weight": w })).collect())
    };
    let mut summary = Map::new();
    summary.insert("ell".into(), json!(ell));
    summary.insert("k0_rho".into(), json!(k0_rho));
    summary.insert("peak_theta".into(), json!(peak));
    summary.insert("integrated_components".into(), top(&ranked));
    summary.insert(
        "equator".into(),
        json!({
            "theta": FRAC_PI_2,
            "total": equator.total,
            "components": top(&at_equator),
            "azimuthal_maxima": count_periodic_maxima(&profile),
        }),
    );
    Ok(Outcome {
        artifacts: vec![
            grid.render(hash)?,
            average.render(hash)?,
            json_artifact("radiation_summary.json", hash, summary)?,
        ],
        inputs,
        ..Outcome::default()
    })
}
