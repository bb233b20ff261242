//! Experiment plumbing: configuration files, the toy RBF curve-fitting
//! reproduction, standalone gain reports, verification suites, and the
//! CSV/JSON report formats. All randomness flows from the configured seed,
//! so every artifact is byte-reproducible.

use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::engine::{
    grow, GrowthConfig, GrowthTrace, SchemeMode, SelectionMode, StopReason,
};
use crate::error::{Error, Result};
use crate::model::{
    format_float, parametric_train, Activation, Dataset, LossKind, MlpNetwork, OptimizerConfig,
    OptimizerKind,
};
use crate::numerics::{rayleigh_extremes, spectral_extremes, sym_eig, EigenBackend, SymMatrix};
use crate::planner::{knapsack_enumerate, knapsack_plan, GainTable};
use crate::splitting::{
    brute_force_gain, gain_signed, probe_scheme, verify_taylor, SchemeVariant,
};
use crate::theory::{
    check_likelihood_bound, check_mse_bound, generate_admissible_classification,
    generate_admissible_mse, BOUND_SLACK,
};

/// One row of the loss-curve CSV: `iteration,neuron_count,train_loss,event`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub iteration: u64,
    pub neuron_count: usize,
    pub train_loss: f64,
    pub event: String,
}

pub const CSV_HEADER: &str = "iteration,neuron_count,train_loss,event";

/// Serializes rows with 17-significant-digit floats so re-parsing is exact.
pub fn rows_to_csv(rows: &[ReportRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            row.iteration,
            row.neuron_count,
            format_float(row.train_loss),
            row.event
        ));
    }
    out
}

pub fn rows_from_csv(text: &str) -> Result<Vec<ReportRow>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == CSV_HEADER => {}
        Some((_, header)) => {
            return Err(Error::Parse(format!(
                "line 1: expected header {CSV_HEADER:?}, got {header:?}"
            )))
        }
        None => return Err(Error::Parse("empty loss-curve file".into())),
    }
    let mut rows = vec![];
    let mut prev_iteration: Option<u64> = None;
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.splitn(4, ',').collect();
        if fields.len() != 4 {
            return Err(Error::Parse(format!("line {}: expected 4 fields", idx + 1)));
        }
        let row = ReportRow {
            iteration: fields[0]
                .parse()
                .map_err(|e| Error::Parse(format!("line {}: iteration: {e}", idx + 1)))?,
            neuron_count: fields[1]
                .parse()
                .map_err(|e| Error::Parse(format!("line {}: neuron_count: {e}", idx + 1)))?,
            train_loss: fields[2]
                .parse()
                .map_err(|e| Error::Parse(format!("line {}: train_loss: {e}", idx + 1)))?,
            event: fields[3].to_string(),
        };
        if let Some(prev) = prev_iteration {
            if row.iteration <= prev {
                return Err(Error::Parse(format!(
                    "line {}: iterations must be strictly increasing",
                    idx + 1
                )));
            }
        }
        prev_iteration = Some(row.iteration);
        rows.push(row);
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    S2d,
    S3d,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::S2d => "s2d",
            Method::S3d => "s3d",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "s2d" => Ok(Method::S2d),
            "s3d" => Ok(Method::S3d),
            other => Err(Error::Parse(format!("unknown method {other:?}; expected s2d or s3d"))),
        }
    }
}

fn default_true_neurons() -> usize {
    15
}
fn default_weight_std() -> f64 {
    3.0
}
fn default_n_samples() -> usize {
    1000
}
fn default_x_range() -> [f64; 2] {
    [-5.0, 5.0]
}
fn default_adam_lr() -> f64 {
    0.005
}
fn default_m() -> usize {
    2
}
fn default_c() -> f64 {
    3.0
}
fn default_epsilon() -> f64 {
    0.01
}
fn default_method() -> Method {
    Method::S3d
}
fn default_log_every() -> usize {
    500
}
fn default_top_fraction() -> f64 {
    1.0
}
fn default_optimizer() -> OptimizerKind {
    OptimizerKind::Adam
}

/// Flat experiment configuration mirrored by the JSON config file; CLI
/// flags override individual fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub experiment: Option<String>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_method")]
    pub method: Method,
    #[serde(default = "default_m")]
    pub m: usize,
    #[serde(default = "default_c")]
    pub c: f64,
    /// Growth rounds; when absent the toy derives it from the target size.
    #[serde(default)]
    pub rounds: Option<usize>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Loss target for early stopping; 0 disables it.
    #[serde(default)]
    pub stop_eta: f64,
    /// Selection: absent -> one split per round; present -> threshold
    /// selection with this gain threshold.
    #[serde(default)]
    pub selection_eta: Option<f64>,
    #[serde(default = "default_top_fraction")]
    pub top_fraction: f64,
    /// Per-round copy budget; switches the scheme mode to knapsack.
    #[serde(default)]
    pub knapsack_budget: Option<usize>,
    #[serde(default)]
    pub rayleigh: bool,
    #[serde(default)]
    pub analysis_mode: bool,
    #[serde(default = "default_optimizer")]
    pub optimizer: OptimizerKind,
    #[serde(default = "default_adam_lr")]
    pub adam_lr: f64,
    /// Parametric steps per round; absent -> (m-1) * 10000.
    #[serde(default)]
    pub steps_per_round: Option<usize>,
    #[serde(default)]
    pub freeze_output_weights: bool,
    #[serde(default = "default_log_every")]
    pub log_every: usize,
    // toy-rbf generator settings
    #[serde(default = "default_true_neurons")]
    pub true_neurons: usize,
    #[serde(default = "default_weight_std")]
    pub weight_std: f64,
    #[serde(default = "default_n_samples")]
    pub n_samples: usize,
    #[serde(default = "default_x_range")]
    pub x_range: [f64; 2],
    /// Scale of the initial one-neuron network's weights; absent ->
    /// weight_std.
    #[serde(default)]
    pub init_std: Option<f64>,
    // file paths used by the grow experiment
    #[serde(default)]
    pub model_in: Option<String>,
    #[serde(default)]
    pub data: Option<String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields carry defaults")
    }
}

impl ExperimentConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("config file: {e}")))
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    /// Effective multiplicity of one split under this config.
    pub fn effective_m(&self) -> usize {
        match self.method {
            Method::S2d => 2,
            Method::S3d => self.m,
        }
    }

    pub fn effective_steps_per_round(&self) -> usize {
        self.steps_per_round.unwrap_or((self.effective_m() - 1) * 10_000)
    }

    /// Rounds needed to grow 1 neuron to ~true_neurons, one split per round.
    pub fn effective_rounds(&self) -> usize {
        self.rounds.unwrap_or_else(|| {
            let growth = self.true_neurons.saturating_sub(1);
            let per_round = self.effective_m() - 1;
            growth.div_ceil(per_round)
        })
    }

    pub fn growth_config(&self) -> Result<GrowthConfig> {
        if self.method == Method::S3d && !(2..=4).contains(&self.m) {
            return Err(Error::InvalidInput(format!("m must be 2, 3 or 4, got {}", self.m)));
        }
        let scheme_mode = match (self.method, self.knapsack_budget) {
            (Method::S2d, _) => SchemeMode::PositiveOnly,
            (Method::S3d, Some(budget)) => SchemeMode::Knapsack { budget },
            (Method::S3d, None) => SchemeMode::FixedM { m: self.m },
        };
        let selection = match self.selection_eta {
            Some(eta) => SelectionMode::Threshold { eta, top_fraction: self.top_fraction },
            None => SelectionMode::OnePerRound,
        };
        let eigen_backend = if self.rayleigh {
            EigenBackend::rayleigh_default()
        } else {
            EigenBackend::Exact
        };
        Ok(GrowthConfig {
            c: self.c,
            epsilon: self.epsilon,
            rounds: self.effective_rounds(),
            scheme_mode,
            selection,
            eigen_backend,
            parametric: OptimizerConfig {
                kind: self.optimizer,
                lr: self.adam_lr,
                steps: self.effective_steps_per_round(),
                seed: self.seed,
                freeze_output_weights: self.freeze_output_weights,
            },
            stop_eta: self.stop_eta,
            analysis_mode: self.analysis_mode,
            seed: self.seed,
            log_every: self.log_every,
        })
    }
}

/// One applied split in a run summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitEvent {
    pub round: usize,
    pub neuron: String,
    pub m: usize,
    pub variant: SchemeVariant,
    pub gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToySummary {
    pub config: ExperimentConfig,
    pub final_loss: f64,
    pub final_neuron_count: usize,
    pub rounds_run: usize,
    pub stop: StopReason,
    pub parametric_steps_total: u64,
    pub split_events: Vec<SplitEvent>,
}

impl ToySummary {
    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serialization cannot fail")
    }
}

/// The ground-truth RBF target and the sampled dataset of the toy
/// experiment, produced deterministically from the seed. The initial
/// one-neuron network continues the same random stream, so paired runs with
/// different methods share both the data and the starting point.
pub fn toy_instance(cfg: &ExperimentConfig) -> Result<(MlpNetwork, Dataset, MlpNetwork)> {
    if cfg.true_neurons == 0 || cfg.n_samples == 0 {
        return Err(Error::InvalidInput("true_neurons and n_samples must be positive".into()));
    }
    if !(cfg.x_range[0] < cfg.x_range[1]) {
        return Err(Error::InvalidInput("x_range must be a nonempty interval".into()));
    }
    if !(cfg.weight_std > 0.0) {
        return Err(Error::InvalidInput("weight_std must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let normal = Normal::new(0.0, cfg.weight_std)
        .map_err(|e| Error::InvalidInput(format!("weight distribution: {e}")))?;

    let thetas: Vec<Vec<f64>> = (0..cfg.true_neurons)
        .map(|_| vec![normal.sample(&mut rng), normal.sample(&mut rng)])
        .collect();
    let weights: Vec<f64> = (0..cfg.true_neurons).map(|_| normal.sample(&mut rng)).collect();
    let truth = MlpNetwork::new(Activation::Rbf, LossKind::Mse, vec![thetas], weights)?;

    let inputs: Vec<Vec<f64>> = (0..cfg.n_samples)
        .map(|_| vec![rng.random_range(cfg.x_range[0]..cfg.x_range[1]), 1.0])
        .collect();
    let targets: Vec<f64> =
        inputs.iter().map(|x| truth.forward(x)).collect::<Result<_>>()?;
    let data = Dataset::new(inputs, targets)?;

    let init_std = cfg.init_std.unwrap_or(cfg.weight_std);
    if !(init_std > 0.0) {
        return Err(Error::InvalidInput("init_std must be positive".into()));
    }
    let init = Normal::new(0.0, init_std)
        .map_err(|e| Error::InvalidInput(format!("init distribution: {e}")))?;
    let start = MlpNetwork::new(
        Activation::Rbf,
        LossKind::Mse,
        vec![vec![vec![init.sample(&mut rng), init.sample(&mut rng)]]],
        vec![init.sample(&mut rng)],
    )?;
    Ok((truth, data, start))
}

fn append_parametric_rows(
    rows: &mut Vec<ReportRow>,
    iteration: &mut u64,
    losses: &[f64],
    neuron_count: usize,
    log_every: usize,
) {
    for (step, loss) in losses.iter().enumerate().skip(1) {
        if step % log_every == 0 || step == losses.len() - 1 {
            rows.push(ReportRow {
                iteration: *iteration + step as u64,
                neuron_count,
                train_loss: *loss,
                event: "param".to_string(),
            });
        }
    }
    *iteration += (losses.len() - 1) as u64;
}

/// Runs the toy RBF reproduction: a seeded 15-neuron ground truth sampled
/// from N(0, weight_std), 1000 uniform inputs, growth from a single neuron,
/// and a trailing parametric phase so every network size receives the same
/// number of training steps. Emits `loss_curve.csv`, `model.json`,
/// `dataset.csv` and `summary.json` under `out_dir`.
pub fn run_toy_rbf(cfg: &ExperimentConfig, out_dir: &Path) -> Result<ToySummary> {
    let (_, data, start) = toy_instance(cfg)?;
    let growth = cfg.growth_config()?;
    let (net, trace) = grow(&start, &data, &growth)?;

    let mut net = net;
    let mut rows = trace.rows.clone();
    let mut iteration = trace.iterations;
    let mut parametric_steps_total = trace.parametric_steps_total;

    // rounds that stopped early still consume their parametric budget, and
    // the final network gets one extra phase, so every size trains equally
    let phases_done = trace.rounds.len();
    let extra_phases = growth.rounds - phases_done + 1;
    for _ in 0..extra_phases {
        let (trained, losses) = parametric_train(&net, &data, &growth.parametric)?;
        net = trained;
        append_parametric_rows(
            &mut rows,
            &mut iteration,
            &losses,
            net.hidden_neuron_count(),
            growth.log_every,
        );
        parametric_steps_total += growth.parametric.steps as u64;
    }

    let final_loss = net.loss(&data)?;
    let split_events = trace
        .rounds
        .iter()
        .flat_map(|record| {
            record.chosen_splits.iter().map(move |split| SplitEvent {
                round: record.round,
                neuron: split.neuron.to_string(),
                m: split.m,
                variant: split.variant,
                gain: split.gain,
            })
        })
        .collect();

    let mut config = cfg.clone();
    config.experiment = Some("toy-rbf".to_string());
    let summary = ToySummary {
        config,
        final_loss,
        final_neuron_count: net.hidden_neuron_count(),
        rounds_run: trace.rounds.len(),
        stop: trace.stop,
        parametric_steps_total,
        split_events,
    };

    std::fs::create_dir_all(out_dir)?;
    std::fs::write(out_dir.join("loss_curve.csv"), rows_to_csv(&rows))?;
    std::fs::write(out_dir.join("model.json"), net.to_json_string())?;
    data.write_csv(&out_dir.join("dataset.csv"))?;
    std::fs::write(out_dir.join("summary.json"), summary.to_json_string())?;
    Ok(summary)
}

/// The first round at which two toy runs chose different splits, if any;
/// compares (round, neuron, variant, m) sequences.
pub fn first_divergent_split(a: &ToySummary, b: &ToySummary) -> Option<usize> {
    for (ea, eb) in a.split_events.iter().zip(&b.split_events) {
        if (ea.round, &ea.neuron, ea.variant, ea.m) != (eb.round, &eb.neuron, eb.variant, eb.m) {
            return Some(ea.round.min(eb.round));
        }
    }
    match a.split_events.len().cmp(&b.split_events.len()) {
        std::cmp::Ordering::Equal => None,
        _ => {
            let shorter = a.split_events.len().min(b.split_events.len());
            Some(
                a.split_events
                    .get(shorter)
                    .or_else(|| b.split_events.get(shorter))
                    .map(|e| e.round)
                    .expect("one run has an extra event"),
            )
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowOutput {
    pub config: ExperimentConfig,
    pub final_loss: f64,
    pub final_neuron_count: usize,
    pub stop: StopReason,
    pub rounds_run: usize,
}

/// Grows a model loaded from the configured files and writes
/// `loss_curve.csv`, `model.json`, `trace.json` and `summary.json`.
pub fn run_grow(cfg: &ExperimentConfig, out_dir: &Path) -> Result<GrowOutput> {
    let model_path = cfg
        .model_in
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("grow needs model_in in the config".into()))?;
    let data_path = cfg
        .data
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("grow needs data in the config".into()))?;
    let net = MlpNetwork::read_json(Path::new(model_path))?;
    let data = Dataset::read_csv(Path::new(data_path))?;
    let growth = cfg.growth_config()?;
    let (net, trace) = grow(&net, &data, &growth)?;

    let mut config = cfg.clone();
    config.experiment = Some("grow".to_string());
    let output = GrowOutput {
        config,
        final_loss: trace.final_loss,
        final_neuron_count: trace.final_neuron_count,
        stop: trace.stop,
        rounds_run: trace.rounds.len(),
    };
    std::fs::create_dir_all(out_dir)?;
    std::fs::write(out_dir.join("loss_curve.csv"), trace.to_csv_string())?;
    std::fs::write(out_dir.join("model.json"), net.to_json_string())?;
    write_trace_json(&trace, &out_dir.join("trace.json"))?;
    std::fs::write(
        out_dir.join("summary.json"),
        serde_json::to_string_pretty(&output).expect("summary serialization cannot fail"),
    )?;
    Ok(output)
}

pub fn write_trace_json(trace: &GrowthTrace, path: &Path) -> Result<()> {
    std::fs::write(
        path,
        serde_json::to_string_pretty(trace).expect("trace serialization cannot fail"),
    )?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommendedScheme {
    pub m: usize,
    pub variant: SchemeVariant,
    pub gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeuronGains {
    pub neuron: String,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub rho: f64,
    pub g_plus: f64,
    pub g2: f64,
    pub g3: f64,
    pub g4: f64,
    pub recommended: RecommendedScheme,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainsReport {
    pub model: String,
    pub data: String,
    pub c: f64,
    pub neurons: Vec<NeuronGains>,
}

impl GainsReport {
    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}

/// Per-neuron eigen summary and gains for a stored model/dataset pair.
pub fn run_gains(model_path: &Path, data_path: &Path, c: f64) -> Result<GainsReport> {
    let net = MlpNetwork::read_json(model_path)?;
    let data = Dataset::read_csv(data_path)?;
    let mut neurons = vec![];
    for id in net.neuron_ids() {
        let report =
            crate::splitting::neuron_report(&net, &data, &id, c, &EigenBackend::Exact, 0)?;
        let mut recommended = RecommendedScheme { m: 1, variant: SchemeVariant::None, gain: 0.0 };
        for m in 2..=4 {
            let (gain, scheme) = &report.gains[&m];
            if *gain < recommended.gain {
                recommended = RecommendedScheme { m, variant: scheme.variant, gain: *gain };
            }
        }
        neurons.push(NeuronGains {
            neuron: id.to_string(),
            lambda_min: report.spectrum.lambda_min,
            lambda_max: report.spectrum.lambda_max,
            rho: report.spectrum.rho,
            g_plus: report.positive_gain.0,
            g2: report.gain(2),
            g3: report.gain(3),
            g4: report.gain(4),
            recommended,
        });
    }
    Ok(GainsReport {
        model: model_path.display().to_string(),
        data: data_path.display().to_string(),
        c,
        neurons,
    })
}

/// Machine-readable outcome of one verification suite. `worst_margin` is
/// the largest observed violation margin (positive means a failure; for
/// passing suites it reports how close the worst trial came).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub suite: String,
    pub trials: usize,
    pub failures: usize,
    pub worst_margin: f64,
}

impl VerifyReport {
    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

fn random_sym<R: Rng>(rng: &mut R, dim: usize) -> SymMatrix {
    let entries: Vec<f64> = (0..dim * dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    SymMatrix::new(dim, entries).expect("uniform entries are finite")
}

/// Closed-form gains vs the brute-force oracle over random matrices,
/// c ∈ {1, 1.5, 2, 3} and m ∈ {2, 3, 4}.
fn verify_gains(trials: usize, seed: u64) -> VerifyReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    let mut worst = f64::NEG_INFINITY;
    for trial in 0..trials {
        let d = rng.random_range(2..=4);
        let s = random_sym(&mut rng, d);
        let c = [1.0, 1.5, 2.0, 3.0][rng.random_range(0..4)];
        let m = rng.random_range(2..=4);
        let closed = gain_signed(&s, m, c).expect("c >= 1").0;
        let brute = brute_force_gain(&s, m, c, 24, seed.wrapping_add(trial as u64));
        let tol = 1e-3 * spectral_extremes(&s).rho.max(1.0);
        let margin = (brute - closed).abs() - tol;
        worst = worst.max(margin);
        if margin > 0.0 {
            failures += 1;
        }
    }
    VerifyReport { suite: "gains".into(), trials, failures, worst_margin: worst }
}

/// Taylor-order fits on random one-hidden-layer instances probed with
/// asymmetric feasible schemes: slope of the remainder must sit in
/// [2.5, 3.5].
fn verify_taylor_suite(trials: usize, seed: u64) -> VerifyReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    let mut worst = f64::NEG_INFINITY;
    let mut done = 0;
    while done < trials {
        let net =
            crate::harness::random_toyish_net(&mut rng);
        let data = random_toyish_data(&mut rng);
        let id = net.neuron_ids()[0].clone();
        let s = crate::splitting::splitting_matrix(&net, &data, &id)
            .expect("generated instances are well-formed");
        let scheme = probe_scheme(&s, 3.0, &mut rng);
        if scheme.predicted_gain.abs() < 1e-3 {
            continue; // nearly flat direction; resample
        }
        let slope = verify_taylor(&net, &data, &id, &scheme, &[1e-1, 3e-2, 1e-2, 3e-3])
            .expect("probe schemes are applicable");
        let margin = (slope - 3.5).max(2.5 - slope);
        worst = worst.max(margin);
        if margin > 0.0 {
            failures += 1;
        }
        done += 1;
    }
    VerifyReport { suite: "taylor".into(), trials, failures, worst_margin: worst }
}

pub(crate) fn random_toyish_net<R: Rng>(rng: &mut R) -> MlpNetwork {
    let width = rng.random_range(1..=3usize);
    let thetas: Vec<Vec<f64>> = (0..width)
        .map(|_| vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
        .collect();
    let weights: Vec<f64> = (0..width).map(|_| rng.random_range(-1.5..1.5)).collect();
    MlpNetwork::new(Activation::Rbf, LossKind::Mse, vec![thetas], weights)
        .expect("generated network is valid")
}

fn random_toyish_data<R: Rng>(rng: &mut R) -> Dataset {
    let n = rng.random_range(4..=12usize);
    let inputs: Vec<Vec<f64>> =
        (0..n).map(|_| vec![rng.random_range(-2.0..2.0), 1.0]).collect();
    let targets: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
    Dataset::new(inputs, targets).expect("generated data is valid")
}

/// MSE and likelihood bounds on generated admissible instances.
fn verify_bounds(trials: usize, seed: u64) -> VerifyReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    let mut worst = f64::NEG_INFINITY;
    for trial in 0..trials {
        let checks = if trial % 2 == 0 {
            let inst = generate_admissible_mse(&mut rng);
            check_mse_bound(&inst.net, &inst.data, &inst.ctx)
                .expect("admissible instances satisfy the preconditions")
                .into_iter()
                .map(|c| c.actual - c.bound)
                .collect::<Vec<_>>()
        } else {
            let inst = generate_admissible_classification(&mut rng);
            check_likelihood_bound(&inst.net, &inst.data, &inst.ctx)
                .expect("admissible instances satisfy the preconditions")
                .into_iter()
                .map(|c| c.bound - c.actual)
                .collect::<Vec<_>>()
        };
        for violation in checks {
            if violation.is_nan() {
                continue; // skipped neuron
            }
            let margin = violation - BOUND_SLACK;
            worst = worst.max(margin);
            if margin > 0.0 {
                failures += 1;
            }
        }
    }
    VerifyReport { suite: "bounds".into(), trials, failures, worst_margin: worst }
}

/// Knapsack DP vs exhaustive enumeration on random small instances.
fn verify_knapsack(trials: usize, seed: u64) -> VerifyReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..trials {
        let n = rng.random_range(1..=8usize);
        let values: Vec<(crate::model::NeuronId, [f64; 4])> = (0..n)
            .map(|i| {
                let mut g = [0.0; 4];
                let mut acc = 0.0;
                for slot in g.iter_mut().skip(1) {
                    acc -= rng.random_range(0.0..1.0);
                    *slot = acc;
                }
                (crate::model::NeuronId::initial(0, i), g)
            })
            .collect();
        let table = GainTable::from_values(values);
        let budget = rng.random_range(n..=4 * n);
        let plan = knapsack_plan(&table, budget).expect("budget >= n");
        let reference = knapsack_enumerate(&table, budget).expect("budget >= n");
        let margin = (plan.total_predicted_gain - reference.total_predicted_gain).abs();
        worst = worst.max(margin);
        if margin > 0.0 || plan.multiplicities() != reference.multiplicities() {
            failures += 1;
        }
    }
    VerifyReport { suite: "knapsack".into(), trials, failures, worst_margin: worst }
}

/// Rayleigh-quotient extremes vs the exact Jacobi spectrum, plus eigenpair
/// residual checks.
fn verify_eigen(trials: usize, seed: u64) -> VerifyReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    let mut worst = f64::NEG_INFINITY;
    for trial in 0..trials {
        let d = rng.random_range(2..=16);
        let s = random_sym(&mut rng, d);
        let exact = spectral_extremes(&s);
        let approx = rayleigh_extremes(&s, 1000, 0.1, 3, seed.wrapping_add(trial as u64));
        let tol = 1e-4 * exact.rho.max(1.0);
        let err = (approx.lambda_min - exact.lambda_min)
            .abs()
            .max((approx.lambda_max - exact.lambda_max).abs());
        let mut margin = err - tol;

        let eig = sym_eig(&s);
        let res_tol = 1e-8 * s.frobenius_norm().max(1.0);
        for (lambda, v) in eig.values.iter().zip(&eig.vectors) {
            let sv = s.mat_vec(v);
            let residual: f64 = sv
                .iter()
                .zip(v)
                .map(|(a, b)| (a - lambda * b) * (a - lambda * b))
                .sum::<f64>()
                .sqrt();
            margin = margin.max(residual - res_tol);
        }
        worst = worst.max(margin);
        if margin > 0.0 {
            failures += 1;
        }
    }
    VerifyReport { suite: "eigen".into(), trials, failures, worst_margin: worst }
}

/// Runs one verification suite by name: gains, taylor, bounds, knapsack or
/// eigen.
pub fn run_verify(suite: &str, trials: usize, seed: u64) -> Result<VerifyReport> {
    if trials == 0 {
        return Err(Error::InvalidInput("trials must be at least 1".into()));
    }
    match suite {
        "gains" => Ok(verify_gains(trials, seed)),
        "taylor" => Ok(verify_taylor_suite(trials, seed)),
        "bounds" => Ok(verify_bounds(trials, seed)),
        "knapsack" => Ok(verify_knapsack(trials, seed)),
        "eigen" => Ok(verify_eigen(trials, seed)),
        other => Err(Error::InvalidInput(format!(
            "unknown suite {other:?}; expected gains, taylor, bounds, knapsack or eigen"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_roundtrip_exactly() {
        let rows = vec![
            ReportRow { iteration: 0, neuron_count: 1, train_loss: 1.5, event: "param".into() },
            ReportRow {
                iteration: 500,
                neuron_count: 2,
                train_loss: 0.123456789123456789,
                event: "split:positive-binary".into(),
            },
            ReportRow {
                iteration: 501,
                neuron_count: 2,
                train_loss: 3.0e-17,
                event: "stop:rounds-exhausted".into(),
            },
        ];
        let text = rows_to_csv(&rows);
        assert!(text.starts_with(CSV_HEADER));
        let back = rows_from_csv(&text).unwrap();
        assert_eq!(rows, back);
        assert_eq!(text, rows_to_csv(&back));
    }

    #[test]
    fn rows_reject_nonincreasing_iterations() {
        let text = format!("{CSV_HEADER}\n5,1,1.0,param\n5,1,0.9,param\n");
        assert!(matches!(rows_from_csv(&text), Err(Error::Parse(_))));
    }

    #[test]
    fn config_defaults_match_toy_protocol() {
        let cfg = ExperimentConfig::default();
        assert_eq!(cfg.true_neurons, 15);
        assert_eq!(cfg.weight_std, 3.0);
        assert_eq!(cfg.n_samples, 1000);
        assert_eq!(cfg.x_range, [-5.0, 5.0]);
        assert_eq!(cfg.adam_lr, 0.005);
        assert_eq!(cfg.effective_steps_per_round(), 10_000);
        assert_eq!(cfg.effective_rounds(), 14);
        let mut m3 = cfg.clone();
        m3.m = 3;
        assert_eq!(m3.effective_rounds(), 7);
        assert_eq!(m3.effective_steps_per_round(), 20_000);
        let mut m4 = cfg;
        m4.m = 4;
        assert_eq!(m4.effective_rounds(), 5);
    }

    #[test]
    fn config_parses_flat_json_and_rejects_unknown_fields() {
        let cfg = ExperimentConfig::from_json_str(
            r#"{"seed": 7, "method": "s2d", "c": 1.5, "n_samples": 20}"#,
        )
        .unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.method, Method::S2d);
        assert_eq!(cfg.c, 1.5);
        assert_eq!(cfg.n_samples, 20);
        assert!(ExperimentConfig::from_json_str(r#"{"sed": 7}"#).is_err());
    }

    #[test]
    fn toy_instance_matches_protocol_shape() {
        let cfg = ExperimentConfig { n_samples: 50, ..Default::default() };
        let (truth, data, start) = toy_instance(&cfg).unwrap();
        assert_eq!(truth.hidden_neuron_count(), 15);
        assert_eq!(data.len(), 50);
        assert_eq!(data.dim(), 2);
        for i in 0..data.len() {
            let x = data.input(i);
            assert!((-5.0..5.0).contains(&x[0]));
            assert_eq!(x[1], 1.0);
            assert_eq!(data.target(i), truth.forward(x).unwrap());
        }
        assert_eq!(start.hidden_neuron_count(), 1);
    }

    #[test]
    fn verify_suites_run() {
        let knapsack = run_verify("knapsack", 20, 3).unwrap();
        assert_eq!(knapsack.failures, 0);
        let eigen = run_verify("eigen", 10, 4).unwrap();
        assert_eq!(eigen.failures, 0);
        let bounds = run_verify("bounds", 6, 5).unwrap();
        assert_eq!(bounds.failures, 0);
        assert!(run_verify("nope", 5, 0).is_err());
        assert!(run_verify("gains", 0, 0).is_err());
    }
}
