//! The progressive-growth loop: alternate a parametric training phase with
//! a splitting phase that evaluates per-neuron splitting matrices, selects
//! neurons by their signed gains, and applies the optimal schemes. Every
//! run is a pure function of (network, data, config) and leaves a complete
//! audit trace.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::ReportRow;
use crate::model::{parametric_train, Dataset, MlpNetwork, NeuronId, OptimizerConfig};
use crate::numerics::EigenBackend;
use crate::planner::{knapsack_plan, GainTable, SplitPlan};
use crate::splitting::{
    apply_split, neuron_report, verify_taylor, NeuronSplitReport, SchemeVariant, SplitScheme,
};
use crate::theory::{check_mse_bound, curvature_floor, data_spectrum, BoundCheck, TheoryContext};

/// Which scheme family the splitting phase draws from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum SchemeMode {
    /// Signed splitting with a fixed multiplicity m ∈ {2, 3, 4}.
    FixedM { m: usize },
    /// Positively weighted binary splitting only.
    PositiveOnly,
    /// Per neuron, the multiplicity with the most negative gain.
    BestOf,
    /// Exact knapsack over multiplicities under a per-round copy budget.
    Knapsack { budget: usize },
}

/// How many of the qualifying neurons are split each round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum SelectionMode {
    /// All neurons with G ≤ -eta, most negative first, truncated to the top
    /// fraction.
    Threshold { eta: f64, top_fraction: f64 },
    /// Only the single most negative neuron.
    OnePerRound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthConfig {
    pub c: f64,
    pub epsilon: f64,
    pub rounds: usize,
    pub scheme_mode: SchemeMode,
    pub selection: SelectionMode,
    pub eigen_backend: EigenBackend,
    pub parametric: OptimizerConfig,
    /// Loss target; the loop stops early once the training loss falls to or
    /// below it. Zero disables the target.
    pub stop_eta: f64,
    /// Freeze output weights during training and run bound checks plus a
    /// Taylor spot check every round.
    pub analysis_mode: bool,
    pub seed: u64,
    /// Loss-curve sampling period (in parametric steps) for the trace rows.
    pub log_every: usize,
}

impl GrowthConfig {
    fn validate(&self) -> Result<()> {
        if !(self.c >= 1.0) {
            return Err(Error::InvalidInput(format!("c must be >= 1, got {}", self.c)));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidInput("epsilon must be positive".into()));
        }
        if let SchemeMode::FixedM { m } = self.scheme_mode {
            if !(2..=4).contains(&m) {
                return Err(Error::InvalidInput(format!("fixed multiplicity {m} not in {{2,3,4}}")));
            }
        }
        if let SelectionMode::Threshold { eta, top_fraction } = self.selection {
            if !(eta >= 0.0) {
                return Err(Error::InvalidInput("selection eta must be non-negative".into()));
            }
            if !(top_fraction > 0.0 && top_fraction <= 1.0) {
                return Err(Error::InvalidInput("top_fraction must lie in (0, 1]".into()));
            }
        }
        if self.log_every == 0 {
            return Err(Error::InvalidInput("log_every must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    RoundsExhausted,
    LossTarget,
    SplittingStable,
}

impl StopReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            StopReason::RoundsExhausted => "rounds-exhausted",
            StopReason::LossTarget => "loss-target",
            StopReason::SplittingStable => "splitting-stable",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChosenSplit {
    pub neuron: NeuronId,
    pub m: usize,
    pub variant: SchemeVariant,
    pub gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub loss_before_parametric: f64,
    pub loss_after_parametric: f64,
    /// Hidden neuron count after this round's splits.
    pub neuron_count: usize,
    pub chosen_splits: Vec<ChosenSplit>,
    pub predicted_gain_sum: f64,
    /// loss(after splits) - loss(after parametric); compare against
    /// (ε²/2)·predicted_gain_sum.
    pub realized_loss_delta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound_checks: Option<Vec<BoundCheck>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub taylor_slope: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GrowthTrace {
    pub seed: u64,
    pub config: GrowthConfig,
    pub rounds: Vec<RoundRecord>,
    pub rows: Vec<ReportRow>,
    pub stop: StopReason,
    pub final_loss: f64,
    pub final_neuron_count: usize,
    /// Total update steps (parametric steps plus one per split).
    pub iterations: u64,
    pub parametric_steps_total: u64,
    /// Wall time is environment noise, never serialized.
    #[serde(skip)]
    pub wall_time_secs: f64,
}

impl GrowthTrace {
    pub fn to_csv_string(&self) -> String {
        crate::harness::rows_to_csv(&self.rows)
    }
}

/// Derives a per-(round, neuron) seed for the approximate eigen backend.
fn mix_seed(seed: u64, round: usize, index: usize) -> u64 {
    let mut z = seed ^ (round as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z ^= (index as u64).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z ^ (z >> 31)
}

struct RowLog {
    rows: Vec<ReportRow>,
    iteration: u64,
}

impl RowLog {
    fn push(&mut self, neuron_count: usize, train_loss: f64, event: String) {
        self.rows.push(ReportRow { iteration: self.iteration, neuron_count, train_loss, event });
    }
}

fn reports_for(
    net: &MlpNetwork,
    data: &Dataset,
    config: &GrowthConfig,
    round: usize,
) -> Result<Vec<NeuronSplitReport>> {
    let mut reports = Vec::new();
    for (index, id) in net.neuron_ids().iter().enumerate() {
        let seed = mix_seed(config.seed, round, index);
        reports.push(neuron_report(net, data, id, config.c, &config.eigen_backend, seed)?);
    }
    Ok(reports)
}

/// The candidate (gain, scheme) per neuron under the configured scheme mode.
fn split_candidates(
    reports: &[NeuronSplitReport],
    mode: SchemeMode,
) -> Vec<(NeuronId, f64, SplitScheme)> {
    reports
        .iter()
        .map(|report| {
            let (gain, scheme) = match mode {
                SchemeMode::FixedM { m } => report.gains[&m].clone(),
                SchemeMode::PositiveOnly => report.positive_gain.clone(),
                SchemeMode::BestOf => {
                    let mut best = report.gains[&2].clone();
                    for m in 3..=4 {
                        let cand = &report.gains[&m];
                        if cand.0 < best.0 {
                            best = cand.clone();
                        }
                    }
                    best
                }
                SchemeMode::Knapsack { .. } => {
                    unreachable!("knapsack mode resolves through a plan")
                }
            };
            (report.neuron.clone(), gain, scheme)
        })
        .collect()
}

/// Applies the selection rule, returning the splits to perform this round.
fn select_splits(
    candidates: Vec<(NeuronId, f64, SplitScheme)>,
    selection: SelectionMode,
) -> Vec<(NeuronId, f64, SplitScheme)> {
    let mut applicable: Vec<(NeuronId, f64, SplitScheme)> = candidates
        .into_iter()
        .filter(|(_, gain, scheme)| scheme.variant != SchemeVariant::None && *gain < 0.0)
        .collect();
    applicable.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    match selection {
        SelectionMode::Threshold { eta, top_fraction } => {
            applicable.retain(|(_, gain, _)| *gain <= -eta);
            let keep = (top_fraction * applicable.len() as f64).ceil() as usize;
            applicable.truncate(keep);
            applicable
        }
        SelectionMode::OnePerRound => {
            applicable.truncate(1);
            applicable
        }
    }
}

fn knapsack_splits(
    reports: &[NeuronSplitReport],
    budget: usize,
) -> Result<Vec<(NeuronId, f64, SplitScheme)>> {
    let table = GainTable::from_reports(reports);
    let plan: SplitPlan = knapsack_plan(&table, budget)?;
    Ok(plan
        .choices
        .into_iter()
        .filter_map(|(id, m, scheme)| {
            if m < 2 {
                return None;
            }
            let scheme = scheme.expect("report tables carry schemes for m >= 2");
            if scheme.variant == SchemeVariant::None {
                return None;
            }
            Some((id, scheme.predicted_gain, scheme))
        })
        .collect())
}

/// Runs the growth loop. Each round trains the parameters, evaluates every
/// neuron's splitting report through the configured eigen backend, selects
/// and applies splits with step ε, and records the audit trail. Stops early
/// when the loss target is reached or no neuron qualifies.
pub fn grow(
    net: &MlpNetwork,
    data: &Dataset,
    config: &GrowthConfig,
) -> Result<(MlpNetwork, GrowthTrace)> {
    config.validate()?;
    let started = Instant::now();
    let mut net = net.clone();
    let mut log = RowLog { rows: Vec::new(), iteration: 0 };
    let mut rounds: Vec<RoundRecord> = Vec::new();
    let mut parametric_steps_total = 0u64;

    let initial_loss = net.loss(data)?;
    log.push(net.hidden_neuron_count(), initial_loss, "param".to_string());

    let mut stop = StopReason::RoundsExhausted;
    'rounds: for round in 1..=config.rounds {
        let loss_before = net.loss(data)?;
        let (trained, losses) = parametric_train(&net, data, &config.parametric)?;
        net = trained;
        for (step, loss) in losses.iter().enumerate().skip(1) {
            if step % config.log_every == 0 || step == losses.len() - 1 {
                log.rows.push(ReportRow {
                    iteration: log.iteration + step as u64,
                    neuron_count: net.hidden_neuron_count(),
                    train_loss: *loss,
                    event: "param".to_string(),
                });
            }
        }
        log.iteration += config.parametric.steps as u64;
        parametric_steps_total += config.parametric.steps as u64;
        let loss_after = *losses.last().expect("trace always has the initial entry");

        if config.stop_eta > 0.0 && loss_after <= config.stop_eta {
            rounds.push(RoundRecord {
                round,
                loss_before_parametric: loss_before,
                loss_after_parametric: loss_after,
                neuron_count: net.hidden_neuron_count(),
                chosen_splits: vec![],
                predicted_gain_sum: 0.0,
                realized_loss_delta: 0.0,
                bound_checks: None,
                taylor_slope: None,
            });
            stop = StopReason::LossTarget;
            log.iteration += 1;
            log.push(net.hidden_neuron_count(), loss_after, "stop:loss-target".to_string());
            break 'rounds;
        }

        let reports = reports_for(&net, data, config, round)?;
        let selected = match config.scheme_mode {
            SchemeMode::Knapsack { budget } => knapsack_splits(&reports, budget)?,
            mode => select_splits(split_candidates(&reports, mode), config.selection),
        };

        if selected.is_empty() {
            rounds.push(RoundRecord {
                round,
                loss_before_parametric: loss_before,
                loss_after_parametric: loss_after,
                neuron_count: net.hidden_neuron_count(),
                chosen_splits: vec![],
                predicted_gain_sum: 0.0,
                realized_loss_delta: 0.0,
                bound_checks: None,
                taylor_slope: None,
            });
            stop = StopReason::SplittingStable;
            log.iteration += 1;
            log.push(net.hidden_neuron_count(), loss_after, "stop:splitting-stable".to_string());
            break 'rounds;
        }

        // analysis-mode spot checks run against the pre-split network
        let taylor_slope = if config.analysis_mode {
            let (id, _, scheme) = &selected[0];
            verify_taylor(&net, data, id, scheme, &[1e-1, 3e-2, 1e-2, 3e-3]).ok()
        } else {
            None
        };
        let bound_checks = if config.analysis_mode && net.depth() == 1 {
            let lambda_x = data_spectrum(data);
            let h = curvature_floor(&net, data)?;
            let eta = if config.stop_eta > 0.0 { config.stop_eta } else { 0.1 };
            let ctx = TheoryContext::new(data.len(), data.dim(), lambda_x, h, 10.0, eta, config.c)?;
            check_mse_bound(&net, data, &ctx).ok()
        } else {
            None
        };

        let mut chosen = Vec::with_capacity(selected.len());
        let mut predicted_gain_sum = 0.0;
        for (id, gain, scheme) in &selected {
            net = apply_split(&net, id, scheme, config.epsilon)?;
            predicted_gain_sum += gain;
            chosen.push(ChosenSplit {
                neuron: id.clone(),
                m: scheme.m,
                variant: scheme.variant,
                gain: *gain,
            });
            log.iteration += 1;
            let loss_now = net.loss(data)?;
            log.push(net.hidden_neuron_count(), loss_now, format!("split:{}", scheme.variant));
        }
        let loss_after_splits = net.loss(data)?;
        rounds.push(RoundRecord {
            round,
            loss_before_parametric: loss_before,
            loss_after_parametric: loss_after,
            neuron_count: net.hidden_neuron_count(),
            chosen_splits: chosen,
            predicted_gain_sum,
            realized_loss_delta: loss_after_splits - loss_after,
            bound_checks,
            taylor_slope,
        });
    }

    if stop == StopReason::RoundsExhausted {
        log.iteration += 1;
        let final_loss = net.loss(data)?;
        log.push(net.hidden_neuron_count(), final_loss, "stop:rounds-exhausted".to_string());
    }

    let final_loss = net.loss(data)?;
    let trace = GrowthTrace {
        seed: config.seed,
        config: config.clone(),
        rounds,
        stop,
        final_loss,
        final_neuron_count: net.hidden_neuron_count(),
        iterations: log.iteration,
        parametric_steps_total,
        rows: log.rows,
        wall_time_secs: started.elapsed().as_secs_f64(),
    };
    Ok((net, trace))
}

/// The halving step-size schedule ε₀, ε₀/2, ε₀/4, ...
pub fn halving_epsilons(epsilon0: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| epsilon0 / (1u64 << k) as f64).collect()
}

/// Confirms that a scheme with negative predicted gain actually descends:
/// tries each ε in the schedule and returns the first achieving a realized
/// loss decrease. Exhausting the schedule flags a sign error somewhere in
/// the splitting pipeline.
pub fn single_split_descent_check(
    net: &MlpNetwork,
    data: &Dataset,
    id: &NeuronId,
    scheme: &SplitScheme,
    epsilons: &[f64],
) -> Result<f64> {
    if !(scheme.predicted_gain <= -1e-6) {
        return Err(Error::InvalidInput(format!(
            "descent check needs a decisively negative gain, got {}",
            scheme.predicted_gain
        )));
    }
    let base = net.loss(data)?;
    for &eps in epsilons {
        let split = apply_split(net, id, scheme, eps)?;
        if split.loss(data)? < base {
            return Ok(eps);
        }
    }
    Err(Error::PropertyViolation(format!(
        "no epsilon in the schedule achieved descent for predicted gain {}",
        scheme.predicted_gain
    )))
}
