//! Choosing what to split: threshold/top-k ranking of neurons by their
//! signed gains, and an exact knapsack plan assigning a multiplicity
//! m ∈ {1,2,3,4} to every neuron under a total-copy budget (m = 1 keeps the
//! neuron unsplit).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::NeuronId;
use crate::splitting::{NeuronSplitReport, SplitScheme};

/// Per-neuron gains G_{m,ℓ} for m ∈ {1,2,3,4}, with G_{1,ℓ} = 0 and the
/// scheme achieving each entry (none for m = 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainRow {
    pub neuron: NeuronId,
    pub gains: [f64; 4],
    pub schemes: [Option<SplitScheme>; 4],
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GainTable {
    pub rows: Vec<GainRow>,
}

impl GainTable {
    pub fn from_reports(reports: &[NeuronSplitReport]) -> Self {
        let rows = reports
            .iter()
            .map(|report| {
                let mut gains = [0.0; 4];
                let mut schemes: [Option<SplitScheme>; 4] = [None, None, None, None];
                for m in 2..=4usize {
                    let (gain, scheme) = &report.gains[&m];
                    gains[m - 1] = *gain;
                    schemes[m - 1] = Some(scheme.clone());
                }
                GainRow { neuron: report.neuron.clone(), gains, schemes }
            })
            .collect();
        GainTable { rows }
    }

    /// Bare-values table (schemes absent); used by tests and the verify
    /// suites where only the objective matters.
    pub fn from_values(values: Vec<(NeuronId, [f64; 4])>) -> Self {
        GainTable {
            rows: values
                .into_iter()
                .map(|(neuron, gains)| GainRow { neuron, gains, schemes: [None, None, None, None] })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// A resolved split plan: the chosen multiplicity per neuron, total copies
/// Σ m_ℓ, and the predicted total gain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub choices: Vec<(NeuronId, usize, Option<SplitScheme>)>,
    pub total_new_copies: usize,
    pub total_predicted_gain: f64,
}

impl SplitPlan {
    pub fn multiplicities(&self) -> Vec<usize> {
        self.choices.iter().map(|(_, m, _)| *m).collect()
    }
}

/// Neurons whose gain at multiplicity `m` clears the threshold
/// (G ≤ -eta), sorted most negative first with ties broken by id, truncated
/// to ⌈top_fraction · count⌉.
pub fn rank_neurons(
    reports: &[NeuronSplitReport],
    m: usize,
    eta: f64,
    top_fraction: f64,
) -> Vec<NeuronId> {
    let fraction = top_fraction.clamp(f64::MIN_POSITIVE, 1.0);
    let mut qualified: Vec<(f64, NeuronId)> = reports
        .iter()
        .filter_map(|report| {
            let gain = report.gain(m);
            (gain <= -eta).then(|| (gain, report.neuron.clone()))
        })
        .collect();
    qualified.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then_with(|| a.1.cmp(&b.1)));
    let keep = (fraction * qualified.len() as f64).ceil() as usize;
    qualified.truncate(keep);
    qualified.into_iter().map(|(_, id)| id).collect()
}

/// Exact minimization of Σ G_{m_ℓ,ℓ} subject to Σ m_ℓ ≤ budget via dynamic
/// programming over (neuron, remaining budget). Deterministic tie-break:
/// smaller total gain, then fewer total copies, then the lexicographically
/// smallest multiplicity vector.
pub fn knapsack_plan(table: &GainTable, budget: usize) -> Result<SplitPlan> {
    let n = table.len();
    if budget < n {
        return Err(Error::InvalidInput(format!(
            "budget {budget} cannot keep all {n} neurons (need at least one slot each)"
        )));
    }
    if n == 0 {
        return Ok(SplitPlan { choices: vec![], total_new_copies: 0, total_predicted_gain: 0.0 });
    }

    // best[i][b]: optimal (gain, copies) for neurons i.. with budget b,
    // choice[i][b]: the smallest multiplicity achieving it
    let width = budget + 1;
    let mut best = vec![(f64::INFINITY, usize::MAX); (n + 1) * width];
    let mut choice = vec![0usize; n * width];
    for b in 0..width {
        best[n * width + b] = (0.0, 0);
    }
    for i in (0..n).rev() {
        let remaining = n - i - 1; // neurons after this one need >= 1 slot each
        for b in 0..width {
            if b < remaining + 1 {
                continue; // not reachable with one slot per neuron
            }
            let mut incumbent = (f64::INFINITY, usize::MAX);
            let mut picked = 0;
            let max_m = (b - remaining).min(4);
            for m in 1..=max_m {
                let suffix = best[(i + 1) * width + (b - m)];
                if suffix.1 == usize::MAX {
                    continue;
                }
                let cand = (table.rows[i].gains[m - 1] + suffix.0, m + suffix.1);
                if cand.0 < incumbent.0 || (cand.0 == incumbent.0 && cand.1 < incumbent.1) {
                    incumbent = cand;
                    picked = m;
                }
            }
            best[i * width + b] = incumbent;
            choice[i * width + b] = picked;
        }
    }

    let mut choices = Vec::with_capacity(n);
    let mut b = budget;
    let mut total_gain = 0.0;
    let mut total_copies = 0;
    for (i, row) in table.rows.iter().enumerate() {
        let m = choice[i * width + b];
        total_gain += row.gains[m - 1];
        total_copies += m;
        choices.push((row.neuron.clone(), m, row.schemes[m - 1].clone()));
        b -= m;
    }
    Ok(SplitPlan { choices, total_new_copies: total_copies, total_predicted_gain: total_gain })
}

/// Reference solver: iterates every multiplicity vector in {1,2,3,4}^N and
/// applies the same tie-break. Exponential; used only as the verification
/// oracle for [`knapsack_plan`] on small instances.
pub fn knapsack_enumerate(table: &GainTable, budget: usize) -> Result<SplitPlan> {
    let n = table.len();
    if budget < n {
        return Err(Error::InvalidInput(format!(
            "budget {budget} cannot keep all {n} neurons (need at least one slot each)"
        )));
    }
    if n == 0 {
        return Ok(SplitPlan { choices: vec![], total_new_copies: 0, total_predicted_gain: 0.0 });
    }
    let mut best: Option<(f64, usize, Vec<usize>)> = None;
    let mut ms = vec![1usize; n];
    loop {
        let copies: usize = ms.iter().sum();
        if copies <= budget {
            let gain: f64 = ms.iter().enumerate().map(|(i, &m)| table.rows[i].gains[m - 1]).sum();
            let better = match &best {
                None => true,
                Some(b) => {
                    gain < b.0
                        || (gain == b.0 && copies < b.1)
                        || (gain == b.0 && copies == b.1 && ms < b.2)
                }
            };
            if better {
                best = Some((gain, copies, ms.clone()));
            }
        }
        // odometer over {1,2,3,4}^n
        let mut k = n;
        loop {
            if k == 0 {
                let (gain, copies, ms) = best.expect("the all-ones vector is always feasible");
                let choices = table
                    .rows
                    .iter()
                    .zip(&ms)
                    .map(|(row, &m)| (row.neuron.clone(), m, row.schemes[m - 1].clone()))
                    .collect();
                return Ok(SplitPlan {
                    choices,
                    total_new_copies: copies,
                    total_predicted_gain: gain,
                });
            }
            k -= 1;
            if ms[k] < 4 {
                ms[k] += 1;
                break;
            }
            ms[k] = 1;
        }
    }
}
