//! Numerical verification of the convergence analysis: the data-spectrum
//! constant λ_X, the curvature floor h, the per-neuron MSE and likelihood
//! bounds driven by the splitting-matrix spectrum radius, the κ_m descent
//! constants, the iteration-count bound, and the initial-width bound.
//!
//! The bounds are exact consequences of the assumptions, so on admissible
//! instances they must hold up to rounding; checking them end-to-end
//! exercises the whole splitting-matrix pipeline.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Activation, Dataset, LossKind, MlpNetwork, NeuronId};
use crate::numerics::{dot, norm, sym_eig, SymMatrix};
use crate::splitting::{kappa_binary, kappa_higher, splitting_matrix};

/// Numerical slack allowed when asserting the exact bounds.
pub const BOUND_SLACK: f64 = 1e-9;

/// Constants of the convergence analysis for one (network, data, c, η)
/// setting: α = n/(d·h²·λ_X), ρ₀ = (η/α)^(1/2), κ_m, and the splitting
/// step-size ceiling ε_max = κ_m·ρ₀/(4C).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryContext {
    pub n: usize,
    pub d: usize,
    pub lambda_x: f64,
    pub h: f64,
    pub alpha: f64,
    /// Assumed bound on the third derivative of the loss (configuration
    /// input; not estimated from the network).
    pub third_derivative_bound: f64,
    pub eta: f64,
    pub c: f64,
    pub kappa: BTreeMap<usize, f64>,
    pub rho0: f64,
}

impl TheoryContext {
    pub fn new(
        n: usize,
        d: usize,
        lambda_x: f64,
        h: f64,
        third_derivative_bound: f64,
        eta: f64,
        c: f64,
    ) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::InvalidInput("n and d must be positive".into()));
        }
        if !(lambda_x >= 0.0) || !(h >= 0.0) {
            return Err(Error::InvalidInput("lambda_X and h must be non-negative".into()));
        }
        if !(third_derivative_bound > 0.0) {
            return Err(Error::InvalidInput("the third-derivative bound C must be positive".into()));
        }
        if !(eta > 0.0) {
            return Err(Error::InvalidInput("the loss target eta must be positive".into()));
        }
        if !(c >= 1.0) {
            return Err(Error::InvalidInput(format!("c must be >= 1, got {c}")));
        }
        let alpha = if lambda_x > 0.0 && h > 0.0 {
            n as f64 / (d as f64 * h * h * lambda_x)
        } else {
            f64::INFINITY
        };
        let rho0 = h * (lambda_x * eta * d as f64 / n as f64).sqrt();
        let mut kappa = BTreeMap::new();
        kappa.insert(2, kappa_binary(c));
        kappa.insert(3, kappa_higher(c));
        kappa.insert(4, kappa_higher(c));
        Ok(TheoryContext {
            n,
            d,
            lambda_x,
            h,
            alpha,
            third_derivative_bound,
            eta,
            c,
            kappa,
            rho0,
        })
    }

    /// Largest admissible splitting step for multiplicity m:
    /// κ_m·ρ₀/(4C).
    pub fn epsilon_max(&self, m: usize) -> f64 {
        self.kappa[&m] * self.rho0 / (4.0 * self.third_derivative_bound)
    }
}

/// λ_X := λmin(XᵀX/d²) where X has columns vec(x⁽ℓ⁾x⁽ℓ⁾ᵀ). The Gram matrix
/// entries are (xₐᵀx_b)², so the d²-dimensional vectorization is never
/// materialized. Returns 0 for rank-deficient X (in particular whenever
/// n > d²).
pub fn data_spectrum(data: &Dataset) -> f64 {
    let n = data.len();
    let d = data.dim() as f64;
    let mut gram = vec![0.0; n * n];
    for a in 0..n {
        for b in a..n {
            let ip = dot(data.input(a), data.input(b));
            gram[a * n + b] = ip * ip;
            gram[b * n + a] = ip * ip;
        }
    }
    let gram = SymMatrix::new(n, gram).expect("finite inputs give a finite Gram matrix");
    let lambda_min = sym_eig(&gram).values[0];
    (lambda_min / (d * d)).max(0.0)
}

/// The curvature floor h = minᵢ,ₗ |σ''(h_{i,ℓ})| over all hidden neurons
/// and samples.
pub fn curvature_floor(net: &MlpNetwork, data: &Dataset) -> Result<f64> {
    let mut floor = f64::INFINITY;
    for id in net.neuron_ids() {
        let signals = net.neuron_signals(data, &id)?;
        for h in &signals.preactivations {
            floor = floor.min(net.activation().second_derivative(*h).abs());
        }
    }
    Ok(floor)
}

/// One neuron's bound-check result. `skipped_reason` is set when a
/// precondition fails (the check is skipped, not failed).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub neuron: NeuronId,
    pub rho: f64,
    pub weight: f64,
    pub bound: f64,
    pub actual: f64,
    pub holds: bool,
    pub skipped_reason: Option<String>,
}

fn skipped(neuron: NeuronId, reason: &str) -> BoundCheck {
    BoundCheck {
        neuron,
        rho: f64::NAN,
        weight: f64::NAN,
        bound: f64::NAN,
        actual: f64::NAN,
        holds: true,
        skipped_reason: Some(reason.to_string()),
    }
}

fn require_depth_one(net: &MlpNetwork) -> Result<()> {
    if net.depth() != 1 {
        return Err(Error::Precondition(
            "bound checks cover one-hidden-layer networks only".into(),
        ));
    }
    Ok(())
}

/// Checks E[(f-y)²] ≤ α·(ρ(Sᵢ)/wᵢ)² for every hidden neuron. The left side
/// carries no 1/2 factor. Exact given the preconditions (λ_X > 0, h > 0,
/// wᵢ ≠ 0), so `holds` allows only rounding slack.
pub fn check_mse_bound(
    net: &MlpNetwork,
    data: &Dataset,
    ctx: &TheoryContext,
) -> Result<Vec<BoundCheck>> {
    require_depth_one(net)?;
    if net.loss_kind() != LossKind::Mse {
        return Err(Error::Precondition("the MSE bound applies to mse-loss networks".into()));
    }
    let ids = net.neuron_ids();
    if ctx.lambda_x == 0.0 || ctx.h == 0.0 {
        let reason = if ctx.lambda_x == 0.0 { "lambda_X is zero" } else { "curvature floor is zero" };
        return Ok(ids.into_iter().map(|id| skipped(id, reason)).collect());
    }
    let n = data.len() as f64;
    let mut actual = 0.0;
    for idx in 0..data.len() {
        let e = net.forward(data.input(idx))? - data.target(idx);
        actual += e * e;
    }
    actual /= n;

    let mut checks = Vec::with_capacity(ids.len());
    for id in ids {
        let (_, index) = net.locate(&id)?;
        let w = net.output_weights()[index];
        if w == 0.0 {
            checks.push(skipped(id, "output weight is zero"));
            continue;
        }
        let s = splitting_matrix(net, data, &id)?;
        let rho = crate::numerics::spectral_extremes(&s).rho;
        let ratio = rho / w;
        let bound = ctx.alpha * ratio * ratio;
        checks.push(BoundCheck {
            neuron: id,
            rho,
            weight: w,
            bound,
            actual,
            holds: actual <= bound + BOUND_SLACK,
            skipped_reason: None,
        });
    }
    Ok(checks)
}

/// Checks likelihood ≥ 1 - √α·ρ(Sⱼ)/|wⱼ| for every hidden neuron of a
/// classification network. Stated under the same single-wᵢ splitting-matrix
/// convention as the MSE bound.
pub fn check_likelihood_bound(
    net: &MlpNetwork,
    data: &Dataset,
    ctx: &TheoryContext,
) -> Result<Vec<BoundCheck>> {
    require_depth_one(net)?;
    if net.loss_kind() != LossKind::Bce {
        return Err(Error::Precondition(
            "the likelihood bound applies to bce-loss networks".into(),
        ));
    }
    let ids = net.neuron_ids();
    if ctx.lambda_x == 0.0 || ctx.h == 0.0 {
        let reason = if ctx.lambda_x == 0.0 { "lambda_X is zero" } else { "curvature floor is zero" };
        return Ok(ids.into_iter().map(|id| skipped(id, reason)).collect());
    }
    let likelihood = net.likelihood(data)?;
    let sqrt_alpha = ctx.alpha.sqrt();

    let mut checks = Vec::with_capacity(ids.len());
    for id in ids {
        let (_, index) = net.locate(&id)?;
        let w = net.output_weights()[index];
        if w == 0.0 {
            checks.push(skipped(id, "output weight is zero"));
            continue;
        }
        let s = splitting_matrix(net, data, &id)?;
        let rho = crate::numerics::spectral_extremes(&s).rho;
        let bound = 1.0 - sqrt_alpha * rho / w.abs();
        checks.push(BoundCheck {
            neuron: id,
            rho,
            weight: w,
            bound,
            actual: likelihood,
            holds: likelihood >= bound - BOUND_SLACK,
            skipped_reason: None,
        });
    }
    Ok(checks)
}

/// Iteration-count bound T = ⌈β·ε⁻²·(n/(dη))^(1/2)⌉ with
/// β = 4·max(L0-η, 0)/(κ_m·h·√λ_X) for triplet/quartet splittings and
/// β = 4·max(L0-η, 0)/(κ₂·h²·λ_X²) for binary splittings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationBound {
    pub t: u64,
    /// False when the requested ε exceeds the ε_max admitted by the
    /// analysis; the bound formula is still evaluated.
    pub epsilon_admissible: bool,
}

pub fn iteration_bound(
    l0: f64,
    ctx: &TheoryContext,
    epsilon: f64,
    m: usize,
) -> Result<IterationBound> {
    if !(2..=4).contains(&m) {
        return Err(Error::InvalidInput(format!("multiplicity {m} not in {{2,3,4}}")));
    }
    if !(epsilon > 0.0) {
        return Err(Error::InvalidInput("epsilon must be positive".into()));
    }
    if !(ctx.eta > 0.0) {
        return Err(Error::InvalidInput("eta must be positive".into()));
    }
    let excess = (l0 - ctx.eta).max(0.0);
    let kappa = ctx.kappa[&m];
    let beta = match m {
        2 => 4.0 * excess / (kappa * ctx.h * ctx.h * ctx.lambda_x * ctx.lambda_x),
        _ => 4.0 * excess / (kappa * ctx.h * ctx.lambda_x.sqrt()),
    };
    let t = beta / (epsilon * epsilon) * (ctx.n as f64 / (ctx.d as f64 * ctx.eta)).sqrt();
    if !t.is_finite() {
        return Err(Error::InvalidInput(
            "iteration bound diverges (zero kappa, h or lambda_X with L0 > eta)".into(),
        ));
    }
    Ok(IterationBound { t: t.ceil() as u64, epsilon_admissible: epsilon <= ctx.epsilon_max(m) })
}

/// Initial-width bound for signed binary splitting: with σ(0) = 0,
/// r_D = max(‖x‖, |y|) over the data and ℓ₀ = r_D(1 + r‖σ‖_Lip), the start
/// network needs m₀ = ⌈max(ℓ₀-η, 0)/(4ε²κ₂ρ₀)⌉ neurons (at least 1).
pub fn initial_width_bound(
    data: &Dataset,
    activation: Activation,
    sigma_lip: f64,
    r: f64,
    ctx: &TheoryContext,
    epsilon: f64,
) -> Result<u64> {
    if activation.value(0.0) != 0.0 {
        return Err(Error::Precondition(format!(
            "activation {} has sigma(0) != 0",
            activation.name()
        )));
    }
    if !(epsilon > 0.0) || !(sigma_lip > 0.0) || !(r > 0.0) {
        return Err(Error::InvalidInput("epsilon, r and the Lipschitz bound must be positive".into()));
    }
    if !(ctx.rho0 > 0.0) {
        return Err(Error::Precondition("rho0 is zero; the bound diverges".into()));
    }
    let r_data = (0..data.len())
        .map(|i| norm(data.input(i)).max(data.target(i).abs()))
        .fold(0.0f64, f64::max);
    let ell0 = r_data * (1.0 + r * sigma_lip);
    let kappa2 = ctx.kappa[&2];
    if kappa2 == 0.0 {
        return Err(Error::Precondition("kappa_2 is zero at c = 1; the bound diverges".into()));
    }
    let m0 = ((ell0 - ctx.eta).max(0.0) / (4.0 * epsilon * epsilon * kappa2 * ctx.rho0)).ceil();
    Ok((m0 as u64).max(1))
}

/// A generated (network, data, context) triple satisfying the analysis
/// preconditions: n ≤ d² inputs with well-separated outer products
/// (smallest singular value of X at least 0.1), rbf pre-activations kept
/// away from the σ'' roots at ±1, nonzero output weights.
#[derive(Debug, Clone)]
pub struct AdmissibleInstance {
    pub net: MlpNetwork,
    pub data: Dataset,
    pub ctx: TheoryContext,
}

/// Smallest singular value floor for the vec(xxᵀ) column matrix.
const MIN_SINGULAR: f64 = 0.1;

fn admissible_inputs<R: Rng>(rng: &mut R, n: usize, d: usize) -> Vec<Vec<f64>> {
    loop {
        let inputs: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| rng.random_range(-1.5..1.5)).collect())
            .collect();
        let data = Dataset::new(inputs.clone(), vec![0.0; n]).expect("generated inputs are finite");
        if data_spectrum(&data) * (d as f64 * d as f64) >= MIN_SINGULAR * MIN_SINGULAR {
            return inputs;
        }
    }
}

fn admissible_thetas<R: Rng>(rng: &mut R, inputs: &[Vec<f64>], width: usize, d: usize) -> Vec<Vec<f64>> {
    'outer: loop {
        let thetas: Vec<Vec<f64>> = (0..width)
            .map(|_| (0..d).map(|_| rng.random_range(-0.5..0.5)).collect())
            .collect();
        // |h| <= 3 holds by the sampling ranges; reject only the band
        // around the sigma'' roots at |h| = 1
        for theta in &thetas {
            for x in inputs {
                let h = dot(theta, x).abs();
                if (0.9..=1.1).contains(&h) {
                    continue 'outer;
                }
            }
        }
        return thetas;
    }
}

fn generate_admissible<R: Rng>(rng: &mut R, loss: LossKind) -> AdmissibleInstance {
    let d = rng.random_range(2..=4usize);
    // vec(xx^T) lies in the d(d+1)/2-dimensional symmetric subspace, so
    // lambda_X > 0 forces n <= d(d+1)/2 (stricter than the rank bound d^2)
    let n = rng.random_range(1..=d * (d + 1) / 2);
    let width = rng.random_range(1..=3usize);
    let inputs = admissible_inputs(rng, n, d);
    let thetas = admissible_thetas(rng, &inputs, width, d);
    let weights: Vec<f64> = (0..width)
        .map(|_| {
            let mag = rng.random_range(0.5..1.5);
            if rng.random_range(0.0..1.0) < 0.5 {
                -mag
            } else {
                mag
            }
        })
        .collect();
    let targets: Vec<f64> = (0..n)
        .map(|_| match loss {
            LossKind::Mse => rng.random_range(-1.5..1.5),
            LossKind::Bce => {
                if rng.random_range(0.0..1.0) < 0.5 {
                    0.0
                } else {
                    1.0
                }
            }
        })
        .collect();
    let data = Dataset::new(inputs, targets).expect("generated data is valid");
    let net = MlpNetwork::new(Activation::Rbf, loss, vec![thetas], weights)
        .expect("generated network is valid");
    let lambda_x = data_spectrum(&data);
    let h = curvature_floor(&net, &data).expect("signals exist for generated instances");
    let ctx = TheoryContext::new(n, d, lambda_x, h, 10.0, 0.1, 3.0)
        .expect("generated constants are valid");
    AdmissibleInstance { net, data, ctx }
}

/// Random regression instance satisfying the MSE-bound preconditions.
pub fn generate_admissible_mse<R: Rng>(rng: &mut R) -> AdmissibleInstance {
    generate_admissible(rng, LossKind::Mse)
}

/// Random binary-classification instance satisfying the likelihood-bound
/// preconditions.
pub fn generate_admissible_classification<R: Rng>(rng: &mut R) -> AdmissibleInstance {
    generate_admissible(rng, LossKind::Bce)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn data_spectrum_scalar_example() {
        // d = 1, single input x = 2: X = [4], X^T X / 1 = 16
        let data = Dataset::new(vec![vec![2.0]], vec![0.0]).unwrap();
        assert_eq!(data_spectrum(&data), 16.0);
    }

    #[test]
    fn data_spectrum_duplicate_inputs_is_zero() {
        let data = Dataset::new(vec![vec![1.0, 0.5], vec![1.0, 0.5]], vec![0.0, 0.0]).unwrap();
        assert!(data_spectrum(&data).abs() < 1e-12);
    }

    #[test]
    fn data_spectrum_rank_forces_zero_when_n_exceeds_d_squared() {
        // d = 1, inputs {1, 2}: n = 2 > d^2 = 1
        let data = Dataset::new(vec![vec![1.0], vec![2.0]], vec![0.0, 0.0]).unwrap();
        assert_eq!(data_spectrum(&data), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let d = 2;
            let n = d * d + rng.random_range(1..4usize);
            let inputs: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect();
            let data = Dataset::new(inputs, vec![0.0; n]).unwrap();
            assert!(data_spectrum(&data) < 1e-10, "rank argument violated");
        }
    }

    #[test]
    fn data_spectrum_positive_on_admissible_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10 {
            let inst = generate_admissible_mse(&mut rng);
            assert!(inst.ctx.lambda_x > 0.0);
            assert!(inst.data.len() <= inst.ctx.d * inst.ctx.d);
        }
    }

    #[test]
    fn curvature_floor_examples() {
        // all pre-activations zero -> |sigma''(0)| = 1
        let net = MlpNetwork::new(
            Activation::Rbf,
            LossKind::Mse,
            vec![vec![vec![0.0, 0.0]]],
            vec![1.0],
        )
        .unwrap();
        let data = Dataset::new(vec![vec![1.0, 0.0], vec![0.2, 0.4]], vec![0.0, 0.0]).unwrap();
        assert_eq!(curvature_floor(&net, &data).unwrap(), 1.0);

        // a pre-activation of exactly 1 hits the sigma'' root
        let net = MlpNetwork::new(
            Activation::Rbf,
            LossKind::Mse,
            vec![vec![vec![1.0, 0.0]]],
            vec![1.0],
        )
        .unwrap();
        let data = Dataset::new(vec![vec![1.0, 0.0]], vec![0.0]).unwrap();
        assert_eq!(curvature_floor(&net, &data).unwrap(), 0.0);
    }

    #[test]
    fn curvature_floor_matches_exhaustive_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let net = crate::model::tests::random_net(&mut rng, Activation::Rbf, LossKind::Mse, &[3], 2);
        let data = crate::model::tests::random_data(&mut rng, 6, 2, false);
        let floor = curvature_floor(&net, &data).unwrap();
        let mut expected = f64::INFINITY;
        for neuron in &net.layers()[0] {
            for i in 0..data.len() {
                let h = dot(&neuron.incoming, data.input(i));
                expected = expected.min(Activation::Rbf.second_derivative(h).abs());
            }
        }
        assert_eq!(floor, expected);
    }

    #[test]
    fn context_invariants() {
        let ctx = TheoryContext::new(4, 4, 1.0, 1.0, 10.0, 0.5, 3.0).unwrap();
        assert!((ctx.alpha * (ctx.d as f64 * ctx.h * ctx.h * ctx.lambda_x) - ctx.n as f64).abs() < 1e-9);
        let expected_rho0 = ctx.h * (ctx.lambda_x * ctx.eta * ctx.d as f64 / ctx.n as f64).sqrt();
        assert!((ctx.rho0 - expected_rho0).abs() < 1e-12);
        assert_eq!(ctx.kappa[&2], 0.5);
        assert_eq!(ctx.kappa[&3], 1.0);
        assert_eq!(ctx.kappa[&4], 1.0);
    }

    #[test]
    fn kappa_chain() {
        for &c in &[1.0, 1.3, 2.0, 3.0, 10.0] {
            let ctx = TheoryContext::new(4, 2, 1.0, 1.0, 10.0, 0.1, c).unwrap();
            assert!(0.0 <= ctx.kappa[&2]);
            assert!(ctx.kappa[&2] <= ctx.kappa[&3]);
            assert_eq!(ctx.kappa[&3], ctx.kappa[&4]);
        }
    }

    #[test]
    fn mse_bound_hand_example() {
        let net = MlpNetwork::new(
            Activation::Rbf,
            LossKind::Mse,
            vec![vec![vec![0.0, 0.0]]],
            vec![1.0],
        )
        .unwrap();
        let data = Dataset::new(vec![vec![1.0, 0.0]], vec![0.0]).unwrap();
        let lambda_x = data_spectrum(&data);
        assert_eq!(lambda_x, 0.25);
        let h = curvature_floor(&net, &data).unwrap();
        assert_eq!(h, 1.0);
        let ctx = TheoryContext::new(1, 2, lambda_x, h, 10.0, 0.1, 3.0).unwrap();
        assert_eq!(ctx.alpha, 2.0);
        let checks = check_mse_bound(&net, &data, &ctx).unwrap();
        assert_eq!(checks.len(), 1);
        let check = &checks[0];
        assert_eq!(check.actual, 1.0);
        assert_eq!(check.rho, 1.0);
        assert_eq!(check.bound, 2.0);
        assert!(check.holds);
    }

    #[test]
    fn mse_bound_perfect_fit() {
        let net = MlpNetwork::new(
            Activation::Rbf,
            LossKind::Mse,
            vec![vec![vec![0.0, 0.0]]],
            vec![1.0],
        )
        .unwrap();
        let data = Dataset::new(vec![vec![1.0, 0.0]], vec![1.0]).unwrap();
        let ctx = TheoryContext::new(1, 2, data_spectrum(&data), 1.0, 10.0, 0.1, 3.0).unwrap();
        let checks = check_mse_bound(&net, &data, &ctx).unwrap();
        assert_eq!(checks[0].actual, 0.0);
        assert_eq!(checks[0].rho, 0.0);
        assert_eq!(checks[0].bound, 0.0);
        assert!(checks[0].holds);
    }

    #[test]
    fn mse_bound_holds_on_admissible_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for trial in 0..50 {
            let inst = generate_admissible_mse(&mut rng);
            let checks = check_mse_bound(&inst.net, &inst.data, &inst.ctx).unwrap();
            for check in checks {
                assert!(check.skipped_reason.is_none(), "trial {trial} skipped unexpectedly");
                assert!(
                    check.holds,
                    "trial {trial} neuron {}: actual {} > bound {}",
                    check.neuron, check.actual, check.bound
                );
                assert!(check.bound - check.actual >= -BOUND_SLACK);
            }
        }
    }

    #[test]
    fn likelihood_bound_holds_on_admissible_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..50 {
            let inst = generate_admissible_classification(&mut rng);
            let checks = check_likelihood_bound(&inst.net, &inst.data, &inst.ctx).unwrap();
            for check in checks {
                assert!(check.skipped_reason.is_none());
                assert!(
                    check.holds,
                    "trial {trial} neuron {}: likelihood {} < bound {}",
                    check.neuron, check.actual, check.bound
                );
            }
        }
    }

    #[test]
    fn likelihood_bound_zero_output_case() {
        // f == 0 gives likelihood 1/2; check the inequality numerically
        let net = MlpNetwork::new(
            Activation::Rbf,
            LossKind::Bce,
            vec![vec![vec![0.3, 0.1]]],
            vec![0.0],
        )
        .unwrap();
        let data = Dataset::new(vec![vec![1.0, 0.2]], vec![1.0]).unwrap();
        let ctx = TheoryContext::new(1, 2, data_spectrum(&data), 1.0, 10.0, 0.1, 3.0).unwrap();
        let checks = check_likelihood_bound(&net, &data, &ctx).unwrap();
        // w = 0 means the per-neuron bound degenerates; it must be skipped
        assert!(checks[0].skipped_reason.is_some());
    }

    #[test]
    fn bound_checks_skip_on_degenerate_preconditions() {
        let net = MlpNetwork::new(
            Activation::Rbf,
            LossKind::Mse,
            vec![vec![vec![0.0, 0.0]]],
            vec![1.0],
        )
        .unwrap();
        let data = Dataset::new(vec![vec![1.0, 0.0], vec![1.0, 0.0]], vec![0.0, 0.0]).unwrap();
        let ctx = TheoryContext::new(2, 2, 0.0, 1.0, 10.0, 0.1, 3.0).unwrap();
        let checks = check_mse_bound(&net, &data, &ctx).unwrap();
        assert!(checks.iter().all(|c| c.skipped_reason.is_some() && c.holds));
    }

    #[test]
    fn iteration_bound_hand_example() {
        // c = 3 (kappa_3 = 1), h = 1, lambda_X = 1, L0 = 1, eta = 0.5,
        // eps = 0.1, n = 4, d = 4: beta = 2, T = ceil(200 * sqrt(2)) = 283
        let ctx = TheoryContext::new(4, 4, 1.0, 1.0, 10.0, 0.5, 3.0).unwrap();
        let bound = iteration_bound(1.0, &ctx, 0.1, 3).unwrap();
        assert_eq!(bound.t, 283);
    }

    #[test]
    fn iteration_bound_zero_when_target_met() {
        let ctx = TheoryContext::new(4, 4, 1.0, 1.0, 10.0, 0.5, 3.0).unwrap();
        assert_eq!(iteration_bound(0.5, &ctx, 0.1, 3).unwrap().t, 0);
        assert_eq!(iteration_bound(0.2, &ctx, 0.1, 2).unwrap().t, 0);
    }

    #[test]
    fn iteration_bound_scaling() {
        let ctx = TheoryContext::new(16, 4, 1.0, 1.0, 10.0, 0.5, 3.0).unwrap();
        let t1 = iteration_bound(2.0, &ctx, 0.05, 3).unwrap().t;
        let t2 = iteration_bound(2.0, &ctx, 0.1, 3).unwrap().t;
        // doubling eps divides T by 4 up to ceiling effects
        assert!((t1 as f64 / t2 as f64 - 4.0).abs() < 0.01);

        // monotone: non-increasing in eps and eta, non-decreasing in L0
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            let eta_a = rng.random_range(0.05..1.0);
            let eta_b = eta_a + rng.random_range(0.0..0.5);
            let l0_a = rng.random_range(0.5..3.0);
            let l0_b = l0_a + rng.random_range(0.0..1.0);
            let eps_a = rng.random_range(0.01..0.2);
            let eps_b = eps_a + rng.random_range(0.0..0.1);
            let m = rng.random_range(2..=4usize);
            let ctx_a = TheoryContext::new(16, 4, 1.0, 1.0, 10.0, eta_a, 3.0).unwrap();
            let ctx_b = TheoryContext::new(16, 4, 1.0, 1.0, 10.0, eta_b, 3.0).unwrap();
            let base = iteration_bound(l0_a, &ctx_a, eps_a, m).unwrap().t;
            assert!(iteration_bound(l0_a, &ctx_a, eps_b, m).unwrap().t <= base);
            assert!(iteration_bound(l0_a, &ctx_b, eps_a, m).unwrap().t <= base);
            assert!(iteration_bound(l0_b, &ctx_a, eps_a, m).unwrap().t >= base);
        }
    }

    #[test]
    fn iteration_bound_epsilon_admissibility_flag() {
        let ctx = TheoryContext::new(4, 4, 1.0, 1.0, 10.0, 0.5, 3.0).unwrap();
        let eps_max = ctx.epsilon_max(3);
        assert!(iteration_bound(1.0, &ctx, eps_max * 0.9, 3).unwrap().epsilon_admissible);
        assert!(!iteration_bound(1.0, &ctx, eps_max * 1.1, 3).unwrap().epsilon_admissible);
    }

    #[test]
    fn initial_width_examples() {
        // tanh, data with |x|, |y| <= 1, r = 1, lip = 1 -> ell0 = 2
        let data = Dataset::new(vec![vec![1.0], vec![-0.5]], vec![1.0, 0.3]).unwrap();
        let ctx = TheoryContext::new(2, 1, 1.0, 1.0, 10.0, 0.5, 3.0).unwrap();
        let m0 = initial_width_bound(&data, Activation::Tanh, 1.0, 1.0, &ctx, 0.1).unwrap();
        let ell0 = 2.0;
        let expected = ((ell0 - 0.5) / (4.0 * 0.01 * 0.5 * ctx.rho0)).ceil() as u64;
        assert_eq!(m0, expected.max(1));

        // target already above the loss proxy -> minimal width 1
        let ctx_high = TheoryContext::new(2, 1, 1.0, 1.0, 10.0, 5.0, 3.0).unwrap();
        assert_eq!(
            initial_width_bound(&data, Activation::Tanh, 1.0, 1.0, &ctx_high, 0.1).unwrap(),
            1
        );

        // rbf has sigma(0) = 1, rejected
        assert!(matches!(
            initial_width_bound(&data, Activation::Rbf, 1.0, 1.0, &ctx, 0.1),
            Err(Error::Precondition(_))
        ));
    }
}
