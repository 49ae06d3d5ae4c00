//! Paired Monte Carlo experiment over waveform arms.
//!
//! Every trial draws one target, one interference channel, one unit-scale
//! perturbation pattern and one noise realization, then evaluates four arms
//! against exactly those draws:
//!
//! - `original`: the unprojected orthogonal waveform;
//! - `nsp`: projected onto the null space of the unperturbed channel `H_I`;
//! - `nsp_perturbed`: per `h_rms`, projected onto the null space of
//!   `H_I + ΔH_I` (or of `H_I` when the projection target is stale);
//! - `stale`: per `h_rms`, the `nsp` waveform seen through `H_I + ΔH_I`,
//!   i.e. the interference leaked when the radar's channel knowledge is old.
//!
//! Random draws come from ChaCha8 substreams keyed by the master seed, with
//! stream id `trial_id · 16 + tag`, so a trial's result does not depend on
//! execution order or thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::array::ArrayGeometry;
use crate::channel::{
    perturbed_channel, sample_interference_channel, sample_perturbation, InterferenceChannel,
    PerturbationModel, PerturbationStyle,
};
use crate::estimator::{estimate_with_table, received_with_noise, sample_noise, MLGrid, SteeringTable};
use crate::nsp::{leakage, null_space_projector, project_waveform};
use crate::waveform::{correlation_of, generate_orthogonal_bpsk, CorrelationMatrix};
use crate::{CMatrix, Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProjectionTarget {
    /// Null space of the perturbed channel the radar actually faces.
    #[default]
    PerturbedChannel,
    /// Null space of the unperturbed channel while the true channel is perturbed.
    StaleChannel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TargetPlacement {
    /// Uniform over grid points within `±max_target_angle_deg`.
    #[default]
    Random,
    /// Trial `i` uses the `i`-th such grid point, cycling.
    Sweep,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub m_tx: usize,
    pub m_rx: usize,
    pub n_rx: usize,
    pub num_samples: usize,
    /// Element spacing in wavelengths.
    pub element_spacing: f64,
    pub grid_step_deg: f64,
    /// Per-sample SNR at one receive antenna; `inf` disables noise.
    pub snr_db: f64,
    pub h_rms_values: Vec<f64>,
    pub num_trials: usize,
    pub master_seed: u64,
    pub perturbation_style: PerturbationStyle,
    pub projection_target: ProjectionTarget,
    pub placement: TargetPlacement,
    pub max_target_angle_deg: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            m_tx: 4,
            m_rx: 4,
            n_rx: 2,
            num_samples: 256,
            element_spacing: 0.5,
            grid_step_deg: 0.5,
            snr_db: 25.0,
            h_rms_values: vec![1.0, 2.0, 3.0, 4.0],
            num_trials: 1000,
            master_seed: 0x5eed,
            perturbation_style: PerturbationStyle::RealPositive,
            projection_target: ProjectionTarget::PerturbedChannel,
            placement: TargetPlacement::Random,
            max_target_angle_deg: 60.0,
        }
    }
}

fn invalid(field: &str, message: impl Into<String>) -> Error {
    Error::Config {
        field: field.into(),
        message: message.into(),
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m_tx == 0 {
            return Err(invalid("m_tx", "must be at least 1"));
        }
        if self.m_rx == 0 {
            return Err(invalid("m_rx", "must be at least 1"));
        }
        if self.n_rx == 0 {
            return Err(invalid("n_rx", "must be at least 1"));
        }
        if self.n_rx >= self.m_tx {
            return Err(invalid(
                "n_rx",
                format!(
                    "no null space: n_rx ({}) must be smaller than m_tx ({})",
                    self.n_rx, self.m_tx
                ),
            ));
        }
        if self.num_trials == 0 {
            return Err(invalid("num_trials", "must be positive"));
        }
        generate_orthogonal_bpsk(self.m_tx, self.num_samples)
            .map_err(|e| invalid("num_samples", e.to_string()))?;
        if !(self.element_spacing > 0.0 && self.element_spacing.is_finite()) {
            return Err(invalid("element_spacing", "must be positive"));
        }
        MLGrid::uniform(self.grid_step_deg).map_err(|e| invalid("grid_step_deg", e.to_string()))?;
        if self.snr_db.is_nan() || self.snr_db == f64::NEG_INFINITY {
            return Err(invalid("snr_db", "must be a number or inf"));
        }
        if self.h_rms_values.is_empty() {
            return Err(invalid("h_rms", "sweep needs at least one value"));
        }
        if let Some(h) = self.h_rms_values.iter().find(|h| !(**h >= 0.0 && h.is_finite())) {
            return Err(invalid("h_rms", format!("{h} is not a finite nonnegative value")));
        }
        if !(self.max_target_angle_deg > 0.0 && self.max_target_angle_deg <= 90.0) {
            return Err(invalid("max_target_angle_deg", "must be in (0, 90]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Arm {
    Original,
    Nsp,
    NspPerturbed,
    Stale,
}

impl Arm {
    pub const ALL: [Arm; 4] = [Arm::Original, Arm::Nsp, Arm::NspPerturbed, Arm::Stale];

    pub fn name(self) -> &'static str {
        match self {
            Arm::Original => "original",
            Arm::Nsp => "nsp",
            Arm::NspPerturbed => "nsp_perturbed",
            Arm::Stale => "stale",
        }
    }

    /// Whether the arm is swept over `h_rms` (otherwise it is reported at `h_rms = 0`).
    pub fn is_perturbed(self) -> bool {
        matches!(self, Arm::NspPerturbed | Arm::Stale)
    }
}

/// What one arm produced in one trial.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ArmOutcome {
    pub theta_hat_deg: Option<f64>,
    /// `‖H_true X̆‖_F / ‖X̆‖_F` against the channel this arm is exposed to.
    pub leakage: Option<f64>,
    pub error: Option<String>,
}

impl ArmOutcome {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }

    fn failure(err: &Error) -> Self {
        Self {
            theta_hat_deg: None,
            leakage: None,
            error: Some(err.to_string()),
        }
    }
}

/// One trial at one `h_rms`. The `original` and `nsp` arms are shared by all
/// records of the same trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub trial_id: u64,
    pub h_rms: f64,
    pub theta_true_deg: f64,
    pub original: ArmOutcome,
    pub nsp: ArmOutcome,
    pub nsp_perturbed: ArmOutcome,
    pub stale: ArmOutcome,
    /// Nullity of the unperturbed channel.
    pub nullity: usize,
    /// Nullity of the channel the `nsp_perturbed` arm projected onto.
    pub nullity_perturbed: Option<usize>,
}

impl TrialResult {
    pub fn arm(&self, arm: Arm) -> &ArmOutcome {
        match arm {
            Arm::Original => &self.original,
            Arm::Nsp => &self.nsp,
            Arm::NspPerturbed => &self.nsp_perturbed,
            Arm::Stale => &self.stale,
        }
    }

    pub fn theta_hat_original(&self) -> Option<f64> {
        self.original.theta_hat_deg
    }

    pub fn theta_hat_nsp(&self) -> Option<f64> {
        self.nsp.theta_hat_deg
    }

    pub fn theta_hat_nsp_perturbed(&self) -> Option<f64> {
        self.nsp_perturbed.theta_hat_deg
    }

    pub fn leakage_stale(&self) -> Option<f64> {
        self.stale.leakage
    }

    pub fn failed(&self) -> bool {
        Arm::ALL.iter().any(|&a| self.arm(a).failed())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArmSummary {
    pub arm: Arm,
    pub h_rms: f64,
    pub rmse_deg: f64,
    pub bias_deg: f64,
    pub mean_leakage: f64,
    pub mean_leakage_sq: f64,
    /// Trials with a successful estimate for this arm.
    pub n_trials: usize,
    pub n_failed: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentSummary {
    pub rows: Vec<ArmSummary>,
    pub num_trials: usize,
    pub failed_trials: usize,
}

impl ExperimentSummary {
    pub fn row(&self, arm: Arm, h_rms: f64) -> Option<&ArmSummary> {
        self.rows
            .iter()
            .find(|r| r.arm == arm && (!arm.is_perturbed() || r.h_rms == h_rms))
    }
}

#[repr(u64)]
#[derive(Debug, Clone, Copy)]
pub enum StreamTag {
    Target = 0,
    Channel = 1,
    Perturbation = 2,
    Noise = 3,
}

/// Independent random stream for `(master_seed, trial_id, tag)`.
pub fn substream(master_seed: u64, trial_id: u64, tag: StreamTag) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial_id.wrapping_mul(16).wrapping_add(tag as u64));
    rng
}

/// Per-sample noise variance for a unit-magnitude path gain:
/// `σ² = (trace(R)/L) / SNR`, i.e. transmitted power per sample over noise.
pub fn noise_power_for(snr_db: f64, correlation: &CorrelationMatrix, num_samples: usize) -> f64 {
    if snr_db == f64::INFINITY {
        return 0.0;
    }
    let signal = correlation.trace() / num_samples as f64;
    signal / 10f64.powf(snr_db / 10.0)
}

/// Precomputed, trial-independent state of an experiment.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub geometry: ArrayGeometry,
    pub waveform: CMatrix,
    pub correlation: CorrelationMatrix,
    pub grid: MLGrid,
    pub steering: SteeringTable,
    /// Grid indices eligible as true target angles.
    pub target_indices: Vec<usize>,
    pub noise_power: f64,
}

struct Estimate {
    theta_deg: f64,
}

impl Experiment {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let geometry = ArrayGeometry::with_spacing(config.m_tx, config.m_rx, config.element_spacing)?;
        let waveform = generate_orthogonal_bpsk(config.m_tx, config.num_samples)?.samples;
        let correlation = correlation_of(&waveform);
        let grid = MLGrid::uniform(config.grid_step_deg)?;
        let limit = config.max_target_angle_deg + 1e-9;
        let target_indices: Vec<usize> = grid
            .degrees()
            .iter()
            .enumerate()
            .filter(|(_, d)| d.abs() <= limit)
            .map(|(i, _)| i)
            .collect();
        let noise_power = noise_power_for(config.snr_db, &correlation, config.num_samples);
        let steering = SteeringTable::new(&grid, &geometry);
        Ok(Self {
            config,
            geometry,
            waveform,
            correlation,
            grid,
            steering,
            target_indices,
            noise_power,
        })
    }

    fn estimate(&self, transmitted: &CMatrix, theta: f64, gain: C64, noise: &CMatrix) -> Result<Estimate> {
        let r = correlation_of(transmitted);
        let y = received_with_noise(&self.geometry, transmitted, theta, gain, noise, self.noise_power)?;
        let idx = estimate_with_table(&y, transmitted, &r, &self.steering, self.geometry.num_rx)?;
        Ok(Estimate {
            theta_deg: self.grid.degrees()[idx],
        })
    }

    fn projected_arm(
        &self,
        project_onto: &InterferenceChannel,
        exposed_to: &InterferenceChannel,
        theta: f64,
        gain: C64,
        noise: &CMatrix,
    ) -> (ArmOutcome, Option<usize>, Option<CMatrix>) {
        let run = || -> Result<(ArmOutcome, usize, CMatrix)> {
            let (p, nullity) = null_space_projector(project_onto)?;
            let xp = project_waveform(&p, &self.waveform)?;
            let leak = leakage(exposed_to, &xp)?;
            let est = self.estimate(&xp, theta, gain, noise)?;
            Ok((
                ArmOutcome {
                    theta_hat_deg: Some(est.theta_deg),
                    leakage: Some(leak),
                    error: None,
                },
                nullity,
                xp,
            ))
        };
        match run() {
            Ok((outcome, nullity, xp)) => (outcome, Some(nullity), Some(xp)),
            Err(e) => (ArmOutcome::failure(&e), None, None),
        }
    }

    /// All records of one trial, one per configured `h_rms`.
    pub fn run_trial(&self, trial_id: u64) -> Vec<TrialResult> {
        let cfg = &self.config;
        let seed = cfg.master_seed;

        let mut target_rng = substream(seed, trial_id, StreamTag::Target);
        let target_idx = match cfg.placement {
            TargetPlacement::Random => {
                self.target_indices[target_rng.random_range(0..self.target_indices.len())]
            }
            TargetPlacement::Sweep => {
                self.target_indices[(trial_id % self.target_indices.len() as u64) as usize]
            }
        };
        let theta_true_deg = self.grid.degrees()[target_idx];
        let theta = theta_true_deg.to_radians();
        let gain = C64::from_polar(1.0, 2.0 * std::f64::consts::PI * target_rng.random::<f64>());

        let h = sample_interference_channel(cfg.n_rx, cfg.m_tx, &mut substream(seed, trial_id, StreamTag::Channel));
        let noise = sample_noise(
            cfg.m_rx,
            cfg.num_samples,
            self.noise_power,
            &mut substream(seed, trial_id, StreamTag::Noise),
        );

        let original = match self.estimate(&self.waveform, theta, gain, &noise) {
            Ok(est) => ArmOutcome {
                theta_hat_deg: Some(est.theta_deg),
                leakage: leakage(&h, &self.waveform).ok(),
                error: None,
            },
            Err(e) => ArmOutcome::failure(&e),
        };
        let (nsp, nullity, nsp_waveform) = self.projected_arm(&h, &h, theta, gain, &noise);
        let nullity = nullity.unwrap_or(0);

        cfg.h_rms_values
            .iter()
            .map(|&h_rms| {
                let model = PerturbationModel::new(h_rms, cfg.perturbation_style)
                    .expect("h_rms validated with the config");
                // every h_rms restarts the same stream, so perturbations are nested scalings
                let mut prng = substream(seed, trial_id, StreamTag::Perturbation);
                let dh = sample_perturbation(cfg.n_rx, cfg.m_tx, &model, &mut prng);
                let h_pert = perturbed_channel(&h, &dh).expect("perturbation has the channel's shape");

                let target = match cfg.projection_target {
                    ProjectionTarget::PerturbedChannel => &h_pert,
                    ProjectionTarget::StaleChannel => &h,
                };
                let (nsp_perturbed, nullity_perturbed, _) =
                    self.projected_arm(target, &h_pert, theta, gain, &noise);

                let stale = match &nsp_waveform {
                    Some(xp) => ArmOutcome {
                        theta_hat_deg: nsp.theta_hat_deg,
                        leakage: leakage(&h_pert, xp).ok(),
                        error: None,
                    },
                    None => nsp.clone(),
                };

                TrialResult {
                    trial_id,
                    h_rms,
                    theta_true_deg,
                    original: original.clone(),
                    nsp: nsp.clone(),
                    nsp_perturbed,
                    stale,
                    nullity,
                    nullity_perturbed,
                }
            })
            .collect()
    }
}

/// Runs one trial of `config`; fails only if the config itself is invalid.
pub fn run_trial(config: &ExperimentConfig, trial_id: u64) -> Result<Vec<TrialResult>> {
    Ok(Experiment::new(config.clone())?.run_trial(trial_id))
}

/// Runs every trial (in parallel) and aggregates them.
pub fn run_experiment(config: &ExperimentConfig) -> Result<(ExperimentSummary, Vec<TrialResult>)> {
    let experiment = Experiment::new(config.clone())?;
    let trials: Vec<TrialResult> = (0..config.num_trials as u64)
        .into_par_iter()
        .map(|id| experiment.run_trial(id))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    let summary = summarize(&trials, &config.h_rms_values);
    if summary.num_trials > 0 && summary.failed_trials == summary.num_trials {
        return Err(Error::AllTrialsFailed(summary.num_trials));
    }
    Ok((summary, trials))
}

/// Per-arm, per-`h_rms` RMSE, bias and leakage. Failed arm outcomes are
/// excluded from the statistics and counted in `n_failed`.
pub fn summarize(trials: &[TrialResult], h_rms_values: &[f64]) -> ExperimentSummary {
    let mut trial_ids: Vec<u64> = trials.iter().map(|t| t.trial_id).collect();
    trial_ids.dedup();
    let num_trials = trial_ids.len();
    let failed_trials = {
        let mut ids: Vec<u64> = trials.iter().filter(|t| t.failed()).map(|t| t.trial_id).collect();
        ids.dedup();
        ids.len()
    };

    let mut rows = Vec::new();
    for arm in Arm::ALL {
        if arm.is_perturbed() {
            for &h in h_rms_values {
                let outcomes = trials
                    .iter()
                    .filter(|t| t.h_rms == h)
                    .map(|t| (t.theta_true_deg, t.arm(arm)));
                rows.push(arm_summary(arm, h, outcomes));
            }
        } else {
            // shared arms: one record per trial
            let mut seen = None;
            let outcomes = trials
                .iter()
                .filter(|t| {
                    let fresh = seen != Some(t.trial_id);
                    seen = Some(t.trial_id);
                    fresh
                })
                .map(|t| (t.theta_true_deg, t.arm(arm)));
            rows.push(arm_summary(arm, 0.0, outcomes));
        }
    }
    ExperimentSummary {
        rows,
        num_trials,
        failed_trials,
    }
}

fn arm_summary<'a>(arm: Arm, h_rms: f64, outcomes: impl Iterator<Item = (f64, &'a ArmOutcome)>) -> ArmSummary {
    let (mut n, mut failed, mut sum_err, mut sum_sq) = (0usize, 0usize, 0.0, 0.0);
    let (mut n_leak, mut sum_leak, mut sum_leak_sq) = (0usize, 0.0, 0.0);
    for (truth, o) in outcomes {
        if o.failed() {
            failed += 1;
            continue;
        }
        if let Some(est) = o.theta_hat_deg {
            let err = est - truth;
            n += 1;
            sum_err += err;
            sum_sq += err * err;
        }
        if let Some(l) = o.leakage {
            n_leak += 1;
            sum_leak += l;
            sum_leak_sq += l * l;
        }
    }
    let mean = |s: f64, k: usize| if k == 0 { f64::NAN } else { s / k as f64 };
    ArmSummary {
        arm,
        h_rms,
        rmse_deg: mean(sum_sq, n).sqrt(),
        bias_deg: mean(sum_err, n),
        mean_leakage: mean(sum_leak, n_leak),
        mean_leakage_sq: mean(sum_leak_sq, n_leak),
        n_trials: n,
        n_failed: failed,
    }
}

/// Estimation errors (degrees) of `arm` at `h_rms`, keyed by trial id.
pub fn arm_errors(trials: &[TrialResult], arm: Arm, h_rms: f64) -> Vec<(u64, f64)> {
    trials
        .iter()
        .filter(|t| t.h_rms == h_rms)
        .filter_map(|t| t.arm(arm).theta_hat_deg.map(|e| (t.trial_id, e - t.theta_true_deg)))
        .collect()
}

/// Percentile interval of `RMSE(b) − RMSE(a)` under a paired bootstrap over
/// trials. `a` and `b` hold the two arms' errors for the same trials, in the
/// same order.
pub fn paired_bootstrap_rmse_difference(
    a: &[f64],
    b: &[f64],
    resamples: usize,
    confidence: f64,
    seed: u64,
) -> Result<(f64, f64)> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::InvalidArgument(
            "paired bootstrap needs two equally long, nonempty samples".into(),
        ));
    }
    if resamples == 0 || !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::InvalidArgument("bad bootstrap parameters".into()));
    }
    let n = a.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut diffs: Vec<f64> = (0..resamples)
        .map(|_| {
            let (mut sa, mut sb) = (0.0, 0.0);
            for _ in 0..n {
                let i = rng.random_range(0..n);
                sa += a[i] * a[i];
                sb += b[i] * b[i];
            }
            (sb / n as f64).sqrt() - (sa / n as f64).sqrt()
        })
        .collect();
    diffs.sort_by(f64::total_cmp);
    let tail = (1.0 - confidence) / 2.0;
    let pick = |q: f64| diffs[((q * (resamples - 1) as f64).round() as usize).min(resamples - 1)];
    Ok((pick(tail), pick(1.0 - tail)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares `y ≈ slope·x + intercept`.
pub fn least_squares_line(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InvalidArgument("line fit needs at least two paired points".into()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("line fit needs distinct x values".into()));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(LineFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
    })
}
