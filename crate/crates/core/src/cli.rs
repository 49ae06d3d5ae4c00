//! Configuration parsing and result files for the batch front end.
//!
//! A configuration is a flat `key = value` text file; `#` starts a comment.
//! Command-line overrides are applied on top and win over the file. Results
//! are written as CSV with shortest round-trip float formatting, plus a
//! manifest that is itself a valid configuration file for the same run.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::channel::PerturbationStyle;
use crate::montecarlo::{Arm, ExperimentConfig, ExperimentSummary, ProjectionTarget, TargetPlacement, TrialResult};
use crate::{Error, Result};

pub const TRIALS_HEADER: &str = "trial_id,arm,h_rms,theta_true_deg,theta_hat_deg,leakage,nullity,failed";
pub const SUMMARY_HEADER: &str = "arm,h_rms,rmse_deg,bias_deg,mean_leakage,n_trials";
pub const SCATTER_HEADER: &str = "theta_true_deg,theta_hat_deg";

pub const KNOWN_KEYS: &[&str] = &[
    "m_tx",
    "m_rx",
    "n_rx",
    "num_samples",
    "element_spacing",
    "grid_step_deg",
    "snr_db",
    "h_rms",
    "num_trials",
    "seed",
    "perturbation_style",
    "projection_target",
    "placement",
    "max_target_angle_deg",
];

fn config_err(field: &str, message: impl Into<String>) -> Error {
    Error::Config {
        field: field.to_string(),
        message: message.into(),
    }
}

fn parse_num<T: std::str::FromStr>(field: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| config_err(field, format!("cannot parse `{value}`")))
}

/// `"1,2,3,4"` → `[1, 2, 3, 4]`.
pub fn parse_h_rms_list(value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_num::<f64>("h_rms", s))
        .collect::<Result<Vec<_>>>()
        .and_then(|v| {
            if v.is_empty() {
                Err(config_err("h_rms", "empty list"))
            } else {
                Ok(v)
            }
        })
}

pub fn parse_perturbation_style(value: &str) -> Result<PerturbationStyle> {
    match value.trim() {
        "real" => Ok(PerturbationStyle::RealPositive),
        "complex" => Ok(PerturbationStyle::ComplexUniformPhase),
        other => Err(config_err("perturbation_style", format!("expected real|complex, got `{other}`"))),
    }
}

pub fn parse_projection_target(value: &str) -> Result<ProjectionTarget> {
    match value.trim() {
        "perturbed" => Ok(ProjectionTarget::PerturbedChannel),
        "stale" => Ok(ProjectionTarget::StaleChannel),
        other => Err(config_err("projection_target", format!("expected perturbed|stale, got `{other}`"))),
    }
}

fn parse_placement(value: &str) -> Result<TargetPlacement> {
    match value.trim() {
        "random" => Ok(TargetPlacement::Random),
        "sweep" => Ok(TargetPlacement::Sweep),
        other => Err(config_err("placement", format!("expected random|sweep, got `{other}`"))),
    }
}

fn style_name(style: PerturbationStyle) -> &'static str {
    match style {
        PerturbationStyle::RealPositive => "real",
        PerturbationStyle::ComplexUniformPhase => "complex",
    }
}

fn target_name(target: ProjectionTarget) -> &'static str {
    match target {
        ProjectionTarget::PerturbedChannel => "perturbed",
        ProjectionTarget::StaleChannel => "stale",
    }
}

fn placement_name(p: TargetPlacement) -> &'static str {
    match p {
        TargetPlacement::Random => "random",
        TargetPlacement::Sweep => "sweep",
    }
}

fn apply_key(cfg: &mut ExperimentConfig, key: &str, value: &str) -> Result<()> {
    match key {
        "m_tx" => cfg.m_tx = parse_num(key, value)?,
        "m_rx" => cfg.m_rx = parse_num(key, value)?,
        "n_rx" => cfg.n_rx = parse_num(key, value)?,
        "num_samples" => cfg.num_samples = parse_num(key, value)?,
        "element_spacing" => cfg.element_spacing = parse_num(key, value)?,
        "grid_step_deg" => cfg.grid_step_deg = parse_num(key, value)?,
        "snr_db" => cfg.snr_db = parse_num(key, value)?,
        "h_rms" => cfg.h_rms_values = parse_h_rms_list(value)?,
        "num_trials" => cfg.num_trials = parse_num(key, value)?,
        "seed" => cfg.master_seed = parse_num(key, value)?,
        "perturbation_style" => cfg.perturbation_style = parse_perturbation_style(value)?,
        "projection_target" => cfg.projection_target = parse_projection_target(value)?,
        "placement" => cfg.placement = parse_placement(value)?,
        "max_target_angle_deg" => cfg.max_target_angle_deg = parse_num(key, value)?,
        other => return Err(config_err(other, "unknown key")),
    }
    Ok(())
}

/// Parses config text on top of the defaults, without validating.
pub fn parse_config_text(text: &str) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            config_err(&format!("line {}", lineno + 1), format!("expected `key = value`, got `{line}`"))
        })?;
        apply_key(&mut cfg, key.trim(), value.trim())?;
    }
    Ok(cfg)
}

/// Command-line values that override the config file.
#[derive(Debug, Clone, Default)]
pub struct ConfigOverrides {
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub h_rms: Option<String>,
    pub snr_db: Option<f64>,
    pub projection_target: Option<String>,
    pub perturbation_style: Option<String>,
}

/// File (if any) plus overrides, validated.
pub fn parse_config(path: Option<&Path>, overrides: &ConfigOverrides) -> Result<ExperimentConfig> {
    let mut cfg = match path {
        Some(p) => parse_config_text(&fs::read_to_string(p).map_err(|e| {
            config_err("config", format!("cannot read {}: {e}", p.display()))
        })?)?,
        None => ExperimentConfig::default(),
    };
    if let Some(n) = overrides.trials {
        cfg.num_trials = n;
    }
    if let Some(s) = overrides.seed {
        cfg.master_seed = s;
    }
    if let Some(h) = &overrides.h_rms {
        cfg.h_rms_values = parse_h_rms_list(h)?;
    }
    if let Some(snr) = overrides.snr_db {
        cfg.snr_db = snr;
    }
    if let Some(t) = &overrides.projection_target {
        cfg.projection_target = parse_projection_target(t)?;
    }
    if let Some(s) = &overrides.perturbation_style {
        cfg.perturbation_style = parse_perturbation_style(s)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// The config in file syntax; parsing it back yields an equal config.
pub fn config_to_text(cfg: &ExperimentConfig) -> String {
    let h = cfg
        .h_rms_values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",");
    let mut s = String::new();
    let _ = writeln!(s, "m_tx = {}", cfg.m_tx);
    let _ = writeln!(s, "m_rx = {}", cfg.m_rx);
    let _ = writeln!(s, "n_rx = {}", cfg.n_rx);
    let _ = writeln!(s, "num_samples = {}", cfg.num_samples);
    let _ = writeln!(s, "element_spacing = {}", cfg.element_spacing);
    let _ = writeln!(s, "grid_step_deg = {}", cfg.grid_step_deg);
    let _ = writeln!(s, "snr_db = {}", cfg.snr_db);
    let _ = writeln!(s, "h_rms = {h}");
    let _ = writeln!(s, "num_trials = {}", cfg.num_trials);
    let _ = writeln!(s, "seed = {}", cfg.master_seed);
    let _ = writeln!(s, "perturbation_style = {}", style_name(cfg.perturbation_style));
    let _ = writeln!(s, "projection_target = {}", target_name(cfg.projection_target));
    let _ = writeln!(s, "placement = {}", placement_name(cfg.placement));
    let _ = writeln!(s, "max_target_angle_deg = {}", cfg.max_target_angle_deg);
    s
}

/// Everything needed to rerun a simulation bit-exactly.
#[derive(Debug, Clone)]
pub struct RunManifest {
    pub config: ExperimentConfig,
    pub tool_version: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub master_seed: u64,
    pub outputs: Vec<PathBuf>,
}

impl RunManifest {
    pub fn new(config: ExperimentConfig) -> Self {
        let timestamp = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Self {
            master_seed: config.master_seed,
            config,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp,
            outputs: Vec::new(),
        }
    }

    /// Metadata as comments, then the config body.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# nspsim run manifest");
        let _ = writeln!(s, "# tool_version = {}", self.tool_version);
        let _ = writeln!(s, "# timestamp = {}", self.timestamp);
        let _ = writeln!(s, "# master_seed = {}", self.master_seed);
        for p in &self.outputs {
            let _ = writeln!(s, "# output = {}", p.display());
        }
        s.push_str(&config_to_text(&self.config));
        s
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn push_row(out: &mut String, t: &TrialResult, arm: Arm, nullity: Option<usize>) {
    let o = t.arm(arm);
    let h = if arm.is_perturbed() { t.h_rms } else { 0.0 };
    let _ = writeln!(
        out,
        "{},{},{},{},{},{},{},{}",
        t.trial_id,
        arm.name(),
        h,
        t.theta_true_deg,
        opt(o.theta_hat_deg),
        opt(o.leakage),
        nullity.map(|n| n.to_string()).unwrap_or_default(),
        u8::from(o.failed()),
    );
}

/// `trials.csv` body: shared arms once per trial, swept arms once per `h_rms`.
pub fn trials_csv(trials: &[TrialResult]) -> String {
    let mut s = String::from(TRIALS_HEADER);
    s.push('\n');
    let mut last = None;
    for t in trials {
        if last != Some(t.trial_id) {
            push_row(&mut s, t, Arm::Original, Some(t.nullity));
            push_row(&mut s, t, Arm::Nsp, Some(t.nullity));
            last = Some(t.trial_id);
        }
        push_row(&mut s, t, Arm::NspPerturbed, t.nullity_perturbed);
        push_row(&mut s, t, Arm::Stale, Some(t.nullity));
    }
    s
}

pub fn summary_csv(summary: &ExperimentSummary) -> String {
    let mut s = String::from(SUMMARY_HEADER);
    s.push('\n');
    for r in &summary.rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            r.arm.name(),
            r.h_rms,
            r.rmse_deg,
            r.bias_deg,
            r.mean_leakage,
            r.n_trials
        );
    }
    s
}

/// Label used in scatter file names: `original`, `nsp`, `nsp_perturbed_h2`, ...
pub fn scatter_label(arm: Arm, h_rms: f64) -> String {
    if arm.is_perturbed() {
        format!("{}_h{}", arm.name(), h_rms)
    } else {
        arm.name().to_string()
    }
}

fn scatter_csv(trials: &[TrialResult], arm: Arm, h_rms: f64) -> String {
    let mut s = String::from(SCATTER_HEADER);
    s.push('\n');
    let mut last = None;
    for t in trials {
        let take = if arm.is_perturbed() {
            t.h_rms == h_rms
        } else {
            last != Some(t.trial_id)
        };
        last = Some(t.trial_id);
        if !take {
            continue;
        }
        if let Some(est) = t.arm(arm).theta_hat_deg {
            let _ = writeln!(s, "{},{}", t.theta_true_deg, est);
        }
    }
    s
}

/// Writes trials, summary, per-arm scatter files and the manifest into
/// `out_dir`, returning the paths written.
pub fn emit_results(
    summary: &ExperimentSummary,
    trials: &[TrialResult],
    out_dir: &Path,
    manifest: &mut RunManifest,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir)?;
    let mut files: Vec<(PathBuf, String)> = vec![
        (out_dir.join("trials.csv"), trials_csv(trials)),
        (out_dir.join("summary.csv"), summary_csv(summary)),
    ];
    let mut scatter_arms = vec![(Arm::Original, 0.0), (Arm::Nsp, 0.0)];
    scatter_arms.extend(
        summary
            .rows
            .iter()
            .filter(|r| r.arm == Arm::NspPerturbed)
            .map(|r| (r.arm, r.h_rms)),
    );
    for (arm, h) in scatter_arms {
        files.push((
            out_dir.join(format!("scatter_{}.csv", scatter_label(arm, h))),
            scatter_csv(trials, arm, h),
        ));
    }

    let manifest_path = out_dir.join("manifest.txt");
    manifest.outputs = files.iter().map(|(p, _)| p.clone()).collect();
    for (path, body) in &files {
        fs::write(path, body)?;
    }
    fs::write(&manifest_path, manifest.to_text())?;

    let mut written: Vec<PathBuf> = files.into_iter().map(|(p, _)| p).collect();
    written.push(manifest_path);
    Ok(written)
}

/// True when every arm row has at least one successful trial.
pub fn all_arms_succeeded(summary: &ExperimentSummary) -> bool {
    !summary.rows.is_empty() && summary.rows.iter().all(|r| r.n_trials > 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_gives_defaults() {
        assert_eq!(parse_config_text("").unwrap(), ExperimentConfig::default());
        assert_eq!(
            parse_config_text("# only a comment\n\n   \n").unwrap(),
            ExperimentConfig::default()
        );
    }

    #[test]
    fn h_rms_sweep_list() {
        assert_eq!(parse_h_rms_list("1,2,3,4").unwrap(), vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(parse_h_rms_list(" 0.5 , 2 ").unwrap(), vec![0.5, 2.0]);
        assert!(parse_h_rms_list("").is_err());
        assert!(parse_h_rms_list("1,x").is_err());
        let cfg = parse_config_text("h_rms = 1,2,3,4").unwrap();
        assert_eq!(cfg.h_rms_values, vec![1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn unknown_key_and_bad_values_are_reported_by_field() {
        match parse_config_text("m_tx = 4\nbogus = 1") {
            Err(Error::Config { field, message }) => {
                assert_eq!(field, "bogus");
                assert_eq!(message, "unknown key");
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_config_text("m_tx = four"), Err(Error::Config { field, .. }) if field == "m_tx"));
        assert!(parse_config_text("just words").is_err());
    }

    #[test]
    fn no_null_space_is_a_validation_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("cfg.txt");
        fs::write(&p, "n_rx = 4\nm_tx = 4\n").unwrap();
        let err = parse_config(Some(&p), &ConfigOverrides::default()).unwrap_err();
        assert!(err.to_string().contains("no null space"), "{err}");
        let zero = ConfigOverrides {
            trials: Some(0),
            ..Default::default()
        };
        assert!(parse_config(None, &zero).is_err());
    }

    #[test]
    fn overrides_win_over_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("cfg.txt");
        fs::write(&p, "num_trials = 7\nseed = 1\nsnr_db = 10\nprojection_target = perturbed\n").unwrap();
        let o = ConfigOverrides {
            trials: Some(9),
            seed: Some(2),
            h_rms: Some("0,1".into()),
            snr_db: Some(-3.0),
            projection_target: Some("stale".into()),
            perturbation_style: Some("complex".into()),
        };
        let cfg = parse_config(Some(&p), &o).unwrap();
        assert_eq!(cfg.num_trials, 9);
        assert_eq!(cfg.master_seed, 2);
        assert_eq!(cfg.h_rms_values, vec![0.0, 1.0]);
        assert_eq!(cfg.snr_db, -3.0);
        assert_eq!(cfg.projection_target, ProjectionTarget::StaleChannel);
        assert_eq!(cfg.perturbation_style, PerturbationStyle::ComplexUniformPhase);
    }

    #[test]
    fn config_text_round_trips() {
        let cfg = ExperimentConfig {
            snr_db: f64::INFINITY,
            h_rms_values: vec![0.1, 2.5],
            master_seed: u64::MAX,
            placement: TargetPlacement::Sweep,
            perturbation_style: PerturbationStyle::ComplexUniformPhase,
            ..Default::default()
        };
        assert_eq!(parse_config_text(&config_to_text(&cfg)).unwrap(), cfg);
        let manifest = RunManifest::new(cfg.clone());
        assert_eq!(parse_config_text(&manifest.to_text()).unwrap(), cfg);
    }

    #[test]
    fn zero_trial_outputs_are_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let summary = ExperimentSummary::default();
        let mut manifest = RunManifest::new(ExperimentConfig::default());
        let files = emit_results(&summary, &[], dir.path(), &mut manifest).unwrap();
        for f in files.iter().filter(|p| p.extension().is_some_and(|e| e == "csv")) {
            let body = fs::read_to_string(f).unwrap();
            assert_eq!(body.lines().count(), 1, "{}", f.display());
        }
        assert!(!all_arms_succeeded(&summary));
    }
}
