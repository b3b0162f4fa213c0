//! Scenario configuration files and the Monte Carlo runner.

use std::path::Path;

use nalgebra::{DMatrix, DVector, Vector2};
use serde::{Deserialize, Serialize};

use crate::dynamics::{CtNoiseParams, CvNoiseParams, MotionModel};
use crate::error::{Error, Result};
use crate::geometry::Region;
use crate::imm::{Imm, ModeSet};
use crate::measurement::{MeasurementScan, NoiseSpec};
use crate::metrics::{aggregate, iou_regions, MetricsReport, RunResult};
use crate::moments::{idx, EllipseShape, MomentVector, STATE_DIM};
use crate::parallel::{map_runs, Execution};
use crate::sim::{
    generate_scans, generate_truth, run_rng, CountLaw, Kinematics, ScanSpec, TargetShape, TrajectorySegment, TruthEpoch,
};
use crate::ukf::{GaussianBelief, Ukf, UtParams};

/// Serde helpers for fixed-length arrays. Plain `[f64; N]` fields silently
/// drop extra elements in TOML; these reject any length other than `N`.
pub(crate) mod exact {
    use serde::{Deserialize, Deserializer};

    fn check<E: serde::de::Error, const N: usize>(v: Vec<f64>) -> Result<[f64; N], E> {
        let len = v.len();
        v.try_into()
            .map_err(|_| E::invalid_length(len, &format!("an array of {N} numbers").as_str()))
    }

    pub fn array<'de, D: Deserializer<'de>, const N: usize>(d: D) -> Result<[f64; N], D::Error> {
        check(Vec::deserialize(d)?)
    }

    pub fn optional<'de, D: Deserializer<'de>, const N: usize>(d: D) -> Result<Option<[f64; N]>, D::Error> {
        Option::<Vec<f64>>::deserialize(d)?.map(check).transpose()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FilterKind {
    UkfCv,
    UkfCt,
    UkfImm,
}

/// Truth region used for IoU scoring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IouTruth {
    /// The exact target region.
    #[default]
    Region,
    /// The ellipse with the target's moments.
    Ellipse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthConfig {
    #[serde(deserialize_with = "exact::array")]
    pub position: [f64; 2],
    #[serde(deserialize_with = "exact::array")]
    pub velocity: [f64; 2],
    /// Body orientation of the shape at t = 0.
    #[serde(default)]
    pub orientation_deg: f64,
    pub segments: Vec<TrajectorySegment>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub count: CountLaw,
    /// Per-axis measurement noise variances.
    #[serde(deserialize_with = "exact::array")]
    pub noise: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CvConfig {
    pub q: f64,
    /// Diagonal of the moment process noise.
    #[serde(deserialize_with = "exact::array")]
    pub c_im: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CtConfig {
    /// Variances of `[w_n11, w_n20, w_n02, w_x, w_y, w_omega]`.
    #[serde(deserialize_with = "exact::array")]
    pub w_var: [f64; 6],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImmConfig {
    pub probabilities: Vec<f64>,
    pub transition: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterConfig {
    pub kind: FilterKind,
    #[serde(default)]
    pub ut: UtParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cv: Option<CvConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ct: Option<CtConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub imm: Option<ImmConfig>,
}

/// Initial estimate: a circle at `position` moving with `velocity`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitConfig {
    /// Defaults to the true initial position.
    #[serde(
        default,
        skip_serializing_if = "Option::is_none",
        deserialize_with = "exact::optional"
    )]
    pub position: Option<[f64; 2]>,
    /// Defaults to the true initial velocity.
    #[serde(
        default,
        skip_serializing_if = "Option::is_none",
        deserialize_with = "exact::optional"
    )]
    pub velocity: Option<[f64; 2]>,
    pub radius: f64,
    #[serde(default)]
    pub omega_deg: f64,
    pub moment_variance: f64,
    pub position_variance: f64,
    pub velocity_variance: f64,
    /// Turn-rate variance in (rad/time unit)².
    pub omega_variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub runs: usize,
    pub seed: u64,
    pub period: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape: Option<TargetShape>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<TruthConfig>,
    pub scan: ScanConfig,
    pub filter: FilterConfig,
    pub init: InitConfig,
    #[serde(default)]
    pub iou_truth: IouTruth,
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(field, format!("must be positive and finite, got {v}")))
    }
}

fn non_negative(field: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(
            field,
            format!("must be non-negative and finite, got {v}"),
        ))
    }
}

fn relabel(field: &str, e: Error) -> Error {
    match e {
        Error::InvalidParameter(m) | Error::InvalidEllipse(m) => Error::config(field, m),
        Error::Config { .. } => e,
        other => Error::config(field, other.to_string()),
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| {
            let span = e
                .span()
                .map(|s| format!(" (bytes {}..{})", s.start, s.end))
                .unwrap_or_default();
            Error::config("<file>", format!("{}{span}", e.message()))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config("<file>", format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config("<serialize>", e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::config("runs", "must be at least 1"));
        }
        positive("period", self.period)?;
        if let Some(shape) = &self.shape {
            shape.validate().map_err(|e| relabel("shape", e))?;
        }
        if let Some(truth) = &self.truth {
            for (i, seg) in truth.segments.iter().enumerate() {
                seg.validate()
                    .map_err(|e| relabel(&format!("truth.segments[{i}]"), e))?;
            }
        }
        self.scan_spec()?;
        self.models()?;
        if self.filter.kind == FilterKind::UkfImm {
            self.mode_set()?;
        }
        self.filter.ut.validate().map_err(|e| relabel("filter.ut", e))?;
        let init = &self.init;
        positive("init.radius", init.radius)?;
        positive("init.moment_variance", init.moment_variance)?;
        positive("init.position_variance", init.position_variance)?;
        positive("init.velocity_variance", init.velocity_variance)?;
        positive("init.omega_variance", init.omega_variance)?;
        Ok(())
    }

    pub fn scan_spec(&self) -> Result<ScanSpec> {
        match self.scan.count {
            CountLaw::Fixed(0) => return Err(Error::config("scan.count", "fixed count must be at least 1")),
            CountLaw::Poisson(m) => positive("scan.count.poisson", m)?,
            CountLaw::Fixed(_) => {}
        }
        non_negative("scan.noise[0]", self.scan.noise[0])?;
        non_negative("scan.noise[1]", self.scan.noise[1])?;
        Ok(ScanSpec {
            count: self.scan.count,
            noise: NoiseSpec::new(self.scan.noise[0], self.scan.noise[1]).map_err(|e| relabel("scan.noise", e))?,
            period: self.period,
        })
    }

    fn cv_model(&self) -> Result<MotionModel> {
        let cv = self
            .filter
            .cv
            .as_ref()
            .ok_or_else(|| Error::config("filter.cv", "required by the selected filter"))?;
        CvNoiseParams::diagonal(cv.q, cv.c_im)
            .map(MotionModel::Cv)
            .map_err(|e| relabel("filter.cv", e))
    }

    fn ct_model(&self) -> Result<MotionModel> {
        let ct = self
            .filter
            .ct
            .as_ref()
            .ok_or_else(|| Error::config("filter.ct", "required by the selected filter"))?;
        CtNoiseParams::new(ct.w_var)
            .map(MotionModel::Ct)
            .map_err(|e| relabel("filter.ct.w_var", e))
    }

    /// Motion models in mode order (CV first for the IMM).
    pub fn models(&self) -> Result<Vec<MotionModel>> {
        match self.filter.kind {
            FilterKind::UkfCv => Ok(vec![self.cv_model()?]),
            FilterKind::UkfCt => Ok(vec![self.ct_model()?]),
            FilterKind::UkfImm => Ok(vec![self.cv_model()?, self.ct_model()?]),
        }
    }

    pub fn mode_set(&self) -> Result<ModeSet> {
        let imm = self
            .filter
            .imm
            .as_ref()
            .ok_or_else(|| Error::config("filter.imm", "required by the ukf-imm filter"))?;
        if imm.probabilities.len() != 2 || imm.transition.len() != 2 {
            return Err(Error::config("filter.imm", "the IMM runs exactly two modes (cv, ct)"));
        }
        ModeSet::new(imm.probabilities.clone(), imm.transition.clone()).map_err(|e| relabel("filter.imm", e))
    }

    pub fn shape(&self) -> Result<TargetShape> {
        self.shape
            .ok_or_else(|| Error::config("shape", "required to simulate this scenario"))
    }

    fn truth_config(&self) -> Result<&TruthConfig> {
        self.truth
            .as_ref()
            .ok_or_else(|| Error::config("truth", "required to simulate this scenario"))
    }

    pub fn initial_kinematics(&self) -> Result<Kinematics> {
        let t = self.truth_config()?;
        Ok(Kinematics {
            pos: Vector2::from(t.position),
            vel: Vector2::from(t.velocity),
            orientation: t.orientation_deg.to_radians(),
        })
    }

    pub fn truth(&self) -> Result<Vec<TruthEpoch>> {
        let t = self.truth_config()?;
        generate_truth(&self.shape()?, &self.initial_kinematics()?, &t.segments, self.period)
            .map_err(|e| relabel("truth", e))
    }

    /// Initial belief; position and velocity fall back to `truth_start`.
    pub fn initial_belief(&self, truth_start: &Kinematics) -> Result<GaussianBelief> {
        let init = &self.init;
        let m = MomentVector::circle(init.radius);
        let pos = init.position.map(Vector2::from).unwrap_or(truth_start.pos);
        let vel = init.velocity.map(Vector2::from).unwrap_or(truth_start.vel);
        let mut mean = DVector::zeros(STATE_DIM);
        mean[idx::N11] = m.n11;
        mean[idx::N20] = m.n20;
        mean[idx::N02] = m.n02;
        mean[idx::X] = pos.x;
        mean[idx::VX] = vel.x;
        mean[idx::Y] = pos.y;
        mean[idx::VY] = vel.y;
        mean[idx::OMEGA] = init.omega_deg.to_radians();
        let diag = [
            init.moment_variance,
            init.moment_variance,
            init.moment_variance,
            init.position_variance,
            init.velocity_variance,
            init.position_variance,
            init.velocity_variance,
            init.omega_variance,
        ];
        GaussianBelief::new(mean, DMatrix::from_diagonal(&DVector::from_row_slice(&diag)))
            .map_err(|e| relabel("init", e))
    }
}

/// A filter of the configured kind, advanced one scan at a time.
#[derive(Debug, Clone)]
pub enum Tracker {
    Single { filter: Ukf, mode: [f64; 2] },
    Imm(Imm),
}

impl Tracker {
    pub fn from_config(cfg: &ScenarioConfig, truth_start: &Kinematics) -> Result<Self> {
        let belief = cfg.initial_belief(truth_start)?;
        let mut models = cfg.models()?;
        Ok(match cfg.filter.kind {
            FilterKind::UkfImm => Tracker::Imm(Imm::new(models, belief, cfg.mode_set()?, cfg.filter.ut)?),
            kind => Tracker::Single {
                filter: Ukf::new(models.remove(0), cfg.filter.ut, belief),
                mode: if kind == FilterKind::UkfCv {
                    [1.0, 0.0]
                } else {
                    [0.0, 1.0]
                },
            },
        })
    }

    /// Returns the state estimate and `[mu_cv, mu_ct]` after absorbing `scan`.
    pub fn step(&mut self, scan: &MeasurementScan, dt: f64) -> Result<(GaussianBelief, [f64; 2])> {
        match self {
            Tracker::Single { filter, mode } => Ok((filter.step(scan, dt)?.clone(), *mode)),
            Tracker::Imm(imm) => {
                let out = imm.step(scan, dt)?;
                let mu = &imm.modes.probabilities;
                Ok((out.combined, [mu[0], mu[1]]))
            }
        }
    }
}

/// Truth regions for IoU scoring, one per epoch.
pub fn truth_regions(shape: &TargetShape, truth: &[TruthEpoch], mode: IouTruth) -> Vec<Region> {
    truth
        .iter()
        .map(|t| match mode {
            IouTruth::Region => shape.region(&t.pose()),
            IouTruth::Ellipse => Region::from_ellipse(&shape.equivalent_ellipse(&t.pose())),
        })
        .collect()
}

/// Runs one filter over a scan sequence and scores it against `truth`.
pub fn track(
    cfg: &ScenarioConfig,
    truth: &[TruthEpoch],
    regions: &[Region],
    scans: &[MeasurementScan],
    truth_start: &Kinematics,
) -> Result<RunResult> {
    let mut tracker = Tracker::from_config(cfg, truth_start)?;
    let n = truth.len();
    let mut out = RunResult {
        times: Vec::with_capacity(n),
        estimates: Vec::with_capacity(n),
        truths: Vec::with_capacity(n),
        ious: Vec::with_capacity(n),
        modes: Vec::with_capacity(n),
    };
    let mut last = truth.first().map(|t| t.time).unwrap_or(0.0);
    for ((epoch, scan), region) in truth.iter().zip(scans).zip(regions) {
        let (belief, mu) = tracker.step(scan, epoch.time - last)?;
        last = epoch.time;
        let est = belief.state();
        let ellipse = est.ellipse()?;
        out.times.push(epoch.time);
        out.ious.push(iou_regions(region, &Region::from_ellipse(&ellipse)));
        out.estimates.push(est);
        out.truths.push(epoch.state);
        out.modes.push(mu.to_vec());
    }
    Ok(out)
}

/// Everything produced by a Monte Carlo experiment.
#[derive(Debug, Clone)]
pub struct ScenarioOutput {
    pub report: MetricsReport,
    pub runs: Vec<RunResult>,
}

/// Runs `cfg.runs` independent seeded Monte Carlo runs.
pub fn run_scenario(cfg: &ScenarioConfig, exec: Execution) -> Result<ScenarioOutput> {
    cfg.validate()?;
    let shape = cfg.shape()?;
    let truth = cfg.truth()?;
    let start = cfg.initial_kinematics()?;
    let spec = cfg.scan_spec()?;
    let regions = truth_regions(&shape, &truth, cfg.iou_truth);
    let runs = map_runs(cfg.runs, exec, |run| {
        let mut rng = run_rng(cfg.seed, run as u64);
        let scans = generate_scans(&truth, &shape, &spec, &mut rng);
        track(cfg, &truth, &regions, &scans, &start)
    })?;
    let report = aggregate(&runs)?;
    Ok(ScenarioOutput { report, runs })
}

/// Header of the per-run track CSV.
pub const TRACK_HEADER: [&str; 15] = [
    "epoch",
    "time",
    "xc",
    "vx",
    "yc",
    "vy",
    "omega",
    "n11",
    "n20",
    "n02",
    "a1",
    "a2",
    "alpha",
    "mode_mu_cv",
    "mode_mu_ct",
];

/// Header of the run-averaged mode probability CSV.
pub const MODES_HEADER: [&str; 4] = ["epoch", "time", "mode_mu_cv", "mode_mu_ct"];

pub fn write_track_csv(path: &Path, run: &RunResult) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(TRACK_HEADER)?;
    for (k, est) in run.estimates.iter().enumerate() {
        let e: EllipseShape = est.ellipse()?;
        let mu = run.modes.get(k).map(|m| (m[0], m[1])).unwrap_or((f64::NAN, f64::NAN));
        let fields = [
            run.times[k],
            est.pos.x,
            est.vel.x,
            est.pos.y,
            est.vel.y,
            est.omega,
            est.moments.n11,
            est.moments.n20,
            est.moments.n02,
            e.a1,
            e.a2,
            e.alpha,
            mu.0,
            mu.1,
        ];
        let mut rec = vec![k.to_string()];
        rec.extend(fields.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `tracks/run_NNNN.csv`, `modes.csv` and `metrics.json` under `dir`.
pub fn write_artifacts(dir: &Path, output: &ScenarioOutput) -> Result<()> {
    let tracks = dir.join("tracks");
    std::fs::create_dir_all(&tracks)?;
    for (i, run) in output.runs.iter().enumerate() {
        write_track_csv(&tracks.join(format!("run_{i:04}.csv")), run)?;
    }
    let report = &output.report;
    let mut w = csv::Writer::from_path(dir.join("modes.csv"))?;
    w.write_record(MODES_HEADER)?;
    for (k, mu) in report.mode_probabilities.iter().enumerate() {
        w.write_record([
            k.to_string(),
            report.times[k].to_string(),
            mu[0].to_string(),
            mu[1].to_string(),
        ])?;
    }
    w.flush()?;
    let json = serde_json::to_string_pretty(report)?;
    std::fs::write(dir.join("metrics.json"), json + "\n")?;
    Ok(())
}
