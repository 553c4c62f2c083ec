use rayon::prelude::*;

use super::config::{ExperimentConfig, SceneConfig};
use super::metrics::{psnr, rmse, ssim};
use crate::error::Result;
use crate::inversion::{run_inversion, InversionResult, Scheme, SchemeConfig};
use crate::io::{hconcat, vconcat};
use crate::numerics::{Field2D, Rng};
use crate::optics::{observe, OpticsConfig, Pose, ScreenImage, WallObservation};
use crate::scenegen::{generate, item_seed, make_split, Category, SceneSpec};

/// Brightness reductions swept by [`run_luminance_sweep`].
pub fn luminance_offsets() -> Vec<f64> {
    (0..=12).map(|i| 25.0 * i as f64).collect()
}

/// One geometric condition of [`run_geometry_sweep`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GeometryCondition {
    /// `(horizontal, vertical)` arc in degrees.
    Orbit(f64, f64),
    /// `(pitch, yaw, roll)` in degrees.
    Rotation(f64, f64, f64),
    /// Camera–wall distance in metres.
    Distance(f64),
}

impl GeometryCondition {
    pub fn label(&self) -> String {
        match *self {
            GeometryCondition::Orbit(h, v) => format!("orbit ({h},{v})"),
            GeometryCondition::Rotation(p, y, r) => format!("rotation ({p},{y},{r})"),
            GeometryCondition::Distance(d) => format!("distance {d} m"),
        }
    }

    pub fn apply(&self, base: &OpticsConfig) -> OpticsConfig {
        let mut o = base.clone();
        match *self {
            GeometryCondition::Orbit(h, v) => {
                o.pose = Pose {
                    horiz_arc_deg: h,
                    vert_arc_deg: v,
                    ..Pose::default()
                }
            }
            GeometryCondition::Rotation(pitch, yaw, roll) => {
                o.pose = Pose {
                    pitch_deg: pitch,
                    yaw_deg: yaw,
                    roll_deg: roll,
                    ..Pose::default()
                }
            }
            GeometryCondition::Distance(d) => o.distance_m = d,
        }
        o
    }
}

/// Orbit, rotation and distance blocks, five rows each.
pub fn geometry_conditions() -> Vec<GeometryCondition> {
    use GeometryCondition::*;
    vec![
        Orbit(0.0, 5.0),
        Orbit(0.0, 15.0),
        Orbit(0.0, -5.0),
        Orbit(10.0, 0.0),
        Orbit(15.0, 0.0),
        Rotation(0.0, 0.0, 0.0),
        Rotation(2.0, 0.0, 0.0),
        Rotation(5.0, 3.0, 2.0),
        Rotation(8.0, 5.0, 4.0),
        Rotation(0.0, -10.0, -3.0),
        Distance(2.0),
        Distance(3.0),
        Distance(4.0),
        Distance(5.0),
        Distance(6.0),
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusItem {
    pub category: Category,
    /// Index within the category's corpus.
    pub index: usize,
    pub seed: u64,
    pub screen: ScreenImage,
}

/// The test split of every configured category, in category order.
pub fn test_corpus(scene: &SceneConfig) -> Result<Vec<CorpusItem>> {
    scene.validate()?;
    let mut items = Vec::new();
    for &category in &scene.categories {
        let split = make_split(scene.corpus_size, scene.seed)?;
        let mut test = split.test;
        test.sort_unstable();
        for index in test {
            let seed = item_seed(scene.seed, category, index);
            let screen = generate(&SceneSpec::square(category, scene.size, seed))?.image;
            items.push(CorpusItem {
                category,
                index,
                seed,
                screen,
            });
        }
    }
    Ok(items)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub condition: String,
    pub psnr: f64,
    pub rmse: f64,
    pub ssim: f64,
}

/// Metrics of one reconstructed image.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub condition: String,
    pub category: Category,
    pub index: usize,
    pub psnr: f64,
    pub rmse: f64,
    pub ssim: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub protocol: &'static str,
    pub rows: Vec<MetricRow>,
    pub samples: Vec<Sample>,
    /// Residual history of the first image of every condition.
    pub residuals: Vec<(String, Vec<f64>)>,
    /// Ground truth | observation | reconstruction triptychs.
    pub grid: Field2D,
    pub config: ExperimentConfig,
    pub seed: u64,
}

/// Output of one simulate-and-invert run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub observation: WallObservation,
    pub reconstruction: Field2D,
    pub result: InversionResult,
}

/// Observes `screen` through `optics` and inverts with the known operator.
pub fn reconstruct(screen: &ScreenImage, optics: &OpticsConfig, scheme: &SchemeConfig) -> Result<RunOutput> {
    let observation = observe(screen, optics)?;
    let result = run_inversion(&observation, optics, scheme, None)?;
    Ok(RunOutput {
        reconstruction: result.final_estimate.clamp(0.0, 1.0),
        observation,
        result,
    })
}

/// Noise seed for one corpus item, shared by every condition of a protocol.
pub fn item_noise_seed(optics: &OpticsConfig, item: &CorpusItem) -> u64 {
    Rng::new(optics.noise_seed).substream(item.seed).next_u64()
}

struct Condition {
    label: String,
    optics: OpticsConfig,
    scheme: SchemeConfig,
}

struct JobOutput {
    sample: Sample,
    tiles: Option<[Field2D; 3]>,
    residuals: Vec<f64>,
}

fn run_conditions(
    protocol: &'static str,
    corpus: &[CorpusItem],
    conditions: Vec<Condition>,
    per_category: bool,
    cfg: &ExperimentConfig,
) -> Result<ExperimentReport> {
    let grid_samples = cfg.report.grid_samples;
    let jobs: Vec<(usize, usize)> = (0..conditions.len())
        .flat_map(|c| (0..corpus.len()).map(move |i| (c, i)))
        .collect();
    let outputs: Vec<JobOutput> = jobs
        .par_iter()
        .map(|&(c, i)| {
            let cond = &conditions[c];
            let item = &corpus[i];
            let mut optics = cond.optics.clone();
            optics.noise_seed = item_noise_seed(&cond.optics, item);
            let run = reconstruct(&item.screen, &optics, &cond.scheme)?;
            let truth = item.screen.radiance();
            let sample = Sample {
                condition: cond.label.clone(),
                category: item.category,
                index: item.index,
                psnr: psnr(truth, &run.reconstruction)?,
                rmse: rmse(truth, &run.reconstruction)?,
                ssim: ssim(truth, &run.reconstruction)?,
                iterations: run.result.iterations_run,
                converged: run.result.converged,
            };
            let tiles = (i < grid_samples).then(|| {
                [
                    truth.clone(),
                    run.observation.irradiance().clamp(0.0, 1.0),
                    run.reconstruction.clone(),
                ]
            });
            let residuals = if i == 0 {
                run.result.residual_history
            } else {
                Vec::new()
            };
            Ok(JobOutput {
                sample,
                tiles,
                residuals,
            })
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    let mut residuals = Vec::new();
    let mut grid_rows = Vec::new();
    let gap = cfg.report.grid_gap;
    for (c, cond) in conditions.iter().enumerate() {
        let block = &outputs[c * corpus.len()..(c + 1) * corpus.len()];
        if per_category {
            for &category in &cfg.scene.categories {
                let picked: Vec<&Sample> = block
                    .iter()
                    .map(|o| &o.sample)
                    .filter(|s| s.category == category)
                    .collect();
                rows.push(aggregate(format!("{}/{category}", cond.label), &picked));
            }
        } else {
            let all: Vec<&Sample> = block.iter().map(|o| &o.sample).collect();
            rows.push(aggregate(cond.label.clone(), &all));
        }
        if let Some(first) = block.first() {
            residuals.push((cond.label.clone(), first.residuals.clone()));
        }
        for tiles in block.iter().filter_map(|o| o.tiles.as_ref()) {
            grid_rows.push(hconcat(&[&tiles[0], &tiles[1], &tiles[2]], gap, 1.0)?);
        }
    }
    let grid = if grid_rows.is_empty() {
        Field2D::zeros(1, 1)
    } else {
        vconcat(&grid_rows.iter().collect::<Vec<_>>(), gap, 1.0)?
    };
    Ok(ExperimentReport {
        protocol,
        rows,
        samples: outputs.into_iter().map(|o| o.sample).collect(),
        residuals,
        grid,
        config: cfg.clone(),
        seed: cfg.scene.seed,
    })
}

fn aggregate(condition: String, samples: &[&Sample]) -> MetricRow {
    let n = samples.len().max(1) as f64;
    MetricRow {
        condition,
        psnr: samples.iter().map(|s| s.psnr).sum::<f64>() / n,
        rmse: samples.iter().map(|s| s.rmse).sum::<f64>() / n,
        ssim: samples.iter().map(|s| s.ssim).sum::<f64>() / n,
    }
}

/// Every scheme of `schemes` on every test image, one row per
/// `(scheme, category)`.
pub fn run_ablation(corpus: &[CorpusItem], cfg: &ExperimentConfig, schemes: &[Scheme]) -> Result<ExperimentReport> {
    cfg.validate()?;
    let conditions = schemes
        .iter()
        .map(|&s| Condition {
            label: s.name().to_string(),
            optics: cfg.optics.clone(),
            scheme: SchemeConfig {
                scheme: s,
                ..cfg.scheme.clone()
            },
        })
        .collect();
    run_conditions("ablation", corpus, conditions, true, cfg)
}

/// One row per brightness reduction, aggregated over the corpus.
pub fn run_luminance_sweep(corpus: &[CorpusItem], cfg: &ExperimentConfig, offsets: &[f64]) -> Result<ExperimentReport> {
    cfg.validate()?;
    let conditions = offsets
        .iter()
        .map(|&o| Condition {
            label: format!("{o} nits"),
            optics: OpticsConfig {
                brightness_offset_nits: o,
                ..cfg.optics.clone()
            },
            scheme: cfg.scheme.clone(),
        })
        .collect();
    run_conditions("luminance", corpus, conditions, false, cfg)
}

/// One row per geometric condition, aggregated over the corpus.
pub fn run_geometry_sweep(
    corpus: &[CorpusItem],
    cfg: &ExperimentConfig,
    poses: &[GeometryCondition],
) -> Result<ExperimentReport> {
    cfg.validate()?;
    let conditions = poses
        .iter()
        .map(|g| Condition {
            label: g.label(),
            optics: g.apply(&cfg.optics),
            scheme: cfg.scheme.clone(),
        })
        .collect();
    run_conditions("geometry", corpus, conditions, false, cfg)
}

/// Mean PSNR between the ground truth and the reconstruction of a black
/// screen observed with each item's noise: the zero-signal floor.
pub fn noise_floor_psnr(corpus: &[CorpusItem], cfg: &ExperimentConfig) -> Result<f64> {
    let total: f64 = corpus
        .par_iter()
        .map(|item| {
            let (h, w) = item.screen.radiance().dims();
            let mut optics = cfg.optics.clone();
            optics.noise_seed = item_noise_seed(&cfg.optics, item);
            let black = ScreenImage::new(Field2D::zeros(h, w))?;
            let run = reconstruct(&black, &optics, &cfg.scheme)?;
            psnr(item.screen.radiance(), &run.reconstruction)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum();
    Ok(total / corpus.len().max(1) as f64)
}
