use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use irr_core::harness::{
    geometry_conditions, luminance_offsets, psnr, rmse, run_ablation, run_geometry_sweep, run_luminance_sweep, ssim,
    test_corpus, write_report, write_residuals, ExperimentConfig, Protocol,
};
use irr_core::icsr::gradient_check;
use irr_core::inversion::{run_inversion, Scheme};
use irr_core::io::{hconcat, load_tensor, save_png, save_tensor, Tensor};
use irr_core::optics::{observe, ScreenImage, WallObservation};
use irr_core::scenegen::{generate, generate_corpus, make_split, manifest_line, Category, SceneSpec};
use irr_core::Field2D;

#[derive(Parser, Debug)]
#[command(name = "irr", version, about = "Simulate and invert diffuse screen reflections")]
struct Cli {
    /// TOML file with [optics], [scheme], [scene] and [report] sections.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides scene.seed and optics.noise_seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Render a screen image and its wall observation.
    Simulate {
        /// Screen tensor to observe; a generated scene is used when absent.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value = "websight")]
        category: Category,
        #[command(flatten)]
        knobs: Knobs,
    },
    /// Reconstruct a screen from an observation tensor.
    Invert {
        #[arg(long)]
        input: PathBuf,
        /// Ground-truth screen; adds a report.csv when given.
        #[arg(long)]
        truth: Option<PathBuf>,
        #[command(flatten)]
        knobs: Knobs,
    },
    /// Compare the four iterative schemes on the test corpus.
    Ablate {
        #[command(flatten)]
        knobs: Knobs,
    },
    /// Reconstruction quality against screen brightness reduction.
    SweepLuminance {
        #[command(flatten)]
        knobs: Knobs,
    },
    /// Reconstruction quality under orbit, rotation and distance changes.
    SweepGeometry {
        #[command(flatten)]
        knobs: Knobs,
    },
    /// Generate a synthetic corpus with a train/val/test manifest.
    Gen {
        #[arg(long)]
        category: Category,
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value_t = 64)]
        size: usize,
    },
    /// Check the semantic loss gradient against central differences.
    IcsrCheck {
        #[arg(long, default_value_t = 50)]
        trials: usize,
    },
    /// Score an estimate against a reference.
    Eval {
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        estimate: PathBuf,
    },
}

/// Command-line overrides applied after the config file.
#[derive(Args, Debug, Default)]
struct Knobs {
    #[arg(long)]
    scheme: Option<Scheme>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    psi_reg: Option<f64>,
    #[arg(long)]
    psf_sigma: Option<f64>,
    #[arg(long)]
    noise_sigma: Option<f64>,
    #[arg(long)]
    corpus_size: Option<usize>,
    #[arg(long)]
    size: Option<usize>,
}

impl Knobs {
    fn apply(&self, cfg: &mut ExperimentConfig) {
        let s = &mut cfg.scheme;
        if let Some(v) = self.scheme {
            s.scheme = v;
        }
        if self.eta.is_some() {
            s.step_size = self.eta;
        }
        if let Some(v) = self.beta {
            s.momentum_beta = v;
        }
        if let Some(v) = self.rho {
            s.admm_rho = v;
        }
        if let Some(v) = self.lambda {
            s.reg_lambda = v;
        }
        if let Some(v) = self.gamma {
            s.gate_gamma = v;
        }
        if let Some(v) = self.iters {
            s.max_iters = v;
        }
        if let Some(v) = self.tol {
            s.tol = v;
        }
        if let Some(v) = self.psi_reg {
            s.psi_reg = v;
        }
        if let Some(v) = self.psf_sigma {
            cfg.optics.psf_sigma = v;
        }
        if let Some(v) = self.noise_sigma {
            cfg.optics.noise_sigma = v;
        }
        if let Some(v) = self.corpus_size {
            cfg.scene.corpus_size = v;
        }
        if let Some(v) = self.size {
            cfg.scene.size = v;
        }
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Simulate { input, category, knobs } => simulate(&cli, input.as_deref(), *category, knobs),
        Command::Invert { input, truth, knobs } => invert(&cli, input, truth.as_deref(), knobs),
        Command::Ablate { knobs } => {
            let cfg = resolve(&cli, Protocol::Ablation, knobs)?;
            let corpus = test_corpus(&cfg.scene)?;
            finish(&cli.out, &run_ablation(&corpus, &cfg, &Scheme::ALL)?)
        }
        Command::SweepLuminance { knobs } => {
            let cfg = resolve(&cli, Protocol::Luminance, knobs)?;
            let corpus = test_corpus(&cfg.scene)?;
            finish(&cli.out, &run_luminance_sweep(&corpus, &cfg, &luminance_offsets())?)
        }
        Command::SweepGeometry { knobs } => {
            let cfg = resolve(&cli, Protocol::Geometry, knobs)?;
            let corpus = test_corpus(&cfg.scene)?;
            finish(&cli.out, &run_geometry_sweep(&corpus, &cfg, &geometry_conditions())?)
        }
        Command::Gen { category, count, size } => gen(&cli, *category, *count, *size),
        Command::IcsrCheck { trials } => {
            let check = gradient_check(cli.seed.unwrap_or(0), *trials)?;
            println!(
                "trials={} components={} max_relative_error={:e}",
                check.trials, check.components, check.max_relative_error
            );
            Ok(())
        }
        Command::Eval { truth, estimate } => {
            let a = load_field(truth)?;
            let b = load_field(estimate)?;
            fs::create_dir_all(&cli.out)?;
            let line = format!("eval,{},{},{}", psnr(&a, &b)?, rmse(&a, &b)?, ssim(&a, &b)?);
            fs::write(
                cli.out.join("report.csv"),
                format!("condition,psnr,rmse,ssim\n{line}\n"),
            )?;
            println!("{line}");
            Ok(())
        }
    }
}

fn resolve(cli: &Cli, protocol: Protocol, knobs: &Knobs) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => {
            ExperimentConfig::load(path, protocol).with_context(|| format!("loading config {}", path.display()))?
        }
        None => ExperimentConfig::defaults_for(protocol),
    };
    if let Some(seed) = cli.seed {
        cfg.scene.seed = seed;
        cfg.optics.noise_seed = seed;
    }
    knobs.apply(&mut cfg);
    cfg.validate()?;
    Ok(cfg)
}

fn finish(out: &Path, report: &irr_core::harness::ExperimentReport) -> Result<()> {
    let paths = write_report(report, out)?;
    for row in &report.rows {
        println!(
            "{:<24} psnr {:>8.3}  rmse {:>8.3}  ssim {:.4}",
            row.condition, row.psnr, row.rmse, row.ssim
        );
    }
    println!("wrote {}", paths.csv.display());
    Ok(())
}

fn load_field(path: &Path) -> Result<Field2D> {
    load_tensor(path)
        .and_then(|t| t.to_field())
        .with_context(|| format!("reading {}", path.display()))
}

fn save_pair(dir: &Path, stem: &str, f: &Field2D) -> Result<()> {
    save_tensor(dir.join(format!("{stem}.irr")), &Tensor::from(f))?;
    save_png(dir.join(format!("{stem}.png")), &f.clamp(0.0, 1.0))?;
    Ok(())
}

fn simulate(cli: &Cli, input: Option<&Path>, category: Category, knobs: &Knobs) -> Result<()> {
    let cfg = resolve(cli, Protocol::Single, knobs)?;
    let radiance = match input {
        Some(path) => load_field(path)?,
        None => generate(&SceneSpec::square(category, cfg.scene.size, cfg.scene.seed))?
            .image
            .into_field(),
    };
    let screen = ScreenImage::new(radiance)?;
    let obs = observe(&screen, &cfg.optics)?;
    fs::create_dir_all(&cli.out)?;
    save_pair(&cli.out, "screen", screen.radiance())?;
    save_pair(&cli.out, "observation", obs.irradiance())?;
    fs::write(cli.out.join("config.toml"), cfg.to_toml()?)?;
    println!("wrote {}", cli.out.join("observation.irr").display());
    Ok(())
}

fn invert(cli: &Cli, input: &Path, truth: Option<&Path>, knobs: &Knobs) -> Result<()> {
    let cfg = resolve(cli, Protocol::Single, knobs)?;
    let obs = WallObservation::new(load_field(input)?)?;
    let result = run_inversion(&obs, &cfg.optics, &cfg.scheme, None)?;
    let rec = result.final_estimate.clamp(0.0, 1.0);
    fs::create_dir_all(&cli.out)?;
    save_pair(&cli.out, "reconstruction", &rec)?;
    let label = cfg.scheme.scheme.name().to_string();
    write_residuals(
        cli.out.join("residuals.csv"),
        &[(label.clone(), result.residual_history.clone())],
    )?;
    fs::write(cli.out.join("config.toml"), cfg.to_toml()?)?;
    println!(
        "{} iterations, converged {}, final residual {:e}",
        result.iterations_run,
        result.converged,
        result.residual_history.last().copied().unwrap_or(f64::NAN)
    );
    if let Some(path) = truth {
        let x = load_field(path)?;
        let line = format!("{label},{},{},{}", psnr(&x, &rec)?, rmse(&x, &rec)?, ssim(&x, &rec)?);
        fs::write(
            cli.out.join("report.csv"),
            format!("condition,psnr,rmse,ssim\n{line}\n"),
        )?;
        let grid = hconcat(&[&x, obs.irradiance(), &rec], cfg.report.grid_gap, 1.0)?;
        save_png(cli.out.join("grid.png"), &grid.clamp(0.0, 1.0))?;
        println!("{line}");
    }
    Ok(())
}

fn gen(cli: &Cli, category: Category, count: usize, size: usize) -> Result<()> {
    if count == 0 {
        bail!("--count must be at least 1");
    }
    let seed = cli.seed.unwrap_or(0);
    let scenes = generate_corpus(category, count, size, seed)?;
    let split = if count >= 10 {
        Some(make_split(count, seed)?)
    } else {
        None
    };
    let dir = cli.out.join(category.name());
    fs::create_dir_all(&dir)?;
    let mut manifest = String::from("index,category,seed,split\n");
    for (i, scene) in scenes.iter().enumerate() {
        save_pair(&dir, &format!("{i:05}"), scene.image.radiance())?;
        let label = split.as_ref().and_then(|s| s.label(i)).unwrap_or("test");
        manifest.push_str(&manifest_line(i, category, scene.spec.seed, label));
        manifest.push('\n');
    }
    fs::write(dir.join("manifest.csv"), manifest)?;
    println!("wrote {count} {category} scenes to {}", dir.display());
    Ok(())
}
