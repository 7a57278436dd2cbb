use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use marktest::harness::{replicate_seed, run_power_study};
use marktest::io::{
    parse_config, parse_pattern_csv, parse_study_config, parse_test_config, save_pattern_csv,
    RunManifest,
};
use marktest::models::{ModelFamily, ModelSpec, Simulator};
use marktest::rng::{self, domain};
use marktest::toypower::{toy_power_curve, ToyCase};
use marktest::{run_test, Error, Result, Window};

#[derive(Parser)]
#[command(name = "marktest", version, about = "Deviation tests for marked point patterns")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Random labelling test of one pattern.
    Test {
        #[arg(long)]
        pattern: PathBuf,
        #[arg(long)]
        config: PathBuf,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Simulate patterns from one of the model families.
    Simulate {
        #[arg(long)]
        model: String,
        /// JSON file with model parameters.
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long)]
        n: Option<usize>,
        /// `x0,x1,y0,y1`.
        #[arg(long)]
        window: Option<String>,
        #[arg(long, default_value_t = 1)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Power study over a parameter sweep.
    Power {
        #[arg(long)]
        study: PathBuf,
        /// Overrides the seed in the study file.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// N = 1000, s = 999 and the complete parameter grid.
        #[arg(long)]
        full: bool,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Exact power of the two toy examples.
    Toy {
        #[arg(long)]
        example: u8,
        #[arg(long)]
        case: char,
        /// `start:step:end`.
        #[arg(long, default_value = "0:0.25:3")]
        mu3_grid: String,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    out.with_file_name(name)
}

fn parse_window(s: &str) -> Result<Window> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::InvalidConfig(format!("window '{s}': {e}")))?;
    match v.as_slice() {
        [x0, x1, y0, y1] => Window::new(*x0, *x1, *y0, *y1),
        _ => Err(Error::InvalidConfig(format!("window '{s}' needs four numbers x0,x1,y0,y1"))),
    }
}

fn parse_range(s: &str) -> Result<Vec<f64>> {
    let bad = || Error::InvalidConfig(format!("grid '{s}' must be start:step:end with step > 0"));
    let v: Vec<f64> = s
        .split(':')
        .map(|t| t.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| bad())?;
    let [start, step, end] = v.as_slice() else { return Err(bad()) };
    if !(*step > 0.0 && end >= start) {
        return Err(bad());
    }
    let count = ((end - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|k| ((start + k as f64 * step) * 1e12).round() / 1e12).collect())
}

fn cmd_test(pattern: &Path, config: &Path, seed: Option<u64>, out: &Path) -> Result<()> {
    let mut file = parse_test_config(config)?;
    if let Some(s) = seed {
        file.seed = s;
    }
    let (window, cfg) = file.to_test_config()?;
    let data = parse_pattern_csv(pattern, window)?;
    let result = run_test(&data, &cfg)?;
    let mut w = BufWriter::new(File::create(out)?);
    writeln!(w, "r,t_data,t0,q_lower,q_upper,residual")?;
    let null = &result.null;
    for j in 0..cfg.grid.len() {
        writeln!(
            w,
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            cfg.grid.value(j),
            result.t_data.values()[j],
            result.t0.values()[j],
            null.q_lower[j],
            null.q_upper[j],
            result.residual.values()[j],
        )?;
    }
    writeln!(w, "p_value,{}", result.p_value)?;
    writeln!(w, "u_data,{:.16e}", result.u[0])?;
    w.flush()?;
    drop(w);
    let mut manifest = RunManifest::start("test", &file.resolved(), file.seed)?;
    manifest.add_input(pattern)?;
    manifest.add_input(config)?;
    manifest.add_output(out)?;
    manifest.finish_and_write(&manifest_path(out))?;
    println!("p_value={} rank={} s={}", result.p_value, result.rank, cfg.s);
    Ok(())
}

fn load_model(model: &str, params: Option<&Path>) -> Result<ModelSpec> {
    let family: ModelFamily = model.parse()?;
    let Some(path) = params else { return Ok(ModelSpec::defaults(family)) };
    let mut doc: serde_json::Value = parse_config(path)?;
    let obj = doc
        .as_object_mut()
        .ok_or_else(|| Error::InvalidConfig("model parameters must be a JSON object".into()))?;
    match obj.get("family").and_then(|v| v.as_str()) {
        Some(f) if f.parse::<ModelFamily>()? != family => {
            return Err(Error::InvalidConfig(format!("--model {family} but params file says {f}")));
        }
        _ => {
            obj.insert("family".into(), family.name().into());
        }
    }
    Ok(serde_json::from_value(doc)?)
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    model: &str,
    params: Option<&Path>,
    n: Option<usize>,
    window: Option<&str>,
    reps: usize,
    seed: u64,
    out_dir: &Path,
) -> Result<()> {
    let mut spec = load_model(model, params)?;
    if let Some(n) = n {
        spec.n = n;
    }
    if let Some(w) = window {
        spec.window = parse_window(w)?;
    }
    if reps == 0 {
        return Err(Error::InvalidConfig("--reps must be at least 1".into()));
    }
    let sim = Simulator::new(spec)?;
    fs::create_dir_all(out_dir)?;
    let mut manifest = RunManifest::start("simulate", &spec, seed)?;
    if let Some(p) = params {
        manifest.add_input(p)?;
    }
    let width = reps.to_string().len().max(4);
    for rep in 0..reps {
        let rep_seed = rng::derive_seed(seed, &[domain::REPLICATE, rep as u64]);
        let pattern = sim.simulate(&mut rng::stream(rep_seed, &[domain::PATTERN]))?;
        let path = out_dir.join(format!("pattern_{:0width$}.csv", rep + 1));
        save_pattern_csv(&pattern, &path)?;
        manifest.replicate_seeds.push(rep_seed);
        manifest.add_output(&path)?;
    }
    manifest.finish_and_write(&out_dir.join("manifest.json"))?;
    println!("wrote {reps} {} pattern(s) to {}", spec.family, out_dir.display());
    Ok(())
}

fn cmd_power(study: &Path, seed: Option<u64>, out: &Path, full: bool, threads: Option<usize>) -> Result<()> {
    if let Some(k) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| Error::InvalidConfig(format!("--threads: {e}")))?;
    }
    let mut config = parse_study_config(study)?;
    if full {
        config = config.into_full();
    }
    if let Some(s) = seed {
        config.seed = s;
    }
    let table = run_power_study(&config)?;
    table.write_csv(File::create(out)?)?;
    let mut manifest = RunManifest::start("power", &config, config.seed)?;
    for vi in 0..config.sweep.values.len() {
        for rep in 0..config.replicates {
            manifest.replicate_seeds.push(replicate_seed(config.seed, vi, rep));
        }
    }
    manifest.add_input(study)?;
    manifest.add_output(out)?;
    manifest.finish_and_write(&manifest_path(out))?;
    for (value, failed) in &table.failed_replicates {
        if *failed > 0 {
            eprintln!("{}={value}: {failed} replicate(s) failed and were excluded", config.sweep.parameter);
        }
    }
    println!("wrote {} rows to {}", table.rows.len(), out.display());
    Ok(())
}

fn cmd_toy(example: u8, case: char, grid: &str, alpha: f64, out: &Path) -> Result<()> {
    let toy = ToyCase::from_flags(example, case)?;
    let mu3 = parse_range(grid)?;
    let curve = toy_power_curve(toy, &mu3, alpha)?;
    let mut w = csv::Writer::from_writer(File::create(out)?);
    for point in &curve {
        w.serialize(point)?;
    }
    w.flush()?;
    drop(w);
    let config = serde_json::json!({ "example": example, "case": case.to_string(), "mu3": mu3, "alpha": alpha });
    let mut manifest = RunManifest::start("toy", &config, 0)?;
    manifest.add_output(out)?;
    manifest.finish_and_write(&manifest_path(out))?;
    println!("wrote {} points to {}", curve.len(), out.display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Test { pattern, config, seed, out } => cmd_test(&pattern, &config, seed, &out),
        Command::Simulate { model, params, n, window, reps, seed, out_dir } => {
            cmd_simulate(&model, params.as_deref(), n, window.as_deref(), reps, seed, &out_dir)
        }
        Command::Power { study, seed, out, full, threads } => cmd_power(&study, seed, &out, full, threads),
        Command::Toy { example, case, mu3_grid, alpha, out } => cmd_toy(example, case, &mu3_grid, alpha, &out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 2 } else { 1 })
        }
    }
}
