use std::error::Error;
use std::fs;
use std::path::{Path, PathBuf};

use memd_core::analysis::CorrelationReport;
use memd_core::arith::{ArithPath, FixedPath, PathKind, RealPath};
use memd_core::bench::{bench_decompose, BenchReport, BenchSettings};
use memd_core::decomposer::{decompose, stream_decompose, ImfStack, StreamRun};
use memd_core::io::{read_csv, write_csv, CsvScalar};
use memd_core::synth::{GroundTruth, Preset};
use memd_core::validation::{
    alpha_preset_summary, condition_report, correlation_failures, correlation_report,
    format_conditions,
};
use memd_core::{MemdError, MultivariateSignal, RunConfig, Sample, SplineWindow};

use crate::{Command, RunArgs};

type CmdResult<T> = Result<T, Box<dyn Error>>;

pub fn run(command: Command) -> CmdResult<bool> {
    match command {
        Command::Decompose { run, out_dir } => cmd_decompose(&load(&run)?, &out_dir),
        Command::Validate { run, out_dir } => cmd_validate(&load(&run)?, out_dir.as_deref()),
        Command::Stream { run, out_dir } => cmd_stream(&load(&run)?, out_dir.as_deref()),
        Command::Bench {
            run,
            reps,
            warmup,
            min_rate,
            json,
        } => {
            let settings = BenchSettings {
                repetitions: reps,
                warmup,
            };
            cmd_bench(&load(&run)?, run.path.is_some(), settings, min_rate, json)
        }
    }
}

struct Loaded {
    cfg: RunConfig,
    signal: MultivariateSignal<f64>,
    truths: Vec<GroundTruth>,
}

/// Reads a config from JSON or from the `# config:` line of a CSV artifact.
fn load_config(path: &Path) -> CmdResult<RunConfig> {
    let text = fs::read_to_string(path)?;
    let json = if text.trim_start().starts_with('{') {
        text.as_str()
    } else {
        text.lines()
            .find_map(|l| l.strip_prefix("# config:"))
            .ok_or_else(|| format!("{}: no embedded config", path.display()))?
    };
    Ok(RunConfig::from_json(json)?)
}

fn load(args: &RunArgs) -> CmdResult<Loaded> {
    let mut cfg = match &args.config {
        Some(p) => load_config(p)?,
        None => RunConfig::default(),
    };
    macro_rules! set {
        ($($field:ident = $arg:ident),*) => {$(
            if let Some(v) = args.$arg.clone() {
                cfg.$field = v;
            }
        )*};
    }
    set!(
        n_imfs = imfs,
        n_directions = dirs,
        n_siftings = siftings,
        path = path,
        envelope = envelope,
        mean = mean,
        tie = tie,
        k_max = kmax,
        seed = seed
    );
    if let Some(w) = &args.window {
        cfg.window = SplineWindow {
            before: w[0],
            after: w[1],
        };
    }
    if let Some(p) = &args.input {
        cfg.input = Some(p.clone());
        cfg.preset = None;
    }
    if let Some(p) = args.preset {
        cfg.preset = Some(p);
        cfg.input = None;
    }
    let (signal, truths) = match (&cfg.preset, &cfg.input) {
        (Some(p), _) => {
            let g = p.generate(cfg.seed)?;
            (g.signal, g.truths)
        }
        (None, Some(path)) => (read_csv(path)?.signal, Vec::new()),
        (None, None) => return Err("need --input or --preset".into()),
    };
    cfg.n_channels = signal.n_channels();
    cfg.sample_rate = signal.sample_rate();
    cfg.validate()?;
    Ok(Loaded {
        cfg,
        signal,
        truths,
    })
}

fn batch<P: ArithPath>(path: &P, x: &MultivariateSignal<f64>, cfg: &RunConfig) -> CmdResult<ImfStack<P::Scalar>> {
    let xq = path.quantize_signal(x);
    Ok(decompose(path, &xq, &cfg.directions()?, cfg.n_imfs, &cfg.sift_config())?)
}

fn write_stack<S: CsvScalar>(dir: &Path, stack: &ImfStack<S>, cfg: &RunConfig) -> CmdResult<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let echo = [("config", cfg.to_json())];
    let mut files = Vec::new();
    for (j, imf) in stack.imfs.iter().enumerate() {
        let f = dir.join(format!("imf_{}.csv", j + 1));
        write_csv(&f, imf, &echo)?;
        files.push(f);
    }
    let f = dir.join("residue.csv");
    write_csv(&f, &stack.residue, &echo)?;
    files.push(f);
    let f = dir.join("config.json");
    fs::write(&f, cfg.to_json_pretty() + "\n")?;
    files.push(f);
    Ok(files)
}

fn describe(cfg: &RunConfig, x: &MultivariateSignal<f64>) -> String {
    let source = match (&cfg.preset, &cfg.input) {
        (Some(p), _) => format!("preset {p}"),
        (None, Some(f)) => f.display().to_string(),
        (None, None) => "?".into(),
    };
    format!(
        "{source}: {} channels x {} samples at {} Hz; path {}, K={} S={} M={}",
        x.n_channels(),
        x.len(),
        x.sample_rate(),
        cfg.path.as_str(),
        cfg.n_directions,
        cfg.n_siftings,
        cfg.n_imfs
    )
}

fn cmd_decompose(run: &Loaded, out_dir: &Path) -> CmdResult<bool> {
    let cfg = &run.cfg;
    println!("{}", describe(cfg, &run.signal));
    let (files, extracted) = match cfg.path {
        PathKind::Real => {
            let stack = batch(&RealPath, &run.signal, cfg)?;
            (write_stack(out_dir, &stack, cfg)?, stack.extracted)
        }
        PathKind::Fixed => {
            let path = FixedPath::new();
            let stack = batch(&path, &run.signal, cfg)?;
            println!("sticky overflow: {}", if path.overflowed() { "yes" } else { "no" });
            (write_stack(out_dir, &stack, cfg)?, stack.extracted)
        }
    };
    println!("extracted {extracted} of {} IMFs", cfg.n_imfs);
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(true)
}

fn cmd_validate(run: &Loaded, out_dir: Option<&Path>) -> CmdResult<bool> {
    let cfg = &run.cfg;
    println!("{}", describe(cfg, &run.signal));
    let mut ok = true;
    let stack = match cfg.path {
        PathKind::Real => batch(&RealPath, &run.signal, cfg)?,
        PathKind::Fixed => {
            let path = FixedPath::new();
            let stack = batch(&path, &run.signal, cfg)?.to_f64();
            let overflow = path.overflowed();
            println!("sticky overflow: {}", if overflow { "yes" } else { "no" });
            ok &= !overflow;
            stack
        }
    };
    println!("extracted {} of {} IMFs", stack.extracted, cfg.n_imfs);

    let report = if run.truths.is_empty() {
        CorrelationReport::default()
    } else {
        correlation_report(&stack, &run.truths)?
    };
    if !report.rows.is_empty() {
        println!("\ncorrelation with ground truth");
        print!("{report}");
    }
    let mut spectra = None;
    match cfg.preset {
        Some(Preset::PaperQuadtone) => {
            let failures = correlation_failures(&report, &run.truths);
            for f in &failures {
                println!("  threshold miss: {f}");
            }
            ok &= failures.is_empty();
        }
        Some(Preset::AlphaSurrogate) => {
            let summary = alpha_preset_summary(&stack)?;
            println!("\nWelch PSD per IMF");
            print!("{summary}");
            if summary.in_band.len() != 1 {
                println!(
                    "  threshold miss: {} IMFs peak in the alpha band, need exactly one",
                    summary.in_band.len()
                );
            }
            ok &= summary.passes();
            spectra = Some(summary);
        }
        None => println!("no ground truth for file input; reporting conditions only"),
    }

    let conditions = condition_report(&stack);
    println!("\nIMF condition I (|extrema - zero crossings| <= 1), informational");
    for (j, channels) in conditions.iter().enumerate() {
        let cells: Vec<String> = channels
            .iter()
            .enumerate()
            .map(|(c, cond)| {
                let mark = if cond.satisfies_count_condition() { "ok" } else { "violated" };
                format!("ch{} {mark} ({})", c + 1, cond.difference)
            })
            .collect();
        println!("  IMF{}: {}", j + 1, cells.join(", "));
    }

    if let Some(dir) = out_dir {
        fs::create_dir_all(dir)?;
        let echo = format!("# config: {}\n", cfg.to_json());
        fs::write(dir.join("correlation.csv"), echo.clone() + &report.to_csv_string())?;
        fs::write(dir.join("conditions.csv"), echo + &format_conditions(&conditions))?;
        fs::write(dir.join("config.json"), cfg.to_json_pretty() + "\n")?;
        if let Some(s) = &spectra {
            fs::write(dir.join("spectra.json"), serde_json::to_string_pretty(s)? + "\n")?;
        }
        println!("wrote reports to {}", dir.display());
    }
    println!("\nresult: {}", if ok { "PASS" } else { "FAIL" });
    Ok(ok)
}

/// Samples that differ between two stacks over `[lo, hi)`.
fn mismatches<S: Sample>(a: &ImfStack<S>, b: &ImfStack<S>, lo: usize, hi: usize) -> usize {
    a.imfs
        .iter()
        .chain(std::iter::once(&a.residue))
        .zip(b.imfs.iter().chain(std::iter::once(&b.residue)))
        .map(|(x, y)| {
            (lo..hi)
                .filter(|&t| x.channels().iter().zip(y.channels()).any(|(p, q)| p[t] != q[t]))
                .count()
        })
        .sum()
}

fn compare_stream<P: ArithPath>(
    path: P,
    run: &Loaded,
    out_dir: Option<&Path>,
) -> CmdResult<bool>
where
    P::Scalar: CsvScalar,
{
    let cfg = &run.cfg;
    let x = path.quantize_signal(&run.signal);
    let dirs = cfg.directions()?;
    let stack = decompose(&path, &x, &dirs, cfg.n_imfs, &cfg.sift_config())?;
    let (streamed, _): (StreamRun<P::Scalar>, P) =
        stream_decompose(path, &x, &dirs, &cfg.sift_config(), cfg.stream_config())?;
    let bound = cfg.n_imfs * cfg.n_siftings * (cfg.k_max + 2);
    println!("provisional emissions: {}", streamed.provisional_emissions);
    println!("max buffered: {} samples (bound {bound})", streamed.max_buffered);
    println!("max latency: {} samples", streamed.max_latency);
    let t = x.len();
    let (lo, hi) = (cfg.k_max.min(t), t.saturating_sub(cfg.k_max).max(cfg.k_max.min(t)));
    let interior = mismatches(&streamed.stack, &stack, lo, hi);
    let total = mismatches(&streamed.stack, &stack, 0, t);
    if interior == 0 {
        println!("interior match: exact");
    } else {
        println!("interior match: {interior} samples differ in [{lo}, {hi})");
    }
    if total == 0 {
        println!("full match: exact");
    } else {
        println!("full match: {total} samples differ");
    }
    if let Some(dir) = out_dir {
        for f in write_stack(dir, &streamed.stack, cfg)? {
            println!("wrote {}", f.display());
        }
    }
    Ok(interior == 0 && streamed.max_buffered <= bound)
}

fn cmd_stream(run: &Loaded, out_dir: Option<&Path>) -> CmdResult<bool> {
    println!("{}", describe(&run.cfg, &run.signal));
    println!("k_max: {}", run.cfg.k_max);
    match run.cfg.path {
        PathKind::Real => compare_stream(RealPath, run, out_dir),
        PathKind::Fixed => compare_stream(FixedPath::new(), run, out_dir),
    }
}

fn cmd_bench(
    run: &Loaded,
    path_given: bool,
    settings: BenchSettings,
    min_rate: Option<f64>,
    json: bool,
) -> CmdResult<bool> {
    let cfg = &run.cfg;
    let kinds = if path_given {
        vec![cfg.path]
    } else {
        vec![PathKind::Real, PathKind::Fixed]
    };
    let dirs = cfg.directions()?;
    let reports = kinds
        .into_iter()
        .map(|k| bench_decompose(k, &run.signal, &dirs, cfg.n_imfs, &cfg.sift_config(), settings))
        .collect::<Result<Vec<BenchReport>, MemdError>>()?;
    if json {
        println!("{}", serde_json::to_string_pretty(&reports)?);
    } else {
        println!("{}", describe(cfg, &run.signal));
        for r in &reports {
            print!("{r}");
        }
    }
    let ok = match (min_rate, reports.iter().find(|r| r.path == PathKind::Real)) {
        (Some(min), Some(r)) => {
            let pass = r.samples_per_second_per_channel >= min;
            if !pass {
                eprintln!(
                    "real path below {min} samples/s/channel: {:.0}",
                    r.samples_per_second_per_channel
                );
            }
            pass
        }
        _ => true,
    };
    Ok(ok)
}
