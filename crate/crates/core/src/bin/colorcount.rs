use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use colorcount::harness::{self, curve_to_csv, emit_curve_svg, run_benchmark, CountOptions};
use colorcount::synthgen::{self, Pattern, SynthSpec};
use colorcount::{decode_image, load_manifest, Error, Method};

#[derive(Parser)]
#[command(name = "colorcount", version, about = "Estimate the number of colors in RGB images")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct SweepArgs {
    /// cch, gmm-aic, gmm-bic, gmm-avg-ll, gmm-js or kmeans
    #[arg(long, default_value = "cch")]
    method: String,
    #[arg(long = "kmax", default_value_t = harness::DEFAULT_K_MAX)]
    k_max: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Draws per mixture for gmm-js
    #[arg(long, default_value_t = harness::DEFAULT_JS_SAMPLES)]
    js_samples: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the color count of one image
    Count {
        image: PathBuf,
        #[command(flatten)]
        args: SweepArgs,
        /// Print the full estimate as JSON
        #[arg(long)]
        json: bool,
    },
    /// Write the per-K score curve of a sweep method
    Sweep {
        image: PathBuf,
        #[command(flatten)]
        args: SweepArgs,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Render one synthetic image
    Synth {
        #[arg(long)]
        pattern: String,
        #[arg(long)]
        k: usize,
        /// WIDTHxHEIGHT
        #[arg(long, default_value = "256x256")]
        size: String,
        /// Noise standard deviation in 8-bit levels
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 64)]
        separation: u8,
        /// Reflect noisy values into range instead of clipping
        #[arg(long)]
        no_truncate: bool,
        #[arg(long)]
        jpeg_quality: Option<u8>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render a corpus of synthetic images with a manifest
    Corpus {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate methods on a manifest
    Bench {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value = "cch,gmm-bic,kmeans")]
        methods: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long = "kmax", default_value_t = harness::DEFAULT_K_MAX)]
        k_max: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = harness::DEFAULT_JS_SAMPLES)]
        js_samples: usize,
    },
}

fn options(k_max: usize, seed: u64, js_samples: usize) -> CountOptions {
    CountOptions {
        k_max,
        seed,
        js_samples,
        ..CountOptions::default()
    }
}

fn parse_size(s: &str) -> Result<(usize, usize), Error> {
    let bad = || Error::InvalidArgument(format!("size must look like 256x256, got {s:?}"));
    let (w, h) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    Ok((w.parse().map_err(|_| bad())?, h.parse().map_err(|_| bad())?))
}

fn write(path: &PathBuf, contents: String) -> Result<(), Error> {
    std::fs::write(path, contents).map_err(|source| Error::Io {
        path: path.clone(),
        source,
    })
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Count { image, args, json } => {
            let method: Method = args.method.parse()?;
            let samples = decode_image(&image)?;
            let est = harness::count(&samples, method, &options(args.k_max, args.seed, args.js_samples))?;
            if json {
                let text = serde_json::to_string_pretty(&est).map_err(|e| Error::Encode(e.to_string()))?;
                println!("{text}");
            } else {
                println!("{}", est.estimate);
            }
        }
        Command::Sweep { image, args, out, svg } => {
            let method: Method = args.method.parse()?;
            if !method.is_sweep() {
                return Err(Error::InvalidArgument("sweep needs a gmm-* or kmeans method".into()));
            }
            let samples = decode_image(&image)?;
            let curve = harness::sweep(&samples, method, &options(args.k_max, args.seed, args.js_samples))?;
            write(&out, curve_to_csv(&curve))?;
            if let Some(svg) = svg {
                emit_curve_svg(&curve, &svg)?;
            }
            println!("{}", harness::select_count(&curve).estimate);
        }
        Command::Synth {
            pattern,
            k,
            size,
            noise,
            seed,
            separation,
            no_truncate,
            jpeg_quality,
            out,
        } => {
            let pattern: Pattern = pattern.parse()?;
            let (width, height) = parse_size(&size)?;
            let spec = SynthSpec {
                palette_seed: seed,
                min_channel_separation: separation,
                noise_sigma: noise,
                truncate: !no_truncate,
                jpeg_quality,
                ..SynthSpec::new(pattern, k, width, height)
            };
            synthgen::generate(&spec)?.image.write_png(&out)?;
        }
        Command::Corpus { spec, out } => {
            let specs = synthgen::load_specs(&spec)?;
            let manifest = synthgen::write_corpus(&specs, &out)?;
            println!("{} images written to {}", manifest.len(), out.display());
        }
        Command::Bench {
            manifest,
            methods,
            out,
            k_max,
            seed,
            js_samples,
        } => {
            let methods: Vec<Method> = methods
                .split(',')
                .map(|m| m.trim().parse())
                .collect::<Result<_, _>>()?;
            let manifest = load_manifest(&manifest)?;
            let report = run_benchmark(&manifest, &methods, &options(k_max, seed, js_samples));
            report.write_csv(&out)?;
            let summary = report.summary_csv();
            write(&out.with_extension("summary.csv"), summary.clone())?;
            print!("{summary}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
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
            eprintln!("colorcount: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
