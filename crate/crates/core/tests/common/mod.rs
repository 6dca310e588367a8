#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

use colorcount::synthgen::{grid_specs, NamedSpec};

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_colorcount")
}

pub fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("spawn colorcount")
}

pub fn run_ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "colorcount {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

/// Spec CSV for `specs`, in the column layout the `corpus` subcommand reads.
pub fn spec_csv(specs: &[NamedSpec]) -> String {
    let mut out = String::from("name,pattern,k,width,height,palette_seed,min_channel_separation,noise_sigma,truncate\n");
    for ns in specs {
        let s = &ns.spec;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            ns.name, s.pattern, s.k, s.width, s.height, s.palette_seed, s.min_channel_separation, s.noise_sigma, s.truncate
        ));
    }
    out
}

/// The 20-image grid: four patterns, K in {1,2,4,8,16}, 256x256.
pub fn grid(noise: f64) -> Vec<NamedSpec> {
    grid_specs(&[1, 2, 4, 8, 16], 256, noise, 0)
}

/// Renders `specs` through the CLI into `dir`, returning the manifest path.
pub fn cli_corpus(specs: &[NamedSpec], dir: &Path) -> std::path::PathBuf {
    let spec_path = dir.join("specs.csv");
    std::fs::write(&spec_path, spec_csv(specs)).unwrap();
    run_ok(&["corpus", "--spec", spec_path.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    dir.join("manifest.csv")
}

/// Parses a summary CSV into (method, exact rate, within-one rate).
pub fn summary_rates(summary: &str) -> Vec<(String, f64, f64)> {
    summary
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].to_string(), f[2].parse().unwrap(), f[3].parse().unwrap())
        })
        .collect()
}
