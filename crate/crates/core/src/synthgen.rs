//! Labeled synthetic images with a known number of colors.
//!
//! A palette is rejection-sampled so that every pair of colors differs by at
//! least `min_channel_separation` in some channel. Pixels are assigned to
//! palette entries by a geometric layout, then optionally distorted with
//! Gaussian noise, clipping at the 8-bit range, and a JPEG round trip.

use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use image::codecs::jpeg::JpegEncoder;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::samples::{decode_bytes, BenchmarkManifest, ManifestEntry, PixelSamples};

/// Smallest share of the image any single color may cover.
pub const MIN_REGION_FRACTION: f64 = 0.01;

const PALETTE_ATTEMPTS: usize = 64;
const CANDIDATES_PER_COLOR: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pattern {
    /// Equal-width vertical stripes.
    Bars,
    /// Stripes with sinusoidal boundaries.
    Waves,
    /// Rectangular tiles.
    Patches,
    /// Concentric rings.
    Rings,
}

impl Pattern {
    pub const ALL: [Pattern; 4] = [Pattern::Bars, Pattern::Waves, Pattern::Patches, Pattern::Rings];

    pub fn as_str(self) -> &'static str {
        match self {
            Pattern::Bars => "bars",
            Pattern::Waves => "waves",
            Pattern::Patches => "patches",
            Pattern::Rings => "rings",
        }
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Pattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Pattern::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown pattern {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub pattern: Pattern,
    pub k: usize,
    pub width: usize,
    pub height: usize,
    pub palette_seed: u64,
    pub min_channel_separation: u8,
    /// Standard deviation in 8-bit units.
    pub noise_sigma: f64,
    /// Clip noisy values at 0 and 255. When off, values reflect back into
    /// range instead.
    pub truncate: bool,
    pub jpeg_quality: Option<u8>,
}

impl SynthSpec {
    pub fn new(pattern: Pattern, k: usize, width: usize, height: usize) -> Self {
        Self {
            pattern,
            k,
            width,
            height,
            palette_seed: 0,
            min_channel_separation: 64,
            noise_sigma: 0.0,
            truncate: true,
            jpeg_quality: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::InfeasibleSpec("k must be at least 1".into()));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::InfeasibleSpec("image must have pixels".into()));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::InfeasibleSpec("noise_sigma must be a non-negative number".into()));
        }
        if let Some(q) = self.jpeg_quality {
            if !(1..=100).contains(&q) {
                return Err(Error::InfeasibleSpec("jpeg_quality must be in 1..=100".into()));
            }
        }
        let levels = 255 / u64::from(self.effective_separation()) + 1;
        if self.k as u64 > levels.pow(3) {
            return Err(Error::InfeasibleSpec(format!(
                "at most {} colors fit a channel separation of {}",
                levels.pow(3),
                self.min_channel_separation
            )));
        }
        Ok(())
    }

    fn effective_separation(&self) -> u8 {
        self.min_channel_separation.max(1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthImage {
    pub image: PixelSamples,
    pub truth: usize,
    pub palette: Vec<[u8; 3]>,
    /// Palette index of every pixel, row-major.
    pub labels: Vec<usize>,
}

/// Renders a spec. Deterministic in the spec, including `palette_seed`.
pub fn generate(spec: &SynthSpec) -> Result<SynthImage> {
    spec.validate()?;
    let palette = sample_palette(spec.k, spec.effective_separation(), spec.palette_seed)?;
    render(spec, palette)
}

/// Renders a spec with a caller-chosen palette of `spec.k` colors. The
/// separation constraint is not checked.
pub fn render(spec: &SynthSpec, palette: Vec<[u8; 3]>) -> Result<SynthImage> {
    spec.validate()?;
    if palette.len() != spec.k {
        return Err(Error::InvalidArgument(format!(
            "palette has {} colors, spec wants {}",
            palette.len(),
            spec.k
        )));
    }
    let labels = layout(spec);
    let n = labels.len();
    let mut counts = vec![0usize; spec.k];
    for &l in &labels {
        counts[l] += 1;
    }
    let min_area = (MIN_REGION_FRACTION * n as f64).ceil() as usize;
    if let Some(&smallest) = counts.iter().min() {
        if smallest < min_area.max(1) {
            return Err(Error::InfeasibleSpec(format!(
                "a {}x{} {} image cannot give {} colors 1% of the area each",
                spec.width, spec.height, spec.pattern, spec.k
            )));
        }
    }

    let mut rgb: Vec<u8> = labels.iter().flat_map(|&l| palette[l]).collect();
    if spec.noise_sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.palette_seed);
        rng.set_stream(1);
        for v in &mut rgb {
            let z: f64 = rng.sample(StandardNormal);
            let noisy = f64::from(*v) + spec.noise_sigma * z;
            let noisy = if spec.truncate { noisy.clamp(0.0, 255.0) } else { reflect(noisy) };
            *v = noisy.round() as u8;
        }
    }
    let mut image = PixelSamples::from_rgb8(spec.width, spec.height, &rgb)?;
    if let Some(quality) = spec.jpeg_quality {
        image = jpeg_round_trip(&image, quality)?;
    }
    Ok(SynthImage {
        image,
        truth: spec.k,
        palette,
        labels,
    })
}

/// Folds a real value into `[0, 255]` by mirroring at the ends.
fn reflect(v: f64) -> f64 {
    let m = v.rem_euclid(510.0);
    if m > 255.0 {
        510.0 - m
    } else {
        m
    }
}

fn jpeg_round_trip(image: &PixelSamples, quality: u8) -> Result<PixelSamples> {
    let img = image.to_image()?;
    let mut buf = Vec::new();
    JpegEncoder::new_with_quality(&mut buf, quality)
        .encode_image(&img)
        .map_err(|e| Error::Encode(e.to_string()))?;
    decode_bytes(&buf, Path::new("<jpeg round trip>"))
}

/// Colors whose pairwise Chebyshev distance is at least `separation`.
pub fn sample_palette(k: usize, separation: u8, seed: u64) -> Result<Vec<[u8; 3]>> {
    let sep = i32::from(separation);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    'attempt: for _ in 0..PALETTE_ATTEMPTS {
        let mut palette: Vec<[u8; 3]> = Vec::with_capacity(k);
        while palette.len() < k {
            let found = (0..CANDIDATES_PER_COLOR).find_map(|_| {
                let c: [u8; 3] = [rng.random(), rng.random(), rng.random()];
                palette
                    .iter()
                    .all(|p| chebyshev(p, &c) >= sep)
                    .then_some(c)
            });
            match found {
                Some(c) => palette.push(c),
                None => continue 'attempt,
            }
        }
        return Ok(palette);
    }
    Err(Error::InfeasibleSpec(format!(
        "could not place {k} colors {separation} levels apart"
    )))
}

fn chebyshev(a: &[u8; 3], b: &[u8; 3]) -> i32 {
    (0..3)
        .map(|c| (i32::from(a[c]) - i32::from(b[c])).abs())
        .max()
        .unwrap_or(0)
}

/// Palette index per pixel.
fn layout(spec: &SynthSpec) -> Vec<usize> {
    let (w, h, k) = (spec.width, spec.height, spec.k);
    let n = w * h;
    match spec.pattern {
        Pattern::Bars => (0..n).map(|i| (i % w) * k / w).collect(),
        Pattern::Patches => {
            let gx = (k as f64).sqrt().ceil() as usize;
            let gy = k.div_ceil(gx);
            (0..n)
                .map(|i| {
                    let (x, y) = (i % w, i / w);
                    let tile = (y * gy / h) * gx + x * gx / w;
                    tile % k
                })
                .collect()
        }
        Pattern::Waves => quantile_labels(n, k, |i| {
            let (x, y) = ((i % w) as f64 + 0.5, (i / w) as f64 + 0.5);
            x / w as f64 + 0.06 * (2.0 * PI * 2.0 * y / h as f64).sin()
        }),
        Pattern::Rings => quantile_labels(n, k, |i| {
            let (x, y) = ((i % w) as f64 + 0.5, (i / w) as f64 + 0.5);
            (x - w as f64 / 2.0).hypot(y - h as f64 / 2.0)
        }),
    }
}

/// Splits pixels into `k` equal-count groups by rank of `field`.
fn quantile_labels(n: usize, k: usize, field: impl Fn(usize) -> f64) -> Vec<usize> {
    let values: Vec<f64> = (0..n).map(&field).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut labels = vec![0; n];
    for (rank, &i) in order.iter().enumerate() {
        labels[i] = rank * k / n;
    }
    labels
}

/// A spec with the file stem it is written under.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedSpec {
    pub name: String,
    pub spec: SynthSpec,
}

/// Writes `<name>.png` per spec and `manifest.csv` into `out_dir`. Output
/// bytes depend only on the specs.
pub fn write_corpus(specs: &[NamedSpec], out_dir: &Path) -> Result<BenchmarkManifest> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut entries = Vec::with_capacity(specs.len());
    for named in specs {
        if named.name.is_empty() || named.name.contains(['/', '\\']) {
            return Err(Error::InvalidArgument(format!("bad image name {:?}", named.name)));
        }
        let img = generate(&named.spec)?;
        let file = PathBuf::from(format!("{}.png", named.name));
        img.image.write_png(&out_dir.join(&file))?;
        entries.push(ManifestEntry {
            path: file,
            true_count: img.truth,
        });
    }
    let manifest = BenchmarkManifest::new(entries, out_dir.to_path_buf())?;
    manifest.write(&out_dir.join("manifest.csv"))?;
    Ok(manifest)
}

/// Parses a spec CSV. Required columns: `name,pattern,k`. Optional columns
/// `width,height,palette_seed,min_channel_separation,noise_sigma,truncate,
/// jpeg_quality` default to 256, 256, 0, 64, 0, true and none.
pub fn parse_specs(text: &str) -> Result<Vec<NamedSpec>> {
    let bad = |line: usize, message: String| Error::Manifest { line, message };
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| bad(1, e.to_string()))?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    for required in ["name", "pattern", "k"] {
        if col(required).is_none() {
            return Err(bad(1, format!("missing column {required:?}")));
        }
    }
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| bad(line, e.to_string()))?;
        let get = |name: &str| col(name).and_then(|c| record.get(c)).filter(|v| !v.is_empty());
        fn num<T: FromStr>(v: Option<&str>, default: T, line: usize, name: &str) -> Result<T> {
            match v {
                None => Ok(default),
                Some(s) => s.parse().map_err(|_| Error::Manifest {
                    line,
                    message: format!("bad {name} {s:?}"),
                }),
            }
        }
        let pattern: Pattern = get("pattern")
            .ok_or_else(|| bad(line, "missing pattern".into()))?
            .parse()
            .map_err(|e: Error| bad(line, e.to_string()))?;
        let truncate = match get("truncate") {
            None => true,
            Some("true" | "1" | "yes") => true,
            Some("false" | "0" | "no") => false,
            Some(other) => return Err(bad(line, format!("bad truncate {other:?}"))),
        };
        let spec = SynthSpec {
            pattern,
            k: num(get("k"), 0, line, "k")?,
            width: num(get("width"), 256, line, "width")?,
            height: num(get("height"), 256, line, "height")?,
            palette_seed: num(get("palette_seed"), 0, line, "palette_seed")?,
            min_channel_separation: num(get("min_channel_separation"), 64, line, "min_channel_separation")?,
            noise_sigma: num(get("noise_sigma"), 0.0, line, "noise_sigma")?,
            truncate,
            jpeg_quality: get("jpeg_quality")
                .map(|q| num(Some(q), 0u8, line, "jpeg_quality"))
                .transpose()?,
        };
        let name = get("name").ok_or_else(|| bad(line, "missing name".into()))?.to_string();
        out.push(NamedSpec { name, spec });
    }
    Ok(out)
}

pub fn load_specs(path: &Path) -> Result<Vec<NamedSpec>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_specs(&text)
}

/// Every pattern crossed with every `k`, `size`×`size`, palette seeds
/// counting up from `seed`.
pub fn grid_specs(ks: &[usize], size: usize, noise_sigma: f64, seed: u64) -> Vec<NamedSpec> {
    let mut out = Vec::new();
    for pattern in Pattern::ALL {
        for &k in ks {
            let mut spec = SynthSpec::new(pattern, k, size, size);
            spec.palette_seed = seed + out.len() as u64;
            spec.noise_sigma = noise_sigma;
            out.push(NamedSpec {
                name: format!("{pattern}_k{k:02}"),
                spec,
            });
        }
    }
    out
}
