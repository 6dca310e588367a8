//! Color sample matrices decoded from raster images, and benchmark manifests.

use std::collections::HashSet;
use std::io::Write;
use std::path::{Path, PathBuf};

use image::{ColorType, ImageFormat, ImageReader};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An N×3 matrix of RGB observations, each channel in `[0, 1]`.
///
/// Rows are in row-major pixel order. Values decoded from 8-bit images are
/// exactly `v / 255.0`.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelSamples {
    data: Vec<[f64; 3]>,
    width: usize,
    height: usize,
}

impl PixelSamples {
    /// Builds samples from rows, checking shape and range.
    pub fn new(width: usize, height: usize, data: Vec<[f64; 3]>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidSamples("image has no pixels".into()));
        }
        if data.len() != width * height {
            return Err(Error::InvalidSamples(format!(
                "{} rows for a {width}x{height} image",
                data.len()
            )));
        }
        if let Some(row) = data
            .iter()
            .find(|row| row.iter().any(|v| !(0.0..=1.0).contains(v)))
        {
            return Err(Error::InvalidSamples(format!(
                "value outside [0,1] in row {row:?}"
            )));
        }
        Ok(Self {
            data,
            width,
            height,
        })
    }

    /// Builds samples from packed 8-bit RGB triples.
    pub fn from_rgb8(width: usize, height: usize, rgb: &[u8]) -> Result<Self> {
        if rgb.len() != width * height * 3 {
            return Err(Error::InvalidSamples(format!(
                "{} bytes for a {width}x{height} RGB image",
                rgb.len()
            )));
        }
        let data = rgb
            .chunks_exact(3)
            .map(|px| [unit(px[0]), unit(px[1]), unit(px[2])])
            .collect();
        Self::new(width, height, data)
    }

    /// A single-row image holding the given rows, for point clouds that do
    /// not come from a raster.
    pub fn from_rows(data: Vec<[f64; 3]>) -> Result<Self> {
        let n = data.len();
        Self::new(n, 1, data)
    }

    pub fn rows(&self) -> &[[f64; 3]] {
        &self.data
    }

    pub fn into_rows(self) -> Vec<[f64; 3]> {
        self.data
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Quantizes back to packed 8-bit RGB.
    pub fn to_rgb8(&self) -> Vec<u8> {
        self.data
            .iter()
            .flat_map(|row| row.map(to_byte))
            .collect()
    }

    /// Writes the samples as an 8-bit RGB PNG.
    pub fn write_png(&self, path: &Path) -> Result<()> {
        let bytes = self.encode_png()?;
        std::fs::File::create(path)
            .and_then(|mut f| f.write_all(&bytes))
            .map_err(|e| Error::io(path, e))
    }

    pub fn encode_png(&self) -> Result<Vec<u8>> {
        let img = self.to_image()?;
        let mut out = std::io::Cursor::new(Vec::new());
        img.write_to(&mut out, ImageFormat::Png)
            .map_err(|e| Error::Encode(e.to_string()))?;
        Ok(out.into_inner())
    }

    pub(crate) fn to_image(&self) -> Result<image::RgbImage> {
        image::RgbImage::from_raw(self.width as u32, self.height as u32, self.to_rgb8())
            .ok_or_else(|| Error::Encode("image dimensions overflow".into()))
    }
}

#[inline]
pub(crate) fn unit(v: u8) -> f64 {
    f64::from(v) / 255.0
}

/// Nearest 8-bit level of a unit-range value.
#[inline]
pub(crate) fn to_byte(x: f64) -> u8 {
    (x * 255.0).round().clamp(0.0, 255.0) as u8
}

/// Decodes a PNG or JPEG file into samples. Alpha is discarded.
pub fn decode_image(path: impl AsRef<Path>) -> Result<PixelSamples> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_bytes(&bytes, path)
}

/// Decodes an in-memory PNG or JPEG; `path` is only used in error messages.
pub fn decode_bytes(bytes: &[u8], path: &Path) -> Result<PixelSamples> {
    let reader = ImageReader::new(std::io::Cursor::new(bytes))
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?;
    match reader.format() {
        Some(ImageFormat::Png) | Some(ImageFormat::Jpeg) => {}
        _ => {
            return Err(Error::UnsupportedFormat {
                path: path.to_path_buf(),
            })
        }
    }
    let img = reader.decode().map_err(|e| Error::Decode {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let color = img.color();
    let bits = color.bits_per_pixel() / u16::from(color.channel_count());
    if bits != 8 {
        return Err(Error::UnsupportedBitDepth {
            path: path.to_path_buf(),
            bits,
        });
    }
    let (width, height) = (img.width() as usize, img.height() as usize);
    match color {
        ColorType::Rgb8 => {
            let rgb = img.into_rgb8();
            PixelSamples::from_rgb8(width, height, rgb.as_raw())
        }
        ColorType::Rgba8 => {
            let rgba = img.into_rgba8();
            let rgb: Vec<u8> = rgba
                .as_raw()
                .chunks_exact(4)
                .flat_map(|px| [px[0], px[1], px[2]])
                .collect();
            PixelSamples::from_rgb8(width, height, &rgb)
        }
        other => Err(Error::UnsupportedColorspace {
            path: path.to_path_buf(),
            channels: other.channel_count(),
        }),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub true_count: usize,
}

/// Images with ground-truth color counts.
///
/// Relative entry paths resolve against `root`, the directory holding the
/// manifest file.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BenchmarkManifest {
    pub entries: Vec<ManifestEntry>,
    pub root: PathBuf,
}

impl BenchmarkManifest {
    pub fn new(entries: Vec<ManifestEntry>, root: PathBuf) -> Result<Self> {
        let mut seen = HashSet::new();
        for (i, e) in entries.iter().enumerate() {
            if e.true_count < 1 {
                return Err(Error::Manifest {
                    line: i + 2,
                    message: "true_count must be at least 1".into(),
                });
            }
            if !seen.insert(&e.path) {
                return Err(Error::Manifest {
                    line: i + 2,
                    message: format!("duplicate path {}", e.path.display()),
                });
            }
        }
        Ok(Self { entries, root })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn resolve(&self, entry: &ManifestEntry) -> PathBuf {
        if entry.path.is_absolute() {
            entry.path.clone()
        } else {
            self.root.join(&entry.path)
        }
    }

    /// Serializes as the `path,true_count` CSV.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("path,true_count\n");
        for e in &self.entries {
            out.push_str(&format!("{},{}\n", e.path.display(), e.true_count));
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Reads a `path,true_count` manifest. Entries keep file order.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<BenchmarkManifest> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse_manifest(&text, root)
}

/// Parses manifest CSV text. A body without header row is accepted only if
/// the first row is the header itself.
pub fn parse_manifest(text: &str, root: PathBuf) -> Result<BenchmarkManifest> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::Manifest {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Manifest {
                line: 1,
                message: format!("missing column {name:?}"),
            })
    };
    let (path_col, count_col) = (col("path")?, col("true_count")?);

    let mut entries = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| Error::Manifest {
            line,
            message: e.to_string(),
        })?;
        let field = |c: usize| {
            record.get(c).ok_or_else(|| Error::Manifest {
                line,
                message: "missing field".into(),
            })
        };
        let raw_path = field(path_col)?;
        if raw_path.is_empty() {
            return Err(Error::Manifest {
                line,
                message: "empty path".into(),
            });
        }
        let raw_count = field(count_col)?;
        let true_count: usize = raw_count.parse().map_err(|_| Error::Manifest {
            line,
            message: format!("true_count {raw_count:?} is not a non-negative integer"),
        })?;
        entries.push(ManifestEntry {
            path: PathBuf::from(raw_path),
            true_count,
        });
    }
    BenchmarkManifest::new(entries, root)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn png_bytes(img: image::DynamicImage) -> Vec<u8> {
        let mut out = std::io::Cursor::new(Vec::new());
        img.write_to(&mut out, ImageFormat::Png).unwrap();
        out.into_inner()
    }

    #[test]
    fn decodes_rgb_rows_in_order() {
        let img = image::RgbImage::from_raw(2, 1, vec![255, 0, 0, 0, 0, 255]).unwrap();
        let s = decode_bytes(&png_bytes(img.into()), Path::new("t.png")).unwrap();
        assert_eq!(s.rows(), &[[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]);
        assert_eq!(s.len(), 2);
    }

    #[test]
    fn mid_gray_maps_exactly() {
        let img = image::RgbImage::from_raw(1, 1, vec![128, 128, 128]).unwrap();
        let s = decode_bytes(&png_bytes(img.into()), Path::new("t.png")).unwrap();
        let v = 128.0 / 255.0;
        assert_eq!(s.rows(), &[[v, v, v]]);
    }

    #[test]
    fn alpha_is_dropped() {
        let img = image::RgbaImage::from_raw(1, 1, vec![10, 20, 30, 77]).unwrap();
        let s = decode_bytes(&png_bytes(img.into()), Path::new("t.png")).unwrap();
        assert_eq!(s.rows(), &[[10.0 / 255.0, 20.0 / 255.0, 30.0 / 255.0]]);
    }

    #[test]
    fn rejects_sixteen_bit_and_gray() {
        let img = image::ImageBuffer::<image::Rgb<u16>, _>::from_raw(1, 1, vec![1u16, 2, 3]).unwrap();
        let err = decode_bytes(&png_bytes(image::DynamicImage::ImageRgb16(img)), Path::new("a"))
            .unwrap_err();
        assert!(matches!(err, Error::UnsupportedBitDepth { bits: 16, .. }), "{err}");

        let gray = image::GrayImage::from_raw(1, 1, vec![9]).unwrap();
        let err = decode_bytes(&png_bytes(gray.into()), Path::new("a")).unwrap_err();
        assert!(matches!(err, Error::UnsupportedColorspace { channels: 1, .. }), "{err}");
    }

    #[test]
    fn rejects_non_image_and_missing_file() {
        let err = decode_bytes(b"not an image at all", Path::new("x")).unwrap_err();
        assert!(matches!(err, Error::UnsupportedFormat { .. }), "{err}");
        let err = decode_image("/nonexistent/definitely.png").unwrap_err();
        assert!(matches!(err, Error::Io { .. }), "{err}");
    }

    #[test]
    fn new_validates_range_and_shape() {
        assert!(PixelSamples::new(1, 1, vec![[0.0, 1.5, 0.0]]).is_err());
        assert!(PixelSamples::new(2, 1, vec![[0.0; 3]]).is_err());
        assert!(PixelSamples::new(0, 0, vec![]).is_err());
    }

    #[test]
    fn manifest_parses_in_file_order() {
        let m = parse_manifest("path,true_count\na.png,4\nb.png,1", PathBuf::new()).unwrap();
        assert_eq!(
            m.entries,
            vec![
                ManifestEntry { path: "a.png".into(), true_count: 4 },
                ManifestEntry { path: "b.png".into(), true_count: 1 },
            ]
        );
    }

    #[test]
    fn manifest_accepts_crlf_and_header_only() {
        let m = parse_manifest("path,true_count\r\na.png,2\r\n", PathBuf::new()).unwrap();
        assert_eq!(m.len(), 1);
        let m = parse_manifest("path,true_count\n", PathBuf::new()).unwrap();
        assert!(m.is_empty());
    }

    #[test]
    fn manifest_errors() {
        let zero = parse_manifest("path,true_count\na.png,0\n", PathBuf::new());
        assert!(matches!(zero, Err(Error::Manifest { line: 2, .. })));
        let nonint = parse_manifest("path,true_count\na.png,x\n", PathBuf::new());
        assert!(matches!(nonint, Err(Error::Manifest { .. })));
        let missing = parse_manifest("path,count\na.png,1\n", PathBuf::new());
        assert!(matches!(missing, Err(Error::Manifest { line: 1, .. })));
        let dup = parse_manifest("path,true_count\na.png,1\na.png,2\n", PathBuf::new());
        assert!(matches!(dup, Err(Error::Manifest { line: 3, .. })));
    }

    #[test]
    fn resolves_relative_to_root() {
        let m = parse_manifest("path,true_count\na.png,1\n/abs/b.png,1\n", "/data".into()).unwrap();
        assert_eq!(m.resolve(&m.entries[0]), PathBuf::from("/data/a.png"));
        assert_eq!(m.resolve(&m.entries[1]), PathBuf::from("/abs/b.png"));
    }
}
