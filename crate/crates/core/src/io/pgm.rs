//! Grayscale NetPBM images (`P2` ASCII and `P5` binary).

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridImage {
    pub width: usize,
    pub height: usize,
    pub max_value: u16,
    /// Row-major intensities.
    pub pixels: Vec<u16>,
}

impl GridImage {
    pub fn new(width: usize, height: usize, max_value: u16, pixels: Vec<u16>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Image("image has no pixels".into()));
        }
        if max_value == 0 {
            return Err(Error::Image("maximum value must be positive".into()));
        }
        if pixels.len() != width * height {
            return Err(Error::Image(format!(
                "{} pixels for a {width}x{height} image",
                pixels.len()
            )));
        }
        if let Some(v) = pixels.iter().find(|&&v| v > max_value) {
            return Err(Error::Image(format!("pixel value {v} exceeds maximum {max_value}")));
        }
        Ok(GridImage {
            width,
            height,
            max_value,
            pixels,
        })
    }

    pub fn get(&self, row: usize, col: usize) -> u16 {
        self.pixels[row * self.width + col]
    }
}

/// Header tokens and the offset just past the single whitespace byte that
/// ends the header.
fn header(bytes: &[u8]) -> Result<(Vec<String>, usize)> {
    let mut tokens = Vec::new();
    let mut pos = 0;
    while tokens.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        if pos >= bytes.len() {
            return Err(Error::Image("truncated header".into()));
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() && bytes[pos] != b'#' {
            pos += 1;
        }
        tokens.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    if pos >= bytes.len() && tokens[0] == "P5" {
        return Err(Error::Image("missing pixel data".into()));
    }
    Ok((tokens, pos + 1))
}

fn parse_dim(token: &str, what: &str) -> Result<usize> {
    token
        .parse::<usize>()
        .map_err(|_| Error::Image(format!("invalid {what} {token:?}")))
}

pub fn parse_pgm(bytes: &[u8]) -> Result<GridImage> {
    let (tokens, data_start) = header(bytes)?;
    let magic = tokens[0].as_str();
    if magic != "P2" && magic != "P5" {
        return Err(Error::Image(format!("unsupported magic number {magic:?}")));
    }
    let width = parse_dim(&tokens[1], "width")?;
    let height = parse_dim(&tokens[2], "height")?;
    let max_value = tokens[3]
        .parse::<u16>()
        .ok()
        .filter(|&v| v > 0)
        .ok_or_else(|| Error::Image(format!("invalid maximum value {:?}", tokens[3])))?;
    let count = width * height;
    let pixels = if magic == "P2" {
        let text = String::from_utf8_lossy(bytes.get(data_start..).unwrap_or(&[]));
        let values: Vec<u16> = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or(""))
            .flat_map(str::split_whitespace)
            .map(|t| t.parse::<u16>().map_err(|_| Error::Image(format!("invalid pixel value {t:?}"))))
            .collect::<Result<_>>()?;
        if values.len() != count {
            return Err(Error::Image(format!("expected {count} pixels, found {}", values.len())));
        }
        values
    } else {
        let data = &bytes[data_start..];
        let wide = max_value > 255;
        let needed = if wide { 2 * count } else { count };
        if data.len() < needed {
            return Err(Error::Image(format!(
                "expected {needed} bytes of pixel data, found {}",
                data.len()
            )));
        }
        if wide {
            data[..needed]
                .chunks_exact(2)
                .map(|c| u16::from_be_bytes([c[0], c[1]]))
                .collect()
        } else {
            data[..needed].iter().map(|&b| u16::from(b)).collect()
        }
    };
    GridImage::new(width, height, max_value, pixels)
}

/// `P2` with one image row per line.
pub fn write_pgm_ascii(img: &GridImage) -> String {
    let mut out = format!("P2\n{} {}\n{}\n", img.width, img.height, img.max_value);
    for row in img.pixels.chunks(img.width) {
        let line: Vec<String> = row.iter().map(u16::to_string).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

pub fn write_pgm_binary(img: &GridImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n{}\n", img.width, img.height, img.max_value).into_bytes();
    if img.max_value > 255 {
        for v in &img.pixels {
            out.extend_from_slice(&v.to_be_bytes());
        }
    } else {
        out.extend(img.pixels.iter().map(|&v| v as u8));
    }
    out
}
