//! Reference CPU rasterizer.
//!
//! Programs are executed directly against a stack of pixel buffers, one per
//! open layer, sampling every shape at pixel centers. There is no
//! anti-aliasing and no quantization, so each pixel is exactly the
//! denotation of the program's final layer at `(i + 0.5, j + 0.5)`.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::color::{BlendMode, Color, Point};
use crate::command::{check_balanced, BalanceError, Command, Program};
use crate::layer::Paint;
use crate::shape::{shape_intersect, Bounds, Shape};

/// Default AE fuzz: one percent of the channel range.
pub const DEFAULT_FUZZ: f64 = 0.01;

#[derive(Debug, Error)]
pub enum RasterError {
    #[error("image dimensions must be positive, got {0}x{1}")]
    InvalidDimensions(usize, usize),
    #[error("image dimensions differ: {0:?} vs {1:?}")]
    DimensionMismatch((usize, usize), (usize, usize)),
    #[error(transparent)]
    Unbalanced(#[from] BalanceError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed PPM: {0}")]
    Ppm(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RasterImage {
    width: usize,
    height: usize,
    pixels: Vec<Color>,
}

impl RasterImage {
    pub fn new(width: usize, height: usize) -> Result<Self, RasterError> {
        if width == 0 || height == 0 {
            return Err(RasterError::InvalidDimensions(width, height));
        }
        Ok(RasterImage {
            width,
            height,
            pixels: vec![Color::TRANSPARENT; width * height],
        })
    }

    pub fn from_pixels(width: usize, height: usize, pixels: Vec<Color>) -> Result<Self, RasterError> {
        if width == 0 || height == 0 || pixels.len() != width * height {
            return Err(RasterError::InvalidDimensions(width, height));
        }
        Ok(RasterImage { width, height, pixels })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[Color] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> Color {
        self.pixels[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, c: Color) {
        self.pixels[y * self.width + x] = c;
    }

    /// Opaque RGB in `[0, 1]` after compositing over white.
    pub fn over_white(c: Color) -> [f64; 3] {
        let k = 1.0 - c.a;
        [c.r + k, c.g + k, c.b + k]
    }

    /// 8-bit RGB triples composited over white, row-major.
    pub fn to_rgb8(&self) -> Vec<u8> {
        self.pixels
            .iter()
            .flat_map(|&c| Self::over_white(c).map(quantize))
            .collect()
    }

    /// 8-bit straight-alpha RGBA, the layout HTML canvases expect.
    pub fn to_rgba8(&self) -> Vec<u8> {
        self.pixels
            .iter()
            .flat_map(|&c| {
                let (a, r, g, b) = c.to_unpremul();
                [quantize(r), quantize(g), quantize(b), quantize(a)]
            })
            .collect()
    }

    /// Binary PPM (P6), composited over white.
    pub fn encode_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend(self.to_rgb8());
        out
    }

    pub fn write_ppm(&self, path: impl AsRef<Path>) -> Result<(), RasterError> {
        let path = path.as_ref();
        let io = |source| RasterError::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut f = std::fs::File::create(path).map_err(io)?;
        f.write_all(&self.encode_ppm()).map_err(io)
    }

    /// Decodes a P6 file with maxval 255 into opaque pixels.
    pub fn decode_ppm(bytes: &[u8]) -> Result<Self, RasterError> {
        let mut pos = 0;
        let mut fields = Vec::new();
        while fields.len() < 4 {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(RasterError::Ppm("truncated header".into()));
            }
            fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
        }
        // Exactly one whitespace byte separates the header from the raster.
        pos += 1;
        if fields[0] != "P6" {
            return Err(RasterError::Ppm(format!("unsupported magic {}", fields[0])));
        }
        let num = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| RasterError::Ppm(format!("bad header field {s}")))
        };
        let (w, h, max) = (num(&fields[1])?, num(&fields[2])?, num(&fields[3])?);
        if max != 255 {
            return Err(RasterError::Ppm(format!("unsupported maxval {max}")));
        }
        let data = bytes.get(pos..).unwrap_or_default();
        if data.len() < w * h * 3 {
            return Err(RasterError::Ppm("truncated raster".into()));
        }
        let pixels = data[..w * h * 3]
            .chunks_exact(3)
            .map(|px| {
                let v = |b: u8| b as f64 / 255.0;
                Color::premul(1.0, v(px[0]), v(px[1]), v(px[2]))
            })
            .collect();
        RasterImage::from_pixels(w, h, pixels)
    }
}

fn quantize(v: f64) -> u8 {
    (255.0 * v.clamp(0.0, 1.0)).round() as u8
}

/// `true` when `blend(dst, filter(Transparent)) == dst` bit for bit, so a
/// draw leaves pixels outside its shape untouched.
fn preserves_outside(paint: &Paint) -> bool {
    matches!(paint.blend, BlendMode::SrcOver | BlendMode::Multiply)
}

struct LayerBuffer {
    pixels: Vec<Color>,
    paint: Option<Paint>,
}

struct Canvas {
    width: usize,
    height: usize,
    layers: Vec<LayerBuffer>,
    clips: Vec<Shape>,
    // `true` for SaveLayer brackets, `false` for Save.
    brackets: Vec<bool>,
}

impl Canvas {
    fn new(width: usize, height: usize) -> Self {
        Canvas {
            width,
            height,
            layers: vec![LayerBuffer {
                pixels: vec![Color::TRANSPARENT; width * height],
                paint: None,
            }],
            clips: vec![Shape::Full],
            brackets: Vec::new(),
        }
    }

    fn execute(&mut self, cmd: &Command) {
        match cmd {
            Command::Draw { shape, paint } => self.draw(shape, paint),
            Command::Clip { shape } => {
                let top = self.clips.last_mut().unwrap();
                *top = shape_intersect(top, shape);
            }
            Command::Save => {
                self.clips.push(self.clips.last().unwrap().clone());
                self.brackets.push(false);
            }
            Command::SaveLayer { paint } => {
                self.clips.push(self.clips.last().unwrap().clone());
                self.brackets.push(true);
                self.layers.push(LayerBuffer {
                    pixels: vec![Color::TRANSPARENT; self.width * self.height],
                    paint: Some(paint.clone()),
                });
            }
            Command::Restore => {
                self.clips.pop();
                if self.brackets.pop() == Some(true) {
                    let top = self.layers.pop().unwrap();
                    let paint = top.paint.expect("SaveLayer buffers carry their paint");
                    let bottom = &mut self.layers.last_mut().unwrap().pixels;
                    composite(bottom, &top.pixels, &paint);
                }
            }
            Command::NoOp => {}
        }
    }

    fn draw(&mut self, shape: &Shape, paint: &Paint) {
        let clip = self.clips.last().unwrap().clone();
        let (width, height) = (self.width, self.height);
        let pixels = &mut self.layers.last_mut().unwrap().pixels;
        let bounds = shape.bounds().intersect(clip.bounds());
        let (rows, cols) = if preserves_outside(paint) {
            match pixel_span(bounds, width, height) {
                Some(span) => span,
                None => return,
            }
        } else {
            ((0, height), (0, width))
        };
        let shade = |y: usize, row: &mut [Color]| {
            for (x, px) in row.iter_mut().enumerate().take(cols.1).skip(cols.0) {
                let pt = Point::new(x as f64 + 0.5, y as f64 + 0.5);
                let src = if shape.contains(pt) && clip.contains(pt) {
                    paint.fill.eval(pt)
                } else {
                    Color::TRANSPARENT
                };
                *px = paint.blend.eval(*px, paint.filter.eval(src));
            }
        };
        let band = &mut pixels[rows.0 * width..rows.1 * width];
        for_each_row(band, width, rows.0, shade);
    }
}

fn composite(bottom: &mut [Color], top: &[Color], paint: &Paint) {
    let skip_clear = preserves_outside(paint);
    for (dst, &src) in bottom.iter_mut().zip(top) {
        if skip_clear && src == Color::TRANSPARENT {
            continue;
        }
        *dst = paint.blend.eval(*dst, paint.filter.eval(src));
    }
}

#[cfg(feature = "parallel")]
fn for_each_row(band: &mut [Color], width: usize, first_row: usize, f: impl Fn(usize, &mut [Color]) + Sync) {
    use rayon::prelude::*;
    band.par_chunks_mut(width)
        .enumerate()
        .for_each(|(i, row)| f(first_row + i, row));
}

#[cfg(not(feature = "parallel"))]
fn for_each_row(band: &mut [Color], width: usize, first_row: usize, f: impl Fn(usize, &mut [Color])) {
    for (i, row) in band.chunks_mut(width).enumerate() {
        f(first_row + i, row);
    }
}

/// Row and column ranges whose pixel centers may fall inside `bounds`.
fn pixel_span(bounds: Bounds, width: usize, height: usize) -> Option<((usize, usize), (usize, usize))> {
    let b = match bounds {
        Bounds::Unbounded => return Some(((0, height), (0, width))),
        Bounds::Box(b) => b,
    };
    let range = |lo: f64, hi: f64, n: usize| {
        let start = (lo - 0.5).floor().max(0.0);
        let end = ((hi - 0.5).ceil() + 1.0).min(n as f64);
        (start < end).then_some((start as usize, end as usize))
    };
    if b.left > b.right || b.top > b.bottom {
        return None;
    }
    Some((range(b.top, b.bottom, height)?, range(b.left, b.right, width)?))
}

/// Rasterizes a balanced program at pixel centers.
pub fn rasterize(p: &Program, width: usize, height: usize) -> Result<RasterImage, RasterError> {
    check_balanced(p)?;
    if width == 0 || height == 0 {
        return Err(RasterError::InvalidDimensions(width, height));
    }
    let mut canvas = Canvas::new(width, height);
    for cmd in &p.records {
        canvas.execute(cmd);
    }
    let base = canvas.layers.pop().expect("base layer");
    RasterImage::from_pixels(width, height, base.pixels)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiffReport {
    pub differing_pixels: usize,
    /// Largest premultiplied ARGB channel difference over all pixels.
    pub max_channel_delta: f64,
    pub total_pixels: usize,
    /// First differing pixel in row-major order, as `(x, y)`.
    pub first_difference: Option<(usize, usize)>,
}

impl DiffReport {
    pub fn is_identical(&self) -> bool {
        self.differing_pixels == 0
    }
}

/// Counts pixels where any channel, composited over white, differs by more
/// than `fuzz` of the full range.
pub fn image_diff_ae(a: &RasterImage, b: &RasterImage, fuzz: f64) -> Result<DiffReport, RasterError> {
    if (a.width, a.height) != (b.width, b.height) {
        return Err(RasterError::DimensionMismatch((a.width, a.height), (b.width, b.height)));
    }
    let mut report = DiffReport {
        differing_pixels: 0,
        max_channel_delta: 0.0,
        total_pixels: a.pixels.len(),
        first_difference: None,
    };
    for (i, (x, y)) in a.pixels.iter().zip(&b.pixels).enumerate() {
        let raw = x.max_delta(y);
        if raw > report.max_channel_delta || raw.is_nan() {
            report.max_channel_delta = raw;
        }
        let (wx, wy) = (RasterImage::over_white(*x), RasterImage::over_white(*y));
        if wx.iter().zip(wy).any(|(p, q)| (p - q).abs() > fuzz) {
            report.differing_pixels += 1;
            report.first_difference.get_or_insert((i % a.width, i / a.width));
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::color::Fill;
    use crate::layer::Paint;

    const RED: Color = Color::premul(1.0, 1.0, 0.0, 0.0);
    const BLUE: Color = Color::premul(1.0, 0.0, 0.0, 1.0);

    fn draw(s: Shape, c: Color, blend: BlendMode) -> Command {
        Command::draw(s, Paint::solid(c, blend))
    }

    #[test]
    fn empty_program_is_transparent() {
        let img = rasterize(&Program::default(), 4, 4).unwrap();
        assert!(img.pixels().iter().all(|&c| c == Color::TRANSPARENT));
    }

    #[test]
    fn rect_covers_pixel_centers() {
        let p: Program = vec![draw(Shape::rect(0.0, 0.0, 2.0, 2.0), RED, BlendMode::SrcOver)].into();
        let img = rasterize(&p, 4, 4).unwrap();
        for y in 0..4 {
            for x in 0..4 {
                let expected = if x < 2 && y < 2 { RED } else { Color::TRANSPARENT };
                assert_eq!(img.get(x, y), expected, "pixel ({x}, {y})");
            }
        }
    }

    #[test]
    fn multiply_overlap_is_black() {
        let p: Program = vec![
            draw(Shape::rect(0.0, 0.0, 6.0, 6.0), RED, BlendMode::SrcOver),
            draw(Shape::rect(3.0, 3.0, 8.0, 8.0), BLUE, BlendMode::Multiply),
        ]
        .into();
        let img = rasterize(&p, 8, 8).unwrap();
        assert_eq!(img.get(4, 4), Color::BLACK);
        assert_eq!(img.get(1, 1), RED);
        assert_eq!(img.get(7, 7), BLUE);
        assert_eq!(img.get(7, 0), Color::TRANSPARENT);
    }

    #[test]
    fn dstin_draw_clears_outside() {
        let p: Program = vec![
            draw(Shape::Full, RED, BlendMode::SrcOver),
            draw(Shape::rect(0.0, 0.0, 1.0, 1.0), BLUE, BlendMode::DstIn),
        ]
        .into();
        let img = rasterize(&p, 2, 2).unwrap();
        assert_eq!(img.get(0, 0), RED);
        assert_eq!(img.get(1, 1), Color::TRANSPARENT);
    }

    #[test]
    fn pixel_span_is_conservative() {
        use crate::shape::BoundsRect;
        let span = pixel_span(Bounds::Box(BoundsRect::new(0.5, 0.5, 1.5, 1.5)), 4, 4);
        assert_eq!(span, Some(((0, 2), (0, 2))));
        assert_eq!(
            pixel_span(Bounds::Box(BoundsRect::new(9.0, 9.0, 12.0, 12.0)), 4, 4),
            None
        );
    }

    #[test]
    fn ppm_bytes() {
        let one = |c| RasterImage::from_pixels(1, 1, vec![c]).unwrap().encode_ppm();
        let header = b"P6\n1 1\n255\n".to_vec();
        assert_eq!(one(Color::TRANSPARENT), [header.clone(), vec![255, 255, 255]].concat());
        assert_eq!(one(RED), [header.clone(), vec![255, 0, 0]].concat());
        assert_eq!(
            one(Color::premul(0.5, 0.5, 0.0, 0.0)),
            [header, vec![255, 128, 128]].concat()
        );
    }

    #[test]
    fn ppm_decodes_what_it_encodes() {
        let img = RasterImage::from_pixels(2, 1, vec![RED, BLUE]).unwrap();
        let back = RasterImage::decode_ppm(&img.encode_ppm()).unwrap();
        assert_eq!(back, img);
        assert!(RasterImage::decode_ppm(b"P3\n1 1\n255\n").is_err());
    }

    #[test]
    fn diff_threshold_semantics() {
        let a = RasterImage::from_pixels(2, 1, vec![Color::WHITE, RED]).unwrap();
        assert_eq!(image_diff_ae(&a, &a, 0.01).unwrap().differing_pixels, 0);
        let b = RasterImage::from_pixels(2, 1, vec![Color::premul(1.0, 1.0, 0.98, 1.0), RED]).unwrap();
        let tight = image_diff_ae(&a, &b, 0.01).unwrap();
        assert_eq!(tight.differing_pixels, 1);
        assert_eq!(tight.first_difference, Some((0, 0)));
        assert!((tight.max_channel_delta - 0.02).abs() < 1e-12);
        assert_eq!(image_diff_ae(&a, &b, 0.05).unwrap().differing_pixels, 0);
        let c = RasterImage::new(1, 1).unwrap();
        assert!(matches!(
            image_diff_ae(&a, &c, 0.01),
            Err(RasterError::DimensionMismatch(..))
        ));
    }

    #[test]
    fn gradient_fill_is_sampled_at_centers() {
        use crate::color::GradientStop;
        let fill = Fill::LinearGradient {
            p0: Point::new(0.0, 0.0),
            p1: Point::new(4.0, 0.0),
            stops: vec![
                GradientStop::new(0.0, Color::BLACK),
                GradientStop::new(1.0, Color::WHITE),
            ]
            .into(),
        };
        let p: Program = vec![Command::draw(
            Shape::Full,
            Paint::new(fill.clone(), crate::color::FilterKind::Id, BlendMode::SrcOver),
        )]
        .into();
        let img = rasterize(&p, 4, 1).unwrap();
        for x in 0..4 {
            assert_eq!(img.get(x, 0), fill.eval(Point::new(x as f64 + 0.5, 0.5)));
        }
    }
}
