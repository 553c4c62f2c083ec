//! Procedural screen content for four layout families plus the 8:1:1 corpus
//! split. Shapes are rasterized with exact area coverage, so edges are
//! anti-aliased the way a display would render them.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{Field2D, Rng};
use crate::optics::ScreenImage;

pub const MIN_SIZE: usize = 32;
pub const MAX_SIZE: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Websight,
    Password,
    Chart,
    Screen,
}

impl Category {
    pub const ALL: [Category; 4] = [
        Category::Websight,
        Category::Password,
        Category::Chart,
        Category::Screen,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Category::Websight => "websight",
            Category::Password => "password",
            Category::Chart => "chart",
            Category::Screen => "screen",
        }
    }

    fn index(self) -> u64 {
        self as u64
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Category {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Category::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown category {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SceneSpec {
    pub category: Category,
    pub height: usize,
    pub width: usize,
    pub seed: u64,
}

impl SceneSpec {
    pub fn square(category: Category, size: usize, seed: u64) -> Self {
        SceneSpec {
            category,
            height: size,
            width: size,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("height", self.height), ("width", self.width)] {
            if !v.is_power_of_two() || !(MIN_SIZE..=MAX_SIZE).contains(&v) {
                return Err(Error::config(
                    name,
                    format!("{v} is not a power of two in [{MIN_SIZE}, {MAX_SIZE}]"),
                ));
            }
        }
        Ok(())
    }
}

/// Axis-aligned rectangle in continuous pixel coordinates; pixel `(r, c)`
/// covers `[r, r+1) × [c, c+1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub top: f64,
    pub left: f64,
    pub height: f64,
    pub width: f64,
}

impl Rect {
    pub fn new(top: f64, left: f64, height: f64, width: f64) -> Self {
        Rect {
            top,
            left,
            height,
            width,
        }
    }

    fn bottom(&self) -> f64 {
        self.top + self.height
    }

    fn right(&self) -> f64 {
        self.left + self.width
    }

    /// Fraction of pixel `(r, c)` covered by the rectangle.
    pub fn coverage(&self, r: usize, c: usize) -> f64 {
        let dy = (self.bottom().min(r as f64 + 1.0) - self.top.max(r as f64)).max(0.0);
        let dx = (self.right().min(c as f64 + 1.0) - self.left.max(c as f64)).max(0.0);
        dy * dx
    }

    pub fn mask(&self, height: usize, width: usize) -> Field2D {
        Field2D::from_fn(height, width, |r, c| self.coverage(r, c))
    }

    /// Mean of `field` over the pixels lying entirely inside the rectangle.
    pub fn interior_mean(&self, field: &Field2D) -> Option<f64> {
        let (h, w) = field.dims();
        let r0 = self.top.max(0.0).ceil() as usize;
        let c0 = self.left.max(0.0).ceil() as usize;
        let r1 = (self.bottom().floor().max(0.0) as usize).min(h);
        let c1 = (self.right().floor().max(0.0) as usize).min(w);
        if r1 <= r0 || c1 <= c0 {
            return None;
        }
        let mut acc = 0.0;
        for r in r0..r1 {
            acc += field.row(r)[c0..c1].iter().sum::<f64>();
        }
        Some(acc / ((r1 - r0) * (c1 - c0)) as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionKind {
    Header,
    TextLine,
    ImageBlock,
    Display,
    Key,
    HighlightedKey,
    Axis,
    Bar,
    Plot,
    Window,
    TitleBar,
    Taskbar,
    Icon,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub kind: RegionKind,
    pub rect: Rect,
}

/// A generated screen plus the structure it was drawn from.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub spec: SceneSpec,
    pub image: ScreenImage,
    pub regions: Vec<Region>,
}

impl Scene {
    pub fn regions_of(&self, kind: RegionKind) -> impl Iterator<Item = &Region> {
        self.regions.iter().filter(move |r| r.kind == kind)
    }
}

struct Canvas {
    field: Field2D,
    regions: Vec<Region>,
}

impl Canvas {
    fn new(h: usize, w: usize, background: f64) -> Self {
        Canvas {
            field: Field2D::filled(h, w, background),
            regions: Vec::new(),
        }
    }

    fn h(&self) -> f64 {
        self.field.height() as f64
    }

    fn w(&self) -> f64 {
        self.field.width() as f64
    }

    /// Composites `value` over the rectangle with per-pixel coverage as alpha.
    fn fill(&mut self, kind: Option<RegionKind>, rect: Rect, value: f64) {
        self.shade(rect, |_, _| value);
        if let Some(kind) = kind {
            self.regions.push(Region { kind, rect });
        }
    }

    fn shade(&mut self, rect: Rect, value: impl Fn(f64, f64) -> f64) {
        let (h, w) = self.field.dims();
        let r0 = rect.top.max(0.0).floor() as usize;
        let c0 = rect.left.max(0.0).floor() as usize;
        let r1 = (rect.bottom().ceil().max(0.0) as usize).min(h);
        let c1 = (rect.right().ceil().max(0.0) as usize).min(w);
        for r in r0..r1 {
            for c in c0..c1 {
                let a = rect.coverage(r, c);
                if a > 0.0 {
                    let u = ((r as f64 + 0.5 - rect.top) / rect.height).clamp(0.0, 1.0);
                    let v = ((c as f64 + 0.5 - rect.left) / rect.width).clamp(0.0, 1.0);
                    let old = self.field.get(r, c);
                    self.field.set(r, c, (1.0 - a) * old + a * value(u, v));
                }
            }
        }
    }
}

/// Renders the scene for `spec`; deterministic in `(category, size, seed)`.
pub fn generate(spec: &SceneSpec) -> Result<Scene> {
    spec.validate()?;
    let mut rng = Rng::new(spec.seed).substream(spec.category.index());
    let canvas = match spec.category {
        Category::Websight => websight(spec, &mut rng),
        Category::Password => password(spec, &mut rng),
        Category::Chart => chart(spec, &mut rng),
        Category::Screen => desktop(spec, &mut rng),
    };
    Ok(Scene {
        spec: *spec,
        image: ScreenImage::new(canvas.field)?,
        regions: canvas.regions,
    })
}

fn websight(spec: &SceneSpec, rng: &mut Rng) -> Canvas {
    let mut cv = Canvas::new(spec.height, spec.width, rng.uniform(0.75, 0.95));
    let (h, w) = (cv.h(), cv.w());
    let header_h = h * rng.uniform(0.08, 0.15);
    cv.fill(
        Some(RegionKind::Header),
        Rect::new(0.0, 0.0, header_h, w),
        rng.uniform(0.15, 0.4),
    );
    let margin = w * rng.uniform(0.05, 0.1);
    let line_h = (h * 0.03).max(1.0);
    let text = rng.uniform(0.15, 0.4);
    // Left column of text, right column of image blocks.
    let split = w * rng.uniform(0.5, 0.65);
    let mut y = header_h + line_h * 2.0;
    while y + line_h < h - line_h {
        let len = (split - margin) * rng.uniform(0.5, 1.0);
        cv.fill(Some(RegionKind::TextLine), Rect::new(y, margin, line_h, len), text);
        y += line_h * rng.uniform(2.0, 3.5);
        if rng.uniform(0.0, 1.0) < 0.15 {
            y += line_h * 2.0;
        }
    }
    let blocks = rng.range(1, 4);
    let slot = (h - header_h - 2.0 * line_h) / blocks as f64;
    for i in 0..blocks {
        let top = header_h + line_h + slot * i as f64 + slot * 0.1;
        let rect = Rect::new(top, split + margin * 0.5, slot * 0.8, w - split - margin * 1.5);
        let (a, b) = (rng.uniform(0.25, 0.75), rng.uniform(0.25, 0.75));
        cv.shade(rect, |u, v| a + (b - a) * (0.5 * (u + v)));
        cv.regions.push(Region {
            kind: RegionKind::ImageBlock,
            rect,
        });
    }
    cv
}

fn password(spec: &SceneSpec, rng: &mut Rng) -> Canvas {
    let mut cv = Canvas::new(spec.height, spec.width, rng.uniform(0.1, 0.3));
    let (h, w) = (cv.h(), cv.w());
    let pad_w = w * rng.uniform(0.6, 0.8);
    let left = (w - pad_w) * rng.uniform(0.3, 0.7);
    let display_h = h * 0.14;
    let top = h * 0.06;
    cv.fill(
        Some(RegionKind::Display),
        Rect::new(top, left, display_h, pad_w),
        rng.uniform(0.5, 0.7),
    );
    let dots = rng.range(0, 7);
    for i in 0..dots {
        let s = display_h * 0.3;
        let rect = Rect::new(top + display_h * 0.35, left + s + i as f64 * 2.0 * s, s, s);
        cv.fill(None, rect, 0.1);
    }
    let grid_top = top + display_h + h * 0.05;
    let cell_h = (h - grid_top - h * 0.04) / 4.0;
    let cell_w = pad_w / 3.0;
    let key = rng.uniform(0.3, 0.45);
    let highlight = rng.range(0, 12);
    let bright = (key * rng.uniform(1.8, 2.2)).min(1.0);
    for i in 0..12 {
        let (r, c) = ((i / 3) as f64, (i % 3) as f64);
        let rect = Rect::new(
            grid_top + r * cell_h + cell_h * 0.1,
            left + c * cell_w + cell_w * 0.1,
            cell_h * 0.8,
            cell_w * 0.8,
        );
        let (kind, value) = if i == highlight {
            (RegionKind::HighlightedKey, bright)
        } else {
            (RegionKind::Key, key)
        };
        cv.fill(Some(kind), rect, value);
    }
    cv
}

fn chart(spec: &SceneSpec, rng: &mut Rng) -> Canvas {
    let mut cv = Canvas::new(spec.height, spec.width, rng.uniform(0.72, 0.88));
    let (h, w) = (cv.h(), cv.w());
    let (x0, y0) = (w * 0.12, h * 0.88);
    let (x1, y1) = (w * 0.95, h * 0.08);
    let stroke = (h / 64.0).max(1.0);
    let ink = rng.uniform(0.05, 0.25);
    cv.fill(Some(RegionKind::Axis), Rect::new(y1, x0 - stroke, y0 - y1, stroke), ink);
    cv.fill(
        Some(RegionKind::Axis),
        Rect::new(y0, x0 - stroke, stroke, x1 - x0 + stroke),
        ink,
    );
    let n = rng.range(4, 9);
    let slot = (x1 - x0) / n as f64;
    let values: Vec<f64> = (0..n).map(|_| rng.uniform(0.15, 1.0)).collect();
    if rng.uniform(0.0, 1.0) < 0.6 {
        let fill = rng.uniform(0.2, 0.55);
        for (i, v) in values.iter().enumerate() {
            let bh = (y0 - y1) * v;
            let rect = Rect::new(y0 - bh, x0 + slot * (i as f64 + 0.15), bh, slot * 0.7);
            cv.fill(Some(RegionKind::Bar), rect, fill);
        }
    } else {
        let line = rng.uniform(0.1, 0.4);
        let ys: Vec<f64> = values.iter().map(|v| y0 - (y0 - y1) * v).collect();
        let xs: Vec<f64> = (0..n).map(|i| x0 + slot * (i as f64 + 0.5)).collect();
        for r in 0..spec.height {
            for c in 0..spec.width {
                let (py, px) = (r as f64 + 0.5, c as f64 + 0.5);
                let d = xs
                    .windows(2)
                    .zip(ys.windows(2))
                    .map(|(x, y)| segment_distance(px, py, x[0], y[0], x[1], y[1]))
                    .fold(f64::INFINITY, f64::min);
                let a = (1.0 + stroke * 0.75 - d).clamp(0.0, 1.0);
                if a > 0.0 {
                    let old = cv.field.get(r, c);
                    cv.field.set(r, c, (1.0 - a) * old + a * line);
                }
            }
        }
        cv.regions.push(Region {
            kind: RegionKind::Plot,
            rect: Rect::new(y1, x0, y0 - y1, x1 - x0),
        });
    }
    cv
}

fn segment_distance(px: f64, py: f64, ax: f64, ay: f64, bx: f64, by: f64) -> f64 {
    let (dx, dy) = (bx - ax, by - ay);
    let t = (((px - ax) * dx + (py - ay) * dy) / (dx * dx + dy * dy)).clamp(0.0, 1.0);
    (px - ax - t * dx).hypot(py - ay - t * dy)
}

fn desktop(spec: &SceneSpec, rng: &mut Rng) -> Canvas {
    let (a, b) = (rng.uniform(0.2, 0.5), rng.uniform(0.2, 0.5));
    let mut cv = Canvas::new(spec.height, spec.width, 0.0);
    let (h, w) = (cv.h(), cv.w());
    cv.shade(Rect::new(0.0, 0.0, h, w), |u, v| a + (b - a) * (0.7 * u + 0.3 * v));
    let icon = h * 0.08;
    let icons = rng.range(2, 6);
    let icon_value = rng.uniform(0.6, 0.9);
    for i in 0..icons {
        let rect = Rect::new(icon * 0.5 + i as f64 * icon * 1.6, w * 0.03, icon, icon);
        cv.fill(Some(RegionKind::Icon), rect, icon_value);
    }
    let bar_h = h * 0.08;
    let windows = rng.range(2, 5);
    for _ in 0..windows {
        let ww = w * rng.uniform(0.35, 0.65);
        let wh = h * rng.uniform(0.3, 0.55);
        let top = rng.uniform(0.02 * h, h - bar_h - wh);
        let left = rng.uniform(0.12 * w, w - ww);
        let body = Rect::new(top, left, wh, ww);
        cv.fill(Some(RegionKind::Window), body, rng.uniform(0.7, 0.95));
        let title = Rect::new(top, left, (wh * 0.12).max(1.5), ww);
        cv.fill(Some(RegionKind::TitleBar), title, rng.uniform(0.25, 0.5));
    }
    cv.fill(
        Some(RegionKind::Taskbar),
        Rect::new(h - bar_h, 0.0, bar_h, w),
        rng.uniform(0.05, 0.2),
    );
    cv
}

/// Index lists of a seeded 8:1:1 split.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusSplit {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Split sizes: `train = round(0.8n)`, `val = round(0.1n)`, `test` the rest.
pub fn split_sizes(n: usize) -> (usize, usize, usize) {
    let train = (0.8 * n as f64).round() as usize;
    let val = (0.1 * n as f64).round() as usize;
    (train, val, n - train - val)
}

pub fn make_split(n: usize, seed: u64) -> Result<CorpusSplit> {
    if n < 10 {
        return Err(Error::InvalidArgument(format!(
            "corpus of {n} is too small to split (need ≥ 10)"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    Rng::new(seed).substream(0x5711).shuffle(&mut order);
    let (train, val, _) = split_sizes(n);
    let test = order.split_off(train + val);
    let val = order.split_off(train);
    Ok(CorpusSplit {
        train: order,
        val,
        test,
    })
}

impl CorpusSplit {
    pub fn label(&self, index: usize) -> Option<&'static str> {
        if self.train.contains(&index) {
            Some("train")
        } else if self.val.contains(&index) {
            Some("val")
        } else if self.test.contains(&index) {
            Some("test")
        } else {
            None
        }
    }
}

/// Seed of item `index` in a corpus seeded with `seed`.
pub fn item_seed(seed: u64, category: Category, index: usize) -> u64 {
    Rng::new(seed)
        .substream(category.index() << 32 | index as u64)
        .next_u64()
}

/// `count` scenes of one category.
pub fn generate_corpus(category: Category, count: usize, size: usize, seed: u64) -> Result<Vec<Scene>> {
    (0..count)
        .map(|i| generate(&SceneSpec::square(category, size, item_seed(seed, category, i))))
        .collect()
}

/// One manifest line: `index,category,seed,split`.
pub fn manifest_line(index: usize, category: Category, seed: u64, split: &str) -> String {
    format!("{index},{category},{seed},{split}")
}
