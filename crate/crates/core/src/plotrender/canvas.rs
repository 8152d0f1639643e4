//! Minimal deterministic RGB rasteriser. No anti-aliasing: coverage is a
//! point-sample at each pixel centre, so output depends only on IEEE
//! arithmetic and is identical across platforms.

pub type Rgb = [u8; 3];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn contains_px(&self, x: usize, y: usize) -> bool {
        let (cx, cy) = (x as f64 + 0.5, y as f64 + 0.5);
        cx >= self.x0 && cx <= self.x1 && cy >= self.y0 && cy <= self.y1
    }
}

#[derive(Debug, Clone)]
pub struct Canvas {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
    clip: Option<(usize, usize, usize, usize)>,
}

impl Canvas {
    pub fn new(width: usize, height: usize, bg: Rgb) -> Self {
        let mut pixels = Vec::with_capacity(width * height * 3);
        for _ in 0..width * height {
            pixels.extend_from_slice(&bg);
        }
        Self {
            width,
            height,
            pixels,
            clip: None,
        }
    }

    /// Restricts drawing to the pixels whose centres fall inside `r`.
    pub fn set_clip(&mut self, r: Option<Rect>) {
        self.clip = r.map(|r| {
            let x0 = (r.x0 - 0.5).ceil().max(0.0) as usize;
            let y0 = (r.y0 - 0.5).ceil().max(0.0) as usize;
            let x1 = ((r.x1 - 0.5).floor().max(-1.0) + 1.0).min(self.width as f64) as usize;
            let y1 = ((r.y1 - 0.5).floor().max(-1.0) + 1.0).min(self.height as f64) as usize;
            (x0, y0, x1, y1)
        });
    }

    fn bounds(&self) -> (usize, usize, usize, usize) {
        self.clip.unwrap_or((0, 0, self.width, self.height))
    }

    pub fn get(&self, x: usize, y: usize) -> Rgb {
        let i = (y * self.width + x) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    #[inline]
    pub fn put(&mut self, x: i64, y: i64, c: Rgb) {
        let (x0, y0, x1, y1) = self.bounds();
        if x < x0 as i64 || y < y0 as i64 || x >= x1 as i64 || y >= y1 as i64 {
            return;
        }
        let i = (y as usize * self.width + x as usize) * 3;
        self.pixels[i..i + 3].copy_from_slice(&c);
    }

    /// Iterates integer pixels whose centres may lie in `[x0,x1]×[y0,y1]`.
    fn bbox(&self, x0: f64, y0: f64, x1: f64, y1: f64) -> (i64, i64, i64, i64) {
        let (bx0, by0, bx1, by1) = self.bounds();
        (
            ((x0 - 0.5).floor() as i64).max(bx0 as i64),
            ((y0 - 0.5).floor() as i64).max(by0 as i64),
            ((x1 - 0.5).ceil() as i64).min(bx1 as i64 - 1),
            ((y1 - 0.5).ceil() as i64).min(by1 as i64 - 1),
        )
    }

    pub fn fill_rect(&mut self, r: Rect, c: Rgb) {
        let (x0, y0, x1, y1) = self.bbox(r.x0, r.y0, r.x1, r.y1);
        for y in y0..=y1 {
            let cy = y as f64 + 0.5;
            if cy < r.y0 || cy > r.y1 {
                continue;
            }
            for x in x0..=x1 {
                let cx = x as f64 + 0.5;
                if cx >= r.x0 && cx <= r.x1 {
                    self.put(x, y, c);
                }
            }
        }
    }

    /// Disc of radius `r` (never smaller than one pixel).
    pub fn fill_circle(&mut self, cx: f64, cy: f64, r: f64, c: Rgb) {
        let r = r.max(0.6);
        let (x0, y0, x1, y1) = self.bbox(cx - r, cy - r, cx + r, cy + r);
        let r2 = r * r;
        for y in y0..=y1 {
            let dy = y as f64 + 0.5 - cy;
            for x in x0..=x1 {
                let dx = x as f64 + 0.5 - cx;
                if dx * dx + dy * dy <= r2 {
                    self.put(x, y, c);
                }
            }
        }
    }

    /// All pixels within `width / 2` of the segment.
    pub fn line(&mut self, p0: (f64, f64), p1: (f64, f64), width: f64, c: Rgb) {
        self.line_pattern(p0, p1, width, c, None);
    }

    /// Like [`line`](Self::line) with an optional on/off dash length in
    /// pixels, measured along the segment.
    pub fn line_pattern(&mut self, p0: (f64, f64), p1: (f64, f64), width: f64, c: Rgb, dash: Option<f64>) {
        let hw = (width.max(1.0)) / 2.0;
        let (ax, ay) = p0;
        let (bx, by) = p1;
        let (x0, y0, x1, y1) = self.bbox(
            ax.min(bx) - hw,
            ay.min(by) - hw,
            ax.max(bx) + hw,
            ay.max(by) + hw,
        );
        let (dx, dy) = (bx - ax, by - ay);
        let len2 = dx * dx + dy * dy;
        let len = len2.sqrt();
        let hw2 = hw * hw;
        for y in y0..=y1 {
            let py = y as f64 + 0.5;
            for x in x0..=x1 {
                let px = x as f64 + 0.5;
                let t = if len2 > 0.0 {
                    (((px - ax) * dx + (py - ay) * dy) / len2).clamp(0.0, 1.0)
                } else {
                    0.0
                };
                let (qx, qy) = (ax + t * dx - px, ay + t * dy - py);
                if qx * qx + qy * qy <= hw2 {
                    if let Some(d) = dash {
                        if ((t * len / d).floor() as i64) % 2 == 1 {
                            continue;
                        }
                    }
                    self.put(x, y, c);
                }
            }
        }
    }

    pub fn polyline(&mut self, pts: &[(f64, f64)], width: f64, c: Rgb) {
        if pts.len() == 1 {
            self.fill_circle(pts[0].0, pts[0].1, width / 2.0, c);
        }
        for w in pts.windows(2) {
            self.line(w[0], w[1], width, c);
        }
    }

    pub fn fill_triangle(&mut self, a: (f64, f64), b: (f64, f64), cpt: (f64, f64), c: Rgb) {
        let (x0, y0, x1, y1) = self.bbox(
            a.0.min(b.0).min(cpt.0),
            a.1.min(b.1).min(cpt.1),
            a.0.max(b.0).max(cpt.0),
            a.1.max(b.1).max(cpt.1),
        );
        let edge = |p: (f64, f64), q: (f64, f64), x: f64, y: f64| (q.0 - p.0) * (y - p.1) - (q.1 - p.1) * (x - p.0);
        for y in y0..=y1 {
            let py = y as f64 + 0.5;
            for x in x0..=x1 {
                let px = x as f64 + 0.5;
                let e0 = edge(a, b, px, py);
                let e1 = edge(b, cpt, px, py);
                let e2 = edge(cpt, a, px, py);
                if (e0 >= 0.0 && e1 >= 0.0 && e2 >= 0.0) || (e0 <= 0.0 && e1 <= 0.0 && e2 <= 0.0) {
                    self.put(x, y, c);
                }
            }
        }
    }

    pub fn stroke_rect(&mut self, r: Rect, width: f64, c: Rgb) {
        let corners = [(r.x0, r.y0), (r.x1, r.y0), (r.x1, r.y1), (r.x0, r.y1), (r.x0, r.y0)];
        self.polyline(&corners, width, c);
    }

    /// Raw RGB8 buffer, row-major.
    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_area_close_to_pi_r2() {
        let mut c = Canvas::new(100, 100, [255; 3]);
        c.fill_circle(50.0, 50.0, 20.0, [0; 3]);
        let n = c.pixels.chunks(3).filter(|p| p[0] == 0).count() as f64;
        assert!((n - std::f64::consts::PI * 400.0).abs() / n < 0.02);
    }

    #[test]
    fn clip_blocks_outside_pixels() {
        let mut c = Canvas::new(20, 20, [255; 3]);
        c.set_clip(Some(Rect {
            x0: 5.0,
            y0: 5.0,
            x1: 15.0,
            y1: 15.0,
        }));
        c.fill_circle(10.0, 10.0, 30.0, [0; 3]);
        assert_eq!(c.get(0, 0), [255; 3]);
        assert_eq!(c.get(10, 10), [0; 3]);
        assert_eq!(c.get(15, 10), [255; 3]);
    }

    #[test]
    fn horizontal_line_width() {
        let mut c = Canvas::new(50, 50, [255; 3]);
        c.line((5.0, 25.5), (45.0, 25.5), 3.0, [0; 3]);
        let col: Vec<bool> = (0..50).map(|y| c.get(20, y) == [0; 3]).collect();
        assert_eq!(col.iter().filter(|b| **b).count(), 3);
    }
}
