//! Bitmap text using the embedded 8×8 public-domain glyph set.

use font8x8::legacy::BASIC_LEGACY;

use super::canvas::{Canvas, Rgb};

pub const GLYPH: usize = 8;

fn glyph(c: char) -> [u8; 8] {
    let code = c as usize;
    if code < 128 {
        BASIC_LEGACY[code]
    } else {
        BASIC_LEGACY['?' as usize]
    }
}

/// Integer magnification giving roughly `points` tall glyphs at `dpi`.
pub fn scale_for(points: f64, dpi: f64) -> usize {
    ((points * dpi / 72.0) / GLYPH as f64).round().max(1.0) as usize
}

pub fn text_width(s: &str, scale: usize) -> usize {
    s.chars().count() * GLYPH * scale
}

/// Draws `s` with its top-left corner at `(x, y)`.
pub fn draw(canvas: &mut Canvas, s: &str, x: i64, y: i64, scale: usize, color: Rgb) {
    let sc = scale as i64;
    for (k, ch) in s.chars().enumerate() {
        let g = glyph(ch);
        let ox = x + (k * GLYPH * scale) as i64;
        for (row, bits) in g.iter().enumerate() {
            for col in 0..8 {
                if bits >> col & 1 == 1 {
                    for dy in 0..sc {
                        for dx in 0..sc {
                            canvas.put(ox + col as i64 * sc + dx, y + row as i64 * sc + dy, color);
                        }
                    }
                }
            }
        }
    }
}

/// Draws `s` rotated 90° counter-clockwise (reading bottom to top) with
/// the bounding box's top-left corner at `(x, y)`.
pub fn draw_vertical(canvas: &mut Canvas, s: &str, x: i64, y: i64, scale: usize, color: Rgb) {
    let sc = scale as i64;
    let total = text_width(s, scale) as i64;
    for (k, ch) in s.chars().enumerate() {
        let g = glyph(ch);
        let base = (k * GLYPH * scale) as i64;
        for (row, bits) in g.iter().enumerate() {
            for col in 0..8i64 {
                if bits >> col & 1 == 1 {
                    // unrotated (u, v) = (base + col, row) maps to
                    // (x + v, y + total - 1 - u)
                    for dy in 0..sc {
                        for dx in 0..sc {
                            let u = base + col * sc + dx;
                            let v = row as i64 * sc + dy;
                            canvas.put(x + v, y + total - 1 - u, color);
                        }
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn draws_inside_box() {
        let mut c = Canvas::new(40, 20, [255; 3]);
        draw(&mut c, "Ab", 2, 2, 1, [0; 3]);
        let mut inked = 0;
        for y in 0..20 {
            for x in 0..40 {
                if c.get(x, y) == [0; 3] {
                    inked += 1;
                    assert!((2..18).contains(&x) && (2..10).contains(&y));
                }
            }
        }
        assert!(inked > 10);
    }

    #[test]
    fn scale_tracks_dpi() {
        assert_eq!(scale_for(10.0, 100.0), 2);
        assert_eq!(scale_for(10.0, 25.0), 1);
        assert_eq!(scale_for(10.0, 400.0), 7);
    }
}
