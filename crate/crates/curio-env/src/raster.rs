//! Anti-aliased software rasterization into [H, W, C] tensors.
//!
//! Coverage-based edges: each pixel gets clamp(radius - distance + 0.5, 0, 1)
//! of the shape color, composed with per-channel max. The finished frame is
//! quantized to the 1/255 grid so observations are exactly representable as
//! 8-bit images.

use curio_nn::Tensor;

pub(crate) struct Canvas {
    pub h: usize,
    pub w: usize,
    data: Vec<f64>, // [H, W, 3]
}

impl Canvas {
    pub fn new(h: usize, w: usize) -> Self {
        Self {
            h,
            w,
            data: vec![0.0; h * w * 3],
        }
    }

    #[inline]
    fn blend(&mut self, row: usize, col: usize, color: [f64; 3], coverage: f64) {
        if coverage <= 0.0 {
            return;
        }
        let base = (row * self.w + col) * 3;
        for c in 0..3 {
            let v = color[c] * coverage;
            if v > self.data[base + c] {
                self.data[base + c] = v;
            }
        }
    }

    /// Filled disc centered at (x, y) in pixel coordinates.
    pub fn disc(&mut self, x: f64, y: f64, radius: f64, color: [f64; 3]) {
        let r_out = radius + 1.0;
        let row_lo = ((y - r_out).floor().max(0.0)) as usize;
        let row_hi = ((y + r_out).ceil().min(self.h as f64)) as usize;
        let col_lo = ((x - r_out).floor().max(0.0)) as usize;
        let col_hi = ((x + r_out).ceil().min(self.w as f64)) as usize;
        for row in row_lo..row_hi {
            for col in col_lo..col_hi {
                let (px, py) = (col as f64 + 0.5, row as f64 + 0.5);
                let d = ((px - x).powi(2) + (py - y).powi(2)).sqrt();
                let cov = (radius - d + 0.5).clamp(0.0, 1.0);
                self.blend(row, col, color, cov);
            }
        }
    }

    /// Capsule (thick segment) from (x0, y0) to (x1, y1) in pixel coordinates.
    pub fn capsule(&mut self, x0: f64, y0: f64, x1: f64, y1: f64, half_width: f64, color: [f64; 3]) {
        let r_out = half_width + 1.0;
        let row_lo = ((y0.min(y1) - r_out).floor().max(0.0)) as usize;
        let row_hi = ((y0.max(y1) + r_out).ceil().min(self.h as f64)) as usize;
        let col_lo = ((x0.min(x1) - r_out).floor().max(0.0)) as usize;
        let col_hi = ((x0.max(x1) + r_out).ceil().min(self.w as f64)) as usize;
        let (dx, dy) = (x1 - x0, y1 - y0);
        let len2 = dx * dx + dy * dy;
        for row in row_lo..row_hi {
            for col in col_lo..col_hi {
                let (px, py) = (col as f64 + 0.5, row as f64 + 0.5);
                let t = if len2 > 0.0 {
                    (((px - x0) * dx + (py - y0) * dy) / len2).clamp(0.0, 1.0)
                } else {
                    0.0
                };
                let (cx, cy) = (x0 + t * dx, y0 + t * dy);
                let d = ((px - cx).powi(2) + (py - cy).powi(2)).sqrt();
                let cov = (half_width - d + 0.5).clamp(0.0, 1.0);
                self.blend(row, col, color, cov);
            }
        }
    }

    /// Axis-aligned bar spanning rows [row0, row1) with anti-aliased vertical
    /// edges at x_center +- half_width (pixel coordinates).
    pub fn vbar(&mut self, x_center: f64, half_width: f64, row0: usize, row1: usize, color: [f64; 3]) {
        let x_lo = x_center - half_width;
        let x_hi = x_center + half_width;
        let col_lo = (x_lo.floor().max(0.0)) as usize;
        let col_hi = (x_hi.ceil().min(self.w as f64)) as usize;
        for col in col_lo..col_hi {
            let cell_lo = col as f64;
            let cell_hi = cell_lo + 1.0;
            let cov = (x_hi.min(cell_hi) - x_lo.max(cell_lo)).clamp(0.0, 1.0);
            for row in row0.min(self.h)..row1.min(self.h) {
                self.blend(row, col, color, cov);
            }
        }
    }

    /// Quantizes to the 1/255 grid and returns the [H, W, 3] observation.
    pub fn finish(self) -> Tensor {
        let data = self
            .data
            .into_iter()
            .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() / 255.0)
            .collect();
        Tensor::new(vec![self.h, self.w, 3], data).expect("canvas dims are consistent")
    }
}
