use crate::radiometry::PixelBuffer;

/// Single-channel image used for grayscale flow estimation and per-pixel
/// weight maps.
#[derive(Clone, Debug, PartialEq)]
pub struct Plane {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Plane {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), width * height);
        Self { width, height, data }
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self { width, height, data }
    }

    /// Channel mean of an RGB buffer.
    pub fn gray(buf: &PixelBuffer) -> Self {
        let data = buf
            .data()
            .chunks_exact(3)
            .map(|p| (p[0] + p[1] + p[2]) / 3.0)
            .collect();
        Self::new(buf.width(), buf.height(), data)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    /// Bilinear read with clamp-to-edge addressing.
    #[inline]
    pub fn sample(&self, x: f64, y: f64) -> f64 {
        let xmax = (self.width - 1) as f64;
        let ymax = (self.height - 1) as f64;
        let x = x.clamp(0.0, xmax);
        let y = y.clamp(0.0, ymax);
        let x0 = x.floor();
        let y0 = y.floor();
        let fx = x - x0;
        let fy = y - y0;
        let x0 = x0 as usize;
        let y0 = y0 as usize;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let top = lerp(self.get(x0, y0), self.get(x1, y0), fx);
        let bottom = lerp(self.get(x0, y1), self.get(x1, y1), fx);
        lerp(top, bottom, fy)
    }

    /// Central-difference gradients, one-sided at the border.
    pub fn gradients(&self) -> (Plane, Plane) {
        let (w, h) = self.dims();
        let gx = Plane::from_fn(w, h, |x, y| {
            let l = x.saturating_sub(1);
            let r = (x + 1).min(w - 1);
            if r == l {
                0.0
            } else {
                (self.get(r, y) - self.get(l, y)) / (r - l) as f64
            }
        });
        let gy = Plane::from_fn(w, h, |x, y| {
            let u = y.saturating_sub(1);
            let d = (y + 1).min(h - 1);
            if d == u {
                0.0
            } else {
                (self.get(x, d) - self.get(x, u)) / (d - u) as f64
            }
        });
        (gx, gy)
    }

    /// 2x2 block average; odd trailing rows/columns are dropped.
    pub fn downsample(&self) -> Plane {
        let w = self.width / 2;
        let h = self.height / 2;
        Plane::from_fn(w, h, |x, y| {
            0.25 * (self.get(2 * x, 2 * y)
                + self.get(2 * x + 1, 2 * y)
                + self.get(2 * x, 2 * y + 1)
                + self.get(2 * x + 1, 2 * y + 1))
        })
    }

    /// Separable [1 2 1]/4 smoothing with clamped borders.
    pub fn smooth(&self) -> Plane {
        let (w, h) = self.dims();
        let horiz = Plane::from_fn(w, h, |x, y| {
            let l = self.get(x.saturating_sub(1), y);
            let r = self.get((x + 1).min(w - 1), y);
            0.25 * l + 0.5 * self.get(x, y) + 0.25 * r
        });
        Plane::from_fn(w, h, |x, y| {
            let u = horiz.get(x, y.saturating_sub(1));
            let d = horiz.get(x, (y + 1).min(h - 1));
            0.25 * u + 0.5 * horiz.get(x, y) + 0.25 * d
        })
    }

    /// Sum over a `(2r+1)^2` window, with the window truncated at the border.
    pub fn box_sum(&self, radius: usize) -> Plane {
        let (w, h) = self.dims();
        let mut horiz = vec![0.0; w * h];
        for y in 0..h {
            let row = &self.data[y * w..(y + 1) * w];
            let mut prefix = Vec::with_capacity(w + 1);
            prefix.push(0.0);
            let mut acc = 0.0;
            for v in row {
                acc += v;
                prefix.push(acc);
            }
            for x in 0..w {
                let lo = x.saturating_sub(radius);
                let hi = (x + radius + 1).min(w);
                horiz[y * w + x] = prefix[hi] - prefix[lo];
            }
        }
        let mut out = vec![0.0; w * h];
        let mut prefix = vec![0.0; h + 1];
        for x in 0..w {
            let mut acc = 0.0;
            for y in 0..h {
                acc += horiz[y * w + x];
                prefix[y + 1] = acc;
            }
            for y in 0..h {
                let lo = y.saturating_sub(radius);
                let hi = (y + radius + 1).min(h);
                out[y * w + x] = prefix[hi] - prefix[lo];
            }
        }
        Plane::new(w, h, out)
    }
}

#[inline]
pub(crate) fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + t * (b - a)
}
