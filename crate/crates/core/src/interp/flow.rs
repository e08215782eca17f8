//! Dense coarse-to-fine optical flow.
//!
//! Each pyramid level halves the resolution; the number of levels below full
//! resolution is `floor(log2(min(W, H) / 16))`. At every level the flow is
//! refined by a few Gauss-Newton steps of windowed least squares (dense
//! Lucas-Kanade), using the average of the reference gradient and the warped
//! target gradient.
//!
//! Coarse levels blend the motion of nearby objects, which can start the
//! refinement of a small object far from its true displacement. Before
//! refining, each pixel therefore picks the initial vector with the lowest
//! windowed warping error among its own upsampled vector, zero motion, and the
//! vectors one window away in each axis direction.

use super::plane::Plane;
use crate::radiometry::LdrFrame;
use crate::{Error, Result};

/// Half-width of the median filter applied to the flow after each level.
const MEDIAN_RADIUS: usize = 2;

/// Smallest frame side the estimator accepts.
pub const MIN_FLOW_SIZE: usize = 16;

/// Per-pixel displacement `(dx, dy)` in pixels per frame.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowField {
    width: usize,
    height: usize,
    vectors: Vec<[f64; 2]>,
}

impl FlowField {
    pub fn new(width: usize, height: usize, vectors: Vec<[f64; 2]>) -> Result<Self> {
        if vectors.len() != width * height {
            return Err(Error::InvalidInput(format!(
                "flow of {width}x{height} needs {} vectors, got {}",
                width * height,
                vectors.len()
            )));
        }
        if vectors.iter().any(|v| !(v[0].is_finite() && v[1].is_finite())) {
            return Err(Error::InvalidInput("non-finite flow vector".into()));
        }
        Ok(Self { width, height, vectors })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self::constant(width, height, 0.0, 0.0)
    }

    pub fn constant(width: usize, height: usize, dx: f64, dy: f64) -> Self {
        assert!(dx.is_finite() && dy.is_finite());
        Self {
            width,
            height,
            vectors: vec![[dx, dy]; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn vectors(&self) -> &[[f64; 2]] {
        &self.vectors
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> [f64; 2] {
        self.vectors[y * self.width + x]
    }

    /// Bilinear read with clamp-to-edge addressing.
    pub fn sample(&self, x: f64, y: f64) -> [f64; 2] {
        let x = x.clamp(0.0, (self.width - 1) as f64);
        let y = y.clamp(0.0, (self.height - 1) as f64);
        let (x0, y0) = (x.floor(), y.floor());
        let (fx, fy) = (x - x0, y - y0);
        let (x0, y0) = (x0 as usize, y0 as usize);
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let mut out = [0.0; 2];
        for (k, o) in out.iter_mut().enumerate() {
            let top = super::plane::lerp(self.get(x0, y0)[k], self.get(x1, y0)[k], fx);
            let bottom = super::plane::lerp(self.get(x0, y1)[k], self.get(x1, y1)[k], fx);
            *o = super::plane::lerp(top, bottom, fy);
        }
        out
    }

    /// Component-wise median, a robust global-motion summary.
    pub fn median(&self) -> [f64; 2] {
        let mut out = [0.0; 2];
        for (k, o) in out.iter_mut().enumerate() {
            let mut comp: Vec<f64> = self.vectors.iter().map(|v| v[k]).collect();
            comp.sort_by(f64::total_cmp);
            *o = comp[comp.len() / 2];
        }
        out
    }

    pub fn max_magnitude(&self) -> f64 {
        self.vectors.iter().map(|v| v[0].hypot(v[1])).fold(0.0, f64::max)
    }

    /// Component-wise median over a `(2r+1)^2` neighbourhood, clipped at the
    /// borders.
    fn median_filtered(&self, r: usize) -> FlowField {
        let (w, h) = self.dims();
        let mut window: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
        let mut vectors = Vec::with_capacity(w * h);
        for y in 0..h {
            for x in 0..w {
                window[0].clear();
                window[1].clear();
                for sy in y.saturating_sub(r)..=(y + r).min(h - 1) {
                    for sx in x.saturating_sub(r)..=(x + r).min(w - 1) {
                        let v = self.get(sx, sy);
                        window[0].push(v[0]);
                        window[1].push(v[1]);
                    }
                }
                let mut out = [0.0; 2];
                for (k, comp) in window.iter_mut().enumerate() {
                    let mid = comp.len() / 2;
                    out[k] = *comp.select_nth_unstable_by(mid, f64::total_cmp).1;
                }
                vectors.push(out);
            }
        }
        FlowField { width: w, height: h, vectors }
    }

    /// Doubles the resolution (to `width x height`) and the vectors.
    fn upsample(&self, width: usize, height: usize) -> FlowField {
        let mut vectors = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                let v = self.sample((x as f64 + 0.5) / 2.0 - 0.5, (y as f64 + 0.5) / 2.0 - 0.5);
                vectors.push([2.0 * v[0], 2.0 * v[1]]);
            }
        }
        FlowField { width, height, vectors }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowParams {
    /// Least-squares window is `(2r+1)^2` pixels.
    pub window_radius: usize,
    /// Gauss-Newton steps per pyramid level.
    pub iterations: usize,
    /// Tikhonov term added to the structure tensor diagonal; keeps
    /// textureless regions well-posed.
    pub regularization: f64,
    /// Largest per-step update at any level, in that level's pixels.
    pub max_step: f64,
    /// Hard bound on each flow component at full resolution.
    pub search_range: f64,
}

impl Default for FlowParams {
    fn default() -> Self {
        Self {
            window_radius: 4,
            iterations: 6,
            regularization: 1e-4,
            max_step: 1.5,
            search_range: 64.0,
        }
    }
}

/// Number of half-resolution levels below the full-resolution frame.
pub fn pyramid_levels(width: usize, height: usize) -> Result<usize> {
    let side = width.min(height);
    if side < MIN_FLOW_SIZE {
        return Err(Error::TooSmall {
            width,
            height,
            min: MIN_FLOW_SIZE,
        });
    }
    Ok((side / MIN_FLOW_SIZE).ilog2() as usize)
}

/// Dense flow from `a` to `b` with default parameters: `a(p) ≈ b(p + F(p))`.
pub fn estimate_flow(a: &LdrFrame, b: &LdrFrame) -> Result<FlowField> {
    if a.tag() != b.tag() {
        return Err(Error::ExposureMismatch(format!(
            "flow between {} and {} exposures",
            a.tag(),
            b.tag()
        )));
    }
    a.pixels().check_shape(b.pixels())?;
    estimate_flow_planes(&Plane::gray(a.pixels()), &Plane::gray(b.pixels()), &FlowParams::default())
}

pub fn estimate_flow_planes(a: &Plane, b: &Plane, params: &FlowParams) -> Result<FlowField> {
    if a.dims() != b.dims() {
        return Err(Error::shape(a.dims(), b.dims()));
    }
    let levels = pyramid_levels(a.width(), a.height())?;

    let mut pyr_a = vec![a.clone()];
    let mut pyr_b = vec![b.clone()];
    for _ in 0..levels {
        let next_a = pyr_a.last().unwrap().smooth().downsample();
        let next_b = pyr_b.last().unwrap().smooth().downsample();
        pyr_a.push(next_a);
        pyr_b.push(next_b);
    }

    let (cw, ch) = pyr_a[levels].dims();
    let mut flow = FlowField::zeros(cw, ch);
    for level in (0..=levels).rev() {
        let (w, h) = pyr_a[level].dims();
        if flow.dims() != (w, h) {
            flow = flow.upsample(w, h);
        }
        let bound = params.search_range / f64::from(1u32 << level);
        select_candidates(&pyr_a[level], &pyr_b[level], &mut flow, params.window_radius);
        refine_level(&pyr_a[level], &pyr_b[level], &mut flow, params, bound);
        flow = flow.median_filtered(MEDIAN_RADIUS);
    }
    Ok(flow)
}

/// Windowed sum of squared warping error `(b(p + F(p)) − a(p))²`.
fn window_error(a: &Plane, b: &Plane, vectors: &[[f64; 2]], r: usize) -> Plane {
    let (w, h) = a.dims();
    Plane::from_fn(w, h, |x, y| {
        let [dx, dy] = vectors[y * w + x];
        let e = b.sample(x as f64 + dx, y as f64 + dy) - a.get(x, y);
        e * e
    })
    .box_sum(r)
}

fn select_candidates(a: &Plane, b: &Plane, flow: &mut FlowField, r: usize) {
    let (w, h) = a.dims();
    let step = (2 * r + 1) as isize;
    let shifted = |ox: isize, oy: isize| -> Vec<[f64; 2]> {
        let mut out = Vec::with_capacity(w * h);
        for y in 0..h as isize {
            for x in 0..w as isize {
                let sx = (x + ox).clamp(0, w as isize - 1) as usize;
                let sy = (y + oy).clamp(0, h as isize - 1) as usize;
                out.push(flow.get(sx, sy));
            }
        }
        out
    };
    // the current field comes first so ties keep it
    let candidates = [
        flow.vectors.clone(),
        vec![[0.0, 0.0]; w * h],
        shifted(-step, 0),
        shifted(step, 0),
        shifted(0, -step),
        shifted(0, step),
    ];
    let errors: Vec<Plane> = candidates.iter().map(|c| window_error(a, b, c, r)).collect();
    for i in 0..w * h {
        let mut best = 0;
        for k in 1..candidates.len() {
            if errors[k].data()[i] < errors[best].data()[i] {
                best = k;
            }
        }
        flow.vectors[i] = candidates[best][i];
    }
}

fn refine_level(a: &Plane, b: &Plane, flow: &mut FlowField, params: &FlowParams, bound: f64) {
    let (w, h) = a.dims();
    let n = w * h;
    let (ax, ay) = a.gradients();
    let (bx, by) = b.gradients();

    for _ in 0..params.iterations {
        let mut ixx = vec![0.0; n];
        let mut ixy = vec![0.0; n];
        let mut iyy = vec![0.0; n];
        let mut ixt = vec![0.0; n];
        let mut iyt = vec![0.0; n];
        for y in 0..h {
            for x in 0..w {
                let i = y * w + x;
                let [dx, dy] = flow.vectors[i];
                let (qx, qy) = (x as f64 + dx, y as f64 + dy);
                let gx = 0.5 * (ax.get(x, y) + bx.sample(qx, qy));
                let gy = 0.5 * (ay.get(x, y) + by.sample(qx, qy));
                let it = b.sample(qx, qy) - a.get(x, y);
                ixx[i] = gx * gx;
                ixy[i] = gx * gy;
                iyy[i] = gy * gy;
                ixt[i] = gx * it;
                iyt[i] = gy * it;
            }
        }
        let r = params.window_radius;
        let sxx = Plane::new(w, h, ixx).box_sum(r);
        let sxy = Plane::new(w, h, ixy).box_sum(r);
        let syy = Plane::new(w, h, iyy).box_sum(r);
        let sxt = Plane::new(w, h, ixt).box_sum(r);
        let syt = Plane::new(w, h, iyt).box_sum(r);

        let lambda = params.regularization;
        for i in 0..n {
            let a11 = sxx.data()[i] + lambda;
            let a12 = sxy.data()[i];
            let a22 = syy.data()[i] + lambda;
            let b1 = -sxt.data()[i];
            let b2 = -syt.data()[i];
            let det = a11 * a22 - a12 * a12;
            let du = (a22 * b1 - a12 * b2) / det;
            let dv = (a11 * b2 - a12 * b1) / det;
            let v = &mut flow.vectors[i];
            v[0] = (v[0] + du.clamp(-params.max_step, params.max_step)).clamp(-bound, bound);
            v[1] = (v[1] + dv.clamp(-params.max_step, params.max_step)).clamp(-bound, bound);
        }
    }
}

/// Forward-backward consistency weight,
/// `exp(-|F_ab(p) + F_ba(p + F_ab(p))| / sigma)`, on `forward`'s grid.
pub fn consistency_visibility(forward: &FlowField, backward: &FlowField, sigma: f64) -> Plane {
    let (w, h) = forward.dims();
    Plane::from_fn(w, h, |x, y| {
        let f = forward.get(x, y);
        let b = backward.sample(x as f64 + f[0], y as f64 + f[1]);
        let err = (f[0] + b[0]).hypot(f[1] + b[1]);
        (-err / sigma).exp()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radiometry::{BitDepth, ExposureTag, PixelBuffer};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn frame(buf: PixelBuffer) -> LdrFrame {
        LdrFrame::new(buf, 1.0, ExposureTag::High, BitDepth::Unquantized).unwrap()
    }

    /// Smooth random texture: white noise blurred a few times.
    fn texture(width: usize, height: usize, seed: u64) -> Plane {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = Plane::from_fn(width, height, |_, _| rng.random::<f64>());
        for _ in 0..3 {
            p = p.smooth();
        }
        p
    }

    #[test]
    fn pyramid_level_count() {
        assert_eq!(pyramid_levels(256, 256).unwrap(), 4);
        assert_eq!(pyramid_levels(16, 40).unwrap(), 0);
        assert_eq!(pyramid_levels(100, 64).unwrap(), 2);
        assert!(matches!(pyramid_levels(15, 64), Err(Error::TooSmall { .. })));
    }

    #[test]
    fn identical_frames_give_zero_flow() {
        let t = texture(64, 48, 1);
        let f = estimate_flow_planes(&t, &t, &FlowParams::default()).unwrap();
        assert!(f.vectors().iter().all(|v| v[0] == 0.0 && v[1] == 0.0));
    }

    #[test]
    fn recovers_global_integer_shift() {
        let (w, h) = (96, 96);
        let big = texture(w + 8, h, 7);
        // b(x) = a(x - 4): content moves 4 px to the right
        let a = Plane::from_fn(w, h, |x, y| big.get(x + 4, y));
        let b = Plane::from_fn(w, h, |x, y| big.get(x, y));
        let f = estimate_flow_planes(&a, &b, &FlowParams::default()).unwrap();
        let [mx, my] = f.median();
        assert!((mx - 4.0).abs() < 0.5, "median flow {mx}");
        assert!(my.abs() < 0.5);

        // the public entry point on RGB frames sees the same shift
        let rgb = |p: &Plane| frame(PixelBuffer::from_fn(w, h, |x, y, _| p.get(x, y)));
        let f = estimate_flow(&rgb(&b), &rgb(&a)).unwrap();
        let [mx, my] = f.median();
        assert!((mx + 4.0).abs() < 0.5 && my.abs() < 0.5);
    }

    #[test]
    fn flat_frames_stay_finite_and_bounded() {
        let a = Plane::filled(32, 32, 0.3);
        let b = Plane::filled(32, 32, 0.7);
        let params = FlowParams::default();
        let f = estimate_flow_planes(&a, &b, &params).unwrap();
        assert!(f.vectors().iter().all(|v| v[0].is_finite() && v[1].is_finite()));
        assert!(f.max_magnitude() <= params.search_range * 2f64.sqrt());
    }

    #[test]
    fn rejects_small_or_mismatched_frames() {
        let small = frame(PixelBuffer::filled(8, 8, 0.5));
        assert!(matches!(estimate_flow(&small, &small), Err(Error::TooSmall { .. })));
        let a = frame(PixelBuffer::filled(32, 32, 0.5));
        let b = frame(PixelBuffer::filled(32, 16, 0.5));
        assert!(matches!(estimate_flow(&a, &b), Err(Error::ShapeMismatch { .. })));
        let low = LdrFrame::new(PixelBuffer::filled(32, 32, 0.5), 1.0, ExposureTag::Low, BitDepth::Unquantized)
            .unwrap();
        assert!(matches!(estimate_flow(&a, &low), Err(Error::ExposureMismatch(_))));
    }

    #[test]
    fn consistent_flows_are_fully_visible() {
        let fwd = FlowField::constant(20, 20, 3.0, -1.0);
        let bwd = FlowField::constant(20, 20, -3.0, 1.0);
        let v = consistency_visibility(&fwd, &bwd, 2.0);
        assert!(v.data().iter().all(|&w| w == 1.0));
        let stale = FlowField::zeros(20, 20);
        let v = consistency_visibility(&fwd, &stale, 2.0);
        let expected = (-(10f64.sqrt()) / 2.0).exp();
        assert!(v.data().iter().all(|&w| (w - expected).abs() < 1e-12));
    }
}
