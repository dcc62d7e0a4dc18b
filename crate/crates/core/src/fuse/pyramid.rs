//! Gaussian and Laplacian pyramids over single-channel planes.
//!
//! Reduction blurs with the 5-tap binomial kernel `[1, 4, 6, 4, 1] / 16`
//! (edges clamped) and keeps every second sample, so a level of width `w`
//! has a successor of width `ceil(w / 2)`.

/// A single-channel image.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

const KERNEL: [f64; 5] = [1.0 / 16.0, 4.0 / 16.0, 6.0 / 16.0, 4.0 / 16.0, 1.0 / 16.0];

impl Plane {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), width * height, "plane buffer does not match {width}x{height}");
        Self { width, height, data }
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    fn zip_with(&self, other: &Plane, f: impl Fn(f64, f64) -> f64) -> Plane {
        assert_eq!((self.width, self.height), (other.width, other.height));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| f(*a, *b)).collect();
        Plane::new(self.width, self.height, data)
    }
}

#[inline]
fn clamp_index(i: isize, n: usize) -> usize {
    i.clamp(0, n as isize - 1) as usize
}

/// Blurs and halves along both axes.
pub fn reduce(p: &Plane) -> Plane {
    let (w, h) = (p.width, p.height);
    let (nw, nh) = (w.div_ceil(2), h.div_ceil(2));
    // horizontal pass at the kept columns only
    let mut rows = vec![0.0; nw * h];
    for y in 0..h {
        let src = &p.data[y * w..(y + 1) * w];
        for (ox, out) in rows[y * nw..(y + 1) * nw].iter_mut().enumerate() {
            let cx = 2 * ox as isize;
            *out = KERNEL
                .iter()
                .enumerate()
                .map(|(t, k)| k * src[clamp_index(cx + t as isize - 2, w)])
                .sum();
        }
    }
    let mut data = vec![0.0; nw * nh];
    for oy in 0..nh {
        let cy = 2 * oy as isize;
        for (t, k) in KERNEL.iter().enumerate() {
            let sy = clamp_index(cy + t as isize - 2, h);
            let src = &rows[sy * nw..(sy + 1) * nw];
            for (out, v) in data[oy * nw..(oy + 1) * nw].iter_mut().zip(src) {
                *out += k * v;
            }
        }
    }
    Plane::new(nw, nh, data)
}

/// Interpolates `p` up to `width x height` (at most twice its size).
/// Even output samples take `(1, 6, 1) / 8` of their neighbourhood, odd
/// ones the mean of the two sources they sit between.
pub fn expand(p: &Plane, width: usize, height: usize) -> Plane {
    assert!(width.div_ceil(2) == p.width && height.div_ceil(2) == p.height);
    fn taps(i: usize, n: usize) -> [(usize, f64); 3] {
        let c = (i / 2) as isize;
        if i.is_multiple_of(2) {
            [
                (clamp_index(c - 1, n), 1.0 / 8.0),
                (c as usize, 6.0 / 8.0),
                (clamp_index(c + 1, n), 1.0 / 8.0),
            ]
        } else {
            [(c as usize, 0.5), (clamp_index(c + 1, n), 0.5), (0, 0.0)]
        }
    }
    let mut rows = vec![0.0; width * p.height];
    for y in 0..p.height {
        let src = &p.data[y * p.width..(y + 1) * p.width];
        for (x, out) in rows[y * width..(y + 1) * width].iter_mut().enumerate() {
            *out = taps(x, p.width).iter().map(|(i, k)| k * src[*i]).sum();
        }
    }
    let mut data = vec![0.0; width * height];
    for y in 0..height {
        for (sy, k) in taps(y, p.height) {
            if k == 0.0 {
                continue;
            }
            let src = &rows[sy * width..(sy + 1) * width];
            for (out, v) in data[y * width..(y + 1) * width].iter_mut().zip(src) {
                *out += k * v;
            }
        }
    }
    Plane::new(width, height, data)
}

/// `levels` successively reduced copies, starting with `p` itself.
pub fn gaussian_pyramid(p: &Plane, levels: usize) -> Vec<Plane> {
    assert!(levels >= 1);
    let mut out = vec![p.clone()];
    while out.len() < levels {
        let next = reduce(out.last().expect("non-empty"));
        out.push(next);
    }
    out
}

/// Band-pass levels plus the coarsest Gaussian level as the residual.
pub fn laplacian_pyramid(p: &Plane, levels: usize) -> Vec<Plane> {
    let gauss = gaussian_pyramid(p, levels);
    let mut out: Vec<Plane> = gauss
        .windows(2)
        .map(|pair| pair[0].zip_with(&expand(&pair[1], pair[0].width, pair[0].height), |a, b| a - b))
        .collect();
    out.push(gauss.last().expect("non-empty").clone());
    out
}

/// Inverse of [`laplacian_pyramid`].
pub fn collapse(levels: &[Plane]) -> Plane {
    let (last, rest) = levels.split_last().expect("pyramid has at least one level");
    rest.iter().rev().fold(last.clone(), |acc, band| {
        band.zip_with(&expand(&acc, band.width, band.height), |a, b| a + b)
    })
}

/// Level count for a `width x height` image: `floor(log2(min side)) - 1`,
/// at least 1.
pub fn auto_depth(width: usize, height: usize) -> usize {
    let m = width.min(height).max(1);
    (m.ilog2() as usize).saturating_sub(1).max(1)
}
