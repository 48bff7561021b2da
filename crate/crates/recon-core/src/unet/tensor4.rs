//! Flat (channels, frames, height, width) activation tensor plus the two
//! shifted-volume kernels every convolution pass is built from.

/// Dense C x T x H x W tensor, channel-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor4 {
    pub c: usize,
    pub t: usize,
    pub h: usize,
    pub w: usize,
    pub data: Vec<f32>,
}

impl Tensor4 {
    pub fn zeros(c: usize, t: usize, h: usize, w: usize) -> Self {
        Self { c, t, h, w, data: vec![0.0; c * t * h * w] }
    }

    pub fn volume(&self) -> usize {
        self.t * self.h * self.w
    }

    pub fn channel(&self, c: usize) -> &[f32] {
        let v = self.volume();
        &self.data[c * v..(c + 1) * v]
    }

    pub fn channel_mut(&mut self, c: usize) -> &mut [f32] {
        let v = self.volume();
        &mut self.data[c * v..(c + 1) * v]
    }

    pub fn same_shape(&self, other: &Tensor4) -> bool {
        (self.c, self.t, self.h, self.w) == (other.c, other.t, other.h, other.w)
    }
}

/// dst[p] += scale * src[p + shift] over the valid overlap of two equally
/// sized T x H x W volumes. Out-of-range source positions contribute zero,
/// which realizes zero padding.
pub fn accumulate_shifted(
    dst: &mut [f32],
    src: &[f32],
    dims: (usize, usize, usize),
    shift: (isize, isize, isize),
    scale: f32,
) {
    let (t, h, w) = dims;
    debug_assert_eq!(dst.len(), t * h * w);
    debug_assert_eq!(src.len(), t * h * w);
    let (st, sy, sx) = shift;
    let t_range = valid_range(t, st);
    let y_range = valid_range(h, sy);
    let x_range = valid_range(w, sx);
    if t_range.is_empty() || y_range.is_empty() || x_range.is_empty() {
        return;
    }
    for tt in t_range.clone() {
        let src_t = ((tt as isize + st) as usize) * h * w;
        let dst_t = tt * h * w;
        for yy in y_range.clone() {
            let src_row = src_t + ((yy as isize + sy) as usize) * w;
            let dst_row = dst_t + yy * w;
            let d = &mut dst[dst_row + x_range.start..dst_row + x_range.end];
            let s = &src[(src_row as isize + sx) as usize + x_range.start
                ..(src_row as isize + sx) as usize + x_range.end];
            for (dv, &sv) in d.iter_mut().zip(s) {
                *dv += scale * sv;
            }
        }
    }
}

/// sum_p a[p] * b[p + shift] over the valid overlap (f64 accumulation).
pub fn dot_shifted(
    a: &[f32],
    b: &[f32],
    dims: (usize, usize, usize),
    shift: (isize, isize, isize),
) -> f64 {
    let (t, h, w) = dims;
    debug_assert_eq!(a.len(), t * h * w);
    debug_assert_eq!(b.len(), t * h * w);
    let (st, sy, sx) = shift;
    let t_range = valid_range(t, st);
    let y_range = valid_range(h, sy);
    let x_range = valid_range(w, sx);
    let mut acc = 0.0f64;
    for tt in t_range {
        let b_t = ((tt as isize + st) as usize) * h * w;
        let a_t = tt * h * w;
        for yy in y_range.clone() {
            let b_row = b_t + ((yy as isize + sy) as usize) * w;
            let a_row = a_t + yy * w;
            let av = &a[a_row + x_range.start..a_row + x_range.end];
            let bv = &b[(b_row as isize + sx) as usize + x_range.start
                ..(b_row as isize + sx) as usize + x_range.end];
            let mut partial = 0.0f32;
            for (x, y) in av.iter().zip(bv) {
                partial += x * y;
            }
            acc += partial as f64;
        }
    }
    acc
}

fn valid_range(n: usize, shift: isize) -> std::ops::Range<usize> {
    let lo = (-shift).max(0) as usize;
    let hi = ((n as isize - shift).min(n as isize)).max(0) as usize;
    lo..hi.max(lo)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shifted_accumulate_matches_naive() {
        let dims = (3usize, 4usize, 5usize);
        let n = 60;
        let src: Vec<f32> = (0..n).map(|i| (i as f32 * 0.37).sin()).collect();
        for &shift in &[(0isize, 0isize, 0isize), (1, 0, -1), (-1, 1, 1), (2, -2, 0)] {
            let mut fast = vec![0.0f32; n];
            accumulate_shifted(&mut fast, &src, dims, shift, 1.5);
            let mut naive = vec![0.0f32; n];
            let (t, h, w) = dims;
            for tt in 0..t as isize {
                for yy in 0..h as isize {
                    for xx in 0..w as isize {
                        let (pt, py, px) = (tt + shift.0, yy + shift.1, xx + shift.2);
                        if pt >= 0 && pt < t as isize && py >= 0 && py < h as isize && px >= 0 && px < w as isize {
                            naive[(tt as usize * h + yy as usize) * w + xx as usize] +=
                                1.5 * src[(pt as usize * h + py as usize) * w + px as usize];
                        }
                    }
                }
            }
            assert_eq!(fast, naive, "shift {:?}", shift);
        }
    }

    #[test]
    fn shifted_dot_matches_naive() {
        let dims = (2usize, 3usize, 4usize);
        let a: Vec<f32> = (0..24).map(|i| (i as f32 * 0.21).cos()).collect();
        let b: Vec<f32> = (0..24).map(|i| (i as f32 * 0.13).sin()).collect();
        for &shift in &[(0isize, 0isize, 0isize), (1, 1, 1), (-1, 0, 2), (0, -1, -1)] {
            let fast = dot_shifted(&a, &b, dims, shift);
            let mut naive = 0.0f64;
            let (t, h, w) = dims;
            for tt in 0..t as isize {
                for yy in 0..h as isize {
                    for xx in 0..w as isize {
                        let (pt, py, px) = (tt + shift.0, yy + shift.1, xx + shift.2);
                        if pt >= 0 && pt < t as isize && py >= 0 && py < h as isize && px >= 0 && px < w as isize {
                            naive += a[(tt as usize * h + yy as usize) * w + xx as usize] as f64
                                * b[(pt as usize * h + py as usize) * w + px as usize] as f64;
                        }
                    }
                }
            }
            assert!((fast - naive).abs() < 1e-6, "shift {:?}: {} vs {}", shift, fast, naive);
        }
    }
}
