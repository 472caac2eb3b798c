//! L0 gradient minimization smoothing.
//!
//! Alternating half-quadratic solver: a closed-form gradient thresholding
//! step and a spectral screened-Poisson step, with the penalty weight beta
//! growing geometrically until `beta_max`. Boundary handling is circular,
//! matching the spectral solve.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

use super::RgbImage;

#[derive(Debug, Clone, Copy)]
pub struct SmoothStats {
    pub iterations: usize,
}

struct Fft2 {
    width: usize,
    height: usize,
    fwd_w: Arc<dyn Fft<f64>>,
    inv_w: Arc<dyn Fft<f64>>,
    fwd_h: Arc<dyn Fft<f64>>,
    inv_h: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    fn new(width: usize, height: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft2 {
            width,
            height,
            fwd_w: planner.plan_fft_forward(width),
            inv_w: planner.plan_fft_inverse(width),
            fwd_h: planner.plan_fft_forward(height),
            inv_h: planner.plan_fft_inverse(height),
        }
    }

    fn pass(&self, buf: &mut [Complex<f64>], forward: bool) {
        let (row_fft, col_fft) = if forward {
            (&self.fwd_w, &self.fwd_h)
        } else {
            (&self.inv_w, &self.inv_h)
        };
        for row in buf.chunks_exact_mut(self.width) {
            row_fft.process(row);
        }
        let mut col = vec![Complex::default(); self.height];
        for x in 0..self.width {
            for y in 0..self.height {
                col[y] = buf[y * self.width + x];
            }
            col_fft.process(&mut col);
            for y in 0..self.height {
                buf[y * self.width + x] = col[y];
            }
        }
        if !forward {
            let scale = 1.0 / (self.width * self.height) as f64;
            for v in buf.iter_mut() {
                *v *= scale;
            }
        }
    }
}

/// Smooth and additionally report solver statistics.
pub fn smooth_l0_with_stats(
    img: &RgbImage,
    lambda: f64,
    kappa: f64,
    beta_max: f64,
) -> Result<(RgbImage, SmoothStats)> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::InvalidParameter("lambda must be finite and > 0".into()));
    }
    if !(kappa.is_finite() && kappa > 1.0) {
        return Err(Error::InvalidParameter("kappa must be finite and > 1".into()));
    }
    if !(beta_max.is_finite() && beta_max > 0.0) {
        return Err(Error::InvalidParameter("beta_max must be finite and > 0".into()));
    }

    let (w, h) = (img.width, img.height);
    let n = w * h;
    let fft = Fft2::new(w, h);

    // |OTF|^2 of the forward-difference kernels [1,-1] and [1;-1].
    let mut denom2 = vec![0.0f64; n];
    for y in 0..h {
        let sy = (std::f64::consts::PI * y as f64 / h as f64).sin();
        for x in 0..w {
            let sx = (std::f64::consts::PI * x as f64 / w as f64).sin();
            denom2[y * w + x] = 4.0 * (sx * sx + sy * sy);
        }
    }

    // Per-channel spatial state and the fixed spectrum of the input.
    let mut s: Vec<Vec<f64>> = (0..3)
        .map(|c| img.data.iter().map(|p| p[c]).collect())
        .collect();
    let f_input: Vec<Vec<Complex<f64>>> = s
        .iter()
        .map(|ch| {
            let mut buf: Vec<Complex<f64>> = ch.iter().map(|&v| Complex::new(v, 0.0)).collect();
            fft.pass(&mut buf, true);
            buf
        })
        .collect();

    let mut hgrad = vec![[0.0f64; 3]; n];
    let mut vgrad = vec![[0.0f64; 3]; n];
    let mut beta = 2.0 * lambda;
    let mut iterations = 0;

    while beta < beta_max {
        iterations += 1;
        // h-v subproblem: circular forward differences, jointly thresholded
        // across channels.
        let thresh = lambda / beta;
        for y in 0..h {
            for x in 0..w {
                let i = y * w + x;
                let xr = if x + 1 == w { y * w } else { i + 1 };
                let yd = if y + 1 == h { x } else { i + w };
                let mut mag = 0.0;
                for c in 0..3 {
                    let dh = s[c][xr] - s[c][i];
                    let dv = s[c][yd] - s[c][i];
                    hgrad[i][c] = dh;
                    vgrad[i][c] = dv;
                    mag += dh * dh + dv * dv;
                }
                if mag < thresh {
                    hgrad[i] = [0.0; 3];
                    vgrad[i] = [0.0; 3];
                }
            }
        }
        // S subproblem in the spectral domain.
        for c in 0..3 {
            let mut buf = vec![Complex::default(); n];
            for y in 0..h {
                for x in 0..w {
                    let i = y * w + x;
                    let xl = if x == 0 { y * w + w - 1 } else { i - 1 };
                    let yu = if y == 0 { (h - 1) * w + x } else { i - w };
                    let div = hgrad[xl][c] - hgrad[i][c] + vgrad[yu][c] - vgrad[i][c];
                    buf[i] = Complex::new(div, 0.0);
                }
            }
            fft.pass(&mut buf, true);
            for i in 0..n {
                let fs = (f_input[c][i] + buf[i] * beta) / (1.0 + beta * denom2[i]);
                buf[i] = fs;
            }
            fft.pass(&mut buf, false);
            for i in 0..n {
                s[c][i] = buf[i].re;
            }
        }
        beta *= kappa;
    }

    let mut out = img.clone();
    for i in 0..n {
        out.data[i] = [
            s[0][i].clamp(0.0, 1.0),
            s[1][i].clamp(0.0, 1.0),
            s[2][i].clamp(0.0, 1.0),
        ];
    }
    Ok((out, SmoothStats { iterations }))
}

/// Edge-preserving L0 gradient-minimization smoothing.
pub fn smooth_l0(img: &RgbImage, lambda: f64, kappa: f64, beta_max: f64) -> Result<RgbImage> {
    smooth_l0_with_stats(img, lambda, kappa, beta_max).map(|(img, _)| img)
}
