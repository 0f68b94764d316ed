//! Spectral diagonalization of the compact discrete Laplacian.
//!
//! The Poisson solves behind the negative-norm metrics invert exactly
//! the same stencil as [`crate::calculus::laplacian`], so the computed
//! potential satisfies `-laplacian(phi) = f` to rounding. Three lifts
//! are supported on the cell-centered mesh:
//!
//! - `Periodic`: complex FFT, eigenvalues `(2/h^2)(1 - cos(2 pi k/N))`;
//! - `Dirichlet`: DST-I (odd extension), eigenvalues
//!   `(2/h^2)(1 - cos(pi k/(N+1)))`, `k = 1..N`;
//! - `NoFlux`: DCT-II/III (even extension), eigenvalues
//!   `(2/h^2)(1 - cos(pi k/N))`, `k = 0..N-1`.
//!
//! `Periodic` and `NoFlux` have a constant nullspace; callers must hand
//! in mean-zero data and get back a mean-zero potential.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Lift {
    Periodic,
    Dirichlet,
    NoFlux,
}

/// Eigenvalues of `-laplacian` along one axis of `n` cells.
pub(crate) fn eigenvalues(n: usize, h: f64, lift: Lift) -> Vec<f64> {
    let h2 = h * h;
    match lift {
        Lift::Periodic => (0..n)
            .map(|k| (2.0 / h2) * (1.0 - (2.0 * std::f64::consts::PI * k as f64 / n as f64).cos()))
            .collect(),
        Lift::Dirichlet => (1..=n)
            .map(|k| {
                (2.0 / h2) * (1.0 - (std::f64::consts::PI * k as f64 / (n as f64 + 1.0)).cos())
            })
            .collect(),
        Lift::NoFlux => (0..n)
            .map(|k| (2.0 / h2) * (1.0 - (std::f64::consts::PI * k as f64 / n as f64).cos()))
            .collect(),
    }
}

fn fft_complex(data: &mut [Complex<f64>], inverse: bool) {
    let mut planner = FftPlanner::new();
    let fft = if inverse {
        planner.plan_fft_inverse(data.len())
    } else {
        planner.plan_fft_forward(data.len())
    };
    fft.process(data);
}

/// DST-I: `S_k = sum_{j=1}^{N} f_{j-1} sin(pi j k/(N+1))`, `k = 1..N`.
pub(crate) fn dst1(f: &[f64]) -> Vec<f64> {
    let n = f.len();
    let m = 2 * (n + 1);
    let mut buf = vec![Complex::new(0.0, 0.0); m];
    for j in 0..n {
        buf[j + 1] = Complex::new(f[j], 0.0);
        buf[m - 1 - j] = Complex::new(-f[j], 0.0);
    }
    fft_complex(&mut buf, false);
    (1..=n).map(|k| -0.5 * buf[k].im).collect()
}

/// DCT-II: `C_k = sum_j f_j cos(pi k (2j+1)/(2N))`, `k = 0..N-1`.
pub(crate) fn dct2(f: &[f64]) -> Vec<f64> {
    let n = f.len();
    let m = 2 * n;
    let mut buf = vec![Complex::new(0.0, 0.0); m];
    for j in 0..n {
        buf[j] = Complex::new(f[j], 0.0);
        buf[m - 1 - j] = Complex::new(f[j], 0.0);
    }
    fft_complex(&mut buf, false);
    (0..n)
        .map(|k| {
            let phase = Complex::from_polar(1.0, -std::f64::consts::PI * k as f64 / (2.0 * n as f64));
            0.5 * (phase * buf[k]).re
        })
        .collect()
}

/// Inverse of [`dct2`] including normalization:
/// `f_j = (2/N)(C_0/2 + sum_{k>=1} C_k cos(pi k (2j+1)/(2N)))`.
pub(crate) fn dct2_inverse(c: &[f64]) -> Vec<f64> {
    let n = c.len();
    let m = 2 * n;
    let mut buf = vec![Complex::new(0.0, 0.0); m];
    buf[0] = Complex::new(0.5 * c[0], 0.0);
    for k in 1..n {
        let phase = Complex::from_polar(1.0, -std::f64::consts::PI * k as f64 / (2.0 * n as f64));
        buf[k] = phase * c[k];
    }
    fft_complex(&mut buf, false);
    (0..n).map(|j| 2.0 / n as f64 * buf[j].re).collect()
}

/// Solve `-Delta_h phi = f` on an `nx x ny` cell block (`ny = 1` in 1D)
/// with the same lift on both axes. Zero modes are projected out.
pub(crate) fn solve_poisson(f: &[f64], nx: usize, ny: usize, h: f64, lift: Lift) -> Vec<f64> {
    assert_eq!(f.len(), nx * ny);
    match lift {
        Lift::Periodic => solve_periodic(f, nx, ny, h),
        Lift::Dirichlet => solve_real_transform(f, nx, ny, h, lift),
        Lift::NoFlux => solve_real_transform(f, nx, ny, h, lift),
    }
}

fn solve_periodic(f: &[f64], nx: usize, ny: usize, h: f64) -> Vec<f64> {
    let mut data: Vec<Complex<f64>> = f.iter().map(|&v| Complex::new(v, 0.0)).collect();
    transform_axes_complex(&mut data, nx, ny, false);
    let mu_x = eigenvalues(nx, h, Lift::Periodic);
    let mu_y = eigenvalues(ny, h, Lift::Periodic);
    for (ky, muy) in mu_y.iter().enumerate() {
        for (kx, mux) in mu_x.iter().enumerate() {
            let mu = mux + muy;
            let idx = ky * nx + kx;
            if mu <= 0.0 {
                data[idx] = Complex::new(0.0, 0.0);
            } else {
                data[idx] /= mu;
            }
        }
    }
    transform_axes_complex(&mut data, nx, ny, true);
    let scale = 1.0 / (nx as f64 * ny as f64);
    data.iter().map(|c| c.re * scale).collect()
}

fn transform_axes_complex(data: &mut [Complex<f64>], nx: usize, ny: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let fft_x = if inverse {
        planner.plan_fft_inverse(nx)
    } else {
        planner.plan_fft_forward(nx)
    };
    for row in data.chunks_mut(nx) {
        fft_x.process(row);
    }
    if ny > 1 {
        let fft_y = if inverse {
            planner.plan_fft_inverse(ny)
        } else {
            planner.plan_fft_forward(ny)
        };
        let mut col = vec![Complex::new(0.0, 0.0); ny];
        for kx in 0..nx {
            for ky in 0..ny {
                col[ky] = data[ky * nx + kx];
            }
            fft_y.process(&mut col);
            for ky in 0..ny {
                data[ky * nx + kx] = col[ky];
            }
        }
    }
}

fn forward_real(f: &[f64], lift: Lift) -> Vec<f64> {
    match lift {
        Lift::Dirichlet => dst1(f),
        Lift::NoFlux => dct2(f),
        Lift::Periodic => unreachable!(),
    }
}

fn inverse_real(c: &[f64], lift: Lift) -> Vec<f64> {
    match lift {
        // DST-I is self-inverse up to 2/(N+1)
        Lift::Dirichlet => {
            let n = c.len();
            let mut out = dst1(c);
            let s = 2.0 / (n as f64 + 1.0);
            for v in &mut out {
                *v *= s;
            }
            out
        }
        Lift::NoFlux => dct2_inverse(c),
        Lift::Periodic => unreachable!(),
    }
}

fn solve_real_transform(f: &[f64], nx: usize, ny: usize, h: f64, lift: Lift) -> Vec<f64> {
    // forward along x
    let mut coeff = vec![0.0; nx * ny];
    for (row_out, row_in) in coeff.chunks_mut(nx).zip(f.chunks(nx)) {
        row_out.copy_from_slice(&forward_real(row_in, lift));
    }
    // forward along y
    if ny > 1 {
        let mut col = vec![0.0; ny];
        for kx in 0..nx {
            for ky in 0..ny {
                col[ky] = coeff[ky * nx + kx];
            }
            let t = forward_real(&col, lift);
            for ky in 0..ny {
                coeff[ky * nx + kx] = t[ky];
            }
        }
    }
    let mu_x = eigenvalues(nx, h, lift);
    let mu_y = if ny > 1 {
        eigenvalues(ny, h, lift)
    } else {
        vec![0.0]
    };
    for (ky, muy) in mu_y.iter().enumerate() {
        for (kx, mux) in mu_x.iter().enumerate() {
            let mu = mux + muy;
            let idx = ky * nx + kx;
            if mu <= 0.0 {
                coeff[idx] = 0.0;
            } else {
                coeff[idx] /= mu;
            }
        }
    }
    // inverse along y, then x
    if ny > 1 {
        let mut col = vec![0.0; ny];
        for kx in 0..nx {
            for ky in 0..ny {
                col[ky] = coeff[ky * nx + kx];
            }
            let t = inverse_real(&col, lift);
            for ky in 0..ny {
                coeff[ky * nx + kx] = t[ky];
            }
        }
    }
    let mut out = vec![0.0; nx * ny];
    for (row_out, row_in) in out.chunks_mut(nx).zip(coeff.chunks(nx)) {
        row_out.copy_from_slice(&inverse_real(row_in, lift));
    }
    out
}
