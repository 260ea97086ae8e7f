use crate::curve::Curve;
use crate::error::{Error, Result};
use crate::grid::{Grid2D, RegionMask, ScalarField};
use crate::vec2::Vec2;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use std::f64::consts::PI;

/// Scalar density per unit arclength carried on a curve.
#[derive(Debug, Clone)]
pub struct LayerDensity {
    pub curve: Curve,
    pub values: Vec<f64>,
}

impl LayerDensity {
    pub fn new(curve: Curve, values: Vec<f64>) -> Result<Self> {
        if values.len() != curve.len() {
            return Err(Error::InvalidInput("density length does not match curve".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("density contains non-finite values".into()));
        }
        Ok(LayerDensity { curve, values })
    }

    pub fn constant(curve: Curve, value: f64) -> Self {
        let n = curve.len();
        LayerDensity { curve, values: vec![value; n] }
    }
}

/// Volume of the unit ball in dimension `n`.
pub fn unit_ball_volume(n: u32) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0,
        2 => PI,
        _ => unit_ball_volume(n - 2) * 2.0 * PI / n as f64,
    }
}

/// Newtonian potential at radius `r`: `-(1/2pi) log r` for `n = 2`,
/// `r^(2-n) / (n (n-2) |B_1|)` for `n >= 3`. Normalized so `-ΔP = δ`.
pub fn newtonian_potential(n: u32, r: f64) -> Result<f64> {
    if r == 0.0 {
        return Err(Error::OriginSingularity);
    }
    if n < 2 {
        return Err(Error::InvalidInput(format!("dimension {n} < 2")));
    }
    Ok(if n == 2 {
        -r.ln() / (2.0 * PI)
    } else {
        let nf = n as f64;
        r.powi(2 - n as i32) / (nf * (nf - 2.0) * unit_ball_volume(n))
    })
}

#[inline]
fn log_kernel(r2: f64) -> f64 {
    -0.25 * r2.ln() / PI
}

/// Gradient of the planar kernel at argument `v`: `(∇P)(v) = -v / (2π |v|²)`.
#[inline]
fn grad_log_kernel(v: Vec2) -> Vec2 {
    v * (-1.0 / (2.0 * PI * v.norm2()))
}

fn check_off_curve(curve: &Curve, x: Vec2) -> Result<()> {
    if curve.min_distance_to(x) < 0.1 * curve.arc_spacing {
        return Err(Error::TooCloseToCurve);
    }
    Ok(())
}

/// Single layer potential `∮ f(y) P(x-y) dH(y)` at an off-curve point,
/// by trapezoidal quadrature with arclength weights.
pub fn single_layer(density: &LayerDensity, x: Vec2) -> Result<f64> {
    check_off_curve(&density.curve, x)?;
    Ok(single_layer_unchecked(density, x))
}

fn single_layer_unchecked(density: &LayerDensity, x: Vec2) -> f64 {
    let w = density.curve.weights();
    let mut acc = 0.0;
    for i in 0..density.curve.len() {
        let r2 = (x - density.curve.vertices[i]).norm2();
        acc += density.values[i] * log_kernel(r2) * w[i];
    }
    acc
}

/// Single layer potential sampled on a grid.
///
/// Values within about two arc spacings of the curve carry O(1) quadrature
/// error; callers sampling near the curve should keep clear of that band.
pub fn single_layer_field(density: &LayerDensity, grid: &Grid2D) -> ScalarField {
    ScalarField::from_fn(grid.clone(), |p| single_layer_unchecked(density, p))
}

/// On-curve values of the single layer potential (the potential is continuous
/// across the curve). Punctured trapezoid rule with an analytic diagonal patch
/// for the logarithmic singularity.
pub fn single_layer_on_curve(density: &LayerDensity) -> LayerDensity {
    let curve = &density.curve;
    let w = curve.weights();
    let m = curve.len();
    let mut out = vec![0.0; m];
    for i in 0..m {
        let mut acc = 0.0;
        for j in 0..m {
            if j == i {
                continue;
            }
            let r2 = (curve.vertices[i] - curve.vertices[j]).norm2();
            acc += density.values[j] * log_kernel(r2) * w[j];
        }
        // local patch: integral of -(1/2pi) ln|s| over (-w_i/2, w_i/2)
        let a = 0.5 * w[i];
        acc += density.values[i] * (-(a * (a.ln() - 1.0)) / PI);
        out[i] = acc;
    }
    LayerDensity { curve: curve.clone(), values: out }
}

/// The principal-value boundary operator `T`:
/// `(Tf)(x) = ∮ f(y) ν(x)·(∇P)(x-y) dH(y)` on curve vertices, with the
/// weakly singular diagonal replaced by its curvature limit `κ(x)/(4π)`.
///
/// `T f` is the mean of the two one-sided outward normal derivatives of the
/// single layer potential of `f`.
pub fn normal_derivative_operator(density: &LayerDensity) -> Result<LayerDensity> {
    let curve = &density.curve;
    let m = curve.len();
    if m < 64 {
        return Err(Error::DegenerateCurve(format!(
            "normal derivative operator needs >= 64 vertices, got {m}"
        )));
    }
    let w = curve.weights();
    let kappa = curve.curvature();
    let mut out = vec![0.0; m];
    for i in 0..m {
        let xi = curve.vertices[i];
        let nu = curve.normals[i];
        let mut acc = 0.0;
        for j in 0..m {
            let k = if j == i {
                kappa[i] / (4.0 * PI)
            } else {
                nu.dot(grad_log_kernel(xi - curve.vertices[j]))
            };
            acc += density.values[j] * k * w[j];
        }
        out[i] = acc;
    }
    Ok(LayerDensity { curve: curve.clone(), values: out })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceSide {
    Out,
    In,
}

/// One-sided outward normal derivative of the single layer potential:
/// `T f - f/2` from outside the enclosed region, `T f + f/2` from inside.
pub fn single_layer_trace(density: &LayerDensity, side: TraceSide) -> Result<LayerDensity> {
    let t = normal_derivative_operator(density)?;
    let sign = match side {
        TraceSide::Out => -0.5,
        TraceSide::In => 0.5,
    };
    let values = t
        .values
        .iter()
        .zip(&density.values)
        .map(|(t, f)| t + sign * f)
        .collect();
    Ok(LayerDensity { curve: density.curve.clone(), values })
}

/// Double layer potential `∮ g(y) d(y)·∇_y P(x-y) dH(y)` with a per-vertex
/// dipole direction field `d` (the transversal field `N` by default).
///
/// For `d = ν` (outward normal) and `g ≡ 1` this evaluates to `-1` inside the
/// curve and `0` outside.
pub fn double_layer(density: &LayerDensity, directions: &[Vec2], x: Vec2) -> Result<f64> {
    check_off_curve(&density.curve, x)?;
    Ok(double_layer_unchecked(density, directions, x))
}

fn double_layer_unchecked(density: &LayerDensity, directions: &[Vec2], x: Vec2) -> f64 {
    let w = density.curve.weights();
    let mut acc = 0.0;
    for i in 0..density.curve.len() {
        // ∇_y P(x-y) = -(∇P)(x-y)
        let k = -directions[i].dot(grad_log_kernel(x - density.curve.vertices[i]));
        acc += density.values[i] * k * w[i];
    }
    acc
}

/// Double layer potential sampled on a grid (same near-curve caveat as
/// [`single_layer_field`]).
pub fn double_layer_field(density: &LayerDensity, directions: &[Vec2], grid: &Grid2D) -> ScalarField {
    ScalarField::from_fn(grid.clone(), |p| double_layer_unchecked(density, directions, p))
}

/// Exact integral of the planar kernel over one grid cell centered at the
/// singularity: `∫_cell -(1/2π) ln|y| dy` for a square cell of side `h`.
pub fn self_cell_integral(h: f64) -> f64 {
    let b = 0.5 * h;
    let log_part = 2.0 * b * b * (2f64.ln() + 2.0 * b.ln() - 3.0 + 0.5 * PI);
    -log_part / (2.0 * PI)
}

/// Volume potential `W(x) = Σ_{nodes in support} f P(x - node) h²` with the
/// self-cell replaced by the exact cell integral of the kernel.
///
/// `ΔW = -f χ_support` holds in the interior to discretization order.
pub fn volume_potential(f: &ScalarField, support: &RegionMask, x: Vec2) -> Result<f64> {
    if f.grid != support.grid {
        return Err(Error::GridMismatch);
    }
    let g = &f.grid;
    let h2 = g.spacing * g.spacing;
    let self_cell = self_cell_integral(g.spacing);
    let mut acc = 0.0;
    for j in 0..g.ny {
        for i in 0..g.nx {
            if !support.at(i, j) {
                continue;
            }
            let r2 = (x - g.pos(i, j)).norm2();
            acc += if r2 < 1e-24 {
                f.at(i, j) * self_cell
            } else {
                f.at(i, j) * log_kernel(r2) * h2
            };
        }
    }
    Ok(acc)
}

/// Volume potential evaluated at every grid node, via FFT convolution.
///
/// Computes exactly the same lattice sum as [`volume_potential`] (up to
/// floating-point roundoff) in `O(N log N)`.
pub fn volume_potential_field(f: &ScalarField, support: &RegionMask) -> Result<ScalarField> {
    if f.grid != support.grid {
        return Err(Error::GridMismatch);
    }
    let g = &f.grid;
    let (nx, ny) = (g.nx, g.ny);
    let px = next_fast_len(2 * nx - 1);
    let py = next_fast_len(2 * ny - 1);
    let h2 = g.spacing * g.spacing;

    let mut src = vec![Complex::new(0.0, 0.0); px * py];
    for j in 0..ny {
        for i in 0..nx {
            if support.at(i, j) {
                src[j * px + i].re = f.at(i, j);
            }
        }
    }

    let mut ker = vec![Complex::new(0.0, 0.0); px * py];
    let self_cell = self_cell_integral(g.spacing);
    for dj in -(ny as isize - 1)..=(ny as isize - 1) {
        let wj = dj.rem_euclid(py as isize) as usize;
        for di in -(nx as isize - 1)..=(nx as isize - 1) {
            let wi = di.rem_euclid(px as isize) as usize;
            let v = if di == 0 && dj == 0 {
                self_cell
            } else {
                let r2 = ((di * di + dj * dj) as f64) * h2;
                log_kernel(r2) * h2
            };
            ker[wj * px + wi].re = v;
        }
    }

    let mut planner = FftPlanner::new();
    fft2(&mut planner, &mut src, px, py, rustfft::FftDirection::Forward);
    fft2(&mut planner, &mut ker, px, py, rustfft::FftDirection::Forward);
    for (a, b) in src.iter_mut().zip(&ker) {
        *a *= *b;
    }
    fft2(&mut planner, &mut src, px, py, rustfft::FftDirection::Inverse);

    let scale = 1.0 / (px * py) as f64;
    let mut out = vec![0.0; nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            out[j * nx + i] = src[j * px + i].re * scale;
        }
    }
    ScalarField::new(g.clone(), out)
}

/// Smallest `m >= n` whose prime factors are all in {2, 3, 5}.
fn next_fast_len(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut k = m;
        for p in [2, 3, 5] {
            while k % p == 0 {
                k /= p;
            }
        }
        if k == 1 {
            return m;
        }
        m += 1;
    }
}

fn fft2(
    planner: &mut FftPlanner<f64>,
    data: &mut [Complex<f64>],
    nx: usize,
    ny: usize,
    dir: rustfft::FftDirection,
) {
    let row_fft = planner.plan_fft(nx, dir);
    row_fft.process(data);
    // columns: transpose, batch-transform, transpose back
    let mut t = vec![Complex::new(0.0, 0.0); nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            t[i * ny + j] = data[j * nx + i];
        }
    }
    let col_fft = planner.plan_fft(ny, dir);
    col_fft.process(&mut t);
    for j in 0..ny {
        for i in 0..nx {
            data[j * nx + i] = t[i * ny + j];
        }
    }
}
