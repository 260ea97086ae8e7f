//! One-dimensional radial oracle for the whole-space obstacle problem.
//!
//! For a radial obstacle `h(r)` the contact set is a centered ball of radius
//! `R` and the solution is explicit outside it. The smooth-fit conditions at
//! `R` reduce the problem to a scalar root find, which doubles as the
//! reference solution for the planar grid solver and as the only supported
//! path for dimensions `n >= 3`.

use crate::error::{Error, Result};
use crate::layerpot::unit_ball_volume;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy)]
pub enum RadialFarField {
    /// Prescribed total mass of `-Δu`.
    Mass(f64),
    /// `n = 2`: prescribed ratio `u / (-log r)` at infinity.
    LogCoefficient(f64),
    /// `n >= 3`: prescribed limit of `u` at infinity.
    Constant(f64),
}

pub struct RadialProblem<'a> {
    pub n: u32,
    pub h: &'a dyn Fn(f64) -> f64,
    pub dh: &'a dyn Fn(f64) -> f64,
    pub far_field: RadialFarField,
    pub r_max: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct RadialSolution {
    /// Contact ball radius; `None` when the contact set is empty.
    pub radius: Option<f64>,
    /// Far-field constant: limit of `u` for `n >= 3`, log-coefficient for `n = 2`.
    pub c: f64,
    pub mass: f64,
    /// `n = 2`: additive constant in `u = kappa - (m/2π) log r` outside the ball.
    /// `n >= 3`: coefficient `B` in `u = c + B r^(2-n)`.
    pub outer_coeff: f64,
}

/// Mass of `-Δu` as a function of the contact radius (boundary flux of `h`).
fn mass_of_radius(p: &RadialProblem, r: f64) -> f64 {
    let n = p.n as f64;
    -n * unit_ball_volume(p.n) * r.powi(p.n as i32 - 1) * (p.dh)(r)
}

/// Far-field constant as a function of the contact radius (smooth fit).
fn c_of_radius(p: &RadialProblem, r: f64) -> f64 {
    if p.n == 2 {
        -r * (p.dh)(r)
    } else {
        (p.h)(r) - r * (p.dh)(r) / (2.0 - p.n as f64)
    }
}

fn bisect(f: impl Fn(f64) -> f64, r_lo: f64, r_hi: f64) -> Result<f64> {
    // scan for a sign change on a log grid, then bisect
    let samples = 400;
    let mut prev_r = r_lo;
    let mut prev_v = f(prev_r);
    let mut bracket = None;
    for k in 1..=samples {
        let r = r_lo * (r_hi / r_lo).powf(k as f64 / samples as f64);
        let v = f(r);
        if prev_v == 0.0 {
            return Ok(prev_r);
        }
        if prev_v * v <= 0.0 {
            bracket = Some((prev_r, r));
            break;
        }
        prev_r = r;
        prev_v = v;
    }
    let (mut a, mut b) = bracket.ok_or_else(|| {
        Error::BisectionFailed("no sign change of the smooth-fit condition".into())
    })?;
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if f(a) * f(mid) <= 0.0 {
            b = mid;
        } else {
            a = mid;
        }
    }
    Ok(0.5 * (a + b))
}

pub fn solve_radial(p: &RadialProblem) -> Result<RadialSolution> {
    if p.n < 2 {
        return Err(Error::InvalidInput("radial oracle needs n >= 2".into()));
    }
    if matches!(p.far_field, RadialFarField::LogCoefficient(_)) && p.n != 2 {
        return Err(Error::InvalidInput("log-coefficient condition is n = 2 only".into()));
    }
    if matches!(p.far_field, RadialFarField::Constant(_)) && p.n == 2 {
        return Err(Error::InvalidInput("constant far field needs n >= 3".into()));
    }
    let r_lo = 1e-8 * p.r_max;

    let target_mass = match p.far_field {
        RadialFarField::Mass(m) => Some(m),
        RadialFarField::LogCoefficient(c) => Some(2.0 * PI * c),
        RadialFarField::Constant(_) => None,
    };

    if let Some(m) = target_mass {
        if m < 0.0 {
            return Err(Error::InvalidInput("mass must be nonnegative".into()));
        }
        if m == 0.0 {
            // no charge: u is the least superharmonic majorant, a constant
            let sup_h = sup_on_grid(p);
            return Ok(RadialSolution {
                radius: None,
                c: if p.n == 2 { 0.0 } else { sup_h },
                mass: 0.0,
                outer_coeff: if p.n == 2 { sup_h } else { 0.0 },
            });
        }
        let r = bisect(|r| mass_of_radius(p, r) - m, r_lo, p.r_max)?;
        return Ok(finish(p, r));
    }

    // prescribed constant, n >= 3: the mass-c relation is monotone
    let c = match p.far_field {
        RadialFarField::Constant(c) => c,
        _ => unreachable!(),
    };
    if sup_on_grid(p) <= c {
        // obstacle never reaches the far-field level: u = c, no contact
        return Ok(RadialSolution { radius: None, c, mass: 0.0, outer_coeff: 0.0 });
    }
    let r = bisect(|r| c_of_radius(p, r) - c, r_lo, p.r_max)?;
    Ok(finish(p, r))
}

fn sup_on_grid(p: &RadialProblem) -> f64 {
    let mut sup = f64::NEG_INFINITY;
    for k in 0..=2000 {
        sup = sup.max((p.h)(p.r_max * k as f64 / 2000.0));
    }
    sup
}

fn finish(p: &RadialProblem, r: f64) -> RadialSolution {
    let mass = mass_of_radius(p, r);
    let c = c_of_radius(p, r);
    let outer_coeff = if p.n == 2 {
        (p.h)(r) + mass / (2.0 * PI) * r.ln()
    } else {
        r.powi(p.n as i32 - 1) * (p.dh)(r) / (2.0 - p.n as f64)
    };
    RadialSolution { radius: Some(r), c, mass, outer_coeff }
}

/// Evaluates the radial solution.
pub fn radial_u(p: &RadialProblem, s: &RadialSolution, r: f64) -> f64 {
    match s.radius {
        None => {
            if p.n == 2 {
                s.outer_coeff
            } else {
                s.c
            }
        }
        Some(rc) => {
            if r <= rc {
                (p.h)(r)
            } else if p.n == 2 {
                s.outer_coeff - s.mass / (2.0 * PI) * r.ln()
            } else {
                s.c + s.outer_coeff * r.powi(2 - p.n as i32)
            }
        }
    }
}
