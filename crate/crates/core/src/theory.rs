//! Numeric checks of the heat-kernel identities that tie the Gaussian pair
//! energy to the fundamental-solution energy.
//!
//! With `G_d` the fundamental solution and `e^{t Delta}` the heat semigroup:
//!
//! * `C_d(t) = int G_d(0,y) e^{t Delta} delta_0(y) dy` is finite and does not
//!   depend on where the delta sits;
//! * `int G_d(a,y) e^{t Delta} delta_b(y) dy = G_d(a,b) + int_0^t heat(s, |a-b|) ds`;
//! * the renormalized energy `A_d(t, mu_N)` satisfies
//!   `(1/N^2) sum_{i!=j} int_0^t heat = A_d - C_d/N - (1/N^2) sum_{i!=j} G_d`;
//! * the time-integrated heat kernel is bounded below on a set of diameter `D`,
//!   which bounds the Gaussian pair energy by the `G_d` pair energy.
//!
//! Integrals over `R^d` are truncated at [`truncation_radius`].

use std::cell::RefCell;
use std::f64::consts::PI;

use crate::domain::{dist, DomainBox, NodeSet};
use crate::energy::{fundamental_profile, ub_constants, unit_sphere_area};
use crate::error::{invalid, KqError, Result};
use crate::quadrature::{adaptive, adaptive_pieces, breakpoints, tanh_sinh, Tolerance};
use crate::special::{erfc, exp_int_e1};

/// Radius beyond which the heat kernel at time `t` is dropped:
/// `exp(-R^2 / 4t) <= exp(-49)` for `R = 14 sqrt(t)`.
pub fn truncation_radius(t: f64) -> f64 {
    (14.0 * t.sqrt()).max(10.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureTolerances {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Fixed truncation radius; [`truncation_radius`] when `None`.
    pub radius: Option<f64>,
}

impl Default for QuadratureTolerances {
    fn default() -> Self {
        Self::new(1e-10, 1e-10)
    }
}

impl QuadratureTolerances {
    pub fn new(abs_tol: f64, rel_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol,
            radius: None,
        }
    }

    /// Truncation radius for time `t`, checked against `R >= 10 sqrt(t)`.
    pub fn radius_for(&self, t: f64) -> Result<f64> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return invalid("quadrature tolerances must be positive");
        }
        let r = self.radius.unwrap_or_else(|| truncation_radius(t));
        if r < 10.0 * t.sqrt() {
            return invalid(format!("truncation radius {r} is below 10 sqrt(t) for t = {t}"));
        }
        Ok(r)
    }

    fn gk(&self) -> Tolerance {
        Tolerance {
            abs: self.abs_tol,
            rel: self.rel_tol,
            max_intervals: 5000,
        }
    }

    fn inner(&self) -> Self {
        Self {
            abs_tol: self.abs_tol * 1e-2,
            rel_tol: self.rel_tol * 1e-2,
            ..*self
        }
    }
}

fn check_time(t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return invalid(format!("time must be positive, got {t}"));
    }
    Ok(())
}

/// `(4 pi t)^{-d/2} exp(-r^2 / 4t)`.
pub fn heat_kernel(d: usize, t: f64, r: f64) -> Result<f64> {
    check_time(t)?;
    Ok(heat(d, t, r * r))
}

#[inline]
fn heat(d: usize, t: f64, r2: f64) -> f64 {
    (4.0 * PI * t).powf(-(d as f64) / 2.0) * (-r2 / (4.0 * t)).exp()
}

/// `int_0^t heat(s, r) ds`. Closed forms for `d = 2` (`E1(r^2/4t) / 4 pi`)
/// and `d = 3` (`erfc(r / 2 sqrt t) / 4 pi r`); otherwise the equivalent
/// incomplete-gamma integral `r^{2-d} / (4 pi^{d/2}) int_{r^2/4t}^inf u^{d/2-2} e^{-u} du`.
pub fn int_heat_kernel(d: usize, t: f64, r: f64) -> Result<f64> {
    check_time(t)?;
    if !(r > 0.0 && r.is_finite()) {
        return invalid(format!("time-integrated heat kernel diverges at r = {r}"));
    }
    if d == 0 {
        return invalid("dimension must be at least 1");
    }
    let u0 = r * r / (4.0 * t);
    match d {
        2 => Ok(exp_int_e1(u0) / (4.0 * PI)),
        3 => Ok(erfc(r / (2.0 * t.sqrt())) / (4.0 * PI * r)),
        _ => {
            let p = d as f64 / 2.0 - 2.0;
            let upper = u0.max(d as f64) + 80.0;
            let tail = adaptive(|u| u.powf(p) * (-u).exp(), u0, upper, Tolerance::new(0.0, 1e-13))?;
            Ok(r.powf(2.0 - d as f64) / (4.0 * PI.powf(d as f64 / 2.0)) * tail.value)
        }
    }
}

/// The same integral by direct quadrature in `s`, independent of the
/// special-function paths.
pub fn int_heat_kernel_quadrature(d: usize, t: f64, r: f64, tol: &QuadratureTolerances) -> Result<f64> {
    check_time(t)?;
    if !(r > 0.0) {
        return invalid("time-integrated heat kernel diverges at r = 0");
    }
    let r2 = r * r;
    // The integrand peaks at s = r^2 / 2d.
    let pts = breakpoints(0.0, t, &[r2 / (2.0 * d as f64)]);
    Ok(adaptive_pieces(|s| if s > 0.0 { heat(d, s, r2) } else { 0.0 }, &pts, tol.gk())?.value)
}

/// `h_{d,D}(t)`, the tail term of the lower bound on the integrated heat kernel.
pub fn h_function(d: usize, diameter: f64, t: f64) -> Result<f64> {
    if d == 0 {
        return invalid("dimension must be at least 1");
    }
    if !(diameter > 0.0) {
        return invalid("diameter must be positive");
    }
    let df = d as f64;
    let t_min = diameter * diameter / df;
    // D = sqrt(d) squares to d only up to rounding.
    if !(t >= t_min * (1.0 - 4.0 * f64::EPSILON)) {
        return invalid(format!("h needs t >= D^2/d = {t_min}, got {t}"));
    }
    if t <= t_min {
        return Ok(0.0);
    }
    if d == 2 {
        Ok((-0.5f64).exp() * (2.0 * t / (diameter * diameter)).ln())
    } else {
        let e = df / 2.0 - 1.0;
        Ok((-df / 4.0).exp() / (1.0 - df / 2.0) * (t.powf(-e) - df.powf(e) / diameter.powf(df - 2.0)))
    }
}

fn check_c_dim(d: usize) -> Result<()> {
    if d == 2 || d == 3 {
        Ok(())
    } else {
        invalid(format!("C_d(t) is implemented for d in {{2,3}}, got {d}"))
    }
}

fn c_integrand(d: usize, t: f64) -> impl Fn(f64) -> f64 {
    let s_d = unit_sphere_area(d);
    move |rho: f64| {
        if rho <= 0.0 {
            0.0
        } else {
            s_d * fundamental_profile(d, rho) * heat(d, t, rho * rho) * rho.powi(d as i32 - 1)
        }
    }
}

/// `C_d(t)` by radial Gauss–Kronrod quadrature, split at `rho = 1`.
pub fn c_constant(d: usize, t: f64, tol: &QuadratureTolerances) -> Result<f64> {
    check_time(t)?;
    check_c_dim(d)?;
    let r = tol.radius_for(t)?;
    let pts = breakpoints(0.0, r, &[1.0, (2.0 * t).sqrt()]);
    Ok(adaptive_pieces(c_integrand(d, t), &pts, tol.gk())?.value)
}

/// `C_d(t)` by tanh-sinh quadrature on `[0, 1]` and `[1, R]`.
pub fn c_constant_tanh_sinh(d: usize, t: f64, tol: &QuadratureTolerances) -> Result<f64> {
    check_time(t)?;
    check_c_dim(d)?;
    let r = tol.radius_for(t)?;
    let f = c_integrand(d, t);
    let rel = tol.rel_tol.max(1e-14);
    let mut total = 0.0;
    for w in breakpoints(0.0, r, &[1.0]).windows(2) {
        total += tanh_sinh(&f, w[0], w[1], rel)?.value;
    }
    Ok(total)
}

/// Nested adaptive quadrature of `f(x, y)` over a rectangle, with breakpoints
/// on both axes. Inner failures abort the outer integral.
fn integrate_2d<F: Fn(f64, f64) -> f64>(f: F, xs: &[f64], ys: &[f64], tol: &QuadratureTolerances) -> Result<f64> {
    let inner_tol = tol.inner().gk();
    let failure: RefCell<Option<KqError>> = RefCell::new(None);
    let outer = adaptive_pieces(
        |x| {
            if failure.borrow().is_some() {
                return 0.0;
            }
            match adaptive_pieces(|y| f(x, y), ys, inner_tol) {
                Ok(e) => e.value,
                Err(e) => {
                    *failure.borrow_mut() = Some(e);
                    0.0
                }
            }
        },
        xs,
        tol.gk(),
    );
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(outer?.value)
}

/// `int G_2(a, y) heat(t, |y - b|) dy` over `R^2` by Cartesian quadrature on
/// the square of half-width `R` about `b`, with breakpoints through `a` and `b`.
pub fn green_heat_integral(a: [f64; 2], b: [f64; 2], t: f64, tol: &QuadratureTolerances) -> Result<f64> {
    check_time(t)?;
    let r = tol.radius_for(t)?;
    let xs = breakpoints(b[0] - r, b[0] + r, &[a[0], b[0]]);
    let ys = breakpoints(b[1] - r, b[1] + r, &[a[1], b[1]]);
    integrate_2d(
        |x, y| {
            let ra2 = (x - a[0]).powi(2) + (y - a[1]).powi(2);
            let rb2 = (x - b[0]).powi(2) + (y - b[1]).powi(2);
            if ra2 == 0.0 {
                0.0
            } else {
                ra2.ln() / (4.0 * PI) * heat(2, t, rb2)
            }
        },
        &xs,
        &ys,
        tol,
    )
}

/// `C_2(t)` recomputed in Cartesian coordinates about `center`.
pub fn c_constant_about(center: [f64; 2], t: f64, tol: &QuadratureTolerances) -> Result<f64> {
    green_heat_integral(center, center, t, tol)
}

/// `A_2(t, mu_N)` straight from its definition as a 4-dimensional integral.
///
/// With `x = y + u` the integral becomes
/// `int G_2(u) [ int heat(t/2, y + u - x_i) heat(t/2, y - x_j) dy ] du`. The
/// bracket factorizes over coordinates into 1-D integrals, done numerically;
/// the outer `u` integral runs in polar coordinates about the origin.
pub fn a_energy_bruteforce(t: f64, nodes: &NodeSet, tol: &QuadratureTolerances) -> Result<f64> {
    check_time(t)?;
    if nodes.dim() != 2 {
        return invalid("the brute-force renormalized energy is implemented for d = 2");
    }
    let n = nodes.len();
    if n == 0 || n > 3 {
        return invalid(format!(
            "the brute-force renormalized energy takes 1 to 3 nodes, got {n}"
        ));
    }
    nodes.ensure_distinct()?;
    let half = 0.5 * t;
    let r_y = tol.radius_for(half)?;
    let inner_tol = tol.inner().inner().gk();
    let failure: RefCell<Option<KqError>> = RefCell::new(None);

    // int_R g(y + shift) g(y) dy for the 1-D heat factor g at time t/2
    let conv_1d = |shift: f64| -> f64 {
        let g = |z: f64| (4.0 * PI * half).powf(-0.5) * (-z * z / (4.0 * half)).exp();
        let lo = (-shift).min(0.0) - r_y;
        let hi = (-shift).max(0.0) + r_y;
        match adaptive_pieces(|y| g(y + shift) * g(y), &breakpoints(lo, hi, &[-shift, 0.0]), inner_tol) {
            Ok(e) => e.value,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                0.0
            }
        }
    };
    // Pair density of u = x - y, averaged over all ordered (i, j)
    let density = |u: [f64; 2]| -> f64 {
        let mut s = 0.0;
        for xi in nodes.iter() {
            for xj in nodes.iter() {
                s += conv_1d(u[0] + xj[0] - xi[0]) * conv_1d(u[1] + xj[1] - xi[1]);
            }
        }
        s / (n * n) as f64
    };

    let mut offsets = Vec::new();
    for xi in nodes.iter() {
        for xj in nodes.iter() {
            offsets.push([xi[0] - xj[0], xi[1] - xj[1]]);
        }
    }
    let max_offset = offsets.iter().map(|c| c[0].hypot(c[1])).fold(0.0, f64::max);
    let r_u = tol.radius_for(t)? + max_offset;
    let mut radial: Vec<f64> = offsets.iter().map(|c| c[0].hypot(c[1])).collect();
    radial.push(1.0);
    let rho_pts = breakpoints(0.0, r_u, &radial);
    let mut angles: Vec<f64> = offsets
        .iter()
        .filter(|c| c[0] != 0.0 || c[1] != 0.0)
        .map(|c| c[1].atan2(c[0]).rem_euclid(2.0 * PI))
        .collect();
    angles.push(PI);
    let theta_pts = breakpoints(0.0, 2.0 * PI, &angles);

    let outer_tol = tol.gk();
    let radial_tol = tol.inner().gk();
    let value = adaptive_pieces(
        |theta| {
            if failure.borrow().is_some() {
                return 0.0;
            }
            let (s, c) = theta.sin_cos();
            let f = |rho: f64| {
                if rho <= 0.0 {
                    0.0
                } else {
                    rho * fundamental_profile(2, rho) * density([rho * c, rho * s])
                }
            };
            match adaptive_pieces(f, &rho_pts, radial_tol) {
                Ok(e) => e.value,
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    0.0
                }
            }
        },
        &theta_pts,
        outer_tol,
    );
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(value?.value)
}

/// Both sides of the heat-integral identity and their components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Theorem1Sides {
    /// `(1/N^2) sum_{i!=j} int_0^t heat(s, |x_i - x_j|) ds`.
    pub lhs: f64,
    pub a: f64,
    pub c: f64,
    /// `(1/N^2) sum_{i!=j} G_2(x_i, x_j)`.
    pub g_sum: f64,
    /// `a - c/N - g_sum`.
    pub rhs: f64,
}

impl Theorem1Sides {
    pub fn residual(&self) -> f64 {
        (self.lhs - self.rhs).abs() / self.lhs.abs().max(self.rhs.abs())
    }
}

fn pair_sums(nodes: &NodeSet, mut f: impl FnMut(f64) -> Result<f64>) -> Result<f64> {
    let n = nodes.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += f(dist(nodes.point(i), nodes.point(j)))?;
            }
        }
    }
    Ok(s / (n * n) as f64)
}

pub fn theorem1_sides(t: f64, nodes: &NodeSet, tol: &QuadratureTolerances) -> Result<Theorem1Sides> {
    let a = a_energy_bruteforce(t, nodes, tol)?;
    let c = c_constant(2, t, tol)?;
    let lhs = pair_sums(nodes, |r| int_heat_kernel(2, t, r))?;
    let g_sum = pair_sums(nodes, |r| Ok(fundamental_profile(2, r)))?;
    let rhs = a - c / nodes.len() as f64 - g_sum;
    Ok(Theorem1Sides { lhs, a, c, g_sum, rhs })
}

/// Relative residual `|LHS - RHS| / max(|LHS|, |RHS|)` of the identity.
pub fn check_theorem1(t: f64, nodes: &NodeSet, tol: &QuadratureTolerances) -> Result<f64> {
    Ok(theorem1_sides(t, nodes, tol)?.residual())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundSides {
    pub lhs: f64,
    pub rhs: f64,
}

/// Slack allowed when a side of an inequality comes from quadrature.
pub const LEMMA4_SLACK: f64 = 1e-12;
pub const THEOREM2_REL_SLACK: f64 = 1e-2;

/// Both sides of `int_0^t heat(s, alpha) ds >= (4 pi)^{-d/2} [ d^{d/2-1} /
/// (2 D^{d-2}) exp(-d alpha^2 / 4 D^2) + h_{d,D}(t) ]`.
pub fn lemma4_sides(d: usize, diameter: f64, t: f64, alpha: f64) -> Result<BoundSides> {
    if !(alpha > 0.0 && alpha <= diameter) {
        return invalid(format!("alpha must lie in (0, D], got {alpha}"));
    }
    let h = h_function(d, diameter, t)?;
    let df = d as f64;
    let e = df / 2.0 - 1.0;
    let lead = df.powf(e) / (2.0 * diameter.powf(df - 2.0)) * (-df * alpha * alpha / (4.0 * diameter * diameter)).exp();
    Ok(BoundSides {
        lhs: int_heat_kernel(d, t, alpha)?,
        rhs: (4.0 * PI).powf(-df / 2.0) * (lead + h),
    })
}

pub fn check_lemma4_bound(d: usize, diameter: f64, t: f64, alpha: f64) -> Result<bool> {
    let s = lemma4_sides(d, diameter, t, alpha)?;
    Ok(s.lhs - s.rhs >= -LEMMA4_SLACK)
}

/// Both sides of the Gaussian pair-energy bound on the unit square, reusing
/// the quadrature results of [`theorem1_sides`].
pub fn theorem2_sides_from(parts: &Theorem1Sides, t: f64, nodes: &NodeSet, a: f64) -> Result<BoundSides> {
    let d = 2;
    let diameter = DomainBox::new(d)?.diameter();
    if !(a >= (d as f64).sqrt() / (2.0 * diameter)) {
        return invalid(format!("shape a = {a} is below sqrt(d)/(2D)"));
    }
    let consts = ub_constants(d, diameter, t)?;
    let n = nodes.len() as f64;
    let lhs = pair_sums(nodes, |r| Ok((-a * a * r * r).exp()))?;
    let inner = -parts.g_sum + parts.a - parts.c / n - (n - 1.0) / n * consts.h / (4.0 * PI);
    Ok(BoundSides {
        lhs,
        rhs: consts.c_hat * inner,
    })
}

pub fn check_theorem2(t: f64, nodes: &NodeSet, a: f64, tol: &QuadratureTolerances) -> Result<bool> {
    let parts = theorem1_sides(t, nodes, tol)?;
    let s = theorem2_sides_from(&parts, t, nodes, a)?;
    Ok(s.lhs <= s.rhs + THEOREM2_REL_SLACK * s.rhs.abs())
}
