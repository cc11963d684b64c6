use std::f64::consts::{PI, SQRT_2};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{ksum, GridScheme, QuadratureGrid};

use super::radial::RadialProfile;
use super::spike::SpikeLevels;
use super::{WignerEvaluator, WignerKind};

/// Plain Lebesgue norms of a Wigner function on the `α`-plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Norms {
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
}

const TAIL_TOL: f64 = 1e-6;

fn single_mode(w: &WignerEvaluator) -> Result<()> {
    if w.modes() != 1 {
        return Err(Error::Precondition(format!(
            "phase-space quadrature is single-mode; {} has {} modes",
            w.descriptor(),
            w.modes()
        )));
    }
    Ok(())
}

/// Crude estimate of `∫_{|α|>R} |F| dα` from the integrand on the circle `|α| = R`.
fn tail_estimate(f: impl Fn(f64, f64) -> f64, radius: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for j in 0..64 {
        let th = 2.0 * PI * j as f64 / 64.0;
        worst = worst.max(f(SQRT_2 * radius * th.cos(), SQRT_2 * radius * th.sin()).abs());
    }
    2.0 * PI * radius * worst
}

/// `Σ w F(x, p)` over the grid; `F` is integrated against `dα = dx dp / 2`.
fn integrate_grid(grid: &QuadratureGrid, f: &(dyn Fn(f64, f64) -> f64 + Sync)) -> f64 {
    match grid.scheme {
        GridScheme::Radial1D => {
            let radial = grid.radial_nodes();
            let nth = grid.angular_nodes();
            let dth = 2.0 * PI / nth as f64;
            let rows: Vec<f64> = radial
                .par_iter()
                .map(|&(s, w)| {
                    let ring = ksum((0..nth).map(|j| {
                        let th = j as f64 * dth;
                        f(SQRT_2 * s * th.cos(), SQRT_2 * s * th.sin())
                    }));
                    w * ring * dth
                })
                .collect();
            ksum(rows)
        }
        GridScheme::Cartesian2D => {
            let axis = grid.axis_nodes();
            let rows: Vec<f64> = axis
                .par_iter()
                .map(|&(u, wu)| {
                    wu * ksum(axis.iter().map(|&(v, wv)| wv * f(SQRT_2 * u, SQRT_2 * v)))
                })
                .collect();
            ksum(rows)
        }
    }
}

/// `F(ρ,σ) = π ∫ W₁ W₂ dα` on a single-mode grid.
pub fn overlap_quadrature(
    w1: &WignerEvaluator,
    w2: &WignerEvaluator,
    grid: &QuadratureGrid,
) -> Result<f64> {
    single_mode(w1)?;
    single_mode(w2)?;
    let prod = |x: f64, p: f64| w1.eval_xp(x, p) * w2.eval_xp(x, p);
    let tail = tail_estimate(prod, grid.radius);
    if tail > TAIL_TOL {
        return Err(Error::TruncatedSupport {
            radius: grid.radius,
            tail,
        });
    }
    if grid.scheme == GridScheme::Radial1D {
        if let (Some(c1), Some(c2)) = (w1.radial_center(), w2.radial_center()) {
            if c1 == c2 {
                // both depend on |α − c| only: one ray suffices
                let nodes = grid.radial_nodes();
                let s = ksum(nodes.iter().map(|&(s, w)| {
                    let x = c1.0 + SQRT_2 * s;
                    w * w1.eval_xp(x, c1.1) * w2.eval_xp(x, c1.1)
                }));
                return Ok(PI * 2.0 * PI * s);
            }
        }
    }
    Ok(PI * integrate_grid(grid, &prod))
}

/// Lebesgue `(‖W‖₁, ‖W‖₂, ‖W‖∞)` on the grid.
///
/// Rotationally symmetric states are integrated hump by hump between sign changes of
/// the radial profile; spike states use their blob decomposition; anything else is
/// summed over the grid nodes.
pub fn norms_quadrature(w: &WignerEvaluator, grid: &QuadratureGrid) -> Result<Norms> {
    single_mode(w)?;
    let tail = tail_estimate(|x, p| w.eval_xp(x, p), grid.radius);
    if tail > TAIL_TOL {
        return Err(Error::TruncatedSupport {
            radius: grid.radius,
            tail,
        });
    }
    if let WignerKind::Spike(s) = w.kind() {
        let lv = SpikeLevels::new(s);
        let linf = s
            .blobs()
            .iter()
            .map(|b| s.eval(b.center, 0.0).abs())
            .fold(0.0, f64::max);
        return Ok(Norms {
            l1: lv.total(1) / PI,
            l2: (lv.total(2) / PI).sqrt(),
            linf,
        });
    }
    if w.radial_center().is_some() {
        let prof = RadialProfile::new(w, grid.radius, grid.nodes_per_axis)?;
        let (l1, l2, linf) = prof.lebesgue_norms();
        return Ok(Norms { l1, l2, linf });
    }
    let l1 = 0.5 * integrate_grid(grid, &|x, p| w.eval_xp(x, p).abs());
    let l2 = (0.5 * integrate_grid(grid, &|x, p| w.eval_xp(x, p).powi(2))).sqrt();
    let linf = match grid.scheme {
        GridScheme::Radial1D => {
            let nth = grid.angular_nodes();
            let mut m = w.eval_xp(0.0, 0.0).abs();
            for (s, _) in grid.radial_nodes() {
                for j in 0..nth {
                    let th = 2.0 * PI * j as f64 / nth as f64;
                    m = m.max(w.eval_xp(SQRT_2 * s * th.cos(), SQRT_2 * s * th.sin()).abs());
                }
            }
            m
        }
        GridScheme::Cartesian2D => {
            let axis = grid.axis_nodes();
            let mut m: f64 = 0.0;
            for (u, _) in &axis {
                for (v, _) in &axis {
                    m = m.max(w.eval_xp(SQRT_2 * u, SQRT_2 * v).abs());
                }
            }
            m
        }
    };
    Ok(Norms {
        l1: 0.5 * l1,
        l2,
        linf,
    })
}

/// Doubles the per-panel node count from 8 until successive `‖W‖₁` estimates agree to
/// `1e-9` relative; the radius is the state's support radius.
pub fn norms_adaptive(w: &WignerEvaluator) -> Result<(Norms, QuadratureGrid)> {
    let scheme = if w.radial_center().is_some() {
        GridScheme::Radial1D
    } else {
        GridScheme::Cartesian2D
    };
    let mut grid = QuadratureGrid {
        scheme,
        nodes_per_axis: 8,
        radius: w.support_radius(),
    };
    let mut prev = norms_quadrature(w, &grid)?;
    let cap = if scheme == GridScheme::Radial1D { 256 } else { 64 };
    while grid.nodes_per_axis < cap {
        grid = grid.with_nodes(grid.nodes_per_axis * 2);
        let cur = norms_quadrature(w, &grid)?;
        if (cur.l1 - prev.l1).abs() <= 1e-9 * cur.l1.abs().max(1e-300) {
            return Ok((cur, grid));
        }
        prev = cur;
    }
    Err(Error::NoConvergence(format!(
        "L1 norm of {} still moving at {} nodes per panel",
        w.descriptor(),
        grid.nodes_per_axis
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_2_PI;

    #[test]
    fn vacuum_norms() {
        let w = WignerEvaluator::vacuum();
        let (n, _) = norms_adaptive(&w).unwrap();
        assert!((n.l1 - 1.0).abs() < 1e-10);
        assert!((n.linf - FRAC_2_PI).abs() < 1e-12);
        assert!((PI * n.l2 * n.l2 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn small_radius_is_rejected() {
        let w = WignerEvaluator::fock(3);
        let grid = QuadratureGrid::radial(16, 2.0);
        assert!(matches!(
            overlap_quadrature(&w, &w, &grid),
            Err(Error::TruncatedSupport { .. })
        ));
    }

    #[test]
    fn radial_and_cartesian_overlaps_agree() {
        let a = WignerEvaluator::fock(2);
        let b = WignerEvaluator::coherent1(0.8, 0.3).unwrap();
        let r = overlap_quadrature(&a, &b, &QuadratureGrid::radial(16, 10.0)).unwrap();
        let c = overlap_quadrature(&a, &b, &QuadratureGrid::cartesian(16, 10.0)).unwrap();
        let want = super::super::fidelity_closed_form(&a, &b).unwrap();
        assert!((r - want).abs() < 1e-10, "{r} {want}");
        assert!((c - want).abs() < 1e-10, "{c} {want}");
    }
}
