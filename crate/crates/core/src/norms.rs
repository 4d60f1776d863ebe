//! Wiener–Sobolev norms `A^s`, their duals `A^{-s}` and `FL^∞`, and the
//! Lions–Paul test-function norm, for fields and phase-space functions.
//!
//! Field weights are `(1+|k|)^s`; phase-space weights are `(1+|X|+|K|)^s`.
//! Integrals are Riemann sums over the spectral grid.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fit::{fit_decay_exponent, DecayFit};
use crate::grid::{forward_transform, sobolev_norm, Axis, AxisTransform, SampledField};
use crate::phase_space::{PhaseGrid, PhaseSpaceFunction};

fn check_order(s: f64) -> Result<()> {
    if !(s >= 0.0 && s.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "norm order must be a finite s >= 0, got {s} (use a_minus_s_norm for negative orders)"
        )));
    }
    Ok(())
}

/// Norms that are computed from the modulus of a spectrum.
pub trait WienerNorms {
    /// `∫ weight^s |f̂|`.
    fn a_s_norm(&self, s: f64) -> Result<f64>;
    /// `sup |f̂| / weight^s`.
    fn a_minus_s_norm(&self, s: f64) -> Result<f64>;
    fn fl_inf_norm(&self) -> f64 {
        self.a_minus_s_norm(0.0).unwrap_or(f64::NAN)
    }
    /// Share of `∫|f̂|` in the outer 10% of the spectral grid.
    fn spectral_tail(&self) -> f64;
}

fn field_weight(k: &[f64], s: f64) -> f64 {
    if s == 0.0 {
        return 1.0;
    }
    let r = k.iter().map(|c| c * c).sum::<f64>().sqrt();
    (1.0 + r).powf(s)
}

impl WienerNorms for SampledField {
    fn a_s_norm(&self, s: f64) -> Result<f64> {
        check_order(s)?;
        Ok(forward_transform(self).weighted_sum(1.0, |k| field_weight(k, s)))
    }

    fn a_minus_s_norm(&self, s: f64) -> Result<f64> {
        check_order(s)?;
        let spec = forward_transform(self);
        let dim = self.grid().dim();
        Ok(spec
            .values()
            .iter()
            .enumerate()
            .map(|(i, v)| v.norm() / field_weight(&self.grid().wavenumber(i)[..dim], s))
            .fold(0.0, f64::max))
    }

    fn spectral_tail(&self) -> f64 {
        forward_transform(self).tail_fraction()
    }
}

impl WienerNorms for PhaseSpaceFunction {
    fn a_s_norm(&self, s: f64) -> Result<f64> {
        check_order(s)?;
        Ok(self.transform().weighted_l1(s))
    }

    fn a_minus_s_norm(&self, s: f64) -> Result<f64> {
        check_order(s)?;
        Ok(self.transform().weighted_sup(s))
    }

    fn spectral_tail(&self) -> f64 {
        self.transform().tail_fraction()
    }
}

pub fn a_s_norm<T: WienerNorms + ?Sized>(f: &T, s: f64) -> Result<f64> {
    f.a_s_norm(s)
}

pub fn a_minus_s_norm<T: WienerNorms + ?Sized>(f: &T, s: f64) -> Result<f64> {
    f.a_minus_s_norm(s)
}

pub fn fl_inf_norm<T: WienerNorms + ?Sized>(f: &T) -> f64 {
    f.fl_inf_norm()
}

/// `∫ sup_x |F_{k→K} φ(x,K)| dK`.
pub fn lions_paul_norm(phi: &PhaseSpaceFunction) -> f64 {
    let grid = phi.grid();
    let (nx, nk) = (grid.first.len(), grid.second.len());
    let t = AxisTransform::new(grid.second);
    let sup = phi
        .values()
        .par_chunks_exact(nk)
        .map(|row| {
            let mut r = row.to_vec();
            t.forward(&mut r);
            r.iter().map(|v| v.norm()).collect::<Vec<f64>>()
        })
        .reduce(
            || vec![0.0; nk],
            |a, b| a.iter().zip(&b).map(|(x, y)| x.max(*y)).collect(),
        );
    debug_assert_eq!(phi.values().len(), nx * nk);
    sup.iter().sum::<f64>() * grid.second.dual().step()
}

/// `‖fg‖_{A^s}` minus the product bound: `‖f‖_{A⁰}‖g‖_{A⁰}` for `s = 0`,
/// `‖f‖_{A¹}‖g‖_{A⁰} + ‖f‖_{A⁰}‖g‖_{A¹}` for `s = 1`.
pub fn algebra_defect(f: &SampledField, g: &SampledField, s: u32) -> Result<f64> {
    if f.grid() != g.grid() {
        return Err(Error::GridMismatch);
    }
    let product: Vec<C64> = f.values().iter().zip(g.values()).map(|(a, b)| a * b).collect();
    let fg = f.with_values(product)?;
    let (f0, g0) = (f.a_s_norm(0.0)?, g.a_s_norm(0.0)?);
    let bound = match s {
        0 => f0 * g0,
        1 => f.a_s_norm(1.0)? * g0 + f0 * g.a_s_norm(1.0)?,
        _ => {
            return Err(Error::Unsupported(format!(
                "the product bound is only available for s = 0 and s = 1, got {s}"
            )))
        }
    };
    Ok(fg.a_s_norm(f64::from(s))? - bound)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormReport {
    pub a0: f64,
    pub a1: f64,
    pub a_minus_1: f64,
    pub fl_inf: f64,
    /// Only defined for phase-space functions.
    pub lions_paul_a: Option<f64>,
    pub h1: f64,
    pub l2: f64,
    pub tail_fraction: f64,
}

impl NormReport {
    /// `‖φ‖_𝒜 ≤ ‖φ‖_{A⁰} ≤ ‖φ‖_{A¹}` up to `slack`.
    pub fn chain_holds(&self, slack: f64) -> bool {
        let lower = self.lions_paul_a.is_none_or(|lp| lp <= self.a0 + slack);
        lower && self.a0 <= self.a1 + slack
    }
}

pub fn field_norm_report(field: &SampledField) -> Result<NormReport> {
    Ok(NormReport {
        a0: field.a_s_norm(0.0)?,
        a1: field.a_s_norm(1.0)?,
        a_minus_1: field.a_minus_s_norm(1.0)?,
        fl_inf: field.fl_inf_norm(),
        lions_paul_a: None,
        h1: sobolev_norm(field, 1.0),
        l2: field.l2_norm(),
        tail_fraction: field.spectral_tail(),
    })
}

/// Norm report of a phase-space function; `h1` uses the weight
/// `1 + 4π²(|X|²+|K|²)`.
pub fn phase_norm_report(phi: &PhaseSpaceFunction) -> NormReport {
    let spec = phi.transform();
    let g = spec.grid();
    let (mut l2, mut h1) = (0.0, 0.0);
    for (i, v) in spec.values().iter().enumerate() {
        let (a, b) = g.point(i);
        let m = v.norm_sqr();
        l2 += m;
        h1 += (1.0 + 4.0 * std::f64::consts::PI.powi(2) * (a * a + b * b)) * m;
    }
    let area = g.cell_area();
    NormReport {
        a0: spec.weighted_l1(0.0),
        a1: spec.weighted_l1(1.0),
        a_minus_1: spec.weighted_sup(1.0),
        fl_inf: spec.weighted_sup(0.0),
        lions_paul_a: Some(lions_paul_norm(phi)),
        h1: (h1 * area).sqrt(),
        l2: (l2 * area).sqrt(),
        tail_fraction: spec.tail_fraction(),
    }
}

/// The phase-space Gaussian `e^{-πR(x²+k²)}` on a grid scaled to resolve it.
pub fn phase_gaussian(r: f64, points: usize) -> Result<PhaseSpaceFunction> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidInput(format!("Gaussian scale must be positive, got {r}")));
    }
    let half = 6.0 / r.sqrt();
    let axis = Axis::centered(points, 2.0 * half / points as f64);
    let grid = PhaseGrid::new(axis, axis);
    Ok(PhaseSpaceFunction::from_fn(grid, |x, k| {
        C64::new((-std::f64::consts::PI * r * (x * x + k * k)).exp(), 0.0)
    }))
}

#[derive(Clone, Debug, Serialize)]
pub struct GaussianA1Scaling {
    /// `(R, ‖φ_R‖_{A¹})` rows.
    pub rows: Vec<(f64, f64)>,
    /// Power-law fit of `‖φ_R‖_{A¹} - 1` against `R`.
    pub excess_fit: DecayFit,
}

impl GaussianA1Scaling {
    /// Fitted exponent `p` in `‖φ_R‖_{A¹} - 1 ∝ R^p`.
    pub fn exponent(&self) -> f64 {
        self.excess_fit.slope
    }
}

/// Measure how `‖φ_R‖_{A¹}` approaches 1 as `R → 0`.
pub fn phase_gaussian_a1_scaling(radii: &[f64]) -> Result<GaussianA1Scaling> {
    let rows: Vec<(f64, f64)> = radii
        .iter()
        .map(|&r| Ok((r, phase_gaussian(r, 256)?.a_s_norm(1.0)?)))
        .collect::<Result<_>>()?;
    let excess: Vec<(f64, f64)> = rows.iter().map(|(r, a)| (*r, a - 1.0)).collect();
    Ok(GaussianA1Scaling {
        rows,
        excess_fit: fit_decay_exponent(&excess)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::free_propagate;
    use crate::grid::make_grid;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn gaussian(n: usize, l: f64) -> SampledField {
        let g = make_grid(1, n, l).unwrap();
        SampledField::from_fn(g, 1.0, |x| C64::new((-PI * x[0] * x[0]).exp(), 0.0)).unwrap()
    }

    /// Trigonometric polynomial with modes `|k| ≤ band` on a 128-point grid, L = 4.
    fn band_limited(coeffs: &[(f64, f64)], band: usize) -> SampledField {
        let g = make_grid(1, 128, 4.0).unwrap();
        SampledField::from_fn(g, 1.0, |x| {
            coeffs
                .iter()
                .enumerate()
                .take(2 * band + 1)
                .map(|(j, (re, im))| {
                    let k = (j as f64 - band as f64) / 8.0;
                    C64::new(*re, *im) * C64::from_polar(1.0, 2.0 * PI * k * x[0])
                })
                .sum()
        })
        .unwrap()
    }

    fn coeff_vec() -> impl Strategy<Value = Vec<(f64, f64)>> {
        prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 21)
    }

    #[test]
    fn gaussian_is_unit_in_wiener_algebra() {
        let f = gaussian(256, 8.0);
        assert!((f.a_s_norm(0.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((f.fl_inf_norm() - 1.0).abs() < 1e-12);
        // A¹: 1 + ∫|k|e^{-πk²} = 1 + 1/π, up to the Riemann error at the kink.
        let fine = gaussian(1024, 64.0);
        assert!((fine.a_s_norm(1.0).unwrap() - (1.0 + 1.0 / PI)).abs() < 1e-4);
        assert!(f.a_s_norm(-1.0).is_err());
        assert!(algebra_defect(&f, &f, 0).unwrap() <= 0.0);
        assert!(algebra_defect(&f, &f, 1).unwrap() <= 0.0);
    }

    #[test]
    fn phase_gaussian_norms() {
        for r in [0.05, 0.5, 2.0, 10.0] {
            let phi = phase_gaussian(r, 256).unwrap();
            let rep = phase_norm_report(&phi);
            assert!((rep.a0 - 1.0).abs() < 1e-10, "R = {r}: {rep:?}");
            let excess = 2.0 * r.sqrt() / PI;
            assert!((rep.a1 - 1.0 - excess).abs() < 1e-2 * excess, "R = {r}: {rep:?}");
            assert!(rep.chain_holds(1e-9));
            let lp = rep.lions_paul_a.unwrap();
            // F_k φ_R peaks at x = 0 for every K, so the first link is an equality.
            assert!((lp - rep.a0).abs() < 1e-12 && rep.a0 < rep.a1, "{rep:?}");
        }
    }

    #[test]
    fn gaussian_a1_excess_exponent() {
        let sc = phase_gaussian_a1_scaling(&[0.01, 0.02, 0.04, 0.08]).unwrap();
        assert!((sc.exponent() - 0.5).abs() < 1e-6, "{}", sc.exponent());
    }

    #[test]
    fn lions_paul_separable() {
        // g(x) = e^{-πx²} (max 1), h(k) = e^{-πk²/4}: ‖ĥ‖_{L¹} = 1.
        let axis = Axis::centered(256, 0.1);
        let phi = PhaseSpaceFunction::from_fn(PhaseGrid::new(axis, axis), |x, k| {
            C64::new((-PI * x * x).exp() * (-PI * k * k / 4.0).exp(), 0.0)
        });
        assert!((lions_paul_norm(&phi) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn weighted_sup_arithmetic() {
        // Spectral peak of unit height at |X|+|K| = 5: A^{-1}/FL^∞ = 1/6.
        let axis = Axis::centered(64, 0.5);
        let grid = PhaseGrid::new(axis, axis);
        let spec = crate::phase_space::PhaseSpectrum::from_fn(grid, |x, k| {
            if x == 3.0 && k == 2.0 {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        assert!((spec.weighted_sup(1.0) - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(spec.weighted_sup(0.0), 1.0);
        let ones = crate::phase_space::PhaseSpectrum::from_fn(grid, |_, _| C64::new(1.0, 0.0));
        assert_eq!(ones.weighted_sup(1.0), 1.0);
    }

    #[test]
    fn free_flow_keeps_a_s() {
        let f = gaussian(256, 8.0);
        let g = free_propagate(&f, 0.7);
        for s in [0.0, 1.0, 2.0] {
            let (a, b) = (f.a_s_norm(s).unwrap(), g.a_s_norm(s).unwrap());
            assert!((a - b).abs() < 1e-12 * a);
        }
    }

    #[test]
    fn mismatched_grids() {
        let f = gaussian(128, 8.0);
        let g = gaussian(256, 8.0);
        assert!(matches!(algebra_defect(&f, &g, 0), Err(Error::GridMismatch)));
        assert!(matches!(algebra_defect(&f, &f, 2), Err(Error::Unsupported(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn product_bounds(a in coeff_vec(), b in coeff_vec()) {
            // Bands of 10 modes keep the product alias-free on 128 points.
            let f = band_limited(&a, 10);
            let g = band_limited(&b, 10);
            prop_assert!(algebra_defect(&f, &g, 0).unwrap() <= 1e-9);
            prop_assert!(algebra_defect(&f, &g, 1).unwrap() <= 1e-9);
        }

        #[test]
        fn homogeneity_and_triangle(a in coeff_vec(), b in coeff_vec(), c in -3.0..3.0f64) {
            let f = band_limited(&a, 10);
            let g = band_limited(&b, 10);
            let cf = f.with_values(f.values().iter().map(|v| v * c).collect()).unwrap();
            let sum = f.combine(C64::new(1.0, 0.0), &g, C64::new(1.0, 0.0)).unwrap();
            for s in [0.0, 1.0] {
                let nf = f.a_s_norm(s).unwrap();
                prop_assert!((cf.a_s_norm(s).unwrap() - c.abs() * nf).abs() <= 1e-9 * (1.0 + nf));
                prop_assert!(sum.a_s_norm(s).unwrap() <= nf + g.a_s_norm(s).unwrap() + 1e-9);
                let mf = f.a_minus_s_norm(s).unwrap();
                prop_assert!((cf.a_minus_s_norm(s).unwrap() - c.abs() * mf).abs() <= 1e-9 * (1.0 + mf));
                prop_assert!(sum.a_minus_s_norm(s).unwrap() <= mf + g.a_minus_s_norm(s).unwrap() + 1e-9);
            }
        }

        #[test]
        fn phase_chain(bumps in prop::collection::vec(
            (-3.0..3.0f64, -1.0..1.0f64, 0.5..1.5f64, 0.2..0.6f64, -1.0..1.0f64), 1..4)) {
            let axis_x = Axis::centered(64, 0.25);
            let axis_k = Axis::centered(64, 0.1);
            let phi = PhaseSpaceFunction::from_fn(PhaseGrid::new(axis_x, axis_k), |x, k| {
                bumps.iter().map(|(cx, ck, wx, wk, amp)| {
                    C64::new(amp * (-PI * (((x - cx) / wx).powi(2) + ((k - ck) / wk).powi(2))).exp(), 0.0)
                }).sum()
            });
            let rep = phase_norm_report(&phi);
            prop_assert!(rep.chain_holds(1e-9), "{:?}", rep);
        }
    }
}
