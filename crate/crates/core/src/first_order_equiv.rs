//! The first-order Lagrangian L̄ equivalent to Einstein–Hilbert, its
//! (regular) Legendre map and the composition check for H̄ = L̄ ∘ FL̄⁻¹.

use crate::eh_lagrangian::{l_coeff_1, l_coeff_2_at, l_zero};
use crate::error::{Error, Result};
use crate::jet_algebra::{pidx, Dual, Jet, Scalar};
use crate::legendre_hamiltonian::{invert_momenta, rank_of};
use nalgebra::{DMatrix, DVector};

pub const NEWTON_TOLERANCE: f64 = 1e-11;
pub const NEWTON_MAX_ITERATIONS: usize = 50;

/// ∂L^{αβ,μν}/∂g_{λσ}, indexed [αβ][μν][λσ] (all pairs ordered).
pub fn d_lmn_dg<T: Scalar>(g: &[T; 10]) -> Result<[[[T; 10]; 10]; 10]> {
    let mut out = [[[T::zero(); 10]; 10]; 10];
    for j in 0..10 {
        let mut gd: [Dual<T>; 10] = g.map(Dual::constant);
        gd[j].eps = T::one();
        let l = l_coeff_2_at(&gd)?;
        for k in 0..10 {
            for p in 0..10 {
                out[k][p][j] = l[k][p].eps;
            }
        }
    }
    Ok(out)
}

/// L̄ = L0 − Σ_{α≤β,λ≤σ} g_{αβ,μ} g_{λσ,ν} ∂L^{αβ,μν}/∂g_{λσ} (μ, ν summed in full).
pub fn lbar<T: Scalar>(jet: &Jet<T>) -> Result<T> {
    let d = d_lmn_dg(&jet.g)?;
    let mut s = l_zero(jet)?;
    for k in 0..10 {
        for m in 0..4 {
            for n in 0..4 {
                let p = pidx(m, n);
                let mut acc = T::zero();
                for j in 0..10 {
                    acc += jet.dg[j][n] * d[k][p][j];
                }
                s -= jet.dg[k][m] * acc;
            }
        }
    }
    Ok(s)
}

/// p̄^{αβ,μ} = L^{αβ,μ} − Σ_{λ≤σ} g_{λσ,ν} ∂L^{λσ,νμ}/∂g_{αβ}.
pub fn first_order_momenta<T: Scalar>(jet: &Jet<T>) -> Result<[[T; 4]; 10]> {
    let d = d_lmn_dg(&jet.g)?;
    let mut out = l_coeff_1(jet)?;
    for k in 0..10 {
        for m in 0..4 {
            for j in 0..10 {
                for n in 0..4 {
                    out[k][m] -= jet.dg[j][n] * d[j][pidx(n, m)][k];
                }
            }
        }
    }
    Ok(out)
}

/// ∂L̄/∂g_{αβ,μ} by forward differentiation.
pub fn first_order_momenta_ad(jet: &Jet<f64>) -> Result<[[f64; 4]; 10]> {
    let base = jet.to_dual();
    let mut out = [[0.0; 4]; 10];
    for k in 0..10 {
        for m in 0..4 {
            let mut j = base;
            j.dg[k][m].eps = 1.0;
            out[k][m] = lbar(&j)?.eps;
        }
    }
    Ok(out)
}

/// ∂p̄/∂(dg), 40 × 40.
pub fn momentum_jacobian(jet: &Jet<f64>) -> Result<DMatrix<f64>> {
    let base = jet.to_dual();
    let mut m = DMatrix::zeros(40, 40);
    for k in 0..10 {
        for i in 0..4 {
            let mut j = base;
            j.dg[k][i].eps = 1.0;
            let p = first_order_momenta(&j)?;
            for r in 0..40 {
                m[(r, k * 4 + i)] = p[r / 4][r % 4].eps;
            }
        }
    }
    Ok(m)
}

pub fn regularity_rank(jet: &Jet<f64>) -> Result<usize> {
    Ok(rank_of(&momentum_jacobian(jet)?))
}

/// Result of inverting the first-order Legendre map at fixed (x, g).
#[derive(Debug, Clone)]
pub struct FirstOrderInverse {
    pub velocities: [[f64; 4]; 10],
    /// H̄ = Σ p̄·g_{,μ} − L̄ at the recovered velocities.
    pub hbar: f64,
    pub iterations: usize,
    pub residual: f64,
}

/// Solve p̄(g, dg) = `pbar` for dg by Newton iteration, starting from the
/// inversion of the second-order momenta.
pub fn invert_first_order(base: &Jet<f64>, pbar: &[[f64; 4]; 10]) -> Result<FirstOrderInverse> {
    let mut jet = *base;
    jet.dg = invert_momenta(&jet.g, pbar)?;
    let target = DVector::from_iterator(40, pbar.iter().flatten().copied());
    let scale = 1.0 + target.amax();
    let mut residual = f64::INFINITY;
    for it in 0..=NEWTON_MAX_ITERATIONS {
        let p = first_order_momenta(&jet)?;
        let r = DVector::from_iterator(40, p.iter().flatten().copied()) - &target;
        residual = r.amax() / scale;
        if residual < NEWTON_TOLERANCE {
            let lb = lbar(&jet)?;
            let mut hbar = -lb;
            for k in 0..10 {
                for m in 0..4 {
                    hbar += pbar[k][m] * jet.dg[k][m];
                }
            }
            return Ok(FirstOrderInverse { velocities: jet.dg, hbar, iterations: it, residual });
        }
        if it == NEWTON_MAX_ITERATIONS {
            break;
        }
        let jac = momentum_jacobian(&jet)?;
        let step = jac.lu().solve(&r).ok_or(Error::NoConvergence { iterations: it, residual })?;
        for k in 0..10 {
            for m in 0..4 {
                jet.dg[k][m] -= step[k * 4 + m];
            }
        }
    }
    Err(Error::NoConvergence { iterations: NEWTON_MAX_ITERATIONS, residual })
}
