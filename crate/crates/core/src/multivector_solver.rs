//! Acceleration coefficients F_{αβ;μ,ν} of holonomic multivector fields:
//! the U tensor and its pseudo-inverse V, the particular solution F^P, the
//! homogeneous trace condition, the matter term F^m, the field-equation
//! residual and the integrability bracket.

use crate::curvature::{self, inverse, Mat4};
use crate::eh_lagrangian::{hamiltonian, l_coeff_1};
use crate::error::Result;
use crate::jet_algebra::{pidx, random_jet, Jet, MetricJet, Scalar, MULT, PAIRS};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::OnceLock;

/// F[αβ][μ][ν] with (αβ) ordered and (μ, ν) a full symmetric block.
pub type Accel<T> = [[[T; 4]; 4]; 10];

pub fn accel_zero<T: Scalar>() -> Accel<T> {
    [[[T::zero(); 4]; 4]; 10]
}

/// Read the acceleration field a jet actually carries: F = g_{αβ,μν}.
pub fn accel_from_jet<T: Scalar>(jet: &Jet<T>) -> Accel<T> {
    std::array::from_fn(|k| std::array::from_fn(|m| std::array::from_fn(|n| jet.d2g[k][pidx(m, n)])))
}

pub fn accel_combine(a: &Accel<f64>, b: &Accel<f64>, sb: f64) -> Accel<f64> {
    std::array::from_fn(|k| std::array::from_fn(|m| std::array::from_fn(|n| a[k][m][n] + sb * b[k][m][n])))
}

pub fn accel_max_abs(a: &Accel<f64>) -> f64 {
    a.iter().flatten().flatten().fold(0.0, |s, v| s.max(v.abs()))
}

// ------------------------------------------------------------------ U and V

/// U^{αβ,μν,λσ} for ordered (αβ), (λσ) and unrestricted μ, ν; stored
/// [αβ][μ][ν][λσ].
#[derive(Debug, Clone)]
pub struct UTensor {
    pub u: Box<[[[[f64; 10]; 4]; 4]; 10]>,
    pub rho: f64,
}

/// The bracket of the closed form, without the ρ n n /4 prefactor; all
/// indices unrestricted.
pub fn u_bracket(gi: &Mat4<f64>, a: usize, b: usize, m: usize, n: usize, l: usize, s: usize) -> f64 {
    -2.0 * gi[a][b] * gi[l][s] * gi[m][n] + gi[a][l] * gi[b][s] * gi[m][n] + gi[b][l] * gi[a][s] * gi[m][n]
        + gi[a][b] * gi[l][m] * gi[s][n]
        + gi[a][b] * gi[s][m] * gi[l][n]
        + gi[l][s] * gi[a][n] * gi[b][m]
        + gi[l][s] * gi[b][n] * gi[a][m]
        - gi[a][n] * gi[l][m] * gi[b][s]
        - gi[b][n] * gi[l][m] * gi[a][s]
        - gi[a][n] * gi[s][m] * gi[b][l]
        - gi[b][n] * gi[s][m] * gi[a][l]
}

pub fn u_tensor(g: &[f64; 10]) -> Result<UTensor> {
    let inv = inverse(g)?;
    let mut u = Box::new([[[[0.0; 10]; 4]; 4]; 10]);
    for (k, &(a, b)) in PAIRS.iter().enumerate() {
        for m in 0..4 {
            for n in 0..4 {
                for (q, &(l, s)) in PAIRS.iter().enumerate() {
                    u[k][m][n][q] = inv.rho * MULT[k] * MULT[q] * 0.25 * u_bracket(&inv.ginv, a, b, m, n, l, s);
                }
            }
        }
    }
    Ok(UTensor { u, rho: inv.rho })
}

impl UTensor {
    pub fn get(&self, a: usize, b: usize, m: usize, n: usize, l: usize, s: usize) -> f64 {
        self.u[pidx(a, b)][m][n][pidx(l, s)]
    }

    /// U symmetrized over μ ↔ ν.
    pub fn sym(&self, a: usize, b: usize, m: usize, n: usize, l: usize, s: usize) -> f64 {
        0.5 * (self.get(a, b, m, n, l, s) + self.get(a, b, n, m, l, s))
    }

    /// μν-symmetrized components with the ρ n(αβ) n(λσ)/4 factor removed, so
    /// that all six indices can be permuted freely.
    pub fn sym_free(&self, a: usize, b: usize, m: usize, n: usize, l: usize, s: usize) -> f64 {
        self.sym(a, b, m, n, l, s) * 4.0 / (self.rho * crate::jet_algebra::mult(a, b) * crate::jet_algebra::mult(l, s))
    }

    /// Σ_{λ≤σ} F_{λσ;μ,ν} U^{λσ,μν,αβ} over all μ, ν, per ordered (αβ).
    pub fn contract(&self, f: &Accel<f64>) -> [f64; 10] {
        let mut out = [0.0; 10];
        for (k, o) in out.iter_mut().enumerate() {
            let mut s = 0.0;
            for j in 0..10 {
                for m in 0..4 {
                    for n in 0..4 {
                        s += f[j][m][n] * self.u[j][m][n][k];
                    }
                }
            }
            *o = s;
        }
        out
    }
}

/// Worst violation of the two index relations of U over all components:
/// the pair swap U^{αβ,μν,λσ} = U^{λσ,μν,αβ} and the cyclic relation
/// U^{αβ,μν,λσ} = −(U^{αμ,βν,λσ} + U^{αν,βμ,λσ}) on multiplicity-free,
/// μν-symmetrized components.
pub fn u_relation_residuals(u: &UTensor) -> (f64, f64) {
    let (mut swap, mut cyc) = (0.0f64, 0.0f64);
    let scale = 1.0 + u.u.iter().flatten().flatten().flatten().fold(0.0f64, |s, v| s.max(v.abs()));
    for a in 0..4 {
        for b in 0..4 {
            for m in 0..4 {
                for n in 0..4 {
                    for l in 0..4 {
                        for s in 0..4 {
                            swap = swap.max((u.sym(a, b, m, n, l, s) - u.sym(l, s, m, n, a, b)).abs());
                            let c = u.sym_free(a, b, m, n, l, s) + u.sym_free(a, m, b, n, l, s) + u.sym_free(a, n, b, m, l, s);
                            cyc = cyc.max((c * u.rho / 4.0).abs());
                        }
                    }
                }
            }
        }
    }
    (swap / scale, cyc / scale)
}

/// V_{αβμ,abc} with all indices unrestricted and without the 1/n(αβ) packing
/// factor. The last term is g_{αβ}g_{aμ}g_{bc}.
#[allow(clippy::too_many_arguments)]
pub fn v_full(g: &Mat4<f64>, rho: f64, al: usize, be: usize, mu: usize, a: usize, b: usize, c: usize) -> f64 {
    (g[al][mu] * g[be][b] * g[a][c] + 2.0 * g[al][mu] * g[be][c] * g[a][b] + g[al][be] * g[b][mu] * g[a][c]
        - g[al][be] * g[mu][c] * g[a][b]
        - 3.0 * g[al][a] * g[be][c] * g[b][mu]
        - 3.0 * g[al][b] * g[be][c] * g[a][mu]
        + g[al][mu] * g[be][a] * g[b][c]
        + g[al][be] * g[a][mu] * g[b][c])
        / rho
}

/// Packed V_{αβμ,abc}, indexed [αβ][μ][a][b][c].
pub type VTensor = Box<[[[[[f64; 4]; 4]; 4]; 4]; 10]>;

/// Packed V_{αβμ,abc} = v_full / n(αβ) at α ≤ β.
pub fn v_tensor(g: &[f64; 10]) -> Result<VTensor> {
    let inv = inverse(g)?;
    let gm = curvature::full_metric(g);
    let mut v = Box::new([[[[[0.0; 4]; 4]; 4]; 4]; 10]);
    for (k, &(al, be)) in PAIRS.iter().enumerate() {
        for mu in 0..4 {
            for a in 0..4 {
                for b in 0..4 {
                    for c in 0..4 {
                        v[k][mu][a][b][c] = v_full(&gm, inv.rho, al, be, mu, a, b, c) / MULT[k];
                    }
                }
            }
        }
    }
    Ok(v)
}

/// Σ_{α,β} Σ_μ Σ_{λ≤σ,ν} X_{λσ,ν} U^{αβ,μν,λσ} V_{αβμ,abc}, returned per
/// ordered (ab) and c. The (αβ) sum runs over all values, with the packed U
/// and V factors n(αβ) cancelling. Reproduces 3·X_{ab,c}.
pub fn uv_contract(g: &[f64; 10], x: &[[f64; 4]; 10]) -> Result<[[f64; 4]; 10]> {
    let u = u_tensor(g)?;
    // w[αβ][μ] = Σ_{λ≤σ,ν} X U
    let mut w = [[0.0; 4]; 10];
    for k in 0..10 {
        for m in 0..4 {
            let mut s = 0.0;
            for q in 0..10 {
                for n in 0..4 {
                    s += x[q][n] * u.u[k][m][n][q];
                }
            }
            w[k][m] = s;
        }
    }
    let gm = curvature::full_metric(g);
    let mut out = [[0.0; 4]; 10];
    for (o, &(a, b)) in PAIRS.iter().enumerate() {
        for c in 0..4 {
            let mut s = 0.0;
            for al in 0..4 {
                for be in 0..4 {
                    let k = pidx(al, be);
                    for m in 0..4 {
                        // packed V carries 1/n(αβ); undo it for the unordered sum
                        s += w[k][m] * v_full(&gm, u.rho, al, be, m, a, b, c) / MULT[k];
                    }
                }
            }
            out[o][c] = s;
        }
    }
    Ok(out)
}

// ------------------------------------------------------------- F^P and c0

/// F^P_{λσ;μ,ν} = c0 g_{αβ}(Γ^α_{νλ}Γ^β_{μσ} + Γ^α_{νσ}Γ^β_{μλ}).
pub fn f_particular_with<T: Scalar>(jet: &Jet<T>, c0: f64) -> Result<Accel<T>> {
    let inv = inverse(&jet.g)?;
    let gm = curvature::gamma(jet, &inv.ginv);
    // lowered: low[β][μ][σ] = g_{βα}Γ^α_{μσ}
    let mut low = [[[T::zero(); 4]; 4]; 4];
    for b in 0..4 {
        for m in 0..4 {
            for s in 0..4 {
                let mut acc = T::zero();
                for a in 0..4 {
                    acc += jet.g(b, a) * gm[a][m][s];
                }
                low[b][m][s] = acc;
            }
        }
    }
    let mut out = accel_zero();
    for (k, &(l, s)) in PAIRS.iter().enumerate() {
        for m in 0..4 {
            for n in m..4 {
                let mut acc = T::zero();
                for b in 0..4 {
                    acc += low[b][n][l] * gm[b][m][s] + low[b][n][s] * gm[b][m][l];
                }
                let v = acc * c0;
                out[k][m][n] = v;
                out[k][n][m] = v;
            }
        }
    }
    Ok(out)
}

/// F^P with the disambiguated factor [`c0`].
pub fn f_particular<T: Scalar>(jet: &Jet<T>) -> Result<Accel<T>> {
    f_particular_with(jet, c0())
}

/// Outcome of choosing the prefactor of F^P between the two candidates.
#[derive(Debug, Clone, Copy)]
pub struct C0Fit {
    pub c0: f64,
    /// Worst normalised residual for c0 = ½ and c0 = 1.
    pub residual_half: f64,
    pub residual_one: f64,
    /// Unconstrained least-squares optimum over the sample.
    pub least_squares: f64,
}

pub const C0_FIT_SAMPLES: usize = 8;
pub const C0_FIT_SEED: u64 = 0x0c0f;

/// Pick c0 ∈ {½, 1} minimising the field-equation residual of c0·F^P.
pub fn fit_c0(samples: usize, seed: u64) -> Result<C0Fit> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut rh, mut r1) = (0.0f64, 0.0f64);
    let (mut num, mut den) = (0.0, 0.0);
    for _ in 0..samples.max(1) {
        let jet = random_jet(&mut rng, 1);
        let free = hdw_free_terms(&jet.view())?;
        let u = u_tensor(&jet.g)?;
        let cand = u.contract(&f_particular_with(&jet.view(), 1.0)?);
        let scale = 1.0 + free.iter().chain(cand.iter()).fold(0.0f64, |s, v| s.max(v.abs()));
        for k in 0..10 {
            rh = rh.max((free[k] - 0.5 * cand[k]).abs() / scale);
            r1 = r1.max((free[k] - cand[k]).abs() / scale);
            num += free[k] * cand[k];
            den += cand[k] * cand[k];
        }
    }
    let c0 = if r1 <= rh { 1.0 } else { 0.5 };
    Ok(C0Fit { c0, residual_half: rh, residual_one: r1, least_squares: num / den })
}

static C0: OnceLock<C0Fit> = OnceLock::new();

/// The fitted prefactor, determined once per process.
pub fn c0_fit() -> C0Fit {
    *C0.get_or_init(|| fit_c0(C0_FIT_SAMPLES, C0_FIT_SEED).expect("random jets are valid"))
}

pub fn c0() -> f64 {
    c0_fit().c0
}

// ------------------------------------------------------ field equation

/// ∂H/∂g_{αβ} + Σ_{λ≤σ} g_{λσ,μ}(∂L^{αβ,μ}/∂g_{λσ} − ∂L^{λσ,μ}/∂g_{αβ}): the
/// part of the residual that does not involve F.
pub fn hdw_free_terms(jet: &Jet<f64>) -> Result<[f64; 10]> {
    let base = jet.to_dual();
    let mut dh = [0.0; 10];
    // dl1[j][k][m] = ∂L^{k,m}/∂g_j
    let mut dl1 = [[[0.0; 4]; 10]; 10];
    for j in 0..10 {
        let mut jj = base;
        jj.g[j].eps = 1.0;
        dh[j] = hamiltonian(&jj)?.eps;
        let l = l_coeff_1(&jj)?;
        for k in 0..10 {
            for m in 0..4 {
                dl1[j][k][m] = l[k][m].eps;
            }
        }
    }
    let mut out = dh;
    for (k, o) in out.iter_mut().enumerate() {
        for j in 0..10 {
            for m in 0..4 {
                *o += jet.dg[j][m] * (dl1[j][k][m] - dl1[k][j][m]);
            }
        }
    }
    Ok(out)
}

/// Residual of the field equation for F at a 1-jet; with a source the right
/// side is −L_m^{αβ}.
pub fn hdw_residual(jet: &MetricJet, f: &Accel<f64>, source: Option<&[f64; 10]>) -> Result<[f64; 10]> {
    jet.require(1)?;
    let free = hdw_free_terms(&jet.view())?;
    let fu = u_tensor(&jet.g)?.contract(f);
    Ok(std::array::from_fn(|k| free[k] - fu[k] + source.map_or(0.0, |s| s[k])))
}

/// Residual normalised by (1 + largest contributing term).
pub fn hdw_residual_normalized(jet: &MetricJet, f: &Accel<f64>, source: Option<&[f64; 10]>) -> Result<f64> {
    let free = hdw_free_terms(&jet.view())?;
    let fu = u_tensor(&jet.g)?.contract(f);
    let mut scale: f64 = 1.0;
    let mut worst: f64 = 0.0;
    for k in 0..10 {
        let s = source.map_or(0.0, |s| s[k]);
        scale = scale.max(1.0 + free[k].abs().max(fu[k].abs()).max(s.abs()));
        worst = worst.max((free[k] - fu[k] + s).abs());
    }
    Ok(worst / scale)
}

// ------------------------------------------------------- homogeneous part

/// g^{λσ}(F_{ητ;λ,σ} + F_{λσ;η,τ} − F_{λη;τ,σ} − F_{λτ;η,σ}) per ordered (ητ).
pub fn homogeneous_residual(fh: &Accel<f64>, g: &[f64; 10]) -> Result<[f64; 10]> {
    let gi = inverse(g)?.ginv;
    let f = |a: usize, b: usize, m: usize, n: usize| fh[pidx(a, b)][m][n];
    Ok(std::array::from_fn(|k| {
        let (e, t) = PAIRS[k];
        let mut s = 0.0;
        for l in 0..4 {
            for sg in 0..4 {
                s += gi[l][sg] * (f(e, t, l, sg) + f(l, sg, e, t) - f(l, e, t, sg) - f(l, t, e, sg));
            }
        }
        s
    }))
}

/// Coordinates of a symmetric acceleration field: F[k][pair(μν)], 100 numbers.
pub fn accel_to_vec(f: &Accel<f64>) -> DVector<f64> {
    DVector::from_fn(100, |i, _| {
        let (m, n) = PAIRS[i % 10];
        f[i / 10][m][n]
    })
}

pub fn accel_from_vec(v: &DVector<f64>) -> Accel<f64> {
    let mut f = accel_zero();
    for i in 0..100 {
        let (m, n) = PAIRS[i % 10];
        f[i / 10][m][n] = v[i];
        f[i / 10][n][m] = v[i];
    }
    f
}

/// The trace condition as a 10 × 100 matrix on symmetric fields.
pub fn trace_condition_matrix(g: &[f64; 10]) -> Result<DMatrix<f64>> {
    let mut a = DMatrix::zeros(10, 100);
    for i in 0..100 {
        let mut e = DVector::zeros(100);
        e[i] = 1.0;
        let col = homogeneous_residual(&accel_from_vec(&e), g)?;
        for r in 0..10 {
            a[(r, i)] = col[r];
        }
    }
    Ok(a)
}

/// Orthogonal projection of F onto the solutions of the trace condition.
pub fn project_homogeneous(f: &Accel<f64>, g: &[f64; 10]) -> Result<Accel<f64>> {
    let a = trace_condition_matrix(g)?;
    let x = accel_to_vec(f);
    let aat = &a * a.transpose();
    let y = aat.lu().solve(&(&a * &x)).ok_or(crate::error::Error::Inconsistent(f64::NAN))?;
    Ok(accel_from_vec(&(x - a.transpose() * y)))
}

/// F^h = g_{,μν} − F^P read off a jet; on vacuum solutions it satisfies the
/// trace condition.
pub fn section_homogeneous(jet: &MetricJet) -> Result<Accel<f64>> {
    jet.require(2)?;
    let v = jet.view();
    Ok(accel_combine(&accel_from_jet(&v), &f_particular(&v)?, -1.0))
}

// ---------------------------------------------------------------- matter

/// F^m_{λσ;μ,ν} = Σ_{τ,γ} (1/(ρ n(τγ))) g_{λσ}(g_{τμ}g_{γν} − ⅓g_{τγ}g_{μν}) L_m^{τγ},
/// summed over all τ, γ with L_m^{τγ} given per ordered pair.
pub fn f_matter(g: &[f64; 10], lm: &[f64; 10]) -> Result<Accel<f64>> {
    let inv = inverse(g)?;
    let gm = curvature::full_metric(g);
    let l = |t: usize, c: usize| lm[pidx(t, c)] / crate::jet_algebra::mult(t, c);
    // a[μ][ν] = Σ (g_{τμ}g_{γν} − ⅓g_{τγ}g_{μν}) L^{τγ}/n(τγ)
    let mut tr = 0.0;
    let mut a = [[0.0; 4]; 4];
    for t in 0..4 {
        for c in 0..4 {
            tr += gm[t][c] * l(t, c);
        }
    }
    for m in 0..4 {
        for n in 0..4 {
            let mut s = -gm[m][n] * tr / 3.0;
            for t in 0..4 {
                for c in 0..4 {
                    s += gm[t][m] * gm[c][n] * l(t, c);
                }
            }
            a[m][n] = s / inv.rho;
        }
    }
    Ok(std::array::from_fn(|k| {
        let (ls, sg) = PAIRS[k];
        std::array::from_fn(|m| std::array::from_fn(|n| gm[ls][sg] * a[m][n]))
    }))
}

// ----------------------------------------------------------- integrability

/// An acceleration field given as a function of (x, g, dg).
pub trait AccelFn {
    fn eval<T: Scalar>(&self, jet: &Jet<T>) -> Result<Accel<T>>;
}

/// c0 · F^P as a field.
pub struct Particular {
    pub c0: f64,
}

impl AccelFn for Particular {
    fn eval<T: Scalar>(&self, jet: &Jet<T>) -> Result<Accel<T>> {
        f_particular_with(jet, self.c0)
    }
}

/// A field plus a constant acceleration block.
pub struct Shifted<'a, F> {
    pub base: &'a F,
    pub shift: Accel<f64>,
}

impl<F: AccelFn> AccelFn for Shifted<'_, F> {
    fn eval<T: Scalar>(&self, jet: &Jet<T>) -> Result<Accel<T>> {
        let mut f = self.base.eval(jet)?;
        for k in 0..10 {
            for m in 0..4 {
                for n in 0..4 {
                    f[k][m][n] += T::cst(self.shift[k][m][n]);
                }
            }
        }
        Ok(f)
    }
}

/// Coefficients of [X_γ, X_ρ] for X_ν = ∂_ν + g_{αβ,ν}∂/∂g_{αβ} + F_{αβ;μ,ν}∂/∂g_{αβ,μ}.
#[derive(Debug, Clone)]
pub struct Bracket {
    /// F_{αβ;ρ,γ} − F_{αβ;γ,ρ}, the ∂/∂g_{αβ} coefficients.
    pub metric: [f64; 10],
    /// The ∂/∂g_{αβ,μ} coefficients.
    pub velocity: [[f64; 4]; 10],
}

impl Bracket {
    pub fn max_abs(&self) -> f64 {
        self.metric.iter().chain(self.velocity.iter().flatten()).fold(0.0, |s, v| s.max(v.abs()))
    }
}

/// X_ν applied to the components of F, via one directional derivative.
fn apply_x<F: AccelFn>(f: &F, jet: &Jet<f64>, fval: &Accel<f64>, nu: usize) -> Result<Accel<f64>> {
    let mut j = jet.to_dual();
    j.x[nu].eps = 1.0;
    for k in 0..10 {
        j.g[k].eps = jet.dg[k][nu];
        for m in 0..4 {
            j.dg[k][m].eps = fval[k][m][nu];
        }
    }
    let d = f.eval(&j)?;
    Ok(std::array::from_fn(|k| std::array::from_fn(|m| std::array::from_fn(|n| d[k][m][n].eps))))
}

pub fn integrability_bracket<F: AccelFn>(f: &F, jet: &MetricJet, gamma: usize, rho: usize) -> Result<Bracket> {
    jet.require(1)?;
    let v = jet.view();
    let fv = f.eval(&v)?;
    let xg = apply_x(f, &v, &fv, gamma)?;
    let xr = apply_x(f, &v, &fv, rho)?;
    Ok(Bracket {
        metric: std::array::from_fn(|k| fv[k][rho][gamma] - fv[k][gamma][rho]),
        velocity: std::array::from_fn(|k| std::array::from_fn(|m| xg[k][m][rho] - xr[k][m][gamma])),
    })
}

/// Largest bracket coefficient over all pairs (γ, ρ).
pub fn max_bracket<F: AccelFn>(f: &F, jet: &MetricJet) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for g in 0..4 {
        for r in g + 1..4 {
            worst = worst.max(integrability_bracket(f, jet, g, r)?.max_abs());
        }
    }
    Ok(worst)
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::eh_lagrangian::l_coeff_2_at;
    use crate::jet_algebra::MINKOWSKI;
    use crate::metric_dsl::{corpus, prolong_family, MetricFamily};
    use rand::Rng;
    use std::f64::consts::FRAC_PI_2;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(21)
    }

    fn random_accel<R: Rng>(r: &mut R) -> Accel<f64> {
        let v = DVector::from_fn(100, |_, _| r.gen_range(-1.0..1.0));
        accel_from_vec(&v)
    }

    #[test]
    fn minkowski_entries() {
        let u = u_tensor(&MINKOWSKI).unwrap();
        assert_eq!(u.get(0, 0, 0, 0, 0, 0), 0.0);
        assert_eq!(u.get(1, 1, 0, 0, 2, 2), 0.5);
        assert_eq!(u.get(0, 1, 0, 1, 0, 0), -0.5);
    }

    #[test]
    fn u_matches_its_definition() {
        // U^{αβ,μν,λσ} = ∂L^{αβ,μν}/∂g_{λσ} − ∂L^{λσ,ν}/∂g_{αβ,μ}
        let mut r = rng();
        for _ in 0..3 {
            let jet = random_jet(&mut r, 1);
            let v = jet.view();
            let u = u_tensor(&jet.g).unwrap();
            let dl = crate::first_order_equiv::d_lmn_dg(&jet.g).unwrap();
            let base = v.to_dual();
            for k in 0..10 {
                for m in 0..4 {
                    let mut j = base;
                    j.dg[k][m].eps = 1.0;
                    let dl1 = l_coeff_1(&j).unwrap();
                    for n in 0..4 {
                        for q in 0..10 {
                            let want = dl[k][pidx(m, n)][q] - dl1[q][n].eps;
                            assert!((u.u[k][m][n][q] - want).abs() < 1e-10 * (1.0 + want.abs()));
                        }
                    }
                }
            }
            let _ = l_coeff_2_at(&jet.g).unwrap();
        }
    }

    #[test]
    fn u_relations() {
        let mut r = rng();
        for _ in 0..50 {
            let u = u_tensor(&random_jet(&mut r, 0).g).unwrap();
            let (swap, cyc) = u_relation_residuals(&u);
            assert!(swap < 1e-12 && cyc < 1e-12, "{swap} {cyc}");
        }
    }

    #[test]
    fn literal_antisymmetry_does_not_hold() {
        let u = u_tensor(&MINKOWSKI).unwrap();
        let mut worst: f64 = 0.0;
        for a in 0..4 {
            for b in 0..4 {
                for m in 0..4 {
                    for n in 0..4 {
                        worst = worst.max((u.sym_free(a, b, m, n, 1, 2) + u.sym_free(a, m, b, n, 1, 2)).abs());
                    }
                }
            }
        }
        assert!(worst > 0.1);
    }

    fn check_uv(g: &[f64; 10], x: &[[f64; 4]; 10], tol: f64) {
        let out = uv_contract(g, x).unwrap();
        let scale = 1.0 + x.iter().flatten().fold(0.0f64, |s, v| s.max(v.abs()));
        for k in 0..10 {
            for c in 0..4 {
                assert!((out[k][c] - 3.0 * x[k][c]).abs() < tol * scale, "{k} {c} {} {}", out[k][c], x[k][c]);
            }
        }
    }

    #[test]
    fn uv_contraction() {
        let mut r = rng();
        for k in 0..10 {
            for c in 0..4 {
                let mut x = [[0.0; 4]; 10];
                x[k][c] = 1.0;
                check_uv(&MINKOWSKI, &x, 1e-12);
            }
        }
        for _ in 0..30 {
            let jet = random_jet(&mut r, 1);
            check_uv(&jet.g, &jet.dg, 1e-10);
        }
    }

    #[test]
    fn particular_solution() {
        let fit = c0_fit();
        assert_eq!(fit.c0, 1.0);
        assert!(fit.residual_one < 1e-10 && fit.residual_half > 1e-2);
        assert!((fit.least_squares - 1.0).abs() < 1e-8);
        let mut r = rng();
        let mut c = random_jet(&mut r, 1);
        c.dg = [[0.0; 4]; 10];
        assert_eq!(accel_max_abs(&f_particular(&c.view()).unwrap()), 0.0);
        assert_eq!(hdw_residual(&c, &accel_zero(), None).unwrap(), [0.0; 10]);
        for _ in 0..30 {
            let jet = random_jet(&mut r, 1);
            let fp = f_particular(&jet.view()).unwrap();
            for k in 0..10 {
                for m in 0..4 {
                    for n in 0..4 {
                        assert_eq!(fp[k][m][n], fp[k][n][m]);
                    }
                }
            }
            assert!(hdw_residual_normalized(&jet, &fp, None).unwrap() < 1e-8);
            let fh = project_homogeneous(&random_accel(&mut r), &jet.g).unwrap();
            let total = accel_combine(&fp, &fh, 1.0);
            assert!(hdw_residual_normalized(&jet, &total, None).unwrap() < 1e-8);
        }
    }

    #[test]
    fn homogeneous_lemma() {
        let mut r = rng();
        assert_eq!(homogeneous_residual(&accel_zero(), &MINKOWSKI).unwrap(), [0.0; 10]);
        for _ in 0..30 {
            let g = random_jet(&mut r, 0).g;
            let u = u_tensor(&g).unwrap();
            let fh = project_homogeneous(&random_accel(&mut r), &g).unwrap();
            assert!(homogeneous_residual(&fh, &g).unwrap().iter().all(|v| v.abs() < 1e-10));
            assert!(u.contract(&fh).iter().all(|v| v.abs() < 1e-8));
            // a field that violates the condition is detected by U
            let bad = random_accel(&mut r);
            let tr = homogeneous_residual(&bad, &g).unwrap();
            let fu = u.contract(&bad);
            let scale = 1.0 + accel_max_abs(&bad);
            assert!(tr.iter().any(|v| v.abs() > 1e-3 * scale));
            assert!(fu.iter().any(|v| v.abs() > 1e-3 * scale));
        }
    }

    #[test]
    fn trace_map_and_u_map_have_equal_kernels() {
        let mut r = rng();
        let g = random_jet(&mut r, 0).g;
        let a = trace_condition_matrix(&g).unwrap();
        let u = u_tensor(&g).unwrap();
        let mut b = DMatrix::zeros(10, 100);
        for i in 0..100 {
            let mut e = DVector::zeros(100);
            e[i] = 1.0;
            let col = u.contract(&accel_from_vec(&e));
            for k in 0..10 {
                b[(k, i)] = col[k];
            }
        }
        let rank = crate::legendre_hamiltonian::rank_of;
        assert_eq!(rank(&a), 10);
        assert_eq!(rank(&b), 10);
        let mut stacked = DMatrix::zeros(20, 100);
        stacked.view_mut((0, 0), (10, 100)).copy_from(&a);
        stacked.view_mut((10, 0), (10, 100)).copy_from(&b);
        assert_eq!(rank(&stacked), 10);
    }

    #[test]
    fn section_extraction() {
        let schw = MetricFamily::from_json(corpus::SCHWARZSCHILD).unwrap();
        for p in [[0.0, 3.0, FRAC_PI_2, 0.0], [0.5, 6.0, 1.0, 0.3]] {
            let jet = prolong_family(&schw, p, 3).unwrap();
            let fh = section_homogeneous(&jet).unwrap();
            assert!(homogeneous_residual(&fh, &jet.g).unwrap().iter().all(|v| v.abs() < 1e-8));
        }
        let ns = prolong_family(&MetricFamily::from_json(corpus::NON_SOLUTION).unwrap(), [0.2, 0.8, 0.0, 0.0], 3).unwrap();
        let fh = section_homogeneous(&ns).unwrap();
        assert!(homogeneous_residual(&fh, &ns.g).unwrap().iter().any(|v| v.abs() > 1e-3));
    }

    #[test]
    fn matter_term() {
        let mut r = rng();
        assert_eq!(accel_max_abs(&f_matter(&MINKOWSKI, &[0.0; 10]).unwrap()), 0.0);
        // single entry L_m^{00} = 1 at η: F_{λσ;μ,ν} = η_{λσ}(δ⁰_μδ⁰_ν + ⅓η_{μν})
        let mut lm = [0.0; 10];
        lm[0] = 1.0;
        let f = f_matter(&MINKOWSKI, &lm).unwrap();
        assert!((f[pidx(1, 1)][0][0] - (1.0 - 1.0 / 3.0)).abs() < 1e-15);
        assert!((f[pidx(1, 1)][2][2] - 1.0 / 3.0).abs() < 1e-15);
        assert!((f[0][0][0] + (1.0 - 1.0 / 3.0)).abs() < 1e-15);
        assert_eq!(f[pidx(0, 1)][0][0], 0.0);
        for _ in 0..50 {
            let g = random_jet(&mut r, 0).g;
            let lm: [f64; 10] = std::array::from_fn(|_| r.gen_range(-1.0..1.0));
            let back = u_tensor(&g).unwrap().contract(&f_matter(&g, &lm).unwrap());
            for k in 0..10 {
                assert!((back[k] - lm[k]).abs() < 1e-9);
            }
            // with a source, F^P + F^m (+ F^h) solves the sourced equation
            let mut jet = random_jet(&mut r, 1);
            jet.g = g;
            let f = accel_combine(&f_particular(&jet.view()).unwrap(), &f_matter(&g, &lm).unwrap(), 1.0);
            let fh = project_homogeneous(&random_accel(&mut r), &g).unwrap();
            let f = accel_combine(&f, &fh, 1.0);
            assert!(hdw_residual_normalized(&jet, &f, Some(&lm)).unwrap() < 1e-8);
        }
    }

    #[test]
    fn particular_field_is_integrable() {
        let mut r = rng();
        let fp = Particular { c0: c0() };
        for _ in 0..30 {
            let jet = random_jet(&mut r, 1);
            assert!(max_bracket(&fp, &jet).unwrap() < 1e-8);
        }
    }

    /// F with an antisymmetric (μν) part: the metric block is exactly that part.
    struct Skewed;
    impl AccelFn for Skewed {
        fn eval<T: Scalar>(&self, jet: &Jet<T>) -> Result<Accel<T>> {
            let mut f = f_particular_with(jet, 1.0)?;
            for k in 0..10 {
                f[k][0][1] += jet.g[k] * 0.5;
                f[k][1][0] -= jet.g[k] * 0.5;
            }
            Ok(f)
        }
    }

    #[test]
    fn bracket_detects_asymmetry() {
        let jet = random_jet(&mut rng(), 1);
        let b = integrability_bracket(&Skewed, &jet, 0, 1).unwrap();
        for k in 0..10 {
            assert!((b.metric[k] + jet.g[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn shifted_bracket_matches_expansion() {
        let mut r = rng();
        let base = Particular { c0: 1.0 };
        for _ in 0..5 {
            let jet = random_jet(&mut r, 1);
            let shift = random_accel(&mut r);
            let f = Shifted { base: &base, shift };
            let v = jet.view();
            let fv = f.eval(&v).unwrap();
            // explicit partial derivatives of F in every coordinate
            let mut dfg = vec![accel_zero::<f64>(); 10];
            let mut dfd = vec![vec![accel_zero::<f64>(); 4]; 10];
            for j in 0..10 {
                let mut jj = v.to_dual();
                jj.g[j].eps = 1.0;
                let d = f.eval(&jj).unwrap();
                dfg[j] = std::array::from_fn(|k| std::array::from_fn(|m| std::array::from_fn(|n| d[k][m][n].eps)));
                for nu in 0..4 {
                    let mut jj = v.to_dual();
                    jj.dg[j][nu].eps = 1.0;
                    let d = f.eval(&jj).unwrap();
                    dfd[j][nu] = std::array::from_fn(|k| std::array::from_fn(|m| std::array::from_fn(|n| d[k][m][n].eps)));
                }
            }
            for (ga, rh) in [(0, 1), (1, 3), (2, 3)] {
                let b = integrability_bracket(&f, &jet, ga, rh).unwrap();
                assert!(b.metric.iter().all(|&x| x == 0.0));
                for k in 0..10 {
                    for m in 0..4 {
                        let mut want = 0.0;
                        for j in 0..10 {
                            want += jet.dg[j][ga] * dfg[j][k][m][rh] - jet.dg[j][rh] * dfg[j][k][m][ga];
                            for nu in 0..4 {
                                want += fv[j][nu][ga] * dfd[j][nu][k][m][rh] - fv[j][nu][rh] * dfd[j][nu][k][m][ga];
                            }
                        }
                        assert!((b.velocity[k][m] - want).abs() < 1e-10 * (1.0 + want.abs()));
                    }
                }
            }
        }
    }
}
