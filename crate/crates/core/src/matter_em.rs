//! Energy-matter sources: the electromagnetic Lagrangian ρF_{μν}F^{μν}, its
//! source tensor L_m^{αβ}, the stress-energy-momentum tensor, the sourced
//! constraint functions and the degree probe for Lagrangians on J²π.

use crate::curvature::{self, inverse, Mat4};
use crate::eh_lagrangian::{euler_lagrange, lagrangian};
use crate::error::{Error, Result};
use crate::jet_algebra::{mult, pidx, random_jet, Dual, Jet, MetricJet, Scalar, TaylorJet, MULT, PAIRS};
use crate::metric_dsl::{taylor_metric_jet, MetricFamily};
use crate::multivector_solver::{self as mv, Accel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EMField {
    /// F_{μν}, antisymmetric.
    pub f: [[f64; 4]; 4],
    /// Speed of light.
    pub c: f64,
    /// Newton's constant.
    pub g_newton: f64,
}

impl EMField {
    /// Build from the upper triangle; the lower one is filled by antisymmetry.
    pub fn from_upper(entries: &[((usize, usize), f64)]) -> Result<Self> {
        let mut f = [[0.0; 4]; 4];
        for &((a, b), v) in entries {
            if a > 3 || b > 3 {
                return Err(Error::IndexOutOfRange(a.max(b)));
            }
            if a == b {
                return Err(Error::Input(format!("F{a}{b} must vanish")));
            }
            f[a][b] = v;
            f[b][a] = -v;
        }
        Ok(Self { f, c: 1.0, g_newton: 1.0 })
    }

    pub fn from_matrix(f: [[f64; 4]; 4]) -> Result<Self> {
        for a in 0..4 {
            for b in 0..4 {
                if f[a][b] != -f[b][a] {
                    return Err(Error::Input(format!("F is not antisymmetric at ({a},{b})")));
                }
            }
        }
        Ok(Self { f, c: 1.0, g_newton: 1.0 })
    }

    pub fn with_constants(mut self, c: f64, g_newton: f64) -> Self {
        self.c = c;
        self.g_newton = g_newton;
        self
    }

    /// 8πG/c⁴.
    pub fn kappa(&self) -> f64 {
        8.0 * PI * self.g_newton / self.c.powi(4)
    }
}

/// ρ F_{μν}F^{μν}.
pub fn em_lagrangian<T: Scalar>(g: &[T; 10], f: &[[T; 4]; 4]) -> Result<T> {
    let inv = inverse(g)?;
    let gi = &inv.ginv;
    let mut s = T::zero();
    for m in 0..4 {
        for n in 0..4 {
            let mut up = T::zero();
            for a in 0..4 {
                for b in 0..4 {
                    up += gi[m][a] * gi[n][b] * f[a][b];
                }
            }
            s += f[m][n] * up;
        }
    }
    Ok(inv.rho * s)
}

/// L_m^{αβ} = ∂L_m/∂g_{αβ} in ordered-pair coordinates.
pub fn em_source<T: Scalar>(g: &[T; 10], f: &[[T; 4]; 4]) -> Result<[T; 10]> {
    let fd = f.map(|r| r.map(Dual::constant));
    let mut out = [T::zero(); 10];
    for (k, o) in out.iter_mut().enumerate() {
        let gd: [Dual<T>; 10] = std::array::from_fn(|j| Dual::new(g[j], if j == k { T::one() } else { T::zero() }));
        *o = em_lagrangian(&gd, &fd)?.eps;
    }
    Ok(out)
}

/// T_{μν} = (c⁴/(8πGρ)) Σ_{α,β} g_{αμ}g_{βν} L_m^{αβ}/n(αβ), the (α, β) sum
/// running over all values.
pub fn stress_energy(g: &[f64; 10], em: &EMField) -> Result<Mat4<f64>> {
    let lm = em_source(g, &em.f)?;
    let rho = inverse(g)?.rho;
    Ok(lower_source(g, &lm, 1.0 / (em.kappa() * rho)))
}

/// s · Σ_{α,β} g_{αμ}g_{βν} L^{αβ}/n(αβ).
fn lower_source(g: &[f64; 10], l: &[f64; 10], s: f64) -> Mat4<f64> {
    let gm = curvature::full_metric(g);
    let mut t = [[0.0; 4]; 4];
    for m in 0..4 {
        for n in m..4 {
            let mut acc = 0.0;
            for a in 0..4 {
                for b in 0..4 {
                    acc += gm[a][m] * gm[b][n] * l[pidx(a, b)] / mult(a, b);
                }
            }
            t[m][n] = s * acc;
            t[n][m] = s * acc;
        }
    }
    t
}

/// (c⁴/4πG)(¼g_{μν}F^{αβ}F_{αβ} − g^{αβ}F_{μα}F_{νβ}).
pub fn stress_energy_closed(g: &[f64; 10], em: &EMField) -> Result<Mat4<f64>> {
    let inv = inverse(g)?;
    let gm = curvature::full_metric(g);
    let f2 = em_lagrangian(g, &em.f)? / inv.rho;
    let pre = em.c.powi(4) / (4.0 * PI * em.g_newton);
    Ok(std::array::from_fn(|m| {
        std::array::from_fn(|n| {
            let mut s = 0.0;
            for a in 0..4 {
                for b in 0..4 {
                    s += inv.ginv[a][b] * em.f[m][a] * em.f[n][b];
                }
            }
            pre * (0.25 * gm[m][n] * f2 - s)
        })
    }))
}

/// g^{μν}T_{μν}.
pub fn trace(g: &[f64; 10], t: &Mat4<f64>) -> Result<f64> {
    let gi = inverse(g)?.ginv;
    Ok((0..16).map(|i| gi[i / 4][i % 4] * t[i / 4][i % 4]).sum())
}

/// G_{μν} − (8πG/c⁴)T_{μν} at a 2-jet.
pub fn sourced_einstein_residual(jet: &MetricJet, em: &EMField) -> Result<Mat4<f64>> {
    jet.require(2)?;
    let p = curvature::pack(&jet.view())?;
    let gm = curvature::full_metric(&jet.g);
    let t = stress_energy(&jet.g, em)?;
    let k = em.kappa();
    Ok(std::array::from_fn(|m| {
        std::array::from_fn(|n| {
            let mut s = 0.0;
            for a in 0..4 {
                for b in 0..4 {
                    s += gm[m][a] * gm[n][b] * p.einstein_upper[a][b];
                }
            }
            s - k * t[m][n]
        })
    }))
}

/// The same residual written through the Euler–Lagrange expressions:
/// −Σ g_{αμ}g_{βν}(L^{αβ} + κ'L_m^{αβ})/(ρ n(αβ)), with κ' rescaling L_m to
/// the units in which T carries c⁴/(8πG).
pub fn sourced_einstein_from_euler_lagrange(jet: &MetricJet, em: &EMField) -> Result<Mat4<f64>> {
    let el = euler_lagrange(&jet.view())?;
    let lm = em_source(&jet.g, &em.f)?;
    let rho = inverse(&jet.g)?.rho;
    let total: [f64; 10] = std::array::from_fn(|k| el[k] + lm[k]);
    Ok(lower_source(&jet.g, &total, -1.0 / rho))
}

/// The sourced constraint functions on a family: L_S^{αβ} = L^{αβ} + L_m^{αβ}
/// and D_τ L_S^{αβ}. The momentum constraints are those of the vacuum, since
/// L_m depends on the metric only.
#[derive(Debug, Clone)]
pub struct SourcedConstraints {
    pub einstein: [f64; 10],
    /// [pair][τ]
    pub d_einstein: [[f64; 4]; 10],
}

impl SourcedConstraints {
    pub fn max_einstein(&self) -> f64 {
        self.einstein.iter().fold(0.0, |s, v| s.max(v.abs()))
    }

    pub fn max_d_einstein(&self) -> f64 {
        self.d_einstein.iter().flatten().fold(0.0, |s, v| s.max(v.abs()))
    }
}

/// Evaluates the constraints through Taylor expansions of the section, so
/// the x-dependence of F_{μν} enters D_τ.
pub fn sourced_constraints(fam: &MetricFamily, point: [f64; 4]) -> Result<SourcedConstraints> {
    type T = TaylorJet<35>;
    let jet: Jet<T> = taylor_metric_jet(fam, point, 3)?;
    let el = euler_lagrange(&jet)?;
    let lm: [T; 10] = if fam.has_em_field() { em_source(&jet.g, &fam.em_jets::<35>(point, 3)?)? } else { [T::constant(0.0, 3)?; 10] };
    let mut out = SourcedConstraints { einstein: [0.0; 10], d_einstein: [[0.0; 4]; 10] };
    for k in 0..10 {
        let s = el[k] + lm[k];
        out.einstein[k] = s.value();
        for t in 0..4 {
            out.d_einstein[k][t] = s.partial(t).value();
        }
    }
    Ok(out)
}

/// The acceleration field displayed for the electromagnetic example:
/// g_{λσ}(Γ^λ_{να}Γ^σ_{μβ} + Γ^λ_{νβ}Γ^σ_{μα})
/// + (c⁴/4πG) g_{αβ}(g^{λσ}F_{μλ}F_{νσ} − (5/4)g_{μν}F_{λσ}F^{λσ}).
pub fn literal_em_accel(jet: &MetricJet, em: &EMField) -> Result<Accel<f64>> {
    let v = jet.view();
    let fp = mv::f_particular_with(&v, 1.0)?;
    let inv = inverse(&jet.g)?;
    let gm = curvature::full_metric(&jet.g);
    let f2 = em_lagrangian(&jet.g, &em.f)? / inv.rho;
    let pre = em.c.powi(4) / (4.0 * PI * em.g_newton);
    let mut b = [[0.0; 4]; 4];
    for m in 0..4 {
        for n in 0..4 {
            let mut s = 0.0;
            for l in 0..4 {
                for sg in 0..4 {
                    s += inv.ginv[l][sg] * em.f[m][l] * em.f[n][sg];
                }
            }
            b[m][n] = pre * (s - 1.25 * gm[m][n] * f2);
        }
    }
    Ok(std::array::from_fn(|k| {
        let (a, bb) = PAIRS[k];
        std::array::from_fn(|m| std::array::from_fn(|n| fp[k][m][n] + gm[a][bb] * b[m][n]))
    }))
}

/// Normalised sourced field-equation residual of [`literal_em_accel`].
pub fn literal_em_residual(jet: &MetricJet, em: &EMField) -> Result<f64> {
    let lm = em_source(&jet.g, &em.f)?;
    mv::hdw_residual_normalized(jet, &literal_em_accel(jet, em)?, Some(&lm))
}

/// Normalised residual of F^P + F^m for the same source.
pub fn canonical_em_residual(jet: &MetricJet, em: &EMField) -> Result<f64> {
    let lm = em_source(&jet.g, &em.f)?;
    let f = mv::accel_combine(&mv::f_particular(&jet.view())?, &mv::f_matter(&jet.g, &lm)?, 1.0);
    mv::hdw_residual_normalized(jet, &f, Some(&lm))
}

// ------------------------------------------------------------ degree probe

/// A Lagrangian density on J²π.
pub trait Lagrangian {
    fn eval<T: Scalar>(&self, jet: &Jet<T>) -> Result<T>;
}

/// The Einstein–Hilbert density ρR.
pub struct Vacuum;

impl Lagrangian for Vacuum {
    fn eval<T: Scalar>(&self, jet: &Jet<T>) -> Result<T> {
        lagrangian(jet)
    }
}

/// ρF_{μν}F^{μν} with F frozen.
pub struct Electromagnetic(pub EMField);

impl Lagrangian for Electromagnetic {
    fn eval<T: Scalar>(&self, jet: &Jet<T>) -> Result<T> {
        em_lagrangian(&jet.g, &self.0.f.map(|r| r.map(T::cst)))
    }
}

/// L_V + L_m.
pub struct Sum<A, B>(pub A, pub B);

impl<A: Lagrangian, B: Lagrangian> Lagrangian for Sum<A, B> {
    fn eval<T: Scalar>(&self, jet: &Jet<T>) -> Result<T> {
        Ok(self.0.eval(jet)? + self.1.eval(jet)?)
    }
}

/// f^{αβ,μν} (100 values, [pair][pair]) followed by f^{αβ,μ} (40 values,
/// [pair][μ]) at a 3-jet given as (jet, d3g).
pub fn momentum_coefficients<T: Scalar, L: Lagrangian>(lag: &L, jet: &Jet<T>, d3g: &[[T; 20]; 10]) -> Result<Vec<T>> {
    let base = jet.to_dual();
    let mut out = Vec::with_capacity(140);
    for k in 0..10 {
        for p in 0..10 {
            let mut j = base;
            j.d2g[k][p].eps = T::one();
            out.push(lag.eval(&j)?.eps * (1.0 / MULT[p]));
        }
    }
    let tot: Vec<Jet<Dual<Dual<T>>>> = (0..4).map(|n| jet.seed_total(n, Some(d3g)).to_dual()).collect();
    for k in 0..10 {
        for m in 0..4 {
            let mut j = base;
            j.dg[k][m].eps = T::one();
            let mut v = lag.eval(&j)?.eps;
            for (n, t) in tot.iter().enumerate() {
                let p = pidx(m, n);
                let mut j = *t;
                j.d2g[k][p].eps = Dual::constant(T::one());
                v -= lag.eval(&j)?.eps.eps * (1.0 / MULT[p]);
            }
            out.push(v);
        }
    }
    Ok(out)
}

pub const DEGREE_THRESHOLD: f64 = 1e-10;

/// Statistical estimate of the degree.
#[derive(Debug, Clone)]
pub struct DegreeEstimate {
    pub degree: usize,
    pub samples: usize,
    /// Entry 0: largest |f^{αβ,μ}|, |f^{αβ,μν}|. Entry s ≥ 1: largest
    /// derivative of those along random vertical directions of J³π → J^{s−1}π.
    pub max_by_level: [f64; 4],
}

/// The smallest s for which every sampled derivative of the momentum
/// coefficients along directions of jet order ≥ s is below
/// [`DEGREE_THRESHOLD`]; 0 when the coefficients themselves vanish, and 4
/// when no smaller s is certified.
pub fn degree_probe<L: Lagrangian>(lag: &L, samples: usize, seed: u64) -> Result<DegreeEstimate> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = [0.0f64; 4];
    let samples = samples.max(1);
    for _ in 0..samples {
        let mj = random_jet(&mut rng, 3);
        let v = mj.view();
        let vals = momentum_coefficients(lag, &v, &mj.d3g)?;
        worst[0] = vals.iter().fold(worst[0], |s, x| s.max(x.abs()));
        for (s, w) in worst.iter_mut().enumerate().skip(1) {
            let mut j = v.to_dual();
            let mut d3 = mj.d3g.map(|r| r.map(Dual::constant));
            for k in 0..10 {
                if s <= 1 {
                    for m in 0..4 {
                        j.dg[k][m].eps = rng.gen_range(-1.0..1.0);
                    }
                }
                if s <= 2 {
                    for p in 0..10 {
                        j.d2g[k][p].eps = rng.gen_range(-1.0..1.0);
                    }
                }
                for t in 0..20 {
                    d3[k][t].eps = rng.gen_range(-1.0..1.0);
                }
            }
            let d = momentum_coefficients(lag, &j, &d3)?;
            *w = d.iter().fold(*w, |a, x| a.max(x.eps.abs()));
        }
    }
    let degree = if worst[0] < DEGREE_THRESHOLD { 0 } else { (1..4).find(|&s| worst[s] < DEGREE_THRESHOLD).unwrap_or(4) };
    Ok(DegreeEstimate { degree, samples, max_by_level: worst })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet_algebra::MINKOWSKI;
    use crate::metric_dsl::corpus;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(4)
    }

    fn random_em<R: Rng>(r: &mut R) -> EMField {
        let mut e = Vec::new();
        for a in 0..4 {
            for b in a + 1..4 {
                e.push(((a, b), r.gen_range(-1.0..1.0)));
            }
        }
        EMField::from_upper(&e).unwrap()
    }

    #[test]
    fn lagrangian_values() {
        let zero = EMField::from_upper(&[]).unwrap();
        assert_eq!(em_lagrangian(&MINKOWSKI, &zero.f).unwrap(), 0.0);
        let e = EMField::from_upper(&[((0, 1), 0.5)]).unwrap();
        assert!((em_lagrangian(&MINKOWSKI, &e.f).unwrap() + 2.0 * 0.25).abs() < 1e-15);
        let b = EMField::from_upper(&[((1, 2), 0.5)]).unwrap();
        assert!((em_lagrangian(&MINKOWSKI, &b.f).unwrap() - 2.0 * 0.25).abs() < 1e-15);
        assert!(EMField::from_upper(&[((1, 1), 1.0)]).is_err());
        let mut bad = e.f;
        bad[1][0] = 0.4;
        assert!(EMField::from_matrix(bad).is_err());
    }

    #[test]
    fn minkowski_energy_density() {
        // F_{01} = 1: ¼η_{00}F² = ¼·(−1)·(−2) = ½ and η^{αβ}F_{0α}F_{0β} = 1
        let em = EMField::from_upper(&[((0, 1), 1.0)]).unwrap();
        let t = stress_energy(&MINKOWSKI, &em).unwrap();
        assert!((t[0][0] - (0.5 - 1.0) / (4.0 * PI)).abs() < 1e-14);
        let tc = stress_energy_closed(&MINKOWSKI, &em).unwrap();
        assert!((tc[0][0] - t[0][0]).abs() < 1e-14);
        assert_eq!(em_source(&MINKOWSKI, &EMField::from_upper(&[]).unwrap().f).unwrap(), [0.0; 10]);
    }

    #[test]
    fn stress_energy_forms_agree_and_are_traceless() {
        let mut r = rng();
        for i in 0..100 {
            let g = random_jet(&mut r, 0).g;
            let em = random_em(&mut r).with_constants(1.0 + (i % 3) as f64, 1.0 + (i % 2) as f64);
            let t = stress_energy(&g, &em).unwrap();
            let tc = stress_energy_closed(&g, &em).unwrap();
            let scale = 1.0 + t.iter().flatten().fold(0.0f64, |s, v| s.max(v.abs()));
            for m in 0..4 {
                for n in 0..4 {
                    assert!((t[m][n] - tc[m][n]).abs() < 1e-9 * scale);
                    assert!((t[m][n] - t[n][m]).abs() < 1e-14 * scale);
                }
            }
            assert!(trace(&g, &t).unwrap().abs() < 1e-10 * scale);
        }
    }

    #[test]
    fn sourced_einstein_matches_euler_lagrange() {
        let fam = MetricFamily::from_json(corpus::NON_SOLUTION).unwrap();
        let jet = crate::metric_dsl::prolong_family(&fam, [0.3, 0.7, 0.1, 0.0], 2).unwrap();
        let em = EMField::from_upper(&[((0, 1), 0.3), ((2, 3), -0.2)]).unwrap();
        let a = sourced_einstein_residual(&jet, &em).unwrap();
        let b = sourced_einstein_from_euler_lagrange(&jet, &em).unwrap();
        assert!(curvature::max_abs(&a) > 1e-3);
        for m in 0..4 {
            for n in 0..4 {
                assert!((a[m][n] - b[m][n]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn sourced_constraints_reduce_to_vacuum() {
        let fam = MetricFamily::from_json(corpus::NON_SOLUTION).unwrap();
        let p = [0.3, 0.7, 0.1, 0.0];
        let c = sourced_constraints(&fam, p).unwrap();
        let jet = crate::metric_dsl::prolong_family(&fam, p, 3).unwrap();
        let el = euler_lagrange(&jet.view()).unwrap();
        let del = crate::eh_lagrangian::d_euler_lagrange(&jet).unwrap();
        for k in 0..10 {
            assert!((c.einstein[k] - el[k]).abs() < 1e-10);
            for t in 0..4 {
                assert!((c.d_einstein[k][t] - del[k][t]).abs() < 1e-9);
            }
        }
        // a constant field on flat space is not a solution of the sourced equations
        let em = MetricFamily::from_json(corpus::EM_CONSTANT_FIELD).unwrap();
        let c = sourced_constraints(&em, [0.0; 4]).unwrap();
        assert!(c.max_einstein() > 1e-2);
        assert!(c.max_d_einstein() < 1e-12);
    }

    #[test]
    fn charged_mass_solves_the_sourced_equations() {
        let src = corpus::CHARGED_MASS;
        let fam = MetricFamily::from_json(src).unwrap();
        for p in [[0.0, 3.0, 1.2, 0.0], [1.0, 5.5, 0.7, 2.0]] {
            let c = sourced_constraints(&fam, p).unwrap();
            assert!(c.max_einstein() < 1e-10 && c.max_d_einstein() < 1e-10, "{c:?}");
        }
        // the same metric with the field removed, or the standard sign of Q², fails
        let mut bare = fam.clone();
        bare.em_field.clear();
        assert!(sourced_constraints(&bare, [0.0, 3.0, 1.2, 0.0]).unwrap().max_einstein() > 1e-3);
        let flipped = MetricFamily::from_json(&src.replace("- Q^2/r^2)", "+ Q^2/r^2)")).unwrap();
        assert!(sourced_constraints(&flipped, [0.0, 3.0, 1.2, 0.0]).unwrap().max_einstein() > 1e-3);
    }

    #[test]
    fn em_accelerations() {
        let mut r = rng();
        for _ in 0..10 {
            let jet = random_jet(&mut r, 1);
            let em = random_em(&mut r);
            assert!(canonical_em_residual(&jet, &em).unwrap() < 1e-8);
            assert!(literal_em_residual(&jet, &em).unwrap().is_finite());
        }
        let zero = EMField::from_upper(&[]).unwrap();
        let jet = random_jet(&mut r, 1);
        assert!(literal_em_residual(&jet, &zero).unwrap() < 1e-8);
    }

    struct SquaredAcceleration;
    impl Lagrangian for SquaredAcceleration {
        fn eval<T: Scalar>(&self, jet: &Jet<T>) -> Result<T> {
            Ok(jet.d2g[0][0] * jet.d2g[0][0])
        }
    }

    #[test]
    fn degrees() {
        let v = degree_probe(&Vacuum, 2, 1).unwrap();
        assert_eq!(v.degree, 2, "{v:?}");
        let em = degree_probe(&Electromagnetic(random_em(&mut rng())), 2, 1).unwrap();
        assert!(em.degree <= 1, "{em:?}");
        let s = degree_probe(&Sum(Vacuum, Electromagnetic(random_em(&mut rng()))), 1, 2).unwrap();
        assert_eq!(s.degree, 2);
        assert_eq!(degree_probe(&SquaredAcceleration, 2, 1).unwrap().degree, 4);
    }
}
