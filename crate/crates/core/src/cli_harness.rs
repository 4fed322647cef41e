//! Identity suite, per-file checks and report plumbing behind the `mseh`
//! binary.
//!
//! Every check records `max_residual` in units of its own budget (the
//! measured residual divided by the acceptance tolerance of that identity),
//! so one `--tolerance` applies uniformly: a check passes when its ratio is
//! below it, and the default of 1 reproduces the acceptance thresholds.
//! Residuals are floored at machine epsilon before scaling.

use crate::curvature::{self, Mat4};
use crate::eh_lagrangian::{d_euler_lagrange, decomposition_residual, euler_homogeneity_residual, euler_lagrange, hamiltonian};
use crate::error::{Error, Result};
use crate::evolution_1d::{self as evo, EvolState, IntegrateOptions, Trajectory, KASNER_VACUUM};
use crate::first_order_equiv::{lbar, regularity_rank};
use crate::jet_algebra::{random_jet, MetricJet};
use crate::legendre_hamiltonian::{invert_momenta, legendre, legendre_rank, unified_residuals, MOMENTUM_COORDINATES};
use crate::matter_em::{self as em, EMField};
use crate::metric_dsl::{corpus, prolong_family, MetricFamily, VectorFamily};
use crate::multivector_solver::{self as mv, Accel};
use crate::noether;
use chrono::{DateTime, SecondsFormat, Utc};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const DEFAULT_TOLERANCE: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub max_residual: f64,
    pub pass: bool,
    pub paper_ref: String,
    /// Acceptance criterion the check belongs to (0 for file checks).
    #[serde(skip)]
    pub criterion: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub version: String,
    pub c0_factor: f64,
    pub timestamp: String,
}

impl Environment {
    pub fn current() -> Self {
        Environment { version: VERSION.to_string(), c0_factor: mv::c0(), timestamp: timestamp() }
    }
}

/// RFC 3339 time, taken from SOURCE_DATE_EPOCH when it is set.
pub fn timestamp() -> String {
    let at = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.trim().parse::<i64>().ok())
        .and_then(|secs| DateTime::<Utc>::from_timestamp(secs, 0))
        .unwrap_or_else(Utc::now);
    at.to_rfc3339_opts(SecondsFormat::Secs, true)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub suite: String,
    pub seed: u64,
    pub samples: usize,
    pub tolerance: f64,
    pub checks: Vec<Check>,
    pub environment: Environment,
    /// Raw evaluated quantities, keyed by name.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub values: BTreeMap<String, Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

/// JSON cannot carry non-finite numbers; failures saturate instead.
fn finite(v: f64) -> f64 {
    if v.is_nan() {
        f64::MAX
    } else {
        v.clamp(-f64::MAX, f64::MAX)
    }
}

impl Report {
    pub fn new(suite: &str, seed: u64, samples: usize, tolerance: f64) -> Self {
        Report {
            suite: suite.to_string(),
            seed,
            samples,
            tolerance,
            checks: Vec::new(),
            environment: Environment::current(),
            values: BTreeMap::new(),
        }
    }

    /// Record `raw` against an acceptance `budget`.
    pub fn push(&mut self, criterion: usize, name: &str, raw: f64, budget: f64, paper_ref: &str) {
        let r = finite(finite(raw.abs()).max(f64::EPSILON) / budget);
        self.checks.push(Check {
            name: name.to_string(),
            max_residual: r,
            pass: r < self.tolerance,
            paper_ref: paper_ref.to_string(),
            criterion,
        });
    }

    pub fn record(&mut self, key: &str, values: impl IntoIterator<Item = f64>) {
        self.values.insert(key.to_string(), values.into_iter().map(finite).collect());
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.to_string()))
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(["suite", "seed", "samples", "tolerance", "name", "max_residual", "pass", "paper_ref"]).map_err(err)?;
        for c in &self.checks {
            w.write_record([
                self.suite.clone(),
                self.seed.to_string(),
                self.samples.to_string(),
                format!("{:e}", self.tolerance),
                c.name.clone(),
                format!("{:e}", c.max_residual),
                c.pass.to_string(),
                c.paper_ref.clone(),
            ])
            .map_err(err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Json => self.to_json(),
            Format::Csv => self.to_csv(),
        }
    }

    /// One line per check, for terminals.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            s += &format!("{:<4} {:<36} {:.3e}\n", if c.pass { "ok" } else { "FAIL" }, c.name, c.max_residual);
        }
        s
    }
}

/// Write through a temporary file in the destination directory, then rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(format!("{}: {}", path.display(), e.error)))?;
    Ok(())
}

// ------------------------------------------------------------ the suite

pub mod refs {
    pub const DECOMPOSITION: &str = "consider the following decomposition";
    pub const HOMOGENEOUS_L0: &str = "homogeneous of degree 2";
    pub const FIRST_ORDER: &str = "have the same local coordinate expressions";
    pub const U_TENSOR: &str = "whose explicit expressions are";
    pub const UV: &str = "which works as a sort of inverse";
    pub const PARTICULAR: &str = "have as particular solution";
    pub const LEMMA: &str = "if, and only if";
    pub const TRACE: &str = "cancel out when contracted with";
    pub const INTEGRABILITY: &str = "Lie bracket for two arbitrary components";
    pub const VACUUM: &str = "These are the Euler-Lagrange equations";
    pub const D_EINSTEIN: &str = "These are new constraints again";
    pub const SOLUTIONS: &str = "the following conditions are equivalent";
    pub const MOMENTA: &str = "140-codimensional submanifold";
    pub const RANK: &str = "4+10+40=54";
    pub const INVERSION: &str = "in one-to-one correspondence";
    pub const HOLONOMY: &str = "are part of the holonomy conditions";
    pub const HAMILTONIAN: &str = "the Hamiltonian function defined on";
    pub const MATTER: &str = "We can choose";
    pub const STRESS_ENERGY: &str = "stress-energy-momentum tensor";
    pub const EM: &str = "case of a free electromagnetic source";
    pub const NOETHER: &str = "is a conserved quantity";
    pub const EVOLUTION: &str = "with initial conditions";
}

/// Fixed exterior Schwarzschild points (t, r, θ, φ), M = 1.
pub const SCHWARZSCHILD_POINTS: [[f64; 4]; 10] = [
    [0.0, 3.0, 1.2, 0.0],
    [0.4, 4.5, 0.7, 1.0],
    [-1.0, 6.0, 2.0, 2.5],
    [2.0, 9.0, 1.5, -0.5],
    [0.0, 2.5, std::f64::consts::FRAC_PI_2, 0.0],
    [1.5, 3.5, 0.4, 3.0],
    [-0.3, 5.0, 2.6, -1.2],
    [3.0, 7.5, 1.0, 0.7],
    [0.8, 12.0, 0.9, 2.0],
    [-2.0, 20.0, 2.2, -2.8],
];

pub const KASNER_TIMES: [f64; 3] = [1.0, 1.7, 2.5];

fn rng_for(seed: u64, stream: u64, i: usize) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream((stream << 32) | i as u64);
    r
}

/// Largest residual over `count` samples, each with its own deterministic
/// generator. Errors count as failures.
fn par_max<F>(seed: u64, stream: u64, count: usize, f: F) -> f64
where
    F: Fn(&mut ChaCha8Rng) -> Result<f64> + Sync,
{
    (0..count)
        .into_par_iter()
        .map(|i| match f(&mut rng_for(seed, stream, i)) {
            Ok(v) if !v.is_nan() => v.abs(),
            _ => f64::INFINITY,
        })
        .reduce(|| 0.0, f64::max)
}

fn amax<'a>(it: impl IntoIterator<Item = &'a f64>) -> f64 {
    it.into_iter().fold(0.0f64, |s, v| s.max(v.abs()))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + a.abs().max(b.abs()))
}

pub fn random_accel<R: Rng>(r: &mut R) -> Accel<f64> {
    mv::accel_from_vec(&DVector::from_fn(100, |_, _| r.gen_range(-1.0..1.0)))
}

pub fn random_em_field<R: Rng>(r: &mut R) -> EMField {
    let mut e = Vec::new();
    for a in 0..4 {
        for b in a + 1..4 {
            e.push(((a, b), r.gen_range(-1.0..1.0)));
        }
    }
    EMField::from_upper(&e).expect("entries are above the diagonal")
}

/// Sample counts scale with `samples`; 1000 gives the acceptance counts.
fn count(samples: usize, at_thousand: usize) -> usize {
    (at_thousand * samples / 1000).max(1)
}

fn jet_scale(jet: &MetricJet) -> f64 {
    1.0 + amax(jet.g.iter().chain(jet.dg.iter().flatten()).chain(jet.d2g.iter().flatten()).chain(jet.d3g.iter().flatten()))
}

fn max_mat(m: &Mat4<f64>) -> f64 {
    curvature::max_abs(m)
}

/// Vacuum constraint residuals at one jet: (max|L^{αβ}|, scaled max|D_τL^{αβ}|,
/// section trace condition).
fn vacuum_blocks(jet: &MetricJet) -> Result<(f64, f64, f64)> {
    let el = euler_lagrange(&jet.view())?;
    let del = d_euler_lagrange(jet)?;
    let fh = mv::section_homogeneous(jet)?;
    let tr = mv::homogeneous_residual(&fh, &jet.g)?;
    Ok((amax(&el), amax(del.iter().flatten()) / jet_scale(jet), amax(&tr)))
}

fn trajectory_ricci(tr: &Trajectory) -> f64 {
    tr.max_ricci()
}

/// Run every identity check over `samples` random jets.
pub fn run_suite(samples: usize, seed: u64, tolerance: f64) -> Result<Report> {
    if samples == 0 {
        return Err(Error::Input("--samples must be at least 1".into()));
    }
    let mut rep = Report::new("identity", seed, samples, tolerance);
    let n = |k| count(samples, k);

    // 1, 2
    let r = par_max(seed, 1, n(1000), |r| decomposition_residual(&random_jet(r, 2).view()));
    rep.push(1, "decomposition", r, 1e-9, refs::DECOMPOSITION);
    let r = par_max(seed, 2, n(1000), |r| euler_homogeneity_residual(&random_jet(r, 1).view()));
    rep.push(2, "euler_homogeneity_l0", r, 1e-10, refs::HOMOGENEOUS_L0);

    // 3
    let r = par_max(seed, 3, n(1000), |r| {
        let v = random_jet(r, 1).view();
        Ok(rel(hamiltonian(&v)?, lbar(&v)?))
    });
    rep.push(3, "first_order_hamiltonian", r, 1e-9, refs::FIRST_ORDER);
    let r = par_max(seed, 4, n(100), |r| Ok(regularity_rank(&random_jet(r, 1).view())? as f64 - 40.0));
    rep.push(3, "first_order_regularity_rank", r, 1.0, refs::FIRST_ORDER);

    // 4
    let r = par_max(seed, 5, n(100), |r| {
        let (swap, cyc) = mv::u_relation_residuals(&mv::u_tensor(&random_jet(r, 0).g)?);
        Ok(swap.max(cyc))
    });
    rep.push(4, "u_symmetry", r, 1e-12, refs::U_TENSOR);
    let r = par_max(seed, 6, n(100), |r| {
        let jet = random_jet(r, 1);
        let out = mv::uv_contract(&jet.g, &jet.dg)?;
        let mut worst = 0.0f64;
        for k in 0..10 {
            for c in 0..4 {
                worst = worst.max((out[k][c] - 3.0 * jet.dg[k][c]).abs());
            }
        }
        Ok(worst / (1.0 + amax(jet.dg.iter().flatten())))
    });
    rep.push(4, "uv_contraction", r, 1e-10, refs::UV);

    // 5
    let r = par_max(seed, 7, n(500), |r| {
        let jet = random_jet(r, 1);
        mv::hdw_residual_normalized(&jet, &mv::f_particular(&jet.view())?, None)
    });
    rep.push(5, "particular_solution", r, 1e-8, refs::PARTICULAR);

    // 6
    let r = par_max(seed, 8, n(100), |r| {
        let g = random_jet(r, 0).g;
        let fh = mv::project_homogeneous(&random_accel(r), &g)?;
        let fu = mv::u_tensor(&g)?.contract(&fh);
        Ok(amax(&fu) / (1.0 + mv::accel_max_abs(&fh)))
    });
    rep.push(6, "homogeneous_lemma_forward", r, 1e-8, refs::LEMMA);
    // converse: fields that break the trace condition are not annihilated by U
    let r = par_max(seed, 9, n(100), |r| {
        let g = random_jet(r, 0).g;
        let bad = random_accel(r);
        let violation = amax(&mv::u_tensor(&g)?.contract(&bad));
        Ok(1e-3 * (1.0 + mv::accel_max_abs(&bad)) / violation)
    });
    rep.push(6, "homogeneous_lemma_converse", r, 1.0, refs::LEMMA);

    // 7
    let fp = mv::Particular { c0: mv::c0() };
    let r = par_max(seed, 10, n(200), |r| mv::max_bracket(&fp, &random_jet(r, 1)));
    rep.push(7, "integrability", r, 1e-8, refs::INTEGRABILITY);

    // 8
    let schw = MetricFamily::from_json(corpus::SCHWARZSCHILD)?;
    let kas = MetricFamily::from_json(corpus::KASNER)?;
    let mut vac = Vec::new();
    for p in SCHWARZSCHILD_POINTS.iter().take(3) {
        vac.push(prolong_family(&schw, *p, 3)?);
    }
    for t in KASNER_TIMES {
        vac.push(prolong_family(&kas, [t, 0.3, -0.2, 0.5], 3)?);
    }
    let blocks: Vec<(f64, f64, f64)> = vac.par_iter().map(vacuum_blocks).collect::<Result<_>>()?;
    let worst = |f: fn(&(f64, f64, f64)) -> f64| blocks.iter().map(f).fold(0.0f64, f64::max);
    rep.push(8, "vacuum_einstein", worst(|b| b.0), 1e-8, refs::VACUUM);
    rep.push(8, "vacuum_d_einstein", worst(|b| b.1), 1e-6, refs::D_EINSTEIN);
    rep.push(8, "section_trace_condition", worst(|b| b.2), 1e-8, refs::SOLUTIONS);

    // 9
    rep.push(9, "momentum_coordinates", MOMENTUM_COORDINATES as f64 - 140.0, 1.0, refs::MOMENTA);
    let r = par_max(seed, 11, n(100), |r| Ok(legendre_rank(&random_jet(r, 3))? as f64 - 54.0));
    rep.push(9, "legendre_rank", r, 1.0, refs::RANK);
    let r = par_max(seed, 12, n(100), |r| {
        let jet = random_jet(r, 1);
        let back = invert_momenta(&jet.g, &legendre(&jet)?.p1)?;
        let mut worst = 0.0f64;
        for k in 0..10 {
            for m in 0..4 {
                worst = worst.max((back[k][m] - jet.dg[k][m]).abs());
            }
        }
        Ok(worst / (1.0 + amax(jet.dg.iter().flatten())))
    });
    rep.push(9, "momentum_inversion", r, 1e-9, refs::INVERSION);

    // 10
    let r = par_max(seed, 13, n(200), |r| {
        let g = random_jet(r, 0).g;
        let lm: [f64; 10] = std::array::from_fn(|_| r.gen_range(-1.0..1.0));
        let back = mv::u_tensor(&g)?.contract(&mv::f_matter(&g, &lm)?);
        Ok((0..10).fold(0.0f64, |s, k| s.max((back[k] - lm[k]).abs())) / (1.0 + amax(&lm)))
    });
    rep.push(10, "matter_contraction", r, 1e-9, refs::MATTER);
    let r = par_max(seed, 14, n(200), |r| {
        let g = random_jet(r, 0).g;
        let t = em::stress_energy(&g, &random_em_field(r))?;
        Ok(em::trace(&g, &t)? / (1.0 + max_mat(&t)))
    });
    rep.push(10, "em_stress_energy_trace", r, 1e-10, refs::STRESS_ENERGY);
    let r = par_max(seed, 15, n(200), |r| {
        let g = random_jet(r, 0).g;
        let f = random_em_field(r);
        let a = em::stress_energy(&g, &f)?;
        let b = em::stress_energy_closed(&g, &f)?;
        let diff: Mat4<f64> = std::array::from_fn(|i| std::array::from_fn(|j| a[i][j] - b[i][j]));
        Ok(max_mat(&diff) / (1.0 + max_mat(&a)))
    });
    rep.push(10, "em_stress_energy_agreement", r, 1e-9, refs::EM);

    // 11
    let fields = noether::polynomial_fields()?;
    let pairs: Vec<(usize, usize)> = (0..fields.len()).flat_map(|z| (0..SCHWARZSCHILD_POINTS.len()).map(move |p| (z, p))).collect();
    let r = pairs
        .par_iter()
        .map(|&(z, p)| noether::divergence_residual(&fields[z], &schw, SCHWARZSCHILD_POINTS[p]).map_or(f64::INFINITY, f64::abs))
        .reduce(|| 0.0, f64::max);
    rep.push(11, "noether_divergence", r, 1e-6, refs::NOETHER);
    let r = par_max(seed, 16, n(100), |r| {
        let jet = random_jet(r, 3);
        let z = &fields[r.gen_range(0..fields.len())];
        Ok(noether::lagrangian_symmetry_residual(z, &jet)?.relative())
    });
    rep.push(11, "lagrangian_symmetry", r, 1e-8, refs::NOETHER);

    // 12
    let p = KASNER_VACUUM;
    let s0 = evo::kasner(p, 1.0)?;
    let untracked = |h: f64| IntegrateOptions { h, tol_track: f64::INFINITY };
    let runs: Vec<Result<Trajectory>> = [1e-3, 0.1, 0.05].par_iter().map(|&h| evo::integrate(&s0, 2.0, untracked(h))).collect();
    let mut runs = runs.into_iter().collect::<Result<Vec<_>>>()?.into_iter();
    let (fine, coarse, half) = (runs.next().unwrap(), runs.next().unwrap(), runs.next().unwrap());
    rep.push(12, "kasner_reproduction", evo::kasner_error(p, fine.last())?, 1e-5, refs::EVOLUTION);
    let mixed = evo::integrate(&evo::kasner([-1.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0], 1.0)?, 2.0, untracked(1e-2))?;
    let ricci = trajectory_ricci(&fine).max(trajectory_ricci(&mixed));
    rep.push(12, "ricci_tracking", ricci, 1e-6, refs::SOLUTIONS);
    let ratio = evo::kasner_error(p, coarse.last())? / evo::kasner_error(p, half.last())?;
    rep.push(12, "rk4_convergence_ratio", (ratio - 16.0) / 4.0, 1.0, refs::EVOLUTION);
    rep.record("rk4_convergence_ratio", [ratio]);

    rep.record("c0_fit", {
        let f = mv::c0_fit();
        [f.c0, f.residual_half, f.residual_one, f.least_squares]
    });
    Ok(rep)
}

// ----------------------------------------------------------- file checks

/// Load a metric family from a path, falling back to a built-in corpus name.
pub fn load_metric(source: &str) -> Result<MetricFamily> {
    let path = Path::new(source);
    if path.exists() {
        return MetricFamily::from_path(path);
    }
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or(source);
    match corpus::builtin(stem) {
        Some(src) => MetricFamily::from_json(src),
        None => Err(Error::Io(format!("{source}: no such file or corpus member"))),
    }
}

pub fn parse_point(s: &str) -> Result<[f64; 4]> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 4 {
        return Err(Error::Input(format!("expected four comma-separated coordinates, got `{s}`")));
    }
    let mut out = [0.0; 4];
    for (o, p) in out.iter_mut().zip(&parts) {
        *o = p.parse::<f64>().map_err(|_| Error::Input(format!("`{p}` is not a number")))?;
        if !o.is_finite() {
            return Err(Error::Input(format!("`{p}` is not finite")));
        }
    }
    Ok(out)
}

/// Constraint residuals of a metric family at one point.
pub fn check_metric(fam: &MetricFamily, point: [f64; 4], order: usize, tolerance: f64) -> Result<Report> {
    if !(3..=4).contains(&order) {
        return Err(Error::UnsupportedOrder(order as i64));
    }
    let jet = prolong_family(fam, point, order)?;
    let v = jet.view();
    let mut rep = Report::new(&format!("check:{}", fam.name), 0, 1, tolerance);
    rep.record("point", point);
    let scale = jet_scale(&jet);
    if fam.has_em_field() {
        let sc = em::sourced_constraints(fam, point)?;
        rep.push(0, "sourced_einstein", sc.max_einstein(), 1e-8, refs::STRESS_ENERGY);
        rep.push(0, "sourced_d_einstein", sc.max_d_einstein() / scale, 1e-6, refs::D_EINSTEIN);
        rep.record("sourced_einstein", sc.einstein);
        rep.record("sourced_d_einstein", sc.d_einstein.into_iter().flatten());
        let f = EMField::from_matrix(fam.em_at(point)?)?;
        rep.record("em_stress_energy", em::stress_energy(&jet.g, &f)?.into_iter().flatten());
    } else {
        let el = euler_lagrange(&v)?;
        let del = d_euler_lagrange(&jet)?;
        rep.push(0, "einstein", amax(&el), 1e-8, refs::VACUUM);
        rep.push(0, "d_einstein", amax(del.iter().flatten()) / scale, 1e-6, refs::D_EINSTEIN);
        let tr = mv::homogeneous_residual(&mv::section_homogeneous(&jet)?, &jet.g)?;
        rep.push(0, "section_trace_condition", amax(&tr), 1e-8, refs::SOLUTIONS);
        rep.record("einstein", el);
        rep.record("d_einstein", del.into_iter().flatten());
    }
    let mom = legendre(&jet)?;
    let unified = unified_residuals(&jet, &mom)?;
    for (name, block) in unified.blocks().into_iter().skip(1) {
        let r = if name.starts_with("momentum") { refs::INVERSION } else { refs::HOLONOMY };
        rep.push(0, name, amax(block), 1e-8, r);
    }
    let h = hamiltonian(&v)?;
    rep.push(0, "hamiltonian", rel(mom.p_ext, -h), 1e-9, refs::HAMILTONIAN);
    rep.record("hamiltonian", [h]);
    rep.record("momentum_first_order", mom.p1.into_iter().flatten());
    Ok(rep)
}

/// Noether current and its divergence at each point.
pub fn check_noether(fam: &MetricFamily, z: &VectorFamily, points: &[[f64; 4]], tolerance: f64) -> Result<Report> {
    if points.is_empty() {
        return Err(Error::Input("at least one --at point is required".into()));
    }
    let mut rep = Report::new(&format!("noether:{}:{}", fam.name, z.name), 0, points.len(), tolerance);
    for (i, &p) in points.iter().enumerate() {
        let c = noether::noether_current(z, fam, p)?;
        rep.push(0, &format!("noether_divergence[{i}]"), c.divergence.value, 1e-6, refs::NOETHER);
        rep.record(&format!("point[{i}]"), p);
        rep.record(&format!("current[{i}]"), c.s);
        rep.record(&format!("divergence[{i}]"), [c.divergence.value, c.divergence.scale]);
    }
    Ok(rep)
}

pub enum Initial {
    Kasner([f64; 3]),
    State(EvolState),
}

/// Integrate, returning the trajectory (if the run completed) and a report.
/// Constraint drift and signature loss become failed checks.
pub fn run_integrate(initial: &Initial, t0: f64, t1: f64, h: f64, tolerance: f64) -> Result<(Option<Trajectory>, Report)> {
    let s0 = match initial {
        Initial::Kasner(p) => evo::kasner(*p, t0)?,
        Initial::State(s) => *s,
    };
    let mut rep = Report::new("integrate", 0, 1, tolerance);
    rep.record("span", [s0.t, t1, h]);
    let opts = IntegrateOptions { h, ..Default::default() };
    match evo::integrate(&s0, t1, opts) {
        Ok(tr) => {
            rep.push(0, "ricci_tracking", tr.max_ricci(), opts.tol_track, refs::SOLUTIONS);
            if let Initial::Kasner(p) = initial {
                rep.push(0, "kasner_reproduction", evo::kasner_error(*p, tr.last())?, 1e-5, refs::EVOLUTION);
            }
            rep.record("final_state", tr.last().g.into_iter().chain(tr.last().v));
            Ok((Some(tr), rep))
        }
        Err(Error::ConstraintDrift { step, t, value }) => {
            rep.push(0, "ricci_tracking", value, opts.tol_track, refs::SOLUTIONS);
            rep.record("failure_step", [step as f64, t]);
            Ok((None, rep))
        }
        Err(Error::SignatureLost { step, t }) => {
            rep.push(0, "signature", f64::INFINITY, 1.0, refs::EVOLUTION);
            rep.record("failure_step", [step as f64, t]);
            Ok((None, rep))
        }
        Err(e) => Err(e),
    }
}

pub fn load_state(path: &Path) -> Result<EvolState> {
    let src = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let s: EvolState = serde_json::from_str(&src).map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
    crate::jet_algebra::validate_metric(&s.g)?;
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suite_passes_and_is_deterministic() {
        let a = run_suite(10, 42, DEFAULT_TOLERANCE).unwrap();
        assert!(a.passed(), "{}", a.summary());
        let b = run_suite(10, 42, DEFAULT_TOLERANCE).unwrap();
        assert_eq!(a.checks, b.checks);
        assert_eq!((1..=12).filter(|c| a.checks.iter().any(|k| k.criterion == *c)).count(), 12);
        assert!(run_suite(0, 42, 1.0).is_err());
    }

    #[test]
    fn tiny_tolerance_fails_everything() {
        let mut rep = Report::new("x", 0, 1, 1e-30);
        rep.push(0, "zero", 0.0, 1.0, "");
        rep.push(0, "nan", f64::NAN, 1.0, "");
        assert!(rep.checks.iter().all(|c| !c.pass));
        assert_eq!(rep.checks[1].max_residual, f64::MAX);
        let back: Report = serde_json::from_str(&rep.to_json().unwrap()).unwrap();
        assert_eq!(back.checks, rep.checks);
    }

    #[test]
    fn file_checks() {
        let schw = load_metric("schwarzschild").unwrap();
        let rep = check_metric(&schw, [0.0, 3.0, std::f64::consts::FRAC_PI_2, 0.0], 3, 1.0).unwrap();
        assert!(rep.passed(), "{}", rep.summary());
        let flat = load_metric("corpus/minkowski.json").unwrap();
        let rep = check_metric(&flat, [0.3, -2.0, 1.0, 5.0], 4, 1.0).unwrap();
        assert!(rep.values["einstein"].iter().chain(&rep.values["d_einstein"]).all(|&v| v == 0.0));
        let ns = load_metric("non_solution").unwrap();
        let rep = check_metric(&ns, [0.2, 0.8, 0.1, 0.0], 3, 1.0).unwrap();
        let fails: Vec<_> = rep.failures().iter().map(|c| c.name.clone()).collect();
        assert!(fails.contains(&"einstein".to_string()), "{fails:?}");
        assert!(rep.values["einstein"].iter().any(|v| v.abs() > 1e-3));
        let charged = load_metric("charged_mass").unwrap();
        let rep = check_metric(&charged, [0.0, 4.0, 1.1, 0.3], 3, 1.0).unwrap();
        assert!(rep.passed(), "{}", rep.summary());
        assert!(check_metric(&flat, [0.0; 4], 2, 1.0).is_err());
        assert!(load_metric("no_such_metric").is_err());
    }

    #[test]
    fn points() {
        assert_eq!(parse_point("0, 3,1.5,-2").unwrap(), [0.0, 3.0, 1.5, -2.0]);
        assert!(parse_point("1,2,3").is_err());
        assert!(parse_point("1,2,x,4").is_err());
    }

    #[test]
    fn integrate_reports() {
        let (tr, rep) = run_integrate(&Initial::Kasner(KASNER_VACUUM), 1.0, 1.2, 0.01, 1.0).unwrap();
        assert!(tr.is_some() && rep.passed(), "{}", rep.summary());
        let (tr, rep) = run_integrate(&Initial::Kasner([0.5; 3]), 1.0, 1.2, 0.01, 1.0).unwrap();
        assert!(tr.is_none() && !rep.passed());
        assert_eq!(rep.values["failure_step"][0], 0.0);
    }

    #[test]
    fn timestamp_honours_source_date_epoch() {
        std::env::set_var("SOURCE_DATE_EPOCH", "0");
        assert_eq!(timestamp(), "1970-01-01T00:00:00Z");
        std::env::remove_var("SOURCE_DATE_EPOCH");
    }
}
