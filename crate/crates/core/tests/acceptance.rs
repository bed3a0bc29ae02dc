//! Acceptance criteria. Each test prints one `criterion N: PASS|FAIL` line
//! and then asserts.

use std::f64::consts::LN_2;
use std::io::Write;

use chromfem::cli::{compare, EXIT_OK};
use chromfem::config::RunConfig;
use chromfem::diagnostics::outflow_mean;
use chromfem::fem::{DiffusionTensor, ProblemSpec, VelocityField};
use chromfem::linalg::{gmres, Ilu0, SparseMatrix};
use chromfem::mms::{convergence_study, manufactured_problem, ConvergenceTable, ManufacturedSolution};
use chromfem::stepper::{run_transient, Observer, Operators, SimState, Simulation};
use chromfem::{build_rect_mesh, Isotherm, Mesh, Scheme, SchemeConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const LADDER: [f64; 5] = [0.5, 0.25, 0.125, 0.0625, 0.03125];

fn report(id: u32, name: &str, pass: bool, detail: String) {
    // Straight to the handle so the line survives the harness's output capture.
    let line = format!("criterion {id} ({name}): {} | {detail}\n", if pass { "PASS" } else { "FAIL" });
    std::io::stdout().lock().write_all(line.as_bytes()).unwrap();
    assert!(pass, "criterion {id} ({name}) failed: {detail}");
}

fn within_factor_two(value: f64, reference: f64) -> bool {
    let r = value / reference;
    (0.5..=2.0).contains(&r)
}

/// Manufactured Langmuir problem on the unit square with `n × n` cells.
fn langmuir_mms(n: usize) -> (Mesh, ProblemSpec, ManufacturedSolution) {
    let ms = ManufacturedSolution::cubic_cosine();
    let base = ProblemSpec::new(Isotherm::Langmuir { q_max: 1.0, k_eq: 1.0 })
        .with_porosity(0.5, 1.0)
        .with_diffusion(DiffusionTensor::IDENTITY)
        .with_velocity(VelocityField::Constant([1.0, 1.0]));
    let spec = manufactured_problem(&ms, base);
    let mesh = spec.tag_mesh(build_rect_mesh(n, n, 1.0, 1.0).unwrap());
    (mesh, spec, ms)
}

fn temporal_table(scheme: Scheme) -> ConvergenceTable {
    let (mesh, spec, ms) = langmuir_mms(128);
    let cfg = SchemeConfig::new(scheme, LADDER[0]);
    let table = convergence_study(&mesh, &spec, &ms, &cfg, 1.0, &LADDER).unwrap();
    println!("{table}");
    table
}

fn rate_columns(table: &ConvergenceTable, rows: std::ops::RangeInclusive<usize>) -> Vec<[f64; 4]> {
    rows.map(|i| table.rows[i].rates.expect("rates from the second row on"))
        .collect()
}

#[test]
fn criterion_01_midpoint_second_order() {
    let table = temporal_table(Scheme::MidpointExtrapolated);
    let rates = rate_columns(&table, 2..=4);
    let in_band = rates.iter().flatten().all(|r| (1.85..=2.15).contains(r));
    let finest = table.rows[4].errors.linf_l2;
    let magnitude = within_factor_two(finest, 0.000153313);
    report(
        1,
        "midpoint temporal order 2",
        in_band && magnitude,
        format!("rates on three finest refinements {rates:.4?} (band [1.85, 2.15]); linf_l2(dt=1/32) = {finest:.6e} vs 1.53313e-4"),
    );
}

#[test]
fn criterion_02_backward_euler_first_order() {
    let table = temporal_table(Scheme::BeLagged);
    let rates = rate_columns(&table, 1..=4);
    let in_band = rates.iter().flatten().all(|r| (0.70..=1.05).contains(r));
    let monotone = (0..4).all(|k| rates.windows(2).all(|w| w[1][k] >= w[0][k]));
    let finest = table.rows[4].errors.linf_l2;
    let magnitude = within_factor_two(finest, 0.00558454);
    report(
        2,
        "backward Euler temporal order 1",
        in_band && monotone && magnitude,
        format!(
            "rates {rates:.4?} (band [0.70, 1.05], in band: {in_band}, nondecreasing: {monotone}); linf_l2(dt=1/32) = {finest:.6e} vs 5.58454e-3"
        ),
    );
}

#[test]
fn criterion_03_mass_comparison() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg: RunConfig = "dt = 1/8\nT = 1\nmesh.h = 1/128\nboundary.g = mms".parse().unwrap();
    cfg.output_dir = dir.path().to_path_buf();
    let cmp = compare(&cfg, true).unwrap();
    let last = cmp.times.len() - 1;
    let exact = cmp.exact.as_ref().unwrap()[last];
    let (be, mid) = (cmp.be[last] - exact, cmp.midpoint[last] - exact);
    report(
        3,
        "total mass: BE overestimates, midpoint tracks",
        be > 0.0 && mid.abs() <= 0.25 * be.abs(),
        format!("mass_be - exact = {be:+.6e}, mass_midpoint - exact = {mid:+.6e}, ratio {:.3} (limit 0.25)", mid.abs() / be.abs()),
    );
}

#[derive(Default)]
struct MaxNodalError {
    worst: f64,
    steps: usize,
}

impl Observer for MaxNodalError {
    fn observe(&mut self, mesh: &Mesh, _: &ProblemSpec, _: &Operators, state: &SimState) -> chromfem::Result<()> {
        let exact = |p: [f64; 2]| state.t * (1.0 + p[0] + p[1]);
        let err = mesh
            .nodes()
            .iter()
            .zip(&state.c)
            .map(|(&p, c)| (c - exact(p)).abs())
            .fold(0.0, f64::max);
        self.worst = self.worst.max(err);
        self.steps += 1;
        Ok(())
    }
}

#[test]
fn criterion_04_linear_in_time_exactness() {
    let ms = ManufacturedSolution::linear_in_time();
    let base = ProblemSpec::new(Isotherm::Constant { k: 2.0 })
        .with_porosity(0.5, 1.0)
        .with_velocity(VelocityField::Constant([1.0, 1.0]));
    let spec = manufactured_problem(&ms, base);
    let mesh = spec.tag_mesh(build_rect_mesh(8, 8, 1.0, 1.0).unwrap());
    let mut worst: f64 = 0.0;
    let mut lines = Vec::new();
    for scheme in [Scheme::BeLagged, Scheme::MidpointExtrapolated, Scheme::MidpointPicard] {
        for dt in [0.5, 0.25] {
            let mut obs = MaxNodalError::default();
            run_transient(&mesh, &spec, &SchemeConfig::new(scheme, dt), 2.0, None, &mut [&mut obs]).unwrap();
            worst = worst.max(obs.worst);
            lines.push(format!("{scheme} dt={dt}: {:.2e}", obs.worst));
        }
    }
    report(4, "integrator exactness", worst <= 1e-8, format!("max nodal error {worst:.3e} (limit 1e-8); {}", lines.join(", ")));
}

#[test]
fn criterion_05_energy_decay() {
    let spec = ProblemSpec::new(Isotherm::Affine { k1: 0.3, k2: 1.5 })
        .with_porosity(0.5, 1.0)
        .with_velocity(VelocityField::Constant([1.0, 1.0]));
    let mesh = spec.tag_mesh(build_rect_mesh(16, 16, 1.0, 1.0).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut sim = Simulation::new(mesh, spec, SchemeConfig::new(Scheme::MidpointExtrapolated, 0.05)).unwrap();
    let inflow = sim.operators().dofs.clone();
    let c0: Vec<f64> = (0..sim.mesh().num_nodes())
        .map(|i| if inflow.is_dirichlet(i) { 0.0 } else { rng.gen::<f64>() })
        .collect();
    sim.set_field(c0).unwrap();
    let mut norms = vec![sim.operators().l2_norm(&sim.state().c)];
    for _ in 0..50 {
        sim.step().unwrap();
        norms.push(sim.operators().l2_norm(&sim.state().c));
    }
    let worst = norms.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    report(
        5,
        "midpoint energy decay",
        worst <= 1e-12,
        format!("max(||C^(n+1)|| - ||C^n||) = {worst:.3e} over 50 steps; ||C^0|| = {:.4}, ||C^50|| = {:.4}", norms[0], norms[50]),
    );
}

#[test]
fn criterion_06_discrete_green_identity() {
    let u = VelocityField::Constant([1.0, 1.0]);
    let mut worst: f64 = 0.0;
    for n in [4, 16] {
        let mesh = build_rect_mesh(n, n, 1.0, 1.0).unwrap().tag_boundary(|p| u.eval(p), 1e-12);
        let pattern = chromfem::fem::Pattern::new(&mesh);
        let conv = pattern.convection(&mesh, &u);
        let boundary = pattern.boundary_mass(&mesh, &u, |_| true);
        let dense = |m: &SparseMatrix| m.to_dense();
        let (nd, bd) = (dense(&conv), dense(&boundary));
        for i in 0..mesh.num_nodes() {
            for j in 0..mesh.num_nodes() {
                worst = worst.max((nd[i][j] + nd[j][i] - bd[i][j]).abs());
            }
        }
    }
    report(6, "discrete Green identity", worst <= 1e-12, format!("max |N + N^T - B(u.n)| = {worst:.3e} for h in {{1/4, 1/16}}"));
}

/// Adaptive Simpson quadrature on `[a, b]`.
fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64, m: f64, fm: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) + recurse(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1)
    }
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, m, fm, whole, tol, 30)
}

#[test]
fn criterion_07_isotherm_calculus() {
    let rel = |approx: f64, exact: f64| (approx - exact).abs() / exact.abs().max(1e-300);
    let eps = 1e-5;
    let mut worst: f64 = 0.0;
    for (q_max, k_eq) in [(1.0, 1.0), (2.0, 0.5), (0.7, 3.0)] {
        let iso = Isotherm::Langmuir { q_max, k_eq };
        // Closed-form-free reference law.
        let q = |c: f64| q_max * k_eq * c / (1.0 + k_eq * c);
        for i in 1..=100 {
            let c = 0.1 * i as f64;
            let s = iso.eval(c).unwrap();
            let fd_dq = (q(c + eps) - q(c - eps)) / (2.0 * eps);
            let fd_d2q = (iso.dq(c + eps).unwrap() - iso.dq(c - eps).unwrap()) / (2.0 * eps);
            let q_int = adaptive_simpson(&q, 0.0, c, 1e-13);
            // Fourth-order difference keeps the integrand's rounding noise near 1e-13.
            let h = 1e-3;
            let dq4 = |s: f64| (q(s - 2.0 * h) - 8.0 * q(s - h) + 8.0 * q(s + h) - q(s + 2.0 * h)) / (12.0 * h);
            let a_int = adaptive_simpson(&|s: f64| s * dq4(s), 0.0, c, 1e-11);
            worst = worst
                .max(rel(s.q, q(c)))
                .max(rel(s.dq, fd_dq))
                .max(rel(s.d2q, fd_d2q))
                .max(rel(s.q_integral, q_int))
                .max(rel(s.a_integral, a_int));
        }
    }
    let a1 = Isotherm::Langmuir { q_max: 1.0, k_eq: 1.0 }.eval(1.0).unwrap().a_integral;
    let a1_err = (a1 - (LN_2 - 0.5)).abs();
    report(
        7,
        "isotherm calculus",
        worst <= 1e-6 && a1_err <= 1e-12,
        format!("max relative deviation from finite differences and quadrature {worst:.3e} (limit 1e-6); |A(1) - (ln 2 - 1/2)| = {a1_err:.2e}"),
    );
}

#[test]
fn criterion_08_picard_versus_extrapolation() {
    let (mesh, spec, _) = langmuir_mms(32);
    let gaps: Vec<f64> = [0.25, 0.125, 0.0625]
        .iter()
        .map(|&dt| {
            let run = |scheme| run_transient(&mesh, &spec, &SchemeConfig::new(scheme, dt), 1.0, Some(1), &mut []).unwrap();
            let a = run(Scheme::MidpointExtrapolated);
            let b = run(Scheme::MidpointPicard);
            let ops = Operators::new(&mesh, &spec).unwrap();
            a.snapshots
                .iter()
                .zip(&b.snapshots)
                .map(|(x, y)| {
                    let d: Vec<f64> = x.c.iter().zip(&y.c).map(|(p, q)| p - q).collect();
                    ops.l2_norm(&d)
                })
                .fold(0.0, f64::max)
        })
        .collect();
    let factors: Vec<f64> = gaps.windows(2).map(|w| w[0] / w[1]).collect();
    report(
        8,
        "Picard and extrapolated midpoint converge together",
        factors.iter().all(|&f| f >= 3.5),
        format!("L-inf(L2) gaps {gaps:?} for dt in {{1/4, 1/8, 1/16}}; reduction factors {factors:.3?} (limit >= 3.5)"),
    );
}

/// Dense Gaussian elimination with partial pivoting.
fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs())).unwrap();
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..n {
            let m = a[i][k] / a[k][k];
            for j in k..n {
                a[i][j] -= m * a[k][j];
            }
            b[i] -= m * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    x
}

#[test]
fn criterion_09_gmres_matches_dense_elimination() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let n = 50;
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let mut triplets = Vec::new();
        for i in 0..n {
            let mut off = 0.0;
            for j in 0..n {
                if i != j && rng.gen_bool(0.2) {
                    let v = rng.gen_range(-1.0..1.0);
                    off += f64::abs(v);
                    triplets.push((i, j, v));
                }
            }
            let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            triplets.push((i, i, sign * (off + rng.gen_range(0.5..2.0))));
        }
        let a = SparseMatrix::from_triplets(n, &triplets).unwrap();
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x = gmres(&a, &b, None, &Ilu0::new(&a).unwrap(), 1e-12, 50, 2000).unwrap().x;
        let reference = dense_solve(a.to_dense(), b);
        let diff = x.iter().zip(&reference).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
        let norm = reference.iter().map(|v| v * v).sum::<f64>().sqrt();
        worst = worst.max(diff / norm);
    }
    report(9, "GMRES + ILU(0) linear solver oracle", worst <= 1e-9, format!("max relative deviation {worst:.3e} over 100 systems (limit 1e-9)"));
}

#[derive(Default)]
struct OutflowMeans(Vec<f64>);

impl Observer for OutflowMeans {
    fn observe(&mut self, mesh: &Mesh, _: &ProblemSpec, _: &Operators, state: &SimState) -> chromfem::Result<()> {
        self.0.push(outflow_mean(mesh, &state.c));
        Ok(())
    }
}

#[test]
fn criterion_10_channel_breakthrough() {
    const CHANNEL: &str = "domain.lx = 2\ndomain.ly = 10\nmesh.h = 1/32\nvelocity.type = channel\n\
                           boundary.g = 1\ninitial.c0 = 0\nT = 3\ndt = 1/32\nisotherm.type = langmuir\n\
                           isotherm.q_max = 1\nisotherm.K_eq = 1\noutput.stride = 8\n";
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("channel.cfg");
    std::fs::write(&config, CHANNEL).unwrap();
    let status = std::process::Command::new(env!("CARGO_BIN_EXE_chromfem"))
        .args(["simulate", "--quiet", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(dir.path())
        .status()
        .unwrap();
    let ledger_rows = csv::Reader::from_path(dir.path().join("mass_ledger.csv")).unwrap().records().count();

    let cfg: RunConfig = CHANNEL.parse().unwrap();
    let spec = cfg.problem();
    let mesh = cfg.mesh(&spec).unwrap();
    let mut means = OutflowMeans::default();
    run_transient(&mesh, &spec, &cfg.scheme, cfg.t_final, None, &mut [&mut means]).unwrap();
    let drop = means.0.windows(2).map(|w| w[0] - w[1]).fold(f64::NEG_INFINITY, f64::max);
    let steps = 96;
    let expected_rows = steps / cfg.stride + 1;
    report(
        10,
        "channel run",
        status.code() == Some(EXIT_OK) && drop <= 1e-10 && ledger_rows == expected_rows,
        format!(
            "exit {:?}; largest outflow-mean decrease {drop:.3e} (slack 1e-10), final outflow mean {:.4e}; ledger rows {ledger_rows} (expected {expected_rows})",
            status.code(),
            means.0.last().unwrap()
        ),
    );
}
