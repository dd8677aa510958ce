//! Acceptance gate. Runs every criterion, prints one PASS/FAIL line each
//! and exits non-zero if any fails.

use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use linkfid::batch::{self, Execution};
use linkfid::cli::{self, Overrides, ScenarioSpec};
use linkfid::control::{self, ControlProblem, FD_STEP};
use linkfid::dynamics::{self, Hamiltonian, LindbladModel, TimeGrid};
use linkfid::metrics::{self, DiscriminationProblem};
use linkfid::numerics::{ComplexMatrix, C64};
use linkfid::qstate::{self, DensityMatrix, StateVector};
use linkfid::random;
use linkfid::tensornet;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn orthogonal_pair(seed: u64, dim: usize) -> (StateVector, StateVector) {
    let mut rng = random::seeded(seed);
    let a = random::pure_state(&mut rng, dim);
    let b = random::pure_state(&mut rng, dim);
    let overlap = a.inner(&b);
    let amps: Vec<C64> = b
        .amplitudes()
        .iter()
        .zip(a.amplitudes())
        .map(|(&y, &x)| y - overlap * x)
        .collect();
    (a, StateVector::normalized(amps).unwrap())
}

fn helstrom_limits() -> Outcome {
    let mut worst_equal: f64 = 0.0;
    let mut worst_orth: f64 = 0.0;
    for seed in 0..20 {
        let dim = 2 + (seed as usize % 4);
        let rho = qstate::random_density(dim, 1 + seed as usize % dim, seed).unwrap();
        let h = metrics::helstrom(&DiscriminationProblem::balanced(rho.clone(), rho).unwrap()).unwrap();
        worst_equal = worst_equal.max((h.p_error - 0.5).abs());
        let (a, b) = orthogonal_pair(seed, dim);
        let p = DiscriminationProblem::balanced(qstate::density_from_pure(&a), qstate::density_from_pure(&b)).unwrap();
        worst_orth = worst_orth.max(metrics::helstrom(&p).unwrap().p_error);
    }
    ensure(worst_equal == 0.0, || format!("p_error(ρ, ρ) deviates from 0.5 by {worst_equal:e}"))?;
    ensure(worst_orth <= 1e-12, || format!("orthogonal p_error {worst_orth:e}"))?;
    Ok(format!("equal states exact 0.5, orthogonal max {worst_orth:.1e}"))
}

fn fvdg_sandwich() -> Outcome {
    let samples = batch::fvdg_sandwich(1000, &[2, 3, 4, 5, 6], 20240, Execution::Auto).map_err(|e| e.to_string())?;
    let worst = samples.iter().map(|s| s.violation()).fold(f64::NEG_INFINITY, f64::max);
    ensure(worst < 1e-9, || format!("violation {worst:e}"))?;
    // pure states: TD = √(1 − |⟨ψ|φ⟩|²) and F = |⟨ψ|φ⟩|²
    let mut rng = random::seeded(9);
    let mut oracle: f64 = 0.0;
    for dim in 2..=6 {
        for _ in 0..20 {
            let (a, b) = (random::pure_state(&mut rng, dim), random::pure_state(&mut rng, dim));
            let f = a.inner(&b).norm_sqr();
            let (ra, rb) = (qstate::density_from_pure(&a), qstate::density_from_pure(&b));
            oracle = oracle
                .max((metrics::trace_distance(&ra, &rb).unwrap() - (1.0 - f).sqrt()).abs())
                .max((metrics::uhlmann_fidelity(&ra, &rb).unwrap() - f).abs());
        }
    }
    ensure(oracle < 1e-9, || format!("pure-state oracle off by {oracle:e}"))?;
    Ok(format!("1000 pairs, max violation {worst:.2e}, pure-state oracle {oracle:.1e}"))
}

fn helstrom_optimality() -> Outcome {
    let samples = batch::helstrom_optimality(50, 500, &[2, 3, 4, 5, 6], 77, Execution::Auto).map_err(|e| e.to_string())?;
    let worst = samples.iter().map(|s| s.excess()).fold(f64::NEG_INFINITY, f64::max);
    ensure(worst <= 1e-9, || format!("random POVM beats Helstrom by {worst:e}"))?;
    // commuting states: ½(1 + Σ|r pᵢ − (1 − r) qᵢ|)
    let (p, q, r): ([f64; 3], [f64; 3], f64) = ([0.5, 0.3, 0.2], [0.1, 0.1, 0.8], 0.4);
    let expected = 0.5 * (1.0 + p.iter().zip(&q).map(|(a, b)| (r * a - (1.0 - r) * b).abs()).sum::<f64>());
    let prob = DiscriminationProblem::new(
        DensityMatrix::new(ComplexMatrix::from_real_diag(&p)).unwrap(),
        DensityMatrix::new(ComplexMatrix::from_real_diag(&q)).unwrap(),
        r,
    )
    .unwrap();
    let got = metrics::helstrom(&prob).unwrap().p_success;
    ensure((got - expected).abs() < 1e-12, || format!("diagonal oracle {got} vs {expected}"))?;
    Ok(format!("50×500, best random minus Helstrom {worst:.3e}"))
}

fn dephasing_model(gamma: f64) -> LindbladModel {
    LindbladModel::new(Hamiltonian::zero(2), vec![qstate::pauli_z().scale_real(gamma.sqrt())]).unwrap()
}

fn plus() -> DensityMatrix {
    qstate::density_from_pure(&StateVector::plus())
}

fn minus() -> DensityMatrix {
    qstate::density_from_pure(&StateVector::minus())
}

fn coherence_error(steps: usize) -> f64 {
    let grid = TimeGrid::new(0.0, 2.0, steps).unwrap();
    let traj = dynamics::lindblad_evolve(&plus(), &dephasing_model(1.0), &grid).unwrap();
    traj.times
        .iter()
        .zip(&traj.states)
        .map(|(t, s)| (s.matrix()[(0, 1)] - C64::new(0.5 * (-2.0 * t).exp(), 0.0)).norm())
        .fold(0.0, f64::max)
}

fn lindblad_dephasing() -> Outcome {
    let fine = coherence_error(2000);
    ensure(fine <= 1e-6, || format!("max |ρ01 − ½e^(−2t)| = {fine:e}"))?;
    let (coarse, half) = (coherence_error(20), coherence_error(40));
    let ratio = coarse / half;
    ensure((8.0..=32.0).contains(&ratio), || format!("order ratio {ratio}"))?;
    Ok(format!("error {fine:.1e} at dt=1e-3, halving ratio {ratio:.2}"))
}

fn unitary_invariance() -> Outcome {
    let mut rng = random::seeded(31);
    let mut worst: f64 = 0.0;
    for dim in [2, 3, 4] {
        let h = Hamiltonian::new(random::hermitian(&mut rng, dim)).unwrap();
        let rho = random::density(&mut rng, dim, dim).unwrap();
        let sigma = random::density(&mut rng, dim, 1).unwrap();
        let td0 = metrics::trace_distance(&rho, &sigma).unwrap();
        for k in 0..1000 {
            let t = 10.0 * k as f64 / 999.0;
            let a = dynamics::unitary_evolve(&rho, &h, t).unwrap();
            let b = dynamics::unitary_evolve(&sigma, &h, t).unwrap();
            worst = worst.max((metrics::trace_distance(&a, &b).unwrap() - td0).abs());
        }
        let grid = TimeGrid::new(0.0, 1.0, 999).unwrap();
        let series = dynamics::td_trajectory(&rho, &sigma, &LindbladModel::unitary(h), &grid).unwrap();
        for s in &series {
            worst = worst.max((s.trace_distance - td0).abs());
        }
    }
    ensure(worst <= 1e-9, || format!("TD drifted by {worst:e}"))?;
    Ok(format!("max TD drift {worst:.1e} over 1000-point grids"))
}

fn contractivity() -> Outcome {
    let samples = batch::channel_contractivity(200, &[2, 3, 4], 5, Execution::Auto).map_err(|e| e.to_string())?;
    let worst = samples.iter().map(|s| s.after - s.before).fold(f64::NEG_INFINITY, f64::max);
    ensure(worst <= 1e-9, || format!("channel increased TD by {worst:e}"))?;
    let mut rng = random::seeded(8);
    let mut worst_step = f64::NEG_INFINITY;
    for i in 0..12 {
        let dim = 2 + i % 2;
        let h = Hamiltonian::new(random::hermitian(&mut rng, dim).scale_real(0.5)).unwrap();
        let ops = (0..1 + i % 3).map(|_| random::ginibre(&mut rng, dim, dim).scale_real(0.3)).collect();
        let model = LindbladModel::new(h, ops).unwrap();
        let rho = random::density(&mut rng, dim, 1 + i % dim).unwrap();
        let sigma = random::density(&mut rng, dim, dim).unwrap();
        let series = dynamics::td_trajectory(&rho, &sigma, &model, &TimeGrid::new(0.0, 3.0, 600).unwrap()).unwrap();
        for w in series.windows(2) {
            worst_step = worst_step.max(w[1].trace_distance - w[0].trace_distance);
        }
    }
    ensure(worst_step <= 1e-7, || format!("trajectory step increased TD by {worst_step:e}"))?;
    Ok(format!("200 channels (worst {worst:.1e}), 12 trajectories (worst step {worst_step:.1e})"))
}

fn td_closed_form() -> Outcome {
    let mut worst: f64 = 0.0;
    for gamma in [1.0, 0.3] {
        let grid = TimeGrid::new(0.0, 2.0, 2000).unwrap();
        let series = dynamics::td_trajectory(&plus(), &minus(), &dephasing_model(gamma), &grid).unwrap();
        for s in &series {
            worst = worst.max((s.trace_distance - (-2.0 * gamma * s.t).exp()).abs());
        }
    }
    ensure(worst <= 1e-6, || format!("max deviation {worst:e}"))?;
    Ok(format!("max |TD − e^(−2γt)| = {worst:.1e}"))
}

fn naive_gradient(p: &ControlProblem, amps: &[Vec<f64>]) -> Vec<f64> {
    let mut out = Vec::new();
    for c in 0..amps.len() {
        for j in 0..amps[c].len() {
            let (mut up, mut down) = (amps.to_vec(), amps.to_vec());
            up[c][j] += FD_STEP;
            down[c][j] -= FD_STEP;
            let fu = metrics::overlap_fidelity(p.target(), &control::propagate(p, &up).unwrap()).unwrap();
            let fd = metrics::overlap_fidelity(p.target(), &control::propagate(p, &down).unwrap()).unwrap();
            out.push((fu - fd) / (2.0 * FD_STEP));
        }
    }
    out
}

fn grape() -> Outcome {
    let problem = ControlProblem::new(
        Hamiltonian::zero(2),
        vec![Hamiltonian::new(qstate::pauli_x()).unwrap()],
        10,
        1.0,
        DensityMatrix::basis(2, 0),
        DensityMatrix::basis(2, 1),
    )
    .unwrap();
    let s = control::grape_optimize(&problem, 200, 4).map_err(|e| e.to_string())?;
    ensure(s.final_fidelity() >= 0.99, || format!("final fidelity {}", s.final_fidelity()))?;
    ensure(s.iterations() <= 200, || format!("{} iterations", s.iterations()))?;
    ensure(s.fidelity_trace.windows(2).all(|w| w[1] >= w[0]), || "fidelity trace not monotone".into())?;

    let start = control::grape_optimize(&problem, 0, 4).unwrap().amplitudes;
    let mid: Vec<Vec<f64>> = vec![(0..10).map(|j| 0.3 * (j as f64 * 0.7).sin() + 0.4).collect()];
    let driven = ControlProblem::new(
        Hamiltonian::new(qstate::pauli_z().scale_real(0.4)).unwrap(),
        vec![Hamiltonian::new(qstate::pauli_x()).unwrap(), Hamiltonian::new(qstate::pauli_y()).unwrap()],
        8,
        1.5,
        qstate::random_density(2, 2, 3).unwrap(),
        qstate::random_density(2, 1, 4).unwrap(),
    )
    .unwrap();
    let skew: Vec<Vec<f64>> = (0..2).map(|c| (0..8).map(|j| 0.2 * ((j + 3 * c) as f64).cos()).collect()).collect();
    let mut worst: f64 = 0.0;
    for (p, amps) in [(&problem, start), (&problem, mid), (&driven, skew)] {
        let fast: Vec<f64> = control::fidelity_gradient(p, &amps, Execution::Auto).unwrap().concat();
        let slow = naive_gradient(p, &amps);
        let diff = fast.iter().zip(&slow).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let norm = slow.iter().map(|b| b * b).sum::<f64>().sqrt();
        worst = worst.max(diff / norm);
    }
    ensure(worst <= 1e-4, || format!("gradient relative error {worst:e}"))?;
    Ok(format!(
        "fidelity {:.6} after {} iterations, gradient rel. error {worst:.1e}",
        s.final_fidelity(),
        s.iterations()
    ))
}

fn tensor_diagrams() -> Outcome {
    let mut rng = random::seeded(12);
    let (mut linear, mut td_err): (f64, f64) = (0.0, 0.0);
    for i in 0..100 {
        let dim = 2 + i % 4;
        let rho = random::density(&mut rng, dim, 1 + i % dim).unwrap();
        let sigma = random::density(&mut rng, dim, dim).unwrap();
        let (a, b) = (rho.matrix(), sigma.matrix());
        let mut tr = C64::new(0.0, 0.0);
        let mut prod = C64::new(0.0, 0.0);
        let mut frob = 0.0;
        for r in 0..dim {
            tr += a[(r, r)];
            for c in 0..dim {
                prod += a[(r, c)] * b[(c, r)];
                frob += (a[(r, c)] - b[(r, c)]).norm_sqr();
            }
        }
        let diff = a - b;
        linear = linear
            .max((tensornet::trace_diagram(a).unwrap() - tr).norm())
            .max((tensornet::product_trace_diagram(a, b).unwrap() - prod).norm())
            .max((tensornet::frobenius_diagram(&diff).unwrap() - frob.sqrt()).abs())
            .max((tensornet::overlap_diagram(&rho, &sigma).unwrap() - metrics::overlap_fidelity(&rho, &sigma).unwrap()).abs());
        let direct = metrics::trace_distance(&rho, &sigma).unwrap();
        td_err = td_err.max((tensornet::diagram_trace_distance(&rho, &sigma).unwrap() - direct).abs());
    }
    ensure(linear <= 1e-12, || format!("trace/product/Frobenius off by {linear:e}"))?;
    ensure(td_err <= 1e-10, || format!("TD diagram off by {td_err:e}"))?;
    Ok(format!("100 instances, linear {linear:.1e}, TD {td_err:.1e}"))
}

fn parse_csv(text: &str) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(|c| c.parse().unwrap()).collect()).collect();
    (header, rows)
}

fn bench_output() -> Outcome {
    let spec = ScenarioSpec::from_toml("kind = \"bench-fvdg\"\n[bench-fvdg]\npoints = 201\n").unwrap();
    let report = cli::execute(&spec).map_err(|e| e.to_string())?;
    let files = report.render().map_err(|e| e.to_string())?;
    let text = &files.iter().find(|(n, _)| n == "series_bench_fvdg.csv").ok_or("missing CSV")?.1;
    let (header, rows) = parse_csv(text);
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    let mut worst: f64 = 0.0;
    for row in &rows {
        let x = row[col("td")];
        let f = row[col("fidelity")];
        for (name, expected) in [
            ("published_f_upper", (1.0 - x).sqrt()),
            ("published_f_lower", x.sqrt()),
            ("fvdg_td_low", 1.0 - f.sqrt()),
            ("fvdg_td_high", (1.0 - f).sqrt()),
        ] {
            worst = worst.max((row[col(name)] - expected).abs());
        }
    }
    ensure(rows.len() == 201, || format!("{} rows", rows.len()))?;
    ensure(worst <= 1e-12, || format!("column deviation {worst:e}"))?;
    ensure(report.summary.contains("WARNING: as-published bounds cross over"), || "crossover not flagged".into())?;

    let low = ScenarioSpec::from_toml("kind = \"bench-fvdg\"\n[bench-fvdg]\ngrid = [0.0, 0.5, 1.0]\n").unwrap();
    let r = cli::execute(&low).unwrap();
    let upper = r.series("bench_fvdg").unwrap().column("published_f_upper").unwrap();
    ensure(upper[0] == 1.0 && (upper[1] - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12 && upper[2] == 0.0, || format!("{upper:?}"))?;
    let quiet = ScenarioSpec::from_toml("kind = \"bench-fvdg\"\n[bench-fvdg]\ngrid = [0.0, 0.25, 0.5]\n").unwrap();
    ensure(!cli::execute(&quiet).unwrap().summary.contains("WARNING"), || "spurious crossover warning".into())?;
    Ok(format!("{} rows, max deviation {worst:.1e}, crossover flagged", rows.len()))
}

fn determinism() -> Outcome {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    let mut specs: Vec<_> = std::fs::read_dir(&dir)
        .map_err(|e| e.to_string())?
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    specs.sort();
    ensure(!specs.is_empty(), || "no shipped scenarios".into())?;
    let mut files = 0;
    for spec in &specs {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        cli::run(spec, a.path(), Overrides::default()).map_err(|e| format!("{}: {e}", spec.display()))?;
        cli::run(spec, b.path(), Overrides::default()).map_err(|e| format!("{}: {e}", spec.display()))?;
        let mut names: Vec<_> = std::fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
        names.sort();
        for name in names {
            let (x, y) = (std::fs::read(a.path().join(&name)).unwrap(), std::fs::read(b.path().join(&name)).unwrap());
            ensure(x == y, || format!("{} differs in {}", spec.display(), name.to_string_lossy()))?;
            files += 1;
        }
    }
    Ok(format!("{} scenarios, {files} files byte-identical", specs.len()))
}

type Criterion = (&'static str, fn() -> Outcome, u64);

fn main() {
    let criteria: [Criterion; 11] = [
        ("helstrom limits", helstrom_limits, 1),
        ("fuchs-van de graaf sandwich", fvdg_sandwich, 30),
        ("helstrom optimality", helstrom_optimality, 60),
        ("lindblad vs analytic dephasing", lindblad_dephasing, 10),
        ("unitary invariance of TD", unitary_invariance, 10),
        ("CPTP contractivity", contractivity, 30),
        ("td_trajectory closed form", td_closed_form, 5),
        ("GRAPE qubit flip", grape, 30),
        ("tensor-diagram equivalence", tensor_diagrams, 10),
        ("bench-fvdg output", bench_output, 1),
        ("determinism", determinism, 60),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        let outcome = outcome.and_then(|d| {
            if elapsed <= Duration::from_secs(*budget) {
                Ok(d)
            } else {
                Err(format!("{d}; took {:.1} s, budget {budget} s", elapsed.as_secs_f64()))
            }
        });
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} ({:.2} s)", i + 1, elapsed.as_secs_f64()),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail} ({:.2} s)", i + 1, elapsed.as_secs_f64());
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
