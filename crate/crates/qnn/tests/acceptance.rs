//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! fails at the end if any criterion failed.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use kerr_qnn::config::{ExperimentConfig, InfiniteTag, KerrValue, ResolvedTask};
use kerr_qnn::output::to_json;
use kerr_qnn::run::execute;
use kerr_qnn_core::dynamics::{
    evolve_master_equation, evolve_mean_field, mode_amplitudes, random_couplings, EvolutionConfig, Kerr,
    MasterEvolution, MeanFieldState, NetworkParams, Topology,
};
use kerr_qnn_core::fock::{coherent_coefficients, coherent_state, Basis, StateHealth, StateVector};
use kerr_qnn_core::readout::occupations;
use kerr_qnn_core::train::sweep::SweepRow;
use kerr_qnn_core::train::xor::{train_xor, xor_features, XorEncoding};
use kerr_qnn_core::wigner::{target_cat_wigner, wigner_error, wigner_of_state, GridGeometry};
use kerr_qnn_core::C64;
use nalgebra::DVector;

struct Report {
    lines: Vec<(u32, bool, String)>,
    health: Vec<(String, StateHealth)>,
    unitarity: Vec<(String, f64)>,
}

impl Report {
    fn record(&mut self, id: u32, pass: bool, detail: String) {
        println!("criterion {id:>2}: {} | {detail}", if pass { "PASS" } else { "FAIL" });
        self.lines.push((id, pass, detail));
    }

    fn track(&mut self, label: &str, h: impl IntoIterator<Item = StateHealth>) {
        self.health.extend(h.into_iter().map(|h| (label.to_string(), h)));
    }

    fn track_evolution(&mut self, label: &str, evo: &MasterEvolution) {
        self.track(label, evo.samples.iter().map(|(_, s)| s.health()).chain([evo.state.health()]));
    }
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn config(name: &str) -> ExperimentConfig {
    let path: PathBuf = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    ExperimentConfig::load(&path).expect("shipped config parses").0
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

/// `<n(tau)>` of a damped single mode starting in `|1>`.
fn decay_occupation(dt: f64) -> (f64, MasterEvolution) {
    let basis = Basis::single_mode(3).unwrap();
    let rho0 = StateVector::fock(basis, &[1]).unwrap().to_density_matrix();
    let params = NetworkParams::new(1);
    let evo = evolve_master_equation(&rho0, &params, &EvolutionConfig::new(dt)).unwrap();
    (occupations(&evo.state).unwrap()[0], evo)
}

fn criteria_integrator(r: &mut Report) {
    let exact = (-1.0f64).exp();
    let t0 = Instant::now();
    let (n, evo) = decay_occupation(1e-3);
    let elapsed = t0.elapsed();
    r.track_evolution("decay", &evo);
    let rel = (n - exact).abs() / exact;
    r.record(
        1,
        rel < 1e-6 && elapsed < Duration::from_secs(1),
        format!("<n(1)> = {n:.12}, e^-1 = {exact:.12}, rel err {rel:.2e}, {:.3} s", secs(elapsed)),
    );

    // at dt = 1e-3 the RK4 error sits at round-off, so the order is measured on coarse steps
    let err = |dt: f64| (decay_occupation(dt).0 - exact).abs();
    let (coarse, fine) = (err(0.1), err(0.05));
    let ratio = coarse / fine;
    r.record(
        2,
        (ratio - 16.0).abs() <= 0.3 * 16.0,
        format!("error ratio {ratio:.3} between dt = 0.1 ({coarse:.3e}) and dt = 0.05 ({fine:.3e})"),
    );
}

fn criterion_linear_regime(r: &mut Report) {
    let mut params = NetworkParams::new(3);
    params.coupling = random_couplings(3, Topology::Chain, 1.0, 42);
    params.onsite = 0.4;
    params.pump = vec![c(0.12, -0.05), c(0.0, 0.1), c(-0.08, 0.0)];
    params.tau = 2.0;
    let amps = [c(0.2, 0.1), c(-0.1, 0.15), c(0.0, 0.0)];
    let basis = Basis::new(&[6, 6, 6], None).unwrap();
    let mut cfg = EvolutionConfig::new(5e-3);
    cfg.record_times = (1..=10).map(|i| 0.2 * i as f64).collect();

    let t0 = Instant::now();
    let rho0 = coherent_state(basis, &amps).unwrap().to_density_matrix();
    let quantum = evolve_master_equation(&rho0, &params, &cfg).unwrap();
    let elapsed = t0.elapsed();
    let classical = evolve_mean_field(&MeanFieldState { psi: amps.to_vec() }, &params, &cfg).unwrap();
    r.track_evolution("linear regime", &quantum);

    let mut worst = 0.0f64;
    for ((tq, q), (tm, m)) in quantum.samples.iter().zip(&classical.samples) {
        assert_eq!(tq, tm);
        for (a, psi) in mode_amplitudes(q).unwrap().iter().zip(&m.psi) {
            worst = worst.max((a - psi).norm());
        }
    }
    let n = quantum.samples.len();
    r.record(
        3,
        n == 10 && worst < 1e-6 && elapsed < Duration::from_secs(10),
        format!("{n} sample times, max |<a> - psi| = {worst:.2e}, {:.2} s", secs(elapsed)),
    );
}

fn criterion_kerr_cat(r: &mut Report) {
    let d = 20;
    let alpha = 1.0;
    let beta = 1.0;
    let mut params = NetworkParams::new(1);
    params.kerr = Kerr::Finite(alpha);
    params.tau = PI / (2.0 * alpha);
    let basis = Basis::single_mode(d).unwrap();

    let t0 = Instant::now();
    let rho0 = coherent_state(basis.clone(), &[c(beta, 0.0)]).unwrap().to_density_matrix();
    let mut cfg = EvolutionConfig::new(1e-4);
    cfg.dissipation = false;
    let evo = evolve_master_equation(&rho0, &params, &cfg).unwrap();
    let elapsed = t0.elapsed();
    r.track_evolution("kerr cat", &evo);

    // phases (-1)^{n(n-1)/2} = A i^n + B (-i)^n with A = (1 - i)/2, B = (1 + i)/2
    let plus = coherent_coefficients(c(0.0, beta), d);
    let minus = coherent_coefficients(c(0.0, -beta), d);
    let (a, b) = (c(0.5, -0.5), c(0.5, 0.5));
    let amps = DVector::from_iterator(d, (0..d).map(|n| a * plus[n] + b * minus[n]));
    let target = StateVector::from_amplitudes(basis, amps).unwrap();
    let fidelity = evo.state.fidelity_with_pure(&target).unwrap();
    r.record(
        4,
        fidelity >= 0.999 && elapsed < Duration::from_secs(5),
        format!("fidelity {fidelity:.9} with (1-i)/2 |i> + (1+i)/2 |-i>, {:.2} s", secs(elapsed)),
    );
}

fn criteria_xor(r: &mut Report) -> Vec<u8> {
    let cfg = config("fig1b_xor.toml");
    let result = execute(&cfg, Some(1)).unwrap();
    let xor = result.xor.as_ref().unwrap();
    r.track("xor pump", xor.state_health.iter().copied());
    r.record(
        5,
        xor.error.max_abs < 0.1,
        format!("pump encoding, no Kerr, no noise: max-case error {:.3e}", xor.error.max_abs),
    );

    let ResolvedTask::Xor(mut task) = cfg.resolve().unwrap() else { unreachable!() };
    task.encoding = XorEncoding::MeanFieldAmplitude;
    let trained = train_xor(&task).unwrap();
    let (features, _) = xor_features(&task).unwrap();
    let searched = brute_force_affine(&features);
    // least squares and the grid search both land on the 1/2 bound up to round-off
    let bound = 0.5 - 1e-9;
    r.record(
        6,
        trained.error.max_abs >= bound && searched >= bound,
        format!(
            "mean-field amplitudes: least-squares max error {:.12}, grid-search minimum {searched:.12}",
            trained.error.max_abs
        ),
    );
    to_json(&result)
}

/// Smallest max-case XOR error of `b + w . f` found by a grid search over the
/// weights that repeatedly zooms in on the best node.
fn brute_force_affine(features: &[Vec<f64>]) -> f64 {
    let k = features[0].len();
    let scale: Vec<f64> = (0..k)
        .map(|j| 1.0 / features.iter().map(|f| f[j].abs()).fold(1e-12, f64::max))
        .collect();
    let targets = [0.0, 1.0, 1.0, 0.0];
    let cost = |w: &[f64]| {
        features
            .iter()
            .zip(targets)
            .map(|(f, t)| (w[k] + (0..k).map(|j| w[j] * scale[j] * f[j]).sum::<f64>() - t).abs())
            .fold(0.0, f64::max)
    };
    let steps: usize = 9;
    let mut center = vec![0.0; k + 1];
    let mut half = 4.0;
    let mut best = cost(&center);
    let mut w = vec![0.0; k + 1];
    for _ in 0..40 {
        let mut next = center.clone();
        for mut idx in 0..steps.pow(k as u32 + 1) {
            for (slot, c) in w.iter_mut().zip(&center) {
                *slot = c + half * (2.0 * (idx % steps) as f64 / (steps - 1) as f64 - 1.0);
                idx /= steps;
            }
            let e = cost(&w);
            if e < best {
                best = e;
                next.copy_from_slice(&w);
            }
        }
        center = next;
        half *= 0.6;
    }
    best
}

fn row_at(rows: &[SweepRow], alpha: Kerr) -> &SweepRow {
    rows.iter().find(|row| row.alpha == alpha).unwrap()
}

fn criterion_noise_trend(r: &mut Report) {
    let cfg = config("fig1c_sweep_xor.toml");
    let t0 = Instant::now();
    let result = execute(&cfg, None).unwrap();
    let elapsed = t0.elapsed();
    let rows = result.sweep.unwrap();
    for row in &rows {
        r.track("xor sweep", row.health.iter().copied());
    }
    let linear = row_at(&rows, Kerr::Finite(0.0)).error_mean;
    let last = rows.last().unwrap();
    let table: Vec<String> = rows.iter().map(|row| format!("{}: {:.3}", row.alpha, row.error_mean)).collect();
    r.record(
        7,
        rows.len() >= 6
            && last.alpha.is_infinite()
            && linear > 0.5
            && last.error_mean < 0.5
            && last.error_mean < linear
            && elapsed < Duration::from_secs(600),
        format!("mean error by alpha [{}], {:.0} s", table.join(", "), secs(elapsed)),
    );
}

fn criterion_wigner_metric(r: &mut Report) {
    let basis = Basis::single_mode(40).unwrap();
    let g = GridGeometry::square(8.0, 201);
    let w = |beta: f64| wigner_of_state(&coherent_state(basis.clone(), &[c(beta, 0.0)]).unwrap().to_density_matrix(), &g).unwrap();
    let (left, right) = (w(-3.0), w(3.0));
    let cat = target_cat_wigner(c(1.0, 0.0), 0, &g).unwrap();
    let vac = w(0.0);

    let self_err = wigner_error(&cat, &cat).unwrap();
    let disjoint = wigner_error(&left, &right).unwrap();
    let symmetric = wigner_error(&cat, &vac).unwrap() == wigner_error(&vac, &cat).unwrap();
    let fine = g.refined();
    let vac_fine = wigner_of_state(&coherent_state(basis.clone(), &[c(0.0, 0.0)]).unwrap().to_density_matrix(), &fine).unwrap();
    let refined_change = (wigner_error(&vac_fine, &target_cat_wigner(c(1.0, 0.0), 0, &fine).unwrap()).unwrap()
        - wigner_error(&vac, &cat).unwrap())
    .abs();
    r.record(
        8,
        self_err == 0.0 && (disjoint - 1.0).abs() < 1e-3 && symmetric && refined_change < 1e-3,
        format!(
            "self {self_err}, disjoint lobes {disjoint:.6}, symmetric {symmetric}, refinement change {refined_change:.2e}"
        ),
    );
}

fn criteria_cat(r: &mut Report) {
    let cfg = config("fig4_sweep_cat.toml");
    let t0 = Instant::now();
    let result = execute(&cfg, None).unwrap();
    let elapsed = t0.elapsed();
    let rows = result.sweep.unwrap();
    for row in &rows {
        r.track("cat sweep", row.health.iter().copied());
        r.unitarity.push((format!("cat alpha {}", row.alpha), row.max_unitarity_deviation));
    }
    let linear = row_at(&rows, Kerr::Finite(0.0));
    let best = rows
        .iter()
        .filter(|row| !row.alpha.is_infinite() && row.alpha.value() > 0.0)
        .min_by(|a, b| a.error_mean.total_cmp(&b.error_mean))
        .unwrap();
    let p_best = best.probability_mean.unwrap();
    r.record(
        9,
        best.error_mean <= 0.1 && p_best > 0.005 && best.error_mean < linear.error_mean && elapsed < Duration::from_secs(1800),
        format!(
            "best alpha {}: delta {:.4}, p {:.4}; alpha 0: delta {:.4}; {:.0} s",
            best.alpha,
            best.error_mean,
            p_best,
            linear.error_mean,
            secs(elapsed)
        ),
    );

    let hard = rows.last().unwrap();
    let p_hard = hard.probability_mean.unwrap_or(f64::NAN);
    r.record(
        10,
        hard.alpha.is_infinite() && hard.error_mean.is_finite() && p_hard.is_finite() && p_hard > 0.0,
        format!("hard-core modes: delta {:.4}, p {:.4}", hard.error_mean, p_hard),
    );
}

fn criterion_health(r: &mut Report) {
    let mut failures = Vec::new();
    for (label, h) in &r.health {
        if !(h.trace_deviation < 1e-8 && h.hermiticity_deviation < 1e-10 && h.min_eigenvalue >= -1e-6) {
            failures.push(format!("{label}: {h:?}"));
        }
    }
    for (label, u) in &r.unitarity {
        if !(*u < 1e-10) {
            failures.push(format!("{label}: unitarity {u:.2e}"));
        }
    }
    let worst = |f: fn(&StateHealth) -> f64| r.health.iter().map(|(_, h)| f(h)).fold(0.0, f64::max);
    let detail = format!(
        "{} states, worst trace {:.1e}, hermiticity {:.1e}, min eigenvalue {:.1e}, unitarity {:.1e}",
        r.health.len(),
        worst(|h| h.trace_deviation),
        worst(|h| h.hermiticity_deviation),
        r.health.iter().map(|(_, h)| h.min_eigenvalue).fold(f64::INFINITY, f64::min),
        r.unitarity.iter().map(|(_, u)| *u).fold(0.0, f64::max),
    );
    for f in &failures {
        println!("    {f}");
    }
    r.record(11, failures.is_empty() && !r.health.is_empty() && !r.unitarity.is_empty(), detail);
}

fn criterion_determinism(r: &mut Report, xor_first: &[u8]) {
    let xor_again = to_json(&execute(&config("fig1b_xor.toml"), Some(2)).unwrap());
    let mut cat = config("fig4_sweep_cat.toml");
    cat.sweep.as_mut().unwrap().alpha_values = vec![KerrValue::Tag(InfiniteTag::Infinite)];
    let a = to_json(&execute(&cat, Some(1)).unwrap());
    let b = to_json(&execute(&cat, Some(1)).unwrap());
    let mut noisy = config("fig1c_sweep_xor.toml");
    noisy.sweep.as_mut().unwrap().alpha_values.truncate(2);
    let c1 = to_json(&execute(&noisy, Some(1)).unwrap());
    let c2 = to_json(&execute(&noisy, Some(2)).unwrap());
    r.record(
        12,
        xor_again == xor_first && a == b && c1 == c2,
        format!(
            "xor result identical: {}, hard-core cat sweep identical: {}, noisy xor sweep identical: {}",
            xor_again == xor_first,
            a == b,
            c1 == c2
        ),
    );
}

#[test]
fn acceptance() {
    let mut r = Report {
        lines: Vec::new(),
        health: Vec::new(),
        unitarity: Vec::new(),
    };
    criteria_integrator(&mut r);
    criterion_linear_regime(&mut r);
    criterion_kerr_cat(&mut r);
    let xor_bytes = criteria_xor(&mut r);
    criterion_noise_trend(&mut r);
    criterion_wigner_metric(&mut r);
    criteria_cat(&mut r);
    criterion_health(&mut r);
    criterion_determinism(&mut r, &xor_bytes);

    r.lines.sort_by_key(|l| l.0);
    println!("---");
    for (id, pass, _) in &r.lines {
        println!("criterion {id:>2}: {}", if *pass { "PASS" } else { "FAIL" });
    }
    let failed: Vec<u32> = r.lines.iter().filter(|l| !l.1).map(|l| l.0).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
