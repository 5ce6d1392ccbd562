//! Acceptance runner. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::process::ExitCode;

use qlinksim::ground_chain::{
    self, chain_success_numerator, elem_success_prob, fiber_efficiency, optimize_repeaters, ChainSpec,
    RepeaterOptimum,
};
use qlinksim::mc_oracle::{simulate_chain, simulate_elementary};
use qlinksim::memory::MemoryModel;
use qlinksim::params::{load_params, ArmConvention, LinkConvention};
use qlinksim::scenario::{
    builtin_scenario, builtin_scenarios, compare, crossover_sweep, run_space_path, Comparison, PassOptions,
};
use qlinksim::space_link::{self, channel_efficiency, LinkGeometry};
use qlinksim::SystemParams;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn comparisons(params: &SystemParams) -> Result<Vec<Comparison>, String> {
    builtin_scenarios()
        .iter()
        .map(|s| compare(params, s, 0.8, &PassOptions::default()).map_err(err))
        .collect()
}

fn table_values_round_trip() -> Outcome {
    let expected: [(&str, f64); 24] = [
        ("wavelength", 1550e-9),
        ("bandwidth", 1e-9),
        ("source_efficiency", 0.1),
        ("source_rate", 1e9),
        ("source_fidelity", 0.99),
        ("qm_write_efficiency", 0.9),
        ("qm_fidelity", 0.99),
        ("qm_modes", 50.0),
        ("qm_storage_time", 10e-3),
        ("qm_storage_window", 250e-12),
        ("detector_efficiency", 0.9),
        ("dark_count_rate", 50.0),
        ("bsm_efficiency", 0.5),
        ("fiber_attenuation", 0.2),
        ("fiber_fidelity", 0.99),
        ("freespace_fidelity", 0.99),
        ("tx_aperture", 0.30),
        ("rx_aperture", 1.00),
        ("rx_fov", 0.2e-6),
        ("sky_radiance", 0.3),
        ("atm_zenith_transmittance", 0.5),
        ("rx_internal_transmittance", 0.3),
        ("tx_internal_transmittance", 0.8),
        ("sat_altitude", 600e3),
    ];
    let dir = tempfile::tempdir().map_err(err)?;
    let path = dir.path().join("empty.toml");
    std::fs::write(&path, "").map_err(err)?;
    let loaded = load_params(&path, &[]).map_err(err)?;
    ensure(loaded == SystemParams::default(), "empty file differs from defaults")?;
    let value = serde_json::to_value(&loaded).map_err(err)?;
    for (key, want) in expected {
        let got = value[key].as_f64().ok_or(format!("missing {key}"))?;
        ensure(got == want, format!("{key}: {got} != {want}"))?;
    }
    let again = SystemParams::from_toml_str(&loaded.to_toml_string().map_err(err)?, &[]).map_err(err)?;
    ensure(again == loaded, "TOML round trip changed values")?;
    Ok(format!("{} values exact, TOML round trip identical", expected.len()))
}

fn zenith_link_budget() -> Outcome {
    let p = SystemParams::default();
    let eta = channel_efficiency(&p, &LinkGeometry::from_km_deg(600.0, 90.0).map_err(err)?).map_err(err)?;
    ensure((eta - 1.249e-2).abs() <= 1e-4, format!("eta = {eta:.6e}"))?;
    Ok(format!("eta = {eta:.6e} (target 1.249e-2 +/- 1e-4)"))
}

fn peak_space_rate() -> Outcome {
    let p = SystemParams::default();
    let opts = PassOptions::default();
    let short = run_space_path(&p, &builtin_scenario("short").map_err(err)?, &opts).map_err(err)?.peak_rate;
    let long = run_space_path(&p, &builtin_scenario("long").map_err(err)?, &opts).map_err(err)?.peak_rate;
    let line = format!("short peak {short:.0}/s (12100 +/- 25%), long peak {long:.0}/s (2500 +/- 40%)");
    ensure((short / 12_100.0 - 1.0).abs() <= 0.25, line.clone())?;
    ensure((long / 2_500.0 - 1.0).abs() <= 0.40, line.clone())?;
    Ok(line)
}

fn space_fidelity_band(cs: &[Comparison]) -> Outcome {
    let f: Vec<f64> = cs
        .iter()
        .map(|c| c.report.satellite.fidelity.ok_or("empty pass".to_string()))
        .collect::<Result<_, _>>()?;
    let spread = f.iter().cloned().fold(f64::MIN, f64::max) - f.iter().cloned().fold(f64::MAX, f64::min);
    let line = format!("F_space = {:.5}/{:.5}/{:.5}, spread {spread:.2e}", f[0], f[1], f[2]);
    ensure(f.iter().all(|x| (0.955..=0.975).contains(x)), line.clone())?;
    ensure(spread <= 0.001, line.clone())?;
    Ok(line)
}

fn ground_fidelities(p: &SystemParams) -> Result<[f64; 3], String> {
    let mut out = [0.0; 3];
    for (slot, (km, m)) in out.iter_mut().zip([(90.0, 1), (440.0, 6), (980.0, 6)]) {
        *slot = ground_chain::evaluate_ground_path(p, &ChainSpec::from_km(km, m).map_err(err)?)
            .map_err(err)?
            .fidelity;
    }
    Ok(out)
}

fn ground_fidelity_bands(cs: &[Comparison]) -> Outcome {
    let target = [0.94, 0.91, 0.81];
    let f: Vec<f64> = cs
        .iter()
        .map(|c| c.report.ground_optimized.result().map(|r| r.fidelity).ok_or("infeasible".to_string()))
        .collect::<Result<_, _>>()?;
    ensure(f[0] >= f[1] && f[1] >= f[2], format!("ordering broken: {f:?}"))?;

    let mut matched = Vec::new();
    let mut report = Vec::new();
    for link in [LinkConvention::LinksEqMPlus1, LinkConvention::LinksEqM] {
        for arm in [ArmConvention::PerArm, ArmConvention::PerLink] {
            let p = SystemParams {
                fidelity_link_convention: link,
                fidelity_arm_convention: arm,
                ..SystemParams::default()
            };
            let v = ground_fidelities(&p)?;
            let worst = v.iter().zip(target).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            report.push(format!("{link:?}/{arm:?} worst residual {worst:.3}"));
            if worst <= 0.10 {
                matched.push(format!("{link:?}/{arm:?}"));
            }
        }
    }
    let plus_one = SystemParams {
        fidelity_link_convention: LinkConvention::LinksEqMPlus1,
        ..SystemParams::default()
    };
    let short = ground_fidelities(&plus_one)?[0];
    let line = format!(
        "default F = {:.3}/{:.3}/{:.3}; short under M+1 links {short:.3} (0.94 +/- 0.03); {}; within 0.10: {}",
        f[0],
        f[1],
        f[2],
        report.join(", "),
        if matched.is_empty() { "none".into() } else { matched.join(", ") }
    );
    ensure((short - 0.94).abs() <= 0.03, line.clone())?;
    ensure(!matched.is_empty(), line.clone())?;
    Ok(line)
}

fn optimizer_counts() -> Outcome {
    let p = SystemParams::default();
    let mut m = Vec::new();
    for km in [90.0, 440.0, 980.0] {
        match optimize_repeaters(&p, km * 1e3, 0.8, 20).map_err(err)? {
            RepeaterOptimum::Feasible { repeaters, .. } => m.push(repeaters),
            RepeaterOptimum::Infeasible => return Err(format!("{km} km infeasible")),
        }
    }
    let line = format!("M* = {}/{}/{} (want 1, 6+/-1, 6+/-1)", m[0], m[1], m[2]);
    ensure(m[0] == 1 && m[1].abs_diff(6) <= 1 && m[2].abs_diff(6) <= 1, line.clone())?;
    Ok(line)
}

fn method_ordering(cs: &[Comparison]) -> Outcome {
    let ratio: Vec<f64> = cs
        .iter()
        .map(|c| c.report.ground_optimized.pairs() / c.report.satellite.integrated_pairs)
        .collect();
    let line = format!(
        "ground/satellite pairs: short {:.3e}, medium {:.3e}, long {:.3e}",
        ratio[0], ratio[1], ratio[2]
    );
    ensure(ratio[0] >= 10.0, line.clone())?;
    ensure(ratio[1] <= 1e-2, line.clone())?;
    ensure(ratio[2] <= 1e-3, line.clone())?;
    Ok(line)
}

fn crossover_bracket() -> Outcome {
    let p = SystemParams::default();
    let km = [90.0, 150.0, 200.0, 250.0, 300.0, 350.0, 440.0];
    let distances: Vec<f64> = km.iter().map(|d| d * 1e3).collect();
    let table = crossover_sweep(&p, &distances, 0.8, &PassOptions::default()).map_err(err)?;
    let (lo, hi) = table.bracket.ok_or("no crossover in sweep")?;
    let line = format!("crossover in ({:.0} km, {:.0} km)", lo / 1e3, hi / 1e3);
    ensure(lo >= 90e3 && hi <= 440e3 && lo < hi, line.clone())?;
    ensure(
        !(lo == 90e3 && hi == 440e3),
        "bracket is not strictly inside the interval".to_string(),
    )?;
    Ok(line)
}

fn within_sigma(analytic: f64, mean: f64, trials: u64, k: f64) -> bool {
    let sigma = (analytic * (1.0 - analytic) / trials as f64).sqrt();
    if sigma == 0.0 {
        mean == analytic
    } else {
        (mean - analytic).abs() < k * sigma
    }
}

fn oracle_equivalence() -> Outcome {
    const TRIALS: u64 = 1_000_000;
    let base = SystemParams::default();
    let mut worst: f64 = 0.0;
    let grid = [(1e-3, 50), (0.03, 10), (0.35481, 50), (0.6, 1), (1.0, 10)];
    for (i, (eta, modes)) in grid.into_iter().enumerate() {
        let p = SystemParams { qm_modes: modes, ..base.clone() };
        let analytic = elem_success_prob(&p, eta).map_err(err)?.unnormalized;
        let est = simulate_elementary(&p, eta, TRIALS, 100 + i as u64).map_err(err)?;
        let sigma = (analytic * (1.0 - analytic) / TRIALS as f64).sqrt();
        worst = worst.max((est.mean - analytic).abs() / sigma);
        ensure(
            within_sigma(analytic, est.mean, TRIALS, 3.0),
            format!("elem eta={eta} N={modes}: mc {} vs {analytic}", est.mean),
        )?;
    }
    for (i, (km, m)) in [(90.0, 1), (440.0, 6), (980.0, 6)].into_iter().enumerate() {
        let spec = ChainSpec::from_km(km, m).map_err(err)?;
        let analytic = chain_success_numerator(&base, &spec).map_err(err)?;
        let est = simulate_chain(&base, &spec, TRIALS, 200 + i as u64).map_err(err)?;
        let sigma = (analytic * (1.0 - analytic) / TRIALS as f64).sqrt();
        if sigma > 0.0 {
            worst = worst.max((est.mean - analytic).abs() / sigma);
        }
        ensure(
            within_sigma(analytic, est.mean, TRIALS, 3.0),
            format!("chain {km} km M={m}: mc {} vs {analytic}", est.mean),
        )?;
    }
    Ok(format!("5 elementary + 3 chain points at 1e6 trials, worst |z| = {worst:.2}"))
}

fn property_suites() -> Outcome {
    let p = SystemParams::default();
    let mut checks = 0;

    // Memory efficiency decreases with slot index and stays in (0, write efficiency].
    let eff: Vec<f64> = MemoryModel::from_params(&p).efficiencies().collect();
    ensure(eff.windows(2).all(|w| w[1] < w[0]), "memory efficiency not decreasing")?;
    ensure(eff.iter().all(|&e| e > 0.0 && e <= p.qm_write_efficiency), "memory efficiency out of bounds")?;
    checks += 2;

    // Elementary success is monotone in channel efficiency, bounded, and zero at zero.
    let mut last = -1.0;
    for i in 0..=100 {
        let s = elem_success_prob(&p, i as f64 / 100.0).map_err(err)?;
        ensure(s.unnormalized >= last && (0.0..=1.0).contains(&s.unnormalized), "elem not monotone")?;
        ensure((s.normalized * p.qm_modes as f64 - s.unnormalized).abs() < 1e-15, "normalization")?;
        last = s.unnormalized;
    }
    ensure(elem_success_prob(&p, 0.0).map_err(err)?.unnormalized == 0.0, "eta=0 gives nonzero")?;
    checks += 3;

    // Fiber efficiency and ground rate fall with distance at fixed M.
    let mut last_rate = f64::INFINITY;
    for km in (10..=1000).step_by(10) {
        let spec = ChainSpec::from_km(km as f64, 3).map_err(err)?;
        let r = ground_chain::ground_pair_rate(&p, &spec).map_err(err)?;
        ensure(r <= last_rate, format!("rate rises at {km} km"))?;
        last_rate = r;
    }
    ensure(fiber_efficiency(0.0, 0.2).map_err(err)? == 1.0, "zero-length fiber lossy")?;
    checks += 2;

    // Werner parameter does not increase with more hops at fixed distance.
    let mut last_w = f64::INFINITY;
    for m in 0..=10 {
        let w = ground_chain::chain_werner(&p, &ChainSpec::from_km(300.0, m).map_err(err)?).map_err(err)?;
        ensure(w <= last_w + 1e-15, format!("Werner rises at M={m}"))?;
        last_w = w;
    }
    checks += 1;

    // M = 0 reduces to a single elementary link over the whole distance.
    let spec = ChainSpec::from_km(90.0, 0).map_err(err)?;
    let eta = fiber_efficiency(45e3, p.fiber_attenuation).map_err(err)?;
    let elem = elem_success_prob(&p, eta).map_err(err)?;
    let chain = ground_chain::chain_success_prob(&p, &spec).map_err(err)?;
    ensure((chain - elem.normalized).abs() <= 1e-15 * elem.normalized.max(1e-300), "M=0 reduction")?;
    checks += 1;

    // Space link: efficiency falls with range and rises with elevation; closed form agrees.
    let mut last_eta = f64::INFINITY;
    for km in (500..=2500).step_by(50) {
        let g = LinkGeometry::from_km_deg(km as f64, 45.0).map_err(err)?;
        let e = channel_efficiency(&p, &g).map_err(err)?;
        let closed = space_link::channel_efficiency_closed_form(&p, &g).map_err(err)?;
        ensure(e < last_eta, format!("eta rises at {km} km"))?;
        ensure((e - closed).abs() <= 1e-12 * e, "closed form mismatch")?;
        last_eta = e;
    }
    let mut last_eta = 0.0;
    for deg in (10..=90).step_by(5) {
        let e = channel_efficiency(&p, &LinkGeometry::from_km_deg(1000.0, deg as f64).map_err(err)?).map_err(err)?;
        ensure(e > last_eta, format!("eta falls at {deg} deg"))?;
        last_eta = e;
    }
    checks += 3;

    // Without stray light the space fidelity reduces to the device product.
    let dark = SystemParams { sky_radiance: 0.0, ..p.clone() };
    let zen = LinkGeometry::from_km_deg(600.0, 90.0).map_err(err)?;
    let f = space_link::space_fidelity(&dark, &zen, &zen).map_err(err)?;
    let w = p.source_fidelity * p.freespace_fidelity.powi(2) * p.qm_fidelity.powi(2);
    ensure((f - (1.0 + 3.0 * w) / 4.0).abs() < 1e-14, "stray-free fidelity")?;
    checks += 1;

    // Pass-integrated totals converge under step halving.
    let mut worst_rel: f64 = 0.0;
    for s in builtin_scenarios() {
        let coarse = compare(&p, &s, 0.8, &PassOptions::default()).map_err(err)?.report;
        let fine = compare(&p, &s, 0.8, &PassOptions { step: 0.5, ..PassOptions::default() }).map_err(err)?.report;
        for (a, b) in [
            (coarse.satellite.integrated_pairs, fine.satellite.integrated_pairs),
            (coarse.ground_optimized.pairs(), fine.ground_optimized.pairs()),
        ] {
            let rel = ((a - b) / b).abs();
            worst_rel = worst_rel.max(rel);
            ensure(rel <= 0.01, format!("{}: step halving moves total by {rel:.3e}", s.name))?;
        }
    }
    checks += 1;

    // Oracle reproducibility and the 100-seed convergence battery.
    let eta = fiber_efficiency(22.5e3, p.fiber_attenuation).map_err(err)?;
    let a = simulate_elementary(&p, eta, 10_000, 5).map_err(err)?;
    let b = simulate_elementary(&p, eta, 10_000, 5).map_err(err)?;
    ensure(a == b, "same seed, different estimate")?;
    let analytic = elem_success_prob(&p, eta).map_err(err)?.unnormalized;
    let mut inside = 0;
    for seed in 0..100 {
        let est = simulate_elementary(&p, eta, 10_000, seed).map_err(err)?;
        if est.standard_error > 0.0 && (est.mean - analytic).abs() < 3.0 * est.standard_error {
            inside += 1;
        }
    }
    ensure(inside >= 99, format!("seed battery {inside}/100 within 3 sigma"))?;
    checks += 2;

    Ok(format!(
        "{checks} property groups hold; step halving worst change {worst_rel:.2e}; seed battery {inside}/100"
    ))
}

fn main() -> ExitCode {
    let params = SystemParams::default();
    let shared = comparisons(&params);
    let with_shared = |f: fn(&[Comparison]) -> Outcome| match &shared {
        Ok(cs) => f(cs),
        Err(e) => Err(e.clone()),
    };
    let results: Vec<(&str, Outcome)> = vec![
        ("parameter table round trip", table_values_round_trip()),
        ("zenith link budget", zenith_link_budget()),
        ("peak space rate", peak_space_rate()),
        ("space fidelity band", with_shared(space_fidelity_band)),
        ("ground fidelity ordering and bands", with_shared(ground_fidelity_bands)),
        ("repeater optimizer", optimizer_counts()),
        ("method ordering", with_shared(method_ordering)),
        ("crossover bracket", crossover_bracket()),
        ("oracle equivalence", oracle_equivalence()),
        ("property suites", property_suites()),
    ];
    let mut failed = 0;
    for (i, (name, outcome)) in results.iter().enumerate() {
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
