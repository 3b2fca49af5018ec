use spinor_core::config::ScenarioConfig;
use spinor_core::experiments::{growth_estimate, run_sweep, SweepResult};

const DISC: &str = r#"
name = "disc"

[species]
preset = "rb87_f2"

[trap]
kind = "harmonic"
frequencies_hz = [176.0, 132.0]

[condensate]
atom_number = 2.0e10

[grid]
points = [48, 64]
margin = 1.3

[basis]
solver = "chebyshev"

[sweep]
q_min_hz = -80.0
q_max_hz = 0.0
steps = 161
"#;

fn arc(q: f64, qt: f64) -> f64 {
    (qt * qt - (q - qt) * (q - qt)).max(0.0).sqrt()
}

#[test]
fn no_spin_coupling_means_no_instability() {
    // a0 = a2 makes U1 vanish for F = 1
    let text = r#"
[species]
preset = "rb87_f1"
a2_m = 5.38702400699254e-9

[trap]
kind = "box"
half_widths_m = [10.0e-6]

[condensate]
atom_number = 7.5e14

[grid]
points = [199]

[sweep]
q_min_hz = -50.0
q_max_hz = 10.0
steps = 61
"#;
    let config = ScenarioConfig::from_toml_str(text, None).unwrap();
    let (prepared, sweep) = run_sweep(&config).unwrap();
    assert!(prepared.fields.omega_eff_hz.iter().all(|o| *o == 0.0));
    assert!(sweep.lambda_hz.iter().all(|l| *l == 0.0));
    assert!(sweep.resonances.is_empty());
    assert!(sweep.q_tilde_cr_hz.is_none());
}

#[test]
fn box_peaks_sit_on_level_resonances() {
    let config = ScenarioConfig::preset("box_oracle").unwrap();
    let dq = (config.sweep.q_max_hz - config.sweep.q_min_hz) / (config.sweep.steps - 1) as f64;
    let (prepared, sweep) = run_sweep(&config).unwrap();
    let u = prepared.fields.omega_eff_hz[0];
    assert!(sweep.resonances.len() >= 5);
    for peak in &sweep.resonances {
        // η(q) = −q − U1n0 meets the kinetic level E_n − U1n0
        let nearest = prepared
            .basis
            .energies_hz
            .iter()
            .map(|e| -u - (e - u))
            .min_by(|a, b| (a - peak.q_hz).abs().total_cmp(&(b - peak.q_hz).abs()))
            .unwrap();
        assert!((peak.q_hz - nearest).abs() <= 0.5 * dq, "{peak:?} vs {nearest}");
        assert!((peak.lambda_hz - u).abs() < 1e-3 * u);
    }
}

#[test]
fn truncated_arc_still_recovers_q_tilde() {
    // only the 60% of the lobe nearest q = 0
    let q: Vec<f64> = (0..=72).map(|k| -36.0 + 0.5 * k as f64).collect();
    let l: Vec<f64> = q.iter().map(|&x| arc(x, -30.0)).collect();
    let sweep = SweepResult::from_samples(q, l).unwrap();
    let qt = sweep.q_tilde_cr_hz.expect("fit");
    assert!((qt + 30.0).abs() <= 0.05 * 30.0, "{qt}");
}

#[test]
fn sweep_extrema_are_strict_local_extrema() {
    let q: Vec<f64> = (0..200).map(|k| -100.0 + 0.5 * k as f64).collect();
    let l: Vec<f64> = q.iter().map(|&x| 10.0 + (0.3 * x).sin() + 0.1 * x.cos()).collect();
    let sweep = SweepResult::from_samples(q, l).unwrap();
    assert!(!sweep.resonances.is_empty());
    for r in &sweep.resonances {
        let i = r.index;
        assert!(sweep.lambda_hz[i] > sweep.lambda_hz[i - 1] && sweep.lambda_hz[i] > sweep.lambda_hz[i + 1]);
    }
    for m in &sweep.minima {
        let i = m.index;
        assert!(sweep.lambda_hz[i] < sweep.lambda_hz[i - 1] && sweep.lambda_hz[i] < sweep.lambda_hz[i + 1]);
    }
}

#[test]
fn growth_ratio_follows_the_rate_difference() {
    let t = 21e-3;
    assert_eq!(growth_estimate(0.0, t, 0.0), 0.0);
    assert_eq!(growth_estimate(30.0, 0.0, 0.0), 0.0);
    let (strong, weak) = (growth_estimate(30.0, t, 0.0), growth_estimate(25.0, t, 0.0));
    let expect =
        ((2.0 * std::f64::consts::PI * 30.0 * t).sinh() / (2.0 * std::f64::consts::PI * 25.0 * t).sinh()).powi(2);
    assert!((strong / weak - expect).abs() < 1e-12 * expect);
    assert!(strong / weak > 1.0);
}

#[test]
fn resonances_are_stable_under_a_larger_basis() {
    let config = ScenarioConfig::from_toml_str(DISC, None).unwrap();
    let dq = (config.sweep.q_max_hz - config.sweep.q_min_hz) / (config.sweep.steps - 1) as f64;
    let (prepared, base) = run_sweep(&config).unwrap();
    let mut larger = config.clone();
    larger.basis.cutoff_hz = Some(2.0 * prepared.basis.energy_cutoff_hz);
    larger.basis.max_modes = Some(2 * prepared.basis.len().max(400));
    let (bigger, wide) = run_sweep(&larger).unwrap();
    assert!(bigger.basis.len() > prepared.basis.len());
    let peaks = |s: &SweepResult| {
        s.resonances
            .iter()
            .filter(|r| r.lambda_hz > 0.2 * s.lambda_hz.iter().cloned().fold(0.0, f64::max))
            .map(|r| r.q_hz)
            .collect::<Vec<_>>()
    };
    let (a, b) = (peaks(&base), peaks(&wide));
    assert_eq!(a.len(), b.len(), "{a:?} vs {b:?}");
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() <= 0.5 * dq, "{a:?} vs {b:?}");
    }
}

#[test]
fn sweeps_are_reproducible() {
    let config = ScenarioConfig::from_toml_str(DISC, None).unwrap();
    let (_, a) = run_sweep(&config).unwrap();
    let (_, b) = run_sweep(&config).unwrap();
    assert_eq!(a, b);
}
