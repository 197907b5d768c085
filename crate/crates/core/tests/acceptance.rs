//! End-to-end acceptance run. Each criterion writes one `PASS`/`FAIL` line to
//! stderr, uncaptured, so the verdicts show up in plain `cargo test` output.

use std::io::Write;
use std::time::Instant;

use tccva::config::RunConfig;
use tccva::curves::{
    calibrate_shift, subordinated_survival, CirParams, IntensityModel, JumpParams, MarketCurve, ModelKind,
};
use tccva::cva::{cva_independent, rho_sweep, CvaEstimate, Estimator, PricingConfig};
use tccva::experiment::{cmd_cva, shift_minimum, with_threads};
use tccva::exposure::ExposureParams;
use tccva::paths::{ScenarioEngine, SimConfig};
use tccva::validation::{
    clock_axis_oracle, forward_looking_closed_form, forward_looking_nested_mc, mc_survival_oracle,
    reconstruction_law_check, shifted_survival_moments, theta_mixture_oracle,
};

/// Criteria expected to fail, with the reason. The run asserts that they
/// still fail so that a fix is noticed.
const KNOWN_FAILURES: &[(u32, &str)] = &[(
    2,
    "TC-CIR first set: psi(3) = -8.2e-6, the printed clock parameters sit on the psi >= 0 boundary only to rounding",
)];

struct Verdict {
    id: u32,
    title: &'static str,
    pass: bool,
    lines: Vec<String>,
    seconds: f64,
}

fn say(line: &str) {
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "{line}");
}

fn set_a() -> CirParams {
    CirParams::new(0.02, 0.161, 0.08, 0.03).unwrap()
}

fn set_b() -> CirParams {
    CirParams::new(0.072, 0.05, 0.045, 0.04).unwrap()
}

fn models_a() -> [IntensityModel; 3] {
    [
        IntensityModel::Cir(set_a()),
        IntensityModel::Jcir(set_a(), JumpParams::from_mean_size(0.07, 0.08).unwrap()),
        IntensityModel::TcCir(set_a(), JumpParams::from_mean_size(0.6, 0.512).unwrap()),
    ]
}

fn models_b() -> [IntensityModel; 3] {
    [
        IntensityModel::Cir(set_b()),
        IntensityModel::Jcir(set_b(), JumpParams::from_mean_size(0.07, 0.05).unwrap()),
        IntensityModel::TcCir(set_b(), JumpParams::from_mean_size(0.4, 0.49).unwrap()),
    ]
}

fn flat() -> MarketCurve {
    MarketCurve::flat(0.05, 3.0).unwrap()
}

fn engine(model: IntensityModel, exposure: ExposureParams, delta: f64, seed: u64) -> ScenarioEngine {
    let shift = calibrate_shift(&model, &flat(), delta / 2.0).unwrap();
    ScenarioEngine::new(model, &shift, exposure, 3.0, delta, seed).unwrap()
}

fn gaussian() -> ExposureParams {
    ExposureParams::gaussian(0.08, 3.0)
}

fn c1_calibration() -> (bool, Vec<String>) {
    let mut pass = true;
    let mut lines = Vec::new();
    let market = flat();
    for model in models_a() {
        let shift = calibrate_shift(&model, &market, 5e-4).unwrap();
        let worst = shift
            .times()
            .map(|t| ((-shift.integral(t)).exp() * model.survival(t).unwrap() - market.survival(t)).abs())
            .fold(0.0, f64::max);
        let ok = worst < 1e-6;
        pass &= ok;
        lines.push(format!("{}: max |P_shifted - P_M| = {worst:.2e} (< 1e-6: {ok})", model.kind()));
        let e = ScenarioEngine::new(model, &shift, gaussian(), 3.0, 1e-3, 101).unwrap();
        let times = [1.0, 2.0, 3.0];
        let mc = shifted_survival_moments(&e, &times, 100_000).unwrap();
        for (t, m) in times.iter().zip(&mc) {
            let z = (m.mean() - market.survival(*t)) / m.std_error();
            let ok = z.abs() <= 3.0;
            pass &= ok;
            lines.push(format!(
                "{} MC S({t}) = {:.6} +- {:.1e} vs {:.6} ({z:+.2} sigma)",
                model.kind(),
                m.mean(),
                m.std_error(),
                market.survival(*t)
            ));
        }
    }
    (pass, lines)
}

fn c2_nonnegative_shift() -> (bool, Vec<String>) {
    let mut pass = true;
    let mut lines = Vec::new();
    for (set, models) in [("first", models_a()), ("second", models_b())] {
        for model in models {
            let shift = calibrate_shift(&model, &flat(), 0.005).unwrap();
            let (t, v) = shift_minimum(&shift);
            let ok = v >= -1e-8;
            pass &= ok;
            lines.push(format!(
                "{set} set {}: min psi = {v:+.3e} at t = {t:.3} ({})",
                model.kind(),
                if ok { "ok" } else { "below -1e-8" }
            ));
        }
    }
    (pass, lines)
}

fn c3_bochner() -> (bool, Vec<String>) {
    let p = set_a();
    let clock = JumpParams::from_mean_size(0.6, 0.512).unwrap();
    let times = [1.0, 2.0, 3.0];
    let mix = theta_mixture_oracle(&p, &clock, &times, p.x0, 1_000_000, 301).unwrap();
    let path = mc_survival_oracle(&IntensityModel::TcCir(p, clock), 3.0, &times, 1e-3, 100_000, 302).unwrap();
    let mut pass = true;
    let mut lines = Vec::new();
    for (k, t) in times.iter().enumerate() {
        let exact = subordinated_survival(&p, &clock, *t, p.x0, 1e-12).unwrap();
        let zm = (mix[k].mean() - exact) / mix[k].std_error();
        let zp = (path[k].mean() - exact) / path[k].std_error();
        pass &= zm.abs() <= 3.0 && zp.abs() <= 3.0;
        lines.push(format!(
            "T = {t}: P = {exact:.7}, theta mixture {:.7} ({zm:+.2} sigma), killing-rate path {:.7} ({zp:+.2} sigma)",
            mix[k].mean(),
            path[k].mean()
        ));
    }
    // not part of the verdict: the same quantity integrated along the clock axis
    let axis = clock_axis_oracle(&p, &clock, 3.0, 1e-3, 20_000, 303).unwrap();
    let exact = subordinated_survival(&p, &clock, 3.0, p.x0, 1e-12).unwrap();
    lines.push(format!(
        "info: clock-axis path integral at T = 3: {:.7} ({:+.2} sigma, 2e4 paths)",
        axis.mean(),
        (axis.mean() - exact) / axis.std_error()
    ));
    (pass, lines)
}

fn c4_independent_cva() -> (bool, Vec<String>) {
    let pricing = PricingConfig::default();
    let closed = cva_independent(&flat(), &gaussian(), &pricing, 3.0, 1e-12).unwrap();
    let sim = SimConfig { horizon: 3.0, delta: 0.01, scenarios: 100_000, rho: 0.0, seed: 401 };
    let mut pass = true;
    let mut lines = vec![format!("closed form {:.8}", closed.value)];
    for model in models_a() {
        let e = engine(model, gaussian(), sim.delta, sim.seed);
        let mc = tccva::cva::cva_plain_mc(&e, &sim, &pricing).unwrap();
        let z = (mc.value - closed.value) / mc.std_error;
        pass &= z.abs() <= 2.0;
        lines.push(format!("{}: plain MC {:.8} +- {:.1e} ({z:+.2} sigma)", model.kind(), mc.value, mc.std_error));
    }
    (pass, lines)
}

const RHOS: [f64; 7] = [-0.9, -0.6, -0.3, 0.0, 0.3, 0.6, 0.9];

/// Plain and adaptive estimates per model across `RHOS` at `m = 10⁵`.
fn wwr_sweep() -> Vec<(ModelKind, Vec<CvaEstimate>)> {
    let pricing = PricingConfig::default();
    let sim = SimConfig { horizon: 3.0, delta: 0.01, scenarios: 100_000, rho: 0.0, seed: 501 };
    let times = tccva::paths::base_grid(3.0, sim.delta);
    let ez = tccva::cva::cva_independent_on_grid(&flat(), &gaussian(), &pricing, &times).unwrap();
    models_a()
        .into_iter()
        .map(|model| {
            let e = engine(model, gaussian(), sim.delta, sim.seed);
            (model.kind(), rho_sweep(&e, &RHOS, &sim, &pricing, Some(ez)).unwrap())
        })
        .collect()
}

fn pick(rows: &[CvaEstimate], rho: f64, est: Estimator) -> CvaEstimate {
    *rows.iter().find(|r| r.rho == rho && r.estimator == est).unwrap()
}

fn c5_ordering(sweep: &[(ModelKind, Vec<CvaEstimate>)]) -> (bool, Vec<String>) {
    let mut pass = true;
    let mut lines = Vec::new();
    for (rho, descending) in [(0.9, true), (-0.9, false)] {
        let est: Vec<CvaEstimate> = sweep.iter().map(|(_, r)| pick(r, rho, Estimator::AdaptiveCv)).collect();
        // order CIR, JCIR, TCCIR
        let (cir, jcir, tc) = (est[0], est[1], est[2]);
        let ok = if descending {
            tc.separated_from(&jcir) && tc.value > jcir.value && jcir.separated_from(&cir) && jcir.value > cir.value
        } else {
            tc.separated_from(&jcir) && tc.value < jcir.value && jcir.separated_from(&cir) && jcir.value < cir.value
        };
        pass &= ok;
        lines.push(format!(
            "rho = {rho:+}: CIR {:.6} [{:.6}, {:.6}], JCIR {:.6} [{:.6}, {:.6}], TCCIR {:.6} [{:.6}, {:.6}] ({})",
            cir.value,
            cir.ci95.0,
            cir.ci95.1,
            jcir.value,
            jcir.ci95.0,
            jcir.ci95.1,
            tc.value,
            tc.ci95.0,
            tc.ci95.1,
            if ok { "ordered" } else { "not separated" }
        ));
        let plain: Vec<CvaEstimate> = sweep.iter().map(|(_, r)| pick(r, rho, Estimator::PlainMc)).collect();
        lines.push(format!(
            "  plain MC for reference: {:.6} / {:.6} / {:.6} (std err {:.1e})",
            plain[0].value, plain[1].value, plain[2].value, plain[0].std_error
        ));
    }
    (pass, lines)
}

fn c6_monotone(sweep: &[(ModelKind, Vec<CvaEstimate>)]) -> (bool, Vec<String>) {
    let mut pass = true;
    let mut lines = Vec::new();
    for (kind, rows) in sweep {
        let est: Vec<CvaEstimate> = RHOS.iter().map(|&r| pick(rows, r, Estimator::PlainMc)).collect();
        let mut worst = f64::INFINITY;
        for w in est.windows(2) {
            let joint = (w[0].std_error.powi(2) + w[1].std_error.powi(2)).sqrt();
            let slack = (w[1].value - w[0].value) / joint;
            worst = worst.min(slack);
            pass &= w[1].value >= w[0].value || slack >= -2.0;
        }
        let values: Vec<String> = est.iter().map(|e| format!("{:.6}", e.value)).collect();
        lines.push(format!("{kind}: {} (smallest step {worst:+.1} joint sigma)", values.join(" ")));
    }
    (pass, lines)
}

fn c7_control_variate() -> (bool, Vec<String>) {
    let rhos = [-0.9, -0.5, -0.1, 0.1, 0.5, 0.9];
    let pricing = PricingConfig::default();
    let sim = SimConfig { horizon: 3.0, delta: 0.01, scenarios: 10_000, rho: 0.0, seed: 701 };
    let times = tccva::paths::base_grid(3.0, sim.delta);
    let ez = tccva::cva::cva_independent_on_grid(&flat(), &gaussian(), &pricing, &times).unwrap();
    let mut pass = true;
    let mut lines = Vec::new();
    for model in models_a() {
        let e = engine(model, gaussian(), sim.delta, sim.seed);
        let rows = rho_sweep(&e, &rhos, &sim, &pricing, Some(ez)).unwrap();
        let ratio =
            |r: f64| pick(&rows, r, Estimator::AdaptiveCv).std_error / pick(&rows, r, Estimator::PlainMc).std_error;
        let ratios: Vec<f64> = rhos.iter().map(|&r| ratio(r)).collect();
        let ok = ratios.iter().all(|&q| q < 1.0) && ratio(0.1) < ratio(0.9);
        pass &= ok;
        let shown: Vec<String> = rhos.iter().zip(&ratios).map(|(r, q)| format!("{r:+}:{q:.3}")).collect();
        lines.push(format!("{}: se(CV)/se(MC) {}", model.kind(), shown.join(" ")));
    }
    (pass, lines)
}

fn c8_reconstruction() -> (bool, Vec<String>) {
    let clock = JumpParams::from_mean_size(0.6, 0.512).unwrap();
    let m = 1_000_000;
    let s = reconstruction_law_check(&clock, 3.0, 0.01, m, &[1.0, 2.0, 3.0], 100_000, 801).unwrap();
    let ratio = s.terminal.variance() / 3.0;
    let bound = 3.0 / (m as f64).sqrt();
    let mut pass = (0.99..=1.01).contains(&ratio) && s.lag1.abs() < bound;
    let mut lines = vec![
        format!("Var(W~_3)/3 = {ratio:.5}"),
        format!("lag-1 increment autocorrelation {:+.2e} (bound {bound:.1e})", s.lag1),
    ];
    for (t, p) in &s.ks {
        pass &= *p >= 0.01;
        lines.push(format!("KS t = {t}: p = {p:.3}"));
    }
    (pass, lines)
}

fn c9_forward_looking() -> (bool, Vec<String>) {
    let (sigma, s, theta_s, t) = (0.08, 1.0, 1.3, 2.0);
    let gap: f64 = theta_s - s;
    let c = gap.sqrt();
    let derived = forward_looking_nested_mc(sigma, 0.5, s, t, theta_s, c, 1_000_000, 901).unwrap();
    let closed = forward_looking_closed_form(sigma, 0.5, gap, c);
    let z_closed = (derived.mean() - closed) / derived.std_error();
    let strong = forward_looking_nested_mc(sigma, 0.9, s, t, theta_s, c, 1_000_000, 902).unwrap();
    let z_strong = (strong.mean() - 1.0) / strong.std_error();
    let zero = forward_looking_nested_mc(sigma, 0.0, s, t, theta_s, c, 1_000_000, 903).unwrap();
    let z_zero = (zero.mean() - 1.0) / zero.std_error();
    let pass = z_closed.abs() <= 3.0 && z_strong.abs() > 2.576 && z_zero.abs() <= 2.576;
    let printed = tccva::validation::forward_looking_printed_form(sigma, 0.5, gap, c);
    (
        pass,
        vec![
            format!("rho = 0.5: nested MC {:.6} vs closed form {closed:.6} ({z_closed:+.2} sigma)", derived.mean()),
            format!(
                "info: uncorrected display gives {printed:.6} ({:+.1} sigma from the nested MC)",
                (derived.mean() - printed) / derived.std_error()
            ),
            format!("rho = 0.9: E[V_t|.]/V_s = {:.6} ({z_strong:+.1} sigma from 1, rejected)", strong.mean()),
            format!("rho = 0: E[V_t|.]/V_s = {:.6} ({z_zero:+.2} sigma from 1)", zero.mean()),
        ],
    )
}

fn c10_determinism() -> (bool, Vec<String>) {
    let text = r#"
        estimators = ["plain_mc", "adaptive_cv", "independent_closed_form"]
        rhos = [-0.9, 0.0, 0.9]
        [cir]
        kappa = 0.02
        beta = 0.161
        eta = 0.08
        x0 = 0.03
        [intensity_jumps]
        omega = 0.07
        mean_size = 0.08
        [clock]
        omega = 0.6
        mean_size = 0.512
        [market]
        hazard = 0.05
        [exposure]
        kind = "gaussian_forward"
        sigma = 0.08
        maturity = 3.0
        [sim]
        horizon = 3.0
        delta = 0.01
        scenarios = 10000
        seed = 1001
    "#;
    let cfg = RunConfig::parse(text).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let files: Vec<Vec<u8>> = [1, 4, 8]
        .iter()
        .map(|&n| {
            let out = dir.path().join(format!("t{n}"));
            let (_, path) = with_threads(Some(n), || cmd_cva(&cfg, &out)).unwrap().unwrap();
            std::fs::read(path).unwrap()
        })
        .collect();
    let pass = files[0] == files[1] && files[0] == files[2];
    (pass, vec![format!("cva.csv: {} bytes, identical at 1/4/8 threads: {pass}", files[0].len())])
}

#[test]
fn acceptance() {
    let mut verdicts = Vec::new();
    let mut run = |id: u32, title: &'static str, f: &mut dyn FnMut() -> (bool, Vec<String>)| {
        let start = Instant::now();
        let (pass, lines) = f();
        let v = Verdict { id, title, pass, lines, seconds: start.elapsed().as_secs_f64() };
        say(&format!("criterion {:>2} {} [{:.1}s] {}", v.id, if v.pass { "PASS" } else { "FAIL" }, v.seconds, v.title));
        for l in &v.lines {
            say(&format!("    {l}"));
        }
        verdicts.push(v);
    };
    run(1, "calibration round-trip", &mut c1_calibration);
    run(2, "nonnegative shift", &mut c2_nonnegative_shift);
    run(3, "Bochner consistency", &mut c3_bochner);
    run(4, "independent-CVA agreement", &mut c4_independent_cva);
    let mut sweep = Vec::new();
    run(5, "WWR ordering", &mut || {
        sweep = wwr_sweep();
        c5_ordering(&sweep)
    });
    run(6, "WWR monotonicity", &mut || c6_monotone(&sweep));
    run(7, "control-variate effectiveness", &mut c7_control_variate);
    run(8, "synchronized reconstruction law", &mut c8_reconstruction);
    run(9, "forward-looking demonstration", &mut c9_forward_looking);
    run(10, "determinism across thread counts", &mut c10_determinism);

    let passed = verdicts.iter().filter(|v| v.pass).count();
    say(&format!("acceptance: {passed}/{} criteria pass", verdicts.len()));
    for v in &verdicts {
        match KNOWN_FAILURES.iter().find(|(id, _)| *id == v.id) {
            Some((_, why)) => {
                say(&format!("criterion {} is a known failure: {why}", v.id));
                assert!(!v.pass, "criterion {} now passes; remove it from KNOWN_FAILURES", v.id);
            }
            None => assert!(v.pass, "criterion {} ({}) failed", v.id, v.title),
        }
    }
}
