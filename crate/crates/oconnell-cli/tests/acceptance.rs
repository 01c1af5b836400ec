//! Acceptance suite: one test per criterion, each printing a pass/fail
//! line with its measured numbers. Tolerances and runtime budgets are
//! pinned here and nowhere else.

use std::process::Command;
use std::time::Instant;

use oconnell::cbm::{cbm_estimate, McConfig};
use oconnell::fredholm::{bc_fredholm_det, check_kernel_chain, fredholm_rank_det, ContourSpec};
use oconnell::kernel::{reciprocal_kernel, theta_soft, DriftSpec, ObservablePoint};
use oconnell::measure::{
    direct_observable, identity_det_size2, identity_symmetrization, moment_first, moment_kappa,
    moment_two_term, wm_density,
};
use oconnell::ncbm::{gap_probability, gue_density, ncbm_density, WeylPoint};
use oconnell::numkit::{
    complex_det, gauss_legendre, gaussian_density, log_gamma, uniform, ChaCha8Rng, Complex,
    QuadConfig, RngStream,
};
use oconnell::testkit::adaptive_simpson;
use oconnell::whittaker::{
    check_asymptotic, check_recurrence, sklyanin_density, sklyanin_density_gamma_form,
    whittaker_givental, whittaker_n2, WhittakerIndex,
};

fn canonical() -> DriftSpec {
    DriftSpec::new(vec![-0.5, 0.5], 0.5).unwrap()
}

fn n3_drift() -> DriftSpec {
    DriftSpec::new(vec![-0.6, 0.0, 0.7], 0.4).unwrap()
}

/// Criteria hold this lock while they run so the per-criterion runtime
/// budgets measure compute, not test-harness CPU contention.
static SERIAL: std::sync::Mutex<()> = std::sync::Mutex::new(());

struct Criterion {
    label: &'static str,
    started: Instant,
    budget_secs: f64,
    _guard: std::sync::MutexGuard<'static, ()>,
}

impl Criterion {
    fn start(label: &'static str, budget_secs: f64) -> Self {
        let guard = SERIAL.lock().unwrap_or_else(|poisoned| poisoned.into_inner());
        Criterion {
            label,
            started: Instant::now(),
            budget_secs,
            _guard: guard,
        }
    }

    fn check(&self, ok: bool, detail: &str) {
        if ok {
            println!("[{}] PASS: {detail}", self.label);
        } else {
            println!("[{}] FAIL: {detail}", self.label);
            panic!("{} failed: {detail}", self.label);
        }
    }

    fn finish(&self, detail: &str) {
        let elapsed = self.started.elapsed().as_secs_f64();
        let ok = elapsed < self.budget_secs;
        if ok {
            println!("[{}] PASS ({elapsed:.2}s < {}s): {detail}", self.label, self.budget_secs);
        } else {
            println!(
                "[{}] FAIL (runtime {elapsed:.2}s >= {}s): {detail}",
                self.label, self.budget_secs
            );
            panic!("{} exceeded its runtime budget", self.label);
        }
    }
}

#[test]
fn criterion_1_n1_three_way_agreement() {
    let c = Criterion::start("criterion 1: N=1 three-way agreement", 1.0);
    let quad = QuadConfig::default();
    let drift = DriftSpec::new(vec![0.3], 0.5).unwrap();
    let mut worst = 0.0f64;
    for &h in &[-1.0, 0.0, 1.0] {
        let obs = ObservablePoint::new(1.0, h).unwrap();
        let rank = fredholm_rank_det(&drift, &obs, &quad).unwrap();
        let direct = direct_observable(&drift, &obs, &quad).unwrap();
        // Third route: the Gaussian-Gumbel integral evaluated on its own.
        let closed = adaptive_simpson(
            &|x: f64| theta_soft(x - h, 0.5) * gaussian_density(1.0, 0.3, x).unwrap(),
            0.3 - 14.0,
            0.3 + 14.0,
            1e-12,
        );
        worst = worst
            .max((rank - direct).abs())
            .max((rank - closed).abs())
            .max((direct - closed).abs());
    }
    c.check(worst < 1e-6, &format!("worst pairwise |diff| {worst:.3e} < 1e-6"));
    c.finish("three routes agree at h in {-1, 0, 1}");
}

#[test]
fn criterion_2_n2_rank_det_vs_direct_oracle() {
    let c = Criterion::start("criterion 2: N=2 determinant vs direct oracle", 120.0);
    let quad = QuadConfig::default();
    let drift = canonical();
    let mut worst = 0.0f64;
    for &h in &[-1.0, 0.0, 1.0] {
        let obs = ObservablePoint::new(1.0, h).unwrap();
        let rank = fredholm_rank_det(&drift, &obs, &quad).unwrap();
        let direct = direct_observable(&drift, &obs, &quad).unwrap();
        worst = worst.max((rank - direct).abs());
    }
    c.check(worst < 1e-3, &format!("worst |diff| {worst:.3e} < 1e-3"));
    c.finish("canonical configuration, h in {-1, 0, 1}");
}

#[test]
fn criterion_3_monte_carlo_vs_rank_det() {
    let c = Criterion::start("criterion 3: Monte Carlo vs determinant", 60.0);
    let quad = QuadConfig::default();
    for (tag, drift) in [("N=2", canonical()), ("N=3", n3_drift())] {
        for &h in &[-1.0, 0.0, 1.0] {
            let obs = ObservablePoint::new(1.0, h).unwrap();
            let reference = fredholm_rank_det(&drift, &obs, &quad).unwrap();
            let est = cbm_estimate(&drift, &obs, &McConfig::new(100_000, 12345)).unwrap();
            let pull = (est.value - reference).abs() / est.std_error;
            c.check(
                pull < 3.0,
                &format!(
                    "{tag} h={h}: |{:.5} - {reference:.5}| = {pull:.2} sigma < 3",
                    est.value
                ),
            );
            c.check(
                est.imag_residual.abs() < 3.0 * est.imag_std_error,
                &format!(
                    "{tag} h={h}: imaginary residual {:.2e} within 3 sigma ({:.2e})",
                    est.imag_residual,
                    3.0 * est.imag_std_error
                ),
            );
        }
    }
    c.finish("1e5 samples, canonical N=2 and N=3 drifts");
}

#[test]
fn criterion_4_contour_route() {
    let c = Criterion::start("criterion 4: double-contour route", 120.0);
    let quad = QuadConfig::default();
    let drift = canonical();
    let obs = ObservablePoint::new(1.0, 0.0).unwrap();
    let contour = ContourSpec::defaults(&drift, obs.t, &quad).unwrap();
    let series = bc_fredholm_det(&drift, &obs, &contour, 3).unwrap();
    let mags = &series.term_magnitudes;
    c.check(
        mags[2] < mags[1] && mags[3] < mags[2],
        &format!("term magnitudes strictly decreasing: {mags:?}"),
    );
    let rank = fredholm_rank_det(&drift, &obs, &quad).unwrap();
    let gap = (series.value - rank).abs();
    c.check(gap < 1e-2, &format!("|partial sum - rank det| {gap:.3e} < 1e-2"));
    let mut worst = 0.0f64;
    for &x in &[-1.0, 0.0, 1.0] {
        for &xp in &[-1.0, 0.0, 1.0] {
            let r = check_kernel_chain(&drift, &obs, x, xp, &contour, &quad).unwrap();
            worst = worst.max(r);
        }
    }
    c.check(worst < 1e-6, &format!("worst chain residual {worst:.3e} < 1e-6 on the 3x3 grid"));
    c.finish("series truncation and kernel chain verified");
}

#[test]
fn criterion_5_combinatorial_limit_sweep() {
    let c = Criterion::start("criterion 5: combinatorial-limit sweep", 180.0);
    let quad = QuadConfig::default();
    let start = WeylPoint::new(vec![-0.5, 0.5]).unwrap();
    let oracle = gap_probability(&start, 1.0, 0.0, &quad).unwrap();
    let obs = ObservablePoint::new(1.0, 0.0).unwrap();
    let gap_at = |a: f64| -> f64 {
        let drift = DriftSpec::new(vec![-0.5, 0.5], a).unwrap();
        (fredholm_rank_det(&drift, &obs, &quad).unwrap() - oracle).abs()
    };
    let swept_gaps: Vec<f64> = [0.4, 0.2, 0.1, 0.05].iter().map(|&a| gap_at(a)).collect();
    println!(
        "[criterion 5] oracle = {oracle:.8}; |E_a - oracle| over a = 0.4, 0.2, 0.1, 0.05: {swept_gaps:?}"
    );
    // Context for the failure below: the two independent evaluators agree
    // on E_a to ~1e-7 at every a, and the sweep converges linearly once a
    // is past the sign change of the total softening bias near a ~ 0.38.
    let tail_gaps: Vec<f64> = [0.2, 0.1, 0.05, 0.025, 0.0125]
        .iter()
        .map(|&a| gap_at(a))
        .collect();
    println!("[criterion 5] gaps over a = 0.2 ... 0.0125: {tail_gaps:?}");
    let tail_monotone = tail_gaps.windows(2).all(|w| w[1] < w[0]);
    c.check(
        tail_monotone,
        &format!("supplementary: gaps strictly decreasing from a = 0.2 down: {tail_gaps:?}"),
    );
    // Known failure: E_{0.4} crosses the limit (the indicator-softening
    // and process-softening biases cancel near a ~ 0.38), so the first
    // step of this sweep rises even though the convergence itself is
    // clean. Asserted anyway so the behavior stays visible.
    let monotone = swept_gaps.windows(2).all(|w| w[1] < w[0]);
    c.check(
        monotone,
        &format!("|E_a - oracle| strictly decreasing over a = 0.4, 0.2, 0.1, 0.05: {swept_gaps:?}"),
    );
    c.finish("sweep against the noncolliding gap probability");
}

#[test]
fn criterion_6_moments() {
    let c = Criterion::start("criterion 6: moment formulas", 120.0);
    let quad = QuadConfig::default();
    let drift = canonical();
    let pair = moment_first(&drift, 1.0, &quad).unwrap();
    c.check(
        pair.rel_gap < 1e-10,
        &format!("residue and contour routes agree to {:.3e} < 1e-10", pair.rel_gap),
    );
    let m2 = moment_kappa(&drift, 1.0, 2, &quad).unwrap();
    let m2_two = moment_two_term(&drift, 1.0, &quad).unwrap();
    let rel2 = (m2 - m2_two).abs() / m2.abs();
    c.check(
        rel2 < 1e-8,
        &format!("kappa = 2 partition form vs two-term expression: {rel2:.3e} < 1e-8"),
    );
    // Density-oracle comparison over tilted 5.5-sigma windows; wider boxes
    // reach the region where the exponential weight amplifies the
    // density's quadrature noise floor above the signal.
    let a = drift.a();
    let t = 1.0f64;
    let weighted = |kappa: f64| -> f64 {
        let pad = 5.5 * t.sqrt();
        let d_cut = 2.0 * kappa * t / a + 8.0 * t.sqrt();
        let (x1s, w1s) = gauss_legendre(
            500,
            t * drift.nu_hat()[0] - kappa * t / a - pad,
            t * drift.nu_hat()[0] + pad,
        )
        .unwrap();
        let (x2s, w2s) = gauss_legendre(
            500,
            t * drift.nu_hat()[1] - pad,
            t * drift.nu_hat()[1] + pad,
        )
        .unwrap();
        let mut total = 0.0;
        for (&x1, &w1) in x1s.iter().zip(&w1s) {
            let mut acc = 0.0;
            for (&x2, &w2) in x2s.iter().zip(&w2s) {
                if x2 - x1 <= d_cut {
                    acc += w2 * wm_density(&drift, t, &[x1, x2], &quad).unwrap();
                }
            }
            total += w1 * (-kappa * x1 / a).exp() * acc;
        }
        total
    };
    let direct1 = weighted(1.0);
    let rel = (pair.residues - direct1).abs() / pair.residues.abs();
    c.check(
        rel < 1e-3,
        &format!("first moment vs density oracle: {rel:.3e} < 1e-3"),
    );
    let direct2 = weighted(2.0);
    let rel = (m2 - direct2).abs() / m2.abs();
    c.check(rel < 1e-2, &format!("second moment vs density oracle: {rel:.3e} < 1e-2"));
    c.finish("contour, residue and density routes consistent");
}

#[test]
fn criterion_7_identity_suites() {
    let c = Criterion::start("criterion 7: identity suites", 60.0);
    let quad = QuadConfig::default();
    // Gamma reflection, 100 randomized trials at 1e-11.
    let mut r = RngStream::new(71, 0).into_rng();
    let mut worst = 0.0f64;
    let mut n = 0;
    while n < 100 {
        let re = uniform(&mut r) * 10.0 - 5.0;
        let im = uniform(&mut r) * 10.0 - 5.0;
        if (re - re.round()).abs() < 1e-3 && im.abs() < 1e-3 {
            continue;
        }
        let z = Complex::new(re, im);
        let lg = log_gamma(z).unwrap() + log_gamma(Complex::new(1.0 - re, -im)).unwrap();
        worst = worst.max((lg.exp() * (z * std::f64::consts::PI).sin() / std::f64::consts::PI
            - 1.0)
            .norm());
        n += 1;
    }
    c.check(worst < 1e-11, &format!("Gamma reflection worst residual {worst:.3e} < 1e-11"));
    // Sklyanin dual forms.
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let m1 = uniform(&mut r) * 2.0 - 1.0;
        let g12 = 0.1 + uniform(&mut r) * 2.9;
        let g23 = 0.1 + uniform(&mut r) * 2.9;
        let mu = [m1, m1 + g12, m1 + g12 + g23];
        let a = sklyanin_density(&mu);
        let b = sklyanin_density_gamma_form(&mu).unwrap();
        worst = worst.max((a - b).abs() / a.abs());
    }
    c.check(worst < 1e-11, &format!("Sklyanin dual forms worst gap {worst:.3e} < 1e-11"));
    // Size-2 determinant identity and the symmetrization identity to kappa = 4.
    let mut worst2 = 0.0f64;
    let mut worst4 = 0.0f64;
    let mut done2 = 0;
    let mut done4 = 0;
    while done2 < 100 || done4 < 100 {
        let draw = |r: &mut ChaCha8Rng| {
            Complex::new(uniform(r) * 2.0 - 1.0, uniform(r) * 2.0 - 1.0)
        };
        if done2 < 100 {
            if let Ok((d, cl)) = identity_det_size2(draw(&mut r), draw(&mut r)) {
                worst2 = worst2.max((d - cl).norm() / cl.norm().max(1.0));
                done2 += 1;
            }
        }
        if done4 < 100 {
            let v: Vec<Complex> = (0..4).map(|_| draw(&mut r)).collect();
            if let Ok((l, rh)) = identity_symmetrization(&v) {
                worst4 = worst4.max((l - rh).norm() / rh.norm().max(1.0));
                done4 += 1;
            }
        }
    }
    c.check(worst2 < 1e-11, &format!("size-2 determinant identity worst gap {worst2:.3e} < 1e-11"));
    c.check(worst4 < 1e-11, &format!("symmetrization identity (kappa=4) worst gap {worst4:.3e} < 1e-11"));
    // Kernel rank bound and reality.
    let drift = canonical();
    let pts = [-0.7, 0.2, 1.1];
    let mut m = vec![vec![Complex::new(0.0, 0.0); 3]; 3];
    let mut scale = 0.0f64;
    for (p, &x) in pts.iter().enumerate() {
        for (q, &xp) in pts.iter().enumerate() {
            // reciprocal_kernel rejects imaginary residuals above 1e-10,
            // so evaluating the grid is the reality check.
            let v = reciprocal_kernel(&drift, 1.0, x, xp, &quad).unwrap();
            m[p][q] = Complex::new(v, 0.0);
            scale = scale.max(v.abs());
        }
    }
    let det = complex_det(&m).unwrap().norm();
    c.check(
        det < 1e-8 * scale.powi(3),
        &format!("rank bound: 3x3 minor {det:.3e} < 1e-8 x {scale:.3e}^3"),
    );
    // Fredholm value range and monotonicity on a 9-point h-grid.
    let mut prev = f64::INFINITY;
    let mut ok = true;
    for i in 0..9 {
        let h = -2.0 + 0.5 * i as f64;
        let v = fredholm_rank_det(&drift, &ObservablePoint::new(1.0, h).unwrap(), &quad).unwrap();
        ok &= (-1e-6..=1.0 + 1e-6).contains(&v) && v <= prev + 1e-9;
        prev = v;
    }
    c.check(ok, "fredholm value in [0,1] +- 1e-6 and nonincreasing over 9 h-points");
    c.finish("all identity suites at their stated tolerances");
}

#[test]
fn criterion_8_whittaker_layer() {
    let c = Criterion::start("criterion 8: Whittaker layer", 180.0);
    let quad = QuadConfig::default();
    // Closed form vs Givental quadrature on a 5x5 grid.
    let mut worst = 0.0f64;
    for (i, &nu1) in [-0.5, -0.2, 0.1, 0.6, 1.3].iter().enumerate() {
        for (k, &dx) in [0.0, 0.4, 1.0, 1.9, 3.2].iter().enumerate() {
            let nu2 = nu1 + 0.3 + 0.2 * (i as f64);
            let x1 = -0.5 + 0.1 * (k as f64);
            let idx = WhittakerIndex::from_reals(&[nu1, nu2]).unwrap();
            let (giv, _) = whittaker_givental(&idx, &[x1, x1 + dx], &quad).unwrap();
            let closed =
                whittaker_n2(Complex::new(nu1, 0.0), Complex::new(nu2, 0.0), x1, x1 + dx).unwrap();
            worst = worst.max((giv - closed).norm() / closed.norm());
        }
    }
    c.check(worst < 1e-8, &format!("closed form vs Givental: worst {worst:.3e} < 1e-8"));
    // Recurrence residual on 20 random inputs.
    let mut r = RngStream::new(81, 0).into_rng();
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let nu1 = uniform(&mut r) * 2.0 - 2.0;
        let gap = 0.2 + uniform(&mut r) * 1.8;
        let x1 = uniform(&mut r) * 4.0 - 2.0;
        let dx = uniform(&mut r) * 2.0;
        worst = worst.max(check_recurrence(&[nu1, nu1 + gap], &[x1, x1 + dx]).unwrap());
    }
    c.check(worst < 1e-8, &format!("recurrence residual worst {worst:.3e} < 1e-8"));
    // Small-scale asymptotic gaps strictly decreasing.
    let gaps = check_asymptotic(&[-1.0, 1.0], &[0.0, 1.0], &[0.4, 0.2, 0.1, 0.05]).unwrap();
    c.check(
        gaps.windows(2).all(|w| w[1] < w[0]),
        &format!("asymptotic gaps strictly decreasing: {gaps:?}"),
    );
    // Entrance-law normalization over the plane.
    let drift = canonical();
    let (x1s, w1s) = gauss_legendre(quad.gl_order, -12.5, 11.5).unwrap();
    let (x2s, w2s) = gauss_legendre(quad.gl_order, -11.5, 12.5).unwrap();
    let mut total = 0.0;
    for (&x1, &w1) in x1s.iter().zip(&w1s) {
        let mut acc = 0.0;
        for (&x2, &w2) in x2s.iter().zip(&w2s) {
            acc += w2 * wm_density(&drift, 1.0, &[x1, x2], &quad).unwrap();
        }
        total += w1 * acc;
    }
    c.check(
        (total - 1.0).abs() < 1e-3,
        &format!("entrance-law plane mass {total:.6} within 1e-3 of 1"),
    );
    // Noncolliding density normalization over the chamber.
    let x = WeylPoint::new(vec![0.0, 1.0]).unwrap();
    let (ys, ws) = gauss_legendre(320, -14.0, 15.0).unwrap();
    let mut mass = 0.0;
    for (i, (&y1, &w1)) in ys.iter().zip(&ws).enumerate() {
        for (&y2, &w2) in ys[i + 1..].iter().zip(&ws[i + 1..]) {
            mass += w1 * w2 * ncbm_density(1.0, &WeylPoint::new(vec![y1, y2]).unwrap(), &x).unwrap();
        }
    }
    c.check(
        (mass - 1.0).abs() < 1e-6,
        &format!("noncolliding density chamber mass {mass:.8} within 1e-6 of 1"),
    );
    // GUE density against the coincident-start limit.
    let eps = 1e-4;
    let start = WeylPoint::new(vec![-eps, eps]).unwrap();
    let mut worst = 0.0f64;
    for y in [[-1.0, 0.4], [0.1, 0.5], [-2.0, 2.2]] {
        let yp = WeylPoint::new(y.to_vec()).unwrap();
        let lim = ncbm_density(1.0, &yp, &start).unwrap();
        let gue = gue_density(1.0, &yp).unwrap();
        worst = worst.max((lim - gue).abs() / gue);
    }
    c.check(worst < 1e-4, &format!("GUE vs coincident-start limit: worst {worst:.3e} < 1e-4"));
    c.finish("Whittaker, noncolliding and GUE layers verified");
}

#[test]
fn criterion_9_cli_determinism() {
    let c = Criterion::start("criterion 9: CLI determinism", 120.0);
    let bin = env!("CARGO_BIN_EXE_oconnell");
    let dir = std::env::temp_dir();
    let outputs: Vec<Vec<u8>> = [("1", "a"), ("4", "b"), ("1", "c")]
        .iter()
        .map(|(threads, tag)| {
            let path = dir.join(format!("oconnell-acceptance-{}-{tag}.csv", std::process::id()));
            let status = Command::new(bin)
                .env("RAYON_NUM_THREADS", threads)
                .args(["cbm", "--samples", "5000", "--seed", "42", "--h", "-1:1:1", "--out"])
                .arg(&path)
                .status()
                .expect("binary runs");
            assert!(status.success());
            let bytes = std::fs::read(&path).expect("output written");
            std::fs::remove_file(&path).ok();
            bytes
        })
        .collect();
    c.check(
        outputs[0] == outputs[1] && outputs[0] == outputs[2],
        "cbm reruns byte-identical across seeds-fixed runs and 1 vs 4 worker threads",
    );
    let fred: Vec<Vec<u8>> = (0..2)
        .map(|i| {
            let path = dir.join(format!("oconnell-acceptance-f{i}-{}.csv", std::process::id()));
            let status = Command::new(bin)
                .args(["fredholm", "--h", "-2:2:0.5", "--seed", "7", "--out"])
                .arg(&path)
                .status()
                .expect("binary runs");
            assert!(status.success());
            let bytes = std::fs::read(&path).expect("output written");
            std::fs::remove_file(&path).ok();
            bytes
        })
        .collect();
    c.check(fred[0] == fred[1], "fredholm rerun byte-identical");
    c.finish("deterministic outputs for fixed seeds");
}
