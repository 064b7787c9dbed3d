//! End-to-end acceptance checks. Each test writes one PASS/FAIL line to
//! stderr (bypassing libtest capture) and then asserts.

use std::f64::consts::PI;
use std::io::Write;
use std::time::Instant;

use circle_core::channel::{
    complex_gaussian, sample_channel, steering_vector, ArrayGeometry, ChannelProfile, ChannelRealization, NoiseModel,
};
use circle_core::dft::{build_family, build_precoders, lemma1_product};
use circle_core::estimator::{algorithm1, complexity_psi, Codebook, TIE_TOLERANCE};
use circle_core::harness::{
    csv_string, preset, run_experiment, summarize, ExperimentConfig, Method, Sweep, SweepVariable,
    PRESET_NAMES,
};
use circle_core::receiver::{
    achieved_sinr, combine, desired_gain, exact_sinr, interference_gain, sinr_bound, SINR_CAP,
};
use circle_core::rng::stream;
use circle_core::transceiver::{make_frame, receive, receive_vector, transmit_frame, Pilots, SymbolSource};
use circle_core::{CMatrix, CVector};
use num_complex::Complex64;
use rand::Rng;

fn report(id: u32, name: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "criterion {id:>2} [{verdict}] {name}: {detail}");
}

/// Unitary DFT with `w = exp(-i 2 pi / N)`, columns reordered so column `j`
/// of member `k` is DFT column `(j - k) mod N`.
fn oracle_member(n: usize, k: usize) -> CMatrix {
    let s = 1.0 / (n as f64).sqrt();
    CMatrix::from_fn(n, n, |r, j| {
        let col = (j + n - k) % n;
        Complex64::from_polar(s, -2.0 * PI * ((r * col) % n) as f64 / n as f64)
    })
}

#[test]
fn criterion_01_permuted_dft_products() {
    let start = Instant::now();
    let mut worst_id = 0.0f64;
    let mut worst_off = 0.0f64;
    let mut worst_tr = 0.0f64;
    let mut members_match = true;
    let mut pass = true;
    for n in [2usize, 3, 4, 8, 16, 32, 64] {
        let fam = build_family(n).unwrap();
        let nf = n as f64;
        for k in 0..n {
            if (fam.member(k).unwrap() - oracle_member(n, k)).norm() > 1e-12 {
                members_match = false;
            }
        }
        for k in 0..n {
            for k2 in 0..n {
                let p = lemma1_product(&fam, k, k2).unwrap();
                if k == k2 {
                    let e = (&p - CMatrix::identity(n, n)).norm();
                    worst_id = worst_id.max(e / nf);
                    pass &= e < 1e-10 * nf;
                } else {
                    let mut off = 0.0f64;
                    for i in 0..n {
                        for j in 0..n {
                            if i != j {
                                off = off.max(p[(i, j)].norm());
                            }
                        }
                    }
                    let tr = p.trace().norm();
                    worst_off = worst_off.max(off);
                    worst_tr = worst_tr.max(tr / nf);
                    pass &= off < 1e-10 && tr < 1e-10 * nf;
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    pass &= members_match && secs < 30.0;
    report(
        1,
        "permuted DFT products",
        pass,
        &format!(
            "members match oracle: {members_match}; max ||I-P||/N {worst_id:.2e}, max off-diag {worst_off:.2e}, max |tr|/N {worst_tr:.2e}, {secs:.1}s"
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_02_interference_free_combining() {
    let start = Instant::now();
    let mut worst_g = 0.0f64;
    let mut worst_v = 0.0f64;
    let mut pass = true;
    for n in [4usize, 16, 32] {
        let geom = ArrayGeometry::narrowband(n, 100e9).unwrap();
        let fam = build_family(n).unwrap();
        let nf = n as f64;
        for t in 0..1000u64 {
            // alternate a LoS-dominant and an NLoS-dominant profile
            let delta2_db = if t % 2 == 0 { -15.0 } else { 3.0 };
            let profile = ChannelProfile {
                los_var: 1.0,
                nlos_var: 10f64.powf(delta2_db / 10.0),
                n_nlos: 3,
                angular_range: 2.0 * PI,
            };
            let mut rng = stream(2, &[n as u64, t]);
            let ch = sample_channel(&geom, 0, &mut rng, &profile);
            let h = ch.h(0).unwrap();
            let k = rng.random_range(0..n);
            let g = desired_gain(h, &fam, k).unwrap();
            worst_g = worst_g.max((g - nf).norm() / nf);
            pass &= (g - nf).norm() < 1e-9 * nf;
            for _ in 0..5 {
                let k2 = (k + rng.random_range(1..n)) % n;
                let v = interference_gain(h, &fam, k, k2).unwrap();
                worst_v = worst_v.max(v.norm() / nf);
                pass &= v.norm() < 1e-9 * nf;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    pass &= secs < 30.0;
    report(
        2,
        "desired gain N, zero interference",
        pass,
        &format!("max |g-N|/N {worst_g:.2e}, max |v|/N {worst_v:.2e}, {secs:.1}s"),
    );
    assert!(pass);
}

fn qpsk_decide(z: Complex64) -> Complex64 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Complex64::new(s.copysign(z.re), s.copysign(z.im))
}

#[test]
fn criterion_03_noiseless_qpsk_end_to_end() {
    let (n, k_devices, frames) = (32usize, 30usize, 10_000u64);
    let geom = ArrayGeometry::narrowband(n, 100e9).unwrap();
    let fam = build_family(n).unwrap();
    let pre = build_precoders(&fam);
    let profile = ChannelProfile {
        los_var: 1.0,
        nlos_var: 10f64.powf(-1.5),
        n_nlos: 3,
        angular_range: 2.0 * PI,
    };
    let noise = NoiseModel::noiseless(1.0);
    let scale = (noise.tx_power * n as f64).sqrt();
    let mut errors = 0usize;
    let mut symbols = 0usize;
    for f in 0..frames {
        let frame = make_frame(n, SymbolSource::Qpsk, &mut stream(3, &[f, 0])).unwrap();
        let xs = transmit_frame(&pre, &frame).unwrap();
        for k in 0..k_devices {
            let ch = sample_channel(&geom, k, &mut stream(3, &[f, 1, k as u64]), &profile);
            let h = ch.h(0).unwrap();
            let (y, _) = receive_vector(h, &xs, &noise, &mut stream(3, &[f, 2, k as u64])).unwrap();
            let d = combine(h, &fam, k, &y).unwrap() / scale;
            symbols += 1;
            if qpsk_decide(d) != frame.info()[k] {
                errors += 1;
            }
        }
    }
    let pass = errors == 0;
    report(
        3,
        "noiseless full-CSIR QPSK",
        pass,
        &format!("{errors} symbol errors in {symbols} symbols ({frames} frames)"),
    );
    assert!(pass);
}

#[test]
fn criterion_04_sinr_bound() {
    let n = 32;
    let geom = ArrayGeometry::narrowband(n, 100e9).unwrap();
    let noise = NoiseModel::new(0.1, 1.0).unwrap();
    let mut violations = 0;
    let mut min_gap = f64::INFINITY;
    for t in 0..10_000u64 {
        let mut rng = stream(4, &[t]);
        let profile = ChannelProfile {
            los_var: 1.0,
            nlos_var: 10f64.powf(rng.random_range(-40.0..5.0) / 10.0),
            n_nlos: rng.random_range(1..=4),
            angular_range: 2.0 * PI,
        };
        let ch = sample_channel(&geom, 0, &mut rng, &profile);
        let h = ch.h(0).unwrap();
        let e = exact_sinr(h, &noise).unwrap().sinr;
        let b = sinr_bound(h, &noise).unwrap().sinr;
        min_gap = min_gap.min((b - e) / b);
        if e > b {
            violations += 1;
        }
    }
    let mut worst_los = 0.0f64;
    for t in 0..1000u64 {
        let mut rng = stream(4, &[1 << 32, t]);
        let ch = sample_channel(&geom, 0, &mut rng, &ChannelProfile::los_only(2.0 * PI));
        let h = ch.h(0).unwrap();
        let e = exact_sinr(h, &noise).unwrap().sinr;
        let b = sinr_bound(h, &noise).unwrap().sinr;
        worst_los = worst_los.max((e - b).abs() / b);
    }
    let pass = violations == 0 && worst_los < 1e-12;
    report(
        4,
        "exact SINR <= bound (multipath), LoS equality",
        pass,
        &format!(
            "{violations} violations in 10000 channels (min relative gap {min_gap:.2e}); max LoS relative gap {worst_los:.2e}"
        ),
    );
    assert!(pass);
}

/// Array responses of wavelength ratio 1 repeat with period 2 in `sin`.
fn sine_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0);
    d.min(2.0 - d)
}

struct Search {
    n: usize,
    geom: ArrayGeometry,
    fam: circle_core::dft::PermutedDftFamily,
    pre: circle_core::dft::PrecoderSet,
    cb: Codebook,
    noise: NoiseModel,
}

impl Search {
    fn new(n: usize, q: usize) -> Self {
        let geom = ArrayGeometry::narrowband(n, 100e9).unwrap();
        let fam = build_family(n).unwrap();
        let pre = build_precoders(&fam);
        let cb = Codebook::full_range(&geom, q).unwrap();
        Self {
            n,
            geom,
            fam,
            pre,
            cb,
            noise: NoiseModel::noiseless(1.0),
        }
    }

    fn run(&self, ch: &ChannelRealization, seed: u64) -> circle_core::estimator::EstimationResult {
        let frame = make_frame(self.n, SymbolSource::Gaussian, &mut stream(seed, &[0])).unwrap();
        let xs = transmit_frame(&self.pre, &frame).unwrap();
        let block = receive(ch, 0, &xs, &self.noise, &mut stream(seed, &[1])).unwrap();
        algorithm1(&block, &self.fam, &self.cb, Pilots::default(), &self.noise, SINR_CAP).unwrap()
    }
}

#[test]
fn criterion_05_codebook_search_recovery() {
    let s = Search::new(16, 256);
    let angles = s.cb.angles();
    let mut recovered = 0;
    let mut exact_index = 0;
    let mut worst_err = 0.0f64;
    for case in 0..100u64 {
        let mut rng = stream(5, &[0, case]);
        let q = rng.random_range(0..angles.len());
        let alpha = complex_gaussian(&mut rng, 1.0);
        let ch = ChannelRealization::los(&s.geom, 0, alpha, angles[q]).unwrap();
        let est = s.run(&ch, 500 + case);
        let h = ch.h(0).unwrap();
        // Delta and pi - Delta share one array response
        let same_response = (steering_vector(s.n, 1.0, angles[est.q_star])
            - steering_vector(s.n, 1.0, angles[q]))
        .norm()
            < 1e-9;
        let err = (&est.h_hat[0] - h).norm() / h.norm();
        worst_err = worst_err.max(err);
        if same_response && err < 1e-8 {
            recovered += 1;
        }
        if est.q_star == q {
            exact_index += 1;
        }
    }
    let mut nearest = 0;
    for case in 0..100u64 {
        let mut rng = stream(5, &[1, case]);
        let theta = rng.random_range(-PI..PI);
        let alpha = complex_gaussian(&mut rng, 1.0);
        let ch = ChannelRealization::los(&s.geom, 0, alpha, theta).unwrap();
        let est = s.run(&ch, 900 + case);
        let target = theta.sin();
        let best = angles
            .iter()
            .map(|a| sine_distance(a.sin(), target))
            .fold(f64::INFINITY, f64::min);
        if sine_distance(angles[est.q_star].sin(), target) <= best + 1e-12 {
            nearest += 1;
        }
    }
    let pass = recovered == 100 && nearest >= 99;
    report(
        5,
        "codebook search, noiseless LoS, N=16, Q=256",
        pass,
        &format!(
            "on-grid recovered {recovered}/100 (identical index {exact_index}/100, max rel. error {worst_err:.2e}); off-grid nearest-in-sine {nearest}/100 (need >= 99)"
        ),
    );
    assert!(pass);
}

fn argmax_lowest(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s.is_nan() {
            continue;
        }
        let b = scores[best];
        if b.is_nan() || s > b && (s - b) > TIE_TOLERANCE * b.abs() {
            best = i;
        }
    }
    best
}

#[test]
fn criterion_06_argmax_gain_invariance() {
    let s = Search::new(16, 256);
    let mut identical = 0;
    for case in 0..100u64 {
        let mut rng = stream(6, &[case]);
        let theta = rng.random_range(-PI..PI);
        let alpha = complex_gaussian(&mut rng, 1.0);
        let h = steering_vector(s.n, 1.0, theta) * alpha;
        let guesses = [alpha, Complex64::new(1.0, 0.0), alpha * 10.0, alpha * Complex64::i()];
        let picks: Vec<usize> = guesses
            .iter()
            .map(|&g| {
                let scores: Vec<f64> = s
                    .cb
                    .angles()
                    .iter()
                    .map(|&a| {
                        let cand: CVector = steering_vector(s.n, 1.0, a) * g;
                        achieved_sinr(&cand, &h, &s.noise).unwrap().sinr
                    })
                    .collect();
                argmax_lowest(&scores)
            })
            .collect();
        if picks.iter().all(|&p| p == picks[0]) {
            identical += 1;
        }
    }
    let pass = identical == 100;
    report(
        6,
        "argmax invariant to the gain guess",
        pass,
        &format!("identical argmax in {identical}/100 cases"),
    );
    assert!(pass);
}

fn ratio_by_point(cfg: &ExperimentConfig, num: Method, den: Method) -> Vec<(f64, f64)> {
    let rows = summarize(&run_experiment(cfg, 0).unwrap());
    let mut out = Vec::new();
    for r in rows.iter().filter(|r| r.method == num) {
        let d = rows
            .iter()
            .find(|d| d.method == den && d.sweep_value == r.sweep_value)
            .unwrap();
        out.push((r.sweep_value, r.mean / d.mean));
    }
    out
}

fn means_of(rows: &[circle_core::harness::SummaryRow], m: Method) -> Vec<f64> {
    rows.iter().filter(|r| r.method == m).map(|r| r.mean).collect()
}

#[test]
fn criterion_07_ratio_to_maximum_grows_with_q() {
    let start = Instant::now();
    let cfg = ExperimentConfig {
        n_antennas: 16,
        n_devices: Some(14),
        snr_db: Some(30.0),
        n_nlos: 0,
        n_trials: 200,
        methods: vec![Method::RCircle, Method::Bound],
        sweep: Some(Sweep {
            variable: SweepVariable::QLevels,
            values: vec![64.0, 256.0, 1024.0],
            antennas_follow_devices: false,
        }),
        ..ExperimentConfig::default()
    };
    let ratios = ratio_by_point(&cfg, Method::RCircle, Method::Bound);
    let secs = start.elapsed().as_secs_f64();
    let monotone = ratios.windows(2).all(|w| w[1].1 >= w[0].1);
    let last = ratios.last().unwrap().1;
    let pass = monotone && last > 0.90 && secs < 300.0;
    let shown: Vec<String> = ratios.iter().map(|(q, r)| format!("Q={q}: {r:.4}")).collect();
    report(
        7,
        "R-CIRCLE / maximum vs Q, N=16, K=14, LoS, 30 dB",
        pass,
        &format!("{}; {secs:.1}s", shown.join(", ")),
    );
    assert!(pass);
}

#[test]
fn criterion_08_full_csir_ratio_vs_nlos_power() {
    let mut cfg = preset("fig2", false).unwrap();
    cfg.methods = vec![Method::Circle, Method::Bound];
    let ratios = ratio_by_point(&cfg, Method::Circle, Method::Bound);
    let monotone = ratios.windows(2).all(|w| w[1].1 <= w[0].1);
    let first = ratios[0];
    let pass = monotone && first.0 == -40.0 && first.1 > 0.99;
    let shown: Vec<String> = ratios.iter().map(|(d, r)| format!("{d} dB: {r:.4}")).collect();
    report(8, "full-CSIR CIRCLE / maximum vs delta^2", pass, &shown.join(", "));
    assert!(pass);
}

#[test]
fn criterion_09_joint_search_beats_per_subcarrier() {
    let mut cfg = preset("fig4d", false).unwrap();
    cfg.methods = vec![Method::Circle, Method::RCircle];
    let rows = summarize(&run_experiment(&cfg, 0).unwrap());
    let circle = means_of(&rows, Method::Circle);
    let robust = means_of(&rows, Method::RCircle);
    let pass = circle.len() == 3 && robust.iter().zip(&circle).all(|(r, c)| r >= c);
    let shown: Vec<String> = robust
        .iter()
        .zip(&circle)
        .zip([10, 20, 30])
        .map(|((r, c), k)| format!("K={k}: {r:.3} vs {c:.3}"))
        .collect();
    report(9, "R-CIRCLE >= CIRCLE at rho=2", pass, &shown.join(", "));
    assert!(pass);
}

#[test]
fn criterion_10_device_count_scaling() {
    let mut cfg = preset("fig5", false).unwrap();
    cfg.methods = vec![Method::RCircle, Method::Mrt];
    let rows = summarize(&run_experiment(&cfg, 0).unwrap());
    let robust = means_of(&rows, Method::RCircle);
    let mrt = means_of(&rows, Method::Mrt);
    let increasing = robust.windows(2).all(|w| w[1] > w[0]);
    let growth_r = robust[2] - robust[1];
    let growth_m = mrt[2] - mrt[1];
    let pass = robust.len() == 3 && increasing && growth_m < growth_r;
    report(
        10,
        "R-CIRCLE grows with K, MRT saturates",
        pass,
        &format!(
            "R-CIRCLE {:.3}, {:.3}, {:.3}; MRT {:.3}, {:.3}, {:.3}; growth 20->30: R-CIRCLE {growth_r:.3}, MRT {growth_m:.3}",
            robust[0], robust[1], robust[2], mrt[0], mrt[1], mrt[2]
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_11_complexity_formula() {
    let oracle = |n: u64, m: u64, q: u64| m * (2 * n * n + q * n);
    let mut pass = complexity_psi(32, 10, 512).unwrap() == 184_320;
    for &(n, q) in &[(4usize, 16usize), (16, 256), (32, 512), (64, 1024)] {
        let one = complexity_psi(n, 1, q).unwrap();
        for m in 1..=12usize {
            let v = complexity_psi(n, m, q).unwrap();
            pass &= v == m as u64 * one && v == oracle(n as u64, m as u64, q as u64);
        }
    }
    // second difference in N of M (2 N^2 + Q N) is 4 M
    for &(m, q) in &[(1usize, 64usize), (10, 512)] {
        for n in 2..40usize {
            let p = |n| complexity_psi(n, m, q).unwrap() as i64;
            pass &= p(n + 1) - 2 * p(n) + p(n - 1) == 4 * m as i64;
        }
    }
    report(
        11,
        "complexity count",
        pass,
        &format!("psi(32, 10, 512) = {}", complexity_psi(32, 10, 512).unwrap()),
    );
    assert!(pass);
}

#[test]
fn criterion_12_thread_count_does_not_change_csv() {
    let mut identical = Vec::new();
    for name in PRESET_NAMES {
        let mut cfg = preset(name, false).unwrap();
        cfg.n_trials = 4;
        cfg.seed = 12;
        let var = cfg.sweep_variable();
        let one = csv_string(&run_experiment(&cfg, 1).unwrap(), var);
        let eight = csv_string(&run_experiment(&cfg, 8).unwrap(), var);
        identical.push((name, one == eight && one.lines().count() > 1));
    }
    let pass = identical.iter().all(|(_, same)| *same);
    let shown: Vec<String> = identical
        .iter()
        .map(|(n, same)| format!("{n}: {}", if *same { "identical" } else { "differs" }))
        .collect();
    report(12, "same seed at 1 and 8 threads", pass, &shown.join(", "));
    assert!(pass);
}
