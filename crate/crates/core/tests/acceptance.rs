//! Acceptance criteria 1 to 9. Each test prints one `PASS`/`FAIL` line to
//! the real stdout (bypassing the test harness's capture) and appends it to
//! `acceptance/summary.txt` under the cargo target tmpdir.

mod common;

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::PathBuf;

use djscc::cade::{evolve, read_threshold_csv, Cade, CadeConfig, Quantizer};
use djscc::channels::{capacity_basc, rate_limits, uniform_input_mi, CorrelationModel, TransmissionChannel};
use djscc::decoder::{BpDecoder, DecoderInput};
use djscc::encoder::build_encoder;
use djscc::ensemble::{c1, c2, DegreePolynomial, EnsembleSpec};
use djscc::graph::sample_graph;
use djscc::harness::{self, crossing_gap, read_records_csv, Figure, FigureOptions, Scale};
use djscc::optimizer::{optimize, DeParams, DesignProblem};
use djscc::rng::derive_seed;
use djscc::Error;
use rand::Rng;

fn out_dir() -> PathBuf {
    let d = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    fs::create_dir_all(&d).unwrap();
    d
}

fn report(n: u32, title: &str, pass: bool, detail: &str) {
    let line = format!("criterion {n} {} {title}: {detail}\n", if pass { "PASS" } else { "FAIL" });
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(line.as_bytes());
    let _ = out.flush();
    if let Ok(mut f) = OpenOptions::new().create(true).append(true).open(out_dir().join("summary.txt")) {
        let _ = f.write_all(line.as_bytes());
    }
    assert!(pass, "criterion {n}: {detail}");
}

fn poly(pairs: &[(u32, f64)]) -> DegreePolynomial {
    DegreePolynomial::from_pairs(pairs.iter().copied()).unwrap()
}

#[test]
fn criterion_1_rate_identities() {
    let r1 = c1().design_rate().unwrap();
    let r2 = c2().design_rate().unwrap();
    let bal = c1().edge_balance_residual();
    let pass = (r1 - 0.8).abs() <= 1e-3 && (r2 - 1.2).abs() <= 1e-3 && bal < 1e-4;
    report(
        1,
        "rate identities",
        pass,
        &format!("R(C1) = {r1:.5}, R(C2) = {r2:.5}, C1 edge-balance residual = {bal:.2e}"),
    );
}

#[test]
fn criterion_2_limits() {
    let model = CorrelationModel::binary(0.1, 0.2, 0.4).unwrap();
    let h = model.conditional_entropy();
    let h_oracle = common::conditional_entropy_bruteforce(0.1, 0.2, 0.4);
    let ch = TransmissionChannel::new(0.2, 0.01).unwrap();
    let iu = uniform_input_mi(&ch);
    let iu_oracle = common::mutual_information_bruteforce(0.5, 0.2, 0.01);

    let mut worst = (f64::INFINITY, f64::NEG_INFINITY);
    let mut cap_err: f64 = 0.0;
    for i in 1..=10 {
        let e01z = 0.02 * i as f64;
        let ch = TransmissionChannel::new(e01z, 0.01).unwrap();
        let lim = rate_limits(&model, &ch);
        let d = lim.r_symm - lim.r_th;
        worst = (worst.0.min(d), worst.1.max(d));
        cap_err = cap_err.max((capacity_basc(&ch) - common::capacity_bruteforce(e01z, 0.01)).abs());
    }
    let pass = (h - h_oracle).abs() <= 1e-6
        && (h - 0.4255).abs() < 1e-4
        && (iu - iu_oracle).abs() <= 1e-6
        && (iu - 0.5724).abs() < 1e-4
        && worst.0 >= 0.0
        && worst.1 <= 0.01
        && cap_err <= 1e-6;
    report(
        2,
        "limits",
        pass,
        &format!(
            "H(X|Y) = {h:.7} (oracle {h_oracle:.7}), I_unif = {iu:.7} (oracle {iu_oracle:.7}), \
             R_symm - R_Th in [{:.5}, {:.5}] over eps01z = 0.02..0.20, capacity error {cap_err:.1e}",
            worst.0, worst.1
        ),
    );
}

fn regular_36() -> EnsembleSpec {
    EnsembleSpec::new(poly(&[(3, 0.5)]), poly(&[(3, 0.5)]), poly(&[(6, 1.0)])).with_rate(1.0)
}

fn bsc_setting(p: f64) -> (CorrelationModel, TransmissionChannel) {
    (
        CorrelationModel::binary(0.5, p, p).unwrap(),
        TransmissionChannel::bsc(p).unwrap(),
    )
}

#[test]
fn criterion_3_symmetry_reduction() {
    let q = Quantizer::default();
    let oracle = common::ClassicalDe::new(q.delta, q.llr_max, q.gamma_points);
    let config = CadeConfig::default();
    let spec = regular_36();

    // Per-iteration densities at a converging crossover.
    let p = 0.08;
    let iters = 15;
    let (dens, errs) = oracle.run(p, 3, 6, iters);
    let (model, ch) = bsc_setting(p);
    let mut cade = Cade::new(&spec, &model, &ch, 0.5, config).unwrap();
    let (mut tv_max, mut mirror_max, mut pe_max) = (0.0f64, 0.0f64, 0.0f64);
    for t in 0..iters {
        cade.step().unwrap();
        let st = cade.state();
        assert_eq!(st.ps_pair[0].pos_inf + st.ps_pair[0].neg_inf, 0.0);
        tv_max = tv_max.max(common::tv(&st.ps_pair[0].finite, &dens[t]));
        mirror_max = mirror_max.max(st.q_pair[1].tv_distance(&st.q_pair[0].reflected()));
        mirror_max = mirror_max.max(st.ps_pair[1].tv_distance(&st.ps_pair[0].reflected()));
        pe_max = pe_max.max((st.error_prob - errs[t]).abs());
    }

    // Thresholds: both must converge at 0.083 and fail at 0.085.
    let (lo, hi) = (0.083, 0.085);
    let oracle_lo = oracle.converges(lo, 3, 6, 2000, config.target_pe);
    let oracle_hi = oracle.converges(hi, 3, 6, 2000, config.target_pe);
    let run = |p: f64| {
        let (m, c) = bsc_setting(p);
        evolve(&spec, &m, &c, 0.5, &config).unwrap()
    };
    let (cade_lo, cade_hi) = (run(lo), run(hi));

    let pass = tv_max <= 1e-4
        && mirror_max <= 1e-6
        && pe_max <= 1e-4
        && oracle_lo
        && !oracle_hi
        && cade_lo.converged
        && !cade_hi.converged;
    report(
        3,
        "CADE symmetry reduction",
        pass,
        &format!(
            "max TV to classical DE over {iters} iterations = {tv_max:.2e}, mirror TV = {mirror_max:.2e}, \
             max |pe diff| = {pe_max:.2e}; (3,6) BSC: oracle converges at {lo}: {oracle_lo}, at {hi}: {oracle_hi}; \
             CADE converges at {lo}: {} ({} it), at {hi}: {} (threshold 0.0840 +/- 0.001)",
            cade_lo.converged, cade_lo.iterations, cade_hi.converged
        ),
    );
}

#[test]
fn criterion_4_population_dynamics() {
    let setting = common::Setting {
        p_s0: 0.1,
        e01: 0.2,
        e10: 0.4,
        e01z: 0.2,
        e10z: 0.01,
        p_p0: 0.5,
    };
    let model = CorrelationModel::binary(0.1, 0.2, 0.4).unwrap();
    let ch = TransmissionChannel::new(0.2, 0.01).unwrap();
    let mut cade = Cade::new(&c1(), &model, &ch, 0.5, CadeConfig::default()).unwrap();
    for _ in 0..10 {
        cade.step().unwrap();
    }
    let trace = cade.error_trace().to_vec();

    let size = 1_000_000;
    let mut pd = common::PopulationDynamics::new(common::c1_tables(), setting, size, 20240601);
    let mut lines = Vec::new();
    let mut pass = true;
    for it in 1..=10 {
        if [1, 5, 10].contains(&it) {
            let (pe, sd) = pd.error_probability(size);
            let z = (trace[it] - pe) / sd;
            pass &= z.abs() <= 3.0;
            lines.push(format!("it {it}: CADE {:.5} MC {pe:.5} ({z:+.2} sd)", trace[it]));
        }
        if it < 10 {
            pd.step();
        }
    }
    report(4, "CADE vs population dynamics", pass, &lines.join(", "));
}

fn fig_options() -> FigureOptions {
    FigureOptions::new(Scale::Desk, 1)
}

#[test]
fn criterion_5_fig2_gaps() {
    let dir = out_dir();
    harness::reproduce_figure(Figure::Fig2, &fig_options(), &dir).unwrap();
    let rows = read_threshold_csv(&dir.join("fig2.csv")).unwrap();
    let gaps: Vec<String> = rows
        .iter()
        .map(|r| format!("{:.2}:{:.4}", r.sweep_param, r.gap_bits))
        .collect();
    let pass = rows.len() == 10 && rows.iter().all(|r| (0.046..=0.074).contains(&r.gap_bits));
    report(
        5,
        "Fig. 2 threshold gaps in [0.046, 0.074]",
        pass,
        &format!("eps01:gap = {}", gaps.join(" ")),
    );
}

#[test]
fn criterion_6_fig3_desk() {
    let dir = out_dir();
    let fo = harness::reproduce_figure(Figure::Fig3, &fig_options(), &dir).unwrap();
    let thresholds = read_threshold_csv(&fo.csv[1]).unwrap();
    let mut pass = true;
    let mut lines = Vec::new();
    for t in &thresholds {
        let label = format!("fig3_eps01_{:.3}", t.sweep_param);
        let records = read_records_csv(&harness::records_path(&dir, &label)).unwrap();
        let at_010 = records
            .iter()
            .min_by(|a, b| (a.gap_bits - 0.10).abs().total_cmp(&(b.gap_bits - 0.10).abs()))
            .unwrap();
        let near = (at_010.gap_bits - 0.10).abs() < 1e-3 && at_010.ber < 1e-5;
        let (cross, close) = match crossing_gap(&records, 1e-4) {
            Ok(g) => (g, (g - t.gap_bits).abs() <= 0.05),
            Err(Error::NoCrossing { .. }) => (f64::NAN, false),
            Err(e) => panic!("{e}"),
        };
        pass &= near && close;
        lines.push(format!(
            "eps01 {}: BER {:.2e} at gap {:.3}; 1e-4 crossing at gap {cross:.4} vs CADE {:.4}",
            t.sweep_param, at_010.ber, at_010.gap_bits, t.gap_bits
        ));
    }
    pass &= thresholds.len() == 2;
    report(6, "Fig. 3 desk scale", pass, &lines.join("; "));
}

#[test]
fn criterion_7_fig4_desk() {
    let dir = out_dir();
    harness::reproduce_figure(Figure::Fig4, &fig_options(), &dir).unwrap();
    let gap_of = |label: &str, upper: bool| -> (f64, String) {
        let records = read_records_csv(&harness::records_path(&dir, label)).unwrap();
        match crossing_gap(&records, 1e-5) {
            Ok(g) => (g, format!("{g:.4}")),
            // Nothing reached 1e-5: the threshold gap exceeds the largest
            // gap simulated.
            Err(Error::NoCrossing { .. }) => {
                let top = records.iter().map(|r| r.gap_bits).fold(f64::NEG_INFINITY, f64::max);
                (if upper { f64::INFINITY } else { top }, format!("> {top:.4}"))
            }
            Err(e) => panic!("{e}"),
        }
    };
    let (g2, s2) = gap_of("fig4_c2", true);
    let (g3, s3) = gap_of("fig4_c3", false);
    let pass = g3 - g2 >= 0.10;
    report(
        7,
        "Fig. 4 desk scale",
        pass,
        &format!("near-lossless gap C2 {s2}, C3 {s3}, advantage {:.4} bits", g3 - g2),
    );
}

#[test]
fn criterion_8_codec() {
    // Noiseless round trip.
    let k = 2000;
    let g = sample_graph(&c1(), k, 31).unwrap();
    let enc = build_encoder(&g).unwrap();
    let dec = BpDecoder::new(&g);
    let model = CorrelationModel::binary(0.1, 0.0, 0.0).unwrap();
    let clean = TransmissionChannel::noiseless();
    let mut rng = djscc::rng::rng_from_seed(5);
    let mut exact = 0;
    for b in 0..1000u64 {
        let (x, y) = djscc::channels::sample_source_and_side(&model, k, derive_seed(77, b));
        let z = enc.encode(&x).unwrap();
        let input = DecoderInput {
            side_info: &y,
            received_parity: &z,
            model: &model,
            channel: &clean,
        };
        exact += usize::from(dec.decode(&input, 200).unwrap().x_hat == x);
    }

    // Linearity.
    let mut linear = 0;
    for _ in 0..1000 {
        let a: Vec<u8> = (0..k).map(|_| rng.gen_range(0..2)).collect();
        let b: Vec<u8> = (0..k).map(|_| rng.gen_range(0..2)).collect();
        let s: Vec<u8> = a.iter().zip(&b).map(|(x, y)| x ^ y).collect();
        let (za, zb, zs) = (enc.encode(&a).unwrap(), enc.encode(&b).unwrap(), enc.encode(&s).unwrap());
        let ok = za.iter().zip(&zb).zip(&zs).all(|((p, q), r)| (p ^ q) == *r) && g.is_codeword(&s, &zs);
        linear += usize::from(ok);
    }

    // BP against block MAP on short 4-cycle-free codes, at a point where
    // MAP itself recovers almost every block.
    let s = common::Setting {
        p_s0: 0.3,
        e01: 0.05,
        e10: 0.075,
        e01z: 0.025,
        e10z: 0.01,
        p_p0: 0.5,
    };
    let model = CorrelationModel::binary(s.p_s0, s.e01, s.e10).unwrap();
    let ch = TransmissionChannel::new(s.e01z, s.e10z).unwrap();
    let trials = 1000;
    let (mut agree, mut map_ok) = (0, 0);
    for t in 0..trials {
        let (k, m) = (12, 12);
        let g = common::short_code(k, m, 1000 + t);
        let enc = build_encoder(&g).unwrap();
        let dec = BpDecoder::new(&g);
        let (x, y) = djscc::channels::sample_source_and_side(&model, k, derive_seed(3, t));
        let zh = djscc::channels::transmit(&ch, &enc.encode(&x).unwrap(), derive_seed(4, t));
        let bp = dec
            .decode(
                &DecoderInput {
                    side_info: &y,
                    received_parity: &zh,
                    model: &model,
                    channel: &ch,
                },
                100,
            )
            .unwrap();
        let map = common::map_estimates(&enc, &y, &zh, &s).block;
        agree += usize::from(bp.x_hat == map);
        map_ok += usize::from(map == x);
    }
    let rate = agree as f64 / trials as f64;
    let pass = exact == 1000 && linear == 1000 && rate >= 0.95;
    report(
        8,
        "codec",
        pass,
        &format!(
            "noiseless round trip {exact}/1000, linearity {linear}/1000, BP = MAP on {agree}/{trials} blocks ({:.1}%), MAP = source on {map_ok}/{trials}",
            100.0 * rate
        ),
    );
}

#[test]
#[ignore = "hours of single-core time"]
fn criterion_9_optimizer() {
    let params = DeParams {
        population: 40,
        generations: 50,
        seed: 7,
        ..DeParams::default()
    };
    let config = CadeConfig::default();
    let free = optimize(&DesignProblem::c1(), &params, &config).unwrap();
    let collapsed_problem = DesignProblem {
        collapse_split: true,
        ..DesignProblem::c1()
    };
    let collapsed = optimize(&collapsed_problem, &params, &config).unwrap();
    let gap = -free.best.fitness;
    let pass = gap <= 0.08 && collapsed.best.fitness <= free.best.fitness;
    free.best.spec.save(&out_dir().join("designed_c1.json")).unwrap();
    report(
        9,
        "optimizer",
        pass,
        &format!(
            "best gap {gap:.4} bits (split), {:.4} bits (collapsed)",
            -collapsed.best.fitness
        ),
    );
}
