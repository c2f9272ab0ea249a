//! Acceptance criteria 1-9, one verdict line each.
//!
//! Every criterion is evaluated as stated. The run fails if the set of
//! failing criteria differs from `KNOWN_FAILURES`, so a regression or an
//! unexpected fix both show up.

use std::io::Write;

use gean::planner::{epsilon_for, k_bound, min_estimable_upper_bound, plan};
use gean::probe::upper_bound;
use gean::seed;
use gean::sim::{run_frame, tally, z_statistic};
use gean::stats::{expected_z, invert_expected_z, slot_probs, variance_z, LoadPoint};
use gean::{AccuracySpec, ChannelModel, Population, ReplyModel};
use gean_cli::campaign::{run_campaign, CampaignConfig, CampaignRow, Scheme};
use gean_cli::output::write_csv;

const ZO: ChannelModel = ChannelModel::ZeroOne;
const ZOE: ChannelModel = ChannelModel::ZeroOneE;

/// Criteria that do not hold for a faithful implementation.
/// 2: the printed k(r) terms give t_ml = 274.4 at alpha = 0.92, not 230.
/// 8: with p = 1 the hash-once channel throws exactly t replies, so its Z
///    variance is about 30% below the independent-slot variance.
const KNOWN_FAILURES: &[u32] = &[2, 8];

struct Verdict {
    id: u32,
    name: &'static str,
    pass: bool,
    detail: String,
}

fn spec(a: f64, b: f64) -> AccuracySpec {
    AccuracySpec::new(a, b).unwrap()
}

fn g(t: f64, p: f64, f: u64, model: ChannelModel) -> f64 {
    expected_z(LoadPoint::new(t, p, f).unwrap(), model)
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    (m, xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0))
}

fn z_sample(t: u64, p: f64, f: u64, reply: ReplyModel, model: ChannelModel, frames: u64, stream: u64) -> Vec<f64> {
    let pop = Population::new(t, stream);
    (0..frames)
        .map(|j| z_statistic(&tally(&run_frame(pop, f, p, reply, model, seed::derive(stream, &[j])).unwrap()), model))
        .collect()
}

fn epsilon_budget() -> Verdict {
    let e200 = epsilon_for(200, 0.84, ZO).unwrap();
    let e1000 = epsilon_for(1000, 0.84, ZO).unwrap();
    Verdict {
        id: 1,
        name: "epsilon budget",
        pass: (e200 - 0.081).abs() <= 0.003 && (e1000 - 0.036).abs() <= 0.004,
        detail: format!("eps(200) = {e200:.5} (0.081 +- 0.003), eps(1000) = {e1000:.5} (0.036 +- 0.004)"),
    }
}

fn feasibility_threshold() -> Verdict {
    let t_ml = min_estimable_upper_bound(spec(0.92, 0.05));
    Verdict {
        id: 2,
        name: "feasibility threshold",
        pass: (t_ml - 230.0).abs() <= 15.0,
        detail: format!("t_ml(0.92) = {t_ml:.1} (230 +- 15)"),
    }
}

fn r_min_recovery() -> Verdict {
    let t_b = invert_expected_z(g(1.0, 1.0, 1000, ZOE), 1.0, 1000, ZOE).unwrap();
    let r = t_b / 1000.0;
    Verdict {
        id: 3,
        name: "r_min recovery",
        pass: (r - 1.2564).abs() <= 0.01,
        detail: format!("r = {r:.5} (1.2564 +- 0.01)"),
    }
}

fn dip_location() -> Verdict {
    let argmin = (0..=2000u64)
        .min_by(|&a, &b| g(a as f64, 1.0, 200, ZOE).total_cmp(&g(b as f64, 1.0, 200, ZOE)))
        .unwrap();
    Verdict {
        id: 4,
        name: "dip location",
        pass: (99..=101).contains(&argmin),
        detail: format!("argmin = {argmin} (99..=101)"),
    }
}

fn campaign(schemes: Vec<Scheme>, models: Vec<ChannelModel>, t_values: Vec<u64>, alpha: f64, beta: f64, seed_value: u64) -> Vec<CampaignRow> {
    run_campaign(&CampaignConfig {
        schemes,
        models,
        t_values,
        alpha,
        beta,
        trials: 400,
        master_seed: seed_value,
        ..CampaignConfig::default()
    })
    .unwrap()
}

fn achieved_reliability() -> Verdict {
    let mut cells = Vec::new();
    let mut pass = true;
    for (a, b) in [(0.9, 0.1), (0.95, 0.05)] {
        let t_ml = min_estimable_upper_bound(spec(a, b));
        let rows = campaign(vec![Scheme::Gean], ChannelModel::ALL.to_vec(), vec![500, 1000, 5000], a, b, 5);
        for r in rows {
            // {0,1,e} cells are evaluated where the population itself is estimable.
            if r.model == ZOE && (r.t as f64) < t_ml {
                continue;
            }
            let rel = r.achieved_reliability.unwrap_or(0.0);
            pass &= rel >= a - 0.03;
            cells.push(format!("{}@{}/{}={rel:.3}", r.model, r.t, a));
        }
    }
    Verdict {
        id: 5,
        name: "achieved reliability",
        pass,
        detail: format!("floor alpha - 0.03; {}", cells.join(" ")),
    }
}

fn waec_gap() -> Verdict {
    let rows = campaign(vec![Scheme::Gean, Scheme::GeanWaec], vec![ZO], vec![500, 1000, 5000], 0.95, 0.05, 6);
    let (full, waec) = rows.split_at(3);
    let mut lower = 0;
    let mut detail = Vec::new();
    for (x, y) in full.iter().zip(waec) {
        let (a, b) = (x.achieved_reliability.unwrap(), y.achieved_reliability.unwrap());
        if b < a {
            lower += 1;
        }
        detail.push(format!("t={}: {a:.4} vs {b:.4}", x.t));
    }
    Verdict {
        id: 6,
        name: "WAEC gap",
        pass: lower >= 2,
        detail: format!("WAEC below GEAN on {lower}/3 ({})", detail.join(", ")),
    }
}

fn channel_ordering() -> Verdict {
    let s = spec(0.95, 0.05);
    let mut pass = true;
    let mut detail = Vec::new();
    for t_m in [10_000u64, 100_000] {
        let zo = plan(s, t_m, ZO).unwrap().total_slots;
        let zoe = plan(s, t_m, ZOE).unwrap().total_slots;
        pass &= zoe <= zo;
        detail.push(format!("t_m={t_m}: zoe {zoe:.2} <= zo {zo:.2}"));
    }
    Verdict {
        id: 7,
        name: "channel-model ordering",
        pass,
        detail: detail.join(", "),
    }
}

fn property_suite() -> Verdict {
    let mut failed = Vec::new();
    let mut check = |ok: bool, what: &str| {
        if !ok {
            failed.push(what.to_string());
        }
    };

    let mut normalised = true;
    for &t in &[0u64, 1, 7, 100, 1_000, 50_000] {
        for &p in &[1e-3, 0.1, 0.5, 1.0] {
            for &f in &[1u64, 16, 500, 10_000] {
                let s = slot_probs(LoadPoint::from_count(t, p, f).unwrap(), ZOE);
                normalised &= (s.p0 + s.p1 + s.pe - 1.0).abs() <= 1e-12 && (s.pn - 1.0 + s.p0).abs() <= 1e-12;
            }
        }
    }
    check(normalised, "normalisation");

    let (p, f) = (0.7, 150u64);
    let scale = f as f64 / p;
    let increasing = (1..=(10.0 * scale) as u64).all(|t| g(t as f64, p, f, ZO) > g(t as f64 - 1.0, p, f, ZO));
    let h = scale / 100.0;
    let second = |t: f64| g(t + h, p, f, ZOE) - 2.0 * g(t, p, f, ZOE) + g(t - h, p, f, ZOE);
    let convex = (1..=144).all(|i| second(i as f64 * h) > 0.0);
    let concave = (156..=500).all(|i| second(i as f64 * h) < 0.0);
    let start = (scale / 2.0 + 2.0).ceil() as u64;
    let rising = (start + 1..=(6.0 * scale) as u64).all(|t| g(t as f64, p, f, ZOE) > g(t as f64 - 1.0, p, f, ZOE));
    check(increasing && convex && concave && rising, "shape bands");

    let mut rng_state = 17u64;
    let mut round_trip = true;
    for _ in 0..200 {
        rng_state = seed::child(rng_state, 1);
        let u = (rng_state >> 11) as f64 / (1u64 << 53) as f64;
        let f = 2 + rng_state % 3000;
        let p = 0.01 + 0.99 * u;
        let t_zo = 6.0 * u * f as f64 / p;
        let back = invert_expected_z(g(t_zo, p, f, ZO), p, f, ZO).unwrap();
        round_trip &= (back - t_zo).abs() <= 1e-6 * t_zo.max(1.0);
        let t_zoe = (0.55 + 5.0 * u) * f as f64 / p;
        let back = invert_expected_z(g(t_zoe, p, f, ZOE), p, f, ZOE).unwrap();
        round_trip &= (back - t_zoe).abs() <= 0.5;
    }
    check(round_trip, "inversion round-trip");

    let mut variance_ok = true;
    for model in ChannelModel::ALL {
        for (i, &(t, p, f)) in [(20u64, 1.0, 40u64), (50, 1.0, 40), (100, 0.5, 40), (60, 1.0, 30), (120, 0.8, 50)].iter().enumerate() {
            let (_, v) = mean_var(&z_sample(t, p, f, ReplyModel::IndependentPerSlot, model, 100_000, 40 + i as u64));
            let want = variance_z(LoadPoint::from_count(t, p, f).unwrap(), model);
            variance_ok &= (v / want - 1.0).abs() < 0.05;
        }
    }
    check(variance_ok, "analytic variance");

    let n = 100_000u64;
    let mut equivalent = true;
    let mut eq_detail = String::new();
    for model in ChannelModel::ALL {
        let (ma, va) = mean_var(&z_sample(1000, 1.0, 500, ReplyModel::HashOnce, model, n, 61));
        let (mb, vb) = mean_var(&z_sample(1000, 1.0, 500, ReplyModel::IndependentPerSlot, model, n, 62));
        let nf = n as f64;
        let mean_ok = (ma - mb).abs() < 3.0 * (va / nf + vb / nf).sqrt();
        let var_ok = (va - vb).abs() < 3.0 * ((2.0 / (nf - 1.0)) * (va * va + vb * vb)).sqrt();
        equivalent &= mean_ok && var_ok;
        eq_detail.push_str(&format!(" {model}: var {va:.3e} vs {vb:.3e}"));
    }
    check(equivalent, &format!("reply-model equivalence ({})", eq_detail.trim()));

    check(k_bound(std::f64::consts::LN_2, ZO).unwrap() == 1.0, "k(ln 2) = 1");

    let csv = |seed_value| {
        let rows = run_campaign(&CampaignConfig {
            t_values: vec![0, 1_000, 5_000],
            trials: 20,
            master_seed: seed_value,
            ..CampaignConfig::default()
        })
        .unwrap();
        let mut buf = Vec::new();
        write_csv(&mut buf, &rows).unwrap();
        buf
    };
    check(csv(3) == csv(3), "deterministic CSV");

    Verdict {
        id: 8,
        name: "property suite",
        pass: failed.is_empty(),
        detail: if failed.is_empty() { "all properties hold".into() } else { format!("failing: {}", failed.join("; ")) },
    }
}

fn probe_behaviour() -> Verdict {
    let means = |t: u64| -> Vec<f64> {
        (0..200)
            .map(|k| upper_bound(Population::new(t, k), 100, ReplyModel::IndependentPerSlot, seed::derive(t, &[k])).unwrap().t_m)
            .collect()
    };
    let at_1000 = means(1000);
    let inside = at_1000.iter().filter(|&&m| (1000.0..=2000.0).contains(&m)).count() as f64 / 200.0;
    let avg = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let m500 = avg(&means(500));
    let m1000 = avg(&at_1000);
    let m2000 = avg(&means(2000));
    let (r1, r2) = (m1000 / m500, m2000 / m1000);
    let doubling = (r1 / 2.0 - 1.0).abs() <= 0.15 && (r2 / 2.0 - 1.0).abs() <= 0.15;
    Verdict {
        id: 9,
        name: "FM probe",
        pass: inside >= 0.90 && doubling,
        detail: format!("in [t, 2t]: {inside:.3} (>= 0.90), doubling ratios {r1:.3}, {r2:.3} (2 +- 15%)"),
    }
}

#[test]
fn acceptance() {
    let verdicts = [
        epsilon_budget(),
        feasibility_threshold(),
        r_min_recovery(),
        dip_location(),
        achieved_reliability(),
        waec_gap(),
        channel_ordering(),
        property_suite(),
        probe_behaviour(),
    ];
    // Written to the raw handle so the verdicts show without --nocapture.
    let mut out = std::io::stdout().lock();
    for v in &verdicts {
        let mark = if v.pass { "PASS" } else { "FAIL" };
        writeln!(out, "criterion {} [{mark}] {}: {}", v.id, v.name, v.detail).unwrap();
    }
    let failing: Vec<u32> = verdicts.iter().filter(|v| !v.pass).map(|v| v.id).collect();
    writeln!(out, "failing criteria: {failing:?} (known: {KNOWN_FAILURES:?})").unwrap();
    drop(out);
    assert_eq!(failing, KNOWN_FAILURES, "acceptance verdicts changed");
}
