//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};

use cms_core::approx::{
    dichotomy_report, glue_periodic_approximation, zero_measure_sequence, DichotomyParams,
    DichotomyReport, GlueParams, Typicality, ZeroSequence,
};
use cms_core::measures::{convex_combo, Measure, Slot};
use cms_core::num::{rat, Mass};
use cms_core::potential::{Potential, TailRule};
use cms_core::properties::{find_finite_rome, RomeSearch};
use cms_core::shift::{metric_d, metric_d_rho};
use cms_core::symbol::{bar, lift, BarSymbol, INF};
use cms_core::thermo::construct::construct_psi;
use cms_core::thermo::{
    dual_vp_check, parry_measure, pressure, s_infinity, FamilySpec, OptimizerParams,
    PressureMethod, PressureParams,
};
use cms_core::topology::{
    diagnose_convergence, weakstar_distance, DiagnoseOptions, LimitClass, MetricConfig,
};
use cms_core::{LoopCount, LoopSystem, LoopTail, ShiftPresentation};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn log_golden() -> f64 {
    ((1.0 + 5f64.sqrt()) / 2.0).ln()
}

fn one_each() -> ShiftPresentation {
    ShiftPresentation::loop_system(LoopSystem::new(BTreeMap::new(), LoopTail::Constant(1)).unwrap())
}

fn exact(m: Mass) -> BigRational {
    m.exact().cloned().expect("exact mass")
}

fn golden_mean_entropy() -> Outcome {
    let sys = ShiftPresentation::loop_system(
        LoopSystem::from_counts(&[(1, LoopCount::Finite(1)), (2, LoopCount::Finite(1))]).unwrap(),
    );
    let params = PressureParams {
        period: 30,
        ..PressureParams::default()
    };
    let zero = Potential::zero();
    let gf = pressure(&sys, &zero, PressureMethod::LoopGeneratingFunction, &params)
        .map_err(|e| e.to_string())?;
    let tr =
        pressure(&sys, &zero, PressureMethod::Truncation, &params).map_err(|e| e.to_string())?;
    let ps =
        pressure(&sys, &zero, PressureMethod::PartitionSum, &params).map_err(|e| e.to_string())?;
    let (e1, e2, e3) = (
        (gf.value - log_golden()).abs(),
        (tr.value - log_golden()).abs(),
        (ps.value - log_golden()).abs(),
    );
    check(e1 < 1e-9, format!("generating function error {e1:e}"))?;
    check(e2 < 1e-6, format!("truncation error {e2:e}"))?;
    check(e3 < 1e-3, format!("partition sum error {e3:e}"))?;
    Ok(format!(
        "errors: root {e1:.1e}, truncation {e2:.1e}, Z_30 {e3:.1e}"
    ))
}

fn escape_demo() -> Outcome {
    let full = ShiftPresentation::FullShift;
    let ns: Vec<u64> = (2..=8).map(|k| 1u64 << k).collect();
    let seq: Vec<Measure> = ns
        .iter()
        .map(|&n| Measure::periodic(&full, &lift(&[1, n])).unwrap())
        .collect();
    for (m, n) in seq.iter().zip(&ns) {
        check(
            exact(m.mass(&lift(&[1]))) == rat(1, 2),
            format!("μ_{n}([1]) ≠ 1/2"),
        )?;
    }
    let config = MetricConfig::with_depth(&full, 6);
    let report = diagnose_convergence(&seq, &config, &DiagnoseOptions::default())
        .map_err(|e| e.to_string())?;
    check(
        matches!(report.classification, LimitClass::FinitelyAdditive { .. }),
        format!("classification {:?}", report.classification),
    )?;
    let limit = Measure::periodic(&full, &bar(&[1, INF])).unwrap();
    let dists: Vec<f64> = seq
        .iter()
        .map(|m| weakstar_distance(m, &limit, &config).value)
        .collect();
    check(
        dists.windows(2).all(|w| w[1] <= w[0]),
        format!("distances not monotone: {dists:?}"),
    )?;
    let last = *dists.last().unwrap();
    check(last < 1e-2, format!("final distance {last}"))?;
    Ok(format!(
        "defect fires; distances {:.2e} → {:.2e}",
        dists[0], last
    ))
}

fn total_escape() -> Outcome {
    let sys = one_each();
    let ns = [8usize, 16, 32, 64, 128, 256];
    let ZeroSequence::Measures(seq) =
        zero_measure_sequence(&sys, &ns).map_err(|e| e.to_string())?
    else {
        return Err("refused".into());
    };
    for (m, &n) in seq.iter().zip(&ns) {
        for s in 0..(2 * n as u64 + 40) {
            let mass = exact(m.mass(&lift(&[s])));
            check(
                mass <= rat(2, n as i64),
                format!("mass of [{s}] at n={n} exceeds 2/n"),
            )?;
        }
    }
    let config = MetricConfig::with_depth(&sys, 3);
    let report = diagnose_convergence(&seq, &config, &DiagnoseOptions::default())
        .map_err(|e| e.to_string())?;
    check(
        report.classification == LimitClass::TotalEscape,
        format!("classification {:?}", report.classification),
    )?;
    check(report.lambda.abs() < 1e-6, format!("λ = {}", report.lambda))?;
    Ok(format!(
        "λ = {:.1e}, classified total escape",
        report.lambda
    ))
}

fn dichotomy() -> Outcome {
    let holds =
        dichotomy_report(&one_each(), &DichotomyParams::default()).map_err(|e| e.to_string())?;
    let samples = match holds {
        DichotomyReport::FHolds {
            samples,
            all_rejected: true,
        } => samples,
        other => return Err(format!("loop system: {other:?}")),
    };
    let params = DichotomyParams {
        targets: 5,
        tau: 0.05,
        depth: 5,
        seed: 7,
        ..DichotomyParams::default()
    };
    match dichotomy_report(&ShiftPresentation::FullShift, &params).map_err(|e| e.to_string())? {
        DichotomyReport::FFails {
            rows,
            all_within,
            max_distance,
            ..
        } => {
            let within = rows.iter().filter(|r| r.within_tolerance).count();
            check(
                rows.len() == 5 && all_within,
                format!("{within}/{} within τ", rows.len()),
            )?;
            Ok(format!(
                "{samples} sandwich words rejected; 5/5 targets within τ (max {max_distance:.3})"
            ))
        }
        other => Err(format!("full shift: {other:?}")),
    }
}

fn rome_equivalences() -> Outcome {
    let ex = ShiftPresentation::loop_system(
        LoopSystem::from_counts(&[(1, LoopCount::Finite(1)), (2, LoopCount::Infinite)]).unwrap(),
    );
    let found = find_finite_rome(&ex, 12, 12);
    check(
        found == RomeSearch::Found { f: vec![0], n: 2 },
        format!("Rome search gave {found:?}"),
    )?;
    let symbols: Vec<u64> = (0..9).collect();
    let mut fixtures = 0;
    for len in 1..=5u32 {
        for code in 0..9u64.pow(len) {
            let mut c = code;
            let word: Vec<u64> = (0..len)
                .map(|_| {
                    let s = symbols[(c % 9) as usize];
                    c /= 9;
                    s
                })
                .collect();
            if !ex.is_cyclically_admissible(&word) {
                continue;
            }
            fixtures += 1;
            let m = Measure::periodic(&ex, &lift(&word)).unwrap();
            check(
                exact(m.mass(&lift(&[0]))) >= rat(1, 2),
                format!("base mass below 1/2 for {word:?}"),
            )?;
        }
    }
    check(
        matches!(
            zero_measure_sequence(&ex, &[8, 16]),
            Ok(ZeroSequence::Refused(_))
        ),
        "escaping sequence produced on a Rome system",
    )?;
    for shift in [
        ShiftPresentation::FullShift,
        ShiftPresentation::rule("loops2_plus_random_walk").unwrap(),
    ] {
        check(
            !find_finite_rome(&shift, 12, 12).is_found(),
            format!("Rome found on {shift:?}"),
        )?;
        match zero_measure_sequence(&shift, &[8, 16, 32]) {
            Ok(ZeroSequence::Measures(seq)) => {
                for s in 0..8u64 {
                    let m = exact(seq[2].mass(&lift(&[s])));
                    check(m <= rat(1, 30), format!("mass of [{s}] does not escape"))?;
                }
            }
            other => return Err(format!("{shift:?}: {other:?}")),
        }
    }
    Ok(format!(
        "Rome ({{0}}, 2); {fixtures} periodic fixtures with base mass ≥ 1/2"
    ))
}

fn gluing() -> Outcome {
    let g = ShiftPresentation::golden_mean();
    let targets = vec![
        parry_measure(&g).map_err(|e| e.to_string())?,
        Measure::periodic(&g, &lift(&[1])).unwrap(),
    ];
    let average =
        convex_combo(vec![rat(1, 2), rat(1, 2)], targets.clone()).map_err(|e| e.to_string())?;
    let config = MetricConfig::with_depth(&g, 6);
    let params = GlueParams {
        samples: 256,
        typicality: Typicality::Metric(config.clone()),
        ..GlueParams::default()
    };
    let mut dists = Vec::new();
    for n in [64usize, 128, 256, 512] {
        let (mu, _) =
            glue_periodic_approximation(&g, &targets, n, 7, &params).map_err(|e| e.to_string())?;
        let d = weakstar_distance(&mu, &average, &config).value;
        dists.push(d);
    }
    check(
        dists.windows(2).all(|w| w[1] <= w[0]),
        format!("not monotone: {dists:?}"),
    )?;
    let last = *dists.last().unwrap();
    check(last < 0.05, format!("final distance {last}"))?;
    let full = ShiftPresentation::FullShift;
    let target = Measure::periodic(&full, &lift(&[1, 2])).unwrap();
    let (mu, _) =
        glue_periodic_approximation(&full, std::slice::from_ref(&target), 64, 7, &GlueParams::default())
            .map_err(|e| e.to_string())?;
    let d = weakstar_distance(&mu, &target, &MetricConfig::with_depth(&full, 6)).value;
    check(d == 0.0, format!("self-gluing distance {d}"))?;
    Ok(format!(
        "distances {:?}",
        dists.iter().map(|d| format!("{d:.4}")).collect::<Vec<_>>()
    ))
}

fn dual_vp() -> Outcome {
    let g = ShiftPresentation::golden_mean();
    let parry = parry_measure(&g).map_err(|e| e.to_string())?;
    let fixed = Measure::periodic(&g, &lift(&[1])).unwrap();
    let family = FamilySpec {
        depth: 2,
        symbols: 2,
    };
    let params = OptimizerParams::default();
    let a = dual_vp_check(&g, &Potential::zero(), &parry, family, &params)
        .map_err(|e| e.to_string())?;
    let b = dual_vp_check(&g, &Potential::zero(), &fixed, family, &params)
        .map_err(|e| e.to_string())?;
    let slack = a.min_slack.min(b.min_slack);
    check(slack >= -1e-10, format!("inequality violated by {slack:e}"))?;
    check(a.gap < 1e-3, format!("Parry gap {}", a.gap))?;
    check(b.gap < 5e-2, format!("fixed point gap {}", b.gap))?;
    Ok(format!(
        "min slack {slack:.1e} over {} evaluations; gaps {:.1e}, {:.1e}",
        a.evaluations + b.evaluations,
        a.gap,
        b.gap
    ))
}

fn psi_construction() -> Outcome {
    let mu = Measure::bernoulli_geometric(rat(1, 2)).map_err(|e| e.to_string())?;
    let halves = TailRule::Affine {
        intercept: 0.0,
        slope: -(2f64.ln()),
    };
    let c = construct_psi(&mu, halves).map_err(|e| e.to_string())?;
    check(c.pressure == 0.0, format!("P(ψ) = {}", c.pressure))?;
    let mut series = 0.0;
    let mut w = 0.5;
    for _ in 1..200 {
        series += w * f64::ln(w);
        w *= 0.5;
    }
    let err = (c.integral - series).abs();
    check(err < 1e-12, format!("∫ψ off the series by {err:e}"))?;
    check(
        (c.integral + 2.0 * 2f64.ln()).abs() < 1e-12,
        "∫ψ ≠ −2 log 2",
    )?;
    let s = s_infinity(
        &ShiftPresentation::FullShift,
        &Potential::first_symbol(TailRule::Log { coeff: -2.0 }),
        1e-4,
    );
    check((s.value - 0.5).abs() < 1e-3, format!("s∞ = {}", s.value))?;
    Ok(format!("P(ψ) = 0, ∫ψ error {err:.1e}, s∞ = {:.5}", s.value))
}

fn measure_fixtures(full: &ShiftPresentation) -> Vec<Measure> {
    vec![
        Measure::periodic(full, &lift(&[1])).unwrap(),
        Measure::periodic(full, &lift(&[1, 2, 2, 3])).unwrap(),
        Measure::periodic(full, &bar(&[1, INF])).unwrap(),
        Measure::periodic(full, &bar(&[2, INF, INF, 1, 3])).unwrap(),
        Measure::bernoulli(vec![1, 2, 3], vec![rat(1, 2), rat(1, 3), rat(1, 6)]).unwrap(),
        Measure::markov_exact(
            vec![1, 2],
            vec![rat(2, 3), rat(1, 3)],
            vec![vec![rat(1, 2), rat(1, 2)], vec![rat(1, 1), rat(0, 1)]],
        )
        .unwrap(),
        Measure::bernoulli_geometric(rat(1, 3)).unwrap(),
        Measure::DiracInfinity,
        convex_combo(
            vec![rat(1, 4), rat(3, 4)],
            vec![
                Measure::bernoulli_geometric(rat(1, 2)).unwrap(),
                Measure::periodic(full, &bar(&[1, INF])).unwrap(),
            ],
        )
        .unwrap(),
    ]
}

fn invariance_and_metrics() -> Outcome {
    let full = ShiftPresentation::FullShift;
    let alphabet: Vec<u64> = vec![1, 2, 3];
    let rest = Slot::NotIn(alphabet.iter().copied().collect());
    let mut letters: Vec<Slot> = alphabet
        .iter()
        .map(|&a| Slot::Is(BarSymbol::Fin(a)))
        .collect();
    letters.push(Slot::Is(BarSymbol::Inf));
    let mut identities = 0usize;
    for mu in measure_fixtures(&full) {
        let mut layer: Vec<Vec<Slot>> = vec![Vec::new()];
        for _depth in 1..=4 {
            let mut next = Vec::new();
            for c in &layer {
                for l in &letters {
                    let mut w = c.clone();
                    w.push(l.clone());
                    next.push(w);
                }
            }
            layer = next;
            for c in &layer {
                let lhs = exact(mu.pattern_mass(c));
                let mut pre = BigRational::zero();
                let mut post = BigRational::zero();
                let mut extended: Vec<Slot> = alphabet
                    .iter()
                    .map(|&a| Slot::Is(BarSymbol::Fin(a)))
                    .collect();
                extended.push(rest.clone());
                for a in &extended {
                    let mut w = vec![a.clone()];
                    w.extend_from_slice(c);
                    pre += exact(mu.pattern_mass(&w));
                    let mut v = c.clone();
                    v.push(a.clone());
                    post += exact(mu.pattern_mass(&v));
                }
                check(
                    pre == lhs,
                    format!("σ-invariance fails on {c:?} for {mu:?}"),
                )?;
                check(
                    post == lhs,
                    format!("consistency fails on {c:?} for {mu:?}"),
                )?;
                identities += 2;
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let random_symbol = |rng: &mut ChaCha8Rng| {
        if rng.gen_bool(0.1) {
            BarSymbol::Inf
        } else {
            BarSymbol::Fin(rng.gen_range(1..=20))
        }
    };
    for _ in 0..1000 {
        let len = rng.gen_range(1..=12);
        let x: Vec<BarSymbol> = (0..len).map(|_| random_symbol(&mut rng)).collect();
        let mut y = x.clone();
        let from = rng.gen_range(0..len);
        for s in y.iter_mut().skip(from) {
            if rng.gen_bool(0.5) {
                *s = random_symbol(&mut rng);
            }
        }
        let rho = metric_d_rho(&x, &y).map_err(|e| e.to_string())?;
        let d = BigRational::from_float(metric_d(&x, &y)).unwrap();
        check(rho.partial <= d, format!("d_ρ > d for {x:?} {y:?}"))?;
    }
    for _ in 0..1000 {
        let len = rng.gen_range(1..=12);
        let a: u64 = rng.gen_range(1..=50);
        let mut x: Vec<BarSymbol> = (0..len).map(|_| random_symbol(&mut rng)).collect();
        let mut y: Vec<BarSymbol> = (0..len).map(|_| random_symbol(&mut rng)).collect();
        x[0] = BarSymbol::Fin(a);
        if y[0] == BarSymbol::Fin(a) {
            y[0] = BarSymbol::Fin(a + 1);
        }
        let rho = metric_d_rho(&x, &y).map_err(|e| e.to_string())?;
        let radius = BigRational::new(BigInt::one(), BigInt::from(2 * a * (a + 1)));
        check(
            rho.partial >= radius - &rho.tail_bound,
            format!("clopen radius fails for a = {a}"),
        )?;
    }
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let k = rng.gen_range(2..=4);
        let mut parts = Vec::new();
        let mut oracle_h = Vec::new();
        for i in 0..k {
            let p = rat(rng.gen_range(1..=9), 10);
            let q = BigRational::one() - &p;
            let pf = cms_core::num::to_f64(&p);
            oracle_h.push(-(pf * pf.ln() + (1.0 - pf) * (1.0 - pf).ln()));
            parts.push(
                Measure::bernoulli(vec![1 + 2 * i as u64, 2 + 2 * i as u64], vec![p, q]).unwrap(),
            );
        }
        let raw: Vec<i64> = (0..k).map(|_| rng.gen_range(1..=20)).collect();
        let total: i64 = raw.iter().sum();
        let weights: Vec<BigRational> = raw.iter().map(|&w| rat(w, total)).collect();
        let expected: f64 = raw
            .iter()
            .zip(&oracle_h)
            .map(|(&w, h)| w as f64 / total as f64 * h)
            .sum();
        let combo = convex_combo(weights, parts).map_err(|e| e.to_string())?;
        worst = worst.max((combo.entropy() - expected).abs());
    }
    check(worst < 1e-12, format!("entropy affinity error {worst:e}"))?;
    Ok(format!(
        "{identities} invariance identities; 1000 + 1000 metric pairs; affinity error {worst:.1e}"
    ))
}

fn main() {
    let criteria: Vec<(&str, fn() -> Outcome)> = vec![
        ("1 golden-mean entropy agreement", golden_mean_entropy),
        ("2 escape demo with finitely additive limit", escape_demo),
        (
            "3 total escape on the one-loop-per-length system",
            total_escape,
        ),
        ("4 dichotomy", dichotomy),
        ("5 Rome equivalences", rome_equivalences),
        ("6 gluing convergence", gluing),
        ("7 dual variational principle", dual_vp),
        ("8 psi construction and s_infinity", psi_construction),
        ("9 invariance and metric suites", invariance_and_metrics),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS criterion {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {name}: {detail}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
