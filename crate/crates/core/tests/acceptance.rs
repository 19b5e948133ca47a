//! End-to-end acceptance checks. Each criterion prints one line
//! `criterion N <name>: PASS|FAIL (detail)`; the process fails if any does.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use goldbach_core::arith::sieve_von_mangoldt;
use goldbach_core::characters::CharacterGroup;
use goldbach_core::circle::{kernel_bound_ratio, kernel_l1, quadrature_identity, CirclePoint, SeriesCutoff};
use goldbach_core::experiments::{
    fit_slope, geometric_points, run, run_character_moments, run_error_scaling, run_explicit_formula_scan, Command,
    ExperimentConfig,
};
use goldbach_core::goldbach::{goldbach_average_multiples, psi2_direct, psi2_entry, psi2_fast};
use goldbach_core::lemmas::{
    gallagher_cases, gallagher_ratio, i1_i2_decomposition, i1_i2_table_len, character_average_defect, principal_character_defect,
    seeded_alphas,
};
use goldbach_core::report::{format_float, Format, Verdict};
use goldbach_core::zeros::load_zero_table;
use goldbach_core::Result;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn zeros_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/zeros_100k.txt")
}

fn secs(d: Duration) -> String {
    format!("{:.2}s", d.as_secs_f64())
}

fn failed_verdicts(report: &goldbach_core::report::ExperimentReport, prefix: &str) -> Vec<String> {
    report
        .verdicts()
        .iter()
        .filter(|v| v.name.starts_with(prefix) && v.verdict == Verdict::Fail)
        .map(|v| format!("{} [{}]", v.name, v.detail))
        .collect()
}

fn oracle_equivalence() -> Result<Outcome> {
    let start = Instant::now();
    let table = sieve_von_mangoldt(10_000)?;
    let fast = psi2_fast(&table, 10_000)?;
    let direct = psi2_direct(&table, 10_000)?;
    let worst_small = (0..=10_000)
        .map(|n| (fast.psi2(n) - direct.psi2(n)).abs())
        .fold(0.0, f64::max);
    let elapsed = start.elapsed();

    let big = sieve_von_mangoldt(1_000_000)?;
    let fast_big = psi2_fast(&big, 1_000_000)?;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst_big = 0.0f64;
    for _ in 0..100 {
        let n = rng.gen_range(0..=1_000_000usize);
        worst_big = worst_big.max((fast_big.psi2(n) - psi2_entry(&big, n)?).abs());
    }
    Ok(outcome(
        worst_small <= 1e-6 && elapsed < Duration::from_secs(10) && worst_big <= 1e-5,
        format!(
            "N=1e4 max |fast-direct| {} in {}; N=1e6 100 samples max {}",
            format_float(worst_small),
            secs(elapsed),
            format_float(worst_big)
        ),
    ))
}

fn integral_representation() -> Result<Outcome> {
    let start = Instant::now();
    let n_cut = SeriesCutoff::for_n(64)?.n_cut();
    let table = sieve_von_mangoldt(n_cut)?;
    let series = psi2_fast(&table, n_cut)?;
    let mut worst = 0.0f64;
    let mut count = 0;
    for n in [8u64, 16, 32, 64] {
        for q in [1, 2, 3, 5, n] {
            let chk = quadrature_identity(&series, q, n)?;
            let sieved = goldbach_average_multiples(&series, q as usize, n as usize)?;
            worst = worst.max((chk.integral.re - sieved).abs()).max(chk.integral.im.abs());
            count += 1;
        }
    }
    let elapsed = start.elapsed();
    Ok(outcome(
        worst <= 1e-8 && elapsed < Duration::from_secs(60),
        format!("{count} cases, max residual {} in {}", format_float(worst), secs(elapsed)),
    ))
}

fn kernel_bounds() -> Result<Outcome> {
    let mut worst_point = 0.0f64;
    for n in [10u64, 100, 1000] {
        for i in 0..10_000 {
            let alpha = -0.5 + (i as f64 + 0.5) / 10_000.0;
            worst_point = worst_point.max(kernel_bound_ratio(&CirclePoint::new(n, alpha)?));
        }
    }
    let mut l1_ok = true;
    let mut fit = Vec::new();
    let mut parts = Vec::new();
    for n in [16u64, 256, 4096] {
        let k = kernel_l1(n, 4 * n as usize)?;
        let budget = 2.0 * std::f64::consts::E * (1.0 + (n as f64 / 2.0).ln());
        l1_ok &= k.converged && k.value <= budget;
        fit.push(((n as f64).ln(), k.value));
        parts.push(format!("N={n}: {} <= {}", format_float(k.value), format_float(budget)));
    }
    let slope = fit_slope(&fit);
    Ok(outcome(
        worst_point <= 1.0 && l1_ok && (0.5..=1.5).contains(&slope),
        format!(
            "pointwise max ratio {}; {}; slope {}",
            format_float(worst_point),
            parts.join(", "),
            format_float(slope)
        ),
    ))
}

fn lemma_cores() -> Result<Outcome> {
    let n_cut = SeriesCutoff::for_n(256)?.n_cut();
    let table = sieve_von_mangoldt(n_cut)?;
    let series = psi2_fast(&table, n_cut)?;
    let alphas = seeded_alphas(0, 16);
    let mut core = 0.0f64;
    let mut sub = 0.0f64;
    let mut ceiling = 0.0f64;
    for q in 2u64..=12 {
        let group = CharacterGroup::new(q)?;
        for n in [8u64, 16, 32, 64] {
            let cutoff = SeriesCutoff::for_n(n)?;
            for &a in &alphas {
                let chk = character_average_defect(&table, &series, &group, &CirclePoint::new(n, a)?, &cutoff)?;
                core = core.max(chk.core_residual);
            }
        }
        for n in [8u64, 16, 32, 64, 128, 256] {
            let cutoff = SeriesCutoff::for_n(n)?;
            for &a in &alphas {
                let chk = principal_character_defect(&table, &group, &CirclePoint::new(n, a)?, &cutoff)?;
                sub = sub.max(chk.subseries_residual);
                ceiling = ceiling.max(chk.defect / chk.budget);
            }
        }
    }
    Ok(outcome(
        core <= 1e-10 && sub <= 1e-12 && ceiling.is_finite(),
        format!(
            "character average vs coprime pairs {}; defect vs subseries {}; recorded defect/(log N log q) ceiling {}",
            format_float(core),
            format_float(sub),
            format_float(ceiling)
        ),
    ))
}

fn gallagher() -> Result<Outcome> {
    let mut spike = 0.0f64;
    for (pos, h) in [(0i64, 1.0), (17, 0.5), (123, 4.0), (5, 10.0)] {
        let coeffs = [(pos, Complex64::new(0.6, -0.8))];
        let r = gallagher_ratio(&coeffs, h, 64)?;
        spike = spike.max((r.ratio - 1.0).abs());
    }
    let cases = gallagher_cases(0, 20);
    let (mut coarse, mut fine) = (0.0f64, 0.0f64);
    for c in &cases {
        coarse = coarse.max(gallagher_ratio(&c.coeffs, c.h, c.default_nodes())?.ratio);
        fine = fine.max(gallagher_ratio(&c.coeffs, c.h, 2 * c.default_nodes())?.ratio);
    }
    let drift = (fine - coarse).abs() / coarse;
    Ok(outcome(
        spike <= 1e-6 && drift <= 0.05,
        format!(
            "spike |ratio-1| {}; 20-sequence ceiling {} -> {} under 2x nodes (drift {})",
            format_float(spike),
            format_float(coarse),
            format_float(fine),
            format_float(drift)
        ),
    ))
}

fn moment_bounds() -> Result<Outcome> {
    let mut config = ExperimentConfig::new(Command::CharacterMoments);
    config.q_values = vec![3, 4, 5, 8, 12, 30];
    let report = run_character_moments(&config)?;
    let blow = report
        .verdicts()
        .iter()
        .filter(|v| v.name.starts_with("no_blow_up"))
        .count();
    let failed = failed_verdicts(&report, "no_blow_up");
    let imprim = failed_verdicts(&report, "imprimitivity");
    let mut detail = format!(
        "{} of {blow} no-blow-up series pass, imprimitivity {}",
        blow - failed.len(),
        if imprim.is_empty() { "holds" } else { "violated" }
    );
    if !failed.is_empty() {
        detail.push_str(&format!("; failing: {}", failed.join("; ")));
    }
    Ok(outcome(failed.is_empty() && imprim.is_empty(), detail))
}

fn short_interval_split() -> Result<Outcome> {
    let group = CharacterGroup::new(3)?;
    let j = group.nonprincipal().next().expect("nonprincipal character mod 3");
    let mut worst15 = 0.0f64;
    let ceiling = |ns: &[u64], worst15: &mut f64| -> Result<f64> {
        let mut c = 0.0f64;
        for &n in ns {
            let mut h = n as f64 / 4.0;
            let len = i1_i2_table_len(n, n as f64 / 4.0);
            let table = sieve_von_mangoldt(len)?;
            let mut k = 0;
            while (1u64 << k) < n {
                let r = i1_i2_decomposition(&table, &group, j, n, h)?;
                *worst15 = worst15.max(r.i1_ratio);
                c = c.max(r.i2_ratio);
                h /= 2.0;
                k += 1;
            }
        }
        Ok(c)
    };
    let coarse = ceiling(&[128, 256], &mut worst15)?;
    let fine = ceiling(&[128, 160, 192, 224, 256], &mut worst15)?;
    Ok(outcome(
        worst15 <= 1.0 && fine <= 1.05 * coarse && coarse > 0.0,
        format!(
            "max I1/(3 J1(h)) {}; I2 constant {} on N in {{128,256}}, {} on the refined grid",
            format_float(worst15),
            format_float(coarse),
            format_float(fine)
        ),
    ))
}

fn explicit_formula() -> Result<Outcome> {
    let start = Instant::now();
    let bytes = std::fs::read(zeros_path())?;
    let zeros = load_zero_table(&bytes[..], "fixture")?;
    let mut config = ExperimentConfig::new(Command::ExplicitFormula);
    config.n_values = geometric_points(1_000, 1_000_000, 32);
    let report = run_explicit_formula_scan(&config, &zeros, "fixture")?;
    let improved = report.column_index("improved").expect("improved column");
    let flags = report
        .rows()
        .iter()
        .filter(|r| r[improved] == true.into())
        .count();
    config.n_values = vec![1_000, 10_000, 100_000, 1_000_000];
    let decades = run_explicit_formula_scan(&config, &zeros, "fixture")?;
    let decade_flags: Vec<String> = decades
        .rows()
        .iter()
        .map(|r| format!("{:?}", r[improved]))
        .collect();
    let elapsed = start.elapsed();
    let failed = failed_verdicts(&report, "");
    Ok(outcome(
        zeros.len() >= 100_000 && failed.is_empty() && elapsed < Duration::from_secs(300),
        format!(
            "{} zeros; improved at {flags} of {} grid points; decades 1e3..1e6 improved {}; {}; {}",
            zeros.len(),
            report.rows().len(),
            decade_flags.join("/").replace("Bool(", "").replace(')', ""),
            report
                .verdicts()
                .iter()
                .find(|v| v.name == "residual_decay")
                .map_or("no decay verdict".to_string(), |v| v.detail.clone()),
            secs(elapsed)
        ),
    ))
}

fn peak_rss_kb() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    status
        .lines()
        .find_map(|l| l.strip_prefix("VmHWM:"))
        .and_then(|v| v.trim().trim_end_matches("kB").trim().parse().ok())
}

fn error_scaling() -> Result<Outcome> {
    let start = Instant::now();
    let table = sieve_von_mangoldt(10_000_000)?;
    let series = psi2_fast(&table, 10_000_000)?;
    let elapsed = start.elapsed();
    drop((table, series));

    let mut config = ExperimentConfig::new(Command::ErrorScaling);
    config.q_values = (2..=12).collect();
    config.n_values = (0..=8).map(|k| (1e5 * 10f64.powf(k as f64 / 4.0)).round() as u64).collect();
    let report = run_error_scaling(&config)?;
    let failed = failed_verdicts(&report, "");
    let peak = peak_rss_kb();
    let mem_ok = peak.map_or(true, |kb| kb < 4 * 1024 * 1024);
    let max_norm = report
        .ceilings()
        .iter()
        .find(|c| c.0 == "max_normalized_error")
        .map_or(f64::NAN, |c| c.1);
    let mut detail = format!(
        "sieve + fast convolution at 1e7 in {}; peak RSS {}; max normalized error {}; {} verdicts",
        secs(elapsed),
        peak.map_or("unavailable".to_string(), |kb| format!("{} MB", kb / 1024)),
        format_float(max_norm),
        report.verdicts().len()
    );
    if !failed.is_empty() {
        detail.push_str(&format!("; failing: {}", failed.join("; ")));
    }
    Ok(outcome(failed.is_empty() && elapsed < Duration::from_secs(300) && mem_ok, detail))
}

fn determinism() -> Result<Outcome> {
    let mut configs = Vec::new();
    let mut c = ExperimentConfig::new(Command::Sieve);
    c.n_values = vec![100, 1000];
    configs.push(c);
    let mut c = ExperimentConfig::new(Command::Goldbach);
    c.n_values = vec![1024, 4096];
    configs.push(c);
    let mut c = ExperimentConfig::new(Command::ErrorScaling);
    c.n_values = vec![10_000, 100_000];
    c.format = Format::Tsv;
    configs.push(c);
    let mut c = ExperimentConfig::new(Command::ExplicitFormula);
    c.n_values = vec![1_000, 50_000];
    c.zero_table_path = Some(zeros_path());
    configs.push(c);
    let mut c = ExperimentConfig::new(Command::CharacterMoments);
    c.n_values = vec![1_000, 8_000];
    c.q_values = vec![5, 12];
    configs.push(c);
    let mut c = ExperimentConfig::new(Command::IdentitySuite);
    c.seed = 7;
    configs.push(c);
    let mut differing = Vec::new();
    for c in &configs {
        let a = run(c)?.render(c.format);
        let b = run(c)?.render(c.format);
        if a != b {
            differing.push(c.command.to_string());
        }
    }
    Ok(outcome(
        differing.is_empty(),
        if differing.is_empty() {
            format!("{} commands byte-identical across two runs", configs.len())
        } else {
            format!("reports differ for {}", differing.join(", "))
        },
    ))
}

fn main() {
    type Criterion = (&'static str, fn() -> Result<Outcome>);
    let criteria: [Criterion; 10] = [
        ("oracle equivalence", oracle_equivalence),
        ("integral representation", integral_representation),
        ("kernel bounds", kernel_bounds),
        ("character decomposition cores", lemma_cores),
        ("Gallagher inequality", gallagher),
        ("twisted moment bounds", moment_bounds),
        ("short interval split", short_interval_split),
        ("explicit formula", explicit_formula),
        ("error scaling", error_scaling),
        ("determinism", determinism),
    ];
    let mut all = true;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let (pass, detail) = match check() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        all &= pass;
        println!("criterion {} {name}: {} ({detail})", i + 1, if pass { "PASS" } else { "FAIL" });
    }
    if !all {
        std::process::exit(1);
    }
}
