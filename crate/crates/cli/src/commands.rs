use std::fmt::Write as _;
use std::fs;

use mupir_core::combinatorics::{cyc_closed_form, cyc_oracle};
use mupir_core::cyclic::{choose_plan, delivery_setup, run_cyclic_plan, PlanMode};
use mupir_core::pir::{
    generate_queries, pir_answer, pir_decode, pir_factor, render_answer_table,
    render_query_table, CapacityAchieving, PirParams,
};
use mupir_core::placement::{
    fill_caches, make_library, write_cache_dumps, AccessStructure, LibrarySource, SystemParams,
};
use mupir_core::privacy::{
    default_demand_vectors, exhaustive_privacy_check, statistical_privacy_check, ExhaustiveCaps,
};
use mupir_core::protocol::{
    expected_coding_gain, full_family, run_simulation, DemandVector, SimulationOutcome,
};
use mupir_core::rates::{
    comparison_csv, compare_scenarios, cyclic_points, memory_sharing_envelope, optimality_ratio,
    rate_nopir, rate_nopir_extended, rate_product_design, rate_theorem1, rate_theorem3,
    theorem1_points, Scenario,
};
use mupir_core::{fmt_decimal, fmt_exact, Exact};
use num_bigint::BigInt;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{
    AccessArg, AuditMode, CliError, CompareArgs, CycArgs, Outcome, PirDemoArgs, PrivacyArgs,
    RateMode, RatesArgs, Report, SimulateArgs,
};

const DIGITS: usize = 6;

pub(crate) fn parse_integer_t(raw: &str) -> Result<usize, CliError> {
    raw.trim()
        .parse::<usize>()
        .map_err(|_| CliError::Params(format!("t = CM/N must be an integer; got {raw}")))
}

/// `7`, `3/2` or `1.5`.
pub(crate) fn parse_rational(raw: &str) -> Result<Exact, CliError> {
    let bad = || CliError::Params(format!("cannot read {raw:?} as a non-negative number"));
    let s = raw.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d == BigInt::from(0) {
            return Err(bad());
        }
        return Ok(Exact::new(n, d));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        let digits = format!("{whole}{frac}");
        let n: BigInt = digits.parse().map_err(|_| bad())?;
        let d = BigInt::from(10).pow(frac.len() as u32);
        return Ok(Exact::new(n, d));
    }
    s.parse::<BigInt>().map(Exact::from_integer).map_err(|_| bad())
}

fn check_window(t: usize, access_degree: usize, caches: usize) -> Result<(), CliError> {
    if t + access_degree > caches {
        return Err(CliError::Params(format!(
            "t + L must not exceed C; got t = {t}, L = {access_degree}, C = {caches}"
        )));
    }
    Ok(())
}

fn parse_demands(
    raw: &str,
    access: &AccessStructure,
    files: usize,
    seed: u64,
) -> Result<DemandVector, CliError> {
    if raw.trim() == "random" {
        return Ok(DemandVector::from_seed(access, files, seed));
    }
    let list = raw
        .split(',')
        .map(|d| {
            d.trim()
                .parse::<usize>()
                .map_err(|_| CliError::Params(format!("bad demand {d:?} in {raw:?}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(DemandVector::new(list, access, files)?)
}

fn join<T: ToString>(items: &[T], sep: &str) -> String {
    items
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(sep)
}

fn exact_pair(report: &mut Report, key: &str, value: &Exact) {
    report.put(key, fmt_exact(value));
    report.put(&format!("{key}_decimal"), fmt_decimal(value, DIGITS));
}

pub(crate) fn simulate(a: &SimulateArgs) -> Result<Outcome, CliError> {
    let t = parse_integer_t(&a.t)?;
    check_window(t, a.access_degree, a.caches)?;
    let unit = SystemParams::new(a.servers, a.files, a.caches, a.access_degree, t, 1)?
        .subpacketization()?;
    let params = SystemParams::new(
        a.servers,
        a.files,
        a.caches,
        a.access_degree,
        t,
        a.file_bytes.unwrap_or(unit),
    )?;

    let (access, demands, mode, outcome, formula, gain) = match a.access {
        AccessArg::Full => {
            let access = AccessStructure::full(a.caches, a.access_degree)?;
            let demands = parse_demands(&a.demands, &access, a.files, a.seed)?;
            let family = full_family(&params);
            let out = run_simulation(&params, &access, &family, &demands, a.seed)?;
            let formula: Exact = rate_theorem1(a.caches, a.access_degree, t, a.servers, a.files)?;
            let gain = Some(expected_coding_gain(&params)?);
            (access, demands, "multiaccess-full", out, formula, gain)
        }
        AccessArg::Cyclic => {
            let access = AccessStructure::cyclic(a.caches, a.access_degree)?;
            let demands = parse_demands(&a.demands, &access, a.files, a.seed)?;
            let plan = choose_plan(a.caches, a.access_degree, t)?;
            let run = run_cyclic_plan(&params, &plan, demands.as_slice(), a.seed)?;
            let formula: Exact = rate_theorem3(a.caches, a.access_degree, t, a.servers, a.files)?;
            let gain = match plan.mode {
                PlanMode::DedicatedFallback => Some(t as u64 + 1),
                PlanMode::MultiaccessCyclic => None,
            };
            (access, demands, plan.mode.as_str(), run.outcome, formula, gain)
        }
    };

    let mut dumps = None;
    if let Some(dir) = &a.dump_dir {
        let library = make_library(&params, LibrarySource::Seeded(a.seed))?;
        dumps = Some(write_cache_dumps(&fill_caches(&library)?, &params, dir)?.len());
    }

    let report = simulation_report(a, &params, &access, &demands, mode, &outcome, &formula, gain, dumps)?;
    if let Some(path) = &a.report {
        report.write(path)?;
    }

    let log = &outcome.log;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "simulate: S={} N={} C={} L={} t={} ({} access, {} users, {mode})",
        a.servers,
        a.files,
        a.caches,
        a.access_degree,
        t,
        report.get("access").unwrap_or("?"),
        access.len()
    );
    let _ = writeln!(
        out,
        "subpacketization {} | padded file {} bytes | {} transmissions per server",
        report.get("subpacketization").unwrap_or("?"),
        log.padded_file_bytes,
        log.transmissions_per_server()
    );
    let _ = writeln!(
        out,
        "measured rate {} ({}) | formula {} | {}",
        fmt_exact(&log.measured_rate),
        fmt_decimal(&log.measured_rate, DIGITS),
        fmt_exact(&formula),
        if log.measured_rate == formula { "match" } else { "MISMATCH" }
    );
    let _ = writeln!(
        out,
        "coding gain check: {} | decoded {}",
        report.get("coding_gain_check").unwrap_or("?"),
        report.get("decoded").unwrap_or("?")
    );
    if let Some(path) = &a.report {
        let _ = writeln!(out, "report written to {}", path.display());
    }
    Ok(Outcome::ok(out))
}

#[allow(clippy::too_many_arguments)]
fn simulation_report(
    a: &SimulateArgs,
    params: &SystemParams,
    access: &AccessStructure,
    demands: &DemandVector,
    mode: &str,
    outcome: &SimulationOutcome,
    formula: &Exact,
    gain: Option<u64>,
    dumps: Option<usize>,
) -> Result<Report, CliError> {
    let log = &outcome.log;
    let mut r = Report::new();
    r.put("command", "simulate")
        .put(
            "access",
            match a.access {
                AccessArg::Full => "full",
                AccessArg::Cyclic => "cyclic",
            },
        )
        .put("plan_mode", mode)
        .put("servers", params.servers())
        .put("files", params.files())
        .put("caches", params.caches())
        .put("access_degree", params.access_degree())
        .put("t", params.t())
        .put("users", access.len())
        .put("seed", a.seed)
        .put("demands", join(demands.as_slice(), ","))
        .put("file_bytes", params.file_bytes())
        .put("padded_file_bytes", log.padded_file_bytes)
        .put("subpacketization", params.subpacketization()?)
        .put("family_size", log.transmissions_per_server())
        .put("transmissions_per_server", log.transmissions_per_server());
    let mut symbols = log.symbols_per_transmission.clone();
    symbols.sort_unstable();
    symbols.dedup();
    r.put("symbols_per_transmission", join(&symbols, ","))
        .put("bytes_per_server", join(&log.bytes_per_server, ","))
        .put("total_bytes", log.total_bytes);
    exact_pair(&mut r, "measured_rate", &log.measured_rate);
    exact_pair(&mut r, "formula_rate", formula);
    r.put("rate_match", log.measured_rate == *formula);
    let users = Exact::from_integer(BigInt::from(access.len()));
    exact_pair(&mut r, "per_user_rate", &(&log.measured_rate / &users));
    match gain {
        Some(g) => {
            let ok = log.users_per_transmission.iter().all(|&u| u as u64 == g);
            r.put("coding_gain_expected", g)
                .put("coding_gain_check", if ok { "pass" } else { "fail" });
        }
        None => {
            let mut seen = log.users_per_transmission.clone();
            seen.sort_unstable();
            seen.dedup();
            r.put("coding_gain_expected", "varies")
                .put("coding_gain_observed", join(&seen, ","))
                .put("coding_gain_check", "n/a");
        }
    }
    let decoded = outcome.decoded.iter().filter(|&&ok| ok).count();
    r.put("decoded", format!("{decoded}/{}", outcome.decoded.len()));
    if let Some(n) = dumps {
        r.put("cache_dumps", n);
    }
    Ok(r)
}

pub(crate) fn pir_demo(a: &PirDemoArgs) -> Result<Outcome, CliError> {
    let pir = PirParams::new(a.servers, a.files)?;
    if a.desired == 0 || a.desired > a.files {
        return Err(CliError::Params(format!(
            "desired message {} outside [1..{}]",
            a.desired, a.files
        )));
    }
    if a.symbol_bytes == 0 {
        return Err(CliError::Params("symbol bytes must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let (perms, queries) = generate_queries(a.desired, &pir, &mut rng)?;
    let messages: Vec<Vec<u8>> = (0..a.files)
        .map(|_| {
            let mut m = vec![0u8; pir.symbols_per_message() * a.symbol_bytes];
            rng.fill_bytes(&mut m);
            m
        })
        .collect();
    let answers = queries
        .iter()
        .map(|q| pir_answer(q, &messages, &pir))
        .collect::<Result<Vec<_>, _>>()?;
    let decoded = pir_decode(&answers, &queries, &perms, a.desired)?;
    let rate: Exact = pir_factor(a.servers, a.files);

    let mut out = String::new();
    let _ = writeln!(
        out,
        "PIR demo: S={} N={} desired={} ({} sub-symbols per message)",
        a.servers,
        a.files,
        a.desired,
        pir.symbols_per_message()
    );
    out.push_str("\nqueries\n");
    out.push_str(&render_query_table(&queries, &perms));
    out.push_str("\nanswers\n");
    out.push_str(&render_answer_table(&queries, &perms));
    let _ = writeln!(out, "\nsums per server = {}", pir.sums_per_server());
    let _ = writeln!(
        out,
        "download per desired symbol = {} ({})",
        fmt_exact(&rate),
        fmt_decimal(&rate, DIGITS)
    );
    if decoded != messages[a.desired - 1] {
        return Err(CliError::CheckFailed(format!(
            "decoded message {} differs from the original",
            a.desired
        )));
    }
    out.push_str("decoded = ok\n");
    Ok(Outcome::ok(out))
}

pub(crate) fn cyc(a: &CycArgs) -> Result<Outcome, CliError> {
    let b = cyc_closed_form(a.n, a.k, a.m)?;
    let mut out = format!("cyc({}, {}, {}) = {}\n", a.n, a.k, a.m, b.total);
    if a.k == a.n {
        out.push_str("note = k = n, the full circle counts once\n");
    }
    if a.breakdown {
        let _ = writeln!(
            out,
            "k1 = {}\nk2 = {}\nk3 = {}\nk41 = {}\nk42 = {}",
            b.k1, b.k2, b.k3, b.k41, b.k42
        );
    }
    if a.oracle {
        let brute = cyc_oracle(a.n, a.k, a.m)?;
        let _ = writeln!(out, "oracle = {brute}");
        if brute != b.total {
            return Err(CliError::CheckFailed(format!(
                "closed form {} differs from enumeration {brute}",
                b.total
            )));
        }
        out.push_str("match = true\n");
    }
    Ok(Outcome::ok(out))
}

pub(crate) fn privacy_audit(a: &PrivacyArgs) -> Result<Outcome, CliError> {
    let t = parse_integer_t(&a.t)?;
    check_window(t, a.access_degree, a.caches)?;
    let params = SystemParams::new(a.servers, a.files, a.caches, a.access_degree, t, 1)?;
    let (params, access, family) = match a.access {
        AccessArg::Full => {
            let family = full_family(&params);
            (params, AccessStructure::full(a.caches, a.access_degree)?, family)
        }
        AccessArg::Cyclic => {
            let plan = choose_plan(a.caches, a.access_degree, t)?;
            let (p, acc) = delivery_setup(&params, &plan)?;
            (p, acc, plan.family)
        }
    };

    let mut r = Report::new();
    r.put("command", "privacy-audit")
        .put("servers", a.servers)
        .put("files", a.files)
        .put("caches", a.caches)
        .put("access_degree", a.access_degree)
        .put("t", t)
        .put("server", a.server)
        .put("seed", a.seed);
    let (passed, csv) = match a.mode {
        AuditMode::Exact => {
            let audit = exhaustive_privacy_check(
                &CapacityAchieving,
                &params,
                &access,
                &family,
                a.server,
                &ExhaustiveCaps::default(),
            )?;
            r.put("mode", "exact")
                .put("demand_vectors", audit.distributions.len())
                .put("max_tv_distance", fmt_exact(&audit.max_tv));
            if let Some(d) = audit.distributions.first() {
                r.put("support", d.support)
                    .put("min_mass", fmt_exact(&d.min_mass))
                    .put("max_mass", fmt_exact(&d.max_mass));
            }
            (audit.passed, audit.csv())
        }
        AuditMode::Statistical => {
            let demands = default_demand_vectors(&access, a.files, a.extra_demands, a.seed)?;
            let audit = statistical_privacy_check(
                &CapacityAchieving,
                &params,
                &access,
                &family,
                a.server,
                &demands,
                a.samples,
                a.alpha,
                a.seed,
            )?;
            r.put("mode", "statistical")
                .put("samples", a.samples)
                .put("alpha", a.alpha)
                .put("demand_vectors", audit.demands.len())
                .put("structural_lists", audit.structural.lists_checked)
                .put("structural_violations", audit.structural.violations.len());
            for test in &audit.tests {
                r.put(&format!("{}_statistic", test.feature), format!("{:.6}", test.statistic))
                    .put(&format!("{}_df", test.feature), test.degrees_of_freedom)
                    .put(&format!("{}_p_value", test.feature), format!("{:.6}", test.p_value));
            }
            (audit.passed, audit.csv())
        }
    };
    r.put("verdict", if passed { "PASS" } else { "FAIL" });
    if let Some(path) = &a.csv {
        fs::write(path, &csv)?;
    }
    if let Some(path) = &a.report {
        r.write(path)?;
    }
    let mut out = r.render();
    if a.csv.is_none() {
        out.push('\n');
        out.push_str(&csv);
    }
    Ok(Outcome {
        stdout: out,
        exit_code: if passed { 0 } else { 1 },
    })
}

fn require(value: Option<usize>, flag: &str) -> Result<usize, CliError> {
    value.ok_or_else(|| CliError::Params(format!("--{flag} is required for this mode")))
}

pub(crate) fn rates(a: &RatesArgs) -> Result<Outcome, CliError> {
    let t = parse_rational(&a.t)?;
    let integral = t.is_integer();
    let (s, n) = (a.servers, a.files);
    let (rate, users): (Exact, Option<usize>) = if integral {
        let ti = usize::try_from(t.to_integer())
            .map_err(|_| CliError::Params(format!("t = {} is out of range", a.t)))?;
        match a.mode {
            RateMode::Theorem1 | RateMode::Nopir | RateMode::Theorem3 | RateMode::Ratio => {
                let c = require(a.caches, "caches")?;
                let l = require(a.access_degree, "access-degree")?;
                check_window(ti, l, c)?;
                let users = match a.mode {
                    RateMode::Theorem3 => Some(c),
                    RateMode::Ratio => None,
                    _ => Some(AccessStructure::full(c, l)?.len()),
                };
                let rate = match a.mode {
                    RateMode::Theorem1 => rate_theorem1(c, l, ti, s, n)?,
                    RateMode::Nopir => rate_nopir(c, l, ti)?,
                    RateMode::Theorem3 => rate_theorem3(c, l, ti, s, n)?,
                    _ => optimality_ratio(c, l, ti, s, n)?,
                };
                (rate, users)
            }
            RateMode::Product => {
                let k = a.users.or(a.caches).ok_or_else(|| {
                    CliError::Params("--users or --caches is required for this mode".into())
                })?;
                (rate_product_design(k, ti, s, n)?, Some(k))
            }
        }
    } else {
        let (points, users): (Vec<(Exact, Exact)>, usize) = match a.mode {
            RateMode::Theorem1 | RateMode::Nopir => {
                let c = require(a.caches, "caches")?;
                let l = require(a.access_degree, "access-degree")?;
                let users = AccessStructure::full(c, l)?.len();
                let points = if a.mode == RateMode::Theorem1 {
                    theorem1_points(c, l, s, n)?
                } else {
                    (0..=c)
                        .map(|x| Ok((Exact::from_integer(x.into()), rate_nopir_extended(c, l, x)?)))
                        .collect::<Result<_, mupir_core::Error>>()?
                };
                (points, users)
            }
            RateMode::Theorem3 => {
                let c = require(a.caches, "caches")?;
                let l = require(a.access_degree, "access-degree")?;
                (cyclic_points(c, l, s, n)?, c)
            }
            RateMode::Product => {
                let k = a.users.or(a.caches).ok_or_else(|| {
                    CliError::Params("--users or --caches is required for this mode".into())
                })?;
                let points = (0..=k)
                    .map(|x| Ok((Exact::from_integer(x.into()), rate_product_design(k, x, s, n)?)))
                    .collect::<Result<_, mupir_core::Error>>()?;
                (points, k)
            }
            RateMode::Ratio => {
                return Err(CliError::Params(format!(
                    "t = CM/N must be an integer; got {}",
                    a.t
                )))
            }
        };
        let env = memory_sharing_envelope(&points)?;
        let rate = env
            .eval(&t)
            .ok_or_else(|| CliError::Params(format!("t = {} outside the memory range", a.t)))?;
        (rate, Some(users))
    };

    let mut r = Report::new();
    r.put("t", fmt_exact(&t)).put("memory_sharing", !integral);
    exact_pair(&mut r, "rate", &rate);
    if let Some(k) = users {
        r.put("users", k);
        exact_pair(
            &mut r,
            "per_user_rate",
            &(&rate / Exact::from_integer(BigInt::from(k))),
        );
    }
    Ok(Outcome::ok(r.render()))
}

pub(crate) fn compare(a: &CompareArgs) -> Result<Outcome, CliError> {
    let scenario = Scenario::from_index(a.scenario)?;
    let rows = compare_scenarios::<Exact>(a.caches, a.servers, a.files, scenario)?;
    let csv = comparison_csv(&rows);
    match &a.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            let path = dir.join(format!("scenario_{}.csv", a.scenario));
            fs::write(&path, &csv)?;
            Ok(Outcome::ok(format!(
                "scenario {}: {} rows written to {}\n",
                a.scenario,
                rows.len(),
                path.display()
            )))
        }
        None => Ok(Outcome::ok(csv)),
    }
}
