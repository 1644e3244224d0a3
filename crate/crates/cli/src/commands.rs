//! One function per subcommand: resolve settings, run, build a report.

use num_traits::Zero;
use serde_json::json;

use diophlab::affine::AffineForm;
use diophlab::diophantine::{dd_dim_bound, delta_margin, dioph_exponent_estimate, series_converges, ApproxRate};
use diophlab::flows::Hyperplane;
use diophlab::measure::{
    borel_cantelli_tail, estimate_region_measure, psi_threshold, strip_measure_exact, shell_bound_report, Side,
    DEFAULT_SCAN_BUDGET,
};
use diophlab::nondiv::{
    beta_threshold, bkm_empirical_check, closing_series, default_beta, good_check, good_constant,
    random_rational_hyperplanes, orbit_bound_scan, verify_cvec_bound, ExceptionalSet, GoodTarget, NondivConstants,
};
use diophlab::presets::CoefficientList;
use diophlab::scalar::{fmt_rational, parse_rational, Rational};

use crate::report::{Report, Table};
use crate::settings::Settings;
use crate::CliError;

fn f(v: f64) -> String {
    format!("{v}")
}

fn rational(s: &Settings, key: &str, v: &str) -> Result<Rational, CliError> {
    parse_rational(v).map_err(|e| CliError::Config(format!("--{key} `{v}` in `{}`: {e}", s.command())))
}

fn rational_list(s: &Settings, key: &str, v: &str) -> Result<Vec<Rational>, CliError> {
    v.split(',').map(|x| rational(s, key, x.trim())).collect()
}

fn psi(s: &mut Settings, n: usize) -> Result<ApproxRate, CliError> {
    s.parse("psi", format!("psi0:n={n}"))
}

fn budget(s: &mut Settings) -> Result<u128, CliError> {
    s.parse("budget", DEFAULT_SCAN_BUDGET)
}

pub fn series(s: &mut Settings) -> Result<Report, CliError> {
    let n: usize = s.parse_required("n")?;
    let psi = psi(s, n)?;
    let terms: u64 = s.parse("terms", 100_000)?;
    let r = series_converges(&psi, n, terms)?;
    Report::new(json!({ "psi": psi.to_string(), "n": n, "report": r }))
}

pub fn exponent(s: &mut Settings) -> Result<Report, CliError> {
    let list = CoefficientList::parse(&s.required("alpha")?)?;
    let q_max: u64 = s.parse("q-max", 10_000)?;
    let e = dioph_exponent_estimate(&list.values, list.precision.as_ref(), q_max)?;
    let mut table = Table::new(&["q", "best_value", "local_exponent"]);
    for r in &e.records {
        table.push(vec![r.q.to_string(), fmt_rational(&r.best_value), f(r.local_exponent)]);
    }
    // JSON has no infinity; the flag carries the sentinel
    let result = json!({
        "omega_hat": e.omega_hat,
        "omega_hat_infinite": e.omega_hat.is_infinite(),
        "max_local_exponent": e.max_local_exponent,
        "argmin_q": e.argmin_q,
        "top_records": e.top_records,
    });
    Ok(Report::new(result)?.with_table(table))
}

pub fn delta_margin_cmd(s: &mut Settings) -> Result<Report, CliError> {
    let list = CoefficientList::parse(&s.required("alpha")?)?;
    let q_max: u64 = s.parse("q-max", 10_000)?;
    let max_exc: usize = s.parse("max-exceptional", 0)?;
    let dm = delta_margin(&list.values, list.precision.as_ref(), q_max, max_exc)?;
    let mut report = Report::new(&dm)?;
    if dm.condition_fails {
        report.findings.push(condition_finding(q_max, max_exc));
    }
    Ok(report)
}

fn condition_finding(q_max: u64, max_exc: usize) -> String {
    format!(
        "Diophantine condition fails: no positive δ keeps best_q > q^(-n+δ) for q <= {q_max} \
         with at most {max_exc} exceptional q"
    )
}

pub fn scan_measure(s: &mut Settings) -> Result<Report, CliError> {
    let a = s.hyperplane()?;
    let b = s.param_box(a.param_dim())?;
    let psi = psi(s, a.n())?;
    let ts: Vec<u32> = s.range_list("t", "1..10")?;
    let side = s.or("side", "geq");
    let sides: Vec<Side> = match side.as_str() {
        "both" => vec![Side::Geq, Side::Less],
        one => vec![one.parse()?],
    };
    let sampler = s.sampler(100_000)?;
    let budget = budget(s)?;

    let mut table = Table::new(&["t", "side", "estimate", "ci_lo", "ci_hi", "bound", "margin"]);
    let mut rows = Vec::new();
    let mut findings = Vec::new();
    for side in sides {
        if side == Side::Geq {
            for r in shell_bound_report(&b, &a, &psi, &ts, &sampler, budget)? {
                let e = &r.estimate;
                table.push(vec![
                    r.t.to_string(),
                    side.to_string(),
                    f(e.estimate_f64),
                    f(e.ci_lo),
                    f(e.ci_hi),
                    fmt_rational(&r.bound),
                    f(r.margin),
                ]);
                if !r.pass {
                    findings.push(format!("t={}: estimate {} exceeds bound {}", r.t, e.estimate_f64, r.bound));
                }
                rows.push(serde_json::to_value(&r).map_err(|e| CliError::Io(e.to_string()))?);
            }
        } else {
            for &t in &ts {
                let theta = psi_threshold(&psi, t)?;
                let e = estimate_region_measure(&b, &a, t, &theta, side, &sampler, budget)?;
                table.push(vec![
                    t.to_string(),
                    side.to_string(),
                    f(e.estimate_f64),
                    f(e.ci_lo),
                    f(e.ci_hi),
                    String::new(),
                    String::new(),
                ]);
                rows.push(json!({ "t": t, "side": side, "estimate": e }));
            }
        }
    }
    let mut report = Report::new(json!({ "box": b.to_string(), "psi": psi.to_string(), "rows": rows }))?.with_table(table);
    report.findings = findings;
    Ok(report)
}

pub fn strip(s: &mut Settings) -> Result<Report, CliError> {
    let a = s.hyperplane()?;
    let b = s.param_box(a.param_dim())?;
    let q_text = s.required("q")?;
    let q: Vec<i64> = q_text
        .split(',')
        .map(|v| v.trim().parse().map_err(|_| CliError::Config(format!("--q `{q_text}`: expected integers"))))
        .collect::<Result<_, _>>()?;
    let theta = if let Some(th) = s.get("theta").map(str::to_string) {
        rational(s, "theta", &th)?
    } else {
        let psi = psi(s, a.n())?;
        let t: u32 = s.parse_required("t")?;
        psi_threshold(&psi, t)?
    };
    let m = strip_measure_exact(&b, &q, &a, &theta)?;
    let pass = m.measure <= m.bound;
    let mut report = Report::new(json!({ "theta": fmt_rational(&theta), "strip": m, "pass": pass }))?;
    if !pass {
        report.findings.push(format!("strip measure {} exceeds bound {}", m.measure, m.bound));
    }
    Ok(report)
}

/// `δ` from `--delta` or from the condition over `q <= q-max`; `Err`
/// carries a report with the failing condition.
fn resolve_delta(s: &mut Settings, a: &Hyperplane) -> Result<Result<Rational, Report>, CliError> {
    if let Some(d) = s.get("delta").map(str::to_string) {
        return Ok(Ok(rational(s, "delta", &d)?));
    }
    let q_max: u64 = s.parse("q-max", 10_000)?;
    let max_exc: usize = s.parse("max-exceptional", 0)?;
    let dm = delta_margin(a.alpha(), a.precision.as_ref(), q_max, max_exc)?;
    if dm.condition_fails {
        let mut report = Report::new(json!({ "delta_margin": dm }))?;
        report.findings.push(condition_finding(q_max, max_exc));
        return Ok(Err(report));
    }
    Ok(Ok(dm.delta))
}

fn constants(s: &mut Settings, a: &Hyperplane, delta: Rational) -> Result<(diophlab::affine::ParamBox, NondivConstants), CliError> {
    let b = s.param_box(a.param_dim())?;
    let n_d = s.or("n-d", "1");
    let n_d = rational(s, "n-d", &n_d)?;
    let consts = NondivConstants::new(&b, a.n(), delta)?.with_covering_constant(n_d);
    Ok((b, consts))
}

pub fn nondiv_scan(s: &mut Settings) -> Result<Report, CliError> {
    let a = s.hyperplane()?;
    let eps_text = s.or("eps", "1/2");
    let eps = rational(s, "eps", &eps_text)?;
    let ts: Vec<u32> = s.range_list("t", "2..10")?;
    let height: u64 = s.parse("height", 5)?;
    let ranks: Vec<u32> = s.range_list("ranks", &format!("1..{}", a.n() + 1))?;
    let ranks: Vec<usize> = ranks.into_iter().map(|r| r as usize).collect();
    let budget = budget(s)?;
    let delta = match resolve_delta(s, &a)? {
        Ok(d) => d,
        Err(report) => {
            let table = Table::new(ORBIT_HEADER);
            return Ok(report.with_table(table));
        }
    };
    let (b, consts) = constants(s, &a, delta)?;
    let exceptional = ExceptionalSet::compute(&a, &consts.delta, height);
    let records = orbit_bound_scan(&a, &b, &eps, &ts, height, &ranks, &consts, &exceptional, budget)?;

    let mut table = Table::new(ORBIT_HEADER);
    let mut findings = Vec::new();
    let mut min_margin = f64::INFINITY;
    for r in &records {
        table.push(vec![
            r.t.to_string(),
            r.rank.to_string(),
            r.case.to_string(),
            r.w.clone(),
            fmt_rational(&r.sup),
            f(r.bound),
            f(r.margin),
            r.pass.to_string(),
            r.exceptional.to_string(),
            r.e0_bound.map_or(String::new(), |v| v.to_string()),
        ]);
        if !r.exceptional {
            min_margin = min_margin.min(r.margin);
            if !r.pass {
                findings.push(format!("t={} rank={} w={}: sup below bound", r.t, r.rank, r.w));
            }
        }
        if r.e0_bound == Some(false) {
            findings.push(format!("t={} w={}: e0 coefficient below its bound", r.t, r.w));
        }
    }
    let result = json!({
        "box": b.to_string(),
        "epsilon": fmt_rational(&eps),
        "constants": consts,
        "c_b1": consts.c_b1(),
        "exceptional": exceptional,
        "records": records.len(),
        "flagged": records.iter().filter(|r| r.exceptional).count(),
        "min_margin": if min_margin.is_finite() { json!(min_margin) } else { json!(null) },
    });
    let mut report = Report::new(result)?.with_table(table);
    report.findings = findings;
    Ok(report)
}

const ORBIT_HEADER: &[&str] = &[
    "t", "rank", "case", "w", "sup", "bound", "margin", "pass", "exceptional", "e0_bound",
];

pub fn bkm_check(s: &mut Settings) -> Result<Report, CliError> {
    let a = s.hyperplane()?;
    let ts: Vec<u32> = s.range_list("t", "6")?;
    let sampler = s.sampler(20_000)?;
    let budget = budget(s)?;
    let delta = match resolve_delta(s, &a)? {
        Ok(d) => d,
        Err(report) => return Ok(report),
    };
    let (b, consts) = constants(s, &a, delta)?;
    let threshold = beta_threshold(a.n(), &consts.delta)?;
    let beta_text = s.or("beta", fmt_rational(&default_beta(&threshold)));
    let beta = rational(s, "beta", &beta_text)?;

    let header = &["t", "beta", "epsilon", "precondition", "estimate", "ci_lo", "ci_hi", "bound", "pass"];
    let mut table = Table::new(header);
    let mut checks = Vec::new();
    let mut findings = Vec::new();
    for &t in &ts {
        let c = bkm_empirical_check(&a, &b, t, &beta, &consts, &sampler, budget)?;
        table.push(vec![
            t.to_string(),
            fmt_rational(&c.beta),
            f(c.epsilon),
            c.precondition.to_string(),
            f(c.estimate.estimate_f64),
            f(c.estimate.ci_lo),
            f(c.estimate.ci_hi),
            c.bound.map_or(String::new(), f),
            c.pass.to_string(),
        ]);
        if c.precondition && !c.pass {
            findings.push(format!("t={t}: estimate {} exceeds bound", c.estimate.estimate_f64));
        }
        checks.push(c);
    }
    let result = json!({
        "constants": consts,
        "beta_threshold": fmt_rational(&threshold),
        "checks": checks,
    });
    let mut report = Report::new(result)?.with_table(table);
    report.findings = findings;
    Ok(report)
}

pub fn cvec(s: &mut Settings) -> Result<Report, CliError> {
    let n: usize = s.parse_required("n")?;
    let j: usize = s.parse("j", 2)?;
    let height: u64 = s.parse("height", 2)?;
    let trials: usize = s.parse("trials", 20)?;
    let seed: u64 = s.parse("seed", 0)?;
    let budget = budget(s)?;
    let samples = random_rational_hyperplanes(n, trials, seed)?;
    let r = verify_cvec_bound(n, j, height, &samples, budget)?;
    let findings = r
        .violations
        .iter()
        .map(|v| format!("{v:?}"))
        .collect();
    let mut report = Report::new(&r)?;
    report.findings = findings;
    Ok(report)
}

pub fn good(s: &mut Settings) -> Result<Report, CliError> {
    let spec = s.required("target")?;
    let (kind, body) = spec
        .split_once(':')
        .ok_or_else(|| CliError::Config("--target is `affine:c|g,..` or `maxabs:c|g,..;c|g,..`".into()))?;
    let target = match kind {
        "affine" => GoodTarget::Affine(body.parse()?),
        "maxabs" => GoodTarget::MaxAbs(body.split(';').map(str::parse).collect::<Result<Vec<AffineForm>, _>>()?),
        other => return Err(CliError::Config(format!("unknown target kind `{other}`"))),
    };
    let d = match &target {
        GoodTarget::Affine(g) => g.param_dim(),
        GoodTarget::MaxAbs(fs) => fs.first().map_or(0, AffineForm::param_dim),
    };
    let b = s.param_box(d)?;
    let c: f64 = s.parse("c", good_constant(d))?;
    let alpha: f64 = s.parse("alpha", 1)?;
    let eps_text = s.or("eps", "1/2,1/4,1/8,1/16,1/32,1/64,1/128");
    let eps = rational_list(s, "eps", &eps_text)?;
    let sampler = s.sampler(100_000)?;
    let r = good_check(&target, &b, c, alpha, &eps, &sampler)?;
    let mut table = Table::new(&["eps", "ratio", "ratio_hi"]);
    for row in &r.rows {
        table.push(vec![fmt_rational(&row.eps), f(row.ratio), f(row.ratio_hi)]);
    }
    let mut report = Report::new(&r)?.with_table(table);
    if !r.pass {
        report.findings.push(format!("ratio exceeds C ε^α with C = {c}; smallest consistent C is {}", r.c_min));
    }
    Ok(report)
}

pub fn dim_bound(s: &mut Settings) -> Result<Report, CliError> {
    let n: usize = s.parse_required("n")?;
    let m: usize = s.parse("m", n.saturating_sub(1))?;
    let psi = psi(s, n)?;
    let d = dd_dim_bound(&psi, n, m)?;
    Report::new(json!({ "psi": psi.to_string(), "n": n, "m": m, "dimension": fmt_rational(&d) }))
}

pub fn tail(s: &mut Settings) -> Result<Report, CliError> {
    if let Some(terms) = s.get("terms").map(str::to_string) {
        let terms = rational_list(s, "terms", &terms)?;
        let (partial, report) = borel_cantelli_tail(&terms)?;
        let partial: Vec<String> = partial.iter().map(fmt_rational).collect();
        return Report::new(json!({ "partial_sums": partial, "report": report }));
    }
    let n: usize = s.parse_required("n")?;
    let delta_text = s.required("delta")?;
    let delta = rational(s, "delta", &delta_text)?;
    let beta_text = match s.get("beta") {
        Some(b) => b.to_string(),
        None => {
            let threshold = beta_threshold(n, &delta)?;
            s.or("beta", fmt_rational(&default_beta(&threshold)))
        }
    };
    let beta = rational(s, "beta", &beta_text)?;
    let cb_text = s.or("c-b", "1");
    let c_b = rational(s, "c-b", &cb_text)?;
    let cb3_text = s.or("c-b3", cb_text.as_str());
    let c_b3 = rational(s, "c-b3", &cb3_text)?;
    if c_b.is_zero() || c_b3.is_zero() {
        return Err(CliError::Config("box constants must be positive".into()));
    }
    let start: u64 = s.parse_required("start")?;
    let series = closing_series(n, &delta, &beta, &c_b, &c_b3)?;
    let tail = series.tail(start)?;
    Report::new(json!({ "series": series, "start": start, "tail": tail }))
}
