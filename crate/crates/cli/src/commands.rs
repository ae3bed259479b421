//! One function per subcommand. Each fills a [`Report`]; library errors are
//! passed up and classified by the caller.

use std::fs::File;
use std::path::Path;

use formsys::arith::{fmt_rational, parse_exact_decimal, parse_rational, rat_to_f64};
use formsys::circle::{predict_and_verify, write_prediction_csv, PredictConfig, PredictionReport};
use formsys::corpus::run_corpus;
use formsys::count::{count_solutions, write_count_csv};
use formsys::invariants::{check_hypotheses, Check, FpConfig, FpDimensionEstimate, InvariantConfig, InvariantReport};
use formsys::weyl::{
    exponential_sum_with, major_arc_approximation, run_dichotomy, DichotomyConfig, DichotomyOutcome, DichotomyReport,
    ExpSumMethod,
};
use formsys::{BigInt, BigRational, BoxRegion, Error, FormSystem, PhaseVector};
use serde_json::{json, Map, Value};

use crate::args::{Command, Common, InvariantArgs};
use crate::report::{Report, Status};

pub type Outcome<T> = std::result::Result<T, Error>;

const SYSTEM: &str = "the input system as parsed: n variables, r forms of common degree d, integer coefficients";
const COUNT: &str = "N(P) = number of x in Z^n with x/P in the box and f_i(x) = 0 for every i; exact enumeration";
const EXPSUM: &str =
    "S(alpha) = sum over x in Z^n with x/P in the box of e(alpha_1 f_1(x) + ... + alpha_r f_r(x)), e(t) = exp(2 pi i t)";
const OUTCOME: &str = "Weyl dichotomy at (alpha, theta, P): either q = |det| of a nonsingular r x r minor of the \
polarization matrix psi with a = adj(minor) applied to the rounded phase columns, so that |q alpha_i - a_i| is \
compared with P^(-d + r(d-1) theta), or a primitive integer b with b^T psi = 0 certifying a degenerate pencil";
const DICHOTOMY: &str = "both alternatives measured at P: (i) |S(alpha)| < P^(n-k); (ii) the number of (d-1)-tuples \
of sup-norm at most P^theta whose alpha-weighted polarization lies within P^(-eta) of an integer in every coordinate \
is at least P^((d-1) n theta - 2^(d-1) k)";
const INVARIANTS: &str = "pencil invariants estimated over F_p by point counting: u = max over sampled primitive b of \
dim Sing(f_b), dim V* from the Jacobian rank locus; the hypothesis checks compare n - u (and the other invariants) \
with r(r+1)(d-1)2^(d-1) and its variants";
const ROWS: &str = "per P: the exact count N(P), the prediction S J P^(n - rd) and their ratio";
const SERIES: &str = "singular series S truncated at q <= Q_max: sum over q of q^(-n) times the complete sums over \
reduced a mod q, computed from root counts mod m with Moebius inversion; tail is the spread of the last ten partial sums";
const INTEGRAL: &str = "singular integral J truncated to |gamma_i| <= T_max: integral over gamma of the box integral \
of e(gamma . f(x)), by composite midpoint quadrature; trace at T/4, T/2 and T";
const VERDICT: &str = "consistent when |ratio - 1| <= 0.1 at the largest P and smaller than at the smallest P; \
descriptive only when n <= rd";
const HYPOTHESIS: &str = "n - u against r(r+1)(d-1)2^(d-1); when it fails the asymptotic is not guaranteed";
const EXPONENT: &str = "n - rd";
const FIXTURES: &str = "bundled fixtures with known answers: counts, major arcs, certificates, quadratic ranks and \
singular loci, the bilinear family Q_i(x, y) = sum_j x_j y_(j,i) and exponent audits";
const UNDECIDED: &str = "a comparison the interval arithmetic could not decide at the working precision";

fn bad(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

fn big(b: &BigInt) -> Value {
    Value::String(b.to_string())
}

fn bigs(v: &[BigInt]) -> Value {
    Value::Array(v.iter().map(big).collect())
}

fn ratv(r: &BigRational) -> Value {
    Value::String(fmt_rational(r))
}

fn parse_p_list(list: &[String]) -> Outcome<Vec<BigRational>> {
    list.iter().map(|s| parse_rational(s)).collect()
}

fn load_system(common: &Common) -> Outcome<FormSystem> {
    let path = common.system.as_ref().ok_or_else(|| bad("--system <file> is required"))?;
    let text = std::fs::read_to_string(path).map_err(|e| bad(format!("cannot read {}: {e}", path.display())))?;
    FormSystem::parse_file(&text)
}

fn load_region(common: &Common, n: usize) -> Outcome<BoxRegion> {
    match &common.region {
        Some(text) => BoxRegion::parse(text, n),
        None => Ok(BoxRegion::unit(n)),
    }
}

fn create_csv(path: &Path) -> Outcome<File> {
    File::create(path).map_err(|e| bad(format!("cannot create {}: {e}", path.display())))
}

fn system_json(sys: &FormSystem) -> Value {
    json!({
        "n": sys.n_vars(),
        "r": sys.r(),
        "d": sys.degree(),
        "forms": sys.forms().iter().map(|f| f.to_string()).collect::<Vec<_>>(),
    })
}

fn base_config(common: &Common) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("system_file".into(), json!(common.system.as_ref().map(|p| p.display().to_string())));
    m.insert("workers".into(), json!(common.workers));
    m.insert("seed".into(), json!(common.seed));
    m.insert("precision_bits".into(), json!(common.precision_bits));
    m.insert("csv".into(), json!(common.csv.as_ref().map(|p| p.display().to_string())));
    m
}

fn check_json(c: &Check) -> Value {
    json!({ "verdict": c.verdict.to_string(), "lhs": c.lhs, "threshold": c.threshold, "margin": c.margin })
}

fn fp_json(e: &FpDimensionEstimate) -> Value {
    let counts: Vec<Value> = e
        .counts
        .iter()
        .map(|c| {
            json!({
                "p": c.p,
                "exact": c.exact,
                "hits": c.hits,
                "trials": c.trials,
                "estimate": c.estimate,
                "interval": [c.interval.0, c.interval.1],
            })
        })
        .collect();
    json!({
        "dim": e.dim_estimate,
        "consistent": e.consistent,
        "method": e.method,
        "primes": e.primes,
        "skipped_primes": e.skipped_primes,
        "per_prime_dims": e.per_prime_dims,
        "per_prime_slopes": e.per_prime_slopes,
        "counts": counts,
    })
}

fn outcome_json(o: &DichotomyOutcome) -> Value {
    let mut v = json!({
        "type": o.kind(),
        "q": null,
        "a": [],
        "errors": [],
        "b": [],
        "abs_S": null,
        "bounds": null,
        "constants": null,
    });
    match o {
        DichotomyOutcome::MajorArc(m) => {
            v["q"] = big(&m.q);
            v["a"] = bigs(&m.a);
            v["errors"] = Value::Array(m.errors.iter().map(ratv).collect());
            v["errors_exact"] = json!(m.errors_exact);
            v["det"] = big(&m.det);
            v["minor"] = Value::Array(m.minor.iter().map(|row| bigs(row)).collect());
            v["minor_columns"] = Value::Array(m.minor_labels.iter().map(|l| json!({ "tuple": l.tuple, "j": l.j })).collect());
            v["bounds"] = json!({
                "q_exponent": m.q_exponent,
                "error_exponent": m.error_exponent,
                "log_P_q": m.log_p_q,
                "log_P_errors": m.log_p_errors,
            });
            v["constants"] = json!({ "q": m.q_constant, "error": m.error_constant });
            v["columns_seen"] = json!(m.columns_seen);
            v["tuples_seen"] = json!(m.tuples_seen);
        }
        DichotomyOutcome::RankDeficient(rd) => {
            v["b"] = bigs(&rd.b);
            v["witness_pencil"] = json!(rd.witness_pencil.to_string());
            v["rank"] = json!(rd.rank);
            v["columns_seen"] = json!(rd.columns_seen);
            v["tuples_seen"] = json!(rd.tuples_seen);
        }
        DichotomyOutcome::MinorArcEvidence(ev) => {
            v["abs_S"] = json!(ev.abs_s);
            v["bounds"] = json!({ "log_P_abs_S_at_most": ev.exponent_bound });
            v["constants"] = json!({ "g_tilde": ev.g_tilde });
        }
    }
    v
}

fn dichotomy_json(d: &DichotomyReport) -> Value {
    json!({
        "abs_S": d.abs_s,
        "lattice_points": big(&d.lattice_points),
        "S_bound": d.s_bound,
        "alternative_i": d.alt_i,
        "near_count": big(&d.near_count),
        "near_bound": d.near_bound,
        "alternative_ii": d.alt_ii,
        "eta": ratv(&d.eta),
        "tuple_bound": big(&d.tuple_bound),
        "column_cap_hit": d.column_cap_hit,
        "neither": d.neither,
    })
}

fn invariant_config(a: &InvariantArgs, seed: u64) -> Outcome<InvariantConfig> {
    let primes = a
        .primes
        .split(',')
        .map(|s| s.trim().parse::<u64>().map_err(|_| bad(format!("bad prime list `{}`", a.primes))))
        .collect::<Outcome<Vec<_>>>()?;
    Ok(InvariantConfig {
        b_bound: a.b_bound,
        random_pencils: a.random_pencils,
        primes,
        fp: FpConfig { exact_threshold: a.exact_threshold, trials: a.trials, seed },
    })
}

fn invariant_config_json(c: &InvariantConfig) -> Value {
    json!({
        "b_bound": c.b_bound,
        "random_pencils": c.random_pencils,
        "primes": c.primes,
        "trials": c.fp.trials,
        "exact_threshold": c.fp.exact_threshold,
    })
}

fn invariants_json(r: &InvariantReport) -> Value {
    let per_b: Vec<Value> = r
        .u
        .per_b
        .iter()
        .map(|p| json!({ "b": bigs(&p.b), "dim_sing": p.dim, "consistent": p.consistent }))
        .collect();
    json!({
        "u": r.u.u,
        "u_attained_by": bigs(&r.u.attained_by),
        "u_consistent": r.u.consistent,
        "per_pencil": per_b,
        "dim_v_star": fp_json(&r.dim_v_star),
        "h_lower": r.h_lower,
        "h_upper": r.h_upper,
        "quadratic_ranks": r.quadratic_ranks,
        "min_pencil_rank": r.min_pencil_rank.as_ref().map(|(b, rk)| json!({ "b": bigs(b), "rank": rk })),
        "g_lower": r.g_lower,
        "phi": r.phi,
        "phi_is_bound": r.phi_is_bound,
        "threshold": r.threshold,
        "checks": {
            "singular_locus": check_json(&r.singular_locus),
            "birch_locus": check_json(&r.birch),
            "h_invariant": check_json(&r.h_invariant),
            "h_invariant_alternative": check_json(&r.h_invariant_alt),
            "pencil_rank": r.pencil_rank.as_ref().map(check_json),
            "g_invariant": check_json(&r.g_invariant),
        },
        "u_within_dim_v_star": r.u_within_v_star,
    })
}

/// Runs `body`; a precision failure becomes a report with status
/// `precision_failure` instead of an error.
fn guarded(mut report: Report, body: impl FnOnce(&mut Report) -> Outcome<()>) -> Outcome<Report> {
    match body(&mut report) {
        Ok(()) => Ok(report),
        Err(Error::Precision(msg)) => {
            report.result.clear();
            report.provenance.clear();
            report.put("undecided", Value::String(msg.clone()), UNDECIDED);
            report.status = Status::PrecisionFailure;
            report.error = Some(msg);
            Ok(report)
        }
        Err(e) => Err(e),
    }
}

pub fn run(cmd: &Command) -> Outcome<Report> {
    let common = cmd.common();
    if common.csv.is_some() && matches!(cmd, Command::Weyl { .. } | Command::Invariants { .. } | Command::Corpus { .. }) {
        return Err(bad(format!("--csv: `{}` has no series data", cmd.name())));
    }
    match cmd {
        Command::Count { common, p } => cmd_count(common, p),
        Command::Expsum { common, alpha, p, float } => cmd_expsum(common, alpha, p, *float),
        Command::Weyl { common, alpha, theta, p, k, column_cap } => cmd_weyl(common, alpha, theta, p, k.as_deref(), *column_cap),
        Command::Invariants { common, inv } => cmd_invariants(common, inv),
        Command::Predict { common, p, qmax, tmax, grid, no_hypothesis, inv } => {
            cmd_predict(common, p, *qmax, tmax, *grid, *no_hypothesis, inv)
        }
        Command::Corpus { common } => cmd_corpus(common),
    }
}

fn cmd_count(common: &Common, p: &[String]) -> Outcome<Report> {
    let sys = load_system(common)?;
    let region = load_region(common, sys.n_vars())?;
    let ps = parse_p_list(p)?;
    let mut config = base_config(common);
    config.insert("box".into(), json!(region.to_string()));
    config.insert("P".into(), Value::Array(ps.iter().map(ratv).collect()));
    guarded(Report::new("count", config), |rep| {
        let mut rows = Vec::new();
        let mut out = Vec::new();
        for p in &ps {
            let c = count_solutions(&sys, &region, p)?;
            out.push(json!({ "P": ratv(p), "N": big(&c.count), "lattice_points": big(&c.points_enumerated) }));
            rows.push((p.clone(), c.count));
        }
        if let Some(path) = &common.csv {
            write_count_csv(create_csv(path)?, &rows)?;
        }
        rep.put("system", system_json(&sys), SYSTEM);
        rep.put("counts", Value::Array(out), COUNT);
        Ok(())
    })
}

fn cmd_expsum(common: &Common, alpha: &str, p: &[String], float: bool) -> Outcome<Report> {
    let sys = load_system(common)?;
    let region = load_region(common, sys.n_vars())?;
    let alpha = PhaseVector::parse(alpha, common.precision_bits)?;
    let ps = parse_p_list(p)?;
    let method = if float { ExpSumMethod::Float } else { ExpSumMethod::Exact };
    let mut config = base_config(common);
    config.insert("box".into(), json!(region.to_string()));
    config.insert("alpha".into(), json!(alpha.to_string()));
    config.insert("P".into(), Value::Array(ps.iter().map(ratv).collect()));
    config.insert("method".into(), json!(if float { "float" } else { "exact" }));
    guarded(Report::new("expsum", config), |rep| {
        let mut out = Vec::new();
        let mut rows = Vec::new();
        for p in &ps {
            let s = exponential_sum_with(&sys, &alpha, &region, p, method)?;
            let points = rat_to_f64(&BigRational::from_integer(s.points.clone()));
            out.push(json!({
                "P": ratv(p),
                "re": s.value.re,
                "im": s.value.im,
                "abs": s.value.norm(),
                "lattice_points": big(&s.points),
                "abs_over_points": s.value.norm() / points,
            }));
            rows.push([fmt_rational(p), format!("{:.12e}", s.value.re), format!("{:.12e}", s.value.im), format!("{:.12e}", s.value.norm())]);
        }
        if let Some(path) = &common.csv {
            let io = |e: csv::Error| bad(format!("csv: {e}"));
            let mut w = csv::Writer::from_writer(create_csv(path)?);
            w.write_record(["P", "re", "im", "abs"]).map_err(io)?;
            for row in &rows {
                w.write_record(row).map_err(io)?;
            }
            w.flush().map_err(|e| bad(format!("csv: {e}")))?;
        }
        rep.put("system", system_json(&sys), SYSTEM);
        rep.put("sums", Value::Array(out), EXPSUM);
        Ok(())
    })
}

fn cmd_weyl(common: &Common, alpha: &str, theta: &str, p: &str, k: Option<&str>, column_cap: usize) -> Outcome<Report> {
    let sys = load_system(common)?;
    let region = load_region(common, sys.n_vars())?;
    let alpha = PhaseVector::parse(alpha, common.precision_bits)?;
    let theta = parse_exact_decimal(theta)?;
    let p = parse_rational(p)?;
    let k = k.map(parse_exact_decimal).transpose()?;
    let mut config = base_config(common);
    config.insert("box".into(), json!(region.to_string()));
    config.insert("alpha".into(), json!(alpha.to_string()));
    config.insert("theta".into(), ratv(&theta));
    config.insert("P".into(), ratv(&p));
    config.insert("k".into(), json!(k.as_ref().map(fmt_rational)));
    config.insert("column_cap".into(), json!(column_cap));
    guarded(Report::new("weyl", config), |rep| {
        rep.put("system", system_json(&sys), SYSTEM);
        match &k {
            None => {
                let o = major_arc_approximation(&sys, &alpha, &theta, &p, column_cap)?;
                rep.put("outcome", outcome_json(&o), OUTCOME);
            }
            Some(k) => {
                let cfg = DichotomyConfig { column_cap, g_tilde: None };
                let d = run_dichotomy(&sys, &alpha, &theta, &region, &p, k, &cfg)?;
                let mut o = d.outcome.as_ref().map(outcome_json).unwrap_or(Value::Null);
                if let Some(obj) = o.as_object_mut() {
                    obj.insert("abs_S".into(), json!(d.abs_s));
                }
                rep.put("outcome", o, OUTCOME);
                rep.put("dichotomy", dichotomy_json(&d), DICHOTOMY);
            }
        }
        Ok(())
    })
}

fn cmd_invariants(common: &Common, inv: &InvariantArgs) -> Outcome<Report> {
    let sys = load_system(common)?;
    let cfg = invariant_config(inv, common.seed)?;
    let mut config = base_config(common);
    config.insert("invariants".into(), invariant_config_json(&cfg));
    guarded(Report::new("invariants", config), |rep| {
        let r = check_hypotheses(&sys, &cfg)?;
        rep.put("system", system_json(&sys), SYSTEM);
        rep.put("invariants", invariants_json(&r), INVARIANTS);
        Ok(())
    })
}

fn prediction_json(rep: &mut Report, pr: &PredictionReport) {
    let rows: Vec<Value> = pr
        .rows
        .iter()
        .map(|r| json!({ "P": ratv(&r.p), "N": big(&r.count), "prediction": r.prediction, "ratio": r.ratio }))
        .collect();
    let s = &pr.series;
    let j = &pr.integral;
    rep.put("rows", Value::Array(rows), ROWS);
    rep.put(
        "singular_series",
        json!({
            "q_max": s.q_max,
            "value": s.value,
            "tail_estimate": s.tail_estimate,
            "max_imaginary": s.max_imaginary,
            "partial_sums": s.partial_sums.iter().map(|(q, v)| json!([q, v])).collect::<Vec<_>>(),
        }),
        SERIES,
    );
    rep.put(
        "singular_integral",
        json!({
            "t_max": j.t_max,
            "grid_resolution": j.grid_resolution,
            "outer_nodes": j.outer_nodes,
            "value": j.value,
            "imaginary": j.imaginary,
            "convergence_trace": j.convergence_trace.iter().map(|(t, v)| json!([t, v])).collect::<Vec<_>>(),
            "converged": j.converged,
            "max_cell_phase": j.max_cell_phase,
            "resolved": j.resolved,
            "factors": j.factors,
            "real_obstruction": j.real_obstruction,
        }),
        INTEGRAL,
    );
    rep.put("exponent", json!(pr.exponent), EXPONENT);
    rep.put("verdict", json!(pr.verdict.as_str()), VERDICT);
    rep.put(
        "hypothesis",
        json!({ "check": pr.hypothesis.as_ref().map(check_json), "note": pr.hypothesis_note }),
        HYPOTHESIS,
    );
}

fn cmd_predict(
    common: &Common,
    p: &[String],
    q_max: u64,
    t_max: &str,
    grid: usize,
    no_hypothesis: bool,
    inv: &InvariantArgs,
) -> Outcome<Report> {
    let sys = load_system(common)?;
    let region = load_region(common, sys.n_vars())?;
    let ps = parse_p_list(p)?;
    let t_max = rat_to_f64(&parse_exact_decimal(t_max)?);
    let hypothesis = if no_hypothesis { None } else { Some(invariant_config(inv, common.seed)?) };
    let mut config = base_config(common);
    config.insert("box".into(), json!(region.to_string()));
    config.insert("P".into(), Value::Array(ps.iter().map(ratv).collect()));
    config.insert("q_max".into(), json!(q_max));
    config.insert("t_max".into(), json!(t_max));
    config.insert("grid".into(), json!(grid));
    config.insert("invariants".into(), json!(hypothesis.as_ref().map(invariant_config_json)));
    let cfg = PredictConfig { q_max, t_max, grid, hypothesis };
    guarded(Report::new("predict", config), |rep| {
        let pr = predict_and_verify(&sys, &region, &ps, &cfg)?;
        if let Some(path) = &common.csv {
            write_prediction_csv(&pr, create_csv(path)?)?;
        }
        rep.put("system", system_json(&sys), SYSTEM);
        prediction_json(rep, &pr);
        Ok(())
    })
}

fn cmd_corpus(common: &Common) -> Outcome<Report> {
    if common.system.is_some() {
        return Err(bad("corpus takes no --system"));
    }
    guarded(Report::new("corpus", base_config(common)), |rep| {
        let fixtures = run_corpus()?;
        let failed = fixtures.iter().filter(|f| !f.passed).count();
        let list: Vec<Value> = fixtures
            .iter()
            .map(|f| json!({ "name": f.name, "expected": f.expected, "found": f.found, "passed": f.passed }))
            .collect();
        rep.put("fixtures", Value::Array(list), FIXTURES);
        rep.put("failed", json!(failed), FIXTURES);
        if failed > 0 {
            rep.status = Status::AssertionFailed;
        }
        Ok(())
    })
}
