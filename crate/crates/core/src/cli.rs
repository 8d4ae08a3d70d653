//! Command front end: reproducible runs with JSON reports.
//!
//! Exit code contract: 0 on pass/success, 2 when an axiom was falsified
//! (the report is still written), 1 on usage or configuration errors. The
//! falsification demos succeed by failing an axiom, so they exit 2.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::axioms::{self, ReportVerdict};
use crate::error::{Result, VnmError};
use crate::exhaustion::Exhaustion;
use crate::lottery::{DensityKind, DensityMeasure, SimpleLottery};
use crate::preference::{OracleSpec, PreferenceOracle, Verdict};
use crate::space::{Outcome, OutcomeSpace};
use crate::utility::{expectation, UtilityFunction, UtilitySpec};
use crate::weakstar::{
    converges, dudley_distance, escaping_mass_net, semicontinuity_net, TestFunctionFamily,
};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CONFIG_ERROR: i32 = 1;
pub const EXIT_FALSIFIED: i32 = 2;

/// Which axiom a `check` run exercises.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxiomName {
    WeakOrder,
    Independence,
    Segmental,
    Weakstar,
    Sequential,
    Mixture,
}

impl std::str::FromStr for AxiomName {
    type Err = VnmError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "weak-order" | "weak_order" => AxiomName::WeakOrder,
            "independence" => AxiomName::Independence,
            "segmental" | "segmental-continuity" => AxiomName::Segmental,
            "weakstar" | "closedness" | "weakstar-closedness" => AxiomName::Weakstar,
            "sequential" | "sequential-continuity" => AxiomName::Sequential,
            "mixture" | "mixture-laws" => AxiomName::Mixture,
            other => {
                return Err(VnmError::Config(format!(
                    "unknown axiom {other:?}; expected weak-order | independence | segmental \
                     | weakstar | sequential | mixture"
                )))
            }
        })
    }
}

/// A validated run configuration; unknown fields in JSON inputs are rejected
/// by the underlying spec types.
#[derive(Clone, Debug, Serialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum RunConfig {
    Calibrate {
        oracle: OracleSpec,
        grid: String,
        tol: f64,
        #[serde(skip_serializing_if = "Option::is_none")]
        out: Option<PathBuf>,
    },
    Check {
        oracle: OracleSpec,
        axiom: AxiomName,
        trials: u64,
        seed: u64,
        grid_n: u32,
        levels: u32,
        trivial_exhaustion: bool,
        sample_size: usize,
        #[serde(skip_serializing_if = "Option::is_none")]
        report: Option<PathBuf>,
    },
    DemoLemma5 {
        utility: UtilitySpec,
        xstar: f64,
        x0: f64,
        n: u32,
        #[serde(skip_serializing_if = "Option::is_none")]
        out: Option<PathBuf>,
    },
    DemoSemicontinuity {
        threshold: f64,
        eps: f64,
        steps: u32,
        #[serde(skip_serializing_if = "Option::is_none")]
        out: Option<PathBuf>,
    },
    DemoDensity {
        density: DensityKind,
        a: f64,
        b: f64,
        ks: Vec<u32>,
        #[serde(skip_serializing_if = "Option::is_none")]
        out: Option<PathBuf>,
    },
    Exhaust {
        utility: UtilitySpec,
        levels: u32,
        verify: bool,
        probes: u32,
        #[serde(skip_serializing_if = "Option::is_none")]
        out: Option<PathBuf>,
    },
}

impl RunConfig {
    fn out_path(&self) -> Option<&PathBuf> {
        match self {
            RunConfig::Calibrate { out, .. }
            | RunConfig::DemoLemma5 { out, .. }
            | RunConfig::DemoSemicontinuity { out, .. }
            | RunConfig::DemoDensity { out, .. }
            | RunConfig::Exhaust { out, .. } => out.as_ref(),
            RunConfig::Check { report, .. } => report.as_ref(),
        }
    }
}

/// Result of a run: the exit code and the full report value.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub report: serde_json::Value,
}

/// Parse the grid mini-language: `lin:N:[a,b]` or `log:N:[a,b]`.
pub fn parse_grid(spec: &str) -> Result<Vec<Outcome>> {
    let parts: Vec<&str> = spec.splitn(3, ':').collect();
    if parts.len() != 3 {
        return Err(VnmError::Parse(format!(
            "grid spec {spec:?} is not of the form lin:N:[a,b] or log:N:[a,b]"
        )));
    }
    let n: usize = parts[1]
        .parse()
        .map_err(|_| VnmError::Parse(format!("bad grid size {:?}", parts[1])))?;
    if n < 2 {
        return Err(VnmError::Parse("grid needs at least two points".into()));
    }
    let range = parts[2]
        .strip_prefix('[')
        .and_then(|s| s.strip_suffix(']'))
        .ok_or_else(|| VnmError::Parse(format!("bad grid range {:?}", parts[2])))?;
    let (a_str, b_str) = range
        .split_once(',')
        .ok_or_else(|| VnmError::Parse(format!("bad grid range {:?}", parts[2])))?;
    let a: f64 = a_str
        .trim()
        .parse()
        .map_err(|_| VnmError::Parse(format!("bad grid endpoint {a_str:?}")))?;
    let b: f64 = b_str
        .trim()
        .parse()
        .map_err(|_| VnmError::Parse(format!("bad grid endpoint {b_str:?}")))?;
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(VnmError::Parse(format!("empty grid range [{a}, {b}]")));
    }
    let mut points = Vec::with_capacity(n);
    match parts[0] {
        "lin" => {
            for i in 0..n {
                let x = a + (b - a) * i as f64 / (n - 1) as f64;
                points.push(Outcome::new(x)?);
            }
        }
        "log" => {
            if a <= 0.0 {
                return Err(VnmError::Parse(
                    "log grids need a strictly positive lower endpoint".into(),
                ));
            }
            let (la, lb) = (a.ln(), b.ln());
            for i in 0..n {
                let x = (la + (lb - la) * i as f64 / (n - 1) as f64).exp();
                points.push(Outcome::new(x)?);
            }
        }
        other => {
            return Err(VnmError::Parse(format!(
                "unknown grid kind {other:?}; expected lin or log"
            )))
        }
    }
    Ok(points)
}

/// Execute a run. Never panics; configuration problems come back as an
/// error report with exit code 1.
pub fn run(config: &RunConfig) -> RunOutcome {
    let started = chrono::Utc::now().to_rfc3339();
    let body = execute(config);
    let (status, exit_code, result) = match body {
        Ok((verdict, result)) => match verdict {
            ReportVerdict::Pass => ("pass", EXIT_PASS, result),
            ReportVerdict::Falsified => ("falsified", EXIT_FALSIFIED, result),
        },
        Err(e) => ("error", EXIT_CONFIG_ERROR, json!({ "error": e.to_string() })),
    };
    let report = json!({
        "version": crate::version(),
        "config": serde_json::to_value(config).unwrap_or(serde_json::Value::Null),
        "timestamp": started,
        "status": status,
        "result": result,
    });
    if let Some(path) = config.out_path() {
        if let Err(e) = std::fs::write(path, pretty(&report)) {
            return RunOutcome {
                exit_code: EXIT_CONFIG_ERROR,
                report: json!({
                    "version": crate::version(),
                    "status": "error",
                    "result": { "error": format!("cannot write report {path:?}: {e}") },
                }),
            };
        }
    }
    RunOutcome { exit_code, report }
}

/// Deterministic pretty JSON (serde_json object keys are sorted).
pub fn pretty(v: &serde_json::Value) -> String {
    serde_json::to_string_pretty(v).expect("report serializes") + "\n"
}

fn execute(config: &RunConfig) -> Result<(ReportVerdict, serde_json::Value)> {
    match config {
        RunConfig::Calibrate {
            oracle, grid, tol, ..
        } => run_calibrate(oracle, grid, *tol),
        RunConfig::Check {
            oracle,
            axiom,
            trials,
            seed,
            grid_n,
            levels,
            trivial_exhaustion,
            sample_size,
            ..
        } => run_check(
            oracle,
            *axiom,
            *trials,
            *seed,
            *grid_n,
            *levels,
            *trivial_exhaustion,
            *sample_size,
        ),
        RunConfig::DemoLemma5 {
            utility,
            xstar,
            x0,
            n,
            ..
        } => run_demo_escaping(utility, *xstar, *x0, *n),
        RunConfig::DemoSemicontinuity {
            threshold,
            eps,
            steps,
            ..
        } => run_demo_jump(*threshold, *eps, *steps),
        RunConfig::DemoDensity { density, a, b, ks, .. } => run_demo_density(*density, *a, *b, ks),
        RunConfig::Exhaust {
            utility,
            levels,
            verify,
            probes,
            ..
        } => run_exhaust(utility, *levels, *verify, *probes),
    }
}

fn run_calibrate(
    oracle: &OracleSpec,
    grid: &str,
    tol: f64,
) -> Result<(ReportVerdict, serde_json::Value)> {
    let o = oracle.build()?;
    let grid = parse_grid(grid)?;
    for x in &grid {
        if !o.scope().contains(x) {
            return Err(VnmError::Config(format!(
                "grid point {x} lies outside the oracle scope {}",
                o.scope()
            )));
        }
    }
    let result = crate::calibration::calibrate(&o, &grid, tol)?;
    let table = serde_json::to_value(&result).map_err(|e| VnmError::Parse(e.to_string()))?;
    Ok((
        ReportVerdict::Pass,
        json!({
            "oracle": o.label(),
            "tolerance": result.tolerance,
            "constant": result.is_constant(),
            "table": table,
        }),
    ))
}

#[allow(clippy::too_many_arguments)]
fn run_check(
    oracle: &OracleSpec,
    axiom: AxiomName,
    trials: u64,
    seed: u64,
    grid_n: u32,
    levels: u32,
    trivial_exhaustion: bool,
    sample_size: usize,
) -> Result<(ReportVerdict, serde_json::Value)> {
    let o = oracle.build()?;
    let report = match axiom {
        AxiomName::Mixture => axioms::check_mixture_laws(trials, seed)?,
        AxiomName::Independence => axioms::check_independence(&o, trials, seed)?,
        AxiomName::WeakOrder => {
            let sampler = axioms::generators::LotterySampler::for_space(o.scope());
            let sample: Vec<SimpleLottery> = (0..sample_size.max(1))
                .map(|i| sampler.sample_lottery(&mut axioms::generators::trial_rng(seed, i as u64)))
                .collect();
            axioms::check_weak_order(&o, &sample)?
        }
        AxiomName::Segmental => {
            let (p, q, r) = sample_strict_chain(&o, seed)?;
            axioms::check_segmental_continuity(&o, &p, &q, &r, grid_n)?
        }
        AxiomName::Weakstar => {
            let family = TestFunctionFamily::default_for(o.scope());
            axioms::falsify_weakstar_closedness(&o, trials, &family, seed)?
        }
        AxiomName::Sequential => {
            let family = TestFunctionFamily::default_for(o.scope());
            let exh = if trivial_exhaustion {
                Exhaustion::trivial(*o.scope(), levels.max(1) as usize)?
            } else {
                match o.utility_hint() {
                    Some(u) if Exhaustion::utility_bands(u, levels).is_ok() => {
                        Exhaustion::utility_bands(u, levels)?
                    }
                    _ => Exhaustion::trivial(*o.scope(), levels.max(1) as usize)?,
                }
            };
            axioms::check_sequential_continuity(&o, &exh, trials, &family, seed)?
        }
    };
    let verdict = report.verdict;
    let value = serde_json::to_value(&report).map_err(|e| VnmError::Parse(e.to_string()))?;
    Ok((verdict, value))
}

/// Draw lotteries until a strict chain P > Q > R appears.
fn sample_strict_chain(
    o: &PreferenceOracle,
    seed: u64,
) -> Result<(SimpleLottery, SimpleLottery, SimpleLottery)> {
    let sampler = axioms::generators::LotterySampler::for_space(o.scope());
    for attempt in 0..256u64 {
        let mut rng = axioms::generators::trial_rng(seed, attempt);
        let mut trio: Vec<SimpleLottery> =
            (0..3).map(|_| sampler.sample_lottery(&mut rng)).collect();
        // order the three by pairwise comparison
        trio.sort_by(|a, b| match o.compare(a, b) {
            Ok(Verdict::FirstStrict) => std::cmp::Ordering::Less,
            Ok(Verdict::SecondStrict) => std::cmp::Ordering::Greater,
            _ => std::cmp::Ordering::Equal,
        });
        let (p, q, r) = (trio.remove(0), trio.remove(0), trio.remove(0));
        if o.compare(&p, &q)? == Verdict::FirstStrict && o.compare(&q, &r)? == Verdict::FirstStrict
        {
            return Ok((p, q, r));
        }
    }
    Err(VnmError::Budget(
        "could not sample a strict three-chain for the segmental check".into(),
    ))
}

fn run_demo_escaping(
    utility: &UtilitySpec,
    xstar: f64,
    x0: f64,
    n_max: u32,
) -> Result<(ReportVerdict, serde_json::Value)> {
    let u = utility.build()?;
    let x_star = u.domain().outcome(xstar)?;
    let x0 = u.domain().outcome(x0)?;
    let family = TestFunctionFamily::default_for(u.domain());
    let o = PreferenceOracle::from_utility(u.clone());
    let limit = SimpleLottery::dirac(x_star);
    let reference = SimpleLottery::dirac(x0);

    let mut rows = Vec::with_capacity(n_max as usize + 1);
    let mut seq = Vec::with_capacity(n_max as usize + 1);
    let mut all_preferred = true;
    for n in 0..=n_max {
        let p = escaping_mass_net(&u, x_star, x0, n)?;
        let e_u = expectation(&p, &u)?;
        let score = dudley_distance(&p, &limit, &family);
        let beats_reference = o.compare(&p, &reference)? == Verdict::FirstStrict;
        all_preferred &= beats_reference;
        rows.push(json!({
            "n": n,
            "lottery": serde_json::to_value(&p).map_err(|e| VnmError::Parse(e.to_string()))?,
            "e_u": e_u,
            "dudley_to_limit": score,
            "beats_reference": beats_reference,
        }));
        seq.push(p);
    }
    let conv = converges(&seq, &limit, &family, 1e-2, 5.min(seq.len()))?;
    let limit_verdict = o.compare(&limit, &reference)?;
    // the witness: every net element beats the reference, the net converges
    // to the anchor, yet the reference strictly beats the anchor
    let falsified =
        all_preferred && conv.converged && limit_verdict == Verdict::SecondStrict;
    Ok((
        if falsified {
            ReportVerdict::Falsified
        } else {
            ReportVerdict::Pass
        },
        json!({
            "utility": u.label(),
            "x_star": x_star,
            "x0": x0,
            "net": rows,
            "convergence": conv,
            "limit_verdict": limit_verdict,
            "closedness_witness": falsified,
        }),
    ))
}

fn run_demo_jump(
    threshold: f64,
    eps: f64,
    steps: u32,
) -> Result<(ReportVerdict, serde_json::Value)> {
    let u = UtilityFunction::step(threshold, 0.0, 1.0)?;
    let net = semicontinuity_net(&u, eps, steps)?;
    let o = PreferenceOracle::from_utility(u.clone());
    let family = TestFunctionFamily::default_for(u.domain());
    let limit = SimpleLottery::dirac(net.jump_at);
    let seq: Vec<SimpleLottery> = net.points.iter().map(|x| SimpleLottery::dirac(*x)).collect();

    let mut all_preferred = true;
    for p in &seq {
        all_preferred &= o.compare(p, &net.blend)? == Verdict::FirstStrict;
    }
    let blend_beats_jump = o.compare(&net.blend, &limit)? == Verdict::FirstStrict;
    let conv = converges(&seq, &limit, &family, 1e-2, 5.min(seq.len()))?;
    let falsified = all_preferred && blend_beats_jump && conv.converged;
    Ok((
        if falsified {
            ReportVerdict::Falsified
        } else {
            ReportVerdict::Pass
        },
        json!({
            "utility": u.label(),
            "jump_at": net.jump_at,
            "eps": net.eps,
            "blend_weight": net.t.to_string(),
            "blend": serde_json::to_value(&net.blend).map_err(|e| VnmError::Parse(e.to_string()))?,
            "steps": steps,
            "points_prefer_blend": all_preferred,
            "blend_beats_jump": blend_beats_jump,
            "convergence_scores_tail": conv.scores[conv.scores.len().saturating_sub(5)..],
            "converged": conv.converged,
            "closedness_witness": falsified,
        }),
    ))
}

fn run_demo_density(
    kind: DensityKind,
    a: f64,
    b: f64,
    ks: &[u32],
) -> Result<(ReportVerdict, serde_json::Value)> {
    let space = OutcomeSpace::real_line();
    let m = DensityMeasure::new(&space, a, b, kind, crate::lottery::DEFAULT_QUADRATURE_NODES)?;
    let family = TestFunctionFamily::default_for(&space);
    let mut rows = Vec::new();
    for &k in ks {
        let d = m.discretize(k)?;
        let score = dudley_distance(&m, &d, &family);
        let bound = family.lipschitz() / (2.0 * k as f64);
        rows.push(json!({
            "k": k,
            "dudley_to_density": score,
            "transport_bound": bound,
            "within_bound": score <= bound,
        }));
    }
    Ok((
        ReportVerdict::Pass,
        json!({
            "density": kind.name(),
            "carrier": [a, b],
            "rows": rows,
        }),
    ))
}

fn run_exhaust(
    utility: &UtilitySpec,
    levels: u32,
    verify: bool,
    probes: u32,
) -> Result<(ReportVerdict, serde_json::Value)> {
    let u = utility.build()?;
    let exh = Exhaustion::utility_bands(&u, levels)?;
    let mut result = json!({
        "utility": u.label(),
        "levels": levels + 1,
    });
    let mut verdict = ReportVerdict::Pass;
    if verify {
        let probe_points = probe_grid(&u, &exh, probes)?;
        let rep = exh.verify(u.domain(), &probe_points);
        if !rep.passed {
            verdict = ReportVerdict::Falsified;
        }
        result["verification"] =
            serde_json::to_value(&rep).map_err(|e| VnmError::Parse(e.to_string()))?;
    }
    Ok((verdict, result))
}

/// Probe points spanning the widest level, spaced like the utility's scale.
fn probe_grid(u: &UtilityFunction, exh: &Exhaustion, n: u32) -> Result<Vec<Outcome>> {
    let n = n.max(2) as usize;
    let top = exh
        .level_as_space(exh.len() - 1)?
        .unwrap_or(*u.domain());
    let lo = if top.lower().is_finite() {
        top.lower()
    } else {
        -1e6
    };
    let hi = if top.upper().is_finite() {
        top.upper()
    } else {
        1e6
    };
    let inset = (hi - lo) * 1e-9;
    let (lo, hi) = (
        if top.lower_closed() { lo } else { lo + inset },
        if top.upper_closed() { hi } else { hi - inset },
    );
    let mut points = Vec::with_capacity(n);
    if lo > 0.0 {
        let (la, lb) = (lo.ln(), hi.ln());
        for i in 0..n {
            points.push(Outcome::new(
                (la + (lb - la) * i as f64 / (n - 1) as f64).exp(),
            )?);
        }
    } else {
        for i in 0..n {
            points.push(Outcome::new(lo + (hi - lo) * i as f64 / (n - 1) as f64)?);
        }
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_language_round_trips() {
        let g = parse_grid("lin:3:[0,1]").unwrap();
        assert_eq!(g.len(), 3);
        assert_eq!(g[1], Outcome::new(0.5).unwrap());
        let g = parse_grid("log:50:[0.1,10]").unwrap();
        assert_eq!(g.len(), 50);
        assert!(g[0].value() > 0.0999 && g[0].value() < 0.1001);
        assert!(parse_grid("geo:3:[0,1]").is_err());
        assert!(parse_grid("log:3:[-1,1]").is_err());
        assert!(parse_grid("lin:1:[0,1]").is_err());
    }

    #[test]
    fn independence_check_run_passes_for_log() {
        let config = RunConfig::Check {
            oracle: serde_json::from_str(r#"{"utility":"log"}"#).unwrap(),
            axiom: AxiomName::Independence,
            trials: 200,
            seed: 7,
            grid_n: 100,
            levels: 4,
            trivial_exhaustion: false,
            sample_size: 10,
            report: None,
        };
        let out = run(&config);
        assert_eq!(out.exit_code, EXIT_PASS, "{}", pretty(&out.report));
        assert_eq!(out.report["status"], "pass");
        assert_eq!(out.report["config"]["command"], "check");
        assert!(out.report["version"].is_string());
    }

    #[test]
    fn escaping_demo_exits_falsified() {
        let config = RunConfig::DemoLemma5 {
            utility: UtilitySpec::named("log"),
            xstar: 1.0,
            x0: std::f64::consts::E,
            n: 12,
            out: None,
        };
        let out = run(&config);
        assert_eq!(out.exit_code, EXIT_FALSIFIED, "{}", pretty(&out.report));
        assert_eq!(out.report["status"], "falsified");
    }

    #[test]
    fn bad_config_exits_one() {
        let config = RunConfig::Calibrate {
            oracle: serde_json::from_str(r#"{"utility":"log"}"#).unwrap(),
            grid: "lin:10:[-1,1]".into(),
            tol: 1e-10,
            out: None,
        };
        let out = run(&config);
        assert_eq!(out.exit_code, EXIT_CONFIG_ERROR);
        assert_eq!(out.report["status"], "error");
    }

    #[test]
    fn same_seed_gives_identical_reports_modulo_timestamp() {
        let config = RunConfig::Check {
            oracle: serde_json::from_str(r#"{"oracle":"rdu","utility":"linear","gamma":2.0}"#)
                .unwrap(),
            axiom: AxiomName::Independence,
            trials: 300,
            seed: 11,
            grid_n: 100,
            levels: 4,
            trivial_exhaustion: false,
            sample_size: 10,
            report: None,
        };
        let mut a = run(&config).report;
        let mut b = run(&config).report;
        a["timestamp"] = serde_json::Value::Null;
        b["timestamp"] = serde_json::Value::Null;
        assert_eq!(pretty(&a), pretty(&b));
    }
}
