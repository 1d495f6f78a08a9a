//! Experiment configuration, the commands behind the CLI, and their
//! JSON / CSV reports.
//!
//! Every check compares two binary values; rounding to 12 significant
//! digits happens only when the report is built for output. Reports carry
//! no timestamp, so the same configuration and seed give byte-identical
//! output for any worker count.

use std::collections::BTreeMap;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigenvalues, DenseOperator};
use crate::minerr::{
    build_delta, delta_spectrum_closed_form, global_povm, lambda_pm, locc_povm, mean_success,
    minerr_locc_protocol, pmax_eigen_route, pmax_global, positive_trace, Priors,
};
use crate::povm::Label;
use crate::simulate::{run_batch, BatchStats, TrialSpec};
use crate::symmetry::{check_dim_relation, dimension_table, toolkit};
use crate::unambiguous::{
    beta_feasibility, direct_trace_e1_s01, global_unamb_povm, max_wrong_acceptance,
    pmax_unamb_global, pmax_unamb_locc, separable_trace_formula, separable_unamb_povm,
    unamb_locc_protocol, unamb_success, x_operator_max_eigenvalue, SeparableCoeffs, UnambPovm,
    NO_ERROR_TOL,
};

/// Standard deviations allowed between a Monte Carlo estimate and its target.
pub const MC_SIGMAS: f64 = 4.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Dims,
    Minerr,
    Unamb,
    VerifyAll,
}

/// Parsed command line. `workers` only affects scheduling and is left out
/// of the report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub command: Command,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d_a: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d_b: Option<usize>,
    pub eta1: f64,
    pub locc: bool,
    pub simulate: bool,
    pub n_trials: u64,
    pub seed: u64,
    pub baseline: bool,
    pub bob_first: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inject_alpha: Option<f64>,
    #[serde(skip)]
    pub workers: usize,
}

impl ExperimentConfig {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            d: None,
            d_a: None,
            d_b: None,
            eta1: 0.5,
            locc: false,
            simulate: false,
            n_trials: 100_000,
            seed: 7,
            baseline: false,
            bob_first: false,
            inject_alpha: None,
            workers: 1,
        }
    }

    /// `Some((d_a, d_b))` when a bipartite split was given.
    pub fn split(&self) -> Result<Option<(usize, usize)>> {
        match (self.d_a, self.d_b) {
            (Some(a), Some(b)) => {
                if a == 0 || b == 0 || (a < 2 && b < 2) {
                    return Err(Error::InvalidDimension(a.min(b)));
                }
                if let Some(d) = self.d {
                    if d != a * b {
                        return Err(Error::InvalidLayout(format!(
                            "d = {d} but d_a d_b = {}",
                            a * b
                        )));
                    }
                }
                Ok(Some((a, b)))
            }
            (None, None) => Ok(None),
            _ => Err(Error::InvalidLayout("give both --da and --db".into())),
        }
    }

    /// Joint local dimension.
    pub fn joint_d(&self) -> Result<usize> {
        let d = match (self.d, self.split()?) {
            (_, Some((a, b))) => a * b,
            (Some(d), None) => d,
            (None, None) => return Err(Error::InvalidLayout("give --d or --da/--db".into())),
        };
        if d < 2 {
            return Err(Error::InvalidDimension(d));
        }
        Ok(d)
    }

    pub fn priors(&self) -> Result<Priors> {
        Priors::from_eta1(self.eta1)
    }
}

/// True for errors caused by the configuration rather than a failed check.
pub fn is_usage_error(e: &Error) -> bool {
    matches!(
        e,
        Error::InvalidDimension(_) | Error::InvalidPriors { .. } | Error::InvalidLayout(_)
    )
}

fn sig12<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(round_sig(*x))
}

fn sig12_map<S: Serializer>(
    m: &BTreeMap<String, f64>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.collect_map(m.iter().map(|(k, v)| (k, round_sig(*v))))
}

/// Rounds to 12 significant digits.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Relation {
    /// `|analytic - oracle| <= tolerance`
    Eq,
    /// `analytic <= oracle + tolerance`
    Le,
    /// `analytic >= oracle - tolerance`
    Ge,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub relation: Relation,
    #[serde(serialize_with = "sig12")]
    pub analytic: f64,
    #[serde(serialize_with = "sig12")]
    pub oracle: f64,
    #[serde(serialize_with = "sig12")]
    pub diff: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Check {
    pub fn new(
        name: impl Into<String>,
        relation: Relation,
        analytic: f64,
        oracle: f64,
        tolerance: f64,
    ) -> Self {
        let diff = (analytic - oracle).abs();
        let pass = match relation {
            Relation::Eq => diff <= tolerance,
            Relation::Le => analytic <= oracle + tolerance,
            Relation::Ge => analytic >= oracle - tolerance,
        };
        Self {
            name: name.into(),
            relation,
            analytic,
            oracle,
            diff,
            tolerance,
            pass,
            note: None,
        }
    }

    pub fn eq(name: impl Into<String>, analytic: f64, oracle: f64, tolerance: f64) -> Self {
        Self::new(name, Relation::Eq, analytic, oracle, tolerance)
    }

    /// A check that could not be evaluated.
    pub fn failed(name: impl Into<String>, err: &Error) -> Self {
        let (value, bound) = match err {
            Error::Infeasible { value, bound, .. } => (*value, *bound),
            _ => (f64::NAN, f64::NAN),
        };
        let mut c = Self::new(name, Relation::Le, value, bound, 0.0);
        c.pass = false;
        c.note = Some(err.to_string());
        c
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonteCarlo {
    pub scheme: String,
    pub seed: u64,
    #[serde(serialize_with = "sig12")]
    pub target: f64,
    pub n_trials: u64,
    pub successes: u64,
    pub errors: u64,
    pub inconclusive: u64,
    #[serde(serialize_with = "sig12")]
    pub p_hat: f64,
    #[serde(serialize_with = "sig12")]
    pub std_error: f64,
    #[serde(serialize_with = "sig12")]
    pub z: f64,
}

impl MonteCarlo {
    fn new(scheme: String, seed: u64, target: f64, s: &BatchStats) -> Self {
        let sigma = s.sigma_at(target);
        let z = if sigma > 0.0 {
            (s.p_hat - target) / sigma
        } else if s.p_hat == target {
            0.0
        } else {
            f64::INFINITY
        };
        Self {
            scheme,
            seed,
            target,
            n_trials: s.n_trials,
            successes: s.successes,
            errors: s.errors,
            inconclusive: s.inconclusive,
            p_hat: s.p_hat,
            std_error: s.std_error,
            z,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub config: ExperimentConfig,
    #[serde(serialize_with = "sig12_map")]
    pub values: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub monte_carlo: Option<MonteCarlo>,
    pub pass: bool,
}

impl Report {
    fn new(config: &ExperimentConfig) -> Self {
        Self {
            config: config.clone(),
            values: BTreeMap::new(),
            checks: Vec::new(),
            monte_carlo: None,
            pass: true,
        }
    }

    fn value(&mut self, key: impl Into<String>, v: f64) {
        self.values.insert(key.into(), v);
    }

    fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    /// Records `c`, or a failed check named `name` if it could not be computed.
    fn try_check(&mut self, name: &str, c: Result<Check>) {
        match c {
            Ok(c) => self.check(c),
            Err(e) => self.check(Check::failed(name, &e)),
        }
    }

    fn finish(mut self) -> Self {
        self.pass = self.checks.iter().all(|c| c.pass);
        self
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    /// One row per check.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "name",
            "relation",
            "analytic",
            "oracle",
            "diff",
            "tolerance",
            "pass",
        ])
        .map_err(|e| Error::Io(e.to_string()))?;
        for c in &self.checks {
            let rel = match c.relation {
                Relation::Eq => "eq",
                Relation::Le => "le",
                Relation::Ge => "ge",
            };
            w.write_record([
                c.name.clone(),
                rel.to_string(),
                round_sig(c.analytic).to_string(),
                round_sig(c.oracle).to_string(),
                round_sig(c.diff).to_string(),
                c.tolerance.to_string(),
                c.pass.to_string(),
            ])
            .map_err(|e| Error::Io(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
    }

    /// Short human-readable summary.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.values {
            out += &format!("{k:<28} {}\n", round_sig(*v));
        }
        if let Some(mc) = &self.monte_carlo {
            out += &format!(
                "monte carlo {}: n={} p_hat={} stderr={} target={} z={:.2} errors={} inconclusive={}\n",
                mc.scheme,
                mc.n_trials,
                round_sig(mc.p_hat),
                round_sig(mc.std_error),
                round_sig(mc.target),
                mc.z,
                mc.errors,
                mc.inconclusive
            );
        }
        let failed = self.checks.iter().filter(|c| !c.pass).count();
        for c in self.checks.iter().filter(|c| !c.pass) {
            out += &format!(
                "FAIL {}: analytic={} oracle={} diff={:.3e}",
                c.name, c.analytic, c.oracle, c.diff
            );
            if let Some(n) = &c.note {
                out += &format!(" ({n})");
            }
            out += "\n";
        }
        out += &format!(
            "{} checks, {} failed: {}\n",
            self.checks.len(),
            failed,
            if self.pass { "PASS" } else { "FAIL" }
        );
        out
    }
}

pub fn run(config: &ExperimentConfig) -> Result<Report> {
    match config.command {
        Command::Dims => cmd_dims(config),
        Command::Minerr => cmd_minerr(config),
        Command::Unamb => cmd_unamb(config),
        Command::VerifyAll => cmd_verify_all(config),
    }
}

pub fn cmd_dims(config: &ExperimentConfig) -> Result<Report> {
    let mut r = Report::new(config);
    let d = config.joint_d()?;
    let t = dimension_table(d as u64);
    for (k, v) in [
        ("d1", t.d1),
        ("d2", t.d2),
        ("d3", t.d3),
        ("dim_vs", t.dim_vs),
        ("dim_va", t.dim_va),
        ("dim_vm", t.dim_vm),
    ] {
        r.value(k, v as f64);
    }
    r.check(Check::eq("dim_vs = d3", t.dim_vs as f64, t.d3 as f64, 0.0));
    r.check(Check::eq(
        "dim_vs + dim_va + dim_vm = d^3",
        (t.dim_vs + t.dim_va + t.dim_vm) as f64,
        (d as f64).powi(3),
        0.0,
    ));
    if let Some((a, b)) = config.split()? {
        let rel = check_dim_relation(a as u64, b as u64);
        r.value("split_lhs", rel.lhs as f64);
        r.value("split_rhs", rel.rhs as f64);
        r.value("split_residual", rel.residual as f64);
        r.check(Check::eq(
            "split dimension identity",
            rel.lhs as f64,
            rel.rhs as f64,
            0.0,
        ));
    }
    Ok(r.finish())
}

fn mc_check(r: &mut Report, name: &str, mc: MonteCarlo) {
    r.check(Check::new(
        format!("{name}: |z| <= {MC_SIGMAS}"),
        Relation::Le,
        mc.z.abs(),
        MC_SIGMAS,
        0.0,
    ));
    r.monte_carlo = Some(mc);
}

pub fn cmd_minerr(config: &ExperimentConfig) -> Result<Report> {
    let mut r = Report::new(config);
    let d = config.joint_d()?;
    let split = config.split()?;
    let priors = config.priors()?;
    if config.locc && split.is_none() {
        return Err(Error::InvalidLayout("--locc needs --da and --db".into()));
    }
    let p_max = pmax_global(d as u64, priors);
    let (lp, lm) = lambda_pm(priors);
    r.value("p_max", p_max);
    r.value("lambda_plus", lp);
    r.value("lambda_minus", lm);
    r.value("d1", d as f64);
    r.value("d2", dimension_table(d as u64).d2 as f64);
    if config.baseline {
        r.value("baseline_no_copies", priors.eta1.max(priors.eta2));
    }
    r.try_check(
        "p_max closed form vs eigenvalues",
        pmax_eigen_route(d, priors)
            .map(|o| Check::eq("p_max closed form vs eigenvalues", p_max, o, 1e-9)),
    );

    if let (true, Some((a, b))) = (config.locc, split) {
        let povm = locc_povm(a, b, priors)?;
        let e1 = povm.element("1").expect("labeled POVM").clone();
        let delta = build_delta(d, priors)?;
        let tr_locc = e1.trace_product(&delta).re;
        let tr_global = positive_trace(d, priors)?;
        r.value("trace_e1_locc_delta", tr_locc);
        r.value("trace_p_plus_delta", tr_global);
        r.check(Check::eq(
            "tr[E1_L Delta] vs tr[P+ Delta]",
            tr_locc,
            tr_global,
            1e-9,
        ));
        let p_locc = mean_success(&povm, d, priors)?;
        r.value("p_max_locc", p_locc);
        r.check(Check::eq("LOCC success vs p_max", p_locc, p_max, 1e-9));
    }

    if config.simulate {
        let (scheme, spec) = match (config.locc, split) {
            (true, Some((a, b))) => {
                let p = minerr_locc_protocol(a, b, priors)?;
                (p.name().to_string(), TrialSpec::locc(p, priors)?)
            }
            _ => (
                format!("minerr-global(d={d})"),
                TrialSpec::global(global_povm(d, priors)?, d, priors)?,
            ),
        };
        let stats = run_batch(&spec, config.n_trials, config.seed, config.workers)?;
        mc_check(
            &mut r,
            "monte carlo",
            MonteCarlo::new(scheme, config.seed, p_max, &stats),
        );
    }
    Ok(r.finish())
}

fn unamb_povm_checks(r: &mut Report, tag: &str, p: &UnambPovm, target: f64) -> Result<()> {
    r.check(Check::eq(
        format!("{tag} completeness"),
        p.completeness_defect(),
        0.0,
        1e-10,
    ));
    let (n1, n2) = p.no_error_defects()?;
    r.check(Check::new(
        format!("{tag} ||E1 S(02)||"),
        Relation::Le,
        n1,
        0.0,
        NO_ERROR_TOL,
    ));
    r.check(Check::new(
        format!("{tag} ||E2 S(01)||"),
        Relation::Le,
        n2,
        0.0,
        NO_ERROR_TOL,
    ));
    r.check(Check::new(
        format!("{tag} exchange symmetry"),
        Relation::Le,
        p.exchange_defect()?,
        0.0,
        NO_ERROR_TOL,
    ));
    r.check(Check::new(
        format!("{tag} min eigenvalue"),
        Relation::Ge,
        p.min_eigenvalue()?,
        0.0,
        1e-10,
    ));
    r.try_check(
        &format!("{tag} success"),
        unamb_success(p).map(|s| Check::eq(format!("{tag} success"), s, target, 1e-10)),
    );
    Ok(())
}

fn separable_coeffs(config: &ExperimentConfig) -> SeparableCoeffs {
    let mut c = SeparableCoeffs::optimal();
    if let Some(a) = config.inject_alpha {
        c.alpha[0] = a;
    }
    c
}

fn separable_checks(
    r: &mut Report,
    a: usize,
    b: usize,
    coeffs: SeparableCoeffs,
) -> Result<Option<UnambPovm>> {
    let tag = format!("separable({a},{b})");
    let sep = match separable_unamb_povm(a, b, coeffs) {
        Ok(p) => p,
        Err(e @ Error::Infeasible { .. }) => {
            r.check(Check::failed(format!("{tag} feasibility"), &e));
            return Ok(None);
        }
        Err(e) => return Err(e),
    };
    let target = pmax_unamb_locc(a as u64, b as u64);
    unamb_povm_checks(r, &tag, &sep, target)?;
    let direct = direct_trace_e1_s01(&sep)?;
    r.check(Check::eq(
        format!("{tag} trace formula"),
        separable_trace_formula(a as u64, b as u64, &coeffs),
        direct,
        1e-8,
    ));
    Ok(Some(sep))
}

pub fn cmd_unamb(config: &ExperimentConfig) -> Result<Report> {
    let mut r = Report::new(config);
    let d = config.joint_d()?;
    let split = config.split()?;
    let p_global = pmax_unamb_global(d as u64);
    r.value("p_max", p_global);
    if config.baseline {
        r.value("baseline_no_copies", 0.0);
    }
    let global = global_unamb_povm(d)?;
    unamb_povm_checks(&mut r, &format!("global(d={d})"), &global, p_global)?;

    let full_split = split.filter(|&(a, b)| a >= 2 && b >= 2);
    if let Some((a, b)) = full_split {
        let p_locc = pmax_unamb_locc(a as u64, b as u64);
        r.value("p_max_locc", p_locc);
        r.value("gap", p_global - p_locc);
        r.check(Check::new(
            "gap > 1e-3",
            Relation::Ge,
            p_global - p_locc,
            1e-3,
            0.0,
        ));
        let f = beta_feasibility(0.5, 0.5);
        r.value("gamma_plus", f.gamma_plus);
        r.try_check(
            "gamma+ closed form vs X eigenvalue",
            x_operator_max_eigenvalue(a, b, 0.5, 0.5)
                .map(|x| Check::eq("gamma+ closed form vs X eigenvalue", f.gamma_plus, x, 1e-9)),
        );
        let coeffs = separable_coeffs(config);
        if let Some(sep) = separable_checks(&mut r, a, b, coeffs)? {
            let flat = unamb_locc_protocol(a, b, config.bob_first)?.flatten()?;
            let worst = [Label::First, Label::Second, Label::Inconclusive]
                .into_iter()
                .map(|l| flat.get(l).max_abs_diff(sep.element(l)))
                .fold(0.0, f64::max);
            r.check(Check::new(
                "protocol flattens to separable POVM",
                Relation::Le,
                worst,
                0.0,
                1e-9,
            ));
        }
    }

    if config.simulate {
        let priors = Priors::equal();
        let (scheme, spec, target) = match full_split {
            Some((a, b)) => {
                let p = unamb_locc_protocol(a, b, config.bob_first)?;
                (
                    p.name().to_string(),
                    TrialSpec::locc(p, priors)?,
                    pmax_unamb_locc(a as u64, b as u64),
                )
            }
            None => (
                format!("unamb-global(d={d})"),
                TrialSpec::global(global.to_povm()?, d, priors)?,
                p_global,
            ),
        };
        let stats = run_batch(&spec, config.n_trials, config.seed, config.workers)?;
        r.check(Check::new(
            "monte carlo error count",
            Relation::Le,
            stats.errors as f64,
            0.0,
            0.0,
        ));
        mc_check(
            &mut r,
            "monte carlo",
            MonteCarlo::new(scheme, config.seed, target, &stats),
        );
    }
    Ok(r.finish())
}

const ETA_GRID: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];
const SPLIT_GRID: [(usize, usize); 3] = [(2, 2), (2, 3), (3, 3)];

fn toolkit_checks(r: &mut Report, d: usize) -> Result<()> {
    let t = toolkit(d)?;
    let n = t.dim();
    let id = DenseOperator::identity(n);
    let dd = &t.d_op * &t.d_op;
    let aa = &t.a_op * &t.a_op;
    let da = &(&t.d_op * &t.a_op) + &(&t.a_op * &t.d_op);
    r.check(Check::eq(
        format!("d={d} D^2 = 3/4 M3"),
        dd.max_abs_diff(&t.m3.scale(0.75)),
        0.0,
        1e-9,
    ));
    r.check(Check::eq(
        format!("d={d} DA + AD = 0"),
        da.max_abs(),
        0.0,
        1e-9,
    ));
    r.check(Check::eq(
        format!("d={d} A^2 = 1 - D^2"),
        aa.max_abs_diff(&(&id - &dd)),
        0.0,
        1e-9,
    ));
    let sum = &(&t.s3 + &t.a3) + &t.m3;
    r.check(Check::eq(
        format!("d={d} S3 + A3 + M3 = 1"),
        sum.max_abs_diff(&id),
        0.0,
        1e-12,
    ));
    let priors = Priors::from_eta1(0.3)?;
    let numeric = hermitian_eigenvalues(&build_delta(d, priors)?)?;
    let closed = delta_spectrum_closed_form(d as u64, priors);
    let worst = numeric
        .iter()
        .zip(&closed)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    r.check(Check::eq(format!("d={d} Delta spectrum"), worst, 0.0, 1e-9));
    Ok(())
}

/// The full invariant suite over the standard grid.
pub fn cmd_verify_all(config: &ExperimentConfig) -> Result<Report> {
    let mut r = Report::new(config);
    for d in 2..=6 {
        toolkit_checks(&mut r, d)?;
    }
    for a in 2..=5u64 {
        for b in 2..=5u64 {
            let rel = check_dim_relation(a, b);
            r.check(Check::eq(
                format!("split identity ({a},{b})"),
                rel.lhs as f64,
                rel.rhs as f64,
                0.0,
            ));
        }
    }
    for d in 2..=6usize {
        for eta in ETA_GRID {
            let priors = Priors::from_eta1(eta)?;
            let name = format!("p_max d={d} eta1={eta}");
            r.try_check(
                &name,
                pmax_eigen_route(d, priors)
                    .map(|o| Check::eq(&name, pmax_global(d as u64, priors), o, 1e-9)),
            );
        }
    }
    for (a, b) in SPLIT_GRID {
        let d = a * b;
        for eta in [0.1, 0.3, 0.5] {
            let priors = Priors::from_eta1(eta)?;
            let povm = locc_povm(a, b, priors)?;
            let delta = build_delta(d, priors)?;
            let tr_locc = povm
                .element("1")
                .expect("labeled POVM")
                .trace_product(&delta)
                .re;
            r.check(Check::eq(
                format!("LOCC trace ({a},{b}) eta1={eta}"),
                tr_locc,
                positive_trace(d, priors)?,
                1e-9,
            ));
        }
    }
    for d in 2..=6 {
        let g = global_unamb_povm(d)?;
        unamb_povm_checks(
            &mut r,
            &format!("global(d={d})"),
            &g,
            pmax_unamb_global(d as u64),
        )?;
        if d <= 4 {
            r.check(Check::new(
                format!("global(d={d}) wrong-label acceptance"),
                Relation::Le,
                max_wrong_acceptance(&g, 1000, config.seed),
                0.0,
                1e-10,
            ));
        }
    }
    for (i, (a, b)) in SPLIT_GRID.into_iter().enumerate() {
        // a fault injected through the config affects the first split only
        let coeffs = if i == 0 {
            separable_coeffs(config)
        } else {
            SeparableCoeffs::optimal()
        };
        if let Some(sep) = separable_checks(&mut r, a, b, coeffs)? {
            if a * b <= 6 {
                let flat = unamb_locc_protocol(a, b, false)?.flatten()?;
                let worst = [Label::First, Label::Second, Label::Inconclusive]
                    .into_iter()
                    .map(|l| flat.get(l).max_abs_diff(sep.element(l)))
                    .fold(0.0, f64::max);
                r.check(Check::new(
                    format!("protocol ({a},{b}) flattens"),
                    Relation::Le,
                    worst,
                    0.0,
                    1e-9,
                ));
                r.check(Check::new(
                    format!("separable({a},{b}) wrong-label acceptance"),
                    Relation::Le,
                    max_wrong_acceptance(&sep, 1000, config.seed),
                    0.0,
                    1e-10,
                ));
            }
        }
    }
    for a in 2..=5u64 {
        for b in 2..=5u64 {
            let gap = pmax_unamb_global(a * b) - pmax_unamb_locc(a, b);
            r.check(Check::new(
                format!("gap ({a},{b}) > 1e-3"),
                Relation::Ge,
                gap,
                1e-3,
                0.0,
            ));
        }
    }
    Ok(r.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(command: Command) -> ExperimentConfig {
        ExperimentConfig::new(command)
    }

    #[test]
    fn rounding() {
        assert_eq!(round_sig(0.123456789012345), 0.123456789012);
        assert_eq!(round_sig(0.0), 0.0);
        assert!(round_sig(f64::NAN).is_nan());
    }

    #[test]
    fn dims_report() {
        let mut c = cfg(Command::Dims);
        c.d = Some(3);
        let r = cmd_dims(&c).unwrap();
        assert!(r.pass);
        assert_eq!(r.values["dim_vs"], 10.0);
        assert_eq!(r.values["dim_va"], 1.0);
        assert_eq!(r.values["dim_vm"], 16.0);
        let mut c = cfg(Command::Dims);
        c.d_a = Some(2);
        c.d_b = Some(2);
        let r = cmd_dims(&c).unwrap();
        assert_eq!(r.values["split_residual"], 0.0);
    }

    #[test]
    fn usage_errors() {
        let mut c = cfg(Command::Dims);
        c.d = Some(1);
        assert!(is_usage_error(&cmd_dims(&c).unwrap_err()));
        let mut c = cfg(Command::Minerr);
        c.d = Some(2);
        c.locc = true;
        assert!(is_usage_error(&cmd_minerr(&c).unwrap_err()));
        c.locc = false;
        c.eta1 = 1.5;
        assert!(is_usage_error(&cmd_minerr(&c).unwrap_err()));
    }

    #[test]
    fn unamb_two_two() {
        let mut c = cfg(Command::Unamb);
        c.d_a = Some(2);
        c.d_b = Some(2);
        let r = cmd_unamb(&c).unwrap();
        assert!(r.pass, "{}", r.to_text());
        assert!((r.values["gap"] - 1.0 / 80.0).abs() < 1e-15);
    }

    #[test]
    fn injected_fault_is_reported() {
        let mut c = cfg(Command::Unamb);
        c.d_a = Some(2);
        c.d_b = Some(2);
        c.inject_alpha = Some(0.7);
        let r = cmd_unamb(&c).unwrap();
        assert!(!r.pass);
        let f = r.failed_checks().next().unwrap();
        assert!(f.name.contains("feasibility"));
        assert_eq!(f.analytic, 0.7);
        assert!(r.to_csv().unwrap().lines().count() == r.checks.len() + 1);
    }
}
