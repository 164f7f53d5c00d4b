//! One function per subcommand. Each returns the staged payloads; nothing
//! touches the file system here.

use std::collections::BTreeMap;

use coopmac::coding::{error_curve, CodebookSpec, SimulationOptions};
use coopmac::discrete::{brute_force_region, region_for_law, simplex_weights, willems_region, BruteForceOptions};
use coopmac::equivalence::{equivalence_suite, SuiteOptions};
use coopmac::fading::{cm_bound_estimates, frontier, planar_directions, region_conf_on, PolicyGrid, PolicyMap, RegionKind};
use coopmac::{Engine, Ensemble, FadingDistribution, InputLaw, RateConstraintSet, RatePoint, Subset, TransmitPolicy, WeightVector};
use serde_json::{json, Value};

use crate::config::{FrontierKind, RunConfig};
use crate::error::CliError;
use crate::output::{Cell, Payload, Table};
use crate::setup;

/// What a command produced. `failure` is set when the outputs are written
/// but the run must still exit nonzero.
pub struct Outcome {
    pub payloads: Vec<Payload>,
    pub engine: String,
    pub seeds: BTreeMap<String, u64>,
    pub failure: Option<CliError>,
}

impl Outcome {
    fn new(payloads: Vec<Payload>, engine: String) -> Self {
        Self {
            payloads,
            engine,
            seeds: BTreeMap::new(),
            failure: None,
        }
    }
}

pub fn rate_labels(p: usize, has_common: bool) -> Vec<String> {
    let first = if has_common { 0 } else { 1 };
    (first..=p).map(|k| format!("R{k}")).collect()
}

pub fn point_cells(pt: &RatePoint<f64>) -> Vec<Cell> {
    pt.coords().into_iter().map(Cell::from).collect()
}

fn subset_label(s: Subset) -> String {
    s.members().map(|k| format!("R{}", k + 1)).collect::<Vec<_>>().join("+")
}

/// One row per bound: the subset bounds of each receiver, then its total.
pub fn constraints_table(set: &RateConstraintSet<f64>, std_errors: Option<&dyn Fn(usize, Option<Subset>) -> f64>) -> Table {
    let p = set.num_tx();
    let mut header = vec!["receiver", "constraint", "bound"];
    if std_errors.is_some() {
        header.push("std_error");
    }
    let mut t = Table::new(header);
    let total_label = if set.has_common() {
        format!("R0+{}", subset_label(Subset::full(p)))
    } else if set.link_credits().is_some() {
        format!("{} [uncredited]", subset_label(Subset::full(p)))
    } else {
        format!("{} [total]", subset_label(Subset::full(p)))
    };
    for j in 0..set.num_rx() {
        let mut rows: Vec<(String, f64, Option<Subset>)> = Subset::nonempty(p).map(|s| (subset_label(s), set.bound(j, s), Some(s))).collect();
        rows.push((total_label.clone(), set.total(j), None));
        for (label, bound, s) in rows {
            let mut row = vec![Cell::from(j + 1), label.into(), bound.into()];
            if let Some(se) = std_errors {
                row.push(se(j, s).into());
            }
            t.push(row);
        }
    }
    t
}

pub fn vertex_table(set: &RateConstraintSet<f64>) -> Result<Table, CliError> {
    let mut t = Table::new(rate_labels(set.num_tx(), set.has_common()));
    for v in set.vertices()? {
        t.push(point_cells(&v));
    }
    Ok(t)
}

fn table(stem: &str, table: Table) -> Payload {
    Payload::Table {
        stem: stem.to_string(),
        table,
        extra: None,
    }
}

/// Engine description and seeds for the provenance block.
fn engine_provenance(cfg: &RunConfig, engine: Engine) -> (String, BTreeMap<String, u64>) {
    let mut seeds = BTreeMap::new();
    let deterministic = cfg.channel.as_ref().is_some_and(|c| c.fading != crate::config::FadingConfig::Rayleigh);
    if deterministic {
        return ("exact (deterministic fading)".to_string(), seeds);
    }
    if let Some(seed) = setup::engine_seed(engine) {
        seeds.insert("engine".to_string(), seed);
    }
    (setup::engine_label(engine), seeds)
}

fn check_region(set: &RateConstraintSet<f64>) -> Result<(), CliError> {
    if let Some(w) = set.check_submodular()? {
        return Err(CliError::Validation(format!("bounds are not submodular: {w:?}")));
    }
    set.check_invariants()?;
    Ok(())
}

pub fn region(cfg: &RunConfig) -> Result<Outcome, CliError> {
    if cfg.conferencing.is_some() {
        return Err(CliError::schema("/conferencing", "conferencing belongs to conf-region"));
    }
    let spec = setup::channel(cfg)?;
    let q = setup::quantizer(cfg, spec.num_tx())?;
    let policy = setup::policy(cfg, &spec)?;
    let engine = setup::engine(cfg);
    let opts = cfg.region.unwrap_or_default();
    let ens = Ensemble::build(&spec, engine)?;
    let est = cm_bound_estimates(&spec, &q, &policy, &ens)?;
    let set = est.to_set(opts.common_message)?;
    check_region(&set)?;
    let se = |j: usize, s: Option<Subset>| match s {
        Some(s) => est.subset[j][s.0 as usize].std_error,
        None => est.total[j].std_error,
    };
    let mut payloads = vec![table("constraints", constraints_table(&set, Some(&se)))];
    if opts.vertices {
        payloads.push(table("vertices", vertex_table(&set)?));
    }
    let (label, seeds) = engine_provenance(cfg, engine);
    Ok(Outcome { seeds, ..Outcome::new(payloads, label) })
}

pub fn conf_region(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let spec = setup::channel(cfg)?;
    let q = setup::quantizer(cfg, spec.num_tx())?;
    let policy = setup::policy(cfg, &spec)?;
    let conf = setup::conferencing(cfg)?;
    let engine = setup::engine(cfg);
    let ens = Ensemble::build(&spec, engine)?;
    let set = region_conf_on(&spec, &q, &policy, conf, &ens)?;
    check_region(&set)?;
    let mut payloads = vec![table("constraints", constraints_table(&set, None))];
    if cfg.region.unwrap_or_default().vertices {
        payloads.push(table("vertices", vertex_table(&set)?));
    }
    let (label, seeds) = engine_provenance(cfg, engine);
    Ok(Outcome { seeds, ..Outcome::new(payloads, label) })
}

/// `(phi, rho)` tables of a tabular policy, for export.
pub fn policy_json(policy: &TransmitPolicy<f64>) -> Value {
    let table = |m: &PolicyMap<f64>| match m {
        PolicyMap::Table(v) => json!(v),
        PolicyMap::PerSample(_) => Value::Null,
    };
    Value::Array(
        policy
            .transmitters()
            .iter()
            .map(|tx| json!({"phi": table(&tx.power), "rho": table(&tx.correlation)}))
            .collect(),
    )
}

fn weights_from(cfg_weights: &[Vec<f64>], dims: usize) -> Result<Vec<WeightVector<f64>>, CliError> {
    cfg_weights
        .iter()
        .enumerate()
        .map(|(i, w)| {
            if w.len() != dims {
                return Err(CliError::schema(&format!("/frontier/weights/{i}"), format!("expected {dims} entries, got {}", w.len())));
            }
            WeightVector::new(w.clone()).map_err(|e| CliError::schema(&format!("/frontier/weights/{i}"), e.to_string()))
        })
        .collect()
}

pub fn frontier_cmd(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let fc = cfg
        .frontier
        .as_ref()
        .ok_or_else(|| CliError::schema("/frontier", "section is required for this command"))?;
    let spec = setup::channel(cfg)?;
    let p = spec.num_tx();
    let q = setup::quantizer(cfg, p)?;
    let engine = setup::engine(cfg);
    let kind = match fc.kind {
        FrontierKind::CommonMessage => RegionKind::CommonMessage,
        FrontierKind::Conferencing => RegionKind::Conferencing(setup::conferencing(cfg)?),
    };
    let weights = match (&fc.weights, fc.simplex_steps, fc.directions) {
        (Some(w), _, _) => weights_from(w, p + 1)?,
        (None, Some(steps), _) => {
            if steps == 0 {
                return Err(CliError::schema("/frontier/simplex_steps", "must be >= 1"));
            }
            simplex_weights(p + 1, steps)
        }
        (None, None, Some(count)) if p == 2 => planar_directions(count),
        (None, None, Some(_)) => return Err(CliError::schema("/frontier/directions", "planar directions need two transmitters")),
        (None, None, None) if p == 2 => planar_directions(100),
        (None, None, None) => simplex_weights(p + 1, 6),
    };
    let grid = PolicyGrid {
        rho_points: fc.rho_points,
        power_levels: fc.power_levels,
        max_policies: fc.max_policies,
    };
    let points = frontier(&spec, &q, &weights, &grid, kind, engine)?;
    let has_common = matches!(kind, RegionKind::CommonMessage);
    let mut header: Vec<String> = (0..=p).map(|k| format!("w{k}")).collect();
    header.push("value".into());
    header.extend(rate_labels(p, has_common));
    header.push("policy_index".into());
    let mut t = Table::new(header);
    let mut policies = BTreeMap::new();
    for fp in &points {
        let mut row: Vec<Cell> = fp.weights.as_slice().iter().map(|w| Cell::from(*w)).collect();
        row.push(fp.value.into());
        row.extend(point_cells(&fp.point));
        row.push(fp.policy_index.into());
        t.push(row);
        policies.entry(fp.policy_index.to_string()).or_insert_with(|| policy_json(&fp.policy));
    }
    let payloads = vec![Payload::Table {
        stem: "frontier".into(),
        table: t,
        extra: Some(json!({ "policies": policies })),
    }];
    let (label, seeds) = engine_provenance(cfg, engine);
    Ok(Outcome { seeds, ..Outcome::new(payloads, label) })
}

fn law_json(law: &InputLaw<f64>) -> Value {
    let cond: Vec<&[Vec<f64>]> = (0..law.num_tx()).map(|i| law.conditional(i)).collect();
    json!({ "pu": law.pu(), "cond": cond })
}

pub fn discrete(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let dc = cfg
        .discrete
        .as_ref()
        .ok_or_else(|| CliError::schema("/discrete", "section is required for this command"))?;
    let channel = setup::discrete_channel(&dc.channel)?;
    let p = channel.num_tx();
    let mut payloads = Vec::new();
    if let Some(bf) = &dc.brute_force {
        if bf.weight_steps == 0 {
            return Err(CliError::schema("/discrete/brute_force/weight_steps", "must be >= 1"));
        }
        let weights = simplex_weights(p + 1, bf.weight_steps);
        let opts = BruteForceOptions {
            denominator: bf.denominator,
            u_size_cap: bf.u_size_cap,
            max_laws: bf.max_laws,
        };
        let points = brute_force_region(&channel, &weights, &opts)?;
        let mut header: Vec<String> = (0..=p).map(|k| format!("w{k}")).collect();
        header.push("value".into());
        header.extend(rate_labels(p, true));
        let mut t = Table::new(header);
        let mut laws = Vec::new();
        for fp in &points {
            let mut row: Vec<Cell> = fp.weights.as_slice().iter().map(|w| Cell::from(*w)).collect();
            row.push(fp.value.into());
            row.extend(point_cells(&fp.point));
            t.push(row);
            laws.push(law_json(&fp.law));
        }
        payloads.push(Payload::Table {
            stem: "brute_force".into(),
            table: t,
            extra: Some(json!({ "laws": laws })),
        });
    } else {
        let law = setup::law(&dc.law, &channel)?;
        let set = match &cfg.conferencing {
            Some(_) => willems_region(&channel, &law, setup::conferencing(cfg)?)?,
            None => region_for_law(&channel, &law)?,
        };
        check_region(&set)?;
        payloads.push(table("constraints", constraints_table(&set, None)));
        if cfg.region.unwrap_or_default().vertices {
            payloads.push(table("vertices", vertex_table(&set)?));
        }
    }
    Ok(Outcome::new(payloads, "exact (discrete)".into()))
}

pub fn simulate(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let dc = cfg
        .discrete
        .as_ref()
        .ok_or_else(|| CliError::schema("/discrete", "section is required for this command"))?;
    let sc = cfg
        .simulate
        .as_ref()
        .ok_or_else(|| CliError::schema("/simulate", "section is required for this command"))?;
    let channel = setup::discrete_channel(&dc.channel)?;
    let p = channel.num_tx();
    if sc.rates.len() != p + 1 {
        return Err(CliError::schema("/simulate/rates", format!("expected {} entries (R0..R{p}), got {}", p + 1, sc.rates.len())));
    }
    let law = setup::law(&dc.law, &channel)?;
    let template = CodebookSpec::new(channel, law, sc.n[0], sc.rates.clone(), sc.epsilon, sc.seed)?;
    let opts = SimulationOptions {
        trials: sc.trials,
        trials_per_codebook: sc.trials_per_codebook,
    };
    let curve = error_curve(&template, &sc.n, &opts)?;
    let labels = rate_labels(p, true);
    let mut header = vec!["n".to_string()];
    header.extend(labels.iter().map(|l| format!("nominal_{l}")));
    header.extend(labels.iter().map(|l| format!("realized_{l}")));
    header.extend(["trials", "errors", "error_rate", "ci_low", "ci_high"].map(String::from));
    let mut t = Table::new(header);
    for pt in &curve {
        let mut row = vec![Cell::from(pt.n)];
        row.extend(pt.nominal_rates.iter().map(|r| Cell::from(*r)));
        row.extend(pt.realized_rates.iter().map(|r| Cell::from(*r)));
        row.extend([pt.trials.into(), pt.errors.into(), pt.error_rate.into(), pt.ci_low.into(), pt.ci_high.into()]);
        t.push(row);
    }
    let mut out = Outcome::new(vec![table("error_curve", t)], "random coding".into());
    out.seeds.insert("simulate".into(), sc.seed);
    Ok(out)
}

pub fn equiv_check(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let spec = setup::channel(cfg)?;
    if !matches!(spec.fading(), FadingDistribution::IidRayleigh) {
        return Err(CliError::Core(coopmac::Error::Capability("the round-trip suite samples Rayleigh states".into())));
    }
    let ec = cfg.equiv.unwrap_or_default();
    let opts = SuiteOptions {
        policies: ec.policies,
        states: ec.states,
        seed: ec.seed,
        ..SuiteOptions::default()
    };
    let report = equivalence_suite(&spec, &opts)?;
    let passed = report.passed(&opts);
    let mut t = Table::new(["check", "value", "limit"]);
    let rows: [(&str, Cell, Cell); 10] = [
        ("tx_policies", report.tx_policies.into(), "".into()),
        ("lu_policies", report.lu_policies.into(), "".into()),
        ("state_checks", report.state_checks.into(), "".into()),
        ("max_argument_err", report.max_argument_err.into(), opts.argument_tol.into()),
        ("roundtrip_checks", report.roundtrip_checks.into(), "".into()),
        ("max_roundtrip_err", report.max_roundtrip_err.into(), opts.roundtrip_tol.into()),
        ("degenerate_states", report.degenerate_states.into(), "".into()),
        ("feasibility_mismatches", report.feasibility_mismatches.into(), 0usize.into()),
        ("feasible_seen", report.feasible_seen.into(), "".into()),
        ("infeasible_seen", report.infeasible_seen.into(), "".into()),
    ];
    for (name, v, lim) in rows {
        t.push(vec![name.into(), v, lim]);
    }
    t.push(vec!["passed".into(), (if passed { "true" } else { "false" }).into(), "true".into()]);
    let mut out = Outcome::new(vec![table("equiv_check", t)], format!("mc(states={}, seed={})", ec.states, ec.seed));
    out.seeds.insert("equiv".into(), ec.seed);
    if !passed {
        out.failure = Some(CliError::Validation(format!(
            "equivalence suite failed: argument error {:e}, round-trip error {:e}, {} feasibility mismatches",
            report.max_argument_err, report.max_roundtrip_err, report.feasibility_mismatches
        )));
    }
    Ok(out)
}
