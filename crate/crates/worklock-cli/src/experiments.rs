//! Experiment drivers. Each renders its complete output file in memory so
//! the writer can commit it atomically afterwards.

use anyhow::anyhow;
use rayon::prelude::*;
use serde::Serialize;
use worklock::homogenizer::{self, HomogenizerConfig};
use worklock::linalg::{trace_distance, DensityMatrix, PureState};
use worklock::nogo;
use worklock::protocol::{self, CoherentInput, GibbsTarget, ReferenceState, SweepOutcome};
use worklock::thermo::ThermalContext;

use crate::config::{
    AuditParams, CliError, ExperimentPlan, HomogenizerParams, ProtocolParams, Result, ReuseParams,
    RunConfig, SweepParams, ToleranceParams,
};

pub struct Rendered {
    pub data: Vec<u8>,
    pub summary: String,
}

pub fn render(cfg: &RunConfig) -> Result<Rendered> {
    match &cfg.plan {
        ExperimentPlan::Protocol(p) => run_protocol(p),
        ExperimentPlan::Sweep(p) => run_sweep(p),
        ExperimentPlan::Homogenizer(p) => run_homogenizer(p),
        ExperimentPlan::Reuse(p) => run_reuse(p),
        ExperimentPlan::NogoAudit(p) => run_audit(p, cfg.seed),
        ExperimentPlan::Tolerance(p) => run_tolerance(p),
    }
}

/// 17 significant digits: enough to round-trip f64 exactly, and stable
/// across runs so equal configs produce byte-identical files.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::Writer::from_writer(Vec::new())
}

fn finish_csv(w: csv::Writer<Vec<u8>>, summary: String) -> Result<Rendered> {
    let data = w
        .into_inner()
        .map_err(|e| CliError::Runtime(anyhow!("could not flush CSV buffer: {e}")))?;
    Ok(Rendered { data, summary })
}

fn record_err(e: csv::Error) -> CliError {
    CliError::Runtime(anyhow!("could not encode CSV record: {e}"))
}

fn to_json(value: &impl Serialize, summary: String) -> Result<Rendered> {
    let mut data = serde_json::to_vec_pretty(value)
        .map_err(|e| CliError::Runtime(anyhow!("could not encode JSON report: {e}")))?;
    data.push(b'\n');
    Ok(Rendered { data, summary })
}

fn run_protocol(p: &ProtocolParams) -> Result<Rendered> {
    let ctx = ThermalContext::new(p.kt)?;
    let input = CoherentInput::new(p.p, p.phi)?;
    let target = GibbsTarget::new(p.r)?;
    let mut reference = match p.quality {
        Some(t) => ReferenceState::with_quality(p.l, t)?,
        None => ReferenceState::uniform_superposition(p.l)?,
    };
    let mut w = csv_writer();
    w.write_record([
        "cycle",
        "q",
        "success_prob",
        "work_extracted",
        "repump_cost",
        "net_work",
        "reference_quality",
    ])
    .map_err(record_err)?;
    for cycle in 1..=p.cycles {
        let res = protocol::run_cycle(&input, &reference, &target, &ctx, p.target)?;
        w.write_record([
            cycle.to_string(),
            num(res.q),
            num(res.success_prob),
            num(res.work_extracted),
            num(res.repump_cost),
            num(res.net_work),
            num(reference.quality()),
        ])
        .map_err(record_err)?;
        reference = res.reference_after;
    }
    finish_csv(w, format!("{} cycles", p.cycles))
}

fn run_sweep(p: &SweepParams) -> Result<Rendered> {
    let ctx = ThermalContext::new(p.kt)?;
    let cells: Vec<(f64, f64)> = p
        .r_grid
        .iter()
        .flat_map(|&r| p.quality_grid.iter().map(move |&q| (r, q)))
        .collect();
    // Grid cells are independent; evaluation order never affects output
    // order because rows are reassembled by cell index.
    let mut points = cells
        .par_iter()
        .enumerate()
        .map(|(idx, &(r, quality))| {
            protocol::sweep_point(r, quality, p.l, &ctx).map(|sp| (idx, sp))
        })
        .collect::<std::result::Result<Vec<_>, worklock::Error>>()?;
    points.sort_by_key(|(idx, _)| *idx);

    let mut w = csv_writer();
    w.write_record([
        "r",
        "quality",
        "L",
        "q",
        "success_prob",
        "failure_prob_incoherent",
        "improvement",
        "boundary_leakage",
    ])
    .map_err(record_err)?;
    let mut infeasible = 0usize;
    for (_, sp) in &points {
        let row = match sp.outcome {
            SweepOutcome::Evaluated {
                q,
                success_prob,
                failure_prob_incoherent,
                improvement,
                boundary_leakage,
            } => [
                num(sp.r),
                num(sp.quality),
                p.l.to_string(),
                num(q),
                num(success_prob),
                num(failure_prob_incoherent),
                if improvement { "1" } else { "0" }.to_string(),
                num(boundary_leakage),
            ],
            SweepOutcome::InfeasibleQuality => {
                infeasible += 1;
                [
                    num(sp.r),
                    num(sp.quality),
                    p.l.to_string(),
                    "NaN".to_string(),
                    "NaN".to_string(),
                    "NaN".to_string(),
                    "NaN".to_string(),
                    "NaN".to_string(),
                ]
            }
        };
        w.write_record(&row).map_err(record_err)?;
    }
    let mut summary = format!("{} grid points", points.len());
    if infeasible > 0 {
        summary.push_str(&format!(" ({infeasible} infeasible)"));
    }
    finish_csv(w, summary)
}

fn run_homogenizer(p: &HomogenizerParams) -> Result<Rendered> {
    let xi = DensityMatrix::from_diagonal(&[1.0 - p.xi_excited, p.xi_excited])?;
    let mut rho = protocol::make_input(p.p, p.phi)?.density();
    let mut w = csv_writer();
    w.write_record(["step", "distance", "drift"])
        .map_err(record_err)?;
    for step in 1..=p.n {
        let (system, partner) = homogenizer::collide(&rho, &xi, p.eta)?;
        rho = system;
        w.write_record([
            step.to_string(),
            num(trace_distance(&rho, &xi)?),
            num(trace_distance(&partner, &xi)?),
        ])
        .map_err(record_err)?;
    }
    finish_csv(w, format!("{} collisions", p.n))
}

fn run_reuse(p: &ReuseParams) -> Result<Rendered> {
    let cfg = HomogenizerConfig::for_task(p.task, p.n, p.eta)?;
    let records = homogenizer::reuse_experiment(p.task, p.m, &cfg)?;
    let mut w = csv_writer();
    w.write_record(["use_index", "task_error", "reservoir_drift", "N", "eta", "task"])
        .map_err(record_err)?;
    for rec in &records {
        w.write_record([
            rec.use_index.to_string(),
            num(rec.task_error),
            num(rec.reservoir_drift),
            p.n.to_string(),
            num(p.eta),
            p.task.label().to_string(),
        ])
        .map_err(record_err)?;
    }
    finish_csv(w, format!("{} reservoir uses", p.m))
}

#[derive(Serialize)]
struct VerdictTable {
    works: Vec<f64>,
    pairs: Vec<nogo::PairVerdict>,
}

#[derive(Serialize)]
struct AuditReport {
    overlap_invariance: nogo::OverlapInvarianceReport,
    verdict_table: VerdictTable,
    identical_work_schedule: nogo::IdenticalWorkSchedule,
}

/// Audit of the rotation-invariance facts the no-go bounds rest on, plus a
/// small canonical verdict table: |0>, |1>, and the balanced superposition,
/// where the first and last share a work value.
fn run_audit(p: &AuditParams, seed: u64) -> Result<Rendered> {
    let overlap = nogo::overlap_invariance_audit(p.n_trials, seed)?;
    if overlap.double_rotation_violations > 0
        || overlap.max_pure_overlap_deviation > 1e-8
        || overlap.max_mixed_fidelity_deviation > 1e-8
    {
        return Err(CliError::Runtime(anyhow!(
            "invariance audit failed: {} rotation violations, pure deviation {:.3e}, mixed deviation {:.3e}",
            overlap.double_rotation_violations,
            overlap.max_pure_overlap_deviation,
            overlap.max_mixed_fidelity_deviation
        )));
    }

    let works = vec![1.0, 2.0, 1.0];
    let states = vec![
        PureState::basis(2, 0).density(),
        PureState::basis(2, 1).density(),
        protocol::make_input(0.5, 0.0)?.density(),
    ];
    let spec = nogo::WorkTaskSpec::new(states, works.clone())?;
    let pairs = nogo::check_distinguishability_precondition(&spec)?;
    let schedule = nogo::identical_work_schedule(&spec);

    let n_pairs = pairs.len();
    let report = AuditReport {
        overlap_invariance: overlap,
        verdict_table: VerdictTable { works, pairs },
        identical_work_schedule: schedule,
    };
    to_json(
        &report,
        format!("{} trials, {} pair verdicts", p.n_trials, n_pairs),
    )
}

fn run_tolerance(p: &ToleranceParams) -> Result<Rendered> {
    let ctx = ThermalContext::new(p.kt)?;
    let reference = match p.quality {
        Some(t) => ReferenceState::with_quality(p.l, t)?,
        None => ReferenceState::uniform_superposition(p.l)?,
    };
    let curve = nogo::epsilon_tolerance_curve(p.p_center, &p.deltas, &reference, &ctx)?;
    if !curve.bound_holds {
        return Err(CliError::Runtime(anyhow!(
            "tolerance bound violated: some detuning exceeds slope {:.6e} + deficit {:.6e}",
            curve.fitted_slope,
            curve.q_ideal_deficit
        )));
    }
    let n = curve.points.len();
    to_json(&curve, format!("{n} detunings"))
}
