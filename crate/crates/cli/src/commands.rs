//! Subcommand bodies. Each returns its result files in memory so that a
//! failed run leaves nothing on disk.

use rayon::prelude::*;
use serde::Serialize;
use wnd_core::campaigns::{self, BoundReport, CampaignConfig, EstimateId};
use wnd_core::moments::mc_vs_exact_fourth;
use wnd_core::paths::{sample_path, EnsembleSpec};
use wnd_core::resonance::{ellipse_points, quintic_resonant_count, s_kj_count, zero_product_count};
use wnd_core::spectral::FieldRecord;
use wnd_core::witness::{growth_scan, ScanOptions};
use wnd_core::{flow, Error, Result};

use crate::configs::{Config, Kind, MomentsConfig, ResonanceConfig, SimulateConfig, WitnessConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Moments,
    Strichartz,
    L6,
    Xsb,
    Resonance,
    QuinticWitness,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Moments => "moments",
            Command::Strichartz => "strichartz",
            Command::L6 => "l6",
            Command::Xsb => "xsb",
            Command::Resonance => "resonance",
            Command::QuinticWitness => "quintic-witness",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        [
            Command::Simulate,
            Command::Moments,
            Command::Strichartz,
            Command::L6,
            Command::Xsb,
            Command::Resonance,
            Command::QuinticWitness,
        ]
        .into_iter()
        .find(|c| c.name() == s)
    }

    pub fn kind(self) -> Kind {
        match self {
            Command::Simulate => Kind::Simulate,
            Command::Moments => Kind::Moments,
            Command::Strichartz | Command::L6 | Command::Xsb => Kind::Campaign,
            Command::Resonance => Kind::Resonance,
            Command::QuinticWitness => Kind::Witness,
        }
    }

    /// Checks that a campaign config names an estimate this command runs.
    pub fn accepts(self, cfg: &Config) -> std::result::Result<(), String> {
        let ok = match (self, cfg.estimate()) {
            (Command::Strichartz, Some(e)) => matches!(e, EstimateId::HomogL4 | EstimateId::InhomogL4),
            (Command::L6, Some(e)) => e == EstimateId::L6,
            (Command::Xsb, Some(e)) => e == EstimateId::XsbEmbed,
            (_, None) => true,
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(format!(
                "estimate {:?} cannot be run by `{}`",
                cfg.estimate().unwrap(),
                self.name()
            ))
        }
    }

    /// Files this command writes.
    pub fn outputs(self) -> &'static [&'static str] {
        match self {
            Command::Simulate => &["simulate.csv", "trajectories.jsonl"],
            Command::Moments => &["moments.csv"],
            Command::Strichartz | Command::Xsb => &["sweep.csv", "summary.json"],
            Command::L6 => &["sweep.csv", "l6_lower.csv", "summary.json"],
            Command::Resonance => &["resonance.csv"],
            Command::QuinticWitness => &["witness.jsonl", "witness_fit.json"],
        }
    }
}

pub struct OutputFile {
    pub name: &'static str,
    pub bytes: Vec<u8>,
}

fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::InvalidParameter {
            name: "csv",
            reason: e.to_string(),
        })?;
    }
    w.into_inner().map_err(|e| Error::InvalidParameter {
        name: "csv",
        reason: e.to_string(),
    })
}

fn json_line<T: Serialize>(out: &mut Vec<u8>, v: &T) {
    serde_json::to_writer(&mut *out, v).expect("serializable");
    out.push(b'\n');
}

fn json_pretty<T: Serialize>(v: &T) -> Vec<u8> {
    let mut b = serde_json::to_vec_pretty(v).expect("serializable");
    b.push(b'\n');
    b
}

pub fn execute(cmd: Command, cfg: &Config) -> Result<Vec<OutputFile>> {
    match cfg {
        Config::Simulate(c) => simulate(c),
        Config::Moments(c) => moments(c),
        Config::Campaign(c) => campaign(cmd, c),
        Config::Resonance(c) => resonance(c),
        Config::Witness(c) => witness(c),
    }
}

#[derive(Serialize)]
struct SimulateRow {
    path_index: u64,
    master_seed: u64,
    path_start: u64,
    path_end: u64,
    horizon: f64,
    steps: usize,
    w_final: f64,
    initial_l2: f64,
    final_l2: f64,
    max_mass_drift: f64,
}

#[derive(Serialize)]
struct KnotRecord<'a> {
    path_index: u64,
    master_seed: u64,
    knot: usize,
    t: f64,
    w: f64,
    field: &'a FieldRecord,
}

fn simulate(c: &SimulateConfig) -> Result<Vec<OutputFile>> {
    let e = c.ensemble;
    let spec = EnsembleSpec::with_steps(e.num_paths, e.master_seed, e.horizon, e.steps)?;
    let degree = flow::Nonlinearity::power(c.p)?.polynomial_degree().unwrap_or(3);
    let results = (0..e.num_paths as u64)
        .into_par_iter()
        .map(|i| {
            let u0 = c.data.field(i, degree)?;
            let path = sample_path(&spec, i)?;
            let tr = flow::solve_nls(&u0, &path, c.p, c.scheme.into())?;
            let row = SimulateRow {
                path_index: i,
                master_seed: e.master_seed,
                path_start: i,
                path_end: i + 1,
                horizon: e.horizon,
                steps: e.steps,
                w_final: path.value(path.steps()),
                initial_l2: tr.fields[0].l2_norm(),
                final_l2: tr.final_field().l2_norm(),
                max_mass_drift: tr.max_mass_drift(),
            };
            let mut lines = Vec::new();
            for (j, f) in tr.fields.iter().enumerate() {
                if j % c.record_every == 0 || j == path.steps() {
                    json_line(
                        &mut lines,
                        &KnotRecord {
                            path_index: i,
                            master_seed: e.master_seed,
                            knot: j,
                            t: path.time(j),
                            w: path.value(j),
                            field: &f.to_record(),
                        },
                    );
                }
            }
            Ok((row, lines))
        })
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<&SimulateRow> = results.iter().map(|r| &r.0).collect();
    Ok(vec![
        OutputFile {
            name: "simulate.csv",
            bytes: csv_bytes(&rows)?,
        },
        OutputFile {
            name: "trajectories.jsonl",
            bytes: results.into_iter().flat_map(|r| r.1).collect(),
        },
    ])
}

#[derive(Serialize)]
struct MomentRow {
    datum: String,
    master_seed: u64,
    path_start: u64,
    path_end: u64,
    horizon: f64,
    steps: usize,
    mc_fourth_moment: f64,
    mc_std_error: f64,
    exact: f64,
    exact_trapezoid: f64,
    z_score: f64,
    z_score_continuous: f64,
}

fn moments(c: &MomentsConfig) -> Result<Vec<OutputFile>> {
    let rows = c
        .data
        .iter()
        .map(|d| {
            if matches!(
                d,
                crate::configs::Datum::Family(wnd_core::campaigns::DataFamily::Random { per_path: true, .. })
            ) {
                return Err(Error::InvalidParameter {
                    name: "data",
                    reason: "the closed form needs a fixed datum; set per_path = false".into(),
                });
            }
            let u0 = d.field(0, 3)?;
            let chk = mc_vs_exact_fourth(&u0, c.horizon, c.ensemble.num_paths, c.steps, c.ensemble.master_seed)?;
            Ok(MomentRow {
                datum: d.label(),
                master_seed: c.ensemble.master_seed,
                path_start: 0,
                path_end: c.ensemble.num_paths as u64,
                horizon: c.horizon,
                steps: c.steps,
                mc_fourth_moment: chk.mc.raw_moment,
                mc_std_error: chk.mc.raw_std_error,
                exact: chk.exact,
                exact_trapezoid: chk.exact_trapezoid,
                z_score: chk.z_score,
                z_score_continuous: chk.z_score_continuous,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(vec![OutputFile {
        name: "moments.csv",
        bytes: csv_bytes(&rows)?,
    }])
}

#[derive(Serialize)]
struct SweepRow {
    estimate: EstimateId,
    n: Option<i64>,
    t: f64,
    master_seed: u64,
    path_start: u64,
    path_end: u64,
    lhs: f64,
    lhs_std_error: f64,
    envelope: f64,
    data_norm: f64,
    rhs_envelope: f64,
    ratio: f64,
}

#[derive(Serialize)]
struct Summary<'a> {
    estimate: EstimateId,
    max_ratio: f64,
    ratio_cap: f64,
    trend_slope: f64,
    blows_up_as_t_shrinks: bool,
    envelope_monotone: bool,
    pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    lower_fit: Option<&'a wnd_core::stats::LinearFit>,
}

fn sweep_files(r: &BoundReport, lower_fit: Option<&wnd_core::stats::LinearFit>) -> Result<Vec<OutputFile>> {
    let rows: Vec<SweepRow> = r
        .points
        .iter()
        .map(|p| SweepRow {
            estimate: r.estimate,
            n: p.n,
            t: p.t,
            master_seed: p.master_seed,
            path_start: 0,
            path_end: p.n_paths as u64,
            lhs: p.lhs,
            lhs_std_error: p.lhs_std_error,
            envelope: p.envelope,
            data_norm: p.data_norm,
            rhs_envelope: p.rhs_envelope,
            ratio: p.ratio,
        })
        .collect();
    let summary = Summary {
        estimate: r.estimate,
        max_ratio: r.max_ratio,
        ratio_cap: r.ratio_cap,
        trend_slope: r.trend_slope,
        blows_up_as_t_shrinks: r.blows_up_as_t_shrinks,
        envelope_monotone: r.envelope_monotone,
        pass: r.pass,
        lower_fit,
    };
    Ok(vec![
        OutputFile {
            name: "sweep.csv",
            bytes: csv_bytes(&rows)?,
        },
        OutputFile {
            name: "summary.json",
            bytes: json_pretty(&summary),
        },
    ])
}

fn campaign(cmd: Command, c: &CampaignConfig) -> Result<Vec<OutputFile>> {
    match (cmd, c.estimate) {
        (Command::Strichartz, EstimateId::HomogL4) => sweep_files(&campaigns::verify_homog_l4(c)?, None),
        (Command::Strichartz, EstimateId::InhomogL4) => sweep_files(&campaigns::verify_inhomog_l4(c)?, None),
        (Command::Xsb, EstimateId::XsbEmbed) => sweep_files(&campaigns::verify_xsb_embedding(c)?, None),
        (Command::L6, EstimateId::L6) => {
            let r = campaigns::verify_l6(c)?;
            let mut files = sweep_files(&r.bound, r.lower_fit.as_ref())?;
            files.insert(
                1,
                OutputFile {
                    name: "l6_lower.csv",
                    bytes: csv_bytes(&r.lower)?,
                },
            );
            Ok(files)
        }
        _ => Err(Error::InvalidParameter {
            name: "estimate",
            reason: format!("{:?} cannot be run by `{}`", c.estimate, cmd.name()),
        }),
    }
}

#[derive(Serialize, Default)]
struct ResonanceRow {
    query: &'static str,
    k: Option<i64>,
    j: Option<i64>,
    bound: Option<i64>,
    n: Option<i64>,
    m: Option<u64>,
    t: Option<i64>,
    count: u64,
}

fn resonance(c: &ResonanceConfig) -> Result<Vec<OutputFile>> {
    let mut rows = Vec::new();
    for &m in &c.zero_product {
        rows.push(ResonanceRow {
            query: "zero_product",
            m: Some(m),
            count: zero_product_count(m)?.count,
            ..Default::default()
        });
    }
    for &t in &c.ellipse {
        rows.push(ResonanceRow {
            query: "ellipse_points",
            t: Some(t),
            count: ellipse_points(t)?,
            ..Default::default()
        });
    }
    for q in &c.s_kj {
        rows.push(ResonanceRow {
            query: "s_kj",
            k: Some(q.k),
            j: Some(q.j),
            bound: Some(q.bound),
            count: s_kj_count(q.k, q.j, q.bound, false)?.count,
            ..Default::default()
        });
    }
    for q in &c.quintic {
        rows.push(ResonanceRow {
            query: "quintic",
            k: Some(q.k),
            n: Some(q.n),
            count: quintic_resonant_count(q.n, q.k)?,
            ..Default::default()
        });
    }
    Ok(vec![OutputFile {
        name: "resonance.csv",
        bytes: csv_bytes(&rows)?,
    }])
}

#[derive(Serialize)]
struct WitnessRecord<'a> {
    master_seed: u64,
    path_start: u64,
    path_end: u64,
    #[serde(flatten)]
    row: &'a wnd_core::witness::GrowthRow,
}

fn witness(c: &WitnessConfig) -> Result<Vec<OutputFile>> {
    let report = growth_scan(
        &c.n_list,
        c.t_rule,
        ScanOptions {
            exact: c.exact,
            mc_paths: c.mc_paths,
            mc_steps: c.mc_steps,
            master_seed: c.master_seed,
        },
    )?;
    let mut lines = Vec::new();
    for row in &report.rows {
        json_line(
            &mut lines,
            &WitnessRecord {
                master_seed: c.master_seed,
                path_start: 0,
                path_end: c.mc_paths as u64,
                row,
            },
        );
    }
    #[derive(Serialize)]
    struct Fits<'a> {
        fit_log: &'a Option<wnd_core::witness::GrowthFit>,
        fit_sqrt_log: &'a Option<wnd_core::witness::GrowthFit>,
        better_fit: &'a Option<String>,
    }
    Ok(vec![
        OutputFile {
            name: "witness.jsonl",
            bytes: lines,
        },
        OutputFile {
            name: "witness_fit.json",
            bytes: json_pretty(&Fits {
                fit_log: &report.fit_log,
                fit_sqrt_log: &report.fit_sqrt_log,
                better_fit: &report.better_fit,
            }),
        },
    ])
}
