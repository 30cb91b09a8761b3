//! Experiment runner behind the `cecheck` binary.

pub mod config;
pub mod suites;

use serde::Serialize;

use ce_core::ce_residual::{self, GraphField, ResidualRow};
use ce_core::octa3d::{self, OctField};
use ce_core::{pwl, stagegen, testfn};

use config::{Format, RunConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Construct,
    Levels,
    Residual,
    Flow,
    Octa,
    Report,
    Graph,
}

/// What a command produced: the main document, extra plot files, and the
/// overall verdict.
#[derive(Debug)]
pub struct Outcome {
    pub pass: bool,
    /// File name and contents of the main document.
    pub main: (String, String),
    pub extra: Vec<(String, String)>,
}

fn to_csv<T: Serialize>(rows: &[T]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("flat rows serialize");
    }
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8 csv")
}

fn to_json<T: Serialize + ?Sized>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable") + "\n"
}

#[derive(Serialize)]
struct ReportLine<'a> {
    id: &'a str,
    title: &'a str,
    pass: bool,
    seconds: f64,
    detail: &'a str,
}

fn report_doc(r: &suites::Report, format: Format) -> (String, String) {
    match format {
        Format::Json => ("report.json".into(), to_json(r)),
        Format::Csv => {
            let lines: Vec<ReportLine> = r
                .rows
                .iter()
                .map(|x| ReportLine { id: x.id, title: x.title, pass: x.pass, seconds: x.seconds, detail: &x.detail })
                .collect();
            ("report.csv".into(), to_csv(&lines))
        }
    }
}

#[derive(Serialize)]
struct FlipRow {
    j: usize,
    eps: String,
    a: String,
    b: String,
}

pub fn execute(cmd: Command, c: &RunConfig) -> Result<Outcome, String> {
    let err = |e: ce_core::Error| e.to_string();
    let k = c.stages;
    match cmd {
        Command::Construct => {
            let s = stagegen::build(k).map_err(err)?;
            let pass = s.check_invariants().is_ok();
            let main = match c.format {
                Format::Json => (format!("stage_{k}.json"), s.to_json() + "\n"),
                Format::Csv => {
                    let rows: Vec<FlipRow> = s
                        .flips()
                        .iter()
                        .enumerate()
                        .map(|(j, (a, b))| FlipRow {
                            j: j + 1,
                            eps: ce_core::rational::format(&s.eps()[j + 1]),
                            a: ce_core::rational::format(a),
                            b: ce_core::rational::format(b),
                        })
                        .collect();
                    (format!("stage_{k}.csv"), to_csv(&rows))
                }
            };
            Ok(Outcome { pass, main, extra: Vec::new() })
        }
        Command::Levels => {
            let stages = stagegen::build_all(k).map_err(err)?;
            let rows = suites::level_rows(&stages);
            let pass = rows.iter().all(|r| r.l1_mass == "1/1");
            let main = match c.format {
                Format::Json => ("levels.json".into(), to_json(&rows)),
                Format::Csv => ("levels.csv".into(), to_csv(&rows)),
            };
            Ok(Outcome { pass, main, extra: Vec::new() })
        }
        Command::Residual => {
            let stages = stagegen::build_all(k).map_err(err)?;
            let poly = testfn::polynomial_suite();
            let smooth = testfn::smooth_suite();
            let mut rows: Vec<ResidualRow> = Vec::new();
            for s in &stages {
                let gf = GraphField::new(pwl::stage_function(s)).map_err(err)?;
                rows.extend(ce_residual::exact_rows(s.k(), &gf, &poly).map_err(err)?);
                rows.extend(ce_residual::float_rows(s.k(), &gf, &smooth, c.tol, 1e-8).map_err(err)?);
            }
            let pass = rows.iter().all(|r| r.pass);
            let main = match c.format {
                Format::Json => ("residual.json".into(), to_json(&rows)),
                Format::Csv => ("residual.csv".into(), to_csv(&rows)),
            };
            Ok(Outcome { pass, main, extra: Vec::new() })
        }
        Command::Flow | Command::Octa | Command::Report => {
            let mut cfg = c.clone();
            match cmd {
                Command::Flow => cfg.suite = "flow".into(),
                Command::Octa => cfg.suite = "octa".into(),
                _ => {}
            }
            let report = suites::run(&cfg)?;
            let mut extra = Vec::new();
            if cmd == Command::Flow {
                let s = stagegen::build(k.min(1)).map_err(err)?;
                let gf = GraphField::new(pwl::stage_function(&s)).map_err(err)?;
                let w = ce_core::flow1d::non_uniqueness_witness(&gf).map_err(err)?;
                extra.push(("characteristic_constant.csv".into(), w.constant.to_csv()));
                extra.push(("characteristic_branch.csv".into(), w.branch.to_csv()));
            }
            if cmd == Command::Octa {
                let of = OctField::new(stagegen::build(k.min(6)).map_err(err)?);
                let phi = &suites::divergence_suite()[2];
                let fluxes = of.face_fluxes(phi.as_ref(), c.tol).map_err(err)?;
                extra.push(("face_flux.csv".into(), OctField::flux_csv(&fluxes)));
                extra.push(("slice_tv.csv".into(), of.slice_tv_csv(100)));
                extra.push(("wireframe.csv".into(), octa3d::wireframe_csv(&[-0.5, 0.0, 0.5])));
            }
            let mut main = report_doc(&report, c.format);
            if cmd != Command::Report {
                main.0 = format!("{}_{}", cfg.suite, main.0);
            }
            Ok(Outcome { pass: report.pass, main, extra })
        }
        Command::Graph => {
            let s = stagegen::build(k).map_err(err)?;
            Ok(Outcome {
                pass: true,
                main: (format!("graph_{k}.csv"), pwl::stage_function(&s).graph_csv()),
                extra: Vec::new(),
            })
        }
    }
}
