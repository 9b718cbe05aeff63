//! Command-line front end: sweeps write CSV, single runs write JSON.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::comb::{Battery, Comb, CombJson, EnergyAudit};
use crate::conic::DEFAULT_TOL;
use crate::dilation::{dilate_with, verify_dilation};
use crate::error::Error;
use crate::ico::{battery_separation_examples, hierarchy_experiment, ind_vs_shared_experiment};
use crate::local::{default_p0_grid, fisher_optimize, narrow_prior_curve};
use crate::metrology::{build_probe_program, task_operator, uniform_phases, SeesawOptions};
use crate::phase::{
    asymptotic_lower_bound, lower_bound, optimized_cost, phase_family, qubit_cost_closed_form, sine_probe_strategy,
};

#[derive(Parser, Debug)]
#[command(
    name = "comb-energy",
    version,
    about = "Energy consumption of quantum combs and energy-constrained metrology"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Interior-point tolerance.
    #[arg(long, global = true, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    /// Worker threads for sweeps (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Write the first SDP as sparse triplets.
    #[arg(long, global = true)]
    pub dump_sdp: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
pub enum Model {
    Global,
    Local,
}

impl From<Model> for Battery {
    fn from(m: Model) -> Self {
        match m {
            Model::Global => Battery::Global,
            Model::Local => Battery::Local,
        }
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Energy audit of a comb file.
    Energy {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "global")]
        model: Model,
    },
    /// Optimal phase-estimation strategy at one budget.
    PhaseOpt {
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long = "E")]
        e: f64,
        #[arg(long, value_enum, default_value = "global")]
        battery: Model,
        #[arg(long, default_value_t = 4)]
        restarts: usize,
    },
    /// Optimized cost along an energy grid.
    PhaseSweep {
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long = "E-grid", default_value = "0:1.5:0.05")]
        e_grid: Grid,
        #[arg(long, value_enum, default_value = "global")]
        battery: Model,
        #[arg(long, default_value_t = 4)]
        restarts: usize,
    },
    /// Lower bound on the optimal cost.
    LowerBound {
        #[arg(long = "E")]
        e: f64,
        #[arg(long)]
        d: usize,
    },
    /// Sine-state strategy across dimensions.
    Scaling {
        #[arg(long, default_value = "2..32")]
        d: DimRange,
    },
    /// Superposition vs definite-order costs.
    IcoHierarchy {
        #[arg(long = "E-grid", default_value = "0:1.5:0.05")]
        e_grid: Grid,
        /// Also report the definite order with a coherent causality qubit.
        #[arg(long)]
        causality_qubit: bool,
        #[arg(long, default_value_t = 2)]
        restarts: usize,
    },
    /// Energy constants separating the battery models.
    IcoBatteries,
    /// Individual vs shared spacetime battery costs.
    IndVsShared {
        #[arg(long = "E-grid", default_value = "0:1.5:0.05")]
        e_grid: Grid,
        #[arg(long, default_value_t = 2)]
        restarts: usize,
    },
    /// Fisher information of energy-limited qubit probes.
    Fisher {
        #[arg(long = "E-grid", default_value = "0:2:0.1")]
        e_grid: Grid,
        #[arg(long, default_value_t = std::f64::consts::PI)]
        theta: f64,
    },
    /// Bayesian cost under a Gaussian prior.
    NarrowPrior {
        #[arg(long, default_value_t = std::f64::consts::PI)]
        mu: f64,
        #[arg(long, default_value_t = 0.5)]
        sigma: f64,
        #[arg(long = "E-grid", default_value = "0:1.5:0.05")]
        e_grid: Grid,
        #[arg(long, default_value_t = 4)]
        restarts: usize,
    },
    /// Isometric implementation of a comb with a constant-energy ancilla.
    Dilate {
        file: PathBuf,
        #[arg(long, default_value_t = 50)]
        trials: usize,
        /// Ancilla spectrum, comma separated.
        #[arg(long, value_delimiter = ',')]
        levels: Option<Vec<f64>>,
    },
}

/// `start:stop:step`, inclusive of `stop` within 1e-12, or a single value.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid(pub Vec<f64>);

impl std::str::FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<f64> = s
            .split(':')
            .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
            .collect::<std::result::Result<_, _>>()?;
        match parts.as_slice() {
            [x] => Ok(Grid(vec![*x])),
            [a, b, h] => {
                if !(*h > 0.0) || b < a {
                    return Err("grid needs start <= stop and step > 0".into());
                }
                let n = ((b - a) / h + 1e-12).floor() as usize;
                let mut v: Vec<f64> = (0..=n).map(|k| a + k as f64 * h).collect();
                if let Some(last) = v.last_mut() {
                    if (*last - b).abs() < 1e-12 {
                        *last = *b;
                    }
                }
                Ok(Grid(v))
            }
            _ => Err("expected start:stop:step".into()),
        }
    }
}

/// `a..b` inclusive, or a single dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct DimRange(pub Vec<usize>);

impl std::str::FromStr for DimRange {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parse = |p: &str| p.trim().parse::<usize>().map_err(|e| format!("`{p}`: {e}"));
        let (a, b) = match s.split_once("..") {
            Some((a, b)) => (parse(a)?, parse(b.trim_start_matches('='))?),
            None => (parse(s)?, parse(s)?),
        };
        if a < 2 || b < a {
            return Err("dimensions must satisfy 2 <= start <= stop".into());
        }
        Ok(DimRange((a..=b).collect()))
    }
}

/// Nine significant digits.
pub fn fmt9(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string().to_lowercase();
    }
    let sci = format!("{x:.8e}");
    let exp: i32 = sci.rsplit('e').next().and_then(|e| e.parse().ok()).unwrap_or(0);
    if (-4..9).contains(&exp) {
        format!("{:.*}", (8 - exp).max(0) as usize, x)
    } else {
        sci
    }
}

struct Csv {
    text: String,
    failed: bool,
}

impl Csv {
    fn new(cli: &Cli, header: &[&str]) -> Self {
        let mut text = String::new();
        let _ = writeln!(text, "# comb-energy {}, config {}", env!("CARGO_PKG_VERSION"), config_hash(cli));
        let _ = writeln!(text, "{}", header.join(","));
        Csv { text, failed: false }
    }

    fn row(&mut self, cells: &[String]) {
        eprintln!("{}", cells.join(" "));
        let _ = writeln!(self.text, "{}", cells.join(","));
    }

    fn fail_row(&mut self, lead: String, width: usize, err: &str) {
        eprintln!("{lead} error: {err}");
        let mut cells = vec![lead];
        cells.extend(std::iter::repeat_n("nan".to_string(), width - 1));
        let _ = writeln!(self.text, "{}", cells.join(","));
        self.failed = true;
    }
}

fn config_hash(cli: &Cli) -> String {
    let cfg = format!("{:?}|tol={}|seed={}", cli.command, cli.global.tol, cli.global.seed);
    let digest = Sha256::digest(cfg.as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

fn emit(global: &Global, text: &str) -> std::io::Result<()> {
    match &global.out {
        Some(p) => std::fs::write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable") + "\n"
}

fn seesaw_opts(g: &Global, restarts: usize) -> SeesawOptions {
    SeesawOptions { restarts, seed: g.seed, tol: g.tol, ..Default::default() }
}

fn read_comb(path: &PathBuf) -> std::result::Result<Comb, Failure> {
    let text = std::fs::read_to_string(path).map_err(Failure::Io)?;
    let j: CombJson = serde_json::from_str(&text).map_err(|e| Failure::Lib(Error::Parse(e.to_string())))?;
    Comb::from_json(&j).map_err(Failure::Lib)
}

enum Failure {
    Io(std::io::Error),
    Lib(Error),
    /// Output written, but some rows failed.
    Rows,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

#[derive(Serialize)]
struct EnergyOut<'a> {
    model: Battery,
    energy: f64,
    #[serde(flatten)]
    audit: &'a EnergyAudit,
}

#[derive(Serialize)]
struct LowerBoundOut {
    #[serde(rename = "E")]
    e: f64,
    d: usize,
    lower_bound: f64,
    asymptotic_lower_bound: f64,
}

#[derive(Serialize)]
struct DilateOut<'a> {
    report: &'a crate::dilation::DilationReport,
    plan: crate::dilation::PlanJson,
}

/// Parse `args` (program name first) and execute; returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    #[cfg(feature = "parallel")]
    if cli.global.jobs > 0 {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.global.jobs).build_global();
    }
    match execute(&cli) {
        Ok(()) => 0,
        Err(Failure::Io(e)) => {
            eprintln!("error: {e}");
            1
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            1
        }
        Err(Failure::Rows) => 1,
    }
}

fn execute(cli: &Cli) -> std::result::Result<(), Failure> {
    let g = &cli.global;
    let write = |text: &str| emit(g, text).map_err(Failure::Io);
    let finish = |csv: Csv| -> std::result::Result<(), Failure> {
        emit(g, &csv.text).map_err(Failure::Io)?;
        if csv.failed {
            Err(Failure::Rows)
        } else {
            Ok(())
        }
    };
    match &cli.command {
        Command::Energy { file, model } => {
            let comb = read_comb(file)?;
            let audit = comb.energy_audit()?;
            let model = Battery::from(*model);
            let energy = match model {
                Battery::Global => audit.e_global,
                Battery::Local => audit.e_local,
            };
            write(&to_json(&EnergyOut { model, energy, audit: &audit }))
        }
        Command::PhaseOpt { d, e, battery, restarts } => {
            if let Some(path) = &g.dump_sdp {
                let fam = phase_family(*d)?;
                let j = task_operator(&fam)?;
                let p = build_probe_program(&j, (*battery).into(), *e, &uniform_phases(*d), &fam.layout(*d), true)?;
                std::fs::write(path, p.problem.dump()).map_err(Failure::Io)?;
            }
            let r = optimized_cost(*e, *d, (*battery).into(), &seesaw_opts(g, *restarts))?;
            eprintln!("E={} d={} cost={}", fmt9(*e), d, fmt9(r.cost));
            write(&to_json(&r.to_json()))
        }
        Command::PhaseSweep { d, e_grid, battery, restarts } => {
            let opts = seesaw_opts(g, *restarts);
            let rows = crate::par::map(&e_grid.0, |&e| optimized_cost(e, *d, (*battery).into(), &opts));
            let mut csv = Csv::new(cli, &["E", "cost", "cost_closed_form", "gap"]);
            for (&e, r) in e_grid.0.iter().zip(rows) {
                match r {
                    Ok(r) => {
                        let cf = if *d == 2 { qubit_cost_closed_form(e) } else { f64::NAN };
                        csv.row(&[fmt9(e), fmt9(r.cost), fmt9(cf), fmt9(r.cost - cf)]);
                    }
                    Err(err) => csv.fail_row(fmt9(e), 4, &err.to_string()),
                }
            }
            finish(csv)
        }
        Command::LowerBound { e, d } => {
            let lb = lower_bound(*e, *d)?;
            write(&to_json(&LowerBoundOut {
                e: *e,
                d: *d,
                lower_bound: lb,
                asymptotic_lower_bound: asymptotic_lower_bound(*e),
            }))
        }
        Command::Scaling { d } => {
            let rows = crate::par::map(&d.0, |&dd| sine_probe_strategy(dd));
            let mut csv = Csv::new(cli, &["d", "cost", "probe_energy", "meas_energy", "total_bound"]);
            for (&dd, r) in d.0.iter().zip(rows) {
                match r {
                    Ok(s) => {
                        let p = s.point;
                        csv.row(&[
                            dd.to_string(),
                            fmt9(p.cost),
                            fmt9(p.probe_energy),
                            fmt9(p.measurement_energy),
                            fmt9(p.total_energy_bound),
                        ]);
                    }
                    Err(err) => csv.fail_row(dd.to_string(), 5, &err.to_string()),
                }
            }
            finish(csv)
        }
        Command::IcoHierarchy { e_grid, causality_qubit, restarts } => {
            let rows = hierarchy_experiment(&e_grid.0, *causality_qubit, &seesaw_opts(g, *restarts))?;
            let mut header = vec!["E", "sup_ind", "def_gl", "def_loc"];
            if *causality_qubit {
                header.push("def_cq");
            }
            let mut csv = Csv::new(cli, &header);
            for r in rows {
                match &r.error {
                    None => {
                        let mut cells =
                            vec![fmt9(r.e), fmt9(r.cost_sup_ind), fmt9(r.cost_def_global), fmt9(r.cost_def_local)];
                        if let Some(cq) = r.cost_def_causality_qubit {
                            cells.push(fmt9(cq));
                        }
                        csv.row(&cells);
                    }
                    Some(err) => csv.fail_row(fmt9(r.e), header.len(), err),
                }
            }
            finish(csv)
        }
        Command::IcoBatteries => {
            let s = battery_separation_examples()?;
            let mut csv = Csv::new(cli, &["quantity", "value"]);
            for (name, v) in [
                ("gate_energy", s.gate_energy),
                ("c1_local", s.c1_local),
                ("c1_global", s.c1_global),
                ("c2_individual", s.c2_individual),
                ("c2_shared", s.c2_shared),
            ] {
                csv.row(&[name.to_string(), fmt9(v)]);
            }
            finish(csv)
        }
        Command::IndVsShared { e_grid, restarts } => {
            let rows = ind_vs_shared_experiment(&e_grid.0, &seesaw_opts(g, *restarts))?;
            let mut csv = Csv::new(cli, &["E", "individual", "shared", "gap"]);
            for r in rows {
                match &r.error {
                    None => csv.row(&[
                        fmt9(r.e),
                        fmt9(r.cost_individual),
                        fmt9(r.cost_shared),
                        fmt9(r.cost_individual - r.cost_shared),
                    ]),
                    Some(err) => csv.fail_row(fmt9(r.e), 4, err),
                }
            }
            finish(csv)
        }
        Command::Fisher { e_grid, theta } => {
            let grid = default_p0_grid();
            let rows = crate::par::map(&e_grid.0, |&e| fisher_optimize(e, *theta, &grid, g.tol));
            let mut csv = Csv::new(cli, &["E", "fisher", "nu_rep", "p0_star", "branch"]);
            for (&e, r) in e_grid.0.iter().zip(rows) {
                match r {
                    Ok(r) => csv.row(&[
                        fmt9(e),
                        fmt9(r.best_f),
                        fmt9(r.nu_rep()),
                        r.p0_star.map_or("nan".into(), fmt9),
                        r.branch.map_or("".into(), |b| b.to_string()),
                    ]),
                    Err(err) => csv.fail_row(fmt9(e), 5, &err.to_string()),
                }
            }
            finish(csv)
        }
        Command::NarrowPrior { mu, sigma, e_grid, restarts } => {
            let rows = narrow_prior_curve(&e_grid.0, *mu, *sigma, &seesaw_opts(g, *restarts))?;
            let mut csv = Csv::new(cli, &["E", "cost"]);
            for (e, r) in rows {
                csv.row(&[fmt9(e), fmt9(r.cost)]);
            }
            finish(csv)
        }
        Command::Dilate { file, trials, levels } => {
            let comb = read_comb(file)?;
            let plan = dilate_with(&comb, levels.as_deref())?;
            let report = verify_dilation(&comb, &plan, *trials, g.seed)?;
            eprintln!(
                "M={} d_A={} choi_error={:.3e} max_energy_deviation={:.3e}",
                plan.m, plan.d_a, report.choi_error, report.max_energy_deviation
            );
            write(&to_json(&DilateOut { report: &report, plan: plan.to_json() }))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_inclusive() {
        let g: Grid = "0:1.5:0.05".parse().unwrap();
        assert_eq!(g.0.len(), 31);
        assert_eq!(*g.0.last().unwrap(), 1.5);
        assert_eq!("0.3".parse::<Grid>().unwrap().0, vec![0.3]);
        assert!("1:0:0.1".parse::<Grid>().is_err());
        assert_eq!("2..5".parse::<DimRange>().unwrap().0, vec![2, 3, 4, 5]);
    }

    #[test]
    fn nine_digits() {
        assert_eq!(fmt9(std::f64::consts::PI), "3.14159265");
        assert_eq!(fmt9(std::f64::consts::FRAC_1_SQRT_2), "0.707106781");
        assert_eq!(fmt9(1234.5), "1234.50000");
        assert_eq!(fmt9(1e-7), "1.00000000e-7");
        assert_eq!(fmt9(0.0), "0");
        assert_eq!(fmt9(0.99999999999), "1.00000000");
        assert_eq!(fmt9(f64::NAN), "nan");
    }
}
