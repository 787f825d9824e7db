use std::fmt;
use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use aniso::family::resolution_scale;
use aniso::grid::parse_shape;
use aniso::operators::weighted_maximal_all_boxes;
use aniso::verify::{
    check_chebyshev, check_jensen, check_lemma2_1, check_lemma2_2, check_mr_monotone, check_reverse_doubling,
    check_sublinearity, check_weak_morrey, counterexample_remark3, estimate_operator_norm, fefferman_stein_constant,
    random_field, rho_equivalence_scan, run_suite, write_csv_summary, OperatorKind, OperatorNormConfig, SuiteOptions,
    WeakMorreyConfig,
};
use aniso::{
    a1_characteristic, ap_characteristic, doubling_constants, lp_norm, maximal, maximal_over_family, maximal_r,
    morrey_norm, sharp_maximal, weak_lp_norm, weighted_maximal, Anisotropy, Backend, BoxFamily, CheckReport, Domain,
    Grid, GridFunction, MorreyParams, Parallelepiped, ScaleLadder, SharpMode, TestFunction, Weight,
};

use crate::output::emit;
use crate::plot::{render, PlotOptions, Series};

/// Bad flags, files or values: exit status 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn config_err(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Passed,
    CheckFailed,
}

fn parse_real(s: &str) -> Result<f64> {
    match s.trim() {
        "inf" | "infinity" | "Inf" => Ok(f64::INFINITY),
        t => t.parse::<f64>().map_err(|_| config_err(format!("`{t}` is not a number"))),
    }
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',').filter(|p| !p.trim().is_empty()).map(parse_real).collect()
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct GridArgs {
    /// Domain `lo:hi[,lo:hi...]`.
    #[arg(long, default_value = "-1:1", allow_hyphen_values = true)]
    pub domain: String,
    /// Cells per axis; a single value applies to every axis.
    #[arg(long, default_value = "1024")]
    pub shape: String,
    /// Anisotropy exponents, e.g. `1,2`. Isotropic when omitted.
    #[arg(long)]
    pub a: Option<String>,
}

impl GridArgs {
    pub fn anisotropy(&self, dim: usize) -> Result<Anisotropy> {
        match &self.a {
            None => Ok(Anisotropy::isotropic(dim)),
            Some(s) => Ok(Anisotropy::new(parse_list(s)?)?),
        }
    }

    pub fn build(&self) -> Result<(Grid, Anisotropy)> {
        let domain = Domain::parse(&self.domain)?;
        let mut shape = parse_shape(&self.shape)?;
        if shape.len() == 1 && domain.dim() > 1 {
            shape = vec![shape[0]; domain.dim()];
        }
        let a = self.anisotropy(domain.dim())?;
        let grid = Grid::new(domain, shape)?;
        if a.dim() != grid.dim() {
            return Err(config_err(format!("anisotropy has {} exponents for a {}-D grid", a.dim(), grid.dim())));
        }
        Ok((grid, a))
    }
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct FamilyArgs {
    /// Lattice stride of family centers, in cells.
    #[arg(long, default_value_t = 4)]
    pub stride: usize,
    /// Ratio of consecutive family scales.
    #[arg(long, default_value_t = 2.0)]
    pub q: f64,
    /// Smallest scale; one-cell resolution when omitted.
    #[arg(long)]
    pub t_min: Option<f64>,
    /// Number of scales; enough to span the domain when omitted.
    #[arg(long)]
    pub count: Option<usize>,
    /// Ratio of the centered maximal-function ladder.
    #[arg(long, default_value_t = 2.0)]
    pub ladder_q: f64,
}

impl FamilyArgs {
    fn ladder_with(&self, grid: &Grid, a: &Anisotropy, q: f64) -> Result<ScaleLadder> {
        let full = ScaleLadder::for_grid(grid, a, q)?;
        let t_min = self.t_min.unwrap_or_else(|| resolution_scale(grid, a));
        let count = match self.count {
            Some(k) => k,
            None => ((full.t_max() / t_min).ln() / q.ln()).ceil().max(0.0) as usize + 1,
        };
        Ok(ScaleLadder::new(t_min, q, count)?)
    }

    pub fn family(&self, grid: &Grid, a: &Anisotropy) -> Result<BoxFamily> {
        Ok(BoxFamily::lattice(a, vec![self.stride; grid.dim()], self.ladder_with(grid, a, self.q)?)?)
    }

    pub fn ladder(&self, grid: &Grid, a: &Anisotropy) -> Result<ScaleLadder> {
        self.ladder_with(grid, a, self.ladder_q)
    }
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct InputArgs {
    /// Function expression, e.g. `ind(-1:1)*powabs(-0.25)`.
    #[arg(long = "fn")]
    pub func: Option<String>,
    /// Grid CSV to read instead of sampling an expression; its header
    /// sets domain and shape.
    #[arg(long)]
    pub input: Option<PathBuf>,
}

fn read_grid(path: &PathBuf) -> Result<GridFunction> {
    let file = File::open(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    Ok(GridFunction::read_csv(BufReader::new(file))?)
}

impl InputArgs {
    fn load(&self, g: &GridArgs) -> Result<(GridFunction, Anisotropy)> {
        match (&self.func, &self.input) {
            (Some(_), Some(_)) => Err(config_err("give either --fn or --input, not both")),
            (None, Some(path)) => {
                let f = read_grid(path)?;
                let a = g.anisotropy(f.grid().dim())?;
                Ok((f, a))
            }
            (src, None) => {
                let src = src.as_deref().ok_or_else(|| config_err("--fn or --input is required"))?;
                let (grid, a) = g.build()?;
                let f = TestFunction::parse(src)?.sample(&grid, &a)?;
                Ok((f, a))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendKind {
    Snap,
    Exact,
}

fn backend(kind: BackendKind, depth: u32) -> Backend {
    match kind {
        BackendKind::Snap => Backend::Snap,
        BackendKind::Exact => Backend::Exact { depth },
    }
}

fn with_run(mut report: CheckReport, run: &impl Serialize) -> CheckReport {
    let run = serde_json::to_value(run).unwrap_or(Value::Null);
    match &mut report.config {
        Value::Object(m) => {
            m.insert("run".into(), run);
        }
        other => *other = json!({"echo": other.clone(), "run": run}),
    }
    report
}

fn witness_text(r: &CheckReport) -> String {
    let w = r.witness.as_ref().map(|w| serde_json::to_string(w).unwrap_or_default());
    format!("{}: failed; witness {}", r.name, w.unwrap_or_else(|| "none".into()))
}

// maximal

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MaximalOp {
    /// Centered maximal function over the scale ladder.
    M,
    /// Uncentered maximal function over the box family.
    MFamily,
    /// Weighted uncentered maximal function over the box family.
    Mw,
    /// Sharp maximal function.
    Sharp,
    /// `(M |f|^r)^{1/r}`.
    Mr,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct MaximalArgs {
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub family: FamilyArgs,
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum, default_value = "m")]
    pub op: MaximalOp,
    /// Weight for `mw`.
    #[arg(long, default_value = "const:1")]
    pub weight: String,
    /// For `mw`: sup over the whole family without requiring `x ∈ E`; the
    /// result is constant.
    #[arg(long)]
    pub all_boxes: bool,
    /// For `sharp`: `mean` or `abs_mean`.
    #[arg(long, default_value = "mean")]
    pub mode: String,
    /// Exponent for `mr`.
    #[arg(long, default_value_t = 1.0)]
    pub r: f64,
    /// Output grid file; `.json` selects JSON, anything else CSV.
    #[serde(skip)]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run_maximal(args: &MaximalArgs) -> Result<Outcome> {
    let (f, a) = args.input.load(&args.grid)?;
    let grid = f.grid().clone();
    let out = match args.op {
        MaximalOp::M => maximal(&f, &a, &args.family.ladder(&grid, &a)?)?,
        MaximalOp::Mr => maximal_r(&f, args.r, &a, &args.family.ladder(&grid, &a)?)?,
        MaximalOp::Sharp => {
            let mode: SharpMode = args.mode.parse()?;
            sharp_maximal(&f, &a, &args.family.ladder(&grid, &a)?, mode)?
        }
        MaximalOp::MFamily => maximal_over_family(&f, &args.family.family(&grid, &a)?)?,
        MaximalOp::Mw => {
            let w = Weight::parse(&args.weight)?;
            let fam = args.family.family(&grid, &a)?;
            if args.all_boxes {
                weighted_maximal_all_boxes(&f, &w, &fam)?
            } else {
                weighted_maximal(&f, &w, &fam)?
            }
        }
    };
    let json_out = args.out.as_ref().is_some_and(|p| p.extension().is_some_and(|e| e == "json"));
    let bytes = if json_out {
        let mut s = serde_json::to_string_pretty(&out.to_json())?;
        s.push('\n');
        s.into_bytes()
    } else {
        let mut buf = Vec::new();
        out.write_csv(&mut buf)?;
        buf
    };
    emit(args.out.as_deref(), &bytes)?;
    Ok(Outcome::Passed)
}

// norm

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormKind {
    Lp,
    Weak,
    Morrey,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct NormArgs {
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub family: FamilyArgs,
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long = "type", value_enum, default_value = "lp")]
    pub kind: NormKind,
    /// Exponent; `inf` is accepted for `lp`.
    #[arg(long, default_value = "2")]
    pub p: String,
    #[arg(long, default_value_t = 0.0)]
    pub kappa: f64,
    #[arg(long, default_value = "const:1")]
    pub weight: String,
    /// Explicit comma-separated levels for `weak`.
    #[arg(long)]
    pub t_ladder: Option<String>,
    /// Also write the value as JSON.
    #[serde(skip)]
    #[arg(long)]
    pub json: Option<PathBuf>,
}

fn box_text(e: &Parallelepiped) -> String {
    format!("center={:?} t={:?} half_widths={:?}", e.center(), e.t(), e.half_widths())
}

pub fn run_norm(args: &NormArgs) -> Result<Outcome> {
    let (f, a) = args.input.load(&args.grid)?;
    let w = Weight::parse(&args.weight)?;
    let p = parse_real(&args.p)?;
    let (value, argmax) = match args.kind {
        NormKind::Lp => (lp_norm(&f, &w, p, &a)?, None),
        NormKind::Weak => {
            let ladder = args.t_ladder.as_deref().map(parse_list).transpose()?;
            (weak_lp_norm(&f, &w, p, &a, ladder.as_deref())?, None)
        }
        NormKind::Morrey => {
            let fam = args.family.family(f.grid(), &a)?;
            let m = morrey_norm(&f, &w, MorreyParams::new(p, args.kappa)?, &fam)?;
            (m.value, Some(m.argmax))
        }
    };
    let name = match args.kind {
        NormKind::Lp => "lp",
        NormKind::Weak => "weak",
        NormKind::Morrey => "morrey",
    };
    println!("{name} = {value:?}");
    if let Some(e) = &argmax {
        println!("argmax {}", box_text(e));
    }
    if let Some(path) = &args.json {
        let v = json!({"type": name, "value": value, "argmax": argmax, "run": args});
        let mut s = serde_json::to_string_pretty(&v)?;
        s.push('\n');
        crate::output::write_atomic(path, s.as_bytes())?;
    }
    Ok(Outcome::Passed)
}

// apconst

#[derive(Args, Debug, Clone, Serialize)]
pub struct ApArgs {
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub family: FamilyArgs,
    #[arg(long, default_value = "const:1")]
    pub weight: String,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long, value_enum, default_value = "exact")]
    pub backend: BackendKind,
    /// Origin subdivision depth of the exact backend.
    #[arg(long, default_value_t = 6)]
    pub depth: u32,
}

pub fn run_apconst(args: &ApArgs) -> Result<Outcome> {
    let (grid, a) = args.grid.build()?;
    let w = Weight::parse(&args.weight)?;
    let fam = args.family.family(&grid, &a)?;
    let b = backend(args.backend, args.depth);
    if args.p > 1.0 {
        let r = ap_characteristic(&w, args.p, &fam, &grid, b)?;
        println!("A_p = {:?}  (p = {:?}; argmax {})", r.characteristic, args.p, box_text(&r.argmax));
    } else {
        println!("A_p = n/a  (p = {:?}; need p > 1)", args.p);
    }
    let r1 = a1_characteristic(&w, &fam, &grid, b)?;
    println!("A_1 = {:?}  (argmax {})", r1.characteristic, box_text(&r1.argmax));
    match doubling_constants(&w, &fam, &grid, b) {
        Ok(d) => {
            println!("D = {:?}  (argmax {})", d.d, box_text(&d.argmax));
            println!("D_1 = {:?}  (argmin {}; {} pairs, {} skipped)", d.d1, box_text(&d.argmin), d.tested, d.skipped);
        }
        Err(e @ aniso::Error::TooManySkipped { .. }) => {
            println!("D = n/a  ({e})");
            println!("D_1 = n/a");
        }
        Err(e) => return Err(e.into()),
    }
    Ok(Outcome::Passed)
}

// verify

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Check {
    #[value(name = "lemma2-1")]
    Lemma21,
    #[value(name = "lemma2-2")]
    Lemma22,
    ReverseDoubling,
    OperatorNorm,
    WeakMorrey,
    FeffermanStein,
    Remark3,
    RhoScan,
    Jensen,
    Chebyshev,
    Sublinearity,
    MrMonotone,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OpKind {
    M,
    Mw,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct VerifyArgs {
    #[arg(value_enum)]
    pub check: Check,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub family: FamilyArgs,
    /// Test function; repeat for a suite. A seeded random field when omitted.
    #[arg(long = "fn")]
    pub funcs: Vec<String>,
    /// Grid CSV used as the test function for pointwise checks.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Second function for `sublinearity`; a random field with seed + 1 when omitted.
    #[arg(long = "g-fn")]
    pub g_func: Option<String>,
    #[arg(long, default_value = "const:1")]
    pub weight: String,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long, default_value_t = 0.0)]
    pub kappa: f64,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Blocks per axis of the random field.
    #[arg(long, default_value_t = 64)]
    pub blocks: usize,
    #[arg(long, default_value = "2,3,5")]
    pub lambdas: String,
    #[arg(long, value_enum, default_value = "exact")]
    pub backend: BackendKind,
    #[arg(long, default_value_t = 6)]
    pub depth: u32,
    #[arg(long, value_enum, default_value = "mw")]
    pub op: OpKind,
    /// Refinement levels of estimated checks.
    #[arg(long, default_value_t = 2)]
    pub levels: usize,
    /// Report the near and far terms of the 3E split for the worst box.
    #[arg(long = "split-3e")]
    pub split_3e: bool,
    /// Reverse-Hölder exponent `r` checked by predicate.
    #[arg(long)]
    pub reverse_holder_r: Option<f64>,
    #[arg(long, default_value_t = -0.25, allow_negative_numbers = true)]
    pub alpha: f64,
    #[arg(long, default_value = "4096,8192,16384")]
    pub shapes: String,
    #[arg(long, default_value_t = 10000)]
    pub samples: usize,
    #[arg(long, default_value = "const(1)")]
    pub phi: String,
    /// Explicit comma-separated t levels.
    #[arg(long)]
    pub t_ladder: Option<String>,
    /// Exponents for `jensen`.
    #[arg(long, default_value = "1.5,2,3")]
    pub ps: String,
    /// Exponents for `mr-monotone`.
    #[arg(long, default_value = "0.5,1,2,3")]
    pub rs: String,
    /// Report JSON path; stdout when omitted.
    #[serde(skip)]
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// One-row CSV summary path.
    #[serde(skip)]
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

impl VerifyArgs {
    fn suite(&self) -> Result<Vec<TestFunction>> {
        if self.funcs.is_empty() {
            return Ok(vec![TestFunction::Random { seed: self.seed, blocks: self.blocks }]);
        }
        self.funcs.iter().map(|s| Ok(TestFunction::parse(s)?)).collect()
    }

    fn function(&self, grid: &Grid, a: &Anisotropy) -> Result<GridFunction> {
        if let Some(path) = &self.input {
            let f = read_grid(path)?;
            if f.grid() != grid {
                return Err(config_err("--input grid differs from --domain/--shape"));
            }
            return Ok(f);
        }
        Ok(self.suite()?[0].sample(grid, a)?)
    }
}

fn compute_check(args: &VerifyArgs) -> Result<CheckReport> {
    let (grid, a) = args.grid.build()?;
    let w = Weight::parse(&args.weight)?;
    let b = backend(args.backend, args.depth);
    let t_ladder = args.t_ladder.as_deref().map(parse_list).transpose()?;
    let report = match args.check {
        Check::Lemma21 => {
            let fam = args.family.family(&grid, &a)?;
            check_lemma2_1(&w, args.p, &fam, &grid, &parse_list(&args.lambdas)?, b)?
        }
        Check::Lemma22 => {
            let fam = args.family.family(&grid, &a)?;
            check_lemma2_2(&args.function(&grid, &a)?, &w, args.p, &fam)?
        }
        Check::ReverseDoubling => check_reverse_doubling(&w, &args.family.family(&grid, &a)?, &grid, b)?,
        Check::OperatorNorm => {
            let op = match args.op {
                OpKind::M => OperatorKind::Centered,
                OpKind::Mw => OperatorKind::Weighted,
            };
            let mut cfg = OperatorNormConfig::new(op, w, MorreyParams::new(args.p, args.kappa)?, a, grid);
            cfg.levels = args.levels;
            cfg.stride = args.family.stride;
            cfg.q = args.family.q;
            cfg.ladder_q = args.family.ladder_q;
            cfg.split_3e = args.split_3e;
            cfg.reverse_holder_r = args.reverse_holder_r;
            estimate_operator_norm(&cfg, &args.suite()?)?
        }
        Check::WeakMorrey => {
            let mut cfg = WeakMorreyConfig::new(w, args.kappa, a, grid);
            cfg.levels = args.levels;
            cfg.stride = args.family.stride;
            cfg.q = args.family.q;
            cfg.ladder_q = args.family.ladder_q;
            cfg.t_ladder = t_ladder;
            check_weak_morrey(&cfg, &args.suite()?[0])?
        }
        Check::FeffermanStein => fefferman_stein_constant(
            &args.suite()?[0],
            &TestFunction::parse(&args.phi)?,
            &a,
            &grid,
            args.levels,
            args.family.ladder_q,
            t_ladder.as_deref(),
        )?,
        Check::Remark3 => counterexample_remark3(args.alpha, &parse_shape(&args.shapes)?)?,
        Check::RhoScan => rho_equivalence_scan(&a, args.samples, args.seed)?,
        Check::Jensen => check_jensen(&w, &parse_list(&args.ps)?, &args.family.family(&grid, &a)?, &grid)?,
        Check::Chebyshev => check_chebyshev(&args.function(&grid, &a)?, &w, args.p, &a)?,
        Check::Sublinearity => {
            let f = args.function(&grid, &a)?;
            let g = match &args.g_func {
                Some(s) => TestFunction::parse(s)?.sample(&grid, &a)?,
                None => random_field(&grid, args.seed.wrapping_add(1), args.blocks),
            };
            check_sublinearity(&f, &g, &a, &args.family.ladder(&grid, &a)?)?
        }
        Check::MrMonotone => {
            let f = args.function(&grid, &a)?;
            check_mr_monotone(&f, &parse_list(&args.rs)?, &a, &args.family.ladder(&grid, &a)?)?
        }
    };
    Ok(with_run(report, args))
}

pub fn run_verify(args: &VerifyArgs) -> Result<Outcome> {
    let report = compute_check(args)?;
    let mut text = report.to_json();
    text.push('\n');
    emit(args.json.as_deref(), text.as_bytes())?;
    if let Some(path) = &args.csv {
        let mut buf = Vec::new();
        write_csv_summary(std::slice::from_ref(&report), &mut buf)?;
        crate::output::write_atomic(path, &buf)?;
    }
    if report.passed() {
        Ok(Outcome::Passed)
    } else {
        eprintln!("{}", witness_text(&report));
        Ok(Outcome::CheckFailed)
    }
}

// suite

#[derive(Args, Debug, Clone, Serialize)]
pub struct SuiteArgs {
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Cells of the 1-D base grid.
    #[arg(long, default_value_t = 1024)]
    pub cells: usize,
    /// Reports JSON path; stdout when omitted.
    #[serde(skip)]
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// CSV summary path, one row per check.
    #[serde(skip)]
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

pub fn run_suite_cmd(args: &SuiteArgs) -> Result<Outcome> {
    if args.cells < 16 {
        return Err(config_err("--cells must be at least 16"));
    }
    let reports = run_suite(SuiteOptions { seed: args.seed, cells: args.cells })?;
    let mut text = serde_json::to_string_pretty(&reports)?;
    text.push('\n');
    emit(args.json.as_deref(), text.as_bytes())?;
    if let Some(path) = &args.csv {
        let mut buf = Vec::new();
        write_csv_summary(&reports, &mut buf)?;
        crate::output::write_atomic(path, &buf)?;
    }
    let failed: Vec<&CheckReport> = reports.iter().filter(|r| !r.passed()).collect();
    for r in &failed {
        eprintln!("{}", witness_text(r));
    }
    Ok(if failed.is_empty() { Outcome::Passed } else { Outcome::CheckFailed })
}

// plot

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum LogAxes {
    None,
    X,
    Y,
    Xy,
}

#[derive(Args, Debug, Clone)]
pub struct PlotArgs {
    /// 1-D grid CSV to draw.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Report JSON (one report or an array); draws constant against t_min
    /// for every report with a refinement history. Repeatable.
    #[arg(long)]
    pub report: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "none")]
    pub log: LogAxes,
    #[arg(long)]
    pub title: Option<String>,
}

fn history_series(v: &Value, out: &mut Vec<Series>) {
    match v {
        Value::Array(items) => items.iter().for_each(|i| history_series(i, out)),
        Value::Object(m) => {
            let Some(Value::Array(h)) = m.get("history") else { return };
            let points: Vec<(f64, f64)> = h
                .iter()
                .filter_map(|e| Some((e.get("t_min")?.as_f64()?, e.get("constant")?.as_f64()?)))
                .collect();
            if !points.is_empty() {
                let label = m.get("name").and_then(Value::as_str).unwrap_or("report").to_string();
                out.push(Series { label, points });
            }
        }
        _ => {}
    }
}

pub fn run_plot(args: &PlotArgs) -> Result<Outcome> {
    let mut series = Vec::new();
    let mut title = String::new();
    if let Some(path) = &args.input {
        let f = read_grid(path)?;
        if f.grid().dim() != 1 {
            bail!(ConfigError(format!("{}: only 1-D grids can be plotted", path.display())));
        }
        let points = (0..f.grid().len()).map(|i| (f.grid().center_of(i)[0], f.values()[i])).collect();
        let label = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        title = label.clone();
        series.push(Series { label, points });
    }
    for path in &args.report {
        let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        let v: Value = serde_json::from_str(&text)
            .map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        history_series(&v, &mut series);
        if title.is_empty() {
            title = "refinement history".into();
        }
    }
    if series.is_empty() {
        return Err(config_err("nothing to plot: give --input or a --report with a history"));
    }
    let opts = PlotOptions {
        log_x: matches!(args.log, LogAxes::X | LogAxes::Xy),
        log_y: matches!(args.log, LogAxes::Y | LogAxes::Xy),
    };
    let svg = render(args.title.as_deref().unwrap_or(&title), &series, opts);
    crate::output::write_atomic(&args.out, svg.as_bytes()).context("writing plot")?;
    Ok(Outcome::Passed)
}
