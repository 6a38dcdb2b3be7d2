//! Argument definitions and the body of each subcommand.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use contractlab::fixtures::{
    golden_ratio_instance, golden_ratio_mne, random_instance, separation_example, separation_mne,
    subadditive_gap_instance, subadditive_gap_mne, supermodular_gap_cce, supermodular_gap_instance,
    RandomKind, RandomSpec,
};
use contractlab::solvers::grid::grid_contracts;
use contractlab::{
    format_scalar, grid_search_cells, int, is_cce, is_cce_tol, is_ce, is_ce_tol, is_dropout_stable,
    is_dropout_stable_tol, is_mne, is_mne_tol, lift_subadditive, lift_xos, parse_scalar,
    principal_utility, ratio, robustify_submodular, to_f64, worst_cce, ActionProfile, Contract,
    Instance, JointDistribution, Limits, Objective, ProductDistribution, Scalar, Verdict,
};
use num_traits::{Signed, Zero};
use serde_json::{json, Value};

use crate::files::{
    emit_contract, emit_distribution, emit_instance, emit_profile, emit_scalar, parse_contract,
    parse_distribution, parse_instance, parse_profile, to_text, Distribution, DistributionFile,
};
use crate::{reproduce, CliError, Outcome};

type Run = Result<Outcome, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "contractlab",
    version,
    about = "Linear contracts for teams of agents"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check an equilibrium concept for a profile or distribution.
    Verify(VerifyArgs),
    /// Turn a correlated equilibrium into a contract with a pure equilibrium.
    Lift(LiftArgs),
    /// Make a pure equilibrium's utility hold in every coarse correlated equilibrium.
    Robustify(RobustifyArgs),
    /// Recompute a reference value and compare it with the expected one.
    Reproduce(ReproduceArgs),
    /// Best and worst equilibrium benchmarks over a contract grid.
    GapReport(GapArgs),
    /// Report which reward classes the instance belongs to.
    Classify(ClassifyArgs),
    /// Emit a reference or random instance.
    Gen(GenArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Concept {
    Pne,
    Mne,
    Ce,
    Cce,
    Dropout,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub instance: PathBuf,
    /// Shares such as `37/40,1/18`; defaults to the distribution file's contract.
    #[arg(long)]
    pub contract: Option<String>,
    #[arg(long, conflicts_with = "profile")]
    pub distribution: Option<PathBuf>,
    /// A single profile such as `0,2`; empty for the empty profile.
    #[arg(long)]
    pub profile: Option<String>,
    #[arg(long, value_enum)]
    pub concept: Concept,
    /// Slack allowed in each inequality.
    #[arg(long)]
    pub tolerance: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum LiftMode {
    Xos,
    Subadditive,
}

#[derive(Debug, Args)]
pub struct LiftArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long)]
    pub contract: Option<String>,
    #[arg(long)]
    pub distribution: PathBuf,
    #[arg(long, value_enum, default_value = "xos")]
    pub mode: LiftMode,
    /// Writes the output contract and PNE as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RobustifyArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long)]
    pub contract: String,
    /// The PNE of `--contract`, such as `0,1`.
    #[arg(long)]
    pub profile: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    /// A claim id, or `all`.
    #[arg(required_unless_present = "list")]
    pub claim: Option<String>,
    #[arg(long)]
    pub list: bool,
}

#[derive(Debug, Args)]
pub struct GapArgs {
    #[arg(long)]
    pub instance: PathBuf,
    /// Grid step count: shares range over multiples of 1/r.
    #[arg(long)]
    pub resolution: Option<u32>,
    /// Extra contracts, each like `1/36,1/36`.
    #[arg(long = "cell")]
    pub cells: Vec<String>,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "best_pne,best_cce,worst_cce"
    )]
    pub concepts: Vec<String>,
    /// Writes the full report as JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub instance: PathBuf,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[command(subcommand)]
    pub what: GenCommand,
}

#[derive(Debug, Subcommand)]
pub enum GenCommand {
    /// A reference instance: separation, supermodular-gap, subadditive-gap or golden-ratio.
    Fixture {
        name: String,
        /// `n` for subadditive-gap, digits for golden-ratio.
        #[arg(long)]
        param: Option<u32>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also writes the fixture's reference equilibrium here.
        #[arg(long)]
        equilibrium: Option<PathBuf>,
    },
    /// A seeded random instance.
    Random {
        #[arg(long)]
        kind: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Actions per agent, such as `1,2,1`.
        #[arg(long, value_delimiter = ',', default_value = "1,1,1")]
        sizes: Vec<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Reads `CONTRACTLAB_CAP`: a bare integer sets the enumeration bit cap;
/// otherwise a comma list of `enumeration_bits=`, `lp_profiles=` and
/// `classify_bits=` assignments.
pub fn parse_caps(text: &str) -> Result<Limits, CliError> {
    let mut limits = Limits::default();
    let bad = || CliError::parse(format!("CONTRACTLAB_CAP: cannot read \"{text}\""));
    if let Ok(bits) = text.trim().parse::<u32>() {
        limits.enumeration_bits = bits;
        return Ok(limits);
    }
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (key, value) = part.split_once('=').ok_or_else(bad)?;
        let value = value.trim();
        match key.trim() {
            "enumeration_bits" => limits.enumeration_bits = value.parse().map_err(|_| bad())?,
            "lp_profiles" => limits.lp_profiles = value.parse().map_err(|_| bad())?,
            "classify_bits" => limits.classify_bits = value.parse().map_err(|_| bad())?,
            _ => return Err(bad()),
        }
    }
    Ok(limits)
}

pub fn run(cli: Cli, limits: Limits) -> Run {
    match cli.command {
        Command::Verify(a) => verify(&a, limits),
        Command::Lift(a) => lift(&a, limits),
        Command::Robustify(a) => robustify(&a, limits),
        Command::Reproduce(a) => reproduce_cmd(&a),
        Command::GapReport(a) => gap_report(&a, limits),
        Command::Classify(a) => classify(&a, limits),
        Command::Gen(a) => generate(&a.what),
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::parse(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::failed(format!("{}: {e}", path.display())))
}

fn load_instance(path: &Path, limits: Limits) -> Result<Instance, CliError> {
    Ok(parse_instance(&read(path)?)?.with_limits(limits))
}

fn load_distribution(path: &Path) -> Result<DistributionFile, CliError> {
    parse_distribution(&read(path)?)
}

fn support_cap(inst: &Instance) -> u64 {
    1u64 << inst.limits().enumeration_bits.min(63)
}

/// `--contract` if given, else the one stored with the distribution.
fn pick_contract(
    flag: Option<&str>,
    file: Option<&DistributionFile>,
) -> Result<Contract, CliError> {
    match (flag, file.and_then(|f| f.contract.clone())) {
        (Some(text), _) => parse_contract(text),
        (None, Some(a)) => Ok(a),
        (None, None) => Err(CliError::parse(
            "no contract: pass --contract or store one in the distribution file",
        )),
    }
}

/// `x` with a four-place decimal alongside unless it is an integer.
pub fn show(x: &Scalar) -> String {
    if x.is_integer() {
        format_scalar(x)
    } else {
        format!("{} ({:.4})", format_scalar(x), to_f64(x))
    }
}

fn point_product(inst: &Instance, s: &ActionProfile) -> Result<ProductDistribution, CliError> {
    inst.check_profile(s)?;
    Ok(ProductDistribution::new(
        (0..inst.n())
            .map(|i| vec![(inst.slice(s, i), int(1))])
            .collect(),
    )?)
}

fn single_profile(d: &Distribution) -> Option<ActionProfile> {
    match d {
        Distribution::Joint(j) if j.support().len() == 1 => Some(j.support()[0].0.clone()),
        Distribution::Product(p) if p.agents().iter().all(|a| a.len() == 1) => Some(
            p.agents()
                .iter()
                .fold(ActionProfile::empty(), |s, a| s.union(&a[0].0)),
        ),
        _ => None,
    }
}

fn verify(args: &VerifyArgs, limits: Limits) -> Run {
    let inst = load_instance(&args.instance, limits)?;
    let file = args
        .distribution
        .as_deref()
        .map(load_distribution)
        .transpose()?;
    let a = pick_contract(args.contract.as_deref(), file.as_ref())?;
    let tol = args
        .tolerance
        .as_deref()
        .map(|t| parse_scalar(t).map_err(|e| CliError::parse(format!("tolerance: {e}"))))
        .transpose()?;
    let dist = match (&args.profile, file) {
        (Some(p), _) => Distribution::Joint(JointDistribution::point(parse_profile(p)?)),
        (None, Some(f)) => f.distribution,
        (None, None) => return Err(CliError::parse("pass --profile or --distribution")),
    };
    let product = |d: &Distribution| -> Result<ProductDistribution, CliError> {
        match (d, single_profile(d)) {
            (Distribution::Product(p), _) => Ok(p.clone()),
            (_, Some(s)) => point_product(&inst, &s),
            _ => Err(CliError::parse(
                "a correlated distribution cannot be checked as a mixed equilibrium",
            )),
        }
    };
    let verdict: Verdict = match args.concept {
        Concept::Pne => {
            let s = single_profile(&dist)
                .ok_or_else(|| CliError::parse("pne needs a single profile"))?;
            let p = point_product(&inst, &s)?;
            match &tol {
                Some(t) => is_mne_tol(&inst, &p, &a, t)?,
                None => is_mne(&inst, &p, &a)?,
            }
        }
        Concept::Mne => {
            let p = product(&dist)?;
            match &tol {
                Some(t) => is_mne_tol(&inst, &p, &a, t)?,
                None => is_mne(&inst, &p, &a)?,
            }
        }
        concept => {
            let d = match &dist {
                Distribution::Joint(j) => j.clone(),
                Distribution::Product(p) => p.to_joint(support_cap(&inst))?,
            };
            match (concept, &tol) {
                (Concept::Ce, Some(t)) => is_ce_tol(&inst, &d, &a, t)?,
                (Concept::Ce, None) => is_ce(&inst, &d, &a)?,
                (Concept::Cce, Some(t)) => is_cce_tol(&inst, &d, &a, t)?,
                (Concept::Cce, None) => is_cce(&inst, &d, &a)?,
                (_, Some(t)) => is_dropout_stable_tol(&inst, &d, &a, t)?,
                (_, None) => is_dropout_stable(&inst, &d, &a)?,
            }
        }
    };
    let name = format!("{:?}", args.concept).to_lowercase();
    let mut out = String::new();
    match &verdict.violation {
        None => writeln!(out, "{name} holds at contract {a}").unwrap(),
        Some(v) => {
            writeln!(out, "{name} fails at contract {a}").unwrap();
            match &v.recommendation {
                Some(r) => writeln!(
                    out,
                    "  agent {} told {} deviates to {}",
                    v.agent, r, v.deviation
                )
                .unwrap(),
                None => writeln!(out, "  agent {} deviates to {}", v.agent, v.deviation).unwrap(),
            }
            writeln!(out, "  following: {}", show(&v.equilibrium_side)).unwrap();
            writeln!(out, "  deviating: {}", show(&v.deviation_side)).unwrap();
        }
    }
    Ok(Outcome::new(verdict.holds(), out))
}

fn ratio_text(num: &Scalar, den: &Scalar) -> (Option<Scalar>, String) {
    if den.is_zero() {
        (None, "undefined (zero benchmark)".into())
    } else {
        let r = num / den;
        let text = show(&r);
        (Some(r), text)
    }
}

fn lift(args: &LiftArgs, limits: Limits) -> Run {
    let inst = load_instance(&args.instance, limits)?;
    let file = load_distribution(&args.distribution)?;
    let a = pick_contract(args.contract.as_deref(), Some(&file))?;
    let d = file.distribution.to_joint(support_cap(&inst))?;
    let result = match args.mode {
        LiftMode::Xos => lift_xos(&inst, &a, &d)?,
        LiftMode::Subadditive => lift_subadditive(&inst, &a, &d)?,
    };
    let (_, achieved) = ratio_text(&result.principal_utility, &result.benchmark);
    let mut out = String::new();
    writeln!(out, "case {}", result.case).unwrap();
    writeln!(out, "contract {}", result.contract).unwrap();
    writeln!(out, "pne {}", result.pne).unwrap();
    writeln!(out, "principal utility {}", show(&result.principal_utility)).unwrap();
    writeln!(out, "input utility {}", show(&result.benchmark)).unwrap();
    writeln!(out, "achieved ratio {achieved}").unwrap();
    writeln!(
        out,
        "claimed ratio {}",
        format_scalar(&result.claimed_ratio)
    )
    .unwrap();
    if let Some(path) = &args.out {
        let doc = json!({
            "benchmark": emit_scalar(&result.benchmark),
            "case": result.case.to_string(),
            "claimed_ratio": emit_scalar(&result.claimed_ratio),
            "contract": emit_contract(&result.contract),
            "pne": emit_profile(&result.pne),
            "principal_utility": emit_scalar(&result.principal_utility),
        });
        write(path, &to_text(&doc))?;
    }
    Ok(Outcome::new(result.meets_claim(), out))
}

fn robustify(args: &RobustifyArgs, limits: Limits) -> Run {
    let inst = load_instance(&args.instance, limits)?;
    let a_star = parse_contract(&args.contract)?;
    let s_star = parse_profile(&args.profile)?;
    inst.check_profile(&s_star)?;
    let result = robustify_submodular(&inst, &a_star, &s_star)?;
    let worst = worst_cce(&inst, &result.contract)?;
    let input = principal_utility(&inst, &s_star, &a_star)?;
    let (r, achieved) = ratio_text(&worst.principal_utility, &input);
    let floor = ratio(1, 224);
    let passed = match &r {
        Some(r) => *r >= floor,
        None => !worst.principal_utility.is_negative(),
    };
    let mut out = String::new();
    writeln!(out, "case {}", result.case).unwrap();
    writeln!(out, "contract {}", result.contract).unwrap();
    writeln!(
        out,
        "worst cce expected reward {}",
        show(&worst.expected_reward)
    )
    .unwrap();
    writeln!(out, "worst cce utility {}", show(&worst.principal_utility)).unwrap();
    writeln!(out, "input utility {}", show(&input)).unwrap();
    writeln!(out, "achieved ratio {achieved}").unwrap();
    writeln!(
        out,
        "claimed ratio {}",
        format_scalar(&result.claimed_ratio)
    )
    .unwrap();
    if !passed {
        writeln!(out, "ratio is below 1/224").unwrap();
    }
    if let Some(path) = &args.out {
        let doc = json!({
            "case": result.case.to_string(),
            "claimed_ratio": emit_scalar(&result.claimed_ratio),
            "contract": emit_contract(&result.contract),
            "input_utility": emit_scalar(&input),
            "worst_cce": emit_distribution(&DistributionFile {
                distribution: Distribution::Joint(worst.distribution.clone()),
                contract: Some(result.contract.clone()),
            }),
            "worst_cce_utility": emit_scalar(&worst.principal_utility),
        });
        write(path, &to_text(&doc))?;
    }
    Ok(Outcome::new(passed, out))
}

fn reproduce_cmd(args: &ReproduceArgs) -> Run {
    if args.list {
        let mut out = String::new();
        for c in reproduce::registry() {
            writeln!(out, "{:<26} {}", c.id, c.summary).unwrap();
        }
        return Ok(Outcome::new(true, out));
    }
    let id = args.claim.as_deref().unwrap_or("all");
    reproduce::run(id)
}

fn classify(args: &ClassifyArgs, limits: Limits) -> Run {
    let inst = load_instance(&args.instance, limits)?;
    let c = inst.reward().classify(inst.limits())?;
    let yes = |b: bool| if b { "yes" } else { "no" };
    let mut out = String::new();
    for (name, flag) in [
        ("normalized", c.normalized),
        ("monotone", c.monotone),
        ("additive", c.additive),
        ("submodular", c.submodular),
        ("xos", c.xos),
        ("subadditive", c.subadditive),
        ("supermodular", c.supermodular),
    ] {
        writeln!(out, "{name:<13}{}", yes(flag)).unwrap();
    }
    Ok(Outcome::new(true, out))
}

fn cell_json(contract: &Contract, reward: &Scalar, utility: &Scalar) -> Value {
    json!({
        "contract": emit_contract(contract),
        "expected_reward": emit_scalar(reward),
        "principal_utility": emit_scalar(utility),
    })
}

fn gap_report(args: &GapArgs, limits: Limits) -> Run {
    let inst = load_instance(&args.instance, limits)?;
    let objectives = args
        .concepts
        .iter()
        .map(|c| {
            Objective::parse(c.trim()).ok_or_else(|| {
                CliError::parse(format!(
                    "unknown concept \"{c}\" (expected best_pne, best_cce, worst_cce or best_ce)"
                ))
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut contracts = match args.resolution {
        Some(r) => grid_contracts(inst.n(), r)?,
        None => Vec::new(),
    };
    for text in &args.cells {
        let a = parse_contract(text)?;
        inst.check_contract(&a)?;
        if !contracts.contains(&a) {
            contracts.push(a);
        }
    }
    if contracts.is_empty() {
        return Err(CliError::parse("pass --resolution, --cell, or both"));
    }
    let reports = objectives
        .iter()
        .map(|&o| grid_search_cells(&inst, &contracts, o))
        .collect::<Result<Vec<_>, _>>()?;
    let pne_best = reports
        .iter()
        .find(|r| r.objective == Objective::BestPne)
        .map(|r| r.best_cell().principal_utility.clone());

    let mut rows = vec![[
        "concept".to_string(),
        "best utility".to_string(),
        "at contract".to_string(),
        "vs best_pne".to_string(),
    ]];
    let mut concepts = Vec::new();
    for report in &reports {
        let best = report.best_cell();
        let vs = match &pne_best {
            Some(p) if p.is_positive() => Some(&best.principal_utility / p),
            _ => None,
        };
        rows.push([
            report.objective.name().to_string(),
            show(&best.principal_utility),
            best.contract.to_string(),
            vs.as_ref().map_or_else(|| "-".to_string(), show),
        ]);
        concepts.push(json!({
            "best": cell_json(&best.contract, &best.expected_reward, &best.principal_utility),
            "cells": report
                .cells
                .iter()
                .map(|c| cell_json(&c.contract, &c.expected_reward, &c.principal_utility))
                .collect::<Vec<_>>(),
            "concept": report.objective.name(),
            "ratio_to_best_pne": vs.as_ref().map(emit_scalar),
        }));
    }
    let mut widths = [0usize; 4];
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    writeln!(
        out,
        "{} agents, {} actions, {} contracts{}",
        inst.n(),
        inst.m(),
        contracts.len(),
        args.resolution
            .map_or_else(String::new, |r| format!(" (grid r = {r})"))
    )
    .unwrap();
    for row in &rows {
        let line: Vec<String> = row
            .iter()
            .zip(widths)
            .map(|(cell, w)| format!("{cell:<w$}"))
            .collect();
        writeln!(out, "{}", line.join("  ").trim_end()).unwrap();
    }
    if let Some(path) = &args.json {
        let doc = json!({
            "concepts": concepts,
            "contracts": contracts.len(),
            "resolution": args.resolution,
        });
        write(path, &to_text(&doc))?;
    }
    Ok(Outcome::new(true, out))
}

fn emit_or_write(doc: &Value, out: Option<&Path>) -> Run {
    let text = to_text(doc);
    match out {
        Some(path) => {
            write(path, &text)?;
            Ok(Outcome::new(true, format!("wrote {}\n", path.display())))
        }
        None => Ok(Outcome::new(true, text)),
    }
}

fn fixture(name: &str, param: Option<u32>) -> Result<(Instance, DistributionFile), CliError> {
    let joint = |(a, d): (Contract, JointDistribution)| DistributionFile {
        distribution: Distribution::Joint(d),
        contract: Some(a),
    };
    let product = |(a, p): (Contract, ProductDistribution)| DistributionFile {
        distribution: Distribution::Product(p),
        contract: Some(a),
    };
    Ok(match name {
        "separation" => (separation_example(), product(separation_mne())),
        "supermodular-gap" => (supermodular_gap_instance(), joint(supermodular_gap_cce())),
        "subadditive-gap" => {
            let n = param.unwrap_or(4) as usize;
            (subadditive_gap_instance(n)?, product(subadditive_gap_mne(n)?))
        }
        "golden-ratio" => {
            let digits = param.unwrap_or(50);
            (golden_ratio_instance(digits)?, product(golden_ratio_mne(digits)?))
        }
        other => {
            return Err(CliError::parse(format!(
                "unknown fixture \"{other}\" (expected separation, supermodular-gap, subadditive-gap or golden-ratio)"
            )))
        }
    })
}

fn generate(what: &GenCommand) -> Run {
    match what {
        GenCommand::Fixture {
            name,
            param,
            out,
            equilibrium,
        } => {
            let (inst, eq) = fixture(name, *param)?;
            if let Some(path) = equilibrium {
                write(path, &to_text(&emit_distribution(&eq)))?;
            }
            emit_or_write(&emit_instance(&inst), out.as_deref())
        }
        GenCommand::Random {
            kind,
            seed,
            sizes,
            out,
        } => {
            let kind = RandomKind::parse(kind).ok_or_else(|| {
                CliError::parse(format!(
                    "unknown kind \"{kind}\" (expected additive, coverage, xos, supermodular or table)"
                ))
            })?;
            let inst = random_instance(&RandomSpec::new(kind, *seed, sizes.clone()))?;
            emit_or_write(&emit_instance(&inst), out.as_deref())
        }
    }
}
