mod error;

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};

use syllogic::assistant::{
    dump_hints, Assistant, FileAssistant, NoiseProfile, NoisyAssistant, OracleAssistant, RemoteAssistant,
    RemoteConfig, ENDPOINT_ENV,
};
use syllogic::bench::{emit_report, run_bench, sample_slate, BenchPlan, ReportFormat};
use syllogic::dataset::{export_dataset, ExportOptions, Part, SplitKind, SplitSpec, Task};
use syllogic::formula::Formula;
use syllogic::generate::{batch_seed, generate_kb, kb_stats, GenParams, Preset};
use syllogic::hybrid::hybrid_run;
use syllogic::inference::{chain_length_of, enumerate_minimal};
use syllogic::kb::KnowledgeBase;
use syllogic::proof::{check_proof, dump_proof, parse_proof};
use syllogic::prover::{prove, Outcome, ProverConfig, SearchState, StepReport, DEFAULT_BUDGET};

use error::{CliError, Kind};

const REPORT_SCHEMA: &str = "syllogic-step-report/1";

type Result<T> = std::result::Result<T, CliError>;

/// Syllogistic knowledge bases, provers and benchmarks.
#[derive(Parser)]
#[command(name = "syllogic", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate knowledge base files.
    GenKb(GenKbArgs),
    /// Print the minimal inferences of a knowledge base.
    Enum(EnumArgs),
    /// Write a JSONL dataset and its manifest.
    ExportDataset(ExportArgs),
    /// Prove one hypothesis, with or without an assistant.
    Prove(ProveArgs),
    /// Check a proof dump against a knowledge base.
    CheckProof(CheckArgs),
    /// Run a benchmark plan.
    Bench(BenchArgs),
    /// Write oracle answers for every hypothesis to a hint file.
    DumpHints(DumpHintsArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetArg {
    Mixed,
    Short,
    Long,
    Small,
}

impl From<PresetArg> for Preset {
    fn from(p: PresetArg) -> Preset {
        match p {
            PresetArg::Mixed => Preset::Mixed,
            PresetArg::Short => Preset::Short,
            PresetArg::Long => Preset::Long,
            PresetArg::Small => Preset::Small,
        }
    }
}

#[derive(Args)]
struct GenKbArgs {
    /// Output directory; files are named `<id>.kb`.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "mixed")]
    preset: PresetArg,
    /// TOML file with generator parameters; replaces the preset.
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long)]
    num_subgraphs: Option<usize>,
    #[arg(long)]
    min_chain_len: Option<usize>,
    #[arg(long)]
    max_chain_len: Option<usize>,
    #[arg(long)]
    a_per_subgraph: Option<usize>,
    #[arg(long)]
    e_edges: Option<usize>,
    #[arg(long)]
    i_edges: Option<usize>,
    #[arg(long)]
    o_edges: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum EnumFormat {
    Text,
    Json,
}

#[derive(Args)]
struct EnumArgs {
    #[arg(long)]
    kb: PathBuf,
    #[arg(long, value_enum, default_value = "text")]
    format: EnumFormat,
}

#[derive(Clone, Copy, ValueEnum)]
enum TaskArg {
    PremiseSelection,
    ProofByContradiction,
}

#[derive(Clone, Copy, ValueEnum)]
enum SplitArg {
    Overall,
    Compositional,
    Recursive,
}

#[derive(Clone, Copy, ValueEnum)]
enum PartArg {
    Train,
    Test,
}

#[derive(Args)]
struct ExportArgs {
    /// KB files. The split is computed over all of them.
    #[arg(long, required = true, num_args = 1..)]
    kb: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "premise-selection")]
    task: TaskArg,
    #[arg(long, value_enum, default_value = "overall")]
    split: SplitArg,
    #[arg(long, value_enum, default_value = "train")]
    part: PartArg,
    #[arg(long, default_value_t = 1)]
    subs: usize,
    #[arg(long, default_value_t = 1)]
    perms: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// JSONL records.
    #[arg(long)]
    out: PathBuf,
    /// Defaults to `<out>.manifest.json`.
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AssistantArg {
    /// Plain search.
    None,
    Oracle,
    Noisy,
    File,
    Remote,
}

#[derive(Clone, Copy, ValueEnum)]
enum NoisePreset {
    Perfect,
    T5Compositional,
    T5Overall,
}

#[derive(Args)]
struct ProveArgs {
    #[arg(long)]
    kb: PathBuf,
    /// Symbolic form, e.g. "A x1 x2".
    #[arg(long)]
    hypothesis: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: u64,
    #[arg(long, value_enum, default_value = "none")]
    assistant: AssistantArg,
    /// Hint file for `--assistant file`.
    #[arg(long)]
    hints: Option<PathBuf>,
    /// URL for `--assistant remote`; falls back to the environment variable
    /// SYLLOGIC_ASSISTANT_URL.
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long, default_value_t = 30_000)]
    timeout_ms: u64,
    #[arg(long, value_enum, default_value = "t5-compositional")]
    noise: NoisePreset,
    /// TOML noise profile; replaces `--noise`.
    #[arg(long)]
    noise_profile: Option<PathBuf>,
    /// Defaults to `--seed`.
    #[arg(long)]
    noise_seed: Option<u64>,
    #[arg(long)]
    no_failure_cache: bool,
    /// Print the proof dump instead of the report.
    #[arg(long)]
    emit_proof: bool,
    /// Also write the report CSV here.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long)]
    kb: PathBuf,
    /// Proof dump, `-` for stdin.
    #[arg(long)]
    proof: PathBuf,
    /// Defaults to the proof's own conclusion.
    #[arg(long)]
    hypothesis: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Args)]
struct BenchArgs {
    /// TOML plan. Paths inside it resolve against its directory.
    #[arg(long)]
    plan: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
    /// Exit 0 even when some runs exceed the budget.
    #[arg(long)]
    allow_failures: bool,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    repetitions: Option<usize>,
    #[arg(long)]
    budget: Option<u64>,
    #[arg(long)]
    per_type_samples: Option<usize>,
    #[arg(long)]
    min_chain_len: Option<usize>,
}

#[derive(Args)]
struct DumpHintsArgs {
    #[arg(long, required = true, num_args = 1..)]
    kb: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let r = match cli.command {
        Command::GenKb(a) => gen_kb(a),
        Command::Enum(a) => enumerate(a),
        Command::ExportDataset(a) => export(a),
        Command::Prove(a) => prove_cmd(a),
        Command::CheckProof(a) => check(a),
        Command::Bench(a) => bench(a),
        Command::DumpHints(a) => dump(a),
    };
    match r {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.line());
            ExitCode::from(e.kind.code() as u8)
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::new(Kind::Io, format!("{}: {e}", path.display())))
}

fn read_text(path: &Path) -> Result<String> {
    if path == Path::new("-") {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s)?;
        return Ok(s);
    }
    std::fs::read_to_string(path).map_err(|e| CliError::new(Kind::Io, format!("{}: {e}", path.display())))
}

fn read_kbs(paths: &[PathBuf]) -> Result<Vec<KnowledgeBase>> {
    paths.iter().map(|p| Ok(KnowledgeBase::read(p)?)).collect()
}

fn parse_formula(kb: &KnowledgeBase, text: &str) -> Result<Formula> {
    kb.parse(text).map_err(|e| CliError::new(Kind::Formula, format!("`{text}`: {e}")))
}

fn params_file(path: &Path) -> Result<GenParams> {
    let mut doc: toml::Table = read_text(path)?
        .parse()
        .map_err(|e| CliError::new(Kind::Gen, format!("{}: {e}", path.display())))?;
    doc.entry("seed").or_insert_with(|| "0".into());
    doc.try_into().map_err(|e| CliError::new(Kind::Gen, format!("{}: {e}", path.display())))
}

fn gen_kb(a: GenKbArgs) -> Result<()> {
    let base = a.params.as_deref().map(params_file).transpose()?;
    std::fs::create_dir_all(&a.out)?;
    let mut out = std::io::stdout().lock();
    for i in 0..a.count {
        let seed = batch_seed(a.seed, i);
        let mut p = match &base {
            Some(b) => GenParams { seed, ..b.clone() },
            None => Preset::from(a.preset).params(i, seed),
        };
        let overrides = [
            (&mut p.num_subgraphs, a.num_subgraphs),
            (&mut p.min_chain_len, a.min_chain_len),
            (&mut p.max_chain_len, a.max_chain_len),
            (&mut p.a_per_subgraph, a.a_per_subgraph),
            (&mut p.e_edges, a.e_edges),
            (&mut p.i_edges, a.i_edges),
            (&mut p.o_edges, a.o_edges),
        ];
        for (field, v) in overrides {
            if let Some(v) = v {
                *field = v;
            }
        }
        let kb = generate_kb(&p)?;
        let path = a.out.join(format!("{}.kb", kb.id));
        kb.write(&path)?;
        let stats = kb_stats(&kb);
        writeln!(
            out,
            "{}\tpremises={}\thypotheses={}",
            path.display(),
            stats.premises,
            stats.total_hypotheses()
        )?;
    }
    Ok(())
}

fn enumerate(a: EnumArgs) -> Result<()> {
    let kb = KnowledgeBase::read(&a.kb)?;
    let mut infs = enumerate_minimal(&kb);
    infs.sort_by_key(|i| (i.syllogism_type, chain_length_of(i), i.conclusion));
    let mut out = std::io::stdout().lock();
    match a.format {
        EnumFormat::Json => {
            for inf in &infs {
                let line = serde_json::json!({
                    "type": inf.syllogism_type,
                    "chain_length": chain_length_of(inf),
                    "chain_lengths": inf.chain_lengths,
                    "premises": inf.premises.iter().map(|f| kb.format(*f)).collect::<Vec<_>>(),
                    "conclusion": kb.format(inf.conclusion),
                });
                writeln!(out, "{line}")?;
            }
        }
        EnumFormat::Text => {
            writeln!(out, "type\tlength\tconclusion\tpremises")?;
            for inf in &infs {
                let premises: Vec<String> = inf.premises.iter().map(|f| kb.format(*f)).collect();
                writeln!(
                    out,
                    "{}\t{}\t{}\t{}",
                    inf.syllogism_type,
                    chain_length_of(inf),
                    kb.format(inf.conclusion),
                    premises.join(", ")
                )?;
            }
        }
    }
    Ok(())
}

fn export(a: ExportArgs) -> Result<()> {
    let kbs = read_kbs(&a.kb)?;
    let kind = match a.split {
        SplitArg::Overall => SplitKind::Overall,
        SplitArg::Compositional => SplitKind::Compositional,
        SplitArg::Recursive => SplitKind::Recursive,
    };
    let opts = ExportOptions {
        task: match a.task {
            TaskArg::PremiseSelection => Task::PremiseSelection,
            TaskArg::ProofByContradiction => Task::ProofByContradiction,
        },
        split: SplitSpec::for_kbs(kind, &kbs),
        part: match a.part {
            PartArg::Train => Part::Train,
            PartArg::Test => Part::Test,
        },
        subs_per_kb: a.subs,
        perms_per_kb: a.perms,
        seed: a.seed,
    };
    let mut w = create(&a.out)?;
    let manifest = export_dataset(&kbs, &opts, &mut w)?;
    w.flush()?;
    let mpath = a.manifest.unwrap_or_else(|| {
        let mut p = a.out.clone().into_os_string();
        p.push(".manifest.json");
        p.into()
    });
    let mut m = create(&mpath)?;
    serde_json::to_writer_pretty(&mut m, &manifest)?;
    m.write_all(b"\n")?;
    m.flush()?;
    println!("{}\trecords={}", a.out.display(), manifest.records);
    Ok(())
}

fn noise_profile(a: &ProveArgs) -> Result<NoiseProfile> {
    let seed = a.noise_seed.unwrap_or(a.seed);
    let p = match &a.noise_profile {
        Some(path) => {
            let mut doc: toml::Table = read_text(path)?
                .parse()
                .map_err(|e| CliError::new(Kind::Assistant, format!("{}: {e}", path.display())))?;
            doc.insert("seed".into(), seed.to_string().into());
            doc.try_into()
                .map_err(|e| CliError::new(Kind::Assistant, format!("{}: {e}", path.display())))?
        }
        None => match a.noise {
            NoisePreset::Perfect => NoiseProfile::perfect(seed),
            NoisePreset::T5Compositional => NoiseProfile::t5_compositional(seed),
            NoisePreset::T5Overall => NoiseProfile::t5_overall(seed),
        },
    };
    p.validate().map_err(|e| CliError::new(Kind::Assistant, e))?;
    Ok(p)
}

fn assistant(a: &ProveArgs) -> Result<Option<Box<dyn Assistant>>> {
    Ok(Some(match a.assistant {
        AssistantArg::None => return Ok(None),
        AssistantArg::Oracle => Box::new(OracleAssistant::new()),
        AssistantArg::Noisy => Box::new(NoisyAssistant::new(noise_profile(a)?).map_err(|e| CliError::new(Kind::Assistant, e))?),
        AssistantArg::File => {
            let path = a
                .hints
                .as_ref()
                .ok_or_else(|| CliError::new(Kind::Assistant, "--assistant file needs --hints"))?;
            Box::new(FileAssistant::load(path).map_err(|e| CliError::new(Kind::HintFile, e))?)
        }
        AssistantArg::Remote => {
            let config = match &a.endpoint {
                Some(endpoint) => RemoteConfig {
                    endpoint: endpoint.clone(),
                    timeout: Duration::from_millis(a.timeout_ms),
                },
                None => RemoteConfig::from_env().ok_or_else(|| {
                    CliError::new(Kind::Assistant, format!("--assistant remote needs --endpoint or {ENDPOINT_ENV}"))
                })?,
            };
            Box::new(RemoteAssistant::new(config))
        }
    }))
}

fn report_csv(kb: &KnowledgeBase, r: &StepReport, assistant: &str) -> String {
    let p = r.phases;
    let phase = |f: fn(&syllogic::prover::PhaseSteps) -> u64| p.as_ref().map(f).map(|v| v.to_string()).unwrap_or_default();
    format!(
        "schema,assistant,hypothesis,seed,outcome,steps,pbc_pairs,restricted_derive,restricted_pbc,fallback\n\
         {},{assistant},{},{},{},{},{},{},{},{}\n",
        REPORT_SCHEMA,
        kb.format(r.hypothesis),
        r.seed,
        r.outcome.as_str(),
        r.steps,
        r.pbc_pairs_tried,
        phase(|p| p.restricted_derive),
        phase(|p| p.restricted_pbc),
        phase(|p| p.fallback),
    )
}

fn prove_cmd(a: ProveArgs) -> Result<()> {
    let kb = KnowledgeBase::read(&a.kb)?;
    let h = parse_formula(&kb, &a.hypothesis)?;
    let helper = assistant(&a)?;
    let mut state = SearchState::new(ProverConfig {
        seed: a.seed,
        budget: a.budget,
        failure_cache: !a.no_failure_cache,
    });
    let (proof, report) = match &helper {
        None => prove(h, &kb, &mut state),
        Some(helper) => {
            let run = hybrid_run(h, &kb, helper.as_ref(), helper.as_ref(), &mut state);
            // Transport failures are not ordinary wrong answers.
            for e in [&run.log.premise_error, &run.log.contradiction_error].into_iter().flatten() {
                if let syllogic::assistant::HintError::Transport(_) = e {
                    return Err(CliError::new(Kind::Assistant, e));
                }
            }
            (run.proof, run.report)
        }
    };
    let name = a.assistant.to_possible_value().expect("no skipped variants").get_name().to_string();
    let csv = report_csv(&kb, &report, &name);
    if let Some(path) = &a.report {
        std::fs::write(path, &csv).map_err(|e| CliError::new(Kind::Io, format!("{}: {e}", path.display())))?;
    }
    let mut out = std::io::stdout().lock();
    match (&proof, a.emit_proof) {
        (Some(p), true) => out.write_all(dump_proof(p, kb.vocab()).as_bytes())?,
        _ => out.write_all(csv.as_bytes())?,
    }
    out.flush()?;
    match report.outcome {
        Outcome::Proved => Ok(()),
        Outcome::Refuted => Err(CliError::new(Kind::NotProved, format!("`{}` does not follow", a.hypothesis))),
        Outcome::BudgetExceeded => Err(CliError::new(
            Kind::Budget,
            format!("`{}` not settled within {} steps", a.hypothesis, a.budget),
        )),
    }
}

fn check(a: CheckArgs) -> Result<()> {
    let kb = KnowledgeBase::read(&a.kb)?;
    let text = read_text(&a.proof)?;
    let proof = parse_proof(&text, kb.vocab()).map_err(|e| CliError::new(Kind::ProofParse, e))?;
    let h = match &a.hypothesis {
        Some(t) => parse_formula(&kb, t)?,
        None => proof.conclusion(),
    };
    if !check_proof(&proof, kb.formulas(), h) {
        return Err(CliError::new(
            Kind::ProofInvalid,
            format!("not a proof of `{}` from `{}`", kb.format(h), kb.id),
        ));
    }
    println!("valid\t{}\tnodes={}", kb.format(h), proof.size());
    Ok(())
}

fn bench(a: BenchArgs) -> Result<()> {
    let text = read_text(&a.plan)?;
    let mut plan: BenchPlan = toml::from_str(&text).map_err(|e| CliError::new(Kind::Plan, e))?;
    if let Some(s) = a.seed {
        plan.seed = s;
    }
    if let Some(r) = a.repetitions {
        plan.repetitions = r;
    }
    if let Some(b) = a.budget {
        plan.budget = b;
    }
    if let Some(n) = a.per_type_samples {
        plan.per_type_samples = n;
    }
    if let Some(n) = a.min_chain_len {
        plan.min_chain_len = n;
    }
    plan.validate()?;
    let base = a.plan.parent().unwrap_or(Path::new("."));
    let kbs = plan.load_kbs(base)?;
    let slate = sample_slate(&kbs, &plan);
    let result = run_bench(&kbs, &slate, &plan, base)?;
    let format = match a.format {
        FormatArg::Csv => ReportFormat::Csv,
        FormatArg::Json => ReportFormat::Json,
    };
    let paths = emit_report(&result, &kbs, format, &a.out)?;
    let mut out = std::io::stdout().lock();
    writeln!(out, "config\truns\tproved\tgeomean_steps\tlog10_mean\tlog10_sd")?;
    for s in &result.summaries {
        let o = &s.overall;
        writeln!(
            out,
            "{}\t{}\t{}\t{:.1}\t{:.3}\t{:.3}",
            s.name, o.runs, o.proved, o.geomean_steps, o.log10_mean, o.log10_sd
        )?;
    }
    for p in paths {
        writeln!(out, "wrote {}", p.display())?;
    }
    let failures = result.failures();
    if failures > 0 && !a.allow_failures {
        return Err(CliError::new(
            Kind::BenchFailures,
            format!("{failures} of {} runs exceeded the budget", result.runs.len()),
        ));
    }
    Ok(())
}

fn dump(a: DumpHintsArgs) -> Result<()> {
    let kbs = read_kbs(&a.kb)?;
    let mut w = create(&a.out)?;
    let n = dump_hints(&kbs, &mut w)?;
    w.flush()?;
    println!("{}\tlines={n}", a.out.display());
    Ok(())
}
