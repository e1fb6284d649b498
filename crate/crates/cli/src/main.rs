use std::collections::HashMap;
use std::fs;
use std::io::{self, BufWriter, Read, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{ArgGroup, Parser, Subcommand, ValueEnum};
use privcode_core::eval::{self, EvalConfig, SandboxConfig, TaskCompletions, DEFAULT_INTERPRETER};
use privcode_core::extract::{self, WeightedMeta, DEFAULT_NEGATIVES};
use privcode_core::generation::{self, CompletionModel, GenerationRequest, HttpModel, MockModel};
use privcode_core::paraphrase::{self, KeywordMap};
use privcode_core::prompt::{self, ApiSelection, HumanChoice, PromptFormat, PromptSpec};
use privcode_core::retriever::{self, ApiIndex, EncoderParams, TrainConfig};
use privcode_core::{parse_catalog, CodeBlock, DocCatalog, TrainingPair};
use privcode_service::AppState;
use serde::{de::DeserializeOwned, Deserialize, Serialize};

#[derive(Parser)]
#[command(name = "privcode", version, about = "Private-library code generation toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Split every .py file under a corpus directory into code blocks.
    ExtractBlocks {
        corpus_dir: PathBuf,
        /// Only track imports of this catalog's libraries.
        #[arg(long)]
        catalog: Option<PathBuf>,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Turn annotated blocks into (description, positive, negatives) pairs.
    MakePairs {
        #[arg(long)]
        blocks: PathBuf,
        #[arg(long)]
        catalog: PathBuf,
        #[arg(long, default_value_t = DEFAULT_NEGATIVES)]
        negatives: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Compute per-file re-sampling weights.
    Weigh {
        corpus_dir: PathBuf,
        #[arg(long)]
        catalog: PathBuf,
        /// TSV of `file_id<TAB>stars`; missing files get 0 stars.
        #[arg(long)]
        stars_file: Option<PathBuf>,
        /// Also draw this many file ids by weight (printed to stderr).
        #[arg(long)]
        sample: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    TrainRetriever {
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long)]
        catalog: PathBuf,
        #[arg(long, default_value_t = 1e-2)]
        lr: f64,
        #[arg(long, default_value_t = 10)]
        epochs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        batch: usize,
        #[arg(long, default_value_t = retriever::DEFAULT_HASH_DIM)]
        hash_dim: usize,
        #[arg(long, default_value_t = retriever::DEFAULT_EMBED_DIM)]
        embed_dim: usize,
        #[arg(long, short)]
        out: PathBuf,
    },
    BuildIndex {
        #[arg(long)]
        catalog: PathBuf,
        #[arg(long)]
        params: PathBuf,
        #[arg(long, short)]
        out: PathBuf,
    },
    Retrieve {
        #[arg(long)]
        catalog: PathBuf,
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        query: String,
        #[arg(long, default_value_t = 5)]
        k: usize,
    },
    /// Render APIs and a code context into a prompt on stdout.
    BuildPrompt(BuildPromptArgs),
    /// Sample completions from a remote model or a mock fixture.
    Generate(GenerateArgs),
    Evaluate {
        #[arg(long)]
        benchmark: PathBuf,
        #[arg(long)]
        completions: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "1,10")]
        k: Vec<usize>,
        #[arg(long, default_value_t = eval::DEFAULT_TIMEOUT_MS)]
        timeout_ms: u64,
        #[arg(long, default_value = DEFAULT_INTERPRETER)]
        interpreter: String,
        /// Parallel candidates; 0 uses every core.
        #[arg(long, default_value_t = 0)]
        workers: usize,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Rewrite keywords from stdin to stdout.
    Paraphrase {
        /// TSV file, or a builtin name (pandas_monkey, numpy_beatnum).
        #[arg(long)]
        map: String,
    },
    Serve(ServeArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum SelectionMode {
    None,
    Oracle,
    #[value(name = "topK", alias = "topk")]
    TopK,
    Human,
}

#[derive(clap::Args)]
struct BuildPromptArgs {
    #[arg(long)]
    context: PathBuf,
    #[arg(long)]
    catalog: PathBuf,
    #[arg(long, default_value = "b")]
    format: PromptFormat,
    #[arg(long, value_enum, default_value = "none")]
    selection: SelectionMode,
    /// Comma-separated api_ids for oracle selection.
    #[arg(long, value_delimiter = ',')]
    api_ids: Vec<String>,
    #[arg(long, default_value_t = 2)]
    k: usize,
    /// Human choice: not_sure, none_of_the_above, or a comma list of ids.
    #[arg(long)]
    choice: Option<String>,
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long)]
    index: Option<PathBuf>,
    /// Retrieval query; defaults to the context text.
    #[arg(long)]
    query: Option<String>,
    #[arg(long, default_value_t = prompt::DEFAULT_NOISE_RATE)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Print the assembled prompt as JSON instead of raw text.
    #[arg(long)]
    json: bool,
}

#[derive(clap::Args)]
#[command(group(ArgGroup::new("input").required(true).args(["prompt", "prompts"])))]
struct GenerateArgs {
    /// A single prompt file; completions are printed as a JSON array.
    #[arg(long)]
    prompt: Option<PathBuf>,
    /// JSON lines of {task_id, prompt, prompted_apis?, retrieved?}; writes a
    /// completions file.
    #[arg(long)]
    prompts: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 0.8)]
    temperature: f64,
    #[arg(long, default_value_t = 0.95)]
    top_p: f64,
    #[arg(long, default_value_t = 300)]
    max_tokens: usize,
    #[arg(long, default_value_t = generation::DEFAULT_IN_FLIGHT)]
    in_flight: usize,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct ModelArgs {
    /// JSON lines of {prompt_sha256, completions}.
    #[arg(long)]
    mock_model: Option<PathBuf>,
    #[arg(long, env = "MODEL_URL")]
    model_url: Option<String>,
    #[arg(long, env = "MODEL_KEY", hide_env_values = true)]
    model_key: Option<String>,
}

#[derive(clap::Args)]
struct ServeArgs {
    #[arg(long)]
    catalog: PathBuf,
    #[arg(long, requires = "index")]
    params: Option<PathBuf>,
    #[arg(long, requires = "params")]
    index: Option<PathBuf>,
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[arg(long, env = "DATA_DIR", default_value = ".")]
    data_dir: PathBuf,
    #[arg(long, default_value = DEFAULT_INTERPRETER)]
    interpreter: String,
    #[command(flatten)]
    model: ModelArgs,
}

fn main() -> Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::from_default_env())
        .with_writer(io::stderr)
        .init();
    let cli = Cli::parse();
    match cli.command {
        Command::ExtractBlocks { corpus_dir, catalog, out } => {
            let catalog = catalog.map(|c| load_catalog(&c)).transpose()?;
            let blocks = extract_blocks(&corpus_dir, catalog.as_ref())?;
            write_jsonl(out.as_deref(), &blocks)
        }
        Command::MakePairs { blocks, catalog, negatives, seed, out } => {
            let blocks: Vec<CodeBlock> = read_jsonl(&blocks)?;
            let catalog = load_catalog(&catalog)?;
            let pairs = extract::make_pairs(&blocks, &catalog, negatives, seed)?;
            eprintln!("{} pairs from {} blocks", pairs.len(), blocks.len());
            write_jsonl(out.as_deref(), &pairs)
        }
        Command::Weigh { corpus_dir, catalog, stars_file, sample, seed, out } => {
            weigh(&corpus_dir, &catalog, stars_file.as_deref(), sample, seed, out.as_deref())
        }
        Command::TrainRetriever { pairs, catalog, lr, epochs, seed, batch, hash_dim, embed_dim, out } => {
            let pairs: Vec<TrainingPair> = read_jsonl(&pairs)?;
            let catalog = load_catalog(&catalog)?;
            let config = TrainConfig { lr, epochs, seed, batch, hash_dim, embed_dim };
            let (params, log) = retriever::train(&pairs, &catalog, &config)?;
            for (epoch, loss) in log.epoch_losses.iter().enumerate() {
                eprintln!("epoch {:>3}  loss {loss:.6}", epoch + 1);
            }
            params.save(&out)?;
            eprintln!("wrote {} (fingerprint {})", out.display(), params.fingerprint());
            Ok(())
        }
        Command::BuildIndex { catalog, params, out } => {
            let catalog = load_catalog(&catalog)?;
            let params = EncoderParams::load(&params)?;
            let index = retriever::build_index(&catalog, &params);
            index.save(&out)?;
            eprintln!("indexed {} APIs", index.len());
            Ok(())
        }
        Command::Retrieve { catalog, params, index, query, k } => {
            let catalog = load_catalog(&catalog)?;
            let (params, index) = load_retriever(&params, &index)?;
            let mut stdout = io::stdout().lock();
            for (api_id, score) in retriever::retrieve(&index, &params, &query, k)? {
                let name = catalog.get(&api_id).map_or("", |r| r.name.as_str());
                writeln!(stdout, "{}", serde_json::json!({"api_id": api_id, "name": name, "score": score}))?;
            }
            Ok(())
        }
        Command::BuildPrompt(args) => build_prompt(args),
        Command::Generate(args) => generate(args),
        Command::Evaluate { benchmark, completions, k, timeout_ms, interpreter, workers, out } => {
            let problems = eval::load_benchmark(&benchmark)?;
            let completions = eval::load_completions(&completions)?;
            let config = EvalConfig {
                k_set: k,
                sandbox: SandboxConfig {
                    timeout_ms,
                    interpreter_cmd: interpreter,
                    workers,
                    ..SandboxConfig::default()
                },
                ..EvalConfig::default()
            };
            let report = eval::evaluate(&problems, &completions, &config)?;
            for (k, v) in &report.pass_at_k {
                eprintln!("pass@{k} = {:.4}", v);
            }
            let json = serde_json::to_string_pretty(&report)?;
            match out {
                Some(path) => fs::write(&path, json + "\n").with_context(|| format!("writing {}", path.display()))?,
                None => println!("{json}"),
            }
            Ok(())
        }
        Command::Paraphrase { map } => {
            let map = if Path::new(&map).is_file() {
                paraphrase::load_map(&map)?
            } else {
                KeywordMap::builtin(&map)?
            };
            let mut input = String::new();
            io::stdin().read_to_string(&mut input)?;
            io::stdout().write_all(map.apply(&input).as_bytes())?;
            Ok(())
        }
        Command::Serve(args) => serve(args),
    }
}

fn load_catalog(path: &Path) -> Result<DocCatalog> {
    parse_catalog(path).with_context(|| format!("loading catalog {}", path.display()))
}

fn load_retriever(params: &Path, index: &Path) -> Result<(EncoderParams, ApiIndex)> {
    let params = EncoderParams::load(params)?;
    let index = ApiIndex::load(index)?;
    index.check_params(&params)?;
    Ok((params, index))
}

fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).with_context(|| format!("{}:{}", path.display(), i + 1)))
        .collect()
}

fn write_jsonl<T: Serialize>(out: Option<&Path>, items: &[T]) -> Result<()> {
    let sink: Box<dyn Write> = match out {
        Some(p) => Box::new(fs::File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(io::stdout().lock()),
    };
    let mut w = BufWriter::new(sink);
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

fn libraries(catalog: Option<&DocCatalog>) -> Vec<&str> {
    let mut libs: Vec<&str> = catalog
        .map(|c| c.records().iter().map(|r| r.library.as_str()).collect())
        .unwrap_or_default();
    libs.sort_unstable();
    libs.dedup();
    libs
}

fn extract_blocks(corpus: &Path, catalog: Option<&DocCatalog>) -> Result<Vec<CodeBlock>> {
    let libs = libraries(catalog);
    let files = extract::load_corpus(corpus)?;
    Ok(files
        .iter()
        .flat_map(|f| extract::extract_file(&f.file_id, &f.text, &libs))
        .collect())
}

fn read_stars(path: &Path) -> Result<HashMap<String, u64>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut stars = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((file, n)) = line.split_once('\t') else {
            bail!("{}:{}: expected file_id<TAB>stars", path.display(), i + 1);
        };
        let n = n.trim().parse().with_context(|| format!("{}:{}", path.display(), i + 1))?;
        stars.insert(file.to_string(), n);
    }
    Ok(stars)
}

fn weigh(
    corpus: &Path,
    catalog: &Path,
    stars_file: Option<&Path>,
    sample: Option<usize>,
    seed: u64,
    out: Option<&Path>,
) -> Result<()> {
    let catalog = load_catalog(catalog)?;
    let stars = stars_file.map(read_stars).transpose()?.unwrap_or_default();
    let metas: Vec<WeightedMeta> = extract::load_corpus(corpus)?
        .iter()
        .map(|f| {
            let n = stars.get(&f.file_id).copied().unwrap_or(0);
            extract::compute_file_meta(&f.file_id, &f.text, n, &catalog).into()
        })
        .collect();
    if let Some(count) = sample {
        let weights: Vec<f64> = metas.iter().map(|m| m.weight).collect();
        for i in extract::sample_weighted(&weights, count, seed)? {
            eprintln!("{}", metas[i].meta.file_id);
        }
    }
    write_jsonl(out, &metas)
}

fn parse_choice(raw: &str) -> HumanChoice {
    match raw.trim() {
        "not_sure" => HumanChoice::NotSure,
        "none_of_the_above" | "none" => HumanChoice::NoneOfTheAbove,
        ids => HumanChoice::Selected(ids.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()),
    }
}

fn build_prompt(args: BuildPromptArgs) -> Result<()> {
    let catalog = load_catalog(&args.catalog)?;
    let context = fs::read_to_string(&args.context).with_context(|| format!("reading {}", args.context.display()))?;
    let selection = match args.selection {
        SelectionMode::None => ApiSelection::NoApi,
        SelectionMode::Oracle => ApiSelection::Oracle { api_ids: args.api_ids.clone() },
        SelectionMode::TopK => ApiSelection::TopK { k: args.k },
        SelectionMode::Human => {
            let Some(raw) = args.choice.as_deref() else {
                bail!("--selection human needs --choice");
            };
            ApiSelection::Human { choice: parse_choice(raw) }
        }
    };
    let retrieved = match (&selection, &args.params, &args.index) {
        (ApiSelection::TopK { .. } | ApiSelection::Human { .. }, Some(p), Some(i)) => {
            let (params, index) = load_retriever(p, i)?;
            let query = args.query.as_deref().unwrap_or(&context);
            let k = args.k.max(prompt::PRESENTED);
            retriever::retrieve(&index, &params, query, k)?
                .into_iter()
                .map(|(id, _)| id)
                .collect()
        }
        (ApiSelection::TopK { .. } | ApiSelection::Human { .. }, _, _) => {
            bail!("this selection needs --params and --index")
        }
        _ => Vec::new(),
    };
    let ids = selection.resolve(&retrieved)?;
    let spec = PromptSpec {
        apis: prompt::records_for(&catalog, &ids)?,
        format: args.format,
        code_context: context,
        noise_rate: args.noise,
        seed: args.seed,
    };
    let assembled = prompt::assemble_prompt(&spec, &catalog)?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&assembled)?);
    } else {
        io::stdout().write_all(assembled.text.as_bytes())?;
    }
    Ok(())
}

fn make_model(args: &ModelArgs) -> Result<Arc<dyn CompletionModel>> {
    if let Some(path) = &args.mock_model {
        return Ok(Arc::new(MockModel::load(path)?));
    }
    match &args.model_url {
        Some(url) => Ok(Arc::new(HttpModel::new(url.clone(), args.model_key.clone()))),
        None => bail!("no model: pass --mock-model or set MODEL_URL"),
    }
}

#[derive(Deserialize)]
struct PromptLine {
    task_id: String,
    prompt: String,
    #[serde(default)]
    prompted_apis: Vec<String>,
    #[serde(default)]
    retrieved: Vec<String>,
}

fn generate(args: GenerateArgs) -> Result<()> {
    let model = make_model(&args.model)?;
    let request = |prompt: String| GenerationRequest {
        n_samples: args.n,
        temperature: args.temperature,
        top_p: args.top_p,
        max_new_tokens: args.max_tokens,
        ..GenerationRequest::new(prompt)
    };
    if let Some(path) = &args.prompt {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let completions = generation::generate(model.as_ref(), &request(text))?;
        let texts: Vec<&str> = completions.iter().map(|c| c.text.as_str()).collect();
        let json = serde_json::to_string_pretty(&texts)?;
        return match &args.out {
            Some(p) => Ok(fs::write(p, json + "\n")?),
            None => Ok(println!("{json}")),
        };
    }
    let lines: Vec<PromptLine> = read_jsonl(args.prompts.as_deref().expect("clap group"))?;
    let requests: Vec<GenerationRequest> = lines.iter().map(|l| request(l.prompt.clone())).collect();
    let results = generation::generate_batch(model.as_ref(), &requests, args.in_flight);
    let mut out = Vec::with_capacity(lines.len());
    for (line, result) in lines.into_iter().zip(results) {
        let completions = result.with_context(|| format!("task {}", line.task_id))?;
        out.push(TaskCompletions {
            task_id: line.task_id,
            completions: completions.into_iter().map(|c| c.text).collect(),
            prompted_apis: line.prompted_apis,
            retrieved: line.retrieved,
        });
    }
    write_jsonl(args.out.as_deref(), &out)
}

fn serve(args: ServeArgs) -> Result<()> {
    let catalog = load_catalog(&args.catalog)?;
    let mut state = AppState::new(catalog, args.data_dir.clone()).with_sandbox(SandboxConfig {
        interpreter_cmd: args.interpreter.clone(),
        ..SandboxConfig::default()
    });
    if let (Some(p), Some(i)) = (&args.params, &args.index) {
        let (params, index) = load_retriever(p, i)?;
        state = state.with_retriever(params, index);
    }
    if args.model.mock_model.is_some() || args.model.model_url.is_some() {
        state = state.with_model(make_model(&args.model)?);
    }
    let addr: SocketAddr = format!("{}:{}", args.host, args.port)
        .parse()
        .with_context(|| format!("bad address {}:{}", args.host, args.port))?;
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(privcode_service::serve(addr, Arc::new(state)))?;
    Ok(())
}
