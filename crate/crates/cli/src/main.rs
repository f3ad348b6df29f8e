//! `factsearch`: batch tools and the verification server.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use factsearch_core::calibration::{fit_records, read_logits, TemperatureScaler};
use factsearch_core::corpus::{build_corpus, read_dump, ChunkConfig, CleanRules, Corpus, IngestConfig};
use factsearch_core::eval::{align_labels, evaluate_nli, evaluate_retrieval, GoldEvidence, LabelRecord, RunRecord};
use factsearch_core::gateway::config::BackendsConfig;
use factsearch_core::gateway::Gateway;
use factsearch_core::highlight::{highlight, DEFAULT_MIN_WORD_LEN, DEFAULT_THRESHOLD};
use factsearch_core::jsonl;
use factsearch_core::lexical::{build_index, load_index, save_index, search, Bm25Params, InvertedIndex};
use factsearch_core::nway::{build_tuples, DEFAULT_N};
use factsearch_core::pvi::{analyze, build_records};
use factsearch_core::qacg::{
    build_mix, build_sum, dedup_dataset, generate_dataset, stratify_balance, ClaimDataset, GenerationConfig,
    DEFAULT_NEI_AUX,
};
use factsearch_core::retrieval::{retrieve, Mode, RetrievalConfig, DEFAULT_ANS_K, DEFAULT_NLI_K2};
use factsearch_core::Split;
use factsearch_service::ServiceConfig;

#[derive(Parser)]
#[command(name = "factsearch", version, about = "Claim generation, evidence retrieval and verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Clean and chunk a dump directory into a corpus file.
    Ingest {
        #[arg(long)]
        dump: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "corpus")]
        corpus_id: String,
        #[arg(long, default_value = "en")]
        language: String,
        /// TOML file with `[[rule]]` tables; defaults to the built-in rules.
        #[arg(long)]
        rules: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        drop_top_duplicates: usize,
        #[arg(long, default_value_t = ChunkConfig::default().merge_threshold)]
        merge_threshold: usize,
        #[arg(long, default_value_t = ChunkConfig::default().min_len)]
        min_len: usize,
    },
    #[command(subcommand)]
    Index(IndexCommand),
    /// Generate SUPPORTS/REFUTES/NEI claims from a corpus.
    Generate {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        backends: BackendArgs,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        name: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10_000)]
        train: usize,
        #[arg(long, default_value_t = 1_000)]
        dev: usize,
        #[arg(long, default_value_t = 1_000)]
        test: usize,
        #[arg(long, default_value_t = DEFAULT_NEI_AUX)]
        nei_aux: usize,
        /// Also write per-split files and stats.json into this directory.
        #[arg(long)]
        split_dir: Option<PathBuf>,
    },
    /// Downsample every split to equal label counts.
    Balance {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Pool datasets, sampling the label counts of the first one.
    Mix {
        #[arg(long, num_args = 2.., required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Concatenate datasets split by split.
    Sum {
        #[arg(long, num_args = 2.., required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Drop claims whose text already occurred.
    Dedup {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build n-way contrastive tuples with lexical hard negatives.
    Tuples {
        #[arg(long)]
        dataset: PathBuf,
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long, value_enum)]
        split: Option<SplitArg>,
        #[arg(long, default_value_t = DEFAULT_N)]
        n: usize,
        #[arg(long, value_enum, default_value_t = ParamsArg::Wiki)]
        params: ParamsArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit a temperature on a labeled logits file.
    Calibrate {
        #[arg(long)]
        logits: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Pointwise V-information of claims against null inputs.
    Pvi {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, value_enum, default_value_t = SplitArg::Test)]
        split: SplitArg,
        #[arg(long)]
        null_logits: PathBuf,
        #[arg(long)]
        cond_logits: PathBuf,
        /// Scaler for the input-aware model.
        #[arg(long)]
        scaler: PathBuf,
        /// Scaler for the null model; defaults to `--scaler`.
        #[arg(long)]
        null_scaler: Option<PathBuf>,
        #[arg(long)]
        report: PathBuf,
        /// Per-sample values as JSONL.
        #[arg(long)]
        records: Option<PathBuf>,
    },
    /// Retrieve evidence for claims.
    Retrieve {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        backends: BackendArgs,
        /// Dataset file; every claim is retrieved.
        #[arg(long, conflicts_with = "claim", required_unless_present = "claim")]
        claims: Option<PathBuf>,
        #[arg(long)]
        claim: Option<String>,
        #[arg(long, default_value_t = Mode::Lexical)]
        mode: Mode,
        #[arg(long, default_value_t = 20)]
        k: usize,
        #[arg(long, default_value_t = DEFAULT_ANS_K)]
        ans_k: usize,
        #[arg(long, default_value_t = DEFAULT_NLI_K2)]
        nli_k2: usize,
        /// Output JSONL; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    #[command(subcommand)]
    Eval(EvalCommand),
    /// Print highlight spans of claim words in a paragraph.
    Highlight {
        #[arg(long)]
        claim: String,
        #[arg(long)]
        paragraph: String,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: f64,
        #[arg(long, default_value_t = DEFAULT_MIN_WORD_LEN)]
        min_word_len: usize,
    },
    /// Run the HTTP API.
    Serve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
    },
}

#[derive(Subcommand)]
enum IndexCommand {
    /// Build and persist an inverted index.
    Build {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Query a persisted index.
    Search {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        query: String,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long, value_enum, default_value_t = ParamsArg::Wiki)]
        params: ParamsArg,
    },
}

#[derive(Subcommand)]
enum EvalCommand {
    /// MRR@k and P@k of retrieval runs against gold evidence.
    Retrieval {
        #[arg(long)]
        runs: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "1,5,10,20")]
        ks: Vec<usize>,
        #[arg(long)]
        csv: bool,
    },
    /// Macro-F1 and confusion matrix of label predictions.
    Nli {
        #[arg(long)]
        preds: PathBuf,
        #[arg(long)]
        targets: PathBuf,
        #[arg(long)]
        csv: bool,
    },
}

#[derive(Args)]
struct CorpusArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Persisted index directory; built in memory when absent.
    #[arg(long)]
    index: Option<PathBuf>,
    #[arg(long, default_value = "en")]
    language: String,
}

#[derive(Args)]
struct BackendArgs {
    /// TOML file with `[backends.<role>]` tables.
    #[arg(long, conflicts_with = "stub_seed", required_unless_present = "stub_seed")]
    backends: Option<PathBuf>,
    /// Serve every role with the deterministic stubs.
    #[arg(long)]
    stub_seed: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SplitArg {
    Train,
    Dev,
    Test,
}

impl From<SplitArg> for Split {
    fn from(s: SplitArg) -> Self {
        match s {
            SplitArg::Train => Split::Train,
            SplitArg::Dev => Split::Dev,
            SplitArg::Test => Split::Test,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ParamsArg {
    Wiki,
    Enfever,
}

impl From<ParamsArg> for Bm25Params {
    fn from(p: ParamsArg) -> Self {
        match p {
            ParamsArg::Wiki => Bm25Params::WIKI,
            ParamsArg::Enfever => Bm25Params::ENFEVER,
        }
    }
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "dataset".into())
}

impl CorpusArgs {
    fn load(&self) -> Result<(Corpus, Arc<InvertedIndex>)> {
        let corpus = Corpus::read_jsonl(&self.corpus, stem(&self.corpus), &self.language)
            .with_context(|| format!("reading corpus {}", self.corpus.display()))?;
        let index = match &self.index {
            Some(dir) => load_index(dir).with_context(|| format!("loading index {}", dir.display()))?,
            None => build_index(&corpus),
        };
        if index.doc_count() != corpus.len() {
            bail!("index has {} documents, corpus has {}", index.doc_count(), corpus.len());
        }
        Ok((corpus, Arc::new(index)))
    }
}

impl BackendArgs {
    fn gateway(&self, index: Option<Arc<InvertedIndex>>) -> Result<Gateway> {
        let mut cfg = match (&self.backends, self.stub_seed) {
            (Some(path), _) => BackendsConfig::load(path)?,
            (None, Some(seed)) => BackendsConfig::all_stub(seed),
            (None, None) => bail!("either --backends or --stub-seed is required"),
        };
        cfg.apply_env();
        Ok(cfg.build_gateway(index)?)
    }
}

fn read_dataset(path: &Path) -> Result<ClaimDataset> {
    ClaimDataset::read_jsonl(path, stem(path)).with_context(|| format!("reading dataset {}", path.display()))
}

fn write_dataset(ds: &ClaimDataset, path: &Path) -> Result<()> {
    ds.write_jsonl(path).with_context(|| format!("writing {}", path.display()))?;
    eprintln!("{}", serde_json::to_string(&ds.stats())?);
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    Ok(())
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest {
            dump,
            out,
            corpus_id,
            language,
            rules,
            drop_top_duplicates,
            merge_threshold,
            min_len,
        } => {
            let mut cfg = IngestConfig::new(corpus_id, language);
            if let Some(path) = rules {
                cfg.rules = CleanRules::load(&path)?;
            }
            cfg.drop_top_duplicates = drop_top_duplicates;
            cfg.chunk = ChunkConfig { merge_threshold, min_len };
            let pages = read_dump(&dump)?;
            let n_pages = pages.len();
            let corpus = build_corpus(pages, &cfg);
            corpus.write_jsonl(&out)?;
            eprintln!("{n_pages} pages -> {} paragraphs", corpus.len());
        }
        Command::Index(IndexCommand::Build { corpus, out }) => {
            let c = Corpus::read_jsonl(&corpus, stem(&corpus), "")?;
            std::fs::create_dir_all(&out)?;
            let path = save_index(&build_index(&c), &out)?;
            eprintln!("{} documents -> {}", c.len(), path.display());
        }
        Command::Index(IndexCommand::Search { index, query, k, params }) => {
            let idx = load_index(&index)?;
            for hit in search(&idx, &query, k, params.into()) {
                println!("{}", serde_json::to_string(&hit)?);
            }
        }
        Command::Generate {
            corpus,
            backends,
            out,
            name,
            seed,
            train,
            dev,
            test,
            nei_aux,
            split_dir,
        } => {
            let (c, index) = corpus.load()?;
            let gw = backends.gateway(Some(index))?;
            let mut cfg = GenerationConfig::new(name.unwrap_or_else(|| stem(&out)), &corpus.language, seed);
            cfg.n_train = train;
            cfg.n_dev = dev;
            cfg.n_test = test;
            cfg.nei_aux = nei_aux;
            let ds = generate_dataset(&c, &gw, &cfg)?;
            write_dataset(&ds, &out)?;
            if let Some(dir) = split_dir {
                std::fs::create_dir_all(&dir)?;
                ds.write_dir(&dir)?;
            }
        }
        Command::Balance { input, out, seed } => {
            write_dataset(&stratify_balance(&read_dataset(&input)?, seed)?, &out)?;
        }
        Command::Mix { inputs, out, seed } => {
            let ds = inputs.iter().map(|p| read_dataset(p)).collect::<Result<Vec<_>>>()?;
            write_dataset(&build_mix(&ds, seed)?, &out)?;
        }
        Command::Sum { inputs, out } => {
            let ds = inputs.iter().map(|p| read_dataset(p)).collect::<Result<Vec<_>>>()?;
            write_dataset(&build_sum(&ds)?, &out)?;
        }
        Command::Dedup { input, out } => {
            let ds = read_dataset(&input)?;
            let deduped = dedup_dataset(&ds);
            eprintln!("removed {} duplicate claims", ds.len() - deduped.len());
            write_dataset(&deduped, &out)?;
        }
        Command::Tuples {
            dataset,
            corpus,
            split,
            n,
            params,
            out,
        } => {
            let ds = read_dataset(&dataset)?;
            let (_, index) = corpus.load()?;
            let claims: Vec<_> = match split {
                Some(s) => ds.split(s.into()).iter().collect(),
                None => ds.claims().collect(),
            };
            let set = build_tuples(claims, &index, n, params.into());
            jsonl::write(&out, &set.tuples)?;
            for e in &set.errors {
                eprintln!("skipped {}: {}", e.claim_id, e.message);
            }
            eprintln!(
                "{} tuples ({} short), {} skipped",
                set.tuples.len(),
                set.short_count(),
                set.errors.len()
            );
        }
        Command::Calibrate { logits, out } => {
            let scaler = fit_records(&read_logits(&logits)?)?;
            scaler.save(&out)?;
            eprintln!("T = {:.6} (NLL {:.6} on {})", scaler.temperature(), scaler.fit_nll, scaler.fit_set_size);
        }
        Command::Pvi {
            dataset,
            split,
            null_logits,
            cond_logits,
            scaler,
            null_scaler,
            report,
            records,
        } => {
            let ds = read_dataset(&dataset)?;
            let samples: Vec<_> = ds.split(split.into()).iter().map(|c| (c.claim_id.clone(), c.label)).collect();
            let cond_scaler = TemperatureScaler::load(&scaler)?;
            let null_scaler = match null_scaler {
                Some(p) => TemperatureScaler::load(&p)?,
                None => cond_scaler,
            };
            let verdicts = |path: &Path, s: &TemperatureScaler| -> Result<Vec<_>> {
                read_logits(path)?
                    .into_iter()
                    .map(|r| Ok((r.id, s.apply(r.logits)?)))
                    .collect()
            };
            let recs = build_records(
                &samples,
                &verdicts(&null_logits, &null_scaler)?,
                &verdicts(&cond_logits, &cond_scaler)?,
            )?;
            let rep = analyze(&recs)?;
            write_json(&report, &rep)?;
            if let Some(path) = records {
                jsonl::write(&path, &recs)?;
            }
            print_json(&rep)?;
        }
        Command::Retrieve {
            corpus,
            backends,
            claims,
            claim,
            mode,
            k,
            ans_k,
            nli_k2,
            out,
        } => {
            let (c, index) = corpus.load()?;
            let gw = backends.gateway(Some(index.clone()))?;
            let cfg = RetrievalConfig {
                ans_k,
                nli_k2,
                ..RetrievalConfig::new(mode, k)
            };
            cfg.validate()?;
            let queries: Vec<(String, String)> = match (claims, claim) {
                (Some(path), _) => {
                    let mut seen = HashSet::new();
                    read_dataset(&path)?
                        .claims()
                        .filter(|c| seen.insert(c.claim_id.clone()))
                        .map(|c| (c.claim_id.clone(), c.text.clone()))
                        .collect()
                }
                (None, Some(text)) => vec![("claim".into(), text)],
                (None, None) => bail!("either --claims or --claim is required"),
            };
            let mut sink: Box<dyn Write> = match out {
                Some(path) => Box::new(BufWriter::new(File::create(path)?)),
                None => Box::new(std::io::stdout().lock()),
            };
            for (claim_id, text) in queries {
                let results = retrieve(&text, &cfg, &index, &c, &gw)?;
                serde_json::to_writer(&mut sink, &RunRecord { claim_id, results })?;
                sink.write_all(b"\n")?;
            }
            sink.flush()?;
        }
        Command::Eval(EvalCommand::Retrieval { runs, gold, ks, csv }) => {
            let runs: Vec<RunRecord> = jsonl::read(&runs)?;
            let gold: Vec<GoldEvidence> = jsonl::read(&gold)?;
            let rep = evaluate_retrieval(&runs, &gold, &ks)?;
            if csv {
                print!("{}", rep.to_csv());
            } else {
                print_json(&rep)?;
            }
        }
        Command::Eval(EvalCommand::Nli { preds, targets, csv }) => {
            let preds: Vec<LabelRecord> = jsonl::read(&preds)?;
            let targets: Vec<LabelRecord> = jsonl::read(&targets)?;
            let (p, t) = align_labels(&preds, &targets)?;
            let rep = evaluate_nli(&p, &t)?;
            if csv {
                print!("{}", rep.to_csv());
            } else {
                print_json(&rep)?;
            }
        }
        Command::Highlight {
            claim,
            paragraph,
            threshold,
            min_word_len,
        } => {
            print_json(&highlight(&claim, &paragraph, threshold, min_word_len))?;
        }
        Command::Serve { config, port, host } => {
            let cfg = ServiceConfig::load(&config)?;
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(factsearch_service::serve(cfg, SocketAddr::new(host, port)))?;
        }
    }
    Ok(())
}

fn main() {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
