//! The `case` command-line tool.

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use case_core::baselines::{default_lambda2_grid, sweep_lambda2, LexicalBaseline, LexicalScorer, Pic};
use case_core::corpus::{annotate, build_lexicon, filter_corpus, TermLexicon, PLACEHOLDER};
use case_core::embeddings::{pretraining_sentences, train_cbow, DualEmbedding};
use case_core::encoders::{AttentionKind, EncoderKind};
use case_core::eval::EvalReport;
use case_core::model::{check_tiny_gradients, CaseModel};
use clap::{Args, Parser, Subcommand};

use crate::experiments::{configure_threads, par_evaluate, run_ablation, split_corpus, train_model, Ablation};
use crate::{checkpoint, io, report, Error, Result, RunConfig};

/// Usage errors exit with this code.
pub const USAGE_EXIT: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "case", version, about = "Context-aware semantic expansion workbench")]
#[command(after_help = "Any config key can also be given as a flag, e.g. `--epochs 3` or `--lambda1=0.4`.")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct Common {
    /// `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Single-threaded, bit-reproducible run.
    #[arg(long)]
    deterministic: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Mine Hearst lists from raw text into a filtered record TSV.
    Derive {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// `pattern<TAB>precision` table; defaults to 0.7 for every pattern.
        #[arg(long)]
        precisions: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Train CBOW IN/OUT vectors on the training split.
    Pretrain {
        #[arg(long = "in")]
        input: PathBuf,
        /// Prefix for `.in.txt`, `.out.txt` and `.meta`.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Train an expansion model; the checkpoint is rewritten every epoch.
    Train {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Pretrained embedding prefix used to initialise the tables.
        #[arg(long)]
        embeddings: Option<PathBuf>,
        #[arg(long)]
        encoder: Option<EncoderKind>,
        #[arg(long)]
        attention: Option<AttentionKind>,
        #[arg(long)]
        strip_hypernyms: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate a checkpoint and, given embeddings, the LS, LSCo and PIC
    /// baselines on the test split.
    Eval {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        ckpt: Option<PathBuf>,
        #[arg(long)]
        embeddings: Option<PathBuf>,
        /// Report TSV; printed to stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Recall@10 of LSCo over the λ2 grid.
    #[command(name = "sweep-lambda2")]
    SweepLambda2 {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        embeddings: PathBuf,
        /// Curve CSV; printed to stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Train and compare the arms of an ablation.
    Ablate {
        /// no_encoder, hypernym_removed, encoder_grid or attention_grid.
        #[arg(long)]
        name: String,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        embeddings: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        encoder: Option<EncoderKind>,
        #[arg(long)]
        attention: Option<AttentionKind>,
        #[command(flatten)]
        common: Common,
    },
    /// Finite-difference check of a tiny model's gradients.
    Gradcheck {
        #[arg(long, default_value = "nbow")]
        encoder: EncoderKind,
        #[arg(long, default_value = "none")]
        attention: AttentionKind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-4)]
        eps: f64,
        #[arg(long, default_value_t = 1e-4)]
        tolerance: f64,
    },
    /// Read `seed | context` lines and print ranked expansions.
    Expand {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long, default_value_t = 10)]
        k: usize,
    },
}

/// Flags that clap owns even though they name config keys.
const CLAP_KEYS: [&str; 5] = ["seed", "deterministic", "encoder", "attention", "strip_hypernyms"];

/// Pulls `--key value` and `--key=value` config overrides out of `args`.
fn extract_overrides(args: &[String]) -> (Vec<String>, Vec<(String, String)>) {
    let mut rest = Vec::new();
    let mut overrides = Vec::new();
    let mut i = 0;
    while i < args.len() {
        let a = &args[i];
        if let Some(flag) = a.strip_prefix("--") {
            let (name, inline) = match flag.split_once('=') {
                Some((n, v)) => (n, Some(v.to_string())),
                None => (flag, None),
            };
            let key = name.replace('-', "_");
            if RunConfig::is_key(&key) && !CLAP_KEYS.contains(&key.as_str()) {
                match inline {
                    Some(v) => overrides.push((key, v)),
                    None if i + 1 < args.len() => {
                        overrides.push((key, args[i + 1].clone()));
                        i += 1;
                    }
                    None => rest.push(a.clone()),
                }
                i += 1;
                continue;
            }
        }
        rest.push(a.clone());
        i += 1;
    }
    (rest, overrides)
}

fn resolve(common: &Common, mut overrides: Vec<(String, String)>, err: &mut dyn Write) -> Result<RunConfig> {
    if let Some(s) = common.seed {
        overrides.push(("seed".into(), s.to_string()));
    }
    if common.deterministic {
        overrides.push(("deterministic".into(), "true".into()));
    }
    let (cfg, warnings) = RunConfig::load(common.config.as_deref(), &overrides)?;
    for w in warnings {
        writeln!(err, "warning: {w}")?;
    }
    Ok(cfg)
}

fn provenance(cfg: &RunConfig) -> Vec<String> {
    let mut lines = vec![format!("config_hash={}", cfg.hash())];
    lines.extend(cfg.entries().into_iter().map(|(k, v)| format!("config {k} = {v}")));
    lines
}

fn load_embeddings(prefix: &Path, cfg: &RunConfig) -> Result<DualEmbedding> {
    let emb = io::read_embeddings(prefix)?;
    if emb.dim() != cfg.dim {
        return Err(Error::Config(format!("embeddings have dimension {}, config says dim = {}", emb.dim(), cfg.dim)));
    }
    Ok(emb)
}

/// Runs the tool on `args` (without the program name) and returns the
/// exit code.
pub fn run(args: &[String], input: &mut dyn BufRead, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let (rest, overrides) = extract_overrides(args);
    let cli = match Cli::try_parse_from(std::iter::once("case".to_string()).chain(rest)) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { USAGE_EXIT } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    match dispatch(cli.command, overrides, input, out, err) {
        Ok(code) => code,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            let _ = writeln!(err, "error: {}: {msg}", e.kind());
            1
        }
    }
}

fn dispatch(
    command: Command,
    overrides: Vec<(String, String)>,
    input: &mut dyn BufRead,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32> {
    match command {
        Command::Derive { input: raw, out: path, precisions, common } => {
            let cfg = resolve(&common, overrides, err)?;
            let table = match precisions {
                Some(p) => io::read_precisions(&p)?,
                None => Default::default(),
            };
            let sentences = io::read_raw(&raw)?;
            let mut annotated = Vec::new();
            for s in &sentences {
                annotated.extend(annotate(s, &table)?);
            }
            let kept = filter_corpus(&annotated, &cfg.filter());
            io::write_corpus(&path, &kept, &provenance(&cfg))?;
            let terms = build_lexicon(&kept).len();
            writeln!(out, "sentences\t{}\nmatches\t{}\nrecords\t{}\nterms\t{}", sentences.len(), annotated.len(), kept.len(), terms)?;
        }
        Command::Pretrain { input: corpus, out: prefix, common } => {
            let cfg = resolve(&common, overrides, err)?;
            configure_threads(cfg.deterministic);
            let (train, _) = split_corpus(&io::read_corpus(&corpus)?, &cfg)?;
            let (emb, rep) = train_cbow(&pretraining_sentences(&train), &cfg.cbow())?;
            for (i, l) in rep.epoch_losses.iter().enumerate() {
                writeln!(out, "epoch {}\tloss {l:.6}", i + 1)?;
            }
            io::write_embeddings(&prefix, &emb, &provenance(&cfg))?;
            writeln!(out, "vocabulary\t{}\ndim\t{}", emb.vocab().len(), emb.dim())?;
        }
        Command::Train { input: corpus, out: path, embeddings, encoder, attention, strip_hypernyms, common } => {
            let mut overrides = overrides;
            overrides.extend(encoder.map(|e| ("encoder".to_string(), e.to_string())));
            overrides.extend(attention.map(|a| ("attention".to_string(), a.to_string())));
            if strip_hypernyms {
                overrides.push(("strip_hypernyms".into(), "true".into()));
            }
            let cfg = resolve(&common, overrides, err)?;
            configure_threads(cfg.deterministic);
            let (train, _) = split_corpus(&io::read_corpus(&corpus)?, &cfg)?;
            let emb = embeddings.map(|p| load_embeddings(&p, &cfg)).transpose()?;
            let extra: Vec<(String, String)> = std::iter::once(("config_hash".to_string(), cfg.hash()))
                .chain(cfg.entries().into_iter().map(|(k, v)| (format!("config.{k}"), v)))
                .collect();
            let mut log = Vec::new();
            train_model(&train, &cfg, emb.as_ref(), |stats, model| {
                checkpoint::save(&path, model, &extra).map_err(|e| case_core::Error::InvalidArgument(e.to_string()))?;
                log.push(format!("epoch {}\tloss {:.6}\tsamples {}", stats.epoch, stats.mean_loss, stats.samples));
                Ok(())
            })?;
            for l in log {
                writeln!(out, "{l}")?;
            }
        }
        Command::Eval { input: corpus, ckpt, embeddings, out: path, common } => {
            let cfg = resolve(&common, overrides, err)?;
            configure_threads(cfg.deterministic);
            if ckpt.is_none() && embeddings.is_none() {
                return Err(Error::Config("eval needs --ckpt, --embeddings or both".into()));
            }
            let (train, test) = split_corpus(&io::read_corpus(&corpus)?, &cfg)?;
            let mut meta = provenance(&cfg);
            let loaded = ckpt.as_deref().map(checkpoint::load).transpose()?;
            let model = loaded.map(|(m, manifest)| {
                if let Ok(h) = manifest.get("config_hash") {
                    meta.insert(0, format!("checkpoint={} checkpoint_config_hash={h}", ckpt.as_deref().unwrap_or(Path::new("")).display()));
                }
                m
            });
            let lexicon: TermLexicon = match &model {
                Some(m) => m.lexicon().clone(),
                None => build_lexicon(&train),
            };
            let mut rows: Vec<(String, EvalReport)> = Vec::new();
            if let Some(m) = &model {
                let c = m.config();
                rows.push((format!("{}+{}", c.encoder, c.attention), par_evaluate(m, &test, &lexicon, &cfg.cutoffs)?));
            }
            if let Some(p) = embeddings {
                let scorer = LexicalScorer::new(load_embeddings(&p, &cfg)?, lexicon.clone())?;
                let ls = LexicalBaseline::ls(&scorer, cfg.lambda1);
                rows.push(("LS".into(), par_evaluate(&ls, &test, &lexicon, &cfg.cutoffs)?));
                let lsco = LexicalBaseline::lsco(&scorer, cfg.lambda1, cfg.lambda2);
                rows.push(("LSCo".into(), par_evaluate(&lsco, &test, &lexicon, &cfg.cutoffs)?));
                let mut pic = Pic::new(&scorer);
                pic.train(&train, &cfg.baselines().pic, |_| Ok(()))?;
                rows.push(("PIC".into(), par_evaluate(&pic, &test, &lexicon, &cfg.cutoffs)?));
            }
            let refs: Vec<(&str, &EvalReport)> = rows.iter().map(|(n, r)| (n.as_str(), r)).collect();
            let text = report::metrics_tsv(&refs, &meta)?;
            emit(&text, path.as_deref(), out)?;
        }
        Command::SweepLambda2 { input: corpus, embeddings, out: path, common } => {
            let cfg = resolve(&common, overrides, err)?;
            let (train, test) = split_corpus(&io::read_corpus(&corpus)?, &cfg)?;
            let scorer = LexicalScorer::new(load_embeddings(&embeddings, &cfg)?, build_lexicon(&train))?;
            let sweep = sweep_lambda2(&scorer, cfg.lambda1, &default_lambda2_grid(), &test, 10)?;
            emit(&report::lambda2_csv(&sweep, 10), path.as_deref(), out)?;
            writeln!(err, "best lambda2 {} (recall@10 {:.6})", sweep.best, sweep.best_recall)?;
        }
        Command::Ablate { name, input: corpus, embeddings, out: path, encoder, attention, common } => {
            let kind: Ablation = name.parse()?;
            let mut overrides = overrides;
            overrides.extend(encoder.map(|e| ("encoder".to_string(), e.to_string())));
            overrides.extend(attention.map(|a| ("attention".to_string(), a.to_string())));
            let cfg = resolve(&common, overrides, err)?;
            configure_threads(cfg.deterministic);
            let (train, test) = split_corpus(&io::read_corpus(&corpus)?, &cfg)?;
            let emb = embeddings.map(|p| load_embeddings(&p, &cfg)).transpose()?;
            let arms = run_ablation(kind, &train, &test, &cfg, emb.as_ref())?;
            let refs: Vec<(&str, &EvalReport)> = arms.iter().map(|a| (a.label.as_str(), &a.report)).collect();
            let k = if cfg.cutoffs.contains(&10) { 10 } else { cfg.cutoffs[0] };
            let mut meta = vec![format!("ablation={}", kind.as_str())];
            meta.extend(provenance(&cfg));
            emit(&report::comparison_tsv(&refs, k, &meta)?, path.as_deref(), out)?;
        }
        Command::Gradcheck { encoder, attention, seed, eps, tolerance } => {
            let r = check_tiny_gradients(encoder, attention, seed, eps)?;
            let pass = r.max_rel_error < tolerance;
            writeln!(
                out,
                "{encoder}+{attention}\tmax_rel_error {:.3e}\tchecked {}\tkinks {}\t{}",
                r.max_rel_error,
                r.checked,
                r.kinks,
                if pass { "PASS" } else { "FAIL" }
            )?;
            if !pass {
                return Ok(1);
            }
        }
        Command::Expand { ckpt, k } => {
            let (model, _) = checkpoint::load(&ckpt)?;
            repl(&model, k, input, out)?;
        }
    }
    Ok(0)
}

fn emit(text: &str, path: Option<&Path>, out: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(crate::at(p))?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

/// One query per line, `seed | context`. Bad lines get an `error:` line and
/// the loop continues.
fn repl(model: &CaseModel<f32>, k: usize, input: &mut dyn BufRead, out: &mut dyn Write) -> Result<()> {
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let Some((seed, context)) = line.split_once('|') else {
            writeln!(out, "error: expected `seed | context with {PLACEHOLDER}`")?;
            continue;
        };
        let context: Vec<&str> = context.split_whitespace().collect();
        match model.expand(seed.trim(), &context, k) {
            Ok(list) => {
                for (i, e) in list.iter().enumerate() {
                    writeln!(out, "{}\t{}\t{:.6}", i + 1, e.term, e.probability)?;
                }
            }
            Err(e) => writeln!(out, "error: {e}")?,
        }
        writeln!(out)?;
        out.flush()?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strings(a: &[&str]) -> Vec<String> {
        a.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn overrides_are_split_out() {
        let (rest, ov) = extract_overrides(&strings(&["train", "--in", "c.tsv", "--epochs", "3", "--lambda1=0.4", "--seed", "2", "--batch-size", "8"]));
        assert_eq!(rest, strings(&["train", "--in", "c.tsv", "--seed", "2"]));
        assert_eq!(ov, [("epochs".into(), "3".into()), ("lambda1".into(), "0.4".into()), ("batch_size".into(), "8".into())]);
    }

    #[test]
    fn usage_errors_exit_two() {
        let mut o = Vec::new();
        let mut e = Vec::new();
        assert_eq!(run(&strings(&["frobnicate"]), &mut &b""[..], &mut o, &mut e), USAGE_EXIT);
        assert_eq!(run(&strings(&["gradcheck", "--bogus"]), &mut &b""[..], &mut o, &mut e), USAGE_EXIT);
        assert_eq!(run(&strings(&["gradcheck", "--encoder", "tree"]), &mut &b""[..], &mut o, &mut e), USAGE_EXIT);
    }

    #[test]
    fn runtime_errors_are_one_line() {
        let mut o = Vec::new();
        let mut e = Vec::new();
        let code = run(&strings(&["expand", "--ckpt", "/nonexistent/m.case"]), &mut &b""[..], &mut o, &mut e);
        assert_eq!(code, 1);
        let text = String::from_utf8(e).unwrap();
        assert!(text.starts_with("error: io: "));
        assert_eq!(text.lines().count(), 1);
    }

    #[test]
    fn gradcheck_command() {
        let mut o = Vec::new();
        let mut e = Vec::new();
        let code = run(&strings(&["gradcheck", "--encoder", "nbow", "--attention", "trans_dot"]), &mut &b""[..], &mut o, &mut e);
        let text = String::from_utf8(o).unwrap();
        assert_eq!(code, 0, "{text}");
        assert!(text.starts_with("nbow+trans_dot\tmax_rel_error "));
        assert!(text.trim_end().ends_with("PASS"));
    }
}
