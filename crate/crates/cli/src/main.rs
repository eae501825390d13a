use std::fs;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use chronus_core::corpus::{training_set, vocabulary_for, Corpus};
use chronus_core::dialog::DialogState;
use chronus_core::eval::{concept_score, evaluate, UnigramTagger};
use chronus_core::model::DEFAULT_K;
use chronus_core::pipeline::{Artifacts, Outcome, Pipeline, Turn};
use chronus_core::{demo, synth, training, ConceptDictionary, ConceptHmm, SuperwordLexicon, SynonymGroups, Vocabulary};

mod repl;

#[derive(Parser)]
#[command(name = "chronus", version, about = "Concept-HMM decoding of flight queries")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Data files. Anything not given falls back to the bundled demo.
#[derive(Args, Clone, Default)]
struct DataArgs {
    #[arg(long, value_name = "FILE")]
    lexicon: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    dictionary: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    values: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    db: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    conventions: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    model: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate a model from a gold-labeled corpus.
    Train {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, value_name = "FILE")]
        corpus: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_K)]
        k: f64,
        /// Synonym groups to tie after estimation.
        #[arg(long, value_name = "FILE")]
        synonyms: Option<PathBuf>,
        /// Write the model here instead of stdout.
        #[arg(long, short, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Decode sentences given as arguments, or one per stdin line.
    Decode {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        segments: bool,
        #[arg(long)]
        template: bool,
        #[arg(long)]
        answer: bool,
        #[arg(long)]
        emit_sql: bool,
        sentences: Vec<String>,
    },
    /// Score a corpus against its gold labels and reference answers.
    Eval {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, value_name = "FILE")]
        corpus: Option<PathBuf>,
        /// One line per sentence after the summary.
        #[arg(long)]
        per_sentence: bool,
        /// Only decode and score gold segments; needs no value tables or database.
        #[arg(long)]
        concepts_only: bool,
        /// Also score a unigram tagger trained on this corpus.
        #[arg(long, value_name = "FILE", requires = "concepts_only")]
        baseline: Option<PathBuf>,
    },
    /// Interactive dialog; `:reset` clears the context, `:quit` leaves.
    Repl {
        #[command(flatten)]
        data: DataArgs,
        /// Read turns from a file instead of stdin.
        #[arg(long, value_name = "FILE")]
        script: Option<PathBuf>,
    },
    /// Semi-supervised training loop over a partly labeled corpus.
    Loop {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, value_name = "FILE")]
        corpus: Option<PathBuf>,
        #[arg(long, default_value_t = 20)]
        max_iters: usize,
        #[arg(long, default_value_t = DEFAULT_K)]
        k: f64,
        /// Write the final model here.
        #[arg(long, short, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Write a synthetic corpus to a directory.
    Gen {
        kind: GenKind,
        #[arg(long, default_value_t = 1993)]
        seed: u64,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        /// Training sentences (default depends on the kind).
        #[arg(long)]
        train: Option<usize>,
        #[arg(long)]
        test: Option<usize>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum GenKind {
    /// Sampled from a five-concept, thirty-word concept HMM.
    Hmm,
    /// Flight requests with city-name and numeral spans.
    Superword,
    /// HMM samples whose test entries carry shuffled win templates.
    Align,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn read_or(path: Option<&Path>, bundled: &'static str) -> Result<String> {
    match path {
        Some(p) => fs::read_to_string(p).with_context(|| format!("reading {}", p.display())),
        None => Ok(bundled.to_string()),
    }
}

impl DataArgs {
    fn lexicon(&self) -> Result<SuperwordLexicon> {
        Ok(SuperwordLexicon::parse(&read_or(self.lexicon.as_deref(), demo::LEXICON)?)?)
    }

    fn dictionary(&self) -> Result<ConceptDictionary> {
        Ok(ConceptDictionary::parse(&read_or(self.dictionary.as_deref(), demo::DICTIONARY)?)?)
    }

    fn model(&self) -> Result<ConceptHmm> {
        Ok(ConceptHmm::from_text(&read_or(self.model.as_deref(), demo::MODEL)?)?)
    }

    fn artifacts(&self) -> Result<Artifacts> {
        Ok(Artifacts::parse(
            &read_or(self.lexicon.as_deref(), demo::LEXICON)?,
            &read_or(self.dictionary.as_deref(), demo::DICTIONARY)?,
            &read_or(self.values.as_deref(), demo::VALUES)?,
            &read_or(self.db.as_deref(), demo::DATABASE)?,
            &read_or(self.conventions.as_deref(), demo::CONVENTIONS)?,
        )?)
    }

    fn pipeline(&self) -> Result<Pipeline> {
        Ok(Pipeline::new(self.artifacts()?, self.model()?)?)
    }
}

fn write_output(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn percent((matched, total): (usize, usize)) -> String {
    if total == 0 {
        "n/a".to_string()
    } else {
        format!("{:.2}\t({matched}/{total})", 100.0 * matched as f64 / total as f64)
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Train {
            data,
            corpus,
            k,
            synonyms,
            out,
        } => {
            let lexicon = data.lexicon()?;
            let corpus = Corpus::parse(&read_or(corpus.as_deref(), demo::TRAIN)?)?;
            let seg = training_set(&corpus, &lexicon)?;
            let vocab = Vocabulary::new(vocabulary_for(&lexicon, &seg))?;
            let mut model = ConceptHmm::train_mle(&seg, &data.dictionary()?, &vocab, k)?;
            if let Some(path) = synonyms {
                let groups = SynonymGroups::parse(&read_or(Some(&path), "")?)?;
                model = model.apply_synonym_smoothing(&groups)?;
            }
            write_output(out.as_deref(), &model.to_text())
        }
        Command::Decode {
            data,
            segments,
            template,
            answer,
            emit_sql,
            sentences,
        } => {
            let show_segments = segments || !(template || answer || emit_sql);
            let pipeline = if template || answer || emit_sql {
                data.pipeline()?
            } else {
                // Segments need neither value tables nor a database.
                let model = data.model()?;
                let lexicon = data.lexicon()?;
                return decode_segments(&model, &lexicon, sentences);
            };
            let mut stdout = io::stdout().lock();
            for text in inputs(sentences)? {
                let turn = pipeline.respond(&DialogState::new(), &text)?.1;
                if show_segments {
                    writeln!(stdout, "{}", turn.understanding.decode.segmentation)?;
                }
                if template {
                    writeln!(stdout, "{}", turn.understanding.template)?;
                }
                if answer || emit_sql {
                    write_outcome(&mut stdout, &turn, answer, emit_sql)?;
                }
            }
            Ok(())
        }
        Command::Eval {
            data,
            corpus,
            per_sentence,
            concepts_only,
            baseline,
        } => {
            let corpus = Corpus::parse(&read_or(corpus.as_deref(), demo::EVAL)?)?;
            if concepts_only {
                let lexicon = data.lexicon()?;
                println!("concept accuracy\t{}", percent(concept_score(&data.model()?, &lexicon, &corpus)?));
                if let Some(path) = baseline {
                    let train = Corpus::parse(&read_or(Some(&path), "")?)?;
                    let tagger = UnigramTagger::train(&training_set(&train, &lexicon)?);
                    println!("unigram baseline\t{}", percent(tagger.score(&lexicon, &corpus)?));
                }
                return Ok(());
            }
            print!("{}", evaluate(&data.pipeline()?, &corpus)?.render(per_sentence));
            Ok(())
        }
        Command::Repl { data, script } => {
            let pipeline = data.pipeline()?;
            let stdout = io::stdout();
            match script {
                Some(path) => {
                    let text = read_or(Some(&path), "")?;
                    repl::run(&pipeline, text.as_bytes(), stdout.lock(), false)
                }
                None => repl::run(&pipeline, io::stdin().lock(), stdout.lock(), true),
            }
        }
        Command::Loop {
            data,
            corpus,
            max_iters,
            k,
            out,
        } => {
            let artifacts = data.artifacts()?;
            let corpus = Corpus::parse(&read_or(corpus.as_deref(), demo::LOOP)?)?;
            let seed = training_set(&corpus, &artifacts.lexicon)?;
            if seed.is_empty() {
                bail!("the corpus has no gold-labeled seed entries");
            }
            let vocab = Vocabulary::new(vocabulary_for(&artifacts.lexicon, &seed))?;
            let model = ConceptHmm::train_mle(&seed, &artifacts.dictionary, &vocab, k)?;
            let pipeline = Pipeline::new(artifacts, model)?;
            let (model, report) = training::run_training_loop(&corpus, &seed, &pipeline, max_iters)?;
            print!("{}", report.render());
            if let Some(p) = out {
                write_output(Some(&p), &model.to_text())?;
            }
            Ok(())
        }
        Command::Gen {
            kind,
            seed,
            out,
            train,
            test,
        } => {
            let generated = match kind {
                GenKind::Hmm => synth::hmm_corpus(seed, train.unwrap_or(2000), test.unwrap_or(500))?,
                GenKind::Superword => synth::superword_corpus(seed, train.unwrap_or(2000), test.unwrap_or(500))?,
                GenKind::Align => synth::align_corpus(seed, train.unwrap_or(1000), test.unwrap_or(200))?,
            };
            fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            for (name, text) in generated.files() {
                write_output(Some(&out.join(name)), &text)?;
            }
            Ok(())
        }
    }
}

fn inputs(sentences: Vec<String>) -> Result<Vec<String>> {
    if !sentences.is_empty() {
        return Ok(sentences);
    }
    let mut lines = Vec::new();
    for line in io::stdin().lock().lines() {
        let line = line?;
        if !line.trim().is_empty() {
            lines.push(line);
        }
    }
    Ok(lines)
}

fn decode_segments(model: &ConceptHmm, lexicon: &SuperwordLexicon, sentences: Vec<String>) -> Result<()> {
    let mut stdout = io::stdout().lock();
    for text in inputs(sentences)? {
        let lattice = lexicon.lex_parse(&text)?;
        let decode = chronus_core::decoder::viterbi_decode_lattice(model, &lattice)?;
        writeln!(stdout, "{}", decode.segmentation)?;
    }
    Ok(())
}

/// `rejected`, `untranslatable`, or the answer (and query) of one turn.
pub(crate) fn write_outcome(out: &mut impl Write, turn: &Turn, answer: bool, sql: bool) -> io::Result<()> {
    match &turn.outcome {
        Outcome::Rejected { fraction } => match fraction {
            Some(f) => writeln!(out, "rejected\t{f:.2}"),
            None => writeln!(out, "rejected\tn/a"),
        },
        Outcome::Untranslatable(e) => writeln!(out, "untranslatable\t{e}"),
        Outcome::Answered { plan, answer: a } => {
            if sql {
                writeln!(out, "{}", plan.to_sql())?;
            }
            if answer {
                out.write_all(a.render().as_bytes())?;
            }
            Ok(())
        }
    }
}
