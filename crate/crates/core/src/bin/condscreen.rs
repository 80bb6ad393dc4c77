use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use condscreen::classify::{marker_pipeline, ClassifierKind, LabeledTable};
use condscreen::datagen::{Dataset, ScenarioSpec};
use condscreen::harness::{format_set, run_scenario, write_outputs, SimulationConfig};
use condscreen::pathwise::{ebic_from_rss, ebic_select, folp_path_with, fr_path, FolpOptions};
use condscreen::screeners::{rank_descending, select_model, ScreenMethod, Screener, SelectionRule};
use condscreen::{Error, IndexSet, Result};

/// Conditional variable screening for high-dimensional linear models.
#[derive(Parser)]
#[command(name = "condscreen", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte-Carlo scenario and write summary.csv, records.csv and manifest.json.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads (0 = one per core).
        #[arg(long, default_value_t = 0)]
        workers: usize,
        /// Override the configured master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Leave time_s empty so outputs are reproducible byte for byte.
        #[arg(long)]
        no_timing: bool,
    },
    /// Score and rank predictors; prints `rank,index,score`.
    Screen {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_parser = parse_screen_method)]
        method: ScreenMethod,
        #[command(flatten)]
        condition: Condition,
        #[arg(
            long,
            conflicts_with = "threshold",
            required_unless_present = "threshold"
        )]
        top: Option<usize>,
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Build a solution path; prints `step,index,provenance,rss,ebic`.
    Select {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_parser = ["folp", "fr"])]
        method: String,
        #[command(flatten)]
        condition: Condition,
        /// Path length (default floor(n / ln n)).
        #[arg(long)]
        dn: Option<usize>,
        /// Choose a prefix by extended BIC and report it on stderr.
        #[arg(long)]
        ebic: bool,
        #[arg(long)]
        incremental: bool,
    },
    /// Screen extra features given known markers, then classify.
    Classify {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        label_col: String,
        /// 1-based training rows, e.g. `1-38`.
        #[arg(long)]
        train_rows: String,
        /// Comma-separated marker feature names.
        #[arg(long, value_delimiter = ',')]
        markers: Vec<String>,
        #[arg(long, default_value_t = 1)]
        extra: usize,
        #[arg(long, value_parser = parse_classifier)]
        model: ClassifierKind,
    },
    /// Write one replicate of a built-in example as CSV (`y,x1,...,xp`).
    Generate {
        #[arg(long)]
        example: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: usize,
        #[arg(long)]
        r2: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// 1-based replicate number.
        #[arg(long, default_value_t = 1)]
        replicate: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Condition {
    /// Comma-separated 1-based conditioning indices.
    #[arg(long, value_delimiter = ',')]
    condition: Vec<usize>,
}

impl Condition {
    fn index_set(&self, p: usize) -> Result<IndexSet> {
        if self.condition.contains(&0) {
            return Err(Error::InvalidIndexSet("indices are 1-based".into()));
        }
        let s = IndexSet::from_unsorted(self.condition.iter().map(|i| i - 1).collect())?;
        s.check_bound(p)?;
        Ok(s)
    }
}

fn parse_screen_method(s: &str) -> std::result::Result<ScreenMethod, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_classifier(s: &str) -> std::result::Result<ClassifierKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn read_dataset(path: &PathBuf) -> Result<Dataset> {
    Dataset::read_csv(BufReader::new(File::open(path)?))
}

fn run(cli: Cli) -> Result<()> {
    let stdout = io::stdout();
    match cli.command {
        Command::Simulate {
            config,
            out,
            workers,
            seed,
            no_timing,
        } => {
            let mut cfg = SimulationConfig::from_json(&std::fs::read_to_string(&config)?)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if no_timing {
                cfg.timing = false;
            }
            let result = run_scenario(&cfg, workers)?;
            write_outputs(&result, &out)?;
            let invalid = result.summary.iter().filter(|r| !r.valid).count();
            eprintln!(
                "wrote {} summary rows and {} records to {}",
                result.summary.len(),
                result.records.len(),
                out.display()
            );
            if invalid > 0 {
                eprintln!("{invalid} cell(s) marked invalid; see manifest.json");
            }
        }
        Command::Screen {
            input,
            method,
            condition,
            top,
            threshold,
        } => {
            let ds = read_dataset(&input)?;
            let c = condition.index_set(ds.p())?;
            let scores = Screener::new(&ds).scores(method, &c)?;
            let rule = match (top, threshold) {
                (Some(d), _) => SelectionRule::Top(d),
                (None, Some(g)) => SelectionRule::Threshold(g),
                (None, None) => unreachable!("clap requires one of --top/--threshold"),
            };
            let model = select_model(&scores, rule)?;
            let mut w = csv::Writer::from_writer(stdout.lock());
            w.write_record(["rank", "index", "score"])?;
            for (rank, j) in rank_descending(&scores)
                .into_iter()
                .filter(|&j| model.contains(j))
                .enumerate()
            {
                let s = scores.score_of(j).expect("ranked index in domain");
                w.write_record([(rank + 1).to_string(), (j + 1).to_string(), s.to_string()])?;
            }
            w.flush()?;
            if scores.fallback {
                eprintln!("note: scores computed through the pseudo-inverse fallback");
            }
        }
        Command::Select {
            input,
            method,
            condition,
            dn,
            ebic,
            incremental,
        } => {
            let ds = read_dataset(&input)?;
            let (n, p) = (ds.n(), ds.p());
            let c = condition.index_set(p)?;
            let dn = dn.unwrap_or_else(|| condscreen::screeners::default_model_size(n));
            let path = if method == "folp" {
                folp_path_with(&Screener::new(&ds), &c, dn, FolpOptions { incremental })?
            } else {
                fr_path(&ds, &c, dn)?
            };
            let t = path.conditioning.len();
            let mut w = csv::Writer::from_writer(stdout.lock());
            w.write_record(["step", "index", "provenance", "rss", "ebic"])?;
            if path.data_driven {
                let j = path.conditioning.as_slice()[0];
                let x_c = ds.x.select_columns([j].iter());
                let r = condscreen::linalg::rss(&x_c, &ds.y)?;
                w.write_record([
                    "0".to_string(),
                    (j + 1).to_string(),
                    "data_driven".into(),
                    r.to_string(),
                    ebic_from_rss(r, 1, n, p).to_string(),
                ])?;
            }
            for (k, &j) in path.picks.iter().enumerate() {
                let rss = path.rss_trace[k];
                w.write_record([
                    (k + 1).to_string(),
                    (j + 1).to_string(),
                    path.provenance[k].to_string(),
                    rss.map(|r| r.to_string()).unwrap_or_default(),
                    rss.map(|r| ebic_from_rss(r, t + k + 1, n, p).to_string())
                        .unwrap_or_default(),
                ])?;
            }
            w.flush()?;
            if ebic {
                let sel = ebic_select(&path, &ds)?;
                eprintln!(
                    "selected model (prefix {} of {}): {}",
                    sel.prefix_len,
                    path.len(),
                    format_set(&sel.model)
                );
            }
        }
        Command::Classify {
            data,
            label_col,
            train_rows,
            markers,
            extra,
            model,
        } => {
            let table = LabeledTable::read_csv(
                BufReader::new(File::open(&data)?),
                &label_col,
                &train_rows,
            )?;
            let marker_idx = markers
                .iter()
                .map(|m| table.feature_index(m))
                .collect::<Result<Vec<_>>>()?;
            let report = marker_pipeline(&table, &marker_idx, extra, model)?;
            let mut out = stdout.lock();
            writeln!(out, "features: {}", report.feature_names.join(", "))?;
            writeln!(
                out,
                "training errors: {}/{}",
                report.train_errors(),
                table.train.len()
            )?;
            writeln!(
                out,
                "testing errors: {}/{}",
                report.test_errors(),
                table.test.len()
            )?;
            for (label, c) in [
                ("training", report.train_confusion),
                ("testing", report.test_confusion),
            ] {
                writeln!(
                    out,
                    "{label} confusion (rows true {0}/{1}, columns predicted {0}/{1}): [[{2}, {3}], [{4}, {5}]]",
                    table.class_names[0], table.class_names[1], c[0][0], c[0][1], c[1][0], c[1][1]
                )?;
            }
            if report.separated {
                writeln!(
                    out,
                    "note: training classes separable; largest-margin fit used"
                )?;
            }
        }
        Command::Generate {
            example,
            n,
            p,
            r2,
            seed,
            replicate,
            out,
        } => {
            if replicate == 0 {
                return Err(Error::InvalidSpec("replicate numbers are 1-based".into()));
            }
            let spec = ScenarioSpec::example(&example, n, p, r2, 1, seed)?;
            let ds = spec
                .draw_replicate(replicate - 1)?
                .dataset(&spec.covariance, r2)?;
            match out {
                Some(path) => ds.write_csv(File::create(path)?)?,
                None => ds.write_csv(stdout.lock())?,
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
