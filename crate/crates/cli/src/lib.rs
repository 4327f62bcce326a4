//! Command-line front end for the `bomdiff` library.
//!
//! [`run`] does all the work and returns the exit code together with the
//! text destined for stdout and stderr, so the binary is a thin wrapper and
//! tests can drive the tool in-process.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use bomdiff::flatcompare::{
    cross_field_consistency, extract_field, multiset_diff, organization_delta, set_diff,
    unhashed_count, FieldSelector, JAVA_STDLIB_PREFIXES,
};
use bomdiff::fuzzy::{all_pairs_matches, FuzzyConfig};
use bomdiff::graphcompare::{build_graph, match_stats, merge_graphs};
use bomdiff::ingest::{parse_as, parse_document, IngestOptions};
use bomdiff::report::{
    render_json, render_table, to_dot, Coverage, DiffReport, DotOptions, GraphSummary,
    LicenseCoverage, UnhashedCounts,
};
use bomdiff::{BomDocument, BomFormat};
use clap::{Args, Parser, Subcommand, ValueEnum};

pub const EXIT_SAME: i32 = 0;
pub const EXIT_DIFFERENT: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INPUT: i32 = 3;

pub const THRESHOLD_ENV: &str = "BOMDIFF_THRESHOLD";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

#[derive(Parser, Debug)]
#[command(
    name = "bomdiff",
    version,
    about = "Compare software and hardware bills of materials"
)]
struct Cli {
    #[command(flatten)]
    input: InputArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct InputArgs {
    /// Parse inputs as this format instead of detecting it from content
    #[arg(long, global = true, value_enum, value_name = "FORMAT")]
    format_in: Option<InputFormat>,
    /// Drop components whose name or purl type starts with PREFIX
    #[arg(long = "drop-prefix", global = true, value_name = "PREFIX")]
    drop_prefixes: Vec<String>,
    /// Keep duplicate components
    #[arg(long, global = true)]
    no_dedup: bool,
    /// Keep repeated HBOM rows separate
    #[arg(long, global = true)]
    no_fold: bool,
    /// Stamp the output with the current UTC time
    #[arg(long, global = true)]
    timestamp: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Summarize one document
    Inspect {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
        format: ReportFormat,
    },
    /// Compare component fields
    Compare(CompareArgs),
    /// Merge the two dependency trees
    Graph(GraphArgs),
    /// Compare package organizations
    Orgs {
        left: PathBuf,
        right: PathBuf,
        /// Ignore organizations starting with PREFIX
        #[arg(long = "exclude", value_name = "PREFIX")]
        excludes: Vec<String>,
        /// Do not ignore the Java platform namespaces
        #[arg(long)]
        no_default_excludes: bool,
        #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
        format: ReportFormat,
    },
    /// Compare licenses and license coverage
    Licenses {
        left: PathBuf,
        right: PathBuf,
        #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
        format: ReportFormat,
    },
}

#[derive(Args, Debug)]
struct CompareArgs {
    left: PathBuf,
    right: PathBuf,
    /// Field to compare; repeatable, all fields when omitted
    #[arg(long = "field", value_name = "FIELD", value_parser = parse_field)]
    fields: Vec<FieldSelector>,
    #[arg(long, value_enum, default_value_t = Mode::List)]
    mode: Mode,
    /// Also list similar names across the two documents
    #[arg(long)]
    fuzzy: bool,
    #[command(flatten)]
    threshold: ThresholdArg,
    /// Leave identical names out of the fuzzy list
    #[arg(long)]
    exclude_exact: bool,
    /// Cross-check names against hash digests
    #[arg(long)]
    consistency: bool,
    #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
    format: ReportFormat,
}

#[derive(Args, Debug)]
struct GraphArgs {
    left: PathBuf,
    right: PathBuf,
    #[command(flatten)]
    threshold: ThresholdArg,
    #[arg(long, value_enum, default_value_t = GraphFormat::Text)]
    format: GraphFormat,
    /// Print only the match statistics
    #[arg(long)]
    stats: bool,
}

#[derive(Args, Debug)]
struct ThresholdArg {
    /// Minimum similarity (exclusive) for a fuzzy match
    #[arg(long, env = THRESHOLD_ENV, default_value_t = 0.85, value_parser = parse_threshold)]
    threshold: f64,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum InputFormat {
    Cyclonedx,
    Spdx,
    Hbom,
}

impl From<InputFormat> for BomFormat {
    fn from(f: InputFormat) -> Self {
        match f {
            InputFormat::Cyclonedx => BomFormat::CycloneDxJson,
            InputFormat::Spdx => BomFormat::SpdxJson,
            InputFormat::Hbom => BomFormat::GenericHbom,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    List,
    Set,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum ReportFormat {
    Text,
    Json,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum GraphFormat {
    Dot,
    Json,
    Text,
}

fn parse_field(s: &str) -> Result<FieldSelector, String> {
    s.parse()
}

fn parse_threshold(s: &str) -> Result<f64, String> {
    let t: f64 = s
        .trim()
        .parse()
        .map_err(|_| format!("`{s}` is not a number"))?;
    if (0.0..=1.0).contains(&t) {
        Ok(t)
    } else {
        Err(format!("{t} is outside [0, 1]"))
    }
}

enum Failure {
    Usage(String),
    Input(String),
}

impl Failure {
    fn into_outcome(self) -> Outcome {
        let (code, message) = match self {
            Failure::Usage(m) => (EXIT_USAGE, m),
            Failure::Input(m) => (EXIT_INPUT, m),
        };
        Outcome {
            code,
            stdout: String::new(),
            stderr: format!("error: {message}\n"),
        }
    }
}

/// Runs the tool on `argv` (program name first).
pub fn run<I, T>(argv: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                Outcome {
                    code: EXIT_USAGE,
                    stdout: String::new(),
                    stderr: text,
                }
            } else {
                Outcome {
                    code: EXIT_SAME,
                    stdout: text,
                    stderr: String::new(),
                }
            };
        }
    };
    execute(cli).unwrap_or_else(Failure::into_outcome)
}

struct Loader {
    format: Option<BomFormat>,
    opts: IngestOptions,
}

impl Loader {
    fn new(input: &InputArgs) -> Result<Self, Failure> {
        let opts = IngestOptions {
            dedup: !input.no_dedup,
            fold_quantities: !input.no_fold,
            drop_name_prefixes: input.drop_prefixes.clone(),
        };
        opts.validate().map_err(|e| Failure::Usage(e.to_string()))?;
        Ok(Loader {
            format: input.format_in.map(BomFormat::from),
            opts,
        })
    }

    fn load(&self, path: &Path) -> Result<BomDocument, Failure> {
        let bytes =
            std::fs::read(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        let parsed = match self.format {
            Some(format) => parse_as(format, &bytes, &name, &self.opts),
            None => parse_document(&bytes, &name, &self.opts),
        };
        parsed.map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
    }

    /// Parses both inputs concurrently.
    fn load_pair(&self, left: &Path, right: &Path) -> Result<(BomDocument, BomDocument), Failure> {
        let (l, r) = std::thread::scope(|s| {
            let handle = s.spawn(|| self.load(left));
            let r = self.load(right);
            (handle.join().expect("parser thread panicked"), r)
        });
        Ok((l?, r?))
    }
}

fn execute(cli: Cli) -> Result<Outcome, Failure> {
    let loader = Loader::new(&cli.input)?;
    let stamp = cli
        .input
        .timestamp
        .then(|| chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true));

    match cli.command {
        Command::Inspect { file, format } => {
            let doc = loader.load(&file)?;
            Ok(ok(EXIT_SAME, inspect(&doc, format, stamp.as_deref())))
        }
        Command::Compare(args) => {
            let (l, r) = loader.load_pair(&args.left, &args.right)?;
            let mut report = new_report(&l, &r, stamp);
            let fields = if args.fields.is_empty() {
                FieldSelector::ALL.to_vec()
            } else {
                args.fields.clone()
            };
            for field in fields {
                let (a, b) = (extract_field(&l, field), extract_field(&r, field));
                let diff = match args.mode {
                    Mode::List => multiset_diff(&a, &b),
                    Mode::Set => set_diff(&a, &b),
                };
                report.field_diffs.insert(field, diff);
            }
            if args.fuzzy {
                let cfg = FuzzyConfig::default().with_threshold(args.threshold.threshold);
                let a = extract_field(&l, FieldSelector::Name);
                let b = extract_field(&r, FieldSelector::Name);
                report.fuzzy = all_pairs_matches(a.values(), b.values(), &cfg, args.exclude_exact)
                    .map_err(|e| Failure::Usage(e.to_string()))?;
            }
            if args.consistency {
                report.findings = cross_field_consistency(&l, &r);
                report.unhashed = Some(UnhashedCounts {
                    left: unhashed_count(&l),
                    right: unhashed_count(&r),
                });
            }
            Ok(emit(&report, args.format))
        }
        Command::Graph(args) => {
            let (l, r) = loader.load_pair(&args.left, &args.right)?;
            let cfg = FuzzyConfig::default().with_threshold(args.threshold.threshold);
            let merged = merge_graphs(&build_graph(&l), &build_graph(&r), &cfg)
                .map_err(|e| Failure::Usage(e.to_string()))?;
            let stats = match_stats(&merged);
            let code = if stats.left_only + stats.right_only + stats.fuzzy > 0 {
                EXIT_DIFFERENT
            } else {
                EXIT_SAME
            };
            if args.stats {
                let line = match args.format {
                    GraphFormat::Json => {
                        serde_json::to_string(&stats).expect("stats serialize") + "\n"
                    }
                    _ => format!(
                        "matched={} left_only={} right_only={} fuzzy={}\n",
                        stats.matched, stats.left_only, stats.right_only, stats.fuzzy
                    ),
                };
                return Ok(ok(code, line));
            }
            let out = match args.format {
                GraphFormat::Dot => {
                    let mut dot = String::new();
                    if let Some(ts) = &stamp {
                        dot.push_str(&format!("// generated {ts}\n"));
                    }
                    dot.push_str(&to_dot(
                        &merged,
                        &DotOptions {
                            title: Some(format!("{} vs {}", l.source_name(), r.source_name())),
                        },
                    ));
                    dot
                }
                GraphFormat::Json | GraphFormat::Text => {
                    let mut report = new_report(&l, &r, stamp);
                    report.graph = Some(GraphSummary::from_merged(&merged));
                    if args.format == GraphFormat::Json {
                        render_json(&report)
                    } else {
                        render_table(&report)
                    }
                }
            };
            Ok(ok(code, out))
        }
        Command::Orgs {
            left,
            right,
            excludes,
            no_default_excludes,
            format,
        } => {
            let (l, r) = loader.load_pair(&left, &right)?;
            let mut prefixes: Vec<String> = if no_default_excludes {
                Vec::new()
            } else {
                JAVA_STDLIB_PREFIXES.iter().map(|p| p.to_string()).collect()
            };
            prefixes.extend(excludes);
            let mut report = new_report(&l, &r, stamp);
            report.field_diffs.insert(
                FieldSelector::Organization,
                organization_delta(&l, &r, &prefixes),
            );
            Ok(emit(&report, format))
        }
        Command::Licenses {
            left,
            right,
            format,
        } => {
            let (l, r) = loader.load_pair(&left, &right)?;
            let mut report = new_report(&l, &r, stamp);
            let diff = multiset_diff(
                &extract_field(&l, FieldSelector::License),
                &extract_field(&r, FieldSelector::License),
            );
            report.field_diffs.insert(FieldSelector::License, diff);
            report.license_coverage = Some(LicenseCoverage {
                left: Coverage::of(&l),
                right: Coverage::of(&r),
            });
            Ok(emit(&report, format))
        }
    }
}

fn ok(code: i32, stdout: String) -> Outcome {
    Outcome {
        code,
        stdout,
        stderr: String::new(),
    }
}

fn new_report(l: &BomDocument, r: &BomDocument, stamp: Option<String>) -> DiffReport {
    let mut report = DiffReport::new(l.source_name(), r.source_name());
    report.generated_at = stamp;
    report
}

fn emit(report: &DiffReport, format: ReportFormat) -> Outcome {
    let code = if report.has_differences() {
        EXIT_DIFFERENT
    } else {
        EXIT_SAME
    };
    let text = match format {
        ReportFormat::Text => render_table(report),
        ReportFormat::Json => render_json(report),
    };
    ok(code, text)
}

fn inspect(doc: &BomDocument, format: ReportFormat, stamp: Option<&str>) -> String {
    let quantity: u64 = doc.components().iter().map(|c| c.quantity).sum();
    let fields: Vec<(FieldSelector, u64, usize)> = FieldSelector::ALL
        .iter()
        .map(|&f| {
            let m = extract_field(doc, f);
            (f, m.total(), m.unique())
        })
        .collect();
    match format {
        ReportFormat::Json => {
            let mut v = serde_json::json!({
                "source_name": doc.source_name(),
                "format": doc.format(),
                "spec_version": doc.spec_version(),
                "subject": doc.subject().map(|s| s.as_str()),
                "components": doc.components().len(),
                "quantity": quantity,
                "relationships": doc.relationships().len(),
                "fields": fields
                    .iter()
                    .map(|(f, total, unique)| (f.to_string(), serde_json::json!({"total": total, "unique": unique})))
                    .collect::<serde_json::Map<_, _>>(),
            });
            if let Some(ts) = stamp {
                v["generated_at"] = ts.into();
            }
            serde_json::to_string_pretty(&v).expect("summary serializes") + "\n"
        }
        ReportFormat::Text => {
            let mut out = String::new();
            if let Some(ts) = stamp {
                out.push_str(&format!("Generated: {ts}\n"));
            }
            let version = if doc.spec_version().is_empty() {
                String::new()
            } else {
                format!(" {}", doc.spec_version())
            };
            out.push_str(&format!(
                "{}: {}{version}\n",
                doc.source_name(),
                doc.format()
            ));
            if let Some(s) = doc.subject() {
                out.push_str(&format!("Subject: {s}\n"));
            }
            out.push_str(&format!(
                "Components: {} (total quantity {quantity})\nRelationships: {}\n",
                doc.components().len(),
                doc.relationships().len()
            ));
            let width = fields
                .iter()
                .map(|(f, ..)| f.label().len())
                .max()
                .unwrap_or(0);
            for (f, total, unique) in fields {
                out.push_str(&format!(
                    "{:<width$}  {total:>6} total  {unique:>6} unique\n",
                    f.label()
                ));
            }
            out
        }
    }
}
