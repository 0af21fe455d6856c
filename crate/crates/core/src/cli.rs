//! The `benford` command line: `analyze`, `track` and `synth`.
//!
//! Exit status is 0 on success, 1 for usage or configuration errors (raised
//! before any input is read) and 2 for data errors.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::PathBuf;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::Error;
use crate::exec::Strategy;
use crate::report::{build_period_report, build_track_report, emit, Format, Report, ReportMeta};
use crate::series::{daily_changes, parse_panel, slice, write_panel, ChangeMode, ChangeSeries};
use crate::synth::{Manipulation, SynthKind, SynthSpec};
use crate::windows::{named_periods, PeriodLabel, PeriodSpec, WindowSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "benford",
    version,
    about = "First-digit (Benford) conformity tests for time-series panels"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Chi-square conformity per entity, tenor and period.
    Analyze(AnalyzeArgs),
    /// Rolling-window conformity tracks with linear trends.
    Track(TrackArgs),
    /// Write a synthetic panel CSV.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Text,
    Csv,
    Json,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Text => Format::Text,
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ChangeModeArg {
    /// s(t) - s(t-1) in basis points.
    Absolute,
    /// (s(t) - s(t-1)) / s(t-1).
    Relative,
}

impl From<ChangeModeArg> for ChangeMode {
    fn from(m: ChangeModeArg) -> Self {
        match m {
            ChangeModeArg::Absolute => ChangeMode::Absolute,
            ChangeModeArg::Relative => ChangeMode::Relative,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PeriodArg {
    Full,
    #[value(name = "pre_crisis", alias = "pre-crisis")]
    PreCrisis,
    Crisis,
    #[value(name = "post_crisis", alias = "post-crisis")]
    PostCrisis,
    Post2010,
}

impl From<PeriodArg> for PeriodLabel {
    fn from(p: PeriodArg) -> Self {
        match p {
            PeriodArg::Full => PeriodLabel::Full,
            PeriodArg::PreCrisis => PeriodLabel::PreCrisis,
            PeriodArg::Crisis => PeriodLabel::Crisis,
            PeriodArg::PostCrisis => PeriodLabel::PostCrisis,
            PeriodArg::Post2010 => PeriodLabel::Post2010,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Benford,
    UniformDigit,
    Constant,
}

impl From<KindArg> for SynthKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Benford => SynthKind::Benford,
            KindArg::UniformDigit => SynthKind::UniformDigit,
            KindArg::Constant => SynthKind::Constant,
        }
    }
}

/// Flags shared by `analyze` and `track`.
#[derive(Debug, Args)]
pub struct InputArgs {
    /// Panel CSV (`date,entity,tenor,spread_bps`); `-` reads standard input.
    #[arg(long, default_value = "-")]
    pub input: String,
    /// Keep only these tenors (repeatable); all tenors when omitted.
    #[arg(long = "tenor")]
    pub tenors: Vec<String>,
    /// Significance level of the chi-square test.
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// How daily changes are computed from spreads.
    #[arg(long, value_enum, default_value_t = ChangeModeArg::Absolute)]
    pub change_mode: ChangeModeArg,
    /// Drop consecutive pairs more than this many calendar days apart; unlimited when omitted.
    #[arg(long)]
    pub max_gap_days: Option<u32>,
    /// Output format.
    #[arg(long, value_enum, default_value_t = FormatArg::Text)]
    pub format: FormatArg,
    /// Write the report here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Start of a custom period (YYYY-MM-DD, inclusive); requires --to.
    #[arg(long, requires = "to")]
    pub from: Option<NaiveDate>,
    /// End of a custom period (YYYY-MM-DD, inclusive); requires --from.
    #[arg(long, requires = "from")]
    pub to: Option<NaiveDate>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Named period (repeatable); all five when neither --period nor --from/--to is given.
    #[arg(long = "period", value_enum)]
    pub periods: Vec<PeriodArg>,
}

#[derive(Debug, Args)]
pub struct TrackArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Restrict the track to one named period; the whole series when omitted.
    #[arg(long, value_enum, conflicts_with_all = ["from", "to"])]
    pub period: Option<PeriodArg>,
    /// Window length in observations.
    #[arg(long, default_value_t = 90)]
    pub window_len: usize,
    /// Offset between consecutive window starts, in observations.
    #[arg(long, default_value_t = 45)]
    pub step: usize,
    /// Keep a trailing partial window when it adds at least this fraction of a step.
    #[arg(long, default_value_t = 0.5)]
    pub min_fill: f64,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Digit behaviour of the generated daily changes.
    #[arg(long, value_enum)]
    pub kind: KindArg,
    /// Number of daily changes (the series has n + 1 quotes).
    #[arg(long)]
    pub n: usize,
    /// Generator seed; required, there is no implicit seed.
    #[arg(long)]
    pub seed: u64,
    /// Entity name written in the panel.
    #[arg(long, default_value = "SYNTH")]
    pub entity: String,
    /// Tenor written in the panel.
    #[arg(long, default_value = "5Y")]
    pub tenor: String,
    /// First quote date; weekends are skipped.
    #[arg(long, default_value = "2008-08-08")]
    pub start: NaiveDate,
    /// Share of changes whose leading digit is forced to --target-digit.
    #[arg(long, requires = "target_digit")]
    pub manipulate: Option<f64>,
    /// Leading digit forced on manipulated changes (1-9).
    #[arg(long, requires = "manipulate")]
    pub target_digit: Option<u8>,
    /// Write the panel here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Data(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidAlpha(_)
            | Error::InvalidWindow(_)
            | Error::InvalidSynth(_)
            | Error::InvalidRange { .. } => Failure::Usage(e.to_string()),
            other => Failure::Data(other.to_string()),
        }
    }
}

fn io_failure(context: &str, e: std::io::Error) -> Failure {
    Failure::Data(format!("{context}: {e}"))
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_from<I, T>(
    args: I,
    stdin: &mut dyn Read,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{}", e.render());
                    EXIT_OK
                }
                _ => EXIT_USAGE,
            };
        }
    };
    match run(&cli.command, stdin, stdout, stderr) {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Data(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            EXIT_DATA
        }
    }
}

fn run(
    command: &Command,
    stdin: &mut dyn Read,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), Failure> {
    match command {
        Command::Analyze(args) => analyze(args, stdin, stdout, stderr),
        Command::Track(args) => track(args, stdin, stdout, stderr),
        Command::Synth(args) => synth(args, stdout),
    }
}

fn check_common(args: &InputArgs) -> Result<Option<PeriodSpec>, Failure> {
    crate::stats::check_alpha(args.alpha)?;
    match (args.from, args.to) {
        (Some(from), Some(to)) => Ok(Some(PeriodSpec::custom(from, to)?)),
        _ => Ok(None),
    }
}

fn load_changes(
    args: &InputArgs,
    stdin: &mut dyn Read,
    stderr: &mut dyn Write,
    keep_short: bool,
) -> Result<Vec<ChangeSeries>, Failure> {
    let panel = if args.input == "-" {
        parse_panel(stdin)?
    } else {
        let file = File::open(&args.input).map_err(|e| io_failure(&args.input, e))?;
        parse_panel(BufReader::new(file))?
    };
    let mut out = Vec::with_capacity(panel.len());
    for series in &panel {
        match daily_changes(series, args.max_gap_days, args.change_mode.into()) {
            Ok(d) => {
                if d.dropped > 0 {
                    let _ = writeln!(
                        stderr,
                        "warning: {}/{}: dropped {} pair(s) wider than {} day(s)",
                        series.entity,
                        series.tenor,
                        d.dropped,
                        args.max_gap_days.unwrap_or(0)
                    );
                }
                out.push(d.series);
            }
            Err(Error::SeriesTooShort { .. }) if keep_short => out.push(ChangeSeries {
                entity: series.entity.clone(),
                tenor: series.tenor.clone(),
                changes: Vec::new(),
            }),
            Err(e) => return Err(e.into()),
        }
    }
    Ok(out)
}

fn common_meta(command: &str, args: &InputArgs) -> ReportMeta {
    ReportMeta::new(command)
        .with("input", &args.input)
        .with("alpha", args.alpha)
        .with(
            "change_mode",
            format!("{:?}", args.change_mode).to_lowercase(),
        )
        .with(
            "max_gap_days",
            args.max_gap_days
                .map_or_else(|| "unlimited".to_string(), |d| d.to_string()),
        )
        .with(
            "tenors",
            if args.tenors.is_empty() {
                "all".to_string()
            } else {
                args.tenors.join(";")
            },
        )
}

fn write_output(text: &str, out: &Option<PathBuf>, stdout: &mut dyn Write) -> Result<(), Failure> {
    match out {
        Some(path) => {
            std::fs::write(path, text).map_err(|e| io_failure(&path.display().to_string(), e))
        }
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| io_failure("stdout", e)),
    }
}

fn tenor_filter(args: &InputArgs) -> Option<&[String]> {
    (!args.tenors.is_empty()).then_some(args.tenors.as_slice())
}

fn analyze(
    args: &AnalyzeArgs,
    stdin: &mut dyn Read,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), Failure> {
    let custom = check_common(&args.input)?;
    let mut periods: Vec<PeriodSpec> = args
        .periods
        .iter()
        .map(|p| PeriodSpec::named((*p).into()).expect("named period"))
        .collect();
    periods.extend(custom);
    if periods.is_empty() {
        periods = named_periods().to_vec();
    }

    let panel = load_changes(&args.input, stdin, stderr, true)?;
    let meta = common_meta("analyze", &args.input).with(
        "periods",
        periods
            .iter()
            .map(PeriodSpec::name)
            .collect::<Vec<_>>()
            .join(";"),
    );
    let report = build_period_report(
        &panel,
        &periods,
        tenor_filter(&args.input),
        args.input.alpha,
        meta,
        Strategy::default(),
    )?;
    let text = emit(&Report::Period(report), args.input.format.into())?;
    write_output(&text, &args.input.out, stdout)
}

fn track(
    args: &TrackArgs,
    stdin: &mut dyn Read,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), Failure> {
    let custom = check_common(&args.input)?;
    let spec = WindowSpec::new(args.window_len, args.step, args.min_fill)?;
    let period = args
        .period
        .map(|p| PeriodSpec::named(p.into()).expect("named period"))
        .or(custom);

    let mut panel = load_changes(&args.input, stdin, stderr, false)?;
    if let Some(p) = &period {
        panel = panel
            .iter()
            .map(|s| slice(s, p.from, p.to))
            .collect::<Result<_, _>>()?;
    }
    let meta = common_meta("track", &args.input)
        .with(
            "period",
            period.map_or_else(|| "all".to_string(), |p| p.name()),
        )
        .with("window_len", spec.length)
        .with("step", spec.step)
        .with("min_fill", spec.min_fill);
    let report = build_track_report(
        &panel,
        &spec,
        tenor_filter(&args.input),
        args.input.alpha,
        meta,
        Strategy::default(),
    )?;
    let text = emit(&Report::Track(report), args.input.format.into())?;
    write_output(&text, &args.input.out, stdout)
}

fn synth(args: &SynthArgs, stdout: &mut dyn Write) -> Result<(), Failure> {
    let manipulation = match (args.manipulate, args.target_digit) {
        (Some(fraction), Some(target_digit)) => Some(Manipulation {
            fraction,
            target_digit,
        }),
        _ => None,
    };
    if args.entity.contains(',')
        || args.tenor.contains(',')
        || args.entity.is_empty()
        || args.tenor.is_empty()
    {
        return Err(Failure::Usage(
            "entity and tenor must be nonempty and comma-free".into(),
        ));
    }
    let spec = SynthSpec::new(args.kind.into(), args.n, args.seed, manipulation)?;
    let series = spec.spread_series(&args.entity, &args.tenor, args.start)?;
    let mut buf = Vec::new();
    write_panel(std::slice::from_ref(&series), &mut buf).map_err(|e| io_failure("panel", e))?;
    let text = String::from_utf8(buf).expect("panel is UTF-8");
    write_output(&text, &args.out, stdout)
}
