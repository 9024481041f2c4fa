use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use kperiods::corpus;
use kperiods::oracle::{naive_kmismatch_periods, naive_occurrences, naive_wildcard_periods, ORACLE_MAX};
use kperiods::periods::{
    detect_kmismatch_periods, CharSource, PeriodError, PeriodReport, RunStats, SeekSource, StreamConfig, StreamSource,
    WeightKind,
};
use kperiods::sketch::{Epoch, MismatchInfo, SketchBuilder, N_MAX};
use kperiods::wildcards::{detect_wildcard_periods, WildcardConfig, WildcardError, SENTINEL};

#[derive(Parser)]
#[command(name = "kperiods", version, about = "Streaming k-mismatch period detection")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Stream a text and report its k-mismatch periods.
    Detect(DetectArgs),
    /// Write a generated fixture.
    Gen(GenArgs),
    /// Brute-force answers for small inputs.
    Oracle(OracleArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Hamming,
    Wildcard,
}

#[derive(Clone, Copy, ValueEnum)]
enum Weight {
    Zero,
    Charsum,
}

impl From<Weight> for WeightKind {
    fn from(w: Weight) -> WeightKind {
        match w {
            Weight::Zero => WeightKind::Zero,
            Weight::Charsum => WeightKind::CharSum,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Emit {
    Jsonl,
    Tsv,
}

#[derive(Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Args)]
struct DetectArgs {
    #[arg(long, conflicts_with = "stdin", required_unless_present = "stdin")]
    input: Option<PathBuf>,
    /// Read standard input; requires --length.
    #[arg(long, requires = "length")]
    stdin: bool,
    #[arg(long)]
    length: Option<u64>,
    /// Mismatch budget; the wildcard limit in wildcard mode.
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    delta: u64,
    #[arg(long, value_enum, default_value = "hamming")]
    mode: Mode,
    #[arg(long, default_value = "0x3F", value_parser = parse_byte)]
    wildcard_byte: u8,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "zero")]
    weight: Weight,
    #[arg(long, value_enum, default_value = "jsonl")]
    emit: Emit,
    /// Print run statistics to standard error.
    #[arg(long)]
    stats: bool,
    #[arg(long, default_value_t = 3)]
    retries: u32,
    #[arg(long, value_enum, default_value = "off")]
    matcher_compression: Switch,
    /// Write the sketch of the whole text to this file.
    #[arg(long)]
    dump_sketch: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    #[value(name = "appendixC")]
    AppendixC,
    Random,
    PeriodicNoise,
    PlantedPeriod,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    #[arg(long, default_value_t = 1024)]
    n: u64,
    #[arg(long, default_value_t = 4)]
    sigma: u8,
    /// Substitutions applied after planting.
    #[arg(long, default_value_t = 0)]
    k: usize,
    /// Block length for periodic-noise, planted period for planted-period (0 = random).
    #[arg(long, default_value_t = 0)]
    period: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; standard output when absent.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleKind {
    Periods,
    Occurrences,
    Wildcard,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(value_enum)]
    kind: OracleKind,
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 0)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    delta: u64,
    #[arg(long, required_if_eq("kind", "occurrences"))]
    pattern: Option<String>,
    #[arg(long, default_value = "0x3F", value_parser = parse_byte)]
    wildcard_byte: u8,
    #[arg(long, value_enum, default_value = "zero")]
    weight: Weight,
    #[arg(long, value_enum, default_value = "jsonl")]
    emit: Emit,
}

fn parse_byte(s: &str) -> Result<u8, String> {
    if let Some(h) = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        return u8::from_str_radix(h, 16).map_err(|e| e.to_string());
    }
    match s.as_bytes() {
        [b] => Ok(*b),
        _ => s.parse().map_err(|_| format!("not a byte: {s}")),
    }
}

enum Failure {
    Usage(String),
    Exhausted(String),
    Io(io::Error),
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Failure {
        Failure::Io(e)
    }
}

impl From<PeriodError> for Failure {
    fn from(e: PeriodError) -> Failure {
        match e {
            PeriodError::InvalidConfig(_) | PeriodError::LengthMismatch { .. } => Failure::Usage(e.to_string()),
            PeriodError::RetryExhausted { .. } => Failure::Exhausted(e.to_string()),
            PeriodError::Io(e) => Failure::Io(e),
            PeriodError::Sketch(e) => Failure::Usage(e.to_string()),
        }
    }
}

impl From<WildcardError> for Failure {
    fn from(e: WildcardError) -> Failure {
        match e {
            WildcardError::Period(p) => p.into(),
            other => Failure::Usage(other.to_string()),
        }
    }
}

fn mismatches_json(mi: &MismatchInfo) -> serde_json::Value {
    mi.iter().map(|m| json!([m.pos, char::from(m.left).to_string(), char::from(m.right).to_string()])).collect()
}

fn write_records(out: &mut impl Write, emit: Emit, recs: &[PeriodReport], with_weight: bool) -> io::Result<()> {
    for r in recs {
        let w = if with_weight { r.weight } else { None };
        match emit {
            Emit::Jsonl => {
                writeln!(out, "{}", json!({"period": r.period, "weight": w, "mismatches": mismatches_json(&r.mi)}))?
            }
            Emit::Tsv => {
                let mi: Vec<String> =
                    r.mi.iter().map(|m| format!("{}:{}:{}", m.pos, char::from(m.left), char::from(m.right))).collect();
                let w = w.map_or("null".to_string(), |v| v.to_string());
                writeln!(out, "{}\t{}\t{}", r.period, w, mi.join(";"))?
            }
        }
    }
    Ok(())
}

/// Feeds every byte it passes on into a sketch of the whole text.
struct Tee<'a> {
    inner: &'a mut dyn CharSource,
    builder: Option<SketchBuilder>,
    k: usize,
    epoch: Epoch,
}

impl CharSource for Tee<'_> {
    fn next_byte(&mut self) -> io::Result<Option<u8>> {
        let b = self.inner.next_byte()?;
        if let (Some(c), Some(sb)) = (b, self.builder.as_mut()) {
            sb.append(c).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?;
        }
        Ok(b)
    }

    fn rewind(&mut self) -> io::Result<bool> {
        if self.builder.is_some() {
            self.builder = SketchBuilder::new(self.k, self.epoch).ok();
        }
        self.inner.rewind()
    }
}

fn detect(a: DetectArgs) -> Result<(), Failure> {
    let (mut src, n): (Box<dyn CharSource>, u64) = match (&a.input, a.length) {
        (Some(path), len) => {
            let f = File::open(path)?;
            let size = f.metadata()?.len();
            if let Some(l) = len.filter(|&l| l != size) {
                return Err(Failure::Usage(format!("--length {l} differs from file size {size}")));
            }
            (Box::new(SeekSource::new(f)), size)
        }
        (None, Some(len)) => (Box::new(StreamSource::new(io::stdin().lock())), len),
        (None, None) => return Err(Failure::Usage("--stdin requires --length".into())),
    };
    if n == 0 || n > N_MAX {
        return Err(Failure::Usage(format!("length must lie in [1..{N_MAX}]")));
    }
    let mut tee = Tee {
        inner: src.as_mut(),
        builder: None,
        k: a.k,
        epoch: Epoch::from_seed(a.seed),
    };
    if a.dump_sketch.is_some() {
        tee.builder = Some(SketchBuilder::new(a.k, tee.epoch).map_err(|e| Failure::Usage(e.to_string()))?);
    }
    let compression = matches!(a.matcher_compression, Switch::On);
    let (records, stats, warning, with_weight) = match a.mode {
        Mode::Hamming => {
            let mut cfg = StreamConfig::new(n, a.k).with_delta(a.delta).with_seed(a.seed).with_weight(a.weight.into());
            cfg.retry_limit = a.retries;
            cfg.compression = compression;
            cfg.instrument = a.stats;
            let d = detect_kmismatch_periods(&mut tee, &cfg)?;
            (d.periods, d.stats, d.warning, true)
        }
        Mode::Wildcard => {
            if a.delta != 0 {
                return Err(Failure::Usage("--delta is not supported in wildcard mode".into()));
            }
            let mut cfg = WildcardConfig::new(n, a.k).with_wildcard(a.wildcard_byte).with_seed(a.seed);
            cfg.retry_limit = a.retries;
            cfg.compression = compression;
            let d = detect_wildcard_periods(&mut tee, &cfg)?;
            (d.periods, d.stats, d.warning, false)
        }
    };
    if let (Some(path), Some(sb)) = (&a.dump_sketch, &tee.builder) {
        std::fs::write(path, sb.snapshot().to_bytes())?;
    }
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    write_records(&mut out, a.emit, &records, with_weight)?;
    out.flush()?;
    if a.stats {
        emit_stats(&stats, warning)?;
    }
    if warning {
        return Err(Failure::Exhausted("a single-shot stream failed internally; the report may be incomplete".into()));
    }
    Ok(())
}

fn emit_stats(stats: &RunStats, warning: bool) -> io::Result<()> {
    let mut v = serde_json::to_value(stats).map_err(io::Error::other)?;
    v["warning"] = json!(warning);
    v["char_time_p50_ns"] = json!(stats.char_time.percentile(0.5));
    v["char_time_p99_ns"] = json!(stats.char_time.percentile(0.99));
    writeln!(io::stderr(), "{v}")
}

fn gen(a: GenArgs) -> Result<(), Failure> {
    let n = a.n as usize;
    if !matches!(a.kind, Kind::AppendixC) && (a.n == 0 || a.n > N_MAX) {
        return Err(Failure::Usage(format!("--n must lie in [1..{N_MAX}]")));
    }
    if !(1..=26).contains(&a.sigma) {
        return Err(Failure::Usage("--sigma must lie in [1..26]".into()));
    }
    let t = match a.kind {
        Kind::AppendixC => corpus::appendix_c(),
        Kind::Random => corpus::uniform(n, a.sigma, a.seed),
        Kind::PeriodicNoise => corpus::periodic_noise(n, if a.period == 0 { 3 } else { a.period }, a.sigma, a.k, a.seed),
        Kind::PlantedPeriod => {
            if n < 4 || a.period > n / 2 || a.period == 1 {
                return Err(Failure::Usage("planted period needs n >= 4 and a period in [2..n/2]".into()));
            }
            corpus::planted_period(n, a.period, a.sigma, a.k, a.seed).0
        }
    };
    match a.output {
        Some(p) => std::fs::write(p, &t)?,
        None => io::stdout().lock().write_all(&t)?,
    }
    Ok(())
}

fn oracle(a: OracleArgs) -> Result<(), Failure> {
    let mut t = Vec::new();
    File::open(&a.input)?.read_to_end(&mut t)?;
    if t.len() > ORACLE_MAX {
        return Err(Failure::Usage(format!("oracle input exceeds {ORACLE_MAX} bytes")));
    }
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    let plugin = WeightKind::from(a.weight).plugin();
    match a.kind {
        OracleKind::Periods => {
            let last = t.len() as u64 / 2 + a.delta;
            let recs: Vec<PeriodReport> = naive_kmismatch_periods(&t, a.k)
                .into_iter()
                .filter(|(p, _)| *p <= last)
                .map(|(p, mi)| PeriodReport { period: p, weight: plugin.of_str(&t[p as usize - 1..]), mi })
                .collect();
            write_records(&mut out, a.emit, &recs, true)?;
        }
        OracleKind::Occurrences => {
            let pat = a.pattern.unwrap_or_default();
            for (end, mi) in naive_occurrences(pat.as_bytes(), &t, a.k) {
                match a.emit {
                    Emit::Jsonl => writeln!(out, "{}", json!({"endpoint": end, "mismatches": mismatches_json(&mi)}))?,
                    Emit::Tsv => {
                        let mi: Vec<String> =
                            mi.iter().map(|m| format!("{}:{}:{}", m.pos, char::from(m.left), char::from(m.right))).collect();
                        writeln!(out, "{end}\t{}", mi.join(";"))?
                    }
                }
            }
        }
        OracleKind::Wildcard => {
            let n = t.len();
            let sub: Vec<u8> = t.iter().map(|&b| if b == a.wildcard_byte { SENTINEL } else { b }).collect();
            let recs: Vec<PeriodReport> = naive_wildcard_periods(&t, a.wildcard_byte)
                .into_iter()
                .filter(|&p| p <= n as u64 / 2)
                .map(|p| {
                    let p0 = p as usize - 1;
                    PeriodReport { period: p, weight: None, mi: MismatchInfo::between(&sub[p0..], &sub[..n - p0]) }
                })
                .collect();
            write_records(&mut out, a.emit, &recs, false)?;
        }
    }
    out.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Detect(a) => detect(a),
        Cmd::Gen(a) => gen(a),
        Cmd::Oracle(a) => oracle(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Exhausted(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
