//! `coxdes`: exact distributions, moments, CLT diagnostics and the
//! two-sided complex from the command line.
//!
//! Exit codes: 0 success, 2 bad input, 3 a size cap was hit, 4 an identity
//! that must hold failed (never absorbed).

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use num_bigint::{BigInt, BigUint};
use num_traits::{One, Pow, Signed, Zero};
use serde::Serialize;

use coxdes::cache::CACHE_DIR_ENV;
use coxdes::clt::{
    clt_trend, default_delta, default_eps_grid, geometric_n_list, ks_distance_exact, ks_distance_mc,
    well_behaved_profile, AnalysisReport, KsDistance, NOutcome, ProfileRow, DEFAULT_N_LIST,
};
use coxdes::complex::{complex_report, ComplexChecks, DEFAULT_ORDER_CAP, DEFAULT_RANK_CAP};
use coxdes::joint::JointCountJson;
use coxdes::moments::{
    closed_form, pmf_value, recursive_value, threshold, variance_t, MomentRow, MomentSource, MOMENT_CSV_HEADER,
};
use coxdes::pmf::PmfJson;
use coxdes::sample::{DEFAULT_CHUNK_SIZE, DEFAULT_SEED};
use coxdes::scalar::{fmt_rational, parse_rational};
use coxdes::sequence::parse_sequence_spec;
use coxdes::{
    parse_group_spec, Config, DistCache, Error, Family, JointCountMatrix, MomentKey, ProductGroup, Rational,
};

#[derive(Parser)]
#[command(name = "coxdes", version, about = "Two-sided descents on finite Coxeter groups")]
struct Cli {
    /// Directory for cached joint distributions (default: $COXDES_CACHE_DIR).
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    /// Largest group order enumerated element by element.
    #[arg(long, global = true)]
    enumeration_cap: Option<u64>,
    /// Largest rank of an exact type A/B distribution.
    #[arg(long, global = true)]
    exact_rank_limit: Option<u32>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Table,
}

#[derive(Subcommand)]
enum Cmd {
    /// Joint (des, ides) counts and the distribution of t.
    Dist {
        #[arg(long)]
        group: String,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Moments from the closed forms, the recursion and the exact pmf.
    Moments {
        /// A or B; use with --n.
        #[arg(long, conflicts_with = "group")]
        family: Option<String>,
        /// Rank or inclusive range `lo..hi`.
        #[arg(long, requires = "family")]
        n: Option<String>,
        /// A product group; only moments of T apply.
        #[arg(long)]
        group: Option<String>,
        /// Moment keys, comma separated (default: the whole table).
        #[arg(long, value_delimiter = ',')]
        key: Vec<String>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// CLT diagnostics along a sequence of groups.
    Sequence {
        /// JSON sequence specification.
        #[arg(long)]
        spec: PathBuf,
        /// List `a,b,c` or range `lo..hi` (all integers, or --points on a
        /// geometric grid).
        #[arg(long)]
        n: Option<String>,
        #[arg(long)]
        points: Option<usize>,
        /// Rational in (0, 1), e.g. `1/3`.
        #[arg(long)]
        delta: Option<String>,
        /// Lindeberg thresholds, comma separated.
        #[arg(long, value_delimiter = ',')]
        eps: Vec<String>,
        /// Also report the well-behavedness profile for these k.
        #[arg(long, value_delimiter = ',')]
        profile: Vec<usize>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Monte Carlo KS distance of standardized T.
    Simulate {
        #[arg(long)]
        group: String,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_CHUNK_SIZE)]
        chunk_size: u64,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Faces, f- and h-vectors and gallery checks of the two-sided complex.
    Complex {
        #[arg(long)]
        group: String,
        /// `all` or a comma-separated list of check names.
        #[arg(long, default_value = "all")]
        check: String,
        #[arg(long, default_value_t = DEFAULT_ORDER_CAP)]
        order_cap: u64,
        #[arg(long, default_value_t = DEFAULT_RANK_CAP)]
        rank_cap: u64,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
}

/// Command failure with its exit code.
struct Failure {
    code: u8,
    msg: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::CapExceeded { .. } => 3,
            Error::Consistency(_) => 4,
            _ => 2,
        };
        Failure { code, msg: e.to_string() }
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure { code: 2, msg: msg.into() }
}

type CmdResult = Result<String, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut cfg = Config::default();
    if let Some(c) = cli.enumeration_cap {
        cfg.enumeration_cap = c;
    }
    if let Some(r) = cli.exact_rank_limit {
        cfg.exact_rank_limit = r;
    }
    let mut cache = DistCache::new(cfg);
    if let Some(dir) = cli.cache_dir.or_else(|| std::env::var_os(CACHE_DIR_ENV).map(PathBuf::from)) {
        cache = cache.with_disk_cache(dir);
    }
    let result = match cli.cmd {
        Cmd::Dist { group, format } => cmd_dist(&group, format, &cache),
        Cmd::Moments { family, n, group, key, format } => match (family, group) {
            (Some(f), None) => cmd_moments_family(&f, n.as_deref(), &key, format),
            (None, Some(g)) => cmd_moments_group(&g, &key, format, &cache),
            _ => Err(usage("give either --family with --n, or --group")),
        },
        Cmd::Sequence { spec, n, points, delta, eps, profile, format } => {
            cmd_sequence(&spec, n.as_deref(), points, delta.as_deref(), &eps, &profile, format, &cache)
        }
        Cmd::Simulate { group, samples, seed, chunk_size, format } => {
            cmd_simulate(&group, samples, seed, chunk_size, format, &cache)
        }
        Cmd::Complex { group, check, order_cap, rank_cap, format } => {
            cmd_complex(&group, &check, order_cap, rank_cap, format)
        }
    };
    match result {
        Ok(out) => {
            emit(&out);
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}

/// Writes to stdout, tolerating a closed pipe.
fn emit(out: &str) {
    use std::io::Write;
    let _ = std::io::stdout().lock().write_all(out.as_bytes());
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report types serialize");
    s.push('\n');
    s
}

fn group_arg(text: &str) -> Result<ProductGroup, Failure> {
    let g = parse_group_spec(text)?;
    if g.is_empty() {
        return Err(usage("empty group"));
    }
    Ok(g)
}

/// `p/q`, an integer, or a finite decimal.
fn rational_arg(text: &str) -> Result<Rational, Failure> {
    if let Some(r) = parse_rational(text) {
        return Ok(r);
    }
    let bad = || usage(format!("not a rational number: `{text}`"));
    let (int, frac) = text.trim().split_once('.').ok_or_else(bad)?;
    if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }
    let negative = int.starts_with('-');
    let int: BigInt = if int.is_empty() || int == "-" { BigInt::zero() } else { int.parse().map_err(|_| bad())? };
    let scale: BigInt = BigInt::from(10).pow(frac.len());
    let frac: BigInt = frac.parse().map_err(|_| bad())?;
    let magnitude = Rational::new(int.abs() * &scale + frac, scale);
    Ok(if negative { -magnitude } else { magnitude })
}

fn range_arg(text: &str) -> Result<(u64, u64), Failure> {
    let bad = || usage(format!("expected `lo..hi`, got `{text}`"));
    let (lo, hi) = text.split_once("..").ok_or_else(bad)?;
    let lo: u64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: u64 = hi.trim().parse().map_err(|_| bad())?;
    if lo > hi {
        return Err(usage(format!("empty range `{text}`")));
    }
    Ok((lo, hi))
}

fn n_list_arg(text: &str, points: Option<usize>) -> Result<Vec<u64>, Failure> {
    if text.contains("..") {
        let (lo, hi) = range_arg(text)?;
        if lo == 0 {
            return Err(usage("n must be at least 1"));
        }
        return Ok(match points {
            Some(k) => geometric_n_list(lo, hi, k),
            None => (lo..=hi).collect(),
        });
    }
    text.split(',')
        .map(|s| s.trim().parse::<u64>().map_err(|_| usage(format!("bad n value `{s}`"))))
        .collect()
}

// ---------------------------------------------------------------- dist

#[derive(Serialize)]
struct FactorInfo {
    group: String,
    source: coxdes::JointSource,
    exact: bool,
}

#[derive(Serialize)]
struct DistOutput {
    group: String,
    rank: u64,
    order: String,
    exact: bool,
    factors: Vec<FactorInfo>,
    joint: JointCountJson,
    t_pmf: PmfJson,
}

fn cmd_dist(text: &str, format: Format, cache: &DistCache) -> CmdResult {
    let g = group_arg(text)?;
    let mut joint = JointCountMatrix::zeros(0);
    joint.counts[0][0] = BigUint::one();
    let mut factors = Vec::new();
    let mut exact = true;
    for f in &g.factors {
        let d = cache.joint(f)?;
        exact &= d.exact;
        joint = joint.convolve(&d.counts);
        factors.push(FactorInfo { group: f.to_string(), source: d.source, exact: d.exact });
    }
    let order = joint.total();
    if exact && order != g.order() {
        return Err(Error::Consistency(format!("joint counts of {g} sum to {order}, not |W| = {}", g.order())).into());
    }
    Ok(match format {
        Format::Json => {
            let t_pmf = PmfJson {
                offset: 0,
                denominator: order.to_string(),
                counts: joint.t_counts().iter().map(|c| c.to_string()).collect(),
            };
            to_json(&DistOutput {
                group: g.to_string(),
                rank: g.rank(),
                order: order.to_string(),
                exact,
                factors,
                joint: joint.to_json(),
                t_pmf,
            })
        }
        Format::Csv => {
            let mut out = String::from("des,ides,count,exact\n");
            for (i, row) in joint.counts.iter().enumerate() {
                for (j, c) in row.iter().enumerate() {
                    if !c.is_zero() {
                        writeln!(out, "{i},{j},{c},{exact}").unwrap();
                    }
                }
            }
            out
        }
        Format::Table => {
            let mut out = format!("{g}  order {order}  {}\n", if exact { "exact" } else { "APPROXIMATE" });
            out.push_str("des\\ides");
            for j in 0..joint.counts.len() {
                write!(out, "\t{j}").unwrap();
            }
            out.push('\n');
            for (i, row) in joint.counts.iter().enumerate() {
                write!(out, "{i}").unwrap();
                for c in row {
                    write!(out, "\t{c}").unwrap();
                }
                out.push('\n');
            }
            out.push_str("\nt\tcount\n");
            for (t, c) in joint.t_counts().iter().enumerate() {
                writeln!(out, "{t}\t{c}").unwrap();
            }
            out
        }
    })
}

// ------------------------------------------------------------- moments

#[derive(Serialize)]
struct MomentLine {
    family: String,
    n: u32,
    key: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    closed_form: Option<String>,
    recursion: String,
    pmf: String,
    equal: bool,
}

fn moment_keys(keys: &[String]) -> Result<Vec<MomentKey>, Failure> {
    if keys.is_empty() {
        return Ok(MomentKey::table());
    }
    keys.iter().map(|k| k.trim().parse::<MomentKey>().map_err(Failure::from)).collect()
}

fn cmd_moments_family(family: &str, n: Option<&str>, keys: &[String], format: Format) -> CmdResult {
    let family: Family = family.parse()?;
    if !matches!(family, Family::A | Family::B) {
        return Err(usage("moment tables exist for families A and B only"));
    }
    let n = n.ok_or_else(|| usage("--n is required with --family"))?;
    let (lo, hi) = if n.contains("..") {
        range_arg(n)?
    } else {
        let v: u64 = n.trim().parse().map_err(|_| usage(format!("bad rank `{n}`")))?;
        (v, v)
    };
    if lo == 0 || hi > u32::MAX as u64 {
        return Err(usage("rank out of range"));
    }
    let keys = moment_keys(keys)?;
    let start = threshold(family)?;
    let mut lines = Vec::new();
    let mut rows = Vec::new();
    for n in lo as u32..=hi as u32 {
        let pmf = coxdes::joint::kernel_pmf::<Rational>(family, n)?;
        for &key in &keys {
            let cf = if n >= start { Some(closed_form::<Rational>(key, family, n)?) } else { None };
            let rec = recursive_value::<Rational>(key, family, n)?;
            let pv = pmf_value(key, &pmf);
            let equal = rec == pv && cf.as_ref().is_none_or(|c| *c == pv);
            if let Some(c) = &cf {
                rows.push(MomentRow::new(family, n, key, c, MomentSource::ClosedForm));
            }
            rows.push(MomentRow::new(family, n, key, &rec, MomentSource::Recursion));
            rows.push(MomentRow::new(family, n, key, &pv, MomentSource::Pmf));
            lines.push(MomentLine {
                family: family.to_string(),
                n,
                key: key.to_string(),
                closed_form: cf.as_ref().map(fmt_rational),
                recursion: fmt_rational(&rec),
                pmf: fmt_rational(&pv),
                equal,
            });
        }
    }
    let out = render_moments(&lines, &rows, format);
    if let Some(bad) = lines.iter().find(|l| !l.equal) {
        emit(&out);
        return Err(Error::Consistency(format!("moment {} of {}({}) disagrees across routes", bad.key, bad.family, bad.n))
            .into());
    }
    Ok(out)
}

fn render_moments(lines: &[MomentLine], rows: &[MomentRow], format: Format) -> String {
    match format {
        Format::Json => to_json(&lines),
        Format::Csv => {
            let mut out = format!("{MOMENT_CSV_HEADER}\n");
            for r in rows {
                writeln!(out, "{}", r.to_csv()).unwrap();
            }
            out
        }
        Format::Table => {
            let mut out = String::from("family\tn\tkey\tclosed_form\trecursion\tpmf\tequal\n");
            for l in lines {
                writeln!(
                    out,
                    "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                    l.family,
                    l.n,
                    l.key,
                    l.closed_form.as_deref().unwrap_or("-"),
                    l.recursion,
                    l.pmf,
                    l.equal
                )
                .unwrap();
            }
            out
        }
    }
}

#[derive(Serialize)]
struct GroupMomentLine {
    group: String,
    key: String,
    /// `rank` for the mean, the sum of per-factor variances for varT.
    #[serde(skip_serializing_if = "Option::is_none")]
    additive: Option<String>,
    pmf: String,
    exact: bool,
    equal: bool,
}

fn cmd_moments_group(text: &str, keys: &[String], format: Format, cache: &DistCache) -> CmdResult {
    let g = group_arg(text)?;
    let keys = if keys.is_empty() { vec!["meanT".to_string(), "varT".to_string()] } else { keys.to_vec() };
    let keys = moment_keys(&keys)?;
    let t = cache.t_pmf(&g)?;
    let mut lines = Vec::new();
    for key in keys {
        let pmf = match key {
            MomentKey::TCentral(d) => t.pmf.central_moment(d),
            MomentKey::TRaw(d) => t.pmf.raw_moment(d),
            _ => return Err(usage(format!("key {key} needs --family; only moments of T apply to a group"))),
        };
        let additive = match key {
            MomentKey::TRaw(1) => Some(Rational::from_integer(BigInt::from(g.rank()))),
            MomentKey::TCentral(2) => {
                let v = variance_t(&g, cache)?;
                v.exact.then_some(v.value)
            }
            _ => None,
        };
        let equal = additive.as_ref().is_none_or(|a| !t.exact || *a == pmf);
        lines.push(GroupMomentLine {
            group: g.to_string(),
            key: key.to_string(),
            additive: additive.as_ref().map(fmt_rational),
            pmf: fmt_rational(&pmf),
            exact: t.exact,
            equal,
        });
    }
    let out = match format {
        Format::Json => to_json(&lines),
        Format::Csv | Format::Table => {
            let sep = if format == Format::Csv { "," } else { "\t" };
            let mut out = ["group", "key", "additive", "pmf", "exact", "equal"].join(sep) + "\n";
            for l in &lines {
                let group = if format == Format::Csv { format!("\"{}\"", l.group) } else { l.group.clone() };
                let cells = [group, l.key.clone(), l.additive.clone().unwrap_or_default(), l.pmf.clone(), l.exact.to_string(), l.equal.to_string()];
                out.push_str(&cells.join(sep));
                out.push('\n');
            }
            out
        }
    };
    if lines.iter().any(|l| !l.equal) {
        emit(&out);
        return Err(Error::Consistency(format!("additive and pmf moments of {g} disagree")).into());
    }
    Ok(out)
}

// ------------------------------------------------------------ sequence

#[derive(Serialize)]
struct SequenceOutput {
    #[serde(flatten)]
    report: AnalysisReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    profile: Option<Vec<ProfileRow>>,
}

#[allow(clippy::too_many_arguments)]
fn cmd_sequence(
    path: &PathBuf,
    n: Option<&str>,
    points: Option<usize>,
    delta: Option<&str>,
    eps: &[String],
    profile: &[usize],
    format: Format,
    cache: &DistCache,
) -> CmdResult {
    let doc = std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    let spec = parse_sequence_spec(&doc)?;
    let n_list = match n {
        Some(t) => n_list_arg(t, points)?,
        None => DEFAULT_N_LIST.to_vec(),
    };
    let delta = match delta {
        Some(d) => rational_arg(d)?,
        None => default_delta(),
    };
    let eps_grid = if eps.is_empty() {
        default_eps_grid()
    } else {
        eps.iter().map(|e| rational_arg(e)).collect::<Result<Vec<_>, _>>()?
    };
    if eps_grid.iter().any(|e| *e <= Rational::zero()) {
        return Err(usage("eps values must be positive"));
    }
    let report = clt_trend(&spec, &n_list, &delta, &eps_grid, cache)?;
    let profile = if profile.is_empty() {
        None
    } else {
        Some(well_behaved_profile(&spec, &delta, &n_list, profile, cache)?)
    };
    Ok(match format {
        Format::Json => to_json(&SequenceOutput { report, profile }),
        Format::Csv => report.to_csv(),
        Format::Table => {
            let mut out = format!("{}\ndelta {}\n", report.sequence, report.delta);
            out.push_str("n\trank\tk_n\tm_n\tcriterion\tvariance\tmax_ratio\tks_corrected\n");
            for r in &report.records {
                match r {
                    NOutcome::Ok(r) => writeln!(
                        out,
                        "{}\t{}\t{}\t{}\t{:.6}\t{}\t{:.6}\t{:.6}",
                        r.n, r.rank, r.k_n, r.m_n, r.criterion_value, r.variance, r.max_ratio, r.ks_corrected
                    )
                    .unwrap(),
                    NOutcome::Failed { n, error } => writeln!(out, "{n}\tfailed: {error}").unwrap(),
                }
            }
            if let Some(p) = &profile {
                out.push_str("\nk\tsup\targmax_n\n");
                for row in p {
                    writeln!(out, "{}\t{}\t{}", row.k, row.sup_exact, row.argmax_n).unwrap();
                }
            }
            writeln!(out, "\n{}", report.verdict).unwrap();
            out
        }
    })
}

// ------------------------------------------------------------ simulate

#[derive(Serialize)]
struct SimulateOutput {
    group: String,
    samples: u64,
    seed: u64,
    chunk_size: u64,
    variance: String,
    variance_exact: bool,
    ks_mc: KsDistance,
    /// From the exact distribution when it is available.
    #[serde(skip_serializing_if = "Option::is_none")]
    ks_exact: Option<KsDistance>,
}

fn cmd_simulate(text: &str, samples: u64, seed: u64, chunk_size: u64, format: Format, cache: &DistCache) -> CmdResult {
    let g = group_arg(text)?;
    if chunk_size == 0 {
        return Err(usage("chunk size must be positive"));
    }
    let var = variance_t(&g, cache)?;
    let ks_mc = ks_distance_mc(&g, samples, seed, chunk_size, cache)?;
    let ks_exact = match cache.t_pmf_float(&g) {
        Ok(t) if t.exact => Some(ks_distance_exact(&t.pmf)?),
        _ => None,
    };
    let out = SimulateOutput {
        group: g.to_string(),
        samples,
        seed,
        chunk_size,
        variance: fmt_rational(&var.value),
        variance_exact: var.exact,
        ks_mc,
        ks_exact,
    };
    Ok(match format {
        Format::Json => to_json(&out),
        Format::Csv => {
            let (ep, ec) = out.ks_exact.map_or((String::new(), String::new()), |k| (k.plain.to_string(), k.corrected.to_string()));
            format!(
                "group,samples,seed,chunk_size,variance,variance_exact,ks_mc_plain,ks_mc_corrected,ks_exact_plain,ks_exact_corrected\n\"{}\",{},{},{},{},{},{},{},{},{}\n",
                out.group, samples, seed, chunk_size, out.variance, out.variance_exact, out.ks_mc.plain, out.ks_mc.corrected, ep, ec
            )
        }
        Format::Table => {
            let mut s = format!("{}  samples {samples}  seed {seed}\nvariance {}\n", out.group, out.variance);
            writeln!(s, "KS (sampled)  plain {:.6}  corrected {:.6}", out.ks_mc.plain, out.ks_mc.corrected).unwrap();
            if let Some(k) = out.ks_exact {
                writeln!(s, "KS (exact)    plain {:.6}  corrected {:.6}", k.plain, k.corrected).unwrap();
            }
            s
        }
    })
}

// ------------------------------------------------------------- complex

fn cmd_complex(text: &str, check: &str, order_cap: u64, rank_cap: u64, format: Format) -> CmdResult {
    let g = group_arg(text)?;
    let names: Vec<&str> = if check.trim() == "all" {
        ComplexChecks::NAMES.to_vec()
    } else {
        check.split(',').map(str::trim).collect()
    };
    if let Some(bad) = names.iter().find(|n| !ComplexChecks::NAMES.contains(n)) {
        return Err(usage(format!("unknown check `{bad}`; known: {}", ComplexChecks::NAMES.join(", "))));
    }
    let report = complex_report(&g, order_cap, rank_cap)?;
    let failed: Vec<&str> = names.iter().copied().filter(|n| report.checks.get(n) == Some(false)).collect();
    let out = match format {
        Format::Json => to_json(&report),
        Format::Csv | Format::Table => {
            let sep = if format == Format::Csv { "," } else { "\t" };
            let mut s = format!("check{sep}pass\n");
            for n in &names {
                writeln!(s, "{n}{sep}{}", report.checks.get(n).unwrap_or(false)).unwrap();
            }
            s
        }
    };
    if !failed.is_empty() {
        emit(&out);
        let detail = report.counterexample.clone().unwrap_or_default();
        return Err(Error::Consistency(format!("checks failed on {g}: {} {detail}", failed.join(", "))).into());
    }
    Ok(out)
}
