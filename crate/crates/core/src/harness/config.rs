use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use crate::detectors::{OrderingCriterion, EXHAUSTIVE_LIMIT, ML_SEARCH_LIMIT};
use crate::error::{Error, Result};
use crate::idd::IddConfig;
use crate::sysmodel::{Architecture, Range, SystemConfig};

/// Detector selected by the `detector` key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectorChoice {
    Rmf,
    Zf,
    Mmse,
    Sic,
    MbSic,
    DfS,
    DfP,
    Ml,
}

impl DetectorChoice {
    pub const ALL: [DetectorChoice; 8] = [
        DetectorChoice::Rmf,
        DetectorChoice::Zf,
        DetectorChoice::Mmse,
        DetectorChoice::Sic,
        DetectorChoice::MbSic,
        DetectorChoice::DfS,
        DetectorChoice::DfP,
        DetectorChoice::Ml,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DetectorChoice::Rmf => "rmf",
            DetectorChoice::Zf => "zf",
            DetectorChoice::Mmse => "mmse",
            DetectorChoice::Sic => "sic",
            DetectorChoice::MbSic => "mb-sic",
            DetectorChoice::DfS => "df-s",
            DetectorChoice::DfP => "df-p",
            DetectorChoice::Ml => "ml",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|d| d.name() == s)
    }

    /// Detectors with a soft output for coded operation.
    pub fn supports_coding(self) -> bool {
        matches!(self, DetectorChoice::Rmf | DetectorChoice::Zf | DetectorChoice::Mmse)
    }
}

/// Parameter estimator selected by the `estimator` key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorChoice {
    Perfect,
    Ls,
    Rls,
    Lms,
    RrPc,
    RrKrylov,
    RrJio,
}

impl EstimatorChoice {
    pub const ALL: [EstimatorChoice; 7] = [
        EstimatorChoice::Perfect,
        EstimatorChoice::Ls,
        EstimatorChoice::Rls,
        EstimatorChoice::Lms,
        EstimatorChoice::RrPc,
        EstimatorChoice::RrKrylov,
        EstimatorChoice::RrJio,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EstimatorChoice::Perfect => "perfect",
            EstimatorChoice::Ls => "ls",
            EstimatorChoice::Rls => "rls",
            EstimatorChoice::Lms => "lms",
            EstimatorChoice::RrPc => "rr-pc",
            EstimatorChoice::RrKrylov => "rr-krylov",
            EstimatorChoice::RrJio => "rr-jio",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|d| d.name() == s)
    }

    /// Reduced-rank estimators train the receive filters directly instead of the channel.
    pub fn trains_filters(self) -> bool {
        matches!(
            self,
            EstimatorChoice::RrPc | EstimatorChoice::RrKrylov | EstimatorChoice::RrJio
        )
    }
}

fn ordering_from_name(s: &str) -> Option<OrderingCriterion> {
    [
        OrderingCriterion::ColumnNorm,
        OrderingCriterion::Snr,
        OrderingCriterion::Sinr,
        OrderingCriterion::Exhaustive,
    ]
    .into_iter()
    .find(|c| c.name() == s)
}

/// A complete simulation scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub system: SystemConfig,
    pub detector: DetectorChoice,
    /// Branch count `S` of MB-SIC.
    pub branches: usize,
    pub ordering: OrderingCriterion,
    pub coding: bool,
    pub idd: IddConfig,
    pub estimator: EstimatorChoice,
    pub lambda: f64,
    pub mu: f64,
    /// Rank `D` of the reduced-rank estimators.
    pub rank: usize,
    pub pilot_len: usize,
    /// Data symbols per packet and stream.
    pub data_len: usize,
    pub snr_db: Vec<f64>,
    pub packets: usize,
    pub seed: u64,
    pub output: Option<PathBuf>,
    /// Stream count used in the SNR definition; defaults to `K N_U`. Setting it to
    /// the multiuser value for a single-user run keeps the noise level matched.
    pub snr_streams: Option<usize>,
}

impl ScenarioSpec {
    /// MMSE detection with perfect CSI, uncoded, 1500-symbol packets.
    pub fn new(system: SystemConfig, snr_db: Vec<f64>) -> Self {
        Self {
            system,
            detector: DetectorChoice::Mmse,
            branches: 4,
            ordering: OrderingCriterion::Sinr,
            coding: false,
            idd: IddConfig::default(),
            estimator: EstimatorChoice::Perfect,
            lambda: 0.999,
            mu: 0.05,
            rank: 5,
            pilot_len: 0,
            data_len: 1500,
            snr_db,
            packets: 1000,
            seed: 1,
            output: None,
            snr_streams: None,
        }
    }

    /// Information bits per stream and packet.
    pub fn info_bits_per_stream(&self) -> usize {
        if self.coding {
            self.data_len - self.idd.trellis.memory()
        } else {
            2 * self.data_len
        }
    }

    /// Code rate entering the SNR definition (1 when uncoded).
    pub fn code_rate(&self) -> f64 {
        if self.coding {
            self.idd.trellis.rate()
        } else {
            1.0
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        if self.packets == 0 {
            return Err(Error::domain("packets", "must be at least 1"));
        }
        if self.snr_db.is_empty() || self.snr_db.iter().any(|s| !s.is_finite()) {
            return Err(Error::domain("snr", "need at least one finite SNR value"));
        }
        if self.data_len == 0 {
            return Err(Error::domain("data_len", "must be at least 1"));
        }
        if self.coding && self.data_len <= self.idd.trellis.memory() {
            return Err(Error::domain("data_len", "too short for the code tail"));
        }
        if self.coding && !self.detector.supports_coding() {
            return Err(Error::domain(
                "detector",
                format!(
                    "`{}` has no soft output; coded runs need rmf, zf or mmse",
                    self.detector.name()
                ),
            ));
        }
        if self.coding && self.idd.iterations == 0 {
            return Err(Error::domain("idd.iterations", "must be at least 1"));
        }
        let streams = self.system.n_streams();
        if self.detector == DetectorChoice::MbSic && !(1..=streams).contains(&self.branches) {
            return Err(Error::domain("branches", format!("must be in 1..={streams}")));
        }
        if self.ordering == OrderingCriterion::Exhaustive && self.detector == DetectorChoice::MbSic {
            return Err(Error::domain(
                "ordering",
                "exhaustive ordering is only defined for detector = sic",
            ));
        }
        if self.ordering == OrderingCriterion::Exhaustive
            && self.detector == DetectorChoice::Sic
            && streams > EXHAUSTIVE_LIMIT
        {
            return Err(Error::domain(
                "ordering",
                format!("exhaustive ordering needs at most {EXHAUSTIVE_LIMIT} streams, got {streams}"),
            ));
        }
        if self.detector == DetectorChoice::Ml && 4f64.powi(streams as i32) > ML_SEARCH_LIMIT as f64 {
            return Err(Error::domain(
                "detector",
                format!("ML search over 4^{streams} candidates is too large"),
            ));
        }
        if self.estimator != EstimatorChoice::Perfect && self.pilot_len == 0 {
            return Err(Error::domain("pilot_len", "estimated parameters need pilots"));
        }
        if self.estimator.trains_filters() {
            if self.detector != DetectorChoice::Mmse {
                return Err(Error::domain(
                    "estimator",
                    "reduced-rank estimators train linear MMSE filters; use detector = mmse",
                ));
            }
            if !(1..=self.system.n_rx_total()).contains(&self.rank) {
                return Err(Error::domain(
                    "rank",
                    format!("must be in 1..={}", self.system.n_rx_total()),
                ));
            }
        }
        if !(self.lambda > 0.0 && self.lambda <= 1.0) {
            return Err(Error::domain("lambda", "must lie in (0, 1]"));
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::domain("mu", "must be positive"));
        }
        if self.snr_streams == Some(0) {
            return Err(Error::domain("snr_streams", "must be at least 1"));
        }
        Ok(())
    }
}

const KEYS: &[&str] = &[
    "architecture",
    "n_rx_total",
    "n_bs",
    "n_heads",
    "antennas_per_head",
    "n_users",
    "antennas_per_user",
    "rho",
    "path_loss_exp",
    "shadow_spread_db",
    "path_gain",
    "distance",
    "distance_step",
    "symbol_power",
    "detector",
    "branches",
    "ordering",
    "coding",
    "idd.iterations",
    "idd.maxlog",
    "estimator",
    "lambda",
    "mu",
    "rank",
    "pilot_len",
    "data_len",
    "snr",
    "packets",
    "seed",
    "output",
    "snr_streams",
];

fn cfg_err(line: usize, message: impl Into<String>) -> Error {
    Error::Config {
        line,
        message: message.into(),
    }
}

struct Entries(BTreeMap<&'static str, (usize, String)>);

impl Entries {
    fn take<T>(&mut self, key: &'static str, parse: impl Fn(&str) -> Option<T>, what: &str) -> Result<Option<T>> {
        match self.0.remove(key) {
            None => Ok(None),
            Some((line, v)) => parse(&v)
                .map(Some)
                .ok_or_else(|| cfg_err(line, format!("key `{key}`: expected {what}, got `{v}`"))),
        }
    }

    fn line(&self, key: &str) -> usize {
        self.0.get(key).map_or(0, |e| e.0)
    }
}

fn parse_bool(s: &str) -> Option<bool> {
    match s {
        "true" | "on" | "yes" => Some(true),
        "false" | "off" | "no" => Some(false),
        _ => None,
    }
}

/// `x` or `lo:hi`.
fn parse_range(s: &str) -> Option<Range> {
    match s.split_once(':') {
        Some((a, b)) => Some(Range::new(a.trim().parse().ok()?, b.trim().parse().ok()?)),
        None => s.parse().ok().map(Range::constant),
    }
}

fn format_range(r: Range) -> String {
    if r.is_constant() {
        format!("{}", r.lo)
    } else {
        format!("{}:{}", r.lo, r.hi)
    }
}

/// SNR list: `a:b:step` (inclusive of `b`) or comma separated values.
pub fn parse_snr_list(s: &str) -> Option<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').map(str::trim).collect();
    match parts.as_slice() {
        [a, b, step] => {
            let (a, b, step): (f64, f64, f64) = (a.parse().ok()?, b.parse().ok()?, step.parse().ok()?);
            if !(step > 0.0) || b < a || !a.is_finite() || !b.is_finite() {
                return None;
            }
            let n = ((b - a) / step + 1e-9).floor() as usize;
            // index arithmetic avoids drift from repeated addition
            Some((0..=n).map(|i| a + i as f64 * step).collect())
        }
        [single] => single.split(',').map(|x| x.trim().parse().ok()).collect(),
        _ => None,
    }
}

/// Parses the flat `key = value` scenario format. `#` starts a comment; blank
/// lines are ignored; every key may appear once.
pub fn parse_config(text: &str) -> Result<ScenarioSpec> {
    let mut raw = BTreeMap::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (k, v) = body
            .split_once('=')
            .ok_or_else(|| cfg_err(lineno, format!("expected `key = value`, got `{body}`")))?;
        let (k, v) = (k.trim(), v.trim());
        let key = KEYS
            .iter()
            .find(|&&known| known == k)
            .ok_or_else(|| cfg_err(lineno, format!("unknown key `{k}`")))?;
        if v.is_empty() {
            return Err(cfg_err(lineno, format!("key `{k}` has no value")));
        }
        if raw.insert(*key, (lineno, v.to_string())).is_some() {
            return Err(cfg_err(lineno, format!("duplicate key `{k}`")));
        }
    }
    let mut e = Entries(raw);

    let arch_line = e.line("architecture");
    let arch = e.take(
        "architecture",
        |s| match s {
            "cas" => Some(Architecture::Cas),
            "das" => Some(Architecture::Das),
            _ => None,
        },
        "cas or das",
    )?;
    let mut sys = match arch.unwrap_or(Architecture::Cas) {
        Architecture::Cas => SystemConfig::cas(1, 1, 1),
        Architecture::Das => SystemConfig::das(1, 1, 1, 1, 1),
    };
    let n_rx_line = e.line("n_rx_total");
    let n_rx_total = e.take("n_rx_total", |s| s.parse::<usize>().ok(), "an integer")?;
    if let Some(v) = e.take("n_bs", |s| s.parse().ok(), "an integer")? {
        sys.n_bs = v;
    }
    if let Some(v) = e.take("n_heads", |s| s.parse().ok(), "an integer")? {
        sys.n_heads = v;
    }
    if let Some(v) = e.take("antennas_per_head", |s| s.parse().ok(), "an integer")? {
        sys.antennas_per_head = v;
    }
    if let Some(total) = n_rx_total {
        if sys.n_heads == 0 {
            sys.n_bs = total;
        } else if total != sys.n_rx_total() {
            return Err(cfg_err(
                n_rx_line,
                format!(
                    "n_rx_total = {total} but n_bs + n_heads * antennas_per_head = {}",
                    sys.n_rx_total()
                ),
            ));
        }
    }
    if arch == Some(Architecture::Das) && sys.n_heads == 0 {
        return Err(cfg_err(arch_line, "architecture = das needs n_heads >= 1"));
    }
    if arch == Some(Architecture::Cas) && sys.n_heads > 0 {
        return Err(cfg_err(arch_line, "architecture = cas needs n_heads = 0"));
    }
    if let Some(v) = e.take("n_users", |s| s.parse().ok(), "an integer")? {
        sys.n_users = v;
    }
    if let Some(v) = e.take("antennas_per_user", |s| s.parse().ok(), "an integer")? {
        sys.antennas_per_user = v;
    }
    if let Some(v) = e.take("rho", |s| s.parse().ok(), "a number")? {
        sys.rho = v;
    }
    if let Some(v) = e.take("path_loss_exp", |s| s.parse().ok(), "a number")? {
        sys.path_loss_exp = v;
    }
    if let Some(v) = e.take("shadow_spread_db", |s| s.parse().ok(), "a number")? {
        sys.shadow_spread_db = v;
    }
    if let Some(v) = e.take("path_gain", parse_range, "a number or lo:hi")? {
        sys.path_gain_range = v;
    }
    if let Some(v) = e.take("distance", parse_range, "a number or lo:hi")? {
        sys.distance_range = v;
    }
    if let Some(v) = e.take("distance_step", |s| s.parse().ok(), "a number")? {
        sys.distance_step = v;
    }
    if let Some(v) = e.take("symbol_power", |s| s.parse().ok(), "a number")? {
        sys.symbol_power = v;
    }

    let snr_line = e.line("snr");
    let snr = e
        .take("snr", parse_snr_list, "a:b:step or a comma separated list")?
        .ok_or_else(|| cfg_err(0, "missing required key `snr`"))?;
    let mut spec = ScenarioSpec::new(sys, snr);
    if let Some(v) = e.take(
        "detector",
        DetectorChoice::from_name,
        "rmf|zf|mmse|sic|mb-sic|df-s|df-p|ml",
    )? {
        spec.detector = v;
    }
    if let Some(v) = e.take("branches", |s| s.parse().ok(), "an integer")? {
        spec.branches = v;
    }
    if let Some(v) = e.take("ordering", ordering_from_name, "norm|snr|sinr|exhaustive")? {
        spec.ordering = v;
    }
    if let Some(v) = e.take("coding", parse_bool, "true or false")? {
        spec.coding = v;
    }
    if let Some(v) = e.take("idd.iterations", |s| s.parse().ok(), "an integer")? {
        spec.idd.iterations = v;
    }
    if let Some(v) = e.take("idd.maxlog", parse_bool, "true or false")? {
        spec.idd.maxlog = v;
    }
    if let Some(v) = e.take(
        "estimator",
        EstimatorChoice::from_name,
        "perfect|ls|rls|lms|rr-pc|rr-krylov|rr-jio",
    )? {
        spec.estimator = v;
    }
    if let Some(v) = e.take("lambda", |s| s.parse().ok(), "a number")? {
        spec.lambda = v;
    }
    if let Some(v) = e.take("mu", |s| s.parse().ok(), "a number")? {
        spec.mu = v;
    }
    if let Some(v) = e.take("rank", |s| s.parse().ok(), "an integer")? {
        spec.rank = v;
    }
    if let Some(v) = e.take("pilot_len", |s| s.parse().ok(), "an integer")? {
        spec.pilot_len = v;
    }
    if let Some(v) = e.take("data_len", |s| s.parse().ok(), "an integer")? {
        spec.data_len = v;
    }
    if let Some(v) = e.take("packets", |s| s.parse().ok(), "an integer")? {
        spec.packets = v;
    }
    if let Some(v) = e.take("seed", |s| s.parse().ok(), "an unsigned integer")? {
        spec.seed = v;
    }
    if let Some(v) = e.take("output", |s| Some(PathBuf::from(s)), "a path")? {
        spec.output = Some(v);
    }
    if let Some(v) = e.take("snr_streams", |s| s.parse().ok(), "an integer")? {
        spec.snr_streams = Some(v);
    }
    debug_assert!(e.0.is_empty(), "unhandled keys {:?}", e.0.keys());

    // semantic errors point at the offending line where one exists
    spec.validate().map_err(|err| match err {
        Error::ParameterDomain { name, reason } => {
            let line = match name {
                "snr" => snr_line,
                other => text
                    .lines()
                    .position(|l| l.split('#').next().unwrap_or("").split('=').next().map(str::trim) == Some(other))
                    .map_or(0, |i| i + 1),
            };
            cfg_err(line, format!("key `{name}`: {reason}"))
        }
        other => other,
    })?;
    Ok(spec)
}

pub fn load_config(path: &std::path::Path) -> Result<ScenarioSpec> {
    parse_config(&std::fs::read_to_string(path)?)
}

/// Writes every key explicitly; `parse_config` of the result reproduces `spec`.
pub fn serialize_config(spec: &ScenarioSpec) -> String {
    let s = &spec.system;
    let mut out = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(out, "{k} = {v}");
    };
    kv("architecture", s.architecture().name().to_string());
    kv("n_bs", s.n_bs.to_string());
    kv("n_heads", s.n_heads.to_string());
    kv("antennas_per_head", s.antennas_per_head.to_string());
    kv("n_users", s.n_users.to_string());
    kv("antennas_per_user", s.antennas_per_user.to_string());
    kv("rho", format!("{}", s.rho));
    kv("path_loss_exp", format!("{}", s.path_loss_exp));
    kv("shadow_spread_db", format!("{}", s.shadow_spread_db));
    kv("path_gain", format_range(s.path_gain_range));
    kv("distance", format_range(s.distance_range));
    kv("distance_step", format!("{}", s.distance_step));
    kv("symbol_power", format!("{}", s.symbol_power));
    kv("detector", spec.detector.name().to_string());
    kv("branches", spec.branches.to_string());
    kv("ordering", spec.ordering.name().to_string());
    kv("coding", spec.coding.to_string());
    kv("idd.iterations", spec.idd.iterations.to_string());
    kv("idd.maxlog", spec.idd.maxlog.to_string());
    kv("estimator", spec.estimator.name().to_string());
    kv("lambda", format!("{}", spec.lambda));
    kv("mu", format!("{}", spec.mu));
    kv("rank", spec.rank.to_string());
    kv("pilot_len", spec.pilot_len.to_string());
    kv("data_len", spec.data_len.to_string());
    kv(
        "snr",
        spec.snr_db
            .iter()
            .map(|x| format!("{x}"))
            .collect::<Vec<_>>()
            .join(", "),
    );
    kv("packets", spec.packets.to_string());
    kv("seed", spec.seed.to_string());
    if let Some(p) = &spec.output {
        kv("output", p.display().to_string());
    }
    if let Some(n) = spec.snr_streams {
        kv("snr_streams", n.to_string());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "n_rx_total = 8\nn_users = 4\nsnr = 0:10:5\n";

    #[test]
    fn minimal_defaults() {
        let spec = parse_config(MINIMAL).unwrap();
        assert_eq!(spec.system, SystemConfig::cas(8, 4, 1));
        assert_eq!(spec.snr_db, vec![0.0, 5.0, 10.0]);
        assert_eq!(spec.detector, DetectorChoice::Mmse);
        assert_eq!(spec.data_len, 1500);
    }

    #[test]
    fn round_trip() {
        let spec = parse_config(MINIMAL).unwrap();
        let again = parse_config(&serialize_config(&spec)).unwrap();
        assert_eq!(spec, again);
    }

    #[test]
    fn misspelled_key_is_named() {
        let err = parse_config("n_rx_total = 8\n# comment\ndetctor = zf\nsnr = 1\n").unwrap_err();
        match err {
            Error::Config { line, message } => {
                assert_eq!(line, 3);
                assert!(message.contains("detctor"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn coded_das_scenario() {
        let text = "architecture = das\nn_bs = 32\nn_heads = 32\nantennas_per_head = 1\n\
                    n_users = 32\nantennas_per_user = 2\ncoding = true\nidd.iterations = 4\nsnr = 0, 2.5\n";
        let spec = parse_config(text).unwrap();
        assert_eq!(spec.system, SystemConfig::das(32, 32, 1, 32, 2));
        assert_eq!(spec.system.n_rx_total(), 64);
        assert_eq!(spec.idd.iterations, 4);
        assert_eq!(spec.info_bits_per_stream(), 1498);
        assert_eq!(spec.snr_db, vec![0.0, 2.5]);
    }

    #[test]
    fn bad_values_name_the_key() {
        for (text, key) in [
            ("n_rx_total = 8\nsnr = 1\npackets = 0\n", "packets"),
            ("n_rx_total = 8\nsnr = 1\ndetector = foo\n", "detector"),
            ("n_rx_total = 8\nsnr = 1\ncoding = true\ndetector = sic\n", "detector"),
            ("n_rx_total = 8\nsnr = 1\nestimator = rls\n", "pilot_len"),
            ("n_rx_total = 8\n", "snr"),
            ("n_rx_total = 8\nsnr = 1\nsnr = 2\n", "snr"),
        ] {
            let err = parse_config(text).unwrap_err();
            assert!(err.is_config(), "{err}");
            assert!(err.to_string().contains(key), "{err}");
        }
    }

    #[test]
    fn snr_lists() {
        assert_eq!(parse_snr_list("0:1:0.25").unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(parse_snr_list("3").unwrap(), vec![3.0]);
        assert!(parse_snr_list("0:1:0").is_none());
        assert!(parse_snr_list("1:0:1").is_none());
    }
}
