//! Flat `key = value` experiment configuration.
//!
//! ```text
//! # worst-case campaign at the default cutoff
//! kind = worst-1d
//! trials = 5000
//! omega = 1
//! ratio = 0 1
//! d = 0 3.14159
//! seed = 7
//! ```
//!
//! Ranges are written as two numbers. Unknown keys are errors.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::detect::{DEFAULT_DIRECTIONS, MUSIC_GRID_POINTS};
use crate::error::{Error, Result};
use crate::harness::exec::Execution;
use crate::model::DEFAULT_GRID_POINTS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExperimentKind {
    Random1d,
    Worst1d,
    ImpossibleRegime,
    Random2d,
    MusicCompare,
    AmplitudeScaling,
    LimitSweep,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        Self::Random1d,
        Self::Worst1d,
        Self::ImpossibleRegime,
        Self::Random2d,
        Self::MusicCompare,
        Self::AmplitudeScaling,
        Self::LimitSweep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Random1d => "random-1d",
            Self::Worst1d => "worst-1d",
            Self::ImpossibleRegime => "impossible-regime",
            Self::Random2d => "random-2d",
            Self::MusicCompare => "music-compare",
            Self::AmplitudeScaling => "amplitude-scaling",
            Self::LimitSweep => "limit-sweep",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment kind {s:?}")))
    }
}

/// How the `d` range is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DScale {
    /// Physical separation.
    Absolute,
    /// Multiples of the two-point diffraction limit at the drawn ratio,
    /// capped at `d_max`. Trials whose ratio has no finite limit fall back
    /// to absolute draws in `(0, d_max]`.
    Limit,
}

impl FromStr for DScale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "absolute" => Ok(Self::Absolute),
            "limit" => Ok(Self::Limit),
            _ => Err(Error::Config(format!(
                "d_scale must be absolute or limit, got {s:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub trials: usize,
    pub cutoff: f64,
    /// `(lo, hi)`; draws are uniform on `(lo, hi]`.
    pub d_range: (f64, f64),
    pub d_scale: DScale,
    /// Upper cap on drawn separations; `pi / cutoff` unless set.
    pub d_max: Option<f64>,
    /// Draws of `sigma / m_min`, uniform on `(lo, hi]`.
    pub ratio_range: (f64, f64),
    /// `a1 = a2 = 1` instead of the random amplitude law.
    pub equal_amplitudes: bool,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub grid_points: usize,
    pub directions: usize,
    /// Bisection tolerance (limit sweep), relative to `1/Ω`.
    pub tolerance: f64,
    /// SRF range and point count (amplitude scaling; also the sweep's
    /// ratio count for limit-sweep).
    pub srf_range: (f64, f64),
    pub points: usize,
    /// Spectra written by music-compare.
    pub spectra: usize,
    /// Noise level of the amplitude-scaling experiment.
    pub sigma: f64,
    pub execution: Execution,
}

impl ExperimentConfig {
    /// Defaults for `kind`, sized for desk-scale runs.
    pub fn new(kind: ExperimentKind) -> Self {
        let pi = std::f64::consts::PI;
        let mut c = Self {
            kind,
            trials: 5000,
            cutoff: 1.0,
            d_range: (0.0, pi),
            d_scale: DScale::Absolute,
            d_max: None,
            ratio_range: (0.0, 1.0),
            equal_amplitudes: false,
            seed: 0,
            output: None,
            grid_points: DEFAULT_GRID_POINTS,
            directions: DEFAULT_DIRECTIONS,
            tolerance: 1e-6,
            srf_range: (2.0, 16.0),
            points: 8,
            spectra: 5,
            sigma: 1e-3,
            execution: Execution::default(),
        };
        match kind {
            ExperimentKind::Worst1d => c.equal_amplitudes = true,
            ExperimentKind::ImpossibleRegime => {
                c.equal_amplitudes = true;
                c.ratio_range = (0.5, 1.0);
                c.d_range = (0.0, 2.0 * pi);
                c.d_max = Some(2.0 * pi);
            }
            ExperimentKind::MusicCompare => {
                c.trials = 10_000;
                c.d_scale = DScale::Limit;
                c.d_range = (0.0, 1.0);
                c.ratio_range = (0.0, 0.5);
                c.grid_points = MUSIC_GRID_POINTS;
            }
            ExperimentKind::LimitSweep => {
                c.ratio_range = (0.02, 0.5);
                c.points = 10;
            }
            _ => {}
        }
        c
    }

    /// Effective separation cap.
    pub fn d_cap(&self) -> f64 {
        self.d_max.unwrap_or(std::f64::consts::PI / self.cutoff)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if !(self.cutoff > 0.0 && self.cutoff.is_finite()) {
            return bad(format!("omega must be positive, got {}", self.cutoff));
        }
        for (name, (lo, hi)) in [
            ("d", self.d_range),
            ("ratio", self.ratio_range),
            ("srf", self.srf_range),
        ] {
            if !(lo >= 0.0 && hi > lo && hi.is_finite()) {
                return bad(format!(
                    "{name} range must satisfy 0 <= lo < hi, got {lo} {hi}"
                ));
            }
        }
        if !(self.d_cap() > 0.0) {
            return bad("d_max must be positive".into());
        }
        if self.grid_points < 3 || self.grid_points.is_multiple_of(2) {
            return bad(format!(
                "grid_points must be odd and >= 3, got {}",
                self.grid_points
            ));
        }
        if self.directions == 0 {
            return bad("directions must be at least 1".into());
        }
        if !(self.tolerance > 0.0) {
            return bad("tolerance must be positive".into());
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return bad("sigma must be nonnegative".into());
        }
        if self.points < 2 {
            return bad("points must be at least 2".into());
        }
        if self.kind == ExperimentKind::LimitSweep
            && !(self.ratio_range.0 > 0.0 && self.ratio_range.1 <= 0.5)
        {
            return bad("limit-sweep needs 0 < ratio <= 1/2".into());
        }
        Ok(())
    }

    /// Parse a config file body. `kind` must be present.
    pub fn parse(text: &str) -> Result<Self> {
        Self::parse_as(None, text)
    }

    /// As [`parse`](Self::parse), with `kind` taken from `default` when the
    /// file has none; a file naming a different kind is an error.
    pub fn parse_as(default: Option<ExperimentKind>, text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: i + 1,
                message: "expected key = value".into(),
            })?;
            pairs.push((i + 1, k.trim().to_owned(), v.trim().to_owned()));
        }
        let kind = match (pairs.iter().find(|p| p.1 == "kind"), default) {
            (Some(p), d) => {
                let k: ExperimentKind = p.2.parse()?;
                if d.is_some_and(|d| d != k) {
                    return Err(Error::Config(format!(
                        "config is for {k}, not {}",
                        d.unwrap()
                    )));
                }
                k
            }
            (None, Some(d)) => d,
            (None, None) => return Err(Error::Config("missing `kind`".into())),
        };
        let mut config = Self::new(kind);
        for (line, k, v) in pairs {
            config.set(&k, &v).map_err(|e| Error::Parse {
                line,
                message: e.to_string(),
            })?;
        }
        config.validate()?;
        Ok(config)
    }

    /// Set one key; used by the parser and by command-line overrides.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse()
                .map_err(|_| Error::Config(format!("bad value {v:?} for {key}")))
        }
        fn range(key: &str, v: &str) -> Result<(f64, f64)> {
            let f: Vec<&str> = v.split_whitespace().collect();
            if f.len() != 2 {
                return Err(Error::Config(format!("{key} takes two numbers")));
            }
            Ok((num(key, f[0])?, num(key, f[1])?))
        }
        fn flag(key: &str, v: &str) -> Result<bool> {
            match v {
                "true" | "1" | "yes" => Ok(true),
                "false" | "0" | "no" => Ok(false),
                _ => Err(Error::Config(format!("bad boolean {v:?} for {key}"))),
            }
        }
        match key {
            "kind" => {
                let kind: ExperimentKind = value.parse()?;
                if kind != self.kind {
                    return Err(Error::Config("kind may only be given once".into()));
                }
            }
            "trials" => self.trials = num(key, value)?,
            "omega" => self.cutoff = num(key, value)?,
            "d" => self.d_range = range(key, value)?,
            "d_scale" => self.d_scale = value.parse()?,
            "d_max" => self.d_max = Some(num(key, value)?),
            "ratio" => self.ratio_range = range(key, value)?,
            "equal_amplitudes" => self.equal_amplitudes = flag(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "out" => self.output = Some(PathBuf::from(value)),
            "grid_points" => self.grid_points = num(key, value)?,
            "directions" => self.directions = num(key, value)?,
            "tolerance" => self.tolerance = num(key, value)?,
            "srf" => self.srf_range = range(key, value)?,
            "points" => self.points = num(key, value)?,
            "spectra" => self.spectra = num(key, value)?,
            "sigma" => self.sigma = num(key, value)?,
            "execution" => self.execution = value.parse()?,
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }
}
