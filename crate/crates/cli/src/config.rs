//! Study descriptions, from flags or a `key = value` file.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use vofrac_core::{EpsilonPolicy, LadderRule, OrderFunction, Scheme};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudyKind {
    /// Error and observed order with `n` refined.
    TemporalOrder,
    /// Error and observed order with `m` and `n` refined together.
    SpacetimeOrder,
    /// Wall time and storage growth of one scheme.
    Scaling,
    /// Final-level discrepancy between the fast and direct schemes.
    Agreement,
    /// Worst relative error of the kernel approximation.
    KernelCertify,
    /// Coefficient properties of the fast formula.
    CoefficientAudit,
}

impl StudyKind {
    pub fn is_order_study(self) -> bool {
        matches!(self, Self::TemporalOrder | Self::SpacetimeOrder)
    }

    /// Whether rung wall times are part of the result.
    pub fn is_timing(self) -> bool {
        matches!(self, Self::Scaling)
    }
}

impl FromStr for StudyKind {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Ok(match s {
            "temporal_order" => Self::TemporalOrder,
            "spacetime_order" => Self::SpacetimeOrder,
            "scaling" => Self::Scaling,
            "agreement" => Self::Agreement,
            "kernel_certify" => Self::KernelCertify,
            "coefficient_audit" => Self::CoefficientAudit,
            other => return Err(CliError::Config(format!("unknown study {other:?}"))),
        })
    }
}

impl fmt::Display for StudyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::TemporalOrder => "temporal_order",
            Self::SpacetimeOrder => "spacetime_order",
            Self::Scaling => "scaling",
            Self::Agreement => "agreement",
            Self::KernelCertify => "kernel_certify",
            Self::CoefficientAudit => "coefficient_audit",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemId {
    /// `(t³+3t²+1) sin x sin y` on `(0,π)²`.
    Example1_2d,
    /// `(t³+3t²+1) sin x sin y sin z` on `(0,π)³`.
    Example2_3d,
    /// `∂_t^α u = −u + f`, exact solution `t³+3t²+1`.
    ScalarOde,
}

impl ProblemId {
    pub fn is_scalar(self) -> bool {
        self == Self::ScalarOde
    }
}

impl FromStr for ProblemId {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Ok(match s {
            "example1_2d" => Self::Example1_2d,
            "example2_3d" => Self::Example2_3d,
            "scalar_ode" => Self::ScalarOde,
            other => return Err(CliError::Config(format!("unknown problem {other:?}"))),
        })
    }
}

impl fmt::Display for ProblemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Example1_2d => "example1_2d",
            Self::Example2_3d => "example2_3d",
            Self::ScalarOde => "scalar_ode",
        })
    }
}

/// One `(m, n)` mesh pair. `m` is zero for problems without space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rung {
    pub m: usize,
    pub n: usize,
}

/// Parses `m:n,m:n,...`; a bare `n` means `m = 0`.
pub fn parse_ladder(s: &str) -> Result<Vec<Rung>, CliError> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            let bad = || CliError::Config(format!("bad ladder entry {t:?}, expected m:n"));
            let (m, n) = match t.split_once(':') {
                Some((m, n)) => (
                    m.trim().parse().map_err(|_| bad())?,
                    n.trim().parse().map_err(|_| bad())?,
                ),
                None => (0, t.parse().map_err(|_| bad())?),
            };
            if n == 0 {
                return Err(bad());
            }
            Ok(Rung { m, n })
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct StudySpec {
    pub kind: StudyKind,
    pub problem: ProblemId,
    pub scheme: Scheme,
    pub ladder: Vec<Rung>,
    pub epsilon: EpsilonPolicy,
    pub ladder_rule: LadderRule,
    /// Order function in [`OrderFunction::parse`] syntax; `sin4` if absent.
    pub order: Option<String>,
    pub max_storage: Option<usize>,
    pub parallel_rungs: bool,
    pub out: Option<PathBuf>,
    pub markdown: Option<PathBuf>,
}

impl StudySpec {
    pub fn new(kind: StudyKind, problem: ProblemId, ladder: Vec<Rung>) -> Self {
        Self {
            kind,
            problem,
            scheme: Scheme::Fast,
            ladder,
            epsilon: EpsilonPolicy::DtSquared,
            ladder_rule: LadderRule::default(),
            order: None,
            max_storage: None,
            parallel_rungs: false,
            out: None,
            markdown: None,
        }
    }

    pub fn order_function(&self) -> Result<OrderFunction, CliError> {
        Ok(OrderFunction::parse(
            self.order.as_deref().unwrap_or("sin4"),
            1.0,
        )?)
    }

    /// Rungs sorted, each refining the previous one by doubling `m` and/or
    /// multiplying `n` by 2 or 4 (the latter keeps `n = m²` ladders valid).
    pub fn validate(&self) -> Result<(), CliError> {
        let err = |msg: String| Err(CliError::Config(msg));
        if self.ladder.is_empty() {
            return err("empty ladder".into());
        }
        if self.kind.is_order_study() && self.ladder.len() < 2 {
            return err(format!("{} needs at least two rungs", self.kind));
        }
        let spatial = !self.problem.is_scalar()
            && !matches!(
                self.kind,
                StudyKind::KernelCertify | StudyKind::CoefficientAudit
            );
        for r in &self.ladder {
            if spatial && r.m < 2 {
                return err(format!("rung {}:{} needs m >= 2", r.m, r.n));
            }
        }
        for w in self.ladder.windows(2) {
            let (a, b) = (w[0], w[1]);
            let m_ok = b.m == a.m || b.m == 2 * a.m;
            let n_ok = b.n == a.n || b.n == 2 * a.n || b.n == 4 * a.n;
            let refines = b.m != a.m || b.n != a.n;
            if !(m_ok && n_ok && refines) {
                return err(format!(
                    "rung {}:{} does not refine {}:{}",
                    b.m, b.n, a.m, a.n
                ));
            }
        }
        if self.kind == StudyKind::TemporalOrder && self.ladder.windows(2).any(|w| w[0].m != w[1].m)
        {
            return err("temporal_order keeps m fixed".into());
        }
        if self.parallel_rungs && self.kind.is_timing() {
            return err("parallel rungs would distort a timing study".into());
        }
        self.order_function()?;
        Ok(())
    }

    /// Reads `key = value` lines; `#` starts a comment.
    pub fn from_config_text(text: &str) -> Result<Self, CliError> {
        let mut spec = Self::new(
            StudyKind::SpacetimeOrder,
            ProblemId::Example1_2d,
            Vec::new(),
        );
        let mut kind_set = false;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Config(format!("line {}: expected key = value", lineno + 1))
            })?;
            spec.set(key.trim(), value.trim())?;
            kind_set |= key.trim() == "study";
        }
        if !kind_set {
            return Err(CliError::Config("config lacks a study".into()));
        }
        Ok(spec)
    }

    /// Applies one setting by name, as used by config files.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        match key {
            "study" => self.kind = value.parse()?,
            "problem" => self.problem = value.parse()?,
            "scheme" => self.scheme = value.parse()?,
            "ladder" => self.ladder = parse_ladder(value)?,
            "epsilon" => self.epsilon = value.parse()?,
            "ladder_rule" => self.ladder_rule = value.parse()?,
            "order" => self.order = Some(value.to_string()),
            "max_storage" => {
                self.max_storage = Some(
                    value
                        .parse()
                        .map_err(|_| CliError::Config(format!("bad max_storage {value:?}")))?,
                )
            }
            "parallel_rungs" => {
                self.parallel_rungs = value
                    .parse()
                    .map_err(|_| CliError::Config(format!("bad parallel_rungs {value:?}")))?
            }
            "out" => self.out = Some(PathBuf::from(value)),
            "markdown" => self.markdown = Some(PathBuf::from(value)),
            other => return Err(CliError::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }
}
