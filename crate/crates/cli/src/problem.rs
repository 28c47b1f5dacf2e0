//! Turning `--problem` and friends into concrete systems.

use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use saddlebound::io;
use saddlebound::problems;
use saddlebound::{DoubleSaddleSystem, PrecondChoice, ProblemDescriptor};

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemKind {
    PoissonDist,
    PoissonBnd,
    Random,
    TightNeg,
    TightPos,
    Manifest(PathBuf),
}

impl FromStr for ProblemKind {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "poisson-dist" => Self::PoissonDist,
            "poisson-bnd" => Self::PoissonBnd,
            "random" => Self::Random,
            "tight-neg" => Self::TightNeg,
            "tight-pos" => Self::TightPos,
            _ => match s.strip_prefix("manifest:") {
                Some(path) if !path.is_empty() => Self::Manifest(path.into()),
                _ => bail!("unknown problem {s:?}"),
            },
        })
    }
}

impl ProblemKind {
    pub fn name(&self) -> String {
        match self {
            Self::PoissonDist => "poisson-dist".into(),
            Self::PoissonBnd => "poisson-bnd".into(),
            Self::Random => "random".into(),
            Self::TightNeg => "tight-neg".into(),
            Self::TightPos => "tight-pos".into(),
            Self::Manifest(p) => format!("manifest:{}", p.display()),
        }
    }
}

/// Which of D and E a random system leaves at zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ZeroBlocks {
    None,
    D,
    E,
    De,
}

/// One fully specified problem instance of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct Case {
    pub kind: ProblemKind,
    pub h: Option<f64>,
    pub beta: Option<f64>,
    pub seed: Option<u64>,
    pub dims: Option<[usize; 3]>,
    pub params: [f64; 5],
    pub zero: ZeroBlocks,
}

impl Case {
    /// Short label used for per-case output directories.
    pub fn label(&self) -> String {
        let mut parts = Vec::new();
        if let Some(h) = self.h {
            parts.push(format!("h{h}"));
        }
        if let Some(b) = self.beta {
            parts.push(format!("beta{b}"));
        }
        if let Some(s) = self.seed {
            parts.push(format!("seed{s}"));
        }
        if parts.is_empty() {
            "case".into()
        } else {
            parts.join("-")
        }
    }

    pub fn build(&self) -> Result<(DoubleSaddleSystem, ProblemDescriptor)> {
        let system = match &self.kind {
            ProblemKind::PoissonDist => problems::poisson_distributed(self.h.unwrap(), self.beta.unwrap())?.system,
            ProblemKind::PoissonBnd => problems::poisson_boundary(self.h.unwrap(), self.beta.unwrap())?.0,
            ProblemKind::Random => {
                let [n, m, p] = self.dims.ok_or_else(|| anyhow!("--problem random needs --dims n,m,p"))?;
                let seed = self.seed.unwrap_or(0);
                let (dz, ez) = match self.zero {
                    ZeroBlocks::None => (false, false),
                    ZeroBlocks::D => (true, false),
                    ZeroBlocks::E => (false, true),
                    ZeroBlocks::De => (true, true),
                };
                let x = problems::random_extremes(seed, dz, ez);
                problems::random_system(n, m, p, seed, &x)?
            }
            ProblemKind::TightNeg => problems::tightness_upper_negative(self.params)?,
            ProblemKind::TightPos => problems::tightness_lower_positive(self.params)?,
            ProblemKind::Manifest(path) => {
                io::load_system(path).with_context(|| format!("loading {}", path.display()))?
            }
        };
        let descriptor = ProblemDescriptor {
            name: self.kind.name(),
            dims: system.dims(),
            h: self.h,
            beta: self.beta,
            seed: self.seed,
        };
        Ok((system, descriptor))
    }
}

pub fn parse_list<T: FromStr>(text: &str, what: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    text.split(',')
        .map(|t| t.trim().parse::<T>().map_err(|e| anyhow!("bad {what} entry {t:?}: {e}")))
        .collect()
}

pub struct SweepSpec<'a> {
    pub problem: &'a ProblemKind,
    pub h: &'a [f64],
    pub beta: &'a [f64],
    pub seeds: &'a [u64],
    pub dims: Option<&'a str>,
    pub params: Option<&'a str>,
    pub zero: ZeroBlocks,
}

/// Expands the flags into cases in input order: h outer, β inner for the
/// Poisson problems, one case per seed for random systems.
pub fn expand(spec: &SweepSpec) -> Result<Vec<Case>> {
    let dims = match spec.dims {
        Some(t) => {
            let v: Vec<usize> = parse_list(t, "--dims")?;
            match v.as_slice() {
                [n, m, p] => Some([*n, *m, *p]),
                _ => bail!("--dims expects n,m,p"),
            }
        }
        None => None,
    };
    let params = match spec.params {
        Some(t) => {
            let v: Vec<f64> = parse_list(t, "--params")?;
            <[f64; 5]>::try_from(v.as_slice()).map_err(|_| anyhow!("--params expects five values"))?
        }
        None => [1.0; 5],
    };
    let base = Case {
        kind: spec.problem.clone(),
        h: None,
        beta: None,
        seed: None,
        dims,
        params,
        zero: spec.zero,
    };
    let mut cases = Vec::new();
    match spec.problem {
        ProblemKind::PoissonDist | ProblemKind::PoissonBnd => {
            for &h in spec.h {
                for &beta in spec.beta {
                    cases.push(Case {
                        h: Some(h),
                        beta: Some(beta),
                        ..base.clone()
                    });
                }
            }
        }
        ProblemKind::Random => {
            for &seed in spec.seeds {
                cases.push(Case {
                    seed: Some(seed),
                    ..base.clone()
                });
            }
        }
        _ => cases.push(base),
    }
    Ok(cases)
}

pub fn parse_precond(text: &str) -> Result<PrecondChoice> {
    Ok(match text {
        "none" => PrecondChoice::None,
        "exact" => PrecondChoice::exact(),
        "jacobi" => PrecondChoice::jacobi(),
        "pearson-wathen" => PrecondChoice::pearson_wathen(),
        "drop-term" => PrecondChoice::drop_term(),
        _ => match text.strip_prefix("user:") {
            Some(path) if !path.is_empty() => PrecondChoice::Strategies {
                name: "user".into(),
                blocks: io::load_user_preconditioner(path.as_ref())
                    .with_context(|| format!("loading user preconditioner {path}"))?,
            },
            _ => bail!("unknown preconditioner {text:?}"),
        },
    })
}
