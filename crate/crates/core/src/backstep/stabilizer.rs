use crate::symcore::Expr;
use crate::sysmodel::{SectionReader, SysError};

use super::fold::{DesignOptions, Fold};
use super::{BackstepError, ChainSystem};

/// Virtual laws `φ_{i,1}(η)` with a Lyapunov function `V(η)` for the
/// internal dynamics, plus an optional attenuation level and budget split.
///
/// File sections: `[phi]` (one expression per chain), `[V]`, and an optional
/// `[supply]` with `gamma = ...` and `split = ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct Stabilizer {
    pub phi: Vec<Expr>,
    pub v: Expr,
    pub gamma: Option<f64>,
    pub split: Option<usize>,
}

/// Sampled base condition of a stabilizer.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilizerCheck {
    /// `V(0) = 0` exactly.
    pub v_at_zero: bool,
    /// Smallest sampled `V`; `NaN` without internal states.
    pub min_v: f64,
    /// `V > 0` at every sample (vacuous without internal states).
    pub positive: bool,
    /// Largest sampled `V̇` (or dissipation residual for dissipative designs).
    pub max_rate: f64,
    pub points: usize,
    pub pass: bool,
}

impl Stabilizer {
    pub fn new(phi: Vec<Expr>, v: Expr) -> Stabilizer {
        Stabilizer {
            phi,
            v,
            gamma: None,
            split: None,
        }
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Stabilizer, BackstepError> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| SysError::Io(format!("{}: {e}", path.as_ref().display())))?;
        Stabilizer::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Stabilizer, BackstepError> {
        let secs = SectionReader::read(text, &["phi", "V", "supply"])?;
        let find = |name: &str| secs.iter().find(|s| s.name == name);
        let need = |name: &str| {
            find(name).ok_or_else(|| SysError::Parse {
                line: 1,
                col: 1,
                msg: format!("missing section [{name}]"),
            })
        };
        let phi = need("phi")?.exprs()?;
        let vs = need("V")?;
        let v = match vs.exprs()?.as_slice() {
            [v] => v.clone(),
            _ => return Err(vs.err("[V] must hold a single expression").into()),
        };
        let mut st = Stabilizer::new(phi, v);
        if let Some(s) = find("supply") {
            for (name, e) in s.bindings()? {
                let num = |e: &crate::sysmodel::Entry| {
                    e.text
                        .trim()
                        .parse::<f64>()
                        .map_err(|_| s.err(format!("`{name}` must be numeric")))
                };
                match name.as_str() {
                    "gamma" => st.gamma = Some(num(&e)?),
                    "split" => {
                        st.split = Some(
                            e.text
                                .trim()
                                .parse()
                                .map_err(|_| s.err("`split` must be a positive integer"))?,
                        )
                    }
                    _ => return Err(s.err(format!("unknown key `{name}` in [supply]")).into()),
                }
            }
        }
        Ok(st)
    }

    /// Samples `V(0) = 0`, `V > 0` and `V̇ ≤ 0` along `η̇ = f0(η, φ)`.
    pub fn check(
        &self,
        sys: &ChainSystem,
        opts: &DesignOptions,
    ) -> Result<StabilizerCheck, BackstepError> {
        let fold = Fold::nominal(sys, self, opts)?;
        fold.base_check(opts.radius)
    }
}
