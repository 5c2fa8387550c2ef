//! Index-set descriptors: `kind:key=value,...`.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use supremum_core::bounds::power_weights;
use supremum_core::{BasisMode, IndexSet, SignSubset};

use crate::error::{CliError, Result};
use crate::points;

#[derive(Debug, Clone, PartialEq)]
pub enum SetSpec {
    /// `basis:n=8[,mode=canonical|signed|negative][,theta=2]`
    Basis { n: usize, mode: BasisMode },
    /// `diagcube:n=16,alpha=0.25,k=6`: `d_j = j^{−alpha}`, the first `2^k`
    /// lexicographic sign patterns.
    DiagCube { n: usize, alpha: f64, k: u32 },
    /// `sk:N=8[,normalized=true]`
    Sk { spins: usize, normalized: bool },
    /// `tensor:N=6,m=3[,normalized=true]`
    Tensor {
        spins: usize,
        order: usize,
        normalized: bool,
    },
    /// `points:file=path.csv`
    Points { file: PathBuf },
}

impl SetSpec {
    pub fn build(&self) -> Result<IndexSet> {
        let cell = self.to_string();
        let set = match self {
            SetSpec::Basis { n, mode } => IndexSet::basis(*n, *mode),
            SetSpec::DiagCube { n, alpha, k } => {
                IndexSet::diagonal_cube(&power_weights(*n, *alpha), &SignSubset::FirstLexicographic { k: *k })
            }
            SetSpec::Sk { spins, normalized } => IndexSet::spin_quadratic(*spins, *normalized),
            SetSpec::Tensor {
                spins,
                order,
                normalized,
            } => IndexSet::spin_tensor(*spins, *order, *normalized),
            SetSpec::Points { file } => return points::read_points(file),
        };
        set.map_err(CliError::module(cell))
    }
}

impl fmt::Display for SetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SetSpec::Basis { n, mode } => match mode {
                BasisMode::Canonical => write!(f, "basis:n={n}"),
                BasisMode::Signed => write!(f, "basis:n={n},mode=signed"),
                BasisMode::NegativeScaled(theta) => write!(f, "basis:n={n},mode=negative,theta={theta}"),
            },
            SetSpec::DiagCube { n, alpha, k } => write!(f, "diagcube:n={n},alpha={alpha},k={k}"),
            SetSpec::Sk { spins, normalized } => write!(f, "sk:N={spins},normalized={normalized}"),
            SetSpec::Tensor {
                spins,
                order,
                normalized,
            } => write!(f, "tensor:N={spins},m={order},normalized={normalized}"),
            SetSpec::Points { file } => write!(f, "points:file={}", file.display()),
        }
    }
}

struct Params<'a> {
    kind: &'a str,
    pairs: Vec<(&'a str, &'a str)>,
}

impl<'a> Params<'a> {
    fn parse(text: &'a str) -> std::result::Result<Self, String> {
        let (kind, rest) = text.split_once(':').unwrap_or((text, ""));
        let mut pairs = Vec::new();
        for item in rest.split(',').filter(|s| !s.is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| format!("parameter `{item}` is not key=value"))?;
            pairs.push((k.trim(), v.trim()));
        }
        Ok(Self { kind, pairs })
    }

    fn check_known(&self, known: &[&str]) -> std::result::Result<(), String> {
        for (k, _) in &self.pairs {
            if !known.contains(k) {
                return Err(format!("unknown parameter `{k}` for `{}`", self.kind));
            }
        }
        Ok(())
    }

    fn get(&self, key: &str) -> Option<&'a str> {
        self.pairs.iter().rev().find(|(k, _)| *k == key).map(|(_, v)| *v)
    }

    fn required<T: FromStr>(&self, key: &str) -> std::result::Result<T, String> {
        let v = self
            .get(key)
            .ok_or_else(|| format!("`{}` needs parameter `{key}`", self.kind))?;
        v.parse()
            .map_err(|_| format!("parameter `{key}` has invalid value `{v}`"))
    }

    fn optional<T: FromStr>(&self, key: &str, default: T) -> std::result::Result<T, String> {
        match self.get(key) {
            None => Ok(default),
            Some(_) => self.required(key),
        }
    }
}

impl FromStr for SetSpec {
    type Err = String;

    fn from_str(text: &str) -> std::result::Result<Self, String> {
        let p = Params::parse(text.trim())?;
        match p.kind {
            "basis" => {
                p.check_known(&["n", "mode", "theta"])?;
                let n = p.required("n")?;
                let mode = match p.get("mode").unwrap_or("canonical") {
                    "canonical" => BasisMode::Canonical,
                    "signed" => BasisMode::Signed,
                    "negative" => BasisMode::NegativeScaled(p.optional("theta", 1.0)?),
                    other => return Err(format!("unknown basis mode `{other}`")),
                };
                Ok(SetSpec::Basis { n, mode })
            }
            "diagcube" => {
                p.check_known(&["n", "alpha", "k"])?;
                Ok(SetSpec::DiagCube {
                    n: p.required("n")?,
                    alpha: p.required("alpha")?,
                    k: p.required("k")?,
                })
            }
            "sk" => {
                p.check_known(&["N", "normalized"])?;
                Ok(SetSpec::Sk {
                    spins: p.required("N")?,
                    normalized: p.optional("normalized", true)?,
                })
            }
            "tensor" => {
                p.check_known(&["N", "m", "normalized"])?;
                Ok(SetSpec::Tensor {
                    spins: p.required("N")?,
                    order: p.required("m")?,
                    normalized: p.optional("normalized", true)?,
                })
            }
            "points" => {
                p.check_known(&["file"])?;
                Ok(SetSpec::Points {
                    file: PathBuf::from(p.get("file").ok_or("`points` needs parameter `file`")?),
                })
            }
            other => Err(format!("unknown set kind `{other}`")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_every_kind() {
        assert_eq!(
            "basis:n=8".parse::<SetSpec>().unwrap(),
            SetSpec::Basis {
                n: 8,
                mode: BasisMode::Canonical
            }
        );
        assert_eq!(
            "basis:n=3,mode=negative,theta=2.5".parse::<SetSpec>().unwrap(),
            SetSpec::Basis {
                n: 3,
                mode: BasisMode::NegativeScaled(2.5)
            }
        );
        assert_eq!(
            "diagcube:n=16,alpha=0.25,k=6".parse::<SetSpec>().unwrap(),
            SetSpec::DiagCube {
                n: 16,
                alpha: 0.25,
                k: 6
            }
        );
        assert_eq!(
            "sk:N=8".parse::<SetSpec>().unwrap(),
            SetSpec::Sk {
                spins: 8,
                normalized: true
            }
        );
        assert_eq!(
            "tensor:N=6,m=3,normalized=false".parse::<SetSpec>().unwrap(),
            SetSpec::Tensor {
                spins: 6,
                order: 3,
                normalized: false
            }
        );
        assert!(matches!(
            "points:file=a.csv".parse::<SetSpec>().unwrap(),
            SetSpec::Points { .. }
        ));
    }

    #[test]
    fn display_round_trips() {
        for text in [
            "basis:n=8",
            "basis:n=2,mode=signed",
            "diagcube:n=16,alpha=0.25,k=6",
            "sk:N=5,normalized=true",
            "tensor:N=6,m=3,normalized=false",
        ] {
            let s: SetSpec = text.parse().unwrap();
            assert_eq!(s.to_string(), text);
            assert_eq!(s.to_string().parse::<SetSpec>().unwrap(), s);
        }
    }

    #[test]
    fn rejects_bad_descriptors() {
        assert!("cube:n=3".parse::<SetSpec>().is_err());
        assert!("basis".parse::<SetSpec>().is_err());
        assert!("basis:n=x".parse::<SetSpec>().is_err());
        assert!("basis:n=3,foo=1".parse::<SetSpec>().is_err());
        assert!("sk:N".parse::<SetSpec>().is_err());
    }

    #[test]
    fn builds_sets() {
        let t = "diagcube:n=16,alpha=0.25,k=6".parse::<SetSpec>().unwrap().build().unwrap();
        assert_eq!((t.dim(), t.cardinality()), (16, 64));
        let t = "sk:N=4".parse::<SetSpec>().unwrap().build().unwrap();
        assert_eq!(t.dim(), 6);
        assert!("basis:n=0".parse::<SetSpec>().unwrap().build().is_err());
    }
}
