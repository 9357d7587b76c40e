//! Locating enumeration caches and resolving aux-tape sources.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use aitlab::cache;
use aitlab::enumeration::{Budget, EnumerationTable};
use aitlab::BitString;
use anyhow::{bail, Context, Result};

/// Where the aux tape comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AuxSpec {
    Eps,
    /// First `c` bits of Ω read off the plain table at the same budget.
    Omega(usize),
    /// First `n` bits of the halting sequence of that plain table.
    Halting(usize),
}

impl AuxSpec {
    fn tag(&self) -> String {
        match self {
            AuxSpec::Eps => "eps".into(),
            AuxSpec::Omega(c) => format!("omega{c}"),
            AuxSpec::Halting(n) => format!("halting{n}"),
        }
    }
}

impl fmt::Display for AuxSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AuxSpec::Eps => write!(f, "eps"),
            AuxSpec::Omega(c) => write!(f, "omega:{c}"),
            AuxSpec::Halting(n) => write!(f, "halting:{n}"),
        }
    }
}

impl FromStr for AuxSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let num = |v: &str| v.parse::<usize>().map_err(|_| format!("bad count in aux source {s:?}"));
        match s.split_once(':') {
            None if s == "eps" => Ok(AuxSpec::Eps),
            Some(("omega", v)) => Ok(AuxSpec::Omega(num(v)?)),
            Some(("halting", v)) => Ok(AuxSpec::Halting(num(v)?)),
            _ => Err(format!("aux source must be eps, omega:<c> or halting:<n>, got {s:?}")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Store {
    pub dir: PathBuf,
}

impl Store {
    pub fn path_for(&self, max_len: usize, max_steps: u64, aux: AuxSpec) -> PathBuf {
        self.dir.join(format!("L{max_len}-T{max_steps}-{}.cache", aux.tag()))
    }

    /// The aux bits for `aux`, read from the plain cache at the same budget.
    pub fn resolve_aux(&self, max_len: usize, max_steps: u64, aux: AuxSpec) -> Result<BitString> {
        Ok(match aux {
            AuxSpec::Eps => BitString::new(),
            AuxSpec::Omega(c) => self.load(max_len, max_steps, AuxSpec::Eps, None)?.omega_prefix(c),
            AuxSpec::Halting(n) => self.load(max_len, max_steps, AuxSpec::Eps, None)?.halting_oracle(n),
        })
    }

    pub fn budget(&self, max_len: usize, max_steps: u64, aux: AuxSpec) -> Result<Budget> {
        Ok(Budget::new(max_len, max_steps).with_aux(self.resolve_aux(max_len, max_steps, aux)?))
    }

    /// Load a cache, from `explicit` if given, refusing to enumerate.
    pub fn load(
        &self,
        max_len: usize,
        max_steps: u64,
        aux: AuxSpec,
        explicit: Option<&Path>,
    ) -> Result<EnumerationTable> {
        let path = explicit.map_or_else(|| self.path_for(max_len, max_steps, aux), Path::to_path_buf);
        if !path.exists() {
            bail!(
                "no cache for budget max_len={max_len} max_steps={max_steps} aux={aux} at {}; \
                 run `aitlab enumerate --max-len {max_len} --max-steps {max_steps} --aux {aux}` first",
                path.display()
            );
        }
        let table = cache::load(&path).with_context(|| format!("reading {}", path.display()))?;
        let b = table.budget();
        if b.max_len != max_len || b.max_steps != max_steps {
            bail!(
                "{} holds max_len={} max_steps={}, expected max_len={max_len} max_steps={max_steps}",
                path.display(),
                b.max_len,
                b.max_steps
            );
        }
        if aux == AuxSpec::Eps && !b.aux.is_empty() {
            bail!("{} was enumerated with a nonempty aux tape", path.display());
        }
        Ok(table)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aux_spec_round_trips() {
        for s in ["eps", "omega:3", "halting:256"] {
            assert_eq!(s.parse::<AuxSpec>().unwrap().to_string(), s);
        }
        assert!("omega".parse::<AuxSpec>().is_err());
        assert!("halting:x".parse::<AuxSpec>().is_err());
        assert!("random:3".parse::<AuxSpec>().is_err());
    }

    #[test]
    fn paths_are_distinct_per_budget() {
        let s = Store { dir: "c".into() };
        assert_eq!(s.path_for(18, 100_000, AuxSpec::Halting(256)), PathBuf::from("c/L18-T100000-halting256.cache"));
        assert_ne!(s.path_for(18, 10, AuxSpec::Eps), s.path_for(18, 10, AuxSpec::Omega(1)));
    }
}
