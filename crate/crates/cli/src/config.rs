use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use overlapix::Error;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Norms,
    Estimate,
    Sweep,
    Witness,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

impl Format {
    fn as_str(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
        }
    }
}

/// Everything a run depends on. `to_args` renders it back to a command line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    /// State family (norms, witness) or sweep family.
    pub family: Option<String>,
    pub n: Vec<i64>,
    /// Extra state parameters as `key=value`.
    pub params: Vec<String>,
    pub target: Option<String>,
    pub sigma: Option<String>,
    pub eps: Option<f64>,
    pub eps_list: Vec<f64>,
    pub t_list: Vec<f64>,
    pub delta: Option<f64>,
    pub trials: Option<usize>,
    pub draws: Option<usize>,
    pub targets: Vec<String>,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub format: Format,
}

#[derive(Parser, Debug)]
#[command(name = "overlapix", version, about = "Black-box overlap and fidelity estimation")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// L1, L2 and sup norms of a state, plus the smoothed L1 norm at --eps.
    Norms(StateArgs),
    /// Estimate F(target, sigma) from simulated black-box measurements on sigma.
    Estimate(EstimateArgs),
    /// Run a verification sweep and check its assertions.
    Sweep(SweepArgs),
    /// Build the adversarial witness for a target at --eps.
    Witness(StateArgs),
}

#[derive(Args, Debug)]
struct Common {
    #[arg(long)]
    seed: Option<u64>,
    /// Write OUTPUT.json and OUTPUT.csv instead of printing.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
struct StateArgs {
    /// State family: vacuum, fock, coherent, spike, ghz, mm, basis, haar.
    #[arg(long, conflicts_with = "target")]
    family: Option<String>,
    #[arg(long, requires = "family")]
    n: Option<i64>,
    /// Extra parameter, e.g. b=3 for basis, seed=7 for haar, re=1 for coherent.
    #[arg(long = "param")]
    params: Vec<String>,
    /// Full state descriptor, e.g. fock:4 or mix:ghz3=0.6,mm3=0.4.
    #[arg(long)]
    target: Option<String>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
struct EstimateArgs {
    #[arg(long)]
    target: String,
    #[arg(long)]
    sigma: String,
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    delta: f64,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
struct SweepArgs {
    /// fock, spike, stabiliser, haar, gaussian, worstcase or witness.
    #[arg(long)]
    family: String,
    #[arg(long, value_delimiter = ',')]
    n: Vec<i64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long = "eps-list", value_delimiter = ',')]
    eps_list: Vec<f64>,
    /// Worst-case band parameters.
    #[arg(long = "t", value_delimiter = ',')]
    t_list: Vec<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    draws: Option<usize>,
    /// Target descriptors for the gaussian and witness sweeps.
    #[arg(long, value_delimiter = ',')]
    targets: Vec<String>,
    #[command(flatten)]
    common: Common,
}

impl RunConfig {
    fn empty(command: Command, common: Common) -> Self {
        Self {
            command,
            family: None,
            n: Vec::new(),
            params: Vec::new(),
            target: None,
            sigma: None,
            eps: None,
            eps_list: Vec::new(),
            t_list: Vec::new(),
            delta: None,
            trials: None,
            draws: None,
            targets: Vec::new(),
            seed: common.seed,
            output: common.output,
            format: common.format,
        }
    }

    fn from_state(command: Command, a: StateArgs) -> Self {
        Self {
            family: a.family,
            n: a.n.into_iter().collect(),
            params: a.params,
            target: a.target,
            eps: a.eps,
            delta: a.delta,
            ..Self::empty(command, a.common)
        }
    }

    /// Parses a full argument vector, program name first.
    pub fn try_parse_from<I, T>(args: I) -> Result<Self, clap::Error>
    where
        I: IntoIterator<Item = T>,
        T: Into<OsString> + Clone,
    {
        let cli = Cli::try_parse_from(args)?;
        Ok(match cli.command {
            Sub::Norms(a) => Self::from_state(Command::Norms, a),
            Sub::Witness(a) => Self::from_state(Command::Witness, a),
            Sub::Estimate(a) => Self {
                target: Some(a.target),
                sigma: Some(a.sigma),
                eps: Some(a.eps),
                delta: Some(a.delta),
                ..Self::empty(Command::Estimate, a.common)
            },
            Sub::Sweep(a) => Self {
                family: Some(a.family),
                n: a.n,
                eps: a.eps,
                eps_list: a.eps_list,
                t_list: a.t_list,
                delta: a.delta,
                trials: a.trials,
                draws: a.draws,
                targets: a.targets,
                ..Self::empty(Command::Sweep, a.common)
            },
        })
    }

    /// Command line that parses back to this config.
    pub fn to_args(&self) -> Vec<String> {
        let mut v = vec!["overlapix".to_string(), self.command_name().to_string()];
        let mut push = |k: &str, val: String| {
            v.push(format!("--{k}"));
            v.push(val);
        };
        let join = |xs: &[String]| xs.join(",");
        if let Some(f) = &self.family {
            push("family", f.clone());
        }
        if !self.n.is_empty() {
            push("n", join(&self.n.iter().map(|n| n.to_string()).collect::<Vec<_>>()));
        }
        for p in &self.params {
            push("param", p.clone());
        }
        if let Some(t) = &self.target {
            push("target", t.clone());
        }
        if let Some(s) = &self.sigma {
            push("sigma", s.clone());
        }
        if let Some(e) = self.eps {
            push("eps", e.to_string());
        }
        if !self.eps_list.is_empty() {
            push("eps-list", join(&self.eps_list.iter().map(|e| e.to_string()).collect::<Vec<_>>()));
        }
        if !self.t_list.is_empty() {
            push("t", join(&self.t_list.iter().map(|t| t.to_string()).collect::<Vec<_>>()));
        }
        if let Some(d) = self.delta {
            push("delta", d.to_string());
        }
        if let Some(t) = self.trials {
            push("trials", t.to_string());
        }
        if let Some(d) = self.draws {
            push("draws", d.to_string());
        }
        if !self.targets.is_empty() {
            push("targets", join(&self.targets));
        }
        if let Some(s) = self.seed {
            push("seed", s.to_string());
        }
        if let Some(o) = &self.output {
            push("output", o.display().to_string());
        }
        push("format", self.format.as_str().to_string());
        v
    }

    fn command_name(&self) -> &'static str {
        match self.command {
            Command::Norms => "norms",
            Command::Estimate => "estimate",
            Command::Sweep => "sweep",
            Command::Witness => "witness",
        }
    }

    fn param(&self, key: &str) -> Result<Option<&str>, Error> {
        for p in &self.params {
            let (k, v) = p
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("parameter '{p}' is not key=value")))?;
            if k.trim() == key {
                return Ok(Some(v.trim()));
            }
        }
        Ok(None)
    }

    /// Single-state descriptor from `--target` or `--family/--n/--param`.
    pub fn state_descriptor(&self) -> Result<String, Error> {
        if let Some(t) = &self.target {
            return Ok(t.clone());
        }
        let family = self
            .family
            .as_deref()
            .ok_or_else(|| Error::Parse("give --target or --family".into()))?;
        let n = || {
            self.n
                .first()
                .copied()
                .ok_or_else(|| Error::Parse(format!("family '{family}' needs --n")))
        };
        Ok(match family {
            "vacuum" => "vacuum".into(),
            "fock" | "spike" | "ghz" | "mm" => format!("{family}:{}", n()?),
            "basis" => format!("basis:{}:{}", n()?, self.param("b")?.unwrap_or("0")),
            "haar" => format!("haar:{}:{}", n()?, self.param("seed")?.unwrap_or("0")),
            "coherent" => format!(
                "coherent:{}:{}",
                self.param("re")?.unwrap_or("0"),
                self.param("im")?.unwrap_or("0")
            ),
            other => return Err(Error::Parse(format!("unknown state family '{other}'"))),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rt(line: &str) {
        let args: Vec<&str> = line.split_whitespace().collect();
        let a = RunConfig::try_parse_from(&args).unwrap();
        let b = RunConfig::try_parse_from(a.to_args()).unwrap();
        assert_eq!(a, b, "{line}");
        let json = serde_json::to_string(&a).unwrap();
        assert_eq!(serde_json::from_str::<RunConfig>(&json).unwrap(), a);
    }

    #[test]
    fn round_trips() {
        rt("overlapix norms --family fock --n 0");
        rt("overlapix norms --family basis --n 2 --param b=3 --eps 0.2 --format csv");
        rt("overlapix witness --target haar:4:1 --eps 0.8 --delta 0.1 --output out/w");
        rt("overlapix estimate --target ghz:3 --sigma ghz:3 --eps 0.1 --delta 0.05 --seed 7");
        rt("overlapix sweep --family stabiliser --n 2,4,6 --eps 0.1 --delta 0.05 --trials 400 --seed 1");
        rt("overlapix sweep --family worstcase --t 1,2.5 --eps 0.25 --trials 100");
        rt("overlapix sweep --family witness --targets fock:0,ghz:3 --eps-list 0.1,0.3 --seed 2");
    }

    #[test]
    fn descriptors() {
        let c = |line: &str| {
            let args: Vec<&str> = line.split_whitespace().collect();
            RunConfig::try_parse_from(&args).unwrap().state_descriptor()
        };
        assert_eq!(c("x norms --family fock --n 3").unwrap(), "fock:3");
        assert_eq!(c("x norms --family fock --n -1").unwrap(), "fock:-1");
        assert_eq!(c("x norms --family haar --n 4 --param seed=9").unwrap(), "haar:4:9");
        assert!(c("x norms --family squeezed --n 1").is_err());
        assert!(c("x norms --family ghz").is_err());
    }

    #[test]
    fn missing_eps_is_a_usage_error() {
        let e = RunConfig::try_parse_from(["x", "estimate", "--target", "ghz:3", "--sigma", "ghz:3", "--delta", "0.1"])
            .unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }
}
