use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use nt_desk::cli;
use nt_desk::nt::NTMorphism;
use nt_desk::report::ScenarioReport;
use nt_desk::scenarios::{gjl_report, novel_report, robert_report, WindingConvention};
use nt_desk::Result;

#[derive(Parser)]
#[command(name = "nt-desk", version, about = "Exact metrics between *-homomorphisms of model algebras")]
struct Cli {
    /// Write the quantities as CSV.
    #[arg(long, global = true)]
    csv: Option<PathBuf>,
    /// Write the full report as JSON.
    #[arg(long, global = true)]
    json: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// The built-in example families.
    #[command(subcommand)]
    Examples(Example),
    /// Distances between two morphisms given as JSON.
    #[command(subcommand)]
    Metric(Metric),
    /// Determinant of a diagonal unitary given as JSON.
    Det {
        unitary: PathBuf,
        /// Cross-check against path integration.
        #[arg(long)]
        numeric: bool,
        #[arg(long, default_value_t = 100_000)]
        steps: usize,
    },
}

#[derive(Subcommand)]
enum Example {
    Robert {
        #[arg(long)]
        k: i64,
        #[arg(long)]
        l: i64,
        #[arg(long, default_value_t = 10)]
        stage: u32,
    },
    Gjl {
        #[arg(long, default_value_t = 4)]
        nmax: u32,
        #[arg(long, value_delimiter = ',', default_value = "2,3,4,5")]
        kseq: Vec<u32>,
        #[arg(long, value_enum, default_value_t = Winding::Next)]
        winding: Winding,
    },
    Novel {
        #[arg(long, default_value_t = 10)]
        stage: u32,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Winding {
    /// 4^n [n+1,n]
    Next,
    /// 4^n [n,n]
    Same,
}

#[derive(Args)]
struct Pair {
    a: PathBuf,
    b: PathBuf,
    /// K0 image of the target: all, zero or lattice:P/Q. Defaults to the target block's own.
    #[arg(long)]
    k0: Option<String>,
}

#[derive(Subcommand)]
enum Metric {
    /// Cuntz-semigroup distance of the two eigenvalue patterns.
    Dcu {
        #[command(flatten)]
        pair: Pair,
    },
    /// Rotation, diagonalisability and the determinant-rotation metric.
    Frakd {
        a: PathBuf,
        /// Second morphism; without it only the rotation of `a` is reported.
        b: Option<PathBuf>,
        #[arg(long)]
        k0: Option<String>,
        /// Domain basis JSON; id_T on the circle by default.
        #[arg(long)]
        basis_a: Option<PathBuf>,
        /// Target basis JSON; the canonical one by default.
        #[arg(long)]
        basis_b: Option<PathBuf>,
    },
    /// Refined distance through the fiber diagrams over ideals.
    Dstar {
        #[command(flatten)]
        pair: Pair,
        #[arg(long, value_enum, default_value_t = KGroup::K1)]
        k: KGroup,
        #[arg(long, value_enum, default_value_t = FiberMetric::Triv)]
        fiber_metric: FiberMetric,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KGroup {
    K1,
    Kbar1,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FiberMetric {
    Triv,
    Frakd,
}

fn load_pair(p: &Pair) -> Result<(NTMorphism, NTMorphism)> {
    let k0 = p.k0.as_deref().map(cli::parse_k0).transpose()?;
    Ok((cli::load_morphism(&p.a, k0.as_ref())?, cli::load_morphism(&p.b, k0.as_ref())?))
}

fn labelled(mut rep: ScenarioReport, p: &Pair) -> ScenarioReport {
    rep.param("a", p.a.display());
    rep.param("b", p.b.display());
    rep
}

fn run(cli: &Cli) -> Result<ScenarioReport> {
    match &cli.cmd {
        Cmd::Examples(Example::Robert { k, l, stage }) => robert_report(*k, *l, *stage),
        Cmd::Examples(Example::Gjl { nmax, kseq, winding }) => {
            let w = match winding {
                Winding::Next => WindingConvention::NextStage,
                Winding::Same => WindingConvention::SameStage,
            };
            gjl_report(*nmax, kseq, w)
        }
        Cmd::Examples(Example::Novel { stage }) => novel_report(*stage),
        Cmd::Metric(Metric::Dcu { pair }) => {
            let (a, b) = load_pair(pair)?;
            Ok(labelled(cli::metric_dcu(&a, &b)?, pair))
        }
        Cmd::Metric(Metric::Frakd { a, b, k0, basis_a, basis_b }) => {
            let k0 = k0.as_deref().map(cli::parse_k0).transpose()?;
            let m = cli::load_morphism(a, k0.as_ref())?;
            let n = b.as_deref().map(|b| cli::load_morphism(b, k0.as_ref())).transpose()?;
            let c = basis_a.as_deref().map(cli::read_json).transpose()?;
            let d = basis_b.as_deref().map(cli::read_json).transpose()?;
            let mut rep = cli::metric_frakd(&m, n.as_ref(), c, d)?;
            rep.param("a", a.display());
            if let Some(b) = b {
                rep.param("b", b.display());
            }
            Ok(rep)
        }
        Cmd::Metric(Metric::Dstar { pair, k, fiber_metric }) => {
            let (a, b) = load_pair(pair)?;
            let k = match k {
                KGroup::K1 => cli::KGroup::K1,
                KGroup::Kbar1 => cli::KGroup::Kbar1,
            };
            let f = match fiber_metric {
                FiberMetric::Triv => cli::FiberMetric::Triv,
                FiberMetric::Frakd => cli::FiberMetric::Frakd,
            };
            Ok(labelled(cli::metric_dstar(&a, &b, k, f)?, pair))
        }
        Cmd::Det { unitary, numeric, steps } => {
            let mut rep = cli::det_report(&cli::read_json(unitary)?, *numeric, *steps)?;
            rep.param("unitary", unitary.display());
            Ok(rep)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let rep = match run(&cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    print!("{}", rep.table());
    let saved = cli
        .csv
        .as_deref()
        .map(|p| rep.save_csv(p))
        .transpose()
        .and_then(|_| cli.json.as_deref().map(|p| rep.save_json(p)).transpose());
    if let Err(e) = saved {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    if rep.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
