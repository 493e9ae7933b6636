//! `katetov`: exact metric-structure computations from the command line.
//!
//! Every subcommand prints a [`report::Report`] (text or JSON). Inputs are
//! file paths, or `@name` for an entry of the catalog.

mod catalog;
mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use katetov_core::rational::{parse_rational, Rational};

use crate::catalog::Kind;

#[derive(Parser, Debug)]
#[command(name = "katetov", version, about = "Exact continuous logic over rational metric spaces")]
struct Cli {
    /// Catalog directory used for `@name` inputs and `catalog` commands.
    #[arg(long, global = true, env = "KATETOV_CATALOG")]
    catalog: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "text")]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Cmp {
    Lt,
    Gt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Isometries,
    Automorphisms,
}

fn rational(s: &str) -> Result<Rational, String> {
    parse_rational(s).map_err(|e| e.to_string())
}

/// Signature for a stand-alone formula: taken from a structure, or inferred
/// from the formula text plus explicit declarations.
#[derive(Args, Debug, Clone)]
struct SigArgs {
    /// Use this structure's signature.
    #[arg(long)]
    structure: Option<String>,
    /// Declare a relation as NAME:ARITY[:MODULUS].
    #[arg(long = "rel")]
    rels: Vec<String>,
    /// Declare a constant symbol.
    #[arg(long = "const")]
    consts: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the metric axioms on a distance table and list every violation.
    Validate { space: String },
    /// Add one point at the given distances (in point order).
    Extend {
        space: String,
        #[arg(long, value_delimiter = ',', value_parser = rational, required = true)]
        values: Vec<Rational>,
        #[arg(long, default_value = "p")]
        name: String,
    },
    /// Amalgamate B with a copy of A displaced by eps off the shared prefix.
    Amalgamate {
        a: String,
        b: String,
        #[arg(long, default_value_t = 0)]
        shared: usize,
        #[arg(long, value_parser = rational)]
        eps: Rational,
        /// Points of A to amalgamate along (default: all, in order).
        #[arg(long, value_delimiter = ',')]
        a_points: Vec<String>,
    },
    /// Extend a seed space towards the rational Urysohn space.
    EnumerateQu {
        seed: String,
        #[arg(long, default_value_t = 2)]
        denominator: u32,
        #[arg(long, default_value_t = 1)]
        budget: usize,
    },
    /// Parse and print a formula in canonical form.
    Parse {
        formula: String,
        #[command(flatten)]
        sig: SigArgs,
    },
    /// Lipschitz constant of a formula in its free variables.
    Lipschitz {
        formula: String,
        #[command(flatten)]
        sig: SigArgs,
    },
    /// Borel class of `{M : phi cmp eps}`.
    BorelLevel {
        formula: String,
        #[arg(long, value_enum, default_value = "lt")]
        cmp: Cmp,
        #[command(flatten)]
        sig: SigArgs,
    },
    /// Exact value of a formula in a finite structure.
    Eval {
        structure: String,
        formula: String,
        /// VAR=POINT
        #[arg(long = "assign")]
        assign: Vec<String>,
    },
    /// Truncated structure distance on a shared space.
    DeltaSeq {
        m: String,
        n: String,
        #[arg(long)]
        k: Option<usize>,
        /// Tuple enumeration (default: the catalog's, else lexicographic).
        #[arg(long = "enum")]
        enumeration: Option<String>,
    },
    /// Decide `phi(a) < eps` or `phi(a) > eps`.
    ModMember {
        structure: String,
        formula: String,
        #[arg(long, value_parser = rational)]
        eps: Rational,
        #[arg(long, value_enum, default_value = "lt")]
        cmp: Cmp,
        #[arg(long = "assign")]
        assign: Vec<String>,
    },
    /// Finite-scale probe of the separable-categoricity criterion.
    ScProbe {
        structure: String,
        /// File with one pool formula per line, over variables x1..x{n}.
        #[arg(long)]
        pool: String,
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long, value_parser = rational)]
        eps: Rational,
        #[arg(long, default_value_t = 1)]
        depth: usize,
        #[arg(long, default_value_t = 10_000)]
        budget: usize,
    },
    /// Enclose the value of a formula in the Urysohn space.
    EvalUrysohn {
        anchored: String,
        formula: String,
        /// VAR=ANCHOR
        #[arg(long = "param")]
        params: Vec<String>,
        #[arg(long, value_parser = rational, default_value = "1/10")]
        mesh: Rational,
        #[arg(long, default_value_t = 3)]
        rounds: usize,
    },
    /// Decide a quantifier-free sentence over a fragment exactly.
    QfDecide {
        fragment: String,
        formula: String,
        #[arg(long = "threshold", value_delimiter = ',', value_parser = rational)]
        thresholds: Vec<Rational>,
    },
    /// Enclose the theta infimum, whose value is sqrt(q).
    ThetaDemo {
        #[arg(long, value_parser = rational)]
        q: Rational,
        #[arg(long, value_parser = rational, default_value = "1/1000000")]
        tol: Rational,
    },
    /// Value of a graded descriptor at a partial isometry.
    GradedEval {
        space: String,
        #[arg(long)]
        desc: String,
        /// Pairs FROM:TO.
        #[arg(long, value_delimiter = ',')]
        map: Vec<String>,
    },
    /// Check the graded-subgroup axioms over the full isometry group.
    GradedAxioms {
        space: String,
        #[arg(long)]
        desc: String,
    },
    /// Truncated left-invariant distance between two isometries.
    RhoS {
        space: String,
        #[arg(long, value_delimiter = ',')]
        g: Vec<String>,
        #[arg(long, value_delimiter = ',')]
        h: Vec<String>,
        #[arg(long)]
        k: Option<usize>,
        /// Point enumeration (default: stored order).
        #[arg(long, value_delimiter = ',')]
        order: Vec<String>,
    },
    /// Check `|phi^{gM}(c) - phi^M(c)| <= L d(gc, c)` over all isometries or automorphisms.
    Invariance {
        structure: String,
        formula: String,
        #[arg(long = "assign")]
        assign: Vec<String>,
        #[arg(long, value_enum, default_value = "isometries")]
        mode: Mode,
    },
    /// Search an isometry g with H(g) < eps and g(N) within eps of M.
    ApproxSearch {
        m: String,
        n: String,
        #[arg(long)]
        desc: String,
        #[arg(long, value_parser = rational)]
        eps: Rational,
        #[arg(long, default_value_t = 100_000)]
        budget: usize,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long = "enum")]
        enumeration: Option<String>,
    },
    /// Smallest family of n-tuples whose automorphism orbits are eps-dense.
    OligoProbe {
        structure: String,
        #[arg(long)]
        n: usize,
        #[arg(long, value_parser = rational)]
        eps: Rational,
        #[arg(long, default_value_t = 100_000)]
        limit: usize,
    },
    /// Graded Delta transform of a space table by a group table.
    VaughtDelta {
        gspace: String,
        #[arg(long)]
        phi: String,
        #[arg(long)]
        j: String,
    },
    /// Graded star transform of a space table by a group table.
    VaughtStar {
        gspace: String,
        #[arg(long)]
        phi: String,
        #[arg(long)]
        j: String,
    },
    /// Set transforms A^{*U} and A^{ΔU}.
    VaughtSets {
        gspace: String,
        #[arg(long)]
        set: String,
        #[arg(long)]
        group_set: String,
    },
    /// Close space tables under connectives, scaling and transforms.
    NiceClosure {
        gspace: String,
        #[arg(long, value_delimiter = ',', required = true)]
        phi: Vec<String>,
        #[arg(long, value_delimiter = ',')]
        coset: Vec<String>,
        #[arg(long, value_delimiter = ',', value_parser = rational)]
        scale: Vec<Rational>,
        #[arg(long, default_value_t = 10_000)]
        budget: usize,
    },
    /// Encode a point of X as a metric structure on Y.
    Encode {
        instance: String,
        #[arg(long)]
        x: String,
        #[arg(long)]
        k: Option<usize>,
    },
    /// Compare orbit equivalence with isomorphism of encodings.
    OrbitEquiv {
        instance: String,
        #[arg(long)]
        x: String,
        #[arg(long)]
        x2: String,
    },
    /// Run the transform identities over random finite G-spaces.
    LemmaSuite {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        count: usize,
    },
    /// Store and retrieve named artifacts.
    #[command(subcommand)]
    Catalog(CatalogCommand),
}

#[derive(Subcommand, Debug)]
enum CatalogCommand {
    /// Store the canonical form of a file.
    Put {
        name: String,
        file: PathBuf,
        /// Artifact kind (default: from the file extension).
        #[arg(long, value_enum)]
        kind: Option<Kind>,
        /// Structure entry an enumeration refers to.
        #[arg(long)]
        against: Option<String>,
    },
    /// Print an entry's canonical text.
    Get { name: String },
    /// List the manifest.
    List,
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let echo = echo(&args[1..]);
    match commands::run(&cli, &echo) {
        Ok(commands::Output::Report(report, ok)) => {
            match cli.format {
                Format::Text => print!("{}", report.to_text()),
                Format::Json => println!("{}", report.to_json()),
            }
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Ok(commands::Output::Raw(text)) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

/// The command line without output and catalog flags, which do not change
/// the result.
fn echo(args: &[String]) -> String {
    let mut out = Vec::new();
    let mut skip = false;
    for a in args {
        if skip {
            skip = false;
            continue;
        }
        if a == "--format" || a == "--catalog" {
            skip = true;
            continue;
        }
        if a.starts_with("--format=") || a.starts_with("--catalog=") {
            continue;
        }
        out.push(a.as_str());
    }
    out.join(" ")
}
