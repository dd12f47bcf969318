use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "poslog", version, about = "Bounded analysis of positive first-order theories over finite structures")]
pub struct Cli {
    /// Machine-readable JSON report on standard output
    #[arg(long, global = true)]
    pub json: bool,

    /// Size bound: `k`, `sort=k,…` or `k,sort=k,…`
    #[arg(long, global = true, default_value = "4")]
    pub bound: String,

    /// Quantifier depth of the generated formula pool
    #[arg(long, global = true, default_value_t = 2)]
    pub pool_depth: usize,

    /// Node limit of the generated formula pool
    #[arg(long, global = true, default_value_t = 12)]
    pub pool_size: usize,

    /// Explicit pool: formulas separated by `;`
    #[arg(long, global = true)]
    pub pool_file: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Partition {
    /// The formula phi(x, y)
    #[arg(long)]
    pub phi: String,
    /// Object variables of phi, comma-separated
    #[arg(long)]
    pub x: String,
    /// Parameter variables of phi, comma-separated
    #[arg(long)]
    pub y: String,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check that a structure is a model of a theory
    Check { theory: PathBuf, structure: PathBuf },
    /// Search for a model satisfying extra sentences
    Find {
        theory: PathBuf,
        /// Fresh constant `name` or `name:sort`, usable in the sentences
        #[arg(long)]
        fresh: Vec<String>,
        #[arg(long)]
        require: Vec<String>,
        #[arg(long)]
        forbid: Vec<String>,
    },
    /// Bounded check that the theory entails an h-inductive sentence
    Entails {
        theory: PathBuf,
        #[arg(long)]
        sentence: String,
    },
    /// Find a homomorphism between two structures
    Hom {
        theory: PathBuf,
        source: PathBuf,
        target: PathBuf,
        /// List up to this many homomorphisms (0 = all)
        #[arg(long)]
        all: Option<usize>,
    },
    /// Find an isomorphism between two structures
    Iso { theory: PathBuf, source: PathBuf, target: PathBuf },
    /// Check a map for being an immersion, relative to the pool
    Immersion {
        theory: PathBuf,
        source: PathBuf,
        target: PathBuf,
        map: PathBuf,
    },
    /// Positive closedness of a model, relative to pool and bound
    PcCheck { theory: PathBuf, structure: PathBuf },
    /// Search the pool for an obstruction of a formula
    Obstruct {
        theory: PathBuf,
        #[arg(long)]
        formula: String,
    },
    /// The subset test for p.c. models
    Haykazyan {
        theory: PathBuf,
        structure: PathBuf,
        /// Elements of the subset, comma-separated
        #[arg(long)]
        subset: String,
    },
    /// Joint continuation of two models
    Jcp { theory: PathBuf, first: PathBuf, second: PathBuf },
    /// Amalgamate a span given as JSON
    Amalgamate { theory: PathBuf, span: PathBuf },
    /// Continue a model towards a p.c. model
    Continue {
        theory: PathBuf,
        structure: PathBuf,
        #[arg(long, default_value_t = 8)]
        max_size: usize,
    },
    /// The pool type of a tuple, and its bounded maximality
    Type {
        theory: PathBuf,
        structure: PathBuf,
        #[arg(long)]
        tuple: String,
        #[arg(long, default_value = "")]
        params: String,
    },
    /// Bounded check that a formula supports the type of a tuple
    Support {
        theory: PathBuf,
        structure: PathBuf,
        #[arg(long)]
        tuple: String,
        #[arg(long, default_value = "")]
        params: String,
        #[arg(long)]
        formula: String,
    },
    /// Check a psi-dividing witness sequence
    Dividing {
        theory: PathBuf,
        sequence: PathBuf,
        #[command(flatten)]
        part: Partition,
        #[arg(long)]
        psi: String,
        /// Variables of one slot of psi, comma-separated; repeat per slot
        #[arg(long = "slot", required = true)]
        slots: Vec<String>,
        /// Base parameters for the indiscernibility check
        #[arg(long, default_value = "")]
        base: String,
    },
    /// Check a tree-property witness
    Tp {
        theory: PathBuf,
        tree: PathBuf,
        #[command(flatten)]
        part: Partition,
        #[arg(long)]
        psi: String,
        #[arg(long = "slot", required = true)]
        slots: Vec<String>,
    },
    /// Check an order-property staircase
    Op {
        theory: PathBuf,
        a: PathBuf,
        b: PathBuf,
        #[command(flatten)]
        part: Partition,
        #[arg(long)]
        psi: String,
    },
    /// The (phi, psi)-rank of a set of formulas in a finite structure
    Rank {
        theory: PathBuf,
        structure: PathBuf,
        #[command(flatten)]
        part: Partition,
        #[arg(long)]
        psi: String,
        #[arg(long)]
        sigma: Vec<String>,
        /// Also search for a binary tree of this height
        #[arg(long)]
        tree: Option<usize>,
    },
    /// Quotient by a definable equivalence relation
    Heq {
        theory: PathBuf,
        structure: PathBuf,
        /// Formula in the variables given by --left and --right
        #[arg(long)]
        equiv: String,
        #[arg(long, default_value = "x")]
        left: String,
        #[arg(long, default_value = "y")]
        right: String,
        #[arg(long, default_value = "E")]
        name: String,
        /// Lift this automorphism (JSON map) to the quotient
        #[arg(long)]
        lift: Option<PathBuf>,
    },
    /// Union of a chain of structures given as JSON
    Union { theory: PathBuf, chain: PathBuf },
    /// Normal forms of a formula
    Normal {
        theory: PathBuf,
        #[arg(long)]
        formula: String,
    },
    /// Morleyise a theory with respect to a fragment
    Morleyise {
        theory: PathBuf,
        /// `qf` or `depth=d`
        #[arg(long, default_value = "qf")]
        fragment: String,
    },
    /// Eliminate quantifiers with user-supplied rules
    Qe {
        theory: PathBuf,
        #[arg(long)]
        rules: PathBuf,
        #[arg(long)]
        formula: String,
        /// Verify the result with the model finder at this bound
        #[arg(long)]
        verify: Option<usize>,
    },
    /// Translate a grid metric structure to a positive structure
    C2p {
        grid_structure: PathBuf,
        #[arg(long, default_value_t = 8)]
        grid: u32,
        /// Lines `symbol n/d` adding threshold relations
        #[arg(long)]
        thresholds: Option<PathBuf>,
        /// A continuous formula to translate and check pointwise
        #[arg(long)]
        formula: Option<String>,
    },
}
