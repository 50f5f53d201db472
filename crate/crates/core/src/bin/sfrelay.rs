use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sfrelay::bounds::{rate_region, RateRegionModel};
use sfrelay::harness::{self, ConfigFile, SimConfig, SimContext};
use sfrelay::media::ImageTensor;
use sfrelay::{Error, LdpcCode, Result};

#[derive(Parser)]
#[command(name = "sfrelay", version, about = "Semantic-forward relaying simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte-Carlo sweep over S-D SNR x rho, written as CSV.
    Simulate(SimulateArgs),
    /// Print the achievable-rate bounds of the binary model.
    Bounds {
        #[arg(long)]
        rho: f64,
        #[arg(long)]
        q: f64,
        #[arg(long)]
        delta: f64,
    },
    /// Write per-iteration reconstructions of one image as PNG files.
    DumpImages(DumpArgs),
    /// Dump the parity-check matrix of a code in ALIST format.
    Alist {
        #[arg(long, default_value_t = 900)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args, Default)]
struct CommonArgs {
    /// Config file (key = value); flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    snr_rd: Option<f64>,
    #[arg(long)]
    global_iters: Option<usize>,
    #[arg(long)]
    local_iters: Option<usize>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    sd_code_seed: Option<u64>,
    #[arg(long)]
    rd_code_seed: Option<u64>,
    /// Restart LDPC messages at every global iteration.
    #[arg(long)]
    cold_start: bool,
    /// Re-estimate rho from the branch hard decisions each iteration.
    #[arg(long)]
    estimate_rho: bool,
    /// Form the semantic extrinsic as posterior minus Y-domain a-priori.
    #[arg(long)]
    subtract_semantic_apriori: bool,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// S-D SNRs in dB: "start:stop:step" or "a,b,c".
    #[arg(long, allow_hyphen_values = true)]
    snr_sd: Option<String>,
    /// Intra-link crossover probabilities: "a,b,c".
    #[arg(long)]
    rho: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    /// Directory of PNG images (bundled mini-set by default).
    #[arg(long)]
    images: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DumpArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, allow_hyphen_values = true)]
    snr_sd: f64,
    #[arg(long)]
    rho: f64,
    #[arg(long)]
    image: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

fn base_config(common: &CommonArgs) -> Result<SimConfig> {
    let mut cfg = SimConfig::default();
    if let Some(path) = &common.config {
        cfg.apply_file(&ConfigFile::load(path)?)?;
    }
    macro_rules! set {
        ($($flag:ident => $field:ident),*) => {
            $(if let Some(v) = common.$flag.clone() { cfg.$field = v; })*
        };
    }
    set!(snr_rd => snr_rd, global_iters => global_iters, local_iters => local_iters,
         kappa => kappa, seed => master_seed, sd_code_seed => sd_code_seed, rd_code_seed => rd_code_seed);
    if common.model.is_some() {
        cfg.model = common.model.clone();
    }
    if common.cold_start {
        cfg.warm_start = false;
    }
    if common.estimate_rho {
        cfg.estimate_rho = true;
    }
    if common.subtract_semantic_apriori {
        cfg.subtract_semantic_apriori = true;
    }
    Ok(cfg)
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let mut cfg = base_config(&args.common)?;
    if let Some(s) = &args.snr_sd {
        cfg.snr_sd_list = harness::parse_list(s)?;
    }
    if let Some(s) = &args.rho {
        cfg.rho_list = harness::parse_list(s)?;
    }
    if let Some(t) = args.trials {
        cfg.trials = t;
    }
    if args.images.is_some() {
        cfg.images = args.images;
    }
    if args.out.is_some() {
        cfg.out = args.out;
    }
    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from("results.csv"));
    let ctx = SimContext::load(cfg)?;
    eprintln!(
        "S-D code k = {}, R-D code k = {}; {} points x {} trials",
        ctx.sd_code.k(),
        ctx.rd_code.k(),
        ctx.cfg.snr_sd_list.len() * ctx.cfg.rho_list.len(),
        ctx.cfg.trials
    );
    let result = harness::run_sweep(&ctx);
    for f in &result.failures {
        eprintln!("trial failed: snr {} rho {} #{}: {}", f.snr_db, f.rho, f.trial, f.error);
    }
    let file = std::fs::File::create(&out).map_err(|e| Error::Io { path: out.clone(), source: e })?;
    harness::write_csv(&result.records, std::io::BufWriter::new(file))?;

    let summary = harness::summarize(&result.records);
    let summary_path = out.with_extension("summary.csv");
    let file = std::fs::File::create(&summary_path).map_err(|e| Error::Io { path: summary_path.clone(), source: e })?;
    harness::write_summary_csv(&summary, std::io::BufWriter::new(file))?;

    println!("{:>7} {:>6} {:>10} {:>10} {:>10}", "snr_db", "rho", "ED joint", "ED indep", "ED sem");
    let last = ctx.cfg.global_iters;
    for row in summary.iter().filter(|r| r.iter == last) {
        println!(
            "{:>7} {:>6} {:>10.4} {:>10.4} {:>10.4}",
            row.snr_db, row.rho, row.mean_ed_joint, row.mean_ed_independent, row.mean_ed_semantic
        );
    }
    eprintln!("wrote {} and {}", out.display(), summary_path.display());
    Ok(())
}

fn dump(args: DumpArgs) -> Result<()> {
    let cfg = base_config(&args.common)?;
    let seed = harness::trial_seed(cfg.master_seed, 0, 0, 0);
    let ctx = SimContext::load(cfg)?;
    let img = ImageTensor::load_png(&args.image)?;
    let (record, files) = harness::dump_iteration_images(&ctx, args.snr_sd, args.rho, &img, seed, &args.out)?;
    for (t, ed) in record.ed_joint.iter().enumerate() {
        println!(
            "iter {t}: ED joint {ed:.4}  ED semantic {:.4}  ED independent {:.4}",
            record.ed_semantic[t], record.ed_independent_per_iter[((t + 1) * ctx.cfg.local_iters - 1).min(record.ed_independent_per_iter.len() - 1)]
        );
    }
    eprintln!("wrote {} images to {}", files.len(), args.out.display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(args) => simulate(args),
        Command::Bounds { rho, q, delta } => {
            println!("{}", rate_region(&RateRegionModel::new(rho, q, delta)?));
            Ok(())
        }
        Command::DumpImages(args) => dump(args),
        Command::Alist { n, seed, out } => {
            let code = LdpcCode::build(n, 2, 3, seed)?;
            code.write_alist(&out)?;
            eprintln!("n = {}, checks = {}, k = {}", code.n(), code.num_checks(), code.k());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
