// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use deeptherm::error::{Error, Result};
use deeptherm::experiment::{self, ExperimentConfig, ResultRecord};
use deeptherm::haar::{self, HaarParams};
use deeptherm::perm::{self, Permutation};
use deeptherm::projected::{self, ProjectedMatrix};
use deeptherm::seed;
use deeptherm::statevector::{self, Boundary, Geometry, Placement, Statevector};
use deeptherm::stats::SampleMean;
use deeptherm::statmech;
use deeptherm::theory::{self, Speed};

#[derive(Parser)]
#[command(name = "deeptherm", version, about = "Projected-ensemble frame potentials in brick-wall random circuits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a sweep described by a key = value config file.
    Simulate(SimulateArgs),
    /// Closed-form predictions as CSV in the sweep schema.
    Theory(TheoryArgs),
    /// Exact transfer-matrix averages next to statevector Monte Carlo.
    Oracle(OracleArgs),
    /// Haar frame potentials and the Haar-state projected-ensemble values.
    HaarBaseline(HaarArgs),
    /// Permutation utilities.
    Perm {
        #[command(subcommand)]
        action: PermAction,
    },
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    resume: bool,
}

#[derive(Args)]
struct TheoryArgs {
    #[arg(long, default_value_t = 2)]
    q: usize,
    #[arg(long = "la", default_value_t = 6)]
    len_a: usize,
    /// Used only by the spectator form.
    #[arg(long = "lb", default_value_t = 12)]
    len_b: usize,
    #[arg(long, default_value_t = 16.0)]
    t_max: f64,
    #[arg(long, default_value_t = 1.0)]
    t_step: f64,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    k: Vec<usize>,
    #[arg(long, default_value_t = 0.5)]
    epsilon: f64,
    #[arg(long, default_value = "edge")]
    geometry: String,
    #[arg(long, default_value = "obc")]
    boundary: String,
    /// Use the q → ∞ rate 2 instead of the purity speed.
    #[arg(long)]
    large_q_speed: bool,
    /// Override the rate used by every prediction.
    #[arg(long)]
    speed: Option<f64>,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, default_value_t = 2)]
    q: usize,
    #[arg(long = "la", default_value_t = 3)]
    len_a: usize,
    #[arg(long = "lb", default_value_t = 3)]
    len_b: usize,
    #[arg(long, default_value_t = 3)]
    t_max: u64,
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    n: usize,
    #[arg(long, default_value = "edge")]
    geometry: String,
    #[arg(long, default_value = "obc")]
    boundary: String,
    /// Monte Carlo circuit realizations; 0 skips the comparison.
    #[arg(long, default_value_t = 1000)]
    realizations: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct HaarArgs {
    #[arg(long, value_delimiter = ',', default_value = "2")]
    q: Vec<usize>,
    #[arg(long = "la", value_delimiter = ',', default_value = "1,2,3,4,5,6")]
    len_a: Vec<usize>,
    #[arg(long = "lb", value_delimiter = ',', default_value = "1,2,4,8,12,16")]
    len_b: Vec<usize>,
    #[arg(long, default_value_t = 3)]
    k_max: usize,
}

#[derive(Subcommand)]
enum PermAction {
    /// Cycle structure of an image list such as 1,0,3,2.
    Show {
        #[arg(value_delimiter = ',')]
        images: Vec<usize>,
    },
    /// Transposition distance and overlap q^{N_c(a b⁻¹)}.
    Compare {
        #[arg(value_delimiter = ',', num_args = 1, required = true)]
        a: Vec<usize>,
        #[arg(value_delimiter = ',', num_args = 1, required = true)]
        b: Vec<usize>,
        #[arg(long, default_value_t = 2)]
        q: u64,
    },
    /// Check d(ι_2k, (α, α′)) = k over all α ∈ S_k.
    Identities {
        #[arg(long, default_value_t = 5)]
        k_max: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Theory(a) => theory_table(a),
        Command::Oracle(a) => oracle(a),
        Command::HaarBaseline(a) => haar_table(a),
        Command::Perm { action } => perm_tool(action),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        // a closed downstream pipe (e.g. `| head`) is not a failure
        Err(Error::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let mut cfg = ExperimentConfig::from_file(&a.config)?;
    if let Some(s) = a.seed {
        cfg.master_seed = s;
    }
    if let Some(w) = a.workers {
        cfg.workers = w;
    }
    if let Some(o) = a.out {
        cfg.output = Some(o);
    }
    if a.resume {
        cfg.resume = true;
    }
    let out = experiment::run_sweep(&cfg)?;
    match &cfg.output {
        Some(p) => eprintln!(
            "wrote {} rows to {} ({} points resumed)",
            out.records.len(),
            p.display(),
            out.resumed_points.len()
        ),
        None => print_records(&out.records)?,
    }
    Ok(())
}

fn print_records(rows: &[ResultRecord]) -> Result<()> {
    let mut w = std::io::stdout().lock();
    writeln!(w, "{}", experiment::CSV_HEADER)?;
    for r in rows {
        writeln!(w, "{}", r.to_csv())?;
    }
    Ok(())
}

fn theory_table(a: TheoryArgs) -> Result<()> {
    let placement: Placement = a.geometry.parse()?;
    let boundary: Boundary = a.boundary.parse()?;
    let speed = match (a.speed, a.large_q_speed) {
        (Some(v), _) => Speed::Override(v),
        (None, true) => Speed::LargeQ,
        (None, false) => Speed::Purity,
    };
    if !(a.t_step > 0.0) {
        return Err(Error::InvalidArgument("t_step must be positive".into()));
    }
    for &k in &a.k {
        theory::TheoryParams { q: a.q, len_a: a.len_a, t: 0.0, k, n: 0.0, epsilon: a.epsilon, placement, boundary }
            .validate()?;
    }
    let (q, la) = (a.q, a.len_a);
    // same columns as the sweep CSV; t may be fractional, sem is empty
    let mut w = std::io::stdout().lock();
    writeln!(w, "{}", experiment::CSV_HEADER)?;
    let mut row = |t: f64, k: usize, observable: &str, mean: f64| {
        writeln!(
            w,
            "{},{q},{la},{},{},{},{t},{k},{observable},{mean},,0,0,0",
            experiment::SCHEMA_VERSION,
            a.len_b,
            placement.as_str(),
            boundary.as_str()
        )
    };
    let steps = (a.t_max / a.t_step).floor() as usize;
    for &k in &a.k {
        row(0.0, k, "haar_fp", haar::haar_frame_potential_f64(q, la, k))?;
        row(0.0, k, "design_time", theory::design_time(q, la, k, a.epsilon, speed)?)?;
        for i in 0..=steps {
            let t = i as f64 * a.t_step;
            row(t, k, "mean_purity_k", theory::mean_purity(q, t).powi(k as i32))?;
            row(t, k, "membrane_fp", theory::membrane_frame_potential(q, la, t, k, speed))?;
            row(t, k, "large_q_fp", theory::large_q_frame_potential(q, la, t, k))?;
            row(t, k, "large_q_fp_spectators_n0", theory::large_q_fp_with_spectators(q, la, a.len_b, t, k, 0.0))?;
            row(t, k, "delta2_nonint", theory::delta2_nonint(q, la, t, k, speed))?;
            row(t, k, "bulk_fp_large_q", theory::bulk_fp_large_q(q, t, k, boundary, speed))?;
            if k == 1 {
                row(t, k, "rounded_fp1", theory::rounded_fp1(q, la, t, speed))?;
            }
        }
    }
    Ok(())
}

fn oracle(a: OracleArgs) -> Result<()> {
    let geometry = Geometry::new(a.boundary.parse()?, a.geometry.parse()?, a.len_a, a.len_b)?;
    let mut w = std::io::stdout().lock();
    writeln!(w, "q,L_A,L_B,geometry,boundary,t,k,n,exact,monte_carlo,sem,n_realizations")?;
    let mut mc: Vec<Vec<f64>> = vec![Vec::with_capacity(a.realizations); a.t_max as usize + 1];
    for r in 0..a.realizations {
        let rs = seed::realization_seed(a.seed, r as u64);
        let mut st = Statevector::product_state(geometry.sites(), a.q)?;
        for t in 0..=a.t_max {
            if t > 0 {
                statevector::apply_time_step(&mut st, t, &geometry, rs)?;
            }
            let proj = ProjectedMatrix::from_state(&st, &geometry)?;
            mc[t as usize].push(projected::replica_moment(&proj, a.k, a.n)?);
        }
    }
    for t in 0..=a.t_max {
        let exact = statmech::contract_frame_potential(a.q, &geometry, t, a.k, a.n)?;
        let m = SampleMean::from_values(&mc[t as usize]);
        let fmt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            a.q,
            a.len_a,
            a.len_b,
            geometry.placement.as_str(),
            geometry.boundary.as_str(),
            t,
            a.k,
            a.n,
            exact,
            fmt((m.count > 0).then_some(m.mean)),
            fmt(m.sem),
            m.count
        )?;
    }
    Ok(())
}

fn haar_table(a: HaarArgs) -> Result<()> {
    let mut w = std::io::stdout().lock();
    writeln!(w, "q,L_A,L_B,k,F_H,F_H_exact,haar_state_fp")?;
    for &q in &a.q {
        for &la in &a.len_a {
            for k in 1..=a.k_max {
                let exact = (q as u64)
                    .checked_pow(la as u32)
                    .and_then(|n| haar::haar_frame_potential_exact(n, k).ok())
                    .map(|r| r.to_string())
                    .unwrap_or_default();
                for &lb in &a.len_b {
                    let p = HaarParams::new(q, la, lb, k)?;
                    writeln!(
                        w,
                        "{q},{la},{lb},{k},{},{exact},{}",
                        haar::haar_frame_potential_f64(q, la, k),
                        haar::haar_state_projected_fp(&p)
                    )?;
                }
            }
        }
    }
    Ok(())
}

fn perm_tool(action: PermAction) -> Result<()> {
    match action {
        PermAction::Show { images } => {
            let p = Permutation::from_images(images)?;
            println!("cycles: {p}");
            println!("cycle_count: {}", p.cycle_count());
            println!("cycle_type: {:?}", p.cycle_type());
            println!("inverse: {:?}", p.inverse().images());
            println!("rank: {}", p.rank());
        }
        PermAction::Compare { a, b, q } => {
            let (a, b) = (Permutation::from_images(a)?, Permutation::from_images(b)?);
            println!("distance: {}", perm::transposition_distance(&a, &b)?);
            println!("overlap: {}", perm::permutation_overlap(&a, &b, q)?);
        }
        PermAction::Identities { k_max } => {
            for k in 1..=k_max {
                let iota = Permutation::reversal(2 * k);
                let mut worst = 0;
                let mut count = 0;
                for alpha in perm::all_permutations(k)? {
                    let partner = perm::partner_alpha(&alpha);
                    let d = perm::transposition_distance(&iota, &perm::embed(&alpha, &partner))?;
                    worst = worst.max(d.abs_diff(k));
                    count += 1;
                }
                println!("k={k}: {count} permutations, max |d - k| = {worst}");
                if worst != 0 {
                    return Err(Error::InvalidArgument(format!("identity fails at k = {k}")));
                }
            }
        }
    }
    Ok(())
}
