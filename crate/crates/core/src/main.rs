use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use osc_lab::bellman::{epsilon_tilde, induct, psi, split_search, BellmanParams};
use osc_lab::classes::{a2_report, bmo_report, verify_rearrangement};
use osc_lab::harness::campaign::{run_campaign, CampaignConfig, Status};
use osc_lab::harness::report::{write_file, write_records, write_trace};
use osc_lab::transforms::rearrange_decreasing;
use osc_lab::{big_w, big_w_grid, minimize_c, v_c, ConvexWeight, Error, Interval, OptimizerConfig, Result, StepFunction};

#[derive(Parser)]
#[command(name = "osc-lab", version, about = "Averaging functionals, BMO and A2 characteristics of step functions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Step function as JSON (`-` reads standard input).
    #[arg(long, short)]
    input: PathBuf,
    /// Convex weight: power:P, exp, cosh, reg:<weight>:N.
    #[arg(long, default_value = "power:2")]
    weight: String,
    /// Subinterval `a,b` of the domain; defaults to the whole domain.
    #[arg(long)]
    interval: Option<String>,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Quantity {
    /// `V_c` at the constant given by `--c`.
    Vc,
    /// `V` and the optimal constant.
    V,
    /// The interval supremum `W`.
    W,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate V_c, V or W.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "w")]
        what: Quantity,
        #[arg(long, allow_hyphen_values = true)]
        c: Option<f64>,
    },
    /// BMO norms, or A2 characteristics with `--a2`.
    Norm {
        #[command(flatten)]
        common: Common,
        /// Exponents of the BMO norms.
        #[arg(long, value_delimiter = ',', default_value = "1,1.5,2,3")]
        p: Vec<f64>,
        /// Treat the input as a positive weight.
        #[arg(long)]
        a2: bool,
    },
    /// Emit the decreasing rearrangement.
    Rearrange {
        #[command(flatten)]
        common: Common,
    },
    /// Search for a splitting point and print its certificate.
    Split {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        epsilon: f64,
        /// Defaults to the smallest admissible value of the form epsilon (1 - 2^-k).
        #[arg(long)]
        epsilon_tilde: Option<f64>,
        /// Defaults to half of its admissible bound.
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Recursive splitting; writes the trace as CSV.
    Induct {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        epsilon_tilde: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long, default_value_t = 8)]
        depth: usize,
    },
    /// Compare W of the rearrangement with W of the input.
    Verify {
        #[command(flatten)]
        common: Common,
    },
    /// Run a seeded property campaign and write its CSV report.
    Campaign {
        /// TOML or JSON configuration; defaults apply when absent.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        grid: Option<usize>,
        /// Comma-separated check names.
        #[arg(long, value_delimiter = ',')]
        checks: Vec<String>,
        /// Comma-separated weight descriptors.
        #[arg(long, value_delimiter = ',')]
        weights: Vec<String>,
        #[arg(long)]
        oracle: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Brute-force W over a uniform grid of endpoints.
    Oracle {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 512)]
        grid: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn read_input(path: &Path) -> Result<StepFunction> {
    let text = if path == Path::new("-") {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).map_err(|e| Error::io(path, e))?;
        s
    } else {
        std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?
    };
    StepFunction::from_json(&text)
}

struct Loaded {
    phi: StepFunction,
    q: ConvexWeight,
    j: Interval,
    out: Option<PathBuf>,
}

fn load(c: &Common) -> Result<Loaded> {
    let phi = read_input(&c.input)?;
    let q = ConvexWeight::parse(&c.weight)?;
    let j = match &c.interval {
        None => phi.domain(),
        Some(s) => parse_interval(s)?,
    };
    Ok(Loaded { phi, q, j, out: c.out.clone() })
}

fn parse_interval(s: &str) -> Result<Interval> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [a, b] = parts.as_slice() else {
        return Err(Error::Parse(format!("interval '{s}' must be 'a,b'")));
    };
    let num = |x: &str| x.parse::<f64>().map_err(|_| Error::Parse(format!("bad number '{x}' in interval '{s}'")));
    Interval::new(num(a)?, num(b)?)
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, format!("{text}\n")).map_err(|e| Error::io(p, e)),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn emit_json(out: Option<&Path>, v: &Value) -> Result<()> {
    emit(out, &serde_json::to_string_pretty(v).expect("JSON values serialize"))
}

fn params_for(phi: &StepFunction, j: &Interval, q: &ConvexWeight, epsilon: f64, eps_t: Option<f64>, delta: Option<f64>, cfg: &OptimizerConfig) -> Result<BellmanParams> {
    let eps_t = match eps_t {
        Some(e) => e,
        None => epsilon_tilde(phi, j, epsilon, q, cfg)?
            .ok_or_else(|| Error::Contract(format!("W(phi, J) >= Q(epsilon tilde) for every grid value below epsilon = {epsilon}")))?,
    };
    match delta {
        Some(d) => BellmanParams::new(epsilon, eps_t, d, q),
        None => BellmanParams::with_half_delta(epsilon, eps_t, q),
    }
}

fn run(command: Command) -> Result<ExitCode> {
    let cfg = OptimizerConfig::default();
    match command {
        Command::Eval { common, what, c } => {
            let l = load(&common)?;
            let v = match what {
                Quantity::Vc => {
                    let c = c.ok_or_else(|| Error::Argument("--what vc needs --c".into()))?;
                    json!({ "value": v_c(&l.phi, &l.j, c, &l.q)?, "c_star": c, "witness": [l.j.a(), l.j.b()] })
                }
                Quantity::V => {
                    let r = minimize_c(&l.phi, &l.j, &l.q, &cfg)?;
                    json!({ "value": r.value, "c_star": r.c_star, "witness": [l.j.a(), l.j.b()] })
                }
                Quantity::W => {
                    let r = big_w(&l.phi, &l.j, &l.q, &cfg)?;
                    let c_star = minimize_c(&l.phi, &r.witness, &l.q, &cfg)?.c_star;
                    json!({ "value": r.value, "c_star": c_star, "witness": [r.witness.a(), r.witness.b()], "method": r.method })
                }
            };
            emit_json(l.out.as_deref(), &v)?;
        }
        Command::Norm { common, p, a2 } => {
            let l = load(&common)?;
            let v = if a2 {
                serde_json::to_value(a2_report(&l.phi, &cfg)?)
            } else {
                let reports = p.iter().map(|&p| bmo_report(&l.phi, p, &cfg)).collect::<Result<Vec<_>>>()?;
                serde_json::to_value(reports)
            }
            .expect("reports serialize");
            emit_json(l.out.as_deref(), &v)?;
        }
        Command::Rearrange { common } => {
            let l = load(&common)?;
            emit(l.out.as_deref(), &rearrange_decreasing(&l.phi)?.to_json())?;
        }
        Command::Split { common, epsilon, epsilon_tilde, delta } => {
            let l = load(&common)?;
            let params = params_for(&l.phi, &l.j, &l.q, epsilon, epsilon_tilde, delta, &cfg)?;
            let s = split_search(&l.phi, &l.j, &params, &l.q, &cfg)?;
            let alphas: Vec<Value> = (0..=4)
                .map(|k| {
                    let a = k as f64 / 4.0;
                    psi(&l.phi, &l.j, s.c_used, s.t, a, &l.q).map(|v| json!({ "alpha": a, "psi": v }))
                })
                .collect::<Result<_>>()?;
            let v = json!({ "params": params, "split": s, "q_epsilon": l.q.eval(epsilon), "psi_by_alpha": alphas });
            emit_json(l.out.as_deref(), &v)?;
        }
        Command::Induct { common, epsilon, epsilon_tilde, delta, depth } => {
            let l = load(&common)?;
            let params = params_for(&l.phi, &l.j, &l.q, epsilon, epsilon_tilde, delta, &cfg)?;
            let rep = induct(&l.phi, &l.j, &params, &l.q, depth, &cfg)?;
            match &l.out {
                Some(p) => write_file(p, |b| write_trace(b, &rep.rows))?,
                None => write_trace(std::io::stdout().lock(), &rep.rows)?,
            }
            eprintln!("level sums: {:?}{}", rep.level_sums, if rep.truncated { " (truncated)" } else { "" });
        }
        Command::Verify { common } => {
            let l = load(&common)?;
            let v = serde_json::to_value(verify_rearrangement(&l.phi, &l.q, &cfg)?).expect("report serializes");
            emit_json(l.out.as_deref(), &v)?;
        }
        Command::Campaign { config, seed, samples, grid, checks, weights, oracle, out } => {
            let mut c = match config {
                Some(p) => CampaignConfig::from_path(&p)?,
                None => CampaignConfig::default(),
            };
            if let Some(s) = seed {
                c.seed = s;
            }
            if let Some(n) = samples {
                c.samples = n;
            }
            if let Some(g) = grid {
                c.optimizer.grid_resolution = g;
            }
            if !checks.is_empty() {
                c.checks = checks.iter().map(|s| s.parse()).collect::<Result<_>>()?;
            }
            if !weights.is_empty() {
                c.weights = weights;
            }
            c.oracle_mode |= oracle;
            let report = run_campaign(&c)?;
            match &out {
                Some(p) => write_file(p, |b| write_records(b, &report.records))?,
                None => write_records(std::io::stdout().lock(), &report.records)?,
            }
            for (name, t) in &report.summary.per_check {
                eprintln!("{name:<15} pass {:>6}  fail {:>4}  skipped {:>5}", t.pass, t.fail, t.skipped);
            }
            if report.records.iter().any(|r| r.status == Status::Fail) {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Oracle { common, grid } => {
            let l = load(&common)?;
            let r = big_w_grid(&l.phi, &l.j, &l.q, grid, &cfg)?;
            let c_star = minimize_c(&l.phi, &r.witness, &l.q, &cfg)?.c_star;
            emit_json(l.out.as_deref(), &json!({ "value": r.value, "c_star": c_star, "witness": [r.witness.a(), r.witness.b()] }))?;
        }
    }
    Ok(ExitCode::SUCCESS)
}
