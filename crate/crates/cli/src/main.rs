//! `drsim`: command-line driver for the demand-response experiments.

mod output;
mod plot;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use dr_core::casestudy::{evaluate_days, run_case_study, run_case_study_on, CaseStudyConfig, CaseStudyReport};
use dr_core::direct::{brute_force_dm, convex_dual_dm, warmup_gap, warmup_l, warmup_u, GridSpec};
use dr_core::format::decode_population;
use dr_core::meanfield::{lln_experiment, SetSampler};
use dr_core::pricing::StepRule;
use dr_core::scenario::{load_series, ColumnMap, SeriesKind};
use dr_core::{GridCostFunction, Population, PricingProblem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use output::{csv_table, num, OutputDir};
use plot::{line_chart, Series};

type AnyResult<T> = Result<T, Box<dyn std::error::Error>>;

#[derive(Parser)]
#[command(name = "drsim", version, about = "Dynamic pricing and direct-control demand-response experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Two-period warm-up: direct-control and pricing curves L(z), U(z).
    Warmup(WarmupArgs),
    /// Hausdorff distance between sample and expected average sets.
    Lln(LlnArgs),
    /// Frank-Wolfe price optimization for a population.
    Optimize(OptimizeArgs),
    /// Direct-control optimum by enumeration and by the convex dual.
    Direct(DirectArgs),
    /// Neighbourhood case study with solar and air conditioning.
    Casestudy(CaseArgs),
    /// Replays case-study prices on freshly sampled days.
    EvaluateDays(EvaluateArgs),
}

#[derive(Args)]
struct WarmupArgs {
    /// Number of consumers.
    #[arg(long, default_value_t = 10)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Points in the z grid.
    #[arg(long, default_value_t = 10_000)]
    grid: usize,
    #[arg(long, default_value = "out/warmup")]
    out: PathBuf,
}

#[derive(Args)]
struct LlnArgs {
    #[arg(long, value_delimiter = ',', default_value = "10,100,1000")]
    ns: Vec<usize>,
    /// Upper end of the uniform segment lengths.
    #[arg(long, default_value_t = 2.0)]
    upper: f64,
    /// Random directions per Hausdorff estimate.
    #[arg(long, default_value_t = 2000)]
    dirs: usize,
    /// Independent repetitions, seeded `seed..seed + seeds`.
    #[arg(long, default_value_t = 5)]
    seeds: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "out/lln")]
    out: PathBuf,
}

#[derive(Args)]
struct PopulationArgs {
    /// Population file; without it, random two-period segments are drawn.
    #[arg(long)]
    population: Option<PathBuf>,
    /// Number of random segments when no file is given.
    #[arg(long, default_value_t = 200)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Grid cost: peak, lp:K, pos:S or ramp:K:LAMBDA (`inf` allowed).
    #[arg(long, default_value = "peak", value_parser = parse_rho)]
    rho: GridCostFunction,
    /// Renewable supply per period, comma separated; zero by default.
    #[arg(long, value_delimiter = ',')]
    q0: Option<Vec<f64>>,
}

impl PopulationArgs {
    fn load(&self) -> AnyResult<(Population, Vec<f64>)> {
        let pop = match &self.population {
            Some(path) => decode_population(&std::fs::read_to_string(path)?)?,
            None => Population::new(SetSampler::UniformSegment { upper: 2.0 }.draw(self.n, self.seed)?)?,
        };
        let q0 = self.q0.clone().unwrap_or_else(|| vec![0.0; pop.horizon()]);
        Ok((pop, q0))
    }

    fn settings(&self) -> Vec<(&'static str, String)> {
        vec![
            (
                "population",
                self.population
                    .as_ref()
                    .map_or(format!("random segments n={}", self.n), |p| p.display().to_string()),
            ),
            ("seed", self.seed.to_string()),
            ("rho", self.rho.label()),
            ("q0", format!("{:?}", self.q0)),
        ]
    }
}

#[derive(Args)]
struct OptimizeArgs {
    #[command(flatten)]
    population: PopulationArgs,
    #[arg(long, default_value_t = 1000)]
    iterations: usize,
    /// Constant step size; the default is 2 / (k + 2).
    #[arg(long)]
    step: Option<f64>,
    /// Optimize a price that repeats every 24 hours.
    #[arg(long)]
    periodic: bool,
    #[arg(long, default_value = "out/optimize")]
    out: PathBuf,
}

#[derive(Args)]
struct DirectArgs {
    #[command(flatten)]
    population: PopulationArgs,
    /// Grid spacing in kWh for continuous sets.
    #[arg(long, default_value_t = 0.05)]
    resolution: f64,
    /// Frank-Wolfe iterations for the convex dual.
    #[arg(long, default_value_t = 2000)]
    iterations: usize,
    #[arg(long, default_value = "out/direct")]
    out: PathBuf,
}

#[derive(Args)]
struct CaseArgs {
    /// Number of houses.
    #[arg(long, default_value_t = 20)]
    n: usize,
    #[arg(long, default_value_t = 2000)]
    iterations: usize,
    /// Seed for the house parameters.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Midday solar as a fraction of midday flat-rate demand.
    #[arg(long, default_value_t = 1.2)]
    renewable_fraction: f64,
    #[arg(long, value_delimiter = ',', default_value = "1,2,4,inf", value_parser = parse_exponent)]
    exponents: Vec<f64>,
    /// Outside temperature CSV with day, hour and value columns.
    #[arg(long, requires = "renewable")]
    temperature: Option<PathBuf>,
    /// Solar production CSV with day, hour and value columns.
    #[arg(long, requires = "temperature")]
    renewable: Option<PathBuf>,
    #[arg(long, default_value = "day")]
    day_column: String,
    #[arg(long, default_value = "hour")]
    hour_column: String,
    #[arg(long, default_value = "value")]
    value_column: String,
    /// Days of synthetic weather when no CSV is given.
    #[arg(long, default_value_t = 31)]
    weather_days: usize,
    #[arg(long, default_value_t = 2023)]
    weather_seed: u64,
    #[arg(long, default_value = "out/casestudy")]
    out: PathBuf,
}

impl CaseArgs {
    fn config(&self) -> CaseStudyConfig {
        let mut cfg = CaseStudyConfig::default();
        cfg.population.n = self.n;
        cfg.population.seed = self.seed;
        cfg.iterations = self.iterations;
        cfg.renewable_fraction = self.renewable_fraction;
        cfg.exponents = self.exponents.clone();
        cfg.weather_days = self.weather_days;
        cfg.weather_seed = self.weather_seed;
        cfg
    }

    fn run(&self) -> AnyResult<(CaseStudyConfig, CaseStudyReport)> {
        let cfg = self.config();
        let report = match (&self.temperature, &self.renewable) {
            (Some(t), Some(r)) => {
                let cols = ColumnMap {
                    day: self.day_column.clone(),
                    hour: self.hour_column.clone(),
                    value: self.value_column.clone(),
                };
                let temps = load_series(t, &cols, SeriesKind::Temperature)?;
                let solar = load_series(r, &cols, SeriesKind::Renewable)?;
                run_case_study_on(&cfg, &temps, &solar)?
            }
            _ => run_case_study(&cfg)?,
        };
        Ok((cfg, report))
    }

    fn settings(&self) -> Vec<(&'static str, String)> {
        vec![
            ("n", self.n.to_string()),
            ("iterations", self.iterations.to_string()),
            ("seed", self.seed.to_string()),
            ("renewable_fraction", self.renewable_fraction.to_string()),
            ("exponents", self.exponents.iter().map(|&s| num(s)).collect::<Vec<_>>().join(",")),
            (
                "weather",
                match (&self.temperature, &self.renewable) {
                    (Some(t), Some(r)) => format!("{} + {}", t.display(), r.display()),
                    _ => format!("synthetic days={} seed={}", self.weather_days, self.weather_seed),
                },
            ),
        ]
    }
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    case: CaseArgs,
    /// Number of sampled days.
    #[arg(long, default_value_t = 45)]
    days: usize,
    #[arg(long, default_value_t = 7)]
    eval_seed: u64,
}

fn parse_exponent(s: &str) -> Result<f64, String> {
    match s.trim() {
        "inf" | "infinity" => Ok(f64::INFINITY),
        t => t.parse::<f64>().map_err(|e| format!("{t}: {e}")),
    }
}

fn parse_rho(s: &str) -> Result<GridCostFunction, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let rho = match parts.as_slice() {
        ["peak"] => GridCostFunction::Peak,
        ["lp", k] => GridCostFunction::LpNorm { kappa: parse_exponent(k)? },
        ["pos", s] => GridCostFunction::PositivePartLp { s: parse_exponent(s)? },
        ["ramp", k, l] => GridCostFunction::RampPenalized {
            kappa: parse_exponent(k)?,
            lambda: parse_exponent(l)?,
        },
        _ => return Err(format!("unknown grid cost `{s}`; expected peak, lp:K, pos:S or ramp:K:LAMBDA")),
    };
    rho.validate().map_err(|e| e.to_string())?;
    Ok(rho)
}

fn points(v: &[f64]) -> Vec<(f64, f64)> {
    v.iter().enumerate().map(|(i, &y)| (i as f64, y)).collect()
}

fn warmup(a: &WarmupArgs) -> AnyResult<PathBuf> {
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let params: Vec<(f64, f64)> = (0..a.n)
        .map(|_| (rng.random_range(0.0..2.0), rng.random_range(0.0..2.0)))
        .collect();
    let gap = warmup_gap(&params, a.grid)?;
    let mut curves = Vec::with_capacity(a.grid);
    let (mut l, mut u) = (Vec::new(), Vec::new());
    for i in 0..a.grid {
        let z = i as f64 / (a.grid - 1) as f64;
        let lz = warmup_l(z, &params);
        let uz = warmup_u(z, &params);
        l.push((z, lz));
        u.push((z, uz.u));
        curves.push(vec![num(z), num(lz), num(uz.u_plus), num(uz.u_minus), num(uz.u)]);
    }
    let mut out = OutputDir::create(&a.out)?;
    out.write("curves.csv", &csv_table(&["z", "l", "u_plus", "u_minus", "u"], curves))?;
    out.write(
        "table.csv",
        &csv_table(
            &["n", "dm", "pm", "relative_gap", "z_dm", "z_pm"],
            [vec![
                a.n.to_string(),
                num(gap.dm_value),
                num(gap.pm_value),
                num(gap.relative_gap),
                num(gap.z_dm),
                num(gap.z_pm),
            ]],
        ),
    )?;
    out.write(
        "figure.svg",
        &line_chart(
            &format!("warm-up, n = {}", a.n),
            "z",
            "peak demand",
            &[
                Series { name: "L(z)".into(), points: &l },
                Series { name: "U(z)".into(), points: &u },
            ],
        ),
    )?;
    println!("dm {:.6} pm {:.6} gap {:.2}%", gap.dm_value, gap.pm_value, 100.0 * gap.relative_gap);
    Ok(out.finish(&[
        ("command", "warmup".into()),
        ("n", a.n.to_string()),
        ("seed", a.seed.to_string()),
        ("grid", a.grid.to_string()),
    ])?)
}

fn lln(a: &LlnArgs) -> AnyResult<PathBuf> {
    let sampler = SetSampler::UniformSegment { upper: a.upper };
    let mut rows = Vec::new();
    let mut mean = vec![0.0; a.ns.len()];
    for seed in a.seed..a.seed + a.seeds {
        for (k, r) in lln_experiment(&sampler, &a.ns, a.dirs, seed)?.into_iter().enumerate() {
            mean[k] += r.distance / a.seeds as f64;
            rows.push(vec![seed.to_string(), r.n.to_string(), num(r.distance)]);
        }
    }
    let avg: Vec<(f64, f64)> = a.ns.iter().zip(&mean).map(|(&n, &m)| ((n as f64).log10(), m)).collect();
    let mut out = OutputDir::create(&a.out)?;
    out.write("table.csv", &csv_table(&["seed", "n", "distance"], rows))?;
    out.write(
        "curves.csv",
        &csv_table(
            &["n", "mean_distance"],
            a.ns.iter().zip(&mean).map(|(n, m)| vec![n.to_string(), num(*m)]),
        ),
    )?;
    out.write(
        "figure.svg",
        &line_chart(
            "Hausdorff distance to the expected set",
            "log10 n",
            "distance",
            &[Series { name: "mean".into(), points: &avg }],
        ),
    )?;
    for (n, m) in a.ns.iter().zip(&mean) {
        println!("n={n} distance {m:.5}");
    }
    Ok(out.finish(&[
        ("command", "lln".into()),
        ("upper", a.upper.to_string()),
        ("dirs", a.dirs.to_string()),
        ("seeds", format!("{}..{}", a.seed, a.seed + a.seeds)),
    ])?)
}

fn optimize(a: &OptimizeArgs) -> AnyResult<PathBuf> {
    let (pop, q0) = a.population.load()?;
    let prob = PricingProblem::new(pop, a.population.rho, q0)?;
    let step = a.step.map_or(StepRule::OpenLoop, StepRule::Constant);
    let (trace, price) = if a.periodic {
        if a.step.is_some() {
            return Err("--step cannot be combined with --periodic".into());
        }
        let p = prob.periodic_price(a.iterations)?;
        let price = p.price.clone();
        (p.trace, price)
    } else {
        let t = prob.frank_wolfe(a.iterations, step)?;
        let price = t.final_z.clone();
        (t, price)
    };
    let eval = prob.evaluate(&trace.final_z)?;
    let rows = trace.iterates.iter().map(|e| {
        vec![
            e.k.to_string(),
            num(e.objective),
            num(e.best_objective),
            num(e.fw_gap),
            num(e.realized_cost),
        ]
    });
    let mut out = OutputDir::create(&a.out)?;
    out.write("trace.csv", &csv_table(&["k", "objective", "best_objective", "fw_gap", "realized_cost"], rows))?;
    out.write(
        "table.csv",
        &csv_table(
            &["period", "price"],
            price.iter().enumerate().map(|(j, p)| vec![j.to_string(), num(*p)]),
        ),
    )?;
    out.write(
        "curves.csv",
        &csv_table(
            &["period", "mean_consumption", "net_demand"],
            eval.mean_consumption
                .iter()
                .zip(&eval.gradient)
                .enumerate()
                .map(|(j, (q, g))| vec![j.to_string(), num(*q), num(*g)]),
        ),
    )?;
    let best: Vec<(f64, f64)> = trace.iterates.iter().map(|e| (e.k as f64, e.best_objective)).collect();
    let cost: Vec<(f64, f64)> = trace.iterates.iter().map(|e| (e.k as f64, e.realized_cost)).collect();
    out.write(
        "figure.svg",
        &line_chart(
            "Frank-Wolfe progress",
            "iteration",
            "per-consumer value",
            &[
                Series { name: "best dual".into(), points: &best },
                Series { name: "grid cost".into(), points: &cost },
            ],
        ),
    )?;
    println!("best objective {:.6}", trace.best_objective());
    let mut settings = vec![("command", "optimize".to_string())];
    settings.extend(a.population.settings());
    settings.push(("iterations", a.iterations.to_string()));
    settings.push(("step", a.step.map_or("2/(k+2)".into(), num)));
    settings.push(("periodic", a.periodic.to_string()));
    Ok(out.finish(&settings)?)
}

fn direct(a: &DirectArgs) -> AnyResult<PathBuf> {
    let (pop, q0) = a.population.load()?;
    let rho = a.population.rho;
    let dual = convex_dual_dm(&pop, rho, &q0, a.iterations)?;
    let mut rows = vec![vec!["convex_dual".into(), num(dual.value)]];
    let brute = brute_force_dm(&pop, rho, &q0, GridSpec { resolution: a.resolution });
    let mut out = OutputDir::create(&a.out)?;
    match &brute {
        Ok(b) => {
            rows.push(vec!["brute_force".into(), num(b.value)]);
            if let Some(profiles) = &b.profiles {
                let d = pop.horizon();
                let header: Vec<String> = std::iter::once("consumer".to_string())
                    .chain((0..d).map(|j| format!("q{j}")))
                    .collect();
                let header: Vec<&str> = header.iter().map(String::as_str).collect();
                out.write(
                    "curves.csv",
                    &csv_table(
                        &header,
                        profiles
                            .iter()
                            .enumerate()
                            .map(|(i, q)| std::iter::once(i.to_string()).chain(q.iter().map(|x| num(*x))).collect()),
                    ),
                )?;
            }
            println!("brute force {:.6}", b.value);
        }
        Err(e) => println!("brute force skipped: {e}"),
    }
    println!("convex dual {:.6}", dual.value);
    out.write("table.csv", &csv_table(&["method", "value"], rows))?;
    let mut settings = vec![("command", "direct".to_string())];
    settings.extend(a.population.settings());
    settings.push(("resolution", a.resolution.to_string()));
    settings.push(("iterations", a.iterations.to_string()));
    Ok(out.finish(&settings)?)
}

fn write_case(out: &mut OutputDir, r: &CaseStudyReport) -> AnyResult<()> {
    let rows = r.dynamic.iter().map(|d| {
        vec![
            num(d.s),
            num(d.flat_cost),
            num(d.dynamic_cost),
            num(d.savings),
            num(r.flat.net_demand_variance()),
            num(d.outcome.net_demand_variance()),
            num(d.outcome.revenue),
        ]
    });
    out.write(
        "table.csv",
        &csv_table(
            &["s", "flat_cost", "dynamic_cost", "savings", "flat_variance", "dynamic_variance", "revenue"],
            rows,
        ),
    )?;
    let mut header = vec!["hour".to_string(), "t_out".into(), "q0".into(), "flat_net".into()];
    for d in &r.dynamic {
        header.push(format!("price_s{}", num(d.s)));
        header.push(format!("net_s{}", num(d.s)));
    }
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let curves = (0..r.t_out.len()).map(|h| {
        let mut row = vec![h.to_string(), num(r.t_out[h]), num(r.q0[h]), num(r.flat.net_demand[h])];
        for d in &r.dynamic {
            row.push(num(d.outcome.price[h]));
            row.push(num(d.outcome.net_demand[h]));
        }
        row
    });
    out.write("curves.csv", &csv_table(&header, curves))?;
    let flat = points(&r.flat.net_demand);
    let nets: Vec<Vec<(f64, f64)>> = r.dynamic.iter().map(|d| points(&d.outcome.net_demand)).collect();
    let mut series = vec![Series { name: "flat".into(), points: &flat }];
    for (d, p) in r.dynamic.iter().zip(&nets) {
        series.push(Series {
            name: format!("s = {}", num(d.s)),
            points: p,
        });
    }
    out.write("figure.svg", &line_chart("Net demand per house", "hour", "kWh", &series))?;
    Ok(())
}

fn casestudy(a: &CaseArgs) -> AnyResult<PathBuf> {
    let (_, report) = a.run()?;
    let mut out = OutputDir::create(&a.out)?;
    write_case(&mut out, &report)?;
    for d in &report.dynamic {
        println!("s={:<4} savings {:>6.2}%", num(d.s), 100.0 * d.savings);
    }
    let mut settings = vec![("command", "casestudy".to_string())];
    settings.extend(a.settings());
    settings.push(("renewable_scale", num(report.renewable_scale)));
    Ok(out.finish(&settings)?)
}

fn evaluate(a: &EvaluateArgs) -> AnyResult<PathBuf> {
    let (cfg, report) = a.case.run()?;
    let days = evaluate_days(&cfg, &report, a.days, a.eval_seed)?;
    let mut out = OutputDir::create(&a.case.out)?;
    write_case(&mut out, &report)?;
    let mut header = vec!["day".to_string()];
    header.extend(report.dynamic.iter().map(|d| format!("savings_s{}", num(d.s))));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    out.write(
        "trace.csv",
        &csv_table(
            &header,
            days.iter()
                .map(|d| std::iter::once(d.label.clone()).chain(d.savings.iter().map(|x| num(*x))).collect()),
        ),
    )?;
    for (k, d) in report.dynamic.iter().enumerate() {
        let mean = days.iter().map(|e| e.savings[k]).sum::<f64>() / days.len().max(1) as f64;
        println!("s={:<4} mean savings over {} days {:>6.2}%", num(d.s), days.len(), 100.0 * mean);
    }
    let mut settings = vec![("command", "evaluate-days".to_string())];
    settings.extend(a.case.settings());
    settings.push(("renewable_scale", num(report.renewable_scale)));
    settings.push(("days", a.days.to_string()));
    settings.push(("eval_seed", a.eval_seed.to_string()));
    Ok(out.finish(&settings)?)
}

fn run(cli: &Cli) -> AnyResult<PathBuf> {
    match &cli.command {
        Command::Warmup(a) => warmup(a),
        Command::Lln(a) => lln(a),
        Command::Optimize(a) => optimize(a),
        Command::Direct(a) => direct(a),
        Command::Casestudy(a) => casestudy(a),
        Command::EvaluateDays(a) => evaluate(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    match run(&cli) {
        Ok(dir) => {
            eprintln!("wrote {} in {:.1}s", Path::new(&dir).display(), start.elapsed().as_secs_f64());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
