//! Command-line front-end. Every subcommand writes a `# config:` line with
//! the parsed arguments, followed by CSV rows or a JSON document.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::coherent::{default_separations, g2_curve, number_distribution_grid, PoissonMean};
use crate::eigenstates::{bound_state, eigenstate_e, eigenstate_g, schrodinger_residual, emitter_residual};
use crate::error::{Error, Result};
use crate::fock::sweep;
use crate::model::{GaussianPacket, SystemParams};
use crate::oracle::{is_monotone_decreasing, refinement_study, scatter_and_compare, single_excitation_phases, LatticeConfig};
use crate::quadrature::QuadratureSpec;

/// Environment variable capping the worker threads.
pub const THREADS_ENV: &str = "WQED_THREADS";

/// Exit code when `--strict` is set and a point was flagged.
pub const EXIT_FLAGGED: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "wqed", version, about = "Few-photon scattering off a two-level emitter in a waveguide")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(tag = "subcommand", rename_all = "lowercase")]
pub enum Command {
    /// Evaluate an n-photon scattering eigenstate at one configuration.
    Eigenstate(EigenstateArgs),
    /// Sector probabilities of an n-photon Fock packet over a V-grid.
    Fock(FockArgs),
    /// Second-order correlation of the transmitted field.
    G2(G2Args),
    /// Transmitted photon-number distribution of a coherent packet.
    Stats(StatsArgs),
    /// Lattice time-propagation cross-check of the scattering kernels.
    Oracle(OracleArgs),
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct Physics {
    /// Emitter transition energy.
    #[arg(long, default_value_t = 10.0)]
    pub epsilon: f64,
    /// Decay rate into non-guided modes.
    #[arg(long, default_value_t = 0.0)]
    pub gamma_prime: f64,
    /// Spectral width of the packet.
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    /// Packet carrier momentum; defaults to epsilon.
    #[arg(long)]
    pub k0: Option<f64>,
}

impl Physics {
    fn packet(&self, nbar: f64) -> Result<GaussianPacket> {
        GaussianPacket::new(self.k0.unwrap_or(self.epsilon), self.delta, nbar)
    }

    fn params(&self, v: f64) -> Result<SystemParams> {
        SystemParams::new(self.epsilon, v, self.gamma_prime)
    }
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct Quadrature {
    #[arg(long, default_value_t = 1e-5)]
    pub rel_tol: f64,
    #[arg(long, default_value_t = 1e-9)]
    pub abs_tol: f64,
    /// Integration half-width in units of delta.
    #[arg(long, default_value_t = 10.0)]
    pub window: f64,
}

impl Quadrature {
    fn spec(&self) -> Result<QuadratureSpec> {
        let q = QuadratureSpec {
            window_halfwidth: self.window,
            ..QuadratureSpec::default().with_tolerances(self.rel_tol, self.abs_tol)
        };
        q.validate()?;
        Ok(q)
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct Output {
    /// Output file; standard output when absent.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Exit non-zero if any point is flagged unreliable.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct EigenstateArgs {
    /// Comma-separated momenta.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub k: Vec<f64>,
    /// Comma-separated photon positions, one per momentum.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub x: Vec<f64>,
    #[arg(long)]
    pub v: f64,
    /// Finite-difference step of the residuals.
    #[arg(long, default_value_t = 1e-3)]
    pub step: f64,
    #[command(flatten)]
    pub physics: Physics,
    #[command(flatten)]
    pub out: Output,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct FockArgs {
    #[arg(long)]
    pub n: usize,
    /// Coupling grid `start:stop:steps`, a comma list, or one value.
    #[arg(long, allow_hyphen_values = true)]
    pub v: String,
    #[command(flatten)]
    pub physics: Physics,
    #[command(flatten)]
    pub quad: Quadrature,
    #[command(flatten)]
    pub out: Output,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct G2Args {
    #[arg(long)]
    pub v: f64,
    /// Mean photon number of the coherent packet.
    #[arg(long, default_value_t = 1.0)]
    pub nbar: f64,
    /// Grid of `Gamma x`; defaults to 0 and 59 log-spaced points up to 15.
    #[arg(long)]
    pub gamma_x: Option<String>,
    #[command(flatten)]
    pub physics: Physics,
    #[command(flatten)]
    pub quad: Quadrature,
    #[command(flatten)]
    pub out: Output,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MeanArg {
    Transmitted,
    Incident,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct StatsArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub v: String,
    #[arg(long, default_value = "1")]
    pub nbar: String,
    /// Mean of the Poisson reference distribution.
    #[arg(long, value_enum, default_value_t = MeanArg::Transmitted)]
    pub poisson_mean: MeanArg,
    #[command(flatten)]
    pub physics: Physics,
    #[command(flatten)]
    pub quad: Quadrature,
    #[command(flatten)]
    pub out: Output,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct OracleArgs {
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    #[arg(long)]
    pub v: f64,
    #[arg(long, default_value_t = 96)]
    pub m_modes: usize,
    /// Momentum half-window; defaults to 12 delta.
    #[arg(long)]
    pub k_halfwidth: Option<f64>,
    #[arg(long)]
    pub evolve_time: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub start_position: Option<f64>,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    /// Drop the non-guided loss from the lattice.
    #[arg(long)]
    pub no_loss: bool,
    /// Also run single-photon refinement at fixed spacing over these mode counts.
    #[arg(long, value_delimiter = ',')]
    pub refine: Vec<usize>,
    /// Number of one-excitation eigenvalues in the phase check.
    #[arg(long, default_value_t = 10)]
    pub phases: usize,
    #[command(flatten)]
    pub physics: Physics,
    #[command(flatten)]
    pub out: Output,
}

/// Parse `start:stop:steps` (steps intervals, steps + 1 points), a comma
/// list, or a single number. The grid must be strictly increasing.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let s = s.trim();
    if s.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let bad = |why: &str| Error::InvalidGrid(s.to_string(), why.to_string());
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad(&format!("'{t}' is not a number")));
    let grid: Vec<f64> = if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(bad("expected start:stop:steps"));
        }
        let (a, b) = (num(parts[0])?, num(parts[1])?);
        let steps: usize = parts[2].trim().parse().map_err(|_| bad("steps must be a positive integer"))?;
        if steps == 0 {
            return Err(bad("steps must be a positive integer"));
        }
        (0..=steps).map(|i| a + (b - a) * i as f64 / steps as f64).collect()
    } else {
        s.split(',').map(num).collect::<Result<_>>()?
    };
    if grid.iter().any(|x| !x.is_finite()) {
        return Err(bad("values must be finite"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(bad("grid must be strictly increasing"));
    }
    Ok(grid)
}

/// Nine significant digits, plain notation where it stays short.
pub fn fmt9(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let e = x.abs().log10().floor() as i32;
    if (-5..9).contains(&e) {
        let s = format!("{:.*}", (8 - e).max(0) as usize, x);
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        format!("{x:.8e}")
    }
}

struct Report {
    body: String,
    flagged: Vec<String>,
}

fn header(cmd: &Command) -> Result<String> {
    Ok(format!("# config: {}\n", serde_json::to_string(cmd)?))
}

fn render_json(cmd: &Command, data: serde_json::Value) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&json!({ "config": cmd, "data": data }))?;
    s.push('\n');
    Ok(s)
}

fn run_eigenstate(a: &EigenstateArgs, cmd: &Command) -> Result<Report> {
    let p = a.physics.params(a.v)?;
    let n = a.k.len();
    if a.x.len() != n {
        return Err(Error::Arity { expected: n, got: a.x.len() });
    }
    let mut flagged = Vec::new();
    let mut rows: Vec<(&str, f64, f64)> = Vec::new();
    let g = eigenstate_g(&a.k, &a.x, &p)?;
    rows.push(("g", g.re, g.im));
    if n >= 2 {
        let e = eigenstate_e(&a.k, &a.x[1..], &p)?;
        rows.push(("e", e.re, e.im));
        let b = bound_state(&a.k, &a.x, &p)?;
        rows.push(("bound", b.re, b.im));
    }
    match schrodinger_residual(&a.k, &a.x, &p, a.step) {
        Ok(r) => rows.push(("photon_residual", r, 0.0)),
        Err(e) => flagged.push(format!("photon residual: {e}")),
    }
    if n >= 2 {
        match emitter_residual(&a.k, &a.x[1..], &p, a.step) {
            Ok(r) => rows.push(("emitter_residual", r, 0.0)),
            Err(e) => flagged.push(format!("emitter residual: {e}")),
        }
    }
    let body = match a.out.format {
        Format::Csv => {
            let mut s = header(cmd)?;
            s.push_str("quantity,re,im\n");
            for (q, re, im) in &rows {
                writeln!(s, "{q},{},{}", fmt9(*re), fmt9(*im)).unwrap();
            }
            s
        }
        Format::Json => render_json(
            cmd,
            json!(rows.iter().map(|(q, re, im)| json!({"quantity": q, "re": re, "im": im})).collect::<Vec<_>>()),
        )?,
    };
    Ok(Report { body, flagged })
}

fn run_fock(a: &FockArgs, cmd: &Command) -> Result<Report> {
    let grid = parse_grid(&a.v)?;
    let pkt = a.physics.packet(1.0)?;
    let p = a.physics.params(0.0)?;
    let rows = sweep(a.n, &grid, &pkt, &p, &a.quad.spec()?)?;
    let mut flagged = Vec::new();
    for r in &rows {
        match &r.result {
            Ok(s) if s.flagged => flagged.push(format!("V={}: {}", fmt9(r.v), s.warnings.join("; "))),
            Ok(_) => {}
            Err(e) => flagged.push(format!("V={}: {e}", fmt9(r.v))),
        }
    }
    let body = match a.out.format {
        Format::Csv => {
            let mut s = header(cmd)?;
            s.push_str("V,sector,total,pw,bs,err\n");
            for r in &rows {
                if let Ok(sp) = &r.result {
                    for e in &sp.sectors {
                        writeln!(s, "{},{},{},{},{},{}", fmt9(r.v), e.sector, fmt9(e.total), fmt9(e.pw), fmt9(e.bs), fmt9(e.error)).unwrap();
                    }
                }
            }
            s
        }
        Format::Json => render_json(cmd, serde_json::to_value(&rows)?)?,
    };
    Ok(Report { body, flagged })
}

fn run_g2(a: &G2Args, cmd: &Command) -> Result<Report> {
    let pkt = a.physics.packet(a.nbar)?;
    let p = a.physics.params(a.v)?;
    let xs = match &a.gamma_x {
        Some(g) => {
            let gamma = p.gamma();
            if gamma == 0.0 {
                return Err(Error::InvalidParameter("Gamma = 0: separations cannot be scaled by Gamma".into()));
            }
            parse_grid(g)?.into_iter().map(|gx| gx / gamma).collect()
        }
        None => default_separations(&p),
    };
    let curve = g2_curve(&pkt, &p, &xs, &a.quad.spec()?)?;
    let mut flagged = Vec::new();
    if curve.unreliable {
        flagged.push("transmitted two-photon amplitude vanishes; g2 undefined".to_string());
    }
    let gamma = p.gamma();
    let body = match a.out.format {
        Format::Csv => {
            let mut s = header(cmd)?;
            s.push_str("gamma_x,g2\n");
            for (x, g) in curve.xs.iter().zip(&curve.values) {
                writeln!(s, "{},{}", fmt9(gamma * x), fmt9(*g)).unwrap();
            }
            s
        }
        Format::Json => render_json(cmd, serde_json::to_value(&curve)?)?,
    };
    Ok(Report { body, flagged })
}

fn run_stats(a: &StatsArgs, cmd: &Command) -> Result<Report> {
    let vs = parse_grid(&a.v)?;
    let nbars = match parse_grid(&a.nbar) {
        Err(Error::EmptyGrid) => return Err(Error::InvalidGrid(String::new(), "empty nbar-grid".into())),
        r => r?,
    };
    let pkt = a.physics.packet(1.0)?;
    let p = a.physics.params(0.0)?;
    let reference = match a.poisson_mean {
        MeanArg::Transmitted => PoissonMean::Transmitted,
        MeanArg::Incident => PoissonMean::Incident,
    };
    let grid = number_distribution_grid(&vs, &nbars, &pkt, &p, &a.quad.spec()?, reference)?;
    let mut flagged = Vec::new();
    for (v, ds) in &grid {
        for d in ds {
            for w in &d.warnings {
                flagged.push(format!("V={}, nbar={}: {w}", fmt9(*v), fmt9(d.nbar)));
            }
        }
    }
    let body = match a.out.format {
        Format::Csv => {
            let mut s = header(cmd)?;
            s.push_str("V,nbar,n,P,P_poisson,ratio\n");
            for (v, ds) in &grid {
                for d in ds {
                    for m in 0..4 {
                        writeln!(s, "{},{},{m},{},{},{}", fmt9(*v), fmt9(d.nbar), fmt9(d.p[m]), fmt9(d.poisson[m]), fmt9(d.ratios[m])).unwrap();
                    }
                }
            }
            s
        }
        Format::Json => render_json(
            cmd,
            serde_json::to_value(grid.iter().map(|(v, ds)| json!({"V": v, "distributions": ds})).collect::<Vec<_>>())?,
        )?,
    };
    Ok(Report { body, flagged })
}

fn run_oracle(a: &OracleArgs, cmd: &Command) -> Result<Report> {
    let pkt = a.physics.packet(1.0)?;
    let p = a.physics.params(a.v)?;
    let mut cfg = LatticeConfig::for_packet(&pkt);
    cfg.m_modes = a.m_modes;
    if let Some(w) = a.k_halfwidth {
        cfg.k_halfwidth = w;
    }
    cfg.evolve_time = a.evolve_time;
    cfg.start_position = a.start_position;
    cfg.propagator_tol = a.tol;
    cfg.loss_included = !a.no_loss;
    let report = scatter_and_compare(a.n, &pkt, &p, &cfg)?;
    let mut flagged: Vec<String> = report
        .checks
        .iter()
        .filter(|c| !c.pass)
        .map(|c| format!("{}: {} exceeds {}", c.name, fmt9(c.value), fmt9(c.threshold)))
        .collect();
    let phases = if a.phases > 0 && (p.gamma_prime == 0.0 || a.no_loss) {
        Some(single_excitation_phases(&cfg, &pkt, &p, a.phases)?)
    } else {
        None
    };
    let refinement = if a.refine.is_empty() {
        None
    } else {
        let rs = refinement_study(&pkt, &p, &cfg, &a.refine)?;
        if !is_monotone_decreasing(&rs) {
            flagged.push("refinement deviations are not monotone".into());
        }
        Some(rs.iter().map(|r| json!({"m_modes": r.config.m_modes, "k_halfwidth": r.config.k_halfwidth, "rms_deviation": r.rms_deviation})).collect::<Vec<_>>())
    };
    let body = match a.out.format {
        Format::Csv => {
            let mut s = header(cmd)?;
            s.push_str("check,value,threshold,pass\n");
            for c in &report.checks {
                writeln!(s, "{},{},{},{}", c.name, fmt9(c.value), fmt9(c.threshold), c.pass).unwrap();
            }
            if let Some(ph) = &phases {
                let worst = ph.iter().map(|c| c.deviation).fold(0.0, f64::max);
                writeln!(s, "single-excitation phase,{},0.001,{}", fmt9(worst), worst <= 1e-3).unwrap();
            }
            s
        }
        Format::Json => render_json(cmd, json!({"report": report, "phases": phases, "refinement": refinement}))?,
    };
    Ok(Report { body, flagged })
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::InvalidParameter(format!("{THREADS_ENV}='{v}' is not a positive integer")))?;
        // A pool may already exist when called repeatedly in one process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn execute(cli: &Cli) -> Result<(Report, Output)> {
    configure_threads()?;
    let cmd = &cli.command;
    Ok(match cmd {
        Command::Eigenstate(a) => (run_eigenstate(a, cmd)?, a.out.clone()),
        Command::Fock(a) => (run_fock(a, cmd)?, a.out.clone()),
        Command::G2(a) => (run_g2(a, cmd)?, a.out.clone()),
        Command::Stats(a) => (run_stats(a, cmd)?, a.out.clone()),
        Command::Oracle(a) => (run_oracle(a, cmd)?, a.out.clone()),
    })
}

fn write_output(out: &Output, body: &str) -> Result<()> {
    match &out.output {
        Some(path) => std::fs::write(path, body).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(body.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|source| Error::Io { path: "<stdout>".into(), source })
        }
    }
}

/// Run the CLI on `args` (program name first) and return the exit code:
/// 0 on success, 1 on a failed computation or I/O, 2 on bad usage and
/// [`EXIT_FLAGGED`] when `--strict` meets a flagged point.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let (report, out) = match execute(&cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    for f in &report.flagged {
        eprintln!("warning: {f}");
    }
    if let Err(e) = write_output(&out, &report.body) {
        eprintln!("error: {e}");
        return 1;
    }
    if out.strict && !report.flagged.is_empty() {
        eprintln!("error: {} flagged point(s) under --strict", report.flagged.len());
        return EXIT_FLAGGED;
    }
    0
}
