use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use subgraph_space::catalog::Catalog;
use subgraph_space::census::{census, CensusMethod, DEFAULT_SAMPLES};
use subgraph_space::classify::{
    balanced_subsample, cross_validate, density_matched_subsample, CvOptions, FeatureSpec,
    GraphSummary, TrainOptions,
};
use subgraph_space::efrw::{backbone_point, fit_lambda, nu_for_density, FitOptions, RateModel};
use subgraph_space::extremal::{
    assemble_constraints, check_point, density_grid, envelopes, finite_size_tolerance,
    solve_bounds, BoundEnvelope, SolveMode,
};
use subgraph_space::generators::{default_burn_in, sample_gnp, simulate_efrw};
use subgraph_space::{derive_seed, Error, Graph};

use crate::formats::{
    class_column, read_census, read_collection, write_census, write_edge_list, CensusRow,
    NamedGraph,
};
use crate::manifest::{Manifest, ManifestEntry, ModelSpec, FORMAT_VERSION, MANIFEST_FILE};

#[derive(Parser, Debug)]
#[command(name = "sgspace", version, about = "Induced subgraph frequency pipelines")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Per-graph k-node subgraph frequencies of a collection.
    Census(CensusArgs),
    /// Fit the triadic closure strength to a census table.
    Fit(FitArgs),
    /// Feasible-region envelopes from the extremal linear program.
    Bounds(BoundsArgs),
    /// Write a collection of random graphs and its manifest.
    Simulate(SimulateArgs),
    /// Cross-validated accuracy separating two collections.
    Classify(ClassifyArgs),
    /// List the k-node classes in catalog order.
    Catalog {
        #[arg(short, long, default_value_t = 3)]
        k: usize,
    },
}

#[derive(Args, Debug)]
pub struct CensusArgs {
    /// Directory of edge lists, JSON-lines file, or single edge list.
    pub input: PathBuf,
    #[arg(short, long, default_value_t = 3)]
    pub k: usize,
    /// Enumerate every k-subset.
    #[arg(long, conflicts_with = "samples")]
    pub exact: bool,
    /// Sample this many k-subsets per graph. Without either flag the census is
    /// exact when feasible and sampled with the default count otherwise.
    #[arg(long)]
    pub samples: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    /// Census CSV written by `census`.
    pub input: PathBuf,
    #[arg(short, long, default_value_t = 3)]
    pub k: usize,
    #[arg(long, default_value_t = 20.0)]
    pub lambda_max: f64,
    /// Sum squared residual norms.
    #[arg(long)]
    pub squared: bool,
    /// Interior densities in the backbone table.
    #[arg(long, default_value_t = 99)]
    pub grid: usize,
    /// Write the backbone table here instead of after the summary.
    #[arg(long)]
    pub backbone: Option<PathBuf>,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Arithmetic {
    Exact,
    Float,
    Auto,
}

impl From<Arithmetic> for SolveMode {
    fn from(a: Arithmetic) -> Self {
        match a {
            Arithmetic::Exact => SolveMode::Exact,
            Arithmetic::Float => SolveMode::Float,
            Arithmetic::Auto => SolveMode::Auto,
        }
    }
}

#[derive(Args, Debug)]
pub struct BoundsArgs {
    #[arg(short, long, default_value_t = 3)]
    pub k: usize,
    /// Number of evenly spaced densities from 0 to 1.
    #[arg(long, default_value_t = 101)]
    pub grid: usize,
    /// Class index, canonical code bits, or `all`.
    #[arg(long, default_value = "all")]
    pub objective: String,
    #[arg(long, value_enum, default_value_t = Arithmetic::Auto)]
    pub arithmetic: Arithmetic,
    /// Census CSV whose rows are checked against the constraints.
    #[arg(long)]
    pub check: Option<PathBuf>,
    /// Check tolerance; defaults to max(1e-6, 5/n) per graph.
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Model {
    Efrw,
    Gnp,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long, required_unless_present = "manifest")]
    pub n: Option<usize>,
    #[arg(long, value_enum, default_value_t = Model::Efrw)]
    pub model: Model,
    #[arg(long, default_value_t = 1.0)]
    pub nu: f64,
    #[arg(long, default_value_t = 0.0)]
    pub lambda: f64,
    /// Walk duration; defaults to 10 (1 + nu).
    #[arg(long)]
    pub burn_in: Option<f64>,
    /// Edge probability for `--model gnp`.
    #[arg(long, default_value_t = 0.5)]
    pub p: f64,
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Regenerate the collection recorded in this manifest.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub outdir: PathBuf,
}

#[derive(Args, Debug)]
pub struct ClassifyArgs {
    pub a: PathBuf,
    pub b: PathBuf,
    /// Feature spec such as "Quads + R_lambda"; repeatable, `table` runs every
    /// standard row.
    #[arg(long, default_value = "Triads")]
    pub features: Vec<String>,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Match the density histograms of both sides with this bin width instead
    /// of plain balanced subsampling.
    #[arg(long)]
    pub density_bins: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub regularization: f64,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

/// Runs a command; tables go to `stdout` unless an output path is given,
/// warnings to `stderr`.
pub fn run(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Census(a) => run_census(a, stdout, stderr),
        Command::Fit(a) => run_fit(a, stdout, stderr),
        Command::Bounds(a) => run_bounds(a, stdout),
        Command::Simulate(a) => run_simulate(a, stdout),
        Command::Classify(a) => run_classify(a, stdout),
        Command::Catalog { k } => run_catalog(k, stdout),
    }
}

fn with_output<F>(path: &Option<PathBuf>, stdout: &mut dyn Write, f: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> Result<()>,
{
    match path {
        Some(p) => {
            let file = fs::File::create(p).with_context(|| format!("creating {}", p.display()))?;
            let mut w = io::BufWriter::new(file);
            f(&mut w)?;
            w.flush()?;
            Ok(())
        }
        None => f(stdout),
    }
}

fn run_census(a: CensusArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let catalog = Catalog::shared(a.k)?;
    let method = match (a.exact, a.samples) {
        (true, _) => CensusMethod::Exact,
        (false, Some(samples)) => CensusMethod::Sampled { samples },
        (false, None) => CensusMethod::Auto {
            samples: DEFAULT_SAMPLES,
        },
    };
    let graphs = read_collection(&a.input)?;
    let rows: Vec<Option<CensusRow>> = graphs
        .par_iter()
        .enumerate()
        .map(|(i, g)| {
            if g.graph.n() < a.k {
                return Ok(None);
            }
            let frequencies = census(&g.graph, a.k, method, derive_seed(a.seed, i as u64))
                .with_context(|| format!("graph {}", g.id))?;
            Ok(Some(CensusRow {
                id: g.id.clone(),
                n: g.graph.n(),
                density: g.graph.edge_density()?,
                frequencies,
            }))
        })
        .collect::<Result<_>>()?;
    for (g, row) in graphs.iter().zip(&rows) {
        if row.is_none() {
            writeln!(
                stderr,
                "warning: skipping graph {}: n = {} is below k = {}",
                g.id,
                g.graph.n(),
                a.k
            )?;
        }
    }
    let rows: Vec<CensusRow> = rows.into_iter().flatten().collect();
    with_output(&a.output, stdout, |w| Ok(write_census(w, catalog, &rows)?))
}

fn run_fit(a: FitArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let catalog = Catalog::shared(a.k)?;
    let rows = read_census(&a.input, a.k)?;
    if rows.is_empty() {
        return Err(Error::InvalidInput(format!("{} has no census rows", a.input.display())).into());
    }
    let (inside, boundary): (Vec<&CensusRow>, Vec<&CensusRow>) =
        rows.iter().partition(|r| r.density > 0.0 && r.density < 1.0);
    if !boundary.is_empty() {
        writeln!(
            stderr,
            "warning: ignoring {} empty or complete graphs",
            boundary.len()
        )?;
    }
    let ys: Vec<_> = inside.iter().map(|r| r.frequencies.clone()).collect();
    let ps: Vec<f64> = inside.iter().map(|r| r.density).collect();
    let options = FitOptions {
        lambda_max: a.lambda_max,
        squared: a.squared,
        ..FitOptions::default()
    };
    let fit = fit_lambda(&ys, &ps, a.k, &options)?;

    let grid: Vec<f64> = (1..=a.grid).map(|i| i as f64 / (a.grid + 1) as f64).collect();
    let table = grid
        .par_iter()
        .map(|&p| {
            let nu = nu_for_density(a.k, p, fit.lambda)?;
            let model = backbone_point(a.k, p, fit.lambda)?;
            let gnp = backbone_point(a.k, p, 0.0)?;
            Ok((p, nu, model.values, gnp.values))
        })
        .collect::<Result<Vec<_>>>()?;

    let write_table = |w: &mut dyn Write| -> Result<()> {
        let mut csv = csv::Writer::from_writer(w);
        let mut header = vec!["p".to_string(), "nu".to_string()];
        header.extend((0..catalog.len()).map(|c| class_column(catalog, c)));
        header.extend((0..catalog.len()).map(|c| format!("gnp_{}", class_column(catalog, c))));
        csv.write_record(&header)?;
        for (p, nu, model, gnp) in &table {
            let mut record = vec![p.to_string(), nu.to_string()];
            record.extend(model.iter().chain(gnp).map(|x| x.to_string()));
            csv.write_record(&record)?;
        }
        csv.flush()?;
        Ok(())
    };
    with_output(&a.output, stdout, |w| {
        let mut csv = csv::Writer::from_writer(&mut *w);
        csv.write_record(["lambda_opt", "objective", "objective_at_zero", "graphs"])?;
        csv.write_record([
            fit.lambda.to_string(),
            fit.objective.to_string(),
            fit.objective_at_zero.to_string(),
            ys.len().to_string(),
        ])?;
        csv.flush()?;
        drop(csv);
        if a.backbone.is_none() {
            writeln!(w)?;
            write_table(w)?;
        }
        Ok(())
    })?;
    if let Some(path) = &a.backbone {
        with_output(&Some(path.clone()), stdout, write_table)?;
    }
    Ok(())
}

fn parse_objective(s: &str, catalog: &Catalog) -> Result<Option<usize>> {
    if s.eq_ignore_ascii_case("all") {
        return Ok(None);
    }
    let by_code = catalog
        .classes()
        .iter()
        .position(|c| c.code.to_string() == s || format!("s_{}", c.code) == s);
    let class = match by_code {
        Some(c) => c,
        None => s
            .parse::<usize>()
            .ok()
            .filter(|&c| c < catalog.len())
            .ok_or_else(|| Error::InvalidInput(format!("unknown objective class '{s}'")))?,
    };
    Ok(Some(class))
}

fn run_bounds(a: BoundsArgs, stdout: &mut dyn Write) -> Result<()> {
    let catalog = Catalog::shared(a.k)?;
    let objective = parse_objective(&a.objective, catalog)?;
    if a.grid < 2 {
        return Err(Error::InvalidParameter("the grid needs at least 2 points".into()).into());
    }
    let grid = density_grid(a.grid);
    let mode = SolveMode::from(a.arithmetic);
    let envs: Vec<BoundEnvelope> = match objective {
        None => envelopes(a.k, &grid, mode)?,
        Some(class) => {
            let points = grid
                .par_iter()
                .map(|p| solve_bounds(&assemble_constraints(a.k, p)?, class, mode))
                .collect::<subgraph_space::Result<Vec<_>>>()?;
            vec![BoundEnvelope {
                k: a.k,
                class,
                p_grid: (0..a.grid).map(|i| i as f64 / (a.grid - 1) as f64).collect(),
                lower: points.iter().map(|b| b.lower).collect(),
                upper: points.iter().map(|b| b.upper).collect(),
                lower_binding: points.iter().map(|b| b.lower_active.clone()).collect(),
                upper_binding: points.iter().map(|b| b.upper_active.clone()).collect(),
            }]
        }
    };
    let reports = match &a.check {
        Some(path) => Some(check_rows(&read_census(path, a.k)?, a.tolerance)?),
        None => None,
    };
    with_output(&a.output, stdout, |w| {
        let mut csv = csv::Writer::from_writer(&mut *w);
        csv.write_record(["p", "class", "code", "lower", "upper", "lower_binding", "upper_binding"])?;
        for i in 0..grid.len() {
            for env in &envs {
                csv.write_record([
                    env.p_grid[i].to_string(),
                    env.class.to_string(),
                    catalog.classes()[env.class].code.to_string(),
                    env.lower[i].to_string(),
                    env.upper[i].to_string(),
                    env.lower_binding[i].join(";"),
                    env.upper_binding[i].join(";"),
                ])?;
            }
        }
        csv.flush()?;
        drop(csv);
        if let Some(reports) = &reports {
            writeln!(w)?;
            let mut csv = csv::Writer::from_writer(&mut *w);
            csv.write_record(["id", "n", "density", "tolerance", "violations", "min_slack", "violated"])?;
            for r in reports {
                csv.write_record(r)?;
            }
            csv.flush()?;
        }
        Ok(())
    })
}

fn check_rows(rows: &[CensusRow], tolerance: Option<f64>) -> Result<Vec<[String; 7]>> {
    rows.par_iter()
        .map(|r| {
            let tol = tolerance.unwrap_or_else(|| finite_size_tolerance(r.n));
            let report = check_point(&r.frequencies, r.density, tol)
                .with_context(|| format!("graph {}", r.id))?;
            let violated: Vec<&str> = report.violations().map(|c| c.tag.as_str()).collect();
            let min_slack = report.checks.iter().map(|c| c.slack).fold(f64::INFINITY, f64::min);
            Ok([
                r.id.clone(),
                r.n.to_string(),
                r.density.to_string(),
                tol.to_string(),
                violated.len().to_string(),
                min_slack.to_string(),
                violated.join(";"),
            ])
        })
        .collect()
}

fn generate(n: usize, model: &ModelSpec, seed: u64) -> subgraph_space::Result<Graph> {
    match *model {
        ModelSpec::Efrw { nu, lambda, burn_in } => {
            simulate_efrw(n, &RateModel::new(3, nu, lambda)?, burn_in, seed)
        }
        ModelSpec::Gnp { p } => sample_gnp(n, p, seed),
    }
}

fn run_simulate(a: SimulateArgs, stdout: &mut dyn Write) -> Result<()> {
    let manifest = match &a.manifest {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let m: Manifest = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
            if m.format_version != FORMAT_VERSION {
                bail!(Error::InvalidInput(format!(
                    "manifest format version {} is not supported",
                    m.format_version
                )));
            }
            m
        }
        None => {
            let n = a.n.expect("clap requires n without a manifest");
            let model = match a.model {
                Model::Efrw => ModelSpec::Efrw {
                    nu: a.nu,
                    lambda: a.lambda,
                    burn_in: a.burn_in.unwrap_or_else(|| default_burn_in(a.nu)),
                },
                Model::Gnp => ModelSpec::Gnp { p: a.p },
            };
            let width = a.count.saturating_sub(1).to_string().len().max(4);
            Manifest {
                format_version: FORMAT_VERSION,
                n,
                model,
                count: a.count,
                seed: a.seed,
                graphs: (0..a.count)
                    .map(|i| ManifestEntry {
                        file: format!("graph_{i:0width$}.txt"),
                        seed: derive_seed(a.seed, i as u64),
                    })
                    .collect(),
            }
        }
    };
    fs::create_dir_all(&a.outdir).with_context(|| format!("creating {}", a.outdir.display()))?;
    manifest
        .graphs
        .par_iter()
        .map(|entry| -> Result<()> {
            let g = generate(manifest.n, &manifest.model, entry.seed)?;
            let path = a.outdir.join(&entry.file);
            let mut buf = Vec::new();
            write_edge_list(&mut buf, &g)?;
            fs::write(&path, buf).with_context(|| format!("writing {}", path.display()))?;
            Ok(())
        })
        .collect::<Result<()>>()?;
    let path = a.outdir.join(MANIFEST_FILE);
    fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")
        .with_context(|| format!("writing {}", path.display()))?;
    writeln!(stdout, "wrote {} graphs to {}", manifest.graphs.len(), a.outdir.display())?;
    Ok(())
}

fn collection_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn union(specs: &[FeatureSpec]) -> FeatureSpec {
    specs.iter().fold(FeatureSpec::default(), |u, s| FeatureSpec {
        edges: u.edges || s.edges,
        triads: u.triads || s.triads,
        quads: u.quads || s.quads,
        r_g: u.r_g || s.r_g,
        r_lambda: u.r_lambda || s.r_lambda,
        global: u.global || s.global,
    })
}

fn run_classify(a: ClassifyArgs, stdout: &mut dyn Write) -> Result<()> {
    let mut specs = Vec::new();
    for s in &a.features {
        if s.eq_ignore_ascii_case("table") {
            for row in FeatureSpec::TABLE_ROWS {
                specs.push((row.to_string(), row.parse::<FeatureSpec>()?));
            }
        } else {
            specs.push((s.clone(), s.parse::<FeatureSpec>()?));
        }
    }
    let ga = read_collection(&a.a)?;
    let gb = read_collection(&a.b)?;
    if ga.is_empty() || gb.is_empty() {
        return Err(Error::InvalidDataset("both collections must be non-empty".into()).into());
    }
    let (ia, ib) = match a.density_bins {
        Some(width) => {
            let d = |gs: &[NamedGraph]| -> Result<Vec<f64>> {
                gs.iter().map(|g| Ok(g.graph.edge_density()?)).collect()
            };
            density_matched_subsample(&d(&ga)?, &d(&gb)?, width, a.seed)?
        }
        None => balanced_subsample(ga.len(), gb.len(), a.seed),
    };
    if ia.is_empty() {
        return Err(Error::InvalidDataset("subsampling left no graphs".into()).into());
    }
    let graphs: Vec<&Graph> = ia
        .iter()
        .map(|&i| &ga[i].graph)
        .chain(ib.iter().map(|&i| &gb[i].graph))
        .collect();
    let labels: Vec<bool> = (0..graphs.len()).map(|i| i >= ia.len()).collect();
    let all = union(&specs.iter().map(|(_, s)| *s).collect::<Vec<_>>());
    let summaries: Vec<GraphSummary> = graphs
        .par_iter()
        .enumerate()
        .map(|(i, g)| GraphSummary::new(g, &all, derive_seed(a.seed, i as u64)))
        .collect::<subgraph_space::Result<_>>()?;
    let options = CvOptions {
        folds: a.folds,
        train: TrainOptions {
            regularization: a.regularization,
            ..TrainOptions::default()
        },
        ..CvOptions::default()
    };
    let task = format!("{} vs {}", collection_name(&a.a), collection_name(&a.b));
    let mut results = Vec::new();
    for (name, spec) in &specs {
        let report = cross_validate(&summaries, &labels, spec, &options, a.seed)?;
        let lambda = if report.lambdas.is_empty() {
            String::new()
        } else {
            (report.lambdas.iter().sum::<f64>() / report.lambdas.len() as f64).to_string()
        };
        results.push([
            task.clone(),
            name.clone(),
            ia.len().to_string(),
            a.folds.to_string(),
            report.mean.to_string(),
            report.std_error.to_string(),
            lambda,
        ]);
    }
    with_output(&a.output, stdout, |w| {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(["task", "features", "per_class", "folds", "mean", "std_error", "lambda"])?;
        for r in &results {
            csv.write_record(r)?;
        }
        csv.flush()?;
        Ok(())
    })
}

fn run_catalog(k: usize, stdout: &mut dyn Write) -> Result<()> {
    let catalog = Catalog::shared(k)?;
    let mut csv = csv::Writer::from_writer(stdout);
    csv.write_record(["index", "code", "edges", "aut", "labelings"])?;
    for c in catalog.classes() {
        csv.write_record([
            c.index.to_string(),
            c.code.to_string(),
            c.edge_count.to_string(),
            c.aut.to_string(),
            c.labelings().to_string(),
        ])?;
    }
    csv.flush()?;
    Ok(())
}
