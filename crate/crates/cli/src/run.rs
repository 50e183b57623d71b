use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use scenrep_core::baselines::{DensityModel, Method, Parameterization};
use scenrep_core::experiments::{
    calibrate_beta, compare_methods, default_weights, iterate_d_beta, select_d, write_points_csv, CurvePoint,
    ExperimentConfig, FixedTable, Generator,
};
use scenrep_core::io::{read_dataset_csv, read_scenarios_jsonl, write_dataset_csv, write_json, write_scenarios_jsonl};
use scenrep_core::ot::sr_metric;
use scenrep_core::rng::substream;
use scenrep_core::svd::fit_basis;
use scenrep_core::synth::{layout_for, synth_scenarios};
use scenrep_core::{Category, Dataset, Error, Layout, ReducedBasis, Result, Scenario};

use crate::args::{Cli, Command, Common, Format};

/// What `fit` writes and `generate` reads.
#[derive(Debug, Serialize, Deserialize)]
struct FittedModel {
    method: Method,
    basis: ReducedBasis,
    density: DensityModel,
}

/// Dataset rows as JSON.
#[derive(Serialize)]
struct DatasetJson<'a> {
    columns: Vec<String>,
    ids: &'a [String],
    rows: Vec<&'a [f64]>,
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::InvalidArgument(format!("cannot open `{}`: {e}", path.display())))
}

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

/// Scenarios of a JSONL file together with the layout they are assembled on.
fn read_scenarios(path: &Path, n_t: usize) -> Result<(Vec<Scenario>, Arc<Layout>)> {
    let scenarios = read_scenarios_jsonl(open(path)?)?;
    let first = scenarios
        .first()
        .ok_or_else(|| Error::Parse(format!("`{}` contains no scenarios", path.display())))?;
    if let Some(s) = scenarios.iter().find(|s| s.category != first.category) {
        return Err(Error::InvalidArgument(format!(
            "scenario `{}` is {} but `{}` is {}",
            s.id, s.category, first.id, first.category
        )));
    }
    let layout = match first.category {
        Category::Custom => Layout::from_scenario(first, n_t),
        c => layout_for(c, n_t)?,
    };
    Ok((scenarios, Arc::new(layout)))
}

/// A parameter-matrix CSV, or scenarios assembled from JSONL.
fn read_dataset(path: &Path, common: &Common) -> Result<Dataset> {
    if is_csv(path) {
        return read_dataset_csv(open(path)?);
    }
    let (scenarios, layout) = read_scenarios(path, common.n_t)?;
    Dataset::from_scenarios(&scenarios, &layout, common.interpolation)
}

fn write_dataset_json<W: Write>(writer: W, data: &Dataset) -> Result<()> {
    let doc = DatasetJson { columns: data.layout().column_names(), ids: data.ids(), rows: data.rows().collect() };
    write_json(writer, &doc)
}

fn write_curve_csv(path: &Path, points: &[CurvePoint]) -> Result<()> {
    write_points_csv(BufWriter::new(File::create(path)?), points)
}

/// Columns of `records` under `header`, one row per record.
fn write_table<W: Write>(writer: W, header: &[&str], records: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(header).map_err(csv_err)?;
    for r in records {
        w.write_record(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn output(common: &Common, default: Format, body: impl FnOnce(Format, &mut dyn Write) -> Result<()>) -> Result<()> {
    let format = common.format.unwrap_or(default);
    match &common.out {
        Some(path) => {
            let mut file = BufWriter::new(File::create(path)?);
            body(format, &mut file)?;
            file.flush()?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            body(format, &mut lock)?;
            lock.flush()?;
        }
    }
    Ok(())
}

pub fn run(cli: &Cli) -> Result<()> {
    let common = &cli.common;
    match &cli.command {
        Command::Synth { category, n } => {
            let scenarios = synth_scenarios(*category, *n, common.seed)?;
            output(common, Format::Json, |format, w| match format {
                Format::Json => write_scenarios_jsonl(w, &scenarios),
                Format::Csv => {
                    let layout = Arc::new(layout_for(*category, common.n_t)?);
                    write_dataset_csv(w, &Dataset::from_scenarios(&scenarios, &layout, common.interpolation)?)
                }
            })
        }
        Command::Fit { input, d, method } => {
            let Method::Model { param: Parameterization::Svd, density, dependent } = *method else {
                return Err(Error::InvalidArgument(format!("`fit` supports svd+* methods, got `{method}`")));
            };
            let data = read_dataset(input, common)?;
            let alpha = default_weights(&data, common.zero_variance.into())?;
            let (basis, coords) = fit_basis(&data, &alpha, *d)?;
            let model = FittedModel { method: *method, density: DensityModel::fit(&coords, density, dependent)?, basis };
            output(common, Format::Json, |format, w| match format {
                Format::Json => write_json(w, &model),
                Format::Csv => {
                    let components = model.basis.unweighted_components();
                    let mut header = vec!["column".to_string(), "mean".to_string()];
                    header.extend((1..components.len()).map(|j| format!("u{j}")));
                    let rows: Vec<Vec<String>> = model
                        .basis
                        .layout
                        .column_names()
                        .into_iter()
                        .enumerate()
                        .map(|(k, name)| {
                            std::iter::once(name).chain(components.iter().map(|c| c[k].to_string())).collect()
                        })
                        .collect();
                    let header: Vec<&str> = header.iter().map(String::as_str).collect();
                    write_table(w, &header, &rows)
                }
            })
        }
        Command::Generate { model, n_w } => {
            let model: FittedModel = serde_json::from_reader(open(model)?)
                .map_err(|e| Error::Parse(format!("model file: {e}")))?;
            let generator = Generator::Svd { basis: model.basis, density: model.density };
            let data = generator.sample(*n_w, &mut substream(common.seed, "generate", 0))?;
            output(common, Format::Csv, |format, w| match format {
                Format::Csv => write_dataset_csv(w, &data),
                Format::Json => write_dataset_json(w, &data),
            })
        }
        Command::Evaluate { generated, test, train } => {
            let w = read_dataset(generated, common)?;
            let z = read_dataset(test, common)?;
            let x = read_dataset(train, common)?;
            let alpha = default_weights(&x, common.zero_variance.into())?;
            let report = sr_metric(&w, &z, &x, &alpha, common.p, common.beta)?;
            output(common, Format::Json, |format, out| match format {
                Format::Json => write_json(out, &report),
                Format::Csv => write_table(
                    out,
                    &["w_test", "w_train", "sr", "beta", "p"],
                    &[[report.w_test, report.w_train, report.sr, report.beta, report.p]
                        .iter()
                        .map(f64::to_string)
                        .collect()],
                ),
            })
        }
        Command::SelectD { exp } => {
            let data = read_dataset(&exp.input, common)?;
            let config = exp.apply(common.config());
            let curve = select_d(&data, &config)?;
            if let Some(path) = &exp.curve_csv {
                write_curve_csv(path, &curve.points)?;
            }
            output(common, Format::Json, |format, w| match format {
                Format::Json => write_json(w, &curve),
                Format::Csv => curve.write_csv(w),
            })
        }
        Command::CalibrateBeta { exp, d, cal } => {
            let data = read_dataset(&exp.input, common)?;
            let config = cal.apply(exp.apply(common.config()));
            let result = calibrate_beta(&data, *d, &config)?;
            if let Some(path) = &exp.curve_csv {
                write_curve_csv(path, &result.curve.points)?;
            }
            output(common, Format::Json, |format, w| match format {
                Format::Json => write_json(w, &result),
                Format::Csv => {
                    let rows: Vec<Vec<String>> = result
                        .betas
                        .iter()
                        .zip(&result.correlations)
                        .map(|(b, c)| vec![b.to_string(), c.to_string()])
                        .collect();
                    write_table(w, &["beta", "correlation"], &rows)
                }
            })
        }
        Command::Auto { exp, cal, max_iterations } => {
            let data = read_dataset(&exp.input, common)?;
            let config = ExperimentConfig {
                max_iterations: *max_iterations,
                ..cal.apply(exp.apply(common.config()))
            };
            let result = iterate_d_beta(&data, common.beta, &config)?;
            if let Some(path) = &exp.curve_csv {
                write_curve_csv(path, &result.selection.points)?;
            }
            output(common, Format::Json, |format, w| match format {
                Format::Json => write_json(w, &result),
                Format::Csv => {
                    let rows: Vec<Vec<String>> = result
                        .trace
                        .iter()
                        .enumerate()
                        .map(|(i, (d, b))| vec![i.to_string(), d.to_string(), b.to_string()])
                        .collect();
                    write_table(w, &["step", "d", "beta"], &rows)
                }
            })
        }
        Command::Compare { input, d, n_w, bootstrap, methods } => {
            let methods = methods.clone().unwrap_or_else(Method::all);
            let (data, fixed) = if is_csv(input) {
                (read_dataset_csv(open(input)?)?, None)
            } else {
                let (scenarios, layout) = read_scenarios(input, common.n_t)?;
                let data = Dataset::from_scenarios(&scenarios, &layout, common.interpolation)?;
                let fixed = if methods.iter().any(Method::is_fixed) {
                    Some(FixedTable::from_scenarios(scenarios[0].category, &scenarios)?)
                } else {
                    None
                };
                (data, fixed)
            };
            let config = ExperimentConfig {
                d: *d,
                n_w: *n_w,
                bootstrap_resamples: *bootstrap,
                ..common.config()
            };
            let report = compare_methods(&data, fixed.as_ref(), &methods, &config)?;
            output(common, Format::Json, |format, w| match format {
                Format::Json => write_json(w, &report),
                Format::Csv => {
                    let ranked: Vec<CurvePoint> = report
                        .ranking
                        .iter()
                        .filter_map(|name| report.points.iter().find(|p| &p.label == name).cloned())
                        .collect();
                    write_points_csv(w, &ranked)
                }
            })
        }
    }
}
