use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use mfsa::benchmark::{run_suite, write_outputs, EstimatorConfig, Suite};
use mfsa::calibration::{
    calibrate, corrected_estimate, CalibrationConfig, CalibrationModel, OrderChoice, Regression,
};
use mfsa::distributions::{FsaDistribution, MedianSamplingDistribution};
use mfsa::estimators::{estimate, Method, Pooling};
use mfsa::io::{read_cloud_csv, read_matrix, write_cloud_csv};
use mfsa::synthdata::{generate, Family, ManifoldSpec};
use mfsa::timeseries::{
    bandpass, csd, dimension_profile, space_time_separation, standardize, stride_subsets, EmbeddingConfig, Layout,
    MultiChannelSeries, ProfileConfig, StSepTable,
};
use mfsa::Boundary;
use rayon::prelude::*;
use serde_json::json;

use crate::args::*;
use crate::error::{CliError, CliResult};
use crate::manifest::{beside, sha256_file, InputDigest};

/// What a finished command hands back for its manifest.
pub struct Report {
    pub manifest_path: Option<PathBuf>,
    pub seeds: Vec<u64>,
    pub inputs: Vec<InputDigest>,
    pub resolved: serde_json::Value,
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn parse<T: std::str::FromStr<Err = mfsa::Error>>(s: &str) -> CliResult<T> {
    s.parse().map_err(|e: mfsa::Error| usage(e.to_string()))
}

fn parse_num<T: std::str::FromStr>(s: &str, what: &str) -> CliResult<T> {
    s.trim().parse().map_err(|_| usage(format!("{what}: `{s}` is not a valid number")))
}

/// Inclusive integer range `lo:hi`.
pub fn parse_range(s: &str, what: &str) -> CliResult<Vec<usize>> {
    let (lo, hi) = s.split_once(':').ok_or_else(|| usage(format!("{what} must look like lo:hi, got `{s}`")))?;
    let (lo, hi): (usize, usize) = (parse_num(lo, what)?, parse_num(hi, what)?);
    if lo > hi {
        return Err(usage(format!("{what}: empty range {s}")));
    }
    Ok((lo..=hi).collect())
}

/// `lo:hi:steps` with both endpoints included.
pub fn parse_grid(s: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, steps] = parts[..] else { return Err(usage(format!("grid must look like lo:hi:steps, got `{s}`"))) };
    let (lo, hi, steps): (f64, f64, usize) = (parse_num(lo, "grid")?, parse_num(hi, "grid")?, parse_num(steps, "grid")?);
    if !(lo.is_finite() && hi.is_finite() && lo < hi) || steps < 2 {
        return Err(usage(format!("grid needs lo < hi and at least 2 steps, got `{s}`")));
    }
    Ok((0..steps).map(|i| if i + 1 == steps { hi } else { lo + i as f64 * (hi - lo) / (steps - 1) as f64 }).collect())
}

fn parse_band(s: &str) -> CliResult<(f64, f64)> {
    let (lo, hi) = s.split_once(':').ok_or_else(|| usage(format!("band must look like lo:hi, got `{s}`")))?;
    Ok((parse_num(lo, "band")?, parse_num(hi, "band")?))
}

fn parse_auto(s: &str, what: &str) -> CliResult<Option<usize>> {
    if s == "auto" {
        return Ok(None);
    }
    match s.parse::<usize>() {
        Ok(v) if v >= 1 => Ok(Some(v)),
        _ => Err(usage(format!("{what} must be `auto` or a positive integer, got `{s}`"))),
    }
}

fn parse_pooling(s: &str) -> CliResult<Pooling> {
    parse(s)
}

fn load_model(path: &Path) -> CliResult<CalibrationModel> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    CalibrationModel::from_json(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn digest(path: &Path) -> CliResult<InputDigest> {
    sha256_file(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn stdout_text(text: &str) -> CliResult<()> {
    std::io::stdout().lock().write_all(text.as_bytes())?;
    Ok(())
}

pub fn generate_cmd(a: &GenerateArgs) -> CliResult<Report> {
    let family: Family = parse(&a.family)?;
    let mut spec = ManifoldSpec::new(family, a.d, a.n, a.seed);
    spec.boundary = parse(&a.boundary)?;
    spec.params = a.params.clone();
    if let Some(amb) = a.ambient {
        spec.ambient_dim = amb;
    }
    let cloud = generate(&spec).map_err(|e| usage(e.to_string()))?;
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    write_cloud_csv(&a.out, &cloud)?;
    Ok(Report {
        manifest_path: Some(beside(&a.out)),
        seeds: vec![a.seed],
        inputs: vec![],
        resolved: json!({ "spec": spec }),
    })
}

pub fn estimate_cmd(a: &EstimateArgs) -> CliResult<Report> {
    let mut method: Method = parse(&a.method)?;
    let boundary: Boundary = parse(&a.boundary)?;
    let pooling = parse_pooling(&a.pooling)?;
    let model = match &a.correction {
        Some(path) => {
            if !matches!(method, Method::Mfsa | Method::Cmfsa) {
                return Err(usage(format!("--correction applies to mfsa, not {method}")));
            }
            method = Method::Cmfsa;
            Some(load_model(path)?)
        }
        None if method == Method::Cmfsa => return Err(usage("cmfsa needs --correction <calibration.json>")),
        None => None,
    };
    let k = match (&model, a.k) {
        (Some(m), Some(k)) if k != m.k => {
            return Err(usage(format!("--k {k} differs from the calibration's k = {}", m.k)))
        }
        (Some(m), _) => m.k,
        (None, Some(k)) => k,
        (None, None) => return Err(usage("--k is required")),
    };
    let mut inputs = vec![digest(&a.input)?];
    let cloud = read_cloud_csv(&a.input, boundary)?;
    let est = match &model {
        Some(m) => corrected_estimate(&cloud, m)?,
        None => estimate(&cloud, k, method, pooling)?,
    };
    if let Some(path) = &a.correction {
        inputs.push(digest(path)?);
    }
    let record = json!({
        "method": method,
        "k": k,
        "n": cloud.len(),
        "value": est.value,
        "n_invalid": est.n_invalid,
    });
    let text = serde_json::to_string_pretty(&record)? + "\n";
    let manifest_path = match &a.out {
        Some(out) => {
            write_text(out, &text)?;
            Some(beside(out))
        }
        None => {
            stdout_text(&text)?;
            None
        }
    };
    Ok(Report { manifest_path, seeds: vec![], inputs, resolved: record })
}

pub fn calibrate_cmd(a: &CalibrateArgs) -> CliResult<Report> {
    let mut cfg = match &a.preset {
        Some(name) => CalibrationConfig::preset(name, a.n, a.k)?,
        None => CalibrationConfig::preset_for(a.n, a.k),
    };
    cfg.boundary = parse(&a.boundary)?;
    if let Some(d) = &a.d {
        cfg.dims = parse_range(d, "--d")?;
    }
    if let Some(order) = &a.order {
        cfg.order = parse::<OrderChoice>(order)?;
    }
    cfg.regression = match a.regression.as_str() {
        "ols" => Regression::Ols,
        "odr" => Regression::Odr,
        other => return Err(usage(format!("unknown regression `{other}` (expected ols|odr)"))),
    };
    cfg.realizations = a.realizations;
    cfg.seed = a.seed;
    let model = calibrate(&cfg)?;
    write_text(&a.out, &(model.to_json()? + "\n"))?;
    Ok(Report {
        manifest_path: Some(beside(&a.out)),
        seeds: vec![a.seed],
        inputs: vec![],
        resolved: json!({ "calibration": cfg, "order": model.order }),
    })
}

pub fn benchmark_cmd(a: &BenchmarkArgs) -> CliResult<Report> {
    let pooling = parse_pooling(&a.pooling)?;
    let methods: Vec<Method> = a.estimators.split(',').map(|s| parse(s.trim())).collect::<CliResult<_>>()?;
    let model = match (&a.calibration, methods.contains(&Method::Cmfsa)) {
        (Some(path), _) => Some(load_model(path)?),
        (None, true) => return Err(usage("cmfsa needs --calibration <calibration.json>")),
        (None, false) => None,
    };
    let estimators: Vec<EstimatorConfig> = methods
        .iter()
        .map(|&m| match (m, &model) {
            (Method::Cmfsa, Some(model)) => EstimatorConfig::cmfsa(model.clone()),
            _ => EstimatorConfig { pooling, ..EstimatorConfig::new(m, a.k) },
        })
        .collect();
    let mut inputs = vec![digest(&a.suite)?];
    if let Some(path) = &a.calibration {
        inputs.push(digest(path)?);
    }
    let suite = Suite::from_json_file(&a.suite)?;
    let base = a.suite.parent().unwrap_or(Path::new("."));
    let result = run_suite(&suite, &estimators, a.realizations, a.seed, base)?;
    fs::create_dir_all(&a.out)?;
    write_outputs(&a.out, &result)?;
    Ok(Report {
        manifest_path: Some(a.out.join("manifest.json")),
        seeds: vec![a.seed],
        inputs,
        resolved: json!({ "aggregates": result.aggregates.per_estimator }),
    })
}

pub fn pdf_cmd(a: &PdfArgs) -> CliResult<Report> {
    let grid = parse_grid(&a.grid)?;
    let rows: Vec<(f64, f64, f64)> = if a.median_sampling {
        let n = a.n.ok_or_else(|| usage("--median-sampling needs --n"))?;
        let dist = MedianSamplingDistribution::new(a.k, a.d_intrinsic, n).map_err(|e| usage(e.to_string()))?;
        grid.iter().map(|&x| (x, dist.pdf(x), dist.cdf(x))).collect()
    } else {
        if a.n.is_some() {
            return Err(usage("--n only applies with --median-sampling"));
        }
        let dist = FsaDistribution::new(a.k, a.d_intrinsic).map_err(|e| usage(e.to_string()))?;
        grid.iter().map(|&x| (x, dist.pdf(x), dist.cdf(x))).collect()
    };
    let mut text = String::from("x,pdf,cdf\n");
    for (x, p, c) in rows {
        text.push_str(&format!("{x},{p},{c}\n"));
    }
    let manifest_path = match &a.out {
        Some(out) => {
            write_text(out, &text)?;
            Some(beside(out))
        }
        None => {
            stdout_text(&text)?;
            None
        }
    };
    Ok(Report { manifest_path, seeds: vec![], inputs: vec![], resolved: json!({}) })
}

struct Prepared {
    series: MultiChannelSeries,
    inputs: Vec<InputDigest>,
    f_max: Option<f64>,
}

fn prepare_series(a: &SeriesArgs) -> CliResult<Prepared> {
    let mut inputs = vec![digest(&a.input)?];
    let file = fs::File::open(&a.input).map_err(|e| CliError::Data(format!("{}: {e}", a.input.display())))?;
    let (values, width) = read_matrix(file, &a.input)?;
    let mut series = MultiChannelSeries::from_samples(&values, width, a.rate)?;
    let band = a.band.as_deref().map(parse_band).transpose()?;
    if let Some((lo, hi)) = band {
        series = bandpass(&series, lo, hi, a.filter_order)?;
    }
    if let Some(path) = &a.layout {
        inputs.push(digest(path)?);
        series = csd(&series.with_layout(Layout::from_json_file(path)?)?)?;
    }
    if a.trim > 0.0 {
        series = series.trim(a.trim)?;
    }
    if !a.no_standardize {
        series = standardize(&series)?;
    }
    Ok(Prepared { series, inputs, f_max: band.map(|b| b.1) })
}

fn resolve_tau(tau: &str, prepared: &Prepared) -> CliResult<usize> {
    match parse_auto(tau, "--tau")? {
        Some(t) => Ok(t),
        None => {
            let f_max = prepared.f_max.ok_or_else(|| usage("--tau auto needs --band"))?;
            Ok(EmbeddingConfig::quarter_period_delay(prepared.series.rate(), f_max))
        }
    }
}

/// Space-time separation averaged over channels.
fn average_stsep(series: &MultiChannelSeries, m: usize, tau: usize, percentiles: &[f64], dtmax: usize) -> CliResult<StSepTable> {
    let tables = series
        .channels()
        .par_iter()
        .map(|ch| space_time_separation(ch, m, tau, percentiles, dtmax))
        .collect::<mfsa::Result<Vec<_>>>()?;
    Ok(StSepTable::average(&tables)?)
}

fn resolve_stride(stride: &str, series: &MultiChannelSeries, m: usize, tau: usize, dtmax: usize) -> CliResult<usize> {
    match parse_auto(stride, "--stride")? {
        Some(s) => Ok(s),
        None => Ok(average_stsep(series, m, tau, &[1.0, 25.0, 50.0], dtmax)?.suggested_stride),
    }
}

pub fn embed_cmd(a: &EmbedArgs) -> CliResult<Report> {
    let prepared = prepare_series(&a.series)?;
    let tau = resolve_tau(&a.tau, &prepared)?;
    let series = &prepared.series;
    let stride = resolve_stride(&a.stride, series, a.m, tau, a.dtmax)?;
    let clouds = series
        .channels()
        .iter()
        .map(|ch| stride_subsets(ch, a.m, tau, stride))
        .collect::<mfsa::Result<Vec<_>>>()?;
    fs::create_dir_all(&a.out)?;
    let mut files = Vec::new();
    for (c, subsets) in clouds.iter().enumerate() {
        for (offset, cloud) in subsets.iter().enumerate() {
            let name = format!("ch{c:03}_offset{offset:03}.csv");
            write_cloud_csv(&a.out.join(&name), cloud)?;
            files.push(name);
        }
    }
    Ok(Report {
        manifest_path: Some(a.out.join("manifest.json")),
        seeds: vec![],
        inputs: prepared.inputs,
        resolved: json!({ "tau": tau, "stride": stride, "samples": series.len(), "files": files }),
    })
}

pub fn stsep_cmd(a: &StsepArgs) -> CliResult<Report> {
    let percentiles: Vec<f64> =
        a.percentiles.split(',').map(|p| parse_num(p, "--percentiles")).collect::<CliResult<_>>()?;
    let prepared = prepare_series(&a.series)?;
    let tau = resolve_tau(&a.tau, &prepared)?;
    let table = average_stsep(&prepared.series, a.m, tau, &percentiles, a.dtmax)?;
    let mut text = String::from("dt");
    for p in &percentiles {
        text.push_str(&format!(",p{p}"));
    }
    text.push('\n');
    for (i, row) in table.values.iter().enumerate() {
        text.push_str(&(i + 1).to_string());
        for v in row {
            text.push(',');
            if let Some(v) = v {
                text.push_str(&v.to_string());
            }
        }
        text.push('\n');
    }
    write_text(&a.out, &text)?;
    Ok(Report {
        manifest_path: Some(beside(&a.out)),
        seeds: vec![],
        inputs: prepared.inputs,
        resolved: json!({ "tau": tau, "suggested_stride": table.suggested_stride }),
    })
}

pub fn profile_cmd(a: &ProfileArgs) -> CliResult<Report> {
    let m_range = parse_range(&a.m, "--m")?;
    let k_range = parse_range(&a.k, "--k")?;
    let method: Method = parse(&a.method)?;
    let prepared = prepare_series(&a.series)?;
    let tau = resolve_tau(&a.tau, &prepared)?;
    let m_max = *m_range.last().expect("non-empty range");
    let stride = resolve_stride(&a.stride, &prepared.series, m_max, tau, a.dtmax)?;
    let cfg = ProfileConfig { k_range: k_range.clone(), method, ..ProfileConfig::new(m_range, tau, stride) };
    let table = dimension_profile(&prepared.series, &cfg)?;
    let mut text = String::from("channel,m,estimate");
    for k in &k_range {
        text.push_str(&format!(",k{k}"));
    }
    text.push('\n');
    for row in &table.rows {
        text.push_str(&format!("{},{},{}", row.channel, row.m, row.estimate));
        for v in &row.per_k {
            text.push_str(&format!(",{v}"));
        }
        text.push('\n');
    }
    write_text(&a.out, &text)?;
    Ok(Report {
        manifest_path: Some(beside(&a.out)),
        seeds: vec![],
        inputs: prepared.inputs,
        resolved: json!({ "tau": tau, "stride": stride, "saturation": table.saturation }),
    })
}
