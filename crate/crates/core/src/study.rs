//! Convergence and complexity studies and inequality probes.
//!
//! Errors are measured on an isotropic reference grid whose level is the
//! largest term level plus a margin, raised if needed so that the target's
//! band sits strictly below the Nyquist index.

use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{KernelMode, KernelSpec};
use crate::norms::{full_norm, to_fourier, NormSpec};
use crate::sparse_grid::{dof_count, eval_sparse_on_fine, sparse_interpolate, SparseGridConfig};
use crate::targets::{Target, TargetFamily, TargetKind};
use crate::tensor::{surplus_on_fine, GridFunctionND, LevelIndex};

fn default_margin() -> usize {
    2
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub d: usize,
    pub p: f64,
    #[serde(default)]
    pub lambda: f64,
    /// Inclusive `[J_min, J_max]`.
    pub j_range: [usize; 2],
    pub family: TargetFamily,
    pub error_norm: NormSpec,
    #[serde(default = "default_margin")]
    pub reference_margin: usize,
    /// Overrides the automatic choice between closed form and series.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel_mode: Option<KernelMode>,
    /// When false, `wall_ms` is reported as 0 so the output is bit-stable.
    #[serde(default = "default_true")]
    pub timing: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<String>,
}

impl StudyConfig {
    pub fn kernel_spec(&self) -> Result<KernelSpec> {
        match self.kernel_mode {
            None => KernelSpec::auto(self.p),
            Some(KernelMode::ClosedForm) => {
                KernelSpec::new(self.p, KernelMode::ClosedForm, crate::kernel::DEFAULT_SERIES_TOLERANCE)
            }
            Some(KernelMode::TruncatedSeries) => KernelSpec::series(self.p),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.j_range[0] > self.j_range[1] {
            return Err(Error::Config(format!(
                "J range {:?} is empty",
                self.j_range
            )));
        }
        SparseGridConfig::new(self.d, self.j_range[0], self.lambda)?;
        self.error_norm.validate()?;
        self.family.validate(self.d)?;
        self.kernel_spec()?;
        Ok(())
    }

    /// Nominal regularity `(s_2, t_2)` of the target. Infinitely smooth
    /// targets are capped at the saturation order `(0, 2p)`.
    pub fn target_regularity(&self) -> (f64, f64) {
        match &self.family.kind {
            TargetKind::FourierDecayMixed { theta } => (0.0, *theta),
            TargetKind::FourierDecayHybrid { s, t } => (*s, *t),
            TargetKind::SmoothAnalytic | TargetKind::SingleMode { .. } => (0.0, 2.0 * self.p),
        }
    }

    /// Rate `-((t_2 - t_1) - (s_1 - s_2))` the convergence estimates predict.
    pub fn predicted_slope(&self) -> f64 {
        let (s2, t2) = self.target_regularity();
        let NormSpec { s: s1, t: t1 } = self.error_norm;
        -((t2.min(2.0 * self.p) - t1) - (s1 - s2))
    }

    /// Parameter combinations outside the proven regime.
    pub fn precondition_warnings(&self) -> Vec<String> {
        let (s2, t2) = self.target_regularity();
        let NormSpec { s: s1, t: t1 } = self.error_norm;
        let p = self.p;
        let mut out = Vec::new();
        if !(s2 <= s1 && s1 <= p) {
            out.push(format!("need 0 <= s_2 <= s_1 <= p, have s_2={s2} s_1={s1} p={p}"));
        }
        if !(t1 <= t2 && t2 <= 2.0 * p) {
            out.push(format!("need 0 <= t_1 <= t_2 <= 2p, have t_1={t1} t_2={t2} p={p}"));
        }
        if s1 + t1 > p {
            out.push(format!("need s_1 + t_1 <= p, have {} > {p}", s1 + t1));
        }
        if p > s2 / 2.0 + t2 {
            out.push(format!("need p <= s_2/2 + t_2, have {p} > {}", s2 / 2.0 + t2));
        }
        if self.d >= 2 && s1 > s2 {
            let limit = (s1 - s2) / (t2 - t1);
            if self.lambda < 0.0 || self.lambda >= limit {
                out.push(format!(
                    "lambda={} outside [0, {limit}); rate may lose a logarithmic factor or more",
                    self.lambda
                ));
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub stderr: f64,
    pub intercept: f64,
}

/// Least-squares fit of `log2(error)` against `J`.
pub fn fit_rate(rows: &[(usize, f64)]) -> Result<RateFit> {
    if rows.len() < 3 {
        return Err(Error::Config(format!("a rate fit needs at least 3 rows, got {}", rows.len())));
    }
    if let Some((j, e)) = rows.iter().find(|(_, e)| !e.is_finite() || *e <= 0.0) {
        return Err(Error::Config(format!("error {e} at J={j} is not positive")));
    }
    let n = rows.len() as f64;
    let xs: Vec<f64> = rows.iter().map(|(j, _)| *j as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|(_, e)| e.log2()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Config("rate fit needs at least two distinct J".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let stderr = (ssr / (n - 2.0) / sxx).sqrt();
    Ok(RateFit {
        slope,
        stderr,
        intercept,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct StudyRow {
    pub level: usize,
    pub dof: u64,
    pub error: f64,
    /// Fit over the rows so far, excluding the first; `None` below 3 rows.
    pub slope_running: Option<f64>,
    pub wall_ms: f64,
    pub reference_level: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StudyResult {
    pub config: StudyConfig,
    pub rows: Vec<StudyRow>,
    pub fit: Option<RateFit>,
    pub predicted_slope: f64,
    pub warnings: Vec<String>,
}

/// Reference level for a sparse grid of resolution `level`.
pub fn reference_level(target: &Target, level: usize, margin: usize) -> usize {
    let needed = target
        .band()
        .map(|b| (usize::BITS - b.leading_zeros()) as usize + 1)
        .unwrap_or(0);
    (level + margin).max(needed)
}

pub fn run_convergence(config: &StudyConfig) -> Result<StudyResult> {
    config.validate()?;
    let spec = config.kernel_spec()?;
    let target = Target::new(config.family.clone(), config.d)?;
    let sampler = |j: &LevelIndex| target.sample(j);
    let mut rows: Vec<StudyRow> = Vec::new();
    for level in config.j_range[0]..=config.j_range[1] {
        let grid = SparseGridConfig::new(config.d, level, config.lambda)?;
        let reference = reference_level(&target, level, config.reference_margin);
        let start = Instant::now();
        let interp = sparse_interpolate(&spec, &sampler, &grid)?;
        let approx = to_fourier(&eval_sparse_on_fine(&interp, reference)?)?;
        let elapsed = start.elapsed().as_secs_f64() * 1e3;
        let exact = target.exact_fourier(reference)?;
        let error = full_norm(&approx.sub(&exact)?, &config.error_norm)?;
        let fit_rows: Vec<(usize, f64)> = rows
            .iter()
            .skip(1)
            .map(|r| (r.level, r.error))
            .chain((level > config.j_range[0]).then_some((level, error)))
            .collect();
        rows.push(StudyRow {
            level,
            dof: dof_count(&grid)?,
            error,
            slope_running: fit_rate(&fit_rows).ok().map(|f| f.slope),
            wall_ms: if config.timing { elapsed } else { 0.0 },
            reference_level: reference,
        });
    }
    let fit_rows: Vec<(usize, f64)> = rows.iter().skip(1).map(|r| (r.level, r.error)).collect();
    Ok(StudyResult {
        config: config.clone(),
        fit: fit_rate(&fit_rows).ok(),
        predicted_slope: config.predicted_slope(),
        warnings: config.precondition_warnings(),
        rows,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComplexityResult {
    pub d: usize,
    pub lambda: f64,
    pub rows: Vec<(usize, u64)>,
    /// Slope of `log2(dof)` against `J`; `None` below 3 rows.
    pub fit: Option<RateFit>,
}

pub fn run_complexity(d: usize, lambda: f64, j_min: usize, j_max: usize) -> Result<ComplexityResult> {
    if j_min > j_max {
        return Err(Error::Config(format!("J range [{j_min}, {j_max}] is empty")));
    }
    let rows = (j_min..=j_max)
        .map(|level| Ok((level, dof_count(&SparseGridConfig::new(d, level, lambda)?)?)))
        .collect::<Result<Vec<_>>>()?;
    let points: Vec<(usize, f64)> = rows.iter().map(|&(j, n)| (j, n as f64)).collect();
    Ok(ComplexityResult {
        d,
        lambda,
        fit: fit_rate(&points).ok(),
        rows,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeKind {
    Jackson,
    Bernstein,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeNorm {
    /// Orders are mixed: `H_mix^t`.
    Mixed,
    /// Orders are isotropic: `H_iso^t`.
    Isotropic,
}

fn default_jmin() -> usize {
    1
}

fn default_probe_norm() -> ProbeNorm {
    ProbeNorm::Mixed
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeConfig {
    pub d: usize,
    pub p: f64,
    pub family: TargetFamily,
    pub t1: f64,
    pub t2: f64,
    /// Every `j` in the box `[j_min, j_max]^d` is probed.
    #[serde(default = "default_jmin")]
    pub j_min: usize,
    pub j_max: usize,
    #[serde(default = "default_probe_norm")]
    pub norm: ProbeNorm,
    #[serde(default = "default_margin")]
    pub reference_margin: usize,
}

/// Largest component level the probes accept.
pub const PROBE_MAX_LEVEL: usize = 6;

impl ProbeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.j_min > self.j_max || self.j_max > PROBE_MAX_LEVEL {
            return Err(Error::Config(format!(
                "probe levels must satisfy j_min <= j_max <= {PROBE_MAX_LEVEL}, got [{}, {}]",
                self.j_min, self.j_max
            )));
        }
        if !(0.0 <= self.t1 && self.t1 <= self.t2 && self.t2.is_finite()) {
            return Err(Error::Config(format!(
                "probe orders must satisfy 0 <= t1 <= t2, got t1={} t2={}",
                self.t1, self.t2
            )));
        }
        if self.d == 0 {
            return Err(Error::Config("dimension must be at least 1".into()));
        }
        self.family.validate(self.d)?;
        KernelSpec::auto(self.p)?;
        Ok(())
    }

    fn norm_spec(&self, order: f64) -> NormSpec {
        match self.norm {
            ProbeNorm::Mixed => NormSpec::mixed(order),
            ProbeNorm::Isotropic => NormSpec::iso(order),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeRow {
    pub j: LevelIndex,
    pub surplus_t1: f64,
    pub surplus_t2: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeReport {
    pub kind: ProbeKind,
    pub config: ProbeConfig,
    pub target_norm_t2: f64,
    pub rows: Vec<ProbeRow>,
    pub max_ratio: f64,
    pub median_ratio: f64,
    /// `max_ratio < 10 * median_ratio`.
    pub bounded: bool,
}

/// Tabulates Jackson ratios `|Q_j u|_{t1} 2^{(t2-t1)|j|} / |u|_{t2}` or
/// Bernstein ratios `|Q_j u|_{t2} / (2^{(t2-t1)|j|} |Q_j u|_{t1})`, where
/// `|j|` is `|j|_1` for mixed norms and `|j|_inf` for isotropic ones.
/// Rows whose ratio is not finite (vanishing surplus) are kept but left
/// out of the summary statistics.
pub fn probe_inequalities(kind: ProbeKind, config: &ProbeConfig) -> Result<ProbeReport> {
    config.validate()?;
    let spec = KernelSpec::auto(config.p)?;
    let target = Target::new(config.family.clone(), config.d)?;
    let reference = reference_level(&target, config.j_max, config.reference_margin);
    let fine = LevelIndex::isotropic(config.d, reference);
    let (n1, n2) = (config.norm_spec(config.t1), config.norm_spec(config.t2));
    let target_norm_t2 = full_norm(&target.exact_fourier(reference)?, &n2)?;
    let sampler = |j: &LevelIndex| target.sample(j);

    let span = config.j_max - config.j_min + 1;
    let count = span.pow(config.d as u32);
    let mut rows = Vec::with_capacity(count);
    for flat in 0..count {
        let mut levels = vec![0usize; config.d];
        let mut rest = flat;
        for axis in (0..config.d).rev() {
            levels[axis] = config.j_min + rest % span;
            rest /= span;
        }
        let j = LevelIndex::from(levels);
        let surplus: GridFunctionND = surplus_on_fine(&spec, &sampler, &j, &fine)?;
        let field = to_fourier(&surplus)?;
        let surplus_t1 = full_norm(&field, &n1)?;
        let surplus_t2 = full_norm(&field, &n2)?;
        let depth = match config.norm {
            ProbeNorm::Mixed => j.l1(),
            ProbeNorm::Isotropic => j.linf(),
        };
        let scale = 2f64.powf((config.t2 - config.t1) * depth as f64);
        let ratio = match kind {
            ProbeKind::Jackson => surplus_t1 * scale / target_norm_t2,
            ProbeKind::Bernstein => surplus_t2 / (scale * surplus_t1),
        };
        rows.push(ProbeRow {
            j,
            surplus_t1,
            surplus_t2,
            ratio,
        });
    }
    let mut finite: Vec<f64> = rows.iter().map(|r| r.ratio).filter(|r| r.is_finite()).collect();
    finite.sort_by(f64::total_cmp);
    let (max_ratio, median_ratio) = if finite.is_empty() {
        (f64::NAN, f64::NAN)
    } else {
        let mid = finite.len() / 2;
        let median = if finite.len() % 2 == 1 {
            finite[mid]
        } else {
            0.5 * (finite[mid - 1] + finite[mid])
        };
        (finite[finite.len() - 1], median)
    };
    Ok(ProbeReport {
        kind,
        config: config.clone(),
        target_norm_t2,
        rows,
        max_ratio,
        median_ratio,
        bounded: max_ratio < 10.0 * median_ratio,
    })
}

fn header(out: &mut String, config_json: &str, warnings: &[String]) {
    writeln!(out, "# config {config_json}").unwrap();
    for w in warnings {
        writeln!(out, "# warning {w}").unwrap();
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|s| format!("{s:.6}")).unwrap_or_default()
}

pub fn convergence_csv(result: &StudyResult) -> String {
    let mut out = String::new();
    let json = serde_json::to_string(&result.config).expect("config serializes");
    header(&mut out, &json, &result.warnings);
    out.push_str("J,dof,error,slope_running,wall_ms\n");
    for r in &result.rows {
        writeln!(
            out,
            "{},{},{:.12e},{},{:.3}",
            r.level,
            r.dof,
            r.error,
            fmt_opt(r.slope_running),
            r.wall_ms
        )
        .unwrap();
    }
    match result.fit {
        Some(fit) => writeln!(
            out,
            "# fitted_slope {:.6} stderr {:.6} predicted {:.6}",
            fit.slope, fit.stderr, result.predicted_slope
        ),
        None => writeln!(out, "# fitted_slope unavailable (fewer than 3 rows after the first)"),
    }
    .unwrap();
    out
}

pub fn complexity_csv(result: &ComplexityResult) -> String {
    let mut out = String::new();
    let json = serde_json::json!({"d": result.d, "lambda": result.lambda}).to_string();
    header(&mut out, &json, &[]);
    out.push_str("J,dof\n");
    for (j, dof) in &result.rows {
        writeln!(out, "{j},{dof}").unwrap();
    }
    if let Some(fit) = result.fit {
        writeln!(out, "# fitted_slope {:.6} stderr {:.6}", fit.slope, fit.stderr).unwrap();
    }
    out
}

pub fn probe_csv(report: &ProbeReport) -> String {
    let mut out = String::new();
    let json = serde_json::to_string(&report.config).expect("config serializes");
    header(&mut out, &json, &[]);
    let kind = match report.kind {
        ProbeKind::Jackson => "jackson",
        ProbeKind::Bernstein => "bernstein",
    };
    writeln!(out, "# kind {kind} target_norm_t2 {:.12e}", report.target_norm_t2).unwrap();
    out.push_str("j,l1,norm_t1,norm_t2,ratio\n");
    for r in &report.rows {
        let j: Vec<String> = r.j.levels.iter().map(|l| l.to_string()).collect();
        writeln!(
            out,
            "{},{},{:.12e},{:.12e},{:.12e}",
            j.join(" "),
            r.j.l1(),
            r.surplus_t1,
            r.surplus_t2,
            r.ratio
        )
        .unwrap();
    }
    writeln!(
        out,
        "# max {:.6e} median {:.6e} bounded {}",
        report.max_ratio, report.median_ratio, report.bounded
    )
    .unwrap();
    out
}
