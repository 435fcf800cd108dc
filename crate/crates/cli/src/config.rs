//! Run configuration: a sectioned TOML file with units in the key names.
//!
//! Every section rejects unknown keys. All numeric ranges are checked in
//! [`parse_config`] before any computation starts.

use std::fmt;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use serde::Deserialize;

use nonlocal_parabolic::analysis::{default_alpha, TheoremId};
use nonlocal_parabolic::kernels::KernelFamily;
use nonlocal_parabolic::tails::TailTarget;
use nonlocal_parabolic::{ExteriorData, Grid, KernelSpec, Modulation, Scheme};

/// What a run does.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    Tail,
    Verify,
    Estimate,
    Oracle,
    LemmaCheck,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Tail => "tail",
            Command::Verify => "verify",
            Command::Estimate => "estimate",
            Command::Oracle => "oracle",
            Command::LemmaCheck => "lemma-check",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Command {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "solve" => Command::Solve,
            "tail" => Command::Tail,
            "verify" => Command::Verify,
            "estimate" => Command::Estimate,
            "oracle" => Command::Oracle,
            "lemma-check" => Command::LemmaCheck,
            other => bail!("unknown command `{other}` (expected solve, tail, verify, estimate, oracle or lemma-check)"),
        })
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSection {
    #[serde(default = "default_family")]
    pub family: String,
    /// Order `s` of a single-kernel run.
    pub order_s: Option<f64>,
    #[serde(default = "one")]
    pub lambda: f64,
    /// Multiplier of the `constant_multiple` family, in `[1/lambda, lambda]`.
    #[serde(default = "one")]
    pub constant_c: f64,
    pub modulation: Option<String>,
    #[serde(default)]
    pub modulation_amplitude: f64,
}

impl Default for KernelSection {
    fn default() -> Self {
        KernelSection {
            family: default_family(),
            order_s: None,
            lambda: 1.0,
            constant_c: 1.0,
            modulation: None,
            modulation_amplitude: 0.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(default = "one_usize")]
    pub dim_n: usize,
    #[serde(default = "default_half_width")]
    pub half_width_l: f64,
    #[serde(default = "default_nodes")]
    pub nodes_per_axis: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            dim_n: 1,
            half_width_l: default_half_width(),
            nodes_per_axis: default_nodes(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    #[serde(default)]
    pub time_start: f64,
    /// Defaults to `time_start + 5 r^{2s}` with `r = geometry.radius_r`.
    pub time_end: Option<f64>,
    #[serde(default = "default_dt")]
    pub step_dt: f64,
    #[serde(default = "default_scheme")]
    pub scheme: String,
}

impl Default for TimeSection {
    fn default() -> Self {
        TimeSection {
            time_start: 0.0,
            time_end: None,
            step_dt: default_dt(),
            scheme: default_scheme(),
        }
    }
}

/// Initial datum of a single-kernel run.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    /// `constant`, `gaussian` or `poisson_kernel`.
    #[serde(default = "default_profile")]
    pub profile: String,
    #[serde(default = "one")]
    pub value: f64,
    #[serde(default = "one")]
    pub width_w: f64,
    pub center_x: Option<Vec<f64>>,
    /// Time shift of the Poisson-kernel profile `p(x, shift)`.
    #[serde(default = "one")]
    pub shift_time: f64,
}

impl Default for InitialSection {
    fn default() -> Self {
        InitialSection {
            profile: default_profile(),
            value: 1.0,
            width_w: 1.0,
            center_x: None,
            shift_time: 1.0,
        }
    }
}

/// Exterior datum of a single-kernel run.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExteriorSection {
    /// `zero`, `constant`, `power_law`, `annulus` or `poisson_kernel`.
    #[serde(default = "default_generator")]
    pub generator: String,
    #[serde(default)]
    pub value: f64,
    #[serde(default)]
    pub amplitude_a: f64,
    #[serde(default = "default_gamma")]
    pub decay_gamma: f64,
    #[serde(default = "default_r_in")]
    pub radius_inner: f64,
    #[serde(default = "default_r_out")]
    pub radius_outer: f64,
    #[serde(default = "one")]
    pub shift_time: f64,
}

impl Default for ExteriorSection {
    fn default() -> Self {
        ExteriorSection {
            generator: default_generator(),
            value: 0.0,
            amplitude_a: 0.0,
            decay_gamma: default_gamma(),
            radius_inner: default_r_in(),
            radius_outer: default_r_out(),
            shift_time: 1.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    pub center_x0: Option<Vec<f64>>,
    #[serde(default = "default_r")]
    pub radius_r: f64,
    #[serde(default = "default_big_r")]
    pub radius_big_r: f64,
    /// Defaults to `2.5 r^{2s}`.
    pub time_t0: Option<f64>,
    /// Defaults to `(1 + 2^{2s}) / 2`.
    pub alpha: Option<f64>,
    #[serde(default = "half")]
    pub theta: f64,
    #[serde(default = "half")]
    pub delta: f64,
    /// Checks run by verify and estimate; the four main estimates by default.
    pub theorems: Option<Vec<String>>,
}

impl Default for GeometrySection {
    fn default() -> Self {
        GeometrySection {
            center_x0: None,
            radius_r: default_r(),
            radius_big_r: default_big_r(),
            time_t0: None,
            alpha: None,
            theta: 0.5,
            delta: 0.5,
            theorems: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailSection {
    pub center_x0: Option<Vec<f64>>,
    #[serde(default = "one")]
    pub radius_r: f64,
    pub time_t1: f64,
    pub time_t2: f64,
    /// `positive_part`, `negative_part` or `absolute_value`.
    #[serde(default = "default_target")]
    pub target: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSection {
    #[serde(default = "default_count")]
    pub count: usize,
    /// Families assigned to members cyclically; defaults to `kernel.family`.
    pub families: Option<Vec<String>>,
    #[serde(default = "default_order_range")]
    pub order_s_range: [f64; 2],
    #[serde(default = "default_modulation")]
    pub modulation: String,
    #[serde(default = "default_bumps")]
    pub bump_count: [usize; 2],
    #[serde(default = "default_bump_amplitude")]
    pub bump_amplitude: [f64; 2],
    #[serde(default = "default_bump_width")]
    pub bump_width: [f64; 2],
    #[serde(default = "one")]
    pub bump_spread: f64,
    #[serde(default)]
    pub initial_baseline: f64,
    #[serde(default)]
    pub exterior_baseline: f64,
    #[serde(default = "default_ext_amplitude")]
    pub exterior_amplitude: [f64; 2],
    #[serde(default = "default_gamma_range")]
    pub decay_gamma_range: [f64; 2],
    /// Mass removed on the annulus `radius_inner <= |y| <= radius_outer`.
    pub negative_mass: Option<f64>,
    #[serde(default = "default_mass_r_in")]
    pub negative_radius_inner: f64,
    #[serde(default = "default_mass_r_out")]
    pub negative_radius_outer: f64,
    #[serde(default = "default_residual_tests")]
    pub residual_tests: usize,
}

impl Default for EnsembleSection {
    fn default() -> Self {
        toml::from_str("").expect("every ensemble key has a default")
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    /// Pass threshold on the relative max-norm error.
    #[serde(default = "default_oracle_tol")]
    pub tolerance_rel: f64,
    /// The reference solution is `p(x, shift + t)`.
    #[serde(default = "one")]
    pub shift_time: f64,
}

impl Default for OracleSection {
    fn default() -> Self {
        OracleSection {
            tolerance_rel: default_oracle_tol(),
            shift_time: 1.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LemmaSection {
    #[serde(default = "default_q_part_i")]
    pub algebraic_q_part_i: Vec<f64>,
    #[serde(default = "default_q_part_ii")]
    pub algebraic_q_part_ii: Vec<f64>,
    #[serde(default = "default_tuples")]
    pub algebraic_tuples: usize,
    /// Orders for the Poincaré and Sobolev refinement checks.
    #[serde(default = "default_orders")]
    pub orders_s: Vec<f64>,
    #[serde(default = "one")]
    pub radius_r: f64,
}

impl Default for LemmaSection {
    fn default() -> Self {
        toml::from_str("").expect("every lemma key has a default")
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_dir")]
    pub directory: String,
    /// Field file formats: `binary` and/or `csv`.
    #[serde(default = "default_formats")]
    pub formats: Vec<String>,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            directory: default_dir(),
            formats: default_formats(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    command: Option<String>,
    seed: Option<u64>,
    #[serde(default)]
    kernel: KernelSection,
    #[serde(default)]
    grid: GridSection,
    #[serde(default)]
    time: TimeSection,
    #[serde(default)]
    initial: InitialSection,
    #[serde(default)]
    exterior: ExteriorSection,
    #[serde(default)]
    geometry: GeometrySection,
    tail: Option<TailSection>,
    #[serde(default)]
    ensemble: EnsembleSection,
    #[serde(default)]
    oracle: OracleSection,
    #[serde(default)]
    lemma: LemmaSection,
    #[serde(default)]
    output: OutputSection,
}

/// A validated configuration with every default resolved.
#[derive(Debug, Clone)]
pub struct RunConfig {
    /// Command named in the file, if any.
    pub command: Option<Command>,
    pub seed: u64,
    pub kernel: KernelSection,
    pub grid: GridSection,
    pub time: TimeSection,
    pub scheme: Scheme,
    pub initial: InitialSection,
    pub exterior: ExteriorSection,
    pub geometry: GeometrySection,
    /// Harnack lag resolved against `kernel.order_s` (None without a single order).
    pub alpha: Option<f64>,
    pub theorems: Vec<TheoremId>,
    pub tail: Option<TailSection>,
    pub ensemble: EnsembleSection,
    pub oracle: OracleSection,
    pub lemma: LemmaSection,
    pub output: OutputSection,
    /// Exact text the configuration was parsed from.
    pub source: String,
}

fn range_err(key: &str, value: impl fmt::Display, range: &str) -> anyhow::Error {
    anyhow!("`{key}` = {value} is out of range: expected {range}")
}

fn check_order(key: &str, s: f64) -> Result<()> {
    if s > 0.0 && s < 1.0 {
        Ok(())
    } else {
        Err(range_err(key, s, "s ∈ (0, 1)"))
    }
}

fn check_unit(key: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(range_err(key, v, "a value in (0, 1)"))
    }
}

fn check_decay(key: &str, gamma: f64, s: f64) -> Result<()> {
    if gamma < 2.0 * s {
        Ok(())
    } else {
        Err(anyhow!(
            "`{key}` = {gamma} makes the tail diverge: expected γ < 2s = {} (exterior data must be integrable against |y|^(-n-2s))",
            2.0 * s
        ))
    }
}

/// Parses and validates a configuration file.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let raw: RawConfig = toml::from_str(text).context("malformed configuration")?;
    let command = raw.command.as_deref().map(Command::from_str).transpose()?;
    let k = &raw.kernel;
    k.family.parse::<KernelFamily>().map_err(|e| anyhow!("`kernel.family`: {e}"))?;
    if let Some(s) = k.order_s {
        check_order("kernel.order_s", s)?;
    }
    if !(k.lambda >= 1.0) || !k.lambda.is_finite() {
        return Err(range_err("kernel.lambda", k.lambda, "Λ ≥ 1"));
    }
    if !(k.constant_c >= 1.0 / k.lambda && k.constant_c <= k.lambda) {
        return Err(range_err("kernel.constant_c", k.constant_c, "c ∈ [1/Λ, Λ]"));
    }
    if !(0.0..1.0).contains(&k.modulation_amplitude) {
        return Err(range_err("kernel.modulation_amplitude", k.modulation_amplitude, "a value in [0, 1)"));
    }
    if k.family == "modulated" && k.modulation_amplitude > 1.0 - 1.0 / k.lambda {
        return Err(range_err(
            "kernel.modulation_amplitude",
            k.modulation_amplitude,
            "amplitude ≤ 1 - 1/Λ so that the kernel stays within [Λ⁻¹, Λ] times the fractional Laplacian",
        ));
    }
    let g = &raw.grid;
    if !(1..=2).contains(&g.dim_n) {
        return Err(range_err("grid.dim_n", g.dim_n, "n ∈ {1, 2}"));
    }
    Grid::new(g.dim_n, g.half_width_l, g.nodes_per_axis).map_err(|e| anyhow!("grid: {e}"))?;
    let t = &raw.time;
    if !(t.step_dt > 0.0) || !t.step_dt.is_finite() {
        return Err(range_err("time.step_dt", t.step_dt, "dt > 0"));
    }
    if let Some(end) = t.time_end {
        if !(end > t.time_start) {
            return Err(range_err("time.time_end", end, "time_end > time_start"));
        }
    }
    let scheme: Scheme = t.scheme.parse().map_err(|e| anyhow!("`time.scheme`: {e}"))?;
    match raw.initial.profile.as_str() {
        "constant" | "gaussian" | "poisson_kernel" => {}
        other => bail!("`initial.profile` = `{other}`: expected constant, gaussian or poisson_kernel"),
    }
    if !(raw.initial.width_w > 0.0) {
        return Err(range_err("initial.width_w", raw.initial.width_w, "w > 0"));
    }
    for (key, c) in [("initial.center_x", &raw.initial.center_x), ("geometry.center_x0", &raw.geometry.center_x0)] {
        if let Some(c) = c {
            if c.len() != g.dim_n {
                bail!("`{key}` has {} coordinates but grid.dim_n = {}", c.len(), g.dim_n);
            }
        }
    }
    let e = &raw.exterior;
    match e.generator.as_str() {
        "zero" | "constant" | "annulus" | "poisson_kernel" => {}
        "power_law" => {
            if let Some(s) = k.order_s {
                check_decay("exterior.decay_gamma", e.decay_gamma, s)?;
            }
        }
        other => bail!("`exterior.generator` = `{other}`: expected zero, constant, power_law, annulus or poisson_kernel"),
    }
    if e.generator == "annulus" && !(e.radius_outer > e.radius_inner && e.radius_inner >= g.half_width_l) {
        return Err(range_err(
            "exterior.radius_inner",
            e.radius_inner,
            "half_width_l ≤ radius_inner < radius_outer",
        ));
    }

    let geo = &raw.geometry;
    if !(geo.radius_r > 0.0) {
        return Err(range_err("geometry.radius_r", geo.radius_r, "r > 0"));
    }
    if !(geo.radius_r < geo.radius_big_r / 2.0) {
        return Err(range_err(
            "geometry.radius_big_r",
            geo.radius_big_r,
            &format!("r < R/2 with r = {}", geo.radius_r),
        ));
    }
    check_unit("geometry.theta", geo.theta)?;
    check_unit("geometry.delta", geo.delta)?;
    let mut resolved_alpha = None;
    if let Some(s) = k.order_s {
        let alpha = geo.alpha.unwrap_or_else(|| default_alpha(s));
        let upper = 4f64.powf(s);
        if !(alpha > 1.0 && alpha < upper) {
            return Err(range_err(
                "geometry.alpha",
                alpha,
                &format!("α ∈ (1, 2^{{2s}}) = (1, {upper:.4}) for s = {s}"),
            ));
        }
        resolved_alpha = Some(alpha);
    } else if let Some(alpha) = geo.alpha {
        if !(alpha > 1.0) {
            return Err(range_err("geometry.alpha", alpha, "α ∈ (1, 2^{2s})"));
        }
    }
    let theorems = match &geo.theorems {
        Some(list) => list
            .iter()
            .map(|t| t.parse::<TheoremId>().map_err(|e| anyhow!("`geometry.theorems`: {e}")))
            .collect::<Result<Vec<_>>>()?,
        None => TheoremId::MAIN.to_vec(),
    };
    if let Some(tq) = &raw.tail {
        if !(tq.radius_r > 0.0) {
            return Err(range_err("tail.radius_r", tq.radius_r, "r > 0"));
        }
        if !(tq.time_t2 > tq.time_t1) {
            return Err(range_err("tail.time_t2", tq.time_t2, "t1 < t2"));
        }
        parse_target(&tq.target)?;
    }

    let en = &raw.ensemble;
    if en.count == 0 {
        return Err(range_err("ensemble.count", en.count, "count ≥ 1"));
    }
    let [s_lo, s_hi] = en.order_s_range;
    check_order("ensemble.order_s_range", s_lo)?;
    check_order("ensemble.order_s_range", s_hi)?;
    if s_lo > s_hi {
        bail!("`ensemble.order_s_range` is reversed");
    }
    for f in en.families.iter().flatten() {
        f.parse::<KernelFamily>().map_err(|e| anyhow!("`ensemble.families`: {e}"))?;
    }
    if en.exterior_amplitude[1] > 0.0 {
        check_decay("ensemble.decay_gamma_range", en.decay_gamma_range[1], s_lo)?;
    }
    if let Some(alpha) = geo.alpha {
        if k.order_s.is_none() && !(alpha < 4f64.powf(s_lo)) {
            return Err(range_err(
                "geometry.alpha",
                alpha,
                &format!("α ∈ (1, 2^{{2s}}) for every s in the ensemble, i.e. below {:.4}", 4f64.powf(s_lo)),
            ));
        }
    }
    if !(raw.oracle.tolerance_rel > 0.0) {
        return Err(range_err("oracle.tolerance_rel", raw.oracle.tolerance_rel, "a positive tolerance"));
    }
    for &q in &raw.lemma.algebraic_q_part_i {
        if !(q > 1.0) {
            return Err(range_err("lemma.algebraic_q_part_i", q, "q > 1"));
        }
    }
    for &q in &raw.lemma.algebraic_q_part_ii {
        if !(q > 0.0 && q < 1.0) {
            return Err(range_err("lemma.algebraic_q_part_ii", q, "q ∈ (0, 1)"));
        }
    }
    for &s in &raw.lemma.orders_s {
        check_order("lemma.orders_s", s)?;
    }
    for f in &raw.output.formats {
        if f != "binary" && f != "csv" {
            bail!("`output.formats` entry `{f}`: expected binary or csv");
        }
    }
    Ok(RunConfig {
        command,
        seed: raw.seed.unwrap_or(0),
        kernel: raw.kernel,
        grid: raw.grid,
        time: raw.time,
        scheme,
        initial: raw.initial,
        exterior: raw.exterior,
        geometry: raw.geometry,
        alpha: resolved_alpha,
        theorems,
        tail: raw.tail,
        ensemble: raw.ensemble,
        oracle: raw.oracle,
        lemma: raw.lemma,
        output: raw.output,
        source: text.to_string(),
    })
}

pub(crate) fn parse_target(s: &str) -> Result<TailTarget> {
    Ok(match s {
        "positive_part" => TailTarget::PositivePart,
        "negative_part" => TailTarget::NegativePart,
        "absolute_value" => TailTarget::AbsoluteValue,
        other => bail!("`tail.target` = `{other}`: expected positive_part, negative_part or absolute_value"),
    })
}

impl RunConfig {
    /// Order of a single-kernel run.
    pub fn order(&self) -> Result<f64> {
        self.kernel
            .order_s
            .ok_or_else(|| anyhow!("`kernel.order_s` is required for this command"))
    }

    pub fn grid(&self) -> Grid {
        Grid::new(self.grid.dim_n, self.grid.half_width_l, self.grid.nodes_per_axis).expect("validated in parse_config")
    }

    pub fn kernel_spec(&self) -> Result<KernelSpec> {
        let s = self.order()?;
        let n = self.grid.dim_n;
        let k = &self.kernel;
        Ok(match k.family.parse::<KernelFamily>()? {
            KernelFamily::FractionalLaplacian => KernelSpec::fractional_laplacian(n, s)?.with_lambda(k.lambda)?,
            KernelFamily::ConstantMultiple => KernelSpec::constant_multiple(n, s, k.constant_c, k.lambda)?,
            KernelFamily::Modulated => {
                let name = k.modulation.as_deref().unwrap_or("product_cosine");
                KernelSpec::modulated(n, s, k.lambda, Modulation::named(name, k.modulation_amplitude)?)?
            }
        })
    }

    pub fn center(&self) -> Vec<f64> {
        self.geometry
            .center_x0
            .clone()
            .unwrap_or_else(|| vec![0.0; self.grid.dim_n])
    }

    pub fn initial_values(&self) -> Result<Vec<f64>> {
        let grid = self.grid();
        let i = &self.initial;
        let c = i.center_x.clone().unwrap_or_else(|| vec![0.0; grid.dim()]);
        Ok(match i.profile.as_str() {
            "constant" => vec![i.value; grid.node_count()],
            "gaussian" => grid.sample(|x| {
                let d2: f64 = x.iter().zip(&c).map(|(p, q)| (p - q) * (p - q)).sum();
                i.value * (-d2 / (i.width_w * i.width_w)).exp()
            }),
            "poisson_kernel" => {
                let ext = ExteriorData::poisson_kernel(grid.dim(), i.shift_time);
                grid.sample(|x| ext.value(x, 0.0))
            }
            other => bail!("unknown initial profile `{other}`"),
        })
    }

    pub fn exterior_data(&self) -> Result<ExteriorData> {
        let e = &self.exterior;
        Ok(match e.generator.as_str() {
            "zero" => ExteriorData::zero(),
            "constant" => ExteriorData::constant(e.value),
            "power_law" => ExteriorData::power_law(e.amplitude_a, e.decay_gamma),
            "annulus" => ExteriorData::annulus(e.value, e.radius_inner, e.radius_outer),
            "poisson_kernel" => ExteriorData::poisson_kernel(self.grid.dim_n, e.shift_time),
            other => bail!("unknown exterior generator `{other}`"),
        })
    }

    /// End time of a single-kernel run.
    pub fn time_end(&self) -> Result<f64> {
        match self.time.time_end {
            Some(t) => Ok(t),
            None => Ok(self.time.time_start + 5.0 * self.geometry.radius_r.powf(2.0 * self.order()?)),
        }
    }

    /// Anchor time of the verification geometry.
    pub fn time_t0(&self) -> Result<f64> {
        match self.geometry.time_t0 {
            Some(t) => Ok(t),
            None => Ok(self.time.time_start + 2.5 * self.geometry.radius_r.powf(2.0 * self.order()?)),
        }
    }
}

fn default_family() -> String {
    "fractional_laplacian".into()
}
fn default_scheme() -> String {
    "implicit_euler".into()
}
fn default_profile() -> String {
    "gaussian".into()
}
fn default_generator() -> String {
    "zero".into()
}
fn default_target() -> String {
    "absolute_value".into()
}
fn default_modulation() -> String {
    "product_cosine".into()
}
fn default_dir() -> String {
    "out".into()
}
fn default_formats() -> Vec<String> {
    vec!["binary".into()]
}
fn one() -> f64 {
    1.0
}
fn half() -> f64 {
    0.5
}
fn one_usize() -> usize {
    1
}
fn default_half_width() -> f64 {
    4.0
}
fn default_nodes() -> usize {
    256
}
fn default_dt() -> f64 {
    1.0 / 64.0
}
fn default_gamma() -> f64 {
    -1.0
}
fn default_r_in() -> f64 {
    6.0
}
fn default_r_out() -> f64 {
    8.0
}
fn default_r() -> f64 {
    0.5
}
fn default_big_r() -> f64 {
    2.0
}
fn default_count() -> usize {
    20
}
fn default_order_range() -> [f64; 2] {
    [0.3, 0.7]
}
fn default_bumps() -> [usize; 2] {
    [1, 3]
}
fn default_bump_amplitude() -> [f64; 2] {
    [0.5, 2.0]
}
fn default_bump_width() -> [f64; 2] {
    [0.4, 1.2]
}
fn default_ext_amplitude() -> [f64; 2] {
    [0.0, 0.5]
}
fn default_gamma_range() -> [f64; 2] {
    [-2.0, -0.5]
}
fn default_mass_r_in() -> f64 {
    6.0
}
fn default_mass_r_out() -> f64 {
    8.0
}
fn default_residual_tests() -> usize {
    20
}
fn default_oracle_tol() -> f64 {
    0.02
}
fn default_q_part_i() -> Vec<f64> {
    vec![1.5, 2.0, 3.0, 5.0, 9.0]
}
fn default_q_part_ii() -> Vec<f64> {
    vec![0.1, 0.25, 0.5, 0.75, 0.9]
}
fn default_tuples() -> usize {
    100_000
}
fn default_orders() -> Vec<f64> {
    vec![0.3, 0.5, 0.7]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_solve_config_gets_documented_defaults() {
        let c = parse_config("command = \"solve\"\n[kernel]\norder_s = 0.3\n").unwrap();
        assert_eq!(c.command, Some(Command::Solve));
        let alpha = c.alpha.unwrap();
        assert!((alpha - (1.0 + 2f64.powf(0.6)) / 2.0).abs() < 1e-15);
        assert_eq!((c.geometry.theta, c.geometry.delta), (0.5, 0.5));
        assert_eq!(c.scheme, Scheme::ImplicitEuler);
        assert_eq!(c.theorems, TheoremId::MAIN.to_vec());
    }

    #[test]
    fn alpha_outside_lag_range_is_rejected() {
        let err = parse_config("[kernel]\norder_s = 0.3\n[geometry]\nalpha = 1.9\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("α ∈ (1, 2^{2s})"), "{err}");
        assert!(err.contains("geometry.alpha"), "{err}");
    }

    #[test]
    fn divergent_exterior_decay_is_rejected() {
        let err = parse_config("[kernel]\norder_s = 0.5\n[exterior]\ngenerator = \"power_law\"\namplitude_a = 1.0\ndecay_gamma = 1.2\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("γ < 2s"), "{err}");
        assert!(err.contains("exterior.decay_gamma"), "{err}");
    }

    #[test]
    fn unknown_keys_are_errors() {
        let err = parse_config("[kernel]\norder_s = 0.5\nradius = 2.0\n").unwrap_err();
        assert!(format!("{err:#}").contains("radius"), "{err:#}");
        assert!(parse_config("verbose = true\n").is_err());
        assert!(parse_config("[plot]\n").is_err());
    }

    #[test]
    fn range_violations_name_the_key() {
        for (text, key) in [
            ("[kernel]\norder_s = 1.0\n", "kernel.order_s"),
            ("[kernel]\norder_s = 0.5\nlambda = 0.5\n", "kernel.lambda"),
            ("[kernel]\norder_s = 0.5\n[geometry]\nradius_r = 1.0\nradius_big_r = 2.0\n", "geometry.radius_big_r"),
            ("[kernel]\norder_s = 0.5\n[geometry]\ntheta = 1.0\n", "geometry.theta"),
            ("[kernel]\norder_s = 0.5\n[geometry]\ndelta = 0.0\n", "geometry.delta"),
        ] {
            let err = parse_config(text).unwrap_err().to_string();
            assert!(err.contains(key), "{text}: {err}");
        }
    }

    #[test]
    fn ensemble_alpha_must_fit_every_order() {
        let err = parse_config("[geometry]\nalpha = 1.6\n[ensemble]\norder_s_range = [0.3, 0.7]\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("α ∈ (1, 2^{2s})"), "{err}");
    }
}
