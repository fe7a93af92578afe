//! Pseudospectral integration of `u_t + (u²/2)_x = N[u]` with blow-up
//! monitoring, characteristic tracking, and extrapolation of the breaking time.
//!
//! The state is kept inside the 2/3 band at all times: the initial data are
//! projected once, the multiplier preserves the band, and the quadratic term is
//! truncated after every evaluation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::{ModelKind, ModelSpec};
use crate::spectral::{forward, interpolate_spectrum, inverse_real, tail_ratio_of, Complex, Field, GridSpec};

/// Initial profiles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialData {
    /// `ū = −a·x·e^{−x²/(2w²)}`, slope `−a` at the origin.
    GaussianSlope {
        amplitude: f64,
        #[serde(default = "unit_width")]
        width: f64,
    },
    /// `ū = −a·sin(πx/L)`, one period across the box.
    Sine { amplitude: f64 },
    /// Samples on the simulation grid.
    Tabulated { values: Vec<f64> },
}

fn unit_width() -> f64 {
    1.0
}

impl InitialData {
    pub fn gaussian_slope(amplitude: f64) -> Self {
        Self::GaussianSlope { amplitude, width: 1.0 }
    }

    /// Periodic data are exempt from the edge-decay check.
    pub fn is_periodic(&self) -> bool {
        matches!(self, InitialData::Sine { .. })
    }

    pub fn sample(&self, grid: GridSpec) -> Result<Field> {
        match self {
            InitialData::GaussianSlope { amplitude, width } => {
                if !(*width > 0.0) {
                    return Err(Error::InitialData(format!("width must be positive, got {width}")));
                }
                let (a, w) = (*amplitude, *width);
                Ok(Field::from_fn(grid, |x| -a * x * (-x * x / (2.0 * w * w)).exp()))
            }
            InitialData::Sine { amplitude } => {
                let (a, l) = (*amplitude, grid.half_width());
                Ok(Field::from_fn(grid, |x| -a * (std::f64::consts::PI * x / l).sin()))
            }
            InitialData::Tabulated { values } => Field::from_values(grid, values.clone()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stepper {
    /// Classical four-stage Runge–Kutta on the full right side.
    Rk4,
    /// Runge–Kutta on the nonlinear term with the multiplier integrated exactly.
    IntegratingFactor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub model: ModelSpec,
    pub grid: GridSpec,
    pub initial: InitialData,
    pub cfl: f64,
    pub m_cap_factor: f64,
    pub tail_stop: f64,
    /// Rows with a larger tail ratio are kept in the trace but left out of
    /// the `T*` fit: `m` starts to lag well before `tail_stop` is reached.
    pub fit_tail: f64,
    pub fit_window: usize,
    /// Defaults to `10/m(0)` when unset.
    pub max_time: Option<f64>,
    pub stepper: Stepper,
    /// Largest grid used by automatic refinement after resolution loss.
    pub n_max: usize,
    /// Growth `m/m(0)` at resolution loss that still counts as a usable run.
    pub min_growth: f64,
    pub max_steps: usize,
    /// Drop the quadratic term (linear flow only).
    pub nonlinear: bool,
}

impl SimConfig {
    pub fn new(model: ModelSpec, grid: GridSpec, initial: InitialData) -> Self {
        Self {
            model,
            grid,
            initial,
            cfl: 0.4,
            m_cap_factor: 50.0,
            tail_stop: 1e-4,
            fit_tail: 1e-10,
            fit_window: 20,
            max_time: None,
            stepper: Stepper::IntegratingFactor,
            n_max: 4096,
            min_growth: 8.0,
            max_steps: 2_000_000,
            nonlinear: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.cfl > 0.0 && self.cfl < 1.0) {
            return bad(format!("cfl must lie in (0, 1), got {}", self.cfl));
        }
        if !(self.m_cap_factor > 1.0) {
            return bad(format!("m_cap_factor must exceed 1, got {}", self.m_cap_factor));
        }
        if !(self.tail_stop > 0.0 && self.tail_stop < 1.0) {
            return bad(format!("tail_stop must lie in (0, 1), got {}", self.tail_stop));
        }
        if !(self.fit_tail > 0.0 && self.fit_tail <= self.tail_stop) {
            return bad(format!("fit_tail must lie in (0, tail_stop], got {}", self.fit_tail));
        }
        if self.fit_window < 5 {
            return bad(format!("fit_window must be at least 5, got {}", self.fit_window));
        }
        if let Some(t) = self.max_time {
            if !(t > 0.0 && t.is_finite()) {
                return bad(format!("max_time must be positive, got {t}"));
            }
        }
        if !(self.min_growth >= 1.0) {
            return bad(format!("min_growth must be at least 1, got {}", self.min_growth));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MCap,
    ResolutionLoss,
    MaxTime,
    StepLimit,
}

impl StopReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            StopReason::MCap => "m_cap",
            StopReason::ResolutionLoss => "resolution_loss",
            StopReason::MaxTime => "max_time",
            StopReason::StepLimit => "step_limit",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: f64,
    /// `−inf u_x`.
    pub m: f64,
    /// `‖u_x‖∞`.
    #[serde(rename = "M")]
    pub big_m: f64,
    pub z0: f64,
    pub z1: f64,
    pub z2: f64,
    pub z3: f64,
    pub tail_ratio: f64,
    /// Rates predicted by the energy identities: `−∫u_x³`,
    /// `−5∫u_x u_xx²`, `−7∫u_x u_xxx²`.
    pub dz1: f64,
    pub dz2: f64,
    pub dz3: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationTrace {
    pub rows: Vec<TraceRow>,
    pub stop_reason: StopReason,
    pub grid: GridSpec,
    /// Tail ratio above which rows are not used for extrapolation.
    pub fit_tail: f64,
}

impl SimulationTrace {
    pub fn m0(&self) -> f64 {
        self.rows.first().map_or(f64::NAN, |r| r.m)
    }

    /// Rows whose tail ratio is at most `threshold`, up to the first that is not.
    pub fn resolved_rows(&self, threshold: f64) -> &[TraceRow] {
        let end = self
            .rows
            .iter()
            .position(|r| r.tail_ratio > threshold)
            .unwrap_or(self.rows.len());
        &self.rows[..end]
    }

    /// `m/m(0)` at the last row used for extrapolation.
    pub fn growth(&self) -> f64 {
        self.resolved_rows(self.fit_tail)
            .last()
            .map_or(f64::NAN, |r| r.m / self.m0())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreakingEstimate {
    pub t_star_est: f64,
    pub stop_reason: StopReason,
    /// Slope of the least-squares line through `(t, 1/m)`.
    pub fit_slope: f64,
    /// Coefficient of determination of that line.
    pub fit_quality: f64,
    pub valid: bool,
    pub growth: f64,
    pub n_used: usize,
    pub note: Option<String>,
}

/// Right side on spectra, for a fixed model and grid.
pub struct Dynamics {
    grid: GridSpec,
    symbols: Vec<Complex>,
    /// `iξ_k`, zero at Nyquist.
    ik: Vec<Complex>,
    band: Vec<bool>,
    nonlinear: bool,
    linear: bool,
    max_symbol: f64,
}

impl Dynamics {
    pub fn new(model: &ModelSpec, grid: GridSpec) -> Self {
        let symbols = model.symbol_table(&grid);
        let nyq = grid.nyquist_index();
        let ik = (0..grid.n())
            .map(|i| {
                if i == nyq {
                    Complex::new(0.0, 0.0)
                } else {
                    Complex::new(0.0, grid.wavenumber(i))
                }
            })
            .collect();
        let cutoff = grid.dealias_cutoff();
        let band = (0..grid.n()).map(|i| grid.mode(i).abs() <= cutoff).collect();
        let max_symbol = symbols.iter().fold(0.0_f64, |m, c| m.max(c.norm()));
        Self {
            grid,
            symbols,
            ik,
            band,
            nonlinear: true,
            linear: !matches!(model.kind, ModelKind::Burgers),
            max_symbol,
        }
    }

    pub fn without_nonlinearity(mut self) -> Self {
        self.nonlinear = false;
        self
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Zero every mode outside the 2/3 band.
    pub fn project(&self, spectrum: &mut [Complex]) {
        for (c, &keep) in spectrum.iter_mut().zip(&self.band) {
            if !keep {
                *c = Complex::new(0.0, 0.0);
            }
        }
    }

    /// `−P[(u²)_x/2]` for a band-limited `u`.
    fn quadratic(&self, uh: &[Complex]) -> Vec<Complex> {
        if !self.nonlinear {
            return vec![Complex::new(0.0, 0.0); uh.len()];
        }
        let u = inverse_real(uh);
        let sq: Vec<f64> = u.iter().map(|v| v * v).collect();
        let mut out = forward(&sq);
        for ((c, k), &keep) in out.iter_mut().zip(&self.ik).zip(&self.band) {
            *c = if keep { -0.5 * k * *c } else { Complex::new(0.0, 0.0) };
        }
        out
    }

    fn full(&self, uh: &[Complex]) -> Vec<Complex> {
        let mut out = self.quadratic(uh);
        if self.linear {
            for ((o, s), u) in out.iter_mut().zip(&self.symbols).zip(uh) {
                *o += s * u;
            }
        }
        out
    }

    /// One step; also returns the four stage states (times `t`, `t+dt/2`,
    /// `t+dt/2`, `t+dt`) for tracers.
    fn advance(&self, uh: &[Complex], dt: f64, stepper: Stepper) -> (Vec<Complex>, [Vec<Complex>; 4]) {
        let axpy = |x: &[Complex], a: f64, y: &[Complex]| -> Vec<Complex> {
            x.iter().zip(y).map(|(p, q)| p + q * a).collect()
        };
        match stepper {
            Stepper::Rk4 => {
                let k1 = self.full(uh);
                let u2 = axpy(uh, dt / 2.0, &k1);
                let k2 = self.full(&u2);
                let u3 = axpy(uh, dt / 2.0, &k2);
                let k3 = self.full(&u3);
                let u4 = axpy(uh, dt, &k3);
                let k4 = self.full(&u4);
                let next = (0..uh.len())
                    .map(|i| uh[i] + (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (dt / 6.0))
                    .collect();
                (next, [uh.to_vec(), u2, u3, u4])
            }
            Stepper::IntegratingFactor => {
                let half: Vec<Complex> = if self.linear {
                    self.symbols.iter().map(|s| (s * (dt / 2.0)).exp()).collect()
                } else {
                    vec![Complex::new(1.0, 0.0); uh.len()]
                };
                let n = uh.len();
                let k1 = self.quadratic(uh);
                let u2: Vec<Complex> = (0..n).map(|i| half[i] * (uh[i] + k1[i] * (dt / 2.0))).collect();
                let k2 = self.quadratic(&u2);
                let u3: Vec<Complex> = (0..n).map(|i| half[i] * uh[i] + k2[i] * (dt / 2.0)).collect();
                let k3 = self.quadratic(&u3);
                let u4: Vec<Complex> = (0..n)
                    .map(|i| half[i] * half[i] * uh[i] + half[i] * k3[i] * dt)
                    .collect();
                let k4 = self.quadratic(&u4);
                let next = (0..n)
                    .map(|i| {
                        let e = half[i];
                        e * e * uh[i] + (e * e * k1[i] + e * (k2[i] + k3[i]) * 2.0 + k4[i]) * (dt / 6.0)
                    })
                    .collect();
                (next, [uh.to_vec(), u2, u3, u4])
            }
        }
    }

    /// Spectrum of `N[u_x]`.
    fn n_of_derivative(&self, uh: &[Complex]) -> Vec<Complex> {
        uh.iter()
            .zip(&self.symbols)
            .zip(&self.ik)
            .map(|((u, s), k)| u * s * k)
            .collect()
    }

    fn row(&self, t: f64, uh: &[Complex]) -> TraceRow {
        let dx = self.grid.dx();
        let mut deriv = uh.to_vec();
        let u = inverse_real(uh);
        let z0 = dx * u.iter().map(|v| v * v).sum::<f64>();
        let mut z = [0.0; 3];
        let mut flux = [0.0; 3];
        let mut ux = Vec::new();
        for order in 0..3 {
            for (d, k) in deriv.iter_mut().zip(&self.ik) {
                *d *= k;
            }
            let vals = inverse_real(&deriv);
            z[order] = dx * vals.iter().map(|v| v * v).sum::<f64>();
            if order == 0 {
                ux = vals;
                flux[0] = dx * ux.iter().map(|v| v * v * v).sum::<f64>();
            } else {
                flux[order] = dx * ux.iter().zip(&vals).map(|(a, b)| a * b * b).sum::<f64>();
            }
        }
        let (mut m, mut big_m) = (f64::NEG_INFINITY, 0.0_f64);
        for v in &ux {
            m = m.max(-v);
            big_m = big_m.max(v.abs());
        }
        TraceRow {
            t,
            m,
            big_m,
            z0,
            z1: z[0],
            z2: z[1],
            z3: z[2],
            tail_ratio: tail_ratio_of(&self.grid, uh),
            dz1: -flux[0],
            dz2: -5.0 * flux[1],
            dz3: -7.0 * flux[2],
        }
    }

    fn sup_abs(&self, uh: &[Complex]) -> f64 {
        inverse_real(uh).iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// `−P[(P u)²]_x/2 + N[u]`.
pub fn rhs(u: &Field, model: &ModelSpec) -> Field {
    let dynamics = Dynamics::new(model, *u.grid());
    let mut uh = u.spectrum().to_vec();
    dynamics.project(&mut uh);
    let mut out = dynamics.quadratic(&uh);
    for ((o, s), c) in out.iter_mut().zip(&dynamics.symbols).zip(u.spectrum()) {
        *o += s * c;
    }
    Field::from_spectrum(*u.grid(), out).expect("same grid")
}

/// One step of size `dt` from `u` (projected onto the 2/3 band first).
pub fn step(u: &Field, dt: f64, model: &ModelSpec, stepper: Stepper) -> Field {
    step_with(&Dynamics::new(model, *u.grid()), u, dt, stepper)
}

pub fn step_with(dynamics: &Dynamics, u: &Field, dt: f64, stepper: Stepper) -> Field {
    let mut uh = u.spectrum().to_vec();
    dynamics.project(&mut uh);
    let (next, _) = dynamics.advance(&uh, dt, stepper);
    Field::from_spectrum(*u.grid(), next).expect("same grid")
}

/// Tracer positions and slopes sampled at one time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicSample {
    pub t: f64,
    pub m: f64,
    pub positions: Vec<f64>,
    /// `v = −u_x` along each curve.
    pub slopes: Vec<f64>,
    /// `N[u_x]` at each position.
    pub forcing: Vec<f64>,
    /// `‖N[u_x]‖∞` over the grid.
    pub forcing_sup: f64,
    /// Seeds that left the trusted interior and were frozen.
    pub frozen: Vec<bool>,
}

struct Tracers {
    seeds: Vec<f64>,
    positions: Vec<f64>,
    slopes: Vec<f64>,
    frozen: Vec<bool>,
    limit: f64,
}

impl Tracers {
    fn new(seeds: &[f64], uh: &[Complex], dynamics: &Dynamics, trust: f64) -> Result<Self> {
        let grid = dynamics.grid;
        let limit = trust * grid.half_width();
        let dxh: Vec<Complex> = uh.iter().zip(&dynamics.ik).map(|(u, k)| u * k).collect();
        let mut slopes = Vec::with_capacity(seeds.len());
        for &b in seeds {
            if !(b.abs() <= limit) {
                return Err(Error::InitialData(format!(
                    "characteristic seed {b} lies outside the trusted region |x| <= {limit}"
                )));
            }
            slopes.push(-interpolate_spectrum(&grid, &dxh, b));
        }
        Ok(Self {
            seeds: seeds.to_vec(),
            positions: seeds.to_vec(),
            slopes,
            frozen: vec![false; seeds.len()],
            limit,
        })
    }

    /// Fourth-order step driven by the four stage states of the field step.
    fn advance(&mut self, stages: &[Vec<Complex>; 4], dynamics: &Dynamics, dt: f64) {
        let grid = dynamics.grid;
        let forcing: Vec<Vec<Complex>> = stages.iter().map(|s| dynamics.n_of_derivative(s)).collect();
        let weights = [0.5, 0.5, 1.0];
        for j in 0..self.seeds.len() {
            if self.frozen[j] {
                continue;
            }
            let (x0, v0) = (self.positions[j], self.slopes[j]);
            let mut ks = [(0.0, 0.0); 4];
            let (mut x, mut v) = (x0, v0);
            for s in 0..4 {
                let vel = interpolate_spectrum(&grid, &stages[s], x);
                let f = interpolate_spectrum(&grid, &forcing[s], x);
                ks[s] = (vel, v * v - f);
                if s < 3 {
                    x = x0 + weights[s] * dt * ks[s].0;
                    v = v0 + weights[s] * dt * ks[s].1;
                }
            }
            let nx = x0 + dt / 6.0 * (ks[0].0 + 2.0 * ks[1].0 + 2.0 * ks[2].0 + ks[3].0);
            let nv = v0 + dt / 6.0 * (ks[0].1 + 2.0 * ks[1].1 + 2.0 * ks[2].1 + ks[3].1);
            if nx.abs() > self.limit {
                self.frozen[j] = true;
            } else {
                self.positions[j] = nx;
                self.slopes[j] = nv;
            }
        }
    }

    fn sample(&self, t: f64, m: f64, uh: &[Complex], dynamics: &Dynamics) -> CharacteristicSample {
        let nh = dynamics.n_of_derivative(uh);
        let forcing = self
            .positions
            .iter()
            .map(|&x| interpolate_spectrum(&dynamics.grid, &nh, x))
            .collect();
        CharacteristicSample {
            t,
            m,
            positions: self.positions.clone(),
            slopes: self.slopes.clone(),
            forcing,
            forcing_sup: dynamics.sup_abs(&nh),
            frozen: self.frozen.clone(),
        }
    }
}

fn prepare(config: &SimConfig, grid: GridSpec) -> Result<(Dynamics, Vec<Complex>, f64)> {
    config.validate()?;
    let field = config.initial.sample(grid)?;
    if !config.initial.is_periodic() {
        let v = field.values();
        let edge = v[0].abs().max(v[v.len() - 1].abs());
        if edge >= 1e-10 {
            return Err(Error::InitialData(format!(
                "|u| = {edge:e} at the box edge; enlarge the box (need < 1e-10)"
            )));
        }
    }
    let tail = field.tail_ratio();
    if tail > config.fit_tail {
        return Err(Error::InitialData(format!(
            "initial data unresolved on n = {}: tail ratio {tail:e} exceeds {}",
            grid.n(),
            config.fit_tail
        )));
    }
    let mut dynamics = Dynamics::new(&config.model, grid);
    if !config.nonlinear {
        dynamics = dynamics.without_nonlinearity();
    }
    let mut uh = field.spectrum().to_vec();
    dynamics.project(&mut uh);
    let m0 = dynamics.row(0.0, &uh).m;
    let max_time = match config.max_time {
        Some(t) => t,
        None if m0 > 0.0 => 10.0 / m0,
        None => {
            return Err(Error::Config(
                "initial slope is nowhere negative; set max_time explicitly".into(),
            ))
        }
    };
    Ok((dynamics, uh, max_time))
}

fn integrate_with(
    config: &SimConfig,
    grid: GridSpec,
    mut tracers: Option<(&[f64], f64)>,
) -> Result<(SimulationTrace, Vec<CharacteristicSample>)> {
    let (dynamics, mut uh, max_time) = prepare(config, grid)?;
    let mut tr = match tracers.take() {
        Some((seeds, trust)) => Some(Tracers::new(seeds, &uh, &dynamics, trust)?),
        None => None,
    };
    let dx = grid.dx();
    let mut t = 0.0;
    let mut rows = Vec::new();
    let mut samples = Vec::new();
    let mut steps = 0usize;
    let stop = loop {
        let row = dynamics.row(t, &uh);
        rows.push(row);
        if let Some(tr) = &tr {
            samples.push(tr.sample(t, row.m, &uh, &dynamics));
        }
        let m0 = rows[0].m;
        if row.tail_ratio > config.tail_stop {
            break StopReason::ResolutionLoss;
        }
        if m0 > 0.0 && row.m >= config.m_cap_factor * m0 {
            break StopReason::MCap;
        }
        if t >= max_time {
            break StopReason::MaxTime;
        }
        if steps >= config.max_steps {
            break StopReason::StepLimit;
        }
        let speed = dynamics.sup_abs(&uh).max(1e-12);
        let mut dt = config.cfl * dx / speed;
        if row.m > 0.0 {
            dt = dt.min(0.5 / row.m);
        }
        if config.stepper == Stepper::Rk4 && dynamics.linear && dynamics.max_symbol > 0.0 {
            dt = dt.min(2.0 / dynamics.max_symbol);
        }
        if t + dt > max_time {
            dt = max_time - t;
        }
        let (next, stages) = dynamics.advance(&uh, dt, config.stepper);
        if let Some(tr) = &mut tr {
            tr.advance(&stages, &dynamics, dt);
        }
        uh = next;
        // Land exactly on max_time when the last step was clipped.
        t = if t + dt >= max_time { max_time } else { t + dt };
        steps += 1;
    };
    Ok((
        SimulationTrace {
            rows,
            stop_reason: stop,
            grid,
            fit_tail: config.fit_tail,
        },
        samples,
    ))
}

/// Integrate on the configured grid only (no refinement).
pub fn integrate(config: &SimConfig) -> Result<SimulationTrace> {
    Ok(integrate_with(config, config.grid, None)?.0)
}

/// Integrate, refining the grid after premature resolution loss, and
/// extrapolate the breaking time.
pub fn run(config: &SimConfig) -> Result<(SimulationTrace, BreakingEstimate)> {
    let mut grid = config.grid;
    let trace = loop {
        let trace = integrate_with(config, grid, None)?.0;
        let early = trace.stop_reason == StopReason::ResolutionLoss && trace.growth() < config.min_growth;
        if early && grid.n() * 2 <= config.n_max {
            grid = GridSpec::new(grid.half_width(), grid.n() * 2)?;
            continue;
        }
        break trace;
    };
    let estimate = judge(&trace, config);
    Ok((trace, estimate))
}

fn judge(trace: &SimulationTrace, config: &SimConfig) -> BreakingEstimate {
    let growth = trace.growth();
    let n_used = trace.grid.n();
    match estimate_tstar(trace, config.fit_window) {
        Ok(mut e) => {
            let (valid, note) = match trace.stop_reason {
                StopReason::MCap => (true, None),
                StopReason::ResolutionLoss if growth >= config.min_growth => (
                    true,
                    Some(format!(
                        "resolution lost at m/m0 = {growth:.3} on n = {n_used}; estimate from the resolved part"
                    )),
                ),
                StopReason::ResolutionLoss => (
                    false,
                    Some(format!(
                        "resolution lost at m/m0 = {growth:.3} (< {}) with n = {n_used} at the ceiling",
                        config.min_growth
                    )),
                ),
                StopReason::MaxTime => (false, Some("max_time reached before breaking".into())),
                StopReason::StepLimit => (false, Some("step limit reached".into())),
            };
            e.valid = valid;
            e.note = note;
            e.growth = growth;
            e.n_used = n_used;
            e
        }
        Err(err) => BreakingEstimate {
            t_star_est: f64::NAN,
            stop_reason: trace.stop_reason,
            fit_slope: f64::NAN,
            fit_quality: f64::NAN,
            valid: false,
            growth,
            n_used,
            note: Some(err.to_string()),
        },
    }
}

/// Least-squares line through `(t, 1/m)` over the last `window` resolved
/// rows; its root, floored at the last fitted time, estimates `T*`.
pub fn estimate_tstar(trace: &SimulationTrace, window: usize) -> Result<BreakingEstimate> {
    let rows = trace.resolved_rows(trace.fit_tail);
    if rows.len() < 5 {
        return Err(Error::NoEstimate(format!(
            "only {} resolved rows (need at least 5)",
            rows.len()
        )));
    }
    let take = window.max(5).min(rows.len());
    let tail = &rows[rows.len() - take..];
    if tail.windows(2).any(|w| !(w[1].m > w[0].m)) || tail[0].m <= 0.0 {
        return Err(Error::NoEstimate(
            "m is not positive and strictly increasing over the fit window".into(),
        ));
    }
    let k = take as f64;
    let (mut st, mut sy, mut stt, mut sty) = (0.0, 0.0, 0.0, 0.0);
    for r in tail {
        let y = 1.0 / r.m;
        st += r.t;
        sy += y;
        stt += r.t * r.t;
        sty += r.t * y;
    }
    let tm = st / k;
    let ym = sy / k;
    let sxx = stt - k * tm * tm;
    let sxy = sty - k * tm * ym;
    if !(sxx > 0.0) {
        return Err(Error::NoEstimate("fit window spans no time".into()));
    }
    let slope = sxy / sxx;
    let intercept = ym - slope * tm;
    if !(slope < 0.0) {
        return Err(Error::NoEstimate(format!("1/m is not decreasing (slope {slope})")));
    }
    let (mut ss_res, mut ss_tot) = (0.0, 0.0);
    for r in tail {
        let y = 1.0 / r.m;
        ss_res += (y - (intercept + slope * r.t)).powi(2);
        ss_tot += (y - ym).powi(2);
    }
    let quality = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    let root = -intercept / slope;
    let last = tail[take - 1].t;
    Ok(BreakingEstimate {
        t_star_est: root.max(last),
        stop_reason: trace.stop_reason,
        fit_slope: slope,
        fit_quality: quality,
        valid: true,
        growth: trace.growth(),
        n_used: trace.grid.n(),
        note: None,
    })
}

/// Integrate on the configured grid while carrying characteristics from
/// `seeds`; seeds leaving `|x| ≤ trust·L` are frozen.
pub fn track_characteristics(
    config: &SimConfig,
    seeds: &[f64],
    trust: f64,
) -> Result<(SimulationTrace, Vec<CharacteristicSample>)> {
    if !(trust > 0.0 && trust <= 1.0) {
        return Err(Error::Config(format!("trust fraction must lie in (0, 1], got {trust}")));
    }
    integrate_with(config, config.grid, Some((seeds, trust)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn max_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn rhs_of_single_mode() {
        let g = GridSpec::new(PI, 128).unwrap();
        let u = Field::from_fn(g, |x| x.sin());
        let r = rhs(&u, &ModelSpec::burgers());
        // −u·u_x = −sin·cos = −sin(2x)/2.
        let exact: Vec<f64> = g.points().iter().map(|x| -(2.0 * x).sin() / 2.0).collect();
        assert!(max_diff(r.values(), &exact) < 1e-10);
        assert!(rhs(&Field::zeros(g), &ModelSpec::whitham()).sup_norm() == 0.0);
    }

    #[test]
    fn rhs_is_orthogonal_to_state() {
        let g = GridSpec::new(20.0, 512).unwrap();
        let u = Field::from_fn(g, |x| (1.0 + 0.5 * x) * (-x * x / 3.0).exp()).dealias();
        for model in [
            ModelSpec::burgers(),
            ModelSpec::whitham(),
            ModelSpec::fornberg_whitham(0.8).unwrap(),
        ] {
            let r = rhs(&u, &model);
            let scale = r.l2_norm() * u.l2_norm();
            assert!(r.inner(&u).abs() <= 1e-10 * scale, "{}", model.label());
        }
    }

    #[test]
    fn zero_step_is_identity() {
        let g = GridSpec::new(20.0, 256).unwrap();
        let u = Field::from_fn(g, |x| -x * (-x * x / 2.0).exp());
        for s in [Stepper::Rk4, Stepper::IntegratingFactor] {
            let v = step(&u, 0.0, &ModelSpec::whitham(), s);
            assert!(max_diff(v.values(), u.values()) < 1e-14);
        }
    }

    #[test]
    fn integrating_factor_is_exact_for_linear_flow() {
        let g = GridSpec::new(20.0, 256).unwrap();
        let model = ModelSpec::whitham();
        let u = Field::from_fn(g, |x| (-x * x / 2.0).exp()).dealias();
        let dynamics = Dynamics::new(&model, g).without_nonlinearity();
        let dt = 0.7;
        let v = step_with(&dynamics, &u, dt, Stepper::IntegratingFactor);
        let table = model.symbol_table(&g);
        let exact = u.map_spectrum(|_, i| (table[i] * dt).exp());
        assert!(max_diff(v.values(), exact.values()) < 1e-13);
    }

    #[test]
    fn fourth_order_convergence() {
        let g = GridSpec::new(PI, 128).unwrap();
        let u0 = Field::from_fn(g, |x| -0.5 * x.sin()).dealias();
        let model = ModelSpec::burgers();
        let solve = |dt: f64, steps: usize| {
            let mut u = u0.clone();
            for _ in 0..steps {
                u = step(&u, dt, &model, Stepper::Rk4);
            }
            u
        };
        let t = 0.8;
        let reference = solve(t / 320.0, 320);
        let e1 = max_diff(solve(t / 20.0, 20).values(), reference.values());
        let e2 = max_diff(solve(t / 40.0, 40).values(), reference.values());
        let ratio = e1 / e2;
        assert!(ratio > 12.0 && ratio < 20.0, "ratio {ratio}");
    }

    fn synthetic(ts: &[f64], m: impl Fn(f64) -> f64) -> SimulationTrace {
        SimulationTrace {
            rows: ts
                .iter()
                .map(|&t| TraceRow {
                    t,
                    m: m(t),
                    big_m: m(t),
                    z0: 1.0,
                    z1: 1.0,
                    z2: 1.0,
                    z3: 1.0,
                    tail_ratio: 0.0,
                    dz1: 0.0,
                    dz2: 0.0,
                    dz3: 0.0,
                })
                .collect(),
            stop_reason: StopReason::MCap,
            grid: GridSpec::new(1.0, 16).unwrap(),
            fit_tail: 1e-10,
        }
    }

    #[test]
    fn riccati_extrapolation() {
        let m0 = 2.0;
        let ts: Vec<f64> = (0..40).map(|i| 0.45 * i as f64 / 39.0).collect();
        let e = estimate_tstar(&synthetic(&ts, |t| m0 / (1.0 - m0 * t)), 20).unwrap();
        assert!((e.t_star_est - 0.5).abs() < 1e-10);
        assert!((e.fit_slope + 1.0).abs() < 1e-10);

        let theta = 0.2;
        let e = estimate_tstar(&synthetic(&ts, |t| m0 / (1.0 - (1.0 - theta) * m0 * t)), 20).unwrap();
        assert!((e.t_star_est - 1.0 / ((1.0 - theta) * m0)).abs() < 1e-10);
    }

    #[test]
    fn noisy_riccati_extrapolation() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let noise: Vec<f64> = (0..40).map(|_| rng.gen_range(-0.01..0.01)).collect();
        let ts: Vec<f64> = (0..40).map(|i| 0.9 * i as f64 / 39.0).collect();
        let trace = synthetic(&ts, |t| {
            let i = ts.iter().position(|&s| s == t).unwrap();
            (1.0 + noise[i]) / (1.0 - t)
        });
        let e = estimate_tstar(&trace, 20).unwrap();
        assert!((e.t_star_est - 1.0).abs() < 0.02);
    }

    #[test]
    fn estimate_requires_growth() {
        let ts: Vec<f64> = (0..10).map(|i| i as f64).collect();
        assert!(estimate_tstar(&synthetic(&ts, |_| 1.0), 5).is_err());
        assert!(estimate_tstar(&synthetic(&ts[..3], |t| 1.0 + t), 5).is_err());
    }

    #[test]
    fn rejects_bad_initial_data() {
        let g = GridSpec::new(3.0, 256).unwrap();
        let cfg = SimConfig::new(ModelSpec::burgers(), g, InitialData::gaussian_slope(1.0));
        assert!(matches!(run(&cfg), Err(Error::InitialData(_))));
        let g = GridSpec::new(20.0, 64).unwrap();
        let cfg = SimConfig::new(
            ModelSpec::burgers(),
            g,
            InitialData::GaussianSlope {
                amplitude: 1.0,
                width: 0.2,
            },
        );
        assert!(matches!(run(&cfg), Err(Error::InitialData(_))));
        let mut cfg = SimConfig::new(ModelSpec::burgers(), g, InitialData::gaussian_slope(1.0));
        cfg.cfl = 1.5;
        assert!(matches!(run(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn burgers_sine_breaks_at_one() {
        let g = GridSpec::new(PI, 512).unwrap();
        let cfg = SimConfig::new(ModelSpec::burgers(), g, InitialData::Sine { amplitude: 1.0 });
        let (trace, est) = run(&cfg).unwrap();
        assert!(est.valid, "{est:?}");
        assert!((est.t_star_est - 1.0).abs() < 0.02, "{est:?}");
        for r in &trace.rows {
            assert!(r.m <= r.big_m);
        }
        assert!(trace.rows.windows(2).all(|w| w[1].t > w[0].t));
    }

    #[test]
    fn burgers_scaling_halves_breaking_time() {
        let g = GridSpec::new(PI, 1024).unwrap();
        let t = |a: f64| {
            let cfg = SimConfig::new(ModelSpec::burgers(), g, InitialData::Sine { amplitude: a });
            run(&cfg).unwrap().1.t_star_est
        };
        let (t1, t2) = (t(1.0), t(2.0));
        assert!((t2 / t1 - 0.5).abs() < 1e-3, "{t1} {t2}");
    }

    #[test]
    fn burgers_characteristics_follow_riccati() {
        let g = GridSpec::new(PI, 1024).unwrap();
        let mut cfg = SimConfig::new(ModelSpec::burgers(), g, InitialData::Sine { amplitude: 1.0 });
        cfg.max_time = Some(0.8);
        let seeds: Vec<f64> = (0..16).map(|j| 0.2 * (j as f64 - 8.0)).collect();
        let (trace, samples) = track_characteristics(&cfg, &seeds, 0.95).unwrap();
        assert_eq!(samples.len(), trace.rows.len());
        let first = &samples[0];
        for s in &samples {
            for j in 0..seeds.len() {
                let v0 = first.slopes[j];
                let exact = v0 / (1.0 - s.t * v0);
                assert!((s.slopes[j] - exact).abs() <= 1e-4 * exact.abs().max(1.0));
            }
        }
        // The seed at the origin carries the steepest slope.
        for s in &samples {
            let top = s.slopes.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            assert!((top - s.m).abs() <= 1e-3 * s.m);
        }
    }

    #[test]
    fn max_time_stop() {
        let g = GridSpec::new(PI, 256).unwrap();
        let mut cfg = SimConfig::new(ModelSpec::burgers(), g, InitialData::Sine { amplitude: 1.0 });
        cfg.max_time = Some(0.3);
        let (trace, est) = run(&cfg).unwrap();
        assert_eq!(trace.stop_reason, StopReason::MaxTime);
        assert_eq!(trace.rows.last().unwrap().t, 0.3);
        assert!(!est.valid);
    }
}
