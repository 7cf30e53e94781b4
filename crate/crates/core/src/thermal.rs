//! Canonical-ensemble averaging over initial occupations of `N` fermions.
//!
//! A configuration occupies levels `m(1) < .. < m(N)` of the initial trap with
//! weight `exp(-sum_j (E_m(j) - E_j) / tau) / Z`. The (in principle infinite)
//! set is truncated at an excitation energy `E_cut`, grown until the
//! estimated omitted weight drops below a tail bound.

use crate::error::{Error, Result};
use crate::fidelity::{fidelity_of_rows, FidelityResult, Method};
use crate::potentials::PotentialSchedule;
use crate::propagator::PropagationSettings;
use crate::scenario::{Evolution, Numerics, Scenario};

pub const DEFAULT_TAIL_BOUND: f64 = 1e-6;
/// Refuse to enumerate ensembles larger than this.
pub const MAX_CONFIGS: usize = 5_000_000;

/// Occupied levels (0-based, strictly increasing) and their excitation energy
/// above the ground configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupationConfig {
    levels: Vec<usize>,
    excitation_energy: f64,
}

impl OccupationConfig {
    pub fn levels(&self) -> &[usize] {
        &self.levels
    }

    pub fn excitation_energy(&self) -> f64 {
        self.excitation_energy
    }

    pub fn is_ground(&self) -> bool {
        self.levels.iter().enumerate().all(|(j, &m)| j == m)
    }
}

/// Whether the supplied energies are the whole spectrum or only its lowest part.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumExtent {
    /// More levels exist above the list; their weight is estimated and must
    /// fit in the tail bound.
    Open,
    /// The listed levels are all there is.
    Closed,
}

#[derive(Debug, Clone)]
pub struct ThermalEnsemble {
    tau: f64,
    configs: Vec<OccupationConfig>,
    weights: Vec<f64>,
    partition_sum: f64,
    e_cut: f64,
    levels_needed: usize,
    omitted_weight: f64,
}

impl ThermalEnsemble {
    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn configs(&self) -> &[OccupationConfig] {
        &self.configs
    }

    /// Probabilities `p_m`, renormalized over the enumerated set.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `Z` over the enumerated configurations, relative to the ground
    /// configuration's Boltzmann factor.
    pub fn partition_sum(&self) -> f64 {
        self.partition_sum
    }

    pub fn e_cut(&self) -> f64 {
        self.e_cut
    }

    /// Number of lowest levels touched by any configuration (`M_max`).
    pub fn levels_needed(&self) -> usize {
        self.levels_needed
    }

    /// Estimated Boltzmann weight fraction left out by the truncation.
    pub fn omitted_weight(&self) -> f64 {
        self.omitted_weight
    }

    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// `ln Z` over every `n`-particle configuration of the listed levels,
/// relative to the ground configuration.
fn log_partition_of_list(energies: &[f64], n: usize, beta: f64) -> f64 {
    let mut log_z = vec![f64::NEG_INFINITY; n + 1];
    log_z[0] = 0.0;
    for (l, &e) in energies.iter().enumerate() {
        for k in (1..=n.min(l + 1)).rev() {
            log_z[k] = log_add_exp(log_z[k], log_z[k - 1] - beta * e);
        }
    }
    let ground: f64 = energies[..n].iter().sum();
    log_z[n] + beta * ground
}

/// Depth-first enumeration of configurations with excitation `<= e_cut`.
fn enumerate_below(energies: &[f64], n: usize, e_cut: f64) -> Result<Vec<OccupationConfig>> {
    let len = energies.len();
    let mut prefix = vec![0.0; len + 1];
    for (i, e) in energies.iter().enumerate() {
        prefix[i + 1] = prefix[i] + e;
    }
    // cheapest completion when position j sits at level l: positions j+1..n
    // at l+1..; excess over the ground levels j+1..n
    let rest = |j: usize, l: usize| -> f64 {
        let k = n - 1 - j;
        (prefix[l + 1 + k] - prefix[l + 1]) - (prefix[j + 1 + k] - prefix[j + 1])
    };
    let slack = 1e-12 * e_cut.abs().max(1.0);
    #[allow(clippy::too_many_arguments)]
    fn walk(
        j: usize,
        start: usize,
        partial: f64,
        ctx: &mut (Vec<usize>, Vec<OccupationConfig>),
        energies: &[f64],
        n: usize,
        limit: f64,
        rest: &dyn Fn(usize, usize) -> f64,
    ) -> Result<()> {
        let len = energies.len();
        for l in start..=(len - (n - j)) {
            let here = partial + (energies[l] - energies[j]);
            if here + rest(j, l) > limit {
                break;
            }
            ctx.0.push(l);
            if j + 1 == n {
                if ctx.1.len() >= MAX_CONFIGS {
                    return Err(Error::InvalidInput(format!(
                        "thermal ensemble exceeds {MAX_CONFIGS} configurations"
                    )));
                }
                ctx.1.push(OccupationConfig {
                    levels: ctx.0.clone(),
                    excitation_energy: here.max(0.0),
                });
            } else {
                walk(j + 1, l + 1, here, ctx, energies, n, limit, rest)?;
            }
            ctx.0.pop();
        }
        Ok(())
    }

    let mut ctx = (Vec::with_capacity(n), Vec::new());
    if len >= n {
        walk(0, 0, 0.0, &mut ctx, energies, n, e_cut + slack, &rest)?;
    }
    Ok(ctx.1)
}

fn validate(energies: &[f64], n: usize, tau: f64, tail_bound: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidInput("need at least one particle".into()));
    }
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(Error::InvalidInput(format!("tau = {tau} must be >= 0")));
    }
    if !(tail_bound > 0.0 && tail_bound < 1.0) {
        return Err(Error::InvalidInput(format!(
            "tail bound {tail_bound} must lie in (0, 1)"
        )));
    }
    if energies.len() < n {
        return Err(Error::NeedsMoreLevels {
            required: n,
            available: energies.len(),
        });
    }
    if energies.iter().any(|e| !e.is_finite()) || energies.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidInput(
            "energies must be finite and ascending".into(),
        ));
    }
    Ok(())
}

fn ground_only(energies: &[f64], n: usize, tau: f64) -> ThermalEnsemble {
    ThermalEnsemble {
        tau,
        configs: vec![OccupationConfig {
            levels: (0..n).collect(),
            excitation_energy: 0.0,
        }],
        weights: vec![1.0],
        partition_sum: 1.0,
        e_cut: 0.0,
        levels_needed: n.min(energies.len()),
        omitted_weight: 0.0,
    }
}

/// Canonical ensemble of `n` fermions over the lowest part of an open
/// spectrum, truncated so the estimated omitted weight is below `tail_bound`.
pub fn enumerate_ensemble(
    energies: &[f64],
    n: usize,
    tau: f64,
    tail_bound: f64,
) -> Result<ThermalEnsemble> {
    enumerate_with_extent(energies, n, tau, tail_bound, SpectrumExtent::Open)
}

pub fn enumerate_with_extent(
    energies: &[f64],
    n: usize,
    tau: f64,
    tail_bound: f64,
    extent: SpectrumExtent,
) -> Result<ThermalEnsemble> {
    validate(energies, n, tau, tail_bound)?;
    if tau == 0.0 || energies.len() == n && extent == SpectrumExtent::Closed {
        let mut e = ground_only(energies, n, tau);
        if tau > 0.0 {
            e.e_cut = f64::INFINITY;
        }
        return Ok(e);
    }
    let beta = 1.0 / tau;
    let len = energies.len();
    let fermi = energies[n - 1];

    // weight carried by levels above the list, extrapolated with the last spacing
    let beyond = match extent {
        SpectrumExtent::Closed => 0.0,
        SpectrumExtent::Open => {
            let spacing = if len >= 2 {
                (energies[len - 1] - energies[len - 2]).max(f64::MIN_POSITIVE)
            } else {
                return Err(Error::NeedsMoreLevels {
                    required: n + 1,
                    available: len,
                });
            };
            let tail = |top: f64| {
                (-beta * (top + spacing - fermi)).exp() / (1.0 - (-beta * spacing).exp())
            };
            let budget = 0.5 * tail_bound;
            if tail(energies[len - 1]) >= budget {
                let mut extra = 1;
                while tail(energies[len - 1] + extra as f64 * spacing) >= budget {
                    extra += 1;
                }
                return Err(Error::NeedsMoreLevels {
                    required: len + extra,
                    available: len,
                });
            }
            tail(energies[len - 1])
        }
    };

    let log_z_list = log_partition_of_list(energies, n, beta);
    let widest: f64 = energies[len - n..].iter().sum::<f64>() - energies[..n].iter().sum::<f64>();
    let mut e_cut = tau * (1.0 / tail_bound).ln();
    loop {
        let configs = enumerate_below(energies, n, e_cut)?;
        let mut z = CompensatedSum::default();
        for c in &configs {
            z.add((-beta * c.excitation_energy).exp());
        }
        let z_enum = z.value();
        let inside = (1.0 - (z_enum.ln() - log_z_list).exp()).max(0.0);
        let omitted = inside + beyond;
        let all_listed = inside == 0.0 || e_cut >= widest;
        if omitted < tail_bound || all_listed {
            let weights = configs
                .iter()
                .map(|c| (-beta * c.excitation_energy).exp() / z_enum)
                .collect();
            let levels_needed = configs
                .iter()
                .map(|c| c.levels[n - 1] + 1)
                .max()
                .unwrap_or(n);
            return Ok(ThermalEnsemble {
                tau,
                configs,
                weights,
                partition_sum: z_enum,
                e_cut,
                levels_needed,
                omitted_weight: omitted,
            });
        }
        e_cut += tau.max(1e-3 * e_cut);
    }
}

/// Ensemble-averaged fidelity `sum_m p_m F_m` together with the spread of the
/// configuration fidelities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalFidelity {
    pub result: FidelityResult,
    pub min_config: f64,
    pub max_config: f64,
    pub configs: usize,
    pub levels_needed: usize,
}

/// Averages configuration fidelities read from the master overlap matrix of
/// an evolution covering at least `ensemble.levels_needed()` levels.
pub fn average_fidelity(
    evolution: &Evolution,
    ensemble: &ThermalEnsemble,
    n_p: usize,
) -> Result<ThermalFidelity> {
    let master = evolution.overlaps();
    if ensemble.levels_needed() > master.n() {
        return Err(Error::NeedsMoreLevels {
            required: ensemble.levels_needed(),
            available: master.n(),
        });
    }
    let n = ensemble.configs()[0].levels().len();
    if n_p > n || n_p > master.n_p() {
        return Err(Error::InvalidInput(format!(
            "N_p = {n_p} with N = {n} particles and {} targets",
            master.n_p()
        )));
    }
    let mut total = CompensatedSum::default();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (config, &p) in ensemble.configs().iter().zip(ensemble.weights()) {
        let f = fidelity_of_rows(master, config.levels(), n_p)?;
        lo = lo.min(f);
        hi = hi.max(f);
        total.add(p * f);
    }
    let value = total.value().clamp(lo.min(1.0), hi.max(0.0));
    Ok(ThermalFidelity {
        result: FidelityResult {
            value,
            method: Method::GramDeterminant,
            n,
            n_p,
            n_b: n - n_p,
        },
        min_config: lo,
        max_config: hi,
        configs: ensemble.len(),
        levels_needed: ensemble.levels_needed(),
    })
}

/// Ensembles for several `(N, tau)` pairs from one list of initial-trap
/// energies, lengthened until every tail bound is met.
pub fn ensembles_for(
    scenario: &mut Scenario,
    requests: &[(usize, f64)],
    tail_bound: f64,
) -> Result<Vec<ThermalEnsemble>> {
    let limit = scenario.numerics().grid.n_points() / 4 - 1;
    let n_max = requests.iter().map(|r| r.0).max().unwrap_or(1);
    let mut count = (n_max + 16).min(limit);
    'grow: loop {
        let energies = scenario.initial_energies(count)?;
        let mut out = Vec::with_capacity(requests.len());
        for &(n, tau) in requests {
            match enumerate_ensemble(&energies, n, tau, tail_bound) {
                Err(Error::NeedsMoreLevels { required, .. }) if count < limit => {
                    count = (required + 4).max(count + 8).min(limit);
                    continue 'grow;
                }
                other => out.push(other?),
            }
        }
        return Ok(out);
    }
}

/// Finite-temperature fidelity of one scenario with default numerics.
pub fn thermal_fidelity(
    schedule: &PotentialSchedule,
    n_p: usize,
    n_b: usize,
    tau: f64,
    settings: &PropagationSettings,
) -> Result<FidelityResult> {
    thermal_fidelity_with(schedule, n_p, n_b, tau, DEFAULT_TAIL_BOUND, settings)
}

pub fn thermal_fidelity_with(
    schedule: &PotentialSchedule,
    n_p: usize,
    n_b: usize,
    tau: f64,
    tail_bound: f64,
    settings: &PropagationSettings,
) -> Result<FidelityResult> {
    let n = n_p + n_b;
    if n == 0 {
        return Err(Error::InvalidInput("N_p + N_b must be at least 1".into()));
    }
    let mut numerics = Numerics::default_for(schedule.task());
    numerics.settings = *settings;
    let mut scenario = Scenario::new(*schedule.task(), schedule.shape(), numerics);
    let ensemble = ensembles_for(&mut scenario, &[(n, tau)], tail_bound)?.remove(0);
    let evolution = scenario.evolve(
        schedule.total_time(),
        ensemble.levels_needed().max(n),
        n_p.max(1),
    )?;
    Ok(average_fidelity(&evolution, &ensemble, n_p)?.result)
}
