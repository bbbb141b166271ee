use std::fmt;

/// One line of the energy budget, all quantities averaged over `x3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LedgerRow {
    pub t: f64,
    pub kinetic: f64,
    pub dissipation: f64,
    pub boundary: f64,
    pub budget_slack: f64,
}

/// Running energy budget `kinetic + dissipation + boundary <= initial_energy`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyLedger {
    pub initial_energy: f64,
    pub rows: Vec<LedgerRow>,
    dissipation: f64,
    boundary: f64,
}

impl EnergyLedger {
    pub fn new(initial_energy: f64) -> Self {
        Self {
            initial_energy,
            rows: Vec::new(),
            dissipation: 0.0,
            boundary: 0.0,
        }
    }

    pub fn record(&mut self, t: f64, kinetic: f64, dissipation_inc: f64, boundary_inc: f64) -> LedgerRow {
        self.dissipation += dissipation_inc;
        self.boundary += boundary_inc;
        let row = LedgerRow {
            t,
            kinetic,
            dissipation: self.dissipation,
            boundary: self.boundary,
            budget_slack: self.initial_energy - (kinetic + self.dissipation + self.boundary),
        };
        self.rows.push(row);
        row
    }

    /// Smallest slack relative to the initial energy; negative means a violation.
    pub fn min_relative_slack(&self) -> f64 {
        let scale = self.initial_energy.abs().max(f64::MIN_POSITIVE);
        self.rows.iter().map(|r| r.budget_slack / scale).fold(f64::INFINITY, f64::min)
    }

    /// Every row satisfies the budget up to `rtol * initial_energy`.
    pub fn holds(&self, rtol: f64) -> bool {
        self.rows
            .iter()
            .all(|r| r.kinetic + r.dissipation + r.boundary <= self.initial_energy * (1.0 + rtol))
    }
}

impl fmt::Display for LedgerRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "t={:.6} kinetic={:.6e} dissipation={:.6e} boundary={:.6e} slack={:.6e}",
            self.t, self.kinetic, self.dissipation, self.boundary, self.budget_slack
        )
    }
}
