//! Back-of-the-envelope monetisation of mean travel-time savings.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MonetiseError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonetisationInput {
    /// Mean change per trip in seconds; its absolute value is used.
    pub mean_dt_s: f64,
    pub trips_per_year: f64,
    /// Value of time, euro per hour.
    pub vot_per_h: f64,
    /// Discount rate per year.
    pub r: f64,
    /// Horizon in years.
    pub n: u32,
    /// Operations and maintenance, euro per year.
    pub om_per_year: f64,
}

impl MonetisationInput {
    pub fn validate(&self) -> Result<(), MonetiseError> {
        let bad = |m: &str| Err(MonetiseError::InvalidInput(m.into()));
        if !self.mean_dt_s.is_finite() {
            return bad("mean_dt must be finite");
        }
        if !(self.trips_per_year.is_finite() && self.trips_per_year > 0.0) {
            return bad("trips per year must be positive");
        }
        if !(self.vot_per_h.is_finite() && self.vot_per_h >= 0.0) {
            return bad("value of time must be non-negative");
        }
        if !(self.r.is_finite() && self.r > 0.0) {
            return bad("discount rate must be positive");
        }
        if self.n < 1 {
            return bad("horizon must be at least one year");
        }
        if !(self.om_per_year.is_finite() && self.om_per_year >= 0.0) {
            return bad("O&M must be non-negative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonetisationResult {
    /// Euro per year.
    pub benefit: f64,
    pub crf: f64,
    /// Euro; negative when the benefit does not cover O&M.
    pub capex_star: f64,
}

impl MonetisationResult {
    pub fn benefit_below_om(&self) -> bool {
        self.capex_star < 0.0
    }
}

/// Euro per year saved: `|dt| * trips * vot / 3600`.
pub fn annual_benefit(mean_dt_s: f64, trips_per_year: f64, vot_per_h: f64) -> f64 {
    mean_dt_s.abs() * trips_per_year * vot_per_h / 3600.0
}

/// Capital-recovery factor `r / (1 - (1 + r)^-n)`.
pub fn crf(r: f64, n: u32) -> f64 {
    r / (1.0 - (1.0 + r).powi(-(n as i32)))
}

/// Capital cost the net annual benefit can service.
pub fn breakeven_capex(benefit: f64, om: f64, crf: f64) -> f64 {
    (benefit - om) / crf
}

pub fn monetise(input: &MonetisationInput) -> Result<MonetisationResult, MonetiseError> {
    input.validate()?;
    let benefit = annual_benefit(input.mean_dt_s, input.trips_per_year, input.vot_per_h);
    let f = crf(input.r, input.n);
    Ok(MonetisationResult {
        benefit,
        crf: f,
        capex_star: breakeven_capex(benefit, input.om_per_year, f),
    })
}

/// Parameter grids for the three sensitivity tables.
#[derive(Debug, Clone, PartialEq)]
pub struct AppendixGrids {
    /// `(label, |mean dt| seconds)`
    pub scenarios: Vec<(String, f64)>,
    /// Millions of trips per year.
    pub trips_m: Vec<f64>,
    pub vots: Vec<f64>,
    pub crf_rates: Vec<f64>,
    pub crf_horizons: Vec<u32>,
    pub capex_rates: Vec<f64>,
    pub capex_horizon: u32,
    /// Annual benefits in million euro, as printed in the benefit table.
    pub capex_benefits_m: Vec<f64>,
    /// O&M in million euro per year.
    pub capex_om_m: Vec<f64>,
}

impl Default for AppendixGrids {
    fn default() -> Self {
        Self {
            scenarios: vec![("Partial".into(), 16.5), ("Full".into(), 36.1)],
            trips_m: vec![400.0, 500.0],
            vots: vec![12.0, 15.0],
            crf_rates: vec![0.03, 0.04, 0.05],
            crf_horizons: vec![30, 40, 50],
            capex_rates: vec![0.03, 0.04, 0.05],
            capex_horizon: 40,
            capex_benefits_m: vec![60.2, 75.2],
            capex_om_m: vec![0.0, 40.0, 60.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenefitRow {
    pub scenario: String,
    pub mean_dt_s: f64,
    pub trips_m: f64,
    pub vot: f64,
    pub benefit_m: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrfCell {
    pub r: f64,
    pub n: u32,
    pub crf: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CapexCell {
    pub r: f64,
    pub n: u32,
    pub benefit_m: f64,
    pub om_m: f64,
    pub capex_bn: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AppendixTables {
    pub benefits: Vec<BenefitRow>,
    pub crf: Vec<CrfCell>,
    pub capex: Vec<CapexCell>,
}

pub fn appendix_tables(g: &AppendixGrids) -> AppendixTables {
    let mut benefits = Vec::new();
    for (label, dt) in &g.scenarios {
        for &q in &g.trips_m {
            for &vot in &g.vots {
                benefits.push(BenefitRow {
                    scenario: label.clone(),
                    mean_dt_s: *dt,
                    trips_m: q,
                    vot,
                    benefit_m: annual_benefit(*dt, q * 1e6, vot) / 1e6,
                });
            }
        }
    }
    let mut crf_cells = Vec::new();
    for &r in &g.crf_rates {
        for &n in &g.crf_horizons {
            crf_cells.push(CrfCell { r, n, crf: crf(r, n) });
        }
    }
    let mut capex = Vec::new();
    for &r in &g.capex_rates {
        let f = crf(r, g.capex_horizon);
        for &b in &g.capex_benefits_m {
            for &om in &g.capex_om_m {
                capex.push(CapexCell {
                    r,
                    n: g.capex_horizon,
                    benefit_m: b,
                    om_m: om,
                    capex_bn: breakeven_capex(b * 1e6, om * 1e6, f) / 1e9,
                });
            }
        }
    }
    AppendixTables {
        benefits,
        crf: crf_cells,
        capex,
    }
}

impl AppendixTables {
    pub const BENEFIT_HEADER: [&'static str; 5] = ["scenario", "mean_dt_s", "trips_m_per_year", "vot_eur_per_h", "benefit_meur_per_year"];
    pub const CRF_HEADER: [&'static str; 3] = ["r", "n", "crf"];
    pub const CAPEX_HEADER: [&'static str; 5] = ["r", "n", "benefit_meur_per_year", "om_meur_per_year", "capex_star_bneur"];

    /// Rows rounded to one decimal (million euro).
    pub fn benefit_records(&self) -> Vec<Vec<String>> {
        self.benefits
            .iter()
            .map(|b| vec![b.scenario.clone(), b.mean_dt_s.to_string(), b.trips_m.to_string(), b.vot.to_string(), format!("{:.1}", b.benefit_m)])
            .collect()
    }

    /// Rows rounded to six decimals.
    pub fn crf_records(&self) -> Vec<Vec<String>> {
        self.crf
            .iter()
            .map(|c| vec![c.r.to_string(), c.n.to_string(), format!("{:.6}", c.crf)])
            .collect()
    }

    /// Rows rounded to three decimals (billion euro).
    pub fn capex_records(&self) -> Vec<Vec<String>> {
        self.capex
            .iter()
            .map(|c| {
                vec![
                    c.r.to_string(),
                    c.n.to_string(),
                    c.benefit_m.to_string(),
                    c.om_m.to_string(),
                    format!("{:.3}", c.capex_bn),
                ]
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_values() {
        assert!((annual_benefit(16.5, 400e6, 12.0) / 1e6 - 22.0).abs() < 0.05);
        assert!((annual_benefit(36.1, 500e6, 15.0) / 1e6 - 75.2).abs() < 0.05);
        assert_eq!(annual_benefit(0.0, 400e6, 12.0), 0.0);
        assert_eq!(annual_benefit(-16.5, 400e6, 12.0), annual_benefit(16.5, 400e6, 12.0));
    }

    #[test]
    fn crf_values() {
        assert!((crf(0.04, 40) - 0.050523).abs() < 5e-7);
        assert!((crf(0.03, 30) - 0.051019).abs() < 5e-7);
        assert!((crf(0.07, 1) - 1.07).abs() < 1e-12);
    }

    #[test]
    fn capex_values() {
        assert!((breakeven_capex(75.2e6, 40e6, 0.050523) / 1e9 - 0.697).abs() < 0.001);
        assert!((breakeven_capex(60.2e6, 0.0, 0.050523) / 1e9 - 1.192).abs() < 0.001);
        assert_eq!(breakeven_capex(5e6, 5e6, 0.05), 0.0);
    }

    #[test]
    fn below_om_is_flagged() {
        let r = monetise(&MonetisationInput {
            mean_dt_s: -1.0,
            trips_per_year: 1e6,
            vot_per_h: 12.0,
            r: 0.04,
            n: 40,
            om_per_year: 1e6,
        })
        .unwrap();
        assert!(r.benefit_below_om());
    }

    #[test]
    fn invalid_inputs() {
        let ok = MonetisationInput {
            mean_dt_s: 10.0,
            trips_per_year: 1.0,
            vot_per_h: 1.0,
            r: 0.01,
            n: 1,
            om_per_year: 0.0,
        };
        assert!(monetise(&ok).is_ok());
        assert!(monetise(&MonetisationInput { r: 0.0, ..ok }).is_err());
        assert!(monetise(&MonetisationInput { n: 0, ..ok }).is_err());
        assert!(monetise(&MonetisationInput { trips_per_year: 0.0, ..ok }).is_err());
    }
}
