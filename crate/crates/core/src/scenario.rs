//! JSON scenario files and built-in scenarios.
//!
//! ```json
//! {
//!   "n_per_set": [8, 8],
//!   "n_per_user": [8, 8],
//!   "links": [
//!     { "l": 1, "k": 1, "theta_r": 10, "theta_t": 15, "delta_r": 0.01, "delta_t": 0.04,
//!       "theta_bar_r": 10, "theta_bar_t": 40, "kappa": 0, "g": 1 }
//!   ],
//!   "solver": { "tolerance": 1e-12, "max_iterations": 10000, "damping": 1.0 },
//!   "quadrature_points": 7201
//! }
//! ```
//!
//! Link indices are 1-based. `solver` and `quadrature_points` are optional.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::{assemble_model, ChannelModel, LinkSpec, SystemDims, DEFAULT_QUADRATURE_POINTS};
use crate::detequiv::SolverConfig;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkEntry {
    pub l: usize,
    pub k: usize,
    #[serde(flatten)]
    pub spec: LinkSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSettings {
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    #[serde(default = "default_damping")]
    pub damping: f64,
}

fn default_tolerance() -> f64 {
    SolverConfig::DEFAULT_TOLERANCE
}

fn default_max_iterations() -> usize {
    SolverConfig::DEFAULT_MAX_ITERATIONS
}

fn default_damping() -> f64 {
    1.0
}

fn default_quadrature() -> usize {
    DEFAULT_QUADRATURE_POINTS
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            tolerance: default_tolerance(),
            max_iterations: default_max_iterations(),
            damping: default_damping(),
        }
    }
}

impl SolverSettings {
    pub fn at(&self, omega: f64) -> SolverConfig {
        SolverConfig {
            tolerance: self.tolerance,
            max_iterations: self.max_iterations,
            damping: self.damping,
            omega,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub n_per_set: Vec<usize>,
    pub n_per_user: Vec<usize>,
    pub links: Vec<LinkEntry>,
    #[serde(default)]
    pub solver: SolverSettings,
    #[serde(default = "default_quadrature")]
    pub quadrature_points: usize,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("line {}, column {}: {e}", e.line(), e.column())))
    }

    /// Reads a scenario file. I/O failures are returned separately so callers
    /// can tell them apart from malformed content.
    pub fn from_path(path: &Path) -> std::result::Result<Result<Self>, std::io::Error> {
        let text = std::fs::read_to_string(path)?;
        Ok(Self::from_json(&text))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn dims(&self) -> Result<SystemDims> {
        SystemDims::new(self.n_per_set.clone(), self.n_per_user.clone())
    }

    /// Link specs as an `L × K` grid, checking that every pair appears once.
    pub fn link_grid(&self) -> Result<Vec<Vec<LinkSpec>>> {
        let (sets, users) = (self.n_per_set.len(), self.n_per_user.len());
        let mut grid: Vec<Vec<Option<LinkSpec>>> = vec![vec![None; users]; sets];
        for entry in &self.links {
            if entry.l == 0 || entry.l > sets || entry.k == 0 || entry.k > users {
                return Err(Error::Config(format!(
                    "link ({},{}) is outside the {sets}x{users} grid",
                    entry.l, entry.k
                )));
            }
            let slot = &mut grid[entry.l - 1][entry.k - 1];
            if slot.is_some() {
                return Err(Error::Config(format!("duplicate link ({},{})", entry.l, entry.k)));
            }
            *slot = Some(entry.spec.clone());
        }
        grid.into_iter()
            .enumerate()
            .map(|(l, row)| {
                row.into_iter()
                    .enumerate()
                    .map(|(k, spec)| spec.ok_or_else(|| Error::Config(format!("missing link ({},{})", l + 1, k + 1))))
                    .collect()
            })
            .collect()
    }

    pub fn build(&self) -> Result<ChannelModel> {
        let dims = self.dims()?;
        assemble_model(&dims, &self.link_grid()?, self.quadrature_points)
    }

    pub fn solver_config(&self, omega: f64) -> SolverConfig {
        self.solver.at(omega)
    }
}

/// Two antenna sets and two users with the angular parameters of the
/// reference layout: `θ^R`, `θ^T`, `δ^R`, `δ^T`, `θ̄^R`, `θ̄^T` per link, and
/// pathloss 1 on the direct links, 0.25 on the cross links.
pub fn table_one(antennas: usize, kappa: f64) -> ScenarioConfig {
    // (l, k, θR, θT, δR, δT, θ̄R, θ̄T, g)
    const ROWS: [(usize, usize, f64, f64, f64, f64, f64, f64, f64); 4] = [
        (1, 1, 10.0, 15.0, 0.01, 0.04, 10.0, 40.0, 1.0),
        (2, 1, 20.0, 25.0, 0.02, 0.03, 20.0, 30.0, 0.25),
        (1, 2, 30.0, 35.0, 0.03, 0.02, 30.0, 20.0, 0.25),
        (2, 2, 40.0, 45.0, 0.04, 0.01, 40.0, 10.0, 1.0),
    ];
    let links = ROWS
        .iter()
        .map(|&(l, k, theta_r, theta_t, delta_r, delta_t, theta_bar_r, theta_bar_t, g)| LinkEntry {
            l,
            k,
            spec: LinkSpec {
                theta_r,
                theta_t,
                delta_r,
                delta_t,
                theta_bar_r,
                theta_bar_t,
                kappa,
                g,
            },
        })
        .collect();
    ScenarioConfig {
        n_per_set: vec![antennas; 2],
        n_per_user: vec![antennas; 2],
        links,
        solver: SolverSettings::default(),
        quadrature_points: DEFAULT_QUADRATURE_POINTS,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_one_round_trips() {
        let cfg = table_one(2, 1.0);
        let back = ScenarioConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
        let model = back.build().unwrap();
        assert_eq!(model.dims().total_rx(), 4);
    }

    #[test]
    fn missing_link_is_named() {
        let mut cfg = table_one(2, 0.0);
        cfg.links.retain(|e| !(e.l == 2 && e.k == 1));
        let err = cfg.build().unwrap_err().to_string();
        assert!(err.contains("link (2,1)"), "{err}");
    }

    #[test]
    fn duplicate_and_out_of_range_links() {
        let mut cfg = table_one(2, 0.0);
        cfg.links.push(cfg.links[0].clone());
        assert!(cfg.build().unwrap_err().to_string().contains("duplicate"));
        let mut cfg = table_one(2, 0.0);
        cfg.links[0].l = 3;
        assert!(cfg.build().is_err());
    }

    #[test]
    fn parse_error_has_location() {
        let err = ScenarioConfig::from_json("{\n \"n_per_set\": [1],\n \"bogus\": 1 }").unwrap_err();
        assert!(err.to_string().contains("line"), "{err}");
    }
}
