use serde::{Deserialize, Serialize};

/// Tolerance and scale settings shared by the numerical pipeline.
///
/// Every acceptance test pins its tolerance set through this struct; the CLI
/// loads overrides from a key=value config file and from flags.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    /// `R_inf = r_inf_factor * (1 + max|root|)`.
    pub r_inf_factor: f64,
    /// Landing radius as a fraction of the minimal root separation.
    pub delta_land_factor: f64,
    /// Absolute tolerance for real-axis crossing detection.
    pub delta_axis: f64,
    /// Eigenvalue genericity tolerance as a fraction of `max|P'(root)|`.
    pub tol_eig_factor: f64,
    /// Root clusters closer than `parabolic_sep * (1 + max|root|)` are
    /// treated as one multiple (parabolic) point.
    pub parabolic_sep: f64,
    /// Relative tolerance of the adaptive flow integrator.
    pub flow_rtol: f64,
    /// Absolute tolerance of path quadratures.
    pub quad_tol: f64,
    /// Relative slot tolerance of the realization solver.
    pub solver_tol: f64,
    /// Genericity margin below which scan cells are flagged as bifurcation.
    pub margin_threshold: f64,
    /// Capacity limit for stratum enumeration.
    pub max_enum_k: usize,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            r_inf_factor: 10.0,
            delta_land_factor: 1e-4,
            delta_axis: 1e-9,
            tol_eig_factor: 1e-9,
            parabolic_sep: 1e-6,
            flow_rtol: 1e-10,
            quad_tol: 1e-12,
            solver_tol: 1e-6,
            margin_threshold: 1e-6,
            max_enum_k: crate::combinatorics::MAX_ENUM_K,
        }
    }
}

impl Config {
    /// Cheaper profile used for large parameter-space scans, where only the
    /// combinatorial label and a genericity margin are needed.
    pub fn scan_profile() -> Self {
        Config {
            flow_rtol: 1e-7,
            quad_tol: 1e-9,
            ..Config::default()
        }
    }
}
