#pragma once

#include "aidsfit/aids.hpp"
#include "aidsfit/elasticity.hpp"
#include "aidsfit/panel.hpp"

#include <Eigen/Dense>

#include <vector>

namespace aidsfit {

struct RegularityReport {
    double monotonicity_pct = 0.0;
    double concavity_pct = 0.0;
    /// One entry per observation: all fitted shares in (0, 1).
    std::vector<bool> monotone;
    /// One entry per observation: symmetrized Slutsky matrix NSD.
    std::vector<bool> concave;
    /// Observations skipped by the concavity check (degenerate fitted shares).
    std::vector<bool> degenerate;
};

/// S_ij = w_i (e_ij + eta_i w_j), symmetrized.
Eigen::MatrixXd slutsky_matrix(const CoefficientSet& coeffs, const EvalPoint& at);

/// Largest eigenvalue of the symmetrized Slutsky matrix <= tol.
bool slutsky_nsd(const CoefficientSet& coeffs, const EvalPoint& at, double tol = 1e-8);

/// Only monotonicity fields are filled.
RegularityReport check_monotonicity(const FitResult& fit);

/// Per observation, at the fitted shares and observed log prices. Only
/// concavity fields are filled; degenerate observations count as failures.
RegularityReport check_concavity(const FitResult& fit, const SharePanel& panel, double tol = 1e-8);

/// Both checks.
RegularityReport check_regularity(const FitResult& fit, const SharePanel& panel,
                                  double tol = 1e-8);

}  // namespace aidsfit
