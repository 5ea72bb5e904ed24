#include "aidsfit/diagnostics.hpp"

#include "aidsfit/errors.hpp"

namespace aidsfit {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

double percent(const std::vector<bool>& flags) {
    if (flags.empty()) return 0.0;
    std::size_t pass = 0;
    for (bool f : flags) pass += f ? 1 : 0;
    return 100.0 * static_cast<double>(pass) / static_cast<double>(flags.size());
}

}  // namespace

MatrixXd slutsky_matrix(const CoefficientSet& coeffs, const EvalPoint& at) {
    const MatrixXd e = marshallian(coeffs, at);
    const VectorXd eta = expenditure(coeffs, at);
    const Index n = e.rows();
    MatrixXd s(n, n);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) {
            s(i, j) = at.shares(i) * (e(i, j) + eta(i) * at.shares(j));
        }
    }
    return 0.5 * (s + s.transpose());
}

bool slutsky_nsd(const CoefficientSet& coeffs, const EvalPoint& at, double tol) {
    const MatrixXd s = slutsky_matrix(coeffs, at);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(s, Eigen::EigenvaluesOnly);
    return es.eigenvalues().maxCoeff() <= tol;
}

RegularityReport check_monotonicity(const FitResult& fit) {
    RegularityReport out;
    const MatrixXd& w = fit.fitted_shares;
    out.monotone.resize(static_cast<std::size_t>(w.rows()));
    for (Index t = 0; t < w.rows(); ++t) {
        out.monotone[static_cast<std::size_t>(t)] =
            (w.row(t).array() > 0.0).all() && (w.row(t).array() < 1.0).all();
    }
    out.monotonicity_pct = percent(out.monotone);
    return out;
}

RegularityReport check_concavity(const FitResult& fit, const SharePanel& panel, double tol) {
    if (panel.n_weeks() != fit.n_weeks || panel.n_goods() != fit.goods.size() ||
        static_cast<std::size_t>(fit.fitted_shares.rows()) != fit.n_weeks) {
        throw DimensionError("fit and panel disagree in shape");
    }
    RegularityReport out;
    const auto T = panel.n_weeks();
    out.concave.assign(T, false);
    out.degenerate.assign(T, false);
    for (std::size_t t = 0; t < T; ++t) {
        EvalPoint at;
        at.shares = fit.fitted_shares.row(static_cast<Index>(t)).transpose();
        at.log_prices = panel.log_prices().row(static_cast<Index>(t)).transpose();
        at.observation = t;
        try {
            out.concave[t] = slutsky_nsd(fit.coefficients, at, tol);
        } catch (const DegenerateShareError&) {
            out.degenerate[t] = true;
        }
    }
    out.concavity_pct = percent(out.concave);
    return out;
}

RegularityReport check_regularity(const FitResult& fit, const SharePanel& panel, double tol) {
    RegularityReport out = check_concavity(fit, panel, tol);
    const RegularityReport mono = check_monotonicity(fit);
    out.monotone = mono.monotone;
    out.monotonicity_pct = mono.monotonicity_pct;
    return out;
}

}  // namespace aidsfit
