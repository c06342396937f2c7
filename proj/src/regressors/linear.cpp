#include <cmath>

#include "hydroflux/error.hpp"
#include "hydroflux/regressors.hpp"
#include "hydroflux/timeseries.hpp"

namespace hydroflux::ml {

FittedRegressor fit_ridge(const DesignMatrix& data, double lambda) {
    data.validate(true);
    if (!(lambda >= 0.0)) fail("InvalidHyperparameter", "ridge lambda must be >= 0");
    auto standardizer = Standardizer::fit(data.x, data.target);
    const Eigen::MatrixXd xs = standardizer.transform(data.x);
    const Eigen::VectorXd ys = standardizer.transform_target(data.target);

    Eigen::MatrixXd gram = xs.transpose() * xs;
    gram.diagonal().array() += lambda;
    Eigen::LLT<Eigen::MatrixXd> llt(gram);
    const Eigen::VectorXd pivots = Eigen::MatrixXd(llt.matrixL()).diagonal();
    if (llt.info() != Eigen::Success || pivots.minCoeff() * pivots.minCoeff() < 1e-12 * pivots.maxCoeff() * pivots.maxCoeff()) {
        fail("SingularSystem", "ridge normal equations are singular (lambda = " + format_number(lambda, 9) + ")");
    }
    LinearModel m;
    m.weights = llt.solve(xs.transpose() * ys);
    m.bias = 0.0;  // centered target
    return FittedRegressor(RegressorKind::Ridge, {{"lambda", lambda}}, 0, data.feature_names, standardizer,
                           std::move(m));
}

double lasso_objective(const Eigen::MatrixXd& xs, const Eigen::VectorXd& ys, const Eigen::VectorXd& w, double lambda) {
    const double n = static_cast<double>(xs.rows());
    return (ys - xs * w).squaredNorm() / (2.0 * n) + lambda * w.lpNorm<1>();
}

FittedRegressor fit_lasso(const DesignMatrix& data, double lambda, double tol, int max_iter) {
    data.validate(true);
    if (!(lambda >= 0.0)) fail("InvalidHyperparameter", "lasso lambda must be >= 0");
    auto standardizer = Standardizer::fit(data.x, data.target);
    const Eigen::MatrixXd xs = standardizer.transform(data.x);
    const Eigen::VectorXd ys = standardizer.transform_target(data.target);
    const double n = static_cast<double>(xs.rows());
    const Eigen::Index k = xs.cols();

    const Eigen::VectorXd col_sq = xs.colwise().squaredNorm().transpose() / n;
    Eigen::VectorXd w = Eigen::VectorXd::Zero(k);
    Eigen::VectorXd residual = ys;
    int iter = 0;
    double max_change = 0.0;
    for (; iter < max_iter; ++iter) {
        max_change = 0.0;
        for (Eigen::Index j = 0; j < k; ++j) {
            const double old = w(j);
            const double rho = xs.col(j).dot(residual) / n + col_sq(j) * old;
            double updated = 0.0;
            if (rho > lambda) {
                updated = (rho - lambda) / col_sq(j);
            } else if (rho < -lambda) {
                updated = (rho + lambda) / col_sq(j);
            }
            if (updated != old) {
                residual -= xs.col(j) * (updated - old);
                w(j) = updated;
                max_change = std::max(max_change, std::abs(updated - old));
            }
        }
        if (max_change < tol) break;
    }
    if (iter == max_iter) {
        fail("NotConverged", "lasso coordinate descent stopped after " + std::to_string(max_iter) +
                                 " sweeps (last max coefficient change " + format_number(max_change, 9) +
                                 ", objective " + format_number(lasso_objective(xs, ys, w, lambda), 9) + ")");
    }
    LinearModel m;
    m.weights = w;
    m.bias = 0.0;
    m.iterations = iter + 1;
    std::map<std::string, double> diag{{"iterations", m.iterations},
                                       {"nonzero_coefficients", static_cast<double>((w.array() != 0.0).count())}};
    return FittedRegressor(RegressorKind::Lasso, {{"lambda", lambda}, {"tol", tol}, {"max_iter", max_iter}}, 0,
                           data.feature_names, standardizer, std::move(m), std::move(diag));
}

}  // namespace hydroflux::ml
