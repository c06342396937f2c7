#include <cmath>
#include <limits>

#include "hydroflux/error.hpp"
#include "hydroflux/regressors.hpp"

namespace hydroflux::ml {

namespace {

constexpr double kTau = 1e-12;

Eigen::MatrixXd rbf(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double gamma) {
    Eigen::MatrixXd d2 = (-2.0 * a * b.transpose()).colwise() + a.rowwise().squaredNorm();
    d2.rowwise() += b.rowwise().squaredNorm().transpose();
    return (-gamma * d2.array().max(0.0)).exp();
}

// Sequential minimal optimization of the epsilon-SVR dual in its 2n-variable form:
//   min 0.5 beta' Q beta + p' beta,  sum(sign .* beta) = 0,  0 <= beta <= C,
// with beta = [alpha; alpha*], sign = [+1; -1], Q_ij = sign_i sign_j K(i mod n, j mod n),
// p = [eps - z; eps + z]. Working pairs use second-order (maximal gain) selection.
struct SmoResult {
    Eigen::VectorXd beta;
    double rho = 0.0;
    double objective = 0.0;
    long iterations = 0;
};

SmoResult solve_dual(const Eigen::MatrixXd& kernel, const Eigen::VectorXd& z, double c, double eps, double tol,
                     long max_iter) {
    const Eigen::Index n = z.size();
    const Eigen::Index l = 2 * n;
    auto sign = [n](Eigen::Index t) { return t < n ? 1.0 : -1.0; };
    auto kidx = [n](Eigen::Index t) { return t < n ? t : t - n; };
    auto q = [&](Eigen::Index i, Eigen::Index j) { return sign(i) * sign(j) * kernel(kidx(i), kidx(j)); };

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(l);
    Eigen::VectorXd p(l);
    Eigen::VectorXd grad(l);
    for (Eigen::Index t = 0; t < n; ++t) {
        p(t) = eps - z(t);
        p(t + n) = eps + z(t);
    }
    grad = p;
    auto at_upper = [&](Eigen::Index t) { return beta(t) >= c; };
    auto at_lower = [&](Eigen::Index t) { return beta(t) <= 0.0; };

    long iter = 0;
    for (;; ++iter) {
        // First index: maximal violation among I_up.
        double gmax = -std::numeric_limits<double>::infinity();
        Eigen::Index i = -1;
        for (Eigen::Index t = 0; t < l; ++t) {
            if (sign(t) > 0) {
                if (!at_upper(t) && -grad(t) >= gmax) {
                    gmax = -grad(t);
                    i = t;
                }
            } else if (!at_lower(t) && grad(t) >= gmax) {
                gmax = grad(t);
                i = t;
            }
        }
        // Second index: largest guaranteed decrease among I_low.
        double gmax2 = -std::numeric_limits<double>::infinity();
        Eigen::Index j = -1;
        double best_gain = std::numeric_limits<double>::infinity();
        for (Eigen::Index t = 0; t < l; ++t) {
            double grad_diff = 0.0;
            if (sign(t) > 0) {
                if (at_lower(t)) continue;
                gmax2 = std::max(gmax2, grad(t));
                grad_diff = gmax + grad(t);
            } else {
                if (at_upper(t)) continue;
                gmax2 = std::max(gmax2, -grad(t));
                grad_diff = gmax - grad(t);
            }
            if (i < 0 || grad_diff <= 0.0) continue;
            double quad = q(i, i) + q(t, t) - 2.0 * sign(i) * sign(t) * q(i, t);
            if (quad <= 0.0) quad = kTau;
            const double gain = -(grad_diff * grad_diff) / quad;
            if (gain <= best_gain) {
                best_gain = gain;
                j = t;
            }
        }
        if (i < 0 || j < 0 || gmax + gmax2 < tol) break;
        if (iter >= max_iter) {
            fail("NotConverged", "SVR dual did not reach KKT tolerance within " + std::to_string(max_iter) +
                                     " iterations (violation " + std::to_string(gmax + gmax2) + ")");
        }

        const double old_i = beta(i);
        const double old_j = beta(j);
        const double qij = q(i, j);
        if (sign(i) != sign(j)) {
            double quad = q(i, i) + q(j, j) + 2.0 * qij;
            if (quad <= 0.0) quad = kTau;
            const double delta = (-grad(i) - grad(j)) / quad;
            const double diff = beta(i) - beta(j);
            beta(i) += delta;
            beta(j) += delta;
            if (diff > 0.0) {
                if (beta(j) < 0.0) {
                    beta(j) = 0.0;
                    beta(i) = diff;
                }
            } else if (beta(i) < 0.0) {
                beta(i) = 0.0;
                beta(j) = -diff;
            }
            if (diff > 0.0) {
                if (beta(i) > c) {
                    beta(i) = c;
                    beta(j) = c - diff;
                }
            } else if (beta(j) > c) {
                beta(j) = c;
                beta(i) = c + diff;
            }
        } else {
            double quad = q(i, i) + q(j, j) - 2.0 * qij;
            if (quad <= 0.0) quad = kTau;
            const double delta = (grad(i) - grad(j)) / quad;
            const double sum = beta(i) + beta(j);
            beta(i) -= delta;
            beta(j) += delta;
            if (sum > c) {
                if (beta(i) > c) {
                    beta(i) = c;
                    beta(j) = sum - c;
                }
            } else if (beta(j) < 0.0) {
                beta(j) = 0.0;
                beta(i) = sum;
            }
            if (sum > c) {
                if (beta(j) > c) {
                    beta(j) = c;
                    beta(i) = sum - c;
                }
            } else if (beta(i) < 0.0) {
                beta(i) = 0.0;
                beta(j) = sum;
            }
        }
        const double di = beta(i) - old_i;
        const double dj = beta(j) - old_j;
        for (Eigen::Index t = 0; t < l; ++t) grad(t) += q(t, i) * di + q(t, j) * dj;
    }

    // Offset from free variables, or the midpoint of the feasible interval.
    double ub = std::numeric_limits<double>::infinity();
    double lb = -std::numeric_limits<double>::infinity();
    double sum_free = 0.0;
    long n_free = 0;
    for (Eigen::Index t = 0; t < l; ++t) {
        const double yg = sign(t) * grad(t);
        if (at_upper(t)) {
            if (sign(t) < 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
        } else if (at_lower(t)) {
            if (sign(t) > 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
        } else {
            ++n_free;
            sum_free += yg;
        }
    }
    SmoResult r;
    r.rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : 0.5 * (ub + lb);
    r.beta = beta;
    r.iterations = iter;
    // 0.5 beta'Q beta + p'beta == 0.5 (beta'G + beta'p) since G = Q beta + p.
    r.objective = 0.5 * (beta.dot(grad) + beta.dot(p));
    return r;
}

}  // namespace

Eigen::VectorXd SvrModel::predict(const Eigen::MatrixXd& xs) const {
    if (support_vectors.rows() == 0) return Eigen::VectorXd::Constant(xs.rows(), bias);
    return (rbf(xs, support_vectors, gamma) * coef).array() + bias;
}

FittedRegressor fit_svr(const DesignMatrix& data, double c, double epsilon, double gamma, double tol, long max_iter) {
    data.validate(false);
    if (!(c > 0.0) || !(epsilon >= 0.0) || !(gamma >= 0.0) || !(tol > 0.0)) {
        fail("InvalidHyperparameter", "SVR requires c > 0, epsilon >= 0, gamma >= 0, tol > 0");
    }
    auto standardizer = Standardizer::fit(data.x, data.target);
    const Eigen::MatrixXd xs = standardizer.transform(data.x);
    const Eigen::VectorXd zs = standardizer.transform_target(data.target);
    const double g = gamma > 0.0 ? gamma : 1.0 / static_cast<double>(xs.cols());

    const Eigen::MatrixXd k = rbf(xs, xs, g);
    auto sol = solve_dual(k, zs, c, epsilon, tol, max_iter);

    const Eigen::Index n = zs.size();
    SvrModel m;
    m.gamma = g;
    m.c = c;
    m.epsilon = epsilon;
    m.bias = -sol.rho;
    m.dual_objective = sol.objective;
    m.iterations = static_cast<int>(sol.iterations);
    std::vector<double> coefs;
    for (Eigen::Index t = 0; t < n; ++t) {
        const double coef = sol.beta(t) - sol.beta(t + n);
        if (coef != 0.0) {
            m.sv_index.push_back(static_cast<std::size_t>(t));
            coefs.push_back(coef);
        }
    }
    m.support_vectors.resize(static_cast<Eigen::Index>(m.sv_index.size()), xs.cols());
    for (std::size_t s = 0; s < m.sv_index.size(); ++s) {
        m.support_vectors.row(static_cast<Eigen::Index>(s)) = xs.row(static_cast<Eigen::Index>(m.sv_index[s]));
    }
    m.coef = Eigen::Map<Eigen::VectorXd>(coefs.data(), static_cast<Eigen::Index>(coefs.size()));
    std::map<std::string, double> diag{{"support_vectors", static_cast<double>(m.sv_index.size())},
                                       {"dual_objective", m.dual_objective},
                                       {"iterations", static_cast<double>(m.iterations)}};
    return FittedRegressor(RegressorKind::Svr,
                           {{"c", c}, {"epsilon", epsilon}, {"gamma", gamma}, {"tol", tol},
                            {"max_iter", static_cast<double>(max_iter)}},
                           0, data.feature_names, standardizer, std::move(m), std::move(diag));
}

}  // namespace hydroflux::ml
