#include <cmath>
#include <limits>
#include <numbers>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include "hydroflux/error.hpp"
#include "hydroflux/regressors.hpp"

namespace hydroflux::ml {

namespace {

constexpr double kBaseJitter = 1e-8;
constexpr double kMaxJitter = 1e-4;

// Search box for the log-space hyperparameters (standardized data).
constexpr double kLogBounds[3][2] = {
    {-6.907755278982137, 6.907755278982137},  // signal_var in [1e-3, 1e3]
    {-4.605170185988091, 4.605170185988091},  // length_scale in [1e-2, 1e2]
    {-13.815510557964274, 2.302585092994046},  // noise_var in [1e-6, 10]
};

Eigen::MatrixXd gram(const Eigen::MatrixXd& xs, const GprKernel& kernel) {
    const Eigen::Index n = xs.rows();
    const Eigen::VectorXd sq = xs.rowwise().squaredNorm();
    Eigen::MatrixXd d2 = (-2.0 * xs * xs.transpose()).colwise() + sq;
    d2.rowwise() += sq.transpose();
    Eigen::MatrixXd k = kernel.signal_var * (-d2.array().max(0.0) / (2.0 * kernel.length_scale * kernel.length_scale)).exp();
    for (Eigen::Index i = 0; i < n; ++i) k(i, i) = kernel.signal_var;
    return k;
}

Eigen::MatrixXd cross(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const GprKernel& kernel) {
    Eigen::MatrixXd d2 = (-2.0 * a * b.transpose()).colwise() + a.rowwise().squaredNorm();
    d2.rowwise() += b.rowwise().squaredNorm().transpose();
    return kernel.signal_var * (-d2.array().max(0.0) / (2.0 * kernel.length_scale * kernel.length_scale)).exp();
}

struct Factorized {
    Eigen::LLT<Eigen::MatrixXd> chol;
    double jitter = kBaseJitter;
};

std::optional<Factorized> factorize(const Eigen::MatrixXd& xs, const GprKernel& kernel, double jitter) {
    Eigen::MatrixXd k = gram(xs, kernel);
    for (; jitter <= kMaxJitter * 1.0000001; jitter *= 10.0) {
        Eigen::MatrixXd kj = k;
        kj.diagonal().array() += kernel.noise_var + jitter;
        Factorized f{Eigen::LLT<Eigen::MatrixXd>(kj), jitter};
        if (f.chol.info() == Eigen::Success) return f;
    }
    return std::nullopt;
}

double lml_from(const Factorized& f, const Eigen::VectorXd& ys) {
    const Eigen::VectorXd alpha = f.chol.solve(ys);
    const double n = static_cast<double>(ys.size());
    const double logdet = 2.0 * Eigen::MatrixXd(f.chol.matrixL()).diagonal().array().log().sum();
    return -0.5 * ys.dot(alpha) - 0.5 * logdet - 0.5 * n * std::log(2.0 * std::numbers::pi);
}

GprKernel from_log(const double* theta) {
    return {std::exp(theta[0]), std::exp(theta[1]), std::exp(theta[2])};
}

struct LmlProblem {
    const Eigen::MatrixXd* xs;
    const Eigen::VectorXd* ys;
};

double negative_lml(const gsl_vector* v, void* params) {
    const auto* prob = static_cast<const LmlProblem*>(params);
    double theta[3];
    for (int i = 0; i < 3; ++i) {
        theta[i] = gsl_vector_get(v, static_cast<std::size_t>(i));
        if (theta[i] < kLogBounds[i][0] || theta[i] > kLogBounds[i][1]) return 1e300;
    }
    auto lml = gpr_log_marginal_likelihood(*prob->xs, *prob->ys, from_log(theta));
    return lml ? -*lml : 1e300;
}

// Nelder-Mead in log-space from one start; returns the best point and value.
std::pair<std::array<double, 3>, double> local_search(const LmlProblem& prob, const std::array<double, 3>& start) {
    gsl_multimin_function fn{&negative_lml, 3, const_cast<LmlProblem*>(&prob)};
    gsl_vector* x = gsl_vector_alloc(3);
    gsl_vector* step = gsl_vector_alloc(3);
    for (std::size_t i = 0; i < 3; ++i) {
        gsl_vector_set(x, i, start[i]);
        gsl_vector_set(step, i, 0.5);
    }
    gsl_multimin_fminimizer* s = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, 3);
    gsl_multimin_fminimizer_set(s, &fn, x, step);
    for (int iter = 0; iter < 200; ++iter) {
        if (gsl_multimin_fminimizer_iterate(s) != GSL_SUCCESS) break;
        if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(s), 1e-3) == GSL_SUCCESS) break;
    }
    std::array<double, 3> best{};
    for (std::size_t i = 0; i < 3; ++i) best[i] = gsl_vector_get(s->x, i);
    const double value = s->fval;
    gsl_multimin_fminimizer_free(s);
    gsl_vector_free(step);
    gsl_vector_free(x);
    return {best, value};
}

}  // namespace

double GprKernel::operator()(const Eigen::VectorXd& x, const Eigen::VectorXd& z) const {
    return signal_var * std::exp(-(x - z).squaredNorm() / (2.0 * length_scale * length_scale));
}

std::optional<double> gpr_log_marginal_likelihood(const Eigen::MatrixXd& xs, const Eigen::VectorXd& ys,
                                                  const GprKernel& kernel, double jitter) {
    auto f = factorize(xs, kernel, jitter);
    if (!f) return std::nullopt;
    return lml_from(*f, ys);
}

void GprModel::refactorize() {
    Eigen::MatrixXd k = gram(x_train, kernel);
    k.diagonal().array() += kernel.noise_var + jitter;
    chol.compute(k);
    if (chol.info() != Eigen::Success) fail("FactorizationFailure", "stored GPR kernel is not positive definite");
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> GprModel::predict(const Eigen::MatrixXd& xs) const {
    const Eigen::MatrixXd ks = cross(xs, x_train, kernel);  // m x n
    Eigen::VectorXd mean = ks * alpha;
    const Eigen::MatrixXd v = chol.matrixL().solve(ks.transpose());  // n x m
    Eigen::VectorXd var = (kernel.signal_var + kernel.noise_var) - v.colwise().squaredNorm().transpose().array();
    return {std::move(mean), var.cwiseMax(0.0)};
}

FittedRegressor fit_gpr(const DesignMatrix& data, const GprKernel& kernel, bool optimize, std::uint64_t seed,
                        int starts) {
    data.validate(false);
    if (!(kernel.signal_var > 0.0 && kernel.length_scale > 0.0 && kernel.noise_var >= 0.0)) {
        fail("InvalidHyperparameter", "GPR kernel hyperparameters must be positive");
    }
    auto standardizer = Standardizer::fit(data.x, data.target);
    const Eigen::MatrixXd xs = standardizer.transform(data.x);
    const Eigen::VectorXd ys = standardizer.transform_target(data.target);

    GprKernel chosen = kernel;
    auto initial = factorize(xs, kernel, kBaseJitter);
    const double initial_lml = initial ? lml_from(*initial, ys) : -std::numeric_limits<double>::infinity();

    if (optimize) {
        gsl_set_error_handler_off();
        Rng rng = Rng(seed).split("gpr-starts");
        LmlProblem prob{&xs, &ys};
        double best_value = initial ? -initial_lml : std::numeric_limits<double>::infinity();
        for (int s = 0; s < starts; ++s) {
            std::array<double, 3> start{};
            if (s == 0) {
                start = {std::log(kernel.signal_var), std::log(kernel.length_scale),
                         std::log(std::max(kernel.noise_var, 1e-6))};
                for (int i = 0; i < 3; ++i) start[i] = std::clamp(start[i], kLogBounds[i][0], kLogBounds[i][1]);
            } else {
                Rng r = rng.split(static_cast<std::uint64_t>(s));
                start = {r.uniform(std::log(0.1), std::log(10.0)), r.uniform(std::log(0.1), std::log(10.0)),
                         r.uniform(std::log(1e-4), std::log(1.0))};
            }
            auto [theta, value] = local_search(prob, start);
            // Monotone acceptance: only strictly better optima replace the incumbent.
            if (value < best_value) {
                best_value = value;
                chosen = from_log(theta.data());
            }
        }
    }

    auto f = factorize(xs, chosen, kBaseJitter);
    if (!f) fail("FactorizationFailure", "GPR Gram matrix not positive definite after jitter escalation to 1e-4");
    GprModel m;
    m.kernel = chosen;
    m.jitter = f->jitter;
    m.x_train = xs;
    m.alpha = f->chol.solve(ys);
    m.log_marginal_likelihood = lml_from(*f, ys);
    m.initial_log_marginal_likelihood = initial_lml;
    m.chol = std::move(f->chol);
    std::map<std::string, double> diag{{"log_marginal_likelihood", m.log_marginal_likelihood},
                                       {"initial_log_marginal_likelihood", initial_lml},
                                       {"signal_var", chosen.signal_var},
                                       {"length_scale", chosen.length_scale},
                                       {"noise_var", chosen.noise_var},
                                       {"jitter", m.jitter}};
    return FittedRegressor(RegressorKind::Gpr,
                           {{"signal_var", kernel.signal_var},
                            {"length_scale", kernel.length_scale},
                            {"noise_var", kernel.noise_var},
                            {"optimize", optimize ? 1.0 : 0.0},
                            {"starts", starts}},
                           seed, data.feature_names, standardizer, std::move(m), std::move(diag));
}

}  // namespace hydroflux::ml
