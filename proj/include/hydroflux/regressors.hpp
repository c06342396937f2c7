#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

#include "hydroflux/rng.hpp"

namespace hydroflux::ml {

enum class RegressorKind { Ridge, Lasso, Gpr, Svr, Lstm };

std::string_view to_string(RegressorKind kind);
RegressorKind parse_kind(std::string_view text);  // UnknownModel

/// Feature rows (n x k) with column labels. Rows are in time order, which
/// matters only for the LSTM.
struct FeatureMatrix {
    Eigen::MatrixXd x;
    std::vector<std::string> names;

    std::size_t rows() const noexcept { return static_cast<std::size_t>(x.rows()); }
};

struct DesignMatrix {
    Eigen::MatrixXd x;
    std::vector<std::string> feature_names;
    Eigen::VectorXd target;

    std::size_t rows() const noexcept { return static_cast<std::size_t>(x.rows()); }
    FeatureMatrix features() const { return {x, feature_names}; }
    /// Non-finite entries, shape mismatches, and n < k for linear fits are rejected.
    void validate(bool linear) const;
};

/// Per-feature z-scoring plus target scaling. A constant feature column is
/// an error (ConstantColumn); a constant target keeps sd = 1.
class Standardizer {
public:
    Standardizer() = default;
    static Standardizer fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y);

    Eigen::MatrixXd transform(const Eigen::MatrixXd& x) const;
    Eigen::VectorXd transform_target(const Eigen::VectorXd& y) const;
    double inverse_target(double z) const { return z * target_sd_ + target_mean_; }

    const Eigen::VectorXd& feature_mean() const noexcept { return mean_; }
    const Eigen::VectorXd& feature_sd() const noexcept { return sd_; }
    double target_mean() const noexcept { return target_mean_; }
    double target_sd() const noexcept { return target_sd_; }

    nlohmann::json to_json() const;
    static Standardizer from_json(const nlohmann::json& j);

private:
    Eigen::VectorXd mean_;
    Eigen::VectorXd sd_;
    double target_mean_ = 0.0;
    double target_sd_ = 1.0;
};

using Hyperparameters = std::map<std::string, double>;

/// Defaults per kind:
///   ridge  lambda=1
///   lasso  lambda=0.01 tol=1e-6 max_iter=10000
///   gpr    signal_var=1 length_scale=1 noise_var=0.1 optimize=1 starts=8
///   svr    c=10 epsilon=0.1 gamma=1/k (0 = auto) tol=1e-4 max_iter=1e5
///   lstm   window=12 hidden=16 epochs=200 lr=0.01 batch=32 clip=1 init_scale=0.08
Hyperparameters default_hyperparameters(RegressorKind kind);
/// Defaults with overrides applied; unknown keys throw UnknownHyperparameter.
Hyperparameters resolve_hyperparameters(RegressorKind kind, const Hyperparameters& overrides);

struct RegressorSpec {
    RegressorKind kind = RegressorKind::Ridge;
    Hyperparameters overrides;
    std::uint64_t seed = 0;
};

struct Prediction {
    std::vector<double> mean;
    std::optional<std::vector<double>> sd;  // GPR only

    /// mean -/+ z * sd. Throws NoVariance when sd is absent.
    std::pair<std::vector<double>, std::vector<double>> interval(double z = 1.645) const;
};

// ------------------------------------------------------------ model states
// All states live in standardized feature/target space.

struct LinearModel {
    Eigen::VectorXd weights;
    double bias = 0.0;
    int iterations = 0;
};

struct GprKernel {
    double signal_var = 1.0;
    double length_scale = 1.0;
    double noise_var = 0.1;

    double operator()(const Eigen::VectorXd& x, const Eigen::VectorXd& z) const;
};

struct GprModel {
    GprKernel kernel;
    double jitter = 1e-8;
    Eigen::MatrixXd x_train;
    Eigen::VectorXd alpha;
    Eigen::LLT<Eigen::MatrixXd> chol;  // of K + (noise_var + jitter) I; rebuilt on load
    double log_marginal_likelihood = 0.0;
    double initial_log_marginal_likelihood = 0.0;

    /// Recomputes `chol` from x_train, kernel and jitter.
    void refactorize();
    /// Mean and predictive variance (latent + noise) for standardized rows.
    std::pair<Eigen::VectorXd, Eigen::VectorXd> predict(const Eigen::MatrixXd& xs) const;
};

struct SvrModel {
    double gamma = 1.0;
    double c = 10.0;
    double epsilon = 0.1;
    Eigen::MatrixXd support_vectors;
    Eigen::VectorXd coef;             // alpha - alpha* of each support vector
    std::vector<std::size_t> sv_index;  // training-row index of each support vector
    double bias = 0.0;
    double dual_objective = 0.0;
    int iterations = 0;

    Eigen::VectorXd predict(const Eigen::MatrixXd& xs) const;
};

/// Single-layer LSTM with a linear read-out of the last hidden state.
/// Gate order in the stacked weights is input, forget, cell, output.
/// Parameters are kept in one flat vector: Wx (4H x K), Wh (4H x H), b (4H),
/// w_out (H), b_out (1), each column-major.
class LstmNetwork {
public:
    LstmNetwork() = default;
    LstmNetwork(int inputs, int hidden);

    int inputs() const noexcept { return inputs_; }
    int hidden() const noexcept { return hidden_; }
    std::size_t parameter_count() const noexcept { return params_.size(); }
    std::span<double> parameters() noexcept { return params_; }
    std::span<const double> parameters() const noexcept { return params_; }

    void init_uniform(Rng& rng, double scale);

    /// Sequence is T x K, oldest row first.
    double forward(const Eigen::MatrixXd& sequence) const;

    /// Mean squared error over the batch and its gradient (backpropagation
    /// through time). `grad` is resized to parameter_count().
    double loss_and_gradient(std::span<const Eigen::MatrixXd> sequences, std::span<const double> targets,
                             std::vector<double>& grad) const;

private:
    int inputs_ = 0;
    int hidden_ = 0;
    std::vector<double> params_;
};

struct LstmModel {
    int window = 12;
    LstmNetwork network;
    std::vector<double> loss_history;  // per-epoch mean training loss

    Eigen::VectorXd predict(const Eigen::MatrixXd& xs) const;
};

/// Row t of `xs` ends a window of up to `window` rows; early rows get shorter sequences.
std::vector<Eigen::MatrixXd> make_windows(const Eigen::MatrixXd& xs, int window);

using ModelState = std::variant<LinearModel, GprModel, SvrModel, LstmModel>;

class FittedRegressor {
public:
    FittedRegressor(RegressorKind kind, Hyperparameters hyper, std::uint64_t seed, std::vector<std::string> names,
                    Standardizer standardizer, ModelState state, std::map<std::string, double> diagnostics = {});

    RegressorKind kind() const noexcept { return kind_; }
    const Hyperparameters& hyperparameters() const noexcept { return hyper_; }
    std::uint64_t seed() const noexcept { return seed_; }
    const std::vector<std::string>& feature_names() const noexcept { return names_; }
    const Standardizer& standardizer() const noexcept { return standardizer_; }
    const ModelState& state() const noexcept { return state_; }
    const std::map<std::string, double>& diagnostics() const noexcept { return diagnostics_; }

    /// Throws FeatureMismatch when names or column count differ from training.
    Prediction predict(const FeatureMatrix& rows) const;

    nlohmann::json to_json() const;
    static FittedRegressor from_json(const nlohmann::json& j);
    void save(const std::filesystem::path& path) const;
    static FittedRegressor load(const std::filesystem::path& path);

private:
    RegressorKind kind_;
    Hyperparameters hyper_;
    std::uint64_t seed_;
    std::vector<std::string> names_;
    Standardizer standardizer_;
    ModelState state_;
    std::map<std::string, double> diagnostics_;
};

FittedRegressor fit_ridge(const DesignMatrix& data, double lambda);
FittedRegressor fit_lasso(const DesignMatrix& data, double lambda, double tol = 1e-6, int max_iter = 10000);
FittedRegressor fit_gpr(const DesignMatrix& data, const GprKernel& kernel, bool optimize, std::uint64_t seed = 0,
                        int starts = 8);
FittedRegressor fit_svr(const DesignMatrix& data, double c = 10.0, double epsilon = 0.1, double gamma = 0.0,
                        double tol = 1e-4, long max_iter = 100000);
struct LstmOptions {
    int window = 12;
    int hidden = 16;
    int epochs = 200;
    double lr = 1e-2;
    int batch = 32;
    double clip = 1.0;
    double init_scale = 0.08;
};
FittedRegressor fit_lstm(const DesignMatrix& data, const LstmOptions& options, std::uint64_t seed);

/// Dispatches on spec.kind with resolved hyperparameters.
FittedRegressor fit(const DesignMatrix& data, const RegressorSpec& spec);

/// Log marginal likelihood of standardized data under a kernel; nullopt if
/// the Gram matrix cannot be factorized.
std::optional<double> gpr_log_marginal_likelihood(const Eigen::MatrixXd& xs, const Eigen::VectorXd& ys,
                                                  const GprKernel& kernel, double jitter = 1e-8);

/// Objective of the lasso in standardized space: ||y - Xw||^2 / (2n) + lambda * |w|_1.
double lasso_objective(const Eigen::MatrixXd& xs, const Eigen::VectorXd& ys, const Eigen::VectorXd& w, double lambda);

}  // namespace hydroflux::ml
