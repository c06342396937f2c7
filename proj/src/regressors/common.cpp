#include <cmath>
#include <fstream>
#include <sstream>

#include "hydroflux/error.hpp"
#include "hydroflux/regressors.hpp"
#include "hydroflux/version.hpp"

namespace hydroflux::ml {

namespace {

nlohmann::json vec_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd json_vec(const nlohmann::json& j) {
    auto v = j.get<std::vector<double>>();
    return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

nlohmann::json mat_json(const Eigen::MatrixXd& m) {
    return {{"rows", m.rows()}, {"cols", m.cols()},
            {"data", std::vector<double>(m.data(), m.data() + m.size())}};
}

Eigen::MatrixXd json_mat(const nlohmann::json& j) {
    auto data = j.at("data").get<std::vector<double>>();
    Eigen::Index r = j.at("rows").get<Eigen::Index>();
    Eigen::Index c = j.at("cols").get<Eigen::Index>();
    if (static_cast<Eigen::Index>(data.size()) != r * c) fail("ModelFormat", "matrix payload size mismatch");
    return Eigen::Map<Eigen::MatrixXd>(data.data(), r, c);
}

}  // namespace

std::string_view to_string(RegressorKind kind) {
    switch (kind) {
        case RegressorKind::Ridge: return "ridge";
        case RegressorKind::Lasso: return "lasso";
        case RegressorKind::Gpr: return "gpr";
        case RegressorKind::Svr: return "svr";
        case RegressorKind::Lstm: return "lstm";
    }
    return "";
}

RegressorKind parse_kind(std::string_view text) {
    for (auto k : {RegressorKind::Ridge, RegressorKind::Lasso, RegressorKind::Gpr, RegressorKind::Svr,
                   RegressorKind::Lstm}) {
        if (text == to_string(k)) return k;
    }
    fail("UnknownModel", "unknown regressor kind '" + std::string(text) + "'");
}

void DesignMatrix::validate(bool linear) const {
    if (x.cols() < 1) fail("EmptyDesign", "design matrix has no features");
    if (static_cast<std::size_t>(x.cols()) != feature_names.size()) {
        fail("FeatureMismatch", "feature name count differs from column count");
    }
    if (x.rows() != target.size()) fail("LengthMismatch", "target length differs from row count");
    if (x.rows() < 1 || (linear && x.rows() < x.cols())) {
        fail("InsufficientData", "design matrix has " + std::to_string(x.rows()) + " rows for " +
                                     std::to_string(x.cols()) + " features");
    }
    if (!x.allFinite() || !target.allFinite()) fail("NonFiniteValue", "design matrix contains non-finite entries");
}

// ------------------------------------------------------------- Standardizer

Standardizer Standardizer::fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    Standardizer s;
    const double n = static_cast<double>(x.rows());
    s.mean_ = x.colwise().mean().transpose();
    s.sd_.resize(x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        double var = (x.col(j).array() - s.mean_(j)).square().sum() / n;
        double sd = std::sqrt(var);
        if (!(sd > 1e-12 * std::max(1.0, std::abs(s.mean_(j))))) {
            fail("ConstantColumn", "feature column " + std::to_string(j) + " is constant");
        }
        s.sd_(j) = sd;
    }
    s.target_mean_ = y.mean();
    double tsd = std::sqrt((y.array() - s.target_mean_).square().sum() / n);
    s.target_sd_ = tsd > 1e-12 * std::max(1.0, std::abs(s.target_mean_)) ? tsd : 1.0;
    return s;
}

Eigen::MatrixXd Standardizer::transform(const Eigen::MatrixXd& x) const {
    Eigen::MatrixXd out(x.rows(), x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) out.col(j) = (x.col(j).array() - mean_(j)) / sd_(j);
    return out;
}

Eigen::VectorXd Standardizer::transform_target(const Eigen::VectorXd& y) const {
    return (y.array() - target_mean_) / target_sd_;
}

nlohmann::json Standardizer::to_json() const {
    return {{"feature_mean", vec_json(mean_)},
            {"feature_sd", vec_json(sd_)},
            {"target_mean", target_mean_},
            {"target_sd", target_sd_}};
}

Standardizer Standardizer::from_json(const nlohmann::json& j) {
    Standardizer s;
    s.mean_ = json_vec(j.at("feature_mean"));
    s.sd_ = json_vec(j.at("feature_sd"));
    s.target_mean_ = j.at("target_mean").get<double>();
    s.target_sd_ = j.at("target_sd").get<double>();
    return s;
}

// ---------------------------------------------------------- hyperparameters

Hyperparameters default_hyperparameters(RegressorKind kind) {
    switch (kind) {
        case RegressorKind::Ridge: return {{"lambda", 1.0}};
        case RegressorKind::Lasso: return {{"lambda", 0.01}, {"tol", 1e-6}, {"max_iter", 10000}};
        case RegressorKind::Gpr:
            return {{"signal_var", 1.0}, {"length_scale", 1.0}, {"noise_var", 0.1}, {"optimize", 1}, {"starts", 8}};
        case RegressorKind::Svr:
            return {{"c", 10.0}, {"epsilon", 0.1}, {"gamma", 0.0}, {"tol", 1e-4}, {"max_iter", 100000}};
        case RegressorKind::Lstm:
            return {{"window", 12}, {"hidden", 16}, {"epochs", 200}, {"lr", 1e-2},
                    {"batch", 32},  {"clip", 1.0},  {"init_scale", 0.08}};
    }
    return {};
}

Hyperparameters resolve_hyperparameters(RegressorKind kind, const Hyperparameters& overrides) {
    auto h = default_hyperparameters(kind);
    for (const auto& [key, value] : overrides) {
        auto it = h.find(key);
        if (it == h.end()) {
            fail("UnknownHyperparameter", "'" + key + "' is not a hyperparameter of " + std::string(to_string(kind)));
        }
        it->second = value;
    }
    return h;
}

FittedRegressor fit(const DesignMatrix& data, const RegressorSpec& spec) {
    const auto h = resolve_hyperparameters(spec.kind, spec.overrides);
    FittedRegressor model = [&]() {
        switch (spec.kind) {
            case RegressorKind::Ridge: return fit_ridge(data, h.at("lambda"));
            case RegressorKind::Lasso:
                return fit_lasso(data, h.at("lambda"), h.at("tol"), static_cast<int>(h.at("max_iter")));
            case RegressorKind::Gpr:
                return fit_gpr(data, GprKernel{h.at("signal_var"), h.at("length_scale"), h.at("noise_var")},
                               h.at("optimize") != 0.0, spec.seed, static_cast<int>(h.at("starts")));
            case RegressorKind::Svr:
                return fit_svr(data, h.at("c"), h.at("epsilon"), h.at("gamma"), h.at("tol"),
                               static_cast<long>(h.at("max_iter")));
            case RegressorKind::Lstm: {
                LstmOptions o;
                o.window = static_cast<int>(h.at("window"));
                o.hidden = static_cast<int>(h.at("hidden"));
                o.epochs = static_cast<int>(h.at("epochs"));
                o.lr = h.at("lr");
                o.batch = static_cast<int>(h.at("batch"));
                o.clip = h.at("clip");
                o.init_scale = h.at("init_scale");
                return fit_lstm(data, o, spec.seed);
            }
        }
        fail("UnknownModel", "unhandled regressor kind");
    }();
    return FittedRegressor(spec.kind, h, spec.seed, model.feature_names(), model.standardizer(), model.state(),
                           model.diagnostics());
}

// --------------------------------------------------------------- Prediction

std::pair<std::vector<double>, std::vector<double>> Prediction::interval(double z) const {
    if (!sd) fail("NoVariance", "prediction carries no variance");
    std::vector<double> lo(mean.size());
    std::vector<double> hi(mean.size());
    for (std::size_t i = 0; i < mean.size(); ++i) {
        lo[i] = mean[i] - z * (*sd)[i];
        hi[i] = mean[i] + z * (*sd)[i];
    }
    return {std::move(lo), std::move(hi)};
}

// ---------------------------------------------------------- FittedRegressor

FittedRegressor::FittedRegressor(RegressorKind kind, Hyperparameters hyper, std::uint64_t seed,
                                 std::vector<std::string> names, Standardizer standardizer, ModelState state,
                                 std::map<std::string, double> diagnostics)
    : kind_(kind),
      hyper_(std::move(hyper)),
      seed_(seed),
      names_(std::move(names)),
      standardizer_(std::move(standardizer)),
      state_(std::move(state)),
      diagnostics_(std::move(diagnostics)) {}

Prediction FittedRegressor::predict(const FeatureMatrix& rows) const {
    if (rows.names != names_ || static_cast<std::size_t>(rows.x.cols()) != names_.size()) {
        std::string want;
        for (const auto& n : names_) want += (want.empty() ? "" : ",") + n;
        fail("FeatureMismatch", "model expects features [" + want + "]");
    }
    Prediction out;
    if (rows.x.rows() == 0) {
        if (kind_ == RegressorKind::Gpr) out.sd = std::vector<double>{};
        return out;
    }
    if (!rows.x.allFinite()) fail("NonFiniteValue", "prediction rows contain non-finite entries");
    const Eigen::MatrixXd xs = standardizer_.transform(rows.x);
    Eigen::VectorXd mean_std;
    std::visit(
        [&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, LinearModel>) {
                mean_std = (xs * m.weights).array() + m.bias;
            } else if constexpr (std::is_same_v<T, GprModel>) {
                auto [mu, var] = m.predict(xs);
                mean_std = mu;
                std::vector<double> sd(static_cast<std::size_t>(var.size()));
                for (Eigen::Index i = 0; i < var.size(); ++i) {
                    sd[static_cast<std::size_t>(i)] = std::sqrt(std::max(var(i), 0.0)) * standardizer_.target_sd();
                }
                out.sd = std::move(sd);
            } else {
                mean_std = m.predict(xs);
            }
        },
        state_);
    out.mean.resize(static_cast<std::size_t>(mean_std.size()));
    for (Eigen::Index i = 0; i < mean_std.size(); ++i) {
        out.mean[static_cast<std::size_t>(i)] = standardizer_.inverse_target(mean_std(i));
    }
    return out;
}

nlohmann::json FittedRegressor::to_json() const {
    nlohmann::json j;
    j["format_version"] = kFormatVersion;
    j["kind"] = std::string(to_string(kind_));
    j["seed"] = seed_;
    j["hyperparameters"] = hyper_;
    j["feature_names"] = names_;
    j["standardizer"] = standardizer_.to_json();
    j["diagnostics"] = diagnostics_;
    nlohmann::json p;
    std::visit(
        [&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, LinearModel>) {
                p = {{"weights", vec_json(m.weights)}, {"bias", m.bias}, {"iterations", m.iterations}};
            } else if constexpr (std::is_same_v<T, GprModel>) {
                p = {{"signal_var", m.kernel.signal_var},
                     {"length_scale", m.kernel.length_scale},
                     {"noise_var", m.kernel.noise_var},
                     {"jitter", m.jitter},
                     {"x_train", mat_json(m.x_train)},
                     {"alpha", vec_json(m.alpha)},
                     {"log_marginal_likelihood", m.log_marginal_likelihood},
                     {"initial_log_marginal_likelihood", m.initial_log_marginal_likelihood}};
            } else if constexpr (std::is_same_v<T, SvrModel>) {
                p = {{"gamma", m.gamma},
                     {"c", m.c},
                     {"epsilon", m.epsilon},
                     {"support_vectors", mat_json(m.support_vectors)},
                     {"coef", vec_json(m.coef)},
                     {"sv_index", m.sv_index},
                     {"bias", m.bias},
                     {"dual_objective", m.dual_objective},
                     {"iterations", m.iterations}};
            } else {
                p = {{"window", m.window},
                     {"inputs", m.network.inputs()},
                     {"hidden", m.network.hidden()},
                     {"weights", std::vector<double>(m.network.parameters().begin(), m.network.parameters().end())},
                     {"loss_history", m.loss_history}};
            }
        },
        state_);
    j["parameters"] = p;
    return j;
}

FittedRegressor FittedRegressor::from_json(const nlohmann::json& j) {
    try {
        if (j.at("format_version").get<int>() != kFormatVersion) {
            fail("ModelFormat", "unsupported model format_version " + j.at("format_version").dump());
        }
        auto kind = parse_kind(j.at("kind").get<std::string>());
        const auto& p = j.at("parameters");
        ModelState state;
        switch (kind) {
            case RegressorKind::Ridge:
            case RegressorKind::Lasso: {
                LinearModel m;
                m.weights = json_vec(p.at("weights"));
                m.bias = p.at("bias").get<double>();
                m.iterations = p.at("iterations").get<int>();
                state = m;
                break;
            }
            case RegressorKind::Gpr: {
                GprModel m;
                m.kernel = {p.at("signal_var").get<double>(), p.at("length_scale").get<double>(),
                            p.at("noise_var").get<double>()};
                m.jitter = p.at("jitter").get<double>();
                m.x_train = json_mat(p.at("x_train"));
                m.alpha = json_vec(p.at("alpha"));
                m.log_marginal_likelihood = p.at("log_marginal_likelihood").get<double>();
                m.initial_log_marginal_likelihood = p.at("initial_log_marginal_likelihood").get<double>();
                m.refactorize();
                state = std::move(m);
                break;
            }
            case RegressorKind::Svr: {
                SvrModel m;
                m.gamma = p.at("gamma").get<double>();
                m.c = p.at("c").get<double>();
                m.epsilon = p.at("epsilon").get<double>();
                m.support_vectors = json_mat(p.at("support_vectors"));
                m.coef = json_vec(p.at("coef"));
                m.sv_index = p.at("sv_index").get<std::vector<std::size_t>>();
                m.bias = p.at("bias").get<double>();
                m.dual_objective = p.at("dual_objective").get<double>();
                m.iterations = p.at("iterations").get<int>();
                state = std::move(m);
                break;
            }
            case RegressorKind::Lstm: {
                LstmModel m;
                m.window = p.at("window").get<int>();
                m.network = LstmNetwork(p.at("inputs").get<int>(), p.at("hidden").get<int>());
                auto w = p.at("weights").get<std::vector<double>>();
                if (w.size() != m.network.parameter_count()) fail("ModelFormat", "LSTM weight count mismatch");
                std::copy(w.begin(), w.end(), m.network.parameters().begin());
                m.loss_history = p.at("loss_history").get<std::vector<double>>();
                state = std::move(m);
                break;
            }
        }
        return FittedRegressor(kind, j.at("hyperparameters").get<Hyperparameters>(), j.at("seed").get<std::uint64_t>(),
                               j.at("feature_names").get<std::vector<std::string>>(),
                               Standardizer::from_json(j.at("standardizer")), std::move(state),
                               j.at("diagnostics").get<std::map<std::string, double>>());
    } catch (const nlohmann::json::exception& e) {
        fail("ModelFormat", std::string("malformed model file: ") + e.what());
    }
}

void FittedRegressor::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail("IoError", "cannot write " + path.string());
    out << to_json().dump(1) << "\n";
}

FittedRegressor FittedRegressor::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("FileNotFound", "cannot open " + path.string());
    try {
        return from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
        fail("ModelFormat", std::string("cannot parse model file: ") + e.what());
    }
}

}  // namespace hydroflux::ml
