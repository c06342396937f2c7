#include <cmath>
#include <numeric>

#include "hydroflux/error.hpp"
#include "hydroflux/regressors.hpp"

namespace hydroflux::ml {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Views into the flat parameter (or gradient) vector.
template <class Scalar>
struct Views {
    using Mat = Eigen::Map<Eigen::Matrix<std::remove_const_t<Scalar>, Eigen::Dynamic, Eigen::Dynamic>>;
    using Vec = Eigen::Map<Eigen::Matrix<std::remove_const_t<Scalar>, Eigen::Dynamic, 1>>;
    using CMat = Eigen::Map<const Eigen::Matrix<std::remove_const_t<Scalar>, Eigen::Dynamic, Eigen::Dynamic>>;
    using CVec = Eigen::Map<const Eigen::Matrix<std::remove_const_t<Scalar>, Eigen::Dynamic, 1>>;
    using M = std::conditional_t<std::is_const_v<Scalar>, CMat, Mat>;
    using V = std::conditional_t<std::is_const_v<Scalar>, CVec, Vec>;

    M wx;
    M wh;
    V b;
    V w_out;
    Scalar* b_out;

    Views(Scalar* p, int k, int h)
        : wx(p, 4 * h, k),
          wh(p + 4 * h * k, 4 * h, h),
          b(p + 4 * h * k + 4 * h * h, 4 * h),
          w_out(p + 4 * h * k + 4 * h * h + 4 * h, h),
          b_out(p + 4 * h * k + 4 * h * h + 5 * h) {}
};

struct StepCache {
    Eigen::VectorXd i, f, g, o, c, tanh_c, h;
};

}  // namespace

LstmNetwork::LstmNetwork(int inputs, int hidden)
    : inputs_(inputs),
      hidden_(hidden),
      params_(static_cast<std::size_t>(4 * hidden * inputs + 4 * hidden * hidden + 4 * hidden + hidden + 1), 0.0) {
    if (inputs < 1 || hidden < 1) fail("InvalidHyperparameter", "LSTM needs at least one input and one hidden unit");
}

void LstmNetwork::init_uniform(Rng& rng, double scale) {
    for (auto& w : params_) w = rng.uniform(-scale, scale);
}

double LstmNetwork::forward(const Eigen::MatrixXd& sequence) const {
    const int h = hidden_;
    Views<const double> v(params_.data(), inputs_, h);
    Eigen::VectorXd hs = Eigen::VectorXd::Zero(h);
    Eigen::VectorXd cs = Eigen::VectorXd::Zero(h);
    for (Eigen::Index s = 0; s < sequence.rows(); ++s) {
        Eigen::VectorXd z = v.wx * sequence.row(s).transpose() + v.wh * hs + v.b;
        for (int u = 0; u < h; ++u) {
            const double ig = sigmoid(z(u));
            const double fg = sigmoid(z(h + u));
            const double gg = std::tanh(z(2 * h + u));
            const double og = sigmoid(z(3 * h + u));
            cs(u) = fg * cs(u) + ig * gg;
            hs(u) = og * std::tanh(cs(u));
        }
    }
    return v.w_out.dot(hs) + *v.b_out;
}

double LstmNetwork::loss_and_gradient(std::span<const Eigen::MatrixXd> sequences, std::span<const double> targets,
                                      std::vector<double>& grad) const {
    if (sequences.size() != targets.size() || sequences.empty()) {
        fail("LengthMismatch", "LSTM batch sequences and targets differ in count");
    }
    const int h = hidden_;
    grad.assign(params_.size(), 0.0);
    Views<const double> v(params_.data(), inputs_, h);
    Views<double> gv(grad.data(), inputs_, h);
    const double batch = static_cast<double>(sequences.size());
    double loss = 0.0;
    std::vector<StepCache> cache;

    for (std::size_t n = 0; n < sequences.size(); ++n) {
        const Eigen::MatrixXd& seq = sequences[n];
        const Eigen::Index steps = seq.rows();
        cache.assign(static_cast<std::size_t>(steps), {});
        Eigen::VectorXd hs = Eigen::VectorXd::Zero(h);
        Eigen::VectorXd cs = Eigen::VectorXd::Zero(h);
        for (Eigen::Index s = 0; s < steps; ++s) {
            auto& st = cache[static_cast<std::size_t>(s)];
            Eigen::VectorXd z = v.wx * seq.row(s).transpose() + v.wh * hs + v.b;
            st.i = z.segment(0, h).unaryExpr(&sigmoid);
            st.f = z.segment(h, h).unaryExpr(&sigmoid);
            st.g = z.segment(2 * h, h).array().tanh();
            st.o = z.segment(3 * h, h).unaryExpr(&sigmoid);
            st.c = st.f.cwiseProduct(cs) + st.i.cwiseProduct(st.g);
            st.tanh_c = st.c.array().tanh();
            st.h = st.o.cwiseProduct(st.tanh_c);
            hs = st.h;
            cs = st.c;
        }
        const double out = v.w_out.dot(hs) + *v.b_out;
        const double err = out - targets[n];
        loss += err * err / batch;

        const double dout = 2.0 * err / batch;
        gv.w_out += dout * hs;
        *gv.b_out += dout;
        Eigen::VectorXd dh = dout * v.w_out;
        Eigen::VectorXd dc = Eigen::VectorXd::Zero(h);
        Eigen::VectorXd dz(4 * h);
        for (Eigen::Index s = steps - 1; s >= 0; --s) {
            const auto& st = cache[static_cast<std::size_t>(s)];
            const Eigen::VectorXd c_prev = s > 0 ? cache[static_cast<std::size_t>(s - 1)].c : Eigen::VectorXd::Zero(h);
            const Eigen::VectorXd h_prev = s > 0 ? cache[static_cast<std::size_t>(s - 1)].h : Eigen::VectorXd::Zero(h);
            dc += dh.cwiseProduct(st.o).cwiseProduct((1.0 - st.tanh_c.array().square()).matrix());
            dz.segment(0, h) = dc.cwiseProduct(st.g).cwiseProduct(st.i.cwiseProduct((1.0 - st.i.array()).matrix()));
            dz.segment(h, h) = dc.cwiseProduct(c_prev).cwiseProduct(st.f.cwiseProduct((1.0 - st.f.array()).matrix()));
            dz.segment(2 * h, h) = dc.cwiseProduct(st.i).cwiseProduct((1.0 - st.g.array().square()).matrix());
            dz.segment(3 * h, h) = dh.cwiseProduct(st.tanh_c).cwiseProduct(st.o.cwiseProduct((1.0 - st.o.array()).matrix()));
            gv.wx.noalias() += dz * seq.row(s);
            gv.wh.noalias() += dz * h_prev.transpose();
            gv.b += dz;
            dh = v.wh.transpose() * dz;
            dc = dc.cwiseProduct(st.f);
        }
    }
    return loss;
}

std::vector<Eigen::MatrixXd> make_windows(const Eigen::MatrixXd& xs, int window) {
    if (window < 1) fail("InvalidHyperparameter", "LSTM window must be >= 1");
    std::vector<Eigen::MatrixXd> out;
    out.reserve(static_cast<std::size_t>(xs.rows()));
    for (Eigen::Index t = 0; t < xs.rows(); ++t) {
        const Eigen::Index first = std::max<Eigen::Index>(0, t - window + 1);
        out.emplace_back(xs.middleRows(first, t - first + 1));
    }
    return out;
}

Eigen::VectorXd LstmModel::predict(const Eigen::MatrixXd& xs) const {
    auto windows = make_windows(xs, window);
    Eigen::VectorXd out(xs.rows());
    for (std::size_t t = 0; t < windows.size(); ++t) out(static_cast<Eigen::Index>(t)) = network.forward(windows[t]);
    return out;
}

FittedRegressor fit_lstm(const DesignMatrix& data, const LstmOptions& options, std::uint64_t seed) {
    data.validate(false);
    if (options.epochs < 1 || options.batch < 1 || !(options.lr > 0.0) || !(options.clip > 0.0)) {
        fail("InvalidHyperparameter", "LSTM requires epochs, batch >= 1 and positive lr, clip");
    }
    auto standardizer = Standardizer::fit(data.x, data.target);
    const Eigen::MatrixXd xs = standardizer.transform(data.x);
    const Eigen::VectorXd ys = standardizer.transform_target(data.target);
    const auto windows = make_windows(xs, options.window);

    Rng root(seed);
    Rng init_rng = root.split("lstm-init");
    LstmModel m;
    m.window = options.window;
    m.network = LstmNetwork(static_cast<int>(xs.cols()), options.hidden);
    m.network.init_uniform(init_rng, options.init_scale);

    const std::size_t np = m.network.parameter_count();
    std::vector<double> first_moment(np, 0.0);
    std::vector<double> second_moment(np, 0.0);
    std::vector<double> grad;
    constexpr double kBeta1 = 0.9;
    constexpr double kBeta2 = 0.999;
    constexpr double kEps = 1e-8;
    long step = 0;

    std::vector<std::size_t> order(windows.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<Eigen::MatrixXd> batch_seq;
    std::vector<double> batch_y;
    Rng shuffle_rng = root.split("lstm-shuffle");
    for (int epoch = 0; epoch < options.epochs; ++epoch) {
        Rng er = shuffle_rng.split(static_cast<std::uint64_t>(epoch));
        std::shuffle(order.begin(), order.end(), er.engine());
        double epoch_loss = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(options.batch)) {
            const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(options.batch));
            batch_seq.clear();
            batch_y.clear();
            for (std::size_t k = start; k < stop; ++k) {
                batch_seq.push_back(windows[order[k]]);
                batch_y.push_back(ys(static_cast<Eigen::Index>(order[k])));
            }
            const double loss = m.network.loss_and_gradient(batch_seq, batch_y, grad);
            if (!std::isfinite(loss)) {
                fail("NonFiniteLoss", "LSTM training loss became non-finite at epoch " + std::to_string(epoch) +
                                          " (batch starting " + std::to_string(start) + ")");
            }
            epoch_loss += loss;
            ++batches;
            double norm = 0.0;
            for (double gval : grad) norm += gval * gval;
            norm = std::sqrt(norm);
            const double scale = norm > options.clip ? options.clip / norm : 1.0;
            ++step;
            const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
            const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
            auto params = m.network.parameters();
            for (std::size_t p = 0; p < np; ++p) {
                const double gp = grad[p] * scale;
                first_moment[p] = kBeta1 * first_moment[p] + (1.0 - kBeta1) * gp;
                second_moment[p] = kBeta2 * second_moment[p] + (1.0 - kBeta2) * gp * gp;
                params[p] -= options.lr * (first_moment[p] / bc1) / (std::sqrt(second_moment[p] / bc2) + kEps);
            }
        }
        m.loss_history.push_back(epoch_loss / static_cast<double>(batches));
    }

    std::map<std::string, double> diag{{"final_loss", m.loss_history.back()},
                                       {"initial_loss", m.loss_history.front()},
                                       {"epochs", static_cast<double>(options.epochs)}};
    return FittedRegressor(RegressorKind::Lstm,
                           {{"window", options.window},
                            {"hidden", options.hidden},
                            {"epochs", options.epochs},
                            {"lr", options.lr},
                            {"batch", options.batch},
                            {"clip", options.clip},
                            {"init_scale", options.init_scale}},
                           seed, data.feature_names, standardizer, std::move(m), std::move(diag));
}

}  // namespace hydroflux::ml
