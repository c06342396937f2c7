// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fail.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <future>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cli_util.hpp"
#include "hydroflux/abcd.hpp"
#include "hydroflux/calibrate.hpp"
#include "hydroflux/forcing_prep.hpp"
#include "hydroflux/metrics.hpp"
#include "hydroflux/piml.hpp"
#include "hydroflux/regressors.hpp"
#include "hydroflux/synth.hpp"

using namespace hydroflux;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void criterion(int id, const std::string& title, double budget_s, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = budget_s <= 0.0 || secs < budget_s;
    if (!in_time) o.detail += "; over time budget of " + std::to_string(budget_s) + " s";
    const bool pass = o.pass && in_time;
    if (!pass) ++failures;
    std::printf("%s criterion %d: %s (%s) [%.2f s]\n", pass ? "PASS" : "FAIL", id, title.c_str(), o.detail.c_str(),
                secs);
    std::fflush(stdout);
}

std::string fmt(double v) {
    std::ostringstream s;
    s.precision(6);
    s << v;
    return s.str();
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// ------------------------------------------------------------ oracles

using LVec = std::vector<long double>;
using LMat = std::vector<LVec>;

LMat invert(LMat a) {
    const std::size_t n = a.size();
    LMat inv(n, LVec(n, 0));
    for (std::size_t i = 0; i < n; ++i) inv[i][i] = 1;
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (fabsl(a[r][c]) > fabsl(a[piv][c])) piv = r;
        std::swap(a[c], a[piv]);
        std::swap(inv[c], inv[piv]);
        const long double d = a[c][c];
        for (std::size_t j = 0; j < n; ++j) {
            a[c][j] /= d;
            inv[c][j] /= d;
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (r == c) continue;
            const long double f = a[r][c];
            for (std::size_t j = 0; j < n; ++j) {
                a[r][j] -= f * a[c][j];
                inv[r][j] -= f * inv[c][j];
            }
        }
    }
    return inv;
}

struct Scaled {
    LMat x;
    LVec y, mean, sd;
    long double ymean = 0, ysd = 1;
};

Scaled scale(const ml::DesignMatrix& d) {
    const std::size_t n = d.rows(), k = static_cast<std::size_t>(d.x.cols());
    Scaled s;
    s.mean.assign(k, 0);
    s.sd.assign(k, 0);
    for (std::size_t j = 0; j < k; ++j) {
        for (std::size_t i = 0; i < n; ++i) s.mean[j] += d.x(i, j);
        s.mean[j] /= n;
        for (std::size_t i = 0; i < n; ++i) s.sd[j] += (d.x(i, j) - s.mean[j]) * (d.x(i, j) - s.mean[j]);
        s.sd[j] = sqrtl(s.sd[j] / n);
    }
    for (std::size_t i = 0; i < n; ++i) s.ymean += d.target(i);
    s.ymean /= n;
    long double v = 0;
    for (std::size_t i = 0; i < n; ++i) v += (d.target(i) - s.ymean) * (d.target(i) - s.ymean);
    s.ysd = v > 0 ? sqrtl(v / n) : 1.0L;
    s.x.assign(n, LVec(k));
    s.y.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < k; ++j) s.x[i][j] = (d.x(i, j) - s.mean[j]) / s.sd[j];
        s.y[i] = (d.target(i) - s.ymean) / s.ysd;
    }
    return s;
}

long double sqdist(const LVec& a, const LVec& b) {
    long double s = 0;
    for (std::size_t j = 0; j < a.size(); ++j) s += (a[j] - b[j]) * (a[j] - b[j]);
    return s;
}

ml::DesignMatrix random_design(std::uint64_t seed, int n, int k, double noise) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    ml::DesignMatrix d;
    d.x.resize(n, k);
    d.target.resize(n);
    for (int j = 0; j < k; ++j) d.feature_names.push_back("x" + std::to_string(j));
    for (int i = 0; i < n; ++i) {
        double y = 1.0;
        for (int j = 0; j < k; ++j) {
            d.x(i, j) = g(rng) * (1.0 + j) + j;
            y += (j % 2 == 0 ? 1.5 : -0.7) * d.x(i, j);
        }
        d.target(i) = y + noise * g(rng);
    }
    return d;
}

double ridge_error() {
    const auto d = random_design(101, 50, 4, 0.2);
    const double lambda = 0.3;
    const auto s = scale(d);
    const std::size_t k = 4;
    LMat a(k, LVec(k, 0));
    LVec b(k, 0);
    for (std::size_t i = 0; i < s.x.size(); ++i) {
        for (std::size_t r = 0; r < k; ++r) {
            b[r] += s.x[i][r] * s.y[i];
            for (std::size_t c = 0; c < k; ++c) a[r][c] += s.x[i][r] * s.x[i][c];
        }
    }
    for (std::size_t r = 0; r < k; ++r) a[r][r] += lambda;
    const auto ainv = invert(a);
    const auto model = ml::fit_ridge(d, lambda);
    const auto& w = std::get<ml::LinearModel>(model.state()).weights;
    double worst = 0;
    for (std::size_t r = 0; r < k; ++r) {
        long double e = 0;
        for (std::size_t c = 0; c < k; ++c) e += ainv[r][c] * b[c];
        worst = std::max(worst, std::abs(w(static_cast<Eigen::Index>(r)) - static_cast<double>(e)));
    }
    return worst;
}

double lasso_error() {
    auto d = random_design(102, 40, 2, 0.5);
    d.x.col(1) += 0.6 * d.x.col(0);
    const double lambda = 0.15;
    const auto s = scale(d);
    const long double n = s.x.size();
    long double a00 = 0, a01 = 0, a11 = 0, b0 = 0, b1 = 0, yy = 0;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
        a00 += s.x[i][0] * s.x[i][0];
        a01 += s.x[i][0] * s.x[i][1];
        a11 += s.x[i][1] * s.x[i][1];
        b0 += s.x[i][0] * s.y[i];
        b1 += s.x[i][1] * s.y[i];
        yy += s.y[i] * s.y[i];
    }
    const double c00 = static_cast<double>(a00 / (2 * n)), c01 = static_cast<double>(a01 / n),
                 c11 = static_cast<double>(a11 / (2 * n)), l0 = static_cast<double>(b0 / n),
                 l1 = static_cast<double>(b1 / n), c = static_cast<double>(yy / (2 * n));
    double best = 1e300;
    for (int i = -15000; i <= 15000; ++i) {
        const double w0 = i * 1e-4;
        const double base = c - l0 * w0 + c00 * w0 * w0 + lambda * std::abs(w0);
        for (int j = -15000; j <= 15000; ++j) {
            const double w1 = j * 1e-4;
            best = std::min(best, base - l1 * w1 + c01 * w0 * w1 + c11 * w1 * w1 + lambda * std::abs(w1));
        }
    }
    const auto model = ml::fit_lasso(d, lambda, 1e-12, 100000);
    const auto& w = std::get<ml::LinearModel>(model.state()).weights;
    const double got = c - l0 * w(0) - l1 * w(1) + c00 * w(0) * w(0) + c01 * w(0) * w(1) + c11 * w(1) * w(1) +
                       lambda * (std::abs(w(0)) + std::abs(w(1)));
    return std::abs(got - best);
}

double gpr_error() {
    ml::DesignMatrix d;
    d.feature_names = {"x0", "x1"};
    d.x.resize(10, 2);
    d.target.resize(10);
    for (int i = 0; i < 10; ++i) {
        d.x(i, 0) = 0.4 * i;
        d.x(i, 1) = std::cos(1.7 * i);
        d.target(i) = std::sin(d.x(i, 0)) + 0.5 * d.x(i, 1);
    }
    const ml::GprKernel kern{1.2, 0.9, 0.04};
    const auto model = ml::fit_gpr(d, kern, false);
    const long double jit = std::get<ml::GprModel>(model.state()).jitter;
    const auto s = scale(d);
    LMat k(10, LVec(10));
    for (int i = 0; i < 10; ++i)
        for (int j = 0; j < 10; ++j)
            k[i][j] = 1.2L * expl(-sqdist(s.x[i], s.x[j]) / (2 * 0.81L)) + (i == j ? 0.04L + jit : 0.0L);
    const auto kinv = invert(k);
    ml::FeatureMatrix q{Eigen::MatrixXd(6, 2), d.feature_names};
    q.x << -0.3, 0.1, 0.9, -0.8, 1.7, 0.5, 2.2, 0.0, 3.1, -0.4, 5.0, 1.0;
    const auto pred = model.predict(q);
    double worst = 0;
    for (int r = 0; r < 6; ++r) {
        LVec xq(2);
        for (int j = 0; j < 2; ++j) xq[j] = (q.x(r, j) - s.mean[j]) / s.sd[j];
        LVec ks(10);
        for (int i = 0; i < 10; ++i) ks[i] = 1.2L * expl(-sqdist(xq, s.x[i]) / (2 * 0.81L));
        long double mean = 0, quad = 0;
        for (int i = 0; i < 10; ++i)
            for (int j = 0; j < 10; ++j) {
                mean += ks[i] * kinv[i][j] * s.y[j];
                quad += ks[i] * kinv[i][j] * ks[j];
            }
        const double m = static_cast<double>(mean * s.ysd + s.ymean);
        const double v = static_cast<double>((1.2L + 0.04L - quad) * s.ysd * s.ysd);
        worst = std::max({worst, std::abs(pred.mean[r] - m), std::abs((*pred.sd)[r] * (*pred.sd)[r] - v)});
    }
    return worst;
}

double svr_gap() {
    const auto d = random_design(103, 8, 2, 0.4);
    const double c = 2.0, eps = 0.1, gamma = 0.5;
    const auto model = ml::fit_svr(d, c, eps, gamma, 1e-8, 1000000);
    const double dual = std::get<ml::SvrModel>(model.state()).dual_objective;
    const auto s = scale(d);
    const int n = 8, l = 16;
    LMat k(n, LVec(n));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) k[i][j] = expl(-gamma * sqdist(s.x[i], s.x[j]));
    auto sg = [&](int t) { return t < n ? 1.0L : -1.0L; };
    LVec p(l);
    for (int t = 0; t < n; ++t) {
        p[t] = eps - s.y[t];
        p[t + n] = eps + s.y[t];
    }
    auto project = [&](const LVec& v) {
        auto at = [&](long double mu) {
            LVec b(l);
            long double sum = 0;
            for (int i = 0; i < l; ++i) {
                b[i] = std::clamp(v[i] - mu * sg(i), 0.0L, static_cast<long double>(c));
                sum += sg(i) * b[i];
            }
            return std::pair{b, sum};
        };
        long double lo = -1e3, hi = 1e3;
        for (int it = 0; it < 200; ++it) {
            const long double mid = 0.5L * (lo + hi);
            (at(mid).second > 0 ? lo : hi) = mid;
        }
        return at(0.5L * (lo + hi)).first;
    };
    LVec b(l, 0), y = b, prev = b;
    long double tk = 1;
    for (int it = 0; it < 200000; ++it) {
        LVec v(l);
        for (int i = 0; i < l; ++i) {
            long double g = p[i];
            for (int j = 0; j < l; ++j) g += sg(i) * sg(j) * k[i % n][j % n] * y[j];
            v[i] = y[i] - g / (2.0L * n);
        }
        prev = b;
        b = project(v);
        const long double tn = 0.5L * (1 + sqrtl(1 + 4 * tk * tk));
        for (int i = 0; i < l; ++i) y[i] = b[i] + (tk - 1) / tn * (b[i] - prev[i]);
        tk = tn;
    }
    long double f = 0;
    for (int i = 0; i < l; ++i) {
        f += p[i] * b[i];
        for (int j = 0; j < l; ++j) f += 0.5L * b[i] * b[j] * sg(i) * sg(j) * k[i % n][j % n];
    }
    return std::abs(dual - static_cast<double>(f));
}

double lstm_gradient_error() {
    ml::LstmNetwork net(2, 2);
    Rng rng(77);
    net.init_uniform(rng, 0.5);
    std::vector<Eigen::MatrixXd> seqs(2, Eigen::MatrixXd(3, 2));
    seqs[0] << 0.3, -1.2, 0.8, 0.1, -0.5, 0.9;
    seqs[1] << -0.7, 0.4, 1.1, -0.3, 0.2, -1.0;
    const std::vector<double> targets{0.6, -0.4};
    std::vector<double> grad, scratch;
    net.loss_and_gradient(seqs, targets, grad);
    double worst = 0.0;
    const double h = 1e-5;
    for (std::size_t p = 0; p < net.parameter_count(); ++p) {
        auto plus = net, minus = net;
        plus.parameters()[p] += h;
        minus.parameters()[p] -= h;
        const double fd =
            (plus.loss_and_gradient(seqs, targets, scratch) - minus.loss_and_gradient(seqs, targets, scratch)) / (2 * h);
        worst = std::max(worst, std::abs(fd - grad[p]) / std::max({std::abs(fd), std::abs(grad[p]), 1e-7}));
    }
    return worst;
}

// ------------------------------------------------------ synthetic runs

struct SeedRun {
    double piml_nse_q = 0;
    double ml_nse_q = 0;
    double piml_coverage = 0;
    double ml_coverage = 0;
};

SeedRun piml_vs_ml(std::uint64_t seed) {
    SynthSpec spec;
    spec.seed = seed;
    spec.noise = {5.0, 5.0, 5.0, 5.0};
    const auto s = synth_generate(spec);
    // 1976-1978 warm-up, 1979-2008 train (rows 36..395), 2009-2014 test (rows 396..467)
    const auto train = s.forcing.slice(35, 361);
    const auto test = s.forcing.slice(395, 73);
    PimlOptions o;
    o.et_spec = {ml::RegressorKind::Gpr, {}, Rng(seed).split("et").key()};
    o.q_spec = {ml::RegressorKind::Gpr, {}, Rng(seed).split("q").key()};
    const auto model = train_piml(train, o);
    const auto pred = predict_piml(model, test);
    const auto q_obs = test.column(Column::Q).subspan(1);

    auto pt = [&](const MonthlyForcing& f, std::size_t first) {
        ml::FeatureMatrix m{Eigen::MatrixXd(static_cast<Eigen::Index>(f.size() - first), 2), {"p", "t_avg"}};
        const auto p = f.column(Column::P), tx = f.column(Column::Tmax), tn = f.column(Column::Tmin);
        for (std::size_t i = first; i < f.size(); ++i) {
            m.x(static_cast<Eigen::Index>(i - first), 0) = p[i];
            m.x(static_cast<Eigen::Index>(i - first), 1) = 0.5 * (tx[i] + tn[i]);
        }
        return m;
    };
    const auto xtrain = pt(train, 1);
    const auto q_train = train.column(Column::Q).subspan(1);
    ml::DesignMatrix d{xtrain.x, xtrain.names, Eigen::Map<const Eigen::VectorXd>(q_train.data(), static_cast<Eigen::Index>(q_train.size()))};
    const auto pure = ml::fit(d, {ml::RegressorKind::Gpr, {}, seed});
    const auto mp = pure.predict(pt(test, 1));
    const auto [lo, hi] = mp.interval();

    SeedRun r;
    r.piml_nse_q = nse(q_obs, pred.q_hat);
    r.ml_nse_q = nse(q_obs, mp.mean);
    r.piml_coverage = interval_coverage(q_obs, pred.q_interval->first, pred.q_interval->second);
    r.ml_coverage = interval_coverage(q_obs, lo, hi);
    return r;
}

// Runs a subcommand, reruns it from the saved config, and compares every output file.
std::string rerun_mismatch(const fs::path& root, const std::string& name, const std::string& sub,
                           const std::string& args) {
    const auto a = root / (name + "_a");
    const auto b = root / (name + "_b");
    if (cli::run(sub + " --out " + a.string() + " " + args, root / (name + "_a.log")) != 0) return name + ": first run failed";
    if (cli::run("--config " + (a / "config.ini").string() + " " + sub + " --out " + b.string(),
                 root / (name + "_b.log")) != 0) {
        return name + ": rerun from config failed";
    }
    std::size_t files = 0;
    for (const auto& e : fs::directory_iterator(a)) {
        const auto other = b / e.path().filename();
        if (!fs::exists(other) || cli::slurp(e.path()) != cli::slurp(other)) return name + ": " + e.path().filename().string() + " differs";
        ++files;
    }
    for (const auto& e : fs::directory_iterator(b)) {
        if (!fs::exists(a / e.path().filename())) return name + ": extra file " + e.path().filename().string();
    }
    return files > 0 ? "" : name + ": no outputs";
}

}  // namespace

int main() {
    std::printf("hydroflux acceptance run\n");

    criterion(1, "abcd per-step mass balance over 10000 random draws", 5.0, [] {
        std::mt19937_64 rng(2024);
        std::uniform_real_distribution<double> ua(1e-3, 1.0), ub(1.0, 2000.0), u01(0.0, 1.0), us(0.0, 1500.0),
            up(0.0, 800.0);
        double worst_soil = 0, worst_ground = 0;
        for (int i = 0; i < 10000; ++i) {
            const AbcdParams prm(ua(rng), ub(rng), u01(rng), u01(rng));
            const double sm = us(rng), gw = us(rng), p = up(rng), pet = up(rng);
            const auto m = abcd_step(prm, sm, gw, p, pet);
            const auto r = balance_residual(m, sm, gw, p);
            worst_soil = std::max(worst_soil, std::abs(r.soil));
            worst_ground = std::max(worst_ground, std::abs(r.ground));
        }
        return Outcome{worst_soil <= 1e-9 && worst_ground <= 1e-9,
                       "max soil residual " + fmt(worst_soil) + " mm, max groundwater residual " + fmt(worst_ground) + " mm"};
    });

    criterion(2, "Y(w) bounds and slope over 10000 random draws", 5.0, [] {
        std::mt19937_64 rng(2025);
        std::uniform_real_distribution<double> ua(1e-3, 1.0), ub(1.0, 2000.0), uw(0.0, 3000.0);
        int bad = 0;
        double max_slope = 0, min_slope = 1e300;
        for (int i = 0; i < 10000; ++i) {
            const double a = ua(rng), b = ub(rng), w = uw(rng);
            const double y = y_function(w, a, b);
            if (!(y >= 0.0 && y <= std::min(w, b))) ++bad;
            const double h = 1e-4 * (1.0 + w);
            const double lo = std::max(w - h, 0.0);
            const double slope = (y_function(w + h, a, b) - y_function(lo, a, b)) / (w + h - lo);
            max_slope = std::max(max_slope, slope);
            min_slope = std::min(min_slope, slope);
            if (!(slope > 0.0 && slope <= 1.0 + 1e-9)) ++bad;
        }
        return Outcome{bad == 0, std::to_string(bad) + " violations, slope range [" + fmt(min_slope) + ", " +
                                     fmt(max_slope) + "]"};
    });

    criterion(3, "metric unit cases and NSE-RMSE identity", 0.0, [] {
        using V = std::vector<double>;
        const V o{1, 2, 3};
        bool ok = nse(o, o) == 1.0 && pbias(o, o) == 0.0 && rmse(o, o) == 0.0;
        ok = ok && nse(o, V{2, 2, 2}) == 0.0 && nse(o, V{1.5, 2, 2.5}) == 0.75;
        ok = ok && pbias(V{10, 10}, V{9, 9}) == 10.0 && rmse(V{1, 2, 3, 4}, V{-1.5, -0.5, 0.5, 1.5}) == 2.5;
        std::mt19937_64 rng(7);
        std::normal_distribution<double> g(40, 15);
        double worst = 0;
        for (int t = 0; t < 500; ++t) {
            const std::size_t n = 2 + static_cast<std::size_t>(t % 97);
            V a(n), b(n);
            for (std::size_t i = 0; i < n; ++i) {
                a[i] = g(rng);
                b[i] = g(rng);
            }
            long double mean = 0, ss = 0;
            for (double x : a) mean += x;
            mean /= n;
            for (double x : a) ss += (x - mean) * (x - mean);
            const double r = rmse(a, b);
            const double via = 1.0 - r * r * static_cast<double>(n) / static_cast<double>(ss);
            worst = std::max(worst, std::abs(nse(a, b) - via) / std::max(1.0, std::abs(via)));
        }
        return Outcome{ok && worst <= 1e-12, std::string("unit cases ") + (ok ? "exact" : "WRONG") +
                                                 ", max identity error " + fmt(worst)};
    });

    criterion(4, "Moriasi labels for the reported NSE values", 0.0, [] {
        const bool ok = moriasi_class(0.815) == MoriasiClass::VeryGood && moriasi_class(0.827) == MoriasiClass::VeryGood &&
                        moriasi_class(-1.423) == MoriasiClass::Unacceptable &&
                        moriasi_class(0.438) == MoriasiClass::Unsatisfactory;
        return Outcome{ok, std::string(to_string(moriasi_class(0.815))) + ", " +
                               std::string(to_string(moriasi_class(0.827))) + ", " +
                               std::string(to_string(moriasi_class(-1.423))) + ", " +
                               std::string(to_string(moriasi_class(0.438)))};
    });

    criterion(5, "water-balance percentage deviations", 0.0, [] {
        const double obs = 1241.667;
        const double a = water_balance(0, 1218.166, 0, obs, -0.045, -0.155).pct_deviation;
        const double b = water_balance(0, 1201.257, 0, obs, -0.045, -0.155).pct_deviation;
        const double c = water_balance(0, 1157.801, 0, obs, -0.045, -0.155).pct_deviation;
        const bool ok = std::abs(a + 1.893) <= 0.005 && std::abs(b + 3.255) <= 0.005 && std::abs(c + 6.754) <= 0.005;
        return Outcome{ok, fmt(a) + "%, " + fmt(b) + "%, " + fmt(c) + "%"};
    });

    criterion(6, "PSO parameter recovery on a noiseless synthetic catchment", 60.0, [] {
        SynthSpec spec;
        spec.months = 396;
        spec.seed = 6;
        const auto s = synth_generate(spec);
        const auto cal = s.forcing.slice(0, 324);  // 36 warm-up + 288 calibration months
        PsoConfig cfg;
        cfg.pso.seed = 6;
        const auto r = pso_calibrate(cal, 36, CalibrationCase::parse("q"), cfg);
        const auto t = simulate(r.params, r.init, s.forcing, 0);
        const auto q = s.forcing.column(Column::Q);
        std::vector<double> obs(q.begin() + 324, q.end()), sim;
        for (std::size_t i = 324; i < 396; ++i) sim.push_back(t.months[i].q);
        const double held = nse(obs, sim);
        auto rel = [](double got, double want) { return std::abs(got - want) / want; };
        const double ea = rel(r.params.a(), spec.a), eb = rel(r.params.b(), spec.b), ec = rel(r.params.c(), spec.c),
                     ed = rel(r.params.d(), spec.d);
        const bool ok = ea <= 0.05 && ec <= 0.05 && ed <= 0.05 && eb <= 0.10 && held >= 0.99;
        return Outcome{ok, "a " + fmt(r.params.a()) + ", b " + fmt(r.params.b()) + ", c " + fmt(r.params.c()) + ", d " +
                               fmt(r.params.d()) + ", held-out NSE(Q) " + fmt(held)};
    });

    criterion(7, "regressor oracles", 0.0, [] {
        const double ridge = ridge_error(), lasso = lasso_error(), gpr = gpr_error(), svr = svr_gap(),
                     lstm = lstm_gradient_error();
        const bool ok = ridge <= 1e-10 && lasso <= 1e-6 && gpr <= 1e-8 && svr < 1e-5 && lstm < 1e-4;
        return Outcome{ok, "ridge " + fmt(ridge) + ", lasso " + fmt(lasso) + ", gpr " + fmt(gpr) + ", svr gap " +
                               fmt(svr) + ", lstm rel " + fmt(lstm)};
    });

    std::vector<SeedRun> runs;
    criterion(8, "PIML(GPR,GPR) vs pure GPR on (P, T_avg), noise sd 5 mm, median of 5 seeds", 180.0, [&] {
        std::vector<std::future<SeedRun>> jobs;
        for (std::uint64_t seed = 1; seed <= 5; ++seed) jobs.push_back(std::async(std::launch::async, piml_vs_ml, seed));
        std::vector<double> piml, pure;
        for (auto& j : jobs) {
            runs.push_back(j.get());
            piml.push_back(runs.back().piml_nse_q);
            pure.push_back(runs.back().ml_nse_q);
        }
        const double mp = median(piml), mm = median(pure);
        return Outcome{mp >= mm, "median test NSE(Q) PIML " + fmt(mp) + " vs pure " + fmt(mm)};
    });

    criterion(9, "GPR 90% interval coverage on held-out synthetic months", 0.0, [&] {
        if (runs.size() != 5) return Outcome{false, "criterion 8 runs unavailable"};
        std::vector<double> piml, pure;
        for (const auto& r : runs) {
            piml.push_back(r.piml_coverage);
            pure.push_back(r.ml_coverage);
        }
        const double cp = median(piml), cm = median(pure);
        const bool ok = cp >= 0.80 && cp <= 0.98 && cm >= 0.80 && cm <= 0.98;
        return Outcome{ok, "median coverage PIML Q layer " + fmt(cp) + ", pure GPR " + fmt(cm)};
    });

    criterion(10, "every subcommand reruns byte-identically from its saved config", 0.0, [] {
        const auto root = cli::scratch("acceptance_rerun");
        const auto forcing = (root / "synth_a" / "forcing.csv").string();
        std::vector<std::string> bad;
        auto check = [&](const std::string& name, const std::string& sub, const std::string& args) {
            const auto m = rerun_mismatch(root, name, sub, args);
            if (!m.empty()) bad.push_back(m);
        };
        check("synth", "synth", "--seed 11 --noise 2");
        check("simulate", "simulate", "--forcing " + forcing + " --a 0.9 --b 300 --c 0.5 --d 0.3");
        check("calibrate", "calibrate", "--forcing " + forcing + " --seed 2 --swarm 12 --iters 15 --case q+et");
        check("train_ml", "train-ml", "--forcing " + forcing + " --seed 3 --model gpr --hyper starts=2");
        check("train_ml_lstm", "train-ml",
              "--forcing " + forcing + " --seed 3 --model lstm --hyper epochs=3 --hyper hidden=4");
        check("train_piml", "train-piml",
              "--forcing " + forcing + " --seed 4 --et-model svr --q-model gpr --q-hyper starts=2");
        check("evaluate", "evaluate",
              "--predictions " + (root / "train_ml_a" / "test_q.csv").string() + " " +
                  (root / "train_piml_a" / "test_et.csv").string());
        check("water_balance", "water-balance",
              "--forcing " + forcing + " --et-pred " + (root / "train_piml_a" / "test_et.csv").string() +
                  " --q-pred " + (root / "train_piml_a" / "test_q.csv").string());
        std::string detail = bad.empty() ? "8 runs across 7 subcommands identical" : "";
        for (const auto& b : bad) detail += (detail.empty() ? "" : "; ") + b;
        return Outcome{bad.empty(), detail};
    });

    criterion(11, "Hargreaves PET", 0.0, [] {
        const double zero = hargreaves_pet_daily(25.0, 25.0, 30.0);
        const double hand = hargreaves_pet_daily(30.0, 20.0, 30.0);
        // 0.0023 * 30 * sqrt(10) * (25 + 17.8)
        const double expect = 0.0023 * 30.0 * std::sqrt(10.0) * 42.8;
        const bool ok = zero == 0.0 && std::abs(hand - expect) <= 1e-3 && std::abs(hand - 9.338) <= 1e-3;
        return Outcome{ok, "Tmax = Tmin gives " + fmt(zero) + ", 30/20/Ra 30 gives " + fmt(hand) + " mm/day"};
    });

    std::printf("%d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
