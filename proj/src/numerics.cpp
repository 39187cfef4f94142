#include "amprt/numerics.hpp"

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>

#include <Eigen/Dense>

namespace amprt {

double normal_cdf(double x) {
    if (!std::isfinite(x)) throw DomainError("normal_cdf: non-finite argument");
    return 0.5 * std::erfc(-x / kSqrt2);
}

double normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double stable_logistic(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double logistic_deriv(double x) {
    const double a = std::exp(-std::abs(x));
    return a / ((1.0 + a) * (1.0 + a));
}

void check_order(int order) {
    if (order < 2) throw ConfigError("quadrature order must be at least 2, got " + std::to_string(order));
}

namespace {

constexpr int kMaxNewton = 100;

bool converged(double z, double z1) { return std::abs(z - z1) <= 1e-15 * std::max(1.0, std::abs(z)); }

// Eigenvalues of the Jacobi matrix (Golub-Welsch) as starting points; each node is then
// polished by Newton on the three-term recurrence, which also yields the weight.
std::vector<double> jacobi_nodes(const std::vector<double>& diag, const std::vector<double>& off) {
    const int n = static_cast<int>(diag.size());
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) J(i, i) = diag[i];
    for (int i = 0; i + 1 < n; ++i) J(i, i + 1) = J(i + 1, i) = off[i];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J, Eigen::EigenvaluesOnly);
    const Eigen::VectorXd ev = es.eigenvalues();
    return {ev.data(), ev.data() + n};
}

// Orthonormal Hermite recurrence carried with a factor exp(-z^2 / 2) so the values stay in
// range for large orders.
QuadratureRule build_hermite(int n) {
    std::vector<double> diag(n, 0.0), off(n > 0 ? n - 1 : 0);
    for (int k = 1; k < n; ++k) off[k - 1] = std::sqrt(0.5 * k);
    std::vector<double> x = jacobi_nodes(diag, off), w(n);
    const double pim4 = 0.7511255444649425;  // pi^(-1/4)
    for (int i = 0; i < n; ++i) {
        double z = x[i], pp = 0.0;
        for (int it = 0; it < kMaxNewton; ++it) {
            double p1 = pim4 * std::exp(-0.5 * z * z), p2 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = z * std::sqrt(2.0 / (j + 1)) * p2 - std::sqrt(static_cast<double>(j) / (j + 1)) * p3;
            }
            pp = std::sqrt(2.0 * n) * p2;
            const double z1 = z;
            z = z1 - p1 / pp;
            if (converged(z, z1)) break;
        }
        x[i] = z;
        w[i] = 2.0 * std::exp(-z * z) / (pp * pp);
    }
    for (int i = 0; i < n / 2; ++i) {
        const double a = 0.5 * (x[n - 1 - i] - x[i]);
        const double b = 0.5 * (w[n - 1 - i] + w[i]);
        x[i] = -a;
        x[n - 1 - i] = a;
        w[i] = w[n - 1 - i] = b;
    }
    if (n % 2 == 1) x[n / 2] = 0.0;
    return {std::move(x), std::move(w), n};
}

QuadratureRule build_laguerre(int n) {
    std::vector<double> diag(n), off(n > 0 ? n - 1 : 0);
    for (int k = 0; k < n; ++k) diag[k] = 2.0 * k + 1.0;
    for (int k = 1; k < n; ++k) off[k - 1] = k;
    std::vector<double> x = jacobi_nodes(diag, off), w(n);
    for (int i = 0; i < n; ++i) {
        double z = x[i], pp = 0.0, p2 = 0.0;
        for (int it = 0; it < kMaxNewton; ++it) {
            double p1 = 1.0;
            p2 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j + 1.0 - z) * p2 - j * p3) / (j + 1);
            }
            pp = (n * p1 - n * p2) / z;
            const double z1 = z;
            z = z1 - p1 / pp;
            if (converged(z, z1)) break;
        }
        x[i] = z;
        w[i] = -1.0 / (pp * n * p2);
    }
    return {std::move(x), std::move(w), n};
}

QuadratureRule build_legendre(int n) {
    std::vector<double> diag(n, 0.0), off(n > 0 ? n - 1 : 0);
    for (int k = 1; k < n; ++k) off[k - 1] = k / std::sqrt(4.0 * k * k - 1.0);
    std::vector<double> x = jacobi_nodes(diag, off), w(n);
    for (int i = 0; i < n; ++i) {
        double z = x[i], pp = 0.0;
        for (int it = 0; it < kMaxNewton; ++it) {
            double p1 = 1.0, p2 = 0.0;
            for (int j = 1; j <= n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
            }
            pp = n * (z * p1 - p2) / (z * z - 1.0);
            const double z1 = z;
            z = z1 - p1 / pp;
            if (converged(z, z1)) break;
        }
        x[i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
    }
    for (int i = 0; i < n / 2; ++i) {
        const double a = 0.5 * (x[n - 1 - i] - x[i]);
        x[i] = -a;
        x[n - 1 - i] = a;
        w[i] = w[n - 1 - i] = 0.5 * (w[i] + w[n - 1 - i]);
    }
    if (n % 2 == 1) x[n / 2] = 0.0;
    return {std::move(x), std::move(w), n};
}

QuadratureRule build_normal(int n) {
    QuadratureRule r = gauss_hermite_rule(n);
    for (auto& v : r.nodes) v *= kSqrt2;
    for (auto& v : r.weights) v /= kSqrtPi;
    return r;
}

class RuleCache {
public:
    explicit RuleCache(QuadratureRule (*build)(int)) : build_(build) {}

    const QuadratureRule& get(int order) {
        check_order(order);
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = rules_.find(order);
        if (it == rules_.end())
            it = rules_.emplace(order, std::make_unique<QuadratureRule>(build_(order))).first;
        return *it->second;
    }

private:
    QuadratureRule (*build_)(int);
    std::mutex mutex_;
    std::map<int, std::unique_ptr<QuadratureRule>> rules_;
};

}  // namespace

const QuadratureRule& gauss_hermite_rule(int order) {
    static RuleCache cache(build_hermite);
    return cache.get(order);
}

const QuadratureRule& gauss_laguerre_rule(int order) {
    static RuleCache cache(build_laguerre);
    return cache.get(order);
}

const QuadratureRule& gauss_legendre_rule(int order) {
    static RuleCache cache(build_legendre);
    return cache.get(order);
}

const QuadratureRule& normal_rule(int order) {
    static RuleCache cache(build_normal);
    return cache.get(order);
}

QuadratureRule normal_panel_rule(double center, double width, int panel_order) {
    if (!(width > 0.0) || !std::isfinite(center)) throw DomainError("normal_panel_rule: need a finite center and positive width");
    constexpr double kLo = -12.0, kHi = 12.0, kCoarse = 0.5;
    std::vector<double> cuts{kLo, kHi};
    if (center > kLo && center < kHi) {
        cuts.push_back(center);
        for (double h = width; h < kHi - kLo; h *= 2.0) {
            if (center - h > kLo) cuts.push_back(center - h);
            if (center + h < kHi) cuts.push_back(center + h);
        }
    }
    for (double x = kLo + kCoarse; x < kHi; x += kCoarse) cuts.push_back(x);
    std::sort(cuts.begin(), cuts.end());
    const QuadratureRule& leg = gauss_legendre_rule(panel_order);
    QuadratureRule rule;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double a = cuts[i], b = cuts[i + 1];
        if (b - a <= 0.0) continue;
        const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
        for (int k = 0; k < leg.order; ++k) {
            const double w = mid + half * leg.nodes[k];
            rule.nodes.push_back(w);
            rule.weights.push_back(half * leg.weights[k] * normal_pdf(w));
        }
    }
    rule.order = static_cast<int>(rule.nodes.size());
    return rule;
}

double find_root_bisect(const std::function<double(double)>& f, double lo, double hi, double tol) {
    if (!(tol > 0.0)) throw ConfigError("find_root_bisect: tol must be positive");
    if (lo > hi) std::swap(lo, hi);
    double flo = f(lo);
    const double fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if (!(flo * fhi < 0.0))
        throw BracketError("find_root_bisect: no sign change on [" + std::to_string(lo) + ", " +
                           std::to_string(hi) + "]");
    for (int it = 0; it < 400 && hi - lo > tol; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double fm = f(mid);
        if (fm == 0.0) return mid;
        if ((fm < 0.0) == (flo < 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

RngStream::RngStream(std::uint64_t master_seed, std::uint64_t stream_index, std::uint64_t substream)
    : master_seed_(master_seed), stream_index_(stream_index), substream_(substream) {
    auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v & 0xffffffffu); };
    auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
    std::seed_seq seq{lo(master_seed), hi(master_seed), lo(stream_index), hi(stream_index),
                      lo(substream), hi(substream), 0x616d7072u};
    engine_.seed(seq);
}

double RngStream::normal() { return normal_(engine_); }

double RngStream::uniform() { return uniform_(engine_); }

}  // namespace amprt
