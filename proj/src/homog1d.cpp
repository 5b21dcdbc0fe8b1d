#include "thinhomog/homog1d.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace thinhomog {

namespace {

// 2-point Gauss-Legendre positions on [0, 1].
constexpr double kG0 = 0.21132486540518711775;
constexpr double kG1 = 0.78867513459481288225;

} // namespace

double Field1D::operator()(double xq) const {
    if (values.size() < 2)
        throw std::runtime_error("Field1D: need at least two nodes");
    double t = (xq - a) / (b - a) * intervals();
    if (t <= 0.0)
        return values.front();
    if (t >= intervals())
        return values.back();
    int i = static_cast<int>(t);
    double s = t - i;
    return (1.0 - s) * values[i] + s * values[i + 1];
}

CoefficientTable::CoefficientTable(std::vector<double> x, std::vector<double> v, const char* what)
    : x_(std::move(x)), v_(std::move(v)) {
    if (x_.size() != v_.size() || x_.empty())
        throw std::runtime_error(std::string(what) + ": sample arrays mismatch");
    for (std::size_t i = 1; i < x_.size(); ++i)
        if (!(x_[i] > x_[i - 1]))
            throw std::runtime_error(std::string(what) + ": sample grid must increase");
    for (double val : v_)
        if (!(val > 0.0))
            throw ValidationError(std::string(what) + ": coefficient samples must be positive");
}

double CoefficientTable::operator()(double xq) const {
    if (xq <= x_.front())
        return v_.front();
    if (xq >= x_.back())
        return v_.back();
    auto it = std::upper_bound(x_.begin(), x_.end(), xq);
    std::size_t i = static_cast<std::size_t>(it - x_.begin());
    double s = (xq - x_[i - 1]) / (x_[i] - x_[i - 1]);
    return (1.0 - s) * v_[i - 1] + s * v_[i];
}

Field1D fhat_from(const std::function<double(double)>& f, const EffectiveCoefficients& coeffs,
                  int n) {
    if (n < 2)
        throw std::runtime_error("fhat_from: need at least 2 intervals");
    CoefficientTable r(coeffs.x, coeffs.r, "fhat_from r");
    Field1D out;
    out.a = 0.0;
    out.b = 1.0;
    out.values.resize(n + 1);
    for (int i = 0; i <= n; ++i) {
        double x = static_cast<double>(i) / n;
        out.values[i] = r(x) * f(x);
    }
    return out;
}

namespace {

class Problem1D : public NewtonProblem {
public:
    Problem1D(const CoefficientTable& q, const CoefficientTable& r,
              std::function<double(double)> fhat, double p, int n)
        : p_(p), n_(n), h_(1.0 / n), fhat_(std::move(fhat)) {
        qm_.resize(n);
        rm_.resize(n);
        for (int e = 0; e < n; ++e) {
            double mid = (e + 0.5) * h_;
            qm_[e] = q(mid);
            rm_[e] = r(mid);
        }
    }

    int size() const override { return n_ + 1; }

    double energy(const std::vector<double>& u) const override { return energy_reg(u, 0.0); }

    double energy_reg(const std::vector<double>& u, double gamma) const override {
        double E = 0.0;
        for (int e = 0; e < n_; ++e) {
            double du = (u[e + 1] - u[e]) / h_;
            E += h_ * qm_[e] * density(du, gamma);
            for (double g : {kG0, kG1}) {
                double x = (e + g) * h_;
                double uv = (1.0 - g) * u[e] + g * u[e + 1];
                E += 0.5 * h_ * (rm_[e] * density(uv, gamma) - fhat_(x) * uv);
            }
        }
        return E;
    }

    void gradient(const std::vector<double>& u, std::vector<double>& out) const override {
        gradient_reg(u, 0.0, out);
    }

    void gradient_reg(const std::vector<double>& u, double gamma,
                      std::vector<double>& out) const override {
        out.assign(n_ + 1, 0.0);
        for (int e = 0; e < n_; ++e) {
            double du = (u[e + 1] - u[e]) / h_;
            double flux = qm_[e] * smoothed_ap(du, gamma);
            out[e] -= flux;
            out[e + 1] += flux;
            for (double g : {kG0, kG1}) {
                double x = (e + g) * h_;
                double uv = (1.0 - g) * u[e] + g * u[e + 1];
                double s = rm_[e] * smoothed_ap(uv, gamma) - fhat_(x);
                out[e] += 0.5 * h_ * s * (1.0 - g);
                out[e + 1] += 0.5 * h_ * s * g;
            }
        }
    }

    SparseMatrix hessian(const std::vector<double>& u, double gamma) const override {
        SparseMatrix H(n_ + 1);
        for (int e = 0; e < n_; ++e) {
            double du = (u[e + 1] - u[e]) / h_;
            double s2 = gamma * gamma + du * du;
            double w = s2 == 0.0 ? 0.0
                                 : std::pow(s2, 0.5 * (p_ - 4.0)) *
                                       (gamma * gamma + (p_ - 1.0) * du * du);
            double k = qm_[e] * w / h_;
            H.add(e, e, k);
            H.add(e + 1, e + 1, k);
            H.add(e, e + 1, -k);
            H.add(e + 1, e, -k);
            for (double g : {kG0, kG1}) {
                double uv = (1.0 - g) * u[e] + g * u[e + 1];
                double m2 = gamma * gamma + uv * uv;
                double d = m2 == 0.0 ? 0.0
                                     : std::pow(m2, 0.5 * (p_ - 4.0)) *
                                           (gamma * gamma + (p_ - 1.0) * uv * uv);
                double wq = 0.5 * h_ * rm_[e] * d;
                H.add(e, e, wq * (1.0 - g) * (1.0 - g));
                H.add(e, e + 1, wq * (1.0 - g) * g);
                H.add(e + 1, e, wq * (1.0 - g) * g);
                H.add(e + 1, e + 1, wq * g * g);
            }
        }
        H.compress();
        return H;
    }

private:
    // (1/p)(gamma^2 + v^2)^{p/2} and its derivative, safe at 0
    double density(double v, double gamma) const {
        double s = gamma * gamma + v * v;
        return s == 0.0 ? 0.0 : std::pow(s, 0.5 * p_) / p_;
    }
    double smoothed_ap(double v, double gamma) const {
        if (gamma == 0.0)
            return a_p(v, p_);
        return std::pow(gamma * gamma + v * v, 0.5 * (p_ - 2.0)) * v;
    }

    double p_;
    int n_;
    double h_;
    std::function<double(double)> fhat_;
    std::vector<double> qm_, rm_;
};

} // namespace

Solve1DResult solve_homogenized(const CoefficientTable& q, const CoefficientTable& r,
                                const std::function<double(double)>& fhat, double p, int n,
                                const SolveConfig& config) {
    if (!(p > 1.0))
        throw std::runtime_error("solve_homogenized: p must be > 1");
    if (n < 2)
        throw std::runtime_error("solve_homogenized: need at least 2 elements");
    Problem1D problem(q, r, fhat, p, n);
    SolveReport report;
    std::vector<double> u =
        minimize_newton(problem, config, std::vector<double>(n + 1, 0.0), report);
    if (!report.converged)
        throw SolverError("solve_homogenized did not converge at p=" + std::to_string(p));
    Solve1DResult res;
    res.u.a = 0.0;
    res.u.b = 1.0;
    res.u.values = std::move(u);
    res.report = report;
    return res;
}

Solve1DResult solve_homogenized(const EffectiveCoefficients& coeffs, const Field1D& fhat,
                                double p, int n, const SolveConfig& config) {
    CoefficientTable q(coeffs.x, coeffs.q, "solve_homogenized q");
    CoefficientTable r(coeffs.x, coeffs.r, "solve_homogenized r");
    return solve_homogenized(q, r, [&fhat](double x) { return fhat(x); }, p, n, config);
}

Norm1D norms_1d(const Field1D& u, double p) {
    int n = u.intervals();
    double h = (u.b - u.a) / n;
    double mass = 0.0, grad = 0.0;
    for (int e = 0; e < n; ++e) {
        double du = (u.values[e + 1] - u.values[e]) / h;
        grad += h * std::pow(std::fabs(du), p);
        for (double g : {kG0, kG1}) {
            double uv = (1.0 - g) * u.values[e] + g * u.values[e + 1];
            mass += 0.5 * h * std::pow(std::fabs(uv), p);
        }
    }
    Norm1D out;
    out.lp = std::pow(mass, 1.0 / p);
    out.grad_lp = std::pow(grad, 1.0 / p);
    out.w1p = std::pow(mass + grad, 1.0 / p);
    return out;
}

} // namespace thinhomog
