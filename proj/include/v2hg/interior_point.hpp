#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include <Eigen/Dense>

// Primal-dual interior-point method for smooth objectives under linear
// inequality constraints A x <= b, started from a strictly feasible point.
//
// The Problem type provides:
//   int num_vars() const;  int num_constraints() const;
//   double value(const Eigen::VectorXd& x) const;
//   void gradient(const Eigen::VectorXd& x, Eigen::VectorXd& g) const;
//   void hessian(const Eigen::VectorXd& x, Eigen::MatrixXd& h) const;      // overwrites h
//   void slack(const Eigen::VectorXd& x, Eigen::VectorXd& w) const;        // w = b - A x
//   void multiply(const Eigen::VectorXd& dx, Eigen::VectorXd& out) const;  // out = A dx
//   void multiply_transpose(const Eigen::VectorXd& v, Eigen::VectorXd& out) const;
//   void add_gram(const Eigen::VectorXd& sigma, Eigen::MatrixXd& m) const; // m += A' diag(sigma) A

namespace v2hg::ipm {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct Options {
    double tolerance = 1e-8;
    int max_iterations = 300;
    double mu_init = 0.1;
    double tau_min = 0.99;
    double kappa_eps = 10.0;
    double kappa_mu = 0.2;
    double theta_mu = 1.5;
    double armijo = 1e-4;
    // Optional early exit (used by the phase-1 search).
    std::function<bool(const VectorXd&)> stop_when;
    // iteration, mu, stationarity, complementarity
    std::function<void(int, double, double, double)> on_iteration;
};

enum class Status { converged, stopped, max_iterations, line_search_failed, not_interior };

inline const char* to_string(Status s) {
    switch (s) {
    case Status::converged: return "converged";
    case Status::stopped: return "stopped";
    case Status::max_iterations: return "max_iterations";
    case Status::line_search_failed: return "line_search_failed";
    case Status::not_interior: return "not_interior";
    }
    return "unknown";
}

struct Result {
    VectorXd x;
    VectorXd multipliers;
    Status status = Status::max_iterations;
    int iterations = 0;
    double kkt_error = std::numeric_limits<double>::infinity();
    double barrier = 0.0;

    bool converged() const { return status == Status::converged || status == Status::stopped; }
};

namespace detail {

inline double fraction_to_boundary(const VectorXd& v, const VectorXd& dv, double tau) {
    double alpha = 1.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (dv[i] < 0.0) alpha = std::min(alpha, -tau * v[i] / dv[i]);
    }
    return alpha;
}

template <class Problem>
double barrier_value(const Problem& p, const VectorXd& x, double mu, VectorXd& w) {
    p.slack(x, w);
    if ((w.array() <= 0.0).any()) return std::numeric_limits<double>::infinity();
    return p.value(x) - mu * w.array().log().sum();
}

/// Cholesky with diagonal shift until positive definite.
inline bool factor_regularized(MatrixXd& m, Eigen::LLT<MatrixXd>& llt, double& last_delta) {
    llt.compute(m);
    if (llt.info() == Eigen::Success) {
        last_delta = 0.0;
        return true;
    }
    // Absolute shifts: barrier terms inflate the diagonal, so a relative floor
    // would keep the shift far above the negative curvature it has to cancel.
    double delta = last_delta > 0.0 ? std::max(1e-20, last_delta / 3.0) : 1e-4;
    for (int attempt = 0; attempt < 80; ++attempt) {
        MatrixXd shifted = m;
        shifted.diagonal().array() += delta;
        llt.compute(shifted);
        if (llt.info() == Eigen::Success) {
            last_delta = delta;
            return true;
        }
        delta *= 8.0;
    }
    return false;
}

} // namespace detail

template <class Problem>
Result minimize(const Problem& p, VectorXd x, const Options& opt = {}) {
    const int n = p.num_vars();
    const int m = p.num_constraints();
    Result res;
    VectorXd w(m), g(n), dx(n), adx(m), dw(m), dlam(m), tmp(n), w_trial(m);
    MatrixXd mat(n, n);
    Eigen::LLT<MatrixXd> llt;

    p.slack(x, w);
    if (m > 0 && (w.array() <= 0.0).any()) {
        res.x = x;
        res.status = Status::not_interior;
        return res;
    }

    double mu = opt.mu_init;
    VectorXd lam = (mu / w.array()).matrix();
    double last_delta = 0.0;
    const double s_max = 100.0;

    for (int iter = 0; iter <= opt.max_iterations; ++iter) {
        res.iterations = iter;
        p.gradient(x, g);
        p.multiply_transpose(lam, tmp);
        const VectorXd dual_res = g + tmp;
        const double s_d = std::max(s_max, m > 0 ? lam.lpNorm<1>() / m : 0.0) / s_max;
        const double stat = dual_res.lpNorm<Eigen::Infinity>() / s_d;
        const VectorXd compl_vec = (w.array() * lam.array()).matrix();
        const double compl_err = m > 0 ? compl_vec.lpNorm<Eigen::Infinity>() / s_d : 0.0;
        res.kkt_error = std::max(stat, compl_err);

        if (opt.on_iteration) opt.on_iteration(iter, mu, stat, compl_err);
        if (opt.stop_when && opt.stop_when(x)) {
            res.status = Status::stopped;
            break;
        }
        if (res.kkt_error <= opt.tolerance) {
            res.status = Status::converged;
            break;
        }
        if (iter == opt.max_iterations) {
            res.status = Status::max_iterations;
            break;
        }

        // Monotone barrier update.
        for (;;) {
            const double e_mu =
                std::max(stat, m > 0 ? (compl_vec.array() - mu).abs().maxCoeff() / s_d : 0.0);
            if (e_mu > opt.kappa_eps * mu || mu <= opt.tolerance / 10.0) break;
            mu = std::max(opt.tolerance / 10.0, std::min(opt.kappa_mu * mu, std::pow(mu, opt.theta_mu)));
        }

        const VectorXd sigma = (lam.array() / w.array()).matrix();
        p.hessian(x, mat);
        p.add_gram(sigma, mat);
        if (!detail::factor_regularized(mat, llt, last_delta)) {
            res.status = Status::line_search_failed;
            break;
        }

        const VectorXd inv_w = w.cwiseInverse();
        p.multiply_transpose(inv_w, tmp);
        const VectorXd grad_phi = g + mu * tmp;
        dx = llt.solve(-grad_phi);
        p.multiply(dx, adx);
        dw = -adx;
        dlam = (mu * inv_w.array() - lam.array() + sigma.array() * adx.array()).matrix();

        const double tau = std::max(opt.tau_min, 1.0 - mu);
        double alpha = detail::fraction_to_boundary(w, dw, tau);
        const double alpha_dual = detail::fraction_to_boundary(lam, dlam, tau);

        const double phi0 = p.value(x) - mu * w.array().log().sum();
        const double slope = grad_phi.dot(dx);
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            const VectorXd xt = x + alpha * dx;
            const double phi = detail::barrier_value(p, xt, mu, w_trial);
            if (std::isfinite(phi) && phi <= phi0 + opt.armijo * alpha * slope + 1e-14 * std::abs(phi0)) {
                x = xt;
                w = w_trial;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted) {
            // A tiny step that cannot reduce the merit: accept if nearly stationary.
            if (dx.lpNorm<Eigen::Infinity>() < 1e-12 * (1.0 + x.lpNorm<Eigen::Infinity>())) {
                if (mu > opt.tolerance / 10.0) {
                    mu = std::max(opt.tolerance / 10.0, opt.kappa_mu * mu);
                    continue;
                }
            }
            res.status = Status::line_search_failed;
            break;
        }
        lam += alpha_dual * dlam;
        // Keep multipliers within a band around the primal estimate mu / w.
        constexpr double kappa_sigma = 1e10;
        for (Eigen::Index i = 0; i < lam.size(); ++i) {
            const double est = mu / w[i];
            lam[i] = std::clamp(lam[i], est / kappa_sigma, est * kappa_sigma);
        }
    }
    res.x = x;
    res.multipliers = lam;
    res.barrier = mu;
    return res;
}

/// Adds a scalar t to every row (A x + t <= b, t <= t_max) and maximises t.
template <class Problem>
class Phase1 {
public:
    Phase1(const Problem& p, double t_max) : p_(p), t_max_(t_max) {}

    int num_vars() const { return p_.num_vars() + 1; }
    int num_constraints() const { return p_.num_constraints() + 1; }

    double value(const VectorXd& z) const { return -z[z.size() - 1]; }
    void gradient(const VectorXd& z, VectorXd& g) const {
        g.setZero(z.size());
        g[z.size() - 1] = -1.0;
    }
    void hessian(const VectorXd&, MatrixXd& h) const {
        h.setZero(num_vars(), num_vars());
        h.diagonal().array() = 1e-10;
    }
    void slack(const VectorXd& z, VectorXd& w) const {
        VectorXd inner(p_.num_constraints());
        p_.slack(z.head(p_.num_vars()), inner);
        const double t = z[z.size() - 1];
        w.resize(num_constraints());
        w.head(inner.size()) = inner.array() - t;
        w[inner.size()] = t_max_ - t;
    }
    void multiply(const VectorXd& dz, VectorXd& out) const {
        VectorXd inner(p_.num_constraints());
        p_.multiply(dz.head(p_.num_vars()), inner);
        const double dt = dz[dz.size() - 1];
        out.resize(num_constraints());
        out.head(inner.size()) = inner.array() + dt;
        out[inner.size()] = dt;
    }
    void multiply_transpose(const VectorXd& v, VectorXd& out) const {
        const int mi = p_.num_constraints();
        VectorXd inner(p_.num_vars());
        p_.multiply_transpose(v.head(mi), inner);
        out.resize(num_vars());
        out.head(inner.size()) = inner;
        out[inner.size()] = v.head(mi).sum() + v[mi];
    }
    void add_gram(const VectorXd& sigma, MatrixXd& mat) const {
        const int n = p_.num_vars();
        const int mi = p_.num_constraints();
        MatrixXd inner = mat.topLeftCorner(n, n);
        p_.add_gram(sigma.head(mi), inner);
        mat.topLeftCorner(n, n) = inner;
        VectorXd col(n);
        p_.multiply_transpose(sigma.head(mi), col);
        mat.col(n).head(n) += col;
        mat.row(n).head(n) += col.transpose();
        mat(n, n) += sigma.head(mi).sum() + sigma[mi];
    }

private:
    const Problem& p_;
    double t_max_;
};

/// Finds a strictly feasible point starting from any x0. Returns the point and
/// the smallest constraint slack achieved (<= 0 means no interior was found).
template <class Problem>
std::pair<VectorXd, double> find_interior(const Problem& p, const VectorXd& x0, double target_margin,
                                          int max_iterations = 200) {
    VectorXd w(p.num_constraints());
    p.slack(x0, w);
    const double min_w = w.size() ? w.minCoeff() : 1.0;
    if (min_w >= target_margin) return {x0, min_w};

    Phase1<Problem> ph(p, std::max(1.0, 2.0 * target_margin));
    VectorXd z(p.num_vars() + 1);
    z.head(p.num_vars()) = x0;
    z[p.num_vars()] = min_w - 1.0;
    Options opt;
    opt.max_iterations = max_iterations;
    opt.tolerance = 1e-10;
    opt.stop_when = [&](const VectorXd& zz) { return zz[zz.size() - 1] >= target_margin; };
    auto res = minimize(ph, z, opt);
    VectorXd x = res.x.head(p.num_vars());
    p.slack(x, w);
    return {x, w.size() ? w.minCoeff() : 1.0};
}

} // namespace v2hg::ipm
