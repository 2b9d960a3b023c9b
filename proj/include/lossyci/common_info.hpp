#pragma once

// Lossy common information solvers on a joint over (X1, X2, Z1, Z2), where Z1
// and Z2 are the reconstructions produced by an encoder.
//
// wyner_upper      certified upper bound on Wyner's C by searching auxiliaries U
//                  with Z1 <-> U <-> Z2 and (X1,X2) <-> (Z1,Z2) <-> U
// wyner_bruteforce grid oracle for the same infimum on tiny instances
// gk_common_part   connected components of the support graph of P(X1, X2)
// gk_lower         certified lower bound on Gacs-Korner's K
// gk_bruteforce    enumeration oracle over deterministic and gridded stochastic V

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "probability.hpp"
#include "shannon.hpp"
#include "simplex.hpp"
#include "union_find.hpp"

namespace lossyci {

inline constexpr double feasibility_tol = 1e-6;

namespace detail {

// Joint P(x, z) with x over (X1,X2) tuples and z over (Z1,Z2) tuples, plus the
// reconstruction marginal, extracted from a four-variable joint.
struct ReconstructionView {
    VariableList x_vars;  // X1, X2
    VariableList z_vars;  // Z1, Z2
    std::size_t nx = 0, n1 = 0, n2 = 0;
    std::vector<double> pxz;  // nx * (n1 * n2)
    std::vector<double> pz;   // n1 * n2
};

inline ReconstructionView reconstruction_view(const JointDistribution& joint) {
    for (const auto* n : {&names::x1, &names::x2, &names::z1, &names::z2})
        if (!joint.has(*n)) throw ValidationError("joint must contain X1, X2, Z1 and Z2 (missing " + *n + ")");
    const auto m = marginalize(joint, {names::x1, names::x2, names::z1, names::z2});
    ReconstructionView v;
    v.x_vars = {m.variables()[0], m.variables()[1]};
    v.z_vars = {m.variables()[2], m.variables()[3]};
    v.nx = m.variables()[0].alphabet.size() * m.variables()[1].alphabet.size();
    v.n1 = m.variables()[2].alphabet.size();
    v.n2 = m.variables()[3].alphabet.size();
    v.pxz.assign(m.pmf().begin(), m.pmf().end());
    const std::size_t nz = v.n1 * v.n2;
    v.pz.assign(nz, 0.0);
    for (std::size_t x = 0; x < v.nx; ++x)
        for (std::size_t z = 0; z < nz; ++z) v.pz[z] += v.pxz[x * nz + z];
    return v;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Wyner

struct WynerResiduals {
    double marginal_match = 0.0;         // L1 between the model's P(z1,z2) and the given one
    double conditional_independence = 0.0;  // I(Z1;Z2|U) in the assembled joint
    double reconstruction_markov = 0.0;  // I(X1,X2;U|Z1,Z2), zero by construction
    double encoder_markov = 0.0;         // I(Z1,Z2;U|X1,X2); zero when the encoder is deterministic
};

struct WynerSolution {
    std::size_t u_cardinality = 0;
    std::vector<double> p_u;
    Channel p_z1_given_u;
    Channel p_z2_given_u;
    Channel p_u_given_z;  // Bayes inversion attached to (Z1, Z2)
    double objective = 0.0;  // I(X1,X2;U) in bits
    double marginal_match_residual = 0.0;
    WynerResiduals residuals;
    std::size_t restarts_used = 0;
    bool feasible = false;
    std::string origin;  // which candidate produced the solution
};

struct WynerOptions {
    std::size_t u_card = 0;  // 0 selects |Z1| * |Z2|
    std::size_t restarts = 4;
    std::uint64_t seed = 0;
    double tol = 1e-10;  // objective change that ends a penalty stage
    std::size_t iterations_per_stage = 400;
    std::size_t polish_iterations = 5000;
    std::size_t refine_evaluations = 20000;  // compass search on the exact factorizations
};

namespace detail {

// Product-form model P(u) P(z1|u) P(z2|u) and its derived quantities.
struct WynerModel {
    std::size_t k = 0, n1 = 0, n2 = 0;
    std::vector<double> pu;  // k
    std::vector<double> a;   // k * n1, rows P(z1|u)
    std::vector<double> b;   // k * n2, rows P(z2|u)

    std::size_t params() const { return pu.size() + a.size() + b.size(); }

    std::vector<double> flat() const {
        std::vector<double> f(pu);
        f.insert(f.end(), a.begin(), a.end());
        f.insert(f.end(), b.begin(), b.end());
        return f;
    }

    void assign(std::span<const double> f) {
        std::copy(f.begin(), f.begin() + k, pu.begin());
        std::copy(f.begin() + k, f.begin() + k + k * n1, a.begin());
        std::copy(f.begin() + k + k * n1, f.end(), b.begin());
    }

    void project() {
        project_to_simplex(pu);
        for (std::size_t u = 0; u < k; ++u) {
            project_to_simplex(std::span<double>(a).subspan(u * n1, n1));
            project_to_simplex(std::span<double>(b).subspan(u * n2, n2));
        }
    }

    // r(u, z) = P(u) P(z1|u) P(z2|u)
    std::vector<double> joint_uz() const {
        const std::size_t nz = n1 * n2;
        std::vector<double> r(k * nz);
        for (std::size_t u = 0; u < k; ++u)
            for (std::size_t i = 0; i < n1; ++i)
                for (std::size_t j = 0; j < n2; ++j) r[u * nz + i * n2 + j] = pu[u] * a[u * n1 + i] * b[u * n2 + j];
        return r;
    }
};

// Penalized objective I(X;U) + mu * ||m - P(z)||^2 and its gradient with respect
// to (P(u), P(z1|u), P(z2|u)). U is attached to Z by Bayes inversion of the model.
class WynerObjective {
public:
    WynerObjective(const ReconstructionView& view, std::size_t k) : v_(view), k_(k) {
        nz_ = v_.n1 * v_.n2;
        px_.assign(v_.nx, 0.0);
        for (std::size_t x = 0; x < v_.nx; ++x)
            for (std::size_t z = 0; z < nz_; ++z) px_[x] += v_.pxz[x * nz_ + z];
    }

    double value(const WynerModel& m, double mu, std::vector<double>* grad = nullptr) const {
        const auto r = m.joint_uz();
        std::vector<double> mz(nz_, 0.0), q(k_ * nz_);
        for (std::size_t u = 0; u < k_; ++u)
            for (std::size_t z = 0; z < nz_; ++z) mz[z] += r[u * nz_ + z];
        for (std::size_t z = 0; z < nz_; ++z)
            for (std::size_t u = 0; u < k_; ++u)
                q[u * nz_ + z] = mz[z] > 0.0 ? r[u * nz_ + z] / mz[z] : 1.0 / static_cast<double>(k_);

        std::vector<double> pxu(v_.nx * k_, 0.0), pu(k_, 0.0);
        for (std::size_t x = 0; x < v_.nx; ++x)
            for (std::size_t z = 0; z < nz_; ++z) {
                const double p = v_.pxz[x * nz_ + z];
                if (p <= 0.0) continue;
                for (std::size_t u = 0; u < k_; ++u) pxu[x * k_ + u] += p * q[u * nz_ + z];
            }
        for (std::size_t x = 0; x < v_.nx; ++x)
            for (std::size_t u = 0; u < k_; ++u) pu[u] += pxu[x * k_ + u];

        double info = 0.0;
        for (std::size_t x = 0; x < v_.nx; ++x)
            for (std::size_t u = 0; u < k_; ++u) {
                const double p = pxu[x * k_ + u];
                if (p > 0.0) info += p * std::log2(p / (px_[x] * pu[u]));
            }
        double penalty = 0.0;
        for (std::size_t z = 0; z < nz_; ++z) penalty += (mz[z] - v_.pz[z]) * (mz[z] - v_.pz[z]);
        const double f = info + mu * penalty;
        if (!grad) return f;

        // d I / d P(x,u) = log2 P(x|u)
        std::vector<double> g(v_.nx * k_);
        for (std::size_t x = 0; x < v_.nx; ++x)
            for (std::size_t u = 0; u < k_; ++u) {
                const double p = pxu[x * k_ + u];
                g[x * k_ + u] = (p > 0.0 && pu[u] > 0.0) ? std::log2(p / pu[u]) : -100.0;
            }
        // d I / d q(u|z) = sum_x P(x,z) g(x,u); then through the Bayes quotient to r(u,z).
        std::vector<double> gamma(k_ * nz_, 0.0);
        for (std::size_t z = 0; z < nz_; ++z) {
            const double pen = 2.0 * mu * (mz[z] - v_.pz[z]);
            if (mz[z] <= 1e-300) {
                for (std::size_t u = 0; u < k_; ++u) gamma[u * nz_ + z] = pen;
                continue;
            }
            std::vector<double> h(k_, 0.0);
            for (std::size_t x = 0; x < v_.nx; ++x) {
                const double p = v_.pxz[x * nz_ + z];
                if (p <= 0.0) continue;
                for (std::size_t u = 0; u < k_; ++u) h[u] += p * g[x * k_ + u];
            }
            double hbar = 0.0;
            for (std::size_t u = 0; u < k_; ++u) hbar += q[u * nz_ + z] * h[u];
            for (std::size_t u = 0; u < k_; ++u) gamma[u * nz_ + z] = (h[u] - hbar) / mz[z] + pen;
        }
        grad->assign(m.params(), 0.0);
        auto& gr = *grad;
        const std::size_t n1 = v_.n1, n2 = v_.n2;
        for (std::size_t u = 0; u < k_; ++u)
            for (std::size_t i = 0; i < n1; ++i)
                for (std::size_t j = 0; j < n2; ++j) {
                    const double gm = gamma[u * nz_ + i * n2 + j];
                    const double ai = m.a[u * n1 + i], bj = m.b[u * n2 + j];
                    gr[u] += gm * ai * bj;
                    gr[k_ + u * n1 + i] += gm * m.pu[u] * bj;
                    gr[k_ + k_ * n1 + u * n2 + j] += gm * m.pu[u] * ai;
                }
        return f;
    }

private:
    const ReconstructionView& v_;
    std::size_t k_;
    std::size_t nz_ = 0;
    std::vector<double> px_;
};

inline double marginal_mismatch(const WynerModel& m, std::span<const double> pz) {
    const auto r = m.joint_uz();
    const std::size_t nz = pz.size();
    double l1 = 0.0;
    for (std::size_t z = 0; z < nz; ++z) {
        double s = 0.0;
        for (std::size_t u = 0; u < m.k; ++u) s += r[u * nz + z];
        l1 += std::abs(s - pz[z]);
    }
    return l1;
}

// Projected gradient descent with backtracking, one penalty weight.
inline void descend(const WynerObjective& obj, WynerModel& m, double mu, std::size_t max_iter, double tol) {
    std::vector<double> grad;
    double f = obj.value(m, mu, &grad);
    double step = 0.5;
    for (std::size_t it = 0; it < max_iter; ++it) {
        const auto x0 = m.flat();
        bool accepted = false;
        double f_new = f;
        for (int halvings = 0; halvings < 60; ++halvings) {
            std::vector<double> x(x0.size());
            for (std::size_t i = 0; i < x.size(); ++i) x[i] = x0[i] - step * grad[i];
            WynerModel trial = m;
            trial.assign(x);
            trial.project();
            const auto xt = trial.flat();
            double lin = 0.0, sq = 0.0;
            for (std::size_t i = 0; i < xt.size(); ++i) {
                const double d = xt[i] - x0[i];
                lin += grad[i] * d;
                sq += d * d;
            }
            f_new = obj.value(trial, mu);
            if (sq == 0.0) break;
            if (f_new <= f + lin + sq / (2.0 * step)) {
                m = std::move(trial);
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;
        const double change = f - f_new;
        f = obj.value(m, mu, &grad);
        step = std::min(0.5, step * 4.0);
        if (std::abs(change) < tol) break;
    }
}

// EM refit of the product form to the exact reconstruction marginal: Bayes
// inversion against P(z), then re-estimation of P(u), P(z1|u), P(z2|u).
inline void polish(WynerModel& m, std::span<const double> pz, std::size_t max_iter) {
    const std::size_t nz = pz.size(), k = m.k, n1 = m.n1, n2 = m.n2;
    for (std::size_t it = 0; it < max_iter; ++it) {
        if (marginal_mismatch(m, pz) < 1e-11) break;
        const auto r = m.joint_uz();
        std::vector<double> mz(nz, 0.0);
        for (std::size_t u = 0; u < k; ++u)
            for (std::size_t z = 0; z < nz; ++z) mz[z] += r[u * nz + z];
        std::vector<double> post(k * nz, 0.0);
        for (std::size_t u = 0; u < k; ++u)
            for (std::size_t z = 0; z < nz; ++z)
                post[u * nz + z] = mz[z] > 0.0 ? pz[z] * r[u * nz + z] / mz[z] : 0.0;
        for (std::size_t u = 0; u < k; ++u) {
            double mass = 0.0;
            std::vector<double> ra(n1, 0.0), rb(n2, 0.0);
            for (std::size_t i = 0; i < n1; ++i)
                for (std::size_t j = 0; j < n2; ++j) {
                    const double p = post[u * nz + i * n2 + j];
                    mass += p;
                    ra[i] += p;
                    rb[j] += p;
                }
            m.pu[u] = mass;
            if (mass > 0.0) {
                for (std::size_t i = 0; i < n1; ++i) m.a[u * n1 + i] = ra[i] / mass;
                for (std::size_t j = 0; j < n2; ++j) m.b[u * n2 + j] = rb[j] / mass;
            }
        }
    }
}

// Compass search along the exact factorizations of P(z1, z2). Writing
// c_u = P(u) P(z2|u), the move a_v <- (1 - t) a_v + t a_u together with
// c_u <- c_u - t / (1 - t) c_v, c_v <- c_v / (1 - t) leaves sum_u a_u c_u^T
// unchanged, so marginal match and Z1 <-> U <-> Z2 hold at every step.
inline void refine_factorization(const WynerObjective& obj, WynerModel& m, std::size_t max_evals) {
    const std::size_t k = m.k, n1 = m.n1, n2 = m.n2;
    if (k < 2) return;
    std::vector<double> c(k * n2);
    for (std::size_t u = 0; u < k; ++u)
        for (std::size_t j = 0; j < n2; ++j) c[u * n2 + j] = m.pu[u] * m.b[u * n2 + j];
    auto rebuild = [&](WynerModel& out, const std::vector<double>& a, const std::vector<double>& cc) {
        out.a = a;
        for (std::size_t u = 0; u < k; ++u) {
            double mass = 0.0;
            for (std::size_t j = 0; j < n2; ++j) mass += cc[u * n2 + j];
            out.pu[u] = mass;
            for (std::size_t j = 0; j < n2; ++j)
                out.b[u * n2 + j] = mass > 0.0 ? cc[u * n2 + j] / mass : 1.0 / static_cast<double>(n2);
        }
    };
    double f = obj.value(m, 0.0);
    std::vector<double> step(k * k, 0.05);
    std::size_t evals = 0;
    WynerModel trial = m;
    std::vector<double> a2, c2;
    while (evals < max_evals) {
        bool any = false, alive = false;
        for (std::size_t u = 0; u < k && evals < max_evals; ++u)
            for (std::size_t v = 0; v < k && evals < max_evals; ++v) {
                if (u == v) continue;
                double& s = step[u * k + v];
                if (s < 1e-10) continue;
                alive = true;
                bool improved = false;
                for (double t : {s, -s}) {
                    if (t >= 1.0) continue;
                    a2 = m.a;
                    c2 = c;
                    bool ok = true;
                    for (std::size_t i = 0; i < n1 && ok; ++i) {
                        double& x = a2[v * n1 + i];
                        x = (1.0 - t) * x + t * m.a[u * n1 + i];
                        if (x < 0.0) x < -1e-14 ? ok = false : x = 0.0;
                    }
                    const double r = t / (1.0 - t);
                    for (std::size_t j = 0; j < n2 && ok; ++j) {
                        double& y = c2[u * n2 + j];
                        y -= r * c[v * n2 + j];
                        if (y < 0.0) y < -1e-14 ? ok = false : y = 0.0;
                        c2[v * n2 + j] = c[v * n2 + j] / (1.0 - t);
                    }
                    if (!ok) continue;
                    // Keep a_v exactly stochastic; the factor moves into c_v.
                    double sum = 0.0;
                    for (std::size_t i = 0; i < n1; ++i) sum += a2[v * n1 + i];
                    if (!(sum > 0.0)) continue;
                    for (std::size_t i = 0; i < n1; ++i) a2[v * n1 + i] /= sum;
                    for (std::size_t j = 0; j < n2; ++j) c2[v * n2 + j] *= sum;
                    rebuild(trial, a2, c2);
                    ++evals;
                    const double ft = obj.value(trial, 0.0);
                    if (ft < f - 1e-15) {
                        f = ft;
                        m = trial;
                        c = c2;
                        s *= 2.0;
                        improved = any = true;
                        break;
                    }
                }
                if (!improved) s *= 0.5;
            }
        if (!alive) break;
        (void)any;
    }
}

inline WynerModel random_model(std::size_t k, std::size_t n1, std::size_t n2, std::mt19937_64& rng) {
    WynerModel m{k, n1, n2, std::vector<double>(k), std::vector<double>(k * n1), std::vector<double>(k * n2)};
    std::exponential_distribution<double> e(1.0);
    auto fill = [&](std::span<double> row) {
        double s = 0.0;
        for (auto& x : row) s += (x = e(rng) + 1e-3);
        for (auto& x : row) x /= s;
    };
    fill(m.pu);
    for (std::size_t u = 0; u < k; ++u) {
        fill(std::span<double>(m.a).subspan(u * n1, n1));
        fill(std::span<double>(m.b).subspan(u * n2, n2));
    }
    return m;
}

// U = (Z1, Z2) on the support of P(z); feasible whenever k >= |supp P(z)|.
inline std::optional<WynerModel> full_model(std::size_t k, std::size_t n1, std::size_t n2, std::span<const double> pz) {
    WynerModel m{k, n1, n2, std::vector<double>(k, 0.0), std::vector<double>(k * n1, 0.0), std::vector<double>(k * n2, 0.0)};
    std::size_t u = 0;
    for (std::size_t i = 0; i < n1; ++i)
        for (std::size_t j = 0; j < n2; ++j) {
            if (pz[i * n2 + j] <= 0.0) continue;
            if (u == k) return std::nullopt;
            m.pu[u] = pz[i * n2 + j];
            m.a[u * n1 + i] = 1.0;
            m.b[u * n2 + j] = 1.0;
            ++u;
        }
    for (; u < k; ++u) {
        m.a[u * n1] = 1.0;
        m.b[u * n2] = 1.0;
    }
    return m;
}

// U = connected component of the support graph of P(z1, z2); feasible when the
// reconstructions are independent within each component.
inline std::optional<WynerModel> component_model(std::size_t k, std::size_t n1, std::size_t n2,
                                                 std::span<const double> pz) {
    UnionFind uf(n1 + n2);
    for (std::size_t i = 0; i < n1; ++i)
        for (std::size_t j = 0; j < n2; ++j)
            if (pz[i * n2 + j] > 0.0) uf.join(i, n1 + j);
    std::vector<std::size_t> label(n1 + n2, SIZE_MAX);
    std::size_t count = 0;
    for (std::size_t i = 0; i < n1; ++i)
        for (std::size_t j = 0; j < n2; ++j) {
            if (pz[i * n2 + j] <= 0.0) continue;
            const auto root = uf.find(i);
            if (label[root] == SIZE_MAX) label[root] = count++;
        }
    if (count == 0 || count > k) return std::nullopt;
    WynerModel m{k, n1, n2, std::vector<double>(k, 0.0), std::vector<double>(k * n1, 0.0), std::vector<double>(k * n2, 0.0)};
    for (std::size_t i = 0; i < n1; ++i)
        for (std::size_t j = 0; j < n2; ++j) {
            const double p = pz[i * n2 + j];
            if (p <= 0.0) continue;
            const auto c = label[uf.find(i)];
            m.pu[c] += p;
        }
    for (std::size_t i = 0; i < n1; ++i)
        for (std::size_t j = 0; j < n2; ++j) {
            const double p = pz[i * n2 + j];
            if (p <= 0.0) continue;
            const auto c = label[uf.find(i)];
            m.a[c * n1 + i] += p / m.pu[c];
            m.b[c * n2 + j] += p / m.pu[c];
        }
    for (std::size_t u = count; u < k; ++u) {
        m.a[u * n1] = 1.0;
        m.b[u * n2] = 1.0;
    }
    return m;
}

// Certificate: assemble the actual joint with U attached to (Z1, Z2) by Bayes
// inversion and measure every condition with the generic Shannon functionals.
inline WynerSolution certify(const JointDistribution& joint, const ReconstructionView& view, const WynerModel& m,
                             std::string origin) {
    const std::size_t k = m.k, n1 = m.n1, n2 = m.n2, nz = n1 * n2;
    const auto r = m.joint_uz();
    std::vector<double> kernel(nz * k);
    for (std::size_t z = 0; z < nz; ++z) {
        double mz = 0.0;
        for (std::size_t u = 0; u < k; ++u) mz += r[u * nz + z];
        for (std::size_t u = 0; u < k; ++u)
            kernel[z * k + u] = mz > 0.0 ? r[u * nz + z] / mz : 1.0 / static_cast<double>(k);
    }
    const Variable u_var{names::u, Alphabet::indexed(k)};
    WynerSolution s;
    s.u_cardinality = k;
    s.p_u_given_z = Channel::validate(view.z_vars, {u_var}, std::move(kernel));
    const auto full = attach(marginalize(joint, {names::x1, names::x2, names::z1, names::z2}), s.p_u_given_z);

    std::vector<double> pu(m.pu), a(m.a), b(m.b);
    double sum = 0.0;
    for (double p : pu) sum += p;
    for (auto& p : pu) p /= sum;
    s.p_u = pu;
    for (std::size_t u = 0; u < k; ++u) {
        if (m.pu[u] <= 0.0) {
            std::fill(a.begin() + u * n1, a.begin() + (u + 1) * n1, 1.0 / n1);
            std::fill(b.begin() + u * n2, b.begin() + (u + 1) * n2, 1.0 / n2);
        }
    }
    s.p_z1_given_u = Channel::validate({u_var}, {view.z_vars[0]}, std::move(a));
    s.p_z2_given_u = Channel::validate({u_var}, {view.z_vars[1]}, std::move(b));

    s.objective = mutual_information(full, {names::x1, names::x2}, names::u);
    s.marginal_match_residual = marginal_mismatch(m, view.pz);
    s.residuals.marginal_match = s.marginal_match_residual;
    s.residuals.conditional_independence = markov_residual(full, names::z1, names::u, names::z2);
    s.residuals.reconstruction_markov = markov_residual(full, {names::x1, names::x2}, {names::z1, names::z2}, names::u);
    s.residuals.encoder_markov = markov_residual(full, {names::z1, names::z2}, {names::x1, names::x2}, names::u);
    s.feasible = s.marginal_match_residual <= feasibility_tol && s.residuals.conditional_independence <= feasibility_tol;
    s.origin = std::move(origin);
    return s;
}

}  // namespace detail

/// Certified upper bound on Wyner's lossy common information for the encoder
/// embodied in `joint`. Every returned objective is I(X1,X2;U) of an explicitly
/// assembled joint; `feasible` reports whether the Markov residuals pass.
inline WynerSolution wyner_upper(const JointDistribution& joint, const WynerOptions& opt = {}) {
    const auto view = detail::reconstruction_view(joint);
    const std::size_t k = opt.u_card == 0 ? view.n1 * view.n2 : opt.u_card;
    if (k < 1) throw ValidationError("u cardinality must be at least 1");

    std::optional<WynerSolution> best;
    auto consider = [&](WynerSolution cand) {
        if (!best) {
            best = std::move(cand);
            return;
        }
        if (cand.feasible != best->feasible) {
            if (cand.feasible) best = std::move(cand);
            return;
        }
        const bool better = cand.feasible ? cand.objective < best->objective - 1e-12
                                          : cand.marginal_match_residual < best->marginal_match_residual;
        if (better) best = std::move(cand);
    };

    // Closed-form candidates.
    {
        detail::WynerModel constant{k, view.n1, view.n2, std::vector<double>(k, 0.0), std::vector<double>(k * view.n1, 0.0),
                                    std::vector<double>(k * view.n2, 0.0)};
        constant.pu[0] = 1.0;
        for (std::size_t i = 0; i < view.n1; ++i)
            for (std::size_t j = 0; j < view.n2; ++j) {
                constant.a[i] += view.pz[i * view.n2 + j];
                constant.b[j] += view.pz[i * view.n2 + j];
            }
        for (std::size_t u = 1; u < k; ++u) {
            constant.a[u * view.n1] = 1.0;
            constant.b[u * view.n2] = 1.0;
        }
        consider(detail::certify(joint, view, constant, "constant"));
    }
    if (auto m = detail::component_model(k, view.n1, view.n2, view.pz))
        consider(detail::certify(joint, view, *m, "common-part"));
    const auto full = detail::full_model(k, view.n1, view.n2, view.pz);
    if (full) consider(detail::certify(joint, view, *full, "reconstruction-pair"));

    // Penalty-method descent: restart 0 starts from U = (Z1, Z2) when it fits,
    // the others from seeded random models.
    const detail::WynerObjective obj(view, k);
    std::mt19937_64 rng(opt.seed);
    std::size_t used = 0;
    for (std::size_t r = 0; r < opt.restarts; ++r) {
        detail::WynerModel m = (r == 0 && full) ? *full : detail::random_model(k, view.n1, view.n2, rng);
        for (double mu = 1e2; mu <= 1e8 * 1.0001; mu *= 10.0) {
            detail::descend(obj, m, mu, opt.iterations_per_stage, opt.tol);
            if (mu >= 1e4 && detail::marginal_mismatch(m, view.pz) < 1e-6) break;
        }
        detail::polish(m, view.pz, opt.polish_iterations);
        if (detail::marginal_mismatch(m, view.pz) < 1e-9) detail::refine_factorization(obj, m, opt.refine_evaluations);
        ++used;
        consider(detail::certify(joint, view, m, "restart " + std::to_string(r)));
    }
    best->restarts_used = used;
    return *best;
}

namespace detail {

// Objective of a decomposition given as (P(u), P(z1|u), P(z2|u)), evaluated
// through the generic attach path.
inline double decomposition_objective(const JointDistribution& xz, const ReconstructionView& view, std::size_t k,
                                      std::span<const double> pu, std::span<const double> a,
                                      std::span<const double> b) {
    const std::size_t n1 = view.n1, n2 = view.n2, nz = n1 * n2;
    std::vector<double> kernel(nz * k);
    for (std::size_t i = 0; i < n1; ++i)
        for (std::size_t j = 0; j < n2; ++j) {
            const std::size_t z = i * n2 + j;
            double mz = 0.0;
            for (std::size_t u = 0; u < k; ++u) mz += pu[u] * a[u * n1 + i] * b[u * n2 + j];
            for (std::size_t u = 0; u < k; ++u)
                kernel[z * k + u] = mz > 0.0 ? pu[u] * a[u * n1 + i] * b[u * n2 + j] / mz : 1.0 / static_cast<double>(k);
        }
    const auto ch = Channel::validate(view.z_vars, {{names::u, Alphabet::indexed(k)}}, std::move(kernel));
    return mutual_information(attach(xz, ch), {names::x1, names::x2}, names::u);
}

}  // namespace detail

struct WynerBruteforceResult {
    double objective = std::numeric_limits<double>::infinity();  // +inf when nothing feasible was found
    std::size_t feasible_points = 0;
    std::size_t evaluated = 0;
};

/// Grid oracle for the Wyner infimum with |U| = u_card. Grids the rows of
/// P(z1|u) on the simplex lattice of resolution 1/grid_steps and solves the
/// remaining factor exactly from the linear constraint
///   sum_u P(z1|u) [P(u) P(z2|u)] = P(z1, z2),
/// keeping only nonnegative exact solutions. The best cell is refined once.
/// Supports u_card <= |Z1| (or <= |Z2|, by exchanging the roles).
inline WynerBruteforceResult wyner_bruteforce(const JointDistribution& joint, std::size_t u_card,
                                              std::size_t grid_steps, double budget = 1e8) {
    auto view = detail::reconstruction_view(joint);
    auto xz = marginalize(joint, {names::x1, names::x2, names::z1, names::z2});
    const std::size_t k = u_card;
    if (k < 1 || grid_steps < 1) throw ValidationError("u_card and grid_steps must be positive");

    WynerBruteforceResult res;
    if (k == 1) {
        std::vector<double> p1(view.n1, 0.0), p2(view.n2, 0.0);
        for (std::size_t i = 0; i < view.n1; ++i)
            for (std::size_t j = 0; j < view.n2; ++j) {
                p1[i] += view.pz[i * view.n2 + j];
                p2[j] += view.pz[i * view.n2 + j];
            }
        double dev = 0.0;
        for (std::size_t i = 0; i < view.n1; ++i)
            for (std::size_t j = 0; j < view.n2; ++j) dev += std::abs(view.pz[i * view.n2 + j] - p1[i] * p2[j]);
        res.evaluated = 1;
        if (dev <= 1e-9) {
            res.feasible_points = 1;
            res.objective = 0.0;
        }
        return res;
    }

    // Grid over the factor with the larger alphabet so the linear solve is overdetermined or square.
    const bool swapped = k > view.n1;
    if (swapped && k > view.n2)
        throw ValidationError("wyner_bruteforce supports u_card up to max(|Z1|, |Z2|)");
    const std::size_t ng = swapped ? view.n2 : view.n1;  // gridded factor alphabet
    const std::size_t ns = swapped ? view.n1 : view.n2;  // solved factor alphabet
    // P arranged as (gridded, solved)
    std::vector<double> P(ng * ns);
    for (std::size_t i = 0; i < view.n1; ++i)
        for (std::size_t j = 0; j < view.n2; ++j)
            (swapped ? P[j * ns + i] : P[i * ns + j]) = view.pz[i * view.n2 + j];

    const double per_row = lattice_size(ng, grid_steps);
    if (std::pow(per_row, static_cast<double>(k)) > budget)
        throw ValidationError("wyner_bruteforce grid exceeds the evaluation budget");

    std::vector<double> best_g;
    auto evaluate = [&](const std::vector<double>& g) {
        ++res.evaluated;
        // Normal equations (G G^T) c_j = G P_j for each solved column j.
        std::vector<double> M(k * k, 0.0);
        for (std::size_t u = 0; u < k; ++u)
            for (std::size_t v = 0; v < k; ++v)
                for (std::size_t i = 0; i < ng; ++i) M[u * k + v] += g[u * ng + i] * g[v * ng + i];
        // Gaussian elimination with partial pivoting on all right-hand sides.
        std::vector<double> rhs(k * ns, 0.0);
        for (std::size_t u = 0; u < k; ++u)
            for (std::size_t j = 0; j < ns; ++j)
                for (std::size_t i = 0; i < ng; ++i) rhs[u * ns + j] += g[u * ng + i] * P[i * ns + j];
        for (std::size_t c = 0; c < k; ++c) {
            std::size_t piv = c;
            for (std::size_t r = c + 1; r < k; ++r)
                if (std::abs(M[r * k + c]) > std::abs(M[piv * k + c])) piv = r;
            if (std::abs(M[piv * k + c]) < 1e-12) return;
            if (piv != c) {
                for (std::size_t t = 0; t < k; ++t) std::swap(M[c * k + t], M[piv * k + t]);
                for (std::size_t t = 0; t < ns; ++t) std::swap(rhs[c * ns + t], rhs[piv * ns + t]);
            }
            for (std::size_t r = 0; r < k; ++r) {
                if (r == c) continue;
                const double f = M[r * k + c] / M[c * k + c];
                if (f == 0.0) continue;
                for (std::size_t t = 0; t < k; ++t) M[r * k + t] -= f * M[c * k + t];
                for (std::size_t t = 0; t < ns; ++t) rhs[r * ns + t] -= f * rhs[c * ns + t];
            }
        }
        std::vector<double> C(k * ns);
        for (std::size_t u = 0; u < k; ++u)
            for (std::size_t j = 0; j < ns; ++j) {
                double c = rhs[u * ns + j] / M[u * k + u];
                if (c < -1e-12) return;
                C[u * ns + j] = std::max(c, 0.0);
            }
        double resid = 0.0;
        for (std::size_t i = 0; i < ng; ++i)
            for (std::size_t j = 0; j < ns; ++j) {
                double s = 0.0;
                for (std::size_t u = 0; u < k; ++u) s += g[u * ng + i] * C[u * ns + j];
                resid += std::abs(s - P[i * ns + j]);
            }
        if (resid > 1e-9) return;
        std::vector<double> pu(k, 0.0), solved(k * ns, 0.0);
        for (std::size_t u = 0; u < k; ++u) {
            for (std::size_t j = 0; j < ns; ++j) pu[u] += C[u * ns + j];
            for (std::size_t j = 0; j < ns; ++j)
                solved[u * ns + j] = pu[u] > 0.0 ? C[u * ns + j] / pu[u] : 1.0 / static_cast<double>(ns);
        }
        ++res.feasible_points;
        const double obj = swapped ? detail::decomposition_objective(xz, view, k, pu, solved, g)
                                   : detail::decomposition_objective(xz, view, k, pu, g, solved);
        if (obj < res.objective) {
            res.objective = obj;
            best_g = g;
        }
    };

    // Coarse pass: rows of the gridded factor enumerated as a k-fold product.
    std::vector<std::vector<double>> lattice;
    for_each_lattice_point(ng, grid_steps, [&](std::span<const double> p) { lattice.emplace_back(p.begin(), p.end()); });
    std::vector<std::size_t> idx(k, 0);
    std::vector<double> g(k * ng);
    for (;;) {
        for (std::size_t u = 0; u < k; ++u) std::copy(lattice[idx[u]].begin(), lattice[idx[u]].end(), g.begin() + u * ng);
        evaluate(g);
        std::size_t pos = k;
        while (pos-- > 0) {
            if (++idx[pos] < lattice.size()) break;
            idx[pos] = 0;
        }
        if (pos == SIZE_MAX) break;
    }

    // Refinement: a finer product grid over the free coordinates within one
    // coarse cell of the best point.
    if (!best_g.empty() && ng > 1) {
        const std::size_t free = k * (ng - 1);
        const double refine_budget = std::min(budget, 1e6);
        std::size_t m = static_cast<std::size_t>(std::floor(std::pow(refine_budget, 1.0 / static_cast<double>(free))));
        m = std::max<std::size_t>(m, 3) | 1;  // odd so the centre is included
        const double h = 1.0 / static_cast<double>(grid_steps);
        const auto centre = best_g;
        std::vector<std::size_t> off(free, 0);
        std::vector<double> cand(k * ng);
        for (;;) {
            bool ok = true;
            for (std::size_t u = 0; u < k && ok; ++u) {
                double s = 0.0;
                for (std::size_t i = 0; i + 1 < ng; ++i) {
                    const double delta = -h + 2.0 * h * static_cast<double>(off[u * (ng - 1) + i]) / static_cast<double>(m - 1);
                    const double val = centre[u * ng + i] + delta;
                    if (val < 0.0 || val > 1.0) ok = false;
                    cand[u * ng + i] = val;
                    s += val;
                }
                const double last = 1.0 - s;
                if (last < -1e-15) ok = false;
                cand[u * ng + ng - 1] = std::max(last, 0.0);
            }
            if (ok) evaluate(cand);
            std::size_t pos = free;
            while (pos-- > 0) {
                if (++off[pos] < m) break;
                off[pos] = 0;
            }
            if (pos == SIZE_MAX) break;
        }
    }
    return res;
}

// ---------------------------------------------------------------------------
// Gacs-Korner

struct CommonPart {
    std::size_t n1 = 0, n2 = 0;
    std::size_t components = 0;
    std::vector<int> component_of;  // n1 * n2, -1 off the support
    Channel label_channel_x1;       // X1 -> C (zero-mass symbols map to component 0)
    Channel label_channel_x2;       // X2 -> C
    std::vector<int> x1_label;      // -1 for zero-mass symbols
    std::vector<int> x2_label;
};

/// Connected components of the bipartite support graph of P(X1, X2), numbered in
/// order of first occurrence in a row-major scan.
inline CommonPart gk_common_part(const JointDistribution& joint) {
    if (joint.variables().size() != 2) throw ValidationError("gk_common_part expects a joint over two variables");
    const auto& v1 = joint.variables()[0];
    const auto& v2 = joint.variables()[1];
    CommonPart cp;
    cp.n1 = v1.alphabet.size();
    cp.n2 = v2.alphabet.size();
    UnionFind uf(cp.n1 + cp.n2);
    for (std::size_t i = 0; i < cp.n1; ++i)
        for (std::size_t j = 0; j < cp.n2; ++j)
            if (joint[i * cp.n2 + j] > 0.0) uf.join(i, cp.n1 + j);
    std::vector<int> root_label(cp.n1 + cp.n2, -1);
    cp.component_of.assign(cp.n1 * cp.n2, -1);
    int next = 0;
    for (std::size_t i = 0; i < cp.n1; ++i)
        for (std::size_t j = 0; j < cp.n2; ++j) {
            if (joint[i * cp.n2 + j] <= 0.0) continue;
            auto& l = root_label[uf.find(i)];
            if (l < 0) l = next++;
            cp.component_of[i * cp.n2 + j] = l;
        }
    cp.components = static_cast<std::size_t>(next);
    cp.x1_label.assign(cp.n1, -1);
    cp.x2_label.assign(cp.n2, -1);
    std::vector<std::size_t> t1(cp.n1, 0), t2(cp.n2, 0);
    for (std::size_t i = 0; i < cp.n1; ++i) {
        cp.x1_label[i] = root_label[uf.find(i)];
        t1[i] = cp.x1_label[i] < 0 ? 0 : static_cast<std::size_t>(cp.x1_label[i]);
    }
    for (std::size_t j = 0; j < cp.n2; ++j) {
        cp.x2_label[j] = root_label[uf.find(cp.n1 + j)];
        t2[j] = cp.x2_label[j] < 0 ? 0 : static_cast<std::size_t>(cp.x2_label[j]);
    }
    const Variable c{"C", Alphabet::indexed(std::max<std::size_t>(cp.components, 1))};
    cp.label_channel_x1 = Channel::deterministic({v1}, {c}, t1);
    cp.label_channel_x2 = Channel::deterministic({v2}, {c}, t2);
    return cp;
}

/// Residuals of the four Markov conditions of a GK auxiliary V:
/// X2<->X1<->V, X1<->X2<->V, X1<->Z1<->V, X2<->Z2<->V.
inline std::array<double, 4> gk_condition_residuals(const JointDistribution& joint_with_v,
                                                    const std::string& v = names::v) {
    return {markov_residual(joint_with_v, names::x2, names::x1, v), markov_residual(joint_with_v, names::x1, names::x2, v),
            markov_residual(joint_with_v, names::x1, names::z1, v), markov_residual(joint_with_v, names::x2, names::z2, v)};
}

struct GKSolution {
    Alphabet v_alphabet;
    Channel v_map_from_x1;  // deterministic X1 -> V
    Channel v_map_from_z1;  // deterministic Z1 -> V
    Channel v_map_from_z2;  // deterministic Z2 -> V
    double objective = 0.0;  // I(X1,X2;V) in bits
    std::array<double, 4> condition_residuals{};
    std::size_t common_components = 0;
    bool feasible = false;
};

/// Certified lower bound on Gacs-Korner's lossy common information. V is the
/// finest coarsening of the common part of (X1, X2) that both Z1 and Z2 can
/// recover deterministically. A cell (x1, z1) with mass at most `eps` does not
/// link components.
inline GKSolution gk_lower(const JointDistribution& joint, double eps = 1e-12) {
    for (const auto* n : {&names::x1, &names::x2, &names::z1, &names::z2})
        if (!joint.has(*n)) throw ValidationError("joint must contain X1, X2, Z1 and Z2 (missing " + *n + ")");
    const auto x = marginalize(joint, {names::x1, names::x2});
    const auto cp = gk_common_part(x);
    const std::size_t nc = std::max<std::size_t>(cp.components, 1);

    const auto j1 = marginalize(joint, {names::x1, names::z1});
    const auto j2 = marginalize(joint, {names::x2, names::z2});
    const std::size_t m1 = j1.variables()[1].alphabet.size();
    const std::size_t m2 = j2.variables()[1].alphabet.size();

    // Components joined whenever one reconstruction symbol is reachable from both.
    UnionFind uf(nc);
    std::vector<int> z1_comp(m1, -1), z2_comp(m2, -1);
    for (std::size_t i = 0; i < cp.n1; ++i)
        for (std::size_t z = 0; z < m1; ++z) {
            if (j1[i * m1 + z] <= eps || cp.x1_label[i] < 0) continue;
            if (z1_comp[z] < 0) z1_comp[z] = cp.x1_label[i];
            else uf.join(static_cast<std::size_t>(z1_comp[z]), static_cast<std::size_t>(cp.x1_label[i]));
        }
    for (std::size_t j = 0; j < cp.n2; ++j)
        for (std::size_t z = 0; z < m2; ++z) {
            if (j2[j * m2 + z] <= eps || cp.x2_label[j] < 0) continue;
            if (z2_comp[z] < 0) z2_comp[z] = cp.x2_label[j];
            else uf.join(static_cast<std::size_t>(z2_comp[z]), static_cast<std::size_t>(cp.x2_label[j]));
        }
    std::vector<int> cls(nc, -1);
    int next = 0;
    for (std::size_t c = 0; c < nc; ++c) {
        auto& l = cls[uf.find(c)];
        if (l < 0) l = next++;
    }
    auto class_of_component = [&](int c) { return c < 0 ? 0 : static_cast<std::size_t>(cls[uf.find(static_cast<std::size_t>(c))]); };

    GKSolution s;
    s.common_components = cp.components;
    s.v_alphabet = Alphabet::indexed(static_cast<std::size_t>(next));
    const Variable v{names::v, s.v_alphabet};
    std::vector<std::size_t> tx1(cp.n1), tz1(m1), tz2(m2);
    for (std::size_t i = 0; i < cp.n1; ++i) tx1[i] = class_of_component(cp.x1_label[i]);
    for (std::size_t z = 0; z < m1; ++z) tz1[z] = class_of_component(z1_comp[z]);
    for (std::size_t z = 0; z < m2; ++z) tz2[z] = class_of_component(z2_comp[z]);
    s.v_map_from_x1 = Channel::deterministic({joint.variable(names::x1)}, {v}, tx1);
    s.v_map_from_z1 = Channel::deterministic({joint.variable(names::z1)}, {v}, tz1);
    s.v_map_from_z2 = Channel::deterministic({joint.variable(names::z2)}, {v}, tz2);

    const auto base = marginalize(joint, {names::x1, names::x2, names::z1, names::z2});
    const auto with_v = attach(base, s.v_map_from_x1);
    // V is a function of X1, so I(X1,X2;V) = H(V); a single class gives exactly 0.
    s.objective = std::max(0.0, entropy(with_v, names::v));
    s.condition_residuals = gk_condition_residuals(with_v);
    s.feasible = std::all_of(s.condition_residuals.begin(), s.condition_residuals.end(),
                             [](double r) { return r <= feasibility_tol; });
    return s;
}

struct GKBruteforceResult {
    double deterministic = 0.0;  // best over V = f(X1)
    double stochastic = 0.0;     // best over the gridded P(V|X1)
    double best = 0.0;
    std::size_t feasible_candidates = 0;
    std::size_t evaluated = 0;
};

/// Enumeration oracle for K: every deterministic map X1 -> {0..v_card-1} plus a
/// lattice grid over stochastic P(V|X1); candidates whose four Markov residuals
/// are all <= eps are kept. The constant V is always feasible, so results are >= 0.
inline GKBruteforceResult gk_bruteforce(const JointDistribution& joint, std::size_t v_card, double eps,
                                        std::size_t grid_steps, double budget = 1e8) {
    for (const auto* n : {&names::x1, &names::x2, &names::z1, &names::z2})
        if (!joint.has(*n)) throw ValidationError("joint must contain X1, X2, Z1 and Z2 (missing " + *n + ")");
    if (v_card < 1) throw ValidationError("v_card must be positive");
    const auto base = marginalize(joint, {names::x1, names::x2, names::z1, names::z2});
    const auto& x1 = base.variables()[0];
    const std::size_t n1 = x1.alphabet.size();
    const double det_count = std::pow(static_cast<double>(v_card), static_cast<double>(n1));
    const double sto_count = grid_steps > 0 ? std::pow(lattice_size(v_card, grid_steps), static_cast<double>(n1)) : 0.0;
    if (det_count + sto_count > budget) throw ValidationError("gk_bruteforce enumeration exceeds the evaluation budget");

    const Variable v{names::v, Alphabet::indexed(v_card)};
    GKBruteforceResult res;
    auto check = [&](const Channel& ch) -> std::optional<double> {
        ++res.evaluated;
        const auto jv = attach(base, ch);
        const auto r = gk_condition_residuals(jv);
        if (!std::all_of(r.begin(), r.end(), [&](double x) { return x <= eps; })) return std::nullopt;
        ++res.feasible_candidates;
        return mutual_information(jv, {names::x1, names::x2}, names::v);
    };

    std::vector<std::size_t> f(n1, 0);
    for (;;) {
        if (auto val = check(Channel::deterministic({x1}, {v}, f))) res.deterministic = std::max(res.deterministic, *val);
        std::size_t pos = n1;
        while (pos-- > 0) {
            if (++f[pos] < v_card) break;
            f[pos] = 0;
        }
        if (pos == SIZE_MAX) break;
    }

    if (grid_steps > 0 && v_card > 1) {
        std::vector<std::vector<double>> lattice;
        for_each_lattice_point(v_card, grid_steps, [&](std::span<const double> p) { lattice.emplace_back(p.begin(), p.end()); });
        std::vector<std::size_t> idx(n1, 0);
        std::vector<double> kernel(n1 * v_card);
        for (;;) {
            for (std::size_t i = 0; i < n1; ++i)
                std::copy(lattice[idx[i]].begin(), lattice[idx[i]].end(), kernel.begin() + i * v_card);
            if (auto val = check(Channel::validate({x1}, {v}, kernel))) res.stochastic = std::max(res.stochastic, *val);
            std::size_t pos = n1;
            while (pos-- > 0) {
                if (++idx[pos] < lattice.size()) break;
                idx[pos] = 0;
            }
            if (pos == SIZE_MAX) break;
        }
    }
    res.best = std::max(res.deterministic, res.stochastic);
    return res;
}

}  // namespace lossyci
