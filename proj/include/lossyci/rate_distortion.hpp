#pragma once

// Blahut-Arimoto rate-distortion solvers for finite sources.
//
// ba_single      one source, one distortion constraint, fixed multiplier
// ba_at_distortion  bisection over the multiplier to hit a target distortion
// ba_joint       pair source (X1, X2) with two distortion constraints

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "probability.hpp"

namespace lossyci {

class DistortionMeasure {
public:
    /// `costs` is row-major (source symbol, reconstruction symbol). Entries may be
    /// +infinity for forbidden pairs; every source row needs one finite entry.
    DistortionMeasure(Alphabet source, Alphabet reconstruction, std::vector<double> costs)
        : source_(std::move(source)), reconstruction_(std::move(reconstruction)), costs_(std::move(costs)) {
        if (costs_.size() != source_.size() * reconstruction_.size())
            throw ValidationError("distortion matrix shape does not match alphabets");
        for (std::size_t x = 0; x < source_.size(); ++x) {
            bool finite = false;
            for (std::size_t z = 0; z < reconstruction_.size(); ++z) {
                const double c = (*this)(x, z);
                if (std::isnan(c) || c < 0.0) throw ValidationError("distortion entries must be nonnegative");
                finite = finite || std::isfinite(c);
            }
            if (!finite) throw ValidationError("source symbol '" + source_[x] + "' has no finite-cost reconstruction");
        }
    }

    static DistortionMeasure hamming(const Alphabet& a) {
        std::vector<double> c(a.size() * a.size(), 1.0);
        for (std::size_t i = 0; i < a.size(); ++i) c[i * a.size() + i] = 0.0;
        return {a, a, std::move(c)};
    }

    const Alphabet& source_alphabet() const noexcept { return source_; }
    const Alphabet& reconstruction_alphabet() const noexcept { return reconstruction_; }
    std::span<const double> costs() const noexcept { return costs_; }
    double operator()(std::size_t x, std::size_t z) const { return costs_[x * reconstruction_.size() + z]; }

private:
    Alphabet source_;
    Alphabet reconstruction_;
    std::vector<double> costs_;
};

/// Effective distortion for a remote target Z observed through P(Z|X):
/// d~(x, zhat) = sum_z P(z|x) d(z, zhat).
inline DistortionMeasure remote_distortion(const Channel& target, const DistortionMeasure& d) {
    if (target.inputs().size() != 1 || target.outputs().size() != 1)
        throw ValidationError("remote target channel must map one variable to one variable");
    if (!(target.outputs()[0].alphabet == d.source_alphabet()))
        throw ValidationError("remote target alphabet does not match the distortion source alphabet");
    const std::size_t nx = target.rows(), nz = target.cols(), m = d.reconstruction_alphabet().size();
    std::vector<double> c(nx * m, 0.0);
    for (std::size_t x = 0; x < nx; ++x)
        for (std::size_t zh = 0; zh < m; ++zh) {
            double s = 0.0;
            for (std::size_t z = 0; z < nz; ++z) {
                const double p = target.at(x, z);
                if (p > 0.0) s += p * d(z, zh);
            }
            c[x * m + zh] = s;
        }
    return {target.inputs()[0].alphabet, d.reconstruction_alphabet(), std::move(c)};
}

struct RDSolution {
    std::vector<double> lagrange;     // one multiplier per distortion constraint
    double rate = 0.0;                // bits
    std::vector<double> distortions;  // achieved expected distortions
    Channel encoder;
    std::size_t iterations = 0;
    bool converged = false;
    std::vector<double> objective_history;  // rate + sum(lambda * distortion), per BA iteration
};

struct BAOptions {
    double tol = 1e-9;             // stop when the per-iteration rate change drops below this
    double gap_tol = 1e-7;         // or when the objective is certified within this of the optimum
    std::size_t max_iter = 50000;
    double distortion_tol = 1e-6;  // bisection target accuracy
    std::size_t restarts = 0;      // extra seed-perturbed initializations of the output marginal
    std::uint64_t seed = 0;
    std::size_t max_bisection = 80;
};

struct ChannelNames {
    std::string input = "X";
    std::string output = "Z";
};

namespace detail {

struct BAState {
    std::vector<double> encoder;  // nx * nz
    std::vector<double> marginal;
    double rate = 0.0;
    double expected_cost = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
    double gap = std::numeric_limits<double>::infinity();  // bound on objective - optimum
    std::vector<double> history;
};

inline double channel_rate(std::span<const double> px, std::span<const double> enc, std::span<const double> q,
                           std::size_t nz) {
    double r = 0.0;
    for (std::size_t x = 0; x < px.size(); ++x) {
        if (px[x] <= 0.0) continue;
        for (std::size_t z = 0; z < nz; ++z) {
            const double e = enc[x * nz + z];
            if (e > 0.0 && q[z] > 0.0) r += px[x] * e * std::log2(e / q[z]);
        }
    }
    return std::max(r, 0.0);
}

inline std::vector<double> output_marginal(std::span<const double> px, std::span<const double> enc, std::size_t nz) {
    std::vector<double> q(nz, 0.0);
    for (std::size_t x = 0; x < px.size(); ++x)
        for (std::size_t z = 0; z < nz; ++z) q[z] += px[x] * enc[x * nz + z];
    return q;
}

inline double expected(std::span<const double> px, std::span<const double> enc, std::span<const double> cost,
                       std::size_t nz) {
    double d = 0.0;
    for (std::size_t x = 0; x < px.size(); ++x) {
        if (px[x] <= 0.0) continue;
        for (std::size_t z = 0; z < nz; ++z) {
            const double e = enc[x * nz + z];
            if (e > 0.0) d += px[x] * e * cost[x * nz + z];
        }
    }
    return d;
}

// Alternating minimization of I(X;Z) + E[cost(X,Z)] with cost already scaled
// by the multipliers (bits per unit).
inline BAState blahut_arimoto(std::span<const double> px, std::span<const double> cost, std::size_t nz,
                              std::vector<double> q, double tol, std::size_t max_iter, double gap_tol = 0.0) {
    const std::size_t nx = px.size();
    BAState s;
    s.encoder.assign(nx * nz, 0.0);
    std::vector<double> logits(nz);
    double prev_rate = std::numeric_limits<double>::infinity();
    for (std::size_t it = 1; it <= max_iter; ++it) {
        for (std::size_t x = 0; x < nx; ++x) {
            double best = -std::numeric_limits<double>::infinity();
            for (std::size_t z = 0; z < nz; ++z) {
                const double c = cost[x * nz + z];
                logits[z] = (q[z] > 0.0 && std::isfinite(c)) ? std::log2(q[z]) - c
                                                              : -std::numeric_limits<double>::infinity();
                best = std::max(best, logits[z]);
            }
            double sum = 0.0;
            for (std::size_t z = 0; z < nz; ++z) {
                const double e = std::isfinite(logits[z]) ? std::exp2(logits[z] - best) : 0.0;
                s.encoder[x * nz + z] = e;
                sum += e;
            }
            for (std::size_t z = 0; z < nz; ++z) s.encoder[x * nz + z] /= sum;
        }
        auto next = output_marginal(px, s.encoder, nz);
        // Blahut's bound: the objective exceeds the optimum by at most log2 max_z q'(z) / q(z).
        double ratio = 0.0;
        for (std::size_t z = 0; z < nz; ++z)
            if (q[z] > 0.0) ratio = std::max(ratio, next[z] / q[z]);
        s.gap = ratio > 0.0 ? std::max(std::log2(ratio), 0.0) : 0.0;
        q = std::move(next);
        s.rate = channel_rate(px, s.encoder, q, nz);
        s.expected_cost = expected(px, s.encoder, cost, nz);
        s.history.push_back(s.rate + s.expected_cost);
        s.iterations = it;
        if (std::abs(s.rate - prev_rate) < tol || s.gap < gap_tol) {
            s.converged = true;
            break;
        }
        prev_rate = s.rate;
    }
    s.marginal = std::move(q);
    return s;
}

inline std::vector<double> uniform(std::size_t n) { return std::vector<double>(n, 1.0 / static_cast<double>(n)); }

// Best of the uniform start and `restarts` seed-perturbed starts (lowest objective).
inline BAState blahut_arimoto_restarts(std::span<const double> px, std::span<const double> cost, std::size_t nz,
                                       const BAOptions& opt) {
    BAState best = blahut_arimoto(px, cost, nz, uniform(nz), opt.tol, opt.max_iter, opt.gap_tol);
    std::mt19937_64 rng(opt.seed);
    for (std::size_t r = 0; r < opt.restarts; ++r) {
        std::vector<double> q(nz);
        double sum = 0.0;
        for (auto& v : q) {
            v = 0.5 + std::generate_canonical<double, 53>(rng);
            sum += v;
        }
        for (auto& v : q) v /= sum;
        auto cand = blahut_arimoto(px, cost, nz, std::move(q), opt.tol, opt.max_iter, opt.gap_tol);
        if (cand.rate + cand.expected_cost < best.rate + best.expected_cost - 1e-15) best = std::move(cand);
    }
    return best;
}

inline std::vector<double> scaled_cost(const DistortionMeasure& d, double lambda) {
    std::vector<double> c(d.costs().begin(), d.costs().end());
    for (auto& v : c)
        if (std::isfinite(v)) v *= lambda;
    return c;
}

inline double min_achievable(std::span<const double> px, const DistortionMeasure& d) {
    double total = 0.0;
    for (std::size_t x = 0; x < px.size(); ++x) {
        if (px[x] <= 0.0) continue;
        double m = std::numeric_limits<double>::infinity();
        for (std::size_t z = 0; z < d.reconstruction_alphabet().size(); ++z) m = std::min(m, d(x, z));
        total += px[x] * m;
    }
    return total;
}

struct ZeroRatePoint {
    std::size_t symbol;
    double distortion;
};

// Best constant reconstruction: argmin_z E[d(X, z)].
inline ZeroRatePoint zero_rate_point(std::span<const double> px, const DistortionMeasure& d) {
    ZeroRatePoint best{0, std::numeric_limits<double>::infinity()};
    for (std::size_t z = 0; z < d.reconstruction_alphabet().size(); ++z) {
        double e = 0.0;
        for (std::size_t x = 0; x < px.size(); ++x)
            if (px[x] > 0.0) e += px[x] * d(x, z);
        if (e < best.distortion) best = {z, e};
    }
    return best;
}

// A multiplier large enough that suboptimal reconstructions get weight below 2^-200.
inline double lossless_lambda(const DistortionMeasure& d) {
    double gap = std::numeric_limits<double>::infinity();
    const std::size_t nx = d.source_alphabet().size(), nz = d.reconstruction_alphabet().size();
    for (std::size_t x = 0; x < nx; ++x) {
        double m = std::numeric_limits<double>::infinity();
        for (std::size_t z = 0; z < nz; ++z) m = std::min(m, d(x, z));
        for (std::size_t z = 0; z < nz; ++z) {
            const double g = d(x, z) - m;
            if (g > 0.0 && std::isfinite(g)) gap = std::min(gap, g);
        }
    }
    return std::isfinite(gap) ? 200.0 / gap : 1.0;
}

}  // namespace detail

/// One Blahut-Arimoto run at multiplier `lambda` (bits per unit distortion).
inline RDSolution ba_single(std::span<const double> source, const DistortionMeasure& d, double lambda,
                            const BAOptions& opt = {}, const ChannelNames& names = {}) {
    if (!(lambda >= 0.0)) throw ValidationError("lambda must be nonnegative");
    if (!(opt.tol > 0.0)) throw ValidationError("tolerance must be positive");
    if (source.size() != d.source_alphabet().size()) throw ValidationError("source size does not match distortion");
    const std::size_t nz = d.reconstruction_alphabet().size();
    const auto cost = detail::scaled_cost(d, lambda);
    auto s = detail::blahut_arimoto_restarts(source, cost, nz, opt);
    RDSolution out;
    out.lagrange = {lambda};
    out.rate = s.rate;
    out.distortions = {detail::expected(source, s.encoder, d.costs(), nz)};
    out.encoder = Channel::validate({{names.input, d.source_alphabet()}}, {{names.output, d.reconstruction_alphabet()}},
                                    std::move(s.encoder));
    out.iterations = s.iterations;
    out.converged = s.converged;
    out.objective_history = std::move(s.history);
    return out;
}

namespace detail {

// Evaluation of one multiplier setting, kept in raw form for bisection.
struct RawPoint {
    std::vector<double> lambdas;
    std::vector<double> encoder;
    std::vector<double> distortions;
    double rate = 0.0;
    std::size_t iterations = 0;
    bool converged = true;
};

// Convex combination of two encoders evaluated exactly. On a linear piece of the
// R(D) curve both endpoints minimize the same Lagrangian, so the mixture is
// rate-optimal at its own distortion.
inline RawPoint mix(const RawPoint& a, const RawPoint& b, double theta, std::span<const double> px, std::size_t nz,
                    const std::vector<std::span<const double>>& costs) {
    RawPoint m;
    m.lambdas.resize(a.lambdas.size());
    for (std::size_t k = 0; k < a.lambdas.size(); ++k) m.lambdas[k] = theta * a.lambdas[k] + (1 - theta) * b.lambdas[k];
    m.encoder.resize(a.encoder.size());
    for (std::size_t i = 0; i < a.encoder.size(); ++i) m.encoder[i] = theta * a.encoder[i] + (1 - theta) * b.encoder[i];
    const auto q = output_marginal(px, m.encoder, nz);
    m.rate = channel_rate(px, m.encoder, q, nz);
    for (const auto& c : costs) m.distortions.push_back(expected(px, m.encoder, c, nz));
    m.iterations = a.iterations + b.iterations;
    m.converged = a.converged && b.converged;
    return m;
}

// Bisection on one multiplier so that distortion component `k` hits `target`.
// `eval(lambda)` must return a point whose component k is nonincreasing in lambda.
// `floor` is the point used when lambda -> 0 (largest distortion).
template <class Eval>
RawPoint bisect_multiplier(Eval&& eval, std::size_t k, double target, double lambda_cap, const RawPoint& floor,
                           std::span<const double> px, std::size_t nz,
                           const std::vector<std::span<const double>>& costs, const BAOptions& opt) {
    RawPoint lo = floor;  // distortion above target
    RawPoint hi;
    std::size_t spent = 0;
    double lambda = 1.0;
    for (;;) {
        hi = eval(std::min(lambda, lambda_cap));
        spent += hi.iterations;
        if (hi.distortions[k] <= target || lambda >= lambda_cap) break;
        lo = hi;
        lambda *= 2.0;
    }
    if (std::abs(hi.distortions[k] - target) <= opt.distortion_tol) {
        hi.iterations = spent;
        return hi;
    }
    double lam_lo = lo.lambdas.empty() ? 0.0 : lo.lambdas[k];
    double lam_hi = hi.lambdas[k];
    for (std::size_t step = 0; step < opt.max_bisection; ++step) {
        const double mid = 0.5 * (lam_lo + lam_hi);
        if (!(mid > lam_lo && mid < lam_hi)) break;
        auto p = eval(mid);
        spent += p.iterations;
        if (std::abs(p.distortions[k] - target) <= opt.distortion_tol) {
            p.iterations = spent;
            return p;
        }
        if (p.distortions[k] > target) {
            lo = std::move(p);
            lam_lo = mid;
        } else {
            hi = std::move(p);
            lam_hi = mid;
        }
    }
    const double span = lo.distortions[k] - hi.distortions[k];
    const double theta = span > 0.0 ? std::clamp((target - hi.distortions[k]) / span, 0.0, 1.0) : 0.0;
    auto m = mix(lo, hi, theta, px, nz, costs);
    m.iterations = spent;
    return m;
}

inline RawPoint constant_point(std::span<const double> px, std::size_t nz, std::size_t symbol,
                               const std::vector<std::span<const double>>& costs, std::size_t n_lambdas) {
    RawPoint p;
    p.lambdas.assign(n_lambdas, 0.0);
    p.encoder.assign(px.size() * nz, 0.0);
    for (std::size_t x = 0; x < px.size(); ++x) p.encoder[x * nz + symbol] = 1.0;
    for (const auto& c : costs) p.distortions.push_back(expected(px, p.encoder, c, nz));
    return p;
}

}  // namespace detail

/// Rate-distortion point at expected distortion `target_d`.
inline RDSolution ba_at_distortion(std::span<const double> source, const DistortionMeasure& d, double target_d,
                                   const BAOptions& opt = {}, const ChannelNames& names = {}) {
    if (!(target_d >= 0.0)) throw ValidationError("target distortion must be nonnegative");
    if (source.size() != d.source_alphabet().size()) throw ValidationError("source size does not match distortion");
    const std::size_t nz = d.reconstruction_alphabet().size();
    const double d_min = detail::min_achievable(source, d);
    if (target_d < d_min - opt.distortion_tol)
        throw ValidationError("target distortion " + std::to_string(target_d) + " is below the minimum achievable " +
                          std::to_string(d_min));
    const auto zr = detail::zero_rate_point(source, d);
    const std::vector<std::span<const double>> costs{d.costs()};

    detail::RawPoint pt;
    if (target_d >= zr.distortion) {
        pt = detail::constant_point(source, nz, zr.symbol, costs, 1);
    } else {
        const double cap = detail::lossless_lambda(d);
        auto eval = [&](double lambda) {
            const auto cost = detail::scaled_cost(d, lambda);
            auto s = detail::blahut_arimoto_restarts(source, cost, nz, opt);
            detail::RawPoint p;
            p.lambdas = {lambda};
            p.distortions = {detail::expected(source, s.encoder, d.costs(), nz)};
            p.rate = s.rate;
            p.encoder = std::move(s.encoder);
            p.iterations = s.iterations;
            p.converged = s.converged;
            return p;
        };
        if (target_d <= d_min + opt.distortion_tol) {
            pt = eval(cap);
        } else {
            const auto floor = detail::constant_point(source, nz, zr.symbol, costs, 1);
            pt = detail::bisect_multiplier(eval, 0, target_d, cap, floor, source, nz, costs, opt);
        }
    }
    RDSolution out;
    out.lagrange = pt.lambdas;
    out.rate = pt.rate;
    out.distortions = pt.distortions;
    out.encoder = Channel::validate({{names.input, d.source_alphabet()}}, {{names.output, d.reconstruction_alphabet()}},
                                    std::move(pt.encoder));
    out.iterations = pt.iterations;
    out.converged = pt.converged;
    return out;
}

inline RDSolution ba_at_distortion(const JointDistribution& source, const DistortionMeasure& d, double target_d,
                                   const BAOptions& opt = {}, std::string output_name = "Z") {
    if (source.variables().size() != 1) throw ValidationError("ba_at_distortion expects a single-variable source");
    return ba_at_distortion(source.pmf(), d, target_d, opt, {source.variables()[0].name, std::move(output_name)});
}

/// Joint rate-distortion function R_{X1,X2}(D1, D2) for a source over exactly two
/// variables. The encoder maps (X1, X2) to (Z1, Z2) with the reconstruction
/// alphabets of d1 and d2.
inline RDSolution ba_joint(const JointDistribution& source, const DistortionMeasure& d1, const DistortionMeasure& d2,
                           double target1, double target2, const BAOptions& opt = {},
                           const std::string& z1_name = names::z1, const std::string& z2_name = names::z2) {
    if (source.variables().size() != 2) throw ValidationError("ba_joint expects a source over two variables");
    if (!(target1 >= 0.0 && target2 >= 0.0)) throw ValidationError("target distortions must be nonnegative");
    const auto& v1 = source.variables()[0];
    const auto& v2 = source.variables()[1];
    if (!(v1.alphabet == d1.source_alphabet()) || !(v2.alphabet == d2.source_alphabet()))
        throw ValidationError("distortion source alphabets do not match the source variables");

    const std::size_t n1 = v1.alphabet.size(), n2 = v2.alphabet.size();
    const std::size_t m1 = d1.reconstruction_alphabet().size(), m2 = d2.reconstruction_alphabet().size();
    const std::size_t nx = n1 * n2, nz = m1 * m2;
    const auto px = source.pmf();

    const auto p1 = marginalize(source, {v1.name});
    const auto p2 = marginalize(source, {v2.name});
    const double dmin1 = detail::min_achievable(p1.pmf(), d1);
    const double dmin2 = detail::min_achievable(p2.pmf(), d2);
    if (target1 < dmin1 - opt.distortion_tol || target2 < dmin2 - opt.distortion_tol)
        throw ValidationError("target distortions are below the minimum achievable (" + std::to_string(dmin1) + ", " +
                          std::to_string(dmin2) + ")");
    const auto zr1 = detail::zero_rate_point(p1.pmf(), d1);
    const auto zr2 = detail::zero_rate_point(p2.pmf(), d2);

    // Lifted per-coordinate distortion matrices over (x1 x2) x (z1 z2).
    std::vector<double> c1(nx * nz), c2(nx * nz);
    for (std::size_t a = 0; a < n1; ++a)
        for (std::size_t b = 0; b < n2; ++b)
            for (std::size_t i = 0; i < m1; ++i)
                for (std::size_t j = 0; j < m2; ++j) {
                    const std::size_t x = a * n2 + b, z = i * m2 + j;
                    c1[x * nz + z] = d1(a, i);
                    c2[x * nz + z] = d2(b, j);
                }
    const std::vector<std::span<const double>> costs{c1, c2};

    // A zero multiplier leaves its coordinate free in the BA objective. Among the
    // optimal encoders, take the one whose free coordinate is the best function of
    // the other reconstruction: it costs no rate and has the least distortion.
    auto reduced = [&](std::size_t k, double lambda) {
        const std::size_t mk = k == 0 ? m1 : m2, mo = k == 0 ? m2 : m1;
        const auto& dk = k == 0 ? d1 : d2;
        const auto& dother = k == 0 ? d2 : d1;
        std::vector<double> cost(nx * mk);
        for (std::size_t a = 0; a < n1; ++a)
            for (std::size_t b = 0; b < n2; ++b)
                for (std::size_t z = 0; z < mk; ++z) {
                    const double c = dk(k == 0 ? a : b, z);
                    cost[(a * n2 + b) * mk + z] = std::isfinite(c) ? lambda * c : c;
                }
        auto s = detail::blahut_arimoto_restarts(px, cost, mk, opt);
        std::vector<std::size_t> g(mk, k == 0 ? zr2.symbol : zr1.symbol);
        for (std::size_t z = 0; z < mk; ++z) {
            double best = std::numeric_limits<double>::infinity();
            bool used = false;
            std::vector<double> acc(mo, 0.0);
            for (std::size_t a = 0; a < n1; ++a)
                for (std::size_t b = 0; b < n2; ++b) {
                    const double w = px[a * n2 + b] * s.encoder[(a * n2 + b) * mk + z];
                    if (w <= 0.0) continue;
                    used = true;
                    for (std::size_t j = 0; j < mo; ++j) acc[j] += w * dother(k == 0 ? b : a, j);
                }
            if (!used) continue;
            for (std::size_t j = 0; j < mo; ++j)
                if (acc[j] < best) best = acc[j], g[z] = j;
        }
        detail::RawPoint p;
        p.lambdas = k == 0 ? std::vector<double>{lambda, 0.0} : std::vector<double>{0.0, lambda};
        p.encoder.assign(nx * nz, 0.0);
        for (std::size_t x = 0; x < nx; ++x)
            for (std::size_t z = 0; z < mk; ++z) {
                const std::size_t zz = k == 0 ? z * m2 + g[z] : g[z] * m2 + z;
                p.encoder[x * nz + zz] = s.encoder[x * mk + z];
            }
        p.rate = s.rate;
        p.distortions = {detail::expected(px, p.encoder, c1, nz), detail::expected(px, p.encoder, c2, nz)};
        p.iterations = s.iterations;
        p.converged = s.converged;
        return p;
    };

    auto eval = [&](double l1, double l2) {
        if (l1 == 0.0 && l2 == 0.0) {
            auto p = detail::constant_point(px, nz, zr1.symbol * m2 + zr2.symbol, costs, 2);
            p.converged = true;
            return p;
        }
        if (l2 == 0.0) return reduced(0, l1);
        if (l1 == 0.0) return reduced(1, l2);
        std::vector<double> cost(nx * nz);
        for (std::size_t i = 0; i < cost.size(); ++i) {
            const double a = std::isfinite(c1[i]) ? l1 * c1[i] : c1[i];
            const double b = std::isfinite(c2[i]) ? l2 * c2[i] : c2[i];
            cost[i] = a + b;
        }
        auto s = detail::blahut_arimoto_restarts(px, cost, nz, opt);
        detail::RawPoint p;
        p.lambdas = {l1, l2};
        p.distortions = {detail::expected(px, s.encoder, c1, nz), detail::expected(px, s.encoder, c2, nz)};
        p.rate = s.rate;
        p.encoder = std::move(s.encoder);
        p.iterations = s.iterations;
        p.converged = s.converged;
        return p;
    };

    const bool slack1 = target1 >= zr1.distortion;
    const bool slack2 = target2 >= zr2.distortion;
    const double cap1 = detail::lossless_lambda(d1);
    const double cap2 = detail::lossless_lambda(d2);
    const bool lossless1 = target1 <= dmin1 + opt.distortion_tol;
    const bool lossless2 = target2 <= dmin2 + opt.distortion_tol;

    // Constant reconstruction on coordinate 2 (resp. 1) combined with a solution on the other.
    detail::RawPoint pt;
    if (slack1 && slack2) {
        pt = detail::constant_point(px, nz, zr1.symbol * m2 + zr2.symbol, costs, 2);
    } else if (slack2 || slack1) {
        const bool first = slack2;  // solve coordinate 1 when coordinate 2 is slack
        const auto& marg = first ? p1 : p2;
        const auto& dm = first ? d1 : d2;
        const double target = first ? target1 : target2;
        auto single = ba_at_distortion(marg.pmf(), dm, target, opt);
        pt.lambdas = first ? std::vector<double>{single.lagrange[0], 0.0} : std::vector<double>{0.0, single.lagrange[0]};
        pt.encoder.assign(nx * nz, 0.0);
        for (std::size_t a = 0; a < n1; ++a)
            for (std::size_t b = 0; b < n2; ++b) {
                const std::size_t x = a * n2 + b;
                if (first) {
                    for (std::size_t i = 0; i < m1; ++i) pt.encoder[x * nz + i * m2 + zr2.symbol] = single.encoder.at(a, i);
                } else {
                    for (std::size_t j = 0; j < m2; ++j) pt.encoder[x * nz + zr1.symbol * m2 + j] = single.encoder.at(b, j);
                }
            }
        const auto q = detail::output_marginal(px, pt.encoder, nz);
        pt.rate = detail::channel_rate(px, pt.encoder, q, nz);
        pt.distortions = {detail::expected(px, pt.encoder, c1, nz), detail::expected(px, pt.encoder, c2, nz)};
        pt.iterations = single.iterations;
        pt.converged = single.converged;
    } else {
        // Inner problem: for fixed lambda1, choose lambda2 so D2 hits its target
        // (or lambda2 = 0 when the constraint is slack at the rate optimum).
        auto inner = [&](double l1) {
            if (lossless2) return eval(l1, cap2);
            auto free2 = eval(l1, 0.0);
            if (free2.distortions[1] <= target2 + opt.distortion_tol) return free2;
            auto e2 = [&](double l2) { return eval(l1, l2); };
            return detail::bisect_multiplier(e2, 1, target2, cap2, free2, px, nz, costs, opt);
        };
        if (lossless1) {
            pt = inner(cap1);
        } else {
            auto free1 = inner(0.0);
            if (free1.distortions[0] <= target1 + opt.distortion_tol) {
                pt = std::move(free1);
            } else {
                pt = detail::bisect_multiplier(inner, 0, target1, cap1, free1, px, nz, costs, opt);
            }
        }
    }

    RDSolution out;
    out.lagrange = pt.lambdas;
    out.rate = pt.rate;
    out.distortions = pt.distortions;
    out.encoder = Channel::validate(
        {v1, v2}, {{z1_name, d1.reconstruction_alphabet()}, {z2_name, d2.reconstruction_alphabet()}},
        std::move(pt.encoder));
    out.iterations = pt.iterations;
    out.converged = pt.converged;
    return out;
}

}  // namespace lossyci
