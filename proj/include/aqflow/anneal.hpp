#pragma once

// Annealer stand-ins: Metropolis single-bit-flip simulated annealing with a
// geometric temperature schedule (one independent chain per readout, chain i
// seeded with seed + i), plus an exhaustive enumerator for exactness tests.
// The sa-hobo engine flips bits against higher-order objectives directly;
// sa-qubo requires prior quadratization.

#include <cmath>
#include <cstring>
#include <functional>
#include <random>

#include "aqflow/qubo.hpp"

namespace aqflow {

class AnnealError : public std::runtime_error {
public:
    explicit AnnealError(const std::string& msg) : std::runtime_error(msg) {}
};

struct AnnealParams {
    int readouts = 5000;
    int sweeps_per_readout = 0;  // 0 => 10 * n
    double t_start = 0.0;        // 0 => max |coefficient|
    double t_end = 0.0;          // 0 => 1e-3 * t_start
    uint64_t seed = 0;
    // Optional warm start: the first chain begins here (padded with zeros)
    // instead of at a random state, so the returned best is never worse
    // than this state's energy.
    std::vector<uint8_t> init_bits;
};

struct Sample {
    std::vector<uint8_t> bits;
    double energy = 0.0;
    uint64_t count = 1;
};

struct ReadoutSet {
    std::vector<Sample> samples;  // ascending energy; ties lex-smallest first
    std::string problem_digest;
};

inline const Sample& best_sample(const ReadoutSet& rs) {
    if (rs.samples.empty()) throw AnnealError("best_sample: empty readout set");
    return rs.samples.front();
}

namespace sa_detail {

using Evaluator = std::function<double(const std::vector<uint8_t>&)>;

struct BitsHash {
    size_t operator()(const std::vector<uint8_t>& b) const {
        size_t h = 1469598103934665603ull;
        for (uint8_t x : b) h = (h ^ x) * 1099511628211ull;
        return h;
    }
};

// Aggregates raw chain results into a sorted, multiplicity-folded set.
// Energies are recomputed through the canonical evaluator so every reported
// energy re-evaluates exactly.
inline ReadoutSet collect(std::vector<std::vector<uint8_t>>&& results, const Evaluator& eval,
                          std::string digest) {
    std::unordered_map<std::vector<uint8_t>, uint64_t, BitsHash> mult;
    for (auto& bits : results) ++mult[std::move(bits)];
    ReadoutSet rs;
    rs.problem_digest = std::move(digest);
    rs.samples.reserve(mult.size());
    for (auto& [bits, count] : mult) {
        Sample s;
        s.energy = eval(bits);
        s.bits = bits;
        s.count = count;
        rs.samples.push_back(std::move(s));
    }
    std::sort(rs.samples.begin(), rs.samples.end(), [](const Sample& a, const Sample& b) {
        if (a.energy != b.energy) return a.energy < b.energy;
        return a.bits < b.bits;
    });
    return rs;
}

inline std::string digest_of(uint64_t h) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline uint64_t mix(uint64_t h, uint64_t x) {
    h ^= x + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    return h;
}

struct Schedule {
    double t0 = 1.0, t1 = 1e-3;
    int sweeps = 1;
    double at(int sweep) const {
        if (sweeps <= 1) return t1;
        return t0 * std::pow(t1 / t0, double(sweep) / double(sweeps - 1));
    }
};

inline Schedule make_schedule(const AnnealParams& p, int n, double max_coeff) {
    if (p.readouts < 1) throw AnnealError("anneal: readouts must be >= 1");
    Schedule s;
    s.t0 = p.t_start > 0.0 ? p.t_start : std::max(max_coeff, 1e-12);
    s.t1 = p.t_end > 0.0 ? p.t_end : 1e-3 * s.t0;
    if (!(s.t0 > s.t1) || !(s.t1 > 0.0)) throw AnnealError("anneal: invalid temperature schedule");
    s.sweeps = p.sweeps_per_readout > 0 ? p.sweeps_per_readout : 10 * std::max(n, 1);
    return s;
}

// Runs independent chains; delta(v) yields the energy change of flipping
// bit v in the current state, apply(v) commits it. Returns best-seen bits
// per chain.
template <typename DeltaFn, typename ApplyFn, typename ResetFn>
std::vector<std::vector<uint8_t>> run_chains(int n, const AnnealParams& params,
                                             const Schedule& sched, std::vector<uint8_t>& bits,
                                             ResetFn&& reset, DeltaFn&& delta, ApplyFn&& apply) {
    std::vector<std::vector<uint8_t>> results;
    results.reserve(static_cast<size_t>(params.readouts));
    for (int chain = 0; chain < params.readouts; ++chain) {
        std::mt19937_64 rng(params.seed + static_cast<uint64_t>(chain));
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        if (chain == 0 && !params.init_bits.empty()) {
            for (int v = 0; v < n; ++v)
                bits[static_cast<size_t>(v)] =
                    v < static_cast<int>(params.init_bits.size()) &&
                            params.init_bits[static_cast<size_t>(v)]
                        ? 1u
                        : 0u;
        } else {
            for (int v = 0; v < n; ++v) bits[static_cast<size_t>(v)] = (rng() >> 40) & 1u;
        }
        reset();
        double e = 0.0;  // relative running energy
        double best_e = 0.0;
        std::vector<uint8_t> best_bits = bits;
        for (int sweep = 0; sweep < sched.sweeps; ++sweep) {
            const double t = sched.at(sweep);
            for (int v = 0; v < n; ++v) {
                const double de = delta(v);
                if (de <= 0.0 || unit(rng) < std::exp(-de / t)) {
                    apply(v);
                    bits[static_cast<size_t>(v)] ^= 1u;
                    e += de;
                    if (e < best_e) {
                        best_e = e;
                        best_bits = bits;
                    }
                }
            }
        }
        results.push_back(std::move(best_bits));
    }
    return results;
}

}  // namespace sa_detail

// ---------------------------------------------------------------------------
// sa-qubo: quadratic problems with O(1) flip evaluation via cached fields.
// ---------------------------------------------------------------------------
inline ReadoutSet solve(const QuboProblem& qubo, const AnnealParams& params) {
    const int n = static_cast<int>(qubo.size());
    if (n == 0) throw AnnealError("anneal: empty problem");

    // CSR adjacency with full pair coefficients; diag[] holds linear terms.
    std::vector<double> diag(static_cast<size_t>(n), 0.0);
    std::vector<std::vector<std::pair<uint32_t, double>>> adj(static_cast<size_t>(n));
    double max_coeff = 0.0;
    uint64_t h = 0xcbf29ce484222325ull;
    {
        std::vector<uint64_t> keys;
        keys.reserve(qubo.coeffs.size());
        for (const auto& [k, c] : qubo.coeffs) keys.push_back(k);
        std::sort(keys.begin(), keys.end());
        for (uint64_t k : keys) {
            const double c = qubo.coeffs.at(k);
            const uint32_t i = static_cast<uint32_t>(k >> 32), j = static_cast<uint32_t>(k);
            if (i == j) {
                diag[i] += c;
            } else {
                adj[i].emplace_back(j, c);
                adj[j].emplace_back(i, c);
            }
            max_coeff = std::max(max_coeff, std::abs(c));
            uint64_t cb;
            std::memcpy(&cb, &c, sizeof cb);
            h = sa_detail::mix(sa_detail::mix(h, k), cb);
        }
    }
    const auto sched = sa_detail::make_schedule(params, n, max_coeff);

    std::vector<uint8_t> bits(static_cast<size_t>(n), 0);
    std::vector<double> field(static_cast<size_t>(n), 0.0);  // dE of turning v on
    auto reset = [&] {
        for (int v = 0; v < n; ++v) {
            double f = diag[static_cast<size_t>(v)];
            for (const auto& [u, c] : adj[static_cast<size_t>(v)])
                if (bits[u]) f += c;
            field[static_cast<size_t>(v)] = f;
        }
    };
    auto delta = [&](int v) {
        return bits[static_cast<size_t>(v)] ? -field[static_cast<size_t>(v)]
                                            : field[static_cast<size_t>(v)];
    };
    auto apply = [&](int v) {
        const double sign = bits[static_cast<size_t>(v)] ? -1.0 : 1.0;
        for (const auto& [u, c] : adj[static_cast<size_t>(v)]) field[u] += sign * c;
    };

    auto results = sa_detail::run_chains(n, params, sched, bits, reset, delta, apply);
    return sa_detail::collect(
        std::move(results), [&](const std::vector<uint8_t>& b) { return qubo.evaluate(b); },
        sa_detail::digest_of(h));
}

// ---------------------------------------------------------------------------
// sa-hobo on a generic multilinear polynomial: per-term zero counts keep the
// flip evaluation at O(incident terms).
// ---------------------------------------------------------------------------
inline ReadoutSet solve(const BinaryPolynomial& poly, const AnnealParams& params) {
    const int n = static_cast<int>(poly.registry()->size());
    if (n == 0) throw AnnealError("anneal: empty problem");

    struct Term {
        double c;
        std::array<uint16_t, 4> v;
        int nv;
    };
    std::vector<Term> terms;
    std::vector<std::vector<uint32_t>> incident(static_cast<size_t>(n));
    double max_coeff = 0.0;
    uint64_t h = 0xcbf29ce484222325ull;
    {
        std::vector<uint64_t> keys;
        for (const auto& [k, c] : poly.terms()) keys.push_back(k);
        std::sort(keys.begin(), keys.end());
        for (uint64_t k : keys) {
            const double c = poly.terms().at(k);
            uint64_t cb;
            std::memcpy(&cb, &c, sizeof cb);
            h = sa_detail::mix(sa_detail::mix(h, k), cb);
            if (k == monomial::kConst) continue;
            Term t;
            t.c = c;
            t.nv = monomial::unpack(k, t.v);
            const uint32_t tid = static_cast<uint32_t>(terms.size());
            for (int i = 0; i < t.nv; ++i) incident[t.v[static_cast<size_t>(i)]].push_back(tid);
            terms.push_back(t);
            max_coeff = std::max(max_coeff, std::abs(c));
        }
    }
    const auto sched = sa_detail::make_schedule(params, n, max_coeff);

    std::vector<uint8_t> bits(static_cast<size_t>(n), 0);
    std::vector<uint16_t> zeros(terms.size(), 0);
    auto reset = [&] {
        for (size_t t = 0; t < terms.size(); ++t) {
            uint16_t z = 0;
            for (int i = 0; i < terms[t].nv; ++i)
                if (!bits[terms[t].v[static_cast<size_t>(i)]]) ++z;
            zeros[t] = z;
        }
    };
    auto delta = [&](int v) {
        // Energy change of flipping v: terms whose other variables are all 1.
        const uint16_t self_zero = bits[static_cast<size_t>(v)] ? 0u : 1u;
        double g = 0.0;
        for (uint32_t t : incident[static_cast<size_t>(v)])
            if (zeros[t] == self_zero) g += terms[t].c;
        return bits[static_cast<size_t>(v)] ? -g : g;
    };
    auto apply = [&](int v) {
        const int dz = bits[static_cast<size_t>(v)] ? 1 : -1;  // flipping changes zero count
        for (uint32_t t : incident[static_cast<size_t>(v)])
            zeros[t] = static_cast<uint16_t>(static_cast<int>(zeros[t]) + dz);
    };

    auto results = sa_detail::run_chains(n, params, sched, bits, reset, delta, apply);
    return sa_detail::collect(
        std::move(results), [&](const std::vector<uint8_t>& b) { return poly.evaluate(b); },
        sa_detail::digest_of(h));
}

// ---------------------------------------------------------------------------
// sa-hobo on a sum-of-squared-quadratics Hamiltonian: cached residual values
// give O(equations touching v) flip evaluation. Reported energies are
// recomputed through the flattened polynomial.
// ---------------------------------------------------------------------------
inline ReadoutSet solve(const SquaredForm& form, const AnnealParams& params) {
    const int n = static_cast<int>(form.registry->size());
    if (n == 0 || form.equations.empty()) throw AnnealError("anneal: empty problem");

    const int ne = static_cast<int>(form.equations.size());
    struct VarEq {
        uint32_t eq;
        double l;  // linear coefficient of v in the residual
        std::vector<std::pair<uint32_t, double>> nbrs;
    };
    std::vector<std::vector<VarEq>> vareqs(static_cast<size_t>(n));
    std::vector<double> weight(static_cast<size_t>(ne)), base(static_cast<size_t>(ne));
    for (int e = 0; e < ne; ++e) {
        const auto& eq = form.equations[static_cast<size_t>(e)];
        weight[static_cast<size_t>(e)] = eq.weight;
        base[static_cast<size_t>(e)] = eq.residual.c;
        std::unordered_map<uint32_t, size_t> slot;
        auto at = [&](uint32_t v) -> VarEq& {
            auto it = slot.find(v);
            if (it == slot.end()) {
                slot.emplace(v, vareqs[v].size());
                vareqs[v].push_back({static_cast<uint32_t>(e), 0.0, {}});
                return vareqs[v].back();
            }
            return vareqs[v][it->second];
        };
        for (const auto& [v, w] : eq.residual.lin) at(v).l += w;
        for (const auto& [k, w] : eq.residual.quad) {
            const uint32_t i = static_cast<uint32_t>(k >> 32), j = static_cast<uint32_t>(k);
            at(i).nbrs.emplace_back(j, w);
            at(j).nbrs.emplace_back(i, w);
        }
    }

    const BinaryPolynomial flat = form.flatten();
    const auto sched = sa_detail::make_schedule(params, n, flat.max_abs_coefficient());

    uint64_t h = 0xcbf29ce484222325ull;
    {
        std::vector<uint64_t> keys;
        for (const auto& [k, c] : flat.terms()) keys.push_back(k);
        std::sort(keys.begin(), keys.end());
        for (uint64_t k : keys) {
            uint64_t cb;
            const double c = flat.terms().at(k);
            std::memcpy(&cb, &c, sizeof cb);
            h = sa_detail::mix(sa_detail::mix(h, k), cb);
        }
    }

    std::vector<uint8_t> bits(static_cast<size_t>(n), 0);
    std::vector<double> resid(static_cast<size_t>(ne), 0.0);
    std::vector<double> scratch;  // per-equation deltas of the pending flip
    auto reset = [&] {
        for (int e = 0; e < ne; ++e)
            resid[static_cast<size_t>(e)] =
                form.equations[static_cast<size_t>(e)].residual.evaluate(bits);
    };
    auto delta = [&](int v) {
        const double sign = bits[static_cast<size_t>(v)] ? -1.0 : 1.0;
        auto& eqs = vareqs[static_cast<size_t>(v)];
        scratch.assign(eqs.size(), 0.0);
        double de = 0.0;
        for (size_t i = 0; i < eqs.size(); ++i) {
            const VarEq& ve = eqs[i];
            double d = ve.l;
            for (const auto& [u, q] : ve.nbrs)
                if (bits[u]) d += q;
            d *= sign;
            scratch[i] = d;
            de += weight[ve.eq] * d * (2.0 * resid[ve.eq] + d);
        }
        return de;
    };
    auto apply = [&](int v) {
        auto& eqs = vareqs[static_cast<size_t>(v)];
        for (size_t i = 0; i < eqs.size(); ++i) resid[eqs[i].eq] += scratch[i];
    };

    auto results = sa_detail::run_chains(n, params, sched, bits, reset, delta, apply);
    return sa_detail::collect(
        std::move(results), [&](const std::vector<uint8_t>& b) { return flat.evaluate(b); },
        sa_detail::digest_of(h));
}

enum class Capability { QuadraticOnly, HigherOrder };

inline ReadoutSet solve(const BinaryPolynomial& poly, const AnnealParams& params,
                        Capability cap) {
    if (cap == Capability::QuadraticOnly && poly.degree() > 2)
        throw AnnealError("quadratic-only backend requires a quadratized problem");
    return solve(poly, params);
}

// ---------------------------------------------------------------------------
// Exhaustive enumeration, truncated to the keep lowest-energy states.
// ---------------------------------------------------------------------------
namespace sa_detail {

template <typename EvalFn>
ReadoutSet exhaustive_impl(int n, int max_vars, int keep, EvalFn&& eval) {
    if (n > max_vars) throw AnnealError("exhaustive_solve: too many variables");
    ReadoutSet rs;
    rs.problem_digest = "exhaustive";
    std::vector<uint8_t> bits(static_cast<size_t>(n), 0);
    std::vector<Sample> best;
    auto worse = [](const Sample& a, const Sample& b) {
        if (a.energy != b.energy) return a.energy < b.energy;
        return a.bits < b.bits;
    };
    const uint64_t total = uint64_t{1} << n;
    for (uint64_t m = 0; m < total; ++m) {
        for (int v = 0; v < n; ++v) bits[static_cast<size_t>(v)] = (m >> v) & 1u;
        Sample s;
        s.energy = eval(bits);
        s.bits = bits;
        best.push_back(std::move(s));
        if (best.size() > static_cast<size_t>(2 * keep)) {
            std::sort(best.begin(), best.end(), worse);
            best.resize(static_cast<size_t>(keep));
        }
    }
    std::sort(best.begin(), best.end(), worse);
    if (best.size() > static_cast<size_t>(keep)) best.resize(static_cast<size_t>(keep));
    rs.samples = std::move(best);
    return rs;
}

}  // namespace sa_detail

inline ReadoutSet exhaustive_solve(const BinaryPolynomial& poly, int max_vars = 25,
                                   int keep = 32) {
    const int n = static_cast<int>(poly.registry()->size());
    return sa_detail::exhaustive_impl(n, max_vars, keep,
                                      [&](const std::vector<uint8_t>& b) { return poly.evaluate(b); });
}

inline ReadoutSet exhaustive_solve(const QuboProblem& qubo, int max_vars = 25, int keep = 32) {
    const int n = static_cast<int>(qubo.size());
    return sa_detail::exhaustive_impl(n, max_vars, keep,
                                      [&](const std::vector<uint8_t>& b) { return qubo.evaluate(b); });
}

inline void write_readouts_csv(std::ostream& out, const ReadoutSet& rs) {
    out << "bitstring,energy,count\n";
    for (const Sample& s : rs.samples) {
        for (uint8_t b : s.bits) out << (b ? '1' : '0');
        out << ',' << detail::fmt_double(s.energy) << ',' << s.count << "\n";
    }
}

}  // namespace aqflow
