#pragma once

// QUBO container, degree reduction of cubic/quartic binary polynomials via
// the pairwise auxiliary gadget z = x_i x_j with penalty
// P(x_i, x_j; z) = x_i x_j - 2(x_i + x_j) z + 3z, and the plain-text
// triplet export/import used by the CLI.

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "aqflow/binary_poly.hpp"

namespace aqflow {

struct QuboProblem {
    RegistryPtr registry;
    // Upper-triangle storage keyed by packed (i <= j); the value is the full
    // coefficient of x_i x_j (diagonal carries linear coefficients).
    std::unordered_map<uint64_t, double> coeffs;
    double offset = 0.0;

    uint32_t size() const { return registry ? registry->size() : 0; }

    static uint64_t key(uint32_t i, uint32_t j) {
        if (i > j) std::swap(i, j);
        return (uint64_t(i) << 32) | j;
    }
    void add(uint32_t i, uint32_t j, double c) {
        if (c == 0.0) return;
        auto [it, fresh] = coeffs.try_emplace(key(i, j), c);
        if (!fresh) it->second += c;
    }
    // Entry of the symmetric matrix form (off-diagonal coefficients split).
    double q(uint32_t i, uint32_t j) const {
        auto it = coeffs.find(key(i, j));
        if (it == coeffs.end()) return 0.0;
        return i == j ? it->second : it->second / 2.0;
    }

    double evaluate(const std::vector<uint8_t>& bits) const {
        if (bits.size() != size()) throw PolyError("qubo evaluate: dimension mismatch");
        double e = offset;
        for (const auto& [k, c] : coeffs) {
            const uint32_t i = static_cast<uint32_t>(k >> 32), j = static_cast<uint32_t>(k);
            if (bits[i] && bits[j]) e += c;
        }
        return e;
    }

    BinaryPolynomial as_polynomial() const {
        BinaryPolynomial p(registry);
        p.add_constant(offset);
        for (const auto& [k, c] : coeffs) {
            const uint32_t i = static_cast<uint32_t>(k >> 32), j = static_cast<uint32_t>(k);
            if (i == j)
                p.add_term({i}, c);
            else
                p.add_term({i, j}, c);
        }
        return p;
    }
};

// Reduces a degree <= 4 polynomial to a QUBO. Auxiliary variables are
// appended to the polynomial's registry: a quartic term pairs its two
// lowest-indexed and two highest-indexed variables; auxiliaries are reused
// across terms sharing a pair. The gadget penalty is added once per term
// occurrence, so lambda_quad must dominate the largest absolute coefficient
// it guards.
inline QuboProblem quadratize(const BinaryPolynomial& poly, double lambda_quad = 0.0) {
    if (poly.degree() > 4) throw PolyError("quadratize: degree > 4 input");

    double guard = 0.0;  // largest |coefficient| among higher-order terms
    std::array<uint16_t, 4> v{};
    for (const auto& [key, c] : poly.terms())
        if (monomial::degree(key) >= 3) guard = std::max(guard, std::abs(c));
    if (lambda_quad <= 0.0) lambda_quad = 2.0 * guard;
    if (guard > 0.0 && lambda_quad <= guard)
        throw PolyError("quadratize: lambda_quad does not dominate the guarded coefficients");

    QuboProblem qubo;
    qubo.registry = poly.registry();

    std::unordered_map<uint64_t, uint32_t> aux_for_pair;
    auto aux = [&](uint32_t i, uint32_t j) -> uint32_t {
        const uint64_t k = QuboProblem::key(i, j);
        auto it = aux_for_pair.find(k);
        if (it != aux_for_pair.end()) return it->second;
        const uint32_t z =
            qubo.registry->intern({VarTag::Aux, static_cast<int32_t>(std::min(i, j)),
                                   static_cast<int32_t>(std::max(i, j))});
        aux_for_pair.emplace(k, z);
        return z;
    };
    auto add_penalty = [&](uint32_t i, uint32_t j, uint32_t z) {
        qubo.add(i, j, lambda_quad);
        qubo.add(i, z, -2.0 * lambda_quad);
        qubo.add(j, z, -2.0 * lambda_quad);
        qubo.add(z, z, 3.0 * lambda_quad);
    };

    for (const auto& [key, c] : poly.terms()) {
        const int n = monomial::unpack(key, v);
        switch (n) {
            case 0:
                qubo.offset += c;
                break;
            case 1:
                qubo.add(v[0], v[0], c);
                break;
            case 2:
                qubo.add(v[0], v[1], c);
                break;
            case 3: {
                const uint32_t z = aux(v[0], v[1]);
                qubo.add(z, v[2], c);
                add_penalty(v[0], v[1], z);
                break;
            }
            case 4: {
                const uint32_t z1 = aux(v[0], v[1]);
                const uint32_t z2 = aux(v[2], v[3]);
                qubo.add(z1, z2, c);
                add_penalty(v[0], v[1], z1);
                add_penalty(v[2], v[3], z2);
                break;
            }
        }
    }
    return qubo;
}

namespace detail {
inline std::string fmt_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}
}  // namespace detail

// Triplet export: `i j coeff` over the upper triangle (0-based registry
// indices, full coefficients, diagonal = linear); the offset rides along as
// a comment line. Round-trips bit-exactly.
inline void write_qubo(std::ostream& out, const QuboProblem& qubo) {
    out << "# offset " << detail::fmt_double(qubo.offset) << "\n";
    std::vector<uint64_t> keys;
    keys.reserve(qubo.coeffs.size());
    for (const auto& [k, c] : qubo.coeffs) keys.push_back(k);
    std::sort(keys.begin(), keys.end());
    for (uint64_t k : keys) {
        out << (k >> 32) << ' ' << static_cast<uint32_t>(k) << ' '
            << detail::fmt_double(qubo.coeffs.at(k)) << "\n";
    }
}

inline void write_registry(std::ostream& out, const VarRegistry& reg) {
    for (uint32_t i = 0; i < reg.size(); ++i) out << i << ' ' << reg.var(i).str() << "\n";
}

inline QuboProblem read_qubo(std::istream& triplets, std::istream& registry) {
    QuboProblem qubo;
    qubo.registry = std::make_shared<VarRegistry>();
    std::string line;
    while (std::getline(registry, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        uint32_t idx;
        ss >> idx;
        std::string rest;
        std::getline(ss, rest);
        if (!rest.empty() && rest.front() == ' ') rest.erase(0, 1);
        const uint32_t got = qubo.registry->intern(VarId::parse(rest));
        if (got != idx) throw PolyError("registry sidecar: indices out of order");
    }
    while (std::getline(triplets, line)) {
        if (line.empty()) continue;
        if (line.rfind("# offset ", 0) == 0) {
            qubo.offset = std::strtod(line.c_str() + 9, nullptr);
            continue;
        }
        if (line.front() == '#') continue;
        std::istringstream ss(line);
        uint32_t i, j;
        double c;
        if (!(ss >> i >> j >> c)) throw PolyError("triplet file: bad line: " + line);
        qubo.add(i, j, c);
    }
    return qubo;
}

}  // namespace aqflow
