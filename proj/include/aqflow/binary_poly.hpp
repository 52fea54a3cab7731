#pragma once

// Multilinear polynomials over binary variables (degree <= 4 before
// quadratization), the variable registry shared by a problem instance,
// and a sum-of-squared-quadratics form that the Hamiltonian builders
// emit. Idempotence x^2 = x is applied on every product.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

namespace aqflow {

class PolyError : public std::runtime_error {
public:
    explicit PolyError(const std::string& msg) : std::runtime_error(msg) {}
};

enum class VarTag : uint8_t {
    MuUp,      // x^mu_{i,0}: raise Re V at bus a
    MuDown,    // x^mu_{i,1}: lower Re V at bus a
    OmegaUp,   // x^omega_{i,0}
    OmegaDown, // x^omega_{i,1}
    PgBit,     // bit b of active dispatch at bus a
    QgBit,     // bit b of reactive dispatch at bus a
    Slack,     // bit b of the slack expansion of inequality constraint a
    Aux,       // auxiliary z for the variable pair (a, b) (registry indices)
};

struct VarId {
    VarTag tag = VarTag::MuUp;
    int32_t a = 0;  // bus index / constraint id / first pair index
    int32_t b = 0;  // bit position / second pair index

    friend bool operator==(const VarId&, const VarId&) = default;
    friend auto operator<=>(const VarId&, const VarId&) = default;

    std::string str() const {
        switch (tag) {
            case VarTag::MuUp: return "mu+ " + std::to_string(a);
            case VarTag::MuDown: return "mu- " + std::to_string(a);
            case VarTag::OmegaUp: return "om+ " + std::to_string(a);
            case VarTag::OmegaDown: return "om- " + std::to_string(a);
            case VarTag::PgBit: return "pg " + std::to_string(a) + " " + std::to_string(b);
            case VarTag::QgBit: return "qg " + std::to_string(a) + " " + std::to_string(b);
            case VarTag::Slack: return "sl " + std::to_string(a) + " " + std::to_string(b);
            case VarTag::Aux: return "aux " + std::to_string(a) + " " + std::to_string(b);
        }
        return "?";
    }

    static VarId parse(const std::string& s) {
        const auto sp = s.find(' ');
        if (sp == std::string::npos) throw PolyError("bad variable tag: " + s);
        const std::string head = s.substr(0, sp);
        int32_t a = 0, b = 0;
        const std::string rest = s.substr(sp + 1);
        const auto sp2 = rest.find(' ');
        if (sp2 == std::string::npos) {
            a = std::stoi(rest);
        } else {
            a = std::stoi(rest.substr(0, sp2));
            b = std::stoi(rest.substr(sp2 + 1));
        }
        if (head == "mu+") return {VarTag::MuUp, a, 0};
        if (head == "mu-") return {VarTag::MuDown, a, 0};
        if (head == "om+") return {VarTag::OmegaUp, a, 0};
        if (head == "om-") return {VarTag::OmegaDown, a, 0};
        if (head == "pg") return {VarTag::PgBit, a, b};
        if (head == "qg") return {VarTag::QgBit, a, b};
        if (head == "sl") return {VarTag::Slack, a, b};
        if (head == "aux") return {VarTag::Aux, a, b};
        throw PolyError("bad variable tag: " + s);
    }
};

// Interns VarIds to dense indices; one registry per problem instance.
class VarRegistry {
public:
    uint32_t intern(const VarId& id) {
        auto it = index_.find(id);
        if (it != index_.end()) return it->second;
        const uint32_t idx = static_cast<uint32_t>(vars_.size());
        if (idx >= 0xFFFFu) throw PolyError("variable registry full");
        vars_.push_back(id);
        index_.emplace(id, idx);
        return idx;
    }
    const VarId& var(uint32_t idx) const { return vars_.at(idx); }
    uint32_t size() const { return static_cast<uint32_t>(vars_.size()); }
    const std::vector<VarId>& vars() const { return vars_; }

private:
    struct Less {
        bool operator()(const VarId& x, const VarId& y) const {
            return std::tie(x.tag, x.a, x.b) < std::tie(y.tag, y.a, y.b);
        }
    };
    std::vector<VarId> vars_;
    std::map<VarId, uint32_t, Less> index_;
};

using RegistryPtr = std::shared_ptr<VarRegistry>;

namespace monomial {

// A monomial is up to 4 distinct sorted variable indices packed into a
// uint64, 16 bits each, empty slots filled with 0xFFFF. The constant
// monomial is all ones.
inline constexpr uint64_t kConst = ~uint64_t{0};

inline uint64_t pack(std::array<uint16_t, 4> v, int n) {
    for (int i = n; i < 4; ++i) v[static_cast<size_t>(i)] = 0xFFFFu;
    return uint64_t(v[0]) | (uint64_t(v[1]) << 16) | (uint64_t(v[2]) << 32) |
           (uint64_t(v[3]) << 48);
}

inline int unpack(uint64_t key, std::array<uint16_t, 4>& v) {
    int n = 0;
    for (int i = 0; i < 4; ++i) {
        const uint16_t x = static_cast<uint16_t>(key >> (16 * i));
        if (x == 0xFFFFu) break;
        v[static_cast<size_t>(n++)] = x;
    }
    return n;
}

inline uint64_t from_vars(std::vector<uint32_t> idx) {
    std::sort(idx.begin(), idx.end());
    idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
    if (idx.size() > 4) throw PolyError("monomial degree exceeds 4");
    std::array<uint16_t, 4> v{};
    for (size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] >= 0xFFFFu) throw PolyError("variable index out of range");
        v[i] = static_cast<uint16_t>(idx[i]);
    }
    return pack(v, static_cast<int>(idx.size()));
}

// Product of two monomials with idempotence; throws past degree 4.
inline uint64_t multiply(uint64_t x, uint64_t y) {
    std::array<uint16_t, 4> a{}, b{}, out{};
    const int na = unpack(x, a), nb = unpack(y, b);
    int i = 0, j = 0, n = 0;
    while (i < na || j < nb) {
        uint16_t next;
        if (j >= nb || (i < na && a[static_cast<size_t>(i)] <= b[static_cast<size_t>(j)])) {
            next = a[static_cast<size_t>(i)];
            if (j < nb && b[static_cast<size_t>(j)] == next) ++j;
            ++i;
        } else {
            next = b[static_cast<size_t>(j)];
            ++j;
        }
        if (n == 4) throw PolyError("monomial degree exceeds 4");
        out[static_cast<size_t>(n++)] = next;
    }
    return pack(out, n);
}

inline int degree(uint64_t key) {
    std::array<uint16_t, 4> v{};
    return unpack(key, v);
}

}  // namespace monomial

class BinaryPolynomial {
public:
    BinaryPolynomial() : registry_(std::make_shared<VarRegistry>()) {}
    explicit BinaryPolynomial(RegistryPtr reg) : registry_(std::move(reg)) {}

    const RegistryPtr& registry() const { return registry_; }
    const std::unordered_map<uint64_t, double>& terms() const { return terms_; }
    bool empty() const { return terms_.empty(); }

    void add(uint64_t key, double coeff) {
        if (coeff == 0.0) return;
        auto [it, fresh] = terms_.try_emplace(key, coeff);
        if (!fresh) {
            it->second += coeff;
            if (it->second == 0.0) terms_.erase(it);
        }
    }
    void add_term(const std::vector<uint32_t>& vars, double coeff) {
        add(monomial::from_vars(vars), coeff);
    }
    void add_constant(double c) { add(monomial::kConst, c); }

    double constant() const {
        auto it = terms_.find(monomial::kConst);
        return it == terms_.end() ? 0.0 : it->second;
    }

    int degree() const {
        int d = 0;
        for (const auto& [key, c] : terms_) d = std::max(d, monomial::degree(key));
        return d;
    }

    double max_abs_coefficient() const {
        double m = 0.0;
        for (const auto& [key, c] : terms_)
            if (key != monomial::kConst) m = std::max(m, std::abs(c));
        return m;
    }

    BinaryPolynomial& operator+=(const BinaryPolynomial& other) {
        if (other.registry_ != registry_ && !other.terms_.empty() && !terms_.empty() &&
            other.registry_->size() != 0 && registry_->size() != 0 && other.registry_.get() != registry_.get())
            throw PolyError("combine: polynomials use different registries");
        if (terms_.empty() && registry_->size() == 0) registry_ = other.registry_;
        for (const auto& [key, c] : other.terms_) add(key, c);
        return *this;
    }

    double evaluate(const std::vector<uint8_t>& bits) const {
        double e = 0.0;
        std::array<uint16_t, 4> v{};
        for (const auto& [key, c] : terms_) {
            const int n = monomial::unpack(key, v);
            bool on = true;
            for (int i = 0; i < n; ++i) {
                if (v[static_cast<size_t>(i)] >= bits.size() || !bits[v[static_cast<size_t>(i)]]) {
                    on = false;
                    break;
                }
            }
            if (on) e += c;
        }
        return e;
    }

private:
    RegistryPtr registry_;
    std::unordered_map<uint64_t, double> terms_;
};

inline BinaryPolynomial combine(const BinaryPolynomial& h_obj, const BinaryPolynomial& h_const,
                                const BinaryPolynomial& h_cost) {
    BinaryPolynomial h = h_obj;
    h += h_const;
    h += h_cost;
    return h;
}

// Affine expression over binary variables.
struct LinExpr {
    double c = 0.0;
    std::unordered_map<uint32_t, double> lin;

    void add(uint32_t v, double coeff) {
        if (coeff == 0.0) return;
        auto [it, fresh] = lin.try_emplace(v, coeff);
        if (!fresh) it->second += coeff;
    }
    LinExpr& operator+=(const LinExpr& o) {
        c += o.c;
        for (const auto& [v, w] : o.lin) add(v, w);
        return *this;
    }
    LinExpr& operator*=(double s) {
        c *= s;
        for (auto& [v, w] : lin) w *= s;
        return *this;
    }
    double evaluate(const std::vector<uint8_t>& bits) const {
        double e = c;
        for (const auto& [v, w] : lin)
            if (v < bits.size() && bits[v]) e += w;
        return e;
    }
};

// Quadratic expression over binary variables, idempotence applied.
struct QuadraticExpr {
    double c = 0.0;
    std::unordered_map<uint32_t, double> lin;
    std::unordered_map<uint64_t, double> quad;  // packed pair, i < j

    static uint64_t pair_key(uint32_t i, uint32_t j) {
        if (i > j) std::swap(i, j);
        return (uint64_t(i) << 32) | j;
    }

    void add_lin(uint32_t v, double coeff) {
        if (coeff == 0.0) return;
        auto [it, fresh] = lin.try_emplace(v, coeff);
        if (!fresh) it->second += coeff;
    }
    void add_quad(uint32_t i, uint32_t j, double coeff) {
        if (coeff == 0.0) return;
        if (i == j) {  // x^2 = x
            add_lin(i, coeff);
            return;
        }
        auto [it, fresh] = quad.try_emplace(pair_key(i, j), coeff);
        if (!fresh) it->second += coeff;
    }
    QuadraticExpr& operator+=(const QuadraticExpr& o) {
        c += o.c;
        for (const auto& [v, w] : o.lin) add_lin(v, w);
        for (const auto& [k, w] : o.quad)
            add_quad(static_cast<uint32_t>(k >> 32), static_cast<uint32_t>(k), w);
        return *this;
    }
    QuadraticExpr& operator+=(const LinExpr& o) {
        c += o.c;
        for (const auto& [v, w] : o.lin) add_lin(v, w);
        return *this;
    }
    QuadraticExpr& operator*=(double s) {
        c *= s;
        for (auto& [v, w] : lin) w *= s;
        for (auto& [k, w] : quad) w *= s;
        return *this;
    }

    // Accumulate s * a * b (product of two affine expressions).
    void add_product(const LinExpr& a, const LinExpr& b, double s = 1.0) {
        if (s == 0.0) return;
        c += s * a.c * b.c;
        for (const auto& [v, w] : a.lin) add_lin(v, s * w * b.c);
        for (const auto& [v, w] : b.lin) add_lin(v, s * w * a.c);
        for (const auto& [va, wa] : a.lin)
            for (const auto& [vb, wb] : b.lin) add_quad(va, vb, s * wa * wb);
    }

    double evaluate(const std::vector<uint8_t>& bits) const {
        double e = c;
        for (const auto& [v, w] : lin)
            if (v < bits.size() && bits[v]) e += w;
        for (const auto& [k, w] : quad) {
            const uint32_t i = static_cast<uint32_t>(k >> 32), j = static_cast<uint32_t>(k);
            if (i < bits.size() && j < bits.size() && bits[i] && bits[j]) e += w;
        }
        return e;
    }

    // Expand this expression into a BinaryPolynomial (degree <= 2).
    void flatten_into(BinaryPolynomial& poly, double scale = 1.0) const {
        poly.add(monomial::kConst, scale * c);
        for (const auto& [v, w] : lin) poly.add(monomial::from_vars({v}), scale * w);
        for (const auto& [k, w] : quad)
            poly.add(monomial::from_vars({static_cast<uint32_t>(k >> 32), static_cast<uint32_t>(k)}),
                     scale * w);
    }
};

// Hamiltonian as a weighted sum of squared quadratic residuals:
// H(x) = sum_e weight_e * A_e(x)^2. Flattens to a degree <= 4 polynomial.
struct SquaredForm {
    struct Equation {
        double weight = 1.0;
        QuadraticExpr residual;
        std::string label;
    };

    RegistryPtr registry;
    std::vector<Equation> equations;

    explicit SquaredForm(RegistryPtr reg = std::make_shared<VarRegistry>())
        : registry(std::move(reg)) {}

    void add_square(double weight, QuadraticExpr residual, std::string label = {}) {
        if (weight == 0.0) return;
        equations.push_back({weight, std::move(residual), std::move(label)});
    }

    double evaluate(const std::vector<uint8_t>& bits) const {
        double e = 0.0;
        for (const auto& eq : equations) {
            const double r = eq.residual.evaluate(bits);
            e += eq.weight * r * r;
        }
        return e;
    }

    BinaryPolynomial flatten() const {
        BinaryPolynomial poly(registry);
        std::vector<std::pair<uint64_t, double>> parts;
        for (const auto& eq : equations) {
            parts.clear();
            const QuadraticExpr& a = eq.residual;
            parts.emplace_back(monomial::kConst, a.c);
            for (const auto& [v, w] : a.lin) parts.emplace_back(monomial::from_vars({v}), w);
            for (const auto& [k, w] : a.quad)
                parts.emplace_back(monomial::from_vars({static_cast<uint32_t>(k >> 32),
                                                        static_cast<uint32_t>(k)}),
                                   w);
            for (size_t i = 0; i < parts.size(); ++i) {
                poly.add(monomial::multiply(parts[i].first, parts[i].first),
                         eq.weight * parts[i].second * parts[i].second);
                for (size_t j = i + 1; j < parts.size(); ++j)
                    poly.add(monomial::multiply(parts[i].first, parts[j].first),
                             2.0 * eq.weight * parts[i].second * parts[j].second);
            }
        }
        return poly;
    }
};

}  // namespace aqflow
