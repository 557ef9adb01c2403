#include "fedsim/vecmath.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fedsim/errors.hpp"

namespace fedsim {

void check_same_dim(const ParamVector& a, const ParamVector& b, const char* where) {
    if (a.size() != b.size()) {
        throw DimensionError(std::string(where) + ": dimension mismatch (" +
                             std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
    }
}

double dot(const ParamVector& a, const ParamVector& b) {
    check_same_dim(a, b, "dot");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(const ParamVector& a) {
    double s = 0.0;
    for (double x : a) s += x * x;
    return std::sqrt(s);
}

double cosine(const ParamVector& a, const ParamVector& b, double eps) {
    check_same_dim(a, b, "cosine");
    const double na = norm2(a);
    const double nb = norm2(b);
    if (na <= eps || nb <= eps) return 0.0;
    // Clamp away floating-point overshoot so downstream 1 - cos terms can
    // never go negative.
    return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

ParamVector linear_combine(const std::vector<double>& coeffs,
                           const std::vector<ParamVector>& vecs) {
    if (coeffs.size() != vecs.size()) {
        throw DimensionError("linear_combine: " + std::to_string(coeffs.size()) +
                             " coefficients for " + std::to_string(vecs.size()) + " vectors");
    }
    if (vecs.empty()) throw ProtocolError("linear_combine: empty vector list");
    ParamVector out(vecs[0].size(), 0.0);
    for (std::size_t i = 0; i < vecs.size(); ++i) {
        check_same_dim(out, vecs[i], "linear_combine");
        for (std::size_t j = 0; j < out.size(); ++j) out[j] += coeffs[i] * vecs[i][j];
    }
    return out;
}

ParamVector mean_of(const std::vector<ParamVector>& vecs) {
    if (vecs.empty()) throw ProtocolError("mean_of: empty vector list");
    ParamVector out(vecs[0].size(), 0.0);
    for (const auto& v : vecs) {
        check_same_dim(out, v, "mean_of");
        for (std::size_t j = 0; j < out.size(); ++j) out[j] += v[j];
    }
    const double inv = 1.0 / static_cast<double>(vecs.size());
    for (double& x : out) x *= inv;
    return out;
}

ParamVector add(const ParamVector& a, const ParamVector& b) {
    check_same_dim(a, b, "add");
    ParamVector out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
    return out;
}

ParamVector sub(const ParamVector& a, const ParamVector& b) {
    check_same_dim(a, b, "sub");
    ParamVector out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
    return out;
}

ParamVector scaled(const ParamVector& a, double s) {
    ParamVector out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = s * a[i];
    return out;
}

void axpy(double s, const ParamVector& x, ParamVector& y) {
    check_same_dim(x, y, "axpy");
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += s * x[i];
}

bool all_finite(const ParamVector& a) {
    for (double x : a) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

}  // namespace fedsim
