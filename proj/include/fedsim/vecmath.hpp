#pragma once

#include <vector>

namespace fedsim {

// Model parameters, gradients, and update directions all live in R^d.
using ParamVector = std::vector<double>;

// Inner product; throws DimensionError on size mismatch.
double dot(const ParamVector& a, const ParamVector& b);

// Euclidean norm.
double norm2(const ParamVector& a);

// Cosine of the angle between a and b. Returns 0 when either norm is
// below eps, so callers never divide by a vanishing norm.
double cosine(const ParamVector& a, const ParamVector& b, double eps = 1e-12);

// sum_i coeffs[i] * vecs[i], accumulated in index order.
ParamVector linear_combine(const std::vector<double>& coeffs,
                           const std::vector<ParamVector>& vecs);

// Arithmetic mean, accumulated in index order; throws ProtocolError if empty.
ParamVector mean_of(const std::vector<ParamVector>& vecs);

ParamVector add(const ParamVector& a, const ParamVector& b);
ParamVector sub(const ParamVector& a, const ParamVector& b);
ParamVector scaled(const ParamVector& a, double s);

// y += s * x
void axpy(double s, const ParamVector& x, ParamVector& y);

bool all_finite(const ParamVector& a);

void check_same_dim(const ParamVector& a, const ParamVector& b, const char* where);

}  // namespace fedsim
