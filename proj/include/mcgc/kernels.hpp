#pragma once

#include "mcgc/matrix.hpp"

// Dense matrix-product kernels. Every product in the toolkit goes through the
// three variants below (plain, transposed-left, transposed-right), so the
// transpose is never materialized.
//
// `ref` holds the plain serial loops and is the reference the parallel kernels
// are tested against. `par` splits output rows across OpenMP threads; the
// per-element summation order is identical to `ref`, so results are bitwise
// equal for any thread count. That property is what makes seeded training
// runs reproduce exactly regardless of --jobs.
namespace mcgc::kernels {

namespace ref {
void matmul(const Matrix& a, const Matrix& b, Matrix& out);    // out = a * b
void matmul_tn(const Matrix& a, const Matrix& b, Matrix& out); // out = a^T * b
void matmul_nt(const Matrix& a, const Matrix& b, Matrix& out); // out = a * b^T
} // namespace ref

namespace par {
void matmul(const Matrix& a, const Matrix& b, Matrix& out);
void matmul_tn(const Matrix& a, const Matrix& b, Matrix& out);
void matmul_nt(const Matrix& a, const Matrix& b, Matrix& out);
} // namespace par

// Allocating wrappers over the parallel kernels; the rest of the library
// calls these.
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix matmul_tn(const Matrix& a, const Matrix& b);
Matrix matmul_nt(const Matrix& a, const Matrix& b);

} // namespace mcgc::kernels
