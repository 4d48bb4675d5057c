#include "mcgc/kernels.hpp"

#include "mcgc/errors.hpp"

namespace mcgc::kernels {

namespace {

void check_matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows())
        throw ValidationError("matmul: inner dimensions differ, " + shape_str(a) +
                              " * " + shape_str(b));
}

void check_matmul_tn(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows())
        throw ValidationError("matmul_tn: inner dimensions differ, " + shape_str(a) +
                              "^T * " + shape_str(b));
}

void check_matmul_nt(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols())
        throw ValidationError("matmul_nt: inner dimensions differ, " + shape_str(a) +
                              " * " + shape_str(b) + "^T");
}

// Row i of out accumulated over k in ascending order; shared by the serial
// and parallel paths so their results match bitwise.
inline void matmul_row(const Matrix& a, const Matrix& b, Matrix& out, std::size_t i) {
    const std::size_t n = a.cols(), p = b.cols();
    double* out_i = out.row(i);
    for (std::size_t k = 0; k < n; ++k) {
        const double aik = a(i, k);
        if (aik == 0.0) continue;
        const double* b_k = b.row(k);
        for (std::size_t j = 0; j < p; ++j) out_i[j] += aik * b_k[j];
    }
}

inline void matmul_tn_row(const Matrix& a, const Matrix& b, Matrix& out, std::size_t i) {
    const std::size_t n = a.rows(), p = b.cols();
    double* out_i = out.row(i);
    for (std::size_t k = 0; k < n; ++k) {
        const double aki = a(k, i);
        if (aki == 0.0) continue;
        const double* b_k = b.row(k);
        for (std::size_t j = 0; j < p; ++j) out_i[j] += aki * b_k[j];
    }
}

inline void matmul_nt_row(const Matrix& a, const Matrix& b, Matrix& out, std::size_t i) {
    const std::size_t n = a.cols(), p = b.rows();
    const double* a_i = a.row(i);
    double* out_i = out.row(i);
    for (std::size_t j = 0; j < p; ++j) {
        const double* b_j = b.row(j);
        double acc = 0.0;
        for (std::size_t k = 0; k < n; ++k) acc += a_i[k] * b_j[k];
        out_i[j] = acc;
    }
}

// Below this many multiply-adds the OpenMP fork costs more than it saves.
constexpr std::size_t kParallelThreshold = 64 * 64 * 64;

} // namespace

namespace ref {

void matmul(const Matrix& a, const Matrix& b, Matrix& out) {
    check_matmul(a, b);
    out.assign(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) matmul_row(a, b, out, i);
}

void matmul_tn(const Matrix& a, const Matrix& b, Matrix& out) {
    check_matmul_tn(a, b);
    out.assign(a.cols(), b.cols());
    for (std::size_t i = 0; i < a.cols(); ++i) matmul_tn_row(a, b, out, i);
}

void matmul_nt(const Matrix& a, const Matrix& b, Matrix& out) {
    check_matmul_nt(a, b);
    out.assign(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) matmul_nt_row(a, b, out, i);
}

} // namespace ref

namespace par {

void matmul(const Matrix& a, const Matrix& b, Matrix& out) {
    check_matmul(a, b);
    out.assign(a.rows(), b.cols());
    const std::size_t rows = a.rows();
    if (rows * a.cols() * b.cols() < kParallelThreshold) {
        for (std::size_t i = 0; i < rows; ++i) matmul_row(a, b, out, i);
        return;
    }
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(rows); ++i)
        matmul_row(a, b, out, static_cast<std::size_t>(i));
}

void matmul_tn(const Matrix& a, const Matrix& b, Matrix& out) {
    check_matmul_tn(a, b);
    out.assign(a.cols(), b.cols());
    const std::size_t rows = a.cols();
    if (rows * a.rows() * b.cols() < kParallelThreshold) {
        for (std::size_t i = 0; i < rows; ++i) matmul_tn_row(a, b, out, i);
        return;
    }
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(rows); ++i)
        matmul_tn_row(a, b, out, static_cast<std::size_t>(i));
}

void matmul_nt(const Matrix& a, const Matrix& b, Matrix& out) {
    check_matmul_nt(a, b);
    out.assign(a.rows(), b.rows());
    const std::size_t rows = a.rows();
    if (rows * a.cols() * b.rows() < kParallelThreshold) {
        for (std::size_t i = 0; i < rows; ++i) matmul_nt_row(a, b, out, i);
        return;
    }
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(rows); ++i)
        matmul_nt_row(a, b, out, static_cast<std::size_t>(i));
}

} // namespace par

Matrix matmul(const Matrix& a, const Matrix& b) {
    Matrix out;
    par::matmul(a, b, out);
    return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    Matrix out;
    par::matmul_tn(a, b, out);
    return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    Matrix out;
    par::matmul_nt(a, b, out);
    return out;
}

} // namespace mcgc::kernels
