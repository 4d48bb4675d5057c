#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "mcgc/matrix.hpp"

namespace mcgc {

/// Elementwise max(x, 0).
Matrix relu(const Matrix& m);

/// Elementwise logistic 1 / (1 + exp(-x)).
Matrix sigmoid(const Matrix& m);

/// Row-wise softmax with max subtraction, so huge logits stay finite.
/// Every output row is nonnegative and sums to 1.
Matrix softmax_rows(const Matrix& m);

/// Per-row information entropy -sum p ln p with the 0 ln 0 = 0 convention.
/// Rows must be stochastic (sum 1 +/- 1e-6, entries >= 0).
std::vector<double> row_entropy(const Matrix& m);

/// Mean of row_entropy over all rows.
double mean_row_entropy(const Matrix& m);

/// Named collection of trainable tensors. Shapes are fixed once added;
/// initialization with the same seed reproduces values bit-for-bit (tensors
/// are filled in name order from one deterministic engine).
class ParamStore {
public:
    void add(const std::string& name, std::size_t rows, std::size_t cols);

    Matrix& at(const std::string& name);
    const Matrix& at(const std::string& name) const;
    bool has(const std::string& name) const { return tensors_.count(name) != 0; }

    /// Uniform [-s, s] with s = sqrt(6 / (rows + cols)) per tensor.
    void init_uniform_glorot(std::uint64_t seed);

    /// Same names and shapes, all zeros. Gradient containers are built this way.
    ParamStore zeros_like() const;

    std::size_t num_tensors() const { return tensors_.size(); }
    std::size_t num_coords() const;
    std::uint64_t rng_seed() const { return rng_seed_; }

    /// Copy values from another store with identical names and shapes.
    void copy_values_from(const ParamStore& other);

    bool operator==(const ParamStore& other) const;

    auto begin() { return tensors_.begin(); }
    auto end() { return tensors_.end(); }
    auto begin() const { return tensors_.begin(); }
    auto end() const { return tensors_.end(); }

private:
    std::map<std::string, Matrix> tensors_; // ordered: deterministic iteration
    std::uint64_t rng_seed_ = 0;
};

/// Central finite differences (f(p + eps e) - f(p - eps e)) / (2 eps) per
/// coordinate. The oracle every analytic gradient in the toolkit is checked
/// against. eps must lie in [1e-7, 1e-3]; a non-finite f evaluation throws
/// NumericError naming the offending parameter.
ParamStore finite_diff_grad(const std::function<double(const ParamStore&)>& f,
                            const ParamStore& params, double eps);

/// max |a - n| / max(1, |a|, |n|) over all coordinates of two same-shaped
/// stores. The floor of 1 makes the comparison absolute for small gradients,
/// where finite differences carry roundoff noise.
double max_relative_error(const ParamStore& analytic, const ParamStore& numeric);

} // namespace mcgc
