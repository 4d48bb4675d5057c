#include "mcgc/numerics.hpp"

#include <cmath>

#include "mcgc/errors.hpp"
#include "mcgc/rng.hpp"

namespace mcgc {

Matrix relu(const Matrix& m) {
    Matrix out(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.size(); ++i)
        out.data()[i] = m.data()[i] > 0.0 ? m.data()[i] : 0.0;
    return out;
}

Matrix sigmoid(const Matrix& m) {
    Matrix out(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.size(); ++i) {
        const double x = m.data()[i];
        // Split on sign to avoid exp overflow for large |x|.
        out.data()[i] = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                                 : std::exp(x) / (1.0 + std::exp(x));
    }
    return out;
}

Matrix softmax_rows(const Matrix& m) {
    Matrix out(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        double mx = m(i, 0);
        for (std::size_t j = 1; j < m.cols(); ++j) mx = std::max(mx, m(i, j));
        double sum = 0.0;
        for (std::size_t j = 0; j < m.cols(); ++j) {
            const double e = std::exp(m(i, j) - mx);
            out(i, j) = e;
            sum += e;
        }
        for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) /= sum;
    }
    return out;
}

std::vector<double> row_entropy(const Matrix& m) {
    std::vector<double> h(m.rows(), 0.0);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        double sum = 0.0;
        double acc = 0.0;
        for (std::size_t j = 0; j < m.cols(); ++j) {
            const double p = m(i, j);
            if (p < 0.0)
                throw ValidationError("row_entropy: negative entry at row " +
                                      std::to_string(i));
            sum += p;
            if (p > 0.0) acc -= p * std::log(p);
        }
        if (std::fabs(sum - 1.0) > 1e-6)
            throw ValidationError("row_entropy: row " + std::to_string(i) +
                                  " is not stochastic (sum " + std::to_string(sum) + ")");
        h[i] = acc;
    }
    return h;
}

double mean_row_entropy(const Matrix& m) {
    const std::vector<double> h = row_entropy(m);
    double acc = 0.0;
    for (double v : h) acc += v;
    return acc / static_cast<double>(h.size());
}

void ParamStore::add(const std::string& name, std::size_t rows, std::size_t cols) {
    if (tensors_.count(name))
        throw ValidationError("ParamStore: duplicate tensor name '" + name + "'");
    tensors_.emplace(name, Matrix(rows, cols));
}

Matrix& ParamStore::at(const std::string& name) {
    auto it = tensors_.find(name);
    if (it == tensors_.end())
        throw ValidationError("ParamStore: unknown tensor '" + name + "'");
    return it->second;
}

const Matrix& ParamStore::at(const std::string& name) const {
    auto it = tensors_.find(name);
    if (it == tensors_.end())
        throw ValidationError("ParamStore: unknown tensor '" + name + "'");
    return it->second;
}

void ParamStore::init_uniform_glorot(std::uint64_t seed) {
    rng_seed_ = seed;
    rng::Engine eng(seed);
    for (auto& [name, tensor] : tensors_) {
        const double s =
            std::sqrt(6.0 / static_cast<double>(tensor.rows() + tensor.cols()));
        for (std::size_t i = 0; i < tensor.size(); ++i)
            tensor.data()[i] = rng::uniform(eng, -s, s);
    }
}

ParamStore ParamStore::zeros_like() const {
    ParamStore out;
    for (const auto& [name, tensor] : tensors_) out.add(name, tensor.rows(), tensor.cols());
    return out;
}

std::size_t ParamStore::num_coords() const {
    std::size_t n = 0;
    for (const auto& [name, tensor] : tensors_) n += tensor.size();
    return n;
}

void ParamStore::copy_values_from(const ParamStore& other) {
    if (tensors_.size() != other.tensors_.size())
        throw ValidationError("ParamStore: tensor sets differ");
    for (auto& [name, tensor] : tensors_) {
        const Matrix& src = other.at(name);
        if (!tensor.same_shape(src))
            throw ValidationError("ParamStore: shape of '" + name + "' differs");
        tensor = src;
    }
}

bool ParamStore::operator==(const ParamStore& other) const {
    if (tensors_.size() != other.tensors_.size()) return false;
    for (const auto& [name, tensor] : tensors_) {
        if (!other.has(name) || !(other.at(name) == tensor)) return false;
    }
    return true;
}

ParamStore finite_diff_grad(const std::function<double(const ParamStore&)>& f,
                            const ParamStore& params, double eps) {
    if (eps < 1e-7 || eps > 1e-3)
        throw ValidationError("finite_diff_grad: eps must lie in [1e-7, 1e-3]");
    ParamStore grad = params.zeros_like();
    ParamStore work = params;
    for (auto& [name, tensor] : work) {
        Matrix& g = grad.at(name);
        for (std::size_t i = 0; i < tensor.size(); ++i) {
            const double saved = tensor.data()[i];
            tensor.data()[i] = saved + eps;
            const double f_plus = f(work);
            tensor.data()[i] = saved - eps;
            const double f_minus = f(work);
            tensor.data()[i] = saved;
            if (!std::isfinite(f_plus) || !std::isfinite(f_minus))
                throw NumericError("finite_diff_grad: non-finite value at parameter '" +
                                   name + "'");
            g.data()[i] = (f_plus - f_minus) / (2.0 * eps);
        }
    }
    return grad;
}

double max_relative_error(const ParamStore& analytic, const ParamStore& numeric) {
    double worst = 0.0;
    for (const auto& [name, a] : analytic) {
        const Matrix& n = numeric.at(name);
        if (!a.same_shape(n))
            throw ValidationError("max_relative_error: shape of '" + name + "' differs");
        for (std::size_t i = 0; i < a.size(); ++i) {
            const double av = a.data()[i], nv = n.data()[i];
            const double denom = std::max({1.0, std::fabs(av), std::fabs(nv)});
            worst = std::max(worst, std::fabs(av - nv) / denom);
        }
    }
    return worst;
}

} // namespace mcgc
