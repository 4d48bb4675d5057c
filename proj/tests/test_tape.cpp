#include <doctest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "mcgc/errors.hpp"
#include "mcgc/kernels.hpp"
#include "mcgc/numerics.hpp"
#include "mcgc/rng.hpp"
#include "mcgc/tape.hpp"

using mcgc::Matrix;
using mcgc::Tape;

namespace {

// A test graph is a function from leaf matrices to a scalar root node.
using Builder = std::function<Tape::NodeId(Tape&, const std::vector<Tape::NodeId>&)>;

Matrix random_matrix(std::size_t rows, std::size_t cols, mcgc::rng::Engine& eng,
                     double lo = -2.0, double hi = 2.0) {
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < m.size(); ++i)
        m.data()[i] = mcgc::rng::uniform(eng, lo, hi);
    return m;
}

// Random values bounded away from zero, so relu stays locally linear under
// the finite-difference step.
Matrix random_off_kink(std::size_t rows, std::size_t cols, mcgc::rng::Engine& eng) {
    Matrix m = random_matrix(rows, cols, eng, -2.0, 2.0);
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (std::fabs(m.data()[i]) < 0.1)
            m.data()[i] = m.data()[i] < 0.0 ? m.data()[i] - 0.1 : m.data()[i] + 0.1;
    }
    return m;
}

double eval_scalar(const Builder& build, const std::vector<Matrix>& inputs) {
    Tape t;
    std::vector<Tape::NodeId> ids;
    ids.reserve(inputs.size());
    for (const Matrix& m : inputs) ids.push_back(t.input(m));
    return t.value(build(t, ids))(0, 0);
}

// Backward vs. central finite differences over every coordinate of every leaf.
void check_gradients(const Builder& build, std::vector<Matrix> inputs,
                     double tol = 1e-6) {
    Tape t;
    std::vector<Tape::NodeId> ids;
    for (const Matrix& m : inputs) ids.push_back(t.input(m));
    const Tape::NodeId root = build(t, ids);
    REQUIRE(t.value(root).rows() == 1);
    REQUIRE(t.value(root).cols() == 1);
    t.backward(root);

    const double eps = 1e-5;
    for (std::size_t which = 0; which < inputs.size(); ++which) {
        const Matrix grad = t.grad(ids[which]);
        for (std::size_t c = 0; c < inputs[which].size(); ++c) {
            const double saved = inputs[which].data()[c];
            inputs[which].data()[c] = saved + eps;
            const double f_plus = eval_scalar(build, inputs);
            inputs[which].data()[c] = saved - eps;
            const double f_minus = eval_scalar(build, inputs);
            inputs[which].data()[c] = saved;

            const double fd = (f_plus - f_minus) / (2.0 * eps);
            const double an = grad.data()[c];
            const double err =
                std::fabs(an - fd) / std::max({1.0, std::fabs(an), std::fabs(fd)});
            CAPTURE(which);
            CAPTURE(c);
            CAPTURE(an);
            CAPTURE(fd);
            CHECK(err < tol);
        }
    }
}

// Reduce an arbitrary r x c node to a scalar with distinct per-entry weights
// (rank-one: row weight times column weight), so transposition mistakes in a
// backward rule cannot cancel out.
Tape::NodeId weighted_sum(Tape& t, Tape::NodeId node, Tape::NodeId col_w,
                          Tape::NodeId row_w) {
    return t.matmul_tn(t.matmul(node, col_w), row_w);
}

} // namespace

TEST_SUITE("tape") {

TEST_CASE("forward values reuse the plain kernels bitwise") {
    mcgc::rng::Engine eng(31);
    const Matrix a = random_matrix(4, 6, eng);
    const Matrix b = random_matrix(6, 3, eng);

    Tape t;
    const auto ia = t.input(a);
    const auto ib = t.input(b);
    CHECK(t.value(t.matmul(ia, ib)) == mcgc::kernels::matmul(a, b));
    CHECK(t.value(t.relu(ia)) == mcgc::relu(a));
    CHECK(t.value(t.sigmoid(ia)) == mcgc::sigmoid(a));
    CHECK(t.value(t.softmax_rows(ia)) == mcgc::softmax_rows(a));
    CHECK(t.value(t.add(ia, ia)) == mcgc::add(a, a));
}

TEST_CASE("gradient of matmul") {
    mcgc::rng::Engine eng(32);
    check_gradients(
        [](Tape& t, const std::vector<Tape::NodeId>& in) {
            return weighted_sum(t, t.matmul(in[0], in[1]), in[2], in[3]);
        },
        {random_matrix(3, 4, eng), random_matrix(4, 5, eng),
         random_matrix(5, 1, eng), random_matrix(3, 1, eng)});
}

TEST_CASE("gradient of matmul_tn") {
    mcgc::rng::Engine eng(33);
    check_gradients(
        [](Tape& t, const std::vector<Tape::NodeId>& in) {
            return weighted_sum(t, t.matmul_tn(in[0], in[1]), in[2], in[3]);
        },
        {random_matrix(4, 3, eng), random_matrix(4, 5, eng),
         random_matrix(5, 1, eng), random_matrix(3, 1, eng)});
}

TEST_CASE("gradient of matmul_nt") {
    mcgc::rng::Engine eng(34);
    check_gradients(
        [](Tape& t, const std::vector<Tape::NodeId>& in) {
            return weighted_sum(t, t.matmul_nt(in[0], in[1]), in[2], in[3]);
        },
        {random_matrix(3, 4, eng), random_matrix(5, 4, eng),
         random_matrix(5, 1, eng), random_matrix(3, 1, eng)});
}

TEST_CASE("gradient of add") {
    mcgc::rng::Engine eng(35);
    check_gradients(
        [](Tape& t, const std::vector<Tape::NodeId>& in) {
            return weighted_sum(t, t.add(in[0], in[1]), in[2], in[3]);
        },
        {random_matrix(3, 4, eng), random_matrix(3, 4, eng),
         random_matrix(4, 1, eng), random_matrix(3, 1, eng)});
}

TEST_CASE("gradient of relu away from the kink") {
    mcgc::rng::Engine eng(36);
    check_gradients(
        [](Tape& t, const std::vector<Tape::NodeId>& in) {
            return weighted_sum(t, t.relu(in[0]), in[1], in[2]);
        },
        {random_off_kink(3, 4, eng), random_matrix(4, 1, eng),
         random_matrix(3, 1, eng)});
}

TEST_CASE("gradient of sigmoid") {
    mcgc::rng::Engine eng(37);
    check_gradients(
        [](Tape& t, const std::vector<Tape::NodeId>& in) {
            return weighted_sum(t, t.sigmoid(in[0]), in[1], in[2]);
        },
        {random_matrix(3, 4, eng), random_matrix(4, 1, eng),
         random_matrix(3, 1, eng)});
}

TEST_CASE("gradient of softmax_rows") {
    mcgc::rng::Engine eng(38);
    check_gradients(
        [](Tape& t, const std::vector<Tape::NodeId>& in) {
            return weighted_sum(t, t.softmax_rows(in[0]), in[1], in[2]);
        },
        {random_matrix(3, 4, eng), random_matrix(4, 1, eng),
         random_matrix(3, 1, eng)});
}

TEST_CASE("gradient of row_sum") {
    mcgc::rng::Engine eng(39);
    check_gradients(
        [](Tape& t, const std::vector<Tape::NodeId>& in) {
            return t.matmul_tn(t.row_sum(in[0]), in[1]);
        },
        {random_matrix(3, 4, eng), random_matrix(3, 1, eng)});
}

TEST_CASE("gradient of rsqrt") {
    mcgc::rng::Engine eng(40);
    check_gradients(
        [](Tape& t, const std::vector<Tape::NodeId>& in) {
            return weighted_sum(t, t.rsqrt(in[0]), in[1], in[2]);
        },
        {random_matrix(3, 4, eng, 0.5, 3.0), random_matrix(4, 1, eng),
         random_matrix(3, 1, eng)});
}

TEST_CASE("gradient of mul_rows and mul_cols") {
    mcgc::rng::Engine eng(41);
    check_gradients(
        [](Tape& t, const std::vector<Tape::NodeId>& in) {
            return weighted_sum(t, t.mul_rows(in[0], in[1]), in[2], in[3]);
        },
        {random_matrix(3, 4, eng), random_matrix(3, 1, eng),
         random_matrix(4, 1, eng), random_matrix(3, 1, eng)});
    check_gradients(
        [](Tape& t, const std::vector<Tape::NodeId>& in) {
            return weighted_sum(t, t.mul_cols(in[0], in[1]), in[2], in[3]);
        },
        {random_matrix(3, 4, eng), random_matrix(4, 1, eng),
         random_matrix(4, 1, eng), random_matrix(3, 1, eng)});
}

TEST_CASE("gradient of sum_all, add_const, scale_const") {
    mcgc::rng::Engine eng(42);
    check_gradients(
        [](Tape& t, const std::vector<Tape::NodeId>& in) { return t.sum_all(in[0]); },
        {random_matrix(3, 4, eng)});
    check_gradients(
        [](Tape& t, const std::vector<Tape::NodeId>& in) {
            return t.sum_all(t.add_const(t.scale_const(in[0], -1.7), 0.3));
        },
        {random_matrix(3, 4, eng)});
}

TEST_CASE("gradient of div_by_scalar in both arguments") {
    mcgc::rng::Engine eng(43);
    Matrix s(1, 1);
    s(0, 0) = 1.7;
    check_gradients(
        [](Tape& t, const std::vector<Tape::NodeId>& in) {
            return weighted_sum(t, t.div_by_scalar(in[0], in[1]), in[2], in[3]);
        },
        {random_matrix(3, 4, eng), s, random_matrix(4, 1, eng),
         random_matrix(3, 1, eng)});
}

TEST_CASE("gradient of concat_cols") {
    mcgc::rng::Engine eng(44);
    check_gradients(
        [](Tape& t, const std::vector<Tape::NodeId>& in) {
            return t.matmul(t.concat_cols({in[0], in[1], in[2]}), in[3]);
        },
        {random_matrix(1, 2, eng), random_matrix(1, 3, eng), random_matrix(1, 4, eng),
         random_matrix(9, 1, eng)});
}

TEST_CASE("gradient of neg_log_entry through a softmax") {
    mcgc::rng::Engine eng(45);
    check_gradients(
        [](Tape& t, const std::vector<Tape::NodeId>& in) {
            return t.neg_log_entry(t.softmax_rows(in[0]), 2, 1e-12);
        },
        {random_matrix(1, 4, eng)});
}

TEST_CASE("gradient of row_entropy_mean through a softmax") {
    mcgc::rng::Engine eng(46);
    check_gradients(
        [](Tape& t, const std::vector<Tape::NodeId>& in) {
            return t.row_entropy_mean(t.softmax_rows(in[0]));
        },
        {random_matrix(3, 4, eng)});
}

TEST_CASE("gradient of a composite two-stage network") {
    // Chains most ops the classifier path uses: normalization-style scaling,
    // two convolutions, a softmax pooling, readout division, concatenation.
    mcgc::rng::Engine eng(47);
    check_gradients(
        [](Tape& t, const std::vector<Tape::NodeId>& in) {
            const auto h1 = t.relu(t.matmul(t.matmul(in[0], in[1]), in[2]));
            const auto c = t.softmax_rows(t.matmul(h1, in[3]));
            const auto x2 = t.matmul_tn(c, h1);
            const auto theta = t.sigmoid(t.matmul_nt(x2, in[4]));
            const auto s = t.div_by_scalar(t.matmul_tn(theta, x2), t.sum_all(theta));
            const auto den = t.add_const(t.row_sum(s), 1e-12);
            const auto logits = t.matmul(t.div_by_scalar(s, den), in[5]);
            const auto ce = t.neg_log_entry(t.softmax_rows(logits), 1, 1e-12);
            return t.add(ce, t.scale_const(t.row_entropy_mean(c), 0.7));
        },
        {random_matrix(4, 4, eng, 0.1, 1.0), random_matrix(4, 3, eng),
         random_matrix(3, 3, eng), random_matrix(3, 2, eng),
         random_matrix(1, 3, eng), random_matrix(3, 2, eng)},
        2e-6);
}

TEST_CASE("backward requires a scalar root") {
    Tape t;
    const auto a = t.input(Matrix(2, 2, 1.0));
    CHECK_THROWS_AS(t.backward(a), mcgc::ValidationError);
}

TEST_CASE("grad before backward throws") {
    Tape t;
    const auto a = t.input(Matrix(1, 1, 1.0));
    CHECK_THROWS_AS((void)t.grad(a), mcgc::ValidationError);
}

TEST_CASE("nodes outside the root's history keep zero gradients") {
    Tape t;
    const auto a = t.input(Matrix(1, 1, 2.0));
    const auto b = t.input(Matrix(1, 1, 3.0));
    const auto unused = t.scale_const(b, 5.0);
    const auto root = t.scale_const(a, 2.0);
    t.backward(root);
    CHECK(t.grad(a)(0, 0) == 2.0);
    CHECK(t.grad(b)(0, 0) == 0.0);
    CHECK(t.grad(unused)(0, 0) == 0.0);
}

TEST_CASE("shape and domain violations throw") {
    Tape t;
    const auto a = t.input(Matrix(2, 3, 1.0));
    const auto b = t.input(Matrix(2, 3, 1.0));
    CHECK_THROWS_AS((void)t.matmul(a, b), mcgc::ValidationError);
    CHECK_THROWS_AS((void)t.mul_rows(a, b), mcgc::ValidationError);
    CHECK_THROWS_AS((void)t.mul_cols(a, b), mcgc::ValidationError);
    CHECK_THROWS_AS((void)t.concat_cols({a}), mcgc::ValidationError);
    CHECK_THROWS_AS((void)t.neg_log_entry(a, 0, 1e-12), mcgc::ValidationError);

    const auto neg = t.input(Matrix(1, 1, -1.0));
    CHECK_THROWS_AS((void)t.rsqrt(neg), mcgc::NumericError);
    const auto zero = t.input(Matrix(1, 1, 0.0));
    CHECK_THROWS_AS((void)t.div_by_scalar(a, zero), mcgc::NumericError);
}

TEST_CASE("accumulation through shared subexpressions") {
    // f(x) = sum(x)^2 via two paths: root = sum_all(x) * sum_all(x).
    Tape t;
    Matrix x(2, 2);
    x(0, 0) = 1.0; x(0, 1) = 2.0; x(1, 0) = 3.0; x(1, 1) = 4.0; // sum 10
    const auto ix = t.input(x);
    const auto s = t.sum_all(ix);
    const auto root = t.matmul(s, s); // 1x1 * 1x1
    t.backward(root);
    // d/dx_ij (sum x)^2 = 2 * sum = 20 everywhere.
    for (std::size_t i = 0; i < 4; ++i) CHECK(t.grad(ix).data()[i] == 20.0);
}

} // TEST_SUITE
