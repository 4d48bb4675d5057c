#pragma once

#include <cstddef>
#include <vector>

#include "mcgc/matrix.hpp"

namespace mcgc {

/// Small reverse-mode tape over dense matrices. A forward pass records one
/// node per primitive; backward() walks the record in reverse and accumulates
/// adjoints. Scalars are 1x1 matrices. Forward values are computed with the
/// same kernels as the plain (non-tape) operations, so a tape forward and a
/// plain forward agree bitwise; only the backward sweep is new code, and its
/// contract is agreement with central finite differences.
class Tape {
public:
    using NodeId = int;

    /// Leaf holding a copy of `value`. Gradients accumulate into its adjoint.
    NodeId input(Matrix value);

    NodeId matmul(NodeId a, NodeId b);    // A * B
    NodeId matmul_tn(NodeId a, NodeId b); // A^T * B
    NodeId matmul_nt(NodeId a, NodeId b); // A * B^T
    NodeId add(NodeId a, NodeId b);       // same shape
    NodeId relu(NodeId a);
    NodeId sigmoid(NodeId a);
    NodeId softmax_rows(NodeId a);
    NodeId row_sum(NodeId a);             // n x m -> n x 1
    NodeId rsqrt(NodeId a);               // elementwise x^(-1/2), x > 0
    NodeId mul_rows(NodeId m, NodeId v);  // row i of m scaled by v(i, 0)
    NodeId mul_cols(NodeId m, NodeId v);  // col j of m scaled by v(j, 0)
    NodeId sum_all(NodeId a);             // -> 1 x 1
    NodeId add_const(NodeId a, double c);
    NodeId scale_const(NodeId a, double c);
    NodeId div_by_scalar(NodeId a, NodeId s); // s is 1 x 1, nonzero
    NodeId concat_cols(const std::vector<NodeId>& blocks); // 1 x d_i -> 1 x sum d_i

    /// -ln(max(p[0, index], floor)) of a probability row.
    NodeId neg_log_entry(NodeId probs, std::size_t index, double floor);

    /// Mean over rows of -sum_j p ln p. Rows are expected stochastic
    /// (softmax outputs); entries are floored inside the log.
    NodeId row_entropy_mean(NodeId m);

    const Matrix& value(NodeId id) const;

    /// Adjoint of a node after backward(). Zero-shaped until then.
    const Matrix& grad(NodeId id) const;

    /// Seeds the 1x1 root with 1 and accumulates adjoints for every node the
    /// root depends on.
    void backward(NodeId root);

    std::size_t size() const { return nodes_.size(); }

private:
    enum class Op {
        Input, MatMul, MatMulTN, MatMulNT, Add, Relu, Sigmoid, SoftmaxRows,
        RowSum, Rsqrt, MulRows, MulCols, SumAll, AddConst, ScaleConst,
        DivByScalar, ConcatCols, NegLogEntry, RowEntropyMean,
    };

    struct Node {
        Op op;
        std::vector<NodeId> inputs;
        Matrix value;
        double scalar_arg = 0.0;
        std::size_t index_arg = 0;
    };

    NodeId push(Op op, std::vector<NodeId> inputs, Matrix value,
                double scalar_arg = 0.0, std::size_t index_arg = 0);
    void check(NodeId id) const;
    void backprop_node(NodeId id);

    std::vector<Node> nodes_;
    std::vector<Matrix> grads_;
};

} // namespace mcgc
