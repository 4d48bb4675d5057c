#include "mcgc/tape.hpp"

#include <cmath>

#include "mcgc/errors.hpp"
#include "mcgc/kernels.hpp"
#include "mcgc/numerics.hpp"

namespace mcgc {

namespace {
constexpr double kLogFloor = 1e-300;

void accumulate(Matrix& into, const Matrix& delta) {
    for (std::size_t i = 0; i < into.size(); ++i) into.data()[i] += delta.data()[i];
}
} // namespace

Tape::NodeId Tape::push(Op op, std::vector<NodeId> inputs, Matrix value,
                        double scalar_arg, std::size_t index_arg) {
    nodes_.push_back(Node{op, std::move(inputs), std::move(value), scalar_arg, index_arg});
    return static_cast<NodeId>(nodes_.size() - 1);
}

void Tape::check(NodeId id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size())
        throw ValidationError("tape: node id out of range");
}

Tape::NodeId Tape::input(Matrix value) {
    return push(Op::Input, {}, std::move(value));
}

Tape::NodeId Tape::matmul(NodeId a, NodeId b) {
    check(a); check(b);
    return push(Op::MatMul, {a, b}, kernels::matmul(nodes_[a].value, nodes_[b].value));
}

Tape::NodeId Tape::matmul_tn(NodeId a, NodeId b) {
    check(a); check(b);
    return push(Op::MatMulTN, {a, b}, kernels::matmul_tn(nodes_[a].value, nodes_[b].value));
}

Tape::NodeId Tape::matmul_nt(NodeId a, NodeId b) {
    check(a); check(b);
    return push(Op::MatMulNT, {a, b}, kernels::matmul_nt(nodes_[a].value, nodes_[b].value));
}

Tape::NodeId Tape::add(NodeId a, NodeId b) {
    check(a); check(b);
    return push(Op::Add, {a, b}, mcgc::add(nodes_[a].value, nodes_[b].value));
}

Tape::NodeId Tape::relu(NodeId a) {
    check(a);
    return push(Op::Relu, {a}, mcgc::relu(nodes_[a].value));
}

Tape::NodeId Tape::sigmoid(NodeId a) {
    check(a);
    return push(Op::Sigmoid, {a}, mcgc::sigmoid(nodes_[a].value));
}

Tape::NodeId Tape::softmax_rows(NodeId a) {
    check(a);
    return push(Op::SoftmaxRows, {a}, mcgc::softmax_rows(nodes_[a].value));
}

Tape::NodeId Tape::row_sum(NodeId a) {
    check(a);
    const Matrix& m = nodes_[a].value;
    Matrix out(m.rows(), 1);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < m.cols(); ++j) acc += m(i, j);
        out(i, 0) = acc;
    }
    return push(Op::RowSum, {a}, std::move(out));
}

Tape::NodeId Tape::rsqrt(NodeId a) {
    check(a);
    const Matrix& m = nodes_[a].value;
    Matrix out(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (m.data()[i] <= 0.0)
            throw NumericError("tape rsqrt: nonpositive input");
        out.data()[i] = 1.0 / std::sqrt(m.data()[i]);
    }
    return push(Op::Rsqrt, {a}, std::move(out));
}

Tape::NodeId Tape::mul_rows(NodeId m_id, NodeId v_id) {
    check(m_id); check(v_id);
    const Matrix& m = nodes_[m_id].value;
    const Matrix& v = nodes_[v_id].value;
    if (v.rows() != m.rows() || v.cols() != 1)
        throw ValidationError("tape mul_rows: scale vector must be rows x 1");
    Matrix out(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = m(i, j) * v(i, 0);
    return push(Op::MulRows, {m_id, v_id}, std::move(out));
}

Tape::NodeId Tape::mul_cols(NodeId m_id, NodeId v_id) {
    check(m_id); check(v_id);
    const Matrix& m = nodes_[m_id].value;
    const Matrix& v = nodes_[v_id].value;
    if (v.rows() != m.cols() || v.cols() != 1)
        throw ValidationError("tape mul_cols: scale vector must be cols x 1");
    Matrix out(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = m(i, j) * v(j, 0);
    return push(Op::MulCols, {m_id, v_id}, std::move(out));
}

Tape::NodeId Tape::sum_all(NodeId a) {
    check(a);
    const Matrix& m = nodes_[a].value;
    double acc = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) acc += m.data()[i];
    Matrix out(1, 1);
    out(0, 0) = acc;
    return push(Op::SumAll, {a}, std::move(out));
}

Tape::NodeId Tape::add_const(NodeId a, double c) {
    check(a);
    Matrix out = nodes_[a].value;
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] += c;
    return push(Op::AddConst, {a}, std::move(out), c);
}

Tape::NodeId Tape::scale_const(NodeId a, double c) {
    check(a);
    return push(Op::ScaleConst, {a}, scale(nodes_[a].value, c), c);
}

Tape::NodeId Tape::div_by_scalar(NodeId a, NodeId s) {
    check(a); check(s);
    const Matrix& sv = nodes_[s].value;
    if (sv.rows() != 1 || sv.cols() != 1)
        throw ValidationError("tape div_by_scalar: divisor must be 1x1");
    const double d = sv(0, 0);
    if (d == 0.0) throw NumericError("tape div_by_scalar: zero divisor");
    Matrix out = nodes_[a].value;
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] /= d;
    return push(Op::DivByScalar, {a, s}, std::move(out));
}

Tape::NodeId Tape::concat_cols(const std::vector<NodeId>& blocks) {
    if (blocks.empty()) throw ValidationError("tape concat_cols: no blocks");
    std::size_t total = 0;
    for (NodeId b : blocks) {
        check(b);
        if (nodes_[b].value.rows() != 1)
            throw ValidationError("tape concat_cols: blocks must be 1 x d");
        total += nodes_[b].value.cols();
    }
    Matrix out(1, total);
    std::size_t offset = 0;
    for (NodeId b : blocks) {
        const Matrix& v = nodes_[b].value;
        for (std::size_t j = 0; j < v.cols(); ++j) out(0, offset + j) = v(0, j);
        offset += v.cols();
    }
    return push(Op::ConcatCols, blocks, std::move(out));
}

Tape::NodeId Tape::neg_log_entry(NodeId probs, std::size_t index, double floor) {
    check(probs);
    const Matrix& p = nodes_[probs].value;
    if (p.rows() != 1 || index >= p.cols())
        throw ValidationError("tape neg_log_entry: index out of range");
    Matrix out(1, 1);
    out(0, 0) = -std::log(std::max(p(0, index), floor));
    return push(Op::NegLogEntry, {probs}, std::move(out), floor, index);
}

Tape::NodeId Tape::row_entropy_mean(NodeId m_id) {
    check(m_id);
    const Matrix& m = nodes_[m_id].value;
    if (m.rows() == 0) throw ValidationError("tape row_entropy_mean: empty matrix");
    Matrix out(1, 1);
    out(0, 0) = mcgc::mean_row_entropy(m); // shared with the plain loss path
    return push(Op::RowEntropyMean, {m_id}, std::move(out));
}

const Matrix& Tape::value(NodeId id) const {
    check(id);
    return nodes_[id].value;
}

const Matrix& Tape::grad(NodeId id) const {
    check(id);
    if (grads_.size() != nodes_.size())
        throw ValidationError("tape: grad requested before backward()");
    return grads_[id];
}

void Tape::backward(NodeId root) {
    check(root);
    const Matrix& rv = nodes_[root].value;
    if (rv.rows() != 1 || rv.cols() != 1)
        throw ValidationError("tape backward: root must be a 1x1 scalar");

    grads_.assign(nodes_.size(), Matrix());
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        grads_[i].assign(nodes_[i].value.rows(), nodes_[i].value.cols());

    // Only nodes the root depends on need a backward visit.
    std::vector<char> needed(nodes_.size(), 0);
    std::vector<NodeId> stack = {root};
    needed[root] = 1;
    while (!stack.empty()) {
        const NodeId id = stack.back();
        stack.pop_back();
        for (NodeId in : nodes_[id].inputs)
            if (!needed[in]) {
                needed[in] = 1;
                stack.push_back(in);
            }
    }

    grads_[root](0, 0) = 1.0;
    for (NodeId id = root; id >= 0; --id)
        if (needed[id]) backprop_node(id);
}

void Tape::backprop_node(NodeId id) {
    const Node& node = nodes_[id];
    const Matrix& g = grads_[id];
    switch (node.op) {
    case Op::Input:
        break;
    case Op::MatMul: { // C = A B: dA += g B^T, dB += A^T g
        const Matrix& a = nodes_[node.inputs[0]].value;
        const Matrix& b = nodes_[node.inputs[1]].value;
        accumulate(grads_[node.inputs[0]], kernels::matmul_nt(g, b));
        accumulate(grads_[node.inputs[1]], kernels::matmul_tn(a, g));
        break;
    }
    case Op::MatMulTN: { // C = A^T B: dA += B g^T, dB += A g
        const Matrix& a = nodes_[node.inputs[0]].value;
        const Matrix& b = nodes_[node.inputs[1]].value;
        accumulate(grads_[node.inputs[0]], kernels::matmul_nt(b, g));
        accumulate(grads_[node.inputs[1]], kernels::matmul(a, g));
        break;
    }
    case Op::MatMulNT: { // C = A B^T: dA += g B, dB += g^T A
        const Matrix& a = nodes_[node.inputs[0]].value;
        const Matrix& b = nodes_[node.inputs[1]].value;
        accumulate(grads_[node.inputs[0]], kernels::matmul(g, b));
        accumulate(grads_[node.inputs[1]], kernels::matmul_tn(g, a));
        break;
    }
    case Op::Add:
        accumulate(grads_[node.inputs[0]], g);
        accumulate(grads_[node.inputs[1]], g);
        break;
    case Op::Relu: {
        const Matrix& x = nodes_[node.inputs[0]].value;
        Matrix& dx = grads_[node.inputs[0]];
        for (std::size_t i = 0; i < x.size(); ++i)
            if (x.data()[i] > 0.0) dx.data()[i] += g.data()[i];
        break;
    }
    case Op::Sigmoid: {
        const Matrix& y = node.value;
        Matrix& dx = grads_[node.inputs[0]];
        for (std::size_t i = 0; i < y.size(); ++i)
            dx.data()[i] += g.data()[i] * y.data()[i] * (1.0 - y.data()[i]);
        break;
    }
    case Op::SoftmaxRows: {
        const Matrix& p = node.value;
        Matrix& dx = grads_[node.inputs[0]];
        for (std::size_t i = 0; i < p.rows(); ++i) {
            double dot = 0.0;
            for (std::size_t j = 0; j < p.cols(); ++j) dot += g(i, j) * p(i, j);
            for (std::size_t j = 0; j < p.cols(); ++j)
                dx(i, j) += p(i, j) * (g(i, j) - dot);
        }
        break;
    }
    case Op::RowSum: {
        Matrix& dm = grads_[node.inputs[0]];
        for (std::size_t i = 0; i < dm.rows(); ++i)
            for (std::size_t j = 0; j < dm.cols(); ++j) dm(i, j) += g(i, 0);
        break;
    }
    case Op::Rsqrt: {
        const Matrix& y = node.value;
        Matrix& dx = grads_[node.inputs[0]];
        for (std::size_t i = 0; i < y.size(); ++i) {
            const double yi = y.data()[i];
            dx.data()[i] += g.data()[i] * (-0.5) * yi * yi * yi;
        }
        break;
    }
    case Op::MulRows: {
        const Matrix& m = nodes_[node.inputs[0]].value;
        const Matrix& v = nodes_[node.inputs[1]].value;
        Matrix& dm = grads_[node.inputs[0]];
        Matrix& dv = grads_[node.inputs[1]];
        for (std::size_t i = 0; i < m.rows(); ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < m.cols(); ++j) {
                dm(i, j) += g(i, j) * v(i, 0);
                acc += g(i, j) * m(i, j);
            }
            dv(i, 0) += acc;
        }
        break;
    }
    case Op::MulCols: {
        const Matrix& m = nodes_[node.inputs[0]].value;
        const Matrix& v = nodes_[node.inputs[1]].value;
        Matrix& dm = grads_[node.inputs[0]];
        Matrix& dv = grads_[node.inputs[1]];
        for (std::size_t i = 0; i < m.rows(); ++i)
            for (std::size_t j = 0; j < m.cols(); ++j) {
                dm(i, j) += g(i, j) * v(j, 0);
                dv(j, 0) += g(i, j) * m(i, j);
            }
        break;
    }
    case Op::SumAll: {
        Matrix& dm = grads_[node.inputs[0]];
        const double gv = g(0, 0);
        for (std::size_t i = 0; i < dm.size(); ++i) dm.data()[i] += gv;
        break;
    }
    case Op::AddConst:
        accumulate(grads_[node.inputs[0]], g);
        break;
    case Op::ScaleConst: {
        Matrix& dm = grads_[node.inputs[0]];
        for (std::size_t i = 0; i < dm.size(); ++i)
            dm.data()[i] += g.data()[i] * node.scalar_arg;
        break;
    }
    case Op::DivByScalar: {
        const Matrix& a = nodes_[node.inputs[0]].value;
        const double s = nodes_[node.inputs[1]].value(0, 0);
        Matrix& da = grads_[node.inputs[0]];
        Matrix& ds = grads_[node.inputs[1]];
        double acc = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            da.data()[i] += g.data()[i] / s;
            acc += g.data()[i] * a.data()[i];
        }
        ds(0, 0) += -acc / (s * s);
        break;
    }
    case Op::ConcatCols: {
        std::size_t offset = 0;
        for (NodeId b : node.inputs) {
            Matrix& db = grads_[b];
            for (std::size_t j = 0; j < db.cols(); ++j) db(0, j) += g(0, offset + j);
            offset += db.cols();
        }
        break;
    }
    case Op::NegLogEntry: {
        const Matrix& p = nodes_[node.inputs[0]].value;
        const double pv = p(0, node.index_arg);
        if (pv > node.scalar_arg) // below the floor the clamp makes it constant
            grads_[node.inputs[0]](0, node.index_arg) += -g(0, 0) / pv;
        break;
    }
    case Op::RowEntropyMean: {
        const Matrix& m = nodes_[node.inputs[0]].value;
        Matrix& dm = grads_[node.inputs[0]];
        const double gv = g(0, 0) / static_cast<double>(m.rows());
        for (std::size_t i = 0; i < m.rows(); ++i)
            for (std::size_t j = 0; j < m.cols(); ++j) {
                const double p = std::max(m(i, j), kLogFloor);
                dm(i, j) += gv * (-(std::log(p) + 1.0));
            }
        break;
    }
    }
}

} // namespace mcgc
