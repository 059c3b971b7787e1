#include "gmacn/tape.hpp"

#include <cmath>

#include "gmacn/errors.hpp"

namespace gmacn {

namespace {

void check_id(int id, std::size_t count, const char* op) {
    if (id < 0 || static_cast<std::size_t>(id) >= count) {
        throw ParamError(std::string(op) + ": invalid tape node id");
    }
}

void accumulate(Matrix& into, const Matrix& g) {
    if (into.size() == 0) {
        into = g;
        return;
    }
    for (std::size_t i = 0; i < into.size(); ++i) into.data()[i] += g.data()[i];
}

}  // namespace

Var Tape::push(Node node) {
    nodes_.push_back(std::move(node));
    return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::leaf(Matrix value) {
    return push(Node{OpKind::kLeaf, -1, -1, 0.0, std::move(value), {}});
}

Var Tape::constant(Matrix value) {
    return push(Node{OpKind::kConstant, -1, -1, 0.0, std::move(value), {}});
}

Var Tape::matmul(Var a, Var b) {
    check_id(a.id, nodes_.size(), "matmul");
    check_id(b.id, nodes_.size(), "matmul");
    return push(Node{OpKind::kMatMul, a.id, b.id, 0.0, gmacn::matmul(val(a.id), val(b.id)), {}});
}

Var Tape::add(Var a, Var b) {
    return push(Node{OpKind::kAdd, a.id, b.id, 0.0, gmacn::add(val(a.id), val(b.id)), {}});
}

Var Tape::sub(Var a, Var b) {
    return push(Node{OpKind::kSub, a.id, b.id, 0.0, gmacn::sub(val(a.id), val(b.id)), {}});
}

Var Tape::hadamard(Var a, Var b) {
    return push(Node{OpKind::kHadamard, a.id, b.id, 0.0, gmacn::hadamard(val(a.id), val(b.id)), {}});
}

Var Tape::transpose(Var a) {
    return push(Node{OpKind::kTranspose, a.id, -1, 0.0, gmacn::transpose(val(a.id)), {}});
}

Var Tape::relu(Var a) {
    return push(Node{OpKind::kRelu, a.id, -1, 0.0, gmacn::relu(val(a.id)), {}});
}

Var Tape::softmax_rows(Var a) {
    return push(Node{OpKind::kSoftmaxRows, a.id, -1, 0.0, gmacn::softmax_rows(val(a.id)), {}});
}

Var Tape::sum_all(Var a) {
    Matrix s(1, 1);
    s(0, 0) = gmacn::sum_all(val(a.id));
    return push(Node{OpKind::kSumAll, a.id, -1, 0.0, std::move(s), {}});
}

Var Tape::scale(Var a, double s) {
    return push(Node{OpKind::kScale, a.id, -1, s, gmacn::scale(val(a.id), s), {}});
}

Var Tape::add_const(Var a, double s) {
    Matrix v = val(a.id);
    for (double& x : v.data()) x += s;
    return push(Node{OpKind::kAddConst, a.id, -1, s, std::move(v), {}});
}

Var Tape::rsub_const(double s, Var a) {
    Matrix v = val(a.id);
    for (double& x : v.data()) x = s - x;
    return push(Node{OpKind::kRsubConst, a.id, -1, s, std::move(v), {}});
}

Var Tape::log(Var a) {
    Matrix v = val(a.id);
    for (double& x : v.data()) x = std::log(x < kLogFloor ? kLogFloor : x);
    return push(Node{OpKind::kLog, a.id, -1, 0.0, std::move(v), {}});
}

Var Tape::pow_const(Var a, double exponent) {
    Matrix v = val(a.id);
    for (double& x : v.data()) x = std::pow(x, exponent);
    if (!v.all_finite()) {
        throw Error("pow_const: produced a non-finite entry");
    }
    return push(Node{OpKind::kPowConst, a.id, -1, exponent, std::move(v), {}});
}

Var Tape::flatten(Var a) {
    const Matrix& in = val(a.id);
    Matrix v(1, in.size());
    v.data() = in.data();
    return push(Node{OpKind::kFlatten, a.id, -1, 0.0, std::move(v), {}});
}

const Matrix& Tape::value(Var v) const {
    check_id(v.id, nodes_.size(), "value");
    return nodes_[static_cast<std::size_t>(v.id)].value;
}

const Matrix& Tape::grad(Var v) const {
    check_id(v.id, nodes_.size(), "grad");
    const Node& n = nodes_[static_cast<std::size_t>(v.id)];
    if (n.adjoint.size() == 0) {
        throw ParamError("grad: no adjoint recorded; call backward() first");
    }
    return n.adjoint;
}

void Tape::backward(Var output) {
    check_id(output.id, nodes_.size(), "backward");
    if (value(output).rows() != 1 || value(output).cols() != 1) {
        throw ParamError("backward: output must be a 1x1 scalar, got " +
                         value(output).shape_str());
    }

    for (Node& n : nodes_) {
        n.adjoint = Matrix(n.value.rows(), n.value.cols(), 0.0);
    }
    nodes_[static_cast<std::size_t>(output.id)].adjoint(0, 0) = 1.0;

    for (int i = output.id; i >= 0; --i) {
        Node& n = nodes_[static_cast<std::size_t>(i)];
        const Matrix& g = n.adjoint;
        switch (n.kind) {
            case OpKind::kLeaf:
            case OpKind::kConstant:
                break;
            case OpKind::kMatMul: {
                Node& a = nodes_[static_cast<std::size_t>(n.a)];
                Node& b = nodes_[static_cast<std::size_t>(n.b)];
                accumulate(a.adjoint, gmacn::matmul(g, gmacn::transpose(b.value)));
                accumulate(b.adjoint, gmacn::matmul(gmacn::transpose(a.value), g));
                break;
            }
            case OpKind::kAdd: {
                accumulate(nodes_[static_cast<std::size_t>(n.a)].adjoint, g);
                accumulate(nodes_[static_cast<std::size_t>(n.b)].adjoint, g);
                break;
            }
            case OpKind::kSub: {
                accumulate(nodes_[static_cast<std::size_t>(n.a)].adjoint, g);
                accumulate(nodes_[static_cast<std::size_t>(n.b)].adjoint, gmacn::scale(g, -1.0));
                break;
            }
            case OpKind::kHadamard: {
                Node& a = nodes_[static_cast<std::size_t>(n.a)];
                Node& b = nodes_[static_cast<std::size_t>(n.b)];
                accumulate(a.adjoint, gmacn::hadamard(g, b.value));
                accumulate(b.adjoint, gmacn::hadamard(g, a.value));
                break;
            }
            case OpKind::kTranspose: {
                accumulate(nodes_[static_cast<std::size_t>(n.a)].adjoint, gmacn::transpose(g));
                break;
            }
            case OpKind::kRelu: {
                Node& a = nodes_[static_cast<std::size_t>(n.a)];
                Matrix ga(a.value.rows(), a.value.cols());
                for (std::size_t k = 0; k < ga.size(); ++k) {
                    ga.data()[k] = a.value.data()[k] > 0.0 ? g.data()[k] : 0.0;
                }
                accumulate(a.adjoint, ga);
                break;
            }
            case OpKind::kSoftmaxRows: {
                // dx = y * (dy - rowsum(dy * y))
                Node& a = nodes_[static_cast<std::size_t>(n.a)];
                const Matrix& y = n.value;
                Matrix ga(y.rows(), y.cols());
                for (std::size_t r = 0; r < y.rows(); ++r) {
                    double dot = 0.0;
                    for (std::size_t c = 0; c < y.cols(); ++c) dot += g(r, c) * y(r, c);
                    for (std::size_t c = 0; c < y.cols(); ++c) {
                        ga(r, c) = y(r, c) * (g(r, c) - dot);
                    }
                }
                accumulate(a.adjoint, ga);
                break;
            }
            case OpKind::kSumAll: {
                Node& a = nodes_[static_cast<std::size_t>(n.a)];
                accumulate(a.adjoint, Matrix(a.value.rows(), a.value.cols(), g(0, 0)));
                break;
            }
            case OpKind::kScale: {
                accumulate(nodes_[static_cast<std::size_t>(n.a)].adjoint,
                           gmacn::scale(g, n.param));
                break;
            }
            case OpKind::kAddConst: {
                accumulate(nodes_[static_cast<std::size_t>(n.a)].adjoint, g);
                break;
            }
            case OpKind::kRsubConst: {
                accumulate(nodes_[static_cast<std::size_t>(n.a)].adjoint, gmacn::scale(g, -1.0));
                break;
            }
            case OpKind::kLog: {
                Node& a = nodes_[static_cast<std::size_t>(n.a)];
                Matrix ga(a.value.rows(), a.value.cols());
                for (std::size_t k = 0; k < ga.size(); ++k) {
                    double x = a.value.data()[k];
                    if (x < kLogFloor) x = kLogFloor;
                    ga.data()[k] = g.data()[k] / x;
                }
                accumulate(a.adjoint, ga);
                break;
            }
            case OpKind::kPowConst: {
                Node& a = nodes_[static_cast<std::size_t>(n.a)];
                if (n.param == 0.0) break;  // derivative of a constant
                Matrix ga(a.value.rows(), a.value.cols());
                for (std::size_t k = 0; k < ga.size(); ++k) {
                    ga.data()[k] =
                        g.data()[k] * n.param * std::pow(a.value.data()[k], n.param - 1.0);
                }
                accumulate(a.adjoint, ga);
                break;
            }
            case OpKind::kFlatten: {
                Node& a = nodes_[static_cast<std::size_t>(n.a)];
                Matrix ga(a.value.rows(), a.value.cols());
                ga.data() = g.data();
                accumulate(a.adjoint, ga);
                break;
            }
        }
    }
}

}  // namespace gmacn
