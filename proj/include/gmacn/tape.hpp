#pragma once

#include <cstddef>
#include <vector>

#include "gmacn/matrix.hpp"

namespace gmacn {

// Handle to a node recorded on a Tape.
struct Var {
    int id = -1;
};

enum class OpKind {
    kLeaf,      // differentiable input (parameter)
    kConstant,  // non-differentiable input (data, adjacency, one-hot)
    kMatMul,
    kAdd,
    kSub,
    kHadamard,
    kTranspose,
    kRelu,
    kSoftmaxRows,
    kSumAll,     // full reduction to 1x1
    kScale,      // s * a
    kAddConst,   // a + s
    kRsubConst,  // s - a
    kLog,        // elementwise log, input clamped to >= kLogFloor
    kPowConst,   // a^s elementwise
    kFlatten,    // row-major reshape to 1 x (rows*cols)
};

// Dynamic reverse-mode tape over matrix primitives. Nodes are appended in
// execution order, so input ids always precede the node that uses them and a
// single reverse index sweep visits every node exactly once.
//
// A tape is single-threaded by contract: one tape per training or
// explanation job.
class Tape {
public:
    static constexpr double kLogFloor = 1e-300;

    Var leaf(Matrix value);
    Var constant(Matrix value);

    Var matmul(Var a, Var b);
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var hadamard(Var a, Var b);
    Var transpose(Var a);
    Var relu(Var a);
    Var softmax_rows(Var a);
    Var sum_all(Var a);
    Var scale(Var a, double s);
    Var add_const(Var a, double s);
    Var rsub_const(double s, Var a);
    Var log(Var a);
    Var pow_const(Var a, double exponent);
    Var flatten(Var a);

    const Matrix& value(Var v) const;

    // Adjoint of any node w.r.t. the scalar passed to the last backward()
    // call. Interior nodes carry adjoints too, which is what the saliency
    // computations consume.
    const Matrix& grad(Var v) const;

    // Seeds d(output)/d(output) = 1 and propagates adjoints in reverse
    // recording order. `output` must hold a 1x1 value. Resets all previous
    // adjoints first.
    void backward(Var output);

    std::size_t node_count() const { return nodes_.size(); }

private:
    struct Node {
        OpKind kind;
        int a = -1;
        int b = -1;
        double param = 0.0;
        Matrix value;
        Matrix adjoint;
    };

    Var push(Node node);
    const Matrix& val(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }

    std::vector<Node> nodes_;
};

}  // namespace gmacn
