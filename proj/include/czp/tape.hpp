// tape.hpp -- minimal reverse-mode differentiation over dense matrices.
//
// A Tape records matrix-valued nodes as the forward pass runs; backward()
// walks the nodes in reverse, accumulating adjoints in a fixed order so
// gradients are reproducible bit for bit. The op set is exactly what the
// surrogate needs, plus a fused node that evaluates the constant-zeros-
// poles response from head outputs with an analytic backward.

#pragma once

#include <vector>

#include <Eigen/Dense>

#include "czp/spectral.hpp"

namespace czp {

using Var = int;

class Tape {
  public:
    // leaves
    Var leaf(Eigen::MatrixXd value, bool needs_grad = true);

    // algebra
    Var matmul(Var a, Var b);      // A * B
    Var matmul_tn(Var a, Var b);   // A^T * B
    Var add(Var a, Var b);
    Var add_rowvec(Var a, Var bias);   // bias is 1 x C, broadcast over rows
    Var swish(Var a);                  // x * sigmoid(x), elementwise
    Var softmax_cols(Var a);           // softmax over rows, per column
    Var flatten_row(Var a);            // row-major flatten to 1 x (R*C)

    // constant-zeros-poles response from head outputs:
    //   c0 (1x1), z (1x2K: Re then Im), p (1x2K: Re then u with
    //   Im = eps + softplus(u)); output is 1 x M over the grid. Terms
    //   accumulate in canonical sorted root order, matching eval_log_s11.
    Var czp_response(Var c0, Var z, Var p, const Eigen::VectorXd& grid_values, double eps_pole);

    // scalar losses against a constant target (1 x M)
    Var mse_against(Var a, const Eigen::VectorXd& target);
    Var shrinkage_against(Var a, const Eigen::VectorXd& target, double shrink_a, double shrink_c);

    const Eigen::MatrixXd& value(Var v) const { return nodes_[static_cast<size_t>(v)].val; }
    const Eigen::MatrixXd& grad(Var v) const { return nodes_[static_cast<size_t>(v)].grad; }

    // seed d(scalar node)/d(itself) = 1 and propagate
    void backward(Var scalar_node);

    int size() const { return static_cast<int>(nodes_.size()); }

  private:
    enum class Op {
        leaf,
        matmul,
        matmul_tn,
        add,
        add_rowvec,
        swish,
        softmax_cols,
        flatten_row,
        czp_response,
        mse,
        shrinkage,
    };

    struct Node {
        Op op;
        Var a = -1, b = -1, c = -1;
        Eigen::MatrixXd val;
        Eigen::MatrixXd grad;
        bool needs_grad = true;
        // payload
        Eigen::VectorXd aux;       // loss target or frequency grid
        double p1 = 0.0, p2 = 0.0; // eps_pole or shrinkage (a, c)
        std::vector<int> zorder, porder;
    };

    Var push(Node node);
    void backward_node(Node& n);

    std::vector<Node> nodes_;
};

}  // namespace czp
