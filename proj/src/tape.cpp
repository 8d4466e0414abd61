#include "czp/tape.hpp"

#include <algorithm>
#include <numeric>

#include "czp/fit.hpp"

namespace czp {

namespace {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::vector<int> sort_roots(const double* re, const double* im, int k) {
    std::vector<int> idx(static_cast<size_t>(k));
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
        if (re[a] != re[b]) return re[a] < re[b];
        return im[a] < im[b];
    });
    return idx;
}

}  // namespace

Var Tape::push(Node node) {
    node.grad = Eigen::MatrixXd::Zero(node.val.rows(), node.val.cols());
    nodes_.push_back(std::move(node));
    return static_cast<Var>(nodes_.size() - 1);
}

Var Tape::leaf(Eigen::MatrixXd value, bool needs_grad) {
    Node n;
    n.op = Op::leaf;
    n.val = std::move(value);
    n.needs_grad = needs_grad;
    return push(std::move(n));
}

Var Tape::matmul(Var a, Var b) {
    Node n;
    n.op = Op::matmul;
    n.a = a;
    n.b = b;
    n.val.noalias() = value(a) * value(b);
    return push(std::move(n));
}

Var Tape::matmul_tn(Var a, Var b) {
    Node n;
    n.op = Op::matmul_tn;
    n.a = a;
    n.b = b;
    n.val.noalias() = value(a).transpose() * value(b);
    return push(std::move(n));
}

Var Tape::add(Var a, Var b) {
    Node n;
    n.op = Op::add;
    n.a = a;
    n.b = b;
    n.val = value(a) + value(b);
    return push(std::move(n));
}

Var Tape::add_rowvec(Var a, Var bias) {
    Node n;
    n.op = Op::add_rowvec;
    n.a = a;
    n.b = bias;
    n.val = value(a).rowwise() + value(bias).row(0);
    return push(std::move(n));
}

Var Tape::swish(Var a) {
    Node n;
    n.op = Op::swish;
    n.a = a;
    const Eigen::MatrixXd& x = value(a);
    n.val = x.unaryExpr([](double v) { return v * sigmoid(v); });
    return push(std::move(n));
}

Var Tape::softmax_cols(Var a) {
    Node n;
    n.op = Op::softmax_cols;
    n.a = a;
    const Eigen::MatrixXd& x = value(a);
    n.val.resize(x.rows(), x.cols());
    for (int j = 0; j < x.cols(); ++j) {
        const double m = x.col(j).maxCoeff();
        Eigen::VectorXd e = (x.col(j).array() - m).exp();
        n.val.col(j) = e / e.sum();
    }
    return push(std::move(n));
}

Var Tape::flatten_row(Var a) {
    Node n;
    n.op = Op::flatten_row;
    n.a = a;
    const Eigen::MatrixXd& x = value(a);
    n.val.resize(1, x.size());
    int k = 0;
    for (int r = 0; r < x.rows(); ++r)
        for (int c = 0; c < x.cols(); ++c) n.val(0, k++) = x(r, c);
    return push(std::move(n));
}

Var Tape::czp_response(Var c0, Var z, Var p, const Eigen::VectorXd& grid_values, double eps_pole) {
    require(value(c0).size() == 1, Errc::invalid_argument, "czp_response: c0 must be scalar");
    require(value(z).size() == value(p).size() && value(z).size() % 2 == 0,
            Errc::invalid_argument, "czp_response: z/p must be 1x2K");
    const int k = static_cast<int>(value(z).size()) / 2;
    Node n;
    n.op = Op::czp_response;
    n.a = c0;
    n.b = z;
    n.c = p;
    n.aux = grid_values;
    n.p1 = eps_pole;

    const double* zre = value(z).data();       // row vector, column-major = flat
    const double* zim = zre + k;
    const double* pre = value(p).data();
    const double* pu = pre + k;
    std::vector<double> pim(static_cast<size_t>(k));
    for (int i = 0; i < k; ++i) pim[static_cast<size_t>(i)] = eps_pole + softplus(pu[i]);
    n.zorder = sort_roots(zre, zim, k);
    n.porder = sort_roots(pre, pim.data(), k);

    const int m = static_cast<int>(grid_values.size());
    n.val.resize(1, m);
    const double base = value(c0)(0, 0);
    for (int j = 0; j < m; ++j) {
        const double w = grid_values[j];
        double acc = 0.0;
        for (int i : n.zorder) {
            const double dr = w - zre[i];
            acc += 0.5 * std::log(std::max(dr * dr + zim[i] * zim[i], 1e-300));
        }
        for (int i : n.porder) {
            const double dr = w - pre[i];
            acc -= 0.5 * std::log(std::max(dr * dr + pim[static_cast<size_t>(i)] * pim[static_cast<size_t>(i)], 1e-300));
        }
        n.val(0, j) = base + acc;
    }
    return push(std::move(n));
}

Var Tape::mse_against(Var a, const Eigen::VectorXd& target) {
    require(value(a).rows() == 1 && value(a).cols() == target.size(), Errc::invalid_argument,
            "mse_against: shape mismatch");
    Node n;
    n.op = Op::mse;
    n.a = a;
    n.aux = target;
    const Eigen::RowVectorXd diff = value(a).row(0) - target.transpose();
    n.val = Eigen::MatrixXd::Constant(1, 1, diff.squaredNorm() / target.size());
    return push(std::move(n));
}

Var Tape::shrinkage_against(Var a, const Eigen::VectorXd& target, double shrink_a,
                            double shrink_c) {
    require(value(a).rows() == 1 && value(a).cols() == target.size(), Errc::invalid_argument,
            "shrinkage_against: shape mismatch");
    Node n;
    n.op = Op::shrinkage;
    n.a = a;
    n.aux = target;
    n.p1 = shrink_a;
    n.p2 = shrink_c;
    double acc = 0.0;
    for (int j = 0; j < target.size(); ++j) {
        const double l = std::abs(value(a)(0, j) - target[j]);
        acc += l * l / (1.0 + std::exp(shrink_a * (shrink_c - l)));
    }
    n.val = Eigen::MatrixXd::Constant(1, 1, acc / target.size());
    return push(std::move(n));
}

void Tape::backward(Var scalar_node) {
    Node& out = nodes_[static_cast<size_t>(scalar_node)];
    require(out.val.size() == 1, Errc::invalid_argument, "backward: seed node must be scalar");
    out.grad(0, 0) = 1.0;
    for (int i = scalar_node; i >= 0; --i) backward_node(nodes_[static_cast<size_t>(i)]);
}

void Tape::backward_node(Node& n) {
    if (n.op == Op::leaf) return;
    if (n.grad.isZero(0.0)) return;
    Eigen::MatrixXd& g = n.grad;
    auto& A = nodes_[static_cast<size_t>(n.a)];
    switch (n.op) {
        case Op::matmul: {
            auto& B = nodes_[static_cast<size_t>(n.b)];
            A.grad.noalias() += g * B.val.transpose();
            B.grad.noalias() += A.val.transpose() * g;
            break;
        }
        case Op::matmul_tn: {
            auto& B = nodes_[static_cast<size_t>(n.b)];
            A.grad.noalias() += B.val * g.transpose();
            B.grad.noalias() += A.val * g;
            break;
        }
        case Op::add: {
            auto& B = nodes_[static_cast<size_t>(n.b)];
            A.grad += g;
            B.grad += g;
            break;
        }
        case Op::add_rowvec: {
            auto& B = nodes_[static_cast<size_t>(n.b)];
            A.grad += g;
            B.grad.row(0) += g.colwise().sum();
            break;
        }
        case Op::swish: {
            const Eigen::MatrixXd& x = A.val;
            for (int c = 0; c < x.cols(); ++c)
                for (int r = 0; r < x.rows(); ++r) {
                    const double s = sigmoid(x(r, c));
                    A.grad(r, c) += g(r, c) * s * (1.0 + x(r, c) * (1.0 - s));
                }
            break;
        }
        case Op::softmax_cols: {
            for (int j = 0; j < n.val.cols(); ++j) {
                const double dot = n.val.col(j).dot(g.col(j));
                A.grad.col(j) += n.val.col(j).cwiseProduct(g.col(j) -
                                                           Eigen::VectorXd::Constant(n.val.rows(), dot));
            }
            break;
        }
        case Op::flatten_row: {
            int k = 0;
            for (int r = 0; r < A.val.rows(); ++r)
                for (int c = 0; c < A.val.cols(); ++c) A.grad(r, c) += g(0, k++);
            break;
        }
        case Op::czp_response: {
            auto& Z = nodes_[static_cast<size_t>(n.b)];
            auto& P = nodes_[static_cast<size_t>(n.c)];
            const int k = static_cast<int>(Z.val.size()) / 2;
            const double* zre = Z.val.data();
            const double* zim = zre + k;
            const double* pre = P.val.data();
            const double* pu = pre + k;
            double* gzre = Z.grad.data();
            double* gzim = gzre + k;
            double* gpre = P.grad.data();
            double* gpu = gpre + k;
            for (int j = 0; j < n.aux.size(); ++j) {
                const double gj = g(0, j);
                if (gj == 0.0) continue;
                const double w = n.aux[j];
                A.grad(0, 0) += gj;
                for (int i = 0; i < k; ++i) {
                    const double dzr = w - zre[i];
                    const double dz2 = std::max(dzr * dzr + zim[i] * zim[i], 1e-300);
                    gzre[i] += gj * (-dzr / dz2);
                    gzim[i] += gj * (zim[i] / dz2);
                    const double pim = n.p1 + softplus(pu[i]);
                    const double dpr = w - pre[i];
                    const double dp2 = dpr * dpr + pim * pim;
                    gpre[i] += gj * (dpr / dp2);
                    gpu[i] += gj * (-pim / dp2 * sigmoid(pu[i]));
                }
            }
            break;
        }
        case Op::mse: {
            const double gj = g(0, 0);
            const int m = static_cast<int>(n.aux.size());
            for (int j = 0; j < m; ++j)
                A.grad(0, j) += gj * 2.0 * (A.val(0, j) - n.aux[j]) / m;
            break;
        }
        case Op::shrinkage: {
            const double gj = g(0, 0);
            const int m = static_cast<int>(n.aux.size());
            for (int j = 0; j < m; ++j) {
                const double r = A.val(0, j) - n.aux[j];
                const double l = std::abs(r);
                const double s = sigmoid(n.p1 * (l - n.p2));
                const double dl = 2.0 * l * s + n.p1 * l * l * s * (1.0 - s);
                A.grad(0, j) += gj * (r > 0.0 ? dl : (r < 0.0 ? -dl : 0.0)) / m;
            }
            break;
        }
        case Op::leaf:
            break;
    }
}

}  // namespace czp
