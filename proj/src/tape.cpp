#include "finn/tape.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>

namespace finn::ad {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

double fn_eval(Fn f, double x) {
    const double s = sigmoid(x);
    const double s1 = s * (1.0 - s);
    const double s2 = s1 * (1.0 - 2.0 * s);
    switch (f) {
        case Fn::Silu0: return x * s;
        case Fn::Silu1: return s + x * s1;
        case Fn::Silu2: return 2.0 * s1 + x * s2;
        case Fn::Silu3: return 3.0 * s2 + x * (s2 * (1.0 - 2.0 * s) - 2.0 * s1 * s1);
        case Fn::Softplus:
            // stable form: max(x,0) + log1p(exp(-|x|))
            return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
        case Fn::Sigmoid: return s;
        case Fn::Sigmoid1: return s1;
        case Fn::Sigmoid2: return s2;
        case Fn::Sigmoid3: return s2 * (1.0 - 2.0 * s) - 2.0 * s1 * s1;
    }
    return 0.0;
}

namespace {

Fn fn_next(Fn f) {
    switch (f) {
        case Fn::Silu0: return Fn::Silu1;
        case Fn::Silu1: return Fn::Silu2;
        case Fn::Silu2: return Fn::Silu3;
        case Fn::Softplus: return Fn::Sigmoid;
        case Fn::Sigmoid: return Fn::Sigmoid1;
        case Fn::Sigmoid1: return Fn::Sigmoid2;
        case Fn::Sigmoid2: return Fn::Sigmoid3;
        default: throw std::logic_error("tape: derivative order not implemented");
    }
}

}  // namespace

int Tape::push(Node n) {
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
}

int Tape::leaf(Mat value, bool needs_grad) {
    Node n;
    n.op = Op::Leaf;
    n.needs_grad = needs_grad;
    n.val = std::move(value);
    return push(std::move(n));
}

int Tape::gemm(int a, int b, bool trans_a, bool trans_b) {
    Node n;
    n.op = Op::Gemm;
    n.a = a;
    n.b = b;
    n.ta = trans_a;
    n.tb = trans_b;
    n.needs_grad = nodes_[a].needs_grad || nodes_[b].needs_grad;
    const Mat& A = nodes_[a].val;
    const Mat& B = nodes_[b].val;
    if (!trans_a && !trans_b) n.val.noalias() = A * B;
    else if (trans_a && !trans_b) n.val.noalias() = A.transpose() * B;
    else if (!trans_a && trans_b) n.val.noalias() = A * B.transpose();
    else n.val.noalias() = A.transpose() * B.transpose();
    return push(std::move(n));
}

int Tape::add(int a, int b) {
    Node n;
    n.op = Op::Add;
    n.a = a;
    n.b = b;
    n.needs_grad = nodes_[a].needs_grad || nodes_[b].needs_grad;
    n.val = nodes_[a].val + nodes_[b].val;
    return push(std::move(n));
}

int Tape::sub(int a, int b) {
    Node n;
    n.op = Op::Sub;
    n.a = a;
    n.b = b;
    n.needs_grad = nodes_[a].needs_grad || nodes_[b].needs_grad;
    n.val = nodes_[a].val - nodes_[b].val;
    return push(std::move(n));
}

int Tape::scale(int a, double c) {
    Node n;
    n.op = Op::Scale;
    n.a = a;
    n.c = c;
    n.needs_grad = nodes_[a].needs_grad;
    n.val = nodes_[a].val * c;
    return push(std::move(n));
}

int Tape::hadamard(int a, int b) {
    Node n;
    n.op = Op::Hadamard;
    n.a = a;
    n.b = b;
    n.needs_grad = nodes_[a].needs_grad || nodes_[b].needs_grad;
    n.val = nodes_[a].val.cwiseProduct(nodes_[b].val);
    return push(std::move(n));
}

int Tape::unary(Fn f, int a) {
    Node n;
    n.op = Op::Unary;
    n.a = a;
    n.fn = f;
    n.needs_grad = nodes_[a].needs_grad;
    n.val = nodes_[a].val.unaryExpr([f](double x) { return fn_eval(f, x); });
    return push(std::move(n));
}

int Tape::sum_rows(int a) {
    Node n;
    n.op = Op::SumRows;
    n.a = a;
    n.needs_grad = nodes_[a].needs_grad;
    n.val = nodes_[a].val.colwise().sum();
    return push(std::move(n));
}

int Tape::sum_cols(int a) {
    Node n;
    n.op = Op::SumCols;
    n.a = a;
    n.needs_grad = nodes_[a].needs_grad;
    n.val = nodes_[a].val.rowwise().sum();
    return push(std::move(n));
}

int Tape::rep_rows(int a, int rows) {
    assert(nodes_[a].val.rows() == 1);
    Node n;
    n.op = Op::RepRows;
    n.a = a;
    n.i0 = rows;
    n.needs_grad = nodes_[a].needs_grad;
    n.val = nodes_[a].val.replicate(rows, 1);
    return push(std::move(n));
}

int Tape::rep_cols(int a, int cols) {
    assert(nodes_[a].val.cols() == 1);
    Node n;
    n.op = Op::RepCols;
    n.a = a;
    n.i0 = cols;
    n.needs_grad = nodes_[a].needs_grad;
    n.val = nodes_[a].val.replicate(1, cols);
    return push(std::move(n));
}

int Tape::slice_rows(int a, int r0, int len) {
    Node n;
    n.op = Op::SliceRows;
    n.a = a;
    n.i0 = r0;
    n.i1 = len;
    n.needs_grad = nodes_[a].needs_grad;
    n.val = nodes_[a].val.middleRows(r0, len);
    return push(std::move(n));
}

int Tape::pad_rows(int a, int r0, int rows) {
    Node n;
    n.op = Op::PadRows;
    n.a = a;
    n.i0 = r0;
    n.i1 = rows;
    n.needs_grad = nodes_[a].needs_grad;
    n.val = Mat::Zero(rows, nodes_[a].val.cols());
    n.val.middleRows(r0, nodes_[a].val.rows()) = nodes_[a].val;
    return push(std::move(n));
}

int Tape::sum_all(int a) {
    Node n;
    n.op = Op::SumAll;
    n.a = a;
    n.needs_grad = nodes_[a].needs_grad;
    n.val = Mat::Constant(1, 1, nodes_[a].val.sum());
    return push(std::move(n));
}

int Tape::splat(int a, int rows, int cols) {
    assert(nodes_[a].val.size() == 1);
    Node n;
    n.op = Op::Splat;
    n.a = a;
    n.i0 = rows;
    n.i1 = cols;
    n.needs_grad = nodes_[a].needs_grad;
    n.val = Mat::Constant(rows, cols, nodes_[a].val(0, 0));
    return push(std::move(n));
}

std::vector<int> Tape::backward(int out) {
    if (nodes_[out].val.size() != 1)
        throw std::invalid_argument("Tape::backward: output must be a scalar node");
    const auto n_at_call = static_cast<int>(nodes_.size());
    std::vector<int> cot(n_at_call, -1);
    cot[out] = leaf(Mat::Ones(1, 1));

    auto accum = [&](int target, int g) {
        if (!nodes_[target].needs_grad) return;
        cot[target] = cot[target] < 0 ? g : add(cot[target], g);
    };

    for (int i = out; i >= 0; --i) {
        const int g = cot[i];
        if (g < 0) continue;
        // copy fields; nodes_ may reallocate while emitting VJP ops
        const Op op = nodes_[i].op;
        const int a = nodes_[i].a, b = nodes_[i].b;
        const bool ta = nodes_[i].ta, tb = nodes_[i].tb;
        const Fn fn = nodes_[i].fn;
        const double c = nodes_[i].c;
        const int i0 = nodes_[i].i0, i1 = nodes_[i].i1;
        switch (op) {
            case Op::Leaf:
                break;
            case Op::Gemm:
                if (!ta && !tb) {
                    if (nodes_[a].needs_grad) accum(a, gemm(g, b, false, true));
                    if (nodes_[b].needs_grad) accum(b, gemm(a, g, true, false));
                } else if (ta && !tb) {
                    if (nodes_[a].needs_grad) accum(a, gemm(b, g, false, true));
                    if (nodes_[b].needs_grad) accum(b, gemm(a, g, false, false));
                } else if (!ta && tb) {
                    if (nodes_[a].needs_grad) accum(a, gemm(g, b, false, false));
                    if (nodes_[b].needs_grad) accum(b, gemm(g, a, true, false));
                } else {
                    if (nodes_[a].needs_grad) accum(a, gemm(b, g, true, true));
                    if (nodes_[b].needs_grad) accum(b, gemm(g, a, true, true));
                }
                break;
            case Op::Add:
                accum(a, g);
                accum(b, g);
                break;
            case Op::Sub:
                accum(a, g);
                if (nodes_[b].needs_grad) accum(b, scale(g, -1.0));
                break;
            case Op::Scale:
                if (nodes_[a].needs_grad) accum(a, scale(g, c));
                break;
            case Op::Hadamard:
                if (nodes_[a].needs_grad) accum(a, hadamard(g, b));
                if (nodes_[b].needs_grad) accum(b, hadamard(g, a));
                break;
            case Op::Unary:
                if (nodes_[a].needs_grad) accum(a, hadamard(g, unary(fn_next(fn), a)));
                break;
            case Op::SumRows:
                if (nodes_[a].needs_grad)
                    accum(a, rep_rows(g, static_cast<int>(nodes_[a].val.rows())));
                break;
            case Op::SumCols:
                if (nodes_[a].needs_grad)
                    accum(a, rep_cols(g, static_cast<int>(nodes_[a].val.cols())));
                break;
            case Op::RepRows:
                if (nodes_[a].needs_grad) accum(a, sum_rows(g));
                break;
            case Op::RepCols:
                if (nodes_[a].needs_grad) accum(a, sum_cols(g));
                break;
            case Op::SliceRows:
                if (nodes_[a].needs_grad)
                    accum(a, pad_rows(g, i0, static_cast<int>(nodes_[a].val.rows())));
                break;
            case Op::PadRows:
                if (nodes_[a].needs_grad) accum(a, slice_rows(g, i0, static_cast<int>(nodes_[a].val.rows())));
                break;
            case Op::SumAll:
                if (nodes_[a].needs_grad)
                    accum(a, splat(g, static_cast<int>(nodes_[a].val.rows()),
                                   static_cast<int>(nodes_[a].val.cols())));
                break;
            case Op::Splat:
                if (nodes_[a].needs_grad) accum(a, sum_all(g));
                break;
        }
    }
    return cot;
}

}  // namespace finn::ad
