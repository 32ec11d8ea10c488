#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

namespace finn::ad {

using Mat = Eigen::MatrixXd;

/// Elementwise functions with their derivative orders. The VJP of order k is
/// a Hadamard product with order k+1, so gradients of gradients stay on the
/// tape as long as the next order exists.
enum class Fn : std::uint8_t {
    Silu0, Silu1, Silu2, Silu3,
    Softplus,            // log(1 + e^x)
    Sigmoid, Sigmoid1, Sigmoid2, Sigmoid3,
};

double fn_eval(Fn f, double x);

/// Reverse-mode tape over dense matrices. Values are eagerly evaluated;
/// columns are independent batch samples, so per-sample quantities are
/// 1 x B rows and reductions over the batch are explicit ops. backward()
/// builds the cotangent graph out of the same ops, which makes repeated
/// differentiation (input gradients, Hessian-vector products, and parameter
/// gradients of losses containing those) a matter of calling it again.
class Tape {
  public:
    int leaf(Mat value, bool needs_grad = false);
    int gemm(int a, int b, bool trans_a = false, bool trans_b = false);
    int add(int a, int b);
    int sub(int a, int b);
    int scale(int a, double c);
    int hadamard(int a, int b);
    int unary(Fn f, int a);
    int sum_rows(int a);                    // d x B -> 1 x B
    int sum_cols(int a);                    // d x B -> d x 1
    int rep_rows(int a, int rows);          // 1 x B -> rows x B
    int rep_cols(int a, int cols);          // d x 1 -> d x cols
    int slice_rows(int a, int r0, int len);
    int pad_rows(int a, int r0, int rows);  // scatter back into a taller matrix
    int sum_all(int a);                     // -> 1 x 1
    int splat(int a, int rows, int cols);   // 1 x 1 -> rows x cols

    const Mat& val(int id) const { return nodes_[id].val; }
    bool needs_grad(int id) const { return nodes_[id].needs_grad; }
    std::size_t size() const { return nodes_.size(); }

    /// Reverse pass from a 1x1 node. Returns, for every node id present at
    /// call time, the id of its cotangent node (-1 where no gradient flows).
    std::vector<int> backward(int out);

  private:
    enum class Op : std::uint8_t {
        Leaf, Gemm, Add, Sub, Scale, Hadamard, Unary,
        SumRows, SumCols, RepRows, RepCols, SliceRows, PadRows, SumAll, Splat,
    };
    struct Node {
        Op op;
        int a = -1;
        int b = -1;
        Fn fn = Fn::Silu0;
        bool ta = false, tb = false;
        double c = 0.0;
        int i0 = 0, i1 = 0;
        bool needs_grad = false;
        Mat val;
    };

    int push(Node n);
    std::vector<Node> nodes_;
};

}  // namespace finn::ad
