#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "sofa/tensor.hpp"

namespace sofa::ad {

struct GraphError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

class Node;
using NodePtr = std::shared_ptr<Node>;

/// One vertex of the reverse-mode tape. `vjp` receives this node's adjoint
/// and accumulates vector-Jacobian products into `padj` (one pre-zeroed
/// tensor per parent, same order as `parents`).
class Node {
public:
    Tensor value;
    Tensor grad;
    bool grad_enabled = true;  // frozen parameters keep grad == 0
    std::string op = "leaf";
    std::vector<NodePtr> parents;
    std::function<void(const Node& self, const Tensor& adj, std::vector<Tensor>& padj)> vjp;

    explicit Node(Tensor v) : value(std::move(v)), grad(Tensor::zeros(value.shape)) {}

    bool is_scalar() const { return value.size() == 1; }
    void zero_grad() { grad.fill(0.0); }
};

NodePtr make_leaf(Tensor value, bool grad_enabled = true);

/// Accumulates d(root)/d(node) into every reachable node's grad. Calling
/// twice without zeroing doubles the grads. Root must be scalar.
void backward(const NodePtr& root);

// ---- primitive ops ------------------------------------------------------

NodePtr matmul(const NodePtr& a, const NodePtr& b);
// same-shape add, or bias broadcast: a[n,d] + b[d]
NodePtr add(const NodePtr& a, const NodePtr& b);
NodePtr sub(const NodePtr& a, const NodePtr& b);
NodePtr mul(const NodePtr& a, const NodePtr& b);  // elementwise, same shape
NodePtr affine(const NodePtr& a, double scale, double shift);  // scale*a + shift
NodePtr scale(const NodePtr& a, double s);
NodePtr sigmoid(const NodePtr& a);
NodePtr tanh_op(const NodePtr& a);
NodePtr relu(const NodePtr& a);
NodePtr exp_op(const NodePtr& a);
NodePtr log_op(const NodePtr& a);
NodePtr sum_all(const NodePtr& a);
NodePtr mean_all(const NodePtr& a);
// 2-d reductions; axis 0 sums rows away -> [cols], axis 1 -> [rows]
NodePtr sum_axis(const NodePtr& a, int axis);
NodePtr mean_axis(const NodePtr& a, int axis);
NodePtr concat_cols(const NodePtr& a, const NodePtr& b);          // [n,da]+[n,db] -> [n,da+db]
NodePtr concat_rows(const NodePtr& a, const NodePtr& b);          // [na,d]+[nb,d] -> [na+nb,d]
NodePtr slice_cols(const NodePtr& a, std::size_t lo, std::size_t hi);
// x[batch,T,d] -> [batch,d] at timestep t
NodePtr slice_time(const NodePtr& x, std::size_t t);
NodePtr l2_normalize_rows(const NodePtr& a, double eps = 1e-12);
NodePtr softmax_rows(const NodePtr& a);
NodePtr log_softmax_rows(const NodePtr& a);

// generic escape hatch for fused ops (losses build on this)
NodePtr make_op(Tensor value, std::vector<NodePtr> parents, std::string op,
                std::function<void(const Node&, const Tensor&, std::vector<Tensor>&)> vjp);

}  // namespace sofa::ad
