#include "sofa/graph.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "sofa/kernels.hpp"

namespace sofa::ad {

NodePtr make_leaf(Tensor value, bool grad_enabled) {
    auto n = std::make_shared<Node>(std::move(value));
    n->grad_enabled = grad_enabled;
    return n;
}

NodePtr make_op(Tensor value, std::vector<NodePtr> parents, std::string op,
                std::function<void(const Node&, const Tensor&, std::vector<Tensor>&)> vjp) {
    auto n = std::make_shared<Node>(std::move(value));
    n->parents = std::move(parents);
    n->op = std::move(op);
    n->vjp = std::move(vjp);
    return n;
}

namespace {

[[noreturn]] void shape_fail(const char* op, const Tensor& a, const Tensor& b) {
    throw GraphError(std::string(op) + ": incompatible shapes " + shape_str(a.shape) +
                     " vs " + shape_str(b.shape));
}

void topo_order(const NodePtr& root, std::vector<Node*>& order) {
    // iterative postorder DFS; order ends with root
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, std::size_t>> stack;
    stack.emplace_back(root.get(), 0);
    visited.insert(root.get());
    while (!stack.empty()) {
        auto& [node, idx] = stack.back();
        if (idx < node->parents.size()) {
            Node* p = node->parents[idx++].get();
            if (visited.insert(p).second) stack.emplace_back(p, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
}

}  // namespace

void backward(const NodePtr& root) {
    if (!root) throw GraphError("backward: null root");
    if (!root->is_scalar())
        throw GraphError("backward: root must be scalar, got shape " +
                         shape_str(root->value.shape));

    std::vector<Node*> order;
    topo_order(root, order);

    // fresh adjoints per call; .grad accumulates across calls
    std::unordered_map<Node*, Tensor> adj;
    adj.emplace(root.get(), Tensor::scalar(1.0));

    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* node = *it;
        auto found = adj.find(node);
        if (found == adj.end()) continue;  // unreachable from root's adjoint flow
        const Tensor& a = found->second;
        if (node->vjp) {
            std::vector<Tensor> padj;
            padj.reserve(node->parents.size());
            for (auto& p : node->parents) padj.push_back(Tensor::zeros(p->value.shape));
            node->vjp(*node, a, padj);
            for (std::size_t i = 0; i < node->parents.size(); ++i) {
                Node* p = node->parents[i].get();
                auto [slot, inserted] = adj.try_emplace(p, std::move(padj[i]));
                if (!inserted) slot->second.add_(padj[i]);
            }
        }
        if (node->grad_enabled) node->grad.add_(a);
    }
}

// ---- ops ----------------------------------------------------------------

NodePtr matmul(const NodePtr& a, const NodePtr& b) {
    const Tensor& A = a->value;
    const Tensor& B = b->value;
    if (A.rank() != 2 || B.rank() != 2 || A.shape[1] != B.shape[0]) shape_fail("matmul", A, B);
    std::size_t n = A.shape[0], k = A.shape[1], m = B.shape[1];
    Tensor out = Tensor::zeros({n, m});
    kernels::matmul(A.v.data(), B.v.data(), out.v.data(), n, k, m);
    return make_op(std::move(out), {a, b}, "matmul",
                   [n, k, m](const Node& self, const Tensor& adj, std::vector<Tensor>& padj) {
                       const Tensor& A = self.parents[0]->value;
                       const Tensor& B = self.parents[1]->value;
                       kernels::matmul_bt_acc(adj.v.data(), B.v.data(), padj[0].v.data(), n, k, m);
                       kernels::matmul_at_acc(A.v.data(), adj.v.data(), padj[1].v.data(), n, k, m);
                   });
}

NodePtr add(const NodePtr& a, const NodePtr& b) {
    const Tensor& A = a->value;
    const Tensor& B = b->value;
    if (A.same_shape(B)) {
        Tensor out = A;
        for (std::size_t i = 0; i < out.size(); ++i) out.v[i] += B.v[i];
        return make_op(std::move(out), {a, b}, "add",
                       [](const Node&, const Tensor& adj, std::vector<Tensor>& padj) {
                           padj[0].add_(adj);
                           padj[1].add_(adj);
                       });
    }
    // broadcast bias over rows: [n,d] + [d]
    if (A.rank() == 2 && B.rank() == 1 && A.shape[1] == B.shape[0]) {
        std::size_t n = A.shape[0], d = A.shape[1];
        Tensor out = A;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < d; ++j) out.v[i * d + j] += B.v[j];
        return make_op(std::move(out), {a, b}, "add_bias",
                       [n, d](const Node&, const Tensor& adj, std::vector<Tensor>& padj) {
                           padj[0].add_(adj);
                           for (std::size_t i = 0; i < n; ++i)
                               for (std::size_t j = 0; j < d; ++j)
                                   padj[1].v[j] += adj.v[i * d + j];
                       });
    }
    shape_fail("add", A, B);
}

NodePtr sub(const NodePtr& a, const NodePtr& b) {
    const Tensor& A = a->value;
    const Tensor& B = b->value;
    if (!A.same_shape(B)) shape_fail("sub", A, B);
    Tensor out = A;
    for (std::size_t i = 0; i < out.size(); ++i) out.v[i] -= B.v[i];
    return make_op(std::move(out), {a, b}, "sub",
                   [](const Node&, const Tensor& adj, std::vector<Tensor>& padj) {
                       padj[0].add_(adj);
                       for (std::size_t i = 0; i < adj.size(); ++i) padj[1].v[i] -= adj.v[i];
                   });
}

NodePtr mul(const NodePtr& a, const NodePtr& b) {
    const Tensor& A = a->value;
    const Tensor& B = b->value;
    if (!A.same_shape(B)) shape_fail("mul", A, B);
    Tensor out = A;
    for (std::size_t i = 0; i < out.size(); ++i) out.v[i] *= B.v[i];
    return make_op(std::move(out), {a, b}, "mul",
                   [](const Node& self, const Tensor& adj, std::vector<Tensor>& padj) {
                       const Tensor& A = self.parents[0]->value;
                       const Tensor& B = self.parents[1]->value;
                       for (std::size_t i = 0; i < adj.size(); ++i) {
                           padj[0].v[i] += adj.v[i] * B.v[i];
                           padj[1].v[i] += adj.v[i] * A.v[i];
                       }
                   });
}

NodePtr affine(const NodePtr& a, double s, double shift) {
    Tensor out = a->value;
    for (auto& x : out.v) x = s * x + shift;
    return make_op(std::move(out), {a}, "affine",
                   [s](const Node&, const Tensor& adj, std::vector<Tensor>& padj) {
                       for (std::size_t i = 0; i < adj.size(); ++i) padj[0].v[i] += s * adj.v[i];
                   });
}

NodePtr scale(const NodePtr& a, double s) { return affine(a, s, 0.0); }

namespace {
NodePtr unary(const NodePtr& a, const char* name, double (*f)(double),
              double (*df_from_y)(double y, double x)) {
    Tensor out = a->value;
    for (auto& x : out.v) x = f(x);
    return make_op(std::move(out), {a}, name,
                   [df_from_y](const Node& self, const Tensor& adj, std::vector<Tensor>& padj) {
                       const Tensor& X = self.parents[0]->value;
                       const Tensor& Y = self.value;
                       for (std::size_t i = 0; i < adj.size(); ++i)
                           padj[0].v[i] += adj.v[i] * df_from_y(Y.v[i], X.v[i]);
                   });
}
}  // namespace

NodePtr sigmoid(const NodePtr& a) {
    return unary(
        a, "sigmoid", +[](double x) { return 1.0 / (1.0 + std::exp(-x)); },
        +[](double y, double) { return y * (1.0 - y); });
}

NodePtr tanh_op(const NodePtr& a) {
    return unary(
        a, "tanh", +[](double x) { return std::tanh(x); },
        +[](double y, double) { return 1.0 - y * y; });
}

NodePtr relu(const NodePtr& a) {
    return unary(
        a, "relu", +[](double x) { return x > 0.0 ? x : 0.0; },
        +[](double, double x) { return x > 0.0 ? 1.0 : 0.0; });
}

NodePtr exp_op(const NodePtr& a) {
    return unary(
        a, "exp", +[](double x) { return std::exp(x); },
        +[](double y, double) { return y; });
}

NodePtr log_op(const NodePtr& a) {
    return unary(
        a, "log", +[](double x) { return std::log(x); },
        +[](double, double x) { return 1.0 / x; });
}

NodePtr sum_all(const NodePtr& a) {
    double s = 0.0;
    for (double x : a->value.v) s += x;
    return make_op(Tensor::scalar(s), {a}, "sum_all",
                   [](const Node&, const Tensor& adj, std::vector<Tensor>& padj) {
                       for (auto& g : padj[0].v) g += adj.v[0];
                   });
}

NodePtr mean_all(const NodePtr& a) {
    std::size_t n = a->value.size();
    if (n == 0) throw GraphError("mean_all: empty tensor");
    return scale(sum_all(a), 1.0 / double(n));
}

NodePtr sum_axis(const NodePtr& a, int axis) {
    const Tensor& A = a->value;
    if (A.rank() != 2 || (axis != 0 && axis != 1))
        throw GraphError("sum_axis: need 2-d tensor and axis 0/1");
    std::size_t n = A.shape[0], d = A.shape[1];
    if (axis == 0) {
        Tensor out = Tensor::zeros({d});
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < d; ++j) out.v[j] += A.v[i * d + j];
        return make_op(std::move(out), {a}, "sum_axis0",
                       [n, d](const Node&, const Tensor& adj, std::vector<Tensor>& padj) {
                           for (std::size_t i = 0; i < n; ++i)
                               for (std::size_t j = 0; j < d; ++j)
                                   padj[0].v[i * d + j] += adj.v[j];
                       });
    }
    Tensor out = Tensor::zeros({n});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) out.v[i] += A.v[i * d + j];
    return make_op(std::move(out), {a}, "sum_axis1",
                   [n, d](const Node&, const Tensor& adj, std::vector<Tensor>& padj) {
                       for (std::size_t i = 0; i < n; ++i)
                           for (std::size_t j = 0; j < d; ++j) padj[0].v[i * d + j] += adj.v[i];
                   });
}

NodePtr mean_axis(const NodePtr& a, int axis) {
    const Tensor& A = a->value;
    if (A.rank() != 2) throw GraphError("mean_axis: need 2-d tensor");
    double n = axis == 0 ? double(A.shape[0]) : double(A.shape[1]);
    return scale(sum_axis(a, axis), 1.0 / n);
}

NodePtr concat_cols(const NodePtr& a, const NodePtr& b) {
    const Tensor& A = a->value;
    const Tensor& B = b->value;
    if (A.rank() != 2 || B.rank() != 2 || A.shape[0] != B.shape[0])
        shape_fail("concat_cols", A, B);
    std::size_t n = A.shape[0], da = A.shape[1], db = B.shape[1];
    Tensor out = Tensor::zeros({n, da + db});
    for (std::size_t i = 0; i < n; ++i) {
        std::copy_n(&A.v[i * da], da, &out.v[i * (da + db)]);
        std::copy_n(&B.v[i * db], db, &out.v[i * (da + db) + da]);
    }
    return make_op(std::move(out), {a, b}, "concat_cols",
                   [n, da, db](const Node&, const Tensor& adj, std::vector<Tensor>& padj) {
                       for (std::size_t i = 0; i < n; ++i) {
                           for (std::size_t j = 0; j < da; ++j)
                               padj[0].v[i * da + j] += adj.v[i * (da + db) + j];
                           for (std::size_t j = 0; j < db; ++j)
                               padj[1].v[i * db + j] += adj.v[i * (da + db) + da + j];
                       }
                   });
}

NodePtr concat_rows(const NodePtr& a, const NodePtr& b) {
    const Tensor& A = a->value;
    const Tensor& B = b->value;
    if (A.rank() != 2 || B.rank() != 2 || A.shape[1] != B.shape[1])
        shape_fail("concat_rows", A, B);
    std::size_t na = A.shape[0], nb = B.shape[0], d = A.shape[1];
    Tensor out = Tensor::zeros({na + nb, d});
    std::copy(A.v.begin(), A.v.end(), out.v.begin());
    std::copy(B.v.begin(), B.v.end(), out.v.begin() + std::ptrdiff_t(na * d));
    return make_op(std::move(out), {a, b}, "concat_rows",
                   [na, nb, d](const Node&, const Tensor& adj, std::vector<Tensor>& padj) {
                       for (std::size_t i = 0; i < na * d; ++i) padj[0].v[i] += adj.v[i];
                       for (std::size_t i = 0; i < nb * d; ++i)
                           padj[1].v[i] += adj.v[na * d + i];
                   });
}

NodePtr slice_cols(const NodePtr& a, std::size_t lo, std::size_t hi) {
    const Tensor& A = a->value;
    if (A.rank() != 2 || lo >= hi || hi > A.shape[1])
        throw GraphError("slice_cols: bad range [" + std::to_string(lo) + "," +
                         std::to_string(hi) + ") for " + shape_str(A.shape));
    std::size_t n = A.shape[0], d = A.shape[1], w = hi - lo;
    Tensor out = Tensor::zeros({n, w});
    for (std::size_t i = 0; i < n; ++i)
        std::copy_n(&A.v[i * d + lo], w, &out.v[i * w]);
    return make_op(std::move(out), {a}, "slice_cols",
                   [n, d, lo, w](const Node&, const Tensor& adj, std::vector<Tensor>& padj) {
                       for (std::size_t i = 0; i < n; ++i)
                           for (std::size_t j = 0; j < w; ++j)
                               padj[0].v[i * d + lo + j] += adj.v[i * w + j];
                   });
}

NodePtr slice_time(const NodePtr& x, std::size_t t) {
    const Tensor& X = x->value;
    if (X.rank() != 3 || t >= X.shape[1])
        throw GraphError("slice_time: t=" + std::to_string(t) + " out of range for " +
                         shape_str(X.shape));
    std::size_t batch = X.shape[0], tlen = X.shape[1], d = X.shape[2];
    Tensor out = Tensor::zeros({batch, d});
    for (std::size_t i = 0; i < batch; ++i)
        std::copy_n(&X.v[(i * tlen + t) * d], d, &out.v[i * d]);
    return make_op(std::move(out), {x}, "slice_time",
                   [batch, tlen, d, t](const Node&, const Tensor& adj, std::vector<Tensor>& padj) {
                       for (std::size_t i = 0; i < batch; ++i)
                           for (std::size_t j = 0; j < d; ++j)
                               padj[0].v[(i * tlen + t) * d + j] += adj.v[i * d + j];
                   });
}

NodePtr l2_normalize_rows(const NodePtr& a, double eps) {
    const Tensor& A = a->value;
    if (A.rank() != 2) throw GraphError("l2_normalize_rows: need 2-d tensor");
    std::size_t n = A.shape[0], d = A.shape[1];
    Tensor out = A;
    std::vector<double> norms(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j) s += A.v[i * d + j] * A.v[i * d + j];
        norms[i] = std::sqrt(s + eps);
        for (std::size_t j = 0; j < d; ++j) out.v[i * d + j] /= norms[i];
    }
    return make_op(std::move(out), {a}, "l2_normalize_rows",
                   [n, d, norms](const Node& self, const Tensor& adj, std::vector<Tensor>& padj) {
                       const Tensor& Y = self.value;
                       for (std::size_t i = 0; i < n; ++i) {
                           double dot = 0.0;
                           for (std::size_t j = 0; j < d; ++j)
                               dot += adj.v[i * d + j] * Y.v[i * d + j];
                           for (std::size_t j = 0; j < d; ++j)
                               padj[0].v[i * d + j] +=
                                   (adj.v[i * d + j] - Y.v[i * d + j] * dot) / norms[i];
                       }
                   });
}

NodePtr log_softmax_rows(const NodePtr& a) {
    const Tensor& A = a->value;
    if (A.rank() != 2) throw GraphError("log_softmax_rows: need 2-d tensor");
    std::size_t n = A.shape[0], d = A.shape[1];
    Tensor out = A;
    for (std::size_t i = 0; i < n; ++i) {
        double mx = out.v[i * d];
        for (std::size_t j = 1; j < d; ++j) mx = std::max(mx, out.v[i * d + j]);
        double lse = 0.0;
        for (std::size_t j = 0; j < d; ++j) lse += std::exp(out.v[i * d + j] - mx);
        lse = mx + std::log(lse);
        for (std::size_t j = 0; j < d; ++j) out.v[i * d + j] -= lse;
    }
    return make_op(std::move(out), {a}, "log_softmax_rows",
                   [n, d](const Node& self, const Tensor& adj, std::vector<Tensor>& padj) {
                       const Tensor& Y = self.value;  // log-probs
                       for (std::size_t i = 0; i < n; ++i) {
                           double asum = 0.0;
                           for (std::size_t j = 0; j < d; ++j) asum += adj.v[i * d + j];
                           for (std::size_t j = 0; j < d; ++j)
                               padj[0].v[i * d + j] +=
                                   adj.v[i * d + j] - std::exp(Y.v[i * d + j]) * asum;
                       }
                   });
}

NodePtr softmax_rows(const NodePtr& a) { return exp_op(log_softmax_rows(a)); }

}  // namespace sofa::ad
