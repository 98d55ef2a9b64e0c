#include "ctaes/graph.hpp"

#include <cassert>
#include <cmath>

#include "ctaes/errors.hpp"

namespace ctaes {

Graph::NodeId Graph::push(Mat val, bool needs_grad, std::function<void(Graph&, NodeId)> back) {
    Node n;
    n.val = std::move(val);
    n.needs_grad = needs_grad;
    n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return static_cast<NodeId>(nodes_.size()) - 1;
}

Graph::NodeId Graph::leaf(Mat value, bool requires_grad) {
    return push(std::move(value), requires_grad, nullptr);
}

Graph::NodeId Graph::matmul(NodeId a, NodeId b) {
    const Mat& A = nodes_[a].val;
    const Mat& B = nodes_[b].val;
    if (A.cols != B.rows) throw ContractError("matmul shape mismatch");
    bool req = nodes_[a].needs_grad || nodes_[b].needs_grad;
    return push(ctaes::matmul(A, B), req, [a, b](Graph& g, NodeId self) {
        const Mat& gout = g.nodes_[self].grad;
        if (g.nodes_[a].needs_grad) {
            Mat da = ctaes::matmul(gout, ctaes::transpose(g.nodes_[b].val));
            Mat& acc = g.grad_ref(a);
            for (int i = 0; i < da.size(); ++i) acc.a[i] += da.a[i];
        }
        if (g.nodes_[b].needs_grad) {
            Mat db = ctaes::matmul(ctaes::transpose(g.nodes_[a].val), gout);
            Mat& acc = g.grad_ref(b);
            for (int i = 0; i < db.size(); ++i) acc.a[i] += db.a[i];
        }
    });
}

Graph::NodeId Graph::transpose(NodeId a) {
    bool req = nodes_[a].needs_grad;
    return push(ctaes::transpose(nodes_[a].val), req, [a](Graph& g, NodeId self) {
        if (!g.nodes_[a].needs_grad) return;
        Mat da = ctaes::transpose(g.nodes_[self].grad);
        Mat& acc = g.grad_ref(a);
        for (int i = 0; i < da.size(); ++i) acc.a[i] += da.a[i];
    });
}

Graph::NodeId Graph::add(NodeId a, NodeId b) {
    const Mat& A = nodes_[a].val;
    const Mat& B = nodes_[b].val;
    if (!A.same_shape(B)) throw ContractError("add shape mismatch");
    Mat out = A;
    for (int i = 0; i < out.size(); ++i) out.a[i] += B.a[i];
    bool req = nodes_[a].needs_grad || nodes_[b].needs_grad;
    return push(std::move(out), req, [a, b](Graph& g, NodeId self) {
        const Mat& gout = g.nodes_[self].grad;
        for (NodeId p : {a, b}) {
            if (!g.nodes_[p].needs_grad) continue;
            Mat& acc = g.grad_ref(p);
            for (int i = 0; i < gout.size(); ++i) acc.a[i] += gout.a[i];
        }
    });
}

Graph::NodeId Graph::sub(NodeId a, NodeId b) {
    const Mat& A = nodes_[a].val;
    const Mat& B = nodes_[b].val;
    if (!A.same_shape(B)) throw ContractError("sub shape mismatch");
    Mat out = A;
    for (int i = 0; i < out.size(); ++i) out.a[i] -= B.a[i];
    bool req = nodes_[a].needs_grad || nodes_[b].needs_grad;
    return push(std::move(out), req, [a, b](Graph& g, NodeId self) {
        const Mat& gout = g.nodes_[self].grad;
        if (g.nodes_[a].needs_grad) {
            Mat& acc = g.grad_ref(a);
            for (int i = 0; i < gout.size(); ++i) acc.a[i] += gout.a[i];
        }
        if (g.nodes_[b].needs_grad) {
            Mat& acc = g.grad_ref(b);
            for (int i = 0; i < gout.size(); ++i) acc.a[i] -= gout.a[i];
        }
    });
}

Graph::NodeId Graph::mul(NodeId a, NodeId b) {
    const Mat& A = nodes_[a].val;
    const Mat& B = nodes_[b].val;
    if (!A.same_shape(B)) throw ContractError("mul shape mismatch");
    Mat out = A;
    for (int i = 0; i < out.size(); ++i) out.a[i] *= B.a[i];
    bool req = nodes_[a].needs_grad || nodes_[b].needs_grad;
    return push(std::move(out), req, [a, b](Graph& g, NodeId self) {
        const Mat& gout = g.nodes_[self].grad;
        if (g.nodes_[a].needs_grad) {
            Mat& acc = g.grad_ref(a);
            const Mat& bv = g.nodes_[b].val;
            for (int i = 0; i < gout.size(); ++i) acc.a[i] += gout.a[i] * bv.a[i];
        }
        if (g.nodes_[b].needs_grad) {
            Mat& acc = g.grad_ref(b);
            const Mat& av = g.nodes_[a].val;
            for (int i = 0; i < gout.size(); ++i) acc.a[i] += gout.a[i] * av.a[i];
        }
    });
}

Graph::NodeId Graph::scale(NodeId a, double s) {
    Mat out = nodes_[a].val;
    for (auto& x : out.a) x *= s;
    bool req = nodes_[a].needs_grad;
    return push(std::move(out), req, [a, s](Graph& g, NodeId self) {
        if (!g.nodes_[a].needs_grad) return;
        const Mat& gout = g.nodes_[self].grad;
        Mat& acc = g.grad_ref(a);
        for (int i = 0; i < gout.size(); ++i) acc.a[i] += s * gout.a[i];
    });
}

Graph::NodeId Graph::add_rowvec(NodeId a, NodeId row) {
    const Mat& A = nodes_[a].val;
    const Mat& R = nodes_[row].val;
    if (R.rows != 1 || R.cols != A.cols) throw ContractError("add_rowvec shape mismatch");
    Mat out = A;
    for (int i = 0; i < A.rows; ++i)
        for (int j = 0; j < A.cols; ++j) out.at(i, j) += R.at(0, j);
    bool req = nodes_[a].needs_grad || nodes_[row].needs_grad;
    return push(std::move(out), req, [a, row](Graph& g, NodeId self) {
        const Mat& gout = g.nodes_[self].grad;
        if (g.nodes_[a].needs_grad) {
            Mat& acc = g.grad_ref(a);
            for (int i = 0; i < gout.size(); ++i) acc.a[i] += gout.a[i];
        }
        if (g.nodes_[row].needs_grad) {
            Mat& acc = g.grad_ref(row);
            for (int i = 0; i < gout.rows; ++i)
                for (int j = 0; j < gout.cols; ++j) acc.at(0, j) += gout.at(i, j);
        }
    });
}

Graph::NodeId Graph::relu(NodeId a) {
    Mat out = nodes_[a].val;
    for (auto& x : out.a) x = x > 0.0 ? x : 0.0;
    bool req = nodes_[a].needs_grad;
    return push(std::move(out), req, [a](Graph& g, NodeId self) {
        if (!g.nodes_[a].needs_grad) return;
        const Mat& gout = g.nodes_[self].grad;
        const Mat& av = g.nodes_[a].val;
        Mat& acc = g.grad_ref(a);
        for (int i = 0; i < gout.size(); ++i)
            if (av.a[i] > 0.0) acc.a[i] += gout.a[i];
    });
}

Graph::NodeId Graph::sigmoid(NodeId a) {
    Mat out = nodes_[a].val;
    for (auto& x : out.a) x = 1.0 / (1.0 + std::exp(-x));
    bool req = nodes_[a].needs_grad;
    return push(std::move(out), req, [a](Graph& g, NodeId self) {
        if (!g.nodes_[a].needs_grad) return;
        const Mat& gout = g.nodes_[self].grad;
        const Mat& sv = g.nodes_[self].val;
        Mat& acc = g.grad_ref(a);
        for (int i = 0; i < gout.size(); ++i) acc.a[i] += gout.a[i] * sv.a[i] * (1.0 - sv.a[i]);
    });
}

Graph::NodeId Graph::one_minus(NodeId a) {
    Mat out = nodes_[a].val;
    for (auto& x : out.a) x = 1.0 - x;
    bool req = nodes_[a].needs_grad;
    return push(std::move(out), req, [a](Graph& g, NodeId self) {
        if (!g.nodes_[a].needs_grad) return;
        const Mat& gout = g.nodes_[self].grad;
        Mat& acc = g.grad_ref(a);
        for (int i = 0; i < gout.size(); ++i) acc.a[i] -= gout.a[i];
    });
}

Graph::NodeId Graph::log_clamped(NodeId a, double floor) {
    Mat out = nodes_[a].val;
    for (auto& x : out.a) x = std::log(x > floor ? x : floor);
    bool req = nodes_[a].needs_grad;
    return push(std::move(out), req, [a, floor](Graph& g, NodeId self) {
        if (!g.nodes_[a].needs_grad) return;
        const Mat& gout = g.nodes_[self].grad;
        const Mat& av = g.nodes_[a].val;
        Mat& acc = g.grad_ref(a);
        for (int i = 0; i < gout.size(); ++i)
            if (av.a[i] > floor) acc.a[i] += gout.a[i] / av.a[i];
    });
}

Graph::NodeId Graph::softmax_rows(NodeId a) {
    const Mat& A = nodes_[a].val;
    Mat out(A.rows, A.cols);
    for (int i = 0; i < A.rows; ++i) {
        double mx = A.at(i, 0);
        for (int j = 1; j < A.cols; ++j) mx = std::max(mx, A.at(i, j));
        double z = 0.0;
        for (int j = 0; j < A.cols; ++j) {
            out.at(i, j) = std::exp(A.at(i, j) - mx);
            z += out.at(i, j);
        }
        for (int j = 0; j < A.cols; ++j) out.at(i, j) /= z;
    }
    bool req = nodes_[a].needs_grad;
    return push(std::move(out), req, [a](Graph& g, NodeId self) {
        if (!g.nodes_[a].needs_grad) return;
        const Mat& gout = g.nodes_[self].grad;
        const Mat& y = g.nodes_[self].val;
        Mat& acc = g.grad_ref(a);
        for (int i = 0; i < y.rows; ++i) {
            double inner = 0.0;
            for (int j = 0; j < y.cols; ++j) inner += gout.at(i, j) * y.at(i, j);
            for (int j = 0; j < y.cols; ++j)
                acc.at(i, j) += y.at(i, j) * (gout.at(i, j) - inner);
        }
    });
}

Graph::NodeId Graph::sum(NodeId a) {
    const Mat& A = nodes_[a].val;
    double s = 0.0;
    for (double x : A.a) s += x;
    Mat out(1, 1);
    out.a[0] = s;
    bool req = nodes_[a].needs_grad;
    return push(std::move(out), req, [a](Graph& g, NodeId self) {
        if (!g.nodes_[a].needs_grad) return;
        double go = g.nodes_[self].grad.a[0];
        Mat& acc = g.grad_ref(a);
        for (auto& x : acc.a) x += go;
    });
}

Graph::NodeId Graph::mean_rows(NodeId a) {
    const Mat& A = nodes_[a].val;
    Mat out(1, A.cols);
    for (int i = 0; i < A.rows; ++i)
        for (int j = 0; j < A.cols; ++j) out.at(0, j) += A.at(i, j);
    for (int j = 0; j < A.cols; ++j) out.at(0, j) /= A.rows;
    bool req = nodes_[a].needs_grad;
    return push(std::move(out), req, [a](Graph& g, NodeId self) {
        if (!g.nodes_[a].needs_grad) return;
        const Mat& gout = g.nodes_[self].grad;
        Mat& acc = g.grad_ref(a);
        double inv = 1.0 / acc.rows;
        for (int i = 0; i < acc.rows; ++i)
            for (int j = 0; j < acc.cols; ++j) acc.at(i, j) += gout.at(0, j) * inv;
    });
}

Graph::NodeId Graph::concat_cols(NodeId a, NodeId b) { return concat_cols_many({a, b}); }

Graph::NodeId Graph::concat_cols_many(const std::vector<NodeId>& parts) {
    if (parts.empty()) throw ContractError("concat_cols_many: empty");
    int rows = nodes_[parts[0]].val.rows;
    int cols = 0;
    bool req = false;
    for (NodeId p : parts) {
        if (nodes_[p].val.rows != rows) throw ContractError("concat_cols: row mismatch");
        cols += nodes_[p].val.cols;
        req = req || nodes_[p].needs_grad;
    }
    Mat out(rows, cols);
    int off = 0;
    for (NodeId p : parts) {
        const Mat& P = nodes_[p].val;
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < P.cols; ++j) out.at(i, off + j) = P.at(i, j);
        off += P.cols;
    }
    return push(std::move(out), req, [parts](Graph& g, NodeId self) {
        const Mat& gout = g.nodes_[self].grad;
        int off = 0;
        for (NodeId p : parts) {
            Mat& acc = g.grad_ref(p);
            if (g.nodes_[p].needs_grad)
                for (int i = 0; i < acc.rows; ++i)
                    for (int j = 0; j < acc.cols; ++j) acc.at(i, j) += gout.at(i, off + j);
            off += g.nodes_[p].val.cols;
        }
    });
}

Graph::NodeId Graph::stack_rows(const std::vector<NodeId>& parts) {
    if (parts.empty()) throw ContractError("stack_rows: empty");
    int cols = nodes_[parts[0]].val.cols;
    int rows = 0;
    bool req = false;
    for (NodeId p : parts) {
        if (nodes_[p].val.cols != cols) throw ContractError("stack_rows: col mismatch");
        rows += nodes_[p].val.rows;
        req = req || nodes_[p].needs_grad;
    }
    Mat out(rows, cols);
    int off = 0;
    for (NodeId p : parts) {
        const Mat& P = nodes_[p].val;
        for (int i = 0; i < P.rows; ++i)
            for (int j = 0; j < cols; ++j) out.at(off + i, j) = P.at(i, j);
        off += P.rows;
    }
    return push(std::move(out), req, [parts](Graph& g, NodeId self) {
        const Mat& gout = g.nodes_[self].grad;
        int off = 0;
        for (NodeId p : parts) {
            Mat& acc = g.grad_ref(p);
            if (g.nodes_[p].needs_grad)
                for (int i = 0; i < acc.rows; ++i)
                    for (int j = 0; j < acc.cols; ++j) acc.at(i, j) += gout.at(off + i, j);
            off += g.nodes_[p].val.rows;
        }
    });
}

Graph::NodeId Graph::entry(NodeId a, int r, int c) {
    const Mat& A = nodes_[a].val;
    if (r >= A.rows || c >= A.cols) throw ContractError("entry: index out of range");
    Mat out(1, 1);
    out.a[0] = A.at(r, c);
    bool req = nodes_[a].needs_grad;
    return push(std::move(out), req, [a, r, c](Graph& g, NodeId self) {
        if (!g.nodes_[a].needs_grad) return;
        g.grad_ref(a).at(r, c) += g.nodes_[self].grad.a[0];
    });
}

Graph::NodeId Graph::grl(NodeId a, double coeff) {
    bool req = nodes_[a].needs_grad;
    return push(nodes_[a].val, req, [a, coeff](Graph& g, NodeId self) {
        if (!g.nodes_[a].needs_grad) return;
        const Mat& gout = g.nodes_[self].grad;
        Mat& acc = g.grad_ref(a);
        for (int i = 0; i < gout.size(); ++i) acc.a[i] += -coeff * gout.a[i];
    });
}

void Graph::backward(NodeId root) {
    const Mat& rv = nodes_[root].val;
    if (rv.rows != 1 || rv.cols != 1) throw ContractError("backward: root must be scalar");
    for (auto& n : nodes_) {
        n.grad = Mat(n.val.rows, n.val.cols);
    }
    nodes_[root].grad.a[0] = 1.0;
    for (NodeId id = root; id >= 0; --id) {
        Node& n = nodes_[id];
        if (!n.needs_grad || !n.back) continue;
        n.back(*this, id);
    }
}

} // namespace ctaes
