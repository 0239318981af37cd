#include "pqvit/tape.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>

namespace pqvit {

Tape::NodeId Tape::push(Tensor value, std::function<void()> backprop) {
    nodes_.push_back(Node{std::move(value), Tensor{}, std::move(backprop)});
    return nodes_.size() - 1;
}

Tape::NodeId Tape::input(Tensor value) { return push(std::move(value), {}); }

Tape::NodeId Tape::matmul(NodeId a, NodeId b) {
    Tensor c = pqvit::matmul(value(a), value(b));
    NodeId out = push(std::move(c), {});
    nodes_[out].backprop = [this, a, b, out] {
        const Tensor& dc = grad(out);
        {
            Tensor da = matmul_transB(dc, value(b));  // dC * B^T
            Tensor& ga = g(a);
            for (std::size_t i = 0; i < da.size(); ++i) ga[i] += da[i];
        }
        {
            Tensor db = matmul_transA(value(a), dc);  // A^T * dC
            Tensor& gb = g(b);
            for (std::size_t i = 0; i < db.size(); ++i) gb[i] += db[i];
        }
    };
    return out;
}

Tape::NodeId Tape::add(NodeId a, NodeId b) {
    if (!value(a).same_shape(value(b)))
        throw std::invalid_argument("Tape::add: shape mismatch " +
                                    shape_string(value(a).shape()) + " vs " +
                                    shape_string(value(b).shape()));
    Tensor c = value(a);
    const Tensor& vb = value(b);
    for (std::size_t i = 0; i < c.size(); ++i) c[i] += vb[i];
    NodeId out = push(std::move(c), {});
    nodes_[out].backprop = [this, a, b, out] {
        const Tensor& dc = grad(out);
        Tensor& ga = g(a);
        Tensor& gb = g(b);
        for (std::size_t i = 0; i < dc.size(); ++i) {
            ga[i] += dc[i];
            gb[i] += dc[i];
        }
    };
    return out;
}

Tape::NodeId Tape::add_rowvec(NodeId m, NodeId v) {
    const Tensor& vm = value(m);
    const Tensor& vv = value(v);
    if (vm.rank() != 2 || vv.size() != vm.cols())
        throw std::invalid_argument("Tape::add_rowvec: expects [r x c] + [c]");
    Tensor c = vm;
    const std::size_t rows = vm.shape()[0], cols = vm.shape()[1];
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) c.at(i, j) += vv[j];
    NodeId out = push(std::move(c), {});
    nodes_[out].backprop = [this, m, v, out, rows, cols] {
        const Tensor& dc = grad(out);
        Tensor& gm = g(m);
        Tensor& gv = g(v);
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < cols; ++j) {
                gm[i * cols + j] += dc[i * cols + j];
                gv[j] += dc[i * cols + j];
            }
    };
    return out;
}

Tape::NodeId Tape::scale(NodeId a, double s) {
    Tensor c = value(a);
    for (auto& x : c.vec()) x *= s;
    NodeId out = push(std::move(c), {});
    nodes_[out].backprop = [this, a, s, out] {
        const Tensor& dc = grad(out);
        Tensor& ga = g(a);
        for (std::size_t i = 0; i < dc.size(); ++i) ga[i] += s * dc[i];
    };
    return out;
}

Tape::NodeId Tape::transpose(NodeId a) {
    NodeId out = push(pqvit::transpose(value(a)), {});
    nodes_[out].backprop = [this, a, out] {
        Tensor dt = pqvit::transpose(grad(out));
        Tensor& ga = g(a);
        for (std::size_t i = 0; i < dt.size(); ++i) ga[i] += dt[i];
    };
    return out;
}

Tape::NodeId Tape::softmax_rows(NodeId a) {
    Tensor y = pqvit::softmax_rows(value(a));
    NodeId out = push(std::move(y), {});
    nodes_[out].backprop = [this, a, out] {
        const Tensor& yv = value(out);
        const Tensor& dy = grad(out);
        Tensor& ga = g(a);
        const std::size_t r = yv.shape()[0], c = yv.shape()[1];
        for (std::size_t i = 0; i < r; ++i) {
            double dot = 0.0;
            for (std::size_t j = 0; j < c; ++j) dot += dy[i * c + j] * yv[i * c + j];
            for (std::size_t j = 0; j < c; ++j)
                ga[i * c + j] += yv[i * c + j] * (dy[i * c + j] - dot);
        }
    };
    return out;
}

Tape::NodeId Tape::layer_norm(NodeId x, NodeId gamma, NodeId beta, double eps) {
    const Tensor& vx = value(x);
    const Tensor& vg = value(gamma);
    const Tensor& vb = value(beta);
    if (vx.rank() != 2)
        throw std::invalid_argument("Tape::layer_norm: expects rank-2 input");
    const std::size_t rows = vx.shape()[0], d = vx.shape()[1];
    if (vg.size() != d || vb.size() != d)
        throw std::invalid_argument("Tape::layer_norm: gamma/beta length mismatch");

    Tensor y({rows, d});
    // Cache normalized values and inverse stddev per row for the adjoint.
    auto xhat = std::make_shared<Tensor>(Tensor({rows, d}));
    auto inv_std = std::make_shared<std::vector<double>>(rows);
    for (std::size_t i = 0; i < rows; ++i) {
        double mean = 0.0;
        for (std::size_t j = 0; j < d; ++j) mean += vx[i * d + j];
        mean /= double(d);
        double var = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double dv = vx[i * d + j] - mean;
            var += dv * dv;
        }
        var /= double(d);
        const double is = 1.0 / std::sqrt(var + eps);
        (*inv_std)[i] = is;
        for (std::size_t j = 0; j < d; ++j) {
            const double h = (vx[i * d + j] - mean) * is;
            (*xhat)[i * d + j] = h;
            y[i * d + j] = h * vg[j] + vb[j];
        }
    }
    NodeId out = push(std::move(y), {});
    nodes_[out].backprop = [this, x, gamma, beta, out, xhat, inv_std, rows, d] {
        const Tensor& dy = grad(out);
        const Tensor& vg = value(gamma);
        Tensor& gx = g(x);
        Tensor& gg = g(gamma);
        Tensor& gb = g(beta);
        for (std::size_t i = 0; i < rows; ++i) {
            double sum_dh = 0.0, sum_dh_h = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                const double dyij = dy[i * d + j];
                const double h = (*xhat)[i * d + j];
                gg[j] += dyij * h;
                gb[j] += dyij;
                const double dh = dyij * vg[j];
                sum_dh += dh;
                sum_dh_h += dh * h;
            }
            const double is = (*inv_std)[i];
            for (std::size_t j = 0; j < d; ++j) {
                const double h = (*xhat)[i * d + j];
                const double dh = dy[i * d + j] * vg[j];
                gx[i * d + j] +=
                    is * (dh - sum_dh / double(d) - h * sum_dh_h / double(d));
            }
        }
    };
    return out;
}

Tape::NodeId Tape::gelu(NodeId a) {
    NodeId out = push(pqvit::gelu(value(a)), {});
    nodes_[out].backprop = [this, a, out] {
        const Tensor& vx = value(a);
        const Tensor& dy = grad(out);
        Tensor& ga = g(a);
        for (std::size_t i = 0; i < vx.size(); ++i) {
            const double x = vx[i];
            ga[i] += dy[i] * (gaussian_cdf(x) + x * gaussian_pdf(x));
        }
    };
    return out;
}

Tape::NodeId Tape::concat_rows(const std::vector<NodeId>& parts) {
    if (parts.empty()) throw std::invalid_argument("Tape::concat_rows: no parts");
    const std::size_t cols = value(parts[0]).cols();
    std::size_t rows = 0;
    for (NodeId p : parts) {
        const Tensor& t = value(p);
        if (t.rank() != 2 || t.shape()[1] != cols)
            throw std::invalid_argument("Tape::concat_rows: column mismatch");
        rows += t.shape()[0];
    }
    Tensor c({rows, cols});
    std::size_t r0 = 0;
    for (NodeId p : parts) {
        const Tensor& t = value(p);
        for (std::size_t i = 0; i < t.size(); ++i) c[r0 * cols + i] = t[i];
        r0 += t.shape()[0];
    }
    NodeId out = push(std::move(c), {});
    std::vector<NodeId> ps = parts;
    nodes_[out].backprop = [this, ps, out, cols] {
        const Tensor& dc = grad(out);
        std::size_t r0 = 0;
        for (NodeId p : ps) {
            Tensor& gp = g(p);
            for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += dc[r0 * cols + i];
            r0 += value(p).shape()[0];
        }
    };
    return out;
}

Tape::NodeId Tape::slice_rows(NodeId a, std::size_t start, std::size_t len) {
    const Tensor& va = value(a);
    if (va.rank() != 2 || start + len > va.shape()[0])
        throw std::invalid_argument("Tape::slice_rows: out of range");
    const std::size_t cols = va.shape()[1];
    Tensor c({len, cols});
    for (std::size_t i = 0; i < len * cols; ++i) c[i] = va[start * cols + i];
    NodeId out = push(std::move(c), {});
    nodes_[out].backprop = [this, a, out, start, cols] {
        const Tensor& dc = grad(out);
        Tensor& ga = g(a);
        for (std::size_t i = 0; i < dc.size(); ++i) ga[start * cols + i] += dc[i];
    };
    return out;
}

Tape::NodeId Tape::slice_cols(NodeId a, std::size_t start, std::size_t len) {
    const Tensor& va = value(a);
    if (va.rank() != 2 || start + len > va.shape()[1])
        throw std::invalid_argument("Tape::slice_cols: out of range");
    const std::size_t rows = va.shape()[0], cols = va.shape()[1];
    Tensor c({rows, len});
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < len; ++j) c.at(i, j) = va[i * cols + start + j];
    NodeId out = push(std::move(c), {});
    nodes_[out].backprop = [this, a, out, start, rows, cols, len] {
        const Tensor& dc = grad(out);
        Tensor& ga = g(a);
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < len; ++j)
                ga[i * cols + start + j] += dc[i * len + j];
    };
    return out;
}

Tape::NodeId Tape::sum(NodeId a) {
    double s = 0.0;
    for (double v : value(a).vec()) s += v;
    NodeId out = push(Tensor({1}, {s}), {});
    nodes_[out].backprop = [this, a, out] {
        const double dz = grad(out)[0];
        Tensor& ga = g(a);
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += dz;
    };
    return out;
}

Tape::NodeId Tape::cross_entropy(NodeId logits, std::size_t label) {
    const Tensor& z = value(logits);
    const std::size_t k = z.size();
    if (label >= k)
        throw std::out_of_range("Tape::cross_entropy: label out of range");
    double mx = z[0];
    for (std::size_t i = 1; i < k; ++i) mx = std::max(mx, z[i]);
    double sum = 0.0;
    auto p = std::make_shared<std::vector<double>>(k);
    for (std::size_t i = 0; i < k; ++i) {
        (*p)[i] = std::exp(z[i] - mx);
        sum += (*p)[i];
    }
    for (auto& v : *p) v /= sum;
    const double loss = -(z[label] - mx - std::log(sum));
    NodeId out = push(Tensor({1}, {loss}), {});
    nodes_[out].backprop = [this, logits, out, p, label] {
        const double dl = grad(out)[0];
        Tensor& gz = g(logits);
        for (std::size_t i = 0; i < gz.size(); ++i)
            gz[i] += dl * ((*p)[i] - (i == label ? 1.0 : 0.0));
    };
    return out;
}

void Tape::backward(NodeId loss) {
    if (value(loss).size() != 1)
        throw std::invalid_argument("Tape::backward: loss must be scalar");
    for (auto& n : nodes_) n.grad = Tensor::zeros(n.value.shape());
    nodes_[loss].grad[0] = 1.0;
    for (std::size_t i = nodes_.size(); i-- > 0;)
        if (nodes_[i].backprop) nodes_[i].backprop();
}

}  // namespace pqvit
