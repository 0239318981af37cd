#include "pqvit/tensor.hpp"

#include <cmath>
#include <sstream>

namespace pqvit {

bool Tensor::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

std::string shape_string(const std::vector<std::size_t>& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << 'x';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

static void require_mat(const Tensor& t, const char* who) {
    if (t.rank() != 2)
        throw std::invalid_argument(std::string(who) + ": expected rank-2 tensor, got " +
                                    shape_string(t.shape()));
}

// ikj loop order keeps B accesses sequential.
Tensor matmul(const Tensor& a, const Tensor& b) {
    require_mat(a, "matmul");
    require_mat(b, "matmul");
    const std::size_t m = a.shape()[0], k = a.shape()[1];
    const std::size_t k2 = b.shape()[0], n = b.shape()[1];
    if (k != k2)
        throw std::invalid_argument("matmul: inner dimensions disagree " +
                                    shape_string(a.shape()) + " vs " + shape_string(b.shape()));
    Tensor c({m, n});
    const double* A = a.data();
    const double* B = b.data();
    double* C = c.data();
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t t = 0; t < k; ++t) {
            const double av = A[i * k + t];
            if (av == 0.0) continue;
            const double* Brow = B + t * n;
            double* Crow = C + i * n;
            for (std::size_t j = 0; j < n; ++j) Crow[j] += av * Brow[j];
        }
    }
    return c;
}

Tensor matmul_transA(const Tensor& a, const Tensor& b) {
    require_mat(a, "matmul_transA");
    require_mat(b, "matmul_transA");
    const std::size_t k = a.shape()[0], m = a.shape()[1];
    const std::size_t k2 = b.shape()[0], n = b.shape()[1];
    if (k != k2) throw std::invalid_argument("matmul_transA: dimensions disagree");
    Tensor c({m, n});
    const double* A = a.data();
    const double* B = b.data();
    double* C = c.data();
    for (std::size_t t = 0; t < k; ++t) {
        const double* Arow = A + t * m;
        const double* Brow = B + t * n;
        for (std::size_t i = 0; i < m; ++i) {
            const double av = Arow[i];
            if (av == 0.0) continue;
            double* Crow = C + i * n;
            for (std::size_t j = 0; j < n; ++j) Crow[j] += av * Brow[j];
        }
    }
    return c;
}

Tensor matmul_transB(const Tensor& a, const Tensor& b) {
    require_mat(a, "matmul_transB");
    require_mat(b, "matmul_transB");
    const std::size_t m = a.shape()[0], k = a.shape()[1];
    const std::size_t n = b.shape()[0], k2 = b.shape()[1];
    if (k != k2) throw std::invalid_argument("matmul_transB: dimensions disagree");
    Tensor c({m, n});
    const double* A = a.data();
    const double* B = b.data();
    double* C = c.data();
    for (std::size_t i = 0; i < m; ++i) {
        const double* Arow = A + i * k;
        double* Crow = C + i * n;
        for (std::size_t j = 0; j < n; ++j) {
            const double* Brow = B + j * k;
            double s = 0.0;
            for (std::size_t t = 0; t < k; ++t) s += Arow[t] * Brow[t];
            Crow[j] = s;
        }
    }
    return c;
}

Tensor transpose(const Tensor& a) {
    require_mat(a, "transpose");
    const std::size_t m = a.shape()[0], n = a.shape()[1];
    Tensor t({n, m});
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) t.at(j, i) = a.at(i, j);
    return t;
}

Tensor softmax_rows(const Tensor& m) {
    require_mat(m, "softmax_rows");
    const std::size_t r = m.shape()[0], c = m.shape()[1];
    Tensor out({r, c});
    for (std::size_t i = 0; i < r; ++i) {
        double mx = m.at(i, 0);
        for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, m.at(i, j));
        double sum = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            const double e = std::exp(m.at(i, j) - mx);
            out.at(i, j) = e;
            sum += e;
        }
        for (std::size_t j = 0; j < c; ++j) out.at(i, j) /= sum;
    }
    return out;
}

double gaussian_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double gaussian_pdf(double x) {
    static const double inv_sqrt_2pi = 0.3989422804014327;
    return inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

Tensor gelu(const Tensor& x) {
    Tensor out(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * gaussian_cdf(x[i]);
    return out;
}

}  // namespace pqvit
