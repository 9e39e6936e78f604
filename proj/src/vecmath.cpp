#include "v2t/vecmath.hpp"

namespace v2t {

Mat matmul(const Mat& x, const Mat& y) {
    if (x.cols != y.rows) {
        throw DomainError("matmul: inner dimensions disagree");
    }
    Mat out(x.rows, y.cols);
    for (std::size_t i = 0; i < x.rows; ++i) {
        for (std::size_t k = 0; k < x.cols; ++k) {
            const double xik = x.at(i, k);
            if (xik == 0.0) continue;
            for (std::size_t j = 0; j < y.cols; ++j) {
                out.at(i, j) += xik * y.at(k, j);
            }
        }
    }
    return out;
}

Mat col_slice(const Mat& x, std::size_t col0, std::size_t n) {
    if (col0 + n > x.cols) {
        throw DomainError("col_slice: range out of bounds");
    }
    Mat out(x.rows, n);
    for (std::size_t i = 0; i < x.rows; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            out.at(i, j) = x.at(i, col0 + j);
        }
    }
    return out;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) {
        throw DomainError("dot: dimension mismatch");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double l2_norm(const std::vector<double>& v) {
    return std::sqrt(dot(v, v));
}

void l2_normalize(std::vector<double>& v) {
    const double n = l2_norm(v);
    if (n == 0.0 || !std::isfinite(n)) {
        throw DomainError("l2_normalize: zero or non-finite norm");
    }
    for (double& x : v) x /= n;
}

} // namespace v2t
