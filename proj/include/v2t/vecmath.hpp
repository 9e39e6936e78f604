#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "v2t/errors.hpp"

namespace v2t {

// Dense row-major matrix; just enough for the toy encoder and the tests.
struct Mat {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Mat() = default;
    Mat(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

Mat matmul(const Mat& x, const Mat& y);

// Columns [col0, col0+n) as a new matrix.
Mat col_slice(const Mat& x, std::size_t col0, std::size_t n);

double dot(const std::vector<double>& a, const std::vector<double>& b);
double l2_norm(const std::vector<double>& v);

// In-place x/=||x||; throws DomainError on a zero vector.
void l2_normalize(std::vector<double>& v);

} // namespace v2t
