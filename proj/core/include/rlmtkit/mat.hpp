#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "rlmtkit/errors.hpp"

namespace rlmtkit {

/// Dense row-major matrix of 64-bit floats. Small enough that we keep the
/// representation dumb on purpose: the whole model fits in a few kilobytes.
struct Mat {
    int rows = 0;
    int cols = 0;
    std::vector<double> a;

    Mat() = default;
    Mat(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c, 0.0) {}

    double& operator()(int r, int c) {
        assert(r >= 0 && r < rows && c >= 0 && c < cols);
        return a[static_cast<size_t>(r) * cols + c];
    }
    double operator()(int r, int c) const {
        assert(r >= 0 && r < rows && c >= 0 && c < cols);
        return a[static_cast<size_t>(r) * cols + c];
    }

    size_t size() const { return a.size(); }

    void fill(double v) { std::fill(a.begin(), a.end(), v); }

    bool finite() const {
        for (double v : a) {
            if (!std::isfinite(v)) return false;
        }
        return true;
    }

    void add_scaled(const Mat& other, double scale) {
        if (other.rows != rows || other.cols != cols)
            throw InvalidInput("Mat::add_scaled: shape mismatch");
        for (size_t i = 0; i < a.size(); ++i) a[i] += scale * other.a[i];
    }
};

}  // namespace rlmtkit
