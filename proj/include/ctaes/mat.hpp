#pragma once

#include <cassert>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "ctaes/rng.hpp"

namespace ctaes {

// Dense row-major matrix of doubles. Row vectors are 1xC, scalars 1x1.
// All model math runs in double so the finite-difference and determinism
// tolerances in the test suite hold.
struct Mat {
    int rows = 0;
    int cols = 0;
    std::vector<double> a;

    Mat() = default;
    Mat(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, 0.0) {}
    Mat(int r, int c, std::vector<double> v) : rows(r), cols(c), a(std::move(v)) {
        assert(static_cast<int>(a.size()) == r * c);
    }

    double& at(int r, int c) { return a[static_cast<std::size_t>(r) * cols + c]; }
    double at(int r, int c) const { return a[static_cast<std::size_t>(r) * cols + c]; }
    int size() const { return rows * cols; }
    bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }

    static Mat zeros(int r, int c) { return Mat(r, c); }

    static Mat fill(int r, int c, double v) {
        Mat m(r, c);
        for (auto& x : m.a) x = v;
        return m;
    }

    static Mat identity(int n) {
        Mat m(n, n);
        for (int i = 0; i < n; ++i) m.at(i, i) = 1.0;
        return m;
    }

    static Mat row(std::vector<double> v) {
        int c = static_cast<int>(v.size());
        return Mat(1, c, std::move(v));
    }

    static Mat randn(int r, int c, double stddev, std::mt19937_64& gen) {
        Mat m(r, c);
        std::normal_distribution<double> d(0.0, stddev);
        for (auto& x : m.a) x = d(gen);
        return m;
    }

    bool all_finite() const {
        for (double x : a)
            if (!std::isfinite(x)) return false;
        return true;
    }

    std::uint64_t hash() const {
        std::uint64_t h = fnv1a(&rows, sizeof rows);
        h = fnv1a(&cols, sizeof cols, h);
        if (!a.empty()) h = fnv1a(a.data(), a.size() * sizeof(double), h);
        return h;
    }
};

// C = A * B, naive ikj order.
inline Mat matmul(const Mat& A, const Mat& B) {
    assert(A.cols == B.rows);
    Mat C(A.rows, B.cols);
    for (int i = 0; i < A.rows; ++i) {
        const double* arow = &A.a[static_cast<std::size_t>(i) * A.cols];
        double* crow = &C.a[static_cast<std::size_t>(i) * C.cols];
        for (int k = 0; k < A.cols; ++k) {
            double aik = arow[k];
            if (aik == 0.0) continue;
            const double* brow = &B.a[static_cast<std::size_t>(k) * B.cols];
            for (int j = 0; j < B.cols; ++j) crow[j] += aik * brow[j];
        }
    }
    return C;
}

inline Mat transpose(const Mat& A) {
    Mat T(A.cols, A.rows);
    for (int i = 0; i < A.rows; ++i)
        for (int j = 0; j < A.cols; ++j) T.at(j, i) = A.at(i, j);
    return T;
}

inline double dot(const Mat& a, const Mat& b) {
    assert(a.size() == b.size());
    double s = 0.0;
    for (int i = 0; i < a.size(); ++i) s += a.a[i] * b.a[i];
    return s;
}

inline double norm2(const Mat& a) { return std::sqrt(dot(a, a)); }

// Cosine similarity with a zero-vector guard (either norm 0 -> 0).
inline double cosine_similarity(const Mat& a, const Mat& b) {
    double na = norm2(a), nb = norm2(b);
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot(a, b) / (na * nb);
}

} // namespace ctaes
