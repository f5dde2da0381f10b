#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

namespace ebox::nn {

// Dense row-major matrix. Vectors are 1×n.
template <typename T>
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<T> data;

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), T{}) {}

    std::size_t size() const { return data.size(); }
    T& operator()(int r, int c) { return data[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols) + static_cast<std::size_t>(c)]; }
    const T& operator()(int r, int c) const { return data[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols) + static_cast<std::size_t>(c)]; }

    std::span<T> row(int r) { return std::span<T>(data).subspan(static_cast<std::size_t>(r) * static_cast<std::size_t>(cols), static_cast<std::size_t>(cols)); }
    std::span<const T> row(int r) const { return std::span<const T>(data).subspan(static_cast<std::size_t>(r) * static_cast<std::size_t>(cols), static_cast<std::size_t>(cols)); }

    // Rows [first, first + count) as a contiguous block.
    std::span<T> rows_span(int first, int count) {
        return std::span<T>(data).subspan(static_cast<std::size_t>(first) * static_cast<std::size_t>(cols), static_cast<std::size_t>(count) * static_cast<std::size_t>(cols));
    }
    std::span<const T> rows_span(int first, int count) const {
        return std::span<const T>(data).subspan(static_cast<std::size_t>(first) * static_cast<std::size_t>(cols), static_cast<std::size_t>(count) * static_cast<std::size_t>(cols));
    }

    void fill(T v) { std::fill(data.begin(), data.end(), v); }
    void resize(int r, int c) {
        rows = r;
        cols = c;
        data.assign(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), T{});
    }
    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
};

}  // namespace ebox::nn
