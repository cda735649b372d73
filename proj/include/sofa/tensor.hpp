#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace sofa {

using Shape = std::vector<std::size_t>;

inline std::size_t numel(const Shape& s) {
    std::size_t n = 1;
    for (auto e : s) n *= e;
    return n;
}

inline std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
    os << "]";
    return os.str();
}

struct TensorError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Dense row-major array of doubles. The single numeric workhorse of the
/// library; 32-bit storage only appears in the on-disk dataset container.
struct Tensor {
    Shape shape;
    std::vector<double> v;

    Tensor() = default;
    Tensor(Shape s, std::vector<double> data) : shape(std::move(s)), v(std::move(data)) {
        if (numel(shape) != v.size())
            throw TensorError("tensor shape " + shape_str(shape) + " does not match " +
                              std::to_string(v.size()) + " values");
    }

    static Tensor zeros(Shape s) {
        std::size_t n = numel(s);
        return Tensor(std::move(s), std::vector<double>(n, 0.0));
    }
    static Tensor full(Shape s, double x) {
        std::size_t n = numel(s);
        return Tensor(std::move(s), std::vector<double>(n, x));
    }
    static Tensor scalar(double x) { return Tensor({1}, {x}); }

    std::size_t size() const { return v.size(); }
    std::size_t dim(std::size_t i) const { return shape.at(i); }
    std::size_t rank() const { return shape.size(); }

    double& operator[](std::size_t i) { return v[i]; }
    double operator[](std::size_t i) const { return v[i]; }

    // 2-d accessors; [rows, cols] row-major
    double& at2(std::size_t r, std::size_t c) { return v[r * shape[1] + c]; }
    double at2(std::size_t r, std::size_t c) const { return v[r * shape[1] + c]; }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    bool all_finite() const {
        for (double x : v)
            if (!std::isfinite(x)) return false;
        return true;
    }

    void require_finite(const char* what) const {
        if (!all_finite()) throw TensorError(std::string("non-finite values in ") + what);
    }

    void fill(double x) { std::fill(v.begin(), v.end(), x); }

    void add_(const Tensor& o) {
        if (!same_shape(o))
            throw TensorError("add_: shape " + shape_str(shape) + " vs " + shape_str(o.shape));
        for (std::size_t i = 0; i < v.size(); ++i) v[i] += o.v[i];
    }
};

}  // namespace sofa
