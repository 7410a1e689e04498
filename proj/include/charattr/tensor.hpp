#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace charattr::nn {

// Dense row-major float64 array with an optional gradient buffer of the
// same size. All layer math in this project runs on these.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> values;
    std::vector<double> grad;  // empty until alloc_grad()

    Tensor() = default;

    explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
        values.assign(static_cast<size_t>(count(shape)), 0.0);
    }

    Tensor(std::vector<int> s, std::vector<double> v)
        : shape(std::move(s)), values(std::move(v)) {
        if (static_cast<int64_t>(values.size()) != count(shape))
            throw std::invalid_argument("tensor: value count does not match shape");
    }

    static int64_t count(const std::vector<int>& s) {
        int64_t n = 1;
        for (int d : s) {
            if (d <= 0) throw std::invalid_argument("tensor: non-positive dimension");
            n *= d;
        }
        return n;
    }

    int64_t numel() const { return static_cast<int64_t>(values.size()); }
    int dim(int i) const { return shape.at(static_cast<size_t>(i)); }
    int rank() const { return static_cast<int>(shape.size()); }

    // Row-major element access. The 2-d and 3-d forms assume matching rank.
    double& at(int i) { return values[static_cast<size_t>(i)]; }
    double at(int i) const { return values[static_cast<size_t>(i)]; }
    double& at(int i, int j) { return values[static_cast<size_t>(i) * shape[1] + j]; }
    double at(int i, int j) const { return values[static_cast<size_t>(i) * shape[1] + j]; }
    double& at(int i, int j, int k) {
        return values[(static_cast<size_t>(i) * shape[1] + j) * shape[2] + k];
    }
    double at(int i, int j, int k) const {
        return values[(static_cast<size_t>(i) * shape[1] + j) * shape[2] + k];
    }

    void alloc_grad() {
        if (grad.size() != values.size()) grad.assign(values.size(), 0.0);
    }
    void zero_grad() {
        if (!grad.empty()) grad.assign(values.size(), 0.0);
    }
    bool has_grad() const { return grad.size() == values.size(); }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }
};

inline std::string shape_str(const std::vector<int>& s) {
    std::string out = "[";
    for (size_t i = 0; i < s.size(); ++i) {
        if (i) out += ", ";
        out += std::to_string(s[i]);
    }
    return out + "]";
}

inline void require_shape(const Tensor& t, const std::vector<int>& want,
                          const char* what) {
    if (t.shape != want)
        throw std::invalid_argument(std::string(what) + ": expected shape " +
                                    shape_str(want) + ", got " + shape_str(t.shape));
}

}  // namespace charattr::nn
