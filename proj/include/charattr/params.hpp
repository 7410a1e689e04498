#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "charattr/tensor.hpp"

namespace charattr::nn {

// Ordered collection of named parameter tensors. Insertion order is the
// canonical order used by the optimizer and the serializer, so runs are
// reproducible regardless of name content.
class ParamSet {
public:
    Tensor& add(const std::string& name, Tensor t) {
        for (const auto& it : items_)
            if (it.first == name)
                throw std::invalid_argument("duplicate parameter name: " + name);
        items_.emplace_back(name, std::move(t));
        return items_.back().second;
    }

    Tensor& at(const std::string& name) {
        for (auto& it : items_)
            if (it.first == name) return it.second;
        throw std::invalid_argument("unknown parameter: " + name);
    }
    const Tensor& at(const std::string& name) const {
        for (const auto& it : items_)
            if (it.first == name) return it.second;
        throw std::invalid_argument("unknown parameter: " + name);
    }
    bool has(const std::string& name) const {
        for (const auto& it : items_)
            if (it.first == name) return true;
        return false;
    }

    size_t size() const { return items_.size(); }
    const std::string& name(size_t i) const { return items_[i].first; }
    Tensor& tensor(size_t i) { return items_[i].second; }
    const Tensor& tensor(size_t i) const { return items_[i].second; }

    int64_t total_count() const {
        int64_t n = 0;
        for (const auto& it : items_) n += it.second.numel();
        return n;
    }

    void alloc_grads() {
        for (auto& it : items_) it.second.alloc_grad();
    }
    void zero_grads() {
        for (auto& it : items_) it.second.zero_grad();
    }
    void scale_grads(double s) {
        for (auto& it : items_)
            for (auto& g : it.second.grad) g *= s;
    }

    auto begin() { return items_.begin(); }
    auto end() { return items_.end(); }
    auto begin() const { return items_.begin(); }
    auto end() const { return items_.end(); }

private:
    std::vector<std::pair<std::string, Tensor>> items_;
};

}  // namespace charattr::nn
