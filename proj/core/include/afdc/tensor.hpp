#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

#include "afdc/error.hpp"

namespace afdc {

/// Dense row-major N-dimensional array of doubles. The currency of the
/// network code: images, activations, weights and gradients are all Tensors.
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<std::size_t> shape)
        : shape_(std::move(shape)), data_(count(shape_), 0.0) {}

    Tensor(std::vector<std::size_t> shape, std::vector<double> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        if (data_.size() != count(shape_))
            throw Error(ErrorCode::ShapeMismatch, "tensor data length does not match shape");
    }

    static Tensor zeros(std::vector<std::size_t> shape) { return Tensor(std::move(shape)); }
    static Tensor full(std::vector<std::size_t> shape, double value) {
        Tensor t(std::move(shape));
        for (auto& v : t.data_) v = value;
        return t;
    }
    static Tensor zeros_like(const Tensor& other) { return Tensor(other.shape_); }

    const std::vector<std::size_t>& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
    std::size_t numel() const noexcept { return data_.size(); }

    double* data() noexcept { return data_.data(); }
    const double* data() const noexcept { return data_.data(); }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    // Rank-specific accessors; bounds are the caller's responsibility.
    double& at2(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
    double at2(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }
    double& at4(std::size_t n, std::size_t c, std::size_t y, std::size_t x) {
        return data_[((n * shape_[1] + c) * shape_[2] + y) * shape_[3] + x];
    }
    double at4(std::size_t n, std::size_t c, std::size_t y, std::size_t x) const {
        return data_[((n * shape_[1] + c) * shape_[2] + y) * shape_[3] + x];
    }

    bool same_shape(const Tensor& other) const noexcept { return shape_ == other.shape_; }
    bool all_finite() const noexcept;

    Tensor reshaped(std::vector<std::size_t> new_shape) const {
        if (count(new_shape) != data_.size())
            throw Error(ErrorCode::ShapeMismatch, "reshape changes element count");
        Tensor t;
        t.shape_ = std::move(new_shape);
        t.data_ = data_;
        return t;
    }

    void fill(double v) {
        for (auto& x : data_) x = v;
    }

    static std::size_t count(const std::vector<std::size_t>& shape) noexcept {
        std::size_t n = 1;
        for (auto d : shape) n *= d;
        return shape.empty() ? 0 : n;
    }

private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

void require_shape(const Tensor& t, const std::vector<std::size_t>& shape, const char* what);
void require_rank(const Tensor& t, std::size_t rank, const char* what);

/// When enabled, layer ops verify that their outputs are finite and throw
/// NonFiniteValue otherwise. Off by default; meant for debugging runs.
void set_nan_check(bool enabled) noexcept;
bool nan_check_enabled() noexcept;
void debug_check_finite(const Tensor& t, const char* what);

} // namespace afdc
