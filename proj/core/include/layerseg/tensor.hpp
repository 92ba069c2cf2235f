#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "layerseg/error.hpp"

namespace layerseg {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_numel(const Shape& shape) {
    std::size_t n = 1;
    for (std::size_t e : shape) n *= e;
    return n;
}

inline std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << 'x';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

// Dense n-dimensional array, row-major. Element type is float in production
// and double in verification mode (finite-difference gradient checks).
template <typename S>
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(Shape shape)
        : shape_(std::move(shape)), data_(shape_numel(shape_), S(0)) {}

    Tensor(Shape shape, std::vector<S> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        if (data_.size() != shape_numel(shape_)) {
            throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                             " does not match shape " + shape_str(shape_));
        }
    }

    static Tensor full(Shape shape, S value) {
        Tensor t(std::move(shape));
        for (S& v : t.data_) v = value;
        return t;
    }

    const Shape& shape() const { return shape_; }
    std::size_t dim(std::size_t i) const { return shape_.at(i); }
    std::size_t rank() const { return shape_.size(); }
    std::size_t numel() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    std::span<S> data() { return data_; }
    std::span<const S> data() const { return data_; }
    S* raw() { return data_.data(); }
    const S* raw() const { return data_.data(); }

    S& operator[](std::size_t i) { return data_[i]; }
    const S& operator[](std::size_t i) const { return data_[i]; }

    // Indexed access for the ranks the networks use.
    S& at(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
    const S& at(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }
    S& at(std::size_t c, std::size_t h, std::size_t w) {
        return data_[(c * shape_[1] + h) * shape_[2] + w];
    }
    const S& at(std::size_t c, std::size_t h, std::size_t w) const {
        return data_[(c * shape_[1] + h) * shape_[2] + w];
    }
    S& at(std::size_t a, std::size_t b, std::size_t c, std::size_t d) {
        return data_[((a * shape_[1] + b) * shape_[2] + c) * shape_[3] + d];
    }
    const S& at(std::size_t a, std::size_t b, std::size_t c, std::size_t d) const {
        return data_[((a * shape_[1] + b) * shape_[2] + c) * shape_[3] + d];
    }

    // Same data, new extents; total element count must not change.
    Tensor reshaped(Shape shape) const {
        if (shape_numel(shape) != numel()) {
            throw ShapeError("cannot reshape " + shape_str(shape_) + " to " + shape_str(shape));
        }
        return Tensor(std::move(shape), data_);
    }

    bool all_finite() const {
        for (const S& v : data_) {
            if (!std::isfinite(v)) return false;
        }
        return true;
    }

    void fill(S value) {
        for (S& v : data_) v = value;
    }

    template <typename T>
    Tensor<T> cast() const {
        std::vector<T> out(data_.size());
        for (std::size_t i = 0; i < data_.size(); ++i) out[i] = static_cast<T>(data_[i]);
        return Tensor<T>(shape_, std::move(out));
    }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

private:
    Shape shape_;
    std::vector<S> data_;
};

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

template <typename S>
void require_shape(const Tensor<S>& t, const Shape& want, const char* what) {
    if (t.shape() != want) {
        throw ShapeError(std::string(what) + ": expected " + shape_str(want) + ", got " +
                         shape_str(t.shape()));
    }
}

}  // namespace layerseg
