#include "plangan/tensor.hpp"

#include <cmath>
#include <cstring>

#include "plangan/errors.hpp"

namespace plangan {

int shape_size(const std::vector<int>& shape) {
    int n = 1;
    for (int d : shape) n *= d;
    return n;
}

std::string shape_str(const std::vector<int>& shape) {
    std::string s = "(";
    for (size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(shape[i]);
    }
    return s + ")";
}

Tensor::Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
    size_t n = static_cast<size_t>(shape_size(shape_));
    buf_ = std::make_shared<detail::Buffer>();
    buf_->resize(n);
    std::memset(buf_->data(), 0, n * sizeof(double));
}

Tensor::Tensor(std::vector<int> shape, std::vector<double> data) : shape_(std::move(shape)) {
    if (shape_size(shape_) != static_cast<int>(data.size()))
        throw ShapeMismatchError("tensor data length " + std::to_string(data.size()) +
                                 " does not match shape " + shape_str(shape_));
    buf_ = std::make_shared<detail::Buffer>();
    buf_->assign(data.begin(), data.end());
}

Tensor Tensor::uninit(std::vector<int> shape) {
    Tensor t;
    t.shape_ = std::move(shape);
    t.buf_ = std::make_shared<detail::Buffer>();
    t.buf_->resize(static_cast<size_t>(shape_size(t.shape_)));
    return t;
}

Tensor Tensor::full(std::vector<int> shape, double v) {
    Tensor t = uninit(std::move(shape));
    double* p = t.buf_->data();
    for (int i = 0; i < t.size(); ++i) p[i] = v;
    return t;
}

Tensor Tensor::scalar(double v) { return Tensor({1}, {v}); }

void Tensor::ensure_unique() {
    if (buf_ && buf_.use_count() > 1) buf_ = std::make_shared<detail::Buffer>(*buf_);
}

Tensor Tensor::reshaped(std::vector<int> shape) const {
    if (shape_size(shape) != size())
        throw ShapeMismatchError("cannot reshape " + shape_str(shape_) + " to " + shape_str(shape));
    return Tensor(std::move(shape), buf_);
}

bool Tensor::all_finite() const {
    for (int i = 0; i < size(); ++i)
        if (!std::isfinite((*buf_)[static_cast<size_t>(i)])) return false;
    return true;
}

std::vector<double> Tensor::vec() const {
    if (!buf_) return {};
    return std::vector<double>(buf_->begin(), buf_->end());
}

}  // namespace plangan
