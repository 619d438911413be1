#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace plangan {

namespace detail {

// leaves doubles default-initialized so fully-overwritten buffers skip the
// zero pass
template <typename T>
struct DefaultInitAlloc : std::allocator<T> {
    template <typename U>
    struct rebind {
        using other = DefaultInitAlloc<U>;
    };
    template <typename U>
    void construct(U* p) noexcept {
        ::new (static_cast<void*>(p)) U;
    }
    template <typename U, typename... Args>
    void construct(U* p, Args&&... args) {
        ::new (static_cast<void*>(p)) U(std::forward<Args>(args)...);
    }
};

using Buffer = std::vector<double, DefaultInitAlloc<double>>;

}  // namespace detail

// Dense row-major double tensor. Buffers are shared between copies and
// detached on first mutation, so value copies and reshapes are cheap.
class Tensor {
  public:
    Tensor() = default;
    explicit Tensor(std::vector<int> shape);  // zero-filled
    Tensor(std::vector<int> shape, std::vector<double> data);

    static Tensor uninit(std::vector<int> shape);  // contents unspecified
    static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }
    static Tensor full(std::vector<int> shape, double v);
    static Tensor scalar(double v);

    const std::vector<int>& shape() const { return shape_; }
    int ndim() const { return static_cast<int>(shape_.size()); }
    int dim(int i) const { return shape_[static_cast<size_t>(i)]; }
    int size() const { return buf_ ? static_cast<int>(buf_->size()) : 0; }
    bool empty() const { return size() == 0; }

    const double* data() const { return buf_->data(); }
    double* data() {
        ensure_unique();
        return buf_->data();
    }

    double operator[](int i) const { return (*buf_)[static_cast<size_t>(i)]; }
    double& operator[](int i) {
        ensure_unique();
        return (*buf_)[static_cast<size_t>(i)];
    }

    double at(int r, int c) const { return (*buf_)[static_cast<size_t>(r) * shape_[1] + c]; }
    double& at(int r, int c) {
        ensure_unique();
        return (*buf_)[static_cast<size_t>(r) * shape_[1] + c];
    }
    double at(int a, int b, int c) const {
        return (*buf_)[(static_cast<size_t>(a) * shape_[1] + b) * shape_[2] + c];
    }
    double& at(int a, int b, int c) {
        ensure_unique();
        return (*buf_)[(static_cast<size_t>(a) * shape_[1] + b) * shape_[2] + c];
    }

    Tensor reshaped(std::vector<int> shape) const;  // shares the buffer
    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
    bool all_finite() const;

    std::vector<double> vec() const;  // copy, for tests and small paths

  private:
    Tensor(std::vector<int> shape, std::shared_ptr<detail::Buffer> buf)
        : shape_(std::move(shape)), buf_(std::move(buf)) {}
    void ensure_unique();

    std::vector<int> shape_;
    std::shared_ptr<detail::Buffer> buf_;
};

int shape_size(const std::vector<int>& shape);
std::string shape_str(const std::vector<int>& shape);

}  // namespace plangan
