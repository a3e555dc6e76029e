#include "eps/tensor.hpp"

#include "eps/error.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace eps {

std::size_t shape_product(const std::vector<std::size_t>& shape)
{
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const std::vector<std::size_t>& shape)
{
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i)
            s += ",";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

Tensor::Tensor(std::vector<std::size_t> shape, double fill)
    : shape_(std::move(shape)), data_(shape_product(shape_), fill)
{
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data))
{
    if (shape_product(shape_) != data_.size())
        throw Error(ErrorKind::Shape, "data length " + std::to_string(data_.size()) + " does not match shape " +
                                          shape_string(shape_));
}

void Tensor::fill(double v)
{
    std::fill(data_.begin(), data_.end(), v);
}

bool Tensor::all_finite() const
{
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Tensor Tensor::reshaped(std::vector<std::size_t> shape) const
{
    if (shape_product(shape) != data_.size())
        throw Error(ErrorKind::Shape, "cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
    return Tensor(std::move(shape), data_);
}

}  // namespace eps
