#include "vrg/tensor.hpp"

#include <cmath>
#include <numeric>
#include <sstream>
#include <utility>

#include "vrg/errors.hpp"

namespace vrg {

namespace {

std::size_t product(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

} // namespace

Tensor::Tensor(std::vector<std::size_t> shape, double fill)
    : shape_(std::move(shape)), data_(product(shape_), fill) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (product(shape_) != data_.size()) {
        throw DimensionError("tensor data length " + std::to_string(data_.size()) +
                             " does not match shape " + shape_to_string(shape_));
    }
}

Tensor Tensor::identity(std::size_t n) {
    Tensor out({n, n});
    for (std::size_t i = 0; i < n; ++i) out(i, i) = 1.0;
    return out;
}

Tensor Tensor::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.begin()->size();
    std::vector<double> data;
    data.reserve(r * c);
    for (const auto& row : rows) {
        if (row.size() != c) throw DimensionError("from_rows: ragged rows");
        data.insert(data.end(), row.begin(), row.end());
    }
    return Tensor({r, c}, std::move(data));
}

bool Tensor::all_finite() const {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

Tensor Tensor::row(std::size_t i) const {
    if (rank() != 2) throw DimensionError("row: tensor is not rank 2");
    const std::size_t c = shape_[1];
    std::vector<double> out(data_.begin() + i * c, data_.begin() + (i + 1) * c);
    return Tensor({c}, std::move(out));
}

std::string shape_to_string(const std::vector<std::size_t>& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << 'x';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

void require_finite(const Tensor& t, const std::string& context) {
    if (!t.all_finite()) {
        throw NumericalError(context + ": non-finite value produced");
    }
}

Param::Param(Tensor v, std::string n)
    : value(std::move(v)), grad(value.shape()), name(std::move(n)) {}

void Param::zero_grad() {
    std::fill(grad.span().begin(), grad.span().end(), 0.0);
}

} // namespace vrg
