// SPDX-License-Identifier: Apache-2.0

#include "pear/matrix.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace pear {

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows.size() ? rows.begin()->size() : 0;
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) {
            throw std::invalid_argument("Matrix: ragged initializer list");
        }
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

Matrix Matrix::row_vector(const std::vector<double>& v) {
    Matrix m(1, v.size());
    std::copy(v.begin(), v.end(), m.data_.begin());
    return m;
}

bool Matrix::all_finite() const {
    for (double x : data_) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

std::string Matrix::shape_str() const {
    std::ostringstream os;
    os << "(" << rows_ << "x" << cols_ << ")";
    return os.str();
}

}  // namespace pear
