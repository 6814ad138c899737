#include "ppmlab/linear_operator.hpp"

#include <cmath>

namespace ppmlab {

namespace {

// Real embedding of the orthonormal DFT of R^d. Rows come in (cos, sin)
// pairs per frequency; together they form an orthonormal basis, so the
// adjoint of any row selection is the plain transpose.
Matrix real_dft_matrix(int d) {
    Matrix m(d, d);
    const double two_pi = 2.0 * M_PI;
    int row = 0;
    int freq = 0;
    while (row < d) {
        if (freq == 0) {
            m.row(row++).setConstant(1.0 / std::sqrt(static_cast<double>(d)));
        } else if (2 * freq == d) {
            for (int j = 0; j < d; ++j)
                m(row, j) = ((j % 2 == 0) ? 1.0 : -1.0) / std::sqrt(static_cast<double>(d));
            ++row;
        } else {
            const double scale = std::sqrt(2.0 / d);
            for (int j = 0; j < d; ++j) m(row, j) = scale * std::cos(two_pi * freq * j / d);
            ++row;
            if (row < d) {
                for (int j = 0; j < d; ++j) m(row, j) = -scale * std::sin(two_pi * freq * j / d);
                ++row;
            }
        }
        ++freq;
    }
    return m;
}

} // namespace

LinearOperator LinearOperator::dense(Matrix f) {
    require(f.rows() > 0 && f.cols() > 0, "LinearOperator: empty matrix");
    LinearOperator op;
    op.kind_ = Kind::Dense;
    op.input_dim_ = static_cast<int>(f.cols());
    op.output_dim_ = static_cast<int>(f.rows());
    op.dense_ = std::move(f);
    return op;
}

LinearOperator LinearOperator::mask(std::vector<int> indices, int input_dim) {
    require(!indices.empty(), "LinearOperator: empty mask");
    for (int i : indices)
        require(i >= 0 && i < input_dim, "LinearOperator: mask index out of range");
    LinearOperator op;
    op.kind_ = Kind::Mask;
    op.input_dim_ = input_dim;
    op.output_dim_ = static_cast<int>(indices.size());
    op.indices_ = std::move(indices);
    op.dense_ = Matrix::Zero(op.output_dim_, input_dim);
    for (int r = 0; r < op.output_dim_; ++r) op.dense_(r, op.indices_[r]) = 1.0;
    return op;
}

LinearOperator LinearOperator::dft_mask(std::vector<int> rows, int input_dim) {
    require(!rows.empty(), "LinearOperator: empty dft mask");
    for (int i : rows)
        require(i >= 0 && i < input_dim, "LinearOperator: dft row out of range");
    LinearOperator op;
    op.kind_ = Kind::DftMask;
    op.input_dim_ = input_dim;
    op.output_dim_ = static_cast<int>(rows.size());
    op.indices_ = std::move(rows);
    Matrix full = real_dft_matrix(input_dim);
    op.dense_ = Matrix(op.output_dim_, input_dim);
    for (int r = 0; r < op.output_dim_; ++r) op.dense_.row(r) = full.row(op.indices_[r]);
    return op;
}

Vector LinearOperator::apply(const Vector& x) const {
    require(x.size() == input_dim_, "LinearOperator: apply dimension mismatch");
    if (kind_ == Kind::Mask) {
        Vector out(output_dim_);
        for (int r = 0; r < output_dim_; ++r) out[r] = x[indices_[r]];
        return out;
    }
    return dense_ * x;
}

Vector LinearOperator::apply_adjoint(const Vector& v) const {
    require(v.size() == output_dim_, "LinearOperator: adjoint dimension mismatch");
    if (kind_ == Kind::Mask) {
        Vector out = Vector::Zero(input_dim_);
        for (int r = 0; r < output_dim_; ++r) out[indices_[r]] += v[r];
        return out;
    }
    return dense_.transpose() * v;
}

} // namespace ppmlab
