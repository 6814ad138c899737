#pragma once

#include "ppmlab/common.hpp"

#include <string>
#include <vector>

namespace ppmlab {

/// Linear forward operator F with exact adjoint. Three representations:
/// dense matrix, coordinate mask, and real-embedded DFT row-mask. Mask kinds
/// keep their structural description (cheap apply, exact serialization) and
/// materialize a dense matrix once for conjugate-posterior algebra.
class LinearOperator {
public:
    enum class Kind { Dense, Mask, DftMask };

    static LinearOperator dense(Matrix f);
    /// Selects coordinates `indices` of the input.
    static LinearOperator mask(std::vector<int> indices, int input_dim);
    /// Selects rows of the real-embedded orthonormal DFT of the input.
    /// Row 2k is the cosine row of frequency k, row 2k+1 the sine row.
    static LinearOperator dft_mask(std::vector<int> rows, int input_dim);

    Kind kind() const { return kind_; }
    int input_dim() const { return input_dim_; }
    int output_dim() const { return output_dim_; }

    Vector apply(const Vector& x) const;
    Vector apply_adjoint(const Vector& v) const;
    const Matrix& to_dense() const { return dense_; }

    const std::vector<int>& structure_indices() const { return indices_; }

private:
    LinearOperator() = default;

    Kind kind_ = Kind::Dense;
    int input_dim_ = 0;
    int output_dim_ = 0;
    std::vector<int> indices_; // mask / dft-mask structure
    Matrix dense_;
};

} // namespace ppmlab
