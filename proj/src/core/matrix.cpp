#include "askwell/matrix.hpp"

#include <algorithm>

namespace askwell {

double SparseMatrix::at(std::size_t r, std::size_t c) const {
    const auto begin = col_idx.begin() + static_cast<std::ptrdiff_t>(row_ptr[r]);
    const auto end = col_idx.begin() + static_cast<std::ptrdiff_t>(row_ptr[r + 1]);
    const auto it = std::lower_bound(begin, end, c);
    if (it == end || *it != c) return 0.0;
    return values[static_cast<std::size_t>(it - col_idx.begin())];
}

DenseMatrix SparseMatrix::to_dense() const {
    DenseMatrix out(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t p = row_ptr[r]; p < row_ptr[r + 1]; ++p) out(r, col_idx[p]) = values[p];
    }
    return out;
}

SparseMatrix SparseMatrix::from_dense(const DenseMatrix& dense) {
    SparseMatrix out;
    out.rows = dense.rows();
    out.cols = dense.cols();
    for (std::size_t r = 0; r < dense.rows(); ++r) {
        for (std::size_t c = 0; c < dense.cols(); ++c) {
            if (dense(r, c) != 0.0) {
                out.col_idx.push_back(c);
                out.values.push_back(dense(r, c));
            }
        }
        out.row_ptr.push_back(out.values.size());
    }
    return out;
}

}  // namespace askwell
