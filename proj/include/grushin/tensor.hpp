#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include <Eigen/Core>

namespace grushin::detail {

inline std::size_t ipow(std::size_t base, int exp)
{
    std::size_t r = 1;
    for (int i = 0; i < exp; ++i) r *= base;
    return r;
}

/// Applies M along every axis of a row-major rank-`rank` tensor whose
/// extents all equal M.cols(); the result has extents M.rows().
template <class Scalar>
std::vector<Scalar> apply_each_axis(const std::vector<Scalar>& in, int rank, const Eigen::MatrixXd& M)
{
    const std::size_t rows = static_cast<std::size_t>(M.rows());
    const std::size_t cols = static_cast<std::size_t>(M.cols());
    std::vector<Scalar> cur = in;
    std::vector<std::size_t> shape(static_cast<std::size_t>(rank), cols);
    for (int a = 0; a < rank; ++a) {
        std::size_t pre = 1, post = 1;
        for (int j = 0; j < a; ++j) pre *= shape[j];
        for (int j = a + 1; j < rank; ++j) post *= shape[j];
        std::vector<Scalar> out(pre * rows * post, Scalar(0));
        for (std::size_t p = 0; p < pre; ++p) {
            for (std::size_t r = 0; r < rows; ++r) {
                Scalar* dst = out.data() + (p * rows + r) * post;
                for (std::size_t c = 0; c < cols; ++c) {
                    const double w = M(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
                    if (w == 0.0) continue;
                    const Scalar* src = cur.data() + (p * cols + c) * post;
                    for (std::size_t q = 0; q < post; ++q) dst[q] += w * src[q];
                }
            }
        }
        shape[static_cast<std::size_t>(a)] = rows;
        cur.swap(out);
    }
    return cur;
}

} // namespace grushin::detail
