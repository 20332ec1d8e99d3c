#ifndef RIA_MATRIX_H_
#define RIA_MATRIX_H_

#include <Eigen/Dense>

namespace ria {

// Dense row-major real matrix. Rows are samples, columns are features.
using Matrix2D =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::RowVectorXd;
using Vector = Eigen::VectorXd;

inline bool AllFinite(const Matrix2D& m) { return m.allFinite(); }

}  // namespace ria

#endif  // RIA_MATRIX_H_
