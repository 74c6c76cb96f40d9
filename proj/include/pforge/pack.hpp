#ifndef PFORGE_PACK_HPP
#define PFORGE_PACK_HPP

#include <Eigen/Dense>

#include "pforge/errors.hpp"
#include "pforge/types.hpp"

namespace pforge {

// Lossless packing of a complex matrix into a flat real vector. Element
// order: column-major over the matrix, real part then imaginary part per
// entry. A 16x4 precoder becomes a vector of length 16*4*2 = 128.

inline Eigen::VectorXd pack_complex(const Eigen::MatrixXcd& m) {
  Eigen::VectorXd v(2 * m.rows() * m.cols());
  Eigen::Index idx = 0;
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      v[idx++] = m(r, c).real();
      v[idx++] = m(r, c).imag();
    }
  }
  return v;
}

inline Eigen::MatrixXcd unpack_complex(const Eigen::Ref<const Eigen::VectorXd>& v,
                                       Eigen::Index rows, Eigen::Index cols) {
  if (v.size() != 2 * rows * cols)
    throw DimensionError("unpack: vector length " + std::to_string(v.size()) +
                         " does not match 2*" + std::to_string(rows) + "*" +
                         std::to_string(cols));
  Eigen::MatrixXcd m(rows, cols);
  Eigen::Index idx = 0;
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) {
      const double re = v[idx++];
      const double im = v[idx++];
      m(r, c) = Complex(re, im);
    }
  }
  return m;
}

/// Precoder packing used for datasets and model inputs/outputs.
inline Eigen::VectorXd pack_precoder(const PrecodingMatrix& w) { return pack_complex(w); }

inline PrecodingMatrix unpack_precoder(const Eigen::Ref<const Eigen::VectorXd>& v,
                                       int num_antennas, int num_users) {
  return unpack_complex(v, num_antennas, num_users);
}

/// Channel conditioning vector: the channel is transposed to n x q first so
/// that it shares the precoder layout, then packed the same way.
inline Eigen::VectorXd pack_channel(const ChannelMatrix& h) {
  return pack_complex(h.transpose());
}

inline ChannelMatrix unpack_channel(const Eigen::Ref<const Eigen::VectorXd>& v,
                                    int num_users, int num_antennas) {
  return unpack_complex(v, num_antennas, num_users).transpose();
}

}  // namespace pforge

#endif  // PFORGE_PACK_HPP
