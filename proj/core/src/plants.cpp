#include "adcps/plants.hpp"

namespace adcps {

SystemModel inverted_pendulum_cart() {
  SystemModel sys;
  sys.A = Matrix(4, 4);
  sys.A << 1.0, 0.01, 0.00011, 0.0,
           0.0, 0.9982, 0.0267, 0.0001,
           0.0, 0.0, 1.0016, 0.01,
           0.0, -0.0045, 0.3119, 1.0016;
  sys.B = Matrix(4, 1);
  sys.B << 0.0001, 0.0182, 0.0002, 0.0454;
  sys.C = Matrix::Identity(4, 4);
  sys.K = Matrix::Zero(1, 4);
  return sys;
}

}  // namespace adcps
