#include "lsir/krylov.hpp"

namespace lsir {

KrylovConfig default_lsqr_config(double u, std::size_t n) {
  KrylovConfig c;
  c.tol = u < 1e-10 ? 1e-14 : 1e-7;
  c.max_iters = static_cast<int>(n);
  c.precondition = Precondition::SketchRight;
  return c;
}

KrylovConfig default_gmres_config(double u) {
  KrylovConfig c;
  c.tol = u < 1e-10 ? 1e-12 : 1e-6;
  c.max_iters = 50;
  c.precondition = Precondition::SketchSplitAugmented;
  return c;
}

}  // namespace lsir
