#include "gresnet/ad.hpp"

#include <stdexcept>

namespace gresnet::ad {

void Tape::backward(std::span<double> adjoint) const {
  if (adjoint.size() != nodes_.size()) {
    throw std::invalid_argument("Tape::backward: adjoint size does not match tape");
  }
  for (std::size_t k = nodes_.size(); k-- > 0;) {
    const double g = adjoint[k];
    if (g == 0.0) continue;
    const Node& node = nodes_[k];
    if (node.lhs >= 0) adjoint[static_cast<std::size_t>(node.lhs)] += g * node.dlhs;
    if (node.rhs >= 0) adjoint[static_cast<std::size_t>(node.rhs)] += g * node.drhs;
  }
}

}  // namespace gresnet::ad
