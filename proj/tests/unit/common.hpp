#pragma once

#include <memory>

#include "arrayscat/lattice.hpp"

namespace testing {

inline std::shared_ptr<const arrayscat::DispersionModel> default_model() {
  static const auto m = std::make_shared<arrayscat::DispersionModel>(arrayscat::LatticeSpec{});
  return m;
}

}  // namespace testing
