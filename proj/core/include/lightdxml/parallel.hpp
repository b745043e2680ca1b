#pragma once

#include <cstddef>

namespace lightdxml {

/// Sets the worker count used by row-parallel loops. 0 keeps the runtime default.
void set_num_threads(std::size_t n);
std::size_t num_threads();

}  // namespace lightdxml
