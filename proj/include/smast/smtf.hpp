#pragma once

#include <string>

#include "smast/tensor.hpp"

namespace smast {

// Binary tensor file: magic "SMTF", u32 LE version (=1), u32 LE ndim,
// ndim x u64 LE dims, then the f32 LE row-major payload.
void smtf_write(const std::string& path, const Tensor& t);
Tensor smtf_read(const std::string& path);

}  // namespace smast
