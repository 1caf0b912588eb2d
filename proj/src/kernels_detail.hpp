#pragma once

#include "tvpursuit/kernels.hpp"

namespace tvp::kernels::detail {

bool next_combination(std::span<int> comb, int d);
double support_delta(const Matrix& a, std::span<const int> support, Matrix& gram_buf);
void scan_range(const Matrix& a, int k, std::uint64_t first, std::uint64_t last, RipScan& best);

}  // namespace tvp::kernels::detail
