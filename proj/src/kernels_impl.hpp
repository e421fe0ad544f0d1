#pragma once

#include "qus/kernels.hpp"

namespace qus::kernels::detail {

#if defined(QUS_HAVE_AVX2)
const KernelTable& avx2_table_unchecked() noexcept;
#endif

}  // namespace qus::kernels::detail
