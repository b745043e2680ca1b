#include "lightdxml/parallel.hpp"

#ifdef LIGHTDXML_HAVE_OPENMP
#include <omp.h>
#endif

namespace lightdxml {

void set_num_threads(std::size_t n) {
#ifdef LIGHTDXML_HAVE_OPENMP
    if (n > 0) {
        omp_set_num_threads(static_cast<int>(n));
    }
#else
    (void)n;
#endif
}

std::size_t num_threads() {
#ifdef LIGHTDXML_HAVE_OPENMP
    return static_cast<std::size_t>(omp_get_max_threads());
#else
    return 1;
#endif
}

}  // namespace lightdxml
