// Timing comparison of the serial reference kernels against the OpenMP
// variants, plus a bitwise agreement check on every measured product.
// `--quick` runs one small size (used as a ctest smoke test).

#include <chrono>
#include <cstring>
#include <iomanip>
#include <iostream>
#include <string>
#include <vector>

#include "mcgc/kernels.hpp"
#include "mcgc/matrix.hpp"
#include "mcgc/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

using mcgc::Matrix;

Matrix random_matrix(std::size_t rows, std::size_t cols, mcgc::rng::Engine& eng) {
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < m.size(); ++i)
        m.data()[i] = mcgc::rng::uniform(eng, -1.0, 1.0);
    return m;
}

using Kernel = void (*)(const Matrix&, const Matrix&, Matrix&);

double time_kernel(Kernel kernel, const Matrix& a, const Matrix& b, Matrix& out,
                   int repeats) {
    // One warm-up, then the best of `repeats` timed runs.
    kernel(a, b, out);
    double best = 1e300;
    for (int r = 0; r < repeats; ++r) {
        const auto start = std::chrono::steady_clock::now();
        kernel(a, b, out);
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        best = std::min(best, secs);
    }
    return best;
}

} // namespace

int main(int argc, char** argv) {
    bool quick = false;
    for (int i = 1; i < argc; ++i)
        if (std::strcmp(argv[i], "--quick") == 0) quick = true;

    std::vector<std::size_t> sizes = quick ? std::vector<std::size_t>{96}
                                           : std::vector<std::size_t>{64, 128, 256, 384};
    const int repeats = quick ? 2 : 5;

#ifdef _OPENMP
    std::cout << "OpenMP threads: " << omp_get_max_threads() << "\n";
#else
    std::cout << "OpenMP: not enabled in this build\n";
#endif
    std::cout << std::setw(6) << "n" << std::setw(14) << "serial_ms" << std::setw(14)
              << "parallel_ms" << std::setw(10) << "speedup" << std::setw(12) << "GFLOP/s"
              << std::setw(10) << "bitwise" << '\n';

    mcgc::rng::Engine eng(12345);
    bool all_equal = true;
    for (const std::size_t n : sizes) {
        const Matrix a = random_matrix(n, n, eng);
        const Matrix b = random_matrix(n, n, eng);
        Matrix out_ref(n, n), out_par(n, n);

        const double t_ref = time_kernel(mcgc::kernels::ref::matmul, a, b, out_ref, repeats);
        const double t_par = time_kernel(mcgc::kernels::par::matmul, a, b, out_par, repeats);
        const bool equal = out_ref == out_par;
        all_equal = all_equal && equal;

        const double flops = 2.0 * static_cast<double>(n) * static_cast<double>(n) *
                             static_cast<double>(n);
        std::cout << std::setw(6) << n << std::fixed << std::setprecision(3)
                  << std::setw(14) << t_ref * 1e3 << std::setw(14) << t_par * 1e3
                  << std::setprecision(2) << std::setw(10) << t_ref / t_par
                  << std::setw(12) << flops / t_par / 1e9 << std::setw(10)
                  << (equal ? "yes" : "NO") << '\n';
        std::cout.unsetf(std::ios::fixed);
    }

    if (!all_equal) {
        std::cerr << "parallel kernel diverged from the serial reference\n";
        return 1;
    }
    return 0;
}
