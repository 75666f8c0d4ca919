// Wall-clock comparison of the serial and threaded filter paths on the full
// 16-channel pipeline, plus the phase-kernel sweep. The two paths produce
// bit-identical outputs (see test_parallel_consistency); this target reports
// what the threading is actually worth on the current host.
#include <cstdio>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "ncp/orchestrator.hpp"

int main() {
#ifdef _OPENMP
    std::printf("threaded path: OpenMP, max %d thread(s)\n", omp_get_max_threads());
#else
    std::printf("threaded path: OpenMP not enabled in this build (serial fallback)\n");
#endif

    const double seconds = 8.0;
    const auto serial = ncp::throughput_benchmark(seconds, false);
    const auto threaded = ncp::throughput_benchmark(seconds, true);

    std::printf("\npipeline throughput over %.0f simulated seconds x 16 channels\n",
                seconds);
    std::printf("path      wall_s   samples/s    vs_real_time\n");
    std::printf("serial    %6.3f   %.3e   %8.1fx\n", serial.wall_s,
                serial.input_samples_per_s, serial.realtime_factor);
    std::printf("threaded  %6.3f   %.3e   %8.1fx\n", threaded.wall_s,
                threaded.input_samples_per_s, threaded.realtime_factor);
    std::printf("speedup   %.2fx\n", serial.wall_s / threaded.wall_s);

    std::printf("\nphase kernels, exhaustive 10-bit sweep\n");
    const auto rep = ncp::bench_compare();
    std::printf("%s", ncp::bench_report_table(rep).c_str());
    return 0;
}
