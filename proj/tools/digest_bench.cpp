// SPDX-License-Identifier: Apache-2.0
//
// Compares the serial and OpenMP layer-digest paths on synthetic
// stacks. Both must produce identical digests; the table shows what
// the parallel path buys as layer count and size grow.
#include <chrono>
#include <cstdio>
#include <random>

#include "ghostedit/archive.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace ghostedit;

namespace {

std::vector<layerfs::LayerBlob> synthetic_stack(std::size_t layer_count,
                                                std::size_t bytes_per_entry,
                                                std::size_t entries_per_layer) {
    std::mt19937 rng(42);
    std::vector<layerfs::LayerBlob> layers(layer_count);
    for (std::size_t i = 0; i < layer_count; ++i) {
        for (std::size_t j = 0; j < entries_per_layer; ++j) {
            tar::TarEntry entry;
            entry.path = "data/layer" + std::to_string(i) + "/blob" + std::to_string(j);
            entry.mtime = 1723593600;
            entry.content.resize(bytes_per_entry);
            for (auto& byte : entry.content)
                byte = static_cast<std::uint8_t>(rng());
            layers[i].entries.push_back(std::move(entry));
        }
    }
    return layers;
}

template <typename F> double time_ms(F&& f, int repeats) {
    auto start = std::chrono::steady_clock::now();
    for (int i = 0; i < repeats; ++i)
        f();
    auto stop = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(stop - start).count() / repeats;
}

} // namespace

int main() {
#ifdef _OPENMP
    std::printf("openmp threads: %d\n", omp_get_max_threads());
#else
    std::printf("openmp: not enabled (parallel path runs serially)\n");
#endif
    std::printf("%8s %10s %12s %12s %8s\n", "layers", "bytes", "serial(ms)", "parallel(ms)",
                "speedup");

    for (auto [layer_count, entry_bytes] :
         {std::pair<std::size_t, std::size_t>{4, 1 << 16},
          {8, 1 << 16}, {16, 1 << 18}, {32, 1 << 18}, {64, 1 << 16}}) {
        auto layers = synthetic_stack(layer_count, entry_bytes, 8);

        auto serial = archive::compute_all_diff_ids_serial(layers);
        auto parallel = archive::compute_all_diff_ids(layers);
        if (serial != parallel) {
            std::fprintf(stderr, "digest mismatch between serial and parallel paths\n");
            return 1;
        }

        int repeats = layer_count >= 32 ? 3 : 10;
        double serial_ms =
            time_ms([&] { archive::compute_all_diff_ids_serial(layers); }, repeats);
        double parallel_ms = time_ms([&] { archive::compute_all_diff_ids(layers); }, repeats);
        std::printf("%8zu %10zu %12.2f %12.2f %7.2fx\n", layer_count,
                    entry_bytes * 8 * layer_count, serial_ms, parallel_ms,
                    serial_ms / parallel_ms);
    }
    return 0;
}
