#include "fixtures.hpp"

#include <atomic>
#include <cmath>
#include <random>

#include "holdstab/core/rng.hpp"

namespace holdstab::testing {

namespace fs = std::filesystem;

TempDir::TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path_ = fs::temp_directory_path() /
            ("holdstab-" + tag + "-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    fs::create_directories(path_);
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

SimConfig fast_sim_config() {
    SimConfig c;
    c.image_rate_hz = 4.0;
    c.wrench_rate_hz = 10.0;
    c.tactile_height = 12;
    c.tactile_width = 16;
    c.rgb_height = 8;
    c.rgb_width = 10;
    return c;
}

std::vector<FeatureSequence> random_sequences(std::size_t n, int timesteps, int dim, std::uint64_t seed,
                                              double neq_fraction) {
    Rng rng(seed);
    const auto n_neq = static_cast<std::size_t>(std::llround(neq_fraction * static_cast<double>(n)));
    std::vector<FeatureSequence> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto& s = out[i];
        s.matrix.resize(timesteps, dim);
        for (int t = 0; t < timesteps; ++t)
            for (int d = 0; d < dim; ++d) s.matrix(t, d) = standard_normal(rng);
        s.label_shake = i % 2 ? BinaryLabel::NotStable : BinaryLabel::Stable;
        s.label_pose = i < n_neq ? (s.label_shake == BinaryLabel::Stable ? BinaryLabel::NotStable : BinaryLabel::Stable)
                                 : s.label_shake;
        s.cycle_id = "c" + std::to_string(i);
        s.object_id = "o" + std::to_string(i % 7);
        s.pose_id = static_cast<int>(i % 16) + 1;
    }
    return out;
}

std::vector<CycleKey> grid_keys(int objects, int per_cell) {
    std::vector<CycleKey> keys;
    for (int o = 0; o < objects; ++o)
        for (int p = 1; p <= 16; ++p)
            for (int k = 0; k < per_cell; ++k)
                keys.push_back({"o" + std::to_string(o) + "_p" + std::to_string(p) + "_" + std::to_string(k),
                                "o" + std::to_string(o), p});
    return keys;
}

}  // namespace holdstab::testing
