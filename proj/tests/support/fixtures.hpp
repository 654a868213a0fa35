#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "holdstab/core/cycle.hpp"
#include "holdstab/eval/splits.hpp"
#include "holdstab/features/sequence.hpp"
#include "holdstab/simulate/simulator.hpp"

namespace holdstab::testing {

/// A fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag);
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const noexcept { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

/// Small image sizes and coarse rates so a cycle simulates in milliseconds.
SimConfig fast_sim_config();

/// Gaussian sequences with labels: the first round(n * neq_fraction) change
/// label between pose and shake. Shake labels alternate so both classes occur.
std::vector<FeatureSequence> random_sequences(std::size_t n, int timesteps, int dim, std::uint64_t seed,
                                              double neq_fraction = 0.25);

/// Keys over every (object, pose) pair with `per_cell` cycles each.
std::vector<CycleKey> grid_keys(int objects, int per_cell);

}  // namespace holdstab::testing
