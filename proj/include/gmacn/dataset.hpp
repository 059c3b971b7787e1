#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "gmacn/epoch_set.hpp"
#include "gmacn/montage.hpp"

namespace gmacn {

// Synthetic planted-electrode benchmark: every epoch of class c carries a
// class-specific feature template on a known electrode subset, everything
// else is Gaussian noise. The planted map is the ground truth that electrode
// importance scores are validated against.
struct SyntheticSpec {
    std::shared_ptr<const Montage> montage;
    int classes = 4;
    int epochs_per_class = 100;
    std::map<int, std::vector<std::size_t>> planted;  // class -> electrode indices
    double signal_gain = 5.0;
    double noise_sigma = 1.0;
    std::uint64_t seed = 7;
    std::size_t n_features = 7;

    void validate() const;
};

// Deterministic planted subsets: `per_class` distinct electrodes per class,
// drawn from the given seed (stream documented in the epoch-file header).
std::map<int, std::vector<std::size_t>> choose_planted(const Montage& m, int classes,
                                                       std::size_t per_class,
                                                       std::uint64_t seed);

EpochSet generate(const SyntheticSpec& spec);

struct Split {
    EpochSet train;
    EpochSet test;
};

// Stratified by class, deterministic per seed, every epoch in exactly one
// side and at least one epoch of each class on each side.
Split split(const EpochSet& data, double train_fraction, std::uint64_t seed);

// Line-delimited JSON: a header object, then one object per epoch. Doubles
// round-trip exactly.
void save_epochs(const EpochSet& data, const std::string& path);
EpochSet load_epochs(const std::string& path);
EpochSet load_epochs(const std::string& path, const std::string& expected_montage_hash);

}  // namespace gmacn
