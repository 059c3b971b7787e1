#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "gmacn/matrix.hpp"

namespace gmacn {

struct Epoch {
    int label = 0;
    Matrix features;  // N electrodes x F features
};

// Per-trial feature matrices with class labels. All epochs share the same
// (N, F); the montage hash ties the electrode ordering to a montage.
struct EpochSet {
    std::string montage_name;
    std::string montage_hash;
    std::size_t n_electrodes = 0;
    std::size_t n_features = 0;
    int n_classes = 0;
    std::vector<std::string> feature_names;
    nlohmann::json metadata;  // provenance: generator or preprocessing recipe
    std::vector<Epoch> epochs;

    void validate() const;  // throws on any invariant violation
};

}  // namespace gmacn
