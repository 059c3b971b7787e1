#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace gmacn {

struct Electrode {
    std::string name;
    // Scalp position on a head of radius 100, x toward the right ear,
    // y toward the nasion, z toward the vertex.
    double x = 0.0, y = 0.0, z = 0.0;
    // Azimuthal-equidistant projection used for scalp maps; the equator of
    // the head sphere lands on the circle of radius 100.
    double px = 0.0, py = 0.0;
};

// Ordered electrode set. The order is load/build order and defines node
// numbering for every adjacency and feature matrix downstream.
class Montage {
public:
    Montage() = default;
    explicit Montage(std::string name, std::vector<Electrode> electrodes);

    // The standard 64-channel arrangement of the 10-05/10-10 system
    // (Fp1 ... O2 plus P9/P10/Iz), on an ideal sphere of radius 100.
    static Montage builtin_64();

    static Montage load_csv(const std::string& path);
    void save_csv(const std::string& path) const;

    const std::string& name() const { return name_; }
    std::size_t count() const { return electrodes_.size(); }
    const std::vector<Electrode>& electrodes() const { return electrodes_; }
    const Electrode& at(std::size_t i) const { return electrodes_[i]; }

    std::optional<std::size_t> index_of(const std::string& name) const;

    double distance(std::size_t i, std::size_t j) const;
    double distance(const std::string& a, const std::string& b) const;

    // Identity hash over names and full-precision coordinates; epoch files,
    // graph sidecars and checkpoints carry it to detect mismatched inputs.
    std::string hash() const;

private:
    std::string name_;
    std::vector<Electrode> electrodes_;
    std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace gmacn
