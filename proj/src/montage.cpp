#include "gmacn/montage.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "gmacn/errors.hpp"
#include "gmacn/hash.hpp"

namespace gmacn {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr double kHeadRadius = 100.0;

struct Vec3 {
    double x, y, z;
};

double deg(double d) { return d * kPi / 180.0; }

// Point at fraction f of the nasion -> vertex -> inion midline arc.
Vec3 midline(double f) {
    const double a = f * kPi;
    return {0.0, std::cos(a), std::sin(a)};
}

// Point on the circumferential ring (the small circle through Fpz, T7, Oz)
// at azimuth `az` degrees from the front, on the left hemisphere.
Vec3 circumference_left(double az) {
    const double r = std::cos(deg(18.0));
    const double z = std::sin(deg(18.0));
    return {-r * std::sin(deg(az)), r * std::cos(deg(az)), z};
}

// One 10%-step below the circumferential ring, i.e. on the head equator.
Vec3 equator_left(double az) {
    return {-std::sin(deg(az)), std::cos(deg(az)), 0.0};
}

Vec3 slerp(const Vec3& u, const Vec3& v, double t) {
    const double dot = u.x * v.x + u.y * v.y + u.z * v.z;
    const double omega = std::acos(std::max(-1.0, std::min(1.0, dot)));
    const double s = std::sin(omega);
    const double wu = std::sin((1.0 - t) * omega) / s;
    const double wv = std::sin(t * omega) / s;
    return {wu * u.x + wv * v.x, wu * u.y + wv * v.y, wu * u.z + wv * v.z};
}

Vec3 mirror(const Vec3& v) { return {-v.x, v.y, v.z}; }

void project(Electrode& e) {
    const double hxy = std::hypot(e.x, e.y);
    const double gamma = std::atan2(hxy, e.z);  // angle from the vertex
    const double rho = gamma * (200.0 / kPi);   // equator -> radius 100
    if (hxy < 1e-12) {
        e.px = 0.0;
        e.py = 0.0;
    } else {
        e.px = rho * e.x / hxy;
        e.py = rho * e.y / hxy;
    }
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
}

}  // namespace

Montage::Montage(std::string name, std::vector<Electrode> electrodes)
    : name_(std::move(name)), electrodes_(std::move(electrodes)) {
    for (std::size_t i = 0; i < electrodes_.size(); ++i) {
        auto [it, inserted] = index_.emplace(electrodes_[i].name, i);
        if (!inserted) {
            throw FormatError("montage: duplicate electrode name \"" + electrodes_[i].name +
                              "\"");
        }
        if (!std::isfinite(electrodes_[i].x) || !std::isfinite(electrodes_[i].y) ||
            !std::isfinite(electrodes_[i].z)) {
            throw FormatError("montage: non-finite position for \"" + electrodes_[i].name +
                              "\"");
        }
        project(electrodes_[i]);
    }
}

Montage Montage::builtin_64() {
    // Geodesic construction of the 10-10 grid on an ideal sphere: midline
    // electrodes along the nasion-inion arc, the circumferential ring at 10%
    // steps, and intermediate rows slerped between their midline and ring
    // anchors. Right-hemisphere electrodes are exact mirrors of the left.
    std::map<std::string, Vec3> pos;

    const std::pair<const char*, double> mid[] = {
        {"Fpz", 0.1}, {"AFz", 0.2}, {"Fz", 0.3}, {"FCz", 0.4}, {"Cz", 0.5},
        {"CPz", 0.6}, {"Pz", 0.7},  {"POz", 0.8}, {"Oz", 0.9}, {"Iz", 1.0}};
    for (const auto& [n, f] : mid) pos[n] = midline(f);

    const std::pair<const char*, double> ring[] = {
        {"Fp1", 18.0}, {"AF7", 36.0}, {"F7", 54.0},  {"FT7", 72.0}, {"T7", 90.0},
        {"TP7", 108.0}, {"P7", 126.0}, {"PO7", 144.0}, {"O1", 162.0}};
    for (const auto& [n, az] : ring) pos[n] = circumference_left(az);
    pos["P9"] = equator_left(126.0);

    const std::tuple<const char*, const char*, const char*, double> rows[] = {
        {"F1", "Fz", "F7", 0.25},    {"F3", "Fz", "F7", 0.5},    {"F5", "Fz", "F7", 0.75},
        {"FC1", "FCz", "FT7", 0.25}, {"FC3", "FCz", "FT7", 0.5}, {"FC5", "FCz", "FT7", 0.75},
        {"C1", "Cz", "T7", 0.25},    {"C3", "Cz", "T7", 0.5},    {"C5", "Cz", "T7", 0.75},
        {"CP1", "CPz", "TP7", 0.25}, {"CP3", "CPz", "TP7", 0.5}, {"CP5", "CPz", "TP7", 0.75},
        {"P1", "Pz", "P7", 0.25},    {"P3", "Pz", "P7", 0.5},    {"P5", "Pz", "P7", 0.75},
        {"AF3", "AFz", "AF7", 0.5},  {"PO3", "POz", "PO7", 0.5}};
    for (const auto& [n, a, b, t] : rows) pos[n] = slerp(pos[a], pos[b], t);

    const std::pair<const char*, const char*> mirrors[] = {
        {"Fp2", "Fp1"}, {"AF8", "AF7"}, {"AF4", "AF3"}, {"F2", "F1"},   {"F4", "F3"},
        {"F6", "F5"},   {"F8", "F7"},   {"FT8", "FT7"}, {"FC6", "FC5"}, {"FC4", "FC3"},
        {"FC2", "FC1"}, {"C2", "C1"},   {"C4", "C3"},   {"C6", "C5"},   {"T8", "T7"},
        {"TP8", "TP7"}, {"CP6", "CP5"}, {"CP4", "CP3"}, {"CP2", "CP1"}, {"P2", "P1"},
        {"P4", "P3"},   {"P6", "P5"},   {"P8", "P7"},   {"P10", "P9"},  {"PO8", "PO7"},
        {"PO4", "PO3"}, {"O2", "O1"}};
    for (const auto& [n, src] : mirrors) pos[n] = mirror(pos[src]);

    // Standard 64-channel ordering (left block, then midline/right block).
    const char* order[] = {
        "Fp1", "AF7", "AF3", "F1",  "F3",  "F5",  "F7",  "FT7", "FC5", "FC3", "FC1",
        "C1",  "C3",  "C5",  "T7",  "TP7", "CP5", "CP3", "CP1", "P1",  "P3",  "P5",
        "P7",  "P9",  "PO7", "PO3", "O1",  "Iz",  "Oz",  "POz", "Pz",  "CPz", "Fpz",
        "Fp2", "AF8", "AF4", "AFz", "Fz",  "F2",  "F4",  "F6",  "F8",  "FT8", "FC6",
        "FC4", "FC2", "FCz", "Cz",  "C2",  "C4",  "C6",  "T8",  "TP8", "CP6", "CP4",
        "CP2", "P2",  "P4",  "P6",  "P8",  "P10", "PO8", "PO4", "O2"};

    std::vector<Electrode> electrodes;
    electrodes.reserve(64);
    for (const char* n : order) {
        const Vec3& v = pos.at(n);
        electrodes.push_back(
            Electrode{n, v.x * kHeadRadius, v.y * kHeadRadius, v.z * kHeadRadius, 0.0, 0.0});
    }
    return Montage("builtin-64", std::move(electrodes));
}

Montage Montage::load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("montage: cannot open \"" + path + "\"");
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw FormatError("montage: empty file \"" + path + "\"");
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "name,x,y,z") {
        throw FormatError("montage: line 1: expected header \"name,x,y,z\", got \"" + line +
                          "\"");
    }

    std::vector<Electrode> electrodes;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string name, xs, ys, zs, extra;
        if (!std::getline(ss, name, ',') || !std::getline(ss, xs, ',') ||
            !std::getline(ss, ys, ',') || !std::getline(ss, zs, ',')) {
            throw FormatError("montage: line " + std::to_string(lineno) +
                              ": expected 4 comma-separated fields");
        }
        if (std::getline(ss, extra, ',')) {
            throw FormatError("montage: line " + std::to_string(lineno) + ": trailing fields");
        }
        Electrode e;
        e.name = name;
        const std::string* parts[] = {&xs, &ys, &zs};
        double* coords[] = {&e.x, &e.y, &e.z};
        for (int k = 0; k < 3; ++k) {
            std::size_t used = 0;
            try {
                *coords[k] = std::stod(*parts[k], &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used != parts[k]->size() || parts[k]->empty()) {
                throw FormatError("montage: line " + std::to_string(lineno) +
                                  ": non-numeric coordinate \"" + *parts[k] + "\"");
            }
        }
        for (const Electrode& prev : electrodes) {
            if (prev.name == e.name) {
                throw FormatError("montage: line " + std::to_string(lineno) +
                                  ": duplicate electrode name \"" + e.name + "\"");
            }
        }
        electrodes.push_back(e);
    }
    std::string stem = path;
    if (auto slash = stem.find_last_of("/\\"); slash != std::string::npos) {
        stem = stem.substr(slash + 1);
    }
    if (auto dot = stem.find_last_of('.'); dot != std::string::npos) stem = stem.substr(0, dot);
    return Montage(stem, std::move(electrodes));
}

void Montage::save_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) {
        throw IoError("montage: cannot write \"" + path + "\"");
    }
    out << "name,x,y,z\n";
    for (const Electrode& e : electrodes_) {
        out << e.name << ',' << fmt_double(e.x) << ',' << fmt_double(e.y) << ','
            << fmt_double(e.z) << '\n';
    }
}

std::optional<std::size_t> Montage::index_of(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

double Montage::distance(std::size_t i, std::size_t j) const {
    const Electrode& a = electrodes_[i];
    const Electrode& b = electrodes_[j];
    const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

double Montage::distance(const std::string& a, const std::string& b) const {
    auto ia = index_of(a), ib = index_of(b);
    if (!ia || !ib) {
        throw ParamError("montage: unknown electrode \"" + (!ia ? a : b) + "\"");
    }
    return distance(*ia, *ib);
}

std::string Montage::hash() const {
    std::uint64_t h = 1469598103934665603ull;
    for (const Electrode& e : electrodes_) {
        h = fnv1a64(e.name + "|" + fmt_double(e.x) + "," + fmt_double(e.y) + "," +
                        fmt_double(e.z) + "\n",
                    h);
    }
    return to_hex(h);
}

}  // namespace gmacn
