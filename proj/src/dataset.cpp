#include "gmacn/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "gmacn/errors.hpp"
#include "gmacn/rng.hpp"

namespace gmacn {

void EpochSet::validate() const {
    for (const Epoch& e : epochs) {
        if (e.features.rows() != n_electrodes || e.features.cols() != n_features) {
            throw FormatError("epoch set: epoch shape " + e.features.shape_str() +
                              " does not match header " + std::to_string(n_electrodes) + "x" +
                              std::to_string(n_features));
        }
        if (e.label < 0 || e.label >= n_classes) {
            throw FormatError("epoch set: label " + std::to_string(e.label) +
                              " outside class count " + std::to_string(n_classes));
        }
    }
    if (feature_names.size() != n_features) {
        throw FormatError("epoch set: feature name count mismatch");
    }
}

void SyntheticSpec::validate() const {
    if (!montage) throw ParamError("synthetic: montage required");
    if (classes < 1) throw ParamError("synthetic: classes must be >= 1");
    if (epochs_per_class < 1) throw ParamError("synthetic: epochs_per_class must be >= 1");
    if (!(signal_gain >= 0.0)) throw ParamError("synthetic: signal_gain must be >= 0");
    if (!(noise_sigma >= 0.0)) throw ParamError("synthetic: noise_sigma must be >= 0");
    if (n_features < 1) throw ParamError("synthetic: n_features must be >= 1");
    for (const auto& [cls, electrodes] : planted) {
        if (cls < 0 || cls >= classes) {
            throw ParamError("synthetic: planted class " + std::to_string(cls) +
                             " outside class count");
        }
        if (electrodes.empty()) {
            throw ParamError("synthetic: planted subset for class " + std::to_string(cls) +
                             " is empty");
        }
        for (std::size_t e : electrodes) {
            if (e >= montage->count()) {
                throw ParamError("synthetic: planted electrode index " + std::to_string(e) +
                                 " outside montage");
            }
        }
    }
}

std::map<int, std::vector<std::size_t>> choose_planted(const Montage& m, int classes,
                                                       std::size_t per_class,
                                                       std::uint64_t seed) {
    if (per_class < 1 || per_class > m.count()) {
        throw ParamError("choose_planted: per_class out of range");
    }
    Rng rng(seed ^ 0x9e3779b97f4a7c15ull);
    std::map<int, std::vector<std::size_t>> planted;
    for (int c = 0; c < classes; ++c) {
        std::vector<std::size_t> all(m.count());
        std::iota(all.begin(), all.end(), 0u);
        rng.shuffle(all);
        all.resize(per_class);
        std::sort(all.begin(), all.end());
        planted[c] = std::move(all);
    }
    return planted;
}

EpochSet generate(const SyntheticSpec& spec) {
    spec.validate();
    const std::size_t n = spec.montage->count();
    const std::size_t f = spec.n_features;

    EpochSet set;
    set.montage_name = spec.montage->name();
    set.montage_hash = spec.montage->hash();
    set.n_electrodes = n;
    set.n_features = f;
    set.n_classes = spec.classes;
    for (std::size_t i = 0; i < f; ++i) set.feature_names.push_back("f" + std::to_string(i));

    nlohmann::json planted_json = nlohmann::json::object();
    for (const auto& [cls, electrodes] : spec.planted) {
        planted_json[std::to_string(cls)] = electrodes;
    }
    set.metadata = {
        {"source", "synthetic"},
        {"noise", "mt19937_64/box-muller"},
        {"signal_gain", spec.signal_gain},
        {"noise_sigma", spec.noise_sigma},
        {"seed", spec.seed},
        {"epochs_per_class", spec.epochs_per_class},
        {"planted", planted_json},
    };

    Rng rng(spec.seed);

    // Unit-norm template per class, drawn before any epoch data. Draw order
    // is part of the format contract: templates (class-major), then epochs
    // (class-major, epoch, electrode, feature).
    std::vector<std::vector<double>> templates(static_cast<std::size_t>(spec.classes));
    for (auto& t : templates) {
        t.resize(f);
        double norm_sq = 0.0;
        for (double& v : t) {
            v = rng.normal();
            norm_sq += v * v;
        }
        const double norm = std::sqrt(norm_sq);
        if (norm > 0.0) {
            for (double& v : t) v /= norm;
        }
    }

    for (int c = 0; c < spec.classes; ++c) {
        std::vector<bool> is_planted(n, false);
        if (auto it = spec.planted.find(c); it != spec.planted.end()) {
            for (std::size_t e : it->second) is_planted[e] = true;
        }
        for (int k = 0; k < spec.epochs_per_class; ++k) {
            Epoch epoch;
            epoch.label = c;
            epoch.features = Matrix(n, f);
            for (std::size_t e = 0; e < n; ++e) {
                for (std::size_t j = 0; j < f; ++j) {
                    double v = spec.noise_sigma * rng.normal();
                    if (is_planted[e]) v += spec.signal_gain * templates[c][j];
                    epoch.features(e, j) = v;
                }
            }
            set.epochs.push_back(std::move(epoch));
        }
    }
    set.validate();
    return set;
}

Split split(const EpochSet& data, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0) || !(train_fraction < 1.0)) {
        throw ParamError("split: train fraction must lie strictly between 0 and 1");
    }
    std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(data.n_classes));
    for (std::size_t i = 0; i < data.epochs.size(); ++i) {
        by_class[static_cast<std::size_t>(data.epochs[i].label)].push_back(i);
    }

    Rng rng(seed);
    std::vector<bool> in_train(data.epochs.size(), false);
    for (std::size_t c = 0; c < by_class.size(); ++c) {
        auto& idx = by_class[c];
        if (idx.empty()) continue;
        if (idx.size() < 2) {
            throw ParamError("split: class " + std::to_string(c) +
                             " has fewer than 2 epochs; cannot stratify");
        }
        rng.shuffle(idx);
        const auto n = static_cast<double>(idx.size());
        std::size_t n_train = static_cast<std::size_t>(std::llround(train_fraction * n));
        n_train = std::clamp<std::size_t>(n_train, 1, idx.size() - 1);
        for (std::size_t k = 0; k < n_train; ++k) in_train[idx[k]] = true;
    }

    Split out;
    out.train = data;
    out.test = data;
    out.train.epochs.clear();
    out.test.epochs.clear();
    for (std::size_t i = 0; i < data.epochs.size(); ++i) {
        (in_train[i] ? out.train : out.test).epochs.push_back(data.epochs[i]);
    }
    return out;
}

void save_epochs(const EpochSet& data, const std::string& path) {
    data.validate();
    std::ofstream out(path);
    if (!out) {
        throw IoError("save_epochs: cannot write \"" + path + "\"");
    }
    nlohmann::json header = {
        {"format", "gmacn-epochs-v1"},
        {"montage_name", data.montage_name},
        {"montage_hash", data.montage_hash},
        {"n_electrodes", data.n_electrodes},
        {"n_features", data.n_features},
        {"n_classes", data.n_classes},
        {"feature_names", data.feature_names},
        {"n_epochs", data.epochs.size()},
        {"metadata", data.metadata},
    };
    out << header.dump() << '\n';
    for (const Epoch& e : data.epochs) {
        nlohmann::json rec = {{"label", e.label}, {"values", e.features.data()}};
        out << rec.dump() << '\n';
    }
    if (!out) {
        throw IoError("save_epochs: write failed for \"" + path + "\"");
    }
}

EpochSet load_epochs(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("load_epochs: cannot open \"" + path + "\"");
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw FormatError("load_epochs: \"" + path + "\" is empty");
    }

    EpochSet set;
    std::size_t declared_epochs = 0;
    try {
        const nlohmann::json header = nlohmann::json::parse(line);
        if (header.at("format").get<std::string>() != "gmacn-epochs-v1") {
            throw FormatError("load_epochs: \"" + path + "\": unknown format field");
        }
        set.montage_name = header.at("montage_name").get<std::string>();
        set.montage_hash = header.at("montage_hash").get<std::string>();
        set.n_electrodes = header.at("n_electrodes").get<std::size_t>();
        set.n_features = header.at("n_features").get<std::size_t>();
        set.n_classes = header.at("n_classes").get<int>();
        set.feature_names = header.at("feature_names").get<std::vector<std::string>>();
        declared_epochs = header.at("n_epochs").get<std::size_t>();
        set.metadata = header.value("metadata", nlohmann::json::object());
    } catch (const nlohmann::json::exception& ex) {
        throw FormatError("load_epochs: \"" + path + "\" line 1: " + ex.what());
    }

    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        Epoch e;
        try {
            const nlohmann::json rec = nlohmann::json::parse(line);
            e.label = rec.at("label").get<int>();
            const auto values = rec.at("values").get<std::vector<double>>();
            if (values.size() != set.n_electrodes * set.n_features) {
                throw FormatError("load_epochs: \"" + path + "\" line " +
                                  std::to_string(lineno) + ": expected " +
                                  std::to_string(set.n_electrodes * set.n_features) +
                                  " values, got " + std::to_string(values.size()));
            }
            e.features = Matrix(set.n_electrodes, set.n_features);
            e.features.data() = values;
        } catch (const nlohmann::json::exception& ex) {
            throw FormatError("load_epochs: \"" + path + "\" line " + std::to_string(lineno) +
                              ": " + ex.what());
        }
        set.epochs.push_back(std::move(e));
    }
    if (set.epochs.size() != declared_epochs) {
        throw FormatError("load_epochs: \"" + path + "\": header declares " +
                          std::to_string(declared_epochs) + " epochs but file holds " +
                          std::to_string(set.epochs.size()) + " (truncated?)");
    }
    set.validate();
    return set;
}

EpochSet load_epochs(const std::string& path, const std::string& expected_montage_hash) {
    EpochSet set = load_epochs(path);
    if (set.montage_hash != expected_montage_hash) {
        throw CompatError("load_epochs: \"" + path + "\" was written against montage hash " +
                          set.montage_hash + ", expected " + expected_montage_hash);
    }
    return set;
}

}  // namespace gmacn
