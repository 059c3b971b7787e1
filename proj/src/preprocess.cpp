#include "gmacn/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <sstream>

#include "gmacn/errors.hpp"

namespace gmacn {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

struct Biquad {
    double b0 = 1.0, b1 = 0.0, b2 = 0.0;  // numerator
    double a1 = 0.0, a2 = 0.0;            // denominator (a0 = 1)
};

// Order-4 Butterworth band-pass as two biquads (order-2 low-pass prototype,
// band transform, bilinear). Gain is normalized to 1 at the geometric center
// frequency.
std::vector<Biquad> design_butter_bandpass(double low_hz, double high_hz, double fs) {
    using cd = std::complex<double>;
    const double w1 = 2.0 * fs * std::tan(kPi * low_hz / fs);
    const double w2 = 2.0 * fs * std::tan(kPi * high_hz / fs);
    const double w0sq = w1 * w2;
    const double bw = w2 - w1;

    // Upper-half-plane prototype pole; its conjugate mirrors every step.
    const cd proto = std::polar(1.0, 3.0 * kPi / 4.0);
    const cd disc = std::sqrt(proto * proto * (bw * bw) - 4.0 * w0sq);
    const cd s_poles[2] = {(proto * bw + disc) / 2.0, (proto * bw - disc) / 2.0};

    std::vector<Biquad> cascade;
    for (const cd& s : s_poles) {
        const cd z = (2.0 * fs + s) / (2.0 * fs - s);
        Biquad q;
        q.b0 = 1.0;
        q.b1 = 0.0;
        q.b2 = -1.0;  // zeros at z = +1 and z = -1
        q.a1 = -2.0 * z.real();
        q.a2 = std::norm(z);
        cascade.push_back(q);
    }

    // Normalize |H| at the digital center frequency.
    const double wc = 2.0 * std::atan(std::sqrt(w0sq) / (2.0 * fs));
    const cd e1 = std::polar(1.0, -wc);
    const cd e2 = e1 * e1;
    cd h = 1.0;
    for (const Biquad& q : cascade) {
        h *= (q.b0 + q.b1 * e1 + q.b2 * e2) / (1.0 + q.a1 * e1 + q.a2 * e2);
    }
    cascade[0].b0 /= std::abs(h);
    cascade[0].b2 /= std::abs(h);
    return cascade;
}

void filter_in_place(std::vector<double>& x, const std::vector<Biquad>& cascade) {
    for (const Biquad& q : cascade) {
        double s1 = 0.0, s2 = 0.0;  // direct form II transposed
        for (double& v : x) {
            const double in = v;
            const double out = q.b0 * in + s1;
            s1 = q.b1 * in - q.a1 * out + s2;
            s2 = q.b2 * in - q.a2 * out;
            v = out;
        }
    }
}

void filtfilt(std::vector<double>& x, const std::vector<Biquad>& cascade) {
    filter_in_place(x, cascade);
    std::reverse(x.begin(), x.end());
    filter_in_place(x, cascade);
    std::reverse(x.begin(), x.end());
}

double sinc(double x) {
    if (x == 0.0) return 1.0;
    return std::sin(kPi * x) / (kPi * x);
}

double blackman(double u) {  // |u| <= 1
    return 0.42 + 0.5 * std::cos(kPi * u) + 0.08 * std::cos(2.0 * kPi * u);
}

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

struct WaveletFilters {
    std::vector<double> lo, hi;
};

WaveletFilters wavelet_filters(const std::string& family) {
    WaveletFilters f;
    if (family == "haar") {
        const double r = 1.0 / std::sqrt(2.0);
        f.lo = {r, r};
    } else if (family == "db4") {
        f.lo = {0.23037781330885523,   0.7148465705525415,   0.6308807679295904,
                -0.02798376941698385,  -0.18703481171888114, 0.030841381835986965,
                0.032883011666982945,  -0.010597401784997278};
    } else {
        throw ParamError("wavelet: unknown family \"" + family + "\" (expected db4 or haar)");
    }
    const std::size_t n = f.lo.size();
    f.hi.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        f.hi[k] = (k % 2 == 0 ? 1.0 : -1.0) * f.lo[n - 1 - k];
    }
    return f;
}

double log_energy(const std::vector<double>& v) {
    double e = 0.0;
    for (double x : v) e += x * x;
    return std::log(1e-12 + e);
}

}  // namespace

void RawRecording::validate() const {
    if (channels.size() != channel_names.size()) {
        throw FormatError("recording: channel/name count mismatch");
    }
    if (!(sample_rate > 0.0)) {
        throw ParamError("recording: sample rate must be positive");
    }
    for (const auto& ch : channels) {
        if (ch.size() != length()) {
            throw FormatError("recording: channels have unequal lengths");
        }
    }
    for (const Marker& m : markers) {
        if (m.sample >= length()) {
            throw FormatError("recording: marker at sample " + std::to_string(m.sample) +
                              " beyond signal length " + std::to_string(length()));
        }
    }
}

RawRecording bandpass(const RawRecording& r, double low_hz, double high_hz) {
    if (!(low_hz > 0.0) || !(high_hz > low_hz) || !(high_hz < r.sample_rate / 2.0)) {
        throw ParamError("bandpass: need 0 < low < high < rate/2, got low=" +
                         std::to_string(low_hz) + " high=" + std::to_string(high_hz) +
                         " rate=" + std::to_string(r.sample_rate));
    }
    const auto cascade = design_butter_bandpass(low_hz, high_hz, r.sample_rate);
    RawRecording out = r;
    for (auto& ch : out.channels) filtfilt(ch, cascade);
    return out;
}

RawRecording resample(const RawRecording& r, double target_hz) {
    if (!(target_hz > 0.0)) {
        throw ParamError("resample: target rate must be positive");
    }
    const double ratio = target_hz / r.sample_rate;
    const std::size_t in_len = r.length();
    const std::size_t out_len =
        static_cast<std::size_t>(std::llround(static_cast<double>(in_len) * ratio));

    // Anti-alias cutoff in cycles per input sample; 0.45 of the lower rate.
    const double fc = 0.45 * std::min(target_hz, r.sample_rate) / r.sample_rate;
    const double half_width = std::ceil(16.0 / (2.0 * fc));

    RawRecording out;
    out.channel_names = r.channel_names;
    out.sample_rate = target_hz;
    out.channels.resize(r.channels.size());

    for (std::size_t c = 0; c < r.channels.size(); ++c) {
        const std::vector<double>& x = r.channels[c];
        std::vector<double>& y = out.channels[c];
        y.resize(out_len);
        for (std::size_t n = 0; n < out_len; ++n) {
            const double tc = static_cast<double>(n) / ratio;
            const long k0 = std::max(0L, static_cast<long>(std::ceil(tc - half_width)));
            const long k1 = std::min(static_cast<long>(in_len) - 1,
                                     static_cast<long>(std::floor(tc + half_width)));
            double acc = 0.0, wsum = 0.0;
            for (long k = k0; k <= k1; ++k) {
                const double t = static_cast<double>(k) - tc;
                const double w = 2.0 * fc * sinc(2.0 * fc * t) * blackman(t / half_width);
                acc += w * x[static_cast<std::size_t>(k)];
                wsum += w;
            }
            // Kernel-sum normalization keeps DC exact and tames edge truncation.
            y[n] = wsum != 0.0 ? acc / wsum : 0.0;
        }
    }

    for (const Marker& m : r.markers) {
        const std::size_t s = static_cast<std::size_t>(
            std::llround(static_cast<double>(m.sample) * ratio));
        out.markers.push_back(Marker{std::min(s, out_len == 0 ? 0 : out_len - 1), m.label});
    }
    return out;
}

RawRecording artifact_clean_hook(const RawRecording& r) { return r; }

EpochExtraction extract_epochs(const RawRecording& r, double pre_ms, double post_ms,
                               const std::map<std::string, int>& label_map) {
    if (label_map.empty()) {
        throw ParamError("extract_epochs: empty label map");
    }
    const double fs = r.sample_rate;
    const long pre = std::lround(pre_ms * fs / 1000.0);
    const long win = std::lround((pre_ms + post_ms) * fs / 1000.0);
    if (win <= 0) {
        throw ParamError("extract_epochs: window must span at least one sample");
    }

    EpochExtraction out;
    for (const Marker& m : r.markers) {
        auto it = label_map.find(m.label);
        if (it == label_map.end()) continue;  // unmapped events are not trials
        const long start = static_cast<long>(m.sample) - pre;
        if (start < 0 || start + win > static_cast<long>(r.length())) {
            ++out.dropped;
            continue;
        }
        RawEpoch e;
        e.label = it->second;
        e.channels.reserve(r.channels.size());
        for (const auto& ch : r.channels) {
            e.channels.emplace_back(ch.begin() + start, ch.begin() + start + win);
        }
        out.epochs.push_back(std::move(e));
    }
    return out;
}

std::vector<std::vector<double>> dwt(const std::vector<double>& x, const WaveletConfig& cfg) {
    if (cfg.levels < 1) {
        throw ParamError("dwt: levels must be >= 1");
    }
    if (x.size() < (1u << cfg.levels)) {
        throw ParamError("dwt: input length " + std::to_string(x.size()) +
                         " shorter than 2^levels = " + std::to_string(1u << cfg.levels));
    }
    const WaveletFilters f = wavelet_filters(cfg.family);

    std::vector<double> approx(x);
    approx.resize(next_pow2(x.size()), 0.0);

    std::vector<std::vector<double>> bands;
    for (int level = 0; level < cfg.levels; ++level) {
        const std::size_t n = approx.size();
        const std::size_t half = n / 2;
        std::vector<double> a(half, 0.0), d(half, 0.0);
        for (std::size_t i = 0; i < half; ++i) {
            for (std::size_t k = 0; k < f.lo.size(); ++k) {
                const double v = approx[(2 * i + k) % n];
                a[i] += f.lo[k] * v;
                d[i] += f.hi[k] * v;
            }
        }
        bands.push_back(std::move(d));
        approx = std::move(a);
    }
    bands.push_back(std::move(approx));
    return bands;
}

Matrix wavelet_features(const RawEpoch& epoch, const WaveletConfig& cfg) {
    const std::size_t n_channels = epoch.channels.size();
    const std::size_t n_features = static_cast<std::size_t>(cfg.levels) + 3;
    Matrix features(n_channels, n_features);
    for (std::size_t c = 0; c < n_channels; ++c) {
        const std::vector<double>& ch = epoch.channels[c];
        const auto bands = dwt(ch, cfg);
        for (std::size_t b = 0; b < bands.size(); ++b) {
            features(c, b) = log_energy(bands[b]);
        }
        double mean = 0.0;
        for (double v : ch) mean += v;
        mean /= static_cast<double>(ch.size());
        double var = 0.0;
        for (double v : ch) var += (v - mean) * (v - mean);
        var /= static_cast<double>(ch.size());
        features(c, bands.size()) = mean;
        features(c, bands.size() + 1) = var;
    }
    return features;
}

std::vector<std::string> wavelet_feature_names(const WaveletConfig& cfg) {
    std::vector<std::string> names;
    for (int l = 1; l <= cfg.levels; ++l) {
        names.push_back(cfg.family + "_d" + std::to_string(l) + "_loge");
    }
    names.push_back(cfg.family + "_a" + std::to_string(cfg.levels) + "_loge");
    names.push_back("mean");
    names.push_back("var");
    return names;
}

EpochSet preprocess_recording(const RawRecording& r, const Montage& montage,
                              const PreprocessConfig& cfg) {
    r.validate();

    // Reorder channels to montage order; extra channels are dropped.
    RawRecording ordered;
    ordered.sample_rate = r.sample_rate;
    ordered.markers = r.markers;
    for (const Electrode& e : montage.electrodes()) {
        auto it = std::find(r.channel_names.begin(), r.channel_names.end(), e.name);
        if (it == r.channel_names.end()) {
            throw CompatError("preprocess: recording lacks montage electrode \"" + e.name +
                              "\"");
        }
        const std::size_t idx =
            static_cast<std::size_t>(std::distance(r.channel_names.begin(), it));
        ordered.channel_names.push_back(e.name);
        ordered.channels.push_back(r.channels[idx]);
    }

    RawRecording cleaned = artifact_clean_hook(ordered);
    RawRecording filtered = bandpass(cleaned, cfg.low_hz, cfg.high_hz);
    RawRecording resampled = resample(filtered, cfg.resample_hz);
    EpochExtraction extraction =
        extract_epochs(resampled, cfg.pre_ms, cfg.post_ms, cfg.label_map);

    EpochSet set;
    set.montage_name = montage.name();
    set.montage_hash = montage.hash();
    set.n_electrodes = montage.count();
    set.n_features = static_cast<std::size_t>(cfg.wavelet.levels) + 3;
    set.feature_names = wavelet_feature_names(cfg.wavelet);
    int max_class = 0;
    for (const auto& [event, cls] : cfg.label_map) max_class = std::max(max_class, cls);
    set.n_classes = max_class + 1;
    set.metadata = {
        {"source", "preprocess"},
        {"bandpass_hz", {cfg.low_hz, cfg.high_hz}},
        {"resample_hz", cfg.resample_hz},
        {"window_ms", {cfg.pre_ms, cfg.post_ms}},
        {"wavelet", cfg.wavelet.family},
        {"wavelet_levels", cfg.wavelet.levels},
        {"dropped_markers", extraction.dropped},
    };
    for (const RawEpoch& e : extraction.epochs) {
        set.epochs.push_back(Epoch{e.label, wavelet_features(e, cfg.wavelet)});
    }
    set.validate();
    return set;
}

RawRecording load_raw_csv(const std::string& signal_path, const std::string& marker_path,
                          double sample_rate) {
    std::ifstream in(signal_path);
    if (!in) {
        throw IoError("load_raw_csv: cannot open \"" + signal_path + "\"");
    }
    RawRecording r;
    r.sample_rate = sample_rate;

    std::string line;
    if (!std::getline(in, line)) {
        throw FormatError("load_raw_csv: \"" + signal_path + "\" is empty");
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    {
        std::istringstream ss(line);
        std::string col;
        if (!std::getline(ss, col, ',') || col != "sample") {
            throw FormatError("load_raw_csv: \"" + signal_path +
                              "\" line 1: first column must be \"sample\"");
        }
        while (std::getline(ss, col, ',')) r.channel_names.push_back(col);
    }
    if (r.channel_names.empty()) {
        throw FormatError("load_raw_csv: \"" + signal_path + "\" has no channels");
    }
    r.channels.resize(r.channel_names.size());

    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string field;
        if (!std::getline(ss, field, ',')) continue;
        for (std::size_t c = 0; c < r.channels.size(); ++c) {
            if (!std::getline(ss, field, ',')) {
                throw FormatError("load_raw_csv: \"" + signal_path + "\" line " +
                                  std::to_string(lineno) + ": missing value for channel " +
                                  r.channel_names[c]);
            }
            try {
                r.channels[c].push_back(std::stod(field));
            } catch (const std::exception&) {
                throw FormatError("load_raw_csv: \"" + signal_path + "\" line " +
                                  std::to_string(lineno) + ": non-numeric value \"" + field +
                                  "\"");
            }
        }
    }

    std::ifstream markers(marker_path);
    if (!markers) {
        throw IoError("load_raw_csv: cannot open \"" + marker_path + "\"");
    }
    if (!std::getline(markers, line)) {
        throw FormatError("load_raw_csv: \"" + marker_path + "\" is empty");
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "sample,label") {
        throw FormatError("load_raw_csv: \"" + marker_path +
                          "\" line 1: expected header \"sample,label\"");
    }
    lineno = 1;
    while (std::getline(markers, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string sample_str, label;
        if (!std::getline(ss, sample_str, ',') || !std::getline(ss, label)) {
            throw FormatError("load_raw_csv: \"" + marker_path + "\" line " +
                              std::to_string(lineno) + ": expected sample,label");
        }
        try {
            r.markers.push_back(Marker{static_cast<std::size_t>(std::stoull(sample_str)), label});
        } catch (const std::exception&) {
            throw FormatError("load_raw_csv: \"" + marker_path + "\" line " +
                              std::to_string(lineno) + ": non-numeric sample \"" + sample_str +
                              "\"");
        }
    }

    r.validate();
    return r;
}

}  // namespace gmacn
