#pragma once

#include <map>
#include <string>
#include <vector>

#include "gmacn/epoch_set.hpp"
#include "gmacn/matrix.hpp"
#include "gmacn/montage.hpp"

namespace gmacn {

struct Marker {
    std::size_t sample = 0;
    std::string label;
};

// Continuous multi-channel recording. All channels have equal length and the
// channel order is the montage/node order used downstream.
struct RawRecording {
    std::vector<std::string> channel_names;
    std::vector<std::vector<double>> channels;
    double sample_rate = 0.0;
    std::vector<Marker> markers;

    std::size_t length() const { return channels.empty() ? 0 : channels[0].size(); }
    void validate() const;
};

// 4th-order Butterworth band-pass applied forward and backward per channel
// (zero phase, length preserved).
RawRecording bandpass(const RawRecording& r, double low_hz, double high_hz);

// Windowed-sinc resampling with an anti-alias cutoff at 0.45 * target rate.
// Output length is round(len * target/source); markers are rescaled by the
// rate ratio.
RawRecording resample(const RawRecording& r, double target_hz);

// Identity cleaning hook. The preprocessing chain reserves a slot for
// artifact removal (e.g. an ICA pass) but none is implemented; this forwards
// its input unchanged so pipelines can already route through it.
RawRecording artifact_clean_hook(const RawRecording& r);

struct RawEpoch {
    int label = 0;
    // channel-major samples: channels x window length
    std::vector<std::vector<double>> channels;
};

struct EpochExtraction {
    std::vector<RawEpoch> epochs;
    std::size_t dropped = 0;  // markers whose window fell outside the recording
};

EpochExtraction extract_epochs(const RawRecording& r, double pre_ms, double post_ms,
                               const std::map<std::string, int>& label_map);

struct WaveletConfig {
    std::string family = "db4";  // "db4" or "haar"
    int levels = 4;
};

// Multi-level DWT (periodized, orthonormal filters) of one channel zero-padded
// to the next power of two. Returns the detail coefficients per level followed
// by the final approximation.
std::vector<std::vector<double>> dwt(const std::vector<double>& x, const WaveletConfig& cfg);

// Per-channel feature row: log-energy of each detail level, log-energy of the
// approximation, channel mean, channel variance (F = levels + 3).
Matrix wavelet_features(const RawEpoch& epoch, const WaveletConfig& cfg);

std::vector<std::string> wavelet_feature_names(const WaveletConfig& cfg);

// Whole chain: bandpass -> resample -> epoch -> wavelet features.
struct PreprocessConfig {
    double low_hz = 0.05;
    double high_hz = 200.0;
    double resample_hz = 100.0;
    double pre_ms = 0.0;
    double post_ms = 600.0;
    std::map<std::string, int> label_map;
    WaveletConfig wavelet;
};

EpochSet preprocess_recording(const RawRecording& r, const Montage& montage,
                              const PreprocessConfig& cfg);

// Raw input files: signal CSV `sample,<ch1>,<ch2>,...` and marker CSV
// `sample,label`.
RawRecording load_raw_csv(const std::string& signal_path, const std::string& marker_path,
                          double sample_rate);

}  // namespace gmacn
