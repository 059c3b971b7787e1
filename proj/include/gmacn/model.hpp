#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "gmacn/epoch_set.hpp"
#include "gmacn/matrix.hpp"
#include "gmacn/montage.hpp"
#include "gmacn/spatial_graph.hpp"
#include "gmacn/tape.hpp"

namespace gmacn {

struct GmacnConfig {
    int layers = 3;
    std::size_t n_features = 7;          // input feature width F
    std::vector<std::size_t> gcn_dims;   // per-layer GCN output width
    std::vector<std::size_t> attn_dims;  // per-layer query/key width
    std::size_t head_hidden = 64;
    int classes = 2;
    bool use_attention = true;
    bool scale_attention = false;  // opt-in 1/sqrt(d) on attention scores
    double focal_gamma = 2.0;
    double loss_mix = 0.5;  // weight on cross-entropy in mix with focal
    double learning_rate = 0.05;
    int epochs = 100;
    std::uint64_t seed = 1;

    // Fills gcn_dims/attn_dims with `width` per layer when they are empty.
    void fill_default_dims(std::size_t width = 16);
    void validate() const;
};

// The trained network: per-layer GCN and attention projections over a fixed
// electrode graph, plus a two-layer prediction head on the flattened node
// features. The attention value width equals the GCN output width so the
// elementwise modulation conforms.
struct GmacnModel {
    GmacnConfig config;
    std::shared_ptr<const Montage> montage;
    ElectrodeGraph graph;
    std::vector<Matrix> w_gcn;  // layer l: d_{l-1} x d_l
    std::vector<Matrix> w_q, w_k;  // d_l x a_l
    std::vector<Matrix> w_v;       // d_l x d_l
    Matrix head_w1, head_b1;  // (N*d_L) x h, 1 x h
    Matrix head_w2, head_b2;  // h x classes, 1 x classes

    std::size_t node_count() const { return graph.node_count(); }
};

GmacnModel build_model(GmacnConfig config, std::shared_ptr<const Montage> montage,
                       ElectrodeGraph graph);

// Tape node handles for every parameter, in the order the trainer updates
// them.
struct ParamVars {
    std::vector<Var> w_gcn, w_q, w_k, w_v;
    Var head_w1, head_b1, head_w2, head_b2;
};

// One recorded forward pass. Keeps the tape alive so saliency code can
// backpropagate through it later; per-layer handles expose the GCN outputs
// O^l and the row-stochastic attention matrices A^l.
struct ForwardTrace {
    std::unique_ptr<Tape> tape;
    ParamVars params;
    std::vector<Var> gcn_out;      // O^l
    std::vector<Var> attn_matrix;  // A^l (empty when attention is ablated)
    std::vector<Var> attn_out;
    std::vector<Var> hidden;  // layer outputs H^l
    Var input, logits, probs;
    int predicted = -1;

    const Matrix& probabilities() const { return tape->value(probs); }
    bool has_attention() const { return !attn_matrix.empty(); }
};

// GCN propagation ReLU(normalized * H * W) on a caller-provided tape.
Var gcn_layer(Tape& tape, Var h, Var normalized, Var w);

// softmax(O*Wq * (O*Wk)^T) * (O*Wv); returns (output, attention matrix).
std::pair<Var, Var> mutual_attention(Tape& tape, Var o, Var wq, Var wk, Var wv,
                                     bool scale_scores = false);

ForwardTrace predict(const GmacnModel& model, const Matrix& features);

// alpha * CE + (1-alpha) * focal, with CE = -log p_label and
// focal = -(1-p_label)^gamma * log p_label.
double combined_loss(const std::vector<double>& probabilities, int label,
                     const GmacnConfig& config);

// Same loss recorded on the trace's tape (for training and gradient checks).
Var loss_node(ForwardTrace& trace, int label, const GmacnConfig& config);

struct TrainReport {
    std::vector<double> epoch_loss;  // mean combined loss per epoch
    double final_train_accuracy = 0.0;
};

// Full-batch gradient descent, deterministic given config.seed.
TrainReport train(GmacnModel& model, const EpochSet& data);

struct CostReport {
    unsigned long long flops = 0;  // forward multiply-adds plus elementwise ops
    unsigned long long params = 0;
};

CostReport count_cost(const GmacnModel& model);

void save_checkpoint(const GmacnModel& model, const std::string& path);
GmacnModel load_checkpoint(const std::string& path);

}  // namespace gmacn
