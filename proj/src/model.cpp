#include "gmacn/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "gmacn/errors.hpp"
#include "gmacn/rng.hpp"

namespace gmacn {

namespace {

Matrix glorot_uniform(std::size_t rows, std::size_t cols, Rng& rng) {
    const double r = std::sqrt(6.0 / static_cast<double>(rows + cols));
    Matrix m(rows, cols);
    for (double& v : m.data()) v = rng.uniform(-r, r);
    return m;
}

int argmax_row(const Matrix& row) {
    int best = 0;
    for (std::size_t j = 1; j < row.cols(); ++j) {
        if (row(0, j) > row(0, static_cast<std::size_t>(best))) best = static_cast<int>(j);
    }
    return best;
}

nlohmann::json matrix_to_json(const Matrix& m) {
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.data()}};
}

Matrix matrix_from_json(const nlohmann::json& j) {
    Matrix m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
    const auto data = j.at("data").get<std::vector<double>>();
    if (data.size() != m.size()) {
        throw FormatError("checkpoint: matrix payload size mismatch");
    }
    m.data() = data;
    return m;
}

}  // namespace

void GmacnConfig::fill_default_dims(std::size_t width) {
    if (gcn_dims.empty()) gcn_dims.assign(static_cast<std::size_t>(layers), width);
    if (attn_dims.empty()) attn_dims.assign(static_cast<std::size_t>(layers), width);
}

void GmacnConfig::validate() const {
    if (layers < 1) throw ParamError("config: layers must be >= 1");
    if (classes < 1) throw ParamError("config: classes must be >= 1");
    if (n_features < 1) throw ParamError("config: n_features must be >= 1");
    if (head_hidden < 1) throw ParamError("config: head_hidden must be >= 1");
    if (gcn_dims.size() != static_cast<std::size_t>(layers)) {
        throw ParamError("config: gcn_dims must list one width per layer");
    }
    if (use_attention && attn_dims.size() != static_cast<std::size_t>(layers)) {
        throw ParamError("config: attn_dims must list one width per layer");
    }
    for (std::size_t d : gcn_dims) {
        if (d < 1) throw ParamError("config: gcn width must be >= 1");
    }
    if (use_attention) {
        for (std::size_t d : attn_dims) {
            if (d < 1) throw ParamError("config: attention width must be >= 1");
        }
    }
    if (!(focal_gamma >= 0.0)) throw ParamError("config: focal_gamma must be >= 0");
    if (loss_mix < 0.0 || loss_mix > 1.0) throw ParamError("config: loss_mix must be in [0,1]");
    if (!(learning_rate >= 0.0)) throw ParamError("config: learning_rate must be >= 0");
    if (epochs < 0) throw ParamError("config: epochs must be >= 0");
}

GmacnModel build_model(GmacnConfig config, std::shared_ptr<const Montage> montage,
                       ElectrodeGraph graph) {
    config.validate();
    if (!montage) throw ParamError("build_model: montage required");
    if (graph.node_count() != montage->count()) {
        throw CompatError("build_model: graph has " + std::to_string(graph.node_count()) +
                          " nodes but montage has " + std::to_string(montage->count()));
    }
    if (graph.montage_hash != montage->hash()) {
        throw CompatError("build_model: graph montage hash " + graph.montage_hash +
                          " does not match montage " + montage->hash());
    }

    GmacnModel m;
    m.config = config;
    m.montage = std::move(montage);
    m.graph = std::move(graph);

    Rng rng(config.seed);
    const std::size_t n = m.montage->count();
    std::size_t in_dim = config.n_features;
    for (int l = 0; l < config.layers; ++l) {
        const std::size_t out_dim = config.gcn_dims[static_cast<std::size_t>(l)];
        m.w_gcn.push_back(glorot_uniform(in_dim, out_dim, rng));
        if (config.use_attention) {
            const std::size_t a = config.attn_dims[static_cast<std::size_t>(l)];
            m.w_q.push_back(glorot_uniform(out_dim, a, rng));
            m.w_k.push_back(glorot_uniform(out_dim, a, rng));
            // Value width equals the GCN width so Eq-style elementwise
            // modulation conforms.
            m.w_v.push_back(glorot_uniform(out_dim, out_dim, rng));
        }
        in_dim = out_dim;
    }
    const std::size_t flat = n * in_dim;
    m.head_w1 = glorot_uniform(flat, config.head_hidden, rng);
    m.head_b1 = Matrix(1, config.head_hidden);
    m.head_w2 = glorot_uniform(config.head_hidden, static_cast<std::size_t>(config.classes), rng);
    m.head_b2 = Matrix(1, static_cast<std::size_t>(config.classes));
    return m;
}

Var gcn_layer(Tape& tape, Var h, Var normalized, Var w) {
    return tape.relu(tape.matmul(tape.matmul(normalized, h), w));
}

std::pair<Var, Var> mutual_attention(Tape& tape, Var o, Var wq, Var wk, Var wv,
                                     bool scale_scores) {
    const Var q = tape.matmul(o, wq);
    const Var k = tape.matmul(o, wk);
    Var scores = tape.matmul(q, tape.transpose(k));
    if (scale_scores) {
        scores = tape.scale(scores, 1.0 / std::sqrt(static_cast<double>(tape.value(q).cols())));
    }
    const Var attention = tape.softmax_rows(scores);
    const Var output = tape.matmul(attention, tape.matmul(o, wv));
    return {output, attention};
}

ForwardTrace predict(const GmacnModel& model, const Matrix& features) {
    const std::size_t n = model.node_count();
    if (features.rows() != n || features.cols() != model.config.n_features) {
        throw ShapeError("predict: features " + features.shape_str() + " but model expects " +
                         std::to_string(n) + "x" + std::to_string(model.config.n_features));
    }

    ForwardTrace t;
    t.tape = std::make_unique<Tape>();
    Tape& tape = *t.tape;

    const Var norm = tape.constant(model.graph.normalized);
    t.input = tape.constant(features);

    for (int l = 0; l < model.config.layers; ++l) {
        t.params.w_gcn.push_back(tape.leaf(model.w_gcn[static_cast<std::size_t>(l)]));
        if (model.config.use_attention) {
            t.params.w_q.push_back(tape.leaf(model.w_q[static_cast<std::size_t>(l)]));
            t.params.w_k.push_back(tape.leaf(model.w_k[static_cast<std::size_t>(l)]));
            t.params.w_v.push_back(tape.leaf(model.w_v[static_cast<std::size_t>(l)]));
        }
    }
    t.params.head_w1 = tape.leaf(model.head_w1);
    t.params.head_b1 = tape.leaf(model.head_b1);
    t.params.head_w2 = tape.leaf(model.head_w2);
    t.params.head_b2 = tape.leaf(model.head_b2);

    Var h = t.input;
    for (int l = 0; l < model.config.layers; ++l) {
        const Var o = gcn_layer(tape, h, norm, t.params.w_gcn[static_cast<std::size_t>(l)]);
        t.gcn_out.push_back(o);
        if (model.config.use_attention) {
            auto [att_out, att] = mutual_attention(
                tape, o, t.params.w_q[static_cast<std::size_t>(l)],
                t.params.w_k[static_cast<std::size_t>(l)],
                t.params.w_v[static_cast<std::size_t>(l)], model.config.scale_attention);
            t.attn_matrix.push_back(att);
            t.attn_out.push_back(att_out);
            h = tape.hadamard(o, att_out);
        } else {
            h = o;  // ablated attention is the all-ones modulation
        }
        t.hidden.push_back(h);
    }

    const Var flat = tape.flatten(h);
    const Var fc1 = tape.relu(tape.add(tape.matmul(flat, t.params.head_w1), t.params.head_b1));
    t.logits = tape.add(tape.matmul(fc1, t.params.head_w2), t.params.head_b2);
    t.probs = tape.softmax_rows(t.logits);
    t.predicted = argmax_row(tape.value(t.probs));
    return t;
}

double combined_loss(const std::vector<double>& probabilities, int label,
                     const GmacnConfig& config) {
    if (label < 0 || static_cast<std::size_t>(label) >= probabilities.size()) {
        throw ParamError("loss: label " + std::to_string(label) + " outside " +
                         std::to_string(probabilities.size()) + " classes");
    }
    double p = probabilities[static_cast<std::size_t>(label)];
    if (p < Tape::kLogFloor) p = Tape::kLogFloor;
    const double ce = -std::log(p);
    const double focal =
        config.focal_gamma == 0.0 ? ce : -std::pow(1.0 - p, config.focal_gamma) * std::log(p);
    return config.loss_mix * ce + (1.0 - config.loss_mix) * focal;
}

Var loss_node(ForwardTrace& trace, int label, const GmacnConfig& config) {
    Tape& tape = *trace.tape;
    const Matrix& probs = tape.value(trace.probs);
    if (label < 0 || static_cast<std::size_t>(label) >= probs.cols()) {
        throw ParamError("loss: label " + std::to_string(label) + " outside " +
                         std::to_string(probs.cols()) + " classes");
    }
    Matrix onehot(probs.cols(), 1);
    onehot(static_cast<std::size_t>(label), 0) = 1.0;
    const Var p = tape.matmul(trace.probs, tape.constant(std::move(onehot)));
    const Var logp = tape.log(p);
    const Var ce = tape.scale(logp, -1.0);
    Var focal = ce;
    if (config.focal_gamma != 0.0) {
        const Var base = tape.rsub_const(1.0, p);
        const Var weight = tape.pow_const(base, config.focal_gamma);
        focal = tape.scale(tape.hadamard(weight, logp), -1.0);
    }
    return tape.add(tape.scale(ce, config.loss_mix), tape.scale(focal, 1.0 - config.loss_mix));
}

}  // namespace

TrainReport train(GmacnModel& model, const EpochSet& data) {
    model.config.validate();
    if (data.epochs.empty()) {
        throw ParamError("train: empty epoch set");
    }
    if (data.n_electrodes != model.node_count() || data.n_features != model.config.n_features) {
        throw ShapeError("train: data is " + std::to_string(data.n_electrodes) + "x" +
                         std::to_string(data.n_features) + " but model expects " +
                         std::to_string(model.node_count()) + "x" +
                         std::to_string(model.config.n_features));
    }
    for (const Epoch& e : data.epochs) {
        if (e.label < 0 || e.label >= model.config.classes) {
            throw ParamError("train: label " + std::to_string(e.label) +
                             " outside configured class count");
        }
    }

    const double n = static_cast<double>(data.epochs.size());
    TrainReport report;

    std::vector<Matrix*> params;
    for (auto& w : model.w_gcn) params.push_back(&w);
    for (auto& w : model.w_q) params.push_back(&w);
    for (auto& w : model.w_k) params.push_back(&w);
    for (auto& w : model.w_v) params.push_back(&w);
    params.push_back(&model.head_w1);
    params.push_back(&model.head_b1);
    params.push_back(&model.head_w2);
    params.push_back(&model.head_b2);

    for (int epoch = 0; epoch < model.config.epochs; ++epoch) {
        std::vector<Matrix> grads;
        grads.reserve(params.size());
        for (Matrix* p : params) grads.emplace_back(p->rows(), p->cols());

        double total_loss = 0.0;
        for (const Epoch& sample : data.epochs) {
            ForwardTrace trace = predict(model, sample.features);
            const Var loss = build_loss(trace, sample.label, model.config);
            total_loss += trace.tape->value(loss)(0, 0);
            trace.tape->backward(loss);

            std::vector<Var> vars;
            for (Var v : trace.params.w_gcn) vars.push_back(v);
            for (Var v : trace.params.w_q) vars.push_back(v);
            for (Var v : trace.params.w_k) vars.push_back(v);
            for (Var v : trace.params.w_v) vars.push_back(v);
            vars.push_back(trace.params.head_w1);
            vars.push_back(trace.params.head_b1);
            vars.push_back(trace.params.head_w2);
            vars.push_back(trace.params.head_b2);

            for (std::size_t i = 0; i < vars.size(); ++i) {
                const Matrix& g = trace.tape->grad(vars[i]);
                for (std::size_t k = 0; k < g.size(); ++k) grads[i].data()[k] += g.data()[k];
            }
        }

        const double mean_loss = total_loss / n;
        if (!std::isfinite(mean_loss)) {
            throw Error("train: loss became non-finite at epoch " + std::to_string(epoch));
        }
        report.epoch_loss.push_back(mean_loss);

        const double step = model.config.learning_rate / n;
        for (std::size_t i = 0; i < params.size(); ++i) {
            for (std::size_t k = 0; k < params[i]->size(); ++k) {
                params[i]->data()[k] -= step * grads[i].data()[k];
            }
        }
    }

    std::size_t correct = 0;
    for (const Epoch& sample : data.epochs) {
        if (predict(model, sample.features).predicted == sample.label) ++correct;
    }
    report.final_train_accuracy = static_cast<double>(correct) / n;
    return report;
}

CostReport count_cost(const GmacnModel& model) {
    const unsigned long long n = model.node_count();
    CostReport c;
    unsigned long long in_dim = model.config.n_features;
    for (int l = 0; l < model.config.layers; ++l) {
        const unsigned long long d = model.config.gcn_dims[static_cast<std::size_t>(l)];
        // GCN: (norm * H) then (* W), plus the ReLU.
        c.flops += n * n * in_dim + n * in_dim * d + n * d;
        c.params += in_dim * d;
        if (model.config.use_attention) {
            const unsigned long long a = model.config.attn_dims[static_cast<std::size_t>(l)];
            c.flops += 2 * n * d * a;      // Q and K projections
            c.flops += n * d * d;          // V projection
            c.flops += n * n * a;          // scores
            c.flops += 3 * n * n;          // row softmax (exp, sum, divide)
            c.flops += n * n * d;          // attention * V
            c.flops += n * d;              // elementwise modulation
            c.params += 2 * d * a + d * d;
        }
        in_dim = d;
    }
    const unsigned long long flat = n * in_dim;
    const unsigned long long h = model.config.head_hidden;
    const unsigned long long k = static_cast<unsigned long long>(model.config.classes);
    c.flops += flat * h + h + h;  // FC1 + bias + ReLU
    c.flops += h * k + k;         // FC2 + bias
    c.flops += 3 * k;             // softmax
    c.params += flat * h + h + h * k + k;
    return c;
}

void save_checkpoint(const GmacnModel& model, const std::string& path) {
    nlohmann::json j;
    j["version"] = "gmacn-v1";
    j["config"] = {
        {"layers", model.config.layers},
        {"n_features", model.config.n_features},
        {"gcn_dims", model.config.gcn_dims},
        {"attn_dims", model.config.attn_dims},
        {"head_hidden", model.config.head_hidden},
        {"classes", model.config.classes},
        {"use_attention", model.config.use_attention},
        {"scale_attention", model.config.scale_attention},
        {"focal_gamma", model.config.focal_gamma},
        {"loss_mix", model.config.loss_mix},
        {"learning_rate", model.config.learning_rate},
        {"epochs", model.config.epochs},
        {"seed", model.config.seed},
    };
    j["montage"] = nlohmann::json::object();
    j["montage"]["name"] = model.montage->name();
    j["montage"]["hash"] = model.montage->hash();
    nlohmann::json electrodes = nlohmann::json::array();
    for (const Electrode& e : model.montage->electrodes()) {
        electrodes.push_back({{"name", e.name}, {"x", e.x}, {"y", e.y}, {"z", e.z}});
    }
    j["montage"]["electrodes"] = electrodes;
    j["graph"] = {
        {"strategy", model.graph.strategy_str()},
        {"parameter", model.graph.parameter},
        {"adjacency", model.graph.adjacency.data()},
    };
    nlohmann::json params;
    auto layer_array = [](const std::vector<Matrix>& ms) {
        nlohmann::json arr = nlohmann::json::array();
        for (const Matrix& m : ms) arr.push_back(matrix_to_json(m));
        return arr;
    };
    params["w_gcn"] = layer_array(model.w_gcn);
    params["w_q"] = layer_array(model.w_q);
    params["w_k"] = layer_array(model.w_k);
    params["w_v"] = layer_array(model.w_v);
    params["head_w1"] = matrix_to_json(model.head_w1);
    params["head_b1"] = matrix_to_json(model.head_b1);
    params["head_w2"] = matrix_to_json(model.head_w2);
    params["head_b2"] = matrix_to_json(model.head_b2);
    j["params"] = params;

    std::ofstream out(path);
    if (!out) {
        throw IoError("save_checkpoint: cannot write \"" + path + "\"");
    }
    out << j.dump(2) << '\n';
    if (!out) {
        throw IoError("save_checkpoint: write failed for \"" + path + "\"");
    }
}

GmacnModel load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("load_checkpoint: cannot open \"" + path + "\"");
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& ex) {
        throw FormatError("load_checkpoint: \"" + path + "\": " + ex.what());
    }

    try {
        if (j.at("version").get<std::string>() != "gmacn-v1") {
            throw FormatError("load_checkpoint: \"" + path + "\": unsupported version");
        }
        GmacnModel m;
        const auto& c = j.at("config");
        m.config.layers = c.at("layers").get<int>();
        m.config.n_features = c.at("n_features").get<std::size_t>();
        m.config.gcn_dims = c.at("gcn_dims").get<std::vector<std::size_t>>();
        m.config.attn_dims = c.at("attn_dims").get<std::vector<std::size_t>>();
        m.config.head_hidden = c.at("head_hidden").get<std::size_t>();
        m.config.classes = c.at("classes").get<int>();
        m.config.use_attention = c.at("use_attention").get<bool>();
        m.config.scale_attention = c.at("scale_attention").get<bool>();
        m.config.focal_gamma = c.at("focal_gamma").get<double>();
        m.config.loss_mix = c.at("loss_mix").get<double>();
        m.config.learning_rate = c.at("learning_rate").get<double>();
        m.config.epochs = c.at("epochs").get<int>();
        m.config.seed = c.at("seed").get<std::uint64_t>();

        std::vector<Electrode> electrodes;
        for (const auto& e : j.at("montage").at("electrodes")) {
            electrodes.push_back(Electrode{e.at("name").get<std::string>(),
                                           e.at("x").get<double>(), e.at("y").get<double>(),
                                           e.at("z").get<double>(), 0.0, 0.0});
        }
        auto montage = std::make_shared<Montage>(
            j.at("montage").at("name").get<std::string>(), std::move(electrodes));
        if (montage->hash() != j.at("montage").at("hash").get<std::string>()) {
            throw FormatError("load_checkpoint: \"" + path +
                              "\": montage hash does not match stored electrodes");
        }
        m.montage = montage;

        const auto& g = j.at("graph");
        const std::string strategy = g.at("strategy").get<std::string>();
        m.graph.strategy =
            strategy == "threshold" ? GraphStrategy::kThreshold : GraphStrategy::kTopK;
        m.graph.parameter = g.at("parameter").get<double>();
        const auto adj = g.at("adjacency").get<std::vector<double>>();
        const std::size_t n = montage->count();
        if (adj.size() != n * n) {
            throw FormatError("load_checkpoint: \"" + path + "\": adjacency size mismatch");
        }
        m.graph.adjacency = Matrix(n, n);
        m.graph.adjacency.data() = adj;
        m.graph.normalized = normalize_adjacency(m.graph.adjacency);
        m.graph.montage_name = montage->name();
        m.graph.montage_hash = montage->hash();

        const auto& p = j.at("params");
        for (const auto& w : p.at("w_gcn")) m.w_gcn.push_back(matrix_from_json(w));
        for (const auto& w : p.at("w_q")) m.w_q.push_back(matrix_from_json(w));
        for (const auto& w : p.at("w_k")) m.w_k.push_back(matrix_from_json(w));
        for (const auto& w : p.at("w_v")) m.w_v.push_back(matrix_from_json(w));
        m.head_w1 = matrix_from_json(p.at("head_w1"));
        m.head_b1 = matrix_from_json(p.at("head_b1"));
        m.head_w2 = matrix_from_json(p.at("head_w2"));
        m.head_b2 = matrix_from_json(p.at("head_b2"));
        m.config.validate();
        return m;
    } catch (const nlohmann::json::exception& ex) {
        throw FormatError("load_checkpoint: \"" + path + "\": " + ex.what());
    }
}

}  // namespace gmacn
