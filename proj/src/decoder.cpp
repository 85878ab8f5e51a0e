#include "verisparse/decoder.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace verisparse {

using nlohmann::json;

void SensingSpec::validate() const {
    if (m() < 1) throw std::invalid_argument("SensingSpec: need at least one measurement");
    if (m() >= n()) throw std::invalid_argument("SensingSpec: need m1 + m2 < n (compression)");
    if (!all_finite(a1)) throw std::invalid_argument("SensingSpec: non-finite A1");
    if (a2) {
        if (a2->cols() != n()) throw std::invalid_argument("SensingSpec: A2 column mismatch");
        if (!all_finite(*a2)) throw std::invalid_argument("SensingSpec: non-finite A2");
        if (static_cast<int>(tau.size()) != a2->rows())
            throw std::invalid_argument("SensingSpec: tau length mismatch");
        if (!all_finite(tau)) throw std::invalid_argument("SensingSpec: non-finite tau");
    } else if (!tau.empty()) {
        throw std::invalid_argument("SensingSpec: tau given without A2");
    }
}

std::vector<double> measure(const SensingSpec &sensing, const std::vector<double> &x) {
    if (static_cast<int>(x.size()) != sensing.n())
        throw std::invalid_argument("measure: x has wrong dimension");
    std::vector<double> y = matvec(sensing.a1, x);
    if (sensing.a2) {
        std::vector<double> p = matvec(*sensing.a2, x);
        for (int j = 0; j < sensing.m2(); ++j)
            y.push_back(p[j] - sensing.tau[j] >= 0.0 ? 1.0 : -1.0);
    }
    return y;
}

int DecoderParams::layer_input_dim(int m, int t) const {
    int f = feature_dim(m);
    if (t == 0) return 2 * f;  // [h0; h0]
    return hidden[t - 1].w.rows() + f;
}

int DecoderParams::output_input_dim(int m) const {
    return hidden.empty() ? feature_dim(m) : hidden.back().w.rows();
}

void DecoderParams::validate(int n, int m) const {
    if (scales.empty()) throw std::invalid_argument("DecoderParams: no scales");
    for (int t = 0; t < depth(); ++t) {
        const Layer &lay = hidden[t];
        if (lay.w.cols() != layer_input_dim(m, t))
            throw std::invalid_argument("DecoderParams: hidden layer input width mismatch");
        if (static_cast<int>(lay.b.size()) != lay.w.rows())
            throw std::invalid_argument("DecoderParams: hidden bias length mismatch");
        if (!all_finite(lay.w) || !all_finite(lay.b))
            throw std::invalid_argument("DecoderParams: non-finite hidden layer");
    }
    if (output.w.rows() != n || output.w.cols() != output_input_dim(m))
        throw std::invalid_argument("DecoderParams: output shape mismatch");
    if (static_cast<int>(output.b.size()) != n)
        throw std::invalid_argument("DecoderParams: output bias length mismatch");
    if (!all_finite(output.w) || !all_finite(output.b))
        throw std::invalid_argument("DecoderParams: non-finite output layer");
}

namespace {

std::vector<double> scale_expand(const std::vector<double> &scales,
                                 const std::vector<double> &y) {
    std::vector<double> h0(y.size() * scales.size());
    size_t k = 0;
    for (double yj : y)
        for (double s : scales) h0[k++] = s * yj;
    return h0;
}

ForwardTrace run_layers(const DecoderParams &params, ForwardTrace trace) {
    const int h = params.depth();
    trace.h0 = scale_expand(params.scales, trace.y);
    trace.pre.resize(h);
    trace.post.resize(h);
    const std::vector<double> *prev = &trace.h0;
    for (int t = 0; t < h; ++t) {
        const Layer &lay = params.hidden[t];
        std::vector<double> input;
        input.reserve(prev->size() + trace.h0.size());
        input.insert(input.end(), prev->begin(), prev->end());
        input.insert(input.end(), trace.h0.begin(), trace.h0.end());
        trace.pre[t] = matvec(lay.w, input);
        for (size_t i = 0; i < trace.pre[t].size(); ++i) trace.pre[t][i] += lay.b[i];
        trace.post[t].resize(trace.pre[t].size());
        for (size_t i = 0; i < trace.pre[t].size(); ++i)
            trace.post[t][i] = std::max(0.0, trace.pre[t][i]);
        prev = &trace.post[t];
    }
    trace.z = matvec(params.output.w, *prev);
    for (size_t i = 0; i < trace.z.size(); ++i) trace.z[i] += params.output.b[i];
    return trace;
}

}  // namespace

ForwardTrace forward(const DecoderParams &params, const SensingSpec &sensing,
                     const std::vector<double> &x) {
    ForwardTrace trace;
    trace.y = matvec(sensing.a1, x);
    if (sensing.a2) {
        std::vector<double> p = matvec(*sensing.a2, x);
        trace.sign_pre.resize(sensing.m2());
        for (int j = 0; j < sensing.m2(); ++j) {
            trace.sign_pre[j] = p[j] - sensing.tau[j];
            trace.y.push_back(trace.sign_pre[j] >= 0.0 ? 1.0 : -1.0);
        }
    }
    return run_layers(params, std::move(trace));
}

ForwardTrace forward_from_measurements(const DecoderParams &params, int m,
                                       const std::vector<double> &y) {
    if (static_cast<int>(y.size()) != m)
        throw std::invalid_argument("forward_from_measurements: wrong measurement length");
    ForwardTrace trace;
    trace.y = y;
    return run_layers(params, std::move(trace));
}

std::vector<int> decode_support(const std::vector<double> &z) {
    std::vector<int> support;
    for (int i = 0; i < static_cast<int>(z.size()); ++i)
        if (z[i] > 0.0) support.push_back(i);
    return support;
}

DecoderParams init_params(const ArchConfig &arch, int n, int m, Rng &rng) {
    if (arch.hidden_layers < 0 || arch.width < 1)
        throw std::invalid_argument("init_params: bad architecture");
    DecoderParams params;
    params.scales = arch.scales;
    auto he_layer = [&rng](int rows, int cols) {
        Layer lay;
        lay.w = Matrix(rows, cols);
        double sd = std::sqrt(2.0 / cols);
        for (double &v : lay.w.data()) v = sd * rng.normal();
        lay.b.assign(rows, 0.0);
        return lay;
    };
    for (int t = 0; t < arch.hidden_layers; ++t) {
        params.hidden.push_back({});
        params.hidden.back() = he_layer(arch.width, params.layer_input_dim(m, t));
    }
    params.output = he_layer(n, params.output_input_dim(m));
    params.validate(n, m);
    return params;
}

void Model::validate() const {
    domain.validate();
    sensing.validate();
    if (sensing.n() != domain.n) throw std::invalid_argument("Model: sensing/domain n mismatch");
    params.validate(domain.n, sensing.m());
}

namespace {

json matrix_to_json(const Matrix &m) {
    json rows = json::array();
    for (int r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const json &j) {
    if (!j.is_array() || j.empty()) throw std::invalid_argument("model json: bad matrix");
    int rows = static_cast<int>(j.size());
    int cols = static_cast<int>(j[0].size());
    Matrix m(rows, cols);
    for (int r = 0; r < rows; ++r) {
        if (static_cast<int>(j[r].size()) != cols)
            throw std::invalid_argument("model json: ragged matrix");
        for (int c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
    }
    return m;
}

json layer_to_json(const Layer &lay) {
    return json{{"w", matrix_to_json(lay.w)}, {"b", lay.b}};
}

Layer layer_from_json(const json &j) {
    Layer lay;
    lay.w = matrix_from_json(j.at("w"));
    lay.b = j.at("b").get<std::vector<double>>();
    return lay;
}

}  // namespace

std::string model_to_json(const Model &model) {
    json doc;
    doc["version"] = 1;
    doc["n"] = model.domain.n;
    doc["l"] = model.domain.l;
    doc["eps"] = model.domain.eps;
    doc["scales"] = model.params.scales;
    json sensing;
    sensing["a1"] = matrix_to_json(model.sensing.a1);
    if (model.sensing.a2) {
        sensing["a2"] = matrix_to_json(*model.sensing.a2);
        sensing["tau"] = model.sensing.tau;
    }
    doc["sensing"] = std::move(sensing);
    json hidden = json::array();
    for (const Layer &lay : model.params.hidden) hidden.push_back(layer_to_json(lay));
    doc["hidden"] = std::move(hidden);
    doc["output"] = layer_to_json(model.params.output);
    return doc.dump(1);
}

Model model_from_json(const std::string &text) {
    json doc = json::parse(text);
    if (doc.at("version").get<int>() != 1)
        throw std::invalid_argument("model json: unsupported version");
    Model model;
    model.domain.n = doc.at("n").get<int>();
    model.domain.l = doc.at("l").get<int>();
    model.domain.eps = doc.at("eps").get<double>();
    model.params.scales = doc.at("scales").get<std::vector<double>>();
    const json &sensing = doc.at("sensing");
    model.sensing.a1 = matrix_from_json(sensing.at("a1"));
    if (sensing.contains("a2")) {
        model.sensing.a2 = matrix_from_json(sensing.at("a2"));
        model.sensing.tau = sensing.at("tau").get<std::vector<double>>();
    }
    for (const json &lay : doc.at("hidden")) model.params.hidden.push_back(layer_from_json(lay));
    model.params.output = layer_from_json(doc.at("output"));
    model.validate();
    return model;
}

void save_model(const Model &model, const std::string &path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_model: cannot open " + path);
    out << model_to_json(model) << "\n";
    if (!out) throw std::runtime_error("save_model: write failed for " + path);
}

Model load_model(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_model: cannot open " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return model_from_json(buf.str());
}

}  // namespace verisparse
