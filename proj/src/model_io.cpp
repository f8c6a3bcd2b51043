#include "atdl/model_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "atdl/errors.hpp"

namespace atdl {

namespace {

constexpr char kMagic[8] = {'A', 'T', 'D', 'L', 'N', 'N', '0', '1'};
constexpr std::uint32_t kVersion = 1;

class Writer {
public:
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
    }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void real(double v, bool as_f32) {
        if (as_f32)
            f32(static_cast<float>(v));
        else
            f64(v);
    }
    void str(const std::string &s) {
        u32(static_cast<std::uint32_t>(s.size()));
        bytes.insert(bytes.end(), s.begin(), s.end());
    }
    void raw(const char *p, std::size_t n) { bytes.insert(bytes.end(), p, p + n); }

    std::vector<unsigned char> bytes;
};

class Reader {
public:
    Reader(std::vector<unsigned char> data, std::string path)
        : bytes_(std::move(data)), path_(std::move(path)) {}

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 3; i >= 0; --i) v = (v << 8) | bytes_[pos_ + i];
        pos_ += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 7; i >= 0; --i) v = (v << 8) | bytes_[pos_ + i];
        pos_ += 8;
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    float f32() { return std::bit_cast<float>(u32()); }
    double real(bool as_f32) { return as_f32 ? static_cast<double>(f32()) : f64(); }
    std::string str() {
        const std::uint32_t n = u32();
        need(n);
        std::string s(bytes_.begin() + pos_, bytes_.begin() + pos_ + n);
        pos_ += n;
        return s;
    }
    void raw(char *p, std::size_t n) {
        need(n);
        std::memcpy(p, bytes_.data() + pos_, n);
        pos_ += n;
    }
    std::size_t pos() const { return pos_; }
    std::size_t size() const { return bytes_.size(); }
    const unsigned char *data() const { return bytes_.data(); }

private:
    void need(std::size_t n) {
        if (pos_ + n > bytes_.size()) throw FormatError(path_ + ": truncated model file");
    }
    std::vector<unsigned char> bytes_;
    std::size_t pos_ = 0;
    std::string path_;
};

std::uint64_t byte_sum(const unsigned char *p, std::size_t n) {
    std::uint64_t sum = 0;
    for (std::size_t i = 0; i < n; ++i) sum += p[i];
    return sum;
}

} // namespace

const char *to_string(ModelKind k) {
    switch (k) {
    case ModelKind::SourceLinear: return "source";
    case ModelKind::Target: return "atdl_target";
    case ModelKind::NonTransfer: return "non_transfer";
    case ModelKind::Ssl: return "ssl";
    case ModelKind::Agrawal: return "agrawal";
    case ModelKind::Oquab: return "oquab";
    case ModelKind::PcaLogistic: return "pca_logistic";
    }
    return "?";
}

ModelKind baseline_model_kind(BaselineKind k) {
    switch (k) {
    case BaselineKind::NonTransfer: return ModelKind::NonTransfer;
    case BaselineKind::Ssl: return ModelKind::Ssl;
    case BaselineKind::Agrawal: return ModelKind::Agrawal;
    case BaselineKind::Oquab: return ModelKind::Oquab;
    case BaselineKind::PcaLogistic: return ModelKind::PcaLogistic;
    }
    throw ArgumentError("unknown baseline kind");
}

SourceModel ModelFile::as_source_model() const {
    return SourceModel{net, label_names, provenance};
}

TargetModel ModelFile::as_target_model() const {
    if (!relations) throw FormatError("model file carries no relation vectors");
    return TargetModel{net, *relations, provenance};
}

BaselineClassifier ModelFile::as_baseline() const {
    BaselineClassifier clf;
    switch (kind) {
    case ModelKind::NonTransfer: clf.kind = BaselineKind::NonTransfer; break;
    case ModelKind::Ssl: clf.kind = BaselineKind::Ssl; break;
    case ModelKind::Agrawal: clf.kind = BaselineKind::Agrawal; break;
    case ModelKind::Oquab: clf.kind = BaselineKind::Oquab; break;
    case ModelKind::PcaLogistic: clf.kind = BaselineKind::PcaLogistic; break;
    default: throw FormatError("model file is not a baseline classifier");
    }
    clf.net = net;
    clf.pca = pca;
    clf.pca_dims = pca_dims;
    return clf;
}

void save_model(const ModelFile &model, const std::string &path) {
    if (model.net.empty()) throw ArgumentError("save_model: empty network");

    Writer w;
    w.raw(kMagic, 8);
    w.u32(kVersion);
    w.u32(static_cast<std::uint32_t>(model.kind));
    w.u32(static_cast<std::uint32_t>(model.loss));
    w.u32(model.save_f32 ? 1 : 0);
    w.u32(static_cast<std::uint32_t>(model.net.depth()));
    for (std::size_t i = 0; i < model.net.depth(); ++i) {
        const LayerSpec &spec = model.net.layer(i).spec;
        w.u32(static_cast<std::uint32_t>(spec.in_dim));
        w.u32(static_cast<std::uint32_t>(spec.out_dim));
        w.u32(static_cast<std::uint32_t>(spec.activation));
    }
    w.u32(static_cast<std::uint32_t>(model.label_names.size()));
    for (const auto &name : model.label_names) w.str(name);
    w.str(model.provenance);

    for (std::size_t i = 0; i < model.net.depth(); ++i) {
        const Layer &layer = model.net.layer(i);
        for (std::size_t j = 0; j < layer.weights.size(); ++j)
            w.real(layer.weights.data()[j], model.save_f32);
        for (double b : layer.bias) w.real(b, model.save_f32);
    }

    w.u32(model.relations ? 1 : 0);
    if (model.relations) {
        const RelationSet &rel = *model.relations;
        w.u32(static_cast<std::uint32_t>(rel.num_target_labels()));
        w.u32(static_cast<std::uint32_t>(rel.source_dim()));
        w.f64(rel.epsilon);
        for (std::size_t l = 0; l < rel.num_target_labels(); ++l) {
            w.u64(rel.counts[l]);
            for (double v : rel.relations.row(l)) w.f64(v);
            for (std::size_t j = 0; j < rel.covariances[l].size(); ++j)
                w.f64(rel.covariances[l].data()[j]);
        }
    }

    w.u32(model.pca ? 1 : 0);
    if (model.pca) {
        const PcaModel &pca = *model.pca;
        w.u32(static_cast<std::uint32_t>(pca.mean.size()));
        w.u32(static_cast<std::uint32_t>(model.pca_dims));
        w.u32(static_cast<std::uint32_t>(pca.components.rows()));
        for (double v : pca.mean) w.f64(v);
        for (std::size_t j = 0; j < pca.components.size(); ++j) w.f64(pca.components.data()[j]);
        for (double v : pca.explained_variance) w.f64(v);
    }

    w.u64(byte_sum(w.bytes.data(), w.bytes.size()));

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write " + path);
    out.write(reinterpret_cast<const char *>(w.bytes.data()),
              static_cast<std::streamsize>(w.bytes.size()));
    if (!out) throw FormatError("failed writing " + path);
}

ModelFile load_model(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    if (bytes.size() < 8 + 4 + 8) throw FormatError(path + ": truncated model file");

    const std::uint64_t declared = [&] {
        std::uint64_t v = 0;
        for (int i = 7; i >= 0; --i) v = (v << 8) | bytes[bytes.size() - 8 + i];
        return v;
    }();
    if (declared != byte_sum(bytes.data(), bytes.size() - 8))
        throw FormatError(path + ": model checksum mismatch");

    Reader r(std::move(bytes), path);
    char magic[8];
    r.raw(magic, 8);
    if (std::memcmp(magic, kMagic, 8) != 0) throw FormatError(path + ": bad model magic");
    if (r.u32() != kVersion) throw FormatError(path + ": unsupported model version");

    ModelFile model;
    model.kind = static_cast<ModelKind>(r.u32());
    model.loss = static_cast<LossKind>(r.u32());
    model.save_f32 = r.u32() != 0;
    const std::uint32_t depth = r.u32();
    std::vector<LayerSpec> specs(depth);
    for (auto &spec : specs) {
        spec.in_dim = r.u32();
        spec.out_dim = r.u32();
        spec.activation = static_cast<Activation>(r.u32());
    }
    const std::uint32_t names = r.u32();
    for (std::uint32_t i = 0; i < names; ++i) model.label_names.push_back(r.str());
    model.provenance = r.str();

    for (const LayerSpec &spec : specs) {
        Layer layer;
        layer.spec = spec;
        layer.weights = Matrix(spec.in_dim, spec.out_dim);
        for (std::size_t j = 0; j < layer.weights.size(); ++j)
            layer.weights.data()[j] = r.real(model.save_f32);
        layer.bias.resize(spec.out_dim);
        for (double &b : layer.bias) b = r.real(model.save_f32);
        model.net.append_layer(std::move(layer));
    }

    if (r.u32() != 0) {
        RelationSet rel;
        const std::uint32_t k = r.u32();
        const std::uint32_t d = r.u32();
        rel.epsilon = r.f64();
        rel.relations = Matrix(k, d);
        for (std::uint32_t l = 0; l < k; ++l) {
            rel.counts.push_back(r.u64());
            for (std::uint32_t j = 0; j < d; ++j) rel.relations(l, j) = r.f64();
            Matrix cov(d, d);
            for (std::size_t j = 0; j < cov.size(); ++j) cov.data()[j] = r.f64();
            rel.covariances.push_back(std::move(cov));
        }
        model.relations = std::move(rel);
    }

    if (r.u32() != 0) {
        PcaModel pca;
        const std::uint32_t in_dim = r.u32();
        model.pca_dims = r.u32();
        const std::uint32_t comps = r.u32();
        pca.mean.resize(in_dim);
        for (double &v : pca.mean) v = r.f64();
        pca.components = Matrix(comps, in_dim);
        for (std::size_t j = 0; j < pca.components.size(); ++j) pca.components.data()[j] = r.f64();
        pca.explained_variance.resize(comps);
        for (double &v : pca.explained_variance) v = r.f64();
        model.pca = std::move(pca);
    }

    if (r.pos() + 8 != r.size()) throw FormatError(path + ": trailing bytes in model file");
    return model;
}

} // namespace atdl
