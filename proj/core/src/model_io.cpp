#include "oodkit/model_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace oodkit {

namespace {

constexpr char kMagic[4] = {'O', 'O', 'D', 'M'};
constexpr std::uint8_t kVersion = 1;

class Writer {
public:
    explicit Writer(ModelKind kind) {
        buf_.append(kMagic, 4);
        buf_.push_back(static_cast<char>(kVersion));
        buf_.push_back(static_cast<char>(kind));
    }

    void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
    void i32(std::int32_t v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

    void finish(const std::filesystem::path& path) const {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out)
            throw FormatError("cannot open file for writing: " + path.string());
        out.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
        if (!out)
            throw FormatError("write failed: " + path.string());
    }

private:
    std::string buf_;
};

class Reader {
public:
    Reader(const std::filesystem::path& path, ModelKind expected) : path_(path.string()) {
        std::ifstream in(path, std::ios::binary);
        if (!in)
            throw FormatError("cannot open file: " + path_);
        std::ostringstream ss;
        ss << in.rdbuf();
        buf_ = ss.str();
        if (buf_.size() < 6 || std::memcmp(buf_.data(), kMagic, 4) != 0)
            throw FormatError("bad magic in " + path_ + " (expected \"OODM\")");
        if (static_cast<std::uint8_t>(buf_[4]) != kVersion)
            throw FormatError("unsupported model version in " + path_);
        if (static_cast<std::uint8_t>(buf_[5]) != static_cast<std::uint8_t>(expected))
            throw FormatError("model kind mismatch in " + path_);
        pos_ = 6;
    }

    std::uint8_t u8() {
        need(1);
        return static_cast<std::uint8_t>(buf_[pos_++]);
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(buf_[pos_++])) << (8 * i);
        return v;
    }
    std::int32_t i32() { return std::bit_cast<std::int32_t>(u32()); }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(buf_[pos_++])) << (8 * i);
        return v;
    }
    float f32() { return std::bit_cast<float>(u32()); }
    double f64() { return std::bit_cast<double>(u64()); }

    void done() const {
        if (pos_ != buf_.size())
            throw FormatError("trailing bytes in " + path_);
    }

private:
    void need(std::size_t n) {
        if (pos_ + n > buf_.size())
            throw FormatError("truncated model file: " + path_);
    }
    std::string path_;
    std::string buf_;
    std::size_t pos_ = 0;
};

}  // namespace

ModelKind peek_model_kind(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw FormatError("cannot open file: " + path.string());
    char header[6];
    in.read(header, 6);
    if (!in || std::memcmp(header, kMagic, 4) != 0)
        throw FormatError("bad magic in " + path.string() + " (expected \"OODM\")");
    const auto kind = static_cast<std::uint8_t>(header[5]);
    if (kind > static_cast<std::uint8_t>(ModelKind::KlTemplates))
        throw FormatError("unknown model kind in " + path.string());
    return static_cast<ModelKind>(kind);
}

void save_classifier(const ToyClassifier& model, const std::filesystem::path& path) {
    Writer w(ModelKind::Classifier);
    w.u8(static_cast<std::uint8_t>(model.head));
    w.f64(model.dropout_rate);
    w.u8(model.has_confidence ? 1 : 0);
    w.u32(static_cast<std::uint32_t>(model.widths.size()));
    for (auto v : model.widths) w.u32(v);
    for (double v : parameters(model)) w.f64(v);
    w.finish(path);
}

ToyClassifier load_classifier(const std::filesystem::path& path) {
    Reader r(path, ModelKind::Classifier);
    ToyClassifier model;
    const auto head = r.u8();
    if (head > 1)
        throw FormatError("unknown head code in " + path.string());
    model.head = static_cast<Head>(head);
    model.dropout_rate = r.f64();
    model.has_confidence = r.u8() != 0;
    const auto width_count = r.u32();
    model.widths.resize(width_count);
    for (auto& v : model.widths) v = r.u32();
    if (model.widths.size() < 2)
        throw FormatError("bad layer widths in " + path.string());
    model.weights.resize(model.widths.size() - 1);
    model.biases.resize(model.widths.size() - 1);
    std::size_t param_count = 0;
    for (std::size_t l = 0; l + 1 < model.widths.size(); ++l) {
        model.weights[l].resize(static_cast<std::size_t>(model.widths[l]) * model.widths[l + 1]);
        model.biases[l].resize(model.widths[l + 1]);
        param_count += model.weights[l].size() + model.biases[l].size();
    }
    if (model.has_confidence) {
        model.conf_weight.resize(model.widths[model.widths.size() - 2]);
        param_count += model.conf_weight.size() + 1;
    }
    std::vector<double> params(param_count);
    for (auto& v : params) v = r.f64();
    r.done();
    set_parameters(model, params);
    return model;
}

void save_autoencoder(const ToyAutoencoder& model, const std::filesystem::path& path) {
    Writer w(ModelKind::Autoencoder);
    w.u32(static_cast<std::uint32_t>(model.widths.size()));
    for (auto v : model.widths) w.u32(v);
    for (double v : parameters(model)) w.f64(v);
    w.finish(path);
}

ToyAutoencoder load_autoencoder(const std::filesystem::path& path) {
    Reader r(path, ModelKind::Autoencoder);
    ToyAutoencoder model;
    const auto width_count = r.u32();
    model.widths.resize(width_count);
    for (auto& v : model.widths) v = r.u32();
    if (model.widths.size() < 2)
        throw FormatError("bad layer widths in " + path.string());
    model.weights.resize(model.widths.size() - 1);
    model.biases.resize(model.widths.size() - 1);
    std::size_t param_count = 0;
    for (std::size_t l = 0; l + 1 < model.widths.size(); ++l) {
        model.weights[l].resize(static_cast<std::size_t>(model.widths[l]) * model.widths[l + 1]);
        model.biases[l].resize(model.widths[l + 1]);
        param_count += model.weights[l].size() + model.biases[l].size();
    }
    std::vector<double> params(param_count);
    for (auto& v : params) v = r.f64();
    r.done();
    set_parameters(model, params);
    return model;
}

void save_lof(const LofModel& model, const std::filesystem::path& path) {
    Writer w(ModelKind::Lof);
    w.u64(model.k);
    w.u32(static_cast<std::uint32_t>(model.count()));
    w.u32(static_cast<std::uint32_t>(model.dim));
    for (float v : model.points) w.f32(v);
    for (double v : model.k_distance) w.f64(v);
    for (const auto& nbrs : model.neighbors) {
        w.u32(static_cast<std::uint32_t>(nbrs.size()));
        for (auto j : nbrs) w.u32(j);
    }
    for (double v : model.lrd) w.f64(v);
    w.finish(path);
}

LofModel load_lof(const std::filesystem::path& path) {
    Reader r(path, ModelKind::Lof);
    LofModel model;
    model.k = r.u64();
    const auto n = r.u32();
    model.dim = r.u32();
    model.points.resize(static_cast<std::size_t>(n) * model.dim);
    for (auto& v : model.points) v = r.f32();
    model.k_distance.resize(n);
    for (auto& v : model.k_distance) v = r.f64();
    model.neighbors.resize(n);
    for (auto& nbrs : model.neighbors) {
        nbrs.resize(r.u32());
        for (auto& j : nbrs) j = r.u32();
    }
    model.lrd.resize(n);
    for (auto& v : model.lrd) v = r.f64();
    r.done();
    return model;
}

void save_iforest(const IsolationForestModel& model, const std::filesystem::path& path) {
    Writer w(ModelKind::IsolationForest);
    w.u32(model.subsample_size);
    w.u64(model.seed);
    w.u32(static_cast<std::uint32_t>(model.dim));
    w.u32(static_cast<std::uint32_t>(model.trees.size()));
    for (const auto& tree : model.trees) {
        w.u32(static_cast<std::uint32_t>(tree.size()));
        for (const auto& node : tree) {
            w.i32(node.feature);
            w.f32(node.threshold);
            w.i32(node.left);
            w.i32(node.right);
            w.u32(node.size);
        }
    }
    w.finish(path);
}

IsolationForestModel load_iforest(const std::filesystem::path& path) {
    Reader r(path, ModelKind::IsolationForest);
    IsolationForestModel model;
    model.subsample_size = r.u32();
    model.seed = r.u64();
    model.dim = r.u32();
    model.trees.resize(r.u32());
    for (auto& tree : model.trees) {
        tree.resize(r.u32());
        for (auto& node : tree) {
            node.feature = r.i32();
            node.threshold = r.f32();
            node.left = r.i32();
            node.right = r.i32();
            node.size = r.u32();
        }
    }
    r.done();
    return model;
}

void save_kl_templates(const PosteriorTemplateSet& templates,
                       const std::filesystem::path& path) {
    Writer w(ModelKind::KlTemplates);
    const auto k = static_cast<std::uint32_t>(templates.num_classes());
    w.u32(k);
    for (auto c : templates.counts) w.u32(c);
    for (float v : templates.templates.data()) w.f32(v);
    w.finish(path);
}

PosteriorTemplateSet load_kl_templates(const std::filesystem::path& path) {
    Reader r(path, ModelKind::KlTemplates);
    const auto k = r.u32();
    if (k == 0)
        throw FormatError("empty template set in " + path.string());
    std::vector<std::uint32_t> counts(k);
    for (auto& v : counts) v = r.u32();
    std::vector<float> data(static_cast<std::size_t>(k) * k);
    for (auto& v : data) v = r.f32();
    r.done();
    return PosteriorTemplateSet{Tensor({k, k}, std::move(data)), std::move(counts)};
}

}  // namespace oodkit
