#include "iapgev/vae/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>

#include "iapgev/error.hpp"

namespace iapgev::vae {

namespace {

constexpr char magic[8] = {'I', 'A', 'P', 'G', 'V', 'A', 'E', '1'};

class Writer {
public:
    void u64(std::uint64_t v) {
        for (int b = 0; b < 8; ++b) out_.push_back(static_cast<char>((v >> (8 * b)) & 0xFF));
    }
    void u32(std::uint32_t v) {
        for (int b = 0; b < 4; ++b) out_.push_back(static_cast<char>((v >> (8 * b)) & 0xFF));
    }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void reals(const std::vector<double>& v) {
        u64(v.size());
        for (double x : v) f64(x);
    }
    void text(const std::string& s) {
        u64(s.size());
        out_ += s;
    }
    void raw(const char* p, std::size_t n) { out_.append(p, n); }
    std::string take() { return std::move(out_); }

private:
    std::string out_;
};

class Reader {
public:
    explicit Reader(const std::string& in) : in_(in) {}
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in_[pos_ + b])) << (8 * b);
        pos_ += 8;
        return v;
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in_[pos_ + b])) << (8 * b);
        pos_ += 4;
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    std::size_t count() {
        const auto n = u64();
        if (n > in_.size()) throw VersionError("checkpoint: implausible length field");
        return static_cast<std::size_t>(n);
    }
    std::vector<double> reals() {
        std::vector<double> v(count());
        for (double& x : v) x = f64();
        return v;
    }
    std::string text() {
        const std::size_t n = count();
        need(n);
        std::string s = in_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    bool raw_equals(const char* p, std::size_t n) {
        need(n);
        const bool eq = std::memcmp(in_.data() + pos_, p, n) == 0;
        pos_ += n;
        return eq;
    }
    bool done() const { return pos_ == in_.size(); }

private:
    void need(std::size_t n) const {
        if (pos_ + n > in_.size()) throw VersionError("checkpoint is truncated");
    }
    const std::string& in_;
    std::size_t pos_ = 0;
};

}  // namespace

std::string serialize(const VaeModel& model) {
    Writer w;
    w.raw(magic, sizeof magic);
    w.u32(checkpoint_version);
    const auto& hp = model.hyperparams();
    w.u64(hp.latent_dim);
    w.u64(hp.encoder_hidden_layers);
    w.u64(hp.decoder_hidden_layers);
    w.u64(hp.batch_norm ? 1 : 0);
    w.u64(hp.minibatch_size);
    w.f64(hp.learning_rate);
    w.u64(hp.mc_draws);
    w.u64(hp.max_iterations);
    w.f64(hp.decoder_sigma);
    w.u64(hp.hidden_width);
    w.u64(model.attributes());
    w.reals(model.lower_bounds());
    w.u64(model.normalization() ? 1 : 0);
    if (model.normalization()) {
        w.reals(model.normalization()->mean);
        w.reals(model.normalization()->std);
    }
    w.u64(model.parameters().size());
    for (const auto& p : model.parameters()) {
        w.text(p.name);
        w.u64(p.value.rows());
        w.u64(p.value.cols());
        for (double x : p.value.entries()) w.f64(x);
    }
    w.u64(model.batch_norm_states().size());
    for (const auto& s : model.batch_norm_states()) {
        w.reals(s.mean);
        w.reals(s.var);
    }
    return w.take();
}

VaeModel deserialize(const std::string& bytes) {
    Reader r(bytes);
    if (!r.raw_equals(magic, sizeof magic)) throw VersionError("not a VAE checkpoint");
    const auto version = r.u32();
    if (version != checkpoint_version)
        throw VersionError("checkpoint version " + std::to_string(version) + " is not supported");
    VaeHyperparams hp;
    hp.latent_dim = r.u64();
    hp.encoder_hidden_layers = r.u64();
    hp.decoder_hidden_layers = r.u64();
    hp.batch_norm = r.u64() != 0;
    hp.minibatch_size = r.u64();
    hp.learning_rate = r.f64();
    hp.mc_draws = r.u64();
    hp.max_iterations = r.u64();
    hp.decoder_sigma = r.f64();
    hp.hidden_width = r.u64();
    const std::size_t attributes = r.u64();
    if (attributes > bytes.size() || hp.latent_dim > bytes.size() || hp.hidden_width > bytes.size() ||
        hp.encoder_hidden_layers > bytes.size() || hp.decoder_hidden_layers > bytes.size())
        throw VersionError("checkpoint header is inconsistent");
    VaeModel model = [&] {
        try {
            return VaeModel::zeros(hp, attributes);
        } catch (const Error& e) {
            throw VersionError(std::string("checkpoint hyperparameters are invalid: ") + e.what());
        }
    }();
    auto lower = r.reals();
    if (r.u64() != 0) {
        data::Normalization n{r.reals(), r.reals()};
        model.set_normalization(std::move(n));
    }
    if (lower.size() != attributes) throw VersionError("checkpoint bounds do not match the attribute count");
    model.set_lower_bounds(std::move(lower));

    auto& params = model.parameters();
    if (r.u64() != params.size()) throw VersionError("checkpoint parameter count does not match its hyperparameters");
    for (auto& p : params) {
        if (r.text() != p.name) throw VersionError("checkpoint parameter layout differs at '" + p.name + "'");
        const auto rows = r.u64(), cols = r.u64();
        if (rows != p.value.rows() || cols != p.value.cols())
            throw VersionError("checkpoint parameter '" + p.name + "' has the wrong shape");
        for (double& x : p.value.entries()) x = r.f64();
    }
    auto& states = model.batch_norm_states();
    if (r.u64() != states.size()) throw VersionError("checkpoint batch-norm layout differs");
    for (auto& s : states) {
        auto mean = r.reals(), var = r.reals();
        if (mean.size() != s.mean.size() || var.size() != s.var.size())
            throw VersionError("checkpoint batch-norm statistics have the wrong width");
        s.mean = std::move(mean);
        s.var = std::move(var);
    }
    if (!r.done()) throw VersionError("checkpoint has trailing bytes");
    return model;
}

void save_checkpoint(const std::filesystem::path& path, const VaeModel& model) {
    const auto bytes = serialize(model);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write checkpoint " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("failed writing checkpoint " + path.string());
}

VaeModel load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint " + path.string());
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize(bytes);
}

std::string fingerprint(const VaeModel& model) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : serialize(model)) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace iapgev::vae
