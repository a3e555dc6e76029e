#include "eps/model_io.hpp"

#include "eps/error.hpp"
#include "eps/recording_io.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <vector>

namespace eps {

using Json = nlohmann::ordered_json;

namespace {

std::uint64_t fnv1a(std::string_view bytes)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

void append_double(std::string& out, double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, res.ptr);
}

[[noreturn]] void corrupt(const std::string& what) { throw Error(ErrorKind::CorruptFile, "model file: " + what); }

std::string_view to_string(PercentileMethod m) { return m == PercentileMethod::Linear ? "linear" : "nearest_rank"; }

PercentileMethod parse_percentile_method(std::string_view s)
{
    if (s == "linear")
        return PercentileMethod::Linear;
    if (s == "nearest_rank")
        return PercentileMethod::NearestRank;
    corrupt("unknown percentile method '" + std::string(s) + "'");
}

Json header_json(const EpsModel& m)
{
    const ArchConfig& a = m.network.arch();
    const TrainConfig& c = m.train_config;
    Json j;
    j["method"] = std::string(to_string(m.method));
    j["architecture"] = {{"seq_len", a.seq_len},         {"channels", a.channels},
                         {"dilations", a.dilations},     {"kernel_size", a.kernel_size},
                         {"latent", a.latent},           {"padding", std::string(to_string(a.padding))},
                         {"bn_momentum", a.bn_momentum}, {"bn_epsilon", a.bn_epsilon}};
    j["threshold"] = m.threshold;
    j["calibration_percentile"] = m.calibration_percentile;
    j["percentile_method"] = std::string(to_string(m.percentile_method));
    j["normalization"] = {{"enabled", m.normalization.enabled},
                          {"mean", m.normalization.mean},
                          {"scale", m.normalization.scale}};
    j["train_config"] = {{"epochs", c.epochs},         {"batch_size", c.batch_size}, {"learning_rate", c.learning_rate},
                         {"adam_beta1", c.adam_beta1}, {"adam_beta2", c.adam_beta2}, {"adam_epsilon", c.adam_epsilon},
                         {"seed", c.seed},             {"shuffle", c.shuffle},       {"standardize", c.standardize}};
    j["provenance"] = {{"config_digest", m.provenance.config_digest},
                       {"data_fingerprint", m.provenance.data_fingerprint}};
    return j;
}

void write_tensor(std::string& out, const char* kind, const std::string& name, const Tensor& t)
{
    out += kind;
    out += ' ';
    out += name;
    for (auto d : t.shape())
        out += ' ' + std::to_string(d);
    out += '\n';
    bool first = true;
    for (double v : t.data()) {
        if (!first)
            out += ' ';
        append_double(out, v);
        first = false;
    }
    out += '\n';
}

class LineReader {
public:
    explicit LineReader(std::string_view text) : text_(text) {}

    std::string_view next()
    {
        if (pos_ >= text_.size())
            corrupt("unexpected end of file");
        const auto nl = text_.find('\n', pos_);
        if (nl == std::string_view::npos)
            corrupt("missing newline");
        auto line = text_.substr(pos_, nl - pos_);
        pos_ = nl + 1;
        return line;
    }

private:
    std::string_view text_;
    std::size_t pos_ = 0;
};

std::vector<std::string_view> split(std::string_view s)
{
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && s[i] == ' ')
            ++i;
        const auto j = s.find(' ', i);
        const auto end = j == std::string_view::npos ? s.size() : j;
        if (end > i)
            out.push_back(s.substr(i, end - i));
        i = end;
    }
    return out;
}

template <class T>
T parse_number(std::string_view s)
{
    T v{};
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        corrupt("bad number '" + std::string(s) + "'");
    return v;
}

void read_tensor(LineReader& in, const char* kind, const std::string& name, Tensor& into)
{
    const auto head = split(in.next());
    if (head.size() < 2 || head[0] != kind || head[1] != name)
        corrupt(std::string("expected ") + kind + " " + name);
    std::vector<std::size_t> dims;
    for (std::size_t i = 2; i < head.size(); ++i)
        dims.push_back(parse_number<std::size_t>(head[i]));
    if (dims != into.shape())
        throw Error(ErrorKind::ShapeMismatch, name + " has shape " + shape_string(dims) + ", architecture needs " +
                                                  shape_string(into.shape()));
    const auto values = split(in.next());
    if (values.size() != into.size())
        corrupt(name + ": expected " + std::to_string(into.size()) + " values, found " + std::to_string(values.size()));
    for (std::size_t i = 0; i < values.size(); ++i)
        into[i] = parse_number<double>(values[i]);
}

template <class T>
T field(const Json& j, const char* key)
{
    try {
        return j.at(key).get<T>();
    } catch (const Json::exception&) {
        corrupt(std::string("header field '") + key + "' missing or mistyped");
    }
}

}  // namespace

std::string_view to_string(Padding p) { return p == Padding::Causal ? "causal" : "symmetric"; }

Padding parse_padding(std::string_view s)
{
    if (s == "symmetric")
        return Padding::Symmetric;
    if (s == "causal")
        return Padding::Causal;
    throw Error(ErrorKind::InvalidInput, "unknown padding '" + std::string(s) + "'");
}

std::string serialize_model(const EpsModel& model)
{
    model.validate();
    std::string out = "EPSMODEL " + std::to_string(kModelFormatMajor) + "." + std::to_string(kModelFormatMinor) + "\n";
    out += "header " + header_json(model).dump() + "\n";
    TcnAutoencoder net = model.network;
    for (const auto& p : net.parameters())
        write_tensor(out, "param", p.name, *p.value);
    for (const auto& b : net.buffers())
        write_tensor(out, "buffer", b.name, *b.value);
    out += "end\n";
    out += "checksum " + hex64(fnv1a(out)) + "\n";
    return out;
}

EpsModel parse_model(std::string_view text, const LoadOptions& options)
{
    // Version first, so a future format is reported as such rather than as corruption.
    const auto first_nl = text.find('\n');
    const auto magic = split(text.substr(0, first_nl));
    if (magic.size() != 2 || magic[0] != "EPSMODEL")
        corrupt("not an EPS model file");
    const auto dot = magic[1].find('.');
    if (dot == std::string_view::npos)
        corrupt("malformed version");
    const int major = parse_number<int>(magic[1].substr(0, dot));
    parse_number<int>(magic[1].substr(dot + 1));
    if (major != kModelFormatMajor)
        throw Error(ErrorKind::VersionMismatch, "model format major version " + std::to_string(major) +
                                                    " is not supported (expected " + std::to_string(kModelFormatMajor) + ")");

    std::string_view body = text;
    while (!body.empty() && body.back() == '\n')
        body.remove_suffix(1);
    const auto last_nl = body.rfind('\n');
    if (last_nl == std::string_view::npos)
        corrupt("missing checksum");
    const auto sum_line = split(body.substr(last_nl + 1));
    if (sum_line.size() != 2 || sum_line[0] != "checksum")
        corrupt("missing checksum");
    const std::string_view payload = text.substr(0, last_nl + 1);
    if (hex64(fnv1a(payload)) != sum_line[1])
        corrupt("checksum mismatch");

    LineReader in(payload);
    in.next();
    const auto header_line = in.next();
    if (header_line.substr(0, 7) != "header ")
        corrupt("missing header");
    Json h;
    try {
        h = Json::parse(header_line.substr(7));
    } catch (const Json::exception& e) {
        corrupt(std::string("header: ") + e.what());
    }

    const Json arch_j = h.contains("architecture") ? h["architecture"] : Json();
    if (!arch_j.is_object())
        corrupt("header has no architecture");
    ArchConfig arch;
    arch.seq_len = field<std::size_t>(arch_j, "seq_len");
    arch.channels = field<std::vector<std::size_t>>(arch_j, "channels");
    arch.dilations = field<std::vector<std::size_t>>(arch_j, "dilations");
    arch.kernel_size = field<std::size_t>(arch_j, "kernel_size");
    arch.latent = field<std::size_t>(arch_j, "latent");
    arch.bn_momentum = field<double>(arch_j, "bn_momentum");
    arch.bn_epsilon = field<double>(arch_j, "bn_epsilon");
    try {
        arch.padding = parse_padding(field<std::string>(arch_j, "padding"));
    } catch (const Error& e) {
        corrupt(e.what());
    }
    if (arch.seq_len != kWindowLength)
        throw Error(ErrorKind::ShapeMismatch, "sequence length " + std::to_string(arch.seq_len) + " in file, expected " +
                                                  std::to_string(kWindowLength));
    try {
        arch.validate();
    } catch (const Error& e) {
        throw Error(ErrorKind::ShapeMismatch, std::string("architecture: ") + e.what());
    }
    if (options.expected_padding && *options.expected_padding != arch.padding)
        throw Error(ErrorKind::ShapeMismatch, "model was trained with " + std::string(to_string(arch.padding)) +
                                                  " padding, caller expects " +
                                                  std::string(to_string(*options.expected_padding)));

    EpsModel m;
    m.network = TcnAutoencoder(arch, 0);
    try {
        m.method = parse_method(field<std::string>(h, "method"));
    } catch (const Error& e) {
        corrupt(e.what());
    }
    m.threshold = field<double>(h, "threshold");
    m.calibration_percentile = field<double>(h, "calibration_percentile");
    m.percentile_method = parse_percentile_method(field<std::string>(h, "percentile_method"));
    const Json norm = h.contains("normalization") ? h["normalization"] : Json();
    if (!norm.is_object())
        corrupt("header has no normalization");
    m.normalization.enabled = field<bool>(norm, "enabled");
    m.normalization.mean = field<std::vector<double>>(norm, "mean");
    m.normalization.scale = field<std::vector<double>>(norm, "scale");
    if (m.normalization.enabled &&
        (m.normalization.mean.size() != arch.seq_len || m.normalization.scale.size() != arch.seq_len))
        throw Error(ErrorKind::ShapeMismatch, "normalization length does not match the sequence length");
    const Json tc = h.contains("train_config") ? h["train_config"] : Json();
    if (!tc.is_object())
        corrupt("header has no train_config");
    m.train_config.epochs = field<int>(tc, "epochs");
    m.train_config.batch_size = field<std::size_t>(tc, "batch_size");
    m.train_config.learning_rate = field<double>(tc, "learning_rate");
    m.train_config.adam_beta1 = field<double>(tc, "adam_beta1");
    m.train_config.adam_beta2 = field<double>(tc, "adam_beta2");
    m.train_config.adam_epsilon = field<double>(tc, "adam_epsilon");
    m.train_config.seed = field<std::uint64_t>(tc, "seed");
    m.train_config.shuffle = field<bool>(tc, "shuffle");
    m.train_config.standardize = field<bool>(tc, "standardize");
    const Json prov = h.contains("provenance") ? h["provenance"] : Json();
    if (!prov.is_object())
        corrupt("header has no provenance");
    m.provenance.config_digest = field<std::string>(prov, "config_digest");
    m.provenance.data_fingerprint = field<std::string>(prov, "data_fingerprint");

    for (auto& p : m.network.parameters())
        read_tensor(in, "param", p.name, *p.value);
    for (auto& b : m.network.buffers())
        read_tensor(in, "buffer", b.name, *b.value);
    if (in.next() != "end")
        corrupt("expected end marker");

    try {
        m.validate();
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::ShapeMismatch)
            throw;
        corrupt(e.what());
    }
    for (const auto* t : m.network.parameter_values())
        if (!t->all_finite())
            corrupt("non-finite parameter");
    return m;
}

void save_model(const EpsModel& model, const std::filesystem::path& path)
{
    write_text_atomic(path, serialize_model(model));
}

EpsModel load_model(const std::filesystem::path& path, const LoadOptions& options)
{
    return parse_model(read_text(path), options);
}

}  // namespace eps
