#include "lightdxml/bundle.hpp"

#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

namespace lightdxml {
namespace {

constexpr char kMagic[8] = {'L', 'D', 'X', 'M', 'L', 'B', 'N', 'D'};

enum Section : std::uint32_t {
    kConfig = 1,
    kEmbeddings = 2,
    kEncoder = 3,
    kTransform = 4,
    kClassifier = 5,
    kIndex = 6,
    kLabelFrequency = 7,
    kLog = 8,
};

void write_section(ByteWriter& out, Section tag, const ByteWriter& payload) {
    out.u32(tag);
    out.u64(payload.bytes().size());
    out.raw(payload.bytes());
}

std::span<const std::byte> read_section(ByteReader& in, Section expected) {
    const auto tag = in.u32();
    if (tag != expected) {
        throw BundleError(BundleError::Kind::Malformed,
                          "bundle: expected section " + std::to_string(expected) + ", found " + std::to_string(tag));
    }
    const auto length = in.u64();
    if (length > in.remaining()) {
        throw BundleError(BundleError::Kind::Truncated, "bundle: section " + std::to_string(tag) + " is truncated");
    }
    return in.raw(static_cast<std::size_t>(length));
}

void expect_done(const ByteReader& in, const char* what) {
    if (!in.done()) {
        throw BundleError(BundleError::Kind::Malformed, std::string("bundle: trailing bytes in ") + what);
    }
}

void write_log(ByteWriter& out, const TrainingLog& log) {
    out.u64(log.cycles.size());
    for (const auto& c : log.cycles) {
        out.u64(c.cycle);
        out.u64(c.classifier_epochs_done);
        out.u64(c.encoder_version);
        out.u64(c.shortlist_encoder_version);
        out.f64(c.encoder_loss);
        out.f64(c.classifier_loss);
        out.f64(c.val_p1);
        out.f64(c.val_psp1);
    }
    out.u64(log.epochs.size());
    for (const auto& e : log.epochs) {
        out.u64(e.epoch);
        out.u64(e.shortlist_encoder_version);
        out.f64(e.loss);
    }
    out.u64(log.classifier_epochs);
    out.u64(log.encoder_epochs);
    out.u64(log.encoder_trainings);
    out.u64(log.shortlist_builds);
    out.u64(log.best_cycle);
}

std::size_t read_count(ByteReader& in, std::size_t record_bytes) {
    const auto n = in.u64();
    if (n > in.remaining() / record_bytes) {
        throw BundleError(BundleError::Kind::Truncated, "bundle: record count exceeds payload");
    }
    return static_cast<std::size_t>(n);
}

TrainingLog read_log(ByteReader& in) {
    TrainingLog log;
    const auto n_cycles = read_count(in, 64);
    log.cycles.resize(n_cycles);
    for (auto& c : log.cycles) {
        c.cycle = in.u64();
        c.classifier_epochs_done = in.u64();
        c.encoder_version = in.u64();
        c.shortlist_encoder_version = in.u64();
        c.encoder_loss = in.f64();
        c.classifier_loss = in.f64();
        c.val_p1 = in.f64();
        c.val_psp1 = in.f64();
    }
    const auto n_epochs = read_count(in, 24);
    log.epochs.resize(n_epochs);
    for (auto& e : log.epochs) {
        e.epoch = in.u64();
        e.shortlist_encoder_version = in.u64();
        e.loss = in.f64();
    }
    log.classifier_epochs = in.u64();
    log.encoder_epochs = in.u64();
    log.encoder_trainings = in.u64();
    log.shortlist_builds = in.u64();
    log.best_cycle = in.u64();
    return log;
}

}  // namespace

void ModelBundle::validate() const {
    const std::size_t d = dim();
    if (embeddings.dim() != d) {
        throw DimensionError("bundle: embedding dim " + std::to_string(embeddings.dim()) + " != model dim " +
                             std::to_string(d));
    }
    encoder.validate();
    if (encoder.dim() != d) {
        throw DimensionError("bundle: encoder dim does not match model dim");
    }
    if (model.clf.dim() != d || static_cast<std::size_t>(model.transform.bias.size()) != d ||
        static_cast<std::size_t>(model.transform.weight.cols()) != d) {
        throw DimensionError("bundle: transform/classifier shapes disagree");
    }
    if (static_cast<std::size_t>(model.clf.bias.size()) != n_labels()) {
        throw DimensionError("bundle: classifier bias length != label count");
    }
    if (!index.empty() && (index.size() != n_labels() || index.dim() != d)) {
        throw DimensionError("bundle: index shape does not match classifier");
    }
    if (label_frequency.size() != n_labels()) {
        throw DimensionError("bundle: label frequency length != label count");
    }
}

std::vector<std::byte> serialize_bundle(const ModelBundle& bundle) {
    bundle.validate();
    ByteWriter out;
    out.raw(std::as_bytes(std::span<const char>(kMagic)));
    out.u32(kBundleVersion);

    ByteWriter section;
    section.string(format_config(bundle.config));
    write_section(out, kConfig, section);

    section = {};
    section.row_matrix(bundle.embeddings.rows);
    write_section(out, kEmbeddings, section);

    section = {};
    section.matrix(bundle.encoder.w1);
    section.vector(bundle.encoder.b1);
    section.matrix(bundle.encoder.w2);
    section.vector(bundle.encoder.b2);
    write_section(out, kEncoder, section);

    section = {};
    section.matrix(bundle.model.transform.weight);
    section.vector(bundle.model.transform.bias);
    write_section(out, kTransform, section);

    section = {};
    section.u8(bundle.model.clf.use_bias ? 1 : 0);
    section.matrix(bundle.model.clf.weights);
    section.vector(bundle.model.clf.bias);
    write_section(out, kClassifier, section);

    section = {};
    bundle.index.serialize(section);
    write_section(out, kIndex, section);

    section = {};
    section.u64(bundle.n_train_points);
    section.u64(bundle.label_frequency.size());
    for (const auto f : bundle.label_frequency) {
        section.u64(f);
    }
    write_section(out, kLabelFrequency, section);

    section = {};
    write_log(section, bundle.log);
    write_section(out, kLog, section);

    out.u32(crc32(out.bytes()));
    return std::move(out.bytes());
}

ModelBundle deserialize_bundle(std::span<const std::byte> bytes) {
    constexpr std::size_t kHeader = sizeof(kMagic) + 4;
    if (bytes.size() < kHeader + 4) {
        throw BundleError(BundleError::Kind::Truncated, "bundle: file too short");
    }
    if (std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
        throw BundleError(BundleError::Kind::Malformed, "bundle: bad magic");
    }
    const auto body = bytes.first(bytes.size() - 4);
    ByteReader trailer(bytes.last(4));
    if (trailer.u32() != crc32(body)) {
        throw BundleError(BundleError::Kind::Checksum, "bundle: checksum mismatch");
    }

    ByteReader in(body.subspan(sizeof(kMagic)));
    const auto version = in.u32();
    if (version != kBundleVersion) {
        throw BundleError(BundleError::Kind::Version, "bundle: unsupported version " + std::to_string(version));
    }

    ModelBundle bundle;
    {
        ByteReader s(read_section(in, kConfig));
        std::istringstream text(s.string());
        try {
            bundle.config = parse_config(text);
        } catch (const ConfigError& e) {
            throw BundleError(BundleError::Kind::Malformed, std::string("bundle: ") + e.what());
        }
        expect_done(s, "config");
    }
    {
        ByteReader s(read_section(in, kEmbeddings));
        bundle.embeddings.rows = s.row_matrix();
        expect_done(s, "embeddings");
    }
    {
        ByteReader s(read_section(in, kEncoder));
        bundle.encoder.w1 = s.matrix();
        bundle.encoder.b1 = s.vector();
        bundle.encoder.w2 = s.matrix();
        bundle.encoder.b2 = s.vector();
        expect_done(s, "encoder");
    }
    {
        ByteReader s(read_section(in, kTransform));
        bundle.model.transform.weight = s.matrix();
        bundle.model.transform.bias = s.vector();
        expect_done(s, "transform");
    }
    {
        ByteReader s(read_section(in, kClassifier));
        bundle.model.clf.use_bias = s.u8() != 0;
        bundle.model.clf.weights = s.matrix();
        bundle.model.clf.bias = s.vector();
        expect_done(s, "classifier");
    }
    {
        ByteReader s(read_section(in, kIndex));
        bundle.index = AnnIndex::deserialize(s);
        expect_done(s, "index");
    }
    {
        ByteReader s(read_section(in, kLabelFrequency));
        bundle.n_train_points = s.u64();
        const auto n = read_count(s, 8);
        bundle.label_frequency.resize(n);
        for (auto& f : bundle.label_frequency) {
            f = s.u64();
        }
        expect_done(s, "label frequencies");
    }
    {
        ByteReader s(read_section(in, kLog));
        bundle.log = read_log(s);
        expect_done(s, "training log");
    }
    expect_done(in, "bundle");

    try {
        bundle.validate();
    } catch (const Error& e) {
        throw BundleError(BundleError::Kind::Malformed, e.what());
    }
    return bundle;
}

void save_bundle(const ModelBundle& bundle, const std::filesystem::path& path) {
    const auto bytes = serialize_bundle(bundle);
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw BundleError(BundleError::Kind::Io, "cannot write bundle " + tmp.string());
        }
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!out) {
            throw BundleError(BundleError::Kind::Io, "write failed for " + tmp.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        throw BundleError(BundleError::Kind::Io, "cannot move bundle into place: " + ec.message());
    }
}

ModelBundle load_bundle(const std::filesystem::path& path) {
    std::error_code ec;
    if (!std::filesystem::is_regular_file(path, ec)) {
        throw BundleError(BundleError::Kind::NotFound, "bundle not found: " + path.string());
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw BundleError(BundleError::Kind::Io, "cannot read bundle " + path.string());
    }
    const std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize_bundle(std::as_bytes(std::span<const char>(data)));
}

}  // namespace lightdxml
