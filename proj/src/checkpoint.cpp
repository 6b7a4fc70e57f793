#include "segt/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <string>

#include "byte_io.hpp"
#include "segt/error.hpp"

namespace segt {
namespace {

using detail::put_le;

constexpr std::uint8_t kMagic[4] = {'S', 'E', 'G', 'C'};
const std::string kMomentM = "adam.m.";
const std::string kMomentV = "adam.v.";

struct Blob {
    std::string name;
    const Tensor<float>* tensor;
};

std::vector<Blob> blobs_of(const Checkpoint& c) {
    std::vector<Blob> blobs;
    for (std::size_t i = 0; i < c.params.size(); ++i) blobs.push_back({c.params.name(i), &c.params.tensor(i)});
    if (c.optimizer) {
        for (std::size_t i = 0; i < c.optimizer->m.size(); ++i) {
            blobs.push_back({kMomentM + c.optimizer->m.name(i), &c.optimizer->m.tensor(i)});
        }
        for (std::size_t i = 0; i < c.optimizer->v.size(); ++i) {
            blobs.push_back({kMomentV + c.optimizer->v.name(i), &c.optimizer->v.tensor(i)});
        }
    }
    return blobs;
}

} // namespace

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& c) {
    c.params.check_against(c.config);
    const auto blobs = blobs_of(c);

    nlohmann::json header;
    header["config"] = to_json(c.config);
    header["epoch"] = c.epoch;
    header["metrics"] = c.metrics;
    header["train_config"] = c.train_config;
    header["optimizer"] = c.optimizer ? nlohmann::json{{"step", c.optimizer->step}} : nlohmann::json(nullptr);
    nlohmann::json directory = nlohmann::json::array();
    std::uint64_t offset = 0;
    for (const auto& b : blobs) {
        directory.push_back({{"name", b.name}, {"dims", b.tensor->dims()}, {"offset", offset}});
        offset += 4 * b.tensor->size();
    }
    header["tensors"] = std::move(directory);
    const std::string text = header.dump();

    std::vector<std::uint8_t> out;
    out.reserve(16 + text.size() + offset);
    for (std::uint8_t b : kMagic) out.push_back(b);
    put_le<std::uint32_t>(out, kCheckpointFormatVersion);
    put_le<std::uint64_t>(out, text.size());
    for (char ch : text) out.push_back(static_cast<std::uint8_t>(ch));
    for (const auto& b : blobs) {
        for (float v : b.tensor->data()) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
    }
    return out;
}

Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
    detail::ByteReader in(bytes, "checkpoint");
    if (std::memcmp(in.take(4, "magic"), kMagic, 4) != 0) throw FormatError("bad magic: not a SEGC checkpoint");
    const auto version = in.get_le<std::uint32_t>("version");
    if (version != kCheckpointFormatVersion) {
        throw UnsupportedVersion("unsupported checkpoint format version " + std::to_string(version));
    }
    const auto header_len = in.get_le<std::uint64_t>("header length");
    if (header_len > in.remaining()) throw FormatError("checkpoint truncated in header");
    const auto* text = reinterpret_cast<const char*>(in.take(header_len, "header"));

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(text, text + header_len);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("checkpoint header is not valid JSON: ") + e.what());
    }

    Checkpoint c;
    std::optional<std::uint64_t> step;
    nlohmann::json directory;
    try {
        c.config = model_config_from_json(header.at("config"));
        c.epoch = header.at("epoch").get<std::size_t>();
        c.metrics = header.value("metrics", nlohmann::json());
        c.train_config = header.value("train_config", nlohmann::json());
        if (const auto& opt = header.at("optimizer"); !opt.is_null()) step = opt.at("step").get<std::uint64_t>();
        directory = header.at("tensors");
        if (!directory.is_array()) throw FormatError("checkpoint tensor directory is not an array");
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed checkpoint header: ") + e.what());
    }

    const std::size_t blob_start = in.position();
    const std::size_t blob_bytes = in.remaining();
    ModelParams<float> m;
    ModelParams<float> v;
    std::uint64_t expected_offset = 0;
    for (const auto& entry : directory) {
        std::string name;
        Dims dims;
        std::uint64_t offset = 0;
        try {
            name = entry.at("name").get<std::string>();
            dims = entry.at("dims").get<Dims>();
            offset = entry.at("offset").get<std::uint64_t>();
        } catch (const nlohmann::json::exception& e) {
            throw FormatError(std::string("malformed tensor directory entry: ") + e.what());
        }
        std::uint64_t count = 1;
        for (std::size_t d : dims) {
            if (d == 0 || count > (UINT64_MAX / 4) / d) throw FormatError("tensor " + name + " has invalid dims");
            count *= d;
        }
        if (dims.empty()) throw FormatError("tensor " + name + " has no dims");
        if (offset != expected_offset) throw FormatError("tensor " + name + " offset is not contiguous");
        if (offset > blob_bytes || count * 4 > blob_bytes - offset) {
            throw FormatError("checkpoint truncated in tensor " + name);
        }
        expected_offset = offset + count * 4;

        std::vector<float> values(count);
        const std::uint8_t* p = bytes.data() + blob_start + offset;
        for (std::size_t i = 0; i < count; ++i) {
            std::uint32_t bits = 0;
            for (std::size_t b = 0; b < 4; ++b) bits |= std::uint32_t{p[4 * i + b]} << (8 * b);
            values[i] = std::bit_cast<float>(bits);
        }
        Tensor<float> t(dims, std::move(values));
        if (name.starts_with(kMomentM)) {
            m.add(name.substr(kMomentM.size()), std::move(t));
        } else if (name.starts_with(kMomentV)) {
            v.add(name.substr(kMomentV.size()), std::move(t));
        } else {
            c.params.add(name, std::move(t));
        }
    }
    if (expected_offset != blob_bytes) {
        throw FormatError("checkpoint has " + std::to_string(blob_bytes - expected_offset) + " trailing bytes");
    }

    c.params.check_against(c.config);
    if (step) {
        m.check_against(c.config);
        v.check_against(c.config);
        c.optimizer = AdamWState{*step, std::move(m), std::move(v)};
    } else if (m.size() != 0 || v.size() != 0) {
        throw FormatError("checkpoint has optimizer moments but no optimizer step");
    }
    return c;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
    detail::write_file_bytes(encode_checkpoint(checkpoint), path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    return decode_checkpoint(detail::read_file_bytes(path, "checkpoint"));
}

} // namespace segt
