#include "hsgcn/checkpoint.hpp"

#include "hsgcn/error.hpp"

#include <json.hpp>

#include <bit>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <sstream>

namespace hsgcn {

namespace {

using nlohmann::json;

void put_f64(std::string& out, double v) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) {
        out.push_back(static_cast<char>(bits & 0xffU));
        bits >>= 8;
    }
}

class Reader {
public:
    Reader(const std::string& bytes, std::size_t pos) : bytes_(bytes), pos_(pos) {}

    double f64() {
        if (pos_ + 8 > bytes_.size()) throw IoError("checkpoint: truncated tensor data");
        std::uint64_t bits = 0;
        for (int b = 7; b >= 0; --b) bits = (bits << 8) | static_cast<unsigned char>(bytes_[pos_ + static_cast<std::size_t>(b)]);
        pos_ += 8;
        return std::bit_cast<double>(bits);
    }
    bool done() const { return pos_ == bytes_.size(); }

private:
    const std::string& bytes_;
    std::size_t pos_;
};

}  // namespace

std::string serialize_checkpoint(const SiameseModel& model) {
    model.validate();
    json header;
    header["format"] = "hsgcn-checkpoint";
    header["version"] = kCheckpointVersion;
    header["dtype"] = "float64-le";
    header["relu_last"] = model.gcn.relu_last;
    header["dropout_keep"] = model.dropout_keep;
    json layers = json::array();
    json tensors = json::array();
    for (std::size_t l = 0; l < model.gcn.layers.size(); ++l) {
        const auto& bank = model.gcn.layers[l];
        layers.push_back({{"K", bank.order()}, {"f_in", bank.f_in()}, {"f_out", bank.f_out()}});
        tensors.push_back({{"name", "gcn." + std::to_string(l) + ".theta"},
                           {"shape", {bank.order(), bank.f_in(), bank.f_out()}}});
    }
    header["layers"] = layers;
    header["fc"] = {{"n_nodes", model.n_nodes()}, {"width", model.gcn.f_out()}, {"size", model.fc_weights.size()}};
    tensors.push_back({{"name", "fc.weights"}, {"shape", {model.fc_weights.size()}}});
    tensors.push_back({{"name", "fc.bias"}, {"shape", {1}}});
    header["tensors"] = tensors;

    std::string out = header.dump() + "\n";
    for (const auto& bank : model.gcn.layers) {
        for (const auto& t : bank.theta) {
            for (Eigen::Index i = 0; i < t.rows(); ++i) {
                for (Eigen::Index j = 0; j < t.cols(); ++j) put_f64(out, t(i, j));
            }
        }
    }
    for (Eigen::Index i = 0; i < model.fc_weights.size(); ++i) put_f64(out, model.fc_weights(i));
    put_f64(out, model.fc_bias);
    return out;
}

SiameseModel deserialize_checkpoint(const std::string& bytes) {
    const auto newline = bytes.find('\n');
    if (newline == std::string::npos) throw IoError("checkpoint: missing header line");
    json header;
    try {
        header = json::parse(bytes.substr(0, newline));
    } catch (const json::exception& e) {
        throw IoError(std::string("checkpoint: bad header: ") + e.what());
    }
    SiameseModel model;
    try {
        if (header.at("format") != "hsgcn-checkpoint") throw IoError("checkpoint: unknown format tag");
        if (header.at("version").get<int>() != kCheckpointVersion) {
            throw IoError("checkpoint: unsupported version " + header.at("version").dump());
        }
        model.gcn.relu_last = header.at("relu_last").get<bool>();
        model.dropout_keep = header.at("dropout_keep").get<double>();
        for (const auto& layer : header.at("layers")) {
            model.gcn.layers.push_back(ChebFilterBank::zeros(layer.at("K").get<int>(), layer.at("f_in").get<Eigen::Index>(),
                                                             layer.at("f_out").get<Eigen::Index>()));
        }
        model.fc_weights.resize(header.at("fc").at("size").get<Eigen::Index>());
    } catch (const json::exception& e) {
        throw IoError(std::string("checkpoint: bad header: ") + e.what());
    }

    Reader reader(bytes, newline + 1);
    for (auto& bank : model.gcn.layers) {
        for (auto& t : bank.theta) {
            for (Eigen::Index i = 0; i < t.rows(); ++i) {
                for (Eigen::Index j = 0; j < t.cols(); ++j) t(i, j) = reader.f64();
            }
        }
    }
    for (Eigen::Index i = 0; i < model.fc_weights.size(); ++i) model.fc_weights(i) = reader.f64();
    model.fc_bias = reader.f64();
    if (!reader.done()) throw IoError("checkpoint: trailing bytes after tensors");
    model.validate();
    return model;
}

void save_checkpoint(const std::filesystem::path& path, const SiameseModel& model) {
    const auto bytes = serialize_checkpoint(model);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed: " + path.string());
}

SiameseModel load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        return deserialize_checkpoint(bytes);
    } catch (const IoError& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

}  // namespace hsgcn
