// Versioned model container: 8-byte magic, u32 version, u64 header length,
// JSON header, then a row-major little-endian f64 parameter blob.
#include "nnmrom/autoencoder.hpp"
#include "nnmrom/lstm.hpp"
#include "nnmrom/rom.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

namespace nnmrom {

namespace {

using nlohmann::json;

constexpr char kMagic[8] = {'N', 'R', 'O', 'M', 'M', 'O', 'D', 'L'};
constexpr std::uint32_t kVersion = 1;

void write_container(const std::string& path, const json& header,
                     const std::vector<double>& params) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    os.write(kMagic, sizeof(kMagic));
    os.write(reinterpret_cast<const char*>(&kVersion), sizeof(kVersion));
    const std::string h = header.dump();
    const std::uint64_t len = h.size();
    os.write(reinterpret_cast<const char*>(&len), sizeof(len));
    os.write(h.data(), static_cast<std::streamsize>(h.size()));
    os.write(reinterpret_cast<const char*>(params.data()),
             static_cast<std::streamsize>(params.size() * sizeof(double)));
}

std::pair<json, std::vector<double>> read_container(const std::string& path,
                                                    const std::string& expected_kind) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path);
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw std::runtime_error(path + ": not a model file (bad magic)");
    std::uint32_t version = 0;
    is.read(reinterpret_cast<char*>(&version), sizeof(version));
    if (version != kVersion) throw std::runtime_error(path + ": unsupported model version");
    std::uint64_t len = 0;
    is.read(reinterpret_cast<char*>(&len), sizeof(len));
    std::string h(len, '\0');
    is.read(h.data(), static_cast<std::streamsize>(len));
    if (!is) throw std::runtime_error(path + ": truncated header");
    json header = json::parse(h);
    if (header.at("kind").get<std::string>() != expected_kind)
        throw std::runtime_error(path + ": expected a " + expected_kind + " model");

    std::vector<double> params;
    params.resize(header.at("param_count").get<std::size_t>());
    is.read(reinterpret_cast<char*>(params.data()),
            static_cast<std::streamsize>(params.size() * sizeof(double)));
    if (!is) throw std::runtime_error(path + ": truncated parameter blob");
    return {std::move(header), std::move(params)};
}

json layer_spec(const nn::DenseLayer& layer) {
    const char* act = layer.activation == nn::Activation::Linear    ? "linear"
                      : layer.activation == nn::Activation::Tanh    ? "tanh"
                                                                    : "sigmoid";
    return json{{"out", layer.out_dim()}, {"in", layer.in_dim()}, {"act", act}};
}

nn::DenseLayer layer_from_spec(const json& spec) {
    const std::string act = spec.at("act").get<std::string>();
    nn::Activation a = act == "linear"  ? nn::Activation::Linear
                       : act == "tanh"  ? nn::Activation::Tanh
                       : act == "sigmoid" ? nn::Activation::Sigmoid
                                          : throw std::runtime_error("bad activation tag");
    return nn::make_dense(spec.at("out").get<Eigen::Index>(), spec.at("in").get<Eigen::Index>(), a);
}

json norm_spec(const nn::Normalizer& n) {
    return json{{"mean", std::vector<double>(n.mean.data(), n.mean.data() + n.mean.size())},
                {"std", std::vector<double>(n.std.data(), n.std.data() + n.std.size())}};
}

nn::Normalizer norm_from_spec(const json& spec) {
    const auto mean = spec.at("mean").get<std::vector<double>>();
    const auto sd = spec.at("std").get<std::vector<double>>();
    nn::Normalizer n;
    n.mean = Eigen::Map<const Vec>(mean.data(), static_cast<Eigen::Index>(mean.size()));
    n.std = Eigen::Map<const Vec>(sd.data(), static_cast<Eigen::Index>(sd.size()));
    return n;
}

// --- autoencoder <-> header/blob -------------------------------------------

json ae_header(const AutoencoderModel& model, Eigen::Index param_count) {
    json enc = json::array(), dec = json::array();
    for (const auto& l : model.encoder.layers) enc.push_back(layer_spec(l));
    for (const auto& l : model.decoder.layers) dec.push_back(layer_spec(l));
    return json{{"kind", "autoencoder"},
                {"bottleneck", model.bottleneck_dim},
                {"encoder", enc},
                {"decoder", dec},
                {"norm", norm_spec(model.norm)},
                {"param_count", param_count}};
}

std::vector<double> ae_blob(const AutoencoderModel& model) {
    const auto n = nn::param_count(model.encoder) + nn::param_count(model.decoder);
    std::vector<double> blob(static_cast<std::size_t>(n));
    double* p = blob.data();
    for (const auto& l : model.encoder.layers) {
        nn::flatten_into(l, p);
        p += nn::param_count(l);
    }
    for (const auto& l : model.decoder.layers) {
        nn::flatten_into(l, p);
        p += nn::param_count(l);
    }
    return blob;
}

AutoencoderModel ae_from(const json& header, const double*& p) {
    AutoencoderModel model;
    model.bottleneck_dim = header.at("bottleneck").get<int>();
    for (const auto& spec : header.at("encoder")) {
        auto l = layer_from_spec(spec);
        nn::unflatten_from(l, p);
        p += nn::param_count(l);
        model.encoder.layers.push_back(std::move(l));
    }
    for (const auto& spec : header.at("decoder")) {
        auto l = layer_from_spec(spec);
        nn::unflatten_from(l, p);
        p += nn::param_count(l);
        model.decoder.layers.push_back(std::move(l));
    }
    model.norm = norm_from_spec(header.at("norm"));
    model.validate();
    return model;
}

// --- regressor <-> header/blob ----------------------------------------------

template <typename CellLike, typename Fn>
void for_each_cell_block(CellLike& cell, Fn&& fn) {
    fn(cell.w_i);
    fn(cell.u_i);
    fn(cell.b_i);
    fn(cell.w_f);
    fn(cell.u_f);
    fn(cell.b_f);
    fn(cell.w_o);
    fn(cell.u_o);
    fn(cell.b_o);
    fn(cell.w_c);
    fn(cell.u_c);
    fn(cell.b_c);
}

Eigen::Index cell_params(const LstmCell& cell) {
    Eigen::Index n = 0;
    for_each_cell_block(cell, [&](const auto& b) { n += b.size(); });
    return n;
}

json reg_header(const LstmRegressor& reg, Eigen::Index param_count) {
    json cells = json::array();
    for (const auto& c : reg.layers)
        cells.push_back(json{{"cell", c.cell_dim()}, {"input", c.input_dim()}});
    return json{{"kind", "lstm_regressor"},
                {"cells", cells},
                {"head", layer_spec(reg.head)},
                {"lookback", reg.lookback},
                {"autoregressive", reg.autoregressive},
                {"input_norm", norm_spec(reg.input_norm)},
                {"output_norm", norm_spec(reg.output_norm)},
                {"param_count", param_count}};
}

Eigen::Index reg_params(const LstmRegressor& reg) {
    Eigen::Index n = nn::param_count(reg.head);
    for (const auto& c : reg.layers) n += cell_params(c);
    return n;
}

void reg_blob_into(const LstmRegressor& reg, double* p) {
    for (const auto& cell : reg.layers)
        for_each_cell_block(cell, [&](const auto& block) {
            for (Eigen::Index r = 0; r < block.rows(); ++r)
                for (Eigen::Index c = 0; c < block.cols(); ++c) *p++ = block(r, c);
        });
    nn::flatten_into(reg.head, p);
}

LstmRegressor reg_from(const json& header, const double*& p) {
    LstmRegressor reg;
    for (const auto& spec : header.at("cells")) {
        const auto cd = spec.at("cell").get<Eigen::Index>();
        const auto id = spec.at("input").get<Eigen::Index>();
        LstmCell cell;
        auto shape = [&](Mat& m, Eigen::Index r, Eigen::Index c) { m.resize(r, c); };
        shape(cell.w_i, cd, id);
        shape(cell.u_i, cd, cd);
        cell.b_i.resize(cd);
        shape(cell.w_f, cd, id);
        shape(cell.u_f, cd, cd);
        cell.b_f.resize(cd);
        shape(cell.w_o, cd, id);
        shape(cell.u_o, cd, cd);
        cell.b_o.resize(cd);
        shape(cell.w_c, cd, id);
        shape(cell.u_c, cd, cd);
        cell.b_c.resize(cd);
        for_each_cell_block(cell, [&](auto& block) {
            for (Eigen::Index r = 0; r < block.rows(); ++r)
                for (Eigen::Index c = 0; c < block.cols(); ++c) block(r, c) = *p++;
        });
        reg.layers.push_back(std::move(cell));
    }
    auto head = layer_from_spec(header.at("head"));
    nn::unflatten_from(head, p);
    p += nn::param_count(head);
    reg.head = std::move(head);
    reg.lookback = header.at("lookback").get<int>();
    reg.autoregressive = header.at("autoregressive").get<bool>();
    reg.input_norm = norm_from_spec(header.at("input_norm"));
    reg.output_norm = norm_from_spec(header.at("output_norm"));
    reg.validate();
    return reg;
}

} // namespace

void save_autoencoder(const AutoencoderModel& model, const std::string& path) {
    model.validate();
    const auto blob = ae_blob(model);
    write_container(path, ae_header(model, static_cast<Eigen::Index>(blob.size())), blob);
}

AutoencoderModel load_autoencoder(const std::string& path) {
    const auto [header, params] = read_container(path, "autoencoder");
    const double* p = params.data();
    return ae_from(header, p);
}

void save_regressor(const LstmRegressor& reg, const std::string& path) {
    reg.validate();
    std::vector<double> blob(static_cast<std::size_t>(reg_params(reg)));
    reg_blob_into(reg, blob.data());
    write_container(path, reg_header(reg, static_cast<Eigen::Index>(blob.size())), blob);
}

LstmRegressor load_regressor(const std::string& path) {
    const auto [header, params] = read_container(path, "lstm_regressor");
    const double* p = params.data();
    return reg_from(header, p);
}

void save_rom(const RomModel& rom, const std::string& path) {
    rom.validate();
    const auto ae = ae_blob(rom.autoencoder);
    std::vector<double> blob(ae.size() + static_cast<std::size_t>(reg_params(rom.regressor)));
    std::copy(ae.begin(), ae.end(), blob.begin());
    reg_blob_into(rom.regressor, blob.data() + ae.size());

    json header{{"kind", "rom_bundle"},
                {"autoencoder", ae_header(rom.autoencoder, static_cast<Eigen::Index>(ae.size()))},
                {"regressor", reg_header(rom.regressor, reg_params(rom.regressor))},
                {"provenance",
                 json{{"config_hash", rom.provenance.config_hash},
                      {"data_digest", rom.provenance.data_digest},
                      {"ae_seed", rom.provenance.ae_seed},
                      {"lstm_seed", rom.provenance.lstm_seed}}},
                {"param_count", blob.size()}};
    write_container(path, header, blob);
}

RomModel load_rom(const std::string& path) {
    const auto [header, params] = read_container(path, "rom_bundle");
    RomModel rom;
    const double* p = params.data();
    rom.autoencoder = ae_from(header.at("autoencoder"), p);
    rom.regressor = reg_from(header.at("regressor"), p);
    const auto& prov = header.at("provenance");
    rom.provenance.config_hash = prov.at("config_hash").get<std::uint64_t>();
    rom.provenance.data_digest = prov.at("data_digest").get<std::uint64_t>();
    rom.provenance.ae_seed = prov.at("ae_seed").get<std::uint64_t>();
    rom.provenance.lstm_seed = prov.at("lstm_seed").get<std::uint64_t>();
    rom.validate();
    return rom;
}

} // namespace nnmrom
