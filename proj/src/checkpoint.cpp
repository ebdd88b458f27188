#include "sgdr/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "sgdr/errors.hpp"

using json = nlohmann::json;

namespace sgdr {

namespace {

constexpr char kMagic[8] = {'S', 'G', 'D', 'R', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

struct NamedTensor {
    std::string name;
    const Tensor<float>* tensor;
};

void collect_state(const ParamRegistry<float>& params, const TrainerState* state,
                   std::vector<NamedTensor>& out, json& meta) {
    for (const auto& e : params.entries()) out.push_back({e.name, &e.var->value});
    if (!state) return;
    meta["next_epoch"] = state->next_epoch;
    meta["adam_gen_t"] = state->adam_gen_t;
    meta["adam_disc_t"] = state->adam_disc_t;
    auto add_moments = [&](const char* tag, const std::vector<Tensor<float>>& ms) {
        for (std::size_t i = 0; i < ms.size(); ++i) {
            if (ms[i].numel() == 0) continue;
            out.push_back({std::string(tag) + params.entries()[i].name, &ms[i]});
        }
    };
    add_moments("adam.gen.m:", state->adam_gen_m);
    add_moments("adam.gen.v:", state->adam_gen_v);
    add_moments("adam.disc.m:", state->adam_disc_m);
    add_moments("adam.disc.v:", state->adam_disc_v);
}

}  // namespace

void save_checkpoint(const std::string& path, const ParamRegistry<float>& params,
                     const TrainerState* state, const std::string& extra_meta_json) {
    std::vector<NamedTensor> tensors;
    json meta = json::object();
    collect_state(params, state, tensors, meta);
    if (!extra_meta_json.empty()) {
        json extra = json::parse(extra_meta_json);
        for (auto it = extra.begin(); it != extra.end(); ++it) meta[it.key()] = it.value();
    }

    json header;
    header["aliases"] = params.aliases();
    header["meta"] = meta;
    json tlist = json::array();
    std::uint64_t offset = 0;
    for (const auto& nt : tensors) {
        tlist.push_back(
            {{"name", nt.name}, {"shape", nt.tensor->shape}, {"offset", offset}});
        offset += nt.tensor->numel() * sizeof(float);
    }
    header["tensors"] = tlist;
    const std::string htext = header.dump();

    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("checkpoint: cannot open " + path);
    os.write(kMagic, 8);
    const std::uint32_t version = kVersion;
    os.write(reinterpret_cast<const char*>(&version), sizeof(version));
    const std::uint64_t hlen = htext.size();
    os.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
    os.write(htext.data(), static_cast<std::streamsize>(htext.size()));
    for (const auto& nt : tensors) {
        os.write(reinterpret_cast<const char*>(nt.tensor->ptr()),
                 static_cast<std::streamsize>(nt.tensor->numel() * sizeof(float)));
    }
    if (!os) throw IoError("checkpoint: write failed for " + path);
}

void load_checkpoint(const std::string& path, ParamRegistry<float>& params,
                     TrainerState* state) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("checkpoint: cannot open " + path);
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kMagic, 8) != 0) {
        throw IoError("checkpoint: bad magic in " + path);
    }
    std::uint32_t version = 0;
    is.read(reinterpret_cast<char*>(&version), sizeof(version));
    if (version != kVersion) throw IoError("checkpoint: unsupported version");
    std::uint64_t hlen = 0;
    is.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
    std::string htext(hlen, '\0');
    is.read(htext.data(), static_cast<std::streamsize>(hlen));
    if (!is) throw IoError("checkpoint: truncated header in " + path);
    json header;
    try {
        header = json::parse(htext);
    } catch (const json::exception& e) {
        throw IoError(std::string("checkpoint: header parse error: ") + e.what());
    }

    const std::streampos payload_base = is.tellg();
    auto read_into = [&](const json& entry, Tensor<float>& dst, const std::string& name) {
        const auto shape = entry.at("shape").get<std::vector<int>>();
        if (dst.numel() == 0) {
            dst = Tensor<float>(shape);
        } else if (dst.shape != shape) {
            throw IoError("checkpoint: shape mismatch for " + name);
        }
        is.seekg(payload_base + static_cast<std::streamoff>(entry.at("offset").get<std::uint64_t>()));
        is.read(reinterpret_cast<char*>(dst.ptr()),
                static_cast<std::streamsize>(dst.numel() * sizeof(float)));
        if (!is) throw IoError("checkpoint: truncated payload for " + name);
    };

    std::size_t params_loaded = 0;
    for (const auto& entry : header.at("tensors")) {
        const std::string name = entry.at("name").get<std::string>();
        if (name.rfind("adam.", 0) == 0) {
            if (!state) continue;
            const auto colon = name.find(':');
            const std::string kind = name.substr(0, colon);
            const std::string pname = name.substr(colon + 1);
            const int slot = params.find(pname)->param_slot;
            std::vector<Tensor<float>>* target = nullptr;
            if (kind == "adam.gen.m") target = &state->adam_gen_m;
            else if (kind == "adam.gen.v") target = &state->adam_gen_v;
            else if (kind == "adam.disc.m") target = &state->adam_disc_m;
            else if (kind == "adam.disc.v") target = &state->adam_disc_v;
            else throw IoError("checkpoint: unknown state tensor " + name);
            if (target->size() < params.size()) target->resize(params.size());
            read_into(entry, (*target)[static_cast<std::size_t>(slot)], name);
        } else {
            Var<float> var = params.find(name);
            read_into(entry, var->value, name);
            ++params_loaded;
        }
    }
    if (params_loaded != params.size()) {
        throw IoError("checkpoint: parameter set mismatch (expected " +
                      std::to_string(params.size()) + ", found " +
                      std::to_string(params_loaded) + ")");
    }
    if (state) {
        const auto& meta = header.at("meta");
        state->next_epoch = meta.value("next_epoch", 0);
        state->adam_gen_t = meta.value("adam_gen_t", 0ull);
        state->adam_disc_t = meta.value("adam_disc_t", 0ull);
    }
}

std::string read_checkpoint_meta(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("checkpoint: cannot open " + path);
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kMagic, 8) != 0) {
        throw IoError("checkpoint: bad magic in " + path);
    }
    std::uint32_t version = 0;
    is.read(reinterpret_cast<char*>(&version), sizeof(version));
    std::uint64_t hlen = 0;
    is.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
    std::string htext(hlen, '\0');
    is.read(htext.data(), static_cast<std::streamsize>(hlen));
    if (!is) throw IoError("checkpoint: truncated header in " + path);
    return json::parse(htext).at("meta").dump();
}

}  // namespace sgdr
