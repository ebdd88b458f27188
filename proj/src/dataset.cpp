#include "sgdr/dataset.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "sgdr/errors.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace sgdr {

namespace {

constexpr char kMagic[4] = {'S', 'G', 'D', 'R'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kDtypeF32U8 = 1;

template <class T>
void put(std::ostream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    return v;
}

static_assert(std::endian::native == std::endian::little,
              "sample format is little-endian; big-endian hosts need byte swaps");

}  // namespace

const char* split_name(Split s) {
    switch (s) {
        case Split::Source: return "source";
        case Split::TargetTrain: return "target_train";
        case Split::TargetEval: return "target_eval";
    }
    return "?";
}

void write_sample(const std::string& path, const SampleRecord& rec) {
    const int H = rec.image.height(), W = rec.image.width();
    if (rec.mask && (rec.mask->h != H || rec.mask->w != W)) {
        throw ShapeError("write_sample: mask/image shape mismatch");
    }
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("write_sample: cannot open " + path);
    os.write(kMagic, 4);
    put<std::uint32_t>(os, kVersion);
    put<std::uint32_t>(os, kDtypeF32U8);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(H));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(W));
    put<double>(os, rec.image.spacing.row_mm);
    put<double>(os, rec.image.spacing.col_mm);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(rec.image.domain));
    std::uint32_t flags = 0;
    if (rec.mask) flags |= 1u;
    if (rec.eval_only) flags |= 2u;
    put<std::uint32_t>(os, flags);
    os.write(reinterpret_cast<const char*>(rec.image.pixels.ptr()),
             static_cast<std::streamsize>(sizeof(float) * rec.image.pixels.numel()));
    if (rec.mask) {
        os.write(reinterpret_cast<const char*>(rec.mask->labels.data()),
                 static_cast<std::streamsize>(rec.mask->labels.size()));
    }
    if (!os) throw IoError("write_sample: write failed for " + path);
}

SampleRecord read_sample(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("read_sample: cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0) {
        throw IoError("read_sample: bad magic in " + path);
    }
    const auto version = get<std::uint32_t>(is);
    if (version != kVersion) throw IoError("read_sample: unsupported version");
    const auto dtype = get<std::uint32_t>(is);
    if (dtype != kDtypeF32U8) throw IoError("read_sample: unsupported dtype");
    const int H = static_cast<int>(get<std::uint32_t>(is));
    const int W = static_cast<int>(get<std::uint32_t>(is));
    SampleRecord rec;
    rec.image.spacing.row_mm = get<double>(is);
    rec.image.spacing.col_mm = get<double>(is);
    rec.image.domain = static_cast<Domain>(get<std::uint32_t>(is));
    const auto flags = get<std::uint32_t>(is);
    rec.eval_only = (flags & 2u) != 0;
    rec.image.pixels = Tensor<float>({H, W});
    is.read(reinterpret_cast<char*>(rec.image.pixels.ptr()),
            static_cast<std::streamsize>(sizeof(float) * rec.image.pixels.numel()));
    if (flags & 1u) {
        SegMask m;
        m.h = H;
        m.w = W;
        m.spacing = rec.image.spacing;
        m.labels.resize(static_cast<std::size_t>(H) * W);
        is.read(reinterpret_cast<char*>(m.labels.data()),
                static_cast<std::streamsize>(m.labels.size()));
        rec.mask = std::move(m);
    }
    if (!is) throw IoError("read_sample: truncated file " + path);
    return rec;
}

std::size_t DatasetManifest::count(Split s) const {
    switch (s) {
        case Split::Source: return source_files.size();
        case Split::TargetTrain: return target_train_files.size();
        case Split::TargetEval: return target_eval_files.size();
    }
    return 0;
}

void DatasetManifest::save(const std::string& path) const {
    json j;
    j["version"] = version;
    j["format"] = "sgdr-sample-v1";
    j["spacing_mm"] = {spacing.row_mm, spacing.col_mm};
    j["class_names"] = class_names;
    j["domains"]["source"] = {
        {"files", source_files}, {"count", source_files.size()}, {"labeled", true}};
    j["domains"]["target_train"] = {
        {"files", target_train_files}, {"count", target_train_files.size()}, {"labeled", false}};
    j["domains"]["target_eval"] = {{"files", target_eval_files},
                                   {"count", target_eval_files.size()},
                                   {"labeled", true},
                                   {"eval_only", true}};
    j["anatomy_seeds"]["source"] = source_anatomy_seeds;
    j["anatomy_seeds"]["target"] = target_anatomy_seeds;
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw IoError("manifest: cannot open " + path);
    os << j.dump(2) << "\n";
    if (!os) throw IoError("manifest: write failed for " + path);
}

DatasetManifest DatasetManifest::load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("manifest: cannot open " + path);
    json j;
    try {
        is >> j;
    } catch (const json::exception& e) {
        throw IoError(std::string("manifest: parse error: ") + e.what());
    }
    DatasetManifest m;
    m.version = j.at("version").get<int>();
    if (m.version != 1) throw IoError("manifest: unsupported version");
    m.base_dir = fs::path(path).parent_path().string();
    const auto sp = j.at("spacing_mm");
    m.spacing.row_mm = sp.at(0).get<double>();
    m.spacing.col_mm = sp.at(1).get<double>();
    m.class_names = j.at("class_names").get<std::vector<std::string>>();
    m.source_files = j.at("domains").at("source").at("files").get<std::vector<std::string>>();
    m.target_train_files =
        j.at("domains").at("target_train").at("files").get<std::vector<std::string>>();
    m.target_eval_files =
        j.at("domains").at("target_eval").at("files").get<std::vector<std::string>>();
    if (j.contains("anatomy_seeds")) {
        m.source_anatomy_seeds =
            j["anatomy_seeds"].at("source").get<std::vector<std::uint64_t>>();
        m.target_anatomy_seeds =
            j["anatomy_seeds"].at("target").get<std::vector<std::uint64_t>>();
    }
    return m;
}

DatasetManifest build_dataset(const PhantomSpec& spec, const std::string& out_dir) {
    spec.source_style.validate();
    spec.target_style.validate();
    if (spec.image_size < 32) throw ValueError("build_dataset: image_size must be >= 32");
    if (spec.image_size % 4 != 0) throw ValueError("build_dataset: image_size must be divisible by 4");

    fs::create_directories(out_dir);
    DatasetManifest manifest;
    manifest.base_dir = out_dir;
    manifest.spacing = spec.spacing;
    manifest.class_names = {"BG", "MYO", "LV", "RV"};

    std::vector<std::string> written;
    auto cleanup = [&]() {
        for (const auto& f : written) {
            std::error_code ec;
            fs::remove(fs::path(out_dir) / f, ec);
        }
    };

    try {
        char name[64];
        auto emit = [&](Split split, int index, std::uint64_t anat_seed,
                        std::uint64_t render_seed, const StyleParams& style, Domain domain,
                        bool keep_mask, bool eval_only) {
            SegMask mask = generate_anatomy(anat_seed, spec.image_size);
            mask.spacing = spec.spacing;
            SampleRecord rec;
            rec.image = render_modality(mask, style, render_seed, domain);
            if (keep_mask) rec.mask = mask;
            rec.eval_only = eval_only;
            std::snprintf(name, sizeof(name), "%s_%03d.sgdr", split_name(split), index);
            write_sample((fs::path(out_dir) / name).string(), rec);
            written.emplace_back(name);
            return std::string(name);
        };

        // Disjoint anatomy seed streams keep source and target unpaired.
        for (int i = 0; i < spec.num_source; ++i) {
            const auto anat = Rng::derive(spec.anatomy_seed, 1, static_cast<std::uint64_t>(i)).next_u64();
            const auto rend = Rng::derive(spec.anatomy_seed, 11, static_cast<std::uint64_t>(i)).next_u64();
            manifest.source_files.push_back(
                emit(Split::Source, i, anat, rend, spec.source_style, Domain::Source, true, false));
            manifest.source_anatomy_seeds.push_back(anat);
        }
        for (int i = 0; i < spec.num_target; ++i) {
            const auto anat = Rng::derive(spec.anatomy_seed, 2, static_cast<std::uint64_t>(i)).next_u64();
            const auto rend = Rng::derive(spec.anatomy_seed, 12, static_cast<std::uint64_t>(i)).next_u64();
            manifest.target_train_files.push_back(emit(Split::TargetTrain, i, anat, rend,
                                                       spec.target_style, Domain::Target, false,
                                                       false));
            manifest.target_anatomy_seeds.push_back(anat);
        }
        for (int i = 0; i < spec.num_eval_target; ++i) {
            const auto anat = Rng::derive(spec.anatomy_seed, 3, static_cast<std::uint64_t>(i)).next_u64();
            const auto rend = Rng::derive(spec.anatomy_seed, 13, static_cast<std::uint64_t>(i)).next_u64();
            manifest.target_eval_files.push_back(emit(Split::TargetEval, i, anat, rend,
                                                      spec.target_style, Domain::Target, true,
                                                      true));
            manifest.target_anatomy_seeds.push_back(anat);
        }
        manifest.save((fs::path(out_dir) / "manifest.json").string());
    } catch (...) {
        cleanup();
        throw;
    }
    return manifest;
}

DatasetStore::DatasetStore(const DatasetManifest& manifest, Access access) : access_(access) {
    const fs::path base(manifest.base_dir);
    for (const auto& f : manifest.source_files) {
        SampleRecord rec = read_sample((base / f).string());
        if (!rec.mask) throw IoError("source sample missing labels: " + f);
        source_.push_back(LabeledSample{std::move(rec.image), std::move(*rec.mask)});
    }
    for (const auto& f : manifest.target_train_files) {
        SampleRecord rec = read_sample((base / f).string());
        target_train_.push_back(UnlabeledSample{std::move(rec.image)});
    }
    if (access_ == Access::WithEval) {
        for (const auto& f : manifest.target_eval_files) {
            SampleRecord rec = read_sample((base / f).string());
            if (!rec.mask) throw IoError("eval sample missing labels: " + f);
            target_eval_.push_back(LabeledSample{std::move(rec.image), std::move(*rec.mask)});
        }
    } else {
        // Training stores never even parse eval files; the count is all that
        // is retained so bookkeeping stays possible.
        target_eval_count_unloaded_ = manifest.target_eval_files.size();
    }
}

std::size_t DatasetStore::count(Split s) const {
    switch (s) {
        case Split::Source: return source_.size();
        case Split::TargetTrain: return target_train_.size();
        case Split::TargetEval:
            return access_ == Access::WithEval ? target_eval_.size() : target_eval_count_unloaded_;
    }
    return 0;
}

const LabeledSample& DatasetStore::source(std::size_t i) const { return source_.at(i); }

const UnlabeledSample& DatasetStore::target_train(std::size_t i) const {
    return target_train_.at(i);
}

const LabeledSample& DatasetStore::target_eval(std::size_t i) const {
    if (access_ != Access::WithEval) {
        throw AccessViolation("target eval labels are not accessible from the training path");
    }
    return target_eval_.at(i);
}

std::vector<std::size_t> DatasetStore::epoch_order(Split s, std::uint64_t seed,
                                                   std::uint64_t epoch) const {
    if (s == Split::TargetEval && access_ != Access::WithEval) {
        throw AccessViolation("target eval split is not accessible from the training path");
    }
    std::vector<std::size_t> order(count(s));
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng = Rng::derive(seed, 0xba7c4u + static_cast<std::uint64_t>(static_cast<int>(s)), epoch);
    rng.shuffle(order);
    return order;
}

std::vector<LabeledSample> load_source_batch(const DatasetStore& store, std::size_t batch_size,
                                             std::uint64_t seed, std::uint64_t epoch) {
    if (batch_size > store.count(Split::Source)) {
        throw ValueError("load_source_batch: batch size exceeds domain sample count");
    }
    const auto order = store.epoch_order(Split::Source, seed, epoch);
    std::vector<LabeledSample> out;
    out.reserve(batch_size);
    for (std::size_t i = 0; i < batch_size; ++i) out.push_back(store.source(order[i]));
    return out;
}

std::vector<UnlabeledSample> load_target_batch(const DatasetStore& store, std::size_t batch_size,
                                               std::uint64_t seed, std::uint64_t epoch) {
    if (batch_size > store.count(Split::TargetTrain)) {
        throw ValueError("load_target_batch: batch size exceeds domain sample count");
    }
    const auto order = store.epoch_order(Split::TargetTrain, seed, epoch);
    std::vector<UnlabeledSample> out;
    out.reserve(batch_size);
    for (std::size_t i = 0; i < batch_size; ++i) out.push_back(store.target_train(order[i]));
    return out;
}

}  // namespace sgdr
