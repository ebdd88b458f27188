#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sgdr/image.hpp"
#include "sgdr/phantom.hpp"

namespace sgdr {

// --------------------------------------------------------------------------
// On-disk sample format (version 1, all little-endian):
//   bytes 0..3   magic "SGDR"
//   u32          version (1)
//   u32          dtype (1 = float32 image + uint8 labels)
//   u32          H
//   u32          W
//   f64          spacing_row_mm
//   f64          spacing_col_mm
//   u32          domain (0 = source, 1 = target)
//   u32          flags (bit0 = has_mask, bit1 = eval_only)
//   f32[H*W]     image pixels, row-major
//   u8[H*W]      labels, row-major (only when bit0 is set)
// --------------------------------------------------------------------------

struct SampleRecord {
    Image2D image;
    std::optional<SegMask> mask;
    bool eval_only = false;
};

void write_sample(const std::string& path, const SampleRecord& rec);
SampleRecord read_sample(const std::string& path);

enum class Split { Source, TargetTrain, TargetEval };

const char* split_name(Split s);

// JSON manifest describing one generated dataset.
struct DatasetManifest {
    int version = 1;
    std::string base_dir;
    Spacing spacing;
    std::vector<std::string> class_names;
    std::vector<std::string> source_files;       // labeled, count M
    std::vector<std::string> target_train_files; // unlabeled, count N
    std::vector<std::string> target_eval_files;  // labeled, eval-only
    std::vector<std::uint64_t> source_anatomy_seeds;
    std::vector<std::uint64_t> target_anatomy_seeds;  // train + eval

    std::size_t count(Split s) const;
    void save(const std::string& path) const;
    static DatasetManifest load(const std::string& path);
};

// Deterministic synthetic benchmark generation. Writes every sample file,
// then the manifest last; partial output is removed on failure.
DatasetManifest build_dataset(const PhantomSpec& spec, const std::string& out_dir);

// In-memory view over a generated dataset. Evaluation-only labels are gated:
// a store opened without eval access throws AccessViolation on any attempt
// to reach the target-eval split, which is what keeps training honest.
class DatasetStore {
public:
    enum class Access { TrainOnly, WithEval };

    DatasetStore(const DatasetManifest& manifest, Access access);

    std::size_t count(Split s) const;
    const LabeledSample& source(std::size_t i) const;
    const UnlabeledSample& target_train(std::size_t i) const;
    const LabeledSample& target_eval(std::size_t i) const;  // gated

    // Samples drawn without replacement within an epoch; deterministic in
    // (seed, epoch). Source batches carry masks, target batches do not.
    std::vector<std::size_t> epoch_order(Split s, std::uint64_t seed,
                                         std::uint64_t epoch) const;

private:
    Access access_;
    std::vector<LabeledSample> source_;
    std::vector<UnlabeledSample> target_train_;
    std::vector<LabeledSample> target_eval_;
    std::size_t target_eval_count_unloaded_ = 0;
};

// Contract-level batch loader: the first `batch_size` samples of the epoch
// permutation for the requested split. Eval-split access requires an
// eval-capable store and otherwise raises.
std::vector<LabeledSample> load_source_batch(const DatasetStore& store, std::size_t batch_size,
                                             std::uint64_t seed, std::uint64_t epoch = 0);
std::vector<UnlabeledSample> load_target_batch(const DatasetStore& store, std::size_t batch_size,
                                               std::uint64_t seed, std::uint64_t epoch = 0);

}  // namespace sgdr
