#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "sgdr/image.hpp"

namespace sgdr {

using BinaryMask = std::vector<std::uint8_t>;  // row-major, nonzero = foreground

// Overlap 2|A∩B| / (|A|+|B|); both-empty pairs count as perfect agreement.
double dice_coefficient(const BinaryMask& pred, const BinaryMask& gt);

// Pixels of the mask with at least one 4-neighbor outside it; the image
// border counts as outside.
std::vector<std::pair<int, int>> extract_boundary(const BinaryMask& mask, int h, int w);

// Average symmetric surface distance in millimeters under anisotropic pixel
// spacing. Degenerate cases: exactly one empty boundary set scores the image
// diagonal, two empty sets score 0.
double assd(const BinaryMask& pred, const BinaryMask& gt, int h, int w, Spacing spacing);

// Exact squared Euclidean distance transform of a point set over the grid
// (Felzenszwalb-Huttenlocher), used by assd; exposed for the oracle test.
std::vector<double> squared_edt(const std::vector<std::uint8_t>& seeds, int h, int w,
                                Spacing spacing);

struct EvalReport {
    // per foreground class {MYO, LV, RV}
    std::array<double, 3> dice_pct{};
    std::array<double, 3> assd_mm{};
    double mean_dice_pct = 0;
    double mean_assd_mm = 0;
    std::size_t sample_count = 0;
    std::size_t degenerate_count = 0;

    // plain-text table, column order MYO LV RV Average
    std::string table() const;
    std::string to_json() const;
    static EvalReport from_json(const std::string& text);
};

// Slice-wise one-vs-rest evaluation of {MYO, LV, RV}; per-class means are
// taken over slices, the reported average is the macro mean of the three
// class means.
EvalReport evaluate(const std::vector<SegMask>& predictions,
                    const std::vector<SegMask>& ground_truths, Spacing spacing);

BinaryMask class_mask(const SegMask& m, std::uint8_t cls);

}  // namespace sgdr
