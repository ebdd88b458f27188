#include "sgdr/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include <nlohmann/json.hpp>

#include "sgdr/errors.hpp"

using json = nlohmann::json;

namespace sgdr {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// 1-D squared distance transform with sample locations x_i = i * sp
// (Felzenszwalb & Huttenlocher lower-envelope-of-parabolas scan).
void dt1d(const double* f, double* d, int n, double sp, int* v, double* z) {
    int k = 0;
    v[0] = 0;
    z[0] = -kInf;
    z[1] = kInf;
    auto xat = [sp](int i) { return i * sp; };
    for (int q = 1; q < n; ++q) {
        if (f[q] == kInf) continue;
        double s;
        while (true) {
            if (f[v[k]] == kInf) {
                // previous parabola never wins; replace it
                --k;
                if (k < 0) break;
                continue;
            }
            s = ((f[q] + xat(q) * xat(q)) - (f[v[k]] + xat(v[k]) * xat(v[k]))) /
                (2 * xat(q) - 2 * xat(v[k]));
            if (s <= z[k]) {
                --k;
                if (k < 0) break;
            } else {
                break;
            }
        }
        ++k;
        v[k] = q;
        z[k] = k == 0 ? -kInf : s;
        z[k + 1] = kInf;
    }
    if (k < 0 || f[v[0]] == kInf) {
        // no finite sources in this scan line
        for (int q = 0; q < n; ++q) d[q] = kInf;
        return;
    }
    k = 0;
    for (int q = 0; q < n; ++q) {
        while (z[k + 1] < xat(q)) ++k;
        const double dx = xat(q) - xat(v[k]);
        d[q] = dx * dx + f[v[k]];
    }
}

}  // namespace

double dice_coefficient(const BinaryMask& pred, const BinaryMask& gt) {
    if (pred.size() != gt.size()) throw ShapeError("dice_coefficient: shape mismatch");
    std::size_t a = 0, b = 0, inter = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const bool p = pred[i] != 0, g = gt[i] != 0;
        a += p;
        b += g;
        inter += (p && g);
    }
    if (a + b == 0) return 1.0;  // agreement on absence
    return 2.0 * static_cast<double>(inter) / static_cast<double>(a + b);
}

std::vector<std::pair<int, int>> extract_boundary(const BinaryMask& mask, int h, int w) {
    if (mask.size() != static_cast<std::size_t>(h) * w) {
        throw ShapeError("extract_boundary: size mismatch");
    }
    std::vector<std::pair<int, int>> out;
    auto inside = [&](int y, int x) {
        return y >= 0 && y < h && x >= 0 && x < w && mask[static_cast<std::size_t>(y) * w + x];
    };
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!mask[static_cast<std::size_t>(y) * w + x]) continue;
            if (!inside(y - 1, x) || !inside(y + 1, x) || !inside(y, x - 1) || !inside(y, x + 1)) {
                out.emplace_back(y, x);
            }
        }
    }
    return out;
}

std::vector<double> squared_edt(const std::vector<std::uint8_t>& seeds, int h, int w,
                                Spacing spacing) {
    std::vector<double> d(static_cast<std::size_t>(h) * w);
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = seeds[i] ? 0.0 : kInf;

    const int n = std::max(h, w);
    std::vector<double> f(static_cast<std::size_t>(n)), tmp(static_cast<std::size_t>(n));
    std::vector<int> v(static_cast<std::size_t>(n));
    std::vector<double> z(static_cast<std::size_t>(n) + 1);

    // columns first (row spacing), then rows (column spacing)
    for (int x = 0; x < w; ++x) {
        for (int y = 0; y < h; ++y) f[static_cast<std::size_t>(y)] = d[static_cast<std::size_t>(y) * w + x];
        dt1d(f.data(), tmp.data(), h, spacing.row_mm, v.data(), z.data());
        for (int y = 0; y < h; ++y) d[static_cast<std::size_t>(y) * w + x] = tmp[static_cast<std::size_t>(y)];
    }
    for (int y = 0; y < h; ++y) {
        double* row = d.data() + static_cast<std::size_t>(y) * w;
        dt1d(row, tmp.data(), w, spacing.col_mm, v.data(), z.data());
        std::copy(tmp.begin(), tmp.begin() + w, row);
    }
    return d;
}

double assd(const BinaryMask& pred, const BinaryMask& gt, int h, int w, Spacing spacing) {
    if (pred.size() != gt.size() || pred.size() != static_cast<std::size_t>(h) * w) {
        throw ShapeError("assd: shape mismatch");
    }
    const auto bp = extract_boundary(pred, h, w);
    const auto bg = extract_boundary(gt, h, w);
    if (bp.empty() && bg.empty()) return 0.0;
    if (bp.empty() || bg.empty()) {
        // one structure entirely missing: finite worst-case penalty
        return std::hypot(h * spacing.row_mm, w * spacing.col_mm);
    }

    auto seeds_of = [&](const std::vector<std::pair<int, int>>& pts) {
        std::vector<std::uint8_t> s(static_cast<std::size_t>(h) * w, 0);
        for (auto [y, x] : pts) s[static_cast<std::size_t>(y) * w + x] = 1;
        return s;
    };
    const auto dist_to_g = squared_edt(seeds_of(bg), h, w, spacing);
    const auto dist_to_p = squared_edt(seeds_of(bp), h, w, spacing);

    double acc = 0.0;
    for (auto [y, x] : bp) acc += std::sqrt(dist_to_g[static_cast<std::size_t>(y) * w + x]);
    for (auto [y, x] : bg) acc += std::sqrt(dist_to_p[static_cast<std::size_t>(y) * w + x]);
    return acc / static_cast<double>(bp.size() + bg.size());
}

BinaryMask class_mask(const SegMask& m, std::uint8_t cls) {
    BinaryMask out(m.labels.size(), 0);
    for (std::size_t i = 0; i < m.labels.size(); ++i) out[i] = (m.labels[i] == cls) ? 1 : 0;
    return out;
}

EvalReport evaluate(const std::vector<SegMask>& predictions,
                    const std::vector<SegMask>& ground_truths, Spacing spacing) {
    if (predictions.empty() || predictions.size() != ground_truths.size()) {
        throw ValueError("evaluate: need equally sized, non-empty prediction/gt lists");
    }
    EvalReport rep;
    rep.sample_count = predictions.size();
    for (int cls = 1; cls < kNumClasses; ++cls) {
        double dice_acc = 0, assd_acc = 0;
        for (std::size_t i = 0; i < predictions.size(); ++i) {
            const auto& p = predictions[i];
            const auto& g = ground_truths[i];
            if (p.h != g.h || p.w != g.w) throw ShapeError("evaluate: prediction/gt shape");
            const auto pm = class_mask(p, static_cast<std::uint8_t>(cls));
            const auto gm = class_mask(g, static_cast<std::uint8_t>(cls));
            dice_acc += dice_coefficient(pm, gm);
            const bool pe = extract_boundary(pm, p.h, p.w).empty();
            const bool ge = extract_boundary(gm, g.h, g.w).empty();
            if (pe != ge) ++rep.degenerate_count;
            assd_acc += assd(pm, gm, p.h, p.w, spacing);
        }
        rep.dice_pct[static_cast<std::size_t>(cls - 1)] =
            100.0 * dice_acc / static_cast<double>(predictions.size());
        rep.assd_mm[static_cast<std::size_t>(cls - 1)] =
            assd_acc / static_cast<double>(predictions.size());
    }
    rep.mean_dice_pct = (rep.dice_pct[0] + rep.dice_pct[1] + rep.dice_pct[2]) / 3.0;
    rep.mean_assd_mm = (rep.assd_mm[0] + rep.assd_mm[1] + rep.assd_mm[2]) / 3.0;
    return rep;
}

std::string EvalReport::table() const {
    // macro average over the three structure means
    char buf[512];
    std::string out;
    out += "metric        MYO       LV       RV  Average\n";
    std::snprintf(buf, sizeof(buf), "Dice(%%)  %8.2f %8.2f %8.2f %8.2f\n", dice_pct[0],
                  dice_pct[1], dice_pct[2], mean_dice_pct);
    out += buf;
    std::snprintf(buf, sizeof(buf), "ASSD(mm) %8.2f %8.2f %8.2f %8.2f\n", assd_mm[0], assd_mm[1],
                  assd_mm[2], mean_assd_mm);
    out += buf;
    std::snprintf(buf, sizeof(buf), "slices=%zu degenerate=%zu\n", sample_count,
                  degenerate_count);
    out += buf;
    return out;
}

std::string EvalReport::to_json() const {
    json j;
    j["classes"] = {"MYO", "LV", "RV"};
    j["dice_pct"] = dice_pct;
    j["assd_mm"] = assd_mm;
    j["mean_dice_pct"] = mean_dice_pct;
    j["mean_assd_mm"] = mean_assd_mm;
    j["sample_count"] = sample_count;
    j["degenerate_count"] = degenerate_count;
    j["average"] = "macro over class means";
    return j.dump(2);
}

EvalReport EvalReport::from_json(const std::string& text) {
    json j = json::parse(text);
    EvalReport rep;
    rep.dice_pct = j.at("dice_pct").get<std::array<double, 3>>();
    rep.assd_mm = j.at("assd_mm").get<std::array<double, 3>>();
    rep.mean_dice_pct = j.at("mean_dice_pct").get<double>();
    rep.mean_assd_mm = j.at("mean_assd_mm").get<double>();
    rep.sample_count = j.at("sample_count").get<std::size_t>();
    rep.degenerate_count = j.at("degenerate_count").get<std::size_t>();
    return rep;
}

}  // namespace sgdr
