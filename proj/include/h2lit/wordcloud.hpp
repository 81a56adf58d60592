#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <fmt/format.h>

namespace h2lit::text {

struct TermStats {
    std::string term;
    std::int64_t count = 0;
    int font_size = 1;

    friend bool operator==(const TermStats&, const TermStats&) = default;
};

using TermCounts = std::map<std::string, std::int64_t>;

/// Display font size for one count:
///   s = ceil(f_max * (t - t_min) / (t_max - t_min))  when t > t_min, else 1.
/// When t_max == t_min every term gets f_max.
inline int font_size(std::int64_t count, int f_max, std::int64_t t_min, std::int64_t t_max) {
    if (t_max == t_min) return f_max;
    if (count <= t_min) return 1;
    const std::int64_t num = static_cast<std::int64_t>(f_max) * (count - t_min);
    const std::int64_t den = t_max - t_min;
    return static_cast<int>((num + den - 1) / den);
}

/// Font sizes for every term, sorted by count descending then term ascending.
inline std::vector<TermStats> word_cloud(const TermCounts& counts, int f_max, std::int64_t t_min) {
    if (f_max < 1) throw std::invalid_argument(fmt::format("f_max must be >= 1, got {}", f_max));
    if (counts.empty()) return {};

    std::int64_t t_max = 0;
    for (const auto& [term, c] : counts) {
        if (c < 0) throw std::invalid_argument(fmt::format("negative count for term '{}'", term));
        t_max = std::max(t_max, c);
    }
    if (t_min > t_max) {
        throw std::invalid_argument(fmt::format("t_min {} exceeds maximum count {}", t_min, t_max));
    }

    std::vector<TermStats> out;
    out.reserve(counts.size());
    for (const auto& [term, c] : counts) {
        out.push_back({term, c, font_size(c, f_max, t_min, t_max)});
    }
    std::stable_sort(out.begin(), out.end(), [](const TermStats& a, const TermStats& b) { return a.count > b.count; });
    return out;
}

/// Same as above with t_min taken as the smallest count.
inline std::vector<TermStats> word_cloud(const TermCounts& counts, int f_max) {
    if (counts.empty()) return {};
    const auto t_min =
        std::min_element(counts.begin(), counts.end(), [](const auto& a, const auto& b) { return a.second < b.second; })
            ->second;
    return word_cloud(counts, f_max, t_min);
}

} // namespace h2lit::text
