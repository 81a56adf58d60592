#pragma once

// LDA topic models fitted by collapsed Gibbs sampling, perplexity curves and
// elbow selection of the topic count.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "h2lit/corpus.hpp"
#include "h2lit/error.hpp"

namespace h2lit::topics {

using Bag = std::vector<std::string>;

/// Dirichlet density Gamma(sum a) / prod Gamma(a_i) * prod theta_i^(a_i - 1).
inline double dirichlet_density(std::span<const double> theta, std::span<const double> alpha) {
    if (theta.size() != alpha.size() || theta.empty()) {
        throw DomainError(fmt::format("theta has {} entries, alpha {}", theta.size(), alpha.size()));
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < theta.size(); ++i) {
        if (!(alpha[i] > 0.0) || !std::isfinite(alpha[i])) throw DomainError(fmt::format("alpha[{}] must be > 0", i));
        if (!(theta[i] >= 0.0)) throw DomainError(fmt::format("theta[{}] is negative", i));
        if (theta[i] == 0.0 && alpha[i] < 1.0) {
            throw DomainError(fmt::format("density is infinite: theta[{}] = 0 with alpha < 1", i));
        }
        sum += theta[i];
    }
    if (std::abs(sum - 1.0) > 1e-12) throw DomainError(fmt::format("theta is off the simplex (sum {})", sum));

    const double alpha_sum = std::accumulate(alpha.begin(), alpha.end(), 0.0);
    if (alpha_sum < 170.0) {
        double norm = std::tgamma(alpha_sum);
        double power = 1.0;
        for (std::size_t i = 0; i < alpha.size(); ++i) {
            norm /= std::tgamma(alpha[i]);
            power *= std::pow(theta[i], alpha[i] - 1.0);
        }
        return norm * power;
    }
    double log_density = std::lgamma(alpha_sum);
    for (std::size_t i = 0; i < alpha.size(); ++i) {
        log_density -= std::lgamma(alpha[i]);
        if (alpha[i] != 1.0) {
            if (theta[i] == 0.0) return 0.0;
            log_density += (alpha[i] - 1.0) * std::log(theta[i]);
        }
    }
    return std::exp(log_density);
}

struct LdaParams {
    std::size_t topics = 2;
    std::vector<double> alpha; // empty -> symmetric 50 / K
    double beta = 0.01;
    std::size_t iterations = 500;
    std::uint64_t seed = 1;
};

struct TopicModel {
    std::size_t topics = 0;
    std::vector<double> alpha;
    double beta = 0.0;
    std::vector<std::string> vocab;                  // sorted
    std::vector<std::vector<double>> phi;            // K x V
    std::vector<std::vector<double>> theta;          // D x K
    std::vector<std::vector<std::uint32_t>> assign;  // final topic of every token
    std::uint64_t seed = 0;

    std::size_t term_index(const std::string& term) const {
        const auto it = std::lower_bound(vocab.begin(), vocab.end(), term);
        if (it == vocab.end() || *it != term) return std::numeric_limits<std::size_t>::max();
        return static_cast<std::size_t>(it - vocab.begin());
    }

    /// Highest-probability terms of one topic, ties by term.
    std::vector<std::pair<std::string, double>> top_words(std::size_t topic, std::size_t n = 10) const {
        std::vector<std::size_t> idx(vocab.size());
        std::iota(idx.begin(), idx.end(), 0);
        const auto& row = phi.at(topic);
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return row[a] > row[b]; });
        std::vector<std::pair<std::string, double>> out;
        for (std::size_t i = 0; i < std::min(n, idx.size()); ++i) out.emplace_back(vocab[idx[i]], row[idx[i]]);
        return out;
    }
};

namespace detail {

// 53 random bits mapped to [0, 1); independent of the standard library's distributions.
inline double unit_draw(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

} // namespace detail

/// Collapsed Gibbs sampling for `iterations` sweeps; phi and theta are the
/// smoothed point estimates of the final state. Deterministic for a given seed.
inline TopicModel fit_lda(const std::vector<Bag>& bags, const LdaParams& params) {
    if (bags.empty()) throw DomainError("cannot fit LDA on an empty corpus");
    if (params.topics < 1) throw DomainError("topic count must be >= 1");
    if (!(params.beta > 0.0)) throw DomainError("beta must be > 0");
    for (std::size_t d = 0; d < bags.size(); ++d) {
        if (bags[d].empty()) throw DomainError(fmt::format("bag {} is empty", d));
    }

    const std::size_t K = params.topics;
    TopicModel model;
    model.topics = K;
    model.beta = params.beta;
    model.seed = params.seed;
    model.alpha = params.alpha.empty() ? std::vector<double>(K, 50.0 / static_cast<double>(K)) : params.alpha;
    if (model.alpha.size() != K) throw DomainError(fmt::format("alpha has {} entries for {} topics", model.alpha.size(), K));
    for (double a : model.alpha) {
        if (!(a > 0.0)) throw DomainError("alpha entries must be > 0");
    }

    std::map<std::string, std::uint32_t> ids;
    for (const auto& bag : bags) {
        for (const auto& w : bag) ids.emplace(w, 0);
    }
    model.vocab.reserve(ids.size());
    for (auto& [w, id] : ids) {
        id = static_cast<std::uint32_t>(model.vocab.size());
        model.vocab.push_back(w);
    }
    const std::size_t V = model.vocab.size();
    const std::size_t D = bags.size();
    const double vbeta = static_cast<double>(V) * params.beta;
    const double alpha_sum = std::accumulate(model.alpha.begin(), model.alpha.end(), 0.0);

    std::vector<std::vector<std::uint32_t>> docs(D);
    for (std::size_t d = 0; d < D; ++d) {
        for (const auto& w : bags[d]) docs[d].push_back(ids.at(w));
    }

    std::vector<std::uint32_t> n_dk(D * K, 0), n_kw(K * V, 0), n_k(K, 0);
    std::mt19937_64 rng(params.seed);
    model.assign.resize(D);
    for (std::size_t d = 0; d < D; ++d) {
        model.assign[d].resize(docs[d].size());
        for (std::size_t i = 0; i < docs[d].size(); ++i) {
            const auto k = static_cast<std::uint32_t>(rng() % K);
            model.assign[d][i] = k;
            ++n_dk[d * K + k];
            ++n_kw[k * V + docs[d][i]];
            ++n_k[k];
        }
    }

    std::vector<double> cumulative(K);
    for (std::size_t sweep = 0; sweep < params.iterations; ++sweep) {
        for (std::size_t d = 0; d < D; ++d) {
            for (std::size_t i = 0; i < docs[d].size(); ++i) {
                const auto w = docs[d][i];
                auto k = model.assign[d][i];
                --n_dk[d * K + k];
                --n_kw[k * V + w];
                --n_k[k];

                double total = 0.0;
                for (std::size_t t = 0; t < K; ++t) {
                    total += (n_dk[d * K + t] + model.alpha[t]) * (n_kw[t * V + w] + params.beta) / (n_k[t] + vbeta);
                    cumulative[t] = total;
                }
                const double u = detail::unit_draw(rng) * total;
                k = static_cast<std::uint32_t>(std::upper_bound(cumulative.begin(), cumulative.end(), u) -
                                               cumulative.begin());
                if (k >= K) k = static_cast<std::uint32_t>(K - 1);

                model.assign[d][i] = k;
                ++n_dk[d * K + k];
                ++n_kw[k * V + w];
                ++n_k[k];
            }
        }
    }

    model.phi.assign(K, std::vector<double>(V));
    for (std::size_t k = 0; k < K; ++k) {
        for (std::size_t w = 0; w < V; ++w) model.phi[k][w] = (n_kw[k * V + w] + params.beta) / (n_k[k] + vbeta);
    }
    model.theta.assign(D, std::vector<double>(K));
    for (std::size_t d = 0; d < D; ++d) {
        const double len = static_cast<double>(docs[d].size());
        for (std::size_t k = 0; k < K; ++k) model.theta[d][k] = (n_dk[d * K + k] + model.alpha[k]) / (len + alpha_sum);
    }
    return model;
}

/// exp(-(sum over tokens of log sum_k theta_dk phi_kw) / token count) on the
/// bags the model was fitted on.
inline double perplexity(const TopicModel& model, const std::vector<Bag>& bags) {
    if (bags.size() != model.theta.size()) {
        throw DomainError(fmt::format("model has {} documents, corpus view {}", model.theta.size(), bags.size()));
    }
    double log_likelihood = 0.0;
    std::size_t tokens = 0;
    for (std::size_t d = 0; d < bags.size(); ++d) {
        for (const auto& term : bags[d]) {
            const auto w = model.term_index(term);
            if (w == std::numeric_limits<std::size_t>::max()) {
                throw DomainError(fmt::format("term '{}' is not in the model vocabulary", term));
            }
            double p = 0.0;
            for (std::size_t k = 0; k < model.topics; ++k) p += model.theta[d][k] * model.phi[k][w];
            log_likelihood += std::log(p);
            ++tokens;
        }
    }
    if (tokens == 0) throw DomainError("perplexity of an empty corpus view");
    return std::exp(-log_likelihood / static_cast<double>(tokens));
}

enum class Granularity { Document, Page };

inline const char* to_string(Granularity g) { return g == Granularity::Document ? "doc" : "page"; }

struct PerplexityCurve {
    Granularity granularity = Granularity::Document;
    std::vector<std::pair<std::size_t, double>> points; // (K, perplexity)
};

/// The K with the largest discrete curvature (P[K-1] - P[K]) - (P[K] - P[K+1]),
/// smallest K on ties.
inline std::size_t elbow_k(const PerplexityCurve& curve) {
    const auto& p = curve.points;
    if (p.size() < 3) throw DomainError(fmt::format("elbow needs at least 3 points, got {}", p.size()));
    for (std::size_t i = 1; i < p.size(); ++i) {
        if (p[i].first <= p[i - 1].first) throw DomainError("curve K values must be strictly increasing");
    }
    std::size_t best = p[1].first;
    double best_curv = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i + 1 < p.size(); ++i) {
        const double curv = (p[i - 1].second - p[i].second) - (p[i].second - p[i + 1].second);
        if (curv > best_curv) {
            best_curv = curv;
            best = p[i].first;
        }
    }
    return best;
}

struct PageRef {
    std::string doc_id;
    int page_no = 1;
};

/// Document bags concatenate their pages' non-stopword normalized tokens;
/// page bags are per page. Empty bags are skipped and reported.
struct GranularityViews {
    std::vector<Bag> doc_bags;
    std::vector<std::string> doc_ids;
    std::vector<Bag> page_bags;
    std::vector<PageRef> pages;
    std::vector<std::string> warnings;

    const std::vector<Bag>& bags(Granularity g) const { return g == Granularity::Document ? doc_bags : page_bags; }
};

inline GranularityViews granularity_views(const corpus::Corpus& docs) {
    GranularityViews v;
    for (const auto& doc : docs) {
        Bag doc_bag;
        for (const auto& page : doc.pages) {
            Bag page_bag;
            for (const auto& t : page.tokens) {
                if (!t.is_stopword) page_bag.push_back(t.normalized);
            }
            if (page_bag.empty()) {
                v.warnings.push_back(fmt::format("{} page {} has no content terms, skipped", doc.id, page.page_no));
                continue;
            }
            doc_bag.insert(doc_bag.end(), page_bag.begin(), page_bag.end());
            v.page_bags.push_back(std::move(page_bag));
            v.pages.push_back({doc.id, page.page_no});
        }
        if (doc_bag.empty()) {
            v.warnings.push_back(fmt::format("{} has no content terms, skipped", doc.id));
            continue;
        }
        v.doc_bags.push_back(std::move(doc_bag));
        v.doc_ids.push_back(doc.id);
    }
    return v;
}

struct TopicSweep {
    PerplexityCurve curve;
    std::vector<TopicModel> models; // aligned with curve.points
    std::size_t elbow = 0;          // 0 when the curve has fewer than 3 points

    const TopicModel* model_for(std::size_t k) const {
        for (std::size_t i = 0; i < models.size(); ++i) {
            if (curve.points[i].first == k) return &models[i];
        }
        return nullptr;
    }
};

/// Fits one model per K in [k_min, k_max]. `base.alpha` must be empty
/// (symmetric 50/K) or a single value used for every topic.
inline TopicSweep perplexity_sweep(const std::vector<Bag>& bags, Granularity g, std::size_t k_min,
                                   std::size_t k_max, const LdaParams& base) {
    if (k_min < 1 || k_max < k_min) throw DomainError(fmt::format("bad K range {}..{}", k_min, k_max));
    if (base.alpha.size() > 1) throw DomainError("sweep alpha must be empty or a single symmetric value");
    TopicSweep sweep;
    sweep.curve.granularity = g;
    for (std::size_t k = k_min; k <= k_max; ++k) {
        LdaParams p = base;
        p.topics = k;
        p.alpha = base.alpha.empty() ? std::vector<double>{} : std::vector<double>(k, base.alpha.front());
        auto model = fit_lda(bags, p);
        sweep.curve.points.emplace_back(k, perplexity(model, bags));
        sweep.models.push_back(std::move(model));
    }
    if (sweep.curve.points.size() >= 3) sweep.elbow = elbow_k(sweep.curve);
    return sweep;
}

} // namespace h2lit::topics
