#include "ksdyn/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "ksdyn/error.hpp"

namespace ksdyn {

KeyRankIndex::KeyRankIndex(std::vector<std::string> sorted_unique_labels)
    : labels_(std::move(sorted_unique_labels)) {
    for (std::size_t i = 0; i < labels_.size(); ++i)
        ranks_.emplace(labels_[i], static_cast<std::uint16_t>(i));
    if (labels_.size() > 0xFFFF)
        throw Error(ErrorCode::InvalidArgument, "too many distinct key labels");
}

std::uint16_t KeyRankIndex::rank_of(const std::string& label) {
    const auto it = ranks_.find(label);
    if (it != ranks_.end()) return it->second;
    if (labels_.size() >= 0xFFFF)
        throw Error(ErrorCode::InvalidArgument, "too many distinct key labels");
    const auto rank = static_cast<std::uint16_t>(labels_.size());
    labels_.push_back(label);
    ranks_.emplace(label, rank);
    return rank;
}

std::optional<std::uint16_t> KeyRankIndex::find_rank(
    const std::string& label) const {
    const auto it = ranks_.find(label);
    if (it == ranks_.end()) return std::nullopt;
    return it->second;
}

const std::string& KeyRankIndex::label_of(std::uint16_t rank) const {
    return labels_.at(rank);
}

std::vector<std::string> collect_key_labels(const FeatureTable& table) {
    std::set<std::string> labels;
    for (const auto& row : table.rows) {
        const auto [first, second] = split_digraph_label(row.key);
        labels.insert(first);
        labels.insert(second);
    }
    return {labels.begin(), labels.end()};
}

std::uint64_t pack_tuple(std::span<const std::uint16_t> ranks) {
    std::uint64_t packed = 0;
    for (std::size_t i = 0; i < ranks.size(); ++i)
        packed |= static_cast<std::uint64_t>(ranks[i]) << (16 * (3 - i));
    return packed;
}

const NGraphStat* NGraphTable::find(std::uint64_t packed) const {
    const auto it = std::lower_bound(
        entries.begin(), entries.end(), packed,
        [](const auto& entry, std::uint64_t key) { return entry.first < key; });
    if (it == entries.end() || it->first != packed) return nullptr;
    return &it->second;
}

namespace {

// lookup(label) -> optional rank; a failed lookup drops the tuple.
template <typename Lookup>
NGraphTable extract_ngraphs_impl(std::span<const FeatureRow> rows, int n,
                                 Lookup&& lookup) {
    if (n < 2 || n > 4)
        throw Error(ErrorCode::InvalidArgument, "n-graph order must be 2..4");
    NGraphTable table;
    table.n = n;
    const auto window = static_cast<std::size_t>(n - 1);  // rows per tuple

    std::unordered_map<std::uint64_t, NGraphStat> acc;
    std::vector<std::uint16_t> ranks;
    for (std::size_t i = 0; i + window <= rows.size(); ++i) {
        bool chained = true;
        double duration = rows[i].down_down;
        for (std::size_t j = 1; j < window; ++j) {
            const auto prev = split_digraph_label(rows[i + j - 1].key);
            const auto curr = split_digraph_label(rows[i + j].key);
            if (prev.second != curr.first) {
                chained = false;
                break;
            }
            duration += rows[i + j].down_down;
        }
        if (!chained) continue;
        ranks.clear();
        bool known = true;
        const auto first_pair = split_digraph_label(rows[i].key);
        for (const std::string* label : {&first_pair.first, &first_pair.second}) {
            if (const auto rank = lookup(*label)) {
                ranks.push_back(*rank);
            } else {
                known = false;
                break;
            }
        }
        for (std::size_t j = 1; known && j < window; ++j) {
            const auto label = split_digraph_label(rows[i + j].key).second;
            if (const auto rank = lookup(label)) {
                ranks.push_back(*rank);
            } else {
                known = false;
            }
        }
        if (!known) continue;
        auto& stat = acc[pack_tuple(ranks)];
        stat.count += 1;
        stat.mean_duration +=
            (duration - stat.mean_duration) / static_cast<double>(stat.count);
    }
    if (acc.empty())
        throw Error(ErrorCode::TooShort,
                    "no " + std::to_string(n) + "-graphs in sample");
    table.entries.assign(acc.begin(), acc.end());
    std::sort(table.entries.begin(), table.entries.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    return table;
}

}  // namespace

NGraphTable extract_ngraphs(std::span<const FeatureRow> rows, int n,
                            KeyRankIndex& index) {
    return extract_ngraphs_impl(
        rows, n, [&index](const std::string& label) {
            return std::optional<std::uint16_t>(index.rank_of(label));
        });
}

const NGraphTable& GpSampleTables::table(int n) const {
    switch (n) {
        case 2: return t2;
        case 3: return t3;
        default: return t4;
    }
}

namespace {

template <typename Extract>
GpSampleTables build_tables_impl(std::span<const FeatureRow> rows,
                                 Extract&& extract) {
    GpSampleTables tables;
    tables.source_rows = rows.size();
    for (int n = 2; n <= 4; ++n) {
        NGraphTable table;
        table.n = n;
        try {
            table = extract(rows, n);
        } catch (const Error& error) {
            if (error.code() != ErrorCode::TooShort) throw;
        }
        (n == 2 ? tables.t2 : n == 3 ? tables.t3 : tables.t4) =
            std::move(table);
    }
    return tables;
}

}  // namespace

GpSampleTables build_sample_tables(std::span<const FeatureRow> rows,
                                   KeyRankIndex& index) {
    return build_tables_impl(
        rows, [&index](std::span<const FeatureRow> r, int n) {
            return extract_ngraphs(r, n, index);
        });
}

GpSampleTables build_sample_tables_frozen(std::span<const FeatureRow> rows,
                                          const KeyRankIndex& index) {
    return build_tables_impl(
        rows, [&index](std::span<const FeatureRow> r, int n) {
            return extract_ngraphs_impl(
                r, n, [&index](const std::string& label) {
                    return index.find_rank(label);
                });
        });
}

double degree_of_disorder(std::span<const std::uint64_t> order1,
                          std::span<const std::uint64_t> order2) {
    if (order1.empty())
        throw Error(ErrorCode::EmptyShared, "disorder of an empty list");
    if (order1.size() != order2.size())
        throw Error(ErrorCode::InvalidArgument,
                    "orderings must cover the same set");
    const std::size_t v = order1.size();
    if (v == 1) return 0.0;
    std::unordered_map<std::uint64_t, std::size_t> pos2;
    pos2.reserve(v);
    for (std::size_t i = 0; i < v; ++i) pos2.emplace(order2[i], i);
    double sum = 0.0;
    for (std::size_t i = 0; i < v; ++i) {
        const auto it = pos2.find(order1[i]);
        if (it == pos2.end())
            throw Error(ErrorCode::InvalidArgument,
                        "orderings must cover the same set");
        sum += std::abs(static_cast<double>(i) -
                        static_cast<double>(it->second));
    }
    const double vd = static_cast<double>(v);
    const double max_disorder =
        (v % 2 == 0) ? vd * vd / 2.0 : (vd * vd - 1.0) / 2.0;
    return sum / max_disorder;
}

namespace {

struct SharedGraph {
    std::uint64_t packed = 0;
    double d1 = 0.0;
    double d2 = 0.0;
};

std::vector<SharedGraph> shared_graphs(const NGraphTable& p,
                                       const NGraphTable& q) {
    std::vector<SharedGraph> shared;
    auto ip = p.entries.begin();
    auto iq = q.entries.begin();
    while (ip != p.entries.end() && iq != q.entries.end()) {
        if (ip->first < iq->first) {
            ++ip;
        } else if (iq->first < ip->first) {
            ++iq;
        } else {
            shared.push_back(
                {ip->first, ip->second.mean_duration, iq->second.mean_duration});
            ++ip;
            ++iq;
        }
    }
    return shared;
}

}  // namespace

namespace {

double disorder_of_shared(const std::vector<SharedGraph>& shared) {
    const std::size_t v = shared.size();
    if (v == 1) return 0.0;
    std::vector<std::size_t> by1(v), by2(v);
    for (std::size_t i = 0; i < v; ++i) by1[i] = by2[i] = i;
    std::sort(by1.begin(), by1.end(), [&](std::size_t a, std::size_t b) {
        if (shared[a].d1 != shared[b].d1) return shared[a].d1 < shared[b].d1;
        return shared[a].packed < shared[b].packed;
    });
    std::sort(by2.begin(), by2.end(), [&](std::size_t a, std::size_t b) {
        if (shared[a].d2 != shared[b].d2) return shared[a].d2 < shared[b].d2;
        return shared[a].packed < shared[b].packed;
    });
    std::vector<std::size_t> rank2(v);
    for (std::size_t j = 0; j < v; ++j) rank2[by2[j]] = j;

    double sum = 0.0;
    for (std::size_t j = 0; j < v; ++j)
        sum += std::abs(static_cast<double>(j) -
                        static_cast<double>(rank2[by1[j]]));
    const double vd = static_cast<double>(v);
    const double max_disorder =
        (v % 2 == 0) ? vd * vd / 2.0 : (vd * vd - 1.0) / 2.0;
    return sum / max_disorder;
}

double similarity_of_shared(const std::vector<SharedGraph>& shared, double t) {
    std::size_t similar = 0;
    for (const auto& g : shared) {
        const double hi = std::max(g.d1, g.d2);
        const double lo = std::min(g.d1, g.d2);
        if (hi / lo <= t) ++similar;
    }
    return 1.0 - static_cast<double>(similar) /
                     static_cast<double>(shared.size());
}

}  // namespace

DistanceResult r_distance(const NGraphTable& p, const NGraphTable& q) {
    const auto shared = shared_graphs(p, q);
    if (shared.empty()) return {1.0, true};
    return {disorder_of_shared(shared), false};
}

DistanceResult a_distance(const NGraphTable& p, const NGraphTable& q,
                          double t) {
    if (!(t > 1.0))
        throw Error(ErrorCode::InvalidArgument,
                    "similarity threshold t must be > 1");
    const auto shared = shared_graphs(p, q);
    if (shared.empty()) return {1.0, true};
    return {similarity_of_shared(shared, t), false};
}

PairTerms compute_pair_terms(const GpSampleTables& p, const GpSampleTables& q,
                             double t) {
    if (!(t > 1.0))
        throw Error(ErrorCode::InvalidArgument,
                    "similarity threshold t must be > 1");
    PairTerms terms;
    for (int n = 2; n <= 4; ++n) {
        const auto shared = shared_graphs(p.table(n), q.table(n));
        const int i = n - 2;
        if (shared.empty()) {
            terms.r[i] = 1.0;
            terms.a[i] = 1.0;
            terms.low_overlap[i] = true;
            continue;
        }
        terms.r[i] = disorder_of_shared(shared);
        terms.a[i] = similarity_of_shared(shared, t);
    }
    return terms;
}

double combined_from_terms(const PairTerms& terms, const MeasureSpec& spec) {
    double sum = 0.0;
    std::size_t count = 0;
    for (int n : spec.r_orders) {
        sum += terms.r[n - 2];
        ++count;
    }
    for (int n : spec.a_orders) {
        sum += terms.a[n - 2];
        ++count;
    }
    return sum / static_cast<double>(count);
}

std::string MeasureSpec::name() const {
    std::string out;
    if (!r_orders.empty()) {
        out += 'R';
        for (int n : r_orders) out += static_cast<char>('0' + n);
    }
    if (!a_orders.empty()) {
        out += 'A';
        for (int n : a_orders) out += static_cast<char>('0' + n);
    }
    return out;
}

MeasureSpec MeasureSpec::parse(std::string_view name, double t) {
    MeasureSpec spec;
    spec.t = t;
    std::vector<int>* current = nullptr;
    for (char c : name) {
        if (c == 'R' || c == 'r') {
            current = &spec.r_orders;
        } else if (c == 'A' || c == 'a') {
            current = &spec.a_orders;
        } else if (c >= '2' && c <= '4' && current) {
            current->push_back(c - '0');
        } else {
            throw Error(ErrorCode::InvalidArgument,
                        "bad measure name: " + std::string(name));
        }
    }
    for (auto* orders : {&spec.r_orders, &spec.a_orders}) {
        std::sort(orders->begin(), orders->end());
        orders->erase(std::unique(orders->begin(), orders->end()),
                      orders->end());
    }
    if (spec.r_orders.empty() && spec.a_orders.empty())
        throw Error(ErrorCode::InvalidArgument,
                    "measure needs at least one R or A order");
    return spec;
}

const std::vector<std::string>& standard_measure_names() {
    static const std::vector<std::string> names = {
        "A2", "A3", "A23", "R2", "R23", "R2A2", "R2A234", "R23A23", "R234A23"};
    return names;
}

DistanceResult combined_distance(const GpSampleTables& p,
                                 const GpSampleTables& q,
                                 const MeasureSpec& spec) {
    double sum = 0.0;
    std::size_t terms = 0;
    bool low_overlap = false;
    for (int n : spec.r_orders) {
        const auto r = r_distance(p.table(n), q.table(n));
        sum += r.value;
        low_overlap = low_overlap || r.low_overlap;
        ++terms;
    }
    for (int n : spec.a_orders) {
        const auto a = a_distance(p.table(n), q.table(n), spec.t);
        sum += a.value;
        low_overlap = low_overlap || a.low_overlap;
        ++terms;
    }
    return {sum / static_cast<double>(terms), low_overlap};
}

GpProfile build_gp_profile(const std::string& subject,
                           std::span<const Sample> samples,
                           std::span<const MeasureSpec> specs,
                           KeyRankIndex& index) {
    if (samples.size() < 2)
        throw Error(ErrorCode::InsufficientData,
                    "profile needs at least 2 samples, got " +
                        std::to_string(samples.size()));
    GpProfile profile;
    profile.subject = subject;
    profile.samples.reserve(samples.size());
    for (const auto& sample : samples)
        profile.samples.push_back(build_sample_tables(sample.rows, index));

    for (const auto& spec : specs) {
        double sum = 0.0;
        std::size_t pairs = 0;
        for (std::size_t i = 0; i < profile.samples.size(); ++i)
            for (std::size_t j = i + 1; j < profile.samples.size(); ++j) {
                sum += combined_distance(profile.samples[i],
                                         profile.samples[j], spec)
                           .value;
                ++pairs;
            }
        profile.mean_self_distance[spec.name()] =
            sum / static_cast<double>(pairs);
    }
    return profile;
}

double mean_distance(const GpSampleTables& probe, const GpProfile& profile,
                     const MeasureSpec& spec) {
    double sum = 0.0;
    for (const auto& sample : profile.samples)
        sum += combined_distance(probe, sample, spec).value;
    return sum / static_cast<double>(profile.samples.size());
}

ClassifyResult classify(const GpSampleTables& probe,
                        std::span<const GpProfile> gallery,
                        const MeasureSpec& spec) {
    if (gallery.empty())
        throw Error(ErrorCode::EmptyGallery, "no enrolled users");
    ClassifyResult result;
    result.md_best = std::numeric_limits<double>::infinity();
    result.runner_up_md = std::numeric_limits<double>::infinity();
    for (const auto& profile : gallery) {
        const double md = mean_distance(probe, profile, spec);
        const bool better =
            md < result.md_best ||
            (md == result.md_best && profile.subject < result.best_subject);
        if (better) {
            result.runner_up_md = result.md_best;
            result.md_best = md;
            result.best_subject = profile.subject;
        } else if (md < result.runner_up_md) {
            result.runner_up_md = md;
        }
    }
    return result;
}

double profile_self_distance(const GpProfile& profile,
                             const MeasureSpec& spec) {
    const auto it = profile.mean_self_distance.find(spec.name());
    if (it != profile.mean_self_distance.end()) return it->second;
    double sum = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < profile.samples.size(); ++i)
        for (std::size_t j = i + 1; j < profile.samples.size(); ++j) {
            sum += combined_distance(profile.samples[i], profile.samples[j],
                                     spec)
                       .value;
            ++pairs;
        }
    if (pairs == 0)
        throw Error(ErrorCode::InsufficientData,
                    "self distance needs at least 2 samples");
    return sum / static_cast<double>(pairs);
}

AuthResult authenticate(const GpSampleTables& probe, const std::string& claimed,
                        std::span<const GpProfile> gallery,
                        const MeasureSpec& spec, double k,
                        double rescue_factor) {
    const GpProfile* claimed_profile = nullptr;
    for (const auto& profile : gallery)
        if (profile.subject == claimed) claimed_profile = &profile;
    if (!claimed_profile)
        throw Error(ErrorCode::UnknownSubject, "unknown subject: " + claimed);

    const auto ranking = classify(probe, gallery, spec);
    AuthResult result;
    result.best_subject = ranking.best_subject;
    result.md_best = ranking.md_best;
    result.md_claimed = mean_distance(probe, *claimed_profile, spec);
    result.m_self = profile_self_distance(*claimed_profile, spec);

    const bool under_threshold = result.md_claimed < k * result.m_self;
    if (ranking.best_subject == claimed) {
        result.accepted = under_threshold;
        result.reason =
            under_threshold ? RejectReason::None : RejectReason::AboveSelfThreshold;
        return result;
    }
    // Near-miss rescue: claimed lost the ranking but sits close to the
    // winner and under its own threshold.
    if (under_threshold &&
        result.md_claimed < rescue_factor * ranking.md_best) {
        result.accepted = true;
        return result;
    }
    result.accepted = false;
    result.reason = RejectReason::NotClosest;
    return result;
}

double gp_trial_score(const GpSampleTables& probe, const std::string& claimed,
                      std::span<const GpProfile> gallery,
                      const MeasureSpec& spec, double rescue_factor) {
    const GpProfile* claimed_profile = nullptr;
    for (const auto& profile : gallery)
        if (profile.subject == claimed) claimed_profile = &profile;
    if (!claimed_profile)
        throw Error(ErrorCode::UnknownSubject, "unknown subject: " + claimed);

    const auto ranking = classify(probe, gallery, spec);
    const double md_claimed = mean_distance(probe, *claimed_profile, spec);
    const double m_self = profile_self_distance(*claimed_profile, spec);

    const bool nearness_ok = ranking.best_subject == claimed ||
                             md_claimed < rescue_factor * ranking.md_best;
    double k_min;
    if (!nearness_ok || m_self <= 0.0) {
        k_min = std::numeric_limits<double>::infinity();
    } else {
        k_min = md_claimed / m_self;
    }
    const double score = 1.0 - k_min / 3.0;
    return std::clamp(score, 0.0, 1.0);
}

}  // namespace ksdyn
