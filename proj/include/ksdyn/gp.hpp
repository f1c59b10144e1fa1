#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ksdyn/types.hpp"

namespace ksdyn {

/// Maps key labels to dense ranks so an n-graph tuple packs into one
/// uint64 (16 bits per key, first key most significant). Base labels get
/// lexicographic ranks; labels first seen later append in arrival order,
/// which keeps packing injective. Growth is not thread-safe: build every
/// table before scoring in parallel.
class KeyRankIndex {
  public:
    KeyRankIndex() = default;
    explicit KeyRankIndex(std::vector<std::string> sorted_unique_labels);

    std::uint16_t rank_of(const std::string& label);  // inserts when novel
    std::optional<std::uint16_t> find_rank(const std::string& label) const;
    const std::string& label_of(std::uint16_t rank) const;
    std::size_t size() const { return labels_.size(); }

  private:
    std::unordered_map<std::string, std::uint16_t> ranks_;
    std::vector<std::string> labels_;
};

/// Distinct key labels appearing in the table's digraphs, sorted.
std::vector<std::string> collect_key_labels(const FeatureTable& table);

std::uint64_t pack_tuple(std::span<const std::uint16_t> ranks);

struct NGraphStat {
    double mean_duration = 0.0;  // seconds, averaged over repeats
    std::uint32_t count = 0;
};

struct NGraphTable {
    int n = 2;
    // Sorted by packed tuple; packed order equals lexicographic key order
    // for tuples drawn from the index's base labels.
    std::vector<std::pair<std::uint64_t, NGraphStat>> entries;

    const NGraphStat* find(std::uint64_t packed) const;
    bool empty() const { return entries.empty(); }
};

/// n-graph duration = press of first key to press of the n-th (sum of the
/// n-1 constituent DD times). Consecutive rows chain iff the second key of
/// one is the first key of the next. Repeats average.
NGraphTable extract_ngraphs(std::span<const FeatureRow> rows, int n,
                            KeyRankIndex& index);

struct GpSampleTables {
    NGraphTable t2, t3, t4;
    std::size_t source_rows = 0;

    const NGraphTable& table(int n) const;
};

/// Tables for n = 2,3,4; an order with no formable tuple yields an empty
/// table rather than an error.
GpSampleTables build_sample_tables(std::span<const FeatureRow> rows,
                                   KeyRankIndex& index);

/// Like build_sample_tables but never grows the index: tuples with a label
/// the index has not seen are dropped (they could match no enrolled tuple
/// anyway). Safe to call concurrently.
GpSampleTables build_sample_tables_frozen(std::span<const FeatureRow> rows,
                                          const KeyRankIndex& index);

/// Normalized displacement sum between two orderings of the same set:
/// sum |pos1 - pos2| / (V^2/2 for even V, (V^2-1)/2 for odd); 0 when V = 1.
double degree_of_disorder(std::span<const std::uint64_t> order1,
                          std::span<const std::uint64_t> order2);

struct DistanceResult {
    double value = 0.0;
    bool low_overlap = false;  // empty shared set forced the max distance
};

/// Disorder of the shared n-graphs ordered by each sample's durations,
/// duration ties broken by tuple order. Empty overlap returns 1.0, flagged.
DistanceResult r_distance(const NGraphTable& p, const NGraphTable& q);

/// 1 - similar/shared where a shared n-graph is similar iff
/// max(d1,d2)/min(d1,d2) <= t. Empty overlap returns 1.0, flagged.
DistanceResult a_distance(const NGraphTable& p, const NGraphTable& q,
                          double t);

struct MeasureSpec {
    std::vector<int> r_orders;  // sorted subsets of {2,3,4}
    std::vector<int> a_orders;
    double t = 1.25;

    std::string name() const;  // e.g. {2,3},{2,3} -> "R23A23"
    static MeasureSpec parse(std::string_view name, double t = 1.25);
};

/// The nine measure names reported by the results table, fixed order.
const std::vector<std::string>& standard_measure_names();

/// Arithmetic mean of one r_distance per order in r_orders and one
/// a_distance per order in a_orders; low-overlap flags propagate.
DistanceResult combined_distance(const GpSampleTables& p,
                                 const GpSampleTables& q,
                                 const MeasureSpec& spec);

/// Every R and A term of a sample pair in one pass, so several measures
/// can be evaluated without re-intersecting the tables. Index 0 holds
/// order 2, index 2 order 4.
struct PairTerms {
    double r[3] = {0.0, 0.0, 0.0};
    double a[3] = {0.0, 0.0, 0.0};
    bool low_overlap[3] = {false, false, false};
};

PairTerms compute_pair_terms(const GpSampleTables& p, const GpSampleTables& q,
                             double t);

double combined_from_terms(const PairTerms& terms, const MeasureSpec& spec);

struct GpProfile {
    std::string subject;
    std::vector<GpSampleTables> samples;
    // Mean combined distance among the user's own enrolled samples,
    // keyed by MeasureSpec::name().
    std::map<std::string, double> mean_self_distance;
};

GpProfile build_gp_profile(const std::string& subject,
                           std::span<const Sample> samples,
                           std::span<const MeasureSpec> specs,
                           KeyRankIndex& index);

/// Mean combined distance from the probe to each enrolled sample.
double mean_distance(const GpSampleTables& probe, const GpProfile& profile,
                     const MeasureSpec& spec);

/// Mean distance among the profile's own samples for the measure, looked
/// up from enrollment when present and recomputed otherwise.
double profile_self_distance(const GpProfile& profile,
                             const MeasureSpec& spec);

struct ClassifyResult {
    std::string best_subject;
    double md_best = 0.0;
    double runner_up_md = 0.0;  // +inf when the gallery has one user
};

/// Nearest profile by mean distance; ties pick the lexicographically
/// smallest subject id.
ClassifyResult classify(const GpSampleTables& probe,
                        std::span<const GpProfile> gallery,
                        const MeasureSpec& spec);

enum class RejectReason { None, NotClosest, AboveSelfThreshold };

struct AuthResult {
    bool accepted = false;
    RejectReason reason = RejectReason::None;
    std::string best_subject;
    double md_claimed = 0.0;
    double md_best = 0.0;
    double m_self = 0.0;
};

/// Accept iff the claimed user is closest and md < k * mean self distance;
/// a near miss (closest elsewhere but md < rescue_factor * best md, and
/// under the self threshold) is rescued.
AuthResult authenticate(const GpSampleTables& probe, const std::string& claimed,
                        std::span<const GpProfile> gallery,
                        const MeasureSpec& spec, double k = 1.0,
                        double rescue_factor = 1.1);

/// Similarity in [0,1] for threshold sweeps: the smallest k at which
/// authenticate would accept, mapped through 1 - k/3 and clamped.
double gp_trial_score(const GpSampleTables& probe, const std::string& claimed,
                      std::span<const GpProfile> gallery,
                      const MeasureSpec& spec, double rescue_factor = 1.1);

inline constexpr std::size_t kGpDefaultBlock = 700;

}  // namespace ksdyn
