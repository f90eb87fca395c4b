#include "wy/wilcoxon.hpp"

#include <algorithm>
#include <map>
#include <mutex>

#include "wy/errors.hpp"
#include "wy/partition_count.hpp"
#include "wy/ranks.hpp"

namespace wy {

RankSumNull::RankSumNull(std::size_t n1, std::size_t n2) : n1_(n1), n2_(n2) {
    if (n1 == 0 || n2 == 0) throw precondition_error("rank-sum groups must be nonempty");
    const std::size_t n = n1 + n2;
    min_sum_ = n1 * (n1 + 1) / 2;
    max_sum_ = n1 * (2 * n - n1 + 1) / 2;

    // Subset-sum DP: ways[k][s] = #{k-subsets of ranks 1..r with sum s},
    // ranks added one at a time, k and s descending so each rank is used once.
    const std::size_t width = max_sum_ + 1;
    std::vector<std::vector<BigInt>> ways(n1 + 1, std::vector<BigInt>(width, 0));
    ways[0][0] = 1;
    for (std::size_t rank = 1; rank <= n; ++rank) {
        const std::size_t k_top = std::min(n1, rank);
        for (std::size_t k = k_top; k >= 1; --k) {
            auto& dst = ways[k];
            const auto& src = ways[k - 1];
            for (std::size_t s = max_sum_; s >= rank; --s) {
                if (!src[s - rank].is_zero()) dst[s] += src[s - rank];
            }
        }
    }

    counts_.assign(ways[n1].begin() + static_cast<std::ptrdiff_t>(min_sum_), ways[n1].end());
    const std::size_t span = counts_.size();
    total_ = 0;
    for (const auto& c : counts_) total_ += c;

    lower_cumulative_.resize(span);
    upper_cumulative_.resize(span);
    BigInt acc = 0;
    for (std::size_t i = 0; i < span; ++i) {
        acc += counts_[i];
        lower_cumulative_[i] = acc;
    }
    acc = 0;
    for (std::size_t i = span; i-- > 0;) {
        acc += counts_[i];
        upper_cumulative_[i] = acc;
    }

    pvalue_by_sum_.resize(span);
    const double total_d = total_.convert_to<double>();
    for (std::size_t i = 0; i < span; ++i) {
        pvalue_by_sum_[i] = two_sided_numerator(min_sum_ + i).convert_to<double>() / total_d;
    }
}

BigInt RankSumNull::two_sided_numerator(std::size_t sum) const {
    const std::size_t i = sum - min_sum_;
    BigInt tail = 2 * std::min(lower_cumulative_[i], upper_cumulative_[i]);
    return std::min(tail, total_);
}

ExactLattice RankSumNull::attainable_pvalues() const {
    std::vector<BigInt> nums;
    nums.reserve(counts_.size());
    for (std::size_t i = 0; i < counts_.size(); ++i) {
        if (counts_[i].is_zero()) continue;
        nums.push_back(two_sided_numerator(min_sum_ + i));
    }
    std::sort(nums.begin(), nums.end());
    nums.erase(std::unique(nums.begin(), nums.end()), nums.end());
    return {std::move(nums), total_};
}

std::shared_ptr<const RankSumNull> rank_sum_null(std::size_t n1, std::size_t n2) {
    static std::mutex cache_mutex;
    static std::map<std::pair<std::size_t, std::size_t>, std::shared_ptr<const RankSumNull>> cache;
    std::lock_guard<std::mutex> lock(cache_mutex);
    auto& slot = cache[{n1, n2}];
    if (!slot) slot = std::make_shared<RankSumNull>(n1, n2);
    return slot;
}

namespace {

std::size_t group1_rank_sum(std::span<const double> group1, std::span<const double> group2) {
    if (group1.empty() || group2.empty()) {
        throw precondition_error("wilcoxon requires two nonempty groups");
    }
    std::vector<double> pooled(group1.begin(), group1.end());
    pooled.insert(pooled.end(), group2.begin(), group2.end());
    const auto ranks = strict_ranks(pooled);
    std::size_t sum = 0;
    for (std::size_t i = 0; i < group1.size(); ++i) sum += ranks[i];
    return sum;
}

} // namespace

double wilcoxon_pvalue(std::span<const double> group1, std::span<const double> group2) {
    const auto null = rank_sum_null(group1.size(), group2.size());
    return null->two_sided_pvalue(group1_rank_sum(group1, group2));
}

Fraction wilcoxon_pvalue_exact(std::span<const double> group1, std::span<const double> group2) {
    const auto null = rank_sum_null(group1.size(), group2.size());
    return {null->two_sided_numerator(group1_rank_sum(group1, group2)), null->total()};
}

ExactLattice wilcoxon_lattice(std::size_t n) {
    if (n < 2 || n % 2 != 0) {
        throw precondition_error("equal-split lattice requires even n >= 2, got " + std::to_string(n));
    }
    const std::size_t half = n / 2;
    const std::size_t steps = n * n / 8 + 1;   // index of the terminal value 1

    BigInt denominator = 1;
    for (std::size_t i = 0; i < half; ++i) {
        denominator = denominator * (n - i) / (i + 1);   // C(n, n/2)
    }

    const auto q = partition_count_table(half, steps > 0 ? steps - 1 : 0);
    std::vector<BigInt> nums;
    nums.reserve(steps + 1);
    BigInt cumulative = 0;
    for (std::size_t i = 0; i < steps; ++i) {
        cumulative += q[i];
        nums.push_back(std::min(BigInt(2 * cumulative), denominator));
    }
    nums.push_back(denominator);

    std::sort(nums.begin(), nums.end());
    nums.erase(std::unique(nums.begin(), nums.end()), nums.end());
    return {std::move(nums), denominator};
}

} // namespace wy
