#include "wy/partition_count.hpp"

namespace wy {

// dp[a][j] = partitions of j into at most a parts, each part <= b, built by
// sweeping the part bound b upward: f(j; a, b) = f(j; a, b-1) + f(j-b; a-1, b).
std::vector<BigInt> partition_count_table(std::size_t n, std::size_t j_max) {
    const std::size_t a_max = n;
    std::vector<std::vector<BigInt>> dp(a_max + 1, std::vector<BigInt>(j_max + 1, 0));
    for (std::size_t a = 0; a <= a_max; ++a) dp[a][0] = 1;

    for (std::size_t b = 1; b <= n; ++b) {
        for (std::size_t a = 1; a <= a_max; ++a) {
            for (std::size_t j = b; j <= j_max; ++j) {
                dp[a][j] += dp[a - 1][j - b];
            }
        }
    }
    return dp[a_max];
}

BigInt partition_count(std::size_t n, std::size_t j) {
    if (j == 0) return 1;
    if (n == 0) return 0;
    return partition_count_table(n, j)[j];
}

} // namespace wy
