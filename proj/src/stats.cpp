#include "trailmark/stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "trailmark/error.hpp"

namespace trailmark::stats {

int collapse_11_to_5(int s11) {
    if (s11 < -5 || s11 > 5) fail("OutOfRange", "11-point score " + std::to_string(s11) + " outside -5..+5");
    if (s11 <= -4) return -2;
    if (s11 <= -2) return -1;
    if (s11 <= 1) return 0;
    if (s11 <= 3) return 1;
    return 2;
}

SignClass collapse_5_to_sign(int s5) {
    if (s5 < -2 || s5 > 2) fail("OutOfRange", "5-point score " + std::to_string(s5) + " outside -2..+2");
    if (s5 < 0) return SignClass::minus;
    if (s5 > 0) return SignClass::plus;
    return SignClass::zero;
}

std::optional<SignClass> try_majority_vote(const std::array<SignClass, 3>& signs) {
    for (SignClass c : {SignClass::minus, SignClass::zero, SignClass::plus}) {
        int votes = 0;
        for (SignClass s : signs)
            if (s == c) ++votes;
        if (votes >= 2) return c;
    }
    return std::nullopt;
}

SignClass majority_vote(const std::array<SignClass, 3>& signs) {
    auto m = try_majority_vote(signs);
    if (!m) fail("NoMajority", "all three rater signs differ");
    return *m;
}

double percent_agreement(const std::vector<std::array<SignClass, 3>>& panel) {
    if (panel.empty()) fail("EmptyInput", "agreement needs at least one subject");
    double total = 0.0;
    for (const auto& s : panel) {
        int pairs = 0;
        if (s[0] == s[1]) ++pairs;
        if (s[0] == s[2]) ++pairs;
        if (s[1] == s[2]) ++pairs;
        total += pairs / 3.0;
    }
    return total / static_cast<double>(panel.size());
}

double free_marginal_kappa(double observed_agreement, int q) {
    if (q < 2) fail("OutOfRange", "kappa needs at least 2 categories");
    if (observed_agreement < 0.0 || observed_agreement > 1.0)
        fail("OutOfRange", "observed agreement outside [0,1]");
    const double chance = 1.0 / q;
    return (observed_agreement - chance) / (1.0 - chance);
}

double median(std::vector<double> values) {
    if (values.empty()) fail("EmptyInput", "median of empty sample");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    if (n % 2 == 1) return values[n / 2];
    return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

namespace {

// Midranks of the pooled sample; also returns tie-group sizes.
void pooled_ranks(std::span<const double> a, std::span<const double> b,
                  std::vector<double>& ranks, std::vector<std::size_t>& tie_sizes) {
    const std::size_t n = a.size() + b.size();
    std::vector<double> pooled;
    pooled.reserve(n);
    pooled.insert(pooled.end(), a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return pooled[i] < pooled[j]; });

    ranks.assign(n, 0.0);
    tie_sizes.clear();
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && pooled[order[j + 1]] == pooled[order[i]]) ++j;
        const double midrank = 0.5 * static_cast<double>(i + 1 + j + 1);
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = midrank;
        tie_sizes.push_back(j - i + 1);
        i = j + 1;
    }
}

double u_from_ranks(const std::vector<double>& ranks, const std::vector<std::size_t>& subset,
                    std::size_t n1) {
    double rank_sum = 0.0;
    for (std::size_t idx : subset) rank_sum += ranks[idx];
    return rank_sum - static_cast<double>(n1) * (static_cast<double>(n1) + 1.0) / 2.0;
}

// Counts assignments of n1 pooled indices whose |U - mean| >= |observed|.
void enumerate_tail(const std::vector<double>& ranks, std::size_t n, std::size_t n1,
                    double dev, std::vector<std::size_t>& subset, std::size_t start,
                    long& favorable, long& total) {
    if (subset.size() == n1) {
        ++total;
        const double u = u_from_ranks(ranks, subset, n1);
        const double mean = static_cast<double>(n1) * static_cast<double>(n - n1) / 2.0;
        if (std::abs(u - mean) >= dev - 1e-12) ++favorable;
        return;
    }
    const std::size_t remaining = n1 - subset.size();
    for (std::size_t i = start; i + remaining <= n; ++i) {
        subset.push_back(i);
        enumerate_tail(ranks, n, n1, dev, subset, i + 1, favorable, total);
        subset.pop_back();
    }
}

double normal_sf(double x) {  // P(Z > x)
    return 0.5 * std::erfc(x / std::sqrt(2.0));
}

}  // namespace

UTestResult mann_whitney(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) fail("EmptyInput", "both samples must be nonempty");
    const std::size_t n1 = a.size(), n2 = b.size(), n = n1 + n2;

    bool all_equal = true;
    for (double v : a)
        if (v != a[0]) all_equal = false;
    for (double v : b)
        if (v != a[0]) all_equal = false;
    if (all_equal) fail("DegenerateData", "all values tied; U test undefined");

    std::vector<double> ranks;
    std::vector<std::size_t> tie_sizes;
    pooled_ranks(a, b, ranks, tie_sizes);

    double rank_sum_a = 0.0;
    for (std::size_t i = 0; i < n1; ++i) rank_sum_a += ranks[i];
    const double u = rank_sum_a - static_cast<double>(n1) * (static_cast<double>(n1) + 1.0) / 2.0;

    const double prod = static_cast<double>(n1) * static_cast<double>(n2);
    const double mean = prod / 2.0;

    double tie_term = 0.0;
    for (std::size_t t : tie_sizes) {
        const double td = static_cast<double>(t);
        tie_term += td * td * td - td;
    }
    const double nd = static_cast<double>(n);
    const double var = prod / 12.0 * ((nd + 1.0) - tie_term / (nd * (nd - 1.0)));
    if (var <= 0.0) fail("DegenerateData", "tie-corrected variance is zero");

    UTestResult res;
    res.u = u;
    res.z = (u - mean) / std::sqrt(var);

    if (n <= 12) {
        long favorable = 0, total = 0;
        std::vector<std::size_t> subset;
        enumerate_tail(ranks, n, n1, std::abs(u - mean), subset, 0, favorable, total);
        res.p_two_sided = static_cast<double>(favorable) / static_cast<double>(total);
        res.method = UTestResult::Method::exact;
    } else {
        res.p_two_sided = std::min(1.0, 2.0 * normal_sf(std::abs(res.z)));
        res.method = UTestResult::Method::normal;
    }
    return res;
}

CrossTab cross_tab(const std::vector<int>& assignments, const std::vector<SignClass>& labels) {
    if (assignments.size() != labels.size())
        fail("LengthMismatch", "assignments and labels differ in length");

    CrossTab tab;
    for (int c : assignments)
        if (std::find(tab.cluster_labels.begin(), tab.cluster_labels.end(), c) == tab.cluster_labels.end())
            tab.cluster_labels.push_back(c);
    std::sort(tab.cluster_labels.begin(), tab.cluster_labels.end());
    for (SignClass s : {SignClass::minus, SignClass::zero, SignClass::plus})
        if (std::find(labels.begin(), labels.end(), s) != labels.end()) tab.sign_labels.push_back(s);

    tab.counts.assign(tab.cluster_labels.size(), std::vector<long>(tab.sign_labels.size(), 0));
    for (std::size_t i = 0; i < assignments.size(); ++i) {
        const auto row = static_cast<std::size_t>(
            std::find(tab.cluster_labels.begin(), tab.cluster_labels.end(), assignments[i]) -
            tab.cluster_labels.begin());
        const auto col = static_cast<std::size_t>(
            std::find(tab.sign_labels.begin(), tab.sign_labels.end(), labels[i]) -
            tab.sign_labels.begin());
        ++tab.counts[row][col];
        ++tab.total;
    }

    long majority_sum = 0;
    for (const auto& row : tab.counts)
        majority_sum += *std::max_element(row.begin(), row.end());
    tab.purity = tab.total > 0 ? static_cast<double>(majority_sum) / static_cast<double>(tab.total) : 0.0;
    return tab;
}

}  // namespace trailmark::stats
