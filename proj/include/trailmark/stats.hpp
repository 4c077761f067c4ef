#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "trailmark/types.hpp"

namespace trailmark::stats {

// 11-point expert scale (-5..+5) collapsed to the 5-point scale (-2..+2):
// -5,-4 -> -2; -3,-2 -> -1; -1,0,+1 -> 0; +2,+3 -> +1; +4,+5 -> +2.
int collapse_11_to_5(int s11);

// 5-point score collapsed to its sign class.
SignClass collapse_5_to_sign(int s5);

// Majority (two of three) sign; empty when all three differ.
std::optional<SignClass> try_majority_vote(const std::array<SignClass, 3>& signs);

// As above but throws NoMajority.
SignClass majority_vote(const std::array<SignClass, 3>& signs);

// Mean over subjects of (agreeing rater pairs) / 3.
double percent_agreement(const std::vector<std::array<SignClass, 3>>& panel);

// Free-marginal multi-rater kappa: (Po - 1/q) / (1 - 1/q).
double free_marginal_kappa(double observed_agreement, int q);

struct UTestResult {
    double u = 0.0;            // U statistic of the first sample (ties count 0.5)
    double z = 0.0;            // normal approximation with tie correction
    double p_two_sided = 1.0;
    enum class Method { exact, normal } method = Method::normal;
};

// Rank-sum test. Exact two-sided p by full enumeration when n1+n2 <= 12,
// otherwise the tie-corrected normal approximation (no continuity
// correction). Throws DegenerateData when every value is identical.
UTestResult mann_whitney(std::span<const double> a, std::span<const double> b);

struct CrossTab {
    std::vector<int> cluster_labels;          // row order
    std::vector<SignClass> sign_labels;       // column order
    std::vector<std::vector<long>> counts;    // rows: clusters, cols: signs
    long total = 0;
    double purity = 0.0;                      // sum of per-cluster max cells / total
};

// Contingency counts of cluster assignment vs sign class, aligned by index.
CrossTab cross_tab(const std::vector<int>& assignments, const std::vector<SignClass>& labels);

double median(std::vector<double> values);

}  // namespace trailmark::stats
